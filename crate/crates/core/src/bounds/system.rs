//! Lower bounds averaged over every association case of the tagged cell.
//!
//! Each SBS group `n` of the tagged macro cell holds `K_n` users; the number
//! served by the MBS is binomial with the tier's association probability,
//! independently per group. Cases where some BS would serve at least as many
//! users as it has antennas are excluded and the remaining mass renormalized.

use std::collections::HashMap;

use crate::association::{ca_fixed_point, da_probabilities, ClusterSpec};
use crate::config::{NetworkConfig, Tier};
use crate::error::{Error, Result};

use super::{
    gamma_ca_with, gamma_da_with, se_lower_ca_m, se_lower_ca_s, se_lower_da, single_user_gamma,
    CaKernels, DaKernels,
};

/// Largest number of enumerated cases.
pub const ENUMERATION_LIMIT: f64 = 1e6;

/// System-level bound of the tagged macro cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemBound {
    /// Per-user average over users whose nearest MBS is the tagged one.
    pub se: f64,
    /// Contribution of MBS-served users to `se`.
    pub mbs_part: f64,
    /// Contribution of SBS-served users to `se`.
    pub sbs_part: f64,
    /// Probability mass of cases dropped for exceeding the ZF limit.
    pub excluded_mass: f64,
    pub cases: usize,
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Walk every count vector `0 <= k_n <= K_n`. `eval` returns the summed
/// `(MBS, SBS)` spectral efficiency of the case, or `None` if infeasible.
fn enumerate<F>(cluster: &ClusterSpec, a_m: &[f64], mut eval: F) -> Result<SystemBound>
where
    F: FnMut(&[usize]) -> Result<Option<(f64, f64)>>,
{
    let cases = cluster.case_count();
    if cases > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            cases,
            limit: ENUMERATION_LIMIT,
        });
    }
    let row = cluster.tagged_row();
    let k_total = cluster.k_macro();
    if k_total == 0 {
        return Ok(SystemBound {
            se: 0.0,
            mbs_part: 0.0,
            sbs_part: 0.0,
            excluded_mass: 0.0,
            cases: 1,
        });
    }
    let mut k = vec![0usize; row.len()];
    let (mut mass, mut sum_m, mut sum_s) = (0.0, 0.0, 0.0);
    let mut count = 0;
    loop {
        count += 1;
        let w: f64 = row
            .iter()
            .zip(&k)
            .zip(a_m)
            .map(|((&kn, &km), &a)| binomial(kn, km) * a.powi(km as i32) * (1.0 - a).powi((kn - km) as i32))
            .product();
        if let Some((m, s)) = eval(&k)? {
            mass += w;
            sum_m += w * m;
            sum_s += w * s;
        }
        // Mixed-radix increment.
        let mut i = 0;
        while i < k.len() {
            if k[i] < row[i] {
                k[i] += 1;
                break;
            }
            k[i] = 0;
            i += 1;
        }
        if i == k.len() {
            break;
        }
    }
    if mass <= 0.0 {
        return Err(Error::Infeasible(
            "every association case exceeds the antenna limits".into(),
        ));
    }
    let kt = k_total as f64;
    let (mbs_part, sbs_part) = (sum_m / mass / kt, sum_s / mass / kt);
    Ok(SystemBound {
        se: mbs_part + sbs_part,
        mbs_part,
        sbs_part,
        excluded_mass: (1.0 - mass).max(0.0),
        cases: count,
    })
}

type Key = (Tier, u64, u64, u64);

fn key(tier: Tier, served: f64, kappa: f64, c: f64) -> Key {
    (tier, served.to_bits(), kappa.to_bits(), c.to_bits())
}

/// Expected SBS load contributed by users of other macro cells.
fn foreign_sbs_load(cluster: &ClusterSpec, a_s: impl Fn(usize, usize) -> f64, n: usize) -> f64 {
    (0..cluster.m_mbs)
        .filter(|&j| j != cluster.tagged_m)
        .map(|j| cluster.k_mn[j][n] as f64 * a_s(j, n))
        .sum()
}

/// DA lower bound averaged over association cases.
pub fn system_se_da(cfg: &NetworkConfig, cluster: &ClusterSpec) -> Result<SystemBound> {
    let kern = DaKernels::new(cfg)?;
    let (a_m, a_s) = da_probabilities(cfg);
    let row = cluster.tagged_row().to_vec();
    let foreign: Vec<f64> = (0..cluster.n_sbs)
        .map(|n| foreign_sbs_load(cluster, |_, _| a_s, n))
        .collect();
    let mut memo: HashMap<Key, f64> = HashMap::new();
    let mut se = |tier: Tier, served: f64, kappa: f64| -> Result<f64> {
        let k = key(tier, served, kappa, 1.0);
        if let Some(v) = memo.get(&k) {
            return Ok(*v);
        }
        let g = gamma_da_with(cfg, &kern, served, kappa, tier)?;
        let v = se_lower_da(cfg, &g)?.se_lower;
        memo.insert(k, v);
        Ok(v)
    };
    let (l_m, l_s) = (cfg.l_m as f64, cfg.l_s as f64);
    let probs = vec![a_m; row.len()];
    enumerate(cluster, &probs, |k| {
        let km: usize = k.iter().sum();
        let kappa_m: usize = row.iter().zip(k).map(|(a, b)| a - b).sum();
        if km > 0 && km as f64 >= l_m {
            return Ok(None);
        }
        for n in 0..row.len() {
            let ks = row[n] - k[n];
            if ks > 0 && ks as f64 + foreign[n] >= l_s {
                return Ok(None);
            }
        }
        let mut m_sum = 0.0;
        if km > 0 {
            m_sum = km as f64 * se(Tier::Macro, km as f64, kappa_m as f64)?;
        }
        let mut s_sum = 0.0;
        for n in 0..row.len() {
            let ks = row[n] - k[n];
            if ks > 0 {
                s_sum += ks as f64 * se(Tier::Small, ks as f64 + foreign[n], k[n] as f64)?;
            }
        }
        Ok(Some((m_sum, s_sum)))
    })
}

/// CA lower bound averaged over association cases, with per-group
/// probabilities and thresholds from the coupled fixed point.
pub fn system_se_ca(cfg: &NetworkConfig, cluster: &ClusterSpec) -> Result<SystemBound> {
    let probs = ca_fixed_point(cfg, cluster)?;
    let da = DaKernels::new(cfg)?;
    let m = cluster.tagged_m;
    let row = cluster.tagged_row().to_vec();
    let c_n = probs.c_mn[m].clone();
    let mut kernels: HashMap<u64, CaKernels> = HashMap::new();
    for &c in &c_n {
        if let std::collections::hash_map::Entry::Vacant(e) = kernels.entry(c.to_bits()) {
            e.insert(CaKernels::new(cfg, c)?);
        }
    }
    let foreign: Vec<f64> = (0..cluster.n_sbs)
        .map(|n| foreign_sbs_load(cluster, |j, n| probs.a_s_ca[j][n], n))
        .collect();
    let mut memo: HashMap<Key, f64> = HashMap::new();
    let mut se = |tier: Tier, served: f64, kappa: f64, c: f64| -> Result<f64> {
        let k = key(tier, served, kappa, c);
        if let Some(v) = memo.get(&k) {
            return Ok(*v);
        }
        let g = gamma_ca_with(cfg, &da, &kernels[&c.to_bits()], served, kappa, tier)?;
        let v = match tier {
            Tier::Macro => se_lower_ca_m(cfg, &g)?,
            Tier::Small => se_lower_ca_s(cfg, &g)?,
        }
        .se_lower;
        memo.insert(k, v);
        Ok(v)
    };
    let (l_m, l_s) = (cfg.l_m as f64, cfg.l_s as f64);
    enumerate(cluster, &probs.a_m_ca[m], |k| {
        let km: usize = k.iter().sum();
        let kappa_m: usize = row.iter().zip(k).map(|(a, b)| a - b).sum();
        if km > 0 && km as f64 >= l_m {
            return Ok(None);
        }
        for n in 0..row.len() {
            let ks = row[n] - k[n];
            if ks > 0 && ks as f64 + foreign[n] >= l_s {
                return Ok(None);
            }
        }
        let (mut m_sum, mut s_sum) = (0.0, 0.0);
        for n in 0..row.len() {
            if k[n] > 0 {
                m_sum += k[n] as f64 * se(Tier::Macro, km as f64, kappa_m as f64, c_n[n])?;
            }
            let ks = row[n] - k[n];
            if ks > 0 {
                s_sum += ks as f64 * se(Tier::Small, ks as f64 + foreign[n], k[n] as f64, c_n[n])?;
            }
        }
        Ok(Some((m_sum, s_sum)))
    })
}

/// Single-user system bound `A_M SE_M + A_S SE_S` with the single-user
/// interference model (interferers at density `lambda_M + lambda_S`).
pub fn system_se_da_single_user(cfg: &NetworkConfig) -> Result<f64> {
    let (a_m, a_s) = da_probabilities(cfg);
    let se_m = se_lower_da(cfg, &single_user_gamma(cfg, Tier::Macro)?)?.se_lower;
    let se_s = se_lower_da(cfg, &single_user_gamma(cfg, Tier::Small)?)?.se_lower;
    Ok(a_m * se_m + a_s * se_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::gamma_da;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(10, 5), 252.0);
    }

    #[test]
    fn empty_cluster_is_zero() {
        let c = ClusterSpec::new(vec![vec![0, 0]], 0).unwrap();
        let b = system_se_da(&NetworkConfig::default(), &c).unwrap();
        assert_eq!(b.se, 0.0);
    }

    #[test]
    fn guard_rejects_huge_enumerations() {
        let c = ClusterSpec::new(vec![vec![9; 7]], 0).unwrap();
        assert!(matches!(
            system_se_da(&NetworkConfig::default(), &c),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn two_groups_one_user_each_by_hand() {
        let cfg = NetworkConfig::default();
        let c = ClusterSpec::new(vec![vec![1, 1]], 0).unwrap();
        let (a, s) = da_probabilities(&cfg);
        let se = |tier, served: f64, kappa: f64| {
            se_lower_da(&cfg, &gamma_da(&cfg, served, kappa, tier).unwrap()).unwrap().se_lower
        };
        // (k1, k2) = (0,0), (1,0), (0,1), (1,1)
        let case00 = (se(Tier::Small, 1.0, 0.0) + se(Tier::Small, 1.0, 0.0)) / 2.0;
        let case10 = (se(Tier::Macro, 1.0, 1.0) + se(Tier::Small, 1.0, 0.0)) / 2.0;
        let case11 = (2.0 * se(Tier::Macro, 2.0, 0.0)) / 2.0;
        let want = s * s * case00 + 2.0 * a * s * case10 + a * a * case11;
        let got = system_se_da(&cfg, &c).unwrap();
        assert!((got.se - want).abs() < 1e-14, "{} vs {want}", got.se);
        assert_eq!(got.cases, 4);
        assert_eq!(got.excluded_mass, 0.0);
    }

    #[test]
    fn infeasible_cases_are_excluded() {
        let cfg = NetworkConfig {
            l_m: 3,
            l_s: 3,
            ..NetworkConfig::default()
        };
        let c = ClusterSpec::new(vec![vec![2, 2]], 0).unwrap();
        let b = system_se_da(&cfg, &c).unwrap();
        let (a, s) = da_probabilities(&cfg);
        // Cases with 3 or 4 macro-served users are dropped.
        let want = a.powi(4) + 4.0 * a.powi(3) * s;
        assert!((b.excluded_mass - want).abs() < 1e-15);
        assert!(b.se > 0.0);
    }
}
