//! Association probabilities and per-realization user-to-BS assignment.
//!
//! Under decoupled access (DA) the uplink goes to the nearest BS of either
//! tier. Under coupled access (CA) a user picks the BS with the larger
//! average downlink received power, which reduces to `r_S >= C * r_M` for a
//! threshold constant `C` that depends on powers, antennas and expected
//! loads. Ties go to the macro tier in both rules.

use crate::config::{AccessMode, NetworkConfig, Tier};
use crate::error::{invalid, Error, Result};
use crate::geometry::{nearest, Deployment, Nearest};

/// Residual below which the coupled fixed point is accepted.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-10;
const DAMPING: f64 = 0.5;
const MAX_ITERATIONS: usize = 1000;

/// User counts around a tagged macro cell.
///
/// `k_mn[m][n]` is the number of users whose nearest MBS is `m` and whose
/// nearest SBS is `n`. Row `tagged_m` belongs to the tagged MBS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSpec {
    pub m_mbs: usize,
    pub n_sbs: usize,
    pub k_mn: Vec<Vec<usize>>,
    pub tagged_m: usize,
}

impl ClusterSpec {
    pub fn new(k_mn: Vec<Vec<usize>>, tagged_m: usize) -> Result<Self> {
        let m_mbs = k_mn.len();
        if m_mbs == 0 {
            return Err(invalid("k_mn", "cluster needs at least one MBS row"));
        }
        let n_sbs = k_mn[0].len();
        if n_sbs == 0 || k_mn.iter().any(|row| row.len() != n_sbs) {
            return Err(invalid("k_mn", "rows must be nonempty and of equal length"));
        }
        if tagged_m >= m_mbs {
            return Err(invalid("tagged_m", format!("index {tagged_m} out of {m_mbs} rows")));
        }
        Ok(ClusterSpec {
            m_mbs,
            n_sbs,
            k_mn,
            tagged_m,
        })
    }

    /// Deterministic cluster for the analytic curves: one macro cell with
    /// `N = max(1, round(lambda_s / lambda_m))` SBS groups sharing
    /// `K = round(lambda_u / lambda_m)` users as evenly as possible, the
    /// remainder going to the lowest group indices.
    pub fn from_config(cfg: &NetworkConfig) -> Self {
        let n = ((cfg.lambda_s / cfg.lambda_m).round() as usize).max(1);
        let k = (cfg.lambda_u / cfg.lambda_m).round() as usize;
        let row = (0..n).map(|i| k / n + usize::from(i < k % n)).collect();
        ClusterSpec {
            m_mbs: 1,
            n_sbs: n,
            k_mn: vec![row],
            tagged_m: 0,
        }
    }

    /// One user shared by one MBS and one SBS.
    pub fn single_user() -> Self {
        ClusterSpec {
            m_mbs: 1,
            n_sbs: 1,
            k_mn: vec![vec![1]],
            tagged_m: 0,
        }
    }

    /// Users per group in the tagged macro cell.
    pub fn tagged_row(&self) -> &[usize] {
        &self.k_mn[self.tagged_m]
    }

    /// `K_M`: users whose nearest MBS is the tagged one.
    pub fn k_macro(&self) -> usize {
        self.tagged_row().iter().sum()
    }

    /// `K_S` for SBS group `n`.
    pub fn k_small(&self, n: usize) -> usize {
        self.k_mn.iter().map(|row| row[n]).sum()
    }

    /// Number of association cases in the tagged row.
    pub fn case_count(&self) -> f64 {
        self.tagged_row().iter().map(|&k| k as f64 + 1.0).product()
    }

    /// One line describing the cluster, for output metadata.
    pub fn describe(&self) -> String {
        let rows: Vec<String> = self
            .k_mn
            .iter()
            .map(|r| r.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" "))
            .collect();
        format!("M={} N={} tagged={} K=[{}]", self.m_mbs, self.n_sbs, self.tagged_m, rows.join("; "))
    }
}

/// Uplink DA probabilities `(A_M, A_S)`. They depend only on the density ratio.
pub fn da_probabilities(cfg: &NetworkConfig) -> (f64, f64) {
    let a_m = 1.0 / (1.0 + cfg.lambda_s / cfg.lambda_m);
    (a_m, 1.0 - a_m)
}

/// CA threshold constant `C` for expected downlink loads `k_m`, `k_s`.
pub fn threshold_constant(cfg: &NetworkConfig, k_m: f64, k_s: f64) -> Result<f64> {
    let free_m = cfg.l_m as f64 - k_m + 1.0;
    let free_s = cfg.l_s as f64 - k_s + 1.0;
    if k_m > cfg.l_m as f64 || k_s > cfg.l_s as f64 {
        return Err(Error::Infeasible(format!(
            "expected downlink loads exceed antennas (K_M={k_m:.4} of {}, K_S={k_s:.4} of {})",
            cfg.l_m, cfg.l_s
        )));
    }
    let ratio = k_m * cfg.p_s * free_s / (k_s * cfg.p_m * free_m);
    Ok(ratio.powf(1.0 / cfg.alpha))
}

/// MBS association probability under CA for a given threshold constant.
pub fn ca_macro_probability(cfg: &NetworkConfig, c: f64) -> f64 {
    1.0 / (1.0 + c * c * cfg.lambda_s / cfg.lambda_m)
}

/// Association probabilities for both modes.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationProbabilities {
    pub a_m_ul_da: f64,
    pub a_s_ul_da: f64,
    /// `A_M` under CA, indexed `[m][n]`.
    pub a_m_ca: Vec<Vec<f64>>,
    pub a_s_ca: Vec<Vec<f64>>,
    pub c_mn: Vec<Vec<f64>>,
    /// Expected downlink loads seen by a user in cell `(m, n)`.
    pub k_m_dl: Vec<Vec<f64>>,
    pub k_s_dl: Vec<Vec<f64>>,
    pub residual: f64,
    pub iterations: usize,
}

impl AssociationProbabilities {
    /// User-weighted mean of `C` over the tagged row. Used as the single
    /// threshold when assigning users in a sampled deployment.
    pub fn tagged_threshold(&self, cluster: &ClusterSpec) -> f64 {
        let row = cluster.tagged_row();
        let total: usize = row.iter().sum();
        let c = &self.c_mn[cluster.tagged_m];
        if total == 0 {
            return c.iter().sum::<f64>() / c.len() as f64;
        }
        row.iter().zip(c).map(|(&k, &c)| k as f64 * c).sum::<f64>() / total as f64
    }
}

/// Expected downlink loads `(K_M, K_S)` seen by a user in cell `(m, n)`.
/// The user itself counts once; its `K_{m,n} - 1` cell mates split by `A`.
fn expected_loads(cluster: &ClusterSpec, a: &[Vec<f64>], m: usize, n: usize) -> (f64, f64) {
    let k = &cluster.k_mn;
    let mates = k[m][n].saturating_sub(1) as f64;
    let mut k_m = mates * a[m][n] + 1.0;
    for i in 0..cluster.n_sbs {
        if i != n {
            k_m += k[m][i] as f64 * a[m][i];
        }
    }
    let mut k_s = mates * (1.0 - a[m][n]) + 1.0;
    for j in 0..cluster.m_mbs {
        if j != m {
            k_s += k[j][n] as f64 * (1.0 - a[j][n]);
        }
    }
    (k_m, k_s)
}

fn step(cfg: &NetworkConfig, cluster: &ClusterSpec, a: &[Vec<f64>], m: usize, n: usize) -> Result<f64> {
    let (k_m, k_s) = expected_loads(cluster, a, m, n);
    Ok(ca_macro_probability(cfg, threshold_constant(cfg, k_m, k_s)?))
}

fn max_residual(cfg: &NetworkConfig, cluster: &ClusterSpec, a: &[Vec<f64>]) -> Result<f64> {
    let mut worst = 0.0f64;
    for m in 0..cluster.m_mbs {
        for n in 0..cluster.n_sbs {
            worst = worst.max((step(cfg, cluster, a, m, n)? - a[m][n]).abs());
        }
    }
    Ok(worst)
}

/// Solve the coupled association equations for every cell of the cluster.
///
/// Damped Jacobi iteration first; if it stalls, nonlinear Gauss-Seidel with
/// per-coordinate bisection. Each scalar residual is decreasing in its own
/// coordinate, so bisection always brackets the root.
pub fn ca_fixed_point(cfg: &NetworkConfig, cluster: &ClusterSpec) -> Result<AssociationProbabilities> {
    cfg.validate()?;
    let (a_da, _) = da_probabilities(cfg);
    let (mm, nn) = (cluster.m_mbs, cluster.n_sbs);
    let mut a = vec![vec![a_da; nn]; mm];
    let mut iterations = 0;
    let mut residual: f64;

    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut next = a.clone();
        residual = 0.0;
        for m in 0..mm {
            for n in 0..nn {
                let s = step(cfg, cluster, &a, m, n)?;
                residual = f64::max(residual, (s - a[m][n]).abs());
                next[m][n] = (1.0 - DAMPING) * a[m][n] + DAMPING * s;
            }
        }
        a = next;
        if residual < 1e-14 {
            break;
        }
    }
    residual = max_residual(cfg, cluster, &a)?;

    if residual >= FIXED_POINT_TOLERANCE {
        for _ in 0..MAX_ITERATIONS {
            iterations += 1;
            let mut moved = 0.0f64;
            for m in 0..mm {
                for n in 0..nn {
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        a[m][n] = mid;
                        if step(cfg, cluster, &a, m, n)? > mid {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let root = 0.5 * (lo + hi);
                    moved = moved.max((root - a[m][n]).abs());
                    a[m][n] = root;
                }
            }
            residual = max_residual(cfg, cluster, &a)?;
            if residual < FIXED_POINT_TOLERANCE || moved < 1e-15 {
                break;
            }
        }
    }
    if residual >= FIXED_POINT_TOLERANCE {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }

    let mut c_mn = vec![vec![0.0; nn]; mm];
    let mut k_m_dl = vec![vec![0.0; nn]; mm];
    let mut k_s_dl = vec![vec![0.0; nn]; mm];
    for m in 0..mm {
        for n in 0..nn {
            let (km, ks) = expected_loads(cluster, &a, m, n);
            k_m_dl[m][n] = km;
            k_s_dl[m][n] = ks;
            c_mn[m][n] = threshold_constant(cfg, km, ks)?;
        }
    }
    let a_s_ca = a.iter().map(|row| row.iter().map(|x| 1.0 - x).collect()).collect();
    let (a_m_ul_da, a_s_ul_da) = da_probabilities(cfg);
    Ok(AssociationProbabilities {
        a_m_ul_da,
        a_s_ul_da,
        a_m_ca: a,
        a_s_ca,
        c_mn,
        k_m_dl,
        k_s_dl,
        residual,
        iterations,
    })
}

/// Per-realization association rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AssociationRule {
    Decoupled,
    /// Join the MBS iff `r_S >= c * r_M`.
    Coupled { c: f64 },
}

impl AssociationRule {
    pub fn for_mode(mode: AccessMode, probs: &AssociationProbabilities, cluster: &ClusterSpec) -> Self {
        match mode {
            AccessMode::Decoupled => AssociationRule::Decoupled,
            AccessMode::Coupled => AssociationRule::Coupled {
                c: probs.tagged_threshold(cluster),
            },
        }
    }

    pub fn mode(&self) -> AccessMode {
        match self {
            AssociationRule::Decoupled => AccessMode::Decoupled,
            AssociationRule::Coupled { .. } => AccessMode::Coupled,
        }
    }

    /// Tier chosen by a user at distances `r_m`, `r_s` from the nearest BS
    /// of each tier.
    pub fn choose(&self, r_m: f64, r_s: f64) -> Tier {
        let c = match self {
            AssociationRule::Decoupled => 1.0,
            AssociationRule::Coupled { c } => *c,
        };
        if r_s >= c * r_m {
            Tier::Macro
        } else {
            Tier::Small
        }
    }
}

/// One user's nearest BSs and its serving tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserLink {
    pub nearest_mbs: Nearest,
    pub nearest_sbs: Nearest,
    pub serving: Tier,
}

impl UserLink {
    pub fn nearest(&self, tier: Tier) -> Nearest {
        match tier {
            Tier::Macro => self.nearest_mbs,
            Tier::Small => self.nearest_sbs,
        }
    }

    /// Index of the serving BS within its tier.
    pub fn serving_index(&self) -> usize {
        self.nearest(self.serving).index
    }

    pub fn serving_distance(&self) -> f64 {
        self.nearest(self.serving).distance
    }
}

/// Assignment of every user of a deployment under one rule.
#[derive(Debug, Clone)]
pub struct AssociationState {
    pub mode: AccessMode,
    pub links: Vec<UserLink>,
    pub mbs_load: Vec<usize>,
    pub sbs_load: Vec<usize>,
}

impl AssociationState {
    pub fn load(&self, tier: Tier, bs: usize) -> usize {
        match tier {
            Tier::Macro => self.mbs_load[bs],
            Tier::Small => self.sbs_load[bs],
        }
    }

    pub fn served_by(&self, tier: Tier, bs: usize) -> Vec<usize> {
        self.links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.serving == tier && l.serving_index() == bs)
            .map(|(i, _)| i)
            .collect()
    }

    /// Users whose nearest `tier` BS is `bs` but who are served by the other
    /// tier (the cross-association count `kappa`).
    pub fn kappa(&self, tier: Tier, bs: usize) -> usize {
        self.links
            .iter()
            .filter(|l| l.nearest(tier).index == bs && l.serving != tier)
            .count()
    }

    /// Fraction of users served by the macro tier.
    pub fn macro_fraction(&self) -> f64 {
        if self.links.is_empty() {
            return f64::NAN;
        }
        let m = self.links.iter().filter(|l| l.serving == Tier::Macro).count();
        m as f64 / self.links.len() as f64
    }
}

/// Assign every user of `dep` under `rule`.
pub fn associate_users(dep: &Deployment, rule: AssociationRule) -> Result<AssociationState> {
    if dep.mbs_points.is_empty() || dep.sbs_points.is_empty() {
        return Err(Error::InvalidRealization("a tier has no base stations".into()));
    }
    let mut mbs_load = vec![0; dep.mbs_points.len()];
    let mut sbs_load = vec![0; dep.sbs_points.len()];
    let mut links = Vec::with_capacity(dep.user_points.len());
    for u in &dep.user_points {
        let nearest_mbs = nearest(u, &dep.mbs_points)?;
        let nearest_sbs = nearest(u, &dep.sbs_points)?;
        let serving = rule.choose(nearest_mbs.distance, nearest_sbs.distance);
        match serving {
            Tier::Macro => mbs_load[nearest_mbs.index] += 1,
            Tier::Small => sbs_load[nearest_sbs.index] += 1,
        }
        links.push(UserLink {
            nearest_mbs,
            nearest_sbs,
            serving,
        });
    }
    Ok(AssociationState {
        mode: rule.mode(),
        links,
        mbs_load,
        sbs_load,
    })
}
