//! Quick self-tests of the analytic identities the bounds rely on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::association::{ca_fixed_point, da_probabilities, threshold_constant, ClusterSpec};
use crate::bounds::{gamma_ca_counts, gamma_da, se_lower_ca_m, se_lower_ca_s, se_lower_da, se_lower_da_ei, system_se_da};
use crate::config::{NetworkConfig, Tier};
use crate::error::Result;
use crate::mimo::{erlang_mean_check, wishart_trace_mean};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome { name, passed, detail }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Run every self-test at `cfg`. `trials` sets the Monte Carlo size of the
/// channel-statistics checks.
pub fn run_checks(cfg: &NetworkConfig, trials: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    cfg.validate()?;
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = 4.0 / (trials as f64).sqrt();

    let (l, k) = (8, 4);
    let erlang = erlang_mean_check(l, k, trials, &mut rng)?;
    let want = (l - k + 1) as f64;
    out.push(outcome(
        "zf-gain-mean",
        relative(erlang, want) < tol,
        format!("E[1/[(HH^H)^-1]_kk] = {erlang:.4}, expected {want} (L={l}, K={k})"),
    ));

    let wishart = wishart_trace_mean(l, k, trials, &mut rng)?;
    let want = k as f64 / (l - k) as f64;
    out.push(outcome(
        "inverse-wishart-trace",
        relative(wishart, want) < 2.0 * tol,
        format!("E[tr((G^H G)^-1)] = {wishart:.4}, expected {want}"),
    ));

    if cfg.alpha == 4.0 {
        let mut worst: f64 = 0.0;
        for tier in [Tier::Macro, Tier::Small] {
            for served in [1.0, 5.0] {
                let g = gamma_da(cfg, served, 2.0, tier)?;
                let q = se_lower_da(cfg, &g)?.se_lower;
                let e = se_lower_da_ei(cfg, &g)?.se_lower;
                worst = worst.max(relative(e, q));
            }
        }
        out.push(outcome(
            "ei-closed-form",
            worst < 1e-6,
            format!("largest relative gap to quadrature {worst:.2e}"),
        ));
    }

    let mut worst: f64 = 0.0;
    for tier in [Tier::Macro, Tier::Small] {
        let da = se_lower_da(cfg, &gamma_da(cfg, 3.0, 2.0, tier)?)?.se_lower;
        let g = gamma_ca_counts(cfg, 3.0, 2.0, 1.0, tier)?;
        let ca = match tier {
            Tier::Macro => se_lower_ca_m(cfg, &g)?,
            Tier::Small => se_lower_ca_s(cfg, &g)?,
        }
        .se_lower;
        worst = worst.max(relative(ca, da));
    }
    out.push(outcome(
        "homogeneous-collapse",
        worst < 1e-8,
        format!("CA bound at C = 1 vs DA bound, largest relative gap {worst:.2e}"),
    ));

    let balanced = NetworkConfig {
        p_s: cfg.p_m * cfg.l_m as f64 / cfg.l_s as f64,
        ..*cfg
    };
    let single = ClusterSpec::single_user();
    let probs = ca_fixed_point(&balanced, &single)?;
    let (a_da, _) = da_probabilities(&balanced);
    let gap = (probs.a_m_ca[0][0] - a_da).abs();
    out.push(outcome(
        "balanced-power-coupling",
        gap < 1e-8,
        format!("P_S L_S = P_M L_M: CA macro probability {:.10} vs DA {a_da:.10}", probs.a_m_ca[0][0]),
    ));

    let c = threshold_constant(cfg, 1.0, 1.0)?;
    let want = (cfg.p_s * cfg.l_s as f64 / (cfg.p_m * cfg.l_m as f64)).powf(1.0 / cfg.alpha);
    let got = ca_fixed_point(cfg, &single)?.c_mn[0][0];
    out.push(outcome(
        "single-user-threshold",
        relative(got, want) < 1e-12 && relative(c, want) < 1e-12,
        format!("C = {got:.12}, closed form {want:.12}"),
    ));

    let cluster = ClusterSpec::from_config(cfg);
    let a = system_se_da(cfg, &cluster)?.se;
    let b = system_se_da(&NetworkConfig { p_m: cfg.p_m * 7.0, ..*cfg }, &cluster)?.se;
    out.push(outcome(
        "da-power-invariance",
        a.to_bits() == b.to_bits(),
        format!("DA system bound {a} at P_M, {b} at 7 P_M"),
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_pass_at_defaults() {
        for c in run_checks(&NetworkConfig::default(), 4000, 3).unwrap() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
