//! Expected interference and spectral-efficiency lower bounds.
//!
//! All distance integrals are evaluated in the scaled variable `u = r / r_p`
//! so the relative quadrature tolerance applies to O(1) quantities. Spectral
//! efficiencies are in nats/s/Hz.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::{AccessMode, NetworkConfig, Tier};
use crate::error::{invalid, Error, Result};
use crate::expint::{e1_real, ei};
use crate::quadrature::Integrator;

fn quad() -> Integrator {
    Integrator::default()
}

fn other_density(cfg: &NetworkConfig, tier: Tier) -> f64 {
    cfg.density(tier.other())
}

/// `int_lo^hi u^{1-alpha} g(u) du`, zero for an empty range.
fn radial<F: Fn(f64) -> f64>(q: &Integrator, alpha: f64, lo: f64, hi: f64, g: F) -> Result<(f64, f64)> {
    if lo >= hi {
        return Ok((0.0, 0.0));
    }
    let r = q.integrate(|u| u.powf(1.0 - alpha) * g(u), lo, hi)?;
    Ok((r.value, r.error))
}

/// Distance integrals that do not depend on the CA threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaKernels {
    /// `rbar_M`, `rbar_S`: interference from users of other same-tier cells.
    pub rbar: [f64; 2],
    /// `rbar_{M,1}`, `rbar_{S,1}` under DA.
    pub rbar1: [f64; 2],
    pub error: f64,
}

fn tier_index(tier: Tier) -> usize {
    match tier {
        Tier::Macro => 0,
        Tier::Small => 1,
    }
}

impl DaKernels {
    pub fn new(cfg: &NetworkConfig) -> Result<Self> {
        Self::with_integrator(cfg, &quad())
    }

    pub fn with_integrator(cfg: &NetworkConfig, q: &Integrator) -> Result<Self> {
        cfg.validate()?;
        let scale = cfg.r_p.powf(2.0 - cfg.alpha);
        let top = cfg.big_r / cfg.r_p;
        let rp2 = PI * cfg.r_p * cfg.r_p;
        let mut rbar = [0.0; 2];
        let mut rbar1 = [0.0; 2];
        let mut error = 0.0;
        for tier in [Tier::Macro, Tier::Small] {
            let lv = cfg.density(tier);
            let lw = other_density(cfg, tier);
            let (xv, xw) = (lv * rp2, lw * rp2);
            let (v, e) = radial(q, cfg.alpha, 1.0, top, |u| -(-xv * (u * u - 1.0)).exp_m1())?;
            let pre = 2.0 * PI * cfg.lambda_u * (-xw - xv).exp() * scale;
            rbar[tier_index(tier)] = pre * v;
            error += pre * e;
            let (v, e) = radial(q, cfg.alpha, 1.0, top, |u| {
                (-xv * u * u - xw).exp() * -(-xw * (u * u - 1.0)).exp_m1()
            })?;
            let pre = 2.0 * PI * lv * cfg.bs_density() / lw * scale;
            rbar1[tier_index(tier)] = pre * v;
            error += pre * e;
        }
        Ok(DaKernels { rbar, rbar1, error })
    }
}

/// Cross-association kernels under CA for threshold `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaKernels {
    pub c: f64,
    /// `lambda_M + lambda_S c^2`.
    pub lambda_tilde: f64,
    pub rbar1: [f64; 2],
    pub error: f64,
}

impl CaKernels {
    pub fn new(cfg: &NetworkConfig, c: f64) -> Result<Self> {
        Self::with_integrator(cfg, c, &quad())
    }

    pub fn with_integrator(cfg: &NetworkConfig, c: f64, q: &Integrator) -> Result<Self> {
        cfg.validate()?;
        if !(c > 0.0 && c <= 1.0) {
            return Err(invalid(
                "c",
                format!("CA threshold must lie in (0, 1], got {c}; larger values are outside the analysed regime"),
            ));
        }
        let scale = cfg.r_p.powf(2.0 - cfg.alpha);
        let top = cfg.big_r / cfg.r_p;
        let rp2 = PI * cfg.r_p * cfg.r_p;
        let (xm, xs) = (cfg.lambda_m * rp2, cfg.lambda_s * rp2);
        let lt = cfg.lambda_m + cfg.lambda_s * c * c;

        let (vm, em) = radial(q, cfg.alpha, 1.0 / c, top, |u| {
            (-xm * u * u - xs).exp() * -(-xs * (c * c * u * u - 1.0)).exp_m1()
        })?;
        let pm = 2.0 * PI * lt * cfg.lambda_m / (cfg.lambda_s * c * c) * scale;

        let (vs, es) = radial(q, cfg.alpha, 1.0, top, |u| {
            (-xs * u * u - xm).exp() * -(-xm * (u * u / (c * c) - 1.0)).exp_m1()
        })?;
        let ps = 2.0 * PI * cfg.lambda_s * lt / cfg.lambda_m * scale;

        Ok(CaKernels {
            c,
            lambda_tilde: lt,
            rbar1: [pm * vm, ps * vs],
            error: pm * em + ps * es,
        })
    }
}

/// Expected interference-plus-noise after ZF scaling at a tagged BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceSummary {
    pub gamma: f64,
    pub rbar_v: f64,
    pub rbar_v1: f64,
    pub lambda_tilde: f64,
    pub tier: Tier,
    pub mode: AccessMode,
    /// Users served by the tagged BS.
    pub served: f64,
    /// Users nearest to the tagged BS but served by the other tier.
    pub kappa: f64,
    /// CA threshold constant, `None` under DA.
    pub c: Option<f64>,
    pub quad_error: f64,
}

fn free_antennas(cfg: &NetworkConfig, tier: Tier, served: f64) -> Result<f64> {
    let free = cfg.antennas(tier) as f64 - served;
    if free <= 0.0 {
        return Err(Error::Infeasible(format!(
            "{tier} serves {served} users with only {} antennas",
            cfg.antennas(tier)
        )));
    }
    Ok(free)
}

/// `gamma` under DA from precomputed kernels.
pub fn gamma_da_with(
    cfg: &NetworkConfig,
    kernels: &DaKernels,
    served: f64,
    kappa: f64,
    tier: Tier,
) -> Result<InterferenceSummary> {
    let free = free_antennas(cfg, tier, served)?;
    let i = tier_index(tier);
    let (rbar_v, rbar_v1) = (kernels.rbar[i], kernels.rbar1[i]);
    let gamma = (cfg.q * rbar_v + kappa * cfg.q * rbar_v1 + cfg.sigma2) / free;
    Ok(InterferenceSummary {
        gamma,
        rbar_v,
        rbar_v1,
        lambda_tilde: cfg.bs_density(),
        tier,
        mode: AccessMode::Decoupled,
        served,
        kappa,
        c: None,
        quad_error: kernels.error,
    })
}

/// `gamma` under DA for `served` users at the tagged BS and `kappa`
/// cross-associated users.
pub fn gamma_da(cfg: &NetworkConfig, served: f64, kappa: f64, tier: Tier) -> Result<InterferenceSummary> {
    gamma_da_with(cfg, &DaKernels::new(cfg)?, served, kappa, tier)
}

/// `gamma` under CA from precomputed kernels.
pub fn gamma_ca_with(
    cfg: &NetworkConfig,
    da: &DaKernels,
    ca: &CaKernels,
    served: f64,
    kappa: f64,
    tier: Tier,
) -> Result<InterferenceSummary> {
    let free = free_antennas(cfg, tier, served)?;
    let i = tier_index(tier);
    let (rbar_v, rbar_v1) = (da.rbar[i], ca.rbar1[i]);
    let gamma = (cfg.q * rbar_v + kappa * cfg.q * rbar_v1 + cfg.sigma2) / free;
    Ok(InterferenceSummary {
        gamma,
        rbar_v,
        rbar_v1,
        lambda_tilde: ca.lambda_tilde,
        tier,
        mode: AccessMode::Coupled,
        served,
        kappa,
        c: Some(ca.c),
        quad_error: da.error + ca.error,
    })
}

/// `gamma` under CA for explicit counts and threshold `c`.
pub fn gamma_ca_counts(
    cfg: &NetworkConfig,
    served: f64,
    kappa: f64,
    c: f64,
    tier: Tier,
) -> Result<InterferenceSummary> {
    gamma_ca_with(cfg, &DaKernels::new(cfg)?, &CaKernels::new(cfg, c)?, served, kappa, tier)
}

/// `gamma` under CA for group `group` of the tagged macro cell, with the
/// fixed point's expected counts.
pub fn gamma_ca(
    cfg: &NetworkConfig,
    cluster: &crate::association::ClusterSpec,
    probs: &crate::association::AssociationProbabilities,
    tier: Tier,
    group: usize,
) -> Result<InterferenceSummary> {
    let m = cluster.tagged_m;
    if group >= cluster.n_sbs {
        return Err(invalid("group", format!("{group} out of {} groups", cluster.n_sbs)));
    }
    let row = cluster.tagged_row();
    let c = probs.c_mn[m][group];
    let (served, kappa) = match tier {
        Tier::Macro => (
            probs.k_m_dl[m][group],
            row.iter().zip(&probs.a_s_ca[m]).map(|(&k, a)| k as f64 * a).sum(),
        ),
        Tier::Small => (probs.k_s_dl[m][group], row[group] as f64 * probs.a_m_ca[m][group]),
    };
    gamma_ca_counts(cfg, served, kappa, c, tier)
}

/// A spectral-efficiency lower bound with the inputs it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub se_lower: f64,
    pub tier: Tier,
    pub mode: AccessMode,
    pub served: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub quad_error: f64,
}

impl BoundResult {
    fn new(g: &InterferenceSummary, mode: AccessMode, value: f64, error: f64) -> Self {
        BoundResult {
            se_lower: value.max(0.0),
            tier: g.tier,
            mode,
            served: g.served,
            kappa: g.kappa,
            gamma: g.gamma,
            quad_error: error,
        }
    }
}

/// `rho(t)^2 = (Q / ((e^t - 1) gamma))^{2/alpha}`, the squared distance at
/// which the SNR-like ratio equals `e^t - 1`.
fn rho_sq(cfg: &NetworkConfig, gamma: f64, t: f64) -> f64 {
    let x = t.exp_m1();
    if x <= 0.0 {
        return f64::INFINITY;
    }
    (cfg.q / (x * gamma)).powf(2.0 / cfg.alpha)
}

/// `ln(1 + Q / (gamma d^alpha))`.
fn log_limit(cfg: &NetworkConfig, gamma: f64, d: f64) -> f64 {
    (cfg.q / (gamma * d.powf(cfg.alpha))).ln_1p()
}

/// `int_lo^hi exp(-density pi rho(t)^2) dt`.
fn t_integral(cfg: &NetworkConfig, gamma: f64, density: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if lo >= hi {
        return Ok((0.0, 0.0));
    }
    let r = quad().integrate(|t| (-density * PI * rho_sq(cfg, gamma, t)).exp(), lo, hi)?;
    Ok((r.value, r.error))
}

fn check_gamma(g: &InterferenceSummary) -> Result<()> {
    if !(g.gamma.is_finite() && g.gamma > 0.0) {
        return Err(invalid("gamma", format!("must be positive and finite, got {}", g.gamma)));
    }
    Ok(())
}

/// DA lower bound by quadrature over `t`.
pub fn se_lower_da(cfg: &NetworkConfig, g: &InterferenceSummary) -> Result<BoundResult> {
    check_gamma(g)?;
    let lam = cfg.bs_density();
    let top = log_limit(cfg, g.gamma, cfg.r_p);
    let boundary = top * (-PI * lam * cfg.r_p * cfg.r_p).exp();
    let (int, err) = t_integral(cfg, g.gamma, lam, 0.0, top)?;
    Ok(BoundResult::new(g, AccessMode::Decoupled, boundary - int, err + g.quad_error))
}

/// DA lower bound in exponential-integral form; requires `alpha == 4`.
///
/// With `a = (lambda_M + lambda_S) pi r_p^2` and
/// `b = (lambda_M + lambda_S) pi sqrt(Q / gamma)` the bound equals
/// `L e^{-a} - 2 (Re{e^{ib} Ei(-a - ib)} - Ei(-a))`.
pub fn se_lower_da_ei(cfg: &NetworkConfig, g: &InterferenceSummary) -> Result<BoundResult> {
    if cfg.alpha != 4.0 {
        return Err(invalid("alpha", format!("closed form needs alpha = 4, got {}", cfg.alpha)));
    }
    check_gamma(g)?;
    let lam = cfg.bs_density();
    let a = lam * PI * cfg.r_p * cfg.r_p;
    let b = lam * PI * (cfg.q / g.gamma).sqrt();
    let top = log_limit(cfg, g.gamma, cfg.r_p);
    let oscill = (Complex64::new(0.0, b).exp() * ei(Complex64::new(-a, -b))?).re;
    let corr = oscill + e1_real(a)?;
    let value = top * (-a).exp() - 2.0 * corr;
    Ok(BoundResult::new(g, AccessMode::Decoupled, value, g.quad_error))
}

fn threshold_of(g: &InterferenceSummary) -> Result<f64> {
    match g.c {
        Some(c) if c > 0.0 && c <= 1.0 => Ok(c),
        Some(c) => Err(invalid("c", format!("CA threshold must lie in (0, 1], got {c}"))),
        None => Err(invalid("gamma", "CA bound needs a CA interference summary")),
    }
}

/// CA lower bound for MBS-served users. The nearest-BS distribution is
/// piecewise around `r_p / C`, which splits the `t` range at `L0 <= L1`.
pub fn se_lower_ca_m(cfg: &NetworkConfig, g: &InterferenceSummary) -> Result<BoundResult> {
    check_gamma(g)?;
    let c = threshold_of(g)?;
    let lt = cfg.lambda_m + cfg.lambda_s * c * c;
    let rp = cfg.r_p;
    let l0 = log_limit(cfg, g.gamma, rp / c);
    let l1 = log_limit(cfg, g.gamma, rp);
    assert!(l0 <= l1, "L0 > L1 with C <= 1");
    let b0 = l0 * (-PI * lt * (rp / c).powi(2)).exp();
    let b1 = (l1 - l0) * (lt / cfg.lambda_m) * (-PI * cfg.bs_density() * rp * rp).exp();
    let (i0, e0) = t_integral(cfg, g.gamma, lt, 0.0, l0)?;
    let (i1, e1) = t_integral(cfg, g.gamma, cfg.lambda_m, l0, l1)?;
    let w1 = lt * (-PI * cfg.lambda_s * rp * rp).exp() / cfg.lambda_m;
    let value = b0 + b1 - i0 - w1 * i1;
    Ok(BoundResult::new(g, AccessMode::Coupled, value, e0 + w1 * e1 + g.quad_error))
}

/// CA lower bound for SBS-served users.
pub fn se_lower_ca_s(cfg: &NetworkConfig, g: &InterferenceSummary) -> Result<BoundResult> {
    check_gamma(g)?;
    let c = threshold_of(g)?;
    let dens = (cfg.lambda_m + cfg.lambda_s * c * c) / (c * c);
    let top = log_limit(cfg, g.gamma, cfg.r_p);
    let boundary = top * (-PI * dens * cfg.r_p * cfg.r_p).exp();
    let (int, err) = t_integral(cfg, g.gamma, dens, 0.0, top)?;
    Ok(BoundResult::new(g, AccessMode::Coupled, boundary - int, err + g.quad_error))
}

/// Expected interference plus noise when every BS serves at most one user
/// and interferers form a PPP of density `lambda_M + lambda_S` on
/// `[r_p, big_r]`. The `alpha = 2` case uses the logarithmic antiderivative.
pub fn single_user_interference(cfg: &NetworkConfig) -> f64 {
    let lam = cfg.bs_density();
    let a = cfg.alpha;
    let radial = if (a - 2.0).abs() < 1e-12 {
        (cfg.big_r / cfg.r_p).ln()
    } else {
        (cfg.big_r.powf(2.0 - a) - cfg.r_p.powf(2.0 - a)) / (2.0 - a)
    };
    2.0 * cfg.q * PI * lam * radial + cfg.sigma2
}

/// Single-user `gamma`: [`single_user_interference`] over `L_v - 1`.
pub fn single_user_gamma(cfg: &NetworkConfig, tier: Tier) -> Result<InterferenceSummary> {
    let free = free_antennas(cfg, tier, 1.0)?;
    Ok(InterferenceSummary {
        gamma: single_user_interference(cfg) / free,
        rbar_v: 0.0,
        rbar_v1: 0.0,
        lambda_tilde: cfg.bs_density(),
        tier,
        mode: AccessMode::Decoupled,
        served: 1.0,
        kappa: 0.0,
        c: None,
        quad_error: 0.0,
    })
}

mod system;
pub use system::{
    system_se_ca, system_se_da, system_se_da_single_user, SystemBound, ENUMERATION_LIMIT,
};

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NetworkConfig {
        NetworkConfig::default()
    }

    #[test]
    fn no_users_leaves_noise_only() {
        let c = NetworkConfig {
            lambda_u: 1e-30,
            ..cfg()
        };
        let g = gamma_da(&c, 10.0, 0.0, Tier::Macro).unwrap();
        assert!((g.gamma / (c.sigma2 / 90.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rbar_matches_direct_integral_in_r() {
        // Unscaled form of the same-tier kernel, integrated in r directly.
        let c = cfg();
        let k = DaKernels::new(&c).unwrap();
        let (lv, lw) = (c.lambda_m, c.lambda_s);
        let f = |r: f64| {
            r.powf(-c.alpha)
                * 2.0
                * PI
                * c.lambda_u
                * r
                * ((-lv * PI * c.r_p * c.r_p).exp() - (-lv * PI * r * r).exp())
                * (-lw * PI * c.r_p * c.r_p).exp()
        };
        let want = Integrator::with_rel_tol(1e-12).integrate(f, c.r_p, c.big_r).unwrap().value;
        assert!((k.rbar[0] / want - 1.0).abs() < 1e-8, "{} vs {want}", k.rbar[0]);
    }

    #[test]
    fn gamma_decreases_with_antennas() {
        let mut prev = f64::INFINITY;
        for l in [20, 40, 80, 160] {
            let c = NetworkConfig { l_m: l, ..cfg() };
            let g = gamma_da(&c, 10.0, 5.0, Tier::Macro).unwrap().gamma;
            assert!(g < prev);
            prev = g;
        }
    }

    #[test]
    fn infeasible_when_served_reaches_antennas() {
        assert!(matches!(gamma_da(&cfg(), 50.0, 0.0, Tier::Small), Err(Error::Infeasible(_))));
    }

    #[test]
    fn ei_form_matches_quadrature() {
        let c = cfg();
        for (served, kappa) in [(1.0, 0.0), (5.0, 5.0), (10.0, 3.0)] {
            for tier in [Tier::Macro, Tier::Small] {
                let g = gamma_da(&c, served, kappa, tier).unwrap();
                let q = se_lower_da(&c, &g).unwrap().se_lower;
                let e = se_lower_da_ei(&c, &g).unwrap().se_lower;
                assert!((q / e - 1.0).abs() < 1e-6, "{q} vs {e}");
            }
        }
    }

    #[test]
    fn ei_form_needs_alpha_four() {
        let c = NetworkConfig { alpha: 3.5, ..cfg() };
        let g = gamma_da(&c, 1.0, 0.0, Tier::Macro).unwrap();
        assert!(se_lower_da_ei(&c, &g).is_err());
    }

    #[test]
    fn vanishing_power_gives_zero_bound() {
        let c = NetworkConfig { q: 1e-30, ..cfg() };
        let g = gamma_da(&c, 1.0, 0.0, Tier::Macro).unwrap();
        assert!(se_lower_da(&c, &g).unwrap().se_lower < 1e-12);
    }

    #[test]
    fn unit_threshold_collapses_to_da() {
        let c = cfg();
        for tier in [Tier::Macro, Tier::Small] {
            let gd = gamma_da(&c, 5.0, 4.0, tier).unwrap();
            let gc = gamma_ca_counts(&c, 5.0, 4.0, 1.0, tier).unwrap();
            assert!((gd.gamma / gc.gamma - 1.0).abs() < 1e-9);
            let d = se_lower_da(&c, &gd).unwrap().se_lower;
            let m = match tier {
                Tier::Macro => se_lower_ca_m(&c, &gc).unwrap(),
                Tier::Small => se_lower_ca_s(&c, &gc).unwrap(),
            };
            assert!((d / m.se_lower - 1.0).abs() < 1e-8, "{d} vs {}", m.se_lower);
        }
    }

    #[test]
    fn threshold_above_one_is_rejected() {
        assert!(gamma_ca_counts(&cfg(), 1.0, 0.0, 1.2, Tier::Macro).is_err());
    }

    #[test]
    fn single_user_interference_limits() {
        let c = NetworkConfig {
            lambda_m: 1e-40,
            lambda_s: 1e-40,
            ..cfg()
        };
        assert!((single_user_interference(&c) / c.sigma2 - 1.0).abs() < 1e-12);
        let c = cfg();
        let g = single_user_gamma(&c, Tier::Small).unwrap();
        assert_eq!(single_user_interference(&c) / g.gamma, (c.l_s - 1) as f64);
        // alpha = 2 limit is continuous.
        let near = NetworkConfig { alpha: 2.0 + 1e-7, ..cfg() };
        let at = NetworkConfig { alpha: 2.0, ..cfg() };
        let (x, y) = (single_user_interference(&near), single_user_interference(&at));
        assert!((x / y - 1.0).abs() < 1e-5, "{x} vs {y}");
    }
}
