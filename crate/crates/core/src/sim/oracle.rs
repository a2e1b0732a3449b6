//! Monte Carlo estimators for the quantities the analysis predicts in closed
//! form: expected interference plus noise, single-user interference and
//! association frequencies.

use rayon::prelude::*;

use super::{stream_rng, weighted_annulus, with_pool};
use crate::association::AssociationRule;
use crate::bounds::{gamma_ca_with, gamma_da_with, CaKernels, DaKernels};
use crate::config::{NetworkConfig, Tier};
use crate::error::{invalid, Error, Result};
use crate::geometry::{nearest, sample_ppp, simulation_window, Point};
use crate::mimo::{gaussian_vector, zf_detector, ChannelMatrix};

const ORACLE: u64 = 0x6f72_6163;
const SINGLE: u64 = 0x7369_6e67;
const FREQUENCY: u64 = 0x6672_6571;

/// Radius inside which interferers are importance-sampled.
const PIVOT: f64 = 300.0;

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl ScalarEstimate {
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len();
        let mean = v.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            f64::INFINITY
        };
        ScalarEstimate {
            mean,
            std_error: (var / n as f64).sqrt(),
            samples: n,
        }
    }
}

/// Simulated versus predicted interference plus noise at a tagged BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceOracle {
    /// Estimate of `E[sum_j Q r_j^-a |a_k^H h_j|^2 + ||a_k||^2 sigma2]`,
    /// averaged over the served users `k`.
    pub simulated: ScalarEstimate,
    /// Analytic `gamma(served, kappa)`.
    pub predicted: f64,
    /// Other-cell interference scaled back by `Q / (L - K)`; estimates `rbar_v`.
    pub other_cell: f64,
    /// Interference of one cross-associated user scaled the same way;
    /// estimates `rbar_v1`.
    pub per_cross_user: f64,
}

impl InterferenceOracle {
    pub fn relative_error(&self) -> f64 {
        self.simulated.mean / self.predicted - 1.0
    }

    /// `|simulated - predicted|` in units of the simulation standard error.
    pub fn z_score(&self) -> f64 {
        (self.simulated.mean - self.predicted).abs() / self.simulated.std_error
    }
}

/// Expected number of users whose nearest tier-`tier` BS is a given one but
/// that `rule` sends to the other tier, ignoring the protection radius.
pub fn expected_cross_count(cfg: &NetworkConfig, tier: Tier, rule: AssociationRule) -> f64 {
    let c = match rule {
        AssociationRule::Decoupled => 1.0,
        AssociationRule::Coupled { c } => c,
    };
    // A user at distance r from its nearest MBS goes to an SBS iff the
    // nearest SBS is closer than c r, and the other way round for SBS.
    let (own, other, scale) = match tier {
        Tier::Macro => (cfg.lambda_m, cfg.lambda_s, c),
        Tier::Small => (cfg.lambda_s, cfg.lambda_m, 1.0 / c),
    };
    cfg.lambda_u * (1.0 / own - 1.0 / (own + other * scale * scale))
}

/// Estimate `E[I + ||a||^2 sigma2]` at a tagged `tier` BS serving `served`
/// users with `kappa` cross-associated users, and compare with the analytic
/// `gamma`.
///
/// Each realization draws both BS processes with the tagged BS at the origin
/// and a weighted PPP of users on `[r_p, big_r]`, importance-sampled with
/// intensity proportional to `r^-alpha` near `r_p`. Users closer than `r_p` to
/// any BS are dropped. Users whose nearest tier-`tier` BS is another one
/// interfere directly. Users whose nearest tier-`tier` BS is the tagged one
/// but that `rule` sends to the other tier are cross-associated; their summed
/// interference divided by [`expected_cross_count`] is the mean interference
/// of one such user and is scaled by `kappa`.
#[allow(clippy::too_many_arguments)]
pub fn interference_oracle(
    cfg: &NetworkConfig,
    tier: Tier,
    rule: AssociationRule,
    served: usize,
    kappa: usize,
    realizations: usize,
    seed: u64,
    jobs: usize,
) -> Result<InterferenceOracle> {
    cfg.validate()?;
    if realizations < 2 {
        return Err(invalid("realizations", "need at least two"));
    }
    let l = cfg.antennas(tier);
    if served == 0 || served >= l {
        return Err(invalid("served", format!("must lie in 1..{l}")));
    }
    let da = DaKernels::new(cfg)?;
    let predicted = match rule {
        AssociationRule::Decoupled => gamma_da_with(cfg, &da, served as f64, kappa as f64, tier)?,
        AssociationRule::Coupled { c } => {
            gamma_ca_with(cfg, &da, &CaKernels::new(cfg, c)?, served as f64, kappa as f64, tier)?
        }
    }
    .gamma;
    let window = simulation_window(cfg);
    let cross_norm = expected_cross_count(cfg, tier, rule);

    // (other-cell interference plus noise, interference of one cross user)
    let one = |i: u64| -> Result<(f64, f64)> {
        let mut rng = stream_rng(seed, ORACLE, i);
        let mut mbs = Vec::new();
        let mut sbs = Vec::new();
        match tier {
            Tier::Macro => mbs.push(Point::ORIGIN),
            Tier::Small => sbs.push(Point::ORIGIN),
        }
        mbs.extend(sample_ppp(cfg.lambda_m, window, &mut rng)?);
        sbs.extend(sample_ppp(cfg.lambda_s, window, &mut rng)?);
        if mbs.is_empty() || sbs.is_empty() {
            return Err(Error::InvalidRealization("empty tier".into()));
        }
        let g = ChannelMatrix::gaussian(l, served, &mut rng);
        let det = zf_detector(&g)?;
        let mut other = (0..served).map(|j| det.column_norm_sq(j)).sum::<f64>() / served as f64 * cfg.sigma2;
        let mut cross = 0.0;
        for (p, w) in weighted_annulus(cfg.lambda_u, cfg.r_p, PIVOT, cfg.big_r, cfg.alpha, &mut rng)? {
            if mbs.iter().chain(&sbs).any(|b| p.dist(b) < cfg.r_p) {
                continue;
            }
            let nm = nearest(&p, &mbs)?;
            let ns = nearest(&p, &sbs)?;
            let own = if tier == Tier::Macro { nm } else { ns };
            let is_cross = own.index == 0;
            if is_cross && rule.choose(nm.distance, ns.distance) == tier {
                continue;
            }
            let s = det.project(&gaussian_vector(l, &mut rng));
            let gain = s.iter().map(|z| z.norm_sqr()).sum::<f64>() / served as f64;
            let x = w * cfg.q * p.norm().powf(-cfg.alpha) * gain;
            if is_cross {
                cross += x;
            } else {
                other += x;
            }
        }
        Ok((other, cross / cross_norm))
    };

    let samples = with_pool(jobs, || {
        (0..realizations as u64)
            .into_par_iter()
            .map(one)
            .collect::<Result<Vec<_>>>()
    })??;
    let n = samples.len() as f64;
    let z: Vec<f64> = samples.iter().map(|(o, c)| o + kappa as f64 * c).collect();
    let free = (l - served) as f64;
    Ok(InterferenceOracle {
        simulated: ScalarEstimate::from_samples(&z),
        predicted,
        other_cell: (samples.iter().map(|p| p.0).sum::<f64>() / n * free - cfg.sigma2) / cfg.q,
        per_cross_user: samples.iter().map(|p| p.1).sum::<f64>() / n * free / cfg.q,
    })
}

/// Interference plus noise from a PPP of density `lambda_m + lambda_s` on
/// `[r_p, big_r]`, one user per BS, unit-gain channels on average.
pub fn single_user_interference_mc(cfg: &NetworkConfig, samples: usize, seed: u64, jobs: usize) -> Result<ScalarEstimate> {
    cfg.validate()?;
    if samples < 2 {
        return Err(invalid("samples", "need at least two"));
    }
    let one = |i: u64| -> Result<f64> {
        let mut rng = stream_rng(seed, SINGLE, i);
        let pts = weighted_annulus(cfg.bs_density(), cfg.r_p, PIVOT, cfg.big_r, cfg.alpha, &mut rng)?;
        Ok(pts
            .iter()
            .map(|(p, w)| w * cfg.q * p.norm().powf(-cfg.alpha))
            .sum::<f64>()
            + cfg.sigma2)
    };
    let v = with_pool(jobs, || {
        (0..samples as u64).into_par_iter().map(one).collect::<Result<Vec<_>>>()
    })??;
    Ok(ScalarEstimate::from_samples(&v))
}

/// Fraction of typical users served by the macro tier under `rule`. Each
/// sample places one user at the origin over a fresh pair of BS processes,
/// so samples are independent.
pub fn association_frequency(
    cfg: &NetworkConfig,
    rule: AssociationRule,
    users: usize,
    seed: u64,
    jobs: usize,
) -> Result<ScalarEstimate> {
    cfg.validate()?;
    if users < 2 {
        return Err(invalid("users", "need at least two"));
    }
    let radius = simulation_window(cfg);
    let one = |i: u64| -> Result<f64> {
        let mut rng = stream_rng(seed, FREQUENCY, i);
        loop {
            let m = sample_ppp(cfg.lambda_m, radius, &mut rng)?;
            let s = sample_ppp(cfg.lambda_s, radius, &mut rng)?;
            if m.is_empty() || s.is_empty() {
                continue;
            }
            let rm = nearest(&Point::ORIGIN, &m)?.distance;
            let rs = nearest(&Point::ORIGIN, &s)?.distance;
            return Ok(f64::from(rule.choose(rm, rs) == Tier::Macro));
        }
    };
    let v = with_pool(jobs, || {
        (0..users as u64).into_par_iter().map(one).collect::<Result<Vec<_>>>()
    })??;
    Ok(ScalarEstimate::from_samples(&v))
}
