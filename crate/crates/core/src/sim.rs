//! End-to-end uplink Monte Carlo.
//!
//! Each trial samples one deployment with an MBS at the origin, assigns users
//! under DA and CA, and measures `ln(1 + SINR)` for every user whose nearest
//! MBS is the tagged one. Both modes see the same deployment and the same
//! channel vector for every (BS, user) pair, so their difference has low
//! variance. Results depend only on the master seed, never on the number of
//! worker threads.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::association::{
    associate_users, ca_fixed_point, AssociationRule, AssociationState, ClusterSpec,
};
use crate::config::{AccessMode, NetworkConfig, Tier};
use crate::error::{invalid, Error, Result};
use crate::geometry::{simulation_window, Deployment, Point};
use crate::mimo::{gaussian_vector, zf_detector, ChannelMatrix};

mod estimate;
mod oracle;

pub use estimate::{paired_difference, ratio_estimate, PairedDifference, RatioEstimate};
pub use oracle::{
    association_frequency, expected_cross_count, interference_oracle, single_user_interference_mc, InterferenceOracle,
    ScalarEstimate,
};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

const GEOMETRY: u64 = 0x6765_6f6d;
const CHANNEL: u64 = 0x6368_616e;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Hash a sequence of words into one seed.
pub fn derive_seed(words: &[u64]) -> u64 {
    words.iter().fold(0x5eed, |acc, &w| splitmix(acc ^ splitmix(w)))
}

/// Independent random stream `stream` of the sub-generator `purpose`.
pub fn stream_rng(master: u64, purpose: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[master, purpose]));
    rng.set_stream(stream);
    rng
}

/// Channel vector between BS `(tier, bs)` and user `user` in trial `trial`.
/// A pure function of its arguments, so every mode sees the same draw.
fn link_channel(master: u64, trial: u64, tier: Tier, bs: usize, user: usize, l: usize) -> DVector<Complex64> {
    let seed = derive_seed(&[master, CHANNEL, trial, tier as u64, bs as u64, user as u64]);
    gaussian_vector(l, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// UL SINR of each served user at one BS after ZF detection.
///
/// `served` and `interferers` hold `(distance, channel)` pairs with channel
/// length `L_v`. Returns `Q r_k^-a / (sum_j Q r_j^-a |a_k^H h_j|^2 + ||a_k||^2 sigma2)`.
pub fn ul_sinr(
    cfg: &NetworkConfig,
    tier: Tier,
    served: &[(f64, DVector<Complex64>)],
    interferers: &[(f64, DVector<Complex64>)],
) -> Result<Vec<f64>> {
    let l = cfg.antennas(tier);
    if served.len() >= l {
        return Err(Error::Infeasible(format!(
            "{tier} would serve {} users with {l} antennas",
            served.len()
        )));
    }
    if served.is_empty() {
        return Ok(Vec::new());
    }
    let cols: Vec<DVector<Complex64>> = served.iter().map(|(_, h)| h.clone()).collect();
    let g = ChannelMatrix::from_matrix(nalgebra::DMatrix::from_columns(&cols));
    let det = zf_detector(&g)?;
    let mut interference = vec![0.0; served.len()];
    for (r, h) in interferers {
        let gain = cfg.q * r.powf(-cfg.alpha);
        let s = det.project(h);
        for (k, acc) in interference.iter_mut().enumerate() {
            *acc += gain * s[k].norm_sqr();
        }
    }
    Ok(served
        .iter()
        .enumerate()
        .map(|(k, (r, _))| {
            let signal = cfg.q * r.powf(-cfg.alpha);
            signal / (interference[k] + det.column_norm_sq(k) * cfg.sigma2)
        })
        .collect())
}

/// Outcome of one mode in one trial.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModeTrial {
    pub rejected: bool,
    /// Summed `ln(1 + SINR)` of tagged-cell users, by serving tier.
    pub se_sum: [f64; 2],
    pub users: [usize; 2],
}

impl ModeTrial {
    pub fn total(&self) -> f64 {
        self.se_sum[0] + self.se_sum[1]
    }

    pub fn count(&self) -> usize {
        self.users[0] + self.users[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialResult {
    pub trial: u64,
    pub da: ModeTrial,
    pub ca: ModeTrial,
}

impl TrialResult {
    pub fn mode(&self, mode: AccessMode) -> &ModeTrial {
        match mode {
            AccessMode::Decoupled => &self.da,
            AccessMode::Coupled => &self.ca,
        }
    }
}

/// Monte Carlo spectral-efficiency estimate for one mode (nats/s/Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SEResult {
    pub mean: f64,
    pub ci_halfwidth: f64,
    pub std_error: f64,
    /// Accepted trials.
    pub n_trials: usize,
    pub n_rejected: usize,
    pub n_users: usize,
    /// Per serving tier: MBS then SBS.
    pub per_tier: [RatioEstimate; 2],
}

impl SEResult {
    pub fn rejection_rate(&self) -> f64 {
        let total = self.n_trials + self.n_rejected;
        if total == 0 {
            0.0
        } else {
            self.n_rejected as f64 / total as f64
        }
    }
}

/// DA and CA estimates from paired trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub da: SEResult,
    pub ca: SEResult,
    /// `SE_DA - SE_CA` over trials accepted in both modes.
    pub diff: PairedDifference,
    pub ca_threshold: f64,
}

/// Trial-count and seeding options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOptions {
    pub trials: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

/// Run `f` on a pool of `jobs` threads (0: rayon default).
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid("jobs", e.to_string()))?;
    Ok(pool.install(f))
}

fn tier_slot(tier: Tier) -> usize {
    match tier {
        Tier::Macro => 0,
        Tier::Small => 1,
    }
}

/// Evaluate one mode on a sampled deployment.
fn evaluate_mode(
    cfg: &NetworkConfig,
    dep: &Deployment,
    state: &AssociationState,
    master: u64,
    trial: u64,
) -> Result<ModeTrial> {
    let mut out = ModeTrial::default();
    // BSs serving at least one tagged-cell user.
    let mut cells: Vec<(Tier, usize)> = state
        .links
        .iter()
        .filter(|l| l.nearest_mbs.index == 0)
        .map(|l| (l.serving, l.serving_index()))
        .collect();
    cells.sort();
    cells.dedup();
    for (tier, bs) in cells {
        let served_ids = state.served_by(tier, bs);
        let l = cfg.antennas(tier);
        if served_ids.len() >= l {
            out.rejected = true;
            return Ok(out);
        }
        let site = dep.bs_points(tier)[bs];
        let served: Vec<(f64, DVector<Complex64>)> = served_ids
            .iter()
            .map(|&u| (state.links[u].serving_distance(), link_channel(master, trial, tier, bs, u, l)))
            .collect();
        let interferers: Vec<(f64, DVector<Complex64>)> = dep
            .user_points
            .iter()
            .enumerate()
            .filter(|(u, _)| {
                let link = &state.links[*u];
                !(link.serving == tier && link.serving_index() == bs)
            })
            .filter_map(|(u, p)| {
                let d = p.dist(&site);
                (d <= cfg.big_r).then(|| (d, link_channel(master, trial, tier, bs, u, l)))
            })
            .collect();
        let sinr = match ul_sinr(cfg, tier, &served, &interferers) {
            Ok(s) => s,
            Err(Error::Singular(_)) => {
                out.rejected = true;
                return Ok(out);
            }
            Err(e) => return Err(e),
        };
        let slot = tier_slot(tier);
        for (&u, s) in served_ids.iter().zip(sinr) {
            if state.links[u].nearest_mbs.index == 0 {
                out.se_sum[slot] += s.ln_1p();
                out.users[slot] += 1;
            }
        }
    }
    Ok(out)
}

/// One paired trial.
pub fn run_trial(
    cfg: &NetworkConfig,
    ca_threshold: f64,
    master: u64,
    trial: u64,
) -> Result<TrialResult> {
    let mut rng = stream_rng(master, GEOMETRY, trial);
    let dep = Deployment::sample_with(cfg, simulation_window(cfg), Some(Tier::Macro), trial, &mut rng)?;
    let mut result = TrialResult {
        trial,
        da: ModeTrial::default(),
        ca: ModeTrial::default(),
    };
    for (rule, slot) in [
        (AssociationRule::Decoupled, &mut result.da),
        (AssociationRule::Coupled { c: ca_threshold }, &mut result.ca),
    ] {
        *slot = match associate_users(&dep, rule) {
            Ok(state) => evaluate_mode(cfg, &dep, &state, master, trial)?,
            Err(Error::InvalidRealization(_)) => ModeTrial {
                rejected: true,
                ..ModeTrial::default()
            },
            Err(e) => return Err(e),
        };
    }
    Ok(result)
}

/// Raw per-trial results, in trial order.
pub fn simulate(cfg: &NetworkConfig, ca_threshold: f64, opts: &TrialOptions) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    if opts.trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    let master = opts.master_seed;
    with_pool(opts.jobs, || {
        (0..opts.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(cfg, ca_threshold, master, t))
            .collect::<Result<Vec<_>>>()
    })?
}

fn summarize(trials: &[TrialResult], mode: AccessMode) -> Result<SEResult> {
    let accepted: Vec<&ModeTrial> = trials.iter().map(|t| t.mode(mode)).filter(|m| !m.rejected).collect();
    let n_rejected = trials.len() - accepted.len();
    let rate = n_rejected as f64 / trials.len() as f64;
    if rate > 0.5 {
        return Err(Error::ExcessiveRejection {
            rate,
            rejected: n_rejected,
            trials: trials.len(),
        });
    }
    let xs: Vec<f64> = accepted.iter().map(|m| m.count() as f64).collect();
    let ys: Vec<f64> = accepted.iter().map(|m| m.total()).collect();
    let all = ratio_estimate(&ys, &xs);
    let per_tier = [0, 1].map(|i| {
        let y: Vec<f64> = accepted.iter().map(|m| m.se_sum[i]).collect();
        let x: Vec<f64> = accepted.iter().map(|m| m.users[i] as f64).collect();
        ratio_estimate(&y, &x)
    });
    Ok(SEResult {
        mean: all.mean,
        ci_halfwidth: Z95 * all.std_error,
        std_error: all.std_error,
        n_trials: accepted.len(),
        n_rejected,
        n_users: xs.iter().sum::<f64>() as usize,
        per_tier,
    })
}

/// Reduce paired trials to per-mode estimates and the paired difference.
pub fn summarize_trials(trials: &[TrialResult], ca_threshold: f64) -> Result<McReport> {
    let da = summarize(trials, AccessMode::Decoupled)?;
    let ca = summarize(trials, AccessMode::Coupled)?;
    let both: Vec<&TrialResult> = trials.iter().filter(|t| !t.da.rejected && !t.ca.rejected).collect();
    let col = |f: &dyn Fn(&TrialResult) -> f64| both.iter().map(|t| f(t)).collect::<Vec<f64>>();
    let diff = paired_difference(
        &col(&|t| t.da.total()),
        &col(&|t| t.da.count() as f64),
        &col(&|t| t.ca.total()),
        &col(&|t| t.ca.count() as f64),
    );
    Ok(McReport {
        da,
        ca,
        diff,
        ca_threshold,
    })
}

/// CA threshold used for per-realization assignment: the user-weighted mean
/// of the fixed point's `C` over the tagged macro cell.
pub fn ca_threshold(cfg: &NetworkConfig, cluster: &ClusterSpec) -> Result<f64> {
    Ok(ca_fixed_point(cfg, cluster)?.tagged_threshold(cluster))
}

/// Paired DA/CA Monte Carlo with the CA threshold from `cluster`.
pub fn run_trials(cfg: &NetworkConfig, cluster: &ClusterSpec, opts: &TrialOptions) -> Result<McReport> {
    let c = ca_threshold(cfg, cluster)?;
    let trials = simulate(cfg, c, opts)?;
    summarize_trials(&trials, c)
}

/// Poisson points on the annulus `[inner, outer]` around the origin whose
/// intensity is `density * (pivot / r)^exponent` inside `pivot` and `density`
/// beyond, each with weight `min(1, (r / pivot)^exponent)`. Weighted sums over
/// these points are unbiased for sums over a homogeneous PPP of `density`,
/// with far less variance for integrands that blow up like `r^-exponent`
/// near `inner`.
pub(crate) fn weighted_annulus<R: Rng + ?Sized>(
    density: f64,
    inner: f64,
    pivot: f64,
    outer: f64,
    exponent: f64,
    rng: &mut R,
) -> Result<Vec<(Point, f64)>> {
    let pivot = pivot.clamp(inner, outer);
    let mut pts = Vec::new();
    let mut push = |r: f64, w: f64, rng: &mut R| {
        let th = 2.0 * PI * rng.random::<f64>();
        pts.push((Point::new(r * th.cos(), r * th.sin()), w));
    };
    // Radial law inside the pivot has density proportional to r^(1 - exponent).
    let e = 2.0 - exponent;
    let (inner_mean, radius): (f64, Box<dyn Fn(f64) -> f64>) = if e.abs() < 1e-12 {
        let span = (pivot / inner).ln();
        (2.0 * PI * density * pivot * pivot * span, Box::new(move |u| inner * (span * u).exp()))
    } else {
        let (lo, hi) = (inner.powf(e), pivot.powf(e));
        (
            2.0 * PI * density * pivot.powf(exponent) * (hi - lo) / e,
            Box::new(move |u| (lo + (hi - lo) * u).powf(1.0 / e)),
        )
    };
    if inner_mean > 0.0 {
        let n = Poisson::new(inner_mean).map_err(|e| invalid("density", e.to_string()))?.sample(rng) as usize;
        for _ in 0..n {
            let r = radius(rng.random::<f64>());
            push(r, (r / pivot).powf(exponent), rng);
        }
    }
    let outer_mean = PI * density * (outer * outer - pivot * pivot);
    if outer_mean > 0.0 {
        let n = Poisson::new(outer_mean).map_err(|e| invalid("density", e.to_string()))?.sample(rng) as usize;
        for _ in 0..n {
            let r = (pivot * pivot + (outer * outer - pivot * pivot) * rng.random::<f64>()).sqrt();
            push(r, 1.0, rng);
        }
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_only_snr_mean() {
        // L = 2, K = 1: ||a||^2 = 1/||g||^2 and E||g||^2 = L.
        let cfg = NetworkConfig {
            l_m: 2,
            ..NetworkConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let r: f64 = 100.0;
        let mut acc = 0.0;
        for _ in 0..n {
            let h = gaussian_vector(2, &mut rng);
            acc += ul_sinr(&cfg, Tier::Macro, &[(r, h)], &[]).unwrap()[0];
        }
        let want = cfg.q * r.powf(-cfg.alpha) * 2.0 / cfg.sigma2;
        assert!((acc / n as f64 / want - 1.0).abs() < 0.02);
    }

    #[test]
    fn co_served_user_only_changes_noise_scaling() {
        let cfg = NetworkConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g1 = gaussian_vector(cfg.l_m, &mut rng);
        let g2 = gaussian_vector(cfg.l_m, &mut rng);
        let alone = ul_sinr(&cfg, Tier::Macro, &[(200.0, g1.clone())], &[]).unwrap()[0];
        let both = ul_sinr(&cfg, Tier::Macro, &[(200.0, g1.clone()), (50.0, g2.clone())], &[]).unwrap()[0];
        // Same signal, noise scaled by ||a_1||^2: the ratio is the ratio of norms.
        let d1 = zf_detector(&ChannelMatrix::from_matrix(nalgebra::DMatrix::from_columns(std::slice::from_ref(&g1)))).unwrap();
        let d2 = zf_detector(&ChannelMatrix::from_matrix(nalgebra::DMatrix::from_columns(&[g1, g2]))).unwrap();
        let want = d1.column_norm_sq(0) / d2.column_norm_sq(0);
        assert!((both / alone / want - 1.0).abs() < 1e-10);
    }

    #[test]
    fn interferer_moving_inward_hurts() {
        let cfg = NetworkConfig::default();
        let mut prev = 0.0;
        for d in [1900.0, 1000.0, 400.0, 100.0, 30.0] {
            let mut mean = 0.0;
            for s in 0..400u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                let g = gaussian_vector(cfg.l_s, &mut rng);
                let h = gaussian_vector(cfg.l_s, &mut rng);
                let sinr = ul_sinr(&cfg, Tier::Small, &[(100.0, g)], &[(d, h)]).unwrap()[0];
                mean += 1.0 / sinr;
            }
            assert!(mean > prev, "interference did not grow at {d}");
            prev = mean;
        }
    }

    #[test]
    fn overload_is_infeasible() {
        let cfg = NetworkConfig {
            l_s: 2,
            ..NetworkConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s: Vec<_> = (0..2).map(|_| (50.0, gaussian_vector(2, &mut rng))).collect();
        assert!(matches!(ul_sinr(&cfg, Tier::Small, &s, &[]), Err(Error::Infeasible(_))));
    }

    #[test]
    fn link_channels_are_pure() {
        let a = link_channel(9, 4, Tier::Small, 3, 17, 8);
        let b = link_channel(9, 4, Tier::Small, 3, 17, 8);
        let c = link_channel(9, 4, Tier::Small, 3, 18, 8);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn weighted_annulus_is_unbiased() {
        // Over a PPP on [10, 1000]: E sum r^-2 = 2 pi lambda ln(100),
        // E sum r^-4 = pi lambda (10^-2 - 10^-6), E count = pi lambda (10^6 - 10^2).
        let lam = 1e-5;
        let want = [
            2.0 * PI * lam * 100f64.ln(),
            PI * lam * (1e-2 - 1e-6),
            PI * lam * (1e6 - 1e2),
        ];
        for exponent in [2.0, 3.0, 4.0] {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let n = 4000;
            let mut acc = [0.0; 3];
            for _ in 0..n {
                for (p, w) in weighted_annulus(lam, 10.0, 200.0, 1000.0, exponent, &mut rng).unwrap() {
                    acc[0] += w * p.norm().powi(-2);
                    acc[1] += w * p.norm().powi(-4);
                    acc[2] += w;
                }
            }
            for (a, w) in acc.iter().zip(want) {
                assert!((a / n as f64 / w - 1.0).abs() < 0.03, "exponent {exponent}: {} vs {w}", a / n as f64);
            }
        }
    }
}
