//! Ratio estimators over independent trials.
//!
//! A trial contributes a sum `y` over a random number `x` of users, so the
//! per-user mean is `sum y / sum x` with a delta-method standard error.
//! All sums run in trial order, which keeps results independent of how the
//! trials were scheduled.

/// `sum y / sum x` and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// `sum x`.
    pub weight: f64,
}

fn sum(v: impl Iterator<Item = f64>) -> f64 {
    // Neumaier compensated summation.
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in v {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Residuals `(y_i - r x_i) / mean(x)` whose sample mean is zero.
fn linearized(ys: &[f64], xs: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = ys.len();
    let sx = sum(xs.iter().copied());
    if n == 0 || sx <= 0.0 {
        return None;
    }
    let r = sum(ys.iter().copied()) / sx;
    let xbar = sx / n as f64;
    Some((r, ys.iter().zip(xs).map(|(y, x)| (y - r * x) / xbar).collect()))
}

fn std_error_of_mean(z: &[f64]) -> f64 {
    let n = z.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let m = sum(z.iter().copied()) / n as f64;
    let var = sum(z.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Ratio estimate of `E[y] / E[x]`. With no users at all the mean is NaN.
pub fn ratio_estimate(ys: &[f64], xs: &[f64]) -> RatioEstimate {
    assert_eq!(ys.len(), xs.len());
    match linearized(ys, xs) {
        Some((r, z)) => RatioEstimate {
            mean: r,
            std_error: std_error_of_mean(&z),
            weight: sum(xs.iter().copied()),
        },
        None => RatioEstimate {
            mean: f64::NAN,
            std_error: f64::INFINITY,
            weight: 0.0,
        },
    }
}

/// Difference of two ratio estimates measured on the same trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedDifference {
    pub mean: f64,
    pub std_error: f64,
    pub ci_halfwidth: f64,
    pub n_trials: usize,
}

impl PairedDifference {
    /// Whether the 95% interval excludes zero.
    pub fn significant(&self) -> bool {
        self.mean.abs() > self.ci_halfwidth
    }
}

pub fn paired_difference(y1: &[f64], x1: &[f64], y2: &[f64], x2: &[f64]) -> PairedDifference {
    let n = y1.len();
    match (linearized(y1, x1), linearized(y2, x2)) {
        (Some((r1, z1)), Some((r2, z2))) => {
            let z: Vec<f64> = z1.iter().zip(&z2).map(|(a, b)| a - b).collect();
            let se = std_error_of_mean(&z);
            PairedDifference {
                mean: r1 - r2,
                std_error: se,
                ci_halfwidth: super::Z95 * se,
                n_trials: n,
            }
        }
        _ => PairedDifference {
            mean: f64::NAN,
            std_error: f64::INFINITY,
            ci_halfwidth: f64::INFINITY,
            n_trials: n,
        },
    }
}
