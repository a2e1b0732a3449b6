//! Rayleigh channels, zero-forcing precoding/detection and the Erlang and
//! Wishart moments used by the analysis.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Error, Result};

/// Reciprocal condition number below which a Gram matrix is treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Circularly-symmetric complex Gaussian with unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

pub fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> DVector<Complex64> {
    DVector::from_fn(len, |_, _| complex_gaussian(rng))
}

/// Complex channel matrix. Downlink matrices are `users x antennas`, uplink
/// matrices `antennas x users`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix(DMatrix<Complex64>);

impl ChannelMatrix {
    /// i.i.d. CN(0, 1) entries, filled column by column.
    pub fn gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        ChannelMatrix(DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng)))
    }

    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        ChannelMatrix(m)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }
}

/// Cholesky factor of a Hermitian Gram matrix, with a conditioning guard.
#[derive(Debug, Clone)]
pub struct GramFactor {
    chol: Cholesky<Complex64, Dyn>,
}

impl GramFactor {
    pub fn new(gram: DMatrix<Complex64>) -> Result<Self> {
        let n = gram.nrows();
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::Singular("Gram matrix is not positive definite".into()))?;
        // rcond(A) ~ (min pivot / max pivot)^2 for A = L L^H.
        let l = chol.l_dirty();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..n {
            let d = l[(i, i)].re;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let rcond = if hi > 0.0 { (lo / hi).powi(2) } else { 0.0 };
        if !(rcond >= RCOND_THRESHOLD) {
            return Err(Error::Singular(format!(
                "reciprocal condition estimate {rcond:e} below {RCOND_THRESHOLD:e}"
            )));
        }
        Ok(GramFactor { chol })
    }

    pub fn inverse(&self) -> DMatrix<Complex64> {
        self.chol.inverse()
    }

    pub fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        self.chol.solve(b)
    }

    /// Diagonal of the inverse, `[(A)^-1]_kk`, via one triangular solve per column.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let inv = self.inverse();
        (0..inv.nrows()).map(|k| inv[(k, k)].re).collect()
    }
}

/// Column-normalized zero-forcing precoder.
#[derive(Debug, Clone)]
pub struct ZfPrecoder {
    /// `H^H (H H^H)^-1`, one column per user, before normalization.
    pub unnormalized: DMatrix<Complex64>,
    /// Unit-norm columns.
    pub columns: DMatrix<Complex64>,
    /// `||w_k||^2 = [(H H^H)^-1]_kk`.
    pub norms_sq: Vec<f64>,
}

/// Right pseudo-inverse of a `K x L` downlink channel with each column
/// normalized to unit power.
pub fn zf_precoder(h: &ChannelMatrix) -> Result<ZfPrecoder> {
    let (k, l) = (h.rows(), h.cols());
    if k == 0 || k > l {
        return Err(Error::Singular(format!(
            "zero-forcing needs 1 <= users <= antennas (got {k} users, {l} antennas)"
        )));
    }
    let hm = h.matrix();
    let factor = GramFactor::new(hm * hm.adjoint())?;
    let unnormalized = hm.adjoint() * factor.inverse();
    let norms_sq: Vec<f64> = unnormalized
        .column_iter()
        .map(|c| c.norm_squared())
        .collect();
    let mut columns = unnormalized.clone();
    for (mut col, n2) in columns.column_iter_mut().zip(&norms_sq) {
        col /= Complex64::from(n2.sqrt());
    }
    Ok(ZfPrecoder {
        unnormalized,
        columns,
        norms_sq,
    })
}

/// Downlink received power of user `user_index` under equal power split and
/// per-column normalized ZF: `(P / K) r^-alpha / ||w_k||^2`.
pub fn dl_received_power(
    h: &ChannelMatrix,
    p_total: f64,
    r: f64,
    alpha: f64,
    user_index: usize,
) -> Result<f64> {
    let pre = zf_precoder(h)?;
    let n2 = *pre
        .norms_sq
        .get(user_index)
        .ok_or_else(|| invalid("user_index", format!("{user_index} out of range")))?;
    let k = h.rows() as f64;
    Ok(p_total / k * r.powf(-alpha) / n2)
}

/// Zero-forcing uplink detector `A = G (G^H G)^-1`.
#[derive(Debug, Clone)]
pub struct ZfDetector {
    g: DMatrix<Complex64>,
    factor: GramFactor,
    norms_sq: Vec<f64>,
}

pub fn zf_detector(g: &ChannelMatrix) -> Result<ZfDetector> {
    let (l, k) = (g.rows(), g.cols());
    if k == 0 || k > l {
        return Err(Error::Singular(format!(
            "zero-forcing needs 1 <= users <= antennas (got {k} users, {l} antennas)"
        )));
    }
    let gm = g.matrix().clone();
    let factor = GramFactor::new(gm.adjoint() * &gm)?;
    let norms_sq = factor.inverse_diagonal();
    Ok(ZfDetector {
        g: gm,
        factor,
        norms_sq,
    })
}

impl ZfDetector {
    pub fn users(&self) -> usize {
        self.g.ncols()
    }

    /// Full detector matrix, `L x K`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        &self.g * self.factor.inverse()
    }

    /// `||a_k||^2`, equal to `[(G^H G)^-1]_kk`.
    pub fn column_norm_sq(&self, k: usize) -> f64 {
        self.norms_sq[k]
    }

    /// `A^H h`: the stream outputs seen by each detector column for an
    /// incoming vector `h`.
    pub fn project(&self, h: &DVector<Complex64>) -> DVector<Complex64> {
        self.factor.solve(&(self.g.adjoint() * h))
    }
}

/// Sample mean of `1 / [(H H^H)^-1]_11` for `H` of shape `k x l`. Converges
/// to `l - k + 1`.
pub fn erlang_mean_check<R: Rng + ?Sized>(l: usize, k: usize, trials: usize, rng: &mut R) -> Result<f64> {
    if k < 1 || l < k {
        return Err(invalid("k", format!("need 1 <= k <= l (got l={l}, k={k})")));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    let mut sum = 0.0;
    for _ in 0..trials {
        let h = ChannelMatrix::gaussian(k, l, rng);
        let hm = h.matrix();
        let factor = GramFactor::new(hm * hm.adjoint())?;
        sum += 1.0 / factor.inverse()[(0, 0)].re;
    }
    Ok(sum / trials as f64)
}

/// Sample mean of `tr[(G^H G)^-1]` for `G` of shape `l x k`. Converges to
/// `k / (l - k)`; diverges for `l <= k`.
pub fn wishart_trace_mean<R: Rng + ?Sized>(l: usize, k: usize, trials: usize, rng: &mut R) -> Result<f64> {
    if k < 1 || l <= k {
        return Err(Error::Infeasible(format!(
            "inverse Wishart trace has no finite mean unless l > k >= 1 (got l={l}, k={k})"
        )));
    }
    if trials == 0 {
        return Err(invalid("trials", "must be positive"));
    }
    let mut sum = 0.0;
    for _ in 0..trials {
        let g = ChannelMatrix::gaussian(l, k, rng);
        let gm = g.matrix();
        let factor = GramFactor::new(gm.adjoint() * gm)?;
        sum += factor.inverse_diagonal().iter().sum::<f64>();
    }
    Ok(sum / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn precoder_scalar_channel() {
        let h = ChannelMatrix::from_matrix(DMatrix::from_element(1, 1, c(2.0, 0.0)));
        let p = zf_precoder(&h).unwrap();
        assert!((p.columns[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((p.unnormalized[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn precoder_unitary_channel_is_adjoint() {
        let s = FRAC_1_SQRT_2;
        let h = DMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)]);
        let p = zf_precoder(&ChannelMatrix::from_matrix(h.clone())).unwrap();
        assert!((&p.columns - h.adjoint()).norm() < 1e-12);
        assert!(p.norms_sq.iter().all(|n| (n - 1.0).abs() < 1e-12));
    }

    #[test]
    fn precoder_inverts_random_channel() {
        let h = ChannelMatrix::gaussian(3, 8, &mut rng(1));
        let p = zf_precoder(&h).unwrap();
        let residual = h.matrix() * &p.unnormalized - DMatrix::<Complex64>::identity(3, 3);
        assert!(residual.norm() < 1e-10);
        for col in p.columns.column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn precoder_rejects_rank_deficiency() {
        let row = [c(1.0, 0.5), c(-0.2, 1.0), c(0.3, 0.3)];
        let h = DMatrix::from_fn(2, 3, |_, j| row[j]);
        assert!(matches!(
            zf_precoder(&ChannelMatrix::from_matrix(h)),
            Err(Error::Singular(_))
        ));
        let wide = ChannelMatrix::gaussian(4, 3, &mut rng(2));
        assert!(matches!(zf_precoder(&wide), Err(Error::Singular(_))));
    }

    #[test]
    fn dl_power_examples() {
        let h = ChannelMatrix::from_matrix(DMatrix::from_element(1, 1, c(0.6, 0.8)));
        assert!((dl_received_power(&h, 1.0, 1.0, 4.0, 0).unwrap() - 1.0).abs() < 1e-12);

        let h = ChannelMatrix::gaussian(2, 4, &mut rng(3));
        let near = dl_received_power(&h, 1.0, 100.0, 4.0, 1).unwrap();
        let far = dl_received_power(&h, 1.0, 200.0, 4.0, 1).unwrap();
        assert!((near / far - 16.0).abs() < 1e-9);
    }

    #[test]
    fn dl_power_mean_matches_erlang() {
        let mut r = rng(4);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| dl_received_power(&ChannelMatrix::gaussian(2, 4, &mut r), 1.0, 1.0, 4.0, 0).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean / 1.5 - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn erlang_examples() {
        for (l, k, want) in [(4, 1, 4.0), (8, 4, 5.0), (3, 3, 1.0)] {
            let m = erlang_mean_check(l, k, 100_000, &mut rng(10 + l as u64)).unwrap();
            assert!((m / want - 1.0).abs() < 0.02, "L={l} K={k}: {m}");
        }
        assert!(erlang_mean_check(2, 3, 10, &mut rng(0)).is_err());
    }

    #[test]
    fn wishart_examples() {
        let m = wishart_trace_mean(8, 4, 100_000, &mut rng(20)).unwrap();
        assert!((m - 1.0).abs() < 0.02, "{m}");
        let m = wishart_trace_mean(100, 10, 100_000, &mut rng(21)).unwrap();
        assert!((m / (10.0 / 90.0) - 1.0).abs() < 0.02, "{m}");
        assert!(matches!(
            wishart_trace_mean(4, 4, 10, &mut rng(0)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn wishart_heavy_tail_near_boundary() {
        // L = K + 1: finite mean, infinite variance; wide tolerance.
        let m = wishart_trace_mean(5, 4, 1_000_000, &mut rng(22)).unwrap();
        assert!((m / 4.0 - 1.0).abs() < 0.10, "{m}");
    }

    #[test]
    fn detector_nulls_intra_cell_interference() {
        let mut r = rng(30);
        for _ in 0..50 {
            let g = ChannelMatrix::gaussian(8, 3, &mut r);
            let det = zf_detector(&g).unwrap();
            let a = det.matrix();
            let prod = a.adjoint() * g.matrix();
            assert!((prod - DMatrix::<Complex64>::identity(3, 3)).norm() < 1e-10);
            for k in 0..3 {
                let col = a.column(k);
                assert!((col.norm_squared() - det.column_norm_sq(k)).abs() < 1e-12 * det.column_norm_sq(k).max(1.0));
                for j in 0..3 {
                    if j != k {
                        assert!(col.dotc(&g.matrix().column(j)).norm() < 1e-9);
                    }
                }
            }
            let h = gaussian_vector(8, &mut r);
            let direct = a.adjoint() * &h;
            assert!((det.project(&h) - direct).norm() < 1e-10);
        }
    }

    #[test]
    fn detector_examples() {
        let g = ChannelMatrix::from_matrix(DMatrix::from_element(1, 1, c(2.0, 0.0)));
        let det = zf_detector(&g).unwrap();
        assert!((det.matrix()[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        let col = [c(1.0, 0.0), c(0.0, 1.0), c(1.0, 1.0)];
        let g = DMatrix::from_fn(3, 2, |i, _| col[i]);
        assert!(zf_detector(&ChannelMatrix::from_matrix(g)).is_err());
    }

    #[test]
    fn normalized_interference_variate_is_standard() {
        // a^H h / ||a|| over independent h is CN(0, 1).
        let mut r = rng(31);
        let n = 100_000;
        let (mut sum, mut sum_sq) = (Complex64::new(0.0, 0.0), 0.0);
        for i in 0..n {
            // Refresh G every 100 draws: the claim holds conditionally on a.
            let det = zf_detector(&ChannelMatrix::gaussian(6, 2, &mut rng(1000 + (i / 100) as u64))).unwrap();
            let h = gaussian_vector(6, &mut r);
            let y = det.project(&h)[0] / det.column_norm_sq(0).sqrt();
            sum += y;
            sum_sq += y.norm_sqr();
        }
        let mean = sum / n as f64;
        assert!(mean.norm() < 0.02, "{mean}");
        assert!((sum_sq / n as f64 - 1.0).abs() < 0.02);
    }
}
