//! Exponential integrals of complex argument.
//!
//! `e1` is the principal branch of `E1(z) = int_z^inf e^-t / t dt`, cut along
//! the negative real axis. `ei` is defined as `-E1(-z)`, which agrees with the
//! usual `Ei` on the negative real axis and continues it into the left
//! half-plane without the `i pi` jump that principal-branch `Ei` picks up off
//! the axis. That is the branch under which the alpha = 4 closed-form bound
//! equals its quadrature form.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 8.0;

/// Principal-branch `E1(z)`, `z != 0`, `z` not on the negative real axis.
pub fn e1(z: Complex64) -> Result<Complex64> {
    if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(invalid("z", format!("E1 is undefined at {z}")));
    }
    if z.im == 0.0 && z.re < 0.0 {
        return Err(invalid("z", "E1 branch cut: z on the negative real axis"));
    }
    if z.norm() <= SERIES_RADIUS {
        Ok(e1_series(z))
    } else {
        e1_continued_fraction(z)
    }
}

/// `Ei(z) := -E1(-z)`.
pub fn ei(z: Complex64) -> Result<Complex64> {
    e1(-z).map(|v| -v)
}

/// Real `E1(x)` for `x > 0`.
pub fn e1_real(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(invalid("x", format!("E1 needs x > 0, got {x}")));
    }
    e1(Complex64::new(x, 0.0)).map(|v| v.re)
}

fn e1_series(z: Complex64) -> Complex64 {
    // E1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..500 {
        let kf = k as f64;
        term *= -z / kf;
        let add = term / kf;
        sum += add;
        if add.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

fn e1_continued_fraction(z: Complex64) -> Result<Complex64> {
    // E1(z) = e^-z / (z + 1 - 1^2/(z + 3 - 2^2/(z + 5 - ...))), modified Lentz.
    let tiny = Complex64::new(1e-300, 0.0);
    let mut b = z + 1.0;
    let mut f = b;
    if f.norm() == 0.0 {
        f = tiny;
    }
    let mut c = f;
    let mut d = Complex64::new(0.0, 0.0);
    for n in 1..20_000 {
        let nf = n as f64;
        let a = Complex64::new(-nf * nf, 0.0);
        b += 2.0;
        d = b + a * d;
        if d.norm() == 0.0 {
            d = tiny;
        }
        c = b + a / c;
        if c.norm() == 0.0 {
            c = tiny;
        }
        d = d.inv();
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).norm() < 1e-16 {
            return Ok((-z).exp() / f);
        }
    }
    Err(Error::NoConvergence {
        iterations: 20_000,
        residual: f64::NAN,
    })
}
