//! Homogeneous Poisson deployments on a disk and nearest-BS distance laws.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::config::{NetworkConfig, Tier};
use crate::error::{invalid, Error, Result};

/// Planar coordinate in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Uniform point on the disk of radius `radius` centred at the origin.
pub fn uniform_in_disk<R: Rng + ?Sized>(radius: f64, rng: &mut R) -> Point {
    let r = radius * rng.random::<f64>().sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    Point::new(r * theta.cos(), r * theta.sin())
}

/// Sample a homogeneous PPP of the given intensity on the disk of radius
/// `radius` around the origin: a Poisson(`density * pi * radius^2`) number of
/// i.i.d. uniform points.
pub fn sample_ppp<R: Rng + ?Sized>(density: f64, radius: f64, rng: &mut R) -> Result<Vec<Point>> {
    if !(density.is_finite() && density > 0.0) {
        return Err(invalid("density", format!("must be positive, got {density}")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(invalid("radius", format!("must be positive, got {radius}")));
    }
    let mean = density * PI * radius * radius;
    let count = Poisson::new(mean)
        .map_err(|e| invalid("density", e.to_string()))?
        .sample(rng) as usize;
    Ok((0..count).map(|_| uniform_in_disk(radius, rng)).collect())
}

/// Index and distance of the closest BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub index: usize,
    pub distance: f64,
}

/// Closest point of `bs_points` to `point`; ties go to the lowest index.
pub fn nearest(point: &Point, bs_points: &[Point]) -> Result<Nearest> {
    let mut best: Option<Nearest> = None;
    for (index, bs) in bs_points.iter().enumerate() {
        let distance = point.dist(bs);
        match best {
            Some(b) if b.distance <= distance => {}
            _ => best = Some(Nearest { index, distance }),
        }
    }
    best.ok_or_else(|| Error::InvalidRealization("no base station in the deployment".into()))
}

pub fn nearest_distance(point: &Point, bs_points: &[Point]) -> Result<f64> {
    nearest(point, bs_points).map(|n| n.distance)
}

/// `P(r_nearest <= r) = 1 - exp(-pi * density * r^2)`.
pub fn nearest_distance_cdf(r: f64, density: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(invalid("r", format!("distance must be non-negative, got {r}")));
    }
    Ok(-(-PI * density * r * r).exp_m1())
}

/// Density companion of [`nearest_distance_cdf`].
pub fn nearest_distance_pdf(r: f64, density: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(invalid("r", format!("distance must be non-negative, got {r}")));
    }
    Ok(2.0 * PI * density * r * (-PI * density * r * r).exp())
}

/// One sampled realization.
///
/// When a tier is tagged, its BS number 0 sits at the origin (the typical
/// cell). All other points are i.i.d. over the window disk.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub mbs_points: Vec<Point>,
    pub sbs_points: Vec<Point>,
    pub user_points: Vec<Point>,
    pub window: f64,
    pub tagged: Option<Tier>,
    pub seed: u64,
}

/// Radius of the sampling window.
///
/// Users and BSs are drawn on a disk larger than the interference radius so
/// that every BS whose interference region or serving cell reaches the tagged
/// area sees an unclipped neighbourhood: two interference radii plus a guard
/// band in which the sparser tier leaves a void with probability below 1e-6.
pub fn simulation_window(cfg: &NetworkConfig) -> f64 {
    let sparse = cfg.lambda_m.min(cfg.lambda_s);
    let guard = (1e6f64.ln() / (PI * sparse)).sqrt();
    2.0 * cfg.big_r + guard
}

impl Deployment {
    /// Sample all three processes on `window` with the given tier tagged at
    /// the origin, then drop every user inside the protective radius of any BS.
    pub fn sample(cfg: &NetworkConfig, window: f64, tagged: Option<Tier>, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::sample_with(cfg, window, tagged, seed, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(
        cfg: &NetworkConfig,
        window: f64,
        tagged: Option<Tier>,
        seed: u64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut mbs_points = Vec::new();
        let mut sbs_points = Vec::new();
        match tagged {
            Some(Tier::Macro) => mbs_points.push(Point::ORIGIN),
            Some(Tier::Small) => sbs_points.push(Point::ORIGIN),
            None => {}
        }
        mbs_points.extend(sample_ppp(cfg.lambda_m, window, rng)?);
        sbs_points.extend(sample_ppp(cfg.lambda_s, window, rng)?);
        let user_points = sample_ppp(cfg.lambda_u, window, rng)?;
        let mut dep = Deployment {
            mbs_points,
            sbs_points,
            user_points,
            window,
            tagged,
            seed,
        };
        dep.apply_protective_filter(cfg.r_p);
        Ok(dep)
    }

    pub fn bs_points(&self, tier: Tier) -> &[Point] {
        match tier {
            Tier::Macro => &self.mbs_points,
            Tier::Small => &self.sbs_points,
        }
    }

    /// Remove users closer than `r_p` to any BS of either tier.
    pub fn apply_protective_filter(&mut self, r_p: f64) {
        let bs: Vec<Point> = self
            .mbs_points
            .iter()
            .chain(self.sbs_points.iter())
            .copied()
            .collect();
        self.user_points
            .retain(|u| bs.iter().all(|b| u.dist(b) >= r_p));
    }
}
