//! Scalar parameters of the two-tier network and the small enums shared by
//! every module.

use std::fmt;

use crate::error::{invalid, Result};

/// Base-station tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tier {
    Macro,
    Small,
}

impl Tier {
    pub fn other(self) -> Tier {
        match self {
            Tier::Macro => Tier::Small,
            Tier::Small => Tier::Macro,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Tier::Macro => "mbs",
            Tier::Small => "sbs",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Cell association policy.
///
/// `Decoupled` picks the uplink BS by strongest uplink received power (the
/// nearest BS of either tier). `Coupled` reuses the downlink choice, made by
/// strongest average downlink received power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessMode {
    Decoupled,
    Coupled,
}

impl AccessMode {
    pub fn label(self) -> &'static str {
        match self {
            AccessMode::Decoupled => "da",
            AccessMode::Coupled => "ca",
        }
    }
}

impl fmt::Display for AccessMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// All scalar parameters of the model. Densities are per m², powers in W,
/// distances in m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub lambda_m: f64,
    pub lambda_s: f64,
    pub lambda_u: f64,
    pub p_m: f64,
    pub p_s: f64,
    /// User transmit power.
    pub q: f64,
    pub sigma2: f64,
    /// Path-loss exponent, must exceed 2.
    pub alpha: f64,
    /// Radius of the interference region around a BS.
    pub big_r: f64,
    /// Protective radius: no users closer than this to any BS.
    pub r_p: f64,
    pub l_m: usize,
    pub l_s: usize,
}

impl Default for NetworkConfig {
    /// Simulation parameters used for every figure unless a sweep overrides
    /// them: `q = p_s = 0.1 W`, `sigma2 = 1e-12`, `lambda_m = 1e-7`,
    /// `alpha = 4`, `big_r = 2000 m`, `r_p = 30 m`, `p_m = 40 W`,
    /// `lambda_s = 2 lambda_m`, `lambda_u = 10 lambda_m`, 100 macro and 50
    /// small-cell antennas.
    fn default() -> Self {
        NetworkConfig {
            lambda_m: 1e-7,
            lambda_s: 2e-7,
            lambda_u: 1e-6,
            p_m: 40.0,
            p_s: 0.1,
            q: 0.1,
            sigma2: 1e-12,
            alpha: 4.0,
            big_r: 2000.0,
            r_p: 30.0,
            l_m: 100,
            l_s: 50,
        }
    }
}

/// Names of the configuration keys, in echo order.
pub const FIELD_NAMES: [&str; 12] = [
    "lambda_m", "lambda_s", "lambda_u", "p_m", "p_s", "q", "sigma2", "alpha", "big_r", "r_p",
    "l_m", "l_s",
];

impl NetworkConfig {
    pub fn density(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Macro => self.lambda_m,
            Tier::Small => self.lambda_s,
        }
    }

    pub fn power(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Macro => self.p_m,
            Tier::Small => self.p_s,
        }
    }

    pub fn antennas(&self, tier: Tier) -> usize {
        match tier {
            Tier::Macro => self.l_m,
            Tier::Small => self.l_s,
        }
    }

    /// Combined BS density `lambda_m + lambda_s`.
    pub fn bs_density(&self) -> f64 {
        self.lambda_m + self.lambda_s
    }

    /// Every range violation, by field name.
    pub fn violations(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let positive = [
            ("lambda_m", self.lambda_m),
            ("lambda_s", self.lambda_s),
            ("lambda_u", self.lambda_u),
            ("p_m", self.p_m),
            ("p_s", self.p_s),
            ("q", self.q),
            ("sigma2", self.sigma2),
            ("big_r", self.big_r),
            ("r_p", self.r_p),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                errs.push(format!("{name} must be a positive finite number (got {v})"));
            }
        }
        if !(self.alpha.is_finite() && self.alpha > 2.0) {
            errs.push(format!("alpha must exceed 2 (got {})", self.alpha));
        }
        if self.r_p.is_finite() && self.big_r.is_finite() && self.r_p >= self.big_r {
            errs.push(format!(
                "r_p must be smaller than big_r (got r_p={}, big_r={})",
                self.r_p, self.big_r
            ));
        }
        if self.l_m < 1 {
            errs.push("l_m must be at least 1".to_string());
        }
        if self.l_s < 1 {
            errs.push("l_s must be at least 1".to_string());
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.violations();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::Config(errs))
        }
    }

    /// `(name, value)` pairs in [`FIELD_NAMES`] order. Values use the shortest
    /// round-trip decimal representation.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lambda_m", self.lambda_m.to_string()),
            ("lambda_s", self.lambda_s.to_string()),
            ("lambda_u", self.lambda_u.to_string()),
            ("p_m", self.p_m.to_string()),
            ("p_s", self.p_s.to_string()),
            ("q", self.q.to_string()),
            ("sigma2", self.sigma2.to_string()),
            ("alpha", self.alpha.to_string()),
            ("big_r", self.big_r.to_string()),
            ("r_p", self.r_p.to_string()),
            ("l_m", self.l_m.to_string()),
            ("l_s", self.l_s.to_string()),
        ]
    }

    /// Set a field from its textual value. Integer fields reject fractional
    /// input.
    pub fn set_field(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |field: &'static str| -> Result<usize> {
            if value.is_finite() && value >= 0.0 && value.fract() == 0.0 && value <= 1e9 {
                Ok(value as usize)
            } else {
                Err(invalid(field, format!("expected a non-negative integer, got {value}")))
            }
        };
        match name {
            "lambda_m" => self.lambda_m = value,
            "lambda_s" => self.lambda_s = value,
            "lambda_u" => self.lambda_u = value,
            "p_m" => self.p_m = value,
            "p_s" => self.p_s = value,
            "q" => self.q = value,
            "sigma2" => self.sigma2 = value,
            "alpha" => self.alpha = value,
            "big_r" => self.big_r = value,
            "r_p" => self.r_p = value,
            "l_m" => self.l_m = as_count("l_m")?,
            "l_s" => self.l_s = as_count("l_s")?,
            other => {
                return Err(crate::Error::Config(vec![format!("unknown key `{other}`")]));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = NetworkConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.q, 0.1);
        assert_eq!(cfg.p_s, 0.1);
        assert_eq!(cfg.sigma2, 1e-12);
        assert_eq!(cfg.lambda_m, 1e-7);
        assert_eq!(cfg.alpha, 4.0);
        assert_eq!(cfg.big_r, 2000.0);
        assert_eq!(cfg.r_p, 30.0);
    }

    #[test]
    fn violations_are_aggregated() {
        let cfg = NetworkConfig {
            alpha: 1.5,
            p_m: -1.0,
            r_p: 3000.0,
            l_s: 0,
            ..NetworkConfig::default()
        };
        let errs = cfg.violations();
        assert_eq!(errs.len(), 4, "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("alpha must exceed 2")));
        assert!(errs.iter().any(|e| e.starts_with("p_m")));
    }

    #[test]
    fn echo_round_trips() {
        let cfg = NetworkConfig {
            lambda_s: 0.1e-6 * 3.0,
            ..NetworkConfig::default()
        };
        let mut back = NetworkConfig::default();
        for (k, v) in cfg.echo() {
            back.set_field(k, v.parse().unwrap()).unwrap();
        }
        assert_eq!(cfg, back);
    }

    #[test]
    fn counts_reject_fractions() {
        let mut cfg = NetworkConfig::default();
        assert!(cfg.set_field("l_m", 10.5).is_err());
        assert!(cfg.set_field("bogus", 1.0).is_err());
    }
}
