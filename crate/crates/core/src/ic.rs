//! Initial displacement profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// f(x) = (a/2)·exp(−(x − b)² / (2s²))
pub fn ic_symmetric_gaussian(x: f64, a: f64, b: f64, s: f64) -> f64 {
    0.5 * a * (-(x - b) * (x - b) / (2.0 * s * s)).exp()
}

/// f(x) = a·[tanh(−b(x − s)) + tanh(b(x − 1 + s))]
pub fn ic_rounded_square(x: f64, a: f64, b: f64, s: f64) -> f64 {
    a * ((-b * (x - s)).tanh() + (b * (x - 1.0 + s)).tanh())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    SymmetricGaussian { a: f64, b: f64, s: f64 },
    RoundedSquare { a: f64, b: f64, s: f64 },
}

impl InitialCondition {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialCondition::SymmetricGaussian { s, .. } if !(s > 0.0) => {
                Err(Error::Config(format!("gaussian width s={s} must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            InitialCondition::SymmetricGaussian { a, b, s } => ic_symmetric_gaussian(x, a, b, s),
            InitialCondition::RoundedSquare { a, b, s } => ic_rounded_square(x, a, b, s),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::SymmetricGaussian { .. } => "symmetric_gaussian",
            InitialCondition::RoundedSquare { .. } => "rounded_square",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_values() {
        assert_eq!(ic_symmetric_gaussian(0.5, 1e-3, 0.5, 0.02), 5e-4);
        assert_eq!(ic_symmetric_gaussian(0.3, 2.0, 0.3, 0.1), 1.0);
        let side = 0.5 * 1e-3 * (-0.5f64).exp();
        assert!((ic_symmetric_gaussian(0.52, 1e-3, 0.5, 0.02) - side).abs() < 1e-15);
        assert!((ic_symmetric_gaussian(0.48, 1e-3, 0.5, 0.02) - side).abs() < 1e-15);
    }

    #[test]
    fn rounded_square_values() {
        let v = ic_rounded_square(0.5, 5e-4, 100.0, 0.6);
        let expect = 1e-3 * 10f64.tanh();
        assert!((v - expect).abs() < 1e-18);
        assert!((v - 1e-3).abs() < 1e-11);
        for eps in [0.05, 0.2, 0.37] {
            let l = ic_rounded_square(0.5 - eps, 5e-4, 100.0, 0.6);
            let r = ic_rounded_square(0.5 + eps, 5e-4, 100.0, 0.6);
            assert!((l - r).abs() < 1e-18);
        }
        assert_eq!(ic_rounded_square(0.3, 5e-4, 0.0, 0.6), 0.0);
        // small but nonzero at the clamped ends
        assert!(ic_rounded_square(0.0, 5e-4, 100.0, 0.6).abs() < 1e-6);
    }

    #[test]
    fn validation() {
        assert!(InitialCondition::SymmetricGaussian { a: 1.0, b: 0.5, s: 0.0 }.validate().is_err());
        assert!(InitialCondition::RoundedSquare { a: 1.0, b: 0.5, s: 0.0 }.validate().is_ok());
    }
}
