//! Initial data catalog and the mollify-and-cut-off regularization of data.

use alloc::boxed::Box;

use crate::drift::mollify_scalar_at;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::linalg::Vector;

/// `C^∞` step: 0 for `s ≤ 0`, 1 for `s ≥ 1`.
fn smooth_step(s: f64) -> f64 {
    let f = |t: f64| if t > 0.0 { libm::exp(-1.0 / t) } else { 0.0 };
    let a = f(s);
    let b = f(1.0 - s);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// Radial cut-off `η`: 1 on the unit ball, 0 outside the ball of radius 2.
pub fn cutoff(r: f64) -> f64 {
    smooth_step(2.0 - r)
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    /// `a · exp(−|x − c|² / (2w²))`.
    Gaussian { center: Vector, width: f64, amplitude: f64 },
    /// Product over coordinates of `½(tanh((r + x_i)/δ) + tanh((r − x_i)/δ))`.
    SmoothedIndicator { half_width: f64, edge: f64 },
    /// `|x|^{1+α} · η(|x| / R)`: in `W^{1,2p}` and `C^{1,α}` but not `C²`.
    PowerCusp { alpha: f64, radius: f64 },
    /// `η(ε x) · (u₀ ∗ ρ_ε)(x)` with `ρ_ε` the Gaussian of standard deviation `ε`.
    Mollified { base: Box<InitialData>, epsilon: f64 },
}

impl InitialData {
    pub fn gaussian(center: Vector, width: f64, amplitude: f64) -> Self {
        InitialData::Gaussian { center, width, amplitude }
    }

    /// Regularized data `η_ε · (u₀ ∗ ρ_ε)`.
    pub fn mollify(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::config(alloc::format!("mollification width must be positive, got {epsilon}")));
        }
        Ok(InitialData::Mollified { base: Box::new(self.clone()), epsilon })
    }

    /// Convolution with `N(0, σ² I)` only, without the cut-off.
    fn convolved(&self, x: &Vector, sigma: f64) -> f64 {
        match self {
            InitialData::Zero => 0.0,
            InitialData::Gaussian { center, width, amplitude } => {
                let var = width * width + sigma * sigma;
                let shrink = libm::pow(width * width / var, 0.5 * x.dim() as f64);
                amplitude * shrink * libm::exp(-(*x - *center).norm_squared() / (2.0 * var))
            }
            _ => mollify_scalar_at(&|y: &Vector| self.eval(y), x, sigma),
        }
    }

    pub fn eval(&self, x: &Vector) -> f64 {
        match self {
            InitialData::Zero => 0.0,
            InitialData::Gaussian { .. } => self.convolved(x, 0.0),
            InitialData::SmoothedIndicator { half_width, edge } => x
                .as_slice()
                .iter()
                .map(|xi| 0.5 * (libm::tanh((half_width + xi) / edge) + libm::tanh((half_width - xi) / edge)))
                .product(),
            InitialData::PowerCusp { alpha, radius } => {
                let r = x.norm();
                libm::pow(r, 1.0 + alpha) * cutoff(r / radius)
            }
            InitialData::Mollified { base, epsilon } => {
                cutoff(epsilon * x.norm()) * base.convolved(x, *epsilon)
            }
        }
    }
}

impl ScalarField for InitialData {
    fn eval(&self, x: &Vector) -> f64 {
        InitialData::eval(self, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.0), 1.0);
        assert_eq!(cutoff(1.0), 1.0);
        assert_eq!(cutoff(2.0), 0.0);
        assert_eq!(cutoff(3.5), 0.0);
        assert!(cutoff(1.5) > 0.0 && cutoff(1.5) < 1.0);
    }

    #[test]
    fn mollified_gaussian_closed_form_matches_quadrature() {
        let g = InitialData::gaussian(Vector::from_slice(&[0.3]), 0.7, 1.5);
        let x = Vector::from_slice(&[0.9]);
        let closed = g.convolved(&x, 0.2);
        let quad = mollify_scalar_at(&|y: &Vector| g.eval(y), &x, 0.2);
        assert!((closed - quad).abs() < 1e-4, "{closed} vs {quad}");
    }

    #[test]
    fn mollified_data_converges_pointwise() {
        let u0 = InitialData::PowerCusp { alpha: 0.5, radius: 2.0 };
        let x = Vector::from_slice(&[0.4, -0.2]);
        let mut prev = f64::INFINITY;
        for eps in [0.4, 0.2, 0.1, 0.05] {
            let err = (u0.mollify(eps).unwrap().eval(&x) - u0.eval(&x)).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 5e-3);
    }

    #[test]
    fn rejects_nonpositive_width() {
        assert!(InitialData::Zero.mollify(0.0).is_err());
    }
}
