//! The complex harmonic-oscillator-Gaussian trap, its PT check, and the
//! analytic droplet that anchors the whole test suite.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, RealField, SharedGrid};
use crate::special::erf;

/// All model coefficients; the single source of truth for building the trap
/// and the stationary equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Strength of the logarithmic nonlinearity, > 0.
    pub sigma: f64,
    /// Rotation frequency of the spinning frame.
    pub omega: f64,
    /// Axis-Gaussian well depth of the real trap part.
    pub v0: f64,
    /// Radial-Gaussian bump of the real trap part.
    pub v1: f64,
    /// Gain-loss strength (imaginary trap part).
    pub w0: f64,
    /// Chemical potential of stationary solves.
    pub mu: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.sigma, self.omega, self.v0, self.v1, self.w0, self.mu];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite model parameter".into()));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma = {} must be positive",
                self.sigma
            )));
        }
        Ok(())
    }

    pub fn with_mu(self, mu: f64) -> Self {
        ModelParams { mu, ..self }
    }

    pub fn with_omega(self, omega: f64) -> Self {
        ModelParams { omega, ..self }
    }
}

/// Real and imaginary parts of the trap sampled on a grid.
#[derive(Debug, Clone)]
pub struct PotentialFields {
    pub v: RealField,
    pub w: RealField,
}

/// V = r^2 (1 + V1 e^{-r^2}) + V0 (e^{-2x^2} + e^{-2y^2}),
/// W = W0 (x e^{-x^2} + y e^{-y^2}).
pub fn build_pt_hog(grid: &SharedGrid, p: &ModelParams) -> PotentialFields {
    let v = RealField::from_fn(grid, |x, y| {
        let r2 = x * x + y * y;
        r2 * (1.0 + p.v1 * (-r2).exp()) + p.v0 * ((-2.0 * x * x).exp() + (-2.0 * y * y).exp())
    });
    let w = RealField::from_fn(grid, |x, y| {
        p.w0 * (x * (-x * x).exp() + y * (-y * y).exp())
    });
    PotentialFields { v, w }
}

/// Worst-case PT-symmetry violations over grid-exact mirror pairs.
#[derive(Debug, Clone, Copy)]
pub struct PtReport {
    /// max |V(r) - V(-r)|
    pub max_v_asymmetry: f64,
    /// max |W(r) + W(-r)|
    pub max_w_symmetry: f64,
}

impl PtReport {
    pub fn is_pt(&self, tol: f64) -> bool {
        self.max_v_asymmetry < tol && self.max_w_symmetry < tol
    }
}

pub fn check_pt(fields: &PotentialFields) -> PtReport {
    let grid = fields.v.grid();
    let mut v_asym: f64 = 0.0;
    let mut w_sym: f64 = 0.0;
    for j in 0..grid.nx() {
        for k in 0..grid.ny() {
            if let Some((mj, mk)) = grid.mirror(j, k) {
                let i = grid.idx(j, k);
                let m = grid.idx(mj, mk);
                v_asym = v_asym.max((fields.v.data()[i] - fields.v.data()[m]).abs());
                w_sym = w_sym.max((fields.w.data()[i] + fields.w.data()[m]).abs());
            }
        }
    }
    PtReport {
        max_v_asymmetry: v_asym,
        max_w_symmetry: w_sym,
    }
}

/// The analytic droplet
/// phi = exp{ -r^2/2 - i (sqrt(pi) W0 / 8) [erf(x) + erf(y)] }.
///
/// Solves the stationary equation exactly when combined with
/// [`exact_params`]; its density is e^{-r^2} for every `w0`.
pub fn exact_droplet(grid: &SharedGrid, w0: f64) -> ComplexField {
    let c = std::f64::consts::PI.sqrt() * w0 / 8.0;
    ComplexField::from_fn(grid, |x, y| {
        let amp = (-(x * x + y * y) / 2.0).exp();
        Complex64::from_polar(amp, -c * (erf(x) + erf(y)))
    })
}

/// Parameter tuple under which [`exact_droplet`] is stationary:
/// V0 = -W0^2/16, V1 = sigma, mu = 2, omega = 0.
pub fn exact_params(sigma: f64, w0: f64) -> Result<ModelParams> {
    let p = ModelParams {
        sigma,
        omega: 0.0,
        v0: -w0 * w0 / 16.0,
        v1: sigma,
        w0,
        mu: 2.0,
    };
    p.validate()?;
    Ok(p)
}
