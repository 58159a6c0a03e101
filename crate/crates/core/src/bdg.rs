//! Bogoliubov-de Gennes linear stability: the block operator
//! [[L1, L2], [-L2*, -L1*]] around a stationary state, its spectrum, and
//! the stable/unstable classification.
//!
//! L1 = -lap + i omega r.grad + (V+iW) + sigma rho (2 ln rho + 1) - mu,
//! L2 = sigma phi^2 (ln rho + 1); starred operators carry conjugated
//! coefficients (potential and rotation), exactly as the block structure
//! is written.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, SharedGrid};
use crate::linalg::dense;
use crate::linalg::krylov::{self, ArnoldiOptions};
use crate::linspec::fourier_shift_inverse_block;
use crate::potential::{build_pt_hog, ModelParams, PotentialFields};
use crate::stationary::{OperatorCtx, StationaryState};

pub use crate::stationary::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dense,
    Arnoldi,
}

#[derive(Debug, Clone)]
pub struct BdgSpectrum {
    /// Computed eigenvalues, sorted by distance from the origin.
    pub eigenvalues: Vec<Complex64>,
    /// Residual per eigenvalue (relative, from the block operator itself).
    pub residuals: Vec<f64>,
    pub max_im: f64,
    pub n_computed: usize,
    pub method: Method,
    pub mu: f64,
}

#[derive(Debug, Clone)]
pub struct BdgOptions {
    /// Eigenpairs requested per Arnoldi shift.
    pub n: usize,
    /// Shift-invert targets; imaginary shifts respect the (eps, -eps*)
    /// symmetry and keep the inner solves away from the exact zero mode.
    pub shifts: Vec<Complex64>,
    /// Grids with at most this many points use the dense oracle.
    pub dense_threshold: usize,
    /// The dense path reports eigenvalues with |eps| below this fraction of
    /// the kinetic band edge (max kx^2 + max ky^2). Modes near the band edge
    /// are dominated by truncation and acquire spurious imaginary parts
    /// (they show no counterpart in direct time evolution).
    pub band_fraction: f64,
    pub tol: f64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub max_subspace: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for BdgOptions {
    fn default() -> Self {
        BdgOptions {
            n: 20,
            shifts: vec![Complex64::new(0.0, 0.35), Complex64::new(0.0, 1.2)],
            dense_threshold: 34 * 34,
            band_fraction: 0.25,
            tol: 1e-7,
            inner_tol: 1e-10,
            inner_max_iter: 1500,
            max_subspace: 64,
            max_restarts: 40,
            seed: 13,
        }
    }
}

pub(crate) struct BdgCtx {
    pub ctx: OperatorCtx,
    pub params: ModelParams,
    pub c1: Vec<f64>,
    pub l2: Vec<Complex64>,
    pub n: usize,
}

impl BdgCtx {
    pub fn new(grid: &SharedGrid, fields: &PotentialFields, state: &StationaryState) -> Self {
        let ctx = OperatorCtx::new(grid, fields);
        let (c1, l2) = ctx.jacobian_coeffs(&state.params, state.phi.data());
        BdgCtx {
            ctx,
            params: state.params,
            c1,
            l2,
            n: grid.len(),
        }
    }

    /// Block apply on stacked [u; v].
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.n;
        let (xu, xv) = x.split_at(n);
        let (yu, yv) = y.split_at_mut(n);
        let p = &self.params;
        // L1 u + L2 v
        self.ctx.kinetic_trap(xu, yu, 1.0, p.mu, p.omega);
        for i in 0..n {
            yu[i] += self.c1[i] * xu[i] + self.l2[i] * xv[i];
        }
        // -(L2* u + L1* v); starred = conjugated coefficients
        self.ctx.kinetic_trap(xv, yv, -1.0, p.mu, -p.omega);
        for i in 0..n {
            yv[i] = -(yv[i] + self.c1[i] * xv[i] + self.l2[i].conj() * xu[i]);
        }
    }
}

/// (L1 u + L2 v, -L2* u - L1* v) for explicit operands.
pub fn apply_bdg(
    fields: &PotentialFields,
    state: &StationaryState,
    u: &ComplexField,
    v: &ComplexField,
) -> Result<(ComplexField, ComplexField)> {
    let grid = state.phi.grid();
    if !grid.same_geometry(u.grid()) || !grid.same_geometry(v.grid()) {
        return Err(Error::GridMismatch);
    }
    let bctx = BdgCtx::new(grid, fields, state);
    let n = grid.len();
    let mut x = Vec::with_capacity(2 * n);
    x.extend_from_slice(u.data());
    x.extend_from_slice(v.data());
    let mut y = vec![Complex64::default(); 2 * n];
    bctx.apply(&x, &mut y);
    let out_u = ComplexField::from_data(grid, y[..n].to_vec())?;
    let out_v = ComplexField::from_data(grid, y[n..].to_vec())?;
    Ok((out_u, out_v))
}

/// BdG spectrum of a converged stationary state: eigenvalues nearest the
/// origin plus any low-lying complex quartets, via two shift-inverted
/// Arnoldi runs (dense solve on oracle-sized grids).
pub fn bdg_spectrum(state: &StationaryState, opts: &BdgOptions) -> Result<BdgSpectrum> {
    let grid = state.phi.grid().clone();
    let fields = build_pt_hog(&grid, &state.params);
    let bctx = BdgCtx::new(&grid, &fields, state);
    let n = grid.len();
    let dim = 2 * n;

    let (values, residuals, method) = if n <= opts.dense_threshold {
        let kx_max = grid.kx().iter().cloned().fold(0.0_f64, f64::max);
        let ky_max = grid.ky().iter().cloned().fold(0.0_f64, f64::max);
        let band_cut = opts.band_fraction * (kx_max * kx_max + ky_max * ky_max);
        let mut apply = |x: &[Complex64], y: &mut [Complex64]| bctx.apply(x, y);
        let mat = dense::operator_matrix(&mut apply, dim);
        let (vals, vecs) = dense::eig_sorted(&mat)?;
        let mut order: Vec<usize> = (0..vals.len())
            .filter(|&i| vals[i].norm() <= band_cut)
            .collect();
        order.sort_by(|&a, &b| vals[a].norm().total_cmp(&vals[b].norm()));
        let mut values = Vec::with_capacity(order.len());
        let mut residuals = Vec::with_capacity(order.len());
        let mut tmp = vec![Complex64::default(); dim];
        for &i in &order {
            values.push(vals[i]);
            bctx.apply(&vecs[i], &mut tmp);
            for (t, x) in tmp.iter_mut().zip(&vecs[i]) {
                *t -= vals[i] * x;
            }
            residuals.push(tmp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        }
        (values, residuals, Method::Dense)
    } else {
        let mut pool: Vec<Vec<Complex64>> = Vec::new();
        for (si, &shift) in opts.shifts.iter().enumerate() {
            let mut inner_fail = 0usize;
            let mut apply_si = |x: &[Complex64], y: &mut [Complex64]| {
                let mut apply_a = |p: &[Complex64], q: &mut [Complex64]| {
                    bctx.apply(p, q);
                    for (qi, pi) in q.iter_mut().zip(p) {
                        *qi -= shift * pi;
                    }
                };
                let c = state.params.mu.abs().max(1.0);
                let mut precond = |p: &[Complex64], q: &mut [Complex64]| {
                    fourier_shift_inverse_block(&grid, c, p, q);
                };
                y.iter_mut().for_each(|z| *z = Complex64::default());
                let stats = krylov::bicgstab(
                    &mut apply_a,
                    &mut precond,
                    x,
                    y,
                    opts.inner_tol,
                    opts.inner_max_iter,
                );
                if !stats.converged {
                    inner_fail += 1;
                }
            };
            let arnoldi = ArnoldiOptions {
                n_wanted: opts.n,
                max_subspace: opts.max_subspace,
                max_restarts: opts.max_restarts,
                tol: 1e-10,
                seed: opts.seed + si as u64,
            };
            let locked = krylov::eigs_largest(&mut apply_si, dim, &arnoldi)?;
            pool.extend(locked.into_iter().map(|p| p.vector));
            if inner_fail > 0 {
                log::warn!(
                    "bdg shift {shift}: {inner_fail} inner solves missed tolerance; \
                     residuals below reflect the true operator"
                );
            }
        }
        let mut apply = |x: &[Complex64], y: &mut [Complex64]| bctx.apply(x, y);
        let refined = krylov::subspace_eig(&mut apply, &pool, dim)?;
        // keep only residual-converged pairs: Ritz values at the edge of the
        // captured region are not eigenvalues and must not enter max_im
        let accept = opts.tol * (1.0 + state.params.mu.abs());
        let mut kept: Vec<&krylov::RitzPair> =
            refined.iter().filter(|p| p.residual <= accept).collect();
        let dropped = refined.len() - kept.len();
        if dropped > 0 {
            log::debug!("bdg: dropped {dropped} unconverged Ritz pairs (tol {accept:.2e})");
        }
        if kept.len() < opts.n {
            return Err(Error::EigsNoConvergence {
                restarts: opts.max_restarts,
                best: refined.iter().map(|p| p.residual).collect(),
            });
        }
        kept.sort_by(|a, b| a.value.norm().total_cmp(&b.value.norm()));
        let values: Vec<Complex64> = kept.iter().map(|p| p.value).collect();
        let residuals: Vec<f64> = kept.iter().map(|p| p.residual).collect();
        (values, residuals, Method::Arnoldi)
    };

    let max_im = values.iter().map(|e| e.im.abs()).fold(0.0_f64, f64::max);
    let n_computed = values.len();
    Ok(BdgSpectrum {
        eigenvalues: values,
        residuals,
        max_im,
        n_computed,
        method,
        mu: state.params.mu,
    })
}

/// Stable iff max |Im eps| stays below `tol`.
pub fn classify(spec: &BdgSpectrum, tol: f64) -> Verdict {
    if spec.max_im < tol {
        Verdict::Stable
    } else {
        Verdict::Unstable
    }
}

/// Classification tolerance scaled by mu (discretization noise in Im eps
/// grows with stiffness).
pub fn default_classify_tol(mu: f64) -> f64 {
    1e-6 * mu.abs().max(1.0)
}

/// Worst pairing defect of the (eps, -eps*) symmetry over the origin-nearest
/// half of the computed set (the boundary of a Krylov-captured region may
/// lack partners; eigenvalues are sorted by |eps|, so the core is paired).
///
/// The numerical images of the exact zero mode sit at the solver's noise
/// radius and are their own mirrors only in exact arithmetic, so
/// eigenvalues inside the zero cluster (|eps| < 1e-5 max(1,|mu|)) are
/// excluded rather than reported as symmetry violations.
pub fn quartet_defect(spec: &BdgSpectrum) -> f64 {
    let zero_floor = 1e-5 * spec.mu.abs().max(1.0);
    let count = (spec.eigenvalues.len() / 2).max(8).min(spec.eigenvalues.len());
    let mut worst = 0.0_f64;
    for e in spec.eigenvalues.iter().take(count) {
        if e.norm() < zero_floor {
            continue;
        }
        let mirror = -e.conj();
        let nearest = spec
            .eigenvalues
            .iter()
            .map(|f| (f - mirror).norm())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(nearest);
    }
    worst
}

/// Attach BdG verdicts to every `stride`-th family point (and the ends).
pub fn annotate_family(
    curve: &mut crate::stationary::FamilyCurve,
    stride: usize,
    opts: &BdgOptions,
    tol: Option<f64>,
) -> Result<()> {
    let stride = stride.max(1);
    let last = curve.points.len().saturating_sub(1);
    for (i, point) in curve.points.iter_mut().enumerate() {
        if i % stride != 0 && i != last {
            continue;
        }
        let spec = bdg_spectrum(&point.state, opts)?;
        let verdict = classify(&spec, tol.unwrap_or_else(|| default_classify_tol(spec.mu)));
        point.state.stability = Some(verdict);
        point.stable = Some(verdict.is_stable());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;
    use crate::potential::exact_params;

    #[test]
    fn zero_field_decouples_to_linear_spectrum() {
        // with phi = 0 and omega = 0 the blocks decouple: eigenvalues are
        // {lambda_n - mu} and {-(lambda_n - mu)*}
        let g = Grid2::new(32, 32, 8.0, 8.0).unwrap();
        let p = exact_params(1.0, 1.0).unwrap();
        let fields = build_pt_hog(&g, &p);
        let zero_state = StationaryState {
            phi: ComplexField::zeros(&g),
            params: p,
            norm: 0.0,
            residual_inf: 0.0,
            family_tag: 0,
            stability: None,
        };
        let spec = bdg_spectrum(&zero_state, &BdgOptions::default()).unwrap();
        assert_eq!(spec.method, Method::Dense);

        let lin = crate::linspec::linear_eigs(
            &g,
            &fields,
            4,
            &crate::linspec::LinearEigOptions::default(),
        )
        .unwrap();
        for lam in &lin.eigenvalues {
            let shifted = lam - p.mu;
            let hit = spec
                .eigenvalues
                .iter()
                .any(|e| (e - shifted).norm() < 1e-6);
            let mirror = -(shifted).conj();
            let hit_mirror = spec
                .eigenvalues
                .iter()
                .any(|e| (e - mirror).norm() < 1e-6);
            assert!(hit && hit_mirror, "missing {shifted} or {mirror}");
        }
    }

    #[test]
    fn zero_operand_maps_to_zero() {
        let g = Grid2::new(32, 32, 8.0, 8.0).unwrap();
        let p = exact_params(1.0, 1.0).unwrap();
        let fields = build_pt_hog(&g, &p);
        let state = StationaryState {
            phi: crate::potential::exact_droplet(&g, 1.0),
            params: p,
            norm: std::f64::consts::PI,
            residual_inf: 0.0,
            family_tag: 1,
            stability: None,
        };
        let z = ComplexField::zeros(&g);
        let (u, v) = apply_bdg(&fields, &state, &z, &z).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        assert_eq!(v.max_abs(), 0.0);
    }

    #[test]
    fn classify_thresholds() {
        let spec = BdgSpectrum {
            eigenvalues: vec![],
            residuals: vec![],
            max_im: 0.0,
            n_computed: 0,
            method: Method::Dense,
            mu: 2.0,
        };
        assert_eq!(classify(&spec, 1e-6), Verdict::Stable);
        let spec = BdgSpectrum {
            max_im: 0.05,
            ..spec
        };
        assert_eq!(classify(&spec, 1e-6), Verdict::Unstable);
    }

    #[test]
    fn exact_droplet_zero_mode_is_in_kernel() {
        // (phi, -phi*) is an exact eigenvector at eps = 0
        let g = Grid2::new(64, 64, 8.0, 8.0).unwrap();
        let p = exact_params(1.0, 1.0).unwrap();
        let fields = build_pt_hog(&g, &p);
        let phi = crate::potential::exact_droplet(&g, 1.0);
        let state = StationaryState {
            phi: phi.clone(),
            params: p,
            norm: std::f64::consts::PI,
            residual_inf: 0.0,
            family_tag: 1,
            stability: None,
        };
        let minus_conj = ComplexField::from_data(
            &g,
            phi.data().iter().map(|z| -z.conj()).collect(),
        )
        .unwrap();
        let (u, v) = apply_bdg(&fields, &state, &phi, &minus_conj).unwrap();
        assert!(u.max_abs() < 1e-7, "u residual {:.3e}", u.max_abs());
        assert!(v.max_abs() < 1e-7, "v residual {:.3e}", v.max_abs());
    }
}
