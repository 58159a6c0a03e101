//! Stationary droplets: Newton-CG solves of the rotating stationary
//! equation and fold-capable pseudo-arclength continuation of families.
//!
//! The unknown is treated as a real vector (split real/imaginary parts);
//! the Newton correction is the least-squares solution of the linearized
//! system by conjugate gradients on the normal equations with a Fourier
//! diagonal preconditioner.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{ComplexField, SharedGrid};
use crate::linalg::krylov;
use crate::linalg::vecops::{dot, nrm2};
use crate::linspec::fourier_shift_inverse;
use crate::linspec::LinearSpectrum;
use crate::observables::{count_density_peaks, rho_log_rho};
use crate::potential::{build_pt_hog, ModelParams, PotentialFields};

/// Linear-stability verdict attached to states by the BdG module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable)
    }
}

#[derive(Debug, Clone)]
pub struct StationaryState {
    pub phi: ComplexField,
    pub params: ModelParams,
    pub norm: f64,
    pub residual_inf: f64,
    /// Density-peak count (one- to four-component families).
    pub family_tag: usize,
    pub stability: Option<Verdict>,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_newton: usize,
    /// Relative tolerance of the inner CG solves (inexact Newton).
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    pub max_backtrack: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_newton: 50,
            inner_tol: 1e-3,
            inner_max_iter: 800,
            max_backtrack: 8,
        }
    }
}

/// Grid tables for the rotating stationary operator; model parameters are
/// passed per call so continuation can vary them without rebuilding.
pub(crate) struct OperatorCtx {
    pub grid: SharedGrid,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    /// x and y coordinates per flat index.
    pub xf: Vec<f64>,
    pub yf: Vec<f64>,
}

impl OperatorCtx {
    pub fn new(grid: &SharedGrid, fields: &PotentialFields) -> Self {
        let mut xf = Vec::with_capacity(grid.len());
        let mut yf = Vec::with_capacity(grid.len());
        for &x in grid.x() {
            for &y in grid.y() {
                xf.push(x);
                yf.push(y);
            }
        }
        OperatorCtx {
            grid: grid.clone(),
            v: fields.v.data().to_vec(),
            w: fields.w.data().to_vec(),
            xf,
            yf,
        }
    }

    /// Spectral first derivatives with zeroed Nyquist modes.
    pub fn derivatives(&self, input: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let mut spec = input.to_vec();
        fft::forward2(&mut spec, nx, ny);
        let kx_max = g.kx().iter().cloned().fold(0.0_f64, f64::max);
        let ky_max = g.ky().iter().cloned().fold(0.0_f64, f64::max);
        let mut dx = spec.clone();
        for (j, &kx) in g.kx().iter().enumerate() {
            let f = if kx.abs() >= kx_max {
                Complex64::default()
            } else {
                Complex64::new(0.0, kx)
            };
            for k in 0..ny {
                dx[j * ny + k] *= f;
            }
        }
        fft::inverse2(&mut dx, nx, ny);
        let mut dy = spec;
        for k in 0..ny {
            let ky = g.ky()[k];
            let f = if ky.abs() >= ky_max {
                Complex64::default()
            } else {
                Complex64::new(0.0, ky)
            };
            for j in 0..nx {
                dy[j * ny + k] *= f;
            }
        }
        fft::inverse2(&mut dy, nx, ny);
        (dx, dy)
    }

    /// `-lap f + i omega (y d/dx - x d/dy) f + (V + s_w iW - mu) f`.
    /// `s_w` is +1 for the operator and -1 for the complex-conjugated trap
    /// used by the adjoint.
    pub fn kinetic_trap(
        &self,
        input: &[Complex64],
        out: &mut [Complex64],
        s_w: f64,
        mu: f64,
        omega: f64,
    ) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        out.copy_from_slice(input);
        fft::forward2(out, nx, ny);
        for (j, &kx) in g.kx().iter().enumerate() {
            for (k, &ky) in g.ky().iter().enumerate() {
                out[j * ny + k] *= kx * kx + ky * ky;
            }
        }
        fft::inverse2(out, nx, ny);
        if omega != 0.0 {
            let (dx, dy) = self.derivatives(input);
            let iw = Complex64::new(0.0, omega);
            for i in 0..out.len() {
                out[i] += iw * (self.yf[i] * dx[i] - self.xf[i] * dy[i]);
            }
        }
        for i in 0..out.len() {
            out[i] += Complex64::new(self.v[i] - mu, s_w * self.w[i]) * input[i];
        }
    }

    /// Full nonlinear residual F(phi).
    pub fn residual(&self, p: &ModelParams, phi: &[Complex64], out: &mut [Complex64]) {
        self.kinetic_trap(phi, out, 1.0, p.mu, p.omega);
        for i in 0..out.len() {
            let rho = phi[i].norm_sqr();
            out[i] += p.sigma * rho_log_rho(rho) * phi[i];
        }
    }

    /// Linearization coefficients at `phi`:
    /// c1 = sigma rho (2 ln rho + 1) (real), l2 = sigma phi^2 (ln rho + 1).
    pub fn jacobian_coeffs(&self, p: &ModelParams, phi: &[Complex64]) -> (Vec<f64>, Vec<Complex64>) {
        let mut c1 = Vec::with_capacity(phi.len());
        let mut l2 = Vec::with_capacity(phi.len());
        for &z in phi {
            let rho = z.norm_sqr();
            if rho < 1e-300 {
                c1.push(0.0);
                l2.push(Complex64::default());
            } else {
                let ln = rho.ln();
                c1.push(p.sigma * rho * (2.0 * ln + 1.0));
                l2.push(p.sigma * z * z * (ln + 1.0));
            }
        }
        (c1, l2)
    }

    /// J delta = L1 delta + L2 conj(delta).
    pub fn apply_jacobian(
        &self,
        p: &ModelParams,
        c1: &[f64],
        l2: &[Complex64],
        delta: &[Complex64],
        out: &mut [Complex64],
    ) {
        self.kinetic_trap(delta, out, 1.0, p.mu, p.omega);
        for i in 0..out.len() {
            out[i] += c1[i] * delta[i] + l2[i] * delta[i].conj();
        }
    }

    /// Adjoint of J in the real inner product: the rotation term is
    /// self-adjoint, the trap multiplication conjugates, and the
    /// conjugate-linear part carries over unchanged.
    pub fn apply_jacobian_adjoint(
        &self,
        p: &ModelParams,
        c1: &[f64],
        l2: &[Complex64],
        r: &[Complex64],
        out: &mut [Complex64],
    ) {
        self.kinetic_trap(r, out, -1.0, p.mu, p.omega);
        for i in 0..out.len() {
            out[i] += c1[i] * r[i] + l2[i] * r[i].conj();
        }
    }

    /// dF/d(swept parameter) at `phi`.
    pub fn dresidual_dparam(&self, sweep: SweepParam, phi: &[Complex64]) -> Vec<Complex64> {
        match sweep {
            SweepParam::Mu => phi.iter().map(|z| -z).collect(),
            SweepParam::Omega => {
                let (dx, dy) = self.derivatives(phi);
                (0..phi.len())
                    .map(|i| Complex64::new(0.0, 1.0) * (self.yf[i] * dx[i] - self.xf[i] * dy[i]))
                    .collect()
            }
        }
    }

    fn make_state(&self, p: &ModelParams, data: Vec<Complex64>, residual_inf: f64) -> Result<StationaryState> {
        let phi = ComplexField::from_data(&self.grid, data)?;
        let norm = crate::observables::norm(&phi);
        let family_tag = count_density_peaks(&phi);
        Ok(StationaryState {
            phi,
            params: *p,
            norm,
            residual_inf,
            family_tag,
            stability: None,
        })
    }
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// F(phi) of the stationary equation; the logarithmic term is defined as 0
/// where the density vanishes (removable limit).
pub fn residual(
    fields: &PotentialFields,
    p: &ModelParams,
    phi: &ComplexField,
) -> Result<ComplexField> {
    p.validate()?;
    if !fields.v.grid().same_geometry(phi.grid()) {
        return Err(Error::GridMismatch);
    }
    let ctx = OperatorCtx::new(phi.grid(), fields);
    let mut out = vec![Complex64::default(); phi.grid().len()];
    ctx.residual(p, phi.data(), &mut out);
    ComplexField::from_data(phi.grid(), out)
}

fn newton_solve_ctx(
    ctx: &OperatorCtx,
    p: &ModelParams,
    seed: &[Complex64],
    opts: &SolveOptions,
) -> Result<(Vec<Complex64>, f64, usize)> {
    let n = seed.len();
    let mut phi = seed.to_vec();
    let mut f = vec![Complex64::default(); n];
    let precond_c = p.mu.abs().max(1.0);
    let mut growth_strikes = 0u32;
    let mut prev_rinf = f64::INFINITY;

    for it in 0..opts.max_newton {
        ctx.residual(p, &phi, &mut f);
        let rinf = inf_norm(&f);
        if !rinf.is_finite() {
            return Err(Error::Newton("residual became non-finite".into()));
        }
        if rinf < opts.tol {
            return Ok((phi, rinf, it));
        }
        if rinf > prev_rinf {
            growth_strikes += 1;
            if growth_strikes >= 3 {
                return Err(Error::Newton(format!(
                    "residual grew over 3 consecutive steps (now {rinf:.3e})"
                )));
            }
        } else {
            growth_strikes = 0;
        }
        prev_rinf = rinf;

        let (c1, l2) = ctx.jacobian_coeffs(p, &phi);
        let rhs: Vec<Complex64> = f.iter().map(|z| -z).collect();
        let mut apply_j =
            |x: &[Complex64], y: &mut [Complex64]| ctx.apply_jacobian(p, &c1, &l2, x, y);
        let mut apply_jt =
            |x: &[Complex64], y: &mut [Complex64]| ctx.apply_jacobian_adjoint(p, &c1, &l2, x, y);
        let mut precond = |x: &[Complex64], y: &mut [Complex64]| {
            fourier_shift_inverse(&ctx.grid, precond_c, x, y)
        };
        let (delta, _stats) = krylov::cgnr(
            &mut apply_j,
            &mut apply_jt,
            &mut precond,
            &rhs,
            opts.inner_tol,
            opts.inner_max_iter,
        );

        // damped update: accept the first step length that reduces |F|_inf
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_backtrack {
            let trial: Vec<Complex64> =
                phi.iter().zip(&delta).map(|(z, d)| z + t * d).collect();
            ctx.residual(p, &trial, &mut f);
            let rtrial = inf_norm(&f);
            if rtrial.is_finite() && rtrial < rinf {
                phi = trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::Newton(format!(
                "line search stalled at residual {rinf:.3e} (iteration {it})"
            )));
        }
    }
    ctx.residual(p, &phi, &mut f);
    let rinf = inf_norm(&f);
    if rinf < opts.tol {
        Ok((phi, rinf, opts.max_newton))
    } else {
        Err(Error::Newton(format!(
            "no convergence in {} iterations (residual {rinf:.3e})",
            opts.max_newton
        )))
    }
}

/// Newton-CG solve of the stationary equation from `seed` at the parameters
/// in `p` (mu and omega included).
pub fn newton_cg_solve(
    fields: &PotentialFields,
    p: &ModelParams,
    seed: &ComplexField,
    opts: &SolveOptions,
) -> Result<StationaryState> {
    p.validate()?;
    if !fields.v.grid().same_geometry(seed.grid()) {
        return Err(Error::GridMismatch);
    }
    if !seed.is_finite() {
        return Err(Error::NonFinite);
    }
    if seed.l2_norm() < 1e-12 {
        return Err(Error::InvalidParameter("zero seed".into()));
    }
    let ctx = OperatorCtx::new(seed.grid(), fields);
    let (phi, rinf, _iters) = newton_solve_ctx(&ctx, p, seed.data(), opts)?;
    ctx.make_state(p, phi, rinf)
}

/// `amplitude * mode` from a computed linear spectrum; small amplitudes
/// target the low-norm end of the family bifurcating from that mode.
pub fn seed_from_linear(
    spec: &LinearSpectrum,
    mode_index: usize,
    amplitude: f64,
) -> Result<ComplexField> {
    let mode = spec.modes.get(mode_index).ok_or(Error::ModeIndex {
        index: mode_index,
        len: spec.modes.len(),
    })?;
    Ok(mode.scaled(Complex64::new(amplitude, 0.0)))
}

/// Direct seeding without continuation: try each trial amplitude of the
/// profile and keep the distinct converged solutions (distinguished by
/// norm). States below `min_norm` are the trivial zero solution, which
/// Newton reaches from any sufficiently small seed, and are dropped.
pub fn amplitude_scan(
    fields: &PotentialFields,
    p: &ModelParams,
    profile: &ComplexField,
    amplitudes: &[f64],
    min_norm: f64,
    opts: &SolveOptions,
) -> Vec<StationaryState> {
    let mut found: Vec<StationaryState> = Vec::new();
    for &a in amplitudes {
        let seed = profile.scaled(Complex64::new(a, 0.0));
        if let Ok(state) = newton_cg_solve(fields, p, &seed, opts) {
            if state.norm < min_norm {
                continue;
            }
            let duplicate = found
                .iter()
                .any(|s| (s.norm - state.norm).abs() < 1e-4 * (1.0 + state.norm.abs()));
            if !duplicate {
                found.push(state);
            }
        }
    }
    found
}

/// Multiply by the unit phase that best aligns `field` with `reference`
/// (the stationary equation is U(1)-invariant, so solves converge to an
/// arbitrary global phase).
pub fn align_phase(field: &ComplexField, reference: &ComplexField) -> ComplexField {
    let ip = dot(reference.data(), field.data());
    if ip.norm() == 0.0 {
        return field.clone();
    }
    field.scaled(Complex64::from_polar(1.0, -ip.arg()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Mu,
    Omega,
}

impl SweepParam {
    pub fn get(&self, p: &ModelParams) -> f64 {
        match self {
            SweepParam::Mu => p.mu,
            SweepParam::Omega => p.omega,
        }
    }
    pub fn set(&self, p: &mut ModelParams, value: f64) {
        match self {
            SweepParam::Mu => p.mu = value,
            SweepParam::Omega => p.omega = value,
        }
    }
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Mu => "mu",
            SweepParam::Omega => "omega",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    pub ds0: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    pub max_points: usize,
    /// Continue this many points past the first fold, then stop.
    pub stop_after_fold: Option<usize>,
    /// Norm below which the family is considered terminated.
    pub norm_floor: f64,
    pub solve: SolveOptions,
    /// Corrector iterations per continuation point.
    pub max_corrector: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            ds0: 0.05,
            ds_min: 1e-4,
            ds_max: 0.5,
            max_points: 400,
            stop_after_fold: None,
            norm_floor: 1e-3,
            solve: SolveOptions::default(),
            max_corrector: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ReachedTarget,
    AfterFold,
    NormCollapse,
    Stalled,
    MaxPoints,
}

#[derive(Debug, Clone)]
pub struct FamilyPoint {
    pub param: f64,
    pub norm: f64,
    pub stable: Option<bool>,
    pub state: StationaryState,
}

#[derive(Debug, Clone)]
pub struct FamilyCurve {
    pub points: Vec<FamilyPoint>,
    pub swept: SweepParam,
    /// First detected turning point of the swept parameter, refined by a
    /// parabolic fit in arclength.
    pub fold: Option<f64>,
    pub termination: Termination,
}

impl FamilyCurve {
    pub fn min_param(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.param)
            .fold(f64::INFINITY, f64::min)
    }
    pub fn max_param(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.param)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

struct AugVec {
    field: Vec<Complex64>,
    p: f64,
}

fn constraint_value(pred: &AugVec, tangent: &AugVec, phi: &[Complex64], pval: f64) -> f64 {
    let mut acc = tangent.p * (pval - pred.p);
    for i in 0..phi.len() {
        let d = phi[i] - pred.field[i];
        acc += tangent.field[i].re * d.re + tangent.field[i].im * d.im;
    }
    acc
}

/// Corrector for one continuation point: Newton on the residual augmented
/// with the pseudo-arclength constraint, solved in least squares by CG on
/// the normal equations. The parameter rides in slot `n` (real part).
fn corrector(
    ctx: &OperatorCtx,
    base: &ModelParams,
    sweep: SweepParam,
    pred: &AugVec,
    tangent: &AugVec, // field part already scaled by the cell area
    opts: &ContinuationOptions,
) -> Result<(Vec<Complex64>, f64, usize, f64)> {
    let n = pred.field.len();
    let mut phi = pred.field.clone();
    let mut pval = pred.p;
    let mut f = vec![Complex64::default(); n];
    let ctol = 1e-9 * (1.0 + pval.abs());

    for it in 0..opts.max_corrector {
        let mut params = *base;
        sweep.set(&mut params, pval);
        ctx.residual(&params, &phi, &mut f);
        let rinf = inf_norm(&f);
        let cons = constraint_value(pred, tangent, &phi, pval);
        if rinf < opts.solve.tol && cons.abs() < ctol {
            return Ok((phi, pval, it, rinf));
        }

        let (c1, l2) = ctx.jacobian_coeffs(&params, &phi);
        let fp = ctx.dresidual_dparam(sweep, &phi);
        // The constraint row must carry weight comparable to the field
        // block, or the inner CG meets its relative tolerance without ever
        // resolving the parameter component.
        let kappa = nrm2(&fp).max(1.0);

        let mut rhs = vec![Complex64::default(); n + 1];
        for i in 0..n {
            rhs[i] = -f[i];
        }
        rhs[n] = Complex64::new(-kappa * cons, 0.0);

        let params_c = params;
        let mut apply_a = |x: &[Complex64], y: &mut [Complex64]| {
            let dp = x[n].re;
            let (head, _) = x.split_at(n);
            ctx.apply_jacobian(&params_c, &c1, &l2, head, &mut y[..n]);
            let mut c = tangent.p * dp;
            for i in 0..n {
                y[i] += dp * fp[i];
                c += tangent.field[i].re * x[i].re + tangent.field[i].im * x[i].im;
            }
            y[n] = Complex64::new(kappa * c, 0.0);
        };
        let mut apply_at = |x: &[Complex64], y: &mut [Complex64]| {
            let s = kappa * x[n].re;
            let (head, _) = x.split_at(n);
            ctx.apply_jacobian_adjoint(&params_c, &c1, &l2, head, &mut y[..n]);
            let mut c = tangent.p * s;
            for i in 0..n {
                y[i] += s * tangent.field[i];
                c += fp[i].re * x[i].re + fp[i].im * x[i].im;
            }
            y[n] = Complex64::new(c, 0.0);
        };
        let pc = params.mu.abs().max(1.0);
        let grid = ctx.grid.clone();
        let mut precond = |x: &[Complex64], y: &mut [Complex64]| {
            fourier_shift_inverse(&grid, pc, &x[..n], &mut y[..n]);
            y[n] = x[n];
        };
        let (delta, stats) = krylov::cgnr(
            &mut apply_a,
            &mut apply_at,
            &mut precond,
            &rhs,
            opts.solve.inner_tol,
            opts.solve.inner_max_iter,
        );
        log::trace!(
            "corrector iter {it}: rinf {rinf:.3e} cons {cons:.3e} cg({}, {:.2e}, conv={}) dp {:.3e}",
            stats.iterations, stats.residual, stats.converged, delta[n].re
        );

        let merit = rinf.max(cons.abs());
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.solve.max_backtrack {
            let trial_phi: Vec<Complex64> = phi
                .iter()
                .zip(&delta[..n])
                .map(|(z, d)| z + t * d)
                .collect();
            let trial_p = pval + t * delta[n].re;
            let mut trial_params = *base;
            sweep.set(&mut trial_params, trial_p);
            ctx.residual(&trial_params, &trial_phi, &mut f);
            let trial_rinf = inf_norm(&f);
            let trial_cons = constraint_value(pred, tangent, &trial_phi, trial_p);
            let trial_merit = trial_rinf.max(trial_cons.abs());
            if trial_merit.is_finite() && trial_merit < merit {
                phi = trial_phi;
                pval = trial_p;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            log::debug!(
                "corrector stalled at iter {it}: residual {rinf:.3e}, constraint {cons:.3e}"
            );
            return Err(Error::Newton("corrector line search stalled".into()));
        }
    }
    let mut params = *base;
    sweep.set(&mut params, pval);
    ctx.residual(&params, &phi, &mut f);
    let rinf = inf_norm(&f);
    let cons = constraint_value(pred, tangent, &phi, pval);
    if rinf < opts.solve.tol && cons.abs() < ctol {
        Ok((phi, pval, opts.max_corrector, rinf))
    } else {
        log::debug!("corrector out of iterations: residual {rinf:.3e}, constraint {cons:.3e}");
        Err(Error::Newton(format!(
            "corrector did not converge (residual {rinf:.3e})"
        )))
    }
}

/// Pseudo-arclength continuation of a droplet family in mu or omega with a
/// secant predictor. Detects folds (sign change of the parameter motion),
/// continues around them, and terminates at the target value, after the
/// fold (if requested), on norm collapse, or on step-size underflow.
pub fn continue_family(
    start: &StationaryState,
    sweep: SweepParam,
    target: f64,
    opts: &ContinuationOptions,
) -> Result<FamilyCurve> {
    if start.residual_inf > opts.solve.tol * 10.0 {
        return Err(Error::InvalidParameter(
            "continuation start state is not converged".into(),
        ));
    }
    let grid = start.phi.grid().clone();
    let fields = build_pt_hog(&grid, &start.params);
    let ctx = OperatorCtx::new(&grid, &fields);
    let base = start.params;
    let da = grid.cell_area();
    let n = grid.len();

    let p0 = sweep.get(&base);
    if target == p0 {
        return Err(Error::InvalidParameter(
            "continuation target equals the start value".into(),
        ));
    }
    let dir = if target > p0 { 1.0 } else { -1.0 };

    let mut points: Vec<FamilyPoint> = vec![FamilyPoint {
        param: p0,
        norm: start.norm,
        stable: start.stability.map(|v| v.is_stable()),
        state: start.clone(),
    }];
    let mut cur_field = start.phi.data().to_vec();
    let mut cur_p = p0;
    let mut prev: Option<(Vec<Complex64>, f64)> = None;
    let mut ds = opts.ds0;
    let mut fold: Option<f64> = None;
    let mut points_after_fold = 0usize;
    let mut arclengths: Vec<f64> = vec![0.0];
    let mut termination = Termination::MaxPoints;

    'outer: while points.len() < opts.max_points {
        let (mut t_field, mut t_p): (Vec<Complex64>, f64) = match &prev {
            None => (vec![Complex64::default(); n], dir),
            Some((pf, pp)) => {
                let tf: Vec<Complex64> =
                    cur_field.iter().zip(pf).map(|(a, b)| a - b).collect();
                (tf, cur_p - pp)
            }
        };
        let tnorm = (da * nrm2(&t_field).powi(2) + t_p * t_p).sqrt();
        if tnorm == 0.0 {
            termination = Termination::Stalled;
            break;
        }
        for z in &mut t_field {
            *z /= tnorm;
        }
        t_p /= tnorm;

        let pred = AugVec {
            field: cur_field
                .iter()
                .zip(&t_field)
                .map(|(c, t)| c + ds * t)
                .collect(),
            p: cur_p + ds * t_p,
        };
        let tangent = AugVec {
            field: t_field.iter().map(|z| z * da).collect(),
            p: t_p,
        };

        match corrector(&ctx, &base, sweep, &pred, &tangent, opts) {
            Ok((phi_new, p_new, iters, rinf)) => {
                let mut params = base;
                sweep.set(&mut params, p_new);
                let state = ctx.make_state(&params, phi_new.clone(), rinf)?;
                let norm = state.norm;

                let step_len = {
                    let mut acc = 0.0;
                    for (a, b) in phi_new.iter().zip(&cur_field) {
                        acc += (a - b).norm_sqr();
                    }
                    (da * acc + (p_new - cur_p) * (p_new - cur_p)).sqrt()
                };
                arclengths.push(arclengths.last().unwrap() + step_len);

                let p_prev = cur_p;
                prev = Some((std::mem::replace(&mut cur_field, phi_new), cur_p));
                cur_p = p_new;
                points.push(FamilyPoint {
                    param: p_new,
                    norm,
                    stable: None,
                    state,
                });

                if fold.is_none() && points.len() >= 3 {
                    let m = points.len();
                    let d1 = points[m - 2].param - points[m - 3].param;
                    let d2 = points[m - 1].param - points[m - 2].param;
                    if d1 * d2 < 0.0 {
                        fold = Some(refine_fold(
                            &arclengths[m - 3..m],
                            &[
                                points[m - 3].param,
                                points[m - 2].param,
                                points[m - 1].param,
                            ],
                        ));
                    }
                }
                if fold.is_some() {
                    points_after_fold += 1;
                    if let Some(extra) = opts.stop_after_fold {
                        if points_after_fold >= extra {
                            termination = Termination::AfterFold;
                            break 'outer;
                        }
                    }
                }

                if norm < opts.norm_floor {
                    termination = Termination::NormCollapse;
                    break 'outer;
                }
                if (p_prev - target) * (cur_p - target) <= 0.0 {
                    termination = Termination::ReachedTarget;
                    break 'outer;
                }

                ds = if iters <= 3 {
                    (ds * 1.4).min(opts.ds_max)
                } else if iters >= 7 {
                    (ds * 0.7).max(opts.ds_min)
                } else {
                    ds
                };
            }
            Err(_) => {
                ds *= 0.5;
                if ds < opts.ds_min {
                    termination = Termination::Stalled;
                    break 'outer;
                }
            }
        }
    }

    Ok(FamilyCurve {
        points,
        swept: sweep,
        fold,
        termination,
    })
}

/// Vertex of the parabola through three (arclength, parameter) samples;
/// falls back to the middle sample when degenerate.
fn refine_fold(s: &[f64], p: &[f64]) -> f64 {
    let (s0, s1, s2) = (s[0], s[1], s[2]);
    let (p0, p1, p2) = (p[0], p[1], p[2]);
    let d01 = (p1 - p0) / (s1 - s0);
    let d12 = (p2 - p1) / (s2 - s1);
    let curv = (d12 - d01) / (s2 - s0);
    if curv.abs() < 1e-14 {
        return p1;
    }
    let s_star = 0.5 * (s0 + s1) - d01 / (2.0 * curv);
    p0 + d01 * (s_star - s0) + curv * (s_star - s0) * (s_star - s1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2;
    use crate::potential::{exact_droplet, exact_params};
    use crate::rng::{perturb, stream_rng};

    fn setup() -> (SharedGrid, PotentialFields, ModelParams) {
        let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
        let p = exact_params(1.0, 1.0).unwrap();
        let fields = build_pt_hog(&g, &p);
        (g, fields, p)
    }

    #[test]
    fn exact_droplet_residual_small() {
        let (g, fields, p) = setup();
        let phi = exact_droplet(&g, 1.0);
        let r = residual(&fields, &p, &phi).unwrap();
        assert!(r.inf_norm() < 1e-8, "residual {:.3e}", r.inf_norm());
    }

    #[test]
    fn zero_field_residual_is_zero() {
        let (g, fields, p) = setup();
        let zero = ComplexField::zeros(&g);
        assert_eq!(residual(&fields, &p, &zero).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn ground_state_residual_without_gain_loss() {
        let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
        let p = exact_params(1.0, 0.0).unwrap();
        let fields = build_pt_hog(&g, &p);
        let phi = exact_droplet(&g, 0.0);
        let r = residual(&fields, &p, &phi).unwrap();
        assert!(r.inf_norm() < 1e-8, "residual {:.3e}", r.inf_norm());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (g, fields, p) = setup();
        let mut p = p;
        p.omega = 0.3; // exercise the rotation term
        let phi = exact_droplet(&g, 1.0);
        let ctx = OperatorCtx::new(&g, &fields);
        let (c1, l2) = ctx.jacobian_coeffs(&p, phi.data());

        let mut rng = stream_rng(11, 0);
        let mut dir = phi.clone();
        perturb(&mut dir, 0.5, &mut rng); // decayed, nonzero direction
        let h = 1e-6;

        let n = g.len();
        let mut jd = vec![Complex64::default(); n];
        ctx.apply_jacobian(&p, &c1, &l2, dir.data(), &mut jd);

        let mut fp = vec![Complex64::default(); n];
        let mut fm = vec![Complex64::default(); n];
        let plus: Vec<Complex64> = phi
            .data()
            .iter()
            .zip(dir.data())
            .map(|(a, b)| a + h * b)
            .collect();
        let minus: Vec<Complex64> = phi
            .data()
            .iter()
            .zip(dir.data())
            .map(|(a, b)| a - h * b)
            .collect();
        ctx.residual(&p, &plus, &mut fp);
        ctx.residual(&p, &minus, &mut fm);

        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for i in 0..n {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            num += (fd - jd[i]).norm_sqr();
            den += jd[i].norm_sqr();
        }
        let rel = (num / den).sqrt();
        assert!(rel < 1e-6, "relative Jacobian error {rel:.3e}");
    }

    #[test]
    fn jacobian_adjoint_is_adjoint() {
        let (g, fields, p) = setup();
        let mut p = p;
        p.omega = 0.2;
        let phi = exact_droplet(&g, 1.0);
        let ctx = OperatorCtx::new(&g, &fields);
        let (c1, l2) = ctx.jacobian_coeffs(&p, phi.data());

        let mut rng = stream_rng(5, 1);
        let mut a = phi.clone();
        let mut b = phi.clone();
        perturb(&mut a, 1.0, &mut rng);
        perturb(&mut b, 1.0, &mut rng);

        let n = g.len();
        let mut ja = vec![Complex64::default(); n];
        let mut jtb = vec![Complex64::default(); n];
        ctx.apply_jacobian(&p, &c1, &l2, a.data(), &mut ja);
        ctx.apply_jacobian_adjoint(&p, &c1, &l2, b.data(), &mut jtb);

        let lhs: f64 = ja
            .iter()
            .zip(b.data())
            .map(|(x, y)| x.re * y.re + x.im * y.im)
            .sum();
        let rhs: f64 = a
            .data()
            .iter()
            .zip(&jtb)
            .map(|(x, y)| x.re * y.re + x.im * y.im)
            .sum();
        assert!(
            (lhs - rhs).abs() < 1e-8 * lhs.abs().max(rhs.abs()).max(1.0),
            "lhs {lhs}, rhs {rhs}"
        );
    }

    #[test]
    fn newton_rejects_zero_seed() {
        let (g, fields, p) = setup();
        let zero = ComplexField::zeros(&g);
        assert!(matches!(
            newton_cg_solve(&fields, &p, &zero, &SolveOptions::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn newton_reconverges_noisy_exact_droplet() {
        let (g, fields, p) = setup();
        let exact = exact_droplet(&g, 1.0);
        let mut seed = exact.clone();
        let mut rng = stream_rng(1, 0);
        perturb(&mut seed, 0.05, &mut rng);
        let state = newton_cg_solve(&fields, &p, &seed, &SolveOptions::default()).unwrap();
        assert!(state.residual_inf < 1e-10);
        let aligned = align_phase(&state.phi, &exact);
        let mut err = 0.0_f64;
        for (a, b) in aligned.data().iter().zip(exact.data()) {
            err = err.max((a - b).norm());
        }
        assert!(err < 1e-8, "recovery error {err:.3e}");
        assert!((state.norm - std::f64::consts::PI).abs() < 1e-6);
        assert_eq!(state.family_tag, 1);
    }
}
