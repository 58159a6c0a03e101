//! Time evolution in the rotating frame by second-order operator splitting,
//! perturbed-evolution checks, and collision experiments.
//!
//! One step is L(dt/2) K(dt) L(dt/2): a pointwise local factor
//! exp(-i dt/2 [sigma ln(rho) rho + V + iW]) with the density frozen over
//! the sub-step, and the kinetic+rotation part split by direction, each
//! sweep integrated exactly in its mixed representation — the x-sweep with
//! symbol exp(-i dt [kx^2 - omega y kx]) in (kx, y), the y-sweep with
//! exp(-i dt [ky^2 + omega x ky]) in (x, ky). Sweep order alternates
//! between steps so consecutive pairs are palindromic and the scheme stays
//! second order with rotation.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{self, Axis};
use crate::grid::{translate, ComplexField, SharedGrid};
use crate::observables::{self, rho_log_rho, Component, Diagnostics};
use crate::potential::{exact_droplet, ModelParams, PotentialFields};
use crate::rng;
use crate::stationary::StationaryState;

/// Precomputed phase tables for repeated stepping at fixed dt.
pub struct StepPlan {
    grid: SharedGrid,
    sigma: f64,
    dt: f64,
    /// exp(-i dt/2 V) * exp(dt/2 W) per point.
    local_linear: Vec<Complex64>,
    /// exp(-i dt (kx^2 - omega y kx)) over (kx_j, y_k).
    x_phase: Vec<Complex64>,
    /// exp(-i dt (ky^2 + omega x ky)) over (x_j, ky_k).
    y_phase: Vec<Complex64>,
}

impl StepPlan {
    pub fn new(
        grid: &SharedGrid,
        fields: &PotentialFields,
        p: &ModelParams,
        dt: f64,
    ) -> Result<StepPlan> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
        }
        p.validate()?;
        if !grid.same_geometry(fields.v.grid()) {
            return Err(Error::GridMismatch);
        }
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut local_linear = Vec::with_capacity(nx * ny);
        for i in 0..nx * ny {
            let v = fields.v.data()[i];
            let w = fields.w.data()[i];
            local_linear
                .push(Complex64::from_polar((0.5 * dt * w).exp(), -0.5 * dt * v));
        }
        let mut x_phase = Vec::with_capacity(nx * ny);
        for &kx in grid.kx() {
            for &y in grid.y() {
                x_phase.push(Complex64::from_polar(
                    1.0,
                    -dt * (kx * kx - p.omega * y * kx),
                ));
            }
        }
        let mut y_phase = Vec::with_capacity(nx * ny);
        for &x in grid.x() {
            for &ky in grid.ky() {
                y_phase.push(Complex64::from_polar(
                    1.0,
                    -dt * (ky * ky + p.omega * x * ky),
                ));
            }
        }
        Ok(StepPlan {
            grid: grid.clone(),
            sigma: p.sigma,
            dt,
            local_linear,
            x_phase,
            y_phase,
        })
    }

    fn local_half(&self, psi: &mut [Complex64]) {
        let half = 0.5 * self.dt * self.sigma;
        for (z, lin) in psi.iter_mut().zip(&self.local_linear) {
            let rho = z.norm_sqr();
            let nl = Complex64::from_polar(1.0, -half * rho_log_rho(rho));
            *z *= nl * lin;
        }
    }

    fn sweep_x(&self, psi: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        fft::forward_axis(psi, nx, ny, Axis::X);
        for (z, f) in psi.iter_mut().zip(&self.x_phase) {
            *z *= f;
        }
        fft::inverse_axis(psi, nx, ny, Axis::X);
    }

    fn sweep_y(&self, psi: &mut [Complex64]) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        fft::forward_axis(psi, nx, ny, Axis::Y);
        for (z, f) in psi.iter_mut().zip(&self.y_phase) {
            *z *= f;
        }
        fft::inverse_axis(psi, nx, ny, Axis::Y);
    }

    /// One Strang step; `flip` swaps the sweep order (alternate per step).
    pub fn step_in_place(&self, psi: &mut [Complex64], flip: bool) {
        self.local_half(psi);
        if flip {
            self.sweep_y(psi);
            self.sweep_x(psi);
        } else {
            self.sweep_x(psi);
            self.sweep_y(psi);
        }
        self.local_half(psi);
    }
}

/// One second-order split step (convenience wrapper over [`StepPlan`]).
pub fn step(
    psi: &ComplexField,
    p: &ModelParams,
    fields: &PotentialFields,
    dt: f64,
) -> Result<ComplexField> {
    let plan = StepPlan::new(psi.grid(), fields, p, dt)?;
    let mut data = psi.data().to_vec();
    plan.step_in_place(&mut data, false);
    if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Evolution {
            t: dt,
            reason: "non-finite field after one step".into(),
        });
    }
    ComplexField::from_data(psi.grid(), data)
}

#[derive(Debug, Clone)]
pub struct EvolveSpec {
    pub dt: f64,
    pub t_final: f64,
    /// Steps between stored diagnostics/frames.
    pub snapshot_stride: usize,
    /// Multiplicative noise amplitude applied to the initial condition.
    pub noise_amplitude: Option<f64>,
    pub rng_seed: u64,
    pub store_frames: bool,
    pub winding_radius: Option<f64>,
}

impl Default for EvolveSpec {
    fn default() -> Self {
        EvolveSpec {
            dt: 1e-3,
            t_final: 10.0,
            snapshot_stride: 250,
            noise_amplitude: None,
            rng_seed: 1,
            store_frames: false,
            winding_radius: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FrameDiag {
    pub t: f64,
    pub obs: Diagnostics,
}

#[derive(Debug)]
pub struct EvolutionRun {
    pub initial: ComplexField,
    pub params: ModelParams,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    pub frames: Vec<(f64, ComplexField)>,
    pub diagnostics: Vec<FrameDiag>,
}

impl EvolutionRun {
    pub fn final_field(&self) -> &ComplexField {
        &self.frames.last().expect("run stores at least one frame").1
    }
}

/// Evolve `psi0` to `t_final`, with optional initial noise injection and
/// periodic diagnostics. The final frame is always stored.
pub fn evolve(
    fields: &PotentialFields,
    p: &ModelParams,
    psi0: &ComplexField,
    spec: &EvolveSpec,
) -> Result<EvolutionRun> {
    let grid = psi0.grid().clone();
    let plan = StepPlan::new(&grid, fields, p, spec.dt)?;
    let n_steps = (spec.t_final / spec.dt).round() as usize;
    let stride = spec.snapshot_stride.max(1);

    let mut psi = psi0.clone();
    if let Some(nu) = spec.noise_amplitude {
        let mut rng = rng::stream_rng(spec.rng_seed, 0);
        rng::perturb(&mut psi, nu, &mut rng);
    }
    let initial = psi.clone();

    let mut frames: Vec<(f64, ComplexField)> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut record = |t: f64, field: &ComplexField, frames: &mut Vec<(f64, ComplexField)>| -> Result<()> {
        diagnostics.push(FrameDiag {
            t,
            obs: observables::diagnostics(field, fields, p, spec.winding_radius)?,
        });
        if spec.store_frames || t == spec.t_final {
            frames.push((t, field.clone()));
        }
        Ok(())
    };
    record(0.0, &psi, &mut frames)?;

    let mut data = psi.into_data();
    for s in 0..n_steps {
        plan.step_in_place(&mut data, s % 2 == 1);
        let t = (s + 1) as f64 * spec.dt;
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Evolution {
                t,
                reason: "field overflowed or became non-finite".into(),
            });
        }
        if (s + 1) % stride == 0 || s + 1 == n_steps {
            let field = ComplexField::from_data(&grid, data.clone())?;
            let t_rec = if s + 1 == n_steps { spec.t_final } else { t };
            record(t_rec, &field, &mut frames)?;
        }
    }
    if frames.is_empty() || frames.last().map(|f| f.0) != Some(spec.t_final) {
        let field = ComplexField::from_data(&grid, data)?;
        frames.push((spec.t_final, field));
    }
    Ok(EvolutionRun {
        initial,
        params: *p,
        dt: spec.dt,
        t_final: spec.t_final,
        snapshot_stride: stride,
        frames,
        diagnostics,
    })
}

/// Superposition input for collisions:
/// `psi0 = A [phi1(r - r0) + phi1(r + r0)] + B phi`, with `phi1` the
/// analytic droplet and `phi` an optional extra stationary state.
pub fn collision_ic(
    grid: &SharedGrid,
    p: &ModelParams,
    a: f64,
    b: f64,
    r0: (f64, f64),
    extra: Option<&StationaryState>,
) -> Result<ComplexField> {
    if b != 0.0 && extra.is_none() {
        return Err(Error::InvalidParameter(
            "B != 0 requires an extra stationary state".into(),
        ));
    }
    let phi1 = exact_droplet(grid, p.w0);
    let left = translate(&phi1, (r0.0, r0.1));
    let right = translate(&phi1, (-r0.0, -r0.1));

    // overlap guard: product of the two humps against the product of peaks
    let peak = phi1.max_abs();
    let mut overlap: f64 = 0.0;
    for (l, r) in left.data().iter().zip(right.data()) {
        overlap = overlap.max(l.norm() * r.norm());
    }
    if overlap > 1e-3 * peak * peak {
        log::warn!(
            "collision input droplets overlap (relative product {:.2e}); \
             the superposition is not a clean two-droplet state",
            overlap / (peak * peak)
        );
    }

    let mut data: Vec<Complex64> = left
        .data()
        .iter()
        .zip(right.data())
        .map(|(l, r)| a * (l + r))
        .collect();
    if let Some(state) = extra {
        if !state.phi.grid().same_geometry(grid) {
            return Err(Error::GridMismatch);
        }
        for (d, e) in data.iter_mut().zip(state.phi.data()) {
            *d += b * e;
        }
    }
    ComplexField::from_data(grid, data)
}

/// Connected components of the density super-level set (shared
/// implementation with `observables::contour_components`).
pub fn track_peaks(frame: &ComplexField, level_fraction: f64) -> Vec<Component> {
    observables::contour_components(frame, level_fraction)
}
