//! Subcommand implementations: each validates its inputs, runs the solvers,
//! and writes deterministic CSV/snapshot artifacts.

use std::path::Path;

use num_complex::Complex64;

use qdrop2d_core as core;
use qdrop2d_core::{
    BdgOptions, BoundaryOptions, BoundaryOutcome, ComplexField, ContinuationOptions, EvolveSpec,
    Grid2, LinearEigOptions, ModelParams, PotentialFields, SharedGrid, StationaryState, SweepParam,
};

use crate::config::{RunConfig, SeedKind};
use crate::io::{self, fmt, fmt_opt, CsvWriter};
use crate::CmdError;

fn make_grid(cfg: &RunConfig) -> Result<SharedGrid, CmdError> {
    Grid2::new(cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly)
        .map_err(|e| CmdError::Config(vec![e.to_string()]))
}

fn eig_options(cfg: &RunConfig) -> LinearEigOptions {
    LinearEigOptions {
        tol: cfg.solver.eig_tol,
        seed: cfg.rng_seed,
        ..Default::default()
    }
}

fn bdg_options(cfg: &RunConfig) -> BdgOptions {
    BdgOptions {
        n: cfg.solver.bdg_n,
        dense_threshold: cfg.solver.bdg_dense_threshold,
        seed: cfg.rng_seed,
        ..Default::default()
    }
}

fn continuation_options(cfg: &RunConfig) -> ContinuationOptions {
    ContinuationOptions {
        ds0: cfg.solver.ds0,
        ds_min: cfg.solver.ds_min,
        ds_max: cfg.solver.ds_max,
        max_points: cfg.solver.max_points,
        stop_after_fold: cfg.task.stop_after_fold,
        solve: cfg.solver.solve_options(),
        ..Default::default()
    }
}

fn preamble(cfg: &RunConfig, command: &str) -> Vec<(&'static str, String)> {
    vec![
        ("tool", "qdrop2d".to_string()),
        ("command", command.to_string()),
        ("config_hash", cfg.provenance_hash()),
        (
            "grid",
            format!(
                "{}x{} [{},{}]",
                cfg.grid.nx, cfg.grid.ny, cfg.grid.lx, cfg.grid.ly
            ),
        ),
        (
            "model",
            format!(
                "sigma={} omega={} v0={} v1={} w0={} mu={}",
                cfg.model.sigma,
                cfg.model.omega,
                cfg.model.v0,
                cfg.model.v1,
                cfg.model.w0,
                cfg.model.mu
            ),
        ),
        ("rng_seed", cfg.rng_seed.to_string()),
    ]
}

/// Resolve the configured seed into a field ready for a Newton solve.
fn resolve_seed(
    cfg: &RunConfig,
    grid: &SharedGrid,
    fields: &PotentialFields,
) -> Result<ComplexField, CmdError> {
    match cfg.task.seed {
        SeedKind::Exact => Ok(core::exact_droplet(grid, cfg.model.w0)),
        SeedKind::File => {
            let path = cfg.task.seed_file.as_ref().ok_or_else(|| {
                CmdError::Config(vec!["task.seed = \"file\" requires task.seed_file".into()])
            })?;
            let (field, _) = io::read_field(Path::new(path))?;
            if !field.grid().same_geometry(grid) {
                return Err(CmdError::Config(vec![format!(
                    "seed file {path} grid does not match the configured grid"
                )]));
            }
            Ok(field)
        }
        SeedKind::Mode => {
            let n = cfg.solver.n_eigs.max(cfg.task.mode_index + 1);
            let spec = core::linear_eigs(grid, fields, n, &eig_options(cfg))?;
            Ok(core::seed_from_linear(
                &spec,
                cfg.task.mode_index,
                cfg.task.amplitude,
            )?)
        }
        SeedKind::FlatTop => {
            // super-Gaussian bump sized by the classical turning radius
            let r_tf = cfg.model.mu.abs().max(1.0).sqrt();
            Ok(ComplexField::from_fn(grid, |x, y| {
                let r2 = (x * x + y * y) / (r_tf * r_tf);
                Complex64::new((-r2 * r2).exp(), 0.0)
            }))
        }
    }
}

fn solve_state(cfg: &RunConfig) -> Result<StationaryState, CmdError> {
    let grid = make_grid(cfg)?;
    let params = cfg.model.params();
    let fields = core::build_pt_hog(&grid, &params);
    let seed = resolve_seed(cfg, &grid, &fields)?;
    let opts = cfg.solver.solve_options();
    if cfg.task.seed == SeedKind::FlatTop {
        let amplitudes = if cfg.task.amplitudes.is_empty() {
            vec![1.5, 2.0, 3.0, 4.0, 5.0]
        } else {
            cfg.task.amplitudes.clone()
        };
        core::amplitude_scan(&fields, &params, &seed, &amplitudes, 1e-2, &opts)
            .into_iter()
            .next()
            .ok_or_else(|| {
                CmdError::Solver("no trial amplitude converged to a nontrivial state".into())
            })
    } else {
        Ok(core::newton_cg_solve(&fields, &params, &seed, &opts)?)
    }
}

fn write_state_report(
    cfg: &RunConfig,
    out: &Path,
    name: &str,
    state: &StationaryState,
) -> Result<(), CmdError> {
    let grid = state.phi.grid().clone();
    let fields = core::build_pt_hog(&grid, &state.params);
    let diag = core::diagnostics(&state.phi, &fields, &state.params, cfg.task.winding_radius)?;
    let mut csv = CsvWriter::create(
        &out.join(format!("{name}_report.csv")),
        &preamble(cfg, name),
        &[
            "mu",
            "omega",
            "norm",
            "residual_inf",
            "family_tag",
            "peak_density",
            "asymmetry",
            "re_quasi_energy",
            "im_quasi_energy",
            "winding",
        ],
    )?;
    csv.row(&[
        fmt(state.params.mu),
        fmt(state.params.omega),
        fmt(state.norm),
        fmt(state.residual_inf),
        state.family_tag.to_string(),
        fmt(diag.peak),
        fmt(diag.asymmetry),
        fmt(diag.quasi_energy.re),
        fmt(diag.quasi_energy.im),
        diag.winding.map(|w| w.to_string()).unwrap_or_default(),
    ])?;
    csv.finish()?;
    io::write_field(
        &out.join(format!("{name}.qd2d")),
        &state.phi,
        &state.params,
        0.0,
        &cfg.provenance_hash(),
    )?;
    Ok(())
}

pub fn exact(cfg: &RunConfig, out: &Path) -> Result<(), CmdError> {
    let grid = make_grid(cfg)?;
    let params = core::exact_params(cfg.model.sigma, cfg.model.w0)
        .map_err(|e| CmdError::Config(vec![e.to_string()]))?;
    let fields = core::build_pt_hog(&grid, &params);
    let phi = core::exact_droplet(&grid, cfg.model.w0);
    let residual = core::residual(&fields, &params, &phi)?;
    let (sx, sy) = core::poynting(&phi);
    let origin = grid.idx(grid.nx() / 2, grid.ny() / 2);
    let pt = core::check_pt(&fields);

    let mut csv = CsvWriter::create(
        &out.join("exact_report.csv"),
        &preamble(cfg, "exact"),
        &[
            "norm",
            "residual_inf",
            "poynting_origin_x",
            "poynting_origin_y",
            "pt_v_asymmetry",
            "pt_w_symmetry",
        ],
    )?;
    csv.row(&[
        fmt(core::norm(&phi)),
        fmt(residual.inf_norm()),
        fmt(sx.data()[origin]),
        fmt(sy.data()[origin]),
        fmt(pt.max_v_asymmetry),
        fmt(pt.max_w_symmetry),
    ])?;
    csv.finish()?;
    io::write_field(
        &out.join("exact.qd2d"),
        &phi,
        &params,
        0.0,
        &cfg.provenance_hash(),
    )?;
    Ok(())
}

pub fn spectrum(cfg: &RunConfig, out: &Path) -> Result<(), CmdError> {
    if cfg.task.w0_values.is_empty() {
        return Err(CmdError::Config(vec![
            "task.w0_values must hold at least one W0 sample".into(),
        ]));
    }
    let grid = make_grid(cfg)?;
    let mut csv = CsvWriter::create(
        &out.join("spectrum.csv"),
        &preamble(cfg, "spectrum"),
        &["w0", "index", "re_lambda", "im_lambda", "residual"],
    )?;
    let mut any_ok = false;
    for &w0 in &cfg.task.w0_values {
        let params = ModelParams {
            w0,
            ..cfg.model.params()
        };
        match core::linear_eigs_for(&grid, &params, cfg.solver.n_eigs, &eig_options(cfg)) {
            Ok(spec) => {
                any_ok = true;
                for (i, (l, r)) in spec
                    .eigenvalues
                    .iter()
                    .zip(&spec.residuals)
                    .enumerate()
                {
                    csv.row(&[fmt(w0), i.to_string(), fmt(l.re), fmt(l.im), fmt(*r)])?;
                }
            }
            Err(e) => log::error!("spectrum at w0 = {w0} failed: {e}"),
        }
    }
    csv.finish()?;
    if any_ok {
        Ok(())
    } else {
        Err(CmdError::Solver(
            "eigensolver failed at every requested W0".into(),
        ))
    }
}

pub fn phase_diagram(cfg: &RunConfig, out: &Path) -> Result<(), CmdError> {
    let t = &cfg.task;
    if t.v0_count < 1 || t.v0_max < t.v0_min {
        return Err(CmdError::Config(vec![format!(
            "invalid V0 range [{}, {}] with {} samples",
            t.v0_min, t.v0_max, t.v0_count
        )]));
    }
    let grid = make_grid(cfg)?;
    let v0s: Vec<f64> = if t.v0_count == 1 {
        vec![t.v0_min]
    } else {
        (0..t.v0_count)
            .map(|i| t.v0_min + (t.v0_max - t.v0_min) * i as f64 / (t.v0_count - 1) as f64)
            .collect()
    };
    let opts = BoundaryOptions {
        n_eigs: cfg.solver.n_eigs.max(10),
        breaking_tol: cfg.solver.breaking_tol,
        w0_resolution: cfg.solver.w0_resolution,
        eig: eig_options(cfg),
    };
    let samples = core::phase_boundary(&grid, &v0s, t.w0_scan_max, cfg.model.v1, &opts)?;

    let mut csv = CsvWriter::create(
        &out.join("phase_boundary.csv"),
        &preamble(cfg, "phase-diagram"),
        &["v0", "w0_crit_plus", "w0_crit_minus", "status"],
    )?;
    for s in &samples {
        match &s.outcome {
            BoundaryOutcome::Critical(w) => {
                csv.row(&[fmt(s.v0), fmt(*w), fmt(-*w), "critical".into()])?
            }
            BoundaryOutcome::UnbrokenThroughout => {
                csv.row(&[fmt(s.v0), String::new(), String::new(), "unbroken".into()])?
            }
            BoundaryOutcome::Failed(msg) => {
                log::error!("phase boundary at v0 = {} failed: {msg}", s.v0);
                csv.row(&[fmt(s.v0), String::new(), String::new(), "failed".into()])?
            }
        }
    }
    csv.finish()?;
    Ok(())
}

pub fn solve(cfg: &RunConfig, out: &Path) -> Result<(), CmdError> {
    let state = solve_state(cfg)?;
    write_state_report(cfg, out, "state", &state)
}

pub fn continue_family(cfg: &RunConfig, out: &Path) -> Result<(), CmdError> {
    let sweep = match cfg.task.sweep.as_str() {
        "mu" => SweepParam::Mu,
        "omega" => SweepParam::Omega,
        other => {
            return Err(CmdError::Config(vec![format!(
                "task.sweep = {other:?} must be \"mu\" or \"omega\""
            )]))
        }
    };
    let start = solve_state(cfg)?;
    let opts = continuation_options(cfg);
    let curve = core::continue_family(&start, sweep, cfg.task.target, &opts)?;

    let mut pre = preamble(cfg, "continue");
    pre.push(("sweep", sweep.name().to_string()));
    pre.push(("target", fmt(cfg.task.target)));
    pre.push((
        "fold",
        curve.fold.map(fmt).unwrap_or_else(|| "none".into()),
    ));
    pre.push(("termination", format!("{:?}", curve.termination)));
    let mut csv = CsvWriter::create(
        &out.join("family.csv"),
        &pre,
        &[
            "parameter",
            "norm",
            "stable",
            "residual_inf",
            "family_tag",
        ],
    )?;
    for pt in &curve.points {
        csv.row(&[
            fmt(pt.param),
            fmt(pt.norm),
            fmt_opt(pt.stable),
            fmt(pt.state.residual_inf),
            pt.state.family_tag.to_string(),
        ])?;
    }
    csv.finish()?;

    if cfg.task.write_states {
        for (i, pt) in curve.points.iter().enumerate() {
            io::write_field(
                &out.join(format!("family_{i:04}.qd2d")),
                &pt.state.phi,
                &pt.state.params,
                0.0,
                &cfg.provenance_hash(),
            )?;
        }
    } else if let Some(last) = curve.points.last() {
        io::write_field(
            &out.join("family_last.qd2d"),
            &last.state.phi,
            &last.state.params,
            0.0,
            &cfg.provenance_hash(),
        )?;
    }
    Ok(())
}

pub fn bdg(cfg: &RunConfig, out: &Path) -> Result<(), CmdError> {
    let state = match cfg.task.state_file.as_ref() {
        Some(path) => {
            let (phi, header) = io::read_field(Path::new(path))?;
            let fields = core::build_pt_hog(phi.grid(), &header.params);
            let residual = core::residual(&fields, &header.params, &phi)?;
            StationaryState {
                norm: core::norm(&phi),
                residual_inf: residual.inf_norm(),
                family_tag: core::count_density_peaks(&phi),
                stability: None,
                params: header.params,
                phi,
            }
        }
        None => solve_state(cfg)?,
    };
    let opts = bdg_options(cfg);
    let spec = core::bdg_spectrum(&state, &opts)?;
    let tol = core::default_classify_tol(state.params.mu);
    let verdict = core::classify(&spec, tol);

    let mut pre = preamble(cfg, "bdg");
    pre.push(("method", format!("{:?}", spec.method)));
    pre.push(("max_im", fmt(spec.max_im)));
    pre.push(("classify_tol", fmt(tol)));
    pre.push(("verdict", format!("{verdict:?}")));
    pre.push(("quartet_defect", fmt(core::quartet_defect(&spec))));
    let mut csv = CsvWriter::create(
        &out.join("bdg.csv"),
        &pre,
        &["index", "re_eps", "im_eps", "residual"],
    )?;
    for (i, (e, r)) in spec.eigenvalues.iter().zip(&spec.residuals).enumerate() {
        csv.row(&[i.to_string(), fmt(e.re), fmt(e.im), fmt(*r)])?;
    }
    csv.finish()?;
    Ok(())
}

fn write_run_outputs(
    cfg: &RunConfig,
    out: &Path,
    name: &str,
    run: &core::EvolutionRun,
) -> Result<(), CmdError> {
    let mut csv = CsvWriter::create(
        &out.join(format!("{name}_diagnostics.csv")),
        &preamble(cfg, name),
        &[
            "t",
            "norm",
            "re_quasi_energy",
            "im_quasi_energy",
            "peak_density",
            "com_x",
            "com_y",
            "asymmetry",
            "winding",
            "components",
        ],
    )?;
    for frame in &run.diagnostics {
        // component count at the half-maximum level for the nearest stored frame
        let comps = run
            .frames
            .iter()
            .find(|(t, _)| (*t - frame.t).abs() < 0.5 * run.dt)
            .map(|(_, f)| core::track_peaks(f, 0.5).len());
        csv.row(&[
            fmt(frame.t),
            fmt(frame.obs.norm),
            fmt(frame.obs.quasi_energy.re),
            fmt(frame.obs.quasi_energy.im),
            fmt(frame.obs.peak),
            fmt(frame.obs.com.0),
            fmt(frame.obs.com.1),
            fmt(frame.obs.asymmetry),
            frame
                .obs
                .winding
                .map(|w| w.to_string())
                .unwrap_or_default(),
            comps.map(|c| c.to_string()).unwrap_or_default(),
        ])?;
    }
    csv.finish()?;

    if cfg.output.write_frames {
        for (i, (t, field)) in run.frames.iter().enumerate() {
            io::write_field(
                &out.join(format!("{name}_{i:04}.qd2d")),
                field,
                &run.params,
                *t,
                &cfg.provenance_hash(),
            )?;
        }
    } else if let Some((t, field)) = run.frames.last() {
        io::write_field(
            &out.join(format!("{name}_final.qd2d")),
            field,
            &run.params,
            *t,
            &cfg.provenance_hash(),
        )?;
    }
    Ok(())
}

fn evolve_spec(cfg: &RunConfig) -> EvolveSpec {
    EvolveSpec {
        dt: cfg.task.dt,
        t_final: cfg.task.t_final,
        snapshot_stride: cfg.task.snapshot_stride,
        noise_amplitude: (cfg.task.noise != 0.0).then_some(cfg.task.noise),
        rng_seed: cfg.rng_seed,
        store_frames: cfg.output.write_frames,
        winding_radius: cfg.task.winding_radius,
    }
}

pub fn evolve(cfg: &RunConfig, out: &Path) -> Result<(), CmdError> {
    let grid = make_grid(cfg)?;
    let params = cfg.model.params();
    let fields = core::build_pt_hog(&grid, &params);
    let psi0 = match cfg.task.seed_file.as_ref() {
        Some(path) => {
            let (field, _) = io::read_field(Path::new(path))?;
            if !field.grid().same_geometry(&grid) {
                return Err(CmdError::Config(vec![format!(
                    "initial state {path} grid does not match the configured grid"
                )]));
            }
            field
        }
        None => resolve_seed(cfg, &grid, &fields)?,
    };
    let run = core::evolve(&fields, &params, &psi0, &evolve_spec(cfg))?;
    write_run_outputs(cfg, out, "evolve", &run)
}

pub fn collide(cfg: &RunConfig, out: &Path) -> Result<(), CmdError> {
    let grid = make_grid(cfg)?;
    let params = cfg.model.params();
    let fields = core::build_pt_hog(&grid, &params);
    let extra = match cfg.task.extra_state_file.as_ref() {
        Some(path) => {
            let (phi, header) = io::read_field(Path::new(path))?;
            if !phi.grid().same_geometry(&grid) {
                return Err(CmdError::Config(vec![format!(
                    "extra state {path} grid does not match the configured grid"
                )]));
            }
            Some(StationaryState {
                norm: core::norm(&phi),
                residual_inf: 0.0,
                family_tag: core::count_density_peaks(&phi),
                stability: None,
                params: header.params,
                phi,
            })
        }
        None => None,
    };
    let psi0 = core::collision_ic(
        &grid,
        &params,
        cfg.task.a,
        cfg.task.b,
        (cfg.task.r0[0], cfg.task.r0[1]),
        extra.as_ref(),
    )?;
    let run = core::evolve(&fields, &params, &psi0, &evolve_spec(cfg))?;
    write_run_outputs(cfg, out, "collide", &run)
}
