use num_complex::Complex64;
use qdrop2d_core::*;
use std::time::Instant;

fn deviation(run: &EvolutionRun, state: &StationaryState) -> Vec<(f64, f64)> {
    // || |psi(t)| - |phi| ||_inf per frame
    run.frames.iter().map(|(t, f)| {
        let mut d: f64 = 0.0;
        for (a, b) in f.data().iter().zip(state.phi.data()) {
            d = d.max((a.norm() - b.norm()).abs());
        }
        (*t, d)
    }).collect()
}

fn main() {
    env_logger::init();
    let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
    let p = exact_params(1.0, 1.0).unwrap();
    let fields = build_pt_hog(&g, &p);

    // mu=20 flat-top
    let p20 = p.with_mu(20.0);
    let r_tf = 20.0_f64.sqrt();
    let profile = ComplexField::from_fn(&g, |x, y| {
        let r2 = (x * x + y * y) / (r_tf * r_tf);
        Complex64::new((-r2 * r2).exp(), 0.0)
    });
    let s20 = amplitude_scan(&fields, &p20, &profile, &[3.0], 1.0, &SolveOptions::default())
        .into_iter().next().unwrap();
    let spec = EvolveSpec {
        dt: 1e-3, t_final: 60.0, snapshot_stride: 5000,
        noise_amplitude: Some(1e-4), rng_seed: 7, store_frames: true, winding_radius: None,
    };
    let t = Instant::now();
    let run = evolve(&fields, &p20, &s20.phi, &spec).unwrap();
    println!("mu=20 evolve took {:.1?}", t.elapsed());
    for (t, d) in deviation(&run, &s20) {
        println!("   t = {t:5.1}  dev = {d:.4e}");
    }

    // mu=2 exact droplet (stable contrast)
    let s2 = newton_cg_solve(&fields, &p, &exact_droplet(&g, 1.0), &SolveOptions::default()).unwrap();
    let t = Instant::now();
    let run = evolve(&fields, &p, &s2.phi, &spec).unwrap();
    println!("mu=2 evolve took {:.1?}", t.elapsed());
    for (t, d) in deviation(&run, &s2).iter().step_by(3) {
        println!("   t = {:5.1}  dev = {:.4e}", t, d);
    }
}
