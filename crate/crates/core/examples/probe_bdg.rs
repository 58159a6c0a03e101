use num_complex::Complex64;
use qdrop2d_core::*;
use std::time::Instant;

fn main() {
    env_logger::init();
    let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
    let p = exact_params(1.0, 1.0).unwrap();
    let fields = build_pt_hog(&g, &p);

    // bottom-branch state at mu=2 is the exact droplet; converge it to solver tol
    let t = Instant::now();
    let state = newton_cg_solve(&fields, &p, &exact_droplet(&g, 1.0), &SolveOptions::default()).unwrap();
    println!("mu=2 state: N={:.6} resid {:.2e} ({:.1?})", state.norm, state.residual_inf, t.elapsed());

    let t = Instant::now();
    match bdg_spectrum(&state, &BdgOptions::default()) {
        Ok(spec) => {
            println!("BdG mu=2: {} eigs in {:.1?}, max_im = {:.3e}, quartet defect {:.2e}",
                     spec.n_computed, t.elapsed(), spec.max_im, quartet_defect(&spec));
            for e in spec.eigenvalues.iter().take(8) {
                println!("   eps = {:+.5} {:+.2e}i", e.re, e.im);
            }
            println!("   verdict: {:?}", classify(&spec, default_classify_tol(2.0)));
        }
        Err(e) => println!("BdG mu=2 FAILED after {:.1?}: {e}", t.elapsed()),
    }

    // top-branch flat-top at mu=20 via amplitude scan of a super-Gaussian
    let p20 = p.with_mu(20.0);
    let r_tf = 20.0_f64.sqrt();
    let profile = ComplexField::from_fn(&g, |x, y| {
        let r2 = (x * x + y * y) / (r_tf * r_tf);
        Complex64::new((-r2 * r2).exp(), 0.0)
    });
    let t = Instant::now();
    let states = amplitude_scan(&fields, &p20, &profile, &[1.5, 2.0, 3.0, 4.0, 5.0], 1.0, &SolveOptions::default());
    for s in &states {
        println!("mu=20 candidate: N = {:.4}, peak = {:.4}, tag {} ({:.1?})",
                 s.norm, s.phi.max_abs(), s.family_tag, t.elapsed());
    }
    let Some(state20) = states.into_iter().next() else { println!("no mu=20 state"); return; };
    let t = Instant::now();
    match bdg_spectrum(&state20, &BdgOptions::default()) {
        Ok(spec) => {
            println!("BdG mu=20: {} eigs in {:.1?}, max_im = {:.3e}, quartet defect {:.2e}",
                     spec.n_computed, t.elapsed(), spec.max_im, quartet_defect(&spec));
            println!("   verdict: {:?}", classify(&spec, default_classify_tol(20.0)));
        }
        Err(e) => println!("BdG mu=20 FAILED after {:.1?}: {e}", t.elapsed()),
    }
}
