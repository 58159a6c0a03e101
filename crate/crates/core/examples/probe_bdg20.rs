use num_complex::Complex64;
use qdrop2d_core::*;
use std::time::Instant;

fn main() {
    env_logger::init();
    let g = Grid2::new(48, 48, 8.0, 8.0).unwrap();
    let p = exact_params(1.0, 1.0).unwrap().with_mu(20.0);
    let fields = build_pt_hog(&g, &p);
    let r_tf = 20.0_f64.sqrt();
    let profile = ComplexField::from_fn(&g, |x, y| {
        let r2 = (x * x + y * y) / (r_tf * r_tf);
        Complex64::new((-r2 * r2).exp(), 0.0)
    });
    let states = amplitude_scan(&fields, &p, &profile, &[2.5, 3.0, 3.5], 1.0, &SolveOptions::default());
    let Some(state) = states.into_iter().next() else { println!("no state"); return; };
    println!("48^2 mu=20: N = {:.4}, peak |phi| = {:.4}", state.norm, state.phi.max_abs());
    let t = Instant::now();
    let opts = BdgOptions { dense_threshold: 48 * 48, ..Default::default() };
    let spec = bdg_spectrum(&state, &opts).unwrap();
    println!("dense BdG ({} eigs) in {:.1?}; max_im = {:.4e}", spec.n_computed, t.elapsed(), spec.max_im);
    let mut complexes: Vec<&Complex64> = spec.eigenvalues.iter().filter(|e| e.im.abs() > 1e-4).collect();
    complexes.sort_by(|a, b| b.im.abs().total_cmp(&a.im.abs()));
    println!("{} eigenvalues with |Im| > 1e-4; worst 12:", complexes.len());
    for e in complexes.iter().take(12) {
        println!("   eps = {:+.4} {:+.4}i  (|eps| = {:.3})", e.re, e.im, e.norm());
    }
}
