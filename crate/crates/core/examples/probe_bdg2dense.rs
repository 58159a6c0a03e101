use num_complex::Complex64;
use qdrop2d_core::*;

fn main() {
    let g = Grid2::new(48, 48, 8.0, 8.0).unwrap();
    let p = exact_params(1.0, 1.0).unwrap();
    let fields = build_pt_hog(&g, &p);
    let state = newton_cg_solve(&fields, &p, &exact_droplet(&g, 1.0), &SolveOptions::default()).unwrap();
    let opts = BdgOptions { dense_threshold: 48 * 48, ..Default::default() };
    let spec = bdg_spectrum(&state, &opts).unwrap();
    let kmax2 = {
        let km = g.kx().iter().cloned().fold(0.0_f64, f64::max);
        2.0 * km * km
    };
    println!("kmax^2 (two axes) = {kmax2:.1}");
    let mut complexes: Vec<&Complex64> = spec.eigenvalues.iter().filter(|e| e.im.abs() > 1e-6).collect();
    complexes.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    println!("{} eigenvalues with |Im| > 1e-6 out of {}", complexes.len(), spec.n_computed);
    for e in complexes.iter().take(6) {
        println!("   smallest |eps|: {:+.3} {:+.4}i", e.re, e.im);
    }
    for e in complexes.iter().rev().take(3) {
        println!("   largest |eps|: {:+.3} {:+.4}i", e.re, e.im);
    }
}
