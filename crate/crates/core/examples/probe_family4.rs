use qdrop2d_core::*;
use std::time::Instant;

fn main() {
    env_logger::init();
    let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
    let p0 = ModelParams { sigma: 1.0, omega: 0.0, v0: -1.0/16.0, v1: 1.0, w0: 1.0, mu: 0.0 };
    let fields = build_pt_hog(&g, &p0);
    let spec = linear_eigs(&g, &fields, 6, &LinearEigOptions::default()).unwrap();
    let (idx, lam) = (5usize, spec.eigenvalues[5].re);
    println!("mode {idx} lambda {lam:.5}");
    let p = p0.with_mu(lam - 0.1);
    let states = amplitude_scan(&fields, &p, &spec.modes[idx], &[0.2, 0.35, 0.5, 0.7, 1.0], 1e-2, &SolveOptions::default());
    let start = states.into_iter().next().unwrap();
    println!("start N {:.5} tag {} resid {:.2e}", start.norm, start.family_tag, start.residual_inf);
    let t = Instant::now();
    let opts = ContinuationOptions { stop_after_fold: Some(6), ..Default::default() };
    let curve = continue_family(&start, SweepParam::Mu, 1.0, &opts);
    match curve {
        Ok(c) => println!("{} pts {:.2?} fold {:?} term {:?}", c.points.len(), t.elapsed(), c.fold, c.termination),
        Err(e) => println!("ERR {e}"),
    }
}
