use qdrop2d_core::*;
use std::time::Instant;

fn run_family(fields: &PotentialFields, spec: &LinearSpectrum, p0: &ModelParams,
              target_lambda: f64, paper_fold: f64) {
    let (idx, lam) = spec.eigenvalues.iter().enumerate()
        .min_by(|(_, a), (_, b)| (a.re - target_lambda).abs().total_cmp(&(b.re - target_lambda).abs()))
        .map(|(i, l)| (i, l.re)).unwrap();
    let t = Instant::now();
    let p = p0.with_mu(lam - 0.1);
    let states = amplitude_scan(fields, &p, &spec.modes[idx], &[0.2, 0.35, 0.5, 0.7, 1.0], 1e-2, &SolveOptions::default());
    let Some(start) = states.into_iter().next() else {
        println!("mode {idx}: no nontrivial state");
        return;
    };
    let opts = ContinuationOptions { stop_after_fold: Some(6), ..Default::default() };
    match continue_family(&start, SweepParam::Mu, 1.0, &opts) {
        Ok(curve) => {
            let f = curve.fold.unwrap_or(f64::NAN);
            println!("mode {idx} (lam {lam:.5}): tag {} | fold {f:.6} vs paper {paper_fold} | diff {:.2e} | {} pts, {:.1?}",
                     start.family_tag, (f - paper_fold).abs(), curve.points.len(), t.elapsed());
        }
        Err(e) => println!("mode {idx}: continuation FAILED: {e}"),
    }
}

fn main() {
    env_logger::init();
    let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
    let p0 = ModelParams { sigma: 1.0, omega: 0.0, v0: -1.0/16.0, v1: 1.0, w0: 1.0, mu: 0.0 };
    let fields = build_pt_hog(&g, &p0);
    let spec = linear_eigs(&g, &fields, 6, &LinearEigOptions::default()).unwrap();
    run_family(&fields, &spec, &p0, 2.2473, 1.9485);
    run_family(&fields, &spec, &p0, 4.216, 3.90054);
    run_family(&fields, &spec, &p0, 6.1097, 5.8187);
    run_family(&fields, &spec, &p0, 6.1739, 5.8622);
}
