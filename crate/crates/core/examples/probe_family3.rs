use num_complex::Complex64;
use qdrop2d_core::*;

fn main() {
    env_logger::init();
    let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
    let p0 = ModelParams { sigma: 1.0, omega: 0.0, v0: -1.0/16.0, v1: 1.0, w0: 1.0, mu: 0.0 };
    let fields = build_pt_hog(&g, &p0);
    let spec = linear_eigs(&g, &fields, 6, &LinearEigOptions::default()).unwrap();
    let lam = 0.5 * (spec.eigenvalues[3].re + spec.eigenvalues[4].re);
    let combos: Vec<(&str, Complex64)> = vec![
        ("re+", Complex64::new(1.0, 0.0)),
        ("re-", Complex64::new(-1.0, 0.0)),
    ];
    for (label, coef) in combos {
        let combo = ComplexField::from_data(
            &g,
            spec.modes[3].data().iter().zip(spec.modes[4].data())
                .map(|(a, b)| (a + coef * b) / Complex64::new(2.0_f64.sqrt(), 0.0))
                .collect(),
        ).unwrap();
        let p = p0.with_mu(lam - 0.1);
        let states = amplitude_scan(&fields, &p, &combo, &[0.2, 0.35, 0.5], 1e-2, &SolveOptions::default());
        let Some(start) = states.into_iter().next() else {
            println!("combo {label}: no state");
            continue;
        };
        let opts = ContinuationOptions { stop_after_fold: Some(4), ds_max: 0.08, ..Default::default() };
        match continue_family(&start, SweepParam::Mu, 1.0, &opts) {
            Ok(curve) => println!("combo {label}: start tag {} | fold {:?} vs 5.8187 | pts {}",
                                  start.family_tag, curve.fold, curve.points.len()),
            Err(e) => println!("combo {label}: FAILED {e}"),
        }
    }
}
