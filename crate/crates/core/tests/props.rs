//! Property tests of the spectral substrate and diagnostics.

use num_complex::Complex64;
use proptest::prelude::*;

use qdrop2d_core::*;

fn smooth_field(grid: &SharedGrid, coeffs: &[(f64, f64, f64)]) -> ComplexField {
    // random superposition of decayed Gaussians and vortex factors
    ComplexField::from_fn(grid, |x, y| {
        let mut z = Complex64::default();
        for &(a, x0, y0) in coeffs {
            let r2 = (x - x0) * (x - x0) + (y - y0) * (y - y0);
            z += Complex64::new(a * (-r2).exp(), 0.3 * a * (-1.3 * r2).exp());
        }
        z
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn parseval_holds(seeds in prop::collection::vec((-1.0..1.0f64, -2.0..2.0f64, -2.0..2.0f64), 1..4)) {
        let g = Grid2::new(64, 64, 6.0, 6.0).unwrap();
        let f = smooth_field(&g, &seeds);
        let phys: f64 = f.data().iter().map(|v| v.norm_sqr()).sum();
        let mut spec = f.clone();
        let lap = laplacian(&spec); // force a transform path through the public API
        let _ = lap;
        // Parseval via norm and the identity |grad f|^2 integral = -Re<f, lap f>
        let (dx, dy) = gradient(&f);
        let grad2: f64 = dx.data().iter().map(|v| v.norm_sqr()).sum::<f64>()
            + dy.data().iter().map(|v| v.norm_sqr()).sum::<f64>();
        let mut inner = 0.0;
        for (a, b) in f.data().iter().zip(laplacian(&f).data()) {
            inner += (a.conj() * b).re;
        }
        spec.data_mut()[0] += Complex64::default();
        if phys > 1e-12 {
            prop_assert!(((grad2 + inner) / phys).abs() < 1e-9,
                "integration by parts violated: {}", (grad2 + inner) / phys);
        }
    }

    #[test]
    fn winding_recovers_synthetic_charge(m in -3i64..=3, radius in 0.8..3.0f64) {
        let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
        let f = ComplexField::from_fn(&g, |x, y| {
            let z = Complex64::new(x, y);
            let zp = if m >= 0 { z.powi(m as i32) } else { z.conj().powi((-m) as i32) };
            zp * (-(x * x + y * y) / 2.0).exp()
        });
        if m == 0 {
            prop_assert_eq!(winding(&f, radius).unwrap().charge, 0);
        } else {
            let w = winding(&f, radius).unwrap();
            prop_assert_eq!(w.charge, m);
            prop_assert!(w.residual < 0.01);
        }
    }

    #[test]
    fn quadrature_is_linear_and_positive(a in 0.1..3.0f64, b in 0.1..3.0f64) {
        let g = Grid2::new(64, 64, 8.0, 8.0).unwrap();
        let f = RealField::from_fn(&g, |x, y| a * (-(x * x + y * y)).exp());
        let h = RealField::from_fn(&g, |x, y| b * (-(x * x + y * y) / 2.0).exp());
        let sum = RealField::from_fn(&g, |x, y| {
            a * (-(x * x + y * y)).exp() + b * (-(x * x + y * y) / 2.0).exp()
        });
        let lhs = integrate(&sum);
        let rhs = integrate(&f) + integrate(&h);
        prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        prop_assert!(integrate(&f) > 0.0);
    }
}

#[test]
fn pt_conjugate_pairing_past_threshold() {
    // past the threshold, complex eigenvalues occur in conjugate pairs
    let g = Grid2::new(32, 32, 8.0, 8.0).unwrap();
    let p = ModelParams {
        sigma: 1.0,
        omega: 0.0,
        v0: -1.0 / 16.0,
        v1: 1.0,
        w0: 5.0,
        mu: 0.0,
    };
    let fields = build_pt_hog(&g, &p);
    let spec = linear_eigs(&g, &fields, 10, &LinearEigOptions::default()).unwrap();
    let complex: Vec<_> = spec
        .eigenvalues
        .iter()
        .filter(|l| l.im.abs() > 1e-6)
        .collect();
    assert!(!complex.is_empty(), "w0=5 must be PT-broken");
    for lam in &complex {
        let partner = spec
            .eigenvalues
            .iter()
            .map(|m| (m - lam.conj()).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(partner < 1e-6, "unpaired complex eigenvalue {lam}");
    }
}
