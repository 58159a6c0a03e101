use qdrop2d_core::*;
use std::time::Instant;

fn main() {
    let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
    let p = ModelParams { sigma: 1.0, omega: 0.0, v0: -1.0/16.0, v1: 1.0, w0: 1.0, mu: 0.0 };
    let fields = build_pt_hog(&g, &p);
    let t = Instant::now();
    let spec = linear_eigs(&g, &fields, 6, &LinearEigOptions::default());
    match spec {
        Ok(s) => {
            println!("128^2 arnoldi took {:.2?}", t.elapsed());
            for (l, r) in s.eigenvalues.iter().zip(&s.residuals) {
                println!("  lambda = {:+.6} {:+.3e}i   resid {:.2e}", l.re, l.im, r);
            }
        }
        Err(e) => println!("FAILED after {:.2?}: {e}", t.elapsed()),
    }

    // harmonic limit at 64^2 via arnoldi (degenerate cluster)
    let g64 = Grid2::new(64, 64, 8.0, 8.0).unwrap();
    let ph = ModelParams { sigma: 1.0, omega: 0.0, v0: 0.0, v1: 0.0, w0: 0.0, mu: 0.0 };
    let fh = build_pt_hog(&g64, &ph);
    let t = Instant::now();
    match linear_eigs(&g64, &fh, 6, &LinearEigOptions::default()) {
        Ok(s) => {
            println!("64^2 harmonic arnoldi took {:.2?}", t.elapsed());
            for (l, r) in s.eigenvalues.iter().zip(&s.residuals) {
                println!("  lambda = {:+.6} {:+.3e}i   resid {:.2e}", l.re, l.im, r);
            }
        }
        Err(e) => println!("harmonic FAILED after {:.2?}: {e}", t.elapsed()),
    }
}
