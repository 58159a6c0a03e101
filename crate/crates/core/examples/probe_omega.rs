use qdrop2d_core::*;
use std::time::Instant;

fn main() {
    env_logger::init();
    let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
    let p = exact_params(1.0, 1.0).unwrap();
    let fields = build_pt_hog(&g, &p);
    let start = newton_cg_solve(&fields, &p, &exact_droplet(&g, 1.0), &SolveOptions::default()).unwrap();
    let t = Instant::now();
    let opts = ContinuationOptions { max_points: 200, ..Default::default() };
    match continue_family(&start, SweepParam::Omega, 2.0, &opts) {
        Ok(curve) => {
            println!("omega sweep: {} pts in {:.1?}, term {:?}, fold {:?}",
                     curve.points.len(), t.elapsed(), curve.termination, curve.fold);
            println!("max omega reached = {:.5} (paper 1.352)", curve.max_param());
            let m = curve.points.len();
            for pt in curve.points.iter().skip(m.saturating_sub(8)) {
                println!("   omega {:.5} N {:.4} asym {:.3e}", pt.param, pt.norm, asymmetry(&pt.state.phi));
            }
            // monotone N growth check
            let mono = curve.points.windows(2).all(|w| w[1].norm >= w[0].norm - 1e-9 || w[1].param < w[0].param);
            println!("monotone N along increasing omega: {mono}");
        }
        Err(e) => println!("FAILED {e}"),
    }
}
