//! Cached 1D/2D FFTs over row-major `nx x ny` complex data.
//!
//! Layout convention: `data[j * ny + k]` holds the sample at `(x_j, y_k)`,
//! so axis Y is contiguous and axis X is strided with stride `ny`.
//! Forward transforms are unnormalized; inverse transforms carry the 1/n
//! factor so that `inverse(forward(f)) == f` up to roundoff.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) enum Axis {
    X,
    Y,
}

type PlanKey = (usize, bool);

fn plan(len: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<PlanKey, Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().expect("fft plan cache poisoned");
    cache
        .entry((len, forward))
        .or_insert_with(|| {
            let dir = if forward {
                FftDirection::Forward
            } else {
                FftDirection::Inverse
            };
            FftPlanner::new().plan_fft(len, dir)
        })
        .clone()
}

fn transform_axis(data: &mut [Complex64], nx: usize, ny: usize, axis: Axis, forward: bool) {
    debug_assert_eq!(data.len(), nx * ny);
    match axis {
        Axis::Y => {
            let fft = plan(ny, forward);
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            for row in data.chunks_exact_mut(ny) {
                fft.process_with_scratch(row, &mut scratch);
            }
            if !forward {
                let scale = 1.0 / ny as f64;
                for v in data.iter_mut() {
                    *v *= scale;
                }
            }
        }
        Axis::X => {
            let fft = plan(nx, forward);
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            let mut column = vec![Complex64::default(); nx];
            for k in 0..ny {
                for j in 0..nx {
                    column[j] = data[j * ny + k];
                }
                fft.process_with_scratch(&mut column, &mut scratch);
                let scale = if forward { 1.0 } else { 1.0 / nx as f64 };
                for j in 0..nx {
                    data[j * ny + k] = column[j] * scale;
                }
            }
        }
    }
}

pub(crate) fn forward_axis(data: &mut [Complex64], nx: usize, ny: usize, axis: Axis) {
    transform_axis(data, nx, ny, axis, true);
}

pub(crate) fn inverse_axis(data: &mut [Complex64], nx: usize, ny: usize, axis: Axis) {
    transform_axis(data, nx, ny, axis, false);
}

pub(crate) fn forward2(data: &mut [Complex64], nx: usize, ny: usize) {
    transform_axis(data, nx, ny, Axis::Y, true);
    transform_axis(data, nx, ny, Axis::X, true);
}

pub(crate) fn inverse2(data: &mut [Complex64], nx: usize, ny: usize) {
    transform_axis(data, nx, ny, Axis::X, false);
    transform_axis(data, nx, ny, Axis::Y, false);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_identity() {
        let (nx, ny) = (16, 32);
        let mut data: Vec<Complex64> = (0..nx * ny)
            .map(|i| Complex64::new((i % 7) as f64, (i % 5) as f64 - 2.0))
            .collect();
        let orig = data.clone();
        forward2(&mut data, nx, ny);
        inverse2(&mut data, nx, ny);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_dft_on_axis() {
        let nx = 8;
        let ny = 4;
        let mut data: Vec<Complex64> = (0..nx * ny)
            .map(|i| Complex64::new(i as f64, -(i as f64) / 3.0))
            .collect();
        let orig = data.clone();
        forward_axis(&mut data, nx, ny, Axis::X);
        // Direct DFT along x for one y column.
        let k = 1usize;
        for m in 0..nx {
            let mut acc = Complex64::default();
            for j in 0..nx {
                let phase = -2.0 * std::f64::consts::PI * (m * j) as f64 / nx as f64;
                acc += orig[j * ny + k] * Complex64::from_polar(1.0, phase);
            }
            assert!((acc - data[m * ny + k]).norm() < 1e-9);
        }
    }
}
