//! Uniform periodic 2D grid, complex/real fields and spectral calculus.
//!
//! The computational box is `[-lx, lx) x [-ly, ly)` sampled at `nx x ny`
//! points, `x_j = -lx + j*dx`. Wavenumbers follow standard FFT ordering,
//! `kx_j = pi * j' / lx` with `j'` the signed FFT index.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Relative boundary amplitude above which the edge-decay guard warns.
pub const EDGE_DECAY_WARN_RATIO: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Grid2 {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    kx: Vec<f64>,
    ky: Vec<f64>,
}

pub type SharedGrid = Arc<Grid2>;

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let signed = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
            std::f64::consts::PI * signed as f64 / l
        })
        .collect()
}

impl Grid2 {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<SharedGrid> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 16 {
                return Err(Error::InvalidGrid(format!("{name} = {n} below minimum 16")));
            }
            if n % 2 != 0 {
                return Err(Error::InvalidGrid(format!("{name} = {n} must be even")));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidGrid(format!("{name} = {l} must be positive")));
            }
        }
        let dx = 2.0 * lx / nx as f64;
        let dy = 2.0 * ly / ny as f64;
        let x = (0..nx).map(|j| -lx + j as f64 * dx).collect();
        let y = (0..ny).map(|k| -ly + k as f64 * dy).collect();
        Ok(Arc::new(Grid2 {
            nx,
            ny,
            lx,
            ly,
            x,
            y,
            kx: wavenumbers(nx, lx),
            ky: wavenumbers(ny, ly),
        }))
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }
    pub fn dy(&self) -> f64 {
        2.0 * self.ly / self.ny as f64
    }
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }
    pub fn ky(&self) -> &[f64] {
        &self.ky
    }

    #[inline]
    pub fn idx(&self, j: usize, k: usize) -> usize {
        j * self.ny + k
    }

    /// Grid index of `-r` for interior points; the `x = -lx` / `y = -ly`
    /// lines have no mirror on the grid.
    pub fn mirror(&self, j: usize, k: usize) -> Option<(usize, usize)> {
        if j == 0 || k == 0 {
            None
        } else {
            Some((self.nx - j, self.ny - k))
        }
    }

    pub fn same_geometry(&self, other: &Grid2) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }

    /// Rectangle-rule quadrature; spectrally accurate for periodic or
    /// edge-decayed integrands.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        debug_assert_eq!(samples.len(), self.len());
        samples.iter().sum::<f64>() * self.cell_area()
    }
}

fn check_same_grid(a: &Grid2, b: &Grid2) -> Result<()> {
    if a.same_geometry(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

#[derive(Debug, Clone)]
pub struct RealField {
    grid: SharedGrid,
    data: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: &SharedGrid) -> Self {
        RealField {
            grid: grid.clone(),
            data: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: &SharedGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for &xv in grid.x() {
            for &yv in grid.y() {
                data.push(f(xv, yv));
            }
        }
        RealField {
            grid: grid.clone(),
            data,
        }
    }

    pub fn from_data(grid: &SharedGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "data length {} does not match grid {}x{}",
                data.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(RealField {
            grid: grid.clone(),
            data,
        })
    }

    pub fn grid(&self) -> &SharedGrid {
        &self.grid
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Edge-decay guard: largest |value| on the outermost ring relative to the
/// global maximum. Silent aliasing is the main failure mode of periodic
/// boxes, so callers warn when this exceeds [`EDGE_DECAY_WARN_RATIO`].
pub fn boundary_ratio_real(f: &RealField) -> f64 {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut edge: f64 = 0.0;
    let mut all: f64 = 0.0;
    for j in 0..nx {
        for k in 0..ny {
            let v = f.data[g.idx(j, k)].abs();
            all = all.max(v);
            if j == 0 || k == 0 || j == nx - 1 || k == ny - 1 {
                edge = edge.max(v);
            }
        }
    }
    if all == 0.0 {
        0.0
    } else {
        edge / all
    }
}

/// Quadrature of a real-valued field with the edge-decay guard.
pub fn integrate(f: &RealField) -> f64 {
    let ratio = boundary_ratio_real(f);
    if ratio > EDGE_DECAY_WARN_RATIO {
        log::warn!(
            "integrand does not decay at the box edge (boundary/max = {ratio:.3e}); \
             periodic quadrature may alias"
        );
    }
    f.grid.integrate(&f.data)
}

#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: SharedGrid,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: &SharedGrid) -> Self {
        ComplexField {
            grid: grid.clone(),
            data: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_fn(grid: &SharedGrid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for &xv in grid.x() {
            for &yv in grid.y() {
                data.push(f(xv, yv));
            }
        }
        ComplexField {
            grid: grid.clone(),
            data,
        }
    }

    pub fn from_data(grid: &SharedGrid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "data length {} does not match grid {}x{}",
                data.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        if !data.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ComplexField {
            grid: grid.clone(),
            data,
        })
    }

    pub fn grid(&self) -> &SharedGrid {
        &self.grid
    }
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// |psi|^2 sampled on the grid.
    pub fn density(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn scaled(&self, factor: Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Measure-weighted inner product `integral conj(self) * other`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        check_same_grid(&self.grid, &other.grid)?;
        let mut acc = Complex64::default();
        for (a, b) in self.data.iter().zip(&other.data) {
            acc += a.conj() * b;
        }
        Ok(acc * self.grid.cell_area())
    }

    /// L2 norm `sqrt(integral |psi|^2)`.
    pub fn l2_norm(&self) -> f64 {
        (self
            .data
            .iter()
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            * self.grid.cell_area())
        .sqrt()
    }

    /// Pointwise sup-norm.
    pub fn inf_norm(&self) -> f64 {
        self.max_abs()
    }
}

fn spectral_apply(
    f: &ComplexField,
    symbol: impl Fn(f64, f64) -> Complex64,
) -> ComplexField {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut data = f.data().to_vec();
    fft::forward2(&mut data, nx, ny);
    for (j, &kxj) in g.kx().iter().enumerate() {
        for (k, &kyk) in g.ky().iter().enumerate() {
            data[j * ny + k] *= symbol(kxj, kyk);
        }
    }
    fft::inverse2(&mut data, nx, ny);
    ComplexField {
        grid: f.grid.clone(),
        data,
    }
}

/// Spectral Laplacian.
pub fn laplacian(f: &ComplexField) -> ComplexField {
    spectral_apply(f, |kx, ky| Complex64::new(-(kx * kx + ky * ky), 0.0))
}

/// Spectral gradient `(d/dx f, d/dy f)`.
///
/// The Nyquist mode is zeroed in each first derivative so real input maps
/// to real output.
pub fn gradient(f: &ComplexField) -> (ComplexField, ComplexField) {
    let g = f.grid();
    let kx_max = g.kx().iter().cloned().fold(0.0_f64, f64::max);
    let ky_max = g.ky().iter().cloned().fold(0.0_f64, f64::max);
    let dx = spectral_apply(f, |kx, _| {
        if kx.abs() >= kx_max {
            Complex64::default()
        } else {
            Complex64::new(0.0, kx)
        }
    });
    let dy = spectral_apply(f, |_, ky| {
        if ky.abs() >= ky_max {
            Complex64::default()
        } else {
            Complex64::new(0.0, ky)
        }
    });
    (dx, dy)
}

/// Exact spectral translation `f(r) -> f(r - r0)` on the periodic box.
pub fn translate(f: &ComplexField, r0: (f64, f64)) -> ComplexField {
    spectral_apply(f, |kx, ky| {
        Complex64::from_polar(1.0, -(kx * r0.0 + ky * r0.1))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid128() -> SharedGrid {
        Grid2::new(128, 128, 8.0, 8.0).unwrap()
    }

    #[test]
    fn make_grid_tables() {
        let g = Grid2::new(128, 128, 8.0, 8.0).unwrap();
        assert!((g.dx() - 0.125).abs() < 1e-15);
        let kmax = g.kx().iter().cloned().fold(0.0_f64, f64::max);
        assert!((kmax - PI * 128.0 / 16.0).abs() < 1e-12);
        assert!((g.x()[0] + 8.0).abs() < 1e-15);
    }

    #[test]
    fn small_grid_fft_ordering() {
        let g = Grid2::new(16, 16, 1.0, 1.0).unwrap();
        assert_eq!(g.kx()[0], 0.0);
        assert!((g.kx()[1] - PI).abs() < 1e-12);
        assert!((g.kx()[2] - 2.0 * PI).abs() < 1e-12);
        assert!((g.kx()[15] + PI).abs() < 1e-12);
    }

    #[test]
    fn make_grid_rejects_bad_input() {
        assert!(Grid2::new(17, 128, 8.0, 8.0).is_err());
        assert!(Grid2::new(8, 128, 8.0, 8.0).is_err());
        assert!(Grid2::new(128, 128, 0.0, 8.0).is_err());
        assert!(Grid2::new(128, 128, -1.0, 8.0).is_err());
    }

    #[test]
    fn laplacian_of_fourier_mode() {
        let g = grid128();
        let kx0 = PI / g.lx();
        let f = ComplexField::from_fn(&g, |x, _| Complex64::from_polar(1.0, kx0 * x));
        let lap = laplacian(&f);
        let mut err: f64 = 0.0;
        for (l, v) in lap.data().iter().zip(f.data()) {
            err = err.max((l + kx0 * kx0 * v).norm());
        }
        assert!(err < 1e-12, "err = {err:.3e}");
    }

    #[test]
    fn laplacian_of_gaussian() {
        let g = grid128();
        let f = ComplexField::from_fn(&g, |x, y| {
            Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0)
        });
        let lap = laplacian(&f);
        let mut err: f64 = 0.0;
        for (j, &x) in g.x().iter().enumerate() {
            for (k, &y) in g.y().iter().enumerate() {
                let r2 = x * x + y * y;
                let exact = (r2 - 2.0) * (-r2 / 2.0).exp();
                err = err.max((lap.data()[g.idx(j, k)] - exact).norm());
            }
        }
        assert!(err < 1e-10, "err = {err:.3e}");
    }

    #[test]
    fn laplacian_of_constant_is_zero() {
        let g = grid128();
        let f = ComplexField::from_fn(&g, |_, _| Complex64::new(3.25, -1.5));
        assert!(laplacian(&f).max_abs() < 1e-12);
    }

    #[test]
    fn gradient_of_fourier_mode_and_gaussian() {
        let g = grid128();
        let ky0 = PI / g.ly();
        let f = ComplexField::from_fn(&g, |_, y| Complex64::from_polar(1.0, ky0 * y));
        let (_, dy) = gradient(&f);
        let mut err: f64 = 0.0;
        for (d, v) in dy.data().iter().zip(f.data()) {
            err = err.max((d - Complex64::new(0.0, ky0) * v).norm());
        }
        assert!(err < 1e-12);

        let gauss = ComplexField::from_fn(&g, |x, y| {
            Complex64::new((-(x * x + y * y) / 2.0).exp(), 0.0)
        });
        let (dx, _) = gradient(&gauss);
        let mut err: f64 = 0.0;
        for (j, &x) in g.x().iter().enumerate() {
            for (k, &y) in g.y().iter().enumerate() {
                let exact = -x * (-(x * x + y * y) / 2.0).exp();
                err = err.max((dx.data()[g.idx(j, k)] - exact).norm());
            }
        }
        assert!(err < 1e-10, "err = {err:.3e}");
        // real input stays real
        let max_im = dx.data().iter().fold(0.0_f64, |m, v| m.max(v.im.abs()));
        assert!(max_im < 1e-12);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = grid128();
        let f = ComplexField::from_fn(&g, |_, _| Complex64::new(1.0, 1.0));
        let (dx, dy) = gradient(&f);
        assert!(dx.max_abs() < 1e-13 && dy.max_abs() < 1e-13);
    }

    #[test]
    fn integrate_gaussians() {
        let g = grid128();
        let f = RealField::from_fn(&g, |x, y| (-(x * x + y * y)).exp());
        assert!((integrate(&f) - PI).abs() < 1e-10);

        let fx2 = RealField::from_fn(&g, |x, y| (-(x * x + y * y)).exp() * x * x);
        assert!((integrate(&fx2) - PI / 2.0).abs() < 1e-9);

        let zero = RealField::zeros(&g);
        assert_eq!(integrate(&zero), 0.0);
    }

    #[test]
    fn laplacian_equals_div_gradient() {
        let g = grid128();
        // both components must decay to ~0 at the box edge
        let f = ComplexField::from_fn(&g, |x, y| {
            Complex64::new(
                (-(x * x + y * y)).exp(),
                0.3 * (-0.7 * (x * x + y * y)).exp(),
            )
        });
        let lap = laplacian(&f);
        let (dx, dy) = gradient(&f);
        let (dxx, _) = gradient(&dx);
        let (_, dyy) = gradient(&dy);
        let mut err: f64 = 0.0;
        for i in 0..g.len() {
            err = err.max((lap.data()[i] - dxx.data()[i] - dyy.data()[i]).norm());
        }
        assert!(err < 1e-11, "err = {err:.3e}");
    }

    #[test]
    fn parseval() {
        let g = Grid2::new(64, 64, 4.0, 4.0).unwrap();
        let f = ComplexField::from_fn(&g, |x, y| {
            Complex64::new((-(x * x + y * y)).exp(), 0.1 * x * (-(x * x + y * y)).exp())
        });
        let phys: f64 = f.data().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_area();
        let mut hat = f.data().to_vec();
        crate::fft::forward2(&mut hat, g.nx(), g.ny());
        let spec: f64 =
            hat.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_area() / g.len() as f64;
        assert!(((phys - spec) / phys).abs() < 1e-12);
    }

    #[test]
    fn translate_shifts_gaussian() {
        // narrow enough that the periodic wrap of the shifted tail is
        // below the comparison tolerance
        let g = grid128();
        let f = ComplexField::from_fn(&g, |x, y| {
            Complex64::new((-(x * x + y * y)).exp(), 0.0)
        });
        let shifted = translate(&f, (3.0, 0.0));
        let mut err: f64 = 0.0;
        for (j, &x) in g.x().iter().enumerate() {
            for (k, &y) in g.y().iter().enumerate() {
                let exact = (-((x - 3.0) * (x - 3.0) + y * y)).exp();
                err = err.max((shifted.data()[g.idx(j, k)] - exact).norm());
            }
        }
        assert!(err < 1e-9, "err = {err:.3e}");
    }

    #[test]
    fn mirror_indices() {
        let g = Grid2::new(16, 16, 2.0, 2.0).unwrap();
        assert_eq!(g.mirror(0, 5), None);
        let (mj, mk) = g.mirror(3, 5).unwrap();
        assert!((g.x()[mj] + g.x()[3]).abs() < 1e-15);
        assert!((g.y()[mk] + g.y()[5]).abs() < 1e-15);
    }
}
