//! Matrix-free Krylov solvers and the dense eigendecomposition oracle.

pub mod dense;
pub mod krylov;

pub(crate) mod vecops {
    use num_complex::Complex64;

    pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    /// Real part of the complex inner product: the inner product of the
    /// underlying real vector space (used by real-linear operators).
    pub fn dot_re(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.re * y.re + x.im * y.im)
            .sum()
    }

    pub fn nrm2(a: &[Complex64]) -> f64 {
        a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }

    pub fn scal(alpha: Complex64, x: &mut [Complex64]) {
        for xi in x.iter_mut() {
            *xi *= alpha;
        }
    }
}
