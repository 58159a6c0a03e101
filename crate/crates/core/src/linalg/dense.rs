//! Dense eigendecomposition used as the small-instance oracle and for the
//! projected problems inside the restarted Arnoldi iteration.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Assemble the dense matrix of a matrix-free operator by applying it to
/// unit vectors. Only sensible for small dimensions (oracle grids).
pub fn operator_matrix(
    apply: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    dim: usize,
) -> Mat<Complex64> {
    let mut unit = vec![Complex64::default(); dim];
    let mut col = vec![Complex64::default(); dim];
    let mut mat = Mat::<Complex64>::zeros(dim, dim);
    for j in 0..dim {
        unit[j] = Complex64::new(1.0, 0.0);
        apply(&unit, &mut col);
        unit[j] = Complex64::default();
        for i in 0..dim {
            mat[(i, j)] = col[i];
        }
    }
    mat
}

/// Full eigendecomposition; returns (values, right eigenvectors) with unit
/// 2-norm vectors, in faer's native order.
pub fn eig_mat(mat: &Mat<Complex64>) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
    let n = mat.nrows();
    let evd = mat
        .eigen()
        .map_err(|e| Error::Invalid(format!("dense eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        values.push(s[k]);
        let mut v: Vec<Complex64> = (0..n).map(|i| u[(i, k)]).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for z in &mut v {
                *z /= norm;
            }
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// Eigendecomposition sorted by ascending real part (ties by descending
/// imaginary part, so conjugate pairs list `+Im` first).
pub fn eig_sorted(mat: &Mat<Complex64>) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)> {
    let (vals, vecs) = eig_mat(mat)?;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| {
        vals[a]
            .re
            .total_cmp(&vals[b].re)
            .then(vals[b].im.total_cmp(&vals[a].im))
    });
    Ok((
        order.iter().map(|&i| vals[i]).collect(),
        order.iter().map(|&i| vecs[i].clone()).collect(),
    ))
}
