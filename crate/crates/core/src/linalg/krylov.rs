//! BiCGStab, CG on normal equations, and a restarted Arnoldi eigensolver
//! with locking, all matrix-free over flat complex vectors.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::vecops::{axpy, dot, dot_re, nrm2, scal};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct IterStats {
    pub converged: bool,
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
}

/// Right-preconditioned BiCGStab for `A x = b`; `precond` applies an
/// approximate inverse. `x` carries the initial guess and the solution.
pub fn bicgstab(
    apply: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    precond: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    x: &mut [Complex64],
    tol: f64,
    max_iter: usize,
) -> IterStats {
    let n = b.len();
    let bnorm = nrm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = Complex64::default());
        return IterStats {
            converged: true,
            iterations: 0,
            residual: 0.0,
        };
    }

    let mut r = vec![Complex64::default(); n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut r_shadow = r.clone();
    let mut p = vec![Complex64::default(); n];
    let mut v = vec![Complex64::default(); n];
    let mut p_hat = vec![Complex64::default(); n];
    let mut s_hat = vec![Complex64::default(); n];
    let mut t = vec![Complex64::default(); n];
    let mut rho_old = Complex64::new(1.0, 0.0);
    let mut alpha = Complex64::new(1.0, 0.0);
    let mut omega = Complex64::new(1.0, 0.0);
    let mut restarted = false;

    for it in 1..=max_iter {
        let rho = dot(&r_shadow, &r);
        if rho.norm() < 1e-300 * bnorm * bnorm {
            // shadow breakdown: restart once with the current residual
            if restarted {
                return IterStats {
                    converged: false,
                    iterations: it,
                    residual: nrm2(&r) / bnorm,
                };
            }
            r_shadow.copy_from_slice(&r);
            rho_old = Complex64::new(1.0, 0.0);
            alpha = Complex64::new(1.0, 0.0);
            omega = Complex64::new(1.0, 0.0);
            p.iter_mut().for_each(|z| *z = Complex64::default());
            v.iter_mut().for_each(|z| *z = Complex64::default());
            restarted = true;
            continue;
        }
        let beta = (rho / rho_old) * (alpha / omega);
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut p_hat);
        apply(&p_hat, &mut v);
        let denom = dot(&r_shadow, &v);
        if denom.norm() < 1e-300 {
            return IterStats {
                converged: false,
                iterations: it,
                residual: nrm2(&r) / bnorm,
            };
        }
        alpha = rho / denom;
        // s = r - alpha v (reuse r)
        for i in 0..n {
            r[i] -= alpha * v[i];
        }
        if nrm2(&r) / bnorm < tol {
            axpy(alpha, &p_hat, x);
            return IterStats {
                converged: true,
                iterations: it,
                residual: nrm2(&r) / bnorm,
            };
        }
        precond(&r, &mut s_hat);
        apply(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt.norm() < 1e-300 {
            return IterStats {
                converged: false,
                iterations: it,
                residual: nrm2(&r) / bnorm,
            };
        }
        omega = dot(&t, &r) / tt;
        for i in 0..n {
            x[i] += alpha * p_hat[i] + omega * s_hat[i];
            r[i] -= omega * t[i];
        }
        let rel = nrm2(&r) / bnorm;
        if rel < tol {
            return IterStats {
                converged: true,
                iterations: it,
                residual: rel,
            };
        }
        rho_old = rho;
    }
    IterStats {
        converged: false,
        iterations: max_iter,
        residual: nrm2(&r) / bnorm,
    }
}

/// CG on the (split-preconditioned) normal equations of a real-linear
/// operator: solves `P J' J P z = P J' b` in the real inner product and
/// returns `x = P z`, the least-squares solution of `J x = b` in the
/// preconditioned metric. `J'` is the adjoint of `J` with respect to
/// `dot_re`. All operators act on complex slices viewed as real vectors.
pub fn cgnr(
    apply_j: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    apply_jt: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    precond: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    tol: f64,
    max_iter: usize,
) -> (Vec<Complex64>, IterStats) {
    let n = b.len();
    let mut tmp = vec![Complex64::default(); n];
    let mut rhs = vec![Complex64::default(); n];
    apply_jt(b, &mut tmp);
    precond(&tmp, &mut rhs);

    let rhs_norm = nrm2(&rhs);
    let mut z = vec![Complex64::default(); n];
    if rhs_norm == 0.0 {
        return (
            z,
            IterStats {
                converged: true,
                iterations: 0,
                residual: 0.0,
            },
        );
    }

    // residual of the normal equations at z = 0
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut jw = vec![Complex64::default(); n];
    let mut w = vec![Complex64::default(); n];
    let mut nw = vec![Complex64::default(); n];
    let mut rr = dot_re(&r, &r);

    let mut apply_normal = |input: &[Complex64], out: &mut [Complex64], jw: &mut [Complex64], w: &mut [Complex64], tmp: &mut [Complex64]| {
        precond(input, w);
        apply_j(w, jw);
        apply_jt(jw, tmp);
        precond(tmp, out);
    };

    let mut its = 0;
    for it in 1..=max_iter {
        its = it;
        apply_normal(&p, &mut nw, &mut jw, &mut w, &mut tmp);
        let pnp = dot_re(&p, &nw);
        if pnp <= 0.0 || !pnp.is_finite() {
            break; // singular or numerically lost direction
        }
        let alpha = rr / pnp;
        for i in 0..n {
            z[i] += alpha * p[i];
            r[i] -= alpha * nw[i];
        }
        let rr_new = dot_re(&r, &r);
        if rr_new.sqrt() < tol * rhs_norm {
            rr = rr_new;
            break;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    let mut x = vec![Complex64::default(); n];
    precond(&z, &mut x);
    let stats = IterStats {
        converged: rr.sqrt() < tol * rhs_norm,
        iterations: its,
        residual: rr.sqrt() / rhs_norm,
    };
    (x, stats)
}

#[derive(Debug, Clone)]
pub struct ArnoldiOptions {
    pub n_wanted: usize,
    pub max_subspace: usize,
    pub max_restarts: usize,
    /// Relative residual tolerance for locking a Ritz pair.
    pub tol: f64,
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions {
            n_wanted: 6,
            max_subspace: 40,
            max_restarts: 30,
            tol: 1e-10,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
}

fn random_unit(dim: usize, rng: &mut ChaCha12Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = nrm2(&v);
    scal(Complex64::new(1.0 / n, 0.0), &mut v);
    v
}

/// Orthogonalize `w` against `basis` (modified Gram-Schmidt with one
/// reorthogonalization pass); returns the projection coefficients of the
/// first pass plus corrections.
fn orthogonalize(w: &mut [Complex64], basis: &[Vec<Complex64>], coeffs: Option<&mut [Complex64]>) {
    let mut store = coeffs;
    for pass in 0..2 {
        for (i, q) in basis.iter().enumerate() {
            let h = dot(q, w);
            axpy(-h, q, w);
            if let Some(c) = store.as_deref_mut() {
                if pass == 0 {
                    c[i] = h;
                } else {
                    c[i] += h;
                }
            }
        }
    }
}

/// Restarted Arnoldi with locking: computes the `n_wanted` eigenpairs of
/// largest magnitude of the (generally non-Hermitian) operator `apply`.
///
/// Callers using a spectral transform (shift-invert) should re-derive the
/// final eigenvalues with a Rayleigh-Ritz pass over the returned vectors on
/// the original operator; the vectors span the converged invariant subspace.
pub fn eigs_largest(
    apply: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    dim: usize,
    opts: &ArnoldiOptions,
) -> Result<Vec<RitzPair>> {
    let m = opts.max_subspace.min(dim).max(opts.n_wanted + 2);
    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<RitzPair> = Vec::new();
    let mut locked_vecs: Vec<Vec<Complex64>> = Vec::new();
    let mut start = random_unit(dim, &mut rng);
    let mut best_residuals: Vec<f64> = Vec::new();

    for _restart in 0..opts.max_restarts {
        orthogonalize(&mut start, &locked_vecs, None);
        let mut snorm = nrm2(&start);
        if snorm < 1e-12 {
            start = random_unit(dim, &mut rng);
            orthogonalize(&mut start, &locked_vecs, None);
            snorm = nrm2(&start);
        }
        scal(Complex64::new(1.0 / snorm, 0.0), &mut start);

        // Arnoldi factorization on the complement of the locked subspace
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut h = vec![vec![Complex64::default(); m]; m + 1]; // h[i][j]
        let mut m_eff = m;
        let mut breakdown = false;
        for j in 0..m {
            let mut w = vec![Complex64::default(); dim];
            apply(&basis[j], &mut w);
            orthogonalize(&mut w, &locked_vecs, None);
            let mut col = vec![Complex64::default(); basis.len()];
            orthogonalize(&mut w, &basis, Some(col.as_mut_slice()));
            for (i, c) in col.iter().enumerate() {
                h[i][j] = *c;
            }
            let hnext = nrm2(&w);
            h[j + 1][j] = Complex64::new(hnext, 0.0);
            if hnext < 1e-13 {
                m_eff = j + 1;
                breakdown = true;
                break;
            }
            scal(Complex64::new(1.0 / hnext, 0.0), &mut w);
            basis.push(w);
        }

        // projected eigenproblem
        let hm = faer::Mat::from_fn(m_eff, m_eff, |i, j| h[i][j]);
        let (theta, y) = super::dense::eig_mat(&hm)?;
        let subdiag = h[m_eff][m_eff - 1].norm();

        // Ritz pairs sorted by |theta| descending
        let mut order: Vec<usize> = (0..m_eff).collect();
        order.sort_by(|&a, &b| theta[b].norm().total_cmp(&theta[a].norm()));

        let theta_scale = theta
            .iter()
            .map(|t| t.norm())
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        let still_needed = opts.n_wanted.saturating_sub(locked.len());
        best_residuals.clear();
        let mut unconverged_vec: Option<Vec<Complex64>> = None;

        for &idx in order.iter().take(still_needed + 2) {
            let resid = if breakdown {
                0.0
            } else {
                subdiag * y[idx][m_eff - 1].norm()
            };
            best_residuals.push(resid / theta_scale);
            let mut z = vec![Complex64::default(); dim];
            for (j, q) in basis.iter().take(m_eff).enumerate() {
                axpy(y[idx][j], q, &mut z);
            }
            if resid <= opts.tol * theta_scale && locked.len() < opts.n_wanted {
                // Ritz vectors of a non-normal operator are not mutually
                // orthogonal; orthogonalize against the live locked set so
                // deflation stays valid.
                orthogonalize(&mut z, &locked_vecs, None);
                let zn = nrm2(&z);
                if zn > 1e-8 {
                    scal(Complex64::new(1.0 / zn, 0.0), &mut z);
                    locked_vecs.push(z.clone());
                    locked.push(RitzPair {
                        value: theta[idx],
                        vector: z,
                        residual: resid,
                    });
                    continue;
                }
            }
            if unconverged_vec.is_none() {
                unconverged_vec = Some(z);
            }
        }

        if locked.len() >= opts.n_wanted {
            return Ok(locked);
        }
        start = match unconverged_vec {
            Some(v) if nrm2(&v) > 1e-12 => v,
            _ => random_unit(dim, &mut rng),
        };
    }

    Err(Error::EigsNoConvergence {
        restarts: opts.max_restarts,
        best: best_residuals,
    })
}

/// Rayleigh-Ritz over a given subspace of the operator `apply`: returns
/// eigenpairs sorted by ascending real part with honest residuals measured
/// on `apply` itself.
pub fn subspace_eig(
    apply: &mut dyn FnMut(&[Complex64], &mut [Complex64]),
    vectors: &[Vec<Complex64>],
    dim: usize,
) -> Result<Vec<RitzPair>> {
    // orthonormalize, dropping near-dependent vectors
    let mut q: Vec<Vec<Complex64>> = Vec::new();
    for vec in vectors {
        let mut w = vec.clone();
        orthogonalize(&mut w, &q, None);
        let n = nrm2(&w);
        if n > 1e-10 {
            scal(Complex64::new(1.0 / n, 0.0), &mut w);
            q.push(w);
        }
    }
    if q.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let p = q.len();
    let mut aq: Vec<Vec<Complex64>> = Vec::with_capacity(p);
    for qi in &q {
        let mut out = vec![Complex64::default(); dim];
        apply(qi, &mut out);
        aq.push(out);
    }
    let b = faer::Mat::from_fn(p, p, |i, j| dot(&q[i], &aq[j]));
    let (vals, vecs) = super::dense::eig_mat(&b)?;

    let mut pairs: Vec<RitzPair> = Vec::with_capacity(p);
    for k in 0..p {
        let mut u = vec![Complex64::default(); dim];
        let mut au = vec![Complex64::default(); dim];
        for j in 0..p {
            axpy(vecs[k][j], &q[j], &mut u);
            axpy(vecs[k][j], &aq[j], &mut au);
        }
        let un = nrm2(&u);
        scal(Complex64::new(1.0 / un, 0.0), &mut u);
        scal(Complex64::new(1.0 / un, 0.0), &mut au);
        // residual ||A u - lambda u||
        axpy(-vals[k], &u, &mut au);
        pairs.push(RitzPair {
            value: vals[k],
            vector: u,
            residual: nrm2(&au),
        });
    }
    pairs.sort_by(|a, b| {
        a.value
            .re
            .total_cmp(&b.value.re)
            .then(b.value.im.total_cmp(&a.value.im))
    });
    Ok(pairs)
}
