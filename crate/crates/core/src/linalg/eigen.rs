//! Cyclic Jacobi diagonalization of complex Hermitian matrices, and a
//! one-sided Jacobi SVD for singular values of general complex matrices.
//!
//! Both sweep pivots in a fixed row-major order, so results are bitwise
//! reproducible for a given input.

use super::matrix::{ComplexMatrix, C64, ONE, ZERO};

const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `H = V diag(values) V^+` with ascending `values` and
/// eigenvectors in the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// Eigenvector belonging to the `k`-th smallest eigenvalue.
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }
}

/// Diagonalizes the Hermitian part of `h`. The caller is responsible for
/// checking Hermiticity; the anti-Hermitian part is discarded.
pub(crate) fn jacobi_eigen(h: &ComplexMatrix, want_vectors: bool) -> HermitianEigen {
    assert!(h.is_square(), "jacobi_eigen needs a square matrix");
    let n = h.rows();
    let mut a: Vec<C64> = h.hermitian_part().as_slice().to_vec();
    for i in 0..n {
        a[i * n + i].im = 0.0;
    }
    let mut v = if want_vectors { Some(ComplexMatrix::identity(n).as_slice().to_vec()) } else { None };

    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale > 0.0 {
        let tiny = f64::EPSILON * f64::EPSILON * scale * scale;
        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
                .map(|(p, q)| a[p * n + q].norm_sqr())
                .sum();
            if off <= tiny {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, v.as_deref_mut(), n, p, q, scale);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    order.sort_by(|&x, &y| diag[x].total_cmp(&diag[y]).then(x.cmp(&y)));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = match v {
        Some(v) => ComplexMatrix::from_fn(n, n, |r, c| v[r * n + order[c]]),
        None => ComplexMatrix::zeros(n, n),
    };
    HermitianEigen { values, vectors }
}

/// One complex Jacobi rotation annihilating `a[p][q]`.
fn rotate(a: &mut [C64], v: Option<&mut [C64]>, n: usize, p: usize, q: usize, scale: f64) {
    let apq = a[p * n + q];
    let g = apq.norm();
    if g <= f64::EPSILON * 1e-3 * scale {
        a[p * n + q] = ZERO;
        a[q * n + p] = ZERO;
        return;
    }
    let phase = apq / g;
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let theta = (aqq - app) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // G = [[c, s e], [-s conj(e), c]] on (p, q); A <- G^+ A G, V <- V G.
    let gpq = phase * s;
    let gqp = -phase.conj() * s;
    for k in 0..n {
        let akp = a[k * n + p];
        let akq = a[k * n + q];
        a[k * n + p] = akp * c + akq * gqp;
        a[k * n + q] = akp * gpq + akq * c;
    }
    for k in 0..n {
        let apk = a[p * n + k];
        let aqk = a[q * n + k];
        a[p * n + k] = apk * c + aqk * gqp.conj();
        a[q * n + k] = apk * gpq.conj() + aqk * c;
    }
    a[p * n + q] = ZERO;
    a[q * n + p] = ZERO;
    a[p * n + p].im = 0.0;
    a[q * n + q].im = 0.0;
    if let Some(v) = v {
        for k in 0..n {
            let vkp = v[k * n + p];
            let vkq = v[k * n + q];
            v[k * n + p] = vkp * c + vkq * gqp;
            v[k * n + q] = vkp * gpq + vkq * c;
        }
    }
}

/// Singular values of `m` in descending order (one-sided Jacobi).
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    // Work on columns of the taller orientation.
    let work = if m.rows() >= m.cols() { m.clone() } else { m.dagger() };
    let rows = work.rows();
    let cols = work.cols();
    let mut colv: Vec<Vec<C64>> = (0..cols).map(|c| work.column(c)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha: f64 = colv[i].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = colv[j].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = colv[i].iter().zip(&colv[j]).map(|(a, b)| a.conj() * b).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 { 1.0 } else { zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt()) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let gij = phase * s;
                let gji = -phase.conj() * s;
                let (left, right) = colv.split_at_mut(j);
                let (ci, cj) = (&mut left[i], &mut right[0]);
                for r in 0..rows {
                    let x = ci[r];
                    let y = cj[r];
                    ci[r] = x * c + y * gji;
                    cj[r] = x * gij + y * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = colv.iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(m: &ComplexMatrix) -> C64 {
    assert!(m.is_square(), "determinant needs a square matrix");
    let n = m.rows();
    let mut a = m.as_slice().to_vec();
    let mut det = ONE;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm()))
            .expect("non-empty range");
        if a[pivot * n + col] == ZERO {
            return ZERO;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        let d = a[col * n + col];
        det *= d;
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == ZERO {
                continue;
            }
            for k in col..n {
                let sub = f * a[col * n + k];
                a[r * n + k] -= sub;
            }
        }
    }
    det
}
