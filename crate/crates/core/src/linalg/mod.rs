//! Dense complex linear algebra used by every certificate in the crate.

mod eigen;
mod matrix;
mod random;

use serde::{Deserialize, Serialize};

use crate::error::{dim_mismatch, Error, Result};

pub use eigen::{determinant, singular_values, HermitianEigen};
pub use matrix::{conj_vec, inner, kron_vec, norm, ComplexMatrix, C64, I, ONE, ZERO};
pub use random::{
    derive_seed, gaussian_complex, ginibre_with, haar_unitary, haar_unitary_with, random_hermitian_with,
    random_phase_with, random_schur_instance, random_unit_vector, random_unit_vector_with, rng_from_seed, SeededRng,
};

/// Absolute slacks used by every numerical comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerance {
    /// Eigenvalues down to `-psd_slack` still count as nonnegative.
    pub psd_slack: f64,
    /// Entrywise absolute tolerance for equalities.
    pub eq_atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { psd_slack: 1e-9, eq_atol: 1e-10 }
    }
}

impl Tolerance {
    pub fn new(psd_slack: f64, eq_atol: f64) -> Result<Self> {
        let t = Self { psd_slack, eq_atol };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("psd_slack", self.psd_slack), ("eq_atol", self.eq_atol)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidTolerance(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Local dimensions of a bipartite space `C^dA (x) C^dB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipartiteDims {
    pub d_a: usize,
    pub d_b: usize,
}

impl BipartiteDims {
    pub fn new(d_a: usize, d_b: usize) -> Self {
        assert!(d_a > 0 && d_b > 0, "subsystem dimensions must be positive");
        Self { d_a, d_b }
    }

    pub fn total(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn check(&self, m: &ComplexMatrix) -> Result<()> {
        let n = self.total();
        if m.rows() != n || m.cols() != n {
            return Err(dim_mismatch("bipartite operator", format!("{n}x{n}"), format!("{}x{}", m.rows(), m.cols())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

/// `e_ij` in `M_d` (0-based indices).
pub fn matrix_unit(d: usize, i: usize, j: usize) -> Result<ComplexMatrix> {
    if i >= d || j >= d {
        return Err(Error::IndexOutOfRange { i, j, dim: d });
    }
    let mut m = ComplexMatrix::zeros(d, d);
    m[(i, j)] = ONE;
    Ok(m)
}

/// Unit vector `e_i` in `C^d` (0-based).
pub fn basis_vector(d: usize, i: usize) -> Vec<C64> {
    let mut v = vec![ZERO; d];
    v[i] = ONE;
    v
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |r, c| a[(r / br, c / bc)] * b[(r % br, c % bc)])
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.dagger()
}

/// `sigma_y = [[0, -i], [i, 0]]`
pub fn sigma_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[vec![ZERO, -I], vec![I, ZERO]])
}

fn check_hermitian(h: &ComplexMatrix, tol: &Tolerance) -> Result<()> {
    if !h.is_square() {
        return Err(dim_mismatch("hermitian input", "square matrix", format!("{}x{}", h.rows(), h.cols())));
    }
    let defect = h.hermiticity_defect();
    if defect > tol.eq_atol {
        return Err(Error::NotHermitian { defect });
    }
    Ok(())
}

/// Sorted real spectrum of a Hermitian matrix.
pub fn hermitian_eigenvalues(h: &ComplexMatrix, tol: &Tolerance) -> Result<Vec<f64>> {
    check_hermitian(h, tol)?;
    Ok(eigen::jacobi_eigen(h, false).values)
}

/// Spectrum and orthonormal eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &ComplexMatrix, tol: &Tolerance) -> Result<HermitianEigen> {
    check_hermitian(h, tol)?;
    Ok(eigen::jacobi_eigen(h, true))
}

pub fn min_eigenvalue(h: &ComplexMatrix, tol: &Tolerance) -> Result<f64> {
    Ok(hermitian_eigenvalues(h, tol)?[0])
}

pub fn max_eigenvalue(h: &ComplexMatrix, tol: &Tolerance) -> Result<f64> {
    Ok(*hermitian_eigenvalues(h, tol)?.last().expect("non-empty spectrum"))
}

/// `min eig(H) >= -psd_slack`.
pub fn is_psd(h: &ComplexMatrix, tol: &Tolerance) -> Result<bool> {
    Ok(min_eigenvalue(h, tol)? >= -tol.psd_slack)
}

/// Moore-Penrose inverse of a Hermitian matrix; eigenvalues with modulus at
/// most `cutoff` are treated as zero. Also returns the projector onto the
/// numerical range.
pub fn hermitian_pseudo_inverse(h: &ComplexMatrix, cutoff: f64, tol: &Tolerance) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let e = hermitian_eigen(h, tol)?;
    let n = h.rows();
    let mut pinv = ComplexMatrix::zeros(n, n);
    let mut range = ComplexMatrix::zeros(n, n);
    for (k, &lam) in e.values.iter().enumerate() {
        if lam.abs() <= cutoff {
            continue;
        }
        let v = e.vector(k);
        let p = ComplexMatrix::outer(&v, &v);
        pinv = &pinv + &p.scale_real(1.0 / lam);
        range = &range + &p;
    }
    Ok((pinv, range))
}

/// Assembles `[[A, X], [X^+, B]]`.
pub fn assemble_2x2(a: &ComplexMatrix, x: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_schur_shapes(a, x, b)?;
    let (n, k) = (a.rows(), b.rows());
    let mut m = ComplexMatrix::zeros(n + k, n + k);
    m.set_block(0, 0, a);
    m.set_block(0, n, x);
    m.set_block(n, 0, &x.dagger());
    m.set_block(n, n, b);
    Ok(m)
}

fn check_schur_shapes(a: &ComplexMatrix, x: &ComplexMatrix, b: &ComplexMatrix) -> Result<()> {
    if !a.is_square() || !b.is_square() || x.rows() != a.rows() || x.cols() != b.rows() {
        return Err(dim_mismatch(
            "schur_positivity",
            format!("A n x n, X n x k, B k x k with n = {}, k = {}", a.rows(), b.rows()),
            format!("X {}x{}", x.rows(), x.cols()),
        ));
    }
    Ok(())
}

/// How a block-matrix positivity verdict was reached.
#[derive(Debug, Clone, PartialEq)]
pub struct SchurVerdict {
    pub psd: bool,
    /// Smallest eigenvalue of `A - X B^+ X^+`.
    pub complement_min_eigenvalue: f64,
    /// `B` had no eigenvalue within the PSD slack of zero.
    pub invertible: bool,
    /// `|(1 - B B^+) X^+|_max`; zero when `B` is invertible.
    pub range_defect: f64,
}

/// Positivity of `[[A, X], [X^+, B]]` via the Schur complement of `B`.
///
/// For invertible `B` this is `A >= X B^-1 X^+`. For singular `B >= 0` the
/// pseudo-inverse is used and `range(X^+)` must lie in `range(B)`.
pub fn schur_positivity(a: &ComplexMatrix, x: &ComplexMatrix, b: &ComplexMatrix, tol: &Tolerance) -> Result<bool> {
    Ok(schur_verdict(a, x, b, tol)?.psd)
}

pub fn schur_verdict(a: &ComplexMatrix, x: &ComplexMatrix, b: &ComplexMatrix, tol: &Tolerance) -> Result<SchurVerdict> {
    check_schur_shapes(a, x, b)?;
    check_hermitian(a, tol)?;
    check_hermitian(b, tol)?;
    let b_min = min_eigenvalue(b, tol)?;
    if b_min < -tol.psd_slack {
        return Err(Error::NegativeEigenvalue { min_eigenvalue: b_min });
    }
    let invertible = b_min > tol.psd_slack;
    let (pinv, range) = hermitian_pseudo_inverse(b, tol.psd_slack, tol)?;
    let xd = x.dagger();
    let range_defect = if invertible {
        0.0
    } else {
        (&xd - &(&range * &xd)).max_abs()
    };
    let complement = (a - &(&(x * &pinv) * &xd)).hermitian_part();
    let complement_min_eigenvalue = min_eigenvalue(&complement, tol)?;
    let psd = complement_min_eigenvalue >= -tol.psd_slack && range_defect <= tol.eq_atol;
    Ok(SchurVerdict { psd, complement_min_eigenvalue, invertible, range_defect })
}

/// Transpose on one tensor factor in the computational product basis.
pub fn partial_transpose(m: &ComplexMatrix, dims: BipartiteDims, which: Subsystem) -> Result<ComplexMatrix> {
    dims.check(m)?;
    let db = dims.d_b;
    Ok(ComplexMatrix::from_fn(m.rows(), m.cols(), |r, c| {
        let (i, k) = (r / db, r % db);
        let (j, l) = (c / db, c % db);
        match which {
            Subsystem::A => m[(j * db + k, i * db + l)],
            Subsystem::B => m[(i * db + l, j * db + k)],
        }
    }))
}
