//! The six map families as tables of matrix-unit images, plus the see-saw
//! falsifier used to probe positivity numerically.

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{
    derive_seed, hermitian_eigen, kron, matrix_unit, random_unit_vector_with, rng_from_seed, sigma_y, BipartiteDims,
    ComplexMatrix, Tolerance, C64, ONE,
};
use crate::pairs::PairTable;
use crate::witness::Witness;

/// Declarative description of one map. Block-structured families split
/// `C^d = C^N (x) C^(2K)`, so index `i` (0-based) sits in block `i / 2K` at
/// position `i % 2K`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(into = "crate::format::MapSpecRecord", try_from = "crate::format::MapSpecRecord")]
pub enum MapSpec {
    /// `X -> (Tr X 1 - X) / (N - 1)` on `M_N`.
    Reduction { n: usize },
    /// Reduction with off-diagonal units weighted by phases `z_ij`.
    GeneralizedReduction { n: usize, z: PairTable<C64> },
    /// Robertson map on `M_4`.
    Robertson,
    /// Robertson generalization on `M_4K` (two blocks of size `2K`).
    GeneralizedRobertson { k: usize, u: ComplexMatrix },
    /// `N` blocks of size 2 with phases `z_ij`, `1/(2(N-1))` normalization.
    ComplexRobertsonExtension { n: usize, z: PairTable<C64> },
    /// `N` blocks of size `2K` with phases `z_ij` and antisymmetric unitary `U`.
    NewFamily { n: usize, k: usize, z: PairTable<C64>, u: ComplexMatrix },
}

impl MapSpec {
    pub fn new_family(n: usize, k: usize, z: PairTable<C64>) -> Result<Self> {
        let spec = MapSpec::NewFamily { n, k, z, u: default_antisymmetric_unitary(2 * k)? };
        spec.validate(&Tolerance::default())?;
        Ok(spec)
    }

    /// Side length of the (square) input and output matrices.
    pub fn dim(&self) -> usize {
        match self {
            MapSpec::Reduction { n } | MapSpec::GeneralizedReduction { n, .. } => *n,
            MapSpec::Robertson => 4,
            MapSpec::GeneralizedRobertson { k, .. } => 4 * k,
            MapSpec::ComplexRobertsonExtension { n, .. } => 2 * n,
            MapSpec::NewFamily { n, k, .. } => 2 * k * n,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            MapSpec::Reduction { .. } => "reduction",
            MapSpec::GeneralizedReduction { .. } => "generalized-reduction",
            MapSpec::Robertson => "robertson",
            MapSpec::GeneralizedRobertson { .. } => "generalized-robertson",
            MapSpec::ComplexRobertsonExtension { .. } => "complex-robertson",
            MapSpec::NewFamily { .. } => "new",
        }
    }

    pub fn phases(&self) -> Option<&PairTable<C64>> {
        match self {
            MapSpec::GeneralizedReduction { z, .. }
            | MapSpec::ComplexRobertsonExtension { z, .. }
            | MapSpec::NewFamily { z, .. } => Some(z),
            _ => None,
        }
    }

    pub fn validate(&self, tol: &Tolerance) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMapSpec(m));
        let check_z = |n: usize, z: &PairTable<C64>| -> Result<()> {
            if z.n() != n {
                return Err(Error::InvalidMapSpec(format!("phase table covers {} blocks, expected {n}", z.n())));
            }
            for (i, j, v) in z.iter() {
                if v.norm().is_nan() || v.norm() > 1.0 + tol.eq_atol {
                    return Err(Error::InvalidMapSpec(format!("|z_{}{}| = {} exceeds 1", i + 1, j + 1, v.norm())));
                }
            }
            Ok(())
        };
        match self {
            MapSpec::Reduction { n } if *n < 2 => bad(format!("reduction needs N >= 2, got {n}")),
            MapSpec::Reduction { .. } | MapSpec::Robertson => Ok(()),
            MapSpec::GeneralizedReduction { n, z } | MapSpec::ComplexRobertsonExtension { n, z } => {
                if *n < 2 {
                    return bad(format!("{} needs N >= 2, got {n}", self.family()));
                }
                check_z(*n, z)
            }
            MapSpec::GeneralizedRobertson { k, u } => {
                if *k < 1 {
                    return bad("K must be positive".into());
                }
                check_antisymmetric_unitary(u, 2 * k, tol)
            }
            MapSpec::NewFamily { n, k, z, u } => {
                if *n < 2 || *k < 1 {
                    return bad(format!("new family needs N >= 2 and K >= 1, got N = {n}, K = {k}"));
                }
                check_z(*n, z)?;
                check_antisymmetric_unitary(u, 2 * k, tol)
            }
        }
    }
}

/// A linear map `M_din -> M_dout` stored as the images `W_ij = L(e_ij)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    d_in: usize,
    d_out: usize,
    images: Vec<ComplexMatrix>,
    spec: Option<MapSpec>,
}

impl LinearMap {
    /// Images in row-major order of `(i, j)`. The map must preserve
    /// Hermiticity: `L(e_ij)^+ = L(e_ji)`.
    pub fn new(d_in: usize, d_out: usize, images: Vec<ComplexMatrix>) -> Result<Self> {
        if images.len() != d_in * d_in {
            return Err(dim_mismatch("LinearMap::new", d_in * d_in, images.len()));
        }
        if let Some(m) = images.iter().find(|m| m.rows() != d_out || m.cols() != d_out) {
            return Err(dim_mismatch("LinearMap image", format!("{d_out}x{d_out}"), format!("{}x{}", m.rows(), m.cols())));
        }
        let map = Self { d_in, d_out, images, spec: None };
        let defect = map.hermiticity_defect();
        if defect > Tolerance::default().eq_atol {
            return Err(Error::NotHermitian { defect });
        }
        Ok(map)
    }

    /// Tabulates `f` on the matrix units of `M_din`.
    pub fn from_action(d_in: usize, d_out: usize, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Result<Self> {
        let mut images = Vec::with_capacity(d_in * d_in);
        for i in 0..d_in {
            for j in 0..d_in {
                images.push(f(&matrix_unit(d_in, i, j)?));
            }
        }
        Self::new(d_in, d_out, images)
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn spec(&self) -> Option<&MapSpec> {
        self.spec.as_ref()
    }

    /// `L(e_ij)`, 0-based.
    pub fn image(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.images[i * self.d_in + j]
    }

    /// `max |L(e_ij)^+ - L(e_ji)|`
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.d_in {
            for j in i..self.d_in {
                let d = self.image(i, j).dagger().max_abs_diff(self.image(j, i)).unwrap_or(f64::INFINITY);
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `L(X) = sum_ij X_ij L(e_ij)`
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.d_in || x.cols() != self.d_in {
            return Err(dim_mismatch("apply", format!("{0}x{0}", self.d_in), format!("{}x{}", x.rows(), x.cols())));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.d_out * self.d_out];
        for i in 0..self.d_in {
            for j in 0..self.d_in {
                let coeff = x[(i, j)];
                if coeff == C64::new(0.0, 0.0) {
                    continue;
                }
                for (o, w) in out.iter_mut().zip(self.image(i, j).as_slice()) {
                    *o += coeff * w;
                }
            }
        }
        ComplexMatrix::new(self.d_out, self.d_out, out)
    }

    /// Dual under the trace pairing: `Tr(A^+ L(B)) = Tr(L*(A)^+ B)`.
    pub fn adjoint(&self) -> LinearMap {
        let mut images = Vec::with_capacity(self.d_out * self.d_out);
        for k in 0..self.d_out {
            for l in 0..self.d_out {
                images.push(ComplexMatrix::from_fn(self.d_in, self.d_in, |i, j| self.image(i, j)[(k, l)].conj()));
            }
        }
        LinearMap { d_in: self.d_out, d_out: self.d_in, images, spec: None }
    }

    /// `sum_ij a_ij e_ij -> sum_ij a_ij L(e_ij)` scaled and added entrywise.
    pub fn combine(&self, other: &LinearMap, a: f64, b: f64) -> Result<LinearMap> {
        if self.d_in != other.d_in || self.d_out != other.d_out {
            return Err(dim_mismatch("combine", format!("{}->{}", self.d_in, self.d_out), format!("{}->{}", other.d_in, other.d_out)));
        }
        let images = self
            .images
            .iter()
            .zip(&other.images)
            .map(|(x, y)| &x.scale_real(a) + &y.scale_real(b))
            .collect();
        Ok(LinearMap { d_in: self.d_in, d_out: self.d_out, images, spec: None })
    }

    /// Choi matrix `(1/d) sum_ij e_ij (x) L(e_ij)` as a witness on `C^d (x) C^d`.
    pub fn choi(&self) -> Result<Witness> {
        choi(self)
    }
}

/// Realizes a spec as its matrix-unit images.
pub fn build(spec: &MapSpec) -> Result<LinearMap> {
    let tol = Tolerance::default();
    spec.validate(&tol)?;
    let d = spec.dim();
    let mut map = match spec {
        MapSpec::Reduction { n } => LinearMap::from_action(*n, *n, |x| reduction(x, *n))?,
        MapSpec::GeneralizedReduction { n, z } => {
            let n = *n;
            let scale = 1.0 / (n as f64 - 1.0);
            let mut images = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let img = match i.cmp(&j) {
                        std::cmp::Ordering::Equal => &ComplexMatrix::identity(n) - &matrix_unit(n, i, i)?,
                        std::cmp::Ordering::Less => matrix_unit(n, i, j)?.scale(-*z.get(i, j)),
                        std::cmp::Ordering::Greater => matrix_unit(n, i, j)?.scale(-z.get(j, i).conj()),
                    };
                    images.push(img.scale_real(scale));
                }
            }
            LinearMap::new(n, n, images)?
        }
        MapSpec::Robertson => {
            check_sigma_y_rewrite(&tol)?;
            LinearMap::from_action(4, 4, robertson)?
        }
        MapSpec::GeneralizedRobertson { k, u } => LinearMap::from_action(d, d, |x| generalized_robertson(x, *k, u))?,
        MapSpec::ComplexRobertsonExtension { n, z } => {
            check_sigma_y_rewrite(&tol)?;
            LinearMap::from_action(d, d, |x| complex_robertson(x, *n, z))?
        }
        MapSpec::NewFamily { n, k, z, u } => LinearMap::from_action(d, d, |x| new_family(x, *n, *k, z, u))?,
    };
    map.spec = Some(spec.clone());
    Ok(map)
}

pub fn apply(map: &LinearMap, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    map.apply(x)
}

pub fn adjoint(map: &LinearMap) -> LinearMap {
    map.adjoint()
}

/// `(1/d) sum_ij e_ij (x) L(e_ij)`; only defined for endomorphisms.
pub fn choi(map: &LinearMap) -> Result<Witness> {
    if map.d_in != map.d_out {
        return Err(Error::Unsupported(format!("Choi matrix needs an endomorphism, got M_{} -> M_{}", map.d_in, map.d_out)));
    }
    let d = map.d_in;
    let mut w = ComplexMatrix::zeros(d * d, d * d);
    let inv = 1.0 / d as f64;
    for i in 0..d {
        for j in 0..d {
            w.set_block(i * d, j * d, &map.image(i, j).scale_real(inv));
        }
    }
    Witness::new(w, BipartiteDims::new(d, d), map.spec.clone())
}

fn tr_identity(x: &ComplexMatrix, size: usize) -> ComplexMatrix {
    ComplexMatrix::identity(size).scale(x.trace())
}

/// Normalized reduction map on `M_n`.
pub fn reduction(x: &ComplexMatrix, n: usize) -> ComplexMatrix {
    (&tr_identity(x, n) - x).scale_real(1.0 / (n as f64 - 1.0))
}

/// Unnormalized `M_2` reduction `Y -> Tr(Y) 1 - Y`.
fn reduction2(y: &ComplexMatrix) -> ComplexMatrix {
    &tr_identity(y, 2) - y
}

fn twist(y: &ComplexMatrix, u: &ComplexMatrix) -> ComplexMatrix {
    &(u * &y.transpose()) * &u.dagger()
}

/// Two-block maps `1/c [[1 Tr X22, -(X12 + T(X21))], [-(X21 + T(X12)), 1 Tr X11]]`.
fn two_block(x: &ComplexMatrix, half: usize, scale: f64, t: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> ComplexMatrix {
    let x11 = x.block(0, 0, half, half);
    let x12 = x.block(0, half, half, half);
    let x21 = x.block(half, 0, half, half);
    let x22 = x.block(half, half, half, half);
    let mut out = ComplexMatrix::zeros(2 * half, 2 * half);
    out.set_block(0, 0, &tr_identity(&x22, half));
    out.set_block(0, half, &-&(&x12 + &t(&x21)));
    out.set_block(half, 0, &-&(&x21 + &t(&x12)));
    out.set_block(half, half, &tr_identity(&x11, half));
    out.scale_real(scale)
}

pub fn robertson(x: &ComplexMatrix) -> ComplexMatrix {
    two_block(x, 2, 0.5, reduction2)
}

pub fn generalized_robertson(x: &ComplexMatrix, k: usize, u: &ComplexMatrix) -> ComplexMatrix {
    two_block(x, 2 * k, 1.0 / (2.0 * k as f64), |y| twist(y, u))
}

/// `N`-block maps with diagonal `1 (Tr X - Tr X_ii)` and off-diagonal
/// `-z_ij (X_ij + T(X_ji))` above, `-conj(z_ij) (X_ji + T(X_ij))` below.
fn multi_block(
    x: &ComplexMatrix,
    n: usize,
    size: usize,
    scale: f64,
    z: &PairTable<C64>,
    t: impl Fn(&ComplexMatrix) -> ComplexMatrix,
) -> ComplexMatrix {
    let blk = |p: usize, q: usize| x.block(p * size, q * size, size, size);
    let total = x.trace();
    let mut out = ComplexMatrix::zeros(n * size, n * size);
    for p in 0..n {
        let a = ComplexMatrix::identity(size).scale(total - blk(p, p).trace());
        out.set_block(p * size, p * size, &a);
    }
    for (p, q, &zpq) in z.iter() {
        let upper = &blk(p, q) + &t(&blk(q, p));
        let lower = &blk(q, p) + &t(&blk(p, q));
        out.set_block(p * size, q * size, &upper.scale(-zpq));
        out.set_block(q * size, p * size, &lower.scale(-zpq.conj()));
    }
    out.scale_real(scale)
}

pub fn complex_robertson(x: &ComplexMatrix, n: usize, z: &PairTable<C64>) -> ComplexMatrix {
    multi_block(x, n, 2, 1.0 / (2.0 * (n as f64 - 1.0)), z, reduction2)
}

pub fn new_family(x: &ComplexMatrix, n: usize, k: usize, z: &PairTable<C64>, u: &ComplexMatrix) -> ComplexMatrix {
    multi_block(x, n, 2 * k, 1.0 / (2.0 * k as f64 * (n as f64 - 1.0)), z, |y| twist(y, u))
}

/// `R_2(X) = sigma_y X^T sigma_y^+` on the four units of `M_2`.
fn check_sigma_y_rewrite(tol: &Tolerance) -> Result<()> {
    let sy = sigma_y();
    for i in 0..2 {
        for j in 0..2 {
            let e = matrix_unit(2, i, j)?;
            let defect = reduction2(&e).max_abs_diff(&twist(&e, &sy))?;
            if defect > tol.eq_atol {
                return Err(Error::Unsupported(format!("sigma_y rewrite of the M_2 reduction fails by {defect:e}")));
            }
        }
    }
    Ok(())
}

/// `J = 1_K (x) [[0, 1], [-1, 0]]`, a real antisymmetric orthogonal matrix.
pub fn default_antisymmetric_unitary(two_k: usize) -> Result<ComplexMatrix> {
    if two_k < 2 || !two_k.is_multiple_of(2) {
        return Err(Error::InvalidMapSpec(format!("antisymmetric unitaries exist only in even dimension >= 2, got {two_k}")));
    }
    let j = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
    Ok(kron(&ComplexMatrix::identity(two_k / 2), &j))
}

/// `W J W^T` for a unitary `W`: antisymmetric and unitary.
pub fn antisymmetric_from_unitary(w: &ComplexMatrix, two_k: usize) -> Result<ComplexMatrix> {
    let j = default_antisymmetric_unitary(two_k)?;
    if w.rows() != two_k || !w.is_square() {
        return Err(dim_mismatch("antisymmetric_from_unitary", two_k, w.rows()));
    }
    Ok(&(w * &j) * &w.transpose())
}

pub fn check_antisymmetric_unitary(u: &ComplexMatrix, size: usize, tol: &Tolerance) -> Result<()> {
    if u.rows() != size || u.cols() != size {
        return Err(Error::InvalidMapSpec(format!("U must be {size}x{size}, got {}x{}", u.rows(), u.cols())));
    }
    let unitarity = (&u.dagger() * u).max_abs_diff(&ComplexMatrix::identity(size))?;
    let antisym = u.transpose().max_abs_diff(&-u)?;
    if unitarity > tol.eq_atol || antisym > tol.eq_atol {
        return Err(Error::InvalidMapSpec(format!(
            "U must be unitary and antisymmetric: |U^+U - 1| = {unitarity:e}, |U^T + U| = {antisym:e}"
        )));
    }
    Ok(())
}

/// Outcome of the see-saw search for a negative direction.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScanResult {
    /// Smallest `lambda_min(L(|psi><psi|))` found.
    pub min_value: f64,
    /// Input vector attaining it.
    pub argmin: Vec<C64>,
    /// Output vector `y` with `<y|L(|psi><psi|)|y> = min_value`.
    pub output_vector: Vec<C64>,
    pub trials: usize,
    pub seed: u64,
    pub best_trial: usize,
}

const SEESAW_MAX_ROUNDS: usize = 200;
const SEESAW_MIN_GAIN: f64 = 1e-12;

struct TrialOutcome {
    value: f64,
    psi: Vec<C64>,
    y: Vec<C64>,
}

/// Minimizes `lambda_min(L(|psi><psi|))` over unit `psi` from `trials`
/// random starts, each refined by alternating exact minimization: for fixed
/// output vector `y` the objective is the Hermitian form
/// `(Phi_y)_ji = <y|L(e_ij)|y>` in `psi`, minimized by its bottom eigenvector.
/// Per-trial seeds derive from `seed`, so the result is deterministic.
pub fn positivity_scan(map: &LinearMap, trials: usize, seed: u64) -> Result<ScanResult> {
    if trials == 0 {
        return Err(Error::Unsupported("positivity_scan needs at least one trial".into()));
    }
    let run = |t: usize| seesaw_trial(map, derive_seed(seed, t as u64));

    #[cfg(feature = "parallel")]
    let outcomes: Vec<TrialOutcome> = {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(run).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<TrialOutcome> = (0..trials).map(run).collect::<Result<Vec<_>>>()?;

    let (best_trial, best) = outcomes
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .expect("at least one trial");
    Ok(ScanResult { min_value: best.value, argmin: best.psi, output_vector: best.y, trials, seed, best_trial })
}

fn seesaw_trial(map: &LinearMap, seed: u64) -> Result<TrialOutcome> {
    // Φ_y is only Hermitian up to the map's own Hermiticity defect
    let tol = Tolerance { eq_atol: 1e-8, ..Tolerance::default() };
    let mut rng = rng_from_seed(seed);
    let mut psi = random_unit_vector_with(&mut rng, map.d_in);
    let eval = |psi: &[C64]| -> Result<(f64, Vec<C64>)> {
        let out = map.apply(&ComplexMatrix::outer(psi, psi))?;
        let e = hermitian_eigen(&out, &tol)?;
        Ok((e.min(), e.vector(0)))
    };
    let (mut value, mut y) = eval(&psi)?;
    for _ in 0..SEESAW_MAX_ROUNDS {
        let phi = ComplexMatrix::from_fn(map.d_in, map.d_in, |j, i| {
            map.image(i, j).sandwich(&y, &y).expect("dimensions fixed by the map")
        });
        let e = hermitian_eigen(&phi, &tol)?;
        let candidate = e.vector(0);
        let (next_value, next_y) = eval(&candidate)?;
        let gain = value - next_value;
        if gain > 0.0 {
            value = next_value;
            y = next_y;
            psi = candidate;
        }
        if gain < SEESAW_MIN_GAIN {
            break;
        }
    }
    Ok(TrialOutcome { value, psi, y })
}

/// `X -> U X U^+` style conjugation map, mostly useful in tests and as a CP
/// reference point.
pub fn conjugation_map(a: &ComplexMatrix) -> Result<LinearMap> {
    let ad = a.dagger();
    LinearMap::from_action(a.cols(), a.rows(), |x| &(a * x) * &ad)
}

/// Identity map on `M_d`.
pub fn identity_map(d: usize) -> Result<LinearMap> {
    LinearMap::from_action(d, d, |x| x.clone())
}

/// Phases all equal to one.
pub fn unit_phases(n: usize) -> PairTable<C64> {
    PairTable::filled(n, ONE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        conj_vec, hermitian_eigenvalues, inner, min_eigenvalue, random_hermitian_with, random_phase_with, random_unit_vector,
        I, ZERO,
    };

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn reduction_two_images() {
        let m = build(&MapSpec::Reduction { n: 2 }).unwrap();
        assert_eq!(*m.image(0, 0), matrix_unit(2, 1, 1).unwrap());
        assert_eq!(*m.image(0, 1), -&matrix_unit(2, 0, 1).unwrap());
    }

    #[test]
    fn reduction_apply_matches_closed_form() {
        let mut rng = rng_from_seed(4);
        for n in 2..6 {
            let m = build(&MapSpec::Reduction { n }).unwrap();
            let x = random_hermitian_with(&mut rng, n);
            let want = (&ComplexMatrix::identity(n).scale(x.trace()) - &x).scale_real(1.0 / (n as f64 - 1.0));
            assert!(m.apply(&x).unwrap().approx_eq(&want, 1e-14));
            // generalized reduction with z = 1 coincides
            let g = build(&MapSpec::GeneralizedReduction { n, z: unit_phases(n) }).unwrap();
            assert!(g.apply(&x).unwrap().approx_eq(&want, 1e-14));
        }
    }

    #[test]
    fn apply_on_units_returns_images() {
        let m = build(&MapSpec::NewFamily { n: 3, k: 1, z: unit_phases(3), u: sigma_y() }).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(m.apply(&matrix_unit(6, i, j).unwrap()).unwrap(), *m.image(i, j));
            }
        }
        assert!(m.apply(&ComplexMatrix::identity(5)).is_err());
    }

    #[test]
    fn new_family_two_one_is_robertson() {
        let rob = build(&MapSpec::Robertson).unwrap();
        for u in [sigma_y(), default_antisymmetric_unitary(2).unwrap()] {
            let nf = build(&MapSpec::NewFamily { n: 2, k: 1, z: unit_phases(2), u }).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    assert!(nf.image(i, j).approx_eq(rob.image(i, j), 1e-12));
                }
            }
        }
    }

    #[test]
    fn generalized_robertson_diagonal_block_units() {
        // K = 1: e_ij inside the second block maps to (1/2) 1_2 Tr X_22 in the first block
        let m = build(&MapSpec::GeneralizedRobertson { k: 1, u: sigma_y() }).unwrap();
        for r in 0..2 {
            for s in 0..2 {
                let img = m.image(2 + r, 2 + s);
                let mut want = ComplexMatrix::zeros(4, 4);
                if r == s {
                    want.set_block(0, 0, &ComplexMatrix::identity(2).scale_real(0.5));
                }
                assert!(img.approx_eq(&want, 1e-15), "unit ({r},{s})");
            }
        }
        // and agrees with the new family at N = 2
        let nf = build(&MapSpec::NewFamily { n: 2, k: 2, z: unit_phases(2), u: default_antisymmetric_unitary(4).unwrap() }).unwrap();
        let gr = build(&MapSpec::GeneralizedRobertson { k: 2, u: default_antisymmetric_unitary(4).unwrap() }).unwrap();
        let mut rng = rng_from_seed(2);
        let x = random_hermitian_with(&mut rng, 8);
        assert!(nf.apply(&x).unwrap().approx_eq(&gr.apply(&x).unwrap(), 1e-13));
    }

    /// Images of the new family written out unit by unit: for blocks
    /// `p = q` the image is `(1 - e_pp) (x) 1 delta_rs`, otherwise
    /// `-z e_pq (x) e_rs - conj(z) e_qp (x) U e_sr U^+` for `p < q`.
    fn new_family_unit_formula(n: usize, k: usize, z: &PairTable<C64>, u: &ComplexMatrix, i: usize, j: usize) -> ComplexMatrix {
        let t = 2 * k;
        let (p, r, q, s) = (i / t, i % t, j / t, j % t);
        let c = 1.0 / (t as f64 * (n as f64 - 1.0));
        let ers = matrix_unit(t, r, s).unwrap();
        let esr_twisted = &(u * &matrix_unit(t, s, r).unwrap()) * &u.dagger();
        if p == q {
            let mut left = ComplexMatrix::identity(n);
            left[(p, p)] = ZERO;
            let delta = if r == s { 1.0 } else { 0.0 };
            return kron(&left, &ComplexMatrix::identity(t)).scale_real(c * delta);
        }
        let (zd, zt) = if p < q { (*z.get(p, q), z.get(p, q).conj()) } else { (z.get(q, p).conj(), *z.get(q, p)) };
        let direct = kron(&matrix_unit(n, p, q).unwrap(), &ers).scale(-zd);
        let twisted = kron(&matrix_unit(n, q, p).unwrap(), &esr_twisted).scale(-zt);
        (&direct + &twisted).scale_real(c)
    }

    #[test]
    fn new_family_images_match_unit_formula() {
        let mut rng = rng_from_seed(12);
        for (n, k) in [(2, 1), (3, 1), (2, 2), (3, 2)] {
            let z = PairTable::from_fn(n, |_, _| random_phase_with(&mut rng) * 0.8);
            let w = crate::linalg::haar_unitary_with(&mut rng, 2 * k);
            let u = antisymmetric_from_unitary(&w, 2 * k).unwrap();
            let m = build(&MapSpec::NewFamily { n, k, z: z.clone(), u: u.clone() }).unwrap();
            for i in 0..m.d_in() {
                for j in 0..m.d_in() {
                    let want = new_family_unit_formula(n, k, &z, &u, i, j);
                    assert!(m.image(i, j).approx_eq(&want, 1e-14), "(N,K)=({n},{k}) unit ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn hermiticity_preserved_by_every_family() {
        let mut rng = rng_from_seed(5);
        let z3 = PairTable::from_fn(3, |_, _| random_phase_with(&mut rng));
        let specs = [
            MapSpec::Reduction { n: 4 },
            MapSpec::GeneralizedReduction { n: 3, z: z3.clone() },
            MapSpec::Robertson,
            MapSpec::GeneralizedRobertson { k: 2, u: default_antisymmetric_unitary(4).unwrap() },
            MapSpec::ComplexRobertsonExtension { n: 3, z: z3.clone() },
            MapSpec::NewFamily { n: 3, k: 1, z: z3, u: default_antisymmetric_unitary(2).unwrap() },
        ];
        for spec in specs {
            let m = build(&spec).unwrap();
            assert!(m.hermiticity_defect() <= 1e-15);
            let x = random_hermitian_with(&mut rng, spec.dim());
            assert!(m.apply(&x).unwrap().is_hermitian(1e-10), "{}", spec.family());
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad_u = ComplexMatrix::identity(2);
        assert!(build(&MapSpec::NewFamily { n: 2, k: 1, z: unit_phases(2), u: bad_u }).is_err());
        let big = PairTable::filled(2, C64::new(1.5, 0.0));
        assert!(build(&MapSpec::GeneralizedReduction { n: 2, z: big }).is_err());
        assert!(build(&MapSpec::Reduction { n: 1 }).is_err());
        assert!(default_antisymmetric_unitary(3).is_err());
    }

    #[test]
    fn sigma_y_rewrites_the_m2_reduction() {
        let mut rng = rng_from_seed(6);
        let sy = sigma_y();
        for _ in 0..10 {
            let x = crate::linalg::ginibre_with(&mut rng, 2, 2);
            assert!(reduction2(&x).approx_eq(&twist(&x, &sy), 1e-14));
        }
    }

    #[test]
    fn reduction_choi_spectrum() {
        // N = 2: (1/2) 1 - P+
        let w = build(&MapSpec::Reduction { n: 2 }).unwrap().choi().unwrap();
        let ev = hermitian_eigenvalues(w.matrix(), &tol()).unwrap();
        for (x, y) in ev.iter().zip([-0.5, 0.5, 0.5, 0.5]) {
            assert!((x - y).abs() < 1e-14);
        }
        for n in 2..=6 {
            let w = build(&MapSpec::Reduction { n }).unwrap().choi().unwrap();
            let lo = min_eigenvalue(w.matrix(), &tol()).unwrap();
            assert!((lo + 1.0 / n as f64).abs() < 1e-12, "N = {n}: {lo}");
        }
    }

    #[test]
    fn zero_map_has_zero_choi() {
        let m = LinearMap::from_action(3, 3, |_| ComplexMatrix::zeros(3, 3)).unwrap();
        assert_eq!(*m.choi().unwrap().matrix(), ComplexMatrix::zeros(9, 9));
        let rect = LinearMap::from_action(2, 3, |_| ComplexMatrix::zeros(3, 3)).unwrap();
        assert!(rect.choi().is_err());
    }

    fn pairing(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
        (&a.dagger() * b).trace()
    }

    #[test]
    fn adjoint_pairing_and_involution() {
        let mut rng = rng_from_seed(7);
        let m = build(&MapSpec::NewFamily { n: 2, k: 1, z: PairTable::filled(2, C64::from_polar(0.9, 0.4)), u: sigma_y() }).unwrap();
        let adj = m.adjoint();
        for _ in 0..10 {
            let a = crate::linalg::ginibre_with(&mut rng, 4, 4);
            let b = crate::linalg::ginibre_with(&mut rng, 4, 4);
            let lhs = pairing(&a, &m.apply(&b).unwrap());
            let rhs = pairing(&adj.apply(&a).unwrap(), &b);
            assert!((lhs - rhs).norm() < 1e-12);
        }
        let back = adj.adjoint();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(back.image(i, j), m.image(i, j));
            }
        }
        for n in 2..5 {
            let r = build(&MapSpec::Reduction { n }).unwrap();
            let ra = r.adjoint();
            for i in 0..n {
                for j in 0..n {
                    assert!(ra.image(i, j).approx_eq(r.image(i, j), 1e-15));
                }
            }
        }
    }

    #[test]
    fn adjoint_of_conjugation_swaps_a_and_a_dagger() {
        let a = ComplexMatrix::from_rows(&[vec![ONE, I], vec![C64::new(2.0, 0.0), C64::new(0.0, -3.0)]]);
        let adj = conjugation_map(&a).unwrap().adjoint();
        let expected = conjugation_map(&a.dagger()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(adj.image(i, j).approx_eq(expected.image(i, j), 1e-14));
            }
        }
    }

    #[test]
    fn antisymmetric_unitaries() {
        let j2 = default_antisymmetric_unitary(2).unwrap();
        assert_eq!(j2, ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]));
        let j4 = default_antisymmetric_unitary(4).unwrap();
        check_antisymmetric_unitary(&j4, 4, &tol()).unwrap();
        assert_eq!(j4.block(0, 0, 2, 2), j2);
        assert_eq!(j4.block(2, 2, 2, 2), j2);
        assert_eq!(j4.block(0, 2, 2, 2), ComplexMatrix::zeros(2, 2));
        for s in 0..1000 {
            let psi = random_unit_vector(4, s);
            let v = inner(&psi, &j4.mat_vec(&conj_vec(&psi)).unwrap());
            assert!(v.norm() < 1e-15);
        }
        let mut rng = rng_from_seed(1);
        let w = crate::linalg::haar_unitary_with(&mut rng, 6);
        check_antisymmetric_unitary(&antisymmetric_from_unitary(&w, 6).unwrap(), 6, &tol()).unwrap();
    }

    #[test]
    fn scan_reduction_three_is_nonnegative() {
        let m = build(&MapSpec::Reduction { n: 3 }).unwrap();
        let r = positivity_scan(&m, 500, 42).unwrap();
        assert!(r.min_value >= -1e-9, "{}", r.min_value);
        // the reduction map kills nothing: the minimum is the zero eigenvalue on psi itself
        assert!(r.min_value < 1e-9);
    }

    #[test]
    fn scan_finds_negative_direction() {
        // R_3 - 0.2 id: on |e1><e1| the output has eigenvalue -0.2 along e1
        let r = build(&MapSpec::Reduction { n: 3 }).unwrap();
        let lam = r.combine(&identity_map(3).unwrap(), 1.0, -0.2).unwrap();
        let res = positivity_scan(&lam, 50, 1).unwrap();
        assert!(res.min_value < -1e-3);
        assert!((res.min_value + 0.2).abs() < 1e-9, "{}", res.min_value);
        let out = lam.apply(&ComplexMatrix::outer(&res.argmin, &res.argmin)).unwrap();
        let v = out.sandwich(&res.output_vector, &res.output_vector).unwrap();
        assert!((v.re - res.min_value).abs() < 1e-9);
    }

    #[test]
    fn scan_new_family_three_one() {
        let m = build(&MapSpec::NewFamily { n: 3, k: 1, z: unit_phases(3), u: default_antisymmetric_unitary(2).unwrap() }).unwrap();
        let r = positivity_scan(&m, 500, 42).unwrap();
        assert!(r.min_value >= -1e-9, "{}", r.min_value);
    }

    #[test]
    fn scan_is_deterministic() {
        let m = build(&MapSpec::Robertson).unwrap();
        let a = positivity_scan(&m, 40, 9).unwrap();
        let b = positivity_scan(&m, 40, 9).unwrap();
        assert_eq!(a, b);
    }
}
