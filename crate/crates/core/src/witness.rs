//! Witness analysis for the block family: product expectations, the PPT
//! state that detects it, zero-expectation product sets (optimality) and the
//! partial-transpose covariance (nd-optimality).

use std::sync::OnceLock;

use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{
    kron, kron_vec, matrix_unit, min_eigenvalue, partial_transpose, singular_values, BipartiteDims, ComplexMatrix,
    Subsystem, Tolerance, C64, I, ONE,
};
use crate::maps::{build, MapSpec};
use crate::pairs::PairTable;

/// Hermitian operator on `C^dA (x) C^dB`.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    matrix: ComplexMatrix,
    dims: BipartiteDims,
    provenance: Option<MapSpec>,
}

impl Witness {
    pub fn new(matrix: ComplexMatrix, dims: BipartiteDims, provenance: Option<MapSpec>) -> Result<Self> {
        dims.check(&matrix)?;
        let defect = matrix.hermiticity_defect();
        if defect > Tolerance::default().eq_atol {
            return Err(Error::NotHermitian { defect });
        }
        Ok(Self { matrix, dims, provenance })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn provenance(&self) -> Option<&MapSpec> {
        self.provenance.as_ref()
    }

    pub fn min_eigenvalue(&self, tol: &Tolerance) -> Result<f64> {
        min_eigenvalue(&self.matrix, tol)
    }

    /// A witness must not be PSD.
    pub fn is_non_psd(&self, tol: &Tolerance) -> Result<bool> {
        Ok(self.min_eigenvalue(tol)? < -tol.psd_slack)
    }

    /// `W^Gamma`, transpose on the second factor.
    pub fn partial_transpose(&self) -> Result<Witness> {
        let m = partial_transpose(&self.matrix, self.dims, Subsystem::B)?;
        Ok(Witness { matrix: m, dims: self.dims, provenance: self.provenance.clone() })
    }

    /// `<psi (x) phi| W |psi (x) phi>`; the imaginary part must vanish.
    pub fn expectation_product(&self, psi: &[C64], phi: &[C64]) -> Result<f64> {
        if psi.len() != self.dims.d_a || phi.len() != self.dims.d_b {
            return Err(dim_mismatch(
                "expectation_product",
                format!("{}+{}", self.dims.d_a, self.dims.d_b),
                format!("{}+{}", psi.len(), phi.len()),
            ));
        }
        let v = kron_vec(psi, phi);
        let e = self.matrix.sandwich(&v, &v)?;
        let scale = 1.0 + e.re.abs();
        if e.im.abs() > 1e-10 * scale {
            return Err(Error::NotHermitian { defect: e.im.abs() });
        }
        Ok(e.re)
    }

    /// `(d x d)` block `(i, j)` of a witness on `C^d (x) C^d`.
    fn block(&self, i: usize, j: usize) -> ComplexMatrix {
        let d = self.dims.d_b;
        self.matrix.block(i * d, j * d, d, d)
    }
}

pub fn expectation_product(w: &Witness, psi: &[C64], phi: &[C64]) -> Result<f64> {
    w.expectation_product(psi, phi)
}

/// Which entries of the detector are classified as stripe vs residual.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StripeRule {
    /// Same `2K` block and `i != j` is zero; different blocks with equal
    /// in-block position is a stripe; everything else is residual.
    #[default]
    Block,
    /// Classify by `|i - j|` alone: zero below `2K`, stripe on multiples of
    /// `2K`, residual otherwise. Kept for comparison; it does not reproduce
    /// the detection constant.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    Diagonal,
    Stripe,
    Residual,
    Zero,
}

/// The PPT state `rho = 1/(2K+1) sum_ij e_ij (x) rho_ij`.
#[derive(Debug, Clone)]
pub struct PptDetector {
    pub n: usize,
    pub k: usize,
    pub rho: ComplexMatrix,
    /// Row-major `d x d` table of case tags.
    pub block_table: Vec<BlockKind>,
    pub normalization: f64,
    pub unnormalized_trace: f64,
    pub rule: StripeRule,
}

impl PptDetector {
    pub fn d(&self) -> usize {
        2 * self.k * self.n
    }

    pub fn kind(&self, i: usize, j: usize) -> BlockKind {
        self.block_table[i * self.d() + j]
    }

    pub fn verify(&self, tol: &Tolerance) -> Result<PptVerdict> {
        let d = self.d();
        let trace = self.rho.trace().re;
        let rho_min_eigenvalue = min_eigenvalue(&self.rho, tol)?;
        let pt = partial_transpose(&self.rho, BipartiteDims::new(d, d), Subsystem::B)?;
        let pt_min_eigenvalue = min_eigenvalue(&pt, tol)?;
        Ok(PptVerdict {
            trace,
            rho_min_eigenvalue,
            pt_min_eigenvalue,
            trace_ok: (trace - 1.0).abs() <= tol.eq_atol,
            psd_ok: rho_min_eigenvalue >= -tol.psd_slack,
            ppt_ok: pt_min_eigenvalue >= -tol.psd_slack,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PptVerdict {
    pub trace: f64,
    pub rho_min_eigenvalue: f64,
    pub pt_min_eigenvalue: f64,
    pub trace_ok: bool,
    pub psd_ok: bool,
    pub ppt_ok: bool,
}

impl PptVerdict {
    pub fn all_ok(&self) -> bool {
        self.trace_ok && self.psd_ok && self.ppt_ok
    }
}

fn classify(i: usize, j: usize, t: usize, rule: StripeRule) -> BlockKind {
    if i == j {
        return BlockKind::Diagonal;
    }
    match rule {
        StripeRule::Block => {
            if i / t == j / t {
                BlockKind::Zero
            } else if i % t == j % t {
                BlockKind::Stripe
            } else {
                BlockKind::Residual
            }
        }
        StripeRule::Literal => {
            let g = i.abs_diff(j);
            if g < t {
                BlockKind::Zero
            } else if g.is_multiple_of(t) {
                BlockKind::Stripe
            } else {
                BlockKind::Residual
            }
        }
    }
}

/// Phase of the block pair containing units `i` and `j` (1 within a block).
fn unit_phase(z: &PairTable<C64>, t: usize, i: usize, j: usize) -> C64 {
    let (p, q) = (i / t, j / t);
    match p.cmp(&q) {
        std::cmp::Ordering::Equal => ONE,
        std::cmp::Ordering::Less => *z.get(p, q),
        std::cmp::Ordering::Greater => z.get(q, p).conj(),
    }
}

fn new_family_parts(spec: &MapSpec) -> Result<(usize, usize, &PairTable<C64>, &ComplexMatrix)> {
    match spec {
        MapSpec::NewFamily { n, k, z, u } => Ok((*n, *k, z, u)),
        other => Err(Error::Unsupported(format!("expected a new-family map, got {}", other.family()))),
    }
}

/// Assembles the PPT state for the new family from the (1/d-inclusive)
/// Choi blocks of `witness`.
pub fn build_ppt_detector(spec: &MapSpec, witness: &Witness, rule: StripeRule) -> Result<PptDetector> {
    let (n, k, z, _) = new_family_parts(spec)?;
    if let Some(p) = witness.provenance() {
        if p != spec {
            return Err(Error::Unsupported("witness was built from a different map spec".into()));
        }
    }
    let t = 2 * k;
    let d = t * n;
    let dims = witness.dims();
    if dims.d_a != d || dims.d_b != d {
        return Err(dim_mismatch("build_ppt_detector", format!("{d}x{d}"), format!("{}x{}", dims.d_a, dims.d_b)));
    }
    let diag_weight = (t * (n - 1)) as f64 - 1.0;
    let residual_scale = 1.0 / ((t * t * n * (n - 1)) as f64);
    let mut rho = ComplexMatrix::zeros(d * d, d * d);
    let mut block_table = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let kind = classify(i, j, t, rule);
            block_table.push(kind);
            let b = match kind {
                BlockKind::Diagonal => {
                    &ComplexMatrix::identity(d).scale_real(1.0 / d as f64) - &witness.block(i, i).scale_real(diag_weight)
                }
                BlockKind::Stripe => -&witness.block(i, j),
                BlockKind::Residual => matrix_unit(d, i, j)?.scale(unit_phase(z, t, i, j) * residual_scale),
                BlockKind::Zero => continue,
            };
            rho.set_block(i * d, j * d, &b);
        }
    }
    let unnormalized_trace = rho.trace().re;
    let expected = (t + 1) as f64;
    if (unnormalized_trace - expected).abs() > 1e-8 {
        return Err(Error::TraceMismatch { expected, found: unnormalized_trace });
    }
    let normalization = 1.0 / expected;
    Ok(PptDetector { n, k, rho: rho.scale_real(normalization), block_table, normalization, unnormalized_trace, rule })
}

/// `Tr(W rho)` split by the case of each block pair `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DetectionValue {
    pub value: f64,
    pub diagonal: f64,
    /// Off-diagonal stripe blocks only.
    pub stripe: f64,
    pub near_diagonal: f64,
    pub residual: f64,
}

impl DetectionValue {
    /// Diagonal plus stripe, i.e. the sum over `|i - j| = 2K l` including `l = 0`.
    pub fn stripe_with_diagonal(&self) -> f64 {
        self.diagonal + self.stripe
    }
}

/// `-1/((2K+1)(2K)^3 N(N-1))`
pub fn expected_detection_value(n: usize, k: usize) -> f64 {
    let t = (2 * k) as f64;
    -1.0 / ((t + 1.0) * t.powi(3) * (n * (n - 1)) as f64)
}

pub fn detection_value(w: &Witness, rho: &PptDetector) -> Result<DetectionValue> {
    let d = rho.d();
    let dims = w.dims();
    if dims.d_a != d || dims.d_b != d {
        return Err(dim_mismatch("detection_value", format!("{d}x{d}"), format!("{}x{}", dims.d_a, dims.d_b)));
    }
    let (mut diagonal, mut stripe, mut near, mut residual) = (C64::default(), C64::default(), C64::default(), C64::default());
    for i in 0..d {
        for j in 0..d {
            // Tr(W_ij rho_ji)
            let mut s = C64::default();
            for a in 0..d {
                for b in 0..d {
                    s += w.matrix[(i * d + a, j * d + b)] * rho.rho[(j * d + b, i * d + a)];
                }
            }
            match rho.kind(i, j) {
                BlockKind::Diagonal => diagonal += s,
                BlockKind::Stripe => stripe += s,
                BlockKind::Residual => residual += s,
                BlockKind::Zero => near += s,
            }
        }
    }
    let total = diagonal + stripe + near + residual;
    Ok(DetectionValue {
        value: total.re,
        diagonal: diagonal.re,
        stripe: stripe.re,
        near_diagonal: near.re,
        residual: residual.re,
    })
}

/// Whether the left factor of a zero-set product vector is conjugated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LeftConvention {
    Plain,
    Conjugated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroKind {
    Diagonal,
    Phi,
    PhiTilde,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector {
    pub kind: ZeroKind,
    /// Units `(m, n)`, 0-based; `m == n` for diagonal vectors.
    pub units: (usize, usize),
    pub left: Vec<C64>,
    pub right: Vec<C64>,
}

/// Product vectors with vanishing witness expectation.
#[derive(Debug, Clone)]
pub struct ZeroProductSet {
    pub vectors: Vec<ProductVector>,
    /// `alpha_pq = arg z_pq` per block pair.
    pub phases: PairTable<f64>,
    pub convention: LeftConvention,
}

/// Builds `e_k (x) e_k`, `phi (x) phi` and `phi' (x) phi''` with
/// `phi = e_m + e^{-i a/2} e_n`, `phi' = e_m + i e^{-i a/2} e_n`,
/// `phi'' = e_m - i e^{-i a/2} e_n` and `a` the phase of the block pair.
fn zero_set_vectors(n: usize, t: usize, phases: &PairTable<f64>, convention: LeftConvention) -> Vec<ProductVector> {
    let d = n * t;
    let unit = |k: usize| {
        let mut v = vec![C64::default(); d];
        v[k] = ONE;
        v
    };
    let left = |v: Vec<C64>| match convention {
        LeftConvention::Plain => v,
        LeftConvention::Conjugated => v.into_iter().map(|x| x.conj()).collect(),
    };
    let mut out = Vec::with_capacity(d * d);
    for k in 0..d {
        out.push(ProductVector { kind: ZeroKind::Diagonal, units: (k, k), left: left(unit(k)), right: unit(k) });
    }
    for m in 0..d {
        for nn in m + 1..d {
            let (p, q) = (m / t, nn / t);
            let alpha = if p == q { 0.0 } else { *phases.get(p, q) };
            let ph = C64::from_polar(1.0, -alpha / 2.0);
            let mk = |c: C64| {
                let mut v = unit(m);
                v[nn] = c;
                v
            };
            let phi = mk(ph);
            out.push(ProductVector { kind: ZeroKind::Phi, units: (m, nn), left: left(phi.clone()), right: phi });
            out.push(ProductVector { kind: ZeroKind::PhiTilde, units: (m, nn), left: left(mk(I * ph)), right: mk(-I * ph) });
        }
    }
    out
}

fn max_abs_expectation(w: &Witness, vectors: &[ProductVector]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for v in vectors {
        worst = worst.max(w.expectation_product(&v.left, &v.right)?.abs());
    }
    Ok(worst)
}

fn stacked_singular_values(vectors: &[ProductVector]) -> Vec<f64> {
    let rows: Vec<Vec<C64>> = vectors.iter().map(|v| kron_vec(&v.left, &v.right)).collect();
    let cols = rows.first().map_or(0, Vec::len);
    singular_values(&ComplexMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

/// Left-factor convention that produces zeros for the witness convention
/// used here, settled once on the `(N, K) = (2, 1)` member.
pub fn detected_convention() -> LeftConvention {
    static CONVENTION: OnceLock<LeftConvention> = OnceLock::new();
    *CONVENTION.get_or_init(|| {
        let probe = || -> Result<(f64, f64)> {
            let spec = MapSpec::new_family(2, 1, PairTable::filled(2, ONE))?;
            let w = build(&spec)?.choi()?;
            let phases = PairTable::filled(2, 0.0);
            let plain = max_abs_expectation(&w, &zero_set_vectors(2, 2, &phases, LeftConvention::Plain))?;
            let conj = max_abs_expectation(&w, &zero_set_vectors(2, 2, &phases, LeftConvention::Conjugated))?;
            Ok((plain, conj))
        };
        match probe() {
            Ok((plain, conj)) if conj < plain => LeftConvention::Conjugated,
            _ => LeftConvention::Plain,
        }
    })
}

/// Verdict on a zero-product set.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpanReport {
    pub size: usize,
    pub expected_size: usize,
    pub max_abs_expectation: f64,
    pub min_singular_value: f64,
    pub rank: usize,
    pub zeros_ok: bool,
    pub spanning_ok: bool,
}

impl SpanReport {
    pub fn ok(&self) -> bool {
        self.zeros_ok && self.spanning_ok && self.size == self.expected_size
    }
}

/// Zero expectations are required to this absolute level.
pub const ZERO_EXPECTATION_ATOL: f64 = 1e-10;
/// Smallest singular value that still counts towards the rank.
pub const RANK_CUTOFF: f64 = 1e-8;

fn span_report(w: &Witness, vectors: &[ProductVector]) -> Result<SpanReport> {
    let d = w.dims().total();
    let max_abs = max_abs_expectation(w, vectors)?;
    let sv = stacked_singular_values(vectors);
    let rank = sv.iter().filter(|&&s| s > RANK_CUTOFF).count();
    let min_sv = sv.last().copied().unwrap_or(0.0);
    Ok(SpanReport {
        size: vectors.len(),
        expected_size: d,
        max_abs_expectation: max_abs,
        min_singular_value: min_sv,
        rank,
        zeros_ok: max_abs <= ZERO_EXPECTATION_ATOL,
        spanning_ok: rank == d && vectors.len() == d,
    })
}

#[derive(Debug, Clone)]
pub struct OptimalityReport {
    pub set: ZeroProductSet,
    pub span: SpanReport,
}

fn non_unit_pairs(z: &PairTable<C64>, tol: &Tolerance) -> Vec<(usize, usize)> {
    z.iter().filter(|(_, _, v)| (v.norm() - 1.0).abs() > tol.eq_atol).map(|(i, j, _)| (i + 1, j + 1)).collect()
}

/// Builds the zero-product set for a new-family witness and checks that
/// the expectations vanish and the `d^2` product vectors are independent.
pub fn optimality_zero_set(spec: &MapSpec, w: &Witness, tol: &Tolerance) -> Result<OptimalityReport> {
    let (n, k, z, _) = new_family_parts(spec)?;
    let bad = non_unit_pairs(z, tol);
    if !bad.is_empty() {
        return Err(Error::NonUnitPhases { pairs: bad });
    }
    let d = 2 * k * n;
    if w.dims() != BipartiteDims::new(d, d) {
        return Err(dim_mismatch("optimality_zero_set", format!("{d}x{d}"), format!("{}x{}", w.dims().d_a, w.dims().d_b)));
    }
    let phases = z.map(|_, _, v| v.arg());
    let convention = detected_convention();
    let vectors = zero_set_vectors(n, 2 * k, &phases, convention);
    let span = span_report(w, &vectors)?;
    Ok(OptimalityReport { set: ZeroProductSet { vectors, phases, convention }, span })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct NdOptimalityReport {
    /// `max |(1 (x) V) W(z) (1 (x) V^+) - W(conj z)^Gamma|` with `V = 1_N (x) U^+`.
    pub covariance_residual: f64,
    /// Same, against `W(z)^Gamma`; vanishes when `z` is real.
    pub direct_residual: f64,
    pub gamma: SpanReport,
    pub gamma_zero_set_ok: bool,
    pub gamma_spanning_ok: bool,
}

impl NdOptimalityReport {
    pub fn ok(&self, atol: f64) -> bool {
        self.covariance_residual <= atol && self.gamma_zero_set_ok && self.gamma_spanning_ok
    }
}

/// Checks the covariance of the witness under `1 (x) V` and that the
/// transformed zero set `{psi (x) V phi}` of `W(conj z)` certifies
/// optimality of `W(z)^Gamma`.
pub fn nd_optimality_check(spec: &MapSpec, w: &Witness) -> Result<NdOptimalityReport> {
    let (n, k, z, u) = new_family_parts(spec)?;
    let t = 2 * k;
    let d = t * n;
    if w.dims() != BipartiteDims::new(d, d) {
        return Err(dim_mismatch("nd_optimality_check", format!("{d}x{d}"), format!("{}x{}", w.dims().d_a, w.dims().d_b)));
    }
    let v = kron(&ComplexMatrix::identity(n), &u.dagger());
    let big_v = kron(&ComplexMatrix::identity(d), &v);
    let rotated = &(&big_v * w.matrix()) * &big_v.dagger();

    let zbar = z.map(|_, _, x| x.conj());
    let conj_spec = MapSpec::NewFamily { n, k, z: zbar.clone(), u: u.clone() };
    let w_conj_gamma = build(&conj_spec)?.choi()?.partial_transpose()?;
    let w_gamma = w.partial_transpose()?;
    let covariance_residual = rotated.max_abs_diff(w_conj_gamma.matrix())?;
    let direct_residual = rotated.max_abs_diff(w_gamma.matrix())?;

    let phases = zbar.map(|_, _, x| x.arg());
    let vectors: Vec<ProductVector> = zero_set_vectors(n, t, &phases, detected_convention())
        .into_iter()
        .map(|p| {
            let right = v.mat_vec(&p.right).expect("dimension d");
            ProductVector { right, ..p }
        })
        .collect();
    let gamma = span_report(&w_gamma, &vectors)?;
    Ok(NdOptimalityReport {
        covariance_residual,
        direct_residual,
        gamma_zero_set_ok: gamma.zeros_ok,
        gamma_spanning_ok: gamma.spanning_ok,
        gamma,
    })
}

/// `max_rs |(U^+ e_rs U)^T - U e_rs^T U^+|`; zero whenever `U^T = +-U`.
pub fn antisymmetric_conjugation_identity(u: &ComplexMatrix) -> Result<f64> {
    if !u.is_square() {
        return Err(dim_mismatch("antisymmetric_conjugation_identity", "square", format!("{}x{}", u.rows(), u.cols())));
    }
    let d = u.rows();
    let ud = u.dagger();
    let mut worst: f64 = 0.0;
    for r in 0..d {
        for s in 0..d {
            let e = matrix_unit(d, r, s)?;
            let lhs = (&(&ud * &e) * u).transpose();
            let rhs = &(u * &e.transpose()) * &ud;
            worst = worst.max(lhs.max_abs_diff(&rhs)?);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, haar_unitary_with, random_phase_with, rng_from_seed, sigma_y};
    use crate::maps::{antisymmetric_from_unitary, default_antisymmetric_unitary, unit_phases};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn family(n: usize, k: usize, z: PairTable<C64>) -> (MapSpec, Witness) {
        let spec = MapSpec::NewFamily { n, k, z, u: default_antisymmetric_unitary(2 * k).unwrap() };
        let w = build(&spec).unwrap().choi().unwrap();
        (spec, w)
    }

    #[test]
    fn reduction_two_expectations() {
        let w = build(&MapSpec::Reduction { n: 2 }).unwrap().choi().unwrap();
        let (e0, e1) = (basis_vector(2, 0), basis_vector(2, 1));
        assert!((w.expectation_product(&e0, &e1).unwrap() - 0.5).abs() < 1e-15);
        assert!(w.expectation_product(&e0, &e0).unwrap().abs() < 1e-15);
        assert!(w.expectation_product(&e0, &e0[..1]).is_err());
    }

    #[test]
    fn psd_operator_has_nonnegative_products() {
        let w = Witness::new(ComplexMatrix::identity(4), BipartiteDims::new(2, 2), None).unwrap();
        for s in 0..20 {
            let a = crate::linalg::random_unit_vector(2, s);
            let b = crate::linalg::random_unit_vector(2, s + 100);
            assert!(w.expectation_product(&a, &b).unwrap() >= -1e-10);
        }
        assert!(!w.is_non_psd(&tol()).unwrap());
    }

    #[test]
    fn detector_at_two_one() {
        let (spec, w) = family(2, 1, unit_phases(2));
        let rho = build_ppt_detector(&spec, &w, StripeRule::Block).unwrap();
        assert!((rho.unnormalized_trace - 3.0).abs() < 1e-12);
        let v = rho.verify(&tol()).unwrap();
        assert!(v.all_ok(), "{v:?}");
        let det = detection_value(&w, &rho).unwrap();
        assert!((det.value + 1.0 / 48.0).abs() < 1e-12, "{}", det.value);
        assert!(det.near_diagonal.abs() < 1e-12);
    }

    #[test]
    fn detector_zero_blocks_at_three_one() {
        let (spec, w) = family(3, 1, unit_phases(3));
        let rho = build_ppt_detector(&spec, &w, StripeRule::Block).unwrap();
        let d: usize = 6;
        for i in 0..d {
            for j in 0..d {
                if i.abs_diff(j) == 1 && i / 2 == j / 2 {
                    assert_eq!(rho.kind(i, j), BlockKind::Zero);
                    assert_eq!(rho.rho.block(i * d, j * d, d, d), ComplexMatrix::zeros(d, d));
                }
            }
        }
        let det = detection_value(&w, &rho).unwrap();
        assert!((det.value - expected_detection_value(3, 1)).abs() < 1e-12);
        assert!((expected_detection_value(3, 1) + 1.0 / 144.0).abs() < 1e-18);
    }

    #[test]
    fn partial_sums_in_natural_units() {
        // units of 1/((2K+1)(2K)^3 N(N-1)): diagonal 2K, stripe -2, residual -(2K-1)
        for (n, k) in [(2, 1), (3, 1), (2, 2), (3, 2)] {
            let (spec, w) = family(n, k, unit_phases(n));
            let rho = build_ppt_detector(&spec, &w, StripeRule::Block).unwrap();
            let det = detection_value(&w, &rho).unwrap();
            let unit = -expected_detection_value(n, k);
            let t = 2.0 * k as f64;
            assert!((det.diagonal / unit - t).abs() < 1e-9);
            assert!((det.stripe / unit + 2.0).abs() < 1e-9);
            assert!((det.residual / unit + (t - 1.0)).abs() < 1e-9);
            assert!((det.stripe_with_diagonal() / unit - 2.0 * (k as f64 - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn literal_rule_misses_the_constant() {
        let (spec, w) = family(2, 2, unit_phases(2));
        let rho = build_ppt_detector(&spec, &w, StripeRule::Literal).unwrap();
        let det = detection_value(&w, &rho).unwrap();
        assert!((det.value - expected_detection_value(2, 2)).abs() > 1e-6);
    }

    #[test]
    fn detector_rejects_other_families() {
        let spec = MapSpec::Robertson;
        let w = build(&spec).unwrap().choi().unwrap();
        assert!(build_ppt_detector(&spec, &w, StripeRule::Block).is_err());
    }

    #[test]
    fn convention_is_plain() {
        assert_eq!(detected_convention(), LeftConvention::Plain);
    }

    #[test]
    fn zero_set_for_robertson() {
        let (spec, w) = family(2, 1, unit_phases(2));
        let r = optimality_zero_set(&spec, &w, &tol()).unwrap();
        assert_eq!(r.span.size, 16);
        assert!(r.span.ok(), "{:?}", r.span);
        // d + 2 * d(d-1)/2 = d^2
        for d in 1..40 {
            assert_eq!(d + 2 * (d * (d - 1) / 2), d * d);
        }
    }

    #[test]
    fn zero_set_with_twisted_phase() {
        let z = PairTable::filled(2, C64::from_polar(1.0, std::f64::consts::FRAC_PI_3));
        let (spec, w) = family(2, 1, z);
        let r = optimality_zero_set(&spec, &w, &tol()).unwrap();
        assert!(r.span.ok(), "{:?}", r.span);
        assert!((r.set.phases.get(0, 1) - std::f64::consts::FRAC_PI_3).abs() < 1e-15);
    }

    #[test]
    fn sub_unit_phase_is_rejected() {
        let (spec, w) = family(2, 1, PairTable::filled(2, C64::new(0.9, 0.0)));
        match optimality_zero_set(&spec, &w, &tol()) {
            Err(Error::NonUnitPhases { pairs }) => assert_eq!(pairs, vec![(1, 2)]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_set_is_invariant_under_global_phase() {
        let mut rng = rng_from_seed(3);
        let z = PairTable::from_fn(3, |_, _| random_phase_with(&mut rng));
        let g = random_phase_with(&mut rng);
        for zz in [z.clone(), z.map(|_, _, v| v * g)] {
            let (spec, w) = family(3, 1, zz);
            assert!(optimality_zero_set(&spec, &w, &tol()).unwrap().span.ok());
        }
    }

    #[test]
    fn nd_optimality_sigma_y_and_j() {
        for (n, k, u) in [(2, 1, sigma_y()), (2, 2, default_antisymmetric_unitary(4).unwrap())] {
            let spec = MapSpec::NewFamily { n, k, z: unit_phases(n), u };
            let w = build(&spec).unwrap().choi().unwrap();
            let r = nd_optimality_check(&spec, &w).unwrap();
            assert!(r.covariance_residual <= 1e-12);
            assert!(r.direct_residual <= 1e-12);
            assert!(r.ok(1e-12), "{r:?}");
        }
    }

    #[test]
    fn nd_optimality_with_complex_phases() {
        let mut rng = rng_from_seed(8);
        let z = PairTable::from_fn(3, |_, _| random_phase_with(&mut rng));
        let w0 = haar_unitary_with(&mut rng, 2);
        let spec = MapSpec::NewFamily { n: 3, k: 1, z, u: antisymmetric_from_unitary(&w0, 2).unwrap() };
        let w = build(&spec).unwrap().choi().unwrap();
        let r = nd_optimality_check(&spec, &w).unwrap();
        assert!(r.ok(1e-12), "{r:?}");
        // the covariance maps W(z) onto the transpose of W(conj z), not of W(z)
        assert!(r.direct_residual > 1e-3);
    }

    #[test]
    fn conjugation_identity() {
        assert_eq!(antisymmetric_conjugation_identity(&sigma_y()).unwrap(), 0.0);
        assert!(antisymmetric_conjugation_identity(&default_antisymmetric_unitary(4).unwrap()).unwrap() <= 1e-15);
        // symmetric unitaries satisfy it as well: U^T = U gives conj(U) = U^+
        let mut rng = rng_from_seed(10);
        let w = haar_unitary_with(&mut rng, 4);
        let sym = &w * &w.transpose();
        assert!(antisymmetric_conjugation_identity(&sym).unwrap() < 1e-12);
        // a generic unitary does not
        assert!(antisymmetric_conjugation_identity(&w).unwrap() > 1e-2);
    }

    #[test]
    fn witness_partial_transpose_is_involution() {
        let (_, w) = family(2, 1, unit_phases(2));
        let back = w.partial_transpose().unwrap().partial_transpose().unwrap();
        assert_eq!(back.matrix(), w.matrix());
    }
}
