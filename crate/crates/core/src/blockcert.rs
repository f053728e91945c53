//! Block matrices `M_N^K` with diagonal blocks `(1 - a_i) 1_K` and
//! off-diagonal blocks `-z_ij M_ij`, and two certificates for their
//! positivity:
//!
//! * [`check_conditions`] evaluates the algebraic hypotheses
//!   `M_ij M_ij^+ = a_j M_ii`, `M_ij M_kj^+ = a_j M_ik` and `M_ii <= a_i 1`;
//! * [`inductive_certify`] replays the induction on `N`: it removes the last
//!   block row through a Schur complement, renormalizes the weights, and
//!   checks every intermediate inequality down to a single block.

use crate::error::{Error, Result};
use crate::linalg::{max_eigenvalue, min_eigenvalue, ComplexMatrix, Tolerance, C64};
use crate::pairs::PairTable;

/// One instance of the block theorem. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec {
    n: usize,
    k: usize,
    alphas: Vec<f64>,
    z: PairTable<C64>,
    blocks: PairTable<ComplexMatrix>,
    diag_blocks: Vec<ComplexMatrix>,
}

impl BlockSpec {
    /// Validates and stores an instance.
    ///
    /// Rejects weights outside `[0, 1]` or not summing to one, `|z_ij| > 1`,
    /// non-Hermitian or non-PSD `M_ii`, blocks of the wrong size, and nonzero
    /// `M_ij` paired with `a_j = 0` (the defining relation forces it to vanish).
    pub fn new(
        alphas: Vec<f64>,
        z: PairTable<C64>,
        blocks: PairTable<ComplexMatrix>,
        diag_blocks: Vec<ComplexMatrix>,
        tol: &Tolerance,
    ) -> Result<Self> {
        let n = alphas.len();
        let bad = |msg: String| Err(Error::InvalidBlockSpec(msg));
        if n == 0 {
            return bad("at least one block is required".into());
        }
        if z.n() != n || blocks.n() != n || diag_blocks.len() != n {
            return bad(format!(
                "inconsistent block counts: {} weights, z over {}, blocks over {}, {} diagonal blocks",
                n,
                z.n(),
                blocks.n(),
                diag_blocks.len()
            ));
        }
        let k = diag_blocks[0].rows();
        for (i, &a) in alphas.iter().enumerate() {
            if !a.is_finite() || a < -tol.eq_atol || a > 1.0 + tol.eq_atol {
                return bad(format!("alpha_{} = {a} outside [0, 1]", i + 1));
            }
        }
        let sum: f64 = alphas.iter().sum();
        if (sum - 1.0).abs() > tol.eq_atol {
            return bad(format!("weights sum to {sum}, not 1"));
        }
        for (i, j, zij) in z.iter() {
            if zij.norm().is_nan() || zij.norm() > 1.0 + tol.eq_atol {
                return bad(format!("|z_{}{}| = {} exceeds 1", i + 1, j + 1, zij.norm()));
            }
        }
        for (i, m) in diag_blocks.iter().enumerate() {
            if m.rows() != k || m.cols() != k {
                return bad(format!("M_{}{} is {}x{}, expected {k}x{k}", i + 1, i + 1, m.rows(), m.cols()));
            }
            if !m.is_hermitian(tol.eq_atol) {
                return bad(format!("M_{}{} is not Hermitian", i + 1, i + 1));
            }
            let lo = min_eigenvalue(m, tol)?;
            if lo < -tol.psd_slack {
                return bad(format!("M_{}{} has eigenvalue {lo:e} < 0", i + 1, i + 1));
            }
        }
        for (i, j, m) in blocks.iter() {
            if m.rows() != k || m.cols() != k {
                return bad(format!("M_{}{} is {}x{}, expected {k}x{k}", i + 1, j + 1, m.rows(), m.cols()));
            }
            if alphas[j] <= tol.eq_atol && m.max_abs() > tol.eq_atol {
                return bad(format!("alpha_{} = 0 but M_{}{} is nonzero", j + 1, i + 1, j + 1));
            }
        }
        Ok(Self { n, k, alphas, z, blocks, diag_blocks })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn z(&self) -> &PairTable<C64> {
        &self.z
    }

    pub fn blocks(&self) -> &PairTable<ComplexMatrix> {
        &self.blocks
    }

    pub fn diag_blocks(&self) -> &[ComplexMatrix] {
        &self.diag_blocks
    }

    /// `M_ij` for any pair, with `M_ji := M_ij^+` and `M_ii` from the diagonal list.
    pub fn m(&self, i: usize, j: usize) -> ComplexMatrix {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.blocks.get(i, j).clone(),
            std::cmp::Ordering::Greater => self.blocks.get(j, i).dagger(),
            std::cmp::Ordering::Equal => self.diag_blocks[i].clone(),
        }
    }

    /// Relabels blocks so that new block `a` is old block `order[a]`. This is a
    /// permutation similarity of the assembled matrix; for `a < b` with
    /// `order[a] > order[b]` the stored block becomes `M^+` and the phase `conj(z)`.
    pub fn permuted(&self, order: &[usize], tol: &Tolerance) -> Result<BlockSpec> {
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.n).collect::<Vec<_>>() {
            return Err(Error::InvalidBlockSpec(format!("{order:?} is not a permutation of 0..{}", self.n)));
        }
        let phase = |i: usize, j: usize| if i < j { *self.z.get(i, j) } else { self.z.get(j, i).conj() };
        let z = PairTable::from_fn(self.n, |a, b| phase(order[a], order[b]));
        let blocks = PairTable::from_fn(self.n, |a, b| self.m(order[a], order[b]));
        let alphas = order.iter().map(|&i| self.alphas[i]).collect();
        let diag = order.iter().map(|&i| self.diag_blocks[i].clone()).collect();
        BlockSpec::new(alphas, z, blocks, diag, tol)
    }

    /// The `(N K) x (N K)` matrix `M_N^K`.
    pub fn assemble(&self) -> ComplexMatrix {
        let (n, k) = (self.n, self.k);
        let mut out = ComplexMatrix::zeros(n * k, n * k);
        for i in 0..n {
            out.set_block(i * k, i * k, &ComplexMatrix::identity(k).scale_real(1.0 - self.alphas[i]));
        }
        for (i, j, m) in self.blocks.iter() {
            let zij = *self.z.get(i, j);
            out.set_block(i * k, j * k, &m.scale(-zij));
            out.set_block(j * k, i * k, &m.dagger().scale(-zij.conj()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `M_ij M_ij^+ = a_j M_ii`
    Def,
    /// `M_ij M_kj^+ = a_j M_ik`
    Cond1,
    /// `M_ii <= a_i 1`
    Cond2,
}

impl Condition {
    pub fn name(self) -> &'static str {
        match self {
            Condition::Def => "def",
            Condition::Cond1 => "cond1",
            Condition::Cond2 => "cond2",
        }
    }
}

/// Location of a condition violation, as 0-based `(i, j, k)`. For `Def` the
/// triple is `(i, j, i)`, for `Cond2` it is `(i, i, i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ViolationSite {
    pub condition: Condition,
    pub triple: (usize, usize, usize),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConditionReport {
    pub def_ok: bool,
    pub cond1_ok: bool,
    pub cond2_ok: bool,
    pub def_violation: f64,
    pub cond1_violation: f64,
    pub cond2_violation: f64,
    pub max_violation: f64,
    /// Worst site among the failing conditions, or the overall worst site
    /// when everything passes.
    pub worst: Option<ViolationSite>,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.def_ok && self.cond1_ok && self.cond2_ok
    }

    pub fn failed(&self) -> Vec<Condition> {
        let mut out = Vec::new();
        if !self.def_ok {
            out.push(Condition::Def);
        }
        if !self.cond1_ok {
            out.push(Condition::Cond1);
        }
        if !self.cond2_ok {
            out.push(Condition::Cond2);
        }
        out
    }
}

#[derive(Default)]
struct Worst {
    value: f64,
    site: Option<(usize, usize, usize)>,
}

impl Worst {
    fn offer(&mut self, value: f64, site: (usize, usize, usize)) {
        if self.site.is_none() || value > self.value {
            self.value = value;
            self.site = Some(site);
        }
    }
}

/// Evaluates the three hypothesis families over every index pattern.
///
/// Condition 1 runs over ordered triples `(i, k, j)` with `i < j`, `k < j`,
/// `i != k`, using `M_ki = M_ik^+` when `k < i`. Condition 2 is taken as
/// `M_ii <= a_i 1`, the form the induction step relies on.
pub fn check_conditions(spec: &BlockSpec, tol: &Tolerance) -> Result<ConditionReport> {
    let n = spec.n;
    let mut def = Worst::default();
    let mut c1 = Worst::default();
    let mut c2 = Worst::default();

    for (i, j, mij) in spec.blocks.iter() {
        let lhs = mij * &mij.dagger();
        let rhs = spec.diag_blocks[i].scale_real(spec.alphas[j]);
        def.offer(lhs.max_abs_diff(&rhs)?, (i, j, i));
    }
    for j in 0..n {
        for i in 0..j {
            let mij = spec.blocks.get(i, j);
            for k in 0..j {
                if k == i {
                    continue;
                }
                let mkj = spec.blocks.get(k, j);
                let lhs = mij * &mkj.dagger();
                let rhs = spec.m(i, k).scale_real(spec.alphas[j]);
                c1.offer(lhs.max_abs_diff(&rhs)?, (i, j, k));
            }
        }
    }
    for (i, mii) in spec.diag_blocks.iter().enumerate() {
        let top = max_eigenvalue(mii, tol)?;
        c2.offer((top - spec.alphas[i]).max(0.0), (i, i, i));
    }

    let def_ok = def.value <= tol.eq_atol;
    let cond1_ok = c1.value <= tol.eq_atol;
    let cond2_ok = c2.value <= tol.eq_atol;
    let entries = [(Condition::Def, &def, def_ok), (Condition::Cond1, &c1, cond1_ok), (Condition::Cond2, &c2, cond2_ok)];
    let pick = |only_failed: bool| {
        entries
            .iter()
            .filter(|(_, w, ok)| w.site.is_some() && (!only_failed || !ok))
            .max_by(|a, b| a.1.value.total_cmp(&b.1.value))
            .map(|(c, w, _)| ViolationSite { condition: *c, triple: w.site.expect("filtered") })
    };
    let worst = pick(true).or_else(|| pick(false));
    Ok(ConditionReport {
        def_ok,
        cond1_ok,
        cond2_ok,
        def_violation: def.value,
        cond1_violation: c1.value,
        cond2_violation: c2.value,
        max_violation: def.value.max(c1.value).max(c2.value),
        worst,
    })
}

/// Result of eliminating the last block row of an instance.
#[derive(Debug, Clone)]
pub struct Reduction {
    /// Instance on `N - 1` blocks with weights `a_i / (1 - a_N)`, phases
    /// `(1 - a_N) z_ij + a_N z_iN conj(z_jN)` and blocks `M_ij / (1 - a_N)`.
    pub reduced: BlockSpec,
    /// `B_i = (1 - a_i) 1 - |z_iN|^2 a_N M'_ii`.
    pub b_blocks: Vec<ComplexMatrix>,
    /// `z'_ij` before any clamping, for the `|z'| <= 1` check.
    pub z_prime: PairTable<C64>,
}

impl Reduction {
    /// The matrix with diagonal blocks `B_i` and off-diagonal blocks
    /// `-z'_ij M'_ij`; equals the Schur complement of the last block row.
    pub fn beta_matrix(&self) -> ComplexMatrix {
        let r = &self.reduced;
        let k = r.k;
        let mut out = r.assemble();
        for (i, b) in self.b_blocks.iter().enumerate() {
            out.set_block(i * k, i * k, b);
        }
        out
    }
}

/// Eliminates block `N`. Requires `1 - a_N > eq_atol`.
pub fn reduce_last_block(spec: &BlockSpec, tol: &Tolerance) -> Result<Reduction> {
    let n = spec.n;
    if n < 2 {
        return Err(Error::InvalidBlockSpec("nothing to reduce for N = 1".into()));
    }
    let last = n - 1;
    let a_last = spec.alphas[last];
    let rest = 1.0 - a_last;
    if rest <= tol.eq_atol {
        return Err(Error::InvalidBlockSpec(format!("1 - alpha_N = {rest:e} too small to renormalize")));
    }
    let alphas: Vec<f64> = spec.alphas[..last].iter().map(|a| a / rest).collect();
    // sqrt(a'_i a'_j / (a_i a_j)) = 1 / (1 - a_N) whenever both weights are nonzero
    let blocks = PairTable::from_fn(last, |i, j| spec.blocks.get(i, j).scale_real(1.0 / rest));
    let diag: Vec<ComplexMatrix> = spec.diag_blocks[..last].iter().map(|m| m.scale_real(1.0 / rest)).collect();
    let z_prime = PairTable::from_fn(last, |i, j| {
        *spec.z.get(i, j) * rest + *spec.z.get(i, last) * spec.z.get(j, last).conj() * a_last
    });
    let b_blocks = (0..last)
        .map(|i| {
            let zin = spec.z.get(i, last).norm_sqr();
            let id = ComplexMatrix::identity(spec.k).scale_real(1.0 - spec.alphas[i]);
            &id - &diag[i].scale_real(zin * a_last)
        })
        .collect();
    // tiny overshoots of |z'| are reported by the step check, not rejected here
    let z_clamped = z_prime.map(|_, _, &z| if z.norm() > 1.0 { z / z.norm() } else { z });
    let lenient = Tolerance { eq_atol: tol.eq_atol.max(1e-12), ..*tol };
    let reduced = BlockSpec::new(alphas, z_clamped, blocks, diag, &lenient)?;
    Ok(Reduction { reduced, b_blocks, z_prime })
}

/// Facts verified while eliminating one block row.
#[derive(Debug, Clone, serde::Serialize)]
pub struct StepCheck {
    /// Block count before this step.
    pub level: usize,
    pub alpha_last: f64,
    pub max_abs_z_prime: f64,
    pub z_ok: bool,
    /// Hypotheses re-checked on the renormalized instance.
    pub conditions: ConditionReport,
    /// `min_i lambda_min(B_i - (1 - a'_i) 1)`.
    pub min_b_margin: f64,
    pub b_ok: bool,
    /// `|(A - X B^-1 X^+) - M_beta|_max` for the eliminated row.
    pub schur_residual: f64,
}

/// A relabeling applied before eliminating a block whose weight is one.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Reordering {
    pub level: usize,
    /// New block `a` is old block `order[a]` (0-based).
    pub order: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct InductiveCertificate {
    /// Instances visited, from `N` blocks down to one. An entry equals the
    /// previous level's reduction, or the input, up to the recorded reorderings.
    pub chain: Vec<BlockSpec>,
    pub steps: Vec<StepCheck>,
    pub reorderings: Vec<Reordering>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepFailure {
    Conditions(Condition),
    ZBound,
    BBound,
}

/// First failed inequality. `step` 0 is the entry check on the input; step
/// `s >= 1` is the `s`-th block elimination.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CertifyFailure {
    pub step: usize,
    pub level: usize,
    pub failure: StepFailure,
    pub value: f64,
    pub site: Option<ViolationSite>,
}

impl std::fmt::Display for CertifyFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "step {} (N = {}): {:?} violated by {:e}", self.step, self.level, self.failure, self.value)
    }
}

fn condition_failure(step: usize, level: usize, report: &ConditionReport) -> CertifyFailure {
    let site = report.worst;
    let cond = report.failed()[0];
    let value = match cond {
        Condition::Def => report.def_violation,
        Condition::Cond1 => report.cond1_violation,
        Condition::Cond2 => report.cond2_violation,
    };
    CertifyFailure { step, level, failure: StepFailure::Conditions(cond), value, site }
}

/// Replays the induction on `N`, verifying each step, down to one block.
pub fn inductive_certify(spec: &BlockSpec, tol: &Tolerance) -> Result<std::result::Result<InductiveCertificate, CertifyFailure>> {
    let entry = check_conditions(spec, tol)?;
    if !entry.all_ok() {
        return Ok(Err(condition_failure(0, spec.n, &entry)));
    }
    let mut chain = vec![spec.clone()];
    let mut steps = Vec::new();
    let mut reorderings = Vec::new();
    loop {
        let cur = chain.last().expect("non-empty chain");
        if cur.n == 1 {
            return Ok(Ok(InductiveCertificate { chain, steps, reorderings }));
        }
        let step = steps.len() + 1;
        if 1.0 - cur.alphas[cur.n - 1] <= tol.eq_atol {
            // a_N = 1 forces every other weight, and with it every other
            // block, to vanish; bring the weight-one block to the front
            let order: Vec<usize> = std::iter::once(cur.n - 1).chain(0..cur.n - 1).collect();
            let permuted = cur.permuted(&order, tol)?;
            let report = check_conditions(&permuted, tol)?;
            if !report.all_ok() {
                return Ok(Err(condition_failure(step, cur.n, &report)));
            }
            reorderings.push(Reordering { level: cur.n, order });
            *chain.last_mut().expect("non-empty chain") = permuted;
            continue;
        }
        let a_last = cur.alphas[cur.n - 1];
        let red = reduce_last_block(cur, tol)?;
        let max_abs_z_prime = red.z_prime.iter().map(|(_, _, z)| z.norm()).fold(0.0, f64::max);
        let z_ok = max_abs_z_prime <= 1.0 + tol.eq_atol;
        let conditions = check_conditions(&red.reduced, tol)?;
        let mut min_b_margin = f64::INFINITY;
        for (i, b) in red.b_blocks.iter().enumerate() {
            let floor = ComplexMatrix::identity(cur.k).scale_real(1.0 - red.reduced.alphas[i]);
            min_b_margin = min_b_margin.min(min_eigenvalue(&(b - &floor), tol)?);
        }
        let b_ok = min_b_margin >= -tol.psd_slack;
        let schur_residual = schur_step_residual(cur, &red)?;
        let check = StepCheck {
            level: cur.n,
            alpha_last: a_last,
            max_abs_z_prime,
            z_ok,
            conditions: conditions.clone(),
            min_b_margin,
            b_ok,
            schur_residual,
        };
        if !z_ok {
            return Ok(Err(CertifyFailure { step, level: cur.n, failure: StepFailure::ZBound, value: max_abs_z_prime, site: None }));
        }
        if !conditions.all_ok() {
            return Ok(Err(condition_failure(step, cur.n, &conditions)));
        }
        if !b_ok {
            return Ok(Err(CertifyFailure { step, level: cur.n, failure: StepFailure::BBound, value: min_b_margin, site: None }));
        }
        steps.push(check);
        chain.push(red.reduced);
    }
}

/// Distance between the Schur complement of the last block row and the
/// matrix built from `B_i`, `z'_ij`, `M'_ij`.
fn schur_step_residual(spec: &BlockSpec, red: &Reduction) -> Result<f64> {
    let (n, k) = (spec.n, spec.k);
    let last = n - 1;
    let full = spec.assemble();
    let a = full.block(0, 0, last * k, last * k);
    let x = full.block(0, last * k, last * k, k);
    let b_inv = 1.0 / (1.0 - spec.alphas[last]);
    let complement = &a - &(&x * &x.dagger()).scale_real(b_inv);
    complement.max_abs_diff(&red.beta_matrix())
}

/// Generators of instances that satisfy the hypotheses by construction.
pub mod recipes {
    use rand::Rng;

    use super::BlockSpec;
    use crate::error::Result;
    use crate::linalg::{conj_vec, ginibre_with, haar_unitary_with, random_phase_with, random_unit_vector_with, ComplexMatrix, Tolerance, C64};
    use crate::maps::{antisymmetric_from_unitary, default_antisymmetric_unitary};
    use crate::pairs::PairTable;

    /// Rank-one blocks `M_ij = sqrt(a_i a_j) |x_i><x_j|`, `M_ii = a_i |x_i><x_i|`
    /// for unit vectors `x_i`. With `K = 1` these are the generalized
    /// reduction blocks.
    pub fn rank_one(alphas: &[f64], xs: &[Vec<C64>], z: PairTable<C64>, tol: &Tolerance) -> Result<BlockSpec> {
        let n = alphas.len();
        let blocks = PairTable::from_fn(n, |i, j| ComplexMatrix::outer(&xs[i], &xs[j]).scale_real((alphas[i] * alphas[j]).sqrt()));
        let diag = (0..n).map(|i| ComplexMatrix::outer(&xs[i], &xs[i]).scale_real(alphas[i])).collect();
        BlockSpec::new(alphas.to_vec(), z, blocks, diag, tol)
    }

    /// `M_ij = sqrt(a_i a_j) [ |psi_i><psi_j| + U |psi_i*><psi_j*| U^+ ]` with
    /// an antisymmetric unitary `U`; `M_ii` is the `i = j` case.
    pub fn antisymmetric(alphas: &[f64], psis: &[Vec<C64>], u: &ComplexMatrix, z: PairTable<C64>, tol: &Tolerance) -> Result<BlockSpec> {
        let n = alphas.len();
        let term = |i: usize, j: usize| {
            let direct = ComplexMatrix::outer(&psis[i], &psis[j]);
            let twisted = &(u * &ComplexMatrix::outer(&conj_vec(&psis[i]), &conj_vec(&psis[j]))) * &u.dagger();
            (&direct + &twisted).scale_real((alphas[i] * alphas[j]).sqrt())
        };
        let blocks = PairTable::from_fn(n, term);
        let diag = (0..n).map(|i| term(i, i).hermitian_part()).collect();
        BlockSpec::new(alphas.to_vec(), z, blocks, diag, tol)
    }

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum PhaseMode {
        Ones,
        UnitCircle,
        Disk,
    }

    pub fn random_phases<R: Rng + ?Sized>(rng: &mut R, n: usize, mode: PhaseMode) -> PairTable<C64> {
        PairTable::from_fn(n, |_, _| match mode {
            PhaseMode::Ones => C64::new(1.0, 0.0),
            PhaseMode::UnitCircle => random_phase_with(rng),
            PhaseMode::Disk => random_phase_with(rng) * rng.random_range(0.0..1.0f64).sqrt(),
        })
    }

    /// Random weights on the simplex; with probability 1/5 one weight is
    /// forced to zero to exercise degenerate instances.
    pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
        let mut w: Vec<f64> = (0..n).map(|_| -rng.random_range(1e-12..1.0f64).ln()).collect();
        if n > 1 && rng.random_range(0..5) == 0 {
            let idx = rng.random_range(0..n);
            w[idx] = 0.0;
        }
        let s: f64 = w.iter().sum();
        w.iter().map(|x| x / s).collect()
    }

    /// Random instance: antisymmetric recipe (random antisymmetric unitary)
    /// for even `K` half of the time, rank-one recipe otherwise.
    pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, mode: PhaseMode, tol: &Tolerance) -> Result<BlockSpec> {
        let alphas = random_weights(rng, n);
        let z = random_phases(rng, n, mode);
        let vecs: Vec<Vec<C64>> = (0..n).map(|_| random_unit_vector_with(rng, k)).collect();
        if k.is_multiple_of(2) && rng.random_range(0..2) == 0 {
            let u = if rng.random_range(0..3) == 0 {
                default_antisymmetric_unitary(k)?
            } else {
                let w = haar_unitary_with(rng, k);
                antisymmetric_from_unitary(&w, k)?
            };
            antisymmetric(&alphas, &vecs, &u, z, tol)
        } else {
            rank_one(&alphas, &vecs, z, tol)
        }
    }

    /// A hermitian PSD block with top eigenvalue above `bound`; used to
    /// produce instances that violate condition 2.
    pub fn oversized_diag<R: Rng + ?Sized>(rng: &mut R, k: usize, bound: f64) -> ComplexMatrix {
        let g = ginibre_with(rng, k, k);
        let p = &g * &g.dagger();
        let top = p.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-3);
        p.scale_real((bound + 0.5) * 4.0 / top)
    }
}
