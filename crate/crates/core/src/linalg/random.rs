//! Seeded random vectors and unitaries. Everything derives from an explicit
//! 64-bit seed through ChaCha8, so outputs are reproducible on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::matrix::{inner, norm, ComplexMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; used to derive independent per-trial seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Uniformly distributed unit vector in `C^d` (normalized complex Gaussian).
pub fn random_unit_vector_with<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<C64> {
    assert!(d >= 1, "dimension must be positive");
    loop {
        let v: Vec<C64> = (0..d).map(|_| gaussian_complex(rng)).collect();
        let n = norm(&v);
        if n > 1e-300 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

pub fn random_unit_vector(d: usize, seed: u64) -> Vec<C64> {
    random_unit_vector_with(&mut rng_from_seed(seed), d)
}

/// Haar-distributed unitary: Gram-Schmidt (applied twice) on a Ginibre
/// matrix, which equals the phase-corrected QR factor.
pub fn haar_unitary_with<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    assert!(d >= 1, "dimension must be positive");
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v: Vec<C64> = (0..d).map(|_| gaussian_complex(rng)).collect();
        for _ in 0..2 {
            for q in &cols {
                let proj = inner(q, &v);
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    ComplexMatrix::from_fn(d, d, |r, c| cols[c][r])
}

pub fn haar_unitary(d: usize, seed: u64) -> ComplexMatrix {
    haar_unitary_with(&mut rng_from_seed(seed), d)
}

/// Random Hermitian matrix with i.i.d. complex Gaussian off-diagonal entries.
pub fn random_hermitian_with<R: Rng + ?Sized>(rng: &mut R, d: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| gaussian_complex(rng));
    g.hermitian_part()
}

/// Random complex matrix with standard complex Gaussian entries.
pub fn ginibre_with<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_complex(rng))
}

/// Uniform point on the unit circle.
pub fn random_phase_with<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU))
}

/// Random `(A, X, B)` with `A` `n x n`, `B` `k x k` PSD, for testing block
/// positivity. The block matrix starts as a Gram matrix `Z Z^+` of random
/// rank (so `B` is often singular); `kind` then selects
/// 0: unchanged (PSD), 1: `A` shifted down by `t |v><v|` with `t` in
/// `[0.05, 2)`, 2: `X` perturbed by a random matrix (leaves `range(B)` when
/// `B` is singular).
pub fn random_schur_instance<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, kind: u8) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let m = rng.random_range(1..=n + k);
    let z = ComplexMatrix::from_fn(n + k, m, |_, _| gaussian_complex(rng));
    let gram = &z * &z.dagger();
    let mut a = gram.block(0, 0, n, n);
    let mut x = gram.block(0, n, n, k);
    let b = gram.block(n, n, k, k);
    match kind {
        1 => {
            let v = random_unit_vector_with(rng, n);
            let t = rng.random_range(0.05..2.0);
            a = &a - &ComplexMatrix::outer(&v, &v).scale_real(t);
        }
        2 => {
            let e = ComplexMatrix::from_fn(n, k, |_, _| gaussian_complex(rng));
            x = &x + &e;
        }
        _ => {}
    }
    (a.hermitian_part(), x, b.hermitian_part())
}
