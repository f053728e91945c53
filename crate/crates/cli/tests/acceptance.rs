//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::Command;
use std::time::Instant;

use posmap::blockcert::inductive_certify;
use posmap::blockcert::recipes::{random_instance, PhaseMode};
use posmap::linalg::{
    assemble_2x2, derive_seed, haar_unitary_with, is_psd, random_phase_with, random_schur_instance, rng_from_seed,
    schur_positivity, Tolerance, C64,
};
use posmap::maps::{antisymmetric_from_unitary, build, default_antisymmetric_unitary, positivity_scan, MapSpec};
use posmap::pairs::PairTable;
use posmap::witness::{
    build_ppt_detector, detection_value, expected_detection_value, nd_optimality_check, optimality_zero_set, StripeRule,
};
use rand::Rng;

const GRID: [(usize, usize); 3] = [(2, 1), (3, 1), (2, 2)];
const NEW_FAMILY_SHAPES: [(usize, usize); 4] = [(2, 1), (3, 1), (2, 2), (3, 2)];

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    ok: bool,
    detail: String,
}

impl Verdict {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Self { ok, detail: detail.into() }
    }
}

fn tol() -> Tolerance {
    Tolerance::default()
}

fn unit_z(n: usize, seed: u64) -> PairTable<C64> {
    let mut rng = rng_from_seed(seed);
    PairTable::from_fn(n, |_, _| random_phase_with(&mut rng))
}

fn disk_z(n: usize, seed: u64) -> PairTable<C64> {
    let mut rng = rng_from_seed(seed);
    PairTable::from_fn(n, |_, _| {
        let r: f64 = rng.random_range(0.05..0.95);
        random_phase_with(&mut rng) * r
    })
}

fn new_family(n: usize, k: usize, z: PairTable<C64>) -> MapSpec {
    MapSpec::NewFamily { n, k, z, u: default_antisymmetric_unitary(2 * k).unwrap() }
}

fn soundness() -> Verdict {
    const SHAPES: [(usize, usize); 8] = [(1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2), (4, 1), (4, 2)];
    let tol = tol();
    let mut rng = rng_from_seed(1);
    let mut bad = Vec::new();
    let total = 1_000;
    for t in 0..total {
        let (n, k) = SHAPES[t % SHAPES.len()];
        let mode = [PhaseMode::Ones, PhaseMode::UnitCircle, PhaseMode::Disk][t % 3];
        let spec = random_instance(&mut rng, n, k, mode, &tol).unwrap();
        let psd = is_psd(&spec.assemble(), &tol).unwrap();
        let certified = match inductive_certify(&spec, &tol).unwrap() {
            Ok(c) => c.chain.len() == n && c.steps.iter().all(|s| s.z_ok && s.b_ok && s.conditions.all_ok()),
            Err(_) => false,
        };
        if !(psd && certified) {
            bad.push(t);
        }
    }
    Verdict::new(bad.is_empty(), format!("{}/{total} instances PSD and certified; failures at {bad:?}", total - bad.len()))
}

fn positivity() -> Verdict {
    let mut specs: Vec<MapSpec> = Vec::new();
    for n in 2..=6 {
        specs.push(MapSpec::Reduction { n });
        specs.push(MapSpec::GeneralizedReduction { n, z: unit_z(n, 10 + n as u64) });
        specs.push(MapSpec::GeneralizedReduction { n, z: disk_z(n, 20 + n as u64) });
    }
    specs.push(MapSpec::Robertson);
    let mut rng = rng_from_seed(3);
    for k in 1..=2 {
        specs.push(MapSpec::GeneralizedRobertson { k, u: default_antisymmetric_unitary(2 * k).unwrap() });
        let u = antisymmetric_from_unitary(&haar_unitary_with(&mut rng, 2 * k), 2 * k).unwrap();
        specs.push(MapSpec::GeneralizedRobertson { k, u });
    }
    for n in 2..=3 {
        specs.push(MapSpec::ComplexRobertsonExtension { n, z: unit_z(n, 30 + n as u64) });
        specs.push(MapSpec::ComplexRobertsonExtension { n, z: disk_z(n, 40 + n as u64) });
    }
    for (i, &(n, k)) in NEW_FAMILY_SHAPES.iter().enumerate() {
        specs.push(new_family(n, k, unit_z(n, 50 + i as u64)));
        specs.push(new_family(n, k, disk_z(n, 60 + i as u64)));
    }
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let map = build(spec).unwrap();
        let r = positivity_scan(&map, 500, derive_seed(42, i as u64)).unwrap();
        worst = worst.min(r.min_value);
        if r.min_value < -1e-9 {
            failures.push(format!("{} d={} min={:e}", spec.family(), spec.dim(), r.min_value));
        }
    }
    Verdict::new(failures.is_empty(), format!("{} maps x 500 trials, worst min {worst:e}; {failures:?}", specs.len()))
}

fn non_positivity() -> Verdict {
    let tol = tol();
    let mut notes = Vec::new();
    let mut ok = true;
    for n in 2..=6 {
        let lo = build(&MapSpec::Reduction { n }).unwrap().choi().unwrap().min_eigenvalue(&tol).unwrap();
        let hit = (lo + 1.0 / n as f64).abs() <= 1e-9;
        ok &= hit;
        if !hit {
            notes.push(format!("reduction N={n}: {lo} vs {}", -1.0 / n as f64));
        }
    }
    let mut new_max = f64::NEG_INFINITY;
    for (i, &(n, k)) in NEW_FAMILY_SHAPES.iter().enumerate() {
        for z in [PairTable::filled(n, C64::new(1.0, 0.0)), unit_z(n, 50 + i as u64), disk_z(n, 60 + i as u64)] {
            let lo = build(&new_family(n, k, z)).unwrap().choi().unwrap().min_eigenvalue(&tol).unwrap();
            new_max = new_max.max(lo);
            if lo >= -1e-3 {
                ok = false;
                notes.push(format!("new ({n},{k}): {lo}"));
            }
        }
    }
    Verdict::new(ok, format!("reduction Choi = -1/N for N=2..6; largest new-family Choi minimum {new_max:e}; {notes:?}"))
}

fn indecomposability() -> Verdict {
    let tol = Tolerance::new(1e-9, 1e-10).unwrap();
    let mut ok = true;
    let mut notes = Vec::new();
    for &(n, k) in &GRID {
        let spec = new_family(n, k, PairTable::filled(n, C64::new(1.0, 0.0)));
        let w = build(&spec).unwrap().choi().unwrap();
        let rho = build_ppt_detector(&spec, &w, StripeRule::Block).unwrap();
        let v = rho.verify(&tol).unwrap();
        let det = detection_value(&w, &rho).unwrap();
        let expected = expected_detection_value(n, k);
        let constant = (det.value - expected).abs() <= 1e-10;
        let near = det.near_diagonal.abs() <= 1e-12;
        let state = v.trace_ok && v.psd_ok && v.ppt_ok;
        if !(state && constant && near) {
            ok = false;
        }
        let mut note = format!("({n},{k}) value {:.17e} expected {:.17e}", det.value, expected);
        if !state {
            note.push_str(&format!(" [trace {} rho_min {:e} pt_min {:e}]", v.trace, v.rho_min_eigenvalue, v.pt_min_eigenvalue));
        }
        if !near {
            note.push_str(&format!(" [near-diagonal {:e}]", det.near_diagonal));
        }
        notes.push(note);
    }
    Verdict::new(ok, notes.join("; "))
}

fn optimality() -> Verdict {
    let tol = tol();
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, &(n, k)) in GRID.iter().enumerate() {
        let spec = new_family(n, k, unit_z(n, 70 + i as u64));
        let w = build(&spec).unwrap().choi().unwrap();
        let r = optimality_zero_set(&spec, &w, &tol).unwrap().span;
        let d = spec.dim();
        let hit = r.size == d * d && r.max_abs_expectation <= 1e-10 && r.rank == d * d && r.min_singular_value > 1e-8;
        ok &= hit;
        notes.push(format!("({n},{k}) {} vectors, max |<W>| {:e}, sigma_min {:e}", r.size, r.max_abs_expectation, r.min_singular_value));
    }
    Verdict::new(ok, notes.join("; "))
}

fn nd_optimality() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, &(n, k)) in GRID.iter().enumerate() {
        for (label, z) in [("z=1", PairTable::filled(n, C64::new(1.0, 0.0))), ("random z", unit_z(n, 80 + i as u64))] {
            let spec = new_family(n, k, z);
            let w = build(&spec).unwrap().choi().unwrap();
            let r = nd_optimality_check(&spec, &w).unwrap();
            let hit = r.covariance_residual <= 1e-12 && r.gamma_zero_set_ok && r.gamma_spanning_ok;
            ok &= hit;
            notes.push(format!("({n},{k}) {label} residual {:e} sigma_min {:e}", r.covariance_residual, r.gamma.min_singular_value));
        }
    }
    Verdict::new(ok, notes.join("; "))
}

fn oracle_equivalence() -> Verdict {
    let tol = tol();
    let mut rng = rng_from_seed(7);
    let mut disagreements = Vec::new();
    for t in 0..10_000 {
        let n = rng.random_range(1..=4);
        let k = rng.random_range(1..=4);
        let kind = rng.random_range(0..3u8);
        let (a, x, b) = random_schur_instance(&mut rng, n, k, kind);
        let oracle = is_psd(&assemble_2x2(&a, &x, &b).unwrap(), &tol).unwrap();
        if schur_positivity(&a, &x, &b, &tol).unwrap() != oracle {
            disagreements.push(t);
        }
    }
    Verdict::new(disagreements.is_empty(), format!("10000 instances, disagreements {disagreements:?}"))
}

fn determinism() -> Verdict {
    let run = |extra: &[&str]| {
        let mut args = vec!["full-report", "--family", "new", "--N", "3", "--K", "1", "--no-timestamp"];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_posmap")).args(&args).env_remove("POSMAP_SEED").output().expect("binary runs")
    };
    let mut ok = true;
    let mut notes = Vec::new();
    for extra in [&[][..], &["--z-random-phase", "--seed", "9"][..]] {
        let (a, b) = (run(extra), run(extra));
        let same = a.status.code() == Some(0) && b.status.code() == Some(0) && a.stdout == b.stdout && !a.stdout.is_empty();
        ok &= same;
        notes.push(format!("{:?}: {} bytes, identical={}", extra, a.stdout.len(), a.stdout == b.stdout));
    }
    Verdict::new(ok, notes.join("; "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("block-theorem soundness", soundness),
        ("positivity of the six families", positivity),
        ("witness non-positivity", non_positivity),
        ("indecomposability via the PPT detector", indecomposability),
        ("optimality", optimality),
        ("nd-optimality", nd_optimality),
        ("Schur/eigenvalue oracle equivalence", oracle_equivalence),
        ("report determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let mark = if v.ok { "PASS" } else { "FAIL" };
        println!("[{mark}] {}. {name} ({:.1}s): {}", i + 1, start.elapsed().as_secs_f64(), v.detail);
        failed += usize::from(!v.ok);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
