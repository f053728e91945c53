//! Executes a resolved configuration and assembles the report.

use posmap::blockcert::recipes::{random_instance, PhaseMode};
use posmap::blockcert::{check_conditions, inductive_certify, BlockSpec, ViolationSite};
use posmap::linalg::{derive_seed, is_psd, min_eigenvalue, rng_from_seed, Tolerance};
use posmap::maps::{build, positivity_scan, LinearMap, MapSpec};
use posmap::witness::{
    build_ppt_detector, detected_convention, detection_value, expected_detection_value, nd_optimality_check,
    optimality_zero_set, LeftConvention, StripeRule, Witness,
};
use posmap::Error;
use serde_json::{json, Map, Value};

use crate::config::{CommandKind, RunConfig, MAX_SQUARED_DIM};
use crate::CliError;

/// Report plus the names of failed checks.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Value,
    pub failed: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.failed.is_empty()
    }
}

/// Named pass/fail results in insertion order.
#[derive(Debug, Default)]
struct Checks(Vec<(String, bool)>);

impl Checks {
    fn add(&mut self, name: &str, ok: bool) {
        self.0.push((name.to_string(), ok));
    }

    fn failed(&self) -> Vec<String> {
        self.0.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.clone()).collect()
    }

    fn to_value(&self) -> Value {
        Value::Object(self.0.iter().map(|(n, ok)| (n.clone(), Value::Bool(*ok))).collect())
    }
}

fn convention_name(c: LeftConvention) -> &'static str {
    match c {
        LeftConvention::Plain => "plain",
        LeftConvention::Conjugated => "conjugated",
    }
}

fn stripe_rule_name(r: StripeRule) -> &'static str {
    match r {
        StripeRule::Block => "block",
        StripeRule::Literal => "literal",
    }
}

/// Conventions the numbers in a report depend on.
fn decisions(cfg: &RunConfig) -> Value {
    json!({
        "choi_normalization": "(1/d) sum_ij e_ij (x) L(e_ij)",
        "detector_blocks": "1/d-inclusive Choi blocks",
        "detector_normalization": "1/(2K+1)",
        "stripe_rule": stripe_rule_name(cfg.stripe_rule),
        "left_factor_convention": convention_name(detected_convention()),
        "zero_set_diagonal_range": "k = 1..d",
        "phase_indexing": "block pairs 1 <= i < j <= N",
        "condition2": "M_ii <= alpha_i 1",
        "nd_covariance_target": "W(conj z)^Gamma",
        "gamma_zero_set": "psi (x) V phi over the zero set of W(conj z)",
    })
}

fn site_value(site: &Option<ViolationSite>) -> Value {
    match site {
        Some(s) => json!({
            "condition": s.condition.name(),
            "triple": [s.triple.0 + 1, s.triple.1 + 1, s.triple.2 + 1],
        }),
        None => Value::Null,
    }
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let squared = cfg.squared_dim();
    if squared > MAX_SQUARED_DIM && !cfg.allow_large {
        return Err(CliError::Usage(format!("d^2 = {squared} exceeds {MAX_SQUARED_DIM}; pass --allow-large to proceed")));
    }
    let tol = cfg.tolerances;
    let mut checks = Checks::default();
    let mut body = Map::new();

    if cfg.command == CommandKind::CertifyBlock {
        let spec = match &cfg.block_spec {
            Some(s) => s.clone(),
            None => {
                let (n, k) = cfg.block_shape.expect("resolved with a shape");
                let mut rng = rng_from_seed(cfg.seed);
                random_instance(&mut rng, n, k, PhaseMode::UnitCircle, &tol)?
            }
        };
        body.insert("certify".into(), certify_section(&spec, &tol, &mut checks)?);
        body.insert("block_spec".into(), serde_json::to_value(&spec).map_err(|e| CliError::Io(e.to_string()))?);
    } else {
        let spec = cfg.map_spec.clone().expect("resolved with a map");
        let map = build(&spec)?;
        let new_family = matches!(spec, MapSpec::NewFamily { .. });
        body.insert("map".into(), serde_json::to_value(&spec).map_err(|e| CliError::Io(e.to_string()))?);
        body.insert("d".into(), json!(spec.dim()));
        let needs_witness = !matches!(cfg.command, CommandKind::CheckPositive);
        let witness = if needs_witness { Some(map.choi()?) } else { None };
        match cfg.command {
            CommandKind::Build => {
                let w = witness.as_ref().expect("built");
                body.insert("build".into(), build_section(&map, w, &tol, &mut checks)?);
            }
            CommandKind::CheckPositive => {
                body.insert("positivity_scan".into(), scan_section(&map, cfg, &mut checks)?);
            }
            CommandKind::Witness => {
                let w = witness.as_ref().expect("built");
                body.insert("witness".into(), witness_section(&map, w, cfg, &mut checks)?);
            }
            CommandKind::Detect => {
                let w = witness.as_ref().expect("built");
                body.insert("detect".into(), detect_section(&spec, w, cfg, &mut checks)?);
            }
            CommandKind::Optimality => {
                let w = witness.as_ref().expect("built");
                body.insert("optimality".into(), optimality_section(&spec, w, &tol, &mut checks)?);
            }
            CommandKind::NdOptimality => {
                let w = witness.as_ref().expect("built");
                body.insert("nd_optimality".into(), nd_section(&spec, w, &tol, &mut checks)?);
            }
            CommandKind::FullReport => {
                let w = witness.as_ref().expect("built");
                body.insert("build".into(), build_section(&map, w, &tol, &mut checks)?);
                body.insert("positivity_scan".into(), scan_section(&map, cfg, &mut checks)?);
                body.insert("witness".into(), witness_section(&map, w, cfg, &mut checks)?);
                if new_family {
                    body.insert("detect".into(), detect_section(&spec, w, cfg, &mut checks)?);
                    body.insert("optimality".into(), optimality_section(&spec, w, &tol, &mut checks)?);
                    body.insert("nd_optimality".into(), nd_section(&spec, w, &tol, &mut checks)?);
                }
            }
            CommandKind::CertifyBlock => unreachable!("handled above"),
        }
    }

    let failed = checks.failed();
    body.insert("command".into(), json!(cfg.command.name()));
    body.insert("seed".into(), json!(cfg.seed));
    body.insert("trials".into(), json!(cfg.trials));
    body.insert("tolerances".into(), json!({ "psd_slack": tol.psd_slack, "eq_atol": tol.eq_atol }));
    body.insert("decisions".into(), decisions(cfg));
    body.insert("checks".into(), checks.to_value());
    body.insert("failed".into(), json!(failed));
    body.insert("passed".into(), json!(failed.is_empty()));
    body.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    if cfg.timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        body.insert("generated_at_unix".into(), json!(secs));
    }
    Ok(Outcome { report: Value::Object(body), failed })
}

fn certify_section(spec: &BlockSpec, tol: &Tolerance, checks: &mut Checks) -> Result<Value, CliError> {
    let report = check_conditions(spec, tol)?;
    checks.add("def", report.def_ok);
    checks.add("cond1", report.cond1_ok);
    checks.add("cond2", report.cond2_ok);
    let assembled_min = min_eigenvalue(&spec.assemble(), tol)?;
    let mut out = json!({
        "n": spec.n(),
        "k": spec.k(),
        "conditions": {
            "def_ok": report.def_ok,
            "cond1_ok": report.cond1_ok,
            "cond2_ok": report.cond2_ok,
            "def_violation": report.def_violation,
            "cond1_violation": report.cond1_violation,
            "cond2_violation": report.cond2_violation,
            "max_violation": report.max_violation,
            "witness_triple": site_value(&report.worst),
        },
        "assembled_min_eigenvalue": assembled_min,
        "assembled_psd": is_psd(&spec.assemble(), tol)?,
    });
    match inductive_certify(spec, tol)? {
        Ok(cert) => {
            checks.add("induction", true);
            let steps: Vec<Value> = cert
                .steps
                .iter()
                .map(|s| {
                    json!({
                        "level": s.level,
                        "alpha_last": s.alpha_last,
                        "max_abs_z_prime": s.max_abs_z_prime,
                        "z_ok": s.z_ok,
                        "conditions_ok": s.conditions.all_ok(),
                        "max_condition_violation": s.conditions.max_violation,
                        "min_b_margin": s.min_b_margin,
                        "b_ok": s.b_ok,
                        "schur_residual": s.schur_residual,
                    })
                })
                .collect();
            out["induction"] = json!({
                "certified": true,
                "chain_length": cert.chain.len(),
                "steps": steps,
                "reorderings": cert.reorderings,
            });
        }
        Err(f) => {
            checks.add("induction", false);
            out["induction"] = json!({
                "certified": false,
                "failure": {
                    "step": f.step,
                    "level": f.level,
                    "kind": f.failure,
                    "value": f.value,
                    "site": site_value(&f.site),
                },
            });
        }
    }
    Ok(out)
}

fn build_section(map: &LinearMap, w: &Witness, tol: &Tolerance, checks: &mut Checks) -> Result<Value, CliError> {
    let defect = map.hermiticity_defect();
    checks.add("hermiticity_preserving", defect <= tol.eq_atol);
    Ok(json!({
        "d_in": map.d_in(),
        "d_out": map.d_out(),
        "hermiticity_defect": defect,
        "choi_trace": w.matrix().trace().re,
        "choi_min_eigenvalue": w.min_eigenvalue(tol)?,
        "choi": w.matrix(),
    }))
}

fn scan_section(map: &LinearMap, cfg: &RunConfig, checks: &mut Checks) -> Result<Value, CliError> {
    let r = positivity_scan(map, cfg.trials, cfg.seed)?;
    let ok = r.min_value >= -cfg.tolerances.psd_slack;
    checks.add("positivity_scan", ok);
    Ok(json!({
        "min_value": r.min_value,
        "best_trial": r.best_trial,
        "trials": r.trials,
        "seed": r.seed,
        "argmin": r.argmin,
        "output_vector": r.output_vector,
    }))
}

fn witness_section(map: &LinearMap, w: &Witness, cfg: &RunConfig, checks: &mut Checks) -> Result<Value, CliError> {
    let tol = &cfg.tolerances;
    let lo = w.min_eigenvalue(tol)?;
    // <x (x) y|W|x (x) y> = (1/d) <y|L(|x*><x*|)|y>, so the scan bounds products
    let scan = positivity_scan(map, cfg.trials, derive_seed(cfg.seed, 0x77))?;
    let product_min = scan.min_value / map.d_in() as f64;
    checks.add("witness_non_psd", lo < -tol.psd_slack);
    checks.add("block_positive", product_min >= -tol.psd_slack);
    Ok(json!({
        "min_eigenvalue": lo,
        "min_product_expectation": product_min,
        "product_search_trials": scan.trials,
    }))
}

fn detect_section(spec: &MapSpec, w: &Witness, cfg: &RunConfig, checks: &mut Checks) -> Result<Value, CliError> {
    let tol = &cfg.tolerances;
    let (n, k) = match spec {
        MapSpec::NewFamily { n, k, .. } => (*n, *k),
        other => return Err(CliError::Usage(format!("detect needs --family new, got {}", other.family()))),
    };
    let rho = build_ppt_detector(spec, w, cfg.stripe_rule)?;
    let verdict = rho.verify(tol)?;
    let det = detection_value(w, &rho)?;
    let unit = spec.phases().is_some_and(|z| z.iter().all(|(_, _, v)| (v.norm() - 1.0).abs() <= tol.eq_atol));
    let expected = expected_detection_value(n, k);
    checks.add("trace", verdict.trace_ok);
    checks.add("rho_psd", verdict.psd_ok);
    checks.add("ppt", verdict.ppt_ok);
    checks.add("detection_negative", det.value < 0.0);
    checks.add("near_diagonal_zero", det.near_diagonal.abs() <= 1e-12);
    if unit {
        checks.add("detection_constant", (det.value - expected).abs() <= tol.eq_atol);
    }
    Ok(json!({
        "detection_value": det.value,
        "expected_value": if unit { json!(expected) } else { Value::Null },
        "partial_sums": {
            "diagonal": det.diagonal,
            "stripe": det.stripe,
            "stripe_with_diagonal": det.stripe_with_diagonal(),
            "near_diagonal": det.near_diagonal,
            "residual": det.residual,
        },
        "trace": verdict.trace,
        "rho_min_eigenvalue": verdict.rho_min_eigenvalue,
        "pt_min_eigenvalue": verdict.pt_min_eigenvalue,
        "ppt_ok": verdict.ppt_ok && verdict.psd_ok,
        "normalization": rho.normalization,
        "unnormalized_trace": rho.unnormalized_trace,
        "stripe_rule": stripe_rule_name(rho.rule),
    }))
}

fn optimality_section(spec: &MapSpec, w: &Witness, tol: &Tolerance, checks: &mut Checks) -> Result<Value, CliError> {
    match optimality_zero_set(spec, w, tol) {
        Ok(r) => {
            checks.add("unit_phases", true);
            checks.add("zero_expectations", r.span.zeros_ok);
            checks.add("spanning", r.span.spanning_ok);
            Ok(json!({
                "optimal": r.span.ok(),
                "size": r.span.size,
                "expected_size": r.span.expected_size,
                "max_abs_expectation": r.span.max_abs_expectation,
                "min_singular_value": r.span.min_singular_value,
                "rank": r.span.rank,
                "convention": convention_name(r.set.convention),
            }))
        }
        Err(Error::NonUnitPhases { pairs }) => {
            checks.add("unit_phases", false);
            Ok(json!({
                "optimal": false,
                "reason": "optimality requires |z_ij| = 1",
                "non_unit_pairs": pairs,
            }))
        }
        Err(e) => Err(e.into()),
    }
}

fn nd_section(spec: &MapSpec, w: &Witness, tol: &Tolerance, checks: &mut Checks) -> Result<Value, CliError> {
    let r = nd_optimality_check(spec, w)?;
    checks.add("covariance", r.covariance_residual <= 1e-12);
    checks.add("gamma_zero_expectations", r.gamma_zero_set_ok);
    checks.add("gamma_spanning", r.gamma_spanning_ok);
    let _ = tol;
    Ok(json!({
        "covariance_residual": r.covariance_residual,
        "direct_residual": r.direct_residual,
        "gamma_zero_set_ok": r.gamma_zero_set_ok,
        "gamma_spanning_ok": r.gamma_spanning_ok,
        "gamma_max_abs_expectation": r.gamma.max_abs_expectation,
        "gamma_min_singular_value": r.gamma.min_singular_value,
        "gamma_rank": r.gamma.rank,
    }))
}
