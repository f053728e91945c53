//! Browser bindings: each entry point takes plain numbers and returns a JSON
//! string, so the page needs no glue beyond `JSON.parse`.

use posmap::blockcert::recipes::{random_instance, PhaseMode};
use posmap::blockcert::{check_conditions, inductive_certify};
use posmap::linalg::{hermitian_eigenvalues, rng_from_seed, Tolerance, C64};
use posmap::maps::{build, default_antisymmetric_unitary, MapSpec};
use posmap::pairs::PairTable;
use posmap::witness::{build_ppt_detector, detection_value, expected_detection_value, StripeRule};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Keeps the page responsive: the Choi matrix is d^2 x d^2.
const MAX_DIM: usize = 8;

fn map_spec(family: &str, n: usize, k: usize, z: C64) -> Result<MapSpec, String> {
    let phases = |n: usize| PairTable::filled(n, z);
    let unitary = |k: usize| default_antisymmetric_unitary(2 * k).map_err(|e| e.to_string());
    let spec = match family {
        "reduction" => MapSpec::Reduction { n },
        "generalized-reduction" => MapSpec::GeneralizedReduction { n, z: phases(n) },
        "robertson" => MapSpec::Robertson,
        "generalized-robertson" => MapSpec::GeneralizedRobertson { k, u: unitary(k)? },
        "complex-robertson" => MapSpec::ComplexRobertsonExtension { n, z: phases(n) },
        "new" => MapSpec::NewFamily { n, k, z: phases(n), u: unitary(k)? },
        other => return Err(format!("unknown family `{other}`")),
    };
    spec.validate(&Tolerance::default()).map_err(|e| e.to_string())?;
    if spec.dim() > MAX_DIM {
        return Err(format!("d = {} is too large for the demo (max {MAX_DIM})", spec.dim()));
    }
    Ok(spec)
}

/// Choi spectrum of a map.
pub fn spectrum_report(family: &str, n: usize, k: usize, z_re: f64, z_im: f64) -> Result<Value, String> {
    let tol = Tolerance::default();
    let spec = map_spec(family, n, k, C64::new(z_re, z_im))?;
    let w = build(&spec).and_then(|m| m.choi()).map_err(|e| e.to_string())?;
    let eig = hermitian_eigenvalues(w.matrix(), &tol).map_err(|e| e.to_string())?;
    let min = eig.first().copied().unwrap_or(0.0);
    Ok(json!({
        "family": spec.family(),
        "d": spec.dim(),
        "eigenvalues": eig,
        "min_eigenvalue": min,
        "negative_count": eig.iter().filter(|&&v| v < -tol.psd_slack).count(),
    }))
}

/// Detection value of the PPT state against the new-family witness.
pub fn detect_report(n: usize, k: usize, z_re: f64, z_im: f64) -> Result<Value, String> {
    let tol = Tolerance::default();
    let spec = map_spec("new", n, k, C64::new(z_re, z_im))?;
    let w = build(&spec).and_then(|m| m.choi()).map_err(|e| e.to_string())?;
    let rho = build_ppt_detector(&spec, &w, StripeRule::Block).map_err(|e| e.to_string())?;
    let v = rho.verify(&tol).map_err(|e| e.to_string())?;
    let det = detection_value(&w, &rho).map_err(|e| e.to_string())?;
    Ok(json!({
        "n": n,
        "k": k,
        "detection_value": det.value,
        "expected_for_unit_phases": expected_detection_value(n, k),
        "diagonal": det.diagonal,
        "stripe": det.stripe,
        "residual": det.residual,
        "near_diagonal": det.near_diagonal,
        "trace": v.trace,
        "rho_min_eigenvalue": v.rho_min_eigenvalue,
        "pt_min_eigenvalue": v.pt_min_eigenvalue,
        "ppt": v.all_ok(),
        "detected": v.all_ok() && det.value < 0.0,
    }))
}

/// Random condition-satisfying block matrix, checked and reduced step by step.
pub fn certify_report(n: usize, k: usize, seed: u64) -> Result<Value, String> {
    if n == 0 || k == 0 || n * k > 16 {
        return Err("need 1 <= N, K and N*K <= 16".into());
    }
    let tol = Tolerance::default();
    let mut rng = rng_from_seed(seed);
    let spec = random_instance(&mut rng, n, k, PhaseMode::UnitCircle, &tol).map_err(|e| e.to_string())?;
    let report = check_conditions(&spec, &tol).map_err(|e| e.to_string())?;
    let cert = inductive_certify(&spec, &tol).map_err(|e| e.to_string())?;
    let steps: Value = match &cert {
        Ok(c) => c
            .steps
            .iter()
            .map(|s| json!({"level": s.level, "alpha_last": s.alpha_last, "max_abs_z_prime": s.max_abs_z_prime, "min_b_margin": s.min_b_margin}))
            .collect(),
        Err(_) => Value::Array(Vec::new()),
    };
    Ok(json!({
        "n": n,
        "k": k,
        "seed": seed,
        "alphas": spec.alphas(),
        "conditions_ok": report.all_ok(),
        "max_violation": report.max_violation,
        "certified": cert.is_ok(),
        "failure": cert.as_ref().err().map(|f| f.to_string()),
        "steps": steps,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn choi_spectrum(family: &str, n: usize, k: usize, z_re: f64, z_im: f64) -> Result<String, JsValue> {
    to_js(spectrum_report(family, n, k, z_re, z_im))
}

#[wasm_bindgen]
pub fn detect(n: usize, k: usize, z_re: f64, z_im: f64) -> Result<String, JsValue> {
    to_js(detect_report(n, k, z_re, z_im))
}

#[wasm_bindgen]
pub fn certify_random_block(n: usize, k: usize, seed: u32) -> Result<String, JsValue> {
    to_js(certify_report(n, k, u64::from(seed)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_spectrum() {
        let r = spectrum_report("reduction", 3, 1, 1.0, 0.0).unwrap();
        assert!((r["min_eigenvalue"].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r["eigenvalues"].as_array().unwrap().len(), 9);
    }

    #[test]
    fn detect_matches_the_closed_form() {
        let r = detect_report(2, 1, 1.0, 0.0).unwrap();
        assert!((r["detection_value"].as_f64().unwrap() + 1.0 / 48.0).abs() < 1e-12);
        assert_eq!(r["detected"], true);
    }

    #[test]
    fn certify_is_seeded() {
        let a = certify_report(3, 2, 5).unwrap();
        assert_eq!(a, certify_report(3, 2, 5).unwrap());
        assert_eq!(a["certified"], true);
        assert_eq!(a["steps"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(spectrum_report("choi", 2, 1, 1.0, 0.0).is_err());
        assert!(spectrum_report("reduction", 9, 1, 1.0, 0.0).is_err());
        assert!(detect_report(2, 1, 2.0, 0.0).is_err());
        assert!(certify_report(0, 1, 1).is_err());
    }
}
