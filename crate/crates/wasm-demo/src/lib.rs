//! Browser bindings for the static demo page in `www/`. Every export returns
//! JSON text; the `*_json` functions hold the logic and run natively too.

use rindler_core::figures;
use rindler_core::kinematics;
use rindler_core::protocols::{self, BellScenario, LabResult, PhotonState, Sign, SwitchScenario};
use rindler_core::quantum::{Ket, Unitary};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn gate(name: &str) -> Result<Unitary, String> {
    Ok(match name {
        "I" => Unitary::identity(2),
        "X" => Unitary::pauli_x(),
        "Y" => Unitary::pauli_y(),
        "Z" => Unitary::pauli_z(),
        "H" => Unitary::hadamard(),
        "S" => Unitary::phase(std::f64::consts::FRAC_PI_2),
        "T" => Unitary::phase(std::f64::consts::FRAC_PI_4),
        other => return Err(format!("unknown gate `{other}`")),
    })
}

fn state(name: &str) -> Result<Ket, String> {
    Ok(match name {
        "0" => Ket::zero(),
        "1" => Ket::one(),
        "+" => Ket::plus(),
        "-" => Ket::minus(),
        other => return Err(format!("unknown state `{other}`")),
    })
}

fn lab(r: LabResult) -> &'static str {
    match r {
        LabResult::M => "m",
        LabResult::MPerp => "m_perp",
    }
}

/// Phi_X(Y) sampled on `(0, y_max]` plus the equal-proper-time roots for `X`.
pub fn a2_json(x: f64, y_max: f64, samples: usize) -> Result<String, String> {
    let c = kinematics::classify_equal_tau_roots(x).map_err(|e| e.to_string())?;
    let rows = figures::a2_rows(&[x], y_max, samples.max(2));
    let points: Vec<[f64; 2]> = rows.iter().map(|r| [r.y, r.phi]).collect();
    Ok(json!({ "x": x, "regime": c.regime, "roots": c.roots, "points": points }).to_string())
}

/// Observer hyperbolas and photon rays, grouped by series.
pub fn worldlines_json(x0: f64, alpha1: f64, samples: usize) -> Result<String, String> {
    let rows = figures::worldline_rows(x0, alpha1, samples).map_err(|e| e.to_string())?;
    let mut series = serde_json::Map::new();
    for r in rows {
        let entry = series.entry(r.series).or_insert_with(|| Value::Array(vec![]));
        entry.as_array_mut().unwrap().push(json!([r.t, r.x]));
    }
    let alpha2 = kinematics::solve_equal_tau_acceleration(alpha1, x0).ok().and_then(|c| c.nontrivial()).map(|y| y / x0);
    Ok(json!({ "alpha2": alpha2, "series": series }).to_string())
}

/// Four post-selected outcomes of the gravitational switch.
pub fn switch_json(u_a: &str, u_b: &str, psi: &str, visibility: f64) -> Result<String, String> {
    let mut sc = SwitchScenario::new(1.0, 1.5, gate(u_a)?, gate(u_b)?, state(psi)?);
    sc.visibility = visibility;
    let r = protocols::run_switch(&sc).map_err(|e| e.to_string())?;
    let outcomes: Vec<Value> = r
        .outcomes
        .iter()
        .map(|o| {
            let populations = o.photons.as_ref().map(|p: &PhotonState| {
                let rho = p.density();
                [rho[(0, 0)].re, rho[(1, 1)].re]
            });
            json!({
                "labs": o.labs.iter().map(|l| lab(*l)).collect::<Vec<_>>(),
                "sign": if o.sign == Sign::Plus { "+" } else { "-" },
                "probability": o.probability,
                "populations": populations,
                "fidelity": o.expected_fidelity,
            })
        })
        .collect();
    Ok(json!({ "alpha2": r.timing.alpha2, "tau_star": r.timing.tau_star, "outcomes": outcomes }).to_string())
}

/// Best CHSH value of the temporal-order Bell protocol at visibility `v`.
pub fn bell_json(visibility: f64) -> Result<String, String> {
    let mut sc = BellScenario::maximally_entangling(1.0, 1.5);
    sc.visibility = visibility;
    let r = protocols::run_bell(&sc).map_err(|e| e.to_string())?;
    let entropy = r.outcomes.iter().filter_map(|o| o.schmidt_entropy).fold(f64::NAN, f64::max);
    Ok(json!({
        "visibility": visibility,
        "chsh": r.best_chsh(),
        "closed_form": 2.0 * (1.0 + visibility * visibility).sqrt(),
        "entropy": if entropy.is_nan() { None } else { Some(entropy) },
    })
    .to_string())
}

#[wasm_bindgen]
pub fn a2(x: f64, y_max: f64, samples: usize) -> Result<String, JsError> {
    a2_json(x, y_max, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn worldlines(x0: f64, alpha1: f64, samples: usize) -> Result<String, JsError> {
    worldlines_json(x0, alpha1, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn switch_outcomes(u_a: &str, u_b: &str, psi: &str, visibility: f64) -> Result<String, JsError> {
    switch_json(u_a, u_b, psi, visibility).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn bell(visibility: f64) -> Result<String, JsError> {
    bell_json(visibility).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: Result<String, String>) -> Value {
        serde_json::from_str(&s.unwrap()).unwrap()
    }

    #[test]
    fn a2_reports_regime_and_roots() {
        let v = parse(a2_json(2.0, 12.0, 100));
        assert_eq!(v["regime"], "NontrivialAbove");
        assert!((v["roots"][1].as_f64().unwrap() - 4.0).abs() < 1e-9);
        assert!(v["points"].as_array().unwrap().len() >= 100);
        assert!(a2_json(-1.0, 12.0, 10).is_err());
    }

    #[test]
    fn worldlines_have_six_series() {
        let v = parse(worldlines_json(1.0, 1.5, 20));
        assert_eq!(v["series"].as_object().unwrap().len(), 6);
        assert!(v["alpha2"].as_f64().unwrap() > 1.5);
    }

    #[test]
    fn switch_probabilities_sum_to_one_at_any_visibility() {
        for vis in [0.0, 0.4, 1.0] {
            let v = parse(switch_json("H", "Z", "+", vis));
            let sum: f64 = v["outcomes"].as_array().unwrap().iter().map(|o| o["probability"].as_f64().unwrap()).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        assert!(switch_json("Q", "Z", "+", 1.0).is_err());
    }

    #[test]
    fn bell_tracks_visibility() {
        for vis in [0.0, 0.5, 1.0] {
            let v = parse(bell_json(vis));
            assert!((v["chsh"].as_f64().unwrap() - v["closed_form"].as_f64().unwrap()).abs() < 1e-6);
        }
    }
}
