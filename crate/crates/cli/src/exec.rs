//! Scenario construction and execution for every config kind.

use rindler_core::kinematics::{self, BranchWedges, Event, PhotonDirection, PhotonWorldline, Regime, RindlerWorldline, Wedge};
use rindler_core::protocols::{
    self, BellLabels, BellResult, BellScenario, BellSettings, LabResult, Outcome, PerfectCoherence, PhotonState, Sign,
    SwitchResult, SwitchScenario, ThermalVisibility, Timing, VisibilityModel,
};
use rindler_core::quantum::{ChshOptimizer, ChshSettings, Color, Factor, Ket, C64};
use rindler_core::schwarzschild::{PairSearch, SchwarzschildGeometry, StationaryObserver};
use serde_json::{json, Map, Value};

use crate::config::{parse_slot, parse_wedge, slot_name, Kind, Params};
use crate::error::CliError;
use crate::format::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Overrides the CHSH optimizer's multi-start seed.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub results: Value,
    pub derived: Value,
    /// Main result table for CSV output.
    pub table: Table,
    /// One-row digest used by sweeps.
    pub summary: Vec<(&'static str, Cell)>,
}

/// Column names of [`Execution::summary`] per kind, fixed so that failing
/// sweep rows still line up.
pub fn summary_columns(kind: Kind) -> &'static [&'static str] {
    match kind {
        Kind::Kinematics => &["X", "regime", "alpha2", "Y", "root_residual", "tau_star", "tau_gap"],
        Kind::Switch => &[
            "alpha2", "tau_star", "t1", "t2", "p_m_m", "p_m_mperp", "p_mperp_m", "p_mperp_mperp", "probability_sum",
            "min_expected_fidelity",
        ],
        Kind::Bell => &["alpha2", "tau_star", "best_chsh", "max_schmidt_entropy", "probability_sum"],
        Kind::Schwarzschild => &[
            "observer_r", "proper_acceleration", "newtonian_ratio", "proper_distance", "validity", "peak_r", "peak_tau", "r1",
            "r2", "tau", "residual",
        ],
        Kind::UnruhSweep => &["alpha_si", "temperature", "visibility", "chsh_max"],
    }
}

/// Parses and checks a parameter set without running solvers beyond the
/// closed-form timing needed to state the invariants.
pub fn validate(kind: Kind, p: Params<'_>, opts: RunOptions) -> Result<Value, CliError> {
    match kind {
        Kind::Switch => {
            let sc = switch_scenario(p)?;
            check_visibility(sc.visibility)?;
            let timing = Timing::new(sc.x0, sc.alpha1, sc.alpha2)?;
            check_t_m(sc.t_m, &timing)?;
            Ok(timing_json(&timing, sc.t_m.unwrap_or(timing.t2)))
        }
        Kind::Bell => {
            let sc = bell_scenario(p, opts)?;
            check_visibility(sc.visibility)?;
            let timing = Timing::new(sc.x0, sc.alpha1, sc.alpha2)?;
            check_t_m(sc.t_m, &timing)?;
            Ok(timing_json(&timing, sc.t_m.unwrap_or(timing.t2)))
        }
        Kind::Kinematics => {
            let x0 = p.num("x0")?;
            let alpha1 = p.num("alpha1")?;
            positive("x0", x0)?;
            positive("alpha1", alpha1)?;
            configuration(p)?;
            Ok(json!({ "X": alpha1 * x0 }))
        }
        Kind::Schwarzschild => {
            let g = SchwarzschildGeometry::new(p.num("rs")?)?;
            for r in p.num_list("observers")?.unwrap_or_default() {
                g.lapse(r)?;
            }
            let search = pair_search(p)?;
            if let Some(r0) = p.opt_num("r0")? {
                if !(r0.is_finite() && r0 > g.rs()) {
                    return Err(CliError::validation("r in range", format!("r0 = {r0} must exceed rs = {}", g.rs())));
                }
                if search.tol.is_nan() || search.tol <= 0.0 {
                    return Err(CliError::validation("tol>0", format!("tol = {}", search.tol)));
                }
                let ratio = g.rs() / r0;
                if ratio >= search.threshold {
                    return Err(CliError::validation(
                        "rs/r0<threshold",
                        format!("R_S/R0 = {ratio} is not below the pair-existence threshold {}", search.threshold),
                    ));
                }
            }
            Ok(json!({ "rs": g.rs() }))
        }
        Kind::UnruhSweep => {
            let alphas = unruh_alphas(p)?;
            let model = visibility_model(p)?;
            for a in &alphas {
                protocols::unruh_temperature(*a)?;
            }
            let sc = unruh_scenario(p, opts)?;
            Timing::new(sc.x0, sc.alpha1, sc.alpha2)?;
            Ok(json!({ "alphas": alphas.len(), "model": model.id() }))
        }
    }
}

pub fn execute(kind: Kind, p: Params<'_>, opts: RunOptions) -> Result<Execution, CliError> {
    validate(kind, p, opts)?;
    match kind {
        Kind::Switch => exec_switch(p),
        Kind::Bell => exec_bell(p, opts),
        Kind::Kinematics => exec_kinematics(p),
        Kind::Schwarzschild => exec_schwarzschild(p),
        Kind::UnruhSweep => exec_unruh(p, opts),
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if !(v.is_finite() && v > 0.0) {
        return Err(CliError::validation(format!("{name}>0"), format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_visibility(v: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(CliError::validation("visibility in [0,1]", format!("visibility = {v}")));
    }
    Ok(())
}

fn check_t_m(t_m: Option<f64>, timing: &Timing) -> Result<(), CliError> {
    match t_m {
        Some(t) if !(t.is_finite() && t >= timing.t2) => {
            Err(CliError::validation("t_m>=t2", format!("t_m = {t} precedes the second meeting t2 = {}", timing.t2)))
        }
        _ => Ok(()),
    }
}

pub fn switch_scenario(p: Params<'_>) -> Result<SwitchScenario, CliError> {
    Ok(SwitchScenario {
        x0: p.num("x0")?,
        alpha1: p.num("alpha1")?,
        alpha2: p.acceleration("alpha2")?,
        u_a: p.unitary("u_a")?,
        u_b: p.unitary("u_b")?,
        psi: p.ket("psi")?,
        t_m: p.opt_num("t_m")?,
        visibility: p.num_or("visibility", 1.0)?,
        control: p.control()?,
    })
}

fn optimizer(opts: RunOptions) -> ChshOptimizer {
    let base = ChshOptimizer::default();
    ChshOptimizer { seed: opts.seed.unwrap_or(base.seed), ..base }
}

pub fn bell_scenario(p: Params<'_>, opts: RunOptions) -> Result<BellScenario, CliError> {
    let labels = match p.get("labels") {
        None => BellLabels::default(),
        Some(v) => {
            let o = v.as_object().ok_or_else(|| CliError::parse("`labels` must be an object"))?;
            let branch = |key: &str| -> Result<[protocols::LabSlot; 3], CliError> {
                let b = o.get(key).and_then(Value::as_object).ok_or_else(|| CliError::parse(format!("`labels.{key}` must be an object")))?;
                let slot = |lab: &str| -> Result<protocols::LabSlot, CliError> {
                    parse_slot(b.get(lab).and_then(Value::as_str).ok_or_else(|| CliError::parse(format!("`labels.{key}.{lab}` missing")))?)
                };
                Ok([slot("A")?, slot("B")?, slot("C")?])
            };
            BellLabels { branches: [branch("branch1")?, branch("branch2")?] }
        }
    };
    let settings = match p.get("settings") {
        None => BellSettings::Optimize(optimizer(opts)),
        Some(Value::String(s)) if s == "optimize" => BellSettings::Optimize(optimizer(opts)),
        Some(Value::Object(o)) => {
            let dir = |k: &str| -> Result<[f64; 3], CliError> {
                match Params(o).num_list(k)? {
                    Some(v) if v.len() == 3 => Ok([v[0], v[1], v[2]]),
                    _ => Err(CliError::parse(format!("`settings.{k}` must be a 3-vector"))),
                }
            };
            BellSettings::Fixed(ChshSettings { a0: dir("a0")?, a1: dir("a1")?, b0: dir("b0")?, b1: dir("b1")? })
        }
        Some(_) => return Err(CliError::parse("`settings` must be \"optimize\" or {a0, a1, b0, b1}")),
    };
    if let BellSettings::Fixed(s) = &settings {
        for (name, v) in [("a0", s.a0), ("a1", s.a1), ("b0", s.b0), ("b1", s.b1)] {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-9 {
                return Err(CliError::validation("unit measurement directions", format!("`{name}` has norm {n}")));
            }
        }
    }
    Ok(BellScenario {
        x0: p.num("x0")?,
        alpha1: p.num("alpha1")?,
        alpha2: p.acceleration("alpha2")?,
        u_a: p.unitary("u_a")?,
        u_b: p.unitary("u_b")?,
        u_c: p.unitary("u_c")?,
        psi_l: p.ket("psi_l")?,
        psi_r: p.ket("psi_r")?,
        labels,
        settings,
        t_m: p.opt_num("t_m")?,
        visibility: p.num_or("visibility", 1.0)?,
        control: p.control()?,
    })
}

fn c_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn color_name(c: Color) -> &'static str {
    match c {
        Color::Amber => "A",
        Color::Blue => "B",
        Color::Cyan => "C",
    }
}

pub fn ket_json(k: &Ket) -> Value {
    let factors: Vec<Value> = k
        .space()
        .factors()
        .iter()
        .map(|f| match f {
            Factor::Qubit => json!({ "kind": "qubit" }),
            Factor::Clock(labels) => json!({
                "kind": "clock",
                "labels": labels.iter().map(|l| json!({
                    "lab": color_name(l.color),
                    "acceleration": l.acceleration,
                    "tau": l.tau,
                    "rest_epoch": l.rest_epoch,
                    "reading": l.reading(),
                })).collect::<Vec<_>>(),
            }),
        })
        .collect();
    json!({ "factors": factors, "amplitudes": k.amplitudes().iter().map(|z| c_json(*z)).collect::<Vec<_>>() })
}

fn photon_json(p: &Option<PhotonState>) -> Value {
    match p {
        None => Value::Null,
        Some(PhotonState::Pure(k)) => json!({
            "kind": "pure",
            "amplitudes": k.amplitudes().iter().map(|z| c_json(*z)).collect::<Vec<_>>(),
        }),
        Some(PhotonState::Mixed(rho)) => json!({
            "kind": "mixed",
            "density": (0..rho.nrows()).map(|i| (0..rho.ncols()).map(|j| c_json(rho[(i, j)])).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }),
    }
}

fn purity(p: &Option<PhotonState>) -> Option<f64> {
    p.as_ref().map(|s| {
        let rho = s.density();
        (&rho * &rho).trace().re
    })
}

fn lab_name(r: LabResult) -> &'static str {
    match r {
        LabResult::M => "m",
        LabResult::MPerp => "m_perp",
    }
}

fn sign_name(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

fn outcome_json(o: &Outcome, registers: &[&str]) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert(
        "labs".into(),
        Value::Object(registers.iter().zip(&o.labs).map(|(n, r)| (n.to_string(), json!(lab_name(*r)))).collect()),
    );
    m.insert("sign".into(), json!(sign_name(o.sign)));
    m.insert("probability".into(), json!(o.probability));
    m.insert("photons".into(), photon_json(&o.photons));
    m.insert("expected_fidelity".into(), json!(o.expected_fidelity));
    m
}

pub fn timing_json(t: &Timing, t_m: f64) -> Value {
    json!({
        "x0": t.x0,
        "alpha1": t.alpha1,
        "alpha2": t.alpha2,
        "tau_star": t.tau_star,
        "t1": t.t1,
        "t2": t.t2,
        "t_m": t_m,
        "crossing_taus": t.crossing_taus,
    })
}

const SWITCH_SLOTS: [&str; 2] = ["slow", "fast"];

pub fn switch_results(r: &SwitchResult) -> (Value, Value) {
    let outcomes: Vec<Value> = r.outcomes.iter().map(|o| Value::Object(outcome_json(o, &SWITCH_SLOTS))).collect();
    let sum: f64 = r.outcomes.iter().map(|o| o.probability).sum();
    let prob = |s: Sign| r.outcomes.iter().filter(|o| o.sign == s).map(|o| o.probability).sum::<f64>();
    let results = json!({
        "timing": timing_json(&r.timing, r.t_m),
        "visibility": r.visibility,
        "initial_state": ket_json(&r.initial_state),
        "branch_states": [ket_json(&r.branch_states[0]), ket_json(&r.branch_states[1])],
        "final_state": ket_json(&r.final_state),
        "outcomes": outcomes,
    });
    let derived = json!({
        "probability_sum": sum,
        "plus_probability": prob(Sign::Plus),
        "minus_probability": prob(Sign::Minus),
        "min_expected_fidelity": min_fidelity(r.outcomes.iter()),
    });
    (results, derived)
}

fn min_fidelity<'a>(outcomes: impl Iterator<Item = &'a Outcome>) -> Option<f64> {
    outcomes.filter_map(|o| o.expected_fidelity).reduce(f64::min)
}

fn exec_switch(p: Params<'_>) -> Result<Execution, CliError> {
    let r = protocols::run_switch(&switch_scenario(p)?)?;
    let (results, derived) = switch_results(&r);
    let mut table = Table::new(["slow", "fast", "sign", "probability", "expected_fidelity", "purity"]);
    for o in &r.outcomes {
        table.push(vec![
            lab_name(o.labs[0]).into(),
            lab_name(o.labs[1]).into(),
            sign_name(o.sign).into(),
            o.probability.into(),
            o.expected_fidelity.into(),
            purity(&o.photons).into(),
        ]);
    }
    let mut summary = vec![
        ("alpha2", r.timing.alpha2.into()),
        ("tau_star", r.timing.tau_star.into()),
        ("t1", r.timing.t1.into()),
        ("t2", r.timing.t2.into()),
    ];
    for (name, o) in ["p_m_m", "p_m_mperp", "p_mperp_m", "p_mperp_mperp"].into_iter().zip(&r.outcomes) {
        summary.push((name, o.probability.into()));
    }
    summary.push(("probability_sum", r.outcomes.iter().map(|o| o.probability).sum::<f64>().into()));
    summary.push(("min_expected_fidelity", min_fidelity(r.outcomes.iter()).into()));
    Ok(Execution { results, derived, table, summary })
}

const BELL_LABS: [&str; 3] = ["A", "B", "C"];

pub fn bell_results(r: &BellResult) -> (Value, Value) {
    let measured: Vec<&str> = BELL_LABS
        .iter()
        .enumerate()
        .filter(|(i, _)| r.labels.branches[0][*i] != r.labels.branches[1][*i])
        .map(|(_, n)| *n)
        .collect();
    let outcomes: Vec<Value> = r
        .outcomes
        .iter()
        .map(|o| {
            let mut m = outcome_json(&o.outcome, &measured);
            m.insert("schmidt_entropy".into(), json!(o.schmidt_entropy));
            m.insert("chsh".into(), json!(o.chsh));
            m.insert("chsh_closed_form".into(), json!(o.chsh_closed_form));
            Value::Object(m)
        })
        .collect();
    let labels = |b: usize| -> Value {
        Value::Object(BELL_LABS.iter().zip(r.labels.branches[b]).map(|(n, s)| (n.to_string(), json!(slot_name(s)))).collect())
    };
    let results = json!({
        "timing": timing_json(&r.timing, r.t_m),
        "visibility": r.visibility,
        "labels": { "branch1": labels(0), "branch2": labels(1) },
        "initial_state": ket_json(&r.initial_state),
        "branch_states": [ket_json(&r.branch_states[0]), ket_json(&r.branch_states[1])],
        "final_state": ket_json(&r.final_state),
        "outcomes": outcomes,
    });
    let derived = json!({
        "probability_sum": r.outcomes.iter().map(|o| o.outcome.probability).sum::<f64>(),
        "best_chsh": r.best_chsh(),
        "max_schmidt_entropy": max_entropy(r),
        "min_expected_fidelity": min_fidelity(r.outcomes.iter().map(|o| &o.outcome)),
    });
    (results, derived)
}

fn max_entropy(r: &BellResult) -> Option<f64> {
    r.outcomes.iter().filter_map(|o| o.schmidt_entropy).reduce(f64::max)
}

fn exec_bell(p: Params<'_>, opts: RunOptions) -> Result<Execution, CliError> {
    let r = protocols::run_bell(&bell_scenario(p, opts)?)?;
    let (results, derived) = bell_results(&r);
    let mut table = Table::new(["outcome", "sign", "probability", "expected_fidelity", "schmidt_entropy", "chsh", "chsh_closed_form"]);
    for o in &r.outcomes {
        let label: Vec<&str> = o.outcome.labs.iter().map(|l| lab_name(*l)).collect();
        table.push(vec![
            label.join("/").into(),
            sign_name(o.outcome.sign).into(),
            o.outcome.probability.into(),
            o.outcome.expected_fidelity.into(),
            o.schmidt_entropy.into(),
            o.chsh.into(),
            o.chsh_closed_form.into(),
        ]);
    }
    let summary = vec![
        ("alpha2", r.timing.alpha2.into()),
        ("tau_star", r.timing.tau_star.into()),
        ("best_chsh", r.best_chsh().into()),
        ("max_schmidt_entropy", max_entropy(&r).into()),
        ("probability_sum", r.outcomes.iter().map(|o| o.outcome.probability).sum::<f64>().into()),
    ];
    Ok(Execution { results, derived, table, summary })
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::TrivialOnly => "trivial_only",
        Regime::NontrivialAbove => "nontrivial_above",
        Regime::NontrivialBelow => "nontrivial_below",
        Regime::Boundary => "boundary",
    }
}

fn configuration(p: Params<'_>) -> Result<Option<(BranchWedges, BranchWedges)>, CliError> {
    let Some(v) = p.get("configuration") else { return Ok(None) };
    let o = v.as_object().ok_or_else(|| CliError::parse("`configuration` must be an object"))?;
    let branch = |k: &str| -> Result<BranchWedges, CliError> {
        let b = o.get(k).and_then(Value::as_object).ok_or_else(|| CliError::parse(format!("`configuration.{k}` must be an object")))?;
        let w = |lab: &str| parse_wedge(b.get(lab).unwrap_or(&Value::Null));
        Ok(BranchWedges::new(w("a")?, w("b")?))
    };
    Ok(Some((branch("first")?, branch("second")?)))
}

/// Proper time at which the photon from `(0, x0)` moving towards the origin
/// meets the observer, if it does.
fn meeting_tau(alpha: f64, x0: f64) -> Result<Option<f64>, CliError> {
    let photon = PhotonWorldline::new(Event::new(0.0, x0), PhotonDirection::MinusX)?;
    let w = RindlerWorldline::new(alpha, Wedge::Right)?;
    Ok(kinematics::intersect(&photon, &w).map(|i| i.tau))
}

fn exec_kinematics(p: Params<'_>) -> Result<Execution, CliError> {
    let x0 = p.num("x0")?;
    let alpha1 = p.num("alpha1")?;
    let roots = kinematics::solve_equal_tau_acceleration(alpha1, x0)?;
    let x = roots.x;
    let y = roots.nontrivial();
    let alpha2 = y.map(|y| y / x0);
    let tau1 = meeting_tau(alpha1, x0)?;
    let tau2 = match alpha2 {
        Some(a) => meeting_tau(a, x0)?,
        None => None,
    };
    let tau_gap = match (tau1, tau2) {
        (Some(a), Some(b)) => Some((a - b).abs()),
        _ => None,
    };
    let residuals: Vec<f64> = roots.roots.iter().map(|r| roots.residual(*r)).collect();
    let mut results = json!({
        "x0": x0,
        "alpha1": alpha1,
        "X": x,
        "regime": regime_name(roots.regime),
        "roots": roots.roots,
        "root_residuals": residuals,
        "alpha2": alpha2,
        "tau1": tau1,
        "tau2": tau2,
        "switch_admissible": matches!(y, Some(y) if y > x && x > 1.0),
    });
    if let Some((first, second)) = configuration(p)? {
        let rep = kinematics::classify_configuration(first, second);
        results["configuration"] = json!({
            "first_connected": rep.first_connected,
            "second_connected": rep.second_connected,
            "class": format!("{:?}", rep.class),
        });
    }
    let derived = json!({ "tau_gap": tau_gap, "max_root_residual": residuals.iter().copied().reduce(f64::max) });
    let mut table = Table::new(["root", "Y", "alpha2", "residual"]);
    for (i, r) in roots.roots.iter().enumerate() {
        table.push(vec![Cell::from(if i == 0 { "trivial" } else { "nontrivial" }), (*r).into(), (r / x0).into(), roots.residual(*r).into()]);
    }
    let summary = vec![
        ("X", x.into()),
        ("regime", regime_name(roots.regime).into()),
        ("alpha2", alpha2.into()),
        ("Y", y.into()),
        ("root_residual", y.map(|y| roots.residual(y)).into()),
        ("tau_star", tau1.into()),
        ("tau_gap", tau_gap.into()),
    ];
    Ok(Execution { results, derived, table, summary })
}

fn pair_search(p: Params<'_>) -> Result<PairSearch, CliError> {
    let d = PairSearch::default();
    Ok(PairSearch { r1_hint: p.opt_num("r1_hint")?, tol: p.num_or("tol", d.tol)?, threshold: p.num_or("threshold", d.threshold)? })
}

fn exec_schwarzschild(p: Params<'_>) -> Result<Execution, CliError> {
    let g = SchwarzschildGeometry::new(p.num("rs")?)?;
    let rs = g.rs();
    let mut table = Table::new(["r", "lapse", "proper_acceleration", "newtonian_ratio", "proper_distance", "rho_near_horizon", "alpha_near_horizon", "validity"]);
    let mut observers = Vec::new();
    let mut first = None;
    for r in p.num_list("observers")?.unwrap_or_default() {
        let lapse = g.lapse(r)?;
        let a = g.proper_acceleration(r)?;
        let newtonian = a * 2.0 * r * r / rs;
        let rho = g.proper_distance(r)?;
        let c = g.rindler_correspondence(&StationaryObserver { r })?;
        observers.push(json!({
            "r": r,
            "lapse": lapse,
            "proper_acceleration": a,
            "newtonian_ratio": newtonian,
            "proper_distance": rho,
            "near_horizon": {
                "rho": c.rho,
                "alpha": c.alpha,
                "epsilon_ratio": c.epsilon_ratio,
                "validity": c.validity,
                "eta_per_t": c.eta_per_t,
            },
        }));
        table.push(vec![r.into(), lapse.into(), a.into(), newtonian.into(), rho.into(), c.rho.into(), c.alpha.into(), c.validity.into()]);
        first.get_or_insert((r, a, newtonian, rho, c.validity));
    }
    let mut results = json!({ "rs": rs, "observers": observers });
    let mut fall = None;
    if let Some(r0) = p.opt_num("r0")? {
        let peak = g.proper_time_peak(r0)?;
        let pair = g.find_equal_proper_time_pair(r0, &pair_search(p)?)?;
        results["fall"] = json!({
            "r0": r0,
            "ratio": rs / r0,
            "peak": { "r": peak.r, "tau": peak.tau, "unimodal": peak.unimodal },
            "pair": { "r1": pair.r1, "r2": pair.r2, "tau": pair.tau, "residual": pair.residual },
        });
        fall = Some((peak, pair));
    }
    let derived = json!({
        "max_validity": table.rows.iter().filter_map(|row| match row[7] { Cell::Num(v) => Some(v), _ => None }).reduce(f64::max),
    });
    let f = |x: Option<f64>| Cell::from(x);
    let summary = vec![
        ("observer_r", f(first.map(|o| o.0))),
        ("proper_acceleration", f(first.map(|o| o.1))),
        ("newtonian_ratio", f(first.map(|o| o.2))),
        ("proper_distance", f(first.map(|o| o.3))),
        ("validity", f(first.map(|o| o.4))),
        ("peak_r", f(fall.map(|(k, _)| k.r))),
        ("peak_tau", f(fall.map(|(k, _)| k.tau))),
        ("r1", f(fall.map(|(_, q)| q.r1))),
        ("r2", f(fall.map(|(_, q)| q.r2))),
        ("tau", f(fall.map(|(_, q)| q.tau))),
        ("residual", f(fall.map(|(_, q)| q.residual))),
    ];
    Ok(Execution { results, derived, table, summary })
}

fn unruh_alphas(p: Params<'_>) -> Result<Vec<f64>, CliError> {
    p.num_list("alpha")?.ok_or_else(|| CliError::parse("missing parameter `alpha`"))
}

fn visibility_model(p: Params<'_>) -> Result<Box<dyn VisibilityModel>, CliError> {
    let Some(v) = p.get("model") else { return Ok(Box::new(ThermalVisibility::default())) };
    let o = v.as_object().ok_or_else(|| CliError::parse("`model` must be an object"))?;
    match o.get("kind").and_then(Value::as_str) {
        Some("thermal") => {
            let t0 = Params(o).num_or("t0", ThermalVisibility::default().t0)?;
            positive("t0", t0)?;
            Ok(Box::new(ThermalVisibility { t0 }))
        }
        Some("constant") => Ok(Box::new(PerfectCoherence)),
        _ => Err(CliError::parse("`model.kind` must be \"thermal\" or \"constant\"")),
    }
}

/// Bell scenario used by the Unruh sweep: the maximally entangling choice,
/// with any field overridden by `parameters.scenario`.
fn unruh_scenario(p: Params<'_>, opts: RunOptions) -> Result<BellScenario, CliError> {
    let mut merged: Map<String, Value> = serde_json::from_value(json!({
        "x0": 1.0, "alpha1": 1.5, "alpha2": "derive",
        "u_a": "H", "u_b": "Z", "u_c": "X", "psi_l": "+", "psi_r": "0",
    }))
    .expect("static defaults");
    if let Some(v) = p.get("scenario") {
        let o = v.as_object().ok_or_else(|| CliError::parse("`scenario` must be an object"))?;
        for (k, v) in o {
            if !Kind::Bell.parameters().contains(&k.as_str()) || k == "visibility" {
                return Err(CliError::parse(format!("unknown scenario field `{k}`")));
            }
            merged.insert(k.clone(), v.clone());
        }
    }
    bell_scenario(Params(&merged), opts)
}

fn exec_unruh(p: Params<'_>, opts: RunOptions) -> Result<Execution, CliError> {
    let alphas = unruh_alphas(p)?;
    let model = visibility_model(p)?;
    let sc = unruh_scenario(p, opts)?;
    let rows = protocols::negligibility_sweep(&alphas, model.as_ref(), &sc)?;
    let mut table = Table::new(summary_columns(Kind::UnruhSweep).iter().copied());
    for r in &rows {
        table.push(vec![r.alpha_si.into(), r.temperature.into(), r.visibility.into(), r.chsh_max.into()]);
    }
    let results = json!({
        "model": model.id(),
        "constants": { "hbar": protocols::HBAR, "k_b": protocols::BOLTZMANN, "c": protocols::SPEED_OF_LIGHT },
        "rows": rows.iter().map(|r| json!({
            "alpha_si": r.alpha_si,
            "temperature": r.temperature,
            "visibility": r.visibility,
            "chsh_max": r.chsh_max,
        })).collect::<Vec<_>>(),
    });
    let derived = json!({
        "tsirelson": 2.0 * std::f64::consts::SQRT_2,
        "max_chsh": rows.iter().map(|r| r.chsh_max).reduce(f64::max),
    });
    let summary = match rows.as_slice() {
        [r] => vec![
            ("alpha_si", r.alpha_si.into()),
            ("temperature", r.temperature.into()),
            ("visibility", r.visibility.into()),
            ("chsh_max", r.chsh_max.into()),
        ],
        _ => summary_columns(Kind::UnruhSweep).iter().map(|c| (*c, Cell::Empty)).collect(),
    };
    Ok(Execution { results, derived, table, summary })
}
