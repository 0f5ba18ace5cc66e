//! Protocol drivers built on the kinematics and the quantum state engine:
//! the quantum switch with two entangled Rindler laboratories, the
//! temporal-order Bell protocol with three laboratories, and the Unruh
//! temperature / visibility model.
//!
//! Both drivers evolve the full laboratory-clock ⊗ photon state. A photon
//! meeting a laboratory is a unitary on the photon controlled by the clock
//! register; bringing the laboratory to rest is a relabelling of its clock.
//! Afterwards every laboratory register holding two labels is measured in
//! the `(|l1> ± |l2>)/sqrt(2)` basis, one register at a time.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector, Matrix4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{self, Event, KinematicsError, PhotonDirection, PhotonWorldline, RindlerWorldline, Wedge};
use crate::quantum::{
    self, schmidt_entropy, tensor, ChshOptimizer, ChshSettings, ClockLabel, Color, Ket,
    QuantumError, TwoQubitState, Unitary, C64,
};

/// Largest `|tau1 - tau2|` accepted for explicitly supplied accelerations.
pub const EQUAL_TAU_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("invariant `{invariant}` violated: {message}")]
    Invariant { invariant: &'static str, message: String },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

impl ProtocolError {
    fn invariant(invariant: &'static str, message: impl Into<String>) -> Self {
        ProtocolError::Invariant { invariant, message: message.into() }
    }

    /// Name of the violated invariant, when this is a validation failure.
    pub fn invariant_name(&self) -> Option<&'static str> {
        match self {
            ProtocolError::Invariant { invariant, .. } => Some(invariant),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ProtocolError>;

/// How the larger acceleration is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AccelerationChoice {
    Explicit(f64),
    Derive(DeriveTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeriveTag {
    Derive,
}

impl AccelerationChoice {
    pub const DERIVE: AccelerationChoice = AccelerationChoice::Derive(DeriveTag::Derive);
}

/// Equal-proper-time schedule of a left-moving photon emitted at `(0, x0)`
/// past two Right-wedge observers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub x0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub tau_star: f64,
    /// Inertial times of the two meetings, `t1 < t2`.
    pub t1: f64,
    pub t2: f64,
    /// Observers' proper times at the meetings, recomputed from the
    /// photon/hyperbola intersection.
    pub crossing_taus: [f64; 2],
}

impl Timing {
    pub fn new(x0: f64, alpha1: f64, alpha2: AccelerationChoice) -> Result<Self> {
        if !(x0.is_finite() && x0 > 0.0) {
            return Err(ProtocolError::invariant("x0>0", format!("x0 = {x0}")));
        }
        if !(alpha1.is_finite() && alpha1 > 0.0) {
            return Err(ProtocolError::invariant("alpha1>0", format!("alpha1 = {alpha1}")));
        }
        let x = alpha1 * x0;
        if x <= 1.0 {
            return Err(ProtocolError::invariant("alpha1*x0>1", format!("alpha1*x0 = {x}")));
        }
        let tau_star = kinematics::reception_proper_time(alpha1, x0)?;
        let alpha2 = match alpha2 {
            AccelerationChoice::Derive(_) => {
                let roots = kinematics::solve_equal_tau_acceleration(alpha1, x0)?;
                match roots.nontrivial() {
                    Some(y) if y > x => y / x0,
                    _ => {
                        return Err(ProtocolError::invariant(
                            "alpha2>alpha1",
                            format!("alpha1*x0 = {x} admits no equal-proper-time partner with alpha2 > alpha1 (needs 1 < alpha1*x0 < e)"),
                        ))
                    }
                }
            }
            AccelerationChoice::Explicit(a2) => {
                if !(a2.is_finite() && a2 > alpha1) {
                    return Err(ProtocolError::invariant("alpha2>alpha1", format!("alpha2 = {a2}, alpha1 = {alpha1}")));
                }
                let tau2 = kinematics::reception_proper_time(a2, x0)?;
                if (tau2 - tau_star).abs() >= EQUAL_TAU_TOL {
                    return Err(ProtocolError::invariant(
                        "tau1==tau2",
                        format!("tau1 = {tau_star}, tau2 = {tau2}, difference {:e}", tau2 - tau_star),
                    ));
                }
                a2
            }
        };
        let t1 = (alpha1 * tau_star).sinh() / alpha1;
        let t2 = (alpha2 * tau_star).sinh() / alpha2;
        let photon = PhotonWorldline::new(Event::new(0.0, x0), PhotonDirection::MinusX)?;
        let mut crossing_taus = [0.0; 2];
        for (slot, a) in crossing_taus.iter_mut().zip([alpha1, alpha2]) {
            let w = RindlerWorldline::new(a, Wedge::Right)?;
            *slot = kinematics::intersect(&photon, &w)
                .ok_or_else(|| ProtocolError::invariant("alpha*x0>=1", format!("photon misses observer with alpha = {a}")))?
                .tau;
        }
        Ok(Timing { x0, alpha1, alpha2, tau_star, t1, t2, crossing_taus })
    }

    fn meeting_time(&self, speed: Speed) -> f64 {
        match speed {
            Speed::Slow => self.t1,
            Speed::Fast => self.t2,
        }
    }

    fn acceleration(&self, speed: Speed) -> f64 {
        match speed {
            Speed::Slow => self.alpha1,
            Speed::Fast => self.alpha2,
        }
    }

    fn measurement_time(&self, t_m: Option<f64>) -> Result<f64> {
        let t_m = t_m.unwrap_or(self.t2);
        if !(t_m.is_finite() && t_m >= self.t2) {
            return Err(ProtocolError::invariant("t_m>=t2", format!("t_m = {t_m}, t2 = {}", self.t2)));
        }
        Ok(t_m)
    }
}

/// Which of the two accelerations a laboratory carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speed {
    /// `alpha1`, met first.
    Slow,
    /// `alpha2`, met second.
    Fast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LabResult {
    M,
    MPerp,
}

/// Relative sign between the two order branches in a post-selected state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Post-selected photon state: a ket for the coherent protocol, a density
/// matrix once branch coherence has been reduced.
#[derive(Debug, Clone, PartialEq)]
pub enum PhotonState {
    Pure(Ket),
    Mixed(DMatrix<C64>),
}

impl PhotonState {
    pub fn density(&self) -> DMatrix<C64> {
        match self {
            PhotonState::Pure(k) => {
                let v = DVector::from_column_slice(k.amplitudes());
                &v * v.adjoint()
            }
            PhotonState::Mixed(rho) => rho.clone(),
        }
    }

    /// `<e|rho|e> / <e|e>`.
    pub fn fidelity_with(&self, expected: &[C64]) -> f64 {
        let e = DVector::from_column_slice(expected);
        let n = e.norm_squared();
        if n == 0.0 {
            return 0.0;
        }
        (e.adjoint() * self.density() * &e)[(0, 0)].re / n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Result per measured laboratory register.
    pub labs: Vec<LabResult>,
    pub sign: Sign,
    pub probability: f64,
    /// `None` when the outcome cannot occur.
    pub photons: Option<PhotonState>,
    /// Overlap with the definite-order prediction `c1 P1 ± c2 P2`;
    /// `None` when either side vanishes.
    pub expected_fidelity: Option<f64>,
    /// Unnormalized photon amplitude contributed by each order branch.
    branch_amplitudes: [Vec<C64>; 2],
    expected: Vec<C64>,
}

impl Outcome {
    pub fn branch_amplitudes(&self) -> &[Vec<C64>; 2] {
        &self.branch_amplitudes
    }

    pub fn expected_state(&self) -> &[C64] {
        &self.expected
    }

    /// Recombines the two branches with their cross terms scaled by `v`.
    fn with_visibility(&self, v: f64) -> Outcome {
        let [x1, x2] = &self.branch_amplitudes;
        let a = DVector::from_column_slice(x1);
        let b = DVector::from_column_slice(x2);
        let ab = &a * b.adjoint();
        let rho = &a * a.adjoint() + &b * b.adjoint() + (&ab + ab.adjoint()) * C64::new(v, 0.0);
        let probability = rho.trace().re.max(0.0);
        let photons = (probability > 0.0).then(|| PhotonState::Mixed(rho / C64::new(probability, 0.0)));
        let expected_fidelity = match &photons {
            Some(p) if self.expected.iter().any(|z| z.norm() > 0.0) => Some(p.fidelity_with(&self.expected)),
            _ => None,
        };
        Outcome { probability, photons, expected_fidelity, ..self.clone() }
    }
}

fn validate_visibility(v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(ProtocolError::invariant("visibility in [0,1]", format!("visibility = {v}")));
    }
    Ok(())
}

fn normalized_control(weights: [f64; 2]) -> Result<[f64; 2]> {
    let n = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    if !(n.is_finite() && n > 0.0) {
        return Err(ProtocolError::invariant("control weights nonzero", format!("weights = {weights:?}")));
    }
    Ok([weights[0] / n, weights[1] / n])
}

fn check_qubit_unitary(name: &'static str, u: &Unitary) -> Result<()> {
    if u.dim() != 2 {
        return Err(ProtocolError::invariant(name, format!("expected a 2x2 unitary, got {0}x{0}", u.dim())));
    }
    Ok(())
}

fn check_qubit(name: &'static str, k: &Ket) -> Result<Ket> {
    if k.space().dims() != [2] {
        return Err(ProtocolError::invariant(name, format!("expected a single qubit, got dims {:?}", k.space().dims())));
    }
    Ok(k.normalized()?)
}

/// Measures the leading `registers` clock factors in the superposition basis
/// of each register and returns one unnormalized photon ket per outcome.
/// Registers with a single label are contracted without a choice.
fn postselect(state: &Ket, registers: usize) -> Result<Vec<(Vec<LabResult>, Ket)>> {
    let mut frontier = vec![(Vec::new(), state.clone())];
    for _ in 0..registers {
        let mut next = Vec::new();
        for (path, ket) in frontier {
            let labels = ket.space().factors()[0].labels().ok_or(QuantumError::NotClock(0))?.to_vec();
            match labels.len() {
                1 => {
                    let v = Ket::clock(&labels, &labels[0])?;
                    next.push((path, ket.contract_factor(0, &v)?));
                }
                2 => {
                    let first = Ket::clock(&labels, &labels[0])?;
                    let second = Ket::clock(&labels, &labels[1])?;
                    let h = C64::new(FRAC_1_SQRT_2, 0.0);
                    for (res, s) in [(LabResult::M, 1.0), (LabResult::MPerp, -1.0)] {
                        let v = Ket::superpose(&[(h, &first), (h * s, &second)])?;
                        let mut p = path.clone();
                        p.push(res);
                        next.push((p, ket.contract_factor(0, &v)?));
                    }
                }
                n => return Err(QuantumError::Dimension { expected: 2, got: n }.into()),
            }
        }
        frontier = next;
    }
    Ok(frontier)
}

/// Assembles outcomes from the post-selected coherent state and the two
/// post-selected branch states, in the same outcome order.
fn assemble_outcomes(
    coherent: Vec<(Vec<LabResult>, Ket)>,
    branch1: Vec<(Vec<LabResult>, Ket)>,
    branch2: Vec<(Vec<LabResult>, Ket)>,
    predicted: [&[C64]; 2],
    control: [f64; 2],
) -> Vec<Outcome> {
    coherent
        .into_iter()
        .zip(branch1)
        .zip(branch2)
        .map(|(((labs, photon), (_, x1)), (_, x2))| {
            let perps = labs.iter().filter(|r| **r == LabResult::MPerp).count();
            let sign = if perps % 2 == 0 { Sign::Plus } else { Sign::Minus };
            let n = photon.norm();
            let probability = n * n;
            let photons = (n > 0.0).then(|| PhotonState::Pure(photon.scaled(C64::new(1.0 / n, 0.0))));
            let expected: Vec<C64> = predicted[0]
                .iter()
                .zip(predicted[1])
                .map(|(p, q)| p * control[0] + q * (control[1] * sign.value()))
                .collect();
            let expected_fidelity = match &photons {
                Some(p) if expected.iter().any(|z| z.norm() > 1e-300) => Some(p.fidelity_with(&expected)),
                _ => None,
            };
            Outcome {
                labs,
                sign,
                probability,
                photons,
                expected_fidelity,
                branch_amplitudes: [x1.amplitudes().to_vec(), x2.amplitudes().to_vec()],
                expected,
            }
        })
        .collect()
}

/// Quantum switch: laboratories A (amber) and B (blue) in superposition of
/// carrying `alpha1`/`alpha2` and `alpha2`/`alpha1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchScenario {
    pub x0: f64,
    pub alpha1: f64,
    pub alpha2: AccelerationChoice,
    pub u_a: Unitary,
    pub u_b: Unitary,
    pub psi: Ket,
    /// Measurement time of the inertial observer; defaults to `t2`.
    pub t_m: Option<f64>,
    pub visibility: f64,
    /// Amplitudes of the (A slow, B fast) and (B slow, A fast) branches.
    pub control: [f64; 2],
}

impl SwitchScenario {
    pub fn new(x0: f64, alpha1: f64, u_a: Unitary, u_b: Unitary, psi: Ket) -> Self {
        SwitchScenario {
            x0,
            alpha1,
            alpha2: AccelerationChoice::DERIVE,
            u_a,
            u_b,
            psi,
            t_m: None,
            visibility: 1.0,
            control: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchResult {
    pub timing: Timing,
    pub t_m: f64,
    pub visibility: f64,
    pub initial_state: Ket,
    /// The two order branches after both meetings and the rest relabelling.
    pub branch_states: [Ket; 2],
    pub final_state: Ket,
    /// Outcomes ordered (M,M), (M,M⊥), (M⊥,M), (M⊥,M⊥) over slots
    /// (slow, fast).
    pub outcomes: Vec<Outcome>,
}

pub fn run_switch(sc: &SwitchScenario) -> Result<SwitchResult> {
    check_qubit_unitary("U_A is 2x2", &sc.u_a)?;
    check_qubit_unitary("U_B is 2x2", &sc.u_b)?;
    let psi = check_qubit("psi is a qubit", &sc.psi)?;
    validate_visibility(sc.visibility)?;
    let control = normalized_control(sc.control)?;
    let timing = Timing::new(sc.x0, sc.alpha1, sc.alpha2)?;
    let t_m = timing.measurement_time(sc.t_m)?;

    let slot_labels = |alpha: f64| vec![ClockLabel::initial(alpha, Color::Amber), ClockLabel::initial(alpha, Color::Blue)];
    let slow = slot_labels(timing.alpha1);
    let fast = slot_labels(timing.alpha2);
    let branch = |slow_color: usize, fast_color: usize| -> Result<Ket> {
        Ok(tensor(&[Ket::clock(&slow, &slow[slow_color])?, Ket::clock(&fast, &fast[fast_color])?, psi.clone()])?)
    };
    // branch 1: A slow, B fast; branch 2: B slow, A fast
    let b1 = branch(0, 1)?;
    let b2 = branch(1, 0)?;
    let initial_state = Ket::superpose(&[(C64::new(control[0], 0.0), &b1), (C64::new(control[1], 0.0), &b2)])?;

    let evolve = |k: &Ket| -> Result<Ket> {
        let pick = |l: &ClockLabel| Some(if l.color == Color::Amber { &sc.u_a } else { &sc.u_b });
        let mut s = k.apply_controlled(0, 2, pick)?;
        s = s.apply_controlled(1, 2, pick)?;
        for (slot, t_i) in [(0, timing.t1), (1, timing.t2)] {
            s = s.relabel_clock(slot, |l| ClockLabel { tau: timing.tau_star, rest_epoch: t_m - t_i, ..*l })?;
        }
        Ok(s)
    };
    let final_state = evolve(&initial_state)?;
    let branch_states = [evolve(&b1)?.scaled(C64::new(control[0], 0.0)), evolve(&b2)?.scaled(C64::new(control[1], 0.0))];

    let p1 = sc.u_b.then_after(&sc.u_a).apply(&psi)?;
    let p2 = sc.u_a.then_after(&sc.u_b).apply(&psi)?;
    let outcomes = assemble_outcomes(
        postselect(&final_state, 2)?,
        postselect(&branch_states[0], 2)?,
        postselect(&branch_states[1], 2)?,
        [p1.amplitudes(), p2.amplitudes()],
        control,
    );
    let coherent = SwitchResult { timing, t_m, visibility: 1.0, initial_state, branch_states, final_state, outcomes };
    apply_visibility(&coherent, sc.visibility)
}

/// Where a laboratory sits in one branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabSlot {
    pub speed: Speed,
    pub wedge: Wedge,
}

impl LabSlot {
    pub const fn new(speed: Speed, wedge: Wedge) -> Self {
        LabSlot { speed, wedge }
    }
}

/// Slot of laboratories `[A, B, C]` in each of the two branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BellLabels {
    pub branches: [[LabSlot; 3]; 2],
}

impl Default for BellLabels {
    /// A: `-alpha2 | -alpha1`, B: `alpha1 | alpha2`, C: `alpha2 | -alpha2`.
    fn default() -> Self {
        use Speed::*;
        use Wedge::*;
        BellLabels {
            branches: [
                [LabSlot::new(Fast, Left), LabSlot::new(Slow, Right), LabSlot::new(Fast, Right)],
                [LabSlot::new(Slow, Left), LabSlot::new(Fast, Right), LabSlot::new(Fast, Left)],
            ],
        }
    }
}

impl BellLabels {
    fn validate(&self) -> Result<()> {
        for (b, branch) in self.branches.iter().enumerate() {
            for i in 0..3 {
                for j in 0..i {
                    if branch[i] == branch[j] {
                        return Err(ProtocolError::invariant(
                            "labs distinct per branch",
                            format!("branch {} puts labs {} and {} on the same worldline", b + 1, LAB_NAMES[j], LAB_NAMES[i]),
                        ));
                    }
                }
            }
        }
        let [first, second] = self.branches;
        let c_crosses = first[2].wedge != second[2].wedge;
        let swaps = |lab: usize| first[lab].wedge == second[lab].wedge && first[lab].speed != second[lab].speed;
        if !(c_crosses && swaps(0) && swaps(1)) {
            return Err(ProtocolError::invariant(
                "C crosses wedges, A and B swap accelerations",
                format!("branches {first:?} and {second:?}"),
            ));
        }
        Ok(())
    }
}

const LAB_NAMES: [&str; 3] = ["A", "B", "C"];
const LAB_COLORS: [Color; 3] = [Color::Amber, Color::Blue, Color::Cyan];

#[derive(Debug, Clone, PartialEq)]
pub enum BellSettings {
    Optimize(ChshOptimizer),
    Fixed(ChshSettings),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellScenario {
    /// Source distance from the origin in each wedge.
    pub x0: f64,
    pub alpha1: f64,
    pub alpha2: AccelerationChoice,
    pub u_a: Unitary,
    pub u_b: Unitary,
    pub u_c: Unitary,
    pub psi_l: Ket,
    pub psi_r: Ket,
    pub labels: BellLabels,
    pub settings: BellSettings,
    pub t_m: Option<f64>,
    pub visibility: f64,
    pub control: [f64; 2],
}

impl BellScenario {
    /// `|+>, |0>` with `U_A = H`, `U_B = Z`, `U_C = X`.
    pub fn maximally_entangling(x0: f64, alpha1: f64) -> Self {
        BellScenario {
            x0,
            alpha1,
            alpha2: AccelerationChoice::DERIVE,
            u_a: Unitary::hadamard(),
            u_b: Unitary::pauli_z(),
            u_c: Unitary::pauli_x(),
            psi_l: Ket::plus(),
            psi_r: Ket::zero(),
            labels: BellLabels::default(),
            settings: BellSettings::Optimize(ChshOptimizer::default()),
            t_m: None,
            visibility: 1.0,
            control: [1.0, 1.0],
        }
    }

    fn unitary(&self, lab: usize) -> &Unitary {
        [&self.u_a, &self.u_b, &self.u_c][lab]
    }

    /// Photon state of one branch from direct matrix products: in each wedge
    /// the slow laboratory acts first.
    fn definite_order_prediction(&self, branch: usize, psi_l: &Ket, psi_r: &Ket) -> Result<Ket> {
        let mut out = Vec::new();
        for (wedge, psi) in [(Wedge::Left, psi_l), (Wedge::Right, psi_r)] {
            let mut u = Unitary::identity(2);
            for speed in [Speed::Slow, Speed::Fast] {
                if let Some(lab) = self.labels.branches[branch].iter().position(|s| *s == LabSlot::new(speed, wedge)) {
                    u = self.unitary(lab).then_after(&u);
                }
            }
            out.push(u.apply(psi)?);
        }
        Ok(tensor(&out)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellOutcome {
    pub outcome: Outcome,
    /// Entanglement entropy (bits) between the two photons; pure states only.
    pub schmidt_entropy: Option<f64>,
    /// CHSH value: optimized, or at the fixed settings.
    pub chsh: Option<f64>,
    /// `2 sqrt(s1^2 + s2^2)` from the correlation matrix.
    pub chsh_closed_form: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BellResult {
    pub timing: Timing,
    pub t_m: f64,
    pub visibility: f64,
    pub labels: BellLabels,
    pub initial_state: Ket,
    pub branch_states: [Ket; 2],
    pub final_state: Ket,
    /// Outcomes over the measured registers of A, B, C in that order,
    /// `M` before `M⊥`.
    pub outcomes: Vec<BellOutcome>,
    settings: BellSettings,
}

impl BellResult {
    /// Largest CHSH value among outcomes that can occur.
    pub fn best_chsh(&self) -> Option<f64> {
        self.outcomes.iter().filter(|o| o.outcome.probability > 1e-12).filter_map(|o| o.chsh).reduce(f64::max)
    }
}

fn bell_diagnostics(outcome: Outcome, settings: &BellSettings) -> Result<BellOutcome> {
    let Some(photons) = &outcome.photons else {
        return Ok(BellOutcome { outcome, schmidt_entropy: None, chsh: None, chsh_closed_form: None });
    };
    let (state, entropy) = match photons {
        PhotonState::Pure(k) => (TwoQubitState::from_ket(k)?, Some(schmidt_entropy(k, &[0])?)),
        PhotonState::Mixed(rho) => (TwoQubitState::from_density(Matrix4::from_iterator(rho.iter().copied()))?, None),
    };
    let chsh = match settings {
        BellSettings::Optimize(opt) => opt.maximize(&state).value,
        BellSettings::Fixed(s) => quantum::chsh_value(&state, s)?,
    };
    Ok(BellOutcome {
        outcome,
        schmidt_entropy: entropy,
        chsh: Some(chsh),
        chsh_closed_form: Some(quantum::chsh_max_closed_form(&state)),
    })
}

pub fn run_bell(sc: &BellScenario) -> Result<BellResult> {
    for (lab, name) in ["U_A is 2x2", "U_B is 2x2", "U_C is 2x2"].into_iter().enumerate() {
        check_qubit_unitary(name, sc.unitary(lab))?;
    }
    let psi_l = check_qubit("psi_L is a qubit", &sc.psi_l)?;
    let psi_r = check_qubit("psi_R is a qubit", &sc.psi_r)?;
    validate_visibility(sc.visibility)?;
    sc.labels.validate()?;
    let control = normalized_control(sc.control)?;
    let timing = Timing::new(sc.x0, sc.alpha1, sc.alpha2)?;
    let t_m = timing.measurement_time(sc.t_m)?;

    let label_of = |lab: usize, slot: LabSlot| {
        ClockLabel::initial(slot.wedge.sign() * timing.acceleration(slot.speed), LAB_COLORS[lab])
    };
    let mut registers = Vec::with_capacity(3);
    for lab in 0..3 {
        let mut labels = vec![label_of(lab, sc.labels.branches[0][lab])];
        let second = label_of(lab, sc.labels.branches[1][lab]);
        if second != labels[0] {
            labels.push(second);
        }
        registers.push(labels);
    }
    let branch = |b: usize| -> Result<Ket> {
        let mut parts = Vec::with_capacity(5);
        for (lab, labels) in registers.iter().enumerate() {
            parts.push(Ket::clock(labels, &label_of(lab, sc.labels.branches[b][lab]))?);
        }
        parts.push(psi_l.clone());
        parts.push(psi_r.clone());
        Ok(tensor(&parts)?)
    };
    let b1 = branch(0)?;
    let b2 = branch(1)?;
    let initial_state = Ket::superpose(&[(C64::new(control[0], 0.0), &b1), (C64::new(control[1], 0.0), &b2)])?;

    const PHOTON_L: usize = 3;
    const PHOTON_R: usize = 4;
    let evolve = |k: &Ket| -> Result<Ket> {
        let mut s = k.clone();
        for speed in [Speed::Slow, Speed::Fast] {
            let alpha = timing.acceleration(speed);
            for lab in 0..3 {
                let u = sc.unitary(lab);
                for (wedge, photon) in [(Wedge::Left, PHOTON_L), (Wedge::Right, PHOTON_R)] {
                    let beta = wedge.sign() * alpha;
                    let here = ClockLabel::initial(beta, LAB_COLORS[lab]);
                    s = s.apply_controlled(lab, photon, |l| (*l == here).then_some(u))?;
                }
            }
        }
        for lab in 0..3 {
            s = s.relabel_clock(lab, |l| {
                let speed = if (l.acceleration.abs() - timing.alpha1).abs() <= quantum::TAU_TOL { Speed::Slow } else { Speed::Fast };
                ClockLabel { tau: timing.tau_star, rest_epoch: t_m - timing.meeting_time(speed), ..*l }
            })?;
        }
        Ok(s)
    };
    let final_state = evolve(&initial_state)?;
    let branch_states = [evolve(&b1)?.scaled(C64::new(control[0], 0.0)), evolve(&b2)?.scaled(C64::new(control[1], 0.0))];

    let p1 = sc.definite_order_prediction(0, &psi_l, &psi_r)?;
    let p2 = sc.definite_order_prediction(1, &psi_l, &psi_r)?;
    let outcomes = assemble_outcomes(
        postselect(&final_state, 3)?,
        postselect(&branch_states[0], 3)?,
        postselect(&branch_states[1], 3)?,
        [p1.amplitudes(), p2.amplitudes()],
        control,
    );
    let outcomes = outcomes.into_iter().map(|o| bell_diagnostics(o, &sc.settings)).collect::<Result<Vec<_>>>()?;
    let coherent = BellResult {
        timing,
        t_m,
        visibility: 1.0,
        labels: sc.labels,
        initial_state,
        branch_states,
        final_state,
        outcomes,
        settings: sc.settings.clone(),
    };
    apply_visibility(&coherent, sc.visibility)
}

/// Results whose two order branches can be recombined with reduced
/// coherence.
pub trait BranchCoherence: Sized {
    fn with_visibility(&self, v: f64) -> Result<Self>;
}

impl BranchCoherence for SwitchResult {
    fn with_visibility(&self, v: f64) -> Result<Self> {
        let outcomes = self.outcomes.iter().map(|o| o.with_visibility(v)).collect();
        Ok(SwitchResult { outcomes, visibility: v, ..self.clone() })
    }
}

impl BranchCoherence for BellResult {
    fn with_visibility(&self, v: f64) -> Result<Self> {
        let outcomes = self
            .outcomes
            .iter()
            .map(|o| bell_diagnostics(o.outcome.with_visibility(v), &self.settings))
            .collect::<Result<Vec<_>>>()?;
        Ok(BellResult { outcomes, visibility: v, ..self.clone() })
    }
}

/// Scales the interference terms between the two order branches by `v`
/// before post-selection. `v = 1` returns the coherent result unchanged;
/// `v = 0` is the classical mixture of the two definite orders.
pub fn apply_visibility<R: BranchCoherence + Clone>(result: &R, v: f64) -> Result<R> {
    validate_visibility(v)?;
    if v == 1.0 {
        return Ok(result.clone());
    }
    result.with_visibility(v)
}

/// CODATA 2018 exact and recommended values.
pub const HBAR: f64 = 1.054_571_817e-34;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Unruh temperature (K) seen at proper acceleration `alpha_si` (m/s²).
pub fn unruh_temperature(alpha_si: f64) -> Result<f64> {
    if !(alpha_si.is_finite() && alpha_si >= 0.0) {
        return Err(ProtocolError::invariant("alpha>=0", format!("alpha = {alpha_si}")));
    }
    Ok(HBAR * alpha_si / (2.0 * std::f64::consts::PI * BOLTZMANN * SPEED_OF_LIGHT))
}

/// Maps an acceleration (m/s²) to the branch visibility it leaves.
pub trait VisibilityModel {
    fn visibility(&self, alpha_si: f64) -> f64;
    fn id(&self) -> String;
}

/// `v = exp(-T(alpha)/t0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalVisibility {
    /// Temperature scale in kelvin.
    pub t0: f64,
}

impl Default for ThermalVisibility {
    fn default() -> Self {
        ThermalVisibility { t0: 1e-3 }
    }
}

impl VisibilityModel for ThermalVisibility {
    fn visibility(&self, alpha_si: f64) -> f64 {
        let t = unruh_temperature(alpha_si).unwrap_or(f64::INFINITY);
        (-t / self.t0).exp()
    }

    fn id(&self) -> String {
        format!("exp(-T/T0), T0={:e} K", self.t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerfectCoherence;

impl VisibilityModel for PerfectCoherence {
    fn visibility(&self, _alpha_si: f64) -> f64 {
        1.0
    }

    fn id(&self) -> String {
        "constant(1)".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnruhReport {
    pub alpha_si: f64,
    pub temperature: f64,
    pub visibility_model: String,
    pub visibility: f64,
}

pub fn unruh_report(alpha_si: f64, model: &dyn VisibilityModel) -> Result<UnruhReport> {
    Ok(UnruhReport {
        alpha_si,
        temperature: unruh_temperature(alpha_si)?,
        visibility_model: model.id(),
        visibility: model.visibility(alpha_si),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha_si: f64,
    pub temperature: f64,
    pub visibility: f64,
    pub chsh_max: f64,
}

/// Unruh temperature, visibility and the resulting best CHSH value of the
/// Bell protocol for each acceleration.
pub fn negligibility_sweep(alphas: &[f64], model: &dyn VisibilityModel, scenario: &BellScenario) -> Result<Vec<SweepRow>> {
    if (model.visibility(0.0) - 1.0).abs() > 1e-15 {
        return Err(ProtocolError::invariant("v_model(0)=1", format!("v(0) = {}", model.visibility(0.0))));
    }
    let mut sorted: Vec<f64> = alphas.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if model.visibility(w[1]) > model.visibility(w[0]) {
            return Err(ProtocolError::invariant(
                "v_model monotone",
                format!("v({}) > v({})", w[1], w[0]),
            ));
        }
    }
    let coherent = run_bell(&BellScenario { visibility: 1.0, ..scenario.clone() })?;
    alphas
        .iter()
        .map(|&alpha| {
            let report = unruh_report(alpha, model)?;
            let result = apply_visibility(&coherent, report.visibility)?;
            let chsh_max = result
                .best_chsh()
                .ok_or_else(|| ProtocolError::invariant("some outcome occurs", "every outcome vanished"))?;
            Ok(SweepRow { alpha_si: alpha, temperature: report.temperature, visibility: report.visibility, chsh_max })
        })
        .collect()
}
