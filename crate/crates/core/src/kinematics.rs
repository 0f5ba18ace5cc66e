//! Uniformly accelerated (Rindler) observers and photons in 1+1 Minkowski
//! space, with `c = 1`.
//!
//! A Right-wedge observer with proper acceleration `alpha` follows
//! `t = sinh(alpha tau)/alpha`, `x = cosh(alpha tau)/alpha`; the Left wedge is
//! the mirror image `x -> -x`. Left-wedge questions are answered by mirroring
//! into the Right wedge and mirroring the answer back.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{self, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("{name} must be strictly positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("time {t} precedes the photon emission at t = {emitted}")]
    BeforeEmission { t: f64, emitted: f64 },
    #[error("root search failed: {0}")]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, KinematicsError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: f64,
}

impl Event {
    pub fn new(t: f64, x: f64) -> Self {
        Event { t, x }
    }

    fn mirrored(self) -> Self {
        Event { t: self.t, x: -self.x }
    }

    /// Minkowski interval `-t^2 + x^2` from the origin.
    pub fn interval(&self) -> f64 {
        self.x * self.x - self.t * self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wedge {
    Right,
    Left,
}

impl Wedge {
    pub fn sign(self) -> f64 {
        match self {
            Wedge::Right => 1.0,
            Wedge::Left => -1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Wedge::Right => Wedge::Left,
            Wedge::Left => Wedge::Right,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RindlerWorldline {
    alpha: f64,
    wedge: Wedge,
}

impl RindlerWorldline {
    pub fn new(alpha: f64, wedge: Wedge) -> Result<Self> {
        positive("alpha", alpha)?;
        Ok(RindlerWorldline { alpha, wedge })
    }

    /// Builds the worldline from a signed acceleration: negative values live
    /// in the Left wedge.
    pub fn from_signed(beta: f64) -> Result<Self> {
        let wedge = if beta < 0.0 { Wedge::Left } else { Wedge::Right };
        Self::new(beta.abs(), wedge)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn wedge(&self) -> Wedge {
        self.wedge
    }

    /// Distance of closest approach to the origin, `1/alpha`.
    pub fn closest_approach(&self) -> f64 {
        1.0 / self.alpha
    }

    fn mirrored(self) -> Self {
        RindlerWorldline { alpha: self.alpha, wedge: self.wedge.opposite() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhotonDirection {
    PlusX,
    MinusX,
}

impl PhotonDirection {
    pub fn sign(self) -> f64 {
        match self {
            PhotonDirection::PlusX => 1.0,
            PhotonDirection::MinusX => -1.0,
        }
    }

    fn reversed(self) -> Self {
        match self {
            PhotonDirection::PlusX => PhotonDirection::MinusX,
            PhotonDirection::MinusX => PhotonDirection::PlusX,
        }
    }
}

/// Null ray `x = emission.x + dir (t - emission.t)` for `t >= emission.t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonWorldline {
    pub emission: Event,
    pub direction: PhotonDirection,
}

impl PhotonWorldline {
    pub fn new(emission: Event, direction: PhotonDirection) -> Result<Self> {
        finite("emission.t", emission.t)?;
        finite("emission.x", emission.x)?;
        Ok(PhotonWorldline { emission, direction })
    }

    fn mirrored(self) -> Self {
        PhotonWorldline { emission: self.emission.mirrored(), direction: self.direction.reversed() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub event: Event,
    /// Proper time of the Rindler observer at `event`.
    pub tau: f64,
}

pub fn rindler_event(w: &RindlerWorldline, tau: f64) -> Result<Event> {
    finite("tau", tau)?;
    let a = w.alpha;
    Ok(Event { t: (a * tau).sinh() / a, x: w.wedge.sign() * (a * tau).cosh() / a })
}

pub fn photon_event(p: &PhotonWorldline, t: f64) -> Result<Event> {
    finite("t", t)?;
    if t < p.emission.t {
        return Err(KinematicsError::BeforeEmission { t, emitted: p.emission.t });
    }
    Ok(Event { t, x: p.emission.x + p.direction.sign() * (t - p.emission.t) })
}

/// Proper time at which a Right-wedge observer receives a left-moving photon
/// emitted at `(0, x0)`: `tau = ln(alpha x0) / alpha`.
///
/// For `alpha x0 < 1` the value is negative: it is the crossing of the
/// backward-extended ray, which happens before `t = 0`.
pub fn reception_proper_time(alpha: f64, x0: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    positive("x0", x0)?;
    Ok((alpha * x0).ln() / alpha)
}

/// Where (if anywhere) the photon crosses the observer's hyperbola.
///
/// Along a null ray `x - dir t` is constant; on a Right-wedge hyperbola
/// `x + t = e^{alpha tau}/alpha` and `x - t = e^{-alpha tau}/alpha`, so the
/// crossing follows in closed form. Crossings before the emission are
/// discarded.
pub fn intersect(p: &PhotonWorldline, w: &RindlerWorldline) -> Option<Intersection> {
    if w.wedge == Wedge::Left {
        return intersect(&p.mirrored(), &w.mirrored()).map(|hit| Intersection {
            event: hit.event.mirrored(),
            tau: hit.tau,
        });
    }
    let a = w.alpha;
    let e = p.emission;
    let tau = match p.direction {
        PhotonDirection::MinusX => {
            let lightcone = e.x + e.t;
            if lightcone <= 0.0 {
                return None;
            }
            (a * lightcone).ln() / a
        }
        PhotonDirection::PlusX => {
            let lightcone = e.x - e.t;
            if lightcone <= 0.0 {
                return None;
            }
            -(a * lightcone).ln() / a
        }
    };
    let event = rindler_event(w, tau).ok()?;
    // allow round-off when the emission sits on the hyperbola itself
    if event.t < e.t - 1e-12 * (1.0 + e.t.abs()) {
        return None;
    }
    Some(Intersection { event, tau })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `X < 1`: only `Y = X`.
    TrivialOnly,
    /// `1 < X < e`: a second root above `X`.
    NontrivialAbove,
    /// `X > e`: a second root below `X`.
    NontrivialBelow,
    /// `X = 1` or `X = e`, where the two roots coalesce.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootClassification {
    /// `X = alpha1 x0`.
    pub x: f64,
    pub regime: Regime,
    /// Roots `Y = alpha2 x0`, trivial root first.
    pub roots: Vec<f64>,
}

impl RootClassification {
    pub fn trivial(&self) -> f64 {
        self.roots[0]
    }

    pub fn nontrivial(&self) -> Option<f64> {
        self.roots.get(1).copied()
    }

    pub fn residual(&self, y: f64) -> f64 {
        (y - equal_tau_map(self.x, y)).abs()
    }
}

/// `Phi_X(Y) = X^(Y/X)`; fixed points are the equal-proper-time solutions.
pub fn equal_tau_map(x: f64, y: f64) -> f64 {
    ((y / x) * x.ln()).exp()
}

const BOUNDARY_TOL: f64 = 1e-12;
const COALESCE_RTOL: f64 = 1e-8;
const BRACKET_EPS: f64 = 1e-8;
const LOWER_EDGE: f64 = 1e-12;
const MAX_DOUBLINGS: usize = 1100;

/// Solves `alpha2 x0 = (alpha1 x0)^(alpha2/alpha1)` for every admissible
/// `Y = alpha2 x0` and classifies the solution set.
pub fn solve_equal_tau_acceleration(alpha1: f64, x0: f64) -> Result<RootClassification> {
    positive("alpha1", alpha1)?;
    positive("x0", x0)?;
    classify_equal_tau_roots(alpha1 * x0)
}

/// Root classification in the reduced variables `X` and `Y`.
pub fn classify_equal_tau_roots(x: f64) -> Result<RootClassification> {
    positive("X", x)?;
    let e = std::f64::consts::E;
    let ln_x = x.ln();
    let g = |y: f64| y - ((y / x) * ln_x).exp();
    let dg = |y: f64| 1.0 - (ln_x / x) * ((y / x) * ln_x).exp();

    let regime = if (x - 1.0).abs() <= BOUNDARY_TOL || (x - e).abs() <= BOUNDARY_TOL * e {
        Regime::Boundary
    } else if x < 1.0 {
        Regime::TrivialOnly
    } else if x < e {
        Regime::NontrivialAbove
    } else {
        Regime::NontrivialBelow
    };

    let mut roots = vec![x];
    let other = match regime {
        Regime::TrivialOnly | Regime::Boundary => None,
        Regime::NontrivialAbove => {
            let lo = x * (1.0 + BRACKET_EPS);
            if g(lo) <= 0.0 {
                // root has merged with Y = X within the coalescence window
                None
            } else {
                let mut hi = 2.0 * x;
                let mut n = 0;
                while g(hi) > 0.0 {
                    hi *= 2.0;
                    n += 1;
                    if n > MAX_DOUBLINGS || !hi.is_finite() {
                        return Err(NumericsError::NoSignChange { lo, hi, f_lo: g(lo), f_hi: g(hi) }.into());
                    }
                }
                Some(numerics::bisect_newton(g, dg, lo, hi, 1e-6)?)
            }
        }
        Regime::NontrivialBelow => {
            let hi = x * (1.0 - BRACKET_EPS);
            if g(hi) <= 0.0 {
                None
            } else {
                Some(numerics::bisect_newton(g, dg, LOWER_EDGE, hi, 1e-6)?)
            }
        }
    };
    if let Some(y) = other {
        if (y - x).abs() > COALESCE_RTOL * x {
            roots.push(y);
        }
    }
    Ok(RootClassification { x, regime, roots })
}

/// True iff some future-directed signal from `e` reaches the observer.
///
/// The future light cone is bounded by the two null rays leaving `e`; the
/// hyperbola is timelike, so it meets the cone iff it meets one of them.
pub fn can_signal(e: &Event, w: &RindlerWorldline) -> bool {
    [PhotonDirection::PlusX, PhotonDirection::MinusX]
        .into_iter()
        .any(|direction| intersect(&PhotonWorldline { emission: *e, direction }, w).is_some())
}

/// Wedge assignment of observers A and B in one branch of a superposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchWedges {
    pub a: Wedge,
    pub b: Wedge,
}

impl BranchWedges {
    pub fn new(a: Wedge, b: Wedge) -> Self {
        BranchWedges { a, b }
    }

    /// Observers in the same wedge can exchange signals; opposite wedges are
    /// separated by the horizon.
    pub fn connected(&self) -> bool {
        self.a == self.b
    }
}

/// Two-branch configurations, up to mirroring `x -> -x` and exchange of the
/// branches. The mixed classes are distinguished by which observer changes
/// wedge between the branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfigurationClass {
    BothConnected,
    BothDisconnected,
    MixedAMoves,
    MixedBMoves,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationReport {
    pub first_connected: bool,
    pub second_connected: bool,
    pub class: ConfigurationClass,
}

pub fn classify_configuration(first: BranchWedges, second: BranchWedges) -> ConfigurationReport {
    let c1 = first.connected();
    let c2 = second.connected();
    let class = match (c1, c2) {
        (true, true) => ConfigurationClass::BothConnected,
        (false, false) => ConfigurationClass::BothDisconnected,
        _ => {
            // exactly one observer switches wedge when connectivity differs
            if first.a == second.a {
                ConfigurationClass::MixedBMoves
            } else {
                ConfigurationClass::MixedAMoves
            }
        }
    };
    ConfigurationReport { first_connected: c1, second_connected: c2, class }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    finite(name, value)?;
    if value <= 0.0 {
        return Err(KinematicsError::NonPositive { name, value });
    }
    Ok(())
}

fn finite(name: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(KinematicsError::NonFinite { name, value });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn right(alpha: f64) -> RindlerWorldline {
        RindlerWorldline::new(alpha, Wedge::Right).unwrap()
    }

    fn ray(t: f64, x: f64, direction: PhotonDirection) -> PhotonWorldline {
        PhotonWorldline::new(Event::new(t, x), direction).unwrap()
    }

    /// Independent oracle: bisection on the sign change of x_w(t) - x_p(t)
    /// along the observer's branch, parametrized by coordinate time.
    fn crossing_by_bracketing(p: &PhotonWorldline, alpha: f64) -> f64 {
        let gap = |t: f64| (t * t + 1.0 / (alpha * alpha)).sqrt() - (p.emission.x + p.direction.sign() * (t - p.emission.t));
        let mut lo = p.emission.t;
        let mut hi = lo + 1.0;
        while gap(lo).signum() == gap(hi).signum() {
            hi = lo + 2.0 * (hi - lo);
        }
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if gap(m).signum() == gap(lo).signum() {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn rindler_event_examples() {
        assert_eq!(rindler_event(&right(1.0), 0.0).unwrap(), Event::new(0.0, 1.0));
        assert_eq!(rindler_event(&right(2.0), 0.0).unwrap(), Event::new(0.0, 0.5));
        let left = RindlerWorldline::new(1.0, Wedge::Left).unwrap();
        assert_eq!(rindler_event(&left, 0.0).unwrap(), Event::new(0.0, -1.0));
        assert!(rindler_event(&right(1.0), f64::NAN).is_err());
        assert!(RindlerWorldline::new(0.0, Wedge::Right).is_err());
    }

    #[test]
    fn photon_event_examples() {
        let p = ray(0.0, 3.0, PhotonDirection::MinusX);
        assert_eq!(photon_event(&p, 1.0).unwrap(), Event::new(1.0, 2.0));
        assert_eq!(photon_event(&p, 3.0).unwrap(), Event::new(3.0, 0.0));
        let q = ray(0.0, 3.0, PhotonDirection::PlusX);
        assert_eq!(photon_event(&q, 2.0).unwrap(), Event::new(2.0, 5.0));
        assert!(matches!(photon_event(&p, -0.5), Err(KinematicsError::BeforeEmission { .. })));
    }

    #[test]
    fn reception_proper_time_examples() {
        assert!((reception_proper_time(1.0, E).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(reception_proper_time(1.0, 1.0).unwrap(), 0.0);
        let tau = reception_proper_time(E / 2.0, 1.0).unwrap();
        assert!((tau - 0.225_769_687_474_977_6).abs() < 1e-15);
        // geometric oracle
        let t = crossing_by_bracketing(&ray(0.0, 1.0, PhotonDirection::MinusX), E / 2.0);
        let alpha = E / 2.0;
        assert!(((alpha * t).asinh() / alpha - tau).abs() < 1e-12);
        assert!(reception_proper_time(-1.0, 1.0).is_err());
        assert!(reception_proper_time(1.0, 0.0).is_err());
        assert!(reception_proper_time(1.0, 0.5).unwrap() < 0.0);
    }

    #[test]
    fn intersect_examples() {
        let hit = intersect(&ray(0.0, E, PhotonDirection::MinusX), &right(1.0)).unwrap();
        assert!((hit.tau - 1.0).abs() < 1e-14);
        assert!((hit.event.t - 1f64.sinh()).abs() < 1e-14);
        assert!((hit.event.x - 1f64.cosh()).abs() < 1e-14);

        let p = ray(0.0, 0.1, PhotonDirection::PlusX);
        let hit = intersect(&p, &right(1.0)).unwrap();
        let t_oracle = crossing_by_bracketing(&p, 1.0);
        assert!((hit.event.t - t_oracle).abs() < 1e-12);
        assert!((hit.tau - 10f64.ln()).abs() < 1e-14);

        assert!(intersect(&ray(0.0, -5.0, PhotonDirection::MinusX), &right(1.0)).is_none());
    }

    #[test]
    fn intersect_discards_crossings_before_emission() {
        // alpha x0 < 1: the ray already passed the hyperbola before t = 0
        assert!(intersect(&ray(0.0, 0.5, PhotonDirection::MinusX), &right(1.0)).is_none());
    }

    #[test]
    fn left_wedge_is_mirror_of_right() {
        let left = RindlerWorldline::new(1.3, Wedge::Left).unwrap();
        let hit = intersect(&ray(0.0, -2.0, PhotonDirection::PlusX), &left).unwrap();
        let mirror = intersect(&ray(0.0, 2.0, PhotonDirection::MinusX), &right(1.3)).unwrap();
        assert_eq!(hit.tau, mirror.tau);
        assert_eq!(hit.event.x, -mirror.event.x);
    }

    #[test]
    fn equal_tau_examples() {
        let half = solve_equal_tau_acceleration(0.5, 1.0).unwrap();
        assert_eq!(half.regime, Regime::TrivialOnly);
        assert_eq!(half.roots, vec![0.5]);

        let c = classify_equal_tau_roots(E / 2.0).unwrap();
        assert_eq!(c.regime, Regime::NontrivialAbove);
        // frozen from an independent high-precision bisection
        let y = c.nontrivial().unwrap();
        assert!((y - 10.352_092_381_962_311).abs() < 1e-10);
        assert!(c.residual(y) < 1e-10);

        let c = classify_equal_tau_roots(2.0 * E).unwrap();
        assert_eq!(c.regime, Regime::NontrivialBelow);
        let y = c.nontrivial().unwrap();
        assert!((y - 1.695_729_174_064_732_5).abs() < 1e-10);
        assert!(y < 2.0 * E);
    }

    #[test]
    fn boundary_values_report_only_trivial_root() {
        for x in [1.0, E] {
            let c = classify_equal_tau_roots(x).unwrap();
            assert_eq!(c.regime, Regime::Boundary);
            assert_eq!(c.roots, vec![x]);
        }
    }

    #[test]
    fn near_one_upper_root_is_found_far_out() {
        let c = classify_equal_tau_roots(1.0 + 1e-7).unwrap();
        let y = c.nontrivial().unwrap();
        assert!(y > 1e6, "root {y}");
        assert!(c.residual(y) <= 1e-10 * y);
    }

    #[test]
    fn equal_tau_rejects_nonpositive() {
        assert!(solve_equal_tau_acceleration(0.0, 1.0).is_err());
        assert!(solve_equal_tau_acceleration(1.0, -1.0).is_err());
    }

    #[test]
    fn can_signal_examples() {
        let w = right(1.0);
        assert!(can_signal(&Event::new(0.0, 2.0), &w));
        assert!(!can_signal(&Event::new(0.0, -2.0), &w));
        assert!(can_signal(&Event::new(-3.0, 0.0), &w));
    }

    #[test]
    fn configuration_examples() {
        use Wedge::*;
        let r = classify_configuration(BranchWedges::new(Right, Left), BranchWedges::new(Right, Right));
        assert!(!r.first_connected && r.second_connected);
        assert_eq!(r.class, ConfigurationClass::MixedBMoves);
        let r = classify_configuration(BranchWedges::new(Right, Right), BranchWedges::new(Right, Right));
        assert_eq!(r.class, ConfigurationClass::BothConnected);
        let r = classify_configuration(BranchWedges::new(Left, Right), BranchWedges::new(Right, Left));
        assert_eq!(r.class, ConfigurationClass::BothDisconnected);
        // mirror image of the first example falls in the same class
        let r = classify_configuration(BranchWedges::new(Left, Right), BranchWedges::new(Left, Left));
        assert_eq!(r.class, ConfigurationClass::MixedBMoves);
    }

    proptest! {
        #[test]
        fn hyperbola_invariant(alpha in 0.01f64..50.0, u in -1.0f64..1.0, left in any::<bool>()) {
            let wedge = if left { Wedge::Left } else { Wedge::Right };
            let w = RindlerWorldline::new(alpha, wedge).unwrap();
            // keep alpha tau within +-15 so cosh stays representable
            let tau = 15.0 * u / alpha;
            let e = rindler_event(&w, tau).unwrap();
            let lhs = e.t * e.t - e.x * e.x;
            let scale = e.x * e.x;
            prop_assert!((lhs + 1.0 / (alpha * alpha)).abs() <= 1e-12 * scale.max(1.0 / (alpha * alpha)) * 4.0);
            prop_assert_eq!(e.x.signum(), wedge.sign());
        }

        #[test]
        fn intersection_agrees_with_reception_time(alpha in 0.05f64..20.0, x0 in 0.05f64..20.0) {
            prop_assume!(alpha * x0 >= 1.0);
            let hit = intersect(&ray(0.0, x0, PhotonDirection::MinusX), &right(alpha)).unwrap();
            let tau = reception_proper_time(alpha, x0).unwrap();
            prop_assert!((hit.tau - tau).abs() <= 1e-10 * tau.abs().max(1.0));
            let on_photon = photon_event(&ray(0.0, x0, PhotonDirection::MinusX), hit.event.t).unwrap();
            prop_assert!((on_photon.x - hit.event.x).abs() <= 1e-10 * x0.max(1.0));
        }

        #[test]
        fn regimes_hold(x in 0.001f64..30.0) {
            let e = std::f64::consts::E;
            prop_assume!((x - 1.0).abs() > 1e-3 && (x - e).abs() > 1e-3);
            let c = classify_equal_tau_roots(x).unwrap();
            prop_assert_eq!(c.trivial(), x);
            for &y in &c.roots {
                prop_assert!(c.residual(y) < 1e-10 * y.max(1.0));
            }
            if x < 1.0 {
                prop_assert_eq!(c.roots.len(), 1);
            } else if x < e {
                prop_assert!(c.nontrivial().unwrap() > x);
            } else {
                prop_assert!(c.nontrivial().unwrap() < x);
            }
        }

        #[test]
        fn larger_acceleration_curves_more(a1 in 0.01f64..100.0, a2 in 0.01f64..100.0) {
            prop_assume!(a1 < a2);
            prop_assert!(right(a2).closest_approach() < right(a1).closest_approach());
        }

        #[test]
        fn left_wedge_events_cannot_signal_right(t in -50.0f64..50.0, depth in 1e-6f64..50.0, alpha in 0.01f64..10.0) {
            let e = Event::new(t, -t.abs() - depth);
            prop_assert!(!can_signal(&e, &right(alpha)));
        }
    }
}
