//! Plot-ready tables: the three panels of the equal-proper-time map, the
//! hyperbolic worldlines with the photon, and the static-clock proper time
//! along an inward photon near a black hole.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::kinematics::{self, Event, PhotonDirection, PhotonWorldline, RindlerWorldline, Wedge};
use crate::protocols::{AccelerationChoice, ProtocolError, Timing};
use crate::schwarzschild::{SchwarzschildError, SchwarzschildGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FigureId {
    A2,
    Worldlines,
    TauVsR,
}

impl FigureId {
    pub const ALL: [FigureId; 3] = [FigureId::A2, FigureId::Worldlines, FigureId::TauVsR];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::A2 => "A2",
            FigureId::Worldlines => "worldlines",
            FigureId::TauVsR => "tau_vs_r",
        }
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown figure id `{0}` (expected A2, worldlines or tau_vs_r)")]
pub struct UnknownFigure(pub String);

impl FromStr for FigureId {
    type Err = UnknownFigure;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigureId::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownFigure(s.to_string()))
    }
}

/// The three panels: `X = 1/2`, `e/2`, `2e`.
pub const A2_PANELS: [f64; 3] = [0.5, std::f64::consts::E / 2.0, 2.0 * std::f64::consts::E];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A2Row {
    pub x: f64,
    pub y: f64,
    /// `X^(Y/X)`; curves cross the diagonal where `phi == y`.
    pub phi: f64,
}

/// `(X, Y, X^(Y/X))` on `Y = y_max·i/n`, `i = 1..=n`, with `Y = X` inserted
/// exactly in every panel.
pub fn a2_rows(panels: &[f64], y_max: f64, n: usize) -> Vec<A2Row> {
    let mut rows = Vec::with_capacity(panels.len() * (n + 1));
    for &x in panels {
        let mut ys: Vec<f64> = (1..=n).map(|i| y_max * i as f64 / n as f64).collect();
        if !ys.contains(&x) {
            ys.push(x);
        }
        ys.sort_by(f64::total_cmp);
        rows.extend(ys.into_iter().map(|y| A2Row { x, y, phi: x.powf(y / x) }));
    }
    rows
}

pub fn a2_default_rows() -> Vec<A2Row> {
    a2_rows(&A2_PANELS, 12.0, 1200)
}

/// Crossings of `phi` with the diagonal in one panel, other than `Y = X`,
/// counted as sign changes of `phi - y` along the sampled curve.
pub fn a2_nontrivial_crossings(rows: &[A2Row], x: f64) -> usize {
    let signs: Vec<f64> = rows
        .iter()
        .filter(|r| r.x == x)
        .map(|r| r.phi - r.y)
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    changes.saturating_sub(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldlineRow {
    pub series: String,
    pub t: f64,
    pub x: f64,
}

/// Both observers of the equal-proper-time pair in each wedge, sampled in
/// proper time over `[-2 tau*, 2 tau*]`, and the two inward photons up to
/// the second meeting.
pub fn worldline_rows(x0: f64, alpha1: f64, samples: usize) -> Result<Vec<WorldlineRow>, ProtocolError> {
    let timing = Timing::new(x0, alpha1, AccelerationChoice::DERIVE)?;
    let samples = samples.max(2);
    let span = 2.0 * timing.tau_star;
    let mut rows = Vec::new();
    for wedge in [Wedge::Right, Wedge::Left] {
        for (name, alpha) in [("alpha1", timing.alpha1), ("alpha2", timing.alpha2)] {
            let w = RindlerWorldline::new(alpha, wedge)?;
            let series = format!("observer_{}_{name}", wedge_tag(wedge));
            for i in 0..samples {
                let tau = -span + 2.0 * span * i as f64 / (samples - 1) as f64;
                let e = kinematics::rindler_event(&w, tau)?;
                rows.push(WorldlineRow { series: series.clone(), t: e.t, x: e.x });
            }
        }
        let direction = match wedge {
            Wedge::Right => PhotonDirection::MinusX,
            Wedge::Left => PhotonDirection::PlusX,
        };
        let photon = PhotonWorldline::new(Event::new(0.0, wedge.sign() * x0), direction)?;
        let series = format!("photon_{}", wedge_tag(wedge));
        for i in 0..samples {
            let t = timing.t2 * i as f64 / (samples - 1) as f64;
            let e = kinematics::photon_event(&photon, t)?;
            rows.push(WorldlineRow { series: series.clone(), t: e.t, x: e.x });
        }
    }
    Ok(rows)
}

fn wedge_tag(w: Wedge) -> &'static str {
    match w {
        Wedge::Right => "R",
        Wedge::Left => "L",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauRow {
    pub r: f64,
    pub tau: f64,
}

/// Static-clock proper time at the photon's passage over the scan grid.
pub fn tau_vs_r_rows(rs: f64, r0: f64) -> Result<Vec<TauRow>, SchwarzschildError> {
    let g = SchwarzschildGeometry::new(rs)?;
    g.scan_grid(r0)
        .into_iter()
        .map(|r| Ok(TauRow { r, tau: g.lab_proper_time_at_passage(r0, r)? }))
        .collect()
}
