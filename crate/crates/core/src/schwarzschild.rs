//! Static observers outside a Schwarzschild black hole, and the
//! near-horizon match to Rindler observers.
//!
//! Only the radial `(t, r)` sector is modelled. The angular part of the metric
//! (`r^2 dOmega^2`, or `R_S^2 dOmega^2` near the horizon) never enters a
//! computation because all motion here is radial.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::{RindlerWorldline, Wedge};
use crate::numerics::{self, NumericsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchwarzschildError {
    #[error("Schwarzschild radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("radius {r} lies outside the allowed range {range}")]
    OutOfRange { r: f64, range: String },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("R_S/R0 = {ratio} is not below the pair-existence threshold {threshold}")]
    RatioAboveThreshold { ratio: f64, threshold: f64 },
    #[error("hint r1 = {r1} sits at the proper-time maximum; the pair collapses")]
    Degenerate { r1: f64 },
    #[error("tau(r1) = {tau} exceeds the maximum {max} of the proper-time profile")]
    AboveMaximum { tau: f64, max: f64 },
    #[error("no equal-proper-time partner found for r1 = {r1}")]
    NoPartner { r1: f64 },
    #[error("pair residual {residual} exceeds tolerance {tol}")]
    Residual { residual: f64, tol: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

pub type Result<T> = std::result::Result<T, SchwarzschildError>;

/// Schwarzschild exterior with horizon radius `R_S`, in the same length unit
/// as every radius passed to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchwarzschildGeometry {
    rs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryObserver {
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceReport {
    /// Near-horizon proper distance `2 sqrt(R_S (r - R_S))`.
    pub rho: f64,
    /// Matched Rindler acceleration, `1/rho`.
    pub alpha: f64,
    /// `(r - R_S)/R_S`.
    pub epsilon_ratio: f64,
    /// `|a rho - 1|` with `a` the exact static-observer acceleration.
    pub validity: f64,
    /// Rindler time per unit Schwarzschild time, `1/(2 R_S)`.
    pub eta_per_t: f64,
}

impl CorrespondenceReport {
    pub fn rindler_worldline(&self) -> RindlerWorldline {
        RindlerWorldline::new(self.alpha, Wedge::Right).expect("alpha is positive by construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallPair {
    pub r1: f64,
    pub r2: f64,
    pub tau: f64,
    /// `|tau(r1) - tau(r2)| / tau(r1)`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSearch {
    pub r1_hint: Option<f64>,
    pub tol: f64,
    /// Largest `R_S/R0` for which a pair is attempted.
    pub threshold: f64,
}

impl Default for PairSearch {
    fn default() -> Self {
        PairSearch { r1_hint: None, tol: 1e-9, threshold: 1e-4 }
    }
}

/// Where `tau(r)` peaks on `(R_S, R0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProperTimePeak {
    pub r: f64,
    pub tau: f64,
    /// Whether the grid scan saw a single rise-then-fall profile.
    pub unimodal: bool,
}

// below this (r - R_S)/R_S the closed forms lose too many digits
const SERIES_EPS: f64 = 1e-12;
const SCAN_POINTS: usize = 2048;

impl SchwarzschildGeometry {
    pub fn new(rs: f64) -> Result<Self> {
        if !(rs.is_finite() && rs > 0.0) {
            return Err(SchwarzschildError::InvalidRadius(rs));
        }
        Ok(SchwarzschildGeometry { rs })
    }

    pub fn rs(&self) -> f64 {
        self.rs
    }

    fn exterior(&self, r: f64) -> Result<()> {
        if !(r.is_finite() || r == f64::INFINITY) || r <= self.rs {
            return Err(SchwarzschildError::OutOfRange { r, range: format!("({}, inf)", self.rs) });
        }
        Ok(())
    }

    /// `f(r) = 1 - R_S/r`, computed as `(r - R_S)/r`.
    pub fn lapse(&self, r: f64) -> Result<f64> {
        self.exterior(r)?;
        if r.is_infinite() {
            return Ok(1.0);
        }
        Ok((r - self.rs) / r)
    }

    /// Proper acceleration `R_S / (2 r^2 sqrt(f))` of a static observer.
    pub fn proper_acceleration(&self, r: f64) -> Result<f64> {
        let f = self.lapse(r)?;
        Ok(self.rs / (2.0 * r * r * f.sqrt()))
    }

    /// Proper radial distance from the horizon,
    /// `r sqrt(f) + (R_S/2) ln[2r/R_S - 1 + (2r/R_S) sqrt(f)]`.
    pub fn proper_distance(&self, r: f64) -> Result<f64> {
        if r == self.rs {
            return Ok(0.0);
        }
        let f = self.lapse(r)?;
        let rs = self.rs;
        let gap = r - rs;
        if gap / rs < SERIES_EPS {
            // rho = 2 sqrt(R_S eps) (1 + eps/(6 R_S) + ...)
            return Ok(2.0 * (rs * gap).sqrt() * (1.0 + gap / (6.0 * rs)));
        }
        let root_f = f.sqrt();
        // log argument written as 1 + (small) to keep digits near the horizon
        let log_arg_minus_one = 2.0 * gap / rs + 2.0 * (r / rs) * root_f;
        Ok(r * root_f + 0.5 * rs * log_arg_minus_one.ln_1p())
    }

    pub fn rindler_correspondence(&self, obs: &StationaryObserver) -> Result<CorrespondenceReport> {
        let a = self.proper_acceleration(obs.r)?;
        let gap = obs.r - self.rs;
        let rho = 2.0 * (self.rs * gap).sqrt();
        Ok(CorrespondenceReport {
            rho,
            alpha: 1.0 / rho,
            epsilon_ratio: gap / self.rs,
            validity: (a * rho - 1.0).abs(),
            eta_per_t: 1.0 / (2.0 * self.rs),
        })
    }

    fn fall_range(&self, r0: f64, r: f64, closed_top: bool) -> Result<()> {
        let ok = r.is_finite() && r > self.rs && (r < r0 || (closed_top && r == r0));
        if !ok || !(r0.is_finite() && r0 > self.rs) {
            let range = if closed_top { format!("({}, {}]", self.rs, r0) } else { format!("({}, {})", self.rs, r0) };
            return Err(SchwarzschildError::OutOfRange { r, range });
        }
        Ok(())
    }

    /// Coordinate time for a photon emitted inward at `r0` to reach `r`:
    /// `r0 - r + R_S ln[(r0 - R_S)/(r - R_S)]`.
    pub fn photon_fall_time(&self, r0: f64, r: f64) -> Result<f64> {
        self.fall_range(r0, r, true)?;
        Ok(fall_time_unchecked(self.rs, r0, r))
    }

    /// Proper time on the static clock at `r` when the photon passes it.
    pub fn lab_proper_time_at_passage(&self, r0: f64, r: f64) -> Result<f64> {
        self.fall_range(r0, r, false)?;
        Ok(lab_tau_unchecked(self.rs, r0, r))
    }

    /// Locates the maximum of `tau(r)` with a log-spaced scan followed by a
    /// golden-section refinement.
    pub fn proper_time_peak(&self, r0: f64) -> Result<ProperTimePeak> {
        self.fall_range(r0, 0.5 * (self.rs + r0), false)?;
        let grid = self.scan_grid(r0);
        let taus: Vec<f64> = grid.iter().map(|&r| lab_tau_unchecked(self.rs, r0, r)).collect();
        let unimodal = count_direction_changes(&taus) <= 1;
        let imax = taus
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty grid");
        let lo = grid[imax.saturating_sub(1)];
        let hi = grid[(imax + 1).min(grid.len() - 1)];
        let tau = |r: f64| lab_tau_unchecked(self.rs, r0, r);
        // d tau/dr = (R_S t / (2 r^2) - 1) / sqrt(f)
        let slope = |r: f64| self.rs * fall_time_unchecked(self.rs, r0, r) - 2.0 * r * r;
        let r = match numerics::bisect(slope, lo, hi, 0.0) {
            Ok(r) => r,
            Err(_) => numerics::golden_section_max(tau, lo, hi, 1e-12 * hi)?,
        };
        Ok(ProperTimePeak { r, tau: tau(r), unimodal })
    }

    /// Radii `r1 < r2` whose static clocks read the same proper time when the
    /// inward photon from `r0` passes them.
    pub fn find_equal_proper_time_pair(&self, r0: f64, search: &PairSearch) -> Result<FallPair> {
        if !(search.tol > 0.0 && search.tol.is_finite()) {
            return Err(SchwarzschildError::InvalidTolerance(search.tol));
        }
        if !(r0.is_finite() && r0 > self.rs) {
            return Err(SchwarzschildError::OutOfRange { r: r0, range: format!("({}, inf)", self.rs) });
        }
        let ratio = self.rs / r0;
        if ratio >= search.threshold {
            return Err(SchwarzschildError::RatioAboveThreshold { ratio, threshold: search.threshold });
        }
        let rs = self.rs;
        let tau = |r: f64| lab_tau_unchecked(rs, r0, r);
        let peak = self.proper_time_peak(r0)?;

        let r1 = match search.r1_hint {
            Some(h) => {
                self.fall_range(r0, h, false)?;
                h
            }
            None => (10.0 * rs).min((rs * peak.r).sqrt()),
        };
        let tau1 = tau(r1);
        if tau1 > peak.tau * (1.0 + 1e-12) {
            return Err(SchwarzschildError::AboveMaximum { tau: tau1, max: peak.tau });
        }
        if peak.tau - tau1 <= 1e-9 * peak.tau {
            return Err(SchwarzschildError::Degenerate { r1 });
        }

        let target = |r: f64| tau(r) - tau1;
        let r2 = if peak.unimodal {
            let (lo, hi) = if r1 < peak.r { (peak.r, r0) } else { (rs * (1.0 + 1e-12), peak.r) };
            numerics::bisect(target, lo, hi, 0.0)?
        } else {
            self.partner_by_exhaustive_bracketing(r0, r1, &target)?
        };
        let tau2 = tau(r2);
        let residual = (tau1 - tau2).abs() / tau1;
        if residual >= search.tol {
            return Err(SchwarzschildError::Residual { residual, tol: search.tol });
        }
        let (a, b) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        Ok(FallPair { r1: a, r2: b, tau: tau1, residual })
    }

    fn partner_by_exhaustive_bracketing<F: Fn(f64) -> f64>(&self, r0: f64, r1: f64, target: &F) -> Result<f64> {
        let grid = self.scan_grid(r0);
        let values: Vec<f64> = grid.iter().map(|&r| target(r)).collect();
        let mut best: Option<f64> = None;
        for (w, v) in grid.windows(2).zip(values.windows(2)) {
            if v[0].signum() != v[1].signum() && !(w[0] <= r1 && r1 <= w[1]) {
                let r = numerics::bisect(target, w[0], w[1], 0.0)?;
                if (r - r1).abs() > 1e-6 * r1 && best.is_none_or(|b| (r - r1).abs() > (b - r1).abs()) {
                    best = Some(r);
                }
            }
        }
        best.ok_or(SchwarzschildError::NoPartner { r1 })
    }

    /// Geometric grid in `r - R_S` spanning `(R_S, R0)`.
    pub fn scan_grid(&self, r0: f64) -> Vec<f64> {
        let lo = (self.rs * 1e-9).ln();
        let hi = ((r0 - self.rs) * (1.0 - 1e-9)).ln();
        (0..SCAN_POINTS)
            .map(|i| self.rs + (lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64).exp())
            .collect()
    }
}

fn fall_time_unchecked(rs: f64, r0: f64, r: f64) -> f64 {
    r0 - r + rs * ((r0 - rs) / (r - rs)).ln()
}

fn lab_tau_unchecked(rs: f64, r0: f64, r: f64) -> f64 {
    ((r - rs) / r).sqrt() * fall_time_unchecked(rs, r0, r)
}

fn count_direction_changes(values: &[f64]) -> usize {
    let mut changes = 0;
    let mut last = 0.0f64;
    for w in values.windows(2) {
        let d = (w[1] - w[0]).signum();
        if w[1] == w[0] {
            continue;
        }
        if last != 0.0 && d != last {
            changes += 1;
        }
        last = d;
    }
    changes
}
