//! Polyline representation shared by external, internal, and parameter rays
//! and by cut-ray boundary pieces.

use num_complex::Complex64;

use crate::angle::Angle;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RayKind {
    External,
    Internal,
    Parameter,
    CutRayBoundary,
}

/// An ordered sampling of a ray, together with the potential (Green value or
/// conformal radius) at each point and an optional landing extrapolation.
///
/// A trace that could not be completed carries its partial points plus a
/// `failure` diagnostic instead of an error, so callers can still plot what
/// was found.
#[derive(Clone, Debug)]
pub struct RayPolyline {
    pub kind: RayKind,
    pub angle: Angle,
    pub points: Vec<Complex64>,
    pub potentials: Vec<f64>,
    pub landing_estimate: Option<Complex64>,
    pub failure: Option<String>,
}

impl RayPolyline {
    /// Whether the per-point potentials are strictly monotone (either
    /// direction), which every well-formed trace guarantees.
    pub fn potentials_strictly_monotone(&self) -> bool {
        if self.potentials.len() < 2 {
            return true;
        }
        let inc = self.potentials.windows(2).all(|w| w[0] < w[1]);
        let dec = self.potentials.windows(2).all(|w| w[0] > w[1]);
        inc || dec
    }

    /// Largest consecutive-point gap divided by the median gap; a continuity
    /// guard against branch jumps mid-trace.
    pub fn max_step_over_median(&self) -> f64 {
        if self.points.len() < 3 {
            return 1.0;
        }
        let mut gaps: Vec<f64> = self
            .points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .collect();
        let max = gaps.iter().cloned().fold(0.0, f64::max);
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = gaps[gaps.len() / 2];
        if median == 0.0 {
            return 1.0;
        }
        max / median
    }
}

/// Aitken Δ² extrapolation from the last three points of a geometrically
/// converging tail; falls back to the last point when the differences are
/// degenerate.
pub(crate) fn aitken_landing(points: &[Complex64]) -> Option<Complex64> {
    let k = points.len();
    if k == 0 {
        return None;
    }
    if k < 3 {
        return Some(points[k - 1]);
    }
    let (a, b, c) = (points[k - 3], points[k - 2], points[k - 1]);
    let d1 = b - a;
    let d2 = c - b;
    let denom = d2 - d1;
    if denom.norm() < 1e-300 {
        return Some(c);
    }
    Some(c - d2 * d2 / denom)
}
