//! Böttcher coordinate of the basin of infinity, Green's function, external
//! and internal rays, and the Riemann coordinate of the trap component.
//!
//! Near infinity the map is conjugate to z ↦ z^n by a unique φ tangent to the
//! identity, satisfying φ(f(z)) = φ(z)^n.  On the rest of the basin φ is only
//! defined through the orbit: if f^m(z) first enters the direct domain
//! |w| > R, then
//!
//! ```text
//!     log φ(z) = n^(−m) · ( log φ(f^m(z)) + 2πi·k )        for some k ∈ ℤ,
//! ```
//!
//! so the real part (Green's function) is unambiguous while the imaginary
//! part is known only up to the lattice (2π/n^m)·ℤ.  Every routine here keeps
//! that lattice explicit — a [`LogPhi`] value — and resolves it either
//! against a fixed ray angle or by continuity along a path.  Unwrapped real
//! arguments are carried throughout; principal values appear only inside the
//! direct domain where they are correct.

use num_complex::Complex64;

use crate::angle::Angle;
use crate::error::{Error, Result};
use crate::map::{cpowi, MapParams};
use crate::ray::{aitken_landing, RayKind, RayPolyline};

/// Default iteration budget when deciding whether a point escapes.
pub const DEFAULT_ESCAPE_MAXITER: usize = 10_000;
/// Orbit magnitude beyond which all remaining series terms vanish in f64.

/// ln(1+u) for complex u, accurate down to |u| near underflow.
///
/// Splits into a real `ln_1p` for the modulus and an `atan2` for the
/// argument, both of which are stable for tiny u where forming 1+u would
/// lose all precision.
pub(crate) fn ln1p_c(u: Complex64) -> Complex64 {
    let re = 0.5 * (2.0 * u.re + u.norm_sqr()).ln_1p();
    let im = u.im.atan2(1.0 + u.re);
    Complex64::new(re, im)
}

/// exp(s) − 1 for complex s, accurate for tiny s.
pub(crate) fn expm1_c(s: Complex64) -> Complex64 {
    let em = s.re.exp_m1();
    let (sin, cos) = s.im.sin_cos();
    let half = (0.5 * s.im).sin();
    // cos(y) − 1 = −2 sin²(y/2), kept separate to avoid cancellation.
    let re = em * cos - 2.0 * half * half;
    let im = (em + 1.0) * sin;
    Complex64::new(re, im)
}

/// log φ(w) on the direct domain |w| > R, principal branch, split so the
/// tiny series tail is not absorbed into the rounding of Log w.
pub(crate) struct DirLog {
    pub log_w: Complex64,
    /// Σ_{k≥0} n^(−(k+1)) ln(1 + λ f^k(w)^(−2n)), every term of modulus
    /// ≤ 2^(−2n−1) on the direct domain, decaying superexponentially.
    pub series: Complex64,
    pub deriv: Complex64,
    /// ∂(log φ)/∂λ at fixed w, for Newton steps in the parameter.
    pub dlambda: Complex64,
}

impl DirLog {
    pub fn value(&self) -> Complex64 {
        self.log_w + self.series
    }
}

pub(crate) fn dir_log(p: &MapParams, w: Complex64) -> DirLog {
    let n = p.n as i32;
    let mut series = Complex64::new(0.0, 0.0);
    let mut der = Complex64::new(1.0, 0.0) / w;
    let mut dlam = Complex64::new(0.0, 0.0);
    let mut wk = w;
    let mut prod = Complex64::new(1.0, 0.0);
    let mut plam = Complex64::new(0.0, 0.0);
    let mut scale = 1.0 / p.n as f64;
    for _ in 0..64 {
        // wk^(2n) must stay clear of f64 overflow or the division NaN-poisons
        // the series; past this size the term is < 1e−299 anyway.
        let nrm = wk.norm();
        if !nrm.is_finite() || !prod.is_finite() || 2.0 * n as f64 * nrm.ln() > 690.0 {
            break;
        }
        let w2n = cpowi(wk, -2 * n);
        let u = p.lambda * w2n;
        let term = ln1p_c(u) * scale;
        series += term;
        let one = Complex64::new(1.0, 0.0);
        let du = -2.0 * n as f64 * p.lambda * cpowi(wk, -2 * n - 1) * prod;
        der += scale * du / (one + u);
        let dul = w2n - 2.0 * n as f64 * p.lambda * cpowi(wk, -2 * n - 1) * plam;
        dlam += scale * dul / (one + u);
        if term.norm() == 0.0 || term.norm() < 1e-22 * series.norm() {
            break;
        }
        let fp = p.deriv(wk).expect("orbit stays off the pole in the direct domain");
        prod *= fp;
        plam = fp * plam + cpowi(wk, -n);
        wk = p.eval(wk);
        scale /= p.n as f64;
    }
    DirLog {
        log_w: w.ln(),
        series,
        deriv: der,
        dlambda: dlam,
    }
}

/// log φ at an escaping point, with the branch ambiguity kept explicit.
///
/// `green` and one representative of the imaginary part are exact; the true
/// imaginary part is `arg_rep + k·spacing` for some integer k.  Pole
/// preimages (orbits hitting 0 exactly) carry `green = +∞`.
#[derive(Clone, Copy, Debug)]
pub struct LogPhi {
    pub green: f64,
    pub arg_rep: f64,
    /// Lattice spacing 2π/n^depth of the imaginary-part ambiguity.
    pub spacing: f64,
    /// First index m with |f^m(z)| > R.
    pub depth: usize,
}

impl LogPhi {
    /// The lattice representative nearest to `target`.
    pub fn resolve(&self, target: f64) -> f64 {
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return self.arg_rep;
        }
        let k = ((target - self.arg_rep) / self.spacing).round();
        self.arg_rep + k * self.spacing
    }
}

/// log φ(z) up to the branch lattice, or `None` if the orbit of z does not
/// escape within `maxiter` iterations.
pub fn log_phi_ambiguous(p: &MapParams, z: Complex64, maxiter: usize) -> Option<LogPhi> {
    let mut w = z;
    let mut m = 0usize;
    while w.norm() <= p.escape_radius {
        if w == Complex64::new(0.0, 0.0) {
            return Some(LogPhi {
                green: f64::INFINITY,
                arg_rep: 0.0,
                spacing: 0.0,
                depth: m,
            });
        }
        if m >= maxiter {
            return None;
        }
        w = p.eval(w);
        m += 1;
    }
    let val = dir_log(p, w).value();
    let scale = (p.n as f64).powi(-(m.min(i32::MAX as usize) as i32));
    Some(LogPhi {
        green: val.re * scale,
        arg_rep: val.im * scale,
        spacing: std::f64::consts::TAU * scale,
        depth: m,
    })
}

/// log φ together with d(log φ)/dz, for Newton corrections along rays.
pub(crate) struct LogPhiJet {
    pub lp: LogPhi,
    pub dldz: Complex64,
}

pub(crate) fn log_phi_jet(p: &MapParams, z: Complex64, maxiter: usize) -> Option<LogPhiJet> {
    let mut w = z;
    let mut prod = Complex64::new(1.0, 0.0);
    let mut m = 0usize;
    while w.norm() <= p.escape_radius {
        if w == Complex64::new(0.0, 0.0) || m >= maxiter {
            return None;
        }
        prod *= p.deriv(w).ok()?;
        w = p.eval(w);
        m += 1;
    }
    if !prod.is_finite() {
        return None;
    }
    let d = dir_log(p, w);
    let val = d.value();
    let scale = (p.n as f64).powi(-(m.min(i32::MAX as usize) as i32));
    Some(LogPhiJet {
        lp: LogPhi {
            green: val.re * scale,
            arg_rep: val.im * scale,
            spacing: std::f64::consts::TAU * scale,
            depth: m,
        },
        dldz: d.deriv * prod * scale,
    })
}

/// Green's function G(z) = lim n^(−k) log|f^k(z)|, or `None` for orbits that
/// stay bounded through `maxiter` iterations.
pub fn green(p: &MapParams, z: Complex64, maxiter: usize) -> Option<f64> {
    log_phi_ambiguous(p, z, maxiter).map(|lp| lp.green)
}

/// φ(z) on the direct domain |z| > R, where the defining series applies
/// as-is and the principal branch is the right one.
pub fn boettcher(p: &MapParams, z: Complex64) -> Result<Complex64> {
    if !(z.norm() > p.escape_radius) {
        return Err(Error::precondition(format!(
            "boettcher requires |z| > R = {}",
            p.escape_radius
        )));
    }
    let u0 = p.lambda * cpowi(z, -2 * p.n as i32);
    if u0.norm() >= 0.5 {
        return Err(Error::precondition(
            "leading series term not small; point too close to the escape radius",
        ));
    }
    Ok(dir_log(p, z).value().exp())
}

/// log(φ(z)/z) on the direct domain: the bare series tail, free of the Log z
/// part, for asymptotic extractions where φ(z) − z underflows.
pub fn log_phi_over_z(p: &MapParams, z: Complex64) -> Result<Complex64> {
    if !(z.norm() > p.escape_radius) {
        return Err(Error::precondition(format!(
            "log_phi_over_z requires |z| > R = {}",
            p.escape_radius
        )));
    }
    Ok(dir_log(p, z).series)
}

/// Continuation state: an unwrapped Im log φ carried along a path.
struct ArgCarrier<'a> {
    p: &'a MapParams,
    evals: usize,
}

impl ArgCarrier<'_> {
    const MAX_EVALS: usize = 40_000;

    /// Advance the unwrapped argument from `a` at `z0` to the returned value
    /// at `z1`, bisecting the segment whenever the branch resolution is not
    /// clearly within half a lattice cell.
    fn advance(&mut self, z0: Complex64, a: f64, z1: Complex64, depth: usize) -> Result<f64> {
        self.evals += 1;
        if self.evals > Self::MAX_EVALS {
            return Err(Error::Resolution(
                "argument continuation exceeded its evaluation budget; refine the path".into(),
            ));
        }
        let lp = log_phi_ambiguous(self.p, z1, DEFAULT_ESCAPE_MAXITER).ok_or_else(|| {
            Error::Resolution("continuation path leaves the escaping region".into())
        })?;
        let a1 = lp.resolve(a);
        if (a1 - a).abs() <= 0.3 * lp.spacing || lp.spacing == 0.0 {
            return Ok(a1);
        }
        if depth >= 48 {
            return Err(Error::Resolution(
                "path step too coarse to disambiguate the argument branch; refine the path".into(),
            ));
        }
        let mid = 0.5 * (z0 + z1);
        let am = self.advance(z0, a, mid, depth + 1)?;
        self.advance(mid, am, z1, depth + 1)
    }
}

/// φ at any escaping point, branch fixed by continuity along `path`.
///
/// The path must start in the direct domain (|path[0]| > R) and end near z;
/// z itself is appended as the final path point.  Points on the path must
/// escape; segments are bisected automatically when the branch resolution is
/// ambiguous, and an error demands a finer path when bisection cannot settle
/// it.
pub fn boettcher_extended(p: &MapParams, z: Complex64, path: &[Complex64]) -> Result<Complex64> {
    let lp_z = log_phi_ambiguous(p, z, DEFAULT_ESCAPE_MAXITER)
        .ok_or_else(|| Error::precondition("boettcher_extended requires an escaping point"))?;
    if lp_z.depth == 0 {
        return Ok(Complex64::new(lp_z.green, lp_z.arg_rep).exp());
    }
    let start = *path.first().ok_or_else(|| {
        Error::precondition("a nonempty reference path is required outside the direct domain")
    })?;
    if !(start.norm() > p.escape_radius) {
        return Err(Error::precondition(
            "reference path must start in the direct domain |z| > R",
        ));
    }
    let mut a = dir_log(p, start).value().im;
    let mut cur = start;
    let mut carrier = ArgCarrier { p, evals: 0 };
    for &q in path[1..].iter().chain(std::iter::once(&z)) {
        if q == cur {
            continue;
        }
        a = carrier.advance(cur, a, q, 0)?;
        cur = q;
    }
    Ok(Complex64::new(lp_z.green, a).exp())
}

/// Newton-correct z toward log φ(z) = target, resolving the branch lattice
/// against the fixed target argument.
fn newton_to_log_target(
    p: &MapParams,
    target: Complex64,
    seed: Complex64,
) -> Result<Complex64> {
    let mut z = seed;
    let tol = 1e-11 * target.norm().max(1.0);
    for _ in 0..60 {
        let jet = log_phi_jet(p, z, DEFAULT_ESCAPE_MAXITER)
            .ok_or_else(|| Error::no_convergence("ray Newton left the escaping region", f64::NAN))?;
        let val = Complex64::new(jet.lp.green, jet.lp.resolve(target.im));
        let err = val - target;
        if err.norm() < tol {
            return Ok(z);
        }
        if jet.dldz.norm() < 1e-300 {
            return Err(Error::no_convergence("vanishing ray derivative", err.norm()));
        }
        let mut step = err / jet.dldz;
        let cap = 0.3 * z.norm();
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        z -= step;
        if z == Complex64::new(0.0, 0.0) {
            return Err(Error::no_convergence("ray Newton collapsed to the pole", f64::NAN));
        }
    }
    Err(Error::no_convergence("ray Newton stalled", f64::NAN))
}

/// Per-step descent ratio for the Green potential along traced rays.
pub const RAY_DESCENT_RATIO: f64 = 0.840896415253714543; // 2^(−1/4)

/// The external ray R(t) = φ^(−1)((1,∞)e^(2πit)), traced from far out down
/// to Green potential `g_min` by geometric descent with Newton correction.
///
/// Failures along the way (rays pinched near precritical points) truncate
/// the polyline and set the failure flag rather than erroring.
pub fn trace_external_ray(
    p: &MapParams,
    t: &Angle,
    g_min: f64,
    max_steps: usize,
) -> RayPolyline {
    let a = std::f64::consts::TAU * t.to_f64();
    let start_radius = (20.0 * p.escape_radius).max(20.0);
    let g0 = start_radius.ln();
    let mut points: Vec<Complex64> = Vec::new();
    let mut potentials: Vec<f64> = Vec::new();
    let mut failure = None;
    let mut g = g0;
    let mut seed = Complex64::from_polar(g0.exp(), a);
    loop {
        match newton_to_log_target(p, Complex64::new(g, a), seed) {
            Ok(z) => {
                points.push(z);
                potentials.push(g);
            }
            Err(e) => {
                failure = Some(format!("trace stopped at G = {g:.3e}: {e}"));
                break;
            }
        }
        if g <= g_min {
            break;
        }
        if points.len() >= max_steps {
            failure = Some(format!(
                "step budget {max_steps} exhausted before G_min = {g_min:.3e}"
            ));
            break;
        }
        g *= RAY_DESCENT_RATIO;
        let k = points.len();
        seed = if k >= 2 {
            points[k - 1] + (points[k - 1] - points[k - 2]) * RAY_DESCENT_RATIO
        } else {
            points[k - 1]
        };
    }
    let landing_estimate = if failure.is_none() {
        aitken_landing(&points)
    } else {
        None
    };
    RayPolyline {
        kind: RayKind::External,
        angle: t.clone(),
        points,
        potentials,
        landing_estimate,
        failure,
    }
}

/// log ψ(w) up to its branch lattice, from the defining relation
/// ψ(w)^(−n) = φ(f(w)).  `None` if f(w) does not escape.
pub(crate) fn log_psi_ambiguous(p: &MapParams, w: Complex64) -> Option<LogPhi> {
    let lp = log_phi_ambiguous(p, p.eval(w), DEFAULT_ESCAPE_MAXITER)?;
    if lp.green.is_infinite() {
        // f(w) is a pole preimage: ψ(w) = 0 in the limit.
        return Some(LogPhi {
            green: f64::NEG_INFINITY,
            arg_rep: 0.0,
            spacing: 0.0,
            depth: lp.depth,
        });
    }
    let nf = p.n as f64;
    Some(LogPhi {
        green: -lp.green / nf,
        arg_rep: -lp.arg_rep / nf,
        // The inner lattice divides by n, and the free 2πik of the n-th root
        // refines it to 2π/(n·n^depth).
        spacing: lp.spacing / nf,
        depth: lp.depth,
    })
}

fn log_psi_jet(p: &MapParams, w: Complex64) -> Option<(LogPhi, Complex64)> {
    let fw = p.eval(w);
    if !fw.is_finite() {
        return None;
    }
    let jet = log_phi_jet(p, fw, DEFAULT_ESCAPE_MAXITER)?;
    let nf = p.n as f64;
    let lp = LogPhi {
        green: -jet.lp.green / nf,
        arg_rep: -jet.lp.arg_rep / nf,
        spacing: jet.lp.spacing / nf,
        depth: jet.lp.depth,
    };
    let dw = -jet.dldz * p.deriv(w).ok()? / nf;
    Some((lp, dw))
}

/// The germ argument of ψ near the origin: ψ(w) ≈ λ^(−1/n)·w.
fn psi_germ_arg(p: &MapParams, w: Complex64) -> f64 {
    let root = crate::map::root_branch(p.lambda, p.n);
    (w / root).arg()
}

/// Riemann coordinate ψ of the trap component, normalized by ψ(0) = 0 and
/// ψ(w) ≈ λ^(−1/n)·w near the origin.
///
/// The modulus is e^(−G(f(w))/n); the argument branch is selected by the
/// germ on the inner disk and continued along `path` (radial from the inner
/// disk by default).  Requires f(w) to escape, which holds on the trap
/// component whenever it is distinct from the basin.
pub fn riemann_t(p: &MapParams, w: Complex64, path: Option<&[Complex64]>) -> Result<Complex64> {
    let (g, a, _) = riemann_t_parts(p, w, path)?;
    if g == f64::NEG_INFINITY {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(Complex64::new(g, a).exp())
}

/// log ψ(w) split into (log modulus, argument, lattice spacing).  The
/// argument is this call's germ-anchored continuation; callers tracking a
/// branch across nearby calls re-resolve it against their own carried value,
/// which the spacing makes possible.  A log modulus of −∞ encodes ψ = 0.
pub(crate) fn riemann_t_parts(
    p: &MapParams,
    w: Complex64,
    path: Option<&[Complex64]>,
) -> Result<(f64, f64, f64)> {
    if w == Complex64::new(0.0, 0.0) {
        return Ok((f64::NEG_INFINITY, 0.0, 0.0));
    }
    let anchor_radius = p.inner_radius / 10.0;
    let dir = w / w.norm();
    let owned_path: Vec<Complex64>;
    let path: &[Complex64] = match path {
        Some(q) => q,
        None => {
            // Radial path from the anchor circle out to |w|, geometrically
            // spaced so the argument never moves more than a branch cell.
            let steps = 48;
            let ratio = (w.norm() / anchor_radius).max(1e-12);
            owned_path = (0..=steps)
                .map(|i| dir * (anchor_radius * ratio.powf(i as f64 / steps as f64)))
                .collect();
            &owned_path
        }
    };
    let start = *path
        .first()
        .ok_or_else(|| Error::precondition("empty continuation path for riemann_t"))?;
    if start.norm() > p.inner_radius / 2.0 {
        return Err(Error::precondition(
            "riemann_t path must start within the inner disk |w| ≤ r/2",
        ));
    }
    let lp0 = log_psi_ambiguous(p, start)
        .ok_or_else(|| Error::branch("f(w) does not escape at the path start"))?;
    let mut a = lp0.resolve(psi_germ_arg(p, start));
    let mut cur = start;
    let mut evals = 0usize;
    // Walk the path, resolving each lattice against the carried argument,
    // bisecting segments that move more than a third of a cell.
    let mut stack: Vec<Complex64> = path[1..].iter().rev().cloned().collect();
    stack.insert(0, w);
    while let Some(next) = stack.pop() {
        if next == cur {
            continue;
        }
        evals += 1;
        if evals > 40_000 {
            return Err(Error::branch(
                "riemann_t continuation exceeded its evaluation budget",
            ));
        }
        let lp = log_psi_ambiguous(p, next)
            .ok_or_else(|| Error::branch("continuation path leaves the trap component"))?;
        if lp.green == f64::NEG_INFINITY {
            if next == w {
                return Ok((f64::NEG_INFINITY, 0.0, 0.0));
            }
            return Err(Error::branch("continuation path crosses a pole preimage"));
        }
        let a1 = lp.resolve(a);
        if (a1 - a).abs() <= 0.3 * lp.spacing || lp.spacing == 0.0 {
            a = a1;
            cur = next;
        } else {
            let mid = 0.5 * (cur + next);
            if mid == cur || mid == next || !a1.is_finite() {
                return Err(Error::branch(
                    "riemann_t continuation could not resolve a branch across a path segment",
                ));
            }
            stack.push(next);
            stack.push(mid);
        }
    }
    let lp_w = log_psi_ambiguous(p, w).expect("endpoint already evaluated");
    if lp_w.green == f64::NEG_INFINITY {
        return Ok((f64::NEG_INFINITY, 0.0, 0.0));
    }
    Ok((lp_w.green, a, lp_w.spacing))
}

/// The internal ray R_T(t) = ψ^(−1)((0,1)e^(2πit)), traced outward from the
/// origin toward ∂T by Newton continuation; potentials are the conformal
/// radii |ψ|, strictly increasing.
pub fn trace_internal_ray(p: &MapParams, t: &Angle, steps: usize) -> RayPolyline {
    let a = std::f64::consts::TAU * t.to_f64();
    // Radii 1 > s_0 < … < s_end approaching 1 geometrically in −ln s.
    let q0 = -(0.05f64.ln());
    let q_end = 1e-3;
    let root = crate::map::root_branch(p.lambda, p.n);
    let mut points: Vec<Complex64> = Vec::new();
    let mut potentials: Vec<f64> = Vec::new();
    let mut failure = None;
    let mut q = q0;
    let mut seed = root * Complex64::from_polar((-q0).exp(), a);
    loop {
        let target = Complex64::new(-q, a);
        match newton_to_log_psi_target(p, target, seed) {
            Ok(wp) => {
                points.push(wp);
                potentials.push((-q).exp());
            }
            Err(e) => {
                failure = Some(format!("trace stopped at |ψ| = {:.6}: {e}", (-q).exp()));
                break;
            }
        }
        if q <= q_end {
            break;
        }
        if points.len() >= steps {
            failure = Some(format!("step budget {steps} exhausted before |ψ| → 1"));
            break;
        }
        q *= RAY_DESCENT_RATIO;
        let k = points.len();
        seed = if k >= 2 {
            points[k - 1] + (points[k - 1] - points[k - 2]) * RAY_DESCENT_RATIO
        } else {
            points[k - 1]
        };
    }
    let landing_estimate = if failure.is_none() {
        aitken_landing(&points)
    } else {
        None
    };
    RayPolyline {
        kind: RayKind::Internal,
        angle: t.clone(),
        points,
        potentials,
        landing_estimate,
        failure,
    }
}

fn newton_to_log_psi_target(
    p: &MapParams,
    target: Complex64,
    seed: Complex64,
) -> Result<Complex64> {
    let mut w = seed;
    let tol = 1e-11 * target.norm().max(1.0);
    for _ in 0..60 {
        let (lp, dw) = log_psi_jet(p, w)
            .ok_or_else(|| Error::no_convergence("internal ray Newton left the trap", f64::NAN))?;
        let val = Complex64::new(lp.green, lp.resolve(target.im));
        let err = val - target;
        if err.norm() < tol {
            return Ok(w);
        }
        if dw.norm() < 1e-300 {
            return Err(Error::no_convergence("vanishing internal derivative", err.norm()));
        }
        let mut step = err / dw;
        let cap = 0.3 * w.norm();
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        w -= step;
        if w == Complex64::new(0.0, 0.0) {
            return Err(Error::no_convergence("internal Newton collapsed to 0", f64::NAN));
        }
    }
    Err(Error::no_convergence("internal ray Newton stalled", f64::NAN))
}

/// The ray R_U(t) in the level-k preimage component U of the trap: the
/// internal ray R_T(t) pulled back through the inverse branch of f^(k−2)
/// that sends 0 to the precritical point near v⁺.
pub fn pullback_ray_to_u(p: &MapParams, k: usize, t: &Angle) -> Result<RayPolyline> {
    if k < 3 {
        return Err(Error::domain("pullback is defined for hole levels k ≥ 3"));
    }
    let inner = trace_internal_ray(p, t, 400);
    if inner.points.is_empty() {
        return Err(Error::no_convergence("internal ray produced no points", f64::NAN));
    }
    let iterates = k - 2;
    // Anchor: the zero of f^(k−2) near v⁺, the center of U.
    let (v_plus, _) = p.critical_values();
    let anchor = newton_forward_image(p, iterates, Complex64::new(0.0, 0.0), v_plus)?;
    let mut points = Vec::with_capacity(inner.points.len());
    let mut prev = anchor;
    for &w in &inner.points {
        let x = newton_forward_image(p, iterates, w, prev)?;
        points.push(x);
        prev = x;
    }
    let landing_estimate = aitken_landing(&points);
    Ok(RayPolyline {
        kind: RayKind::Internal,
        angle: t.clone(),
        points,
        potentials: inner.potentials.clone(),
        landing_estimate,
        failure: inner.failure.clone(),
    })
}

/// Solve f^iterates(x) = w by damped Newton from `seed`, staying on the
/// branch the seed selects.
fn newton_forward_image(
    p: &MapParams,
    iterates: usize,
    w: Complex64,
    seed: Complex64,
) -> Result<Complex64> {
    let mut x = seed;
    let scale = w.norm().max(1.0);
    for _ in 0..80 {
        let (val, der) = crate::map::orbit_and_deriv(p, x, iterates)?;
        let err = val - w;
        if err.norm() < 1e-12 * scale {
            return Ok(x);
        }
        if der.norm() < 1e-300 {
            return Err(Error::no_convergence("singular pullback derivative", err.norm()));
        }
        let mut step = err / der;
        let cap = 0.5 * x.norm().max(1e-6);
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        x -= step;
    }
    Err(Error::no_convergence("pullback Newton stalled", f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn params(n: u32, re: f64, im: f64) -> MapParams {
        MapParams::new(n, c(re, im)).unwrap()
    }

    #[test]
    fn ln1p_matches_ln_for_moderate_u() {
        for &u in &[c(0.1, 0.05), c(-0.2, 0.15), c(0.0, 0.2)] {
            let a = ln1p_c(u);
            let b = (Complex64::new(1.0, 0.0) + u).ln();
            assert!((a - b).norm() < 1e-15);
        }
        // Tiny u: relative accuracy survives where 1+u would round away.
        let u = c(3e-30, -4e-30);
        let a = ln1p_c(u);
        assert!((a - u).norm() < 1e-45);
    }

    #[test]
    fn expm1_matches_exp_for_moderate_s() {
        for &s in &[c(0.3, -0.2), c(-0.1, 0.4)] {
            let a = expm1_c(s);
            let b = s.exp() - Complex64::new(1.0, 0.0);
            assert!((a - b).norm() < 1e-15);
        }
        let s = c(2e-28, 5e-29);
        assert!((expm1_c(s) - s).norm() < 1e-43);
    }

    #[test]
    fn green_asymptotic_and_functional_equation() {
        let p = params(3, 1.0, 0.0);
        let g = green(&p, c(1e6, 0.0), 100).unwrap();
        assert!((g - 1e6f64.ln()).abs() < 1e-10 * g);

        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        let p = params(3, 0.2, 0.3);
        for _ in 0..50 {
            let z = Complex64::from_polar(
                p.escape_radius * (1.0 + rng.gen::<f64>()),
                rng.gen::<f64>() * std::f64::consts::TAU,
            );
            let gz = green(&p, z, 1000).unwrap();
            let gfz = green(&p, p.eval(z), 1000).unwrap();
            assert!((gfz - 3.0 * gz).abs() < 1e-10 * gfz.max(1.0));
        }
    }

    #[test]
    fn green_none_for_bounded_orbit() {
        let p = params(3, 0.125, 0.0);
        let (vp, _) = p.critical_values();
        assert!(green(&p, vp, 5000).is_none());
    }

    #[test]
    fn green_infinite_on_exact_pole_and_huge_near_it() {
        // The pole itself escapes through infinity with G = ∞.
        let p = params(3, 0.0, 0.125);
        let lp = log_phi_ambiguous(&p, c(0.0, 0.0), 100).unwrap();
        assert!(lp.green.is_infinite());
        // At the hole center f(v⁺) rounds to ~1e−17 rather than exact zero;
        // the Green value through the near-pole is finite but enormous.
        let (vp, _) = p.critical_values();
        let g = green(&p, vp, 100).unwrap();
        assert!(g.is_finite() && g > 5.0, "G = {g}");
    }

    #[test]
    fn boettcher_functional_equation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(22);
        let p = params(3, 2.0, -1.0);
        for _ in 0..100 {
            let z = Complex64::from_polar(
                2.0 * p.escape_radius,
                rng.gen::<f64>() * std::f64::consts::TAU,
            );
            let phi_z = boettcher(&p, z).unwrap();
            let phi_fz = boettcher(&p, p.eval(z)).unwrap();
            let resid = (phi_fz - phi_z.powi(3)).norm() / phi_z.norm().powi(3);
            assert!(resid < 1e-9, "residual {resid}");
        }
    }

    #[test]
    fn boettcher_tangent_to_identity() {
        let p = params(3, 5.0, 3.0);
        let z = c(1e8, 0.0);
        let phi = boettcher(&p, z).unwrap();
        assert!((phi / z - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn boettcher_leading_coefficient() {
        // (φ(z) − z)·z^(2n−1) → λ/n; extracted through the series to dodge
        // the catastrophic cancellation in φ(z) − z itself.
        let p = params(3, 2.0, 0.0);
        let z = c(1e4, 0.0);
        let s = log_phi_over_z(&p, z).unwrap();
        let extracted = expm1_c(s) * cpowi(z, 2 * 3);
        let expected = p.lambda / 3.0;
        assert!(
            (extracted - expected).norm() < 1e-4 * expected.norm(),
            "extracted {extracted}"
        );
    }

    #[test]
    fn boettcher_rotation_equivariance() {
        let p = params(4, 0.7, 0.2);
        let rot = Complex64::from_polar(1.0, std::f64::consts::PI / 4.0);
        for &z in &[c(30.0, 2.0), c(-10.0, 25.0), c(5.0, -40.0)] {
            let a = boettcher(&p, rot * z).unwrap();
            let b = rot * boettcher(&p, z).unwrap();
            assert!((a - b).norm() < 1e-9 * b.norm());
        }
    }

    #[test]
    fn extended_agrees_with_direct() {
        let p = params(3, 0.3, 0.4);
        let z = Complex64::from_polar(3.0 * p.escape_radius, 1.2);
        let a = boettcher(&p, z).unwrap();
        let b = boettcher_extended(&p, z, &[z]).unwrap();
        assert!((a - b).norm() < 1e-9 * a.norm());
    }

    #[test]
    fn extended_reaches_below_direct_domain() {
        // Continue φ down a ray path to a point below R and verify the
        // functional equation against a directly computable image.
        let p = params(3, 0.05, 0.02);
        let ray = trace_external_ray(&p, &Angle::exact(1, 8).unwrap(), 1e-2, 400);
        assert!(ray.failure.is_none());
        let deep = *ray.points.last().unwrap();
        assert!(deep.norm() < p.escape_radius);
        let phi_deep = boettcher_extended(&p, deep, &ray.points).unwrap();
        // The image point sits on the angle-3t ray; its continuation path is
        // the image of the traced ray, which also starts in the direct
        // domain.
        let image_path: Vec<Complex64> = ray.points.iter().map(|&z| p.eval(z)).collect();
        let fz = *image_path.last().unwrap();
        let phi_f = boettcher_extended(&p, fz, &image_path).unwrap();
        assert!((phi_f - phi_deep.powi(3)).norm() < 1e-8 * phi_f.norm().max(1.0));
    }

    #[test]
    fn external_ray_angle_zero_is_real_for_small_real_lambda() {
        let p = params(3, 0.01, 0.0);
        let ray = trace_external_ray(&p, &Angle::exact(1, 1).unwrap(), 1e-6, 400);
        assert!(ray.failure.is_none(), "{:?}", ray.failure);
        assert!(ray.potentials_strictly_monotone());
        for z in &ray.points {
            assert!(z.im.abs() < 1e-9 * z.re.abs().max(1.0), "point {z} off axis");
            assert!(z.re > 0.0);
        }
        // Landing at the real repelling fixed point.
        let landing = ray.landing_estimate.unwrap();
        let mut x = 1.0f64;
        for _ in 0..100 {
            let fx = x.powi(3) + 0.01 / x.powi(3);
            let dfx = 3.0 * x * x - 0.03 / x.powi(4);
            x -= (fx - x) / (dfx - 1.0);
        }
        assert!((landing - c(x, 0.0)).norm() < 1e-6, "landing {landing} vs {x}");
    }

    #[test]
    fn external_ray_maps_to_ray_of_multiplied_angle() {
        let p = params(3, 0.2, 0.2);
        let t = Angle::exact(1, 4).unwrap();
        let nt = Angle::exact(3, 4).unwrap();
        let ray_t = trace_external_ray(&p, &t, 1e-4, 400);
        let ray_nt = trace_external_ray(&p, &nt, 1e-4 * 0.5, 500);
        assert!(ray_t.failure.is_none() && ray_nt.failure.is_none());
        // f maps the G-potential point of R(t) to the 3G point of R(3t);
        // compare against linear interpolation in G along the image ray.
        for (i, &z) in ray_t.points.iter().enumerate() {
            let g_img = 3.0 * ray_t.potentials[i];
            if g_img > ray_nt.potentials[0] || g_img < *ray_nt.potentials.last().unwrap() {
                continue;
            }
            let fz = p.eval(z);
            let mut best = f64::INFINITY;
            for w in ray_nt.points.windows(2) {
                let seg = w[1] - w[0];
                let tpar = ((fz - w[0]) / seg).re.clamp(0.0, 1.0);
                best = best.min((w[0] + seg * tpar - fz).norm());
            }
            assert!(best < 2e-2, "image point {fz} off R(3t) by {best}");
        }
    }

    #[test]
    fn ray_argument_constant_along_trace() {
        let p = params(3, 0.2, 0.2);
        let t = Angle::exact(1, 8).unwrap();
        let ray = trace_external_ray(&p, &t, 1e-5, 400);
        assert!(ray.failure.is_none());
        let target = std::f64::consts::TAU * 0.125;
        for &z in &ray.points {
            let phi = boettcher_extended(&p, z, &ray.points).unwrap();
            let mut d = (phi.arg() - target).rem_euclid(std::f64::consts::TAU);
            if d > std::f64::consts::PI {
                d -= std::f64::consts::TAU;
            }
            assert!(d.abs() < 1e-6, "arg deviation {d}");
        }
    }

    #[test]
    fn psi_germ_and_functional_equation() {
        let p = params(3, 0.0, 0.125);
        // ψ(w)/w → λ^(−1/n): the reciprocal root, as the defining relation
        // ψ(w)^(−n) = φ(f(w)) ≈ λ w^(−n) forces near the origin.
        let inv_root = 1.0 / crate::map::root_branch(p.lambda, 3);
        let w = Complex64::from_polar(p.inner_radius / 100.0, 0.7);
        let psi = riemann_t(&p, w, None).unwrap();
        assert!(
            (psi / w - inv_root).norm() < 1e-6 * inv_root.norm(),
            "ψ(w)/w = {}",
            psi / w
        );
        // Modulus identity |ψ|^(−n) = |φ(f(w))| on a larger point.
        let w = Complex64::from_polar(p.inner_radius * 0.9, 2.1);
        let psi = riemann_t(&p, w, None).unwrap();
        let lp = log_phi_ambiguous(&p, p.eval(w), 10_000).unwrap();
        let lhs = psi.norm().powi(-3);
        let rhs = lp.green.exp();
        assert!((lhs - rhs).abs() < 1e-9 * rhs);
    }

    #[test]
    fn psi_at_center_preimage_vanishes() {
        // At the hole center λ = i/8 the level-3 coordinate feeds
        // w = f(v⁺) ≈ 0 into ψ, which must vanish there.
        let p = params(3, 0.0, 0.125);
        let (vp, _) = p.critical_values();
        let w = p.eval(vp);
        assert!(w.norm() < 1e-15);
        let psi = riemann_t(&p, w, None).unwrap();
        assert!(psi.norm() < 1e-9, "ψ = {psi}");
        assert_eq!(riemann_t(&p, c(0.0, 0.0), None).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn internal_ray_radii_increase() {
        let p = params(3, 0.0, 0.125);
        let ray = trace_internal_ray(&p, &Angle::exact(1, 3).unwrap(), 200);
        assert!(ray.failure.is_none(), "{:?}", ray.failure);
        assert!(ray.potentials_strictly_monotone());
        assert!(ray.potentials[0] < *ray.potentials.last().unwrap());
        // |ψ| at the traced points reproduces the potentials.
        for (i, &w) in ray.points.iter().enumerate() {
            let psi = riemann_t(&p, w, None).unwrap();
            assert!((psi.norm() - ray.potentials[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn pullback_inverts_forward_iteration() {
        let p = params(3, 0.0, 0.125);
        let t = Angle::exact(1, 5).unwrap();
        let inner = trace_internal_ray(&p, &t, 200);
        let pulled = pullback_ray_to_u(&p, 3, &t).unwrap();
        assert_eq!(pulled.points.len(), inner.points.len());
        for (x, w) in pulled.points.iter().zip(inner.points.iter()) {
            assert!((p.eval(*x) - w).norm() < 1e-8);
        }
        // The pullback hugs the critical value, center of U.
        let (vp, _) = p.critical_values();
        assert!((pulled.points[0] - vp).norm() < 0.2);
    }
}
