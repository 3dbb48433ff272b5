//! Parameter-plane computations: uniformizing coordinates of the escape
//! regions, parameter rays and their landing points, cusp solving, the
//! census of escape-region centers, the multiplier map of hyperbolic
//! components, and boundary continuation for components and holes.
//!
//! Everything here varies λ.  The square root hidden in the critical value
//! v⁺ = 2√λ is never taken with a fixed branch cut along a path; instead the
//! chosen root is carried continuously from point to point, so λ-paths may
//! wind freely around the origin.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::angle::{is_tau_periodic, tau, Angle};
use crate::boettcher::{dir_log, log_phi_ambiguous, riemann_t, LogPhi, DEFAULT_ESCAPE_MAXITER};
use crate::classify::{classify_fast, shade, ClassKind, ImageBuf, Rect};
use crate::error::{Error, Result};
use crate::map::{
    attracting_cycle_from_critical_orbit, orbit_and_deriv, root_branch, CycleSearch, MapParams,
};
use crate::ray::{aitken_landing, RayKind, RayPolyline};
use crate::zpoly::{zpoly_roots, ZPoly};

/// Modulus at which Φ₀(λ) ≈ 4λ holds to full f64 accuracy; the argument of
/// Φ₀ is anchored here and carried inward along λ-paths.
pub const PHI0_ANCHOR_MODULUS: f64 = 1e6;

/// Small real λ at which λ·Φ₂(λ) matches its limit to ~1e−12; the branch of
/// the (n−2)-th root in Φ₂ is anchored here.
pub const PHI2_ANCHOR_LAMBDA: f64 = 1e-6;

/// Boundary continuations stop at this multiplier/coordinate modulus; the
/// limit points themselves are never claimed.
pub const BOUNDARY_RHO_MAX: f64 = 1.0 - 1e-3;

const PARAM_NEWTON_MAX: usize = 60;
const CARRIER_EVAL_BUDGET: usize = 40_000;

/// A parabolic parameter: λ where sign·f^period has a fixed point of
/// multiplier 1 on the cycle through `parabolic_point`.
#[derive(Clone, Debug)]
pub struct CuspResult {
    pub theta: Angle,
    pub lambda: Complex64,
    /// Period q of the solved system sign·f^q.
    pub period: u32,
    /// +1 or −1, the sign ε in the system ε·f^q(z) = z.
    pub sign: i8,
    pub parabolic_point: Complex64,
    /// (ε·f^q)′ at the parabolic point, ≈ 1.
    pub multiplier: Complex64,
    /// max(|ε f^q(z) − z|, |(ε f^q)′(z) − 1|) at the returned pair.
    pub residual: f64,
}

/// All centers of the escape regions of one level: the λ with
/// f_λ^{k−2}(v⁺) = 0.
#[derive(Clone, Debug)]
pub struct HoleCensus {
    pub n: u32,
    pub level: u32,
    pub centers: Vec<Complex64>,
    /// (2n)^{k−3}·(n−1), the count the census must reach.
    pub expected_count: usize,
    /// False when the root finder or the residual filter lost candidates.
    pub complete: bool,
}

/// Boundary samples of a hyperbolic component or an escape-region hole:
/// λ(s) solving coordinate(λ) = ϱ_max·e^{2πis}.
#[derive(Clone, Debug)]
pub struct ComponentBoundary {
    pub center: Complex64,
    /// Modulus ϱ_max at which the boundary was sampled.
    pub rho_max: f64,
    /// (s, λ(s)) pairs in increasing s ∈ [0, 1).
    pub samples: Vec<(f64, Complex64)>,
    /// |λ(1) − λ(0)| after continuing the full loop back to s = 0.
    pub closure_defect: f64,
    /// Angles s where continuation failed even with step halving.
    pub gaps: Vec<f64>,
}

/// Multiplier data of the attracting cycle: κ = (ε f^k)′ at its fixed
/// point, ρ = (f^p)′ along the full cycle, and the detected (ε, k, p).
#[derive(Clone, Debug)]
pub struct KappaResult {
    pub kappa: Complex64,
    pub rho: Complex64,
    pub epsilon: i8,
    pub k: u32,
    pub period: u32,
}

/// The square root of λ nearest to a previously chosen root, used to keep
/// v⁺ = 2√λ continuous along λ-paths.
fn nearest_sqrt(lambda: Complex64, prev: Complex64) -> Complex64 {
    let s = lambda.sqrt();
    if (s - prev).norm() <= (-s - prev).norm() {
        s
    } else {
        -s
    }
}

// ---------------------------------------------------------------------------
// Argument carrying along λ-paths
// ---------------------------------------------------------------------------

/// Walk a λ-path, carrying a continuously varying imaginary part of a
/// branch-lattice quantity produced by `eval` at each parameter.  Segments
/// are bisected whenever the lattice resolution is ambiguous.  Returns the
/// endpoint lattice data and the carried argument there.
fn carry_along<F>(path: &[Complex64], mu0: Complex64, a0: f64, eval: &F) -> Result<(LogPhi, f64)>
where
    F: Fn(Complex64, Complex64) -> Result<LogPhi>,
{
    struct Walk<'f, F> {
        eval: &'f F,
        evals: usize,
    }
    impl<F> Walk<'_, F>
    where
        F: Fn(Complex64, Complex64) -> Result<LogPhi>,
    {
        fn advance(
            &mut self,
            l0: Complex64,
            mu0: Complex64,
            a0: f64,
            l1: Complex64,
            depth: usize,
        ) -> Result<(LogPhi, Complex64, f64)> {
            self.evals += 1;
            if self.evals > CARRIER_EVAL_BUDGET {
                return Err(Error::Resolution(
                    "parameter continuation exceeded its evaluation budget; refine the path".into(),
                ));
            }
            let mu1 = nearest_sqrt(l1, mu0);
            let lp = (self.eval)(l1, mu1)?;
            if !(lp.spacing > 0.0) {
                return Err(Error::branch(
                    "continuation path hits a pole preimage of the tracked point",
                ));
            }
            let a1 = lp.resolve(a0);
            if (a1 - a0).abs() <= 0.3 * lp.spacing {
                return Ok((lp, mu1, a1));
            }
            if depth >= 48 {
                return Err(Error::Resolution(
                    "parameter step too coarse to disambiguate the branch; refine the path".into(),
                ));
            }
            let mid = 0.5 * (l0 + l1);
            let (_, mum, am) = self.advance(l0, mu0, a0, mid, depth + 1)?;
            self.advance(mid, mum, am, l1, depth + 1)
        }
    }
    let mut walk = Walk { eval, evals: 0 };
    let mut cur = *path
        .first()
        .ok_or_else(|| Error::precondition("empty continuation path"))?;
    let mut mu = mu0;
    let mut a = a0;
    let mut lp_last = (eval)(cur, mu)?;
    for &next in &path[1..] {
        if next == cur {
            continue;
        }
        let (lp, mu1, a1) = walk.advance(cur, mu, a, next, 0)?;
        lp_last = lp;
        mu = mu1;
        a = a1;
        cur = next;
    }
    Ok((lp_last, a))
}

/// Default λ-path for Φ₀: radial at the argument of λ, geometric in modulus
/// from the anchor down (or up) to |λ|, endpoint exactly λ.
fn radial_anchor_path(lambda: Complex64) -> Vec<Complex64> {
    let dir = lambda / lambda.norm();
    let ratio = lambda.norm() / PHI0_ANCHOR_MODULUS;
    let steps = (ratio.ln().abs() * 4.0).ceil().max(1.0) as usize;
    let mut path: Vec<Complex64> = (0..steps)
        .map(|i| dir * PHI0_ANCHOR_MODULUS * ratio.powf(i as f64 / steps as f64))
        .collect();
    path.push(lambda);
    path
}

/// Φ₀(λ) = φ_λ(v⁺)²: the uniformizing coordinate of the unbounded escape
/// region, with |Φ₀| = e^{2G(v⁺)} and the argument carried along
/// `reference_path` (default: radially from modulus 10⁶, where Φ₀ ≈ 4λ).
///
/// The path must start with the critical value inside the direct domain
/// |z| > R and every path point must have an escaping critical orbit.
pub fn phi0(n: u32, lambda: Complex64, reference_path: Option<&[Complex64]>) -> Result<Complex64> {
    let p = MapParams::new(n, lambda)?;
    match classify_fast(&p, DEFAULT_ESCAPE_MAXITER).kind {
        ClassKind::Escape(0) => {}
        ClassKind::Escape(k) => {
            return Err(Error::precondition(format!(
                "lambda lies in an escape region of level {k}, not the unbounded one"
            )))
        }
        ClassKind::NonEscape => {
            return Err(Error::precondition(
                "critical orbit does not escape; lambda is outside every escape region",
            ))
        }
        ClassKind::Undetermined => {
            return Err(Error::precondition(
                "critical orbit dips toward the trap region; lambda is not safely in the \
                 unbounded escape region",
            ))
        }
    }
    let owned;
    let path: &[Complex64] = match reference_path {
        Some(q) => q,
        None => {
            owned = radial_anchor_path(lambda);
            &owned
        }
    };
    let start = *path
        .first()
        .ok_or_else(|| Error::precondition("empty reference path"))?;
    let mu0 = root_branch(start, 2);
    let eval = |l: Complex64, mu: Complex64| -> Result<LogPhi> {
        let pl = MapParams::new(n, l)?;
        log_phi_ambiguous(&pl, 2.0 * mu, DEFAULT_ESCAPE_MAXITER).ok_or_else(|| {
            Error::branch("continuation path leaves the unbounded escape region")
        })
    };
    let lp0 = eval(start, mu0)?;
    if lp0.depth != 0 {
        return Err(Error::precondition(
            "reference path must start with the critical value in the direct domain",
        ));
    }
    let (lp, a) = carry_along(path, mu0, lp0.arg_rep, &eval)?;
    Ok(Complex64::new(2.0 * lp.green, 2.0 * a).exp())
}

/// Φ₂(λ): the uniformizing coordinate of the escape region around λ = 0,
/// satisfying Φ₂^{n−2} = φ_λ(f(v⁺))² with the root branch fixed by
/// λ·Φ₂(λ) → 2^{2n/(2−n)} as λ → 0, carried from a small real anchor.
pub fn phi2(n: u32, lambda: Complex64) -> Result<Complex64> {
    let p = MapParams::new(n, lambda)?;
    if p.eval(p.critical_values().0).norm() <= p.inner_radius {
        return Err(Error::precondition(
            "f(v⁺) sits in the inner disk: lambda is deeper than level 2",
        ));
    }
    let anchor = Complex64::new(PHI2_ANCHOR_LAMBDA, 0.0);
    let target_log = lambda.norm().ln() + Complex64::new(0.0, 1.0) * lambda.arg();
    let anchor_log = Complex64::new(PHI2_ANCHOR_LAMBDA.ln(), 0.0);
    let steps = 64;
    let mut path: Vec<Complex64> = (0..steps)
        .map(|i| {
            let s = i as f64 / steps as f64;
            (anchor_log * (1.0 - s) + target_log * s).exp()
        })
        .collect();
    path.push(lambda);
    let eval = |l: Complex64, mu: Complex64| -> Result<LogPhi> {
        let pl = MapParams::new(n, l)?;
        let w = pl.eval(2.0 * mu);
        if !w.is_finite() {
            return Err(Error::branch("critical value hits the pole on the path"));
        }
        log_phi_ambiguous(&pl, w, DEFAULT_ESCAPE_MAXITER)
            .ok_or_else(|| Error::branch("f(v⁺) stops escaping along the continuation path"))
    };
    let mu0 = anchor.sqrt();
    let lp0 = eval(anchor, mu0)?;
    if lp0.depth != 0 {
        return Err(Error::precondition(
            "anchor parameter does not place f(v⁺) in the direct domain",
        ));
    }
    let (lp, a) = carry_along(&path, mu0, lp0.arg_rep, &eval)?;
    let e = 2.0 / (n as f64 - 2.0);
    Ok(Complex64::new(e * lp.green, e * a).exp())
}

/// Φ_H(λ) = ψ_λ(f^{k−2}(v⁺)): the uniformizing coordinate of a level-k
/// escape-region hole, k ≥ 3.  The caller supplies the level; the value is
/// meaningful only when λ lies in such a hole, and the trap-component
/// coordinate errors out otherwise.
pub fn phi_h(p: &MapParams, level: u32) -> Result<Complex64> {
    if level < 3 {
        return Err(Error::precondition("hole coordinates exist for levels k >= 3"));
    }
    let (v, _) = p.critical_values();
    let mut w = v;
    for _ in 0..(level - 2) {
        w = p.eval(w);
        if !w.is_finite() {
            return Err(Error::domain(
                "critical orbit hits the pole before reaching the trap component",
            ));
        }
    }
    riemann_t(p, w, None)
}

// ---------------------------------------------------------------------------
// Parameter rays
// ---------------------------------------------------------------------------

/// log Φ₀ and d(log Φ₀)/dλ at one parameter, with the branch lattice of the
/// imaginary part kept explicit.
struct Phi0Node {
    green2: f64,
    arg_rep2: f64,
    spacing2: f64,
    dlog: Complex64,
}

fn phi0_node(n: u32, lambda: Complex64, mu: Complex64, maxiter: usize) -> Result<Phi0Node> {
    let p = MapParams::new(n, lambda)?;
    let mut w = 2.0 * mu;
    let mut t = mu.finv();
    let mut m = 0usize;
    while w.norm() <= p.escape_radius {
        if m >= maxiter || w == Complex64::new(0.0, 0.0) || !w.is_finite() {
            return Err(Error::no_convergence(
                "critical orbit did not reach the direct domain",
                w.norm(),
            ));
        }
        t = p.deriv(w)? * t + p.dlambda(w);
        w = p.eval(w);
        m += 1;
    }
    let d = dir_log(&p, w);
    let scale = (p.n as f64).powi(-(m as i32));
    let val = d.value();
    Ok(Phi0Node {
        green2: 2.0 * scale * val.re,
        arg_rep2: 2.0 * scale * val.im,
        spacing2: 2.0 * std::f64::consts::TAU * scale,
        dlog: 2.0 * scale * (d.deriv * t + d.dlambda),
    })
}

fn resolve_to(rep: f64, spacing: f64, target: f64) -> f64 {
    if !(spacing > 0.0) || !spacing.is_finite() {
        return rep;
    }
    rep + ((target - rep) / spacing).round() * spacing
}

/// One Newton solve of log Φ₀(λ) = q + 2πi·t_lift, seeded at `seed` with the
/// square-root branch carried from `mu`.
fn param_ray_newton(
    n: u32,
    q: f64,
    target_im: f64,
    seed: Complex64,
    mu: Complex64,
) -> Result<(Complex64, Complex64)> {
    let mut lam = seed;
    let mut mu = nearest_sqrt(lam, mu);
    let tol = 1e-12 * (1.0 + q.abs() + target_im.abs());
    for _ in 0..PARAM_NEWTON_MAX {
        let node = phi0_node(n, lam, mu, DEFAULT_ESCAPE_MAXITER)?;
        let im = resolve_to(node.arg_rep2, node.spacing2, target_im);
        let err = Complex64::new(node.green2 - q, im - target_im);
        if err.norm() < tol {
            return Ok((lam, mu));
        }
        if node.dlog.norm() < 1e-300 {
            return Err(Error::no_convergence("parameter ray Newton: flat derivative", err.norm()));
        }
        // Newton in log λ: log Φ₀ is asymptotically log-linear in λ, so a
        // multiplicative step survives the large per-node potential drops
        // that an additive step would turn into overshoots past the origin.
        let mut du = err / (node.dlog * lam);
        if du.norm() > 1.5 {
            du *= 1.5 / du.norm();
        }
        lam *= (-du).exp();
        if lam == Complex64::new(0.0, 0.0) || !lam.is_finite() {
            return Err(Error::no_convergence("parameter ray Newton left the plane", err.norm()));
        }
        mu = nearest_sqrt(lam, mu);
    }
    Err(Error::no_convergence("parameter ray Newton", f64::NAN))
}

/// The parameter ray of angle t: λ(r) with Φ₀(λ) = r·e^{2πit}, traced by
/// Newton continuation from the anchor modulus down to `r_min` > 1.
/// Potentials are the moduli r, strictly decreasing; the landing estimate
/// extrapolates the tail.
pub fn trace_param_ray(n: u32, t: &Angle, r_min: f64, steps: usize) -> RayPolyline {
    let tf = t.to_f64();
    let target_im = std::f64::consts::TAU * tf;
    let mut points: Vec<Complex64> = Vec::new();
    let mut potentials: Vec<f64> = Vec::new();
    let mut failure = None;
    if !(r_min > 1.0) {
        failure = Some("r_min must exceed 1".into());
    }
    let q_end = r_min.ln().max(f64::MIN_POSITIVE);
    let mut q = (4.0 * PHI0_ANCHOR_MODULUS).ln();
    let mut qs: Vec<f64> = Vec::new();
    let mut seed = Complex64::from_polar(PHI0_ANCHOR_MODULUS, target_im);
    let mut mu = seed.sqrt();
    while failure.is_none() {
        match param_ray_newton(n, q, target_im, seed, mu) {
            Ok((lam, m)) => {
                points.push(lam);
                potentials.push(q.exp());
                qs.push(q);
                mu = m;
            }
            Err(e) => {
                failure = Some(format!("trace stopped at r = {:.6}: {e}", q.exp()));
                break;
            }
        }
        if q <= q_end {
            break;
        }
        if points.len() >= steps {
            failure = Some(format!("step budget {steps} exhausted before r -> r_min"));
            break;
        }
        let q_next = (q * crate::boettcher::RAY_DESCENT_RATIO).max(q_end);
        // Seeds extrapolate in s = √q: parabolic landings behave like
        // λ ≈ ν + c·s, so polynomial extrapolation in s stays within a
        // branch cell of the true sheet even as the lattice spacing
        // collapses, where extrapolation in q drifts many cells off.
        let s_next = q_next.sqrt();
        let k = points.len();
        seed = if k >= 3 {
            let (s0, s1, s2) = (qs[k - 3].sqrt(), qs[k - 2].sqrt(), qs[k - 1].sqrt());
            let (p0, p1, p2) = (points[k - 3], points[k - 2], points[k - 1]);
            p0 * ((s_next - s1) * (s_next - s2) / ((s0 - s1) * (s0 - s2)))
                + p1 * ((s_next - s0) * (s_next - s2) / ((s1 - s0) * (s1 - s2)))
                + p2 * ((s_next - s0) * (s_next - s1) / ((s2 - s0) * (s2 - s1)))
        } else if k == 2 {
            let (s1, s2) = (qs[0].sqrt(), qs[1].sqrt());
            let w = (s_next - s2) / (s1 - s2);
            points[0] * w + points[1] * (1.0 - w)
        } else {
            points[k - 1]
        };
        q = q_next;
    }
    let landing_estimate = if failure.is_none() {
        aitken_landing(&points)
    } else {
        None
    };
    RayPolyline {
        kind: RayKind::Parameter,
        angle: t.clone(),
        points,
        potentials,
        landing_estimate,
        failure,
    }
}

/// Repeated Δ² extrapolation of a tail: (estimate, last inter-sweep change).
fn nested_aitken(tail: &[Complex64]) -> (Complex64, f64) {
    let mut seq = tail.to_vec();
    let mut best = *seq.last().expect("non-empty tail");
    let mut delta = f64::INFINITY;
    for _ in 0..6 {
        let next = aitken_sweep(&seq);
        let cand = *next.last().unwrap();
        let d = (cand - best).norm();
        if d.is_finite() {
            delta = d;
            best = cand;
        }
        if next.len() < 3 {
            break;
        }
        seq = next;
    }
    (best, delta)
}

/// Gauss–Newton fit of the landing model λ(q) = ν + A·s² + C₄·s⁴ + C₆·s⁶
/// with s = 1/(ln(1/q) + B) to a ray tail, returning (ν, rms residual).
/// Rays landing at parabolic parameters approach their limit at this
/// logarithmic rate, which defeats Δ² acceleration; fitting the model itself
/// recovers the limit.  Odd powers of s are redundant — shifting B already
/// generates them — so the even orders are the independent corrections.
fn log_model_fit(points: &[Complex64], qs: &[f64]) -> Option<(Complex64, f64)> {
    let m = points.len();
    if m < 16 {
        return None;
    }
    let xs: Vec<f64> = qs.iter().map(|&q| (1.0 / q).ln()).collect();
    if xs.iter().any(|x| !x.is_finite() || *x < 1.0) {
        return None;
    }
    let residuals = |u: &[Complex64; 5], ws: &[f64]| -> Option<(Vec<Complex64>, f64)> {
        let mut r = Vec::with_capacity(m);
        let mut norm2 = 0.0;
        for ((x, p), w) in xs.iter().zip(points).zip(ws) {
            let sden = x + u[4];
            if sden.norm() < 0.5 {
                return None;
            }
            let s2 = 1.0 / (sden * sden);
            let ri = (u[0] + (u[1] + (u[2] + u[3] * s2) * s2) * s2 - p) * w;
            norm2 += ri.norm_sqr();
            r.push(ri);
        }
        Some((r, norm2))
    };
    let mut u = [Complex64::new(0.0, 0.0); 5];
    u[0] = *points.last().unwrap();
    {
        let mut g = [[Complex64::new(0.0, 0.0); 2]; 2];
        let mut rhs = [Complex64::new(0.0, 0.0); 2];
        for (x, p) in xs.iter().zip(points) {
            let basis = [Complex64::new(1.0, 0.0), Complex64::new(1.0 / (x * x), 0.0)];
            for i in 0..2 {
                for j in 0..2 {
                    g[i][j] += basis[i].conj() * basis[j];
                }
                rhs[i] += basis[i].conj() * p;
            }
        }
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        if det.norm() < 1e-14 {
            return None;
        }
        u[0] = (rhs[0] * g[1][1] - rhs[1] * g[0][1]) / det;
        u[1] = (g[0][0] * rhs[1] - g[1][0] * rhs[0]) / det;
    }
    let gauss_newton = |mut u: [Complex64; 5], ws: &[f64]| -> Option<[Complex64; 5]> {
        let (mut res, mut res_norm2) = residuals(&u, ws)?;
        for _ in 0..100 {
            let mut h = [[Complex64::new(0.0, 0.0); 5]; 5];
            let mut g = [Complex64::new(0.0, 0.0); 5];
            for (i, (x, w)) in xs.iter().zip(ws).enumerate() {
                let s = 1.0 / (x + u[4]);
                let s2 = s * s;
                let s4 = s2 * s2;
                let jac = [
                    Complex64::new(*w, 0.0),
                    s2 * w,
                    s4 * w,
                    s4 * s2 * w,
                    (-2.0 * u[1] * s2 - 4.0 * u[2] * s4 - 6.0 * u[3] * s4 * s2) * s * w,
                ];
                for r in 0..5 {
                    for c in 0..5 {
                        h[r][c] += jac[r].conj() * jac[c];
                    }
                    g[r] += jac[r].conj() * res[i];
                }
            }
            let du = solve_dense(&mut h.map(|row| row.to_vec()), &mut g.to_vec())?;
            let step_norm = du.iter().map(|d| d.norm_sqr()).sum::<f64>().sqrt();
            let mut scale = 1.0;
            let mut advanced = false;
            for _ in 0..8 {
                let mut cand = u;
                for (c, d) in cand.iter_mut().zip(&du) {
                    *c -= scale * d;
                }
                if let Some((r2, n2)) = residuals(&cand, ws) {
                    if n2 <= res_norm2 {
                        u = cand;
                        res = r2;
                        res_norm2 = n2;
                        advanced = true;
                        break;
                    }
                }
                scale *= 0.5;
            }
            let u_norm = u.iter().map(|v| v.norm()).sum::<f64>();
            if !advanced || step_norm * scale < 1e-14 * (1.0 + u_norm) {
                break;
            }
        }
        if u[0].is_finite() {
            Some(u)
        } else {
            None
        }
    };

    let unit = vec![1.0; m];
    let u1 = gauss_newton(u, &unit)?;
    // Second pass weights each node by (x+B)², i.e. by the reciprocal of the
    // leading tail size: a relative-error fit that favors the deep nodes the
    // extrapolation actually leans on.
    let bre = u1[4].re;
    let mut ws: Vec<f64> = xs.iter().map(|x| (x + bre).max(1.0).powi(2)).collect();
    let wmax = ws.iter().fold(0.0f64, |a, &b| a.max(b));
    for w in &mut ws {
        *w /= wmax;
    }
    let uf = gauss_newton(u1, &ws).unwrap_or(u1);
    let (_, n2) = residuals(&uf, &unit)?;
    Some((uf[0], (n2 / m as f64).sqrt()))
}

/// Solve a small dense complex linear system in place by Gaussian
/// elimination with partial pivoting.
fn solve_dense(m: &mut [Vec<Complex64>], b: &mut [Complex64]) -> Option<Vec<Complex64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))?;
        if m[piv][col].norm() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for j in col..n {
                let upper = m[col][j];
                m[row][j] -= f * upper;
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in row + 1..n {
            acc -= m[row][j] * out[j];
        }
        out[row] = acc / m[row][row];
    }
    if out.iter().all(|v| v.is_finite()) {
        Some(out)
    } else {
        None
    }
}

/// One Δ² sweep over a sequence.
fn aitken_sweep(seq: &[Complex64]) -> Vec<Complex64> {
    if seq.len() < 3 {
        return seq.to_vec();
    }
    seq.windows(3)
        .map(|w| {
            let d1 = w[1] - w[0];
            let d2 = w[2] - w[1];
            let den = d2 - d1;
            if den.norm() < 1e-300 {
                w[2]
            } else {
                w[2] - d2 * d2 / den
            }
        })
        .collect()
}

/// ν(θ): the landing point of the parameter ray of angle θ.  The ray is
/// traced to potential ≈ 1e−9 and the tail extrapolated two ways — repeated
/// Δ², which converges fast when the landing point is repelling, and the
/// logarithmic landing model, which handles parabolic landing points — each
/// with a jackknife stability estimate.  The stabler estimate wins; errors
/// out when neither stabilizes within `tol`.
pub fn nu(n: u32, theta: &Angle, tol: f64) -> Result<Complex64> {
    let ray = trace_param_ray(n, theta, (1e-9f64).exp(), 400);
    if let Some(f) = ray.failure {
        return Err(Error::no_convergence(
            format!("parameter ray for the landing estimate: {f}"),
            f64::NAN,
        ));
    }
    let pts = &ray.points;
    let k = pts.len();
    if k < 48 {
        return Err(Error::Empty("parameter ray tail"));
    }
    let qs: Vec<f64> = ray.potentials.iter().map(|r| r.ln()).collect();

    let (a_full, a_sweep) = nested_aitken(&pts[k - 32..]);
    let (a_jack, _) = nested_aitken(&pts[k - 36..k - 4]);
    let aitken_delta = a_sweep.max((a_full - a_jack).norm());

    let w = k.min(88);
    let mut fit: Option<(Complex64, f64)> = None;
    if let (Some((f0, _)), Some((f1, _)), Some((f2, _))) = (
        log_model_fit(&pts[k - w..], &qs[k - w..]),
        log_model_fit(&pts[k - w..k - 10], &qs[k - w..k - 10]),
        log_model_fit(&pts[k - w + 12..], &qs[k - w + 12..]),
    ) {
        let spread = (f0 - f1).norm().max((f0 - f2).norm());
        fit = Some((f0, spread));
    }

    let (best, delta) = match fit {
        Some((f, fd)) if fd < aitken_delta => (f, fd),
        _ => (a_full, aitken_delta),
    };
    if delta <= tol {
        Ok(best)
    } else {
        Err(Error::no_convergence("ray landing extrapolation", delta))
    }
}

// ---------------------------------------------------------------------------
// Parabolic parameters
// ---------------------------------------------------------------------------

/// Value and derivatives of g = sign·f^q along the orbit of z: the jet
/// (g, g_z, g_λ, g_zz, g_zλ) assembled by forward propagation.
struct CycleJet {
    g: Complex64,
    gz: Complex64,
    glam: Complex64,
    gzz: Complex64,
    gzlam: Complex64,
}

fn cycle_jet(p: &MapParams, z: Complex64, q: u32, sign: i8) -> Result<CycleJet> {
    let mut v = z;
    let mut d = Complex64::new(1.0, 0.0);
    let mut lam = Complex64::new(0.0, 0.0);
    let mut s = Complex64::new(0.0, 0.0);
    let mut m = Complex64::new(0.0, 0.0);
    for _ in 0..q {
        let fp = p.deriv(v)?;
        let fpp = p.second_deriv(v)?;
        let fl = p.dlambda(v);
        let fpl = p.deriv_dlambda(v);
        let s_next = fpp * d * d + fp * s;
        let m_next = (fpp * lam + fpl) * d + fp * m;
        let lam_next = fp * lam + fl;
        let d_next = fp * d;
        v = p.eval(v);
        if !v.is_finite() {
            return Err(Error::domain("cycle orbit hits the pole"));
        }
        d = d_next;
        lam = lam_next;
        s = s_next;
        m = m_next;
    }
    let e = sign as f64;
    Ok(CycleJet {
        g: e * v,
        gz: e * d,
        glam: e * lam,
        gzz: e * s,
        gzlam: e * m,
    })
}

/// Newton in (λ, z) on the system (sign·f^q(z) − z, (sign·f^q)′(z) − mult).
/// Returns (λ, z, residual) on success.
pub fn refine_parabolic(
    n: u32,
    q: u32,
    sign: i8,
    lambda0: Complex64,
    z0: Complex64,
) -> Result<(Complex64, Complex64, f64)> {
    let mut lam = lambda0;
    let mut z = z0;
    let mut last_res = f64::INFINITY;
    for _ in 0..PARAM_NEWTON_MAX {
        let p = MapParams::new(n, lam)?;
        let jet = cycle_jet(&p, z, q, sign)?;
        let f1 = jet.g - z;
        let f2 = jet.gz - Complex64::new(1.0, 0.0);
        let res = f1.norm().max(f2.norm());
        if res < 1e-12 * (1.0 + z.norm()) {
            return Ok((lam, z, res));
        }
        if !res.is_finite() || res > 1e6 * (1.0 + last_res) {
            return Err(Error::no_convergence("parabolic Newton diverged", res));
        }
        last_res = res;
        let a = jet.glam;
        let b = jet.gz - Complex64::new(1.0, 0.0);
        let c = jet.gzlam;
        let d = jet.gzz;
        let det = a * d - b * c;
        if det.norm() < 1e-300 {
            return Err(Error::no_convergence("parabolic Newton: singular Jacobian", res));
        }
        let dlam = (f1 * d - f2 * b) / det;
        let dz = (a * f2 - c * f1) / det;
        lam -= dlam;
        z -= dz;
        if lam == Complex64::new(0.0, 0.0) || !lam.is_finite() || !z.is_finite() {
            return Err(Error::no_convergence("parabolic Newton left the domain", res));
        }
    }
    Err(Error::no_convergence("parabolic Newton", last_res))
}

/// Decide the sign ε of the parabolic system from the angle combinatorics:
/// +1 when θ/2 is τ-periodic of the same period as θ, −1 when its orbit
/// returns to θ/2 + 1/2 instead.
fn parabolic_sign(n: u32, theta: &Angle, period: usize) -> Result<i8> {
    let r = theta
        .rational()
        .ok_or_else(|| Error::precondition("parabolic angles must be exact rationals"))?
        .clone();
    let half = Angle::from_rational(r / num_bigint::BigInt::from(2));
    let mut a = half.clone();
    for _ in 0..period {
        a = tau(n, &a)?;
    }
    let diff = a.rational().unwrap().clone() - half.rational().unwrap().clone();
    if diff.is_integer() {
        return Ok(1);
    }
    if (diff * num_bigint::BigInt::from(2)).is_integer() {
        return Ok(-1);
    }
    Err(Error::precondition(
        "halved angle is not periodic under the doubling combinatorics: no parabolic sign",
    ))
}

/// The parabolic parameter at the landing point of the parameter ray of a
/// τ-periodic angle θ: solves ε·f^q(z) = z with multiplier 1, seeded from
/// the ray landing and the tail of the critical orbit just outside it.
pub fn find_cusp(n: u32, theta: &Angle) -> Result<CuspResult> {
    let period = is_tau_periodic(n, theta)?
        .ok_or_else(|| Error::precondition("theta is not tau-periodic; no cusp lands there"))?;
    let sign_pref = parabolic_sign(n, theta, period)?;
    let ray = trace_param_ray(n, theta, (1e-3f64).exp(), 400);
    let probe = *ray
        .points
        .last()
        .ok_or_else(|| Error::no_convergence("parameter ray trace produced no points", f64::NAN))?;
    let nu_est = ray.landing_estimate.unwrap_or(probe);
    let pp = MapParams::new(n, probe)?;
    let (vp, _) = pp.critical_values();
    let orbit = pp.iterate_orbit(vp, 4000);
    let pre = match orbit.escape_index {
        Some(m) => &orbit.points[..m],
        None => &orbit.points[..],
    };
    let take = (3 * period + 6).min(pre.len());
    let mut seeds: Vec<Complex64> = pre[pre.len() - take..].to_vec();
    seeds.reverse();
    // For even n the half-angle test does not pin the sign; try both,
    // preferred one first.
    let signs: Vec<i8> = if n % 2 == 1 {
        vec![sign_pref]
    } else {
        vec![sign_pref, -sign_pref]
    };
    let mut last_err: Option<Error> = None;
    for &sign in &signs {
        for &z0 in &seeds {
            match refine_parabolic(n, period as u32, sign, nu_est, z0) {
                Ok((lam, z, res)) => {
                    if (lam - nu_est).norm() > 0.1 * (1.0 + nu_est.norm()) {
                        continue;
                    }
                    let p = MapParams::new(n, lam)?;
                    let jet = cycle_jet(&p, z, period as u32, sign)?;
                    return Ok(CuspResult {
                        theta: theta.clone(),
                        lambda: lam,
                        period: period as u32,
                        sign,
                        parabolic_point: z,
                        multiplier: jet.gz,
                        residual: res,
                    });
                }
                Err(e) => last_err = Some(e),
            }
        }
    }
    Err(last_err.unwrap_or_else(|| {
        Error::no_convergence("no parabolic solution from any seed", f64::NAN)
    }))
}

// ---------------------------------------------------------------------------
// Escape-region centers
// ---------------------------------------------------------------------------

/// Numerator polynomial P_{k−2}(λ) of f^{k−2}(v⁺): its roots are exactly
/// the level-k centers.  Built from P₁ = 4ⁿλ^{n−1} + 1, S₁ = 4ⁿλ^{n−2} by
/// P_{j+1} = P_j^{2n} + λ·S_jⁿ, S_{j+1} = P_j^{2n}·S_jⁿ.
fn hole_center_poly(n: u32, k: u32) -> ZPoly {
    let four_n = num_bigint::BigInt::from(4).pow(n);
    let mut pj = ZPoly::monomial(four_n.clone(), n as usize - 1).add(&ZPoly::monomial(1, 0));
    let mut sj = ZPoly::monomial(four_n, n as usize - 2);
    for _ in 0..(k - 3) {
        let p2n = pj.pow(2 * n);
        let sn = sj.pow(n);
        pj = p2n.add(&sn.shift(1));
        sj = p2n.mul(&sn);
    }
    pj
}

/// f^{j}(v⁺) and its λ-derivative, v⁺ on the continuous branch through μ.
fn critical_orbit_jet(p: &MapParams, mu: Complex64, j: u32) -> Result<(Complex64, Complex64)> {
    let mut w = 2.0 * mu;
    let mut t = mu.finv();
    for _ in 0..j {
        t = p.deriv(w)? * t + p.dlambda(w);
        w = p.eval(w);
        if !w.is_finite() {
            return Err(Error::domain("critical orbit hits the pole"));
        }
    }
    Ok((w, t))
}

/// Newton-polish a candidate center of level k: drive f^{k−2}(v⁺) to zero
/// in λ.  Returns the polished λ and the final residual |f^{k−2}(v⁺)|.
fn polish_center(n: u32, k: u32, lambda0: Complex64) -> Result<(Complex64, f64)> {
    let mut lam = lambda0;
    let mut mu = lam.sqrt();
    let mut res = f64::INFINITY;
    for _ in 0..PARAM_NEWTON_MAX {
        let p = MapParams::new(n, lam)?;
        let (w, t) = critical_orbit_jet(&p, mu, k - 2)?;
        res = w.norm();
        if res < 1e-12 {
            return Ok((lam, res));
        }
        if t.norm() < 1e-300 {
            break;
        }
        lam -= w / t;
        if lam == Complex64::new(0.0, 0.0) || !lam.is_finite() {
            return Err(Error::no_convergence("center polish left the plane", res));
        }
        mu = nearest_sqrt(lam, mu);
    }
    if res < 1e-9 {
        Ok((lam, res))
    } else {
        Err(Error::no_convergence("center polish", res))
    }
}

fn sort_centers(centers: &mut [Complex64]) {
    centers.sort_by(|a, b| {
        crate::map::arg_0_2pi(*a)
            .total_cmp(&crate::map::arg_0_2pi(*b))
            .then(a.norm().total_cmp(&b.norm()))
    });
}

/// All level-k centers: the λ ≠ 0 with f_λ^{k−2}(v⁺) = 0.  For k ≤ 5 the
/// orbit condition is cleared into an exact polynomial and all roots are
/// extracted simultaneously; for larger k a multi-start Newton sweep seeded
/// from the previous level's centers is used instead.  Every candidate is
/// polished on the transcendental form and filtered by its residual.
pub fn sierpinski_hole_centers(n: u32, k: u32) -> Result<HoleCensus> {
    if k < 3 {
        return Err(Error::precondition("hole censuses start at level k = 3"));
    }
    let expected = (2 * n as usize).pow(k - 3) * (n as usize - 1);
    let candidates: Vec<Complex64> = if k <= 5 {
        let poly = hole_center_poly(n, k);
        zpoly_roots(&poly, 1e-12)?
    } else {
        let prev = sierpinski_hole_centers(n, k - 1)?;
        let mut seeds = Vec::new();
        for &c in &prev.centers {
            // Higher-level centers cluster around lower-level ones; probe
            // rings of perturbed seeds around each.
            for &r in &[0.05, 0.12, 0.22] {
                for i in 0..(4 * n as usize) {
                    let a = std::f64::consts::TAU * i as f64 / (4 * n as usize) as f64;
                    seeds.push(c * (Complex64::new(1.0, 0.0) + r * Complex64::from_polar(1.0, a)));
                }
            }
        }
        seeds
    };
    let polished: Vec<(Complex64, f64)> = candidates
        .par_iter()
        .filter_map(|&c| polish_center(n, k, c).ok())
        .collect();
    let mut centers: Vec<Complex64> = Vec::new();
    for (lam, res) in polished {
        if res >= 1e-9 {
            continue;
        }
        if centers.iter().all(|&c| (c - lam).norm() > 1e-8) {
            centers.push(lam);
        }
    }
    sort_centers(&mut centers);
    let complete = centers.len() == expected;
    Ok(HoleCensus {
        n,
        level: k,
        centers,
        expected_count: expected,
        complete,
    })
}

// ---------------------------------------------------------------------------
// Multiplier map and boundaries
// ---------------------------------------------------------------------------

/// Multiplier data of the attracting cycle found from the critical orbit:
/// the detected (ε, k, p) with ε = −1 exactly when n is odd and the cycle
/// satisfies f^{p/2}(z) = −z, plus κ = (ε f^k)′ and ρ = (f^p)′.
pub fn multiplier_kappa(p: &MapParams, maxiter: usize) -> Result<KappaResult> {
    match attracting_cycle_from_critical_orbit(p, maxiter) {
        CycleSearch::Escaped => Err(Error::precondition(
            "critical orbit escapes; there is no attracting cycle",
        )),
        CycleSearch::Undetermined => Err(Error::no_convergence(
            "no attracting cycle detected within the iteration budget",
            f64::NAN,
        )),
        CycleSearch::Found(cyc) => {
            let (epsilon, k, period) = if cyc.sign == -1 {
                (-1i8, cyc.period as u32, 2 * cyc.period as u32)
            } else {
                (1i8, cyc.period as u32, cyc.period as u32)
            };
            let (_, rho) = orbit_and_deriv(p, cyc.points[0], period as usize)?;
            Ok(KappaResult {
                kappa: cyc.multiplier,
                rho,
                epsilon,
                k,
                period,
            })
        }
    }
}

/// Continue a boundary solver around the circle of grid angles j/samples,
/// bisecting any segment whose full step fails.  `solve` maps (angle s,
/// seed state) to (λ(s), advanced state).  Returns the grid samples, the
/// closure defect |λ(1) − λ(0)|, and the grid angles that stayed unsolved.
fn sweep_boundary<S, F>(
    samples: usize,
    first_lambda: Complex64,
    mut state: S,
    mut solve: F,
) -> (Vec<(f64, Complex64)>, f64, Vec<f64>)
where
    F: FnMut(f64, &S) -> Result<(Complex64, S)>,
{
    let mut out = vec![(0.0, first_lambda)];
    let mut gaps = Vec::new();
    let mut closure_defect = f64::INFINITY;
    let ds = 1.0 / samples as f64;
    let mut s_cur = 0.0f64;
    for j in 1..=samples {
        let s_target = j as f64 * ds;
        let mut lo = s_cur;
        let mut stack = vec![s_target];
        let mut reached = None;
        while let Some(&top) = stack.last() {
            match solve(top, &state) {
                Ok((lam, st)) => {
                    state = st;
                    lo = top;
                    reached = Some(lam);
                    stack.pop();
                }
                Err(_) => {
                    if stack.len() >= 12 {
                        reached = None;
                        break;
                    }
                    stack.push(0.5 * (lo + top));
                }
            }
        }
        s_cur = s_target;
        match reached {
            Some(lam) if j < samples => out.push((s_target, lam)),
            Some(lam) => closure_defect = (lam - first_lambda).norm(),
            None => gaps.push(s_target),
        }
    }
    (out, closure_defect, gaps)
}

/// Newton in (λ, z) on (sign·f^k(z) − z, (sign·f^k)′(z) − target).
fn solve_multiplier_point(
    n: u32,
    k: u32,
    sign: i8,
    target: Complex64,
    lambda0: Complex64,
    z0: Complex64,
) -> Result<(Complex64, Complex64)> {
    let mut lam = lambda0;
    let mut z = z0;
    for _ in 0..PARAM_NEWTON_MAX {
        let p = MapParams::new(n, lam)?;
        let jet = cycle_jet(&p, z, k, sign)?;
        let f1 = jet.g - z;
        let f2 = jet.gz - target;
        let res = f1.norm().max(f2.norm());
        if res < 1e-12 * (1.0 + z.norm() + target.norm()) {
            return Ok((lam, z));
        }
        let a = jet.glam;
        let b = jet.gz - Complex64::new(1.0, 0.0);
        let c = jet.gzlam;
        let d = jet.gzz;
        let det = a * d - b * c;
        if det.norm() < 1e-300 || !res.is_finite() {
            return Err(Error::no_convergence("multiplier continuation: singular step", res));
        }
        lam -= (f1 * d - f2 * b) / det;
        z -= (a * f2 - c * f1) / det;
        if lam == Complex64::new(0.0, 0.0) || !lam.is_finite() || !z.is_finite() {
            return Err(Error::no_convergence("multiplier continuation left the domain", res));
        }
    }
    Err(Error::no_convergence("multiplier continuation", f64::NAN))
}

/// The critical point closest to being fixed by sign·f^k, used as the
/// cycle seed at a superattracting center.
fn center_critical_point(p: &MapParams, k: u32, sign: i8) -> Result<Complex64> {
    let mut best = None;
    let mut best_d = f64::INFINITY;
    for c in p.critical_points() {
        let mut w = c;
        let mut ok = true;
        for _ in 0..k {
            w = p.eval(w);
            if !w.is_finite() {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        let d = (sign as f64 * w - c).norm();
        if d < best_d {
            best_d = d;
            best = Some(c);
        }
    }
    best.ok_or_else(|| Error::domain("no critical point closes a cycle at the given center"))
}

/// Boundary of the hyperbolic component centered at `center`: for each of
/// `samples` equispaced angles s, the λ with κ(λ) = ϱ_max·e^{2πis}, found
/// by ramping the modulus out from the center and sweeping the angle with
/// adaptive step halving.
pub fn component_boundary(n: u32, center: Complex64, samples: usize) -> Result<ComponentBoundary> {
    if samples < 2 {
        return Err(Error::precondition("need at least 2 boundary samples"));
    }
    let pc = MapParams::new(n, center)?;
    let kap = multiplier_kappa(&pc, 100_000)?;
    if kap.kappa.norm() > 1e-8 {
        return Err(Error::precondition(
            "seed is not a superattracting center (κ != 0)",
        ));
    }
    let (k, sign) = (kap.k, kap.epsilon);
    let z_center = center_critical_point(&pc, k, sign)?;
    let mut lam = center;
    let mut z = z_center;
    for &rho in &[0.05, 0.15, 0.3, 0.5, 0.7, 0.85, 0.95, 0.99, BOUNDARY_RHO_MAX] {
        let target = Complex64::new(rho, 0.0);
        let (l1, z1) = solve_multiplier_point(n, k, sign, target, lam, z)?;
        lam = l1;
        z = z1;
    }
    let (out_samples, closure_defect, gaps) =
        sweep_boundary(samples, lam, (lam, z), |s, &(seed_l, seed_z)| {
            let target = Complex64::from_polar(BOUNDARY_RHO_MAX, std::f64::consts::TAU * s);
            let (l1, z1) = solve_multiplier_point(n, k, sign, target, seed_l, seed_z)?;
            Ok((l1, (l1, z1)))
        });
    Ok(ComponentBoundary {
        center,
        rho_max: BOUNDARY_RHO_MAX,
        samples: out_samples,
        closure_defect,
        gaps,
    })
}

/// Φ_H at the given level with the square-root branch of v⁺ carried through
/// `mu`, for continuation around holes that wind past the branch cut.
fn phi_h_mu(n: u32, level: u32, lambda: Complex64, mu: Complex64) -> Result<Complex64> {
    let p = MapParams::new(n, lambda)?;
    let mut w = 2.0 * mu;
    for _ in 0..(level - 2) {
        w = p.eval(w);
        if !w.is_finite() {
            return Err(Error::domain("critical orbit hits the pole"));
        }
    }
    riemann_t(&p, w, None)
}

/// The branch lattice of Φ_H at λ: (log modulus, argument representative,
/// spacing).  The orbit point is built from the carried square root `mu`.
fn phi_h_lattice(n: u32, level: u32, lambda: Complex64, mu: Complex64) -> Result<(f64, f64, f64)> {
    let p = MapParams::new(n, lambda)?;
    let mut w = 2.0 * mu;
    for _ in 0..(level - 2) {
        w = p.eval(w);
        if !w.is_finite() {
            return Err(Error::domain("critical orbit hits the pole"));
        }
    }
    let lp = crate::boettcher::log_psi_ambiguous(&p, w)
        .ok_or_else(|| Error::branch("the point left the trap component"))?;
    Ok((lp.green, lp.arg_rep, lp.spacing))
}

/// Continue the argument of Φ_H along the λ-segment `from.0 → to`, carrying
/// the square-root branch alongside.  Each sub-step must stay within a third
/// of a branch cell of the carried value; segments that move farther are
/// bisected, so a successful return is branch-true.  Returns
/// (μ, argument, log modulus) at the endpoint.
fn carry_phi_h(
    n: u32,
    level: u32,
    from: (Complex64, Complex64, f64),
    to: Complex64,
) -> Result<(Complex64, f64, f64)> {
    let (mut cur, mut mu, mut a) = from;
    let mut g = f64::NAN;
    let mut stack = vec![to];
    let mut evals = 0usize;
    while let Some(&next) = stack.last() {
        if next == cur {
            stack.pop();
            continue;
        }
        evals += 1;
        if evals > 10_000 {
            return Err(Error::branch("Φ_H continuation exceeded its evaluation budget"));
        }
        let mu_next = nearest_sqrt(next, mu);
        let (g1, rep, spacing) = phi_h_lattice(n, level, next, mu_next)?;
        if !(spacing > 0.0) {
            return Err(Error::branch("Φ_H continuation reached the hole center"));
        }
        let a1 = rep + ((a - rep) / spacing).round() * spacing;
        if (a1 - a).abs() <= 0.3 * spacing {
            cur = next;
            mu = mu_next;
            a = a1;
            g = g1;
            stack.pop();
        } else {
            let mid = 0.5 * (cur + next);
            if mid == cur || mid == next || !a1.is_finite() {
                return Err(Error::branch(
                    "Φ_H continuation could not resolve a branch across a λ-segment",
                ));
            }
            stack.push(mid);
        }
    }
    if g.is_nan() {
        let (g1, _, _) = phi_h_lattice(n, level, cur, mu)?;
        g = g1;
    }
    Ok((mu, a, g))
}

/// Boundary of the level-k hole centered at `center`: λ(s) solving
/// Φ_H(λ) = ϱ_max·e^{2πis}, by secant-free Newton with a finite-difference
/// derivative, ramped out from the center and swept in s.
pub fn hole_boundary(
    n: u32,
    center: Complex64,
    level: u32,
    samples: usize,
) -> Result<ComponentBoundary> {
    if samples < 2 {
        return Err(Error::precondition("need at least 2 boundary samples"));
    }
    let germ_value = |lambda: Complex64, mu: Complex64| -> Result<Complex64> {
        let p = MapParams::new(n, lambda)?;
        let mut w = 2.0 * mu;
        for _ in 0..(level - 2) {
            w = p.eval(w);
            if !w.is_finite() {
                return Err(Error::domain("critical orbit hits the pole"));
            }
        }
        let (g, a, _) = crate::boettcher::riemann_t_parts(&p, w, None)?;
        if g == f64::NEG_INFINITY {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(Complex64::new(g, a).exp())
    };
    // Newton in value space from the hole center to a point of small
    // modulus.  Deep inside the hole the per-call branch resolution is
    // stable; continuation toward the boundary is done by carrying the
    // argument instead.
    let mut lam = center;
    let mut mu = center.sqrt();
    let inner = 0.05;
    {
        let target = Complex64::new(inner, 0.0);
        let mut val = germ_value(lam, mu)?;
        let mut done = false;
        for _ in 0..PARAM_NEWTON_MAX {
            let err = val - target;
            if err.norm() < 1e-12 {
                done = true;
                break;
            }
            let h = 1e-7 * (1.0 + lam.norm());
            let hplus = lam + Complex64::new(h, 0.0);
            let hminus = lam - Complex64::new(h, 0.0);
            let vp = germ_value(hplus, nearest_sqrt(hplus, mu))?;
            let vm = germ_value(hminus, nearest_sqrt(hminus, mu))?;
            let deriv = (vp - vm) / Complex64::new(2.0 * h, 0.0);
            if deriv.norm() < 1e-300 {
                return Err(Error::no_convergence("hole boundary: flat derivative", err.norm()));
            }
            // Trust region: a full step can cross the hole boundary, where
            // the map is no longer defined, so retreat until the stepped
            // point both evaluates and reduces the residual.
            let mut step = err / deriv;
            let mut accepted = false;
            for _ in 0..10 {
                let cand = lam - step;
                if cand != Complex64::new(0.0, 0.0) && cand.is_finite() {
                    let mu_c = nearest_sqrt(cand, mu);
                    if let Ok(v) = germ_value(cand, mu_c) {
                        if (v - target).norm() < err.norm() {
                            lam = cand;
                            mu = mu_c;
                            val = v;
                            accepted = true;
                            break;
                        }
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                return Err(Error::no_convergence("hole boundary: no descent step", err.norm()));
            }
        }
        if !done {
            return Err(Error::no_convergence("hole boundary Newton", f64::NAN));
        }
    }
    let (inner_g, inner_rep, inner_spacing) = phi_h_lattice(n, level, lam, mu)?;
    if !(inner_spacing > 0.0) {
        return Err(Error::branch("no branch lattice at the inner anchor"));
    }
    // The anchor's true argument is that of the solved value, ≈ 0; resolve
    // the lattice representative against it.
    let base = inner_rep - (inner_rep / inner_spacing).round() * inner_spacing;
    let log_rho = BOUNDARY_RHO_MAX.ln();

    // One Newton solve in log Φ_H toward a nearby target; every move of λ —
    // stencil, trial step, accepted step — carries the argument along the
    // segment, so branch truth never rests on a prediction.
    let advance = |st: &(Complex64, Complex64, f64, f64),
                   to_g: f64,
                   to_arg: f64|
     -> Result<(Complex64, Complex64, f64, f64)> {
        let (mut lam, mut mu, mut a, mut g) = *st;
        for _ in 0..PARAM_NEWTON_MAX {
            let err = Complex64::new(g - to_g, a - to_arg);
            if err.norm() < 1e-11 * (1.0 + to_arg.abs() + to_g.abs()) {
                return Ok((lam, mu, a, g));
            }
            let h = 1e-7 * (1.0 + lam.norm());
            let hplus = lam + Complex64::new(h, 0.0);
            let hminus = lam - Complex64::new(h, 0.0);
            let (_, ap, gp) = carry_phi_h(n, level, (lam, mu, a), hplus)?;
            let (_, am, gm) = carry_phi_h(n, level, (lam, mu, a), hminus)?;
            let dlog = Complex64::new(gp - gm, ap - am) / Complex64::new(2.0 * h, 0.0);
            if dlog.norm() < 1e-300 {
                return Err(Error::no_convergence("hole boundary: flat derivative", err.norm()));
            }
            let mut step = err / dlog;
            let mut accepted = false;
            for _ in 0..10 {
                let cand = lam - step;
                if cand != Complex64::new(0.0, 0.0) && cand.is_finite() {
                    if let Ok((mu_c, ac, gc)) = carry_phi_h(n, level, (lam, mu, a), cand) {
                        if Complex64::new(gc - to_g, ac - to_arg).norm() < err.norm() {
                            lam = cand;
                            mu = mu_c;
                            a = ac;
                            g = gc;
                            accepted = true;
                            break;
                        }
                    }
                }
                step *= 0.5;
            }
            if !accepted {
                return Err(Error::no_convergence("hole boundary: no descent step", err.norm()));
            }
        }
        Err(Error::no_convergence("hole boundary Newton", f64::NAN))
    };

    // Ramp the modulus out to the boundary level at fixed argument, then
    // walk the argument in arcs short enough for Newton's trust region.
    let mut state = (lam, mu, base, inner_g);
    for &rho in &[0.15, 0.3, 0.5, 0.7, 0.85, 0.95, 0.99, BOUNDARY_RHO_MAX] {
        state = advance(&state, rho.ln(), base)?;
    }
    let solve_arc = |st: &(Complex64, Complex64, f64, f64),
                     to_arg: f64|
     -> Result<(Complex64, Complex64, f64, f64)> {
        let mut cur = *st;
        for _ in 0..8192 {
            let d = to_arg - cur.2;
            if d.abs() <= 0.2 {
                return advance(&cur, log_rho, to_arg);
            }
            cur = advance(&cur, log_rho, cur.2 + d.signum() * 0.2)?;
        }
        Err(Error::no_convergence("hole boundary arc walk", f64::NAN))
    };

    let anchor = state.0;
    let (out_samples, closure_defect, gaps) = sweep_boundary(samples, anchor, state, |s, st| {
        let to_arg = base + std::f64::consts::TAU * s;
        let st2 = solve_arc(st, to_arg)?;
        Ok((st2.0, st2))
    });
    Ok(ComponentBoundary {
        center,
        rho_max: BOUNDARY_RHO_MAX,
        samples: out_samples,
        closure_defect,
        gaps,
    })
}

// ---------------------------------------------------------------------------
// Rendering and capacity
// ---------------------------------------------------------------------------

/// Per-pixel classification image of the parameter plane: escape level 0 in
/// blues, level 2 in oranges, levels ≥ 3 in greens, non-escaping λ black,
/// undetermined gray.
pub fn render_param_plane(
    n: u32,
    bbox: &Rect,
    res: (usize, usize),
    maxiter: usize,
) -> Result<ImageBuf> {
    let (w, h) = res;
    if w < 2 || h < 2 {
        return Err(Error::precondition("render needs at least 2×2 pixels"));
    }
    let mut img = ImageBuf::new(w, h);
    let rows: Vec<(usize, &mut [u8])> = img.data.chunks_mut(3 * w).enumerate().collect();
    rows.into_par_iter().for_each(|(y, row)| {
        for x in 0..w {
            let re = bbox.re_min + (x as f64 + 0.5) / w as f64 * bbox.width();
            let im = bbox.im_max - (y as f64 + 0.5) / h as f64 * bbox.height();
            let lam = Complex64::new(re, im);
            let rgb = if lam == Complex64::new(0.0, 0.0) {
                [230, 140, 40]
            } else {
                let p = MapParams::new(n, lam).expect("n >= 3 and lambda != 0");
                let cls = classify_fast(&p, maxiter);
                match cls.kind {
                    ClassKind::Escape(0) => {
                        let m = cls.escape_index.unwrap_or(0);
                        shade([70, 110, 230], 1.0 - (m as f64 / 40.0).min(0.75))
                    }
                    ClassKind::Escape(2) => [230, 140, 40],
                    ClassKind::Escape(k) => {
                        shade([60, 200, 90], 1.0 - ((k - 3) as f64 / 8.0).min(0.75))
                    }
                    ClassKind::NonEscape => [0, 0, 0],
                    ClassKind::Undetermined => [128, 128, 128],
                }
            };
            row[3 * x..3 * x + 3].copy_from_slice(&rgb);
        }
    });
    Ok(img)
}

/// Φ₀(λ)/(4λ) at λ = r (real positive) for each radius: the ratios must
/// approach 1 as r grows, witnessing the asymptotic Φ₀(λ) ≈ 4λ.
pub fn capacity_check(n: u32, radii: &[f64]) -> Result<Vec<Complex64>> {
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(Error::precondition("capacity radii must be positive"));
            }
            let lam = Complex64::new(r, 0.0);
            let val = phi0(n, lam, None)?;
            Ok(val / (4.0 * lam))
        })
        .collect()
}



#[cfg(test)]
mod dbg2 {
    use super::*;

    #[test]
    fn dbg_ray_tail() {
        let t = Angle::exact(0, 1).unwrap();
        let ray = trace_param_ray(3, &t, 1.0 + 1e-9, 400);
        println!("failure: {:?}", ray.failure);
        let k = ray.points.len();
        println!("{} points", k);
        for i in (k.saturating_sub(30)..k).step_by(1) {
            let lam = ray.points[i];
            let q = ray.potentials[i].ln();
            println!(
                "q {:10.3e}  lam ({:.12}, {:+.3e})  lam-4/27 {:+.6e}",
                q,
                lam.re,
                lam.im,
                lam.re - 4.0 / 27.0
            );
        }
        let tail: Vec<Complex64> = ray.points[k - 32..].to_vec();
        let mut seq = tail;
        for sweep in 0..6 {
            seq = aitken_sweep(&seq);
            if let Some(last) = seq.last() {
                println!("sweep {sweep}: last ({:.12}, {:+.3e})", last.re, last.im);
            }
        }
    }
}
