//! Sector decomposition of the dynamical plane and finite-depth cut-ray
//! approximations.
//!
//! The 2n critical points split the plane into closed sectors S_0..S_n,
//! S_{−1}..S_{−(n−1)} arranged counterclockwise, each bounded by two of the
//! straight rays ℓ_k through the critical points.  For an angle θ whose
//! itinerary s_0, s_1, … avoids the symbols 0 and n, the cut ray Ω^θ is the
//! nested intersection of the pullbacks f^(−k)(S_{s_k} ∪ S_{−s_k}); this
//! module computes depth-d truncations of that intersection as boundary
//! polylines plus sample points of the Cantor part.

use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;

use crate::angle::{self, Angle, Membership};
use crate::map::{arg_0_2pi, root_branch, MapParams};
use crate::ray::{RayKind, RayPolyline};
use crate::{Error, Result};

/// Smallest boundary-polyline diameter kept during pullback; chains below
/// this contribute nothing at the tolerances of interest.
const PRUNE_DIAMETER: f64 = 1e-9;

/// Radial sample count per seed boundary ray.
const SEED_SAMPLES: usize = 48;

/// Offset applied on both sides of a seed ray lying on the excluded real
/// axis in the real-parameter variant.
const REAL_AXIS_OFFSET: f64 = 1e-12;

/// Label of one of the 2n closed sectors: 0..=n counterclockwise starting at
/// the ray through the principal critical point, then −1..=−(n−1) for the
/// centrally symmetric partners of S_1..S_{n−1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SectorIndex(pub i32);

impl SectorIndex {
    /// The centrally symmetric partner: S_0 ↔ S_n and S_k ↔ S_{−k}.
    pub fn antipode(self, n: u32) -> SectorIndex {
        let n = n as i32;
        match self.0 {
            0 => SectorIndex(n),
            k if k == n => SectorIndex(0),
            k => SectorIndex(-k),
        }
    }

    /// Counterclockwise position 0..2n−1 of the sector's lower boundary ray.
    pub fn raw(self, n: u32) -> u32 {
        let k = self.0;
        if k >= 0 {
            k as u32
        } else {
            n + (-k) as u32
        }
    }
}

/// Argument of the boundary ray ℓ_raw.
fn ray_arg(p: &MapParams, raw: u32) -> f64 {
    arg_0_2pi(p.lambda) / (2.0 * p.n as f64) + raw as f64 * PI / p.n as f64
}

/// The sector containing z, with the boundary ray ℓ_k assigned to S_k.
///
/// Callers must keep z off 0 and ∞; for those inputs the result is an
/// arbitrary but deterministic sector.
pub fn sector_of(p: &MapParams, z: Complex64) -> SectorIndex {
    let n = p.n;
    let width = PI / n as f64;
    let base = arg_0_2pi(p.lambda) / (2.0 * n as f64);
    let mut delta = arg_0_2pi(z) - base;
    if delta < 0.0 {
        delta += std::f64::consts::TAU;
    }
    let raw = ((delta / width).floor() as i64).clamp(0, 2 * n as i64 - 1) as i32;
    if raw <= n as i32 {
        SectorIndex(raw)
    } else {
        SectorIndex(-(raw - n as i32))
    }
}

/// Wrap an angle difference into (−π, π].
fn wrap_pi(a: f64) -> f64 {
    let mut x = a % std::f64::consts::TAU;
    if x > PI {
        x -= std::f64::consts::TAU;
    } else if x <= -PI {
        x += std::f64::consts::TAU;
    }
    x
}

/// Whether z lies in the closed sector pair S_s ∪ S_{−s}, with `tol`
/// radians of slack at the boundaries.
fn in_sector_pair(p: &MapParams, z: Complex64, s: i32, tol: f64) -> bool {
    let n = p.n;
    let width = PI / n as f64;
    let mid = ray_arg(p, SectorIndex(s.abs()).raw(n)) + 0.5 * width;
    let d = wrap_pi(arg_0_2pi(z) - mid).abs();
    d.min(PI - d) <= 0.5 * width + tol
}

/// The two solutions y of y² − wy + λ = 0 (the values z^n may take when
/// f(z) = w), computed without cancellation.
fn quadratic_roots(p: &MapParams, w: Complex64) -> (Complex64, Complex64) {
    let disc = (w * w - 4.0 * p.lambda).sqrt();
    let big = if (w.conj() * disc).re >= 0.0 {
        0.5 * (w + disc)
    } else {
        0.5 * (w - disc)
    };
    (big, p.lambda / big)
}

/// All 2n algebraic preimages of w under f, Newton-polished.
fn algebraic_preimages(p: &MapParams, w: Complex64) -> Vec<Complex64> {
    let n = p.n;
    let (y0, y1) = quadratic_roots(p, w);
    let mut out = Vec::with_capacity(2 * n as usize);
    for y in [y0, y1] {
        let principal = root_branch(y, n);
        for j in 0..n {
            let rot = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
            out.push(polish_preimage(p, principal * rot, w));
        }
    }
    out
}

/// Two Newton steps on f(z) = w; skipped near critical points where the
/// derivative degenerates.
fn polish_preimage(p: &MapParams, mut z: Complex64, w: Complex64) -> Complex64 {
    for _ in 0..2 {
        let d = match p.deriv(z) {
            Ok(d) if d.norm() > 1e-300 => d,
            _ => return z,
        };
        let step = (p.eval(z) - w) / d;
        if !step.is_finite() {
            return z;
        }
        z -= step;
    }
    z
}

/// The inverse branch h_ε of f into the interior of the univalent sector
/// S_ε, for ε ∈ {±1, …, ±(n−1)}.
///
/// Defined off the two critical value rays t·v^± (t ≥ 1), where the 2n
/// algebraic preimages avoid the sector boundaries and exactly one falls in
/// int(S_ε).
pub fn inverse_branch(p: &MapParams, eps: SectorIndex, w: Complex64) -> Result<Complex64> {
    let n = p.n;
    if eps.0 == 0 || eps.0.unsigned_abs() >= n {
        return Err(Error::precondition(
            "inverse branches exist only for sector indices ±1..±(n−1)",
        ));
    }
    if !w.is_finite() {
        return Err(Error::precondition("inverse_branch needs a finite argument"));
    }
    let (vp, _) = p.critical_values();
    let q = w / vp;
    if q.im.abs() <= 1e-15 * q.norm() && q.re.abs() >= 1.0 - 1e-15 {
        return Err(Error::branch("w lies on a critical value ray"));
    }
    let width = PI / n as f64;
    let mid = ray_arg(p, eps.raw(n)) + 0.5 * width;
    let mut best: Option<(f64, Complex64)> = None;
    for z in algebraic_preimages(p, w) {
        let d = wrap_pi(arg_0_2pi(z) - mid).abs();
        if best.map_or(true, |(bd, _)| d < bd) {
            best = Some((d, z));
        }
    }
    let (dist, z) = best.expect("2n candidates are always produced");
    if dist > 0.5 * width + 1e-9 {
        return Err(Error::branch(
            "no algebraic preimage fell inside the requested sector",
        ));
    }
    let resid = (p.eval(z) - w).norm();
    if resid > 1e-9 * w.norm().max(1.0) {
        return Err(Error::no_convergence("inverse_branch polish", resid));
    }
    Ok(z)
}

/// A depth-d approximation of the cut ray Ω^θ: boundary polylines of the
/// region ∩_{k≤d} f^(−k)(S_{s_k} ∪ S_{−s_k}) and samples of its Cantor part.
#[derive(Clone, Debug)]
pub struct CutRayApprox {
    pub theta: Angle,
    pub depth: usize,
    pub boundary: Vec<RayPolyline>,
    /// Deepest-chain pullbacks of an interior anchor point; these approach
    /// the Julia-set part of the cut ray as the depth grows.
    pub julia_samples: Vec<Complex64>,
    pub contains_zero_and_infinity: bool,
    /// Unsigned sector symbols |s_0|..|s_depth| driving the membership test.
    pub symbols: Vec<i32>,
    /// Real-parameter variant: membership excludes ℝ* = ℝ∖{0} exactly.
    pub real_axis_excluded: bool,
    /// One line per pullback level that had to drop points.
    pub diagnostics: Vec<String>,
}

impl CutRayApprox {
    /// Membership in the depth-d region, by checking the forward orbit
    /// against the sector pairs of the stored itinerary.
    pub fn contains(&self, p: &MapParams, z: Complex64) -> bool {
        self.contains_to_depth(p, z, self.depth)
    }

    /// Membership in the shallower depth-d truncation of the same region.
    pub fn contains_to_depth(&self, p: &MapParams, z: Complex64, depth: usize) -> bool {
        let depth = depth.min(self.depth);
        let mut w = z;
        for &s in &self.symbols[..=depth] {
            if w == Complex64::new(0.0, 0.0) || !w.is_finite() {
                return true;
            }
            if self.real_axis_excluded && w.im == 0.0 && w.re != 0.0 {
                return false;
            }
            if !in_sector_pair(p, w, s, 1e-9) {
                return false;
            }
            w = p.eval(w);
        }
        true
    }

    /// Every boundary point followed by every Julia sample.
    pub fn points(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = self
            .boundary
            .iter()
            .flat_map(|poly| poly.points.iter().copied())
            .collect();
        out.extend_from_slice(&self.julia_samples);
        out
    }
}

fn diameter(points: &[Complex64]) -> f64 {
    let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for z in points {
        lo.re = lo.re.min(z.re);
        lo.im = lo.im.min(z.im);
        hi.re = hi.re.max(z.re);
        hi.im = hi.im.max(z.im);
    }
    ((hi.re - lo.re).powi(2) + (hi.im - lo.im).powi(2)).sqrt()
}

/// The four boundary rays of S_s ∪ S_{−s} as sampled polylines (two rays
/// plus their mirror images), doubled across the real axis in the
/// real-parameter variant.
fn seed_pair_boundary(p: &MapParams, s: i32, real_positive: bool) -> Vec<Vec<Complex64>> {
    let rho_max = (20.0 * p.escape_radius).max(1e4);
    let rho_min = 1e-6;
    let ratio = (rho_max / rho_min).powf(1.0 / (SEED_SAMPLES - 1) as f64);
    let radii: Vec<f64> = (0..SEED_SAMPLES)
        .map(|i| rho_min * ratio.powi(i as i32))
        .collect();
    let raw0 = SectorIndex(s.abs()).raw(p.n);
    let mut polys: Vec<Vec<Complex64>> = Vec::new();
    for raw in [raw0, raw0 + 1] {
        let a = ray_arg(p, raw);
        let dir = Complex64::from_polar(1.0, a);
        let on_axis = real_positive && dir.im.abs() < 1e-12;
        if on_axis {
            for side in [REAL_AXIS_OFFSET, -REAL_AXIS_OFFSET] {
                let off = Complex64::new(0.0, side);
                polys.push(radii.iter().map(|&r| r * dir + off).collect());
            }
        } else {
            polys.push(radii.iter().map(|&r| r * dir).collect());
        }
    }
    let mirrored: Vec<Vec<Complex64>> = polys
        .iter()
        .map(|poly| poly.iter().map(|&z| -z).collect())
        .collect();
    polys.extend(mirrored);
    polys
}

/// Pull every polyline back through the inverse branch into S_s, emitting
/// the image and (by central symmetry of the level set) its mirror.
fn pull_back_level(
    p: &MapParams,
    polys: &[Vec<Complex64>],
    s: i32,
) -> (Vec<Vec<Complex64>>, usize) {
    let eps = SectorIndex(s.abs());
    let results: Vec<(Vec<Complex64>, usize)> = polys
        .par_iter()
        .map(|poly| {
            let mut img = Vec::with_capacity(poly.len());
            let mut dropped = 0usize;
            for &w in poly {
                match inverse_branch(p, eps, w) {
                    Ok(z) => img.push(z),
                    Err(_) => dropped += 1,
                }
            }
            (img, dropped)
        })
        .collect();
    let mut out = Vec::with_capacity(2 * results.len());
    let mut dropped = 0;
    for (img, d) in results {
        dropped += d;
        if img.len() >= 2 && diameter(&img) >= PRUNE_DIAMETER {
            out.push(img.iter().map(|&z| -z).collect());
            out.push(img);
        }
    }
    (out, dropped)
}

fn check_parameter_domain(p: &MapParams) -> Result<bool> {
    let real_positive = p.lambda.im == 0.0 && p.lambda.re > 0.0;
    if real_positive {
        return Ok(true);
    }
    let a = arg_0_2pi(p.lambda);
    if a <= 0.0 || a >= std::f64::consts::TAU / (p.n - 1) as f64 {
        return Err(Error::precondition(
            "cut rays need λ in the open fundamental domain or on the positive real axis",
        ));
    }
    Ok(false)
}

/// The depth-d cut-ray approximation for θ in the angle Cantor set Θ.
///
/// For λ in the open fundamental domain this realizes the nested sector
/// intersection; for real positive λ the variant excluding ℝ* is used and θ
/// must be τ-periodic (and differ from 1 and 1/2).
pub fn cut_ray(p: &MapParams, theta: &Angle, depth: usize) -> Result<CutRayApprox> {
    let real_positive = check_parameter_domain(p)?;
    match angle::in_theta(p.n, theta, (depth + 1).max(64)) {
        Membership::Yes => {}
        Membership::No => {
            return Err(Error::precondition(
                "the angle's itinerary leaves the admissible symbol set",
            ))
        }
        Membership::Undetermined => {
            return Err(Error::precondition(
                "could not certify the angle's itinerary at this depth",
            ))
        }
    }
    if real_positive {
        let period = angle::is_tau_periodic(p.n, theta)?;
        if period.is_none() {
            return Err(Error::precondition(
                "the real-parameter variant needs a τ-periodic angle",
            ));
        }
        let half = Angle::exact(1, 2).expect("1/2 is a valid angle");
        let one = Angle::exact(1, 1).expect("1 is a valid angle");
        if *theta == half || *theta == one {
            return Err(Error::precondition(
                "the real-parameter variant excludes the angles 1 and 1/2",
            ));
        }
    }
    let its = angle::itinerary(p.n, theta, depth + 1);
    let symbols: Vec<i32> = its.symbols.iter().map(|s| s.abs()).collect();

    let mut diagnostics = Vec::new();
    let mut cur = seed_pair_boundary(p, symbols[depth], real_positive);
    for lev in (0..depth).rev() {
        let (pulled, dropped) = pull_back_level(p, &cur, symbols[lev]);
        cur = pulled;
        if dropped > 0 {
            diagnostics.push(format!("level {lev}: dropped {dropped} boundary points"));
        }
        if lev > 0 {
            cur.extend(seed_pair_boundary(p, symbols[lev], real_positive));
        }
    }
    cur.extend(seed_pair_boundary(p, symbols[0], real_positive));

    let mid_arg =
        ray_arg(p, SectorIndex(symbols[depth]).raw(p.n)) + 0.5 * PI / p.n as f64;
    let anchor = Complex64::from_polar(p.lambda.norm().powf(0.5 / p.n as f64), mid_arg);
    let mut julia = vec![anchor, -anchor];
    for lev in (0..depth).rev() {
        let eps = SectorIndex(symbols[lev]);
        let mut next = Vec::with_capacity(2 * julia.len());
        let mut dropped = 0usize;
        for &w in &julia {
            match inverse_branch(p, eps, w) {
                Ok(z) => {
                    next.push(z);
                    next.push(-z);
                }
                Err(_) => dropped += 1,
            }
        }
        if dropped > 0 {
            diagnostics.push(format!("level {lev}: dropped {dropped} anchor chains"));
        }
        julia = next;
    }

    let boundary: Vec<RayPolyline> = cur
        .into_iter()
        .map(|points| RayPolyline {
            kind: RayKind::CutRayBoundary,
            angle: theta.clone(),
            points,
            potentials: Vec::new(),
            landing_estimate: None,
            failure: None,
        })
        .collect();
    let mut min_mod = f64::INFINITY;
    let mut max_mod: f64 = 0.0;
    for poly in &boundary {
        for z in &poly.points {
            min_mod = min_mod.min(z.norm());
            max_mod = max_mod.max(z.norm());
        }
    }
    Ok(CutRayApprox {
        theta: theta.clone(),
        depth,
        boundary,
        julia_samples: julia,
        contains_zero_and_infinity: min_mod <= p.inner_radius
            && max_mod >= 2.0 * p.escape_radius,
        symbols,
        real_axis_excluded: real_positive,
        diagnostics,
    })
}

/// The two preimages of w lying in the closed sector pair S_s ∪ S_{−s},
/// where s may be any label 0..n (pairs across the antipode 0 ↔ n).
fn pair_preimages(p: &MapParams, w: Complex64, s: i32) -> Result<[Complex64; 2]> {
    let width = PI / p.n as f64;
    let mid = ray_arg(p, SectorIndex(s.abs()).raw(p.n)) + 0.5 * width;
    let mut hits: Vec<(f64, Complex64)> = algebraic_preimages(p, w)
        .into_iter()
        .filter(|&z| (p.eval(z) - w).norm() <= 1e-7 * w.norm().max(1.0))
        .map(|z| {
            let d = wrap_pi(arg_0_2pi(z) - mid).abs();
            (d.min(PI - d), z)
        })
        .filter(|&(d, _)| d <= 0.5 * width + 1e-9)
        .collect();
    hits.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("distances are finite"));
    hits.dedup_by(|a, b| (a.1 - b.1).norm() <= 1e-12 * a.1.norm().max(1.0));
    if hits.len() < 2 {
        return Err(Error::branch(
            "fewer than two preimages landed in the sector pair",
        ));
    }
    Ok([hits[0].1, hits[1].1])
}

/// Pull a polyline back through the sector pair, splitting it into the two
/// preimage branches matched by continuity.
fn pull_back_pair_polyline(
    p: &MapParams,
    poly: &[Complex64],
    s: i32,
) -> (Vec<Complex64>, Vec<Complex64>, usize) {
    let mut b1: Vec<Complex64> = Vec::with_capacity(poly.len());
    let mut b2: Vec<Complex64> = Vec::with_capacity(poly.len());
    let mut dropped = 0usize;
    for &w in poly {
        let [x, y] = match pair_preimages(p, w, s) {
            Ok(pair) => pair,
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        match (b1.last(), b2.last()) {
            (Some(&t1), Some(&t2)) => {
                if (x - t1).norm() + (y - t2).norm() <= (y - t1).norm() + (x - t2).norm() {
                    b1.push(x);
                    b2.push(y);
                } else {
                    b1.push(y);
                    b2.push(x);
                }
            }
            _ => {
                b1.push(x);
                b2.push(y);
            }
        }
    }
    (b1, b2, dropped)
}

/// The cut ray Ω^α for an angle α that reaches base.theta under finitely
/// many τ steps, built by sector-pair pullback of the base approximation.
///
/// Requires the critical orbit to stay off the base cut ray for the first
/// N iterates (N the number of τ steps), which is checked against the
/// base's sampled points.
pub fn cut_ray_preimage(
    p: &MapParams,
    alpha: &Angle,
    base: &CutRayApprox,
) -> Result<CutRayApprox> {
    let mut steps = None;
    let mut a = alpha.clone();
    for k in 0..=64usize {
        if a == base.theta {
            steps = Some(k);
            break;
        }
        a = angle::tau(p.n, &a)?;
    }
    let nsteps = steps.ok_or_else(|| {
        Error::precondition("the angle does not reach the base angle under τ within 64 steps")
    })?;
    if nsteps == 0 {
        return Ok(base.clone());
    }

    let base_points = base.points();
    if base_points.is_empty() {
        return Err(Error::Empty("base cut ray has no sampled points"));
    }
    let (vp, vm) = p.critical_values();
    for (label, v) in [("+", vp), ("-", vm)] {
        let mut w = v;
        for k in 1..=nsteps {
            if !w.is_finite() || w == Complex64::new(0.0, 0.0) {
                break;
            }
            let dist = base_points
                .iter()
                .map(|&q| (q - w).norm())
                .fold(f64::INFINITY, f64::min);
            if dist < 1e-3 {
                return Err(Error::precondition(format!(
                    "critical orbit (v{label}, iterate {k}) meets the base cut ray \
                     at distance {dist:.2e}"
                )));
            }
            w = p.eval(w);
        }
    }

    let mut symbols = Vec::with_capacity(nsteps + base.symbols.len());
    let mut a = alpha.clone();
    for _ in 0..nsteps {
        let s = angle::partition_index(p.n, &a);
        symbols.push(if s == p.n as i32 { 0 } else { s.abs() });
        a = angle::tau(p.n, &a)?;
    }
    symbols.extend_from_slice(&base.symbols);

    let mut polys: Vec<Vec<Complex64>> = base
        .boundary
        .iter()
        .map(|poly| poly.points.clone())
        .collect();
    let mut julia = base.julia_samples.clone();
    let mut diagnostics = base.diagnostics.clone();
    for j in (0..nsteps).rev() {
        let s = symbols[j];
        let results: Vec<(Vec<Complex64>, Vec<Complex64>, usize)> = polys
            .par_iter()
            .map(|poly| pull_back_pair_polyline(p, poly, s))
            .collect();
        let mut next = Vec::with_capacity(2 * results.len());
        let mut dropped = 0;
        for (b1, b2, d) in results {
            dropped += d;
            for b in [b1, b2] {
                if b.len() >= 2 && diameter(&b) >= PRUNE_DIAMETER {
                    next.push(b);
                }
            }
        }
        if dropped > 0 {
            diagnostics.push(format!(
                "preimage level {j}: dropped {dropped} boundary points"
            ));
        }
        polys = next;
        let mut jn = Vec::with_capacity(2 * julia.len());
        for &w in &julia {
            if let Ok([x, y]) = pair_preimages(p, w, s) {
                jn.push(x);
                jn.push(y);
            }
        }
        julia = jn;
    }

    let boundary: Vec<RayPolyline> = polys
        .into_iter()
        .map(|points| RayPolyline {
            kind: RayKind::CutRayBoundary,
            angle: alpha.clone(),
            points,
            potentials: Vec::new(),
            landing_estimate: None,
            failure: None,
        })
        .collect();
    let mut min_mod = f64::INFINITY;
    let mut max_mod: f64 = 0.0;
    for poly in &boundary {
        for z in &poly.points {
            min_mod = min_mod.min(z.norm());
            max_mod = max_mod.max(z.norm());
        }
    }
    Ok(CutRayApprox {
        theta: alpha.clone(),
        depth: nsteps + base.depth,
        boundary,
        julia_samples: julia,
        contains_zero_and_infinity: min_mod <= p.inner_radius
            && max_mod >= 2.0 * p.escape_radius,
        symbols,
        real_axis_excluded: base.real_axis_excluded,
        diagnostics,
    })
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff_distance(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("hausdorff_distance needs two non-empty sets"));
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

/// max over a of the distance to the nearest point of b, via a uniform grid.
pub fn directed_hausdorff(a: &[Complex64], b: &[Complex64]) -> f64 {
    let brute = |q: Complex64| {
        b.iter()
            .map(|&z| (q - z).norm())
            .fold(f64::INFINITY, f64::min)
    };
    if b.len() <= 256 {
        return a
            .iter()
            .map(|&q| brute(q))
            .fold(0.0, f64::max);
    }
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for z in b {
        lo.0 = lo.0.min(z.re);
        lo.1 = lo.1.min(z.im);
        hi.0 = hi.0.max(z.re);
        hi.1 = hi.1.max(z.im);
    }
    let diag = ((hi.0 - lo.0).powi(2) + (hi.1 - lo.1).powi(2)).sqrt();
    if !(diag > 0.0) || !diag.is_finite() {
        return a.iter().map(|&q| brute(q)).fold(0.0, f64::max);
    }
    let cell = diag / (b.len() as f64).sqrt();
    let extent = (
        ((hi.0 - lo.0) / cell).floor() as i64 + 1,
        ((hi.1 - lo.1) / cell).floor() as i64 + 1,
    );
    let key = |z: &Complex64| {
        (
            ((z.re - lo.0) / cell).floor().clamp(-1e12, 1e12) as i64,
            ((z.im - lo.1) / cell).floor().clamp(-1e12, 1e12) as i64,
        )
    };
    let mut grid: HashMap<(i64, i64), Vec<Complex64>> = HashMap::new();
    for z in b {
        grid.entry(key(z)).or_default().push(*z);
    }
    let mut worst: f64 = 0.0;
    for q in a {
        if !q.is_finite() {
            continue;
        }
        let (ci, cj) = key(q);
        // Farthest populated cell, in Chebyshev cell distance; rings beyond
        // it cannot contain anything.
        let max_ring = ci
            .abs()
            .max((extent.0 - ci).abs())
            .max(cj.abs().max((extent.1 - cj).abs()))
            + 2;
        let mut best = f64::INFINITY;
        let mut ring: i64 = 0;
        loop {
            for i in (ci - ring)..=(ci + ring) {
                for j in (cj - ring)..=(cj + ring) {
                    if (i - ci).abs().max((j - cj).abs()) != ring {
                        continue;
                    }
                    if let Some(cellpts) = grid.get(&(i, j)) {
                        for z in cellpts {
                            best = best.min((q - z).norm());
                        }
                    }
                }
            }
            // Cells beyond Chebyshev radius `ring` only hold points at least
            // (ring−1)·cell away from q.
            if best <= ((ring - 1).max(0) as f64) * cell || ring > max_ring {
                break;
            }
            ring += 1;
        }
        worst = worst.max(best);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boettcher::trace_external_ray;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn params(n: u32, re: f64, im: f64) -> MapParams {
        MapParams::new(n, Complex64::new(re, im)).expect("valid parameters")
    }

    #[test]
    fn sector_of_basic_positions() {
        let p = params(3, 1.0, 0.0);
        let just_above_real = Complex64::from_polar(1.0, 0.01);
        assert_eq!(sector_of(&p, just_above_real), SectorIndex(0));
        let near_negative_real = Complex64::from_polar(1.0, PI + 0.01);
        assert_eq!(sector_of(&p, near_negative_real), SectorIndex(3));
        let (vp, vm) = p.critical_values();
        assert_eq!(sector_of(&p, vp), SectorIndex(0));
        assert_eq!(sector_of(&p, vm), SectorIndex(3));
    }

    #[test]
    fn sector_antipode_matches_negation() {
        let p = params(3, 0.3, 0.4);
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let z = Complex64::from_polar(
                rng.gen_range(0.1..10.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            let s = sector_of(&p, z);
            let t = sector_of(&p, -z);
            assert_eq!(t, s.antipode(p.n), "z = {z}");
        }
    }

    #[test]
    fn critical_values_sit_in_their_sectors_across_the_fundamental_domain() {
        for k in 1..10 {
            let arg = k as f64 * PI / 10.0;
            let p = params(3, 0.5 * arg.cos(), 0.5 * arg.sin());
            let (vp, vm) = p.critical_values();
            assert_eq!(sector_of(&p, vp), SectorIndex(0), "arg λ = {arg}");
            assert_eq!(sector_of(&p, vm), SectorIndex(3), "arg λ = {arg}");
        }
    }

    #[test]
    fn inverse_branch_inverts_f() {
        let p = params(3, 0.2, 0.2);
        let mut rng = StdRng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 1000 {
            let w = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
            let eps = SectorIndex(*[1, 2, -1, -2].get(rng.gen_range(0..4)).unwrap());
            match inverse_branch(&p, eps, w) {
                Ok(z) => {
                    assert!((p.eval(z) - w).norm() <= 1e-10 * w.norm().max(1.0));
                    checked += 1;
                }
                Err(Error::Branch(_)) => continue,
                Err(e) => panic!("unexpected error: {e}"),
            }
        }
    }

    #[test]
    fn inverse_branch_antisymmetry_for_odd_degree() {
        let p = params(3, 0.2, 0.2);
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..200 {
            let w = Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let eps = SectorIndex(rng.gen_range(1..3));
            let lhs = inverse_branch(&p, SectorIndex(-eps.0), w);
            let rhs = inverse_branch(&p, eps, -w).map(|z| -z);
            match (lhs, rhs) {
                (Ok(a), Ok(b)) => assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0)),
                (Err(_), Err(_)) => {}
                (a, b) => panic!("asymmetric failure: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn inverse_branch_negation_for_even_degree() {
        let p = params(4, 0.1, 0.05);
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..200 {
            let w = Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
            let eps = SectorIndex(rng.gen_range(1..4));
            let lhs = inverse_branch(&p, SectorIndex(-eps.0), w);
            let rhs = inverse_branch(&p, eps, w).map(|z| -z);
            match (lhs, rhs) {
                (Ok(a), Ok(b)) => assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0)),
                (Err(_), Err(_)) => {}
                (a, b) => panic!("asymmetric failure: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn exactly_one_preimage_per_univalent_sector() {
        let p = params(3, 0.2, 0.2);
        let mut rng = StdRng::seed_from_u64(19);
        let mut checked = 0;
        while checked < 200 {
            let w = Complex64::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0));
            let (vp, _) = p.critical_values();
            let q = w / vp;
            if q.im.abs() <= 1e-12 && q.re.abs() >= 1.0 {
                continue;
            }
            for eps in [1, 2, -1, -2] {
                let count = algebraic_preimages(&p, w)
                    .into_iter()
                    .filter(|&z| sector_of(&p, z) == SectorIndex(eps))
                    .count();
                assert_eq!(count, 1, "w = {w}, sector {eps}");
            }
            checked += 1;
        }
    }

    #[test]
    fn cut_ray_rejects_angles_outside_theta() {
        let p = params(3, 0.2, 0.2);
        // 1/7 has itinerary symbol 0 at the first step for n = 3.
        let bad = Angle::exact(1, 7).unwrap();
        assert!(matches!(
            cut_ray(&p, &bad, 4),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn cut_ray_rejects_lambda_outside_the_fundamental_domain() {
        let p = params(3, -0.2, -0.2);
        let theta = Angle::exact(1, 2).unwrap();
        assert!(matches!(
            cut_ray(&p, &theta, 4),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn cut_ray_point_set_is_centrally_symmetric() {
        let p = params(3, 0.2, 0.2);
        let theta = Angle::exact(1, 2).unwrap();
        let omega = cut_ray(&p, &theta, 6).unwrap();
        let pts = omega.points();
        let neg: Vec<Complex64> = pts.iter().map(|&z| -z).collect();
        let d = hausdorff_distance(&pts, &neg).unwrap();
        assert!(d <= 1e-9, "symmetry defect {d:e}");
    }

    #[test]
    fn julia_samples_follow_the_itinerary() {
        let p = params(3, 0.2, 0.2);
        let theta = Angle::exact(1, 4).unwrap();
        let depth = 8;
        let omega = cut_ray(&p, &theta, depth).unwrap();
        assert!(!omega.julia_samples.is_empty());
        for &z in &omega.julia_samples {
            let mut w = z;
            for (k, &s) in omega.symbols.iter().enumerate() {
                assert!(
                    in_sector_pair(&p, w, s, 1e-9),
                    "sample {z} leaves pair {s} at iterate {k}"
                );
                w = p.eval(w);
            }
        }
    }

    #[test]
    fn cut_ray_contains_both_external_rays() {
        let p = params(3, 0.2, 0.2);
        let theta = Angle::exact(1, 2).unwrap();
        let omega = cut_ray(&p, &theta, 10).unwrap();
        for t in [Angle::exact(1, 2).unwrap(), Angle::exact(1, 1).unwrap()] {
            let ray = trace_external_ray(&p, &t, 1e-3, 400);
            assert!(ray.failure.is_none(), "trace failed: {:?}", ray.failure);
            for &z in &ray.points {
                assert!(omega.contains(&p, z), "ray point {z} excluded");
            }
        }
    }

    #[test]
    fn half_turn_gives_the_same_cut_ray() {
        let p = params(3, 0.2, 0.2);
        let a = cut_ray(&p, &Angle::exact(1, 4).unwrap(), 6).unwrap();
        let b = cut_ray(&p, &Angle::exact(3, 4).unwrap(), 6).unwrap();
        let d = hausdorff_distance(&a.points(), &b.points()).unwrap();
        assert!(d <= 1e-6, "Hausdorff distance {d:e}");
    }

    #[test]
    fn deeper_approximations_nest() {
        let p = params(3, 0.2, 0.2);
        let theta = Angle::exact(1, 4).unwrap();
        let deep = cut_ray(&p, &theta, 7).unwrap();
        let shallow = cut_ray(&p, &theta, 6).unwrap();
        for &z in &deep.julia_samples {
            assert!(shallow.contains(&p, z), "deep sample {z} left the shallow region");
        }
        // A probe rotated out of the sector pair must be excluded.
        let probe = Complex64::from_polar(
            p.lambda.norm().powf(0.5 / p.n as f64),
            ray_arg(&p, 0) + 0.5 * PI / p.n as f64,
        );
        assert!(!shallow.contains(&p, probe));
    }

    #[test]
    fn two_to_one_structure_on_julia_samples() {
        let p = params(3, 0.2, 0.2);
        let theta = Angle::exact(1, 4).unwrap();
        let depth = 8;
        let omega = cut_ray(&p, &theta, depth).unwrap();
        let image = cut_ray(&p, &angle::tau(p.n, &theta).unwrap(), depth - 1).unwrap();
        let mut checked = 0;
        for &w in image.julia_samples.iter().take(20) {
            let count = algebraic_preimages(&p, w)
                .into_iter()
                .filter(|&z| omega.contains_to_depth(&p, z, depth - 1))
                .count();
            assert_eq!(count, 2, "w = {w}");
            checked += 1;
        }
        assert!(checked > 0);
    }

    #[test]
    fn real_parameter_variant_avoids_the_real_axis() {
        let p = params(3, 0.3, 0.0);
        let theta = Angle::exact(1, 4).unwrap();
        let omega = cut_ray(&p, &theta, 6).unwrap();
        assert!(omega.real_axis_excluded);
        assert!(omega.contains_zero_and_infinity);
        for &z in &omega.julia_samples {
            assert!(
                z.im != 0.0 || z.re == 0.0,
                "Julia sample {z} lies on the excluded real axis"
            );
        }
        let d = hausdorff_distance(
            &omega.points(),
            &omega.points().iter().map(|&z| -z).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(d <= 1e-9);
    }

    #[test]
    fn real_parameter_variant_needs_a_periodic_angle_and_excludes_half() {
        let p = params(3, 0.3, 0.0);
        assert!(matches!(
            cut_ray(&p, &Angle::exact(1, 2).unwrap(), 4),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn preimage_cut_ray_maps_onto_its_base() {
        let p = params(3, 0.2, 0.2);
        let theta = Angle::exact(1, 4).unwrap();
        let base = cut_ray(&p, &theta, 8).unwrap();
        let alpha = Angle::exact(1, 12).unwrap();
        let pre = cut_ray_preimage(&p, &alpha, &base).unwrap();
        assert_eq!(pre.depth, base.depth + 1);
        assert!(pre.contains_zero_and_infinity);
        let base_points = base.points();
        for &z in pre.julia_samples.iter().take(100) {
            let w = p.eval(z);
            let dist = base_points
                .iter()
                .map(|&q| (q - w).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(dist <= 1e-6, "f(sample) misses the base by {dist:e}");
        }
        let ray = trace_external_ray(&p, &alpha, 1e-2, 400);
        assert!(ray.failure.is_none());
        for &z in &ray.points {
            assert!(pre.contains(&p, z), "R(α) point {z} excluded");
        }
    }

    #[test]
    fn preimage_rejects_angles_that_never_reach_the_base() {
        let p = params(3, 0.2, 0.2);
        let base = cut_ray(&p, &Angle::exact(1, 4).unwrap(), 4).unwrap();
        let stranger = Angle::exact(1, 5).unwrap();
        assert!(matches!(
            cut_ray_preimage(&p, &stranger, &base),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn hausdorff_distance_basics() {
        let zero = [Complex64::new(0.0, 0.0)];
        let pt = [Complex64::new(3.0, 4.0)];
        assert!((hausdorff_distance(&zero, &pt).unwrap() - 5.0).abs() <= 1e-15);
        assert_eq!(hausdorff_distance(&pt, &pt).unwrap(), 0.0);
        assert!(matches!(
            hausdorff_distance(&[], &pt),
            Err(Error::Empty(_))
        ));
        let mut rng = StdRng::seed_from_u64(23);
        let a: Vec<Complex64> = (0..200)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let b: Vec<Complex64> = (0..300)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let d1 = hausdorff_distance(&a, &b).unwrap();
        let d2 = hausdorff_distance(&b, &a).unwrap();
        assert!((d1 - d2).abs() <= 1e-15);
        // Brute-force cross-check of the grid accelerated distance.
        let brute = |x: &[Complex64], y: &[Complex64]| -> f64 {
            x.iter()
                .map(|&q| {
                    y.iter()
                        .map(|&z| (q - z).norm())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        let expected = brute(&a, &b).max(brute(&b, &a));
        assert!((d1 - expected).abs() <= 1e-12);
    }

    #[test]
    fn cut_ray_moves_little_under_small_parameter_changes() {
        let theta = Angle::exact(1, 4).unwrap();
        let depth = 6;
        let window = |omega: &CutRayApprox| -> Vec<Complex64> {
            omega
                .points()
                .into_iter()
                .filter(|z| z.norm() <= 2.0)
                .collect()
        };
        let base = window(&cut_ray(&params(3, 0.2, 0.2), &theta, depth).unwrap());
        let step = window(&cut_ray(&params(3, 0.201, 0.2), &theta, depth).unwrap());
        let half = window(&cut_ray(&params(3, 0.2005, 0.2), &theta, depth).unwrap());
        let d_full = hausdorff_distance(&base, &step).unwrap();
        let d_half = hausdorff_distance(&base, &half).unwrap();
        assert!(d_full < 0.1, "λ-step moved the cut ray by {d_full:e}");
        assert!(d_half <= d_full);
    }
}
