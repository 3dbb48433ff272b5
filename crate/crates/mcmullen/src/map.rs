//! Core dynamics of f(z) = z^n + lambda / z^n.
//!
//! The map is a degree-2n rational map of the sphere with a pole of order n at
//! the origin and a superattracting fixed point at infinity.  Everything else
//! in the crate builds on the primitives here: stable evaluation on the
//! extended plane, the 2n critical points and two critical values, orbit
//! iteration against a sound escape radius, and Newton refinement of periodic
//! cycles (including the sign-twisted cycles that appear for odd n).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on Newton iterations for cycle refinement.
pub const NEWTON_MAX_STEPS: usize = 100;
/// Residual tolerance for cycle refinement.
pub const NEWTON_TOL: f64 = 1e-12;
/// Tolerance used when detecting a period in an orbit tail.
pub const PERIOD_DETECT_TOL: f64 = 1e-9;

/// Integer power of a complex number by binary exponentiation.
///
/// Handles negative exponents by inverting the positive power; `z = 0` with a
/// negative exponent yields infinity, which callers treat as escape through
/// the pole.
pub fn cpowi(z: Complex64, k: i32) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let neg = k < 0;
    let mut e = k.unsigned_abs();
    let mut base = z;
    let mut acc = Complex64::new(1.0, 0.0);
    while e > 0 {
        if e & 1 == 1 {
            acc *= base;
        }
        base *= base;
        e >>= 1;
    }
    if neg {
        Complex64::new(1.0, 0.0) / acc
    } else {
        acc
    }
}

/// Argument of `z` normalized to `[0, 2*pi)`.
pub fn arg_0_2pi(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

/// `z^(1/k)` on the branch whose argument lies in `[0, 2*pi/k)`.
///
/// This is the branch used throughout for lambda-dependent quantities: it is
/// continuous on `0 <= arg(lambda) < 2*pi` and real-positive for real-positive
/// input, which matches the choice of fundamental domain in the parameter
/// plane.
pub fn root_branch(z: Complex64, k: u32) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let a = arg_0_2pi(z) / k as f64;
    Complex64::from_polar(r.powf(1.0 / k as f64), a)
}

const INF: Complex64 = Complex64::new(f64::INFINITY, 0.0);

/// Parameters of one map in the family, with the derived escape and trap
/// radii cached.
#[derive(Clone, Copy, Debug)]
pub struct MapParams {
    pub n: u32,
    pub lambda: Complex64,
    /// Escape radius R: `|z| > R` implies `|f(z)| >= 2|z|`, so the orbit
    /// escapes monotonically.
    pub escape_radius: f64,
    /// Inner radius r: for parameters where the trap component around the
    /// origin is separate from the basin of infinity, `|z| <= r` implies
    /// `|f(z)| >= R`.
    pub inner_radius: f64,
}

impl MapParams {
    pub fn new(n: u32, lambda: Complex64) -> Result<Self> {
        if n < 3 {
            return Err(Error::domain(format!("degree parameter n={n} must be >= 3")));
        }
        if lambda == Complex64::new(0.0, 0.0) || !lambda.is_finite() {
            return Err(Error::domain("lambda must be finite and nonzero"));
        }
        let la = lambda.norm();
        let escape_radius = 2.0f64
            .max(2.0 * (2.0 * la).powf(1.0 / (2.0 * n as f64)))
            .max(2.0 * la.powf(1.0 / n as f64));
        let inner_radius = (la / (2.0 * escape_radius)).powf(1.0 / n as f64);
        Ok(MapParams {
            n,
            lambda,
            escape_radius,
            inner_radius,
        })
    }

    /// f(z) on the extended plane: the pole at 0 and the point at infinity
    /// both map to infinity.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        if !z.is_finite() || z == Complex64::new(0.0, 0.0) {
            return INF;
        }
        let zn = cpowi(z, self.n as i32);
        zn + self.lambda / zn
    }

    /// f'(z) = n z^(n-1) - n lambda z^(-n-1).  The origin is outside the
    /// domain of the derivative.
    pub fn deriv(&self, z: Complex64) -> Result<Complex64> {
        if z == Complex64::new(0.0, 0.0) {
            return Err(Error::domain("derivative requested at the pole z=0"));
        }
        let nf = self.n as f64;
        Ok(nf * cpowi(z, self.n as i32 - 1) - nf * self.lambda * cpowi(z, -(self.n as i32) - 1))
    }

    /// f''(z) = n(n-1) z^(n-2) + n(n+1) lambda z^(-n-2).
    pub fn second_deriv(&self, z: Complex64) -> Result<Complex64> {
        if z == Complex64::new(0.0, 0.0) {
            return Err(Error::domain("second derivative requested at the pole z=0"));
        }
        let nf = self.n as f64;
        Ok(nf * (nf - 1.0) * cpowi(z, self.n as i32 - 2)
            + nf * (nf + 1.0) * self.lambda * cpowi(z, -(self.n as i32) - 2))
    }

    /// Partial derivative of f with respect to lambda: z^(-n).
    pub fn dlambda(&self, z: Complex64) -> Complex64 {
        cpowi(z, -(self.n as i32))
    }

    /// Mixed partial d/dlambda of f'(z): -n z^(-n-1).
    pub fn deriv_dlambda(&self, z: Complex64) -> Complex64 {
        -(self.n as f64) * cpowi(z, -(self.n as i32) - 1)
    }

    /// The 2n critical points c_k = c_0 exp(i k pi / n), where
    /// c_0 = lambda^(1/2n) on the branch that is real-positive for
    /// real-positive lambda.
    pub fn critical_points(&self) -> Vec<Complex64> {
        let c0 = root_branch(self.lambda, 2 * self.n);
        let r = c0.norm();
        let a0 = c0.arg();
        (0..2 * self.n)
            .map(|k| Complex64::from_polar(r, a0 + k as f64 * std::f64::consts::PI / self.n as f64))
            .collect()
    }

    /// The two critical values (v_plus, v_minus) = (2 sqrt(lambda), -2 sqrt(lambda)),
    /// with the square root on the same `[0, 2*pi)` branch as `critical_points`.
    pub fn critical_values(&self) -> (Complex64, Complex64) {
        let s = 2.0 * root_branch(self.lambda, 2);
        (s, -s)
    }

    /// Iterate from z0 until escape past the escape radius or `maxiter`
    /// steps.  An orbit that lands exactly on the pole is recorded as escaped
    /// through infinity on the following index.
    pub fn iterate_orbit(&self, z0: Complex64, maxiter: usize) -> Orbit {
        let mut points = Vec::with_capacity(16);
        let mut z = z0;
        points.push(z);
        for k in 0.. {
            if !z.is_finite() || z.norm() > self.escape_radius {
                return Orbit {
                    points,
                    escaped: true,
                    escape_index: Some(k),
                };
            }
            if k >= maxiter {
                break;
            }
            z = self.eval(z);
            points.push(z);
        }
        Orbit {
            points,
            escaped: false,
            escape_index: None,
        }
    }
}

/// A finite piece of a forward orbit.
#[derive(Clone, Debug)]
pub struct Orbit {
    pub points: Vec<Complex64>,
    pub escaped: bool,
    /// Index of the first point beyond the escape radius, if any.
    pub escape_index: Option<usize>,
}

/// A periodic cycle of `sign * f^period`, refined by Newton.
///
/// For `sign = +1` this is an ordinary cycle of f of length `period`.  For
/// `sign = -1` (odd n only) the stored point satisfies f^period(z) = -z and
/// the full f-cycle has length `2 * period`; `multiplier` is then the
/// derivative of the composed map `-f^period` at its fixed point.
#[derive(Clone, Debug)]
pub struct Cycle {
    pub period: usize,
    pub sign: i8,
    pub points: Vec<Complex64>,
    pub multiplier: Complex64,
}

/// Outcome of searching the critical orbit for an attracting cycle.
#[derive(Clone, Debug)]
pub enum CycleSearch {
    /// The critical orbit escapes to infinity; there is no attracting cycle
    /// in the plane.
    Escaped,
    Found(Cycle),
    /// No period was detected within the iteration budget.
    Undetermined,
}

/// f^p(z) together with (f^p)'(z) by the chain rule.
pub fn orbit_and_deriv(p: &MapParams, z: Complex64, period: usize) -> Result<(Complex64, Complex64)> {
    let mut w = z;
    let mut d = Complex64::new(1.0, 0.0);
    for _ in 0..period {
        d *= p.deriv(w)?;
        w = p.eval(w);
        if !w.is_finite() {
            return Err(Error::domain("orbit through the pole inside cycle refinement"));
        }
    }
    Ok((w, d))
}

/// Newton refinement of a fixed point of `sign * f^period`, seeded at `seed`.
///
/// Damping halves the step whenever the residual would grow.  Returns the
/// polished cycle with its multiplier; the listed points are the forward
/// orbit of the solution under f.
pub fn find_cycle(p: &MapParams, seed: Complex64, period: usize, sign: i8) -> Result<Cycle> {
    if period == 0 {
        return Err(Error::domain("cycle period must be positive"));
    }
    if !(sign == 1 || sign == -1) {
        return Err(Error::domain("cycle sign must be +1 or -1"));
    }
    let eps = Complex64::new(sign as f64, 0.0);
    let mut z = seed;
    let (w0, _) = orbit_and_deriv(p, z, period)?;
    let mut res = (eps * w0 - z).norm();
    for _ in 0..NEWTON_MAX_STEPS {
        if res < NEWTON_TOL {
            break;
        }
        let (w, d) = orbit_and_deriv(p, z, period)?;
        let g = eps * w - z;
        let gp = eps * d - Complex64::new(1.0, 0.0);
        if gp.norm() < 1e-300 {
            return Err(Error::no_convergence("cycle refinement hit a singular derivative", res));
        }
        let mut step = g / gp;
        let mut accepted = false;
        for _ in 0..8 {
            let zt = z - step;
            if let Ok((wt, _)) = orbit_and_deriv(p, zt, period) {
                let rt = (eps * wt - zt).norm();
                if rt < res {
                    z = zt;
                    res = rt;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // Flat spot: take the damped step anyway and let the loop decide.
            z -= step;
            let (wt, _) = orbit_and_deriv(p, z, period)?;
            res = (eps * wt - z).norm();
        }
    }
    if res >= NEWTON_TOL {
        return Err(Error::no_convergence("cycle refinement", res));
    }
    let mut points = Vec::with_capacity(period);
    let mut w = z;
    let mut mult = Complex64::new(1.0, 0.0);
    for _ in 0..period {
        points.push(w);
        mult *= p.deriv(w)?;
        w = p.eval(w);
    }
    Ok(Cycle {
        period,
        sign,
        points,
        multiplier: eps * mult,
    })
}

/// Follow the orbit of the positive critical value and look for an attracting
/// cycle, detecting the sign-twisted case f^(p/2)(z) = -z for odd n.
pub fn attracting_cycle_from_critical_orbit(p: &MapParams, maxiter: usize) -> CycleSearch {
    const MAX_PROBE_PERIOD: usize = 48;
    let (v_plus, _) = p.critical_values();
    let mut traj: Vec<Complex64> = Vec::with_capacity(256);
    let mut z = v_plus;
    for _ in 0..maxiter {
        if !z.is_finite() || z.norm() > p.escape_radius {
            return CycleSearch::Escaped;
        }
        traj.push(z);
        let k = traj.len() - 1;
        if k >= 1 {
            let lo = k.saturating_sub(MAX_PROBE_PERIOD);
            for q in (lo..k).rev() {
                let period = k - q;
                if (traj[k] - traj[q]).norm() < PERIOD_DETECT_TOL {
                    if let Some(found) = polish_candidate(p, traj[k], period) {
                        return CycleSearch::Found(found);
                    }
                }
            }
        }
        z = p.eval(z);
    }
    CycleSearch::Undetermined
}

fn polish_candidate(p: &MapParams, seed: Complex64, period: usize) -> Option<Cycle> {
    let cyc = find_cycle(p, seed, period, 1).ok()?;
    if cyc.multiplier.norm() >= 1.0 + 1e-9 {
        return None;
    }
    // Odd degree admits cycles exchanged by z -> -z; report those through the
    // composed map -f^(p/2) so the component parameterization sees a single
    // fixed point.
    if p.n % 2 == 1 && period % 2 == 0 {
        let half = period / 2;
        if let Ok((w, _)) = orbit_and_deriv(p, cyc.points[0], half) {
            let scale = cyc.points[0].norm().max(1.0);
            if (w + cyc.points[0]).norm() < 1e-6 * scale {
                if let Ok(tw) = find_cycle(p, cyc.points[0], half, -1) {
                    if tw.multiplier.norm() < 1.0 + 1e-9 {
                        return Some(tw);
                    }
                }
            }
        }
    }
    Some(cyc)
}
