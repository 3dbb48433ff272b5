//! Dense polynomials with exact big-integer coefficients and a simultaneous
//! root finder.
//!
//! The census of escape-region centers clears the critical-orbit condition
//! into a polynomial whose coefficients grow exponentially with the level;
//! exact arithmetic keeps the composition lossless, and the roots are then
//! extracted in floating point after rescaling the variable so the extreme
//! coefficients balance.

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Polynomial with `BigInt` coefficients, `coeffs[i]` multiplying `x^i`.
/// The representation is normalized: no trailing zero coefficients, and the
/// zero polynomial is the empty vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZPoly {
    coeffs: Vec<BigInt>,
}

impl ZPoly {
    pub fn zero() -> Self {
        ZPoly { coeffs: Vec::new() }
    }

    pub fn from_coeffs(coeffs: Vec<BigInt>) -> Self {
        let mut p = ZPoly { coeffs };
        p.normalize();
        p
    }

    /// The monomial c·x^k.
    pub fn monomial(c: impl Into<BigInt>, k: usize) -> Self {
        let c: BigInt = c.into();
        if c.is_zero() {
            return ZPoly::zero();
        }
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = c;
        ZPoly { coeffs }
    }

    fn normalize(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn add(&self, rhs: &ZPoly) -> ZPoly {
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len().max(rhs.coeffs.len())];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        ZPoly::from_coeffs(coeffs)
    }

    pub fn mul(&self, rhs: &ZPoly) -> ZPoly {
        if self.is_zero() || rhs.is_zero() {
            return ZPoly::zero();
        }
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        ZPoly { coeffs }
    }

    /// x^k · self.
    pub fn shift(&self, k: usize) -> ZPoly {
        if self.is_zero() {
            return ZPoly::zero();
        }
        let mut coeffs = vec![BigInt::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        ZPoly { coeffs }
    }

    /// self^e by binary exponentiation; 0^0 = 1.
    pub fn pow(&self, e: u32) -> ZPoly {
        let mut acc = ZPoly::monomial(1, 0);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Coefficients of p(s·x) as f64, i.e. `coeffs[i]·s^i`, with the powers
    /// of the scale applied in log space so they survive even when `s^i`
    /// alone would underflow.  An error reports any coefficient that still
    /// overflows f64 at this scale.
    pub fn scaled_f64_coeffs(&self, s: f64) -> Result<Vec<f64>> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::precondition("scale must be positive and finite"));
        }
        let ls = s.log2();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            let v = big_to_f64_exp2(c, i as f64 * ls);
            if !v.is_finite() {
                return Err(Error::domain(format!(
                    "coefficient of x^{i} does not fit f64 at scale {s:e}"
                )));
            }
            out.push(v);
        }
        Ok(out)
    }

    /// A variable scale s with the extreme coefficients of p(s·x) balanced:
    /// |c_low|·s^low = |c_d|·s^d, so the geometric mean of the root moduli
    /// of the scaled polynomial is 1.
    pub fn balancing_scale(&self) -> f64 {
        let d = match self.degree() {
            Some(d) if d >= 1 => d,
            _ => return 1.0,
        };
        let mut low = 0usize;
        while self.coeffs[low].is_zero() {
            low += 1;
        }
        if low == d {
            return 1.0;
        }
        let log2_s = (log2_abs(&self.coeffs[low]) - log2_abs(&self.coeffs[d])) / (d - low) as f64;
        log2_s.exp2()
    }
}

/// log2 |c| for a nonzero BigInt, accurate to f64 precision even when |c|
/// overflows f64.
fn log2_abs(c: &BigInt) -> f64 {
    let bits = c.bits();
    if bits <= 900 {
        return c.to_f64().map(|v| v.abs().log2()).unwrap_or(bits as f64);
    }
    let shift = bits - 64;
    let top: BigInt = c >> shift;
    top.to_f64().unwrap().abs().log2() + shift as f64
}

/// c·2^e as f64: the direct product when both factors are representable,
/// otherwise through log space (accurate to ~1e−13 relative for the huge
/// magnitudes that need it).
fn big_to_f64_exp2(c: &BigInt, e: f64) -> f64 {
    if c.is_zero() {
        return 0.0;
    }
    if let Some(direct) = c.to_f64().filter(|v| v.is_finite()) {
        let factor = e.exp2();
        if factor.is_normal() {
            let v = direct * factor;
            if v.is_finite() {
                return v;
            }
        }
    }
    let sign = if c.sign() == Sign::Minus { -1.0 } else { 1.0 };
    sign * (log2_abs(c) + e).exp2()
}

/// Evaluate p and p′ at z by Horner's rule on f64 coefficients.
fn horner_jet(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of the polynomial with the given f64 coefficients
/// (`coeffs[i]` times x^i), by the Aberth–Ehrlich simultaneous iteration.
///
/// The leading and constant coefficients must be nonzero (no root at the
/// origin, no degree deflation); callers strip known factors first.  The
/// iteration stops when every relative correction falls below `tol`.
pub fn aberth_roots(coeffs: &[f64], tol: f64) -> Result<Vec<Complex64>> {
    let d = coeffs
        .len()
        .checked_sub(1)
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::precondition("aberth_roots requires degree >= 1"))?;
    if coeffs[d] == 0.0 || coeffs[0] == 0.0 {
        return Err(Error::precondition(
            "aberth_roots requires nonzero leading and constant coefficients",
        ));
    }
    let radius = (coeffs[0].abs() / coeffs[d].abs()).powf(1.0 / d as f64);
    let mut z: Vec<Complex64> = (0..d)
        .map(|i| {
            let a = std::f64::consts::TAU * (i as f64 / d as f64) + 0.4;
            Complex64::from_polar(radius * (1.0 + 0.1 * (i % 3) as f64), a)
        })
        .collect();
    let mut worst = f64::INFINITY;
    for _sweep in 0..400 {
        worst = 0.0;
        for i in 0..d {
            let (p, dp) = horner_jet(coeffs, z[i]);
            let newton = if dp.norm() > 0.0 { p / dp } else { p };
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    sum += (z[i] - zj).finv();
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * sum;
            let corr = if denom.norm() > 1e-300 {
                newton / denom
            } else {
                newton
            };
            z[i] -= corr;
            worst = worst.max(corr.norm() / z[i].norm().max(1e-12));
        }
        if worst < tol {
            return Ok(z);
        }
    }
    Err(Error::no_convergence("Aberth iteration", worst))
}

/// Roots of an exact polynomial: rescale so the extreme coefficients
/// balance, run Aberth in the scaled variable, polish each root with two
/// Newton steps there, then map back.
pub fn zpoly_roots(p: &ZPoly, tol: f64) -> Result<Vec<Complex64>> {
    let s = p.balancing_scale();
    let coeffs = p.scaled_f64_coeffs(s)?;
    let mut roots = aberth_roots(&coeffs, tol)?;
    for z in roots.iter_mut() {
        for _ in 0..2 {
            let (pv, dp) = horner_jet(&coeffs, *z);
            if dp.norm() > 0.0 {
                *z -= pv / dp;
            }
        }
        *z *= s;
    }
    Ok(roots)
}
