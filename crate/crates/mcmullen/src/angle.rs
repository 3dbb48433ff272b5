//! Symbolic dynamics of the angle map τ(θ) = nθ mod 1 on the circle (0,1].
//!
//! The circle is cut into 2n half-open intervals Θ_j = (j/2n, (j+1)/2n],
//! labeled 0,1,…,n counterclockwise through the upper half and −1,…,−(n−1)
//! through the lower half.  Angles whose whole forward orbit avoids Θ₀ and
//! Θ_n form a Cantor set Θ; their itineraries over the symbols
//! {±1,…,±(n−1)} determine them exactly, via an explicit base-n expansion
//! that this module inverts with integer arithmetic.
//!
//! All angle computations are exact: angles are arbitrary-precision
//! rationals, and floats appear only as display approximations or as
//! explicitly inexact inputs.  Boundary classification with floats is
//! hopeless near the cut points, which is exactly where these angles live.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// An angle on the circle, normalized to (0,1] (so 0 is represented as 1).
///
/// Exact angles are reduced rationals with big-integer parts; inexact angles
/// carry a binary64 value and are excluded from the exact-only operations.
#[derive(Clone, Debug, PartialEq)]
pub enum Angle {
    Exact(BigRational),
    Approx(f64),
}

impl Angle {
    /// Exact angle p/q, reduced and wrapped into (0,1].
    pub fn exact(p: i64, q: i64) -> Result<Angle> {
        if q == 0 {
            return Err(Error::domain("angle denominator must be nonzero"));
        }
        Ok(Angle::Exact(normalize_mod1(BigRational::new(
            BigInt::from(p),
            BigInt::from(q),
        ))))
    }

    /// Exact angle from an arbitrary rational, wrapped into (0,1].
    pub fn from_rational(r: BigRational) -> Angle {
        Angle::Exact(normalize_mod1(r))
    }

    /// Inexact angle, wrapped into (0,1].
    pub fn approx(t: f64) -> Result<Angle> {
        if !t.is_finite() {
            return Err(Error::domain("angle must be finite"));
        }
        let mut u = t.rem_euclid(1.0);
        if u == 0.0 {
            u = 1.0;
        }
        Ok(Angle::Approx(u))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Angle::Exact(_))
    }

    /// The underlying rational for exact angles.
    pub fn rational(&self) -> Option<&BigRational> {
        match self {
            Angle::Exact(r) => Some(r),
            Angle::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Angle::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Angle::Approx(t) => *t,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Angle::Approx(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for Angle {
    type Err = Error;

    /// Parses "p/q" as an exact angle, a bare integer as an exact angle, and
    /// anything else that reads as a float as an inexact angle.
    fn from_str(s: &str) -> Result<Angle> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p = BigInt::from_str(p.trim())
                .map_err(|_| Error::domain(format!("bad angle numerator in {s:?}")))?;
            let q = BigInt::from_str(q.trim())
                .map_err(|_| Error::domain(format!("bad angle denominator in {s:?}")))?;
            if q.is_zero() {
                return Err(Error::domain("angle denominator must be nonzero"));
            }
            return Ok(Angle::from_rational(BigRational::new(p, q)));
        }
        if let Ok(p) = BigInt::from_str(s) {
            return Ok(Angle::from_rational(BigRational::from_integer(p)));
        }
        let t: f64 = s
            .parse()
            .map_err(|_| Error::domain(format!("cannot parse angle from {s:?}")))?;
        Angle::approx(t)
    }
}

/// Wraps a rational into the fundamental domain (0,1].
fn normalize_mod1(r: BigRational) -> BigRational {
    let f = r.floor();
    let mut out = r - &f;
    if out.is_zero() {
        out = BigRational::one();
    }
    out
}

fn tau_rational(n: u32, theta: &BigRational) -> BigRational {
    normalize_mod1(theta * BigInt::from(n))
}

/// τ(θ) = nθ mod 1, exactly.  Requires an exact angle.
pub fn tau(n: u32, theta: &Angle) -> Result<Angle> {
    match theta {
        Angle::Exact(r) => Ok(Angle::Exact(tau_rational(n, r))),
        Angle::Approx(_) => Err(Error::precondition("tau requires an exact angle")),
    }
}

fn partition_of_rational(n: u32, theta: &BigRational) -> i32 {
    // θ ∈ (m/2n, (m+1)/2n] exactly when m = ceil(2nθ) - 1.
    let m: BigInt = (theta * BigInt::from(2 * n)).ceil().to_integer() - 1;
    let m = m.to_i64().expect("partition cell index fits i64") as i32;
    if m <= n as i32 {
        m
    } else {
        -(m - n as i32)
    }
}

/// The symbol j with θ ∈ Θ_j, for θ ∈ (0,1].
///
/// Positive labels 0..=n run counterclockwise from the positive real axis;
/// the remaining cells carry labels −1..=−(n−1).  For inexact angles the
/// classification is done in floating point and is unreliable within
/// rounding distance of a cell boundary.
pub fn partition_index(n: u32, theta: &Angle) -> i32 {
    match theta {
        Angle::Exact(r) => partition_of_rational(n, r),
        Angle::Approx(t) => {
            let m = ((2 * n) as f64 * t).ceil() as i64 - 1;
            let m = m.clamp(0, 2 * n as i64 - 1) as i32;
            if m <= n as i32 {
                m
            } else {
                -(m - n as i32)
            }
        }
    }
}

/// A finite run of partition symbols along a τ-orbit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Itinerary {
    pub symbols: Vec<i32>,
    /// For exact angles whose orbit closed up within the requested depth:
    /// (preperiod, period) of the symbol sequence.
    pub repetition: Option<(usize, usize)>,
}

/// The first `depth` symbols of the itinerary of θ, with preperiod/period
/// detected for exact angles.
pub fn itinerary(n: u32, theta: &Angle, depth: usize) -> Itinerary {
    match theta {
        Angle::Exact(r) => {
            let mut symbols = Vec::with_capacity(depth);
            let mut seen: HashMap<BigRational, usize> = HashMap::new();
            let mut repetition = None;
            let mut x = r.clone();
            for k in 0..depth {
                if repetition.is_none() {
                    if let Some(&first) = seen.get(&x) {
                        repetition = Some((first, k - first));
                    } else {
                        seen.insert(x.clone(), k);
                    }
                }
                symbols.push(partition_of_rational(n, &x));
                x = tau_rational(n, &x);
            }
            if repetition.is_none() {
                if let Some(&first) = seen.get(&x) {
                    repetition = Some((first, depth - first));
                }
            }
            Itinerary { symbols, repetition }
        }
        Angle::Approx(t) => {
            let mut symbols = Vec::with_capacity(depth);
            let mut x = *t;
            for _ in 0..depth {
                symbols.push(partition_index(n, &Angle::Approx(x)));
                x = (n as f64 * x).fract();
                if x == 0.0 {
                    x = 1.0;
                }
            }
            Itinerary {
                symbols,
                repetition: None,
            }
        }
    }
}

/// Trichotomy for membership of θ in the Cantor set Θ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Yes,
    No,
    Undetermined,
}

/// Whether the forward orbit of θ avoids Θ₀ and Θ_n forever.
///
/// Exact angles get a definite answer by running the orbit until it closes
/// up; inexact angles are checked for `depth` steps and report
/// `Undetermined` if they survive.
pub fn in_theta(n: u32, theta: &Angle, depth: usize) -> Membership {
    match theta {
        Angle::Exact(r) => {
            let mut seen: HashMap<BigRational, ()> = HashMap::new();
            let mut x = r.clone();
            // Rational orbits close up after at most denominator-many steps;
            // the cap is a guard against absurd inputs, not a tunable.
            let cap = depth.max(1_000_000);
            for _ in 0..cap {
                let s = partition_of_rational(n, &x);
                if s == 0 || s == n as i32 {
                    return Membership::No;
                }
                if seen.insert(x.clone(), ()).is_some() {
                    return Membership::Yes;
                }
                x = tau_rational(n, &x);
            }
            Membership::Undetermined
        }
        Angle::Approx(t) => {
            let mut x = *t;
            for _ in 0..depth {
                let s = partition_index(n, &Angle::Approx(x));
                if s == 0 || s == n as i32 {
                    return Membership::No;
                }
                x = (n as f64 * x).fract();
                if x == 0.0 {
                    x = 1.0;
                }
            }
            Membership::Undetermined
        }
    }
}

/// The exact angle whose itinerary repeats the given symbol block.
///
/// For a purely periodic itinerary (s₀,…,s_{p−1}) over {±1,…,±(n−1)} the
/// generating angle is
///
/// ```text
///     θ = ½ ( χ(s₀)/n + Σ_{k≥1} |s_k| / n^(k+1) ),
/// ```
///
/// with χ(s) = s for 0 ≤ s ≤ n and χ(s) = n − s for s < 0.  The geometric
/// tail is summed in closed form over one period, keeping everything in
/// integer arithmetic.
pub fn angle_from_itinerary(n: u32, symbols: &[i32]) -> Result<Angle> {
    if symbols.is_empty() {
        return Err(Error::domain("itinerary must contain at least one symbol"));
    }
    for &s in symbols {
        if s == 0 || s.unsigned_abs() > n - 1 {
            return Err(Error::domain(format!(
                "itinerary symbol {s} outside the alphabet ±1..±{} for n={n}",
                n - 1
            )));
        }
    }
    let p = symbols.len();
    let s0 = symbols[0];
    let chi = if s0 >= 0 {
        BigInt::from(s0)
    } else {
        BigInt::from(n as i32 - s0)
    };
    let np = BigInt::from(n).pow(p as u32);
    let np1 = &np - BigInt::one();
    // T = Σ_{k=1..p} |s_{k mod p}| n^(p−k), the periodic tail over one block.
    let mut tail = BigInt::zero();
    for k in 1..=p {
        let s = symbols[k % p];
        tail = tail * BigInt::from(n) + BigInt::from(s.unsigned_abs());
    }
    let num = chi * &np1 + tail;
    let den = BigInt::from(2 * n) * np1;
    Ok(Angle::from_rational(BigRational::new(num, den)))
}

/// All τ-periodic angles of period ≤ `max_period` in Θ, excluding the two
/// fixed angles 1 and 1/2, sorted increasing.
pub fn enumerate_theta_per(n: u32, max_period: usize) -> Result<Vec<Angle>> {
    if max_period == 0 {
        return Err(Error::domain("max_period must be at least 1"));
    }
    let alphabet: Vec<i32> = (1..n as i32)
        .flat_map(|k| [k, -k])
        .collect();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let one = BigRational::one();
    let mut found: std::collections::BTreeSet<BigRational> = Default::default();
    for p in 1..=max_period {
        let mut idx = vec![0usize; p];
        loop {
            let symbols: Vec<i32> = idx.iter().map(|&i| alphabet[i]).collect();
            if let Ok(Angle::Exact(theta)) = angle_from_itinerary(n, &symbols) {
                if theta != one && theta != half {
                    // Realized period-p angles of Θ return to themselves in p
                    // steps with every intermediate symbol in the safe
                    // alphabet; anything else the formula produced is not a
                    // genuine itinerary and is discarded.
                    let mut x = theta.clone();
                    let mut clean = true;
                    for _ in 0..p {
                        let s = partition_of_rational(n, &x);
                        if s == 0 || s.unsigned_abs() >= n {
                            clean = false;
                            break;
                        }
                        x = tau_rational(n, &x);
                    }
                    if clean && x == theta {
                        found.insert(theta);
                    }
                }
            }
            // Advance the mixed-radix counter over symbol strings.
            let mut pos = 0;
            loop {
                if pos == p {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < alphabet.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == p {
                break;
            }
        }
    }
    Ok(found.into_iter().map(Angle::Exact).collect())
}

/// The smallest p with τ^p(θ) = θ, or `None` when θ is strictly preperiodic.
pub fn is_tau_periodic(n: u32, theta: &Angle) -> Result<Option<usize>> {
    let r = theta
        .rational()
        .ok_or_else(|| Error::precondition("periodicity test requires an exact angle"))?;
    let mut seen: HashMap<BigRational, ()> = HashMap::new();
    let mut x = r.clone();
    for k in 0..1_000_000usize {
        if k > 0 && &x == r {
            return Ok(Some(k));
        }
        if seen.insert(x.clone(), ()).is_some() {
            return Ok(None);
        }
        x = tau_rational(n, &x);
    }
    Err(Error::no_convergence("periodicity search exceeded step cap", f64::NAN))
}

/// An angle of ∪_k τ^{−k}(Θ_per) strictly inside the shorter arc between t1
/// and t2, whose base periodic angle is not rejected by `forbidden`.
///
/// Searches preimages (θ_per + j)/n^k of increasing depth; density of the
/// preimage tree guarantees success once n^(−k) is smaller than the arc.
pub fn separating_angle(
    n: u32,
    t1: &Angle,
    t2: &Angle,
    forbidden: &dyn Fn(&Angle) -> bool,
) -> Result<Angle> {
    const MAX_DEPTH: u32 = 64;
    const BASE_PERIOD: usize = 4;
    let to_exact = |a: &Angle| -> BigRational {
        match a {
            Angle::Exact(r) => r.clone(),
            Angle::Approx(t) => BigRational::from_float(*t).expect("finite angle"),
        }
    };
    let a = to_exact(t1);
    let b = to_exact(t2);
    if a == b {
        return Err(Error::domain("separating angle requires distinct endpoints"));
    }
    // Shorter arc on the universal cover: (lo, lo + d) with d ≤ 1/2.
    let d = normalize_mod1(&b - &a);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let (lo, hi) = if d <= half {
        (a.clone(), &a + &d)
    } else {
        (b.clone(), &b + (BigRational::one() - &d))
    };
    let bases: Vec<BigRational> = enumerate_theta_per(n, BASE_PERIOD)?
        .into_iter()
        .filter(|t| !forbidden(t))
        .filter_map(|t| match t {
            Angle::Exact(r) => Some(r),
            Angle::Approx(_) => None,
        })
        .collect();
    if bases.is_empty() {
        return Err(Error::domain("every base periodic angle was rejected"));
    }
    let mut scale = BigInt::one();
    for _ in 0..=MAX_DEPTH {
        for base in &bases {
            // Need lo < (base + j)/n^k < hi, i.e. j in the open interval
            // (n^k lo − base, n^k hi − base).
            let jlo = (&lo * &scale - base).floor().to_integer() + BigInt::one();
            let jhi = (&hi * &scale - base).ceil().to_integer() - BigInt::one();
            let mut j = jlo;
            while j <= jhi {
                let alpha = (base + BigRational::from_integer(j.clone()))
                    / BigRational::from_integer(scale.clone());
                if &alpha > &lo && &alpha < &hi {
                    return Ok(Angle::Exact(normalize_mod1(alpha)));
                }
                j += BigInt::one();
            }
        }
        scale *= BigInt::from(n);
    }
    Err(Error::no_convergence(
        "separating angle search exhausted preimage depth",
        (&hi - &lo).to_f64().unwrap_or(f64::NAN),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(p: i64, q: i64) -> Angle {
        Angle::exact(p, q).unwrap()
    }

    fn rat(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn tau_examples() {
        assert_eq!(tau(3, &ex(1, 2)).unwrap(), ex(1, 2));
        assert_eq!(tau(3, &ex(1, 4)).unwrap(), ex(3, 4));
        assert_eq!(tau(3, &ex(1, 1)).unwrap(), ex(1, 1));
        assert!(tau(3, &Angle::approx(0.3).unwrap()).is_err());
    }

    #[test]
    fn angles_normalize_into_half_open_unit() {
        assert_eq!(ex(5, 4), ex(1, 4));
        assert_eq!(ex(-1, 4), ex(3, 4));
        assert_eq!(ex(2, 1), ex(1, 1));
        assert_eq!(Angle::approx(0.0).unwrap(), Angle::Approx(1.0));
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition_index(3, &ex(1, 2)), 2);
        assert_eq!(partition_index(3, &ex(1, 1)), -2);
        assert_eq!(partition_index(3, &ex(1, 4)), 1);
        // Boundary cells: Θ₀ = (0, 1/6] owns its right endpoint.
        assert_eq!(partition_index(3, &ex(1, 6)), 0);
        assert_eq!(partition_index(3, &ex(1, 8)), 0);
        assert_eq!(partition_index(3, &ex(1, 3)), 1);
        assert_eq!(partition_index(3, &ex(2, 3)), 3);
    }

    #[test]
    fn partition_cells_tile_the_circle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        for n in [3u32, 4, 5] {
            for _ in 0..10_000 / 3 {
                let q = rng.gen_range(1..1_000_000i64);
                let p = rng.gen_range(1..=q);
                let theta = rat(p, q);
                let j = partition_of_rational(n, &theta);
                // Recover the cell (m/2n, (m+1)/2n] from the label and check
                // containment; uniqueness is forced because the cells tile.
                let m = if j >= 0 { j } else { n as i32 - j };
                let lo = rat(m as i64, 2 * n as i64);
                let hi = rat(m as i64 + 1, 2 * n as i64);
                assert!(theta > lo && theta <= hi, "n={n} θ={theta} j={j}");
            }
        }
    }

    #[test]
    fn itinerary_examples() {
        let it = itinerary(3, &ex(1, 2), 6);
        assert_eq!(it.symbols, vec![2; 6]);
        assert_eq!(it.repetition, Some((0, 1)));

        let it = itinerary(3, &ex(1, 1), 4);
        assert_eq!(it.symbols, vec![-2; 4]);
        assert_eq!(it.repetition, Some((0, 1)));

        let it = itinerary(3, &ex(1, 4), 6);
        assert_eq!(it.symbols, vec![1, -1, 1, -1, 1, -1]);
        assert_eq!(it.repetition, Some((0, 2)));

        // Strictly preperiodic: 1/12 → 1/4 → 3/4 → 1/4.
        let it = itinerary(3, &ex(1, 12), 6);
        assert_eq!(it.repetition, Some((1, 2)));
    }

    #[test]
    fn itinerary_shift_equivariance() {
        for n in [3u32, 4, 5] {
            for theta in enumerate_theta_per(n, 4).unwrap() {
                let shifted = tau(n, &theta).unwrap();
                let a = itinerary(n, &theta, 9);
                let b = itinerary(n, &shifted, 8);
                assert_eq!(&a.symbols[1..], &b.symbols[..]);
            }
        }
    }

    #[test]
    fn in_theta_examples() {
        assert_eq!(in_theta(3, &ex(1, 4), 64), Membership::Yes);
        assert_eq!(in_theta(3, &ex(1, 8), 64), Membership::No);
        assert_eq!(in_theta(3, &ex(1, 2), 64), Membership::Yes);
        // 5/8 sits in Θ₃ = Θ_n immediately.
        assert_eq!(in_theta(3, &ex(5, 8), 64), Membership::No);
        // Inexact angles can only be ruled out, never confirmed.
        assert_eq!(
            in_theta(3, &Angle::approx(0.25).unwrap(), 32),
            Membership::Undetermined
        );
        assert_eq!(
            in_theta(3, &Angle::approx(0.125).unwrap(), 32),
            Membership::No
        );
    }

    #[test]
    fn angle_from_itinerary_examples() {
        assert_eq!(angle_from_itinerary(3, &[2]).unwrap(), ex(1, 2));
        assert_eq!(angle_from_itinerary(3, &[-2]).unwrap(), ex(1, 1));
        assert_eq!(angle_from_itinerary(3, &[1, -1]).unwrap(), ex(1, 4));
        assert_eq!(angle_from_itinerary(3, &[-1, 1]).unwrap(), ex(3, 4));
        assert!(angle_from_itinerary(3, &[0]).is_err());
        assert!(angle_from_itinerary(3, &[3]).is_err());
        assert!(angle_from_itinerary(3, &[]).is_err());
    }

    #[test]
    fn theta_per_small_cases() {
        let per2 = enumerate_theta_per(3, 2).unwrap();
        assert!(per2.contains(&ex(1, 4)));
        assert!(per2.contains(&ex(3, 4)));
        assert!(!per2.contains(&ex(1, 2)));
        assert!(!per2.contains(&ex(1, 1)));
        // For n=3 these are the only Θ-periodic angles up to period 2.
        assert_eq!(per2.len(), 2);
    }

    #[test]
    fn theta_per_members_are_periodic_and_safe() {
        for n in [3u32, 4, 5] {
            let max_p = 4;
            let angles = enumerate_theta_per(n, max_p).unwrap();
            let bound: usize = (1..=max_p).map(|p| (2 * (n as usize - 1)).pow(p as u32)).sum();
            assert!(angles.len() <= bound);
            for theta in &angles {
                assert_eq!(in_theta(n, theta, 64), Membership::Yes);
                let p = is_tau_periodic(n, theta).unwrap().unwrap();
                assert!(p <= max_p);
            }
        }
    }

    #[test]
    fn round_trip_through_itineraries() {
        for n in [3u32, 4, 5] {
            for theta in enumerate_theta_per(n, 6).unwrap() {
                let it = itinerary(n, &theta, 16);
                let (pre, p) = it.repetition.unwrap();
                assert_eq!(pre, 0);
                let back = angle_from_itinerary(n, &it.symbols[..p]).unwrap();
                assert_eq!(back, theta, "n={n} θ={theta}");
            }
        }
    }

    #[test]
    fn is_tau_periodic_examples() {
        assert_eq!(is_tau_periodic(3, &ex(1, 4)).unwrap(), Some(2));
        assert_eq!(is_tau_periodic(3, &ex(1, 12)).unwrap(), None);
        assert_eq!(is_tau_periodic(3, &ex(1, 1)).unwrap(), Some(1));
        assert_eq!(is_tau_periodic(3, &ex(1, 2)).unwrap(), Some(1));
    }

    #[test]
    fn separating_angle_basic() {
        let none = |_: &Angle| false;
        let a = separating_angle(3, &Angle::approx(0.10).unwrap(), &Angle::approx(0.40).unwrap(), &none)
            .unwrap();
        let t = a.to_f64();
        assert!(t > 0.10 && t < 0.40);

        let a = separating_angle(3, &Angle::approx(0.24).unwrap(), &Angle::approx(0.26).unwrap(), &none)
            .unwrap();
        let t = a.to_f64();
        assert!(t > 0.24 && t < 0.26);

        // Tight arc, exact endpoints, forbidding the obvious base: a deeper
        // preimage of some other base must be found instead.
        let no_quarter = |x: &Angle| x == &ex(1, 4);
        let a = separating_angle(3, &ex(249, 1000), &ex(251, 1000), &no_quarter).unwrap();
        let r = a.rational().unwrap();
        assert!(r > &rat(249, 1000) && r < &rat(251, 1000));

        // Rejecting every base is an error, not a panic.
        let all = |_: &Angle| true;
        assert!(separating_angle(3, &ex(1, 10), &ex(2, 5), &all).is_err());
    }

    #[test]
    fn separating_angle_wraps_around_one() {
        let none = |_: &Angle| false;
        // Shorter arc from 0.95 to 0.05 crosses the angle 1 ≡ 0.
        let a = separating_angle(3, &Angle::approx(0.95).unwrap(), &Angle::approx(0.05).unwrap(), &none)
            .unwrap();
        let t = a.to_f64();
        assert!(t > 0.95 || t <= 0.05, "got {t}");
    }

    #[test]
    fn angle_parsing_and_display() {
        let a: Angle = "3/4".parse().unwrap();
        assert_eq!(a, ex(3, 4));
        assert_eq!(a.to_string(), "3/4");
        let b: Angle = "7/4".parse().unwrap();
        assert_eq!(b, ex(3, 4));
        let c: Angle = "0.25".parse().unwrap();
        assert!(!c.is_exact());
        assert!((c.to_f64() - 0.25).abs() < 1e-15);
        let d: Angle = "2".parse().unwrap();
        assert_eq!(d, ex(1, 1));
        assert!("1/0".parse::<Angle>().is_err());
        assert!("xyz".parse::<Angle>().is_err());
    }
}
