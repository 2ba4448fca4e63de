//! Exact half-integers and the index sets used for basis bookkeeping.
//!
//! Every spin-like label (`j`, `m`, `lambda`, `gamma`, `J`, ...) is stored as
//! twice its value, so all index arithmetic is integer arithmetic. Ordered
//! sets are returned ascending; matrix layouts derive from positions in them.

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt {
    twice: i32,
}

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt { twice: 0 };
    pub const HALF: HalfInt = HalfInt { twice: 1 };
    pub const ONE: HalfInt = HalfInt { twice: 2 };

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt { twice }
    }

    pub const fn from_int(n: i32) -> Self {
        HalfInt { twice: 2 * n }
    }

    pub const fn twice(self) -> i32 {
        self.twice
    }

    pub fn to_f64(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.twice % 2 == 0
    }

    pub const fn abs(self) -> Self {
        HalfInt { twice: self.twice.abs() }
    }

    pub const fn is_negative(self) -> bool {
        self.twice < 0
    }

    /// Exact value when it is an integer.
    pub fn as_int(self) -> Option<i32> {
        self.is_integer().then_some(self.twice / 2)
    }

    /// `x(x+1)` as an exact rational, returned in `f64`.
    pub fn casimir(self) -> f64 {
        let x = self.to_f64();
        x * (x + 1.0)
    }

    /// Parses `"3/2"`, `"-1/2"`, `"2"` or a plain decimal multiple of 1/2.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i32 = num.trim().parse().ok()?;
            match den.trim() {
                "2" => Some(HalfInt::from_twice(num)),
                "1" => Some(HalfInt::from_int(num)),
                _ => None,
            }
        } else if let Ok(n) = s.parse::<i32>() {
            Some(HalfInt::from_int(n))
        } else {
            let x: f64 = s.parse().ok()?;
            let t = 2.0 * x;
            (t.fract() == 0.0 && t.abs() < f64::from(i32::MAX)).then(|| HalfInt::from_twice(t as i32))
        }
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl fmt::Debug for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice + rhs.twice }
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt { twice: self.twice - rhs.twice }
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt { twice: -self.twice }
    }
}

impl AddAssign for HalfInt {
    fn add_assign(&mut self, rhs: HalfInt) {
        self.twice += rhs.twice;
    }
}

impl SubAssign for HalfInt {
    fn sub_assign(&mut self, rhs: HalfInt) {
        self.twice -= rhs.twice;
    }
}

/// Inclusive ascending range `lo, lo+1, ..., hi` (empty when `hi < lo`).
pub fn steps(lo: HalfInt, hi: HalfInt) -> impl Iterator<Item = HalfInt> + Clone {
    let n = if hi < lo { 0 } else { (hi.twice - lo.twice) / 2 + 1 };
    (0..n).map(move |k| HalfInt::from_twice(lo.twice + 2 * k))
}

/// `M_j = {-j, -j+1, ..., j}`.
pub fn mrange(j: HalfInt) -> Result<Vec<HalfInt>> {
    if j.is_negative() {
        return domain(format!("negative spin j = {j}"));
    }
    Ok(steps(-j, j).collect())
}

fn check_gamma(gamma: HalfInt) -> Result<()> {
    if gamma.twice() < 1 {
        return domain(format!("gamma = {gamma} must be at least 1/2"));
    }
    Ok(())
}

/// Smallest element of the set of admissible total spins `J` for
/// `F_gamma (x) V_lambda`: `max(eps, |lambda| - gamma)` with `eps` the
/// fractional part forced by `lambda + gamma`.
pub fn jset_min(lambda: HalfInt, gamma: HalfInt) -> Result<HalfInt> {
    check_gamma(gamma)?;
    let eps = if (lambda + gamma).is_integer() { HalfInt::ZERO } else { HalfInt::HALF };
    Ok(std::cmp::max(eps, lambda.abs() - gamma))
}

pub fn in_jset(lambda: HalfInt, gamma: HalfInt, big_j: HalfInt) -> Result<bool> {
    let lo = jset_min(lambda, gamma)?;
    Ok(big_j >= lo && (big_j - lo).is_integer())
}

/// All admissible `J` up to and including `j_max`.
pub fn jset_upto(lambda: HalfInt, gamma: HalfInt, j_max: HalfInt) -> Result<Vec<HalfInt>> {
    let lo = jset_min(lambda, gamma)?;
    Ok(steps(lo, j_max).collect())
}

fn require_jset(lambda: HalfInt, gamma: HalfInt, big_j: HalfInt) -> Result<()> {
    if !in_jset(lambda, gamma, big_j)? {
        return domain(format!("J = {big_j} is not admissible for lambda = {lambda}, gamma = {gamma}"));
    }
    Ok(())
}

/// The `j` labels spanning the `J`-eigenspace of `F_gamma (x) V_lambda`.
pub fn omega_set(lambda: HalfInt, gamma: HalfInt, big_j: HalfInt) -> Result<Vec<HalfInt>> {
    require_jset(lambda, gamma, big_j)?;
    let l = lambda.abs();
    let (lo, hi) = if big_j >= (l - gamma).abs() {
        (std::cmp::max(l, big_j - gamma), big_j + gamma)
    } else {
        (gamma - big_j, gamma + big_j)
    };
    Ok(steps(lo, hi).collect())
}

/// Dimension of the `(J_0, J^2)` eigenspace `V^J_M` (independent of `M`).
pub fn vj_dimension(lambda: HalfInt, gamma: HalfInt, big_j: HalfInt) -> Result<usize> {
    require_jset(lambda, gamma, big_j)?;
    let l = lambda.abs();
    let n = if big_j >= (l - gamma).abs() {
        std::cmp::min(big_j + gamma - l + HalfInt::ONE, gamma + gamma + HalfInt::ONE)
    } else {
        big_j + big_j + HalfInt::ONE
    };
    Ok(n.as_int().expect("dimension is integral") as usize)
}

/// Whether `J` belongs to `|lambda + nu| + N_0`.
pub fn in_sigma(lambda: HalfInt, nu: HalfInt, big_j: HalfInt) -> bool {
    let base = (lambda + nu).abs();
    big_j >= base && (big_j - base).is_integer()
}

/// `sum_nu 1[J in Sigma_nu]` over `nu in M_gamma`.
pub fn sigma_count(lambda: HalfInt, gamma: HalfInt, big_j: HalfInt) -> Result<usize> {
    Ok(mrange(gamma)?.into_iter().filter(|&nu| in_sigma(lambda, nu, big_j)).count())
}
