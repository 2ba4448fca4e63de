//! `su(2)` ladder coefficients and Clebsch-Gordan coefficients
//! (Condon-Shortley phase convention).

use std::sync::OnceLock;

use crate::error::{domain, Result};
use crate::half::HalfInt;
use crate::scalar::Real;

/// Largest spin accepted by [`su2_cg`].
pub const SPIN_CAP: HalfInt = HalfInt::from_int(50);

/// Ladder coefficient `C_+(j,m) = sqrt(j-m) sqrt(j+m+1)` or
/// `C_-(j,m) = sqrt(j+m) sqrt(j-m+1)`.
pub fn c_pm<T: Real>(raising: bool, j: HalfInt, m: HalfInt) -> Result<T> {
    if m.abs() > j || !(j - m).is_integer() {
        return domain(format!("|m| = |{m}| is not a projection of j = {j}"));
    }
    Ok(ladder(raising, j, m))
}

/// Unchecked ladder coefficient; callers guarantee `|m| <= j`.
pub(crate) fn ladder<T: Real>(raising: bool, j: HalfInt, m: HalfInt) -> T {
    let (j, m) = (T::from_half(j), T::from_half(m));
    let one = T::one();
    if raising {
        ((j - m) * (j + m + one)).sqrt()
    } else {
        ((j + m) * (j - m + one)).sqrt()
    }
}

fn ln_factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = 4 * (SPIN_CAP.twice() as usize) + 8;
        let mut t = Vec::with_capacity(n);
        let mut acc = 0.0f64;
        t.push(0.0);
        for k in 1..n {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    })
}

fn factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![1.0f64];
        for k in 1..=170 {
            let prev = t[k - 1];
            t.push(prev * k as f64);
        }
        t
    })
}

fn valid_pair(j: HalfInt, m: HalfInt) -> bool {
    !j.is_negative() && m.abs() <= j && (j - m).is_integer()
}

/// `<j1, m1; j2, m2 | J, M>`.
///
/// Returns exactly zero outside the selection rules (`M = m1 + m2`, triangle
/// rule); malformed spin/projection pairs are a domain error.
pub fn su2_cg<T: Real>(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    big_j: HalfInt,
    big_m: HalfInt,
) -> Result<T> {
    for (j, m) in [(j1, m1), (j2, m2), (big_j, big_m)] {
        if !valid_pair(j, m) {
            return domain(format!("malformed spin pair (j = {j}, m = {m})"));
        }
        if j > SPIN_CAP {
            return domain(format!("spin {j} exceeds supported cap {SPIN_CAP}"));
        }
    }
    Ok(T::lit(cg_f64(j1, m1, j2, m2, big_j, big_m)))
}

/// Unchecked evaluation; used on index grids already known to be valid.
pub(crate) fn cg<T: Real>(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, big_j: HalfInt, big_m: HalfInt) -> T {
    T::lit(cg_f64(j1, m1, j2, m2, big_j, big_m))
}

// Racah single-sum form. Exact factorials while they stay small, logarithms beyond.
fn cg_f64(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, big_j: HalfInt, big_m: HalfInt) -> f64 {
    if m1 + m2 != big_m || big_j > j1 + j2 || big_j < (j1 - j2).abs() || !(j1 + j2 - big_j).is_integer() {
        return 0.0;
    }
    let i = |h: HalfInt| h.as_int().expect("integral combination") as i64;
    let a = i(big_j + j1 - j2);
    let b = i(big_j - j1 + j2);
    let c = i(j1 + j2 - big_j);
    let d = i(j1 + j2 + big_j) + 1;
    let p = [i(big_j + big_m), i(big_j - big_m), i(j1 - m1), i(j1 + m1), i(j2 - m2), i(j2 + m2)];

    let k1 = i(j1 + j2 - big_j);
    let k2 = i(j1 - m1);
    let k3 = i(j2 + m2);
    let k4 = i(big_j - j2 + m1);
    let k5 = i(big_j - j1 - m2);
    let kmin = 0.max(-k4).max(-k5);
    let kmax = k1.min(k2).min(k3);
    if kmin > kmax {
        return 0.0;
    }
    let two_j1 = f64::from(big_j.twice()) + 1.0;

    if d <= 20 {
        let f = factorials();
        let fi = |n: i64| f[n as usize];
        let pre = (two_j1 * fi(a) * fi(b) * fi(c) / fi(d)).sqrt() * p.iter().map(|&n| fi(n)).product::<f64>().sqrt();
        let mut sum = 0.0;
        for k in kmin..=kmax {
            let den = fi(k) * fi(k1 - k) * fi(k2 - k) * fi(k3 - k) * fi(k4 + k) * fi(k5 + k);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign / den;
        }
        pre * sum
    } else {
        let lf = ln_factorials();
        let l = |n: i64| lf[n as usize];
        let ln_pre = 0.5 * (two_j1.ln() + l(a) + l(b) + l(c) - l(d) + p.iter().map(|&n| l(n)).sum::<f64>());
        let mut sum = 0.0;
        for k in kmin..=kmax {
            let ln_den = l(k) + l(k1 - k) + l(k2 - k) + l(k3 - k) + l(k4 + k) + l(k5 + k);
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (ln_pre - ln_den).exp();
        }
        sum
    }
}
