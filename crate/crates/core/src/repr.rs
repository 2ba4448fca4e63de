//! Matrix realisations of the irreducible `(g, K)`-modules of `Spin(3,1)`.
//!
//! `V_{lambda,rho}` is realised on the orthonormal basis `|j, m>` with
//! `j = |lambda|, |lambda|+1, ...`, truncated at a cutoff `j_cut`. The
//! finite-dimensional left/right modules `F^A_gamma` act on `|gamma, mu>`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::half::{mrange, steps, HalfInt};
use crate::scalar::{c_half, c_i, c_real, cabs, checked_complex, csqrt, near_integer, rsqrt, Real, C};
use crate::sparse::{Basis, SparseOperator, State};
use crate::su2::ladder;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Generator {
    J0,
    #[serde(rename = "J+")]
    Jp,
    #[serde(rename = "J-")]
    Jm,
    K0,
    #[serde(rename = "K+")]
    Kp,
    #[serde(rename = "K-")]
    Km,
}

impl Generator {
    pub const ALL: [Generator; 6] = [Generator::J0, Generator::Jp, Generator::Jm, Generator::K0, Generator::Kp, Generator::Km];

    pub fn is_boost(self) -> bool {
        matches!(self, Generator::K0 | Generator::Kp | Generator::Km)
    }

    /// Change in `m` produced by the generator.
    pub fn shift(self) -> HalfInt {
        match self {
            Generator::J0 | Generator::K0 => HalfInt::ZERO,
            Generator::Jp | Generator::Kp => HalfInt::ONE,
            Generator::Jm | Generator::Km => -HalfInt::ONE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Generator::J0 => "J0",
            Generator::Jp => "J+",
            Generator::Jm => "J-",
            Generator::K0 => "K0",
            Generator::Kp => "K+",
            Generator::Km => "K-",
        }
    }

    fn from_ladder_index(i: usize) -> Generator {
        Generator::ALL[i]
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

// Cartesian basis (J_0, J_1, J_2, K_0, K_1, K_2) with
// [J_a,J_b] = i e_abc J_c, [J_a,K_b] = i e_abc K_c, [K_a,K_b] = -i e_abc J_c.
fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

type Vec6 = [Complex<f64>; 6];

fn ladder_to_cartesian(g: Generator) -> Vec6 {
    let z = Complex::new(0.0, 0.0);
    let one = Complex::new(1.0, 0.0);
    let i = Complex::new(0.0, 1.0);
    let mut v = [z; 6];
    let off = if g.is_boost() { 3 } else { 0 };
    match g {
        Generator::J0 | Generator::K0 => v[off] = one,
        Generator::Jp | Generator::Kp => {
            v[off + 1] = one;
            v[off + 2] = i;
        }
        Generator::Jm | Generator::Km => {
            v[off + 1] = one;
            v[off + 2] = -i;
        }
    }
    v
}

fn cartesian_to_ladder(v: &Vec6) -> Vec6 {
    // X_1 = (X_+ + X_-)/2, X_2 = (X_+ - X_-)/(2i)
    let z = Complex::new(0.0, 0.0);
    let half = Complex::new(0.5, 0.0);
    let half_over_i = Complex::new(0.0, -0.5);
    let mut out = [z; 6];
    for (off, (l0, lp, lm)) in [(0, (0, 1, 2)), (3, (3, 4, 5))] {
        out[l0] += v[off];
        out[lp] += v[off + 1] * half + v[off + 2] * half_over_i;
        out[lm] += v[off + 1] * half - v[off + 2] * half_over_i;
    }
    out
}

/// `[a, b]` expanded in the ladder basis, derived from the Cartesian
/// commutation relations of `spin(3,1)`.
pub fn ladder_commutator(a: Generator, b: Generator) -> Vec<(Generator, Complex<f64>)> {
    let va = ladder_to_cartesian(a);
    let vb = ladder_to_cartesian(b);
    let i = Complex::new(0.0, 1.0);
    let mut out = [Complex::new(0.0, 0.0); 6];
    for p in 0..6 {
        for q in 0..6 {
            let coef = va[p] * vb[q];
            if coef == Complex::new(0.0, 0.0) {
                continue;
            }
            let (pa, pk) = (p % 3, p >= 3);
            let (qa, qk) = (q % 3, q >= 3);
            for c in 0..3 {
                let e = levi_civita(pa, qa, c);
                if e == 0.0 {
                    continue;
                }
                match (pk, qk) {
                    (false, false) => out[c] += coef * i * e,
                    (false, true) | (true, false) => out[3 + c] += coef * i * e,
                    (true, true) => out[c] -= coef * i * e,
                }
            }
        }
    }
    cartesian_to_ladder(&out)
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(k, &v)| (Generator::from_ladder_index(k), v))
        .collect()
}

// Keep the index mapping honest.
const _: () = assert!(Generator::K0 as usize == 3);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IrrepLabel<T: Real> {
    pub lambda: HalfInt,
    pub rho: C<T>,
}

impl<T: Real> IrrepLabel<T> {
    pub fn new(lambda: HalfInt, rho: C<T>) -> Result<Self> {
        let rho = checked_complex(rho.re, rho.im)?;
        Ok(IrrepLabel { lambda, rho })
    }

    /// Label of the isomorphic module `V_{-lambda,-rho}`.
    pub fn negated(self) -> Self {
        IrrepLabel { lambda: -self.lambda, rho: -self.rho }
    }

    /// Representative of the isomorphism class: `lambda > 0`, or `lambda = 0`
    /// and `rho` in the closed right half plane (upper half on the imaginary axis).
    pub fn canonical(self) -> Self {
        let tol = label_tol(self.rho);
        let flip = if self.lambda.is_negative() {
            true
        } else if self.lambda == HalfInt::ZERO {
            self.rho.re < -tol || (self.rho.re.abs() <= tol && self.rho.im < -tol)
        } else {
            false
        };
        if flip {
            self.negated()
        } else {
            self
        }
    }

    /// Same isomorphism class, within `tol` on `rho`.
    pub fn equivalent(&self, other: &Self, tol: T) -> bool {
        let close = |a: &Self, b: &Self| a.lambda == b.lambda && cabs(a.rho - b.rho) <= tol;
        close(self, other) || close(&self.negated(), other)
    }

    /// `Some(j_max)` when the module is finite-dimensional.
    pub fn j_max(&self) -> Option<HalfInt> {
        let tol = label_tol(self.rho);
        if self.rho.im.abs() > tol {
            return None;
        }
        let a = self.rho.re.abs();
        let twice = near_integer(a + a, tol + tol)?;
        let abs_rho = HalfInt::from_twice(twice as i32);
        let n = abs_rho - self.lambda.abs();
        (n.is_integer() && n >= HalfInt::ONE).then(|| abs_rho - HalfInt::ONE)
    }

    pub fn is_finite_dimensional(&self) -> bool {
        self.j_max().is_some()
    }

    pub fn lambda_t(&self) -> T {
        T::from_half(self.lambda)
    }
}

impl<T: Real> fmt::Display for IrrepLabel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}{:+}i)", self.lambda, self.rho.re, self.rho.im)
    }
}

pub(crate) fn label_tol<T: Real>(rho: C<T>) -> T {
    T::epsilon() * T::lit(64.0) * (T::one() + cabs(rho))
}

/// `F^A_gamma`: `A = -1` is the left module `(gamma, 0)`, `A = +1` the right module `(0, gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FiniteLabel {
    pub gamma: HalfInt,
    pub a: i8,
}

impl FiniteLabel {
    pub fn new(gamma: HalfInt, a: i8) -> Result<Self> {
        if gamma.is_negative() {
            return domain(format!("gamma = {gamma} must be non-negative"));
        }
        if a != 1 && a != -1 {
            return domain(format!("A = {a} must be +1 or -1"));
        }
        Ok(FiniteLabel { gamma, a })
    }

    pub fn sign<T: Real>(&self) -> T {
        if self.a > 0 {
            T::one()
        } else {
            -T::one()
        }
    }
}

impl fmt::Display for FiniteLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F^{}_{}", if self.a > 0 { "+" } else { "-" }, self.gamma)
    }
}

/// The three `P` functions of a label at a given `j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PValues<T: Real> {
    pub minus: C<T>,
    pub centre: C<T>,
    pub plus: C<T>,
}

fn check_j<T: Real>(label: &IrrepLabel<T>, j: HalfInt) -> Result<()> {
    if j < label.lambda.abs() || !(j - label.lambda.abs()).is_integer() {
        return domain(format!("j = {j} is not a K-type of V with lambda = {}", label.lambda));
    }
    Ok(())
}

/// `P^-(j)`; exactly zero at the lowest K-type `j = |lambda|`.
pub(crate) fn p_minus<T: Real>(label: &IrrepLabel<T>, j: HalfInt) -> C<T> {
    if j <= label.lambda.abs() {
        return C::zero();
    }
    let jt = T::from_half(j);
    let lam = label.lambda_t();
    let one = T::one();
    let two = one + one;
    let jc = c_real(jt);
    let num = rsqrt(jt + lam) * rsqrt(jt - lam) * csqrt(jc + label.rho) * csqrt(jc - label.rho);
    let den = c_real(jt) * rsqrt(two * jt + one) * rsqrt(two * jt - one);
    num / den
}

pub(crate) fn p_centre<T: Real>(label: &IrrepLabel<T>, j: HalfInt) -> C<T> {
    if j == HalfInt::ZERO {
        return C::zero();
    }
    let jt = T::from_half(j);
    c_i::<T>() * c_real(label.lambda_t()) * label.rho / c_real(jt * (jt + T::one()))
}

pub(crate) fn p_plus<T: Real>(label: &IrrepLabel<T>, j: HalfInt) -> C<T> {
    p_minus(label, j + HalfInt::ONE)
}

pub fn p_functions<T: Real>(label: &IrrepLabel<T>, j: HalfInt) -> Result<PValues<T>> {
    check_j(label, j)?;
    Ok(PValues { minus: p_minus(label, j), centre: p_centre(label, j), plus: p_plus(label, j) })
}

/// Nonzero images `X |j, m>` in `V_{lambda,rho}` (no truncation).
pub fn action<T: Real>(label: &IrrepLabel<T>, gen: Generator, j: HalfInt, m: HalfInt) -> Vec<(State, C<T>)> {
    let mut out = Vec::with_capacity(3);
    let mut push = |jj: HalfInt, mm: HalfInt, v: C<T>| {
        if mm.abs() <= jj && !v.is_zero() {
            out.push((State::new(jj, mm), v));
        }
    };
    let one = HalfInt::ONE;
    let r = |x: HalfInt| T::from_half(x);
    // sqrt of a non-negative half-integer expression; zero below the boundary
    let s = |x: HalfInt| if x.is_negative() { T::zero() } else { r(x).sqrt() };
    match gen {
        Generator::J0 => push(j, m, c_half(m)),
        Generator::Jp => push(j, m + one, c_real(ladder(true, j, m))),
        Generator::Jm => push(j, m - one, c_real(ladder(false, j, m))),
        Generator::K0 | Generator::Kp | Generator::Km => {
            let pp = p_plus(label, j);
            let pc = p_centre(label, j);
            let pm = p_minus(label, j);
            match gen {
                Generator::K0 => {
                    push(j + one, m, pp * c_real(s(j + m + one) * s(j - m + one)));
                    push(j, m, pc * c_half(m));
                    if j - one >= label.lambda.abs() {
                        push(j - one, m, pm * c_real(s(j + m) * s(j - m)));
                    }
                }
                Generator::Kp => {
                    push(j + one, m + one, -pp * c_real(s(j + m + one) * s(j + m + one + one)));
                    push(j, m + one, pc * c_real(ladder(true, j, m)));
                    if j - one >= label.lambda.abs() {
                        push(j - one, m + one, pm * c_real(s(j - m) * s(j - m - one)));
                    }
                }
                _ => {
                    push(j + one, m - one, pp * c_real(s(j - m + one) * s(j - m + one + one)));
                    push(j, m - one, pc * c_real(ladder(false, j, m)));
                    if j - one >= label.lambda.abs() {
                        push(j - one, m - one, -pm * c_real(s(j + m) * s(j + m - one)));
                    }
                }
            }
        }
    }
    out
}

/// `<j', m'| X |j, m>` for a boost generator.
pub fn boost_element<T: Real>(label: &IrrepLabel<T>, target: State, gen: Generator, source: State) -> Result<C<T>> {
    if !gen.is_boost() {
        return domain(format!("{gen} is a rotation generator; use the su(2) ladder coefficients"));
    }
    for st in [target, source] {
        check_j(label, st.j)?;
        if st.m.abs() > st.j || !(st.j - st.m).is_integer() {
            return domain(format!("m = {} is not a projection of j = {}", st.m, st.j));
        }
    }
    Ok(action(label, gen, source.j, source.m)
        .into_iter()
        .find(|(s, _)| *s == target)
        .map(|(_, v)| v)
        .unwrap_or_else(C::zero))
}

/// Nonzero image `X |gamma_A, mu>` in `F^A_gamma`.
pub fn finite_action<T: Real>(label: FiniteLabel, gen: Generator, mu: HalfInt) -> Option<(HalfInt, C<T>)> {
    let g = label.gamma;
    let ia = c_i::<T>() * c_real(label.sign::<T>());
    let (target, v) = match gen {
        Generator::J0 => (mu, c_half(mu)),
        Generator::Jp => (mu + HalfInt::ONE, c_real(ladder(true, g, mu))),
        Generator::Jm => (mu - HalfInt::ONE, c_real(ladder(false, g, mu))),
        Generator::K0 => (mu, ia * c_half(mu)),
        Generator::Kp => (mu + HalfInt::ONE, ia * c_real(ladder(true, g, mu))),
        Generator::Km => (mu - HalfInt::ONE, ia * c_real(ladder(false, g, mu))),
    };
    (target.abs() <= g && !v.is_zero()).then_some((target, v))
}

/// Basis `|gamma, mu>` of `F^A_gamma`, ascending in `mu`.
pub fn finite_basis(gamma: HalfInt) -> Arc<Basis> {
    Arc::new(Basis::new(steps(-gamma, gamma).map(|mu| State::new(gamma, mu)).collect()))
}

pub fn finite_generator_matrix<T: Real>(label: FiniteLabel, gen: Generator) -> SparseOperator<T> {
    let basis = finite_basis(label.gamma);
    let triplets: Vec<_> = basis
        .states()
        .iter()
        .enumerate()
        .filter_map(|(c, s)| {
            let (mu, v) = finite_action::<T>(label, gen, s.m)?;
            Some((basis.index_of(State::new(label.gamma, mu))?, c, v))
        })
        .collect();
    SparseOperator::from_triplets(basis.clone(), basis, triplets)
}

/// `V_{lambda,rho}` restricted to K-types `j <= j_cut` (and `j <= j_max`).
#[derive(Clone, Debug)]
pub struct TruncatedModule<T: Real> {
    pub label: IrrepLabel<T>,
    pub j_cut: HalfInt,
    basis: Arc<Basis>,
    complete: bool,
}

impl<T: Real> TruncatedModule<T> {
    pub fn new(label: IrrepLabel<T>, j_cut: HalfInt) -> Result<Self> {
        let lo = label.lambda.abs();
        if j_cut < lo {
            return domain(format!("j_cut = {j_cut} lies below |lambda| = {lo}"));
        }
        let (hi, complete) = match label.j_max() {
            Some(jm) if jm <= j_cut => (jm, true),
            _ => (j_cut, false),
        };
        let states = steps(lo, hi)
            .flat_map(|j| mrange(j).expect("j >= 0").into_iter().map(move |m| State::new(j, m)))
            .collect();
        Ok(TruncatedModule { label, j_cut, basis: Arc::new(Basis::new(states)), complete })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Whether the truncation keeps every K-type (finite-dimensional module).
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Largest K-type present.
    pub fn top(&self) -> HalfInt {
        self.basis.states().last().map(|s| s.j).unwrap_or(self.label.lambda.abs())
    }

    /// States on which truncated identities are exact given `margin`.
    pub fn interior(&self, margin: HalfInt) -> impl Fn(State) -> bool {
        let complete = self.complete;
        let bound = self.j_cut - margin;
        move |s: State| complete || s.j <= bound
    }

    pub fn generator(&self, gen: Generator) -> SparseOperator<T> {
        let b = &self.basis;
        let triplets: Vec<_> = b
            .states()
            .iter()
            .enumerate()
            .flat_map(|(c, s)| {
                action(&self.label, gen, s.j, s.m)
                    .into_iter()
                    .filter_map(move |(t, v)| Some((b.index_of(t)?, c, v)))
            })
            .collect();
        SparseOperator::from_triplets(b.clone(), b.clone(), triplets)
    }

    /// Diagonal `J^2 = j(j+1)`.
    pub fn j_squared(&self) -> SparseOperator<T> {
        let b = &self.basis;
        let triplets = b.states().iter().enumerate().map(|(i, s)| (i, i, c_real(T::lit(s.j.casimir()))));
        SparseOperator::from_triplets(b.clone(), b.clone(), triplets)
    }

    /// `(C_1, C_2)` assembled from the generator matrices:
    /// `C_1 = J_0 K_0 + (J_- K_+ + J_+ K_-)/2`, `C_2 = J^2 - (J_0 + K_0^2 + K_+ K_-)`.
    pub fn casimirs(&self) -> Result<(SparseOperator<T>, SparseOperator<T>)> {
        let g = |x| self.generator(x);
        let (j0, jp, jm, k0, kp, km) =
            (g(Generator::J0), g(Generator::Jp), g(Generator::Jm), g(Generator::K0), g(Generator::Kp), g(Generator::Km));
        let half = c_real(T::lit(0.5));
        let c1 = j0.matmul(&k0)?.add(&jm.matmul(&kp)?.add(&jp.matmul(&km)?)?.scale(half))?;
        let inner = j0.add(&k0.matmul(&k0)?)?.add(&kp.matmul(&km)?)?;
        let c2 = self.j_squared().sub(&inner)?;
        Ok((c1, c2))
    }
}

pub fn generator_matrix<T: Real>(module: &TruncatedModule<T>, gen: Generator) -> SparseOperator<T> {
    module.generator(gen)
}

/// `(C_1, C_2) = (i lambda rho, lambda^2 + rho^2 - 1)`.
pub fn casimir_eigenvalues<T: Real>(label: &IrrepLabel<T>) -> (C<T>, C<T>) {
    let lam = c_real(label.lambda_t());
    (c_i::<T>() * lam * label.rho, lam * lam + label.rho * label.rho - c_real(T::one()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "class")]
pub enum Classification {
    Principal,
    Complementary,
    Trivial,
    FiniteDimensional {
        #[serde(rename = "j_max_x2")]
        j_max: HalfInt,
    },
    NonUnitaryInfinite,
}

impl Classification {
    pub fn is_unitary(self) -> bool {
        matches!(self, Classification::Principal | Classification::Complementary | Classification::Trivial)
    }
}

pub fn classify<T: Real>(label: &IrrepLabel<T>) -> Classification {
    let label = label.canonical();
    let tol = label_tol(label.rho);
    let (re, im) = (label.rho.re, label.rho.im);
    if re.abs() <= tol {
        return Classification::Principal;
    }
    if label.lambda == HalfInt::ZERO && im.abs() <= tol {
        let a = re.abs();
        if (a - T::one()).abs() <= tol {
            return Classification::Trivial;
        }
        if a < T::one() {
            return Classification::Complementary;
        }
    }
    match label.j_max() {
        Some(j_max) => Classification::FiniteDimensional { j_max },
        None => Classification::NonUnitaryInfinite,
    }
}

/// `dim V_{lambda,rho}` for `rho = +-(omega+1)`: `(omega-lambda+1)(omega+lambda+1)`.
pub fn finite_dim(lambda: HalfInt, omega: HalfInt) -> Result<usize> {
    if lambda.is_negative() {
        return domain(format!("lambda = {lambda} must be non-negative for finite-dimensional modules"));
    }
    if omega < lambda || !(omega - lambda).is_integer() {
        return domain(format!("omega = {omega} is not in lambda + N_0 for lambda = {lambda}"));
    }
    let a = (omega - lambda + HalfInt::ONE).as_int().expect("integral") as usize;
    let b = (omega + lambda + HalfInt::ONE).as_int().expect("integral") as usize;
    Ok(a * b)
}

/// Label of the finite-dimensional module `(j1, j2)`.
pub fn jj_labels<T: Real>(j1: HalfInt, j2: HalfInt) -> Result<IrrepLabel<T>> {
    if j1.is_negative() || j2.is_negative() {
        return domain("spins must be non-negative");
    }
    let lambda = (j1 - j2).abs();
    let s = T::from_half(j1 + j2) + T::one();
    let rho = if j1 < j2 { s } else { -s };
    Ok(IrrepLabel { lambda, rho: c_real(rho) })
}

/// Infinite-dimensional label or a domain error.
pub(crate) fn require_infinite<T: Real>(label: &IrrepLabel<T>) -> Result<()> {
    if label.is_finite_dimensional() {
        return Err(Error::Domain(format!("{label} is finite-dimensional")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    fn lab(lt: i32, re: f64, im: f64) -> IrrepLabel<f64> {
        IrrepLabel::new(h(lt), Complex::new(re, im)).unwrap()
    }

    #[test]
    fn derived_commutators_match_textbook_forms() {
        use Generator::*;
        let one = Complex::new(1.0, 0.0);
        let check = |a, b, expect: Vec<(Generator, Complex<f64>)>| {
            let got = ladder_commutator(a, b);
            assert_eq!(got.len(), expect.len(), "[{a},{b}] = {got:?}");
            for (g, v) in expect {
                let found = got.iter().find(|(x, _)| *x == g).expect("term present").1;
                assert!((found - v).norm() < 1e-15, "[{a},{b}] coefficient of {g}: {found}");
            }
        };
        check(J0, Jp, vec![(Jp, one)]);
        check(Jp, Jm, vec![(J0, one * 2.0)]);
        check(J0, Kp, vec![(Kp, one)]);
        check(Kp, Km, vec![(J0, -one * 2.0)]);
        check(K0, Jp, vec![(Kp, one)]);
        check(K0, Kp, vec![(Jp, -one)]);
        check(Jp, Km, vec![(K0, one * 2.0)]);
        check(Jp, Kp, vec![]);
        check(J0, K0, vec![]);
    }

    #[test]
    fn p_function_examples() {
        let l = lab(0, 0.7, -1.3);
        for t in [2, 4, 6] {
            assert_eq!(p_functions(&l, h(t)).unwrap().centre, Complex::new(0.0, 0.0));
        }
        // rho = j_max + 1 kills P+ at j_max
        let l = lab(1, 3.5, 0.0);
        assert_eq!(l.j_max(), Some(h(5)));
        assert_eq!(p_functions(&l, h(5)).unwrap().plus, Complex::new(0.0, 0.0));
        let l = lab(1, 0.3, 0.7);
        assert_eq!(p_functions(&l, h(1)).unwrap().minus, Complex::new(0.0, 0.0));
        assert!(p_functions(&l, h(-1)).is_err());
        assert!(p_functions(&l, h(2)).is_err());
    }

    #[test]
    fn boost_element_examples() {
        let l = lab(1, 0.4, 1.1);
        let (j, m) = (h(3), h(-1));
        let pv = p_functions(&l, j).unwrap();
        let s = |x: f64| x.sqrt();
        let (jf, mf) = (1.5, -0.5);
        let up = boost_element(&l, State::new(j + HalfInt::ONE, m), Generator::K0, State::new(j, m)).unwrap();
        assert!((up - pv.plus * s(jf + mf + 1.0) * s(jf - mf + 1.0)).norm() < 1e-14);
        let same = boost_element(&l, State::new(j, m), Generator::K0, State::new(j, m)).unwrap();
        assert!((same - pv.centre * mf).norm() < 1e-14);
        let down = boost_element(&l, State::new(j - HalfInt::ONE, m + HalfInt::ONE), Generator::Kp, State::new(j, m)).unwrap();
        assert!((down - pv.minus * s(jf - mf) * s(jf - mf - 1.0)).norm() < 1e-14);
        assert!(boost_element(&l, State::new(j, m), Generator::J0, State::new(j, m)).is_err());
    }

    #[test]
    fn finite_generators() {
        let f = FiniteLabel::new(h(1), -1).unwrap();
        let k0: SparseOperator<f64> = finite_generator_matrix(f, Generator::K0);
        // K0 |1/2_-, 1/2> = i * (-1) * 1/2
        assert_eq!(k0.get(1, 1), Complex::new(0.0, -0.5));
        for g in 1..=4 {
            for a in [-1i8, 1] {
                let f = FiniteLabel::new(h(g), a).unwrap();
                let jp: SparseOperator<f64> = finite_generator_matrix(f, Generator::Jp);
                let kp: SparseOperator<f64> = finite_generator_matrix(f, Generator::Kp);
                let ia = Complex::new(0.0, f64::from(a));
                assert_eq!(kp.sub(&jp.scale(ia)).unwrap().max_abs(), 0.0);
            }
        }
        assert!(FiniteLabel::new(h(1), 0).is_err());
    }

    #[test]
    fn j0_is_diagonal_m_and_jplus_kills_top() {
        let m = TruncatedModule::new(lab(1, 0.2, 0.9), h(7)).unwrap();
        let j0 = m.generator(Generator::J0);
        for (r, c, v) in j0.entries() {
            assert_eq!(r, c);
            assert_eq!(v.re, m.basis().state(c).m.to_f64());
        }
        let jp = m.generator(Generator::Jp);
        for (i, s) in m.basis().states().iter().enumerate() {
            if s.m == s.j {
                assert!(jp.column(i).is_empty());
            }
        }
    }

    #[test]
    fn boost_commutator_closes_on_interior() {
        let m = TruncatedModule::new(lab(2, -0.6, 1.7), h(14)).unwrap();
        let kp = m.generator(Generator::Kp);
        let km = m.generator(Generator::Km);
        let j0 = m.generator(Generator::J0);
        let comm = kp.commutator(&km).unwrap();
        let diff = comm.max_diff_on_columns(&j0.scale(Complex::new(-2.0, 0.0)), m.interior(h(4))).unwrap();
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn casimir_examples() {
        let (c1, _) = casimir_eigenvalues(&lab(0, 0.3, 2.0));
        assert_eq!(c1, Complex::new(0.0, 0.0));
        let (c1, _) = casimir_eigenvalues(&lab(1, 0.0, 3.0));
        assert!((c1 - Complex::new(-1.5, 0.0)).norm() < 1e-15);
        for s in [1.0, -1.0] {
            let (_, c2) = casimir_eigenvalues(&lab(0, s, 0.0));
            assert_eq!(c2, Complex::new(0.0, 0.0));
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(&lab(1, 0.0, 2.0)), Classification::Principal);
        assert_eq!(classify(&lab(0, 0.5, 0.0)), Classification::Complementary);
        assert_eq!(classify(&lab(0, -1.0, 0.0)), Classification::Trivial);
        assert_eq!(classify(&lab(1, -1.5, 0.0)), Classification::FiniteDimensional { j_max: h(1) });
        assert_eq!(classify(&lab(2, -1.5, 0.0)), Classification::NonUnitaryInfinite);
        assert_eq!(classify(&lab(-3, 2.5, 0.0)), Classification::FiniteDimensional { j_max: h(3) });
        assert_eq!(classify(&lab(0, 0.5, 0.5)), Classification::NonUnitaryInfinite);
    }

    #[test]
    fn finite_dim_examples() {
        assert_eq!(finite_dim(h(0), h(0)).unwrap(), 1);
        assert_eq!(finite_dim(h(1), h(1)).unwrap(), 2);
        assert_eq!(finite_dim(h(0), h(2)).unwrap(), 4);
        assert!(finite_dim(h(2), h(0)).is_err());
        assert!(finite_dim(h(0), h(1)).is_err());
    }

    #[test]
    fn jj_label_examples() {
        let l: IrrepLabel<f64> = jj_labels(h(1), h(0)).unwrap();
        assert_eq!((l.lambda, l.rho), (h(1), Complex::new(-1.5, 0.0)));
        let l: IrrepLabel<f64> = jj_labels(h(0), h(1)).unwrap();
        assert_eq!((l.lambda, l.rho), (h(1), Complex::new(1.5, 0.0)));
        let l: IrrepLabel<f64> = jj_labels(h(0), h(0)).unwrap();
        assert_eq!((l.lambda, l.rho), (h(0), Complex::new(-1.0, 0.0)));
        assert_eq!(classify(&l), Classification::Trivial);
    }

    #[test]
    fn finite_module_truncation_stops_at_j_max() {
        let l = lab(1, 2.5, 0.0);
        let m = TruncatedModule::new(l, h(20)).unwrap();
        assert!(m.is_complete());
        assert_eq!(m.top(), h(3));
        assert_eq!(m.dim(), finite_dim(h(1), h(3)).unwrap());
    }
}
