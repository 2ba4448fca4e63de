//! Clebsch-Gordan decomposition of `F^A_gamma (x) V_{lambda,rho}`.
//!
//! The Casimir blocks on each `V_J` are built from the total generators acting
//! on explicit product kets and projected back onto the coupled basis
//! `|(j) J, M>`. Eigenvectors are then obtained from the analytic eigenvalues
//! `i Lambda P` by the tridiagonal recurrence.

use std::collections::BTreeMap;

use num_traits::Zero;
use rayon::prelude::*;

use crate::dense::Dense;
use crate::error::{domain, Error, Result};
use crate::half::{in_jset, in_sigma, jset_upto, mrange, omega_set, HalfInt};
use crate::repr::{
    action, casimir_eigenvalues, classify, finite_action, p_centre, p_minus, p_plus, require_infinite, Classification,
    FiniteLabel, Generator, IrrepLabel,
};
use crate::scalar::{c_i, c_real, cabs, csqrt, near_integer, rsqrt, tol_for, Real, C};
use crate::su2::cg;
use crate::tridiag::{eigvec_by_recurrence, norm, Tridiagonal};

/// Relative size below which projected entries count as structural zeros.
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Relative eigen-residual accepted for table columns.
pub const EIGEN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CouplingProblem<T: Real> {
    pub finite: FiniteLabel,
    pub infinite: IrrepLabel<T>,
}

impl<T: Real> CouplingProblem<T> {
    pub fn new(finite: FiniteLabel, infinite: IrrepLabel<T>) -> Result<Self> {
        if finite.gamma.twice() < 1 {
            return domain(format!("gamma = {} must be at least 1/2", finite.gamma));
        }
        require_infinite(&infinite)?;
        Ok(CouplingProblem { finite, infinite })
    }

    pub fn gamma(&self) -> HalfInt {
        self.finite.gamma
    }

    pub fn lambda(&self) -> HalfInt {
        self.infinite.lambda
    }

    pub fn rho(&self) -> C<T> {
        self.infinite.rho
    }

    pub fn sign(&self) -> T {
        self.finite.sign()
    }

    pub(crate) fn space(&self) -> ProductSpace<T> {
        ProductSpace { finite: vec![self.finite], infinite: self.infinite }
    }

    fn not_decomposable(&self) -> Error {
        Error::NotDecomposable {
            gamma: self.gamma().to_string(),
            a: self.finite.a,
            lambda: self.lambda().to_string(),
            rho: format!("{}{:+}i", self.rho().re, self.rho().im),
        }
    }

    fn require_j(&self, big_j: HalfInt) -> Result<()> {
        if !in_jset(self.lambda(), self.gamma(), big_j)? {
            return domain(format!("J = {big_j} is not admissible for lambda = {}, gamma = {}", self.lambda(), self.gamma()));
        }
        Ok(())
    }
}

/// An eigenvalue pair `(Lambda, P) = (lambda + nu, rho + A nu)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenPair<T: Real> {
    pub nu: HalfInt,
    pub lambda: HalfInt,
    pub p: C<T>,
}

impl<T: Real> EigenPair<T> {
    pub fn label(&self) -> IrrepLabel<T> {
        IrrepLabel { lambda: self.lambda, rho: self.p }
    }

    /// `(i Lambda P, Lambda^2 + P^2 - 1)`.
    pub fn casimirs(&self) -> (C<T>, C<T>) {
        casimir_eigenvalues(&self.label())
    }
}

pub(crate) fn pair_for<T: Real>(problem: &CouplingProblem<T>, nu: HalfInt) -> EigenPair<T> {
    EigenPair { nu, lambda: problem.lambda() + nu, p: problem.rho() + c_real(problem.sign() * T::from_half(nu)) }
}

/// Whether `z` is an integer in the open interval `(-width, width)`.
pub(crate) fn resonant<T: Real>(z: C<T>, width: HalfInt) -> bool {
    let tol = T::epsilon() * T::lit(64.0) * (T::one() + cabs(z));
    if z.im.abs() > tol {
        return false;
    }
    match near_integer(z.re, tol) {
        Some(n) => 2 * n.unsigned_abs() < width.twice().unsigned_abs() as u64,
        None => false,
    }
}

/// True iff `rho + A lambda` is not an integer in `(-2 gamma, 2 gamma)`.
pub fn is_decomposable<T: Real>(problem: &CouplingProblem<T>) -> bool {
    decomposable(problem.finite, &problem.infinite)
}

/// The decomposability criterion on bare labels, without requiring the
/// infinite-dimensional module to be infinite-dimensional.
pub fn decomposable<T: Real>(finite: FiniteLabel, label: &IrrepLabel<T>) -> bool {
    let z = label.rho + c_real(finite.sign::<T>() * label.lambda_t());
    !resonant(z, finite.gamma + finite.gamma)
}

/// Eigenvalue pairs present on `V_J`, ascending in `nu`.
pub fn eigenpair_set<T: Real>(problem: &CouplingProblem<T>, big_j: HalfInt) -> Result<Vec<EigenPair<T>>> {
    if !is_decomposable(problem) {
        return Err(problem.not_decomposable());
    }
    problem.require_j(big_j)?;
    Ok(mrange(problem.gamma())?
        .into_iter()
        .filter(|&nu| in_sigma(problem.lambda(), nu, big_j))
        .map(|nu| pair_for(problem, nu))
        .collect())
}

/// Classification of every pair `(lambda + nu, rho + A nu)`.
pub fn output_classes<T: Real>(problem: &CouplingProblem<T>) -> Result<Vec<(EigenPair<T>, Classification)>> {
    if !is_decomposable(problem) {
        return Err(problem.not_decomposable());
    }
    Ok(mrange(problem.gamma())?
        .into_iter()
        .map(|nu| {
            let p = pair_for(problem, nu);
            (p, classify(&p.label()))
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Product kets

/// `|mu_1> (x) ... (x) |mu_k> (x) |j, m>`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProductState {
    pub mus: Vec<HalfInt>,
    pub j: HalfInt,
    pub m: HalfInt,
}

pub type Ket<T> = BTreeMap<ProductState, C<T>>;

/// `F_1 (x) ... (x) F_k (x) V_{lambda,rho}` without truncation.
#[derive(Clone, Debug)]
pub struct ProductSpace<T: Real> {
    pub finite: Vec<FiniteLabel>,
    pub infinite: IrrepLabel<T>,
}

fn accumulate<T: Real>(out: &mut Ket<T>, s: ProductState, v: C<T>) {
    if v.is_zero() {
        return;
    }
    *out.entry(s).or_insert_with(C::zero) += v;
}

fn ket_axpy<T: Real>(out: &mut Ket<T>, a: C<T>, x: &Ket<T>) {
    for (s, v) in x {
        accumulate(out, s.clone(), a * *v);
    }
}

/// `sum_k u_k w_k` (no conjugation).
pub fn ket_dot<T: Real>(u: &Ket<T>, w: &Ket<T>) -> C<T> {
    let (small, big) = if u.len() <= w.len() { (u, w) } else { (w, u) };
    small.iter().filter_map(|(s, a)| big.get(s).map(|b| *a * *b)).fold(C::zero(), |x, y| x + y)
}

pub fn ket_norm<T: Real>(u: &Ket<T>) -> T {
    u.values().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

impl<T: Real> ProductSpace<T> {
    /// Total generator `X (x) 1 (x) ... + ... + 1 (x) ... (x) X`.
    pub fn apply(&self, gen: Generator, ket: &Ket<T>) -> Ket<T> {
        let mut out = Ket::new();
        for (s, v) in ket {
            for (f, label) in self.finite.iter().enumerate() {
                if let Some((mu, w)) = finite_action::<T>(*label, gen, s.mus[f]) {
                    let mut t = s.clone();
                    t.mus[f] = mu;
                    accumulate(&mut out, t, *v * w);
                }
            }
            for (t, w) in action(&self.infinite, gen, s.j, s.m) {
                accumulate(&mut out, ProductState { mus: s.mus.clone(), j: t.j, m: t.m }, *v * w);
            }
        }
        out
    }

    fn apply2(&self, a: Generator, b: Generator, ket: &Ket<T>) -> Ket<T> {
        self.apply(a, &self.apply(b, ket))
    }

    /// `C_1 = J_0 K_0 + (J_- K_+ + J_+ K_-)/2`.
    pub fn casimir1(&self, ket: &Ket<T>) -> Ket<T> {
        use Generator::*;
        let half = c_real(T::lit(0.5));
        let mut out = self.apply2(J0, K0, ket);
        ket_axpy(&mut out, half, &self.apply2(Jm, Kp, ket));
        ket_axpy(&mut out, half, &self.apply2(Jp, Km, ket));
        out
    }

    /// `C_2 = J^2 - (J_0 + K_0^2 + K_+ K_-)` with `J^2 = J_0^2 + (J_+ J_- + J_- J_+)/2`.
    pub fn casimir2(&self, ket: &Ket<T>) -> Ket<T> {
        use Generator::*;
        let half = c_real(T::lit(0.5));
        let one = c_real(T::one());
        let mut out = self.apply2(J0, J0, ket);
        ket_axpy(&mut out, half, &self.apply2(Jp, Jm, ket));
        ket_axpy(&mut out, half, &self.apply2(Jm, Jp, ket));
        ket_axpy(&mut out, -one, &self.apply(J0, ket));
        ket_axpy(&mut out, -one, &self.apply2(K0, K0, ket));
        ket_axpy(&mut out, -one, &self.apply2(Kp, Km, ket));
        out
    }
}

/// Matrix `<u_i | op | v_k>` of an operator between two real orthonormal
/// families, together with the largest relative norm of the part of
/// `op v_k` lying outside `span(u)`.
pub(crate) fn project<T: Real>(rows: &[Ket<T>], cols: &[Ket<T>], op: impl Fn(&Ket<T>) -> Ket<T>) -> (Dense<T>, T) {
    let mut m = Dense::zeros(rows.len(), cols.len());
    let mut leak = T::zero();
    for (k, v) in cols.iter().enumerate() {
        let w = op(v);
        let mut rest = w.clone();
        for (i, u) in rows.iter().enumerate() {
            let c = ket_dot(u, &w);
            m[(i, k)] = c;
            ket_axpy(&mut rest, -c, u);
        }
        leak = leak.max(ket_norm(&rest) / T::one().max(ket_norm(&w)));
    }
    (m, leak)
}

/// `|(j) J, M> = sum <gamma, mu; j, m | J, M> |gamma_A, mu> (x) |j, m>`.
pub fn coupled_basis_vector<T: Real>(problem: &CouplingProblem<T>, j: HalfInt, big_j: HalfInt, big_m: HalfInt) -> Result<Ket<T>> {
    let omega = omega_set(problem.lambda(), problem.gamma(), big_j)?;
    if !omega.contains(&j) {
        return domain(format!("j = {j} is not in the K-type range of J = {big_j}"));
    }
    if big_m.abs() > big_j || !(big_j - big_m).is_integer() {
        return domain(format!("M = {big_m} is not a projection of J = {big_j}"));
    }
    Ok(coupled_unchecked(problem.gamma(), j, big_j, big_m))
}

fn coupled_unchecked<T: Real>(gamma: HalfInt, j: HalfInt, big_j: HalfInt, big_m: HalfInt) -> Ket<T> {
    let mut ket = Ket::new();
    for mu in mrange(gamma).expect("gamma >= 0") {
        let m = big_m - mu;
        if m.abs() > j {
            continue;
        }
        let c: T = cg(gamma, mu, j, m, big_j, big_m);
        accumulate(&mut ket, ProductState { mus: vec![mu], j, m }, c_real(c));
    }
    ket
}

fn coupled_family<T: Real>(problem: &CouplingProblem<T>, omega: &[HalfInt], big_j: HalfInt, big_m: HalfInt) -> Vec<Ket<T>> {
    omega.iter().map(|&j| coupled_unchecked(problem.gamma(), j, big_j, big_m)).collect()
}

/// Both Casimirs on `V^J_M` as dense matrices over `Omega_J`.
#[derive(Clone, Debug)]
pub struct DenseBlock<T: Real> {
    pub j_total: HalfInt,
    pub m_total: HalfInt,
    pub omega: Vec<HalfInt>,
    pub c1: Dense<T>,
    pub c2: Dense<T>,
    /// Largest relative norm of `C_a |(j) J, M>` outside `V^J_M`.
    pub leak: T,
}

pub fn casimir_dense_block<T: Real>(problem: &CouplingProblem<T>, big_j: HalfInt, big_m: HalfInt) -> Result<DenseBlock<T>> {
    let omega = omega_set(problem.lambda(), problem.gamma(), big_j)?;
    if big_m.abs() > big_j || !(big_j - big_m).is_integer() {
        return domain(format!("M = {big_m} is not a projection of J = {big_j}"));
    }
    let space = problem.space();
    let basis = coupled_family(problem, &omega, big_j, big_m);
    let (c1, l1) = project(&basis, &basis, |v| space.casimir1(v));
    let (c2, l2) = project(&basis, &basis, |v| space.casimir2(v));
    Ok(DenseBlock { j_total: big_j, m_total: big_m, omega, c1, c2, leak: l1.max(l2) })
}

/// The two tridiagonal Casimir matrices on `V_J` (`M = J`).
#[derive(Clone, Debug)]
pub struct VJBlock<T: Real> {
    pub j_total: HalfInt,
    pub omega: Vec<HalfInt>,
    pub c1: Tridiagonal<T>,
    pub c2: Tridiagonal<T>,
    pub leak: T,
}

fn off_band<T: Real>(m: &Dense<T>) -> T {
    let mut worst = T::zero();
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            if r.abs_diff(c) > 1 {
                worst = worst.max(cabs(m[(r, c)]));
            }
        }
    }
    worst
}

pub fn casimir_block<T: Real>(problem: &CouplingProblem<T>, big_j: HalfInt) -> Result<VJBlock<T>> {
    let d = casimir_dense_block(problem, big_j, big_j)?;
    let tol = tol_for::<T>(STRUCTURAL_TOL);
    for (name, m) in [("C1", &d.c1), ("C2", &d.c2)] {
        let scale = T::one().max(m.max_abs());
        let stray = off_band(m);
        if stray > tol * scale {
            return Err(Error::Consistency(format!("{name} on V_{big_j} couples non-adjacent K-types ({stray:e})")));
        }
    }
    if d.leak > tol_for::<T>(1e-10) {
        return Err(Error::Consistency(format!("Casimir image leaves V_{big_j} (relative {:e})", d.leak)));
    }
    Ok(VJBlock {
        j_total: big_j,
        omega: d.omega,
        c1: Tridiagonal::from_dense(&d.c1)?,
        c2: Tridiagonal::from_dense(&d.c2)?,
        leak: d.leak,
    })
}

/// Which reading of the closed-form diagonal of `C_2` to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagonalReading {
    /// `(J(J+1) - j(J+1))`, as typeset.
    Literal,
    /// `(J(J+1) - j(j+1))`.
    Amended,
}

/// Closed-form tridiagonal Casimir matrices on `V_J`, for comparison with
/// the compositional construction.
pub fn closed_form_block<T: Real>(problem: &CouplingProblem<T>, big_j: HalfInt, reading: DiagonalReading) -> Result<(Tridiagonal<T>, Tridiagonal<T>)> {
    let omega = omega_set(problem.lambda(), problem.gamma(), big_j)?;
    let lab = &problem.infinite;
    let g = problem.gamma();
    let ia = c_i::<T>() * c_real(problem.sign());
    let one = c_real(T::one());
    let half = c_real(T::lit(0.5));
    let (jt, gt) = (T::from_half(big_j), T::from_half(g));
    let jj1 = c_real(jt * (jt + T::one()));
    let gg1 = c_real(gt * (gt + T::one()));
    let (_, c2_label) = casimir_eigenvalues(lab);
    let r = |x: HalfInt| rsqrt(T::from_half(x));
    let hi = HalfInt::ONE;
    // sqrt products of the j -> j+1 entries
    let up = |j: HalfInt| r(big_j + j + g + hi + hi) * r(j + g - big_j + hi) * r(big_j + j - g + hi) * r(big_j - j + g);
    let n = omega.len();
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for &j in &omega {
        let p = p_centre(lab, j);
        let jv = T::from_half(j);
        let jterm = c_real(jv * (jv + T::one()));
        d1.push(jj1 * half * (ia + p) - (jterm - gg1) * half * (ia - p));
        let mixed = match reading {
            DiagonalReading::Literal => c_real(jv * (jt + T::one())),
            DiagonalReading::Amended => jterm,
        };
        d2.push((jj1 - mixed) * (one - ia * p) + gg1 * (one + ia * p) + c2_label);
    }
    let mut sub1 = Vec::with_capacity(n.saturating_sub(1));
    let mut sub2 = Vec::with_capacity(n.saturating_sub(1));
    let mut sup1 = Vec::with_capacity(n.saturating_sub(1));
    let mut sup2 = Vec::with_capacity(n.saturating_sub(1));
    for w in omega.windows(2) {
        let (j, j1) = (w[0], w[1]);
        // <(j+1)|C|(j)> uses P+(j); <(j)|C|(j+1)> uses P-(j+1) and the same roots
        let s_up = up(j);
        let pp = p_plus(lab, j);
        let pm = p_minus(lab, j1);
        sub1.push(half * pp * s_up);
        sub2.push(-ia * pp * s_up);
        let s_down = r(big_j + j1 + g + hi) * r(j1 + g - big_j) * r(big_j + j1 - g) * r(big_j - j1 + g + hi);
        sup1.push(half * pm * s_down);
        sup2.push(-ia * pm * s_down);
    }
    Ok((Tridiagonal::new(sub1, d1, sup1)?, Tridiagonal::new(sub2, d2, sup2)?))
}

// ---------------------------------------------------------------------------
// Tables

/// Coefficients on one `V_J`: `a[(j, pair)] = A{gamma_A; j | (Lambda,P) J}`,
/// `b[(pair, j)] = B{(Lambda,P) J | gamma_A; j}`.
#[derive(Clone, Debug)]
pub struct CgBlock<T: Real> {
    pub j_total: HalfInt,
    pub omega: Vec<HalfInt>,
    pub pairs: Vec<EigenPair<T>>,
    pub a: Dense<T>,
    pub b: Dense<T>,
    /// Largest relative eigen-residual of each column over both Casimirs.
    pub residuals: Vec<T>,
}

impl<T: Real> CgBlock<T> {
    pub fn pair_index(&self, nu: HalfInt) -> Option<usize> {
        self.pairs.iter().position(|p| p.nu == nu)
    }

    pub fn j_index(&self, j: HalfInt) -> Option<usize> {
        self.omega.iter().position(|&x| x == j)
    }

    pub fn column(&self, nu: HalfInt) -> Option<Vec<C<T>>> {
        self.pair_index(nu).map(|k| self.a.column(k))
    }

    pub fn a_coeff(&self, j: HalfInt, nu: HalfInt) -> C<T> {
        match (self.j_index(j), self.pair_index(nu)) {
            (Some(r), Some(c)) => self.a[(r, c)],
            _ => C::zero(),
        }
    }

    pub fn b_coeff(&self, nu: HalfInt, j: HalfInt) -> C<T> {
        match (self.pair_index(nu), self.j_index(j)) {
            (Some(r), Some(c)) => self.b[(r, c)],
            _ => C::zero(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgTable<T: Real> {
    pub problem: CouplingProblem<T>,
    pub blocks: Vec<CgBlock<T>>,
}

impl<T: Real> CgTable<T> {
    pub fn block(&self, big_j: HalfInt) -> Option<&CgBlock<T>> {
        self.blocks.iter().find(|b| b.j_total == big_j)
    }

    pub fn j_max(&self) -> HalfInt {
        self.blocks.last().map(|b| b.j_total).unwrap_or(HalfInt::ZERO)
    }

    /// `B{(lambda+nu, rho+A nu) J | gamma_A; j}`, zero when not present.
    pub fn b(&self, nu: HalfInt, big_j: HalfInt, j: HalfInt) -> C<T> {
        self.block(big_j).map_or(C::zero(), |b| b.b_coeff(nu, j))
    }

    pub fn a(&self, j: HalfInt, nu: HalfInt, big_j: HalfInt) -> C<T> {
        self.block(big_j).map_or(C::zero(), |b| b.a_coeff(j, nu))
    }
}

/// Closed-form `gamma = 1/2` coefficient `B{(lambda + sigma, rho + A sigma) J | 1/2_A; j}`
/// for `sigma = -1/2` (`upper = false`) or `+1/2`, at `j = J -+ 1/2`.
pub fn half_spin_coefficient<T: Real>(label: &IrrepLabel<T>, a: i8, upper: bool, big_j: HalfInt, j: HalfInt) -> Result<C<T>> {
    let h = HalfInt::HALF;
    let lower_row = if j == big_j - h {
        true
    } else if j == big_j + h {
        false
    } else {
        return domain(format!("j = {j} is not J -+ 1/2 for J = {big_j}"));
    };
    let at = if a > 0 { T::one() } else { -T::one() };
    let ia = c_i::<T>() * c_real(at);
    let lam = label.lambda_t();
    let jt = T::from_half(big_j);
    let hf = T::lit(0.5);
    let arho = label.rho * c_real(at);
    let z = c_real(lam) + arho;
    if cabs(z) == T::zero() {
        return Err(Error::DegenerateNormalisation);
    }
    let den = rsqrt(jt + jt + T::one()) * csqrt(z);
    let plus = rsqrt(jt + lam + hf) * csqrt(c_real(jt + hf) + arho) / den;
    let minus = rsqrt(jt - lam + hf) * csqrt(c_real(jt + hf) - arho) / den;
    Ok(match (upper, lower_row) {
        (false, true) => ia * minus,
        (false, false) => plus,
        (true, true) => plus,
        (true, false) => -ia * minus,
    })
}

struct Raw<T: Real> {
    big_j: HalfInt,
    omega: Vec<HalfInt>,
    pairs: Vec<EigenPair<T>>,
    vecs: Vec<Vec<C<T>>>,
    residuals: Vec<T>,
    /// `<(j') J, J | K_+ | (j) J-1, J-1>`, rows over this block's `Omega`.
    link: Option<Dense<T>>,
}

fn relative_residual<T: Real>(t: &Tridiagonal<T>, x: &[C<T>], k: C<T>) -> T {
    t.residual(x, k) / T::one().max(t.max_abs())
}

fn raw_block<T: Real>(problem: &CouplingProblem<T>, big_j: HalfInt, prev: Option<HalfInt>) -> Result<Raw<T>> {
    let block = casimir_block(problem, big_j)?;
    let pairs = eigenpair_set(problem, big_j)?;
    let tol = tol_for::<T>(EIGEN_TOL);
    let mut vecs = Vec::with_capacity(pairs.len());
    let mut residuals = Vec::with_capacity(pairs.len());
    for p in &pairs {
        let (k1, k2) = p.casimirs();
        let mut x = eigvec_by_recurrence(&block.c1, k1, tol).map_err(|e| match e {
            Error::NotAnEigenvalue { residual, .. } => Error::Consistency(format!(
                "C1 on V_{big_j}: i Lambda P for Lambda = {} is not an eigenvalue (residual {residual:e})",
                p.lambda
            )),
            other => other,
        })?;
        let r2 = relative_residual(&block.c2, &x, k2);
        if !(r2 <= tol) {
            return Err(Error::Consistency(format!(
                "C1 eigenvector for Lambda = {} on V_{big_j} is not a C2 eigenvector (residual {r2:e})",
                p.lambda
            )));
        }
        let s = x.iter().fold(C::zero(), |acc, v| acc + *v * *v);
        if cabs(s) <= T::epsilon() * norm(&x).powi(2) {
            return Err(Error::Consistency(format!("isotropic eigenvector for Lambda = {} on V_{big_j}", p.lambda)));
        }
        let scale = csqrt(s);
        for v in &mut x {
            *v /= scale;
        }
        residuals.push(relative_residual(&block.c1, &x, k1).max(relative_residual(&block.c2, &x, k2)));
        vecs.push(x);
    }
    let link = match prev {
        Some(pj) => {
            let omega_prev = omega_set(problem.lambda(), problem.gamma(), pj)?;
            let rows = coupled_family(problem, &block.omega, big_j, big_j);
            let cols = coupled_family(problem, &omega_prev, pj, pj);
            let space = problem.space();
            let (m, leak) = project(&rows, &cols, |v| space.apply(Generator::Kp, v));
            if leak > tol_for::<T>(1e-10) {
                return Err(Error::Consistency(format!("K+ image of V_{pj} leaves V_{big_j} ({leak:e})")));
            }
            Some(m)
        }
        None => None,
    };
    Ok(Raw { big_j, omega: block.omega, pairs, vecs, residuals, link })
}

/// `-P^+_{Lambda,P}(J) sqrt(2J+1) sqrt(2J+2)`: the `K_+` matrix element
/// from `|J, J>` to `|J+1, J+1>` inside `V_{Lambda,P}`.
fn kplus_top<T: Real>(pair: &EigenPair<T>, big_j: HalfInt) -> C<T> {
    let jt = T::from_half(big_j);
    -p_plus(&pair.label(), big_j) * c_real((jt + jt + T::one()).sqrt() * (jt + jt + T::lit(2.0)).sqrt())
}

fn flip<T: Real>(x: &mut [C<T>]) {
    for v in x {
        *v = -*v;
    }
}

/// Fixes the sign of a column without a predecessor.
fn base_sign<T: Real>(problem: &CouplingProblem<T>, raw: &Raw<T>, k: usize) -> Result<bool> {
    let pair = &raw.pairs[k];
    let x = &raw.vecs[k];
    if problem.gamma() == HalfInt::HALF {
        let upper = !pair.nu.is_negative();
        let mut dot = C::<T>::zero();
        for (i, &j) in raw.omega.iter().enumerate() {
            let t = half_spin_coefficient(&problem.infinite, problem.finite.a, upper, raw.big_j, j)?;
            dot += t.conj() * x[i];
        }
        return Ok(dot.re < T::zero());
    }
    Ok(anchor_negative(raw, k))
}

// Anchor component j = J - nu (clamped into Omega_J): real part positive,
// imaginary part positive when the real part vanishes.
fn anchor_negative<T: Real>(raw: &Raw<T>, k: usize) -> bool {
    let target = raw.big_j - raw.pairs[k].nu;
    let lo = raw.omega[0];
    let hi = *raw.omega.last().expect("non-empty");
    let j = target.clamp(lo, hi);
    let i = raw.omega.iter().position(|&x| x == j).expect("clamped into range");
    let v = raw.vecs[k][i];
    let tiny = T::epsilon() * T::lit(1e3) * cabs(v).max(T::one());
    if v.re.abs() > tiny {
        v.re < T::zero()
    } else {
        v.im < T::zero()
    }
}

/// Clebsch-Gordan tables for every admissible `J <= j_max`.
///
/// Columns are normalised by the unconjugated sum of squares. Signs follow
/// the module structure: consecutive `J` of one pair are related by `K_+`
/// exactly as the standard basis of `V_{Lambda,P}`; the first `J` of a pair
/// matches the closed form for `gamma = 1/2` and otherwise the anchor rule.
pub fn decompose<T: Real>(problem: &CouplingProblem<T>, j_max: HalfInt) -> Result<CgTable<T>> {
    if !is_decomposable(problem) {
        return Err(problem.not_decomposable());
    }
    problem.require_j(j_max)?;
    let js = jset_upto(problem.lambda(), problem.gamma(), j_max)?;
    let mut raws: Vec<Raw<T>> = js
        .par_iter()
        .enumerate()
        .map(|(i, &big_j)| raw_block(problem, big_j, (i > 0).then(|| js[i - 1])))
        .collect::<Result<_>>()?;

    for i in 0..raws.len() {
        let (done, rest) = raws.split_at_mut(i);
        let cur = &mut rest[0];
        let prev = done.last();
        for k in 0..cur.pairs.len() {
            let nu = cur.pairs[k].nu;
            let predecessor = prev.and_then(|p| p.pairs.iter().position(|q| q.nu == nu).map(|kp| (p, kp)));
            let negative = match predecessor {
                Some((p, kp)) => {
                    let link = cur.link.as_ref().expect("link to previous block");
                    let lx = link.mul_vec(&p.vecs[kp]);
                    let s = cur.vecs[k].iter().zip(&lx).fold(C::<T>::zero(), |acc, (y, v)| acc + *y * *v);
                    let target = kplus_top(&cur.pairs[k], p.big_j);
                    let scale = T::one().max(cabs(target));
                    if cabs(target) <= tol_for::<T>(1e-12) {
                        anchor_negative(cur, k)
                    } else {
                        let negative = (s * target.conj()).re < T::zero();
                        let signed = if negative { -s } else { s };
                        if cabs(signed - target) > tol_for::<T>(1e-8) * scale {
                            return Err(Error::Consistency(format!(
                                "K+ between V_{} and V_{} for Lambda = {}: {} vs {}",
                                p.big_j, cur.big_j, cur.pairs[k].lambda, signed, target
                            )));
                        }
                        negative
                    }
                }
                None => base_sign(problem, cur, k)?,
            };
            if negative {
                flip(&mut cur.vecs[k]);
            }
        }
    }

    let blocks = raws
        .into_iter()
        .map(|r| {
            let n = r.omega.len();
            let mut a = Dense::zeros(n, r.pairs.len());
            for (c, v) in r.vecs.iter().enumerate() {
                for (row, x) in v.iter().enumerate() {
                    a[(row, c)] = *x;
                }
            }
            let b = a.inverse()?;
            Ok(CgBlock { j_total: r.big_j, omega: r.omega, pairs: r.pairs, a, b, residuals: r.residuals })
        })
        .collect::<Result<_>>()?;
    Ok(CgTable { problem: *problem, blocks })
}

/// `(lhs, rhs)` with `lhs = B{(Lambda+1, P+A) J | J-gamma} / B{(Lambda, P) J | J-gamma}`
/// and `rhs = sqrt(J+Lambda+1) sqrt(J+AP+1) / (sqrt(J-Lambda) sqrt(J-AP))`;
/// their quotient does not depend on `J`.
pub fn cg_ratio_check<T: Real>(table: &CgTable<T>, nu: HalfInt, big_j: HalfInt) -> Result<(C<T>, C<T>)> {
    let problem = &table.problem;
    let g = problem.gamma();
    if big_j < problem.lambda().abs() + g {
        return domain(format!("J = {big_j} is below |lambda| + gamma"));
    }
    let block = table.block(big_j).ok_or_else(|| Error::Domain(format!("J = {big_j} is not in the table")))?;
    let upper = nu + HalfInt::ONE;
    if block.pair_index(nu).is_none() {
        return domain(format!("no pair with nu = {nu} at J = {big_j}"));
    }
    if block.pair_index(upper).is_none() {
        return domain(format!("pair with nu = {nu} has no partner (Lambda + 1, P + A)"));
    }
    let j = big_j - g;
    let lhs = block.b_coeff(upper, j) / block.b_coeff(nu, j);
    let pair = pair_for(problem, nu);
    let jt = T::from_half(big_j);
    let ap = pair.p * c_real(problem.sign());
    let lam = T::from_half(pair.lambda);
    let one = T::one();
    let rhs = rsqrt(jt + lam + one) * csqrt(c_real(jt + one) + ap) / (rsqrt(jt - lam) * csqrt(c_real(jt) - ap));
    Ok((lhs, rhs))
}

/// Pairs whose coupled module `V_{Lambda,P}` is unitary.
pub fn unitary_outputs<T: Real>(problem: &CouplingProblem<T>) -> Result<Vec<(EigenPair<T>, Classification)>> {
    Ok(output_classes(problem)?.into_iter().filter(|(_, c)| c.is_unitary()).collect())
}

pub(crate) fn sanity_j<T: Real>(problem: &CouplingProblem<T>) -> HalfInt {
    // smallest J at which every pair is present
    problem.lambda().abs() + problem.gamma()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    fn problem(gx2: i32, a: i8, lx2: i32, re: f64, im: f64) -> CouplingProblem<f64> {
        CouplingProblem::new(FiniteLabel::new(h(gx2), a).unwrap(), IrrepLabel::new(h(lx2), Complex::new(re, im)).unwrap()).unwrap()
    }

    #[test]
    fn decomposability_examples() {
        assert!(!is_decomposable(&problem(1, 1, 1, -0.5, 0.0)));
        assert!(is_decomposable(&problem(5, 1, 0, 0.0, 2.0)));
        assert!(!is_decomposable(&problem(2, 1, 4, -1.0, 0.0)));
        // (1, -2) is finite-dimensional; the criterion itself still applies
        let l = IrrepLabel::new(h(2), Complex::new(-2.0, 0.0)).unwrap();
        assert!(!decomposable(FiniteLabel::new(h(2), 1).unwrap(), &l));
        // rho + A lambda = 2 = 2 gamma lies on the boundary
        assert!(is_decomposable(&problem(2, 1, 2, 1.0, 0.0)));
    }

    #[test]
    fn eigenpair_examples() {
        let p = problem(1, 1, 2, 0.3, 0.4);
        let pairs = eigenpair_set(&p, h(3)).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].lambda, h(1));
        assert_eq!(pairs[0].p, Complex::new(-0.2, 0.4));
        let pairs = eigenpair_set(&p, h(1)).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].lambda, h(1));
        let q = problem(1, -1, -2, 0.3, 0.4);
        let pairs = eigenpair_set(&q, h(1)).unwrap();
        assert_eq!((pairs.len(), pairs[0].lambda), (1, h(-1)));
        assert!(matches!(eigenpair_set(&problem(1, 1, 1, -0.5, 0.0), h(1)), Err(Error::NotDecomposable { .. })));
    }

    #[test]
    fn coupled_vector_examples() {
        let p = problem(3, 1, 2, 0.3, 0.4);
        let big_j = h(7);
        let v = coupled_basis_vector(&p, big_j - h(3), big_j, big_j).unwrap();
        assert_eq!(v.len(), 1);
        let (s, c) = v.iter().next().unwrap();
        assert_eq!((s.mus[0], s.j, s.m), (h(3), h(4), h(4)));
        assert!((c.re - 1.0).abs() < 1e-14);
        for m in mrange(big_j).unwrap() {
            let v = coupled_basis_vector(&p, h(6), big_j, m).unwrap();
            assert!((ket_norm(&v) - 1.0).abs() < 1e-13);
        }
        assert!(coupled_basis_vector(&p, h(12), big_j, big_j).is_err());
    }

    #[test]
    fn block_is_tridiagonal_with_boundary_zero() {
        let p = problem(3, -1, 1, 0.2, 1.1);
        let big_j = h(8);
        let b = casimir_block(&p, big_j).unwrap();
        assert_eq!(b.omega, vec![h(5), h(7), h(9), h(11)]);
        for (i, w) in b.omega.windows(2).enumerate() {
            let nonzero = cabs(b.c1.sub()[i]) > 1e-12;
            assert_eq!(nonzero, w[0] != big_j + p.gamma());
            assert!(cabs(b.c1.sup()[i]) > 1e-12);
        }
        assert!(b.leak < 1e-13);
    }

    #[test]
    fn closed_form_matches_with_amended_diagonal() {
        let p = problem(2, 1, 1, 0.35, -0.8);
        for t in [1, 3, 5, 9] {
            let b = casimir_block(&p, h(t)).unwrap();
            let (c1, c2) = closed_form_block(&p, h(t), DiagonalReading::Amended).unwrap();
            assert!(b.c1.to_dense().sub(&c1.to_dense()).max_abs() < 1e-10);
            assert!(b.c2.to_dense().sub(&c2.to_dense()).max_abs() < 1e-10);
        }
    }

    #[test]
    fn half_spin_table_columns_have_unit_bilinear_norm() {
        let l = IrrepLabel::new(h(1), Complex::new(0.4, 0.9)).unwrap();
        for a in [-1i8, 1] {
            for upper in [false, true] {
                for t in [3, 5, 11] {
                    let s: Complex<f64> = [h(t) - h(1), h(t) + h(1)]
                        .iter()
                        .map(|&j| half_spin_coefficient(&l, a, upper, h(t), j).unwrap().powi(2))
                        .sum();
                    assert!((s - 1.0).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn half_spin_decomposition_matches_closed_form() {
        for (lx2, a, re, im) in [(0, 1, 0.4, 0.0), (1, -1, 0.3, 0.7), (-3, 1, -0.2, 1.5), (2, 1, 0.0, -2.0)] {
            let p = problem(1, a, lx2, re, im);
            let j_max = if (h(lx2) + h(1)).is_integer() { h(14) } else { h(15) };
            let table = decompose(&p, j_max).unwrap();
            for block in &table.blocks {
                for pair in &block.pairs {
                    for &j in &block.omega {
                        let expect = half_spin_coefficient(&p.infinite, a, !pair.nu.is_negative(), block.j_total, j).unwrap();
                        let got = block.b_coeff(pair.nu, j);
                        assert!((got - expect).norm() < 1e-10, "lambda={lx2} J={} j={j} nu={}: {got} vs {expect}", block.j_total, pair.nu);
                    }
                }
            }
        }
    }

    #[test]
    fn inverse_is_transpose() {
        let p = problem(4, -1, 2, 0.6, 0.25);
        let table = decompose(&p, h(12)).unwrap();
        for b in &table.blocks {
            assert!(b.b.sub(&b.a.transpose()).max_abs() < 1e-10, "J={}", b.j_total);
        }
    }

    #[test]
    fn ratio_quotient_is_j_independent() {
        let p = problem(2, 1, 1, 0.3, 0.8);
        let table = decompose(&p, h(17)).unwrap();
        let start = sanity_j(&p);
        let qs: Vec<_> = (0..5)
            .map(|k| {
                let (l, r) = cg_ratio_check(&table, h(-2), start + HalfInt::from_int(k)).unwrap();
                l / r
            })
            .collect();
        for w in qs.windows(2) {
            assert!((w[0] / w[1] - 1.0).norm() < 1e-9, "{qs:?}");
        }
        assert!(cg_ratio_check(&table, h(2), start).is_err());
    }

    #[test]
    fn unitary_output_examples() {
        let p = problem(1, 1, 0, 0.5, 1.3);
        let u = unitary_outputs(&p).unwrap();
        assert_eq!(u.len(), 1);
        assert_eq!(u[0].1, Classification::Principal);
        assert!(unitary_outputs(&problem(1, 1, 2, 0.37, 0.21)).unwrap().is_empty());
    }
}
