//! Tensor operators `F^A_gamma (x) V -> V'`: intertwiner residuals,
//! Wigner-Eckart projections, reduced matrix elements and the
//! Jordan-Schwinger operators `T^A`, `T~^A`.

use num_traits::Zero;
use serde::Serialize;

use crate::coupling::{decompose, pair_for, CgTable, CouplingProblem, EigenPair};
use crate::error::{domain, Error, Result};
use crate::half::{jset_upto, mrange, steps, HalfInt};
use crate::repr::{finite_generator_matrix, require_infinite, FiniteLabel, Generator, IrrepLabel, TruncatedModule};
use crate::scalar::{c_half, c_i, c_real, cabs, csqrt, to_c64, tol_for, Real, C};
use crate::sparse::{SparseOperator, State};
use crate::su2::cg;

/// Interior margin for residuals of single operators and two-factor products.
pub const MARGIN: HalfInt = HalfInt::from_int(2);

/// Components `T_mu`, each mapping the source truncation into the target one.
#[derive(Clone, Debug)]
pub struct TensorOperator<T: Real> {
    pub finite: FiniteLabel,
    pub source: TruncatedModule<T>,
    pub target: TruncatedModule<T>,
    pub components: Vec<(HalfInt, SparseOperator<T>)>,
}

impl<T: Real> TensorOperator<T> {
    /// Fills every entry allowed by the selection rules
    /// `m' = m + mu`, `j' in {j - gamma, ..., j + gamma}` from `f(mu, source, target)`.
    pub fn from_elements(
        finite: FiniteLabel,
        source: TruncatedModule<T>,
        target: TruncatedModule<T>,
        f: impl Fn(HalfInt, State, State) -> C<T>,
    ) -> Result<Self> {
        let g = finite.gamma;
        let components = mrange(g)?
            .into_iter()
            .map(|mu| {
                let rows = target.basis();
                let triplets: Vec<_> = source
                    .basis()
                    .states()
                    .iter()
                    .enumerate()
                    .flat_map(|(c, &s)| {
                        let m2 = s.m + mu;
                        let f = &f;
                        steps((s.j - g).abs(), s.j + g).filter_map(move |j2| {
                            let t = State::new(j2, m2);
                            let r = rows.index_of(t)?;
                            Some((r, c, f(mu, s, t)))
                        })
                    })
                    .collect();
                (mu, SparseOperator::from_triplets(rows.clone(), source.basis().clone(), triplets))
            })
            .collect();
        Ok(TensorOperator { finite, source, target, components })
    }

    pub fn component(&self, mu: HalfInt) -> Option<&SparseOperator<T>> {
        self.components.iter().find(|(m, _)| *m == mu).map(|(_, op)| op)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let components = self.components.iter().map(|(mu, op)| (*mu, op.scale(s))).collect();
        TensorOperator { components, ..self.clone() }
    }

    pub fn max_abs(&self) -> T {
        self.components.iter().map(|(_, op)| op.max_abs()).fold(T::zero(), T::max)
    }

    /// Stored entries that break `m' = m + mu` or `|j' - j| <= gamma`.
    pub fn selection_violations(&self) -> usize {
        let g = self.finite.gamma;
        self.components
            .iter()
            .map(|(mu, op)| {
                op.entries()
                    .filter(|&(r, c, _)| {
                        let (t, s) = (op.rows().state(r), op.cols().state(c));
                        t.m != s.m + *mu || (t.j - s.j).abs() > g || !(t.j - s.j + g).is_integer()
                    })
                    .count()
            })
            .sum()
    }

    fn check_shapes(&self) -> Result<()> {
        if self.target.j_cut < self.source.j_cut {
            return domain(format!("target truncation {} lies below the source truncation {}", self.target.j_cut, self.source.j_cut));
        }
        for (mu, op) in &self.components {
            if **op.rows() != **self.target.basis() || **op.cols() != **self.source.basis() {
                return Err(Error::Incompatible(format!("component mu = {mu} does not map source to target")));
            }
        }
        Ok(())
    }
}

/// Largest interior entry of `[X, T_mu] - sum_nu <e^nu, X e_mu> T_nu` over
/// all `mu`, relative to `max(1, max|X| max|T|)`.
pub fn intertwiner_residual<T: Real>(t: &TensorOperator<T>, gen: Generator) -> Result<T> {
    t.check_shapes()?;
    let xs = t.source.generator(gen);
    let xt = t.target.generator(gen);
    let f = finite_generator_matrix::<T>(t.finite, gen);
    let g = t.finite.gamma;
    let keep = t.source.interior(MARGIN);
    let mut worst = T::zero();
    for (mu, op) in &t.components {
        let mut d = xt.matmul(op)?.sub(&op.matmul(&xs)?)?;
        for (nu, other) in &t.components {
            let coeff = f.element(State::new(g, *nu), State::new(g, *mu));
            if !coeff.is_zero() {
                d = d.axpy(-coeff, other)?;
            }
        }
        worst = worst.max(d.max_abs_on_columns(&keep));
    }
    let scale = T::one().max(xt.max_abs().max(xs.max_abs()) * t.max_abs());
    Ok(worst / scale)
}

fn find_nu<T: Real>(problem: &CouplingProblem<T>, target: &IrrepLabel<T>) -> Option<HalfInt> {
    let tol = tol_for::<T>(1e-10) * (T::one() + cabs(target.rho));
    mrange(problem.gamma()).ok()?.into_iter().find(|&nu| {
        let p = pair_for(problem, nu);
        p.lambda == target.lambda && cabs(p.p - target.rho) <= tol
    })
}

fn absent<T: Real>(label: &IrrepLabel<T>) -> Error {
    let r = to_c64(label.rho);
    Error::AbsentTarget { target: format!("({}, {}{:+}i)", label.lambda, r.re, r.im) }
}

/// Projection onto `V_{Lambda,P}` with reduced element 1:
/// `<(Lambda,P) j',m'| T_mu |(lambda,rho) j,m> = B{(Lambda,P) j' | gamma_A; j} <gamma mu; j m | j' m'>`.
/// The source keeps `j <= j_cut`, the target `j' <= j_cut + gamma`.
pub fn wigner_eckart_projection<T: Real>(problem: &CouplingProblem<T>, target: &EigenPair<T>, j_cut: HalfInt) -> Result<TensorOperator<T>> {
    let label = target.label();
    let nu = find_nu(problem, &label).ok_or_else(|| absent(&label))?;
    let top = jset_upto(problem.lambda(), problem.gamma(), j_cut + problem.gamma())?
        .last()
        .copied()
        .ok_or_else(|| Error::Domain(format!("no admissible J up to {}", j_cut + problem.gamma())))?;
    let table = decompose(problem, top)?;
    projection_from_table(&table, nu, j_cut)
}

/// [`wigner_eckart_projection`] for the pair `nu` of an existing table.
pub fn projection_from_table<T: Real>(table: &CgTable<T>, nu: HalfInt, j_cut: HalfInt) -> Result<TensorOperator<T>> {
    let problem = &table.problem;
    let g = problem.gamma();
    let source = TruncatedModule::new(problem.infinite, j_cut)?;
    let j_cut = source.top();
    if table.j_max() < j_cut + g {
        return domain(format!("table stops at J = {}, below j_cut + gamma = {}", table.j_max(), j_cut + g));
    }
    let pair = pair_for(problem, nu);
    if !mrange(g)?.contains(&nu) {
        return Err(absent(&pair.label()));
    }
    require_infinite(&pair.label())?;
    let target = TruncatedModule::new(pair.label(), j_cut + g)?;
    TensorOperator::from_elements(problem.finite, source, target, |mu, s, t| {
        table.b(nu, t.j, s.j) * c_real(cg::<T>(g, mu, s.j, s.m, t.j, t.m))
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ReducedElement<T: Real> {
    pub value: C<T>,
    /// Largest `|r - value| / |value|` over the sampled ratios `r`.
    pub scatter: T,
    pub samples: usize,
}

/// Ratio of `T`'s matrix elements to `B * CG`, over every position allowed
/// by the selection rules whose factor exceeds `1e-12` in magnitude.
pub fn reduced_matrix_element<T: Real>(t: &TensorOperator<T>, table: &CgTable<T>) -> Result<ReducedElement<T>> {
    let problem = &table.problem;
    if problem.finite != t.finite || problem.infinite != t.source.label {
        return Err(Error::Incompatible("tensor operator and table describe different couplings".into()));
    }
    let nu = find_nu(problem, &t.target.label).ok_or_else(|| absent(&t.target.label))?;
    let g = problem.gamma();
    let floor = tol_for::<T>(1e-12);
    let mut ratios = Vec::new();
    for (mu, op) in &t.components {
        for (c, s) in op.cols().states().iter().enumerate() {
            for j2 in steps((s.j - g).abs(), s.j + g) {
                let tgt = State::new(j2, s.m + *mu);
                if j2 > table.j_max() || tgt.m.abs() > j2 {
                    continue;
                }
                let Some(r) = op.rows().index_of(tgt) else { continue };
                let expected = table.b(nu, j2, s.j) * c_real(cg::<T>(g, *mu, s.j, s.m, j2, tgt.m));
                if cabs(expected) < floor {
                    continue;
                }
                ratios.push(op.get(r, c) / expected);
            }
        }
    }
    if ratios.is_empty() {
        return Err(Error::InsufficientSample("every factorisation denominator vanishes".into()));
    }
    let n = T::from_usize(ratios.len()).expect("sample count");
    let value = ratios.iter().fold(C::<T>::zero(), |a, r| a + r) / c_real(n);
    let scale = cabs(value).max(T::min_positive_value());
    let scatter = ratios.iter().map(|r| cabs(*r - value) / scale).fold(T::zero(), T::max);
    Ok(ReducedElement { value, scatter, samples: ratios.len() })
}

// ---------------------------------------------------------------------------
// Jordan-Schwinger operators

/// `T^A` (lowering, to `(lambda - 1/2, rho - A/2)`) or `T~^A` (raising,
/// to `(lambda + 1/2, rho + A/2)`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JsFactor {
    pub a: i8,
    pub tilde: bool,
    /// `+1` or `-1` for `mu = +-1/2`.
    pub sign: i8,
}

impl JsFactor {
    pub fn new(a: i8, tilde: bool, sign: i8) -> Self {
        assert!(a.abs() == 1 && sign.abs() == 1, "A and the component sign are +-1");
        JsFactor { a, tilde, sign }
    }

    /// `mu` as a half-integer.
    pub fn step(self) -> HalfInt {
        if self.sign > 0 { HalfInt::HALF } else { -HalfInt::HALF }
    }

    pub fn shifted<T: Real>(self, label: &IrrepLabel<T>) -> IrrepLabel<T> {
        let d = if self.tilde { HalfInt::HALF } else { -HalfInt::HALF };
        IrrepLabel { lambda: label.lambda + d, rho: label.rho + c_real(T::from_half(d) * T::lit(self.a as f64)) }
    }

    pub fn name(self) -> String {
        format!("{}^{}_{}", if self.tilde { "T~" } else { "T" }, if self.a > 0 { "+" } else { "-" }, if self.sign > 0 { "+" } else { "-" })
    }
}

fn js_precondition<T: Real>(label: &IrrepLabel<T>) -> Result<()> {
    require_infinite(label)?;
    let lam = c_real(label.lambda_t());
    let tol = tol_for::<T>(1e-12) * (T::one() + cabs(label.rho));
    if cabs(label.rho - lam) <= tol || cabs(label.rho + lam) <= tol {
        return Err(Error::DegenerateNormalisation);
    }
    Ok(())
}

fn check_a(a: i8) -> Result<()> {
    if a.abs() != 1 {
        return domain(format!("A = {a} must be +1 or -1"));
    }
    Ok(())
}

/// Matrix element of one JS component between `(j, m)` and `(j', m')`.
pub fn js_element<T: Real>(label: &IrrepLabel<T>, f: JsFactor, source: State, target: State) -> C<T> {
    let (j, m) = (source.j, source.m);
    let sm = if f.sign > 0 { m } else { -m };
    if target.m != m + f.step() {
        return C::zero();
    }
    let r = |x: C<T>| csqrt(x);
    let h = |x: HalfInt| c_half::<T>(x);
    let lam = h(label.lambda);
    let arho = label.rho * c_real(T::lit(f.a as f64));
    let ia = c_i::<T>() * c_real(T::lit(f.a as f64));
    let sg = c_real(T::lit(f.sign as f64));
    let one = c_real(T::one());
    let two = c_real(T::lit(2.0));
    let jj = h(j);
    if target.j + HalfInt::HALF == j {
        if j.twice() == 0 {
            return C::zero();
        }
        let den = r(two * jj) * r(two * jj + one);
        let jm = h(j - sm);
        if f.tilde {
            -sg * ia * r(jm) * r(jj - lam) * r(jj - arho) / den
        } else {
            sg * r(jm) * r(jj + lam) * r(jj + arho) / den
        }
    } else if target.j == j + HalfInt::HALF {
        let den = r(two * jj + one) * r(two * jj + two);
        let jp = h(j + sm) + one;
        if f.tilde {
            r(jp) * r(jj + lam + one) * r(jj + arho + one) / den
        } else {
            ia * r(jp) * r(jj - lam + one) * r(jj - arho + one) / den
        }
    } else {
        C::zero()
    }
}

/// One JS component from `V_{lambda,rho}` truncated at `j_cut` into the
/// shifted module truncated at `j_cut + 1/2`.
pub fn js_component<T: Real>(label: &IrrepLabel<T>, f: JsFactor, j_cut: HalfInt) -> Result<SparseOperator<T>> {
    js_precondition(label)?;
    let source = TruncatedModule::new(*label, j_cut)?;
    let target = TruncatedModule::new(f.shifted(label), j_cut + HalfInt::HALF)?;
    let rows = target.basis().clone();
    let triplets: Vec<_> = source
        .basis()
        .states()
        .iter()
        .enumerate()
        .flat_map(|(c, &s)| {
            let m2 = s.m + f.step();
            let rows = &rows;
            [s.j - HalfInt::HALF, s.j + HalfInt::HALF].into_iter().filter_map(move |j2| {
                let t = State::new(j2, m2);
                rows.index_of(t).map(|r| (r, c, t))
            })
        })
        .map(|(r, c, t)| (r, c, js_element(label, f, source.basis().state(c), t)))
        .collect();
    Ok(SparseOperator::from_triplets(rows, source.basis().clone(), triplets))
}

/// `T^A` and `T~^A` on `V_{lambda,rho}` as tensor operators of type `F^A_{1/2}`.
#[derive(Clone, Debug)]
pub struct JsOperators<T: Real> {
    pub lowering: TensorOperator<T>,
    pub raising: TensorOperator<T>,
}

impl<T: Real> JsOperators<T> {
    /// The four components `(name, operator)`.
    pub fn all(&self) -> Vec<(String, &SparseOperator<T>)> {
        let a = self.lowering.finite.a;
        let mut out = Vec::new();
        for (tilde, t) in [(false, &self.lowering), (true, &self.raising)] {
            for (mu, op) in &t.components {
                out.push((JsFactor::new(a, tilde, if mu.is_negative() { -1 } else { 1 }).name(), op));
            }
        }
        out
    }
}

pub fn js_operators<T: Real>(label: &IrrepLabel<T>, a: i8, j_cut: HalfInt) -> Result<JsOperators<T>> {
    check_a(a)?;
    js_precondition(label)?;
    let finite = FiniteLabel::new(HalfInt::HALF, a)?;
    let build = |tilde: bool| -> Result<TensorOperator<T>> {
        let source = TruncatedModule::new(*label, j_cut)?;
        let shifted = JsFactor::new(a, tilde, 1).shifted(label);
        let target = TruncatedModule::new(shifted, j_cut + HalfInt::HALF)?;
        TensorOperator::from_elements(finite, source, target, |mu, s, t| {
            let sign = if mu.is_negative() { -1 } else { 1 };
            js_element(label, JsFactor::new(a, tilde, sign), s, t)
        })
    };
    Ok(JsOperators { lowering: build(false)?, raising: build(true)? })
}

/// Applies `factors` right to left starting from `V_{lambda,rho}` at `j_cut`;
/// each factor raises the truncation by 1/2.
pub fn js_chain<T: Real>(label: &IrrepLabel<T>, factors: &[JsFactor], j_cut: HalfInt) -> Result<(IrrepLabel<T>, SparseOperator<T>)> {
    let source = TruncatedModule::new(*label, j_cut)?;
    let mut op = SparseOperator::identity(source.basis().clone());
    let mut cur = *label;
    let mut cut = j_cut;
    for f in factors.iter().rev() {
        check_a(f.a)?;
        op = js_component(&cur, *f, cut)?.matmul(&op)?;
        cur = f.shifted(&cur);
        cut += HalfInt::HALF;
    }
    Ok((cur, op))
}

/// `(M_0, M_+, M_-)` from `M_0 = -(T_- T~_+ + T_+ T~_-)/2`, `M_+- = +- T_+- T~_+-`,
/// restricted back onto the source truncation.
pub fn js_reconstruct<T: Real>(label: &IrrepLabel<T>, a: i8, j_cut: HalfInt) -> Result<[SparseOperator<T>; 3]> {
    check_a(a)?;
    js_precondition(label)?;
    let basis = TruncatedModule::new(*label, j_cut)?.basis().clone();
    let product = |s1: i8, s2: i8| -> Result<SparseOperator<T>> {
        let (_, op) = js_chain(label, &[JsFactor::new(a, false, s1), JsFactor::new(a, true, s2)], j_cut)?;
        Ok(op.restrict(basis.clone(), basis.clone()))
    };
    let half = c_real(T::lit(-0.5));
    let m0 = product(-1, 1)?.add(&product(1, -1)?)?.scale(half);
    let mp = product(1, 1)?;
    let mm = product(-1, -1)?.scale(c_real(-T::one()));
    Ok([m0, mp, mm])
}

/// `((J - i A K)/2)` for `J_0`, `J_+`, `J_-` on the truncation.
pub fn m_reference<T: Real>(module: &TruncatedModule<T>, a: i8) -> Result<[SparseOperator<T>; 3]> {
    let half = c_real(T::lit(0.5));
    let ia = c_i::<T>() * c_real(T::lit(a as f64));
    let pick = |j, k| -> Result<SparseOperator<T>> { Ok(module.generator(j).axpy(-ia, &module.generator(k))?.scale(half)) };
    Ok([pick(Generator::J0, Generator::K0)?, pick(Generator::Jp, Generator::Kp)?, pick(Generator::Jm, Generator::Km)?])
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub residual: f64,
}

/// Interior deviations of the reconstructed `M^A` from `(J - i A K)/2`,
/// largest entry relative to `max(1, max|M|)`.
pub fn js_reconstruct_residuals<T: Real>(label: &IrrepLabel<T>, a: i8, j_cut: HalfInt) -> Result<Vec<CheckLine>> {
    let module = TruncatedModule::new(*label, j_cut)?;
    let built = js_reconstruct(label, a, j_cut)?;
    let reference = m_reference(&module, a)?;
    let keep = module.interior(MARGIN);
    let names = ["M0", "M+", "M-"];
    built
        .iter()
        .zip(&reference)
        .zip(names)
        .map(|((b, r), name)| {
            let d = b.max_diff_on_columns(r, &keep)?;
            let scale = T::one().max(r.max_abs_on_columns(&keep));
            Ok(CheckLine { name: name.into(), residual: (d / scale).to_f64().unwrap_or(f64::NAN) })
        })
        .collect()
}

/// Deviations of `[x, y]` from `expected * identity`, evaluated on interior
/// source states after routing both orderings through the intermediate labels.
fn chain_commutator<T: Real>(label: &IrrepLabel<T>, x: JsFactor, y: JsFactor, expected: bool, j_cut: HalfInt) -> Result<T> {
    let (l1, xy) = js_chain(label, &[x, y], j_cut)?;
    let (l2, yx) = js_chain(label, &[y, x], j_cut)?;
    if l1.lambda != l2.lambda || cabs(l1.rho - l2.rho) > tol_for::<T>(1e-12) {
        return Err(Error::Consistency("orderings end on different labels".into()));
    }
    let d = xy.sub(&yx.restrict(xy.rows().clone(), xy.cols().clone()))?;
    let d = if expected {
        let src = d.cols().clone();
        let id = SparseOperator::from_triplets(
            d.rows().clone(),
            src.clone(),
            src.states().iter().enumerate().filter_map(|(c, s)| Some((d.rows().index_of(*s)?, c, c_real(T::one())))),
        );
        d.sub(&id)?
    } else {
        d
    };
    let keep = TruncatedModule::new(*label, j_cut)?.interior(MARGIN);
    Ok(d.max_abs_on_columns(keep))
}

/// The canonical commutation relations among `T^A, T~^A, T^B, T~^B`:
/// `[T^A_+, T~^B_-] = [T~^A_+, T^B_-] = delta^{AB}` and vanishing
/// commutators among the `T` and among the `T~`.
pub fn js_commutators<T: Real>(label: &IrrepLabel<T>, a: i8, b: i8, j_cut: HalfInt) -> Result<Vec<CheckLine>> {
    check_a(a)?;
    check_a(b)?;
    js_precondition(label)?;
    let same = a == b;
    let mut cases = vec![
        (JsFactor::new(a, false, 1), JsFactor::new(b, true, -1), same),
        (JsFactor::new(a, true, 1), JsFactor::new(b, false, -1), same),
    ];
    for tilde in [false, true] {
        for (s1, s2) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            cases.push((JsFactor::new(a, tilde, s1), JsFactor::new(b, tilde, s2), false));
        }
    }
    cases
        .into_iter()
        .map(|(x, y, expected)| {
            let r = chain_commutator(label, x, y, expected, j_cut)?;
            let rhs = if expected { "1" } else { "0" };
            Ok(CheckLine { name: format!("[{}, {}] = {rhs}", x.name(), y.name()), residual: r.to_f64().unwrap_or(f64::NAN) })
        })
        .collect()
}

/// `V_mu = sum <1/2 mu_1; 1/2 mu_2 | 1 mu> T_{mu_1} T~_{mu_2}` against
/// `V_0 = -sqrt 2 M_0`, `V_+-1 = +- M_+-` with `M` from the generators.
pub fn js_ansatz_residuals<T: Real>(label: &IrrepLabel<T>, a: i8, j_cut: HalfInt) -> Result<Vec<CheckLine>> {
    check_a(a)?;
    js_precondition(label)?;
    let module = TruncatedModule::new(*label, j_cut)?;
    let basis = module.basis().clone();
    let [m0, mp, mm] = m_reference(&module, a)?;
    let h = HalfInt::HALF;
    let keep = module.interior(MARGIN);
    let mut out = Vec::new();
    for (mu, reference) in [(HalfInt::ONE, mp), (HalfInt::ZERO, m0.scale(c_real(-T::lit(2.0).sqrt()))), (-HalfInt::ONE, mm.scale(c_real(-T::one())))] {
        let mut v = SparseOperator::zeros(basis.clone(), basis.clone());
        for mu1 in [-h, h] {
            let mu2 = mu - mu1;
            if mu2.abs() > h {
                continue;
            }
            let w = cg::<T>(h, mu1, h, mu2, HalfInt::ONE, mu);
            let s = |x: HalfInt| if x.is_negative() { -1 } else { 1 };
            let (_, op) = js_chain(label, &[JsFactor::new(a, false, s(mu1)), JsFactor::new(a, true, s(mu2))], j_cut)?;
            v = v.axpy(c_real(w), &op.restrict(basis.clone(), basis.clone()))?;
        }
        let d = v.max_diff_on_columns(&reference, &keep)?;
        let scale = T::one().max(reference.max_abs_on_columns(&keep));
        out.push(CheckLine { name: format!("V_{mu}"), residual: (d / scale).to_f64().unwrap_or(f64::NAN) });
    }
    Ok(out)
}

/// `(t(lambda + 1/2, rho + A/2) t~(lambda, rho), lambda + A rho)` for
/// `t = t~ = sqrt(lambda + A rho)`.
pub fn js_normalisation_product<T: Real>(label: &IrrepLabel<T>, a: i8) -> Result<(C<T>, C<T>)> {
    check_a(a)?;
    let x = c_real(label.lambda_t()) + label.rho * c_real(T::lit(a as f64));
    Ok((csqrt(x + c_real(T::one())) * csqrt(x), x))
}

/// Reduced elements of `T^A` and `T~^A` against the `F^A_{1/2}` table:
/// both equal `sqrt(lambda + A rho)` when the matrix elements factor as
/// `sqrt(lambda + A rho) B CG`.
pub fn js_reduced_elements<T: Real>(label: &IrrepLabel<T>, a: i8, j_cut: HalfInt) -> Result<[ReducedElement<T>; 2]> {
    let ops = js_operators(label, a, j_cut)?;
    let problem = CouplingProblem::new(FiniteLabel::new(HalfInt::HALF, a)?, *label)?;
    let top = jset_upto(label.lambda, HalfInt::HALF, j_cut + HalfInt::HALF)?
        .last()
        .copied()
        .ok_or_else(|| Error::Domain("empty table".into()))?;
    let table = decompose(&problem, top)?;
    Ok([reduced_matrix_element(&ops.lowering, &table)?, reduced_matrix_element(&ops.raising, &table)?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    fn label(lx2: i32, re: f64, im: f64) -> IrrepLabel<f64> {
        IrrepLabel::new(h(lx2), Complex::new(re, im)).unwrap()
    }

    fn problem(gx2: i32, a: i8, l: IrrepLabel<f64>) -> CouplingProblem<f64> {
        CouplingProblem::new(FiniteLabel::new(h(gx2), a).unwrap(), l).unwrap()
    }

    #[test]
    fn projection_intertwines_and_reduces_to_one() {
        for (gx2, a, l) in [(1, 1, label(0, 0.0, 2.0)), (2, -1, label(1, 0.3, 0.7)), (3, 1, label(2, -1.2, 0.4))] {
            let p = problem(gx2, a, l);
            let cut = h(2 * 6);
            let top = jset_upto(l.lambda, h(gx2), cut + h(gx2)).unwrap().last().copied().unwrap();
            let table = decompose(&p, top).unwrap();
            for nu in mrange(h(gx2)).unwrap() {
                let t = projection_from_table(&table, nu, cut).unwrap();
                assert_eq!(t.selection_violations(), 0);
                for g in Generator::ALL {
                    let r = intertwiner_residual(&t, g).unwrap();
                    assert!(r < 1e-9, "gamma={gx2}/2 nu={nu} {g}: {r:e}");
                }
                let red = reduced_matrix_element(&t, &table).unwrap();
                assert!((red.value - 1.0).norm() < 1e-12 && red.scatter < 1e-12, "{red:?}");
                let red = reduced_matrix_element(&t.scale(Complex::new(2.5, 0.0)), &table).unwrap();
                assert!((red.value - 2.5).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn j0_residual_is_the_selection_rule() {
        let p = problem(2, 1, label(1, 0.3, 0.7));
        let t = wigner_eckart_projection(&p, &pair_for(&p, h(0)), h(8)).unwrap();
        assert!(intertwiner_residual(&t, Generator::J0).unwrap() < 1e-14);
    }

    #[test]
    fn absent_target_is_rejected() {
        let p = problem(1, 1, label(0, 0.0, 2.0));
        let wrong = EigenPair { nu: h(1), lambda: h(1), p: Complex::new(-0.5, 2.0) };
        assert!(matches!(wigner_eckart_projection(&p, &wrong, h(6)), Err(Error::AbsentTarget { .. })));
        let other = EigenPair { nu: h(1), lambda: h(1), p: Complex::new(7.0, 0.0) };
        assert!(matches!(wigner_eckart_projection(&p, &other, h(6)), Err(Error::AbsentTarget { .. })));
    }

    #[test]
    fn perturbation_shows_in_scatter() {
        let p = problem(1, 1, label(0, 0.0, 2.0));
        let table = decompose(&p, h(13)).unwrap();
        let t = projection_from_table(&table, h(1), h(12)).unwrap();
        let (mu, op) = &t.components[0];
        let bump = SparseOperator::from_triplets(op.rows().clone(), op.cols().clone(), op.entries().take(1).map(|(r, c, v)| (r, c, v * 1e-3)));
        let mut bumped = t.clone();
        bumped.components[0] = (*mu, op.add(&bump).unwrap());
        let red = reduced_matrix_element(&bumped, &table).unwrap();
        assert!(red.scatter > 5e-4 && red.scatter < 2e-3, "{}", red.scatter);
        assert!(intertwiner_residual(&bumped, Generator::Kp).unwrap() > 1e-6);
    }

    #[test]
    fn js_entry_by_substitution() {
        // <(-1/2, 2i - 1/2) 0,0 | T^+_+ | (0, 2i) 1/2,-1/2> = sqrt(1/2) sqrt(1/2 + 2i) / sqrt 2
        let l = label(0, 0.0, 2.0);
        let v = js_element(&l, JsFactor::new(1, false, 1), State::new(h(1), h(-1)), State::new(h(0), h(0)));
        let expect = (0.5f64).sqrt() * Complex::new(0.5, 2.0).sqrt() / 2f64.sqrt();
        assert!((v - expect).norm() < 1e-15);
        let stretched = js_element(&l, JsFactor::new(1, false, 1), State::new(h(3), h(3)), State::new(h(2), h(4)));
        assert_eq!(stretched, Complex::new(0.0, 0.0));
    }

    #[test]
    fn js_reconstructs_the_m_generators() {
        for l in [label(0, 0.0, 2.0), label(1, 0.3, 0.7), label(2, -1.2, 0.4), label(-3, 0.8, -2.0)] {
            for a in [1, -1] {
                for line in js_reconstruct_residuals(&l, a, h(12)).unwrap() {
                    assert!(line.residual < 1e-10, "{l:?} A={a} {}: {:e}", line.name, line.residual);
                }
                for line in js_ansatz_residuals(&l, a, h(12)).unwrap() {
                    assert!(line.residual < 1e-10, "{l:?} A={a} {}: {:e}", line.name, line.residual);
                }
                for b in [1, -1] {
                    for line in js_commutators(&l, a, b, h(12)).unwrap() {
                        assert!(line.residual < 1e-10, "{l:?} A={a} B={b} {}: {:e}", line.name, line.residual);
                    }
                }
                let ops = js_operators(&l, a, h(12)).unwrap();
                for t in [&ops.lowering, &ops.raising] {
                    assert_eq!(t.selection_violations(), 0);
                    for g in Generator::ALL {
                        assert!(intertwiner_residual(t, g).unwrap() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn lambda_zero_m_sum_is_j() {
        let l = label(0, 0.0, 2.0);
        let module = TruncatedModule::new(l, h(8)).unwrap();
        let plus = js_reconstruct(&l, 1, h(8)).unwrap();
        let minus = js_reconstruct(&l, -1, h(8)).unwrap();
        let keep = module.interior(MARGIN);
        for (k, g) in [Generator::J0, Generator::Jp, Generator::Jm].into_iter().enumerate() {
            let sum = plus[k].add(&minus[k]).unwrap();
            assert!(sum.max_diff_on_columns(&module.generator(g), &keep).unwrap() < 1e-12);
        }
    }

    #[test]
    fn js_factorises_through_the_half_spin_table() {
        for l in [label(0, 0.0, 2.0), label(1, 0.3, 0.7), label(-2, 1.5, -0.5)] {
            for a in [1, -1] {
                let [low, high] = js_reduced_elements(&l, a, h(10)).unwrap();
                let t = csqrt(c_real(l.lambda_t()) + l.rho * a as f64);
                assert!(low.scatter < 1e-10 && high.scatter < 1e-10, "{low:?} {high:?}");
                assert!((low.value - t).norm() < 1e-10, "{l:?} A={a}: {} vs {t}", low.value);
                assert!((high.value - t).norm() < 1e-10, "{l:?} A={a}: {} vs {t}", high.value);
            }
        }
    }

    #[test]
    fn js_degenerate_normalisation() {
        let l = label(1, 0.5, 0.0);
        assert!(matches!(js_operators(&l, -1, h(6)), Err(Error::DegenerateNormalisation)));
        assert!(matches!(js_operators(&l, 1, h(6)), Err(Error::DegenerateNormalisation)));
    }
}
