//! Couplings `(gamma_1, gamma_2) (x) V_{lambda,rho}`, realised as
//! `F^-_{gamma_1} (x) (F^+_{gamma_2} (x) V_{lambda,rho})` and decomposed in
//! two stages. The intermediate pair `alpha` labels the multiplicity.

use crate::coupling::{
    decompose, decomposable, ket_norm, project, CgTable, CouplingProblem, EigenPair, Ket, ProductSpace, ProductState,
};
use crate::dense::{multiset_distance, Dense};
use crate::error::{domain, Error, Result};
use crate::half::{jset_upto, mrange, omega_set, steps, HalfInt};
use crate::repr::{require_infinite, FiniteLabel, IrrepLabel};
use crate::scalar::{c_real, tol_for, Real, C};
use crate::su2::cg;

use num_traits::Zero;

/// One output pair `(lambda + nu_1 + nu_2, rho - nu_1 + nu_2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompositePair<T: Real> {
    pub nu1: HalfInt,
    pub nu2: HalfInt,
    pub lambda: HalfInt,
    pub p: C<T>,
}

impl<T: Real> CompositePair<T> {
    pub fn label(&self) -> IrrepLabel<T> {
        IrrepLabel { lambda: self.lambda, rho: self.p }
    }
}

#[derive(Clone, Debug)]
pub struct GeneralCoupling<T: Real> {
    pub decomposable: bool,
    pub pairs: Vec<CompositePair<T>>,
}

impl<T: Real> GeneralCoupling<T> {
    /// Distinct isomorphism classes with their multiplicities, in order of
    /// first appearance.
    pub fn multiplicities(&self, tol: T) -> Vec<(IrrepLabel<T>, usize)> {
        let mut out: Vec<(IrrepLabel<T>, usize)> = Vec::new();
        for p in &self.pairs {
            let l = p.label();
            match out.iter_mut().find(|(x, _)| x.equivalent(&l, tol)) {
                Some((_, n)) => *n += 1,
                None => out.push((l.canonical(), 1)),
            }
        }
        out
    }
}

fn check_gammas(g1: HalfInt, g2: HalfInt) -> Result<()> {
    for g in [g1, g2] {
        if g.twice() < 1 {
            return domain(format!("gamma = {g} must be at least 1/2"));
        }
    }
    Ok(())
}

pub fn general_coupling<T: Real>(g1: HalfInt, g2: HalfInt, label: &IrrepLabel<T>) -> Result<GeneralCoupling<T>> {
    check_gammas(g1, g2)?;
    require_infinite(label)?;
    let ok = decomposable(FiniteLabel::new(g1, -1)?, label) && decomposable(FiniteLabel::new(g2, 1)?, label);
    let mut pairs = Vec::new();
    for nu2 in mrange(g2)? {
        for nu1 in mrange(g1)? {
            pairs.push(CompositePair {
                nu1,
                nu2,
                lambda: label.lambda + nu1 + nu2,
                p: label.rho + c_real(T::from_half(nu2 - nu1)),
            });
        }
    }
    Ok(GeneralCoupling { decomposable: ok, pairs })
}

/// One composed column over the `|(j, j') J>` basis.
#[derive(Clone, Debug)]
pub struct CompositeColumn<T: Real> {
    /// Intermediate pair of `F^+_{gamma_2} (x) V`.
    pub alpha: EigenPair<T>,
    /// Final pair, `nu` being `nu_1`.
    pub pair: EigenPair<T>,
    pub coeffs: Vec<C<T>>,
}

#[derive(Clone, Debug)]
pub struct CompositeBlock<T: Real> {
    pub j_total: HalfInt,
    /// `(j, j')`: `j` the K-type of `V`, `j'` the intermediate spin.
    pub basis: Vec<(HalfInt, HalfInt)>,
    pub columns: Vec<CompositeColumn<T>>,
}

#[derive(Clone, Debug)]
pub struct CompositeTable<T: Real> {
    pub gammas: (HalfInt, HalfInt),
    pub label: IrrepLabel<T>,
    pub stage1: CgTable<T>,
    pub stage2: Vec<CgTable<T>>,
    pub blocks: Vec<CompositeBlock<T>>,
}

fn largest_admissible(lambda: HalfInt, gamma: HalfInt, upto: HalfInt) -> Result<Option<HalfInt>> {
    Ok(jset_upto(lambda, gamma, upto)?.last().copied())
}

/// Composed coefficients
/// `A{gamma_1; j' | (Lambda,P) J} * A{gamma_2; j | alpha j'}` for every
/// admissible `J <= j_max`.
pub fn two_stage_cg<T: Real>(g1: HalfInt, g2: HalfInt, label: &IrrepLabel<T>, j_max: HalfInt) -> Result<CompositeTable<T>> {
    let gc = general_coupling(g1, g2, label)?;
    let first = CouplingProblem::new(FiniteLabel::new(g2, 1)?, *label)?;
    if !gc.decomposable {
        // report through whichever stage fails
        let second = CouplingProblem::new(FiniteLabel::new(g1, -1)?, *label)?;
        return Err(decompose(&first, HalfInt::ZERO).err().filter(|e| matches!(e, Error::NotDecomposable { .. })).unwrap_or_else(|| {
            decompose(&second, HalfInt::ZERO).err().unwrap_or_else(|| Error::Consistency("stage criteria disagree".into()))
        }));
    }
    let inner_max = largest_admissible(label.lambda, g2, j_max + g1)?
        .ok_or_else(|| Error::Domain(format!("no admissible intermediate spin up to {}", j_max + g1)))?;
    let stage1 = decompose(&first, inner_max)?;

    let mut stage2 = Vec::new();
    for nu2 in mrange(g2)? {
        let alpha = crate::coupling::pair_for(&first, nu2);
        let problem = CouplingProblem::new(FiniteLabel::new(g1, -1)?, alpha.label())?;
        if let Some(top) = largest_admissible(alpha.lambda, g1, j_max)? {
            stage2.push((alpha, decompose(&problem, top)?));
        }
    }

    let mut totals: Vec<HalfInt> = stage2.iter().flat_map(|(_, t)| t.blocks.iter().map(|b| b.j_total)).collect();
    totals.sort();
    totals.dedup();

    let blocks = totals
        .into_iter()
        .map(|big_j| {
            let basis = composite_basis(label.lambda, g1, g2, big_j)?;
            let mut columns = Vec::new();
            for (alpha, table) in &stage2 {
                let Some(block) = table.block(big_j) else { continue };
                for pair in &block.pairs {
                    let coeffs = basis
                        .iter()
                        .map(|&(j, jp)| block.a_coeff(jp, pair.nu) * stage1.a(j, alpha.nu, jp))
                        .collect();
                    columns.push(CompositeColumn { alpha: *alpha, pair: *pair, coeffs });
                }
            }
            Ok(CompositeBlock { j_total: big_j, basis, columns })
        })
        .collect::<Result<_>>()?;

    Ok(CompositeTable {
        gammas: (g1, g2),
        label: *label,
        stage1,
        stage2: stage2.into_iter().map(|(_, t)| t).collect(),
        blocks,
    })
}

/// `(j, j')` spanning `V^J_J` of the triple product, ascending in `j'` then `j`.
pub fn composite_basis(lambda: HalfInt, g1: HalfInt, g2: HalfInt, big_j: HalfInt) -> Result<Vec<(HalfInt, HalfInt)>> {
    let lo = (big_j - g1).abs();
    let mut out = Vec::new();
    for jp in steps(lo, big_j + g1) {
        if !crate::half::in_jset(lambda, g2, jp)? {
            continue;
        }
        for j in omega_set(lambda, g2, jp)? {
            out.push((j, jp));
        }
    }
    Ok(out)
}

fn composite_vector<T: Real>(g1: HalfInt, g2: HalfInt, j: HalfInt, jp: HalfInt, big_j: HalfInt, big_m: HalfInt) -> Ket<T> {
    let mut ket = Ket::new();
    for mu1 in mrange(g1).expect("gamma >= 0") {
        let mp = big_m - mu1;
        if mp.abs() > jp {
            continue;
        }
        let outer: T = cg(g1, mu1, jp, mp, big_j, big_m);
        if outer == T::zero() {
            continue;
        }
        for mu2 in mrange(g2).expect("gamma >= 0") {
            let m = mp - mu2;
            if m.abs() > j {
                continue;
            }
            let inner: T = cg(g2, mu2, j, m, jp, mp);
            let v = c_real(outer * inner);
            if !v.is_zero() {
                *ket.entry(ProductState { mus: vec![mu1, mu2], j, m }).or_insert_with(C::zero) += v;
            }
        }
    }
    ket
}

/// Casimir matrices of the triple product on `V^J_J`, built from the total
/// generators, over [`composite_basis`].
pub fn composite_casimirs<T: Real>(g1: HalfInt, g2: HalfInt, label: &IrrepLabel<T>, big_j: HalfInt) -> Result<(Dense<T>, Dense<T>, T)> {
    check_gammas(g1, g2)?;
    let basis = composite_basis(label.lambda, g1, g2, big_j)?;
    let kets: Vec<Ket<T>> = basis.iter().map(|&(j, jp)| composite_vector(g1, g2, j, jp, big_j, big_j)).collect();
    for k in &kets {
        if (ket_norm(k) - T::one()).abs() > tol_for::<T>(1e-10) {
            return Err(Error::Consistency("coupled triple-product vector is not normalised".into()));
        }
    }
    let space = ProductSpace { finite: vec![FiniteLabel::new(g1, -1)?, FiniteLabel::new(g2, 1)?], infinite: *label };
    let (c1, l1) = project(&kets, &kets, |v| space.casimir1(v));
    let (c2, l2) = project(&kets, &kets, |v| space.casimir2(v));
    Ok((c1, c2, l1.max(l2)))
}

#[derive(Clone, Copy, Debug)]
pub struct CompositeCheck<T: Real> {
    /// Largest relative eigen-residual over columns and both Casimirs.
    pub residual: T,
    /// Distance between the oracle spectrum of `C_1` and `{i Lambda P}`.
    pub spectrum: T,
    /// Largest `|sum_k v_k^2 - 1|` over columns.
    pub normalisation: T,
    pub dimension_ok: bool,
}

/// Verifies a composed block against the triple-product Casimirs.
pub fn check_composite_block<T: Real>(table: &CompositeTable<T>, block: &CompositeBlock<T>) -> Result<CompositeCheck<T>> {
    let (g1, g2) = table.gammas;
    let (c1, c2, _) = composite_casimirs(g1, g2, &table.label, block.j_total)?;
    let scale1 = T::one().max(c1.max_abs());
    let scale2 = T::one().max(c2.max_abs());
    let mut residual = T::zero();
    let mut normalisation = T::zero();
    let mut expected = Vec::new();
    for col in &block.columns {
        let (k1, k2) = col.pair.casimirs();
        let n = crate::tridiag::norm(&col.coeffs);
        for (m, k, s) in [(&c1, k1, scale1), (&c2, k2, scale2)] {
            let r: Vec<C<T>> = m.mul_vec(&col.coeffs).iter().zip(&col.coeffs).map(|(a, b)| a - k * b).collect();
            residual = residual.max(crate::tridiag::norm(&r) / (n * s));
        }
        let sq = col.coeffs.iter().fold(C::<T>::zero(), |a, v| a + v * v);
        normalisation = normalisation.max((sq - c_real(T::one())).norm());
        expected.push(k1);
    }
    let found = c1.eigenvalues()?;
    let spectrum = multiset_distance(&expected, &found).unwrap_or(T::infinity());
    Ok(CompositeCheck { residual, spectrum, normalisation, dimension_ok: block.columns.len() == block.basis.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    #[test]
    fn general_coupling_examples() {
        let l = IrrepLabel::new(h(2), Complex::new(0.0, 0.0)).unwrap();
        let gc = general_coupling(h(2), h(2), &l).unwrap();
        assert_eq!(gc.pairs.len(), 9);
        // (1, 0) and (-1, 0) are the same class
        let mult = gc.multiplicities(1e-12);
        let one = mult.iter().find(|(x, _)| x.lambda == h(2) && x.rho.norm() < 1e-12).unwrap();
        assert!(one.1 >= 2);

        let l = IrrepLabel::new(h(0), Complex::new(0.0, 2.0)).unwrap();
        let gc = general_coupling(h(1), h(1), &l).unwrap();
        assert!(gc.decomposable);
        assert_eq!(gc.multiplicities(1e-12).len(), 4);

        // rho - lambda = 0 in (-1, 1), rho + lambda = 1 outside (-1, 1)
        let l = IrrepLabel::new(h(1), Complex::new(0.5, 0.0)).unwrap();
        assert!(!general_coupling(h(1), h(1), &l).unwrap().decomposable);
        assert!(general_coupling(h(0), h(1), &l).is_err());
    }

    #[test]
    fn two_stage_reproduces_triple_product_spectrum() {
        let l = IrrepLabel::new(h(0), Complex::new(0.0, 2.0)).unwrap();
        let t = two_stage_cg(h(1), h(1), &l, h(6)).unwrap();
        assert!(!t.blocks.is_empty());
        for b in &t.blocks {
            let c = check_composite_block(&t, b).unwrap();
            assert!(c.dimension_ok, "J={}", b.j_total);
            assert!(c.residual < 1e-9, "J={} residual {}", b.j_total, c.residual);
            assert!(c.spectrum < 1e-8, "J={} spectrum {}", b.j_total, c.spectrum);
            assert!(c.normalisation < 1e-10);
        }
    }
}
