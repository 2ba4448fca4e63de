//! Complex tridiagonal matrices: eigenvectors by three-term recurrence,
//! geometric multiplicities and a dense eigenvalue oracle.
//!
//! Row `i` reads `a_i x_{i-1} + b_i x_i + c_i x_{i+1}`. When every `c_i` is
//! nonzero the first `n-1` rows determine `x` from `x_1` alone, so each
//! eigenspace is one-dimensional.

use num_traits::Zero;

use crate::dense::Dense;
use crate::error::{domain, Error, Result};
use crate::scalar::{c_real, cabs, tol_for, Real, C};

/// Largest size accepted by [`dense_eig_oracle`].
pub const ORACLE_MAX: usize = 64;

/// Pivot threshold (relative to the largest entry) for rank decisions.
pub const RANK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal<T: Real> {
    sub: Vec<C<T>>,
    diag: Vec<C<T>>,
    sup: Vec<C<T>>,
}

impl<T: Real> Tridiagonal<T> {
    /// `sub = (a_2..a_n)`, `diag = (b_1..b_n)`, `sup = (c_1..c_{n-1})`.
    pub fn new(sub: Vec<C<T>>, diag: Vec<C<T>>, sup: Vec<C<T>>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return domain("empty tridiagonal matrix");
        }
        if sub.len() != n - 1 || sup.len() != n - 1 {
            return domain(format!("off-diagonal lengths {} and {} do not match n = {n}", sub.len(), sup.len()));
        }
        Ok(Tridiagonal { sub, diag, sup })
    }

    /// Reads the three bands of a square dense matrix, ignoring anything else.
    pub fn from_dense(m: &Dense<T>) -> Result<Self> {
        if !m.is_square() {
            return domain("non-square matrix");
        }
        let n = m.rows();
        Self::new((1..n).map(|i| m[(i, i - 1)]).collect(), (0..n).map(|i| m[(i, i)]).collect(), (0..n.saturating_sub(1)).map(|i| m[(i, i + 1)]).collect())
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn sub(&self) -> &[C<T>] {
        &self.sub
    }

    pub fn diag(&self) -> &[C<T>] {
        &self.diag
    }

    pub fn sup(&self) -> &[C<T>] {
        &self.sup
    }

    pub fn to_dense(&self) -> Dense<T> {
        let n = self.n();
        let mut m = Dense::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i + 1, i)] = self.sub[i];
                m[(i, i + 1)] = self.sup[i];
            }
        }
        m
    }

    pub fn apply(&self, x: &[C<T>]) -> Vec<C<T>> {
        let n = self.n();
        assert_eq!(x.len(), n, "vector length");
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.sup[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.sub.iter().chain(&self.diag).chain(&self.sup).map(|z| cabs(*z)).fold(T::zero(), T::max)
    }

    pub fn trace(&self) -> C<T> {
        self.diag.iter().fold(C::zero(), |a, b| a + b)
    }

    /// `||T x - k x|| / ||x||`.
    pub fn residual(&self, x: &[C<T>], k: C<T>) -> T {
        let tx = self.apply(x);
        norm(&tx.iter().zip(x).map(|(a, b)| a - k * b).collect::<Vec<_>>()) / norm(x)
    }
}

pub(crate) fn norm<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt()
}

/// Eigenvector for `k` with `x_1 = 1`, from
/// `x_{i+1} = -(a_i x_{i-1} + (b_i - k) x_i) / c_i`. The last row is the
/// eigenvalue condition; it must hold to `tol * max(1, max|T_ij|)`.
pub fn eigvec_by_recurrence<T: Real>(t: &Tridiagonal<T>, k: C<T>, tol: T) -> Result<Vec<C<T>>> {
    let n = t.n();
    if let Some(i) = t.sup.iter().position(|c| c.is_zero()) {
        return domain(format!("superdiagonal entry c_{} vanishes", i + 1));
    }
    let mut x = Vec::with_capacity(n);
    x.push(c_real(T::one()));
    for i in 0..n - 1 {
        let mut acc = (t.diag[i] - k) * x[i];
        if i > 0 {
            acc += t.sub[i - 1] * x[i - 1];
        }
        x.push(-acc / t.sup[i]);
    }
    let residual = t.residual(&x, k);
    if !(residual <= tol * T::one().max(t.max_abs())) {
        return Err(Error::NotAnEigenvalue {
            k: format!("{k}"),
            residual: residual.to_f64().unwrap_or(f64::NAN),
            tolerance: tol.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(x)
}

/// `n - rank(T - k I)`, rank from partially pivoted elimination.
pub fn geometric_multiplicity<T: Real>(t: &Tridiagonal<T>, k: C<T>) -> usize {
    let m = t.to_dense().shifted(k);
    t.n() - m.rank(tol_for::<T>(RANK_TOL))
}

/// Eigenvalues with algebraic multiplicity via QR iteration on the matrix
/// (already Hessenberg).
pub fn dense_eig_oracle<T: Real>(t: &Tridiagonal<T>) -> Result<Vec<C<T>>> {
    if t.n() > ORACLE_MAX {
        return domain(format!("oracle limited to n <= {ORACLE_MAX}, got {}", t.n()));
    }
    t.to_dense().eigenvalues()
}

/// Number of oracle eigenvalues within `radius` of `k`.
pub fn cluster_size<T: Real>(eigenvalues: &[C<T>], k: C<T>, radius: T) -> usize {
    eigenvalues.iter().filter(|e| cabs(**e - k) <= radius).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::multiset_distance;
    use num_complex::Complex;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    fn swap2() -> Tridiagonal<f64> {
        Tridiagonal::new(vec![c(1.0)], vec![c(0.0), c(0.0)], vec![c(1.0)]).unwrap()
    }

    #[test]
    fn recurrence_examples() {
        let t = Tridiagonal::new(vec![], vec![c(3.0)], vec![]).unwrap();
        assert_eq!(eigvec_by_recurrence(&t, c(3.0), 1e-10).unwrap(), vec![c(1.0)]);
        assert_eq!(eigvec_by_recurrence(&swap2(), c(1.0), 1e-10).unwrap(), vec![c(1.0), c(1.0)]);
        match eigvec_by_recurrence(&swap2(), c(2.0), 1e-10) {
            Err(Error::NotAnEigenvalue { residual, .. }) => assert!(residual > 1.0),
            other => panic!("{other:?}"),
        }
        let z = Tridiagonal::new(vec![c(1.0)], vec![c(0.0), c(0.0)], vec![c(0.0)]).unwrap();
        assert!(matches!(eigvec_by_recurrence(&z, c(0.0), 1e-10), Err(Error::Domain(_))));
    }

    #[test]
    fn multiplicity_examples() {
        let id = Tridiagonal::new(vec![c(0.0); 2], vec![c(1.0); 3], vec![c(0.0); 2]).unwrap();
        assert_eq!(geometric_multiplicity(&id, c(1.0)), 3);
        assert_eq!(geometric_multiplicity(&swap2(), c(1.0)), 1);
        let jordan = Tridiagonal::new(vec![c(0.0)], vec![c(0.0), c(0.0)], vec![c(1.0)]).unwrap();
        let ev = dense_eig_oracle(&jordan).unwrap();
        assert_eq!(ev, vec![c(0.0), c(0.0)]);
        assert_eq!(geometric_multiplicity(&jordan, c(0.0)), 1);
    }

    #[test]
    fn oracle_examples() {
        let d = Tridiagonal::new(vec![c(0.0); 2], vec![c(1.0), c(2.0), c(3.0)], vec![c(0.0); 2]).unwrap();
        let ev = dense_eig_oracle(&d).unwrap();
        assert!(multiset_distance(&[c(1.0), c(2.0), c(3.0)], &ev).unwrap() < 1e-14);
        let ev = dense_eig_oracle(&swap2()).unwrap();
        assert!(multiset_distance(&[c(1.0), c(-1.0)], &ev).unwrap() < 1e-12);
        let big = Tridiagonal::new(vec![c(1.0); 64], vec![c(0.0); 65], vec![c(1.0); 64]).unwrap();
        assert!(dense_eig_oracle(&big).is_err());
    }

    #[test]
    fn free_chain_spectrum() {
        // path graph: 2 cos(k pi / (n+1))
        let n = 12;
        let t = Tridiagonal::new(vec![c(1.0); n - 1], vec![c(0.0); n], vec![c(1.0); n - 1]).unwrap();
        let ev = dense_eig_oracle(&t).unwrap();
        let exact: Vec<_> = (1..=n).map(|k| c(2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())).collect();
        assert!(multiset_distance(&exact, &ev).unwrap() < 1e-12);
        for e in &ev {
            let x = eigvec_by_recurrence(&t, *e, 1e-9).unwrap();
            assert!(t.residual(&x, *e) < 1e-9);
        }
    }

    #[test]
    fn f32_instantiation() {
        let t = Tridiagonal::<f32>::new(vec![Complex::new(1.0, 0.0)], vec![Complex::new(0.0, 0.0); 2], vec![Complex::new(1.0, 0.0)]).unwrap();
        let ev = dense_eig_oracle(&t).unwrap();
        assert!(multiset_distance(&[Complex::new(1.0f32, 0.0), Complex::new(-1.0, 0.0)], &ev).unwrap() < 1e-5);
        assert_eq!(geometric_multiplicity(&t, Complex::new(1.0, 0.0)), 1);
    }
}
