//! Sparse complex operators between truncated `(j, m)` bases.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::half::HalfInt;
use crate::scalar::{cabs, to_c64, Real, C};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub struct State {
    pub j: HalfInt,
    pub m: HalfInt,
}

impl State {
    pub const fn new(j: HalfInt, m: HalfInt) -> Self {
        State { j, m }
    }
}

/// Ordered list of basis states with reverse lookup.
#[derive(Debug)]
pub struct Basis {
    states: Vec<State>,
    index: HashMap<State, usize>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.states == other.states
    }
}

impl Basis {
    pub fn new(states: Vec<State>) -> Self {
        let index = states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        Basis { states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, i: usize) -> State {
        self.states[i]
    }

    pub fn index_of(&self, s: State) -> Option<usize> {
        self.index.get(&s).copied()
    }
}

fn same_basis(a: &Arc<Basis>, b: &Arc<Basis>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Complex matrix stored column by column; zero entries are never stored.
#[derive(Clone, Debug)]
pub struct SparseOperator<T: Real> {
    rows: Arc<Basis>,
    cols: Arc<Basis>,
    columns: Vec<Vec<(usize, C<T>)>>,
}

impl<T: Real> SparseOperator<T> {
    pub fn zeros(rows: Arc<Basis>, cols: Arc<Basis>) -> Self {
        let columns = vec![Vec::new(); cols.len()];
        SparseOperator { rows, cols, columns }
    }

    pub fn identity(basis: Arc<Basis>) -> Self {
        let columns = (0..basis.len()).map(|i| vec![(i, Complex::new(T::one(), T::zero()))]).collect();
        SparseOperator { rows: basis.clone(), cols: basis, columns }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: Arc<Basis>, cols: Arc<Basis>, triplets: impl IntoIterator<Item = (usize, usize, C<T>)>) -> Self {
        let mut acc: Vec<HashMap<usize, C<T>>> = vec![HashMap::new(); cols.len()];
        for (r, c, v) in triplets {
            assert!(r < rows.len() && c < cols.len(), "entry ({r}, {c}) outside basis bounds");
            *acc[c].entry(r).or_insert_with(C::zero) += v;
        }
        let columns = acc
            .into_iter()
            .map(|m| {
                let mut col: Vec<_> = m.into_iter().filter(|(_, v)| !v.is_zero()).collect();
                col.sort_by_key(|&(r, _)| r);
                col
            })
            .collect();
        SparseOperator { rows, cols, columns }
    }

    pub fn rows(&self) -> &Arc<Basis> {
        &self.rows
    }

    pub fn cols(&self) -> &Arc<Basis> {
        &self.cols
    }

    pub fn column(&self, c: usize) -> &[(usize, C<T>)] {
        &self.columns[c]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> C<T> {
        match self.columns[c].binary_search_by_key(&r, |&(row, _)| row) {
            Ok(i) => self.columns[c][i].1,
            Err(_) => C::zero(),
        }
    }

    /// `<row|X|col>` by state labels; zero when either state is outside the basis.
    pub fn element(&self, row: State, col: State) -> C<T> {
        match (self.rows.index_of(row), self.cols.index_of(col)) {
            (Some(r), Some(c)) => self.get(r, c),
            _ => C::zero(),
        }
    }

    /// Iterates `(row, col, value)` in column-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C<T>)> + '_ {
        self.columns.iter().enumerate().flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v)))
    }

    pub fn max_abs(&self) -> T {
        self.entries().map(|(_, _, v)| cabs(v)).fold(T::zero(), T::max)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let columns = self
            .columns
            .iter()
            .map(|col| col.iter().map(|&(r, v)| (r, v * s)).filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        SparseOperator { rows: self.rows.clone(), cols: self.cols.clone(), columns }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if !same_basis(&self.rows, &other.rows) || !same_basis(&self.cols, &other.cols) {
            return Err(Error::Incompatible("operands act between different bases".into()));
        }
        Ok(())
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: C<T>, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        let triplets = self.entries().chain(other.entries().map(|(r, c, v)| (r, c, v * s)));
        Ok(Self::from_triplets(self.rows.clone(), self.cols.clone(), triplets))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(C::new(T::one(), T::zero()), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(C::new(-T::one(), T::zero()), other)
    }

    /// Operator product `self * other` (apply `other` first).
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if !same_basis(&self.cols, &other.rows) {
            return Err(Error::Incompatible("inner bases of a product differ".into()));
        }
        let mut columns = Vec::with_capacity(other.cols.len());
        let mut acc: HashMap<usize, C<T>> = HashMap::new();
        for col in &other.columns {
            acc.clear();
            for &(k, b) in col {
                for &(r, a) in &self.columns[k] {
                    *acc.entry(r).or_insert_with(C::zero) += a * b;
                }
            }
            let mut out: Vec<_> = acc.iter().map(|(&r, &v)| (r, v)).filter(|(_, v)| !v.is_zero()).collect();
            out.sort_by_key(|&(r, _)| r);
            columns.push(out);
        }
        Ok(SparseOperator { rows: self.rows.clone(), cols: other.cols.clone(), columns })
    }

    /// `[self, other]` for two operators on the same basis.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// Conjugate transpose; rows and columns swap roles.
    pub fn adjoint(&self) -> Self {
        let triplets = self.entries().map(|(r, c, v)| (c, r, v.conj()));
        Self::from_triplets(self.cols.clone(), self.rows.clone(), triplets)
    }

    /// Re-indexes onto new bases by state label; entries whose states are
    /// missing from the new bases are dropped.
    pub fn restrict(&self, rows: Arc<Basis>, cols: Arc<Basis>) -> Self {
        let triplets: Vec<_> = self
            .entries()
            .filter_map(|(r, c, v)| {
                let r2 = rows.index_of(self.rows.state(r))?;
                let c2 = cols.index_of(self.cols.state(c))?;
                Some((r2, c2, v))
            })
            .collect();
        Self::from_triplets(rows, cols, triplets)
    }

    /// Largest `|self - other|` entry among columns selected by `keep`.
    pub fn max_diff_on_columns(&self, other: &Self, keep: impl Fn(State) -> bool) -> Result<T> {
        let d = self.sub(other)?;
        Ok(d.max_abs_on_columns(keep))
    }

    pub fn max_abs_on_columns(&self, keep: impl Fn(State) -> bool) -> T {
        self.entries()
            .filter(|&(_, c, _)| keep(self.cols.state(c)))
            .map(|(_, _, v)| cabs(v))
            .fold(T::zero(), T::max)
    }

    pub fn to_json(&self) -> OperatorJson {
        let basis = |b: &Basis| b.states().iter().map(|s| [s.j.twice(), s.m.twice()]).collect::<Vec<_>>();
        let entries = self
            .entries()
            .map(|(r, c, v)| {
                let v = to_c64(v);
                (r, c, [v.re, v.im])
            })
            .collect();
        if same_basis(&self.rows, &self.cols) {
            OperatorJson { basis: Some(basis(&self.rows)), row_basis: None, col_basis: None, entries }
        } else {
            OperatorJson { basis: None, row_basis: Some(basis(&self.rows)), col_basis: Some(basis(&self.cols)), entries }
        }
    }
}

/// Wire form: states as `[j_x2, m_x2]`, entries as `[row, col, [re, im]]`.
#[derive(Debug, Clone, Serialize)]
pub struct OperatorJson {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<Vec<[i32; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row_basis: Option<Vec<[i32; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub col_basis: Option<Vec<[i32; 2]>>,
    pub entries: Vec<(usize, usize, [f64; 2])>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(n: i32) -> Arc<Basis> {
        Arc::new(Basis::new((0..n).map(|k| State::new(HalfInt::from_int(k), HalfInt::ZERO)).collect()))
    }

    fn c(re: f64, im: f64) -> C<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn zeros_are_not_stored() {
        let b = basis(3);
        let op = SparseOperator::from_triplets(b.clone(), b, vec![(0, 0, c(1.0, 0.0)), (0, 0, c(-1.0, 0.0)), (1, 2, c(0.0, 2.0))]);
        assert_eq!(op.nnz(), 1);
        assert_eq!(op.get(1, 2), c(0.0, 2.0));
        assert_eq!(op.get(0, 0), c(0.0, 0.0));
    }

    #[test]
    fn product_and_commutator() {
        let b = basis(2);
        // Pauli x and z
        let x = SparseOperator::from_triplets(b.clone(), b.clone(), vec![(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))]);
        let z = SparseOperator::from_triplets(b.clone(), b.clone(), vec![(0, 0, c(1.0, 0.0)), (1, 1, c(-1.0, 0.0))]);
        let xz = x.matmul(&z).unwrap();
        assert_eq!(xz.get(0, 1), c(-1.0, 0.0));
        assert_eq!(xz.get(1, 0), c(1.0, 0.0));
        let comm = z.commutator(&x).unwrap();
        // [z, x] = 2 i y
        assert_eq!(comm.get(0, 1), c(2.0, 0.0));
        assert_eq!(comm.get(1, 0), c(-2.0, 0.0));
        let id = SparseOperator::identity(b);
        assert_eq!(x.matmul(&x).unwrap().sub(&id).unwrap().nnz(), 0);
    }

    #[test]
    fn mismatched_bases_are_rejected() {
        let a = SparseOperator::<f64>::identity(basis(2));
        let b = SparseOperator::<f64>::identity(basis(3));
        assert!(a.matmul(&b).is_err());
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn adjoint_swaps_and_conjugates() {
        let b = basis(2);
        let op = SparseOperator::from_triplets(b.clone(), b, vec![(0, 1, c(1.0, 2.0))]);
        let adj = op.adjoint();
        assert_eq!(adj.get(1, 0), c(1.0, -2.0));
        assert_eq!(adj.get(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn json_layout() {
        let b = basis(2);
        let op = SparseOperator::from_triplets(b.clone(), b, vec![(1, 0, c(0.5, -1.0))]);
        let s = serde_json::to_string(&op.to_json()).unwrap();
        assert_eq!(s, r#"{"basis":[[0,0],[2,0]],"entries":[[1,0,[0.5,-1.0]]]}"#);
    }
}
