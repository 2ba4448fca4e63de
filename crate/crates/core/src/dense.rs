//! Small dense complex matrices: rank, inverse and an eigenvalue oracle.
//!
//! Nothing here is tuned for size; blocks handled by the crate have a few
//! dozen rows at most.

use std::ops::{Index, IndexMut};

use num_traits::Zero;

use crate::error::{domain, Error, Result};
use crate::scalar::{c_real, cabs, csqrt, Real, C};

#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> Index<(usize, usize)> for Dense<T> {
    type Output = C<T>;
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Dense<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        &mut self.data[r * self.cols + c]
    }
}

/// Unitary rotation `[[c, s], [-conj(s), c]]` sending `(x, y)` to `(r, 0)`.
#[derive(Clone, Copy)]
struct Givens<T: Real> {
    c: T,
    s: C<T>,
}

impl<T: Real> Givens<T> {
    fn zeroing(x: C<T>, y: C<T>) -> Self {
        let ax = cabs(x);
        let r = ax.hypot(cabs(y));
        if r == T::zero() {
            return Givens { c: T::one(), s: C::zero() };
        }
        if ax == T::zero() {
            return Givens { c: T::zero(), s: c_real(T::one()) };
        }
        Givens { c: ax / r, s: (x / c_real(ax)) * y.conj() / c_real(r) }
    }

    fn apply(&self, x: C<T>, y: C<T>) -> (C<T>, C<T>) {
        (x * self.c + self.s * y, -self.s.conj() * x + y * self.c)
    }

    /// `(x, y) G^H` for a row vector.
    fn apply_right(&self, x: C<T>, y: C<T>) -> (C<T>, C<T>) {
        (x * self.c + y * self.s.conj(), -x * self.s + y * self.c)
    }
}

impl<T: Real> Dense<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c_real(T::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<C<T>>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return domain("ragged rows");
        }
        Ok(Dense { rows: r, cols: c, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, r: usize) -> &[C<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C<T>> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| cabs(*z)).fold(T::zero(), T::max)
    }

    pub fn trace(&self) -> C<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).fold(C::zero(), |a, b| a + b)
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Incompatible(format!("{}x{} times {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(x.len(), self.cols, "vector length");
        (0..self.rows).map(|r| self.row(r).iter().zip(x).fold(C::zero(), |acc, (a, b)| acc + *a * *b)).collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape");
        Dense { rows: self.rows, cols: self.cols, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    /// `self - k I`.
    pub fn shifted(&self, k: C<T>) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows.min(self.cols) {
            m[(i, i)] -= k;
        }
        m
    }

    /// Numerical rank by row reduction with partial pivoting; a column whose
    /// best pivot is below `rel_tol * max|entry|` counts as dependent.
    pub fn rank(&self, rel_tol: T) -> usize {
        let scale = self.max_abs();
        if scale == T::zero() {
            return 0;
        }
        let thresh = rel_tol * scale;
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let (p, best) = (rank..self.rows)
                .map(|r| (r, cabs(m[(r, c)])))
                .fold((rank, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best < thresh {
                continue;
            }
            m.swap_rows(rank, p);
            let piv = m[(rank, c)];
            for r in rank + 1..self.rows {
                let f = m[(r, c)] / piv;
                if f.is_zero() {
                    continue;
                }
                for cc in c..self.cols {
                    let v = m[(rank, cc)];
                    m[(r, cc)] -= f * v;
                }
            }
            rank += 1;
        }
        rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for c in 0..self.cols {
                self.data.swap(a * self.cols + c, b * self.cols + c);
            }
        }
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return domain("inverse of a non-square matrix");
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let tiny = T::epsilon() * self.max_abs();
        for c in 0..n {
            let (p, best) =
                (c..n).map(|r| (r, cabs(a[(r, c)]))).fold((c, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= tiny {
                return Err(Error::Singular);
            }
            a.swap_rows(c, p);
            inv.swap_rows(c, p);
            let piv = a[(c, c)];
            for k in 0..n {
                a[(c, k)] /= piv;
                inv[(c, k)] /= piv;
            }
            for r in 0..n {
                if r == c {
                    continue;
                }
                let f = a[(r, c)];
                if f.is_zero() {
                    continue;
                }
                for k in 0..n {
                    let (x, y) = (a[(c, k)], inv[(c, k)]);
                    a[(r, k)] -= f * x;
                    inv[(r, k)] -= f * y;
                }
            }
        }
        Ok(inv)
    }

    /// Unitary reduction to upper Hessenberg form.
    pub fn hessenberg(&self) -> Result<Self> {
        if !self.is_square() {
            return domain("Hessenberg form of a non-square matrix");
        }
        let n = self.rows;
        let mut h = self.clone();
        for k in 0..n.saturating_sub(2) {
            for i in (k + 2..n).rev() {
                let g = Givens::zeroing(h[(i - 1, k)], h[(i, k)]);
                for c in 0..n {
                    let (x, y) = g.apply(h[(i - 1, c)], h[(i, c)]);
                    h[(i - 1, c)] = x;
                    h[(i, c)] = y;
                }
                for r in 0..n {
                    let (x, y) = g.apply_right(h[(r, i - 1)], h[(r, i)]);
                    h[(r, i - 1)] = x;
                    h[(r, i)] = y;
                }
                h[(i, k)] = C::zero();
            }
        }
        Ok(h)
    }

    /// All eigenvalues (with algebraic multiplicity): Hessenberg reduction,
    /// then single-shift QR with deflation. The first ten sweeps are
    /// unshifted, Wilkinson shifts afterwards; at most `100 n` sweeps.
    pub fn eigenvalues(&self) -> Result<Vec<C<T>>> {
        let mut h = self.hessenberg()?;
        let n = h.rows;
        let mut eig = vec![C::zero(); n];
        if n == 0 {
            return Ok(eig);
        }
        let cap = 100 * n;
        let eps = T::epsilon();
        let mut sweeps = 0usize;
        let mut stuck = 0usize;
        let mut hi = n - 1;
        let mut rots: Vec<Givens<T>> = Vec::with_capacity(n);
        while hi > 0 {
            let mut l = hi;
            while l > 0 {
                let s = cabs(h[(l - 1, l - 1)]) + cabs(h[(l, l)]);
                let s = if s == T::zero() { h.max_abs() } else { s };
                if cabs(h[(l, l - 1)]) <= eps * s {
                    h[(l, l - 1)] = C::zero();
                    break;
                }
                l -= 1;
            }
            if l == hi {
                eig[hi] = h[(hi, hi)];
                hi -= 1;
                stuck = 0;
                continue;
            }
            if sweeps >= cap {
                return Err(Error::NoConvergence { iterations: sweeps });
            }
            sweeps += 1;
            stuck += 1;
            let mu = if sweeps <= 10 {
                C::zero()
            } else if stuck % 11 == 10 {
                // exceptional shift against cycling
                h[(hi, hi)] + c_real(T::lit(0.75) * cabs(h[(hi, hi - 1)]))
            } else {
                wilkinson(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
            };
            rots.clear();
            for k in l..=hi {
                h[(k, k)] -= mu;
            }
            for k in l..hi {
                let g = Givens::zeroing(h[(k, k)], h[(k + 1, k)]);
                for c in k..=hi {
                    let (x, y) = g.apply(h[(k, c)], h[(k + 1, c)]);
                    h[(k, c)] = x;
                    h[(k + 1, c)] = y;
                }
                h[(k + 1, k)] = C::zero();
                rots.push(g);
            }
            for (off, g) in rots.iter().enumerate() {
                let k = l + off;
                for r in l..=(k + 1).min(hi) {
                    let (x, y) = g.apply_right(h[(r, k)], h[(r, k + 1)]);
                    h[(r, k)] = x;
                    h[(r, k + 1)] = y;
                }
            }
            for k in l..=hi {
                h[(k, k)] += mu;
            }
        }
        eig[0] = h[(0, 0)];
        Ok(eig)
    }
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> C<T> {
    let half = c_real(T::lit(0.5));
    let m = (a + d) * half;
    let disc = csqrt(((a - d) * half) * ((a - d) * half) + b * c);
    let (e1, e2) = (m + disc, m - disc);
    if cabs(e1 - d) <= cabs(e2 - d) {
        e1
    } else {
        e2
    }
}

/// Pairs every `expected` value with a distinct `found` value greedily by
/// distance; returns the largest pairing distance.
pub fn multiset_distance<T: Real>(expected: &[C<T>], found: &[C<T>]) -> Option<T> {
    if expected.len() != found.len() {
        return None;
    }
    let mut used = vec![false; found.len()];
    let mut worst = T::zero();
    for e in expected {
        let (k, d) = found
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, f)| (i, cabs(*f - *e)))
            .fold((usize::MAX, T::infinity()), |acc, x| if x.1 < acc.1 { x } else { acc });
        used[k] = true;
        worst = worst.max(d);
    }
    Some(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn m(rows: &[&[(f64, f64)]]) -> Dense<f64> {
        Dense::from_rows(rows.iter().map(|r| r.iter().map(|&(a, b)| c(a, b)).collect()).collect()).unwrap()
    }

    #[test]
    fn inverse_round_trip() {
        let a = m(&[&[(1.0, 1.0), (2.0, 0.0), (0.0, 0.0)], &[(0.0, -1.0), (3.0, 0.5), (1.0, 0.0)], &[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]]);
        let inv = a.inverse().unwrap();
        let id = a.matmul(&inv).unwrap();
        assert!(id.sub(&Dense::identity(3)).max_abs() < 1e-14);
        let sing = m(&[&[(1.0, 0.0), (2.0, 0.0)], &[(2.0, 0.0), (4.0, 0.0)]]);
        assert_eq!(sing.inverse(), Err(Error::Singular));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Dense::<f64>::identity(4).rank(1e-8), 4);
        let j = m(&[&[(0.0, 0.0), (1.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0)]]);
        assert_eq!(j.rank(1e-8), 1);
        assert_eq!(Dense::<f64>::zeros(3, 3).rank(1e-8), 0);
    }

    #[test]
    fn eigenvalues_of_general_matrix() {
        // upper triangular: eigenvalues on the diagonal, after a similarity
        let t = m(&[&[(1.0, 0.0), (2.0, 1.0), (3.0, 0.0)], &[(0.0, 0.0), (-2.0, 1.0), (1.0, 0.0)], &[(0.0, 0.0), (0.0, 0.0), (0.5, -0.5)]]);
        let s = m(&[&[(1.0, 0.0), (0.0, 1.0), (0.0, 0.0)], &[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]]);
        let a = s.matmul(&t).unwrap().matmul(&s.inverse().unwrap()).unwrap();
        let ev = a.eigenvalues().unwrap();
        let d = multiset_distance(&[c(1.0, 0.0), c(-2.0, 1.0), c(0.5, -0.5)], &ev).unwrap();
        assert!(d < 1e-10, "{ev:?}");
    }

    #[test]
    fn eigenvalues_of_rotation_need_shifts() {
        let a = m(&[&[(0.0, 0.0), (-1.0, 0.0)], &[(1.0, 0.0), (0.0, 0.0)]]);
        let ev = a.eigenvalues().unwrap();
        assert!(multiset_distance(&[c(0.0, 1.0), c(0.0, -1.0)], &ev).unwrap() < 1e-12);
    }

    #[test]
    fn hessenberg_preserves_trace() {
        let a = m(&[
            &[(1.0, 0.0), (2.0, 0.0), (3.0, 1.0), (0.0, 1.0)],
            &[(4.0, 0.0), (5.0, 0.0), (6.0, 0.0), (1.0, 0.0)],
            &[(7.0, 0.0), (8.0, 1.0), (0.0, 0.0), (2.0, 0.0)],
            &[(1.0, 1.0), (0.0, 0.0), (1.0, 0.0), (3.0, 0.0)],
        ]);
        let h = a.hessenberg().unwrap();
        assert!((h.trace() - a.trace()).norm() < 1e-12);
        for r in 2..4 {
            for c in 0..r - 1 {
                assert_eq!(h[(r, c)], Complex::new(0.0, 0.0));
            }
        }
    }
}
