//! Constant-coefficient alternating forms on `R^d`.
//!
//! A form is stored sparsely over sorted [`IndexTuple`]s. Products use the
//! shuffle-sign convention: `dx^I ∧ dx^J = sign · dx^{I∪J}` where `sign` is the
//! parity of the permutation sorting the concatenation `I J`. Contraction
//! follows from it: `e_p ⌟ dx^I = (-1)^r dx^{I \ i_r}` when `p = i_r` is the
//! `r`-th (zero-based) entry of `I`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{Rational, Scalar};
use crate::tuple::IndexTuple;

#[derive(Clone, Debug, PartialEq)]
pub struct AltForm<S: Scalar> {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<IndexTuple, S>,
}

impl<S: Scalar> AltForm<S> {
    pub fn zero(dim: usize, degree: usize) -> Self {
        AltForm { dim, degree, coeffs: BTreeMap::new() }
    }

    /// `dx^tuple` with unit coefficient.
    pub fn basis(dim: usize, tuple: IndexTuple) -> Result<Self> {
        Self::from_terms(dim, tuple.degree(), [(tuple, S::one())])
    }

    pub fn from_terms(
        dim: usize,
        degree: usize,
        terms: impl IntoIterator<Item = (IndexTuple, S)>,
    ) -> Result<Self> {
        let mut f = Self::zero(dim, degree);
        for (t, c) in terms {
            if t.degree() != degree {
                return Err(Error::DegreeMismatch { expected: degree, found: t.degree() });
            }
            if !t.fits(dim) {
                return Err(Error::InvalidTuple { indices: t.indices().to_vec(), dim });
            }
            f.add_term(t, c);
        }
        Ok(f)
    }

    pub(crate) fn add_term(&mut self, t: IndexTuple, c: S) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(t);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let v = o.get().clone() + c;
                if v.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficient(&self, t: &IndexTuple) -> S {
        self.coeffs.get(t).cloned().unwrap_or_else(S::zero)
    }

    /// Nonzero terms in lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&IndexTuple, &S)> {
        self.coeffs.iter()
    }

    pub fn nonzero_count(&self) -> usize {
        self.coeffs.len()
    }

    fn check_same_space(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        let mut out = self.clone();
        for (t, c) in &other.coeffs {
            out.add_term(t.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-S::one()))
    }

    pub fn scale(&self, s: &S) -> Self {
        let mut out = Self::zero(self.dim, self.degree);
        for (t, c) in &self.coeffs {
            out.add_term(t.clone(), c.clone() * s.clone());
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_same_space(other)?;
        let mut out = Self::zero(self.dim, self.degree + other.degree);
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                if let Some((t, sign)) = a.wedge(b) {
                    let c = ca.clone() * cb.clone();
                    out.add_term(t, if sign < 0 { -c } else { c });
                }
            }
        }
        Ok(out)
    }

    /// Contraction `v ⌟ self`.
    pub fn interior(&self, v: &[S]) -> Result<Self> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        if self.degree == 0 {
            return Err(Error::DegreeZero);
        }
        let mut out = Self::zero(self.dim, self.degree - 1);
        for (t, c) in &self.coeffs {
            for (r, &i) in t.indices().iter().enumerate() {
                if v[i].is_zero() {
                    continue;
                }
                let term = c.clone() * v[i].clone();
                out.add_term(t.remove_position(r), if r % 2 == 0 { term } else { -term });
            }
        }
        Ok(out)
    }

    /// Pullback along the linear map `L: R^d -> R^D` (`self` lives on `R^D`).
    ///
    /// The coefficient on `J` is `Σ_I a_I · det L[I, J]`.
    pub fn pullback(&self, l: &LinearMap<S>) -> Result<Self> {
        if l.rows != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: l.rows });
        }
        let mut out = Self::zero(l.cols, self.degree);
        if self.degree > l.cols {
            return Ok(out);
        }
        let targets = IndexTuple::all(l.cols, self.degree);
        for (i, a) in &self.coeffs {
            for j in &targets {
                let minor = l.minor(i.indices(), j.indices());
                let d = linalg::det(minor);
                if !d.is_zero() {
                    out.add_term(j.clone(), a.clone() * d);
                }
            }
        }
        Ok(out)
    }

    pub fn map_scalars<T: Scalar>(&self, f: impl Fn(&S) -> T) -> AltForm<T> {
        let mut out = AltForm::zero(self.dim, self.degree);
        for (t, c) in &self.coeffs {
            out.add_term(t.clone(), f(c));
        }
        out
    }

    pub fn to_f64(&self) -> AltForm<f64> {
        self.map_scalars(|c| c.to_f64())
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.values().map(|c| c.to_f64().abs()).fold(0.0, f64::max)
    }
}

impl AltForm<f64> {
    /// `max_I |self_I - other_I|`.
    pub fn max_abs_diff(&self, other: &AltForm<f64>) -> f64 {
        let mut m: f64 = 0.0;
        for (t, c) in &self.coeffs {
            m = m.max((c - other.coefficient(t)).abs());
        }
        for (t, c) in &other.coeffs {
            if !self.coeffs.contains_key(t) {
                m = m.max(c.abs());
            }
        }
        m
    }
}

/// `β^k_N`: the sum over `N` consecutive blocks of `k` coordinates of the
/// block volume forms, on `R^{kN}`.
pub fn standard_beta(blocks: usize, k: usize) -> AltForm<Rational> {
    let mut f = AltForm::zero(blocks * k, k);
    for b in 0..blocks {
        f.add_term(IndexTuple::from_sorted((b * k..(b + 1) * k).collect()), Rational::from_i64(1));
    }
    f
}

/// A matrix representing `R^cols -> R^rows`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap<S: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> LinearMap<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        LinearMap { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, S::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch { expected: cols, found: bad.len() });
        }
        let nrows = rows.len();
        Ok(LinearMap { rows: nrows, cols, data: rows.into_iter().flatten().collect() })
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(dim: usize, columns: &[Vec<S>]) -> Result<Self> {
        let mut m = Self::zeros(dim, columns.len());
        for (c, v) in columns.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            for (r, x) in v.iter().enumerate() {
                m.set(r, c, x.clone());
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &S {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: S) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<S> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<S>> {
        rows.iter()
            .map(|&r| cols.iter().map(|&c| self.get(r, c).clone()).collect())
            .collect()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinearMap<S>) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for c in 0..other.cols {
                let mut acc = S::zero();
                for i in 0..self.cols {
                    let a = self.get(r, i);
                    if !a.is_zero() {
                        acc = acc + a.clone() * other.get(i, c).clone();
                    }
                }
                out.set(r, c, acc);
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[S]) -> Result<Vec<S>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect())
    }

    /// `x ↦ (self x, other x)` for maps sharing a domain.
    pub fn stack(&self, other: &LinearMap<S>) -> Result<Self> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.cols });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(LinearMap { rows: self.rows + other.rows, cols: self.cols, data })
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut out = Self::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (j, &c) in cols.iter().enumerate() {
                out.set(r, j, self.get(r, c).clone());
            }
        }
        out
    }

    pub fn to_f64(&self) -> LinearMap<f64> {
        LinearMap { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.to_f64()).collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    fn t(v: &[usize]) -> IndexTuple {
        IndexTuple::from_sorted(v.to_vec())
    }

    #[test]
    fn wedge_of_basis_covectors() {
        let a = AltForm::<Rational>::basis(3, t(&[0, 1])).unwrap();
        let b = AltForm::basis(3, t(&[2])).unwrap();
        let w = a.wedge(&b).unwrap();
        assert_eq!(w.degree(), 3);
        assert_eq!(w.coefficient(&t(&[0, 1, 2])), int(1));
        assert_eq!(w.nonzero_count(), 1);
    }

    #[test]
    fn wedge_dimension_mismatch() {
        let a = AltForm::<Rational>::basis(3, t(&[0])).unwrap();
        let b = AltForm::basis(4, t(&[0])).unwrap();
        assert!(matches!(a.wedge(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn interior_examples() {
        let vol = AltForm::<Rational>::basis(3, t(&[0, 1, 2])).unwrap();
        let c = vol.interior(&[int(1), int(0), int(0)]).unwrap();
        assert_eq!(c, AltForm::basis(3, t(&[1, 2])).unwrap());

        let vol4 = AltForm::<Rational>::basis(4, t(&[0, 1, 2])).unwrap();
        assert!(vol4.interior(&[int(0), int(0), int(0), int(1)]).unwrap().is_zero());

        let c = vol.interior(&[int(1), int(1), int(0)]).unwrap();
        let expected = AltForm::from_terms(3, 2, [(t(&[1, 2]), int(1)), (t(&[0, 2]), int(-1))]).unwrap();
        assert_eq!(c, expected);

        let zero_deg = AltForm::<Rational>::zero(3, 0);
        assert_eq!(zero_deg.interior(&[int(1), int(0), int(0)]), Err(Error::DegreeZero));
    }

    #[test]
    fn pullback_examples() {
        let vol = AltForm::<Rational>::basis(3, t(&[0, 1, 2])).unwrap();
        assert_eq!(vol.pullback(&LinearMap::identity(3)).unwrap(), vol);
        assert!(vol.pullback(&LinearMap::zeros(3, 3)).unwrap().is_zero());
        let mut scale = LinearMap::identity(3);
        scale.set(0, 0, int(7));
        assert_eq!(vol.pullback(&scale).unwrap(), vol.scale(&int(7)));
        assert!(vol.pullback(&LinearMap::identity(2)).is_err());
    }

    #[test]
    fn standard_beta_blocks() {
        let b = standard_beta(1, 3);
        assert_eq!(b, AltForm::basis(3, t(&[0, 1, 2])).unwrap());
        let b = standard_beta(2, 3);
        assert_eq!(b.dim(), 6);
        assert_eq!(b.coefficient(&t(&[3, 4, 5])), int(1));
        assert_eq!(b.nonzero_count(), 2);
        assert_eq!(standard_beta(3, 4).nonzero_count(), 3);
        assert_eq!(standard_beta(3, 4).dim(), 12);
    }
}
