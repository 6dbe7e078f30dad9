//! Differential forms on a chart with [`SmoothFn`] coefficients.
//!
//! Every operation has an exact path for polynomial data (used by the
//! certificates and the identity tests) and a pointwise numeric path.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg;
use crate::multilinear::{AltForm, LinearMap};
use crate::poly::Poly;
use crate::sampling::LowDiscrepancy;
use crate::scalar::{Rational, Scalar};
use crate::smoothfn::{Evaluator, SmoothFn};
use crate::tuple::IndexTuple;

#[derive(Clone, Debug)]
pub struct DifferentialForm {
    dim: usize,
    degree: usize,
    coeffs: BTreeMap<IndexTuple, SmoothFn>,
}

impl DifferentialForm {
    pub fn zero(dim: usize, degree: usize) -> Self {
        DifferentialForm { dim, degree, coeffs: BTreeMap::new() }
    }

    pub fn from_terms(dim: usize, degree: usize, terms: impl IntoIterator<Item = (IndexTuple, SmoothFn)>) -> Result<Self> {
        let mut out = Self::zero(dim, degree);
        for (t, f) in terms {
            if t.degree() != degree {
                return Err(Error::DegreeMismatch { expected: degree, found: t.degree() });
            }
            if !t.fits(dim) {
                return Err(Error::InvalidTuple { indices: t.indices().to_vec(), dim });
            }
            if f.arity() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: f.arity() });
            }
            out.add_term(t, f);
        }
        Ok(out)
    }

    /// Constant-coefficient form.
    pub fn constant(a: &AltForm<Rational>) -> Self {
        let mut out = Self::zero(a.dim(), a.degree());
        for (t, c) in a.terms() {
            out.add_term(t.clone(), SmoothFn::constant(a.dim(), c.clone()));
        }
        out
    }

    fn add_term(&mut self, t: IndexTuple, f: SmoothFn) {
        if f.is_zero() {
            return;
        }
        let f = match self.coeffs.remove(&t) {
            Some(g) => g.add(&f),
            None => f,
        };
        if !f.is_zero() {
            self.coeffs.insert(t, f);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Degree exceeds the chart dimension, so the form is zero by necessity.
    pub fn is_degenerate(&self) -> bool {
        self.degree > self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&IndexTuple, &SmoothFn)> {
        self.coeffs.iter()
    }

    pub fn coefficient(&self, t: &IndexTuple) -> SmoothFn {
        self.coeffs.get(t).cloned().unwrap_or_else(|| SmoothFn::zero(self.dim))
    }

    /// Exactly zero (every coefficient is the zero polynomial).
    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_polynomial(&self) -> bool {
        self.coeffs.values().all(SmoothFn::is_polynomial)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: other.degree });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (t, f) in &other.coeffs {
            out.add_term(t.clone(), f.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coefficients(SmoothFn::neg)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        self.map_coefficients(|f| f.scale(c))
    }

    /// `h · self` for a function `h`.
    pub fn multiply(&self, h: &SmoothFn) -> Self {
        self.map_coefficients(|f| h.mul(f))
    }

    pub fn map_coefficients(&self, f: impl Fn(&SmoothFn) -> SmoothFn) -> Self {
        let mut out = Self::zero(self.dim, self.degree);
        for (t, c) in &self.coeffs {
            out.add_term(t.clone(), f(c));
        }
        out
    }

    /// Same form viewed on a chart with more coordinates (the new ones last).
    pub fn widen(&self, dim: usize) -> Self {
        let mut out = Self::zero(dim, self.degree);
        for (t, c) in &self.coeffs {
            out.add_term(t.clone(), c.widen(dim));
        }
        out
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut out = Self::zero(self.dim, self.degree + other.degree);
        for (a, fa) in &self.coeffs {
            for (b, fb) in &other.coeffs {
                if let Some((t, sign)) = a.wedge(b) {
                    let p = fa.mul(fb);
                    out.add_term(t, if sign < 0 { p.neg() } else { p });
                }
            }
        }
        Ok(out)
    }

    /// Symbolic exterior derivative. A top-degree input gives the
    /// degenerate zero form of degree `dim + 1`.
    pub fn exterior_d(&self) -> Result<Self> {
        let mut out = Self::zero(self.dim, self.degree + 1);
        if self.degree >= self.dim {
            return Ok(out);
        }
        for (t, f) in &self.coeffs {
            for j in 0..self.dim {
                if t.contains(j) {
                    continue;
                }
                let d = f.partial(j)?;
                if d.is_zero() {
                    continue;
                }
                let (u, sign) = t.insert(j).expect("index not in tuple");
                out.add_term(u, if sign < 0 { d.neg() } else { d });
            }
        }
        Ok(out)
    }

    /// `V ⌟ self`.
    pub fn interior(&self, v: &VectorField) -> Result<Self> {
        if v.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: v.dim() });
        }
        if self.degree == 0 {
            return Err(Error::DegreeZero);
        }
        let mut out = Self::zero(self.dim, self.degree - 1);
        for (t, f) in &self.coeffs {
            for (r, &i) in t.indices().iter().enumerate() {
                let vi = &v.components[i];
                if vi.is_zero() {
                    continue;
                }
                let term = vi.mul(f);
                out.add_term(t.remove_position(r), if r % 2 == 0 { term } else { term.neg() });
            }
        }
        Ok(out)
    }

    /// Cartan's formula `L_V a = V ⌟ da + d(V ⌟ a)`.
    pub fn lie_derivative(&self, v: &VectorField) -> Result<Self> {
        let da = self.exterior_d()?;
        let first = if da.is_degenerate() { Self::zero(self.dim, self.degree) } else { da.interior(v)? };
        if self.degree == 0 {
            return Ok(first);
        }
        first.add(&self.interior(v)?.exterior_d()?)
    }

    /// Exact pullback along a polynomial map.
    pub fn pullback(&self, f: &SmoothMap) -> Result<Self> {
        if f.target_dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: f.target_dim() });
        }
        let n = f.source_dim();
        let comps: Vec<Poly> = f
            .components
            .iter()
            .map(|c| c.as_poly().cloned().ok_or_else(|| Error::NotPolynomial(c.to_string())))
            .collect::<Result<_>>()?;
        let mut out = Self::zero(n, self.degree);
        if self.degree > n {
            return Ok(out);
        }
        let jac: Vec<Vec<Poly>> = comps.iter().map(|c| (0..n).map(|j| c.partial(j)).collect()).collect();
        let targets = IndexTuple::all(n, self.degree);
        for (i, a) in &self.coeffs {
            let a = a.as_poly().ok_or_else(|| Error::NotPolynomial(a.to_string()))?;
            let a_at_f = a.compose(&comps);
            if a_at_f.is_zero() {
                continue;
            }
            for j in &targets {
                let minor: Vec<Vec<Poly>> = i
                    .indices()
                    .iter()
                    .map(|&r| j.indices().iter().map(|&c| jac[r][c].clone()).collect())
                    .collect();
                let d = poly_det(&minor, n);
                if !d.is_zero() {
                    out.add_term(j.clone(), SmoothFn::poly(a_at_f.mul(&d)));
                }
            }
        }
        Ok(out)
    }

    /// The constant form `self(p)`.
    pub fn eval_at(&self, p: &[f64]) -> AltForm<f64> {
        let mut ev = Evaluator::new(p);
        let terms: Vec<(IndexTuple, f64)> = self.coeffs.iter().map(|(t, f)| (t.clone(), ev.value(f))).collect();
        AltForm::from_terms(self.dim, self.degree, terms).expect("form invariants")
    }

    /// `(d self)(p)` from coefficient gradients; works for coefficients
    /// without symbolic derivatives (bumps).
    pub fn d_at(&self, p: &[f64]) -> AltForm<f64> {
        let mut ev = Evaluator::new(p);
        let mut out = AltForm::zero(self.dim, self.degree + 1);
        if self.degree >= self.dim {
            return out;
        }
        for (t, f) in &self.coeffs {
            let g = ev.jet(f).grad;
            for (a, ga) in g.iter().enumerate() {
                if *ga == 0.0 {
                    continue;
                }
                if let Some((u, sign)) = t.insert(a) {
                    out.add_term(u, sign as f64 * ga);
                }
            }
        }
        out
    }

    /// `(F*self)(p)` computed pointwise from the Jacobian of `F`.
    pub fn pullback_at(&self, f: &SmoothMap, p: &[f64]) -> Result<AltForm<f64>> {
        if f.target_dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: f.target_dim() });
        }
        let (value, jac) = f.jet(p);
        self.eval_at(&value).pullback(&LinearMap::from_rows(jac)?)
    }

    /// Exact closedness for polynomial forms, otherwise `d self` sampled at
    /// 64 points of the unit cube around `center`.
    pub fn check_closed(&self, center: &[f64]) -> Result<()> {
        let d = self.exterior_d()?;
        if d.is_zero() {
            return Ok(());
        }
        if d.is_polynomial() {
            let (t, c) = d.coeffs.iter().next().expect("nonzero form");
            return Err(Error::NotClosed { tuple: t.to_string(), coefficient: c.to_string() });
        }
        let mut seq = LowDiscrepancy::new(self.dim, 0);
        for u in seq.take_points(64) {
            let p: Vec<f64> = u.iter().zip(center).map(|(x, c)| c + x - 0.5).collect();
            let scale = self.eval_at(&p).max_abs().max(1.0);
            let mut ev = Evaluator::new(&p);
            for (t, c) in &d.coeffs {
                let v = ev.value(c);
                if v.abs() > 1e-9 * scale {
                    return Err(Error::NotClosed { tuple: t.to_string(), coefficient: format!("{c} = {v:e} at {p:?}") });
                }
            }
        }
        Ok(())
    }

    /// The homotopy operator
    /// `H(a)(x) = Σ_I Σ_r (-1)^r (x_{i_r} - c_{i_r}) ∫₀¹ t^{k-1} a_I(c + t(x - c)) dt dx^{I \ i_r}`,
    /// with `dH + Hd = id`. No closedness check.
    pub fn homotopy_operator(&self, center: &[Rational]) -> Result<Self> {
        if center.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: center.len() });
        }
        if self.degree == 0 {
            return Err(Error::DegreeZero);
        }
        let mut out = Self::zero(self.dim, self.degree - 1);
        for (t, f) in &self.coeffs {
            let radial = f.cone(self.degree as u32 - 1, center)?;
            for (r, &i) in t.indices().iter().enumerate() {
                let arm = SmoothFn::var(self.dim, i).sub(&SmoothFn::constant(self.dim, center[i].clone()));
                let term = arm.mul(&radial);
                out.add_term(t.remove_position(r), if r % 2 == 0 { term } else { term.neg() });
            }
        }
        Ok(out)
    }

    /// A primitive `φ` with `dφ = self` on any star-shaped domain around
    /// `center`, after checking that `self` is closed.
    pub fn poincare_primitive(&self, center: &[Rational]) -> Result<Self> {
        let c: Vec<f64> = center.iter().map(Scalar::to_f64).collect();
        if center.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: center.len() });
        }
        self.check_closed(&c)?;
        self.homotopy_operator(center)
    }

    /// Largest coefficient difference at `p`.
    pub fn max_abs_diff_at(&self, other: &Self, p: &[f64]) -> f64 {
        self.eval_at(p).max_abs_diff(&other.eval_at(p))
    }
}

/// Determinant of a small polynomial matrix by cofactor expansion.
fn poly_det(m: &[Vec<Poly>], arity: usize) -> Poly {
    match m.len() {
        0 => Poly::one(arity),
        1 => m[0][0].clone(),
        2 => m[0][0].mul(&m[1][1]).sub(&m[0][1].mul(&m[1][0])),
        n => {
            let mut acc = Poly::zero(arity);
            for c in 0..n {
                if m[0][c].is_zero() {
                    continue;
                }
                let sub: Vec<Vec<Poly>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, x)| x.clone()).collect())
                    .collect();
                let term = m[0][c].mul(&poly_det(&sub, arity));
                acc = if c % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
            }
            acc
        }
    }
}

/// A map `R^n -> R^D` given by component functions.
#[derive(Clone, Debug)]
pub struct SmoothMap {
    source_dim: usize,
    components: Vec<SmoothFn>,
}

impl SmoothMap {
    pub fn new(source_dim: usize, components: Vec<SmoothFn>) -> Result<Self> {
        if let Some(c) = components.iter().find(|c| c.arity() != source_dim) {
            return Err(Error::DimensionMismatch { expected: source_dim, found: c.arity() });
        }
        Ok(SmoothMap { source_dim, components })
    }

    pub fn identity(n: usize) -> Self {
        SmoothMap { source_dim: n, components: (0..n).map(|i| SmoothFn::var(n, i)).collect() }
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[SmoothFn] {
        &self.components
    }

    pub fn is_polynomial(&self) -> bool {
        self.components.iter().all(SmoothFn::is_polynomial)
    }

    /// `(F(p), DF(p))` with the Jacobian as `D` rows of gradients.
    pub fn jet(&self, p: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut ev = Evaluator::new(p);
        self.components
            .iter()
            .map(|c| {
                let j = ev.jet(c);
                (j.value, j.grad)
            })
            .unzip()
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        let mut ev = Evaluator::new(p);
        self.components.iter().map(|c| ev.value(c)).collect()
    }

    pub fn jacobian(&self, p: &[f64]) -> Vec<Vec<f64>> {
        self.jet(p).1
    }

    /// Singular values of the Jacobian at `p`, largest first.
    pub fn jacobian_singular_values(&self, p: &[f64]) -> Vec<f64> {
        linalg::singular_values(&self.jacobian(p))
    }
}

/// A vector field on a chart, one component per coordinate.
#[derive(Clone, Debug)]
pub struct VectorField {
    components: Vec<SmoothFn>,
}

impl VectorField {
    pub fn new(components: Vec<SmoothFn>) -> Result<Self> {
        let n = components.len();
        if let Some(c) = components.iter().find(|c| c.arity() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: c.arity() });
        }
        Ok(VectorField { components })
    }

    pub fn constant(v: &[Rational]) -> Self {
        let n = v.len();
        VectorField { components: v.iter().map(|c| SmoothFn::constant(n, c.clone())).collect() }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[SmoothFn] {
        &self.components
    }

    pub fn eval(&self, p: &[f64]) -> Vec<f64> {
        let mut ev = Evaluator::new(p);
        self.components.iter().map(|c| ev.value(c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(SmoothFn::is_zero)
    }
}

/// Default star center: the midpoint of the bounding box of `points`.
pub fn bbox_center(points: &[Vec<f64>]) -> Vec<Rational> {
    let dim = points.first().map_or(0, Vec::len);
    (0..dim)
        .map(|i| {
            let lo = points.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
            crate::scalar::rational_from_f64((lo + hi) / 2.0).unwrap_or_else(|_| Rational::zero())
        })
        .collect()
}

impl std::fmt::Display for DifferentialForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        for (n, (t, c)) in self.coeffs.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            let text = c.to_string();
            let coef = if text.contains(" + ") || text.contains(" - ") { format!("({text})") } else { text };
            let dx = t.indices().iter().map(|i| format!("dx{}", i + 1)).collect::<Vec<_>>().join("^");
            if dx.is_empty() {
                write!(f, "{coef}")?;
            } else {
                write!(f, "{coef} {dx}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};
    use crate::smoothfn::parse;

    fn t(ix: &[usize]) -> IndexTuple {
        IndexTuple::new(ix.to_vec(), 8).unwrap()
    }

    fn form(dim: usize, degree: usize, terms: &[(&[usize], &str)]) -> DifferentialForm {
        DifferentialForm::from_terms(dim, degree, terms.iter().map(|(ix, e)| (t(ix), parse(e, dim).unwrap()))).unwrap()
    }

    #[test]
    fn exterior_derivative_examples() {
        let a = form(2, 1, &[(&[1], "x1")]);
        let da = a.exterior_d().unwrap();
        assert_eq!(da.terms().count(), 1);
        assert_eq!(da.coefficient(&t(&[0, 1])).to_string(), "1");

        let b = form(3, 2, &[(&[1, 2], "-cos(2*pi*x1)/(2*pi)")]);
        let db = b.exterior_d().unwrap();
        let want = parse("sin(2*pi*x1)", 3).unwrap();
        for p in [[0.1, 0.2, 0.3], [0.77, -1.0, 2.0]] {
            let got = db.coefficient(&t(&[0, 1, 2])).eval(&p);
            assert!((got - want.eval(&p)).abs() < 1e-14);
        }
        let top = form(3, 3, &[(&[0, 1, 2], "x1")]);
        let d = top.exterior_d().unwrap();
        assert!(d.is_zero() && d.is_degenerate());
    }

    #[test]
    fn d_squared_vanishes() {
        let a = form(4, 1, &[(&[0], "x2^2*x3 - x4"), (&[2], "x1*x2*x3*x4 + 3"), (&[3], "x1^3")]);
        assert!(a.exterior_d().unwrap().exterior_d().unwrap().is_zero());
    }

    #[test]
    fn pullback_examples() {
        let a = form(3, 2, &[(&[1, 2], "x1")]);
        let id = SmoothMap::identity(3);
        assert!(a.pullback(&id).unwrap().sub(&a).unwrap().is_zero());
        // F(x) = (λ, x1, x2) pulls x1 dx2∧dx3 back to λ dx1∧dx2
        let lam = "x1*x2 + 2";
        let f = SmoothMap::new(
            2,
            vec![parse(lam, 2).unwrap(), SmoothFn::var(2, 0), SmoothFn::var(2, 1)],
        )
        .unwrap();
        let pb = a.pullback(&f).unwrap();
        assert_eq!(pb.terms().count(), 1);
        assert_eq!(pb.coefficient(&t(&[0, 1])).to_string(), "x1*x2 + 2");
        // pointwise path agrees
        let at = a.pullback_at(&f, &[0.5, -2.0]).unwrap();
        assert!((at.coefficient(&t(&[0, 1])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interior_and_lie_examples() {
        let vol = form(3, 3, &[(&[0, 1, 2], "1")]);
        let v = VectorField::constant(&[int(1), int(1), int(0)]);
        let c = vol.interior(&v).unwrap();
        assert_eq!(c.coefficient(&t(&[1, 2])).to_string(), "1");
        assert_eq!(c.coefficient(&t(&[0, 2])).to_string(), "-1");
        // L_{e1}(x1 dx2) = dx2
        let a = form(2, 1, &[(&[1], "x1")]);
        let l = a.lie_derivative(&VectorField::constant(&[int(1), int(0)])).unwrap();
        assert_eq!(l.terms().count(), 1);
        assert_eq!(l.coefficient(&t(&[1])).to_string(), "1");
        let zero = a.lie_derivative(&VectorField::constant(&[int(0), int(0)])).unwrap();
        assert!(zero.is_zero());
        assert_eq!(a.interior(&VectorField::constant(&[int(1)])).unwrap_err(), Error::DimensionMismatch { expected: 2, found: 1 });
    }

    #[test]
    fn primitive_of_volume_form() {
        let vol = form(3, 3, &[(&[0, 1, 2], "1")]);
        let h = vol.poincare_primitive(&[int(0), int(0), int(0)]).unwrap();
        assert_eq!(h.coefficient(&t(&[1, 2])).to_string(), "1/3*x1");
        assert_eq!(h.coefficient(&t(&[0, 2])).to_string(), "-1/3*x2");
        assert_eq!(h.coefficient(&t(&[0, 1])).to_string(), "1/3*x3");
        assert!(h.exterior_d().unwrap().sub(&vol).unwrap().is_zero());
        let z = DifferentialForm::zero(3, 2).poincare_primitive(&[int(0), int(0), int(0)]).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn primitive_rejects_non_closed() {
        let a = form(3, 1, &[(&[0], "x2")]);
        match a.poincare_primitive(&[int(0), int(0), int(0)]) {
            Err(Error::NotClosed { tuple, coefficient }) => {
                assert_eq!(tuple, "1,2");
                assert_eq!(coefficient, "-1");
            }
            other => panic!("{other:?}"),
        }
        let s = form(2, 1, &[(&[0], "sin(x2)")]);
        assert!(matches!(s.poincare_primitive(&[int(0), int(0)]), Err(Error::NotClosed { .. })));
    }

    #[test]
    fn numeric_primitive_off_center() {
        let w = form(3, 3, &[(&[0, 1, 2], "sin(2*pi*x1)")]);
        let c = [rat(1, 2), rat(1, 2), rat(1, 2)];
        let h = w.poincare_primitive(&c).unwrap();
        let dh = h.exterior_d().unwrap();
        for p in [[0.1, 0.9, 0.4], [0.6, 0.3, 0.2]] {
            assert!(dh.max_abs_diff_at(&w, &p) < 1e-12);
        }
    }
}
