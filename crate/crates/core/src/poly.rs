//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::scalar::{format_rational, Rational, Scalar};

/// Exponent vector, one entry per variable.
pub type Monomial = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly {
    arity: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl Poly {
    pub fn zero(arity: usize) -> Self {
        Poly { arity, terms: BTreeMap::new() }
    }

    pub fn constant(arity: usize, c: Rational) -> Self {
        let mut p = Self::zero(arity);
        p.add_term(vec![0; arity], c);
        p
    }

    pub fn one(arity: usize) -> Self {
        Self::constant(arity, Rational::one())
    }

    /// The coordinate function `x_i` (zero-based).
    pub fn var(arity: usize, i: usize) -> Self {
        assert!(i < arity, "variable x{} out of range for arity {arity}", i + 1);
        let mut m = vec![0; arity];
        m[i] = 1;
        let mut p = Self::zero(arity);
        p.add_term(m, Rational::one());
        p
    }

    pub fn from_terms(arity: usize, terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero(arity);
        for (m, c) in terms {
            assert_eq!(m.len(), arity);
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let v = o.get() + &c;
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

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The value if this polynomial is constant.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.iter().all(|&e| e == 0).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.arity, other.arity);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly {
            arity: self.arity,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, s: &Rational) -> Poly {
        if s.is_zero() {
            return Poly::zero(self.arity);
        }
        Poly {
            arity: self.arity,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.arity, other.arity);
        let mut out = Poly::zero(self.arity);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let m: Monomial = ma.iter().zip(mb).map(|(a, b)| a + b).collect();
                out.add_term(m, ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut result = Poly::one(self.arity);
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// `∂/∂x_i`.
    pub fn partial(&self, i: usize) -> Poly {
        let mut out = Poly::zero(self.arity);
        for (m, c) in &self.terms {
            if m[i] == 0 {
                continue;
            }
            let mut d = m.clone();
            d[i] -= 1;
            out.add_term(d, c * Rational::from_i64(m[i] as i64));
        }
        out
    }

    pub fn eval_exact(&self, p: &[Rational]) -> Rational {
        assert_eq!(p.len(), self.arity);
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (x, &e) in p.iter().zip(m) {
                if e > 0 {
                    t *= num_traits::pow(x.clone(), e as usize);
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                m.iter()
                    .zip(p)
                    .filter(|(&e, _)| e > 0)
                    .fold(c.to_f64(), |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    /// Value and gradient at `p`.
    pub fn jet(&self, p: &[f64]) -> (f64, Vec<f64>) {
        let mut v = 0.0;
        let mut g = vec![0.0; self.arity];
        for (m, c) in &self.terms {
            let c = c.to_f64();
            let powers: Vec<f64> = m.iter().zip(p).map(|(&e, &x)| x.powi(e as i32)).collect();
            v += c * powers.iter().product::<f64>();
            for i in 0..self.arity {
                if m[i] == 0 {
                    continue;
                }
                let mut t = c * m[i] as f64 * p[i].powi(m[i] as i32 - 1);
                for (j, pw) in powers.iter().enumerate() {
                    if j != i {
                        t *= pw;
                    }
                }
                g[i] += t;
            }
        }
        (v, g)
    }

    /// Substitutes `x_i := args[i]`; the result has the arity of the arguments.
    pub fn compose(&self, args: &[Poly]) -> Poly {
        assert_eq!(args.len(), self.arity);
        let arity = args.first().map_or(0, Poly::arity);
        let mut cache: Vec<Vec<Poly>> = args.iter().map(|a| vec![Poly::one(arity), a.clone()]).collect();
        let mut out = Poly::zero(arity);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(arity, c.clone());
            for (i, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                while cache[i].len() <= e as usize {
                    let next = cache[i].last().unwrap().mul(&args[i]);
                    cache[i].push(next);
                }
                t = t.mul(&cache[i][e as usize]);
            }
            out = out.add(&t);
        }
        out
    }

    /// Same polynomial viewed in `arity ≥ self.arity` variables, occupying the
    /// first `self.arity` of them.
    pub fn widen(&self, arity: usize) -> Poly {
        assert!(arity >= self.arity);
        Poly {
            arity,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut w = m.clone();
                    w.resize(arity, 0);
                    (w, c.clone())
                })
                .collect(),
        }
    }

    /// `∫₀¹ t^power · f(c + t(x − c)) dt`, exactly.
    ///
    /// In coordinates centred at `c` a monomial of total degree `m` picks up
    /// the factor `1/(m + power + 1)`.
    pub fn cone_integral(&self, power: u32, center: &[Rational]) -> Poly {
        assert_eq!(center.len(), self.arity);
        let centered = center.iter().any(|c| !c.is_zero());
        let shifted = if centered {
            let args: Vec<Poly> = (0..self.arity)
                .map(|i| Poly::var(self.arity, i).add(&Poly::constant(self.arity, center[i].clone())))
                .collect();
            self.compose(&args)
        } else {
            self.clone()
        };
        let mut integrated = Poly::zero(self.arity);
        for (m, c) in &shifted.terms {
            let deg: u32 = m.iter().sum();
            integrated.add_term(m.clone(), c / Rational::from_i64((deg + power + 1) as i64));
        }
        if centered {
            let back: Vec<Poly> = (0..self.arity)
                .map(|i| Poly::var(self.arity, i).sub(&Poly::constant(self.arity, center[i].clone())))
                .collect();
            integrated.compose(&back)
        } else {
            integrated
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest total degree first, lexicographic within a degree
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| {
            let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        for (idx, (m, c)) in terms.into_iter().enumerate() {
            let negative = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if negative { " - " } else { " + " })?;
            }
            let factors: Vec<String> = m
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| if e == 1 { format!("x{}", i + 1) } else { format!("x{}^{}", i + 1, e) })
                .collect();
            if factors.is_empty() {
                write!(f, "{}", format_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{}*{}", format_rational(&mag), factors.join("*"))?;
            }
        }
        Ok(())
    }
}
