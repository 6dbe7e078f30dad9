#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use univform::poly::Poly;
use univform::scalar::int;
use univform::{AltForm, DifferentialForm, IndexTuple, LinearMap, Rational, SmoothFn, VectorField};

/// Random polynomial in `n` variables: up to `terms` monomials of total
/// degree ≤ `deg`, small integer coefficients.
pub fn poly(rng: &mut ChaCha8Rng, n: usize, deg: u32, terms: usize) -> Poly {
    Poly::from_terms(
        n,
        (0..rng.gen_range(1..=terms)).map(|_| {
            let mut m = vec![0u32; n];
            for _ in 0..rng.gen_range(0..=deg) {
                m[rng.gen_range(0..n)] += 1;
            }
            (m, int(rng.gen_range(-3..=3)))
        }),
    )
}

pub fn poly_form(rng: &mut ChaCha8Rng, n: usize, k: usize, deg: u32) -> DifferentialForm {
    let tuples = IndexTuple::all(n, k);
    let picks: Vec<_> = tuples.iter().filter(|_| rng.gen_bool(0.6)).cloned().collect();
    DifferentialForm::from_terms(n, k, picks.into_iter().map(|t| (t, SmoothFn::poly(poly(rng, n, deg, 3))))).unwrap()
}

pub fn vector_field(rng: &mut ChaCha8Rng, n: usize, deg: u32) -> VectorField {
    VectorField::new((0..n).map(|_| SmoothFn::poly(poly(rng, n, deg, 2))).collect()).unwrap()
}

pub fn alt_form(rng: &mut ChaCha8Rng, n: usize, k: usize) -> AltForm<Rational> {
    AltForm::from_terms(n, k, IndexTuple::all(n, k).into_iter().map(|t| (t, int(rng.gen_range(-4..=4))))).unwrap()
}

pub fn matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> LinearMap<Rational> {
    LinearMap::from_rows((0..rows).map(|_| (0..cols).map(|_| int(rng.gen_range(-3..=3))).collect()).collect()).unwrap()
}

pub fn point(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()
}

/// Whether a form with polynomial coefficients is identically zero.
pub fn exactly_equal(a: &DifferentialForm, b: &DifferentialForm) -> bool {
    a.sub(b).unwrap().is_zero()
}

/// `(Fl_t(p), DFl_t(p))` by one RK4 step of the flow and its variational
/// equation.
fn flow(v: &VectorField, p: &[f64], t: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = p.len();
    let rhs = |x: &[f64], j: &[Vec<f64>]| -> (Vec<f64>, Vec<Vec<f64>>) {
        let dv: Vec<Vec<f64>> = v.components().iter().map(|c| c.grad(x)).collect();
        let jj = (0..n).map(|r| (0..n).map(|c| (0..n).map(|s| dv[r][s] * j[s][c]).sum()).collect()).collect();
        (v.eval(x), jj)
    };
    let axpy = |x: &[f64], j: &[Vec<f64>], dx: &[f64], dj: &[Vec<f64>], h: f64| -> (Vec<f64>, Vec<Vec<f64>>) {
        (
            x.iter().zip(dx).map(|(a, b)| a + h * b).collect(),
            j.iter().zip(dj).map(|(r, dr)| r.iter().zip(dr).map(|(a, b)| a + h * b).collect()).collect(),
        )
    };
    let id: Vec<Vec<f64>> = (0..n).map(|r| (0..n).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
    let (k1x, k1j) = rhs(p, &id);
    let (x2, j2) = axpy(p, &id, &k1x, &k1j, t / 2.0);
    let (k2x, k2j) = rhs(&x2, &j2);
    let (x3, j3) = axpy(p, &id, &k2x, &k2j, t / 2.0);
    let (k3x, k3j) = rhs(&x3, &j3);
    let (x4, j4) = axpy(p, &id, &k3x, &k3j, t);
    let (k4x, k4j) = rhs(&x4, &j4);
    let x = (0..n).map(|i| p[i] + t / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i])).collect();
    let j = (0..n)
        .map(|r| (0..n).map(|c| id[r][c] + t / 6.0 * (k1j[r][c] + 2.0 * k2j[r][c] + 2.0 * k3j[r][c] + k4j[r][c])).collect())
        .collect();
    (x, j)
}

/// `d/dt|₀ (Fl_t^* a)(p)` by central differences.
pub fn flow_lie_derivative(a: &DifferentialForm, v: &VectorField, p: &[f64], t: f64) -> AltForm<f64> {
    let at = |s: f64| {
        let (x, j) = flow(v, p, s);
        a.eval_at(&x).pullback(&LinearMap::from_rows(j).unwrap()).unwrap()
    };
    at(t).sub(&at(-t)).unwrap().scale(&(1.0 / (2.0 * t)))
}
