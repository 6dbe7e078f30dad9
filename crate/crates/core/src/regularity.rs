//! Regular subspaces of constant forms.
//!
//! A subspace `T ⊂ R^D` is regular for a k-form `β` when the contractions
//! `e_i ⌟ β`, restricted to `T`, span all of `Λ^{k-1}(T)*`. The certificate
//! is the rank of the `D × C(l, k-1)` contraction matrix, computed exactly.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, rank_exact};
use crate::multilinear::{standard_beta, AltForm, LinearMap};
use crate::scalar::{text, Rational, Scalar};
use crate::tuple::{binomial, IndexTuple};

/// A subspace of `R^D` given by `l` independent basis vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    ambient_dim: usize,
    basis: Vec<Vec<Rational>>,
}

impl Subspace {
    pub fn new(ambient_dim: usize, basis: Vec<Vec<Rational>>) -> Result<Self> {
        if let Some(v) = basis.iter().find(|v| v.len() != ambient_dim) {
            return Err(Error::DimensionMismatch { expected: ambient_dim, found: v.len() });
        }
        let rank = rank_exact(&basis);
        if rank != basis.len() {
            return Err(Error::Domain(format!("{} basis vectors span only a {rank}-dimensional space", basis.len())));
        }
        Ok(Subspace { ambient_dim, basis })
    }

    /// Span of the given coordinate axes.
    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Result<Self> {
        let basis = axes
            .iter()
            .map(|&a| (0..ambient_dim).map(|i| if i == a { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        Self::new(ambient_dim, basis)
    }

    /// The image of an injective linear map.
    pub fn image(map: &LinearMap<Rational>) -> Result<Self> {
        Self::new(map.rows(), (0..map.cols()).map(|c| map.column(c)).collect())
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<Rational>] {
        &self.basis
    }

    /// The inclusion `R^l -> R^D`.
    pub fn inclusion(&self) -> LinearMap<Rational> {
        LinearMap::from_columns(self.ambient_dim, &self.basis).expect("validated basis")
    }
}

/// Rows `e_i ⌟ β` restricted along `basis: R^l -> R^D`, in the lexicographic
/// basis of `Λ^{k-1}(R^l)*`.
pub fn contraction_matrix<S: Scalar>(beta: &AltForm<S>, basis: &LinearMap<S>) -> Result<Vec<Vec<S>>> {
    if basis.rows() != beta.dim() {
        return Err(Error::DimensionMismatch { expected: beta.dim(), found: basis.rows() });
    }
    if beta.degree() == 0 {
        return Err(Error::DegreeZero);
    }
    let d = beta.dim();
    let l = basis.cols();
    let cols = IndexTuple::all(l, beta.degree() - 1);
    let mut unit = vec![S::zero(); d];
    let mut rows = Vec::with_capacity(d);
    for i in 0..d {
        unit[i] = S::one();
        let restricted = beta.interior(&unit)?.pullback(basis)?;
        unit[i] = S::zero();
        rows.push(cols.iter().map(|t| restricted.coefficient(t)).collect());
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityCertificate {
    pub ambient_dim: usize,
    pub subspace_dim: usize,
    pub degree: usize,
    #[serde(serialize_with = "text::matrix")]
    pub contraction_matrix: Vec<Vec<Rational>>,
    pub achieved_rank: usize,
    pub required_rank: usize,
    pub regular: bool,
}

pub fn is_regular(beta: &AltForm<Rational>, t: &Subspace) -> Result<RegularityCertificate> {
    let m = contraction_matrix(beta, &t.inclusion())?;
    let achieved_rank = rank_exact(&m);
    let required_rank = binomial(t.dim(), beta.degree() - 1);
    Ok(RegularityCertificate {
        ambient_dim: beta.dim(),
        subspace_dim: t.dim(),
        degree: beta.degree(),
        contraction_matrix: m,
        achieved_rank,
        required_rank,
        regular: achieved_rank == required_rank,
    })
}

/// Floating-point rank of the contraction matrix, for pointwise checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NumericRegularity {
    pub achieved_rank: usize,
    pub required_rank: usize,
    pub smallest_singular_value: f64,
    pub condition: f64,
}

pub fn numeric_regularity(beta: &AltForm<f64>, basis: &LinearMap<f64>, rel_tol: f64) -> Result<NumericRegularity> {
    let m = contraction_matrix(beta, basis)?;
    let required_rank = binomial(basis.cols(), beta.degree() - 1);
    let sv = linalg::singular_values(&m);
    let achieved_rank = linalg::numeric_rank(&sv, rel_tol);
    let largest = sv.first().copied().unwrap_or(0.0);
    let smallest = if required_rank == 0 { largest } else { sv.get(required_rank - 1).copied().unwrap_or(0.0) };
    Ok(NumericRegularity {
        achieved_rank,
        required_rank,
        smallest_singular_value: smallest,
        condition: if smallest > 0.0 { largest / smallest } else { f64::INFINITY },
    })
}

fn check_lk(l: usize, k: usize) -> Result<()> {
    if k < 3 || l < k {
        return Err(Error::Domain(format!("need l >= k >= 3, got l = {l}, k = {k}")));
    }
    Ok(())
}

/// The three evaluations of `δ(l, k)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaValues {
    pub recursion: usize,
    pub sum_formula: usize,
    /// The printed closed form; only a cross-check.
    pub closed_form: i64,
}

impl DeltaValues {
    pub fn closed_form_agrees(&self) -> bool {
        self.closed_form == self.sum_formula as i64
    }
}

pub fn delta_recursion(l: usize, k: usize) -> Result<usize> {
    check_lk(l, k)?;
    Ok((k..l).fold(1, |d, i| d + i / (k - 1) + 1))
}

pub fn delta_sum(l: usize, k: usize) -> Result<usize> {
    check_lk(l, k)?;
    Ok(1 + (l - k) + (k..l).map(|i| i / (k - 1)).sum::<usize>())
}

/// The closed form as printed,
/// `(l-1) + (k-1)/2 (2 + q)(q - 1) + [(l-1)/(k-1)] (1 + (l-1) mod (k-1))`
/// with `q = [(l-2)/(k-1)]`.
pub fn delta_closed_form(l: usize, k: usize) -> Result<i64> {
    check_lk(l, k)?;
    let (l, k) = (l as i64, k as i64);
    let q = (l - 2) / (k - 1);
    // (2 + q)(q - 1) = q² + q - 2 is always even
    Ok((l - 1) + (k - 1) * ((2 + q) * (q - 1) / 2) + ((l - 1) / (k - 1)) * (1 + (l - 1) % (k - 1)))
}

pub fn delta_values(l: usize, k: usize) -> Result<DeltaValues> {
    Ok(DeltaValues {
        recursion: delta_recursion(l, k)?,
        sum_formula: delta_sum(l, k)?,
        closed_form: delta_closed_form(l, k)?,
    })
}

/// `δ(l, k)`; the sum formula, after checking it against the recursion.
pub fn delta(l: usize, k: usize) -> Result<usize> {
    let v = delta_values(l, k)?;
    if v.recursion != v.sum_formula {
        return Err(Error::Domain(format!(
            "internal: delta recursion {} disagrees with sum formula {}",
            v.recursion, v.sum_formula
        )));
    }
    Ok(v.sum_formula)
}

/// `s(m, k) = 2([(m-k)/2] + 3)k + 1`.
pub fn s_dim(m: usize, k: usize) -> Result<usize> {
    if k < 3 || m < k {
        return Err(Error::Domain(format!("need m >= k >= 3, got m = {m}, k = {k}")));
    }
    Ok(2 * ((m - k) / 2 + 3) * k + 1)
}

/// `d(m, k) = s(m,k) + 2m + 2 - k + (k-1)/2 · q(q-1) + k(m+1)C(m+1,k)`,
/// `q = [2m/(k-1)]`.
pub fn d_dim(m: usize, k: usize) -> Result<usize> {
    let s = s_dim(m, k)?;
    let q = 2 * m / (k - 1);
    Ok(s + 2 * m + 2 - k + (k - 1) * (q * q.saturating_sub(1) / 2) + k * (m + 1) * binomial(m + 1, k))
}

/// `N₁ = C(n, k-1)`, the number of blocks of one local immersion.
pub fn n1(n: usize, k: usize) -> Result<usize> {
    if k < 1 || n + 1 < k {
        return Err(Error::Domain(format!("need n >= k - 1 >= 0, got n = {n}, k = {k}")));
    }
    Ok(binomial(n, k - 1))
}

/// `N̄₁ = N₁ · k · (n+1)`, the dimension of the assembled target.
pub fn n1_bar(n: usize, k: usize) -> Result<usize> {
    Ok(n1(n, k)? * k * (n + 1))
}

/// Certificate of one induction step `i -> i+1` of the staircase.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageCertificate {
    /// The new dimension `i + 1`.
    pub stage: usize,
    pub new_blocks: usize,
    /// `dim(span(new block pullbacks) ∩ Λ^{k-2}(V^i)* ∧ e*_{i+1})`.
    pub spanned: usize,
    /// `C(i, k-2)`.
    pub spanning_required: usize,
    pub regular_rank: usize,
    pub regular_required: usize,
}

impl StageCertificate {
    pub fn passed(&self) -> bool {
        self.spanned == self.spanning_required && self.regular_rank == self.regular_required
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularSubspace {
    pub l: usize,
    pub k: usize,
    pub delta: usize,
    /// `f^l : R^l -> R^{kδ}` as a `kδ × l` matrix.
    #[serde(serialize_with = "serialize_map")]
    pub map: LinearMap<Rational>,
    pub stages: Vec<StageCertificate>,
    pub certificate: RegularityCertificate,
}

fn serialize_map<S: serde::Serializer>(m: &LinearMap<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    text::matrix(&m.to_rows(), s)
}

/// Coefficient vectors (lexicographic `Λ^{k-1}(R^dim)*` basis) of the
/// pullbacks of all block `(k-1)`-covectors along `map`, for the given blocks.
fn block_pullbacks(map: &LinearMap<Rational>, k: usize, blocks: std::ops::Range<usize>) -> Vec<Vec<Rational>> {
    let dim = map.cols();
    let cols = IndexTuple::all(dim, k - 1);
    let mut out = Vec::new();
    for b in blocks {
        for sub in IndexTuple::all(k, k - 1) {
            let t = IndexTuple::new(sub.indices().iter().map(|r| b * k + r).collect(), map.rows()).expect("block tuple");
            let pb = AltForm::basis(map.rows(), t).expect("block tuple").pullback(map).expect("dimensions");
            out.push(cols.iter().map(|c| pb.coefficient(c)).collect());
        }
    }
    out
}

/// The inductive staircase embedding `f^l : R^l -> R^{kδ(l,k)}`.
///
/// Base: one block, the identity on `e_1..e_k`. Step `i -> i+1`: old blocks
/// send `e_{i+1}` to zero; `[i/(k-1)] + 1` new blocks each send `e_{i+1}` to
/// their first axis, and the `g`-th new block sends the `g`-th group of
/// `k-1` consecutive old basis vectors to its remaining axes in order. Every
/// stage is certified; the first failing one aborts the construction.
pub fn build_regular_subspace(l: usize, k: usize) -> Result<RegularSubspace> {
    build_staircase(l, k, true)
}

/// As [`build_regular_subspace`], but returns the stage log and final
/// certificate even when some stage fails.
pub fn staircase_report(l: usize, k: usize) -> Result<RegularSubspace> {
    build_staircase(l, k, false)
}

fn build_staircase(l: usize, k: usize, abort: bool) -> Result<RegularSubspace> {
    let total = delta(l, k)?;
    let mut map = LinearMap::zeros(k * total, l);
    for p in 0..k {
        map.set(p, p, Rational::one());
    }
    let mut used = 1;
    let mut stages = Vec::new();
    for i in k..l {
        let new_blocks = i / (k - 1) + 1;
        for g in 0..new_blocks {
            let block = used + g;
            map.set(block * k, i, Rational::one());
            for (r, p) in (g * (k - 1)..((g + 1) * (k - 1)).min(i)).enumerate() {
                map.set(block * k + r + 1, p, Rational::one());
            }
        }
        // certify on V^{i+1} = span(e_1..e_{i+1}), blocks used so far
        let rows_used = k * (used + new_blocks);
        let cols: Vec<usize> = (0..=i).collect();
        let sub = restrict(&map, rows_used, &cols);
        let new = block_pullbacks(&sub, k, used..used + new_blocks);
        let target: Vec<Vec<Rational>> = target_covectors(i, k);
        let r_new = rank_exact(&new);
        let r_target = rank_exact(&target);
        let r_union = rank_exact(&[new.clone(), target].concat());
        let spanned = r_new + r_target - r_union;
        let all = block_pullbacks(&sub, k, 0..used + new_blocks);
        let stage = StageCertificate {
            stage: i + 1,
            new_blocks,
            spanned,
            spanning_required: binomial(i, k - 2),
            regular_rank: rank_exact(&all),
            regular_required: binomial(i + 1, k - 1),
        };
        used += new_blocks;
        let failed = !stage.passed();
        if failed && abort {
            return Err(Error::StageFailed { stage: stage.stage, achieved: stage.spanned, required: stage.spanning_required });
        }
        stages.push(stage);
    }
    debug_assert_eq!(used, total);
    let certificate = is_regular(&standard_beta(total, k), &Subspace::image(&map)?)?;
    if abort && !certificate.regular {
        return Err(Error::StageFailed { stage: l, achieved: certificate.achieved_rank, required: certificate.required_rank });
    }
    Ok(RegularSubspace { l, k, delta: total, map, stages, certificate })
}

fn restrict(map: &LinearMap<Rational>, rows: usize, cols: &[usize]) -> LinearMap<Rational> {
    let data: Vec<Vec<Rational>> = (0..rows).map(|r| cols.iter().map(|&c| map.get(r, c).clone()).collect()).collect();
    LinearMap::from_rows(data).expect("rectangular")
}

/// Coefficient vectors of `e*_S ∧ e*_{i+1}` for all `(k-2)`-subsets `S` of
/// `{1..i}` (zero-based: subsets of `0..i`, wedged with index `i`).
fn target_covectors(i: usize, k: usize) -> Vec<Vec<Rational>> {
    let cols = IndexTuple::all(i + 1, k - 1);
    IndexTuple::all(i, k - 2)
        .into_iter()
        .map(|s| {
            let mut ix = s.indices().to_vec();
            ix.push(i);
            let t = IndexTuple::new(ix, i + 1).expect("sorted");
            cols.iter().map(|c| if *c == t { Rational::one() } else { Rational::zero() }).collect()
        })
        .collect()
}

/// A regular embedding `R^l -> R^{k·C(l,k-1)}` with one block per
/// `(k-1)`-subset `J`, sending `e_{J_r}` to the block axis `r + 1`. Each block
/// contributes exactly `e*_J`, so the image is regular for every `k`.
pub fn tuple_block_embedding(l: usize, k: usize) -> LinearMap<Rational> {
    let tuples = IndexTuple::all(l, k - 1);
    let mut map = LinearMap::zeros(k * tuples.len(), l);
    for (b, t) in tuples.iter().enumerate() {
        for (r, &p) in t.indices().iter().enumerate() {
            map.set(b * k + r + 1, p, Rational::one());
        }
    }
    map
}

/// How the regular part `s₁` was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegularSource {
    Staircase,
    TupleBlocks,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormalMonomorphism {
    pub m: usize,
    pub k: usize,
    pub l_reg: usize,
    pub regular_source: RegularSource,
    /// Blocks of the regular part, followed by one block per k-tuple.
    pub regular_blocks: usize,
    pub correction_blocks: usize,
    #[serde(serialize_with = "serialize_map")]
    pub s1: LinearMap<Rational>,
    #[serde(serialize_with = "serialize_map")]
    pub s2: LinearMap<Rational>,
    #[serde(serialize_with = "serialize_map")]
    pub s: LinearMap<Rational>,
    pub injective: bool,
    pub pullback_matches: bool,
    pub certificate: RegularityCertificate,
}

impl FormalMonomorphism {
    pub fn target_beta(&self) -> AltForm<Rational> {
        standard_beta(self.regular_blocks + self.correction_blocks, self.k)
    }
}

/// The pointwise section `s = (s₁, s₂)` with `s*β = g`.
///
/// `s₁` is a regular embedding of `R^{m+1}` (the first `m+1` basis vectors
/// of `V^{l_reg}`), `g₁ = g - s₁*β`, and `s₂` has one block per k-tuple `R`
/// with `∂_{r_1} ↦ g₁_R · e_1` and `∂_{r_l} ↦ e_l` for `l ≥ 2`, so that
/// `s₂*β = g₁` exactly.
pub fn formal_monomorphism(g: &AltForm<Rational>, l_reg: Option<usize>) -> Result<FormalMonomorphism> {
    let dim = g.dim();
    let k = g.degree();
    if dim < 2 || k < 3 || dim < k {
        return Err(Error::Domain(format!("need m + 1 >= k >= 3, got m + 1 = {dim}, k = {k}")));
    }
    let m = dim - 1;
    let l_reg = l_reg.unwrap_or(2 * m + 1);
    if l_reg < dim {
        return Err(Error::Domain(format!("l_reg = {l_reg} is smaller than m + 1 = {dim}")));
    }
    let (full, regular_source) = match build_regular_subspace(l_reg, k) {
        Ok(r) => (r.map, RegularSource::Staircase),
        Err(Error::StageFailed { .. }) => (tuple_block_embedding(l_reg, k), RegularSource::TupleBlocks),
        Err(e) => return Err(e),
    };
    let cols: Vec<usize> = (0..dim).collect();
    let s1 = full.select_columns(&cols);
    let regular_blocks = s1.rows() / k;
    let g1 = g.sub(&standard_beta(regular_blocks, k).pullback(&s1)?)?;

    let tuples = IndexTuple::all(dim, k);
    let mut s2 = LinearMap::zeros(k * tuples.len(), dim);
    for (b, t) in tuples.iter().enumerate() {
        let ix = t.indices();
        s2.set(b * k, ix[0], g1.coefficient(t));
        for (r, &p) in ix.iter().enumerate().skip(1) {
            s2.set(b * k + r, p, Rational::one());
        }
    }
    let s = s1.stack(&s2)?;
    let beta = standard_beta(regular_blocks + tuples.len(), k);
    let pullback_matches = beta.pullback(&s)? == *g;
    let injective = rank_exact(&s.to_rows()) == dim;
    let certificate = is_regular(&beta, &Subspace::image(&s)?)?;
    Ok(FormalMonomorphism {
        m,
        k,
        l_reg,
        regular_source,
        regular_blocks,
        correction_blocks: tuples.len(),
        s1,
        s2,
        s,
        injective,
        pullback_matches,
        certificate,
    })
}
