//! Immersions pulling the block form back to a prescribed exact form.
//!
//! Local step: a `(k-1)`-form `Σ_J λ_J dx^J` on a chart is the pullback of
//! `γ = Σ_J x¹_J dx²_J ∧ … ∧ dx^k_J` under the map whose block `J` is
//! `(λ_J, x^{j_1}, …, x^{j_{k-1}})`. Global step: on every ball of family `i`
//! the local map of `ρ_i φ` is multiplied by the cutoff `χ_i`; the pieces of
//! a family have disjoint supports and are added, and the `n + 1` families
//! are stacked. Since `χ_i = 1` on `supp ρ_i`, `f*β = Σ_i d(ρ_i φ) = dφ`.

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::covering::{local_coordinates, nash_cover, sample_complex, tangent_frame, Chart, CoverageReport, NashCovering};
use crate::error::{Error, Result};
use crate::forms::{DifferentialForm, SmoothMap};
use crate::linalg;
use crate::multilinear::{standard_beta, AltForm, LinearMap};
use crate::regularity::numeric_regularity;
use crate::sampling::LowDiscrepancy;
use crate::scalar::{format_rational, rational_floor, Rational, Scalar};
use crate::smoothfn::{Evaluator, SmoothFn};
use crate::tuple::{binomial, IndexTuple};

/// Relative singular-value threshold for numerical rank.
pub const RANK_TOL: f64 = 1e-8;

/// `γ` on `R^{blocks·k}`: `Σ_b x^{bk} dx^{bk+1} ∧ … ∧ dx^{bk+k-1}`.
pub fn gamma_form(blocks: usize, k: usize) -> Result<DifferentialForm> {
    if blocks == 0 || k == 0 {
        return Err(Error::Domain(format!("gamma needs at least one block of width >= 1, got ({blocks}, {k})")));
    }
    let dim = blocks * k;
    DifferentialForm::from_terms(
        dim,
        k - 1,
        (0..blocks).map(|b| (IndexTuple::new((b * k + 1..(b + 1) * k).collect(), dim).expect("block in range"), SmoothFn::var(dim, b * k))),
    )
}

/// The block table `θ`: block `b` is the `b`-th `(k-1)`-subset of the chart
/// coordinates in lexicographic order.
pub fn block_tuples(n: usize, k: usize) -> Vec<IndexTuple> {
    IndexTuple::all(n, k - 1)
}

#[derive(Clone, Debug)]
pub struct LocalImmersion {
    /// `(family, index)` when built from a covering ball.
    pub ball: Option<(usize, usize)>,
    pub chart: Option<Chart>,
    pub k: usize,
    pub blocks: Vec<IndexTuple>,
    pub map: SmoothMap,
    pub phi: DifferentialForm,
}

/// The local map of a `(k-1)`-form `φ` on an `n`-chart, `n ≥ k - 1`.
pub fn local_immersion(phi: &DifferentialForm) -> Result<LocalImmersion> {
    let n = phi.dim();
    let k = phi.degree() + 1;
    if phi.degree() == 0 {
        return Err(Error::DegreeZero);
    }
    if n < k - 1 {
        return Err(Error::Domain(format!("a {}-form on R^{n} has no coordinate blocks", k - 1)));
    }
    let blocks = block_tuples(n, k);
    let components = blocks
        .iter()
        .flat_map(|j| {
            std::iter::once(phi.coefficient(j)).chain(j.indices().iter().map(|&a| SmoothFn::var(n, a))).collect::<Vec<_>>()
        })
        .collect();
    Ok(LocalImmersion { ball: None, chart: None, k, blocks, map: SmoothMap::new(n, components)?, phi: phi.clone() })
}

impl LocalImmersion {
    pub fn gamma(&self) -> DifferentialForm {
        gamma_form(self.blocks.len(), self.k).expect("nonempty block table")
    }

    /// `f*γ - φ`; identically zero (exactly, for polynomial `φ`).
    pub fn pullback_defect(&self) -> Result<DifferentialForm> {
        self.gamma().pullback(&self.map)?.sub(&self.phi)
    }

    /// `Φ_m` applied to every block.
    pub fn shrink(&self, m: u32) -> Result<LocalImmersion> {
        let translations = vec![Rational::zero(); self.map.target_dim()];
        let map = SmoothMap::new(self.map.source_dim(), shrink_components(self.map.components(), self.k, m, &translations)?)?;
        Ok(LocalImmersion { map, ..self.clone() })
    }
}

/// `Φ_m` as a matrix on one block: `diag(1/m, m, 1, …, 1)`.
pub fn phi_m_matrix(k: usize, m: u32) -> Result<LinearMap<Rational>> {
    if m == 0 {
        return Err(Error::Domain("shrink factor m must be >= 1".into()));
    }
    let mut l = LinearMap::identity(k);
    let m = Rational::from_i64(m as i64);
    l.set(0, 0, m.recip());
    if k > 1 {
        l.set(1, 1, m);
    }
    Ok(l)
}

/// Componentwise `x ↦ Φ_m(x - t)` per block of width `k` (`t` vanishes on
/// the first slot of each block).
fn shrink_components(components: &[SmoothFn], k: usize, m: u32, translations: &[Rational]) -> Result<Vec<SmoothFn>> {
    if m == 0 {
        return Err(Error::Domain("shrink factor m must be >= 1".into()));
    }
    let mr = Rational::from_i64(m as i64);
    let inv = mr.recip();
    Ok(components
        .iter()
        .zip(translations)
        .enumerate()
        .map(|(c, (f, t))| {
            let arity = f.arity();
            let moved = if t.is_zero() { f.clone() } else { f.sub(&SmoothFn::constant(arity, t.clone())) };
            match c % k {
                0 if m != 1 => moved.scale(&inv),
                1 if m != 1 => moved.scale(&mr),
                _ => moved,
            }
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ShrinkInfo {
    pub m: u32,
    /// Ball radius the refinement aims for (`1/m²`).
    pub target_piece_radius: f64,
    pub achieved_piece_radius: f64,
    pub added_subdivisions: usize,
    pub refinement_note: String,
    /// Image radius before the transform, measured at the same samples.
    pub radius_before: f64,
    #[serde(serialize_with = "crate::scalar::text::vector")]
    pub translations: Vec<Rational>,
}

#[derive(Clone, Debug)]
pub struct AssembledImmersion {
    pub covering: NashCovering,
    pub n: usize,
    pub k: usize,
    /// Primitive, in ambient coordinates.
    pub phi: DifferentialForm,
    /// Target form (`dφ` unless given).
    pub omega: DifferentialForm,
    pub blocks: Vec<IndexTuple>,
    pub charts: Vec<Vec<Chart>>,
    /// Map from the ambient space to `R^{N₁ k (n+1)}`.
    pub map: SmoothMap,
    pub shrink: Option<ShrinkInfo>,
}

impl AssembledImmersion {
    /// `N₁ = C(n, k-1)`.
    pub fn blocks_per_family(&self) -> usize {
        self.blocks.len()
    }

    pub fn target_dim(&self) -> usize {
        self.map.target_dim()
    }

    /// `β = standard_beta(N₁ (n+1), k)`.
    pub fn beta(&self) -> AltForm<Rational> {
        standard_beta(self.blocks.len() * (self.n + 1), self.k)
    }

    /// `γ` on the whole target, `dγ = β`.
    pub fn gamma(&self) -> DifferentialForm {
        gamma_form(self.blocks.len() * (self.n + 1), self.k).expect("nonempty block table")
    }

    /// Coordinate rows (all slots but the first of each block) of family `i`.
    pub fn family_coordinate_rows(&self, i: usize) -> Vec<usize> {
        let per = self.blocks.len() * self.k;
        (i * per..(i + 1) * per).filter(|c| c % self.k != 0).collect()
    }

    /// The same immersion with one block's components replaced by zero
    /// (fault injection for the checker).
    pub fn with_zeroed_block(&self, block: usize) -> Result<AssembledImmersion> {
        let d = self.map.source_dim();
        let mut comps = self.map.components().to_vec();
        if (block + 1) * self.k > comps.len() {
            return Err(Error::Domain(format!("block {block} out of range")));
        }
        for c in &mut comps[block * self.k..(block + 1) * self.k] {
            *c = SmoothFn::zero(d);
        }
        Ok(AssembledImmersion { map: SmoothMap::new(d, comps)?, ..self.clone() })
    }
}

fn chart_form(phi: &DifferentialForm, chart: &Chart, blocks: &[IndexTuple]) -> Vec<SmoothFn> {
    let basis = chart.basis();
    let d = phi.dim();
    let identity = basis.len() == basis.first().map_or(0, Vec::len)
        && basis.iter().enumerate().all(|(r, row)| row.iter().enumerate().all(|(c, v)| if r == c { v.is_one() } else { v.is_zero() }));
    blocks
        .iter()
        .map(|j| {
            if identity {
                return phi.coefficient(j);
            }
            SmoothFn::sum(
                d,
                phi.terms().filter_map(|(kk, f)| {
                    let minor: Vec<Vec<Rational>> =
                        kk.indices().iter().map(|&r| j.indices().iter().map(|&c| basis[r][c].clone()).collect()).collect();
                    let det = linalg::det(minor);
                    (!det.is_zero()).then(|| f.scale(&det))
                }),
            )
        })
        .collect()
}

/// Cutoff-extended local maps of all balls, stacked by family.
pub fn assemble(covering: &NashCovering, phi: &DifferentialForm, omega: Option<&DifferentialForm>) -> Result<AssembledImmersion> {
    let complex = &covering.complex;
    let n = complex.dim();
    let d = complex.ambient_dim();
    if phi.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: phi.dim() });
    }
    if phi.degree() == 0 {
        return Err(Error::DegreeZero);
    }
    let k = phi.degree() + 1;
    if n < k - 1 {
        return Err(Error::Domain(format!("a {}-form on a {n}-complex has no coordinate blocks", k - 1)));
    }
    if covering.coverage.gaps > 0 {
        return Err(Error::CoverageGap { point: Vec::new(), subdivisions: covering.subdivisions });
    }
    let omega = match omega {
        Some(w) if w.dim() != d || w.degree() != k => return Err(Error::DegreeMismatch { expected: k, found: w.degree() }),
        Some(w) => w.clone(),
        None => phi.exterior_d()?,
    };
    let blocks = block_tuples(n, k);
    let charts: Vec<Vec<Chart>> = covering
        .families
        .iter()
        .map(|f| f.iter().map(|b| local_coordinates(complex, b)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    // coefficient functions are shared across balls with the same frame
    let shared_identity = chart_form(phi, &Chart::Torus { origin: vec![Rational::zero(); d] }, &blocks);
    let mut components = Vec::with_capacity(blocks.len() * k * (n + 1));
    for (family, charts) in covering.families.iter().zip(&charts) {
        let mut slots: Vec<Vec<SmoothFn>> = vec![Vec::new(); blocks.len() * k];
        for (ball, chart) in family.iter().zip(charts) {
            let coords = chart.coordinates();
            let psi = match chart {
                Chart::Torus { .. } => shared_identity.clone(),
                Chart::Flat { .. } if d == n => shared_identity.clone(),
                Chart::Flat { .. } => chart_form(phi, chart, &blocks),
            };
            let rho = ball.bump.mul(&covering.inv_total);
            for (b, j) in blocks.iter().enumerate() {
                slots[b * k].push(SmoothFn::product(d, [ball.chi.clone(), rho.clone(), psi[b].clone()]));
                for (r, &a) in j.indices().iter().enumerate() {
                    slots[b * k + r + 1].push(ball.chi.mul(&coords[a]));
                }
            }
        }
        components.extend(slots.into_iter().map(|terms| SmoothFn::sum(d, terms)));
    }
    Ok(AssembledImmersion {
        covering: covering.clone(),
        n,
        k,
        phi: phi.clone(),
        omega,
        blocks,
        charts,
        map: SmoothMap::new(d, components)?,
        shrink: None,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyParams {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams { samples: 1000, tol: 1e-6, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub rank_tol: f64,
    pub source_dim: usize,
    pub target_dim: usize,
    pub degree: usize,
    pub max_residual: f64,
    pub residual_argmax: Vec<f64>,
    /// Samples with residual at or above `tol`.
    pub failing_samples: usize,
    pub min_rank: usize,
    pub required_rank: usize,
    pub min_singular_value: f64,
    /// Minimum over samples of the rank of the coordinate rows of the
    /// first family with `ρ_i > 0`.
    pub min_family_rank: usize,
    pub image_radius: f64,
    pub partition_residual: f64,
    /// Samples where some `ρ_i > 0` but `χ_i ≠ 1`.
    pub support_violations: usize,
    /// `max |Σ_i d(ρ_i φ) - ω|` over samples.
    pub dphi_sum_residual: f64,
    pub coverage: CoverageReport,
    pub residual_pass: bool,
    pub rank_pass: bool,
    pub pass: bool,
}

struct SampleStats {
    point: Vec<f64>,
    residual: f64,
    rank: usize,
    min_sv: f64,
    family_rank: usize,
    radius: f64,
    partition: f64,
    violation: bool,
    dphi: f64,
}

fn matmul_cols(j: &[Vec<f64>], e: &[Vec<f64>]) -> Vec<Vec<f64>> {
    linalg::matmul(j, e)
}

/// Samples `f*β - ω` (on tangent planes of the complex), the Jacobian rank
/// and the partition/cutoff invariants.
pub fn verify(a: &AssembledImmersion, omega: &DifferentialForm, params: &VerifyParams) -> Result<VerificationReport> {
    let complex = &a.covering.complex;
    let d = complex.ambient_dim();
    if omega.dim() != d || omega.degree() != a.k {
        return Err(Error::DegreeMismatch { expected: a.k, found: omega.degree() });
    }
    let beta = a.beta().to_f64();
    let frames: Vec<Vec<Vec<f64>>> = (0..complex.simplices().len()).map(|s| tangent_frame(complex, s)).collect();
    let pieces: Vec<DifferentialForm> = a.covering.rho.iter().map(|r| a.phi.multiply(r)).collect();
    let family_rows: Vec<Vec<usize>> = (0..=a.n).map(|i| a.family_coordinate_rows(i)).collect();
    let samples = sample_complex(complex, params.samples, params.seed);
    let stats: Vec<SampleStats> = samples
        .par_iter()
        .map(|(s, p)| {
            let e = &frames[*s];
            let (value, jac) = a.map.jet(p);
            let je = matmul_cols(&jac, e);
            let pulled = beta.pullback(&LinearMap::from_rows(je.clone()).expect("rectangular")).expect("dimensions fit");
            let ef = LinearMap::from_rows(e.clone()).expect("rectangular");
            let target = omega.eval_at(p).pullback(&ef).expect("dimensions fit");
            let residual = pulled.max_abs_diff(&target);
            let sv = linalg::singular_values(&je);
            let rank = linalg::numeric_rank(&sv, RANK_TOL);
            let mut ev = Evaluator::new(p);
            let rho: Vec<f64> = a.covering.rho.iter().map(|r| ev.value(r)).collect();
            let chi: Vec<f64> = a.covering.chi.iter().map(|c| ev.value(c)).collect();
            let family_rank = rho
                .iter()
                .position(|r| *r > 0.0)
                .map_or(0, |i| {
                    let rows: Vec<Vec<f64>> = family_rows[i].iter().map(|&r| je[r].clone()).collect();
                    linalg::numeric_rank(&linalg::singular_values(&rows), RANK_TOL)
                });
            let violation = rho.iter().zip(&chi).any(|(r, c)| *r > 0.0 && (c - 1.0).abs() > 1e-12);
            let mut dsum = AltForm::zero(d, a.k);
            for piece in &pieces {
                dsum = dsum.add(&piece.d_at(p)).expect("same shape");
            }
            let dphi = dsum.pullback(&ef).expect("dimensions fit").max_abs_diff(&target);
            SampleStats {
                point: p.clone(),
                residual: if residual.is_nan() { f64::INFINITY } else { residual },
                rank,
                min_sv: sv.get(complex.dim().saturating_sub(1)).copied().unwrap_or(0.0),
                family_rank,
                radius: value.iter().map(|v| v * v).sum::<f64>().sqrt(),
                partition: (rho.iter().sum::<f64>() - 1.0).abs(),
                violation,
                dphi,
            }
        })
        .collect();
    let worst = stats.iter().max_by(|x, y| x.residual.total_cmp(&y.residual));
    let n = complex.dim();
    let max_residual = worst.map_or(0.0, |w| w.residual);
    let min_rank = stats.iter().map(|s| s.rank).min().unwrap_or(n);
    let residual_pass = max_residual < params.tol;
    let rank_pass = min_rank == n;
    Ok(VerificationReport {
        samples: stats.len(),
        seed: params.seed,
        tol: params.tol,
        rank_tol: RANK_TOL,
        source_dim: n,
        target_dim: a.target_dim(),
        degree: a.k,
        max_residual,
        residual_argmax: worst.map_or_else(Vec::new, |w| w.point.clone()),
        // NaN residuals count as failing
        failing_samples: stats.iter().filter(|s| !s.residual.lt(&params.tol)).count(),
        min_rank,
        required_rank: n,
        min_singular_value: stats.iter().map(|s| s.min_sv).fold(f64::INFINITY, f64::min),
        min_family_rank: stats.iter().map(|s| s.family_rank).min().unwrap_or(n),
        image_radius: stats.iter().map(|s| s.radius).fold(0.0, f64::max),
        partition_residual: stats.iter().map(|s| s.partition).fold(0.0, f64::max),
        support_violations: stats.iter().filter(|s| s.violation).count(),
        dphi_sum_residual: stats.iter().map(|s| s.dphi).fold(0.0, f64::max),
        coverage: a.covering.coverage.clone(),
        residual_pass,
        rank_pass,
        pass: residual_pass && rank_pass,
    })
}

/// Largest `|f(p)|` over the sample set.
pub fn image_radius(a: &AssembledImmersion, samples: usize, seed: u64) -> f64 {
    sample_complex(&a.covering.complex, samples, seed)
        .par_iter()
        .map(|(_, p)| a.map.eval(p).iter().map(|v| v * v).sum::<f64>().sqrt())
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkParams {
    /// Refinement stops before the complex would exceed this many simplices.
    pub max_simplices: usize,
    /// Samples used for translations and radii.
    pub samples: usize,
    pub seed: u64,
}

impl Default for ShrinkParams {
    fn default() -> Self {
        ShrinkParams { max_simplices: 20_000, samples: 1000, seed: 0 }
    }
}

/// Refines the covering towards balls of radius `1/m²` (as far as the
/// simplex budget and coverage allow), reassembles, centres every block's
/// coordinate slots at their sampled bounding box and applies `Φ_m`.
pub fn shrink(a: &AssembledImmersion, m: u32, params: &ShrinkParams) -> Result<AssembledImmersion> {
    if m == 0 {
        return Err(Error::Domain("shrink factor m must be >= 1".into()));
    }
    let radius_before = image_radius(a, params.samples, params.seed);
    if m == 1 {
        let mut out = a.clone();
        out.shrink = Some(ShrinkInfo {
            m,
            target_piece_radius: 1.0,
            achieved_piece_radius: a.covering.max_radius(),
            added_subdivisions: 0,
            refinement_note: "identity".into(),
            radius_before,
            translations: vec![Rational::zero(); a.target_dim()],
        });
        return Ok(out);
    }
    let target = 1.0 / (m as f64 * m as f64);
    let mut covering = a.covering.clone();
    let mut added = 0;
    let fact: usize = (1..=a.n + 1).product();
    let note = loop {
        if covering.max_radius() <= target {
            break "target radius reached".to_string();
        }
        let next_size = covering.complex.simplices().len() * fact;
        if next_size > params.max_simplices {
            break format!("stopped: subdivision would need {next_size} simplices (budget {})", params.max_simplices);
        }
        let finer = covering.complex.barycentric_subdivide()?;
        let cover_params = crate::covering::CoverParams { max_subdivisions: 0, ..covering.params.clone() };
        match nash_cover(&finer, &cover_params) {
            Ok(c) => {
                covering = c;
                added += 1;
            }
            Err(e) => break format!("stopped: refined covering rejected ({e})"),
        }
    };
    let base = if added == 0 { a.clone() } else { assemble(&covering, &a.phi, Some(&a.omega))? };
    let samples = sample_complex(&base.covering.complex, params.samples, params.seed);
    let values: Vec<Vec<f64>> = samples.par_iter().map(|(_, p)| base.map.eval(p)).collect();
    let translations: Vec<Rational> = (0..base.target_dim())
        .map(|c| {
            if c % base.k == 0 {
                return Rational::zero();
            }
            let lo = values.iter().map(|v| v[c]).fold(f64::INFINITY, f64::min);
            let hi = values.iter().map(|v| v[c]).fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() && hi.is_finite() {
                rational_floor((lo + hi) / 2.0, 40)
            } else {
                Rational::zero()
            }
        })
        .collect();
    let comps = shrink_components(base.map.components(), base.k, m, &translations)?;
    Ok(AssembledImmersion {
        map: SmoothMap::new(base.map.source_dim(), comps)?,
        shrink: Some(ShrinkInfo {
            m,
            target_piece_radius: target,
            achieved_piece_radius: base.covering.max_radius(),
            added_subdivisions: added,
            refinement_note: note,
            radius_before,
            translations,
        }),
        ..base
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphRegularityReport {
    pub samples: usize,
    pub chart_dim: usize,
    pub fiber_dim: usize,
    pub degree: usize,
    pub required_rank: usize,
    pub min_rank: usize,
    pub min_singular_value: f64,
    pub max_condition: f64,
    /// `max |dβ̂ - (p*β - p*g)|` at the sampled graph points.
    pub primitive_residual: f64,
    pub regular: bool,
}

/// Checks that the graph map `F = (id, f)` of a local immersion is
/// `dβ̂`-regular, where `dβ̂ = p*β - p*g` on the product chart and `β̂` is
/// the homotopy primitive at `center`.
pub fn graph_regularity_check(f: &LocalImmersion, g: &DifferentialForm, samples: usize, seed: u64) -> Result<GraphRegularityReport> {
    let n = f.map.source_dim();
    let fiber = f.map.target_dim();
    let k = f.k;
    if g.dim() != n || g.degree() != k {
        return Err(Error::DegreeMismatch { expected: k, found: g.degree() });
    }
    let center_f = vec![0.0; n];
    g.check_closed(&center_f)?;
    let total = n + fiber;
    let pts: Vec<Vec<f64>> = LowDiscrepancy::new(n, seed).take_points(samples).into_iter().map(|u| u.iter().map(|x| x - 0.5).collect()).collect();
    for p in &pts {
        let sv = f.map.jacobian_singular_values(p);
        let rank = linalg::numeric_rank(&sv, RANK_TOL);
        if rank < n {
            return Err(Error::NotImmersion { point: p.clone(), rank, required: n });
        }
    }
    // p*β on the fiber coordinates minus p*g on the chart coordinates
    let beta = standard_beta(fiber / k, k);
    let shifted = DifferentialForm::from_terms(
        total,
        k,
        beta.terms().map(|(t, c)| {
            (IndexTuple::new(t.indices().iter().map(|i| i + n).collect(), total).expect("in range"), SmoothFn::constant(total, c.clone()))
        }),
    )?;
    let closed = shifted.sub(&g.widen(total))?;
    let hat = closed.homotopy_operator(&vec![Rational::zero(); total])?;
    let d_hat = hat.exterior_d()?;
    let graph = SmoothMap::new(n, (0..n).map(|i| SmoothFn::var(n, i)).chain(f.map.components().iter().cloned()).collect())?;
    let stats: Vec<(usize, f64, f64, f64)> = pts
        .par_iter()
        .map(|p| {
            let (y, jac) = graph.jet(p);
            let form = d_hat.eval_at(&y);
            let residual = form.max_abs_diff(&closed.eval_at(&y));
            let basis = LinearMap::from_rows(jac).expect("rectangular");
            let r = numeric_regularity(&form, &basis, RANK_TOL).expect("dimensions fit");
            (r.achieved_rank, r.smallest_singular_value, r.condition, residual)
        })
        .collect();
    let required = binomial(n, k - 1);
    let min_rank = stats.iter().map(|s| s.0).min().unwrap_or(0);
    Ok(GraphRegularityReport {
        samples: stats.len(),
        chart_dim: n,
        fiber_dim: fiber,
        degree: k,
        required_rank: required,
        min_rank,
        min_singular_value: stats.iter().map(|s| s.1).fold(f64::INFINITY, f64::min),
        max_condition: stats.iter().map(|s| s.2).fold(0.0, f64::max),
        primitive_residual: stats.iter().map(|s| s.3).fold(0.0, f64::max),
        regular: min_rank == required && !stats.is_empty(),
    })
}

/// Text form of the shrink translations, for reports.
pub fn translations_text(info: &ShrinkInfo) -> Vec<String> {
    info.translations.iter().map(format_rational).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covering::{nash_cover, CoverParams, SimplicialComplex};
    use crate::fixtures::{standard_simplex, tetrahedron_boundary};
    use crate::scalar::int;
    use crate::smoothfn::parse;

    fn form(dim: usize, terms: &[(&[usize], &str)]) -> DifferentialForm {
        let degree = terms[0].0.len();
        DifferentialForm::from_terms(
            dim,
            degree,
            terms.iter().map(|(t, e)| (IndexTuple::new(t.to_vec(), dim).unwrap(), parse(e, dim).unwrap())),
        )
        .unwrap()
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_form(1, 3).unwrap();
        assert_eq!(g.to_string(), "x1 dx2^dx3");
        let d = gamma_form(3, 3).unwrap().exterior_d().unwrap();
        assert_eq!(d.terms().count(), 3);
        assert!(d.terms().all(|(_, c)| c.as_poly().and_then(|p| p.as_constant()) == Some(int(1))));
        for (blocks, k) in [(1, 2), (2, 3), (4, 4), (2, 5)] {
            let d = gamma_form(blocks, k).unwrap().exterior_d().unwrap();
            assert!(d.sub(&DifferentialForm::constant(&standard_beta(blocks, k))).unwrap().is_zero());
        }
    }

    #[test]
    fn local_immersion_examples() {
        let phi = form(3, &[(&[1, 2], "x1")]);
        let f = local_immersion(&phi).unwrap();
        let comps: Vec<String> = f.map.components().iter().map(|c| c.to_string()).collect();
        assert_eq!(comps, ["0", "x1", "x2", "0", "x1", "x3", "x1", "x2", "x3"]);
        assert!(f.pullback_defect().unwrap().is_zero());
        let zero = local_immersion(&DifferentialForm::zero(3, 2)).unwrap();
        assert!(zero.pullback_defect().unwrap().is_zero());
        assert_eq!(linalg::numeric_rank(&zero.map.jacobian_singular_values(&[0.1, 0.2, 0.3]), RANK_TOL), 3);
        assert!(local_immersion(&DifferentialForm::zero(2, 3)).is_err());
    }

    #[test]
    fn block_form_is_shrink_invariant() {
        let vol = standard_beta(1, 3);
        for m in [1, 2, 5, 10] {
            assert_eq!(vol.pullback(&phi_m_matrix(3, m).unwrap()).unwrap(), vol);
        }
        assert!(phi_m_matrix(3, 0).is_err());
        let phi = form(3, &[(&[0, 2], "x2^2"), (&[1, 2], "x1*x3")]);
        let f = local_immersion(&phi).unwrap().shrink(5).unwrap();
        assert!(f.pullback_defect().unwrap().is_zero());
    }

    #[test]
    fn simplex_pipeline_is_exact_up_to_roundoff() {
        let cover = nash_cover(&standard_simplex(3), &CoverParams::default()).unwrap();
        let phi = form(3, &[(&[0, 1], "x3^2 - x1"), (&[1, 2], "x1*x2")]);
        let a = assemble(&cover, &phi, None).unwrap();
        assert_eq!(a.target_dim(), 36);
        let r = verify(&a, &a.omega, &VerifyParams::default()).unwrap();
        assert!(r.pass && r.max_residual < 1e-12, "{r:?}");
        assert_eq!(r.support_violations, 0);
        assert_eq!(r.min_family_rank, 3);
        let zero = assemble(&cover, &DifferentialForm::zero(3, 2), None).unwrap();
        let r = verify(&zero, &zero.omega, &VerifyParams { samples: 200, ..Default::default() }).unwrap();
        assert!(r.pass && r.max_residual == 0.0);
    }

    #[test]
    fn corrupted_block_is_detected() {
        let cover = nash_cover(&standard_simplex(2), &CoverParams::default()).unwrap();
        let phi = form(2, &[(&[1], "x1^2 + 1")]);
        let a = assemble(&cover, &phi, None).unwrap();
        let bad = a.with_zeroed_block(3).unwrap();
        let r = verify(&bad, &a.omega, &VerifyParams { samples: 300, ..Default::default() }).unwrap();
        assert!(!r.pass && r.max_residual > 1e-3);
        assert!(r.failing_samples < r.samples);
    }

    #[test]
    fn tilted_triangle_uses_tangent_frame() {
        let v = vec![vec![int(0), int(0), int(0)], vec![int(2), int(1), int(0)], vec![int(0), int(1), int(3)]];
        let k = SimplicialComplex::new(2, v, vec![vec![0, 1, 2]], vec![]).unwrap();
        let cover = nash_cover(&k, &CoverParams::default()).unwrap();
        let phi = form(3, &[(&[0], "x2*x3"), (&[2], "x1^2")]);
        let a = assemble(&cover, &phi, None).unwrap();
        let r = verify(&a, &a.omega, &VerifyParams { samples: 300, ..Default::default() }).unwrap();
        assert!(r.pass && r.max_residual < 1e-10, "{r:?}");
    }

    #[test]
    fn curved_stars_are_rejected() {
        let cover = nash_cover(&tetrahedron_boundary(), &CoverParams::default()).unwrap();
        let phi = form(3, &[(&[0, 1], "x3")]);
        assert!(matches!(assemble(&cover, &phi, None), Err(Error::CurvedChart { .. })));
    }

    #[test]
    fn graph_regularity_examples() {
        // chart × interval: R^4
        let phi = form(4, &[(&[1, 2], "x1")]);
        let f = local_immersion(&phi).unwrap();
        let g = phi.exterior_d().unwrap();
        let r = graph_regularity_check(&f, &g, 20, 0).unwrap();
        assert!(r.regular && r.required_rank == 6, "{r:?}");
        assert!(r.primitive_residual < 1e-12);
        let r0 = graph_regularity_check(&f, &DifferentialForm::zero(4, 3), 20, 0).unwrap();
        assert!(r0.regular);
        let constant = LocalImmersion { map: SmoothMap::new(4, vec![SmoothFn::zero(4); 18]).unwrap(), ..f.clone() };
        assert!(matches!(graph_regularity_check(&constant, &g, 5, 0), Err(Error::NotImmersion { .. })));
        let not_closed = form(4, &[(&[0, 1, 2], "x4")]);
        assert!(matches!(graph_regularity_check(&f, &not_closed, 5, 0), Err(Error::NotClosed { .. })));
    }
}
