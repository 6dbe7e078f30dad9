//! Simplicial complexes and the covering by `n + 1` families of disjoint
//! balls: family `i` has one ball per `i`-face, centred at its barycenter.
//!
//! Radii are `c · (minimal same-family barycenter distance)`, so each family
//! is disjoint by construction (checked exactly in rationals). Coverage is
//! certified by sampling every top simplex; on a gap the builder retries on
//! the barycentric subdivision.
//!
//! Per ball of radius `r` there are two cutoffs: `b = bump(σ_ρ r/2, σ_ρ r)`
//! feeding the partition of unity `ρ_i = B_i / Σ_l B_l` (`B_i` the sum over
//! family `i`), and `χ = bump(σ_ρ r, σ_χ r)`, which is `1` on the support of
//! `b`. A point is covered when it lies within `σ_ρ r` of some ball center.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sampling::{combine, cube_to_barycentric, LowDiscrepancy};
use crate::scalar::{format_rational, parse_rational, rational_floor, rational_from_f64, Rational, Scalar};
use crate::smoothfn::{wrap_unit, Evaluator, SmoothFn};

fn round_half_up(x: &Rational) -> Rational {
    (x + Rational::new(1.into(), 2.into())).floor()
}

/// A pure simplicial complex realized in `R^d`, optionally with unit-periodic
/// axes (flat tori).
#[derive(Clone, Debug, PartialEq)]
pub struct SimplicialComplex {
    dim: usize,
    vertices: Vec<Vec<Rational>>,
    simplices: Vec<Vec<usize>>,
    periodic: Vec<bool>,
    vertices_f: Vec<Vec<f64>>,
}

impl SimplicialComplex {
    pub fn new(dim: usize, vertices: Vec<Vec<Rational>>, simplices: Vec<Vec<usize>>, periodic: Vec<bool>) -> Result<Self> {
        let ambient = vertices.first().map_or(0, Vec::len);
        if vertices.is_empty() || simplices.is_empty() {
            return Err(Error::InvalidComplex("no vertices or no simplices".into()));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != ambient) {
            return Err(Error::InvalidComplex(format!("vertex with {} coordinates in R^{ambient}", v.len())));
        }
        if !periodic.is_empty() && periodic.len() != ambient {
            return Err(Error::InvalidComplex(format!("{} periodic flags for R^{ambient}", periodic.len())));
        }
        if ambient < dim {
            return Err(Error::InvalidComplex(format!("{dim}-complex in R^{ambient}")));
        }
        let periodic = if periodic.is_empty() { vec![false; ambient] } else { periodic };
        let mut simplices = simplices;
        for s in &mut simplices {
            s.sort_unstable();
            if s.len() != dim + 1 || s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidComplex(format!("simplex {s:?} is not a {dim}-simplex")));
            }
            if let Some(&bad) = s.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::InvalidComplex(format!("vertex index {bad} out of range")));
            }
        }
        let vertices_f = vertices.iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect();
        let k = SimplicialComplex { dim, vertices, simplices, periodic, vertices_f };
        if dim > 0 {
            let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
            for s in &k.simplices {
                for skip in 0..s.len() {
                    let mut r = s.clone();
                    r.remove(skip);
                    *ridges.entry(r).or_insert(0) += 1;
                }
            }
            if let Some((r, c)) = ridges.iter().find(|(_, &c)| c > 2) {
                return Err(Error::InvalidComplex(format!("face {r:?} shared by {c} simplices")));
            }
            for s in &k.simplices {
                let pts = k.unwrapped(s);
                let edges: Vec<Vec<Rational>> =
                    pts[1..].iter().map(|p| p.iter().zip(&pts[0]).map(|(a, b)| a - b).collect()).collect();
                if linalg::rank_exact(&edges) != dim {
                    return Err(Error::DegenerateSimplex { simplex: s.clone() });
                }
            }
        }
        Ok(k)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    pub fn vertices_f64(&self) -> &[Vec<f64>] {
        &self.vertices_f
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic.iter().any(|&p| p)
    }

    /// Vertex positions of `face`, unwrapped on periodic axes to the images
    /// nearest the first vertex.
    pub fn unwrapped(&self, face: &[usize]) -> Vec<Vec<Rational>> {
        let base = &self.vertices[face[0]];
        face.iter()
            .map(|&v| {
                self.vertices[v]
                    .iter()
                    .zip(base)
                    .zip(&self.periodic)
                    .map(|((x, b), &p)| if p { x - round_half_up(&(x - b)) } else { x.clone() })
                    .collect()
            })
            .collect()
    }

    pub fn unwrapped_f64(&self, face: &[usize]) -> Vec<Vec<f64>> {
        let base = &self.vertices_f[face[0]];
        face.iter()
            .map(|&v| {
                self.vertices_f[v]
                    .iter()
                    .zip(base)
                    .zip(&self.periodic)
                    .map(|((x, b), &p)| if p { b + wrap_unit(x - b) } else { *x })
                    .collect()
            })
            .collect()
    }

    /// Barycenter, reduced into `[0, 1)` on periodic axes.
    pub fn barycenter(&self, face: &[usize]) -> Vec<Rational> {
        let pts = self.unwrapped(face);
        let n = Rational::from_i64(face.len() as i64);
        (0..self.ambient_dim())
            .map(|a| {
                let mean = pts.iter().map(|p| &p[a]).fold(Rational::zero(), |s, x| s + x) / &n;
                if self.periodic[a] {
                    &mean - mean.floor()
                } else {
                    mean
                }
            })
            .collect()
    }

    /// All `i`-faces as sorted vertex lists, in lexicographic order.
    pub fn faces(&self, i: usize) -> Vec<Vec<usize>> {
        let mut set = BTreeSet::new();
        for s in &self.simplices {
            for f in itertools::Itertools::combinations(s.iter().copied(), i + 1) {
                set.insert(f);
            }
        }
        set.into_iter().collect()
    }

    /// Top simplices containing `face`.
    pub fn star(&self, face: &[usize]) -> Vec<usize> {
        (0..self.simplices.len())
            .filter(|&s| face.iter().all(|v| self.simplices[s].binary_search(v).is_ok()))
            .collect()
    }

    /// Difference `a - b`, minimal image on periodic axes.
    pub fn displacement(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        a.iter()
            .zip(b)
            .zip(&self.periodic)
            .map(|((x, y), &p)| {
                let d = x - y;
                if p {
                    &d - round_half_up(&d)
                } else {
                    d
                }
            })
            .collect()
    }

    pub fn displacement_f64(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.iter()
            .zip(b)
            .zip(&self.periodic)
            .map(|((x, y), &p)| if p { wrap_unit(x - y) } else { x - y })
            .collect()
    }

    pub fn distance_f64(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((x, y), &p) in a.iter().zip(b).zip(&self.periodic) {
            let d = if p { wrap_unit(x - y) } else { x - y };
            s += d * d;
        }
        s.sqrt()
    }

    /// Barycentric subdivision: one vertex per face, one `n`-simplex per
    /// flag of faces, `(n+1)!` per original simplex.
    pub fn barycentric_subdivide(&self) -> Result<Self> {
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut vertices = Vec::new();
        for i in 0..=self.dim {
            for f in self.faces(i) {
                index.insert(f.clone(), vertices.len());
                vertices.push(self.barycenter(&f));
            }
        }
        let mut simplices = Vec::new();
        for s in &self.simplices {
            for perm in itertools::Itertools::permutations(s.iter().copied(), s.len()) {
                let flag = (1..=perm.len())
                    .map(|len| {
                        let mut f = perm[..len].to_vec();
                        f.sort_unstable();
                        index[&f]
                    })
                    .collect();
                simplices.push(flag);
            }
        }
        Self::new(self.dim, vertices, simplices, self.periodic.clone())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ComplexFile = serde_json::from_str(text)?;
        let vertices = raw
            .vertices
            .iter()
            .map(|v| v.iter().map(json_rational).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::new(raw.dim, vertices, raw.simplices, raw.periodic.unwrap_or_default())
    }

    /// Canonical JSON with exact coordinates as strings.
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::json!({
            "dim": self.dim,
            "vertices": self.vertices.iter()
                .map(|v| v.iter().map(format_rational).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "simplices": self.simplices,
            "periodic": self.periodic,
        })
    }
}

#[derive(Deserialize)]
struct ComplexFile {
    dim: usize,
    vertices: Vec<Vec<serde_json::Value>>,
    simplices: Vec<Vec<usize>>,
    periodic: Option<Vec<bool>>,
}

/// A coordinate given as a JSON number (read through its decimal text, so
/// `0.1` is exactly `1/10`) or as a rational string.
pub fn json_rational(v: &serde_json::Value) -> Result<Rational> {
    match v {
        serde_json::Value::Number(n) => {
            let text = n.to_string();
            if text.contains(['e', 'E']) {
                rational_from_f64(n.as_f64().unwrap_or(f64::NAN))
            } else {
                parse_rational(&text)
            }
        }
        serde_json::Value::String(s) => parse_rational(s),
        other => Err(Error::Serde(format!("expected a number, found {other}"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoverParams {
    /// Radius as a fraction of the minimal same-family center distance.
    pub radius_factor: Rational,
    pub sigma_rho: Rational,
    pub sigma_chi: Rational,
    pub samples_per_simplex: usize,
    pub max_subdivisions: usize,
    pub seed: u64,
}

impl Default for CoverParams {
    fn default() -> Self {
        CoverParams {
            radius_factor: Rational::new(499.into(), 1000.into()),
            sigma_rho: Rational::new(99.into(), 100.into()),
            sigma_chi: Rational::new(995.into(), 1000.into()),
            samples_per_simplex: 1000,
            max_subdivisions: 2,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ball {
    pub family: usize,
    pub index: usize,
    /// The face of the (possibly subdivided) complex the ball belongs to.
    pub face: Vec<usize>,
    pub center: Vec<Rational>,
    pub radius: Rational,
    /// `bump(σ_ρ r/2, σ_ρ r)`, the building block of `ρ`.
    pub bump: SmoothFn,
    /// `bump(σ_ρ r, σ_χ r)`.
    pub chi: SmoothFn,
    center_f: Vec<f64>,
    radius_f: f64,
}

impl Ball {
    pub fn center_f64(&self) -> &[f64] {
        &self.center_f
    }

    pub fn radius_f64(&self) -> f64 {
        self.radius_f
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub samples: usize,
    pub samples_per_simplex: usize,
    pub gaps: usize,
    /// Largest `min_ball dist/r` over samples; coverage needs `< σ_ρ`.
    pub max_depth_ratio: f64,
    /// Samples whose nearest (relative) ball is in each family.
    pub per_family: Vec<usize>,
    pub disjoint: bool,
    pub partition_checked: usize,
    pub partition_residual: f64,
    pub rho_in_unit_interval: bool,
    pub chi_dominates: bool,
}

impl CoverageReport {
    pub fn passed(&self) -> bool {
        self.gaps == 0 && self.disjoint && self.partition_residual < 1e-10 && self.rho_in_unit_interval && self.chi_dominates
    }
}

#[derive(Clone, Debug)]
pub struct NashCovering {
    pub complex: SimplicialComplex,
    pub subdivisions: usize,
    pub params: CoverParams,
    pub families: Vec<Vec<Ball>>,
    /// `ρ_0..ρ_n`.
    pub rho: Vec<SmoothFn>,
    /// `χ_0..χ_n`.
    pub chi: Vec<SmoothFn>,
    /// `(Σ_l B_l)^{-1}`, shared by all `ρ_i`.
    pub inv_total: SmoothFn,
    pub coverage: CoverageReport,
}

impl NashCovering {
    pub fn max_radius(&self) -> f64 {
        self.families.iter().flatten().map(Ball::radius_f64).fold(0.0, f64::max)
    }

    pub fn ball_count(&self) -> usize {
        self.families.iter().map(Vec::len).sum()
    }
}

/// Uniform grid of ball centers for "which balls reach this point" queries;
/// cells are at least as wide as the largest reach, so only the `3^d`
/// neighbouring cells need to be scanned.
struct BallGrid<'a> {
    complex: &'a SimplicialComplex,
    balls: Vec<(&'a [f64], f64, usize)>,
    lo: Vec<f64>,
    h: Vec<f64>,
    dims: Vec<i64>,
    cells: Vec<Vec<u32>>,
    brute: bool,
}

impl<'a> BallGrid<'a> {
    const MAX_CELLS: f64 = 1e6;

    fn new(complex: &'a SimplicialComplex, families: &'a [Vec<Ball>], reach: f64) -> Self {
        let balls: Vec<_> = families.iter().flatten().map(|b| (b.center_f.as_slice(), b.radius_f, b.family)).collect();
        let d = complex.ambient_dim();
        let max_r = balls.iter().map(|b| b.1).fold(0.0, f64::max) * reach;
        let mut lo = vec![0.0; d];
        let mut extent = vec![1.0; d];
        for a in 0..d {
            if !complex.periodic[a] {
                lo[a] = balls.iter().map(|b| b.0[a]).fold(f64::INFINITY, f64::min);
                extent[a] = balls.iter().map(|b| b.0[a]).fold(f64::NEG_INFINITY, f64::max) - lo[a];
            }
        }
        // coarsen until the cell count is manageable
        let mut width = max_r;
        let count = |w: f64| extent.iter().map(|e| (e / w).floor() + 1.0).product::<f64>();
        while width > 0.0 && count(width) > Self::MAX_CELLS {
            width *= 2.0;
        }
        let brute = d > 6 || width <= 0.0 || !width.is_finite();
        let mut h = vec![1.0; d];
        let mut dims = vec![1i64; d];
        if !brute {
            for a in 0..d {
                if complex.periodic[a] {
                    dims[a] = ((1.0 / width).floor() as i64).max(1);
                    h[a] = 1.0 / dims[a] as f64;
                } else {
                    h[a] = width;
                    dims[a] = (extent[a] / width).floor() as i64 + 1;
                }
            }
        }
        let total = dims.iter().product::<i64>() as usize;
        let mut grid = BallGrid { complex, balls, lo, h, dims, cells: vec![Vec::new(); total], brute };
        if !brute {
            for i in 0..grid.balls.len() {
                let key = grid.cell(grid.balls[i].0);
                let flat = grid.flatten(&key).expect("centers lie in the grid");
                grid.cells[flat].push(i as u32);
            }
        }
        grid
    }

    fn cell(&self, p: &[f64]) -> Vec<i64> {
        (0..p.len()).map(|a| ((p[a] - self.lo[a]) / self.h[a]).floor() as i64).collect()
    }

    fn flatten(&self, key: &[i64]) -> Option<usize> {
        let mut flat = 0i64;
        for (a, &k) in key.iter().enumerate() {
            let k = if self.complex.periodic[a] { k.rem_euclid(self.dims[a]) } else { k.min(self.dims[a] - 1) };
            if k < 0 {
                return None;
            }
            flat = flat * self.dims[a] + k;
        }
        Some(flat as usize)
    }

    /// `(min dist/r, family)` over all balls near `p`.
    fn depth(&self, p: &[f64]) -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        let mut visit = |i: usize| {
            let (c, r, fam) = self.balls[i];
            let ratio = self.complex.distance_f64(p, c) / r;
            if ratio < best.0 {
                best = (ratio, fam);
            }
        };
        if self.brute {
            (0..self.balls.len()).for_each(&mut visit);
            return best;
        }
        let base = self.cell(p);
        let d = base.len();
        let mut seen = Vec::with_capacity(3usize.pow(d as u32));
        let mut key = vec![0i64; d];
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut outside = false;
            for a in 0..d {
                key[a] = base[a] + (c % 3) as i64 - 1;
                c /= 3;
                if !self.complex.periodic[a] && (key[a] < 0 || key[a] >= self.dims[a]) {
                    outside = true;
                }
            }
            if outside {
                continue;
            }
            let Some(flat) = self.flatten(&key) else { continue };
            if seen.contains(&flat) {
                continue;
            }
            seen.push(flat);
            for &i in &self.cells[flat] {
                visit(i as usize);
            }
        }
        best
    }
}

/// Sample points of every top simplex (`per_simplex` each), in simplex order.
pub fn simplex_samples(complex: &SimplicialComplex, per_simplex: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = complex.dim();
    let weights: Vec<Vec<f64>> = if n == 0 {
        vec![vec![1.0]]
    } else {
        LowDiscrepancy::new(n, seed).take_points(per_simplex).iter().map(|u| cube_to_barycentric(u)).collect()
    };
    complex
        .simplices()
        .iter()
        .flat_map(|s| {
            let verts = complex.unwrapped_f64(s);
            weights
                .iter()
                .map(|w| {
                    let p = combine(w, &verts);
                    p.iter()
                        .zip(complex.periodic())
                        .map(|(x, &per)| if per { x.rem_euclid(1.0) } else { *x })
                        .collect::<Vec<f64>>()
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// `count` quasi-random points of the whole complex as `(simplex, point)`:
/// the first sequence coordinate picks the simplex, the rest the
/// barycentric weights.
pub fn sample_complex(complex: &SimplicialComplex, count: usize, seed: u64) -> Vec<(usize, Vec<f64>)> {
    let n = complex.dim();
    let total = complex.simplices().len();
    LowDiscrepancy::new(n + 1, seed)
        .take_points(count)
        .into_iter()
        .map(|u| {
            let s = ((u[0] * total as f64) as usize).min(total - 1);
            let w = cube_to_barycentric(&u[1..]);
            let p = combine(&w, &complex.unwrapped_f64(&complex.simplices()[s]));
            let p = p
                .iter()
                .zip(complex.periodic())
                .map(|(x, &per)| if per { x.rem_euclid(1.0) } else { *x })
                .collect();
            (s, p)
        })
        .collect()
}

/// Orthonormal frame (`d × n`, columns) of the plane of simplex `s`.
pub fn tangent_frame(complex: &SimplicialComplex, s: usize) -> Vec<Vec<f64>> {
    let pts = complex.unwrapped_f64(&complex.simplices()[s]);
    let edges: Vec<Vec<f64>> = pts[1..].iter().map(|p| p.iter().zip(&pts[0]).map(|(a, b)| a - b).collect()).collect();
    if complex.dim() == complex.ambient_dim() {
        let d = complex.ambient_dim();
        return (0..d).map(|r| (0..d).map(|c| if r == c { 1.0 } else { 0.0 }).collect()).collect();
    }
    linalg::gram_schmidt(&edges)
}

fn build_families(k: &SimplicialComplex, params: &CoverParams) -> Result<Vec<Vec<Ball>>> {
    let d = k.ambient_dim();
    let half = Rational::new(1.into(), 2.into());
    let mut families = Vec::with_capacity(k.dim() + 1);
    for i in 0..=k.dim() {
        let faces = k.faces(i);
        let centers: Vec<Vec<Rational>> = faces.iter().map(|f| k.barycenter(f)).collect();
        let centers_f: Vec<Vec<f64>> = centers.iter().map(|c| c.iter().map(Scalar::to_f64).collect()).collect();
        let radius = if faces.len() == 1 {
            // a lone ball only has to cover its own face
            let verts = k.unwrapped_f64(&faces[0]);
            let far = verts.iter().map(|v| k.distance_f64(v, &centers_f[0])).fold(0.0, f64::max);
            let r = if far > 0.0 { 1.01 * far / params.sigma_rho.to_f64() } else { 0.25 };
            let mut r = rational_floor(r, 40) + Rational::new(1.into(), (1u64 << 40).into());
            if k.is_periodic() {
                r = r.min(Rational::new(49.into(), 100.into()));
            }
            r
        } else {
            let min_dist = (0..centers_f.len())
                .into_par_iter()
                .map(|a| {
                    (a + 1..centers_f.len())
                        .map(|b| k.distance_f64(&centers_f[a], &centers_f[b]))
                        .fold(f64::INFINITY, f64::min)
                })
                .reduce(|| f64::INFINITY, f64::min);
            // floor, then one ulp-scale margin below, keeps 2r < min distance
            let r = rational_floor(params.radius_factor.to_f64() * min_dist * (1.0 - 1e-12), 40);
            if k.is_periodic() {
                r.min(Rational::new(49.into(), 100.into()))
            } else {
                r
            }
        };
        if !radius.is_positive() {
            return Err(Error::InvalidComplex(format!("family {i} has coincident barycenters")));
        }
        let rho_outer = &params.sigma_rho * &radius;
        let rho_inner = &rho_outer * &half;
        let chi_outer = &params.sigma_chi * &radius;
        let balls = faces
            .into_iter()
            .zip(centers)
            .zip(centers_f)
            .enumerate()
            .map(|(index, ((face, center), center_f))| {
                Ok(Ball {
                    family: i,
                    index,
                    face,
                    bump: SmoothFn::bump(d, rho_inner.clone(), rho_outer.clone(), center.clone(), k.is_periodic())?,
                    chi: SmoothFn::bump(d, rho_outer.clone(), chi_outer.clone(), center.clone(), k.is_periodic())?,
                    center,
                    radius: radius.clone(),
                    center_f,
                    radius_f: radius.to_f64(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        families.push(balls);
    }
    Ok(families)
}

/// Exact same-family disjointness: `(r_a + r_b)² < |c_a - c_b|²`.
fn families_disjoint(k: &SimplicialComplex, families: &[Vec<Ball>]) -> bool {
    families.iter().all(|fam| {
        (0..fam.len()).into_par_iter().all(|a| {
            (a + 1..fam.len()).all(|b| {
                let (x, y) = (&fam[a], &fam[b]);
                let approx = k.distance_f64(&x.center_f, &y.center_f);
                if approx > (x.radius_f + y.radius_f) * (1.0 + 1e-9) {
                    return true;
                }
                let delta = k.displacement(&x.center, &y.center);
                let d2 = delta.iter().fold(Rational::zero(), |s, v| s + v * v);
                let sum = &x.radius + &y.radius;
                &sum * &sum < d2
            })
        })
    })
}

fn partition_functions(d: usize, families: &[Vec<Ball>]) -> (Vec<SmoothFn>, Vec<SmoothFn>, SmoothFn) {
    let sums: Vec<SmoothFn> = families.iter().map(|f| SmoothFn::sum(d, f.iter().map(|b| b.bump.clone()))).collect();
    let inv_total = SmoothFn::sum(d, sums.iter().cloned()).powi(-1);
    let rho = sums.iter().map(|b| b.mul(&inv_total)).collect();
    let chi = families.iter().map(|f| SmoothFn::sum(d, f.iter().map(|b| b.chi.clone()))).collect();
    (rho, chi, inv_total)
}

fn certify(k: &SimplicialComplex, params: &CoverParams, families: &[Vec<Ball>], rho: &[SmoothFn], chi: &[SmoothFn]) -> (CoverageReport, Option<Vec<f64>>) {
    let samples = simplex_samples(k, params.samples_per_simplex, params.seed);
    let grid = BallGrid::new(k, families, params.sigma_rho.to_f64());
    let sigma = params.sigma_rho.to_f64();
    let depths: Vec<(f64, usize)> = samples.par_iter().map(|p| grid.depth(p)).collect();
    let mut per_family = vec![0; families.len()];
    let mut gaps = 0;
    let mut first_gap = None;
    let mut max_depth: f64 = 0.0;
    for (p, &(ratio, fam)) in samples.iter().zip(&depths) {
        max_depth = max_depth.max(ratio);
        if ratio < sigma {
            per_family[fam] += 1;
        } else {
            gaps += 1;
            first_gap.get_or_insert_with(|| p.clone());
        }
    }
    // the partition functions are full expression sums, so they are
    // evaluated on an evenly thinned subset of covered samples
    let covered: Vec<&Vec<f64>> = samples.iter().zip(&depths).filter(|(_, d)| d.0 < sigma).map(|(p, _)| p).collect();
    let stride = (covered.len() / 2048).max(1);
    let checked: Vec<&Vec<f64>> = covered.iter().step_by(stride).copied().collect();
    let stats: Vec<(f64, bool, bool)> = checked
        .par_iter()
        .map(|p| {
            let mut ev = Evaluator::new(p);
            let rs: Vec<f64> = rho.iter().map(|r| ev.value(r)).collect();
            let cs: Vec<f64> = chi.iter().map(|c| ev.value(c)).collect();
            let residual = (rs.iter().sum::<f64>() - 1.0).abs();
            let unit = rs.iter().all(|r| (-1e-12..=1.0 + 1e-12).contains(r));
            let dominated = rs.iter().zip(&cs).all(|(r, c)| (c * r - r).abs() <= 1e-12);
            (if residual.is_nan() { f64::INFINITY } else { residual }, unit, dominated)
        })
        .collect();
    let report = CoverageReport {
        samples: samples.len(),
        samples_per_simplex: if k.dim() == 0 { 1 } else { params.samples_per_simplex },
        gaps,
        max_depth_ratio: max_depth,
        per_family,
        disjoint: families_disjoint(k, families),
        partition_checked: stats.len(),
        partition_residual: stats.iter().map(|s| s.0).fold(0.0, f64::max),
        rho_in_unit_interval: stats.iter().all(|s| s.1),
        chi_dominates: stats.iter().all(|s| s.2),
    };
    (report, first_gap)
}

/// Builds the covering, retrying on barycentric subdivisions when sampling
/// finds a gap.
pub fn nash_cover(complex: &SimplicialComplex, params: &CoverParams) -> Result<NashCovering> {
    let mut k = complex.clone();
    for subdivisions in 0..=params.max_subdivisions {
        let families = build_families(&k, params)?;
        let (rho, chi, inv_total) = partition_functions(k.ambient_dim(), &families);
        let (coverage, gap) = certify(&k, params, &families, &rho, &chi);
        if !coverage.disjoint {
            return Err(Error::InvalidComplex("same-family balls overlap".into()));
        }
        match gap {
            None => {
                return Ok(NashCovering { complex: k, subdivisions, params: params.clone(), families, rho, chi, inv_total, coverage })
            }
            Some(point) if subdivisions == params.max_subdivisions => {
                return Err(Error::CoverageGap { point, subdivisions })
            }
            Some(_) => k = k.barycentric_subdivide()?,
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Coordinates on a ball.
#[derive(Clone, Debug, PartialEq)]
pub enum Chart {
    /// `y = Bᵀ(x - origin)` with `B` (`d × n`) an orthonormal basis of the
    /// supporting plane.
    Flat { origin: Vec<Rational>, basis: Vec<Vec<Rational>> },
    /// `y = x - origin` on the torus, lifted to `[-1/2, 1/2)`.
    Torus { origin: Vec<Rational> },
}

impl Chart {
    pub fn dim(&self) -> usize {
        match self {
            Chart::Flat { basis, .. } => basis.first().map_or(0, Vec::len),
            Chart::Torus { origin } => origin.len(),
        }
    }

    /// The chart coordinates as functions of the ambient point.
    pub fn coordinates(&self) -> Vec<SmoothFn> {
        match self {
            Chart::Flat { origin, basis } => {
                let d = origin.len();
                (0..self.dim())
                    .map(|r| {
                        SmoothFn::sum(
                            d,
                            (0..d).filter(|&a| !basis[a][r].is_zero()).map(|a| {
                                SmoothFn::var(d, a)
                                    .sub(&SmoothFn::constant(d, origin[a].clone()))
                                    .scale(&basis[a][r])
                            }),
                        )
                    })
                    .collect()
            }
            Chart::Torus { origin } => {
                let d = origin.len();
                (0..d).map(|a| SmoothFn::lift(d, a, origin[a].clone()).expect("axis in range")).collect()
            }
        }
    }

    /// `B` as a `d × n` matrix (the identity on the torus).
    pub fn basis(&self) -> Vec<Vec<Rational>> {
        match self {
            Chart::Flat { basis, .. } => basis.clone(),
            Chart::Torus { origin } => {
                let n = origin.len();
                (0..n).map(|r| (0..n).map(|c| if r == c { Rational::one() } else { Rational::zero() }).collect()).collect()
            }
        }
    }
}

/// Local coordinates of a ball: translation (and, in higher-dimensional
/// ambient space, an orthonormal frame of the supporting plane) or lifted
/// periodic coordinates. Balls whose star is not contained in one `n`-plane
/// are rejected.
pub fn local_coordinates(complex: &SimplicialComplex, ball: &Ball) -> Result<Chart> {
    let n = complex.dim();
    let d = complex.ambient_dim();
    if complex.is_periodic() {
        if d != n || !complex.periodic().iter().all(|&p| p) {
            return Err(Error::CurvedChart {
                family: ball.family,
                index: ball.index,
                reason: "periodic complexes must be full-dimensional tori".into(),
            });
        }
        return Ok(Chart::Torus { origin: ball.center.clone() });
    }
    if d == n {
        let basis = (0..d).map(|r| (0..n).map(|c| if r == c { Rational::one() } else { Rational::zero() }).collect()).collect();
        return Ok(Chart::Flat { origin: ball.center.clone(), basis });
    }
    let star: BTreeSet<usize> = complex.star(&ball.face).into_iter().flat_map(|s| complex.simplices()[s].clone()).collect();
    let base = &complex.vertices()[ball.face[0]];
    let edges: Vec<Vec<Rational>> = star
        .iter()
        .map(|&v| complex.vertices()[v].iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let rank = linalg::rank_exact(&edges);
    if rank != n {
        return Err(Error::CurvedChart {
            family: ball.family,
            index: ball.index,
            reason: format!("vertex star spans a {rank}-dimensional affine space"),
        });
    }
    let edges_f: Vec<Vec<f64>> = edges.iter().map(|e| e.iter().map(Scalar::to_f64).collect()).collect();
    let frame = linalg::gram_schmidt(&edges_f);
    let basis = frame
        .iter()
        .map(|row| row.iter().map(|x| rational_from_f64(*x)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(Chart::Flat { origin: ball.center.clone(), basis })
}

/// Radius bookkeeping for reports: `(family, radius)` pairs as text.
pub fn radii_summary(cover: &NashCovering) -> Vec<(usize, usize, String)> {
    cover
        .families
        .iter()
        .enumerate()
        .map(|(i, f)| (i, f.len(), f.first().map_or(String::new(), |b| format_rational(&b.radius))))
        .collect()
}


#[cfg(test)]
mod torus_tests {
    use super::*;

    #[test]
    fn bcc_torus_cover() {
        let k = crate::fixtures::bcc_torus(3);
        let t = std::time::Instant::now();
        let cover = nash_cover(&k, &CoverParams::default()).unwrap();
        eprintln!("{:?} {:?}", t.elapsed(), cover.coverage);
        assert_eq!(cover.subdivisions, 0);
        assert!(cover.coverage.passed());
        let sizes: Vec<usize> = cover.families.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![54, 378, 648, 324]);
        let low = CoverParams { radius_factor: Rational::new(49.into(), 100.into()), max_subdivisions: 0, ..CoverParams::default() };
        assert!(matches!(nash_cover(&k, &low), Err(Error::CoverageGap { .. })));
    }
}
