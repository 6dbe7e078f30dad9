//! JSON interchange: form files, immersion files and verification reports.
//!
//! Everything written here is deterministic: maps are ordered, expressions
//! are printed canonically and floats use the shortest round-trip text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::covering::{nash_cover, CoverParams, NashCovering, SimplicialComplex};
use crate::error::{Error, Result};
use crate::forms::DifferentialForm;
use crate::forms::SmoothMap;
use crate::immersion::{AssembledImmersion, ShrinkInfo, VerificationReport};
use crate::scalar::{format_rational, parse_rational};
use crate::smoothfn::{decode_dag, encode_dag, parse, DagText};
use crate::tuple::IndexTuple;

/// `{ "chart_dim": n, "degree": k, "coeffs": { "1,2": "<expr>" } }`, with
/// 1-based indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormFile {
    pub chart_dim: usize,
    pub degree: usize,
    pub coeffs: BTreeMap<String, String>,
}

impl FormFile {
    pub fn from_form(form: &DifferentialForm) -> Self {
        FormFile {
            chart_dim: form.dim(),
            degree: form.degree(),
            coeffs: form.terms().map(|(t, c)| (t.to_string(), c.to_string())).collect(),
        }
    }

    pub fn to_form(&self) -> Result<DifferentialForm> {
        let terms = self
            .coeffs
            .iter()
            .map(|(key, expr)| {
                let indices = if key.trim().is_empty() {
                    Vec::new()
                } else {
                    key.split(',')
                        .map(|s| match s.trim().parse::<usize>() {
                            Ok(i) if i >= 1 => Ok(i - 1),
                            _ => Err(Error::Parse { pos: 0, msg: format!("bad index `{s}` in key `{key}`") }),
                        })
                        .collect::<Result<Vec<_>>>()?
                };
                if indices.len() != self.degree {
                    return Err(Error::DegreeMismatch { expected: self.degree, found: indices.len() });
                }
                let coefficient = parse(expr, self.chart_dim)?;
                // an unsorted key picks up the sign of its sorting permutation
                let mut sorted = indices.clone();
                sorted.sort_unstable();
                let inversions = (0..indices.len())
                    .flat_map(|a| (a + 1..indices.len()).map(move |b| (a, b)))
                    .filter(|&(a, b)| indices[a] > indices[b])
                    .count();
                let tuple = IndexTuple::new(sorted, self.chart_dim)?;
                Ok((tuple, if inversions % 2 == 0 { coefficient } else { coefficient.neg() }))
            })
            .collect::<Result<Vec<_>>>()?;
        DifferentialForm::from_terms(self.chart_dim, self.degree, terms)
    }
}

pub fn read_form(text: &str) -> Result<DifferentialForm> {
    serde_json::from_str::<FormFile>(text)?.to_form()
}

pub fn form_json(form: &DifferentialForm) -> Value {
    serde_json::to_value(FormFile::from_form(form)).expect("plain data")
}

fn cover_params_json(p: &CoverParams) -> Value {
    json!({
        "radius_factor": format_rational(&p.radius_factor),
        "sigma_rho": format_rational(&p.sigma_rho),
        "sigma_chi": format_rational(&p.sigma_chi),
        "samples_per_simplex": p.samples_per_simplex,
        "max_subdivisions": p.max_subdivisions,
        "seed": p.seed,
    })
}

#[derive(Deserialize)]
struct CoverParamsFile {
    radius_factor: String,
    sigma_rho: String,
    sigma_chi: String,
    samples_per_simplex: usize,
    max_subdivisions: usize,
    seed: u64,
}

/// Centers and radii of every ball, as exact text.
pub fn covering_json(c: &NashCovering) -> Value {
    json!({
        "subdivisions": c.subdivisions,
        "families": c.families.iter().map(|f| f.iter().map(|b| json!({
            "face": b.face,
            "center": b.center.iter().map(format_rational).collect::<Vec<_>>(),
            "radius": format_rational(&b.radius),
        })).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "coverage": c.coverage,
    })
}

/// The immersion file: the complex actually covered, the covering
/// parameters and balls, `φ`, `ω`, the block table and one shared
/// expression DAG whose roots are the map components, then `ρ_i`, then
/// `χ_i`.
pub fn immersion_json(a: &AssembledImmersion) -> Value {
    let mut roots = a.map.components().to_vec();
    roots.extend(a.covering.rho.iter().cloned());
    roots.extend(a.covering.chi.iter().cloned());
    let dag = encode_dag(&roots);
    json!({
        "format": "univform-immersion",
        "version": 1,
        "complex": a.covering.complex.to_json_value(),
        "cover_params": cover_params_json(&a.covering.params),
        "covering": covering_json(&a.covering),
        "n": a.n,
        "k": a.k,
        "blocks": a.blocks.iter().map(|t| t.indices().iter().map(|i| i + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "beta": { "blocks": a.blocks.len() * (a.n + 1), "k": a.k, "dim": a.target_dim() },
        "phi": form_json(&a.phi),
        "omega": form_json(&a.omega),
        "shrink": a.shrink,
        "components": a.target_dim(),
        "dag": dag,
    })
}

#[derive(Deserialize)]
struct ImmersionFile {
    format: String,
    complex: Value,
    cover_params: CoverParamsFile,
    covering: Value,
    k: usize,
    phi: FormFile,
    omega: FormFile,
    shrink: Option<Value>,
    components: usize,
    dag: DagText,
}

/// Rebuilds an immersion from its file. The covering is recomputed from the
/// stored complex and parameters (construction is deterministic) and must
/// match the stored balls; the map itself is taken from the file as is.
pub fn read_immersion(text: &str) -> Result<AssembledImmersion> {
    let file: ImmersionFile = serde_json::from_str(text)?;
    if file.format != "univform-immersion" {
        return Err(Error::Serde(format!("unknown format `{}`", file.format)));
    }
    let complex = SimplicialComplex::from_json(&file.complex.to_string())?;
    let p = &file.cover_params;
    let params = CoverParams {
        radius_factor: parse_rational(&p.radius_factor)?,
        sigma_rho: parse_rational(&p.sigma_rho)?,
        sigma_chi: parse_rational(&p.sigma_chi)?,
        samples_per_simplex: p.samples_per_simplex,
        max_subdivisions: 0,
        seed: p.seed,
    };
    let covering = nash_cover(&complex, &params)?;
    if covering_json(&covering)["families"] != file.covering["families"] {
        return Err(Error::Serde("stored balls do not match the covering of the stored complex".into()));
    }
    let covering = NashCovering { params: CoverParams { max_subdivisions: p.max_subdivisions, ..covering.params.clone() }, ..covering };
    let d = complex.ambient_dim();
    let phi = file.phi.to_form()?;
    let omega = file.omega.to_form()?;
    if phi.degree() + 1 != file.k || omega.degree() != file.k {
        return Err(Error::DegreeMismatch { expected: file.k, found: omega.degree() });
    }
    let roots = decode_dag(&file.dag, d)?;
    let families = covering.families.len();
    if roots.len() != file.components + 2 * families {
        return Err(Error::Serde(format!("{} roots for {} components", roots.len(), file.components)));
    }
    let map = SmoothMap::new(d, roots[..file.components].to_vec())?;
    let shrink: Option<ShrinkInfo> = match file.shrink {
        Some(Value::Null) | None => None,
        Some(v) => Some(shrink_from_json(&v)?),
    };
    let rebuilt = crate::immersion::assemble(&covering, &phi, Some(&omega))?;
    if rebuilt.target_dim() != map.target_dim() {
        return Err(Error::DimensionMismatch { expected: rebuilt.target_dim(), found: map.target_dim() });
    }
    // the stored partition functions share nodes with the stored map
    let mut covering = rebuilt.covering.clone();
    covering.rho = roots[file.components..file.components + families].to_vec();
    covering.chi = roots[file.components + families..].to_vec();
    Ok(AssembledImmersion { map, shrink, covering, ..rebuilt })
}

fn shrink_from_json(v: &Value) -> Result<ShrinkInfo> {
    let num = |key: &str| v[key].as_f64().ok_or_else(|| Error::Serde(format!("shrink.{key} missing")));
    Ok(ShrinkInfo {
        m: v["m"].as_u64().ok_or_else(|| Error::Serde("shrink.m missing".into()))? as u32,
        target_piece_radius: num("target_piece_radius")?,
        achieved_piece_radius: num("achieved_piece_radius")?,
        added_subdivisions: v["added_subdivisions"].as_u64().unwrap_or(0) as usize,
        refinement_note: v["refinement_note"].as_str().unwrap_or_default().to_string(),
        radius_before: num("radius_before")?,
        translations: v["translations"]
            .as_array()
            .map(|a| a.iter().map(|t| parse_rational(t.as_str().unwrap_or("0"))).collect::<Result<Vec<_>>>())
            .transpose()?
            .unwrap_or_default(),
    })
}

/// `report.json`: the verification report plus provenance of the inputs.
pub fn report_json(report: &VerificationReport, inputs: &BTreeMap<String, String>, extra: Value) -> Value {
    json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "inputs": inputs,
        "report": report,
        "extra": extra,
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}
