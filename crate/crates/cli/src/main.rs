//! `univform`: dimension tables, regularity certificates, coverings,
//! primitives and the embed/verify/shrink pipeline.
//!
//! Exit codes: 0 success or passing verdict, 1 usage or input error,
//! 2 failing verdict.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use univform::covering::{nash_cover, CoverParams, SimplicialComplex};
use univform::immersion::{assemble, shrink, verify, AssembledImmersion, ShrinkParams, VerificationReport, VerifyParams};
use univform::io::{covering_json, form_json, immersion_json, read_form, read_immersion, report_json, to_pretty};
use univform::multilinear::{standard_beta, AltForm};
use univform::regularity::{
    build_regular_subspace, d_dim, delta_values, is_regular, n1, n1_bar, s_dim, staircase_report, tuple_block_embedding, Subspace,
};
use univform::scalar::{format_rational, parse_rational, Rational};
use univform::{fixtures, DifferentialForm};

#[derive(Parser)]
#[command(name = "univform", version, about = "Forms pulled back from universal block forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Target dimensions s(m,k), d(m,k) and N₁, N̄₁.
    Dims {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        json: bool,
    },
    /// δ(l,k) by recursion, sum formula and printed closed form.
    Delta {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        json: bool,
    },
    /// Build and certify a regular subspace of (R^{kδ}, β).
    RegularSubspace {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        k: usize,
        /// `staircase` (inductive construction) or `tuple-blocks`.
        #[arg(long, default_value = "staircase")]
        construction: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact regularity certificate of span(basis) for a constant k-form.
    CheckRegular {
        /// Form file with constant coefficients.
        #[arg(long, conflicts_with = "standard")]
        form: Option<PathBuf>,
        /// `N,k` for the standard block form β^k_N.
        #[arg(long)]
        standard: Option<String>,
        /// JSON list of basis vectors (numbers or "p/q" strings).
        #[arg(long)]
        basis: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and certify the covering of a complex.
    Cover {
        #[command(flatten)]
        complex: ComplexArgs,
        #[command(flatten)]
        cover: CoverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Primitive of a closed form by the homotopy operator.
    Primitive {
        #[arg(long)]
        form: PathBuf,
        /// Star center, comma separated (default: the origin).
        #[arg(long)]
        center: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cover, assemble, optionally shrink, and verify.
    Embed {
        #[command(flatten)]
        complex: ComplexArgs,
        #[command(flatten)]
        cover: CoverArgs,
        /// The closed k-form ω (a primitive is computed unless given).
        #[arg(long)]
        form: Option<PathBuf>,
        /// A primitive φ; ω defaults to dφ.
        #[arg(long)]
        primitive: Option<PathBuf>,
        /// Star center for the computed primitive (default: bounding-box center).
        #[arg(long)]
        center: Option<String>,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long, env = "UNIVFORM_SHRINK_M", default_value_t = 1)]
        shrink_m: u32,
        /// Output directory for immersion.json and report.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-verify an immersion file.
    Verify {
        #[arg(long)]
        immersion: PathBuf,
        /// Target ω (default: the one stored in the immersion).
        #[arg(long)]
        form: Option<PathBuf>,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply the shrink transform Φ_m to an immersion file.
    Shrink {
        #[arg(long)]
        immersion: PathBuf,
        #[arg(long)]
        m: u32,
        #[arg(long, env = "UNIVFORM_MAX_SIMPLICES", default_value_t = 20_000)]
        max_simplices: usize,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ComplexArgs {
    /// Complex file.
    #[arg(long, conflicts_with = "fixture")]
    complex: Option<PathBuf>,
    /// Built-in complex: simplex:<n>, tetrahedron, torus:<g>, points:<k>.
    #[arg(long)]
    fixture: Option<String>,
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long, env = "UNIVFORM_RADIUS_FACTOR", default_value = "499/1000")]
    radius_factor: String,
    #[arg(long, env = "UNIVFORM_SAMPLES_PER_SIMPLEX", default_value_t = 1000)]
    samples_per_simplex: usize,
    #[arg(long, env = "UNIVFORM_MAX_SUBDIVISIONS", default_value_t = 2)]
    max_subdivisions: usize,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, env = "UNIVFORM_SAMPLES", default_value_t = 1000)]
    samples: usize,
    #[arg(long, env = "UNIVFORM_TOL", default_value_t = 1e-6)]
    tol: f64,
    /// Offset into the low-discrepancy sequence.
    #[arg(long, env = "UNIVFORM_SEED", default_value_t = 0)]
    seed: u64,
}

impl CheckArgs {
    fn params(&self) -> VerifyParams {
        VerifyParams { samples: self.samples, tol: self.tol, seed: self.seed }
    }
}

/// A failing verdict, as opposed to an input error.
#[derive(Debug)]
struct Verdict(String);

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Verdict {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Verdict>() => {
            eprintln!("FAIL: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes to `out` when given, otherwise prints.
fn emit(out: Option<&Path>, v: &Value) -> Result<()> {
    match out {
        Some(p) => write(p, &to_pretty(v)),
        None => {
            print!("{}", to_pretty(v));
            Ok(())
        }
    }
}

fn parse_list(text: &str) -> Result<Vec<Rational>> {
    text.split(',').map(|s| parse_rational(s).map_err(|e| anyhow!("{e}"))).collect()
}

fn fixture(spec: &str) -> Result<SimplicialComplex> {
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let num = |default: usize| -> Result<usize> {
        if arg.is_empty() {
            Ok(default)
        } else {
            arg.parse().map_err(|_| anyhow!("bad fixture argument `{arg}`"))
        }
    };
    Ok(match name {
        "simplex" => fixtures::standard_simplex(num(2)?),
        "tetrahedron" => fixtures::tetrahedron_boundary(),
        "torus" => {
            let g = num(3)?;
            if g < 3 {
                bail!("torus fixture needs at least 3 cells per axis");
            }
            fixtures::bcc_torus(g)
        }
        "points" => fixtures::points(num(1)?.max(1), 1),
        _ => bail!("unknown fixture `{name}` (simplex:<n>, tetrahedron, torus:<g>, points:<k>)"),
    })
}

/// The complex and a hash identifying it.
fn load_complex(args: &ComplexArgs) -> Result<(SimplicialComplex, String)> {
    match (&args.complex, &args.fixture) {
        (Some(path), _) => {
            let text = read(path)?;
            Ok((SimplicialComplex::from_json(&text)?, sha256_hex(text.as_bytes())))
        }
        (None, Some(spec)) => {
            let k = fixture(spec)?;
            let hash = sha256_hex(k.to_json_value().to_string().as_bytes());
            Ok((k, hash))
        }
        (None, None) => bail!("one of --complex or --fixture is required"),
    }
}

fn cover_params(args: &CoverArgs, seed: u64) -> Result<CoverParams> {
    let radius_factor = parse_rational(&args.radius_factor)?;
    let half = Rational::new(1.into(), 2.into());
    if radius_factor <= Rational::from_integer(0.into()) || radius_factor >= half {
        bail!("--radius-factor must lie in (0, 1/2)");
    }
    Ok(CoverParams {
        radius_factor,
        samples_per_simplex: args.samples_per_simplex,
        max_subdivisions: args.max_subdivisions,
        seed,
        ..CoverParams::default()
    })
}

fn load_form(path: &Path, inputs: &mut BTreeMap<String, String>, key: &str) -> Result<DifferentialForm> {
    let text = read(path)?;
    inputs.insert(key.into(), sha256_hex(text.as_bytes()));
    Ok(read_form(&text)?)
}

fn verdict(report: &VerificationReport) -> Result<()> {
    if report.pass {
        Ok(())
    } else {
        Err(Verdict(format!(
            "max residual {:e} (tol {:e}) at {:?}, min rank {} of {}",
            report.max_residual, report.tol, report.residual_argmax, report.min_rank, report.required_rank
        ))
        .into())
    }
}

fn summary(report: &VerificationReport) -> String {
    format!(
        "{}: {} samples, max residual {:e}, min rank {}/{}, image radius {:.6}",
        if report.pass { "PASS" } else { "FAIL" },
        report.samples,
        report.max_residual,
        report.min_rank,
        report.required_rank,
        report.image_radius
    )
}

fn write_pipeline(dir: &Path, a: &AssembledImmersion, report: &VerificationReport, inputs: &BTreeMap<String, String>, command: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let immersion = to_pretty(&immersion_json(a));
    let mut inputs = inputs.clone();
    inputs.insert("immersion.json".into(), sha256_hex(immersion.as_bytes()));
    let extra = json!({ "command": command, "shrink": a.shrink });
    write(&dir.join("immersion.json"), &immersion)?;
    write(&dir.join("report.json"), &to_pretty(&report_json(report, &inputs, extra)))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Dims { m, n, k, json } => {
            if m.is_none() && n.is_none() {
                bail!("give --m and/or --n");
            }
            let mut out = serde_json::Map::new();
            if let Some(m) = m {
                out.insert("m".into(), m.into());
                out.insert("s".into(), s_dim(m, k)?.into());
                out.insert("d".into(), d_dim(m, k)?.into());
            }
            if let Some(n) = n {
                out.insert("n".into(), n.into());
                out.insert("N1".into(), n1(n, k)?.into());
                out.insert("N1_bar".into(), n1_bar(n, k)?.into());
            }
            out.insert("k".into(), k.into());
            if json {
                print!("{}", to_pretty(&Value::Object(out)));
            } else {
                for (key, v) in &out {
                    println!("{key:>7} {v}");
                }
            }
        }
        Command::Delta { l, k, json } => {
            let v = delta_values(l, k)?;
            if json {
                print!("{}", to_pretty(&serde_json::to_value(&v)?));
            } else {
                println!("recursion    {}", v.recursion);
                println!("sum formula  {}", v.sum_formula);
                println!("closed form  {}{}", v.closed_form, if v.closed_form_agrees() { "" } else { "  (disagrees)" });
            }
        }
        Command::RegularSubspace { l, k, construction, out } => {
            let v = match construction.as_str() {
                "staircase" => match build_regular_subspace(l, k) {
                    Ok(r) => serde_json::to_value(&r)?,
                    Err(e @ univform::Error::StageFailed { .. }) => {
                        let log = staircase_report(l, k)?;
                        eprintln!("{}", serde_json::to_string(&log.stages)?);
                        return Err(e.into());
                    }
                    Err(e) => return Err(e.into()),
                },
                "tuple-blocks" => {
                    if k < 3 || l < k {
                        bail!("need l >= k >= 3");
                    }
                    let map = tuple_block_embedding(l, k);
                    let blocks = map.rows() / k;
                    let cert = is_regular(&standard_beta(blocks, k), &Subspace::image(&map)?)?;
                    json!({
                        "l": l, "k": k, "blocks": blocks,
                        "map": map.to_rows().iter().map(|r| r.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
                        "certificate": cert,
                    })
                }
                other => bail!("unknown construction `{other}`"),
            };
            emit(out.as_deref(), &v)?;
        }
        Command::CheckRegular { form, standard, basis, out } => {
            let beta: AltForm<Rational> = match (form, standard) {
                (Some(path), _) => {
                    let f = read_form(&read(&path)?)?;
                    let terms = f
                        .terms()
                        .map(|(t, c)| {
                            c.as_poly()
                                .and_then(|p| p.as_constant())
                                .map(|v| (t.clone(), v))
                                .ok_or_else(|| anyhow!("coefficient of dx{t} is not constant"))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    AltForm::from_terms(f.dim(), f.degree(), terms)?
                }
                (None, Some(spec)) => {
                    let (n, k) = spec.split_once(',').ok_or_else(|| anyhow!("--standard expects N,k"))?;
                    standard_beta(n.trim().parse()?, k.trim().parse()?)
                }
                (None, None) => bail!("one of --form or --standard is required"),
            };
            let raw: Vec<Vec<Value>> = serde_json::from_str(&basis).context("--basis must be a JSON list of vectors")?;
            let vectors = raw
                .iter()
                .map(|v| v.iter().map(univform::covering::json_rational).collect::<univform::Result<Vec<_>>>())
                .collect::<univform::Result<Vec<_>>>()?;
            let cert = is_regular(&beta, &Subspace::new(beta.dim(), vectors)?)?;
            emit(out.as_deref(), &serde_json::to_value(&cert)?)?;
            if !cert.regular {
                return Err(Verdict(format!("not regular: rank {} of {}", cert.achieved_rank, cert.required_rank)).into());
            }
        }
        Command::Cover { complex, cover, out } => {
            let (k, _) = load_complex(&complex)?;
            let c = nash_cover(&k, &cover_params(&cover, 0)?)?;
            let mut v = covering_json(&c);
            v["complex"] = c.complex.to_json_value();
            emit(out.as_deref(), &v)?;
            eprintln!(
                "{} families {:?}, {} samples, max depth ratio {:.4}",
                c.families.len(),
                c.families.iter().map(Vec::len).collect::<Vec<_>>(),
                c.coverage.samples,
                c.coverage.max_depth_ratio
            );
        }
        Command::Primitive { form, center, out } => {
            let w = read_form(&read(&form)?)?;
            let center = match center {
                Some(c) => parse_list(&c)?,
                None => vec![Rational::from_integer(0.into()); w.dim()],
            };
            let phi = w.poincare_primitive(&center)?;
            emit(out.as_deref(), &form_json(&phi))?;
        }
        Command::Embed { complex, cover, form, primitive, center, check, shrink_m, out } => {
            let (k, complex_hash) = load_complex(&complex)?;
            let mut inputs = BTreeMap::from([("complex".to_string(), complex_hash)]);
            let (phi, omega) = match (primitive, form) {
                (Some(p), w) => {
                    let phi = load_form(&p, &mut inputs, "primitive")?;
                    let omega = match w {
                        Some(w) => load_form(&w, &mut inputs, "form")?,
                        None => phi.exterior_d()?,
                    };
                    (phi, omega)
                }
                (None, Some(w)) => {
                    let omega = load_form(&w, &mut inputs, "form")?;
                    let center = match center {
                        Some(c) => parse_list(&c)?,
                        None => univform::forms::bbox_center(k.vertices_f64()),
                    };
                    (omega.poincare_primitive(&center)?, omega)
                }
                (None, None) => bail!("one of --form or --primitive is required"),
            };
            let c = nash_cover(&k, &cover_params(&cover, check.seed)?)?;
            let mut a = assemble(&c, &phi, Some(&omega))?;
            if shrink_m != 1 {
                let sp = ShrinkParams { samples: check.samples, seed: check.seed, ..ShrinkParams::default() };
                a = shrink(&a, shrink_m, &sp)?;
            }
            let report = verify(&a, &omega, &check.params())?;
            write_pipeline(&out, &a, &report, &inputs, "embed")?;
            println!("{}", summary(&report));
            verdict(&report)?;
        }
        Command::Verify { immersion, form, check, out } => {
            let text = read(&immersion)?;
            let mut inputs = BTreeMap::from([("immersion".to_string(), sha256_hex(text.as_bytes()))]);
            let a = read_immersion(&text)?;
            let omega = match form {
                Some(p) => load_form(&p, &mut inputs, "form")?,
                None => a.omega.clone(),
            };
            let report = verify(&a, &omega, &check.params())?;
            let v = report_json(&report, &inputs, json!({ "command": "verify", "shrink": a.shrink }));
            emit(out.as_deref(), &v)?;
            eprintln!("{}", summary(&report));
            verdict(&report)?;
        }
        Command::Shrink { immersion, m, max_simplices, check, out } => {
            let text = read(&immersion)?;
            let inputs = BTreeMap::from([("immersion".to_string(), sha256_hex(text.as_bytes()))]);
            let a = read_immersion(&text)?;
            let sp = ShrinkParams { max_simplices, samples: check.samples, seed: check.seed };
            let s = shrink(&a, m, &sp)?;
            let report = verify(&s, &s.omega, &check.params())?;
            write_pipeline(&out, &s, &report, &inputs, "shrink")?;
            println!("{}", summary(&report));
            if let Some(info) = &s.shrink {
                println!("radius before {:.6}, after {:.6}; {}", info.radius_before, report.image_radius, info.refinement_note);
            }
            verdict(&report)?;
        }
    }
    Ok(())
}
