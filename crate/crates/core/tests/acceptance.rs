//! One PASS/FAIL line per acceptance criterion.
//!
//! Criteria 2 and 9 are known not to hold for the construction as stated
//! (see README); they are still evaluated faithfully and reported, but only
//! an unexpected failure makes this target exit non-zero.

mod common;

use std::time::{Duration, Instant};

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use univform::covering::{nash_cover, CoverParams, SimplicialComplex};
use univform::fixtures;
use univform::immersion::{
    assemble, graph_regularity_check, local_immersion, shrink, verify, ShrinkParams, VerifyParams, RANK_TOL,
};
use univform::linalg::{numeric_rank, rank_exact};
use univform::regularity::*;
use univform::smoothfn::parse;
use univform::{binomial, standard_beta, DifferentialForm, IndexTuple};

const KNOWN_UNATTAINABLE: [usize; 2] = [2, 9];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut mismatches = Vec::new();
    for k in 3..=6 {
        for l in k..=40 {
            let v = delta_values(l, k).unwrap();
            if v.recursion != v.sum_formula {
                mismatches.push((l, k));
            }
        }
    }
    let elapsed = t.elapsed();
    let d = |l| delta(l, 3).unwrap();
    let values = (d(3), d(5), d(7), s_dim(3, 3).unwrap(), d_dim(3, 3).unwrap(), n1(3, 3).unwrap(), n1_bar(3, 3).unwrap());
    let pass = mismatches.is_empty() && values == (1, 6, 13, 19, 78, 3, 36) && elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "δ sum = recursion on 3≤k≤6, k≤l≤40 ({} mismatches, {}); δ(3,3),δ(5,3),δ(7,3) = {},{},{}; s={} d={} N₁={} N̄₁={}",
            mismatches.len(),
            secs(elapsed),
            values.0,
            values.1,
            values.2,
            values.3,
            values.4,
            values.5,
            values.6
        ),
    )
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut failures = Vec::new();
    let mut certified = 0;
    for k in 3..=5 {
        for l in k..=k + 6 {
            let r = staircase_report(l, k).unwrap();
            let stage_ok = r.stages.iter().all(StageCertificate::passed);
            let final_ok = r.certificate.regular && r.certificate.achieved_rank == binomial(l, k - 1);
            if stage_ok && final_ok {
                certified += 1;
            } else {
                let first = r.stages.iter().find(|s| !s.passed()).map_or(0, |s| s.stage);
                failures.push(format!("(k={k},l={l}: stage {first}, rank {}/{})", r.certificate.achieved_rank, r.certificate.required_rank));
            }
        }
    }
    let elapsed = t.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(30);
    let shown: Vec<_> = failures.iter().take(4).cloned().collect();
    outcome(
        pass,
        format!(
            "{certified}/21 (k,l) certified in {}; failing: {}{}",
            secs(elapsed),
            if failures.is_empty() { "none".to_string() } else { shown.join(" ") },
            if failures.len() > shown.len() { format!(" … ({} total)", failures.len()) } else { String::new() }
        ),
    )
}

fn criterion_3() -> Outcome {
    let c = is_regular(&standard_beta(2, 3), &Subspace::coordinate(6, &[0, 1, 3, 4]).unwrap()).unwrap();
    outcome(
        !c.regular && c.achieved_rank == 2 && c.required_rank == 6,
        format!("span(e1,e2,e4,e5) under β(2,3): regular = {}, rank {} of {}", c.regular, c.achieved_rank, c.required_rank),
    )
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad_pullback = 0;
    let mut bad_rank = 0;
    let mut forms = 0;
    for (n, k) in [(3, 3), (4, 3), (5, 3), (4, 4)] {
        for _ in 0..50 {
            let phi = poly_form(&mut rng, n, k - 1, 3);
            let f = local_immersion(&phi).unwrap();
            forms += 1;
            if !f.pullback_defect().unwrap().is_zero() {
                bad_pullback += 1;
            }
            let full_rank = (0..100).all(|_| {
                let p = point(&mut rng, n);
                numeric_rank(&f.map.jacobian_singular_values(&p), RANK_TOL) == n
            });
            if !full_rank {
                bad_rank += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    outcome(
        bad_pullback == 0 && bad_rank == 0 && elapsed < Duration::from_secs(60),
        format!("{forms} forms: f*γ − φ ≡ 0 fails {bad_pullback}, rank < n fails {bad_rank}; {}", secs(elapsed)),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut identity_fail = 0;
    let mut closed_fail = 0;
    for (n, k) in [(3, 3), (5, 3)] {
        for _ in 0..50 {
            let c: Vec<_> = (0..n).map(|_| univform::scalar::int(rng.gen_range(-2..=2))).collect();
            let w = poly_form(&mut rng, n, k, 3);
            let mut lhs = w.homotopy_operator(&c).unwrap().exterior_d().unwrap();
            if k < n {
                lhs = lhs.add(&w.exterior_d().unwrap().homotopy_operator(&c).unwrap()).unwrap();
            }
            if !exactly_equal(&lhs, &w) {
                identity_fail += 1;
            }
            let closed = poly_form(&mut rng, n, k - 1, 3).exterior_d().unwrap();
            if !exactly_equal(&closed.poincare_primitive(&c).unwrap().exterior_d().unwrap(), &closed) {
                closed_fail += 1;
            }
        }
    }
    outcome(
        identity_fail == 0 && closed_fail == 0,
        format!("200 forms: dH+Hd = id fails {identity_fail}, d(Hω) = ω (closed) fails {closed_fail}; exact"),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let k = rng.gen_range(0..=3);
        let a = poly_form(&mut rng, 4, k, 2);
        let v = vector_field(&mut rng, 4, 2);
        let cartan = a.lie_derivative(&v).unwrap();
        for _ in 0..100 {
            let p = point(&mut rng, 4);
            worst = worst.max(cartan.eval_at(&p).max_abs_diff(&flow_lie_derivative(&a, &v, &p, 1e-4)));
        }
    }
    outcome(worst < 1e-5, format!("20 pairs × 100 samples on R^4: max |L_V a − flow FD| = {worst:.3e} (tol 1e-5)"))
}

fn criterion_7() -> Outcome {
    let params = CoverParams::default();
    let mut cases: Vec<(String, SimplicialComplex)> = (1..=4).map(|n| (format!("simplex:{n}"), fixtures::standard_simplex(n))).collect();
    cases.push(("tetrahedron".into(), fixtures::tetrahedron_boundary()));
    cases.push(("torus:3".into(), fixtures::bcc_torus(3)));
    let mut pass = params.samples_per_simplex >= 1000;
    let mut parts = Vec::new();
    for (name, k) in cases {
        match nash_cover(&k, &params) {
            Ok(c) => {
                let r = &c.coverage;
                let ok = c.families.len() == k.dim() + 1
                    && r.disjoint
                    && r.gaps == 0
                    && r.partition_residual < 1e-10
                    && r.samples_per_simplex >= 1000;
                pass &= ok;
                parts.push(format!("{name}: {} fam, gaps {}, Σρ−1 {:.1e}", c.families.len(), r.gaps, r.partition_residual));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    outcome(pass, parts.join("; "))
}

fn torus_forms() -> (DifferentialForm, DifferentialForm) {
    let phi = DifferentialForm::from_terms(3, 2, [(IndexTuple::new(vec![1, 2], 3).unwrap(), parse("-cos(2*pi*x1)/(2*pi)", 3).unwrap())]).unwrap();
    let omega = DifferentialForm::from_terms(3, 3, [(IndexTuple::new(vec![0, 1, 2], 3).unwrap(), parse("sin(2*pi*x1)", 3).unwrap())]).unwrap();
    (phi, omega)
}

fn criterion_8_and_9() -> (Outcome, Outcome) {
    let t = Instant::now();
    let (phi, omega) = torus_forms();
    let cover = nash_cover(&fixtures::bcc_torus(3), &CoverParams::default()).unwrap();
    let a = assemble(&cover, &phi, Some(&omega)).unwrap();
    let params = VerifyParams::default();
    let r = verify(&a, &omega, &params).unwrap();
    let elapsed = t.elapsed();
    let c8 = outcome(
        r.pass && r.target_dim == 36 && r.samples >= 1000 && r.max_residual < 1e-6 && r.min_rank == 3 && elapsed < Duration::from_secs(300),
        format!(
            "torus → R^{}: max ‖f*β − ω‖∞ = {:.3e} over {} samples, min rank {}/3, {}",
            r.target_dim,
            r.max_residual,
            r.samples,
            r.min_rank,
            secs(elapsed)
        ),
    );

    let mut same = true;
    let mut parts = Vec::new();
    let mut radius_10 = f64::NAN;
    for m in [2, 10] {
        match shrink(&a, m, &ShrinkParams::default()).and_then(|s| verify(&s, &omega, &params)) {
            Ok(rm) => {
                let identical = rm.pass && (rm.max_residual - r.max_residual).abs() <= 1e-12 && rm.min_rank == r.min_rank;
                same &= identical;
                parts.push(format!("m={m}: residual {:.3e}, radius {:.4}", rm.max_residual, rm.image_radius));
                if m == 10 {
                    radius_10 = rm.image_radius;
                }
            }
            Err(e) => {
                same = false;
                parts.push(format!("m={m}: {e}"));
            }
        }
    }
    let contracted = radius_10 < 0.5 * r.image_radius;
    let c9 = outcome(
        same && contracted,
        format!(
            "residual preserved: {} (m=1 residual {:.3e}); {}; radius(m=10)/radius(m=1) = {:.3} (need < 0.5)",
            if same { "yes" } else { "no" },
            r.max_residual,
            parts.join(", "),
            radius_10 / r.image_radius
        ),
    );
    (c8, c9)
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = 0;
    for _ in 0..100 {
        let g = alt_form(&mut rng, 4, 3);
        let s = formal_monomorphism(&g, None).unwrap();
        let exact = s.target_beta().pullback(&s.s).unwrap() == g;
        let injective = rank_exact(&s.s.to_rows()) == 4;
        if !(exact && injective && s.pullback_matches && s.injective && s.certificate.regular) {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("100 random g on R^4 (m=3, k=3): s*β = g, injective, regular; {failures} failures"))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut corpus = vec![DifferentialForm::from_terms(4, 2, [(IndexTuple::new(vec![1, 2], 4).unwrap(), parse("x1", 4).unwrap())]).unwrap()];
    corpus.extend((0..5).map(|_| poly_form(&mut rng, 4, 2, 2)));
    let mut pass = true;
    let mut worst_condition: f64 = 0.0;
    let mut min_sv = f64::INFINITY;
    let mut ranks = Vec::new();
    for phi in &corpus {
        let f = local_immersion(phi).unwrap();
        match graph_regularity_check(&f, &phi.exterior_d().unwrap(), 100, 0) {
            Ok(r) => {
                pass &= r.regular && r.required_rank == binomial(4, 2) && r.samples == 100;
                worst_condition = worst_condition.max(r.max_condition);
                min_sv = min_sv.min(r.min_singular_value);
                ranks.push(format!("{}/{}", r.min_rank, r.required_rank));
            }
            Err(e) => {
                pass = false;
                ranks.push(e.to_string());
            }
        }
    }
    outcome(
        pass,
        format!(
            "{} charts × 100 samples: min contraction rank {}; min σ {:.3e}, max condition {:.3e}",
            corpus.len(),
            ranks.join(" "),
            min_sv,
            worst_condition
        ),
    )
}

fn main() {
    let t = Instant::now();
    let (c8, c9) = criterion_8_and_9();
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        c8,
        c9,
        criterion_10(),
        criterion_11(),
    ];
    let mut unexpected = Vec::new();
    for (i, r) in results.iter().enumerate() {
        let n = i + 1;
        let note = if !r.pass && KNOWN_UNATTAINABLE.contains(&n) { " [known unattainable]" } else { "" };
        println!("criterion {n:>2}: {}{note} — {}", if r.pass { "PASS" } else { "FAIL" }, r.detail);
        if !r.pass && !KNOWN_UNATTAINABLE.contains(&n) {
            unexpected.push(n);
        }
    }
    println!("acceptance: {} passed, {} failed, {}", results.iter().filter(|r| r.pass).count(), results.iter().filter(|r| !r.pass).count(), secs(t.elapsed()));
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
