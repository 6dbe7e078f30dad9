use super::*;
use crate::scalar::{int, rat};

fn fd_grad(f: &SmoothFn, p: &[f64], h: f64) -> Vec<f64> {
    (0..p.len())
        .map(|i| {
            let mut a = p.to_vec();
            let mut b = p.to_vec();
            a[i] += h;
            b[i] -= h;
            (f.eval(&a) - f.eval(&b)) / (2.0 * h)
        })
        .collect()
}

#[test]
fn evaluation_examples() {
    let f = parse("x1*x2", 2).unwrap();
    assert_eq!(f.eval(&[2.0, 3.0]), 6.0);
    assert_eq!(f.grad(&[2.0, 3.0]), vec![3.0, 2.0]);
    let s = parse("sin(2*pi*x1)", 2).unwrap();
    assert!((s.eval(&[0.25, 0.0]) - 1.0).abs() < 1e-15);
    let c = parse("7/3", 3).unwrap();
    assert_eq!(c.grad(&[0.1, 0.2, 0.3]), vec![0.0; 3]);
}

#[test]
fn bump_support_and_gradient() {
    let b = parse("bump(1,2,0,0)", 2).unwrap();
    assert_eq!(b.eval(&[3.0, 0.0]), 0.0);
    assert_eq!(b.eval(&[0.5, 0.0]), 1.0);
    // boundaries are defined by continuity
    assert_eq!(b.eval(&[1.0, 0.0]), 1.0);
    assert_eq!(b.eval(&[0.0, 2.0]), 0.0);
    let p = [1.5 / 2f64.sqrt(), 1.5 / 2f64.sqrt()];
    let g = b.grad(&p);
    let fd = fd_grad(&b, &p, 1e-6);
    for (a, e) in g.iter().zip(&fd) {
        assert!((a - e).abs() < 1e-8, "{g:?} vs {fd:?}");
    }
    assert!(b.partial(0).is_err());
}

#[test]
fn periodic_pieces() {
    let b = parse("tbump(1/10,1/5,0,0)", 2).unwrap();
    assert_eq!(b.eval(&[0.95, 0.0]), 1.0);
    assert_eq!(b.eval(&[0.5, 0.5]), 0.0);
    let l = parse("lift(x1,1/4)", 1).unwrap();
    assert!((l.eval(&[0.0]) + 0.25).abs() < 1e-15);
    assert!((l.eval(&[0.8]) + 0.45).abs() < 1e-15);
    assert_eq!(l.grad(&[0.8]), vec![1.0]);
}

#[test]
fn polynomial_collapse_and_exactness() {
    let f = parse("(x1 + x2)^2 - 2*x1*x2", 2).unwrap();
    assert!(f.is_polynomial());
    assert_eq!(f.to_string(), "x1^2 + x2^2");
    assert_eq!(f.eval_exact(&[rat(1, 2), int(3)]).unwrap(), rat(37, 4));
    assert_eq!(f.partial(0).unwrap().to_string(), "2*x1");
    assert!(parse("sin(x1)", 1).unwrap().eval_exact(&[int(0)]).is_err());
    assert_eq!(parse("0.25*x1", 1).unwrap().to_string(), "1/4*x1");
}

#[test]
fn cone_exact_and_quadrature_agree() {
    let center = [int(0), int(0), int(0)];
    let c = parse("6", 3).unwrap().cone(2, &center).unwrap();
    assert_eq!(c.to_string(), "2");
    let x = parse("x1", 3).unwrap().cone(2, &center).unwrap();
    assert_eq!(x.to_string(), "1/4*x1");
    // the same integral through the quadrature node
    let g = parse("x1*cos(0*x2)", 3).unwrap();
    assert!(!g.is_polynomial());
    let q = g.cone(2, &center).unwrap();
    let p = [0.7, -0.3, 0.2];
    assert!((q.eval(&p) - 0.7 / 4.0).abs() < 1e-14);
    let grad = q.grad(&p);
    assert!((grad[0] - 0.25).abs() < 1e-14 && grad[1].abs() < 1e-14);
}

#[test]
fn quadrature_integrates_polynomials() {
    let rule = gauss_legendre_01();
    assert_eq!(rule.len(), 64);
    for deg in [0, 1, 5, 40, 127] {
        let s: f64 = rule.iter().map(|(t, w)| w * t.powi(deg)).sum();
        assert!((s - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
    }
}

#[test]
fn symbolic_partial_matches_jet() {
    let exprs = [
        "sin(2*pi*x1)*x2^3 - cos(x3)/3",
        "(1 + x1^2 + x2^2)^-1 * x3",
        "-cos(2*pi*x1)/(2*pi)",
        "cone(2,0,0,0,sin(x1)*x2)",
        "lift(x2,1/2)*x1",
    ];
    let p = [0.31, -0.42, 0.17];
    for e in exprs {
        let f = parse(e, 3).unwrap();
        let g = f.grad(&p);
        for i in 0..3 {
            let d = f.partial(i).unwrap().eval(&p);
            assert!((d - g[i]).abs() < 1e-12, "{e} d/dx{}: {d} vs {}", i + 1, g[i]);
        }
        let fd = fd_grad(&f, &p, 1e-5);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0), "{e}: {g:?} vs {fd:?}");
        }
    }
}

#[test]
fn display_roundtrip() {
    for e in [
        "x1*x2 - 3/2",
        "sin(2*pi*x1)*(x2 + 1)",
        "-(x1 + x2)*cos(x1)",
        "(x1^2 + 1)^-2",
        "bump(1/2,1,0,-1/4)*lift(x1,-1/2)",
        "cone(2,1,0,sin(x1) + x2)",
        "-sin(x1)^3",
    ] {
        let f = parse(e, 2).unwrap();
        let printed = f.to_string();
        let g = parse(&printed, 2).unwrap();
        assert_eq!(g.to_string(), printed, "{e}");
        let p = [0.3, -0.1];
        assert!((f.eval(&p) - g.eval(&p)).abs() < 1e-15, "{e} -> {printed}");
    }
}

#[test]
fn dag_roundtrip_shares_nodes() {
    let b = parse("bump(1/4,1/2,0,0)", 2).unwrap();
    let s = parse("sin(x1)", 2).unwrap();
    let shared = b.add(&s);
    let roots = vec![shared.mul(&SmoothFn::var(2, 0)), shared.mul(&SmoothFn::var(2, 1)), shared.clone()];
    let dag = encode_dag(&roots);
    assert_eq!(dag.nodes.len(), 1);
    assert_eq!(dag.roots[2], "@0");
    let back = decode_dag(&dag, 2).unwrap();
    let p = [0.1, 0.2];
    for (a, b) in roots.iter().zip(&back) {
        assert_eq!(a.jet(&p), b.jet(&p));
    }
}

#[test]
fn parse_errors_are_located() {
    assert!(matches!(parse("x4", 3), Err(Error::Parse { .. })));
    assert!(matches!(parse("x1 +", 1), Err(Error::Parse { .. })));
    assert!(matches!(parse("x1/(x1 - x1)", 1), Err(Error::Parse { .. })));
    assert!(matches!(parse("foo(x1)", 1), Err(Error::Parse { .. })));
    assert!(parse("bump(2,1,0)", 1).is_err());
    assert!(matches!(parse("x1)", 1), Err(Error::Parse { pos: 2, .. })));
}
