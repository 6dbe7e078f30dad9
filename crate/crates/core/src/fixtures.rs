//! Built-in complexes used by tests, examples and the CLI.

use num_traits::{One, Zero};

use crate::covering::SimplicialComplex;
use crate::scalar::{int, rat, Rational};

/// The standard `n`-simplex `conv(0, e_1, …, e_n)` in `R^n`.
pub fn standard_simplex(n: usize) -> SimplicialComplex {
    let vertices = (0..=n)
        .map(|v| (0..n).map(|a| if v == a + 1 { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    SimplicialComplex::new(n, vertices, vec![(0..=n).collect()], Vec::new()).expect("standard simplex is valid")
}

/// Boundary of the regular tetrahedron with vertices `(±1, ±1, ±1)`, an
/// even number of minus signs; a 2-complex in `R^3`.
pub fn tetrahedron_boundary() -> SimplicialComplex {
    let vertices = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]
        .iter()
        .map(|v| v.iter().map(|&x| int(x)).collect())
        .collect();
    let simplices = vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3], vec![1, 2, 3]];
    SimplicialComplex::new(2, vertices, simplices, Vec::new()).expect("tetrahedron boundary is valid")
}

/// `k` isolated points `(i, 0, …, 0)` in `R^d`.
pub fn points(k: usize, d: usize) -> SimplicialComplex {
    let vertices = (0..k).map(|i| (0..d).map(|a| if a == 0 { int(i as i64) } else { Rational::zero() }).collect()).collect();
    SimplicialComplex::new(0, vertices, (0..k).map(|i| vec![i]).collect(), Vec::new()).expect("point set is valid")
}

/// Body-centred cubic triangulation of the flat 3-torus `R^3/Z^3` with `g`
/// cells per axis: `2g³` vertices and `12g³` tetrahedra, each spanned by the
/// centres of two face-adjacent cells and an edge of their common face.
/// Needs `g ≥ 3` to be a simplicial complex.
pub fn bcc_torus(g: usize) -> SimplicialComplex {
    let gi = g as i64;
    let corner = |i: i64, j: i64, k: i64| (i.rem_euclid(gi) * gi * gi + j.rem_euclid(gi) * gi + k.rem_euclid(gi)) as usize;
    let centre = |i: i64, j: i64, k: i64| g * g * g + corner(i, j, k);
    let mut vertices = Vec::with_capacity(2 * g * g * g);
    for off in [0, 1] {
        for i in 0..gi {
            for j in 0..gi {
                for k in 0..gi {
                    vertices.push(vec![rat(2 * i + off, 2 * gi), rat(2 * j + off, 2 * gi), rat(2 * k + off, 2 * gi)]);
                }
            }
        }
    }
    let mut simplices = Vec::with_capacity(12 * g * g * g);
    for i in 0..gi {
        for j in 0..gi {
            for k in 0..gi {
                let c = [i, j, k];
                for axis in 0..3 {
                    let mut next = c;
                    next[axis] += 1;
                    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                    // corners of the shared face, in cyclic order
                    let face: Vec<[i64; 3]> = [(0, 0), (1, 0), (1, 1), (0, 1)]
                        .iter()
                        .map(|&(du, dv)| {
                            let mut p = next;
                            p[u] += du;
                            p[v] += dv;
                            p
                        })
                        .collect();
                    for e in 0..4 {
                        let (a, b) = (face[e], face[(e + 1) % 4]);
                        simplices.push(vec![
                            centre(c[0], c[1], c[2]),
                            centre(next[0], next[1], next[2]),
                            corner(a[0], a[1], a[2]),
                            corner(b[0], b[1], b[2]),
                        ]);
                    }
                }
            }
        }
    }
    SimplicialComplex::new(3, vertices, simplices, vec![true; 3]).expect("BCC torus is valid")
}
