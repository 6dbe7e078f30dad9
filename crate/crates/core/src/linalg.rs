//! Small dense linear algebra: exact ranks, generic determinants, and singular
//! values for conditioning reports.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::{Rational, Scalar};

/// Determinant by Gaussian elimination with the largest available pivot.
pub fn det<S: Scalar>(mut m: Vec<Vec<S>>) -> S {
    let n = m.len();
    let mut det = S::one();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !m[r][col].is_zero())
            .max_by(|&a, &b| {
                m[a][col]
                    .pivot_weight()
                    .partial_cmp(&m[b][col].pivot_weight())
                    .unwrap_or(std::cmp::Ordering::Equal)
            });
        let Some(p) = pivot else {
            return S::zero();
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        let pv = m[col][col].clone();
        det = det * pv.clone();
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone() / pv.clone();
            for c in col..n {
                let delta = factor.clone() * m[col][c].clone();
                m[r][c] = m[r][c].clone() - delta;
            }
        }
    }
    det
}

/// Exact rank of a rational matrix.
///
/// Rows are scaled to integers and reduced with Bareiss' fraction-free
/// elimination, so no intermediate value ever leaves `Z`.
pub fn rank_exact(rows: &[Vec<Rational>]) -> usize {
    let Some(ncols) = rows.first().map(Vec::len) else {
        return 0;
    };
    let mut m: Vec<Vec<BigInt>> = rows
        .iter()
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .map(|r| {
            let lcm = r.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
            r.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect()
        })
        .collect();
    let nrows = m.len();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows)
            .filter(|&r| !m[r][col].is_zero())
            .min_by_key(|&r| m[r][col].abs())
        else {
            continue;
        };
        m.swap(rank, p);
        for r in rank + 1..nrows {
            for c in col + 1..ncols {
                let v = &m[rank][col] * &m[r][c] - &m[r][col] * &m[rank][c];
                m[r][c] = v / &prev;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    rank
}

/// Singular values in decreasing order.
pub fn singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if nrows == 0 || ncols == 0 {
        return Vec::new();
    }
    let m = DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]);
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Count of singular values above `rel_tol * largest`.
pub fn numeric_rank(sv: &[f64], rel_tol: f64) -> usize {
    let Some(&largest) = sv.first() else {
        return 0;
    };
    if largest <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * largest).count()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let inner = b.len();
    let ncols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..ncols)
                .map(|c| (0..inner).map(|i| row[i] * b[i][c]).sum())
                .collect()
        })
        .collect()
}

/// Orthonormal basis (as columns, `dim × k`) of the span of `vectors`, by
/// modified Gram–Schmidt; vectors dependent on earlier ones are skipped.
pub fn gram_schmidt(vectors: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let dot: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
        if norm > 1e-12 * scale {
            basis.push(w.iter().map(|x| x / norm).collect());
        }
    }
    let dim = vectors.first().map_or(0, Vec::len);
    (0..dim).map(|r| basis.iter().map(|b| b[r]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    #[test]
    fn determinant_exact_and_float_agree() {
        let m = vec![vec![int(2), int(1), int(0)], vec![int(1), int(3), int(1)], vec![int(0), int(1), int(4)]];
        assert_eq!(det(m), int(18));
        let f = vec![vec![2.0, 1.0, 0.0], vec![1.0, 3.0, 1.0], vec![0.0, 1.0, 4.0]];
        assert!((det(f) - 18.0).abs() < 1e-12);
        assert_eq!(det(vec![vec![int(0), int(1)], vec![int(1), int(0)]]), int(-1));
        assert_eq!(det::<Rational>(vec![]), int(1));
    }

    #[test]
    fn exact_rank() {
        let m = vec![
            vec![rat(1, 2), rat(1, 3), int(1)],
            vec![int(1), rat(2, 3), int(2)],
            vec![int(0), int(1), int(0)],
        ];
        assert_eq!(rank_exact(&m), 2);
        assert_eq!(rank_exact(&[vec![int(0); 3]]), 0);
        let id: Vec<Vec<Rational>> = (0..4)
            .map(|r| (0..4).map(|c| if r == c { int(1) } else { int(0) }).collect())
            .collect();
        assert_eq!(rank_exact(&id), 4);
    }

    #[test]
    fn orthonormal_tangent_basis() {
        let b = gram_schmidt(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]]);
        assert_eq!(b.len(), 3);
        assert_eq!(b[0].len(), 2);
        let sv = singular_values(&b);
        assert!(sv.iter().all(|s| (s - 1.0).abs() < 1e-12));
        assert_eq!(numeric_rank(&[3.0, 1e-12], 1e-8), 1);
    }
}
