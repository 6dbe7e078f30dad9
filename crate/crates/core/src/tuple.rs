use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing coordinate indices, stored zero-based.
///
/// The derived `Ord` is lexicographic, which is the canonical basis order of
/// every exterior power in this crate. Text forms (`Display`, form files) are
/// one-based: the tuple `[0, 2]` prints as `1,3`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndexTuple(Vec<usize>);

impl IndexTuple {
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        let ok = indices.windows(2).all(|w| w[0] < w[1]) && indices.iter().all(|&i| i < dim);
        if ok {
            Ok(IndexTuple(indices))
        } else {
            Err(Error::InvalidTuple { indices, dim })
        }
    }

    pub(crate) fn from_sorted(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        IndexTuple(indices)
    }

    pub fn empty() -> Self {
        IndexTuple(Vec::new())
    }

    /// All degree-`k` tuples over `dim` coordinates, in lexicographic order.
    pub fn all(dim: usize, k: usize) -> Vec<IndexTuple> {
        (0..dim).combinations(k).map(IndexTuple).collect()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn fits(&self, dim: usize) -> bool {
        self.0.last().is_none_or(|&i| i < dim)
    }

    /// Sorted union with the sign of the shuffle `dx^self ∧ dx^other`, or
    /// `None` when the tuples overlap.
    pub fn wedge(&self, other: &IndexTuple) -> Option<(IndexTuple, i32)> {
        let mut merged = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut a, mut b) = (0, 0);
        let mut inversions = 0usize;
        while a < self.0.len() && b < other.0.len() {
            match self.0[a].cmp(&other.0[b]) {
                std::cmp::Ordering::Less => {
                    merged.push(self.0[a]);
                    a += 1;
                }
                std::cmp::Ordering::Greater => {
                    // other[b] jumps over the remaining entries of self
                    inversions += self.0.len() - a;
                    merged.push(other.0[b]);
                    b += 1;
                }
                std::cmp::Ordering::Equal => return None,
            }
        }
        merged.extend_from_slice(&self.0[a..]);
        merged.extend_from_slice(&other.0[b..]);
        let sign = if inversions % 2 == 0 { 1 } else { -1 };
        Some((IndexTuple(merged), sign))
    }

    /// `dx^j ∧ dx^self` as a sorted tuple and sign.
    pub fn insert(&self, j: usize) -> Option<(IndexTuple, i32)> {
        match self.0.binary_search(&j) {
            Ok(_) => None,
            Err(pos) => {
                let mut v = self.0.clone();
                v.insert(pos, j);
                Some((IndexTuple(v), if pos % 2 == 0 { 1 } else { -1 }))
            }
        }
    }

    pub fn remove_position(&self, pos: usize) -> IndexTuple {
        let mut v = self.0.clone();
        v.remove(pos);
        IndexTuple(v)
    }

    /// Parses the one-based text form `i1,i2,...`; the empty string is the
    /// degree-0 tuple.
    pub fn parse_one_based(s: &str, dim: usize) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(IndexTuple::empty());
        }
        let mut v = Vec::new();
        for part in s.split(',') {
            let i: usize = part.trim().parse().map_err(|_| Error::Parse {
                pos: 0,
                msg: format!("bad index `{part}` in tuple `{s}`"),
            })?;
            if i == 0 {
                return Err(Error::InvalidTuple { indices: vec![0], dim });
            }
            v.push(i - 1);
        }
        IndexTuple::new(v, dim)
    }
}

impl fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.iter().map(|i| i + 1).join(","))
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let all = IndexTuple::all(5, 3);
        assert_eq!(all.len(), binomial(5, 3));
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all[0].indices(), &[0, 1, 2]);
        assert_eq!(IndexTuple::all(3, 0), vec![IndexTuple::empty()]);
        assert!(IndexTuple::all(2, 3).is_empty());
    }

    #[test]
    fn invalid_tuples_rejected() {
        assert!(IndexTuple::new(vec![1, 1], 3).is_err());
        assert!(IndexTuple::new(vec![2, 1], 3).is_err());
        assert!(IndexTuple::new(vec![0, 3], 3).is_err());
        assert!(IndexTuple::parse_one_based("0,1", 3).is_err());
    }

    #[test]
    fn wedge_signs() {
        let a = IndexTuple::from_sorted(vec![1]);
        let b = IndexTuple::from_sorted(vec![0, 2]);
        // dx2 ∧ dx1 ∧ dx3 = - dx1 ∧ dx2 ∧ dx3
        assert_eq!(a.wedge(&b), Some((IndexTuple::from_sorted(vec![0, 1, 2]), -1)));
        assert_eq!(b.wedge(&a), Some((IndexTuple::from_sorted(vec![0, 1, 2]), -1)));
        assert_eq!(a.wedge(&a), None);
        let (t, s) = IndexTuple::from_sorted(vec![0, 2]).insert(1).unwrap();
        assert_eq!((t.indices(), s), (&[0usize, 1, 2][..], -1));
    }

    #[test]
    fn text_form_is_one_based() {
        let t = IndexTuple::parse_one_based("1, 3", 4).unwrap();
        assert_eq!(t.indices(), &[0, 2]);
        assert_eq!(t.to_string(), "1,3");
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(3, 5), 0);
    }
}
