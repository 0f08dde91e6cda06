use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use super::shape::{canonical_form, decompose, ShapeStats, WalkShape};
use crate::{Error, Result};

pub const DEFAULT_ENUMERATION_BUDGET: u128 = 10_000_000;

/// Every closed walk of a given length on the complete graph `K_n`, grouped
/// by shape.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub ell: usize,
    pub n_labels: usize,
    pub total_walks: u64,
    /// Walk counts per `(edges, singletons, excess)` class.
    pub classes: BTreeMap<ShapeStats, u64>,
    /// Walk counts per first-visit canonical form, with its decomposition.
    pub shapes: BTreeMap<Vec<u32>, (u64, WalkShape)>,
}

/// Enumerates all `n^ell` label sequences and keeps those that are closed
/// walks on `K_n` (no step stays put, including the wrap-around step).
pub fn enumerate_shapes(ell: usize, n_labels: usize, budget: u128) -> Result<Enumeration> {
    if ell == 0 || n_labels == 0 {
        return Err(Error::InvalidArgument("ell and n_labels must be positive".into()));
    }
    let size = (n_labels as u128).checked_pow(ell as u32).unwrap_or(u128::MAX);
    if size > budget {
        return Err(Error::ResourceBudget { needed: size, budget });
    }
    let mut cache: HashMap<Vec<u32>, WalkShape> = HashMap::new();
    let mut shapes: BTreeMap<Vec<u32>, (u64, WalkShape)> = BTreeMap::new();
    let mut classes = BTreeMap::new();
    let mut total = 0u64;
    let mut seq = vec![0u32; ell];
    let mut closed = Vec::with_capacity(ell + 1);
    loop {
        let ok = (0..ell).all(|i| seq[i] != seq[(i + 1) % ell]);
        if ok {
            closed.clear();
            closed.extend_from_slice(&seq);
            closed.push(seq[0]);
            let canon = canonical_form(&closed);
            let shape = match cache.get(&canon) {
                Some(s) => s.clone(),
                None => {
                    let s = decompose(&canon)?;
                    cache.insert(canon.clone(), s.clone());
                    s
                }
            };
            *classes.entry(shape.stats).or_insert(0) += 1;
            shapes.entry(canon).or_insert((0, shape)).0 += 1;
            total += 1;
        }
        // odometer increment
        let mut i = ell;
        loop {
            if i == 0 {
                return Ok(Enumeration { ell, n_labels, total_walks: total, classes, shapes });
            }
            i -= 1;
            seq[i] += 1;
            if (seq[i] as usize) < n_labels {
                break;
            }
            seq[i] = 0;
        }
    }
}

/// `n^{a-c+1} l^{2(l-b)} l^{2c}` exactly; the power of `n` can be negative.
pub fn count_bound(ell: usize, n: usize, a: usize, b: usize, c: usize) -> Result<BigRational> {
    if a > ell || b > ell || c > ell {
        return Err(Error::InvalidArgument(format!("class ({a}, {b}, {c}) outside [0, {ell}]")));
    }
    let nb = BigRational::from_integer(BigInt::from(n));
    let lb = BigInt::from(ell);
    let exp_n = a as i64 - c as i64 + 1;
    let n_part = if exp_n >= 0 {
        Pow::pow(&nb, exp_n as u64)
    } else {
        BigRational::one() / Pow::pow(&nb, (-exp_n) as u64)
    };
    let l_part = BigRational::from_integer(Pow::pow(&lb, (2 * (ell - b) + 2 * c) as u64));
    Ok(n_part * l_part)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub ell: usize,
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub true_count: u64,
    pub count_bound: String,
    pub within_bound: bool,
}

impl Enumeration {
    pub fn class_rows(&self) -> Result<Vec<ClassRow>> {
        self.classes
            .iter()
            .map(|(s, &count)| {
                let bound = count_bound(self.ell, self.n_labels, s.edges, s.singletons, s.excess)?;
                let within = BigRational::from_integer(BigInt::from(count)) <= bound;
                Ok(ClassRow {
                    ell: self.ell,
                    a: s.edges,
                    b: s.singletons,
                    c: s.excess,
                    true_count: count,
                    count_bound: bound.to_string(),
                    within_bound: within,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_two_on_five_labels() {
        let e = enumerate_shapes(2, 5, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!(e.total_walks, 20);
        assert_eq!(e.classes.len(), 1);
        assert_eq!(e.classes[&ShapeStats { edges: 1, singletons: 0, excess: 0 }], 20);
    }

    #[test]
    fn length_three_are_triangles() {
        let e = enumerate_shapes(3, 4, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert_eq!(e.total_walks, 24);
        assert_eq!(e.classes[&ShapeStats { edges: 3, singletons: 3, excess: 1 }], 24);
    }

    #[test]
    fn closed_walk_count_formula() {
        // (n-1)^l + (-1)^l (n-1) closed walks of length l on K_n
        for (l, n) in [(4usize, 4usize), (5, 5), (6, 3)] {
            let e = enumerate_shapes(l, n, DEFAULT_ENUMERATION_BUDGET).unwrap();
            let m = n as i64 - 1;
            let expect = m.pow(l as u32) + if l % 2 == 0 { m } else { -m };
            assert_eq!(e.total_walks as i64, expect);
        }
    }

    #[test]
    fn bound_values() {
        assert_eq!(count_bound(2, 5, 1, 0, 0).unwrap(), BigRational::from_integer(400.into()));
        // c = a: n^1 l^{2(l-b)} l^{2a}
        assert_eq!(count_bound(3, 7, 2, 3, 2).unwrap(), BigRational::from_integer((7 * 81).into()));
        let neg = count_bound(4, 2, 0, 4, 3).unwrap();
        assert_eq!(neg, BigRational::new(BigInt::from(4u64.pow(6)), BigInt::from(4)));
        assert!(count_bound(3, 4, 4, 0, 0).is_err());
    }

    #[test]
    fn budget_guard() {
        assert!(matches!(enumerate_shapes(8, 10, 1000), Err(Error::ResourceBudget { .. })));
    }

    #[test]
    fn four_cycles_within_bound() {
        let e = enumerate_shapes(4, 4, DEFAULT_ENUMERATION_BUDGET).unwrap();
        let rows = e.class_rows().unwrap();
        assert!(rows.iter().all(|r| r.within_bound));
        let cycles = rows.iter().find(|r| (r.a, r.b, r.c) == (4, 4, 1)).unwrap();
        assert_eq!(cycles.true_count, 24);
    }
}
