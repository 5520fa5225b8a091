//! Brute-force reference implementations used only by tests.
#![allow(dead_code)]

use std::collections::HashMap;

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_depth: Option<u32>,
    pub min_leaf: usize,
    pub min_split: usize,
}

fn leaf_sse(rows: &[(Vec<f64>, f64)], members: &[usize]) -> f64 {
    let n = members.len() as f64;
    let mean = members.iter().map(|&i| rows[i].1).sum::<f64>() / n;
    members.iter().map(|&i| (rows[i].1 - mean).powi(2)).sum()
}

fn thresholds(rows: &[(Vec<f64>, f64)], members: &[usize], f: usize) -> Vec<f64> {
    let mut v: Vec<f64> = members.iter().map(|&i| rows[i].0[f]).collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0).collect()
}

fn may_split(limits: &Limits, n: usize, depth: u32) -> bool {
    limits.max_depth.is_none_or(|d| depth < d) && n >= limits.min_split.max(2)
}

/// Training SSE of the tree grown by exhaustively scoring every
/// (feature, threshold) partition at each node, with SSE recomputed from
/// scratch for every candidate.
pub fn greedy_sse(rows: &[(Vec<f64>, f64)], limits: &Limits) -> f64 {
    fn grow(rows: &[(Vec<f64>, f64)], members: Vec<usize>, depth: u32, limits: &Limits) -> f64 {
        let here = leaf_sse(rows, &members);
        let first = rows[members[0]].1;
        if here == 0.0 || members.iter().all(|&i| rows[i].1 == first) {
            return here;
        }
        if !may_split(limits, members.len(), depth) {
            return here;
        }
        let p = rows[members[0]].0.len();
        let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
        for f in 0..p {
            for t in thresholds(rows, &members, f) {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    members.iter().partition(|&&i| rows[i].0[f] <= t);
                if l.len() < limits.min_leaf.max(1) || r.len() < limits.min_leaf.max(1) {
                    continue;
                }
                let score = leaf_sse(rows, &l) + leaf_sse(rows, &r);
                let better = match &best {
                    None => true,
                    Some((b, _, _)) => score < b - 1e-9 * (1.0 + b.abs()),
                };
                if better {
                    best = Some((score, l, r));
                }
            }
        }
        match best {
            None => here,
            Some((_, l, r)) => grow(rows, l, depth + 1, limits) + grow(rows, r, depth + 1, limits),
        }
    }
    grow(rows, (0..rows.len()).collect(), 0, limits)
}

/// Minimum training SSE over every tree that honours `limits`, found by
/// memoised enumeration over row subsets. Requires at most 16 rows.
pub fn optimal_sse(rows: &[(Vec<f64>, f64)], limits: &Limits) -> f64 {
    assert!(rows.len() <= 16);
    fn best(
        rows: &[(Vec<f64>, f64)],
        mask: u32,
        depth: u32,
        limits: &Limits,
        memo: &mut HashMap<(u32, u32), f64>,
    ) -> f64 {
        if let Some(&v) = memo.get(&(mask, depth)) {
            return v;
        }
        let members: Vec<usize> = (0..rows.len()).filter(|i| mask >> i & 1 == 1).collect();
        let mut value = leaf_sse(rows, &members);
        if value > 0.0 && may_split(limits, members.len(), depth) {
            let p = rows[members[0]].0.len();
            for f in 0..p {
                for t in thresholds(rows, &members, f) {
                    let left: u32 = members
                        .iter()
                        .filter(|&&i| rows[i].0[f] <= t)
                        .fold(0, |m, &i| m | 1 << i);
                    let right = mask & !left;
                    let (nl, nr) = (left.count_ones() as usize, right.count_ones() as usize);
                    if nl < limits.min_leaf.max(1) || nr < limits.min_leaf.max(1) {
                        continue;
                    }
                    let v = best(rows, left, depth + 1, limits, memo)
                        + best(rows, right, depth + 1, limits, memo);
                    value = value.min(v);
                }
            }
        }
        memo.insert((mask, depth), value);
        value
    }
    let all = if rows.len() == 32 { u32::MAX } else { (1u32 << rows.len()) - 1 };
    best(rows, all, 0, limits, &mut HashMap::new())
}

/// Deterministic small-integer datasets and limits from a seed.
pub fn random_case(seed: u64) -> (Vec<(Vec<f64>, f64)>, Limits) {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    let mut next = |m: u64| {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        s % m
    };
    let n = 1 + next(8) as usize;
    let p = 1 + next(2) as usize;
    let rows = (0..n)
        .map(|_| {
            let x = (0..p).map(|_| next(5) as f64).collect();
            (x, next(11) as f64)
        })
        .collect();
    let limits = Limits {
        max_depth: match next(5) {
            0 => None,
            d => Some(d as u32),
        },
        min_leaf: 1 + next(3) as usize,
        min_split: next(7) as usize,
    };
    (rows, limits)
}
