//! Brute-force reference implementations. Deliberately naive: plain nested
//! loops, linear-space sums and no code shared with the library.

#![allow(dead_code)]

/// Every labelling, site 0 most significant.
pub fn all_patterns(alphabet_sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &k in alphabet_sizes {
        let mut next = Vec::new();
        for prefix in &out {
            for v in 0..k {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

pub fn no_adjacent(x: &[usize], label: usize) -> bool {
    x.windows(2).all(|w| !(w[0] == label && w[1] == label))
}

/// `exp(-U)` normalized over `patterns`.
pub fn gibbs_probabilities(patterns: &[Vec<usize>], energy: impl Fn(&[usize]) -> f64) -> Vec<f64> {
    let weights: Vec<f64> = patterns.iter().map(|x| (-energy(x)).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.iter().map(|w| w / z).collect()
}

/// `P(x_l = v | x_{-l})` by summing the joint over the matching patterns.
pub fn conditional(
    patterns: &[Vec<usize>],
    probs: &[f64],
    alphabet: usize,
    site: usize,
    context: &[usize],
) -> Vec<f64> {
    let mut out = vec![0.0; alphabet];
    for (x, p) in patterns.iter().zip(probs) {
        let same = (0..x.len()).all(|s| s == site || x[s] == context[s]);
        if same {
            out[x[site]] += p;
        }
    }
    let z: f64 = out.iter().sum();
    out.iter().map(|v| v / z).collect()
}

/// Möbius inversion by the subset sum, reference labels all zero.
pub fn mobius(energy: impl Fn(&[usize]) -> f64, clique: &[usize], x: &[usize]) -> f64 {
    let mut total = 0.0;
    for mask in 0u32..(1 << clique.len()) {
        let mut y = vec![0; x.len()];
        let mut dropped = 0;
        for (bit, &s) in clique.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                y[s] = x[s];
            } else {
                dropped += 1;
            }
        }
        let sign = if dropped % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * energy(&y);
    }
    total
}

/// Number of connected components of the Hamming-1 graph on `patterns`.
pub fn flip_components(patterns: &[Vec<usize>]) -> usize {
    let n = patterns.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let d = patterns[i]
                .iter()
                .zip(&patterns[j])
                .filter(|(a, b)| a != b)
                .count();
            if d == 1 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    (0..n).filter(|&i| find(&mut parent, i) == i).count()
}

pub fn flip_edge_count(patterns: &[Vec<usize>]) -> usize {
    let mut edges = 0;
    for i in 0..patterns.len() {
        for j in i + 1..patterns.len() {
            if patterns[i]
                .iter()
                .zip(&patterns[j])
                .filter(|(a, b)| a != b)
                .count()
                == 1
            {
                edges += 1;
            }
        }
    }
    edges
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
