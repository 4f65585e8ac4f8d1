//! Brute-force oracles on integer-lattice laws in one dimension.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tvgan::distributions::DiscreteDist;

/// Lattice law keyed by coordinate.
pub type Table = BTreeMap<i64, f64>;

pub fn table(d: &DiscreteDist) -> Table {
    d.iter().map(|(x, p)| (x[0].round() as i64, p)).collect()
}

/// Law of `X + Z`, `Z ~ (1 - gamma) δ_0 + gamma slab`, by enumerating every pair.
pub fn brute_sum(px: &Table, gamma: f64, slab: &Table) -> Table {
    let mut noise = Table::new();
    *noise.entry(0).or_default() += 1.0 - gamma;
    for (&z, &w) in slab {
        *noise.entry(z).or_default() += gamma * w;
    }
    let mut out = Table::new();
    for (&x, &p) in px {
        for (&z, &q) in &noise {
            *out.entry(x + z).or_default() += p * q;
        }
    }
    out
}

pub fn brute_mix(parts: &[(f64, Table)]) -> Table {
    let mut out = Table::new();
    for (a, t) in parts {
        for (&k, &p) in t {
            *out.entry(k).or_default() += a * p;
        }
    }
    out
}

fn keys(a: &Table, b: &Table) -> BTreeSet<i64> {
    a.keys().chain(b.keys()).copied().collect()
}

fn at(t: &Table, k: i64) -> f64 {
    *t.get(&k).unwrap_or(&0.0)
}

pub fn brute_tv(a: &Table, b: &Table) -> f64 {
    0.5 * keys(a, b)
        .into_iter()
        .map(|k| (at(a, k) - at(b, k)).abs())
        .sum::<f64>()
}

/// Jensen-Shannon divergence in nats.
pub fn brute_jsd(a: &Table, b: &Table) -> f64 {
    let kl_to_mid = |p: f64, q: f64| {
        if p > 0.0 {
            p * (2.0 * p / (p + q)).ln()
        } else {
            0.0
        }
    };
    0.5 * keys(a, b)
        .into_iter()
        .map(|k| kl_to_mid(at(a, k), at(b, k)) + kl_to_mid(at(b, k), at(a, k)))
        .sum::<f64>()
}

/// Up to `max_len` distinct points in `[-span, span]` with random positive weights.
pub fn random_lattice_dist(rng: &mut ChaCha8Rng, max_len: usize, span: i64) -> DiscreteDist {
    let n = rng.random_range(1..=max_len);
    let mut xs: Vec<i64> = Vec::new();
    while xs.len() < n {
        let x = rng.random_range(-span..=span);
        if !xs.contains(&x) {
            xs.push(x);
        }
    }
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
    let t: f64 = w.iter().sum();
    let xs: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
    let ps: Vec<f64> = w.iter().map(|v| v / t).collect();
    DiscreteDist::on_line(&xs, &ps).unwrap()
}
