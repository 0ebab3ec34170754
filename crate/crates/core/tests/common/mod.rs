//! Reference implementations shared by the integration tests. Nothing here
//! calls into the library's search, graph or spectral code.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use boxspace::element::Element;
use boxspace::groups::{GroupSpec, MarkedGroup};
use boxspace::words::{reduce, Letter, Word};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn group(text: &str) -> MarkedGroup {
    MarkedGroup::new(text.parse::<GroupSpec>().unwrap()).unwrap()
}

pub fn random_word(rng: &mut ChaCha8Rng, arity: usize, max_len: usize) -> Word {
    let len = rng.gen_range(0..=max_len);
    let raw: Vec<Letter> = (0..len)
        .map(|_| {
            let g = rng.gen_range(1..=arity as Letter);
            if rng.gen_bool(0.5) {
                g
            } else {
                -g
            }
        })
        .collect();
    reduce(arity, &raw).unwrap()
}

/// Square matrices over `Z/k` (or `Z` when `k == 0`) as plain `i128` arrays.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mat {
    pub n: usize,
    pub k: i128,
    pub a: Vec<i128>,
}

impl Mat {
    pub fn identity(n: usize, k: i128) -> Mat {
        let mut a = vec![0; n * n];
        for i in 0..n {
            a[i * n + i] = 1;
        }
        Mat { n, k, a }
    }

    /// Identity plus `v` at `(i, j)`.
    pub fn elementary(n: usize, k: i128, i: usize, j: usize, v: i128) -> Mat {
        let mut m = Mat::identity(n, k);
        m.a[i * n + j] = if k > 0 { v.rem_euclid(k) } else { v };
        m
    }

    /// `sigma_{ij} = 1` iff `i = j + 1 (mod n)`.
    pub fn sigma(n: usize, k: i128) -> Mat {
        let mut a = vec![0; n * n];
        for j in 0..n {
            a[((j + 1) % n) * n + j] = 1;
        }
        Mat { n, k, a }
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        let n = self.n;
        let mut a = vec![0i128; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0;
                for l in 0..n {
                    s += self.a[i * n + l] * o.a[l * n + j];
                }
                a[i * n + j] = if self.k > 0 { s.rem_euclid(self.k) } else { s };
            }
        }
        Mat { n, k: self.k, a }
    }

    pub fn transpose(&self) -> Mat {
        let n = self.n;
        let mut a = vec![0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[j * n + i] = self.a[i * n + j];
            }
        }
        Mat { n, k: self.k, a }
    }
}

/// `(sigma, tau, upsilon)` and their inverses, indexed by letter.
pub fn sl_letter(n: usize, k: i128, x: Letter) -> Mat {
    match x {
        1 => Mat::sigma(n, k),
        -1 => Mat::sigma(n, k).transpose(),
        2 => Mat::elementary(n, k, 0, 1, 1),
        -2 => Mat::elementary(n, k, 0, 1, -1),
        3 => Mat::elementary(n, k, 1, 0, 1),
        -3 => Mat::elementary(n, k, 1, 0, -1),
        _ => unreachable!(),
    }
}

pub fn eval_sl(w: &Word, n: usize, k: i128) -> Mat {
    w.letters()
        .iter()
        .fold(Mat::identity(n, k), |acc, &x| acc.mul(&sl_letter(n, k, x)))
}

/// Word length of `target` over the symmetric set `moves` by a search that
/// grows balls around the identity and around `target` alternately.
pub fn bidirectional_distance(moves: &[Mat], target: &Mat) -> usize {
    let id = Mat::identity(target.n, target.k);
    if *target == id {
        return 0;
    }
    let mut seen = [HashMap::from([(id.clone(), 0usize)]), HashMap::from([(target.clone(), 0usize)])];
    let mut frontier = [vec![id], vec![target.clone()]];
    let mut depth = [0usize, 0usize];
    loop {
        let side = if frontier[0].len() <= frontier[1].len() { 0 } else { 1 };
        assert!(!frontier[side].is_empty(), "target is not reachable");
        let mut next = Vec::new();
        let mut best: Option<usize> = None;
        for x in &frontier[side] {
            for s in moves {
                let y = s.mul(x);
                if let Some(&d) = seen[1 - side].get(&y) {
                    let total = depth[side] + 1 + d;
                    best = Some(best.map_or(total, |b: usize| b.min(total)));
                }
                if !seen[side].contains_key(&y) {
                    seen[side].insert(y.clone(), depth[side] + 1);
                    next.push(y);
                }
            }
        }
        if let Some(b) = best {
            return b;
        }
        depth[side] += 1;
        frontier[side] = next;
    }
}

/// All-pairs hop distances of an undirected graph.
pub fn all_pairs(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    (0..n)
        .map(|s| {
            let mut d = vec![u32::MAX; n];
            d[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    if d[v] == u32::MAX {
                        d[v] = d[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            d
        })
        .collect()
}

/// Elements of the closed `radius`-ball around the identity, by evaluating
/// every reduced word of length at most `radius`.
pub fn ball_elements(g: &MarkedGroup, radius: usize) -> Vec<Element> {
    let words = boxspace::words::enumerate_ball(g.arity(), radius, 1 << 22).unwrap();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for w in &words {
        let e = g.evaluate(w).unwrap();
        if seen.insert(e.key()) {
            out.push(e);
        }
    }
    out
}

/// `min |d Y| / |Y|` over all nonempty `Y` inside the `radius`-ball, where
/// `d Y` is the set of `s y` outside `Y`. Returns the reduced fraction.
pub fn rel_by_subsets(g: &MarkedGroup, radius: usize) -> (u64, u64) {
    let ball = ball_elements(g, radius);
    let n = ball.len();
    assert!(n <= 22, "subset enumeration over {n} elements");
    let index: HashMap<Vec<u8>, usize> = ball.iter().enumerate().map(|(i, e)| (e.key(), i)).collect();
    // neighbors inside the ball as a bitmask, plus the set of outside keys
    let mut inside = vec![0u32; n];
    let mut outside: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut outside_keys: HashMap<Vec<u8>, usize> = HashMap::new();
    for (i, e) in ball.iter().enumerate() {
        for x in boxspace::words::letters(g.arity()) {
            let y = g.mul(g.letter(x), e).unwrap();
            let key = y.key();
            match index.get(&key) {
                Some(&j) => inside[i] |= 1 << j,
                None => {
                    let next = outside_keys.len();
                    let id = *outside_keys.entry(key).or_insert(next);
                    outside[i].push(id);
                }
            }
        }
    }
    let mut best = (u64::MAX, 1u64);
    let mut marks = vec![0u32; outside_keys.len()];
    for mask in 1u32..(1u32 << n) {
        let mut nbhd = 0u32;
        let mut out_count = 0u64;
        for i in 0..n {
            if mask >> i & 1 == 1 {
                nbhd |= inside[i];
                for &o in &outside[i] {
                    if marks[o] != mask {
                        marks[o] = mask;
                        out_count += 1;
                    }
                }
            }
        }
        let boundary = (nbhd & !mask).count_ones() as u64 + out_count;
        let size = mask.count_ones() as u64;
        if (boundary as u128) * (best.1 as u128) < (best.0 as u128) * (size as u128) {
            best = (boundary, size);
        }
    }
    let g = num_integer::gcd(best.0, best.1).max(1);
    (best.0 / g, best.1 / g)
}

/// Smallest nonzero Laplacian eigenvalue of a connected simple graph by power
/// iteration on `c I - L` restricted to vectors orthogonal to constants.
pub fn power_lambda1(n: usize, edges: &[(u32, u32)], iterations: usize) -> f64 {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    let c = 2.0 * adj.iter().map(Vec::len).max().unwrap_or(0) as f64 + 1.0;
    let apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let lx = adj[i].len() as f64 * x[i] - adj[i].iter().map(|&j| x[j]).sum::<f64>();
                c * x[i] - lx
            })
            .collect()
    };
    let center = |x: &mut Vec<f64>| {
        let mean = x.iter().sum::<f64>() / n as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    };
    let mut x: Vec<f64> = (0..n).map(|i| ((i * 7919 + 13) % 101) as f64 - 50.0).collect();
    center(&mut x);
    let mut mu = 0.0;
    for _ in 0..iterations {
        let mut y = apply(&x);
        mu = y.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        center(&mut y);
        x = y;
    }
    c - mu
}
