//! Breadth-first search over `SL(m, R)` with the visited set kept as a bitset
//! over a ranked code space, for groups too large for [`super::CayleyGraph`].
//!
//! Two codes are used:
//! - `digits`: all `m x m` matrices over a finite ring, entries as base-`|R|` digits;
//! - `affine`: for `R = Z/p`, `p` prime, the first `m - 1` rows as digits, then
//!   the last row without its pivot coordinate. The pivot is the first nonzero
//!   cofactor of the first `m - 1` rows and is recovered from `det = 1`.
//!   The code space has `p^{m^2 - 1}` points, close to `|SL(m, p)|`.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{is_prime, GroupSpec, SlGens};
use crate::ring::Ring;

/// Default largest code space, in bits per bitset (three bitsets are live).
pub const DEFAULT_BIT_BUDGET: u64 = 1 << 30;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DenseReport {
    pub spec: String,
    pub codec: String,
    pub order: u64,
    pub degree: usize,
    pub sphere_sizes: Vec<u64>,
    pub diameter: usize,
}

/// Left multiplication by a generator, written as a row operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RowOp {
    /// `sigma`: row `i` of the product is row `i - 1`.
    Down,
    /// `sigma^{-1}`: row `i` of the product is row `i + 1`.
    Up,
    /// `e_{dst,src}(coef)`: row `dst` gains `coef` times row `src`.
    Add { dst: usize, src: usize, coef: u64 },
}

#[derive(Clone, Copy, Debug)]
enum Codec {
    Digits { base: u64 },
    Affine { p: u64 },
}

struct Space {
    m: usize,
    ring: Ring,
    codec: Codec,
    size: u64,
    inv: Vec<u64>,
    modulus: Option<u64>,
}

fn checked_pow(base: u64, exp: usize) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

impl Space {
    /// `budget` of `None` builds the code without a bitset size check.
    fn new(m: usize, ring: Ring, budget: Option<u64>) -> Result<Self> {
        let budget_value = budget.unwrap_or(u64::MAX);
        let too_big = |what: String| {
            Error::CapExceeded(format!(
                "code space for SL({m}, {ring}) is {what} bits, budget is {budget_value}"
            ))
        };
        let (codec, size) = match ring {
            Ring::ZMod(p) if is_prime(p) => {
                let size = checked_pow(p, m * m - 1).ok_or_else(|| too_big("over 2^64".into()))?;
                (Codec::Affine { p }, size)
            }
            _ => {
                let base = ring
                    .size()
                    .and_then(|s| u64::try_from(s).ok())
                    .ok_or_else(|| Error::UnsupportedParameter(format!("{ring} is not a small finite ring")))?;
                let size = checked_pow(base, m * m).ok_or_else(|| too_big("over 2^64".into()))?;
                (Codec::Digits { base }, size)
            }
        };
        if size > budget_value {
            return Err(too_big(size.to_string()));
        }
        let inv = match codec {
            Codec::Affine { p } => (0..p).map(|a| ring.inv_small(a).unwrap_or(0)).collect(),
            Codec::Digits { .. } => Vec::new(),
        };
        Ok(Space {
            m,
            ring,
            codec,
            size,
            inv,
            modulus: match ring {
                Ring::ZMod(k) if k < 1 << 32 => Some(k),
                _ => None,
            },
        })
    }

    fn codec_name(&self) -> &'static str {
        match self.codec {
            Codec::Digits { .. } => "digits",
            Codec::Affine { .. } => "affine",
        }
    }

    /// Cofactors `c` of the first `m - 1` rows: `det = sum_j c_j x_j` for last row `x`.
    fn cofactors(&self, g: &[u64], p: u64, out: &mut [u64]) {
        let m = self.m;
        if m == 3 {
            let (a, b) = (&g[0..3], &g[3..6]);
            let pi = p as i64;
            let f = |x: u64, y: u64, z: u64, w: u64| {
                ((x * y) as i64 - (z * w) as i64).rem_euclid(pi) as u64
            };
            out[0] = f(a[1], b[2], a[2], b[1]);
            out[1] = f(a[2], b[0], a[0], b[2]);
            out[2] = f(a[0], b[1], a[1], b[0]);
            return;
        }
        let n = m - 1;
        let mut buffer = [0u64; 64];
        let minor = &mut buffer[..n * n];
        for (j, slot) in out.iter_mut().enumerate().take(m) {
            for r in 0..n {
                let mut c = 0;
                for col in 0..m {
                    if col != j {
                        minor[r * n + c] = g[r * m + col];
                        c += 1;
                    }
                }
            }
            let d = self.det_mod(minor, n, p);
            *slot = if (n + j) % 2 == 0 { d } else { (p - d) % p };
        }
    }

    fn det_mod(&self, a: &mut [u64], n: usize, p: u64) -> u64 {
        let mut det = 1u64;
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| a[r * n + col] != 0) else {
                return 0;
            };
            if piv != col {
                for c in 0..n {
                    a.swap(piv * n + c, col * n + c);
                }
                det = (p - det) % p;
            }
            let pv = a[col * n + col];
            det = det * pv % p;
            let pinv = self.inv[pv as usize];
            for r in col + 1..n {
                let f = a[r * n + col] * pinv % p;
                if f == 0 {
                    continue;
                }
                for c in col..n {
                    a[r * n + c] = (a[r * n + c] + (p - f) * a[col * n + c]) % p;
                }
            }
        }
        det
    }

    fn encode(&self, g: &[u64], scratch: &mut [u64]) -> u64 {
        match self.codec {
            Codec::Digits { base } => g.iter().fold(0u64, |acc, &e| acc * base + e),
            Codec::Affine { p } => {
                let m = self.m;
                let mut idx = g[..m * (m - 1)].iter().fold(0u64, |acc, &e| acc * p + e);
                self.cofactors(g, p, scratch);
                let pivot = scratch[..m].iter().position(|&c| c != 0).expect("invertible");
                for (j, &x) in g[m * (m - 1)..].iter().enumerate() {
                    if j != pivot {
                        idx = idx * p + x;
                    }
                }
                idx
            }
        }
    }

    fn decode(&self, mut idx: u64, g: &mut [u64], scratch: &mut [u64]) {
        let m = self.m;
        match self.codec {
            Codec::Digits { base } => {
                for slot in g.iter_mut().rev() {
                    *slot = idx % base;
                    idx /= base;
                }
            }
            Codec::Affine { p } => {
                let mut tail = [0u64; 16];
                for slot in tail[..m - 1].iter_mut().rev() {
                    *slot = idx % p;
                    idx /= p;
                }
                for slot in g[..m * (m - 1)].iter_mut().rev() {
                    *slot = idx % p;
                    idx /= p;
                }
                self.cofactors(g, p, scratch);
                let pivot = scratch[..m].iter().position(|&c| c != 0).expect("valid code");
                let mut acc = 0u64;
                let mut t = 0;
                for j in 0..m {
                    if j == pivot {
                        continue;
                    }
                    g[m * (m - 1) + j] = tail[t];
                    acc = (acc + scratch[j] * tail[t]) % p;
                    t += 1;
                }
                let rhs = (1 + p - acc) % p;
                g[m * (m - 1) + pivot] = rhs * self.inv[scratch[pivot] as usize] % p;
            }
        }
    }

    fn apply(&self, op: RowOp, g: &[u64], out: &mut [u64]) {
        let m = self.m;
        match op {
            RowOp::Down => {
                for i in 0..m {
                    let src = (i + m - 1) % m;
                    out[i * m..(i + 1) * m].copy_from_slice(&g[src * m..(src + 1) * m]);
                }
            }
            RowOp::Up => {
                for i in 0..m {
                    let src = (i + 1) % m;
                    out[i * m..(i + 1) * m].copy_from_slice(&g[src * m..(src + 1) * m]);
                }
            }
            RowOp::Add { dst, src, coef } => {
                out.copy_from_slice(g);
                if let Some(k) = self.modulus {
                    for c in 0..m {
                        out[dst * m + c] = (out[dst * m + c] + coef * g[src * m + c]) % k;
                    }
                    return;
                }
                for c in 0..m {
                    let v = self.ring.mul_small(coef, g[src * m + c]);
                    out[dst * m + c] = self.ring.add_small(out[dst * m + c], v);
                }
            }
        }
    }
}

fn row_ops(ring: Ring, gens: SlGens) -> Vec<RowOp> {
    let one = 1u64;
    let t = ring.t_small().unwrap_or(0);
    let mut elementary: Vec<(usize, usize, u64)> = vec![(0, 1, one)];
    match gens {
        SlGens::St => {}
        SlGens::Stu => elementary.push((1, 0, one)),
        SlGens::StT => elementary.push((0, 1, t)),
        SlGens::StTUU => {
            elementary.push((0, 1, t));
            elementary.push((1, 0, one));
            elementary.push((1, 0, t));
        }
    }
    let mut ops = vec![RowOp::Down, RowOp::Up];
    for (dst, src, c) in elementary {
        for coef in [c, ring.neg_small(c)] {
            let op = RowOp::Add { dst, src, coef };
            if coef != 0 && !ops.contains(&op) {
                ops.push(op);
            }
        }
    }
    ops
}

/// Sphere sizes of the Cayley graph of `sl:m,ring,gens` by bitset BFS.
pub fn sl_sphere_sizes(m: usize, ring: Ring, gens: SlGens, budget_bits: u64) -> Result<DenseReport> {
    let spec = GroupSpec::Sl { m, ring, gens };
    spec.validate()?;
    let space = Space::new(m, ring, Some(budget_bits))?;
    let ops = row_ops(ring, gens);
    let words = space.size.div_ceil(64) as usize;
    let mut visited = vec![0u64; words];
    let mut frontier = vec![0u64; words];
    let mut next = vec![0u64; words];

    let mut g = vec![0u64; m * m];
    let mut h = vec![0u64; m * m];
    let mut scratch = vec![0u64; m];
    for i in 0..m {
        g[i * m + i] = 1;
    }
    let start = space.encode(&g, &mut scratch);
    visited[(start / 64) as usize] |= 1 << (start % 64);
    frontier[(start / 64) as usize] |= 1 << (start % 64);
    let mut spheres = vec![1u64];
    loop {
        let mut count = 0u64;
        for (w, &bits) in frontier.iter().enumerate() {
            let mut bits = bits;
            while bits != 0 {
                let b = bits.trailing_zeros() as u64;
                bits &= bits - 1;
                space.decode(w as u64 * 64 + b, &mut g, &mut scratch);
                for &op in &ops {
                    space.apply(op, &g, &mut h);
                    let idx = space.encode(&h, &mut scratch);
                    let (word, mask) = ((idx / 64) as usize, 1u64 << (idx % 64));
                    if visited[word] & mask == 0 {
                        visited[word] |= mask;
                        next[word] |= mask;
                        count += 1;
                    }
                }
            }
        }
        if count == 0 {
            break;
        }
        spheres.push(count);
        std::mem::swap(&mut frontier, &mut next);
        next.iter_mut().for_each(|x| *x = 0);
    }
    Ok(DenseReport {
        spec: spec.to_string(),
        codec: space.codec_name().to_string(),
        order: spheres.iter().sum(),
        degree: ops.len(),
        diameter: spheres.len() - 1,
        sphere_sizes: spheres,
    })
}

/// Smallest radius whose ball can contain `order` elements, given exact sphere
/// sizes up to some radius and degree `d`: each later sphere is at most `d - 1`
/// times the previous one.
pub fn diameter_lower_bound(order: u128, known_spheres: &[u64], degree: usize) -> usize {
    let mut total: u128 = known_spheres.iter().map(|&s| s as u128).sum();
    let mut r = known_spheres.len().saturating_sub(1);
    let mut last = *known_spheres.last().unwrap_or(&1) as u128;
    let growth = degree.saturating_sub(1).max(1) as u128;
    while total < order {
        last = if r == 0 {
            degree.max(1) as u128
        } else {
            last.saturating_mul(growth)
        };
        total = total.saturating_add(last);
        r += 1;
    }
    r
}

/// `|SL(n, p)|` for a prime `p`.
pub fn sl_order(n: usize, p: u64) -> Option<u128> {
    let p = p as u128;
    let mut order = p.checked_pow((n * n.saturating_sub(1) / 2) as u32)?;
    for i in 2..=n as u32 {
        order = order.checked_mul(p.checked_pow(i)? - 1)?;
    }
    Some(order)
}

/// Diameter bracket for `sl:m,zmod<p>,gens`, `p` prime, without visiting the
/// whole group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiameterBracket {
    pub spec: String,
    pub order: u128,
    pub degree: usize,
    /// Exact sphere sizes of the explored ball.
    pub sphere_sizes: Vec<u64>,
    pub lower: usize,
    pub upper: Option<usize>,
    /// Number `t` of fixed columns in the frame stabilizer `Q`.
    pub frame: usize,
    /// Eccentricity of the standard `t`-frame in its orbit.
    pub frame_eccentricity: usize,
    /// Largest `Q`-distance using products of ball elements of `Q`.
    pub stabilizer_bound: Option<usize>,
}

/// Ball around the identity, as affine codes with distances, grown sphere by
/// sphere while it holds at most `cap` elements.
fn partial_ball(space: &Space, ops: &[RowOp], cap: usize) -> (Vec<u64>, HashMap<u64, u32>) {
    let m = space.m;
    let mut g = vec![0u64; m * m];
    let mut h = vec![0u64; m * m];
    let mut scratch = vec![0u64; m];
    for i in 0..m {
        g[i * m + i] = 1;
    }
    let start = space.encode(&g, &mut scratch);
    let mut dist = HashMap::from([(start, 0u32)]);
    let mut frontier = vec![start];
    let mut spheres = vec![1u64];
    while !frontier.is_empty() {
        let r = spheres.len() as u32;
        let mut next = Vec::new();
        for &code in &frontier {
            space.decode(code, &mut g, &mut scratch);
            for &op in ops {
                space.apply(op, &g, &mut h);
                let c = space.encode(&h, &mut scratch);
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(c) {
                    e.insert(r);
                    next.push(c);
                }
            }
        }
        if dist.len() > cap {
            for c in &next {
                dist.remove(c);
            }
            break;
        }
        if !next.is_empty() {
            spheres.push(next.len() as u64);
        }
        frontier = next;
    }
    (spheres, dist)
}

/// Largest distance from the standard frame `(e_0, ..., e_{t-1})` in the
/// Schreier graph of `t`-frames.
fn frame_eccentricity(m: usize, p: u64, t: usize, ops: &[RowOp]) -> usize {
    let digits = m * t;
    let size = p.pow(digits as u32);
    let mut seen = vec![0u64; size.div_ceil(64) as usize];
    let encode = |v: &[u64]| v.iter().fold(0u64, |acc, &x| acc * p + x);
    let mut v = vec![0u64; digits];
    for j in 0..t {
        v[j * m + j] = 1;
    }
    let start = encode(&v);
    seen[(start / 64) as usize] |= 1 << (start % 64);
    let mut frontier = vec![start];
    let mut w = vec![0u64; digits];
    let mut ecc = 0;
    loop {
        let mut next = Vec::new();
        for &code in &frontier {
            let mut c = code;
            for slot in v.iter_mut().rev() {
                *slot = c % p;
                c /= p;
            }
            for &op in ops {
                for j in 0..t {
                    let (col, out) = (&v[j * m..(j + 1) * m], &mut w[j * m..(j + 1) * m]);
                    match op {
                        RowOp::Down => (0..m).for_each(|i| out[i] = col[(i + m - 1) % m]),
                        RowOp::Up => (0..m).for_each(|i| out[i] = col[(i + 1) % m]),
                        RowOp::Add { dst, src, coef } => {
                            out.copy_from_slice(col);
                            out[dst] = (out[dst] + coef * col[src]) % p;
                        }
                    }
                }
                let x = encode(&w);
                let (word, mask) = ((x / 64) as usize, 1u64 << (x % 64));
                if seen[word] & mask == 0 {
                    seen[word] |= mask;
                    next.push(x);
                }
            }
        }
        if next.is_empty() {
            return ecc;
        }
        ecc += 1;
        frontier = next;
    }
}

/// Stabilizer `Q` of the first `t` columns, indexed by its last `m - t` columns.
struct Stabilizer {
    m: usize,
    t: usize,
    p: u64,
}

impl Stabilizer {
    fn size(&self) -> u64 {
        self.p.pow((self.m * (self.m - self.t)) as u32)
    }

    fn index(&self, g: &[u64]) -> u64 {
        let (m, t) = (self.m, self.t);
        (t..m).fold(0u64, |acc, j| (0..m).fold(acc, |a, i| a * self.p + g[i * m + j]))
    }

    fn matrix(&self, mut idx: u64, g: &mut [u64]) {
        let (m, t) = (self.m, self.t);
        g.iter_mut().for_each(|x| *x = 0);
        for j in 0..t {
            g[j * m + j] = 1;
        }
        for j in (t..m).rev() {
            for i in (0..m).rev() {
                g[i * m + j] = idx % self.p;
                idx /= self.p;
            }
        }
    }

    fn contains(&self, g: &[u64]) -> bool {
        let m = self.m;
        (0..self.t).all(|j| (0..m).all(|i| g[i * m + j] == u64::from(i == j)))
    }

    /// Index of `q h`; only the last `m - t` columns change.
    fn product_index(&self, q: &[u64], h: &[u64]) -> u64 {
        let m = self.m;
        let mut idx = 0u64;
        for j in self.t..m {
            for i in 0..m {
                let v = (0..m).fold(0u64, |acc, k| (acc + q[i * m + k] * h[k * m + j]) % self.p);
                idx = idx * self.p + v;
            }
        }
        idx
    }

    /// Largest weighted distance from the identity with edges `q -> q h`, or
    /// `None` when `generators` do not generate `Q`.
    fn weighted_diameter(&self, generators: &[(Vec<u64>, u32)], order: u64) -> Option<usize> {
        let max_weight = generators.iter().map(|g| g.1).max()? as usize;
        let mut dist = vec![u32::MAX; self.size() as usize];
        let mut q = vec![0u64; self.m * self.m];
        let mut identity = vec![0u64; self.m * self.m];
        for i in 0..self.m {
            identity[i * self.m + i] = 1;
        }
        let start = self.index(&identity);
        dist[start as usize] = 0;
        // Dial's buckets, indexed by distance modulo `max_weight + 1`.
        let mut buckets: Vec<Vec<u64>> = vec![Vec::new(); max_weight + 1];
        buckets[0].push(start);
        let span = buckets.len();
        let (mut reached, mut d, mut pending, mut far) = (0u64, 0usize, 1usize, 0usize);
        while pending > 0 {
            let slot = d % span;
            let current = std::mem::take(&mut buckets[slot]);
            pending -= current.len();
            for idx in current {
                if dist[idx as usize] as usize != d {
                    continue;
                }
                reached += 1;
                far = d;
                self.matrix(idx, &mut q);
                for (h, w) in generators {
                    let x = self.product_index(&q, h) as usize;
                    let nd = d as u32 + w;
                    if nd < dist[x] {
                        dist[x] = nd;
                        buckets[nd as usize % span].push(x as u64);
                        pending += 1;
                    }
                }
            }
            d += 1;
        }
        (reached == order).then_some(far)
    }
}

/// Largest number of elements the stabilizer search may index.
const STABILIZER_INDEX_LIMIT: u64 = 1 << 24;

/// Largest `index size x generators` product for one stabilizer search.
const STABILIZER_WORK_LIMIT: u64 = 1 << 32;

/// Bracket on the diameter of `sl:m,zmod<p>,gens`, `p` prime.
///
/// The lower bound counts: spheres beyond the explored ball grow at most by a
/// factor `degree - 1`. For the upper bound, any `g` is `w^{-1} q` where `w`
/// moves the first `t` columns of `g` back to the standard frame, so
/// `|w| <= ecc`, and `q` fixes them; `q` is then a product of ball elements
/// fixing the frame.
pub fn sl_diameter_bracket(
    m: usize,
    p: u64,
    gens: SlGens,
    ball_cap: usize,
    budget_bits: u64,
) -> Result<DiameterBracket> {
    let ring = Ring::ZMod(p);
    let spec = GroupSpec::Sl { m, ring, gens };
    spec.validate()?;
    if !is_prime(p) {
        return Err(Error::UnsupportedParameter(format!("{p} is not prime")));
    }
    let space = Space::new(m, ring, None)?;
    let ops = row_ops(ring, gens);
    let order = sl_order(m, p).ok_or_else(|| Error::CapExceeded(format!("|SL({m}, {p})| overflows")))?;
    let (spheres, ball) = partial_ball(&space, &ops, ball_cap);
    let explored: u128 = spheres.iter().map(|&s| s as u128).sum();
    let mut report = DiameterBracket {
        spec: spec.to_string(),
        order,
        degree: ops.len(),
        lower: diameter_lower_bound(order, &spheres, ops.len()),
        sphere_sizes: spheres,
        upper: None,
        frame: 0,
        frame_eccentricity: 0,
        stabilizer_bound: None,
    };
    if explored == order {
        report.upper = Some(report.sphere_sizes.len() - 1);
        return Ok(report);
    }
    let mut g = vec![0u64; m * m];
    let mut scratch = vec![0u64; m];
    for t in (1..m).rev() {
        let index = checked_pow(p, m * (m - t));
        let frames = checked_pow(p, m * t);
        if !(index.is_some_and(|s| s <= STABILIZER_INDEX_LIMIT) && frames.is_some_and(|s| s <= budget_bits)) {
            continue;
        }
        let stabilizer = Stabilizer { m, t, p };
        let q_order = (sl_order(m - t, p).unwrap_or(1) * (p as u128).pow((t * (m - t)) as u32)) as u64;
        let mut members: Vec<(Vec<u64>, u32)> = Vec::new();
        for (&code, &d) in &ball {
            if d == 0 {
                continue;
            }
            space.decode(code, &mut g, &mut scratch);
            if stabilizer.contains(&g) {
                members.push((g.clone(), d));
            }
        }
        members.sort();
        members.sort_by_key(|x| x.1);
        let mut k = 16.min(members.len());
        while k > 0 && stabilizer.size().saturating_mul(k as u64) <= STABILIZER_WORK_LIMIT {
            if let Some(b) = stabilizer.weighted_diameter(&members[..k], q_order) {
                let ecc = frame_eccentricity(m, p, t, &ops);
                report.frame = t;
                report.frame_eccentricity = ecc;
                report.stabilizer_bound = Some(b);
                report.upper = Some(ecc + b);
                return Ok(report);
            }
            if k == members.len() {
                break;
            }
            k = (2 * k).min(members.len());
        }
    }
    Ok(report)
}
