//! The isoperimetric profile `Rel(G; R) = min |∂Y| / |Y|` over nonempty `Y`
//! inside the `R`-ball of the identity, with `∂Y` the set of elements at
//! distance one from `Y` and outside it, computed in the whole group.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::element::Element;
use crate::error::{Error, Result};
use crate::graph::{explore, Ball};
use crate::groups::MarkedGroup;
use crate::words::letters;

pub const DEFAULT_EXACT_THRESHOLD: usize = 22;
pub const DEFAULT_BALL_LIMIT: usize = 1_000_000;

/// Widest outer ball the exact search handles, in bits.
const MASK_BITS: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Heuristic,
}

/// Nonnegative fraction `num / den`, compared exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        let g = num_integer::gcd(num, den).max(1);
        Ratio {
            num: num / g,
            den: den / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FolnerEntry {
    pub radius: usize,
    pub value: Ratio,
    /// Witness elements sorted by key.
    pub witness: Vec<Element>,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FolnerProfile {
    pub entries: Vec<FolnerEntry>,
}

impl FolnerProfile {
    /// `R,value_num,value_den,exact,witness_size` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("R,value_num,value_den,exact,witness_size\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                e.radius,
                e.value.num,
                e.value.den,
                e.exact,
                e.witness.len()
            );
        }
        s
    }
}

/// `∂Y` recomputed from scratch by left multiplication with `S ∪ S^{-1}`.
pub fn boundary(group: &MarkedGroup, ys: &[Element]) -> Result<BTreeSet<Vec<u8>>> {
    let inside: BTreeSet<Vec<u8>> = ys.iter().map(Element::key).collect();
    let mut out = BTreeSet::new();
    for y in ys {
        for x in letters(group.arity()) {
            let key = group.mul(group.letter(x), y)?.key();
            if !inside.contains(&key) {
                out.insert(key);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
struct Mask([u64; MASK_BITS / 64]);

impl Mask {
    const EMPTY: Mask = Mask([0; MASK_BITS / 64]);

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn or(self, o: Mask) -> Mask {
        let mut r = self;
        for (a, b) in r.0.iter_mut().zip(o.0) {
            *a |= b;
        }
        r
    }

    fn and_not(self, o: Mask) -> Mask {
        let mut r = self;
        for (a, b) in r.0.iter_mut().zip(o.0) {
            *a &= !b;
        }
        r
    }

    fn count(self) -> u64 {
        self.0.iter().map(|w| w.count_ones() as u64).sum()
    }
}

/// Ball of radius `R` (indices `0..inner`) inside the explored `R + 1` ball.
struct Context {
    ball: Ball,
    inner: usize,
}

impl Context {
    fn new(group: &MarkedGroup, radius: usize, limit: usize) -> Result<Self> {
        let ball = explore(group, Some(radius + 1), limit)?;
        let inner = ball.dist.iter().take_while(|&&d| d as usize <= radius).count();
        Ok(Context { ball, inner })
    }

    fn boundary_size(&self, members: &[bool]) -> u64 {
        let mut seen = BTreeSet::new();
        for (v, &m) in members.iter().enumerate() {
            if m {
                for &u in self.ball.adjacent(v) {
                    if !members.get(u as usize).copied().unwrap_or(false) {
                        seen.insert(u);
                    }
                }
            }
        }
        seen.len() as u64
    }

    fn witness(&self, members: &[usize]) -> Vec<Element> {
        let mut w: Vec<(Vec<u8>, Element)> = members
            .iter()
            .map(|&v| (self.ball.keys[v].clone(), self.ball.elements[v].clone()))
            .collect();
        w.sort_by(|a, b| a.0.cmp(&b.0));
        w.into_iter().map(|(_, e)| e).collect()
    }
}

struct Search<'a> {
    order: &'a [usize],
    nbhd: Vec<Mask>,
    bit: Vec<Mask>,
    best: Option<(Ratio, Vec<usize>)>,
    chosen: Vec<usize>,
}

impl Search<'_> {
    /// Depth-first over subsets in lexicographic order of their sorted keys.
    fn dfs(&mut self, next: usize, inside: Mask, reach: Mask) {
        for pos in next..self.order.len() {
            let inside2 = inside.or(self.bit[pos]);
            let reach2 = reach.or(self.nbhd[pos]);
            self.chosen.push(pos);
            let size = self.chosen.len() as u64;
            let value = Ratio::new(reach2.and_not(inside2).count(), size);
            if self.best.as_ref().is_none_or(|(b, _)| value < *b) {
                self.best = Some((value, self.chosen.clone()));
            }
            // Elements still undecided after `pos`.
            let mut open = Mask::EMPTY;
            for q in pos + 1..self.order.len() {
                open = open.or(self.bit[q]);
            }
            let forced = reach2.and_not(inside2.or(open)).count();
            let room = size + (self.order.len() - pos - 1) as u64;
            let bound = Ratio::new(forced, room);
            let (best, _) = self.best.as_ref().expect("set above");
            if bound < *best && pos + 1 < self.order.len() {
                self.dfs(pos + 1, inside2, reach2);
            }
            self.chosen.pop();
        }
    }
}

fn exact_min(ctx: &Context, radius: usize) -> Result<FolnerEntry> {
    if ctx.ball.len() > MASK_BITS {
        return Err(Error::ExactTooLarge {
            size: ctx.ball.len(),
            threshold: MASK_BITS,
        });
    }
    let mut order: Vec<usize> = (0..ctx.inner).collect();
    order.sort_by(|&a, &b| ctx.ball.keys[a].cmp(&ctx.ball.keys[b]));
    let mut nbhd = Vec::with_capacity(order.len());
    let mut bit = Vec::with_capacity(order.len());
    for &v in &order {
        let mut n = Mask::EMPTY;
        for &u in ctx.ball.adjacent(v) {
            n.set(u as usize);
        }
        nbhd.push(n);
        let mut b = Mask::EMPTY;
        b.set(v);
        bit.push(b);
    }
    let mut search = Search {
        order: &order,
        nbhd,
        bit,
        best: None,
        chosen: Vec::new(),
    };
    search.dfs(0, Mask::EMPTY, Mask::EMPTY);
    let (value, positions) = search.best.expect("ball is nonempty");
    let members: Vec<usize> = positions.iter().map(|&p| order[p]).collect();
    Ok(FolnerEntry {
        radius,
        value,
        witness: ctx.witness(&members),
        exact: true,
    })
}

fn heuristic_min(ctx: &Context, radius: usize) -> FolnerEntry {
    let n = ctx.inner;
    let ratio_of = |members: &[bool]| {
        let size = members.iter().filter(|&&m| m).count() as u64;
        Ratio::new(ctx.boundary_size(members), size.max(1))
    };
    // Best sub-ball.
    let mut best_members = vec![false; n];
    let mut best = None;
    for r in 0..=radius {
        let members: Vec<bool> = (0..n).map(|v| ctx.ball.dist[v] as usize <= r).collect();
        let value = ratio_of(&members);
        if best.is_none_or(|b| value < b) {
            best = Some(value);
            best_members = members;
        }
    }
    let mut best = best.expect("radius 0 is always scanned");
    // Single add/remove moves while they strictly improve.
    loop {
        let mut improved = false;
        for v in 0..n {
            let mut trial = best_members.clone();
            trial[v] = !trial[v];
            if !trial.iter().any(|&m| m) {
                continue;
            }
            let value = ratio_of(&trial);
            if value < best {
                best = value;
                best_members = trial;
                improved = true;
            }
        }
        if !improved {
            break;
        }
    }
    let members: Vec<usize> = (0..n).filter(|&v| best_members[v]).collect();
    FolnerEntry {
        radius,
        value: best,
        witness: ctx.witness(&members),
        exact: false,
    }
}

/// `Rel(G; R)`. Exact mode refuses balls above `threshold` elements.
pub fn rel(group: &MarkedGroup, radius: usize, mode: Mode, threshold: usize) -> Result<FolnerEntry> {
    if radius == 0 {
        return Err(Error::Domain("Rel needs R >= 1".into()));
    }
    let ctx = Context::new(group, radius, DEFAULT_BALL_LIMIT)?;
    match mode {
        Mode::Exact if ctx.inner > threshold => Err(Error::ExactTooLarge {
            size: ctx.inner,
            threshold,
        }),
        Mode::Exact => exact_min(&ctx, radius),
        Mode::Heuristic => Ok(heuristic_min(&ctx, radius)),
    }
}

/// `Rel(G; R)` for `R = 1..=rmax`, exact wherever the ball fits the threshold.
pub fn rel_profile(group: &MarkedGroup, rmax: usize, threshold: usize) -> Result<FolnerProfile> {
    let mut entries: Vec<FolnerEntry> = Vec::new();
    for r in 1..=rmax {
        let entry = match rel(group, r, Mode::Exact, threshold) {
            Ok(e) => e,
            Err(Error::ExactTooLarge { .. }) => rel(group, r, Mode::Heuristic, threshold)?,
            Err(e) => return Err(e),
        };
        if entry.exact {
            if let Some(prev) = entries.iter().rev().find(|e| e.exact) {
                if entry.value > prev.value {
                    return Err(Error::Internal(format!(
                        "Rel increased from {}/{} at R={} to {}/{} at R={r}",
                        prev.value.num, prev.value.den, prev.radius, entry.value.num, entry.value.den
                    )));
                }
            }
        }
        entries.push(entry);
    }
    Ok(FolnerProfile { entries })
}
