//! Group elements of every implemented family and their canonical byte keys.
//!
//! Conventions:
//! - permutations compose right to left, `(f g)(j) = f(g(j))`;
//! - matrices multiply as usual and act on column vectors;
//! - a shift permutation is `j -> gamma(j) + shift` with `gamma` of finite support;
//! - a shift matrix is `gamma_{i,j} = B_{i, j - shift}` where `B` is the identity
//!   outside a finite window `[lo, hi]`. `shift` is the homomorphism onto `Z`
//!   (the `sigma` generator has shift `-1`).

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::ring::Ring;

/// Bounds on the infinite families' finite data.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalCaps {
    /// Largest |index| a window or permutation support may reach.
    pub window_halfwidth: i64,
    /// Largest bit length of a single shift-matrix entry.
    pub entry_bits: u64,
}

impl Default for EvalCaps {
    fn default() -> Self {
        EvalCaps {
            window_halfwidth: 64,
            entry_bits: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FiniteMatrix {
    pub ring: Ring,
    pub n: usize,
    pub entries: Vec<u64>,
}

impl FiniteMatrix {
    pub fn identity(ring: Ring, n: usize) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        FiniteMatrix { ring, n, entries }
    }

    /// Identity plus `value` at `(i, j)`, `i != j`.
    pub fn elementary(ring: Ring, n: usize, i: usize, j: usize, value: u64) -> Self {
        let mut m = Self::identity(ring, n);
        m.entries[i * n + j] = value;
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.entries[i * self.n + j]
    }

    pub fn mul(&self, other: &FiniteMatrix) -> FiniteMatrix {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let r = self.ring;
        let mut out = vec![0u64; n * n];
        for i in 0..n {
            for l in 0..n {
                let a = self.entries[i * n + l];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let b = other.entries[l * n + j];
                    if b != 0 {
                        out[i * n + j] = r.add_small(out[i * n + j], r.mul_small(a, b));
                    }
                }
            }
        }
        FiniteMatrix {
            ring: r,
            n,
            entries: out,
        }
    }

    pub fn to_big(&self) -> Vec<BigInt> {
        self.entries.iter().map(|&v| BigInt::from(v)).collect()
    }

    pub fn det(&self) -> u64 {
        let d = self.ring.det(self.n, &self.to_big());
        u64::try_from(d).expect("normalized finite-ring value")
    }

    pub fn inverse(&self) -> Option<FiniteMatrix> {
        let inv = self.ring.invert_matrix(self.n, &self.to_big())?;
        Some(FiniteMatrix {
            ring: self.ring,
            n: self.n,
            entries: inv
                .into_iter()
                .map(|v| u64::try_from(v).expect("normalized finite-ring value"))
                .collect(),
        })
    }

    pub fn is_identity(&self) -> bool {
        let n = self.n;
        self.entries
            .iter()
            .enumerate()
            .all(|(idx, &v)| v == u64::from(idx / n == idx % n))
    }
}

/// Element of `Z |x| S_infinity`: `j -> gamma(j) + shift`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShiftPerm {
    pub shift: i64,
    /// Non-fixed points of `gamma`.
    pub moved: BTreeMap<i64, i64>,
}

impl ShiftPerm {
    pub fn identity() -> Self {
        ShiftPerm {
            shift: 0,
            moved: BTreeMap::new(),
        }
    }

    #[inline]
    fn gamma(&self, j: i64) -> i64 {
        *self.moved.get(&j).unwrap_or(&j)
    }

    pub fn apply(&self, j: i64) -> i64 {
        self.gamma(j) + self.shift
    }

    fn extent(&self) -> i64 {
        self.moved
            .iter()
            .map(|(a, b)| a.abs().max(b.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &ShiftPerm, caps: &EvalCaps) -> Result<ShiftPerm> {
        let p2 = other.shift;
        let mut domain: Vec<i64> = other.moved.keys().copied().collect();
        domain.extend(self.moved.keys().map(|j| j - p2));
        let mut moved = BTreeMap::new();
        for j in domain {
            let image = self.gamma(other.gamma(j) + p2) - p2;
            if image != j {
                moved.insert(j, image);
            }
        }
        let out = ShiftPerm {
            shift: self.shift + p2,
            moved,
        };
        if out.extent() > caps.window_halfwidth || out.shift.abs() > caps.window_halfwidth {
            return Err(Error::CapExceeded(format!(
                "shift permutation support exceeds half-width {}",
                caps.window_halfwidth
            )));
        }
        Ok(out)
    }

    pub fn inverse(&self) -> ShiftPerm {
        let p = self.shift;
        let moved = self
            .moved
            .iter()
            .map(|(&j, &img)| (img + p, j + p))
            .collect();
        ShiftPerm { shift: -p, moved }
    }
}

/// Element of `Z |x| SL(infinity, A)` in the finite-window representation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShiftMatrix {
    pub ring: Ring,
    pub shift: i64,
    /// First index of the window; the window is `lo .. lo + size`.
    pub lo: i64,
    pub size: usize,
    /// `size x size` block, row-major.
    pub block: Vec<BigInt>,
}

impl ShiftMatrix {
    pub fn identity(ring: Ring) -> Self {
        ShiftMatrix {
            ring,
            shift: 0,
            lo: 0,
            size: 0,
            block: Vec::new(),
        }
    }

    /// The pure shift with `gamma_{i,j} = 1` iff `j = i + shift`.
    pub fn pure_shift(ring: Ring, shift: i64) -> Self {
        ShiftMatrix {
            shift,
            ..Self::identity(ring)
        }
    }

    /// Elementary matrix `e_{i,j}(value)` with zero shift.
    pub fn elementary(ring: Ring, i: i64, j: i64, value: BigInt) -> Self {
        let lo = i.min(j);
        let size = (i.max(j) - lo + 1) as usize;
        let mut block = vec![BigInt::zero(); size * size];
        for d in 0..size {
            block[d * size + d] = BigInt::one();
        }
        block[(i - lo) as usize * size + (j - lo) as usize] = ring.normalize(value);
        let mut m = ShiftMatrix {
            ring,
            shift: 0,
            lo,
            size,
            block,
        };
        m.trim();
        m
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.size as i64 - 1
    }

    /// Entry of the block `B` at absolute indices.
    pub fn block_entry(&self, i: i64, u: i64) -> BigInt {
        let in_window = |x: i64| x >= self.lo && x < self.lo + self.size as i64;
        if in_window(i) && in_window(u) {
            self.block[(i - self.lo) as usize * self.size + (u - self.lo) as usize].clone()
        } else if i == u {
            BigInt::one()
        } else {
            BigInt::zero()
        }
    }

    /// Matrix coefficient `gamma_{i,j}`.
    pub fn entry(&self, i: i64, j: i64) -> BigInt {
        self.block_entry(i, j - self.shift)
    }

    fn is_trivial_line(&self, d: usize) -> bool {
        let n = self.size;
        (0..n).all(|x| {
            let expect = u8::from(x == d);
            let row = &self.block[d * n + x];
            let col = &self.block[x * n + d];
            let ok = |v: &BigInt| {
                if expect == 1 {
                    v.is_one()
                } else {
                    v.is_zero()
                }
            };
            ok(row) && ok(col)
        })
    }

    fn remove_line(&mut self, d: usize) {
        let n = self.size;
        let mut block = Vec::with_capacity((n - 1) * (n - 1));
        for i in 0..n {
            if i == d {
                continue;
            }
            for j in 0..n {
                if j != d {
                    block.push(self.block[i * n + j].clone());
                }
            }
        }
        self.block = block;
        self.size = n - 1;
    }

    /// Shrinks the window to the minimal interval.
    pub fn trim(&mut self) {
        while self.size > 0 && self.is_trivial_line(0) {
            self.remove_line(0);
            self.lo += 1;
        }
        while self.size > 0 && self.is_trivial_line(self.size - 1) {
            let d = self.size - 1;
            self.remove_line(d);
        }
        if self.size == 0 {
            self.lo = 0;
        }
    }

    fn check_caps(&self, caps: &EvalCaps) -> Result<()> {
        if self.size > 0 && (self.lo.abs() > caps.window_halfwidth || self.hi().abs() > caps.window_halfwidth)
        {
            return Err(Error::CapExceeded(format!(
                "shift-matrix window [{}, {}] exceeds half-width {}",
                self.lo,
                self.hi(),
                caps.window_halfwidth
            )));
        }
        if self.block.iter().any(|v| v.bits() > caps.entry_bits) {
            return Err(Error::CapExceeded(format!(
                "shift-matrix entry exceeds {} bits",
                caps.entry_bits
            )));
        }
        Ok(())
    }

    pub fn mul(&self, other: &ShiftMatrix, caps: &EvalCaps) -> Result<ShiftMatrix> {
        let ring = self.ring;
        let p = self.shift;
        // C_{u,v} = B'_{u+p, v+p}: the other block translated by -p.
        let c_lo = other.lo - p;
        let c_size = other.size;
        let (lo, hi) = match (self.size, c_size) {
            (0, 0) => (0, -1),
            (0, _) => (c_lo, c_lo + c_size as i64 - 1),
            (_, 0) => (self.lo, self.hi()),
            _ => (
                self.lo.min(c_lo),
                self.hi().max(c_lo + c_size as i64 - 1),
            ),
        };
        let size = (hi - lo + 1).max(0) as usize;
        let c_entry = |u: i64, v: i64| other.block_entry(u + p, v + p);
        let mut block = vec![BigInt::zero(); size * size];
        for a in 0..size {
            let i = lo + a as i64;
            for b in 0..size {
                let v = lo + b as i64;
                let mut acc = BigInt::zero();
                for c in 0..size {
                    let u = lo + c as i64;
                    let x = self.block_entry(i, u);
                    if x.is_zero() {
                        continue;
                    }
                    let y = c_entry(u, v);
                    if y.is_zero() {
                        continue;
                    }
                    acc = ring.add(&acc, &ring.mul(&x, &y));
                }
                block[a * size + b] = acc;
            }
        }
        let mut out = ShiftMatrix {
            ring,
            shift: p + other.shift,
            lo,
            size,
            block,
        };
        out.trim();
        out.check_caps(caps)?;
        Ok(out)
    }

    pub fn inverse(&self) -> Option<ShiftMatrix> {
        let block = if self.size == 0 {
            Vec::new()
        } else {
            self.ring.invert_matrix(self.size, &self.block)?
        };
        let mut out = ShiftMatrix {
            ring: self.ring,
            shift: -self.shift,
            lo: self.lo + self.shift,
            size: self.size,
            block,
        };
        out.trim();
        Some(out)
    }

    /// Determinant of the window block.
    pub fn window_det(&self) -> BigInt {
        self.ring.det(self.size, &self.block)
    }

    /// Reduces `Z`-indices mod `m` and coefficients into `target`, producing
    /// the corresponding `m x m` matrix; `None` if the window does not fit.
    pub fn fold_to_finite(&self, m: usize, target: Ring) -> Option<FiniteMatrix> {
        let mi = m as i64;
        let extent = self.lo.abs().max(self.hi().abs()) + self.shift.abs() + 1;
        if self.size as i64 + self.shift.abs() >= mi || 2 * extent >= mi {
            return None;
        }
        let mut out = FiniteMatrix {
            ring: target,
            n: m,
            entries: vec![0; m * m],
        };
        // Rows -(m/2) .. -(m/2)+m form a residue system containing the window.
        let start = -(mi / 2);
        for i in start..start + mi {
            for u in start - self.shift.abs() - 1..start + mi + self.shift.abs() + 1 {
                let v = self.block_entry(i, u);
                if v.is_zero() {
                    continue;
                }
                let j = u + self.shift;
                let small = match target {
                    Ring::ZMod(k) => {
                        let r = v.mod_floor_u64(k);
                        r
                    }
                    _ => return None,
                };
                let (ri, rj) = (i.rem_euclid(mi) as usize, j.rem_euclid(mi) as usize);
                out.entries[ri * m + rj] = small;
            }
        }
        Some(out)
    }
}

trait ModFloorU64 {
    fn mod_floor_u64(&self, k: u64) -> u64;
}

impl ModFloorU64 for BigInt {
    fn mod_floor_u64(&self, k: u64) -> u64 {
        use num_integer::Integer;
        u64::try_from(self.mod_floor(&BigInt::from(k))).expect("reduced")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Element {
    /// Bijection of `{0, ..., m-1}` given by its image array.
    Permutation(Vec<u32>),
    Matrix(FiniteMatrix),
    /// 2x2 matrix over `Z/p` modulo sign, stored with the canonical representative.
    ProjMatrix { p: u64, entries: [u64; 4] },
    ShiftPermutation(ShiftPerm),
    ShiftMatrix(ShiftMatrix),
}

/// Canonical sign for `PSL(2, p)`: the first nonzero entry lies in `[1, p/2]`.
pub fn canonical_projective(p: u64, entries: [u64; 4]) -> [u64; 4] {
    let first = entries.iter().copied().find(|&v| v != 0).unwrap_or(0);
    if first > p / 2 {
        entries.map(|v| (p - v) % p)
    } else {
        entries
    }
}

fn mismatch() -> Error {
    Error::Internal("multiplying elements of different families".into())
}

impl Element {
    pub fn mul(&self, other: &Element, caps: &EvalCaps) -> Result<Element> {
        Ok(match (self, other) {
            (Element::Permutation(f), Element::Permutation(g)) => {
                if f.len() != g.len() {
                    return Err(mismatch());
                }
                Element::Permutation(g.iter().map(|&j| f[j as usize]).collect())
            }
            (Element::Matrix(a), Element::Matrix(b)) => {
                if a.n != b.n || a.ring != b.ring {
                    return Err(mismatch());
                }
                Element::Matrix(a.mul(b))
            }
            (Element::ProjMatrix { p, entries: a }, Element::ProjMatrix { p: q, entries: b }) => {
                if p != q {
                    return Err(mismatch());
                }
                let p = *p;
                let mm = |x: u64, y: u64| (x as u128 * y as u128 % p as u128) as u64;
                let e = [
                    (mm(a[0], b[0]) + mm(a[1], b[2])) % p,
                    (mm(a[0], b[1]) + mm(a[1], b[3])) % p,
                    (mm(a[2], b[0]) + mm(a[3], b[2])) % p,
                    (mm(a[2], b[1]) + mm(a[3], b[3])) % p,
                ];
                Element::ProjMatrix {
                    p,
                    entries: canonical_projective(p, e),
                }
            }
            (Element::ShiftPermutation(a), Element::ShiftPermutation(b)) => {
                Element::ShiftPermutation(a.mul(b, caps)?)
            }
            (Element::ShiftMatrix(a), Element::ShiftMatrix(b)) => {
                if a.ring != b.ring {
                    return Err(mismatch());
                }
                Element::ShiftMatrix(a.mul(b, caps)?)
            }
            _ => return Err(mismatch()),
        })
    }

    pub fn inverse(&self) -> Result<Element> {
        Ok(match self {
            Element::Permutation(f) => {
                let mut inv = vec![0u32; f.len()];
                for (j, &img) in f.iter().enumerate() {
                    inv[img as usize] = j as u32;
                }
                Element::Permutation(inv)
            }
            Element::Matrix(a) => Element::Matrix(
                a.inverse()
                    .ok_or_else(|| Error::Internal("singular matrix in a group".into()))?,
            ),
            Element::ProjMatrix { p, entries: a } => {
                let p = *p;
                let e = [a[3], (p - a[1]) % p, (p - a[2]) % p, a[0]];
                Element::ProjMatrix {
                    p,
                    entries: canonical_projective(p, e),
                }
            }
            Element::ShiftPermutation(a) => Element::ShiftPermutation(a.inverse()),
            Element::ShiftMatrix(a) => Element::ShiftMatrix(
                a.inverse()
                    .ok_or_else(|| Error::Internal("singular window in a group".into()))?,
            ),
        })
    }

    /// The identity of the same family and size.
    pub fn identity_like(&self) -> Element {
        match self {
            Element::Permutation(f) => Element::Permutation((0..f.len() as u32).collect()),
            Element::Matrix(a) => Element::Matrix(FiniteMatrix::identity(a.ring, a.n)),
            Element::ProjMatrix { p, .. } => Element::ProjMatrix {
                p: *p,
                entries: [1, 0, 0, 1],
            },
            Element::ShiftPermutation(_) => Element::ShiftPermutation(ShiftPerm::identity()),
            Element::ShiftMatrix(a) => Element::ShiftMatrix(ShiftMatrix::identity(a.ring)),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Element::Permutation(f) => f.iter().enumerate().all(|(j, &v)| j as u32 == v),
            Element::Matrix(a) => a.is_identity(),
            Element::ProjMatrix { entries, .. } => *entries == [1, 0, 0, 1],
            Element::ShiftPermutation(a) => a.shift == 0 && a.moved.is_empty(),
            Element::ShiftMatrix(a) => a.shift == 0 && a.size == 0,
        }
    }

    /// Canonical byte key; equal elements of one family have equal keys and
    /// distinct elements have distinct keys.
    ///
    /// Layouts (all integers little-endian):
    /// - permutation: `b'P'`, then each image as `u16`;
    /// - matrix: `b'X'`, then each entry in `ring.small_width()` bytes;
    /// - projective matrix: `b'J'`, then the four canonical entries as `u32`;
    /// - shift permutation: `b'S'`, shift `i64`, count `u32`, then `(j, gamma(j))` pairs as `i64`;
    /// - shift matrix: `b'M'`, shift `i64`, lo `i64`, size `u32`, then signed big-endian entries.
    pub fn key(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Element::Permutation(f) => {
                out.reserve(1 + 2 * f.len());
                out.push(b'P');
                for &v in f {
                    out.extend_from_slice(&(v as u16).to_le_bytes());
                }
            }
            Element::Matrix(a) => {
                let w = a.ring.small_width();
                out.reserve(1 + w * a.entries.len());
                out.push(b'X');
                for &v in &a.entries {
                    out.extend_from_slice(&v.to_le_bytes()[..w]);
                }
            }
            Element::ProjMatrix { entries, .. } => {
                out.push(b'J');
                for &v in entries {
                    out.extend_from_slice(&(v as u32).to_le_bytes());
                }
            }
            Element::ShiftPermutation(a) => {
                out.push(b'S');
                out.extend_from_slice(&a.shift.to_le_bytes());
                out.extend_from_slice(&(a.moved.len() as u32).to_le_bytes());
                for (j, v) in &a.moved {
                    out.extend_from_slice(&j.to_le_bytes());
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            Element::ShiftMatrix(a) => {
                out.push(b'M');
                out.extend_from_slice(&a.shift.to_le_bytes());
                out.extend_from_slice(&a.lo.to_le_bytes());
                out.extend_from_slice(&(a.size as u32).to_le_bytes());
                for v in &a.block {
                    Ring::encode_big(v, &mut out);
                }
            }
        }
        out
    }

    /// The homomorphism onto `Z` for the infinite families.
    pub fn shift(&self) -> Option<i64> {
        match self {
            Element::ShiftPermutation(a) => Some(a.shift),
            Element::ShiftMatrix(a) => Some(a.shift),
            _ => None,
        }
    }
}
