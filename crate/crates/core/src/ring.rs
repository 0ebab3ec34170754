//! Coefficient rings: `Z/kZ`, `F_2[t]/(t^k)`, `Z` and `F_2[t]`.
//!
//! Finite rings have a compact `u64` representation used by finite matrix
//! groups. Every ring also works on `BigInt` values, which is what the infinite
//! shift-matrix groups use. `F_2` polynomials are encoded as bit vectors with
//! the coefficient of `t^i` at bit `i`.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Largest supported truncation degree for `F_2[t]/(t^k)`; values live in a `u64`.
pub const MAX_TRUNC_DEGREE: u32 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ring {
    /// `Z/kZ`, `k >= 2`.
    ZMod(u64),
    /// `F_2[t]/(t^k)`, `1 <= k <= 64`.
    TruncPoly2(u32),
    /// `Z`.
    ArbInt,
    /// `F_2[t]`.
    Poly2,
}

impl fmt::Display for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ring::ZMod(k) => write!(f, "zmod{k}"),
            Ring::TruncPoly2(k) => write!(f, "f2t:{k}"),
            Ring::ArbInt => f.write_str("int"),
            Ring::Poly2 => f.write_str("f2t"),
        }
    }
}

fn trunc_mask(k: u32) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// Carry-less product of two `F_2` polynomials, truncated to 64 bits.
fn clmul_trunc(a: u64, b: u64, mask: u64) -> u64 {
    let mut acc = 0u64;
    let mut b = b & mask;
    let mut shift = 0;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a << shift;
        }
        b >>= 1;
        shift += 1;
    }
    acc & mask
}

fn mod_inverse(a: u64, k: u64) -> Option<u64> {
    let (mut old_r, mut r) = (a as i128, k as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(k as i128) as u64)
}

fn poly_mul(a: &BigUint, b: &BigUint) -> BigUint {
    let mut acc = BigUint::zero();
    for i in 0..b.bits() {
        if b.bit(i) {
            acc ^= a << i;
        }
    }
    acc
}

fn poly_div_rem(a: &BigUint, b: &BigUint) -> (BigUint, BigUint) {
    assert!(!b.is_zero(), "polynomial division by zero");
    let db = b.bits() - 1;
    let mut r = a.clone();
    let mut q = BigUint::zero();
    while !r.is_zero() && r.bits() > db {
        let shift = r.bits() - 1 - db;
        q.set_bit(shift, true);
        r ^= b << shift;
    }
    (q, r)
}

fn to_poly(v: &BigInt) -> BigUint {
    v.to_biguint().expect("F_2 polynomials are stored as nonnegative integers")
}

impl Ring {
    pub fn is_finite(&self) -> bool {
        matches!(self, Ring::ZMod(_) | Ring::TruncPoly2(_))
    }

    /// Number of elements for finite rings.
    pub fn size(&self) -> Option<u128> {
        match *self {
            Ring::ZMod(k) => Some(k as u128),
            Ring::TruncPoly2(k) => Some(1u128 << k),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Ring::ZMod(k) if k < 2 => Err(Error::UnsupportedParameter(format!(
                "zmod modulus must be at least 2, got {k}"
            ))),
            Ring::TruncPoly2(k) if k == 0 || k > MAX_TRUNC_DEGREE => {
                Err(Error::UnsupportedParameter(format!(
                    "f2t truncation degree must be in 1..={MAX_TRUNC_DEGREE}, got {k}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// The element `t`, when the ring has one.
    pub fn t_small(&self) -> Option<u64> {
        match *self {
            Ring::TruncPoly2(k) => Some(2 & trunc_mask(k)),
            _ => None,
        }
    }

    // ---- compact arithmetic for finite rings ----

    #[inline]
    pub fn add_small(&self, a: u64, b: u64) -> u64 {
        match *self {
            Ring::ZMod(k) => ((a as u128 + b as u128) % k as u128) as u64,
            Ring::TruncPoly2(_) => a ^ b,
            _ => unreachable!("compact arithmetic on an infinite ring"),
        }
    }

    #[inline]
    pub fn neg_small(&self, a: u64) -> u64 {
        match *self {
            Ring::ZMod(k) => (k - a % k) % k,
            Ring::TruncPoly2(_) => a,
            _ => unreachable!("compact arithmetic on an infinite ring"),
        }
    }

    #[inline]
    pub fn sub_small(&self, a: u64, b: u64) -> u64 {
        self.add_small(a, self.neg_small(b))
    }

    #[inline]
    pub fn mul_small(&self, a: u64, b: u64) -> u64 {
        match *self {
            Ring::ZMod(k) => ((a as u128 * b as u128) % k as u128) as u64,
            Ring::TruncPoly2(k) => clmul_trunc(a, b, trunc_mask(k)),
            _ => unreachable!("compact arithmetic on an infinite ring"),
        }
    }

    /// Canonical compact representative of an integer (`ZMod`) or bit pattern
    /// (`TruncPoly2`).
    pub fn small_from_i64(&self, v: i64) -> u64 {
        match *self {
            Ring::ZMod(k) => v.rem_euclid(k as i64) as u64,
            Ring::TruncPoly2(k) => (v as u64) & trunc_mask(k),
            _ => unreachable!("compact arithmetic on an infinite ring"),
        }
    }

    pub fn inv_small(&self, a: u64) -> Option<u64> {
        match *self {
            Ring::ZMod(k) => mod_inverse(a % k, k),
            Ring::TruncPoly2(k) => {
                if a & 1 == 0 {
                    return None;
                }
                let mask = trunc_mask(k);
                let mut v = 1u64;
                for i in 1..k {
                    if (clmul_trunc(a, v, mask) >> i) & 1 == 1 {
                        v ^= 1 << i;
                    }
                }
                Some(v & mask)
            }
            _ => unreachable!("compact arithmetic on an infinite ring"),
        }
    }

    /// Bytes needed to store one compact value in an element key.
    pub fn small_width(&self) -> usize {
        let bits = match *self {
            Ring::ZMod(k) => 64 - (k - 1).leading_zeros(),
            Ring::TruncPoly2(k) => k,
            _ => unreachable!("compact arithmetic on an infinite ring"),
        };
        (bits.max(1) as usize).div_ceil(8)
    }

    // ---- arbitrary-precision arithmetic, valid for every ring ----

    pub fn normalize(&self, v: BigInt) -> BigInt {
        match *self {
            Ring::ZMod(k) => v.mod_floor(&BigInt::from(k)),
            Ring::TruncPoly2(k) => {
                let mut u = to_poly(&v);
                let mask = (BigUint::one() << k) - BigUint::one();
                u &= mask;
                BigInt::from(u)
            }
            Ring::ArbInt => v,
            Ring::Poly2 => v,
        }
    }

    pub fn from_i64(&self, v: i64) -> BigInt {
        match *self {
            Ring::TruncPoly2(_) | Ring::Poly2 => {
                assert!(v >= 0, "F_2 polynomial literals are bit patterns");
                self.normalize(BigInt::from(v))
            }
            _ => self.normalize(BigInt::from(v)),
        }
    }

    pub fn add(&self, a: &BigInt, b: &BigInt) -> BigInt {
        match self {
            Ring::TruncPoly2(_) | Ring::Poly2 => BigInt::from(to_poly(a) ^ to_poly(b)),
            _ => self.normalize(a + b),
        }
    }

    pub fn neg(&self, a: &BigInt) -> BigInt {
        match self {
            Ring::TruncPoly2(_) | Ring::Poly2 => a.clone(),
            _ => self.normalize(-a),
        }
    }

    pub fn sub(&self, a: &BigInt, b: &BigInt) -> BigInt {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &BigInt, b: &BigInt) -> BigInt {
        match self {
            Ring::TruncPoly2(_) => self.normalize(BigInt::from(poly_mul(&to_poly(a), &to_poly(b)))),
            Ring::Poly2 => BigInt::from(poly_mul(&to_poly(a), &to_poly(b))),
            _ => self.normalize(a * b),
        }
    }

    /// Multiplicative inverse, if the value is a unit.
    pub fn inv(&self, a: &BigInt) -> Option<BigInt> {
        match *self {
            Ring::ZMod(k) => {
                let a = a.mod_floor(&BigInt::from(k));
                let a: u64 = a.try_into().ok()?;
                mod_inverse(a, k).map(BigInt::from)
            }
            Ring::TruncPoly2(k) => {
                let a: u64 = to_poly(a).try_into().ok()?;
                Ring::TruncPoly2(k).inv_small(a).map(BigInt::from)
            }
            Ring::ArbInt => {
                if a.abs().is_one() {
                    Some(a.clone())
                } else {
                    None
                }
            }
            Ring::Poly2 => {
                if a.is_one() {
                    Some(a.clone())
                } else {
                    None
                }
            }
        }
    }

    /// Size function for Euclid-style elimination; smaller is "more divisible".
    fn euclid_size(&self, a: &BigInt) -> BigUint {
        match *self {
            Ring::ZMod(_) | Ring::ArbInt => a.magnitude().clone(),
            Ring::Poly2 => BigUint::from(to_poly(a).bits()),
            // Valuation: t^v u with u a unit divides every element of larger valuation.
            Ring::TruncPoly2(_) => {
                let u = to_poly(a);
                BigUint::from(u.trailing_zeros().unwrap_or(u64::MAX))
            }
        }
    }

    /// `(q, r)` with `a = q b + r` and `r` strictly smaller than `b`, or zero.
    fn div_rem(&self, a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
        match *self {
            Ring::ZMod(_) | Ring::ArbInt => {
                let (q, r) = a.div_rem(b);
                (self.normalize(q), self.normalize(r))
            }
            Ring::Poly2 => {
                let (q, r) = poly_div_rem(&to_poly(a), &to_poly(b));
                (BigInt::from(q), BigInt::from(r))
            }
            Ring::TruncPoly2(k) => {
                let ua = to_poly(a);
                let ub = to_poly(b);
                let va = ua.trailing_zeros().unwrap_or(u64::MAX);
                let vb = ub.trailing_zeros().expect("division by zero");
                if va < vb {
                    return (BigInt::zero(), a.clone());
                }
                let ua_small: u64 = ua.try_into().expect("truncated");
                let ub_small: u64 = ub.try_into().expect("truncated");
                let ring = Ring::TruncPoly2(k);
                let unit_b = ring.inv_small(ub_small >> vb).expect("unit part");
                let q = ring.mul_small(ua_small >> vb, unit_b);
                (BigInt::from(q), BigInt::zero())
            }
        }
    }

    /// Inverse of a square matrix (row-major) over this ring using unimodular
    /// row operations; `None` if the matrix is not invertible.
    pub fn invert_matrix(&self, n: usize, entries: &[BigInt]) -> Option<Vec<BigInt>> {
        assert_eq!(entries.len(), n * n);
        let mut a: Vec<Vec<BigInt>> = (0..n).map(|i| entries[i * n..(i + 1) * n].to_vec()).collect();
        let mut inv: Vec<Vec<BigInt>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect();
        let row_axpy = |rows: &mut Vec<Vec<BigInt>>, dst: usize, src: usize, c: &BigInt| {
            for j in 0..n {
                let t = self.mul(c, &rows[src][j]);
                rows[dst][j] = self.sub(&rows[dst][j], &t);
            }
        };
        for col in 0..n {
            loop {
                let pivot = (col..n)
                    .filter(|&r| !a[r][col].is_zero())
                    .min_by_key(|&r| (self.euclid_size(&a[r][col]), r))?;
                a.swap(col, pivot);
                inv.swap(col, pivot);
                let mut done = true;
                for r in col + 1..n {
                    if a[r][col].is_zero() {
                        continue;
                    }
                    let (q, _) = self.div_rem(&a[r][col], &a[col][col]);
                    row_axpy(&mut a, r, col, &q);
                    row_axpy(&mut inv, r, col, &q);
                    if !a[r][col].is_zero() {
                        done = false;
                    }
                }
                if done {
                    break;
                }
            }
            let u = self.inv(&a[col][col])?;
            for j in 0..n {
                a[col][j] = self.mul(&u, &a[col][j]);
                inv[col][j] = self.mul(&u, &inv[col][j]);
            }
        }
        for col in (0..n).rev() {
            for r in 0..col {
                if a[r][col].is_zero() {
                    continue;
                }
                let c = a[r][col].clone();
                row_axpy(&mut a, r, col, &c);
                row_axpy(&mut inv, r, col, &c);
            }
        }
        Some(inv.into_iter().flatten().collect())
    }

    /// Determinant by fraction-free expansion over the ring (small matrices).
    pub fn det(&self, n: usize, entries: &[BigInt]) -> BigInt {
        if n == 0 {
            return BigInt::one();
        }
        if n == 1 {
            return entries[0].clone();
        }
        let mut acc = BigInt::zero();
        for j in 0..n {
            if entries[j].is_zero() {
                continue;
            }
            let minor: Vec<BigInt> = (1..n)
                .flat_map(|i| (0..n).filter(move |&c| c != j).map(move |c| (i, c)))
                .map(|(i, c)| entries[i * n + c].clone())
                .collect();
            let term = self.mul(&entries[j], &self.det(n - 1, &minor));
            acc = if j % 2 == 0 {
                self.add(&acc, &term)
            } else {
                self.sub(&acc, &term)
            };
        }
        acc
    }

    /// Signed big-endian bytes with a length prefix; canonical for normalized values.
    pub fn encode_big(v: &BigInt, out: &mut Vec<u8>) {
        let (sign, bytes) = v.to_bytes_be();
        out.push(match sign {
            Sign::Minus => b'-',
            Sign::NoSign => b'0',
            Sign::Plus => b'+',
        });
        out.extend_from_slice(&(bytes.len() as u32).to_le_bytes());
        if sign != Sign::NoSign {
            out.extend_from_slice(&bytes);
        }
    }
}
