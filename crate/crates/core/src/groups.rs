//! Group specifications and marked groups behind a single word evaluator.
//!
//! Spec grammar:
//!
//! ```text
//! sym:m=<int> | cycle:n=<int> | psl2:p=<prime>
//! sl:m=<odd int>,ring=<zmod<k>|f2t:<k>>,gens=<st|stu|stt'|stt'uu'>
//! esl:m=<4n>,ring=<zmod<k>|f2t:<k>>,gens=hadad
//! limit:sym
//! limit:gl-shift,ring=<int|zmod<k>>,gens=<stu|st>
//! limit:ut-shift,ring=<int|zmod<k>>
//! ```
//!
//! Two extensions are accepted as well: `cycle:n=<int>,gens=all` marks the
//! cyclic group by all of its nonidentity elements, and
//! `limit:gl-shift,ring=f2t,gens=<stt'|stt'uu'>` is the limit over `F_2[t]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;

use crate::element::{canonical_projective, EvalCaps, Element, FiniteMatrix, ShiftMatrix, ShiftPerm};
use crate::error::{Error, Result};
use crate::ring::Ring;
use crate::words::{Letter, Word};

/// Generator tuples for the `SL(m, A)` families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SlGens {
    /// `(sigma, tau)`
    St,
    /// `(sigma, tau, upsilon)`
    Stu,
    /// `(sigma, tau, tau')`
    StT,
    /// `(sigma, tau, tau', upsilon, upsilon')`
    StTUU,
}

impl SlGens {
    pub fn arity(self) -> usize {
        match self {
            SlGens::St => 2,
            SlGens::Stu => 3,
            SlGens::StT => 3,
            SlGens::StTUU => 5,
        }
    }

    fn needs_t(self) -> bool {
        matches!(self, SlGens::StT | SlGens::StTUU)
    }
}

impl fmt::Display for SlGens {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SlGens::St => "st",
            SlGens::Stu => "stu",
            SlGens::StT => "stt'",
            SlGens::StTUU => "stt'uu'",
        })
    }
}

impl FromStr for SlGens {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "st" => Ok(SlGens::St),
            "stu" => Ok(SlGens::Stu),
            "stt'" => Ok(SlGens::StT),
            "stt'uu'" => Ok(SlGens::StTUU),
            _ => Err(Error::parse(0, format!("unknown generator set `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GroupSpec {
    Sym { m: usize },
    Cycle { n: usize },
    /// `Z/n` marked by all `n - 1` nonidentity elements.
    CycleComplete { n: usize },
    Psl2 { p: u64 },
    Sl { m: usize, ring: Ring, gens: SlGens },
    Esl { m: usize, ring: Ring },
    LimitSym,
    LimitGlShift { ring: Ring, gens: SlGens },
    LimitUtShift { ring: Ring },
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Sym { m } => write!(f, "sym:m={m}"),
            GroupSpec::Cycle { n } => write!(f, "cycle:n={n}"),
            GroupSpec::CycleComplete { n } => write!(f, "cycle:n={n},gens=all"),
            GroupSpec::Psl2 { p } => write!(f, "psl2:p={p}"),
            GroupSpec::Sl { m, ring, gens } => write!(f, "sl:m={m},ring={ring},gens={gens}"),
            GroupSpec::Esl { m, ring } => write!(f, "esl:m={m},ring={ring},gens=hadad"),
            GroupSpec::LimitSym => f.write_str("limit:sym"),
            GroupSpec::LimitGlShift { ring, gens } => {
                write!(f, "limit:gl-shift,ring={ring},gens={gens}")
            }
            GroupSpec::LimitUtShift { ring } => write!(f, "limit:ut-shift,ring={ring}"),
        }
    }
}

/// `key=value` pairs with their byte offsets.
struct Params<'a> {
    items: BTreeMap<&'a str, (usize, &'a str)>,
    end: usize,
}

impl<'a> Params<'a> {
    fn parse(text: &'a str, offset: usize, allowed: &[&str]) -> Result<Self> {
        let mut items = BTreeMap::new();
        let mut pos = offset;
        if !text.is_empty() {
            for part in text.split(',') {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| Error::parse(pos, format!("expected key=value, got `{part}`")))?;
                if !allowed.contains(&key) {
                    return Err(Error::parse(pos, format!("unknown parameter `{key}`")));
                }
                if items.insert(key, (pos + key.len() + 1, value)).is_some() {
                    return Err(Error::parse(pos, format!("duplicate parameter `{key}`")));
                }
                pos += part.len() + 1;
            }
        }
        Ok(Params {
            items,
            end: offset + text.len(),
        })
    }

    fn get(&self, key: &str) -> Option<(usize, &'a str)> {
        self.items.get(key).copied()
    }

    fn require(&self, key: &str) -> Result<(usize, &'a str)> {
        self.get(key)
            .ok_or_else(|| Error::parse(self.end, format!("missing parameter `{key}`")))
    }

    fn int<T: FromStr>(&self, key: &str) -> Result<T> {
        let (pos, value) = self.require(key)?;
        value
            .parse()
            .map_err(|_| Error::parse(pos, format!("`{value}` is not a valid integer")))
    }
}

fn parse_ring(pos: usize, text: &str, allow_infinite: bool) -> Result<Ring> {
    let bad = || Error::parse(pos, format!("unknown ring `{text}`"));
    let ring = if let Some(k) = text.strip_prefix("zmod") {
        Ring::ZMod(k.parse().map_err(|_| bad())?)
    } else if let Some(k) = text.strip_prefix("f2t:") {
        Ring::TruncPoly2(k.parse().map_err(|_| bad())?)
    } else if allow_infinite && text == "int" {
        Ring::ArbInt
    } else if allow_infinite && text == "f2t" {
        Ring::Poly2
    } else {
        return Err(bad());
    };
    ring.validate()?;
    Ok(ring)
}

fn parse_gens(pos: usize, text: &str) -> Result<SlGens> {
    text.parse()
        .map_err(|_| Error::parse(pos, format!("unknown generator set `{text}`")))
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl FromStr for GroupSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, rest) = text
            .split_once(':')
            .ok_or_else(|| Error::parse(0, "expected `<family>:<parameters>`"))?;
        let off = head.len() + 1;
        let spec = match head {
            "sym" => {
                let p = Params::parse(rest, off, &["m"])?;
                GroupSpec::Sym { m: p.int("m")? }
            }
            "cycle" => {
                let p = Params::parse(rest, off, &["n", "gens"])?;
                let n = p.int("n")?;
                match p.get("gens") {
                    None => GroupSpec::Cycle { n },
                    Some((_, "all")) => GroupSpec::CycleComplete { n },
                    Some((pos, other)) => {
                        return Err(Error::parse(pos, format!("unknown generator set `{other}`")))
                    }
                }
            }
            "psl2" => {
                let p = Params::parse(rest, off, &["p"])?;
                GroupSpec::Psl2 { p: p.int("p")? }
            }
            "sl" => {
                let p = Params::parse(rest, off, &["m", "ring", "gens"])?;
                let (rpos, r) = p.require("ring")?;
                let (gpos, g) = p.require("gens")?;
                GroupSpec::Sl {
                    m: p.int("m")?,
                    ring: parse_ring(rpos, r, false)?,
                    gens: parse_gens(gpos, g)?,
                }
            }
            "esl" => {
                let p = Params::parse(rest, off, &["m", "ring", "gens"])?;
                let (rpos, r) = p.require("ring")?;
                let (gpos, g) = p.require("gens")?;
                if g != "hadad" {
                    return Err(Error::parse(gpos, format!("unknown generator set `{g}`")));
                }
                GroupSpec::Esl {
                    m: p.int("m")?,
                    ring: parse_ring(rpos, r, false)?,
                }
            }
            "limit" => {
                let (kind, params) = rest.split_once(',').unwrap_or((rest, ""));
                let poff = off + kind.len() + 1;
                match kind {
                    "sym" => {
                        if !params.is_empty() {
                            return Err(Error::parse(poff, "limit:sym takes no parameters"));
                        }
                        GroupSpec::LimitSym
                    }
                    "gl-shift" => {
                        let p = Params::parse(params, poff, &["ring", "gens"])?;
                        let (rpos, r) = p.require("ring")?;
                        let (gpos, g) = p.require("gens")?;
                        let ring = parse_ring(rpos, r, true)?;
                        if matches!(ring, Ring::TruncPoly2(_)) {
                            return Err(Error::parse(rpos, "limit rings are int, zmod<k> or f2t"));
                        }
                        GroupSpec::LimitGlShift {
                            ring,
                            gens: parse_gens(gpos, g)?,
                        }
                    }
                    "ut-shift" => {
                        let p = Params::parse(params, poff, &["ring"])?;
                        let (rpos, r) = p.require("ring")?;
                        let ring = parse_ring(rpos, r, true)?;
                        if !matches!(ring, Ring::ArbInt | Ring::ZMod(_)) {
                            return Err(Error::parse(rpos, "ut-shift rings are int or zmod<k>"));
                        }
                        GroupSpec::LimitUtShift { ring }
                    }
                    _ => return Err(Error::parse(off, format!("unknown limit family `{kind}`"))),
                }
            }
            _ => return Err(Error::parse(0, format!("unknown family `{head}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl GroupSpec {
    pub fn parse(text: &str) -> Result<Self> {
        text.parse()
    }

    /// Checks parameter ranges that the grammar alone does not enforce.
    pub fn validate(&self) -> Result<()> {
        let unsupported = |msg: String| Err(Error::UnsupportedParameter(msg));
        match *self {
            GroupSpec::Sym { m } if !(2..=u16::MAX as usize).contains(&m) => {
                unsupported(format!("sym needs 2 <= m <= 65535, got {m}"))
            }
            GroupSpec::Cycle { n } | GroupSpec::CycleComplete { n }
                if !(1..=u16::MAX as usize).contains(&n) =>
            {
                unsupported(format!("cycle needs 1 <= n <= 65535, got {n}"))
            }
            GroupSpec::Psl2 { p } if p == 2 || !is_prime(p) || p > u32::MAX as u64 => {
                unsupported(format!("psl2 needs an odd prime p, got {p}"))
            }
            GroupSpec::Sl { m, ring, gens } => {
                if m < 3 || m % 2 == 0 {
                    return unsupported(format!("sl needs an odd m >= 3, got {m}"));
                }
                ring.validate()?;
                if gens.needs_t() && ring.t_small().is_none() {
                    return unsupported(format!("generators {gens} need the ring f2t:<k>"));
                }
                Ok(())
            }
            GroupSpec::Esl { m, ring } => {
                if m % 4 != 0 || m < 8 {
                    return unsupported(format!("esl needs m = 4n with n >= 2, got {m}"));
                }
                ring.validate()
            }
            GroupSpec::LimitGlShift { ring, gens } => {
                let ok = match ring {
                    Ring::ArbInt | Ring::ZMod(_) => matches!(gens, SlGens::St | SlGens::Stu),
                    Ring::Poly2 => gens.needs_t(),
                    Ring::TruncPoly2(_) => false,
                };
                if !ok {
                    return unsupported(format!("limit:gl-shift does not support ring={ring},gens={gens}"));
                }
                ring.validate()
            }
            GroupSpec::LimitUtShift { ring } => ring.validate(),
            _ => Ok(()),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            GroupSpec::Sym { .. } | GroupSpec::Psl2 { .. } | GroupSpec::LimitSym => 2,
            GroupSpec::Cycle { .. } => 1,
            GroupSpec::CycleComplete { n } => n.saturating_sub(1).max(1),
            GroupSpec::Sl { gens, .. } | GroupSpec::LimitGlShift { gens, .. } => gens.arity(),
            GroupSpec::Esl { ring, .. } => 24 * (hadad_ring_generator_count(*ring) ),
            GroupSpec::LimitUtShift { .. } => 2,
        }
    }

    pub fn is_limit(&self) -> bool {
        matches!(
            self,
            GroupSpec::LimitSym | GroupSpec::LimitGlShift { .. } | GroupSpec::LimitUtShift { .. }
        )
    }
}

/// Result of [`order_of_generator`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GeneratorOrder {
    Exact(u64),
    AtLeast(u64),
}

impl fmt::Display for GeneratorOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorOrder::Exact(n) => write!(f, "{n}"),
            GeneratorOrder::AtLeast(n) => write!(f, ">={n}"),
        }
    }
}

/// A group together with an ordered generating tuple.
#[derive(Clone, Debug)]
pub struct MarkedGroup {
    spec: GroupSpec,
    generators: Vec<Element>,
    inverses: Vec<Element>,
    identity: Element,
    caps: EvalCaps,
}

fn perm_generator(m: usize, f: impl Fn(usize) -> usize) -> Element {
    Element::Permutation((0..m).map(|j| f(j) as u32).collect())
}

fn sl_generators(m: usize, ring: Ring, gens: SlGens) -> Vec<Element> {
    let mut sigma = FiniteMatrix {
        ring,
        n: m,
        entries: vec![0; m * m],
    };
    for j in 0..m {
        sigma.entries[((j + 1) % m) * m + j] = 1;
    }
    let one = 1;
    let t = ring.t_small().unwrap_or(0);
    let tau = FiniteMatrix::elementary(ring, m, 0, 1, one);
    let ups = FiniteMatrix::elementary(ring, m, 1, 0, one);
    let tau_t = FiniteMatrix::elementary(ring, m, 0, 1, t);
    let ups_t = FiniteMatrix::elementary(ring, m, 1, 0, t);
    let list = match gens {
        SlGens::St => vec![sigma, tau],
        SlGens::Stu => vec![sigma, tau, ups],
        SlGens::StT => vec![sigma, tau, tau_t],
        SlGens::StTUU => vec![sigma, tau, tau_t, ups, ups_t],
    };
    list.into_iter().map(Element::Matrix).collect()
}

fn shift_generators(ring: Ring, gens: SlGens) -> Vec<Element> {
    let sigma = ShiftMatrix::pure_shift(ring, -1);
    let t = match ring {
        Ring::Poly2 => BigInt::from(2),
        _ => BigInt::from(0),
    };
    let tau = ShiftMatrix::elementary(ring, 0, 1, BigInt::from(1));
    let ups = ShiftMatrix::elementary(ring, 1, 0, BigInt::from(1));
    let tau_t = ShiftMatrix::elementary(ring, 0, 1, t.clone());
    let ups_t = ShiftMatrix::elementary(ring, 1, 0, t);
    let list = match gens {
        SlGens::St => vec![sigma, tau],
        SlGens::Stu => vec![sigma, tau, ups],
        SlGens::StT => vec![sigma, tau, tau_t],
        SlGens::StTUU => vec![sigma, tau, tau_t, ups, ups_t],
    };
    list.into_iter().map(Element::ShiftMatrix).collect()
}

/// Number `l + 3` of ring generators of `M_n(R)` used by [`hadad_generators`].
fn hadad_ring_generator_count(ring: Ring) -> usize {
    match ring {
        Ring::TruncPoly2(_) => 4,
        _ => 3,
    }
}

/// The generating set of `E(4, M_n(R)) = SL(4n, R)` made of block elementary
/// matrices `e_{I,J}(±X)`, `I != J` in `0..4`, with `X` running over the ring
/// generators `I_n`, `a E_{0,1}` (for each generator `a` of `R`) and the cyclic
/// shift of `M_n(R)`. The list has `24 (l + 3)` entries.
pub fn hadad_generators(n: usize, ring: Ring) -> Result<Vec<Element>> {
    if n < 2 {
        return Err(Error::UnsupportedParameter(format!(
            "hadad generators need n >= 2, got {n}"
        )));
    }
    ring.validate()?;
    let mut ring_gens: Vec<Vec<u64>> = Vec::new();
    let mut ident = vec![0u64; n * n];
    for i in 0..n {
        ident[i * n + i] = 1;
    }
    ring_gens.push(ident);
    let mut scalars = vec![1u64];
    match ring {
        Ring::ZMod(_) => {}
        Ring::TruncPoly2(_) => scalars.push(ring.t_small().expect("f2t has t")),
        _ => {
            return Err(Error::UnsupportedParameter(format!(
                "hadad generators need zmod<k> or f2t:<k>, got {ring}"
            )))
        }
    }
    for a in scalars {
        let mut x = vec![0u64; n * n];
        x[1] = a;
        ring_gens.push(x);
    }
    let mut shift = vec![0u64; n * n];
    for j in 0..n {
        shift[((j + 1) % n) * n + j] = 1;
    }
    ring_gens.push(shift);

    let size = 4 * n;
    let mut out = Vec::with_capacity(24 * ring_gens.len());
    for bi in 0..4 {
        for bj in 0..4 {
            if bi == bj {
                continue;
            }
            for x in &ring_gens {
                for negate in [false, true] {
                    let mut m = FiniteMatrix::identity(ring, size);
                    for r in 0..n {
                        for c in 0..n {
                            let v = x[r * n + c];
                            let v = if negate { ring.neg_small(v) } else { v };
                            m.entries[(bi * n + r) * size + bj * n + c] = v;
                        }
                    }
                    out.push(Element::Matrix(m));
                }
            }
        }
    }
    Ok(out)
}

/// `|SL(m, Z/k)|`, or `None` on overflow.
fn sl_zmod_order(m: usize, k: u64) -> Option<u128> {
    let mut total: u128 = 1;
    let mut rest = k;
    let mut p = 2u64;
    while rest > 1 {
        if rest % p == 0 {
            let mut pe = 1u64;
            while rest % p == 0 {
                rest /= p;
                pe *= p;
            }
            // |SL(m, Z/p^e)| = p^{(e-1)(m^2-1)} |SL(m, F_p)|
            let pe_over_p = (pe / p) as u128;
            let mut f: u128 = 1;
            for _ in 0..m * m - 1 {
                f = f.checked_mul(pe_over_p)?;
            }
            let q = p as u128;
            let mut field: u128 = 1;
            let qm = q.checked_pow(m as u32)?;
            for i in 0..m as u32 {
                field = field.checked_mul(qm - q.checked_pow(i)?)?;
            }
            field /= q - 1;
            total = total.checked_mul(f)?.checked_mul(field)?;
        }
        p += 1;
    }
    Some(total)
}

impl MarkedGroup {
    pub fn new(spec: GroupSpec) -> Result<Self> {
        spec.validate()?;
        let generators = match &spec {
            GroupSpec::Sym { m } => {
                let m = *m;
                vec![
                    perm_generator(m, |j| (j + 1) % m),
                    perm_generator(m, |j| match j {
                        0 => 1,
                        1 => 0,
                        _ => j,
                    }),
                ]
            }
            GroupSpec::Cycle { n } => {
                let n = *n;
                vec![perm_generator(n, |j| (j + 1) % n)]
            }
            GroupSpec::CycleComplete { n } => {
                let n = *n;
                if n == 1 {
                    vec![perm_generator(1, |j| j)]
                } else {
                    (1..n).map(|a| perm_generator(n, move |j| (j + a) % n)).collect()
                }
            }
            GroupSpec::Psl2 { p } => {
                let p = *p;
                vec![
                    Element::ProjMatrix {
                        p,
                        entries: canonical_projective(p, [1, 1, 0, 1]),
                    },
                    Element::ProjMatrix {
                        p,
                        entries: canonical_projective(p, [0, 1, p - 1, 0]),
                    },
                ]
            }
            GroupSpec::Sl { m, ring, gens } => sl_generators(*m, *ring, *gens),
            GroupSpec::Esl { m, ring } => hadad_generators(m / 4, *ring)?,
            GroupSpec::LimitSym => vec![
                Element::ShiftPermutation(ShiftPerm {
                    shift: 1,
                    moved: BTreeMap::new(),
                }),
                Element::ShiftPermutation(ShiftPerm {
                    shift: 0,
                    moved: [(0, 1), (1, 0)].into_iter().collect(),
                }),
            ],
            GroupSpec::LimitGlShift { ring, gens } => shift_generators(*ring, *gens),
            GroupSpec::LimitUtShift { ring } => shift_generators(*ring, SlGens::St),
        };
        let inverses = generators
            .iter()
            .map(Element::inverse)
            .collect::<Result<Vec<_>>>()?;
        let identity = generators[0].identity_like();
        Ok(MarkedGroup {
            spec,
            generators,
            inverses,
            identity,
            caps: EvalCaps::default(),
        })
    }

    pub fn with_caps(mut self, caps: EvalCaps) -> Self {
        self.caps = caps;
        self
    }

    pub fn caps(&self) -> &EvalCaps {
        &self.caps
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn arity(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Element] {
        &self.generators
    }

    pub fn identity(&self) -> &Element {
        &self.identity
    }

    pub fn is_finite(&self) -> bool {
        !self.spec.is_limit()
    }

    /// Element for a signed letter.
    pub fn letter(&self, letter: Letter) -> &Element {
        let i = letter.unsigned_abs() as usize - 1;
        if letter > 0 {
            &self.generators[i]
        } else {
            &self.inverses[i]
        }
    }

    pub fn mul(&self, a: &Element, b: &Element) -> Result<Element> {
        a.mul(b, &self.caps)
    }

    pub fn evaluate(&self, w: &Word) -> Result<Element> {
        if w.arity() != self.arity() {
            return Err(Error::Arity(format!(
                "word has arity {}, group {} has arity {}",
                w.arity(),
                self.spec,
                self.arity()
            )));
        }
        let mut acc = self.identity.clone();
        for &x in w.letters() {
            acc = acc.mul(self.letter(x), &self.caps)?;
        }
        Ok(acc)
    }

    /// Known group order where it follows from the family.
    pub fn order_hint(&self) -> Option<u128> {
        match self.spec {
            GroupSpec::Sym { m } => (1..=m as u128).try_fold(1u128, |a, b| a.checked_mul(b)),
            GroupSpec::Cycle { n } | GroupSpec::CycleComplete { n } => Some(n as u128),
            GroupSpec::Psl2 { p } => {
                let p = p as u128;
                Some(p * (p * p - 1) / 2)
            }
            GroupSpec::Sl {
                m,
                ring: Ring::ZMod(k),
                ..
            } => sl_zmod_order(m, k),
            _ => None,
        }
    }

    /// Distinct keys among the images of `words`.
    pub fn vol<'a>(&self, words: impl IntoIterator<Item = &'a Word>) -> Result<usize> {
        let mut keys = BTreeSet::new();
        for w in words {
            keys.insert(self.evaluate(w)?.key());
        }
        Ok(keys.len())
    }
}

/// Smallest `n >= 1` with `s_index^n = 1`, searched up to `cap`.
pub fn order_of_generator(group: &MarkedGroup, index: usize, cap: u64) -> Result<GeneratorOrder> {
    if index == 0 || index > group.arity() {
        return Err(Error::Arity(format!(
            "generator index {index} is out of range for arity {}",
            group.arity()
        )));
    }
    let s = &group.generators[index - 1];
    let mut acc = s.clone();
    for n in 1..=cap {
        if acc.is_identity() {
            return Ok(GeneratorOrder::Exact(n));
        }
        if n == cap {
            break;
        }
        acc = match group.mul(&acc, s) {
            Ok(e) => e,
            Err(Error::CapExceeded(_)) => break,
            Err(e) => return Err(e),
        };
    }
    Ok(GeneratorOrder::AtLeast(cap))
}
