//! Ball kernels `N ∩ B_R` of marked groups and agreement radii between them.
//!
//! Balls of the free group are walked layer by layer: every word of length
//! `r + 1` is a word of length `r` followed by one letter, so it costs a single
//! multiplication. Layers keep canonical order.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::element::Element;
use crate::error::{Error, Result};
use crate::groups::{GroupSpec, MarkedGroup};
use crate::ring::Ring;
use crate::words::{ball_size, letters, Word, DEFAULT_BALL_CAP};

type Layer = Vec<(Word, Vec<Element>)>;

fn check_ball(arity: usize, radius: usize, cap: usize) -> Result<()> {
    match ball_size(arity, radius) {
        Some(n) if n <= cap as u128 => Ok(()),
        _ => Err(Error::CapExceeded(format!(
            "ball of radius {radius} in the free group of rank {arity} exceeds {cap} words"
        ))),
    }
}

/// Evaluates every word of the `rmax`-ball in each group, handing the layers to
/// `visit` in order. `visit` returns `false` to stop early.
fn walk_layers<F>(groups: &[&MarkedGroup], rmax: usize, cap: usize, mut visit: F) -> Result<()>
where
    F: FnMut(usize, &Layer) -> Result<bool>,
{
    let arity = groups[0].arity();
    if let Some(g) = groups.iter().find(|g| g.arity() != arity) {
        return Err(Error::Arity(format!(
            "{} has arity {}, expected {arity}",
            g.spec(),
            g.arity()
        )));
    }
    check_ball(arity, rmax, cap)?;
    let alphabet = letters(arity);
    let mut layer: Layer = vec![(
        Word::identity(arity),
        groups.iter().map(|g| g.identity().clone()).collect(),
    )];
    for r in 0..=rmax {
        if !visit(r, &layer)? || r == rmax {
            break;
        }
        let expanded: Vec<Layer> = layer
            .par_iter()
            .map(|(w, els)| {
                let mut out = Vec::with_capacity(alphabet.len());
                for &x in &alphabet {
                    if let Some(next) = w.extended(x) {
                        let images = groups
                            .iter()
                            .zip(els)
                            .map(|(g, e)| g.mul(e, g.letter(x)))
                            .collect::<Result<Vec<_>>>()?;
                        out.push((next, images));
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        layer = expanded.into_iter().flatten().collect();
    }
    Ok(())
}

/// Whether `w` evaluates to the identity.
pub fn elm(group: &MarkedGroup, w: &Word) -> Result<bool> {
    Ok(group.evaluate(w)?.is_identity())
}

/// Number of distinct elements represented by `words`.
pub fn vol(group: &MarkedGroup, words: &[Word]) -> Result<usize> {
    group.vol(words)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BallKernel {
    pub arity: usize,
    pub radius: usize,
    #[serde(serialize_with = "words_as_text")]
    pub members: Vec<Word>,
}

fn words_as_text<S: serde::Serializer>(words: &[Word], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(words.iter().map(|w| w.to_string()))
}

impl BallKernel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("kernel serializes")
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.members.binary_search(w).is_ok()
    }

    pub fn is_closed_under_invert(&self) -> bool {
        self.members.iter().all(|w| self.contains(&w.invert()))
    }

    /// Products of members that stay inside the radius are members.
    pub fn is_closed_under_partial_products(&self) -> bool {
        self.members.iter().all(|a| {
            self.members.iter().all(|b| match a.concat(b) {
                Ok(p) if p.len() <= self.radius => self.contains(&p),
                _ => true,
            })
        })
    }

    /// The kernel of a smaller radius.
    pub fn restrict(&self, radius: usize) -> BallKernel {
        BallKernel {
            arity: self.arity,
            radius,
            members: self.members.iter().filter(|w| w.len() <= radius).cloned().collect(),
        }
    }
}

pub fn ball_kernel(group: &MarkedGroup, radius: usize, cap: usize) -> Result<BallKernel> {
    let mut members = Vec::new();
    walk_layers(&[group], radius, cap, |_, layer| {
        members.extend(
            layer
                .iter()
                .filter(|(_, e)| e[0].is_identity())
                .map(|(w, _)| w.clone()),
        );
        Ok(true)
    })?;
    Ok(BallKernel {
        arity: group.arity(),
        radius,
        members,
    })
}

/// First word on which two kernels differ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub word: String,
    /// `true` when the word is a relation of the first group only.
    pub in_first: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AgreementReport {
    pub radius: usize,
    pub witness: Option<Witness>,
    /// `|ball_kernel(G, r)|` for `r = 0..=radius`.
    pub kernel_sizes: Vec<usize>,
}

/// Largest `R <= rmax` with equal ball kernels, plus the first disagreement.
pub fn agreement_radius(
    first: &MarkedGroup,
    second: &MarkedGroup,
    rmax: usize,
    cap: usize,
) -> Result<AgreementReport> {
    let mut sizes = Vec::new();
    let mut total = 0;
    let mut witness = None;
    walk_layers(&[first, second], rmax, cap, |_, layer| {
        for (w, e) in layer {
            let (a, b) = (e[0].is_identity(), e[1].is_identity());
            if a != b {
                witness = Some(Witness {
                    word: w.to_string(),
                    in_first: a,
                });
                return Ok(false);
            }
            total += usize::from(a);
        }
        sizes.push(total);
        Ok(true)
    })?;
    Ok(AgreementReport {
        radius: sizes.len().saturating_sub(1).min(rmax),
        witness,
        kernel_sizes: sizes,
    })
}

/// Convenience wrapper with the default word cap.
pub fn agreement(first: &MarkedGroup, second: &MarkedGroup, rmax: usize) -> Result<AgreementReport> {
    agreement_radius(first, second, rmax, DEFAULT_BALL_CAP)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConvergenceRow {
    pub index: u64,
    pub km: Option<u64>,
    pub spec: String,
    pub radius: usize,
    pub witness: Option<Witness>,
    /// Whether the sufficient condition `m >= 2r + 3` (and `k_m > 2^r` for
    /// limits over an infinite ring) holds.
    pub threshold_met: bool,
    pub agrees: bool,
}

/// Whether a limit needs the `k_m > 2^r` condition.
fn needs_modulus_condition(limit: &GroupSpec) -> bool {
    match limit {
        GroupSpec::LimitGlShift { ring, .. } | GroupSpec::LimitUtShift { ring } => {
            matches!(ring, Ring::ArbInt | Ring::Poly2)
        }
        _ => false,
    }
}

/// Agreement radius of every family member against `limit`, up to `r`.
pub fn converge_certify(
    members: &[(u64, Option<u64>, MarkedGroup)],
    limit: &MarkedGroup,
    r: usize,
    cap: usize,
) -> Result<Vec<ConvergenceRow>> {
    let modulus = needs_modulus_condition(limit.spec());
    members
        .iter()
        .map(|(index, km, group)| {
            let report = agreement_radius(group, limit, r, cap)?;
            let m_ok = *index >= 2 * r as u64 + 3;
            let k_ok = !modulus || km.is_some_and(|k| r >= 64 || k > 1u64 << r);
            Ok(ConvergenceRow {
                index: *index,
                km: *km,
                spec: group.spec().to_string(),
                radius: report.radius,
                witness: report.witness,
                threshold_met: m_ok && k_ok,
                agrees: report.radius >= r,
            })
        })
        .collect()
}

/// Set of kernel members, for set comparisons in tests.
pub fn kernel_set(k: &BallKernel) -> BTreeSet<Word> {
    k.members.iter().cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn group(text: &str) -> MarkedGroup {
        MarkedGroup::new(text.parse().unwrap()).unwrap()
    }

    fn word(arity: usize, text: &str) -> Word {
        Word::parse(arity, text).unwrap()
    }

    #[test]
    fn elm_examples() {
        assert!(elm(&group("cycle:n=3"), &word(1, "s1.s1.s1")).unwrap());
        assert!(elm(&group("sym:m=5"), &word(2, "s2.s2")).unwrap());
        assert!(!elm(&group("sym:m=5"), &word(2, "s1.s2")).unwrap());
    }

    #[test]
    fn vol_examples() {
        let ball = crate::words::enumerate_ball(1, 1, 100).unwrap();
        assert_eq!(vol(&group("cycle:n=2"), &ball).unwrap(), 2);
        assert_eq!(vol(&group("sym:m=4"), &[Word::identity(2)]).unwrap(), 1);
    }

    #[test]
    fn kernel_examples() {
        let k = ball_kernel(&group("cycle:n=5"), 4, 1000).unwrap();
        assert_eq!(k.members, vec![Word::identity(1)]);
        let k = ball_kernel(&group("cycle:n=3"), 3, 1000).unwrap();
        let text: Vec<String> = k.members.iter().map(|w| w.to_string()).collect();
        assert_eq!(text, ["e", "s1.s1.s1", "S1.S1.S1"]);
        assert_eq!(
            k.to_json(),
            r#"{"arity":1,"radius":3,"members":["e","s1.s1.s1","S1.S1.S1"]}"#
        );
    }

    #[test]
    fn kernel_closure_properties() {
        for text in ["sym:m=5", "sl:m=3,ring=zmod2,gens=st", "psl2:p=5", "limit:sym"] {
            let g = group(text);
            let k = ball_kernel(&g, 6, DEFAULT_BALL_CAP).unwrap();
            assert!(k.is_closed_under_invert(), "{text}");
            assert!(k.is_closed_under_partial_products(), "{text}");
            let k5 = ball_kernel(&g, 5, DEFAULT_BALL_CAP).unwrap();
            assert_eq!(k.restrict(5), k5);
        }
    }

    #[test]
    fn agreement_examples() {
        let r = agreement(&group("cycle:n=3"), &group("cycle:n=5"), 5).unwrap();
        assert_eq!(r.radius, 2);
        assert_eq!(
            r.witness,
            Some(Witness {
                word: "s1.s1.s1".into(),
                in_first: true
            })
        );
        let back = agreement(&group("cycle:n=5"), &group("cycle:n=3"), 5).unwrap();
        assert_eq!(back.radius, 2);
        assert!(!back.witness.unwrap().in_first);
        let r = agreement(&group("sym:m=9"), &group("limit:sym"), 3).unwrap();
        assert_eq!((r.radius, r.witness), (3, None));
    }

    #[test]
    fn cap_is_reported() {
        assert!(matches!(
            agreement_radius(&group("sym:m=5"), &group("limit:sym"), 20, 1000),
            Err(Error::CapExceeded(_))
        ));
    }
}
