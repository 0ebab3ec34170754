//! Indexed families of marked groups, written as a base spec with one free
//! parameter plus an index range and an optional `k_m` rule.
//!
//! ```text
//! sym --range 3..8
//! sl,ring=zmod{km},gens=st --range 3..7:2 --km 2,3,5
//! sl,m=3,ring=zmod{i},gens=st --range 2..3
//! psl2 --primes 3,5,7,11,13
//! ```
//!
//! The free parameter (`m`, `n` or `p`) takes the index unless the base spec
//! sets it; `{i}` and `{km}` are replaced by the index and by `k_m`.

use std::fmt;

use serde::Serialize;

use crate::embedding::{choose_km, RhoSpec};
use crate::error::{Error, Result};
use crate::groups::GroupSpec;

#[derive(Clone, Debug, PartialEq)]
pub enum KmRule {
    Const(u64),
    List(Vec<u64>),
    /// `plan:<rho>[,s=<s>][,c=<c>]`, rounded up to an integer.
    Plan { rho: RhoSpec, s: u32, c: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct FamilySpec {
    pub base: String,
    pub indices: Vec<u64>,
    pub km: Option<KmRule>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Member {
    pub index: u64,
    pub km: Option<u64>,
    #[serde(serialize_with = "spec_as_text")]
    pub spec: GroupSpec,
}

fn spec_as_text<S: serde::Serializer>(spec: &GroupSpec, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(spec)
}

fn free_parameter(name: &str) -> Option<&'static str> {
    match name {
        "sym" | "sl" | "esl" => Some("m"),
        "cycle" => Some("n"),
        "psl2" => Some("p"),
        _ => None,
    }
}

fn parse_u64(text: &str, pos: usize) -> Result<u64> {
    text.trim()
        .parse()
        .map_err(|_| Error::parse(pos, format!("expected a nonnegative integer, got `{text}`")))
}

fn parse_list(text: &str, pos: usize) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    let mut at = pos;
    for item in text.split(',') {
        out.push(parse_u64(item, at)?);
        at += item.len() + 1;
    }
    Ok(out)
}

/// `a..b[:step]`, inclusive.
fn parse_range(text: &str, pos: usize) -> Result<Vec<u64>> {
    let (span, step) = match text.split_once(':') {
        Some((span, step)) => (span, parse_u64(step, pos + span.len() + 1)?),
        None => (text, 1),
    };
    let (a, b) = span
        .split_once("..")
        .ok_or_else(|| Error::parse(pos, "expected a range `a..b[:step]`"))?;
    let (a, b) = (parse_u64(a, pos)?, parse_u64(b, pos + a.len() + 2)?);
    if step == 0 {
        return Err(Error::parse(pos + span.len() + 1, "range step must be positive"));
    }
    if a > b {
        return Err(Error::parse(pos, format!("empty range {a}..{b}")));
    }
    Ok((a..=b).step_by(step as usize).collect())
}

fn parse_km(text: &str, pos: usize) -> Result<KmRule> {
    if let Some(rest) = text.strip_prefix("plan:") {
        let mut parts = rest.split(',');
        let rho = RhoSpec::parse(parts.next().unwrap_or_default())?;
        let (mut s, mut c) = (3u32, 1.0f64);
        let mut at = pos + 5 + rest.split(',').next().map_or(0, str::len) + 1;
        for part in parts {
            match part.split_once('=') {
                Some(("s", v)) => s = parse_u64(v, at + 2)? as u32,
                Some(("c", v)) => {
                    c = v
                        .parse()
                        .map_err(|_| Error::parse(at + 2, format!("bad constant `{v}`")))?
                }
                _ => return Err(Error::parse(at, format!("unknown plan option `{part}`"))),
            }
            at += part.len() + 1;
        }
        return Ok(KmRule::Plan { rho, s, c });
    }
    let values = parse_list(text, pos)?;
    Ok(match values.as_slice() {
        [k] => KmRule::Const(*k),
        _ => KmRule::List(values),
    })
}

impl FamilySpec {
    pub fn parse(text: &str) -> Result<Self> {
        // Tokens with their byte offsets.
        let mut tokens = Vec::new();
        let mut offset = 0;
        for piece in text.split(' ') {
            if !piece.is_empty() {
                tokens.push((offset, piece));
            }
            offset += piece.len() + 1;
        }
        let Some(&(base_pos, base)) = tokens.first() else {
            return Err(Error::parse(0, "empty family spec"));
        };
        let mut indices = None;
        let mut km = None;
        let mut i = 1;
        while i < tokens.len() {
            let (pos, flag) = tokens[i];
            let &(vpos, value) = tokens
                .get(i + 1)
                .ok_or_else(|| Error::parse(pos, format!("`{flag}` needs a value")))?;
            match flag {
                "--range" | "--primes" if indices.is_some() => {
                    return Err(Error::parse(pos, "duplicate index range"));
                }
                "--range" => indices = Some(parse_range(value, vpos)?),
                "--primes" => indices = Some(parse_list(value, vpos)?),
                "--km" if km.is_some() => return Err(Error::parse(pos, "duplicate `--km`")),
                "--km" => km = Some(parse_km(value, vpos)?),
                _ => return Err(Error::parse(pos, format!("unknown family option `{flag}`"))),
            }
            i += 2;
        }
        let indices = indices.ok_or_else(|| Error::parse(text.len(), "missing `--range` or `--primes`"))?;
        let name = base.split([':', ',']).next().unwrap_or(base);
        if free_parameter(name).is_none() {
            return Err(Error::parse(base_pos, format!("`{name}` is not an indexed family")));
        }
        if let Some(KmRule::List(list)) = &km {
            if list.len() != indices.len() {
                return Err(Error::parse(
                    base_pos,
                    format!("{} k_m values for {} indices", list.len(), indices.len()),
                ));
            }
        }
        let spec = FamilySpec {
            base: base.to_string(),
            indices,
            km,
        };
        spec.members()?;
        Ok(spec)
    }

    fn km_values(&self) -> Result<Option<Vec<u64>>> {
        Ok(match &self.km {
            None => None,
            Some(KmRule::Const(k)) => Some(vec![*k; self.indices.len()]),
            Some(KmRule::List(list)) => Some(list.clone()),
            Some(KmRule::Plan { rho, s, c }) => {
                let plan = choose_km(rho, &self.indices, *s, *c)?;
                let values = plan
                    .rows
                    .iter()
                    .map(|row| {
                        row.km_u64().ok_or_else(|| {
                            Error::CapExceeded(format!(
                                "k_{} = exp^{}({}) does not fit in 64 bits",
                                row.m, row.tower_height, row.top_value
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(values)
            }
        })
    }

    /// Instantiates every member as a validated group spec.
    pub fn members(&self) -> Result<Vec<Member>> {
        let kms = self.km_values()?;
        let (name, params) = match self.base.find([':', ',']) {
            Some(i) => (&self.base[..i], &self.base[i + 1..]),
            None => (self.base.as_str(), ""),
        };
        let free = free_parameter(name).expect("checked at parse time");
        let fixed = params
            .split(',')
            .any(|p| p.split_once('=').is_some_and(|(k, _)| k == free));
        if fixed && !params.contains("{i}") {
            return Err(Error::parse(0, format!("`{free}` is fixed and `{{i}}` is unused")));
        }
        if params.contains("{km}") && kms.is_none() {
            return Err(Error::parse(0, "`{km}` needs a `--km` rule"));
        }
        self.indices
            .iter()
            .enumerate()
            .map(|(slot, &index)| {
                let km = kms.as_ref().map(|k| k[slot]);
                let mut body = params.replace("{i}", &index.to_string());
                if let Some(k) = km {
                    body = body.replace("{km}", &k.to_string());
                }
                let text = match (fixed, body.is_empty()) {
                    (true, _) => format!("{name}:{body}"),
                    (false, true) => format!("{name}:{free}={index}"),
                    (false, false) => format!("{name}:{free}={index},{body}"),
                };
                let spec: GroupSpec = text.parse()?;
                spec.validate()?;
                Ok(Member { index, km, spec })
            })
            .collect()
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        let idx = &self.indices;
        let step = idx.get(1).map_or(1, |b| b - idx[0]);
        if step > 0 && idx.windows(2).all(|w| w[1] - w[0] == step) {
            write!(f, "{} --range {}..{}:{step}", self.base, idx[0], idx[idx.len() - 1])?;
        } else {
            write!(f, "{} --primes {}", self.base, list(idx))?;
        }
        match &self.km {
            None => Ok(()),
            Some(KmRule::Const(k)) => write!(f, " --km {k}"),
            Some(KmRule::List(v)) => write!(f, " --km {}", list(v)),
            Some(KmRule::Plan { rho, s, c }) => write!(f, " --km plan:{rho},s={s},c={c}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn specs(text: &str) -> Vec<String> {
        FamilySpec::parse(text)
            .unwrap()
            .members()
            .unwrap()
            .iter()
            .map(|m| m.spec.to_string())
            .collect()
    }

    #[test]
    fn examples() {
        assert_eq!(specs("sym --range 3..8").len(), 6);
        assert_eq!(
            specs("sl,ring=zmod{km},gens=st --range 3..7:2 --km 2,3,5"),
            [
                "sl:m=3,ring=zmod2,gens=st",
                "sl:m=5,ring=zmod3,gens=st",
                "sl:m=7,ring=zmod5,gens=st"
            ]
        );
        assert_eq!(specs("psl2 --primes 3,5,7,11,13").len(), 5);
        assert_eq!(
            specs("sl,m=3,ring=zmod{i},gens=st --range 2..3"),
            ["sl:m=3,ring=zmod2,gens=st", "sl:m=3,ring=zmod3,gens=st"]
        );
        assert_eq!(specs("cycle:gens=all --range 3..4"), ["cycle:n=3,gens=all", "cycle:n=4,gens=all"]);
        let f = FamilySpec::parse("sl,ring=zmod{km},gens=st --range 3..7:2 --km 2,3,5").unwrap();
        assert_eq!(FamilySpec::parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn km_plan() {
        let f = FamilySpec::parse("sl,ring=zmod{km},gens=st --range 3..5:2 --km plan:pow:1,s=3,c=9").unwrap();
        let m = f.members().unwrap();
        // L_m = m^3 / (9 m^2), k_m = ceil(e^{m/9})
        assert_eq!(m[0].km, Some(2));
        assert_eq!(m[1].km, Some(2));
        let huge = FamilySpec::parse("sl,ring=zmod{km},gens=st --range 3..3 --km plan:loglog");
        assert!(matches!(huge, Err(Error::CapExceeded(_))));
    }

    #[test]
    fn errors_carry_positions() {
        let e = FamilySpec::parse("sym --range 3..x").unwrap_err();
        assert!(matches!(e, Error::Parse { position: 15, .. }), "{e:?}");
        assert!(FamilySpec::parse("sym --range 3..5 --range 3..5").is_err());
        assert!(FamilySpec::parse("sym --range 3..5 --km 1,2").is_err());
        assert!(FamilySpec::parse("limit:sym --range 1..2").is_err());
        assert!(FamilySpec::parse("sl,ring=zmod{km},gens=st --range 3..5:2").is_err());
        assert!(FamilySpec::parse("sl,ring=zmod2,gens=st --range 4..4").is_err());
    }
}
