//! Distortion brackets, the compression obstruction trend, the `k_m` chooser
//! and the diameter-law measurements for `SL(m, Z/k)`.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::dense::{diameter_lower_bound, sl_diameter_bracket, sl_sphere_sizes};
use crate::graph::{explore, CayleyGraph};
use crate::groups::{is_prime, GroupSpec, MarkedGroup, SlGens};
use crate::ring::Ring;
use crate::spectral::SpectralReport;
use crate::tower::Tower;

/// `diam · sqrt(λ₁ / (2 d))`.
pub fn jv_lower_bound(diam: usize, lambda1: f64, degree: usize) -> f64 {
    diam as f64 * (lambda1 / (2.0 * degree as f64)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionBounds {
    pub lower_jv: f64,
    pub upper_trivial: f64,
    pub diam: usize,
    pub degree: usize,
    pub lambda1: f64,
}

/// Bracket for the least distortion of the graph metric into Hilbert space:
/// the spectral lower bound, and `diam` from scaling the indicator embedding.
pub fn distortion_bounds(g: &CayleyGraph, report: &SpectralReport) -> Result<DistortionBounds> {
    if report.vertices != g.len() || report.spec != g.spec().to_string() {
        return Err(Error::Domain("spectral report belongs to another graph".into()));
    }
    let diam = g.diameter();
    Ok(DistortionBounds {
        lower_jv: jv_lower_bound(diam, report.lambda1, g.degree()),
        upper_trivial: diam as f64,
        diam,
        degree: g.degree(),
        lambda1: report.lambda1,
    })
}

/// A compression function `ρ`.
#[derive(Clone, Debug, PartialEq)]
pub enum RhoSpec {
    /// `t^α`, `0 < α <= 1`.
    Power(f64),
    /// `ln t`, for `t > 1`.
    Log,
    /// `ln ln t`, for `t > e`.
    LogLog,
    /// Piecewise linear through the points, constant after the last one.
    Table(Vec<(f64, f64)>),
}

impl fmt::Display for RhoSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RhoSpec::Power(a) => write!(f, "pow:{a}"),
            RhoSpec::Log => f.write_str("log"),
            RhoSpec::LogLog => f.write_str("loglog"),
            RhoSpec::Table(p) => write!(f, "table[{} points]", p.len()),
        }
    }
}

impl RhoSpec {
    /// `pow:<alpha>`, `log`, `loglog` or `table:<path.csv>`.
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(a) = text.strip_prefix("pow:") {
            let alpha: f64 = a
                .parse()
                .map_err(|_| Error::parse(4, format!("bad exponent `{a}`")))?;
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(Error::UnsupportedParameter(format!(
                    "power exponent must lie in (0, 1], got {alpha}"
                )));
            }
            return Ok(RhoSpec::Power(alpha));
        }
        if let Some(path) = text.strip_prefix("table:") {
            let data = std::fs::read_to_string(path)?;
            return Self::table_from_csv(&data);
        }
        match text {
            "log" => Ok(RhoSpec::Log),
            "loglog" => Ok(RhoSpec::LogLog),
            _ => Err(Error::parse(0, format!("unknown compression function `{text}`"))),
        }
    }

    /// Two numeric columns; a non-numeric first row is taken as a header.
    pub fn table_from_csv(data: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(data.as_bytes());
        let mut points = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::parse(row, e.to_string()))?;
            if record.len() != 2 {
                return Err(Error::parse(row, "expected two columns"));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(t), Ok(y)) => points.push((t, y)),
                _ if row == 0 => continue,
                _ => return Err(Error::parse(row, "non-numeric table entry")),
            }
        }
        Self::table(points)
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("compression table is empty".into()));
        }
        if points.windows(2).any(|w| !(w[0].0 < w[1].0 && w[0].1 <= w[1].1)) {
            return Err(Error::Domain(
                "compression table needs increasing arguments and nondecreasing values".into(),
            ));
        }
        Ok(RhoSpec::Table(points))
    }

    /// Smallest admissible argument.
    pub fn domain_start(&self) -> f64 {
        match self {
            RhoSpec::Power(_) => 0.0,
            RhoSpec::Log => 1.0,
            RhoSpec::LogLog => std::f64::consts::E,
            RhoSpec::Table(p) => p[0].0,
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        let bad = || Error::Domain(format!("{self} is not defined at {t}"));
        match self {
            RhoSpec::Power(a) if t > 0.0 => Ok(t.powf(*a)),
            RhoSpec::Log if t > 1.0 => Ok(t.ln()),
            RhoSpec::LogLog if t > std::f64::consts::E => Ok(t.ln().ln()),
            RhoSpec::Table(p) if t >= p[0].0 => {
                let i = p.partition_point(|&(x, _)| x <= t);
                if i == p.len() {
                    return Ok(p[p.len() - 1].1);
                }
                let ((x0, y0), (x1, y1)) = (p[i - 1], p[i]);
                Ok(y0 + (y1 - y0) * (t - x0) / (x1 - x0))
            }
            _ => Err(bad()),
        }
    }

    /// `ρ(t) >= y`, with `t` in tower form.
    fn reaches(&self, t: Tower, y: f64) -> bool {
        let y = Tower::real(y);
        match self {
            RhoSpec::Power(a) => t
                .ln()
                .map(|l| l.scale(*a).exp() >= y)
                .unwrap_or(false),
            RhoSpec::Log => t.ln().is_some_and(|l| l >= y),
            RhoSpec::LogLog => t.ln().and_then(Tower::ln).is_some_and(|l| l >= y),
            RhoSpec::Table(_) => {
                let v = t.to_f64();
                v.is_finite() && self.eval(v).is_ok_and(|r| Tower::real(r) >= y)
            }
        }
    }

    /// Least `t` with `ρ(t) >= y`.
    fn inverse(&self, y: f64) -> Result<Tower> {
        Ok(match self {
            RhoSpec::Power(a) => Tower::new(1, y.ln() / a),
            RhoSpec::Log => Tower::new(1, y),
            RhoSpec::LogLog => Tower::new(2, y),
            RhoSpec::Table(p) => {
                let last = p[p.len() - 1];
                if y > last.1 {
                    return Err(Error::Unsatisfiable(format!(
                        "the compression table is bounded by {}, target is {y}",
                        last.1
                    )));
                }
                if y <= p[0].1 {
                    return Ok(Tower::real(p[0].0));
                }
                let i = p.partition_point(|&(_, v)| v < y);
                let ((x0, y0), (x1, y1)) = (p[i - 1], p[i]);
                Tower::real(x0 + (x1 - x0) * (y - y0) / (y1 - y0))
            }
        })
    }

    /// Number of exponentials in `k_m = e^{L_m}` written as `exp^h(top)`.
    fn km_height(&self) -> u32 {
        match self {
            RhoSpec::Power(_) | RhoSpec::Table(_) => 1,
            RhoSpec::Log => 2,
            RhoSpec::LogLog => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompressionRow {
    pub diam: f64,
    pub lower: f64,
    pub ratio: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompressionVerdict {
    /// Consistent with an obstruction at the sampled scale.
    Obstructed,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompressionReport {
    pub verdict: CompressionVerdict,
    pub rows: Vec<CompressionRow>,
    pub factor: f64,
}

pub const DEFAULT_OBSTRUCTION_FACTOR: f64 = 10.0;

/// Trend of `r_m = lower_m ρ(diam_m) / diam_m`: obstructed when strictly
/// increasing with `r_last / r_first > factor`.
pub fn compression_obstruction(
    data: &[(f64, f64)],
    rho: &RhoSpec,
    factor: f64,
) -> Result<CompressionReport> {
    if data.is_empty() {
        return Err(Error::Domain("no family data".into()));
    }
    if data.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::Domain("diameters must be strictly increasing".into()));
    }
    let mut rows = Vec::with_capacity(data.len());
    for &(diam, lower) in data {
        let r = rho.eval(diam)?;
        rows.push(CompressionRow {
            diam,
            lower,
            ratio: lower * r / diam,
        });
    }
    let quotient: Vec<f64> = rows.iter().map(|r| rho.eval(r.diam).unwrap() / r.diam).collect();
    if quotient.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::Domain(format!(
            "{rho}(t)/t increases on the sampled diameters"
        )));
    }
    let increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    let first = rows[0].ratio;
    let last = rows[rows.len() - 1].ratio;
    let verdict = if rows.len() >= 2 && increasing && first > 0.0 && last / first > factor {
        CompressionVerdict::Obstructed
    } else {
        CompressionVerdict::Inconclusive
    };
    Ok(CompressionReport {
        verdict,
        rows,
        factor,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KmRow {
    pub m: u64,
    pub tower_height: u32,
    pub top_value: f64,
}

impl KmRow {
    /// `k_m = exp^h(top)`.
    pub fn km(&self) -> Tower {
        Tower::new(self.tower_height, self.top_value)
    }

    /// `L_m = ln k_m`.
    pub fn log_km(&self) -> Tower {
        Tower::new(self.tower_height - 1, self.top_value)
    }

    /// `ceil(k_m)` when it fits in a `u64`.
    pub fn km_u64(&self) -> Option<u64> {
        let v = self.km().to_f64();
        (v.is_finite() && v < u64::MAX as f64).then(|| v.ceil() as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KmPlan {
    pub rho: String,
    pub s: u32,
    pub c: f64,
    pub rows: Vec<KmRow>,
}

/// Whether `ρ(c m² L) >= m^s` holds for `L = exp^{h-1}(top)`.
pub fn km_inequality_holds(rho: &RhoSpec, m: u64, s: u32, c: f64, height: u32, top: f64) -> bool {
    let l = Tower::new(height - 1, top);
    if l.height == 0 && l.top <= 0.0 {
        return false;
    }
    let arg = l.scale(c * (m * m) as f64);
    rho.reaches(arg, (m as f64).powi(s as i32))
}

fn step(x: f64, up: bool) -> f64 {
    if up {
        x.next_up()
    } else {
        x.next_down()
    }
}

/// Least `L_m` (in tower form, to the last ulp of the top) with
/// `ρ(c m² L_m) >= m^s`.
pub fn choose_km(rho: &RhoSpec, ms: &[u64], s: u32, c: f64) -> Result<KmPlan> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("c must be positive, got {c}")));
    }
    let mut rows = Vec::with_capacity(ms.len());
    for &m in ms {
        let target = (m as f64).powi(s as i32);
        let t = rho.inverse(target)?;
        let l = t.scale(1.0 / (c * (m * m) as f64));
        let mut height = rho.km_height();
        let mut top = l;
        for _ in 1..height {
            top = top
                .ln()
                .ok_or_else(|| Error::Unsatisfiable(format!("L_{m} is below one level of {rho}")))?;
        }
        // Add levels until the top fits in an f64.
        while !top.to_f64().is_finite() {
            top = top.ln().ok_or_else(|| Error::Internal("tower underflow".into()))?;
            height += 1;
        }
        let mut top = top.to_f64();
        let holds = |top: f64| km_inequality_holds(rho, m, s, c, height, top);
        let mut guard = 0;
        while !holds(top) {
            top = step(top, true);
            guard += 1;
            if guard > 1 << 16 {
                return Err(Error::Internal(format!("k_m search did not settle for m = {m}")));
            }
        }
        while holds(step(top, false)) && guard < 1 << 17 {
            top = step(top, false);
            guard += 1;
        }
        rows.push(KmRow {
            m,
            tower_height: height,
            top_value: top,
        });
    }
    Ok(KmPlan {
        rho: rho.to_string(),
        s,
        c,
        rows,
    })
}

/// A diameter, exact or bracketed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DiameterValue {
    pub lower: usize,
    /// `None` when no upper bound is available.
    pub upper: Option<usize>,
    pub method: String,
}

impl DiameterValue {
    pub fn exact(&self) -> Option<usize> {
        (self.upper == Some(self.lower)).then_some(self.lower)
    }
}

/// Diameter of `sl:m,zmod<k>,st`: bitset BFS when the code space fits, a
/// bracket for prime `k`, then an explicit graph, and otherwise a counting
/// lower bound from exact spheres of a partial ball.
pub fn sl_diameter(m: usize, k: u64, bit_budget: u64, vertex_cap: usize) -> Result<DiameterValue> {
    let ring = Ring::ZMod(k);
    match sl_sphere_sizes(m, ring, SlGens::St, bit_budget) {
        Ok(r) => {
            return Ok(DiameterValue {
                lower: r.diameter,
                upper: Some(r.diameter),
                method: format!("bitset-bfs:{}", r.codec),
            })
        }
        Err(Error::CapExceeded(_)) => {}
        Err(e) => return Err(e),
    }
    if is_prime(k) {
        let b = sl_diameter_bracket(m, k, SlGens::St, vertex_cap, bit_budget)?;
        return Ok(DiameterValue {
            lower: b.lower,
            upper: b.upper,
            method: format!(
                "bracket:ball-radius-{},frame-{}",
                b.sphere_sizes.len() - 1,
                b.frame
            ),
        });
    }
    let group = MarkedGroup::new(GroupSpec::Sl {
        m,
        ring,
        gens: SlGens::St,
    })?;
    match CayleyGraph::build(&group, vertex_cap) {
        Ok(g) => {
            let d = g.diameter();
            return Ok(DiameterValue {
                lower: d,
                upper: Some(d),
                method: "graph-bfs".into(),
            });
        }
        Err(Error::CapExceeded(_)) => {}
        Err(e) => return Err(e),
    }
    let order = group
        .order_hint()
        .ok_or_else(|| Error::Internal(format!("no order known for {}", group.spec())))?;
    // Largest radius whose ball fits under the cap.
    let mut spheres = vec![1u64];
    let mut degree = 0;
    for r in 1.. {
        match explore(&group, Some(r), vertex_cap) {
            Ok(b) => {
                degree = b.adjacent(0).len();
                let mut s = vec![0u64; r + 1];
                for &d in &b.dist {
                    s[d as usize] += 1;
                }
                if *s.last().unwrap() == 0 {
                    break;
                }
                spheres = s;
            }
            Err(Error::CapExceeded(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(DiameterValue {
        lower: diameter_lower_bound(order, &spheres, degree),
        upper: None,
        method: format!("growth-bound:exact-to-radius-{}", spheres.len() - 1),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Holds,
    Fails,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiameterRow {
    pub m: usize,
    pub k: u64,
    pub diameter: DiameterValue,
    /// `diam / (m² ln k)` bounds.
    pub ratio_lower: f64,
    pub ratio_upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiameterLawReport {
    pub rows: Vec<DiameterRow>,
    /// Diameter nondecreasing in `k` for every fixed `m`.
    pub nondecreasing_in_k: Check,
    /// All ratios within a factor `band_limit` of each other.
    pub within_band: Check,
    pub band_limit: f64,
    /// `max/min` ratio when every diameter is exact.
    pub band: Option<f64>,
}

/// Measures `diam(sl(m, zmod k, st))` on the grid and checks the trend.
pub fn diameter_law_fit(
    ms: &[usize],
    ks: &[u64],
    bit_budget: u64,
    vertex_cap: usize,
    band_limit: f64,
) -> Result<DiameterLawReport> {
    let mut rows = Vec::new();
    for &m in ms {
        for &k in ks {
            let d = sl_diameter(m, k, bit_budget, vertex_cap)?;
            let scale = (m * m) as f64 * (k as f64).ln();
            rows.push(DiameterRow {
                m,
                k,
                ratio_lower: d.lower as f64 / scale,
                ratio_upper: d.upper.map(|u| u as f64 / scale),
                diameter: d,
            });
        }
    }
    let mut monotone = Check::Holds;
    for w in rows.windows(2) {
        if w[0].m != w[1].m {
            continue;
        }
        let (a, b) = (&w[0].diameter, &w[1].diameter);
        let certain = a.upper.is_some_and(|u| u <= b.lower);
        let refuted = b.upper.is_some_and(|u| a.lower > u);
        if refuted {
            monotone = Check::Fails;
            break;
        }
        if !certain {
            monotone = Check::Undecided;
        }
    }
    let min_low = rows.iter().map(|r| r.ratio_lower).fold(f64::INFINITY, f64::min);
    let max_low = rows.iter().map(|r| r.ratio_lower).fold(0.0, f64::max);
    let uppers: Option<Vec<f64>> = rows.iter().map(|r| r.ratio_upper).collect();
    let (within_band, band) = match uppers {
        Some(u) => {
            let max_up = u.iter().copied().fold(0.0, f64::max);
            let min_up = u.iter().copied().fold(f64::INFINITY, f64::min);
            let exact = rows.iter().all(|r| r.diameter.exact().is_some());
            let band = exact.then(|| max_up / min_low);
            if max_up / min_low <= band_limit {
                (Check::Holds, band)
            } else if max_low / min_up > band_limit {
                (Check::Fails, band)
            } else {
                (Check::Undecided, band)
            }
        }
        None => {
            let min_up = rows
                .iter()
                .filter_map(|r| r.ratio_upper)
                .fold(f64::INFINITY, f64::min);
            if max_low / min_up > band_limit {
                (Check::Fails, None)
            } else {
                (Check::Undecided, None)
            }
        }
    };
    Ok(DiameterLawReport {
        rows,
        nondecreasing_in_k: monotone,
        within_band,
        band_limit,
        band,
    })
}
