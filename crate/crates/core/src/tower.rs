//! Positive magnitudes written as `exp^h(top)`: `h` nested exponentials
//! applied to a finite real. Comparisons and logarithms never leave this form,
//! so values such as `e^{e^{e^{27}}}` stay representable.

use std::cmp::Ordering;

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tower {
    pub height: u32,
    pub top: f64,
}

/// Largest argument for which `exp` is finite in `f64`.
const EXP_LIMIT: f64 = 709.0;

impl Tower {
    pub fn real(x: f64) -> Self {
        Tower { height: 0, top: x }
    }

    pub fn new(height: u32, top: f64) -> Self {
        Tower { height, top }.normalized()
    }

    /// Collapses levels whose value fits in an `f64`.
    pub fn normalized(mut self) -> Self {
        while self.height > 0 && self.top < EXP_LIMIT {
            self.top = self.top.exp();
            self.height -= 1;
        }
        self
    }

    /// Value as an `f64`, infinite when too large.
    pub fn to_f64(self) -> f64 {
        let t = self.normalized();
        if t.height == 0 {
            t.top
        } else {
            f64::INFINITY
        }
    }

    /// Natural logarithm; `None` for nonpositive values.
    pub fn ln(self) -> Option<Tower> {
        let t = self.normalized();
        if t.height > 0 {
            Some(Tower {
                height: t.height - 1,
                top: t.top,
            })
        } else if t.top > 0.0 {
            Some(Tower::real(t.top.ln()))
        } else {
            None
        }
    }

    /// `ln(self + a)` for a real `a` with `self + a > 0`.
    pub fn ln_plus(self, a: f64) -> Option<Tower> {
        let t = self.normalized();
        if t.height == 0 {
            let v = t.top + a;
            return (v > 0.0).then(|| Tower::real(v.ln()));
        }
        // ln(x + a) = ln x + ln(1 + a / x), with ln x = exp^{h-1}(top).
        let y = Tower {
            height: t.height - 1,
            top: t.top,
        };
        let yv = y.to_f64();
        if yv.is_finite() && yv < 745.0 {
            let v = yv + (a * (-yv).exp()).ln_1p();
            Some(Tower::real(v))
        } else {
            Some(y)
        }
    }

    /// `self * c` for a real `c > 0`.
    pub fn scale(self, c: f64) -> Tower {
        let t = self.normalized();
        if t.height == 0 {
            return Tower::real(t.top * c);
        }
        // x c = exp(ln x + ln c)
        let ln = Tower {
            height: t.height - 1,
            top: t.top,
        };
        ln.add_real(c.ln()).exp()
    }

    /// `self + a` for a real `a`, exact up to rounding at the top level.
    pub fn add_real(self, a: f64) -> Tower {
        let t = self.normalized();
        if t.height == 0 {
            return Tower::real(t.top + a);
        }
        match t.ln_plus(a) {
            Some(l) => l.exp(),
            None => Tower::real(0.0),
        }
    }

    /// `exp(self)`.
    pub fn exp(self) -> Tower {
        Tower {
            height: self.height + 1,
            top: self.top,
        }
        .normalized()
    }
}

impl PartialOrd for Tower {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (mut a, mut b) = (self.normalized(), other.normalized());
        loop {
            if a.height == b.height {
                return a.top.partial_cmp(&b.top);
            }
            // Lower both by one level; a height-0 value that is not positive
            // is below every positive tower.
            match (a.ln(), b.ln()) {
                (Some(x), Some(y)) => {
                    a = x;
                    b = y;
                }
                (None, Some(_)) => return Some(Ordering::Less),
                (Some(_), None) => return Some(Ordering::Greater),
                (None, None) => return a.top.partial_cmp(&b.top),
            }
        }
    }
}
