//! Finite unions of intervals and isolated points in `[0,1]`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measure::LOC_EPS;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    /// `[lo, hi)`
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: false,
        }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    /// Membership with endpoints snapped: a location within [`LOC_EPS`] of an
    /// endpoint is treated as sitting exactly on it.
    pub fn contains(&self, t: f64) -> bool {
        let above = if (t - self.lo).abs() <= LOC_EPS {
            self.lo_closed
        } else {
            t > self.lo
        };
        let below = if (t - self.hi).abs() <= LOC_EPS {
            self.hi_closed
        } else {
            t < self.hi
        };
        above && below
    }

    pub fn overlap(&self, a: f64, b: f64) -> f64 {
        (self.hi.min(b) - self.lo.max(a)).max(0.0)
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Ordered, pairwise-disjoint intervals plus isolated points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BorelSet {
    intervals: Vec<Interval>,
    points: Vec<f64>,
}

impl BorelSet {
    pub fn new(mut intervals: Vec<Interval>, mut points: Vec<f64>) -> Result<Self> {
        for iv in &intervals {
            if !(0.0..=1.0).contains(&iv.lo) || !(0.0..=1.0).contains(&iv.hi) {
                return Err(Error::MalformedSet(format!(
                    "interval endpoints {}..{} outside [0,1]",
                    iv.lo, iv.hi
                )));
            }
            if iv.hi < iv.lo {
                return Err(Error::MalformedSet(format!(
                    "reversed interval {}..{}",
                    iv.lo, iv.hi
                )));
            }
        }
        // Degenerate [a,a] is a point; other degenerate intervals are empty.
        let mut kept = Vec::with_capacity(intervals.len());
        for iv in intervals.drain(..) {
            if iv.hi == iv.lo {
                if iv.lo_closed && iv.hi_closed {
                    points.push(iv.lo);
                }
            } else {
                kept.push(iv);
            }
        }
        let mut intervals = kept;
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in intervals.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b.lo < a.hi || (b.lo == a.hi && a.hi_closed && b.lo_closed) {
                return Err(Error::MalformedSet(format!(
                    "overlapping intervals {} and {}",
                    a, b
                )));
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup_by(|a, b| (*a - *b).abs() <= LOC_EPS);
        for &p in &points {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::MalformedSet(format!("point {p} outside [0,1]")));
            }
            if intervals.iter().any(|iv| iv.contains(p)) {
                return Err(Error::MalformedSet(format!(
                    "point {p} lies inside an interval of the same set"
                )));
            }
        }
        Ok(Self { intervals, points })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// The whole space `T = [0,1]`.
    pub fn whole() -> Self {
        Self::interval(Interval::closed(0.0, 1.0))
    }

    pub fn interval(iv: Interval) -> Self {
        Self::new(vec![iv], vec![]).expect("single interval in [0,1]")
    }

    pub fn point(t: f64) -> Self {
        Self::new(vec![], vec![t]).expect("point in [0,1]")
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn contains(&self, t: f64) -> bool {
        self.points.iter().any(|&p| (p - t).abs() <= LOC_EPS)
            || self.intervals.iter().any(|iv| iv.contains(t))
    }

    /// Lebesgue measure of `self ∩ [a, b)`.
    pub fn overlap(&self, a: f64, b: f64) -> f64 {
        self.intervals.iter().map(|iv| iv.overlap(a, b)).sum()
    }

    pub fn lebesgue(&self) -> f64 {
        self.intervals.iter().map(Interval::length).sum()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

impl fmt::Display for BorelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.intervals.iter().map(|i| i.to_string()).collect();
        if !self.points.is_empty() {
            let pts: Vec<String> = self.points.iter().map(|p| p.to_string()).collect();
            parts.push(format!("{{{}}}", pts.join(",")));
        }
        if parts.is_empty() {
            write!(f, "{{}}")
        } else {
            write!(f, "{}", parts.join(" u "))
        }
    }
}

/// Parses a real written as a decimal or as a ratio `p/q`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::MalformedSet(format!("cannot parse number {s:?}"));
    let value = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            p / q
        }
        None => s.parse().map_err(|_| bad())?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(bad())
    }
}

/// Grammar: components separated by `u` (or `∪`); each component is an
/// interval `[a,b]`, `[a,b)`, `(a,b]`, `(a,b)` or a point list `{p,q,...}`.
/// Numbers may be ratios such as `2/3`.
impl FromStr for BorelSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('∪', " u ");
        let mut intervals = Vec::new();
        let mut points = Vec::new();
        for part in s.split(" u ").map(str::trim).filter(|p| !p.is_empty()) {
            let bad = || Error::MalformedSet(format!("cannot parse set component {part:?}"));
            let open = part.chars().next().ok_or_else(bad)?;
            let close = part.chars().last().ok_or_else(bad)?;
            let inner = &part[open.len_utf8()..part.len() - close.len_utf8()];
            match (open, close) {
                ('{', '}') => {
                    for p in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                        points.push(parse_number(p)?);
                    }
                }
                ('[' | '(', ']' | ')') => {
                    let (a, b) = inner.split_once(',').ok_or_else(bad)?;
                    intervals.push(Interval {
                        lo: parse_number(a)?,
                        hi: parse_number(b)?,
                        lo_closed: open == '[',
                        hi_closed: close == ']',
                    });
                }
                _ => return Err(bad()),
            }
        }
        BorelSet::new(intervals, points)
    }
}
