//! Piecewise-constant bandwidth allocations.

use thiserror::Error;

use crate::instance::{ItemIdx, ReqIdx};
use crate::rational::Rational;

/// Rates in force on one interval between consecutive breakpoints.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Segment {
    /// Aggregate rate per item (dense, one entry per item).
    pub item_rates: Vec<Rational>,
    /// Per (request, item) rates, sorted by key. Empty for schedules that do
    /// not attribute bandwidth to requests.
    pub pair_rates: Vec<(ReqIdx, ItemIdx, Rational)>,
}

impl Segment {
    pub fn idle(n_items: usize) -> Self {
        Segment { item_rates: vec![Rational::zero(); n_items], pair_rates: Vec::new() }
    }

    pub fn total(&self) -> Rational {
        self.item_rates.iter().sum()
    }

    pub fn pair_rate(&self, req: ReqIdx, item: ItemIdx) -> Option<&Rational> {
        self.pair_rates.binary_search_by(|(r, i, _)| (*r, *i).cmp(&(req, item))).ok().map(|k| &self.pair_rates[k].2)
    }

    /// Summed rate of all pairs belonging to `req`.
    pub fn request_share(&self, req: ReqIdx) -> Rational {
        self.pair_rates.iter().filter(|(r, _, _)| *r == req).map(|(_, _, x)| x).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ScheduleViolation {
    #[error("interval {segment} starting at {start}: total rate {total} exceeds speed {speed}")]
    CapacityExceeded { segment: usize, start: Rational, total: Rational, speed: Rational },
    #[error("interval {segment}: negative rate")]
    NegativeRate { segment: usize },
    #[error("interval {segment}: item {item} aggregate {aggregate} differs from summed pair rates {pairs}")]
    AggregateMismatch { segment: usize, item: ItemIdx, aggregate: Rational, pairs: Rational },
    #[error("breakpoints are not strictly increasing at index {0}")]
    NonIncreasing(usize),
    #[error("segment {segment} has {found} item rates, expected {expected}")]
    WrongWidth { segment: usize, found: usize, expected: usize },
}

/// A bandwidth allocation over `[breakpoints[0], breakpoints[last]]`, constant
/// on every interval between consecutive breakpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RateSchedule {
    pub speed: Rational,
    pub n_items: usize,
    pub attributed: bool,
    pub breakpoints: Vec<Rational>,
    pub segments: Vec<Segment>,
}

impl RateSchedule {
    pub fn new(speed: Rational, n_items: usize, attributed: bool, start: Rational) -> Self {
        RateSchedule { speed, n_items, attributed, breakpoints: vec![start], segments: Vec::new() }
    }

    pub fn start(&self) -> &Rational {
        &self.breakpoints[0]
    }

    pub fn horizon(&self) -> &Rational {
        self.breakpoints.last().expect("schedule always has a start breakpoint")
    }

    /// Appends `segment` on `[horizon, end]`. Empty intervals are dropped.
    pub fn push(&mut self, end: Rational, segment: Segment) {
        debug_assert_eq!(segment.item_rates.len(), self.n_items);
        if &end <= self.horizon() {
            return;
        }
        self.breakpoints.push(end);
        self.segments.push(segment);
    }

    pub fn interval(&self, k: usize) -> (&Rational, &Rational) {
        (&self.breakpoints[k], &self.breakpoints[k + 1])
    }

    /// Index of the segment covering `[t, t + dt)` for small `dt`.
    pub fn segment_at(&self, t: &Rational) -> Option<usize> {
        if self.segments.is_empty() || t < self.start() || t >= self.horizon() {
            return None;
        }
        let k = self.breakpoints.partition_point(|b| b <= t);
        Some(k - 1)
    }

    fn integrate(&self, from: &Rational, to: &Rational, rate: impl Fn(&Segment) -> Rational) -> Rational {
        let mut acc = Rational::zero();
        if from >= to {
            return acc;
        }
        for (k, seg) in self.segments.iter().enumerate() {
            let (a, b) = self.interval(k);
            if b <= from {
                continue;
            }
            if a >= to {
                break;
            }
            let lo = if a > from { a } else { from };
            let hi = if b < to { b } else { to };
            let r = rate(seg);
            if !r.is_zero() {
                acc += r * (hi - lo);
            }
        }
        acc
    }

    pub fn item_integral(&self, item: ItemIdx, from: &Rational, to: &Rational) -> Rational {
        self.integrate(from, to, |s| s.item_rates[item].clone())
    }

    pub fn pair_integral(&self, req: ReqIdx, item: ItemIdx, from: &Rational, to: &Rational) -> Rational {
        self.integrate(from, to, |s| s.pair_rate(req, item).cloned().unwrap_or_else(Rational::zero))
    }

    /// Checks capacity, non-negativity, and (when attributed) that every
    /// item aggregate equals the sum of its pair rates.
    pub fn check(&self) -> Result<(), ScheduleViolation> {
        for k in 1..self.breakpoints.len() {
            if self.breakpoints[k] <= self.breakpoints[k - 1] {
                return Err(ScheduleViolation::NonIncreasing(k));
            }
        }
        for (k, seg) in self.segments.iter().enumerate() {
            if seg.item_rates.len() != self.n_items {
                return Err(ScheduleViolation::WrongWidth {
                    segment: k,
                    found: seg.item_rates.len(),
                    expected: self.n_items,
                });
            }
            if seg.item_rates.iter().any(Rational::is_negative)
                || seg.pair_rates.iter().any(|(_, _, r)| r.is_negative())
            {
                return Err(ScheduleViolation::NegativeRate { segment: k });
            }
            let total = seg.total();
            if total > self.speed {
                return Err(ScheduleViolation::CapacityExceeded {
                    segment: k,
                    start: self.breakpoints[k].clone(),
                    total,
                    speed: self.speed.clone(),
                });
            }
            if self.attributed {
                let mut sums = vec![Rational::zero(); self.n_items];
                for (_, i, r) in &seg.pair_rates {
                    sums[*i] += r;
                }
                for (i, (agg, pairs)) in seg.item_rates.iter().zip(sums).enumerate() {
                    if *agg != pairs {
                        return Err(ScheduleViolation::AggregateMismatch {
                            segment: k,
                            item: i,
                            aggregate: agg.clone(),
                            pairs,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}
