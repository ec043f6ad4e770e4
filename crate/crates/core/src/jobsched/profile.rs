use crate::rational::Rational;

/// A constant-rate allocation `rate` on `[from, to]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Piece {
    pub from: Rational,
    pub to: Rational,
    pub rate: Rational,
}

/// Free processor capacity over time, piecewise constant. `free[k]` holds on
/// `[cuts[k], cuts[k+1])`; the last entry extends to infinity.
#[derive(Clone, Debug)]
pub struct CapacityProfile {
    cuts: Vec<Rational>,
    free: Vec<Rational>,
}

impl CapacityProfile {
    /// Constant capacity `cap` from time `start` on.
    pub fn constant(start: Rational, cap: Rational) -> Self {
        CapacityProfile { cuts: vec![start], free: vec![cap] }
    }

    /// Capacity given by `pieces` (disjoint, sorted), zero elsewhere from
    /// `start` on.
    pub fn from_pieces(start: Rational, pieces: &[Piece]) -> Self {
        let mut p = CapacityProfile { cuts: vec![start], free: vec![Rational::zero()] };
        for piece in pieces {
            let a = p.split(&piece.from);
            let b = p.split(&piece.to);
            for k in a..b {
                p.free[k] += &piece.rate;
            }
        }
        p
    }

    /// Ensures `t` is a cut and returns its index. `t` must not precede the
    /// profile start.
    fn split(&mut self, t: &Rational) -> usize {
        let k = self.cuts.partition_point(|c| c <= t);
        debug_assert!(k > 0, "split before profile start");
        if &self.cuts[k - 1] == t {
            return k - 1;
        }
        self.cuts.insert(k, t.clone());
        let f = self.free[k - 1].clone();
        self.free.insert(k, f);
        k
    }

    /// Greedily consumes `work` starting at `start`, taking all free
    /// capacity of each interval, optionally capped at `max_rate`. Returns
    /// the pieces used and the finish time, or `None` if the capacity runs
    /// out (the profile is left unchanged then).
    pub fn pack(
        &mut self,
        start: &Rational,
        work: &Rational,
        max_rate: Option<&Rational>,
    ) -> Option<(Vec<Piece>, Rational)> {
        if work.is_zero() {
            return Some((Vec::new(), start.clone()));
        }
        let snapshot = (self.cuts.clone(), self.free.clone());
        let mut k = self.split(start);
        let mut left = work.clone();
        let mut pieces = Vec::new();
        loop {
            let mut rate = self.free[k].clone();
            if let Some(m) = max_rate {
                rate = rate.min(m.clone());
            }
            let from = self.cuts[k].clone();
            let end = self.cuts.get(k + 1).cloned();
            if !rate.is_positive() {
                if end.is_none() {
                    (self.cuts, self.free) = snapshot;
                    return None;
                }
                k += 1;
                continue;
            }
            let finish = &from + &left / &rate;
            if end.as_ref().is_none_or(|e| &finish <= e) {
                self.split(&finish);
                self.free[k] -= &rate;
                pieces.push(Piece { from, to: finish.clone(), rate });
                return Some((pieces, finish));
            }
            let end = end.expect("checked above");
            left -= &rate * (&end - &from);
            self.free[k] -= &rate;
            pieces.push(Piece { from, to: end, rate });
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn packs_around_existing_load() {
        let mut p = CapacityProfile::constant(rat(0, 1), rat(2, 1));
        let (_, f1) = p.pack(&rat(1, 1), &rat(2, 1), None).unwrap();
        assert_eq!(f1, rat(2, 1));
        let (pieces, f2) = p.pack(&rat(0, 1), &rat(3, 1), Some(&rat(1, 1))).unwrap();
        assert_eq!(f2, rat(4, 1));
        assert_eq!(pieces.len(), 2);
    }

    #[test]
    fn bounded_capacity_can_run_out() {
        let pieces = [Piece { from: rat(1, 1), to: rat(2, 1), rate: rat(2, 1) }];
        let mut p = CapacityProfile::from_pieces(rat(0, 1), &pieces);
        assert!(p.pack(&rat(0, 1), &rat(3, 1), None).is_none());
        let (used, fin) = p.pack(&rat(0, 1), &rat(2, 1), None).unwrap();
        assert_eq!(fin, rat(2, 1));
        assert_eq!(used, vec![Piece { from: rat(1, 1), to: rat(2, 1), rate: rat(2, 1) }]);
    }
}
