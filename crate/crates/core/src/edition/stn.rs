/// Simple temporal network over point dates, solved by all-pairs shortest paths.
///
/// `dist[i][j]` is the tightest known upper bound on `date(j) - date(i)`.
pub(crate) struct Stn {
    n: usize,
    dist: Vec<Option<i64>>,
}

impl Stn {
    pub(crate) fn new(n: usize) -> Self {
        let mut dist = vec![None; n * n];
        for i in 0..n {
            dist[i * n + i] = Some(0);
        }
        Stn { n, dist }
    }

    fn tighten(&mut self, i: usize, j: usize, w: i64) {
        let cell = &mut self.dist[i * self.n + j];
        if cell.map_or(true, |cur| w < cur) {
            *cell = Some(w);
        }
    }

    /// `lo <= date(to) - date(from) <= hi`.
    pub(crate) fn constrain(&mut self, from: usize, to: usize, lo: i64, hi: Option<i64>) {
        if let Some(hi) = hi {
            self.tighten(from, to, hi);
        }
        self.tighten(to, from, -lo);
    }

    /// Closes the network; on inconsistency returns a node on a negative cycle.
    pub(crate) fn close(&mut self) -> Result<(), usize> {
        let n = self.n;
        for k in 0..n {
            for i in 0..n {
                let Some(ik) = self.dist[i * n + k] else { continue };
                for j in 0..n {
                    if let Some(kj) = self.dist[k * n + j] {
                        self.tighten(i, j, ik + kj);
                    }
                }
            }
            if let Some(i) = (0..n).find(|&i| self.dist[i * n + i].is_some_and(|d| d < 0)) {
                return Err(i);
            }
        }
        Ok(())
    }

    /// Smallest value `date(to) - date(from)` can take; `i64::MIN` if unbounded.
    pub(crate) fn min_difference(&self, from: usize, to: usize) -> i64 {
        match self.dist[to * self.n + from] {
            Some(d) => -d,
            None => i64::MIN,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_conflicting_equalities() {
        let mut stn = Stn::new(2);
        stn.constrain(0, 1, 3, Some(3));
        stn.constrain(0, 1, 5, Some(5));
        assert!(stn.close().is_err());
    }

    #[test]
    fn derives_forced_difference() {
        // 0 -> 1 [0,0], 1 -> 2 [0,inf), 2 -> 3 [0,0], 0 -> 3 [5,5]
        let mut stn = Stn::new(4);
        stn.constrain(0, 1, 0, Some(0));
        stn.constrain(1, 2, 0, None);
        stn.constrain(2, 3, 0, Some(0));
        stn.constrain(0, 3, 5, Some(5));
        stn.close().unwrap();
        assert_eq!(stn.min_difference(1, 2), 5);
    }
}
