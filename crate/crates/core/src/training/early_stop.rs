/// Patience-based early stopping on a metric where larger is better.
/// Improvement is strict.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct StopDecision {
    pub improved: bool,
    pub stop: bool,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: None,
            stale: 0,
        }
    }

    /// Records the metric of `epoch`. Non-improving epochs count towards
    /// the patience only when `counting` is set.
    pub fn update(&mut self, epoch: usize, metric: f64, counting: bool) -> StopDecision {
        let improved = self.best.map_or(true, |(_, b)| metric > b);
        if improved {
            self.best = Some((epoch, metric));
            self.stale = 0;
        } else if counting {
            self.stale += 1;
        }
        StopDecision {
            improved,
            stop: self.stale >= self.patience,
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }

    pub fn stale(&self) -> usize {
        self.stale
    }
}
