//! Change-point search.
//!
//! The profile log-partial likelihood `sup_β l_ξ(β, k)` only changes when a
//! change-point crosses an event time, so it is enough to place change-points
//! on a finite candidate grid. Because the objective is additive over
//! segments once each segment's coefficients are profiled out, the best
//! partition for a given `m` is found exactly by dynamic programming over
//! memoized segment costs.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::{fit_interval, fit_segments, Interval, RidgeConfig, SegmentFit};
use crate::survival::{SegmentPartition, SurvivalDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateRule {
    /// Distinct event times. A change-point at an event time puts that event
    /// in the right-hand segment.
    EventTimes,
    /// Midpoints between consecutive distinct event times.
    Midpoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Minimum weighted number of events in every segment; at least `p + 1`.
    pub min_events_per_segment: usize,
    pub candidate_rule: CandidateRule,
    /// Largest event count for which [`exhaustive_search`] will run.
    pub exhaustive_limit: usize,
    pub ridge: RidgeConfig,
}

impl SearchConfig {
    /// Defaults for `p` covariates: `p + 1` events per segment, event-time grid, `ξ = 0`.
    pub fn new(p: usize) -> Self {
        Self {
            min_events_per_segment: p + 1,
            candidate_rule: CandidateRule::EventTimes,
            exhaustive_limit: 30,
            ridge: RidgeConfig::default(),
        }
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.ridge.xi = xi;
        self
    }

    pub fn with_min_events(mut self, min_events: usize) -> Self {
        self.min_events_per_segment = min_events;
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        self.ridge.validate()?;
        if self.min_events_per_segment < p + 1 {
            return Err(Error::Config(format!(
                "min_events_per_segment must be at least p + 1 = {}, got {}",
                p + 1,
                self.min_events_per_segment
            )));
        }
        Ok(())
    }
}

/// Fitted change-point model for a fixed `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointModelFit {
    pub m: usize,
    pub p: usize,
    pub partition: SegmentPartition,
    /// Per-segment fits, in time order.
    pub segments: Vec<SegmentFit>,
    /// `l_ξ(β̂, k̂; t)`.
    pub log_pl: f64,
    pub xi: f64,
    pub candidates: usize,
    pub segment_cost_evaluations: usize,
}

impl ChangePointModelFit {
    pub fn betas(&self) -> Vec<Vec<f64>> {
        self.segments.iter().map(|s| s.beta.clone()).collect()
    }

    /// Concatenated coefficients of length `p(m+1)`.
    pub fn beta_all(&self) -> Vec<f64> {
        self.segments.iter().flat_map(|s| s.beta.iter().copied()).collect()
    }

    pub fn k_hat(&self) -> &[f64] {
        self.partition.changepoints()
    }

    pub fn converged(&self) -> bool {
        self.segments.iter().all(|s| s.converged)
    }
}

/// Candidate change-point locations.
pub fn candidate_grid(dataset: &SurvivalDataset, rule: CandidateRule) -> Result<Vec<f64>> {
    let mut times: Vec<f64> = dataset
        .subjects()
        .iter()
        .filter(|s| s.event)
        .map(|s| s.time)
        .collect();
    times.dedup();
    if times.len() < 2 {
        return Err(Error::Infeasible(format!(
            "change-point search needs at least 2 distinct event times, found {}",
            times.len()
        )));
    }
    let horizon = dataset.horizon();
    let grid = match rule {
        CandidateRule::EventTimes => times,
        CandidateRule::Midpoints => times.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
    };
    Ok(grid.into_iter().filter(|&k| k > 0.0 && k < horizon).collect())
}

#[derive(Debug, Clone)]
enum Cell {
    Fit(SegmentFit),
    TooFewEvents,
    Failed(String),
}

/// Memoized segment fits over the boundaries `0, g_1, ..., g_G, T`.
///
/// Cells are filled at most once each; concurrent readers of the same cell
/// observe the same value.
pub struct SegmentCostTable<'a> {
    dataset: &'a SurvivalDataset,
    config: SearchConfig,
    bounds: Vec<f64>,
    cum_events: Vec<f64>,
    cells: Vec<OnceLock<Cell>>,
    cached: bool,
}

impl<'a> SegmentCostTable<'a> {
    /// Builds the table. The grid is empty when the data have fewer than two
    /// distinct event times; only `m = 0` is then searchable.
    pub fn new(dataset: &'a SurvivalDataset, config: SearchConfig) -> Result<Self> {
        config.validate(dataset.p())?;
        let grid = candidate_grid(dataset, config.candidate_rule).unwrap_or_default();
        let mut bounds = Vec::with_capacity(grid.len() + 2);
        bounds.push(0.0);
        bounds.extend(grid);
        bounds.push(dataset.horizon());
        let last = bounds.len() - 1;
        let cum_events = bounds
            .iter()
            .enumerate()
            .map(|(i, &b)| dataset.weighted_events_in(0.0, b, i == last))
            .collect();
        let cells = (0..bounds.len() * bounds.len()).map(|_| OnceLock::new()).collect();
        Ok(Self { dataset, config, bounds, cum_events, cells, cached: true })
    }

    /// Disables memoization (every lookup refits).
    pub fn without_cache(mut self) -> Self {
        self.cached = false;
        self
    }

    pub fn grid(&self) -> &[f64] {
        &self.bounds[1..self.bounds.len() - 1]
    }

    fn last(&self) -> usize {
        self.bounds.len() - 1
    }

    fn compute(&self, a: usize, b: usize) -> Cell {
        let events = self.cum_events[b] - self.cum_events[a];
        if events < self.config.min_events_per_segment as f64 {
            return Cell::TooFewEvents;
        }
        let interval = Interval { lo: self.bounds[a], hi: self.bounds[b], closed: b == self.last() };
        match fit_interval(self.dataset, interval, &self.config.ridge, None) {
            Ok(fit) if fit.converged => Cell::Fit(fit),
            Ok(fit) => Cell::Failed(format!(
                "Newton did not converge on [{}, {}) after {} iterations",
                interval.lo, interval.hi, fit.iterations
            )),
            Err(e) => Cell::Failed(e.to_string()),
        }
    }

    fn cell(&self, a: usize, b: usize) -> std::borrow::Cow<'_, Cell> {
        debug_assert!(a < b && b < self.bounds.len());
        if self.cached {
            std::borrow::Cow::Borrowed(self.cells[a * self.bounds.len() + b].get_or_init(|| self.compute(a, b)))
        } else {
            std::borrow::Cow::Owned(self.compute(a, b))
        }
    }

    /// Maximized contribution of the segment between boundary indices `a < b`,
    /// or `-inf` when it has too few events or its fit fails.
    pub fn cost(&self, a: usize, b: usize) -> f64 {
        match self.cell(a, b).as_ref() {
            Cell::Fit(f) => f.log_pl,
            _ => f64::NEG_INFINITY,
        }
    }

    fn evaluated_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.get().is_some()).count()
    }

    /// Best partition with `m` change-points on the grid.
    pub fn search(&self, m: usize) -> Result<ChangePointModelFit> {
        let last = self.last();
        if m == 0 {
            return match self.cell(0, last).as_ref() {
                Cell::Fit(fit) => Ok(self.assemble(0, &[], vec![fit.clone()])),
                Cell::TooFewEvents => Err(Error::Infeasible(format!(
                    "fewer than {} events in the data",
                    self.config.min_events_per_segment
                ))),
                Cell::Failed(msg) => Err(Error::Infeasible(format!("m = 0 fit failed: {msg}"))),
            };
        }
        if self.grid().len() < m {
            return Err(Error::Infeasible(format!(
                "{m} change-points requested but only {} candidate locations exist",
                self.grid().len()
            )));
        }
        // best[r][c]: best total of the r + 1 segments from boundary c to T
        // using r cuts strictly inside (c, T). choice[r][c] is the first cut.
        let width = last + 1;
        let mut best = vec![vec![f64::NEG_INFINITY; width]; m + 1];
        let mut choice = vec![vec![usize::MAX; width]; m + 1];
        for c in 0..last {
            best[0][c] = self.cost(c, last);
        }
        for r in 1..=m {
            let starts: Vec<usize> = if r == m { vec![0] } else { (0..last).collect() };
            for c in starts {
                let mut top = f64::NEG_INFINITY;
                let mut arg = usize::MAX;
                for next in (c + 1)..last {
                    let tail = best[r - 1][next];
                    if tail == f64::NEG_INFINITY {
                        continue;
                    }
                    let v = self.cost(c, next) + tail;
                    // strict comparison keeps the smallest cut on ties
                    if v > top {
                        top = v;
                        arg = next;
                    }
                }
                best[r][c] = top;
                choice[r][c] = arg;
            }
        }
        if best[m][0] == f64::NEG_INFINITY {
            return Err(Error::Infeasible(format!(
                "no partition into {} segments has at least {} events per segment with a convergent fit",
                m + 1,
                self.config.min_events_per_segment
            )));
        }
        let mut cuts = Vec::with_capacity(m);
        let mut c = 0;
        for r in (1..=m).rev() {
            c = choice[r][c];
            cuts.push(c);
        }
        let mut segments = Vec::with_capacity(m + 1);
        let mut prev = 0;
        for &cut in cuts.iter().chain(std::iter::once(&last)) {
            match self.cell(prev, cut).as_ref() {
                Cell::Fit(f) => segments.push(f.clone()),
                _ => unreachable!("optimal path only crosses feasible cells"),
            }
            prev = cut;
        }
        let k: Vec<f64> = cuts.iter().map(|&c| self.bounds[c]).collect();
        Ok(self.assemble(m, &k, segments))
    }

    fn assemble(&self, m: usize, k: &[f64], segments: Vec<SegmentFit>) -> ChangePointModelFit {
        let partition = SegmentPartition::new(k.to_vec(), self.dataset.horizon())
            .expect("grid points lie strictly inside (0, T)");
        let log_pl = segments.iter().map(|s| s.log_pl).sum();
        ChangePointModelFit {
            m,
            p: self.dataset.p(),
            partition,
            segments,
            log_pl,
            xi: self.config.ridge.xi,
            candidates: self.grid().len(),
            segment_cost_evaluations: self.evaluated_cells(),
        }
    }
}

/// Maximized contribution of `[a, b)` (closed at the horizon), or `-inf`.
/// Unmemoized building block of [`SegmentCostTable`].
pub fn segment_cost(dataset: &SurvivalDataset, a: f64, b: f64, config: &SearchConfig) -> f64 {
    let closed = b >= dataset.horizon();
    if dataset.weighted_events_in(a, b, closed) < config.min_events_per_segment as f64 {
        return f64::NEG_INFINITY;
    }
    match fit_interval(dataset, Interval { lo: a, hi: b, closed }, &config.ridge, None) {
        Ok(fit) if fit.converged => fit.log_pl,
        _ => f64::NEG_INFINITY,
    }
}

/// Fits the best `m`-change-point model.
pub fn search(dataset: &SurvivalDataset, m: usize, config: &SearchConfig) -> Result<ChangePointModelFit> {
    SegmentCostTable::new(dataset, *config)?.search(m)
}

/// Enumerates every `m`-subset of the candidate grid and fits each partition
/// from scratch. Exponential; refuses instances above `exhaustive_limit` events.
pub fn exhaustive_search(dataset: &SurvivalDataset, m: usize, config: &SearchConfig) -> Result<ChangePointModelFit> {
    config.validate(dataset.p())?;
    let events = dataset.weighted_events();
    if events > config.exhaustive_limit as f64 {
        return Err(Error::Config(format!(
            "exhaustive search limited to {} events, dataset has {events}",
            config.exhaustive_limit
        )));
    }
    let grid = if m == 0 { Vec::new() } else { candidate_grid(dataset, config.candidate_rule)? };
    let mut best: Option<(f64, Vec<f64>, Vec<SegmentFit>)> = None;
    let mut idx: Vec<usize> = (0..m).collect();
    loop {
        if idx.iter().all(|&i| i < grid.len()) || m == 0 {
            let k: Vec<f64> = idx.iter().map(|&i| grid[i]).collect();
            let partition = SegmentPartition::new(k.clone(), dataset.horizon())?;
            let feasible = (0..partition.segments()).all(|j| {
                let (lo, hi) = partition.bounds(j);
                dataset.weighted_events_in(lo, hi, partition.is_last(j)) >= config.min_events_per_segment as f64
            });
            if feasible {
                if let Ok(fits) = fit_segments(dataset, &partition, &config.ridge, None) {
                    if fits.iter().all(|f| f.converged) {
                        let total: f64 = fits.iter().map(|f| f.log_pl).sum();
                        if best.as_ref().is_none_or(|b| total > b.0) {
                            best = Some((total, k, fits));
                        }
                    }
                }
            }
        }
        if m == 0 || !next_combination(&mut idx, grid.len()) {
            break;
        }
    }
    let (log_pl, k, segments) =
        best.ok_or_else(|| Error::Infeasible(format!("no feasible partition with {m} change-points")))?;
    Ok(ChangePointModelFit {
        m,
        p: dataset.p(),
        partition: SegmentPartition::new(k, dataset.horizon())?,
        segments,
        log_pl,
        xi: config.ridge.xi,
        candidates: grid.len(),
        segment_cost_evaluations: 0,
    })
}

/// Advances `idx` to the next increasing combination in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let m = idx.len();
    if m > n {
        return false;
    }
    for pos in (0..m).rev() {
        if idx[pos] < n - m + pos {
            idx[pos] += 1;
            for q in pos + 1..m {
                idx[q] = idx[q - 1] + 1;
            }
            return true;
        }
    }
    false
}
