//! Right-censored survival data, risk sets and the softmax moments of the
//! covariates over a risk set.
//!
//! Conventions used throughout the crate:
//!
//! - A subject is at risk at time `t` when its own time is `>= t`, so a failing
//!   subject belongs to the risk set at its event time. Tied event times share
//!   the full risk set (Breslow).
//! - Segment `j` (0-based) of a partition with change-points `k` covers the
//!   half-open interval `[k[j-1], k[j])`, with `k[-1] = 0` and `k[m] = T`. The
//!   last segment also contains `T` itself, so the segments always cover every
//!   event of a dataset whose horizon is its largest time.
//! - `weight` is an integer replication count; every sum over subjects is a
//!   weighted sum.

use std::collections::BTreeMap;
use std::io::Read;
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub time: f64,
    pub event: bool,
    pub covariates: Vec<f64>,
    pub weight: u32,
}

impl Subject {
    pub fn new(time: f64, event: bool, covariates: Vec<f64>) -> Self {
        Self { time, event, covariates, weight: 1 }
    }

    pub fn with_weight(mut self, weight: u32) -> Self {
        self.weight = weight;
        self
    }
}

/// Immutable, time-sorted survival dataset.
#[derive(Debug, Clone)]
pub struct SurvivalDataset {
    subjects: Vec<Subject>,
    p: usize,
    horizon: f64,
    has_ties: bool,
    /// Row-major `n x p` covariates, in sorted order.
    z: Vec<f64>,
    weights: Vec<f64>,
    /// `risk_start[i]`: first index whose time equals `time[i]`.
    risk_start: Vec<usize>,
}

impl SurvivalDataset {
    /// Validates and sorts `subjects`. The horizon defaults to the largest time.
    pub fn new(mut subjects: Vec<Subject>, horizon: Option<f64>) -> Result<Self> {
        let first = subjects
            .first()
            .ok_or_else(|| Error::Dataset("no subjects".into()))?;
        let p = first.covariates.len();
        for (i, s) in subjects.iter().enumerate() {
            if !(s.time.is_finite() && s.time > 0.0) {
                return Err(Error::Dataset(format!(
                    "subject {i}: time must be positive and finite, got {}",
                    s.time
                )));
            }
            if s.covariates.len() != p {
                return Err(Error::Dataset(format!(
                    "subject {i}: expected {p} covariates, got {}",
                    s.covariates.len()
                )));
            }
            if s.covariates.iter().any(|z| !z.is_finite()) {
                return Err(Error::Dataset(format!("subject {i}: non-finite covariate")));
            }
            if s.weight == 0 {
                return Err(Error::Dataset(format!("subject {i}: weight must be positive")));
            }
        }
        if !subjects.iter().any(|s| s.event) {
            return Err(Error::Dataset("dataset has no events".into()));
        }
        subjects.sort_by(|a, b| a.time.total_cmp(&b.time));
        let max_time = subjects.last().map(|s| s.time).unwrap_or(0.0);
        let horizon = horizon.unwrap_or(max_time);
        if !(horizon.is_finite() && horizon >= max_time) {
            return Err(Error::Dataset(format!(
                "follow-up horizon {horizon} is below the largest time {max_time}"
            )));
        }

        let n = subjects.len();
        let mut z = Vec::with_capacity(n * p);
        let mut weights = Vec::with_capacity(n);
        let mut risk_start = Vec::with_capacity(n);
        let mut has_ties = false;
        for (i, s) in subjects.iter().enumerate() {
            z.extend_from_slice(&s.covariates);
            weights.push(s.weight as f64);
            if i > 0 && subjects[i - 1].time == s.time {
                has_ties = true;
                risk_start.push(risk_start[i - 1]);
            } else {
                risk_start.push(i);
            }
        }
        Ok(Self { subjects, p, horizon, has_ties, z, weights, risk_start })
    }

    /// Reads `time,event,z1,...,zp[,weight]` CSV.
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        CsvTable::read(reader)?.to_dataset(None)
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// True when at least two subjects share a time.
    pub fn has_ties(&self) -> bool {
        self.has_ties
    }

    /// Weighted number of subjects (`n` in the plug-in estimators).
    pub fn weighted_n(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn weighted_events(&self) -> f64 {
        self.subjects
            .iter()
            .zip(&self.weights)
            .filter(|(s, _)| s.event)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.subjects[i].time
    }

    pub fn event(&self, i: usize) -> bool {
        self.subjects[i].event
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn z(&self, i: usize) -> &[f64] {
        &self.z[i * self.p..(i + 1) * self.p]
    }

    pub(crate) fn risk_start(&self, i: usize) -> usize {
        self.risk_start[i]
    }

    /// First index whose time is `>= t`.
    pub fn first_at_risk(&self, t: f64) -> usize {
        self.subjects.partition_point(|s| s.time < t)
    }

    /// Indices of subjects at risk at `t` (time `>= t`). Contiguous because the
    /// data are sorted.
    pub fn risk_set(&self, t: f64) -> Range<usize> {
        self.first_at_risk(t)..self.len()
    }

    /// Indices of events in segment `j` of `partition`.
    pub fn event_set(&self, partition: &SegmentPartition, j: usize) -> Vec<usize> {
        let (lo, hi) = partition.bounds(j);
        self.events_in(lo, hi, partition.is_last(j))
    }

    /// Event indices with `lo <= t < hi` (or `<= hi` when `closed`).
    pub fn events_in(&self, lo: f64, hi: f64, closed: bool) -> Vec<usize> {
        self.event_index_range(lo, hi, closed)
            .filter(|&i| self.subjects[i].event)
            .collect()
    }

    pub(crate) fn event_index_range(&self, lo: f64, hi: f64, closed: bool) -> Range<usize> {
        let start = self.first_at_risk(lo);
        let end = if closed {
            self.subjects.partition_point(|s| s.time <= hi)
        } else {
            self.subjects.partition_point(|s| s.time < hi)
        };
        start..end.max(start)
    }

    /// Weighted event count in `[lo, hi)` (or `[lo, hi]` when `closed`).
    pub fn weighted_events_in(&self, lo: f64, hi: f64, closed: bool) -> f64 {
        self.event_index_range(lo, hi, closed)
            .filter(|&i| self.subjects[i].event)
            .map(|i| self.weights[i])
            .sum()
    }

    /// Softmax moments of the covariates over the risk set at `t`.
    pub fn risk_moments(&self, t: f64, beta: &[f64]) -> Result<RiskMoments> {
        let range = self.risk_set(t);
        if range.is_empty() {
            return Err(Error::domain(format!("empty risk set at t = {t}")));
        }
        Ok(self.moments_over(range, beta, true))
    }

    pub(crate) fn moments_over(&self, range: Range<usize>, beta: &[f64], second: bool) -> RiskMoments {
        let p = self.p;
        // shift by the largest linear predictor for stability
        let shift = range
            .clone()
            .map(|i| linear_predictor(self.z(i), beta))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut acc = MomentAccumulator::new(p, second);
        for i in range {
            let w = self.weights[i] * (linear_predictor(self.z(i), beta) - shift).exp();
            acc.add(self.z(i), w);
        }
        acc.finish(shift)
    }

    /// Copy of the dataset with every time passed through `f`, which must be
    /// strictly increasing and positive. The horizon is mapped too.
    pub fn map_times(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let subjects = self
            .subjects
            .iter()
            .map(|s| Subject { time: f(s.time), ..s.clone() })
            .collect();
        Self::new(subjects, Some(f(self.horizon)))
    }

    /// Copy of the dataset with `shift` added to every covariate vector.
    pub fn shift_covariates(&self, shift: &[f64]) -> Result<Self> {
        let subjects = self
            .subjects
            .iter()
            .map(|s| Subject {
                covariates: s.covariates.iter().zip(shift).map(|(a, b)| a + b).collect(),
                ..s.clone()
            })
            .collect();
        Self::new(subjects, Some(self.horizon))
    }

    /// Copy with each weighted subject expanded into `weight` unit rows.
    pub fn expand_weights(&self) -> Result<Self> {
        let subjects = self
            .subjects
            .iter()
            .flat_map(|s| std::iter::repeat_n(Subject { weight: 1, ..s.clone() }, s.weight as usize))
            .collect();
        Self::new(subjects, Some(self.horizon))
    }
}

pub(crate) fn linear_predictor(z: &[f64], beta: &[f64]) -> f64 {
    z.iter().zip(beta).map(|(a, b)| a * b).sum()
}

/// Weighted softmax moments over a risk set.
#[derive(Debug, Clone)]
pub struct RiskMoments {
    /// `log Σ w e^{β'z}`.
    pub log_s0: f64,
    /// `h = Σ w z e^{β'z} / Σ w e^{β'z}`.
    pub h: Vector,
    /// `H = Σ w z z' e^{β'z} / Σ w e^{β'z}` (empty when not requested).
    pub second: Matrix,
}

impl RiskMoments {
    /// `H - h h'`, the covariance of `z` under the softmax weights.
    pub fn covariance(&self) -> Matrix {
        &self.second - &self.h * self.h.transpose()
    }
}

/// Running sums `S0`, `S1`, `S2` over a growing risk set.
pub(crate) struct MomentAccumulator {
    s0: f64,
    s1: Vec<f64>,
    s2: Option<Vec<f64>>,
    p: usize,
}

impl MomentAccumulator {
    pub(crate) fn new(p: usize, second: bool) -> Self {
        Self { s0: 0.0, s1: vec![0.0; p], s2: second.then(|| vec![0.0; p * p]), p }
    }

    pub(crate) fn add(&mut self, z: &[f64], w: f64) {
        self.s0 += w;
        for (a, zi) in self.s1.iter_mut().zip(z) {
            *a += w * zi;
        }
        if let Some(s2) = self.s2.as_mut() {
            for r in 0..self.p {
                let wz = w * z[r];
                for c in 0..self.p {
                    s2[r * self.p + c] += wz * z[c];
                }
            }
        }
    }

    pub(crate) fn finish(&self, shift: f64) -> RiskMoments {
        let p = self.p;
        let h = Vector::from_iterator(p, self.s1.iter().map(|v| v / self.s0));
        let second = match &self.s2 {
            Some(s2) => Matrix::from_row_slice(p, p, s2).map(|v| v / self.s0),
            None => Matrix::zeros(0, 0),
        };
        RiskMoments { log_s0: self.s0.ln() + shift, h, second }
    }
}

/// `h(t, β)`: softmax-weighted mean covariate over the risk set at `t`.
pub fn h_vector(dataset: &SurvivalDataset, t: f64, beta: &[f64]) -> Result<Vector> {
    dataset.risk_moments(t, beta).map(|m| m.h)
}

/// `H(t, β)`: softmax-weighted second moment over the risk set at `t`.
pub fn h_matrix(dataset: &SurvivalDataset, t: f64, beta: &[f64]) -> Result<Matrix> {
    dataset.risk_moments(t, beta).map(|m| m.second)
}

/// Ordered change-points `0 < k_1 < ... < k_m < T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPartition {
    changepoints: Vec<f64>,
    horizon: f64,
}

impl SegmentPartition {
    pub fn new(changepoints: Vec<f64>, horizon: f64) -> Result<Self> {
        let mut prev = 0.0;
        for &k in &changepoints {
            if !(k.is_finite() && k > prev) {
                return Err(Error::domain(format!(
                    "change-points must be strictly increasing and positive: {changepoints:?}"
                )));
            }
            prev = k;
        }
        if prev >= horizon && !changepoints.is_empty() {
            return Err(Error::domain(format!(
                "change-point {prev} is not below the horizon {horizon}"
            )));
        }
        Ok(Self { changepoints, horizon })
    }

    /// The single-segment partition.
    pub fn whole(horizon: f64) -> Self {
        Self { changepoints: Vec::new(), horizon }
    }

    pub fn changepoints(&self) -> &[f64] {
        &self.changepoints
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of change-points `m`.
    pub fn m(&self) -> usize {
        self.changepoints.len()
    }

    pub fn segments(&self) -> usize {
        self.changepoints.len() + 1
    }

    pub fn is_last(&self, j: usize) -> bool {
        j == self.changepoints.len()
    }

    /// `(k[j-1], k[j])` for 0-based segment `j`.
    pub fn bounds(&self, j: usize) -> (f64, f64) {
        assert!(j <= self.changepoints.len(), "segment {j} out of range");
        let lo = if j == 0 { 0.0 } else { self.changepoints[j - 1] };
        let hi = if self.is_last(j) { self.horizon } else { self.changepoints[j] };
        (lo, hi)
    }

    /// Segment containing time `t`.
    pub fn segment_of(&self, t: f64) -> usize {
        self.changepoints.partition_point(|&k| k <= t)
    }

    /// The same change-points under a different horizon (e.g. a fresh dataset).
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.changepoints.clone(), horizon)
    }
}

/// Step function `(time, survival)`: the first point is `(0, 1)` and every
/// further point is the value from that time on.
pub type SurvivalCurve = Vec<(f64, f64)>;

/// Weighted product-limit estimate per group label.
pub fn kaplan_meier(dataset: &SurvivalDataset, group_labels: &[i64]) -> Result<BTreeMap<i64, SurvivalCurve>> {
    if group_labels.len() != dataset.len() {
        return Err(Error::domain(format!(
            "{} labels for {} subjects",
            group_labels.len(),
            dataset.len()
        )));
    }
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &g) in group_labels.iter().enumerate() {
        groups.entry(g).or_default().push(i);
    }
    Ok(groups
        .into_iter()
        .map(|(g, idx)| (g, product_limit(dataset, &idx)))
        .collect())
}

/// Product-limit curve over the subjects `idx` (sorted by time).
fn product_limit(dataset: &SurvivalDataset, idx: &[usize]) -> SurvivalCurve {
    let mut curve = vec![(0.0, 1.0)];
    let mut at_risk: f64 = idx.iter().map(|&i| dataset.weight(i)).sum();
    let mut surv = 1.0;
    let mut k = 0;
    while k < idx.len() {
        let t = dataset.time(idx[k]);
        let mut deaths = 0.0;
        let mut leaving = 0.0;
        while k < idx.len() && dataset.time(idx[k]) == t {
            let w = dataset.weight(idx[k]);
            if dataset.event(idx[k]) {
                deaths += w;
            }
            leaving += w;
            k += 1;
        }
        if deaths > 0.0 {
            surv *= 1.0 - deaths / at_risk;
            curve.push((t, surv));
        }
        at_risk -= leaving;
    }
    curve
}

/// Raw CSV table: header plus numeric rows, with 1-based line numbers kept for diagnostics.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::InvalidData { line: 1, message: e.to_string() })?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut rows = Vec::new();
        for (k, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidData { line: k + 2, message: e.to_string() })?;
            rows.push(rec.iter().map(str::to_owned).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Interprets the table as `time,event,z1..zp[,weight]`. Columns named in
    /// `exclude` (e.g. a grouping column) are not used as covariates.
    pub fn to_dataset(&self, exclude: Option<&str>) -> Result<SurvivalDataset> {
        let bad_header = |message: String| Error::InvalidData { line: 1, message };
        if self.header.len() < 2 || self.header[0] != "time" || self.header[1] != "event" {
            return Err(bad_header(format!(
                "expected header `time,event,z1,...`, got `{}`",
                self.header.join(",")
            )));
        }
        let weight_col = self.column("weight");
        let covariate_cols: Vec<usize> = (2..self.header.len())
            .filter(|&c| Some(c) != weight_col && Some(self.header[c].as_str()) != exclude)
            .collect();
        let mut subjects = Vec::with_capacity(self.rows.len());
        for (k, row) in self.rows.iter().enumerate() {
            let line = k + 2;
            let err = |message: String| Error::InvalidData { line, message };
            let number = |c: usize| -> Result<f64> {
                row[c].parse::<f64>().map_err(|_| {
                    err(format!("column `{}`: `{}` is not a number", self.header[c], row[c]))
                })
            };
            let time = number(0)?;
            if !(time.is_finite() && time > 0.0) {
                return Err(err(format!("time must be positive, got `{}`", row[0])));
            }
            let event = match row[1].as_str() {
                "1" => true,
                "0" => false,
                other => return Err(err(format!("column `event`: `{other}` is not 0 or 1"))),
            };
            let covariates = covariate_cols.iter().map(|&c| number(c)).collect::<Result<Vec<_>>>()?;
            let weight = match weight_col {
                Some(c) => row[c]
                    .parse::<u32>()
                    .ok()
                    .filter(|&w| w > 0)
                    .ok_or_else(|| err(format!("column `weight`: `{}` is not a positive integer", row[c])))?,
                None => 1,
            };
            subjects.push(Subject { time, event, covariates, weight });
        }
        SurvivalDataset::new(subjects, None)
    }

    /// Integer labels from column `name`, in the dataset's sorted order.
    pub fn labels_sorted(&self, name: &str) -> Result<Vec<i64>> {
        let c = self
            .column(name)
            .ok_or_else(|| Error::InvalidData { line: 1, message: format!("no column named `{name}`") })?;
        let mut keyed = Vec::with_capacity(self.rows.len());
        for (k, row) in self.rows.iter().enumerate() {
            let err = || Error::InvalidData {
                line: k + 2,
                message: format!("column `{name}`: `{}` is not an integer label", row[c]),
            };
            let v: f64 = row[c].parse().map_err(|_| err())?;
            if v.fract() != 0.0 {
                return Err(err());
            }
            let t: f64 = row[0].parse().unwrap_or(f64::NAN);
            keyed.push((t, v as i64));
        }
        // same stable order as SurvivalDataset::new
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(keyed.into_iter().map(|(_, g)| g).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(times: &[f64], events: &[bool], z: &[f64]) -> SurvivalDataset {
        let subjects = times
            .iter()
            .zip(events)
            .zip(z)
            .map(|((&t, &e), &z)| Subject::new(t, e, vec![z]))
            .collect();
        SurvivalDataset::new(subjects, None).unwrap()
    }

    #[test]
    fn risk_set_examples() {
        let d = ds(&[1.0, 2.0, 3.0], &[true; 3], &[0.0; 3]);
        assert_eq!(d.risk_set(2.0), 1..3);
        assert_eq!(d.risk_set(0.5), 0..3);
        let tied = ds(&[1.0, 1.0, 2.0], &[true; 3], &[0.0; 3]);
        assert_eq!(tied.risk_set(1.0), 0..3);
        assert!(tied.has_ties());
        assert!(d.risk_set(3.5).is_empty());
    }

    #[test]
    fn event_set_examples() {
        let d = ds(&[1.0, 2.0, 3.0], &[true; 3], &[0.0; 3]);
        let k = SegmentPartition::new(vec![2.5], d.horizon()).unwrap();
        assert_eq!(d.event_set(&k, 0), vec![0, 1]);
        assert_eq!(d.event_set(&k, 1), vec![2]);
        let whole = SegmentPartition::whole(d.horizon());
        assert_eq!(d.event_set(&whole, 0), vec![0, 1, 2]);
        // change-point at an event time sends that event right
        let at = SegmentPartition::new(vec![2.0], d.horizon()).unwrap();
        assert_eq!(d.event_set(&at, 0), vec![0]);
        assert_eq!(d.event_set(&at, 1), vec![1, 2]);
    }

    #[test]
    fn h_and_h_matrix_examples() {
        let d = ds(&[1.0, 2.0, 3.0], &[true; 3], &[0.0, 1.0, 2.0]);
        let h0 = h_vector(&d, 0.5, &[0.0]).unwrap();
        assert!((h0[0] - 1.0).abs() < 1e-15);
        let e = std::f64::consts::E;
        let h1 = h_vector(&d, 0.5, &[1.0]).unwrap();
        let want = (e + 2.0 * e * e) / (1.0 + e + e * e);
        assert!((h1[0] - want).abs() < 1e-14);
        assert!((h1[0] - 1.575_210_382_604_441_5).abs() < 1e-14);
        let big = h_matrix(&d, 0.5, &[0.0]).unwrap();
        assert!((big[(0, 0)] - 5.0 / 3.0).abs() < 1e-14);
        let single = h_matrix(&d, 3.0, &[0.7]).unwrap();
        assert!((single[(0, 0)] - 4.0).abs() < 1e-14);
        assert!((h_vector(&d, 3.0, &[0.7]).unwrap()[0] - 2.0).abs() < 1e-15);
        assert!(matches!(h_vector(&d, 4.0, &[0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn moments_are_stable_for_large_predictors() {
        let d = ds(&[1.0, 2.0], &[true, true], &[0.0, 1.0]);
        let m = d.risk_moments(0.5, &[800.0]).unwrap();
        assert!((m.h[0] - 1.0).abs() < 1e-12);
        assert!(m.log_s0.is_finite());
    }

    #[test]
    fn kaplan_meier_examples() {
        let d = ds(&[1.0, 2.0], &[true, true], &[0.0, 0.0]);
        let km = kaplan_meier(&d, &[0, 0]).unwrap();
        assert_eq!(km[&0], vec![(0.0, 1.0), (1.0, 0.5), (2.0, 0.0)]);
    }

    #[test]
    fn all_censored_group_keeps_survival_one() {
        let d = ds(&[1.0, 2.0, 3.0], &[false, true, false], &[0.0; 3]);
        let km = kaplan_meier(&d, &[1, 0, 1]).unwrap();
        assert_eq!(km[&1], vec![(0.0, 1.0)]);
        assert_eq!(km[&0], vec![(0.0, 1.0), (2.0, 0.0)]);
    }

    #[test]
    fn weighted_km_equals_duplicated_rows() {
        let subjects = vec![
            Subject::new(1.0, true, vec![0.0]).with_weight(2),
            Subject::new(2.0, false, vec![0.0]).with_weight(3),
            Subject::new(3.0, true, vec![0.0]),
            Subject::new(4.0, true, vec![0.0]).with_weight(2),
        ];
        let d = SurvivalDataset::new(subjects, None).unwrap();
        let expanded = d.expand_weights().unwrap();
        let a = kaplan_meier(&d, &vec![0; d.len()]).unwrap();
        let b = kaplan_meier(&expanded, &vec![0; expanded.len()]).unwrap();
        assert_eq!(a.len(), b.len());
        for ((t1, s1), (t2, s2)) in a[&0].iter().zip(&b[&0]) {
            assert_eq!(t1, t2);
            assert!((s1 - s2).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_datasets() {
        assert!(SurvivalDataset::new(vec![Subject::new(1.0, false, vec![])], None).is_err());
        assert!(SurvivalDataset::new(vec![Subject::new(0.0, true, vec![])], None).is_err());
        assert!(SurvivalDataset::new(
            vec![Subject::new(1.0, true, vec![1.0]), Subject::new(2.0, true, vec![])],
            None
        )
        .is_err());
        assert!(SurvivalDataset::new(vec![Subject::new(2.0, true, vec![])], Some(1.0)).is_err());
    }

    #[test]
    fn csv_parsing_and_diagnostics() {
        let text = "time,event,z1,weight\n3,1,0.5,2\n1,0,1.5,1\n";
        let d = SurvivalDataset::from_csv_reader(text.as_bytes()).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.p(), 1);
        assert_eq!(d.time(0), 1.0);
        assert_eq!(d.weight(1), 2.0);
        let bad = "time,event,z1\n1,1,0\n2,2,1\n";
        match SurvivalDataset::from_csv_reader(bad.as_bytes()) {
            Err(Error::InvalidData { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("event"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let neg = "time,event,z1\n-1,1,0\n";
        assert!(matches!(
            SurvivalDataset::from_csv_reader(neg.as_bytes()),
            Err(Error::InvalidData { line: 2, .. })
        ));
    }

    #[test]
    fn partition_validation_and_lookup() {
        assert!(SegmentPartition::new(vec![2.0, 1.0], 5.0).is_err());
        assert!(SegmentPartition::new(vec![5.0], 5.0).is_err());
        let k = SegmentPartition::new(vec![1.0, 3.0], 5.0).unwrap();
        assert_eq!(k.segment_of(0.5), 0);
        assert_eq!(k.segment_of(1.0), 1);
        assert_eq!(k.segment_of(5.0), 2);
        assert_eq!(k.bounds(1), (1.0, 3.0));
    }
}
