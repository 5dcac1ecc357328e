//! Plug-in matrices, the change-point bias constant `C` and the information
//! criteria AIC, AIC_naive, AIC_ξ and TIC.
//!
//! All plug-in matrices are scaled by `1/n` with `n` the weighted number of
//! subjects. The segment-scaled ridge weight `ξ*(j)` is taken as
//! `|D̂_j| ξ / n` so that `B̂ = Â_B + ξ* I` holds on the same scale as the
//! other matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::Interval;
use crate::linalg::{self, Matrix, Vector};
use crate::search::{ChangePointModelFit, SearchConfig, SegmentCostTable};
use crate::survival::{linear_predictor, MomentAccumulator, SurvivalDataset};

/// Quadratic forms at or below this are treated as zero by [`c_hat`].
pub const DEGENERATE_TOL: f64 = 1e-12;

/// How `Â` is built from the per-event scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AVariant {
    /// `(1/n) (Σ score_i)(Σ score_i)'`. Rank one, and zero at the optimum.
    LiteralOuter,
    /// `(1/n) Σ score_i score_i'`.
    #[default]
    PerEventSum,
    /// `(1/n) Σ_i w_i w_i'` over per-subject robust scores (ξ = 0 only).
    Robust,
}

/// Per-segment plug-in matrices.
#[derive(Debug, Clone)]
pub struct SegmentMatrices {
    pub a_hat: Vec<Matrix>,
    pub b_hat: Vec<Matrix>,
    pub xi_star: Vec<f64>,
    pub variant: AVariant,
}

impl SegmentMatrices {
    /// Plug-in matrices of a fit. `Robust` pairs `Â₀` with `B̂₀`.
    pub fn from_fit(dataset: &SurvivalDataset, fit: &ChangePointModelFit, variant: AVariant) -> Result<Self> {
        let a_hat = match variant {
            AVariant::Robust => a0_hat(dataset, fit)?,
            v => a_hat(dataset, fit, v)?,
        };
        let n = dataset.weighted_n();
        Ok(Self {
            a_hat,
            b_hat: b_hat(dataset, fit)?,
            xi_star: fit.segments.iter().map(|s| s.events * fit.xi / n).collect(),
            variant,
        })
    }
}

/// Risk-set moments at one event of a segment.
struct EventTerm {
    index: usize,
    weight: f64,
    h: Vector,
    cov: Option<Matrix>,
    /// `S0(t)` divided by `e^shift`.
    s0_scaled: f64,
}

/// Walks the events of `interval` once, from the last to the first.
fn event_terms(dataset: &SurvivalDataset, interval: Interval, beta: &[f64], second: bool) -> (Vec<EventTerm>, f64) {
    let range = dataset.event_index_range(interval.lo, interval.hi, interval.closed);
    let n = dataset.len();
    let shift = (range.start..n)
        .map(|i| linear_predictor(dataset.z(i), beta))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut acc = MomentAccumulator::new(dataset.p(), second);
    let mut out = Vec::new();
    let mut group_end = n;
    for i in (range.start..n).rev() {
        acc.add(dataset.z(i), dataset.weight(i) * (linear_predictor(dataset.z(i), beta) - shift).exp());
        if dataset.risk_start(i) != i {
            continue;
        }
        let lo = i.max(range.start);
        let hi = group_end.min(range.end);
        if lo < hi && (lo..hi).any(|e| dataset.event(e)) {
            let moments = acc.finish(shift);
            let cov = second.then(|| moments.covariance());
            let s0_scaled = (moments.log_s0 - shift).exp();
            for e in (lo..hi).filter(|&e| dataset.event(e)) {
                out.push(EventTerm {
                    index: e,
                    weight: dataset.weight(e),
                    h: moments.h.clone(),
                    cov: cov.clone(),
                    s0_scaled,
                });
            }
        }
        group_end = i;
    }
    out.reverse();
    (out, shift)
}

fn segment_intervals(fit: &ChangePointModelFit) -> impl Iterator<Item = (usize, Interval)> + '_ {
    (0..fit.partition.segments()).map(move |j| (j, Interval::of_segment(&fit.partition, j)))
}

/// `Â` per segment from the scores `z_i − h(t_i) − ξβ̂`.
pub fn a_hat(dataset: &SurvivalDataset, fit: &ChangePointModelFit, variant: AVariant) -> Result<Vec<Matrix>> {
    let p = dataset.p();
    let n = dataset.weighted_n();
    let mut out = Vec::with_capacity(fit.segments.len());
    for (j, interval) in segment_intervals(fit) {
        let beta = &fit.segments[j].beta;
        let ridge = Vector::from_column_slice(beta) * fit.xi;
        let (terms, _) = event_terms(dataset, interval, beta, false);
        let mut sum = Vector::zeros(p);
        let mut outer = Matrix::zeros(p, p);
        for t in &terms {
            let score = Vector::from_column_slice(dataset.z(t.index)) - &t.h - &ridge;
            outer += t.weight * &score * score.transpose();
            sum += t.weight * score;
        }
        out.push(match variant {
            AVariant::LiteralOuter => &sum * sum.transpose() / n,
            AVariant::PerEventSum => outer / n,
            AVariant::Robust => return a0_hat(dataset, fit),
        });
    }
    Ok(out)
}

/// `B̂ = (1/n) Σ_{D̂_j} (H − h h' + ξ I)`, that is `−(1/n)` times the segment Hessian.
pub fn b_hat(dataset: &SurvivalDataset, fit: &ChangePointModelFit) -> Result<Vec<Matrix>> {
    let p = dataset.p();
    let n = dataset.weighted_n();
    let mut out = Vec::with_capacity(fit.segments.len());
    for (j, interval) in segment_intervals(fit) {
        let (terms, _) = event_terms(dataset, interval, &fit.segments[j].beta, true);
        let mut b = Matrix::zeros(p, p);
        for t in &terms {
            b += t.weight * t.cov.as_ref().expect("second moments requested");
            for r in 0..p {
                b[(r, r)] += t.weight * fit.xi;
            }
        }
        out.push(b / n);
    }
    Ok(out)
}

/// Per-subject robust scores `w_i` of segment `j`, in dataset order.
///
/// `w_i = δ_i 1{t_i ∈ segment j} (z_i − h(t_i)) − Σ_{l ∈ D̂_j, t_l ≤ t_i} d_l e^{β'z_i} / S0(t_l) (z_i − h(t_l))`
/// with `d_l` the weight of event `l`. The weighted sum over subjects equals
/// the segment score, which vanishes at the unregularized optimum.
pub fn robust_score_w(dataset: &SurvivalDataset, fit: &ChangePointModelFit, j: usize) -> Result<Vec<Vector>> {
    if fit.xi != 0.0 {
        return Err(Error::Contract("robust scores are defined for xi = 0 only".into()));
    }
    if j >= fit.segments.len() {
        return Err(Error::domain(format!("segment {j} out of range")));
    }
    let p = dataset.p();
    let beta = &fit.segments[j].beta;
    let (terms, shift) = event_terms(dataset, Interval::of_segment(&fit.partition, j), beta, false);
    let mut w = vec![Vector::zeros(p); dataset.len()];
    for t in &terms {
        w[t.index] += Vector::from_column_slice(dataset.z(t.index)) - &t.h;
    }
    // forward pass: cumulative Σ d_l / S0(t_l) and Σ d_l h(t_l) / S0(t_l) over events with t_l <= t_i
    let mut cum_a = 0.0;
    let mut cum_b = Vector::zeros(p);
    let mut next = 0;
    for (i, wi) in w.iter_mut().enumerate() {
        while next < terms.len() && dataset.time(terms[next].index) <= dataset.time(i) {
            let t = &terms[next];
            cum_a += t.weight / t.s0_scaled;
            cum_b += &t.h * (t.weight / t.s0_scaled);
            next += 1;
        }
        if cum_a == 0.0 {
            continue;
        }
        let r = (linear_predictor(dataset.z(i), beta) - shift).exp();
        let z = Vector::from_column_slice(dataset.z(i));
        *wi -= (z * cum_a - &cum_b) * r;
    }
    Ok(w)
}

/// `Â₀ = (1/n) Σ_i w_i w_i'` per segment.
pub fn a0_hat(dataset: &SurvivalDataset, fit: &ChangePointModelFit) -> Result<Vec<Matrix>> {
    let p = dataset.p();
    let n = dataset.weighted_n();
    (0..fit.segments.len())
        .map(|j| {
            let w = robust_score_w(dataset, fit, j)?;
            let mut a = Matrix::zeros(p, p);
            for (i, wi) in w.iter().enumerate() {
                a += dataset.weight(i) * wi * wi.transpose();
            }
            Ok(a / n)
        })
        .collect()
}

/// The bias constant for one change-point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CValue {
    pub value: f64,
    /// True when the fallback `3/2` was used.
    pub degenerate: bool,
}

/// `C` from the four quadratic forms `q†_j, q†_{j+1}, q‡_j, q‡_{j+1}`.
///
/// With `c_i = q‡_i / q†_i` this is `1/c_1 + 1/c_2 − 1/(c_1 + c_2)`, the
/// expected supremum of the limiting two-sided Brownian motion. Written over
/// a common denominator:
///
/// ```text
/// {(q‡_j q†_{j+1})² + (q‡_{j+1} q†_j)² + q‡_j q‡_{j+1} q†_j q†_{j+1}}
///     / {q‡_j q‡_{j+1} (q‡_j q†_{j+1} + q‡_{j+1} q†_j)}
/// ```
pub fn c_from_forms(dag_j: f64, dag_j1: f64, ddag_j: f64, ddag_j1: f64) -> CValue {
    let forms = [dag_j, dag_j1, ddag_j, ddag_j1];
    if forms.iter().any(|q| !(*q > DEGENERATE_TOL)) {
        return CValue { value: 1.5, degenerate: true };
    }
    let num = (ddag_j * dag_j1).powi(2) + (ddag_j1 * dag_j).powi(2) + ddag_j * ddag_j1 * dag_j * dag_j1;
    let den = ddag_j * ddag_j1 * (ddag_j * dag_j1 + ddag_j1 * dag_j);
    CValue { value: num / den, degenerate: false }
}

/// The same rational function with the second numerator term taken
/// literally as `(q‡_{j+1} q†_{j+1})²`. Kept for comparison only: it is not
/// homogeneous in the matrices and disagrees with the Brownian-motion oracle
/// whenever the two segments differ.
pub fn c_printed(dag_j: f64, dag_j1: f64, ddag_j: f64, ddag_j1: f64) -> f64 {
    let num = (ddag_j * dag_j1).powi(2) + (ddag_j1 * dag_j1).powi(2) + ddag_j * ddag_j1 * dag_j * dag_j1;
    let den = ddag_j * ddag_j1 * (ddag_j * dag_j1 + ddag_j1 * dag_j);
    num / den
}

/// `Ĉ(A†, A‡)` for the change-point between segments `j` and `j+1`, with
/// `Δ = β̂_{j+1} − β̂_j`.
pub fn c_hat(a_dag_j: &Matrix, a_dag_j1: &Matrix, a_ddag_j: &Matrix, a_ddag_j1: &Matrix, delta: &Vector) -> CValue {
    if delta.iter().all(|d| *d == 0.0) {
        return CValue { value: 1.5, degenerate: true };
    }
    // Ĉ is homogeneous of degree 0 in Δ; normalizing keeps the forms well scaled
    let d = delta / delta.norm();
    c_from_forms(
        linalg::quad_form(a_dag_j, &d),
        linalg::quad_form(a_dag_j1, &d),
        linalg::quad_form(a_ddag_j, &d),
        linalg::quad_form(a_ddag_j1, &d),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    Aic,
    AicNaive,
    AicXi,
    Tic,
}

impl CriterionKind {
    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::Aic => "aic",
            CriterionKind::AicNaive => "aic_naive",
            CriterionKind::AicXi => "aic_xi",
            CriterionKind::Tic => "tic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "aic" => Ok(CriterionKind::Aic),
            "naive" | "aic_naive" => Ok(CriterionKind::AicNaive),
            "xi" | "aic_xi" => Ok(CriterionKind::AicXi),
            "tic" => Ok(CriterionKind::Tic),
            other => Err(Error::Config(format!("unknown criterion '{other}' (expected aic, naive, xi or tic)"))),
        }
    }
}

/// A criterion value split into `−2 l̂` and its two penalty parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub changepoint: f64,
    pub regression: f64,
    /// Change-points whose `Ĉ` fell back to `3/2`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_changepoints: Vec<usize>,
}

impl Penalty {
    pub fn total(&self) -> f64 {
        self.changepoint + self.regression
    }
}

/// `−2l + 6m + 2p(m+1)`.
pub fn aic_value(log_pl: f64, m: usize, p: usize) -> f64 {
    -2.0 * log_pl + 6.0 * m as f64 + 2.0 * (p * (m + 1)) as f64
}

/// `−2l + 2m + 2p(m+1)`.
pub fn aic_naive_value(log_pl: f64, m: usize, p: usize) -> f64 {
    -2.0 * log_pl + 2.0 * m as f64 + 2.0 * (p * (m + 1)) as f64
}

fn require_unregularized(fit: &ChangePointModelFit, what: &str) -> Result<()> {
    if fit.xi != 0.0 {
        return Err(Error::Contract(format!(
            "{what} is defined for xi = 0, the fit used xi = {}; use aic_xi",
            fit.xi
        )));
    }
    Ok(())
}

pub fn aic_penalty(fit: &ChangePointModelFit) -> Penalty {
    Penalty {
        changepoint: 6.0 * fit.m as f64,
        regression: 2.0 * (fit.p * (fit.m + 1)) as f64,
        degenerate_changepoints: Vec::new(),
    }
}

pub fn aic_naive_penalty(fit: &ChangePointModelFit) -> Penalty {
    Penalty {
        changepoint: 2.0 * fit.m as f64,
        regression: 2.0 * (fit.p * (fit.m + 1)) as f64,
        degenerate_changepoints: Vec::new(),
    }
}

pub fn aic(fit: &ChangePointModelFit) -> Result<f64> {
    require_unregularized(fit, "AIC")?;
    Ok(aic_value(fit.log_pl, fit.m, fit.p))
}

pub fn aic_naive(fit: &ChangePointModelFit) -> Result<f64> {
    require_unregularized(fit, "AIC_naive")?;
    Ok(aic_naive_value(fit.log_pl, fit.m, fit.p))
}

/// Penalty `4 Σ Ĉ(A†, A‡) + 2 Σ tr(A† A‡⁻¹)` for given matrix families.
pub fn sandwich_penalty(dagger: &[Matrix], ddagger: &[Matrix], betas: &[Vec<f64>], what: &str) -> Result<Penalty> {
    let segments = dagger.len();
    if ddagger.len() != segments || betas.len() != segments {
        return Err(Error::domain("matrix families and coefficients disagree on the number of segments"));
    }
    let mut regression = 0.0;
    for (a, b) in dagger.iter().zip(ddagger) {
        let inv = linalg::spd_inverse(b, what)?;
        regression += 2.0 * (a * inv).trace();
    }
    let mut changepoint = 0.0;
    let mut degenerate = Vec::new();
    for j in 0..segments.saturating_sub(1) {
        let delta = Vector::from_column_slice(&betas[j + 1]) - Vector::from_column_slice(&betas[j]);
        let c = c_hat(&dagger[j], &dagger[j + 1], &ddagger[j], &ddagger[j + 1], &delta);
        if c.degenerate {
            degenerate.push(j + 1);
        }
        changepoint += 4.0 * c.value;
    }
    Ok(Penalty { changepoint, regression, degenerate_changepoints: degenerate })
}

/// AIC_ξ penalty from `Â` and `Â + ξ* I`.
pub fn aic_xi_penalty(fit: &ChangePointModelFit, matrices: &SegmentMatrices) -> Result<Penalty> {
    let ddagger: Vec<Matrix> = matrices
        .a_hat
        .iter()
        .zip(&matrices.xi_star)
        .map(|(a, &x)| a + Matrix::identity(a.nrows(), a.ncols()) * x)
        .collect();
    sandwich_penalty(&matrices.a_hat, &ddagger, &fit.betas(), "A_hat + xi* I").map_err(|e| match e {
        Error::Singular(msg) if fit.xi == 0.0 => Error::Singular(format!("{msg}; A_hat is rank deficient, use xi > 0")),
        other => other,
    })
}

/// `−2 l_ξ + 4 Σ Ĉ{Â, Â + ξ* I} + 2 Σ tr[Â (Â + ξ* I)⁻¹]`.
pub fn aic_xi(fit: &ChangePointModelFit, matrices: &SegmentMatrices) -> Result<f64> {
    Ok(-2.0 * fit.log_pl + aic_xi_penalty(fit, matrices)?.total())
}

pub fn tic_penalty(dataset: &SurvivalDataset, fit: &ChangePointModelFit) -> Result<Penalty> {
    require_unregularized(fit, "TIC")?;
    let a0 = a0_hat(dataset, fit)?;
    let b0 = b_hat(dataset, fit)?;
    sandwich_penalty(&a0, &b0, &fit.betas(), "B0_hat")
}

/// `−2l + 4 Σ Ĉ{Â₀, B̂₀} + 2 Σ tr(Â₀ B̂₀⁻¹)`.
pub fn tic(dataset: &SurvivalDataset, fit: &ChangePointModelFit) -> Result<f64> {
    Ok(-2.0 * fit.log_pl + tic_penalty(dataset, fit)?.total())
}

/// Penalty of `kind` for a fit.
pub fn penalty(dataset: &SurvivalDataset, fit: &ChangePointModelFit, kind: CriterionKind) -> Result<Penalty> {
    match kind {
        CriterionKind::Aic => require_unregularized(fit, "AIC").map(|_| aic_penalty(fit)),
        CriterionKind::AicNaive => require_unregularized(fit, "AIC_naive").map(|_| aic_naive_penalty(fit)),
        CriterionKind::AicXi => {
            let mats = SegmentMatrices::from_fit(dataset, fit, AVariant::PerEventSum)?;
            aic_xi_penalty(fit, &mats)
        }
        CriterionKind::Tic => tic_penalty(dataset, fit),
    }
}

/// One row of a model ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub m: usize,
    pub k_hat: Vec<f64>,
    pub beta_hat: Vec<Vec<f64>>,
    pub log_pl: f64,
    pub criterion_kind: CriterionKind,
    pub criterion: f64,
    pub penalty_changepoint: f64,
    pub penalty_regression: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub degenerate_changepoints: Vec<usize>,
}

impl CriterionReport {
    pub fn new(fit: &ChangePointModelFit, kind: CriterionKind, penalty: Penalty) -> Self {
        Self {
            m: fit.m,
            k_hat: fit.k_hat().to_vec(),
            beta_hat: fit.betas(),
            log_pl: fit.log_pl,
            criterion_kind: kind,
            criterion: -2.0 * fit.log_pl + penalty.total(),
            penalty_changepoint: penalty.changepoint,
            penalty_regression: penalty.regression,
            degenerate_changepoints: penalty.degenerate_changepoints,
        }
    }
}

/// Sorts reports ascending by criterion; ties go to the smaller `m`.
pub fn sort_reports(reports: &mut [CriterionReport]) {
    reports.sort_by(|a, b| a.criterion.total_cmp(&b.criterion).then(a.m.cmp(&b.m)));
}

/// Fits `m = 0..=m_max` and returns the fits in order of `m`. All fits share
/// one memoized segment-cost table.
pub fn fit_models(dataset: &SurvivalDataset, m_max: usize, config: &SearchConfig) -> Result<Vec<ChangePointModelFit>> {
    let table = SegmentCostTable::new(dataset, *config)?;
    (0..=m_max).map(|m| table.search(m)).collect()
}

/// Fits `m = 0..=m_max` and ranks them by `kind`, best first.
pub fn rank_models(
    dataset: &SurvivalDataset,
    m_max: usize,
    kind: CriterionKind,
    config: &SearchConfig,
) -> Result<Vec<CriterionReport>> {
    if matches!(kind, CriterionKind::Tic | CriterionKind::Aic | CriterionKind::AicNaive) && config.ridge.xi != 0.0 {
        return Err(Error::Contract(format!("{} is defined for xi = 0 only", kind.name())));
    }
    let fits = fit_models(dataset, m_max, config)?;
    let mut reports = fits
        .iter()
        .map(|fit| Ok(CriterionReport::new(fit, kind, penalty(dataset, fit, kind)?)))
        .collect::<Result<Vec<_>>>()?;
    sort_reports(&mut reports);
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::search;
    use crate::survival::Subject;

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
    fn equal_forms_give_three_halves() {
        for q in [1e-3, 0.7, 5.0] {
            let c = c_from_forms(q, q, q, q);
            assert!((c.value - 1.5).abs() < 1e-15);
            assert!(!c.degenerate);
        }
        assert!(c_from_forms(0.0, 1.0, 1.0, 1.0).degenerate);
        // both forms agree when the segments match
        assert!((c_printed(2.0, 2.0, 3.0, 3.0) - c_from_forms(2.0, 2.0, 3.0, 3.0).value).abs() < 1e-14);
    }

    #[test]
    fn c_matches_reciprocal_form() {
        // q† = (1, 2), q‡ = (1.5, 2.5): c = (1.5, 1.25)
        let got = c_from_forms(1.0, 2.0, 1.5, 2.5).value;
        let want = 1.0 / 1.5 + 1.0 / 1.25 - 1.0 / 2.75;
        assert!((got - want).abs() < 1e-14);
        assert!((c_printed(1.0, 2.0, 1.5, 2.5) - got).abs() > 0.5);
    }

    #[test]
    fn c_hat_is_homogeneous_in_delta() {
        let a1 = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let a2 = Matrix::from_row_slice(2, 2, &[1.0, -0.2, -0.2, 0.5]);
        let b1 = &a1 + Matrix::identity(2, 2) * 0.4;
        let b2 = &a2 + Matrix::identity(2, 2) * 0.1;
        let d = Vector::from_column_slice(&[0.7, -1.1]);
        let c = c_hat(&a1, &a2, &b1, &b2, &d).value;
        for s in [-3.0, 1e-4, 250.0] {
            assert!((c_hat(&a1, &a2, &b1, &b2, &(&d * s)).value - c).abs() < 1e-13);
        }
        assert!(c_hat(&a1, &a2, &b1, &b2, &Vector::zeros(2)).degenerate);
    }

    #[test]
    fn table4_arithmetic() {
        let l = [-2169.65, -2164.92, -2161.72, -2158.79];
        let naive: Vec<f64> = l.iter().enumerate().map(|(m, &l)| aic_naive_value(l, m, 1)).collect();
        let full: Vec<f64> = l.iter().enumerate().map(|(m, &l)| aic_value(l, m, 1)).collect();
        for (got, want) in naive.iter().zip([4341.30, 4335.84, 4333.44, 4331.58]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        for (got, want) in full.iter().zip([4341.30, 4339.84, 4341.44, 4343.58]) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
        assert_eq!(aic_value(0.0, 0, 1), 2.0);
    }

    fn sample() -> SurvivalDataset {
        let times = [0.4, 0.9, 1.3, 1.7, 2.2, 2.6, 3.1, 3.3, 3.9, 4.4, 4.8, 5.5];
        let events = [true, true, false, true, true, true, true, false, true, true, true, true];
        let z = [0.3, -1.2, 0.8, 1.5, -0.4, 0.9, -0.7, 0.1, 1.1, -1.6, 0.5, -0.2];
        ds(&times, &events, &z)
    }

    #[test]
    fn per_event_a_hat_single_event() {
        // one event with z = 1 among two at risk with z = (1, 0): h = 1/2 at β = 0
        let d = ds(&[1.0, 2.0, 3.0, 4.0], &[true, false, false, false], &[1.0, 0.0, 0.0, 0.0]);
        let fit = ChangePointModelFit {
            m: 0,
            p: 1,
            partition: crate::survival::SegmentPartition::whole(4.0),
            segments: vec![crate::likelihood::SegmentFit {
                beta: vec![0.0],
                log_pl: 0.0,
                converged: true,
                iterations: 0,
                events: 1.0,
            }],
            log_pl: 0.0,
            xi: 0.0,
            candidates: 0,
            segment_cost_evaluations: 0,
        };
        // h over {1, 0, 0, 0} is 1/4, score = 3/4
        let a = a_hat(&d, &fit, AVariant::PerEventSum).unwrap();
        assert!((a[0][(0, 0)] - 0.5625 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn literal_outer_vanishes_at_ridge_optimum() {
        let d = sample();
        let fit = search(&d, 0, &SearchConfig::new(1).with_xi(0.05)).unwrap();
        let a = a_hat(&d, &fit, AVariant::LiteralOuter).unwrap();
        assert!(a[0].abs().max() < 1e-15);
        let b = b_hat(&d, &fit).unwrap();
        let n = d.weighted_n();
        assert!(linalg::min_eigenvalue(&b[0]) >= fit.segments[0].events * 0.05 / n - 1e-15);
        let hess = crate::likelihood::segment_hessian(&d, &fit.partition, 0, &fit.segments[0].beta, 0.05).unwrap();
        assert!((&b[0] + hess / n).abs().max() < 1e-12);
    }

    #[test]
    fn robust_scores_sum_to_zero_and_match_double_loop() {
        let d = sample();
        let fit = search(&d, 1, &SearchConfig::new(1).with_min_events(3)).unwrap();
        for j in 0..2 {
            let w = robust_score_w(&d, &fit, j).unwrap();
            let total: f64 = w.iter().map(|v| v[0]).sum();
            assert!(total.abs() < 1e-8 * d.len() as f64, "segment {j}: {total}");
            // brute-force double loop
            let beta = fit.segments[j].beta[0];
            let events = d.event_set(&fit.partition, j);
            for i in 0..d.len() {
                let zi = d.z(i)[0];
                let mut want = 0.0;
                if events.contains(&i) {
                    want += zi - h(&d, d.time(i), beta);
                }
                for &l in &events {
                    if d.time(l) <= d.time(i) {
                        let s0: f64 = d.risk_set(d.time(l)).map(|r| (beta * d.z(r)[0]).exp()).sum();
                        want -= (beta * zi).exp() / s0 * (zi - h(&d, d.time(l), beta));
                    }
                }
                assert!((w[i][0] - want).abs() < 1e-12, "i = {i}");
            }
        }
    }

    fn h(d: &SurvivalDataset, t: f64, beta: f64) -> f64 {
        let r = d.risk_set(t);
        let num: f64 = r.clone().map(|i| d.z(i)[0] * (beta * d.z(i)[0]).exp()).sum();
        let den: f64 = r.map(|i| (beta * d.z(i)[0]).exp()).sum();
        num / den
    }

    #[test]
    fn lone_event_has_zero_robust_score() {
        let d = ds(&[1.0], &[true], &[0.4]);
        let fit = ChangePointModelFit {
            m: 0,
            p: 1,
            partition: crate::survival::SegmentPartition::whole(1.0),
            segments: vec![crate::likelihood::SegmentFit {
                beta: vec![0.3],
                log_pl: 0.0,
                converged: true,
                iterations: 0,
                events: 1.0,
            }],
            log_pl: 0.0,
            xi: 0.0,
            candidates: 0,
            segment_cost_evaluations: 0,
        };
        assert!(robust_score_w(&d, &fit, 0).unwrap()[0][0].abs() < 1e-15);
    }

    #[test]
    fn scalar_penalties() {
        // Â = I, ξ* = 1, p = 2, m = 0: 2 tr(I (2I)^{-1}) = 2
        let pen = sandwich_penalty(
            &[Matrix::identity(2, 2)],
            &[Matrix::identity(2, 2) * 2.0],
            &[vec![0.0, 0.0]],
            "B",
        )
        .unwrap();
        assert!((pen.total() - 2.0).abs() < 1e-15);
        // Â₀ = 2 B̂₀, p = 1, m = 0: penalty 4
        let pen = sandwich_penalty(&[Matrix::from_element(1, 1, 0.6)], &[Matrix::from_element(1, 1, 0.3)], &[vec![1.0]], "B").unwrap();
        assert!((pen.total() - 4.0).abs() < 1e-15);
        // equal families reduce to the AIC penalty
        let a = Matrix::from_element(1, 1, 0.8);
        let pen = sandwich_penalty(&[a.clone(), a.clone(), a.clone()], &[a.clone(), a.clone(), a], &[vec![0.0], vec![1.0], vec![-1.0]], "B").unwrap();
        assert!((pen.total() - (6.0 * 2.0 + 2.0 * 3.0)).abs() < 1e-12);
    }

    #[test]
    fn regularized_fit_rejects_plain_aic_and_tic() {
        let d = sample();
        let fit = search(&d, 0, &SearchConfig::new(1).with_xi(0.1)).unwrap();
        assert!(matches!(aic(&fit), Err(Error::Contract(_))));
        assert!(matches!(tic(&d, &fit), Err(Error::Contract(_))));
        assert!(matches!(
            rank_models(&d, 1, CriterionKind::Tic, &SearchConfig::new(1).with_xi(0.1)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn ranking_identities() {
        let d = sample();
        let cfg = SearchConfig::new(1).with_min_events(3);
        let aic_rows = rank_models(&d, 2, CriterionKind::Aic, &cfg).unwrap();
        let naive_rows = rank_models(&d, 2, CriterionKind::AicNaive, &cfg).unwrap();
        for r in aic_rows.iter().chain(&naive_rows) {
            let total = -2.0 * r.log_pl + r.penalty_changepoint + r.penalty_regression;
            assert_eq!(r.criterion, total);
        }
        for r in &aic_rows {
            let n = naive_rows.iter().find(|x| x.m == r.m).unwrap();
            assert!((r.criterion - n.criterion - 4.0 * r.m as f64).abs() < 1e-9);
        }
        assert!(aic_rows.windows(2).all(|w| w[0].criterion <= w[1].criterion));
        assert_eq!(rank_models(&d, 0, CriterionKind::Aic, &cfg).unwrap().len(), 1);
    }
}
