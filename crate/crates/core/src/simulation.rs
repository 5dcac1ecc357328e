//! Data generation from a piecewise-constant hazard ratio model and the
//! Monte Carlo experiments built on it: the bias of the maximized
//! log-partial likelihood, and model selection by the criteria.
//!
//! The truth has one binary or Gaussian covariate `z`, a constant baseline
//! hazard `λ₀` and hazard ratio `e^{β*_j z}` on segment `j`. Follow-up is cut
//! administratively at the `horizon_quantile` quantile of the baseline
//! survival law.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, CriterionKind};
use crate::error::{Error, Result};
use crate::likelihood::log_partial_likelihood;
use crate::normal;
use crate::quadrature;
use crate::rng::{self, StreamRng};
use crate::search::{search, ChangePointModelFit, SearchConfig, SegmentCostTable};
use crate::stats::{mean_se, MeanSe};
use crate::survival::{SegmentPartition, Subject, SurvivalDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CovariateLaw {
    #[default]
    BernoulliHalf,
    StandardNormal,
}

fn default_rate() -> f64 {
    1.0
}

fn default_quantile() -> f64 {
    0.95
}

/// A data-generating truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthSpec {
    /// `e^{β*_j}` for the `m* + 1` segments.
    pub hazard_ratios: Vec<f64>,
    /// Change-points as baseline failure probabilities: `S₀(k*_j) = 1 − α_j`.
    #[serde(default)]
    pub alpha: Vec<f64>,
    /// Explicit change-points; used instead of `alpha` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_star: Option<Vec<f64>>,
    #[serde(default = "default_rate")]
    pub baseline_rate: f64,
    #[serde(default)]
    pub covariate_law: CovariateLaw,
    /// Expected number of events `#D`.
    pub target_events: usize,
    /// Administrative censoring at this baseline quantile; 1 means none.
    #[serde(default = "default_quantile")]
    pub horizon_quantile: f64,
}

impl TruthSpec {
    /// Single covariate, unit baseline rate, Bernoulli(1/2) covariate.
    pub fn new(hazard_ratios: Vec<f64>, alpha: Vec<f64>, target_events: usize) -> Self {
        Self {
            hazard_ratios,
            alpha,
            k_star: None,
            baseline_rate: 1.0,
            covariate_law: CovariateLaw::BernoulliHalf,
            target_events,
            horizon_quantile: default_quantile(),
        }
    }

    pub fn m_star(&self) -> usize {
        self.hazard_ratios.len().saturating_sub(1)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.hazard_ratios.iter().map(|r| r.ln()).collect()
    }

    /// Follow-up horizon `T`; infinite without censoring.
    pub fn horizon(&self) -> f64 {
        if self.horizon_quantile >= 1.0 {
            f64::INFINITY
        } else {
            -(1.0 - self.horizon_quantile).ln() / self.baseline_rate
        }
    }

    /// `k*`, from `alpha` through `k = −log(1 − α)/λ₀` unless given explicitly.
    pub fn changepoints(&self) -> Vec<f64> {
        match &self.k_star {
            Some(k) => k.clone(),
            None => self.alpha.iter().map(|a| -(1.0 - a).ln() / self.baseline_rate).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.hazard_ratios.is_empty() || self.hazard_ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config("hazard_ratios must be a non-empty list of positive numbers".into()));
        }
        if self.hazard_ratios.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("consecutive hazard ratios must differ".into()));
        }
        if !(self.baseline_rate > 0.0 && self.baseline_rate.is_finite()) {
            return Err(Error::Config("baseline_rate must be positive".into()));
        }
        if !(self.horizon_quantile > 0.0 && self.horizon_quantile <= 1.0) {
            return Err(Error::Config("horizon_quantile must lie in (0, 1]".into()));
        }
        if self.k_star.is_none() && self.alpha.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::Config("alpha values must lie in (0, 1)".into()));
        }
        let k = self.changepoints();
        if k.len() != self.m_star() {
            return Err(Error::Config(format!(
                "{} hazard ratios need {} change-points, got {}",
                self.hazard_ratios.len(),
                self.m_star(),
                k.len()
            )));
        }
        if k.iter().any(|v| !(*v > 0.0)) || k.windows(2).any(|w| w[0] >= w[1]) || k.last().is_some_and(|&v| v >= self.horizon()) {
            return Err(Error::Config(format!(
                "change-points {k:?} must increase strictly inside (0, T) with T = {}",
                self.horizon()
            )));
        }
        if self.target_events < 10 {
            return Err(Error::Config("target_events must be at least 10".into()));
        }
        Ok(())
    }

    /// The true partition on a dataset's time axis.
    pub fn partition(&self, horizon: f64) -> Result<SegmentPartition> {
        SegmentPartition::new(self.changepoints(), horizon)
    }

    /// Cumulative hazard `Λ(t | z)`.
    pub fn cumulative_hazard(&self, t: f64, z: f64) -> f64 {
        let k = self.changepoints();
        let mut lo = 0.0;
        let mut total = 0.0;
        for (j, r) in self.hazard_ratios.iter().enumerate() {
            let hi = k.get(j).copied().unwrap_or(f64::INFINITY).min(t);
            if hi > lo {
                total += self.baseline_rate * r.powf(z) * (hi - lo);
            }
            if hi >= t {
                break;
            }
            lo = hi;
        }
        total
    }

    /// Inverts `Λ(t | z) = e` segment by segment.
    pub fn invert_cumulative_hazard(&self, mut e: f64, z: f64) -> f64 {
        let k = self.changepoints();
        let mut lo = 0.0;
        for (j, r) in self.hazard_ratios.iter().enumerate() {
            let rate = self.baseline_rate * r.powf(z);
            let hi = k.get(j).copied().unwrap_or(f64::INFINITY);
            if hi == f64::INFINITY || e < rate * (hi - lo) {
                return lo + e / rate;
            }
            e -= rate * (hi - lo);
            lo = hi;
        }
        unreachable!("the last segment is unbounded")
    }

    fn draw_covariate(&self, rng: &mut StreamRng) -> f64 {
        match self.covariate_law {
            CovariateLaw::BernoulliHalf => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    0.0
                }
            }
            CovariateLaw::StandardNormal => rng.sample(StandardNormal),
        }
    }

    /// `P(event before T)`, averaged over the covariate law.
    pub fn event_probability(&self) -> Result<f64> {
        let t = self.horizon();
        let p_z = |z: f64| -(-self.cumulative_hazard(t, z)).exp_m1();
        match self.covariate_law {
            CovariateLaw::BernoulliHalf => Ok(0.5 * (p_z(0.0) + p_z(1.0))),
            CovariateLaw::StandardNormal => {
                quadrature::integrate(|z| normal::pdf(z) * p_z(z), -12.0, 12.0, 1e-12)
            }
        }
    }
}

/// Draws `n` subjects from `truth`.
pub fn generate_dataset(truth: &TruthSpec, n: usize, seed: u64) -> Result<SurvivalDataset> {
    truth.validate()?;
    let mut rng = rng::stream(seed, 0);
    generate_with(truth, n, &mut rng)
}

fn generate_with(truth: &TruthSpec, n: usize, rng: &mut StreamRng) -> Result<SurvivalDataset> {
    let horizon = truth.horizon();
    let subjects: Vec<Subject> = (0..n)
        .map(|_| {
            let z = truth.draw_covariate(rng);
            let e: f64 = rng.sample(Exp1);
            let t = truth.invert_cumulative_hazard(e, z);
            if t <= horizon {
                Subject::new(t, true, vec![z])
            } else {
                Subject::new(horizon, false, vec![z])
            }
        })
        .collect();
    let fixed = horizon.is_finite().then_some(horizon);
    SurvivalDataset::new(subjects, fixed)
}

/// Sample size whose expected event count is `target_events`.
pub fn calibrate_n_for_events(truth: &TruthSpec, target_events: usize) -> Result<usize> {
    let p = truth.event_probability()?;
    if !(p > 1e-3) {
        return Err(Error::Infeasible(format!(
            "event probability {p:.2e} before the horizon is too small to reach {target_events} events"
        )));
    }
    Ok((target_events as f64 / p).round() as usize)
}

/// `partition` moved onto a dataset's time axis. Administrative censoring
/// gives every replicate the same horizon; without it the later of the two
/// horizons is used so that no event falls outside the last segment.
fn partition_on(partition: &SegmentPartition, dataset: &SurvivalDataset) -> Result<SegmentPartition> {
    SegmentPartition::new(partition.changepoints().to_vec(), partition.horizon().max(dataset.horizon()))
}

/// `l(β, k; u)` at `ξ = 0` for a fitted model on another dataset.
pub fn evaluate_fit_on(fit: &ChangePointModelFit, dataset: &SurvivalDataset) -> Result<f64> {
    log_partial_likelihood(dataset, &partition_on(&fit.partition, dataset)?, &fit.beta_all(), 0.0)
}

/// `l(β*, k*; u)`.
pub fn evaluate_truth_on(truth: &TruthSpec, dataset: &SurvivalDataset) -> Result<f64> {
    let horizon = dataset.horizon().max(truth.changepoints().last().map_or(0.0, |k| k * (1.0 + 1e-12)));
    log_partial_likelihood(dataset, &truth.partition(horizon)?, &truth.betas(), 0.0)
}

/// `2 · mean_u {l(β*, k*; u) − l(β̂, k̂; u)}` over given evaluation sets.
pub fn kl_risk_on(truth: &TruthSpec, fit: &ChangePointModelFit, eval_sets: &[SurvivalDataset]) -> Result<MeanSe> {
    let diffs = eval_sets
        .iter()
        .map(|u| Ok(2.0 * (evaluate_truth_on(truth, u)? - evaluate_fit_on(fit, u)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean_se(&diffs))
}

/// Partial-likelihood Kullback-Leibler risk of `fit` over `replicates` fresh
/// datasets of size `n`.
pub fn kl_risk(truth: &TruthSpec, fit: &ChangePointModelFit, replicates: usize, n: usize, seed: u64) -> Result<MeanSe> {
    truth.validate()?;
    let sets = (0..replicates as u64)
        .map(|i| generate_with(truth, n, &mut rng::stream(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    kl_risk_on(truth, fit, &sets)
}

/// Randomized truths: one change-point at `α ~ U(alpha_range)` and ratio
/// `e^{β*_2}/e^{β*_1} = 2^{u₁(ψ + u₂)}` with `u₁ = ±1`, `u₂ ~ U(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomTruthSpec {
    pub psi: f64,
    #[serde(default = "default_alpha_range")]
    pub alpha_range: [f64; 2],
}

fn default_alpha_range() -> [f64; 2] {
    [0.1, 0.9]
}

impl RandomTruthSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.psi > 0.0) {
            return Err(Error::Config("psi must be positive".into()));
        }
        let [a, b] = self.alpha_range;
        if !(0.0 < a && a < b && b < 1.0) {
            return Err(Error::Config("alpha_range must satisfy 0 < a < b < 1".into()));
        }
        Ok(())
    }

    /// Draws a truth; `base` supplies the first hazard ratio and the design.
    pub fn draw(&self, base: &TruthSpec, rng: &mut StreamRng) -> TruthSpec {
        let u1 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let u2: f64 = rng.gen();
        let alpha = rng.gen_range(self.alpha_range[0]..self.alpha_range[1]);
        let r1 = base.hazard_ratios[0];
        TruthSpec {
            hazard_ratios: vec![r1, r1 * 2f64.powf(u1 * (self.psi + u2))],
            alpha: vec![alpha],
            k_star: None,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Bias,
    Selection,
}

fn default_replicates() -> usize {
    100
}

fn default_m_max() -> usize {
    3
}

fn default_eval_sets() -> usize {
    100
}

fn default_min_events() -> usize {
    DEFAULT_MIN_EVENTS
}

fn default_criteria() -> Vec<CriterionKind> {
    vec![CriterionKind::AicNaive, CriterionKind::Aic]
}

/// Minimum events per segment used by the experiments.
pub const DEFAULT_MIN_EVENTS: usize = 10;

/// Experiment configuration, as read from a recipe file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_min_events")]
    pub min_events: usize,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<CriterionKind>,
    /// Fresh datasets per replicate for the Kullback-Leibler risk.
    #[serde(default = "default_eval_sets")]
    pub kl_eval_sets: usize,
    pub truth: TruthSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_truth: Option<RandomTruthSpec>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.truth.validate()?;
        if let Some(r) = &self.random_truth {
            r.validate()?;
            if self.experiment != ExperimentKind::Selection {
                return Err(Error::Config("random_truth is only used by selection experiments".into()));
            }
        }
        if self.replicates < 2 {
            return Err(Error::Config("replicates must be at least 2".into()));
        }
        if self.min_events < 2 {
            return Err(Error::Config("min_events must be at least p + 1 = 2".into()));
        }
        if self.experiment == ExperimentKind::Bias && self.truth.m_star() == 0 {
            return Err(Error::Config("the bias experiment needs a truth with a change-point".into()));
        }
        if self.experiment == ExperimentKind::Selection {
            if self.criteria.is_empty() {
                return Err(Error::Config("criteria must not be empty".into()));
            }
            if self.kl_eval_sets < 2 {
                return Err(Error::Config("kl_eval_sets must be at least 2".into()));
            }
        }
        Ok(())
    }

    fn search_config(&self) -> SearchConfig {
        SearchConfig::new(1).with_min_events(self.min_events)
    }
}

/// Selection frequencies and risk of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionCell {
    pub criterion: CriterionKind,
    /// Percent of replicates choosing `m = 0..=m_max`.
    pub percent: Vec<f64>,
    pub kl: MeanSe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasSummary {
    pub bias: MeanSe,
    /// `3m + p(m+1)`.
    pub aic_prediction: f64,
    /// `m + p(m+1)`.
    pub naive_prediction: f64,
}

/// Outcome of an experiment, with everything needed to rerun it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    /// Sample size from event calibration (fixed truths only).
    pub n: Option<usize>,
    pub replicates: usize,
    /// Replicates dropped because a model could not be fitted.
    pub failed_replicates: usize,
    pub realized_events: MeanSe,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<BiasSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub selection: Vec<SelectionCell>,
}

impl ExperimentReport {
    /// CSV table, one row per setting (bias) or per criterion (selection).
    pub fn to_csv(&self) -> String {
        let t = &self.config.truth;
        let ratios = t.hazard_ratios.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";");
        let alpha = t.alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";");
        let mut out = String::new();
        match &self.bias {
            Some(b) => {
                out.push_str("alpha,hazard_ratios,target_events,replicates,bias_mean,bias_se,aic_prediction,naive_prediction\n");
                out.push_str(&format!(
                    "{alpha},{ratios},{},{},{:.4},{:.4},{},{}\n",
                    t.target_events, self.replicates, b.bias.mean, b.bias.se, b.aic_prediction, b.naive_prediction
                ));
            }
            None => {
                let m_cols = (0..=self.config.m_max).map(|m| format!("m{m}_pct")).collect::<Vec<_>>().join(",");
                out.push_str(&format!("alpha,target_events,hazard_ratios,m_star,criterion,kl_mean,kl_se,{m_cols}\n"));
                let (alpha, ratios, m_star) = match &self.config.random_truth {
                    Some(r) => (
                        format!("U({};{})", r.alpha_range[0], r.alpha_range[1]),
                        format!("{};psi={}", t.hazard_ratios[0], r.psi),
                        "1".to_string(),
                    ),
                    None => (alpha, ratios, t.m_star().to_string()),
                };
                for cell in &self.selection {
                    let pct = cell.percent.iter().map(|p| format!("{p:.1}")).collect::<Vec<_>>().join(",");
                    out.push_str(&format!(
                        "{alpha},{},{ratios},{m_star},{},{:.4},{:.4},{pct}\n",
                        t.target_events,
                        cell.criterion.name(),
                        cell.kl.mean,
                        cell.kl.se
                    ));
                }
            }
        }
        out
    }
}

struct BiasDraw {
    stat: f64,
    events: f64,
}

fn bias_replicate(config: &ExperimentConfig, n: usize, index: u64) -> Result<BiasDraw> {
    let seed = rng::child_seed(config.seed, index);
    let t = generate_with(&config.truth, n, &mut rng::stream(seed, 0))?;
    let u = generate_with(&config.truth, n, &mut rng::stream(seed, 1))?;
    let search_cfg = config.search_config();
    let m = config.truth.m_star();
    let fit_t = search(&t, m, &search_cfg)?;
    let fit_u = search(&u, m, &search_cfg)?;
    let cross = evaluate_fit_on(&fit_u, &t)?;
    Ok(BiasDraw { stat: fit_t.log_pl - cross, events: t.weighted_events() })
}

/// Estimates `E{l(β̂_t, k̂_t; t) − l(β̂_u, k̂_u; t)}` with paired replicates.
/// This is the optimism of the maximised log partial likelihood, on the
/// scale of `3m + p(m+1)`; twice it is the AIC penalty.
pub fn bias_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    if config.experiment != ExperimentKind::Bias {
        return Err(Error::Config("not a bias experiment".into()));
    }
    let n = calibrate_n_for_events(&config.truth, config.truth.target_events)?;
    let draws: Vec<Result<BiasDraw>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|i| bias_replicate(config, n, i))
        .collect();
    let ok: Vec<&BiasDraw> = draws.iter().filter_map(|d| d.as_ref().ok()).collect();
    if ok.len() < 2 {
        return Err(first_error(draws));
    }
    let m = config.truth.m_star() as f64;
    Ok(ExperimentReport {
        version: crate::VERSION.to_string(),
        seed: config.seed,
        config: config.clone(),
        n: Some(n),
        replicates: ok.len(),
        failed_replicates: draws.len() - ok.len(),
        realized_events: mean_se(&ok.iter().map(|d| d.events).collect::<Vec<_>>()),
        bias: Some(BiasSummary {
            bias: mean_se(&ok.iter().map(|d| d.stat).collect::<Vec<_>>()),
            aic_prediction: 3.0 * m + (m + 1.0),
            naive_prediction: m + (m + 1.0),
        }),
        selection: Vec::new(),
    })
}

fn first_error<T>(draws: Vec<Result<T>>) -> Error {
    draws
        .into_iter()
        .find_map(|d| d.err())
        .unwrap_or_else(|| Error::Infeasible("too few successful replicates".into()))
}

struct SelectionDraw {
    chosen: Vec<usize>,
    kl: Vec<f64>,
    events: f64,
}

/// Fits `m = 0..=m_max` on one dataset and scores each criterion.
fn selection_replicate(config: &ExperimentConfig, fixed_n: Option<usize>, index: u64) -> Result<SelectionDraw> {
    let seed = rng::child_seed(config.seed, index);
    let truth = match &config.random_truth {
        Some(r) => r.draw(&config.truth, &mut rng::stream(seed, u64::MAX)),
        None => config.truth.clone(),
    };
    let n = match fixed_n {
        Some(n) => n,
        None => calibrate_n_for_events(&truth, truth.target_events)?,
    };
    let t = generate_with(&truth, n, &mut rng::stream(seed, 0))?;
    let table = SegmentCostTable::new(&t, config.search_config())?;
    let fits = (0..=config.m_max).map(|m| table.search(m)).collect::<Result<Vec<_>>>()?;
    let eval_sets = (0..config.kl_eval_sets as u64)
        .map(|i| generate_with(&truth, n, &mut rng::stream(seed, i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let kl_by_m = fits
        .iter()
        .map(|f| kl_risk_on(&truth, f, &eval_sets).map(|k| k.mean))
        .collect::<Result<Vec<_>>>()?;
    let mut chosen = Vec::with_capacity(config.criteria.len());
    let mut kl = Vec::with_capacity(config.criteria.len());
    for &kind in &config.criteria {
        let mut reports = fits
            .iter()
            .map(|f| Ok(criteria::CriterionReport::new(f, kind, criteria::penalty(&t, f, kind)?)))
            .collect::<Result<Vec<_>>>()?;
        criteria::sort_reports(&mut reports);
        let m = reports[0].m;
        chosen.push(m);
        kl.push(kl_by_m[m]);
    }
    Ok(SelectionDraw { chosen, kl, events: t.weighted_events() })
}

/// Selection frequencies over `m = 0..=m_max` and the mean risk of the
/// selected models, per criterion.
pub fn selection_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    if config.experiment != ExperimentKind::Selection {
        return Err(Error::Config("not a selection experiment".into()));
    }
    let fixed_n = match config.random_truth {
        Some(_) => None,
        None => Some(calibrate_n_for_events(&config.truth, config.truth.target_events)?),
    };
    let draws: Vec<Result<SelectionDraw>> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|i| selection_replicate(config, fixed_n, i))
        .collect();
    let ok: Vec<&SelectionDraw> = draws.iter().filter_map(|d| d.as_ref().ok()).collect();
    if ok.len() < 2 {
        return Err(first_error(draws));
    }
    let selection = config
        .criteria
        .iter()
        .enumerate()
        .map(|(c, &kind)| {
            let mut counts = vec![0usize; config.m_max + 1];
            for d in &ok {
                counts[d.chosen[c]] += 1;
            }
            SelectionCell {
                criterion: kind,
                percent: counts.iter().map(|&k| 100.0 * k as f64 / ok.len() as f64).collect(),
                kl: mean_se(&ok.iter().map(|d| d.kl[c]).collect::<Vec<_>>()),
            }
        })
        .collect();
    Ok(ExperimentReport {
        version: crate::VERSION.to_string(),
        seed: config.seed,
        config: config.clone(),
        n: fixed_n,
        replicates: ok.len(),
        failed_replicates: draws.len() - ok.len(),
        realized_events: mean_se(&ok.iter().map(|d| d.events).collect::<Vec<_>>()),
        bias: None,
        selection,
    })
}

/// Runs whichever experiment `config` names.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    match config.experiment {
        ExperimentKind::Bias => bias_experiment(config),
        ExperimentKind::Selection => selection_experiment(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn changepoint_from_alpha() {
        let t = TruthSpec::new(vec![1.0, 0.8], vec![0.5], 100);
        assert!((t.changepoints()[0] - 2f64.ln()).abs() < 1e-15);
        assert!(t.validate().is_ok());
        assert!(TruthSpec::new(vec![1.0, 1.0], vec![0.5], 100).validate().is_err());
    }

    #[test]
    fn inverse_transform_round_trips() {
        let t = TruthSpec::new(vec![1.0, 0.25, 3.0], vec![0.3, 0.6], 100);
        for z in [0.0, 1.0, -0.7] {
            for e in [0.01, 0.3, 0.9, 2.5] {
                let time = t.invert_cumulative_hazard(e, z);
                assert!((t.cumulative_hazard(time, z) - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn calibration_by_hand() {
        let mut t = TruthSpec::new(vec![1.0], vec![], 100);
        t.horizon_quantile = 1.0;
        assert_eq!(calibrate_n_for_events(&t, 100).unwrap(), 100);
        t.horizon_quantile = 0.5;
        assert_eq!(calibrate_n_for_events(&t, 100).unwrap(), 200);
    }

    #[test]
    fn generation_is_reproducible() {
        let t = TruthSpec::new(vec![1.0, 0.5], vec![0.5], 50);
        let a = generate_dataset(&t, 60, 9).unwrap();
        let b = generate_dataset(&t, 60, 9).unwrap();
        assert_eq!(a.subjects(), b.subjects());
        assert!((a.horizon() - 20f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn truth_has_zero_kl_against_itself() {
        let t = TruthSpec::new(vec![1.0, 0.5], vec![0.5], 50);
        let d = generate_dataset(&t, 60, 3).unwrap();
        let mut fit = search(&d, 1, &SearchConfig::new(1).with_min_events(5)).unwrap();
        fit.partition = t.partition(d.horizon()).unwrap();
        for (s, b) in fit.segments.iter_mut().zip(t.betas()) {
            s.beta = vec![b];
        }
        let kl = kl_risk(&t, &fit, 5, 60, 4).unwrap();
        assert!(kl.mean.abs() < 1e-12);
    }
}
