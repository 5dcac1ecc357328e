//! Regularized log-partial likelihood for the change-point Cox model and
//! per-segment Newton fitting.
//!
//! For a partition into segments `j = 0..=m`, the objective is
//!
//! ```text
//! l_ξ(β, k) = Σ_j Σ_{i ∈ D_j} [ β_j'z_i − log Σ_{R(t_i)} e^{β_j'z} − (ξ/2) β_j'β_j ]
//! ```
//!
//! The ridge term sits inside the event sum, so segment `j` carries an
//! effective ridge weight of `|D_j| ξ`. Each event term only involves its own
//! segment's coefficients, which makes the objective separable across
//! segments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::survival::{linear_predictor, MomentAccumulator, SegmentPartition, SurvivalDataset};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    /// Ridge weight `ξ >= 0`.
    pub xi: f64,
    /// Convergence threshold on the sup-norm of the segment gradient.
    pub newton_tol: f64,
    pub max_iter: usize,
    pub step_halvings: usize,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self { xi: 0.0, newton_tol: 1e-8, max_iter: 50, step_halvings: 20 }
    }
}

impl RidgeConfig {
    pub fn with_xi(xi: f64) -> Self {
        Self { xi, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::Config(format!("xi must be finite and >= 0, got {}", self.xi)));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config(format!("newton_tol must be > 0, got {}", self.newton_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Maximizer of one segment's contribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentFit {
    pub beta: Vec<f64>,
    /// Segment contribution to `l_ξ` at `beta`.
    pub log_pl: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Weighted event count of the segment.
    pub events: f64,
}

/// Value and derivatives of one segment's contribution.
#[derive(Debug, Clone)]
pub struct SegmentEval {
    pub value: f64,
    pub gradient: Vector,
    /// Exact Hessian, `−Σ_{D_j} w_i (H − h h' + ξ I)`. Empty unless requested.
    pub hessian: Matrix,
    pub events: f64,
}

/// A time interval `[lo, hi)`, or `[lo, hi]` when `closed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub closed: bool,
}

impl Interval {
    pub fn of_segment(partition: &SegmentPartition, j: usize) -> Self {
        let (lo, hi) = partition.bounds(j);
        Self { lo, hi, closed: partition.is_last(j) }
    }
}

/// Evaluates the contribution of the events in `interval` at `beta`.
///
/// One backward sweep accumulates the risk-set sums; tie groups are closed
/// before their events are scored, which gives the Breslow convention.
pub fn evaluate_interval(
    dataset: &SurvivalDataset,
    interval: Interval,
    beta: &[f64],
    xi: f64,
    with_hessian: bool,
) -> Result<SegmentEval> {
    let p = dataset.p();
    if beta.len() != p {
        return Err(Error::domain(format!("beta has length {}, expected {p}", beta.len())));
    }
    let range = dataset.event_index_range(interval.lo, interval.hi, interval.closed);
    let mut out = SegmentEval {
        value: 0.0,
        gradient: Vector::zeros(p),
        hessian: if with_hessian { Matrix::zeros(p, p) } else { Matrix::zeros(0, 0) },
        events: 0.0,
    };
    if !(range.start..range.end).any(|i| dataset.event(i)) {
        return Ok(out);
    }
    let n = dataset.len();
    let shift = (range.start..n)
        .map(|i| linear_predictor(dataset.z(i), beta))
        .fold(f64::NEG_INFINITY, f64::max);
    let ridge = 0.5 * xi * beta.iter().map(|b| b * b).sum::<f64>();
    let beta_v = Vector::from_column_slice(beta);

    let mut acc = MomentAccumulator::new(p, with_hessian);
    let mut group_end = n;
    for i in (range.start..n).rev() {
        let w = dataset.weight(i) * (linear_predictor(dataset.z(i), beta) - shift).exp();
        acc.add(dataset.z(i), w);
        if dataset.risk_start(i) != i {
            continue;
        }
        let lo = i.max(range.start);
        let hi = group_end.min(range.end);
        if lo < hi && (lo..hi).any(|e| dataset.event(e)) {
            let moments = acc.finish(shift);
            let cov = with_hessian.then(|| moments.covariance());
            for e in (lo..hi).filter(|&e| dataset.event(e)) {
                let we = dataset.weight(e);
                let z = dataset.z(e);
                out.events += we;
                out.value += we * (linear_predictor(z, beta) - moments.log_s0 - ridge);
                for r in 0..p {
                    out.gradient[r] += we * (z[r] - moments.h[r] - xi * beta_v[r]);
                }
                if let Some(cov) = &cov {
                    out.hessian -= we * cov;
                    for r in 0..p {
                        out.hessian[(r, r)] -= we * xi;
                    }
                }
            }
        }
        group_end = i;
    }
    if !out.value.is_finite() {
        return Err(Error::Numerical("non-finite log-partial likelihood".into()));
    }
    Ok(out)
}

fn split_beta(beta_all: &[f64], p: usize, segments: usize) -> Result<Vec<&[f64]>> {
    if beta_all.len() != p * segments {
        return Err(Error::domain(format!(
            "beta has length {}, expected p(m+1) = {}",
            beta_all.len(),
            p * segments
        )));
    }
    Ok(beta_all.chunks(p.max(1)).take(segments).collect())
}

/// `l_ξ(β, k; t)` with `beta_all` the concatenated per-segment coefficients.
pub fn log_partial_likelihood(
    dataset: &SurvivalDataset,
    partition: &SegmentPartition,
    beta_all: &[f64],
    xi: f64,
) -> Result<f64> {
    let p = dataset.p();
    if p == 0 {
        let mut total = 0.0;
        for j in 0..partition.segments() {
            total += evaluate_interval(dataset, Interval::of_segment(partition, j), &[], xi, false)?.value;
        }
        return Ok(total);
    }
    let betas = split_beta(beta_all, p, partition.segments())?;
    let mut total = 0.0;
    for (j, beta) in betas.into_iter().enumerate() {
        total += evaluate_interval(dataset, Interval::of_segment(partition, j), beta, xi, false)?.value;
    }
    Ok(total)
}

/// Gradient of the objective with respect to segment `j`'s coefficients.
pub fn segment_gradient(
    dataset: &SurvivalDataset,
    partition: &SegmentPartition,
    j: usize,
    beta_j: &[f64],
    xi: f64,
) -> Result<Vector> {
    Ok(evaluate_interval(dataset, Interval::of_segment(partition, j), beta_j, xi, false)?.gradient)
}

/// Hessian of the objective with respect to segment `j`'s coefficients.
pub fn segment_hessian(
    dataset: &SurvivalDataset,
    partition: &SegmentPartition,
    j: usize,
    beta_j: &[f64],
    xi: f64,
) -> Result<Matrix> {
    Ok(evaluate_interval(dataset, Interval::of_segment(partition, j), beta_j, xi, true)?.hessian)
}

/// Maximizes the contribution of the events in `interval` by Newton's method
/// with step halving. Never decreases the objective beyond rounding.
///
/// Converges when the gradient is below `newton_tol` or the Newton decrement
/// `g'(-H)^{-1}g` reaches the rounding floor of the objective, whichever
/// comes first.
pub fn fit_interval(
    dataset: &SurvivalDataset,
    interval: Interval,
    config: &RidgeConfig,
    init: Option<&[f64]>,
) -> Result<SegmentFit> {
    let p = dataset.p();
    let xi = config.xi;
    let mut beta: Vec<f64> = match init {
        Some(b) if b.len() == p => b.to_vec(),
        Some(b) => return Err(Error::domain(format!("initial beta has length {}, expected {p}", b.len()))),
        None => vec![0.0; p],
    };
    let mut current = evaluate_interval(dataset, interval, &beta, xi, true)?;
    if current.events == 0.0 {
        return Err(Error::Infeasible(format!(
            "no events in [{}, {}): coefficients are not identified",
            interval.lo, interval.hi
        )));
    }
    let mut iterations = 0;
    let mut converged = linalg::max_abs(&current.gradient) <= config.newton_tol;
    while !converged && iterations < config.max_iter {
        iterations += 1;
        let neg_hessian = -&current.hessian;
        let direction = linalg::spd_solve(&neg_hessian, &current.gradient, "negative segment Hessian")
            .map_err(|_| singular_information(xi))?;
        if direction.iter().any(|d| !d.is_finite()) {
            break;
        }
        let floor = rounding_floor(current.value, current.events);
        let decrement = current.gradient.dot(&direction);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=config.step_halvings {
            let candidate: Vec<f64> = beta.iter().zip(direction.iter()).map(|(b, d)| b + step * d).collect();
            if let Ok(eval) = evaluate_interval(dataset, interval, &candidate, xi, true) {
                if eval.value >= current.value - floor {
                    accepted = Some((candidate, eval));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((b, eval)) => {
                let stalled = eval.value == current.value && b == beta;
                beta = b;
                current = eval;
                converged = linalg::max_abs(&current.gradient) <= config.newton_tol || decrement <= floor;
                if stalled {
                    break;
                }
            }
            None => {
                converged = decrement <= floor;
                break;
            }
        }
    }
    // a zero gradient does not identify β when the information is singular
    if converged && p > 0 {
        let zmax = (0..dataset.len())
            .flat_map(|i| dataset.z(i).iter().map(|v| v * v))
            .fold(1.0_f64, f64::max);
        if linalg::min_eigenvalue(&-&current.hessian) <= 1e-10 * current.events * zmax {
            return Err(singular_information(xi));
        }
    }
    Ok(SegmentFit { beta, log_pl: current.value, converged, iterations, events: current.events })
}

/// Absolute rounding error expected in a sum of `events` log terms of total
/// size `value`.
fn rounding_floor(value: f64, events: f64) -> f64 {
    16.0 * f64::EPSILON * (1.0 + value.abs()) * (1.0 + events).sqrt()
}

fn singular_information(xi: f64) -> Error {
    if xi == 0.0 {
        Error::Singular(
            "segment information matrix is singular (e.g. a covariate is constant within the segment); \
             use a positive ridge weight xi"
                .into(),
        )
    } else {
        Error::Singular("segment information matrix is singular".into())
    }
}

/// Fits every segment of `partition` independently. `init`, when given, is
/// the concatenated starting vector of length `p(m+1)`.
pub fn fit_segments(
    dataset: &SurvivalDataset,
    partition: &SegmentPartition,
    config: &RidgeConfig,
    init: Option<&[f64]>,
) -> Result<Vec<SegmentFit>> {
    config.validate()?;
    let p = dataset.p();
    let starts: Vec<Option<&[f64]>> = match init {
        Some(all) => split_beta(all, p, partition.segments())?.into_iter().map(Some).collect(),
        None => vec![None; partition.segments()],
    };
    (0..partition.segments())
        .map(|j| fit_interval(dataset, Interval::of_segment(partition, j), config, starts[j]))
        .collect()
}
