//! The two-sided drifted Brownian motion
//!
//! ```text
//! V_s = σ₁ W_s − τ₁ |s|   (s ≤ 0),     V_s = σ₂ W_s − τ₂ s   (s ≥ 0)
//! ```
//!
//! that governs the excess log-partial likelihood caused by estimating a
//! change-point. Closed forms are checked against path simulation, and the
//! simulation in turn checks the bias constant used by the criteria.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::normal;
use crate::quadrature;
use crate::rng;
use crate::stats::{mean_se, MeanSe};

/// Absolute tolerance of the quadratures in this module.
pub const QUAD_TOL: f64 = 1e-10;

/// Once a standardized path sits this far below its running maximum, the
/// chance of a new maximum is `e^{-2·GAP}` < 1e-12.
const STOP_GAP: f64 = 14.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftedBmSpec {
    pub tau1: f64,
    pub tau2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl DriftedBmSpec {
    pub fn new(tau1: f64, tau2: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        let spec = Self { tau1, tau2, sigma1, sigma2 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau1", self.tau1), ("tau2", self.tau2), ("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Drift and diffusion of the left (`s ≤ 0`) or right side.
    fn side(&self, right: bool) -> (f64, f64) {
        if right {
            (self.tau2, self.sigma2)
        } else {
            (self.tau1, self.sigma1)
        }
    }

    /// Time unit `σ²/τ²` of a side: the time at which drift and noise are of equal size.
    fn time_unit(&self, right: bool) -> f64 {
        let (t, s) = self.side(right);
        s * s / (t * t)
    }
}

/// `P{sup_{s>0}(W_s − a₂ s) > a₁} = exp(−2 a₁ a₂)`.
pub fn tail_prob_one_sided(a1: f64, a2: f64) -> Result<f64> {
    if !(a1 > 0.0 && a2 > 0.0) {
        return Err(Error::domain(format!("tail law needs a1, a2 > 0, got ({a1}, {a2})")));
    }
    Ok((-2.0 * a1 * a2).exp())
}

/// `E sup_s V_s = σ₁²/(2τ₁) + σ₂²/(2τ₂) − 1/(2τ₁/σ₁² + 2τ₂/σ₂²)`.
///
/// The two one-sided suprema are independent exponentials with rates
/// `2τ/σ²`; this is the mean of their maximum.
pub fn e_sup_v(spec: &DriftedBmSpec) -> Result<f64> {
    spec.validate()?;
    let r1 = 2.0 * spec.tau1 / (spec.sigma1 * spec.sigma1);
    let r2 = 2.0 * spec.tau2 / (spec.sigma2 * spec.sigma2);
    Ok(1.0 / r1 + 1.0 / r2 - 1.0 / (r1 + r2))
}

/// `g(s | a₁, a₂) = 2a₁(a₁+2a₂) e^{2a₂(a₁+a₂)s} Φ{−(a₁+2a₂)√s} − 2a₁² Φ(−a₁√s)` for `s ≥ 0`.
pub fn g_density(s: f64, a1: f64, a2: f64) -> f64 {
    if s < 0.0 {
        return 0.0;
    }
    let root = s.sqrt();
    let first = 2.0 * a1 * (a1 + 2.0 * a2) * normal::exp_times_upper_tail(2.0 * a2 * (a1 + a2) * s, (a1 + 2.0 * a2) * root);
    let second = 2.0 * a1 * a1 * normal::cdf(-a1 * root);
    (first - second).max(0.0)
}

/// Density of `argsup_s V_s`.
pub fn argsup_density(spec: &DriftedBmSpec, s: f64) -> f64 {
    let DriftedBmSpec { tau1, tau2, sigma1, sigma2 } = *spec;
    if s <= 0.0 {
        g_density(-s, tau1 / sigma1, tau2 * sigma1 / (sigma2 * sigma2))
    } else {
        g_density(s, tau2 / sigma2, tau1 * sigma2 / (sigma1 * sigma1))
    }
}

/// `∫ f(±s) argsup_density(±s) ds` over one half-line, in the side's natural time unit.
fn side_integral(spec: &DriftedBmSpec, right: bool, f: impl Fn(f64) -> f64) -> Result<f64> {
    let unit = spec.time_unit(right);
    let sign = if right { 1.0 } else { -1.0 };
    quadrature::integrate_to_infinity(
        |x| {
            let s = x * unit;
            f(s) * argsup_density(spec, sign * s) * unit
        },
        0.0,
        QUAD_TOL,
    )
}

/// Probability that the argsup falls on the right half-line.
pub fn argsup_right_mass(spec: &DriftedBmSpec) -> Result<f64> {
    spec.validate()?;
    side_integral(spec, true, |_| 1.0)
}

/// Total mass of the argsup density (1 up to quadrature error).
pub fn argsup_total_mass(spec: &DriftedBmSpec) -> Result<f64> {
    spec.validate()?;
    Ok(side_integral(spec, false, |_| 1.0)? + side_integral(spec, true, |_| 1.0)?)
}

/// `P(argsup ≤ s)`.
pub fn argsup_cdf(spec: &DriftedBmSpec, s: f64) -> Result<f64> {
    spec.validate()?;
    let left_mass = side_integral(spec, false, |_| 1.0)?;
    if s <= 0.0 {
        // mass on [s, 0]
        let inner = quadrature::integrate(|x| argsup_density(spec, x), s, 0.0, QUAD_TOL)?;
        Ok((left_mass - inner).max(0.0))
    } else {
        Ok(left_mass + quadrature::integrate(|x| argsup_density(spec, x), 0.0, s, QUAD_TOL)?)
    }
}

/// Points splitting the argsup law into ten equal-probability bins.
pub fn argsup_deciles(spec: &DriftedBmSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let span = 80.0 * spec.time_unit(false).max(spec.time_unit(true));
    (1..10)
        .map(|k| {
            let target = k as f64 / 10.0;
            let (mut lo, mut hi) = (-span, span);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if argsup_cdf(spec, mid)? < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-10 * span {
                    break;
                }
            }
            Ok(0.5 * (lo + hi))
        })
        .collect()
}

/// Expected loss `E{−V_{S'}}` at the argsup `S'` of an independent copy of `V`.
///
/// Because `W` has mean zero and is independent of `S'`, this is
/// `E{τ₁|S'|; S' < 0} + E{τ₂ S'; S' > 0}`, integrated against the argsup
/// density. It equals [`e_sup_v`] for every spec.
pub fn e_v_at_argsup_copy(spec: &DriftedBmSpec) -> Result<f64> {
    spec.validate()?;
    let left = side_integral(spec, false, |s| spec.tau1 * s)?;
    let right = side_integral(spec, true, |s| spec.tau2 * s)?;
    Ok(left + right)
}

/// Spec of the limit process for the change-point between segments `j` and
/// `j+1`: `τ = ½Δ'BΔ`, `σ = (Δ'AΔ)^{1/2}` on each side.
pub fn spec_from_matrices(a_j: &Matrix, a_j1: &Matrix, b_j: &Matrix, b_j1: &Matrix, delta: &Vector) -> Result<DriftedBmSpec> {
    let forms = [
        linalg::quad_form(b_j, delta),
        linalg::quad_form(b_j1, delta),
        linalg::quad_form(a_j, delta),
        linalg::quad_form(a_j1, delta),
    ];
    if forms.iter().any(|q| !(*q > 0.0)) {
        return Err(Error::domain(format!("quadratic forms must be positive, got {forms:?}")));
    }
    DriftedBmSpec::new(0.5 * forms[0], 0.5 * forms[1], forms[2].sqrt(), forms[3].sqrt())
}

/// Path simulation settings. `horizon` and `step` are measured in each
/// side's natural time unit `σ²/τ²`, so one config fits every spec.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BmSimConfig {
    pub horizon: f64,
    pub step: f64,
    pub paths: usize,
    pub seed: u64,
}

impl Default for BmSimConfig {
    fn default() -> Self {
        Self { horizon: 60.0, step: 0.01, paths: 100_000, seed: 20_240_601 }
    }
}

impl BmSimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.horizon > 0.0 && self.step * 10.0 <= self.horizon) {
            return Err(Error::Config(format!(
                "need 0 < 10·step <= horizon, got step {} and horizon {}",
                self.step, self.horizon
            )));
        }
        if self.paths < 2 {
            return Err(Error::Config("at least two paths are needed for a standard error".into()));
        }
        Ok(())
    }
}

/// Monte Carlo summary of `sup V`, the copy loss `−V_{S'}` and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmSimResult {
    pub paths: usize,
    pub sup: MeanSe,
    /// `−V_{S'}` with `S'` the argsup of an independent copy.
    pub v_at_copy_argsup: MeanSe,
    /// `sup V − V_{S'}` per path pair; its mean estimates `2C`.
    pub total: MeanSe,
    /// Argsup of the first path of every pair.
    pub argsup_samples: Vec<f64>,
}

/// One side of a standardized path `X_u = W_u − u`, `u ≥ 0`.
struct SidePath {
    max: f64,
    /// Index of the step holding the maximum.
    arg_step: usize,
    /// Path values at both ends of that step.
    arg_ends: (f64, f64),
    values: Vec<f64>,
}

impl SidePath {
    /// Time of the maximum, drawn from its law inside the winning step.
    fn argmax<R: Rng>(&self, rng: &mut R, delta: f64) -> f64 {
        let (x, y) = self.arg_ends;
        let u: f64 = rng.gen();
        self.arg_step as f64 * delta + bridge_argmax_offset(u, self.max - x, self.max - y, delta)
    }
}

/// Cells of the grid used to invert the law of the bridge argmax.
const ARGMAX_CELLS: usize = 128;

/// Quantile `u` of the time of the maximum of a Brownian bridge over
/// `[0, δ]`, given that the maximum lies `a` above the start and `b` above
/// the end. The time is distributed as a first passage to `a` joined to a
/// reversed first passage to `b`:
///
/// ```text
/// f(θ) ∝ θ^{-3/2} e^{-a²/2θ} (δ − θ)^{-3/2} e^{-b²/2(δ − θ)}
/// ```
///
/// Each half of `[0, δ]` is cut into cells clustered at the end; on a cell the
/// factor singular at that end is integrated exactly (through `erfc`) and the
/// other factor is frozen at the midpoint, so arbitrarily sharp peaks keep
/// their mass.
fn bridge_argmax_offset(u: f64, a: f64, b: f64, delta: f64) -> f64 {
    if !(a > 0.0) {
        return 0.0;
    }
    if !(b > 0.0) {
        return delta;
    }
    let alpha = a * a / (2.0 * delta);
    let beta = b * b / (2.0 * delta);
    // ln erfc(√(c/v)), the unnormalized CDF of v^{-3/2} e^{-c/v} on (0, v]
    let log_erfc = |c: f64, v: f64| std::f64::consts::LN_2 + normal::log_cdf(-(2.0 * c / v).sqrt());
    let log_smooth = |c: f64, w: f64| -1.5 * w.ln() - c / w;
    let half = ARGMAX_CELLS / 2;
    // v_0 = 0 < ... < v_half = 1/2, dense near 0
    let grid: Vec<f64> = (0..=half)
        .map(|i| 0.5 * (1.0 - (0.5 * std::f64::consts::PI * i as f64 / half as f64).cos()))
        .collect();
    // cells as (singular-end coefficient, other coefficient, grid index, mirrored)
    let mut cells = Vec::with_capacity(ARGMAX_CELLS);
    let mut log_mass = Vec::with_capacity(ARGMAX_CELLS);
    for mirrored in [false, true] {
        let (c, other) = if mirrored { (beta, alpha) } else { (alpha, beta) };
        for i in 0..half {
            let (lo, hi) = (grid[i], grid[i + 1]);
            let (e_lo, e_hi) = (log_erfc(c, lo), log_erfc(c, hi));
            let cell = e_hi + (-(e_lo - e_hi).exp_m1()).ln() - 0.5 * c.ln();
            cells.push((c, i, mirrored));
            log_mass.push(cell + log_smooth(other, 1.0 - 0.5 * (lo + hi)));
        }
    }
    let top = log_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mass: Vec<f64> = log_mass.iter().map(|l| (l - top).exp()).collect();
    let target = u * mass.iter().sum::<f64>();
    let mut acc = 0.0;
    let mut pick = mass.iter().rposition(|m| *m > 0.0).unwrap_or(0);
    let mut frac = 1.0;
    for (k, m) in mass.iter().enumerate() {
        if acc + m >= target && *m > 0.0 {
            pick = k;
            frac = ((target - acc) / m).clamp(0.0, 1.0);
            break;
        }
        acc += m;
    }
    // invert the erfc-shaped CDF inside the cell, measured from its singular end
    let (c, i, mirrored) = cells[pick];
    let (lo, hi) = (grid[i], grid[i + 1]);
    let (e_lo, e_hi) = (log_erfc(c, lo), log_erfc(c, hi));
    let want = (e_lo.exp() + frac * (e_hi.exp() - e_lo.exp())).ln();
    let want = if want.is_finite() { want } else { e_lo + frac * (e_hi - e_lo) };
    let (mut a_v, mut b_v) = (lo, hi);
    for _ in 0..60 {
        let mid = 0.5 * (a_v + b_v);
        if log_erfc(c, mid) < want {
            a_v = mid;
        } else {
            b_v = mid;
        }
    }
    let v = 0.5 * (a_v + b_v);
    delta * if mirrored { 1.0 - v } else { v }
}

/// Simulates a standardized side on the grid `u = i·δ`. The maximum inside
/// each step is drawn exactly from the Brownian bridge between the grid
/// values, so the supremum carries no discretization bias.
fn simulate_side<R: Rng>(rng: &mut R, delta: f64, horizon: f64, min_steps: usize, store: bool) -> SidePath {
    let root = delta.sqrt();
    let max_steps = (horizon / delta).ceil() as usize;
    let mut x = 0.0_f64;
    let mut best = 0.0_f64;
    let mut arg_step = 0;
    let mut arg_ends = (0.0, 0.0);
    let mut values = Vec::new();
    if store {
        values.push(0.0);
    }
    for i in 0..max_steps.max(min_steps) {
        let z: f64 = rng.sample(StandardNormal);
        let y = x - delta + root * z;
        let u: f64 = rng.gen();
        let gap = y - x;
        let bridge_max = 0.5 * (x + y + (gap * gap - 2.0 * delta * (1.0 - u).ln()).sqrt());
        if bridge_max > best {
            best = bridge_max;
            arg_step = i;
            arg_ends = (x, y);
        }
        x = y;
        if store {
            values.push(x);
        }
        if i + 1 >= min_steps && best - x > STOP_GAP {
            break;
        }
    }
    SidePath { max: best, arg_step, arg_ends, values }
}

struct TwoSided {
    /// `true` when the argsup is on the right.
    right: bool,
    arg_step: usize,
    /// Argsup in the winning side's natural time unit.
    arg_time: f64,
}

fn simulate_two_sided<R: Rng>(rng: &mut R, spec: &DriftedBmSpec, config: &BmSimConfig) -> TwoSided {
    let left = simulate_side(rng, config.step, config.horizon, 0, false);
    let right = simulate_side(rng, config.step, config.horizon, 0, false);
    let scale_l = spec.sigma1 * spec.sigma1 / spec.tau1;
    let scale_r = spec.sigma2 * spec.sigma2 / spec.tau2;
    let right_wins = right.max * scale_r > left.max * scale_l;
    let side = if right_wins { &right } else { &left };
    TwoSided { right: right_wins, arg_step: side.arg_step, arg_time: side.argmax(rng, config.step) }
}

fn location(spec: &DriftedBmSpec, right: bool, u: f64) -> f64 {
    if right {
        u * spec.time_unit(true)
    } else {
        -u * spec.time_unit(false)
    }
}

struct PairDraw {
    sup: f64,
    loss: f64,
    argsup: f64,
}

fn simulate_pair(spec: &DriftedBmSpec, config: &BmSimConfig, index: u64) -> PairDraw {
    let mut rng = rng::stream(config.seed, index);
    let delta = config.step;
    let copy = simulate_two_sided(&mut rng, spec, config);
    // the first path must reach the copy's argsup on the copy's side
    let need = |right: bool| if copy.right == right { copy.arg_step + 1 } else { 0 };
    let left = simulate_side(&mut rng, delta, config.horizon, need(false), !copy.right);
    let right = simulate_side(&mut rng, delta, config.horizon, need(true), copy.right);
    let scale_l = spec.sigma1 * spec.sigma1 / spec.tau1;
    let scale_r = spec.sigma2 * spec.sigma2 / spec.tau2;
    let right_wins = right.max * scale_r > left.max * scale_l;
    let (sup, argsup) = if right_wins {
        (right.max * scale_r, location(spec, true, right.argmax(&mut rng, delta)))
    } else {
        (left.max * scale_l, location(spec, false, left.argmax(&mut rng, delta)))
    };
    // value of the first path at the copy's argsup, by bridge interpolation inside its step
    let (side, scale) = if copy.right { (&right, scale_r) } else { (&left, scale_l) };
    let (a, b) = (side.values[copy.arg_step], side.values[copy.arg_step + 1]);
    let frac = (copy.arg_time / delta - copy.arg_step as f64).clamp(0.0, 1.0);
    let z: f64 = rng.sample(StandardNormal);
    let value = a + frac * (b - a) + (frac * (1.0 - frac) * delta).sqrt() * z;
    PairDraw { sup, loss: -value * scale, argsup }
}

/// Simulates `config.paths` independent pairs of two-sided paths.
///
/// Pair `i` draws from its own random stream, so the output does not depend
/// on thread scheduling.
pub fn simulate_sup_and_argsup(spec: &DriftedBmSpec, config: &BmSimConfig) -> Result<BmSimResult> {
    spec.validate()?;
    config.validate()?;
    let draws: Vec<PairDraw> = (0..config.paths as u64)
        .into_par_iter()
        .map(|i| simulate_pair(spec, config, i))
        .collect();
    let sups: Vec<f64> = draws.iter().map(|d| d.sup).collect();
    let losses: Vec<f64> = draws.iter().map(|d| d.loss).collect();
    let totals: Vec<f64> = draws.iter().map(|d| d.sup + d.loss).collect();
    Ok(BmSimResult {
        paths: config.paths,
        sup: mean_se(&sups),
        v_at_copy_argsup: mean_se(&losses),
        total: mean_se(&totals),
        argsup_samples: draws.iter().map(|d| d.argsup).collect(),
    })
}

/// Simulated suprema of the one-sided process `σW_s − τs`, `s ≥ 0`.
pub fn simulate_one_sided_sup(tau: f64, sigma: f64, config: &BmSimConfig) -> Result<Vec<f64>> {
    DriftedBmSpec::new(tau, tau, sigma, sigma)?;
    config.validate()?;
    let scale = sigma * sigma / tau;
    Ok((0..config.paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(config.seed, i);
            simulate_side(&mut rng, config.step, config.horizon, 0, false).max * scale
        })
        .collect())
}

/// Observed share of `samples` in each of the ten bins cut at `deciles`,
/// with the binomial standard error of a 10% cell.
pub fn decile_shares(samples: &[f64], deciles: &[f64]) -> (Vec<f64>, f64) {
    let mut counts = vec![0usize; deciles.len() + 1];
    for &s in samples {
        counts[deciles.partition_point(|&d| d < s)] += 1;
    }
    let n = samples.len() as f64;
    let expected = 1.0 / counts.len() as f64;
    let se = (expected * (1.0 - expected) / n).sqrt();
    (counts.into_iter().map(|c| c as f64 / n).collect(), se)
}
