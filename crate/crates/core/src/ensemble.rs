//! Quasi-static noise ensembles and the ensemble-averaged memory fidelity.
//!
//! Every realization `(δ, ε)` evolves under its own noisy Hamiltonian. The
//! fidelity compares the averaged states against the noiseless trajectory of
//! the same scheme, so the drive's own rotation does not count as decay. For
//! a qubit this reduces to `F_n = (2 + |Tr(U₀†U_n)|²)/6` per realization.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::control::{noisy_field, ControlScheme, NoiseModel, NoiseRealization};
use crate::error::{Error, Result};
use crate::floquet::t2_app;
use crate::propagation::{su2_period_table, DEFAULT_PHASES, MAGNUS_STEP_NORM};
use crate::su2::Su2;

/// Fidelity level `(2 + 1/e)/3` that defines T2.
pub fn t2_threshold() -> f64 {
    (2.0 + (-1.0f64).exp()) / 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SobolConfig {
    pub n_points: usize,
    pub seed: u64,
}

impl SobolConfig {
    pub const DEFAULT_POINTS: usize = 2048;

    pub fn from_noise(noise: &NoiseModel) -> Self {
        SobolConfig { n_points: noise.n_realizations, seed: noise.seed }
    }
}

/// Owen-scrambled 2D Sobol points mapped to Gaussian `(δ, ε)` pairs.
pub fn sobol_gaussian_pairs(cfg: SobolConfig, noise: &NoiseModel) -> Result<Vec<NoiseRealization>> {
    if cfg.n_points == 0 {
        return Err(Error::invalid("n_points", "must be >= 1"));
    }
    let n = u32::try_from(cfg.n_points).map_err(|_| Error::invalid("n_points", "too large"))?;
    let seed = (cfg.seed ^ (cfg.seed >> 32)) as u32;
    let unit = Normal::new(0.0, 1.0).expect("standard normal");
    // samples are multiples of 2⁻²⁴ in [0, 1); shift to cell centers so the
    // inverse CDF never sees 0
    let half_cell = 2f64.powi(-25);
    Ok((0..n)
        .map(|i| {
            let u = sobol_burley::sample(i, 0, seed) as f64 + half_cell;
            let v = sobol_burley::sample(i, 1, seed) as f64 + half_cell;
            NoiseRealization::new(
                noise.sigma_delta * unit.inverse_cdf(u),
                noise.sigma_eps * unit.inverse_cdf(v),
            )
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum T2Estimate {
    Crossed { t2: f64 },
    BeyondHorizon { horizon: f64 },
}

impl T2Estimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            T2Estimate::Crossed { t2 } => Some(*t2),
            T2Estimate::BeyondHorizon { .. } => None,
        }
    }

    /// The crossing time, or the horizon as a lower bound.
    pub fn lower_bound(&self) -> f64 {
        match self {
            T2Estimate::Crossed { t2 } => *t2,
            T2Estimate::BeyondHorizon { horizon } => *horizon,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceCurve {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub envelope: Vec<f64>,
    pub window: f64,
    pub t2: T2Estimate,
    /// The envelope rose back above the threshold after its first crossing.
    pub multi_crossing: bool,
}

impl CoherenceCurve {
    /// Builds a curve from sampled fidelities with an upper envelope over
    /// windows of width `window`.
    pub fn from_samples(times: Vec<f64>, fidelity: Vec<f64>, window: f64) -> Result<Self> {
        if times.len() != fidelity.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: fidelity.len() });
        }
        if times.is_empty() {
            return Err(Error::invalid("times", "must not be empty"));
        }
        let envelope = upper_envelope(&times, &fidelity, window);
        let (t2, multi_crossing) = first_crossing(&times, &envelope, t2_threshold());
        Ok(CoherenceCurve { times, fidelity, envelope, window, t2, multi_crossing })
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty curve")
    }
}

/// Upper envelope: the maximum of each consecutive window of width `w` is a
/// node and nodes are joined linearly. The chord is capped by the maximum
/// over the next window, so a decay faster than one window is followed
/// rather than bridged, and lifted to the data wherever a sample pokes
/// above it.
pub fn upper_envelope(times: &[f64], values: &[f64], window: f64) -> Vec<f64> {
    let n = times.len();
    if n == 0 {
        return Vec::new();
    }
    let mut nodes: Vec<usize> = Vec::new();
    let mut start = 0;
    while start < n {
        let edge = times[start] + window.max(0.0);
        let mut end = start + 1;
        while end < n && times[end] < edge {
            end += 1;
        }
        let best = (start..end).max_by(|&a, &b| values[a].total_cmp(&values[b])).expect("non-empty window");
        nodes.push(best);
        start = end;
    }
    let ahead = forward_max(times, values, window);
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let t = times[i];
        while seg + 1 < nodes.len() && times[nodes[seg + 1]] <= t {
            seg += 1;
        }
        let a = nodes[seg];
        let chord = if t <= times[a] || seg + 1 == nodes.len() {
            values[a]
        } else {
            let b = nodes[seg + 1];
            values[a] + (values[b] - values[a]) * (t - times[a]) / (times[b] - times[a])
        };
        out.push(chord.min(ahead[i]).max(values[i]));
    }
    out
}

/// Maximum over `[t, t + w]` for every sample time.
fn forward_max(times: &[f64], values: &[f64], window: f64) -> Vec<f64> {
    let n = times.len();
    let mut out = vec![0.0; n];
    // indices with decreasing values, scanning backwards
    let mut deque = std::collections::VecDeque::new();
    for i in (0..n).rev() {
        while deque.back().is_some_and(|&j: &usize| values[j] <= values[i]) {
            deque.pop_back();
        }
        deque.push_back(i);
        while deque.front().is_some_and(|&j: &usize| times[j] > times[i] + window) {
            deque.pop_front();
        }
        out[i] = values[*deque.front().expect("contains i")];
    }
    out
}

fn first_crossing(times: &[f64], env: &[f64], level: f64) -> (T2Estimate, bool) {
    let Some(i) = env.iter().position(|&v| v < level) else {
        return (T2Estimate::BeyondHorizon { horizon: *times.last().unwrap_or(&0.0) }, false);
    };
    let multi = env[i..].iter().any(|&v| v >= level);
    if i == 0 {
        return (T2Estimate::Crossed { t2: times[0] }, multi);
    }
    let (t0, t1, f0, f1) = (times[i - 1], times[i], env[i - 1], env[i]);
    let t2 = t0 + (level - f0) * (t1 - t0) / (f1 - f0);
    (T2Estimate::Crossed { t2 }, multi)
}

/// First time the curve's envelope falls below `(2 + 1/e)/3`.
pub fn extract_t2(curve: &CoherenceCurve) -> T2Estimate {
    first_crossing(&curve.times, &curve.envelope, t2_threshold()).0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceOptions {
    pub phases_per_period: usize,
    /// Cap on sampled periods; longer horizons are strided.
    pub max_periods: usize,
    pub magnus_step_norm: f64,
    /// Fixed horizon; `None` sizes it from the closed-form estimate.
    pub horizon: Option<f64>,
    pub max_doublings: usize,
}

impl Default for CoherenceOptions {
    fn default() -> Self {
        CoherenceOptions {
            phases_per_period: DEFAULT_PHASES,
            max_periods: 4096,
            magnus_step_norm: MAGNUS_STEP_NORM,
            horizon: None,
            max_doublings: 6,
        }
    }
}

/// Period used for sampling: the drive period, or `2π/Ω1` for static drives.
pub fn sampling_period(scheme: &ControlScheme) -> f64 {
    if scheme.is_static() {
        2.0 * PI / scheme.omega1
    } else {
        scheme.period()
    }
}

/// Envelope window: one slow period `2π/Ω2`, or `2π/|Ω̃1 − Ω1|` if longer,
/// never shorter than one sampling period.
pub fn envelope_window(scheme: &ControlScheme) -> f64 {
    let period = sampling_period(scheme);
    if scheme.is_static() {
        return period;
    }
    let slow = |w: f64| if w > 0.0 { 2.0 * PI / w } else { 0.0 };
    slow(scheme.omega2).max(slow((scheme.mod_freq - scheme.omega1).abs())).max(period)
}

/// Stroboscopic grid `kT + sT/P` up to `horizon`, striding over periods when
/// there are more than `max_periods` of them.
pub fn stroboscopic_grid(period: f64, horizon: f64, phases: usize, max_periods: usize) -> Vec<f64> {
    let n_periods = (horizon / period).ceil().max(1.0) as usize;
    let stride = n_periods.div_ceil(max_periods.max(1)).max(1);
    let mut out = Vec::with_capacity((n_periods / stride + 1) * phases);
    let mut k = 0;
    while k <= n_periods {
        for s in 0..phases {
            let t = k as f64 * period + s as f64 * period / phases as f64;
            if t > horizon + 1e-12 * period {
                break;
            }
            out.push(t);
        }
        k += stride;
    }
    out
}

/// Per-realization evolution on a fixed phase grid.
struct Evolution {
    table: Vec<Su2>,
    /// Monodromy half-angle and axis.
    theta: f64,
    axis: [f64; 3],
}

impl Evolution {
    fn new(scheme: &ControlScheme, noise: NoiseRealization, opts: &CoherenceOptions) -> Evolution {
        let period = sampling_period(scheme);
        let phases = opts.phases_per_period;
        let table = if scheme.is_static() {
            let f = noisy_field(scheme, noise, 0.0);
            let g = [0.5 * f[0], 0.5 * f[1], 0.5 * f[2]];
            (0..=phases).map(|s| Su2::exp_field(g, period * s as f64 / phases as f64)).collect()
        } else {
            let fmax = (0..64)
                .map(|k| {
                    let f = noisy_field(scheme, noise, period * k as f64 / 64.0);
                    (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt()
                })
                .fold(0.0, f64::max);
            let per_period = (0.5 * fmax * period / opts.magnus_step_norm).ceil() as usize;
            let per_phase = per_period.div_ceil(phases).max(2);
            su2_period_table(|t| noisy_field(scheme, noise, t), period, phases, per_phase)
        };
        let (theta, axis) = table[phases].angle_axis();
        Evolution { table, theta, axis }
    }

    fn monodromy_power(&self, k: u64) -> Su2 {
        let (s, c) = (k as f64 * self.theta).sin_cos();
        Su2([c, s * self.axis[0], s * self.axis[1], s * self.axis[2]])
    }
}

/// Grid position of each time: (period index, phase slot).
fn grid_positions(times: &[f64], period: f64, phases: usize) -> Result<Vec<(u64, usize)>> {
    times
        .iter()
        .map(|&t| {
            if !(t >= 0.0) {
                return Err(Error::invalid("times", "must be >= 0"));
            }
            let x = t / period * phases as f64;
            let r = x.round();
            if (x - r).abs() > 1e-6 {
                return Err(Error::invalid("times", "must lie on the T/P stroboscopic grid"));
            }
            let r = r as u64;
            Ok((r / phases as u64, (r % phases as u64) as usize))
        })
        .collect()
}

/// Ensemble-averaged memory fidelity for explicit realizations, on times
/// from [`stroboscopic_grid`]. The average is accumulated in realization
/// order regardless of scheduling.
pub fn fidelity_for_realizations(
    scheme: &ControlScheme,
    realizations: &[NoiseRealization],
    times: &[f64],
    opts: &CoherenceOptions,
) -> Result<Vec<f64>> {
    if realizations.is_empty() {
        return Err(Error::invalid("realizations", "must not be empty"));
    }
    let period = sampling_period(scheme);
    let positions = grid_positions(times, period, opts.phases_per_period)?;
    let reference = Evolution::new(scheme, NoiseRealization::NONE, opts);
    let q0: Vec<Su2> = positions
        .iter()
        .map(|&(k, s)| reference.table[s] * reference.monodromy_power(k))
        .collect();

    const CHUNK: usize = 32;
    let partials: Vec<Result<Vec<f64>>> = realizations
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut acc = vec![0.0; times.len()];
            for (j, noise) in chunk.iter().enumerate() {
                let evo = Evolution::new(scheme, *noise, opts);
                let mut last_k = u64::MAX;
                let mut mk = Su2::IDENTITY;
                for (i, &(k, s)) in positions.iter().enumerate() {
                    if k != last_k {
                        mk = evo.monodromy_power(k);
                        last_k = k;
                    }
                    let q = evo.table[s] * mk;
                    let overlap = q.dot(q0[i]);
                    if !overlap.is_finite() {
                        return Err(Error::Realization {
                            index: c * CHUNK + j,
                            source: Box::new(Error::NonFinite("fidelity overlap")),
                        });
                    }
                    acc[i] += (1.0 + 2.0 * overlap * overlap) / 3.0;
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![0.0; times.len()];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p?) {
            *t += v;
        }
    }
    let inv = 1.0 / realizations.len() as f64;
    Ok(total.into_iter().map(|v| v * inv).collect())
}

/// Memory fidelity of `scheme` under `noise` on stroboscopic `times`.
pub fn memory_fidelity(
    scheme: &ControlScheme,
    noise: &NoiseModel,
    times: &[f64],
    opts: &CoherenceOptions,
) -> Result<CoherenceCurve> {
    noise.validate()?;
    let realizations = sobol_gaussian_pairs(SobolConfig::from_noise(noise), noise)?;
    let fidelity = fidelity_for_realizations(scheme, &realizations, times, opts)?;
    CoherenceCurve::from_samples(times.to_vec(), fidelity, envelope_window(scheme))
}

/// Initial horizon: five times the closed-form estimate, with a floor of
/// 20 T2*.
pub fn auto_horizon(scheme: &ControlScheme, noise: &NoiseModel) -> f64 {
    let t2_star = noise.t2_star();
    let estimate = if noise.sigma_eps > 0.0 && t2_star.is_finite() {
        t2_app(scheme.omega1, scheme.omega2, noise.sigma_eps, t2_star).unwrap_or(0.0)
    } else {
        0.0
    };
    let floor = if t2_star.is_finite() { 20.0 * t2_star } else { 100.0 * sampling_period(scheme) };
    (5.0 * estimate).max(floor)
}

/// Coherence curve on an automatically sized stroboscopic grid. The horizon
/// doubles until the envelope crosses the threshold or the doubling budget
/// runs out.
pub fn coherence_curve(
    scheme: &ControlScheme,
    noise: &NoiseModel,
    opts: &CoherenceOptions,
) -> Result<CoherenceCurve> {
    let period = sampling_period(scheme);
    let mut horizon = opts.horizon.unwrap_or_else(|| auto_horizon(scheme, noise));
    let doublings = if opts.horizon.is_some() { 0 } else { opts.max_doublings };
    let mut attempt = 0;
    loop {
        let times = stroboscopic_grid(period, horizon, opts.phases_per_period, opts.max_periods);
        let curve = memory_fidelity(scheme, noise, &times, opts)?;
        if curve.t2.value().is_some() || attempt >= doublings {
            return Ok(curve);
        }
        horizon *= 2.0;
        attempt += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub params: Vec<f64>,
    pub scheme: ControlScheme,
    pub t2: T2Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    /// Index of the row with the largest T2 (horizon lower bounds included).
    pub best: usize,
}

impl ScanResult {
    pub fn best_row(&self) -> &ScanRow {
        &self.rows[self.best]
    }
}

/// T2 over a parameter grid, one coherence run per point.
pub fn t2_scan<G>(family: G, noise: &NoiseModel, grid: &[Vec<f64>], opts: &CoherenceOptions) -> Result<ScanResult>
where
    G: Fn(&[f64]) -> Result<ControlScheme>,
{
    if grid.is_empty() {
        return Err(Error::invalid("grid", "must not be empty"));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for (index, params) in grid.iter().enumerate() {
        let wrap = |e| Error::ScanPoint { index, source: Box::new(e) };
        let scheme = family(params).map_err(wrap)?;
        let curve = coherence_curve(&scheme, noise, opts).map_err(wrap)?;
        rows.push(ScanRow { params: params.clone(), scheme, t2: curve.t2 });
    }
    let best = rows
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.t2.lower_bound().total_cmp(&b.1.t2.lower_bound()))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    Ok(ScanResult { rows, best })
}
