//! Scenario drivers for AC-field sensing at the dressed-state resonance and
//! for the magic-angle clock comparison.
//!
//! The signal enters the first rotating frame as `(g/2)cos(ω_s t)σz`, so the
//! bare Hartmann–Hahn coupling is `α = ½`.

use std::f64::consts::{PI, SQRT_2};

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::control::{omega_vector, ControlScheme, NoiseModel, SchemeVariant};
use crate::ensemble::{coherence_curve, CoherenceOptions, T2Estimate};
use crate::error::{Error, Result};
use crate::floquet::t2_app;
use crate::linalg::C64;
use crate::optimize::golden_section_min;
use crate::propagation::{magnus_su2_segment, su2_period_table};
use crate::su2::Su2;

/// Magnus step size as a fraction of the local field norm.
const SENSING_STEP_NORM: f64 = 0.01;
/// Smallest coupling the probe duration is sized for.
const ALPHA_MIN: f64 = 0.05;
/// Fits with a smaller population swing are rejected.
const MIN_CONTRAST: f64 = 0.2;

/// Closed-form matching `ω_s = Ω̃1 + m√((Ω̃1 − Ω1)² + Ω2²)`.
pub fn matching_condition(scheme: &ControlScheme, m: i32) -> Result<f64> {
    if !(-1..=1).contains(&m) {
        return Err(Error::invalid("m", "must be -1, 0 or 1"));
    }
    if scheme.is_static() {
        return Ok(scheme.omega1);
    }
    Ok(scheme.mod_freq + m as f64 * scheme.second_frame_splitting())
}

fn steps_per_period(scheme: &ControlScheme, period: f64, extra: f64) -> usize {
    let fmax = scheme.omega1.hypot(2.0 * scheme.omega2) + extra;
    ((0.5 * fmax * period / SENSING_STEP_NORM).ceil() as usize).max(16)
}

/// Floquet axis and dressed splitting of the noiseless drive.
///
/// The splitting is the second-frame quasi-energy gap, folded to the value
/// closest to `|z|`. Static drives report the field axis and zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedStructure {
    pub axis: [f64; 3],
    pub splitting: f64,
    pub period: f64,
}

pub fn dressed_structure(scheme: &ControlScheme) -> Result<DressedStructure> {
    scheme.validate()?;
    if scheme.is_static() {
        let f = omega_vector(scheme, 0.0);
        let n = (f[0] * f[0] + f[1] * f[1] + f[2] * f[2]).sqrt();
        return Ok(DressedStructure {
            axis: [f[0] / n, f[1] / n, f[2] / n],
            splitting: 0.0,
            period: 2.0 * PI / scheme.omega1,
        });
    }
    let period = scheme.period();
    let steps = steps_per_period(scheme, period, 0.0);
    let m = su2_period_table(|t| omega_vector(scheme, t), period, 1, steps)[1];
    let (theta, axis) = m.angle_axis();
    let base = 2.0 * theta / period;
    let zone = scheme.mod_freq;
    let target = scheme.second_frame_splitting();
    let splitting = [base, -base]
        .into_iter()
        .map(|e| e + ((target - e) / zone).round() * zone)
        .filter(|e| *e > 0.0)
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .unwrap_or(base);
    Ok(DressedStructure { axis, splitting, period })
}

/// Signal frequency at the exact `m`-th dressed resonance,
/// `Ω̃1 + m·ε` with `ε` the Floquet splitting.
pub fn resonant_signal_frequency(scheme: &ControlScheme, m: i32) -> Result<f64> {
    matching_condition(scheme, m)?;
    if scheme.is_static() {
        return Ok(scheme.omega1);
    }
    Ok(scheme.mod_freq + m as f64 * dressed_structure(scheme)?.splitting)
}

/// Eigenvector of `n̂·σ` with eigenvalue +1.
fn spin_up_along(n: [f64; 3]) -> [C64; 2] {
    let v = if n[2] > -0.5 {
        [C64::new(1.0 + n[2], 0.0), C64::new(n[0], n[1])]
    } else {
        [C64::new(n[0], -n[1]), C64::new(1.0 - n[2], 0.0)]
    };
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / norm, v[1] / norm]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub omega: f64,
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub rms_residual: f64,
}

/// Linear least squares for `A + B cos ωt + C sin ωt`; returns
/// `([A, B, C], rms)`.
fn linear_fit(dt: f64, y: &[f64], omega: f64) -> ([f64; 3], f64) {
    let mut ata = [[0.0; 3]; 3];
    let mut aty = [0.0; 3];
    for (k, &v) in y.iter().enumerate() {
        let (s, c) = (omega * dt * k as f64).sin_cos();
        let row = [1.0, c, s];
        for i in 0..3 {
            aty[i] += row[i] * v;
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let coef = solve3(ata, aty).unwrap_or([0.0; 3]);
    let sse: f64 = y
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let (s, c) = (omega * dt * k as f64).sin_cos();
            (v - coef[0] - coef[1] * c - coef[2] * s).powi(2)
        })
        .sum();
    (coef, (sse / y.len() as f64).sqrt())
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][col] = b[r];
        }
        *o = det(m) / d;
    }
    Some(out)
}

/// Fits `A + B cos(ωt + φ)` to uniform samples: zero-padded FFT peak, then a
/// golden-section refinement of the least-squares residual around it.
pub fn fit_sinusoid(dt: f64, y: &[f64]) -> Result<SinusoidFit> {
    if y.len() < 8 {
        return Err(Error::FitFailure(format!("need at least 8 samples, got {}", y.len())));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be > 0"));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let n_pad = y.len().next_power_of_two() * 8;
    let mut buf: Vec<Complex<f64>> = (0..n_pad)
        .map(|k| Complex::new(if k < y.len() { y[k] - mean } else { 0.0 }, 0.0))
        .collect();
    FftPlanner::<f64>::new().plan_fft_forward(n_pad).process(&mut buf);
    let peak = (1..n_pad / 2)
        .max_by(|&a, &b| buf[a].norm_sqr().total_cmp(&buf[b].norm_sqr()))
        .expect("padded length >= 16");
    let bin = 2.0 * PI / (n_pad as f64 * dt);
    let center = peak as f64 * bin;
    let (lo, hi) = ((center - 8.0 * bin).max(0.5 * bin), center + 8.0 * bin);
    let (omega, _) = golden_section_min(|w| linear_fit(dt, y, w).1, lo, hi, 1e-10)?;
    let (coef, rms) = linear_fit(dt, y, omega);
    Ok(SinusoidFit {
        omega,
        offset: coef[0],
        amplitude: coef[1].hypot(coef[2]),
        phase: (-coef[2]).atan2(coef[1]),
        rms_residual: rms,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub alpha: f64,
    pub omega_s: f64,
    pub g_probe: f64,
    pub induced: f64,
    pub contrast: f64,
}

/// Default probe strength: `10⁻³Ω2`, or `10⁻³Ω1` for a static drive.
pub fn default_probe(scheme: &ControlScheme) -> f64 {
    if scheme.is_static() {
        1e-3 * scheme.omega1
    } else {
        1e-3 * scheme.omega2
    }
}

/// Effective coupling at the `m`-th dressed resonance.
///
/// The qubit starts in one Floquet state of the noiseless drive; with the
/// probe signal at the exact resonance its population slowly transfers to
/// the other. The transfer frequency, sampled once per drive period and
/// fitted as a sinusoid, is `α·g`.
pub fn effective_coupling_alpha(scheme: &ControlScheme, m: i32, g_probe: f64) -> Result<AlphaEstimate> {
    if !(g_probe > 0.0) || !g_probe.is_finite() {
        return Err(Error::invalid("g_probe", "must be finite and > 0"));
    }
    let structure = dressed_structure(scheme)?;
    let omega_s = resonant_signal_frequency(scheme, m)?;
    let period = structure.period;
    let up = spin_up_along(structure.axis);
    let down = spin_up_along(structure.axis.map(|x| -x));

    let t_end = 2.0 * PI / (ALPHA_MIN * g_probe);
    let n_periods = (t_end / period).ceil() as usize;
    let steps = steps_per_period(scheme, period, g_probe);
    let field = |t: f64| {
        let mut f = omega_vector(scheme, t);
        f[2] += g_probe * (omega_s * t).cos();
        f
    };
    let mut u = Su2::IDENTITY;
    let mut pops = Vec::with_capacity(n_periods + 1);
    let population = |u: Su2| {
        let psi = u.to_operator().apply(&up);
        (down[0].conj() * psi[0] + down[1].conj() * psi[1]).norm_sqr()
    };
    pops.push(population(u));
    for k in 0..n_periods {
        let seg = magnus_su2_segment(field, k as f64 * period, (k + 1) as f64 * period, steps);
        u = (seg * u).normalized();
        pops.push(population(u));
    }
    let fit = fit_sinusoid(period, &pops)?;
    let contrast = 2.0 * fit.amplitude;
    if contrast < MIN_CONTRAST {
        return Err(Error::FitFailure(format!(
            "insufficient contrast {contrast:.3e} at omega_s = {omega_s:e}; the probe is off resonance"
        )));
    }
    Ok(AlphaEstimate { alpha: fit.omega / g_probe, omega_s, g_probe, induced: fit.omega, contrast })
}

/// Sensitivity `η = r/(γC) · 1/(α√T2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensitivityParams {
    pub r: f64,
    pub gamma: f64,
    pub c: f64,
    pub alpha: f64,
    pub t2: f64,
}

impl SensitivityParams {
    pub fn new(alpha: f64, t2: f64) -> Result<Self> {
        Self::with_readout((8.0 * std::f64::consts::E).sqrt(), 1.0, 1.0, alpha, t2)
    }

    pub fn with_readout(r: f64, gamma: f64, c: f64, alpha: f64, t2: f64) -> Result<Self> {
        let p = SensitivityParams { r, gamma, c, alpha, t2 };
        if ![r, gamma, c, alpha, t2].iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::invalid("sensitivity", "all parameters must be finite and > 0"));
        }
        Ok(p)
    }

    pub fn sensitivity(&self) -> f64 {
        self.r / (self.gamma * self.c) / (self.alpha * self.t2.sqrt())
    }

    /// `η_ref/η`. Readout constants are shared, so only `α√T2` enters.
    pub fn gain_over(&self, reference: &SensitivityParams) -> f64 {
        (self.alpha * self.t2.sqrt()) / (reference.alpha * reference.t2.sqrt())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainKind {
    Exact,
    /// The candidate's T2 exceeded its horizon.
    LowerBound,
    /// The reference's T2 exceeded its horizon.
    UpperBound,
    /// Neither T2 was resolved.
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gain {
    pub value: f64,
    pub kind: GainKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingPoint {
    pub scheme: ControlScheme,
    pub alpha: AlphaEstimate,
    pub t2: T2Estimate,
}

impl SensingPoint {
    pub fn params(&self) -> Result<SensitivityParams> {
        SensitivityParams::new(self.alpha.alpha, self.t2.lower_bound())
    }
}

/// Coupling at `m = 1` and ensemble T2 of one sensing configuration.
pub fn sensing_point(scheme: &ControlScheme, noise: &NoiseModel, opts: &CoherenceOptions) -> Result<SensingPoint> {
    let alpha = effective_coupling_alpha(scheme, 1, default_probe(scheme))?;
    let t2 = coherence_curve(scheme, noise, opts)?.t2;
    Ok(SensingPoint { scheme: *scheme, alpha, t2 })
}

pub fn sensitivity_gain(candidate: &SensingPoint, reference: &SensingPoint) -> Result<Gain> {
    let value = candidate.params()?.gain_over(&reference.params()?);
    let kind = match (candidate.t2.value(), reference.t2.value()) {
        (Some(_), Some(_)) => GainKind::Exact,
        (None, Some(_)) => GainKind::LowerBound,
        (Some(_), None) => GainKind::UpperBound,
        (None, None) => GainKind::Indeterminate,
    };
    Ok(Gain { value, kind })
}

/// Scheme of `variant` at its optimal detuning whose `m = 1` resonance sits
/// at `omega_s`; `Ω2` is found by bisection on the Floquet resonance.
pub fn matched_scheme(variant: SchemeVariant, omega1: f64, omega_s: f64) -> Result<ControlScheme> {
    let build = |omega2: f64| match variant {
        SchemeVariant::CircularDressed => ControlScheme::circular(omega1, omega2),
        SchemeVariant::DoubleDrive => ControlScheme::double_drive(omega1, omega2, 1.0),
        SchemeVariant::SingleDrive => ControlScheme::single_drive(omega1),
        SchemeVariant::PhaseModulated => Err(Error::UnsupportedVariant { operation: "matched_scheme", variant }),
    };
    if variant == SchemeVariant::SingleDrive {
        return build(0.0);
    }
    if !(omega_s > omega1) {
        return Err(Error::invalid("omega_s", "must exceed omega1 for the m = 1 resonance"));
    }
    let excess = |omega2: f64| -> Result<f64> { Ok(resonant_signal_frequency(&build(omega2)?, 1)? - omega_s) };
    let (mut lo, mut hi) = (0.0, omega_s - omega1);
    while excess(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 * omega_s {
            return Err(Error::invalid("omega_s", "no matching amplitude found"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    build(0.5 * (lo + hi))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingRow {
    pub omega1: f64,
    pub circular: SensingPoint,
    pub double_drive: SensingPoint,
    pub gain_circular: Gain,
    pub gain_double_drive: Gain,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingScan {
    pub omega_s: f64,
    pub reference: SensingPoint,
    pub rows: Vec<SensingRow>,
}

impl SensingScan {
    fn best_by(&self, key: impl Fn(&SensingRow) -> f64) -> &SensingRow {
        self.rows.iter().max_by(|a, b| key(a).total_cmp(&key(b))).expect("non-empty scan")
    }

    pub fn best_circular(&self) -> &SensingRow {
        self.best_by(|r| r.gain_circular.value)
    }

    pub fn best_double_drive(&self) -> &SensingRow {
        self.best_by(|r| r.gain_double_drive.value)
    }
}

/// Gains of the circular drive and the detuned double drive over the
/// Hartmann–Hahn single drive at `Ω1 = ω_s`, for each `Ω1` in the grid.
pub fn sensing_scan(
    omega_s: f64,
    omega1_grid: &[f64],
    noise: &NoiseModel,
    opts: &CoherenceOptions,
) -> Result<SensingScan> {
    if omega1_grid.is_empty() {
        return Err(Error::invalid("omega1_grid", "must not be empty"));
    }
    let reference = sensing_point(&ControlScheme::single_drive(omega_s)?, noise, opts)?;
    let mut rows = Vec::with_capacity(omega1_grid.len());
    for (index, &omega1) in omega1_grid.iter().enumerate() {
        let wrap = |e| Error::ScanPoint { index, source: Box::new(e) };
        let point = |variant| -> Result<SensingPoint> {
            sensing_point(&matched_scheme(variant, omega1, omega_s)?, noise, opts)
        };
        let circular = point(SchemeVariant::CircularDressed).map_err(wrap)?;
        let double_drive = point(SchemeVariant::DoubleDrive).map_err(wrap)?;
        rows.push(SensingRow {
            omega1,
            gain_circular: sensitivity_gain(&circular, &reference).map_err(wrap)?,
            gain_double_drive: sensitivity_gain(&double_drive, &reference).map_err(wrap)?,
            circular,
            double_drive,
        });
    }
    Ok(SensingScan { omega_s, reference, rows })
}

/// Magic-angle clock drive: `(Ω̃1 − Ω1)/Ω2 = magic_ratio`, `Ω2 = amplitude_ratio·Ω1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockConstraint {
    pub variant: SchemeVariant,
    pub magic_ratio: f64,
    pub amplitude_ratio: f64,
}

impl ClockConstraint {
    pub const MAGIC_RATIO: f64 = std::f64::consts::FRAC_1_SQRT_2;

    /// Double drive at the experimental amplitude ratio 0.03.
    pub fn double_drive_experimental() -> Self {
        ClockConstraint { variant: SchemeVariant::DoubleDrive, magic_ratio: Self::MAGIC_RATIO, amplitude_ratio: 0.03 }
    }

    /// Double drive meeting both the magic angle and the `(c + ¼)` detuning
    /// with `c = 1`: `Ω2/Ω1 = √8/5`.
    pub fn double_drive_joint() -> Self {
        ClockConstraint {
            variant: SchemeVariant::DoubleDrive,
            magic_ratio: Self::MAGIC_RATIO,
            amplitude_ratio: 8f64.sqrt() / 5.0,
        }
    }

    /// Circular drive meeting both the magic angle and the `½Ω2²/Ω1`
    /// detuning: `Ω2 = √2Ω1`, `Ω̃1 = 2Ω1`.
    pub fn circular_joint() -> Self {
        ClockConstraint {
            variant: SchemeVariant::CircularDressed,
            magic_ratio: Self::MAGIC_RATIO,
            amplitude_ratio: SQRT_2,
        }
    }

    pub fn scheme(&self, omega1: f64) -> Result<ControlScheme> {
        let omega2 = self.amplitude_ratio * omega1;
        let mod_freq = omega1 + self.magic_ratio * omega2;
        ControlScheme::new(self.variant, omega1, omega2, mod_freq)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockRow {
    pub omega1: f64,
    pub t2_double_drive: T2Estimate,
    pub t2_circular: T2Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClockComparison {
    pub t2_star: f64,
    pub sigma_eps: f64,
    pub rows: Vec<ClockRow>,
    pub best_double_drive: usize,
    pub best_circular: usize,
    /// Best circular T2 over best double-drive T2.
    pub ratio: f64,
}

impl ClockComparison {
    /// Rows as `(Ω1·T2*, T2_dd/T2*, T2_circ/T2*)` when `scaled`, raw otherwise.
    /// Unresolved T2 values report their horizon.
    pub fn table(&self, scaled: bool) -> Vec<[f64; 3]> {
        let s = if scaled { self.t2_star } else { 1.0 };
        self.rows
            .iter()
            .map(|r| [r.omega1 * s, r.t2_double_drive.lower_bound() / s, r.t2_circular.lower_bound() / s])
            .collect()
    }
}

/// T2 of the experimental double drive and of the jointly constrained
/// circular drive over an `Ω1` grid; each is maximized over the grid.
pub fn clock_comparison(noise: &NoiseModel, omega1_grid: &[f64], opts: &CoherenceOptions) -> Result<ClockComparison> {
    clock_comparison_with(
        noise,
        omega1_grid,
        ClockConstraint::double_drive_experimental(),
        ClockConstraint::circular_joint(),
        opts,
    )
}

pub fn clock_comparison_with(
    noise: &NoiseModel,
    omega1_grid: &[f64],
    dd: ClockConstraint,
    circ: ClockConstraint,
    opts: &CoherenceOptions,
) -> Result<ClockComparison> {
    if omega1_grid.is_empty() || omega1_grid.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::invalid("omega1_grid", "must be non-empty and positive"));
    }
    let mut rows = Vec::with_capacity(omega1_grid.len());
    for (index, &omega1) in omega1_grid.iter().enumerate() {
        let wrap = |e| Error::ScanPoint { index, source: Box::new(e) };
        let t2 = |c: ClockConstraint| -> Result<T2Estimate> { Ok(coherence_curve(&c.scheme(omega1)?, noise, opts)?.t2) };
        rows.push(ClockRow {
            omega1,
            t2_double_drive: t2(dd).map_err(wrap)?,
            t2_circular: t2(circ).map_err(wrap)?,
        });
    }
    let argmax = |key: &dyn Fn(&ClockRow) -> f64| {
        (0..rows.len()).max_by(|&a, &b| key(&rows[a]).total_cmp(&key(&rows[b]))).expect("non-empty")
    };
    let best_double_drive = argmax(&|r| r.t2_double_drive.lower_bound());
    let best_circular = argmax(&|r| r.t2_circular.lower_bound());
    let ratio = rows[best_circular].t2_circular.lower_bound() / rows[best_double_drive].t2_double_drive.lower_bound();
    Ok(ClockComparison {
        t2_star: noise.t2_star(),
        sigma_eps: noise.sigma_eps,
        rows,
        best_double_drive,
        best_circular,
        ratio,
    })
}

/// Grid index maximizing the closed-form T2 of the circular clock drive
/// (`Ω2 = √2Ω1`).
pub fn clock_circular_closed_form_argmax(sigma_eps: f64, t2_star: f64, omega1_grid: &[f64]) -> Result<usize> {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &w) in omega1_grid.iter().enumerate() {
        let v = t2_app(w, SQRT_2 * w, sigma_eps, t2_star)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best.0)
}
