//! Drive schemes and the noisy rotating-frame Hamiltonians built from them.
//!
//! Amplitude convention: `CircularDressed` uses `omega2` as the full dressed
//! Rabi frequency, while `DoubleDrive` and `PhaseModulated` carry a `2·omega2`
//! prefactor on their modulated component. The two-qubit gate module uses its
//! own convention and documents it there.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{half_field, Operator, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeVariant {
    SingleDrive,
    DoubleDrive,
    PhaseModulated,
    CircularDressed,
}

impl fmt::Display for SchemeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SchemeVariant::SingleDrive => "single_drive",
            SchemeVariant::DoubleDrive => "double_drive",
            SchemeVariant::PhaseModulated => "phase_modulated",
            SchemeVariant::CircularDressed => "circular_dressed",
        };
        f.write_str(s)
    }
}

/// Parametrization of the balanced-control field `Ω(t)`. Frequencies in rad/s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlScheme {
    pub variant: SchemeVariant,
    pub omega1: f64,
    pub omega2: f64,
    pub mod_freq: f64,
    pub phase: f64,
    pub cross_corr: f64,
}

impl ControlScheme {
    pub fn new(variant: SchemeVariant, omega1: f64, omega2: f64, mod_freq: f64) -> Result<Self> {
        let scheme = ControlScheme { variant, omega1, omega2, mod_freq, phase: 0.0, cross_corr: 1.0 };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn single_drive(omega1: f64) -> Result<Self> {
        Self::new(SchemeVariant::SingleDrive, omega1, 0.0, omega1)
    }

    /// Circular dressed drive at the optimal detuning.
    pub fn circular(omega1: f64, omega2: f64) -> Result<Self> {
        let mod_freq = optimal_detuning(SchemeVariant::CircularDressed, omega1, omega2, 1.0)?;
        Self::new(SchemeVariant::CircularDressed, omega1, omega2, mod_freq)
    }

    /// Double drive at the `(c + ¼)Ω2²/Ω1` detuning.
    pub fn double_drive(omega1: f64, omega2: f64, cross_corr: f64) -> Result<Self> {
        let mod_freq = optimal_detuning(SchemeVariant::DoubleDrive, omega1, omega2, cross_corr)?;
        Self::new(SchemeVariant::DoubleDrive, omega1, omega2, mod_freq)?.with_cross_corr(cross_corr)
    }

    pub fn with_phase(mut self, phase: f64) -> Result<Self> {
        self.phase = phase;
        self.validate()?;
        Ok(self)
    }

    pub fn with_cross_corr(mut self, c: f64) -> Result<Self> {
        self.cross_corr = c;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega1, self.omega2, self.mod_freq, self.phase, self.cross_corr]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite("control scheme parameters"));
        }
        if self.omega1 <= 0.0 {
            return Err(Error::invalid("omega1", "must be > 0"));
        }
        if self.omega2 < 0.0 {
            return Err(Error::invalid("omega2", "must be >= 0"));
        }
        if self.omega2 > 0.0 && self.mod_freq <= 0.0 {
            return Err(Error::invalid("mod_freq", "must be > 0 when omega2 > 0"));
        }
        if self.variant == SchemeVariant::SingleDrive && self.omega2 != 0.0 {
            return Err(Error::invalid("omega2", "single drive requires omega2 = 0"));
        }
        Ok(())
    }

    /// Fundamental period `2π/Ω̃1`, or 0 when the field is static.
    pub fn period(&self) -> f64 {
        if self.is_static() {
            0.0
        } else {
            2.0 * PI / self.mod_freq
        }
    }

    pub fn is_static(&self) -> bool {
        self.omega2 == 0.0 || self.variant == SchemeVariant::SingleDrive
    }

    /// `|z| = √((Ω̃1 − Ω1)² + Ω2²)`, the dressed splitting in the second frame.
    pub fn second_frame_splitting(&self) -> f64 {
        (self.mod_freq - self.omega1).hypot(self.omega2)
    }
}

/// Quasi-static noise parameters. `sigma_delta` in rad/s, `sigma_eps`
/// fractional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_delta: f64,
    pub sigma_eps: f64,
    pub n_realizations: usize,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(sigma_delta: f64, sigma_eps: f64, n_realizations: usize, seed: u64) -> Result<Self> {
        let model = NoiseModel { sigma_delta, sigma_eps, n_realizations, seed };
        model.validate()?;
        Ok(model)
    }

    /// `σδ = √2 / T2*`
    pub fn from_t2_star(t2_star: f64, sigma_eps: f64, n_realizations: usize, seed: u64) -> Result<Self> {
        if !(t2_star > 0.0) {
            return Err(Error::invalid("t2_star", "must be > 0"));
        }
        Self::new(2f64.sqrt() / t2_star, sigma_eps, n_realizations, seed)
    }

    pub fn t2_star(&self) -> f64 {
        2f64.sqrt() / self.sigma_delta
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_delta >= 0.0) || !self.sigma_delta.is_finite() {
            return Err(Error::invalid("sigma_delta", "must be finite and >= 0"));
        }
        if !(self.sigma_eps >= 0.0) || !self.sigma_eps.is_finite() {
            return Err(Error::invalid("sigma_eps", "must be finite and >= 0"));
        }
        if self.n_realizations == 0 {
            return Err(Error::invalid("n_realizations", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseRealization {
    pub delta: f64,
    pub eps: f64,
}

impl NoiseRealization {
    pub const NONE: NoiseRealization = NoiseRealization { delta: 0.0, eps: 0.0 };

    pub fn new(delta: f64, eps: f64) -> Self {
        NoiseRealization { delta, eps }
    }
}

pub type OperatorFn = Arc<dyn Fn(f64) -> Operator + Send + Sync>;
pub type FieldFn = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;

/// Harmonic decomposition `H(t) = H⁽⁰⁾ + Σ_m e^{−imωt} V⁽ᵐ⁾`.
#[derive(Clone, Debug)]
pub struct FourierSeries {
    pub omega: f64,
    pub static_part: Operator,
    /// `(m, V⁽ᵐ⁾)` sorted by `m`. Components that vanish are still listed.
    pub components: Vec<(i32, Operator)>,
}

impl FourierSeries {
    pub fn component(&self, m: i32) -> Option<&Operator> {
        self.components.iter().find(|(k, _)| *k == m).map(|(_, v)| v)
    }

    pub fn harmonic(&self) -> i32 {
        self.components.iter().map(|(m, _)| m.abs()).max().unwrap_or(0)
    }

    pub fn reconstruct(&self, t: f64) -> Operator {
        let mut h = self.static_part.clone();
        for (m, v) in &self.components {
            h.add_scaled(C64::from_polar(1.0, -(*m as f64) * self.omega * t), v);
        }
        h
    }
}

/// A Hermitian Hamiltonian `H(t)`. Qubit Hamiltonians also carry the field
/// form `H = ½ f(t)·σ`, which the SU(2) fast paths use.
#[derive(Clone)]
pub struct TimeDependentHamiltonian {
    dim: usize,
    period: f64,
    eval: OperatorFn,
    field: Option<FieldFn>,
    fourier: Option<FourierSeries>,
}

impl fmt::Debug for TimeDependentHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDependentHamiltonian")
            .field("dim", &self.dim)
            .field("period", &self.period)
            .field("has_field", &self.field.is_some())
            .field("fourier", &self.fourier)
            .finish()
    }
}

impl TimeDependentHamiltonian {
    /// `period = 0` marks an aperiodic (or static) Hamiltonian.
    pub fn new(dim: usize, period: f64, eval: OperatorFn) -> Self {
        TimeDependentHamiltonian { dim, period, eval, field: None, fourier: None }
    }

    pub fn from_field(period: f64, field: FieldFn) -> Self {
        let f = field.clone();
        let eval: OperatorFn = Arc::new(move |t| half_field(f(t)));
        TimeDependentHamiltonian { dim: 2, period, eval, field: Some(field), fourier: None }
    }

    pub fn constant(h: Operator) -> Self {
        let dim = h.dim();
        TimeDependentHamiltonian::new(dim, 0.0, Arc::new(move |_| h.clone()))
    }

    pub fn with_fourier(mut self, series: FourierSeries) -> Self {
        self.fourier = Some(series);
        self
    }

    pub fn with_period(mut self, period: f64) -> Self {
        self.period = period;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.period > 0.0
    }

    pub fn eval(&self, t: f64) -> Operator {
        (self.eval)(t)
    }

    pub fn field(&self) -> Option<&FieldFn> {
        self.field.as_ref()
    }

    pub fn field_at(&self, t: f64) -> Option<[f64; 3]> {
        self.field.as_ref().map(|f| f(t))
    }

    pub fn fourier(&self) -> Option<&FourierSeries> {
        self.fourier.as_ref()
    }
}

/// Instantaneous balanced-control components `(Ωx, Ωy, Ωz)` in rad/s.
pub fn omega_vector(scheme: &ControlScheme, t: f64) -> [f64; 3] {
    let ControlScheme { omega1, omega2, mod_freq, phase, .. } = *scheme;
    match scheme.variant {
        SchemeVariant::SingleDrive => [omega1, 0.0, 0.0],
        SchemeVariant::DoubleDrive => [omega1, 2.0 * omega2 * (mod_freq * t + phase).cos(), 0.0],
        SchemeVariant::PhaseModulated => {
            [omega1, 0.0, -2.0 * omega2 * (mod_freq * t + phase).cos()]
        }
        SchemeVariant::CircularDressed => {
            let (s, c) = (mod_freq * t + phase).sin_cos();
            [omega1, omega2 * c, omega2 * s]
        }
    }
}

/// Noisy field in the first rotating frame: `ε` scales `Ωx, Ωy`; `δ` adds to
/// `Ωz`.
pub fn noisy_field(scheme: &ControlScheme, noise: NoiseRealization, t: f64) -> [f64; 3] {
    let [ox, oy, oz] = omega_vector(scheme, t);
    let a = 1.0 + noise.eps;
    [ox * a, oy * a, oz + noise.delta]
}

/// `H_I(t) = ½[Ωx(1+ε)σx + Ωy(1+ε)σy + (Ωz+δ)σz]`
pub fn rotating_frame_hamiltonian(
    scheme: &ControlScheme,
    noise: NoiseRealization,
) -> TimeDependentHamiltonian {
    let s = *scheme;
    TimeDependentHamiltonian::from_field(s.period(), Arc::new(move |t| noisy_field(&s, noise, t)))
}

/// `H_II = ½[(Ω1 − Ω̃1)σx + Ω2(cos φ σy + sin φ σz)]` for the circular drive.
pub fn second_frame_static(scheme: &ControlScheme) -> Operator {
    let ControlScheme { omega1, omega2, mod_freq, phase, .. } = *scheme;
    half_field([omega1 - mod_freq, omega2 * phase.cos(), omega2 * phase.sin()])
}

/// Circular drive Hamiltonian in the second frame, `exp(+iΩ̃1tσx/2)` applied
/// to `H_I`, decomposed into harmonics of `Ω̃1`. Requires `φ = 0`.
pub fn doubly_rotating_fourier(
    scheme: &ControlScheme,
    noise: NoiseRealization,
) -> Result<TimeDependentHamiltonian> {
    if scheme.variant != SchemeVariant::CircularDressed {
        return Err(Error::UnsupportedVariant {
            operation: "doubly_rotating_fourier",
            variant: scheme.variant,
        });
    }
    if scheme.phase != 0.0 {
        return Err(Error::invalid("phase", "harmonic decomposition is defined for phase = 0"));
    }
    let ControlScheme { omega1, omega2, mod_freq, .. } = *scheme;
    let NoiseRealization { delta, eps } = noise;
    let (re, im) = (|x: f64| C64::new(x, 0.0), |x: f64| C64::new(0.0, x));
    let (sy, sz) = (pauli_y(), pauli_z());

    let h0 = half_field([omega1 - mod_freq, omega2, 0.0]);
    let v0 = half_field([eps * omega1, eps * omega2 / 2.0, 0.0]);
    let mut v1 = sy.scale(im(0.5));
    v1.add_scaled(re(0.5), &sz);
    let v1 = v1.scale_re(delta / 2.0);
    let mut v2 = sy.scale(re(0.5));
    v2.add_scaled(im(-0.5), &sz);
    let v2 = v2.scale_re(eps * omega2 / 4.0);
    let components = vec![
        (-2, v2.dag()),
        (-1, v1.dag()),
        (0, v0),
        (1, v1),
        (2, v2),
    ];
    let series = FourierSeries { omega: mod_freq, static_part: h0, components };

    let field: FieldFn = Arc::new(move |t| {
        let (s1, c1) = (mod_freq * t).sin_cos();
        let (s2, c2) = (2.0 * mod_freq * t).sin_cos();
        [
            omega1 - mod_freq + eps * omega1,
            omega2 + delta * s1 + eps * omega2 * 0.5 * (1.0 + c2),
            delta * c1 - eps * omega2 * 0.5 * s2,
        ]
    });
    Ok(TimeDependentHamiltonian::from_field(scheme.period(), field).with_fourier(series))
}

fn pauli_y() -> Operator {
    crate::linalg::pauli(crate::linalg::PauliAxis::Y)
}

fn pauli_z() -> Operator {
    crate::linalg::pauli(crate::linalg::PauliAxis::Z)
}

/// Optimal modulation frequency `Ω̃1`.
///
/// Circular drive: `Ω1 + ½Ω2²/Ω1`. Double drive and phase modulation:
/// `Ω1 + (c + ¼)Ω2²/Ω1`. Single drive: resonant.
pub fn optimal_detuning(variant: SchemeVariant, omega1: f64, omega2: f64, c: f64) -> Result<f64> {
    if !(omega1 > 0.0) {
        return Err(Error::invalid("omega1", "must be > 0"));
    }
    let shift = omega2 * omega2 / omega1;
    Ok(match variant {
        SchemeVariant::CircularDressed => omega1 + 0.5 * shift,
        SchemeVariant::DoubleDrive | SchemeVariant::PhaseModulated => omega1 + (c + 0.25) * shift,
        SchemeVariant::SingleDrive => omega1,
    })
}

/// `∫₀ᵗ Ωz(t′) dt′` in closed form.
pub fn integrated_omega_z(scheme: &ControlScheme, t: f64) -> f64 {
    let ControlScheme { omega2, mod_freq, phase, .. } = *scheme;
    match scheme.variant {
        SchemeVariant::SingleDrive | SchemeVariant::DoubleDrive => 0.0,
        SchemeVariant::PhaseModulated => {
            -2.0 * omega2 / mod_freq * ((mod_freq * t + phase).sin() - phase.sin())
        }
        SchemeVariant::CircularDressed => {
            omega2 / mod_freq * (phase.cos() - (mod_freq * t + phase).cos())
        }
    }
}

/// Lab-frame control waveform `f(t) = Ωx cos(ω0t − ∫Ωz) − Ωy sin(ω0t − ∫Ωz)`.
/// Export only; the dynamics are always simulated in the rotating frame.
pub fn lab_waveform(scheme: &ControlScheme, omega0: f64, t: f64) -> f64 {
    let [ox, oy, _] = omega_vector(scheme, t);
    let arg = omega0 * t - integrated_omega_z(scheme, t);
    ox * arg.cos() - oy * arg.sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, pauli, PauliAxis};

    fn frame_rotation(mod_freq: f64, t: f64) -> Operator {
        expm(&pauli(PauliAxis::X).scale(C64::new(0.0, mod_freq * t / 2.0))).unwrap()
    }

    #[test]
    fn omega_vector_examples() {
        let c = ControlScheme::circular(10.0, 2.0).unwrap();
        assert_eq!(omega_vector(&c, 0.0), [10.0, 2.0, 0.0]);
        let d = ControlScheme::new(SchemeVariant::DoubleDrive, 10.0, 2.0, 10.0).unwrap();
        assert_eq!(omega_vector(&d, 0.0), [10.0, 4.0, 0.0]);
        let s = ControlScheme::single_drive(3.0).unwrap();
        assert_eq!(omega_vector(&s, 1.234), [3.0, 0.0, 0.0]);
    }

    #[test]
    fn scheme_validation() {
        assert!(ControlScheme::new(SchemeVariant::SingleDrive, 1.0, 0.5, 1.0).is_err());
        assert!(ControlScheme::new(SchemeVariant::CircularDressed, -1.0, 0.5, 1.0).is_err());
        assert!(ControlScheme::new(SchemeVariant::CircularDressed, 1.0, 0.5, 0.0).is_err());
        assert!(ControlScheme::new(SchemeVariant::CircularDressed, 1.0, -0.5, 1.0).is_err());
    }

    #[test]
    fn detuning_examples() {
        let v = SchemeVariant::CircularDressed;
        assert_eq!(optimal_detuning(v, 3.0, 0.0, 1.0).unwrap(), 3.0);
        let o1 = 1.7;
        let got = optimal_detuning(v, o1, 2f64.sqrt() * o1, 1.0).unwrap();
        assert!((got - 2.0 * o1).abs() < 1e-14);
        let dd = optimal_detuning(SchemeVariant::DoubleDrive, 2.0, 0.4, 1.0).unwrap();
        assert!((dd - (2.0 + 1.25 * 0.16 / 2.0)).abs() < 1e-15);
    }

    #[test]
    fn single_drive_is_static() {
        let s = ControlScheme::single_drive(2.0).unwrap();
        let h = rotating_frame_hamiltonian(&s, NoiseRealization::NONE);
        assert_eq!(h.period(), 0.0);
        let expected = pauli(PauliAxis::X).scale_re(1.0);
        assert!(h.eval(0.7).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn noise_enters_expected_components() {
        let c = ControlScheme::circular(5.0, 1.0).unwrap();
        let t = 0.3;
        let base = noisy_field(&c, NoiseRealization::NONE, t);
        let eps = noisy_field(&c, NoiseRealization::new(0.0, 0.1), t);
        let del = noisy_field(&c, NoiseRealization::new(0.2, 0.0), t);
        assert!((eps[0] - 1.1 * base[0]).abs() < 1e-14);
        assert!((eps[1] - 1.1 * base[1]).abs() < 1e-14);
        assert_eq!(eps[2], base[2]);
        assert_eq!(del[0], base[0]);
        assert_eq!(del[1], base[1]);
        assert!((del[2] - base[2] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn circular_second_frame_is_static() {
        let c = ControlScheme::circular(6.0, 1.3).unwrap().with_phase(0.4).unwrap();
        let h = rotating_frame_hamiltonian(&c, NoiseRealization::NONE);
        let hii = second_frame_static(&c);
        let sx_half = pauli(PauliAxis::X).scale_re(c.mod_freq / 2.0);
        for k in 0..25 {
            let t = 0.173 * k as f64;
            let r = frame_rotation(c.mod_freq, t);
            let h2 = &r.sandwich(&h.eval(t)) - &sx_half;
            assert!(h2.max_abs_diff(&hii) < 1e-10);
        }
    }

    #[test]
    fn double_drive_second_frame_keeps_counter_rotating_term() {
        let d = ControlScheme::new(SchemeVariant::DoubleDrive, 6.0, 0.8, 6.0).unwrap();
        let h = rotating_frame_hamiltonian(&d, NoiseRealization::NONE);
        let sx_half = pauli(PauliAxis::X).scale_re(d.mod_freq / 2.0);
        let n = 200;
        let frames: Vec<Operator> = (0..n)
            .map(|k| {
                let t = d.period() * k as f64 / n as f64;
                &frame_rotation(d.mod_freq, t).sandwich(&h.eval(t)) - &sx_half
            })
            .collect();
        let mut mean = Operator::zeros(2);
        for f in &frames {
            mean.add_scaled(C64::new(1.0 / n as f64, 0.0), f);
        }
        let sup = frames.iter().map(|f| (f - &mean).max_abs()).fold(0.0, f64::max);
        assert!(sup >= 0.9 * d.omega2 / 2.0, "sup {sup}");
    }

    #[test]
    fn fourier_components_and_reconstruction() {
        let c = ControlScheme::circular(7.0, 0.9).unwrap();
        let noise = NoiseRealization::new(0.37, 0.021);
        let h = doubly_rotating_fourier(&c, noise).unwrap();
        let series = h.fourier().unwrap();
        assert_eq!(series.harmonic(), 2);
        let v0 = half_field([0.021 * 7.0, 0.021 * 0.9 / 2.0, 0.0]);
        assert!(series.component(0).unwrap().max_abs_diff(&v0) < 1e-15);
        for m in 1..=2 {
            let vp = series.component(m).unwrap();
            let vm = series.component(-m).unwrap();
            assert!(vm.max_abs_diff(&vp.dag()) < 1e-15);
        }
        let hi = rotating_frame_hamiltonian(&c, noise);
        let sx_half = pauli(PauliAxis::X).scale_re(c.mod_freq / 2.0);
        for k in 0..20 {
            let t = 0.0917 * k as f64 + 0.013;
            let oracle = &frame_rotation(c.mod_freq, t).sandwich(&hi.eval(t)) - &sx_half;
            assert!(series.reconstruct(t).max_abs_diff(&oracle) < 1e-10);
            assert!(h.eval(t).max_abs_diff(&oracle) < 1e-10);
        }
    }

    #[test]
    fn fourier_noiseless_has_only_static_part() {
        let c = ControlScheme::circular(4.0, 1.0).unwrap();
        let h = doubly_rotating_fourier(&c, NoiseRealization::NONE).unwrap();
        let series = h.fourier().unwrap();
        assert!(series.components.iter().all(|(_, v)| v.max_abs() == 0.0));
        assert!(series.static_part.max_abs_diff(&second_frame_static(&c)) < 1e-15);
    }

    #[test]
    fn fourier_rejects_unsupported_inputs() {
        let d = ControlScheme::double_drive(4.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            doubly_rotating_fourier(&d, NoiseRealization::NONE),
            Err(Error::UnsupportedVariant { .. })
        ));
        let c = ControlScheme::circular(4.0, 1.0).unwrap().with_phase(0.1).unwrap();
        assert!(doubly_rotating_fourier(&c, NoiseRealization::NONE).is_err());
    }

    #[test]
    fn lab_waveform_examples() {
        let s = ControlScheme::single_drive(2.0).unwrap();
        for t in [0.0, 0.3, 1.7] {
            assert!((lab_waveform(&s, 50.0, t) - 2.0 * (50.0 * t).cos()).abs() < 1e-12);
        }
        let c = ControlScheme::circular(3.0, 1.0).unwrap();
        let t = 0.77;
        let expected = 1.0 / c.mod_freq * (1.0 - (c.mod_freq * t).cos());
        assert!((integrated_omega_z(&c, t) - expected).abs() < 1e-15);

        // phase modulation: Ω1 cos(ω0t + (A/Ω1) sin(Ω1t)) with A = 2Ω2
        let o1 = 3.0;
        let p = ControlScheme::new(SchemeVariant::PhaseModulated, o1, 0.4, o1).unwrap();
        for t in [0.1, 0.9, 2.3] {
            let want = o1 * (40.0 * t + (0.8 / o1) * (o1 * t).sin()).cos();
            assert!((lab_waveform(&p, 40.0, t) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn integrated_omega_z_matches_quadrature() {
        let schemes = [
            ControlScheme::circular(3.0, 1.2).unwrap().with_phase(0.3).unwrap(),
            ControlScheme::new(SchemeVariant::PhaseModulated, 2.0, 0.5, 2.2).unwrap(),
        ];
        for s in schemes {
            let t = 1.9;
            let n = 20000;
            let h = t / n as f64;
            let num: f64 = (0..n).map(|k| omega_vector(&s, (k as f64 + 0.5) * h)[2] * h).sum();
            assert!((num - integrated_omega_z(&s, t)).abs() < 1e-7);
        }
    }
}
