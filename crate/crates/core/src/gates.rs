//! Gate-level figures of merit: the single-qubit `Y^{1/n}` gates in the
//! second rotating frame and the two-ion entangling gate mediated by a
//! shared motional mode.
//!
//! The two-qubit module uses the phase-modulation amplitude convention in
//! which `Ω2` is twice the second Rabi frequency. The single-qubit module
//! uses `Ω2` as the second Rabi frequency itself.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{s, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{omega_vector, ControlScheme, SchemeVariant, TimeDependentHamiltonian};
use crate::error::{Error, Result};
use crate::linalg::{annihilation, kron_all, pauli, Operator, PauliAxis, C64, ONE, ZERO};
use crate::optimize::{golden_section_min, nelder_mead};
use crate::propagation::{magnus_step, magnus_su2_segment, period_table, PeriodTable};
use crate::su2::Su2;

/// Leakage bound on the two highest Fock levels.
pub const FOCK_LEAKAGE_MAX: f64 = 1e-6;

/// Average gate fidelity of two qubit unitaries,
/// `½ + (1/12) Σ_k Tr(V σ_k V† · U σ_k U†)`.
pub fn average_gate_fidelity(ideal: &Operator, actual: &Operator) -> Result<f64> {
    if ideal.dim() != 2 || actual.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: ideal.dim().max(actual.dim()) });
    }
    let sum: f64 = [PauliAxis::X, PauliAxis::Y, PauliAxis::Z]
        .iter()
        .map(|&k| {
            let p = pauli(k);
            ideal.sandwich(&p).trace_product(&actual.sandwich(&p)).re
        })
        .sum();
    Ok(0.5 + sum / 12.0)
}

/// Infidelity of the `Y^{1/n}` gate, `exp(−i(π/2n)σy)`, produced by the
/// dressed drive with `Ω1/Ω2 = ratio` during `t_g = (π/n)/Ω2`.
///
/// The propagator is taken to the second rotating frame with
/// `exp(+iΩ1 t_g σx/2)` before comparison. `DoubleDrive` carries the
/// `2Ω2 cos(Ω1t)` drive so that its second-frame Rabi frequency is `Ω2`.
pub fn gate1q_infidelity(ratio: f64, n: u32, variant: SchemeVariant) -> Result<f64> {
    if !(ratio >= 1.0) || !ratio.is_finite() {
        return Err(Error::invalid("ratio", "must be finite and >= 1"));
    }
    if n == 0 {
        return Err(Error::invalid("n", "must be >= 1"));
    }
    if !matches!(variant, SchemeVariant::DoubleDrive | SchemeVariant::CircularDressed) {
        return Err(Error::UnsupportedVariant { operation: "gate1q_infidelity", variant });
    }
    let omega2 = 1.0;
    let omega1 = ratio * omega2;
    let scheme = ControlScheme::new(variant, omega1, omega2, omega1)?;
    let t_gate = PI / (n as f64 * omega2);
    let fmax = omega1.hypot(2.0 * omega2);
    let steps = ((fmax * t_gate / 0.005).ceil() as usize).max(64);
    let u = magnus_su2_segment(|t| omega_vector(&scheme, t), 0.0, t_gate, steps);
    let frame = Su2::exp_field([-0.5 * omega1, 0.0, 0.0], t_gate);
    let ideal = Su2::exp_field([0.0, 1.0, 0.0], PI / (2.0 * n as f64));
    let f = average_gate_fidelity(&ideal.to_operator(), &(frame * u).to_operator())?;
    Ok((1.0 - f).max(0.0))
}

/// Parameters of the two-ion gate. Frequencies in rad/s, times in s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IonGateConfig {
    pub nu: f64,
    pub eta: f64,
    pub omega1: f64,
    pub omega2: f64,
    /// 0 for phase modulation, 1 for the counter-rotating-free drive.
    pub s: u8,
    pub nbar: f64,
    pub n_fock: usize,
    pub t_gate_hint: f64,
    /// Magnus steps per drive period `2π/Ω1`.
    #[serde(default = "IonGateConfig::default_steps")]
    pub steps_per_period: usize,
}

impl IonGateConfig {
    /// Thirty levels hold the n̄ = 0.6 thermal tail, but the gate's
    /// displacement puts ~3e-6 in the top two levels; forty clear the
    /// leakage bound with identical infidelities.
    pub const DEFAULT_N_FOCK: usize = 40;

    fn default_steps() -> usize {
        100
    }

    /// Trap of the reference experiment: `ν = 2π·98.8 kHz`, `η = 0.033`,
    /// `n̄ = 0.6`, `Ω1 = ν − ην`, `t_g ≈ 2π/(ην)`.
    pub fn reference(omega2: f64, s: u8) -> Result<Self> {
        let nu = 2.0 * PI * 98.8e3;
        Self::new(nu, 0.033, omega2, s, 0.6)
    }

    pub fn new(nu: f64, eta: f64, omega2: f64, s: u8, nbar: f64) -> Result<Self> {
        let cfg = IonGateConfig {
            nu,
            eta,
            omega1: nu - eta * nu,
            omega2,
            s,
            nbar,
            n_fock: Self::DEFAULT_N_FOCK,
            t_gate_hint: 2.0 * PI / (eta * nu),
            steps_per_period: Self::default_steps(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_s(mut self, s: u8) -> Self {
        self.s = s;
        self
    }

    pub fn with_omega2(mut self, omega2: f64) -> Self {
        self.omega2 = omega2;
        self
    }

    pub fn with_nbar(mut self, nbar: f64) -> Self {
        self.nbar = nbar;
        self
    }

    pub fn with_n_fock(mut self, n_fock: usize) -> Self {
        self.n_fock = n_fock;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [self.nu, self.eta, self.omega1, self.omega2, self.nbar, self.t_gate_hint];
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("ion gate parameters"));
        }
        if self.nu <= 0.0 || self.omega1 <= 0.0 {
            return Err(Error::invalid("nu", "nu and omega1 must be > 0"));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::invalid("eta", "must lie in (0, 1)"));
        }
        if self.omega2 < 0.0 {
            return Err(Error::invalid("omega2", "must be >= 0"));
        }
        if self.s > 1 {
            return Err(Error::invalid("s", "must be 0 or 1"));
        }
        if self.nbar < 0.0 {
            return Err(Error::invalid("nbar", "must be >= 0"));
        }
        if self.n_fock < 10 {
            return Err(Error::invalid("n_fock", "must be >= 10"));
        }
        if self.t_gate_hint <= 0.0 {
            return Err(Error::invalid("t_gate_hint", "must be > 0"));
        }
        if self.steps_per_period < 8 {
            return Err(Error::invalid("steps_per_period", "must be >= 8"));
        }
        Ok(())
    }

    pub fn drive_period(&self) -> f64 {
        2.0 * PI / self.omega1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub fidelity: f64,
    pub infidelity: f64,
    pub optimal_t_gate: f64,
    /// ZYZ Euler angles of the two local rotations.
    pub optimizer_angles: [f64; 6],
    pub purity: f64,
    /// Largest population found in the two highest Fock levels.
    pub leakage: f64,
    /// `|Tr ρ − 1|` of the reduced two-qubit state.
    pub trace_error: f64,
}

/// `H_I(t)` on qubit ⊗ qubit ⊗ oscillator:
/// `ν b†b + Σ_j [(ην/2)σz⁽ʲ⁾(b + b†) + (Ω1/2)σx⁽ʲ⁾ − (Ω2/2)cos(Ω1t)σz⁽ʲ⁾
/// + s(Ω2/2)sin(Ω1t)σy⁽ʲ⁾]`.
pub fn ion_hamiltonian(cfg: &IonGateConfig) -> Result<TimeDependentHamiltonian> {
    cfg.validate()?;
    let nf = cfg.n_fock;
    let b = annihilation(nf);
    let bd = b.dag();
    let i2 = Operator::identity(2);
    let ifk = Operator::identity(nf);
    let x = &b + &bd;
    let sum = |p: &Operator, f: &Operator| &kron_all(&[p, &i2, f]) + &kron_all(&[&i2, p, f]);
    let sz = pauli(PauliAxis::Z);
    let mut hc = kron_all(&[&i2, &i2, &(&bd * &b)]).scale_re(cfg.nu);
    hc.add_scaled(C64::new(0.5 * cfg.eta * cfg.nu, 0.0), &sum(&sz, &x));
    hc.add_scaled(C64::new(0.5 * cfg.omega1, 0.0), &sum(&pauli(PauliAxis::X), &ifk));
    let zsum = sum(&sz, &ifk);
    let ysum = sum(&pauli(PauliAxis::Y), &ifk);
    let (o1, o2, s) = (cfg.omega1, cfg.omega2, cfg.s as f64);
    Ok(TimeDependentHamiltonian::new(
        4 * nf,
        cfg.drive_period(),
        Arc::new(move |t| {
            let (sn, cs) = (o1 * t).sin_cos();
            let mut h = hc.clone();
            h.add_scaled(C64::new(-0.5 * o2 * cs, 0.0), &zsum);
            if s != 0.0 {
                h.add_scaled(C64::new(0.5 * o2 * s * sn, 0.0), &ysum);
            }
            h
        }),
    ))
}

/// Evolution of `|+,+⟩ ⊗ ρ_th(n̄)` over whole periods plus a remainder,
/// kept as the purified columns `U·√p_n|+,+,n⟩`.
struct IonEvolution {
    h: TimeDependentHamiltonian,
    table: PeriodTable,
    /// `M^k V0` for `k = 0..=k_max`.
    period_columns: Vec<Array2<C64>>,
    n_fock: usize,
}

impl IonEvolution {
    fn new(cfg: &IonGateConfig, t_max: f64) -> Result<Self> {
        let h = ion_hamiltonian(cfg)?;
        let table = period_table(&h, cfg.steps_per_period, Some(cfg.steps_per_period))?;
        let nf = cfg.n_fock;
        let thermal = crate::linalg::thermal_oscillator_state(cfg.nbar, nf)?;
        let kept: Vec<usize> = (0..nf).filter(|&n| thermal.populations[n] > 0.0).collect();
        let mut v0 = Array2::<C64>::zeros((4 * nf, kept.len()));
        for (col, &n) in kept.iter().enumerate() {
            let amp = C64::new(0.5 * thermal.populations[n].sqrt(), 0.0);
            for q in 0..4 {
                v0[[q * nf + n, col]] = amp;
            }
        }
        let k_max = (t_max / table.period).floor() as usize;
        let m = table.monodromy().as_array();
        let mut period_columns = Vec::with_capacity(k_max + 1);
        period_columns.push(v0);
        for k in 0..k_max {
            let next = m.dot(&period_columns[k]);
            period_columns.push(next);
        }
        Ok(IonEvolution { h, table, period_columns, n_fock: nf })
    }

    fn columns_at(&self, t: f64) -> Result<Array2<C64>> {
        let period = self.table.period;
        let k = (t / period).floor() as usize;
        let base = self
            .period_columns
            .get(k)
            .ok_or_else(|| Error::invalid("t", "beyond the precomputed horizon"))?;
        let r = t - k as f64 * period;
        let slot = period / self.table.phases() as f64;
        let j = ((r / slot).floor() as usize).min(self.table.phases() - 1);
        let dt = r - j as f64 * slot;
        let mut w = self.table.partials[j].as_array().dot(base);
        if dt > 0.0 {
            let step = magnus_step(&self.h, j as f64 * slot, dt)?;
            w = step.as_array().dot(&w);
        }
        Ok(w)
    }

    /// Reduced two-qubit state from purified columns.
    fn reduced(&self, w: &Array2<C64>) -> Operator {
        let nf = self.n_fock;
        let mut rho = Array2::<C64>::zeros((4, 4));
        for a in 0..4 {
            let wa = w.slice(s![a * nf..(a + 1) * nf, ..]);
            for b in 0..4 {
                let wb = w.slice(s![b * nf..(b + 1) * nf, ..]);
                rho[[a, b]] = wa.iter().zip(wb.iter()).map(|(x, y)| x * y.conj()).sum();
            }
        }
        Operator::from_array(rho).expect("square")
    }

    fn top_fock_population(&self, w: &Array2<C64>) -> f64 {
        let nf = self.n_fock;
        (0..4)
            .flat_map(|a| [a * nf + nf - 2, a * nf + nf - 1])
            .map(|row| w.row(row).iter().map(|x| x.norm_sqr()).sum::<f64>())
            .sum()
    }
}

fn rotation(a: &[f64]) -> Su2 {
    let rz = |x: f64| Su2::exp_field([0.0, 0.0, 1.0], 0.5 * x);
    let ry = |x: f64| Su2::exp_field([0.0, 1.0, 0.0], 0.5 * x);
    rz(a[0]) * ry(a[1]) * rz(a[2])
}

/// `⟨Φ+|R†ρR|Φ+⟩` with `R = R(a₀..a₂) ⊗ R(a₃..a₅)`.
pub fn bell_fidelity(rho: &Operator, angles: &[f64]) -> f64 {
    let r = crate::linalg::kron(&rotation(&angles[0..3]).to_operator(), &rotation(&angles[3..6]).to_operator());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let phi = [C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)];
    let v = r.apply(&phi);
    let rv = rho.apply(&v);
    v.iter().zip(&rv).map(|(a, b)| a.conj() * b).sum::<C64>().re
}

/// Deterministic starts on a rank-1 lattice in `[0, 2π)⁶`; the first start
/// is the identity.
fn lattice_starts(count: usize) -> Vec<[f64; 6]> {
    let gens = [2f64.sqrt(), 3f64.sqrt(), 5f64.sqrt(), 7f64.sqrt(), 11f64.sqrt(), 13f64.sqrt()];
    (0..count)
        .map(|k| gens.map(|g| 2.0 * PI * (k as f64 * g).fract()))
        .collect()
}

/// Bell fidelity maximized over two local rotations.
pub fn max_bell_fidelity(rho: &Operator) -> Result<(f64, [f64; 6])> {
    let mut best = (bell_fidelity(rho, &[0.0; 6]), [0.0; 6]);
    for x0 in lattice_starts(8) {
        let m = nelder_mead(|x| -bell_fidelity(rho, x), &x0, &[0.5; 6], 1e-13, 4000)?;
        if -m.value > best.0 {
            let mut a = [0.0; 6];
            a.copy_from_slice(&m.x);
            best = (-m.value, a);
        }
    }
    Ok(best)
}

/// Simulates the entangling gate: the gate time is tuned within ±4% of
/// the hint for maximal two-qubit purity, the oscillator is traced out,
/// and the Bell fidelity is maximized over local rotations.
pub fn gate2q_simulate(cfg: &IonGateConfig) -> Result<GateResult> {
    cfg.validate()?;
    let (lo, hi) = (0.96 * cfg.t_gate_hint, 1.04 * cfg.t_gate_hint);
    let evo = IonEvolution::new(cfg, hi)?;
    let purity_at = |t: f64| -> f64 {
        match evo.columns_at(t) {
            Ok(w) => {
                let r = evo.reduced(&w);
                r.trace_product(&r).re
            }
            Err(_) => f64::NAN,
        }
    };
    let (t_gate, neg) = golden_section_min(|t| -purity_at(t), lo, hi, 1e-9)?;
    let purity = -neg;
    if !purity.is_finite() {
        return Err(Error::NonFinite("two-qubit purity"));
    }

    // leakage along the trajectory, sampled at period boundaries
    let mut leakage: f64 = 0.0;
    for cols in &evo.period_columns {
        leakage = leakage.max(evo.top_fock_population(cols));
    }
    let w = evo.columns_at(t_gate)?;
    leakage = leakage.max(evo.top_fock_population(&w));
    if leakage > FOCK_LEAKAGE_MAX {
        return Err(Error::FockTruncation { population: leakage, n_fock: cfg.n_fock });
    }

    let rho = evo.reduced(&w);
    let trace_error = (rho.trace() - ONE).norm();
    let (fidelity, optimizer_angles) = max_bell_fidelity(&rho)?;
    Ok(GateResult {
        fidelity,
        infidelity: 1.0 - fidelity,
        optimal_t_gate: t_gate,
        optimizer_angles,
        purity,
        leakage,
        trace_error,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gate2qRow {
    pub omega2: f64,
    pub infidelity_s0: f64,
    pub infidelity_s1: f64,
}

/// Infidelity of both drives (`s = 0` and `s = 1`) over an `Ω2` grid.
/// Points run concurrently; rows keep grid order.
pub fn gate2q_scan(template: &IonGateConfig, omega2_grid: &[f64]) -> Result<Vec<Gate2qRow>> {
    template.validate()?;
    if omega2_grid.is_empty() {
        return Err(Error::invalid("omega2_grid", "must not be empty"));
    }
    let upper = template.nu + template.omega1;
    if let Some(bad) = omega2_grid.iter().find(|&&w| !(w > 0.0 && w < upper)) {
        return Err(Error::invalid("omega2_grid", format!("{bad:e} outside (0, nu + omega1)")));
    }
    let jobs: Vec<(usize, u8)> = (0..omega2_grid.len()).flat_map(|i| [(i, 0), (i, 1)]).collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let cfg = template.with_omega2(omega2_grid[i]).with_s(s);
            gate2q_simulate(&cfg)
                .map(|r| r.infidelity)
                .map_err(|e| Error::ScanPoint { index: i, source: Box::new(e) })
        })
        .collect();
    let mut rows = Vec::with_capacity(omega2_grid.len());
    let mut it = results.into_iter();
    for &omega2 in omega2_grid {
        let s0 = it.next().expect("paired job")?;
        let s1 = it.next().expect("paired job")?;
        rows.push(Gate2qRow { omega2, infidelity_s0: s0, infidelity_s1: s1 });
    }
    Ok(rows)
}
