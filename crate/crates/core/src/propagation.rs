//! Time-ordered propagators `U(t) = T exp(−i∫₀ᵗ H)`.
//!
//! Two routes are provided: adaptive Dormand–Prince integration of
//! `dU/dt = −iHU` for arbitrary Hamiltonians, and a stroboscopic route for
//! periodic ones that tabulates partial-period propagators with a fourth-order
//! Magnus integrator and reaches long times through powers of the monodromy.

use serde::{Deserialize, Serialize};

use crate::control::TimeDependentHamiltonian;
use crate::error::{Error, Result};
use crate::linalg::{expm, reunitarize, Operator, C64};
use crate::su2::Su2;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_PHASES: usize = 16;
/// Largest `h·‖H‖` used by the default Magnus step selection.
pub const MAGNUS_STEP_NORM: f64 = 0.02;
/// Products of monodromy powers are re-projected onto the unitaries this often.
pub const REUNITARIZE_EVERY: u64 = 1024;

const SQRT3_6: f64 = 0.288_675_134_594_812_9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropagationMethod {
    Direct,
    Stroboscopic,
}

#[derive(Clone, Debug)]
pub struct Propagator {
    h: TimeDependentHamiltonian,
    kind: Kind,
}

#[derive(Clone, Debug)]
enum Kind {
    Direct { tol: f64, checkpoints: Vec<(f64, Operator)> },
    Stroboscopic(PeriodTable),
}

/// Partial-period propagators `U(0 → sT/P)` for `s = 0..=P`; the last entry
/// is the monodromy.
#[derive(Clone, Debug)]
pub struct PeriodTable {
    pub period: f64,
    pub partials: Vec<Operator>,
    pub substeps_per_phase: usize,
}

impl PeriodTable {
    pub fn phases(&self) -> usize {
        self.partials.len() - 1
    }

    pub fn monodromy(&self) -> &Operator {
        self.partials.last().expect("period table is never empty")
    }
}

impl Propagator {
    pub fn method(&self) -> PropagationMethod {
        match self.kind {
            Kind::Direct { .. } => PropagationMethod::Direct,
            Kind::Stroboscopic(_) => PropagationMethod::Stroboscopic,
        }
    }

    pub fn hamiltonian(&self) -> &TimeDependentHamiltonian {
        &self.h
    }

    /// `U(t)` for `t ≥ 0`.
    pub fn at(&self, t: f64) -> Result<Operator> {
        if !(t >= 0.0) {
            return Err(Error::invalid("t", "propagator times must be >= 0"));
        }
        match &self.kind {
            Kind::Direct { tol, checkpoints } => {
                let idx = checkpoints.partition_point(|(tc, _)| *tc <= t).saturating_sub(1);
                let (t0, u0) = &checkpoints[idx];
                if t == *t0 {
                    return Ok(u0.clone());
                }
                let (_, u) = dopri5(&self.h, *t0, t, u0.clone(), *tol, None)?;
                Ok(u)
            }
            Kind::Stroboscopic(table) => {
                let (n, s, rest) = split_time(t, table.period, table.phases());
                let mpow = reunitarize(&table.monodromy().powi(n));
                let mut u = &table.partials[s] * &mpow;
                if rest > 0.0 {
                    let t0 = s as f64 * table.period / table.phases() as f64;
                    let step = rest_substeps(table, rest);
                    u = &magnus_segment(&self.h, t0, t0 + rest, step)? * &u;
                }
                Ok(u)
            }
        }
    }

    /// `U(t)` at ascending times. The stroboscopic route fills monodromy
    /// powers sequentially and jumps by binary exponentiation across gaps.
    pub fn at_many(&self, times: &[f64]) -> Result<Vec<Operator>> {
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("times", "must be sorted ascending"));
        }
        let table = match &self.kind {
            Kind::Stroboscopic(table) => table,
            Kind::Direct { .. } => return times.iter().map(|&t| self.at(t)).collect(),
        };
        let m = table.monodromy();
        let mut power_n = 0u64;
        let mut power = Operator::identity(m.dim());
        let mut since_fix = 0u64;
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            if !(t >= 0.0) {
                return Err(Error::invalid("t", "propagator times must be >= 0"));
            }
            let (n, s, rest) = split_time(t, table.period, table.phases());
            let gap = n - power_n;
            if gap <= 64 {
                for _ in 0..gap {
                    power = m * &power;
                    since_fix += 1;
                    if since_fix >= REUNITARIZE_EVERY {
                        power = reunitarize(&power);
                        since_fix = 0;
                    }
                }
            } else {
                power = reunitarize(&(&reunitarize(&m.powi(gap)) * &power));
                since_fix = 0;
            }
            power_n = n;
            let mut u = &table.partials[s] * &power;
            if rest > 0.0 {
                let t0 = s as f64 * table.period / table.phases() as f64;
                u = &magnus_segment(&self.h, t0, t0 + rest, rest_substeps(table, rest))? * &u;
            }
            out.push(u);
        }
        Ok(out)
    }
}

fn rest_substeps(table: &PeriodTable, rest: f64) -> usize {
    let phase_len = table.period / table.phases() as f64;
    ((rest / phase_len) * table.substeps_per_phase as f64).ceil().max(1.0) as usize
}

/// Splits `t` into whole periods, whole phase slots and a remainder.
fn split_time(t: f64, period: f64, phases: usize) -> (u64, usize, f64) {
    let n = (t / period).floor();
    let mut frac = t - n * period;
    let slot = period / phases as f64;
    let mut s = (frac / slot).floor() as usize;
    let mut n = n as u64;
    if s >= phases {
        // rounding put `frac` at the period boundary
        n += 1;
        s = 0;
        frac = 0.0;
    }
    let mut rest = frac - s as f64 * slot;
    // snap remainders that are pure rounding noise
    if rest.abs() <= 1e-12 * period {
        rest = 0.0;
    }
    (n, s, rest.max(0.0))
}

/// Adaptive Dormand–Prince 5(4) integration of `dU/dt = −iH(t)U` from the
/// identity to `t_final`.
pub fn propagate_direct(h: &TimeDependentHamiltonian, t_final: f64, tol: f64) -> Result<Propagator> {
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::invalid("t_final", "must be finite and >= 0"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tol", "must be > 0"));
    }
    let mut checkpoints = vec![(0.0, Operator::identity(h.dim()))];
    if t_final > 0.0 {
        dopri5(h, 0.0, t_final, Operator::identity(h.dim()), tol, Some(&mut checkpoints))?;
    }
    Ok(Propagator { h: h.clone(), kind: Kind::Direct { tol, checkpoints } })
}

const A21: f64 = 1.0 / 5.0;
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] =
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0];
const B5: [f64; 6] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
const E5: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const C5: [f64; 6] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0];

fn deriv(h: &TimeDependentHamiltonian, t: f64, u: &Operator) -> Result<Operator> {
    let ht = h.eval(t);
    if !ht.is_finite() {
        return Err(Error::NonFinite("Hamiltonian evaluation"));
    }
    Ok((&ht * u).scale(C64::new(0.0, -1.0)))
}

fn combo(u: &Operator, dt: f64, ks: &[&Operator], coeffs: &[f64]) -> Operator {
    let mut out = u.clone();
    for (k, c) in ks.iter().zip(coeffs) {
        if *c != 0.0 {
            out.add_scaled(C64::new(dt * c, 0.0), k);
        }
    }
    out
}

fn dopri5(
    h: &TimeDependentHamiltonian,
    t0: f64,
    t1: f64,
    mut u: Operator,
    tol: f64,
    mut checkpoints: Option<&mut Vec<(f64, Operator)>>,
) -> Result<(f64, Operator)> {
    let span = t1 - t0;
    let scale_h = (0..4)
        .map(|k| h.eval(t0 + span * k as f64 / 4.0).norm_frobenius())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut dt = (0.1 * tol.powf(0.2) / scale_h).min(span);
    let min_dt = 1e-14 * span.abs().max(1e-300);
    let mut t = t0;
    let mut k1 = deriv(h, t, &u)?;
    while t < t1 {
        if t + dt > t1 {
            dt = t1 - t;
        }
        let k2 = deriv(h, t + C5[1] * dt, &combo(&u, dt, &[&k1], &[A21]))?;
        let k3 = deriv(h, t + C5[2] * dt, &combo(&u, dt, &[&k1, &k2], &A3))?;
        let k4 = deriv(h, t + C5[3] * dt, &combo(&u, dt, &[&k1, &k2, &k3], &A4))?;
        let k5 = deriv(h, t + C5[4] * dt, &combo(&u, dt, &[&k1, &k2, &k3, &k4], &A5))?;
        let k6 = deriv(h, t + C5[5] * dt, &combo(&u, dt, &[&k1, &k2, &k3, &k4, &k5], &A6))?;
        let u_new = combo(&u, dt, &[&k1, &k2, &k3, &k4, &k5, &k6], &B5);
        let k7 = deriv(h, t + dt, &u_new)?;
        let err_op = combo(
            &Operator::zeros(u.dim()),
            dt,
            &[&k1, &k2, &k3, &k4, &k5, &k6, &k7],
            &E5,
        );
        // entries of a unitary are bounded by one, so absolute and relative
        // tolerances coincide up to a factor of two
        let err = err_op.max_abs() / tol;
        if !err.is_finite() {
            return Err(Error::NonFinite("propagator step"));
        }
        if err <= 1.0 {
            t += dt;
            u = u_new;
            k1 = k7;
            if u.unitarity_error() > 10.0 * tol {
                u = reunitarize(&u);
                k1 = deriv(h, t, &u)?;
            }
            if let Some(cp) = checkpoints.as_deref_mut() {
                cp.push((t, u.clone()));
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        dt *= factor;
        if dt < min_dt && t < t1 {
            return Err(Error::StepUnderflow { t, step: dt });
        }
    }
    Ok((t, u))
}

/// Fourth-order Magnus step count for one period, from a sampled bound on
/// `‖H‖`.
pub fn default_substeps(h: &TimeDependentHamiltonian, phases: usize) -> usize {
    let period = h.period();
    let norm = (0..64)
        .map(|k| h.eval(period * k as f64 / 64.0).norm_frobenius())
        .fold(0.0, f64::max);
    let per_period = (period * norm / MAGNUS_STEP_NORM).ceil() as usize;
    per_period.div_ceil(phases.max(1)).max(4)
}

/// One fourth-order Magnus step with two Gauss–Legendre nodes.
pub(crate) fn magnus_step(h: &TimeDependentHamiltonian, t: f64, dt: f64) -> Result<Operator> {
    let t1 = t + (0.5 - SQRT3_6) * dt;
    let t2 = t + (0.5 + SQRT3_6) * dt;
    let h1 = h.eval(t1);
    let h2 = h.eval(t2);
    // Ω = −i dt/2 (H1 + H2) − (√3 dt²/12)[H2, H1]
    let mut omega = (&h1 + &h2).scale(C64::new(0.0, -0.5 * dt));
    omega.add_scaled(C64::new(-(3f64.sqrt()) * dt * dt / 12.0, 0.0), &h2.commutator(&h1));
    expm(&omega)
}

/// Magnus-4 effective field for one step of a qubit field `H = ½f·σ`: the
/// step propagator is `exp(−i dt g·σ)`.
#[inline]
pub fn magnus_su2_field(f1: [f64; 3], f2: [f64; 3], dt: f64) -> [f64; 3] {
    let a = [0.5 * f1[0], 0.5 * f1[1], 0.5 * f1[2]];
    let b = [0.5 * f2[0], 0.5 * f2[1], 0.5 * f2[2]];
    // (b × a) term of the commutator [H2, H1]
    let cr = [a[2] * b[1] - a[1] * b[2], a[0] * b[2] - a[2] * b[0], a[1] * b[0] - a[0] * b[1]];
    let k = SQRT3_6 * dt;
    [
        0.5 * (a[0] + b[0]) + k * cr[0],
        0.5 * (a[1] + b[1]) + k * cr[1],
        0.5 * (a[2] + b[2]) + k * cr[2],
    ]
}

/// Qubit propagator over `[t0, t1]` with `steps` Magnus-4 steps on a field
/// function.
pub fn magnus_su2_segment<F: Fn(f64) -> [f64; 3]>(field: F, t0: f64, t1: f64, steps: usize) -> Su2 {
    let dt = (t1 - t0) / steps as f64;
    let mut u = Su2::IDENTITY;
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let g = magnus_su2_field(field(t + (0.5 - SQRT3_6) * dt), field(t + (0.5 + SQRT3_6) * dt), dt);
        u = Su2::exp_field(g, dt) * u;
    }
    u
}

/// Partial-period table `U(0 → sT/P)`, `s = 0..=P`, for a qubit field.
pub fn su2_period_table<F: Fn(f64) -> [f64; 3]>(
    field: F,
    period: f64,
    phases: usize,
    substeps_per_phase: usize,
) -> Vec<Su2> {
    let slot = period / phases as f64;
    let mut out = Vec::with_capacity(phases + 1);
    let mut u = Su2::IDENTITY;
    out.push(u);
    for s in 0..phases {
        let seg = magnus_su2_segment(&field, s as f64 * slot, (s + 1) as f64 * slot, substeps_per_phase);
        u = (seg * u).normalized();
        out.push(u);
    }
    out
}

fn magnus_segment(h: &TimeDependentHamiltonian, t0: f64, t1: f64, steps: usize) -> Result<Operator> {
    if let Some(field) = h.field() {
        return Ok(magnus_su2_segment(|t| field(t), t0, t1, steps).to_operator());
    }
    let dt = (t1 - t0) / steps as f64;
    let mut u = Operator::identity(h.dim());
    for k in 0..steps {
        u = &magnus_step(h, t0 + k as f64 * dt, dt)? * &u;
    }
    Ok(u)
}

/// Builds the stroboscopic table with `phases` slots and `substeps` Magnus
/// steps per period (rounded up to a multiple of `phases`).
pub fn period_table(
    h: &TimeDependentHamiltonian,
    phases: usize,
    substeps: Option<usize>,
) -> Result<PeriodTable> {
    if !h.is_periodic() {
        return Err(Error::Aperiodic);
    }
    if phases == 0 {
        return Err(Error::invalid("phases_per_period", "must be >= 1"));
    }
    let per_phase = match substeps {
        Some(n) => n.div_ceil(phases).max(1),
        None => default_substeps(h, phases),
    };
    let period = h.period();
    let slot = period / phases as f64;
    let mut partials = Vec::with_capacity(phases + 1);
    let mut u = Operator::identity(h.dim());
    partials.push(u.clone());
    for s in 0..phases {
        let seg = magnus_segment(h, s as f64 * slot, (s + 1) as f64 * slot, per_phase)?;
        u = &seg * &u;
        if !u.is_finite() {
            return Err(Error::NonFinite("period table"));
        }
        partials.push(u.clone());
    }
    Ok(PeriodTable { period, partials, substeps_per_phase: per_phase })
}

/// One-period propagator `U(T)` by fourth-order Magnus integration with
/// `substeps` fixed steps.
pub fn monodromy(h: &TimeDependentHamiltonian, substeps: usize) -> Result<Operator> {
    if !h.is_periodic() {
        return Err(Error::Aperiodic);
    }
    if substeps == 0 {
        return Err(Error::invalid("substeps", "must be >= 1"));
    }
    magnus_segment(h, 0.0, h.period(), substeps)
}

impl Propagator {
    pub fn stroboscopic(h: &TimeDependentHamiltonian, phases: usize, substeps: Option<usize>) -> Result<Self> {
        let table = period_table(h, phases, substeps)?;
        Ok(Propagator { h: h.clone(), kind: Kind::Stroboscopic(table) })
    }

    pub fn period_table(&self) -> Option<&PeriodTable> {
        match &self.kind {
            Kind::Stroboscopic(t) => Some(t),
            Kind::Direct { .. } => None,
        }
    }
}

/// Stroboscopic evaluation of `U(t)` at ascending `times`.
pub fn stroboscopic(
    h: &TimeDependentHamiltonian,
    times: &[f64],
    phases_per_period: usize,
) -> Result<Vec<Operator>> {
    Propagator::stroboscopic(h, phases_per_period, None)?.at_many(times)
}

/// Quasi-energies `ε ∈ (−π/T, π/T]` from the monodromy eigenphases, sorted.
pub fn quasi_energies(monodromy: &Operator, period: f64) -> Result<Vec<f64>> {
    if monodromy.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: monodromy.dim() });
    }
    let ev = crate::linalg::eigenvalues_2x2(monodromy);
    let mut q: Vec<f64> = ev.iter().map(|z| -z.arg() / period).collect();
    q.sort_by(|a, b| a.partial_cmp(b).expect("finite quasi-energies"));
    Ok(q)
}
