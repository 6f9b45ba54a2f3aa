//! Scenario plans: validated parameters, a cost estimate, and execution into
//! a CSV table plus a JSON sidecar.

use std::f64::consts::PI;

use dressedsim::control::optimal_detuning;
use dressedsim::ensemble::{auto_horizon, coherence_curve, sampling_period};
use dressedsim::export::{coherence_table, CoherenceMeta, Table};
use dressedsim::floquet::{global_optimum, t2_app, t2_bar, DEFAULT_QUAD_ORDER};
use dressedsim::gates::{gate1q_infidelity, gate2q_scan};
use dressedsim::sensing::{clock_comparison, sensing_scan};
use dressedsim::{
    CoherenceOptions, ControlScheme, IonGateConfig, NoiseModel, SchemeVariant, T2Estimate,
};
use serde_json::{json, Value};

use crate::config::{Config, ConfigError, ConfigResult};

pub const SCENARIOS: [&str; 7] = ["coherence", "floquet", "optimum", "gate1q", "gate2q", "sensing", "clock"];

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_BUDGET: f64 = 1e12;
const DEFAULT_REALIZATIONS: usize = 2048;

#[derive(Debug, Clone)]
pub struct Plan {
    pub seed: u64,
    pub output_dir: Option<String>,
    /// Cost units above which `validate` warns.
    pub budget: f64,
    pub scenario: Scenario,
}

#[derive(Debug, Clone)]
pub enum Scenario {
    Coherence { scheme: ControlScheme, noise: NoiseModel, opts: CoherenceOptions },
    Floquet { omega2: f64, grid: Vec<f64>, noise: NoiseModel, quad_order: usize, simulate: Option<CoherenceOptions> },
    Optimum { sigma_eps: Vec<f64>, t2_star: f64, n_realizations: usize, simulate: Option<CoherenceOptions> },
    Gate1q { ratios: Vec<f64> },
    Gate2q { template: IonGateConfig, grid: Vec<f64> },
    Sensing { omega_s: f64, grid: Vec<f64>, noise: NoiseModel, opts: CoherenceOptions },
    Clock { grid: Vec<f64>, noise: NoiseModel, opts: CoherenceOptions, scaled: bool },
}

pub struct Outcome {
    pub table: Table,
    pub meta: Value,
    pub summary: String,
}

fn parse_variant(cfg: &Config, key: &str) -> ConfigResult<SchemeVariant> {
    match cfg.require_string(key)? {
        "single_drive" => Ok(SchemeVariant::SingleDrive),
        "double_drive" => Ok(SchemeVariant::DoubleDrive),
        "phase_modulated" => Ok(SchemeVariant::PhaseModulated),
        "circular_dressed" => Ok(SchemeVariant::CircularDressed),
        other => Err(cfg.error(
            key,
            format!("unknown variant `{other}` (single_drive, double_drive, phase_modulated, circular_dressed)"),
        )),
    }
}

fn count(cfg: &Config, key: &str, default: usize, min: usize) -> ConfigResult<usize> {
    let n = cfg.parse::<usize>(key)?.unwrap_or(default);
    if n < min {
        return Err(cfg.error(key, format!("must be >= {min}, got {n}")));
    }
    Ok(n)
}

fn noise_model(cfg: &Config, seed: u64) -> ConfigResult<NoiseModel> {
    let sigma_eps = cfg.real("noise.sigma_eps")?.ok_or_else(|| cfg.error("noise.sigma_eps", "required key is missing"))?;
    if sigma_eps < 0.0 {
        return Err(cfg.error("noise.sigma_eps", "must be >= 0"));
    }
    let n = count(cfg, "noise.n_realizations", DEFAULT_REALIZATIONS, 1)?;
    let sigma_delta = match (cfg.contains("noise.t2_star"), cfg.contains("noise.sigma_delta")) {
        (true, true) => return Err(cfg.error("noise.sigma_delta", "conflicts with `noise.t2_star`; give one of the two")),
        (true, false) => 2f64.sqrt() / cfg.require_positive("noise.t2_star")?,
        (false, true) => {
            let s = cfg.real("noise.sigma_delta")?.unwrap_or(0.0);
            if s < 0.0 {
                return Err(cfg.error("noise.sigma_delta", "must be >= 0"));
            }
            s
        }
        (false, false) => return Err(cfg.error("noise.t2_star", "required key is missing")),
    };
    NoiseModel::new(sigma_delta, sigma_eps, n, seed).map_err(|e| ConfigError::new(e.to_string()))
}

fn coherence_options(cfg: &Config) -> ConfigResult<CoherenceOptions> {
    let defaults = CoherenceOptions::default();
    Ok(CoherenceOptions {
        phases_per_period: count(cfg, "coherence.phases_per_period", defaults.phases_per_period, 1)?,
        max_periods: count(cfg, "coherence.max_periods", defaults.max_periods, 1)?,
        magnus_step_norm: defaults.magnus_step_norm,
        horizon: cfg.positive("coherence.horizon")?,
        max_doublings: count(cfg, "coherence.max_doublings", defaults.max_doublings, 0)?,
    })
}

fn scheme(cfg: &Config) -> ConfigResult<ControlScheme> {
    let variant = parse_variant(cfg, "scheme.variant")?;
    let omega1 = cfg.require_frequency("scheme.omega1")?;
    let c = cfg.real("scheme.cross_corr")?.unwrap_or(1.0);
    let phase = cfg.real("scheme.phase")?.unwrap_or(0.0);
    let omega2 = if variant == SchemeVariant::SingleDrive { 0.0 } else { cfg.require_frequency("scheme.omega2")? };
    let mod_freq = match cfg.frequency("scheme.mod_freq")? {
        Some(w) => w,
        None => optimal_detuning(variant, omega1, omega2, c).map_err(|e| cfg.error("scheme.omega1", e.to_string()))?,
    };
    ControlScheme::new(variant, omega1, omega2, mod_freq)
        .and_then(|s| s.with_cross_corr(c))
        .and_then(|s| s.with_phase(phase))
        .map_err(|e| ConfigError::new(format!("scheme: {e}")))
}

impl Plan {
    pub fn from_config(cfg: &Config, seed_override: Option<u64>) -> ConfigResult<Plan> {
        let name = cfg.require_string("scenario")?;
        let seed = match seed_override {
            Some(s) => {
                cfg.parse::<u64>("seed")?;
                s
            }
            None => cfg.parse::<u64>("seed")?.unwrap_or(DEFAULT_SEED),
        };
        let output_dir = cfg.string("output_dir")?.map(str::to_string);
        let budget = cfg.positive("budget")?.unwrap_or(DEFAULT_BUDGET);
        let scenario = match name {
            "coherence" => Scenario::Coherence {
                scheme: scheme(cfg)?,
                noise: noise_model(cfg, seed)?,
                opts: coherence_options(cfg)?,
            },
            "floquet" => {
                let simulate = cfg.boolean("floquet.simulate")?.unwrap_or(false);
                let opts = coherence_options(cfg)?;
                Scenario::Floquet {
                    omega2: cfg.require_frequency("floquet.omega2")?,
                    grid: cfg.require_frequency_grid("grid.omega1")?,
                    noise: noise_model(cfg, seed)?,
                    quad_order: count(cfg, "floquet.quad_order", DEFAULT_QUAD_ORDER, 9)?,
                    simulate: simulate.then_some(opts),
                }
            }
            "optimum" => {
                let sigma_eps = match (cfg.contains("noise.sigma_eps"), cfg.contains("grid.sigma_eps")) {
                    (true, true) => {
                        return Err(cfg.error("grid.sigma_eps", "conflicts with `noise.sigma_eps`; give one of the two"))
                    }
                    (false, true) => cfg.require_grid("grid.sigma_eps")?,
                    _ => vec![cfg.require_positive("noise.sigma_eps")?],
                };
                let simulate = cfg.boolean("optimum.simulate")?.unwrap_or(true);
                let opts = coherence_options(cfg)?;
                Scenario::Optimum {
                    sigma_eps,
                    t2_star: cfg.require_positive("noise.t2_star")?,
                    n_realizations: count(cfg, "noise.n_realizations", DEFAULT_REALIZATIONS, 1)?,
                    simulate: simulate.then_some(opts),
                }
            }
            "gate1q" => {
                let ratios = cfg.require_grid("grid.ratio")?;
                if let Some(r) = ratios.iter().find(|r| **r < 1.0) {
                    return Err(cfg.error("grid.ratio", format!("ratios must be >= 1, got {r}")));
                }
                Scenario::Gate1q { ratios }
            }
            "gate2q" => {
                let nu = cfg.frequency("gate.nu")?.unwrap_or(2.0 * PI * 98.8e3);
                let eta = cfg.real("gate.eta")?.unwrap_or(0.033);
                let nbar = cfg.real("gate.nbar")?.unwrap_or(0.6);
                let grid = cfg.require_frequency_grid("grid.omega2")?;
                let mut template = IonGateConfig::new(nu, eta, grid[0], 0, nbar)
                    .map_err(|e| ConfigError::new(format!("gate: {e}")))?;
                template.n_fock = count(cfg, "gate.n_fock", IonGateConfig::DEFAULT_N_FOCK, 10)?;
                template.steps_per_period = count(cfg, "gate.steps_per_period", template.steps_per_period, 8)?;
                let upper = template.nu + template.omega1;
                if let Some(w) = grid.iter().find(|w| **w >= upper) {
                    return Err(cfg.error("grid.omega2", format!("{w:e} rad/s is not below nu + omega1 = {upper:e}")));
                }
                Scenario::Gate2q { template, grid }
            }
            "sensing" => {
                let omega_s = cfg.require_frequency("sensing.omega_s")?;
                let grid = cfg.require_frequency_grid("grid.omega1")?;
                if let Some(w) = grid.iter().find(|w| **w >= omega_s) {
                    return Err(cfg.error("grid.omega1", format!("{w:e} rad/s is not below omega_s = {omega_s:e}")));
                }
                Scenario::Sensing { omega_s, grid, noise: noise_model(cfg, seed)?, opts: coherence_options(cfg)? }
            }
            "clock" => Scenario::Clock {
                grid: cfg.require_frequency_grid("grid.omega1")?,
                noise: noise_model(cfg, seed)?,
                opts: coherence_options(cfg)?,
                scaled: cfg.boolean("clock.scaled")?.unwrap_or(true),
            },
            other => {
                return Err(cfg.error("scenario", format!("unknown scenario `{other}` (one of {})", SCENARIOS.join(", "))))
            }
        };
        cfg.reject_unused(name)?;
        Ok(Plan { seed, output_dir, budget, scenario })
    }

    pub fn name(&self) -> &'static str {
        match self.scenario {
            Scenario::Coherence { .. } => "coherence",
            Scenario::Floquet { .. } => "floquet",
            Scenario::Optimum { .. } => "optimum",
            Scenario::Gate1q { .. } => "gate1q",
            Scenario::Gate2q { .. } => "gate2q",
            Scenario::Sensing { .. } => "sensing",
            Scenario::Clock { .. } => "clock",
        }
    }

    /// Number of CSV rows the run will produce, when known in advance.
    pub fn rows(&self) -> Option<usize> {
        match &self.scenario {
            Scenario::Coherence { .. } => None,
            Scenario::Floquet { grid, .. }
            | Scenario::Gate2q { grid, .. }
            | Scenario::Sensing { grid, .. }
            | Scenario::Clock { grid, .. } => Some(grid.len()),
            Scenario::Optimum { sigma_eps, .. } => Some(sigma_eps.len()),
            Scenario::Gate1q { ratios } => Some(ratios.len()),
        }
    }

    /// Rough work estimate in elementary propagation steps.
    pub fn cost(&self) -> f64 {
        fn ensemble(scheme: &ControlScheme, noise: &NoiseModel, opts: &CoherenceOptions) -> f64 {
            let horizon = opts.horizon.unwrap_or_else(|| auto_horizon(scheme, noise));
            let periods = (horizon / sampling_period(scheme)).min(opts.max_periods as f64).max(1.0);
            noise.n_realizations as f64 * periods * opts.phases_per_period as f64
        }
        match &self.scenario {
            Scenario::Coherence { scheme, noise, opts } => ensemble(scheme, noise, opts),
            Scenario::Floquet { omega2, grid, noise, quad_order, simulate } => grid
                .iter()
                .map(|&w| {
                    let quad = (quad_order * quad_order * 18 * 18 * 18) as f64;
                    let sim = match (simulate, ControlScheme::circular(w, *omega2)) {
                        (Some(o), Ok(s)) => ensemble(&s, noise, o),
                        _ => 0.0,
                    };
                    quad + sim
                })
                .sum(),
            Scenario::Optimum { sigma_eps, t2_star, n_realizations, simulate } => sigma_eps
                .iter()
                .map(|&se| match (simulate, global_optimum(se, *t2_star)) {
                    (Some(o), Ok(opt)) => {
                        let noise = NoiseModel::new(2f64.sqrt() / t2_star, se, *n_realizations, self.seed);
                        match (ControlScheme::circular(opt.omega1, opt.omega2), noise) {
                            (Ok(s), Ok(n)) => ensemble(&s, &n, o),
                            _ => 0.0,
                        }
                    }
                    _ => 1.0,
                })
                .sum(),
            Scenario::Gate1q { ratios } => ratios.iter().map(|r| 6.0 * 2000.0 * r).sum(),
            Scenario::Gate2q { template, grid } => {
                let dim = (4 * template.n_fock) as f64;
                let periods = 1.04 * template.t_gate_hint / template.drive_period();
                2.0 * grid.len() as f64 * periods * template.steps_per_period as f64 * dim.powi(3)
            }
            Scenario::Sensing { omega_s, grid, noise, opts } => {
                let reference = ControlScheme::single_drive(*omega_s).map(|s| ensemble(&s, noise, opts)).unwrap_or(0.0);
                reference
                    + grid
                        .iter()
                        .map(|&w| {
                            ControlScheme::circular(w, omega_s - w).map(|s| 2.0 * ensemble(&s, noise, opts)).unwrap_or(0.0)
                        })
                        .sum::<f64>()
            }
            Scenario::Clock { grid, noise, opts, .. } => grid
                .iter()
                .map(|&w| {
                    ControlScheme::circular(w, 2f64.sqrt() * w).map(|s| 2.0 * ensemble(&s, noise, opts)).unwrap_or(0.0)
                })
                .sum(),
        }
    }

    pub fn run(&self) -> dressedsim::Result<Outcome> {
        match &self.scenario {
            Scenario::Coherence { scheme, noise, opts } => {
                let curve = coherence_curve(scheme, noise, opts)?;
                let summary = match curve.t2 {
                    T2Estimate::Crossed { t2 } => format!("T2 = {t2:.6e} s"),
                    T2Estimate::BeyondHorizon { horizon } => format!("T2 > {horizon:.6e} s (beyond horizon)"),
                };
                let meta = serde_json::to_value(CoherenceMeta::new(*scheme, *noise, &curve))?;
                Ok(Outcome { table: coherence_table(&curve), meta, summary })
            }
            Scenario::Floquet { omega2, grid, noise, quad_order, simulate } => {
                let mut header = vec!["omega1_rad_s", "t2_bar_s", "t2_app_s"];
                if simulate.is_some() {
                    header.push("t2_sim_s");
                }
                let mut table = Table::new(header);
                let t2_star = noise.t2_star();
                let mut best = (0.0, f64::NEG_INFINITY);
                for &w in grid {
                    let bar = t2_bar(w, *omega2, noise, *quad_order)?;
                    let app = if noise.sigma_eps > 0.0 { t2_app(w, *omega2, noise.sigma_eps, t2_star)? } else { f64::INFINITY };
                    let mut row = vec![w, bar, app];
                    if let Some(o) = simulate {
                        row.push(coherence_curve(&ControlScheme::circular(w, *omega2)?, noise, o)?.t2.lower_bound());
                    }
                    if bar > best.1 {
                        best = (w, bar);
                    }
                    table.push(row)?;
                }
                let summary = format!("max T2_bar = {:.6e} s at omega1 = {:.6e} rad/s", best.1, best.0);
                let meta = json!({ "omega2_rad_s": omega2, "noise": noise, "seed": noise.seed, "quad_order": quad_order });
                Ok(Outcome { table, meta, summary })
            }
            Scenario::Optimum { sigma_eps, t2_star, n_realizations, simulate } => {
                let mut table = Table::new([
                    "sigma_eps",
                    "omega1_rad_s",
                    "omega2_rad_s",
                    "t2_app_s",
                    "t2_sim_s",
                    "t2_single_drive_s",
                    "omega1_single_drive_rad_s",
                ]);
                let mut rows = Vec::new();
                for &se in sigma_eps {
                    let opt = global_optimum(se, *t2_star)?;
                    let sim = match simulate {
                        Some(o) => {
                            let noise = NoiseModel::from_t2_star(*t2_star, se, *n_realizations, self.seed)?;
                            let t2 = coherence_curve(&ControlScheme::circular(opt.omega1, opt.omega2)?, &noise, o)?.t2;
                            Some(t2)
                        }
                        None => None,
                    };
                    table.push(vec![
                        se,
                        opt.omega1,
                        opt.omega2,
                        opt.t2,
                        sim.map_or(f64::NAN, |t| t.lower_bound()),
                        opt.single_drive.t2,
                        opt.single_drive.omega1,
                    ])?;
                    rows.push(json!({ "optimum": opt, "simulated_t2": sim }));
                }
                let first = &table.rows()[0];
                let mut summary = format!("T2app°/T2* = {:.4}", first[3] / t2_star);
                if simulate.is_some() {
                    summary.push_str(&format!(", simulated T2°/T2* = {:.4}", first[4] / t2_star));
                }
                summary.push_str(&format!(
                    ", Ω1°·T2* = {:.4}, Ω2°·T2* = {:.4} (sigma_eps = {})",
                    first[1] * t2_star,
                    first[2] * t2_star,
                    first[0]
                ));
                let meta = json!({ "t2_star_s": t2_star, "n_realizations": n_realizations, "seed": self.seed, "rows": rows });
                Ok(Outcome { table, meta, summary })
            }
            Scenario::Gate1q { ratios } => {
                let ns = [1u32, 2, 4];
                let mut table = Table::new([
                    "ratio",
                    "infidelity_dd_n1",
                    "infidelity_dd_n2",
                    "infidelity_dd_n4",
                    "infidelity_circ_n1",
                    "infidelity_circ_n2",
                    "infidelity_circ_n4",
                ]);
                let mut worst_circ = 0.0f64;
                for &r in ratios {
                    let mut row = vec![r];
                    for variant in [SchemeVariant::DoubleDrive, SchemeVariant::CircularDressed] {
                        for &n in &ns {
                            row.push(gate1q_infidelity(r, n, variant)?);
                        }
                    }
                    worst_circ = worst_circ.max(row[4..].iter().cloned().fold(0.0, f64::max));
                    table.push(row)?;
                }
                let summary = format!("worst circular infidelity = {worst_circ:.3e}");
                Ok(Outcome { table, meta: json!({ "n": ns }), summary })
            }
            Scenario::Gate2q { template, grid } => {
                let rows = gate2q_scan(template, grid)?;
                let mut table = Table::new(["omega2_rad_s", "infidelity_s0", "infidelity_s1"]);
                for r in &rows {
                    table.push(vec![r.omega2, r.infidelity_s0, r.infidelity_s1])?;
                }
                let min = |f: fn(&dressedsim::gates::Gate2qRow) -> f64| {
                    rows.iter().min_by(|a, b| f(a).total_cmp(&f(b))).expect("non-empty grid")
                };
                let (s0, s1) = (min(|r| r.infidelity_s0), min(|r| r.infidelity_s1));
                let summary = format!(
                    "min infidelity s=0: {:.4e} at {:.4e} rad/s; s=1: {:.4e} at {:.4e} rad/s; ratio {:.2}",
                    s0.infidelity_s0,
                    s0.omega2,
                    s1.infidelity_s1,
                    s1.omega2,
                    s0.infidelity_s0 / s1.infidelity_s1
                );
                Ok(Outcome { table, meta: json!({ "cfg": template }), summary })
            }
            Scenario::Sensing { omega_s, grid, noise, opts } => {
                let scan = sensing_scan(*omega_s, grid, noise, opts)?;
                let mut table = Table::new(["omega1_rad_s", "gain_circular", "gain_doubledrive"]);
                for r in &scan.rows {
                    table.push(vec![r.omega1, r.gain_circular.value, r.gain_double_drive.value])?;
                }
                let (c, d) = (scan.best_circular(), scan.best_double_drive());
                let summary = format!(
                    "best gain circular {:.3} at {:.4e} rad/s, double drive {:.3} at {:.4e} rad/s",
                    c.gain_circular.value, c.omega1, d.gain_double_drive.value, d.omega1
                );
                let meta = json!({ "noise": noise, "seed": noise.seed, "scan": scan });
                Ok(Outcome { table, meta, summary })
            }
            Scenario::Clock { grid, noise, opts, scaled } => {
                let cmp = clock_comparison(noise, grid, opts)?;
                let header = if *scaled {
                    ["omega1_scaled", "t2_scaled_dd", "t2_scaled_circ"]
                } else {
                    ["omega1_rad_s", "t2_dd_s", "t2_circ_s"]
                };
                let mut table = Table::new(header);
                for row in cmp.table(*scaled) {
                    table.push(row.to_vec())?;
                }
                let summary = format!(
                    "optimal T2 ratio circular/double drive = {:.3} (Ω1 = {:.4e} vs {:.4e} rad/s)",
                    cmp.ratio, cmp.rows[cmp.best_circular].omega1, cmp.rows[cmp.best_double_drive].omega1
                );
                let meta = json!({ "noise": noise, "seed": noise.seed, "scaled": scaled, "comparison": cmp });
                Ok(Outcome { table, meta, summary })
            }
        }
    }
}
