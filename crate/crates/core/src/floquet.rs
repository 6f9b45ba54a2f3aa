//! Floquet perturbation theory for the circular drive in the second frame.
//!
//! The periodic Hamiltonian `H⁽⁰⁾ + Σ e^{−imΩ̃1t}V⁽ᵐ⁾` is lifted to a truncated
//! extended (Sambe) space, where Rayleigh–Schrödinger theory gives the
//! noise-shifted quasi-energies of the two `m = 0` levels. The variance of
//! their gap over Gaussian `(δ, ε)` defines the coherence-time proxy
//! `T̄2 = √2/√Var(ΔE)`.

use ndarray::{s, Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{doubly_rotating_fourier, ControlScheme, NoiseModel, NoiseRealization, TimeDependentHamiltonian};
use crate::error::{Error, Result};
use crate::linalg::{Operator, C64, ONE};
use crate::optimize::nelder_mead;
use crate::quadrature::NormalRule;

/// Relative threshold (in units of `Ω̃1`) for degenerate `|z|` and small
/// perturbation denominators.
pub const DEGENERACY_REL: f64 = 1e-9;
pub const DEFAULT_QUAD_ORDER: usize = 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FloquetConfig {
    /// Perturbation order `K`, 1 to 4.
    pub order: usize,
    /// Highest harmonic `h` present in the Fourier decomposition.
    pub harmonic: usize,
    /// Dimension of the physical Hilbert space.
    pub dim_h: usize,
}

impl Default for FloquetConfig {
    fn default() -> Self {
        FloquetConfig { order: 4, harmonic: 2, dim_h: 2 }
    }
}

impl FloquetConfig {
    pub fn new(order: usize, harmonic: usize) -> Result<Self> {
        if !(1..=4).contains(&order) {
            return Err(Error::invalid("order", "perturbation order must be between 1 and 4"));
        }
        if harmonic == 0 {
            return Err(Error::invalid("harmonic", "must be >= 1"));
        }
        Ok(FloquetConfig { order, harmonic, dim_h: 2 })
    }

    /// Largest photon index kept: `h·⌊K/2⌋`.
    pub fn max_photon(&self) -> i32 {
        (self.harmonic * (self.order / 2)) as i32
    }

    pub fn n_blocks(&self) -> usize {
        1 + 2 * self.harmonic * (self.order / 2)
    }

    /// `dim_H · (1 + 2h⌊K/2⌋)`
    pub fn truncation_dim(&self) -> usize {
        self.dim_h * self.n_blocks()
    }

    /// Extended-space indices of the `m = 0` pair (lower, upper).
    pub fn middle_levels(&self) -> (usize, usize) {
        let a = self.max_photon() as usize;
        (2 * a, 2 * a + 1)
    }
}

#[derive(Clone, Debug)]
pub struct FloquetModel {
    pub u0: Operator,
    pub z: C64,
    pub mod_freq: f64,
    /// Full extended-space Hamiltonian.
    pub h_f: Operator,
    /// Unperturbed diagonal energies.
    pub e0: Vec<f64>,
    /// `H_F` minus its unperturbed diagonal.
    pub perturbation: Array2<C64>,
    pub config: FloquetConfig,
}

/// `U0 = (1/√2)[[z/|z|, −z/|z|], [1, 1]]`, which maps `H⁽⁰⁾` to `−½|z|σz`.
pub fn unperturbed_basis(z: C64) -> Operator {
    let p = z / z.norm();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Operator::from_rows([[p * r, -p * r], [ONE * r, ONE * r]])
}

/// Assembles the truncated extended-space Hamiltonian. Block `(a, b)` holds
/// `V′⁽ᵃ⁻ᵇ⁾`-type couplings and diagonal blocks `H′⁽⁰⁾ + V′⁽⁰⁾ + mΩ̃1` for
/// `m = +M … −M`.
pub fn build_floquet_hamiltonian(h: &TimeDependentHamiltonian, cfg: FloquetConfig) -> Result<FloquetModel> {
    let series = h.fourier().ok_or(Error::invalid("components", "Fourier decomposition required"))?;
    if h.dim() != 2 || cfg.dim_h != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: h.dim() });
    }
    if series.harmonic() as usize > cfg.harmonic {
        return Err(Error::invalid("harmonic", "config harmonic below the decomposition's"));
    }
    let omega = series.omega;
    let h0 = &series.static_part;
    if h0.get(0, 0).norm() > 1e-12 * omega || h0.get(1, 1).norm() > 1e-12 * omega {
        return Err(Error::invalid("components", "static part must be off-diagonal"));
    }
    let z = h0.get(0, 1) * -2.0;
    let z_min = DEGENERACY_REL * omega;
    if z.norm() <= z_min {
        return Err(Error::DegenerateBasis { z_abs: z.norm(), z_min });
    }
    let u0 = unperturbed_basis(z);
    let u0d = u0.dag();
    let prime = |v: &Operator| &(&u0d * v) * &u0;
    let h0p = prime(h0);
    let zero = Operator::zeros(2);
    let vp = |m: i32| series.component(m).map(prime).unwrap_or_else(|| zero.clone());

    let nb = cfg.n_blocks();
    let dim = cfg.truncation_dim();
    let mmax = cfg.max_photon();
    let mut hf = Array2::<C64>::zeros((dim, dim));
    let mut e0 = vec![0.0; dim];
    let v0 = vp(0);
    for a in 0..nb {
        let ma = (mmax - a as i32) as f64;
        for b in 0..nb {
            let k = b as i32 - a as i32;
            let block = if k == 0 {
                let mut d = &h0p + &v0;
                d.add_scaled(C64::new(ma * omega, 0.0), &Operator::identity(2));
                d
            } else if k.unsigned_abs() as usize <= cfg.harmonic {
                vp(-k)
            } else {
                continue;
            };
            hf.slice_mut(s![2 * a..2 * a + 2, 2 * b..2 * b + 2]).assign(block.as_array());
        }
        e0[2 * a] = h0p.get(0, 0).re + ma * omega;
        e0[2 * a + 1] = h0p.get(1, 1).re + ma * omega;
    }
    let mut perturbation = hf.clone();
    for (i, e) in e0.iter().enumerate() {
        perturbation[[i, i]] -= C64::new(*e, 0.0);
    }
    Ok(FloquetModel {
        u0,
        z,
        mod_freq: omega,
        h_f: Operator::from_array(hf)?,
        e0,
        perturbation,
        config: cfg,
    })
}

impl FloquetModel {
    /// Energy corrections `E_n^(k)` for `k = 0..=K`.
    pub fn corrections(&self, n: usize) -> Result<Vec<f64>> {
        let v = &self.perturbation;
        let dim = self.e0.len();
        let gap_min = DEGENERACY_REL * self.mod_freq;
        let mut d = Array1::<C64>::zeros(dim);
        for m in 0..dim {
            if m == n {
                continue;
            }
            let enm = self.e0[n] - self.e0[m];
            if enm.abs() < gap_min {
                return Err(Error::NearDegenerate { n, m, gap: enm });
            }
            d[m] = C64::new(1.0 / enm, 0.0);
        }
        let row = v.row(n).to_owned();
        let col = v.column(n).to_owned();
        let vr = &row * &d;
        let vc = &d * &col;

        let e1 = v[[n, n]].re;
        let e2 = row.dot(&vc).re;
        let s2sq = vr.dot(&vc).re;
        let v_vc = v.dot(&vc);
        let e3 = vr.dot(&v_vc).re - e1 * s2sq;
        let d_v_vc = &d * &v_vc;
        let s4a = vr.dot(&v.dot(&d_v_vc)).re;
        let d2col = &(&d * &d) * &col;
        let s4c = vr.dot(&v.dot(&d2col)).re;
        let s4d: f64 = (0..dim).map(|m| col[m].norm_sqr() * d[m].re.powi(3)).sum();
        let e4 = s4a - e2 * s2sq - 2.0 * e1 * s4c + e1 * e1 * s4d;

        let all = [self.e0[n], e1, e2, e3, e4];
        Ok(all[..=self.config.order].to_vec())
    }

    pub fn energy(&self, n: usize) -> Result<f64> {
        Ok(self.corrections(n)?.iter().sum())
    }
}

/// Gap between the perturbed `m = 0` quasi-energies, upper minus lower, so
/// the noiseless value is `|z|`.
pub fn perturbed_gap(model: &FloquetModel) -> Result<f64> {
    let (lo, hi) = model.config.middle_levels();
    Ok(model.energy(hi)? - model.energy(lo)?)
}

/// Perturbed gap for one circular-drive noise realization.
pub fn gap_for(scheme: &ControlScheme, noise: NoiseRealization, cfg: FloquetConfig) -> Result<f64> {
    let h = doubly_rotating_fourier(scheme, noise)?;
    perturbed_gap(&build_floquet_hamiltonian(&h, cfg)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapStatistics {
    pub mean_gap: f64,
    pub var_gap: f64,
    /// `√2/√Var(ΔE)`; infinite when the variance vanishes.
    pub t2_bar: f64,
}

/// Mean and variance of the perturbed gap over independent Gaussian `δ` and
/// `ε`, by a tensor Gauss–Hermite rule of `quad_order` nodes per axis.
pub fn gap_variance(scheme: &ControlScheme, noise: &NoiseModel, quad_order: usize) -> Result<GapStatistics> {
    if quad_order < 9 {
        return Err(Error::invalid("quad_order", "must be >= 9"));
    }
    let rule = NormalRule::new(quad_order)?;
    let cfg = FloquetConfig::default();
    let nodes: Vec<(f64, f64, f64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .flat_map(|(xd, wd)| {
            rule.nodes.iter().zip(&rule.weights).map(move |(xe, we)| (*xd, *xe, wd * we))
        })
        .collect();
    let gaps: Vec<Result<(f64, f64)>> = nodes
        .par_iter()
        .map(|&(xd, xe, w)| {
            let delta = noise.sigma_delta * xd;
            let eps = noise.sigma_eps * xe;
            gap_for(scheme, NoiseRealization::new(delta, eps), cfg)
                .map(|g| (g, w))
                .map_err(|e| Error::QuadratureNode { delta, eps, source: Box::new(e) })
        })
        .collect();
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for g in gaps {
        let (g, w) = g?;
        m1 += w * g;
        m2 += w * g * g;
    }
    let var_gap = (m2 - m1 * m1).max(0.0);
    let t2_bar = if var_gap > 0.0 { 2f64.sqrt() / var_gap.sqrt() } else { f64::INFINITY };
    Ok(GapStatistics { mean_gap: m1, var_gap, t2_bar })
}

/// `T̄2` for the circular drive at the optimal detuning.
pub fn t2_bar(omega1: f64, omega2: f64, noise: &NoiseModel, quad_order: usize) -> Result<f64> {
    let scheme = ControlScheme::circular(omega1, omega2)?;
    Ok(gap_variance(&scheme, noise, quad_order)?.t2_bar)
}

/// Closed-form scaling-ansatz coherence time
/// `2T*⁴Ω1²Ω2 / √(4T*⁴Ω2⁴ − 24T*²Ω2² + T*⁸Ω1⁸σε⁴ + 6T*⁴Ω1⁴σε² + 48)`.
pub fn t2_app(omega1: f64, omega2: f64, sigma_eps: f64, t2_star: f64) -> Result<f64> {
    let x1 = omega1 * t2_star;
    let x2 = omega2 * t2_star;
    let u4 = x1.powi(4) * sigma_eps * sigma_eps;
    let radicand = 4.0 * x2.powi(4) - 24.0 * x2 * x2 + u4 * u4 + 6.0 * u4 + 48.0;
    if !(radicand > 0.0) || !radicand.is_finite() {
        return Err(Error::invalid("t2_app", format!("radicand {radicand:e} is not positive")));
    }
    Ok(t2_star * 2.0 * x1 * x1 * x2 / radicand.sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleDriveReference {
    pub t2: f64,
    pub omega1: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalOptimum {
    pub t2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub single_drive: SingleDriveReference,
}

/// Maximizes `t2_app` over `(Ω1, Ω2)`.
///
/// Under the substitution `u = Ω1T*√σε`, `x = Ω2T*` the product `T̄2app·σε/T*`
/// depends on `(u, x)` only, so the search runs once in those variables:
/// a coarse grid followed by a simplex refinement.
pub fn global_optimum(sigma_eps: f64, t2_star: f64) -> Result<GlobalOptimum> {
    if !(sigma_eps > 0.0) || !(t2_star > 0.0) {
        return Err(Error::invalid("sigma_eps", "sigma_eps and t2_star must be > 0"));
    }
    let scaled = |u: f64, x: f64| -> f64 {
        let u4 = u.powi(4);
        2.0 * u * u * x / (4.0 * x.powi(4) - 24.0 * x * x + u4 * u4 + 6.0 * u4 + 48.0).sqrt()
    };
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 1..=80 {
        for j in 1..=80 {
            let (u, x) = (0.05 * i as f64, 0.05 * j as f64);
            let v = scaled(u, x);
            if v > best.0 {
                best = (v, u, x);
            }
        }
    }
    let refined = nelder_mead(
        |p: &[f64]| -scaled(p[0], p[1]),
        &[best.1, best.2],
        &[0.02, 0.02],
        1e-15,
        2000,
    )?;
    let (u, x) = (refined.x[0], refined.x[1]);
    let omega1 = u / (t2_star * sigma_eps.sqrt());
    let omega2 = x / t2_star;
    Ok(GlobalOptimum {
        t2: t2_app(omega1, omega2, sigma_eps, t2_star)?,
        omega1,
        omega2,
        single_drive: SingleDriveReference {
            t2: 1.25 * t2_star / sigma_eps.sqrt(),
            omega1: 0.6 / (t2_star * sigma_eps.sqrt()),
        },
    })
}
