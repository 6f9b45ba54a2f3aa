//! Thin wrappers over `argmin` for the derivative-free searches used here.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::goldensectionsearch::GoldenSectionSearch;
use argmin::solver::neldermead::NelderMead;

use crate::error::{Error, Result};

struct Cost<F>(F);

impl<F: Fn(&[f64]) -> f64> CostFunction for Cost<F> {
    type Param = Vec<f64>;
    type Output = f64;
    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, ArgminError> {
        Ok((self.0)(p))
    }
}

struct Cost1<F>(F);

impl<F: Fn(f64) -> f64> CostFunction for Cost1<F> {
    type Param = f64;
    type Output = f64;
    fn cost(&self, p: &f64) -> std::result::Result<f64, ArgminError> {
        Ok((self.0)(*p))
    }
}

fn fit_err(e: ArgminError) -> Error {
    Error::FitFailure(e.to_string())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
}

/// Nelder–Mead minimization from `x0` with an axis-aligned initial simplex
/// of edge `step`. Stops when the spread of simplex values falls below `ftol`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], ftol: f64, max_iter: u64) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    if x0.len() != step.len() || x0.is_empty() {
        return Err(Error::DimensionMismatch { expected: x0.len(), found: step.len() });
    }
    let mut simplex = vec![x0.to_vec()];
    for (i, s) in step.iter().enumerate() {
        let mut v = x0.to_vec();
        v[i] += s;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex).with_sd_tolerance(ftol).map_err(fit_err)?;
    let res = Executor::new(Cost(f), solver)
        .configure(|s| s.max_iters(max_iter))
        .run()
        .map_err(fit_err)?;
    let state = res.state();
    let x = state.get_best_param().cloned().ok_or_else(|| Error::FitFailure("no best point".into()))?;
    Ok(Minimum { x, value: state.get_best_cost(), iterations: state.get_iter() })
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section_min<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    let solver = GoldenSectionSearch::new(lo, hi)
        .map_err(fit_err)?
        .with_tolerance(tol)
        .map_err(fit_err)?;
    let res = Executor::new(Cost1(f), solver)
        .configure(|s| s.param(0.5 * (lo + hi)).max_iters(500))
        .run()
        .map_err(fit_err)?;
    let state = res.state();
    let x = *state.get_best_param().ok_or_else(|| Error::FitFailure("no best point".into()))?;
    Ok((x, state.get_best_cost()))
}
