//! Refinement studies: time step, smoothing parameter, perturbation size
//! and weak-form residuals.

use mswave_core::dynamics::{self, IntegratorConfig, Outcome};
use mswave_core::madelung::{TestFunction, WeakResidualAccumulator, WeakResiduals};
use mswave_core::spectral::{sobolev_norm, ScalarField};
use mswave_core::state::SimState;
use mswave_core::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

/// Integrates to `cfg.t_end` and insists on normal completion.
pub fn final_state(initial: &SimState, cfg: &IntegratorConfig) -> Result<SimState> {
    let cfg = IntegratorConfig { diagnostics_every: 0, snapshot_every: 0, ..cfg.clone() };
    let tr = dynamics::run(initial, &cfg, &mut [])?;
    match tr.outcome {
        Outcome::Completed => Ok(tr.final_state),
        other => Err(Error::InvalidParameter(format!("run did not complete: {other:?}"))),
    }
}

fn l2_distance(a: &ScalarField, b: &ScalarField) -> f64 {
    a.sub(b).norm_l2()
}

/// Observed order between consecutive rows of `(h, error)`.
pub fn observed_orders(h: &[f64], err: &[f64]) -> Vec<f64> {
    h.windows(2)
        .zip(err.windows(2))
        .map(|(hh, ee)| (ee[0] / ee[1]).ln() / (hh[0] / hh[1]).ln())
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DtRow {
    pub dt: f64,
    /// `|u_dt(T) - u_ref(T)|_{L2}`.
    pub error: f64,
    /// Order relative to the previous row.
    pub order: Option<f64>,
}

/// Self-convergence of the stepper against a fine reference run.
pub fn dt_study(initial: &SimState, base: &IntegratorConfig, dts: &[f64], reference_dt: f64) -> Result<Vec<DtRow>> {
    let reference = final_state(initial, &IntegratorConfig { dt: reference_dt, ..base.clone() })?;
    let mut errors = Vec::new();
    for &dt in dts {
        let s = final_state(initial, &IntegratorConfig { dt, ..base.clone() })?;
        errors.push(l2_distance(&s.u, &reference.u));
    }
    let orders = observed_orders(dts, &errors);
    Ok(dts
        .iter()
        .zip(&errors)
        .enumerate()
        .map(|(i, (&dt, &error))| DtRow { dt, error, order: if i == 0 { None } else { Some(orders[i - 1]) } })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    /// `|u^eps(T) - u^{eps/2}(T)|_{L2}`.
    pub difference: f64,
    /// Previous difference over this one.
    pub ratio: Option<f64>,
}

/// Successive differences of the smoothed flow as `epsilon` is halved.
/// Runs every `epsilon` and finally `epsilon_last / 2`.
pub fn epsilon_study(initial: &SimState, base: &IntegratorConfig, epsilons: &[f64]) -> Result<Vec<EpsilonRow>> {
    let mut all: Vec<f64> = epsilons.to_vec();
    if let Some(&last) = epsilons.last() {
        all.push(0.5 * last);
    }
    let mut finals = Vec::new();
    for &eps in &all {
        let mut s = initial.clone();
        s.epsilon = eps;
        finals.push(final_state(&s, &IntegratorConfig { force_smoothing: true, ..base.clone() })?);
    }
    let mut rows: Vec<EpsilonRow> = Vec::new();
    for (i, &epsilon) in epsilons.iter().enumerate() {
        let difference = l2_distance(&finals[i].u, &finals[i + 1].u);
        let ratio = rows.last().map(|p| p.difference / difference);
        rows.push(EpsilonRow { epsilon, difference, ratio });
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbationRow {
    pub delta: f64,
    /// Distance of the final states in `H^2 x H^{3/2} x H^{1/2}`.
    pub separation: f64,
    /// `separation / (C delta)` for the fitted `C`.
    pub response: f64,
}

/// Distance between states in the norms of the well-posedness space.
pub fn state_distance(a: &SimState, b: &SimState) -> f64 {
    sobolev_norm(&a.u.sub(&b.u), 2.0) + sobolev_norm(&a.a.sub(&b.a), 1.5) + sobolev_norm(&a.at.sub(&b.at), 0.5)
}

/// Perturbs `u0` by `delta * p / |p|_{H^2}` and compares final states.
/// The constant is fitted as the geometric mean of `separation / delta`.
pub fn perturbation_study(
    initial: &SimState,
    direction: &ScalarField,
    base: &IntegratorConfig,
    deltas: &[f64],
) -> Result<(f64, Vec<PerturbationRow>)> {
    let norm = sobolev_norm(direction, 2.0);
    if !(norm > 0.0) {
        return Err(Error::InvalidParameter("perturbation direction vanishes".into()));
    }
    let unperturbed = final_state(initial, base)?;
    let mut seps = Vec::new();
    for &delta in deltas {
        let mut s = initial.clone();
        s.u = s.u.add(&direction.scale(Complex64::new(delta / norm, 0.0)));
        let out = final_state(&s, base)?;
        seps.push(state_distance(&out, &unperturbed));
    }
    let c = (seps.iter().zip(deltas).map(|(s, d)| (s / d).ln()).sum::<f64>() / deltas.len() as f64).exp();
    let rows = deltas
        .iter()
        .zip(&seps)
        .map(|(&delta, &separation)| PerturbationRow { delta, separation, response: separation / (c * delta) })
        .collect();
    Ok((c, rows))
}

/// Weak residuals of the trajectory sampled at every step.
pub fn weak_residuals(initial: &SimState, base: &IntegratorConfig, tests: &[TestFunction], tol_rel: f64) -> Result<WeakResiduals> {
    let cfg = IntegratorConfig { snapshot_every: 1, diagnostics_every: 0, ..base.clone() };
    let mut acc = WeakResidualAccumulator::new(tests.to_vec(), cfg.dt * (1.0 + 1e-6), tol_rel)?;
    let tr = dynamics::run(initial, &cfg, &mut [&mut acc])?;
    if tr.outcome != Outcome::Completed {
        return Err(Error::InvalidParameter(format!("run did not complete: {:?}", tr.outcome)));
    }
    acc.finish()
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakRow {
    pub dt: f64,
    pub continuity: Vec<f64>,
    pub momentum: Vec<f64>,
}

/// Weak residuals for each time step.
pub fn weak_study(initial: &SimState, base: &IntegratorConfig, tests: &[TestFunction], dts: &[f64], tol_rel: f64) -> Result<Vec<WeakRow>> {
    dts.iter()
        .map(|&dt| {
            let r = weak_residuals(initial, &IntegratorConfig { dt, ..base.clone() }, tests, tol_rel)?;
            Ok(WeakRow { dt, continuity: r.continuity, momentum: r.momentum })
        })
        .collect()
}
