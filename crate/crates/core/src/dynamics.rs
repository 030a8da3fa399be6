//! Time integration of the coupled Schrodinger / wave system and its
//! Yosida-regularized variant.
//!
//! One step is the symmetric composition `W(dt/2) S(dt) W(dt/2)` where `W`
//! advances `(A, At)` with `u` frozen and `S` advances `u` with `A` frozen.
//! Internally every substep works on Fourier coefficients; the public state
//! is converted at step entry and exit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, check_norms, BlowupThresholds, DiagnosticsRecord, Verdict};
use crate::error::{Error, Result};
use crate::par;
use crate::spectral::{real_fields, real_spectra, Grid, ScalarField, Spectrum, VectorField, VectorSpectrum};
use crate::state::{covariant_gradient_spectrum, SimState};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Number of Runge-Kutta stages in the Schrodinger remainder substep.
pub const RK_STAGES: usize = 4;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Strang,
    Lie,
}

/// Switches for individual coupling terms. Everything is on by default;
/// tests turn terms off to isolate exactly solvable pieces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Couplings {
    /// Hartree potential `phi u`.
    pub hartree: bool,
    /// Power nonlinearity `|u|^{2(gamma-1)} u`.
    pub power: bool,
    /// Vector potential in the covariant derivative.
    pub magnetic: bool,
    /// Current source in the wave equation.
    pub current_source: bool,
}

impl Default for Couplings {
    fn default() -> Self {
        Self { hartree: true, power: true, magnetic: true, current_source: true }
    }
}

impl Couplings {
    /// Free Schrodinger and free wave equations.
    pub fn none() -> Self {
        Self { hartree: false, power: false, magnetic: false, current_source: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Fraction of `dx / max(1, max|A|)` allowed for `|dt|`.
    pub cfl_guard: f64,
    pub couplings: Couplings,
    /// Run the smoothed code path even when `epsilon = 0`.
    pub force_smoothing: bool,
    pub blowup: BlowupThresholds,
    /// Steps between diagnostics records (0 = first and last only).
    pub diagnostics_every: usize,
    /// Steps between state callbacks (0 = first and last only).
    pub snapshot_every: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::Strang,
            cfl_guard: 1.0,
            couplings: Couplings::default(),
            force_smoothing: false,
            blowup: BlowupThresholds::default(),
            diagnostics_every: 1,
            snapshot_every: 0,
        }
    }
}

impl IntegratorConfig {
    pub fn with_dt(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt = {} must be positive", self.dt)));
        }
        if !self.t_end.is_finite() {
            return Err(Error::InvalidParameter("t_end must be finite".into()));
        }
        if !(self.cfl_guard > 0.0 && self.cfl_guard <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl_guard = {} must lie in (0, 1]",
                self.cfl_guard
            )));
        }
        Ok(())
    }

    /// Largest admissible `|dt|` for a vector potential of size `a_max`.
    pub fn dt_limit(&self, grid: &Grid, a_max: f64) -> f64 {
        self.cfl_guard * grid.dx() / a_max.max(1.0)
    }
}

/// Coefficient form of a state.
#[derive(Clone)]
struct Modes {
    u: Spectrum,
    a: VectorSpectrum,
    at: VectorSpectrum,
}

/// Per-configuration kernels.
struct Engine<'a> {
    grid: &'a Grid,
    gamma: f64,
    eps: f64,
    smooth: bool,
    couplings: Couplings,
}

fn mask_symbol(mask: &[bool], i: usize) -> Complex64 {
    if mask[i] {
        Complex64::new(1.0, 0.0)
    } else {
        ZERO
    }
}

fn vector_from(v: Vec<Spectrum>) -> VectorSpectrum {
    let [x, y, z] = <[Spectrum; 3]>::try_from(v).ok().expect("three components");
    VectorSpectrum::new([x, y, z]).expect("components share a grid")
}

fn field_from(v: Vec<ScalarField>) -> VectorField {
    let [x, y, z] = <[ScalarField; 3]>::try_from(v).ok().expect("three components");
    VectorField::new([x, y, z]).expect("components share a grid")
}

fn is_zero(s: &Spectrum) -> bool {
    s.values().iter().all(|c| *c == ZERO)
}

impl<'a> Engine<'a> {
    fn new(state: &'a SimState, cfg: &IntegratorConfig) -> Self {
        Self {
            grid: state.grid(),
            gamma: state.gamma,
            eps: state.epsilon,
            smooth: state.epsilon > 0.0 || cfg.force_smoothing,
            couplings: cfg.couplings,
        }
    }

    /// Dealiased `u`, projected and dealiased `(A, At)`.
    fn prepare(&self, state: &SimState) -> Modes {
        let mask = self.grid.mask();
        let u = state.u.spectrum().multiply(|i| mask_symbol(mask, i));
        let [ax, ay, az] = state.a.comps();
        let [tx, ty, tz] = state.at.comps();
        let mut s = real_spectra(&[ax, ay, az, tx, ty, tz]).into_iter();
        let mut take = || vector_from(s.by_ref().take(3).collect());
        let a = take().leray().multiply(|i| mask_symbol(mask, i));
        let at = take().leray().multiply(|i| mask_symbol(mask, i));
        Modes { u, a, at }
    }

    fn finish(&self, modes: &Modes, t: f64, gamma: f64, epsilon: f64) -> SimState {
        let u = modes.u.field();
        let [ax, ay, az] = modes.a.comps();
        let [tx, ty, tz] = modes.at.comps();
        let mut f = real_fields(&[ax, ay, az, tx, ty, tz]).into_iter();
        let a = field_from(f.by_ref().take(3).collect());
        let at = field_from(f.collect());
        SimState { t, u, a, at, gamma, epsilon }
    }

    fn yosida(&self, i: usize) -> f64 {
        1.0 / (1.0 + self.eps * self.grid.k2()[i])
    }

    /// Physical `A_eff` for the covariant derivative, or `None` when it vanishes.
    fn effective_potential(&self, a_hat: &VectorSpectrum) -> Option<VectorField> {
        if !self.couplings.magnetic || a_hat.comps().iter().all(is_zero) {
            return None;
        }
        let smoothed;
        let a_hat = if self.smooth {
            smoothed = a_hat.multiply(|i| Complex64::new(self.yosida(i), 0.0));
            &smoothed
        } else {
            a_hat
        };
        let [x, y, z] = a_hat.comps();
        Some(field_from(real_fields(&[x, y, z])))
    }

    /// Right-hand side of the non-kinetic remainder,
    /// `(i/2)(Delta_A u - Delta u) - i phi u - i N(u)`, in coefficients.
    fn remainder(&self, u_hat: &Spectrum, a_eff: Option<&VectorField>) -> Spectrum {
        let g = self.grid;
        let n3 = g.points();
        let mask = g.mask();
        let k2 = g.k2();
        let u = u_hat.field();
        let uv = u.values();

        let rho: Option<Vec<f64>> = (self.couplings.hartree || (self.couplings.power && !self.smooth))
            .then(|| par::collect_indexed(n3, |i| uv[i].norm_sqr()));

        // Potential V = phi (+ |u|^{2(gamma-1)} when unsmoothed).
        let mut potential: Option<Vec<f64>> = None;
        if self.couplings.hartree {
            let rho = rho.as_ref().unwrap();
            let mut rho_hat = ScalarField::from_values(g, rho.iter().map(|&r| Complex64::new(r, 0.0)).collect())
                .expect("grid-sized")
                .into_spectrum();
            rho_hat.multiply_in_place(|i| if k2[i] == 0.0 { ZERO } else { Complex64::new(1.0 / k2[i], 0.0) });
            let phi = rho_hat.into_field();
            potential = Some(phi.values().iter().map(|z| z.re).collect());
        }
        if self.couplings.power && !self.smooth {
            let rho = rho.as_ref().unwrap();
            let gm1 = self.gamma - 1.0;
            let p = potential.get_or_insert_with(|| vec![0.0; n3]);
            let square = self.gamma == 2.0;
            par::for_each_mut(p, |i, v| *v += if square { rho[i] } else { rho[i].powf(gm1) });
        }

        let cg_hat = a_eff.map(|a| covariant_gradient_spectrum(&u, u_hat, a));
        let cg = cg_hat.as_ref().map(|c| c.field());

        let mut phys = vec![ZERO; n3];
        par::for_each_mut(&mut phys, |i, out| {
            let mut acc = ZERO;
            if let (Some(a), Some(cg)) = (a_eff, cg.as_ref()) {
                let [ax, ay, az] = a.comps();
                let [cx, cy, cz] = cg.comps();
                acc += 0.5
                    * (cx.values()[i] * ax.values()[i].re
                        + cy.values()[i] * ay.values()[i].re
                        + cz.values()[i] * az.values()[i].re);
            }
            if let Some(p) = potential.as_ref() {
                acc -= I * p[i] * uv[i];
            }
            *out = acc;
        });
        let any_phys = a_eff.is_some() || potential.is_some();
        let mut out = if any_phys {
            ScalarField::from_values(g, phys).expect("grid-sized").into_spectrum()
        } else {
            Spectrum::zeros(g)
        };

        if let Some(cg_hat) = cg_hat.as_ref() {
            let [cx, cy, cz] = cg_hat.comps();
            let uh = u_hat.values();
            par::for_each_mut(out.values_mut(), |i, o| {
                let kd = g.derivative_vector(i);
                let div = I * (cx.values()[i] * kd[0] + cy.values()[i] * kd[1] + cz.values()[i] * kd[2]);
                *o += 0.5 * I * (div + k2[i] * uh[i]);
            });
        }

        if self.couplings.power && self.smooth {
            // Y (|Y u|^{2(gamma-1)} Y u)
            let yu = u_hat.multiply(|i| Complex64::new(self.yosida(i), 0.0)).into_field();
            let gm1 = self.gamma - 1.0;
            let nl = yu.map(|z| z * z.norm_sqr().powf(gm1));
            let nl_hat = nl.into_spectrum();
            let nv = nl_hat.values();
            par::for_each_mut(out.values_mut(), |i, o| *o -= I * self.yosida(i) * nv[i]);
        }

        par::for_each_mut(out.values_mut(), |i, o| {
            if !mask[i] {
                *o = ZERO;
            }
        });
        out
    }

    fn kinetic(&self, u_hat: &mut Spectrum, tau: f64) {
        let k2 = self.grid.k2();
        let mask = self.grid.mask();
        // u is dealiased, so only the kept modes need a phase.
        u_hat.multiply_in_place(|i| {
            if mask[i] {
                Complex64::from_polar(1.0, -0.5 * k2[i] * tau)
            } else {
                ZERO
            }
        });
    }

    /// Kinetic half step, RK4 on the remainder, kinetic half step.
    fn schrodinger(&self, u_hat: &mut Spectrum, a_eff: Option<&VectorField>, tau: f64) {
        self.kinetic(u_hat, 0.5 * tau);
        let idle = a_eff.is_none() && !self.couplings.hartree && !self.couplings.power;
        if !idle {
            let axpy = |base: &Spectrum, k: &Spectrum, h: f64| {
                let kv = k.values();
                let mut out = base.clone();
                par::for_each_mut(out.values_mut(), |i, o| *o += h * kv[i]);
                out
            };
            let k1 = self.remainder(u_hat, a_eff);
            let k2 = self.remainder(&axpy(u_hat, &k1, 0.5 * tau), a_eff);
            let k3 = self.remainder(&axpy(u_hat, &k2, 0.5 * tau), a_eff);
            let k4 = self.remainder(&axpy(u_hat, &k3, tau), a_eff);
            let (v1, v2, v3, v4) = (k1.values(), k2.values(), k3.values(), k4.values());
            let h = tau / 6.0;
            par::for_each_mut(u_hat.values_mut(), |i, o| {
                *o += h * (v1[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i]);
            });
        }
        self.kinetic(u_hat, 0.5 * tau);
    }

    /// Projected, dealiased (and smoothed) current source for a given `A`.
    fn source(&self, u_hat: &Spectrum, a_hat: &VectorSpectrum) -> Option<VectorSpectrum> {
        if !self.couplings.current_source || is_zero(u_hat) {
            return None;
        }
        let g = self.grid;
        let mask = g.mask();
        let u = u_hat.field();
        let cg_hat = match self.effective_potential(a_hat) {
            Some(a) => covariant_gradient_spectrum(&u, u_hat, &a),
            None => u_hat.gradient().multiply(|i| mask_symbol(mask, i)),
        };
        let cg = cg_hat.into_field();
        let uv = u.values();
        let j: Vec<ScalarField> = cg
            .comps()
            .iter()
            .map(|c| {
                let cv = c.values();
                let vals = par::collect_indexed(g.points(), |i| Complex64::new((uv[i].conj() * cv[i]).im, 0.0));
                ScalarField::from_values(g, vals).expect("grid-sized")
            })
            .collect();
        let j_hat = vector_from(real_spectra(&[&j[0], &j[1], &j[2]]));
        let smooth = self.smooth;
        Some(j_hat.leray().multiply(|i| {
            if !mask[i] {
                ZERO
            } else if smooth {
                Complex64::new(self.yosida(i), 0.0)
            } else {
                Complex64::new(1.0, 0.0)
            }
        }))
    }

    /// Wave substep with the source evaluated at the midpoint predictor
    /// `A + (tau/2) At`.
    fn wave(&self, modes: &mut Modes, tau: f64) {
        let source = if self.couplings.current_source {
            let mid = VectorSpectrum::new(std::array::from_fn(|c| {
                let a = modes.a.comps()[c].values();
                let at = modes.at.comps()[c].values();
                let vals = par::collect_indexed(a.len(), |i| a[i] + 0.5 * tau * at[i]);
                Spectrum::from_values(self.grid, vals).expect("grid-sized")
            }))
            .expect("components share a grid");
            self.source(&modes.u, &mid)
        } else {
            None
        };
        let (a, at) = wave_propagate(&modes.a, &modes.at, source.as_ref(), tau);
        modes.a = a;
        modes.at = at;
    }

    fn norms(&self, modes: &Modes) -> (f64, f64) {
        let k2 = self.grid.k2();
        let u_h2 = modes.u.weighted_energy(|i| (1.0 + k2[i]).powi(2)).sqrt();
        let a_h32 = modes.a.weighted_energy(|i| (1.0 + k2[i]).powf(1.5)).sqrt();
        (u_h2, a_h32)
    }
}

/// Exact per-mode solution of `A'' = -|k|^2 A + S` over time `tau` with
/// constant `S`. Mode 0 drifts freely and ignores `S`.
pub fn wave_propagate(
    a: &VectorSpectrum,
    at: &VectorSpectrum,
    source: Option<&VectorSpectrum>,
    tau: f64,
) -> (VectorSpectrum, VectorSpectrum) {
    let g = a.grid().clone();
    let k2 = g.k2();
    let n3 = g.points();
    // (cos, sin/w, -w sin, (1 - cos)/w^2) per mode
    let coef: Vec<[f64; 4]> = par::collect_indexed(n3, |i| {
        if k2[i] == 0.0 {
            return [1.0, tau, 0.0, 0.0];
        }
        let w = k2[i].sqrt();
        let (sn, cs) = (w * tau).sin_cos();
        let half = (0.5 * w * tau).sin();
        [cs, sn / w, -w * sn, 2.0 * half * half / k2[i]]
    });
    let mut out_a = Vec::with_capacity(3);
    let mut out_at = Vec::with_capacity(3);
    for c in 0..3 {
        let a0 = a.comps()[c].values();
        let a1 = at.comps()[c].values();
        let s = source.map(|s| s.comps()[c].values());
        let mut x = g_zeros(&g);
        let mut v = g_zeros(&g);
        par::for_each_mut(&mut x, |i, o| {
            let [cs, sw, _, q] = coef[i];
            *o = cs * a0[i] + sw * a1[i];
            if let Some(s) = s {
                if k2[i] != 0.0 {
                    *o += q * s[i];
                }
            }
        });
        par::for_each_mut(&mut v, |i, o| {
            let [cs, sw, ws, _] = coef[i];
            *o = ws * a0[i] + cs * a1[i];
            if let Some(s) = s {
                if k2[i] != 0.0 {
                    *o += sw * s[i];
                }
            }
        });
        out_a.push(Spectrum::from_values(&g, x).expect("grid-sized"));
        out_at.push(Spectrum::from_values(&g, v).expect("grid-sized"));
    }
    (vector_from(out_a), vector_from(out_at))
}

fn g_zeros(g: &Grid) -> Vec<Complex64> {
    vec![ZERO; g.points()]
}

fn check_cfl(state: &SimState, dt: f64, cfg: &IntegratorConfig) -> Result<()> {
    let limit = cfg.dt_limit(state.grid(), state.a.max_magnitude());
    if dt.abs() > limit {
        return Err(Error::Cfl { dt, limit });
    }
    Ok(())
}

fn check_finite(state: &SimState) -> Result<()> {
    if state.u.is_finite() && state.a.is_finite() && state.at.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { t: state.t })
    }
}

/// Advances `u` by `tau` with `(A, At)` frozen.
pub fn schrodinger_flow(state: &SimState, tau: f64, cfg: &IntegratorConfig) -> Result<SimState> {
    check_cfl(state, tau, cfg)?;
    let eng = Engine::new(state, cfg);
    let mut modes = eng.prepare(state);
    let a_eff = eng.effective_potential(&modes.a);
    eng.schrodinger(&mut modes.u, a_eff.as_ref(), tau);
    let out = eng.finish(&modes, state.t + tau, state.gamma, state.epsilon);
    check_finite(&out)?;
    Ok(out)
}

/// Advances `(A, At)` by `tau` with `u` frozen.
pub fn wave_flow(state: &SimState, tau: f64, cfg: &IntegratorConfig) -> Result<SimState> {
    let eng = Engine::new(state, cfg);
    let mut modes = eng.prepare(state);
    eng.wave(&mut modes, tau);
    let out = eng.finish(&modes, state.t + tau, state.gamma, state.epsilon);
    check_finite(&out)?;
    Ok(out)
}

/// Norms reported alongside a step for the blow-up check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepNorms {
    pub u_h2: f64,
    pub a_h32: f64,
}

fn step_inner(state: &SimState, dt: f64, cfg: &IntegratorConfig) -> Result<(SimState, StepNorms)> {
    check_cfl(state, dt, cfg)?;
    let eng = Engine::new(state, cfg);
    let mut modes = eng.prepare(state);
    match cfg.scheme {
        Scheme::Strang => {
            eng.wave(&mut modes, 0.5 * dt);
            let a_eff = eng.effective_potential(&modes.a);
            eng.schrodinger(&mut modes.u, a_eff.as_ref(), dt);
            eng.wave(&mut modes, 0.5 * dt);
        }
        Scheme::Lie => {
            eng.wave(&mut modes, dt);
            let a_eff = eng.effective_potential(&modes.a);
            eng.schrodinger(&mut modes.u, a_eff.as_ref(), dt);
        }
    }
    let (u_h2, a_h32) = eng.norms(&modes);
    let out = eng.finish(&modes, state.t + dt, state.gamma, state.epsilon);
    check_finite(&out)?;
    Ok((out, StepNorms { u_h2, a_h32 }))
}

/// One step of the configured composition; `dt` may be negative.
pub fn step(state: &SimState, dt: f64, cfg: &IntegratorConfig) -> Result<SimState> {
    step_inner(state, dt, cfg).map(|(s, _)| s)
}

/// Receives diagnostics and sampled states during [`run`].
pub trait DiagnosticSink {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()>;

    /// Called with the initial state, every `snapshot_every` steps and at the end.
    fn state(&mut self, _step: usize, _state: &SimState) -> Result<()> {
        Ok(())
    }
}

/// Collects records in memory.
#[derive(Default, Debug)]
pub struct RecordCollector {
    pub records: Vec<DiagnosticsRecord>,
}

impl DiagnosticSink for RecordCollector {
    fn record(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        self.records.push(record.clone());
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Completed,
    BlowUp { t: f64, field: &'static str, norm: f64, threshold: f64 },
    CflAbort { t: f64, dt: f64, limit: f64 },
    NumericalAbort { t: f64 },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: SimState,
    pub steps: usize,
    pub outcome: Outcome,
}

/// Number of steps needed to reach `t_end` from `t0`.
pub fn step_count(t0: f64, t_end: f64, dt: f64) -> usize {
    let n = (t_end - t0) / dt;
    if n <= 1e-9 {
        0
    } else {
        (n - 1e-9).ceil() as usize
    }
}

/// Integrates from `initial` to `cfg.t_end`, feeding every sink.
pub fn run(
    initial: &SimState,
    cfg: &IntegratorConfig,
    sinks: &mut [&mut dyn DiagnosticSink],
) -> Result<Trajectory> {
    cfg.validate()?;
    let residual = initial.gauge_residual();
    if residual > crate::state::GAUGE_TOLERANCE {
        return Err(Error::GaugeViolation { residual, limit: crate::state::GAUGE_TOLERANCE });
    }
    let total = step_count(initial.t, cfg.t_end, cfg.dt);
    let mut records = Vec::new();
    let emit = |state: &SimState, records: &mut Vec<DiagnosticsRecord>, sinks: &mut [&mut dyn DiagnosticSink]| -> Result<()> {
        let rec = diagnostics::record(state);
        for s in sinks.iter_mut() {
            s.record(&rec)?;
        }
        records.push(rec);
        Ok(())
    };
    emit(initial, &mut records, sinks)?;
    for s in sinks.iter_mut() {
        s.state(0, initial)?;
    }

    let mut state = initial.clone();
    let mut outcome = Outcome::Completed;
    let mut done = 0;
    for n in 1..=total {
        let (next, norms) = match step_inner(&state, cfg.dt, cfg) {
            Ok(r) => r,
            Err(Error::Cfl { dt, limit }) => {
                outcome = Outcome::CflAbort { t: state.t, dt, limit };
                break;
            }
            Err(Error::NonFinite { t }) => {
                outcome = Outcome::NumericalAbort { t };
                break;
            }
            Err(e) => return Err(e),
        };
        state = next;
        done = n;
        let last = n == total;
        if let Verdict::BlowUp { field, norm, threshold } = check_norms(norms.u_h2, norms.a_h32, &cfg.blowup) {
            emit(&state, &mut records, sinks)?;
            for s in sinks.iter_mut() {
                s.state(n, &state)?;
            }
            outcome = Outcome::BlowUp { t: state.t, field, norm, threshold };
            break;
        }
        if last || (cfg.diagnostics_every > 0 && n % cfg.diagnostics_every == 0) {
            emit(&state, &mut records, sinks)?;
        }
        if last || (cfg.snapshot_every > 0 && n % cfg.snapshot_every == 0) {
            for s in sinks.iter_mut() {
                s.state(n, &state)?;
            }
        }
    }
    Ok(Trajectory { records, final_state: state, steps: done, outcome })
}
