//! Polar factorization, quantum-hydrodynamic observables and the weak-form
//! residuals of the hydrodynamic system.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::diagnostics;
use crate::dynamics::DiagnosticSink;
use crate::error::{Error, Result};
use crate::par;
use crate::spectral::{curl, gradient, Grid, ScalarField, Spectrum, VectorField};
use crate::state::{covariant_gradient, em_fields, SimState};
use crate::diagnostics::DiagnosticsRecord;

/// Default relative modulus below which a point counts as nodal.
pub const DEFAULT_POLAR_TOL: f64 = 1e-12;

/// Relative density below which the logarithmic Bohm form is not evaluated.
pub const LOG_WINDOW: f64 = 1e-8;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `sqrt(rho)` and the polar factor of a wave function.
#[derive(Clone, Debug)]
pub struct PolarFactors {
    pub sqrt_rho: ScalarField,
    pub polar: ScalarField,
}

/// `u / |u|` where `|u| > tol_rel * max|u|`, zero elsewhere.
pub fn polar_factorize(u: &ScalarField, tol_rel: f64) -> Result<PolarFactors> {
    if !(tol_rel > 0.0 && tol_rel <= 1e-3) {
        return Err(Error::InvalidParameter(format!("tol_rel = {tol_rel} must lie in (0, 1e-3]")));
    }
    let cutoff = tol_rel * u.max_abs();
    let sqrt_rho = u.map(|z| re(z.norm()));
    let polar = u.map(|z| {
        let r = z.norm();
        if r > cutoff && r > 0.0 {
            z / r
        } else {
            re(0.0)
        }
    });
    Ok(PolarFactors { sqrt_rho, polar })
}

/// `Lambda` and `grad sqrt(rho)` built from a polar factor.
#[derive(Clone, Debug)]
pub struct LambdaFields {
    pub lambda: VectorField,
    pub grad_sqrt_rho: VectorField,
}

/// `Lambda = Re(conj(p) (-i grad - A) u)` and `grad sqrt(rho) = Re(conj(p) (grad - iA) u)`.
pub fn lambda_field(u: &ScalarField, a: &VectorField, polar: &ScalarField) -> LambdaFields {
    let cg = covariant_gradient(u, a);
    lambda_from_gradient(&cg, polar)
}

fn lambda_from_gradient(cg: &VectorField, polar: &ScalarField) -> LambdaFields {
    let lambda = cg.map_comps(|c| polar.zip_map(c, |p, z| re((p.conj() * z).im)));
    let grad_sqrt_rho = cg.map_comps(|c| polar.zip_map(c, |p, z| re((p.conj() * z).re)));
    LambdaFields { lambda, grad_sqrt_rho }
}

/// Hydrodynamic variables of a wave function.
#[derive(Clone, Debug)]
pub struct HydroFields {
    pub sqrt_rho: ScalarField,
    pub polar: ScalarField,
    pub lambda: VectorField,
    pub grad_sqrt_rho: VectorField,
    /// `sqrt(rho) Lambda`.
    pub j: VectorField,
}

pub fn hydro_fields(u: &ScalarField, a: &VectorField, tol_rel: f64) -> Result<HydroFields> {
    let PolarFactors { sqrt_rho, polar } = polar_factorize(u, tol_rel)?;
    let LambdaFields { lambda, grad_sqrt_rho } = lambda_field(u, a, &polar);
    let j = lambda.mul_scalar(&sqrt_rho);
    Ok(HydroFields { sqrt_rho, polar, lambda, grad_sqrt_rho, j })
}

/// Largest pointwise deviations in the stress identity, each divided by the
/// local value of `|(-i grad - A) u|^2`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StressResidual {
    pub tensor: f64,
    pub trace: f64,
    /// Number of non-nodal points examined.
    pub points: usize,
}

/// Compares `Re(conj(z) (x) z)` with `grad sqrt(rho) (x) grad sqrt(rho) + Lambda (x) Lambda`
/// where `z = (-i grad - A) u`, off the nodal set of `hydro`.
pub fn stress_identity_residual(u: &ScalarField, a: &VectorField, hydro: &HydroFields) -> StressResidual {
    let cg = covariant_gradient(u, a);
    let z = cg.comps().each_ref().map(|c| c.values());
    let g = hydro.grad_sqrt_rho.comps().each_ref().map(|c| c.values());
    let l = hydro.lambda.comps().each_ref().map(|c| c.values());
    let p = hydro.polar.values();
    let per_point: Vec<Option<(f64, f64)>> = par::collect_indexed(p.len(), |n| {
        if p[n] == re(0.0) {
            return None;
        }
        let zz: [Complex64; 3] = std::array::from_fn(|i| -Complex64::i() * z[i][n]);
        let scale: f64 = zz.iter().map(|w| w.norm_sqr()).sum();
        if scale == 0.0 {
            return Some((0.0, 0.0));
        }
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                let lhs = (zz[i].conj() * zz[j]).re;
                let rhs = g[i][n].re * g[j][n].re + l[i][n].re * l[j][n].re;
                worst = worst.max((lhs - rhs).abs());
            }
        }
        let tr_rhs: f64 = (0..3).map(|i| g[i][n].re.powi(2) + l[i][n].re.powi(2)).sum();
        Some((worst / scale, (scale - tr_rhs).abs() / scale))
    });
    let mut out = StressResidual::default();
    for (t, tr) in per_point.into_iter().flatten() {
        out.tensor = out.tensor.max(t);
        out.trace = out.trace.max(tr);
        out.points += 1;
    }
    out
}

/// The three forms of the Bohm term on the window `rho > LOG_WINDOW * max rho`.
#[derive(Clone, Debug)]
pub struct BohmForms {
    /// `1/2 rho grad(lap sqrt(rho) / sqrt(rho))`.
    pub f1: VectorField,
    /// `1/4 grad lap rho - div(grad sqrt(rho) (x) grad sqrt(rho))`.
    pub f2: VectorField,
    /// `1/4 div(rho hess log rho)`.
    pub f3: VectorField,
    pub window: Vec<bool>,
    /// Largest magnitude of any form on the window.
    pub scale: f64,
    /// Max-norm differences on the window: `(f1-f2, f1-f3, f2-f3)`.
    pub residuals: [f64; 3],
}

impl BohmForms {
    /// Residuals divided by [`BohmForms::scale`] (absolute when the forms vanish).
    pub fn relative_residuals(&self) -> [f64; 3] {
        if self.scale == 0.0 {
            self.residuals
        } else {
            self.residuals.map(|r| r / self.scale)
        }
    }
}

fn hessian(s: &Spectrum) -> [[ScalarField; 3]; 3] {
    let g = s.grid();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            s.multiply(|m| {
                let k = g.derivative_vector(m);
                re(-k[i] * k[j])
            })
            .into_field()
            .real_part()
        })
    })
}

/// Row divergence `(div M)_i = sum_j d_j M_ij`.
fn tensor_divergence(m: &[[ScalarField; 3]; 3]) -> VectorField {
    let rows = std::array::from_fn(|i| {
        let row = VectorField::new(m[i].clone()).expect("shared grid");
        row.spectrum().divergence().into_field().real_part()
    });
    VectorField::new(rows).expect("shared grid")
}

/// Evaluates the three Bohm forms spectrally (no dealiasing).
pub fn bohm_forms(rho: &ScalarField) -> Result<BohmForms> {
    if rho.values().iter().any(|z| z.re < 0.0 || !z.re.is_finite()) {
        return Err(Error::InvalidParameter("density must be finite and nonnegative".into()));
    }
    let rho = rho.real_part();
    let max = rho.max_abs();
    let cut = LOG_WINDOW * max;
    let window: Vec<bool> = rho.values().iter().map(|z| max > 0.0 && z.re > cut).collect();
    let inside = |f: ScalarField| {
        let mut f = f;
        for (v, &w) in f.values_mut().iter_mut().zip(&window) {
            if !w {
                *v = re(0.0);
            }
        }
        f
    };

    let sqrt = rho.map(|z| re(z.re.sqrt()));
    let q = inside(crate::spectral::laplacian(&sqrt).zip_map(&sqrt, |l, s| re(l.re / s.re)));
    let f1 = gradient(&q).real_part().mul_scalar(&rho.scale(re(0.5)));

    let rho_hat = rho.spectrum();
    let grad_lap = rho_hat.laplacian().gradient().into_field().real_part().scale(0.25);
    let gs = gradient(&sqrt).real_part();
    let outer: [[ScalarField; 3]; 3] =
        std::array::from_fn(|i| std::array::from_fn(|j| gs.comps()[i].mul(&gs.comps()[j])));
    let f2 = grad_lap.sub(&tensor_divergence(&outer));

    let log = inside(rho.map(|z| if z.re > cut { re(z.re.ln()) } else { re(0.0) }));
    let h = hessian(&log.spectrum());
    let weighted: [[ScalarField; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| h[i][j].mul(&rho)));
    let f3 = tensor_divergence(&weighted).scale(0.25);

    let f1 = f1.map_comps(|c| inside(c.clone()));
    let f3 = f3.map_comps(|c| inside(c.clone()));
    let mag = |v: &VectorField, n: usize| -> f64 {
        v.comps().iter().map(|c| c.values()[n].re.powi(2)).sum::<f64>().sqrt()
    };
    let diff = |a: &VectorField, b: &VectorField, n: usize| -> f64 {
        (0..3).map(|c| (a.comps()[c].values()[n].re - b.comps()[c].values()[n].re).powi(2)).sum::<f64>().sqrt()
    };
    let mut scale = 0.0_f64;
    let mut residuals = [0.0_f64; 3];
    for n in (0..window.len()).filter(|&n| window[n]) {
        scale = scale.max(mag(&f1, n)).max(mag(&f2, n)).max(mag(&f3, n));
        residuals[0] = residuals[0].max(diff(&f1, &f2, n));
        residuals[1] = residuals[1].max(diff(&f1, &f3, n));
        residuals[2] = residuals[2].max(diff(&f2, &f3, n));
    }
    Ok(BohmForms { f1, f2, f3, window, scale, residuals })
}

/// Energy of the hydrodynamic variables: `1/2|grad sqrt(rho)|^2 + 1/2|Lambda|^2 + rho^gamma/gamma`
/// plus the electromagnetic terms.
pub fn qmhd_energy_state(state: &SimState, tol_rel: f64) -> Result<f64> {
    let h = hydro_fields(&state.u, &state.a, tol_rel)?;
    let dv = state.grid().cell_volume();
    let gamma = state.gamma;
    let gs = h.grad_sqrt_rho.comps().each_ref().map(|c| c.values());
    let l = h.lambda.comps().each_ref().map(|c| c.values());
    let s = h.sqrt_rho.values();
    let fluid = par::sum_indexed(s.len(), |n| {
        let kin: f64 = (0..3).map(|c| gs[c][n].re.powi(2) + l[c][n].re.powi(2)).sum();
        0.5 * kin + s[n].re.powf(2.0 * gamma) / gamma
    }) * dv;
    let parts = diagnostics::energy_parts(state);
    Ok(fluid + parts.electric + parts.magnetic + parts.hartree)
}

/// [`qmhd_energy_state`] for every state of a trajectory.
pub fn qmhd_energy(states: &[SimState], tol_rel: f64) -> Result<Vec<f64>> {
    states.iter().map(|s| qmhd_energy_state(s, tol_rel)).collect()
}

/// Space-time test pair `(eta, zeta)` multiplied by a temporal bump that
/// vanishes, with its derivative, at `horizon`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    pub eta: ScalarField,
    pub zeta: VectorField,
    pub horizon: f64,
}

impl TestFunction {
    pub fn new(eta: ScalarField, zeta: VectorField, horizon: f64) -> Result<Self> {
        if !eta.grid().same_as(zeta.grid()) {
            return Err(Error::GridMismatch);
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon = {horizon} must be positive")));
        }
        Ok(Self { eta: eta.real_part(), zeta: zeta.real_part(), horizon })
    }

    /// Random real fields built from modes with `|m_j| <= max_mode`.
    pub fn random<R: Rng>(grid: &Grid, rng: &mut R, max_mode: i64, horizon: f64) -> Result<Self> {
        let band = |rng: &mut R| {
            let mut s = Spectrum::zeros(grid);
            for (i, v) in s.values_mut().iter_mut().enumerate() {
                let (a, b, c) = grid.unflatten(i);
                if [a, b, c].iter().all(|&ix| grid.mode(ix).abs() <= max_mode) {
                    *v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
            }
            s.into_field().real_part()
        };
        let eta = band(rng);
        let zeta = VectorField::new([band(rng), band(rng), band(rng)])?;
        Self::new(eta, zeta, horizon)
    }

    /// Temporal factor at elapsed time `t`.
    pub fn temporal(&self, t: f64) -> f64 {
        if t >= self.horizon {
            0.0
        } else {
            (0.5 * PI * t / self.horizon).cos().powi(2)
        }
    }
}

/// Spatial derivatives of a test pair, computed once.
struct PreparedTest {
    test: TestFunction,
    grad_eta: VectorField,
    grad_zeta: [[ScalarField; 3]; 3],
    div_zeta: ScalarField,
    lap_div_zeta: ScalarField,
}

impl PreparedTest {
    fn new(test: TestFunction) -> Self {
        let grad_eta = gradient(&test.eta).real_part();
        let zh = test.zeta.spectrum();
        let grad_zeta = std::array::from_fn(|i| {
            let d = zh.comps()[i].gradient();
            std::array::from_fn(|j| d.comps()[j].field().real_part())
        });
        let div = zh.divergence();
        let div_zeta = div.field().real_part();
        let lap_div_zeta = div.laplacian().into_field().real_part();
        Self { test, grad_eta, grad_zeta, div_zeta, lap_div_zeta }
    }
}

/// Spatial integrals of one state against every test: `rho eta`,
/// `J . grad eta`, `J . zeta` and the momentum flux paired with `zeta`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakIntegrands {
    pub t: f64,
    pub rho_eta: Vec<f64>,
    pub j_grad_eta: Vec<f64>,
    pub j_zeta: Vec<f64>,
    pub flux: Vec<f64>,
}

/// Weak-form residuals per test function.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeakResiduals {
    pub continuity: Vec<f64>,
    pub momentum: Vec<f64>,
    pub samples: usize,
}

/// Streams trajectory samples into the space-time integrals of the weak
/// continuity and momentum equations.
///
/// Time derivatives of the test functions are integrated by differences of
/// the temporal factor between samples, so a static trajectory telescopes
/// exactly against the initial-data term. The remaining terms use the
/// composite trapezoid rule.
pub struct WeakResidualAccumulator {
    tests: Vec<PreparedTest>,
    tol_rel: f64,
    max_gap: f64,
    start: Option<f64>,
    prev: Option<WeakIntegrands>,
    continuity: Vec<f64>,
    momentum: Vec<f64>,
    samples: usize,
}

impl WeakResidualAccumulator {
    /// `max_gap` bounds the spacing between consecutive samples.
    pub fn new(tests: Vec<TestFunction>, max_gap: f64, tol_rel: f64) -> Result<Self> {
        if tests.is_empty() {
            return Err(Error::InvalidParameter("no test functions".into()));
        }
        if !(max_gap > 0.0) {
            return Err(Error::InvalidParameter(format!("max_gap = {max_gap} must be positive")));
        }
        let n = tests.len();
        Ok(Self {
            tests: tests.into_iter().map(PreparedTest::new).collect(),
            tol_rel,
            max_gap,
            start: None,
            prev: None,
            continuity: vec![0.0; n],
            momentum: vec![0.0; n],
            samples: 0,
        })
    }

    /// Integrands of one state.
    pub fn integrands(&self, state: &SimState) -> Result<WeakIntegrands> {
        let g = state.grid();
        if !g.same_as(self.tests[0].test.eta.grid()) {
            return Err(Error::GridMismatch);
        }
        let h = hydro_fields(&state.u, &state.a, self.tol_rel)?;
        let obs = em_fields(state);
        let b = curl(&state.a).real_part();
        let gamma = state.gamma;
        let dv = g.cell_volume();
        let np = g.points();
        let comp = |v: &VectorField| v.comps().each_ref().map(|c| c.values().iter().map(|z| z.re).collect::<Vec<f64>>());
        let rho: Vec<f64> = h.sqrt_rho.values().iter().map(|z| z.re * z.re).collect();
        let (lam, gs, j, e, bb) = (comp(&h.lambda), comp(&h.grad_sqrt_rho), comp(&h.j), comp(&obs.e), comp(&b));
        let pressure: Vec<f64> = rho.iter().map(|r| (gamma - 1.0) / gamma * r.powf(gamma)).collect();

        let mut s = WeakIntegrands {
            t: state.t,
            rho_eta: Vec::with_capacity(self.tests.len()),
            j_grad_eta: Vec::with_capacity(self.tests.len()),
            j_zeta: Vec::with_capacity(self.tests.len()),
            flux: Vec::with_capacity(self.tests.len()),
        };
        for p in &self.tests {
            let eta = p.test.eta.values();
            let ge = comp(&p.grad_eta);
            let ze = comp(&p.test.zeta);
            let gz = p.grad_zeta.each_ref().map(|row| row.each_ref().map(|f| f.values()));
            let dz = p.div_zeta.values();
            let ldz = p.lap_div_zeta.values();
            s.rho_eta.push(par::sum_indexed(np, |n| rho[n] * eta[n].re) * dv);
            s.j_grad_eta.push(par::sum_indexed(np, |n| (0..3).map(|c| j[c][n] * ge[c][n]).sum::<f64>()) * dv);
            s.j_zeta.push(par::sum_indexed(np, |n| (0..3).map(|c| j[c][n] * ze[c][n]).sum::<f64>()) * dv);
            s.flux.push(
                par::sum_indexed(np, |n| {
                    let mut acc = 0.0;
                    for i in 0..3 {
                        for k in 0..3 {
                            // d_k zeta_i
                            let d = gz[i][k][n].re;
                            acc += (lam[i][n] * lam[k][n] + gs[i][n] * gs[k][n]) * d;
                        }
                    }
                    let jxb = [
                        j[1][n] * bb[2][n] - j[2][n] * bb[1][n],
                        j[2][n] * bb[0][n] - j[0][n] * bb[2][n],
                        j[0][n] * bb[1][n] - j[1][n] * bb[0][n],
                    ];
                    for c in 0..3 {
                        acc += (rho[n] * e[c][n] + jxb[c]) * ze[c][n];
                    }
                    acc + pressure[n] * dz[n].re - 0.25 * rho[n] * ldz[n].re
                }) * dv,
            );
        }
        Ok(s)
    }

    /// Adds one sample; samples must arrive in increasing time.
    pub fn push(&mut self, state: &SimState) -> Result<()> {
        let s = self.integrands(state)?;
        let start = *self.start.get_or_insert(s.t);
        match &self.prev {
            None => {
                for (k, p) in self.tests.iter().enumerate() {
                    let th = p.test.temporal(0.0);
                    self.continuity[k] += th * s.rho_eta[k];
                    self.momentum[k] += th * s.j_zeta[k];
                }
            }
            Some(prev) => {
                let gap = s.t - prev.t;
                if !(gap > 0.0) {
                    return Err(Error::InsufficientSampling(format!(
                        "sample times must increase ({} after {})",
                        s.t, prev.t
                    )));
                }
                if gap > self.max_gap * (1.0 + 1e-9) {
                    return Err(Error::InsufficientSampling(format!(
                        "gap {gap:.3e} between samples exceeds {:.3e}",
                        self.max_gap
                    )));
                }
                for (k, p) in self.tests.iter().enumerate() {
                    let (t0, t1) = (p.test.temporal(prev.t - start), p.test.temporal(s.t - start));
                    let dth = t1 - t0;
                    self.continuity[k] += 0.5 * (prev.rho_eta[k] + s.rho_eta[k]) * dth
                        + 0.5 * gap * (t0 * prev.j_grad_eta[k] + t1 * s.j_grad_eta[k]);
                    self.momentum[k] += 0.5 * (prev.j_zeta[k] + s.j_zeta[k]) * dth
                        + 0.5 * gap * (t0 * prev.flux[k] + t1 * s.flux[k]);
                }
            }
        }
        self.samples += 1;
        self.prev = Some(s);
        Ok(())
    }

    /// Elapsed time covered so far.
    pub fn covered(&self) -> f64 {
        match (self.start, &self.prev) {
            (Some(a), Some(p)) => p.t - a,
            _ => 0.0,
        }
    }

    /// Absolute residuals; fails if the samples stop before every horizon.
    pub fn finish(self) -> Result<WeakResiduals> {
        let horizon = self.tests.iter().map(|p| p.test.horizon).fold(0.0, f64::max);
        if self.covered() < horizon * (1.0 - 1e-9) {
            return Err(Error::InsufficientSampling(format!(
                "samples cover {:.6} of the horizon {horizon:.6}",
                self.covered()
            )));
        }
        Ok(WeakResiduals { continuity: self.continuity, momentum: self.momentum, samples: self.samples })
    }
}

impl DiagnosticSink for WeakResidualAccumulator {
    fn record(&mut self, _record: &DiagnosticsRecord) -> Result<()> {
        Ok(())
    }

    fn state(&mut self, _step: usize, state: &SimState) -> Result<()> {
        self.push(state)
    }
}

/// Weak residuals of a sampled trajectory.
pub fn qmhd_weak_residual(
    states: &[SimState],
    tests: &[TestFunction],
    max_gap: f64,
    tol_rel: f64,
) -> Result<WeakResiduals> {
    let mut acc = WeakResidualAccumulator::new(tests.to_vec(), max_gap, tol_rel)?;
    for s in states {
        acc.push(s)?;
    }
    acc.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{gradient, laplacian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(32, 16.0).unwrap()
    }

    fn smooth(g: &Grid, phase: f64) -> ScalarField {
        let w = 2.0 * PI / g.len();
        ScalarField::from_fn(g, |x| {
            let r = 1.0 + 0.3 * (w * x[0]).cos() + 0.2 * (w * x[1] + w * x[2]).sin();
            Complex64::from_polar(r, phase * ((w * x[2]).sin() + 0.5 * (w * x[0]).cos()))
        })
    }

    fn swirl(g: &Grid, amp: f64) -> VectorField {
        let w = 2.0 * PI / g.len();
        VectorField::from_real_fn(g, |x| [amp * (w * x[1]).sin(), amp * (w * x[2]).cos(), amp * (w * x[0]).sin()])
    }

    #[test]
    fn polar_factor_of_nonvanishing_field() {
        let g = grid();
        let w = 2.0 * PI / g.len();
        let u = ScalarField::from_fn(&g, |x| Complex64::from_polar(1.5 + (w * x[1]).sin(), (w * x[0]).cos()));
        let pf = polar_factorize(&u, DEFAULT_POLAR_TOL).unwrap();
        let expect = ScalarField::from_fn(&g, |x| Complex64::from_polar(1.0, (w * x[0]).cos()));
        assert!(pf.polar.sub(&expect).max_abs() < 1e-12);
    }

    #[test]
    fn polar_factor_of_nonnegative_field() {
        let g = Grid::new(8, 8.0).unwrap();
        let u = ScalarField::from_real_fn(&g, |x| (x[0] - 3.0).max(0.0));
        let pf = polar_factorize(&u, 1e-6).unwrap();
        assert!(pf.polar.values().iter().all(|z| *z == re(0.0) || *z == re(1.0)));
        assert!(polar_factorize(&u, 0.0).is_err());
        assert!(polar_factorize(&u, 1e-2).is_err());
    }

    #[test]
    fn zero_field_gives_zero_polar() {
        let g = Grid::new(8, 8.0).unwrap();
        let pf = polar_factorize(&ScalarField::zeros(&g), DEFAULT_POLAR_TOL).unwrap();
        assert_eq!(pf.polar.max_abs(), 0.0);
    }

    #[test]
    fn plane_wave_lambda() {
        let g = grid();
        let k = [2.0 * PI * 2.0 / g.len(), 0.0, -2.0 * PI / g.len()];
        let c = 0.7;
        let u = ScalarField::from_fn(&g, |x| Complex64::from_polar(c, k[0] * x[0] + k[2] * x[2]));
        let a = VectorField::zeros(&g);
        let h = hydro_fields(&u, &a, DEFAULT_POLAR_TOL).unwrap();
        for (comp, kc) in h.lambda.comps().iter().zip(k) {
            assert!(comp.values().iter().all(|z| (z.re - c * kc).abs() < 1e-12));
        }
        let r = stress_identity_residual(&u, &a, &h);
        assert!(r.tensor < 1e-12 && r.trace < 1e-12);
        assert_eq!(r.points, g.points());
    }

    #[test]
    fn real_field_has_no_lambda() {
        let g = grid();
        let u = smooth(&g, 0.0);
        let h = hydro_fields(&u, &VectorField::zeros(&g), DEFAULT_POLAR_TOL).unwrap();
        assert!(h.lambda.max_magnitude() < 1e-14);
    }

    #[test]
    fn grad_sqrt_rho_matches_spectral_gradient() {
        let g = grid();
        let u = smooth(&g, 0.4);
        let a = leray(&swirl(&g, 0.3));
        let h = hydro_fields(&u, &a, DEFAULT_POLAR_TOL).unwrap();
        let direct = gradient(&h.sqrt_rho).real_part();
        assert!(h.grad_sqrt_rho.sub(&direct).max_magnitude() < 1e-6);
    }

    fn leray(v: &VectorField) -> VectorField {
        crate::spectral::leray_project(v)
    }

    #[test]
    fn stress_identity_on_smooth_state() {
        let g = grid();
        let u = smooth(&g, 0.4);
        let a = leray(&swirl(&g, 0.5));
        let h = hydro_fields(&u, &a, DEFAULT_POLAR_TOL).unwrap();
        let r = stress_identity_residual(&u, &a, &h);
        assert!(r.tensor < 1e-13, "{r:?}");
        assert!(r.trace < 1e-13, "{r:?}");
        assert!(h.polar.values().iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn bohm_forms_vanish_for_constant_density() {
        let g = Grid::new(16, 16.0).unwrap();
        let rho = ScalarField::constant(&g, re(2.0));
        let f = bohm_forms(&rho).unwrap();
        assert!(f.f1.max_magnitude() < 1e-14 && f.f2.max_magnitude() < 1e-14 && f.f3.max_magnitude() < 1e-14);
    }

    #[test]
    fn bohm_forms_agree_on_cosine_density() {
        let g = grid();
        let w = 2.0 * PI / g.len();
        let rho = ScalarField::from_real_fn(&g, |x| 1.0 + 0.1 * (w * x[0]).cos());
        let f = bohm_forms(&rho).unwrap();
        assert!(f.relative_residuals().iter().all(|&r| r < 1e-8), "{:?}", f.relative_residuals());
        assert!(f.window.iter().all(|&w| w));
    }

    #[test]
    fn bohm_first_form_linearizes() {
        let g = grid();
        let w = 2.0 * PI / g.len();
        for amp in [1e-2, 5e-3] {
            let rho = ScalarField::from_real_fn(&g, |x| 1.0 + amp * (w * x[1]).sin());
            let f = bohm_forms(&rho).unwrap();
            let lin = gradient(&laplacian(&rho)).real_part().scale(0.25);
            let err = f.f1.sub(&lin).max_magnitude();
            // quadratic in the amplitude
            assert!(err < 2.0 * amp * amp * w.powi(3), "amp {amp}: {err}");
        }
    }

    #[test]
    fn hydro_energy_matches_energy() {
        let g = grid();
        let u = smooth(&g, 0.4);
        let a = leray(&swirl(&g, 0.5));
        let at = leray(&swirl(&g, -0.2));
        let s = SimState::new(0.0, u, a, at, 1.7, 0.0).unwrap();
        let e = diagnostics::energy(&s);
        let q = qmhd_energy_state(&s, DEFAULT_POLAR_TOL).unwrap();
        assert!(((q - e) / e).abs() < 1e-12, "{q} vs {e}");
    }

    #[test]
    fn static_trajectory_has_no_continuity_residual() {
        let g = grid();
        let c = g.len() / 2.0;
        let u = ScalarField::from_real_fn(&g, |x| {
            (-((x[0] - c).powi(2) + (x[1] - c).powi(2) + (x[2] - c).powi(2)) / 4.0).exp()
        });
        let z = VectorField::zeros(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tests: Vec<_> = (0..3).map(|_| TestFunction::random(&g, &mut rng, 2, 0.5).unwrap()).collect();
        let states: Vec<SimState> = (0..=50)
            .map(|i| SimState::new(i as f64 * 0.01, u.clone(), z.clone(), z.clone(), 2.0, 0.0).unwrap())
            .collect();
        let r = qmhd_weak_residual(&states, &tests, 0.01, DEFAULT_POLAR_TOL).unwrap();
        assert!(r.continuity.iter().all(|c| c.abs() < 1e-9), "{:?}", r.continuity);
        assert_eq!(r.samples, 51);
    }

    #[test]
    fn weak_residual_sampling_is_checked() {
        let g = Grid::new(8, 8.0).unwrap();
        let z = VectorField::zeros(&g);
        let s = |t: f64| SimState::new(t, ScalarField::zeros(&g), z.clone(), z.clone(), 2.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tests = vec![TestFunction::random(&g, &mut rng, 1, 0.1).unwrap()];
        assert!(matches!(
            qmhd_weak_residual(&[s(0.0), s(0.05), s(0.1)], &tests, 0.01, 1e-12),
            Err(Error::InsufficientSampling(_))
        ));
        assert!(matches!(
            qmhd_weak_residual(&[s(0.0), s(0.01)], &tests, 0.01, 1e-12),
            Err(Error::InsufficientSampling(_))
        ));
        let states: Vec<_> = (0..=10).map(|i| s(i as f64 * 0.01)).collect();
        let r = qmhd_weak_residual(&states, &tests, 0.01, 1e-12).unwrap();
        assert_eq!(r.continuity, vec![0.0]);
        assert_eq!(r.momentum, vec![0.0]);
    }
}
