//! Simulation state and derived electromagnetic observables.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;
use crate::spectral::{
    curl, gradient, inv_neg_laplacian, real_spectra, Grid, ScalarField, Spectrum, VectorField,
    VectorSpectrum,
};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative divergence allowed by [`SimState::new`].
pub const GAUGE_TOLERANCE: f64 = 1e-10;

/// Relative divergence above which [`magnetic_laplacian`] refuses to run.
pub const MAGNETIC_GAUGE_LIMIT: f64 = 1e-6;

/// The tuple `(t, u, A, dA/dt)` with the exponent and Yosida parameter.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub u: ScalarField,
    pub a: VectorField,
    pub at: VectorField,
    pub gamma: f64,
    pub epsilon: f64,
}

impl SimState {
    /// Checks grids, parameters, finiteness and the Coulomb gauge.
    pub fn new(
        t: f64,
        u: ScalarField,
        a: VectorField,
        at: VectorField,
        gamma: f64,
        epsilon: f64,
    ) -> Result<Self> {
        let state = Self::new_unchecked(t, u, a, at, gamma, epsilon)?;
        let residual = state.gauge_residual();
        if residual > GAUGE_TOLERANCE {
            return Err(Error::GaugeViolation { residual, limit: GAUGE_TOLERANCE });
        }
        Ok(state)
    }

    /// Like [`SimState::new`] without the divergence check.
    pub fn new_unchecked(
        t: f64,
        u: ScalarField,
        a: VectorField,
        at: VectorField,
        gamma: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !(u.grid().same_as(a.grid()) && u.grid().same_as(at.grid())) {
            return Err(Error::GridMismatch);
        }
        check_gamma(gamma)?;
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be >= 0")));
        }
        if !t.is_finite() || !u.is_finite() || !a.is_finite() || !at.is_finite() {
            return Err(Error::NonFinite { t });
        }
        Ok(Self { t, u, a, at, gamma, epsilon })
    }

    /// Zero fields at `t = 0`.
    pub fn vacuum(grid: &Grid, gamma: f64, epsilon: f64) -> Result<Self> {
        Self::new(
            0.0,
            ScalarField::zeros(grid),
            VectorField::zeros(grid),
            VectorField::zeros(grid),
            gamma,
            epsilon,
        )
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `(|div A| + |div At|) / (|A| + |At|)` in `L^2`, or 0 for vanishing fields.
    pub fn gauge_residual(&self) -> f64 {
        let [da, dat] = [&self.a, &self.at].map(|v| divergence_norm(&v.real_spectrum()));
        let denom = self.a.norm_l2() + self.at.norm_l2();
        if denom == 0.0 {
            0.0
        } else {
            (da + dat) / denom
        }
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 1.0 && gamma <= 3.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must lie in (1, 3]")));
    }
    Ok(())
}

/// `L^2` norm of the divergence, computed from coefficients.
pub(crate) fn divergence_norm(s: &VectorSpectrum) -> f64 {
    s.divergence().weighted_energy(|_| 1.0).sqrt()
}

/// Charge, potential, current and field strengths of a state.
#[derive(Clone, Debug)]
pub struct Observables {
    pub rho: ScalarField,
    pub phi: ScalarField,
    pub j: VectorField,
    pub e: VectorField,
    pub b: VectorField,
}

/// Coefficients of the dealiased covariant gradient `P(grad u - i A u)`.
pub(crate) fn covariant_gradient_spectrum(
    u: &ScalarField,
    u_hat: &Spectrum,
    a: &VectorField,
) -> VectorSpectrum {
    let g = u.grid();
    let mask = g.mask();
    let comps = std::array::from_fn(|c| {
        let au = a.comps()[c].mul(u).into_spectrum();
        let mut out = au;
        let uh = u_hat.values();
        par::for_each_mut(out.values_mut(), |i, v| {
            *v = if mask[i] { I * (uh[i] * g.derivative_vector(i)[c] - *v) } else { Complex64::new(0.0, 0.0) };
        });
        out
    });
    VectorSpectrum::new(comps).expect("components share a grid")
}

/// `(grad - i A) u`, dealiased.
pub fn covariant_gradient(u: &ScalarField, a: &VectorField) -> VectorField {
    assert!(u.grid().same_as(a.grid()), "fields live on different grids");
    covariant_gradient_spectrum(u, &u.spectrum(), a).into_field()
}

/// `div((grad - iA)u) - i A . (grad - iA)u`.
///
/// Fails with [`Error::GaugeViolation`] when `|div A| / |A|` exceeds
/// [`MAGNETIC_GAUGE_LIMIT`].
pub fn magnetic_laplacian(u: &ScalarField, a: &VectorField) -> Result<ScalarField> {
    if !u.grid().same_as(a.grid()) {
        return Err(Error::GridMismatch);
    }
    let norm = a.norm_l2();
    if norm > 0.0 {
        let residual = divergence_norm(&a.real_spectrum()) / norm;
        if residual > MAGNETIC_GAUGE_LIMIT {
            return Err(Error::GaugeViolation { residual, limit: MAGNETIC_GAUGE_LIMIT });
        }
    }
    let cg_hat = covariant_gradient_spectrum(u, &u.spectrum(), a);
    let div = cg_hat.divergence().into_field();
    let cg = cg_hat.into_field();
    let a_dot = a.dot(&cg);
    Ok(div.zip_map(&a_dot, |d, ad| d - I * ad))
}

/// `rho = |u|^2`.
pub fn charge_density(u: &ScalarField) -> ScalarField {
    u.map(|z| Complex64::new(z.norm_sqr(), 0.0))
}

/// Hartree potential solving `-lap(phi) = rho - mean(rho)`.
pub fn hartree_potential(rho: &ScalarField) -> ScalarField {
    inv_neg_laplacian(rho)
}

/// `J = Im(conj(u) (grad - iA) u)`, dealiased and real.
pub fn current_density(u: &ScalarField, a: &VectorField) -> VectorField {
    let cg = covariant_gradient(u, a);
    current_from_gradient(u, &cg)
}

/// `Im(conj(u) cg)` followed by dealiasing.
pub(crate) fn current_from_gradient(u: &ScalarField, cg: &VectorField) -> VectorField {
    let raw = cg.map_comps(|c| u.zip_map(c, |z, w| Complex64::new((z.conj() * w).im, 0.0)));
    let [x, y, z] = raw.comps();
    let mask = u.grid().mask();
    let spectra: Vec<Spectrum> = real_spectra(&[x, y, z])
        .into_iter()
        .map(|mut s| {
            s.multiply_in_place(|i| if mask[i] { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
            s
        })
        .collect();
    let [sx, sy, sz] = <[Spectrum; 3]>::try_from(spectra).expect("three components");
    VectorSpectrum::new([sx, sy, sz]).expect("components share a grid").real_field()
}

/// Charge, potential, current and the fields `E = -At - grad(phi)`, `B = curl A`.
pub fn em_fields(state: &SimState) -> Observables {
    let rho = charge_density(&state.u);
    let phi = hartree_potential(&rho);
    let j = current_density(&state.u, &state.a);
    let e = state.at.add(&gradient(&phi)).scale(-1.0).real_part();
    let b = curl(&state.a).real_part();
    Observables { rho, phi, j, e, b }
}

/// Gauge-transformed triple `(e^{i lambda} u, A + grad lambda, phi - lambda_t)`.
#[derive(Clone, Debug)]
pub struct GaugeTriple {
    pub u: ScalarField,
    pub a: VectorField,
    pub phi: ScalarField,
}

/// Applies the gauge transformation without touching `state`.
pub fn gauge_transform(
    state: &SimState,
    lambda: &ScalarField,
    lambda_t: &ScalarField,
) -> Result<GaugeTriple> {
    let g = state.grid();
    if !(g.same_as(lambda.grid()) && g.same_as(lambda_t.grid())) {
        return Err(Error::GridMismatch);
    }
    if lambda.max_imag() != 0.0 || lambda_t.max_imag() != 0.0 {
        return Err(Error::InvalidParameter("gauge function must be real".into()));
    }
    let u = state.u.zip_map(lambda, |z, l| z * Complex64::from_polar(1.0, l.re));
    let a = state.a.add(&gradient(lambda).real_part());
    let phi = hartree_potential(&charge_density(&state.u)).sub(lambda_t);
    Ok(GaugeTriple { u, a, phi })
}
