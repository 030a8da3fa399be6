//! Conserved quantities, constraint residuals, norm tracking and the blow-up
//! monitor.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::par;
use crate::spectral::{real_fields, Grid, Spectrum, VectorField, VectorSpectrum};
use crate::state::{covariant_gradient_spectrum, SimState};

/// Norm columns as `(field, s)`, in CSV order.
pub const NORM_KEYS: [(&str, f64); 7] = [
    ("u", 0.0),
    ("u", 1.0),
    ("u", 2.0),
    ("A", 0.5),
    ("A", 1.0),
    ("A", 1.5),
    ("At", 0.5),
];

/// CSV headers of [`NORM_KEYS`].
pub const NORM_COLUMNS: [&str; 7] = ["u_H0", "u_H1", "u_H2", "A_H0.5", "A_H1", "A_H1.5", "At_H0.5"];

/// The five integrands of the energy, each integrated over the box.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyParts {
    /// Covariant kinetic term (weight as requested by the caller).
    pub kinetic: f64,
    /// `1/2 |dA/dt|^2`.
    pub electric: f64,
    /// `1/2 |grad A|^2`.
    pub magnetic: f64,
    /// `1/2 |grad phi|^2`.
    pub hartree: f64,
    /// `(1/gamma) |u|^{2 gamma}`.
    pub power: f64,
}

impl EnergyParts {
    pub fn total(&self) -> f64 {
        self.kinetic + self.electric + self.magnetic + self.hartree + self.power
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub div_a: f64,
    pub gauss: f64,
    pub div_b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub energy_regularized: f64,
    /// Energy with half weight on the smoothed covariant term; the quantity
    /// the regularized flow actually conserves.
    pub energy_yosida: f64,
    pub div_a_residual: f64,
    pub gauss_residual: f64,
    pub div_b_residual: f64,
    /// Sobolev norms in [`NORM_KEYS`] order.
    pub norms: [f64; 7],
    pub parts: EnergyParts,
}

impl DiagnosticsRecord {
    /// Looks up a tracked norm.
    pub fn norm(&self, field: &str, s: f64) -> Option<f64> {
        NORM_KEYS.iter().position(|&(f, k)| f == field && k == s).map(|i| self.norms[i])
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.mass,
            self.energy,
            self.energy_regularized,
            self.energy_yosida,
            self.div_a_residual,
            self.gauss_residual,
            self.div_b_residual,
        ]
        .iter()
        .chain(self.norms.iter())
        .all(|x| x.is_finite())
    }
}

/// Spectra shared by the individual diagnostics.
struct Analysis<'a> {
    state: &'a SimState,
    u_hat: Spectrum,
    a_hat: VectorSpectrum,
    at_hat: VectorSpectrum,
    rho_hat: Spectrum,
}

impl<'a> Analysis<'a> {
    fn new(state: &'a SimState) -> Self {
        let u_hat = state.u.spectrum();
        let a_hat = state.a.real_spectrum();
        let at_hat = state.at.real_spectrum();
        let rho_hat = state.u.map(|z| Complex64::new(z.norm_sqr(), 0.0)).into_spectrum();
        Self { state, u_hat, a_hat, at_hat, rho_hat }
    }

    fn grid(&self) -> &Grid {
        self.state.grid()
    }

    fn mass(&self) -> f64 {
        self.u_hat.weighted_energy(|_| 1.0)
    }

    /// Energy parts with kinetic weight `w` and smoothing `eps` applied to
    /// `A` in the covariant term and to `u` in the power term.
    fn parts(&self, w: f64, eps: f64) -> EnergyParts {
        let g = self.grid();
        let k2 = g.k2();
        let gamma = self.state.gamma;
        let (kinetic_gradient, power_field) = if eps == 0.0 {
            (
                covariant_gradient_spectrum(&self.state.u, &self.u_hat, &self.state.a),
                None,
            )
        } else {
            let y = |i: usize| Complex64::new(1.0 / (1.0 + eps * k2[i]), 0.0);
            let ya = self.a_hat.multiply(y);
            let [x, yy, z] = ya.comps();
            let mut f = real_fields(&[x, yy, z]).into_iter();
            let a_eff = VectorField::new(std::array::from_fn(|_| f.next().unwrap()))
                .expect("components share a grid");
            let yu = self.u_hat.multiply(y).into_field();
            (covariant_gradient_spectrum(&self.state.u, &self.u_hat, &a_eff), Some(yu))
        };
        let pu = power_field.as_ref().unwrap_or(&self.state.u);
        let power = par::sum_indexed(g.points(), |i| pu.values()[i].norm_sqr().powf(gamma))
            * g.cell_volume()
            / gamma;
        EnergyParts {
            kinetic: w * kinetic_gradient.weighted_energy(|_| 1.0),
            electric: 0.5 * self.at_hat.weighted_energy(|_| 1.0),
            magnetic: 0.5 * self.a_hat.weighted_energy(|i| k2[i]),
            hartree: 0.5 * self.rho_hat.weighted_energy(|i| if k2[i] == 0.0 { 0.0 } else { 1.0 / k2[i] }),
            power,
        }
    }

    fn residuals(&self) -> Residuals {
        let g = self.grid();
        let l2 = |s: &Spectrum| s.weighted_energy(|_| 1.0).sqrt();
        let div_a = l2(&self.a_hat.divergence()) + l2(&self.at_hat.divergence());
        let a_norm = self.a_hat.weighted_energy(|_| 1.0).sqrt() + self.at_hat.weighted_energy(|_| 1.0).sqrt();

        // div E = -div At + kd^2 phi, compared with rho off the Nyquist planes.
        let k2 = g.k2();
        let nyq = g.nyquist();
        let div_at = self.at_hat.divergence();
        let rho = self.rho_hat.values();
        let dat = div_at.values();
        let gauss_sq = par::sum_indexed(g.points(), |i| {
            if i == 0 || nyq[i] {
                return 0.0;
            }
            let kd = g.derivative_vector(i);
            let kd2 = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
            let div_e = -dat[i] + rho[i] * (kd2 / k2[i]);
            (div_e - rho[i]).norm_sqr()
        }) * g.volume();
        let rho_norm = self.rho_hat.weighted_energy(|_| 1.0).sqrt();

        let b = self.a_hat.curl();
        let div_b = l2(&b.divergence());
        let b_norm = b.weighted_energy(|_| 1.0).sqrt();

        let ratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
        Residuals {
            div_a: ratio(div_a, a_norm),
            gauss: ratio(gauss_sq.sqrt(), rho_norm),
            div_b: ratio(div_b, b_norm),
        }
    }

    fn norms(&self) -> [f64; 7] {
        let k2 = self.grid().k2();
        std::array::from_fn(|j| {
            let (field, s) = NORM_KEYS[j];
            let w = |i: usize| (1.0 + k2[i]).powf(s);
            match field {
                "u" => self.u_hat.weighted_energy(w).sqrt(),
                "A" => self.a_hat.weighted_energy(w).sqrt(),
                _ => self.at_hat.weighted_energy(w).sqrt(),
            }
        })
    }
}

/// `int |u|^2`.
pub fn mass(state: &SimState) -> f64 {
    state.u.norm_l2().powi(2)
}

/// Energy with half weight on the covariant kinetic term.
pub fn energy(state: &SimState) -> f64 {
    energy_parts(state).total()
}

pub fn energy_parts(state: &SimState) -> EnergyParts {
    Analysis::new(state).parts(0.5, 0.0)
}

/// Regularized energy with unit weight on the smoothed covariant term.
///
/// At `epsilon = 0` this exceeds [`energy`] by exactly `1/2 |(grad - iA)u|^2`.
pub fn energy_regularized(state: &SimState) -> f64 {
    Analysis::new(state).parts(1.0, state.epsilon).total()
}

/// Regularized energy with half weight on the covariant term. This is the
/// functional conserved by the regularized dynamics.
pub fn energy_yosida(state: &SimState) -> f64 {
    Analysis::new(state).parts(0.5, state.epsilon).total()
}

/// Relative constraint residuals `(div A, Gauss law, div B)`.
///
/// The Gauss residual excludes modes on the Nyquist planes, where the
/// first-derivative symbol vanishes and no discrete divergence exists.
pub fn constraint_residuals(state: &SimState) -> Residuals {
    Analysis::new(state).residuals()
}

/// All diagnostics of one state.
pub fn record(state: &SimState) -> DiagnosticsRecord {
    let an = Analysis::new(state);
    let parts = an.parts(0.5, 0.0);
    let (energy_regularized, energy_yosida) = if state.epsilon == 0.0 {
        (parts.total() + parts.kinetic, parts.total())
    } else {
        (an.parts(1.0, state.epsilon).total(), an.parts(0.5, state.epsilon).total())
    };
    let res = an.residuals();
    DiagnosticsRecord {
        t: state.t,
        mass: an.mass(),
        energy: parts.total(),
        energy_regularized,
        energy_yosida,
        div_a_residual: res.div_a,
        gauss_residual: res.gauss,
        div_b_residual: res.div_b,
        norms: an.norms(),
        parts,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlowupThresholds {
    /// Limit on `|u|_{H^2}`.
    pub u_h2: f64,
    /// Limit on `|A|_{H^{3/2}}`.
    pub a_h32: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        Self { u_h2: 1e6, a_h32: 1e6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Continue,
    BlowUp { field: &'static str, norm: f64, threshold: f64 },
}

/// Flags a record whose controlling norms exceed the thresholds (or are not finite).
pub fn blowup_monitor(record: &DiagnosticsRecord, thresholds: &BlowupThresholds) -> Verdict {
    check_norms(
        record.norm("u", 2.0).unwrap_or(f64::NAN),
        record.norm("A", 1.5).unwrap_or(f64::NAN),
        thresholds,
    )
}

pub(crate) fn check_norms(u_h2: f64, a_h32: f64, thresholds: &BlowupThresholds) -> Verdict {
    if !(u_h2 <= thresholds.u_h2) {
        return Verdict::BlowUp { field: "u_H2", norm: u_h2, threshold: thresholds.u_h2 };
    }
    if !(a_h32 <= thresholds.a_h32) {
        return Verdict::BlowUp { field: "A_H1.5", norm: a_h32, threshold: thresholds.a_h32 };
    }
    Verdict::Continue
}
