//! Named initial data.

use std::f64::consts::PI;

use mswave_core::spectral::{leray_project, Grid, ScalarField, VectorField};
use mswave_core::state::SimState;
use mswave_core::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Initial wave function. Every preset is dealiased after sampling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WavePreset {
    /// `amplitude * exp(-|x-c|^2 / (2 sigma^2)) * exp(i k0.x)`; the centre
    /// defaults to the middle of the box.
    GaussianPacket {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
        #[serde(default)]
        center: Option<[f64; 3]>,
        #[serde(default = "default_k0")]
        k0: [f64; 3],
    },
    /// `amplitude * exp(i k_m.x)` with integer mode numbers `m`.
    PlaneWave {
        #[serde(default = "one")]
        amplitude: f64,
        mode: [i64; 3],
    },
    Zero,
}

/// Initial vector potential or its time derivative. Every preset is
/// Leray-projected, so it satisfies the Coulomb gauge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldPreset {
    Zero,
    /// Swirl `amplitude * exp(-|x-c|^2 / width^2) * (-(y-c_y), x-c_x, 0)`.
    SolenoidalBump {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "default_width")]
        width: f64,
        #[serde(default)]
        center: Option<[f64; 3]>,
    },
    /// `amplitude * e * sin(k_m.x)` with `e` the unit vector of `direction`
    /// (its component along `k_m` is projected out).
    Wave {
        #[serde(default = "one")]
        amplitude: f64,
        mode: [i64; 3],
        direction: [f64; 3],
    },
}

fn one() -> f64 {
    1.0
}
fn default_sigma() -> f64 {
    1.3
}
fn default_k0() -> [f64; 3] {
    [0.5, 0.0, 0.0]
}
fn default_width() -> f64 {
    3.0
}

impl Default for WavePreset {
    fn default() -> Self {
        WavePreset::GaussianPacket { amplitude: 1.0, sigma: default_sigma(), center: None, k0: default_k0() }
    }
}

fn middle(grid: &Grid, c: Option<[f64; 3]>) -> [f64; 3] {
    c.unwrap_or([0.5 * grid.len(); 3])
}

fn finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} must be finite")))
    }
}

impl WavePreset {
    pub fn validate(&self) -> Result<()> {
        match self {
            WavePreset::GaussianPacket { amplitude, sigma, center, k0 } => {
                if !(*sigma > 0.0) {
                    return Err(Error::InvalidParameter(format!("sigma = {sigma} must be positive")));
                }
                finite(&[*amplitude, k0[0], k0[1], k0[2]], "gaussian-packet parameters")?;
                finite(&center.unwrap_or([0.0; 3]), "center")
            }
            WavePreset::PlaneWave { amplitude, .. } => finite(&[*amplitude], "amplitude"),
            WavePreset::Zero => Ok(()),
        }
    }

    pub fn sample(&self, grid: &Grid) -> ScalarField {
        let raw = match self {
            WavePreset::GaussianPacket { amplitude, sigma, center, k0 } => {
                let c = middle(grid, *center);
                let s2 = 2.0 * sigma * sigma;
                ScalarField::from_fn(grid, |x| {
                    let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
                    let ph = k0[0] * x[0] + k0[1] * x[1] + k0[2] * x[2];
                    Complex64::from_polar(amplitude * (-r2 / s2).exp(), ph)
                })
            }
            WavePreset::PlaneWave { amplitude, mode } => {
                let k = mode.map(|m| 2.0 * PI * m as f64 / grid.len());
                ScalarField::from_fn(grid, |x| Complex64::from_polar(*amplitude, k[0] * x[0] + k[1] * x[1] + k[2] * x[2]))
            }
            WavePreset::Zero => ScalarField::zeros(grid),
        };
        raw.spectrum().dealiased().into_field()
    }
}

impl FieldPreset {
    pub fn validate(&self) -> Result<()> {
        match self {
            FieldPreset::Zero => Ok(()),
            FieldPreset::SolenoidalBump { amplitude, width, center } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidParameter(format!("width = {width} must be positive")));
                }
                finite(&[*amplitude], "amplitude")?;
                finite(&center.unwrap_or([0.0; 3]), "center")
            }
            FieldPreset::Wave { amplitude, direction, .. } => {
                finite(&[*amplitude, direction[0], direction[1], direction[2]], "wave parameters")?;
                if direction.iter().all(|d| *d == 0.0) {
                    return Err(Error::InvalidParameter("wave direction must be nonzero".into()));
                }
                Ok(())
            }
        }
    }

    pub fn sample(&self, grid: &Grid) -> VectorField {
        let raw = match self {
            FieldPreset::Zero => return VectorField::zeros(grid),
            FieldPreset::SolenoidalBump { amplitude, width, center } => {
                let c = middle(grid, *center);
                let w2 = width * width;
                VectorField::from_real_fn(grid, |x| {
                    let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
                    let e = amplitude * (-(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) / w2).exp();
                    [-d[1] * e, d[0] * e, 0.0]
                })
            }
            FieldPreset::Wave { amplitude, mode, direction } => {
                let k = mode.map(|m| 2.0 * PI * m as f64 / grid.len());
                let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
                let e = direction.map(|d| d / norm);
                VectorField::from_real_fn(grid, |x| {
                    let s = amplitude * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]).sin();
                    [s * e[0], s * e[1], s * e[2]]
                })
            }
        };
        leray_project(&raw)
    }
}

/// Samples the presets into a state at `t = 0`.
pub fn initial_state(
    grid: &Grid,
    u: &WavePreset,
    a0: &FieldPreset,
    a1: &FieldPreset,
    gamma: f64,
    epsilon: f64,
) -> Result<SimState> {
    SimState::new(0.0, u.sample(grid), a0.sample(grid), a1.sample(grid), gamma, epsilon)
}
