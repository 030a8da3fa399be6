//! Spectral differential operators and Fourier multipliers.

use num_complex::Complex64;

use super::field::{ScalarField, Spectrum, VectorField, VectorSpectrum};
use super::grid::Grid;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Fourier-series coefficients of `f`.
pub fn forward_transform(f: &ScalarField) -> Spectrum {
    f.spectrum()
}

/// Grid samples of a coefficient set.
pub fn inverse_transform(s: &Spectrum) -> ScalarField {
    s.field()
}

impl Spectrum {
    /// `i k` times the coefficients, Nyquist modes zeroed.
    pub fn gradient(&self) -> VectorSpectrum {
        let g = self.grid();
        VectorSpectrum::from_parts(std::array::from_fn(|c| {
            self.multiply(|i| I * g.derivative_vector(i)[c])
        }))
    }

    pub fn laplacian(&self) -> Spectrum {
        let k2 = self.grid().k2();
        self.multiply(|i| re(-k2[i]))
    }

    /// Zeroes the modes outside the two-thirds mask.
    pub fn dealiased(&self) -> Spectrum {
        let mask = self.grid().mask();
        self.multiply(|i| if mask[i] { re(1.0) } else { re(0.0) })
    }
}

impl VectorSpectrum {
    pub fn divergence(&self) -> Spectrum {
        let g = self.grid().clone();
        let [x, y, z] = self.comps();
        let mut out = Spectrum::zeros(&g);
        let (xv, yv, zv) = (x.values(), y.values(), z.values());
        crate::par::for_each_mut(out.values_mut(), |i, o| {
            let k = g.derivative_vector(i);
            *o = I * (xv[i] * k[0] + yv[i] * k[1] + zv[i] * k[2]);
        });
        out
    }

    pub fn curl(&self) -> VectorSpectrum {
        let g = self.grid().clone();
        let [x, y, z] = self.comps();
        let (xv, yv, zv) = (x.values(), y.values(), z.values());
        let comp = |c: usize| {
            let mut out = Spectrum::zeros(&g);
            crate::par::for_each_mut(out.values_mut(), |i, o| {
                let k = g.derivative_vector(i);
                *o = I * match c {
                    0 => zv[i] * k[1] - yv[i] * k[2],
                    1 => xv[i] * k[2] - zv[i] * k[0],
                    _ => yv[i] * k[0] - xv[i] * k[1],
                };
            });
            out
        };
        VectorSpectrum::from_parts([comp(0), comp(1), comp(2)])
    }

    /// Removes the gradient part mode by mode; see [`leray_project`].
    pub fn leray(&self) -> VectorSpectrum {
        let g = self.grid().clone();
        let [x, y, z] = self.comps();
        let (xv, yv, zv) = (x.values(), y.values(), z.values());
        let mut out = [Spectrum::zeros(&g), Spectrum::zeros(&g), Spectrum::zeros(&g)];
        let n3 = g.points();
        let projected: Vec<[Complex64; 3]> = crate::par::collect_indexed(n3, |i| {
            let k = g.derivative_vector(i);
            let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if kk == 0.0 {
                return [Complex64::new(0.0, 0.0); 3];
            }
            let v = [xv[i], yv[i], zv[i]];
            let kv = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / kk;
            [v[0] - kv * k[0], v[1] - kv * k[1], v[2] - kv * k[2]]
        });
        for (c, o) in out.iter_mut().enumerate() {
            for (dst, p) in o.values_mut().iter_mut().zip(&projected) {
                *dst = p[c];
            }
        }
        VectorSpectrum::from_parts(out)
    }

    pub fn dealiased(&self) -> VectorSpectrum {
        VectorSpectrum::from_parts(std::array::from_fn(|c| self.comps()[c].dealiased()))
    }
}

/// Spectral gradient.
pub fn gradient(f: &ScalarField) -> VectorField {
    f.spectrum().gradient().into_field()
}

/// Spectral divergence.
pub fn divergence(v: &VectorField) -> ScalarField {
    v.spectrum().divergence().into_field()
}

/// Spectral curl.
pub fn curl(v: &VectorField) -> VectorField {
    v.spectrum().curl().into_field()
}

/// Spectral Laplacian `-|k|^2`.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    f.spectrum().laplacian().into_field()
}

/// Solves `-lap(phi) = f - mean(f)` with `phi` of zero mean. Output is real.
pub fn inv_neg_laplacian(f: &ScalarField) -> ScalarField {
    inv_neg_laplacian_spectrum(&f.spectrum()).into_field().real_part()
}

/// Coefficient-level form of [`inv_neg_laplacian`].
pub fn inv_neg_laplacian_spectrum(s: &Spectrum) -> Spectrum {
    let k2 = s.grid().k2();
    s.multiply(|i| if k2[i] == 0.0 { re(0.0) } else { re(1.0 / k2[i]) })
}

/// Leray projection onto divergence-free fields.
///
/// Each mode loses its component along the first-derivative wavevector; the
/// mean mode and modes with a vanishing derivative symbol (Nyquist corners)
/// are zeroed, so the discrete divergence of the result vanishes identically.
pub fn leray_project(v: &VectorField) -> VectorField {
    v.spectrum().leray().into_field().real_part()
}

/// Fields that can be multiplied by a radial Fourier symbol.
pub trait Spectral: Sized {
    fn grid_ref(&self) -> &Grid;
    /// Multiplies every mode by `symbol(|k|^2)` evaluated per flat index.
    fn apply_radial(&self, symbol: &(dyn Fn(usize) -> f64 + Sync)) -> Self;
    /// `L^3 * sum_m w(m) |c_m|^2` over all components.
    fn spectral_energy(&self, weight: &(dyn Fn(usize) -> f64 + Sync)) -> f64;
}

impl Spectral for Spectrum {
    fn grid_ref(&self) -> &Grid {
        self.grid()
    }
    fn apply_radial(&self, symbol: &(dyn Fn(usize) -> f64 + Sync)) -> Self {
        self.multiply(|i| re(symbol(i)))
    }
    fn spectral_energy(&self, weight: &(dyn Fn(usize) -> f64 + Sync)) -> f64 {
        self.weighted_energy(weight)
    }
}

impl Spectral for VectorSpectrum {
    fn grid_ref(&self) -> &Grid {
        self.grid()
    }
    fn apply_radial(&self, symbol: &(dyn Fn(usize) -> f64 + Sync)) -> Self {
        self.multiply(|i| re(symbol(i)))
    }
    fn spectral_energy(&self, weight: &(dyn Fn(usize) -> f64 + Sync)) -> f64 {
        self.weighted_energy(weight)
    }
}

impl Spectral for ScalarField {
    fn grid_ref(&self) -> &Grid {
        self.grid()
    }
    fn apply_radial(&self, symbol: &(dyn Fn(usize) -> f64 + Sync)) -> Self {
        self.spectrum().apply_radial(symbol).into_field()
    }
    fn spectral_energy(&self, weight: &(dyn Fn(usize) -> f64 + Sync)) -> f64 {
        self.spectrum().spectral_energy(weight)
    }
}

impl Spectral for VectorField {
    fn grid_ref(&self) -> &Grid {
        self.grid()
    }
    fn apply_radial(&self, symbol: &(dyn Fn(usize) -> f64 + Sync)) -> Self {
        self.map_comps(|c| c.apply_radial(symbol))
    }
    fn spectral_energy(&self, weight: &(dyn Fn(usize) -> f64 + Sync)) -> f64 {
        self.comps().iter().map(|c| c.spectral_energy(weight)).sum()
    }
}

/// Yosida smoother `(I - eps lap)^{-1}`; `eps = 0` returns an exact copy.
pub fn yosida_smooth<T: Spectral + Clone>(f: &T, eps: f64) -> T {
    assert!(eps >= 0.0, "Yosida parameter must be nonnegative");
    if eps == 0.0 {
        return f.clone();
    }
    let k2 = f.grid_ref().k2();
    f.apply_radial(&|i| 1.0 / (1.0 + eps * k2[i]))
}

/// Bessel potential `(I - lap)^{s/2}`.
pub fn bessel_potential<T: Spectral>(f: &T, s: f64) -> T {
    let k2 = f.grid_ref().k2();
    f.apply_radial(&|i| (1.0 + k2[i]).powf(0.5 * s))
}

/// `H^s` norm: `(L^3 sum (1+|k|^2)^s |c_k|^2)^{1/2}`.
pub fn sobolev_norm<T: Spectral>(f: &T, s: f64) -> f64 {
    let k2 = f.grid_ref().k2();
    if s == 0.0 {
        return f.spectral_energy(&|_| 1.0).sqrt();
    }
    f.spectral_energy(&|i| (1.0 + k2[i]).powf(s)).sqrt()
}

/// Two-thirds dealiasing.
pub fn dealias<T: Spectral>(f: &T) -> T {
    let mask = f.grid_ref().mask();
    f.apply_radial(&|i| if mask[i] { 1.0 } else { 0.0 })
}
