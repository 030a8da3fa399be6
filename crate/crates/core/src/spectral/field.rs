use num_complex::Complex64;

use super::fft;
use super::grid::Grid;
use crate::error::{Error, Result};
use crate::par;

/// Complex samples on a [`Grid`]. Real quantities keep a zero imaginary part.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<Complex64>,
}

/// Fourier-series coefficients: `f(x) = sum_m c_m exp(i k_m . x)`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Grid,
    data: Vec<Complex64>,
}

/// Three scalar components on a shared grid.
#[derive(Clone, Debug)]
pub struct VectorField {
    comps: [ScalarField; 3],
}

/// Three spectra on a shared grid.
#[derive(Clone, Debug)]
pub struct VectorSpectrum {
    comps: [Spectrum; 3],
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), data: grid.zeros() }
    }

    pub fn constant(grid: &Grid, c: Complex64) -> Self {
        Self { grid: grid.clone(), data: vec![c; grid.points()] }
    }

    pub fn from_values(grid: &Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.points() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.points(),
                data.len()
            )));
        }
        Ok(Self { grid: grid.clone(), data })
    }

    /// Samples `f(x, y, z)` at every grid point.
    pub fn from_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Complex64 + Sync + Send,
    {
        let data = par::collect_indexed(grid.points(), |i| f(grid.position(i)));
        Self { grid: grid.clone(), data }
    }

    /// Samples a real function.
    pub fn from_real_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.data
    }

    /// Forward transform.
    pub fn spectrum(&self) -> Spectrum {
        let mut data = self.data.clone();
        fft::forward_in_place(&self.grid, &mut data);
        Spectrum { grid: self.grid.clone(), data }
    }

    /// Forward transform consuming the samples.
    pub fn into_spectrum(mut self) -> Spectrum {
        fft::forward_in_place(&self.grid, &mut self.data);
        Spectrum { grid: self.grid, data: self.data }
    }

    /// Pointwise map.
    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Sync + Send,
    {
        let data = par::collect_indexed(self.data.len(), |i| f(self.data[i]));
        Self { grid: self.grid.clone(), data }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map<F>(&self, other: &ScalarField, f: F) -> Self
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync + Send,
    {
        assert!(self.grid.same_as(&other.grid), "fields live on different grids");
        let data = par::collect_indexed(self.data.len(), |i| f(self.data[i], other.data[i]));
        Self { grid: self.grid.clone(), data }
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|a| a * c)
    }

    /// Copy with the imaginary part dropped.
    pub fn real_part(&self) -> Self {
        self.map(|a| Complex64::new(a.re, 0.0))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest imaginary magnitude, used to check real-valuedness.
    pub fn max_imag(&self) -> f64 {
        par::max_indexed(self.data.len(), |i| self.data[i].im.abs())
    }

    pub fn max_abs(&self) -> f64 {
        par::max_indexed(self.data.len(), |i| self.data[i].norm())
    }

    /// Trapezoid-rule integral over the box.
    pub fn integral(&self) -> Complex64 {
        let re = par::sum_indexed(self.data.len(), |i| self.data[i].re);
        let im = par::sum_indexed(self.data.len(), |i| self.data[i].im);
        Complex64::new(re, im) * self.grid.cell_volume()
    }

    pub fn mean(&self) -> Complex64 {
        self.integral() / self.grid.volume()
    }

    /// `L^2` norm by quadrature.
    pub fn norm_l2(&self) -> f64 {
        (par::sum_indexed(self.data.len(), |i| self.data[i].norm_sqr()) * self.grid.cell_volume())
            .sqrt()
    }

    /// `L^p` norm by quadrature; `p = inf` gives the grid maximum.
    pub fn norm_lp(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let s = par::sum_indexed(self.data.len(), |i| self.data[i].norm().powf(p));
        (s * self.grid.cell_volume()).powf(1.0 / p)
    }
}

impl Spectrum {
    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), data: grid.zeros() }
    }

    pub fn from_values(grid: &Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.points() {
            return Err(Error::InvalidParameter(format!(
                "expected {} coefficients, got {}",
                grid.points(),
                data.len()
            )));
        }
        Ok(Self { grid: grid.clone(), data })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.data
    }

    /// Inverse transform back to grid samples.
    pub fn field(&self) -> ScalarField {
        let mut data = self.data.clone();
        fft::inverse_in_place(&self.grid, &mut data);
        ScalarField { grid: self.grid.clone(), data }
    }

    /// Inverse transform consuming the coefficients.
    pub fn into_field(mut self) -> ScalarField {
        fft::inverse_in_place(&self.grid, &mut self.data);
        ScalarField { grid: self.grid, data: self.data }
    }

    /// Multiplies every mode by `symbol(flat_index)`.
    pub fn multiply<F>(&self, symbol: F) -> Self
    where
        F: Fn(usize) -> Complex64 + Sync + Send,
    {
        let data = par::collect_indexed(self.data.len(), |i| self.data[i] * symbol(i));
        Self { grid: self.grid.clone(), data }
    }

    /// In-place version of [`Spectrum::multiply`].
    pub fn multiply_in_place<F>(&mut self, symbol: F)
    where
        F: Fn(usize) -> Complex64 + Sync + Send,
    {
        par::for_each_mut(&mut self.data, |i, c| *c *= symbol(i));
    }

    pub fn add(&self, other: &Spectrum) -> Self {
        assert!(self.grid.same_as(&other.grid), "spectra live on different grids");
        let data = par::collect_indexed(self.data.len(), |i| self.data[i] + other.data[i]);
        Self { grid: self.grid.clone(), data }
    }

    pub fn sub(&self, other: &Spectrum) -> Self {
        assert!(self.grid.same_as(&other.grid), "spectra live on different grids");
        let data = par::collect_indexed(self.data.len(), |i| self.data[i] - other.data[i]);
        Self { grid: self.grid.clone(), data }
    }

    /// `sum_m w(m) |c_m|^2` times the box volume.
    pub fn weighted_energy<F>(&self, weight: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        par::sum_indexed(self.data.len(), |i| weight(i) * self.data[i].norm_sqr()) * self.grid.volume()
    }
}

impl VectorField {
    pub fn new(comps: [ScalarField; 3]) -> Result<Self> {
        if !(comps[0].grid.same_as(&comps[1].grid) && comps[0].grid.same_as(&comps[2].grid)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { comps })
    }

    pub(crate) fn from_parts(comps: [ScalarField; 3]) -> Self {
        debug_assert!(comps[0].grid.same_as(&comps[1].grid));
        Self { comps }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::from_parts([ScalarField::zeros(grid), ScalarField::zeros(grid), ScalarField::zeros(grid)])
    }

    /// Samples a real vector-valued function.
    pub fn from_real_fn<F>(grid: &Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync + Send,
    {
        let f = &f;
        Self::from_parts(std::array::from_fn(|c| ScalarField::from_real_fn(grid, move |x| f(x)[c])))
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    pub fn comps(&self) -> &[ScalarField; 3] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [ScalarField; 3] {
        &mut self.comps
    }

    pub fn into_comps(self) -> [ScalarField; 3] {
        self.comps
    }

    pub fn spectrum(&self) -> VectorSpectrum {
        VectorSpectrum { comps: std::array::from_fn(|c| self.comps[c].spectrum()) }
    }

    pub fn map_comps<F>(&self, f: F) -> Self
    where
        F: Fn(&ScalarField) -> ScalarField,
    {
        Self::from_parts(std::array::from_fn(|c| f(&self.comps[c])))
    }

    pub fn add(&self, other: &VectorField) -> Self {
        Self::from_parts(std::array::from_fn(|c| self.comps[c].add(&other.comps[c])))
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        Self::from_parts(std::array::from_fn(|c| self.comps[c].sub(&other.comps[c])))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_comps(|f| f.scale(Complex64::new(s, 0.0)))
    }

    /// Multiplies each component by a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> Self {
        self.map_comps(|f| f.mul(s))
    }

    pub fn real_part(&self) -> Self {
        self.map_comps(ScalarField::real_part)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(ScalarField::is_finite)
    }

    pub fn max_imag(&self) -> f64 {
        self.comps.iter().map(ScalarField::max_imag).fold(0.0, f64::max)
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_magnitude(&self) -> f64 {
        let [x, y, z] = &self.comps;
        par::max_indexed(x.data.len(), |i| {
            (x.data[i].norm_sqr() + y.data[i].norm_sqr() + z.data[i].norm_sqr()).sqrt()
        })
    }

    pub fn norm_l2(&self) -> f64 {
        self.comps.iter().map(|c| c.norm_l2().powi(2)).sum::<f64>().sqrt()
    }

    /// `L^p` norm of the pointwise Euclidean magnitude.
    pub fn norm_lp(&self, p: f64) -> f64 {
        let [x, y, z] = &self.comps;
        let mag = |i: usize| (x.data[i].norm_sqr() + y.data[i].norm_sqr() + z.data[i].norm_sqr()).sqrt();
        if p.is_infinite() {
            return self.max_magnitude();
        }
        let s = par::sum_indexed(x.data.len(), |i| mag(i).powf(p));
        (s * self.grid().cell_volume()).powf(1.0 / p)
    }

    /// Pointwise dot product with another vector field (no conjugation).
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let [ax, ay, az] = &self.comps;
        let [bx, by, bz] = &other.comps;
        let data = par::collect_indexed(ax.data.len(), |i| {
            ax.data[i] * bx.data[i] + ay.data[i] * by.data[i] + az.data[i] * bz.data[i]
        });
        ScalarField { grid: self.grid().clone(), data }
    }

    /// Pointwise cross product.
    pub fn cross(&self, other: &VectorField) -> VectorField {
        let [ax, ay, az] = &self.comps;
        let [bx, by, bz] = &other.comps;
        let x = ay.zip_map(bz, |a, b| a * b).sub(&az.zip_map(by, |a, b| a * b));
        let y = az.zip_map(bx, |a, b| a * b).sub(&ax.zip_map(bz, |a, b| a * b));
        let z = ax.zip_map(by, |a, b| a * b).sub(&ay.zip_map(bx, |a, b| a * b));
        Self::from_parts([x, y, z])
    }
}

impl VectorSpectrum {
    pub fn new(comps: [Spectrum; 3]) -> Result<Self> {
        if !(comps[0].grid.same_as(&comps[1].grid) && comps[0].grid.same_as(&comps[2].grid)) {
            return Err(Error::GridMismatch);
        }
        Ok(Self { comps })
    }

    pub(crate) fn from_parts(comps: [Spectrum; 3]) -> Self {
        Self { comps }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { comps: [Spectrum::zeros(grid), Spectrum::zeros(grid), Spectrum::zeros(grid)] }
    }

    pub fn grid(&self) -> &Grid {
        self.comps[0].grid()
    }

    pub fn comps(&self) -> &[Spectrum; 3] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Spectrum; 3] {
        &mut self.comps
    }

    pub fn field(&self) -> VectorField {
        VectorField::from_parts(std::array::from_fn(|c| self.comps[c].field()))
    }

    pub fn into_field(self) -> VectorField {
        let [x, y, z] = self.comps;
        VectorField::from_parts([x.into_field(), y.into_field(), z.into_field()])
    }

    /// Applies the same scalar symbol to every component.
    pub fn multiply<F>(&self, symbol: F) -> Self
    where
        F: Fn(usize) -> Complex64 + Sync + Send,
    {
        let symbol = &symbol;
        Self { comps: std::array::from_fn(|c| self.comps[c].multiply(symbol)) }
    }

    pub fn weighted_energy<F>(&self, weight: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let weight = &weight;
        self.comps.iter().map(|c| c.weighted_energy(weight)).sum()
    }
}

/// Forward transforms of real fields, packing two per complex FFT.
///
/// Imaginary parts of the inputs are ignored.
pub fn real_spectra(fields: &[&ScalarField]) -> Vec<Spectrum> {
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let grid = pair[0].grid.clone();
        match pair {
            [f, g] => {
                let (a, b) = fft::forward_real_pair(&grid, &f.data, &g.data);
                out.push(Spectrum { grid: grid.clone(), data: a });
                out.push(Spectrum { grid, data: b });
            }
            [f] => out.push(f.real_part().into_spectrum()),
            _ => unreachable!(),
        }
    }
    out
}

/// Inverse transforms of Hermitian spectra, packing two per complex FFT.
/// Outputs are real.
pub fn real_fields(spectra: &[&Spectrum]) -> Vec<ScalarField> {
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        let grid = pair[0].grid.clone();
        match pair {
            [f, g] => {
                let (a, b) = fft::inverse_real_pair(&grid, &f.data, &g.data);
                out.push(ScalarField { grid: grid.clone(), data: a });
                out.push(ScalarField { grid, data: b });
            }
            [f] => out.push(f.field().real_part()),
            _ => unreachable!(),
        }
    }
    out
}

impl VectorField {
    /// Spectrum of a real vector field (two components per FFT).
    pub fn real_spectrum(&self) -> VectorSpectrum {
        let [x, y, z] = &self.comps;
        let mut s = real_spectra(&[x, y, z]).into_iter();
        VectorSpectrum { comps: std::array::from_fn(|_| s.next().unwrap()) }
    }
}

impl VectorSpectrum {
    /// Real field of a Hermitian vector spectrum (two components per FFT).
    pub fn real_field(&self) -> VectorField {
        let [x, y, z] = &self.comps;
        let mut f = real_fields(&[x, y, z]).into_iter();
        VectorField::from_parts(std::array::from_fn(|_| f.next().unwrap()))
    }
}
