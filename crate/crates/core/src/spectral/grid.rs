use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Periodic cubic box `[0, L)^3` sampled with `n` points per axis.
///
/// Cloning is cheap; all clones share wavenumber tables and FFT plans.
/// Grid points are stored with flat index `(ix * n + iy) * n + iz`.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    len: f64,
    /// Wavenumber per 1-D index, `2 pi m / L` with `m` in `[-n/2, n/2)`.
    k: Vec<f64>,
    /// Same as `k` with the Nyquist entry zeroed (first-derivative symbol).
    kd: Vec<f64>,
    /// Two-thirds rule per 1-D index: keep `|m| <= n/3`.
    keep: Vec<bool>,
    /// `|k|^2` per flat mode index (Nyquist included).
    k2: Vec<f64>,
    /// Dealiasing mask per flat mode index.
    mask: Vec<bool>,
    /// True where some axis sits on the Nyquist index.
    nyquist: Vec<bool>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub fn new(n: usize, len: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least 8"
            )));
        }
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidGrid(format!("box length {len} must be positive")));
        }
        let modes: Vec<i64> = (0..n).map(|i| mode_number(i, n)).collect();
        let k: Vec<f64> = modes.iter().map(|&m| 2.0 * PI * m as f64 / len).collect();
        let half = (n / 2) as i64;
        let kd: Vec<f64> = modes
            .iter()
            .zip(&k)
            .map(|(&m, &kk)| if m == -half { 0.0 } else { kk })
            .collect();
        let keep: Vec<bool> = modes.iter().map(|&m| 3 * m.unsigned_abs() as usize <= n).collect();

        let n3 = n * n * n;
        let mut k2 = Vec::with_capacity(n3);
        let mut mask = Vec::with_capacity(n3);
        let mut nyquist = Vec::with_capacity(n3);
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..n {
                    k2.push(k[ix] * k[ix] + k[iy] * k[iy] + k[iz] * k[iz]);
                    mask.push(keep[ix] && keep[iy] && keep[iz]);
                    nyquist.push(modes[ix] == -half || modes[iy] == -half || modes[iz] == -half);
                }
            }
        }

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner { n, len, k, kd, keep, k2, mask, nyquist, fwd, inv }),
        })
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Total number of grid points.
    pub fn points(&self) -> usize {
        self.inner.n.pow(3)
    }

    /// Box side length.
    pub fn len(&self) -> f64 {
        self.inner.len
    }

    pub fn dx(&self) -> f64 {
        self.inner.len / self.inner.n as f64
    }

    pub fn volume(&self) -> f64 {
        self.inner.len.powi(3)
    }

    /// Quadrature weight of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    /// Integer mode number of 1-D index `i`.
    pub fn mode(&self, i: usize) -> i64 {
        mode_number(i, self.inner.n)
    }

    /// 1-D wavenumber table.
    pub fn k(&self) -> &[f64] {
        &self.inner.k
    }

    /// 1-D first-derivative symbol (Nyquist zeroed).
    pub fn kd(&self) -> &[f64] {
        &self.inner.kd
    }

    /// 1-D two-thirds keep flags.
    pub fn keep(&self) -> &[bool] {
        &self.inner.keep
    }

    /// `|k|^2` per flat mode index.
    pub fn k2(&self) -> &[f64] {
        &self.inner.k2
    }

    /// Dealiasing mask per flat mode index (true = keep).
    pub fn mask(&self) -> &[bool] {
        &self.inner.mask
    }

    /// True for modes lying on a Nyquist plane.
    pub fn nyquist(&self) -> &[bool] {
        &self.inner.nyquist
    }

    /// Splits a flat index into `(ix, iy, iz)`.
    #[inline]
    pub fn unflatten(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.inner.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    #[inline]
    pub fn flatten(&self, ix: usize, iy: usize, iz: usize) -> usize {
        let n = self.inner.n;
        (ix * n + iy) * n + iz
    }

    /// Physical coordinates of a flat index.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, iz) = self.unflatten(idx);
        let dx = self.dx();
        [ix as f64 * dx, iy as f64 * dx, iz as f64 * dx]
    }

    /// Full wavevector of a flat mode index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, iz) = self.unflatten(idx);
        let k = &self.inner.k;
        [k[ix], k[iy], k[iz]]
    }

    /// First-derivative wavevector of a flat mode index.
    #[inline]
    pub fn derivative_vector(&self, idx: usize) -> [f64; 3] {
        let (ix, iy, iz) = self.unflatten(idx);
        let kd = &self.inner.kd;
        [kd[ix], kd[iy], kd[iz]]
    }

    /// Grids are interchangeable when size and box length agree.
    pub fn same_as(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.len == other.inner.len)
    }

    pub(crate) fn fft_forward(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.fwd
    }

    pub(crate) fn fft_inverse(&self) -> &Arc<dyn Fft<f64>> {
        &self.inner.inv
    }

    /// Allocates a zeroed buffer of grid size.
    pub(crate) fn zeros(&self) -> Vec<Complex64> {
        vec![Complex64::new(0.0, 0.0); self.points()]
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("n", &self.inner.n).field("len", &self.inner.len).finish()
    }
}

fn mode_number(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
