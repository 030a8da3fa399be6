//! Three-dimensional complex FFT built from 1-D rustfft plans.
//!
//! The contiguous axis is transformed in place; the other two are moved
//! into a per-thread tile, transformed as rows and written back.

use std::cell::RefCell;

use num_complex::Complex64;

use super::grid::Grid;
use crate::par;

thread_local! {
    static TILE: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
    static SCRATCH: RefCell<Vec<Complex64>> = const { RefCell::new(Vec::new()) };
}

/// Forward transform to Fourier-series coefficients (scaled by `1/n^3`).
pub(crate) fn forward_in_place(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, false);
    let scale = 1.0 / grid.points() as f64;
    par::for_each_mut(data, |_, c| *c *= scale);
}

/// Inverse transform from Fourier-series coefficients (unscaled).
pub(crate) fn inverse_in_place(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, true);
}

/// Flat index of the mode `-m` for the mode stored at `idx`.
#[inline]
pub(crate) fn negated_index(n: usize, idx: usize) -> usize {
    let mask = n - 1;
    let (ix, iy, iz) = (idx / (n * n), (idx / n) % n, idx % n);
    let neg = |i: usize| (n - i) & mask;
    (neg(ix) * n + neg(iy)) * n + neg(iz)
}

/// Forward transforms of two real arrays (imaginary parts ignored) done
/// with a single complex FFT.
pub(crate) fn forward_real_pair(
    grid: &Grid,
    f: &[Complex64],
    g: &[Complex64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = grid.n();
    let mut z: Vec<Complex64> = par::collect_indexed(f.len(), |i| Complex64::new(f[i].re, g[i].re));
    forward_in_place(grid, &mut z);
    let z = &z;
    let split = par::collect_indexed(z.len(), |i| {
        let a = z[i];
        let b = z[negated_index(n, i)].conj();
        ((a + b) * 0.5, Complex64::new(0.0, -0.5) * (a - b))
    });
    split.into_iter().unzip()
}

/// Inverse transforms of two Hermitian coefficient arrays with a single
/// complex FFT. Outputs are real.
pub(crate) fn inverse_real_pair(
    grid: &Grid,
    fh: &[Complex64],
    gh: &[Complex64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut z: Vec<Complex64> = par::collect_indexed(fh.len(), |k| fh[k] + i * gh[k]);
    inverse_in_place(grid, &mut z);
    let f = par::collect_indexed(z.len(), |k| Complex64::new(z[k].re, 0.0));
    let g = par::collect_indexed(z.len(), |k| Complex64::new(z[k].im, 0.0));
    (f, g)
}

fn transform(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    debug_assert_eq!(data.len(), n * n * n);
    let plan = if inverse { grid.fft_inverse() } else { grid.fft_forward() };
    let plan = plan.as_ref();
    let plane = n * n;

    // z: contiguous lines.
    par::for_each_chunk_mut(data, plane, |_, p| run_lines(plan, p));

    // y: transpose each x-plane in a tile, transform rows, transpose back.
    par::for_each_chunk_mut(data, plane, |_, p| {
        with_tile(plane, |tile| {
            transpose(n, p, tile);
            run_lines(plan, tile);
            transpose(n, tile, p);
        })
    });

    // x: gather each y-slab (stride n^2 between rows) into a tile.
    let base = SyncPtr(data.as_mut_ptr());
    par::for_each_index(n, |iy| {
        let base = &base;
        with_tile(plane, |tile| {
            let t = tile.as_mut_ptr();
            // SAFETY: slab `iy` owns the indices `(ix n + iy) n + iz`, slabs of
            // different tasks are disjoint, and every offset is below n^3.
            unsafe {
                for ix in 0..n {
                    let row = base.0.add((ix * n + iy) * n);
                    for iz in 0..n {
                        *t.add(iz * n + ix) = *row.add(iz);
                    }
                }
            }
            run_lines(plan, tile);
            let t = tile.as_ptr();
            unsafe {
                for ix in 0..n {
                    let row = base.0.add((ix * n + iy) * n);
                    for iz in 0..n {
                        *row.add(iz) = *t.add(iz * n + ix);
                    }
                }
            }
        })
    });
}

struct SyncPtr(*mut Complex64);
// SAFETY: used only for writes to disjoint index sets from different tasks.
unsafe impl Sync for SyncPtr {}
unsafe impl Send for SyncPtr {}

fn with_tile<R>(len: usize, f: impl FnOnce(&mut [Complex64]) -> R) -> R {
    TILE.with(|cell| {
        let mut buf = cell.borrow_mut();
        buf.resize(len, Complex64::new(0.0, 0.0));
        f(&mut buf[..len])
    })
}

fn run_lines(plan: &dyn rustfft::Fft<f64>, data: &mut [Complex64]) {
    SCRATCH.with(|cell| {
        let mut scratch = cell.borrow_mut();
        scratch.resize(plan.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        plan.process_with_scratch(data, &mut scratch);
    });
}

/// Square `n x n` transpose.
fn transpose(n: usize, inp: &[Complex64], out: &mut [Complex64]) {
    assert!(inp.len() >= n * n && out.len() >= n * n);
    let (src, dst) = (inp.as_ptr(), out.as_mut_ptr());
    // SAFETY: both buffers hold at least n^2 elements (checked above).
    unsafe {
        for i in 0..n {
            let row = src.add(i * n);
            for j in 0..n {
                *dst.add(j * n + i) = *row.add(j);
            }
        }
    }
}
