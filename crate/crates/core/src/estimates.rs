//! Numerical probes of functional inequalities used in the local theory.
//!
//! Every probe evaluates both sides of an inequality on a sample and reports
//! `lhs / rhs` with the unknown constant dropped. Norms are periodic-box
//! quadratures, so the maxima are empirical lower bounds for the constants on
//! the torus, not for the whole-space constants.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::par;
use crate::dynamics::wave_propagate;
use crate::error::{Error, Result};
use crate::spectral::{
    bessel_potential, gradient, inv_neg_laplacian, leray_project, sobolev_norm, Grid, ScalarField,
    VectorField,
};

/// Label attached to every report.
pub const REPORT_NOTE: &str = "empirical, periodic domain";

/// Outcome of one probe over an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub id: String,
    /// Samples with a nonzero right-hand side.
    pub samples: usize,
    /// Samples skipped because both sides vanish.
    pub skipped: usize,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub params: BTreeMap<String, f64>,
    pub note: String,
}

impl ProbeReport {
    fn new(id: &str, params: &[(&str, f64)], ratios: Vec<Option<f64>>) -> Self {
        let skipped = ratios.iter().filter(|r| r.is_none()).count();
        let ratios: Vec<f64> = ratios.into_iter().flatten().collect();
        let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
        Self {
            id: id.to_string(),
            samples: ratios.len(),
            skipped,
            ratios,
            max_ratio,
            params: params.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            note: REPORT_NOTE.to_string(),
        }
    }
}

fn ratio(lhs: f64, rhs: f64) -> Option<f64> {
    if rhs == 0.0 {
        None
    } else {
        Some(lhs / rhs)
    }
}

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// A smooth field: Gaussian envelope times a trigonometric polynomial. It is
/// defined by a formula, so the same sample can be placed on any grid.
#[derive(Clone, Debug)]
pub struct Profile {
    pub center: [f64; 3],
    pub sigma: f64,
    /// Integer wave numbers and complex amplitudes.
    pub terms: Vec<([i64; 3], Complex64)>,
}

impl Profile {
    pub fn sample(&self, grid: &Grid) -> ScalarField {
        let w = 2.0 * PI / grid.len();
        let c = self.center;
        let s2 = 2.0 * self.sigma * self.sigma;
        ScalarField::from_fn(grid, |x| {
            let r2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2) + (x[2] - c[2]).powi(2);
            let carrier: Complex64 = self
                .terms
                .iter()
                .map(|(m, a)| {
                    let ph = w * (m[0] as f64 * x[0] + m[1] as f64 * x[1] + m[2] as f64 * x[2]);
                    a * Complex64::from_polar(1.0, ph)
                })
                .sum();
            carrier * (-r2 / s2).exp()
        })
    }

    pub fn sample_real(&self, grid: &Grid) -> ScalarField {
        self.sample(grid).real_part()
    }
}

/// Seeded family of random profiles.
#[derive(Clone, Debug, Serialize)]
pub struct Ensemble {
    pub seed: u64,
    pub samples: usize,
    /// Largest `|m_j|` of a carrier mode.
    pub max_mode: i64,
    pub sigma: f64,
    /// Box side the centres are placed in.
    pub len: f64,
}

impl Default for Ensemble {
    fn default() -> Self {
        Self { seed: 7, samples: 100, max_mode: 1, sigma: 1.5, len: 16.0 }
    }
}

impl Ensemble {
    fn profile(&self, rng: &mut ChaCha8Rng) -> Profile {
        let c = 0.5 * self.len;
        let center = [0; 3].map(|_| c + rng.random_range(-1.0..1.0));
        let count = rng.random_range(1..=4);
        let terms = (0..count)
            .map(|_| {
                let m = [0; 3].map(|_| rng.random_range(-self.max_mode..=self.max_mode));
                let a = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (m, a)
            })
            .collect();
        Profile { center, sigma: self.sigma * rng.random_range(0.8..1.2), terms }
    }

    /// `samples` tuples of `width` independent profiles.
    pub fn draw(&self, width: usize) -> Vec<Vec<Profile>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.samples).map(|_| (0..width).map(|_| self.profile(&mut rng)).collect()).collect()
    }
}

/// Divergence-free vector field from three profiles.
pub fn solenoidal(profiles: &[Profile], grid: &Grid, amplitude: f64) -> VectorField {
    let comps = std::array::from_fn(|c| profiles[c].sample_real(grid));
    leray_project(&VectorField::new(comps).expect("shared grid")).scale(amplitude)
}

/// Exponents of the fractional Leibniz rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KatoPonceParams {
    pub s: f64,
    pub p: f64,
    pub p1: f64,
    pub q1: f64,
    pub p2: f64,
    pub q2: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for KatoPonceParams {
    fn default() -> Self {
        Self { s: 1.0, p: 2.0, p1: 6.0, q1: 3.0, p2: 3.0, q2: 6.0, alpha: 0.0, beta: 0.0 }
    }
}

impl KatoPonceParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("Kato-Ponce exponents: {m}")));
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad("need 1 < p < inf");
        }
        if self.s < 0.0 || self.alpha < 0.0 || self.beta < 0.0 {
            return bad("need s, alpha, beta >= 0");
        }
        if !(self.q1 > 1.0 && self.p2 > 1.0 && self.p1 >= 1.0 && self.q2 >= 1.0) {
            return bad("need q1, p2 > 1 and p1, q2 >= 1");
        }
        for (a, b) in [(self.p1, self.q1), (self.p2, self.q2)] {
            if (inv(a) + inv(b) - inv(self.p)).abs() > 1e-12 {
                return bad("need 1/p = 1/p_i + 1/q_i");
            }
        }
        Ok(())
    }

    fn table(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("s", self.s),
            ("p", self.p),
            ("p1", self.p1),
            ("q1", self.q1),
            ("p2", self.p2),
            ("q2", self.q2),
            ("alpha", self.alpha),
            ("beta", self.beta),
        ]
    }
}

/// `|L^s(f1 f2)|_p / (|L^{s+a} f1|_{p1} |L^{-a} f2|_{q1} + |L^{-b} f1|_{p2} |L^{s+b} f2|_{q2})`.
pub fn kato_ponce_ratio(f1: &ScalarField, f2: &ScalarField, k: &KatoPonceParams) -> Result<Option<f64>> {
    k.validate()?;
    if !f1.grid().same_as(f2.grid()) {
        return Err(Error::GridMismatch);
    }
    let lp = |f: &ScalarField, s: f64, p: f64| {
        if s == 0.0 {
            f.norm_lp(p)
        } else {
            bessel_potential(f, s).norm_lp(p)
        }
    };
    let lhs = lp(&f1.mul(f2), k.s, k.p);
    let rhs = lp(f1, k.s + k.alpha, k.p1) * lp(f2, -k.alpha, k.q1)
        + lp(f1, -k.beta, k.p2) * lp(f2, k.s + k.beta, k.q2);
    Ok(ratio(lhs, rhs))
}

pub fn probe_kato_ponce(k: &KatoPonceParams, ens: &Ensemble, grid: &Grid) -> Result<ProbeReport> {
    k.validate()?;
    let ratios = par::map_items(&ens.draw(2), |pr| kato_ponce_ratio(&pr[0].sample_real(grid), &pr[1].sample_real(grid), k))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeReport::new("kato_ponce", &k.table(), ratios))
}

/// `theta = (q' - 3) p' / (3 (q' - p'))` for `1 <= q < 3/2 < p <= inf`.
pub fn inv_laplacian_theta(p: f64, q: f64) -> Result<f64> {
    if !(q >= 1.0 && q < 1.5 && p > 1.5) {
        return Err(Error::InvalidParameter(format!("need 1 <= q < 3/2 < p <= inf, got p = {p}, q = {q}")));
    }
    let (pc, qc) = (conjugate(p), conjugate(q));
    Ok(if qc.is_infinite() { pc / 3.0 } else { (qc - 3.0) * pc / (3.0 * (qc - pc)) })
}

/// `|(-lap)^{-1} f|_inf / (|f|_p^theta |f|_q^{1-theta})`.
pub fn inv_laplacian_sup_ratio(f: &ScalarField, p: f64, q: f64) -> Result<Option<f64>> {
    let theta = inv_laplacian_theta(p, q)?;
    let lhs = inv_neg_laplacian(f).max_abs();
    Ok(ratio(lhs, f.norm_lp(p).powf(theta) * f.norm_lp(q).powf(1.0 - theta)))
}

/// `|(-lap)^{-1}(f1 f2) f3|_2 / (|f1|_2 |f2|_3 |f3|_3)`.
pub fn inv_laplacian_triple_ratio(f1: &ScalarField, f2: &ScalarField, f3: &ScalarField) -> Option<f64> {
    let lhs = inv_neg_laplacian(&f1.mul(f2)).mul(f3).norm_l2();
    ratio(lhs, f1.norm_l2() * f2.norm_lp(3.0) * f3.norm_lp(3.0))
}

/// `|(-lap)^{-1} |f|^2|_inf / (|f|_2^2 + |f|_inf^2)`.
pub fn inv_laplacian_square_ratio(f: &ScalarField) -> Option<f64> {
    let sq = f.map(|z| Complex64::new(z.norm_sqr(), 0.0));
    let lhs = inv_neg_laplacian(&sq).max_abs();
    ratio(lhs, f.norm_l2().powi(2) + f.max_abs().powi(2))
}

/// Reports for the sup bound, the triple product and the square bound.
pub fn probe_inv_laplacian(p: f64, q: f64, ens: &Ensemble, grid: &Grid) -> Result<[ProbeReport; 3]> {
    let theta = inv_laplacian_theta(p, q)?;
    let rows = par::map_items(&ens.draw(3), |d| {
        let f: Vec<ScalarField> = d.iter().map(|pr| pr.sample_real(grid)).collect();
        let sup = inv_laplacian_sup_ratio(&f[0], p, q)?;
        Ok::<_, Error>((sup, inv_laplacian_triple_ratio(&f[0], &f[1], &f[2]), inv_laplacian_square_ratio(&f[0])))
    });
    let mut sup = Vec::new();
    let mut triple = Vec::new();
    let mut square = Vec::new();
    for r in rows {
        let (a, b, c) = r?;
        sup.push(a);
        triple.push(b);
        square.push(c);
    }
    let params = [("p", p), ("q", q), ("theta", theta)];
    Ok([
        ProbeReport::new("inv_laplacian_sup", &params, sup),
        ProbeReport::new("inv_laplacian_triple", &[], triple),
        ProbeReport::new("inv_laplacian_square", &[], square),
    ])
}

/// `|(-lap)^{-1}(|u|^2) u|_{H^2} / (|u|_{H^{3/4}}^2 |u|_{H^2})`.
pub fn hartree_ratio(u: &ScalarField) -> Option<f64> {
    let rho = u.map(|z| Complex64::new(z.norm_sqr(), 0.0));
    let lhs = sobolev_norm(&inv_neg_laplacian(&rho).mul(u), 2.0);
    ratio(lhs, sobolev_norm(u, 0.75).powi(2) * sobolev_norm(u, 2.0))
}

pub fn probe_hartree(ens: &Ensemble, grid: &Grid) -> ProbeReport {
    let ratios = par::map_items(&ens.draw(1), |d| hartree_ratio(&d[0].sample(grid)));
    ProbeReport::new("hartree", &[], ratios)
}

/// Identifiers of the five magnetic estimates, in the order returned by
/// [`magnetic_ratios`].
pub const MAGNETIC_IDS: [&str; 5] =
    ["covariant_h1", "leray_current_h12", "maglap_to_h2", "h2_to_maglap", "covariant_plus_l6"];

/// Ratios of the magnetic estimates for `(u, A)` with `div A = 0`:
///
/// 0. `|(grad - iA)u|_{H^1} / ((1 + |A|_{H^1}) |u|_{H^2})`
/// 1. `|P J(u,A)|_{H^{1/2}} / (|u|_{H^1} |u|_{H^2} + |A|_{H^1} |u|_{H^2}^2)`
/// 2. `|lap_A u|_2 / (|u|_{H^2} + |A|_{H^1}^4 |u|_2)`
/// 3. `|u|_{H^2} / (|lap_A u|_2 + |A|_{H^1}^4 |u|_2)`
/// 4. `|(grad + iA)u|_6 / (|u|_{H^2} + |A|_{H^1}^4 |u|_2)`
///
/// Derivatives are spectral and products are taken on the grid without
/// dealiasing.
pub fn magnetic_ratios(u: &ScalarField, a: &VectorField) -> Result<[Option<f64>; 5]> {
    if !u.grid().same_as(a.grid()) {
        return Err(Error::GridMismatch);
    }
    let an = a.norm_l2();
    if an > 0.0 {
        let div = crate::spectral::divergence(a).norm_l2() / an;
        if div > crate::state::MAGNETIC_GAUGE_LIMIT {
            return Err(Error::GaugeViolation { residual: div, limit: crate::state::MAGNETIC_GAUGE_LIMIT });
        }
    }
    let i = Complex64::i();
    let grad = gradient(u);
    let au = a.mul_scalar(u);
    let minus = grad.sub(&au.map_comps(|c| c.scale(i)));
    let plus = grad.add(&au.map_comps(|c| c.scale(i)));
    let lap_a = crate::spectral::divergence(&minus).sub(&a.dot(&minus).scale(i));
    let j = minus.map_comps(|c| u.zip_map(c, |z, w| Complex64::new((z.conj() * w).im, 0.0)));
    let pj = leray_project(&j);

    let (u0, u1, u2) = (u.norm_l2(), sobolev_norm(u, 1.0), sobolev_norm(u, 2.0));
    let a1 = sobolev_norm(a, 1.0);
    let tail = a1.powi(4) * u0;
    let lap_norm = lap_a.norm_l2();
    Ok([
        ratio(sobolev_norm(&minus, 1.0), (1.0 + a1) * u2),
        ratio(sobolev_norm(&pj, 0.5), u1 * u2 + a1 * u2 * u2),
        ratio(lap_norm, u2 + tail),
        ratio(u2, lap_norm + tail),
        ratio(plus.norm_lp(6.0), u2 + tail),
    ])
}

/// Amplitude applied to the random vector potentials of [`probe_magnetic`].
pub const MAGNETIC_AMPLITUDE: f64 = 0.5;

pub fn probe_magnetic(ens: &Ensemble, grid: &Grid) -> Result<[ProbeReport; 5]> {
    let mut cols: [Vec<Option<f64>>; 5] = Default::default();
    let rows = par::map_items(&ens.draw(4), |d| {
        let u = d[0].sample(grid);
        let a = solenoidal(&d[1..], grid, MAGNETIC_AMPLITUDE);
        magnetic_ratios(&u, &a)
    });
    for row in rows {
        for (c, r) in cols.iter_mut().zip(row?) {
            c.push(r);
        }
    }
    let params = [("a_amplitude", MAGNETIC_AMPLITUDE)];
    let mut it = cols.into_iter();
    Ok(MAGNETIC_IDS.map(|id| ProbeReport::new(id, &params, it.next().unwrap())))
}

/// `(sup_t |B|_{H^s} + sup_t |B_t|_{H^{s-1}}) / ((1+T)(|B0|_{H^s} + |B1|_{H^{s-1}} + T |F|_{H^{s-1}}))`
/// for `B'' - lap B = F` with constant `F`, sampled at `steps + 1` equally
/// spaced times in `[0, T]`.
pub fn wave_energy_ratio(
    b0: &VectorField,
    b1: &VectorField,
    f: &VectorField,
    s: f64,
    t_end: f64,
    steps: usize,
) -> Result<Option<f64>> {
    if !(t_end > 0.0) || steps == 0 {
        return Err(Error::InvalidParameter("need T > 0 and at least one time step".into()));
    }
    let g = b0.grid();
    if !(g.same_as(b1.grid()) && g.same_as(f.grid())) {
        return Err(Error::GridMismatch);
    }
    let k2 = g.k2();
    let (h0, h1, hf) = (b0.real_spectrum(), b1.real_spectrum(), f.real_spectrum());
    let hs = |v: &crate::spectral::VectorSpectrum, s: f64| v.weighted_energy(|i| (1.0 + k2[i]).powf(s)).sqrt();
    let rhs = (1.0 + t_end) * (hs(&h0, s) + hs(&h1, s - 1.0) + t_end * hs(&hf, s - 1.0));
    let (mut sup_b, mut sup_bt) = (0.0_f64, 0.0_f64);
    for n in 0..=steps {
        let t = t_end * n as f64 / steps as f64;
        let (b, bt) = wave_propagate(&h0, &h1, Some(&hf), t);
        sup_b = sup_b.max(hs(&b, s));
        sup_bt = sup_bt.max(hs(&bt, s - 1.0));
    }
    Ok(ratio(sup_b + sup_bt, rhs))
}

pub fn probe_wave_energy(s: f64, t_end: f64, ens: &Ensemble, grid: &Grid) -> Result<ProbeReport> {
    let ratios = par::map_items(&ens.draw(9), |d| {
        let b0 = solenoidal(&d[0..3], grid, 1.0);
        let b1 = solenoidal(&d[3..6], grid, 1.0);
        let f = solenoidal(&d[6..9], grid, 1.0);
        wave_energy_ratio(&b0, &b1, &f, s, t_end, 32)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ProbeReport::new("wave_energy", &[("s", s), ("T", t_end)], ratios))
}

/// Parameters of [`probe_all`].
#[derive(Clone, Debug, Serialize)]
pub struct ProbeSuite {
    pub kato_ponce: KatoPonceParams,
    pub inv_p: f64,
    pub inv_q: f64,
    pub wave_s: f64,
    pub wave_t: f64,
}

impl Default for ProbeSuite {
    fn default() -> Self {
        Self { kato_ponce: KatoPonceParams::default(), inv_p: 3.0, inv_q: 1.2, wave_s: 1.5, wave_t: 1.0 }
    }
}

/// Every probe on one grid and ensemble.
pub fn probe_all(suite: &ProbeSuite, ens: &Ensemble, grid: &Grid) -> Result<Vec<ProbeReport>> {
    let mut out = vec![probe_kato_ponce(&suite.kato_ponce, ens, grid)?];
    out.extend(probe_inv_laplacian(suite.inv_p, suite.inv_q, ens, grid)?);
    out.push(probe_hartree(ens, grid));
    out.extend(probe_magnetic(ens, grid)?);
    out.push(probe_wave_energy(suite.wave_s, suite.wave_t, ens, grid)?);
    Ok(out)
}
