use mswave_core::diagnostics::energy;
use mswave_core::estimates::*;
use mswave_core::madelung::{hydro_fields, polar_factorize, qmhd_energy_state, stress_identity_residual, DEFAULT_POLAR_TOL};
use mswave_core::spectral::*;
use mswave_core::state::{charge_density, current_density, gauge_transform, SimState};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn grid(n: usize) -> Grid {
    Grid::new(n, 16.0).unwrap()
}

fn white(g: &Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let vals = (0..g.points())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    ScalarField::from_values(g, vals).unwrap()
}

/// Real field on `|m_j| <= max_mode`, max-norm `amp`.
fn band(g: &Grid, rng: &mut ChaCha8Rng, max_mode: i64, amp: f64) -> ScalarField {
    let mut s = Spectrum::zeros(g);
    for (i, v) in s.values_mut().iter_mut().enumerate() {
        let (a, b, cc) = g.unflatten(i);
        if [a, b, cc].iter().all(|&ix| g.mode(ix).abs() <= max_mode) {
            *v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
    }
    let f = s.into_field().real_part();
    let m = f.max_abs();
    f.scale(c(amp / m))
}

fn solenoid(g: &Grid, rng: &mut ChaCha8Rng, amp: f64) -> VectorField {
    let raw = VectorField::new([band(g, rng, 1, 1.0), band(g, rng, 1, 1.0), band(g, rng, 1, 1.0)]).unwrap();
    leray_project(&raw).scale(amp)
}

/// Nonvanishing `u` with phase amplitude `phase`, Coulomb-gauge `A`.
fn smooth_state(g: &Grid, rng: &mut ChaCha8Rng, phase: f64) -> SimState {
    let r = band(g, rng, 1, 0.4);
    let p = band(g, rng, 1, phase);
    let u = r.zip_map(&p, |r, p| Complex64::from_polar(1.2 + r.re, p.re));
    let a = solenoid(g, rng, 0.5);
    let at = solenoid(g, rng, 0.2);
    SimState::new(0.0, u, a, at, 2.0, 0.0).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transform_round_trip(seed: u64, n in prop::sample::select(vec![8usize, 16])) {
        let g = grid(n);
        let f = white(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        let back = inverse_transform(&forward_transform(&f));
        prop_assert!(back.sub(&f).max_abs() <= 1e-13 * f.max_abs());
    }

    #[test]
    fn leray_is_solenoidal_and_idempotent(seed: u64) {
        let g = grid(8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = VectorField::new([0; 3].map(|_| white(&g, &mut rng).real_part())).unwrap();
        let p = leray_project(&v);
        prop_assert!(divergence(&p).norm_l2() <= 1e-12 * v.norm_l2());
        prop_assert!(leray_project(&p).sub(&p).norm_l2() <= 1e-13 * v.norm_l2());
    }

    #[test]
    fn inverse_laplacian_has_zero_mean(seed: u64, offset in -5.0..5.0f64) {
        let g = grid(8);
        let f = white(&g, &mut ChaCha8Rng::seed_from_u64(seed)).real_part().map(|z| z + offset);
        let phi = inv_neg_laplacian(&f);
        prop_assert!(phi.mean().norm() <= 1e-14 * phi.max_abs().max(1.0));
    }

    #[test]
    fn yosida_contracts_every_sobolev_norm(seed: u64, eps in 0.0..5.0f64, s in -2.0..3.0f64) {
        let g = grid(8);
        let f = white(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(sobolev_norm(&yosida_smooth(&f, eps), s) <= sobolev_norm(&f, s));
    }

    #[test]
    fn sobolev_norm_is_monotone_in_s(seed: u64, s in -2.0..3.0f64, ds in 0.0..2.0f64) {
        let g = grid(8);
        let f = white(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(sobolev_norm(&f, s) <= sobolev_norm(&f, s + ds));
    }

    #[test]
    fn current_is_real(seed: u64) {
        let g = grid(16);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = white(&g, &mut rng);
        let a = solenoid(&g, &mut rng, 1.0);
        let j = current_density(&u, &a);
        prop_assert!(j.max_imag() <= 1e-14 * j.max_magnitude().max(1.0));
    }

    #[test]
    fn polar_factor_is_unit_or_zero(seed: u64) {
        let g = grid(8);
        let u = white(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        let p = polar_factorize(&u, DEFAULT_POLAR_TOL).unwrap();
        for (z, r) in p.polar.values().iter().zip(p.sqrt_rho.values()) {
            let m = z.norm();
            prop_assert!(m == 0.0 || (m - 1.0).abs() <= 1e-10);
            prop_assert!(r.re >= 0.0 && r.im == 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gauge_observables_are_invariant(seed: u64) {
        let g = grid(32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = smooth_state(&g, &mut rng, 0.5);
        let lambda = band(&g, &mut rng, 1, 0.5);
        let tr = gauge_transform(&s, &lambda, &lambda).unwrap();
        let (rho0, rho) = (charge_density(&s.u), charge_density(&tr.u));
        prop_assert!(rho.sub(&rho0).norm_l2() <= 1e-11 * rho0.norm_l2());
        let (j0, j) = (current_density(&s.u, &s.a), current_density(&tr.u, &tr.a));
        prop_assert!(j.sub(&j0).norm_l2() <= 1e-11 * j0.norm_l2());
        let (b0, b) = (curl(&s.a).real_part(), curl(&tr.a).real_part());
        prop_assert!(b.sub(&b0).norm_l2() <= 1e-11 * b0.norm_l2());
    }

    #[test]
    fn energy_ignores_a_global_phase(seed: u64, theta in -3.0..3.0f64) {
        let g = grid(16);
        let mut s = smooth_state(&g, &mut ChaCha8Rng::seed_from_u64(seed), 1.5);
        let e0 = energy(&s);
        s.u = s.u.scale(Complex64::from_polar(1.0, theta));
        prop_assert!(close(energy(&s), e0, 1e-12));
    }

    #[test]
    fn stress_identity_and_hydro_energy(seed: u64) {
        let g = grid(16);
        let s = smooth_state(&g, &mut ChaCha8Rng::seed_from_u64(seed), 1.5);
        let h = hydro_fields(&s.u, &s.a, DEFAULT_POLAR_TOL).unwrap();
        let r = stress_identity_residual(&s.u, &s.a, &h);
        prop_assert!(r.tensor <= 1e-10 && r.trace <= 1e-10);
        prop_assert!(close(qmhd_energy_state(&s, DEFAULT_POLAR_TOL).unwrap(), energy(&s), 1e-9));
    }

    #[test]
    fn probe_ratios_respect_homogeneity(seed: u64, c1 in 0.1..10.0f64, c2 in -10.0..-0.1f64, c3 in 0.1..10.0f64) {
        let g = grid(16);
        let ens = Ensemble { seed, samples: 1, ..Ensemble::default() };
        let d = &ens.draw(9)[0];
        let f: Vec<ScalarField> = d.iter().map(|p| p.sample_real(&g)).collect();
        let u = d[0].sample(&g);
        let k = KatoPonceParams::default();
        let sc = |f: &ScalarField, x: f64| f.scale(c(x));
        let same = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => close(a, b, 1e-10),
            (None, None) => true,
            _ => false,
        };

        let kp = kato_ponce_ratio(&f[0], &f[1], &k).unwrap();
        prop_assert!(same(kp, kato_ponce_ratio(&sc(&f[0], c1), &sc(&f[1], c2), &k).unwrap()));
        let sup = inv_laplacian_sup_ratio(&f[0], 3.0, 1.2).unwrap();
        prop_assert!(same(sup, inv_laplacian_sup_ratio(&sc(&f[0], c2), 3.0, 1.2).unwrap()));
        let tri = inv_laplacian_triple_ratio(&f[0], &f[1], &f[2]);
        prop_assert!(same(tri, inv_laplacian_triple_ratio(&sc(&f[0], c1), &sc(&f[1], c2), &sc(&f[2], c3))));
        prop_assert!(same(inv_laplacian_square_ratio(&f[0]), inv_laplacian_square_ratio(&sc(&f[0], c2))));
        let phase = Complex64::from_polar(c1, c3);
        prop_assert!(same(hartree_ratio(&u), hartree_ratio(&u.scale(phase))));

        // Linear in u for fixed A.
        let a = solenoidal(&d[1..4], &g, MAGNETIC_AMPLITUDE);
        let before = magnetic_ratios(&u, &a).unwrap();
        let after = magnetic_ratios(&u.scale(phase), &a).unwrap();
        for (x, y) in before.into_iter().zip(after) {
            prop_assert!(same(x, y));
        }

        let b0 = solenoidal(&d[0..3], &g, 1.0);
        let b1 = solenoidal(&d[3..6], &g, 1.0);
        let fv = solenoidal(&d[6..9], &g, 1.0);
        let w = wave_energy_ratio(&b0, &b1, &fv, 1.5, 1.0, 8).unwrap();
        let ws = wave_energy_ratio(&b0.scale(c2), &b1.scale(c2), &fv.scale(c2), 1.5, 1.0, 8).unwrap();
        prop_assert!(same(w, ws));
    }
}
