use mswave_core::madelung::{hydro_fields, DEFAULT_POLAR_TOL};
use mswave_core::spectral::{dealias, leray_project, Grid, ScalarField, VectorField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn noise(g: &Grid, rng: &mut ChaCha8Rng) -> ScalarField {
    let vals = (0..g.points())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    dealias(&ScalarField::from_values(g, vals).unwrap())
}

#[test]
fn lambda_converges_along_h1_convergent_sequences() {
    let g = Grid::new(16, 16.0).unwrap();
    let w = 2.0 * PI / g.len();
    let u = ScalarField::from_fn(&g, |x| {
        let r = 1.0 + 0.3 * (w * x[0]).cos() * (w * x[1]).sin();
        Complex64::from_polar(r, (w * x[2]).sin() + 0.5 * (w * x[0]).cos())
    });
    let a = leray_project(&VectorField::from_real_fn(&g, |x| [(w * x[1]).sin(), (w * x[2]).cos(), 0.3 * (w * x[0]).sin()]));
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let du = noise(&g, &mut rng);
    let du = du.scale(Complex64::new(1.0 / du.max_abs(), 0.0));
    let da = leray_project(&VectorField::new([0; 3].map(|_| noise(&g, &mut rng).real_part())).unwrap());
    let da = da.scale(1.0 / da.max_magnitude());
    let base = hydro_fields(&u, &a, DEFAULT_POLAR_TOL).unwrap().lambda;

    let mut prev = f64::INFINITY;
    for j in 1..=6 {
        let d = 0.5_f64.powi(j);
        let un = u.add(&du.scale(Complex64::new(0.1 * d, 0.0)));
        let an = a.add(&da.scale(0.1 * d));
        let dist = hydro_fields(&un, &an, DEFAULT_POLAR_TOL).unwrap().lambda.sub(&base).norm_l2();
        assert!(dist < prev, "j = {j}: {dist} >= {prev}");
        prev = dist;
    }
    assert!(prev < 1e-2 * base.norm_l2());
}
