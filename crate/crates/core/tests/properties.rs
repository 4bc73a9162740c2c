use num_complex::Complex64;
use proptest::prelude::*;
use psido_core::fit::loglog_fit;
use psido_core::harmonic::{
    maximal_function, quasi_metric, quasi_triangle_constant, sharp_function, CubeFamily,
};
use psido_core::kernel::{build_kernel_slice, l1_mass};
use psido_core::norms::{weighted_norm, NormSpec};
use psido_core::random::FieldFamily;
use psido_core::solver::solve_cauchy;
use psido_core::weights::{ap_characteristic, BallFamily, Table};
use psido_core::{Field, PiecewiseConstantTrack, SpacetimeGrid, Symbol, WeightSpec};

fn small_grid() -> SpacetimeGrid {
    SpacetimeGrid::new(1, 4.0, 16, 1.0, 8).unwrap()
}

fn seeded_fields(grid: &SpacetimeGrid, seed: u64, count: usize) -> Vec<Field> {
    FieldFamily::new(count, seed)
        .with_max_mode(4)
        .generate(grid)
        .unwrap()
}

fn max_dev(a: &Field, b: &Field) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 24,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn power_weight_characteristic_at_least_one(
        alpha in -0.9f64..0.9, p in 1.5f64..4.0, d in 1usize..=2,
    ) {
        let w = WeightSpec::power_space(alpha * d as f64 * (p - 1.0).min(1.0), p, d).unwrap();
        let c = ap_characteristic(&w, &BallFamily::default_for(d, 1)).unwrap();
        prop_assert!(c.is_finite());
        prop_assert!(c >= 1.0 - 1e-12);
    }

    #[test]
    fn characteristic_ignores_constant_multiples(scale in 0.01f64..100.0, seed in 0u64..1000) {
        let n = 16;
        let mut values = Vec::with_capacity(n);
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        for _ in 0..n {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            values.push(0.5 + (s >> 11) as f64 / (1u64 << 53) as f64);
        }
        let base = Table { half_width: 4.0, n, values: values.clone() };
        let scaled = Table { half_width: 4.0, n, values: values.iter().map(|v| v * scale).collect() };
        let fam = BallFamily::default_for(1, seed);
        let a = ap_characteristic(&WeightSpec::tabulated(base, 2.0, 1).unwrap(), &fam).unwrap();
        let b = ap_characteristic(&WeightSpec::tabulated(scaled, 2.0, 1).unwrap(), &fam).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a);
    }

    #[test]
    fn regularity_constant_bounds(alpha in -0.9f64..0.9, p in 1.2f64..5.0, d in 1usize..=3) {
        let a = alpha * d as f64 * (p - 1.0);
        let w = WeightSpec::power_space(a, p, d).unwrap();
        if let Ok(r) = w.regularity_constant() {
            prop_assert!(r > 1.0 && r <= 2.0);
            let heavier = WeightSpec::power_space(a + 0.05, p, d).unwrap();
            if let Ok(r2) = heavier.regularity_constant() {
                prop_assert!(r2 <= r);
            }
        }
    }

    #[test]
    fn norm_homogeneity_and_triangle(c in -5.0f64..5.0, seed in 0u64..500) {
        let g = small_grid();
        let f = seeded_fields(&g, seed, 2);
        let spec = NormSpec::LpSpacetime { p: 3.0, w: WeightSpec::spacetime_power(0.5, 3.0, 1).unwrap() };
        let n0 = weighted_norm(&f[0], &spec).unwrap();
        let n1 = weighted_norm(&f[1], &spec).unwrap();
        let scaled = weighted_norm(&f[0].scaled(Complex64::new(c, 0.0)), &spec).unwrap();
        prop_assert!((scaled - c.abs() * n0).abs() <= 1e-12 * (1.0 + scaled));
        let one = Complex64::new(1.0, 0.0);
        let sum = weighted_norm(&f[0].combine(one, &f[1], one).unwrap(), &spec).unwrap();
        prop_assert!(sum <= n0 + n1 + 1e-12);
    }

    #[test]
    fn solver_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, seed in 0u64..500) {
        let g = small_grid();
        let s = Symbol::seeded_time_modulated(1.5, 1.0, 4, [1.0, 3.0], seed).unwrap();
        let f = seeded_fields(&g, seed, 2);
        let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(b, 0.0));
        let lhs = solve_cauchy(&s, &f[0].combine(ca, &f[1], cb).unwrap(), &g).unwrap();
        let u0 = solve_cauchy(&s, &f[0], &g).unwrap();
        let u1 = solve_cauchy(&s, &f[1], &g).unwrap();
        let rhs = u0.combine(ca, &u1, cb).unwrap();
        prop_assert!(max_dev(&lhs, &rhs) <= 1e-11 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn solver_is_causal(cut in 1usize..8, seed in 0u64..500) {
        let g = small_grid();
        let s = Symbol::fractional_laplacian(2.0).unwrap();
        let f = seeded_fields(&g, seed, 2);
        // agree on levels 0..cut, differ afterwards
        let mut h = f[0].clone();
        for k in cut..g.time_levels() {
            h.slice_mut(k).copy_from_slice(f[1].slice(k));
        }
        let u = solve_cauchy(&s, &f[0], &g).unwrap();
        let v = solve_cauchy(&s, &h, &g).unwrap();
        for k in 0..cut {
            prop_assert_eq!(u.slice(k), v.slice(k));
        }
    }

    #[test]
    fn track_integral_is_additive(seed in 0u64..1000, r in 0.0f64..1.0, s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let tr = PiecewiseConstantTrack::seeded(1.0, 7, 0.5, 2.0, seed).unwrap();
        let mut v = [r, s, t];
        v.sort_by(f64::total_cmp);
        let [a, b, c] = v;
        let whole = tr.integral(a, c).unwrap();
        let parts = tr.integral(a, b).unwrap() + tr.integral(b, c).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-14);
        prop_assert!(whole >= 0.5 * (c - a) - 1e-14 && whole <= 2.0 * (c - a) + 1e-14);
    }

    #[test]
    fn symbol_profile_is_homogeneous(gamma in 0.5f64..3.0, xi in 0.1f64..10.0, lambda in 0.1f64..10.0) {
        let s = Symbol::anisotropic_power(gamma, vec![1.0, 2.0], None).unwrap();
        let a = s.profile(&[xi, -0.5 * xi]).unwrap();
        let b = s.profile(&[lambda * xi, -0.5 * lambda * xi]).unwrap();
        prop_assert!((b - lambda.powf(gamma) * a).abs() <= 1e-12 * b.abs());
    }

    #[test]
    fn maximal_function_scales(c in -4.0f64..4.0, seed in 0u64..500) {
        let g = small_grid();
        let fam = CubeFamily::dyadic(&g, 2.0);
        let f = &seeded_fields(&g, seed, 1)[0];
        let m = maximal_function(f, &fam).unwrap();
        let mc = maximal_function(&f.scaled(Complex64::new(c, 0.0)), &fam).unwrap();
        for (x, y) in m.values().iter().zip(mc.values()) {
            prop_assert!((y.re - c.abs() * x.re).abs() <= 1e-12 * (1.0 + y.re));
        }
        // the largest cube covers the grid
        let mean = f.values().iter().map(|v| v.norm()).sum::<f64>() / f.values().len() as f64;
        for x in m.values() {
            prop_assert!(x.re >= mean * (1.0 - 1e-12));
        }
    }

    #[test]
    fn sharp_function_ignores_constants(c in -4.0f64..4.0, seed in 0u64..500) {
        let g = small_grid();
        let fam = CubeFamily::dyadic(&g, 2.0);
        let f = &seeded_fields(&g, seed, 1)[0];
        let shifted = Field::from_values(
            &g,
            f.layout(),
            f.values().iter().map(|v| v + c).collect(),
        ).unwrap();
        let a = sharp_function(f, &fam).unwrap();
        let b = sharp_function(&shifted, &fam).unwrap();
        let m = maximal_function(f, &fam).unwrap();
        for ((x, y), z) in a.values().iter().zip(b.values()).zip(m.values()) {
            prop_assert!((x.re - y.re).abs() <= 1e-11 * (1.0 + x.re));
            prop_assert!(x.re <= 2.0 * z.re + 1e-12);
        }
    }

    #[test]
    fn quasi_metric_axioms(
        gamma in 0.5f64..3.0,
        p in prop::array::uniform3((-2.0f64..2.0, -2.0f64..2.0)),
    ) {
        let pts: Vec<(f64, [f64; 1])> = p.iter().map(|&(t, x)| (t, [x])).collect();
        let rho = |a: &(f64, [f64; 1]), b: &(f64, [f64; 1])| {
            quasi_metric((a.0, &a.1), (b.0, &b.1), gamma).unwrap()
        };
        let k = quasi_triangle_constant(gamma);
        prop_assert_eq!(rho(&pts[0], &pts[0]), 0.0);
        prop_assert!((rho(&pts[0], &pts[1]) - rho(&pts[1], &pts[0])).abs() <= 1e-15);
        prop_assert!(rho(&pts[0], &pts[2]) <= k * (rho(&pts[0], &pts[1]) + rho(&pts[1], &pts[2])) * (1.0 + 1e-12));
    }

    #[test]
    fn loglog_fit_recovers_power_laws(slope in -3.0f64..3.0, c in 0.1f64..10.0) {
        let x: Vec<f64> = (0..6).map(|k| 0.1 * 2f64.powi(k)).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(slope)).collect();
        let f = loglog_fit(&x, &y).unwrap();
        prop_assert!((f.slope - slope).abs() <= 1e-10);
    }
}

#[test]
fn heat_kernel_has_unit_mass() {
    let g = SpacetimeGrid::new(1, 16.0, 512, 1.0, 8).unwrap();
    let s = Symbol::fractional_laplacian(2.0).unwrap();
    for tau in [0.1, 0.5, 1.0] {
        let k = build_kernel_slice(&s, &g, tau, 0.0, 0.0, 0, &[0]).unwrap();
        assert!((l1_mass(&k).unwrap() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn modes_do_not_change_results() {
    use psido_core::par::{set_mode, Mode};
    let g = small_grid();
    let s = Symbol::fractional_laplacian(2.0).unwrap();
    let f = &seeded_fields(&g, 3, 1)[0];
    let fam = CubeFamily::dyadic(&g, 2.0);
    set_mode(Mode::Sequential);
    let (u0, m0) = (
        solve_cauchy(&s, f, &g).unwrap(),
        sharp_function(f, &fam).unwrap(),
    );
    set_mode(Mode::Parallel);
    let (u1, m1) = (
        solve_cauchy(&s, f, &g).unwrap(),
        sharp_function(f, &fam).unwrap(),
    );
    assert_eq!(u0.values(), u1.values());
    assert_eq!(m0.values(), m1.values());
}
