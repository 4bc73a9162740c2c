use num_complex::Complex64;
use psido_core::harmonic::{maximal_function, sharp_function, CubeFamily, ParabolicCube};
use psido_core::random::FieldFamily;
use psido_core::{Field, SpacetimeGrid};

/// Node-centered cubes enumerated directly in index space.
fn brute_force_2d(f: &Field, family: &CubeFamily) -> (Vec<f64>, Vec<f64>) {
    let g = f.grid();
    let (nl, n) = (g.time_levels(), g.n());
    let nodes: Vec<[usize; 3]> = (0..nl)
        .flat_map(|t| (0..n).flat_map(move |r| (0..n).map(move |c| [t, r, c])))
        .collect();
    let idx = |p: &[usize; 3]| (p[0] * n + p[1]) * n + p[2];
    let mut max = vec![0.0f64; nodes.len()];
    let mut sharp = vec![0.0f64; nodes.len()];
    for &b in &family.radii {
        let tb = b.powf(family.gamma);
        let inside = |a: &[usize; 3], p: &[usize; 3]| {
            let dt = (a[0] as f64 - p[0] as f64).abs() * g.dt();
            let dr = a[1] as f64 - p[1] as f64;
            let dc = a[2] as f64 - p[2] as f64;
            dt < tb && (dr * dr + dc * dc) * g.dx() * g.dx() < b * b
        };
        for center in &nodes {
            let members: Vec<Complex64> = nodes
                .iter()
                .filter(|p| inside(center, p))
                .map(|p| f.values()[idx(p)])
                .collect();
            let m = members.len() as f64;
            let avg = members.iter().map(|v| v.norm()).sum::<f64>() / m;
            let osc = members
                .iter()
                .map(|a| members.iter().map(|c| (a - c).norm()).sum::<f64>())
                .sum::<f64>()
                / (m * m);
            for p in nodes.iter().filter(|p| inside(center, p)) {
                let k = idx(p);
                max[k] = max[k].max(avg);
                sharp[k] = sharp[k].max(osc);
            }
        }
    }
    (max, sharp)
}

fn assert_close(a: &Field, b: &[f64]) {
    for (x, y) in a.values().iter().zip(b) {
        assert!((x.re - y).abs() <= 1e-12 * y.abs(), "{} vs {y}", x.re);
        assert_eq!(x.im, 0.0);
    }
}

#[test]
fn two_dimensional_fields_match_enumeration() {
    let g = SpacetimeGrid::new(2, 2.0, 8, 0.5, 3).unwrap();
    let fields = FieldFamily::new(2, 4)
        .with_max_mode(2)
        .generate(&g)
        .unwrap();
    for gamma in [1.0, 2.0] {
        let family = CubeFamily::dyadic(&g, gamma);
        for f in &fields {
            let (m, s) = brute_force_2d(f, &family);
            assert_close(&maximal_function(f, &family).unwrap(), &m);
            assert_close(&sharp_function(f, &family).unwrap(), &s);
        }
    }
}

#[test]
fn complex_fields_match_enumeration() {
    let g = SpacetimeGrid::new(2, 2.0, 8, 0.5, 3).unwrap();
    let f = Field::from_fn(&g, |t, x| Complex64::new((x[0] + t).sin(), x[1] * x[0] - t));
    let family = CubeFamily::dyadic(&g, 1.5);
    let (m, s) = brute_force_2d(&f, &family);
    assert_close(&maximal_function(&f, &family).unwrap(), &m);
    assert_close(&sharp_function(&f, &family).unwrap(), &s);
}

#[test]
fn dyadic_family_reaches_the_whole_grid() {
    let g = SpacetimeGrid::new(1, 4.0, 32, 2.0, 16).unwrap();
    for gamma in [0.5, 1.0, 2.0] {
        let fam = CubeFamily::dyadic(&g, gamma);
        assert_eq!(fam.radii[0], g.dx());
        let last = *fam.radii.last().unwrap();
        assert!(last > 8.0 && last.powf(gamma) > 2.0);
        assert!(fam.radii.windows(2).all(|w| w[1] == 2.0 * w[0]));
    }
}

#[test]
fn cube_geometry() {
    let q = ParabolicCube {
        t0: 1.0,
        x0: vec![0.0, 0.0],
        b: 2.0,
        gamma: 1.5,
    };
    let tb = 2f64.powf(1.5);
    assert!(q.contains(1.0 + 0.99 * tb, &[1.0, 1.0]));
    assert!(!q.contains(1.0 + tb, &[0.0, 0.0]));
    assert!(!q.contains(1.0, &[2.0, 0.0]));
    let want = 2.0 * tb * std::f64::consts::PI * 4.0;
    assert!((q.volume() - want).abs() < 1e-12 * want);
}
