//! Exact-in-Fourier Duhamel solver for ∂ₜu = ψ(t, −i∇)u + f, u(0) = 0, and
//! the related multiplier operators.

use num_complex::Complex64;

use crate::error::{input, Result};
use crate::field::{Field, Layout};
use crate::grid::SpacetimeGrid;
use crate::kernel::MultiplierTable;
use crate::par;
use crate::spectral::Spectral;
use crate::symbols::Symbol;

fn check_field(f: &Field, grid: &SpacetimeGrid) -> Result<()> {
    if f.grid() != grid {
        return input("field is not sampled on the given grid");
    }
    if f.layout() != Layout::Spacetime {
        return input("operation needs a space-time field");
    }
    Ok(())
}

/// DFT of every time level, returned as frequency columns `[ξ][time]`.
fn to_columns(f: &Field, spectral: &Spectral) -> Vec<Vec<Complex64>> {
    let levels = f.levels();
    let slices = par::map(levels, |k| {
        let mut v = f.slice(k).to_vec();
        spectral.forward(&mut v);
        v
    });
    let len = spectral.len();
    par::map(len, |i| slices.iter().map(|s| s[i]).collect())
}

fn from_columns(cols: Vec<Vec<Complex64>>, grid: &SpacetimeGrid, spectral: &Spectral) -> Field {
    let levels = grid.time_levels();
    let slices = par::map(levels, |k| {
        let mut v: Vec<Complex64> = cols.iter().map(|c| c[k]).collect();
        spectral.inverse(&mut v);
        v
    });
    let values = slices.into_iter().flatten().collect();
    Field::from_values(grid, Layout::Spacetime, values).expect("solver output is finite")
}

/// Number of past steps `w` with `w·Δt < Tcut`.
fn window(grid: &SpacetimeGrid, tcut: f64) -> usize {
    let dt = grid.dt();
    let mut w = (tcut / dt).floor() as usize;
    while w > 0 && (w as f64) * dt >= tcut * (1.0 - 1e-12) {
        w -= 1;
    }
    w
}

/// Left-endpoint Duhamel sum
/// `û_n = Σ_{n−W ≤ j < n} Δt·|ξ|^{εγ}·exp(p(ξ)(C_n − C_j))·f̂_j`,
/// evaluated by the one-step recursion (and a subtraction of the term
/// leaving the window when `W < Nt`).
fn duhamel(
    symbol: &Symbol,
    f: &Field,
    grid: &SpacetimeGrid,
    epsilon: f64,
    w: usize,
) -> Result<Field> {
    check_field(f, grid)?;
    grid.check_alignment(symbol)?;
    let nt = grid.nt();
    let dt = grid.dt();
    // cumulative C_n = ∫_0^{t_n} c and per-step increments
    let mut inc = Vec::with_capacity(nt);
    for n in 0..nt {
        inc.push(symbol.coefficient_integral(grid.time(n), grid.time(n + 1))?);
    }
    let mut cum = vec![Complex64::new(0.0, 0.0)];
    for n in 0..nt {
        let last = cum[n];
        cum.push(last + inc[n]);
    }
    let table = MultiplierTable::new(symbol, grid);
    let spectral = Spectral::new(grid.n(), grid.d());
    let cols = to_columns(f, &spectral);
    let eg = epsilon * symbol.gamma();
    let out = par::map(cols.len(), |i| {
        let p = table.profile[i];
        let frac = table.frac_factor(i, eg);
        let fh = &cols[i];
        let mut u = vec![Complex64::new(0.0, 0.0); nt + 1];
        if frac == 0.0 {
            return u;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..nt {
            acc = (inc[n] * p).exp() * (acc + fh[n] * dt);
            if n + 1 > w {
                let j = n + 1 - w - 1;
                acc -= ((cum[n + 1] - cum[j]) * p).exp() * fh[j] * dt;
            }
            u[n + 1] = acc * frac;
        }
        u
    });
    Ok(from_columns(out, grid, &spectral))
}

/// Euclidean adjoint of [`duhamel`] on node vectors:
/// `v_j = Σ_{j < n ≤ j+W} Δt·|ξ|^{εγ}·conj(exp(p(ξ)(C_n − C_j)))·ĝ_n`.
fn duhamel_adjoint(
    symbol: &Symbol,
    g: &Field,
    grid: &SpacetimeGrid,
    epsilon: f64,
    w: usize,
) -> Result<Field> {
    check_field(g, grid)?;
    grid.check_alignment(symbol)?;
    let nt = grid.nt();
    let dt = grid.dt();
    let mut inc = Vec::with_capacity(nt);
    for n in 0..nt {
        inc.push(symbol.coefficient_integral(grid.time(n), grid.time(n + 1))?);
    }
    let mut cum = vec![Complex64::new(0.0, 0.0)];
    for n in 0..nt {
        let last = cum[n];
        cum.push(last + inc[n]);
    }
    let table = MultiplierTable::new(symbol, grid);
    let spectral = Spectral::new(grid.n(), grid.d());
    let cols = to_columns(g, &spectral);
    let eg = epsilon * symbol.gamma();
    let out = par::map(cols.len(), |i| {
        let p = table.profile[i];
        let frac = table.frac_factor(i, eg);
        let gh = &cols[i];
        let mut v = vec![Complex64::new(0.0, 0.0); nt + 1];
        if frac == 0.0 {
            return v;
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for j in (0..nt).rev() {
            acc = (inc[j] * p).conj().exp() * (acc + gh[j + 1]);
            if j + 1 + w <= nt {
                let n = j + 1 + w;
                acc -= ((cum[n] - cum[j]) * p).conj().exp() * gh[n];
            }
            v[j] = acc * (frac * dt);
        }
        v
    });
    Ok(from_columns(out, grid, &spectral))
}

/// Euclidean adjoint of [`apply_k_epsilon`] on the node vector of a field.
pub fn apply_k_epsilon_adjoint(
    symbol: &Symbol,
    g: &Field,
    epsilon: f64,
    tcut: f64,
    grid: &SpacetimeGrid,
) -> Result<Field> {
    if !(0.0..=1.0).contains(&epsilon) {
        return input("epsilon must lie in [0, 1]");
    }
    if !(tcut > 0.0) {
        return input("Tcut must be positive");
    }
    let w = if epsilon == 1.0 {
        grid.nt()
    } else {
        window(grid, tcut).min(grid.nt())
    };
    duhamel_adjoint(symbol, g, grid, epsilon, w)
}

/// Solution of the Cauchy problem with zero initial data.
pub fn solve_cauchy(symbol: &Symbol, f: &Field, grid: &SpacetimeGrid) -> Result<Field> {
    duhamel(symbol, f, grid, 0.0, grid.nt())
}

/// `K_{ε,T}f`: the Duhamel sum with multiplier `|ξ|^{εγ}` and time cutoff
/// `h(ε, t−s, Tcut) = 1_{ε<1}1_{0<t−s<Tcut} + 1_{ε=1}`.
pub fn apply_k_epsilon(
    symbol: &Symbol,
    f: &Field,
    epsilon: f64,
    tcut: f64,
    grid: &SpacetimeGrid,
) -> Result<Field> {
    if !(0.0..=1.0).contains(&epsilon) {
        return input("epsilon must lie in [0, 1]");
    }
    if !(tcut > 0.0) {
        return input("Tcut must be positive");
    }
    let w = if epsilon == 1.0 {
        grid.nt()
    } else {
        window(grid, tcut).min(grid.nt())
    };
    duhamel(symbol, f, grid, epsilon, w)
}

fn slicewise<F>(field: &Field, mult: F) -> Result<Field>
where
    F: Fn(usize, f64, &[f64]) -> Result<Complex64> + Sync,
{
    let grid = field.grid();
    let spectral = Spectral::new(grid.n(), grid.d());
    let xi = grid.frequencies();
    let levels = field.levels();
    let slices = par::map(levels, |k| -> Result<Vec<Complex64>> {
        let t = field.time(k);
        let m = xi
            .iter()
            .enumerate()
            .map(|(i, x)| mult(i, t, x))
            .collect::<Result<Vec<_>>>()?;
        let mut v = field.slice(k).to_vec();
        spectral.apply_multiplier(&mut v, &m);
        Ok(v)
    });
    let mut values = Vec::with_capacity(field.values().len());
    for s in slices {
        values.extend(s?);
    }
    Field::from_values(grid, field.layout(), values)
}

/// `(−Δ)^{ν/2}`: multiplier `|ξ|^ν`.
pub fn fractional_laplacian(field: &Field, nu: f64) -> Result<Field> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return input("ν must be finite and nonnegative");
    }
    if nu == 0.0 {
        return Ok(field.clone());
    }
    slicewise(field, |_, _, x| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        Ok(Complex64::new(if r == 0.0 { 0.0 } else { r.powf(nu) }, 0.0))
    })
}

/// `(1−Δ)^{ν/2}`: multiplier `(1+|ξ|²)^{ν/2}`.
pub fn bessel_potential(field: &Field, nu: f64) -> Result<Field> {
    if !nu.is_finite() {
        return input("ν must be finite");
    }
    if nu == 0.0 {
        return Ok(field.clone());
    }
    slicewise(field, |_, _, x| {
        let r2 = x.iter().map(|v| v * v).sum::<f64>();
        Ok(Complex64::new((1.0 + r2).powf(0.5 * nu), 0.0))
    })
}

/// `ψ(t, −i∇)` applied at each stored time level.
pub fn apply_psi(symbol: &Symbol, field: &Field) -> Result<Field> {
    slicewise(field, |_, t, x| symbol.eval(t, x))
}

fn l2(v: &[Complex64], dv: f64) -> f64 {
    (v.iter().map(|c| c.norm_sqr()).sum::<f64>() * dv).sqrt()
}

/// `max_n ‖(u_{n+1} − u_n)/Δt − ψ(t_n)u_n − f_n‖ / max_n ‖f_n‖` over
/// `n = 0, …, Nt−1`, spatial L₂ norms.
pub fn residual(symbol: &Symbol, u: &Field, f: &Field) -> Result<f64> {
    let grid = u.grid();
    check_field(u, grid)?;
    check_field(f, grid)?;
    let psi_u = apply_psi(symbol, u)?;
    let dt = grid.dt();
    let dv = grid.cell_volume();
    let nt = grid.nt();
    let res = par::map(nt, |n| {
        let r: Vec<Complex64> = (0..grid.slice_len())
            .map(|i| (u.slice(n + 1)[i] - u.slice(n)[i]) / dt - psi_u.slice(n)[i] - f.slice(n)[i])
            .collect();
        (l2(&r, dv), l2(f.slice(n), dv))
    });
    let num = res.iter().map(|r| r.0).fold(0.0, f64::max);
    let den = res.iter().map(|r| r.1).fold(0.0, f64::max);
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode_field(g: &SpacetimeGrid, k: i64, time: impl Fn(f64) -> f64) -> Field {
        let xi0 = std::f64::consts::PI / g.half_width() * k as f64;
        Field::from_fn(g, |t, x| Complex64::from_polar(time(t), xi0 * x[0]))
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let g = SpacetimeGrid::new(1, 4.0, 32, 1.0, 8).unwrap();
        let h = Symbol::fractional_laplacian(2.0).unwrap();
        let u = solve_cauchy(&h, &Field::zeros(&g), &g).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        assert_eq!(residual(&h, &u, &Field::zeros(&g)).unwrap(), 0.0);
    }

    #[test]
    fn single_mode_matches_scalar_ode() {
        let g = SpacetimeGrid::new(1, std::f64::consts::PI, 32, 1.0, 4096).unwrap();
        let h = Symbol::fractional_laplacian(2.0).unwrap();
        // ξ₀ = 2
        let f = mode_field(&g, 2, |t| (-t).exp());
        let u = solve_cauchy(&h, &f, &g).unwrap();
        let t = 1.0f64;
        let q = 4.0f64;
        let exact = ((-t).exp() - (-t * q).exp()) / (q - 1.0);
        // amplitude at x = 0 (index N/2)
        let got = u.slice(g.nt())[16].re;
        assert!((got - exact).abs() < 2e-3 * exact.abs(), "{got} vs {exact}");
    }

    #[test]
    fn adjoint_pairing() {
        let g = SpacetimeGrid::new(1, 4.0, 16, 1.0, 12).unwrap();
        let h = Symbol::complex_shift(
            1.5,
            crate::track::PiecewiseConstantTrack::constant(1.0, 0.5).unwrap(),
        )
        .unwrap();
        let f = Field::from_fn(&g, |t, x| {
            Complex64::new((x[0] + 3.0 * t).sin(), x[0].cos() * t)
        });
        let r = Field::from_fn(&g, |t, x| {
            Complex64::new((2.0 * x[0]).cos() - t, (x[0] * t).sin())
        });
        for (eps, tc) in [(0.0, 0.3), (0.5, 10.0), (1.0, 0.1)] {
            let kf = apply_k_epsilon(&h, &f, eps, tc, &g).unwrap();
            let ka = apply_k_epsilon_adjoint(&h, &r, eps, tc, &g).unwrap();
            let lhs: Complex64 = kf
                .values()
                .iter()
                .zip(r.values())
                .map(|(a, b)| a * b.conj())
                .sum();
            let rhs: Complex64 = f
                .values()
                .iter()
                .zip(ka.values())
                .map(|(a, b)| a * b.conj())
                .sum();
            assert!(
                (lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0),
                "{lhs} {rhs}"
            );
        }
    }

    #[test]
    fn window_counts_strictly_smaller_lags() {
        let g = SpacetimeGrid::new(1, 1.0, 8, 1.0, 8).unwrap();
        assert_eq!(window(&g, 0.5), 3);
        assert_eq!(window(&g, 0.55), 4);
        assert_eq!(window(&g, 10.0), 79);
        assert_eq!(window(&g, 10.01), 80);
    }

    #[test]
    fn bessel_round_trip() {
        let g = SpacetimeGrid::new(2, 4.0, 16, 1.0, 2).unwrap();
        let f = Field::from_fn(&g, |t, x| Complex64::new((x[0] + t).sin(), x[1].cos()));
        let b = bessel_potential(&bessel_potential(&f, 1.5).unwrap(), -1.5).unwrap();
        let err = b
            .combine(Complex64::new(1.0, 0.0), &f, Complex64::new(-1.0, 0.0))
            .unwrap();
        assert!(err.max_abs() <= 1e-12 * f.max_abs());
        assert_eq!(fractional_laplacian(&f, 0.0).unwrap(), f);
    }
}
