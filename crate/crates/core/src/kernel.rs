//! Fundamental solutions p(t, s, x) and their ε-fractional, time and space
//! derivatives on the periodic grid, with decay, L_p and kernel-difference
//! measurements.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicBox;
use crate::error::{input, Result};
use crate::fit::loglog_fit;
use crate::grid::SpacetimeGrid;
use crate::par;
use crate::report::{EstimateReport, ReportRow, Verdict};
use crate::spectral::Spectral;
use crate::symbols::Symbol;

/// Lags with `ξ_max^γ·(t−s)` below this are treated as unresolved in fits.
pub const RESOLVED_DECAY: f64 = 20.0;
/// Largest admissible kernel mass fraction outside `|x|_∞ ≤ L/2`.
pub const TAIL_LIMIT: f64 = 1e-3;

/// `∫_s^t ψ(r, ξ) dr`, exact for piecewise-constant tracks.
pub fn symbol_time_integral(symbol: &Symbol, s: f64, t: f64, xi: &[f64]) -> Result<Complex64> {
    if !(s < t) {
        return input(format!("need s < t, got s={s}, t={t}"));
    }
    if s < 0.0 {
        return input("s must be nonnegative");
    }
    Ok(symbol.coefficient_integral(s, t)? * symbol.profile(xi)?)
}

/// Frequency-side quantities reused across slices of one grid.
#[derive(Clone, Debug)]
pub struct MultiplierTable {
    pub profile: Vec<f64>,
    pub abs_xi: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
    pub parity: Vec<f64>,
}

impl MultiplierTable {
    pub fn new(symbol: &Symbol, grid: &SpacetimeGrid) -> Self {
        let xi = grid.frequencies();
        let profile = xi.iter().map(|x| symbol.profile_unchecked(x)).collect();
        let abs_xi = xi
            .iter()
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let parity = (0..grid.slice_len()).map(|i| grid.parity(i)).collect();
        Self {
            profile,
            abs_xi,
            xi,
            parity,
        }
    }

    /// `|ξ|^{εγ}`, with the value 0 at ξ = 0 when ε > 0.
    pub fn frac_factor(&self, k: usize, eps_gamma: f64) -> f64 {
        if eps_gamma == 0.0 {
            1.0
        } else if self.abs_xi[k] == 0.0 {
            0.0
        } else {
            self.abs_xi[k].powf(eps_gamma)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelSlice {
    pub grid: SpacetimeGrid,
    pub t: f64,
    pub s: f64,
    pub epsilon: f64,
    pub m: u32,
    pub alpha: Vec<u32>,
    /// Samples at `x_j = −L + jΔx`, row-major.
    pub values: Vec<Complex64>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Multiplier `(iξ)^α |ξ|^{εγ} ψ(t,ξ)^m exp(∫ₛᵗψ)` on the frequency grid.
#[allow(clippy::too_many_arguments)]
pub fn slice_multiplier(
    symbol: &Symbol,
    table: &MultiplierTable,
    t: f64,
    s: f64,
    epsilon: f64,
    m: u32,
    alpha: &[u32],
) -> Result<Vec<Complex64>> {
    let c_int = symbol.coefficient_integral(s, t)?;
    let c_t = if m > 0 {
        symbol.coefficient(t)?
    } else {
        Complex64::new(1.0, 0.0)
    };
    let eg = epsilon * symbol.gamma();
    Ok((0..table.profile.len())
        .map(|k| {
            let p = table.profile[k];
            let mut v = (c_int * p).exp() * table.frac_factor(k, eg);
            for _ in 0..m {
                v *= c_t * p;
            }
            for (ax, &a) in alpha.iter().enumerate() {
                for _ in 0..a {
                    v *= Complex64::new(0.0, table.xi[k][ax]);
                }
            }
            v
        })
        .collect())
}

/// `(1/Δx^d)·IDFT[(−1)^k m_k]`: the periodic kernel whose discrete
/// convolution with `f` (weighted by `Δx^d`) equals `IDFT(m·DFT f)`.
pub fn kernel_from_multiplier(
    grid: &SpacetimeGrid,
    spectral: &Spectral,
    table: &MultiplierTable,
    mut mult: Vec<Complex64>,
) -> Vec<Complex64> {
    mult.iter_mut()
        .zip(&table.parity)
        .for_each(|(v, p)| *v *= *p);
    spectral.inverse(&mut mult);
    let s = 1.0 / grid.cell_volume();
    mult.iter_mut().for_each(|v| *v *= s);
    mult
}

#[allow(clippy::too_many_arguments)]
fn validate_slice_args(
    symbol: &Symbol,
    grid: &SpacetimeGrid,
    t: f64,
    s: f64,
    epsilon: f64,
    m: u32,
    alpha: &[u32],
) -> Result<()> {
    if !(s >= 0.0 && s < t) {
        return input(format!("need 0 ≤ s < t, got s={s}, t={t}"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return input("epsilon must lie in [0, 1]");
    }
    if m > 1 {
        return input("time derivative order m must be 0 or 1");
    }
    if alpha.len() != grid.d() || alpha.iter().sum::<u32>() > 2 {
        return input("alpha must have length d and order at most 2");
    }
    if m == 1 && t - s < 2.0 * grid.dt() * (1.0 - 1e-12) {
        return input("time-derivative slices need t − s ≥ 2Δt");
    }
    if let Some(tr) = symbol.track() {
        if t > tr.horizon() {
            return input("slice time beyond the symbol's track");
        }
    }
    Ok(())
}

fn resolution_warning(symbol: &Symbol, grid: &SpacetimeGrid, lag: f64) -> Option<String> {
    let decay = grid.xi_max().powf(symbol.gamma()) * lag;
    (decay < 1.0).then(|| {
        format!("lag {lag} unresolved on the frequency grid (ξ_max^γ·(t−s) = {decay:.3e} < 1)")
    })
}

/// Builds one slice `∂ₜ^m D^α_x P_ε(t, s, ·)`.
#[allow(clippy::too_many_arguments)]
pub fn build_kernel_slice(
    symbol: &Symbol,
    grid: &SpacetimeGrid,
    t: f64,
    s: f64,
    epsilon: f64,
    m: u32,
    alpha: &[u32],
) -> Result<KernelSlice> {
    validate_slice_args(symbol, grid, t, s, epsilon, m, alpha)?;
    let table = MultiplierTable::new(symbol, grid);
    let spectral = Spectral::new(grid.n(), grid.d());
    let mult = slice_multiplier(symbol, &table, t, s, epsilon, m, alpha)?;
    let values = kernel_from_multiplier(grid, &spectral, &table, mult);
    Ok(KernelSlice {
        grid: grid.clone(),
        t,
        s,
        epsilon,
        m,
        alpha: alpha.to_vec(),
        values,
        warnings: resolution_warning(symbol, grid, t - s)
            .into_iter()
            .collect(),
    })
}

impl KernelSlice {
    pub fn header(&self) -> serde_json::Value {
        serde_json::json!({
            "d": self.grid.d(),
            "L": self.grid.half_width(),
            "N": self.grid.n(),
            "t": self.t,
            "s": self.s,
            "epsilon": self.epsilon,
            "m": self.m,
            "alpha": self.alpha,
        })
    }

    pub fn write_binary<W: std::io::Write>(&self, w: W) -> Result<()> {
        crate::io::write_binary(w, &self.header(), &self.values)
    }

    fn is_plain(&self) -> bool {
        self.epsilon == 0.0 && self.m == 0 && self.alpha.iter().all(|&a| a == 0)
    }

    /// Euclidean norm of the node position.
    pub fn radius(&self, idx: usize) -> f64 {
        self.grid
            .point(idx)
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    fn in_window(&self, idx: usize) -> bool {
        let h = 0.5 * self.grid.half_width();
        self.grid.point(idx).iter().all(|v| v.abs() <= h)
    }

    /// Fraction of `Σ|values|` carried by nodes outside `|x|_∞ ≤ L/2`.
    pub fn tail_fraction(&self) -> f64 {
        let (mut inner, mut outer) = (0.0, 0.0);
        for (i, v) in self.values.iter().enumerate() {
            if self.in_window(i) {
                inner += v.norm();
            } else {
                outer += v.norm();
            }
        }
        outer / (inner + outer)
    }

    /// `sup_{|x|_∞ ≤ L/2} |x|^n |K|`.
    pub fn windowed_sup(&self, n: f64) -> f64 {
        (0..self.values.len())
            .filter(|&i| self.in_window(i))
            .map(|i| weight_pow(self.radius(i), n) * self.values[i].norm())
            .fold(0.0, f64::max)
    }

    /// `(Σ_{|x|_∞ ≤ L/2} |x|^{2n}|K|² Δx^d)^{1/2}`.
    pub fn windowed_l2(&self, n: f64) -> f64 {
        let dv = self.grid.cell_volume();
        (0..self.values.len())
            .filter(|&i| self.in_window(i))
            .map(|i| (weight_pow(self.radius(i), n) * self.values[i].norm()).powi(2) * dv)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_imag_ratio(&self) -> f64 {
        let re = self.values.iter().map(|v| v.re.abs()).fold(0.0, f64::max);
        let im = self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        im / re
    }
}

fn weight_pow(r: f64, n: f64) -> f64 {
    if n == 0.0 {
        1.0
    } else {
        r.powf(n)
    }
}

/// `Δx^d Σ|K|` for a plain (ε = m = |α| = 0) slice.
pub fn l1_mass(slice: &KernelSlice) -> Result<f64> {
    if !slice.is_plain() {
        return input("l1_mass needs a slice with ε = 0, m = 0, α = 0");
    }
    Ok(slice.grid.cell_volume() * slice.values.iter().map(|v| v.norm()).sum::<f64>())
}

/// Discrete `‖|x|^{n+δ} K‖_{L_p}` over the torus, `p ∈ [1, ∞]`.
pub fn kernel_lp_norm(slice: &KernelSlice, p: f64, n_plus_delta: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return input("p must lie in [1, ∞]");
    }
    if !(n_plus_delta >= 0.0 && n_plus_delta.is_finite()) {
        return input("n + δ must be finite and nonnegative");
    }
    let vals = (0..slice.values.len())
        .map(|i| weight_pow(slice.radius(i), n_plus_delta) * slice.values[i].norm());
    if p.is_infinite() {
        return Ok(vals.fold(0.0, f64::max));
    }
    let dv = slice.grid.cell_volume();
    Ok((vals.map(|v| v.powf(p)).sum::<f64>() * dv).powf(1.0 / p))
}

/// Theory exponent `−(m+ε) − (d+|α|−n)/γ` of the weighted sup.
pub fn decay_theory(d: usize, gamma: f64, epsilon: f64, m: u32, alpha_order: u32, n: f64) -> f64 {
    -(m as f64 + epsilon) - (d as f64 + alpha_order as f64 - n) / gamma
}

const DECAY_OP: &str = "kernel::decay_exponent_fit";
const DECAY_REF: &str = "sup_x |x|^n |∂ₜ^m D^α P_ε| ≤ N|t−s|^{−(m+ε)−(d+|α|−n)/γ}";
const DECAY_L2_REF: &str = "‖|x|^n ∂ₜ^m D^α P_ε‖_{L₂} ≤ N|t−s|^{−(m+ε)−(d+|α|−n)/γ+d/(2γ)}";
/// Slope tolerance used for decay fits.
pub const DECAY_TOLERANCE: f64 = 0.1;

/// Fits `log Q(τ)` against `log τ` for slices `(s, t) = (0, τ)`.
#[allow(clippy::too_many_arguments)]
pub fn decay_exponent_fit(
    symbol: &Symbol,
    grid: &SpacetimeGrid,
    epsilon: f64,
    m: u32,
    alpha: &[u32],
    n: u32,
    lag_sweep: &[f64],
) -> Result<EstimateReport> {
    if lag_sweep.len() < 2 {
        return input("lag sweep needs at least two lags");
    }
    let lo = lag_sweep.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = lag_sweep.iter().cloned().fold(0.0, f64::max);
    if (hi / lo).log10() < 2.0 - 1e-9 {
        return input("lag sweep must span at least two decades");
    }
    for &tau in lag_sweep {
        validate_slice_args(symbol, grid, tau, 0.0, epsilon, m, alpha)?;
    }
    let table = MultiplierTable::new(symbol, grid);
    let spectral = Spectral::new(grid.n(), grid.d());
    let kappa = symbol
        .track()
        .map(|t| t.min().abs().max(0.0))
        .filter(|_| matches!(symbol.kind(), crate::symbols::SymbolKind::TimeModulated))
        .unwrap_or(1.0);
    let nf = n as f64;
    let per_lag = par::map(lag_sweep.len(), |i| -> Result<(f64, f64, f64, f64, bool)> {
        let tau = lag_sweep[i];
        let mult = slice_multiplier(symbol, &table, tau, 0.0, epsilon, m, alpha)?;
        let slice = KernelSlice {
            grid: grid.clone(),
            t: tau,
            s: 0.0,
            epsilon,
            m,
            alpha: alpha.to_vec(),
            values: kernel_from_multiplier(grid, &spectral, &table, mult),
            warnings: vec![],
        };
        let decay = grid.xi_max().powf(symbol.gamma()) * tau * kappa;
        let tail = slice.tail_fraction();
        let ok = decay >= RESOLVED_DECAY && tail <= TAIL_LIMIT;
        Ok((tau, slice.windowed_sup(nf), slice.windowed_l2(nf), tail, ok))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let a_ord: u32 = alpha.iter().sum();
    let theory = decay_theory(grid.d(), symbol.gamma(), epsilon, m, a_ord, nf);
    let theory_l2 = theory + grid.d() as f64 / (2.0 * symbol.gamma());
    let inputs = format!(
        "gamma={};d={};epsilon={epsilon};m={m};alpha={:?};n={n}",
        symbol.gamma(),
        grid.d(),
        alpha
    );
    let mut report = EstimateReport::new("kernel_decay");
    for &(tau, q, l2, tail, ok) in &per_lag {
        let mut row = ReportRow::new(format!("lag={tau}"), DECAY_OP, DECAY_REF)
            .inputs(format!("{inputs};tau={tau}"))
            .measured(q)
            .verdict(Verdict::Info)
            .note(format!("L2={l2:.6e};tail={tail:.3e}"));
        if !ok {
            row = row.note(format!(
                "excluded: unresolved or tail mass {tail:.3e} > {TAIL_LIMIT}"
            ));
        }
        report.push(row);
    }
    let used: Vec<_> = per_lag.iter().filter(|r| r.4).collect();
    if used.len() < 2 {
        report.note("fewer than two resolved lags; no fit");
        report.push(
            ReportRow::new("slope_sup", DECAY_OP, DECAY_REF)
                .inputs(inputs)
                .theory(theory)
                .verdict(Verdict::Fail)
                .note("no resolved lags"),
        );
        return Ok(report);
    }
    let taus: Vec<f64> = used.iter().map(|r| r.0).collect();
    let sup: Vec<f64> = used.iter().map(|r| r.1).collect();
    let l2: Vec<f64> = used.iter().map(|r| r.2).collect();
    for (case, vals, th, reference) in [
        ("slope_sup", &sup, theory, DECAY_REF),
        ("slope_l2", &l2, theory_l2, DECAY_L2_REF),
    ] {
        let row = ReportRow::new(case, DECAY_OP, reference).inputs(inputs.clone());
        report.push(match loglog_fit(&taus, vals) {
            Some(f) => row.slope_check(f.slope, f.stderr, th, DECAY_TOLERANCE),
            None => row.theory(th).verdict(Verdict::Fail).note("degenerate fit"),
        });
    }
    Ok(report)
}

/// `∫_{ℝ^{d+1}∖A*} |K_ε(t,s₀,x−y₀)h(ε,t−s₀,T) − K_ε(t,s₁,x−y₁)h(ε,t−s₁,T)| dx dt`
/// over grid times `t_k > min(s₀, s₁)` up to the grid horizon, with
/// `h = 1_{ε<1}1_{0<t−s<T} + 1_{ε=1}`.
#[allow(clippy::too_many_arguments)]
pub fn hormander_integral(
    symbol: &Symbol,
    grid: &SpacetimeGrid,
    epsilon: f64,
    dbox: &DyadicBox,
    pair1: (f64, &[f64]),
    pair2: (f64, &[f64]),
    tcut: f64,
) -> Result<f64> {
    if dbox.d() != grid.d() {
        return input("box and grid dimensions differ");
    }
    if !(0.0..=1.0).contains(&epsilon) || !(tcut > 0.0) {
        return input("need ε ∈ [0, 1] and Tcut > 0");
    }
    let enl = dbox.enlarged();
    let l = grid.half_width();
    if enl.t_hi > grid.horizon()
        || enl
            .center
            .iter()
            .any(|c| c - enl.radius < -l || c + enl.radius >= l)
    {
        return input("dyadic box (with its enlargement) does not fit in the grid");
    }
    let dt = grid.dt();
    let dx = grid.dx();
    let on_grid = |v: f64, h: f64| ((v / h) - (v / h).round()).abs() < 1e-9;
    let mut shifts = Vec::new();
    for (s, y) in [pair1, pair2] {
        if !dbox.contains(s, y) {
            return input("pairs must lie in the box");
        }
        if !on_grid(s, dt) || y.iter().any(|&v| !on_grid(v, dx)) {
            return input("pairs must sit on grid nodes");
        }
        shifts.push(
            y.iter()
                .map(|&v| (v / dx).round() as i64)
                .collect::<Vec<_>>(),
        );
    }
    if pair1.0 == pair2.0 && pair1.1 == pair2.1 {
        return Ok(0.0);
    }
    let (s0, s1) = (pair1.0, pair2.0);
    let table = MultiplierTable::new(symbol, grid);
    let spectral = Spectral::new(grid.n(), grid.d());
    let n = grid.n() as i64;
    let len = grid.slice_len();
    let smin = s0.min(s1);
    let k0 = (smin / dt).round() as usize + 1;
    let inside: Vec<bool> = (0..len)
        .map(|i| enl.radius * enl.radius >= dist2(&grid.point(i), &enl.center))
        .collect();
    let h = |lag: f64| -> f64 {
        if lag <= 0.0 {
            0.0
        } else if epsilon == 1.0 || lag < tcut {
            1.0
        } else {
            0.0
        }
    };
    let slice_at = |t: f64, s: f64| -> Result<Option<Vec<Complex64>>> {
        if h(t - s) == 0.0 {
            return Ok(None);
        }
        let mult = slice_multiplier(symbol, &table, t, s, epsilon, 0, &vec![0; grid.d()])?;
        Ok(Some(kernel_from_multiplier(grid, &spectral, &table, mult)))
    };
    let d = grid.d();
    let shifted = |v: &[Complex64], shift: &[i64], i: usize| -> Complex64 {
        let m = grid.unflatten(i);
        let mut idx = 0usize;
        for k in 0..d {
            let j = (m[k] as i64 - shift[k]).rem_euclid(n);
            idx = idx * grid.n() + j as usize;
        }
        v[idx]
    };
    let steps: Vec<usize> = (k0..=grid.nt()).collect();
    let parts = par::map(steps.len(), |j| -> Result<f64> {
        let t = grid.time(steps[j]);
        let a = slice_at(t, s0)?;
        let b = slice_at(t, s1)?;
        if a.is_none() && b.is_none() {
            return Ok(0.0);
        }
        let in_time = t >= enl.t_lo && t <= enl.t_hi;
        let zero = Complex64::new(0.0, 0.0);
        let mut acc = 0.0;
        for (i, &ins) in inside.iter().enumerate().take(len) {
            if in_time && ins {
                continue;
            }
            let va = a.as_ref().map_or(zero, |v| shifted(v, &shifts[0], i));
            let vb = b.as_ref().map_or(zero, |v| shifted(v, &shifts[1], i));
            acc += (va - vb).norm();
        }
        Ok(acc)
    });
    let total: f64 = parts.into_iter().collect::<Result<Vec<_>>>()?.iter().sum();
    Ok(total * dt * grid.cell_volume())
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
