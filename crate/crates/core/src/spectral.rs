//! Finite-difference discretization of differential operators on product
//! grids and dense Hermitian eigenvalues.
//!
//! An operator `c2^{ij}∂_i∂_j + c1^j∂_j + c0` is rewritten in conservative
//! form with respect to the weight `w = √|g|`:
//!
//! `Lψ = (1/w)∂_i(w c2^{ij}∂_jψ) + (1/2w)[∂_j(F^jψ) + F^j∂_jψ] + c0′ψ`,
//!
//! with `F^j = w b^j`, `b^j = c1^j − (1/w)∂_i(w c2^{ij})` and
//! `c0′ = c0 − (1/2w)∂_jF^j`. Each term is discretized with face-centred
//! differences so that `W·H` is Hermitian whenever the operator is formally
//! symmetric, where `W` holds the quadrature weights. The stored matrix is
//! the similarity transform `W^{1/2} H W^{−1/2}`.

use std::sync::Arc;

use num_complex::Complex64;
use num_rational::Rational64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{Bindings, Domain, Expr};
use crate::geometry::{Boundary, MetricChart};
use crate::operator::DiffOperator;
use crate::quantization::{energy_operator, QuantizationSetup};

/// Largest number of unknowns accepted by [`Grid::new`].
pub const MAX_UNKNOWNS: usize = 8192;
/// Relative Hermitian defect above which a matrix is treated as non-symmetric.
pub const HERMITIAN_TOL: f64 = 1e-8;

const GAUSS_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GAUSS_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("grid needs {want} sizes, got {got}")]
    Sizes { got: usize, want: usize },
    #[error("axis `{axis}` needs at least {min} nodes, got {got}")]
    TooFew { axis: String, min: usize, got: usize },
    #[error("grid has {0} unknowns; the limit is {MAX_UNKNOWNS}")]
    TooLarge(usize),
    #[error("polar axis `{0}` needs a periodic partner axis with an even node count")]
    NoPolarPartner(String),
    #[error("cannot evaluate {what} at {point}: {reason}")]
    Evaluation { what: String, point: String, reason: String },
    #[error("quadrature weight is not positive at {0}")]
    Weight(String),
    #[error("operator acts on {got:?}, grid on {want:?}")]
    Coordinates { got: Vec<String>, want: Vec<String> },
    #[error("unsupported discretization: {0}")]
    Unsupported(String),
    #[error("matrix is not Hermitian (relative defect {0:.3e})")]
    NotHermitian(f64),
    #[error("requested {want} eigenvalues of a {size}x{size} matrix")]
    Count { want: usize, size: usize },
    #[error("eigensolver returned non-finite values")]
    NonConvergence,
    #[error("scalar curvature is not constant on the chart: {0}")]
    NonConstantCurvature(String),
}

/// One grid axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub boundary: Boundary,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub h: f64,
}

impl Axis {
    fn new(name: &str, boundary: Boundary, lo: f64, hi: f64, n: usize) -> Self {
        let len = hi - lo;
        let h = match boundary {
            Boundary::Open => len / (n + 1) as f64,
            Boundary::Periodic | Boundary::Polar => len / n as f64,
        };
        Axis { name: name.to_string(), boundary, lo, hi, n, h }
    }

    /// Position of node `j`, `0 ≤ j < n`.
    pub fn node(&self, j: usize) -> f64 {
        match self.boundary {
            Boundary::Open => self.lo + (j + 1) as f64 * self.h,
            Boundary::Periodic => self.lo + j as f64 * self.h,
            Boundary::Polar => self.lo + (j as f64 + 0.5) * self.h,
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }
}

/// Tensor-product grid over a chart with quadrature weights `W_k = w_k·Πh`.
#[derive(Debug, Clone)]
pub struct Grid {
    axes: Vec<Axis>,
    strides: Vec<usize>,
    len: usize,
    density: Vec<f64>,
    weights: Vec<f64>,
    polar_partner: Option<usize>,
}

fn describe_point(names: &[String], x: &[f64]) -> String {
    names.iter().zip(x).map(|(n, v)| format!("{n}={v:.6}")).collect::<Vec<_>>().join(", ")
}

fn eval_at(chart: &MetricChart, e: &Expr, x: &[f64], what: &str) -> Result<Complex64, SpectralError> {
    eval_with(&chart.bindings_at(x), e).map_err(|reason| SpectralError::Evaluation {
        what: what.to_string(),
        point: describe_point(chart.names(), x),
        reason,
    })
}

fn eval_with(b: &Bindings, e: &Expr) -> Result<Complex64, String> {
    e.eval(b).map_err(|err| err.to_string())
}

impl Grid {
    /// Builds a grid with `sizes[i]` nodes on coordinate `i`.
    pub fn new(chart: &MetricChart, sizes: &[usize]) -> Result<Self, SpectralError> {
        let coords = chart.coordinates();
        if sizes.len() != coords.len() {
            return Err(SpectralError::Sizes { got: sizes.len(), want: coords.len() });
        }
        let mut axes = Vec::new();
        for (c, &n) in coords.iter().zip(sizes) {
            let min = if c.boundary == Boundary::Open { 1 } else { 3 };
            if n < min {
                return Err(SpectralError::TooFew { axis: c.name.clone(), min, got: n });
            }
            axes.push(Axis::new(&c.name, c.boundary, c.lo, c.hi, n));
        }
        let len = sizes.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n)).unwrap_or(usize::MAX);
        if len > MAX_UNKNOWNS {
            return Err(SpectralError::TooLarge(len));
        }
        let mut strides = vec![1; axes.len()];
        for i in (0..axes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * axes[i + 1].n;
        }
        let polar_partner = axes.iter().position(|a| a.boundary == Boundary::Periodic && a.n % 2 == 0);
        let mut grid = Grid { axes, strides, len, density: Vec::new(), weights: Vec::new(), polar_partner };
        let cell: f64 = grid.axes.iter().map(|a| a.h).product();
        let w = chart.volume_density();
        for k in 0..len {
            let x = grid.point(k);
            let v = eval_at(chart, w, &x, "volume density")?;
            if !(v.re > 0.0) || v.im.abs() > 1e-12 * v.re {
                return Err(SpectralError::Weight(describe_point(chart.names(), &x)));
            }
            grid.density.push(v.re);
            grid.weights.push(v.re * cell);
        }
        Ok(grid)
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Quadrature weights `W_k`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Volume density `w_k = √|g|` at the nodes.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(m, s)| m * s).sum()
    }

    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        for (i, s) in self.strides.iter().enumerate() {
            out[i] = k / s;
            k %= s;
        }
        out
    }

    pub fn point(&self, k: usize) -> Vec<f64> {
        self.multi_index(k).iter().zip(&self.axes).map(|(&j, a)| a.node(j)).collect()
    }

    /// Neighbour of `k` shifted by `step` (±1) along `axis`, wrapping periodic axes.
    fn neighbour(&self, k: usize, axis: usize, step: isize) -> Option<usize> {
        let mut m = self.multi_index(k);
        let a = &self.axes[axis];
        let j = m[axis] as isize + step;
        m[axis] = if a.boundary == Boundary::Periodic {
            j.rem_euclid(a.n as isize) as usize
        } else if j < 0 || j >= a.n as isize {
            return None;
        } else {
            j as usize
        };
        Some(self.index(&m))
    }

    /// Node across the pole from `k`: same polar index, partner angle shifted by half a period.
    fn across_pole(&self, k: usize, polar: usize) -> Result<usize, SpectralError> {
        let p = self.polar_partner.ok_or_else(|| SpectralError::NoPolarPartner(self.axes[polar].name.clone()))?;
        let mut m = self.multi_index(k);
        m[p] = (m[p] + self.axes[p].n / 2) % self.axes[p].n;
        Ok(self.index(&m))
    }

    pub fn metadata(&self) -> GridMeta {
        GridMeta { axes: self.axes.clone(), unknowns: self.len, total_weight: self.total_weight() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMeta {
    pub axes: Vec<Axis>,
    pub unknowns: usize,
    pub total_weight: f64,
}

/// A dense operator matrix on a grid, stored symmetrized as `W^{1/2} H W^{−1/2}`.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    grid: Arc<Grid>,
    n: usize,
    data: Vec<Complex64>,
}

impl DiscreteOperator {
    fn from_raw(grid: Arc<Grid>, mut raw: Vec<Complex64>) -> Self {
        let n = grid.len();
        let sw: Vec<f64> = grid.weights.iter().map(|w| w.sqrt()).collect();
        for k in 0..n {
            for l in 0..n {
                raw[k * n + l] *= sw[k] / sw[l];
            }
        }
        DiscreteOperator { grid, n, data: raw }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Entry of the symmetrized matrix.
    pub fn entry(&self, k: usize, l: usize) -> Complex64 {
        self.data[k * self.n + l]
    }

    /// Entry of the matrix before the similarity transform.
    pub fn raw_entry(&self, k: usize, l: usize) -> Complex64 {
        let w = &self.grid.weights;
        self.entry(k, l) * (w[l] / w[k]).sqrt()
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }

    /// Maximum absolute row sum of the symmetrized matrix.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|k| (0..self.n).map(|l| self.entry(k, l).norm()).sum::<f64>()).fold(0.0, f64::max)
    }

    /// `max |H_s − H_s^†| / ‖H_s‖_∞`.
    pub fn hermitian_defect(&self) -> f64 {
        let norm = self.norm_inf();
        if norm == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for k in 0..self.n {
            for l in k..self.n {
                worst = worst.max((self.entry(k, l) - self.entry(l, k).conj()).norm());
            }
        }
        worst / norm
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|k| (0..self.n).map(|l| self.entry(k, l) * v[l]).sum()).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "operators live on different grids");
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        DiscreteOperator { grid: self.grid.clone(), n: self.n, data }
    }
}

struct Assembly {
    n: usize,
    raw: Vec<Complex64>,
}

impl Assembly {
    fn add(&mut self, k: usize, l: usize, v: Complex64) {
        self.raw[k * self.n + l] += v;
    }
}

fn zero_if_vanishing(chart: &MetricChart, e: Expr) -> Expr {
    if !e.is_zero() && chart.same(&e, &Expr::zero(), 0x51de) {
        Expr::zero()
    } else {
        e
    }
}

/// Discretizes `op` on `grid`; see the module documentation for the scheme.
pub fn discretize(op: &DiffOperator, chart: &MetricChart, grid: &Arc<Grid>) -> Result<DiscreteOperator, SpectralError> {
    if op.coords().as_ref() != chart.names().as_ref() {
        return Err(SpectralError::Coordinates { got: op.coords().to_vec(), want: chart.names().to_vec() });
    }
    let dim = chart.dim();
    let w = chart.volume_density();
    let c2 = op.c2();
    let flux_c2: Vec<Vec<Expr>> =
        (0..dim).map(|i| (0..dim).map(|j| (w * &c2[i][j]).simplify()).collect()).collect();
    let mut fluxes = Vec::with_capacity(dim);
    for j in 0..dim {
        let div: Vec<Expr> = (0..dim).filter(|i| !flux_c2[*i][j].is_zero()).map(|i| chart.d(&flux_c2[i][j], i)).collect();
        let b = zero_if_vanishing(chart, (&op.c1()[j] - Expr::add(div) / w).simplify());
        fluxes.push((w * b).simplify());
    }
    let c0 = if fluxes.iter().all(Expr::is_zero) {
        op.c0().clone()
    } else {
        let div: Vec<Expr> = fluxes.iter().enumerate().map(|(j, f)| chart.d(f, j)).collect();
        (op.c0() - Expr::ratio(1, 2) * Expr::add(div) / w).simplify()
    };
    let n = grid.len();
    let mut asm = Assembly { n, raw: vec![Complex64::new(0.0, 0.0); n * n] };
    let dens = grid.density();
    let max_density = dens.iter().cloned().fold(0.0, f64::max);

    for axis in 0..dim {
        let ax = &grid.axes()[axis];
        let h = ax.h;
        let a_expr = &flux_c2[axis][axis];
        let f_expr = &fluxes[axis];
        for k in 0..n {
            let x = grid.point(k);
            let face = |offset: f64| {
                let mut y = x.clone();
                y[axis] += offset;
                y
            };
            let xr = face(0.5 * h);
            let right = grid.neighbour(k, axis, 1);
            match right {
                Some(r) => {
                    let a = eval_at(chart, a_expr, &xr, "second-order flux")?;
                    let f = eval_at(chart, f_expr, &xr, "first-order flux")?;
                    let (wk, wr) = (dens[k], dens[r]);
                    asm.add(k, r, a / (wk * h * h) + f / (2.0 * wk * h));
                    asm.add(r, k, a / (wr * h * h) - f / (2.0 * wr * h));
                    asm.add(k, k, -a / (wk * h * h));
                    asm.add(r, r, -a / (wr * h * h));
                }
                None => boundary_face(&mut asm, chart, grid, k, axis, &xr, a_expr, f_expr, max_density)?,
            }
            if grid.neighbour(k, axis, -1).is_none() {
                let xl = face(-0.5 * h);
                boundary_face(&mut asm, chart, grid, k, axis, &xl, a_expr, f_expr, max_density)?;
            }
        }
    }

    for i in 0..dim {
        for j in (i + 1)..dim {
            let a_expr = &flux_c2[i][j];
            if a_expr.is_zero() {
                continue;
            }
            mixed_terms(&mut asm, chart, grid, i, j, a_expr)?;
        }
    }

    if !c0.is_zero() {
        for k in 0..n {
            let v = eval_at(chart, &c0, &grid.point(k), "zeroth-order coefficient")?;
            asm.add(k, k, v);
        }
    }
    Ok(DiscreteOperator::from_raw(grid.clone(), asm.raw))
}

/// A face on the edge of a non-periodic axis. Dirichlet faces see `ψ = 0`
/// outside. Polar faces carry no flux where the density vanishes, and
/// otherwise couple to the reflected node across the pole.
#[allow(clippy::too_many_arguments)]
fn boundary_face(
    asm: &mut Assembly,
    chart: &MetricChart,
    grid: &Grid,
    k: usize,
    axis: usize,
    xf: &[f64],
    a_expr: &Expr,
    f_expr: &Expr,
    max_density: f64,
) -> Result<(), SpectralError> {
    let h = grid.axes()[axis].h;
    let wk = grid.density()[k];
    match grid.axes()[axis].boundary {
        Boundary::Open => {
            let a = eval_at(chart, a_expr, xf, "second-order flux")?;
            asm.add(k, k, -a / (wk * h * h));
        }
        Boundary::Polar => {
            let w_face = chart.volume_density().eval(&chart.bindings_at(xf));
            let vanishes = match w_face {
                Ok(v) => v.norm() <= 1e-12 * max_density,
                Err(_) => true,
            };
            if vanishes {
                return Ok(());
            }
            let f = eval_at(chart, f_expr, xf, "first-order flux")?;
            if f.norm() > 0.0 {
                return Err(SpectralError::Unsupported(format!(
                    "first-order flux through the pole of `{}`",
                    grid.axes()[axis].name
                )));
            }
            let g = grid.across_pole(k, axis)?;
            let mut xg = grid.point(g);
            xg[axis] = xf[axis];
            let a = 0.5 * (eval_at(chart, a_expr, xf, "second-order flux")? + eval_at(chart, a_expr, &xg, "second-order flux")?);
            asm.add(k, g, a / (wk * h * h));
            asm.add(k, k, -a / (wk * h * h));
        }
        Boundary::Periodic => unreachable!("periodic axes have no boundary faces"),
    }
    Ok(())
}

/// Symmetric cross stencil for `(1/w)[∂_i(a∂_jψ) + ∂_j(a∂_iψ)]`, `a = w c2^{ij}`.
fn mixed_terms(
    asm: &mut Assembly,
    chart: &MetricChart,
    grid: &Grid,
    i: usize,
    j: usize,
    a_expr: &Expr,
) -> Result<(), SpectralError> {
    let n = grid.len();
    let (hi, hj) = (grid.axes()[i].h, grid.axes()[j].h);
    let polar = grid.axes()[i].boundary == Boundary::Polar || grid.axes()[j].boundary == Boundary::Polar;
    let mut a_node = Vec::with_capacity(n);
    for k in 0..n {
        a_node.push(eval_at(chart, a_expr, &grid.point(k), "mixed second-order coefficient")?);
    }
    for k in 0..n {
        let scale = 1.0 / (4.0 * hi * hj * grid.density()[k]);
        for (outer, inner) in [(i, j), (j, i)] {
            for s_out in [1isize, -1] {
                let Some(m) = grid.neighbour(k, outer, s_out) else {
                    if polar {
                        return Err(SpectralError::Unsupported("mixed derivatives across a pole".into()));
                    }
                    continue;
                };
                for s_in in [1isize, -1] {
                    let Some(t) = grid.neighbour(m, inner, s_in) else {
                        if polar {
                            return Err(SpectralError::Unsupported("mixed derivatives across a pole".into()));
                        }
                        continue;
                    };
                    let sign = (s_out * s_in) as f64;
                    asm.add(k, t, a_node[m] * sign * scale);
                }
            }
        }
    }
    Ok(())
}

fn gauss_integral(f: impl Fn(f64) -> Result<Complex64, SpectralError>, a: f64, b: f64) -> Result<Complex64, SpectralError> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
        acc += f(mid + half * x)? * w;
    }
    Ok(acc * half)
}

/// Discretizes `Ĥ_k`. With a magnetic potential the kinetic term uses
/// gauge-covariant link variables `U = exp(−(i/ħ)∫A)` along grid edges, so a
/// gauge change `A → A + dχ` conjugates the matrix by the diagonal unitary
/// `e^{iχ/ħ}` exactly. That path needs a diagonal metric and no polar axis
/// with non-vanishing density at the pole.
pub fn discretize_energy(setup: &QuantizationSetup, k: Rational64, grid: &Arc<Grid>) -> Result<DiscreteOperator, SpectralError> {
    let chart = &setup.chart;
    let Some(a_form) = &setup.magnetic else {
        return discretize(&energy_operator(setup, k), chart, grid);
    };
    let dim = chart.dim();
    let ginv = chart.inverse_metric();
    for i in 0..dim {
        for j in 0..dim {
            if i != j && !ginv[i][j].is_zero() && !chart.same(&ginv[i][j], &Expr::zero(), 0x9a) {
                return Err(SpectralError::Unsupported("magnetic discretization needs a diagonal metric".into()));
            }
        }
    }
    let w = chart.volume_density();
    let hbar = setup.hbar;
    let kinetic = -0.5 * hbar * hbar;
    let n = grid.len();
    let mut asm = Assembly { n, raw: vec![Complex64::new(0.0, 0.0); n * n] };
    let dens = grid.density();
    let max_density = dens.iter().cloned().fold(0.0, f64::max);
    for axis in 0..dim {
        let h = grid.axes()[axis].h;
        let a_expr = (w * &ginv[axis][axis]).simplify();
        let comp = &a_form.components[axis];
        for kk in 0..n {
            let x = grid.point(kk);
            let mut xr = x.clone();
            xr[axis] += 0.5 * h;
            let a = eval_at(chart, &a_expr, &xr, "second-order flux")? * kinetic;
            let wk = dens[kk];
            match grid.neighbour(kk, axis, 1) {
                Some(r) => {
                    let phase = gauss_integral(
                        |s| {
                            let mut y = x.clone();
                            y[axis] = s;
                            eval_at(chart, comp, &y, "magnetic potential")
                        },
                        x[axis],
                        x[axis] + h,
                    )?;
                    let link = (Complex64::new(0.0, -1.0 / hbar) * phase).exp();
                    let wr = dens[r];
                    asm.add(kk, r, a * link / (wk * h * h));
                    asm.add(r, kk, a * link.conj() / (wr * h * h));
                    asm.add(kk, kk, -a / (wk * h * h));
                    asm.add(r, r, -a / (wr * h * h));
                }
                None => edge_face(&mut asm, chart, grid, kk, axis, &xr, a, max_density)?,
            }
            if grid.neighbour(kk, axis, -1).is_none() {
                let mut xl = x.clone();
                xl[axis] -= 0.5 * h;
                let a = eval_at(chart, &a_expr, &xl, "second-order flux")? * kinetic;
                edge_face(&mut asm, chart, grid, kk, axis, &xl, a, max_density)?;
            }
        }
    }
    let h2 = Expr::real(hbar * hbar);
    let mut c0 = setup.potential.clone();
    if k != Rational64::new(0, 1) {
        c0 = c0 + h2 * Expr::num(crate::expr::Number::from_rational(k)) * chart.scalar_curvature();
    }
    let c0 = c0.simplify();
    if !c0.is_zero() {
        for kk in 0..n {
            let v = eval_at(chart, &c0, &grid.point(kk), "potential")?;
            asm.add(kk, kk, v);
        }
    }
    Ok(DiscreteOperator::from_raw(grid.clone(), asm.raw))
}

#[allow(clippy::too_many_arguments)]
fn edge_face(
    asm: &mut Assembly,
    chart: &MetricChart,
    grid: &Grid,
    k: usize,
    axis: usize,
    xf: &[f64],
    a: Complex64,
    max_density: f64,
) -> Result<(), SpectralError> {
    let h = grid.axes()[axis].h;
    let wk = grid.density()[k];
    match grid.axes()[axis].boundary {
        Boundary::Open => asm.add(k, k, -a / (wk * h * h)),
        Boundary::Polar => {
            let vanishes = match chart.volume_density().eval(&chart.bindings_at(xf)) {
                Ok(v) => v.norm() <= 1e-12 * max_density,
                Err(_) => true,
            };
            if !vanishes {
                return Err(SpectralError::Unsupported("magnetic flux through a pole".into()));
            }
        }
        Boundary::Periodic => unreachable!("periodic axes have no boundary faces"),
    }
    Ok(())
}

/// The `count` smallest eigenvalues in ascending order.
pub fn eigen_spectrum(d: &DiscreteOperator, count: usize) -> Result<Vec<f64>, SpectralError> {
    let n = d.size();
    if count > n {
        return Err(SpectralError::Count { want: count, size: n });
    }
    let defect = d.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(SpectralError::NotHermitian(defect));
    }
    let mut ev = if d.is_real() {
        faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (d.entry(i, j).re + d.entry(j, i).re))
            .selfadjoint_eigenvalues(faer::Side::Lower)
    } else {
        // H = A + iB is embedded as the real symmetric [[A, −B], [B, A]],
        // whose spectrum is that of H with every eigenvalue doubled.
        let herm = |i: usize, j: usize| 0.5 * (d.entry(i, j) + d.entry(j, i).conj());
        let mut doubled = faer::Mat::<f64>::from_fn(2 * n, 2 * n, |i, j| {
            let z = herm(i % n, j % n);
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        })
        .selfadjoint_eigenvalues(faer::Side::Lower);
        doubled.sort_by(f64::total_cmp);
        doubled.into_iter().step_by(2).collect()
    };
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(SpectralError::NonConvergence);
    }
    ev.sort_by(f64::total_cmp);
    ev.truncate(count);
    Ok(ev)
}

fn random_vector(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Complex64> {
    (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn dot(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn norm(u: &[Complex64]) -> f64 {
    dot(u, u).re.sqrt()
}

/// `max |⟨Hψ,φ⟩ − ⟨ψ,Hφ⟩| / (‖ψ‖‖φ‖‖H‖)` over all ordered pairs of `trials`
/// seeded random vectors, pairs of a vector with itself included. Inner
/// products are weighted by `W`, which the symmetrized matrix absorbs.
pub fn adjoint_defect(d: &DiscreteOperator, trials: usize, seed: u64) -> f64 {
    let norm_h = d.norm_inf();
    if norm_h == 0.0 {
        return 0.0;
    }
    let mut rng = Domain::rng(seed);
    let vs: Vec<Vec<Complex64>> = (0..trials).map(|_| random_vector(d.size(), &mut rng)).collect();
    let hv: Vec<Vec<Complex64>> = vs.iter().map(|v| d.apply(v)).collect();
    let mut worst = 0.0f64;
    for a in 0..trials {
        for b in a..trials {
            let lhs = dot(&hv[a], &vs[b]);
            let rhs = dot(&vs[a], &hv[b]);
            worst = worst.max((lhs - rhs).norm() / (norm(&vs[a]) * norm(&vs[b]) * norm_h));
        }
    }
    worst
}

/// Eigenvalues with grid metadata and symmetry diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub grid: GridMeta,
    pub adjoint_defect: f64,
    pub hermitian_defect: f64,
    /// Eigenvalues of the comparison operator, when there is one.
    pub reference: Option<Vec<f64>>,
    /// Rank-paired differences `eigenvalues − reference`.
    pub deltas: Option<Vec<f64>>,
    pub expected_delta: Option<f64>,
    pub passed: Option<bool>,
}

/// Trials used for the adjoint defect in reports.
pub const DEFECT_TRIALS: usize = 4;

pub fn spectrum_report(d: &DiscreteOperator, count: usize, seed: u64) -> Result<SpectrumReport, SpectralError> {
    let eigenvalues = eigen_spectrum(d, count)?;
    Ok(SpectrumReport {
        eigenvalues,
        grid: d.grid().metadata(),
        adjoint_defect: adjoint_defect(d, DEFECT_TRIALS, seed),
        hermitian_defect: d.hermitian_defect(),
        reference: None,
        deltas: None,
        expected_delta: None,
        passed: None,
    })
}

/// Value of `r_g` if it is constant on the chart.
pub fn constant_curvature(chart: &MetricChart) -> Result<f64, SpectralError> {
    let r = chart.scalar_curvature();
    // Constant means independent of the coordinates; symbolic parameters take their bound values.
    for i in 0..chart.dim() {
        if !chart.same(&chart.d(r, i), &Expr::zero(), 0xc1 + i as u64) {
            return Err(SpectralError::NonConstantCurvature(r.to_string()));
        }
    }
    let mut rng = Domain::rng(0xc0);
    let mut point = chart.domain().sample(&mut rng);
    point.extend(chart.parameter_bindings());
    let v = r.eval(&point).map_err(|e| SpectralError::NonConstantCurvature(e.to_string()))?;
    if v.im.abs() > 1e-12 {
        return Err(SpectralError::NonConstantCurvature(r.to_string()));
    }
    Ok(v.re)
}

/// Eigenvalues of `Ĥ_{1/12}` and `Ĥ_0` on the same grid; passes iff every
/// rank-paired difference equals `ħ²r_g/12` within `1e−3·(1+|λ|)`.
pub fn shift_check(setup: &QuantizationSetup, grid: &Arc<Grid>, count: usize, seed: u64) -> Result<SpectrumReport, SpectralError> {
    let r = constant_curvature(&setup.chart)?;
    let expected = setup.hbar * setup.hbar * r / 12.0;
    let standard = discretize_energy(setup, Rational64::new(1, 12), grid)?;
    let modified = discretize_energy(setup, Rational64::new(0, 1), grid)?;
    let mut report = spectrum_report(&standard, count, seed)?;
    let reference = eigen_spectrum(&modified, count)?;
    let deltas: Vec<f64> = report.eigenvalues.iter().zip(&reference).map(|(a, b)| a - b).collect();
    let passed = deltas
        .iter()
        .zip(&report.eigenvalues)
        .all(|(d, l)| (d - expected).abs() <= 1e-3 * (1.0 + l.abs()));
    report.reference = Some(reference);
    report.deltas = Some(deltas);
    report.expected_delta = Some(expected);
    report.passed = Some(passed);
    Ok(report)
}
