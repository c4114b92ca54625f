//! Positive minimal Green functions: Dirichlet solves on balls, the half-line
//! closed form and a Fourier quadrature for `ℤ^d`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{boundary_layer, GraphFunction, Restricted, SharedGraph, Vertex};
use crate::linalg::{assemble_form, solve, LinearSolveSpec, Region, SolverKind};
use crate::numeric::CompensatedSum;
use crate::quadrature::composite_gauss;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GreenMethod {
    DirichletExhaustion,
    ClosedForm,
    FourierLattice,
}

/// `Laplacian` solves `L G = δ`; `RandomWalk` is `deg · G_L`, the sum of
/// transition probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    #[default]
    Laplacian,
    RandomWalk,
}

#[derive(Debug, Clone, Serialize)]
pub struct Convergence {
    pub radius: usize,
    /// Max relative change on `B_{N/2}` between the last two radii.
    pub relative_change: Option<f64>,
    pub converged: bool,
    /// Values did not decrease between consecutive radii (up to tolerance).
    pub monotone: bool,
}

#[derive(Clone, Debug)]
pub struct GreenFunction {
    pub pole: Vertex,
    pub values: GraphFunction,
    pub method: GreenMethod,
    pub convergence: Convergence,
    /// Solve region, BFS order.
    pub region: Vec<Vertex>,
    /// Region vertices adjacent to the frozen exterior.
    pub boundary_shell: Vec<Vertex>,
    /// `max |H G - δ_pole|` over the region.
    pub residual: f64,
    pub solver: Option<SolverKind>,
    /// Properness of `G` is assumed, not verified.
    pub assumes_proper: bool,
}

impl GreenFunction {
    pub fn value(&self, x: &Vertex) -> f64 {
        self.values.eval(x)
    }
}

fn with_dirichlet(graph: &SharedGraph, dirichlet: &[Vertex]) -> Result<SharedGraph> {
    if dirichlet.is_empty() {
        Ok(graph.clone())
    } else {
        Ok(Arc::new(Restricted::new(graph.clone(), dirichlet.iter().cloned())?))
    }
}

/// Solves `H G = δ_pole` on `B_radius \ K` with zero values on `K` and
/// outside the ball.
pub fn green_dirichlet(
    graph: &SharedGraph,
    pole: &Vertex,
    radius: usize,
    dirichlet: &[Vertex],
    spec: &LinearSolveSpec,
) -> Result<GreenFunction> {
    let g = with_dirichlet(graph, dirichlet)?;
    let region = Region::new(g.ball(radius));
    let p = region
        .index_of(pole)
        .ok_or_else(|| Error::Domain(format!("pole {pole} is outside the ball of radius {radius}")))?;
    let a = assemble_form(g.as_ref(), &region);
    let mut rhs = vec![0.0; region.len()];
    rhs[p] = 1.0;
    let out = solve(&a, &rhs, spec)?;

    let mut ax = vec![0.0; region.len()];
    a.matvec(&out.x, &mut ax);
    let residual = ax.iter().zip(&rhs).map(|(l, r)| (l - r).abs()).fold(0.0, f64::max);

    let values: BTreeMap<Vertex, f64> = region.vertices.iter().cloned().zip(out.x.iter().copied()).collect();
    Ok(GreenFunction {
        pole: pole.clone(),
        values: GraphFunction::finite(values),
        method: GreenMethod::DirichletExhaustion,
        convergence: Convergence {
            radius,
            relative_change: None,
            converged: false,
            monotone: true,
        },
        boundary_shell: boundary_layer(g.as_ref(), &region.vertices),
        region: region.vertices,
        residual,
        solver: Some(out.method),
        assumes_proper: true,
    })
}

/// Doubles the radius from `start` until the values on `B_{N/2}` change by
/// less than `stop_tol` relative, or `max_radius` is reached.
pub fn green_exhaustion(
    graph: &SharedGraph,
    pole: &Vertex,
    dirichlet: &[Vertex],
    start: usize,
    max_radius: usize,
    stop_tol: f64,
    spec: &LinearSolveSpec,
) -> Result<GreenFunction> {
    let mut radius = start.max(1);
    let mut current = green_dirichlet(graph, pole, radius, dirichlet, spec)?;
    let mut monotone = true;
    loop {
        if radius * 2 > max_radius {
            current.convergence.monotone = monotone;
            return Ok(current);
        }
        let next = green_dirichlet(graph, pole, radius * 2, dirichlet, spec)?;
        let mut change: f64 = 0.0;
        for x in &current.region {
            let (old, new) = (current.value(x), next.value(x));
            if new < old - 10.0 * spec.tolerance * old.abs().max(1.0) {
                monotone = false;
            }
            if new != 0.0 {
                change = change.max(((new - old) / new).abs());
            }
        }
        radius *= 2;
        current = next;
        current.convergence.relative_change = Some(change);
        current.convergence.monotone = monotone;
        if change < stop_tol {
            current.convergence.converged = true;
            return Ok(current);
        }
    }
}

/// `min(n, o)`: Green function of the half-line with Dirichlet condition at 0.
pub fn green_halfline(pole: u64) -> GreenFunction {
    let o = pole as i64;
    GreenFunction {
        pole: Vertex::id(o),
        values: GraphFunction::from_fn(move |x| x.head().clamp(0, o) as f64),
        method: GreenMethod::ClosedForm,
        convergence: Convergence {
            radius: usize::MAX,
            relative_change: Some(0.0),
            converged: true,
            monotone: true,
        },
        region: Vec::new(),
        boundary_shell: Vec::new(),
        residual: 0.0,
        solver: None,
        assumes_proper: false,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Midpoint nodes per axis over a full period.
    pub nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { nodes: 128 }
    }
}

/// `ψ(1-t) / (ψ(1-t) + ψ(t))` with `ψ(s) = e^{-1/s}`, `t = r/π`: equal to 1
/// near the origin, 0 from `r = π` on, and infinitely smooth.
fn cutoff(r: f64) -> f64 {
    let t = r / PI;
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / (1.0 - t)).exp();
    let b = (-1.0 / t).exp();
    a / (a + b)
}

fn sphere_area(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * sphere_area(m - 2),
    }
}

fn pochhammer(x: f64, n: u32) -> f64 {
    (0..n).map(|k| x + k as f64).product()
}

/// Degree-4 Gegenbauer polynomial for `S^{d-1}`, normalized to 1 at `t = 1`.
fn zonal4(d: usize, t: f64) -> f64 {
    let lam = (d as f64 - 2.0) / 2.0;
    let c = |t: f64| {
        pochhammer(lam, 4) * 16.0 / 24.0 * t.powi(4) - 2.0 * pochhammer(lam, 3) * t * t + pochhammer(lam, 2) / 2.0
    };
    c(t) / c(1.0)
}

/// `|S^{d-2}| ∫_{-1}^{1} cos(st) p(t) (1-t²)^{(d-3)/2} dt`.
fn funk_hecke(d: usize, s: f64, p: &dyn Fn(f64) -> f64) -> f64 {
    let area = sphere_area(d - 2);
    let integral = if d % 2 == 1 {
        let e = (d as i32 - 3) / 2;
        let panels = (s / 4.0).ceil() as usize + 8;
        composite_gauss(|t| (s * t).cos() * p(t) * (1.0 - t * t).powi(e), -1.0, 1.0, panels)
    } else {
        // t = cos φ; the periodic integrand makes the midpoint rule spectral
        let m = 2 * s.ceil() as usize + 64;
        let h = PI / m as f64;
        let mut acc = CompensatedSum::new();
        for k in 0..m {
            let phi = (k as f64 + 0.5) * h;
            let t = phi.cos();
            acc.add((s * t).cos() * p(t) * phi.sin().powi(d as i32 - 2));
        }
        acc.value() * h
    };
    area * integral
}

/// Integral over `ℝ^d` of `cos(x·θ) χ(|θ|) [1/|θ|² + Σθ_j⁴ / (12|θ|⁴)]`, in
/// polar coordinates.
fn add_back(d: usize, x: &[i64]) -> f64 {
    let r2: f64 = x.iter().map(|&c| (c as f64).powi(2)).sum();
    let rx = r2.sqrt();
    let panels = rx.ceil() as usize + 16;
    let df = d as f64;
    let one = |_: f64| 1.0;
    let radial = composite_gauss(
        |r| {
            let chi = cutoff(r);
            if chi == 0.0 {
                return 0.0;
            }
            chi * (r.powi(d as i32 - 3) + r.powi(d as i32 - 1) / (4.0 * (df + 2.0))) * funk_hecke(d, r * rx, &one)
        },
        0.0,
        PI,
        panels,
    );
    if rx == 0.0 {
        return radial;
    }
    let y4 = x.iter().map(|&c| (c as f64 / rx).powi(4)).sum::<f64>() - 3.0 / (df + 2.0);
    if y4 == 0.0 {
        return radial;
    }
    let z = |t: f64| zonal4(d, t);
    let harmonic = composite_gauss(
        |r| {
            let chi = cutoff(r);
            if chi == 0.0 {
                return 0.0;
            }
            chi * r.powi(d as i32 - 1) * funk_hecke(d, r * rx, &z)
        },
        0.0,
        PI,
        panels,
    );
    radial + harmonic * y4 / 12.0
}

/// Lattice Green function `G_L(x) = (2π)^{-d} ∫ cos(x·θ) / (2d - 2Σcos θ_j) dθ`
/// of the graph Laplacian on `ℤ^d`, `d ≥ 3`.
///
/// The symbol is replaced by its remainder after subtracting the first two
/// terms of its expansion at `θ = 0` (cut off smoothly at `|θ| = π`); the
/// remainder is integrated by the midpoint rule and the subtracted part is
/// added back as one-dimensional radial integrals.
pub fn green_fourier_lattice(d: usize, x: &[i64], spec: &QuadratureSpec) -> Result<f64> {
    if d < 3 {
        return Err(Error::Domain(format!(
            "the lattice Green function needs d >= 3 (got {d})"
        )));
    }
    if x.len() != d {
        return Err(Error::Domain(format!("point has {} coordinates, expected {d}", x.len())));
    }
    if spec.nodes < 64 || spec.nodes % 2 == 1 {
        return Err(Error::Domain(format!(
            "quadrature needs an even node count >= 64 (got {})",
            spec.nodes
        )));
    }
    let m = spec.nodes / 2;
    let h = 2.0 * PI / spec.nodes as f64;
    let theta: Vec<f64> = (0..m).map(|k| (k as f64 + 0.5) * h).collect();
    let symbol: Vec<f64> = theta.iter().map(|t| 4.0 * (t / 2.0).sin().powi(2)).collect();
    let sq: Vec<f64> = theta.iter().map(|t| t * t).collect();
    let cosines: Vec<Vec<f64>> = x
        .iter()
        .map(|&c| theta.iter().map(|t| (c as f64 * t).cos()).collect())
        .collect();

    let slab = |i0: usize| -> f64 {
        let mut acc = CompensatedSum::new();
        let mut idx = vec![0usize; d];
        idx[0] = i0;
        loop {
            let mut s = 0.0;
            let mut r2 = 0.0;
            let mut q4 = 0.0;
            let mut c = 1.0;
            for (axis, &k) in idx.iter().enumerate() {
                s += symbol[k];
                r2 += sq[k];
                q4 += sq[k] * sq[k];
                c *= cosines[axis][k];
            }
            let chi = cutoff(r2.sqrt());
            let approx = if chi == 0.0 { 0.0 } else { chi * (1.0 / r2 + q4 / (12.0 * r2 * r2)) };
            acc.add(c * (1.0 / s - approx));
            // odometer over axes 1..d
            let mut axis = d - 1;
            loop {
                if axis == 0 {
                    return acc.value();
                }
                idx[axis] += 1;
                if idx[axis] < m {
                    break;
                }
                idx[axis] = 0;
                axis -= 1;
            }
        }
    };
    let slabs: Vec<f64> = (0..m).into_par_iter().map(slab).collect();
    let grid = slabs.into_iter().collect::<CompensatedSum>().value();
    let cube = 2f64.powi(d as i32) * h.powi(d as i32) * grid;
    Ok((cube + add_back(d, x)) / (2.0 * PI).powi(d as i32))
}

/// Memoizes `G_L` on `ℤ^d` up to the hyperoctahedral symmetry.
pub struct LatticeGreen {
    dim: usize,
    spec: QuadratureSpec,
    cache: HashMap<Vec<i64>, f64>,
}

impl LatticeGreen {
    pub fn new(dim: usize, spec: QuadratureSpec) -> Result<Self> {
        if dim < 3 {
            return Err(Error::UnsupportedFamily(format!(
                "lattice of dimension {dim} is recurrent"
            )));
        }
        Ok(LatticeGreen {
            dim,
            spec,
            cache: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&mut self, x: &[i64], normalization: Normalization) -> Result<f64> {
        let mut key: Vec<i64> = x.iter().map(|c| c.abs()).collect();
        key.sort_unstable();
        let g = match self.cache.get(&key) {
            Some(&g) => g,
            None => {
                let g = green_fourier_lattice(self.dim, &key, &self.spec)?;
                self.cache.insert(key, g);
                g
            }
        };
        Ok(match normalization {
            Normalization::Laplacian => g,
            Normalization::RandomWalk => 2.0 * self.dim as f64 * g,
        })
    }

    /// `w(x) = 2d - Σ_{y∼x} √(G(y)/G(x))`, the weight of the pair `u ≡ 1`, `v = G`.
    pub fn weight(&mut self, x: &[i64]) -> Result<f64> {
        let gx = self.value(x, Normalization::Laplacian)?;
        let mut acc = CompensatedSum::new();
        acc.add(2.0 * self.dim as f64);
        for axis in 0..self.dim {
            for delta in [-1, 1] {
                let mut y = x.to_vec();
                y[axis] += delta;
                acc.add(-(self.value(&y, Normalization::Laplacian)? / gx).sqrt());
            }
        }
        Ok(acc.value())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticRow {
    pub k: i64,
    pub norm: f64,
    pub w: f64,
    /// `w(x)·|x|²`.
    pub scaled: f64,
    /// `(d-2)²/4`.
    pub limit: f64,
}

/// Tabulates `w(k·direction)·|k·direction|²` against its limit `(d-2)²/4`.
pub fn green_asymptotic_check(d: usize, direction: &[i64], ks: &[i64], spec: &QuadratureSpec) -> Result<Vec<AsymptoticRow>> {
    if direction.len() != d || direction.iter().all(|&c| c == 0) {
        return Err(Error::Domain("direction must be a nonzero lattice vector of length d".into()));
    }
    let mut green = LatticeGreen::new(d, spec.clone()).map_err(|_| {
        Error::Domain(format!("the lattice Green function needs d >= 3 (got {d})"))
    })?;
    let limit = (d as f64 - 2.0).powi(2) / 4.0;
    ks.iter()
        .map(|&k| {
            let x: Vec<i64> = direction.iter().map(|c| c * k).collect();
            let norm = x.iter().map(|&c| (c as f64).powi(2)).sum::<f64>().sqrt();
            let w = green.weight(&x)?;
            Ok(AsymptoticRow {
                k,
                norm,
                w,
                scaled: w * norm * norm,
                limit,
            })
        })
        .collect()
}
