//! Level-set flux `g(t) = Σ_{u(y)<t≤u(x)} b(x,y)(u(x)-u(y))`, the Stokes
//! formula and the coarea identity on finite regions.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphFunction, Vertex};
use crate::numeric::CompensatedSum;
use crate::quadrature::adaptive_gauss;
use crate::schrodinger::Residual;

/// One undirected edge with `u(lo_end) < u(hi_end)`.
#[derive(Debug, Clone, Serialize)]
pub struct FluxEdge {
    pub low: f64,
    pub high: f64,
    pub weight: f64,
}

/// Piecewise-constant `g` on the half-open intervals `(v_i, v_{i+1}]`.
#[derive(Debug, Clone, Serialize)]
pub struct LevelFlux {
    pub breakpoints: Vec<f64>,
    /// `values[i]` is `g` on `(breakpoints[i], breakpoints[i+1]]`.
    pub values: Vec<f64>,
    pub edges: Vec<FluxEdge>,
}

impl LevelFlux {
    pub fn eval(&self, t: f64) -> f64 {
        let bp = &self.breakpoints;
        if bp.len() < 2 || t <= bp[0] || t > bp[bp.len() - 1] {
            return 0.0;
        }
        // first index with bp[i] >= t; the interval is (bp[i-1], bp[i]]
        let i = bp.partition_point(|&v| v < t);
        self.values[i - 1]
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &g)| (w[0], w[1], g))
    }

    pub fn bounds(&self) -> (f64, f64) {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Undirected edges with at least one endpoint in `region`, each once.
fn incident_edges<G: Graph + ?Sized>(graph: &G, u: &GraphFunction, region: &[Vertex]) -> Vec<FluxEdge> {
    let inside: HashSet<&Vertex> = region.iter().collect();
    let mut out = Vec::new();
    for x in region {
        let ux = u.eval(x);
        for (y, b) in graph.neighbors(x) {
            if inside.contains(&y) && &y < x {
                continue;
            }
            let uy = u.eval(&y);
            if ux != uy {
                out.push(FluxEdge {
                    low: ux.min(uy),
                    high: ux.max(uy),
                    weight: b,
                });
            }
        }
    }
    out
}

/// Flux through the level sets of `u` across edges meeting `region`.
pub fn level_flux<G: Graph + ?Sized>(graph: &G, u: &GraphFunction, region: &[Vertex]) -> Result<LevelFlux> {
    let mut values_on_region: Vec<f64> = region.iter().map(|x| u.eval(x)).collect();
    values_on_region.sort_by(f64::total_cmp);
    values_on_region.dedup();
    if values_on_region.len() < 2 {
        return Err(Error::ConstantFunction);
    }
    let edges = incident_edges(graph, u, region);
    let mut breakpoints: Vec<f64> = edges.iter().flat_map(|e| [e.low, e.high]).collect();
    breakpoints.extend(values_on_region);
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();

    let mut events: Vec<(f64, f64)> = edges
        .iter()
        .flat_map(|e| {
            let c = e.weight * (e.high - e.low);
            [(e.low, c), (e.high, -c)]
        })
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut values = Vec::with_capacity(breakpoints.len().saturating_sub(1));
    let mut running = CompensatedSum::new();
    let mut k = 0;
    for &v in &breakpoints[..breakpoints.len() - 1] {
        while k < events.len() && events[k].0 <= v {
            running.add(events[k].1);
            k += 1;
        }
        values.push(running.value());
    }
    Ok(LevelFlux {
        breakpoints,
        values,
        edges,
    })
}

/// `g(t)` summed directly over the edges meeting `region`.
pub fn flux_at<G: Graph + ?Sized>(graph: &G, u: &GraphFunction, region: &[Vertex], t: f64) -> f64 {
    incident_edges(graph, u, region)
        .iter()
        .filter(|e| e.low < t && t <= e.high)
        .map(|e| e.weight * (e.high - e.low))
        .collect::<CompensatedSum>()
        .value()
}

/// `g(t⁺) = Σ_{u(y)≤t<u(x)} b(x,y)(u(x)-u(y))`, the right limit of `g`. It
/// differs from `g(t)` only when `t` is a value of `u`.
pub fn flux_right_limit<G: Graph + ?Sized>(graph: &G, u: &GraphFunction, region: &[Vertex], t: f64) -> f64 {
    incident_edges(graph, u, region)
        .iter()
        .filter(|e| e.low <= t && t < e.high)
        .map(|e| e.weight * (e.high - e.low))
        .collect::<CompensatedSum>()
        .value()
}

/// `|g(t₂) - g(t₁) + Σ_{x∈A} Lu(x)|` with `A = {t₁ < u ≤ t₂} ∩ region`.
///
/// The flux is taken as the right limit `g(t⁺)`, which makes the formula
/// exact also when `t₁` or `t₂` is a value of `u`.
pub fn stokes_residual<G: Graph + ?Sized>(
    graph: &G,
    u: &GraphFunction,
    t1: f64,
    t2: f64,
    region: &[Vertex],
) -> Result<Residual> {
    if t1 > t2 {
        return Err(Error::Domain(format!("need t1 <= t2, got {t1} > {t2}")));
    }
    let inside: HashSet<&Vertex> = region.iter().collect();
    let mut lap = CompensatedSum::new();
    let mut scale = 0.0;
    for x in region {
        let ux = u.eval(x);
        if !(t1 < ux && ux <= t2) {
            continue;
        }
        for (y, b) in graph.neighbors(x) {
            if !inside.contains(&y) {
                return Err(Error::LevelSetTouchesBoundary(x.clone()));
            }
            let term = b * (ux - u.eval(&y));
            lap.add(term);
            scale += term.abs();
        }
    }
    let g1 = flux_right_limit(graph, u, region, t1);
    let g2 = flux_right_limit(graph, u, region, t2);
    let value = (g2 - g1 + lap.value()).abs();
    Ok(Residual {
        value,
        scale: scale + g1.abs() + g2.abs(),
    })
}

/// A nonnegative integrand on the level axis, optionally with a closed-form
/// integral.
pub trait Integrand: Sync {
    fn value(&self, t: f64) -> f64;

    fn integral(&self, a: f64, b: f64) -> f64 {
        adaptive_gauss(&|t| self.value(t), a, b, 1e-13)
    }

    fn name(&self) -> String {
        "custom".into()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl Integrand for Constant {
    fn value(&self, _t: f64) -> f64 {
        self.0
    }
    fn integral(&self, a: f64, b: f64) -> f64 {
        self.0 * (b - a)
    }
    fn name(&self) -> String {
        format!("constant({})", self.0)
    }
}

/// `1/t` on `t > 0`.
#[derive(Debug, Clone, Copy)]
pub struct InverseT;

impl Integrand for InverseT {
    fn value(&self, t: f64) -> f64 {
        1.0 / t
    }
    fn integral(&self, a: f64, b: f64) -> f64 {
        (b / a).ln()
    }
    fn name(&self) -> String {
        "inverse-t".into()
    }
}

/// `t^α` on `t > 0`.
#[derive(Debug, Clone, Copy)]
pub struct Power(pub f64);

impl Integrand for Power {
    fn value(&self, t: f64) -> f64 {
        t.powf(self.0)
    }
    fn integral(&self, a: f64, b: f64) -> f64 {
        let p = self.0 + 1.0;
        if p == 0.0 {
            (b / a).ln()
        } else {
            (b.powf(p) - a.powf(p)) / p
        }
    }
    fn name(&self) -> String {
        format!("power({})", self.0)
    }
}

/// `ln t` on `t ≥ 1`.
#[derive(Debug, Clone, Copy)]
pub struct Log;

impl Integrand for Log {
    fn value(&self, t: f64) -> f64 {
        t.ln()
    }
    fn integral(&self, a: f64, b: f64) -> f64 {
        let anti = |t: f64| t * t.ln() - t;
        anti(b) - anti(a)
    }
    fn name(&self) -> String {
        "log".into()
    }
}

/// `t·φₙ'(t)²` for the logarithmic cutoff `φₙ`: `1/(t log²n)` on
/// `[1/n², 1/n] ∪ [n, n²]`, zero elsewhere.
#[derive(Debug, Clone, Copy)]
pub struct NullSequenceCutoff(pub f64);

impl NullSequenceCutoff {
    fn ramps(&self) -> [(f64, f64); 2] {
        let n = self.0;
        [(1.0 / (n * n), 1.0 / n), (n, n * n)]
    }
}

impl Integrand for NullSequenceCutoff {
    fn value(&self, t: f64) -> f64 {
        let l = self.0.ln();
        if self.ramps().iter().any(|&(a, b)| a <= t && t <= b) {
            1.0 / (t * l * l)
        } else {
            0.0
        }
    }
    fn integral(&self, a: f64, b: f64) -> f64 {
        let l = self.0.ln();
        self.ramps()
            .iter()
            .map(|&(lo, hi)| {
                let (s, e) = (a.max(lo), b.min(hi));
                if s < e {
                    (e / s).ln() / (l * l)
                } else {
                    0.0
                }
            })
            .sum()
    }
    fn name(&self) -> String {
        format!("null-sequence-cutoff({})", self.0)
    }
}

/// Adapter for closures, integrated adaptively.
pub struct FnIntegrand<F: Fn(f64) -> f64 + Sync>(pub F);

impl<F: Fn(f64) -> f64 + Sync> Integrand for FnIntegrand<F> {
    fn value(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CoareaResult {
    /// `½ Σ b(x,y)(u(x)-u(y)) ∫_{u(y)}^{u(x)} f`.
    pub lhs: f64,
    /// `∫ f g`.
    pub rhs: f64,
    pub residual: Residual,
}

/// Both sides of the coarea identity over the edges meeting `region`.
pub fn coarea_integral<G: Graph + ?Sized>(
    graph: &G,
    u: &GraphFunction,
    f: &dyn Integrand,
    region: &[Vertex],
) -> Result<CoareaResult> {
    let flux = level_flux(graph, u, region)?;
    let bp = &flux.breakpoints;
    for w in bp.windows(2) {
        for t in [w[0], 0.5 * (w[0] + w[1]), w[1]] {
            let value = f.value(t);
            if value < 0.0 || value.is_nan() {
                return Err(Error::NegativeF { t, value });
            }
        }
    }
    let mut lhs = CompensatedSum::new();
    for e in &flux.edges {
        lhs.add(e.weight * (e.high - e.low) * f.integral(e.low, e.high));
    }
    let mut rhs = CompensatedSum::new();
    for (a, b, g) in flux.intervals() {
        if g != 0.0 {
            rhs.add(g * f.integral(a, b));
        }
    }
    let (lhs, rhs) = (lhs.value(), rhs.value());
    Ok(CoareaResult {
        lhs,
        rhs,
        residual: Residual {
            value: (lhs - rhs).abs(),
            scale: lhs.abs().max(rhs.abs()),
        },
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graph::{halfline_dirichlet, materialize, HalfLine};
    use crate::schrodinger::SchrodingerOperator;

    fn region(lo: i64, hi: i64) -> Vec<Vertex> {
        (lo..=hi).map(Vertex::id).collect()
    }

    #[test]
    fn halfline_flux_is_one() {
        let u = GraphFunction::from_fn(|x| x.head() as f64);
        let flux = level_flux(&HalfLine, &u, &region(1, 100)).unwrap();
        for (a, b, g) in flux.intervals() {
            assert_eq!(g, 1.0, "on ({a}, {b}]");
        }
        assert_eq!(flux.eval(0.5), 1.0);
        assert_eq!(flux.eval(99.9), 1.0);
        assert_eq!(flux.eval(-1.0), 0.0);
        assert_eq!(flux.bounds(), (1.0, 1.0));
    }

    #[test]
    fn constant_rejected() {
        let u = GraphFunction::constant(2.0);
        assert!(matches!(level_flux(&HalfLine, &u, &region(1, 10)), Err(Error::ConstantFunction)));
    }

    #[test]
    fn half_open_convention() {
        let u = GraphFunction::from_fn(|x| x.head() as f64);
        let g = materialize(&HalfLine, 2).unwrap();
        let flux = level_flux(&g, &u, &region(0, 2)).unwrap();
        assert_eq!(flux.eval(0.0), 0.0);
        assert_eq!(flux.eval(1.0), 1.0);
        assert_eq!(flux.eval(2.0), 1.0);
        assert_eq!(flux.eval(2.0 + 1e-12), 0.0);
    }

    #[test]
    fn stokes_across_green_pole() {
        let graph = halfline_dirichlet();
        let u = GraphFunction::from_fn(|x| x.head().min(5) as f64);
        let reg = region(1, 20);
        let g1 = flux_at(&graph, &u, &reg, 2.5);
        let g2 = flux_at(&graph, &u, &reg, 7.0);
        // no edge crosses level 7: u ≤ 5
        assert_eq!(g1, 1.0);
        assert_eq!(g2, 0.0);
        let op = SchrodingerOperator::new(Arc::new(halfline_dirichlet()));
        assert_eq!(op.laplacian(&u, &Vertex::id(5)), 1.0);
        // A = {3, 4, 5, 6, ...}: u = 5 on every n ≥ 5, so the level set reaches
        // the truncation edge
        assert!(matches!(
            stokes_residual(&graph, &u, 2.5, 7.0, &reg),
            Err(Error::LevelSetTouchesBoundary(_))
        ));
        let r = stokes_residual(&graph, &u, 2.5, 4.5, &reg).unwrap();
        assert!(r.relative() < 1e-15);
    }

    #[test]
    fn stokes_on_harmonic() {
        let u = GraphFunction::from_fn(|x| x.head() as f64);
        let r = stokes_residual(&HalfLine, &u, 3.5, 40.5, &region(1, 100)).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn coarea_closed_forms() {
        let u = GraphFunction::from_fn(|x| x.head() as f64);
        let reg = region(1, 50);
        let c = coarea_integral(&HalfLine, &u, &Constant(1.0), &reg).unwrap();
        // edges (0,1) .. (50,51)
        assert!((c.lhs - 51.0).abs() < 1e-12 && (c.rhs - 51.0).abs() < 1e-12);
        let reg2 = region(2, 50);
        let inv = coarea_integral(&HalfLine, &u, &InverseT, &reg2).unwrap();
        assert!((inv.lhs - 51f64.ln()).abs() < 1e-12);
        assert!(inv.residual.relative() < 1e-14);
        let adaptive = coarea_integral(&HalfLine, &u, &FnIntegrand(|t: f64| 1.0 / t), &reg2).unwrap();
        assert!((adaptive.lhs - inv.lhs).abs() < 1e-10);
        let neg = coarea_integral(&HalfLine, &u, &Log, &reg);
        assert!(matches!(neg, Err(Error::NegativeF { .. })));
        let cut = coarea_integral(&HalfLine, &u, &NullSequenceCutoff(4.0), &reg2).unwrap();
        // ∫_4^16 dt / (t log² 4) = 1 / log 4
        assert!((cut.lhs - 1.0 / 4f64.ln()).abs() < 1e-14);
    }
}
