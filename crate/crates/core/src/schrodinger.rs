//! The operator `H = L + q`, its quadratic form, the ground-state transform
//! and the pointwise product and square-root chain rules.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{GraphFunction, SharedGraph, Vertex};
use crate::numeric::{csum, CompensatedSum};

/// `H f(x) = Σ_y b(x,y)(f(x) - f(y)) + q(x) f(x)` on a shared graph.
#[derive(Clone)]
pub struct SchrodingerOperator {
    graph: SharedGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticFormValue {
    pub gradient_part: f64,
    pub potential_part: f64,
    pub total: f64,
}

/// Absolute residual of an identity together with the magnitude of the terms
/// that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub value: f64,
    pub scale: f64,
}

impl Residual {
    pub fn relative(&self) -> f64 {
        self.value / (1.0 + self.scale)
    }

    pub fn max(self, other: Residual) -> Residual {
        if other.relative() > self.relative() {
            other
        } else {
            self
        }
    }

    pub fn zero() -> Residual {
        Residual {
            value: 0.0,
            scale: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperharmonicReport {
    pub is_superharmonic: bool,
    pub is_positive: bool,
    /// Vertices with `Hu < -tol`.
    pub violations: Vec<Vertex>,
    /// Vertices with `|Hu| > tol`.
    pub harmonic_except: Vec<Vertex>,
}

/// Truncated evaluations of `h(f)` for a function without finite support.
#[derive(Debug, Clone, Serialize)]
pub struct PartialFormReport {
    pub radii: Vec<usize>,
    pub partial_sums: Vec<f64>,
    /// Partial sums exceed the cap and keep increasing.
    pub diverges: bool,
}

impl SchrodingerOperator {
    pub fn new(graph: SharedGraph) -> Self {
        SchrodingerOperator { graph }
    }

    pub fn graph(&self) -> &SharedGraph {
        &self.graph
    }

    pub fn potential(&self, x: &Vertex) -> f64 {
        self.graph.potential(x)
    }

    pub fn laplacian(&self, f: &GraphFunction, x: &Vertex) -> f64 {
        let fx = f.eval(x);
        csum(self.graph.neighbors(x).into_iter().map(|(y, b)| b * (fx - f.eval(&y))))
    }

    pub fn apply(&self, f: &GraphFunction, x: &Vertex) -> f64 {
        self.apply_with_scale(f, x).0
    }

    /// `Hf(x)` together with `Σ b(|f(x)| + |f(y)|) + |q f(x)|`, the natural
    /// size against which a vanishing `Hf(x)` is judged.
    pub fn apply_with_scale(&self, f: &GraphFunction, x: &Vertex) -> (f64, f64) {
        let fx = f.eval(x);
        let mut acc = CompensatedSum::new();
        let mut scale = 0.0;
        for (y, b) in self.graph.neighbors(x) {
            let fy = f.eval(&y);
            acc.add(b * (fx - fy));
            scale += b * (fx.abs() + fy.abs());
        }
        let qf = self.graph.potential(x) * fx;
        acc.add(qf);
        (acc.value(), scale + qf.abs())
    }

    /// Undirected edges meeting `support`, each once, in support order.
    fn edges_meeting(&self, support: &[Vertex]) -> Vec<(Vertex, Vertex, f64)> {
        let set: BTreeSet<&Vertex> = support.iter().collect();
        let mut out = Vec::new();
        for x in support {
            for (y, b) in self.graph.neighbors(x) {
                if !set.contains(&y) || x < &y {
                    out.push((x.clone(), y, b));
                }
            }
        }
        out
    }

    fn joint_support(&self, fs: &[&GraphFunction]) -> Result<Vec<Vertex>> {
        let mut all = BTreeSet::new();
        for f in fs {
            all.extend(f.support().ok_or(Error::InfiniteSupport)?);
        }
        Ok(all.into_iter().collect())
    }

    pub fn quadratic_form(&self, phi: &GraphFunction) -> Result<QuadraticFormValue> {
        let support = self.joint_support(&[phi])?;
        let gradient_part = csum(self.edges_meeting(&support).into_iter().map(|(x, y, b)| {
            let d = phi.eval(&x) - phi.eval(&y);
            b * d * d
        }));
        let potential_part = csum(support.iter().map(|x| {
            let p = phi.eval(x);
            self.graph.potential(x) * p * p
        }));
        Ok(QuadraticFormValue {
            gradient_part,
            potential_part,
            total: gradient_part + potential_part,
        })
    }

    /// `h(φ,ψ) = ½ Σ b ∇φ ∇ψ + Σ q φ ψ`.
    pub fn bilinear_form(&self, phi: &GraphFunction, psi: &GraphFunction) -> Result<f64> {
        let support = self.joint_support(&[phi, psi])?;
        let grad = self
            .edges_meeting(&support)
            .into_iter()
            .map(|(x, y, b)| b * (phi.eval(&x) - phi.eval(&y)) * (psi.eval(&x) - psi.eval(&y)));
        let pot = support
            .iter()
            .map(|x| self.graph.potential(x) * phi.eval(x) * psi.eval(x));
        Ok(csum(grad.chain(pot)))
    }

    /// `h_v(φ,ψ) = ½ Σ b v(x)v(y) ∇φ ∇ψ`.
    pub fn gst_form(&self, v: &GraphFunction, phi: &GraphFunction, psi: &GraphFunction) -> Result<f64> {
        let support = self.joint_support(&[phi, psi])?;
        let mut acc = CompensatedSum::new();
        for (x, y, b) in self.edges_meeting(&support) {
            let (vx, vy) = (positive_ground_state(v, &x)?, positive_ground_state(v, &y)?);
            acc.add(b * vx * vy * (phi.eval(&x) - phi.eval(&y)) * (psi.eval(&x) - psi.eval(&y)));
        }
        Ok(acc.value())
    }

    /// `|h(φ) - h_v(φ/v) - Σ f φ²|` with `f = Hv / v`.
    pub fn gst_identity_residual(&self, v: &GraphFunction, phi: &GraphFunction) -> Result<Residual> {
        let support = self.joint_support(&[phi])?;
        let mut ratio = std::collections::BTreeMap::new();
        for x in &support {
            ratio.insert(x.clone(), phi.eval(x) / positive_ground_state(v, x)?);
        }
        let ratio = GraphFunction::finite(ratio);
        let h = self.quadratic_form(phi)?.total;
        let hv = self.gst_form(v, &ratio, &ratio)?;
        let mut fterm = CompensatedSum::new();
        let mut scale = h.abs() + hv.abs();
        for x in &support {
            let f = self.apply(v, x) / v.eval(x);
            let p = phi.eval(x);
            fterm.add(f * p * p);
            scale += (f * p * p).abs();
        }
        let fterm = fterm.value();
        Ok(Residual {
            value: (h - hv - fterm).abs(),
            scale,
        })
    }

    /// Residual of `H(fg) = f Hg + g Lf - Σ b ∇f ∇g` at `x`.
    pub fn product_rule_residual(&self, f: &GraphFunction, g: &GraphFunction, x: &Vertex) -> Residual {
        let fg = f.zip(g, |a, b| a * b);
        let lhs = self.apply(&fg, x);
        let (fx, gx) = (f.eval(x), g.eval(x));
        let hg = self.apply(g, x);
        let lf = self.laplacian(f, x);
        let cross = csum(
            self.graph
                .neighbors(x)
                .into_iter()
                .map(|(y, b)| b * (fx - f.eval(&y)) * (gx - g.eval(&y))),
        );
        let rhs = fx * hg + gx * lf - cross;
        Residual {
            value: (lhs - rhs).abs(),
            scale: lhs.abs().max((fx * hg).abs()).max((gx * lf).abs()).max(cross.abs()),
        }
    }

    /// Residual of `2(fg)^½ H[(fg)^½] = f Hg + g Hf + Σ b [√g ∇√f - √f ∇√g]²` at `x`.
    pub fn chain_rule_residual(&self, f: &GraphFunction, g: &GraphFunction, x: &Vertex) -> Result<Residual> {
        let fx = positive_input(f, x)?;
        let gx = positive_input(g, x)?;
        let mut bracket = CompensatedSum::new();
        for (y, b) in self.graph.neighbors(x) {
            let (fy, gy) = (positive_input(f, &y)?, positive_input(g, &y)?);
            let t = gx.sqrt() * (fx.sqrt() - fy.sqrt()) - fx.sqrt() * (gx.sqrt() - gy.sqrt());
            bracket.add(b * t * t);
        }
        let bracket = bracket.value();
        let root = f.zip(g, |a, b| (a * b).sqrt());
        let lhs = 2.0 * (fx * gx).sqrt() * self.apply(&root, x);
        let (fhg, ghf) = (fx * self.apply(g, x), gx * self.apply(f, x));
        let rhs = fhg + ghf + bracket;
        Ok(Residual {
            value: (lhs - rhs).abs(),
            scale: lhs.abs().max(fhg.abs()).max(ghf.abs()).max(bracket),
        })
    }

    /// Classifies each vertex of `region` as superharmonic, harmonic or
    /// neither, with tolerance `tol` relative to the local scale of `Hu(x)`.
    pub fn superharmonic_report(&self, u: &GraphFunction, region: &[Vertex], tol: f64) -> SuperharmonicReport {
        let mut violations = Vec::new();
        let mut harmonic_except = Vec::new();
        let mut is_positive = true;
        for x in region {
            if !(u.eval(x) > 0.0) {
                is_positive = false;
            }
            let (hu, scale) = self.apply_with_scale(u, x);
            let t = tol * scale;
            if hu < -t {
                violations.push(x.clone());
            }
            if hu.abs() > t {
                harmonic_except.push(x.clone());
            }
        }
        SuperharmonicReport {
            is_superharmonic: violations.is_empty(),
            is_positive,
            violations,
            harmonic_except,
        }
    }

    /// `h(f)` restricted to edges and vertices inside `B_N`, for each radius.
    /// For `q ≥ 0` the sequence is nondecreasing and converges to the value of
    /// the extended form in `[0, ∞]`.
    pub fn partial_form(&self, f: &GraphFunction, radii: &[usize], cap: f64) -> PartialFormReport {
        let mut partial_sums = Vec::with_capacity(radii.len());
        for &n in radii {
            let ball = self.graph.ball(n);
            let inside: BTreeSet<&Vertex> = ball.iter().collect();
            let mut acc = CompensatedSum::new();
            for x in &ball {
                let fx = f.eval(x);
                acc.add(self.graph.potential(x) * fx * fx);
                for (y, b) in self.graph.neighbors(x) {
                    if x < &y && inside.contains(&y) {
                        let d = fx - f.eval(&y);
                        acc.add(b * d * d);
                    }
                }
            }
            partial_sums.push(acc.value());
        }
        let increasing = partial_sums.windows(2).all(|w| w[1] > w[0]);
        let diverges = increasing && partial_sums.last().is_some_and(|&s| s > cap);
        PartialFormReport {
            radii: radii.to_vec(),
            partial_sums,
            diverges,
        }
    }
}

fn positive_ground_state(v: &GraphFunction, x: &Vertex) -> Result<f64> {
    let value = v.eval(x);
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonpositiveGroundState {
            vertex: x.clone(),
            value,
        })
    }
}

fn positive_input(f: &GraphFunction, x: &Vertex) -> Result<f64> {
    let value = f.eval(x);
    if value > 0.0 {
        Ok(value)
    } else {
        Err(Error::NonpositiveInput {
            vertex: x.clone(),
            value,
        })
    }
}
