//! Hardy weights from pairs of positive supersolutions.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{boundary_layer, GraphFunction, Vertex};
use crate::numeric::CompensatedSum;
use crate::schrodinger::SchrodingerOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    UnboundedQuotient,
    BoundedQuotient,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::UnboundedQuotient => "unbounded-quotient",
            Variant::BoundedQuotient => "bounded-quotient",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ConstructOptions {
    /// Radius of the ball on which positivity and superharmonicity are checked.
    pub verify_radius: usize,
    /// Relative tolerance for deciding `Hu(x) = 0`.
    pub harmonic_tol: f64,
    /// Accept inputs that fail the superharmonicity check.
    pub allow_non_superharmonic: bool,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            verify_radius: 50,
            harmonic_tol: 1e-10,
            allow_non_superharmonic: false,
        }
    }
}

/// Both evaluations of the weight at one vertex.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightEval {
    pub vertex: Vertex,
    /// The value used: `w_edge` at harmonic vertices, `w_operator` elsewhere.
    pub w: f64,
    pub w_operator: f64,
    pub w_edge: f64,
    pub hu: f64,
    pub hv: f64,
    pub harmonic: bool,
}

/// `w = H[(uv)^½] / (uv)^½` with its provenance.
#[derive(Clone)]
pub struct HardyWeight {
    op: SchrodingerOperator,
    u: GraphFunction,
    v: GraphFunction,
    variant: Variant,
    exceptional_set: Vec<Vertex>,
    exceptional_on_boundary: bool,
    inverted: bool,
    harmonic_tol: f64,
}

impl fmt::Debug for HardyWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HardyWeight")
            .field("graph", &self.op.graph().metadata().name)
            .field("variant", &self.variant)
            .field("exceptional_set", &self.exceptional_set)
            .field("inverted", &self.inverted)
            .finish()
    }
}

impl HardyWeight {
    pub fn operator(&self) -> &SchrodingerOperator {
        &self.op
    }

    pub fn u(&self) -> &GraphFunction {
        &self.u
    }

    pub fn v(&self) -> &GraphFunction {
        &self.v
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Non-harmonic vertices of `u` or `v` found in the verification ball.
    pub fn exceptional_set(&self) -> &[Vertex] {
        &self.exceptional_set
    }

    /// Some non-harmonic vertex lies on the boundary layer of the
    /// verification ball, so the exceptional set may extend beyond it.
    pub fn exceptional_on_boundary(&self) -> bool {
        self.exceptional_on_boundary
    }

    /// `u` and `v` were swapped so that `u₀ = u/v` is unbounded above.
    pub fn inverted(&self) -> bool {
        self.inverted
    }

    /// The quotient `u₀ = u / v`.
    pub fn u0(&self) -> GraphFunction {
        self.u.zip(&self.v, |a, b| a / b)
    }

    /// The ground state `(uv)^½` of `H - w`.
    pub fn ground_state(&self) -> GraphFunction {
        self.u.zip(&self.v, |a, b| (a * b).sqrt())
    }

    pub fn value(&self, x: &Vertex) -> f64 {
        self.eval(x).w
    }

    pub fn eval(&self, x: &Vertex) -> WeightEval {
        let (hu, su) = self.op.apply_with_scale(&self.u, x);
        let (hv, sv) = self.op.apply_with_scale(&self.v, x);
        let harmonic = hu.abs() <= self.harmonic_tol * su && hv.abs() <= self.harmonic_tol * sv;
        let (ux, vx) = (self.u.eval(x), self.v.eval(x));

        let mut edge = CompensatedSum::new();
        let mut quotient = CompensatedSum::new();
        for (y, b) in self.op.graph().neighbors(x) {
            let (uy, vy) = (self.u.eval(&y), self.v.eval(&y));
            // √(u(y)/u(x)) - √(v(y)/v(x)) without cancellation
            let (ru, rv) = (uy / ux, vy / vx);
            let diff = (uy * vx - ux * vy) / (ux * vx) / (ru.sqrt() + rv.sqrt());
            edge.add(0.5 * b * diff * diff);
            // 1 - √(u(y)v(y)/u(x)v(x)), rationalized
            let r = (uy * vy) / (ux * vx);
            quotient.add(b * (ux * vx - uy * vy) / (ux * vx) / (1.0 + r.sqrt()));
        }
        quotient.add(self.op.potential(x));
        let w_edge = edge.value();
        let w_operator = quotient.value();
        WeightEval {
            vertex: x.clone(),
            w: if harmonic { w_edge } else { w_operator },
            w_operator,
            w_edge,
            hu,
            hv,
            harmonic,
        }
    }

    /// The weight as a standalone function (scaled by `c`).
    pub fn as_function(&self, c: f64) -> GraphFunction {
        let me = self.clone();
        GraphFunction::from_fn(move |x| c * me.value(x))
    }
}

/// Main construction: `w = H[(uv)^½] / (uv)^½` for positive `H`-superharmonic
/// `u`, `v`, checked on the ball of `opts.verify_radius`.
pub fn construct_weight(
    op: &SchrodingerOperator,
    u: &GraphFunction,
    v: &GraphFunction,
    opts: &ConstructOptions,
) -> Result<HardyWeight> {
    build(op, u.clone(), v.clone(), Variant::UnboundedQuotient, opts)
}

/// Bounded-quotient variant: the construction applied to the pair `(u, v - u)`.
pub fn construct_weight_bounded(
    op: &SchrodingerOperator,
    u: &GraphFunction,
    v: &GraphFunction,
    opts: &ConstructOptions,
) -> Result<HardyWeight> {
    let diff = v.zip(u, |a, b| a - b);
    for x in op.graph().ball(opts.verify_radius) {
        let d = diff.eval(&x);
        if !(d > 0.0) {
            return Err(Error::OrderViolation { vertex: x, value: d });
        }
    }
    build(op, u.clone(), diff, Variant::BoundedQuotient, opts)
}

fn build(
    op: &SchrodingerOperator,
    u: GraphFunction,
    v: GraphFunction,
    variant: Variant,
    opts: &ConstructOptions,
) -> Result<HardyWeight> {
    let graph = op.graph();
    let ball = graph.ball(opts.verify_radius);
    for f in [&u, &v] {
        for x in &ball {
            let value = f.eval(x);
            if !(value > 0.0) {
                return Err(Error::NonpositiveSupersolution {
                    vertex: x.clone(),
                    value,
                });
            }
        }
    }

    let mut exceptional = BTreeSet::new();
    for f in [&u, &v] {
        let report = op.superharmonic_report(f, &ball, opts.harmonic_tol);
        if !report.is_superharmonic && !opts.allow_non_superharmonic {
            return Err(Error::NotSuperharmonic {
                count: report.violations.len(),
                first: report.violations[0].clone(),
            });
        }
        exceptional.extend(report.harmonic_except);
    }
    let boundary: BTreeSet<Vertex> = boundary_layer(graph.as_ref(), &ball).into_iter().collect();
    let exceptional_on_boundary = exceptional.iter().any(|x| boundary.contains(x));

    let inverted = looks_bounded_above(&u, &v, &ball, &boundary);
    let (u, v) = if inverted { (v, u) } else { (u, v) };

    Ok(HardyWeight {
        op: op.clone(),
        u,
        v,
        variant,
        exceptional_set: exceptional.into_iter().collect(),
        exceptional_on_boundary,
        inverted,
        harmonic_tol: opts.harmonic_tol,
    })
}

/// Heuristic: `u₀ = u/v` decreases from the root towards the sampled boundary.
fn looks_bounded_above(u: &GraphFunction, v: &GraphFunction, ball: &[Vertex], boundary: &BTreeSet<Vertex>) -> bool {
    let Some(root) = ball.first() else {
        return false;
    };
    if boundary.is_empty() {
        return false;
    }
    let u0 = |x: &Vertex| u.eval(x) / v.eval(x);
    let mean = boundary.iter().map(u0).sum::<f64>() / boundary.len() as f64;
    mean < u0(root)
}

/// Closed-form weight of the half-line with Dirichlet condition at 0 for the
/// pair `u(n) = n`, `v ≡ 1`: `2 - √(1+1/n) - √(1-1/n)` for `n ≥ 2`, `2 - √2` at 1.
/// Evaluated as `2x² / [(1+√(1+x))(1+√(1-x))(√(1+x)+√(1-x))]`, `x = 1/n`,
/// which has no cancellation.
pub fn halfline_weight(n: u64) -> Result<f64> {
    match n {
        0 => Err(Error::Domain("half-line weight is defined for n >= 1".into())),
        1 => Ok(2.0 - std::f64::consts::SQRT_2),
        _ => {
            let x = 1.0 / n as f64;
            let (s, t) = ((1.0 + x).sqrt(), (1.0 - x).sqrt());
            Ok(2.0 * x * x / ((1.0 + s) * (1.0 + t) * (s + t)))
        }
    }
}

/// The direct form `2 - √(1+1/n) - √(1-1/n)`, which loses digits as `n` grows.
pub fn halfline_weight_direct(n: u64) -> f64 {
    let x = 1.0 / n as f64;
    2.0 - (1.0 + x).sqrt() - (1.0 - x).sqrt()
}

/// `w(n) = Σ_{k≥1} C(4k,2k) / ((4k-1) 2^{4k-1}) n^{-2k}` for `n ≥ 2`.
pub fn weight_series_halfline(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("series requires n >= 2, got {n}")));
    }
    let inv2 = 1.0 / (n as f64 * n as f64);
    let mut terms = Vec::new();
    // c_k = C(4k,2k) / 2^{4k}
    let mut c = 3.0 / 8.0;
    let mut power = inv2;
    let mut partial = 0.0;
    for k in 1..=400u32 {
        let kf = k as f64;
        let term = c * 2.0 / (4.0 * kf - 1.0) * power;
        terms.push(term);
        partial += term;
        if term < 1e-16 * partial {
            break;
        }
        let ratio = (4.0 * kf + 1.0) * (4.0 * kf + 2.0) * (4.0 * kf + 3.0) * (4.0 * kf + 4.0)
            / (16.0 * (2.0 * kf + 1.0).powi(2) * (2.0 * kf + 2.0).powi(2));
        c *= ratio;
        power *= inv2;
    }
    Ok(terms.iter().rev().sum())
}
