//! Seeded random finite graphs and the identity suite run over them.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coarea::{coarea_integral, level_flux, stokes_residual, Constant, InverseT, Power};
use crate::error::Result;
use crate::graph::{FiniteGraph, GraphFunction, Vertex};
use crate::schrodinger::{Residual, SchrodingerOperator};

#[derive(Debug, Clone)]
pub struct RandomGraphParams {
    pub min_vertices: usize,
    pub max_vertices: usize,
    /// Extra edges beyond the spanning tree, as a fraction of `n`.
    pub extra_edge_ratio: f64,
    pub max_weight: f64,
    /// Potential drawn from `[-q, q]`; zero if `None`.
    pub potential: Option<f64>,
}

impl Default for RandomGraphParams {
    fn default() -> Self {
        RandomGraphParams {
            min_vertices: 2,
            max_vertices: 50,
            extra_edge_ratio: 1.0,
            max_weight: 2.0,
            potential: None,
        }
    }
}

/// A connected graph: a random spanning tree plus random extra edges, with
/// weights uniform in `(0, max_weight]`.
pub fn random_graph(rng: &mut ChaCha8Rng, params: &RandomGraphParams) -> FiniteGraph {
    let n = rng.gen_range(params.min_vertices..=params.max_vertices);
    let mut order: Vec<i64> = (0..n as i64).collect();
    order.shuffle(rng);
    let mut pairs = BTreeMap::new();
    let weight = |rng: &mut ChaCha8Rng| params.max_weight * (1.0 - rng.gen::<f64>());
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (a, b) = (order[i].min(order[j]), order[i].max(order[j]));
        pairs.insert((a, b), weight(rng));
    }
    let extra = (params.extra_edge_ratio * n as f64).round() as usize;
    for _ in 0..extra {
        if n < 2 {
            break;
        }
        let a = rng.gen_range(0..n as i64);
        let b = rng.gen_range(0..n as i64);
        if a != b {
            pairs.entry((a.min(b), a.max(b))).or_insert_with(|| weight(rng));
        }
    }
    let edges: Vec<(Vertex, Vertex, f64)> = pairs
        .into_iter()
        .map(|((a, b), w)| (Vertex::id(a), Vertex::id(b), w))
        .collect();
    let potential: BTreeMap<Vertex, f64> = match params.potential {
        Some(q) => (0..n as i64).map(|i| (Vertex::id(i), rng.gen_range(-q..=q))).collect(),
        None => BTreeMap::new(),
    };
    FiniteGraph::new((0..n as i64).map(Vertex::id), &edges, &potential, Some(Vertex::id(0)))
        .expect("spanning tree makes the graph connected")
        .with_name("random")
}

pub fn random_function(rng: &mut ChaCha8Rng, graph: &FiniteGraph, lo: f64, hi: f64) -> GraphFunction {
    GraphFunction::finite(graph.vertices().iter().map(|x| (x.clone(), rng.gen_range(lo..hi))).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Identity {
    ProductRule,
    ChainRule,
    GroundStateTransform,
    Stokes,
    Coarea,
    GreensFormula,
}

impl Identity {
    pub const ALL: [Identity; 6] = [
        Identity::ProductRule,
        Identity::ChainRule,
        Identity::GroundStateTransform,
        Identity::Stokes,
        Identity::Coarea,
        Identity::GreensFormula,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Identity::ProductRule => "product-rule",
            Identity::ChainRule => "chain-rule",
            Identity::GroundStateTransform => "ground-state-transform",
            Identity::Stokes => "stokes",
            Identity::Coarea => "coarea",
            Identity::GreensFormula => "greens-formula",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub identity: Identity,
    pub trials: usize,
    pub checks: usize,
    pub worst: Residual,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySuiteReport {
    pub seed: u64,
    pub tolerance: f64,
    pub rows: Vec<IdentityRow>,
}

impl IdentitySuiteReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

/// Worst relative residual of one identity on one random graph.
pub fn check_identity(identity: Identity, rng: &mut ChaCha8Rng) -> Result<(Residual, usize)> {
    let with_potential = matches!(
        identity,
        Identity::GroundStateTransform | Identity::ProductRule | Identity::ChainRule | Identity::GreensFormula
    );
    let params = RandomGraphParams {
        potential: with_potential.then_some(1.0),
        ..Default::default()
    };
    let graph = random_graph(rng, &params);
    let vertices = graph.vertices().to_vec();
    let shared = Arc::new(graph.clone());
    let op = SchrodingerOperator::new(shared);
    let mut worst = Residual::zero();
    let mut checks = 0;
    match identity {
        Identity::ProductRule => {
            let f = random_function(rng, &graph, -1.0, 1.0);
            let g = random_function(rng, &graph, -1.0, 1.0);
            for x in &vertices {
                worst = worst.max(op.product_rule_residual(&f, &g, x));
                checks += 1;
            }
        }
        Identity::ChainRule => {
            let f = random_function(rng, &graph, 0.1, 10.0);
            let g = random_function(rng, &graph, 0.1, 10.0);
            for x in &vertices {
                worst = worst.max(op.chain_rule_residual(&f, &g, x)?);
                checks += 1;
            }
        }
        Identity::GroundStateTransform => {
            let v = random_function(rng, &graph, 0.1, 10.0);
            let phi = random_function(rng, &graph, -1.0, 1.0);
            worst = op.gst_identity_residual(&v, &phi)?;
            checks = 1;
        }
        Identity::GreensFormula => {
            let phi = random_function(rng, &graph, -1.0, 1.0);
            let total = op.quadratic_form(&phi)?.total;
            let pairing: f64 = vertices.iter().map(|x| phi.eval(x) * op.apply(&phi, x)).sum();
            worst = Residual {
                value: (total - pairing).abs(),
                scale: total.abs().max(pairing.abs()),
            };
            checks = 1;
        }
        Identity::Stokes => {
            let u = random_function(rng, &graph, 1.0, 10.0);
            let flux = level_flux(&graph, &u, &vertices)?;
            let bp = &flux.breakpoints;
            for i in 0..bp.len() {
                for j in i..bp.len() {
                    worst = worst.max(stokes_residual(&graph, &u, bp[i], bp[j], &vertices)?);
                    checks += 1;
                }
            }
        }
        Identity::Coarea => {
            let u = random_function(rng, &graph, 1.0, 10.0);
            let alpha = rng.gen_range(-2.0..2.0);
            for f in [&Constant(1.0) as &dyn crate::coarea::Integrand, &InverseT, &Power(alpha)] {
                worst = worst.max(coarea_integral(&graph, &u, f, &vertices)?.residual);
                checks += 1;
            }
        }
    }
    Ok((worst, checks))
}

/// Runs every identity on `trials` random graphs drawn from `seed`.
pub fn identity_suite(trials: usize, seed: u64, tolerance: f64) -> Result<IdentitySuiteReport> {
    let mut rows = Vec::new();
    for (k, identity) in Identity::ALL.into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
        let mut worst = Residual::zero();
        let mut checks = 0;
        for _ in 0..trials {
            let (r, c) = check_identity(identity, &mut rng)?;
            worst = worst.max(r);
            checks += c;
        }
        rows.push(IdentityRow {
            identity,
            trials,
            checks,
            worst,
            passed: worst.relative() <= tolerance,
        });
    }
    Ok(IdentitySuiteReport { seed, tolerance, rows })
}

/// A random graph whose edge list contains one pair with two different weights.
pub fn asymmetric_edges(rng: &mut ChaCha8Rng) -> Vec<(Vertex, Vertex, f64)> {
    let graph = random_graph(rng, &RandomGraphParams::default());
    let mut edges: Vec<(Vertex, Vertex, f64)> = graph.edges().map(|(x, y, w)| (x.clone(), y.clone(), w)).collect();
    let (x, y, w) = edges[0].clone();
    edges.push((y, x, w + 0.5));
    edges
}
