//! Finite-truncation diagnostics for criticality, null-criticality and
//! optimality near infinity of a Hardy weight.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{boundary_layer, Graph, GraphFunction, Vertex};
use crate::hardy::HardyWeight;
use crate::linalg::{assemble_form, smallest_generalized_eigen, EigenSpec, Region};
use crate::numeric::{fit_line, fit_through_origin, CompensatedSum, LineFit};
use crate::schrodinger::SchrodingerOperator;

/// `φₙ(t)`: 1 on `[1/n, n]`, logarithmic ramps down to 0 at `1/n²` and `n²`.
pub fn cutoff(n: f64, t: f64) -> f64 {
    let l = n.ln();
    if t <= 1.0 / (n * n) || t >= n * n {
        0.0
    } else if t < 1.0 / n {
        2.0 + t.ln() / l
    } else if t <= n {
        1.0
    } else {
        2.0 - t.ln() / l
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NullSequenceElement {
    pub n: f64,
    /// `e_n = φₙ ∘ u₀` on its support, in BFS order.
    pub support: Vec<Vertex>,
    pub values: Vec<f64>,
    /// `(h - c·w)(ψ e_n)` with `ψ = (uv)^½`, `c` the weight scale.
    pub energy: f64,
}

impl NullSequenceElement {
    pub fn function(&self) -> GraphFunction {
        GraphFunction::finite(self.support.iter().cloned().zip(self.values.iter().copied()).collect())
    }
}

/// Largest ball radius searched for the support of `e_n`.
const MAX_SUPPORT_RADIUS: usize = 1 << 20;
const MAX_SUPPORT_VERTICES: usize = 2_000_000;

/// Builds `e_n = φₙ ∘ u₀` and its energy for the weight `scale · w`.
///
/// The ball grows until its boundary layer lies outside the support of
/// `e_n`; if that never happens within the search limits the support is
/// reported as infinite.
pub fn null_sequence(weight: &HardyWeight, n: f64, scale: f64) -> Result<NullSequenceElement> {
    if !(n >= 2.0) {
        return Err(Error::Domain(format!("cutoff parameter must be >= 2, got {n}")));
    }
    let graph = weight.operator().graph().clone();
    let u0 = weight.u0();
    let mut radius = 8usize;
    let ball = loop {
        let ball = graph.ball(radius);
        let shell = boundary_layer(graph.as_ref(), &ball);
        if !shell.is_empty() && shell.iter().all(|x| cutoff(n, u0.eval(x)) == 0.0) {
            break ball;
        }
        if shell.is_empty() {
            // finite graph fully exhausted
            break ball;
        }
        if radius >= MAX_SUPPORT_RADIUS || ball.len() >= MAX_SUPPORT_VERTICES {
            return Err(Error::InfiniteSupport);
        }
        radius *= 2;
    };

    let mut support = Vec::new();
    let mut values = Vec::new();
    for x in ball {
        let e = cutoff(n, u0.eval(&x));
        if e != 0.0 {
            support.push(x);
            values.push(e);
        }
    }
    if support.is_empty() {
        return Err(Error::Domain("cutoff has empty support on the graph".into()));
    }
    let element = NullSequenceElement {
        n,
        support,
        values,
        energy: 0.0,
    };
    let e = element.function();
    let psi = weight.ground_state();
    let op = weight.operator();
    // (h - c w)(ψe) = h_ψ(e) + Σ (Hψ/ψ - c w) ψ² e²
    let twisted = op.gst_form(&psi, &e, &e)?;
    let correction: f64 = element
        .support
        .par_iter()
        .zip(&element.values)
        .map(|(x, &ex)| {
            let eval = weight.eval(x);
            let p = psi.eval(x);
            (eval.w_operator - scale * eval.w) * p * p * ex * ex
        })
        .collect::<Vec<f64>>()
        .into_iter()
        .collect::<CompensatedSum>()
        .value();
    Ok(NullSequenceElement {
        energy: twisted + correction,
        ..element
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyDecayCertificate {
    pub n: Vec<f64>,
    pub energy: Vec<f64>,
    pub strictly_decreasing: bool,
    /// `C` in the fit `energy ≈ C / log n`.
    pub fit_constant: f64,
    pub residuals: Vec<f64>,
    /// Least-squares slope of the fit residuals against `log n`.
    pub residual_trend: f64,
    /// Least-squares slope of energy against `1/log n`.
    pub slope_vs_inverse_log: f64,
    pub passed: bool,
}

pub fn energy_decay_certificate(weight: &HardyWeight, ns: &[f64], scale: f64) -> Result<EnergyDecayCertificate> {
    let elements: Vec<NullSequenceElement> = ns.iter().map(|&n| null_sequence(weight, n, scale)).collect::<Result<_>>()?;
    let energy: Vec<f64> = elements.iter().map(|e| e.energy).collect();
    let strictly_decreasing = energy.windows(2).all(|w| w[1] < w[0]);
    let inv_log: Vec<f64> = ns.iter().map(|n| 1.0 / n.ln()).collect();
    let logs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let c = fit_through_origin(&inv_log, &energy).unwrap_or(f64::NAN);
    let residuals: Vec<f64> = energy.iter().zip(&inv_log).map(|(e, z)| e - c * z).collect();
    let residual_trend = fit_line(&logs, &residuals).map_or(f64::NAN, |f| f.slope);
    let slope_vs_inverse_log = fit_line(&inv_log, &energy).map_or(f64::NAN, |f| f.slope);
    Ok(EnergyDecayCertificate {
        n: ns.to_vec(),
        energy,
        strictly_decreasing,
        fit_constant: c,
        residuals,
        residual_trend,
        slope_vs_inverse_log,
        passed: strictly_decreasing && residual_trend >= 0.0 && slope_vs_inverse_log > 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthTrend {
    /// Increments per unit of `log N` do not decay: consistent with divergence.
    UnboundedLike,
    /// Increments decay: consistent with a finite limit.
    ConvergentLike,
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub radii: Vec<usize>,
    pub partial_sums: Vec<f64>,
    /// `S(N) ≈ slope·log N + intercept`.
    pub log_fit: Option<LineFit>,
    /// `log S(N) ≈ slope·log N + intercept`.
    pub power_fit: Option<LineFit>,
    pub trend: GrowthTrend,
}

/// Partial sums `Σ_{B_N} w ψ²` over the given radii.
pub fn null_criticality_divergence(
    graph: &dyn Graph,
    psi: &GraphFunction,
    w: &(dyn Fn(&Vertex) -> f64 + Sync),
    radii: &[usize],
) -> DivergenceReport {
    let partial_sums: Vec<f64> = radii
        .iter()
        .map(|&n| {
            let ball = graph.ball(n);
            let terms: Vec<f64> = ball
                .par_iter()
                .map(|x| {
                    let p = psi.eval(x);
                    w(x) * p * p
                })
                .collect();
            terms.into_iter().collect::<CompensatedSum>().value()
        })
        .collect();
    growth_report(radii, partial_sums)
}

fn growth_report(radii: &[usize], partial_sums: Vec<f64>) -> DivergenceReport {
    let logs: Vec<f64> = radii.iter().map(|&n| (n as f64).ln()).collect();
    let log_fit = fit_line(&logs, &partial_sums);
    let power_fit = if partial_sums.iter().all(|&s| s > 0.0) {
        let ls: Vec<f64> = partial_sums.iter().map(|s| s.ln()).collect();
        fit_line(&logs, &ls)
    } else {
        None
    };
    let rates: Vec<f64> = partial_sums
        .windows(2)
        .zip(logs.windows(2))
        .filter(|(_, l)| l[1] > l[0])
        .map(|(s, l)| (s[1] - s[0]) / (l[1] - l[0]))
        .collect();
    let trend = match (rates.first(), rates.last()) {
        (Some(&first), Some(&last)) if rates.len() >= 2 && first > 0.0 => {
            if last >= 0.5 * first {
                GrowthTrend::UnboundedLike
            } else {
                GrowthTrend::ConvergentLike
            }
        }
        _ => GrowthTrend::Undetermined,
    };
    DivergenceReport {
        radii: radii.to_vec(),
        partial_sums,
        log_fit,
        power_fit,
        trend,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegionSpec {
    Ball { radius: usize },
    Annulus { outer: usize, inner: usize },
}

impl RegionSpec {
    pub fn vertices(&self, graph: &dyn Graph) -> Vec<Vertex> {
        match *self {
            RegionSpec::Ball { radius } => graph.ball(radius),
            RegionSpec::Annulus { outer, inner } => {
                let inner: HashSet<Vertex> = graph.ball(inner).into_iter().collect();
                graph.ball(outer).into_iter().filter(|x| !inner.contains(x)).collect()
            }
        }
    }

    pub fn outer_radius(&self) -> usize {
        match *self {
            RegionSpec::Ball { radius } => radius,
            RegionSpec::Annulus { outer, .. } => outer,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    SubcriticalLooking,
    CriticalLooking,
    Supercritical,
}

/// Classification thresholds for `λ*` on the last region of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepThresholds {
    /// `λ* < 1 - below` means the inequality `h ≥ w` fails.
    pub below: f64,
    /// `λ* > 1 + above` looks subcritical (room for a larger weight).
    pub above: f64,
}

impl Default for SweepThresholds {
    fn default() -> Self {
        SweepThresholds {
            below: 1e-6,
            above: 0.25,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralRow {
    pub region: RegionSpec,
    pub vertices: usize,
    pub lambda_star: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub scale: f64,
    pub rows: Vec<SpectralRow>,
    pub nonincreasing: bool,
    pub classification: Classification,
}

impl SpectralReport {
    pub fn lambdas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.lambda_star).collect()
    }
}

/// `λ*(Ω) = min h(φ) / Σ c·w φ²` over `φ` supported in `Ω`, exterior frozen
/// at zero, for each region. Zero-weight vertices stay in the trial space.
pub fn lambda_star(
    op: &SchrodingerOperator,
    w: &(dyn Fn(&Vertex) -> f64 + Sync),
    region: &RegionSpec,
    spec: &EigenSpec,
) -> Result<SpectralRow> {
    let graph = op.graph();
    let vertices = region.vertices(graph.as_ref());
    let r = Region::new(vertices);
    let a = assemble_form(graph.as_ref(), &r);
    let mass: Vec<f64> = r.vertices.par_iter().map(w).collect();
    if let Some(bad) = mass.iter().position(|m| *m < 0.0) {
        return Err(Error::Domain(format!(
            "weight is negative at {}: {}",
            r.vertices[bad], mass[bad]
        )));
    }
    let eig = smallest_generalized_eigen(&a, &mass, spec)?;
    Ok(SpectralRow {
        region: *region,
        vertices: r.len(),
        lambda_star: eig.value,
        lower: eig.lower,
        upper: eig.upper,
    })
}

pub fn rayleigh_sweep(
    op: &SchrodingerOperator,
    w: &(dyn Fn(&Vertex) -> f64 + Sync),
    scale: f64,
    regions: &[RegionSpec],
    thresholds: &SweepThresholds,
    spec: &EigenSpec,
) -> Result<SpectralReport> {
    let scaled = |x: &Vertex| scale * w(x);
    let rows: Vec<SpectralRow> = regions
        .par_iter()
        .map(|r| lambda_star(op, &scaled, r, spec))
        .collect::<Result<_>>()?;
    let slack = 10.0 * spec.rel_tol;
    let nonincreasing = rows
        .windows(2)
        .all(|p| p[1].lambda_star <= p[0].lambda_star * (1.0 + slack));
    let last = rows.last().map_or(f64::NAN, |r| r.lambda_star);
    let classification = if last < 1.0 - thresholds.below {
        Classification::Supercritical
    } else if last > 1.0 + thresholds.above || !nonincreasing {
        Classification::SubcriticalLooking
    } else {
        Classification::CriticalLooking
    };
    Ok(SpectralReport {
        scale,
        rows,
        nonincreasing,
        classification,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimalityConfig {
    pub null_sequence_n: Vec<f64>,
    pub divergence_radii: Vec<usize>,
    pub balls: Vec<usize>,
    /// Weight multiplier tested on annuli.
    pub near_infinity_scale: f64,
    pub annulus_inner: usize,
    pub annulus_outer: Vec<usize>,
    pub thresholds: SweepThresholds,
    pub eigen: EigenSpec,
}

impl Default for OptimalityConfig {
    fn default() -> Self {
        OptimalityConfig {
            null_sequence_n: vec![4.0, 16.0, 256.0],
            divergence_radii: vec![1_000, 10_000, 100_000],
            balls: vec![100, 1_000, 10_000],
            near_infinity_scale: 1.2,
            annulus_inner: 10,
            annulus_outer: vec![100, 1_000, 10_000],
            thresholds: SweepThresholds::default(),
            eigen: EigenSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NearInfinityReport {
    pub scale: f64,
    pub sweep: SpectralReport,
    /// First annulus on which `h ≥ scale·w` fails.
    pub witness: Option<SpectralRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub hardy_inequality: bool,
    pub criticality: bool,
    pub null_criticality: bool,
    pub optimal_near_infinity: bool,
    pub caveat: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    pub balls: SpectralReport,
    pub criticality: EnergyDecayCertificate,
    pub null_criticality: DivergenceReport,
    pub near_infinity: NearInfinityReport,
    pub verdict: Verdict,
}

pub const CAVEAT: &str =
    "finite-truncation diagnostics: trends on balls and annuli are evidence, not proofs of the infinite-graph properties";

/// Runs the three diagnostics for a constructed weight scaled by `scale`.
pub fn optimality_report(weight: &HardyWeight, scale: f64, config: &OptimalityConfig) -> Result<OptimalityReport> {
    let op = weight.operator();
    let w = |x: &Vertex| weight.value(x);
    let balls: Vec<RegionSpec> = config.balls.iter().map(|&radius| RegionSpec::Ball { radius }).collect();
    let balls = rayleigh_sweep(op, &w, scale, &balls, &config.thresholds, &config.eigen)?;
    let criticality = energy_decay_certificate(weight, &config.null_sequence_n, scale)?;
    let psi = weight.ground_state();
    let scaled = |x: &Vertex| scale * weight.value(x);
    let null_criticality = null_criticality_divergence(op.graph().as_ref(), &psi, &scaled, &config.divergence_radii);

    let annuli: Vec<RegionSpec> = config
        .annulus_outer
        .iter()
        .map(|&outer| RegionSpec::Annulus {
            outer,
            inner: config.annulus_inner,
        })
        .collect();
    let sweep = rayleigh_sweep(
        op,
        &w,
        scale * config.near_infinity_scale,
        &annuli,
        &config.thresholds,
        &config.eigen,
    )?;
    let witness = sweep.rows.iter().find(|r| r.upper < 1.0).cloned();
    let near_infinity = NearInfinityReport {
        scale: config.near_infinity_scale,
        sweep,
        witness,
    };

    let verdict = Verdict {
        hardy_inequality: balls.rows.iter().all(|r| r.lambda_star >= 1.0 - config.thresholds.below),
        criticality: criticality.passed && balls.classification == Classification::CriticalLooking,
        null_criticality: null_criticality.trend == GrowthTrend::UnboundedLike,
        optimal_near_infinity: near_infinity.witness.is_some(),
        caveat: CAVEAT,
    };
    Ok(OptimalityReport {
        balls,
        criticality,
        null_criticality,
        near_infinity,
        verdict,
    })
}

/// Tabulates `e_n` on a fixed set of vertices, e.g. to watch `e_n → 1`.
pub fn null_sequence_on(weight: &HardyWeight, n: f64, vertices: &[Vertex]) -> BTreeMap<Vertex, f64> {
    let u0 = weight.u0();
    vertices.iter().map(|x| (x.clone(), cutoff(n, u0.eval(x)))).collect()
}
