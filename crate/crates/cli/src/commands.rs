use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use anyhow::{bail, Result};
use hardy_core::coarea::{coarea_integral, level_flux, stokes_residual};
use hardy_core::criticality::{
    optimality_report, rayleigh_sweep, OptimalityConfig, RegionSpec, SpectralReport, SweepThresholds,
};
use hardy_core::graph::{materialize, FiniteGraph, HalfLine, Lattice, RegularTree, Restricted};
use hardy_core::green::{green_dirichlet, LatticeGreen, Normalization, QuadratureSpec};
use hardy_core::hardy::{construct_weight, halfline_weight, ConstructOptions};
use hardy_core::linalg::{EigenSpec, LinearSolveSpec};
use hardy_core::random::{
    asymmetric_edges, check_identity, random_function, random_graph, Identity, RandomGraphParams,
};
use hardy_core::{Error, Graph, GraphFunction, HardyWeight, SchrodingerOperator, SharedGraph, Vertex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::args::{
    CoareaArgs, FamilyName, GlobalArgs, GreenArgs, HardyWeightArgs, MethodName, NormalizationName, SweepArgs,
    VerifyArgs,
};
use crate::input::{
    custom_graph, family_graph, parse_integrand, parse_points, parse_range, parse_vertices, read_graph,
    read_vertex_values, require_transient_lattice,
};
use crate::output::{Outcome, Payload, Table};

fn label<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        Ok(other) => other.to_string(),
        Err(_) => String::new(),
    }
}

fn table(t: Table) -> Outcome {
    Outcome {
        payload: Payload::Table(t),
        failed: false,
    }
}

pub fn halfline_construction() -> Result<HardyWeight> {
    let op = SchrodingerOperator::new(family_graph(&crate::args::FamilyArgs {
        family: FamilyName::Halfline,
        dim: 1,
        degree: 2,
        graph: None,
    })?);
    let u = GraphFunction::from_fn(|x| x.head() as f64);
    Ok(construct_weight(&op, &u, &GraphFunction::constant(1.0), &ConstructOptions::default())?)
}

/// Laplacian Green function of the regular tree, `(d-1)/(d(d-2)) (d-1)^{-|x|}`.
fn tree_construction(degree: usize) -> Result<HardyWeight> {
    if degree < 3 {
        return Err(Error::UnsupportedFamily(format!("tree of degree {degree} is recurrent")).into());
    }
    let tree = RegularTree::new(degree)?;
    let d = degree as f64;
    let g0 = (d - 1.0) / (d * (d - 2.0));
    let green = GraphFunction::from_fn(move |x| g0 * (d - 1.0).powi(-(tree.depth(x) as i32)));
    let op = SchrodingerOperator::new(Arc::new(tree));
    let opts = ConstructOptions {
        verify_radius: 8,
        ..Default::default()
    };
    Ok(construct_weight(&op, &green, &GraphFunction::constant(1.0), &opts)?)
}

pub fn hardy_weight(args: &HardyWeightArgs, _global: &GlobalArgs) -> Result<Outcome> {
    match args.family.family {
        FamilyName::Halfline => {
            let ns = parse_range(&args.range)?;
            if let Some(bad) = ns.iter().find(|&&n| n < 1) {
                bail!("half-line weights are defined for n >= 1 (Dirichlet condition at 0), got {bad}");
            }
            let weight = halfline_construction()?;
            let mut t = Table::new(&["vertex", "w", "w_closed_form", "w_n2", "harmonic"]);
            for n in ns {
                let eval = weight.eval(&Vertex::id(n));
                let nf = n as f64;
                t.push(vec![
                    n.into(),
                    eval.w.into(),
                    halfline_weight(n as u64)?.into(),
                    (eval.w * nf * nf).into(),
                    eval.harmonic.into(),
                ]);
            }
            Ok(table(t))
        }
        FamilyName::Lattice => {
            let dim = args.family.dim;
            require_transient_lattice(dim)?;
            let points = parse_points(&args.points, dim)?;
            let mut green = LatticeGreen::new(dim, QuadratureSpec { nodes: args.nodes })?;
            let mut t = Table::new(&["vertex", "norm", "w", "w_norm2"]);
            for x in points {
                let norm = x.iter().map(|&c| (c as f64).powi(2)).sum::<f64>().sqrt();
                let w = green.weight(&x)?;
                t.push(vec![
                    Vertex::lattice(&x).to_string().into(),
                    norm.into(),
                    w.into(),
                    (w * norm * norm).into(),
                ]);
            }
            Ok(table(t))
        }
        FamilyName::RegularTree => {
            let ns = parse_range(&args.range)?;
            if let Some(bad) = ns.iter().find(|&&n| n < 0) {
                bail!("tree vertices are numbered from 0, got {bad}");
            }
            let degree = args.family.degree;
            let weight = tree_construction(degree)?;
            let tree = RegularTree::new(degree)?;
            let d = degree as f64;
            let mut t = Table::new(&["vertex", "depth", "w", "w_closed_form"]);
            for n in ns {
                let x = Vertex::id(n);
                let depth = tree.depth(&x);
                let closed = if depth == 0 {
                    d * (1.0 - 1.0 / (d - 1.0).sqrt())
                } else {
                    d - 2.0 * (d - 1.0).sqrt()
                };
                t.push(vec![n.into(), depth.into(), weight.value(&x).into(), closed.into()]);
            }
            Ok(table(t))
        }
        FamilyName::CustomFinite => {
            let graph = custom_graph(&args.family)?;
            let dirichlet = match &args.dirichlet_at {
                Some(s) => parse_vertices(s)?,
                None => Vec::new(),
            };
            let removed: BTreeSet<Vertex> = dirichlet.iter().cloned().collect();
            let pole = graph
                .vertices()
                .iter()
                .find(|x| !removed.contains(*x))
                .cloned()
                .ok_or_else(|| Error::Domain("every vertex is a Dirichlet vertex".into()))?;
            let radius = graph.len();
            let shared: SharedGraph = Arc::new(graph);
            let green = green_dirichlet(&shared, &pole, radius, &dirichlet, &LinearSolveSpec::default())?;
            let inner: SharedGraph = if dirichlet.is_empty() {
                shared.clone()
            } else {
                Arc::new(Restricted::new(shared.clone(), dirichlet)?)
            };
            let op = SchrodingerOperator::new(inner);
            let opts = ConstructOptions {
                verify_radius: radius,
                ..Default::default()
            };
            let weight = construct_weight(&op, &green.values, &GraphFunction::constant(1.0), &opts)?;
            let mut t = Table::new(&["vertex", "green", "w"]);
            for x in &green.region {
                t.push(vec![x.to_string().into(), green.value(x).into(), weight.value(x).into()]);
            }
            Ok(table(t))
        }
    }
}

fn parse_identity(name: &str) -> Result<Identity> {
    Identity::ALL
        .into_iter()
        .find(|i| i.name() == name)
        .ok_or_else(|| {
            let names: Vec<&str> = Identity::ALL.iter().map(|i| i.name()).collect();
            anyhow::anyhow!("unknown identity {name:?}; expected one of {}", names.join(", "))
        })
}

pub fn verify(args: &VerifyArgs, global: &GlobalArgs) -> Result<Outcome> {
    if args.inject_asymmetry {
        let edges = asymmetric_edges(&mut ChaCha8Rng::seed_from_u64(global.seed));
        FiniteGraph::new([], &edges, &BTreeMap::new(), None)?;
        bail!("asymmetric edge list was accepted");
    }
    let selected = match &args.identity {
        Some(name) => vec![parse_identity(name)?],
        None => Identity::ALL.to_vec(),
    };
    if let Some(f) = &args.integrand {
        if selected != [Identity::Coarea] {
            bail!("--f applies to --identity coarea only");
        }
        return coarea_trials(args.trials, global, f);
    }

    let mut t = Table::new(&["identity", "trials", "checks", "worst_residual", "scale", "relative", "passed"]);
    let mut failed = false;
    for (k, identity) in Identity::ALL.into_iter().enumerate() {
        if !selected.contains(&identity) {
            continue;
        }
        // same streams as the library suite
        let mut rng = ChaCha8Rng::seed_from_u64(global.seed.wrapping_add(k as u64));
        let mut worst = hardy_core::schrodinger::Residual::zero();
        let mut checks = 0;
        for _ in 0..args.trials {
            let (r, c) = check_identity(identity, &mut rng)?;
            worst = worst.max(r);
            checks += c;
        }
        let passed = worst.relative() <= global.tol;
        failed |= !passed;
        t.push(vec![
            identity.name().into(),
            args.trials.into(),
            checks.into(),
            worst.value.into(),
            worst.scale.into(),
            worst.relative().into(),
            passed.into(),
        ]);
    }
    Ok(Outcome {
        payload: Payload::Table(t),
        failed,
    })
}

fn coarea_trials(trials: usize, global: &GlobalArgs, f: &str) -> Result<Outcome> {
    let integrand = parse_integrand(f)?;
    let mut rng = ChaCha8Rng::seed_from_u64(global.seed);
    let mut t = Table::new(&["trial", "vertices", "lhs", "rhs", "residual", "relative", "passed"]);
    let mut failed = false;
    for trial in 0..trials {
        let graph = random_graph(&mut rng, &RandomGraphParams::default());
        let u = random_function(&mut rng, &graph, 1.0, 10.0);
        let r = coarea_integral(&graph, &u, integrand.as_ref(), graph.vertices())?;
        let passed = r.residual.relative() <= global.tol;
        failed |= !passed;
        t.push(vec![
            trial.into(),
            graph.len().into(),
            r.lhs.into(),
            r.rhs.into(),
            r.residual.value.into(),
            r.residual.relative().into(),
            passed.into(),
        ]);
    }
    Ok(Outcome {
        payload: Payload::Table(t),
        failed,
    })
}

fn spectral_rows(t: &mut Table, diagnostic: &str, report: &SpectralReport) {
    for row in &report.rows {
        let (outer, inner) = match row.region {
            RegionSpec::Ball { radius } => (radius, None),
            RegionSpec::Annulus { outer, inner } => (outer, Some(inner)),
        };
        t.push(vec![
            diagnostic.into(),
            outer.into(),
            inner.map_or_else(|| "".into(), |i| i.to_string().into()),
            row.vertices.into(),
            report.scale.into(),
            row.lambda_star.into(),
            row.lower.into(),
            row.upper.into(),
        ]);
    }
}

const SWEEP_COLUMNS: [&str; 8] = ["diagnostic", "outer", "inner", "vertices", "scale", "lambda_star", "lower", "upper"];

pub fn sweep(args: &SweepArgs, _global: &GlobalArgs) -> Result<Outcome> {
    let thresholds = SweepThresholds::default();
    let eigen = EigenSpec::default();
    let balls: Vec<RegionSpec> = args.balls.iter().map(|&radius| RegionSpec::Ball { radius }).collect();
    let annuli: Vec<RegionSpec> = args
        .annulus_outer
        .iter()
        .map(|&outer| RegionSpec::Annulus {
            outer,
            inner: args.annulus_inner,
        })
        .collect();
    let mut t = Table::new(&SWEEP_COLUMNS);

    if let Some(path) = &args.weight_file {
        let weights = read_vertex_values(path)?;
        let graph = family_graph(&args.family)?;
        if matches!(args.family.family, FamilyName::Lattice) {
            require_transient_lattice(args.family.dim)?;
        }
        let op = SchrodingerOperator::new(graph);
        let w = |x: &Vertex| weights.get(x).copied().unwrap_or(0.0);
        let ball_report = rayleigh_sweep(&op, &w, args.weight_scale, &balls, &thresholds, &eigen)?;
        let annulus_report = if annuli.is_empty() {
            None
        } else {
            Some(rayleigh_sweep(
                &op,
                &w,
                args.weight_scale * args.scale,
                &annuli,
                &thresholds,
                &eigen,
            )?)
        };
        spectral_rows(&mut t, "balls", &ball_report);
        if let Some(a) = &annulus_report {
            spectral_rows(&mut t, "annuli", a);
        }
        let witness = annulus_report
            .as_ref()
            .and_then(|a| a.rows.iter().find(|r| r.upper < 1.0).cloned());
        let failed = ball_report.rows.iter().any(|r| r.lambda_star < 1.0 - thresholds.below);
        let report = json!({
            "balls": ball_report,
            "near_infinity": { "scale": args.scale, "sweep": annulus_report, "witness": witness },
            "caveat": hardy_core::criticality::CAVEAT,
        });
        return Ok(Outcome {
            payload: Payload::Report { report, table: t },
            failed,
        });
    }

    let weight = match args.family.family {
        FamilyName::Halfline => halfline_construction()?,
        FamilyName::RegularTree => tree_construction(args.family.degree)?,
        other => {
            return Err(Error::UnsupportedFamily(format!(
                "no constructed weight for {}; pass --weight-file",
                label(&other)
            ))
            .into())
        }
    };
    let config = OptimalityConfig {
        null_sequence_n: args.null_n.clone(),
        divergence_radii: args.divergence_radii.clone(),
        balls: args.balls.clone(),
        near_infinity_scale: args.scale,
        annulus_inner: args.annulus_inner,
        annulus_outer: args.annulus_outer.clone(),
        thresholds,
        eigen,
    };
    let report = optimality_report(&weight, args.weight_scale, &config)?;
    spectral_rows(&mut t, "balls", &report.balls);
    spectral_rows(&mut t, "annuli", &report.near_infinity.sweep);
    let failed = !report.verdict.hardy_inequality;
    Ok(Outcome {
        payload: Payload::Report {
            report: serde_json::to_value(&report)?,
            table: t,
        },
        failed,
    })
}

pub fn green(args: &GreenArgs, global: &GlobalArgs) -> Result<Outcome> {
    let family = args.family.family;
    if family == FamilyName::Lattice {
        require_transient_lattice(args.family.dim)?;
    }
    let method = args.method.unwrap_or(if family == FamilyName::Lattice {
        MethodName::Fourier
    } else {
        MethodName::Dirichlet
    });
    match method {
        MethodName::Fourier => green_fourier(args),
        MethodName::Dirichlet => green_exhaust(args, global),
    }
}

fn green_fourier(args: &GreenArgs) -> Result<Outcome> {
    if args.family.family != FamilyName::Lattice {
        return Err(Error::UnsupportedFamily("the fourier method needs --family lattice".into()).into());
    }
    let dim = args.family.dim;
    let normalization = match args.normalization.unwrap_or(NormalizationName::RandomWalk) {
        NormalizationName::Laplacian => Normalization::Laplacian,
        NormalizationName::RandomWalk => Normalization::RandomWalk,
    };
    let pole = match &args.pole {
        Some(p) => parse_points(p, dim)?.pop().unwrap_or_else(|| vec![0; dim]),
        None => vec![0; dim],
    };
    let points = match &args.point {
        Some(p) => parse_points(p, dim)?,
        None => vec![pole.clone()],
    };
    let mut green = LatticeGreen::new(dim, QuadratureSpec { nodes: args.nodes })?;
    let lattice = Lattice::new(dim)?;
    let mut t = Table::new(&["vertex", "green", "residual", "method", "normalization"]);
    for x in points {
        let rel: Vec<i64> = x.iter().zip(&pole).map(|(a, b)| a - b).collect();
        let value = green.value(&rel, normalization)?;
        // |L G - δ| in the Laplacian normalization
        let gx = green.value(&rel, Normalization::Laplacian)?;
        let mut lap = 0.0;
        for (y, b) in lattice.neighbors(&Vertex::lattice(&rel)) {
            lap += b * (gx - green.value(y.coords(), Normalization::Laplacian)?);
        }
        let delta = if rel.iter().all(|&c| c == 0) { 1.0 } else { 0.0 };
        t.push(vec![
            Vertex::lattice(&x).to_string().into(),
            value.into(),
            (lap - delta).abs().into(),
            "fourier".into(),
            label(&normalization).into(),
        ]);
    }
    Ok(table(t))
}

fn green_exhaust(args: &GreenArgs, global: &GlobalArgs) -> Result<Outcome> {
    let graph: SharedGraph = match args.family.family {
        // the finite path {0..N}; with a Dirichlet condition at 0 this is exact
        FamilyName::Halfline => Arc::new(materialize(&HalfLine, args.radius)?),
        FamilyName::Lattice => Arc::new(Lattice::new(args.family.dim)?),
        FamilyName::RegularTree => Arc::new(RegularTree::new(args.family.degree)?),
        FamilyName::CustomFinite => Arc::new(read_graph(
            args.family
                .graph
                .as_deref()
                .ok_or_else(|| Error::Format("custom-finite needs --graph".into()))?,
        )?),
    };
    let dirichlet = match &args.dirichlet_at {
        Some(s) => parse_vertices(s)?,
        None => Vec::new(),
    };
    let pole = match &args.pole {
        Some(p) => parse_vertices(p)?
            .pop()
            .ok_or_else(|| Error::Format("empty --pole".into()))?,
        None => graph.root(),
    };
    let spec = LinearSolveSpec {
        tolerance: global.tol,
        ..Default::default()
    };
    let result = green_dirichlet(&graph, &pole, args.radius, &dirichlet, &spec)?;
    let restricted: SharedGraph = if dirichlet.is_empty() {
        graph.clone()
    } else {
        Arc::new(Restricted::new(graph.clone(), dirichlet)?)
    };
    let op = SchrodingerOperator::new(restricted);
    let normalization = args.normalization.unwrap_or(NormalizationName::Laplacian);
    let factor = match normalization {
        NormalizationName::Laplacian => 1.0,
        NormalizationName::RandomWalk => graph.neighbors(&pole).iter().map(|(_, b)| b).sum(),
    };
    let rows: Vec<Vertex> = match &args.point {
        Some(p) => parse_vertices(p)?,
        None => result.region.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let method = format!("dirichlet-radius-{}-{}", args.radius, result.solver.as_ref().map(label).unwrap_or_default());
    let mut t = Table::new(&["vertex", "green", "residual", "method", "normalization"]);
    for x in rows {
        let delta = if x == pole { 1.0 } else { 0.0 };
        let residual = (op.apply(&result.values, &x) - delta).abs();
        t.push(vec![
            x.to_string().into(),
            (factor * result.value(&x)).into(),
            residual.into(),
            method.clone().into(),
            label(&normalization).into(),
        ]);
    }
    let failed = result.residual > 10.0 * global.tol;
    Ok(Outcome {
        payload: Payload::Table(t),
        failed,
    })
}

pub fn coarea_check(args: &CoareaArgs, global: &GlobalArgs) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(global.seed);
    let graph = match &args.graph {
        Some(p) => read_graph(p)?,
        None => random_graph(&mut rng, &RandomGraphParams::default()),
    };
    let u = match &args.function {
        Some(p) => {
            let values = read_vertex_values(p)?;
            if let Some(missing) = graph.vertices().iter().find(|x| !values.contains_key(*x)) {
                return Err(Error::UnknownVertex(missing.clone()).into());
            }
            GraphFunction::finite(values)
        }
        None => random_function(&mut rng, &graph, 1.0, 10.0),
    };
    let integrand = parse_integrand(&args.integrand)?;
    let region = graph.vertices();

    if args.flux {
        let flux = level_flux(&graph, &u, region)?;
        let mut t = Table::new(&["t_low", "t_high", "g"]);
        for (a, b, g) in flux.intervals() {
            t.push(vec![a.into(), b.into(), g.into()]);
        }
        return Ok(table(t));
    }

    let result = coarea_integral(&graph, &u, integrand.as_ref(), region)?;
    let flux = level_flux(&graph, &u, region)?;
    let bp = &flux.breakpoints;
    let mut stokes: f64 = 0.0;
    for &t2 in bp {
        stokes = stokes.max(stokes_residual(&graph, &u, bp[0], t2, region)?.relative());
    }
    let passed = result.residual.relative() <= global.tol && stokes <= global.tol;
    let mut t = Table::new(&[
        "vertices",
        "edges",
        "integrand",
        "lhs",
        "rhs",
        "residual",
        "relative",
        "stokes_relative",
        "passed",
    ]);
    t.push(vec![
        graph.len().into(),
        graph.edge_count().into(),
        integrand.name().into(),
        result.lhs.into(),
        result.rhs.into(),
        result.residual.value.into(),
        result.residual.relative().into(),
        stokes.into(),
        passed.into(),
    ]);
    Ok(Outcome {
        payload: Payload::Table(t),
        failed: !passed,
    })
}
