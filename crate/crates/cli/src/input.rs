//! Parsing of command-line values and input files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use hardy_core::coarea::{Constant, Integrand, InverseT, Log, NullSequenceCutoff, Power};
use hardy_core::graph::{halfline_dirichlet, FiniteGraph, Lattice, RegularTree};
use hardy_core::{Error, SharedGraph, Vertex};

use crate::args::{FamilyArgs, FamilyName};

/// Inclusive range `a:b`; empty when `a > b`.
pub fn parse_range(text: &str) -> Result<Vec<i64>> {
    let (a, b) = text
        .split_once(':')
        .with_context(|| format!("range must look like a:b, got {text:?}"))?;
    let a: i64 = a.trim().parse().with_context(|| format!("bad range start {a:?}"))?;
    let b: i64 = b.trim().parse().with_context(|| format!("bad range end {b:?}"))?;
    Ok((a..=b).collect())
}

/// `axis:10,20` gives `(10,0,..)`, `(20,0,..)`; otherwise `;`-separated
/// comma lists such as `1,0,0;2,1,0`.
pub fn parse_points(text: &str, dim: usize) -> Result<Vec<Vec<i64>>> {
    if let Some(ks) = text.strip_prefix("axis:") {
        return ks
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|k| {
                let k: i64 = k.trim().parse().with_context(|| format!("bad axis distance {k:?}"))?;
                let mut x = vec![0; dim];
                x[0] = k;
                Ok(x)
            })
            .collect();
    }
    parse_vertices(text)?
        .into_iter()
        .map(|v| {
            if v.dim() != dim {
                bail!("point {v} has {} coordinates, expected {dim}", v.dim());
            }
            Ok(v.coords().to_vec())
        })
        .collect()
}

/// `;`-separated vertices, each an integer or a comma list of coordinates.
pub fn parse_vertices(text: &str) -> Result<Vec<Vertex>> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Vertex>().map_err(|e| anyhow::anyhow!("bad vertex {s:?}: {e}")))
        .collect()
}

pub fn read_graph(path: &Path) -> Result<FiniteGraph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FiniteGraph::from_json_str(&text)?)
}

/// Two-column CSV `vertex,value`. Comment lines and a header row are skipped.
pub fn read_vertex_values(path: &Path) -> Result<BTreeMap<Vertex, f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (vertex, value) = line
            .rsplit_once(',')
            .with_context(|| format!("{}:{}: expected vertex,value", path.display(), i + 1))?;
        let Ok(value) = value.trim().parse::<f64>() else {
            if out.is_empty() {
                continue;
            }
            bail!("{}:{}: bad value {value:?}", path.display(), i + 1);
        };
        let vertex: Vertex = vertex
            .trim()
            .parse()
            .map_err(|e| anyhow::anyhow!("{}:{}: bad vertex: {e}", path.display(), i + 1))?;
        out.insert(vertex, value);
    }
    Ok(out)
}

pub fn parse_integrand(text: &str) -> Result<Box<dyn Integrand>> {
    let (name, param) = match text.split_once(':') {
        Some((n, p)) => (n, Some(p.parse::<f64>().with_context(|| format!("bad parameter in {text:?}"))?)),
        None => (text, None),
    };
    Ok(match (name, param) {
        ("constant", c) => Box::new(Constant(c.unwrap_or(1.0))),
        ("inverse-t", None) => Box::new(InverseT),
        ("power", Some(a)) => Box::new(Power(a)),
        ("log", None) => Box::new(Log),
        ("null-cutoff", Some(n)) => Box::new(NullSequenceCutoff(n)),
        _ => bail!("unknown integrand {text:?}; expected constant[:c], inverse-t, power:a, log or null-cutoff:n"),
    })
}

/// The infinite family graph. The half-line carries its Dirichlet condition at 0.
pub fn family_graph(family: &FamilyArgs) -> Result<SharedGraph> {
    Ok(match family.family {
        FamilyName::Halfline => Arc::new(halfline_dirichlet()),
        FamilyName::Lattice => Arc::new(Lattice::new(family.dim)?),
        FamilyName::RegularTree => Arc::new(RegularTree::new(family.degree)?),
        FamilyName::CustomFinite => Arc::new(custom_graph(family)?),
    })
}

pub fn custom_graph(family: &FamilyArgs) -> Result<FiniteGraph> {
    let path = family
        .graph
        .as_deref()
        .ok_or_else(|| Error::Format("custom-finite needs --graph".into()))?;
    read_graph(path)
}

pub fn require_transient_lattice(dim: usize) -> Result<()> {
    if dim < 3 {
        return Err(Error::UnsupportedFamily(format!(
            "lattice of dimension {dim} is recurrent and has no positive Green function"
        ))
        .into());
    }
    Ok(())
}
