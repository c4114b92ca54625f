//! Vertex spaces, weighted graphs and exhaustions by combinatorial balls.
//!
//! Two kinds of graphs implement [`Graph`]: [`FiniteGraph`], an explicit
//! edge list with verified symmetry and connectivity, and the procedural
//! families ([`HalfLine`], [`Lattice`], [`RegularTree`]) that generate
//! neighbors on demand. [`Restricted`] removes a finite set and turns the
//! removed edges into a potential, which is how Dirichlet conditions enter.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A vertex id: a dense integer for abstract graphs, an integer tuple for lattices.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex(SmallVec<[i64; 4]>);

impl Vertex {
    pub fn id(i: i64) -> Self {
        let mut v = SmallVec::new();
        v.push(i);
        Vertex(v)
    }

    pub fn lattice(coords: &[i64]) -> Self {
        Vertex(SmallVec::from_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Vertex(SmallVec::from_elem(0, dim))
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// First coordinate; the id itself for abstract vertices.
    pub fn head(&self) -> i64 {
        self.0.first().copied().unwrap_or(0)
    }

    pub fn as_id(&self) -> Option<i64> {
        (self.0.len() == 1).then(|| self.0[0])
    }

    pub fn euclidean_norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&c| (c as f64) * (c as f64))
            .sum::<f64>()
            .sqrt()
    }

    pub fn shifted(&self, axis: usize, delta: i64) -> Vertex {
        let mut c = self.0.clone();
        c[axis] += delta;
        Vertex(c)
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.len() {
            1 => write!(f, "{}", self.0[0]),
            _ => {
                let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
                write!(f, "({})", parts.join(";"))
            }
        }
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Vertex {
    type Err = Error;

    /// Accepts `5`, `1,0,0`, `1;0;0` and `(1;0;0)`.
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords: std::result::Result<Vec<i64>, _> = trimmed
            .split([',', ';'])
            .map(|p| p.trim().parse::<i64>())
            .collect();
        match coords {
            Ok(c) if !c.is_empty() => Ok(Vertex::lattice(&c)),
            _ => Err(Error::Format(format!("cannot parse vertex id {s:?}"))),
        }
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if let Some(id) = self.as_id() {
            serializer.serialize_i64(id)
        } else {
            let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
            for c in &self.0 {
                seq.serialize_element(c)?;
            }
            seq.end()
        }
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct VertexVisitor;

        impl<'de> Visitor<'de> for VertexVisitor {
            type Value = Vertex;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer id or an array of integer coordinates")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Vertex, E> {
                Ok(Vertex::id(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Vertex, E> {
                i64::try_from(v)
                    .map(Vertex::id)
                    .map_err(|_| E::custom("vertex id out of range"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Vertex, E> {
                v.parse().map_err(E::custom)
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Vertex, A::Error> {
                let mut coords = SmallVec::new();
                while let Some(c) = seq.next_element::<i64>()? {
                    coords.push(c);
                }
                if coords.is_empty() {
                    return Err(de::Error::custom("empty coordinate tuple"));
                }
                Ok(Vertex(coords))
            }
        }

        deserializer.deserialize_any(VertexVisitor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    FiniteExplicit,
    ProceduralOracle,
}

/// Declared properties of a graph. For built-in families these are known;
/// for user graphs they are `None` and can only be probed heuristically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetadata {
    pub name: String,
    pub transient: Option<bool>,
    pub max_degree: Option<usize>,
    pub standard_weights: bool,
}

impl GraphMetadata {
    fn unknown(name: &str) -> Self {
        GraphMetadata {
            name: name.to_string(),
            transient: None,
            max_degree: None,
            standard_weights: false,
        }
    }
}

/// A locally finite, symmetric weighted graph with a potential.
pub trait Graph: Send + Sync {
    fn kind(&self) -> GraphKind;

    fn root(&self) -> Vertex;

    fn contains(&self, x: &Vertex) -> bool;

    /// Neighbors with their (positive) edge weights, sorted by vertex id.
    fn neighbors(&self, x: &Vertex) -> Vec<(Vertex, f64)>;

    fn potential(&self, _x: &Vertex) -> f64 {
        0.0
    }

    fn metadata(&self) -> GraphMetadata;

    fn weight(&self, x: &Vertex, y: &Vertex) -> f64 {
        self.neighbors(x)
            .into_iter()
            .find(|(z, _)| z == y)
            .map_or(0.0, |(_, b)| b)
    }

    fn degree(&self, x: &Vertex) -> usize {
        self.neighbors(x).len()
    }

    /// Combinatorial ball of the given radius around [`Graph::root`], in BFS order.
    fn ball(&self, radius: usize) -> Vec<Vertex> {
        ball(self, &self.root(), radius)
    }
}

pub type SharedGraph = Arc<dyn Graph>;

/// BFS layers around `root` up to `radius`; each layer sorted by vertex id.
pub fn bfs_layers<G: Graph + ?Sized>(graph: &G, root: &Vertex, radius: usize) -> Vec<Vec<Vertex>> {
    let mut seen: HashSet<Vertex> = HashSet::new();
    seen.insert(root.clone());
    let mut layers = vec![vec![root.clone()]];
    for _ in 0..radius {
        let mut next = Vec::new();
        for x in layers.last().unwrap() {
            for (y, _) in graph.neighbors(x) {
                if seen.insert(y.clone()) {
                    next.push(y);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        next.sort();
        layers.push(next);
    }
    layers
}

/// Vertices at combinatorial distance at most `radius` from `root`, BFS order
/// with id tie-break.
pub fn ball<G: Graph + ?Sized>(graph: &G, root: &Vertex, radius: usize) -> Vec<Vertex> {
    bfs_layers(graph, root, radius).into_iter().flatten().collect()
}

/// Increasing family of balls around the root of a graph.
#[derive(Clone)]
pub struct Exhaustion {
    graph: SharedGraph,
}

impl Exhaustion {
    pub fn new(graph: SharedGraph) -> Self {
        Exhaustion { graph }
    }

    pub fn ball(&self, radius: usize) -> Vec<Vertex> {
        self.graph.ball(radius)
    }

    /// `B_outer \ B_inner`, in the BFS order of the outer ball.
    pub fn annulus(&self, outer: usize, inner: usize) -> Vec<Vertex> {
        let inner: HashSet<Vertex> = self.graph.ball(inner).into_iter().collect();
        self.graph
            .ball(outer)
            .into_iter()
            .filter(|x| !inner.contains(x))
            .collect()
    }

    /// Vertices of `region` adjacent to something outside it.
    pub fn boundary_layer(&self, region: &[Vertex]) -> Vec<Vertex> {
        boundary_layer(self.graph.as_ref(), region)
    }
}

pub fn boundary_layer<G: Graph + ?Sized>(graph: &G, region: &[Vertex]) -> Vec<Vertex> {
    let set: HashSet<&Vertex> = region.iter().collect();
    region
        .iter()
        .filter(|x| graph.neighbors(x).iter().any(|(y, _)| !set.contains(y)))
        .cloned()
        .collect()
}

// ---------------------------------------------------------------------------
// Finite graphs

#[derive(Debug, Clone)]
struct Edge {
    a: usize,
    b: usize,
    weight: f64,
}

/// An explicit finite graph. Each undirected edge is stored once, so
/// `b(x,y) = b(y,x)` holds exactly.
#[derive(Debug, Clone)]
pub struct FiniteGraph {
    vertices: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
    edges: Vec<Edge>,
    // (neighbor index, edge index), sorted by neighbor id
    adjacency: Vec<Vec<(usize, usize)>>,
    potential: Vec<f64>,
    root: usize,
    name: String,
}

impl FiniteGraph {
    /// Builds a connected finite graph. Edges may be listed in either
    /// orientation; a pair listed twice must carry the same weight.
    pub fn new(
        vertices: impl IntoIterator<Item = Vertex>,
        edges: &[(Vertex, Vertex, f64)],
        potential: &BTreeMap<Vertex, f64>,
        root: Option<Vertex>,
    ) -> Result<Self> {
        let mut all: BTreeSet<Vertex> = vertices.into_iter().collect();
        for (x, y, _) in edges {
            all.insert(x.clone());
            all.insert(y.clone());
        }
        for x in potential.keys() {
            if !all.contains(x) {
                return Err(Error::UnknownVertex(x.clone()));
            }
        }
        if all.is_empty() {
            return Err(Error::Format("graph has no vertices".into()));
        }
        let vertices: Vec<Vertex> = all.into_iter().collect();
        let index: HashMap<Vertex, usize> =
            vertices.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();

        let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (x, y, w) in edges {
            if x == y {
                return Err(Error::SelfLoop(x.clone()));
            }
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::NonpositiveWeight {
                    x: x.clone(),
                    y: y.clone(),
                    weight: *w,
                });
            }
            let (i, j) = (index[x], index[y]);
            let key = (i.min(j), i.max(j));
            match pairs.get(&key) {
                Some(&prev) if prev != *w => {
                    return Err(Error::AsymmetricInput {
                        x: x.clone(),
                        y: y.clone(),
                        first: prev,
                        second: *w,
                    })
                }
                _ => {
                    pairs.insert(key, *w);
                }
            }
        }

        let mut adjacency = vec![Vec::new(); vertices.len()];
        let mut stored = Vec::with_capacity(pairs.len());
        for ((a, b), weight) in pairs {
            let e = stored.len();
            stored.push(Edge { a, b, weight });
            adjacency[a].push((b, e));
            adjacency[b].push((a, e));
        }
        for list in &mut adjacency {
            list.sort_by(|p, q| vertices[p.0].cmp(&vertices[q.0]));
        }

        let potential: Vec<f64> = vertices
            .iter()
            .map(|v| potential.get(v).copied().unwrap_or(0.0))
            .collect();
        let root = match root {
            Some(r) => *index.get(&r).ok_or(Error::UnknownVertex(r))?,
            None => 0,
        };

        let graph = FiniteGraph {
            vertices,
            index,
            edges: stored,
            adjacency,
            potential,
            root,
            name: "custom-finite".into(),
        };
        let components = graph.component_count();
        if components > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(graph)
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    fn component_count(&self) -> usize {
        let n = self.vertices.len();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(i) = stack.pop() {
                for &(j, _) in &self.adjacency[i] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        count
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edges, each listed once as `(x, y, b)` with `x < y`.
    pub fn edges(&self) -> impl Iterator<Item = (&Vertex, &Vertex, f64)> + '_ {
        self.edges
            .iter()
            .map(|e| (&self.vertices[e.a], &self.vertices[e.b], e.weight))
    }

    pub fn index_of(&self, x: &Vertex) -> Option<usize> {
        self.index.get(x).copied()
    }

    pub fn set_potential(&mut self, x: &Vertex, q: f64) -> Result<()> {
        let i = self.index_of(x).ok_or_else(|| Error::UnknownVertex(x.clone()))?;
        self.potential[i] = q;
        Ok(())
    }

    /// Exact symmetry check over every stored adjacency entry.
    pub fn is_symmetric(&self) -> bool {
        self.adjacency.iter().enumerate().all(|(i, list)| {
            list.iter().all(|&(j, e)| {
                self.adjacency[j]
                    .iter()
                    .any(|&(k, f)| k == i && self.edges[f].weight == self.edges[e].weight)
            })
        })
    }

    pub fn to_json(&self) -> GraphFile {
        GraphFile {
            vertices: self.vertices.clone(),
            edges: self
                .edges()
                .map(|(x, y, w)| (x.clone(), y.clone(), w))
                .collect(),
            potential: self
                .vertices
                .iter()
                .zip(&self.potential)
                .filter(|(_, &q)| q != 0.0)
                .map(|(v, &q)| (v.to_string(), q))
                .collect(),
            root: Some(self.vertices[self.root].clone()),
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        file.build()
    }
}

impl Graph for FiniteGraph {
    fn kind(&self) -> GraphKind {
        GraphKind::FiniteExplicit
    }

    fn root(&self) -> Vertex {
        self.vertices[self.root].clone()
    }

    fn contains(&self, x: &Vertex) -> bool {
        self.index.contains_key(x)
    }

    fn neighbors(&self, x: &Vertex) -> Vec<(Vertex, f64)> {
        match self.index.get(x) {
            Some(&i) => self.adjacency[i]
                .iter()
                .map(|&(j, e)| (self.vertices[j].clone(), self.edges[e].weight))
                .collect(),
            None => Vec::new(),
        }
    }

    fn potential(&self, x: &Vertex) -> f64 {
        self.index.get(x).map_or(0.0, |&i| self.potential[i])
    }

    fn metadata(&self) -> GraphMetadata {
        let standard = self.edges.iter().all(|e| e.weight == 1.0);
        GraphMetadata {
            name: self.name.clone(),
            transient: None,
            max_degree: self.adjacency.iter().map(Vec::len).max(),
            standard_weights: standard,
        }
    }
}

/// On-disk format: `{"vertices":[ids], "edges":[[i,j,w],...], "potential":{"i":q_i}, "root":id}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    #[serde(default)]
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(Vertex, Vertex, f64)>,
    #[serde(default)]
    pub potential: BTreeMap<String, f64>,
    #[serde(default)]
    pub root: Option<Vertex>,
}

impl GraphFile {
    pub fn build(&self) -> Result<FiniteGraph> {
        let mut potential = BTreeMap::new();
        for (key, q) in &self.potential {
            potential.insert(key.parse::<Vertex>()?, *q);
        }
        FiniteGraph::new(
            self.vertices.iter().cloned(),
            &self.edges,
            &potential,
            self.root.clone(),
        )
    }
}

/// Induced finite subgraph on `B_radius`, keeping the potential. Edges
/// leaving the ball are dropped.
pub fn materialize<G: Graph + ?Sized>(graph: &G, radius: usize) -> Result<FiniteGraph> {
    let vertices = graph.ball(radius);
    let inside: HashSet<&Vertex> = vertices.iter().collect();
    let mut edges = Vec::new();
    let mut potential = BTreeMap::new();
    for x in &vertices {
        let q = graph.potential(x);
        if q != 0.0 {
            potential.insert(x.clone(), q);
        }
        for (y, b) in graph.neighbors(x) {
            if x < &y && inside.contains(&y) {
                edges.push((x.clone(), y, b));
            }
        }
    }
    Ok(FiniteGraph::new(vertices.iter().cloned(), &edges, &potential, Some(graph.root()))?
        .with_name(&format!("{}-ball-{radius}", graph.metadata().name)))
}

// ---------------------------------------------------------------------------
// Procedural families

/// `ℕ₀ = {0, 1, 2, ...}` with unit weights between consecutive integers.
#[derive(Debug, Clone, Copy, Default)]
pub struct HalfLine;

impl Graph for HalfLine {
    fn kind(&self) -> GraphKind {
        GraphKind::ProceduralOracle
    }

    fn root(&self) -> Vertex {
        Vertex::id(0)
    }

    fn contains(&self, x: &Vertex) -> bool {
        x.dim() == 1 && x.head() >= 0
    }

    fn neighbors(&self, x: &Vertex) -> Vec<(Vertex, f64)> {
        if !self.contains(x) {
            return Vec::new();
        }
        let n = x.head();
        let mut out = Vec::with_capacity(2);
        if n > 0 {
            out.push((Vertex::id(n - 1), 1.0));
        }
        out.push((Vertex::id(n + 1), 1.0));
        out
    }

    fn metadata(&self) -> GraphMetadata {
        GraphMetadata {
            name: "halfline".into(),
            transient: Some(false),
            max_degree: Some(2),
            standard_weights: true,
        }
    }

    fn ball(&self, radius: usize) -> Vec<Vertex> {
        (0..=radius as i64).map(Vertex::id).collect()
    }
}

/// `ℤ^d` with unit weights between ℓ¹-neighbors.
#[derive(Debug, Clone, Copy)]
pub struct Lattice {
    dim: usize,
}

impl Lattice {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("lattice dimension must be positive".into()));
        }
        Ok(Lattice { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl Graph for Lattice {
    fn kind(&self) -> GraphKind {
        GraphKind::ProceduralOracle
    }

    fn root(&self) -> Vertex {
        Vertex::origin(self.dim)
    }

    fn contains(&self, x: &Vertex) -> bool {
        x.dim() == self.dim
    }

    fn neighbors(&self, x: &Vertex) -> Vec<(Vertex, f64)> {
        if !self.contains(x) {
            return Vec::new();
        }
        let mut out: Vec<(Vertex, f64)> = (0..self.dim)
            .flat_map(|i| [(x.shifted(i, -1), 1.0), (x.shifted(i, 1), 1.0)])
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn metadata(&self) -> GraphMetadata {
        GraphMetadata {
            name: format!("lattice-{}", self.dim),
            transient: Some(self.dim >= 3),
            max_degree: Some(2 * self.dim),
            standard_weights: true,
        }
    }
}

/// The `degree`-regular tree with BFS numbering: the root `0` has children
/// `1..=degree`, every other vertex has one parent and `degree - 1` children.
#[derive(Debug, Clone, Copy)]
pub struct RegularTree {
    degree: i64,
}

impl RegularTree {
    pub fn new(degree: usize) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Domain("tree degree must be at least 2".into()));
        }
        Ok(RegularTree {
            degree: degree as i64,
        })
    }

    /// Distance from the root.
    pub fn depth(&self, x: &Vertex) -> usize {
        let mut k = x.head();
        let mut depth = 0;
        while let Some(p) = self.parent(k) {
            k = p;
            depth += 1;
        }
        depth
    }

    fn parent(&self, k: i64) -> Option<i64> {
        let d = self.degree;
        match k {
            0 => None,
            k if k <= d => Some(0),
            k => Some((k - d - 1) / (d - 1) + 1),
        }
    }

    fn children(&self, k: i64) -> std::ops::Range<i64> {
        let d = self.degree;
        if k == 0 {
            1..d + 1
        } else {
            let first = d + 1 + (k - 1) * (d - 1);
            first..first + (d - 1)
        }
    }
}

impl Graph for RegularTree {
    fn kind(&self) -> GraphKind {
        GraphKind::ProceduralOracle
    }

    fn root(&self) -> Vertex {
        Vertex::id(0)
    }

    fn contains(&self, x: &Vertex) -> bool {
        x.dim() == 1 && x.head() >= 0
    }

    fn neighbors(&self, x: &Vertex) -> Vec<(Vertex, f64)> {
        if !self.contains(x) {
            return Vec::new();
        }
        let k = x.head();
        let mut out: Vec<(Vertex, f64)> = self.parent(k).into_iter().map(|p| (Vertex::id(p), 1.0)).collect();
        out.extend(self.children(k).map(|c| (Vertex::id(c), 1.0)));
        out
    }

    fn metadata(&self) -> GraphMetadata {
        GraphMetadata {
            name: format!("tree-{}", self.degree),
            transient: Some(self.degree >= 3),
            max_degree: Some(self.degree as usize),
            standard_weights: true,
        }
    }
}

/// `X \ K` for a finite set `K`: edges into `K` are removed and their
/// weights added to the potential, `q'(x) = q(x) + Σ_{z∈K} b(x,z)`.
/// Balls are those of the parent graph with `K` removed.
#[derive(Clone)]
pub struct Restricted {
    inner: SharedGraph,
    removed: BTreeSet<Vertex>,
    root: Vertex,
}

impl Restricted {
    pub fn new(inner: SharedGraph, removed: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let removed: BTreeSet<Vertex> = removed.into_iter().collect();
        let root = inner.root();
        let root = if removed.contains(&root) {
            let mut radius = 1;
            loop {
                if let Some(r) = inner.ball(radius).into_iter().find(|x| !removed.contains(x)) {
                    break r;
                }
                if radius > removed.len() + 1 {
                    return Err(Error::Domain("restriction removes every vertex".into()));
                }
                radius += 1;
            }
        } else {
            root
        };
        Ok(Restricted {
            inner,
            removed,
            root,
        })
    }

    pub fn removed(&self) -> &BTreeSet<Vertex> {
        &self.removed
    }

    pub fn inner(&self) -> &SharedGraph {
        &self.inner
    }
}

impl Graph for Restricted {
    fn kind(&self) -> GraphKind {
        self.inner.kind()
    }

    fn root(&self) -> Vertex {
        self.root.clone()
    }

    fn contains(&self, x: &Vertex) -> bool {
        self.inner.contains(x) && !self.removed.contains(x)
    }

    fn neighbors(&self, x: &Vertex) -> Vec<(Vertex, f64)> {
        if self.removed.contains(x) {
            return Vec::new();
        }
        self.inner
            .neighbors(x)
            .into_iter()
            .filter(|(y, _)| !self.removed.contains(y))
            .collect()
    }

    fn potential(&self, x: &Vertex) -> f64 {
        if self.removed.contains(x) {
            return 0.0;
        }
        let killed: f64 = self
            .inner
            .neighbors(x)
            .iter()
            .filter(|(y, _)| self.removed.contains(y))
            .map(|(_, b)| b)
            .sum();
        self.inner.potential(x) + killed
    }

    fn metadata(&self) -> GraphMetadata {
        let mut meta = self.inner.metadata();
        let removed: Vec<String> = self.removed.iter().map(|v| v.to_string()).collect();
        meta.name = format!("{}-dirichlet[{}]", meta.name, removed.join(","));
        if !self.removed.is_empty() {
            meta.transient = Some(true);
        }
        meta
    }

    fn ball(&self, radius: usize) -> Vec<Vertex> {
        self.inner
            .ball(radius)
            .into_iter()
            .filter(|x| !self.removed.contains(x))
            .collect()
    }
}

/// The half-line with a Dirichlet condition at 0: vertices `{1, 2, ...}` and `q(1) = 1`.
pub fn halfline_dirichlet() -> Restricted {
    Restricted::new(Arc::new(HalfLine), [Vertex::id(0)]).expect("0 is a single vertex")
}

type NeighborFn = Box<dyn Fn(&Vertex) -> Vec<(Vertex, f64)> + Send + Sync>;

/// User-supplied neighbor oracle. Symmetry is only spot-checked.
pub struct OracleGraph {
    root: Vertex,
    neighbors: NeighborFn,
    potential: Box<dyn Fn(&Vertex) -> f64 + Send + Sync>,
    name: String,
}

impl OracleGraph {
    pub fn new(
        name: &str,
        root: Vertex,
        neighbors: impl Fn(&Vertex) -> Vec<(Vertex, f64)> + Send + Sync + 'static,
        potential: impl Fn(&Vertex) -> f64 + Send + Sync + 'static,
    ) -> Self {
        OracleGraph {
            root,
            neighbors: Box::new(neighbors),
            potential: Box::new(potential),
            name: name.to_string(),
        }
    }
}

impl Graph for OracleGraph {
    fn kind(&self) -> GraphKind {
        GraphKind::ProceduralOracle
    }

    fn root(&self) -> Vertex {
        self.root.clone()
    }

    fn contains(&self, _x: &Vertex) -> bool {
        true
    }

    fn neighbors(&self, x: &Vertex) -> Vec<(Vertex, f64)> {
        let mut out = (self.neighbors)(x);
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    fn potential(&self, x: &Vertex) -> f64 {
        (self.potential)(x)
    }

    fn metadata(&self) -> GraphMetadata {
        GraphMetadata::unknown(&self.name)
    }
}

/// Checks `b(x,y) = b(y,x)`, zero diagonal and positive weights on every edge
/// leaving `B_radius`. Returns the first offending edge.
pub fn spot_check_symmetry<G: Graph + ?Sized>(graph: &G, radius: usize) -> Result<()> {
    for x in graph.ball(radius) {
        for (y, b) in graph.neighbors(&x) {
            if y == x {
                return Err(Error::SelfLoop(x));
            }
            if !(b > 0.0) {
                return Err(Error::NonpositiveWeight { x, y, weight: b });
            }
            let back = graph.weight(&y, &x);
            if back != b {
                return Err(Error::AsymmetricInput {
                    x,
                    y,
                    first: b,
                    second: back,
                });
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Functions on graphs

#[derive(Clone)]
enum Repr {
    Finite(Arc<BTreeMap<Vertex, f64>>),
    Oracle(Arc<dyn Fn(&Vertex) -> f64 + Send + Sync>),
}

/// A real-valued function on vertices: either finitely supported (zero off
/// its support) or a closed-form oracle.
#[derive(Clone)]
pub struct GraphFunction {
    repr: Repr,
    support_hint: Option<Arc<Vec<Vertex>>>,
}

impl GraphFunction {
    pub fn finite(values: BTreeMap<Vertex, f64>) -> Self {
        GraphFunction {
            repr: Repr::Finite(Arc::new(values)),
            support_hint: None,
        }
    }

    pub fn from_fn(f: impl Fn(&Vertex) -> f64 + Send + Sync + 'static) -> Self {
        GraphFunction {
            repr: Repr::Oracle(Arc::new(f)),
            support_hint: None,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_fn(move |_| c)
    }

    pub fn delta(x: Vertex) -> Self {
        Self::finite(BTreeMap::from([(x, 1.0)]))
    }

    /// Attach a finite support to an oracle; the caller asserts the function
    /// vanishes elsewhere.
    pub fn with_support(mut self, support: Vec<Vertex>) -> Self {
        self.support_hint = Some(Arc::new(support));
        self
    }

    pub fn eval(&self, x: &Vertex) -> f64 {
        match &self.repr {
            Repr::Finite(map) => map.get(x).copied().unwrap_or(0.0),
            Repr::Oracle(f) => f(x),
        }
    }

    pub fn is_finitely_supported(&self) -> bool {
        matches!(self.repr, Repr::Finite(_)) || self.support_hint.is_some()
    }

    /// Finite support in sorted order, if one is known.
    pub fn support(&self) -> Option<Vec<Vertex>> {
        if let Some(hint) = &self.support_hint {
            let mut s = hint.as_ref().clone();
            s.sort();
            s.dedup();
            return Some(s);
        }
        match &self.repr {
            Repr::Finite(map) => Some(map.iter().filter(|(_, &v)| v != 0.0).map(|(k, _)| k.clone()).collect()),
            Repr::Oracle(_) => None,
        }
    }

    pub fn map(&self, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> GraphFunction {
        let inner = self.clone();
        GraphFunction {
            repr: Repr::Oracle(Arc::new(move |x| g(inner.eval(x)))),
            support_hint: self.support_hint.clone(),
        }
    }

    pub fn scale(&self, c: f64) -> GraphFunction {
        match &self.repr {
            Repr::Finite(map) => GraphFunction {
                repr: Repr::Finite(Arc::new(map.iter().map(|(k, v)| (k.clone(), c * v)).collect())),
                support_hint: self.support_hint.clone(),
            },
            Repr::Oracle(_) => self.map(move |v| c * v),
        }
    }

    /// Pointwise combination of two functions.
    pub fn zip(&self, other: &GraphFunction, g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> GraphFunction {
        let (a, b) = (self.clone(), other.clone());
        GraphFunction::from_fn(move |x| g(a.eval(x), b.eval(x)))
    }

    /// Tabulate on the given vertices into a finitely supported function.
    pub fn tabulate(&self, vertices: &[Vertex]) -> GraphFunction {
        GraphFunction::finite(vertices.iter().map(|x| (x.clone(), self.eval(x))).collect())
    }
}

impl fmt::Debug for GraphFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Finite(map) => f.debug_map().entries(map.iter()).finish(),
            Repr::Oracle(_) => f.write_str("GraphFunction(<oracle>)"),
        }
    }
}

// ---------------------------------------------------------------------------
// Assumption checks

#[derive(Debug, Clone, Serialize)]
pub struct LevelCount {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Finite-sample evidence for the properness and anti-oscillation assumptions.
/// Properness on an infinite graph is not decidable from a ball, so the report
/// is advisory only.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub sample_radius: usize,
    pub sampled_vertices: usize,
    pub edge_ratio_sup: f64,
    pub edge_ratio_argmax: Option<(Vertex, Vertex)>,
    /// Counts of sampled vertices per dyadic level band `[2^k, 2^{k+1})`.
    pub properness_witness: Vec<LevelCount>,
    pub advisory: bool,
}

pub fn check_assumptions<G: Graph + ?Sized>(
    u0: &GraphFunction,
    graph: &G,
    sample_radius: usize,
) -> Result<AssumptionReport> {
    let region = graph.ball(sample_radius);
    let inside: HashSet<&Vertex> = region.iter().collect();
    let mut values = HashMap::with_capacity(region.len());
    for x in &region {
        let v = u0.eval(x);
        if !(v > 0.0) {
            return Err(Error::NonpositiveFunction {
                vertex: x.clone(),
                value: v,
            });
        }
        values.insert(x.clone(), v);
    }

    let mut sup = 1.0f64;
    let mut argmax = None;
    for x in &region {
        for (y, _) in graph.neighbors(x) {
            if !inside.contains(&y) {
                continue;
            }
            let ratio = values[x] / values[&y];
            if ratio > sup {
                sup = ratio;
                argmax = Some((x.clone(), y.clone()));
            }
        }
    }

    let mut bands: BTreeMap<i32, usize> = BTreeMap::new();
    for v in values.values() {
        *bands.entry(v.log2().floor() as i32).or_default() += 1;
    }
    let properness_witness = bands
        .into_iter()
        .map(|(k, count)| LevelCount {
            lo: 2f64.powi(k),
            hi: 2f64.powi(k + 1),
            count,
        })
        .collect();

    Ok(AssumptionReport {
        sample_radius,
        sampled_vertices: region.len(),
        edge_ratio_sup: sup,
        edge_ratio_argmax: argmax,
        properness_witness,
        advisory: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> FiniteGraph {
        let e = [
            (Vertex::id(0), Vertex::id(1), 1.0),
            (Vertex::id(1), Vertex::id(2), 1.0),
        ];
        FiniteGraph::new([], &e, &BTreeMap::new(), None).unwrap()
    }

    #[test]
    fn path_degree() {
        let g = path3();
        assert_eq!(g.degree(&Vertex::id(1)), 2);
        assert!(g.is_symmetric());
    }

    #[test]
    fn conflicting_weights_rejected() {
        let e = [
            (Vertex::id(0), Vertex::id(1), 1.0),
            (Vertex::id(1), Vertex::id(0), 2.0),
        ];
        let err = FiniteGraph::new([], &e, &BTreeMap::new(), None).unwrap_err();
        assert!(matches!(err, Error::AsymmetricInput { .. }));
    }

    #[test]
    fn repeated_identical_edge_accepted() {
        let e = [
            (Vertex::id(0), Vertex::id(1), 1.5),
            (Vertex::id(1), Vertex::id(0), 1.5),
        ];
        let g = FiniteGraph::new([], &e, &BTreeMap::new(), None).unwrap();
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn invalid_edges_rejected() {
        let loops = [(Vertex::id(0), Vertex::id(0), 1.0)];
        assert!(matches!(
            FiniteGraph::new([], &loops, &BTreeMap::new(), None),
            Err(Error::SelfLoop(_))
        ));
        let zero = [(Vertex::id(0), Vertex::id(1), 0.0)];
        assert!(matches!(
            FiniteGraph::new([], &zero, &BTreeMap::new(), None),
            Err(Error::NonpositiveWeight { .. })
        ));
        let split = [
            (Vertex::id(0), Vertex::id(1), 1.0),
            (Vertex::id(2), Vertex::id(3), 1.0),
        ];
        assert!(matches!(
            FiniteGraph::new([], &split, &BTreeMap::new(), None),
            Err(Error::Disconnected { components: 2 })
        ));
    }

    #[test]
    fn single_vertex_graph() {
        let g = FiniteGraph::new([Vertex::id(7)], &[], &BTreeMap::new(), None).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.ball(3), vec![Vertex::id(7)]);
    }

    #[test]
    fn balls() {
        assert_eq!(
            HalfLine.ball(3),
            (0..4).map(Vertex::id).collect::<Vec<_>>()
        );
        let z3 = Lattice::new(3).unwrap();
        assert_eq!(z3.ball(1).len(), 7);
        // ℓ¹ ball of radius 2 in ℤ³: 1 + 6 + 18
        assert_eq!(z3.ball(2).len(), 25);
        // BFS order: the root first, then sorted layers
        let b = z3.ball(1);
        assert_eq!(b[0], Vertex::origin(3));
        assert!(b[1..].windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn halfline_ball_override_matches_bfs() {
        let generic = ball(&HalfLine, &Vertex::id(0), 20);
        assert_eq!(generic, HalfLine.ball(20));
    }

    #[test]
    fn tree_structure() {
        let t = RegularTree::new(3).unwrap();
        for k in 0..200 {
            let x = Vertex::id(k);
            assert_eq!(t.degree(&x), 3);
            for (y, _) in t.neighbors(&x) {
                assert!(t.neighbors(&y).iter().any(|(z, _)| z == &x));
            }
        }
        // 1 + 3 + 6 + 12
        assert_eq!(t.ball(3).len(), 22);
        let layers = bfs_layers(&t, &Vertex::id(0), 3);
        for (k, layer) in layers.iter().enumerate() {
            assert!(layer.iter().all(|x| t.depth(x) == k));
        }
        spot_check_symmetry(&t, 4).unwrap();
    }

    #[test]
    fn restriction_moves_edges_into_potential() {
        let g = halfline_dirichlet();
        assert_eq!(g.root(), Vertex::id(1));
        assert_eq!(g.potential(&Vertex::id(1)), 1.0);
        assert_eq!(g.potential(&Vertex::id(2)), 0.0);
        assert_eq!(g.neighbors(&Vertex::id(1)), vec![(Vertex::id(2), 1.0)]);
        assert_eq!(g.ball(3), vec![Vertex::id(1), Vertex::id(2), Vertex::id(3)]);
    }

    #[test]
    fn materialized_halfline_matches_oracle() {
        let n = 12;
        let g = materialize(&HalfLine, n).unwrap();
        assert_eq!(g.len(), n + 1);
        for x in HalfLine.ball(n - 1) {
            assert_eq!(g.neighbors(&x), HalfLine.neighbors(&x));
        }
        // the last vertex loses its outward edge
        assert_eq!(g.degree(&Vertex::id(n as i64)), 1);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"vertices":[0,1,2],"edges":[[0,1,1.0],[1,2,0.5]],"potential":{"2":0.25},"root":0}"#;
        let g = FiniteGraph::from_json_str(text).unwrap();
        assert_eq!(g.potential(&Vertex::id(2)), 0.25);
        assert_eq!(g.weight(&Vertex::id(2), &Vertex::id(1)), 0.5);
        let back = serde_json::to_string(&g.to_json()).unwrap();
        let again = FiniteGraph::from_json_str(&back).unwrap();
        assert_eq!(again.vertices(), g.vertices());
        assert_eq!(again.to_json().edges, g.to_json().edges);

        let lattice_vertex = Vertex::lattice(&[1, -2, 3]);
        let s = serde_json::to_string(&lattice_vertex).unwrap();
        assert_eq!(s, "[1,-2,3]");
        assert_eq!(serde_json::from_str::<Vertex>(&s).unwrap(), lattice_vertex);
        assert_eq!(lattice_vertex.to_string().parse::<Vertex>().unwrap(), lattice_vertex);
    }

    #[test]
    fn assumptions_on_halfline() {
        let g = halfline_dirichlet();
        let u0 = GraphFunction::from_fn(|x| x.head() as f64);
        let r = check_assumptions(&u0, &g, 100).unwrap();
        assert_eq!(r.edge_ratio_sup, 2.0);
        assert_eq!(r.edge_ratio_argmax, Some((Vertex::id(2), Vertex::id(1))));
        assert!(r.advisory);

        let one = GraphFunction::constant(1.0);
        assert_eq!(check_assumptions(&one, &g, 10).unwrap().edge_ratio_sup, 1.0);

        let bad = GraphFunction::from_fn(|x| x.head() as f64);
        assert!(matches!(
            check_assumptions(&bad, &HalfLine, 5),
            Err(Error::NonpositiveFunction { .. })
        ));
    }
}
