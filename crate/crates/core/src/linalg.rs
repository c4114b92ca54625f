//! Sparse symmetric matrices, a Jacobi-preconditioned conjugate gradient
//! solver, envelope Cholesky factorization and a certified smallest
//! generalized eigenvalue for pairs `(A, diag(m))`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::numeric::CompensatedSum;

/// Symmetric matrix in compressed-row form, both triangles stored.
#[derive(Debug, Clone)]
pub struct SparseSym {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// From `(row, col, value)` entries of the lower triangle including the
    /// diagonal; duplicates are summed.
    pub fn from_lower(n: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in entries {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let mut k = 0;
            while k < row.len() {
                let (c, mut v) = row[k];
                k += 1;
                while k < row.len() && row[k].0 == c {
                    v += row[k].1;
                    k += 1;
                }
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseSym {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).find(|&(j, _)| j == i).map_or(0.0, |e| e.1))
            .collect()
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        dot(x, &y)
    }

    /// `A - σ·diag(m)`.
    pub fn shifted(&self, sigma: f64, mass: &[f64]) -> SparseSym {
        let mut out = self.clone();
        for (i, &m) in mass.iter().enumerate() {
            for k in out.row_ptr[i]..out.row_ptr[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] -= sigma * m;
                }
            }
        }
        out
    }

    /// Number of entries inside the lower envelope (skyline) profile.
    pub fn envelope_size(&self) -> usize {
        (0..self.n)
            .map(|i| i + 1 - self.row(i).map(|(j, _)| j).min().unwrap_or(i).min(i))
            .sum()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    for (x, y) in a.iter().zip(b) {
        s.add(x * y);
    }
    s.value()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Direct factorization when the envelope is small, otherwise CG.
    Auto,
    Cholesky,
    ConjugateGradient,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearSolveSpec {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub solver: SolverKind,
    /// Upper bound on envelope entries for which `Auto` picks Cholesky.
    pub direct_limit: usize,
}

impl Default for LinearSolveSpec {
    fn default() -> Self {
        LinearSolveSpec {
            tolerance: 1e-10,
            max_iterations: 100_000,
            solver: SolverKind::Auto,
            direct_limit: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖b - Ax‖ / ‖b‖`.
    pub relative_residual: f64,
    pub method: SolverKind,
}

pub fn solve(a: &SparseSym, b: &[f64], spec: &LinearSolveSpec) -> Result<SolveOutcome> {
    let direct = match spec.solver {
        SolverKind::Cholesky => true,
        SolverKind::ConjugateGradient => false,
        SolverKind::Auto => a.envelope_size() <= spec.direct_limit,
    };
    if direct {
        let factor = EnvelopeCholesky::factor(a)?;
        let x = factor.solve(b);
        let relative_residual = residual_norm(a, &x, b);
        Ok(SolveOutcome {
            x,
            iterations: 0,
            relative_residual,
            method: SolverKind::Cholesky,
        })
    } else {
        pcg(a, b, spec)
    }
}

fn residual_norm(a: &SparseSym, x: &[f64], b: &[f64]) -> f64 {
    let mut ax = vec![0.0; a.n];
    a.matvec(x, &mut ax);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

/// Conjugate gradients with Jacobi preconditioning.
pub fn pcg(a: &SparseSym, b: &[f64], spec: &LinearSolveSpec) -> Result<SolveOutcome> {
    let n = a.n;
    let diag = a.diagonal();
    if let Some((row, &pivot)) = diag.iter().enumerate().find(|(_, &d)| !(d > 0.0)) {
        return Err(Error::NotPositiveDefinite { row, pivot });
    }
    let nb = norm(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(SolveOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
            method: SolverKind::ConjugateGradient,
        });
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=spec.max_iterations {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite { row: 0, pivot: pap });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= spec.tolerance * nb {
            // confirm against the true residual
            let true_res = residual_norm(a, &x, b);
            if true_res <= spec.tolerance {
                return Ok(SolveOutcome {
                    x,
                    iterations: it,
                    relative_residual: true_res,
                    method: SolverKind::ConjugateGradient,
                });
            }
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDivergence {
        iterations: spec.max_iterations,
        residual: residual_norm(a, &x, b),
    })
}

/// `A = L Lᵀ` stored row-wise inside the lower envelope of `A`.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &SparseSym) -> Result<Self> {
        let n = a.n;
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i).map(|(j, _)| j).min().unwrap_or(i).min(i))
            .collect();
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            start.push(start[i] + i + 1 - first[i]);
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    data[start[i] + j - first[i]] = v;
                }
            }
        }
        let mut f = EnvelopeCholesky { first, start, data };
        for i in 0..n {
            let fi = f.first[i];
            for j in fi..=i {
                let fj = f.first[j];
                let lo = fi.max(fj);
                let mut s = f.data[f.start[i] + j - fi];
                let ri = f.start[i] - fi;
                let rj = f.start[j] - fj;
                for k in lo..j {
                    s -= f.data[ri + k] * f.data[rj + k];
                }
                if j == i {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    f.data[ri + i] = s.sqrt();
                } else {
                    f.data[ri + j] = s / f.data[rj + j];
                }
            }
        }
        Ok(f)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.first.len();
        let mut y = b.to_vec();
        for i in 0..n {
            let ri = self.start[i] - self.first[i];
            let lo = self.first[i];
            let s: f64 = self.data[ri + lo..ri + i].iter().zip(&y[lo..i]).map(|(l, yk)| l * yk).sum();
            y[i] = (y[i] - s) / self.data[ri + i];
        }
        for i in (0..n).rev() {
            let ri = self.start[i] - self.first[i];
            y[i] /= self.data[ri + i];
            let yi = y[i];
            let lo = self.first[i];
            for (yk, l) in y[lo..i].iter_mut().zip(&self.data[ri + lo..ri + i]) {
                *yk -= l * yi;
            }
        }
        y
    }
}

/// Index of a finite vertex set in a fixed order.
#[derive(Debug, Clone)]
pub struct Region {
    pub vertices: Vec<Vertex>,
    index: HashMap<Vertex, usize>,
}

impl Region {
    pub fn new(vertices: Vec<Vertex>) -> Self {
        let index = vertices.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        Region { vertices, index }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn index_of(&self, x: &Vertex) -> Option<usize> {
        self.index.get(x).copied()
    }
}

/// Matrix of the form `h` on functions supported in `region`, the exterior
/// frozen at zero: `A_xx = Σ_y b(x,y) + q(x)`, `A_xy = -b(x,y)`.
pub fn assemble_form<G: Graph + ?Sized>(graph: &G, region: &Region) -> SparseSym {
    let mut entries = Vec::new();
    for (i, x) in region.vertices.iter().enumerate() {
        let mut diag = CompensatedSum::new();
        for (y, b) in graph.neighbors(x) {
            diag.add(b);
            if let Some(j) = region.index_of(&y) {
                if j < i {
                    entries.push((i, j, -b));
                }
            }
        }
        diag.add(graph.potential(x));
        entries.push((i, i, diag.value()));
    }
    SparseSym::from_lower(region.len(), &entries)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenSpec {
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for EigenSpec {
    fn default() -> Self {
        EigenSpec {
            rel_tol: 1e-10,
            max_steps: 400,
        }
    }
}

/// Smallest generalized eigenvalue with a certified bracket.
#[derive(Debug, Clone, Serialize)]
pub struct GeneralizedEigen {
    pub value: f64,
    /// `A - lower·M` admits a Cholesky factorization.
    pub lower: f64,
    /// Rayleigh quotient of `vector` or a shift at which factorization failed.
    pub upper: f64,
    pub vector: Vec<f64>,
    pub factorizations: usize,
}

/// `min φᵀAφ / φᵀMφ` over `φ` with `φᵀMφ > 0`, `M = diag(mass) ≥ 0`.
///
/// Zero-mass rows stay in the trial space. Shift-and-invert iteration with
/// the shift kept strictly below the eigenvalue gives Rayleigh upper bounds;
/// each successful factorization of `A - σM` is a lower bound `σ`, and each
/// failed one an upper bound.
pub fn smallest_generalized_eigen(a: &SparseSym, mass: &[f64], spec: &EigenSpec) -> Result<GeneralizedEigen> {
    let n = a.dim();
    if mass.len() != n {
        return Err(Error::EigSolverFailure("mass vector has wrong length".into()));
    }
    if mass.iter().any(|&m| m < 0.0 || !m.is_finite()) {
        return Err(Error::EigSolverFailure("mass must be finite and nonnegative".into()));
    }
    let total_mass: f64 = mass.iter().sum();
    if !(total_mass > 0.0) {
        return Err(Error::ZeroWeightRegion);
    }
    let mut factorizations = 0;

    // a first shift with A - σM positive definite
    let mut lo = 0.0;
    let mut factor = loop {
        factorizations += 1;
        match EnvelopeCholesky::factor(&a.shifted(lo, mass)) {
            Ok(f) => break f,
            Err(_) if factorizations < 60 => {
                lo = if lo == 0.0 { -1.0 } else { 2.0 * lo };
            }
            Err(e) => {
                return Err(Error::EigSolverFailure(format!(
                    "no positive definite shift found ({e})"
                )))
            }
        }
    };

    let norm_m = |x: &[f64]| x.iter().zip(mass).map(|(v, m)| v * v * m).sum::<f64>().sqrt();
    let mut x: Vec<f64> = mass.iter().map(|m| m / total_mass.sqrt()).collect();
    let nx = norm_m(&x);
    x.iter_mut().for_each(|v| *v /= nx);

    let mut hi = f64::INFINITY;
    let mut rq = f64::INFINITY;
    let mut best = x.clone();
    for _ in 0..spec.max_steps {
        // a few shift-invert steps at the current certified shift
        for _ in 0..4 {
            let mx: Vec<f64> = x.iter().zip(mass).map(|(v, m)| v * m).collect();
            let mut y = factor.solve(&mx);
            let ny = norm_m(&y);
            if !(ny > 0.0) || !ny.is_finite() {
                return Err(Error::EigSolverFailure("iteration collapsed".into()));
            }
            y.iter_mut().for_each(|v| *v /= ny);
            let q = a.quadratic(&y);
            if q < rq {
                rq = q;
                best = y.clone();
            }
            x = y;
        }
        hi = hi.min(rq);
        let width = hi - lo;
        let scale = hi.abs().max(1e-300);
        if width <= spec.rel_tol * scale {
            break;
        }
        // try to certify just below the Rayleigh bound, else bisect
        let candidate = hi - 0.5 * spec.rel_tol * scale;
        let sigma = if candidate > lo + 0.9 * width { candidate } else { lo + 0.5 * width };
        factorizations += 1;
        match EnvelopeCholesky::factor(&a.shifted(sigma, mass)) {
            Ok(f) => {
                lo = sigma;
                factor = f;
            }
            Err(_) => {
                hi = sigma;
                // move the shift toward the bracket midpoint for faster iteration
                let mid = lo + 0.5 * (hi - lo);
                factorizations += 1;
                if let Ok(f) = EnvelopeCholesky::factor(&a.shifted(mid, mass)) {
                    lo = mid;
                    factor = f;
                }
            }
        }
        if hi - lo <= spec.rel_tol * hi.abs().max(1e-300) {
            break;
        }
    }
    if !(hi - lo <= spec.rel_tol * hi.abs().max(1e-300) * 1.0001) {
        return Err(Error::EigSolverFailure(format!(
            "bracket [{lo}, {hi}] did not close within {} steps",
            spec.max_steps
        )));
    }
    Ok(GeneralizedEigen {
        value: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        vector: best,
        factorizations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_laplacian(n: usize) -> SparseSym {
        // Dirichlet at both ends
        let mut e = Vec::new();
        for i in 0..n {
            e.push((i, i, 2.0));
            if i > 0 {
                e.push((i, i - 1, -1.0));
            }
        }
        SparseSym::from_lower(n, &e)
    }

    #[test]
    fn cholesky_solves_path() {
        let a = path_laplacian(50);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let f = EnvelopeCholesky::factor(&a).unwrap();
        let x = f.solve(&b);
        assert!(residual_norm(&a, &x, &b) < 1e-13);
    }

    #[test]
    fn cg_matches_cholesky() {
        let a = path_laplacian(200);
        let b: Vec<f64> = (0..200).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let spec = LinearSolveSpec {
            solver: SolverKind::ConjugateGradient,
            ..Default::default()
        };
        let cg = solve(&a, &b, &spec).unwrap();
        let direct = solve(&a, &b, &LinearSolveSpec::default()).unwrap();
        assert_eq!(direct.method, SolverKind::Cholesky);
        assert!(cg.relative_residual <= 1e-10);
        let diff = cg.x.iter().zip(&direct.x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        let size = direct.x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-6 * size);
    }

    #[test]
    fn indefinite_rejected() {
        let a = SparseSym::from_lower(2, &[(0, 0, 1.0), (1, 1, 1.0), (1, 0, 2.0)]);
        assert!(matches!(EnvelopeCholesky::factor(&a), Err(Error::NotPositiveDefinite { row: 1, .. })));
    }

    #[test]
    fn cg_iteration_cap() {
        let a = path_laplacian(400);
        let b = vec![1.0; 400];
        let spec = LinearSolveSpec {
            solver: SolverKind::ConjugateGradient,
            max_iterations: 3,
            ..Default::default()
        };
        assert!(matches!(solve(&a, &b, &spec), Err(Error::SolverDivergence { .. })));
    }

    #[test]
    fn eigen_of_path() {
        let n = 40;
        let a = path_laplacian(n);
        let mass = vec![1.0; n];
        let e = smallest_generalized_eigen(&a, &mass, &EigenSpec::default()).unwrap();
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((e.value - exact).abs() <= 1e-9 * exact, "{} vs {exact}", e.value);
        assert!(e.lower <= exact * (1.0 + 1e-12) && exact <= e.upper * (1.0 + 1e-12));
    }

    #[test]
    fn zero_mass_rows_are_eliminated() {
        // mass only on the middle vertex of a 3-path: λ = Schur complement
        let a = path_laplacian(3);
        let e = smallest_generalized_eigen(&a, &[0.0, 1.0, 0.0], &EigenSpec::default()).unwrap();
        // 2 - 1/2 - 1/2
        assert!((e.value - 1.0).abs() <= 1e-9);
        assert!(matches!(
            smallest_generalized_eigen(&a, &[0.0; 3], &EigenSpec::default()),
            Err(Error::ZeroWeightRegion)
        ));
    }

    #[test]
    fn negative_eigenvalue() {
        let a = SparseSym::from_lower(2, &[(0, 0, -1.0), (1, 1, 3.0)]);
        let e = smallest_generalized_eigen(&a, &[1.0, 1.0], &EigenSpec::default()).unwrap();
        assert!((e.value + 1.0).abs() <= 1e-9);
    }
}
