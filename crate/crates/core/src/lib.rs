//! Optimal Hardy weights for discrete Schrödinger operators on weighted graphs.
//!
//! The crate builds Hardy weights `w = H[(uv)^½] / (uv)^½` from pairs of
//! positive supersolutions and checks, on finite truncations, the identities
//! and spectral properties behind their optimality.
//!
//! ```
//! use std::sync::Arc;
//! use hardy_core::graph::{halfline_dirichlet, GraphFunction, Vertex};
//! use hardy_core::hardy::{construct_weight, ConstructOptions};
//! use hardy_core::schrodinger::SchrodingerOperator;
//!
//! let op = SchrodingerOperator::new(Arc::new(halfline_dirichlet()));
//! let u = GraphFunction::from_fn(|x| x.head() as f64);
//! let v = GraphFunction::constant(1.0);
//! let w = construct_weight(&op, &u, &v, &ConstructOptions::default()).unwrap();
//! let w1 = w.value(&Vertex::id(1));
//! assert!((w1 - (2.0 - 2f64.sqrt())).abs() < 1e-15);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coarea;
pub mod criticality;
pub mod error;
pub mod graph;
pub mod green;
pub mod hardy;
pub mod linalg;
pub mod numeric;
pub mod quadrature;
pub mod random;
pub mod schrodinger;

pub use error::{Error, Result};
pub use graph::{FiniteGraph, Graph, GraphFunction, SharedGraph, Vertex};
pub use hardy::HardyWeight;
pub use schrodinger::SchrodingerOperator;
