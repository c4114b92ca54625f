//! Values computed independently of the library code paths they check.

use std::sync::Arc;

use hardy_core::criticality::{lambda_star, null_sequence, RegionSpec};
use hardy_core::graph::{halfline_dirichlet, Lattice, RegularTree};
use hardy_core::green::{green_dirichlet, green_fourier_lattice, LatticeGreen, Normalization, QuadratureSpec};
use hardy_core::hardy::{construct_weight, halfline_weight, halfline_weight_direct, ConstructOptions};
use hardy_core::linalg::{EigenSpec, LinearSolveSpec};
use hardy_core::random::{random_function, random_graph, RandomGraphParams};
use hardy_core::{GraphFunction, HardyWeight, SchrodingerOperator, SharedGraph, Vertex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn halfline() -> HardyWeight {
    let op = SchrodingerOperator::new(Arc::new(halfline_dirichlet()));
    let u = GraphFunction::from_fn(|x| x.head() as f64);
    construct_weight(&op, &u, &GraphFunction::constant(1.0), &ConstructOptions::default()).unwrap()
}

#[test]
fn halfline_small_n_by_hand() {
    // 2 - √(1+1/n) - √(1-1/n) is accurate for small n
    for n in 2..=20u64 {
        let direct = halfline_weight_direct(n);
        let closed = halfline_weight(n).unwrap();
        assert!((direct - closed).abs() <= 1e-14, "n={n}");
    }
    let w = halfline();
    let w2 = 2.0 - 1.5f64.sqrt() - 0.5f64.sqrt();
    assert!((w.value(&Vertex::id(2)) - w2).abs() < 1e-15);
}

#[test]
fn halfline_leading_terms() {
    // w(n) = 1/(4n²) + 5/(64n⁴) + O(n⁻⁶)
    for n in [100u64, 1000, 10_000] {
        let nf = n as f64;
        let approx = 0.25 / (nf * nf) + 5.0 / (64.0 * nf.powi(4));
        let w = halfline_weight(n).unwrap();
        assert!(((w - approx) / w).abs() < (0.2 / nf.powi(4)).max(1e-15), "n={n}");
    }
}

#[test]
fn general_weight_identity_on_random_graph() {
    // w = ½(Hu/u + Hv/v) + ½Σ b(√(u(y)/u(x)) - √(v(y)/v(x)))²
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let graph = random_graph(&mut rng, &RandomGraphParams::default());
    let u = random_function(&mut rng, &graph, 0.5, 2.0);
    let v = random_function(&mut rng, &graph, 0.5, 2.0);
    let shared: SharedGraph = Arc::new(graph.clone());
    let op = SchrodingerOperator::new(shared.clone());
    let opts = ConstructOptions {
        allow_non_superharmonic: true,
        ..Default::default()
    };
    let w = construct_weight(&op, &u, &v, &opts).unwrap();
    for x in graph.vertices() {
        let (ux, vx) = (u.eval(x), v.eval(x));
        let mut hu = 0.0;
        let mut hv = 0.0;
        let mut edge = 0.0;
        let mut direct = 0.0;
        for (y, b) in shared.neighbors(x) {
            let (uy, vy) = (u.eval(&y), v.eval(&y));
            hu += b * (ux - uy);
            hv += b * (vx - vy);
            edge += 0.5 * b * ((uy / ux).sqrt() - (vy / vx).sqrt()).powi(2);
            direct += b * ((ux * vx).sqrt() - (uy * vy).sqrt());
        }
        let expected = 0.5 * (hu / ux + hv / vx) + edge;
        let eval = w.eval(x);
        assert!((eval.w_operator - expected).abs() < 1e-12 * (1.0 + expected.abs()));
        assert!((eval.w_operator - direct / (ux * vx).sqrt()).abs() < 1e-12 * (1.0 + expected.abs()));
    }
}

#[test]
fn tree_green_function() {
    // Laplacian Green function of the d-regular tree: G(x) = (d-1)/(d(d-2)) (d-1)^{-|x|}
    let d = 3usize;
    let tree: SharedGraph = Arc::new(RegularTree::new(d).unwrap());
    let root = tree.root();
    let green = green_dirichlet(&tree, &root, 14, &[], &LinearSolveSpec::default()).unwrap();
    let g0 = (d as f64 - 1.0) / (d as f64 * (d as f64 - 2.0));
    let layers = hardy_core::graph::bfs_layers(tree.as_ref(), &root, 3);
    for (k, layer) in layers.iter().enumerate() {
        let exact = g0 * (d as f64 - 1.0).powi(-(k as i32));
        for x in layer {
            assert!((green.value(x) - exact).abs() < 1e-3 * exact, "layer {k}");
        }
    }
}

#[test]
fn lattice_box_agrees_with_fourier() {
    let lattice: SharedGraph = Arc::new(Lattice::new(3).unwrap());
    let origin = Vertex::origin(3);
    let fourier = green_fourier_lattice(3, &[0, 0, 0], &QuadratureSpec::default()).unwrap();
    let mut previous = 0.0;
    for radius in [10usize, 20, 30] {
        let green = green_dirichlet(&lattice, &origin, radius, &[], &LinearSolveSpec::default()).unwrap();
        let g = green.value(&origin);
        assert!(g > previous && g < fourier);
        previous = g;
    }
    assert!((fourier - previous) / fourier < 0.03, "{previous} vs {fourier}");

    let off = green_fourier_lattice(3, &[2, 1, 0], &QuadratureSpec::default()).unwrap();
    let green = green_dirichlet(&lattice, &origin, 30, &[], &LinearSolveSpec::default()).unwrap();
    let deficit_origin = fourier - green.value(&origin);
    let deficit_off = off - green.value(&Vertex::lattice(&[2, 1, 0]));
    // the box loses nearly the same constant everywhere near the pole
    assert!(deficit_off > 0.0 && (deficit_off - deficit_origin).abs() < 0.2 * deficit_origin, "{deficit_off} {deficit_origin}");
}

#[test]
fn lattice_green_far_field() {
    // G_L(x) ≈ 1/(4π|x|) for ℤ³
    let mut green = LatticeGreen::new(3, QuadratureSpec::default()).unwrap();
    for k in [10i64, 20] {
        let g = green.value(&[k, 0, 0], Normalization::Laplacian).unwrap();
        let far = 1.0 / (4.0 * std::f64::consts::PI * k as f64);
        assert!(((g - far) / far).abs() < 0.5 / (k * k) as f64, "k={k} g={g} far={far}");
    }
}

#[test]
fn lambda_scales_inversely() {
    let w = halfline();
    let wf = |x: &Vertex| w.value(x);
    let double = |x: &Vertex| 2.0 * w.value(x);
    let region = RegionSpec::Ball { radius: 200 };
    let a = lambda_star(w.operator(), &wf, &region, &EigenSpec::default()).unwrap();
    let b = lambda_star(w.operator(), &double, &region, &EigenSpec::default()).unwrap();
    assert!((a.lambda_star - 2.0 * b.lambda_star).abs() < 1e-8 * a.lambda_star);
    assert!(a.lower <= a.lambda_star && a.lambda_star <= a.upper);
}

#[test]
fn null_sequence_energy_log_asymptotics() {
    let w = halfline();
    let products: Vec<f64> = [4.0f64, 16.0, 256.0]
        .iter()
        .map(|&n| null_sequence(&w, n, 1.0).unwrap().energy * n.ln())
        .collect();
    assert!((products[0] - 0.99913).abs() < 1e-4);
    assert!((products[1] - 0.99997).abs() < 1e-4);
    assert!((products[2] - 1.0).abs() < 1e-5);
}

#[test]
fn null_sequence_controls() {
    let w = halfline();
    // a doubled weight makes the energy negative on long supports
    let doubled = null_sequence(&w, 16.0, 2.0).unwrap();
    assert!(doubled.energy < 0.0);
    // halving the weight adds a positive term that does not vanish
    let small = null_sequence(&w, 16.0, 0.5).unwrap().energy;
    let large = null_sequence(&w, 256.0, 0.5).unwrap().energy;
    assert!(large > small);
}
