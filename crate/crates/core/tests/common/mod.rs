#![allow(dead_code)]

use flexatc::combiners::Variant;
use flexatc::linalg::{Stacked, SymMatrix};
use flexatc::problem::{Dataset, ProblemInstance, Sample};
use flexatc::{gen_topology, lazify, metropolis_weights, CombinerPair, MixingMatrix, TopologyKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ring(n: usize) -> MixingMatrix {
    metropolis_weights(&gen_topology(TopologyKind::Ring, n, 0).unwrap()).unwrap()
}

pub fn random_graph(n: usize, q: f64, seed: u64) -> MixingMatrix {
    metropolis_weights(&gen_topology(TopologyKind::ErdosRenyi { q }, n, seed).unwrap()).unwrap()
}

pub fn preset(variant: &str, w: &MixingMatrix) -> CombinerPair {
    CombinerPair::preset(variant.parse::<Variant>().unwrap(), w).unwrap()
}

pub fn lazy(w: &MixingMatrix) -> MixingMatrix {
    lazify(w).unwrap()
}

pub fn random_stacked(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Stacked {
    Stacked::from_vec(n, d, (0..n * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap()
}

/// Dense `(M ⊗ I) x` with no shortcuts.
pub fn dense_apply(m: &SymMatrix, x: &Stacked) -> Stacked {
    let (n, d) = (x.blocks(), x.dim());
    let mut out = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..n {
            for c in 0..d {
                out[i * d + c] += m.get(i, j) * x.block(j)[c];
            }
        }
    }
    Stacked::from_vec(n, d, out).unwrap()
}

fn combine(terms: &[(f64, &Stacked)]) -> Stacked {
    let mut out = Stacked::zeros(terms[0].1.blocks(), terms[0].1.dim());
    for (a, v) in terms {
        out.axpy(*a, v);
    }
    out
}

/// Textbook NIDS with `W̃ = I - c(I - W)` and no proximal term:
/// `x¹ = W̃(x⁰ - α∇F(x⁰))`, `xᵏ⁺¹ = W̃(2xᵏ - xᵏ⁻¹ - α∇F(xᵏ) + α∇F(xᵏ⁻¹))`.
pub fn nids_direct(
    instance: &ProblemInstance,
    w: &SymMatrix,
    c: f64,
    alpha: f64,
    x0: &Stacked,
    steps: usize,
) -> Vec<Stacked> {
    let n = w.order();
    let w_tilde = SymMatrix::from_fn(n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - c * (id - w.get(i, j))
    });
    let mut xs = vec![x0.clone()];
    let mut grads = vec![instance.grad_stacked(x0).unwrap()];
    let first = combine(&[(1.0, x0), (-alpha, &grads[0])]);
    xs.push(dense_apply(&w_tilde, &first));
    grads.push(instance.grad_stacked(&xs[1]).unwrap());
    for k in 1..steps {
        let inner = combine(&[
            (2.0, &xs[k]),
            (-1.0, &xs[k - 1]),
            (-alpha, &grads[k]),
            (alpha, &grads[k - 1]),
        ]);
        let next = dense_apply(&w_tilde, &inner);
        grads.push(instance.grad_stacked(&next).unwrap());
        xs.push(next);
    }
    xs
}

/// Two-variable adapt-then-combine gradient tracking:
/// `xᵏ⁺¹ = W(xᵏ - α yᵏ)`, `yᵏ⁺¹ = W(yᵏ + ∇F(xᵏ⁺¹) - ∇F(xᵏ))`,
/// started from `y⁰ = (I - W)x⁰/α + W∇F(x⁰)`.
pub fn atc_gt_direct(
    instance: &ProblemInstance,
    w: &SymMatrix,
    alpha: f64,
    x0: &Stacked,
    steps: usize,
) -> Vec<Stacked> {
    let g0 = instance.grad_stacked(x0).unwrap();
    let wx0 = dense_apply(w, x0);
    let wg0 = dense_apply(w, &g0);
    let mut y = combine(&[(1.0 / alpha, x0), (-1.0 / alpha, &wx0), (1.0, &wg0)]);
    let mut xs = vec![x0.clone()];
    let mut g = g0;
    for k in 0..steps {
        let x_next = dense_apply(w, &combine(&[(1.0, &xs[k]), (-alpha, &y)]));
        let g_next = instance.grad_stacked(&x_next).unwrap();
        y = dense_apply(w, &combine(&[(1.0, &y), (1.0, &g_next), (-1.0, &g)]));
        g = g_next;
        xs.push(x_next);
    }
    xs
}

/// Labels from a noisy linear model so the data is not separable.
pub fn synthetic_classification(samples: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
    let samples = (0..samples)
        .map(|_| {
            let features: Vec<(u32, f64)> = (0..d as u32)
                .map(|j| (j, rng.random::<f64>() * 2.0 - 1.0))
                .collect();
            let margin: f64 = features.iter().map(|&(j, v)| v * truth[j as usize]).sum();
            let noisy = margin + 0.5 * (rng.random::<f64>() - 0.5);
            Sample {
                features,
                label: if noisy >= 0.0 { 1 } else { -1 },
            }
        })
        .collect();
    Dataset { d, samples }
}

pub fn max_diff(a: &Stacked, b: &Stacked) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
