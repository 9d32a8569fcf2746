//! FlexATC iteration in its `y` form and its `u` mirror, the two-step primal
//! recursion for `p = 1`, and a centralized proximal-gradient reference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{Certifier, FixedPoint, Violation};
use crate::combiners::CombinerPair;
use crate::error::{Error, Result};
use crate::linalg::{kron_apply_centered, Stacked};
use crate::problem::ProblemInstance;

/// Iterates whose norm exceeds this are treated as divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

const COIN_STREAM: u64 = 0xC014;

/// Seeded Bernoulli(p) draws `θ_0, θ_1, ...`.
#[derive(Clone, Debug)]
pub struct CoinSequence {
    p: f64,
    rng: ChaCha8Rng,
}

impl CoinSequence {
    pub fn new(p: f64, seed: u64) -> Result<Self> {
        check_probability(p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(COIN_STREAM);
        Ok(CoinSequence { p, rng })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn next_coin(&mut self) -> bool {
        self.rng.random::<f64>() < self.p
    }

    pub fn take(&mut self, count: usize) -> Vec<bool> {
        (0..count).map(|_| self.next_coin()).collect()
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1], got {p}")));
    }
    Ok(())
}

/// `y`-form state, optionally carrying the `u` mirror.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub x: Stacked,
    pub y: Stacked,
    pub u: Option<Stacked>,
    pub k: usize,
    pub comms: u64,
}

/// `u`-form state.
#[derive(Clone, Debug, PartialEq)]
pub struct MirrorState {
    pub x: Stacked,
    pub u: Stacked,
    pub k: usize,
    pub comms: u64,
}

/// One FlexATC configuration: problem, combiner, stepsize and probability.
#[derive(Clone, Copy, Debug)]
pub struct FlexAtc<'a> {
    instance: &'a ProblemInstance,
    pair: &'a CombinerPair,
    alpha: f64,
    p: f64,
}

impl<'a> FlexAtc<'a> {
    /// Requires `α ∈ (0, 2/L)` and `p ∈ (0, 1]`.
    pub fn new(instance: &'a ProblemInstance, pair: &'a CombinerPair, alpha: f64, p: f64) -> Result<Self> {
        if instance.n() != pair.n() {
            return Err(Error::Dimension {
                expected: instance.n(),
                found: pair.n(),
            });
        }
        check_alpha(alpha, instance.smoothness())?;
        check_probability(p)?;
        Ok(FlexAtc {
            instance,
            pair,
            alpha,
            p,
        })
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    pub fn pair(&self) -> &'a CombinerPair {
        self.pair
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `x⁰` (zero when `None`), `y⁰ = 0`, and `u⁰ = 0` when `mirror` is set.
    pub fn initial_state(&self, x0: Option<Stacked>, mirror: bool) -> Result<SolverState> {
        let (n, d) = (self.instance.n(), self.instance.d());
        let x = match x0 {
            Some(x) => {
                self.check_shape(&x)?;
                x
            }
            None => Stacked::zeros(n, d),
        };
        Ok(SolverState {
            x,
            y: Stacked::zeros(n, d),
            u: mirror.then(|| Stacked::zeros(n, d)),
            k: 0,
            comms: 0,
        })
    }

    pub fn initial_mirror_state(&self, x0: Option<Stacked>) -> Result<MirrorState> {
        let s = self.initial_state(x0, true)?;
        Ok(MirrorState {
            x: s.x,
            u: s.u.expect("mirror requested"),
            k: 0,
            comms: 0,
        })
    }

    /// `(∇F(x), x - α∇F(x))`.
    pub fn adapt(&self, x: &Stacked) -> Result<(Stacked, Stacked)> {
        let g = self.instance.grad_stacked(x)?;
        let mut w = x.clone();
        w.axpy(-self.alpha, &g);
        Ok((g, w))
    }

    pub fn apply_a(&self, v: &Stacked) -> Result<Stacked> {
        kron_apply_centered(self.pair.a(), 1.0, v)
    }

    pub fn apply_b(&self, v: &Stacked) -> Result<Stacked> {
        kron_apply_centered(self.pair.b(), 0.0, v)
    }

    pub fn apply_sqrt_b(&self, v: &Stacked) -> Result<Stacked> {
        kron_apply_centered(self.pair.sqrt_b(), 0.0, v)
    }

    pub fn prox(&self, mut v: Stacked) -> Stacked {
        self.instance.prox_stacked_in_place(&mut v, self.alpha);
        v
    }

    /// One `y`-form step with coin `theta`; updates the mirror if present.
    pub fn step(&self, s: &mut SolverState, theta: bool) -> Result<()> {
        let (_, w) = self.adapt(&s.x)?;
        let z = w.add(&s.y);
        if theta {
            s.x = self.prox(self.apply_a(&z)?);
            s.y.axpy(-self.p, &self.apply_b(&z)?);
            s.comms += u64::from(self.pair.comm_rounds());
        } else {
            s.x = self.prox(z);
        }
        if let Some(u) = s.u.as_mut() {
            if theta {
                let mut r = w;
                r.axpy(-1.0, &self.apply_sqrt_b(u)?);
                u.axpy(self.p, &self.apply_sqrt_b(&r)?);
            }
        }
        s.k += 1;
        check_divergence(&s.x, s.k)
    }

    /// One `u`-form step with coin `theta`.
    pub fn step_mirror(&self, s: &mut MirrorState, theta: bool) -> Result<()> {
        let (_, w) = self.adapt(&s.x)?;
        let (x, u) = self.mirror_successor(&w, &s.u, theta)?;
        s.x = x;
        s.u = u;
        if theta {
            s.comms += u64::from(self.pair.comm_rounds());
        }
        s.k += 1;
        check_divergence(&s.x, s.k)
    }

    /// `u`-form successor from the adapted point `w`:
    /// `z = w - √B u`; communicate: `(prox(Az), u + p√B z)`; skip: `(prox(z), u)`.
    pub fn mirror_successor(&self, w: &Stacked, u: &Stacked, theta: bool) -> Result<(Stacked, Stacked)> {
        let mut z = w.clone();
        z.axpy(-1.0, &self.apply_sqrt_b(u)?);
        if theta {
            let mut u_next = u.clone();
            u_next.axpy(self.p, &self.apply_sqrt_b(&z)?);
            Ok((self.prox(self.apply_a(&z)?), u_next))
        } else {
            Ok((self.prox(z), u.clone()))
        }
    }

    fn check_shape(&self, x: &Stacked) -> Result<()> {
        let (n, d) = (self.instance.n(), self.instance.d());
        if x.blocks() != n || x.dim() != d {
            return Err(Error::Dimension {
                expected: n * d,
                found: x.blocks() * x.dim(),
            });
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64, l: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0 / l) {
        return Err(Error::InvalidParameter(format!(
            "stepsize must lie in (0, 2/L) = (0, {}), got {alpha}",
            2.0 / l
        )));
    }
    Ok(())
}

fn check_divergence(x: &Stacked, k: usize) -> Result<()> {
    if !x.is_finite() || x.norm() > DIVERGENCE_NORM {
        return Err(Error::Divergence { k });
    }
    Ok(())
}

/// `x⁺ = xᵏ - A xᵏ⁻¹ - B xᵏ + A(xᵏ - α(∇F(xᵏ) - ∇F(xᵏ⁻¹)))`, the `p = 1`,
/// `r = 0` form of the iteration with `y` eliminated. Valid from `k = 1`.
pub fn primal_recursion_step(
    xk: &Stacked,
    xk_prev: &Stacked,
    gradk: &Stacked,
    gradk_prev: &Stacked,
    pair: &CombinerPair,
    alpha: f64,
) -> Result<Stacked> {
    let mut inner = xk.clone();
    inner.axpy(-alpha, gradk);
    inner.axpy(alpha, gradk_prev);
    let mut out = xk.clone();
    out.axpy(-1.0, &kron_apply_centered(pair.a(), 1.0, xk_prev)?);
    out.axpy(-1.0, &kron_apply_centered(pair.b(), 0.0, xk)?);
    out.axpy(1.0, &kron_apply_centered(pair.a(), 1.0, &inner)?);
    Ok(out)
}

/// Proximal gradient on `(1/n) Σ f_i + r` from the origin until
/// `‖x - prox(x - α ḡ(x))‖ ≤ tol`.
pub fn centralized_proxgrad(
    instance: &ProblemInstance,
    alpha: f64,
    max_iters: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    check_alpha(alpha, instance.smoothness())?;
    let mut x = vec![0.0; instance.d()];
    let mut residual = f64::INFINITY;
    for _ in 0..=max_iters {
        let g = instance.mean_grad(&x)?;
        let mut next: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - alpha * gi).collect();
        instance.prox().apply_in_place(&mut next, alpha);
        residual = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        if !residual.is_finite() {
            return Err(Error::NonFinite("centralized proximal gradient".into()));
        }
        if residual <= tol {
            return Ok(x);
        }
        x = next;
    }
    Err(Error::CentralizedNoConvergence {
        iterations: max_iters,
        residual,
    })
}

/// Which per-record diagnostics to compute during [`run`].
#[derive(Clone, Copy, Debug)]
pub struct TraceOptions {
    /// Objective and KKT residual at the agent average.
    pub metrics: bool,
    /// Certificate slacks; needs a reference fixed point.
    pub certificates: bool,
    /// Stop once the relative error reaches this value.
    pub stop_at: Option<f64>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            metrics: true,
            certificates: false,
            stop_at: None,
        }
    }
}

/// Metrics of iterate `xᵏ`. `theta` is the coin that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub theta: Option<bool>,
    pub comms: u64,
    pub rel_err: Option<f64>,
    pub consensus_err: f64,
    pub objective: Option<f64>,
    pub kkt_residual: Option<f64>,
    pub lemma2_slack: Option<f64>,
    pub thm1_slack: Option<f64>,
    pub thm2_slack: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    pub final_state: SolverState,
    /// `(1/K) Σ_{k<K} xᵏ`.
    pub x_avg: Stacked,
    /// `(1/K) Σ_{k<K} uᵏ`, when the mirror was tracked.
    pub u_avg: Option<Stacked>,
    /// First failed certificate inequality, when certificates were on.
    pub violation: Option<Violation>,
}

impl RunTrace {
    /// First record whose relative error is at most `target`.
    pub fn first_reaching(&self, target: f64) -> Option<&TraceRecord> {
        self.records
            .iter()
            .find(|r| r.rel_err.is_some_and(|e| e <= target))
    }

    pub fn total_comms(&self) -> u64 {
        self.final_state.comms
    }

    pub fn iterations(&self) -> usize {
        self.final_state.k
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions<'r> {
    pub alpha: f64,
    pub p: f64,
    pub seed: u64,
    pub iterations: usize,
    pub x0: Option<Stacked>,
    pub reference: Option<&'r FixedPoint>,
    pub trace: TraceOptions,
}

/// Runs `K` steps on the coin sequence for `(p, seed)` and records every iterate.
pub fn run(instance: &ProblemInstance, pair: &CombinerPair, opts: &RunOptions<'_>) -> Result<RunTrace> {
    let solver = FlexAtc::new(instance, pair, opts.alpha, opts.p)?;
    let want_certs = opts.trace.certificates && opts.reference.is_some();
    let certifier = match (want_certs, opts.reference) {
        (true, Some(fp)) => Some(Certifier::new(&solver, fp)?),
        _ => None,
    };
    let mirror = opts.reference.is_some();
    let mut state = solver.initial_state(opts.x0.clone(), mirror)?;
    let mut coins = CoinSequence::new(opts.p, opts.seed)?;
    let (n, d) = (instance.n(), instance.d());
    let mut x_sum = Stacked::zeros(n, d);
    let mut u_sum = mirror.then(|| Stacked::zeros(n, d));
    let mut records = Vec::with_capacity(opts.iterations + 1);
    let mut last_theta = None;
    let mut violation = None;
    loop {
        let mut rec = record_metrics(&solver, &state, opts.reference, opts.trace.metrics)?;
        rec.theta = last_theta;
        if let (Some(c), Some(u)) = (&certifier, &state.u) {
            let cert = c.evaluate(&state.x, u)?;
            if violation.is_none() {
                violation = cert.violation(state.k);
            }
            rec.lemma2_slack = Some(cert.lemma2_slack);
            rec.thm1_slack = Some(cert.thm1_slack);
            rec.thm2_slack = cert.thm2_slack;
        }
        let reached = matches!((opts.trace.stop_at, rec.rel_err), (Some(t), Some(e)) if e <= t);
        records.push(rec);
        if state.k == opts.iterations || reached {
            break;
        }
        x_sum.axpy(1.0, &state.x);
        if let (Some(acc), Some(u)) = (u_sum.as_mut(), &state.u) {
            acc.axpy(1.0, u);
        }
        let theta = coins.next_coin();
        solver.step(&mut state, theta)?;
        last_theta = Some(theta);
    }
    let steps = state.k.max(1) as f64;
    Ok(RunTrace {
        records,
        x_avg: x_sum.scale(1.0 / steps),
        u_avg: u_sum.map(|u| u.scale(1.0 / steps)),
        final_state: state,
        violation,
    })
}

fn record_metrics(
    solver: &FlexAtc<'_>,
    s: &SolverState,
    reference: Option<&FixedPoint>,
    metrics: bool,
) -> Result<TraceRecord> {
    let instance = solver.instance();
    let mean = s.x.block_mean();
    let consensus_err = s.x.dist_sq(&Stacked::replicate(s.x.blocks(), &mean)).sqrt();
    let rel_err = reference.map(|fp| fp.relative_error(&s.x));
    let (objective, kkt_residual) = if metrics {
        let g = instance.mean_grad(&mean)?;
        let mut step: Vec<f64> = mean.iter().zip(&g).map(|(m, gi)| m - solver.alpha() * gi).collect();
        instance.prox().apply_in_place(&mut step, solver.alpha());
        let kkt = mean
            .iter()
            .zip(&step)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        (Some(instance.objective(&mean)?), Some(kkt))
    } else {
        (None, None)
    };
    Ok(TraceRecord {
        k: s.k,
        theta: None,
        comms: s.comms,
        rel_err,
        consensus_err,
        objective,
        kkt_residual,
        lemma2_slack: None,
        thm1_slack: None,
        thm2_slack: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combiners::Variant;
    use crate::graph::{gen_topology, metropolis_weights, MixingMatrix, TopologyKind};
    use crate::linalg::SymMatrix;
    use crate::problem::{AgentLoss, Curvature, ProxSpec, QuadraticLoss};

    fn ring(n: usize) -> MixingMatrix {
        metropolis_weights(&gen_topology(TopologyKind::Ring, n, 0).unwrap()).unwrap()
    }

    fn single_node() -> (ProblemInstance, CombinerPair) {
        let inst = ProblemInstance::new(
            vec![AgentLoss::Quadratic(QuadraticLoss::unit(vec![1.5, -2.0]))],
            ProxSpec::None,
        )
        .unwrap();
        let w = MixingMatrix::from_matrix(SymMatrix::identity(1)).unwrap();
        let pair = CombinerPair::preset(Variant::Ed, &w).unwrap();
        (inst, pair)
    }

    #[test]
    fn coins_are_deterministic_and_degenerate_at_one() {
        let a = CoinSequence::new(0.5, 3).unwrap().take(100);
        assert_eq!(a, CoinSequence::new(0.5, 3).unwrap().take(100));
        assert_ne!(a, CoinSequence::new(0.5, 4).unwrap().take(100));
        assert!(CoinSequence::new(1.0, 9).unwrap().take(1000).iter().all(|&t| t));
        assert!(CoinSequence::new(0.0, 0).is_err());
        assert!(CoinSequence::new(1.5, 0).is_err());
    }

    #[test]
    fn comm_fraction_concentrates() {
        let (k, p) = (10_000usize, 0.3);
        let hits = CoinSequence::new(p, 11).unwrap().take(k).iter().filter(|&&t| t).count() as f64;
        let sd = (k as f64 * p * (1.0 - p)).sqrt();
        assert!((hits - k as f64 * p).abs() <= 3.0 * sd, "{hits}");
    }

    #[test]
    fn single_node_exact_step() {
        let (inst, pair) = single_node();
        let s = FlexAtc::new(&inst, &pair, 1.0, 1.0).unwrap();
        let mut st = s.initial_state(None, true).unwrap();
        s.step(&mut st, true).unwrap();
        assert_eq!(st.x.as_slice(), &[1.5, -2.0]);
        assert_eq!(st.comms, 1);
    }

    #[test]
    fn skip_branch_is_local_gradient_step() {
        let inst = ProblemInstance::synthetic_quadratic(4, 3, Curvature::Unit, ProxSpec::None, 2).unwrap();
        let pair = CombinerPair::preset(Variant::Ed, &ring(4)).unwrap();
        let s = FlexAtc::new(&inst, &pair, 0.4, 0.5).unwrap();
        let x0 = Stacked::from_vec(4, 3, (0..12).map(|v| v as f64 * 0.1).collect()).unwrap();
        let mut st = s.initial_state(Some(x0.clone()), false).unwrap();
        s.step(&mut st, false).unwrap();
        let (_, w) = s.adapt(&x0).unwrap();
        assert_eq!(st.x, w);
        assert_eq!(st.comms, 0);
        assert_eq!(st.y, Stacked::zeros(4, 3));
    }

    #[test]
    fn two_agents_reach_mean_target() {
        let inst = ProblemInstance::new(
            vec![
                AgentLoss::Quadratic(QuadraticLoss::unit(vec![1.0, 4.0])),
                AgentLoss::Quadratic(QuadraticLoss::unit(vec![3.0, -2.0])),
            ],
            ProxSpec::None,
        )
        .unwrap();
        let w = metropolis_weights(&gen_topology(TopologyKind::Complete, 2, 0).unwrap()).unwrap();
        let pair = CombinerPair::preset(Variant::Ed, &w).unwrap();
        let s = FlexAtc::new(&inst, &pair, 0.5, 1.0).unwrap();
        let mut st = s.initial_state(None, false).unwrap();
        for _ in 0..200 {
            s.step(&mut st, true).unwrap();
        }
        for i in 0..2 {
            assert!((st.x.block(i)[0] - 2.0).abs() < 1e-10);
            assert!((st.x.block(i)[1] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn run_accounting_and_determinism() {
        let inst = ProblemInstance::synthetic_quadratic(6, 2, Curvature::Unit, ProxSpec::l1(0.05).unwrap(), 1).unwrap();
        let pair = CombinerPair::preset("mg_ed:N=2".parse().unwrap(), &crate::graph::lazify(&ring(6)).unwrap()).unwrap();
        let opts = |p| RunOptions {
            alpha: 1.0,
            p,
            seed: 5,
            iterations: 300,
            x0: None,
            reference: None,
            trace: TraceOptions::default(),
        };
        let full = run(&inst, &pair, &opts(1.0)).unwrap();
        assert!(full.records[1..].iter().all(|r| r.theta == Some(true)));
        assert_eq!(full.total_comms(), 600);
        let a = run(&inst, &pair, &opts(0.5)).unwrap();
        let b = run(&inst, &pair, &opts(0.5)).unwrap();
        assert_eq!(a.records, b.records);
        let heads = a.records.iter().filter(|r| r.theta == Some(true)).count() as u64;
        assert_eq!(a.total_comms(), 2 * heads);
        assert!(a.records.windows(2).all(|w| w[0].comms <= w[1].comms));
        assert_eq!(a.records[0].theta, None);
        assert_eq!(a.records.len(), 301);
    }

    #[test]
    fn y_sum_and_mirror_coupling_hold() {
        let inst = ProblemInstance::synthetic_quadratic(
            8,
            3,
            Curvature::Random { mu: 0.05, l: 1.0 },
            ProxSpec::l1(0.02).unwrap(),
            3,
        )
        .unwrap();
        let pair = CombinerPair::preset(Variant::Ed, &ring(8)).unwrap();
        let s = FlexAtc::new(&inst, &pair, 1.0, 0.4).unwrap();
        let mut st = s.initial_state(None, true).unwrap();
        let mut coins = CoinSequence::new(0.4, 8).unwrap();
        for _ in 0..500 {
            s.step(&mut st, coins.next_coin()).unwrap();
            let sum: f64 = st.y.block_sum().iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(sum <= 1e-10 * (1.0 + st.y.norm()));
            let coupled = st.y.add(&s.apply_sqrt_b(st.u.as_ref().unwrap()).unwrap());
            assert!(coupled.max_abs() <= 1e-9, "{}", coupled.max_abs());
        }
    }

    #[test]
    fn divergence_is_reported() {
        let inst = ProblemInstance::synthetic_quadratic(3, 2, Curvature::Unit, ProxSpec::None, 0).unwrap();
        let pair = CombinerPair::preset(Variant::Ed, &ring(3)).unwrap();
        assert!(FlexAtc::new(&inst, &pair, 2.0, 1.0).is_err());
        let s = FlexAtc::new(&inst, &pair, 1.0, 1.0).unwrap();
        let x0 = Stacked::replicate(3, &[f64::NAN, 0.0]);
        let mut st = s.initial_state(Some(x0), false).unwrap();
        assert!(matches!(s.step(&mut st, true), Err(Error::Divergence { k: 1 })));
    }

    #[test]
    fn primal_recursion_reduces_to_gradient_recursion() {
        let (inst, pair) = single_node();
        let x_prev = Stacked::from_vec(1, 2, vec![0.0, 0.0]).unwrap();
        let x = Stacked::from_vec(1, 2, vec![0.5, 0.5]).unwrap();
        let g_prev = inst.grad_stacked(&x_prev).unwrap();
        let g = inst.grad_stacked(&x).unwrap();
        let next = primal_recursion_step(&x, &x_prev, &g, &g_prev, &pair, 0.5).unwrap();
        // A = 1, B = 0
        let expect: Vec<f64> = (0..2)
            .map(|j| x.as_slice()[j] - x_prev.as_slice()[j] + x.as_slice()[j] - 0.5 * (g.as_slice()[j] - g_prev.as_slice()[j]))
            .collect();
        assert_eq!(next.as_slice(), expect.as_slice());
    }

    #[test]
    fn centralized_examples() {
        let inst = ProblemInstance::synthetic_quadratic(5, 3, Curvature::Unit, ProxSpec::None, 6).unwrap();
        let x = centralized_proxgrad(&inst, 1.0, 1000, 1e-12).unwrap();
        let mut mean = vec![0.0; 3];
        for loss in inst.losses() {
            if let AgentLoss::Quadratic(q) = loss {
                for (m, t) in mean.iter_mut().zip(&q.target) {
                    *m += t / 5.0;
                }
            }
        }
        for (a, b) in x.iter().zip(&mean) {
            assert!((a - b).abs() < 1e-12);
        }
        let scalar = ProblemInstance::new(
            vec![AgentLoss::Quadratic(QuadraticLoss::unit(vec![0.0]))],
            ProxSpec::l1(2.0).unwrap(),
        )
        .unwrap();
        assert_eq!(centralized_proxgrad(&scalar, 1.0, 10, 1e-12).unwrap(), vec![0.0]);
        let slow = ProblemInstance::synthetic_quadratic(
            2,
            2,
            Curvature::Geometric { mu: 1e-6, l: 1.0 },
            ProxSpec::None,
            0,
        )
        .unwrap();
        assert!(matches!(
            centralized_proxgrad(&slow, 1.0, 5, 1e-12),
            Err(Error::CentralizedNoConvergence { iterations: 5, .. })
        ));
    }
}
