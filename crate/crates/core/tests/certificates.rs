mod common;

use flexatc::analysis::{fixed_point, rate, regime, skip_threshold, Certifier, Regime, FIXED_POINT_TOL};
use flexatc::problem::partition;
use flexatc::solver::CoinSequence;
use flexatc::{run, Curvature, FlexAtc, ProblemInstance, ProxSpec, RunOptions, TraceOptions};
use proptest::prelude::*;

use common::*;

fn quadratic(seed: u64, n: usize) -> ProblemInstance {
    ProblemInstance::synthetic_quadratic(
        n,
        3,
        Curvature::Random { mu: 0.01, l: 1.0 },
        ProxSpec::l1(0.01).unwrap(),
        seed,
    )
    .unwrap()
}

#[test]
fn slacks_hold_on_strongly_convex_trajectories() {
    let variants = ["ed", "nids:c=0.3", "mg_ed:N=2", "atc_gt", "mg_sonata:N=2"];
    for seed in 0..20u64 {
        let n = 4 + (seed as usize % 7);
        let inst = quadratic(seed, n);
        let w = lazy(&random_graph(n, 0.4, seed));
        let pair = preset(variants[seed as usize % variants.len()], &w);
        let alpha = 1.0 / inst.smoothness();
        let fp = fixed_point(&inst, &pair, alpha, FIXED_POINT_TOL).unwrap();
        for p in [1.0, 0.5, 0.2] {
            let solver = FlexAtc::new(&inst, &pair, alpha, p).unwrap();
            let cert = Certifier::new(&solver, &fp).unwrap();
            let mut st = solver.initial_mirror_state(None).unwrap();
            let mut coins = CoinSequence::new(p, seed).unwrap();
            for k in 0..500 {
                let c = cert.evaluate(&st.x, &st.u).unwrap();
                assert!(c.thm2_slack.is_some());
                c.verify(k).unwrap_or_else(|e| panic!("seed {seed}, p {p}: {e}"));
                solver.step_mirror(&mut st, coins.next_coin()).unwrap();
            }
        }
    }
}

#[test]
fn sublinear_slack_holds_without_strong_convexity() {
    for seed in 0..5u64 {
        let parts = partition(&synthetic_classification(120, 4, seed), 6, seed).unwrap();
        let inst = ProblemInstance::logistic(parts, 0.0, ProxSpec::l1(0.01).unwrap()).unwrap();
        assert_eq!(inst.strong_convexity(), 0.0);
        let pair = preset("ed", &ring(6));
        let alpha = 1.0 / inst.smoothness();
        let fp = fixed_point(&inst, &pair, alpha, FIXED_POINT_TOL).unwrap();
        for p in [1.0, 0.5] {
            let solver = FlexAtc::new(&inst, &pair, alpha, p).unwrap();
            let cert = Certifier::new(&solver, &fp).unwrap();
            assert!(cert.rate().is_none());
            let trace = run(
                &inst,
                &pair,
                &RunOptions {
                    alpha,
                    p,
                    seed,
                    iterations: 500,
                    x0: None,
                    reference: Some(&fp),
                    trace: TraceOptions {
                        metrics: true,
                        certificates: true,
                        stop_at: None,
                    },
                },
            )
            .unwrap();
            for r in &trace.records {
                assert!(r.thm2_slack.is_none());
                assert!(r.thm1_slack.unwrap() >= -1e-9, "k = {}", r.k);
                assert!(r.lemma2_slack.unwrap() >= -1e-9, "k = {}", r.k);
            }
            let x0 = flexatc::Stacked::zeros(inst.n(), inst.d());
            let (lhs, bound) = cert.averaged_bound_of(&trace, &x0).unwrap();
            assert!(lhs <= bound, "{lhs} > {bound}");
        }
    }
}

#[test]
fn fixed_point_conditions_hold_for_logistic_l1() {
    let parts = partition(&synthetic_classification(200, 5, 4), 10, 4).unwrap();
    let inst = ProblemInstance::logistic(parts, 0.01, ProxSpec::l1(0.01).unwrap()).unwrap();
    let pair = preset("ed", &random_graph(10, 0.4, 4));
    let alpha = 1.0 / inst.smoothness();
    let fp = fixed_point(&inst, &pair, alpha, FIXED_POINT_TOL).unwrap();
    assert!(fp.kkt_residual <= 1e-8);
    assert!(fp.consensus_residual <= 1e-8);
    assert!(fp.null_component <= 1e-9);
    let (_, w) = FlexAtc::new(&inst, &pair, alpha, 1.0).unwrap().adapt(&fp.x_star).unwrap();
    assert!(max_diff(&w, &fp.w_star) <= 1e-10);
}

#[test]
fn run_reaches_reference_and_traces_are_reproducible() {
    let inst = quadratic(9, 8);
    let pair = preset("ed", &ring(8));
    let fp = fixed_point(&inst, &pair, 1.0, FIXED_POINT_TOL).unwrap();
    let opts = RunOptions {
        alpha: 1.0,
        p: 0.5,
        seed: 3,
        iterations: 20_000,
        x0: None,
        reference: Some(&fp),
        trace: TraceOptions {
            metrics: true,
            certificates: true,
            stop_at: Some(1e-9),
        },
    };
    let a = run(&inst, &pair, &opts).unwrap();
    let b = run(&inst, &pair, &opts).unwrap();
    assert_eq!(a.records, b.records);
    let last = a.records.last().unwrap();
    assert!(last.rel_err.unwrap() <= 1e-9);
    assert!(last.kkt_residual.unwrap() <= 1e-8);
    assert!(last.consensus_err <= 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn zeta_is_flat_above_threshold(
        alpha_frac in 0.1f64..1.9,
        kappa in 1.0f64..1e5,
        sigma in 1e-3f64..1.0,
        t in 1e-9f64..1.0,
    ) {
        let l = 1.0;
        let mu = l / kappa;
        let alpha = alpha_frac / l;
        let base = rate(alpha, l, mu, 1.0, sigma);
        let threshold = skip_threshold(base.zeta_c, sigma);
        prop_assume!(threshold < 1.0);
        prop_assert_eq!(regime(base.zeta_c, sigma), Regime::SkippingFree);
        let p = threshold + t * (1.0 - threshold);
        prop_assert_eq!(rate(alpha, l, mu, p, sigma).zeta, base.zeta);
        prop_assert!(base.zeta < 1.0);
    }
}
