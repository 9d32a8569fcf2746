//! Reference fixed point, exact one-step certificate checks in the `u`
//! form, rate constants, and expected iteration/communication complexity.
//!
//! Every expectation below is the exact two-point mixture over the coin:
//! `E[g(next) | state] = p·g(communicate) + (1-p)·g(skip)`.

use crate::combiners::CombinerPair;
use crate::error::{Error, Result};
use crate::linalg::Stacked;
use crate::problem::ProblemInstance;
use crate::solver::{centralized_proxgrad, FlexAtc, RunTrace};

/// Default accuracy of the centralized reference solve.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Iteration cap of the centralized reference solve.
pub const FIXED_POINT_MAX_ITERS: usize = 5_000_000;
/// Relative tolerance for certificate slacks.
pub const SLACK_TOL: f64 = 1e-9;

const RANGE_TOL: f64 = 1e-8;
const CENTRAL_TOL_FLOOR: f64 = 1e-15;

pub const CHECK_DESCENT: &str = "one-step descent";
pub const CHECK_SUBLINEAR: &str = "sublinear per-step";
pub const CHECK_CONTRACTION: &str = "linear contraction";
pub const CHECK_AVERAGED: &str = "averaged-iterate bound";

/// `(x*, w*, u*)` with the residuals of its three defining conditions.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    /// Solution of the global problem.
    pub x_point: Vec<f64>,
    /// `x*` replicated across agents.
    pub x_star: Stacked,
    /// `x* - α∇F(x*)`.
    pub w_star: Stacked,
    /// Minimum-norm `u` with `B u = √B w*`.
    pub u_star: Stacked,
    pub alpha: f64,
    /// `‖x* - prox(A(w* - √B u*))‖`.
    pub kkt_residual: f64,
    /// `‖√B(w* - √B u*)‖`.
    pub consensus_residual: f64,
    /// Norm of the component of `u*` along `span(1)`.
    pub null_component: f64,
}

impl FixedPoint {
    /// `‖x - x*‖ / ‖x*‖`, or the absolute error when `x* = 0`.
    pub fn relative_error(&self, x: &Stacked) -> f64 {
        let scale = self.x_star.norm();
        let err = x.dist_sq(&self.x_star).sqrt();
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    }
}

/// Solves the centralized problem and recovers `w*` and `u*`. For `μ > 0`
/// the proximal-gradient residual target is `tol·min(1, αμ)` (not below
/// 1e-15), so `x*` itself is accurate to about `tol`. Fails when any
/// residual exceeds its tolerance.
pub fn fixed_point(instance: &ProblemInstance, pair: &CombinerPair, alpha: f64, tol: f64) -> Result<FixedPoint> {
    // p only matters for the stepping, not for the fixed point.
    let solver = FlexAtc::new(instance, pair, alpha, 1.0)?;
    // a residual ε only pins x* to within ε/(αμ), so tighten by αμ
    let mu = instance.strong_convexity();
    let solve_tol = if mu > 0.0 {
        (tol * (alpha * mu).min(1.0)).max(CENTRAL_TOL_FLOOR)
    } else {
        tol
    };
    let x_point = centralized_proxgrad(instance, alpha, FIXED_POINT_MAX_ITERS, solve_tol)?;
    let x_star = Stacked::replicate(instance.n(), &x_point);
    let (_, w_star) = solver.adapt(&x_star)?;
    let rhs = solver.apply_sqrt_b(&w_star)?;
    let u_star = pair.solve_b(&rhs, RANGE_TOL)?;
    let mut z = w_star.clone();
    z.axpy(-1.0, &solver.apply_sqrt_b(&u_star)?);
    let consensus_residual = solver.apply_sqrt_b(&z)?.norm();
    let kkt_residual = solver.prox(solver.apply_a(&z)?).dist_sq(&x_star).sqrt();
    let null_component =
        u_star.block_sum().iter().map(|v| v * v).sum::<f64>().sqrt() / (instance.n() as f64).sqrt();
    let fp = FixedPoint {
        x_point,
        x_star,
        w_star,
        u_star,
        alpha,
        kkt_residual,
        consensus_residual,
        null_component,
    };
    let scale = 1.0 + fp.w_star.norm();
    if consensus_residual > 1e-8 * scale {
        return Err(Error::FixedPoint(format!(
            "consensus residual {consensus_residual:e} exceeds tolerance"
        )));
    }
    if null_component > 1e-9 * (1.0 + fp.u_star.norm()) {
        return Err(Error::FixedPoint(format!(
            "dual point has a component {null_component:e} along the consensus direction"
        )));
    }
    if kkt_residual > 1e-8 * scale {
        return Err(Error::FixedPoint(format!("KKT residual {kkt_residual:e} exceeds tolerance")));
    }
    Ok(fp)
}

/// `ζ_c = max{(1-αL)², (1-αμ)²}` and `ζ = max{ζ_c, 1 - p²σ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rate {
    pub zeta: f64,
    pub zeta_c: f64,
}

pub fn rate(alpha: f64, l: f64, mu: f64, p: f64, sigma_m: f64) -> Rate {
    let zeta_c = (1.0 - alpha * l).powi(2).max((1.0 - alpha * mu).powi(2));
    let zeta = zeta_c.max(1.0 - p * p * sigma_m);
    Rate { zeta, zeta_c }
}

/// Smallest `p` for which the dual term does not dominate the rate,
/// `√((1-ζ_c)/σ)`. Values at or above one mean every step should communicate.
pub fn skip_threshold(zeta_c: f64, sigma_m: f64) -> f64 {
    ((1.0 - zeta_c) / sigma_m).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// The primal factor dominates; some skipping is free.
    SkippingFree,
    /// The network factor dominates; communicate every step.
    NetworkBound,
}

pub fn regime(zeta_c: f64, sigma_m: f64) -> Regime {
    if (1.0 - zeta_c) / sigma_m < 1.0 {
        Regime::SkippingFree
    } else {
        Regime::NetworkBound
    }
}

/// `ϱ = min{α(2/L - α), σ}`.
pub fn varrho(alpha: f64, l: f64, sigma_m: f64) -> f64 {
    (alpha * (2.0 / l - alpha)).min(sigma_m)
}

/// Certificate values at one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepCertificate {
    /// `Φ = ‖x - x*‖² + ‖u - u*‖²/p²`.
    pub phi: f64,
    /// `Ψ = ‖∇F(x) - ∇F(x*)‖² + ‖u - u*‖²`.
    pub psi: f64,
    /// `E[Φ⁺]`.
    pub expected_phi_next: f64,
    /// `‖w - w*‖² + (1 - p²σ)‖u - u*‖²/p²`.
    pub lemma2_rhs: f64,
    pub lemma2_slack: f64,
    /// `Φ - E[Φ⁺] - ϱΨ`.
    pub thm1_slack: f64,
    /// `ζΦ - E[Φ⁺]`, only for strongly convex problems.
    pub thm2_slack: Option<f64>,
}

/// A certificate inequality that failed by more than its tolerance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub check: &'static str,
    pub k: usize,
    pub slack: f64,
    pub tolerance: f64,
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::Falsified {
            check: v.check,
            k: v.k,
            slack: v.slack,
            tolerance: v.tolerance,
        }
    }
}

impl StepCertificate {
    /// First inequality whose slack is below `-SLACK_TOL·(1 + scale)`, where
    /// the scale is the right-hand side for the descent check and `Φ` otherwise.
    pub fn violation(&self, k: usize) -> Option<Violation> {
        let checks = [
            (CHECK_DESCENT, Some(self.lemma2_slack), self.lemma2_rhs),
            (CHECK_SUBLINEAR, Some(self.thm1_slack), self.phi),
            (CHECK_CONTRACTION, self.thm2_slack, self.phi),
        ];
        checks.into_iter().find_map(|(check, slack, scale)| {
            let slack = slack?;
            let tolerance = SLACK_TOL * (1.0 + scale);
            (slack < -tolerance).then_some(Violation {
                check,
                k,
                slack,
                tolerance,
            })
        })
    }

    pub fn verify(&self, k: usize) -> Result<()> {
        match self.violation(k) {
            Some(v) => Err(v.into()),
            None => Ok(()),
        }
    }
}

/// Evaluates the certificates for one solver configuration and fixed point.
#[derive(Clone, Debug)]
pub struct Certifier<'a> {
    solver: FlexAtc<'a>,
    fp: &'a FixedPoint,
    grad_star: Stacked,
    rate: Option<Rate>,
    varrho: f64,
}

impl<'a> Certifier<'a> {
    pub fn new(solver: &FlexAtc<'a>, fp: &'a FixedPoint) -> Result<Self> {
        if (solver.alpha() - fp.alpha).abs() > 0.0 {
            return Err(Error::InvalidParameter(format!(
                "fixed point was computed for stepsize {}, solver uses {}",
                fp.alpha,
                solver.alpha()
            )));
        }
        let instance = solver.instance();
        let (l, mu) = instance.constants();
        let sigma = solver.pair().sigma_m();
        let grad_star = instance.grad_stacked(&fp.x_star)?;
        Ok(Certifier {
            solver: *solver,
            fp,
            grad_star,
            rate: (mu > 0.0).then(|| rate(solver.alpha(), l, mu, solver.p(), sigma)),
            varrho: varrho(solver.alpha(), l, sigma),
        })
    }

    pub fn rate(&self) -> Option<Rate> {
        self.rate
    }

    pub fn varrho(&self) -> f64 {
        self.varrho
    }

    /// `Φ(x, u)`.
    pub fn phi(&self, x: &Stacked, u: &Stacked) -> f64 {
        let p = self.solver.p();
        x.dist_sq(&self.fp.x_star) + u.dist_sq(&self.fp.u_star) / (p * p)
    }

    pub fn evaluate(&self, x: &Stacked, u: &Stacked) -> Result<StepCertificate> {
        let p = self.solver.p();
        let sigma = self.solver.pair().sigma_m();
        let (g, w) = self.solver.adapt(x)?;
        let (x1, u1) = self.solver.mirror_successor(&w, u, true)?;
        let (x0, u0) = self.solver.mirror_successor(&w, u, false)?;
        let expected_phi_next = p * self.phi(&x1, &u1) + (1.0 - p) * self.phi(&x0, &u0);
        let du = u.dist_sq(&self.fp.u_star);
        let phi = self.phi(x, u);
        let psi = g.dist_sq(&self.grad_star) + du;
        let lemma2_rhs = w.dist_sq(&self.fp.w_star) + (1.0 - p * p * sigma) * du / (p * p);
        Ok(StepCertificate {
            phi,
            psi,
            expected_phi_next,
            lemma2_rhs,
            lemma2_slack: lemma2_rhs - expected_phi_next,
            thm1_slack: phi - expected_phi_next - self.varrho * psi,
            thm2_slack: self.rate.map(|r| r.zeta * phi - expected_phi_next),
        })
    }

    /// `(‖∇F(x̄) - ∇F(x*)‖² + ‖ū - u*‖², Φ⁰/(ϱK))` for iterates averaged
    /// over `k = 0..K-1`.
    pub fn averaged_bound(&self, x_avg: &Stacked, u_avg: &Stacked, iterations: usize, phi0: f64) -> Result<(f64, f64)> {
        let g = self.solver.instance().grad_stacked(x_avg)?;
        let lhs = g.dist_sq(&self.grad_star) + u_avg.dist_sq(&self.fp.u_star);
        let bound = phi0 / (self.varrho * iterations as f64);
        Ok((lhs, bound))
    }

    /// [`Self::averaged_bound`] for a run that tracked the mirror from `u⁰ = 0`.
    pub fn averaged_bound_of(&self, trace: &RunTrace, x0: &Stacked) -> Result<(f64, f64)> {
        let u_avg = trace
            .u_avg
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("run did not track the mirror".into()))?;
        let phi0 = self.phi(x0, &Stacked::zeros(x0.blocks(), x0.dim()));
        self.averaged_bound(&trace.x_avg, u_avg, trace.iterations(), phi0)
    }
}

/// One-step descent slack at `(x, u)`: `RHS - E[Φ⁺]`.
pub fn descent_check(solver: &FlexAtc<'_>, fp: &FixedPoint, x: &Stacked, u: &Stacked) -> Result<f64> {
    Ok(Certifier::new(solver, fp)?.evaluate(x, u)?.lemma2_slack)
}

/// `(ζ, ζΦ - E[Φ⁺])`; requires `μ > 0`.
pub fn contraction_check(solver: &FlexAtc<'_>, fp: &FixedPoint, x: &Stacked, u: &Stacked) -> Result<(f64, f64)> {
    let c = Certifier::new(solver, fp)?;
    let zeta = c
        .rate()
        .ok_or_else(|| Error::InvalidParameter("linear contraction needs mu > 0".into()))?
        .zeta;
    let slack = c.evaluate(x, u)?.thm2_slack.expect("rate present");
    Ok((zeta, slack))
}

/// `Φ - E[Φ⁺] - ϱΨ` at `(x, u)`.
pub fn sublinear_step_check(solver: &FlexAtc<'_>, fp: &FixedPoint, x: &Stacked, u: &Stacked) -> Result<f64> {
    Ok(Certifier::new(solver, fp)?.evaluate(x, u)?.thm1_slack)
}

/// Expected cost to reach accuracy `eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Complexity {
    pub iterations: f64,
    pub communications: f64,
    pub p_star: f64,
}

/// `iterations = max{κ, 1/(p²σ)} ln(1/ε)`,
/// `communications = N (pκ + 1/(pσ)) ln(1/ε)`, `p* = min{1, 1/√(κσ)}`.
pub fn complexity(kappa: f64, sigma_m: f64, rounds: u32, p: f64, eps: f64) -> Result<Complexity> {
    if !(kappa >= 1.0) || !(sigma_m > 0.0 && sigma_m <= 1.0) || !(p > 0.0 && p <= 1.0) || !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "complexity needs kappa >= 1, sigma in (0, 1], p in (0, 1], eps in (0, 1); got {kappa}, {sigma_m}, {p}, {eps}"
        )));
    }
    let log = (1.0 / eps).ln();
    Ok(Complexity {
        iterations: kappa.max(1.0 / (p * p * sigma_m)) * log,
        communications: f64::from(rounds) * (p * kappa + 1.0 / (p * sigma_m)) * log,
        p_star: (1.0 / (kappa * sigma_m).sqrt()).min(1.0),
    })
}
