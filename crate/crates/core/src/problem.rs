//! Agent losses, the shared proximal term, and LIBSVM ingestion.
//!
//! The global problem is `min_x (1/n) Σ_i [f_i(x) + r(x)]` where each `f_i`
//! is either a diagonal quadratic `½ Σ_j h_j (x_j - b_j)²` or an
//! l2-regularized logistic loss over the agent's data slice, and `r` is
//! either absent or a weighted l1 norm.

use std::fmt::Write as _;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Stacked;

const POWER_ITER_CAP: usize = 100_000;
const POWER_ITER_TOL: f64 = 1e-8;

/// One labelled example with sparse features (0-based indices, ascending).
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub features: Vec<(u32, f64)>,
    /// `+1` or `-1`.
    pub label: i8,
}

impl Sample {
    fn dot(&self, x: &[f64]) -> f64 {
        self.features.iter().map(|&(j, v)| v * x[j as usize]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset {
    pub d: usize,
    pub samples: Vec<Sample>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions {
    /// Accept `0` labels and read them as `-1`.
    pub zero_is_negative: bool,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Keeps the first `count` samples.
    pub fn truncate(&mut self, count: usize) {
        self.samples.truncate(count);
    }

    /// Divides each feature by its largest absolute value over the dataset.
    pub fn normalize_max_abs(&mut self) {
        let mut scale = vec![0.0f64; self.d];
        for s in &self.samples {
            for &(j, v) in &s.features {
                scale[j as usize] = scale[j as usize].max(v.abs());
            }
        }
        for s in &mut self.samples {
            for (j, v) in &mut s.features {
                let m = scale[*j as usize];
                if m > 0.0 {
                    *v /= m;
                }
            }
        }
    }

    /// LIBSVM text with 1-based indices; values use the shortest exact
    /// decimal form so parsing the output reproduces the dataset.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(if s.label > 0 { "+1" } else { "-1" });
            for &(j, v) in &s.features {
                write!(out, " {}:{}", j + 1, v).expect("write to string");
            }
            out.push('\n');
        }
        out
    }
}

/// Reads LIBSVM `label idx:val idx:val ...` lines. Blank lines and `#`
/// comments are skipped; `d` is one past the largest index seen.
pub fn parse_libsvm(reader: impl BufRead, opts: ParseOptions) -> Result<Dataset> {
    let mut samples = Vec::new();
    let mut d = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: lineno,
            message,
        };
        let mut toks = content.split_whitespace();
        let label_tok = toks.next().expect("non-empty line");
        let label_val: f64 = label_tok
            .parse()
            .map_err(|_| bad(format!("bad label {label_tok:?}")))?;
        let label = if label_val == 1.0 {
            1
        } else if label_val == -1.0 || (label_val == 0.0 && opts.zero_is_negative) {
            -1
        } else {
            return Err(bad(format!("label {label_tok:?} is not +1/-1")));
        };
        let mut features = Vec::new();
        let mut last: Option<u32> = None;
        for tok in toks {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| bad(format!("token {tok:?} is not idx:val")))?;
            let i: u32 = i
                .parse()
                .map_err(|_| bad(format!("bad feature index in {tok:?}")))?;
            if i == 0 {
                return Err(bad(format!("feature indices are 1-based, got {tok:?}")));
            }
            let v: f64 = v
                .parse()
                .map_err(|_| bad(format!("bad feature value in {tok:?}")))?;
            let j = i - 1;
            if last.is_some_and(|l| j <= l) {
                return Err(bad(format!("feature indices not ascending at {tok:?}")));
            }
            last = Some(j);
            d = d.max(j as usize + 1);
            features.push((j, v));
        }
        samples.push(Sample { features, label });
    }
    Ok(Dataset { d, samples })
}

/// Seeded uniform shuffle split into `n` parts whose sizes differ by at most one.
pub fn partition(ds: &Dataset, n: usize, seed: u64) -> Result<Vec<Dataset>> {
    if n == 0 || n > ds.len() {
        return Err(Error::Partition {
            samples: ds.len(),
            agents: n,
        });
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let base = ds.len() / n;
    let extra = ds.len() % n;
    let mut parts = Vec::with_capacity(n);
    let mut cursor = 0;
    for i in 0..n {
        let size = base + usize::from(i < extra);
        let samples = order[cursor..cursor + size]
            .iter()
            .map(|&k| ds.samples[k].clone())
            .collect();
        cursor += size;
        parts.push(Dataset { d: ds.d, samples });
    }
    Ok(parts)
}

/// `½ Σ_j h_j (x_j - b_j)²`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticLoss {
    pub target: Vec<f64>,
    pub curvature: Vec<f64>,
}

impl QuadraticLoss {
    /// Unit curvature: `½‖x - b‖²`.
    pub fn unit(target: Vec<f64>) -> Self {
        let curvature = vec![1.0; target.len()];
        QuadraticLoss { target, curvature }
    }
}

/// `(1/m) Σ_j ln(1 + exp(-y_j a_jᵀx)) + (γ₁/2)‖x‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticLoss {
    pub data: Dataset,
    pub ridge: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AgentLoss {
    Quadratic(QuadraticLoss),
    Logistic(LogisticLoss),
}

impl AgentLoss {
    pub fn dim(&self) -> usize {
        match self {
            AgentLoss::Quadratic(q) => q.target.len(),
            AgentLoss::Logistic(l) => l.data.d,
        }
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_len(self.dim(), x)?;
        Ok(match self {
            AgentLoss::Quadratic(q) => {
                0.5 * x
                    .iter()
                    .zip(&q.target)
                    .zip(&q.curvature)
                    .map(|((xi, bi), hi)| hi * (xi - bi) * (xi - bi))
                    .sum::<f64>()
            }
            AgentLoss::Logistic(l) => {
                let m = l.data.len().max(1) as f64;
                let loss: f64 = l
                    .data
                    .samples
                    .iter()
                    .map(|s| softplus(-f64::from(s.label) * s.dot(x)))
                    .sum();
                loss / m + 0.5 * l.ridge * x.iter().map(|v| v * v).sum::<f64>()
            }
        })
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.grad_into(x, &mut out)?;
        Ok(out)
    }

    /// Writes `∇f_i(x)` into `out`.
    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_len(self.dim(), x)?;
        check_len(self.dim(), out)?;
        match self {
            AgentLoss::Quadratic(q) => {
                for (((o, xi), bi), hi) in out.iter_mut().zip(x).zip(&q.target).zip(&q.curvature) {
                    *o = hi * (xi - bi);
                }
            }
            AgentLoss::Logistic(l) => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = l.ridge * xi;
                }
                let inv_m = 1.0 / l.data.len().max(1) as f64;
                for s in &l.data.samples {
                    let y = f64::from(s.label);
                    let coef = -y * inv_m / (1.0 + (y * s.dot(x)).exp());
                    for &(j, v) in &s.features {
                        out[j as usize] += coef * v;
                    }
                }
            }
        }
        Ok(())
    }

    /// `(L_i, μ_i)`: exact for quadratics; for logistic losses
    /// `L_i = λ_max(AᵀA / 4m) + γ₁` by power iteration and `μ_i = γ₁`.
    pub fn constants(&self) -> Result<(f64, f64)> {
        match self {
            AgentLoss::Quadratic(q) => {
                let max = q.curvature.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = q.curvature.iter().copied().fold(f64::INFINITY, f64::min);
                Ok((max, min))
            }
            AgentLoss::Logistic(l) => Ok((logistic_gram_max_eig(&l.data)? + l.ridge, l.ridge)),
        }
    }
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Largest eigenvalue of `AᵀA / (4m)`, returned as Rayleigh quotient plus
/// residual norm so the value sits at or above the true eigenvalue.
fn logistic_gram_max_eig(data: &Dataset) -> Result<f64> {
    let d = data.d;
    if d == 0 || data.is_empty() {
        return Ok(0.0);
    }
    let scale = 1.0 / (4.0 * data.len() as f64);
    let apply = |v: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|o| *o = 0.0);
        for s in &data.samples {
            let t = s.dot(v) * scale;
            for &(j, a) in &s.features {
                out[j as usize] += t * a;
            }
        }
    };
    let mut v: Vec<f64> = (0..d).map(|j| 1.0 + 0.01 * j as f64).collect();
    normalize(&mut v);
    let mut gv = vec![0.0; d];
    for _ in 0..POWER_ITER_CAP {
        apply(&v, &mut gv);
        let rayleigh: f64 = v.iter().zip(&gv).map(|(a, b)| a * b).sum();
        if rayleigh <= 0.0 {
            // v fell in the null space; the Gram operator is zero there
            let norm = gv.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Ok(0.0);
            }
        }
        let residual = v
            .iter()
            .zip(&gv)
            .map(|(a, b)| (b - rayleigh * a).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual <= POWER_ITER_TOL * rayleigh.abs() {
            return Ok(rayleigh + residual);
        }
        v.copy_from_slice(&gv);
        normalize(&mut v);
    }
    Err(Error::PowerIteration {
        iterations: POWER_ITER_CAP,
    })
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn check_len(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Dimension {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

/// Shared nonsmooth term `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProxSpec {
    None,
    L1 { weight: f64 },
}

impl ProxSpec {
    pub fn l1(weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "l1 weight must be finite and positive, got {weight}"
            )));
        }
        Ok(ProxSpec::L1 { weight })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            ProxSpec::None => 0.0,
            ProxSpec::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
        }
    }

    /// `prox_{α r}` in place: identity, or soft-thresholding at `α γ₂`.
    pub fn apply_in_place(&self, v: &mut [f64], alpha: f64) {
        if let ProxSpec::L1 { weight } = *self {
            let t = alpha * weight;
            for x in v.iter_mut() {
                *x = x.signum() * (x.abs() - t).max(0.0);
            }
        }
    }
}

pub fn prox_apply(spec: &ProxSpec, v: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    spec.apply_in_place(&mut out, alpha);
    out
}

/// Curvature layout for synthetic quadratic instances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Curvature {
    /// `h = 1` everywhere.
    Unit,
    /// Coordinate `j` gets `μ (L/μ)^{j/(d-1)}`, identical across agents.
    Geometric { mu: f64, l: f64 },
    /// Log-uniform in `[μ, L]` per agent and coordinate, with one entry
    /// pinned at each end so the constants are exactly `(L, μ)`.
    Random { mu: f64, l: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    losses: Vec<AgentLoss>,
    prox: ProxSpec,
    d: usize,
    l: f64,
    mu: f64,
}

impl ProblemInstance {
    /// Computes the common `L = max_i L_i` and `μ = min_i μ_i`.
    pub fn new(losses: Vec<AgentLoss>, prox: ProxSpec) -> Result<Self> {
        let d = losses
            .first()
            .map(AgentLoss::dim)
            .ok_or_else(|| Error::InvalidParameter("at least one agent is required".into()))?;
        let mut l = 0.0f64;
        let mut mu = f64::INFINITY;
        for loss in &losses {
            if loss.dim() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: loss.dim(),
                });
            }
            let (li, mi) = loss.constants()?;
            l = l.max(li);
            mu = mu.min(mi);
        }
        if !(l > 0.0 && l.is_finite()) || !(mu >= 0.0) || mu > l {
            return Err(Error::InvalidParameter(format!(
                "constants must satisfy L >= mu >= 0 and L > 0 (L = {l}, mu = {mu})"
            )));
        }
        Ok(ProblemInstance {
            losses,
            prox,
            d,
            l,
            mu,
        })
    }

    /// Quadratic agents with standard-normal targets.
    pub fn synthetic_quadratic(
        n: usize,
        d: usize,
        curvature: Curvature,
        prox: ProxSpec,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter("n and d must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut losses = Vec::with_capacity(n);
        for i in 0..n {
            let target: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let h: Vec<f64> = match curvature {
                Curvature::Unit => vec![1.0; d],
                Curvature::Geometric { mu, l } => {
                    check_range(mu, l)?;
                    (0..d)
                        .map(|j| {
                            if d == 1 {
                                mu
                            } else if j == d - 1 {
                                l
                            } else {
                                mu * (l / mu).powf(j as f64 / (d - 1) as f64)
                            }
                        })
                        .collect()
                }
                Curvature::Random { mu, l } => {
                    check_range(mu, l)?;
                    (0..d)
                        .map(|j| {
                            let flat = i * d + j;
                            if flat == 0 {
                                mu
                            } else if flat == n * d - 1 {
                                l
                            } else {
                                mu * (l / mu).powf(rng.random::<f64>())
                            }
                        })
                        .collect()
                }
            };
            losses.push(AgentLoss::Quadratic(QuadraticLoss {
                target,
                curvature: h,
            }));
        }
        Self::new(losses, prox)
    }

    /// Logistic agents over the given slices, all with ridge `γ₁`.
    pub fn logistic(parts: Vec<Dataset>, ridge: f64, prox: ProxSpec) -> Result<Self> {
        if !(ridge >= 0.0 && ridge.is_finite()) {
            return Err(Error::InvalidParameter(format!("ridge must be >= 0, got {ridge}")));
        }
        let losses = parts
            .into_iter()
            .map(|data| AgentLoss::Logistic(LogisticLoss { data, ridge }))
            .collect();
        Self::new(losses, prox)
    }

    pub fn n(&self) -> usize {
        self.losses.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn losses(&self) -> &[AgentLoss] {
        &self.losses
    }

    pub fn prox(&self) -> &ProxSpec {
        &self.prox
    }

    /// `(L, μ)`.
    pub fn constants(&self) -> (f64, f64) {
        (self.l, self.mu)
    }

    pub fn smoothness(&self) -> f64 {
        self.l
    }

    pub fn strong_convexity(&self) -> f64 {
        self.mu
    }

    /// `∇F(x) = col{∇f_i(x_i)}`.
    pub fn grad_stacked(&self, x: &Stacked) -> Result<Stacked> {
        self.check_stacked(x)?;
        let mut out = Stacked::zeros(self.n(), self.d);
        for (i, loss) in self.losses.iter().enumerate() {
            loss.grad_into(x.block(i), out.block_mut(i))?;
        }
        Ok(out)
    }

    /// `(1/n) Σ_i ∇f_i(x)` at a single point.
    pub fn mean_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut acc = vec![0.0; self.d];
        let mut g = vec![0.0; self.d];
        for loss in &self.losses {
            loss.grad_into(x, &mut g)?;
            for (a, gi) in acc.iter_mut().zip(&g) {
                *a += gi;
            }
        }
        let inv = 1.0 / self.n() as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Ok(acc)
    }

    /// Global objective `(1/n) Σ_i [f_i(x) + r(x)]`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        let mut total = 0.0;
        for loss in &self.losses {
            total += loss.value(x)?;
        }
        Ok(total / self.n() as f64 + self.prox.value(x))
    }

    pub fn prox_stacked_in_place(&self, x: &mut Stacked, alpha: f64) {
        self.prox.apply_in_place(x.as_mut_slice(), alpha);
    }

    fn check_stacked(&self, x: &Stacked) -> Result<()> {
        if x.blocks() != self.n() || x.dim() != self.d {
            return Err(Error::Dimension {
                expected: self.n() * self.d,
                found: x.blocks() * x.dim(),
            });
        }
        Ok(())
    }
}

fn check_range(mu: f64, l: f64) -> Result<()> {
    if !(mu > 0.0 && l >= mu && l.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "curvature range needs 0 < mu <= L, got mu = {mu}, L = {l}"
        )));
    }
    Ok(())
}
