use std::fs::File;
use std::io::BufReader;

use flexatc::analysis::{fixed_point, rate, regime, skip_threshold, Certifier, FIXED_POINT_TOL, SLACK_TOL};
use flexatc::combiners::{preset_matrices, validate, ValidationReport, Variant, DEFAULT_PSD_TOL};
use flexatc::problem::{parse_libsvm, partition, ParseOptions};
use flexatc::{
    gen_topology, lazify, metropolis_weights, run, CombinerPair, Curvature, FixedPoint, MixingMatrix,
    ProblemInstance, ProxSpec, RunOptions, RunTrace, Stacked, Topology, TopologyKind, TraceOptions,
};
use rayon::prelude::*;

use crate::config::{CurvatureConfig, ExperimentConfig, GraphKind, ProblemConfig};
use crate::error::CliError;

/// Everything a grid of runs shares.
pub struct Experiment {
    pub topology: Topology,
    pub mixing: MixingMatrix,
    pub instance: ProblemInstance,
    pub variants: Vec<Variant>,
    pub alpha: f64,
    pub p_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub iterations: usize,
    pub target: f64,
}

/// One cell of the (variant, p, seed) grid.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub run_id: usize,
    pub variant: usize,
    pub p: f64,
    pub seed: u64,
}

pub struct Outcome {
    pub spec: RunSpec,
    pub variant: String,
    pub trace: RunTrace,
    /// `(lhs, bound)` of the averaged-iterate inequality, when certificates ran.
    pub averaged: Option<(f64, f64)>,
}

fn setup(context: &str) -> impl FnOnce(flexatc::Error) -> CliError + '_ {
    move |source| CliError::Setup {
        context: context.to_string(),
        source,
    }
}

pub fn build_topology(cfg: &ExperimentConfig) -> Result<(Topology, MixingMatrix), CliError> {
    let kind = match cfg.graph.kind {
        GraphKind::Ring => TopologyKind::Ring,
        GraphKind::Complete => TopologyKind::Complete,
        GraphKind::ErdosRenyi => TopologyKind::ErdosRenyi {
            q: cfg.graph.q.unwrap_or_default(),
        },
    };
    let topology = gen_topology(kind, cfg.graph.n, cfg.graph.seed).map_err(setup("graph"))?;
    let mut mixing = metropolis_weights(&topology).map_err(setup("mixing matrix"))?;
    if cfg.mixing.lazify {
        mixing = lazify(&mixing).map_err(setup("mixing matrix"))?;
    }
    Ok((topology, mixing))
}

fn prox_of(l1: Option<f64>) -> Result<ProxSpec, CliError> {
    match l1 {
        None => Ok(ProxSpec::None),
        Some(w) => ProxSpec::l1(w).map_err(|e| CliError::Config(format!("problem.l1: {e}"))),
    }
}

pub fn build_problem(cfg: &ExperimentConfig) -> Result<ProblemInstance, CliError> {
    let n = cfg.graph.n;
    match &cfg.problem {
        ProblemConfig::Quadratic { d, curvature, l1, seed } => {
            let curvature = match *curvature {
                CurvatureConfig::Unit => Curvature::Unit,
                CurvatureConfig::Geometric { mu, l } => Curvature::Geometric { mu, l },
                CurvatureConfig::Random { mu, l } => Curvature::Random { mu, l },
            };
            ProblemInstance::synthetic_quadratic(n, *d, curvature, prox_of(*l1)?, *seed)
                .map_err(|e| CliError::Config(format!("problem: {e}")))
        }
        ProblemConfig::Logistic {
            path,
            ridge,
            l1,
            samples,
            normalize,
            zero_labels,
            partition_seed,
        } => {
            let shown = path.display().to_string();
            let dataset_err = |source| CliError::Dataset {
                path: shown.clone(),
                source,
            };
            let file = File::open(path).map_err(|e| dataset_err(flexatc::Error::Io(e)))?;
            let opts = ParseOptions {
                zero_is_negative: *zero_labels,
            };
            let mut data = parse_libsvm(BufReader::new(file), opts).map_err(dataset_err)?;
            if let Some(count) = samples {
                data.truncate(*count);
            }
            if *normalize {
                data.normalize_max_abs();
            }
            let parts = partition(&data, n, *partition_seed).map_err(dataset_err)?;
            ProblemInstance::logistic(parts, *ridge, prox_of(*l1)?).map_err(dataset_err)
        }
    }
}

pub fn parse_variants(cfg: &ExperimentConfig) -> Result<Vec<Variant>, CliError> {
    cfg.combiner
        .variants
        .iter()
        .map(|s| {
            s.parse::<Variant>()
                .map_err(|e| CliError::Config(format!("combiner variant {s:?}: {e}")))
        })
        .collect()
}

pub fn build(cfg: &ExperimentConfig, seed_override: Option<u64>) -> Result<Experiment, CliError> {
    let (topology, mixing) = build_topology(cfg)?;
    let instance = build_problem(cfg)?;
    let variants = parse_variants(cfg)?;
    let alpha = cfg.run.alpha.resolve(instance.smoothness())?;
    Ok(Experiment {
        topology,
        mixing,
        instance,
        variants,
        alpha,
        p_list: cfg.run.p.clone(),
        seeds: seed_override.map_or_else(|| cfg.run.seeds.clone(), |s| vec![s]),
        iterations: cfg.run.iterations,
        target: cfg.run.target,
    })
}

/// Full admissibility report for a preset, including failing conditions.
pub fn admissibility(variant: &Variant, mixing: &MixingMatrix) -> Result<ValidationReport, CliError> {
    let (a, b) = preset_matrices(variant, mixing.matrix()).map_err(|source| CliError::Combiner {
        variant: variant.to_string(),
        source,
    })?;
    Ok(validate(&a, &b, mixing.matrix(), DEFAULT_PSD_TOL))
}

impl Experiment {
    pub fn pairs(&self) -> Result<Vec<CombinerPair>, CliError> {
        self.variants
            .iter()
            .map(|v| {
                CombinerPair::preset(v.clone(), &self.mixing).map_err(|source| CliError::Combiner {
                    variant: v.to_string(),
                    source,
                })
            })
            .collect()
    }

    /// Grid cells in (variant, p, seed) order.
    pub fn grid(&self) -> Vec<RunSpec> {
        let mut specs = Vec::new();
        for variant in 0..self.variants.len() {
            for &p in &self.p_list {
                for &seed in &self.seeds {
                    specs.push(RunSpec {
                        run_id: specs.len(),
                        variant,
                        p,
                        seed,
                    });
                }
            }
        }
        specs
    }

    pub fn references(&self, pairs: &[CombinerPair]) -> Result<Vec<FixedPoint>, CliError> {
        pairs
            .par_iter()
            .zip(&self.variants)
            .map(|(pair, v)| {
                fixed_point(&self.instance, pair, self.alpha, FIXED_POINT_TOL).map_err(|source| CliError::Setup {
                    context: format!("reference point for {v}"),
                    source,
                })
            })
            .collect()
    }

    /// Runs the grid on the current rayon pool. Results come back in grid
    /// order; the first failing cell in that order is reported.
    pub fn execute(&self, trace: TraceOptions) -> Result<Vec<Outcome>, CliError> {
        let pairs = self.pairs()?;
        let refs = self.references(&pairs)?;
        let results: Vec<Result<Outcome, CliError>> = self
            .grid()
            .into_par_iter()
            .map(|spec| self.run_one(spec, &pairs, &refs, trace))
            .collect();
        results.into_iter().collect()
    }

    fn run_one(
        &self,
        spec: RunSpec,
        pairs: &[CombinerPair],
        refs: &[FixedPoint],
        trace: TraceOptions,
    ) -> Result<Outcome, CliError> {
        let variant = self.variants[spec.variant].to_string();
        let label = run_label(&spec, &variant);
        let err = |source| CliError::Run {
            run: label.clone(),
            source,
        };
        let pair = &pairs[spec.variant];
        let fp = &refs[spec.variant];
        let opts = RunOptions {
            alpha: self.alpha,
            p: spec.p,
            seed: spec.seed,
            iterations: self.iterations,
            x0: None,
            reference: Some(fp),
            trace,
        };
        let result = run(&self.instance, pair, &opts).map_err(err)?;
        let averaged = if trace.certificates {
            let solver = flexatc::FlexAtc::new(&self.instance, pair, self.alpha, spec.p).map_err(err)?;
            let cert = Certifier::new(&solver, fp).map_err(err)?;
            let x0 = Stacked::zeros(self.instance.n(), self.instance.d());
            Some(cert.averaged_bound_of(&result, &x0).map_err(err)?)
        } else {
            None
        };
        Ok(Outcome {
            spec,
            variant,
            trace: result,
            averaged,
        })
    }

    /// Text block describing the problem, network and each combiner.
    pub fn describe(&self) -> Result<(String, bool), CliError> {
        let (l, mu) = (self.instance.smoothness(), self.instance.strong_convexity());
        let mut out = format!(
            "network: n = {}, {} edges, rho = {:.6}, psd = {}\nproblem: d = {}, L = {:.6e}, mu = {:.6e}, alpha = {:.6e}\n",
            self.topology.n(),
            self.topology.edges().len(),
            self.mixing.rho(),
            self.mixing.is_psd(),
            self.instance.d(),
            l,
            mu,
            self.alpha,
        );
        let mut ok = true;
        for v in &self.variants {
            let report = admissibility(v, &self.mixing)?;
            out.push_str(&format!("combiner {v}:\n{report}"));
            if !report.passed() {
                ok = false;
                continue;
            }
            let pair = match CombinerPair::preset(v.clone(), &self.mixing) {
                Ok(pair) => pair,
                Err(e) => {
                    ok = false;
                    out.push_str(&format!("  {e}\n"));
                    continue;
                }
            };
            let sigma = pair.sigma_m();
            out.push_str(&format!("  sigma_m(B) = {sigma:.6e}, rounds per exchange = {}\n", pair.comm_rounds()));
            if mu > 0.0 {
                let base = rate(self.alpha, l, mu, 1.0, sigma);
                out.push_str(&format!(
                    "  zeta(p = 1) = {:.6}, skip threshold = {:.4}, regime = {:?}\n",
                    base.zeta,
                    skip_threshold(base.zeta_c, sigma),
                    regime(base.zeta_c, sigma),
                ));
            }
        }
        Ok((out, ok))
    }
}

pub fn run_label(spec: &RunSpec, variant: &str) -> String {
    format!("{} ({variant}, p = {}, seed = {})", spec.run_id, spec.p, spec.seed)
}

/// Smallest slack of one inequality over a run.
#[derive(Clone, Debug, PartialEq)]
pub struct SlackSummary {
    pub check: &'static str,
    pub min_slack: f64,
    pub k: usize,
}

/// Per-inequality minima; the strong-convexity check is absent when no
/// record carries it.
pub fn slack_summaries(trace: &RunTrace) -> Vec<SlackSummary> {
    use flexatc::analysis::{CHECK_DESCENT, CHECK_SUBLINEAR, CHECK_CONTRACTION};
    type Getter = fn(&flexatc::TraceRecord) -> Option<f64>;
    let getters: [(&'static str, Getter); 3] = [
        (CHECK_DESCENT, |r| r.lemma2_slack),
        (CHECK_SUBLINEAR, |r| r.thm1_slack),
        (CHECK_CONTRACTION, |r| r.thm2_slack),
    ];
    getters
        .into_iter()
        .filter_map(|(check, get)| {
            trace
                .records
                .iter()
                .filter_map(|r| get(r).map(|s| (r.k, s)))
                .fold(None, |best: Option<(usize, f64)>, (k, s)| match best {
                    Some((_, b)) if b <= s => best,
                    _ => Some((k, s)),
                })
                .map(|(k, min_slack)| SlackSummary { check, min_slack, k })
        })
        .collect()
}

/// `bound - lhs` and whether it is within tolerance.
pub fn averaged_slack(lhs: f64, bound: f64) -> (f64, bool) {
    let slack = bound - lhs;
    (slack, slack >= -SLACK_TOL * (1.0 + bound))
}
