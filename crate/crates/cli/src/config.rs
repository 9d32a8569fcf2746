use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphConfig,
    #[serde(default)]
    pub mixing: MixingConfig,
    pub combiner: CombinerConfig,
    pub problem: ProblemConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Ring,
    Complete,
    ErdosRenyi,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub kind: GraphKind,
    pub n: usize,
    /// Edge probability, Erdős–Rényi only.
    pub q: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingConfig {
    /// Use `(I + W)/2` instead of the Metropolis matrix itself.
    #[serde(default)]
    pub lazify: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinerConfig {
    /// Strings such as `"ed"` or `"mg_ed:N=3"`.
    pub variants: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Quadratic {
        d: usize,
        #[serde(default)]
        curvature: CurvatureConfig,
        l1: Option<f64>,
        #[serde(default)]
        seed: u64,
    },
    Logistic {
        path: PathBuf,
        #[serde(default)]
        ridge: f64,
        l1: Option<f64>,
        /// Keep only the first this many samples.
        samples: Option<usize>,
        #[serde(default)]
        normalize: bool,
        /// Read `0` labels as `-1`.
        #[serde(default)]
        zero_labels: bool,
        #[serde(default)]
        partition_seed: u64,
    },
}

#[derive(Debug, Default, Deserialize, Clone, Copy)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurvatureConfig {
    #[default]
    Unit,
    Geometric {
        mu: f64,
        l: f64,
    },
    Random {
        mu: f64,
        l: f64,
    },
}

/// `"1/L"`, `"0.5/L"`, or an absolute number.
#[derive(Debug, Deserialize, Clone)]
#[serde(untagged)]
pub enum AlphaSpec {
    Absolute(f64),
    Relative(String),
}

impl Default for AlphaSpec {
    fn default() -> Self {
        AlphaSpec::Relative("1/L".into())
    }
}

impl AlphaSpec {
    /// Resolves against the smoothness constant and checks `α ∈ (0, 2/L)`.
    pub fn resolve(&self, l: f64) -> Result<f64, CliError> {
        let alpha = match self {
            AlphaSpec::Absolute(a) => *a,
            AlphaSpec::Relative(s) => {
                let body = s.trim();
                let coef = body
                    .strip_suffix("/L")
                    .ok_or_else(|| CliError::Config(format!("alpha {s:?}: expected a number or \"c/L\"")))?
                    .trim();
                let c: f64 = coef
                    .parse()
                    .map_err(|_| CliError::Config(format!("alpha {s:?}: bad coefficient {coef:?}")))?;
                c / l
            }
        };
        if !(alpha > 0.0 && alpha < 2.0 / l) {
            return Err(CliError::Config(format!(
                "alpha = {alpha} is outside (0, 2/L) = (0, {})",
                2.0 / l
            )));
        }
        Ok(alpha)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub alpha: AlphaSpec,
    pub p: Vec<f64>,
    pub iterations: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Relative error that counts as reaching the target.
    #[serde(default = "default_target")]
    pub target: f64,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_target() -> f64 {
    1e-6
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_csv")]
    pub csv: PathBuf,
    #[serde(default = "default_svg")]
    pub svg: PathBuf,
    /// Certificate slacks in the trace; a failed inequality exits with status 4.
    #[serde(default)]
    pub checks: bool,
    /// Objective and KKT residual columns.
    #[serde(default = "default_true")]
    pub metrics: bool,
    /// Summary written by the `check` command.
    #[serde(default = "default_checks_csv")]
    pub checks_csv: PathBuf,
    /// Edge list of the generated topology.
    pub edges: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            csv: default_csv(),
            svg: default_svg(),
            checks: false,
            metrics: true,
            checks_csv: default_checks_csv(),
            edges: None,
        }
    }
}

fn default_csv() -> PathBuf {
    "trace.csv".into()
}

fn default_svg() -> PathBuf {
    "convergence.svg".into()
}

fn default_checks_csv() -> PathBuf {
    "checks.csv".into()
}

fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads a config; relative dataset paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let ProblemConfig::Logistic { path: data, .. } = &mut cfg.problem {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.graph.n == 0 {
            return bad("graph.n must be at least 1".into());
        }
        if self.graph.kind == GraphKind::ErdosRenyi && self.graph.q.is_none() {
            return bad("graph.q is required for erdos_renyi".into());
        }
        if self.graph.kind != GraphKind::ErdosRenyi && self.graph.q.is_some() {
            return bad("graph.q only applies to erdos_renyi".into());
        }
        if self.combiner.variants.is_empty() {
            return bad("combiner.variants is empty".into());
        }
        if self.run.p.is_empty() {
            return bad("run.p is empty".into());
        }
        if let Some(p) = self.run.p.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return bad(format!("run.p value {p} is outside (0, 1]"));
        }
        if self.run.iterations == 0 {
            return bad("run.iterations must be at least 1".into());
        }
        if self.run.seeds.is_empty() {
            return bad("run.seeds is empty".into());
        }
        if !(self.run.target > 0.0) {
            return bad(format!("run.target must be positive, got {}", self.run.target));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[graph]
kind = "ring"
n = 4

[combiner]
variants = ["ed"]

[problem]
kind = "quadratic"
d = 2

[run]
p = [1.0, 0.5]
iterations = 10
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.run.seeds, vec![0]);
        assert_eq!(cfg.run.target, 1e-6);
        assert!(!cfg.mixing.lazify);
        assert!(cfg.output.metrics);
        assert!(matches!(cfg.run.alpha, AlphaSpec::Relative(ref s) if s == "1/L"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let typo = MINIMAL.replace("iterations = 10", "iterations = 10\nitrations = 5");
        assert!(ExperimentConfig::parse(&typo).is_err());
        let typo = MINIMAL.replace("d = 2", "d = 2\ndim = 3");
        assert!(ExperimentConfig::parse(&typo).is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for (from, to) in [
            ("p = [1.0, 0.5]", "p = [1.5]"),
            ("p = [1.0, 0.5]", "p = []"),
            ("iterations = 10", "iterations = 0"),
            ("kind = \"ring\"", "kind = \"erdos_renyi\""),
            ("n = 4", "n = 0"),
        ] {
            assert!(ExperimentConfig::parse(&MINIMAL.replace(from, to)).is_err(), "{to}");
        }
    }

    #[test]
    fn alpha_resolution() {
        assert_eq!(AlphaSpec::default().resolve(4.0).unwrap(), 0.25);
        assert_eq!(AlphaSpec::Relative("1.5/L".into()).resolve(2.0).unwrap(), 0.75);
        assert_eq!(AlphaSpec::Absolute(0.1).resolve(1.0).unwrap(), 0.1);
        assert!(AlphaSpec::Absolute(2.0).resolve(1.0).is_err());
        assert!(AlphaSpec::Relative("2/L".into()).resolve(1.0).is_err());
        assert!(AlphaSpec::Relative("L/2".into()).resolve(1.0).is_err());
    }

    #[test]
    fn curvature_and_logistic_sections() {
        let text = MINIMAL.replace(
            "d = 2",
            "d = 2\nl1 = 0.01\ncurvature = { profile = \"random\", mu = 0.001, l = 1.0 }",
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert!(matches!(
            cfg.problem,
            ProblemConfig::Quadratic {
                curvature: CurvatureConfig::Random { .. },
                l1: Some(_),
                ..
            }
        ));
        let text = MINIMAL.replace(
            "kind = \"quadratic\"\nd = 2",
            "kind = \"logistic\"\npath = \"data.txt\"\nridge = 0.01\nl1 = 0.01\nsamples = 100",
        );
        let cfg = ExperimentConfig::parse(&text).unwrap();
        assert!(matches!(cfg.problem, ProblemConfig::Logistic { samples: Some(100), .. }));
    }
}
