//! Run configuration files: strict JSON, unknown keys rejected.

use std::path::Path;

use mocg::{builtin_problem, BetaFamily, BetaRule, GuardPolicy, MetricProvider, Problem, SolveConfig, StepsizeMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Modifiers {
    /// The modifier each convergence theorem assumes (FR cap, CD restart,
    /// DY scale, PRP/HS clamp).
    #[default]
    Theorem,
    /// Unmodified formulas; PRP and HS are still clamped at zero.
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSpec {
    pub family: BetaFamily,
    #[serde(default, skip_serializing_if = "is_default")]
    pub modifiers: Modifiers,
    /// FR cap `|β| <= ξ β^FR`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    /// DY scale `η`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp_nonneg: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricSpec {
    Identity,
    Diagonal(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "defaults::report")]
    pub report: String,
    #[serde(default = "defaults::trajectory")]
    pub trajectory: String,
    #[serde(default = "defaults::comparison")]
    pub comparison: String,
    #[serde(default = "defaults::front")]
    pub front: String,
    #[serde(default = "defaults::summary")]
    pub summary: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            report: defaults::report(),
            trajectory: defaults::trajectory(),
            comparison: defaults::comparison(),
            front: defaults::front(),
            summary: defaults::summary(),
        }
    }
}

mod defaults {
    use super::*;

    pub fn report() -> String {
        "report.json".into()
    }
    pub fn trajectory() -> String {
        "trajectory.csv".into()
    }
    pub fn comparison() -> String {
        "comparison.json".into()
    }
    pub fn front() -> String {
        "front.csv".into()
    }
    pub fn summary() -> String {
        "front_summary.json".into()
    }
    pub fn metric() -> MetricSpec {
        MetricSpec::Identity
    }
    pub fn safety() -> f64 {
        mocg::stepsize::DEFAULT_SAFETY
    }
    pub fn tolerance() -> f64 {
        1e-6
    }
    pub fn max_iters() -> usize {
        2000
    }
    pub fn baseline() -> StepsizeMode {
        StepsizeMode::Wolfe
    }
    pub fn rho1() -> f64 {
        mocg::stepsize::DEFAULT_RHO1
    }
    pub fn rho2() -> f64 {
        mocg::stepsize::DEFAULT_RHO2
    }
    pub fn one() -> usize {
        1
    }
    pub fn starts() -> usize {
        100
    }
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub problem: String,
    pub dimension: usize,
    /// Starting point; drawn from the problem box with `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    pub beta: BetaSpec,
    #[serde(default = "defaults::metric")]
    pub metric: MetricSpec,
    #[serde(default = "defaults::safety")]
    pub safety: f64,
    #[serde(default = "defaults::tolerance")]
    pub tolerance: f64,
    #[serde(default = "defaults::max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub stepsize_mode: StepsizeMode,
    /// Line-search mode `compare` runs against the fixed stepsize.
    #[serde(default = "defaults::baseline")]
    pub baseline: StepsizeMode,
    #[serde(default = "defaults::rho1")]
    pub rho1: f64,
    #[serde(default = "defaults::rho2")]
    pub rho2: f64,
    #[serde(default)]
    pub guard: GuardPolicy,
    #[serde(default = "defaults::one")]
    pub record_every: usize,
    #[serde(default)]
    pub seed: u64,
    /// Number of starting points for `pareto`.
    #[serde(default = "defaults::starts")]
    pub starts: usize,
    #[serde(default)]
    pub output: OutputSpec,
}

/// A validated configuration ready to run.
#[derive(Clone)]
pub struct RunConfig {
    pub file: RunConfigFile,
    pub problem: Problem,
    pub solve: SolveConfig,
}

impl RunConfig {
    /// Starting point from the file, or a seeded draw from the problem box.
    pub fn x0(&self) -> Vec<f64> {
        match &self.file.x0 {
            Some(x) => x.clone(),
            None => mocg::pareto::sample_starts(&self.problem, 1, self.file.seed).remove(0),
        }
    }

    /// The same configuration with another stepsize mode.
    pub fn with_mode(&self, mode: StepsizeMode) -> SolveConfig {
        SolveConfig {
            stepsize_mode: mode,
            ..self.solve.clone()
        }
    }
}

/// 1-based line of the first occurrence of `"key"` in `source`.
fn line_of(source: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    source
        .lines()
        .position(|l| l.contains(&needle))
        .map_or(1, |i| i + 1)
}

pub fn load(path: &Path, seed_override: Option<u64>) -> Result<RunConfig, CliError> {
    let source = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    parse(&source, &path.display().to_string(), seed_override)
}

/// Parses and validates a configuration. `origin` prefixes error messages.
pub fn parse(source: &str, origin: &str, seed_override: Option<u64>) -> Result<RunConfig, CliError> {
    let mut file: RunConfigFile = serde_json::from_str(source).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        CliError::Config {
            origin: origin.to_string(),
            line: e.line(),
            message: format!("{msg} (column {})", e.column()),
        }
    })?;
    if let Some(seed) = seed_override {
        file.seed = seed;
    }
    let fail = |key: &str, message: String| CliError::Config {
        origin: origin.to_string(),
        line: line_of(source, key),
        message,
    };

    let problem = builtin_problem(&file.problem, file.dimension).map_err(|e| {
        let key = if file.dimension == 0 { "dimension" } else { "problem" };
        fail(key, e.to_string())
    })?;
    if let Some(x0) = &file.x0 {
        if x0.len() != file.dimension {
            return Err(fail(
                "x0",
                format!("x0 has {} entries but dimension is {}", x0.len(), file.dimension),
            ));
        }
        if x0.iter().any(|v| !v.is_finite()) || !problem.domain().contains(x0) {
            return Err(fail("x0", "x0 must be finite and inside the problem domain".into()));
        }
    }

    let mut rule = match file.beta.modifiers {
        Modifiers::Theorem => BetaRule::theorem(file.beta.family),
        Modifiers::Plain => BetaRule::plain(file.beta.family),
    };
    if let Some(xi) = file.beta.xi {
        rule = rule.with_fr_cap(xi).map_err(|e| fail("xi", e.to_string()))?;
    }
    if let Some(eta) = file.beta.eta {
        rule = rule.with_dy_scale(eta).map_err(|e| fail("eta", e.to_string()))?;
    }
    if let Some(clamp) = file.beta.clamp_nonneg {
        rule = rule.with_clamp(clamp);
    }
    rule.validate().map_err(|e| fail("beta", e.to_string()))?;

    let metric = match &file.metric {
        MetricSpec::Identity => MetricProvider::Identity,
        MetricSpec::Diagonal(entries) => {
            let m = MetricProvider::diagonal(entries.clone()).map_err(|e| fail("metric", e.to_string()))?;
            m.check_dim(file.dimension).map_err(|e| fail("metric", e.to_string()))?;
            m
        }
    };
    if !(file.safety > 0.0 && file.safety < 1.0) {
        return Err(fail("safety", format!("safety must lie in (0, 1), got {}", file.safety)));
    }
    if !(file.tolerance > 0.0) {
        return Err(fail("tolerance", "tolerance must be positive".into()));
    }
    if file.max_iters == 0 {
        return Err(fail("max_iters", "max_iters must be at least 1".into()));
    }
    if file.record_every == 0 {
        return Err(fail("record_every", "record_every must be at least 1".into()));
    }
    if file.starts == 0 {
        return Err(fail("starts", "starts must be at least 1".into()));
    }
    if file.baseline == StepsizeMode::Fixed {
        return Err(fail("baseline", "baseline must be a line-search mode".into()));
    }

    let solve = SolveConfig {
        beta_rule: rule,
        metric,
        safety: file.safety,
        tolerance: file.tolerance,
        max_iters: file.max_iters,
        stepsize_mode: file.stepsize_mode,
        record_every: file.record_every,
        rho1: file.rho1,
        rho2: file.rho2,
        guard: file.guard,
        lipschitz_seed: file.seed,
    };
    solve.validate().map_err(|e| fail("rho1", e.to_string()))?;
    Ok(RunConfig { file, problem, solve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const BASIC: &str = r#"{
  "problem": "quad-pair",
  "dimension": 2,
  "x0": [0.0, 1.0],
  "beta": { "family": "fr", "xi": 0.9 }
}"#;

    fn config_error(src: &str) -> (usize, String) {
        match parse(src, "cfg.json", None) {
            Err(CliError::Config { line, message, .. }) => (line, message),
            Err(e) => panic!("unexpected error {e}"),
            Ok(_) => panic!("config accepted"),
        }
    }

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = parse(BASIC, "cfg.json", None).unwrap();
        assert_eq!(cfg.solve.tolerance, 1e-6);
        assert_eq!(cfg.solve.max_iters, 2000);
        assert_eq!(cfg.solve.beta_rule.fr_cap_xi, Some(0.9));
        assert_eq!(cfg.x0(), vec![0.0, 1.0]);
        assert_eq!(cfg.file.output.report, "report.json");
    }

    #[test]
    fn unknown_beta_is_rejected_on_its_line() {
        let src = BASIC.replace("\"fr\"", "\"xyz\"");
        let (line, msg) = config_error(&src);
        assert_eq!(line, 5);
        assert!(msg.contains("unknown variant"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let src = BASIC.replace("\"dimension\": 2,", "\"dimension\": 2,\n  \"colour\": 1,");
        let (line, msg) = config_error(&src);
        assert_eq!(line, 4);
        assert!(msg.contains("colour"), "{msg}");
    }

    #[test]
    fn out_of_range_values_point_at_their_key() {
        let src = BASIC.replace("\"dimension\": 2,", "\"dimension\": 2,\n  \"safety\": 1.2,");
        let (line, msg) = config_error(&src);
        assert_eq!(line, 4);
        assert!(msg.contains("safety"));

        let (line, _) = config_error(&BASIC.replace("quad-pair", "nope"));
        assert_eq!(line, 2);
        let (line, _) = config_error(&BASIC.replace("[0.0, 1.0]", "[0.0]"));
        assert_eq!(line, 4);
    }

    #[test]
    fn seed_override_draws_a_start() {
        let src = BASIC.replace("  \"x0\": [0.0, 1.0],\n", "");
        let a = parse(&src, "c", Some(3)).unwrap();
        let b = parse(&src, "c", Some(3)).unwrap();
        assert_eq!(a.x0(), b.x0());
        assert_eq!(a.file.seed, 3);
        assert_ne!(a.x0(), parse(&src, "c", Some(4)).unwrap().x0());
    }

    fn arb_config() -> impl Strategy<Value = RunConfigFile> {
        let beta = (
            prop::sample::select(BetaFamily::ALL.to_vec()),
            prop::option::of(0.0..1.0_f64),
            prop::option::of(0.0..1.0_f64),
            prop::option::of(any::<bool>()),
            any::<bool>(),
        )
            .prop_map(|(family, xi, eta, clamp_nonneg, plain)| BetaSpec {
                family,
                modifiers: if plain { Modifiers::Plain } else { Modifiers::Theorem },
                xi,
                eta,
                clamp_nonneg,
            });
        let metric = prop_oneof![
            Just(MetricSpec::Identity),
            prop::collection::vec(0.1..5.0_f64, 1..4).prop_map(MetricSpec::Diagonal),
        ];
        (
            prop::sample::select(mocg::CATALOG.to_vec()),
            1usize..6,
            prop::option::of(prop::collection::vec(-9.0..9.0_f64, 1..6)),
            beta,
            metric,
            (0.01..0.99_f64, 1e-12..1e-2_f64, 1usize..5000, any::<u64>(), 1usize..500),
            prop::sample::select(vec![StepsizeMode::Fixed, StepsizeMode::Wolfe, StepsizeMode::StrongWolfe]),
        )
            .prop_map(
                |(problem, dimension, x0, beta, metric, (safety, tolerance, max_iters, seed, starts), mode)| {
                    RunConfigFile {
                        problem: problem.to_string(),
                        dimension,
                        x0,
                        beta,
                        metric,
                        safety,
                        tolerance,
                        max_iters,
                        stepsize_mode: mode,
                        baseline: StepsizeMode::StrongWolfe,
                        rho1: 1e-3,
                        rho2: 0.5,
                        guard: GuardPolicy::Off,
                        record_every: 2,
                        seed,
                        starts,
                        output: OutputSpec::default(),
                    }
                },
            )
    }

    proptest! {
        #[test]
        fn config_round_trips(cfg in arb_config()) {
            let text = serde_json::to_string_pretty(&cfg).unwrap();
            let back: RunConfigFile = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            let again = serde_json::to_string_pretty(&back).unwrap();
            prop_assert_eq!(again, text);
        }
    }
}
