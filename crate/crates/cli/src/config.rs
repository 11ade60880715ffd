//! Experiment configuration: TOML with one table per subcommand.
//!
//! ```toml
//! seed = 42
//!
//! [estimate-cn]
//! family = "pareto-tail"
//! alpha = 0.5
//! N = 1000
//! replicates = 100000
//! ```
//!
//! Top-level keys are `seed` and `out`; every other key lives in the table
//! of the subcommand it configures. Parsing reports every violation at once.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use toml::{Table, Value};

use selgen::fitnesswf::FitnessSpec;
use selgen::frontprop::NoiseSpec;
use selgen::genealogy::PopulationModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    SimulateFront,
    SimulateWf,
    EstimateCn,
    MergerStats,
    VerifyRates,
    VerifyMoments,
    FrontSpeed,
    ReferenceCoalescent,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::SimulateFront,
        Command::SimulateWf,
        Command::EstimateCn,
        Command::MergerStats,
        Command::VerifyRates,
        Command::VerifyMoments,
        Command::FrontSpeed,
        Command::ReferenceCoalescent,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SimulateFront => "simulate-front",
            Command::SimulateWf => "simulate-wf",
            Command::EstimateCn => "estimate-cn",
            Command::MergerStats => "merger-stats",
            Command::VerifyRates => "verify-rates",
            Command::VerifyMoments => "verify-moments",
            Command::FrontSpeed => "front-speed",
            Command::ReferenceCoalescent => "reference-coalescent",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown subcommand {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateFrontConfig {
    #[serde(rename = "N")]
    pub n_pop: usize,
    pub generations: usize,
    pub noise: NoiseSpec,
    /// Inverse temperature of the front position `Φ`.
    pub beta: f64,
    pub start: Start,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Start {
    Zeros,
    Invariant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateWfConfig {
    #[serde(rename = "N")]
    pub n_pop: usize,
    pub generations: usize,
    pub fitness: FitnessSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateCnConfig {
    pub model: PopulationModel,
    #[serde(rename = "N")]
    pub n_grid: Vec<usize>,
    pub n: usize,
    pub replicates: usize,
    /// Expected `c_N` and the allowed relative error, if checked.
    pub expected: Option<f64>,
    pub rel_tol: f64,
    /// Largest allowed gap between the two estimators, in combined SEs.
    pub agreement_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MergerStatsConfig {
    pub model: PopulationModel,
    #[serde(rename = "N")]
    pub n_pop: usize,
    pub n: usize,
    pub min_events: u64,
    pub min_generations: usize,
    pub max_generations: usize,
    /// Predicted share of first mergers that take all `n` lineages at once.
    pub expected_fraction: Option<f64>,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRatesConfig {
    pub alpha: f64,
    pub max_b: usize,
    pub rel_tol: f64,
    pub consistency_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyMomentsConfig {
    pub fitness: FitnessSpec,
    #[serde(rename = "N")]
    pub n_grid: Vec<usize>,
    pub b_list: Vec<usize>,
    pub mc_samples: usize,
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontSpeedConfig {
    #[serde(rename = "N")]
    pub n_pop: usize,
    pub generations: usize,
    pub burn_in: usize,
    pub noise: NoiseSpec,
    pub beta: f64,
    pub start: Start,
    pub oracle_samples: usize,
    pub rel_tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceKind {
    Kingman,
    Beta,
    BolthausenSznitman,
    Xi,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceConfig {
    pub kind: ReferenceKind,
    pub alpha: Option<f64>,
    pub n: usize,
    pub replicates: usize,
    pub horizon: f64,
    pub generations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    SimulateFront(SimulateFrontConfig),
    SimulateWf(SimulateWfConfig),
    EstimateCn(EstimateCnConfig),
    MergerStats(MergerStatsConfig),
    VerifyRates(VerifyRatesConfig),
    VerifyMoments(VerifyMomentsConfig),
    FrontSpeed(FrontSpeedConfig),
    Reference(ReferenceConfig),
}

/// Validated configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub params: Params,
}

/// Reads typed keys from one table, remembering which were used and every
/// problem met along the way.
struct Reader<'a> {
    section: String,
    table: Option<&'a Table>,
    used: BTreeSet<String>,
    errors: &'a mut Vec<String>,
}

impl<'a> Reader<'a> {
    fn raw(&mut self, key: &str) -> Option<&'a Value> {
        self.used.insert(key.to_string());
        self.table.and_then(|t| t.get(key))
    }

    fn err(&mut self, key: &str, msg: impl fmt::Display) {
        self.errors.push(format!("[{}] {key}: {msg}", self.section));
    }

    fn f64_opt(&mut self, key: &str) -> Option<f64> {
        match self.raw(key) {
            None => None,
            Some(Value::Float(x)) => Some(*x),
            Some(Value::Integer(i)) => Some(*i as f64),
            Some(v) => {
                self.err(key, format!("expected a number, got {v}"));
                None
            }
        }
    }

    fn f64_in(&mut self, key: &str, default: Option<f64>, ok: impl Fn(f64) -> bool, range: &str) -> f64 {
        match self.f64_opt(key).or(default) {
            Some(x) if ok(x) => x,
            Some(x) => {
                self.err(key, format!("{x} is out of range ({range})"));
                f64::NAN
            }
            None => {
                self.err(key, "missing");
                f64::NAN
            }
        }
    }

    fn int_opt(&mut self, key: &str) -> Option<i64> {
        match self.raw(key) {
            None => None,
            Some(Value::Integer(i)) => Some(*i),
            Some(Value::Float(x)) if x.fract() == 0.0 && x.abs() < 9e15 => Some(*x as i64),
            Some(v) => {
                self.err(key, format!("expected an integer, got {v}"));
                None
            }
        }
    }

    fn usize_in(&mut self, key: &str, default: Option<usize>, min: usize, max: usize) -> usize {
        let v = match self.int_opt(key) {
            Some(i) => Some(i),
            None => default.map(|d| d as i64),
        };
        match v {
            Some(i) if i >= min as i64 && (i as u128) <= max as u128 => i as usize,
            Some(i) => {
                self.err(key, format!("{i} is out of range ({min}..={max})"));
                min
            }
            None => {
                self.err(key, "missing");
                min
            }
        }
    }

    /// A single integer or an array of integers.
    fn usize_list(&mut self, key: &str, min: usize, max: usize) -> Vec<usize> {
        let vals: Vec<i64> = match self.raw(key) {
            None => {
                self.err(key, "missing");
                return vec![min];
            }
            Some(Value::Integer(i)) => vec![*i],
            Some(Value::Array(a)) if !a.is_empty() => {
                let mut out = Vec::new();
                for v in a {
                    match v {
                        Value::Integer(i) => out.push(*i),
                        other => {
                            self.err(key, format!("expected integers, got {other}"));
                            return vec![min];
                        }
                    }
                }
                out
            }
            Some(v) => {
                self.err(key, format!("expected an integer or a nonempty array, got {v}"));
                return vec![min];
            }
        };
        let mut out = Vec::new();
        for i in vals {
            if i >= min as i64 && (i as u128) <= max as u128 {
                out.push(i as usize);
            } else {
                self.err(key, format!("{i} is out of range ({min}..={max})"));
            }
        }
        if out.is_empty() {
            out.push(min);
        }
        out
    }

    fn str_opt(&mut self, key: &str) -> Option<&'a str> {
        match self.raw(key) {
            None => None,
            Some(Value::String(s)) => Some(s.as_str()),
            Some(v) => {
                self.err(key, format!("expected a string, got {v}"));
                None
            }
        }
    }

    fn choice<T: Copy>(&mut self, key: &str, default: Option<&str>, options: &[(&str, T)]) -> Option<T> {
        let s = self.str_opt(key).or(default);
        match s {
            None => {
                self.err(key, "missing");
                None
            }
            Some(s) => match options.iter().find(|(name, _)| *name == s) {
                Some(&(_, v)) => Some(v),
                None => {
                    let names: Vec<&str> = options.iter().map(|o| o.0).collect();
                    self.err(key, format!("unknown value {s:?} (expected one of {})", names.join(", ")));
                    None
                }
            },
        }
    }

    fn finish(self) {
        if let Some(t) = self.table {
            for k in t.keys() {
                if !self.used.contains(k) {
                    self.errors.push(format!("[{}] unknown key {k:?}", self.section));
                }
            }
        }
    }
}

const MAX_N: usize = 100_000_000;
const MAX_COUNT: usize = 1_000_000_000;

#[derive(Clone, Copy)]
enum FamilyName {
    Pareto,
    InverseExponential,
    Exponential,
    Constant,
}

fn read_fitness(r: &mut Reader) -> Option<FitnessSpec> {
    let fam = r.choice(
        "family",
        None,
        &[
            ("pareto-tail", FamilyName::Pareto),
            ("inverse-exponential", FamilyName::InverseExponential),
            ("exponential", FamilyName::Exponential),
            ("constant", FamilyName::Constant),
        ],
    )?;
    Some(match fam {
        FamilyName::Pareto => {
            let alpha = r.f64_in("alpha", None, |a| a > 0.0 && a.is_finite(), "alpha > 0");
            FitnessSpec::ParetoTail { alpha }
        }
        FamilyName::InverseExponential => FitnessSpec::InverseExponential,
        FamilyName::Exponential => FitnessSpec::ExponentialY,
        FamilyName::Constant => FitnessSpec::ConstantY,
    })
}

#[derive(Clone, Copy)]
enum NoiseName {
    Gumbel,
    Exponential,
    Uniform,
    Deterministic,
}

fn read_noise(r: &mut Reader) -> Option<NoiseSpec> {
    let fam = r.choice(
        "noise",
        Some("gumbel"),
        &[
            ("gumbel", NoiseName::Gumbel),
            ("exponential", NoiseName::Exponential),
            ("uniform", NoiseName::Uniform),
            ("deterministic", NoiseName::Deterministic),
        ],
    )?;
    let finite = |x: f64| x.is_finite();
    let positive = |x: f64| x > 0.0 && x.is_finite();
    Some(match fam {
        NoiseName::Gumbel => NoiseSpec::Gumbel {
            rho: r.f64_in("rho", Some(0.0), finite, "finite"),
            beta: r.f64_in("beta", Some(1.0), positive, "beta > 0"),
        },
        NoiseName::Exponential => NoiseSpec::Exponential {
            rate: r.f64_in("rate", Some(1.0), positive, "rate > 0"),
        },
        NoiseName::Uniform => {
            let lo = r.f64_in("lo", Some(0.0), finite, "finite");
            let hi = r.f64_in("hi", Some(1.0), finite, "finite");
            if lo >= hi {
                r.err("hi", format!("must exceed lo ({lo} >= {hi})"));
            }
            NoiseSpec::UniformInterval { lo, hi }
        }
        NoiseName::Deterministic => NoiseSpec::Deterministic {
            value: r.f64_in("value", Some(0.0), finite, "finite"),
        },
    })
}

/// `β` of `Φ`: the noise `β` for Gumbel noise, else the `front_beta` key.
fn front_beta(r: &mut Reader, noise: Option<NoiseSpec>) -> f64 {
    match noise {
        Some(NoiseSpec::Gumbel { beta, .. }) => {
            if r.f64_opt("front_beta").is_some() {
                r.err("front_beta", "not allowed with Gumbel noise (beta is used)");
            }
            beta
        }
        _ => r.f64_in("front_beta", Some(1.0), |b| b > 0.0 && b.is_finite(), "front_beta > 0"),
    }
}

fn read_start(r: &mut Reader, noise: Option<NoiseSpec>) -> Start {
    let default = if matches!(noise, Some(NoiseSpec::Gumbel { .. })) { "invariant" } else { "zeros" };
    let s = r
        .choice("start", Some(default), &[("zeros", Start::Zeros), ("invariant", Start::Invariant)])
        .unwrap_or(Start::Zeros);
    if s == Start::Invariant && !matches!(noise, Some(NoiseSpec::Gumbel { .. }) | None) {
        r.err("start", "the invariant start needs Gumbel noise");
    }
    s
}

fn read_model(r: &mut Reader) -> Option<PopulationModel> {
    let front = r.choice("model", Some("wf"), &[("wf", false), ("front", true)])?;
    if front {
        let noise = read_noise(r);
        let beta = front_beta(r, noise);
        let burn_in = r.usize_in("burn_in", Some(0), 0, MAX_COUNT);
        Some(PopulationModel::Front { noise: noise?, beta, burn_in })
    } else {
        Some(PopulationModel::Wf { fitness: read_fitness(r)? })
    }
}

fn probability(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

fn read_params(command: Command, r: &mut Reader) -> Option<Params> {
    Some(match command {
        Command::SimulateFront => {
            let n_pop = r.usize_in("N", None, 1, MAX_N);
            let generations = r.usize_in("generations", None, 1, MAX_COUNT);
            let noise = read_noise(r);
            let beta = front_beta(r, noise);
            let start = read_start(r, noise);
            Params::SimulateFront(SimulateFrontConfig { n_pop, generations, noise: noise?, beta, start })
        }
        Command::SimulateWf => {
            let n_pop = r.usize_in("N", None, 1, MAX_N);
            let generations = r.usize_in("generations", None, 1, MAX_COUNT);
            let fitness = read_fitness(r);
            Params::SimulateWf(SimulateWfConfig { n_pop, generations, fitness: fitness? })
        }
        Command::EstimateCn => {
            let model = read_model(r);
            let n_grid = r.usize_list("N", 2, MAX_N);
            let n = r.usize_in("n", Some(2), 2, MAX_N);
            if let Some(&small) = n_grid.iter().find(|&&m| m < n) {
                r.err("n", format!("sample size {n} exceeds N = {small}"));
            }
            let replicates = r.usize_in("replicates", None, 1, MAX_COUNT);
            let expected = r.f64_opt("expected");
            if let Some(e) = expected {
                if !probability(e) {
                    r.err("expected", format!("{e} is out of range ([0, 1])"));
                }
            }
            let rel_tol = r.f64_in("rel_tol", Some(0.05), positive, "rel_tol > 0");
            let agreement_z = r.f64_in("agreement_z", Some(4.0), positive, "agreement_z > 0");
            Params::EstimateCn(EstimateCnConfig {
                model: model?,
                n_grid,
                n,
                replicates,
                expected,
                rel_tol,
                agreement_z,
            })
        }
        Command::MergerStats => {
            let model = read_model(r);
            let n_pop = r.usize_in("N", None, 2, MAX_N);
            let n = r.usize_in("n", Some(3), 2, MAX_N);
            if n > n_pop {
                r.err("n", format!("sample size {n} exceeds N = {n_pop}"));
            }
            let min_events = r.usize_in("min_events", Some(20_000), 1, MAX_COUNT) as u64;
            let min_generations = r.usize_in("min_generations", Some(1), 1, MAX_COUNT);
            let max_generations = r.usize_in("max_generations", Some(1_000_000), 1, MAX_COUNT);
            if min_generations > max_generations {
                r.err("min_generations", "exceeds max_generations");
            }
            let expected_fraction = r.f64_opt("expected_fraction");
            if let Some(e) = expected_fraction {
                if !probability(e) {
                    r.err("expected_fraction", format!("{e} is out of range ([0, 1])"));
                }
            }
            let tolerance = r.f64_in("tolerance", Some(0.05), positive, "tolerance > 0");
            Params::MergerStats(MergerStatsConfig {
                model: model?,
                n_pop,
                n,
                min_events,
                min_generations,
                max_generations,
                expected_fraction,
                tolerance,
            })
        }
        Command::VerifyRates => {
            let alpha = r.f64_in("alpha", None, |a| a > 0.0 && a < 2.0, "alpha outside (0,2)");
            let max_b = r.usize_in("max_b", Some(12), 2, 64);
            let rel_tol = r.f64_in("rel_tol", Some(1e-8), positive, "rel_tol > 0");
            let consistency_tol = r.f64_in("consistency_tol", Some(1e-9), positive, "consistency_tol > 0");
            Params::VerifyRates(VerifyRatesConfig { alpha, max_b, rel_tol, consistency_tol })
        }
        Command::VerifyMoments => {
            let fitness = read_fitness(r);
            let n_grid = r.usize_list("N", 1, MAX_N);
            let b_list = r.usize_list("b_list", 2, 64);
            if let Some(&small) = n_grid.iter().find(|&&m| m < b_list.len()) {
                r.err("b_list", format!("{} weights requested from N = {small}", b_list.len()));
            }
            let mc_samples = r.usize_in("mc_samples", Some(0), 0, MAX_COUNT);
            let rel_tol = r.f64_in("rel_tol", Some(0.02), positive, "rel_tol > 0");
            Params::VerifyMoments(VerifyMomentsConfig { fitness: fitness?, n_grid, b_list, mc_samples, rel_tol })
        }
        Command::FrontSpeed => {
            let n_pop = r.usize_in("N", None, 1, MAX_N);
            let generations = r.usize_in("generations", None, 2, MAX_COUNT);
            let burn_in = r.usize_in("burn_in", Some(0), 0, MAX_COUNT);
            if burn_in >= generations {
                r.err("burn_in", format!("must be below generations ({burn_in} >= {generations})"));
            }
            let noise = read_noise(r);
            let beta = front_beta(r, noise);
            let start = read_start(r, noise);
            let oracle_samples = r.usize_in("oracle_samples", Some(100_000), 0, MAX_COUNT);
            let rel_tol = r.f64_in("rel_tol", Some(0.01), positive, "rel_tol > 0");
            Params::FrontSpeed(FrontSpeedConfig {
                n_pop,
                generations,
                burn_in,
                noise: noise?,
                beta,
                start,
                oracle_samples,
                rel_tol,
            })
        }
        Command::ReferenceCoalescent => {
            let kind = r.choice(
                "kind",
                None,
                &[
                    ("kingman", 0u8),
                    ("beta", 1),
                    ("bolthausen-sznitman", 2),
                    ("xi", 3),
                ],
            );
            let alpha = match kind {
                Some(1) => Some(r.f64_in("alpha", None, |a| a > 0.0 && a < 2.0, "alpha outside (0,2)")),
                Some(3) => Some(r.f64_in("alpha", None, |a| a > 0.0 && a < 1.0, "alpha outside (0,1)")),
                _ => None,
            };
            let max_n = if kind == Some(3) { selgen::coaltheory::XI_MAX_SAMPLE } else { 1000 };
            let n = r.usize_in("n", None, 2, max_n);
            let replicates = r.usize_in("replicates", Some(1000), 1, MAX_COUNT);
            let horizon = r.f64_in("horizon", Some(1e6), positive, "horizon > 0");
            let generations = r.usize_in("generations", Some(100_000), 1, MAX_COUNT);
            let kind = match kind? {
                0 => ReferenceKind::Kingman,
                1 => ReferenceKind::Beta,
                2 => ReferenceKind::BolthausenSznitman,
                _ => ReferenceKind::Xi,
            };
            Params::Reference(ReferenceConfig { kind, alpha, n, replicates, horizon, generations })
        }
    })
}

/// Parses and validates the configuration of `command`. `seed_override`
/// (from the command line) takes precedence over the file's `seed`.
pub fn parse_config(text: &str, command: Command, seed_override: Option<u64>) -> Result<ExperimentConfig, Vec<String>> {
    let root: Table = toml::from_str(text).map_err(|e| vec![format!("malformed config: {e}")])?;
    let mut errors = Vec::new();
    let section_names: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
    for (k, v) in &root {
        match k.as_str() {
            "seed" | "out" => {}
            s if section_names.contains(&s) => {
                if !v.is_table() {
                    errors.push(format!("[{s}] must be a table"));
                }
            }
            other => errors.push(format!("unknown key {other:?}")),
        }
    }
    let seed = match (seed_override, root.get("seed")) {
        (Some(s), _) => Some(s),
        (None, Some(Value::Integer(i))) if *i >= 0 => Some(*i as u64),
        (None, Some(Value::String(s))) => match s.parse::<u64>() {
            Ok(v) => Some(v),
            Err(_) => {
                errors.push(format!("seed: {s:?} is not a 64-bit unsigned integer"));
                None
            }
        },
        (None, Some(v)) => {
            errors.push(format!("seed: expected a nonnegative integer, got {v}"));
            None
        }
        (None, None) => {
            errors.push("missing seed (set `seed` or pass --seed)".to_string());
            None
        }
    };
    let out = match root.get("out") {
        None => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(v) => {
            errors.push(format!("out: expected a path string, got {v}"));
            None
        }
    };
    let table = match root.get(command.name()) {
        Some(Value::Table(t)) => Some(t),
        Some(_) => None,
        None => {
            errors.push(format!("missing [{command}] section"));
            None
        }
    };
    let params = {
        let mut reader = Reader {
            section: command.name().to_string(),
            table,
            used: BTreeSet::new(),
            errors: &mut errors,
        };
        let p = if table.is_some() { read_params(command, &mut reader) } else { None };
        reader.finish();
        p
    };
    match (errors.is_empty(), seed, params) {
        (true, Some(seed), Some(params)) => Ok(ExperimentConfig { command, seed, out, params }),
        _ => {
            if errors.is_empty() {
                errors.push("invalid configuration".to_string());
            }
            Err(errors)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_estimate_cn() {
        let text = "seed = 42\n[estimate-cn]\nN = 1000\nfamily = \"pareto-tail\"\nalpha = 0.5\nreplicates = 100000\n";
        let cfg = parse_config(text, Command::EstimateCn, None).unwrap();
        assert_eq!(cfg.seed, 42);
        match cfg.params {
            Params::EstimateCn(p) => {
                assert_eq!(p.n_grid, vec![1000]);
                assert_eq!(p.replicates, 100_000);
                assert_eq!(p.model, PopulationModel::Wf { fitness: FitnessSpec::ParetoTail { alpha: 0.5 } });
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn beta_rate_alpha_out_of_range() {
        let text = "seed = 1\n[verify-rates]\nalpha = 2.5\n";
        let errs = parse_config(text, Command::VerifyRates, None).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("alpha outside (0,2)")), "{errs:?}");
    }

    #[test]
    fn missing_seed() {
        let text = "[verify-rates]\nalpha = 1.5\n";
        let errs = parse_config(text, Command::VerifyRates, None).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("missing seed")));
        assert!(parse_config(text, Command::VerifyRates, Some(3)).is_ok());
    }

    #[test]
    fn all_violations_reported() {
        let text = "bogus = 1\n[estimate-cn]\nN = 1\nfamily = \"pareto-tail\"\nalpha = -1\nextra = true\n";
        let errs = parse_config(text, Command::EstimateCn, None).unwrap_err();
        for needle in ["bogus", "missing seed", "N: 1", "alpha", "extra", "replicates: missing"] {
            assert!(errs.iter().any(|e| e.contains(needle)), "{needle} not in {errs:?}");
        }
    }

    #[test]
    fn front_model_keys() {
        let text = "seed = 5\n[merger-stats]\nmodel = \"front\"\nnoise = \"gumbel\"\nbeta = 2.0\nN = 100\nburn_in = 3\n";
        let cfg = parse_config(text, Command::MergerStats, None).unwrap();
        match cfg.params {
            Params::MergerStats(p) => assert_eq!(
                p.model,
                PopulationModel::Front {
                    noise: NoiseSpec::Gumbel { rho: 0.0, beta: 2.0 },
                    beta: 2.0,
                    burn_in: 3
                }
            ),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_and_seed_string() {
        let text = "seed = \"18446744073709551615\"\n[verify-moments]\nfamily = \"exponential\"\nN = [2, 20]\nb_list = [3, 2]\n";
        let cfg = parse_config(text, Command::VerifyMoments, None).unwrap();
        assert_eq!(cfg.seed, u64::MAX);
        match cfg.params {
            Params::VerifyMoments(p) => {
                assert_eq!(p.n_grid, vec![2, 20]);
                assert_eq!(p.b_list, vec![3, 2]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn other_sections_are_allowed() {
        let text = "seed = 1\n[verify-rates]\nalpha = 1.5\n[front-speed]\nN = 10\n";
        assert!(parse_config(text, Command::VerifyRates, None).is_ok());
    }
}
