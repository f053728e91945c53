//! Run configuration: command-line flags layered over an optional strict
//! JSON config file, the `POSMAP_SEED` environment variable and defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use posmap::blockcert::BlockSpec;
use posmap::linalg::{derive_seed, random_phase_with, rng_from_seed, sigma_y, ComplexMatrix, Tolerance};
use posmap::maps::{default_antisymmetric_unitary, MapSpec};
use posmap::pairs::PairTable;
use posmap::witness::StripeRule;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TRIALS: usize = 500;
pub const SEED_ENV: &str = "POSMAP_SEED";
/// Largest `d^2` accepted without `--allow-large`.
pub const MAX_SQUARED_DIM: usize = 4096;

#[derive(Debug, Parser)]
#[command(name = "posmap", version, about = "Positive maps, block certificates and entanglement witnesses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Build,
    CertifyBlock,
    CheckPositive,
    Witness,
    Detect,
    Optimality,
    NdOptimality,
    FullReport,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Build => "build",
            CommandKind::CertifyBlock => "certify-block",
            CommandKind::CheckPositive => "check-positive",
            CommandKind::Witness => "witness",
            CommandKind::Detect => "detect",
            CommandKind::Optimality => "optimality",
            CommandKind::NdOptimality => "nd-optimality",
            CommandKind::FullReport => "full-report",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a map and summarize its Choi matrix
    Build(Flags),
    /// Check the block-theorem hypotheses and replay the induction
    CertifyBlock(Flags),
    /// Search for a negative direction with the see-saw falsifier
    CheckPositive(Flags),
    /// Verify that the Choi matrix is a witness (non-PSD, block-positive)
    Witness(Flags),
    /// Build the PPT state and evaluate the detection value
    Detect(Flags),
    /// Check the zero-product spanning set
    Optimality(Flags),
    /// Check the partial-transpose covariance and the transformed zero set
    NdOptimality(Flags),
    /// Run every applicable check
    FullReport(Flags),
}

impl Command {
    pub fn split(self) -> (CommandKind, Flags) {
        match self {
            Command::Build(f) => (CommandKind::Build, f),
            Command::CertifyBlock(f) => (CommandKind::CertifyBlock, f),
            Command::CheckPositive(f) => (CommandKind::CheckPositive, f),
            Command::Witness(f) => (CommandKind::Witness, f),
            Command::Detect(f) => (CommandKind::Detect, f),
            Command::Optimality(f) => (CommandKind::Optimality, f),
            Command::NdOptimality(f) => (CommandKind::NdOptimality, f),
            Command::FullReport(f) => (CommandKind::FullReport, f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Family {
    Reduction,
    GeneralizedReduction,
    Robertson,
    GeneralizedRobertson,
    ComplexRobertson,
    New,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Strict JSON run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Map spec JSON (block spec JSON for certify-block)
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Number of blocks N
    #[arg(long = "N", alias = "n")]
    pub n: Option<usize>,
    /// Half block size K (blocks are 2K x 2K)
    #[arg(long = "K", alias = "k")]
    pub k: Option<usize>,
    /// Phase used for every block pair, e.g. `1`, `0.6+0.8i`
    #[arg(long, value_parser = parse_complex)]
    pub z: Option<Complex64>,
    /// Draw every phase uniformly from the unit circle (seeded)
    #[arg(long, conflicts_with = "z")]
    pub z_random_phase: bool,
    /// Antisymmetric unitary: `j`, `sigma-y`, or a path to a matrix JSON
    #[arg(long)]
    pub u: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub psd_slack: Option<f64>,
    #[arg(long)]
    pub eq_atol: Option<f64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Omit the timestamp so identical runs give identical bytes
    #[arg(long)]
    pub no_timestamp: bool,
    /// Accept d^2 above 4096
    #[arg(long)]
    pub allow_large: bool,
    /// Block classification for the PPT detector
    #[arg(long, value_enum)]
    pub stripe_rule: Option<StripeRuleArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StripeRuleArg {
    Block,
    Literal,
}

impl From<StripeRuleArg> for StripeRule {
    fn from(r: StripeRuleArg) -> Self {
        match r {
            StripeRuleArg::Block => StripeRule::Block,
            StripeRuleArg::Literal => StripeRule::Literal,
        }
    }
}

/// Accepts `a`, `a+bi`, `a-bi`, `bi` and `i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t = s.trim();
    Complex64::from_str(t).map_err(|e| format!("`{s}` is not a complex number: {e}"))
}

/// Contents of a `--config` file. Unknown fields are rejected.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub command: Option<CommandKind>,
    pub map_spec: Option<MapSpec>,
    pub block_spec: Option<BlockSpec>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tolerances: Option<Tolerance>,
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub stripe_rule: Option<StripeRule>,
    pub allow_large: Option<bool>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: CommandKind,
    pub map_spec: Option<MapSpec>,
    pub block_spec: Option<BlockSpec>,
    /// Random block instance shape when no block spec is given.
    pub block_shape: Option<(usize, usize)>,
    pub seed: u64,
    pub trials: usize,
    pub tolerances: Tolerance,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub timestamp: bool,
    pub allow_large: bool,
    pub stripe_rule: StripeRule,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn resolve_unitary(arg: Option<&str>, k: usize) -> Result<ComplexMatrix, CliError> {
    match arg {
        None | Some("j") | Some("J") => Ok(default_antisymmetric_unitary(2 * k)?),
        Some("sigma-y") | Some("sigma_y") => {
            if k != 1 {
                return Err(CliError::Usage("`--u sigma-y` needs K = 1".into()));
            }
            Ok(sigma_y())
        }
        Some(path) => read_json(Path::new(path)),
    }
}

impl RunConfig {
    /// Layers flags over the config file, environment and defaults.
    pub fn resolve(command: CommandKind, flags: Flags, env_seed: Option<String>) -> Result<Self, CliError> {
        let file = match &flags.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        if let Some(c) = file.command {
            if c != command {
                return Err(CliError::Usage(format!(
                    "config file is for `{}` but `{}` was requested",
                    c.name(),
                    command.name()
                )));
            }
        }
        let env_seed = match env_seed {
            Some(s) => Some(s.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{s}` is not a 64-bit seed")))?),
            None => None,
        };
        let seed = flags.seed.or(file.seed).or(env_seed).unwrap_or(DEFAULT_SEED);
        let trials = flags.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(CliError::Usage("--trials must be positive".into()));
        }
        let base = file.tolerances.unwrap_or_default();
        let tolerances = Tolerance::new(flags.psd_slack.unwrap_or(base.psd_slack), flags.eq_atol.unwrap_or(base.eq_atol))?;

        let mut cfg = RunConfig {
            command,
            map_spec: None,
            block_spec: None,
            block_shape: None,
            seed,
            trials,
            tolerances,
            output: flags.output.clone().or(file.output),
            format: flags.format.or(file.format).unwrap_or_default(),
            timestamp: !flags.no_timestamp,
            allow_large: flags.allow_large || file.allow_large.unwrap_or(false),
            stripe_rule: flags.stripe_rule.map(StripeRule::from).or(file.stripe_rule).unwrap_or_default(),
        };

        if command == CommandKind::CertifyBlock {
            cfg.block_spec = match (&flags.spec, file.block_spec) {
                (Some(p), _) => {
                    let record: posmap::format::BlockSpecRecord = read_json(p)?;
                    Some(record.into_spec(&tolerances)?)
                }
                (None, spec) => spec,
            };
            if cfg.block_spec.is_none() {
                match (flags.n, flags.k) {
                    (Some(n), Some(k)) if n >= 1 && k >= 1 => cfg.block_shape = Some((n, k)),
                    _ => return Err(CliError::Usage("certify-block needs --spec, a config block_spec, or --N and --K".into())),
                }
            }
        } else {
            cfg.map_spec = Some(match (&flags.spec, file.map_spec) {
                (Some(p), _) => read_json(p)?,
                (None, Some(spec)) if flags.family.is_none() => spec,
                _ => map_spec_from_flags(&flags, seed)?,
            });
        }
        Ok(cfg)
    }

    /// `d^2` of the problem, for the size guard.
    pub fn squared_dim(&self) -> usize {
        if let Some(spec) = &self.map_spec {
            return spec.dim() * spec.dim();
        }
        let (n, k) = match (&self.block_spec, self.block_shape) {
            (Some(b), _) => (b.n(), b.k()),
            (None, Some(s)) => s,
            (None, None) => (0, 0),
        };
        (n * k) * (n * k)
    }
}

fn map_spec_from_flags(flags: &Flags, seed: u64) -> Result<MapSpec, CliError> {
    let family = flags.family.ok_or_else(|| CliError::Usage("a map is required: give --family, --spec or a config map_spec".into()))?;
    let need = |v: Option<usize>, name: &str| v.ok_or_else(|| CliError::Usage(format!("--family {family:?} needs --{name}")));
    let phases = |n: usize| -> PairTable<Complex64> {
        if flags.z_random_phase {
            let mut rng = rng_from_seed(derive_seed(seed, 0x7a));
            PairTable::from_fn(n, |_, _| random_phase_with(&mut rng))
        } else {
            PairTable::filled(n, flags.z.unwrap_or(Complex64::new(1.0, 0.0)))
        }
    };
    let spec = match family {
        Family::Reduction => MapSpec::Reduction { n: need(flags.n, "N")? },
        Family::GeneralizedReduction => {
            let n = need(flags.n, "N")?;
            MapSpec::GeneralizedReduction { n, z: phases(n) }
        }
        Family::Robertson => MapSpec::Robertson,
        Family::GeneralizedRobertson => {
            let k = need(flags.k, "K")?;
            MapSpec::GeneralizedRobertson { k, u: resolve_unitary(flags.u.as_deref(), k)? }
        }
        Family::ComplexRobertson => {
            let n = need(flags.n, "N")?;
            MapSpec::ComplexRobertsonExtension { n, z: phases(n) }
        }
        Family::New => {
            let n = need(flags.n, "N")?;
            let k = need(flags.k, "K")?;
            MapSpec::NewFamily { n, k, z: phases(n), u: resolve_unitary(flags.u.as_deref(), k)? }
        }
    };
    spec.validate(&Tolerance::default())?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags() -> Flags {
        Flags { family: Some(Family::New), n: Some(2), k: Some(1), ..Flags::default() }
    }

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("1").unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(parse_complex("0.6+0.8i").unwrap(), Complex64::new(0.6, 0.8));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert!(parse_complex("one").is_err());
    }

    #[test]
    fn seed_precedence() {
        let r = RunConfig::resolve(CommandKind::Build, flags(), None).unwrap();
        assert_eq!(r.seed, DEFAULT_SEED);
        let r = RunConfig::resolve(CommandKind::Build, flags(), Some("7".into())).unwrap();
        assert_eq!(r.seed, 7);
        let f = Flags { seed: Some(9), ..flags() };
        let r = RunConfig::resolve(CommandKind::Build, f, Some("7".into())).unwrap();
        assert_eq!(r.seed, 9);
        assert!(RunConfig::resolve(CommandKind::Build, flags(), Some("x".into())).is_err());
    }

    #[test]
    fn defaults() {
        let r = RunConfig::resolve(CommandKind::CheckPositive, flags(), None).unwrap();
        assert_eq!(r.trials, 500);
        assert_eq!(r.tolerances, Tolerance::default());
        assert_eq!(r.format, OutputFormat::Json);
        assert_eq!(r.stripe_rule, StripeRule::Block);
        assert_eq!(r.squared_dim(), 16);
    }

    #[test]
    fn missing_map_is_a_usage_error() {
        let e = RunConfig::resolve(CommandKind::Build, Flags::default(), None).unwrap_err();
        assert!(matches!(e, CliError::Usage(_)));
        let f = Flags { family: Some(Family::New), n: Some(2), ..Flags::default() };
        assert!(matches!(RunConfig::resolve(CommandKind::Build, f, None), Err(CliError::Usage(_))));
    }

    #[test]
    fn sigma_y_needs_k_one() {
        let f = Flags { u: Some("sigma-y".into()), k: Some(2), ..flags() };
        assert!(RunConfig::resolve(CommandKind::Build, f, None).is_err());
        let f = Flags { u: Some("sigma-y".into()), ..flags() };
        let r = RunConfig::resolve(CommandKind::Build, f, None).unwrap();
        assert!(matches!(r.map_spec, Some(MapSpec::NewFamily { ref u, .. }) if *u == sigma_y()));
    }

    #[test]
    fn random_phases_are_seeded() {
        let f = |seed| Flags { z_random_phase: true, n: Some(3), seed: Some(seed), ..flags() };
        let a = RunConfig::resolve(CommandKind::Build, f(1), None).unwrap().map_spec;
        let b = RunConfig::resolve(CommandKind::Build, f(1), None).unwrap().map_spec;
        let c = RunConfig::resolve(CommandKind::Build, f(2), None).unwrap().map_spec;
        assert_eq!(a, b);
        assert_ne!(a, c);
        let z = a.unwrap().phases().unwrap().clone();
        assert!(z.iter().all(|(_, _, v)| (v.norm() - 1.0).abs() < 1e-14));
    }
}
