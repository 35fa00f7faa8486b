//! Command-line flags and the TOML config file share one set of structs.
//! Every field is optional; a flag overrides the file, and each command
//! fills what is still missing with its own defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Parser, Debug)]
#[command(name = "multitime", version, about = "Multi-time wave function experiments")]
pub struct Cli {
    /// TOML config; flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for reports and the run manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub tolerance_profile: Option<Profile>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Two-particle zero-range model: unitarity, boundary condition, lattice
    /// oracle, current conservation, boost covariance, entanglement.
    Zerorange(ZerorangeArgs),
    /// Commutator test of the consistency condition for a pair of
    /// multi-time Hamiltonians.
    Consistency(ConsistencyArgs),
    /// Lattice emission-absorption model in multi-time form.
    Qft(QftArgs),
    /// Tomonaga-Schwinger evolution along a path of lattice surfaces.
    Ts(TsArgs),
    /// Curved Born rule against iterated detection with collapse.
    Born(BornArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Zerorange(_) => "zerorange",
            Command::Consistency(_) => "consistency",
            Command::Qft(_) => "qft",
            Command::Ts(_) => "ts",
            Command::Born(_) => "born",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    #[default]
    Default,
    Strict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZerorangeCheck {
    All,
    None,
    Unitarity,
    Boundary,
    Oracle,
    Current,
    Covariance,
    Entanglement,
}

#[derive(clap::Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZerorangeArgs {
    /// Boundary-condition angle in (-pi, pi].
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// `gaussian:<separation>:<width>` or a JSON file with a list of
    /// product terms.
    #[arg(long)]
    pub initial: Option<String>,
    /// Surface for the unitarity check: JSON `[[z, t], ...]` or a file.
    #[arg(long)]
    pub surface: Option<String>,
    #[arg(long)]
    pub grid_dz: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub check: Option<Vec<ZerorangeCheck>>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsistencyModel {
    Free,
    PairPotential,
    Qft,
}

#[derive(clap::Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyArgs {
    #[arg(long, value_enum)]
    pub model: Option<ConsistencyModel>,
    /// Largest finite-difference step; `h/2` and `h/4` are also used.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Lattice model parameters shared by `qft` and `ts`.
#[derive(clap::Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelArgs {
    #[arg(long)]
    pub sites: Option<usize>,
    #[arg(long)]
    pub spacing: Option<f64>,
    /// Maximal number of y-particles.
    #[arg(long)]
    pub nmax: Option<usize>,
    /// Real parts of the two coupling spinor components.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub g_re: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub g_im: Option<Vec<f64>>,
    #[arg(long)]
    pub mass_x: Option<f64>,
    #[arg(long)]
    pub mass_y: Option<f64>,
    /// `delta` or `gauss:<radius>`.
    #[arg(long)]
    pub cutoff: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QftCheck {
    All,
    None,
    Equations,
    Splitting,
    EqualTime,
    Statistics,
}

#[derive(clap::Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QftArgs {
    #[command(flatten)]
    #[serde(default)]
    pub model: ModelArgs,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub check: Option<Vec<QftCheck>>,
    /// Largest time step of the finite-difference ladder.
    #[arg(long)]
    pub dt: Option<f64>,
    /// JSON list of `{"x": [[t, site, spin], ...], "y": [...]}`, a file
    /// holding one, or `random:<n>`.
    #[arg(long)]
    pub configs: Option<String>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TsScheme {
    Euler,
    Midpoint,
}

#[derive(clap::Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TsArgs {
    #[command(flatten)]
    #[serde(default)]
    pub model: ModelArgs,
    /// JSON list of surfaces, each a list of per-site times, or a file.
    #[arg(long)]
    pub path: Option<String>,
    /// Largest single-site time advance.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum)]
    pub scheme: Option<TsScheme>,
    /// Compare against the multi-time Fock function on the final surface.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub compare_multitime: Option<bool>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BornDynamics {
    Free1,
    Bloch2,
    Zerorange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overlap {
    ExtendLater,
    ExtendEarlier,
}

#[derive(clap::Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BornArgs {
    #[arg(long, value_enum)]
    pub dynamics: Option<BornDynamics>,
    /// JSON `[[z, t], ...]` or a file.
    #[arg(long)]
    pub surface: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub refinements: Option<usize>,
    #[arg(long)]
    pub grid_dz: Option<f64>,
    /// Gaussian smoothing length applied before the TV distance.
    #[arg(long)]
    pub resolution: Option<f64>,
    #[arg(long, value_enum)]
    pub overlap: Option<Overlap>,
    /// Boundary angle for the zero-range dynamics.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Top-level layout of the config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tolerance_profile: Option<Profile>,
    pub zerorange: Option<ZerorangeArgs>,
    pub consistency: Option<ConsistencyArgs>,
    pub qft: Option<QftArgs>,
    pub ts: Option<TsArgs>,
    pub born: Option<BornArgs>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }
}

/// Recursively replaces entries of `base` by the non-null entries of `top`.
fn overlay_value(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                if v.is_null() {
                    continue;
                }
                match b.get_mut(&k) {
                    Some(slot) => overlay_value(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => {
            if !v.is_null() {
                *slot = v;
            }
        }
    }
}

/// Flags on top of the config-file section.
pub fn overlay<T: Serialize + DeserializeOwned>(flags: &T, file: Option<&T>) -> anyhow::Result<T> {
    let mut base = match file {
        Some(f) => serde_json::to_value(f)?,
        None => Value::Object(Default::default()),
    };
    overlay_value(&mut base, serde_json::to_value(flags)?);
    Ok(serde_json::from_value(base)?)
}

/// Reads an inline JSON value, or the file it names.
pub fn json_or_file<T: DeserializeOwned>(arg: &str, what: &str) -> anyhow::Result<T> {
    let trimmed = arg.trim_start();
    let text = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).with_context(|| format!("reading {what} file {arg}"))?
    };
    serde_json::from_str(&text).with_context(|| format!("invalid {what}"))
}

/// Expands `all` and drops `none`; the result is sorted and duplicate-free.
pub fn expand_checks<C: Copy + Ord>(requested: &[C], all: C, none: C, every: &[C]) -> Vec<C> {
    let mut out: Vec<C> = Vec::new();
    for &c in requested {
        if c == all {
            out.extend_from_slice(every);
        } else if c != none {
            out.push(c);
        }
    }
    out.sort();
    out.dedup();
    out
}

pub fn positive(name: &str, v: f64) -> anyhow::Result<f64> {
    if !(v.is_finite() && v > 0.0) {
        bail!("--{name} must be a positive number, got {v}");
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_and_keep_the_rest() {
        let file = QftArgs {
            model: ModelArgs { sites: Some(6), spacing: Some(0.25), ..Default::default() },
            dt: Some(0.1),
            ..Default::default()
        };
        let flags = QftArgs { model: ModelArgs { sites: Some(4), ..Default::default() }, ..Default::default() };
        let merged = overlay(&flags, Some(&file)).unwrap();
        assert_eq!(merged.model.sites, Some(4));
        assert_eq!(merged.model.spacing, Some(0.25));
        assert_eq!(merged.dt, Some(0.1));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("seed = 1\n[born]\neps = 0.1\n").is_ok());
        assert!(toml::from_str::<FileConfig>("sed = 1\n").is_err());
        assert!(toml::from_str::<FileConfig>("[born]\nepsilon = 0.1\n").is_err());
        assert!(toml::from_str::<FileConfig>("[qft.model]\nsites = 4\nwidth = 2\n").is_err());
    }

    #[test]
    fn check_lists_expand() {
        use ZerorangeCheck::*;
        let every = [Unitarity, Boundary, Oracle, Current, Covariance, Entanglement];
        assert_eq!(expand_checks(&[All], All, None, &every).len(), 6);
        assert!(expand_checks(&[None], All, None, &every).is_empty());
        assert_eq!(expand_checks(&[Oracle, Unitarity, Oracle], All, None, &every), vec![Unitarity, Oracle]);
    }

    #[test]
    fn cli_parses_global_flags_after_the_subcommand() {
        let cli = Cli::try_parse_from(["multitime", "qft", "--nmax", "9", "--sites", "32", "--seed", "3", "--g-re", "0.4,-0.1"])
            .unwrap();
        assert_eq!(cli.seed, Some(3));
        match cli.command {
            Command::Qft(a) => {
                assert_eq!(a.model.nmax, Some(9));
                assert_eq!(a.model.g_re, Some(vec![0.4, -0.1]));
            }
            _ => panic!("wrong subcommand"),
        }
    }
}
