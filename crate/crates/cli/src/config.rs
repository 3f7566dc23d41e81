//! Run configuration: per-command defaults, then an optional TOML file, then
//! command-line flags, each layer overriding the previous one.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use qpeh_core::qpp::SamplingConvention;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Dimer,
    Gge,
    CftCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    Midpoint,
    Endpoint,
}

impl From<Sampling> for SamplingConvention {
    fn from(s: Sampling) -> Self {
        match s {
            Sampling::Midpoint => SamplingConvention::Midpoint,
            Sampling::Endpoint => SamplingConvention::Endpoint,
        }
    }
}

/// `t/ℓ`, where the token `inf` selects the stationary state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeRatio(pub f64);

impl TimeRatio {
    pub const INFINITE: Self = Self(f64::INFINITY);

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    pub fn time(self, ell: usize) -> f64 {
        if self.is_infinite() {
            f64::INFINITY
        } else {
            self.0 * ell as f64
        }
    }
}

impl fmt::Display for TimeRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for TimeRatio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" | "infinity" => Ok(Self::INFINITE),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Self)
                .ok_or_else(|| format!("time ratio must be a number or \"inf\", got {other:?}")),
        }
    }
}

impl Serialize for TimeRatio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for TimeRatio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(Self(v)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Figure1,
    Figure2,
    Entropy,
    Gge,
    CftCheck,
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Figure1 => "figure1",
            Self::Figure2 => "figure2",
            Self::Entropy => "entropy",
            Self::Gge => "gge",
            Self::CftCheck => "cft-check",
            Self::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub protocol: Protocol,
    pub ell: usize,
    pub time_ratios: Vec<TimeRatio>,
    pub z_list: Vec<usize>,
    pub cutoff: f64,
    pub exclusion: f64,
    pub quad_tol: f64,
    pub alpha_list: Vec<f64>,
    pub beta_list: Vec<f64>,
    pub velocity: f64,
    pub ring: usize,
    pub sampling: Sampling,
    pub output_dir: PathBuf,
    pub format: Format,
    /// Worker threads; 0 lets the pool decide. Outputs do not depend on it.
    pub threads: usize,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let base = Self {
            protocol: Protocol::Dimer,
            ell: 800,
            time_ratios: vec![TimeRatio(0.1), TimeRatio(0.2), TimeRatio(0.25), TimeRatio(10.0)],
            z_list: vec![1, 2, 3, 4],
            cutoff: 1e-4,
            exclusion: 0.05,
            quad_tol: 1e-8,
            alpha_list: vec![1.0, 2.0],
            beta_list: vec![0.5, 1.0],
            velocity: 1.0,
            ring: 4096,
            sampling: Sampling::Midpoint,
            output_dir: PathBuf::from("out"),
            format: Format::Csv,
            threads: 0,
        };
        match command {
            Command::Figure1 => base,
            Command::Figure2 => Self { time_ratios: vec![TimeRatio(0.2)], z_list: vec![1, 3, 5, 7, 9], ..base },
            Command::Entropy => Self {
                ell: 400,
                time_ratios: (0..=12).map(|i| TimeRatio(i as f64 / 20.0)).collect(),
                ..base
            },
            Command::Gge => Self {
                protocol: Protocol::Gge,
                ell: 400,
                time_ratios: vec![TimeRatio::INFINITE],
                z_list: (0..=9).collect(),
                cutoff: 0.0,
                ..base
            },
            Command::CftCheck => Self {
                protocol: Protocol::CftCheck,
                ell: 100,
                time_ratios: vec![TimeRatio(0.1), TimeRatio(0.3)],
                ..base
            },
            Command::OracleCheck => Self { ell: 8, time_ratios: vec![TimeRatio(1.3 / 8.0)], ..base },
        }
    }

    pub fn apply(&mut self, o: PartialConfig) -> Result<(), CliError> {
        if let Some(v) = o.protocol {
            self.protocol = v;
        }
        if let Some(v) = o.ell {
            self.ell = usize::try_from(v).map_err(|_| CliError::Config(format!("ell must be positive, got {v}")))?;
        }
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = o.$field { self.$field = v; })*
            };
        }
        take!(time_ratios, z_list, cutoff, exclusion, quad_tol, alpha_list, beta_list, velocity, ring, sampling, output_dir, format, threads);
        Ok(())
    }

    /// Checks every field against the preconditions of the operations it feeds.
    pub fn validate(&self, command: Command) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let expected = match command {
            Command::Gge => Protocol::Gge,
            Command::CftCheck => Protocol::CftCheck,
            _ => Protocol::Dimer,
        };
        if self.protocol != expected {
            return bad(format!("{} needs protocol {:?}, got {:?}", command.name(), expected, self.protocol));
        }
        if self.ell < 2 {
            return bad(format!("ell must be at least 2, got {}", self.ell));
        }
        if self.time_ratios.is_empty() {
            return bad("time_ratios is empty".into());
        }
        if let Some(r) = self.time_ratios.iter().find(|r| r.0.is_nan() || r.0 < 0.0) {
            return bad(format!("time ratio {r} is negative or NaN"));
        }
        if let Some(z) = self.z_list.iter().find(|&&z| z >= self.ell) {
            return bad(format!("distance {z} must be below ell = {}", self.ell));
        }
        if !(0.0..0.5).contains(&self.cutoff) {
            return bad(format!("cutoff {} must lie in [0, 0.5)", self.cutoff));
        }
        if !(0.0..0.5).contains(&self.exclusion) {
            return bad(format!("exclusion {} must lie in [0, 0.5)", self.exclusion));
        }
        if !(self.quad_tol > 0.0 && self.quad_tol.is_finite()) {
            return bad(format!("quad_tol must be positive, got {}", self.quad_tol));
        }
        if let Some(a) = self.alpha_list.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return bad(format!("Renyi index {a} must be positive"));
        }
        if let Some(b) = self.beta_list.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return bad(format!("beta {b} must be nonnegative"));
        }
        if !(self.velocity > 0.0 && self.velocity.is_finite()) {
            return bad(format!("velocity must be positive, got {}", self.velocity));
        }
        match command {
            Command::Figure1 | Command::Figure2 | Command::Gge if self.z_list.is_empty() => {
                bad("z_list is empty".into())
            }
            Command::Entropy if self.alpha_list.is_empty() => bad("alpha_list is empty".into()),
            Command::CftCheck if self.beta_list.is_empty() => bad("beta_list is empty".into()),
            Command::CftCheck if self.time_ratios.iter().any(|r| r.is_infinite()) => {
                bad("cft-check needs finite time ratios".into())
            }
            Command::OracleCheck if self.time_ratios.iter().any(|r| r.is_infinite()) => {
                bad("oracle-check needs finite time ratios".into())
            }
            _ => Ok(()),
        }
    }

    /// The configuration as TOML, used for the header of every output file.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }
}

/// Any subset of [`RunConfig`], as read from a file or collected from flags.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub protocol: Option<Protocol>,
    pub ell: Option<i64>,
    pub time_ratios: Option<Vec<TimeRatio>>,
    pub z_list: Option<Vec<usize>>,
    pub cutoff: Option<f64>,
    pub exclusion: Option<f64>,
    pub quad_tol: Option<f64>,
    pub alpha_list: Option<Vec<f64>>,
    pub beta_list: Option<Vec<f64>>,
    pub velocity: Option<f64>,
    pub ring: Option<usize>,
    pub sampling: Option<Sampling>,
    pub output_dir: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

impl PartialConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::from_toml_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// Defaults for `command`, overridden by `file` and then by `flags`, validated.
pub fn resolve(command: Command, file: Option<PartialConfig>, flags: PartialConfig) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::defaults(command);
    if let Some(f) = file {
        cfg.apply(f)?;
    }
    cfg.apply(flags)?;
    cfg.validate(command)?;
    Ok(cfg)
}
