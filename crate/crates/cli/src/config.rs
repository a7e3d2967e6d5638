//! Argument parsing and the `key=value` config file.
//!
//! Values are resolved flag first, then config file, then default.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cqed_core::{Role, SystemParams};

use crate::CliError;

pub const DEFAULT_GAMMA: f64 = 1.0;
pub const DEFAULT_KAPPA: f64 = 1.0;
pub const DEFAULT_G: f64 = 1.0;
pub const DEFAULT_DELTA: f64 = 0.0;
pub const DEFAULT_DRIVE_AMPLITUDE: f64 = 0.01;

#[derive(Debug, Parser)]
#[command(
    name = "cqed-spectra",
    version,
    about = "Spectra and dynamics of an emitter in a lossy cavity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Normalized emission spectra as CSV (omega,s_at,s_cav,p_omega)
    Spectrum(CommonArgs),
    /// Populations and detection density as CSV (t,pop_atom,pop_cav,p_detect)
    Dynamics(CommonArgs),
    /// Weak-drive steady state as CSV (omega,power_at,power_cav,power_absorbed,residual)
    Driven(CommonArgs),
    /// Eigenfrequencies and regime
    Eigen {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        json: bool,
    },
    /// Check every closed form against the oracles; exits 2 on any breach
    Verify(CommonArgs),
    /// Write the twelve figure datasets and a manifest into --out
    ReproduceFigures(CommonArgs),
    /// Spectra over a range of one parameter, written into --out
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        axis: SweepArgs,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    #[arg(long, value_enum)]
    pub role: Option<RoleArg>,
    /// File of `key=value` lines; `#` starts a comment
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Half-width of the frequency grid
    #[arg(long)]
    pub window: Option<f64>,
    /// Number of grid points
    #[arg(long)]
    pub points: Option<usize>,
    /// End of the time grid
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Output file, or directory for reproduce-figures and sweep
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub drive_amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub axis: Option<Axis>,
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Atomic,
    Cavity,
}

impl From<RoleArg> for Role {
    fn from(r: RoleArg) -> Self {
        match r {
            RoleArg::Atomic => Role::AtomicType,
            RoleArg::Cavity => Role::CavityType,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Gamma,
    Kappa,
    G,
    Delta,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Gamma => "gamma",
            Axis::Kappa => "kappa",
            Axis::G => "g",
            Axis::Delta => "delta",
        }
    }

    /// `p` with this parameter replaced.
    pub fn apply(self, p: &SystemParams, value: f64) -> Result<SystemParams, CliError> {
        let (mut gamma, mut kappa, mut g, mut delta) = (p.gamma(), p.kappa(), p.g(), p.delta());
        match self {
            Axis::Gamma => gamma = value,
            Axis::Kappa => kappa = value,
            Axis::G => g = value,
            Axis::Delta => delta = value,
        }
        SystemParams::new(gamma, kappa, g, delta)
            .map_err(|e| CliError::Validation(format!("{}={value}: {e}", self.name())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Dynamics,
    Driven,
    Eigen,
    Verify,
    ReproduceFigures,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GridOverrides {
    pub window: Option<f64>,
    pub points: Option<usize>,
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepAxis {
    pub axis: Axis,
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|k| self.from + (self.to - self.from) * k as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SystemParams,
    pub role: Role,
    pub command: Command,
    pub grid: GridOverrides,
    pub out: Option<PathBuf>,
    pub drive_amplitude: f64,
    pub sweep: Option<SweepAxis>,
    pub json: bool,
}

const KNOWN_KEYS: [&str; 14] = [
    "gamma",
    "kappa",
    "g",
    "delta",
    "role",
    "window",
    "points",
    "horizon",
    "out",
    "drive_amplitude",
    "axis",
    "from",
    "to",
    "count",
];

/// Parses `key=value` lines. Blank lines and text after `#` are ignored.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Validation(format!(
                "config line {}: expected key=value",
                n + 1
            )));
        };
        let key = key.trim().replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Validation(format!(
                "config line {}: unknown key '{key}'",
                n + 1
            )));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

struct Layers<'a> {
    file: &'a BTreeMap<String, String>,
}

impl Layers<'_> {
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Validation(format!("config key '{key}': cannot parse '{v}'"))
            }),
        }
    }

    fn get_enum<T: ValueEnum>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => T::from_str(v, true).map(Some).map_err(|_| {
                CliError::Validation(format!("config key '{key}': unknown value '{v}'"))
            }),
        }
    }
}

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let (command, common, json, sweep) = match cli.command {
            CliCommand::Spectrum(c) => (Command::Spectrum, c, false, None),
            CliCommand::Dynamics(c) => (Command::Dynamics, c, false, None),
            CliCommand::Driven(c) => (Command::Driven, c, false, None),
            CliCommand::Eigen { common, json } => (Command::Eigen, common, json, None),
            CliCommand::Verify(c) => (Command::Verify, c, false, None),
            CliCommand::ReproduceFigures(c) => (Command::ReproduceFigures, c, false, None),
            CliCommand::Sweep { common, axis } => (Command::Sweep, common, false, Some(axis)),
        };
        let file = match &common.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    CliError::Validation(format!("cannot read {}: {e}", path.display()))
                })?;
                parse_config_file(&text)?
            }
            None => BTreeMap::new(),
        };
        let layers = Layers { file: &file };

        let gamma = layers.get(common.gamma, "gamma")?.unwrap_or(DEFAULT_GAMMA);
        let kappa = layers.get(common.kappa, "kappa")?.unwrap_or(DEFAULT_KAPPA);
        let g = layers.get(common.g, "g")?.unwrap_or(DEFAULT_G);
        let delta = layers.get(common.delta, "delta")?.unwrap_or(DEFAULT_DELTA);
        let params = SystemParams::new(gamma, kappa, g, delta)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        let role = layers
            .get_enum(common.role, "role")?
            .unwrap_or(RoleArg::Atomic)
            .into();

        let grid = GridOverrides {
            window: layers.get(common.window, "window")?,
            points: layers.get(common.points, "points")?,
            horizon: layers.get(common.horizon, "horizon")?,
        };
        if let Some(w) = grid.window {
            if !(w.is_finite() && w > 0.0) {
                return Err(CliError::Validation(format!(
                    "window must be positive, got {w}"
                )));
            }
        }
        if let Some(h) = grid.horizon {
            if !(h.is_finite() && h > 0.0) {
                return Err(CliError::Validation(format!(
                    "horizon must be positive, got {h}"
                )));
            }
        }
        if grid.points.is_some_and(|n| n < 2) {
            return Err(CliError::Validation("points must be at least 2".into()));
        }

        let drive_amplitude = layers
            .get(common.drive_amplitude, "drive_amplitude")?
            .unwrap_or(DEFAULT_DRIVE_AMPLITUDE);
        if !(drive_amplitude.is_finite() && drive_amplitude > 0.0) {
            return Err(CliError::Validation(format!(
                "drive amplitude must be positive, got {drive_amplitude}"
            )));
        }

        let sweep = match sweep {
            None => None,
            Some(s) => {
                let axis = layers.get_enum(s.axis, "axis")?.ok_or_else(|| {
                    CliError::Validation("sweep needs --axis gamma|kappa|g|delta".into())
                })?;
                let from = layers.get(s.from, "from")?;
                let to = layers.get(s.to, "to")?;
                let count = layers.get(s.count, "count")?;
                let (Some(from), Some(to), Some(count)) = (from, to, count) else {
                    return Err(CliError::Validation(
                        "sweep needs --from, --to and --count".into(),
                    ));
                };
                if count < 2 {
                    return Err(CliError::Validation(format!(
                        "sweep count must be at least 2, got {count}"
                    )));
                }
                if !(from.is_finite() && to.is_finite()) {
                    return Err(CliError::Validation("sweep range must be finite".into()));
                }
                Some(SweepAxis {
                    axis,
                    from,
                    to,
                    count,
                })
            }
        };

        let out = match common.out {
            Some(p) => Some(p),
            None => file.get("out").map(PathBuf::from),
        };
        if matches!(command, Command::ReproduceFigures | Command::Sweep) && out.is_none() {
            return Err(CliError::Validation("--out <dir> is required".into()));
        }

        Ok(Self {
            params,
            role,
            command,
            grid,
            out,
            drive_amplitude,
            sweep,
            json,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> Result<RunConfig, CliError> {
        let mut full = vec!["cqed-spectra"];
        full.extend_from_slice(args);
        RunConfig::from_cli(Cli::try_parse_from(full).unwrap())
    }

    #[test]
    fn config_file_syntax() {
        let map = parse_config_file("# header\ngamma = 5 # broad\n\nkappa=0.05\n").unwrap();
        assert_eq!(map["gamma"], "5");
        assert_eq!(map["kappa"], "0.05");
        assert!(parse_config_file("gamma 5").is_err());
        assert!(parse_config_file("gama=5").is_err());
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "gamma=5\nkappa=0.05\nrole=cavity\n").unwrap();
        let c = config(&[
            "spectrum",
            "--config",
            path.to_str().unwrap(),
            "--gamma",
            "2",
        ])
        .unwrap();
        assert_eq!(c.params.gamma(), 2.0);
        assert_eq!(c.params.kappa(), 0.05);
        assert_eq!(c.params.g(), DEFAULT_G);
        assert_eq!(c.role, Role::CavityType);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(
            config(&["spectrum", "--gamma", "-1"]),
            Err(CliError::Validation(_))
        ));
        assert!(config(&["spectrum", "--gamma", "0", "--kappa", "0"]).is_err());
        assert!(config(&["spectrum", "--points", "1"]).is_err());
        assert!(config(&["reproduce-figures"]).is_err());
        assert!(config(&[
            "sweep", "--out", "x", "--axis", "g", "--from", "0", "--to", "1", "--count", "1"
        ])
        .is_err());
        assert!(
            config(&["sweep", "--out", "x", "--from", "0", "--to", "1", "--count", "3"]).is_err()
        );
    }

    #[test]
    fn sweep_values() {
        let c = config(&[
            "sweep", "--out", "x", "--axis", "delta", "--from", "-2", "--to", "2", "--count", "5",
        ])
        .unwrap();
        assert_eq!(c.sweep.unwrap().values(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }
}
