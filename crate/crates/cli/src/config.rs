use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cvconj::protocols::{DEFAULT_SEED, DEFAULT_SHOTS, MIN_SHOTS};
use cvconj::Strategy;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Inclusive grid `start:stop:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RGrid {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self, CliError> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(CliError::Config(format!("grid bounds must be finite: {start}:{stop}:{step}")));
        }
        if !(step > 0.0) {
            return Err(CliError::Config(format!("grid step must be positive, got {step}")));
        }
        if stop < start {
            return Err(CliError::Config(format!("grid stop {stop} is below start {start}")));
        }
        Ok(Self { start, stop, step })
    }

    /// Grid points `start + i·step`; `stop` is included when it lies on the
    /// grid up to rounding.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl FromStr for RGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("expected start:stop:step, got {s:?}"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        RGrid::new(num(a)?, num(b)?, num(c)?).map_err(|e| e.to_string())
    }
}

impl fmt::Display for RGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let parsed = match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => t.parse::<u64>(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse::<Strategy>().map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "cvconj", version, about = "Gaussian simulation of the optimal universal phase conjugator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format (default: csv for epr-bound, json otherwise).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sampling (results do not depend on it).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct AmplitudeArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_x: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha_p: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SamplingArgs {
    #[arg(long, default_value_t = DEFAULT_SHOTS)]
    pub shots: usize,
    #[arg(long, default_value = "0xC0FFEE", value_parser = parse_seed)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Apply the conjugator (added noise sigma2) to a coherent state.
    Conjugate {
        #[command(flatten)]
        amplitude: AmplitudeArgs,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        sigma2: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo estimation of (x, p) with one of the three strategies.
    Estimate {
        #[arg(long, value_parser = parse_strategy)]
        strategy: Strategy,
        #[command(flatten)]
        amplitude: AmplitudeArgs,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// EPR-variance product after conjugating one half of a two-mode squeezed vacuum.
    EprBound {
        #[arg(long, default_value = "0:5:0.5")]
        r_grid: RGrid,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        sigma2: f64,
        /// Accept sigma2 < 1 and report the (unphysical) violation.
        #[arg(long)]
        allow_unphysical: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Derive and check the conjugator coefficients.
    Solve {
        /// Random first rows drawn by the uniqueness search.
        #[arg(long, default_value_t = DEFAULT_SHOTS)]
        shots: usize,
        #[arg(long, default_value = "0xC0FFEE", value_parser = parse_seed)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Conjugation fidelity, closed form and by measure-and-prepare sampling.
    Fidelity {
        #[command(flatten)]
        amplitude: AmplitudeArgs,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        sigma2: f64,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Conjugate,
    Estimate,
    EprBound,
    Solve,
    Fidelity,
}

impl Command {
    pub fn default_format(self) -> Format {
        match self {
            Command::EprBound => Format::Csv,
            _ => Format::Json,
        }
    }
}

/// Validated, command-independent view of the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub alpha_x: f64,
    pub alpha_p: f64,
    pub sigma2: f64,
    pub shots: usize,
    pub seed: u64,
    pub strategy: Option<Strategy>,
    pub r_grid: Option<RGrid>,
    pub allow_unphysical: bool,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let base = |command: Command, output: OutputArgs| ExperimentConfig {
            command,
            alpha_x: 0.0,
            alpha_p: 0.0,
            sigma2: 1.0,
            shots: DEFAULT_SHOTS,
            seed: DEFAULT_SEED,
            strategy: None,
            r_grid: None,
            allow_unphysical: false,
            format: output.format.unwrap_or(command.default_format()),
            out: output.out,
            threads: output.threads,
        };
        let config = match cli.command {
            CommandArgs::Conjugate { amplitude, sigma2, output } => ExperimentConfig {
                alpha_x: amplitude.alpha_x,
                alpha_p: amplitude.alpha_p,
                sigma2,
                ..base(Command::Conjugate, output)
            },
            CommandArgs::Estimate {
                strategy,
                amplitude,
                sampling,
                output,
            } => ExperimentConfig {
                alpha_x: amplitude.alpha_x,
                alpha_p: amplitude.alpha_p,
                shots: sampling.shots,
                seed: sampling.seed,
                strategy: Some(strategy),
                ..base(Command::Estimate, output)
            },
            CommandArgs::EprBound {
                r_grid,
                sigma2,
                allow_unphysical,
                output,
            } => ExperimentConfig {
                sigma2,
                r_grid: Some(r_grid),
                allow_unphysical,
                ..base(Command::EprBound, output)
            },
            CommandArgs::Solve { shots, seed, output } => ExperimentConfig {
                shots,
                seed,
                ..base(Command::Solve, output)
            },
            CommandArgs::Fidelity {
                amplitude,
                sigma2,
                sampling,
                output,
            } => ExperimentConfig {
                alpha_x: amplitude.alpha_x,
                alpha_p: amplitude.alpha_p,
                sigma2,
                shots: sampling.shots,
                seed: sampling.seed,
                ..base(Command::Fidelity, output)
            },
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [("alpha-x", self.alpha_x), ("alpha-p", self.alpha_p), ("sigma2", self.sigma2)] {
            if !v.is_finite() {
                return Err(CliError::Config(format!("--{name} must be finite, got {v}")));
            }
        }
        let samples = matches!(self.command, Command::Estimate | Command::Solve | Command::Fidelity);
        if samples && self.shots < MIN_SHOTS {
            return Err(CliError::Config(format!("--shots must be at least {MIN_SHOTS}, got {}", self.shots)));
        }
        if let Some(grid) = self.r_grid {
            if grid.start < 0.0 {
                return Err(CliError::Config(format!("squeezing must be non-negative, grid starts at {}", grid.start)));
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g: RGrid = "0:5:0.5".parse().unwrap();
        let pts = g.points();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[10], 5.0);
        let g: RGrid = "0:20:0.5".parse().unwrap();
        assert_eq!(g.points().len(), 41);
        assert_eq!("1:1:0.1".parse::<RGrid>().unwrap().points(), vec![1.0]);
        assert!("0:5".parse::<RGrid>().is_err());
        assert!("0:5:0".parse::<RGrid>().is_err());
        assert!("5:0:1".parse::<RGrid>().is_err());
        assert!("a:1:1".parse::<RGrid>().is_err());
    }

    #[test]
    fn seeds_accept_hex_and_decimal() {
        assert_eq!(parse_seed("0xC0FFEE").unwrap(), 0xC0FFEE);
        assert_eq!(parse_seed("12648430").unwrap(), 0xC0FFEE);
        assert!(parse_seed("-1").is_err());
        assert!(parse_seed("0xZZ").is_err());
    }

    #[test]
    fn defaults_per_command() {
        let cli = Cli::try_parse_from(["cvconj", "epr-bound"]).unwrap();
        let c = ExperimentConfig::from_cli(cli).unwrap();
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.r_grid.unwrap().points().len(), 11);
        let cli = Cli::try_parse_from(["cvconj", "estimate", "--strategy", "parallel-product"]).unwrap();
        let c = ExperimentConfig::from_cli(cli).unwrap();
        assert_eq!(c.format, Format::Json);
        assert_eq!((c.shots, c.seed), (DEFAULT_SHOTS, DEFAULT_SEED));
        assert_eq!(c.strategy, Some(Strategy::ParallelProduct));
    }

    #[test]
    fn invalid_configs() {
        let parse = |args: &[&str]| Cli::try_parse_from(args).map_err(|_| ()).and_then(|c| ExperimentConfig::from_cli(c).map_err(|_| ()));
        assert!(parse(&["cvconj", "estimate"]).is_err());
        assert!(parse(&["cvconj", "estimate", "--strategy", "telepathy"]).is_err());
        assert!(parse(&["cvconj", "estimate", "--strategy", "conjugate_product", "--shots", "10"]).is_err());
        assert!(parse(&["cvconj", "epr-bound", "--r-grid", "-1:2:1"]).is_err());
        assert!(parse(&["cvconj", "conjugate", "--alpha-x", "-1.5", "--alpha-p", "2"]).is_ok());
        assert!(parse(&["cvconj", "conjugate", "--threads", "0"]).is_err());
    }
}
