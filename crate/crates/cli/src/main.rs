mod commands;
mod config;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};
use zakharov_core::param_region::{parse_rational, Rational};

/// Exact rational literal `a/b`; decimals are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Q(pub Rational);

impl FromStr for Q {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_rational(s).map(Q)
    }
}

impl fmt::Display for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Q {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Q {
    pub fn f64(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Quick,
    Standard,
    Thorough,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    S,
    W,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignArg {
    Plus,
    Minus,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    None,
    /// S family: `l = −1/p − 1/4`; W family: `l = 2k − 1/p' + 1/2`.
    L,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    PlaneWave,
    Gaussian,
    Rough,
}

#[derive(Debug, Parser)]
#[command(name = "zlab", version, about = "Parameter-region algebra, kernel scans and Zakharov flow probes")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GlobalOpts {
    /// Print the JSON report line instead of the text summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Append the JSON report line to this file.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Write the command's series as CSV to this file.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Tier::Standard)]
    pub tier: Tier,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a parameter point against every admissibility condition.
    #[command(args_override_self = true)]
    Admissible(PointArgs),
    /// Feasible interval of b = b1 (and the separate b, b1 intervals).
    #[command(args_override_self = true)]
    Window(RegularityArgs),
    /// Global optimum of the region, or the smallest k on a fixed (l, p).
    #[command(args_override_self = true)]
    Optimize(OptimizeArgs),
    /// L²-Sobolev exponents with the same scaling as (k, l, p).
    #[command(args_override_self = true)]
    Scaling(RegularityArgs),
    /// Truncated kernel suprema on a doubling radius ladder.
    #[command(args_override_self = true)]
    KernelScan(KernelScanArgs),
    /// Randomized trials of the discrete trilinear Hölder bound.
    #[command(args_override_self = true)]
    TrilinearTest(TrilinearArgs),
    /// Evolve a preset initial state.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Sensitivity ratios of the flow map at rough data.
    #[command(args_override_self = true)]
    Lipschitz(LipschitzArgs),
    /// Departure times of dilated focusing data.
    #[command(args_override_self = true)]
    Lifespan(LifespanArgs),
}

pub const SUBCOMMANDS: [&str; 9] = [
    "admissible",
    "window",
    "optimize",
    "scaling",
    "kernel-scan",
    "trilinear-test",
    "simulate",
    "lipschitz",
    "lifespan",
];

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegularityArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub k: Q,
    #[arg(long, allow_hyphen_values = true)]
    pub l: Q,
    #[arg(long)]
    pub p: Q,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PointArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub reg: RegularityArgs,
    #[arg(long)]
    pub b: Q,
    #[arg(long)]
    pub b1: Q,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptimizeArgs {
    /// Fixed wave regularity; requires --fixed-p.
    #[arg(long, allow_hyphen_values = true, requires = "fixed_p")]
    pub l: Option<Q>,
    #[arg(long, requires = "l")]
    pub fixed_p: Option<Q>,
}

/// Point with optional modulation exponents; missing ones default to the
/// midpoint of the b = b1 window.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ScanPointArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub k: Q,
    #[arg(long, allow_hyphen_values = true, default_value = "-1/2")]
    pub l: Q,
    #[arg(long, default_value = "2")]
    pub p: Q,
    #[arg(long)]
    pub b: Option<Q>,
    #[arg(long)]
    pub b1: Option<Q>,
    /// c1 = 1 − b1 − slack (S), c = 1 − b − slack (W).
    #[arg(long, default_value = "1/100")]
    pub slack: Q,
    #[arg(long, value_enum, default_value_t = FamilyArg::Both)]
    pub family: FamilyArg,
    #[arg(long, value_enum, default_value_t = SignArg::Both)]
    pub sign: SignArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct KernelScanArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub point: ScanPointArgs,
    #[arg(long, value_enum, default_value_t = Violation::None)]
    pub violate: Violation,
    /// Largest truncation radius (overrides the tier).
    #[arg(long)]
    pub radius: Option<f64>,
    /// Number of radii in the ladder (overrides the tier).
    #[arg(long)]
    pub levels: Option<u32>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrilinearArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub point: ScanPointArgs,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Lattice points per axis (overrides the tier).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub box_xi: f64,
    #[arg(long, default_value_t = 0.7)]
    pub box_tau: f64,
    #[arg(long, default_value_t = 10)]
    pub iterations: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FlowArgs {
    /// Grid points (overrides the tier).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub box_length: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub sample_every: Option<usize>,
    /// Use A = −∂² instead of −∂² + 1 (needs mean-zero n1).
    #[arg(long)]
    pub unregularized: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Preset::PlaneWave)]
    pub preset: Preset,
    #[command(flatten)]
    #[serde(flatten)]
    pub flow: FlowArgs,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub k: Q,
    #[arg(long, allow_hyphen_values = true, default_value = "-1/2")]
    pub l: Q,
    #[arg(long, default_value = "2")]
    pub p: Q,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Write the final u and n as grid files `<path>.u.zgf`, `<path>.n.zgf`.
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LipschitzArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub k: Q,
    #[arg(long, allow_hyphen_values = true, default_value = "-1/2")]
    pub l: Q,
    #[arg(long, default_value = "2")]
    pub p: Q,
    /// Number of seeds, counting up from --seed.
    #[arg(long, default_value_t = 5)]
    pub seeds: u64,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1e-2, 1e-3, 1e-4])]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub flow: FlowArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct LifespanArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0, 4.0])]
    pub mu: Vec<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub amplitude: f64,
    /// Departure when max |u| reaches this multiple of its initial value.
    #[arg(long, default_value_t = 2.0)]
    pub growth: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub flow: FlowArgs,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The check ran and came out negative.
    Negative,
    Inconclusive,
    Failure,
    Usage,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Negative => 1,
            Status::Inconclusive => 2,
            Status::Failure => 3,
            Status::Usage => 64,
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("ZLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .map_err(|_| format!("ZLAB_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect(), &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Status::Usage.code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { Status::Usage.code() } else { 0 });
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(Status::Usage.code());
    }
    let status = match commands::run(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            e.status()
        }
    };
    ExitCode::from(status.code())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
        let names: Vec<String> = Cli::command()
            .get_subcommands()
            .map(|c| c.get_name().to_string())
            .collect();
        assert_eq!(names, SUBCOMMANDS);
    }

    #[test]
    fn rationals_parse_exactly() {
        let cli = Cli::try_parse_from(["zlab", "scaling", "--k", "-1/12", "--l", "-7/12", "--p", "12/7"]).unwrap();
        let Command::Scaling(a) = cli.command else { panic!() };
        assert_eq!(a.k.to_string(), "-1/12");
        assert!(Cli::try_parse_from(["zlab", "scaling", "--k", "0.5", "--l", "0", "--p", "2"]).is_err());
    }

    #[test]
    fn later_flags_override_earlier() {
        let cli = Cli::try_parse_from(["zlab", "optimize", "--l=-1/2", "--fixed-p=2", "--l", "-7/12"]).unwrap();
        let Command::Optimize(a) = cli.command else { panic!() };
        assert_eq!(a.l.unwrap().to_string(), "-7/12");
    }
}
