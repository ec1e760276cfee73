use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "evlab", version, about = "Group delay, dwell time and ring-down of tunneling barriers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Flat TOML file of defaults keyed by flag name; flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output path. Data scenarios write a manifest next to it.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Also write a gnuplot script for the data file.
    #[arg(long, global = true)]
    pub gnuplot: bool,

    /// Record wall-clock runtime in the manifest. Off by default so that
    /// repeated runs produce identical manifests.
    #[arg(long, global = true)]
    pub record_runtime: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(Format::Csv),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Delays, transmission and stored energy against detuning.
    Spectrum(SpectrumArgs),
    /// Stored-energy ring-down after a step drive is switched off.
    Decay(DecayArgs),
    /// A Gaussian pulse sent through the barrier.
    Pulse(PulseArgs),
    /// Group delay and dwell time against barrier length.
    Hartman(HartmanArgs),
    /// Quantum rectangular barrier delays against energy.
    Quantum(QuantumArgs),
    /// Run every identity and experiment check and write a manifest.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long = "kappa-L")]
    pub kappa_l: Option<f64>,
    /// Lowest detuning, in units of v/L.
    #[arg(long, allow_negative_numbers = true)]
    pub detuning_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub detuning_max: Option<f64>,
    #[arg(long)]
    pub detuning_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecayArgs {
    /// Comma-separated κL values; a barrier-free reference is always added.
    #[arg(long = "kappa-L", value_delimiter = ',')]
    pub kappa_l: Option<Vec<f64>>,
    #[arg(long)]
    pub nz: Option<usize>,
    /// Turn-off time in units of L/v.
    #[arg(long)]
    pub t_off: Option<f64>,
    /// Time followed after turn-off, in units of L/v.
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PulseArgs {
    #[arg(long = "kappa-L")]
    pub kappa_l: Option<f64>,
    #[arg(long)]
    pub nz: Option<usize>,
    /// Power FWHM in units of L/v.
    #[arg(long)]
    pub fwhm: Option<f64>,
    /// Detuning in units of v/L.
    #[arg(long, allow_negative_numbers = true)]
    pub detuning: Option<f64>,
    /// Power level, relative to the peak, at which the pulse is switched on.
    #[arg(long)]
    pub front_level: Option<f64>,
}

#[derive(Debug, Args)]
pub struct HartmanArgs {
    /// Smallest κL (photonic) and qL (quantum) of the sweep.
    #[arg(long)]
    pub length_min: Option<f64>,
    #[arg(long)]
    pub length_max: Option<f64>,
    #[arg(long)]
    pub length_points: Option<usize>,
    /// Lengths beyond which a doubling must change τ_g by less than the
    /// saturation tolerance.
    #[arg(long)]
    pub saturation_from: Option<f64>,
}

#[derive(Debug, Args)]
pub struct QuantumArgs {
    #[arg(long)]
    pub v0: Option<f64>,
    #[arg(long)]
    pub length: Option<f64>,
    /// Lowest energy as a fraction of V0.
    #[arg(long)]
    pub energy_min: Option<f64>,
    #[arg(long)]
    pub energy_max: Option<f64>,
    #[arg(long)]
    pub energy_points: Option<usize>,
    /// Packet energy spread for the τ_g/τ_p column, as a fraction of V0.
    #[arg(long)]
    pub delta_e: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub nz: Option<usize>,
    /// Run only the quantum barrier suites.
    #[arg(long)]
    pub quantum_only: bool,
}
