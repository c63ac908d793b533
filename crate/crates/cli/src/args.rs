use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Compressive-sensing privacy codec.
#[derive(Debug, Parser)]
#[command(name = "cspriv", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a sensing (a), embedding (b) or mask key file.
    Keygen(KeygenArgs),
    /// Sense, encrypt and de-identify one frame.
    Encode(EncodeArgs),
    /// Reconstruct a frame at one authorization level.
    Decode(DecodeArgs),
    /// Sweep measurement rates over a corpus and report PSNR.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KeyKind {
    A,
    B,
    Mask,
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long, value_enum)]
    pub kind: KeyKind,
    #[arg(long)]
    pub seed: u64,
    /// Signal length (kind a); a power of two.
    #[arg(long)]
    pub n: Option<usize>,
    /// Frame width; with --height, derives n from the padded grid (kind a).
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Measurement rate m/n (kind a).
    #[arg(long)]
    pub mr: Option<f64>,
    /// Measurement count (kind b, or kind a instead of --mr).
    #[arg(long)]
    pub m: Option<usize>,
    /// Embedding capacity T (kind b).
    #[arg(long)]
    pub t: Option<usize>,
    /// Probability that a region column is left unflipped (kind mask).
    #[arg(long, default_value_t = 0.75)]
    pub p: f64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Input frame (binary PGM or PNG).
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long)]
    pub key_a: PathBuf,
    #[arg(long)]
    pub key_b: PathBuf,
    /// Mask key file; alternatively give --seed and --p.
    #[arg(long, conflicts_with = "seed")]
    pub mask_key: Option<PathBuf>,
    /// Mask seed, used when no --mask-key is given.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.75)]
    pub p: f64,
    /// Region list: one x,y,w,h per line, '#' comments.
    #[arg(long)]
    pub region: Option<PathBuf>,
    /// Embedding power ‖Bw‖/‖Ãs‖.
    #[arg(long, default_value_t = 0.085)]
    pub ratio: f64,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Noise bound factor stored in the payload (relative to ‖y‖).
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Semi,
    Full,
    Eavesdrop,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Override the payload's noise bound factor.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// Payload file.
    #[arg(short, long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Level::Semi)]
    pub level: Level,
    #[arg(long)]
    pub key_a: Option<PathBuf>,
    #[arg(long)]
    pub key_b: Option<PathBuf>,
    /// Guessed sensing seed (eavesdrop level).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Original frame; prints a PSNR report when given.
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Where to write the recovered flip bitmap (full level); defaults to
    /// the output path with a `.mask.pgm` suffix.
    #[arg(long)]
    pub mask_out: Option<PathBuf>,
    /// Output bit depth.
    #[arg(long, default_value_t = 8, value_parser = parse_depth)]
    pub depth: u8,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory of frames (PGM or PNG); `name.regions` next to
    /// `name.pgm` holds its region list.
    #[arg(long, required_unless_present = "standard")]
    pub corpus: Option<PathBuf>,
    /// Add the built-in synthetic office frame with its face region.
    #[arg(long)]
    pub standard: bool,
    /// Measurement rates.
    #[arg(long, value_delimiter = ',', default_values_t = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8])]
    pub mr: Vec<f64>,
    #[arg(long, default_value_t = 2048)]
    pub t: usize,
    #[arg(long, default_value_t = 0.75)]
    pub p: f64,
    #[arg(long, default_value_t = 0.085)]
    pub ratio: f64,
    #[arg(long, default_value_t = 4)]
    pub levels: usize,
    /// Base seed: sensing key `seed`, embedding key `seed + 1`, mask `seed + 2`.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV report path.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

fn parse_depth(s: &str) -> Result<u8, String> {
    match s {
        "8" => Ok(8),
        "16" => Ok(16),
        _ => Err("depth must be 8 or 16".into()),
    }
}
