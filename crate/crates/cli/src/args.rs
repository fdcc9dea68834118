use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "chromalayers", version, about = "Palette extraction, layer decomposition and palette harmonization")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract a palette and write it as JSON.
    Palette {
        input: PathBuf,
        #[command(flatten)]
        rmse: Rmse,
        #[arg(long)]
        out: PathBuf,
        /// Extraction report (sizes, RMSE).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Decompose an image into one RGBA layer per palette color.
    Decompose {
        input: PathBuf,
        #[command(flatten)]
        source: PaletteSource,
        /// Output directory for palette.json, weights.bin, layer PNGs and reconstruction.png.
        #[arg(long)]
        out: PathBuf,
        /// Also save the decomposition state for later `relayer` runs.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Re-decompose with a new palette from a saved state.
    Relayer {
        /// Image to precompute when the state file does not exist yet.
        input: Option<PathBuf>,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        palette: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a hue template and recolor.
    Harmonize {
        input: PathBuf,
        /// Template kind, or `auto` for the best fitting one.
        #[arg(long, default_value = "auto")]
        template: String,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        /// Report the fit without recoloring.
        #[arg(long)]
        fit_only: bool,
        #[command(flatten)]
        source: PaletteSource,
        #[command(flatten)]
        io: RecolorIo,
    },
    /// Apply a lightness-chroma template.
    LcHarmonize {
        input: PathBuf,
        #[arg(long)]
        template: String,
        #[command(flatten)]
        source: PaletteSource,
        #[command(flatten)]
        io: RecolorIo,
    },
    /// Apply a contrast operator.
    Contrast {
        input: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[command(flatten)]
        source: PaletteSource,
        #[command(flatten)]
        io: RecolorIo,
    },
    /// Transfer the harmony of a reference image or palette.
    Transfer {
        input: PathBuf,
        /// `align` or `transfer`.
        #[arg(long, default_value = "align")]
        mode: String,
        #[arg(long, conflicts_with = "ref_palette", required_unless_present = "ref_palette")]
        reference: Option<PathBuf>,
        /// Reference palette JSON (uniform weights).
        #[arg(long)]
        ref_palette: Option<PathBuf>,
        #[command(flatten)]
        source: PaletteSource,
        #[command(flatten)]
        io: RecolorIo,
    },
    /// Frame-sequence operations.
    Video {
        #[command(subcommand)]
        command: VideoCommand,
    },
    /// Run the interactive session service.
    Serve {
        #[arg(long, default_value_t = chroma_layers_service::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 4_000_000)]
        max_pixels: usize,
        /// Concurrent precomputes across sessions.
        #[arg(long, default_value_t = 1)]
        precomputes: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum VideoCommand {
    /// Harmonize a directory of PNG frames with one global palette.
    Harmonize {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, default_value = "auto")]
        template: String,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[command(flatten)]
        rmse: Rmse,
        /// Recompute per-frame weights in the recoloring pass instead of keeping them.
        #[arg(long)]
        low_memory: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct Rmse {
    /// Palette RMSE tolerance in 0-255 units.
    #[arg(long, default_value_t = 2.0)]
    pub rmse: f64,
}

#[derive(Debug, Args)]
pub struct PaletteSource {
    /// Use this palette instead of extracting one.
    #[arg(long)]
    pub palette: Option<PathBuf>,
    #[command(flatten)]
    pub rmse: Rmse,
}

#[derive(Debug, Args)]
pub struct RecolorIo {
    /// Reuse or create a decomposition state file.
    #[arg(long)]
    pub state: Option<PathBuf>,
    /// Recolored image (PNG); required unless only fitting.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}
