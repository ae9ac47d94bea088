use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use evpipe_core::encoding::{EncoderMode, Lighting};
use evpipe_core::io::ContainerFormat;
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "evpipe", version, about = "Event-camera defect dataset pipeline")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args)]
pub struct Global {
    /// Pipeline configuration, TOML or JSON. Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for per-sequence work; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Subcommand)]
pub enum Command {
    /// Summarize and validate one sequence directory.
    Inspect(InspectArgs),
    /// Generate synthetic sequences.
    Gen(GenArgs),
    /// Extract histogram sample bundles from sequences.
    Encode(EncodeArgs),
    /// Score detections against ground truth.
    Eval(EvalArgs),
    /// Draw a sample bundle as a PNG.
    Render(RenderArgs),
    /// Re-check the bundles of an encode run against their sources.
    Verify(VerifyArgs),
}

#[derive(Args)]
pub struct InspectArgs {
    pub dir: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormatArg {
    H5,
    Evt,
}

impl From<FormatArg> for ContainerFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::H5 => ContainerFormat::Hdf5,
            FormatArg::Evt => ContainerFormat::Flat,
        }
    }
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub sequences: Option<usize>,
    #[arg(long)]
    pub duration_s: Option<f64>,
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long)]
    pub noise_rate_hz: Option<f64>,
    #[arg(long, value_enum, default_value = "h5")]
    pub format: FormatArg,
}

#[derive(Args)]
pub struct EncodeArgs {
    /// Sequence directories, or directories whose subdirectories are sequences.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    /// fixed_time, fixed_count, grid_threshold or adaptive.
    #[arg(long, value_parser = serde_enum::<EncoderMode>)]
    pub mode: Option<EncoderMode>,
    /// well_lit or low_light, applied to every input.
    #[arg(long, value_parser = serde_enum::<Lighting>)]
    pub lighting: Option<Lighting>,
    #[arg(long)]
    pub t_th_ms: Option<f64>,
    #[arg(long)]
    pub a_th: Option<f64>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Grid as ROWSxCOLS.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(u32, u32)>,
    #[arg(long)]
    pub min_samples: Option<usize>,
    #[arg(long)]
    pub max_samples: Option<usize>,
    /// Re-read and re-check every written bundle.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Ground truth: JSON lines, a label .npy (image id = timestamp), a
    /// bundle .npz, or a directory of bundles.
    #[arg(long)]
    pub gt: PathBuf,
    /// Detections as JSON lines.
    #[arg(long)]
    pub det: PathBuf,
    #[arg(long)]
    pub conf_thr: Option<f64>,
    /// NMS IoU threshold, or "none".
    #[arg(long, value_parser = parse_nms)]
    pub nms_iou: Option<Option<f64>>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print JSON instead of the table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args)]
pub struct RenderArgs {
    pub bundle: PathBuf,
    pub out: PathBuf,
    /// Integer upscaling factor.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=16))]
    pub scale: u32,
    #[arg(long)]
    pub no_boxes: bool,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Output directory of an encode run.
    pub dir: PathBuf,
}

fn serde_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_grid(s: &str) -> Result<(u32, u32), String> {
    let (m, n) = s.split_once(['x', 'X']).ok_or("expected ROWSxCOLS")?;
    let parse = |v: &str| v.trim().parse::<u32>().map_err(|e| e.to_string());
    Ok((parse(m)?, parse(n)?))
}

fn parse_nms(s: &str) -> Result<Option<f64>, String> {
    if s.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|e| e.to_string())
}
