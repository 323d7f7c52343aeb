use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ukiyo_core::color::{DEFAULT_LAMBDA, DEFAULT_LAYERS};
use ukiyo_core::corpus::LandmarkKind;
use ukiyo_service::{DEFAULT_MAX_SESSIONS, DEFAULT_MAX_SIDE, DEFAULT_PORT};

#[derive(Debug, Parser)]
#[command(name = "ukiyo", version, about = "Face geometry and color layer analysis for woodblock prints")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Join catalogue metadata with detected landmarks into a corpus file
    Ingest(IngestArgs),
    /// Year histogram and per-painter summary of a corpus
    Stats(StatsArgs),
    /// Crop aligned face images
    Align(AlignArgs),
    /// Angle feature CSV
    Features(FeaturesArgs),
    /// Landmark quality report and high-quality set selection
    Quality(QualityArgs),
    /// Project angle features with PCA, LDA or t-SNE
    Embed(EmbedArgs),
    /// Split an image into color layers
    Separate(SeparateArgs),
    /// Recompose layers under a new palette
    Recolor(RecolorArgs),
    /// Recompose layers under a palette taken from a reference image
    Transfer(TransferArgs),
    /// Recompose layers as they are
    Compose(ComposeArgs),
    /// Run the local HTTP service
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetadataFormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Metadata table (CSV with header, or JSONL)
    #[arg(long)]
    pub metadata: PathBuf,
    /// Defaults to the file extension, CSV otherwise
    #[arg(long, value_enum)]
    pub format: Option<MetadataFormatArg>,
    /// Landmark JSONL, one face per line
    #[arg(long)]
    pub landmarks: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub bin_width: i32,
    /// Histogram CSV (bin_start,bin_end,count)
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    /// Painter CSV (painter,face_count,min_year,max_year)
    #[arg(long)]
    pub painters: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlignArgs {
    #[arg(long)]
    pub landmarks: PathBuf,
    /// Directory holding `{image_id}.png` or `.jpg`/`.jpeg`
    #[arg(long)]
    pub images: PathBuf,
    /// Output directory for `{image_id}_{face_index}.png` and quads.jsonl
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 256)]
    pub size: u32,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long, required_unless_present = "corpus", conflicts_with = "corpus")]
    pub landmarks: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `default` or a file with one landmark name per line
    #[arg(long, default_value = "default")]
    pub hq: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    /// Detected landmarks (JSONL)
    #[arg(long, requires = "expert", conflicts_with = "report")]
    pub detected: Option<PathBuf>,
    /// Expert landmarks of the same faces (JSONL)
    #[arg(long, requires = "detected")]
    pub expert: Option<PathBuf>,
    /// Existing report CSV to select from
    #[arg(long, required_unless_present = "detected")]
    pub report: Option<PathBuf>,
    /// Pixels; kinds with a smaller mean error are selected
    #[arg(long, default_value_t = 20.0)]
    pub threshold: f64,
    #[arg(long, value_delimiter = ',', default_value = "JawUpperRight,JawMidRight,ChinBottom")]
    pub jaw_exceptions: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "RightEyebrowLeft")]
    pub exclude: Vec<String>,
    /// Report CSV output
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Selected set, one name per line; standard output if absent
    #[arg(long)]
    pub hq_out: Option<PathBuf>,
}

pub fn parse_kinds(names: &[String]) -> Result<Vec<LandmarkKind>, String> {
    names
        .iter()
        .map(|n| n.trim())
        .filter(|n| !n.is_empty())
        .map(|n| n.parse().map_err(|_| format!("unknown landmark name {n:?}")))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Pca,
    Lda,
    Tsne,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Feature CSV from `features`
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Output dimensions; 2 by default (at most classes - 1 for LDA)
    #[arg(long)]
    pub k: Option<usize>,
    /// Standardize feature columns first
    #[arg(long)]
    pub zscore: bool,
    /// Corpus providing painter labels by face id (required for LDA)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Embedding CSV
    #[arg(long)]
    pub out: PathBuf,
    /// Fitted projection JSON (PCA and LDA)
    #[arg(long)]
    pub projection: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeparateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LAYERS)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// File name stem; the input's stem by default
    #[arg(long)]
    pub stem: Option<String>,
    /// Also write `{stem}.err.png`
    #[arg(long)]
    pub error_map: bool,
}

#[derive(Debug, Args)]
pub struct RecolorArgs {
    /// `dir/stem` of a stack written by `separate`
    #[arg(long)]
    pub layers: PathBuf,
    /// Palette JSON with the new colors
    #[arg(long)]
    pub palette: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[arg(long)]
    pub layers: PathBuf,
    #[arg(long)]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the transferred palette JSON
    #[arg(long)]
    pub palette_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ComposeArgs {
    #[arg(long)]
    pub layers: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    pub port: u16,
    /// Serve this directory at `/` instead of the built-in page
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MAX_SESSIONS)]
    pub max_sessions: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_SIDE)]
    pub max_side: u32,
}
