use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use codec_lens::analysis::{AmplitudeMode, SpatialSubset};
use codec_lens::render::ScaleMode;

#[derive(Debug, Parser)]
#[command(
    name = "codec-lens",
    version,
    about = "Inspect transform image coders through their decoder's impulse responses"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract per-channel basis images and render them as a grid.
    Basis(BasisArgs),
    /// Decode the spatial and channel decompositions of one image's latent.
    Decompose(DecomposeArgs),
    /// Measure spatial and channel-wise separability on an image set.
    Separability(SeparabilityArgs),
    /// Estimate per-channel rates on an image set.
    Rates(RatesArgs),
    /// Score a basis directory against a reference basis.
    Compare(CompareArgs),
    /// Run the built-in property suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    Dct,
    Wht,
    Haar,
}

/// `dct:N`, `wht:N` or `haar:N`: separable 2-D block transform of size N×N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Builtin {
    pub kind: BuiltinKind,
    pub n: usize,
}

impl FromStr for Builtin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, n) = s
            .split_once(':')
            .ok_or_else(|| format!("expected `dct:N`, `wht:N` or `haar:N`, got `{s}`"))?;
        let kind = match name {
            "dct" => BuiltinKind::Dct,
            "wht" => BuiltinKind::Wht,
            "haar" => BuiltinKind::Haar,
            other => return Err(format!("unknown built-in decoder `{other}`")),
        };
        let n: usize = n
            .parse()
            .map_err(|_| format!("block size `{n}` is not a positive integer"))?;
        if n == 0 {
            return Err("block size must be positive".into());
        }
        Ok(Builtin { kind, n })
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Synthesis (decoder) weights in LICW format.
    #[arg(long, conflicts_with = "decoder")]
    pub weights: Option<PathBuf>,
    /// Analysis (encoder) weights in LICW format.
    #[arg(long, conflicts_with = "decoder")]
    pub analysis_weights: Option<PathBuf>,
    /// Built-in linear decoder and encoder: dct:N, wht:N or haar:N.
    #[arg(long)]
    pub decoder: Option<Builtin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AmplitudeArg {
    /// Largest signed latent value per channel over the image set.
    KodakMax,
    Unit,
    /// Largest latent magnitude per channel over the image set.
    AbsMax,
}

impl From<AmplitudeArg> for AmplitudeMode {
    fn from(a: AmplitudeArg) -> Self {
        match a {
            AmplitudeArg::KodakMax => AmplitudeMode::SignedMax,
            AmplitudeArg::Unit => AmplitudeMode::Unit,
            AmplitudeArg::AbsMax => AmplitudeMode::AbsMax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    MinMax,
    SymmetricZero,
    Global,
}

impl From<ScaleArg> for ScaleMode {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::MinMax => ScaleMode::MinMax,
            ScaleArg::SymmetricZero => ScaleMode::SymmetricZero,
            ScaleArg::Global => ScaleMode::Global,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub scale_mode: Option<ScaleArg>,
    #[arg(long, default_value_t = 8)]
    pub columns: usize,
    /// Tile width in pixels.
    #[arg(long, default_value_t = 32)]
    pub tile_size: usize,
    #[arg(long, default_value_t = 2)]
    pub gutter: usize,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Glob of images used for amplitudes and rate ranking.
    #[arg(long)]
    pub images: Option<String>,
    /// Defaults to kodak-max when images are given, unit otherwise.
    #[arg(long, value_enum)]
    pub amplitudes: Option<AmplitudeArg>,
    /// Subtract the decoder's zero response from every basis image.
    #[arg(long)]
    pub offset_free: bool,
    /// Render only the K highest-rate channels.
    #[arg(long)]
    pub top: Option<usize>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub quantize: bool,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: PathBuf,
}

/// `all` or a latent count.
pub fn parse_spatial_subset(s: &str) -> Result<SpatialSubset, String> {
    if s == "all" {
        return Ok(SpatialSubset::All);
    }
    s.parse()
        .map(SpatialSubset::First)
        .map_err(|_| format!("expected a count or `all`, got `{s}`"))
}

#[derive(Debug, Args)]
pub struct SeparabilityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub images: String,
    #[arg(long)]
    pub quantize: bool,
    /// Number of images (in sorted order) to run the spatial decomposition on, or `all`.
    #[arg(long, default_value = "1", value_parser = parse_spatial_subset)]
    pub spatial_subset: SpatialSubset,
    /// JSON output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub images: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Basis directory written by `basis`.
    #[arg(long)]
    pub basis: PathBuf,
    /// dct, wht, haar (optionally `:N`), klt:<patch-image-dir>, or another basis directory.
    #[arg(long)]
    pub reference: String,
    /// Reference block size when the reference name carries none.
    #[arg(long, default_value_t = 8)]
    pub block_size: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corrupt the weight-file magic before loading, to exercise the failure path.
    #[arg(long)]
    pub inject_corrupt_weights: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_parsing() {
        assert_eq!(
            "dct:8".parse::<Builtin>().unwrap(),
            Builtin {
                kind: BuiltinKind::Dct,
                n: 8
            }
        );
        assert_eq!("haar:4".parse::<Builtin>().unwrap().kind, BuiltinKind::Haar);
        assert!("dct".parse::<Builtin>().is_err());
        assert!("fft:8".parse::<Builtin>().is_err());
        assert!("wht:0".parse::<Builtin>().is_err());
    }

    #[test]
    fn spatial_subset_parsing() {
        assert_eq!(parse_spatial_subset("all").unwrap(), SpatialSubset::All);
        assert_eq!(parse_spatial_subset("3").unwrap(), SpatialSubset::First(3));
        assert!(parse_spatial_subset("-1").is_err());
    }
}
