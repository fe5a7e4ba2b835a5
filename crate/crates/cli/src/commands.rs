use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use codec_lens::analysis::{
    aggregate_channel, aggregate_spatial, amplitudes_from_images, basis_set_from_2d, basis_set_from_images,
    basis_similarity, channel_components, extract_basis, extract_basis_with, separability, spatial_components,
    AmplitudeMode, Amplitudes, BasisIndex, BasisOptions, BasisSet, LinearBlockCodec, OffsetFree, SeparabilityOptions,
    SeparabilityReport, SimilarityReference, SimilarityReport,
};
use codec_lens::entropy::estimate_rates;
use codec_lens::linear::{basis_2d, klt_from_patches};
use codec_lens::nn::quantize;
use codec_lens::render::{render_decomposition_mosaic, render_tiles, GridLayout, LabelMode, ScaleMode};
use codec_lens::{mse, ImagePlane, Tensor3};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::{
    AmplitudeArg, BasisArgs, Builtin, BuiltinKind, CompareArgs, DecomposeArgs, GridArgs, RatesArgs, SeparabilityArgs,
};
use crate::io::{emit_json, images_in_dir, load_images, resolve_images, write_atomic, write_json};
use crate::model::{builtin_codec, builtin_transform, Model};

pub const INDEX_FILE: &str = "index.json";

fn layout(grid: &GridArgs, label: LabelMode, default_scale: ScaleMode) -> GridLayout {
    GridLayout {
        columns: grid.columns,
        tile_size: grid.tile_size,
        gutter: grid.gutter,
        label,
        scale: grid.scale_mode.map(Into::into).unwrap_or(default_scale),
    }
}

fn display_paths(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

/// Signed image scaled so zero lands on mid-gray.
fn symmetric_plane(t: &Tensor3) -> Result<ImagePlane> {
    let a = t.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scaled = if a == 0.0 {
        t.map(|_| 0.5)
    } else {
        t.map(|v| 0.5 + v / (2.0 * a))
    };
    Ok(ImagePlane::new(scaled)?)
}

pub fn basis(args: &BasisArgs) -> Result<()> {
    let model = Model::load(&args.model)?;
    let dec = model.decoder()?;
    let images = match &args.images {
        Some(pattern) => load_images(&resolve_images(pattern)?)?,
        None => Vec::new(),
    };
    let mode = args.amplitudes.unwrap_or(if images.is_empty() {
        AmplitudeArg::Unit
    } else {
        AmplitudeArg::KodakMax
    });
    let amplitudes = match AmplitudeMode::from(mode) {
        AmplitudeMode::Unit => Amplitudes::unit(dec.latent_channels()),
        m => {
            if images.is_empty() {
                bail!("--amplitudes {mode:?} needs --images");
            }
            amplitudes_from_images(model.encoder()?, &images, m).context("estimating amplitudes")?
        }
    };

    let opts = BasisOptions {
        offset_free: args.offset_free,
        extent: 1,
    };
    let mut bs = extract_basis_with(dec, &amplitudes.values, opts).context("extracting basis")?;
    if model.has_encoder() && !images.is_empty() {
        let rates = estimate_rates(model.encoder()?, &images).context("estimating rates")?;
        bs.set_ranks(&rates.order)?;
        write_json(&args.out.join("rates.json"), &rates)?;
    }

    for e in bs.entries() {
        let path = args.out.join(format!("channel_{:04}.png", e.channel));
        write_atomic(
            &path,
            &symmetric_plane(&e.image)?.encode(codec_lens::tensor::ImageFormat::Png)?,
        )?;
    }
    write_json(&args.out.join(INDEX_FILE), &bs.to_index())?;
    write_json(&args.out.join("amplitudes.json"), &amplitudes)?;

    let ordered = bs.ordered();
    let shown = args.top.unwrap_or(ordered.len()).min(ordered.len());
    if shown == 0 {
        bail!("--top must be at least 1");
    }
    let tiles: Vec<&Tensor3> = ordered[..shown].iter().map(|e| &e.image).collect();
    let labels: Vec<usize> = ordered[..shown]
        .iter()
        .enumerate()
        .map(|(i, e)| e.rank.unwrap_or(i))
        .collect();
    let grid = render_tiles(
        &tiles,
        &labels,
        &layout(&args.grid, LabelMode::Rank, ScaleMode::SymmetricZero),
    )
    .context("rendering basis grid")?;
    write_atomic(&args.out.join("grid.png"), &grid)?;
    println!("wrote {} basis images to {}", bs.len(), args.out.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecomposeSummary {
    pub image: String,
    pub latent_shape: [usize; 3],
    pub padded: bool,
    pub quantized: bool,
    pub mse_channel: f64,
    pub mse_spatial: f64,
}

pub fn decompose(args: &DecomposeArgs) -> Result<()> {
    let model = Model::load(&args.model)?;
    let (dec, enc) = (model.decoder()?, model.encoder()?);
    let image = codec_lens::tensor::load_image(&args.image)
        .with_context(|| format!("loading image {}", args.image.display()))?;
    let s = enc.downsampling();
    let padded = image.height() % s != 0 || image.width() % s != 0;
    if padded {
        warn!(
            "{}x{} image is not a multiple of {s}; edge-padding",
            image.height(),
            image.width()
        );
    }
    let mut z = enc.encode(&image.pad_edge_to_multiple(s)).context("encoding image")?;
    if args.quantize {
        z = quantize(&z);
    }
    if z.height() * z.width() > 1024 {
        warn!(
            "{}x{} latent: spatial decomposition decodes one image per site",
            z.height(),
            z.width()
        );
    }
    let g = OffsetFree::new(dec);
    let joint = g.decode(&z).context("decoding joint latent")?;
    let sum_channel = aggregate_channel(&g, &z).context("channel decomposition")?;
    let sum_spatial = aggregate_spatial(&g, &z).context("spatial decomposition")?;

    let mosaic = |parts: Vec<Tensor3>, columns: usize| -> Result<Vec<u8>> {
        let decoded = parts
            .par_iter()
            .map(|p| g.decode(p))
            .collect::<codec_lens::Result<Vec<_>>>()?;
        let mut l = layout(&args.grid, LabelMode::None, ScaleMode::MinMax);
        l.columns = columns;
        Ok(render_decomposition_mosaic(&decoded, &l)?)
    };
    let spatial = mosaic(spatial_components(&z), z.width()).context("rendering spatial mosaic")?;
    write_atomic(&args.out.join("spatial.png"), &spatial)?;
    let channel = mosaic(channel_components(&z), args.grid.columns).context("rendering channel mosaic")?;
    write_atomic(&args.out.join("channel.png"), &channel)?;

    let mut side = layout(&args.grid, LabelMode::None, ScaleMode::Global);
    side.columns = 3;
    let comparison = render_decomposition_mosaic(&[joint.clone(), sum_channel.clone(), sum_spatial.clone()], &side)?;
    write_atomic(&args.out.join("comparison.png"), &comparison)?;
    let mut single = layout(&args.grid, LabelMode::None, ScaleMode::MinMax);
    single.columns = 1;
    write_atomic(
        &args.out.join("joint.png"),
        &render_decomposition_mosaic(std::slice::from_ref(&joint), &single)?,
    )?;

    let summary = DecomposeSummary {
        image: args.image.display().to_string(),
        latent_shape: [z.channels(), z.height(), z.width()],
        padded,
        quantized: args.quantize,
        mse_channel: mse(&joint, &sum_channel)?,
        mse_spatial: mse(&joint, &sum_spatial)?,
    };
    write_json(&args.out.join("decompose.json"), &summary)?;
    println!(
        "mse_channel {:e}  mse_spatial {:e}  -> {}",
        summary.mse_channel,
        summary.mse_spatial,
        args.out.display()
    );
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SeparabilityOutput {
    pub images: Vec<String>,
    pub report: SeparabilityReport,
}

pub fn separability_cmd(args: &SeparabilityArgs) -> Result<()> {
    let paths = resolve_images(&args.images)?;
    let images = load_images(&paths)?;
    let model = Model::load(&args.model)?;
    let (dec, enc) = (model.decoder()?, model.encoder()?);
    let s = enc.downsampling();
    let latents = images
        .par_iter()
        .map(|img| enc.encode(&img.pad_edge_to_multiple(s)))
        .collect::<codec_lens::Result<Vec<_>>>()
        .context("encoding images")?;
    let opts = SeparabilityOptions {
        spatial_subset: args.spatial_subset,
        quantize: args.quantize,
    };
    let report = separability(dec, &latents, opts).context("measuring separability")?;
    info!(
        "mse_channel {:e}, mse_spatial {:e}",
        report.mse_channel, report.mse_spatial
    );
    emit_json(
        args.out.as_deref(),
        &SeparabilityOutput {
            images: display_paths(&paths),
            report,
        },
    )
}

pub fn rates(args: &RatesArgs) -> Result<()> {
    let paths = resolve_images(&args.images)?;
    let images = load_images(&paths)?;
    let model = Model::load(&args.model)?;
    let report = estimate_rates(model.encoder()?, &images).context("estimating rates")?;
    emit_json(args.out.as_deref(), &report)
}

/// Reads a basis directory: the JSON index when present, else its images.
pub fn load_basis_dir(dir: &Path) -> Result<BasisSet> {
    let index = dir.join(INDEX_FILE);
    if index.is_file() {
        let text = std::fs::read_to_string(&index).with_context(|| format!("reading {}", index.display()))?;
        let parsed: BasisIndex = serde_json::from_str(&text).with_context(|| format!("parsing {}", index.display()))?;
        return Ok(BasisSet::from_index(parsed)?);
    }
    let images = load_images(&images_in_dir(dir)?)?;
    Ok(basis_set_from_images(images)?)
}

/// Non-overlapping `n × n` luma patches from every image in `dir`.
fn luma_patches(dir: &Path, n: usize) -> Result<Vec<Vec<f64>>> {
    let mut patches = Vec::new();
    for img in load_images(&images_in_dir(dir)?)? {
        let y = img.to_luma();
        for by in 0..y.height() / n {
            for bx in 0..y.width() / n {
                let mut p = Vec::with_capacity(n * n);
                for r in 0..n {
                    for c in 0..n {
                        p.push(y.get(0, by * n + r, bx * n + c));
                    }
                }
                patches.push(p);
            }
        }
    }
    Ok(patches)
}

pub fn reference_basis(name: &str, block_size: usize) -> Result<BasisSet> {
    if let Some(dir) = name.strip_prefix("klt:") {
        let n = block_size;
        let patches = luma_patches(Path::new(dir), n)?;
        let klt = klt_from_patches(&patches).with_context(|| format!("KLT of {} patches from {dir}", patches.len()))?;
        let codec = LinearBlockCodec::new(klt)?;
        return Ok(extract_basis(&codec, &vec![1.0; n * n])?);
    }
    let with_size = if name.contains(':') {
        name.to_string()
    } else {
        format!("{name}:{block_size}")
    };
    match with_size.parse::<Builtin>() {
        Ok(b) => Ok(basis_set_from_2d(&basis_2d(&builtin_transform(b)?))?),
        Err(_) if Path::new(name).is_dir() => load_basis_dir(Path::new(name)),
        Err(_) => bail!("unknown reference `{name}`: expected dct, wht, haar, klt:<dir> or a basis directory"),
    }
}

pub fn compare(args: &CompareArgs) -> Result<()> {
    let candidate = load_basis_dir(&args.basis).with_context(|| format!("loading basis {}", args.basis.display()))?;
    let reference = reference_basis(&args.reference, args.block_size)?;
    let report: SimilarityReport = basis_similarity(&candidate, SimilarityReference::Set(&reference))?;
    info!("mean |cos| {}", report.mean_score);
    emit_json(args.out.as_deref(), &report)
}

/// The built-in codec as a [`LinearBlockCodec`], for self-tests.
pub fn codec(kind: BuiltinKind, n: usize) -> Result<LinearBlockCodec> {
    builtin_codec(Builtin { kind, n })
}
