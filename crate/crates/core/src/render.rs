//! Deterministic PNG grids of basis images and latent decompositions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::BasisSet;
use crate::error::{Error, Result};
use crate::tensor::image::{encode_png, unit_to_u8};
use crate::tensor::Tensor3;

/// Height of the label band drawn above each tile when labels are on.
pub const LABEL_BAND: usize = 9;
const GLYPH_WIDTH: usize = 5;
const GLYPH_HEIGHT: usize = 7;
const BACKGROUND: u8 = 255;
const INK: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelMode {
    None,
    Rank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    /// Each tile's `[min, max]` maps to `[0, 1]`.
    MinMax,
    /// Each tile's `[−a, a]` maps to `[0, 1]`, `a = max |v|`.
    SymmetricZero,
    /// One `[min, max]` over all tiles.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridLayout {
    pub columns: usize,
    /// Tile width in pixels; the height follows the tile's aspect ratio.
    pub tile_size: usize,
    pub gutter: usize,
    pub label: LabelMode,
    pub scale: ScaleMode,
}

impl GridLayout {
    pub fn basis() -> Self {
        GridLayout {
            columns: 8,
            tile_size: 32,
            gutter: 2,
            label: LabelMode::Rank,
            scale: ScaleMode::SymmetricZero,
        }
    }

    pub fn mosaic() -> Self {
        GridLayout {
            columns: 8,
            tile_size: 32,
            gutter: 2,
            label: LabelMode::None,
            scale: ScaleMode::MinMax,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.columns == 0 {
            return Err(Error::invalid("grid needs at least one column"));
        }
        if self.tile_size < 8 {
            return Err(Error::invalid(format!(
                "tile size must be at least 8, got {}",
                self.tile_size
            )));
        }
        Ok(())
    }
}

/// Raw 8-bit raster of a rendered grid, interleaved by channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl Raster {
    pub fn pixel(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }
}

const DIGITS: [[u8; GLYPH_HEIGHT]; 10] = [
    [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
    [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E],
    [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
    [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
    [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
    [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
    [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
    [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
    [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
    [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
];

fn value_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn normalise(v: f64, mode: ScaleMode, lo: f64, hi: f64) -> f64 {
    match mode {
        ScaleMode::SymmetricZero => {
            let a = lo.abs().max(hi.abs());
            if a == 0.0 {
                0.5
            } else {
                (v / a + 1.0) / 2.0
            }
        }
        ScaleMode::MinMax | ScaleMode::Global => {
            if hi > lo {
                (v - lo) / (hi - lo)
            } else {
                0.5
            }
        }
    }
}

/// Tile pixels (interleaved, `out_channels`), nearest-neighbour resized.
fn rasterise_tile(
    t: &Tensor3,
    tw: usize,
    th: usize,
    out_channels: usize,
    mode: ScaleMode,
    global: (f64, f64),
) -> Vec<u8> {
    let (lo, hi) = match mode {
        ScaleMode::Global => global,
        _ => value_range(t.data().iter().copied()),
    };
    let mut px = vec![0u8; tw * th * out_channels];
    for y in 0..th {
        let sy = (y * t.height()) / th;
        for x in 0..tw {
            let sx = (x * t.width()) / tw;
            for c in 0..out_channels {
                let src = if t.channels() == 1 { 0 } else { c };
                px[(y * tw + x) * out_channels + c] = unit_to_u8(normalise(t.get(src, sy, sx), mode, lo, hi));
            }
        }
    }
    px
}

fn draw_number(raster: &mut Raster, x0: usize, y0: usize, n: usize, max_width: usize) {
    let text = n.to_string();
    for (k, ch) in text.bytes().enumerate() {
        let gx = x0 + k * (GLYPH_WIDTH + 1);
        if gx + GLYPH_WIDTH > x0 + max_width {
            break;
        }
        let glyph = DIGITS[(ch - b'0') as usize];
        for (row, bits) in glyph.iter().enumerate() {
            for col in 0..GLYPH_WIDTH {
                if bits & (0x10 >> col) != 0 {
                    let base = ((y0 + row) * raster.width + gx + col) * raster.channels;
                    raster.pixels[base..base + raster.channels].fill(INK);
                }
            }
        }
    }
}

/// Lays `tiles` out in row-major order. `labels[i]` is drawn above tile `i`
/// when labels are enabled.
pub fn render_raster(tiles: &[&Tensor3], labels: &[usize], layout: &GridLayout) -> Result<Raster> {
    layout.validate()?;
    let first = tiles.first().ok_or_else(|| Error::invalid("nothing to render"))?;
    if let Some(t) = tiles.iter().find(|t| t.shape() != first.shape()) {
        return Err(Error::ShapeMismatch {
            op: "render",
            left: first.shape(),
            right: t.shape(),
        });
    }
    if first.channels() != 1 && first.channels() != 3 {
        return Err(Error::invalid(format!(
            "tiles must have 1 or 3 channels, got {}",
            first.channels()
        )));
    }
    let channels = first.channels();
    let tw = layout.tile_size;
    let th = ((tw * first.height()) as f64 / first.width() as f64).round().max(1.0) as usize;
    let band = if layout.label == LabelMode::Rank { LABEL_BAND } else { 0 };
    let cols = layout.columns.min(tiles.len());
    let rows = tiles.len().div_ceil(cols);
    let width = cols * tw + (cols - 1) * layout.gutter;
    let height = rows * (band + th) + (rows - 1) * layout.gutter;

    let global = value_range(tiles.iter().flat_map(|t| t.data().iter().copied()));
    let rendered: Vec<Vec<u8>> = tiles
        .par_iter()
        .map(|t| rasterise_tile(t, tw, th, channels, layout.scale, global))
        .collect();

    let mut raster = Raster {
        width,
        height,
        channels,
        pixels: vec![BACKGROUND; width * height * channels],
    };
    for (i, px) in rendered.iter().enumerate() {
        let x0 = (i % cols) * (tw + layout.gutter);
        let y0 = (i / cols) * (band + th + layout.gutter);
        if band > 0 {
            draw_number(&mut raster, x0 + 1, y0 + 1, labels.get(i).copied().unwrap_or(i), tw - 1);
        }
        let row_bytes = tw * channels;
        for y in 0..th {
            let dst = ((y0 + band + y) * width + x0) * channels;
            raster.pixels[dst..dst + row_bytes].copy_from_slice(&px[y * row_bytes..(y + 1) * row_bytes]);
        }
    }
    Ok(raster)
}

fn encode(raster: &Raster, layout: &GridLayout, content: &str) -> Result<Vec<u8>> {
    let scale = match layout.scale {
        ScaleMode::MinMax => "per-tile min-max to [0,1]",
        ScaleMode::SymmetricZero => "per-tile [-max|v|, max|v|] to [0,1], zero at mid-gray",
        ScaleMode::Global => "global min-max over all tiles to [0,1]",
    };
    let text = [
        ("Software", "codec-lens".to_string()),
        ("Content", content.to_string()),
        ("Layout", serde_json::to_string(layout)?),
        ("Scale", scale.to_string()),
    ];
    encode_png(raster.width, raster.height, raster.channels, &raster.pixels, &text)
}

/// Basis tiles in ascending rank (descending rate) when every entry has a
/// rank, else by channel. Labels show the rank, or the position if unranked.
pub fn basis_grid_raster(bs: &BasisSet, layout: &GridLayout) -> Result<Raster> {
    let ordered = bs.ordered();
    let tiles: Vec<&Tensor3> = ordered.iter().map(|e| &e.image).collect();
    let labels: Vec<usize> = ordered.iter().enumerate().map(|(i, e)| e.rank.unwrap_or(i)).collect();
    render_raster(&tiles, &labels, layout)
}

pub fn render_basis_grid(bs: &BasisSet, layout: &GridLayout) -> Result<Vec<u8>> {
    encode(&basis_grid_raster(bs, layout)?, layout, "basis grid")
}

/// Arbitrary tiles with caller-supplied labels.
pub fn render_tiles(tiles: &[&Tensor3], labels: &[usize], layout: &GridLayout) -> Result<Vec<u8>> {
    encode(&render_raster(tiles, labels, layout)?, layout, "tile grid")
}

/// Components in the order given, labelled by position.
pub fn render_decomposition_mosaic(components: &[Tensor3], layout: &GridLayout) -> Result<Vec<u8>> {
    let tiles: Vec<&Tensor3> = components.iter().collect();
    let labels: Vec<usize> = (0..components.len()).collect();
    encode(&render_raster(&tiles, &labels, layout)?, layout, "decomposition mosaic")
}
