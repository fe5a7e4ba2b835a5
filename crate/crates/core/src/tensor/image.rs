use std::io::Cursor;
use std::ops::Deref;
use std::path::Path;

use image::{DynamicImage, ImageEncoder};

use super::Tensor3;
use crate::error::{Error, Result};

/// An image held as a 1- or 3-channel tensor with nominal range [0, 1].
///
/// Values are only clamped when written to disk; anything computed in
/// between may leave the unit range.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane(Tensor3);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Png,
    /// Binary PGM for grayscale, binary PPM for RGB.
    Pnm,
}

impl ImageFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "png" => Some(ImageFormat::Png),
            "ppm" | "pgm" | "pnm" => Some(ImageFormat::Pnm),
            _ => None,
        }
    }
}

impl ImagePlane {
    pub fn new(tensor: Tensor3) -> Result<Self> {
        match tensor.channels() {
            1 | 3 => Ok(ImagePlane(tensor)),
            c => Err(Error::invalid(format!("images need 1 or 3 channels, got {c}"))),
        }
    }

    pub fn tensor(&self) -> &Tensor3 {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor3 {
        self.0
    }

    /// Channel mean; a grayscale image is returned as-is.
    pub fn to_luma(&self) -> ImagePlane {
        if self.channels() == 1 {
            return self.clone();
        }
        let t = &self.0;
        ImagePlane(Tensor3::from_fn(1, t.height(), t.width(), |_, y, x| {
            (t.get(0, y, x) + t.get(1, y, x) + t.get(2, y, x)) / 3.0
        }))
    }

    /// 8-bit interleaved samples, clamped to [0, 1] and rounded half away
    /// from zero.
    pub fn to_u8_interleaved(&self) -> Vec<u8> {
        let t = &self.0;
        let mut out = Vec::with_capacity(t.len());
        for y in 0..t.height() {
            for x in 0..t.width() {
                for c in 0..t.channels() {
                    out.push(unit_to_u8(t.get(c, y, x)));
                }
            }
        }
        out
    }

    pub fn from_u8_interleaved(channels: usize, height: usize, width: usize, bytes: &[u8]) -> Result<Self> {
        if bytes.len() != channels * height * width {
            return Err(Error::invalid("pixel buffer length does not match dimensions"));
        }
        let t = Tensor3::from_fn(channels, height, width, |c, y, x| {
            f64::from(bytes[(y * width + x) * channels + c]) / 255.0
        });
        ImagePlane::new(t)
    }

    pub fn encode(&self, format: ImageFormat) -> Result<Vec<u8>> {
        let (w, h) = (self.width(), self.height());
        let bytes = self.to_u8_interleaved();
        match format {
            ImageFormat::Png => encode_png(w, h, self.channels(), &bytes, &[]),
            ImageFormat::Pnm => {
                let mut out = Vec::new();
                let color = if self.channels() == 1 {
                    image::ExtendedColorType::L8
                } else {
                    image::ExtendedColorType::Rgb8
                };
                image::codecs::pnm::PnmEncoder::new(&mut out)
                    .write_image(&bytes, w as u32, h as u32, color)
                    .map_err(|source| Error::Image {
                        path: "<memory>".into(),
                        source,
                    })?;
                Ok(out)
            }
        }
    }

    /// Writes PNG or PGM/PPM depending on the file extension.
    pub fn save(&self, path: &Path) -> Result<()> {
        let format = ImageFormat::from_path(path)
            .ok_or_else(|| Error::invalid(format!("unknown image extension: {}", path.display())))?;
        let bytes = self.encode(format)?;
        std::fs::write(path, bytes).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

impl Deref for ImagePlane {
    type Target = Tensor3;

    fn deref(&self) -> &Tensor3 {
        &self.0
    }
}

impl AsRef<Tensor3> for ImagePlane {
    fn as_ref(&self) -> &Tensor3 {
        &self.0
    }
}

/// Reads an 8-bit PNG, PGM or PPM. Grayscale sources yield one channel,
/// everything else is converted to RGB.
pub fn load_image(path: &Path) -> Result<ImagePlane> {
    let img = image::ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .decode()
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
    from_dynamic(img)
}

fn from_dynamic(img: DynamicImage) -> Result<ImagePlane> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray = matches!(
        img.color(),
        image::ColorType::L8 | image::ColorType::La8 | image::ColorType::L16 | image::ColorType::La16
    );
    if gray {
        ImagePlane::from_u8_interleaved(1, h, w, img.to_luma8().as_raw())
    } else {
        ImagePlane::from_u8_interleaved(3, h, w, img.to_rgb8().as_raw())
    }
}

pub(crate) fn unit_to_u8(v: f64) -> u8 {
    // f64::round rounds half away from zero.
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// PNG encoder shared with the renderer. `text` entries become tEXt chunks.
pub(crate) fn encode_png(
    width: usize,
    height: usize,
    channels: usize,
    bytes: &[u8],
    text: &[(&str, String)],
) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(Cursor::new(&mut out), width as u32, height as u32);
        enc.set_color(if channels == 1 {
            png::ColorType::Grayscale
        } else {
            png::ColorType::Rgb
        });
        enc.set_depth(png::BitDepth::Eight);
        for (key, value) in text {
            enc.add_text_chunk((*key).to_string(), value.clone())?;
        }
        let mut writer = enc.write_header()?;
        writer.write_image_data(bytes)?;
        writer.finish()?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_two_channel_images() {
        assert!(ImagePlane::new(Tensor3::zeros(2, 4, 4)).is_err());
    }

    #[test]
    fn u8_rounding_and_clamping() {
        assert_eq!(unit_to_u8(0.5), 128);
        assert_eq!(unit_to_u8(-0.2), 0);
        assert_eq!(unit_to_u8(1.7), 255);
        assert_eq!(unit_to_u8(1.0 / 255.0), 1);
    }

    #[test]
    fn png_and_pnm_round_trip_on_8bit_grid() {
        let dir = tempfile::tempdir().unwrap();
        for channels in [1, 3] {
            let t = Tensor3::from_fn(channels, 5, 7, |c, y, x| {
                ((c * 31 + y * 7 + x * 13) % 256) as f64 / 255.0
            });
            let img = ImagePlane::new(t).unwrap();
            for ext in ["png", if channels == 1 { "pgm" } else { "ppm" }] {
                let path = dir.path().join(format!("img{channels}.{ext}"));
                img.save(&path).unwrap();
                let back = load_image(&path).unwrap();
                assert_eq!(back.shape(), img.shape());
                assert!(back.max_abs_diff(&img).unwrap() < 1e-12, "{ext}");
            }
        }
    }

    #[test]
    fn luma_is_channel_mean() {
        let t = Tensor3::from_fn(3, 1, 1, |c, _, _| c as f64 * 0.3);
        let l = ImagePlane::new(t).unwrap().to_luma();
        assert_eq!(l.channels(), 1);
        assert!((l.get(0, 0, 0) - 0.3).abs() < 1e-15);
    }
}
