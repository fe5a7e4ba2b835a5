use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::linear::OrthogonalTransform;
use crate::nn::{AnalysisNet, SynthesisNet};
use crate::tensor::{Shape, Tensor3};

/// Anything that maps a `C × h × w` latent to a `c_out × hs × ws` image.
pub trait Decoder: Sync {
    fn latent_channels(&self) -> usize;
    fn upsampling(&self) -> usize;
    fn output_channels(&self) -> usize;
    fn decode(&self, z: &Tensor3) -> Result<Tensor3>;

    fn output_shape(&self, latent: Shape) -> Shape {
        let s = self.upsampling();
        Shape::new(self.output_channels(), latent.height * s, latent.width * s)
    }
}

/// Anything that maps an image to a latent.
pub trait Encoder: Sync {
    fn latent_channels(&self) -> usize;
    fn downsampling(&self) -> usize;
    fn encode(&self, x: &Tensor3) -> Result<Tensor3>;
}

impl Decoder for SynthesisNet {
    fn latent_channels(&self) -> usize {
        SynthesisNet::latent_channels(self)
    }

    fn upsampling(&self) -> usize {
        SynthesisNet::upsampling(self)
    }

    fn output_channels(&self) -> usize {
        SynthesisNet::output_channels(self)
    }

    fn decode(&self, z: &Tensor3) -> Result<Tensor3> {
        let out = self.run(z)?;
        let expected = self.output_shape(z.shape());
        if out.shape() != expected {
            return Err(Error::ShapeMismatch {
                op: "synthesis output",
                left: out.shape(),
                right: expected,
            });
        }
        Ok(out)
    }
}

impl Encoder for AnalysisNet {
    fn latent_channels(&self) -> usize {
        AnalysisNet::latent_channels(self)
    }

    fn downsampling(&self) -> usize {
        AnalysisNet::downsampling(self)
    }

    fn encode(&self, x: &Tensor3) -> Result<Tensor3> {
        self.run(x)
    }
}

/// Block transform coder built from an orthonormal `d × d` transform with
/// `d = s²`: each latent column `z[:, m, n]` is mapped through `Hᵀ` and
/// written row-major into the `s × s` output block at `(m, n)`.
///
/// As an encoder it applies `H` to each block of a grayscale image; RGB
/// input is reduced to its channel mean first.
#[derive(Debug, Clone)]
pub struct LinearBlockCodec {
    transform: OrthogonalTransform,
    block: usize,
}

pub type LinearBlockDecoder = LinearBlockCodec;

impl LinearBlockCodec {
    pub fn new(transform: OrthogonalTransform) -> Result<Self> {
        let d = transform.dim();
        let block = (d as f64).sqrt().round() as usize;
        if block * block != d {
            return Err(Error::invalid(format!(
                "block decoder needs a square dimension, `{}` has {d}",
                transform.name()
            )));
        }
        Ok(LinearBlockCodec { transform, block })
    }

    pub fn transform(&self) -> &OrthogonalTransform {
        &self.transform
    }

    pub fn block_size(&self) -> usize {
        self.block
    }
}

impl Decoder for LinearBlockCodec {
    fn latent_channels(&self) -> usize {
        self.transform.dim()
    }

    fn upsampling(&self) -> usize {
        self.block
    }

    fn output_channels(&self) -> usize {
        1
    }

    fn decode(&self, z: &Tensor3) -> Result<Tensor3> {
        let d = self.transform.dim();
        if z.channels() != d {
            return Err(Error::invalid(format!(
                "block decoder expects {d} latent channels, got {}",
                z.channels()
            )));
        }
        let s = self.block;
        let mut out = Tensor3::from_shape_zeros(self.output_shape(z.shape()));
        let mut column = vec![0.0; d];
        for m in 0..z.height() {
            for n in 0..z.width() {
                for (c, v) in column.iter_mut().enumerate() {
                    *v = z.get(c, m, n);
                }
                if column.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let block = self.transform.inverse(&column)?;
                for y in 0..s {
                    for x in 0..s {
                        out.set(0, m * s + y, n * s + x, block[y * s + x]);
                    }
                }
            }
        }
        Ok(out)
    }
}

impl Encoder for LinearBlockCodec {
    fn latent_channels(&self) -> usize {
        self.transform.dim()
    }

    fn downsampling(&self) -> usize {
        self.block
    }

    fn encode(&self, x: &Tensor3) -> Result<Tensor3> {
        let gray;
        let x = match x.channels() {
            1 => x,
            3 => {
                gray = Tensor3::from_fn(1, x.height(), x.width(), |_, y, xx| {
                    (x.get(0, y, xx) + x.get(1, y, xx) + x.get(2, y, xx)) / 3.0
                });
                &gray
            }
            c => return Err(Error::invalid(format!("block encoder takes 1 or 3 channels, got {c}"))),
        };
        let s = self.block;
        if x.height() % s != 0 || x.width() % s != 0 {
            return Err(Error::invalid(format!(
                "image {}x{} is not a multiple of block size {s}",
                x.height(),
                x.width()
            )));
        }
        let (h, w) = (x.height() / s, x.width() / s);
        let d = self.transform.dim();
        let mut z = Tensor3::zeros(d, h, w);
        let mut block = vec![0.0; d];
        for m in 0..h {
            for n in 0..w {
                for y in 0..s {
                    for xx in 0..s {
                        block[y * s + xx] = x.get(0, m * s + y, n * s + xx);
                    }
                }
                for (c, v) in self.transform.forward(&block)?.into_iter().enumerate() {
                    z.set(c, m, n, v);
                }
            }
        }
        Ok(z)
    }
}

/// `g′(z) = g(z) − g(0)`, with `g(0)` computed once per latent shape.
pub struct OffsetFree<'a, D: Decoder + ?Sized> {
    decoder: &'a D,
    zero_responses: Mutex<HashMap<Shape, Arc<Tensor3>>>,
}

impl<'a, D: Decoder + ?Sized> OffsetFree<'a, D> {
    pub fn new(decoder: &'a D) -> Self {
        OffsetFree {
            decoder,
            zero_responses: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &D {
        self.decoder
    }

    pub fn zero_response(&self, shape: Shape) -> Result<Arc<Tensor3>> {
        if let Some(hit) = self.zero_responses.lock().expect("cache poisoned").get(&shape) {
            return Ok(Arc::clone(hit));
        }
        let response = Arc::new(self.decoder.decode(&Tensor3::from_shape_zeros(shape))?);
        let mut cache = self.zero_responses.lock().expect("cache poisoned");
        Ok(Arc::clone(cache.entry(shape).or_insert(response)))
    }

    pub fn decode(&self, z: &Tensor3) -> Result<Tensor3> {
        let offset = self.zero_response(z.shape())?;
        self.decoder.decode(z)?.sub(&offset)
    }
}

/// One-shot `g(z) − g(0)`. Use [`OffsetFree`] to reuse the zero response.
pub fn offset_free_decode<D: Decoder + ?Sized>(dec: &D, z: &Tensor3) -> Result<Tensor3> {
    OffsetFree::new(dec).decode(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{basis_2d, dct_matrix};

    fn dct_codec(n: usize) -> LinearBlockCodec {
        LinearBlockCodec::new(dct_matrix(n).unwrap().separable_2d().unwrap()).unwrap()
    }

    #[test]
    fn impulse_decodes_to_basis_image() {
        let codec = dct_codec(4);
        let b = basis_2d(&dct_matrix(4).unwrap());
        for i in 0..16 {
            let mut z = Tensor3::zeros(16, 1, 1);
            z.set(i, 0, 0, 1.0);
            let img = codec.decode(&z).unwrap();
            let want = b.image(i / 4, i % 4);
            for (a, w) in img.data().iter().zip(want) {
                assert!((a - w).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn encode_decode_round_trip() {
        let codec = dct_codec(2);
        let x = Tensor3::from_fn(1, 4, 6, |_, y, x| ((y * 7 + x * 3) % 5) as f64 / 5.0);
        let back = codec.decode(&codec.encode(&x).unwrap()).unwrap();
        assert!(back.max_abs_diff(&x).unwrap() < 1e-12);
        assert!(codec.encode(&Tensor3::zeros(1, 3, 4)).is_err());
        assert!(LinearBlockCodec::new(dct_matrix(3).unwrap()).is_err());
    }

    #[test]
    fn offset_free_removes_zero_response() {
        struct Biased;
        impl Decoder for Biased {
            fn latent_channels(&self) -> usize {
                1
            }
            fn upsampling(&self) -> usize {
                1
            }
            fn output_channels(&self) -> usize {
                1
            }
            fn decode(&self, z: &Tensor3) -> Result<Tensor3> {
                Ok(z.map(|v| 2.0 * v + 0.5))
            }
        }
        let z = Tensor3::new(1, 1, 3, vec![1.0, -2.0, 0.0]).unwrap();
        assert_eq!(offset_free_decode(&Biased, &z).unwrap().data(), &[2.0, -4.0, 0.0]);
        let g = OffsetFree::new(&Biased);
        assert_eq!(g.decode(&z.zeros_like()).unwrap().count_nonzero(), 0);
        let a = g.zero_response(z.shape()).unwrap();
        let b = g.zero_response(z.shape()).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
