//! Forward-only inference for convolutional analysis/synthesis transforms.

pub mod conv;
mod format;
pub mod gdn;
mod layer;
mod net;
pub mod toy;

pub use conv::{conv2d, tconv2d};
pub use format::{load_weights, load_weights_file, save_weights, LoadedNet, MAGIC, VERSION};
pub use gdn::{gdn, igdn};
pub use layer::{ConvParams, GdnParams, LayerKind, LayerSpec};
pub use net::{quantize, run_analysis, run_synthesis, AnalysisNet, NetKind, Network, SynthesisNet};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor3;

    fn identity_tconv(c: usize) -> LayerSpec {
        let mut weight = vec![0.0; c * c];
        for i in 0..c {
            weight[i * c + i] = 1.0;
        }
        LayerSpec::tconv(ConvParams {
            in_channels: c,
            out_channels: c,
            kernel: (1, 1),
            stride: 1,
            padding: 0,
            output_padding: 0,
            weight,
            bias: None,
        })
        .unwrap()
    }

    #[test]
    fn quantize_ties_to_even() {
        let z = Tensor3::new(1, 1, 6, vec![0.5, 1.5, 2.5, -0.5, -1.5, 3.0]).unwrap();
        let q = quantize(&z);
        assert_eq!(q.data(), &[0.0, 2.0, 2.0, -0.0, -2.0, 3.0]);
        assert_eq!(quantize(&q), q);
    }

    #[test]
    fn identity_synthesis_passes_through() {
        let net = SynthesisNet::new(vec![identity_tconv(3)]).unwrap();
        let z = Tensor3::from_fn(3, 2, 2, |c, y, x| (c + y + x) as f64);
        assert_eq!(run_synthesis(&net, &z).unwrap(), z);
        assert_eq!(net.upsampling(), 1);
    }

    #[test]
    fn one_by_one_decoder_impulse_is_weight_column() {
        // tconv weight [in, out, 1, 1]: input channel i writes weight[i, :].
        let weight = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let net = SynthesisNet::new(vec![LayerSpec::tconv(ConvParams {
            in_channels: 2,
            out_channels: 3,
            kernel: (1, 1),
            stride: 1,
            padding: 0,
            output_padding: 0,
            weight: weight.clone(),
            bias: None,
        })
        .unwrap()])
        .unwrap();
        for i in 0..2 {
            let mut delta = Tensor3::zeros(2, 1, 1);
            delta.set(i, 0, 0, 1.0);
            assert_eq!(net.run(&delta).unwrap().data(), &weight[i * 3..i * 3 + 3]);
        }
    }

    #[test]
    fn zero_latent_through_gdn_net_is_zero() {
        let net = toy::toy_synthesis(1, 3).unwrap();
        let unbiased = SynthesisNet::new(
            net.network()
                .layers()
                .iter()
                .map(|l| match l {
                    LayerSpec::Tconv(p) => LayerSpec::Tconv(ConvParams {
                        bias: None,
                        ..p.clone()
                    }),
                    other => other.clone(),
                })
                .collect(),
        )
        .unwrap();
        let out = unbiased.run(&Tensor3::zeros(8, 3, 3)).unwrap();
        assert_eq!(out.count_nonzero(), 0);
        assert_eq!(out.shape(), crate::tensor::Shape::new(3, 12, 12));
    }

    #[test]
    fn analysis_shapes() {
        let enc = toy::toy_analysis(2, 3).unwrap();
        let dec = toy::toy_synthesis(3, 3).unwrap();
        assert_eq!(enc.downsampling(), 4);
        let x = Tensor3::from_fn(3, 16, 12, |c, y, x| ((c + y * x) % 7) as f64 / 7.0);
        let z = run_analysis(&enc, &x).unwrap();
        assert_eq!((z.channels(), z.height(), z.width()), (8, 4, 3));
        let back = run_synthesis(&dec, &z).unwrap();
        assert_eq!(back.shape(), x.shape());

        let id = AnalysisNet::new(vec![LayerSpec::conv(ConvParams {
            in_channels: 1,
            out_channels: 1,
            kernel: (1, 1),
            stride: 1,
            padding: 0,
            output_padding: 0,
            weight: vec![1.0],
            bias: None,
        })
        .unwrap()])
        .unwrap();
        let img = Tensor3::from_fn(1, 3, 3, |_, y, x| (y * 3 + x) as f64);
        assert_eq!(run_analysis(&id, &img).unwrap(), img);
    }

    #[test]
    fn network_validation() {
        // Channel mismatch between layers.
        let bad = SynthesisNet::new(vec![identity_tconv(3), identity_tconv(1)]);
        assert!(matches!(bad, Err(crate::Error::ShapeInconsistency(_))));
        // Output channel count must be 1 or 3.
        assert!(SynthesisNet::new(vec![identity_tconv(2)]).is_err());
        // Analysis nets cannot upsample.
        assert!(AnalysisNet::new(vec![identity_tconv(3)]).is_err());
    }
}
