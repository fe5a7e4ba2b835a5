use anyhow::{ensure, Result};
use codec_lens::analysis::{
    channel_components, extract_basis, separability, spatial_components, Decoder, SeparabilityOptions, SpatialSubset,
};
use codec_lens::nn::toy::{linear_tconv_stack, toy_synthesis};
use codec_lens::nn::{conv2d, load_weights, save_weights, tconv2d, ConvParams};
use codec_lens::Tensor3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::args::{BuiltinKind, SelftestArgs};
use crate::commands::codec;

fn random_tensor(rng: &mut ChaCha8Rng, c: usize, h: usize, w: usize) -> Tensor3 {
    Tensor3::from_fn(c, h, w, |_, _, _| rng.random_range(-1.0..1.0))
}

fn linear_oracle(rng: &mut ChaCha8Rng) -> Result<()> {
    for kind in [BuiltinKind::Dct, BuiltinKind::Wht, BuiltinKind::Haar] {
        for n in [4, 8] {
            let dec = codec(kind, n)?;
            let latents: Vec<Tensor3> = (0..3).map(|_| random_tensor(rng, n * n, 3, 3)).collect();
            let opts = SeparabilityOptions {
                spatial_subset: SpatialSubset::All,
                quantize: false,
            };
            let r = separability(&dec, &latents, opts)?;
            ensure!(
                r.mse_channel <= 1e-9 && r.mse_spatial <= 1e-9,
                "{kind:?}:{n} mse_channel {:e} mse_spatial {:e}",
                r.mse_channel,
                r.mse_spatial
            );
        }
    }
    Ok(())
}

fn impulse_duality() -> Result<()> {
    for kind in [BuiltinKind::Dct, BuiltinKind::Wht, BuiltinKind::Haar] {
        let dec = codec(kind, 4)?;
        let amps: Vec<f64> = (0..16).map(|i| 0.5 + i as f64).collect();
        let bs = extract_basis(&dec, &amps)?;
        for (i, e) in bs.entries().iter().enumerate() {
            let column = dec.transform().linear_basis(i)?;
            for (a, b) in e.image.data().iter().zip(&column) {
                ensure!(
                    (a - amps[i] * b).abs() <= 1e-12,
                    "{kind:?} channel {i} differs from its column"
                );
            }
        }
    }
    Ok(())
}

fn partitions(rng: &mut ChaCha8Rng) -> Result<()> {
    for _ in 0..50 {
        let (c, h, w) = (rng.random_range(1..6), rng.random_range(1..7), rng.random_range(1..7));
        let z = random_tensor(rng, c, h, w);
        for parts in [spatial_components(&z), channel_components(&z)] {
            let mut acc = z.zeros_like();
            for p in &parts {
                acc = acc.add(p)?;
            }
            ensure!(acc == z, "components of a {c}x{h}x{w} latent do not sum to it");
        }
    }
    Ok(())
}

fn adjoint(rng: &mut ChaCha8Rng) -> Result<()> {
    for _ in 0..20 {
        let (cin, cout) = (rng.random_range(1..4), rng.random_range(1..4));
        let k = rng.random_range(1..6);
        let stride = rng.random_range(1..4);
        let padding = rng.random_range(0..k);
        let h = rng.random_range(k..k + 8);
        // Same residue mod stride in both axes, so one output_padding fits.
        let w = h + stride * rng.random_range(0..3);
        let weight: Vec<f64> = (0..cin * cout * k * k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let conv = ConvParams {
            in_channels: cin,
            out_channels: cout,
            kernel: (k, k),
            stride,
            padding,
            output_padding: 0,
            weight,
            bias: None,
        };
        let x = random_tensor(rng, cin, h, w);
        let ax = conv2d(&x, &conv)?;
        let y = random_tensor(rng, cout, ax.height(), ax.width());
        let op = (h + 2 * padding - k) % stride;
        let tconv = ConvParams {
            in_channels: cout,
            out_channels: cin,
            output_padding: op,
            ..conv
        };
        let aty = tconv2d(&y, &tconv)?;
        let lhs = ax.dot(&y)?;
        let rhs = x.dot(&aty)?;
        ensure!((lhs - rhs).abs() <= 1e-10, "<Ax, y> = {lhs} but <x, Aᵀy> = {rhs}");
    }
    Ok(())
}

fn shift_equivariance(seed: u64) -> Result<()> {
    let net = linear_tconv_stack(seed, 2, 1, 2)?;
    let s = net.upsampling();
    let extent = 7;
    let impulse = |col: usize| {
        Tensor3::from_fn(2, extent, extent, |c, y, x| {
            f64::from(u8::from((c, y, x) == (1, 3, col)))
        })
    };
    let (ga, gb) = (net.decode(&impulse(3))?, net.decode(&impulse(4))?);
    let margin = 2 * s;
    for y in margin..ga.height() - margin {
        for x in margin..ga.width() - margin - s {
            let d = (ga.get(0, y, x) - gb.get(0, y, x + s)).abs();
            ensure!(d <= 1e-9, "shifted response differs by {d:e} at ({y}, {x})");
        }
    }
    Ok(())
}

fn weight_format(seed: u64, corrupt: bool) -> Result<()> {
    let net = toy_synthesis(seed, 1)?;
    let mut bytes = save_weights(net.network());
    if corrupt {
        bytes[0] ^= 0xFF;
    }
    let back = load_weights(&bytes)?.into_synthesis()?;
    ensure!(
        save_weights(back.network()) == bytes,
        "weights do not round-trip byte-identically"
    );
    Ok(())
}

type Suite<'a> = Box<dyn FnOnce(&mut ChaCha8Rng) -> Result<()> + 'a>;

/// Runs every suite, printing one line each. Returns whether all passed.
pub fn run(args: &SelftestArgs) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let suites: Vec<(&str, Suite<'_>)> = vec![
        ("linear-oracle", Box::new(linear_oracle)),
        ("impulse-duality", Box::new(|_| impulse_duality())),
        ("partition-identity", Box::new(partitions)),
        ("adjoint", Box::new(adjoint)),
        ("shift-equivariance", Box::new(|_| shift_equivariance(args.seed))),
        (
            "weight-format",
            Box::new(|_| weight_format(args.seed, args.inject_corrupt_weights)),
        ),
    ];
    let mut first_failure = None;
    let total = suites.len();
    for (name, suite) in suites {
        match suite(&mut rng) {
            Ok(()) => println!("PASS {name}"),
            Err(e) => {
                println!("FAIL {name}: {e:#}");
                first_failure.get_or_insert(name);
            }
        }
    }
    match first_failure {
        None => {
            println!("selftest: {total} of {total} suites passed (seed {})", args.seed);
            Ok(true)
        }
        Some(name) => {
            eprintln!("selftest failed: first failing suite is {name}");
            Ok(false)
        }
    }
}
