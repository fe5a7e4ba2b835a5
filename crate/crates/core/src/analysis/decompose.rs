use rayon::prelude::*;

use super::decoder::{Decoder, OffsetFree};
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// Number of component decodes run in parallel before they are folded into
/// the running sum. Bounds peak memory on large latents.
const DECODE_BATCH: usize = 32;

/// `ẑ_{m,n}`: all zero except the column `z[:, m, n]`.
pub fn spatial_component(z: &Tensor3, m: usize, n: usize) -> Tensor3 {
    let mut out = z.zeros_like();
    for c in 0..z.channels() {
        out.set(c, m, n, z.get(c, m, n));
    }
    out
}

/// `z̃_i`: all zero except channel `i`.
pub fn channel_component(z: &Tensor3, i: usize) -> Tensor3 {
    let mut out = z.zeros_like();
    let plane = z.height() * z.width();
    out.data_mut()[i * plane..(i + 1) * plane].copy_from_slice(z.channel(i));
    out
}

/// One component per spatial site, in row-major `(m, n)` order. They sum to `z`.
pub fn spatial_components(z: &Tensor3) -> Vec<Tensor3> {
    let mut out = Vec::with_capacity(z.height() * z.width());
    for m in 0..z.height() {
        for n in 0..z.width() {
            out.push(spatial_component(z, m, n));
        }
    }
    out
}

/// One component per channel. They sum to `z`.
pub fn channel_components(z: &Tensor3) -> Vec<Tensor3> {
    (0..z.channels()).map(|i| channel_component(z, i)).collect()
}

/// `δ_i` with a 1×1 spatial extent: `amplitude` at channel `i`, zero elsewhere.
pub fn channel_impulse(channels: usize, i: usize, amplitude: f64) -> Result<Tensor3> {
    channel_impulse_with_extent(channels, i, amplitude, 1)
}

/// `δ_i` over an odd `extent × extent` grid with the impulse at the centre.
pub fn channel_impulse_with_extent(channels: usize, i: usize, amplitude: f64, extent: usize) -> Result<Tensor3> {
    if i >= channels {
        return Err(Error::IndexOutOfRange {
            what: "channel",
            index: i,
            len: channels,
        });
    }
    if amplitude == 0.0 || !amplitude.is_finite() {
        return Err(Error::invalid(format!(
            "impulse amplitude must be finite and nonzero, got {amplitude}"
        )));
    }
    if extent.is_multiple_of(2) {
        return Err(Error::invalid(format!("impulse extent must be odd, got {extent}")));
    }
    let mut delta = Tensor3::zeros(channels, extent, extent);
    delta.set(i, extent / 2, extent / 2, amplitude);
    Ok(delta)
}

/// Sums `count` tensors produced by `term(k)` with a fixed pairwise tree
/// over the index order. Terms are produced in parallel batches; the tree
/// shape depends only on `count`, so the result is independent of the
/// thread count.
pub(crate) fn tree_sum<F>(count: usize, term: F) -> Result<Tensor3>
where
    F: Fn(usize) -> Result<Tensor3> + Sync,
{
    if count == 0 {
        return Err(Error::invalid("nothing to sum"));
    }
    // Binary-counter stack: entry (level, partial sum of 2^level terms).
    let mut stack: Vec<(u32, Tensor3)> = Vec::new();
    let mut start = 0;
    while start < count {
        let end = (start + DECODE_BATCH).min(count);
        let batch: Vec<Tensor3> = (start..end).into_par_iter().map(&term).collect::<Result<_>>()?;
        for t in batch {
            let mut item = (0u32, t);
            while let Some((level, _)) = stack.last() {
                if *level != item.0 {
                    break;
                }
                let (level, mut left) = stack.pop().unwrap();
                left.add_assign(&item.1)?;
                item = (level + 1, left);
            }
            stack.push(item);
        }
        start = end;
    }
    let (_, mut acc) = stack.pop().unwrap();
    while let Some((_, mut left)) = stack.pop() {
        left.add_assign(&acc)?;
        acc = left;
    }
    Ok(acc)
}

/// `Σ_{m,n} g′(ẑ_{m,n})`.
pub fn aggregate_spatial<D: Decoder + ?Sized>(dec: &OffsetFree<'_, D>, z: &Tensor3) -> Result<Tensor3> {
    let w = z.width();
    tree_sum(z.height() * w, |k| dec.decode(&spatial_component(z, k / w, k % w)))
}

/// `Σ_i g′(z̃_i)`.
pub fn aggregate_channel<D: Decoder + ?Sized>(dec: &OffsetFree<'_, D>, z: &Tensor3) -> Result<Tensor3> {
    tree_sum(z.channels(), |i| dec.decode(&channel_component(z, i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sum_all(parts: &[Tensor3]) -> Tensor3 {
        let mut acc = parts[0].zeros_like();
        for p in parts {
            acc.add_assign(p).unwrap();
        }
        acc
    }

    #[test]
    fn single_site_and_single_channel() {
        let z = Tensor3::from_fn(3, 1, 1, |c, _, _| c as f64 + 0.5);
        assert_eq!(spatial_components(&z), vec![z.clone()]);
        let z1 = Tensor3::from_fn(1, 2, 3, |_, y, x| (y * 3 + x) as f64);
        assert_eq!(channel_components(&z1), vec![z1.clone()]);
        let zero = Tensor3::zeros(4, 2, 2);
        assert!(channel_components(&zero).iter().all(|c| c.count_nonzero() == 0));
    }

    #[test]
    fn spatial_component_has_one_column() {
        let z = Tensor3::from_fn(3, 4, 5, |c, y, x| 1.0 + (c * 20 + y * 5 + x) as f64);
        for comp in spatial_components(&z) {
            assert_eq!(comp.count_nonzero(), 3);
        }
    }

    #[test]
    fn impulse_examples() {
        let d = channel_impulse(3, 1, 2.0).unwrap();
        assert_eq!(d.data(), &[0.0, 2.0, 0.0]);
        let wide = channel_impulse_with_extent(2, 0, 1.5, 3).unwrap();
        assert_eq!(wide.count_nonzero(), 1);
        assert_eq!(wide.get(0, 1, 1), 1.5);
        assert!(channel_impulse(3, 3, 1.0).is_err());
        assert!(channel_impulse(3, 0, 0.0).is_err());
        assert!(channel_impulse_with_extent(3, 0, 1.0, 2).is_err());

        let z = Tensor3::new(3, 1, 1, vec![0.25, -1.0, 4.0]).unwrap();
        let parts: Vec<Tensor3> = (0..3).map(|i| channel_impulse(3, i, z.get(i, 0, 0)).unwrap()).collect();
        assert_eq!(sum_all(&parts), z);
    }

    #[test]
    fn tree_sum_matches_sequential_on_integers() {
        for count in [1, 2, 3, 7, 32, 33, 100] {
            let got = tree_sum(count, |k| Ok(Tensor3::from_fn(1, 1, 2, |_, _, x| (k * 2 + x) as f64))).unwrap();
            let n = count as f64;
            assert_eq!(got.data(), &[n * (n - 1.0), n * n]);
        }
        assert!(tree_sum(0, |_| Ok(Tensor3::zeros(1, 1, 1))).is_err());
    }

    proptest! {
        #[test]
        fn partitions_sum_to_z(c in 1usize..5, h in 1usize..6, w in 1usize..6, seed in any::<u64>()) {
            let mut s = seed;
            let z = Tensor3::from_fn(c, h, w, |_, _, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 11) as f64 / (1u64 << 53) as f64 * 20.0 - 10.0
            });
            prop_assert_eq!(sum_all(&spatial_components(&z)), z.clone());
            prop_assert_eq!(sum_all(&channel_components(&z)), z);
        }
    }
}
