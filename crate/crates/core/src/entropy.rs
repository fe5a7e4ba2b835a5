//! Empirical per-channel rate estimation from quantized latents.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::Encoder;
use crate::error::{Error, Result};
use crate::nn::quantize;
use crate::tensor::Tensor3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRate {
    pub channel: usize,
    /// Empirical Shannon entropy of the quantized symbols, bits per coefficient.
    pub entropy_bits: f64,
    /// `entropy_bits / s²`.
    pub bpp: f64,
    /// Position in descending-rate order.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRateReport {
    pub channels: Vec<ChannelRate>,
    pub total_bpp: f64,
    /// Channel indices in descending-rate order.
    pub order: Vec<usize>,
    pub downsampling: usize,
}

impl ChannelRateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: ChannelRateReport = serde_json::from_str(text)?;
        report.validate()?;
        Ok(report)
    }

    fn validate(&self) -> Result<()> {
        let n = self.channels.len();
        if self.order.len() != n {
            return Err(Error::invalid("rate order length differs from channel count"));
        }
        let mut seen = vec![false; n];
        for &c in &self.order {
            if c >= n || std::mem::replace(&mut seen[c], true) {
                return Err(Error::invalid("rate order is not a permutation"));
            }
        }
        Ok(())
    }
}

type Histogram = BTreeMap<i64, u64>;

/// Plug-in entropy `−Σ p log₂ p` of a symbol histogram, in bits.
pub fn histogram_entropy(hist: &BTreeMap<i64, u64>) -> f64 {
    let total: u64 = hist.values().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h = hist
        .values()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum::<f64>();
    h.max(0.0)
}

/// Channels sorted by descending entropy, ties by ascending index.
pub fn rate_order(entropies: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..entropies.len()).collect();
    order.sort_by(|&a, &b| entropies[b].total_cmp(&entropies[a]).then(a.cmp(&b)));
    order
}

fn histograms(z: &Tensor3) -> Vec<Histogram> {
    (0..z.channels())
        .map(|c| {
            let mut h = Histogram::new();
            for &v in z.channel(c) {
                *h.entry(v as i64).or_insert(0) += 1;
            }
            h
        })
        .collect()
}

fn merge(mut a: Vec<Histogram>, b: Vec<Histogram>) -> Vec<Histogram> {
    for (ha, hb) in a.iter_mut().zip(b) {
        for (k, v) in hb {
            *ha.entry(k).or_insert(0) += v;
        }
    }
    a
}

/// Rates from latents that are already available. Latents are quantized
/// here, so passing quantized values is harmless.
pub fn rates_from_latents(latents: &[Tensor3], downsampling: usize) -> Result<ChannelRateReport> {
    let first = latents
        .first()
        .ok_or_else(|| Error::invalid("rate estimation needs at least one image"))?;
    if downsampling == 0 {
        return Err(Error::invalid("downsampling factor must be positive"));
    }
    let channels = first.channels();
    if let Some(z) = latents.iter().find(|z| z.channels() != channels) {
        return Err(Error::invalid(format!(
            "latents disagree on channel count: {} vs {}",
            channels,
            z.channels()
        )));
    }
    let pooled = latents
        .par_iter()
        .map(|z| histograms(&quantize(z)))
        .reduce(|| vec![Histogram::new(); channels], merge);
    Ok(report_from_histograms(&pooled, downsampling))
}

fn report_from_histograms(hists: &[Histogram], s: usize) -> ChannelRateReport {
    let entropies: Vec<f64> = hists.iter().map(histogram_entropy).collect();
    let order = rate_order(&entropies);
    let mut ranks = vec![0; entropies.len()];
    for (rank, &c) in order.iter().enumerate() {
        ranks[c] = rank;
    }
    let area = (s * s) as f64;
    let channels: Vec<ChannelRate> = entropies
        .iter()
        .enumerate()
        .map(|(c, &h)| ChannelRate {
            channel: c,
            entropy_bits: h,
            bpp: h / area,
            rank: ranks[c],
        })
        .collect();
    ChannelRateReport {
        total_bpp: channels.iter().map(|c| c.bpp).sum(),
        channels,
        order,
        downsampling: s,
    }
}

/// Encodes every image (edge-padded to the encoder stride), quantizes,
/// and pools per-channel symbol histograms.
pub fn estimate_rates<E, T>(enc: &E, images: &[T]) -> Result<ChannelRateReport>
where
    E: Encoder + ?Sized,
    T: AsRef<Tensor3> + Sync,
{
    if images.is_empty() {
        return Err(Error::invalid("rate estimation needs at least one image"));
    }
    let s = enc.downsampling();
    let latents = images
        .par_iter()
        .map(|img| enc.encode(&img.as_ref().pad_edge_to_multiple(s)))
        .collect::<Result<Vec<_>>>()?;
    rates_from_latents(&latents, s)
}

/// The stored descending-rate permutation.
pub fn rank_channels(report: &ChannelRateReport) -> &[usize] {
    &report.order
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn hist(values: &[i64]) -> Histogram {
        let mut h = Histogram::new();
        for &v in values {
            *h.entry(v).or_insert(0) += 1;
        }
        h
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(histogram_entropy(&hist(&[3, 3, 3, 3])), 0.0);
        for k in 0..6u32 {
            let vals: Vec<i64> = (0..(1i64 << k)).flat_map(|v| [v, v, v]).collect();
            assert!((histogram_entropy(&hist(&vals)) - k as f64).abs() < 1e-9);
        }
        assert_eq!(histogram_entropy(&Histogram::new()), 0.0);
    }

    #[test]
    fn order_examples() {
        assert_eq!(rate_order(&[1.0, 3.0, 2.0]), vec![1, 2, 0]);
        assert_eq!(rate_order(&[0.5; 4]), vec![0, 1, 2, 3]);
        let rates = [0.2, 5.0, 1.0, 1.0];
        let order = rate_order(&rates);
        let sorted: Vec<f64> = order.iter().map(|&i| rates[i]).collect();
        assert_eq!(rate_order(&sorted), vec![0, 1, 2, 3]);
    }

    #[test]
    fn latent_report_and_json() {
        let z = Tensor3::from_fn(2, 2, 4, |c, y, x| if c == 0 { ((y * 4 + x) % 4) as f64 } else { 7.0 });
        let r = rates_from_latents(&[z], 2).unwrap();
        assert!((r.channels[0].entropy_bits - 2.0).abs() < 1e-12);
        assert_eq!(r.channels[1].entropy_bits, 0.0);
        assert!((r.channels[0].bpp - 0.5).abs() < 1e-12);
        assert_eq!(r.order, vec![0, 1]);
        assert_eq!(rank_channels(&r), &[0, 1]);
        let back = ChannelRateReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(rates_from_latents(&[], 1).is_err());
    }

    proptest! {
        #[test]
        fn relabeling_preserves_entropy(vals in prop::collection::vec(-5i64..5, 1..200), shift in -100i64..100) {
            let relabeled: Vec<i64> = vals.iter().map(|v| -3 * v + shift).collect();
            let a = histogram_entropy(&hist(&vals));
            let b = histogram_entropy(&hist(&relabeled));
            prop_assert!((a - b).abs() < 1e-12);
            let distinct = hist(&vals).len() as f64;
            prop_assert!(a >= 0.0 && a <= distinct.log2() + 1e-12);
        }

        #[test]
        fn duplication_preserves_entropy(vals in prop::collection::vec(-8i64..8, 1..100)) {
            let doubled: Vec<i64> = vals.iter().chain(&vals).copied().collect();
            prop_assert!((histogram_entropy(&hist(&vals)) - histogram_entropy(&hist(&doubled))).abs() < 1e-12);
        }
    }
}
