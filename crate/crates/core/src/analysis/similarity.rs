use serde::{Deserialize, Serialize};

use super::assignment::max_weight_assignment;
use super::basis::BasisSet;
use crate::error::{Error, Result};
use crate::linear::Basis2D;
use crate::tensor::{ImagePlane, Tensor3};

/// Relative norm below which a mean-removed image counts as constant.
const CONSTANT_TOLERANCE: f64 = 1e-9;

pub enum SimilarityReference<'a> {
    Basis2D(&'a Basis2D),
    Set(&'a BasisSet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub candidate: usize,
    pub reference: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityReport {
    /// Mean `|cos|` over the optimal one-to-one matching.
    pub mean_score: f64,
    pub pairs: Vec<MatchedPair>,
    pub candidate_count: usize,
    pub reference_count: usize,
    /// Reference images were resized to the candidate resolution.
    pub resampled: bool,
    /// Colour images were reduced to luma to match channel counts.
    pub luma_projection: bool,
}

/// `|cos|` between the mean-removed images `a` and `b`.
///
/// Two constant images score 1; a constant image against a non-constant
/// one scores 0.
pub fn abs_cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::invalid(format!(
            "cannot compare images of {} and {} elements",
            a.len(),
            b.len()
        )));
    }
    let centred = |x: &[f64]| -> (Vec<f64>, bool) {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let constant = norm <= CONSTANT_TOLERANCE * scale || norm == 0.0;
        (c, constant)
    };
    let (ca, a_const) = centred(a);
    let (cb, b_const) = centred(b);
    match (a_const, b_const) {
        (true, true) => return Ok(1.0),
        (true, false) | (false, true) => return Ok(0.0),
        _ => {}
    }
    let dot: f64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
    let na = ca.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = cb.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok((dot / (na * nb)).abs().min(1.0))
}

/// Nearest-neighbour resize of every channel to `h × w`.
pub fn resize_nearest(t: &Tensor3, h: usize, w: usize) -> Tensor3 {
    let (sh, sw) = (t.height(), t.width());
    Tensor3::from_fn(t.channels(), h, w, |c, y, x| {
        let sy = ((y * sh) / h).min(sh - 1);
        let sx = ((x * sw) / w).min(sw - 1);
        t.get(c, sy, sx)
    })
}

fn luma(t: &Tensor3) -> Tensor3 {
    if t.channels() == 1 {
        return t.clone();
    }
    Tensor3::from_fn(1, t.height(), t.width(), |_, y, x| {
        (0..t.channels()).map(|c| t.get(c, y, x)).sum::<f64>() / t.channels() as f64
    })
}

fn reference_images(reference: &SimilarityReference<'_>) -> Result<Vec<Tensor3>> {
    match reference {
        SimilarityReference::Basis2D(b) => {
            let n = b.block_size();
            b.images()
                .iter()
                .map(|img| Tensor3::new(1, n, n, img.clone()))
                .collect()
        }
        SimilarityReference::Set(s) => Ok(s.entries().iter().map(|e| e.image.clone()).collect()),
    }
}

/// Scores every candidate basis image against every reference image and
/// reports the mean score of the best one-to-one matching.
pub fn basis_similarity(candidate: &BasisSet, reference: SimilarityReference<'_>) -> Result<SimilarityReport> {
    let mut cands: Vec<Tensor3> = candidate.entries().iter().map(|e| e.image.clone()).collect();
    let mut refs = reference_images(&reference)?;
    if refs.is_empty() {
        return Err(Error::invalid("reference basis is empty"));
    }
    let shape = cands[0].shape();
    if cands.iter().any(|c| c.shape() != shape) {
        return Err(Error::invalid("candidate basis images differ in shape"));
    }

    let luma_projection = cands.iter().chain(&refs).any(|t| t.channels() != shape.channels);
    if luma_projection {
        cands = cands.iter().map(luma).collect();
        refs = refs.iter().map(luma).collect();
    }
    let mut resampled = false;
    for r in refs.iter_mut() {
        if r.height() != shape.height || r.width() != shape.width {
            *r = resize_nearest(r, shape.height, shape.width);
            resampled = true;
        }
    }

    let (rows, cols) = (cands.len(), refs.len());
    let mut scores = vec![0.0; rows * cols];
    for (i, c) in cands.iter().enumerate() {
        for (j, r) in refs.iter().enumerate() {
            scores[i * cols + j] = abs_cosine(c.data(), r.data())?;
        }
    }
    let pairs: Vec<MatchedPair> = max_weight_assignment(&scores, rows, cols)
        .into_iter()
        .map(|(i, j)| MatchedPair {
            candidate: candidate.entries()[i].channel,
            reference: j,
            score: scores[i * cols + j],
        })
        .collect();
    let mean_score = pairs.iter().map(|p| p.score).sum::<f64>() / pairs.len() as f64;
    Ok(SimilarityReport {
        mean_score,
        pairs,
        candidate_count: rows,
        reference_count: cols,
        resampled,
        luma_projection,
    })
}

/// Wraps the images of a 2-D basis as a [`BasisSet`] with unit amplitudes.
pub fn basis_set_from_2d(b: &Basis2D) -> Result<BasisSet> {
    use super::basis::BasisEntry;
    let n = b.block_size();
    let entries = b
        .images()
        .iter()
        .enumerate()
        .map(|(i, img)| {
            Ok(BasisEntry {
                channel: i,
                amplitude: 1.0,
                image: Tensor3::new(1, n, n, img.clone())?,
                rank: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BasisSet::new(entries, false)
}

/// Basis set read back from a directory of images, one per channel, in
/// file-name order.
pub fn basis_set_from_images(images: Vec<ImagePlane>) -> Result<BasisSet> {
    use super::basis::BasisEntry;
    let entries = images
        .into_iter()
        .enumerate()
        .map(|(i, img)| BasisEntry {
            channel: i,
            amplitude: 1.0,
            image: img.into_tensor(),
            rank: None,
        })
        .collect();
    BasisSet::new(entries, false)
}
