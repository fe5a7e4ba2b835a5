use super::OrthogonalTransform;
use crate::error::{Error, Result};
use crate::tensor::{ImagePlane, Tensor3};

/// Block transform coding with basis restriction.
///
/// Each `block × block` tile of every channel is transformed, all but the
/// `keep` largest-magnitude coefficients are zeroed, and the tile is
/// inverted. A transform of dimension `block` is applied separably (rows,
/// then columns); one of dimension `block²` is applied to the row-major
/// flattened tile. Images that do not tile evenly are edge-padded and the
/// result is cropped back to the input size.
pub fn block_code_image(t: &OrthogonalTransform, img: &ImagePlane, block: usize, keep: usize) -> Result<ImagePlane> {
    if block == 0 {
        return Err(Error::invalid("block size must be positive"));
    }
    let d = block * block;
    let separable = if t.dim() == block {
        true
    } else if t.dim() == d {
        false
    } else {
        return Err(Error::invalid(format!(
            "transform dimension {} fits neither block size {block} nor {d}",
            t.dim()
        )));
    };
    if keep > d {
        return Err(Error::invalid(format!("cannot keep {keep} of {d} coefficients")));
    }

    let padded = img.pad_edge_to_multiple(block);
    let (h, w) = (padded.height(), padded.width());
    let mut out = padded.clone();
    let mut tile = vec![0.0; d];
    for c in 0..padded.channels() {
        for by in (0..h).step_by(block) {
            for bx in (0..w).step_by(block) {
                for y in 0..block {
                    for x in 0..block {
                        tile[y * block + x] = padded.get(c, by + y, bx + x);
                    }
                }
                let mut coef = if separable {
                    separable_forward(t, &tile, block)?
                } else {
                    t.forward(&tile)?
                };
                restrict(&mut coef, keep);
                let rec = if separable {
                    separable_inverse(t, &coef, block)?
                } else {
                    t.inverse(&coef)?
                };
                for y in 0..block {
                    for x in 0..block {
                        out.set(c, by + y, bx + x, rec[y * block + x]);
                    }
                }
            }
        }
    }

    let (oh, ow) = (img.height(), img.width());
    let cropped = Tensor3::from_fn(img.channels(), oh, ow, |c, y, x| out.get(c, y, x));
    ImagePlane::new(cropped)
}

/// Zeroes all but the `keep` largest magnitudes; ties keep the lower index.
fn restrict(coef: &mut [f64], keep: usize) {
    let mut order: Vec<usize> = (0..coef.len()).collect();
    order.sort_by(|&a, &b| coef[b].abs().total_cmp(&coef[a].abs()));
    for &i in &order[keep..] {
        coef[i] = 0.0;
    }
}

fn separable_forward(t: &OrthogonalTransform, tile: &[f64], n: usize) -> Result<Vec<f64>> {
    apply_2d(tile, n, |v| t.forward(v))
}

fn separable_inverse(t: &OrthogonalTransform, coef: &[f64], n: usize) -> Result<Vec<f64>> {
    apply_2d(coef, n, |v| t.inverse(v))
}

fn apply_2d(tile: &[f64], n: usize, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
    let mut tmp = vec![0.0; n * n];
    for y in 0..n {
        let row = f(&tile[y * n..(y + 1) * n])?;
        tmp[y * n..(y + 1) * n].copy_from_slice(&row);
    }
    let mut out = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for x in 0..n {
        for y in 0..n {
            col[y] = tmp[y * n + x];
        }
        let res = f(&col)?;
        for y in 0..n {
            out[y * n + x] = res[y];
        }
    }
    Ok(out)
}
