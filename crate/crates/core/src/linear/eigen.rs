use super::OrthogonalTransform;
use crate::error::{Error, Result};

const OFF_DIAGONAL_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a real symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Row-major; row `i` is the unit eigenvector for `values[i]`.
    pub vectors: Vec<f64>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric `dim × dim` matrix.
///
/// Sweeps until the off-diagonal Frobenius norm drops to 1e-12 (relative to
/// the matrix norm once that exceeds one). Eigenvectors are sign-normalised
/// so their first non-negligible component is positive.
pub fn symmetric_eigen(matrix: &[f64], dim: usize) -> Result<SymmetricEigen> {
    if matrix.len() != dim * dim {
        return Err(Error::invalid("matrix length does not match dimension"));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("symmetric matrix"));
    }
    for i in 0..dim {
        for j in 0..i {
            let (a, b) = (matrix[i * dim + j], matrix[j * dim + i]);
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::invalid("matrix is not symmetric"));
            }
        }
    }

    let mut a = matrix.to_vec();
    let mut v = vec![0.0; dim * dim];
    for i in 0..dim {
        v[i * dim + i] = 1.0;
    }
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = OFF_DIAGONAL_TOLERANCE * norm.max(1.0);

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                if i != j {
                    s += a[i * dim + j] * a[i * dim + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Degenerate("Jacobi iteration did not converge".into()));
        }
        sweeps += 1;
        for p in 0..dim {
            for q in p + 1..dim {
                let apq = a[p * dim + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * dim + p];
                let aqq = a[q * dim + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for r in 0..dim {
                    let arp = a[r * dim + p];
                    let arq = a[r * dim + q];
                    a[r * dim + p] = c * arp - s * arq;
                    a[r * dim + q] = s * arp + c * arq;
                }
                for r in 0..dim {
                    let apr = a[p * dim + r];
                    let aqr = a[q * dim + r];
                    a[p * dim + r] = c * apr - s * aqr;
                    a[q * dim + r] = s * apr + c * aqr;
                }
                a[p * dim + q] = 0.0;
                a[q * dim + p] = 0.0;

                for r in 0..dim {
                    let vrp = v[r * dim + p];
                    let vrq = v[r * dim + q];
                    v[r * dim + p] = c * vrp - s * vrq;
                    v[r * dim + q] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..dim).collect();
    // Stable sort keeps ties in index order.
    order.sort_by(|&i, &j| a[j * dim + j].total_cmp(&a[i * dim + i]));

    let mut values = Vec::with_capacity(dim);
    let mut vectors = Vec::with_capacity(dim * dim);
    for &k in &order {
        values.push(a[k * dim + k]);
        let mut col: Vec<f64> = (0..dim).map(|r| v[r * dim + k]).collect();
        normalize_sign(&mut col);
        vectors.extend(col);
    }
    Ok(SymmetricEigen { values, vectors })
}

fn normalize_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// A KLT fitted on training patches.
#[derive(Debug, Clone)]
pub struct Klt {
    pub transform: OrthogonalTransform,
    /// Covariance eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    pub mean: Vec<f64>,
}

/// Eigenvectors of the mean-removed sample covariance of `patches`.
pub fn klt_decompose<P: AsRef<[f64]>>(patches: &[P]) -> Result<Klt> {
    let Some(first) = patches.first() else {
        return Err(Error::invalid("no patches"));
    };
    let d = first.as_ref().len();
    if d == 0 {
        return Err(Error::invalid("patches are empty vectors"));
    }
    if patches.iter().any(|p| p.as_ref().len() != d) {
        return Err(Error::invalid("patches have inconsistent lengths"));
    }
    if patches.len() < d {
        return Err(Error::invalid(format!(
            "KLT of dimension {d} needs at least {d} patches, got {}",
            patches.len()
        )));
    }

    let n = patches.len() as f64;
    let mut mean = vec![0.0; d];
    for p in patches {
        for (m, v) in mean.iter_mut().zip(p.as_ref()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for p in patches {
        for ((c, v), m) in centered.iter_mut().zip(p.as_ref()).zip(&mean) {
            *c = v - m;
        }
        for i in 0..d {
            let ci = centered[i];
            for j in i..d {
                cov[i * d + j] += ci * centered[j];
            }
        }
    }
    for i in 0..d {
        for j in i..d {
            let v = cov[i * d + j] / n;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("patch covariance"));
    }
    let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
    let scale = mean.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    if trace <= f64::EPSILON * scale * scale {
        return Err(Error::Degenerate("patch covariance is zero".into()));
    }

    let eig = symmetric_eigen(&cov, d)?;
    Ok(Klt {
        transform: OrthogonalTransform::new(format!("klt{d}"), d, eig.vectors)?,
        eigenvalues: eig.values,
        mean,
    })
}

pub fn klt_from_patches<P: AsRef<[f64]>>(patches: &[P]) -> Result<OrthogonalTransform> {
    klt_decompose(patches).map(|k| k.transform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn diagonal_matrix_is_already_solved() {
        let e = symmetric_eigen(&[1.0, 0.0, 0.0, 3.0], 2).unwrap();
        assert_eq!(e.values, [3.0, 1.0]);
        assert_eq!(e.vectors, [0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2, 1], [1, 2]] has eigenpairs 3 -> (1, 1)/√2, 1 -> (1, -1)/√2.
        let e = symmetric_eigen(&[2.0, 1.0, 1.0, 2.0], 2).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.values[0] - 3.0).abs() < 1e-12 && (e.values[1] - 1.0).abs() < 1e-12);
        let expected = [r, r, r, -r];
        for (a, b) in e.vectors.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        assert!(symmetric_eigen(&[1.0, 2.0, 0.0, 1.0], 2).is_err());
    }

    #[test]
    fn isotropic_samples_give_an_orthonormal_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let patches: Vec<Vec<f64>> = (0..2000)
            .map(|_| (0..6).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let klt = klt_decompose(&patches).unwrap();
        assert!(klt.transform.orthonormality_error() <= 1e-9);
        assert!(klt.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        // Roughly equal spectrum.
        assert!(klt.eigenvalues[0] / klt.eigenvalues[5] < 1.5);
        for i in 0..6 {
            let row = klt.transform.row(i);
            let first = row.iter().find(|v| v.abs() > 1e-12).unwrap();
            assert!(*first > 0.0);
        }
    }

    #[test]
    fn degenerate_patches_error() {
        let same = vec![vec![0.3, 0.3, 0.3]; 10];
        assert!(matches!(klt_from_patches(&same), Err(Error::Degenerate(_))));
        let few = vec![vec![1.0, 2.0, 3.0]; 2];
        assert!(klt_from_patches(&few).is_err());
        let bad = vec![vec![1.0, f64::INFINITY], vec![0.0, 1.0]];
        assert!(klt_from_patches(&bad).is_err());
    }

    /// On centred training data the leading k KLT rows reconstruct at least
    /// as well as any other k rows of the same matrix.
    #[test]
    fn top_k_klt_rows_are_optimal_among_subsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mix = [
            [1.0, 0.4, 0.1, 0.0],
            [0.4, 1.0, 0.3, 0.2],
            [0.0, 0.3, 0.7, 0.1],
            [0.2, 0.0, 0.1, 0.3],
        ];
        let patches: Vec<Vec<f64>> = (0..500)
            .map(|_| {
                let g: Vec<f64> = (0..4).map(|_| StandardNormal.sample(&mut rng)).collect();
                (0..4).map(|i| (0..4).map(|j| mix[i][j] * g[j]).sum()).collect()
            })
            .collect();
        let klt = klt_decompose(&patches).unwrap();
        let centered: Vec<Vec<f64>> = patches
            .iter()
            .map(|p| p.iter().zip(&klt.mean).map(|(v, m)| v - m).collect())
            .collect();
        let error_with = |rows: &[usize]| -> f64 {
            centered
                .iter()
                .map(|x| {
                    let w = klt.transform.forward(x).unwrap();
                    let kept: Vec<f64> = (0..4).map(|i| if rows.contains(&i) { w[i] } else { 0.0 }).collect();
                    let r = klt.transform.inverse(&kept).unwrap();
                    r.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                })
                .sum()
        };
        for k in 1..4 {
            let top: Vec<usize> = (0..k).collect();
            let best = error_with(&top);
            for mask in 0u32..16 {
                if mask.count_ones() as usize != k {
                    continue;
                }
                let subset: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
                assert!(best <= error_with(&subset) + 1e-9, "k={k} subset {subset:?}");
            }
        }
    }
}
