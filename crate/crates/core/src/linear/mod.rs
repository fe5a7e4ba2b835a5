//! Classical orthonormal transforms (DCT-II, Walsh-Hadamard, Haar, KLT).
//!
//! They serve two purposes: reference bases for similarity scoring, and
//! exactly linear decoders whose separability and impulse responses are
//! known in closed form.

mod block;
mod eigen;

use serde::Serialize;

use crate::error::{Error, Result};

pub use block::block_code_image;
pub use eigen::{klt_decompose, klt_from_patches, symmetric_eigen, Klt, SymmetricEigen};

/// Maximum deviation of `H·Hᵀ` from the identity accepted at construction.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-9;

/// A `dim × dim` orthonormal matrix whose rows are the basis vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthogonalTransform {
    name: String,
    dim: usize,
    matrix: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WhtOrdering {
    /// Sylvester (Hadamard) order.
    Natural,
    /// Rows sorted by number of sign changes.
    #[default]
    Sequency,
}

impl OrthogonalTransform {
    /// Wraps a row-major matrix, checking `‖H·Hᵀ − I‖_max ≤ 1e-9`.
    pub fn new(name: impl Into<String>, dim: usize, matrix: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if dim == 0 {
            return Err(Error::invalid("transform dimension must be at least 1"));
        }
        if matrix.len() != dim * dim {
            return Err(Error::invalid(format!(
                "transform `{name}` needs {} entries, got {}",
                dim * dim,
                matrix.len()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("transform matrix"));
        }
        let t = OrthogonalTransform { name, dim, matrix };
        let deviation = t.orthonormality_error();
        if deviation > ORTHONORMAL_TOLERANCE {
            return Err(Error::NotOrthonormal {
                name: t.name,
                deviation,
            });
        }
        Ok(t)
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = 1.0;
        }
        OrthogonalTransform::new(format!("identity{dim}"), dim, m)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.dim + col]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// `max |(H·Hᵀ − I)_{ij}|`.
    pub fn orthonormality_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// `w = H·x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok((0..self.dim)
            .map(|i| self.row(i).iter().zip(x).map(|(h, v)| h * v).sum())
            .collect())
    }

    /// `x = Hᵀ·w`, the inverse by orthonormality.
    pub fn inverse(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_len(w.len())?;
        let d = self.dim;
        let mut x = vec![0.0; d];
        for (i, &coef) in w.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            for (xj, h) in x.iter_mut().zip(self.row(i)) {
                *xj += coef * h;
            }
        }
        Ok(x)
    }

    /// Basis vector `i`: column `i` of `H⁻¹`, which is row `i` of `H`.
    pub fn linear_basis(&self, i: usize) -> Result<Vec<f64>> {
        if i >= self.dim {
            return Err(Error::IndexOutOfRange {
                what: "basis",
                index: i,
                len: self.dim,
            });
        }
        Ok(self.row(i).to_vec())
    }

    /// Kronecker product `self ⊗ other`. Row `u·n + v` reshaped row-major
    /// to `m × n` is the outer product of row `u` of `self` and row `v` of
    /// `other`.
    pub fn kron(&self, other: &OrthogonalTransform) -> Result<OrthogonalTransform> {
        let (m, n) = (self.dim, other.dim);
        let d = m * n;
        let mut out = vec![0.0; d * d];
        for u in 0..m {
            for v in 0..n {
                let row = u * n + v;
                for x in 0..m {
                    for y in 0..n {
                        out[row * d + x * n + y] = self.at(u, x) * other.at(v, y);
                    }
                }
            }
        }
        OrthogonalTransform::new(format!("{}x{}", self.name, other.name), d, out)
    }

    /// Separable 2-D version of a 1-D transform (`self ⊗ self`).
    pub fn separable_2d(&self) -> Result<OrthogonalTransform> {
        self.kron(self)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::invalid(format!(
                "vector length {len} does not match transform dimension {}",
                self.dim
            )));
        }
        Ok(())
    }
}

/// Orthonormal DCT-II: `H[u][x] = c(u)·cos(π(2x+1)u / 2n)`.
pub fn dct_matrix(n: usize) -> Result<OrthogonalTransform> {
    if n == 0 {
        return Err(Error::invalid("DCT size must be at least 1"));
    }
    let nf = n as f64;
    let mut m = Vec::with_capacity(n * n);
    for u in 0..n {
        let c = if u == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for x in 0..n {
            let angle = std::f64::consts::PI * ((2 * x + 1) * u) as f64 / (2.0 * nf);
            m.push(c * angle.cos());
        }
    }
    OrthogonalTransform::new(format!("dct{n}"), n, m)
}

fn require_power_of_two(n: usize, what: &str) -> Result<()> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("{what} size must be a power of two, got {n}")));
    }
    Ok(())
}

/// Number of sign changes along a row.
pub fn sign_changes(row: &[f64]) -> usize {
    row.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count()
}

/// Sylvester Hadamard matrix scaled by `1/√n`.
pub fn wht_matrix(n: usize, ordering: WhtOrdering) -> Result<OrthogonalTransform> {
    require_power_of_two(n, "Walsh-Hadamard")?;
    let scale = 1.0 / (n as f64).sqrt();
    // Sylvester entry (i, j) is (-1)^popcount(i & j).
    let sylvester = |i: usize, j: usize| {
        if (i & j).count_ones().is_multiple_of(2) {
            scale
        } else {
            -scale
        }
    };
    let mut rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| sylvester(i, j)).collect()).collect();
    if ordering == WhtOrdering::Sequency {
        rows.sort_by_key(|r| sign_changes(r));
    }
    let label = match ordering {
        WhtOrdering::Natural => "natural",
        WhtOrdering::Sequency => "sequency",
    };
    OrthogonalTransform::new(format!("wht{n}-{label}"), n, rows.concat())
}

/// Orthonormal Haar matrix, built recursively:
/// `H_2n = [H_n ⊗ (1, 1); I_n ⊗ (1, −1)] / √2`.
pub fn haar_matrix(n: usize) -> Result<OrthogonalTransform> {
    require_power_of_two(n, "Haar")?;
    let mut h = vec![1.0];
    let mut size = 1;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    while size < n {
        let next = size * 2;
        let mut m = vec![0.0; next * next];
        for i in 0..size {
            for j in 0..size {
                let v = h[i * size + j] * r;
                m[i * next + 2 * j] = v;
                m[i * next + 2 * j + 1] = v;
            }
            m[(size + i) * next + 2 * i] = r;
            m[(size + i) * next + 2 * i + 1] = -r;
        }
        h = m;
        size = next;
    }
    OrthogonalTransform::new(format!("haar{n}"), n, h)
}

/// Separable 2-D basis images of a 1-D transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis2D {
    name: String,
    n: usize,
    images: Vec<Vec<f64>>,
}

impl Basis2D {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn block_size(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Image `(u, v)` as a row-major `n × n` slice.
    pub fn image(&self, u: usize, v: usize) -> &[f64] {
        &self.images[u * self.n + v]
    }

    /// All images in `(u, v)` row-major order.
    pub fn images(&self) -> &[Vec<f64>] {
        &self.images
    }
}

/// Image `(u, v)` is the outer product of rows `u` and `v`:
/// `img[x][y] = H[u][x]·H[v][y]`.
pub fn basis_2d(t: &OrthogonalTransform) -> Basis2D {
    let n = t.dim();
    let mut images = Vec::with_capacity(n * n);
    for u in 0..n {
        for v in 0..n {
            let mut img = Vec::with_capacity(n * n);
            for x in 0..n {
                for y in 0..n {
                    img.push(t.at(u, x) * t.at(v, y));
                }
            }
            images.push(img);
        }
    }
    Basis2D {
        name: t.name().to_string(),
        n,
        images,
    }
}
