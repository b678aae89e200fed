use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Row, SparseRow, Vector};

use super::data::Dataset;

/// `W x_true = b` with `W = GGᵀ + 10⁻² I`, `Gᵢⱼ ~ N(0, 1/d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdSystem {
    pub w: Matrix,
    pub b: Vector,
    pub x_true: Vector,
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize, std: f64) -> Vector {
    Vector::from_fn(d, |_, _| std * rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, std: f64) -> Matrix {
    // row-major fill so the draw order does not depend on storage layout
    let mut a = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            a[(i, j)] = std * rng.sample::<f64, _>(StandardNormal);
        }
    }
    a
}

pub fn gen_random_pd_system(d: usize, seed: u64) -> Result<PdSystem> {
    if d == 0 {
        return Err(Error::arg("dimension must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let g = gaussian_matrix(&mut rng, d, d, 1.0 / (d as f64).sqrt());
    let mut w = &g * g.transpose();
    for i in 0..d {
        w[(i, i)] += 1e-2;
    }
    let w = (&w + w.transpose()) * 0.5;
    let x_true = gaussian_vector(&mut rng, d, 1.0);
    let b = &w * &x_true;
    Ok(PdSystem { w, b, x_true })
}

/// Gaussian features with labels `aᵀx₀ + noise·ε`.
pub fn gaussian_dataset(rows: usize, dim: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if dim == 0 {
        return Err(Error::arg("dimension must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let a = gaussian_matrix(&mut rng, rows, dim, 1.0 / (dim as f64).sqrt());
    let x0 = gaussian_vector(&mut rng, dim, 1.0);
    let eps = gaussian_vector(&mut rng, rows, 1.0);
    let b = &a * &x0 + eps * noise;
    Dataset::from_dense(&a, &b)
}

pub const A9A_DIM: usize = 123;
const A9A_BLOCKS: usize = 14;

/// Desk-scale a9a stand-in: 123 binary features in 14 categorical blocks, one active per block, labels ±1.
pub fn a9a_standin(rows: usize, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed);
    let mut sizes = vec![A9A_DIM / A9A_BLOCKS; A9A_BLOCKS];
    for s in sizes.iter_mut().take(A9A_DIM % A9A_BLOCKS) {
        *s += 1;
    }
    let hidden = gaussian_vector(&mut rng, A9A_DIM, 1.0);
    let noise = Normal::new(0.0, 0.5).expect("valid normal");
    let mut out_rows = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut idx = Vec::with_capacity(A9A_BLOCKS);
        let mut start = 0;
        for &s in &sizes {
            idx.push(start + rng.random_range(0..s));
            start += s;
        }
        let score: f64 = idx.iter().map(|&i| hidden[i]).sum::<f64>() / (A9A_BLOCKS as f64).sqrt();
        labels.push(if score + noise.sample(&mut rng) >= 0.0 { 1.0 } else { -1.0 });
        out_rows.push(Row::Sparse(SparseRow::new(A9A_DIM, idx, vec![1.0; A9A_BLOCKS])?));
    }
    Dataset::new(out_rows, labels, A9A_DIM)
}

/// Desk-scale Gisette stand-in: dense nonnegative features in `[0, 1]` (about half zero), labels ±1.
pub fn gisette_standin(rows: usize, dim: usize, seed: u64) -> Result<Dataset> {
    if dim == 0 {
        return Err(Error::arg("dimension must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let hidden = gaussian_vector(&mut rng, dim, 1.0);
    let mut a = Matrix::zeros(rows, dim);
    for i in 0..rows {
        for j in 0..dim {
            if rng.random::<f64>() < 0.5 {
                a[(i, j)] = rng.random::<f64>();
            }
        }
    }
    let centered = a.map(|v| v - 0.25);
    let scores = &centered * &hidden;
    let b = scores.map(|s| if s >= 0.0 { 1.0 } else { -1.0 });
    Dataset::from_dense(&a, &b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sym_eigenvalues;

    #[test]
    fn pd_system_properties() {
        let s = gen_random_pd_system(30, 1).unwrap();
        assert_eq!(s.w, s.w.transpose());
        assert!(sym_eigenvalues(&s.w)[0] >= 1e-2 * (1.0 - 1e-10));
        assert_eq!(&s.w * &s.x_true - &s.b, Vector::zeros(30));
        assert_eq!(gen_random_pd_system(30, 1).unwrap(), s);
        assert_ne!(gen_random_pd_system(30, 2).unwrap(), s);
    }

    #[test]
    fn a9a_shape() {
        let d = a9a_standin(40, 3).unwrap();
        assert_eq!(d.dim(), 123);
        for r in d.rows() {
            assert_eq!(r.norm_squared(), 14.0);
        }
        assert!(d.labels().iter().all(|&b| b == 1.0 || b == -1.0));
        assert_eq!(a9a_standin(40, 3).unwrap(), d);
    }
}
