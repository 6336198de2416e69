use crate::Matrix;

/// Batch means of the two loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    /// Mean over samples of `(1/W) Σ (x_k - x̂_k)²`.
    pub mse: f64,
    /// Mean over samples of `Σ |h_j|`.
    pub l1: f64,
}

impl LossParts {
    pub fn total(&self, alpha: f64) -> f64 {
        self.mse + alpha * self.l1
    }
}

pub fn loss_parts(batch: &Matrix, output: &Matrix, latent: &Matrix) -> LossParts {
    let b = batch.rows();
    if b == 0 {
        return LossParts::default();
    }
    let w = batch.cols() as f64;
    let sq: f64 = batch.as_slice().iter().zip(output.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum();
    let l1: f64 = latent.as_slice().iter().map(|h| h.abs()).sum();
    LossParts { mse: sq / (w * b as f64), l1: l1 / b as f64 }
}

/// `mean_batch[ MSE(x, x̂) + alpha · Σ_j |h_j| ]`.
pub fn loss(batch: &Matrix, output: &Matrix, latent: &Matrix, alpha: f64) -> f64 {
    loss_parts(batch, output, latent).total(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let x = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        let y = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
        let h = Matrix::from_rows(&[[0.5, 0.2]]).unwrap();
        assert!((loss(&x, &y, &h, 1e-4) - 0.50007).abs() < 1e-15);
        assert_eq!(loss(&x, &y, &h, 0.0), 0.5);
        let z = Matrix::zeros(1, 2);
        assert_eq!(loss(&x, &x, &z, 0.3), 0.0);
    }
}
