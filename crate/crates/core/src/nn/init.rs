use rand::Rng;

use crate::{math, Matrix};

/// Glorot/Xavier uniform weights on `[-L, L]`, `L = sqrt(6 / (fan_in + fan_out))`.
pub fn init_xavier<R: Rng + ?Sized>(fan_in: usize, fan_out: usize, rng: &mut R) -> Matrix {
    let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
    let mut w = Matrix::zeros(fan_in, fan_out);
    for v in w.as_mut_slice() {
        *v = rng.gen_range(-limit..=limit);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let limit = (6.0f64 / 52.0).sqrt();
        assert!((limit - 0.3397).abs() < 1e-4);
        let mut max_seen: f64 = 0.0;
        for _ in 0..152 {
            let w = init_xavier(30, 22, &mut rng);
            for &v in w.as_slice() {
                assert!(v.abs() <= limit);
                max_seen = max_seen.max(v.abs());
            }
        }
        // ~10^5 draws should come close to the bound
        assert!(max_seen > 0.99 * limit);

        let w = init_xavier(1, 5, &mut rng);
        assert!(w.as_slice().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn seeded() {
        let a = init_xavier(30, 22, &mut ChaCha8Rng::seed_from_u64(9));
        let b = init_xavier(30, 22, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }
}
