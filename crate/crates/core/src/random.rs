//! Seeded sampling helpers shared by certificates, property suites and tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::Vector;

/// Gaussian point in R^dim with standard deviation `scale` per coordinate.
pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> Vector {
    Vector::from_raw(
        (0..dim)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
}

/// Uniformly distributed unit vector.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vector {
    loop {
        let g = gaussian_vector(rng, dim, 1.0);
        let n = g.norm();
        if n > 1e-12 {
            return g.scaled(1.0 / n);
        }
    }
}

/// Random pairs; every fourth pair is a close pair so that local behaviour is
/// probed as well as the global one.
pub fn random_pairs<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    count: usize,
    scale: f64,
) -> Vec<(Vector, Vector)> {
    (0..count)
        .map(|i| {
            let x = gaussian_vector(rng, dim, scale);
            let y = if i % 4 == 3 {
                &x + &gaussian_vector(rng, dim, scale * 1e-3)
            } else {
                gaussian_vector(rng, dim, scale)
            };
            (x, y)
        })
        .collect()
}
