//! Resolvent `T_r^f` of a monotone bifunction over a convex set: the unique
//! `z in C` with `f(z, y) + <y - z, z - x> / r >= 0` for every `y in C`.

use rand::Rng;
use thiserror::Error;

use crate::linalg::{check_dim, dot, solve_dense, LinalgError, Matrix, Solution, Vector};
use crate::operators::{Bifunction, BifunctionKind};
use crate::random::random_pairs;
use crate::sets::ConvexSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResolventError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("resolvent parameter r must be positive and finite, got {0}")]
    BadParameter(f64),
    #[error("invalid resolvent configuration: {0}")]
    BadConfig(&'static str),
    #[error("inner solver did not converge in {iterations} iterations (last change {last_change:e})")]
    NonConvergence { iterations: usize, last_change: f64 },
    #[error("regularized system is numerically singular")]
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventConfig {
    /// Successive-change tolerance, relative to `1 + |z|`.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Fraction of the largest contractive step.
    pub step_fraction: f64,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        ResolventConfig {
            inner_tol: 1e-12,
            inner_max_iter: 10_000,
            step_fraction: 0.9,
        }
    }
}

impl ResolventConfig {
    pub fn validate(&self) -> Result<(), ResolventError> {
        if !(self.inner_tol > 0.0 && self.inner_tol.is_finite()) {
            return Err(ResolventError::BadConfig("inner_tol must be positive"));
        }
        if self.inner_max_iter == 0 {
            return Err(ResolventError::BadConfig("inner_max_iter must be positive"));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(ResolventError::BadConfig("step_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// `T_r^f x`. The projected iteration starts from `P_C x`.
pub fn resolvent(
    f: &Bifunction,
    set: &ConvexSet,
    r: f64,
    x: &Vector,
    cfg: &ResolventConfig,
) -> Result<Vector, ResolventError> {
    resolvent_from(f, set, r, x, None, cfg)
}

/// As [`resolvent`], with an explicit starting point for the inner iteration.
pub fn resolvent_from(
    f: &Bifunction,
    set: &ConvexSet,
    r: f64,
    x: &Vector,
    start: Option<&Vector>,
    cfg: &ResolventConfig,
) -> Result<Vector, ResolventError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ResolventError::BadParameter(r));
    }
    cfg.validate()?;
    check_dim(f.dim(), x.dim())?;
    check_dim(set.dim(), x.dim())?;
    if let Some(s) = start {
        check_dim(x.dim(), s.dim())?;
    }

    let (matrix, shift) = match f.kind() {
        BifunctionKind::Zero { .. } => return Ok(set.project_unchecked(x)),
        BifunctionKind::LinearMonotone { p, q } => (p, q),
        BifunctionKind::ConvexDifference { g, h } => {
            if let Some(c) = isotropic_scale(g) {
                // prox of c/2 |.|^2 + <h, .> over C is a scaled projection
                let target = x.add_scaled(-r, h).scaled(1.0 / (1.0 + r * c));
                return Ok(set.project_unchecked(&target));
            }
            (g, h)
        }
    };

    if set.is_whole_space() {
        // (I + r M) z = x - r q
        let system = matrix.shifted_identity(r);
        let rhs = x.add_scaled(-r, shift);
        return match solve_dense(&system, rhs.as_slice()) {
            Solution::Unique(z) => Ok(Vector::from_raw(z)),
            Solution::Singular => Err(ResolventError::Singular),
        };
    }

    projected_iteration(f, matrix, set, r, x, start, cfg)
}

fn isotropic_scale(g: &Matrix) -> Option<f64> {
    let c = g.get(0, 0);
    let n = g.rows();
    let isotropic = (0..n).all(|i| (0..n).all(|j| g.get(i, j) == if i == j { c } else { 0.0 }));
    isotropic.then_some(c)
}

/// Fixed point of `z -> P_C(z - s (F z + (z - x) / r))` where `F` is the
/// bifunction's affine field. The regularized field is `1/r`-strongly
/// monotone, so a small enough step contracts.
fn projected_iteration(
    f: &Bifunction,
    matrix: &Matrix,
    set: &ConvexSet,
    r: f64,
    x: &Vector,
    start: Option<&Vector>,
    cfg: &ResolventConfig,
) -> Result<Vector, ResolventError> {
    let bound = f.linear_bound();
    let step = if matrix.is_symmetric(0.0) {
        cfg.step_fraction * 2.0 / (bound + 2.0 / r)
    } else {
        let strong = 1.0 / r + matrix.symmetric_part().symmetric_eigenvalues()[0].max(0.0);
        let lipschitz = bound + 1.0 / r;
        cfg.step_fraction * 2.0 * strong / (lipschitz * lipschitz)
    };

    let mut z = set.project_unchecked(start.unwrap_or(x));
    let mut last_change = f64::INFINITY;
    for _ in 0..cfg.inner_max_iter {
        let field = f.field(&z).add_scaled(1.0 / r, &(&z - x));
        let next = set.project_unchecked(&z.add_scaled(-step, &field));
        last_change = next.distance(&z);
        z = next;
        if last_change <= cfg.inner_tol * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    Err(ResolventError::NonConvergence {
        iterations: cfg.inner_max_iter,
        last_change,
    })
}

/// `min_y f(z, y) + <y - z, z - x> / r` over the sample points; non-negative
/// (up to roundoff) iff `z` solves the regularized problem on the sample.
pub fn regularized_gap(f: &Bifunction, r: f64, x: &Vector, z: &Vector, sample: &[Vector]) -> f64 {
    let zx = z - x;
    sample
        .iter()
        .map(|y| {
            let yz = y - z;
            f.value_unchecked(z, y) + dot(yz.as_slice(), zx.as_slice()) / r
        })
        .fold(f64::INFINITY, f64::min)
}

/// Outcome of a firm-nonexpansiveness check of `T_r^f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventReport {
    pub samples: usize,
    /// Largest `|Tx - Ty|^2 - <Tx - Ty, x - y>`.
    pub max_violation: f64,
}

/// Checks `|Tx - Ty|^2 <= <Tx - Ty, x - y>` on `sample_size` random pairs.
pub fn verify_resolvent_properties<R: Rng + ?Sized>(
    f: &Bifunction,
    set: &ConvexSet,
    r: f64,
    sample_size: usize,
    scale: f64,
    rng: &mut R,
    cfg: &ResolventConfig,
) -> Result<ResolventReport, ResolventError> {
    let pairs = random_pairs(rng, f.dim(), sample_size, scale);
    let mut worst = f64::NEG_INFINITY;
    for (x, y) in &pairs {
        let tx = resolvent(f, set, r, x, cfg)?;
        let ty = resolvent(f, set, r, y, cfg)?;
        let dt = &tx - &ty;
        let dx = x - y;
        worst = worst.max(dt.norm_sq() - dot(dt.as_slice(), dx.as_slice()));
    }
    Ok(ResolventReport {
        samples: sample_size,
        max_violation: if sample_size == 0 { 0.0 } else { worst },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn unit_box() -> ConvexSet {
        ConvexSet::new_box(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap()
    }

    fn identity_linear() -> Bifunction {
        Bifunction::linear(Matrix::identity(2), Vector::zeros(2)).unwrap()
    }

    #[test]
    fn zero_bifunction_resolvent_is_projection() {
        let f = Bifunction::zero(2).unwrap();
        let z = resolvent(&f, &unit_box(), 1.0, &v(&[2.0, 0.5]), &Default::default()).unwrap();
        assert_eq!(z, v(&[1.0, 0.5]));
    }

    #[test]
    fn linear_whole_space_closed_form() {
        let f = identity_linear();
        let z = resolvent(&f, &ConvexSet::whole_space(2), 1.0, &v(&[2.0, 2.0]), &Default::default())
            .unwrap();
        assert!(z.distance(&v(&[1.0, 1.0])) < 1e-15);
    }

    // Oracle: minimize the fixed-point residual of the projected equation
    // z = P_C(z - (2z - x)) over a dense grid of the box, then refine the grid
    // around the best cell.
    fn grid_oracle(x: &Vector) -> Vector {
        let set = unit_box();
        let residual = |a: f64, b: f64| {
            let z = v(&[a, b]);
            let field = &z.scaled(2.0) - x;
            set.project(&z.add_scaled(-0.25, &field)).unwrap().distance(&z)
        };
        let (mut ca, mut cb, mut half) = (0.5, 0.5, 0.5);
        for _ in 0..8 {
            let n = 200;
            let mut best = (f64::INFINITY, ca, cb);
            for i in 0..=n {
                for j in 0..=n {
                    let a = (ca - half + 2.0 * half * i as f64 / n as f64).clamp(0.0, 1.0);
                    let b = (cb - half + 2.0 * half * j as f64 / n as f64).clamp(0.0, 1.0);
                    let res = residual(a, b);
                    if res < best.0 {
                        best = (res, a, b);
                    }
                }
            }
            ca = best.1;
            cb = best.2;
            half *= 0.05;
        }
        v(&[ca, cb])
    }

    #[test]
    fn linear_on_box_matches_grid_oracle() {
        let x = v(&[4.0, 0.5]);
        let oracle = grid_oracle(&x);
        let z = resolvent(&identity_linear(), &unit_box(), 1.0, &x, &Default::default()).unwrap();
        assert!(z.distance(&oracle) <= 1e-6, "{z:?} vs {oracle:?}");
        assert!(z.distance(&v(&[1.0, 0.25])) <= 1e-10);
    }

    #[test]
    fn convex_difference_prox() {
        // g = 1/2 |.|^2: resolvent is P_C(x / (1 + r))
        let f = Bifunction::convex_difference(Matrix::identity(2), Vector::zeros(2)).unwrap();
        let z = resolvent(&f, &unit_box(), 1.0, &v(&[4.0, 0.5]), &Default::default()).unwrap();
        assert_eq!(z, v(&[1.0, 0.25]));
        // anisotropic G goes through the projected iteration
        let g = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let f = Bifunction::convex_difference(g, v(&[0.1, -0.2])).unwrap();
        let x = v(&[3.0, -1.0]);
        let z = resolvent(&f, &unit_box(), 0.7, &x, &Default::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sample = unit_box().sample(&mut rng, 64, 1.0);
        assert!(regularized_gap(&f, 0.7, &x, &z, &sample) >= -1e-8);
    }

    #[test]
    fn resolvent_inequality_on_sample() {
        let p = Matrix::from_rows(&[vec![1.0, 2.0], vec![-2.0, 0.5]]).unwrap();
        let f = Bifunction::linear(p, v(&[0.3, 0.1])).unwrap();
        let set = ConvexSet::new_ball(v(&[0.2, -0.1]), 0.8).unwrap();
        let x = v(&[2.0, 1.5]);
        let z = resolvent(&f, &set, 2.0, &x, &Default::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sample = set.sample(&mut rng, 64, 1.0);
        assert!(regularized_gap(&f, 2.0, &x, &z, &sample) >= -1e-8);
    }

    #[test]
    fn single_valued_from_different_starts() {
        let p = Matrix::from_rows(&[vec![3.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let f = Bifunction::linear(p, v(&[-1.0, 0.5])).unwrap();
        let x = v(&[0.3, 2.0]);
        let cfg = ResolventConfig::default();
        let a = resolvent_from(&f, &unit_box(), 1.5, &x, Some(&v(&[0.0, 0.0])), &cfg).unwrap();
        let b = resolvent_from(&f, &unit_box(), 1.5, &x, Some(&v(&[1.0, 1.0])), &cfg).unwrap();
        assert!(a.distance(&b) <= 1e-8);
    }

    #[test]
    fn fixed_point_at_equilibrium() {
        // EP(f) for f(x,y) = <x - c, y - x> on the box is {P_C c}
        let c = v(&[0.25, 2.0]);
        let f = Bifunction::linear(Matrix::identity(2), -&c).unwrap();
        let u = v(&[0.25, 1.0]);
        for r in [0.1, 1.0, 10.0] {
            let z = resolvent(&f, &unit_box(), r, &u, &Default::default()).unwrap();
            assert!(z.distance(&u) <= 1e-8);
        }
    }

    #[test]
    fn firm_nonexpansiveness_of_half_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let report = verify_resolvent_properties(
            &identity_linear(),
            &ConvexSet::whole_space(2),
            1.0,
            200,
            5.0,
            &mut rng,
            &Default::default(),
        )
        .unwrap();
        assert!(report.max_violation <= 1e-8);
        // T = I/2: <Tx - Ty, x - y> = 2 |Tx - Ty|^2 exactly
        let (x, y) = (v(&[1.0, -2.0]), v(&[0.5, 3.0]));
        let cfg = ResolventConfig::default();
        let whole = ConvexSet::whole_space(2);
        let dt = &resolvent(&identity_linear(), &whole, 1.0, &x, &cfg).unwrap()
            - &resolvent(&identity_linear(), &whole, 1.0, &y, &cfg).unwrap();
        let dx = &x - &y;
        assert!((dot(dt.as_slice(), dx.as_slice()) - 2.0 * dt.norm_sq()).abs() <= 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        let f = identity_linear();
        let cfg = ResolventConfig::default();
        assert!(matches!(
            resolvent(&f, &unit_box(), 0.0, &v(&[1.0, 1.0]), &cfg),
            Err(ResolventError::BadParameter(_))
        ));
        assert!(matches!(
            resolvent(&f, &unit_box(), -1.0, &v(&[1.0, 1.0]), &cfg),
            Err(ResolventError::BadParameter(_))
        ));
        let tight = ResolventConfig {
            inner_max_iter: 1,
            ..cfg
        };
        assert!(matches!(
            resolvent(&f, &unit_box(), 1.0, &v(&[4.0, 0.5]), &tight),
            Err(ResolventError::NonConvergence { iterations: 1, .. })
        ));
    }
}
