//! Closed convex sets with closed-form metric projections.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{check_dim, dot, LinalgError, Vector};

/// Tolerance on pairwise orthonormality of affine-subspace directions.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("box bound lower[{index}] = {lower} exceeds upper = {upper}")]
    InvertedBox { index: usize, lower: f64, upper: f64 },
    #[error("ball radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("half-space with zero normal and offset {0} < 0 is empty")]
    EmptyHalfSpace(f64),
    #[error("half-space offset must be finite")]
    NonFiniteOffset,
    #[error("affine directions are not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("affine subspace of dimension {dim} cannot have {count} directions")]
    TooManyDirections { dim: usize, count: usize },
    #[error("tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),
}

/// `{v : <normal, v> <= offset}`. A zero normal with non-negative offset is the
/// whole space.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Vector,
    offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self, SetError> {
        if !offset.is_finite() {
            return Err(SetError::NonFiniteOffset);
        }
        if normal.norm() == 0.0 && offset < 0.0 {
            return Err(SetError::EmptyHalfSpace(offset));
        }
        Ok(HalfSpace { normal, offset })
    }

    /// The degenerate whole-space half-space of dimension `dim`.
    pub fn whole(dim: usize) -> Self {
        HalfSpace {
            normal: Vector::zeros(dim),
            offset: 0.0,
        }
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    pub fn is_whole_space(&self) -> bool {
        self.normal.norm_sq() == 0.0
    }

    /// `<normal, x> - offset`; positive outside.
    pub fn residual(&self, x: &Vector) -> f64 {
        dot(self.normal.as_slice(), x.as_slice()) - self.offset
    }

    /// Euclidean distance from `x` to the half-space (zero inside).
    pub fn violation(&self, x: &Vector) -> f64 {
        if self.is_whole_space() {
            return 0.0;
        }
        (self.residual(x) / self.normal.norm()).max(0.0)
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let r = self.residual(x);
        if r <= 0.0 || self.is_whole_space() {
            x.clone()
        } else {
            x.add_scaled(-r / self.normal.norm_sq(), &self.normal)
        }
    }
}

/// Affine subspace `basepoint + span(directions)` with orthonormal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSubspace {
    basepoint: Vector,
    directions: Vec<Vector>,
}

impl AffineSubspace {
    pub fn new(basepoint: Vector, directions: Vec<Vector>) -> Result<Self, SetError> {
        let dim = basepoint.dim();
        if directions.len() > dim {
            return Err(SetError::TooManyDirections {
                dim,
                count: directions.len(),
            });
        }
        let mut worst = 0.0f64;
        for (i, a) in directions.iter().enumerate() {
            check_dim(dim, a.dim())?;
            for b in &directions[..=i] {
                let target = if std::ptr::eq(a, b) { 1.0 } else { 0.0 };
                worst = worst.max((dot(a.as_slice(), b.as_slice()) - target).abs());
            }
        }
        if worst > ORTHONORMAL_TOL {
            return Err(SetError::NotOrthonormal(worst));
        }
        Ok(AffineSubspace {
            basepoint,
            directions,
        })
    }

    /// The hyperplane `{v : <normal, v> = offset}`, spanned by an orthonormal
    /// basis of the complement of `normal` (Gram-Schmidt over the unit axes).
    pub fn hyperplane(normal: &Vector, offset: f64) -> Result<Self, SetError> {
        let dim = normal.dim();
        let nn = normal.norm_sq();
        if nn == 0.0 {
            return Err(SetError::EmptyHalfSpace(offset));
        }
        let unit = normal.scaled(1.0 / nn.sqrt());
        let basepoint = normal.scaled(offset / nn);
        let mut basis: Vec<Vector> = vec![unit];
        for axis in 0..dim {
            let mut e = Vector::basis(dim, axis);
            for _ in 0..2 {
                for b in &basis {
                    e = e.add_scaled(-dot(e.as_slice(), b.as_slice()), b);
                }
            }
            let n = e.norm();
            if n > 1e-8 {
                basis.push(e.scaled(1.0 / n));
            }
            if basis.len() == dim {
                break;
            }
        }
        basis.remove(0);
        AffineSubspace::new(basepoint, basis)
    }

    pub fn basepoint(&self) -> &Vector {
        &self.basepoint
    }

    pub fn directions(&self) -> &[Vector] {
        &self.directions
    }

    pub fn project(&self, x: &Vector) -> Vector {
        let rel = x - &self.basepoint;
        self.directions.iter().fold(self.basepoint.clone(), |p, e| {
            p.add_scaled(dot(rel.as_slice(), e.as_slice()), e)
        })
    }
}

/// Membership outcome: `inside` iff `violation <= tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContainmentVerdict {
    pub inside: bool,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    HalfSpace(HalfSpace),
    WholeSpace { dim: usize },
    Affine(AffineSubspace),
}

impl ConvexSet {
    pub fn new_box(lower: Vector, upper: Vector) -> Result<Self, SetError> {
        check_dim(lower.dim(), upper.dim())?;
        for (index, (&lo, &hi)) in lower.as_slice().iter().zip(upper.as_slice()).enumerate() {
            if lo > hi {
                return Err(SetError::InvertedBox {
                    index,
                    lower: lo,
                    upper: hi,
                });
            }
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    pub fn new_ball(center: Vector, radius: f64) -> Result<Self, SetError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(SetError::BadRadius(radius));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn new_halfspace(normal: Vector, offset: f64) -> Result<Self, SetError> {
        HalfSpace::new(normal, offset).map(ConvexSet::HalfSpace)
    }

    pub fn whole_space(dim: usize) -> Self {
        assert!(dim > 0, "zero-dimensional space");
        ConvexSet::WholeSpace { dim }
    }

    pub fn new_affine(basepoint: Vector, directions: Vec<Vector>) -> Result<Self, SetError> {
        AffineSubspace::new(basepoint, directions).map(ConvexSet::Affine)
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lower, .. } => lower.dim(),
            ConvexSet::Ball { center, .. } => center.dim(),
            ConvexSet::HalfSpace(h) => h.dim(),
            ConvexSet::WholeSpace { dim } => *dim,
            ConvexSet::Affine(a) => a.basepoint.dim(),
        }
    }

    pub fn is_whole_space(&self) -> bool {
        match self {
            ConvexSet::WholeSpace { .. } => true,
            ConvexSet::HalfSpace(h) => h.is_whole_space(),
            ConvexSet::Affine(a) => a.directions.len() == a.basepoint.dim(),
            _ => false,
        }
    }

    /// Metric projection `argmin { |y - x| : y in self }`.
    pub fn project(&self, x: &Vector) -> Result<Vector, SetError> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.project_unchecked(x))
    }

    pub(crate) fn project_unchecked(&self, x: &Vector) -> Vector {
        match self {
            ConvexSet::Box { lower, upper } => Vector::from_raw(
                x.as_slice()
                    .iter()
                    .zip(lower.as_slice().iter().zip(upper.as_slice()))
                    .map(|(&v, (&lo, &hi))| v.clamp(lo, hi))
                    .collect(),
            ),
            ConvexSet::Ball { center, radius } => {
                let d = x - center;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    center.add_scaled(radius / n, &d)
                }
            }
            ConvexSet::HalfSpace(h) => h.project(x),
            ConvexSet::WholeSpace { .. } => x.clone(),
            ConvexSet::Affine(a) => a.project(x),
        }
    }

    /// Checks every defining inequality of the set within `tol`.
    pub fn contains(&self, x: &Vector, tol: f64) -> Result<ContainmentVerdict, SetError> {
        if !(tol >= 0.0) {
            return Err(SetError::NegativeTolerance(tol));
        }
        check_dim(self.dim(), x.dim())?;
        let violation = self.violation_unchecked(x);
        Ok(ContainmentVerdict {
            inside: violation <= tol,
            violation,
        })
    }

    pub(crate) fn violation_unchecked(&self, x: &Vector) -> f64 {
        match self {
            ConvexSet::Box { lower, upper } => x
                .as_slice()
                .iter()
                .zip(lower.as_slice().iter().zip(upper.as_slice()))
                .map(|(&v, (&lo, &hi))| (lo - v).max(v - hi).max(0.0))
                .fold(0.0, f64::max),
            ConvexSet::Ball { center, radius } => (x.distance(center) - radius).max(0.0),
            ConvexSet::HalfSpace(h) => h.violation(x),
            ConvexSet::WholeSpace { .. } => 0.0,
            ConvexSet::Affine(a) => a.project(x).distance(x),
        }
    }

    /// Pseudo-random points of the set. Unbounded sets are sampled around the
    /// origin (or the set's anchor) with spread `scale`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize, scale: f64) -> Vec<Vector> {
        let dim = self.dim();
        let gaussian = |rng: &mut R, s: f64| {
            Vector::from_raw((0..dim).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect())
        };
        (0..count)
            .map(|_| match self {
                ConvexSet::Box { lower, upper } => Vector::from_raw(
                    lower
                        .as_slice()
                        .iter()
                        .zip(upper.as_slice())
                        .map(|(&lo, &hi)| {
                            let (lo, hi) = (lo.max(-scale), hi.min(scale));
                            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, hi) };
                            if lo == hi {
                                lo
                            } else {
                                rng.gen_range(lo..=hi)
                            }
                        })
                        .collect(),
                ),
                ConvexSet::Ball { center, radius } => {
                    let dir = gaussian(rng, 1.0);
                    let n = dir.norm().max(f64::MIN_POSITIVE);
                    let t: f64 = rng.gen_range(0.0..=1.0f64).powf(1.0 / dim as f64);
                    center.add_scaled(radius * t / n, &dir)
                }
                ConvexSet::HalfSpace(h) => {
                    let p = gaussian(rng, scale);
                    // reflect outside draws so the sample stays spread
                    let r = h.residual(&p);
                    if r > 0.0 && !h.is_whole_space() {
                        p.add_scaled(-2.0 * r / h.normal.norm_sq(), &h.normal)
                    } else {
                        p
                    }
                }
                ConvexSet::WholeSpace { .. } => gaussian(rng, scale),
                ConvexSet::Affine(a) => a.directions.iter().fold(a.basepoint.clone(), |p, e| {
                    p.add_scaled(scale * rng.sample::<f64, _>(StandardNormal), e)
                }),
            })
            .collect()
    }
}
