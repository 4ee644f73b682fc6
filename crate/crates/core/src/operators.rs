//! Catalogue of inverse-strongly-monotone operators, nonexpansive maps and
//! monotone bifunctions, each certified on construction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{check_dim, dot, LinalgError, Matrix, Vector};
use crate::random::random_pairs;
use crate::sets::{ConvexSet, SetError};

/// Number of random pairs used by construction-time certificates.
pub const CERTIFY_PAIRS: usize = 1000;
/// Seed of the construction-time certificate sampler.
pub const CERTIFY_SEED: u64 = 0x005e_ed0f_ce27;
/// Spread of the certificate sample around the origin.
pub const CERTIFY_SCALE: f64 = 10.0;

const NONEXPANSIVE_SLACK: f64 = 1e-9;
const ISM_SLACK: f64 = 1e-8;
const MONOTONE_SLACK: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Set(#[from] SetError),
    #[error("matrix must be square of size {expected}, got {rows}x{cols}")]
    NotSquare { expected: usize, rows: usize, cols: usize },
    #[error("symmetric part is not positive definite (smallest eigenvalue {0:e})")]
    NotStronglyMonotone(f64),
    #[error("symmetric part is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotMonotone(f64),
    #[error("matrix must be symmetric")]
    NotSymmetric,
    #[error("operator norm {0} exceeds 1")]
    NotNonexpansive(f64),
    #[error("certificate '{property}' failed: violation {violation:e}")]
    CertificateFailed { property: &'static str, violation: f64 },
    #[error("rotation axes ({0}, {1}) invalid for dimension {2}")]
    BadAxes(usize, usize, usize),
    #[error("non-finite parameter")]
    NonFinite,
}

fn square(m: &Matrix, dim: usize) -> Result<(), OperatorError> {
    if m.rows() != dim || m.cols() != dim {
        return Err(OperatorError::NotSquare {
            expected: dim,
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    Ok(())
}

fn certify_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(CERTIFY_SEED)
}

// ---------------------------------------------------------------------------
// Nonexpansive maps

#[derive(Debug, Clone, PartialEq)]
pub enum NonexpansiveKind {
    ProjectionOnto(ConvexSet),
    /// Rotation by `angle` in the coordinate plane `(axes.0, axes.1)` about
    /// the origin; all other coordinates are left unchanged.
    PlaneRotation { dim: usize, angle: f64, axes: (usize, usize) },
    Identity { dim: usize },
    /// `x -> M x + b` with spectral norm of `M` at most one.
    AffineContraction { m: Matrix, b: Vector },
}

/// `S` with `|Sx - Sy| <= |x - y|`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonexpansiveMap {
    kind: NonexpansiveKind,
    fixed_point_witness: Option<Vector>,
}

impl NonexpansiveMap {
    pub fn new(kind: NonexpansiveKind) -> Result<Self, OperatorError> {
        match &kind {
            NonexpansiveKind::PlaneRotation { dim, angle, axes } => {
                if axes.0 == axes.1 || axes.0 >= *dim || axes.1 >= *dim {
                    return Err(OperatorError::BadAxes(axes.0, axes.1, *dim));
                }
                if !angle.is_finite() {
                    return Err(OperatorError::NonFinite);
                }
            }
            NonexpansiveKind::AffineContraction { m, b } => {
                square(m, b.dim())?;
                let norm = m.operator_norm();
                if norm > 1.0 + 1e-12 {
                    return Err(OperatorError::NotNonexpansive(norm));
                }
            }
            NonexpansiveKind::Identity { dim } => {
                if *dim == 0 {
                    return Err(LinalgError::Empty.into());
                }
            }
            NonexpansiveKind::ProjectionOnto(_) => {}
        }
        let map = NonexpansiveMap {
            kind,
            fixed_point_witness: None,
        };
        map.certify()?;
        Ok(map)
    }

    pub fn projection(set: ConvexSet) -> Result<Self, OperatorError> {
        Self::new(NonexpansiveKind::ProjectionOnto(set))
    }

    pub fn identity(dim: usize) -> Result<Self, OperatorError> {
        Self::new(NonexpansiveKind::Identity { dim })
    }

    pub fn rotation(dim: usize, angle: f64, axes: (usize, usize)) -> Result<Self, OperatorError> {
        Self::new(NonexpansiveKind::PlaneRotation { dim, angle, axes })
    }

    pub fn affine(m: Matrix, b: Vector) -> Result<Self, OperatorError> {
        Self::new(NonexpansiveKind::AffineContraction { m, b })
    }

    /// Attaches a known fixed point, used by tests and monitors only.
    pub fn with_witness(mut self, witness: Vector) -> Result<Self, OperatorError> {
        check_dim(self.dim(), witness.dim())?;
        self.fixed_point_witness = Some(witness);
        Ok(self)
    }

    pub fn witness(&self) -> Option<&Vector> {
        self.fixed_point_witness.as_ref()
    }

    pub fn kind(&self) -> &NonexpansiveKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            NonexpansiveKind::ProjectionOnto(set) => set.dim(),
            NonexpansiveKind::PlaneRotation { dim, .. } | NonexpansiveKind::Identity { dim } => *dim,
            NonexpansiveKind::AffineContraction { b, .. } => b.dim(),
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector, OperatorError> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &Vector) -> Vector {
        match &self.kind {
            NonexpansiveKind::ProjectionOnto(set) => set.project_unchecked(x),
            NonexpansiveKind::PlaneRotation { angle, axes, .. } => {
                let (s, c) = angle.sin_cos();
                let mut out = x.clone().into_vec();
                let (a, b) = (x[axes.0], x[axes.1]);
                out[axes.0] = c * a - s * b;
                out[axes.1] = s * a + c * b;
                Vector::from_raw(out)
            }
            NonexpansiveKind::Identity { .. } => x.clone(),
            NonexpansiveKind::AffineContraction { m, b } => {
                &m.apply(x).expect("dimension checked") + b
            }
        }
    }

    /// Largest observed `|Sx - Sy| - |x - y|` over random pairs.
    pub fn max_expansion(&self, pairs: &[(Vector, Vector)]) -> f64 {
        pairs
            .iter()
            .map(|(x, y)| {
                self.apply_unchecked(x).distance(&self.apply_unchecked(y)) - x.distance(y)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn certify(&self) -> Result<(), OperatorError> {
        let pairs = random_pairs(&mut certify_rng(), self.dim(), CERTIFY_PAIRS, CERTIFY_SCALE);
        let violation = self.max_expansion(&pairs);
        if violation > NONEXPANSIVE_SLACK * (1.0 + CERTIFY_SCALE) {
            return Err(OperatorError::CertificateFailed {
                property: "nonexpansive",
                violation,
            });
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Inverse strongly monotone operators

#[derive(Debug, Clone, PartialEq)]
pub enum IsmKind {
    /// `x -> M x - b` with positive definite symmetric part.
    AffineMonotone { m: Matrix, b: Vector },
    /// `A = I - T`; modulus 1/2, or 1 when `T` is a projection (then `A`
    /// is firmly nonexpansive).
    ResidualOfNonexpansive(NonexpansiveMap),
    Zero { dim: usize },
}

/// `A` with `<Ax - Ay, x - y> >= modulus * |Ax - Ay|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsmOperator {
    kind: IsmKind,
    modulus: f64,
}

impl IsmOperator {
    pub fn new(kind: IsmKind) -> Result<Self, OperatorError> {
        let modulus = match &kind {
            IsmKind::AffineMonotone { m, b } => {
                square(m, b.dim())?;
                let smallest = m.symmetric_part().symmetric_eigenvalues()[0];
                if smallest <= 1e-14 * m.max_abs() {
                    return Err(OperatorError::NotStronglyMonotone(smallest));
                }
                let bound = m.operator_norm();
                smallest / (bound * bound)
            }
            IsmKind::ResidualOfNonexpansive(t) => match t.kind() {
                NonexpansiveKind::ProjectionOnto(_) => 1.0,
                _ => 0.5,
            },
            IsmKind::Zero { dim } => {
                if *dim == 0 {
                    return Err(LinalgError::Empty.into());
                }
                f64::INFINITY
            }
        };
        let op = IsmOperator { kind, modulus };
        op.certify()?;
        Ok(op)
    }

    pub fn affine(m: Matrix, b: Vector) -> Result<Self, OperatorError> {
        Self::new(IsmKind::AffineMonotone { m, b })
    }

    pub fn residual_of(map: NonexpansiveMap) -> Result<Self, OperatorError> {
        Self::new(IsmKind::ResidualOfNonexpansive(map))
    }

    pub fn zero(dim: usize) -> Result<Self, OperatorError> {
        Self::new(IsmKind::Zero { dim })
    }

    pub fn kind(&self) -> &IsmKind {
        &self.kind
    }

    /// Certified inverse-strong-monotonicity constant; `+inf` for the zero map.
    pub fn modulus(&self) -> f64 {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            IsmKind::AffineMonotone { b, .. } => b.dim(),
            IsmKind::ResidualOfNonexpansive(t) => t.dim(),
            IsmKind::Zero { dim } => *dim,
        }
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector, OperatorError> {
        check_dim(self.dim(), x.dim())?;
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &Vector) -> Vector {
        match &self.kind {
            IsmKind::AffineMonotone { m, b } => &m.apply(x).expect("dimension checked") - b,
            IsmKind::ResidualOfNonexpansive(t) => x - &t.apply_unchecked(x),
            IsmKind::Zero { dim } => Vector::zeros(*dim),
        }
    }

    /// Largest `modulus * |Ax - Ay|^2 - <Ax - Ay, x - y>` over the pairs.
    pub fn max_ism_violation(&self, pairs: &[(Vector, Vector)]) -> f64 {
        let alpha = if self.modulus.is_finite() { self.modulus } else { 0.0 };
        pairs
            .iter()
            .map(|(x, y)| {
                let da = &self.apply_unchecked(x) - &self.apply_unchecked(y);
                let dx = x - y;
                alpha * da.norm_sq() - dot(da.as_slice(), dx.as_slice())
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest expansion of `I - lambda A` over the pairs.
    pub fn max_step_expansion(&self, lambda: f64, pairs: &[(Vector, Vector)]) -> f64 {
        pairs
            .iter()
            .map(|(x, y)| {
                let gx = x.add_scaled(-lambda, &self.apply_unchecked(x));
                let gy = y.add_scaled(-lambda, &self.apply_unchecked(y));
                gx.distance(&gy) - x.distance(y)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn certify(&self) -> Result<(), OperatorError> {
        let pairs = random_pairs(&mut certify_rng(), self.dim(), CERTIFY_PAIRS, CERTIFY_SCALE);
        let violation = self.max_ism_violation(&pairs);
        if violation > ISM_SLACK * (1.0 + CERTIFY_SCALE * CERTIFY_SCALE) {
            return Err(OperatorError::CertificateFailed {
                property: "inverse strongly monotone",
                violation,
            });
        }
        Ok(())
    }
}

/// Family modulus: the minimum over members, `+inf` for an empty family.
pub fn family_modulus(ops: &[IsmOperator]) -> f64 {
    ops.iter().map(IsmOperator::modulus).fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// Bifunctions

#[derive(Debug, Clone, PartialEq)]
pub enum BifunctionKind {
    Zero { dim: usize },
    /// `f(x, y) = <P x + q, y - x>`.
    LinearMonotone { p: Matrix, q: Vector },
    /// `f(x, y) = g(y) - g(x)` with `g(v) = 1/2 <G v, v> + <h, v>`, `G`
    /// symmetric positive semidefinite.
    ConvexDifference { g: Matrix, h: Vector },
}

/// Bifunction satisfying the equilibrium-problem conditions: `f(x,x) = 0`,
/// monotone, upper hemicontinuous in `x`, convex and lsc in `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bifunction {
    kind: BifunctionKind,
    // spectral bound of the linear part, cached for the resolvent step rule
    linear_bound: f64,
}

impl Bifunction {
    pub fn new(kind: BifunctionKind) -> Result<Self, OperatorError> {
        let linear_bound = match &kind {
            BifunctionKind::Zero { dim } => {
                if *dim == 0 {
                    return Err(LinalgError::Empty.into());
                }
                0.0
            }
            BifunctionKind::LinearMonotone { p, q } => {
                square(p, q.dim())?;
                let smallest = p.symmetric_part().symmetric_eigenvalues()[0];
                if smallest < -1e-12 * p.max_abs().max(1.0) {
                    return Err(OperatorError::NotMonotone(smallest));
                }
                p.operator_norm()
            }
            BifunctionKind::ConvexDifference { g, h } => {
                square(g, h.dim())?;
                if !g.is_symmetric(SYMMETRY_TOL * g.max_abs().max(1.0)) {
                    return Err(OperatorError::NotSymmetric);
                }
                let smallest = g.symmetric_eigenvalues()[0];
                if smallest < -1e-12 * g.max_abs().max(1.0) {
                    return Err(OperatorError::NotMonotone(smallest));
                }
                g.operator_norm()
            }
        };
        let f = Bifunction { kind, linear_bound };
        f.certify()?;
        Ok(f)
    }

    pub fn zero(dim: usize) -> Result<Self, OperatorError> {
        Self::new(BifunctionKind::Zero { dim })
    }

    pub fn linear(p: Matrix, q: Vector) -> Result<Self, OperatorError> {
        Self::new(BifunctionKind::LinearMonotone { p, q })
    }

    pub fn convex_difference(g: Matrix, h: Vector) -> Result<Self, OperatorError> {
        Self::new(BifunctionKind::ConvexDifference { g, h })
    }

    pub fn kind(&self) -> &BifunctionKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            BifunctionKind::Zero { dim } => *dim,
            BifunctionKind::LinearMonotone { q, .. } => q.dim(),
            BifunctionKind::ConvexDifference { h, .. } => h.dim(),
        }
    }

    /// Spectral norm of `P` (or `G`); zero for the zero bifunction.
    pub fn linear_bound(&self) -> f64 {
        self.linear_bound
    }

    pub fn value(&self, x: &Vector, y: &Vector) -> Result<f64, OperatorError> {
        check_dim(self.dim(), x.dim())?;
        check_dim(self.dim(), y.dim())?;
        Ok(self.value_unchecked(x, y))
    }

    pub(crate) fn value_unchecked(&self, x: &Vector, y: &Vector) -> f64 {
        if x == y {
            return 0.0;
        }
        match &self.kind {
            BifunctionKind::Zero { .. } => 0.0,
            BifunctionKind::LinearMonotone { p, q } => {
                let px = &p.apply(x).expect("dimension checked") + q;
                let d = y - x;
                dot(px.as_slice(), d.as_slice())
            }
            BifunctionKind::ConvexDifference { g, h } => {
                // g(y) - g(x) = 1/2 <G(y + x), y - x> + <h, y - x>
                let s = &(x + y).scaled(0.5);
                let grad = &g.apply(s).expect("dimension checked") + h;
                let d = y - x;
                dot(grad.as_slice(), d.as_slice())
            }
        }
    }

    /// Gradient of `y -> f(x, y)`'s affine/quadratic model used by the
    /// resolvent: `P z + q` or `G z + h`.
    pub(crate) fn field(&self, z: &Vector) -> Vector {
        match &self.kind {
            BifunctionKind::Zero { dim } => Vector::zeros(*dim),
            BifunctionKind::LinearMonotone { p, q } => &p.apply(z).expect("dimension checked") + q,
            BifunctionKind::ConvexDifference { g, h } => &g.apply(z).expect("dimension checked") + h,
        }
    }

    /// Largest `f(x,y) + f(y,x)` over the pairs (monotonicity needs `<= 0`).
    pub fn max_monotonicity_violation(&self, pairs: &[(Vector, Vector)]) -> f64 {
        pairs
            .iter()
            .map(|(x, y)| self.value_unchecked(x, y) + self.value_unchecked(y, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn certify(&self) -> Result<(), OperatorError> {
        let pairs = random_pairs(&mut certify_rng(), self.dim(), CERTIFY_PAIRS, CERTIFY_SCALE);
        let violation = self.max_monotonicity_violation(&pairs);
        let scale = 1.0 + self.linear_bound * CERTIFY_SCALE * CERTIFY_SCALE;
        if violation > MONOTONE_SLACK * scale {
            return Err(OperatorError::CertificateFailed {
                property: "monotone",
                violation,
            });
        }
        Ok(())
    }
}
