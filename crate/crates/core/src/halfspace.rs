//! Exact projection of the anchor point onto intersections of at most four
//! half-spaces, by enumeration of active sets, plus the closed-form
//! two-half-space projector used by the simplified iteration.

use thiserror::Error;

use crate::linalg::{
    check_dim, dot, solve_small, LinalgError, Matrix, SmallLinearSystem, Solution, Vector,
};
use crate::sets::{HalfSpace, SetError};

/// Largest number of half-spaces accepted by [`project_intersection`].
pub const MAX_HALFSPACES: usize = 4;
/// Accepted multiplier floor; tiny negatives are treated as zero.
pub const MULTIPLIER_TOL: f64 = -1e-12;
/// Feasibility slack (distance to each half-space), relative to `1 + |x0|`.
pub const FEASIBILITY_TOL: f64 = 1e-10;
/// Slack of the second enumeration pass, used only when no active set passes
/// the strict test because of ill-conditioned normals.
pub const RELAXED_FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProjectorError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("at most {MAX_HALFSPACES} half-spaces are supported, got {0}")]
    TooMany(usize),
    #[error("half-space intersection appears empty")]
    Infeasible { halfspaces: Vec<HalfSpace> },
    #[error("half-space data overflowed: {0}")]
    Set(#[from] SetError),
}

/// `{v : |v - near| <= |v - far|}`, written as
/// `<v, far - near> <= <(near + far) / 2, far - near>`.
/// Equal points give the whole-space half-space.
pub fn bisector_halfspace(near: &Vector, far: &Vector) -> Result<HalfSpace, ProjectorError> {
    check_dim(near.dim(), far.dim())?;
    let normal = far - near;
    if normal.norm_sq() == 0.0 {
        return Ok(HalfSpace::whole(near.dim()));
    }
    let offset = dot(near.midpoint(far).as_slice(), normal.as_slice());
    Ok(HalfSpace::new(normal, offset)?)
}

/// `{v : <x0 - xn, xn - v> >= 0}`, i.e. `<v, x0 - xn> <= <xn, x0 - xn>`.
pub fn monotonicity_halfspace(x0: &Vector, xn: &Vector) -> Result<HalfSpace, ProjectorError> {
    check_dim(x0.dim(), xn.dim())?;
    let normal = x0 - xn;
    if normal.norm_sq() == 0.0 {
        return Ok(HalfSpace::whole(x0.dim()));
    }
    let offset = dot(xn.as_slice(), normal.as_slice());
    Ok(HalfSpace::new(normal, offset)?)
}

/// Projection with its Lagrange certificate:
/// `point = x0 - sum_j multipliers[j] * normal[active_set[j]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub point: Vector,
    pub multipliers: Vec<f64>,
    pub active_set: Vec<usize>,
}

impl KktSolution {
    fn interior(x0: &Vector) -> Self {
        KktSolution {
            point: x0.clone(),
            multipliers: Vec::new(),
            active_set: Vec::new(),
        }
    }
}

fn scale_of(x0: &Vector) -> f64 {
    1.0 + x0.norm()
}

/// Exact projection of `x0` onto the intersection of `hs`. Active sets are
/// tried by size and then lexicographically; the first one whose multipliers
/// are non-negative and whose point is feasible wins.
pub fn project_intersection(x0: &Vector, hs: &[HalfSpace]) -> Result<KktSolution, ProjectorError> {
    if hs.len() > MAX_HALFSPACES {
        return Err(ProjectorError::TooMany(hs.len()));
    }
    for h in hs {
        check_dim(x0.dim(), h.dim())?;
    }
    let live: Vec<usize> = (0..hs.len()).filter(|&i| !hs[i].is_whole_space()).collect();
    if live.is_empty() {
        return Ok(KktSolution::interior(x0));
    }

    // unit normals make the Gram matrices comparable across constraints
    let norms: Vec<f64> = live.iter().map(|&i| hs[i].normal().norm()).collect();
    let units: Vec<Vector> = live
        .iter()
        .zip(&norms)
        .map(|(&i, n)| hs[i].normal().scaled(1.0 / n))
        .collect();
    let slack: Vec<f64> = live
        .iter()
        .zip(&norms)
        .map(|(&i, n)| hs[i].residual(x0) / n)
        .collect();

    let scale = scale_of(x0);
    let mut subsets: Vec<Vec<usize>> = (0u32..(1 << live.len()))
        .map(|mask| (0..live.len()).filter(|j| mask & (1 << j) != 0).collect())
        .collect();
    subsets.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let candidate = |subset: &[usize]| -> Option<(Vector, Vec<f64>, f64)> {
        let k = subset.len();
        let mu = if k == 0 {
            Vec::new()
        } else {
            let gram: Vec<f64> = subset
                .iter()
                .flat_map(|&a| {
                    subset
                        .iter()
                        .map(|&b| dot(units[a].as_slice(), units[b].as_slice()))
                        .collect::<Vec<_>>()
                })
                .collect();
            let rhs: Vec<f64> = subset.iter().map(|&a| slack[a]).collect();
            let sys = SmallLinearSystem::new(Matrix::new(k, k, gram).ok()?, rhs).ok()?;
            solve_small(&sys).unique()?
        };
        if mu.iter().any(|&m| m < MULTIPLIER_TOL * scale) {
            return None;
        }
        let point = subset
            .iter()
            .zip(&mu)
            .fold(x0.clone(), |p, (&a, &m)| p.add_scaled(-m, &units[a]));
        let violation = live
            .iter()
            .map(|&i| hs[i].violation(&point))
            .fold(0.0, f64::max);
        Some((point, mu, violation))
    };

    let mut fallback: Option<(Vec<usize>, Vector, Vec<f64>, f64)> = None;
    for subset in &subsets {
        let Some((point, mu, violation)) = candidate(subset) else {
            continue;
        };
        if violation <= FEASIBILITY_TOL * scale {
            return Ok(assemble(subset, point, mu, &live, &norms));
        }
        if fallback.as_ref().is_none_or(|f| violation < f.3) {
            fallback = Some((subset.clone(), point, mu, violation));
        }
    }
    match fallback {
        Some((subset, point, mu, violation)) if violation <= RELAXED_FEASIBILITY_TOL * scale => {
            Ok(assemble(&subset, point, mu, &live, &norms))
        }
        _ => Err(ProjectorError::Infeasible {
            halfspaces: hs.to_vec(),
        }),
    }
}

fn assemble(
    subset: &[usize],
    point: Vector,
    mu: Vec<f64>,
    live: &[usize],
    norms: &[f64],
) -> KktSolution {
    let mut active_set = Vec::with_capacity(subset.len());
    let mut multipliers = Vec::with_capacity(subset.len());
    for (&j, m) in subset.iter().zip(mu) {
        active_set.push(live[j]);
        multipliers.push(m.max(0.0) / norms[j]);
    }
    KktSolution {
        point,
        multipliers,
        active_set,
    }
}

/// Projection of `x0` onto `cn ∩ qn` by the explicit two-constraint formulas:
/// the single-constraint projection onto `cn` when it already satisfies `qn`
/// (and symmetrically), otherwise the point
/// `x0 - mu1 a1 - mu2 a2` from the 2x2 system
/// `[|a1|^2, <a1,a2>; <a1,a2>, |a2|^2] mu = [<a1,x0> - b1, <a2,x0> - b2]`.
/// Degenerate geometry falls back to [`project_intersection`].
pub fn project_two(
    x0: &Vector,
    cn: &HalfSpace,
    qn: &HalfSpace,
) -> Result<KktSolution, ProjectorError> {
    check_dim(x0.dim(), cn.dim())?;
    check_dim(x0.dim(), qn.dim())?;
    let pair = [cn.clone(), qn.clone()];
    if cn.is_whole_space() || qn.is_whole_space() {
        return project_intersection(x0, &pair);
    }
    let scale = scale_of(x0);
    let tol = FEASIBILITY_TOL * scale;
    let (a1, a2) = (cn.normal(), qn.normal());
    let (r1, r2) = (cn.residual(x0), qn.residual(x0));

    if r1 <= 0.0 && r2 <= 0.0 {
        return Ok(KktSolution::interior(x0));
    }
    // P_{C_n} x0 = x0 - <a1, x0 - m> / |a1|^2 a1, kept if it lies in Q_n
    let single = |a: &Vector, r: f64, other: &HalfSpace, index: usize| {
        let (point, mult) = if r > 0.0 {
            let mu = r / a.norm_sq();
            (x0.add_scaled(-mu, a), vec![mu])
        } else {
            (x0.clone(), Vec::new())
        };
        (other.violation(&point) <= tol).then(|| KktSolution {
            active_set: if mult.is_empty() { vec![] } else { vec![index] },
            multipliers: mult,
            point,
        })
    };
    if let Some(sol) = single(a1, r1, qn, 0) {
        return Ok(sol);
    }
    if let Some(sol) = single(a2, r2, cn, 1) {
        return Ok(sol);
    }

    let g12 = dot(a1.as_slice(), a2.as_slice());
    let gram = Matrix::new(2, 2, vec![a1.norm_sq(), g12, g12, a2.norm_sq()])?;
    let sys = SmallLinearSystem::new(gram, vec![r1, r2])?;
    if let Solution::Unique(mu) = solve_small(&sys) {
        let point = x0.add_scaled(-mu[0], a1).add_scaled(-mu[1], a2);
        let feasible = cn.violation(&point) <= tol && qn.violation(&point) <= tol;
        let signed = mu[0] >= MULTIPLIER_TOL * scale / a1.norm()
            && mu[1] >= MULTIPLIER_TOL * scale / a2.norm();
        if feasible && signed {
            return Ok(KktSolution {
                point,
                multipliers: vec![mu[0].max(0.0), mu[1].max(0.0)],
                active_set: vec![0, 1],
            });
        }
    }
    project_intersection(x0, &pair)
}

/// Residuals of the KKT conditions of a claimed projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktCheck {
    /// `|point - (x0 - sum mu_j a_j)|`.
    pub stationarity: f64,
    /// Largest distance from `point` to a half-space.
    pub feasibility: f64,
    /// Smallest multiplier (zero when none are active).
    pub min_multiplier: f64,
    /// Largest `|<a_j, point> - b_j| / |a_j|` over active constraints.
    pub complementarity: f64,
}

impl KktCheck {
    /// Tolerances are relative to `1 + |x0|`.
    pub fn is_certified(&self, x0: &Vector) -> bool {
        let scale = scale_of(x0);
        self.stationarity <= 1e-9 * scale
            && self.feasibility <= RELAXED_FEASIBILITY_TOL * scale
            && self.min_multiplier >= 0.0
            && self.complementarity <= 1e-9 * scale
    }
}

pub fn verify_kkt(x0: &Vector, hs: &[HalfSpace], sol: &KktSolution) -> KktCheck {
    let rebuilt = sol
        .active_set
        .iter()
        .zip(&sol.multipliers)
        .fold(x0.clone(), |p, (&j, &m)| p.add_scaled(-m, hs[j].normal()));
    let complementarity = sol
        .active_set
        .iter()
        .zip(&sol.multipliers)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&j, _)| hs[j].residual(&sol.point).abs() / hs[j].normal().norm())
        .fold(0.0, f64::max);
    KktCheck {
        stationarity: rebuilt.distance(&sol.point),
        feasibility: hs.iter().map(|h| h.violation(&sol.point)).fold(0.0, f64::max),
        min_multiplier: sol.multipliers.iter().copied().fold(0.0, f64::min),
        complementarity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn hs(n: &[f64], b: f64) -> HalfSpace {
        HalfSpace::new(v(n), b).unwrap()
    }

    #[test]
    fn bisector_examples() {
        let p = v(&[1.0, 1.0]);
        assert!(bisector_halfspace(&p, &p).unwrap().is_whole_space());
        let h = bisector_halfspace(&v(&[-1.0, 0.0]), &v(&[1.0, 0.0])).unwrap();
        assert_eq!(h.normal(), &v(&[2.0, 0.0]));
        assert_eq!(h.offset(), 0.0);
    }

    #[test]
    fn monotonicity_examples() {
        let x0 = v(&[1.0, 0.0]);
        assert!(monotonicity_halfspace(&x0, &x0).unwrap().is_whole_space());
        let q = monotonicity_halfspace(&x0, &v(&[0.5, 0.0])).unwrap();
        assert!(q.residual(&v(&[0.5, 7.0])).abs() < 1e-15);
        assert!(q.violation(&v(&[0.6, 0.0])) > 0.0);
    }

    #[test]
    fn project_two_examples() {
        let x0 = v(&[-1.0, -1.0]);
        let sol = project_two(&x0, &hs(&[1.0, 0.0], 0.0), &hs(&[0.0, 1.0], 0.0)).unwrap();
        assert_eq!(sol.point, x0);
        assert!(sol.multipliers.iter().all(|&m| m == 0.0));

        let cn = bisector_halfspace(&v(&[-1.0, 0.0]), &v(&[1.0, 0.0])).unwrap();
        let sol = project_two(&v(&[2.0, 1.0]), &cn, &HalfSpace::whole(2)).unwrap();
        assert_eq!(sol.point, v(&[0.0, 1.0]));

        let sol = project_two(&v(&[1.0, 1.0]), &hs(&[1.0, 0.0], 0.0), &hs(&[0.0, 1.0], 0.0)).unwrap();
        assert!(sol.point.norm() < 1e-15);
        assert_eq!(sol.active_set, vec![0, 1]);
        assert!((sol.multipliers[0] - 1.0).abs() < 1e-15 && (sol.multipliers[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn intersection_examples() {
        let sol = project_intersection(&v(&[2.0, 3.0]), &[hs(&[1.0, 0.0], 0.0)]).unwrap();
        assert_eq!(sol.point, v(&[0.0, 3.0]));
        let sol = project_intersection(&v(&[2.0, 3.0]), &[HalfSpace::whole(2)]).unwrap();
        assert_eq!(sol.point, v(&[2.0, 3.0]));
        assert!(sol.active_set.is_empty());
        let sol = project_intersection(&v(&[2.0, 3.0]), &[]).unwrap();
        assert_eq!(sol.point, v(&[2.0, 3.0]));
    }

    #[test]
    fn parallel_duplicate_normals() {
        // same plane twice: the 2-subset is singular and is skipped
        let h = hs(&[1.0, 1.0], 1.0);
        let sol = project_intersection(&v(&[3.0, 3.0]), &[h.clone(), h.scaled_copy(2.0)]).unwrap();
        assert!(sol.point.distance(&v(&[0.5, 0.5])) < 1e-14);
        assert_eq!(sol.active_set.len(), 1);
        let check = verify_kkt(&v(&[3.0, 3.0]), &[h.clone(), h.scaled_copy(2.0)], &sol);
        assert!(check.is_certified(&v(&[3.0, 3.0])));
    }

    #[test]
    fn infeasible_intersection_is_reported() {
        let a = hs(&[1.0, 0.0], -1.0);
        let b = hs(&[-1.0, 0.0], -1.0);
        assert!(matches!(
            project_intersection(&v(&[0.0, 0.0]), &[a.clone(), b.clone()]),
            Err(ProjectorError::Infeasible { .. })
        ));
        assert!(matches!(
            project_two(&v(&[0.0, 0.0]), &a, &b),
            Err(ProjectorError::Infeasible { .. })
        ));
    }

    #[test]
    fn too_many_halfspaces() {
        let h = hs(&[1.0, 0.0], 0.0);
        assert!(matches!(
            project_intersection(&v(&[0.0, 0.0]), &vec![h; 5]),
            Err(ProjectorError::TooMany(5))
        ));
    }

    impl HalfSpace {
        fn scaled_copy(&self, s: f64) -> HalfSpace {
            HalfSpace::new(self.normal().scaled(s), self.offset() * s).unwrap()
        }
    }
}
