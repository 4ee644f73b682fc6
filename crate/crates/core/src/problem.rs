//! Problem instances: the feasible set, the three operator families, the
//! anchor point and an optional known common solution.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::Vector;
use crate::operators::{Bifunction, IsmOperator, NonexpansiveMap};
use crate::resolvent::{resolvent, ResolventConfig};
use crate::sets::ConvexSet;

/// Tolerance used when a solution witness is checked at load time.
pub const WITNESS_TOL: f64 = 1e-8;
const WITNESS_SAMPLE: usize = 64;
const WITNESS_SEED: u64 = 0x000a_11ce;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("{component} has dimension {found}, expected {expected}")]
    Dimension {
        component: String,
        expected: usize,
        found: usize,
    },
    #[error("at least one of the bifunction, operator and map families must be nonempty")]
    NoFamilies,
    #[error("witness rejected: {reason} (residual {residual:e})")]
    Witness { reason: String, residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    feasible_set: ConvexSet,
    bifunctions: Vec<Bifunction>,
    ism_ops: Vec<IsmOperator>,
    maps: Vec<NonexpansiveMap>,
    x0: Vector,
    witness: Option<Vector>,
}

impl ProblemInstance {
    pub fn new(
        feasible_set: ConvexSet,
        bifunctions: Vec<Bifunction>,
        ism_ops: Vec<IsmOperator>,
        maps: Vec<NonexpansiveMap>,
        x0: Vector,
        witness: Option<Vector>,
    ) -> Result<Self, ProblemError> {
        let dim = x0.dim();
        let check = |component: String, found: usize| {
            if found == dim {
                Ok(())
            } else {
                Err(ProblemError::Dimension {
                    component,
                    expected: dim,
                    found,
                })
            }
        };
        check("feasible_set".into(), feasible_set.dim())?;
        for (i, f) in bifunctions.iter().enumerate() {
            check(format!("bifunctions[{i}]"), f.dim())?;
        }
        for (i, a) in ism_ops.iter().enumerate() {
            check(format!("ism_operators[{i}]"), a.dim())?;
        }
        for (i, s) in maps.iter().enumerate() {
            check(format!("nonexpansive_maps[{i}]"), s.dim())?;
        }
        if let Some(w) = &witness {
            check("witness".into(), w.dim())?;
        }
        if bifunctions.is_empty() && ism_ops.is_empty() && maps.is_empty() {
            return Err(ProblemError::NoFamilies);
        }
        let prob = ProblemInstance {
            feasible_set,
            bifunctions,
            ism_ops,
            maps,
            x0,
            witness,
        };
        if let Some(w) = &prob.witness {
            prob.check_witness(w)?;
        }
        Ok(prob)
    }

    pub fn dim(&self) -> usize {
        self.x0.dim()
    }

    pub fn feasible_set(&self) -> &ConvexSet {
        &self.feasible_set
    }

    pub fn bifunctions(&self) -> &[Bifunction] {
        &self.bifunctions
    }

    pub fn ism_ops(&self) -> &[IsmOperator] {
        &self.ism_ops
    }

    pub fn maps(&self) -> &[NonexpansiveMap] {
        &self.maps
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn witness(&self) -> Option<&Vector> {
        self.witness.as_ref()
    }

    /// Same problem with a different anchor point.
    pub fn with_x0(&self, x0: Vector) -> Result<Self, ProblemError> {
        Self::new(
            self.feasible_set.clone(),
            self.bifunctions.clone(),
            self.ism_ops.clone(),
            self.maps.clone(),
            x0,
            self.witness.clone(),
        )
    }

    fn check_witness(&self, u: &Vector) -> Result<(), ProblemError> {
        let reject = |reason: String, residual: f64| {
            if residual <= WITNESS_TOL {
                Ok(())
            } else {
                Err(ProblemError::Witness { reason, residual })
            }
        };
        reject(
            "not in the feasible set".into(),
            self.feasible_set.violation_unchecked(u),
        )?;
        for (i, s) in self.maps.iter().enumerate() {
            reject(
                format!("not a fixed point of nonexpansive_maps[{i}]"),
                s.apply_unchecked(u).distance(u),
            )?;
        }
        for (k, a) in self.ism_ops.iter().enumerate() {
            // any positive step characterizes VI solutions; use 1
            let p = self
                .feasible_set
                .project_unchecked(&u.add_scaled(-1.0, &a.apply_unchecked(u)));
            reject(
                format!("does not solve the variational inequality of ism_operators[{k}]"),
                p.distance(u),
            )?;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(WITNESS_SEED);
        let sample = self
            .feasible_set
            .sample(&mut rng, WITNESS_SAMPLE, 1.0 + u.norm());
        for (l, f) in self.bifunctions.iter().enumerate() {
            // f(u, y) >= 0 on the sample, and u is fixed by the resolvent
            let gap = sample
                .iter()
                .map(|y| f.value_unchecked(u, y))
                .fold(f64::INFINITY, f64::min);
            reject(
                format!("violates the equilibrium inequality of bifunctions[{l}]"),
                (-gap).max(0.0),
            )?;
            let fixed = resolvent(f, &self.feasible_set, 1.0, u, &ResolventConfig::default())
                .map(|z| z.distance(u))
                .unwrap_or(f64::INFINITY);
            reject(
                format!("is not fixed by the resolvent of bifunctions[{l}]"),
                fixed,
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn ball_map(center: &[f64], r: f64) -> NonexpansiveMap {
        NonexpansiveMap::projection(ConvexSet::new_ball(v(center), r).unwrap()).unwrap()
    }

    #[test]
    fn accepts_valid_witness() {
        let p = ProblemInstance::new(
            ConvexSet::whole_space(2),
            vec![Bifunction::linear(Matrix::identity(2), v(&[-0.5, 0.0])).unwrap()],
            vec![],
            vec![ball_map(&[0.0, 0.0], 1.0)],
            v(&[3.0, 3.0]),
            Some(v(&[0.5, 0.0])),
        );
        assert!(p.is_ok(), "{p:?}");
    }

    #[test]
    fn rejects_bad_witness() {
        let err = ProblemInstance::new(
            ConvexSet::whole_space(2),
            vec![],
            vec![],
            vec![ball_map(&[0.0, 0.0], 1.0)],
            v(&[3.0, 3.0]),
            Some(v(&[2.0, 0.0])),
        )
        .unwrap_err();
        assert!(matches!(err, ProblemError::Witness { .. }));

        let err = ProblemInstance::new(
            ConvexSet::whole_space(2),
            vec![Bifunction::linear(Matrix::identity(2), v(&[-0.5, 0.0])).unwrap()],
            vec![],
            vec![],
            v(&[3.0, 3.0]),
            Some(v(&[0.0, 0.0])),
        )
        .unwrap_err();
        assert!(matches!(err, ProblemError::Witness { .. }));
    }

    #[test]
    fn rejects_dimension_mismatch_and_empty_families() {
        let err = ProblemInstance::new(
            ConvexSet::whole_space(3),
            vec![],
            vec![],
            vec![ball_map(&[0.0, 0.0], 1.0)],
            v(&[3.0, 3.0]),
            None,
        )
        .unwrap_err();
        assert!(matches!(err, ProblemError::Dimension { .. }));
        let err = ProblemInstance::new(ConvexSet::whole_space(2), vec![], vec![], vec![], v(&[0.0, 0.0]), None)
            .unwrap_err();
        assert_eq!(err, ProblemError::NoFamilies);
    }
}
