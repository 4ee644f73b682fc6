//! Solver parameters and their validation against a problem instance.

use std::fmt;

use thiserror::Error;

use crate::operators::family_modulus;
use crate::problem::ProblemInstance;
use crate::resolvent::{ResolventConfig, ResolventError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("lambda out of (0, 2*alpha): lambda = {lambda}, alpha = {alpha}")]
    LambdaOutOfRange { lambda: f64, alpha: f64 },
    #[error("mu out of (0, alpha): mu = {mu}, alpha = {alpha}")]
    MuOutOfRange { mu: f64, alpha: f64 },
    #[error("alpha schedule must stay in [0, 1] with limsup < 1: {0}")]
    BadAlphaSchedule(String),
    #[error("r schedule must stay at or above d > 0: {0}")]
    BadRSchedule(String),
    #[error("stop tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("max_iter must be at least 1")]
    NoIterations,
    #[error("trace cadence must be at least 1")]
    BadTraceCadence,
    #[error("variant {variant} requires {requirement}")]
    VariantPrecondition {
        variant: Variant,
        requirement: &'static str,
    },
    #[error("variant {0} takes mu, not lambda")]
    LambdaForMinNorm(Variant),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
}

/// The sequence `alpha_n` weighting `u_bar` against `S_i u_bar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSchedule {
    Constant(f64),
    /// `alpha_n = scale / (n + 1)`.
    Harmonic { scale: f64 },
}

impl AlphaSchedule {
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            AlphaSchedule::Constant(c) => c,
            AlphaSchedule::Harmonic { scale } => scale / (n as f64 + 1.0),
        }
    }

    pub fn limsup(&self) -> f64 {
        match *self {
            AlphaSchedule::Constant(c) => c,
            AlphaSchedule::Harmonic { .. } => 0.0,
        }
    }

    fn validate(&self) -> Result<(), ParamError> {
        let ok = match *self {
            AlphaSchedule::Constant(c) => (0.0..1.0).contains(&c),
            AlphaSchedule::Harmonic { scale } => (0.0..=1.0).contains(&scale),
        };
        if ok {
            Ok(())
        } else {
            Err(ParamError::BadAlphaSchedule(format!("{self:?}")))
        }
    }
}

/// The resolvent parameters `r_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RSchedule {
    Constant(f64),
    /// `r_n = base + slope * n`.
    Linear { base: f64, slope: f64 },
}

impl RSchedule {
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            RSchedule::Constant(r) => r,
            RSchedule::Linear { base, slope } => base + slope * n as f64,
        }
    }

    pub fn infimum(&self) -> f64 {
        match *self {
            RSchedule::Constant(r) | RSchedule::Linear { base: r, .. } => r,
        }
    }

    fn validate(&self, d: f64) -> Result<(), ParamError> {
        let finite = match *self {
            RSchedule::Constant(r) => r.is_finite(),
            RSchedule::Linear { base, slope } => base.is_finite() && slope.is_finite() && slope >= 0.0,
        };
        if !(d > 0.0 && d.is_finite()) || !finite || !(self.infimum() >= d) {
            return Err(ParamError::BadRSchedule(format!("{self:?} with d = {d}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Three parallel stages and the three-half-space projection.
    MainHybrid,
    /// No bifunctions; `z_n = P_C x_n` and a single bisector with the
    /// closed-form two-half-space projection.
    SimplifiedAlg34,
    /// Operator equations `A_i x = 0` on the whole space; converges to the
    /// solution nearest `x0`.
    MinNormCor32,
    /// Nonexpansive maps only.
    FixedPointOnlyCor36,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::MainHybrid => "main",
            Variant::SimplifiedAlg34 => "alg34",
            Variant::MinNormCor32 => "minnorm",
            Variant::FixedPointOnlyCor36 => "fixedpoint",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    /// Step for the variational-inequality stage; defaults to the family
    /// modulus (midpoint of the admissible interval).
    pub lambda: Option<f64>,
    /// Min-norm variant only; defaults to half the family modulus.
    pub mu: Option<f64>,
    pub alpha: AlphaSchedule,
    pub r: RSchedule,
    pub d: f64,
    pub stop_tol: f64,
    pub max_iter: usize,
    pub variant: Variant,
    pub resolvent: ResolventConfig,
    /// Emit a trace record every `trace_every` iterations (the final one is
    /// always kept).
    pub trace_every: usize,
    /// Attach stage wall-clock timings to trace records.
    pub record_timings: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            lambda: None,
            mu: None,
            alpha: AlphaSchedule::Constant(0.5),
            r: RSchedule::Constant(1.0),
            d: 1e-6,
            stop_tol: 1e-8,
            max_iter: 100_000,
            variant: Variant::MainHybrid,
            resolvent: ResolventConfig::default(),
            trace_every: 1,
            record_timings: false,
        }
    }
}

impl SolverParams {
    pub fn with_variant(variant: Variant) -> Self {
        SolverParams {
            variant,
            ..Default::default()
        }
    }
}

/// Parameters after validation, with the step size resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedParams {
    pub params: SolverParams,
    pub family_alpha: f64,
    pub lambda: f64,
    pub mu: Option<f64>,
}

pub fn validate(prob: &ProblemInstance, params: &SolverParams) -> Result<ResolvedParams, ParamError> {
    if !(params.stop_tol > 0.0 && params.stop_tol.is_finite()) {
        return Err(ParamError::BadTolerance(params.stop_tol));
    }
    if params.max_iter == 0 {
        return Err(ParamError::NoIterations);
    }
    if params.trace_every == 0 {
        return Err(ParamError::BadTraceCadence);
    }
    params.alpha.validate()?;
    params.r.validate(params.d)?;
    params.resolvent.validate()?;

    let variant = params.variant;
    let precondition = |ok: bool, requirement| {
        if ok {
            Ok(())
        } else {
            Err(ParamError::VariantPrecondition {
                variant,
                requirement,
            })
        }
    };
    let k = prob.bifunctions().len();
    let m = prob.ism_ops().len();
    let n = prob.maps().len();
    match variant {
        Variant::MainHybrid => {}
        Variant::SimplifiedAlg34 => precondition(k == 0, "no bifunctions")?,
        Variant::FixedPointOnlyCor36 => {
            precondition(k == 0 && m == 0, "no bifunctions and no ism operators")?;
        }
        Variant::MinNormCor32 => {
            precondition(k == 0 && n == 0, "no bifunctions and no nonexpansive maps")?;
            precondition(m > 0, "at least one ism operator")?;
            precondition(prob.feasible_set().is_whole_space(), "the whole space as feasible set")?;
        }
    }

    let family_alpha = family_modulus(prob.ism_ops());
    let (lambda, mu) = if variant == Variant::MinNormCor32 {
        if params.lambda.is_some() {
            return Err(ParamError::LambdaForMinNorm(variant));
        }
        let mu = params
            .mu
            .unwrap_or(if family_alpha.is_finite() { 0.5 * family_alpha } else { 0.5 });
        if !(mu > 0.0 && mu < family_alpha) {
            return Err(ParamError::MuOutOfRange {
                mu,
                alpha: family_alpha,
            });
        }
        (2.0 * mu, Some(mu))
    } else {
        let lambda = params
            .lambda
            .unwrap_or(if family_alpha.is_finite() { family_alpha } else { 1.0 });
        if !(lambda > 0.0 && lambda < 2.0 * family_alpha) {
            return Err(ParamError::LambdaOutOfRange {
                lambda,
                alpha: family_alpha,
            });
        }
        (lambda, None)
    };

    Ok(ResolvedParams {
        params: params.clone(),
        family_alpha,
        lambda,
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Matrix, Vector};
    use crate::operators::{IsmOperator, NonexpansiveMap};
    use crate::sets::ConvexSet;

    fn problem(ops: Vec<IsmOperator>, maps: Vec<NonexpansiveMap>) -> ProblemInstance {
        ProblemInstance::new(ConvexSet::whole_space(2), vec![], ops, maps, Vector::zeros(2), None)
            .unwrap()
    }

    fn identity_op() -> IsmOperator {
        IsmOperator::affine(Matrix::identity(2), Vector::zeros(2)).unwrap()
    }

    #[test]
    fn lambda_defaults_to_family_modulus() {
        let p = problem(vec![identity_op()], vec![]);
        let r = validate(&p, &SolverParams::default()).unwrap();
        assert_eq!(r.lambda, 1.0);
        assert_eq!(r.family_alpha, 1.0);
    }

    #[test]
    fn lambda_range_is_enforced() {
        let p = problem(vec![identity_op()], vec![]);
        for bad in [0.0, -1.0, 2.0, 3.0] {
            let params = SolverParams {
                lambda: Some(bad),
                ..Default::default()
            };
            let err = validate(&p, &params).unwrap_err();
            assert!(matches!(err, ParamError::LambdaOutOfRange { .. }));
            assert!(err.to_string().starts_with("lambda out of (0, 2*alpha)"));
        }
        let ok = SolverParams {
            lambda: Some(1.99),
            ..Default::default()
        };
        assert!(validate(&p, &ok).is_ok());
    }

    #[test]
    fn zero_family_admits_any_lambda() {
        let p = problem(vec![IsmOperator::zero(2).unwrap()], vec![]);
        let params = SolverParams {
            lambda: Some(1e6),
            ..Default::default()
        };
        assert!(validate(&p, &params).is_ok());
    }

    #[test]
    fn schedules_are_validated() {
        let p = problem(vec![], vec![NonexpansiveMap::identity(2).unwrap()]);
        for alpha in [AlphaSchedule::Constant(1.0), AlphaSchedule::Constant(-0.1), AlphaSchedule::Harmonic { scale: 2.0 }] {
            let params = SolverParams {
                alpha,
                ..Default::default()
            };
            assert!(matches!(validate(&p, &params), Err(ParamError::BadAlphaSchedule(_))));
        }
        let params = SolverParams {
            r: RSchedule::Constant(1e-7),
            ..Default::default()
        };
        assert!(matches!(validate(&p, &params), Err(ParamError::BadRSchedule(_))));
        let params = SolverParams {
            d: 0.0,
            ..Default::default()
        };
        assert!(matches!(validate(&p, &params), Err(ParamError::BadRSchedule(_))));
        assert_eq!(AlphaSchedule::Harmonic { scale: 1.0 }.value(3), 0.25);
        assert_eq!(RSchedule::Linear { base: 1.0, slope: 0.5 }.value(4), 3.0);
    }

    #[test]
    fn min_norm_preconditions() {
        let with_maps = problem(vec![identity_op()], vec![NonexpansiveMap::identity(2).unwrap()]);
        let params = SolverParams::with_variant(Variant::MinNormCor32);
        assert!(matches!(
            validate(&with_maps, &params),
            Err(ParamError::VariantPrecondition { .. })
        ));
        let ops_only = problem(vec![identity_op()], vec![]);
        let r = validate(&ops_only, &params).unwrap();
        assert_eq!(r.mu, Some(0.5));
        assert_eq!(r.lambda, 1.0);
        let bad_mu = SolverParams {
            mu: Some(1.0),
            ..params.clone()
        };
        assert!(matches!(validate(&ops_only, &bad_mu), Err(ParamError::MuOutOfRange { .. })));
        let with_lambda = SolverParams {
            lambda: Some(0.5),
            ..params
        };
        assert!(matches!(validate(&ops_only, &with_lambda), Err(ParamError::LambdaForMinNorm(_))));
    }

    #[test]
    fn fixed_point_variant_rejects_operators() {
        let p = problem(vec![identity_op()], vec![NonexpansiveMap::identity(2).unwrap()]);
        let params = SolverParams::with_variant(Variant::FixedPointOnlyCor36);
        assert!(matches!(validate(&p, &params), Err(ParamError::VariantPrecondition { .. })));
    }
}
