//! JSON problem files.
//!
//! Every set, operator and schedule is an object `{"kind": ..., "params": {...}}`.
//! Kinds without parameters may omit `params`. Unknown kinds and unknown fields
//! are rejected with the path of the offending value.

use hproj::operators::{BifunctionKind, IsmKind, NonexpansiveKind, OperatorError};
use hproj::params::{AlphaSchedule, RSchedule};
use hproj::problem::{ProblemError, ProblemInstance};
use hproj::sets::{AffineSubspace, SetError};
use hproj::{Bifunction, ConvexSet, HalfSpace, IsmOperator, Matrix, NonexpansiveMap, Vector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {source}")]
    Set { path: String, source: SetError },
    #[error("{path}: {source}")]
    Operator { path: String, source: OperatorError },
    #[error("{path}: {message}")]
    Value { path: String, message: String },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub dim: usize,
    pub feasible_set: SetSpec,
    #[serde(default)]
    pub bifunctions: Vec<BifunctionSpec>,
    #[serde(default)]
    pub ism_operators: Vec<IsmSpec>,
    #[serde(default)]
    pub nonexpansive_maps: Vec<MapSpec>,
    pub x0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedules: Option<Schedules>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Halfspace { normal: Vec<f64>, offset: f64 },
    WholeSpace,
    Affine { basepoint: Vec<f64>, directions: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Projection { set: SetSpec },
    Rotation { angle: f64, axes: [usize; 2] },
    Identity,
    AffineContraction { m: Vec<Vec<f64>>, b: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum IsmSpec {
    AffineMonotone { m: Vec<Vec<f64>>, b: Vec<f64> },
    ResidualOf { map: MapSpec },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum BifunctionSpec {
    Zero,
    LinearMonotone { p: Vec<Vec<f64>>, q: Vec<f64> },
    ConvexDifference { g: Vec<Vec<f64>>, h: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedules {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<RSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlphaSpec {
    Constant { value: f64 },
    /// `scale / (n + 1)`.
    Harmonic { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum RSpec {
    Constant { value: f64 },
    /// `base + slope * n`.
    Linear { base: f64, slope: f64 },
}

impl From<AlphaSpec> for AlphaSchedule {
    fn from(s: AlphaSpec) -> Self {
        match s {
            AlphaSpec::Constant { value } => AlphaSchedule::Constant(value),
            AlphaSpec::Harmonic { scale } => AlphaSchedule::Harmonic { scale },
        }
    }
}

impl From<RSpec> for RSchedule {
    fn from(s: RSpec) -> Self {
        match s {
            RSpec::Constant { value } => RSchedule::Constant(value),
            RSpec::Linear { base, slope } => RSchedule::Linear { base, slope },
        }
    }
}

/// Parses a problem file, reporting the JSON path of the first bad value.
pub fn parse(text: &str) -> Result<ProblemFile, SchemaError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| SchemaError::Parse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn to_json(file: &ProblemFile) -> String {
    serde_json::to_string_pretty(file).expect("problem files always serialize")
}

fn vector(path: &str, c: &[f64], dim: usize) -> Result<Vector, SchemaError> {
    if c.len() != dim {
        return Err(SchemaError::Value {
            path: path.to_string(),
            message: format!("expected {dim} entries, found {}", c.len()),
        });
    }
    Vector::new(c.to_vec()).map_err(|e| SchemaError::Value {
        path: path.to_string(),
        message: e.to_string(),
    })
}

fn matrix(path: &str, rows: &[Vec<f64>], dim: usize) -> Result<Matrix, SchemaError> {
    let value = |message: String| SchemaError::Value {
        path: path.to_string(),
        message,
    };
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(value(format!("expected a {dim}x{dim} matrix")));
    }
    Matrix::from_rows(rows).map_err(|e| value(e.to_string()))
}

fn set(path: &str, spec: &SetSpec, dim: usize) -> Result<ConvexSet, SchemaError> {
    let p = |field: &str| format!("{path}.params.{field}");
    let built = match spec {
        SetSpec::Box { lower, upper } => ConvexSet::new_box(vector(&p("lower"), lower, dim)?, vector(&p("upper"), upper, dim)?),
        SetSpec::Ball { center, radius } => ConvexSet::new_ball(vector(&p("center"), center, dim)?, *radius),
        SetSpec::Halfspace { normal, offset } => ConvexSet::new_halfspace(vector(&p("normal"), normal, dim)?, *offset),
        SetSpec::WholeSpace => Ok(ConvexSet::whole_space(dim)),
        SetSpec::Affine { basepoint, directions } => {
            let dirs = directions
                .iter()
                .enumerate()
                .map(|(i, d)| vector(&format!("{}[{i}]", p("directions")), d, dim))
                .collect::<Result<Vec<_>, _>>()?;
            ConvexSet::new_affine(vector(&p("basepoint"), basepoint, dim)?, dirs)
        }
    };
    built.map_err(|source| SchemaError::Set {
        path: path.to_string(),
        source,
    })
}

fn map(path: &str, spec: &MapSpec, dim: usize) -> Result<NonexpansiveMap, SchemaError> {
    let built = match spec {
        MapSpec::Projection { set: s } => NonexpansiveMap::projection(set(&format!("{path}.params.set"), s, dim)?),
        MapSpec::Rotation { angle, axes } => NonexpansiveMap::rotation(dim, *angle, (axes[0], axes[1])),
        MapSpec::Identity => NonexpansiveMap::identity(dim),
        MapSpec::AffineContraction { m, b } => NonexpansiveMap::affine(
            matrix(&format!("{path}.params.m"), m, dim)?,
            vector(&format!("{path}.params.b"), b, dim)?,
        ),
    };
    built.map_err(|source| SchemaError::Operator {
        path: path.to_string(),
        source,
    })
}

fn ism(path: &str, spec: &IsmSpec, dim: usize) -> Result<IsmOperator, SchemaError> {
    let built = match spec {
        IsmSpec::AffineMonotone { m, b } => IsmOperator::affine(
            matrix(&format!("{path}.params.m"), m, dim)?,
            vector(&format!("{path}.params.b"), b, dim)?,
        ),
        IsmSpec::ResidualOf { map: inner } => IsmOperator::residual_of(map(&format!("{path}.params.map"), inner, dim)?),
        IsmSpec::Zero => IsmOperator::zero(dim),
    };
    built.map_err(|source| SchemaError::Operator {
        path: path.to_string(),
        source,
    })
}

fn bifunction(path: &str, spec: &BifunctionSpec, dim: usize) -> Result<Bifunction, SchemaError> {
    let built = match spec {
        BifunctionSpec::Zero => Bifunction::zero(dim),
        BifunctionSpec::LinearMonotone { p, q } => Bifunction::linear(
            matrix(&format!("{path}.params.p"), p, dim)?,
            vector(&format!("{path}.params.q"), q, dim)?,
        ),
        BifunctionSpec::ConvexDifference { g, h } => Bifunction::convex_difference(
            matrix(&format!("{path}.params.g"), g, dim)?,
            vector(&format!("{path}.params.h"), h, dim)?,
        ),
    };
    built.map_err(|source| SchemaError::Operator {
        path: path.to_string(),
        source,
    })
}

impl ProblemFile {
    /// Builds and certifies every component.
    pub fn to_problem(&self) -> Result<ProblemInstance, SchemaError> {
        let dim = self.dim;
        if dim == 0 {
            return Err(SchemaError::Value {
                path: "dim".into(),
                message: "dimension must be positive".into(),
            });
        }
        let c = set("feasible_set", &self.feasible_set, dim)?;
        let f = self
            .bifunctions
            .iter()
            .enumerate()
            .map(|(i, s)| bifunction(&format!("bifunctions[{i}]"), s, dim))
            .collect::<Result<Vec<_>, _>>()?;
        let a = self
            .ism_operators
            .iter()
            .enumerate()
            .map(|(i, s)| ism(&format!("ism_operators[{i}]"), s, dim))
            .collect::<Result<Vec<_>, _>>()?;
        let s = self
            .nonexpansive_maps
            .iter()
            .enumerate()
            .map(|(i, s)| map(&format!("nonexpansive_maps[{i}]"), s, dim))
            .collect::<Result<Vec<_>, _>>()?;
        let x0 = vector("x0", &self.x0, dim)?;
        let witness = self.witness.as_deref().map(|w| vector("witness", w, dim)).transpose()?;
        Ok(ProblemInstance::new(c, f, a, s, x0, witness)?)
    }

    pub fn from_problem(prob: &ProblemInstance) -> Self {
        ProblemFile {
            dim: prob.dim(),
            feasible_set: set_spec(prob.feasible_set()),
            bifunctions: prob.bifunctions().iter().map(bifunction_spec).collect(),
            ism_operators: prob.ism_ops().iter().map(ism_spec).collect(),
            nonexpansive_maps: prob.maps().iter().map(map_spec).collect(),
            x0: prob.x0().as_slice().to_vec(),
            witness: prob.witness().map(|w| w.as_slice().to_vec()),
            schedules: None,
        }
    }
}

fn set_spec(set: &ConvexSet) -> SetSpec {
    match set {
        ConvexSet::Box { lower, upper } => SetSpec::Box {
            lower: lower.as_slice().to_vec(),
            upper: upper.as_slice().to_vec(),
        },
        ConvexSet::Ball { center, radius } => SetSpec::Ball {
            center: center.as_slice().to_vec(),
            radius: *radius,
        },
        ConvexSet::HalfSpace(h) => halfspace_spec(h),
        ConvexSet::WholeSpace { .. } => SetSpec::WholeSpace,
        ConvexSet::Affine(a) => affine_spec(a),
    }
}

fn halfspace_spec(h: &HalfSpace) -> SetSpec {
    SetSpec::Halfspace {
        normal: h.normal().as_slice().to_vec(),
        offset: h.offset(),
    }
}

fn affine_spec(a: &AffineSubspace) -> SetSpec {
    SetSpec::Affine {
        basepoint: a.basepoint().as_slice().to_vec(),
        directions: a.directions().iter().map(|d| d.as_slice().to_vec()).collect(),
    }
}

fn map_spec(m: &NonexpansiveMap) -> MapSpec {
    match m.kind() {
        NonexpansiveKind::ProjectionOnto(s) => MapSpec::Projection { set: set_spec(s) },
        NonexpansiveKind::PlaneRotation { angle, axes, .. } => MapSpec::Rotation {
            angle: *angle,
            axes: [axes.0, axes.1],
        },
        NonexpansiveKind::Identity { .. } => MapSpec::Identity,
        NonexpansiveKind::AffineContraction { m, b } => MapSpec::AffineContraction {
            m: m.to_rows(),
            b: b.as_slice().to_vec(),
        },
    }
}

fn ism_spec(a: &IsmOperator) -> IsmSpec {
    match a.kind() {
        IsmKind::AffineMonotone { m, b } => IsmSpec::AffineMonotone {
            m: m.to_rows(),
            b: b.as_slice().to_vec(),
        },
        IsmKind::ResidualOfNonexpansive(t) => IsmSpec::ResidualOf { map: map_spec(t) },
        IsmKind::Zero { .. } => IsmSpec::Zero,
    }
}

fn bifunction_spec(f: &Bifunction) -> BifunctionSpec {
    match f.kind() {
        BifunctionKind::Zero { .. } => BifunctionSpec::Zero,
        BifunctionKind::LinearMonotone { p, q } => BifunctionSpec::LinearMonotone {
            p: p.to_rows(),
            q: q.as_slice().to_vec(),
        },
        BifunctionKind::ConvexDifference { g, h } => BifunctionSpec::ConvexDifference {
            g: g.to_rows(),
            h: h.as_slice().to_vec(),
        },
    }
}
