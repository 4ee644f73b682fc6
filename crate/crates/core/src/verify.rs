//! Property suites over the set, operator, resolvent, projector and solver
//! catalogues. Each check reports the worst slack it observed.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::executor::StageExecutor;
use crate::halfspace::{project_intersection, project_two, verify_kkt, ProjectorError};
use crate::linalg::{dot, Matrix, Vector};
use crate::operators::{Bifunction, IsmOperator, NonexpansiveMap, OperatorError};
use crate::params::SolverParams;
use crate::problem::ProblemInstance;
use crate::random::{gaussian_vector, random_pairs, unit_vector};
use crate::regression::{min_norm_system, regression_set, RegressionCase};
use crate::resolvent::{regularized_gap, resolvent, ResolventConfig, ResolventError};
use crate::sets::{ConvexSet, HalfSpace};
use crate::solver::{solve_with, Engine, SolveError, Status, StepError};

const PAIR_SCALE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("unknown suite {0:?}; expected projections, resolvents, projector, solver or all")]
    UnknownSuite(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Resolvent(#[from] ResolventError),
    #[error(transparent)]
    Projector(#[from] ProjectorError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Step(#[from] StepError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Projections,
    Resolvents,
    Projector,
    Solver,
    All,
}

impl FromStr for Suite {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "projections" => Suite::Projections,
            "resolvents" => Suite::Resolvents,
            "projector" => Suite::Projector,
            "solver" => Suite::Solver,
            "all" => Suite::All,
            other => return Err(VerifyError::UnknownSuite(other.to_string())),
        })
    }
}

/// One property checked over `samples` cases.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub property: String,
    pub samples: usize,
    /// Worst observed violation; the property holds when it is at most
    /// `tolerance`.
    pub max_slack: f64,
    pub tolerance: f64,
}

impl PropertyCheck {
    fn new(property: impl Into<String>, samples: usize, max_slack: f64, tolerance: f64) -> Self {
        PropertyCheck {
            property: property.into(),
            samples,
            max_slack,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.max_slack <= self.tolerance
    }
}

impl fmt::Display for PropertyCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} samples={} max_slack={:.3e} tol={:.0e}",
            if self.passed() { "ok  " } else { "FAIL" },
            self.property,
            self.samples,
            self.max_slack,
            self.tolerance
        )
    }
}

fn worst(values: impl IntoIterator<Item = f64>) -> f64 {
    // NaN must not hide behind max
    values
        .into_iter()
        .fold(f64::NEG_INFINITY, |m, v| if v.is_nan() { f64::INFINITY } else { m.max(v) })
}

fn random_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Matrix {
    Matrix::new(n, n, gaussian_vector(rng, n * n, scale).into_vec()).expect("square shape")
}

/// `B^T B` for a random `B`.
fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    let b = random_matrix(rng, n, 1.0 / (n as f64).sqrt());
    b.transpose().matmul(&b).symmetric_part()
}

/// A random skew-symmetric matrix.
fn random_skew<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Matrix {
    let k = random_matrix(rng, n, 0.5);
    let kt = k.transpose();
    let entries = (0..n * n)
        .map(|idx| (k.get(idx / n, idx % n) - kt.get(idx / n, idx % n)) / 2.0)
        .collect();
    Matrix::new(n, n, entries).expect("square shape")
}

fn add(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows();
    let entries = (0..n * n).map(|idx| a.get(idx / n, idx % n) + b.get(idx / n, idx % n)).collect();
    Matrix::new(n, n, entries).expect("square shape")
}

/// One instance of every set kind, in R^4.
pub fn set_catalogue<R: Rng + ?Sized>(rng: &mut R) -> Vec<(&'static str, ConvexSet)> {
    let d = 4;
    let lower = gaussian_vector(rng, d, 1.0);
    let upper = lower.add_scaled(1.0, &Vector::new(vec![1.0, 0.5, 2.0, 0.0]).expect("finite"));
    let e0 = Vector::basis(d, 0);
    let mixed = Vector::new(vec![0.0, 0.6, 0.0, 0.8]).expect("finite");
    vec![
        ("box", ConvexSet::new_box(lower, upper).expect("ordered")),
        ("ball", ConvexSet::new_ball(gaussian_vector(rng, d, 1.0), 2.0).expect("radius")),
        ("halfspace", ConvexSet::new_halfspace(unit_vector(rng, d).scaled(3.0), 0.7).expect("normal")),
        ("affine", ConvexSet::new_affine(gaussian_vector(rng, d, 1.0), vec![e0, mixed]).expect("orthonormal")),
        ("whole", ConvexSet::whole_space(d)),
    ]
}

/// Nonexpansive maps of every kind, in R^4.
pub fn map_catalogue<R: Rng + ?Sized>(rng: &mut R) -> Result<Vec<(&'static str, NonexpansiveMap)>, OperatorError> {
    let d = 4;
    let rot = NonexpansiveMap::rotation(d, 0.7, (1, 3))?;
    // half of a plane rotation: a strict contraction
    let (sin, cos) = 0.9f64.sin_cos();
    let mut entries = vec![0.0; d * d];
    entries[0] = 0.5 * cos;
    entries[1] = -0.5 * sin;
    entries[d] = 0.5 * sin;
    entries[d + 1] = 0.5 * cos;
    for i in 2..d {
        entries[i * d + i] = 0.5;
    }
    let m = Matrix::new(d, d, entries).expect("square shape");
    Ok(vec![
        ("projection", NonexpansiveMap::projection(ConvexSet::new_ball(gaussian_vector(rng, d, 1.0), 1.5).expect("radius"))?),
        ("identity", NonexpansiveMap::identity(d)?),
        ("rotation", rot),
        ("affine-contraction", NonexpansiveMap::affine(m, gaussian_vector(rng, d, 1.0))?),
    ])
}

/// Inverse strongly monotone operators of every kind, in R^4.
pub fn ism_catalogue<R: Rng + ?Sized>(rng: &mut R) -> Result<Vec<(&'static str, IsmOperator)>, OperatorError> {
    let d = 4;
    let pd = add(&random_psd(rng, d), &Matrix::identity(d));
    let nonsym = add(&Matrix::identity(d), &random_skew(rng, d));
    let ball = NonexpansiveMap::projection(ConvexSet::new_ball(Vector::zeros(d), 1.0).expect("radius"))?;
    Ok(vec![
        ("affine-symmetric", IsmOperator::affine(pd, gaussian_vector(rng, d, 1.0))?),
        ("affine-nonsymmetric", IsmOperator::affine(nonsym, gaussian_vector(rng, d, 1.0))?),
        ("residual-projection", IsmOperator::residual_of(ball)?),
        ("residual-rotation", IsmOperator::residual_of(NonexpansiveMap::rotation(d, 2.0, (0, 2))?)?),
        ("zero", IsmOperator::zero(d)?),
    ])
}

/// Bifunctions of every class paired with a feasible set, in R^3.
pub fn bifunction_catalogue<R: Rng + ?Sized>(
    rng: &mut R,
) -> Result<Vec<(&'static str, Bifunction, ConvexSet)>, OperatorError> {
    let d = 3;
    let boxed = ConvexSet::new_box(Vector::new(vec![-1.0, -2.0, 0.0]).expect("finite"), Vector::new(vec![1.0, 0.5, 3.0]).expect("finite"))
        .expect("ordered");
    let ball = ConvexSet::new_ball(gaussian_vector(rng, d, 0.5), 1.5).expect("radius");
    let whole = ConvexSet::whole_space(d);
    let sym = random_psd(rng, d);
    let nonsym = add(&random_psd(rng, d), &random_skew(rng, d));
    let general = random_psd(rng, d);
    let q = gaussian_vector(rng, d, 1.0);
    Ok(vec![
        ("zero/box", Bifunction::zero(d)?, boxed.clone()),
        ("zero/ball", Bifunction::zero(d)?, ball.clone()),
        ("linear-symmetric/ball", Bifunction::linear(sym.clone(), q.clone())?, ball.clone()),
        ("linear-nonsymmetric/box", Bifunction::linear(nonsym.clone(), q.clone())?, boxed.clone()),
        ("linear-nonsymmetric/whole", Bifunction::linear(nonsym, q.clone())?, whole.clone()),
        ("convex-isotropic/ball", Bifunction::convex_difference(Matrix::diagonal(&[0.8; 3]), q.clone())?, ball),
        ("convex-general/box", Bifunction::convex_difference(general.clone(), q.clone())?, boxed),
        ("convex-general/whole", Bifunction::convex_difference(general, q)?, whole),
    ])
}

/// Firm nonexpansiveness, idempotence and the obtuse-angle property of every
/// projection, plus the certificates of every registered map and operator.
pub fn projections_suite<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> Result<Vec<PropertyCheck>, VerifyError> {
    let mut out = Vec::new();
    for (name, set) in set_catalogue(rng) {
        let pairs = random_pairs(rng, set.dim(), samples, PAIR_SCALE);
        let firm = worst(pairs.iter().map(|(x, y)| {
            let (px, py) = (set.project_unchecked(x), set.project_unchecked(y));
            let dp = &px - &py;
            dp.norm_sq() - dot(dp.as_slice(), (x - y).as_slice())
        }));
        out.push(PropertyCheck::new(format!("projection/{name}: firmly nonexpansive"), samples, firm, 1e-9));
        let idem = worst(pairs.iter().map(|(x, _)| {
            let p = set.project_unchecked(x);
            set.project_unchecked(&p).distance(&p)
        }));
        out.push(PropertyCheck::new(format!("projection/{name}: idempotent"), samples, idem, 1e-12 * PAIR_SCALE));
        let inside = set.sample(rng, 16, PAIR_SCALE);
        let angle = worst(pairs.iter().flat_map(|(x, _)| {
            let p = set.project_unchecked(x);
            let r = x - &p;
            inside
                .iter()
                .map(|c| dot(r.as_slice(), (c - &p).as_slice()))
                .collect::<Vec<_>>()
        }));
        out.push(PropertyCheck::new(
            format!("projection/{name}: <x - Px, c - Px> <= 0"),
            samples,
            angle,
            1e-9,
        ));
    }
    for (name, map) in map_catalogue(rng)? {
        let pairs = random_pairs(rng, map.dim(), samples, PAIR_SCALE);
        out.push(PropertyCheck::new(
            format!("map/{name}: nonexpansive"),
            samples,
            map.max_expansion(&pairs),
            1e-9,
        ));
    }
    out.extend(operator_checks(samples, rng)?);
    Ok(out)
}

/// The ism inequality and nonexpansiveness of `I - λA` at `λ = α` and the
/// endpoint `λ = 2α`.
pub fn operator_checks<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> Result<Vec<PropertyCheck>, VerifyError> {
    let mut out = Vec::new();
    for (name, op) in ism_catalogue(rng)? {
        let pairs = random_pairs(rng, op.dim(), samples, PAIR_SCALE);
        out.push(PropertyCheck::new(
            format!("operator/{name}: inverse strongly monotone"),
            samples,
            op.max_ism_violation(&pairs),
            1e-8,
        ));
        let alpha = if op.modulus().is_finite() { op.modulus() } else { 1.0 };
        let step = worst([alpha, 2.0 * alpha].map(|l| op.max_step_expansion(l, &pairs)));
        out.push(PropertyCheck::new(
            format!("operator/{name}: I - lambda A nonexpansive"),
            samples,
            step,
            1e-8,
        ));
    }
    Ok(out)
}

/// Firm nonexpansiveness and the defining inequality of every catalogued
/// resolvent; agreement with the projection for the zero bifunction and
/// with the linear solve on the whole space.
pub fn resolvents_suite<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> Result<Vec<PropertyCheck>, VerifyError> {
    let cfg = ResolventConfig::default();
    let mut out = Vec::new();
    for (name, f, set) in bifunction_catalogue(rng)? {
        for r in [0.5, 2.0] {
            let pairs = random_pairs(rng, f.dim(), samples, PAIR_SCALE);
            let mut firm = Vec::with_capacity(samples);
            let mut gap = Vec::with_capacity(samples);
            let mut special = Vec::new();
            let test_points = set.sample(rng, 32, PAIR_SCALE);
            for (i, (x, y)) in pairs.iter().enumerate() {
                let tx = resolvent(&f, &set, r, x, &cfg)?;
                let ty = resolvent(&f, &set, r, y, &cfg)?;
                let dt = &tx - &ty;
                firm.push(dt.norm_sq() - dot(dt.as_slice(), (x - y).as_slice()));
                if i % 8 == 0 {
                    gap.push(-regularized_gap(&f, r, x, &tx, &test_points) / (1.0 + x.norm_sq()));
                }
                match (f.kind(), &set) {
                    (crate::operators::BifunctionKind::Zero { .. }, _) => {
                        special.push(tx.distance(&set.project_unchecked(x)));
                    }
                    (crate::operators::BifunctionKind::LinearMonotone { p, q }, ConvexSet::WholeSpace { .. }) => {
                        // z + r (P z + q) = x
                        let pz = p.apply(&tx).expect("dimension");
                        let lhs = tx.add_scaled(r, &(&pz + q));
                        special.push(lhs.distance(x));
                    }
                    _ => {}
                }
            }
            out.push(PropertyCheck::new(
                format!("resolvent/{name} r={r}: firmly nonexpansive"),
                samples,
                worst(firm),
                1e-8,
            ));
            out.push(PropertyCheck::new(
                format!("resolvent/{name} r={r}: regularized inequality"),
                gap.len(),
                worst(gap),
                1e-8,
            ));
            match f.kind() {
                crate::operators::BifunctionKind::Zero { .. } => out.push(PropertyCheck::new(
                    format!("resolvent/{name} r={r}: equals projection"),
                    samples,
                    worst(special),
                    1e-12,
                )),
                crate::operators::BifunctionKind::LinearMonotone { .. } if set.is_whole_space() => {
                    out.push(PropertyCheck::new(
                        format!("resolvent/{name} r={r}: linear residual"),
                        samples,
                        worst(special),
                        1e-10,
                    ))
                }
                _ => {}
            }
        }
    }
    Ok(out)
}

/// Random half-spaces `{<a, v> <= <a, c> + margin}` sharing the point `c`.
fn random_halfspaces<R: Rng + ?Sized>(rng: &mut R, dim: usize, count: usize) -> Vec<HalfSpace> {
    let c = gaussian_vector(rng, dim, 1.0);
    (0..count)
        .map(|_| {
            let a = unit_vector(rng, dim).scaled(rng.gen_range(0.2..5.0));
            let margin = rng.gen_range(0.0..1.0) * a.norm();
            let offset = dot(a.as_slice(), c.as_slice()) + margin;
            HalfSpace::new(a, offset).expect("nonzero normal")
        })
        .collect()
}

/// Nearest point of a planar half-space intersection by brute force over
/// directions: for each direction on a grid around `x0` the distance at
/// which the ray enters the set is computed, and the grid is refined around
/// the best direction. The entry distance is quasiconvex in the angle when
/// `x0` lies outside the set, so refinement cannot lose the minimum. Where
/// the nearest point lies inside an edge the distance is flat to second
/// order along it, which limits the position accuracy to about
/// `|x0 - p| * 1e-8`.
pub fn angular_grid_projection_2d(x0: &Vector, hs: &[HalfSpace]) -> Option<Vector> {
    const STEPS: usize = 720;
    if hs.iter().all(|h| h.residual(x0) <= 0.0) {
        return Some(x0.clone());
    }
    let entry = |theta: f64| -> f64 {
        let u = [theta.cos(), theta.sin()];
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for h in hs {
            let a = h.normal().as_slice();
            let au = a[0] * u[0] + a[1] * u[1];
            let slack = h.offset() - (a[0] * x0[0] + a[1] * x0[1]);
            if au > 0.0 {
                hi = hi.min(slack / au);
            } else if au < 0.0 {
                lo = lo.max(slack / au);
            } else if slack < 0.0 {
                return f64::INFINITY;
            }
        }
        if lo <= hi {
            lo
        } else {
            f64::INFINITY
        }
    };
    let (mut center, mut half_width) = (0.0, std::f64::consts::PI);
    let mut best = (f64::INFINITY, 0.0);
    while half_width > 1e-13 {
        let step = 2.0 * half_width / STEPS as f64;
        for i in 0..=STEPS {
            let theta = center - half_width + i as f64 * step;
            let rho = entry(theta);
            if rho < best.0 {
                best = (rho, theta);
            }
        }
        if !best.0.is_finite() {
            return None;
        }
        center = best.1;
        half_width = 2.0 * step;
    }
    let (rho, theta) = best;
    Vector::new(vec![x0[0] + rho * theta.cos(), x0[1] + rho * theta.sin()]).ok()
}

/// Closed-form two-half-space projection against the active-set solver on
/// `two_count` instances; the active-set solver against grid search on
/// `grid_count` planar three-half-space instances; KKT certificates of every
/// output.
pub fn projector_suite<R: Rng + ?Sized>(
    two_count: usize,
    grid_count: usize,
    rng: &mut R,
) -> Result<Vec<PropertyCheck>, VerifyError> {
    let mut agree = Vec::with_capacity(two_count);
    let mut uncertified = 0usize;
    let mut outputs = 0usize;
    for _ in 0..two_count {
        let dim = rng.gen_range(2..=6);
        let hs = random_halfspaces(rng, dim, 2);
        let x0 = gaussian_vector(rng, dim, 5.0);
        let fast = project_two(&x0, &hs[0], &hs[1])?;
        let full = project_intersection(&x0, &hs)?;
        agree.push(fast.point.distance(&full.point));
        for sol in [&fast, &full] {
            outputs += 1;
            if !verify_kkt(&x0, &hs, sol).is_certified(&x0) {
                uncertified += 1;
            }
        }
    }
    let mut grid = Vec::with_capacity(grid_count);
    for _ in 0..grid_count {
        let c = gaussian_vector(rng, 2, 1.0);
        let hs: Vec<HalfSpace> = (0..3)
            .map(|_| {
                let a = unit_vector(rng, 2).scaled(rng.gen_range(0.2..5.0));
                let offset = dot(a.as_slice(), c.as_slice()) + rng.gen_range(0.05..1.0) * a.norm();
                HalfSpace::new(a, offset).expect("nonzero normal")
            })
            .collect();
        let x0 = gaussian_vector(rng, 2, 5.0);
        let sol = project_intersection(&x0, &hs)?;
        outputs += 1;
        if !verify_kkt(&x0, &hs, &sol).is_certified(&x0) {
            uncertified += 1;
        }
        let oracle = angular_grid_projection_2d(&x0, &hs).expect("nonempty intersection");
        grid.push(sol.point.distance(&oracle));
    }
    for count in [3usize, 4] {
        for _ in 0..two_count / 10 {
            let dim = rng.gen_range(2..=8);
            let hs = random_halfspaces(rng, dim, count);
            let x0 = gaussian_vector(rng, dim, 5.0);
            let sol = project_intersection(&x0, &hs)?;
            outputs += 1;
            if !verify_kkt(&x0, &hs, &sol).is_certified(&x0) {
                uncertified += 1;
            }
        }
    }
    Ok(vec![
        PropertyCheck::new("projector: closed form vs active set", two_count, worst(agree), 1e-10),
        PropertyCheck::new("projector: active set vs grid search (2-D, 3 half-spaces)", grid_count, worst(grid), 1e-6),
        PropertyCheck::new("projector: uncertified KKT outputs", outputs, uncertified as f64, 0.0),
    ])
}

/// Outcome of one regression run with its distance to the known limit.
#[derive(Debug, Clone)]
pub struct RegressionRun {
    pub case: RegressionCase,
    pub result: crate::solver::SolveResult,
    pub error: f64,
}

pub fn run_regression(cases: Vec<RegressionCase>, exec: &StageExecutor) -> Result<Vec<RegressionRun>, VerifyError> {
    cases
        .into_iter()
        .map(|case| {
            let result = solve_with(&case.problem, &case.params, exec)?;
            let error = result.point.distance(&case.expected);
            Ok(RegressionRun { case, result, error })
        })
        .collect()
}

/// Least-squares oracle: `x0 + A^T (A A^T)^-1 (beta - A x0)` for rows `a_i`.
pub fn least_squares_nearest(rows: &[Vector], beta: &[f64], x0: &Vector) -> Option<Vector> {
    let m = rows.len();
    let gram = Matrix::new(
        m,
        m,
        (0..m * m).map(|idx| dot(rows[idx / m].as_slice(), rows[idx % m].as_slice())).collect(),
    )
    .ok()?;
    let rhs: Vec<f64> = (0..m).map(|i| beta[i] - dot(rows[i].as_slice(), x0.as_slice())).collect();
    let coef = crate::linalg::solve_dense(&gram, &rhs).unique()?;
    Some(rows.iter().zip(&coef).fold(x0.clone(), |acc, (a, &c)| acc.add_scaled(c, a)))
}

/// Min-norm systems with the least-squares oracle: the error of the limit.
pub fn min_norm_checks<R: Rng + ?Sized>(count: usize, exec: &StageExecutor, rng: &mut R) -> Result<Vec<RegressionRun>, VerifyError> {
    let mut runs = Vec::new();
    for _ in 0..count {
        let dim = rng.gen_range(2..=6);
        // fewer equations than unknowns, so the solution set is not a point
        let m = rng.gen_range(1..dim);
        let betas: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let x0 = gaussian_vector(rng, dim, 2.0);
        let mut case = min_norm_system(dim, &betas, x0.clone());
        let frame = crate::regression::rotated_frame(dim);
        case.expected = least_squares_nearest(&frame[..m], &betas, &x0).expect("orthonormal rows");
        let result = solve_with(&case.problem, &case.params, exec)?;
        let error = result.point.distance(&case.expected);
        runs.push(RegressionRun { case, result, error });
    }
    Ok(runs)
}

/// Largest per-iteration gap between the closed-form and active-set
/// projections along a run of the simplified variant.
pub fn dual_path_gap(prob: &ProblemInstance, params: &SolverParams, iterations: usize) -> Result<f64, VerifyError> {
    let exec = StageExecutor::sequential();
    let engine = Engine::new(prob, params, &exec).map_err(SolveError::from)?;
    let mut x = prob.x0().clone();
    let mut gap: f64 = 0.0;
    for n in 0..iterations {
        let state = engine.step(n, &x)?;
        if state.at_fixed_point {
            break;
        }
        let full = project_intersection(prob.x0(), &state.halfspaces)?;
        gap = gap.max(full.point.distance(state.next()));
        x = state.next().clone();
    }
    Ok(gap)
}

/// Limits, monitors and terminal residuals on the regression set, min-norm
/// systems against the least-squares oracle, the closed-form path of the
/// simplified variant, and agreement across worker counts.
pub fn solver_suite<R: Rng + ?Sized>(samples: usize, rng: &mut R) -> Result<Vec<PropertyCheck>, VerifyError> {
    let exec = StageExecutor::sequential();
    let runs = run_regression(regression_set(), &exec)?;
    let mut out = Vec::new();
    for run in &runs {
        let name = run.case.name;
        let m = &run.result.monitors;
        out.push(PropertyCheck::new(format!("solver/{name}: distance to limit"), 1, run.error, 1e-4));
        out.push(PropertyCheck::new(
            format!("solver/{name}: Fejer drop"),
            m.iterations_checked,
            m.max_fejer_drop,
            crate::solver::FEJER_TOL,
        ));
        out.push(PropertyCheck::new(
            format!("solver/{name}: witness containment"),
            m.iterations_checked,
            m.max_containment_excess,
            crate::solver::CONTAINMENT_TOL,
        ));
        out.push(PropertyCheck::new(
            format!("solver/{name}: distance chain"),
            m.iterations_checked,
            m.max_chain_excess,
            crate::solver::CHAIN_TOL,
        ));
        if run.result.status == Status::Converged {
            let tol = run.case.params.stop_tol;
            out.push(PropertyCheck::new(
                format!("solver/{name}: terminal residual / stop_tol"),
                1,
                run.result.residuals.max() / tol,
                10.0,
            ));
        }
    }
    let count = (samples / 100).clamp(1, 20);
    let mn = min_norm_checks(count, &exec, rng)?;
    out.push(PropertyCheck::new(
        "solver/min-norm: distance to least-squares solution",
        mn.len(),
        worst(mn.iter().map(|r| r.error)),
        1e-4,
    ));
    let alg = crate::regression::inner_ball();
    out.push(PropertyCheck::new(
        "solver/simplified: closed form vs active set per iteration",
        1,
        dual_path_gap(&alg.problem, &alg.params, 200)?,
        1e-10,
    ));
    let threads = [2, crate::executor::available_threads().max(2)];
    let mut mismatches = 0usize;
    for &t in &threads {
        let ex = StageExecutor::new(Some(t)).map_err(SolveError::from)?;
        let again = run_regression(regression_set(), &ex)?;
        for (a, b) in runs.iter().zip(&again) {
            let same_point = a.result.point.as_slice().iter().map(|v| v.to_bits()).eq(b.result.point.as_slice().iter().map(|v| v.to_bits()));
            if !same_point || a.result.trace != b.result.trace {
                mismatches += 1;
            }
        }
    }
    out.push(PropertyCheck::new(
        "solver: runs differing across worker counts",
        runs.len() * threads.len(),
        mismatches as f64,
        0.0,
    ));
    Ok(out)
}

/// Runs `suite` with `samples` random cases per property.
pub fn run_suite(suite: Suite, samples: usize, seed: u64) -> Result<Vec<PropertyCheck>, VerifyError> {
    if samples == 0 {
        return Err(VerifyError::NoSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let all = suite == Suite::All;
    if all || suite == Suite::Projections {
        out.extend(projections_suite(samples, &mut rng)?);
    }
    if all || suite == Suite::Resolvents {
        out.extend(resolvents_suite(samples, &mut rng)?);
    }
    if all || suite == Suite::Projector {
        out.extend(projector_suite(samples, (samples / 10).max(1), &mut rng)?);
    }
    if all || suite == Suite::Solver {
        out.extend(solver_suite(samples, &mut rng)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_parse() {
        assert_eq!("projector".parse::<Suite>().unwrap(), Suite::Projector);
        assert_eq!("all".parse::<Suite>().unwrap(), Suite::All);
        assert!(matches!("bogus".parse::<Suite>(), Err(VerifyError::UnknownSuite(_))));
    }

    #[test]
    fn zero_samples_rejected() {
        assert_eq!(run_suite(Suite::Projections, 0, 1), Err(VerifyError::NoSamples));
    }

    #[test]
    fn angular_oracle_on_a_corner() {
        // x <= 0, y <= 0 from (1, 2): nearest point is the corner
        let hs = [
            HalfSpace::new(Vector::new(vec![1.0, 0.0]).unwrap(), 0.0).unwrap(),
            HalfSpace::new(Vector::new(vec![0.0, 1.0]).unwrap(), 0.0).unwrap(),
        ];
        let x0 = Vector::new(vec![1.0, 2.0]).unwrap();
        let p = angular_grid_projection_2d(&x0, &hs).unwrap();
        assert!(p.norm() < 1e-9, "{p:?}");
        let inside = Vector::new(vec![-1.0, -1.0]).unwrap();
        assert_eq!(angular_grid_projection_2d(&inside, &hs).unwrap(), inside);
    }

    #[test]
    fn least_squares_oracle_on_axes() {
        let rows = [Vector::basis(3, 0), Vector::basis(3, 2)];
        let x0 = Vector::new(vec![5.0, 6.0, 7.0]).unwrap();
        let p = least_squares_nearest(&rows, &[1.0, -1.0], &x0).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 6.0, -1.0]);
    }

    #[test]
    fn projections_suite_passes() {
        let checks = run_suite(Suite::Projections, 200, 7).unwrap();
        for c in &checks {
            assert!(c.passed(), "{c}");
        }
    }
}
