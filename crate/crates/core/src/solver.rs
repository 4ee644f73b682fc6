//! The hybrid iteration and its variants, invariant monitors and traces.
//!
//! One step from `x_n`:
//!
//! 1. `z^l = T_{r_n}^{f_l} x_n` for every bifunction, keep the farthest as `z̄`;
//! 2. `u^k = P_C(z̄ - λ A_k z̄)` for every operator, keep the farthest as `ū`;
//! 3. `y^i = α_n ū + (1 - α_n) S_i ū` for every map, keep the farthest as `ȳ`;
//! 4. `x_{n+1}` is the projection of `x0` onto the half-spaces
//!    `{|v - ȳ| <= |v - z̄|}`, `{|v - z̄| <= |v - x_n|}` and
//!    `{<x0 - x_n, x_n - v> >= 0}`.
//!
//! An empty family passes its input through unchanged.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{ExecutorError, StageExecutor};
use crate::halfspace::{
    bisector_halfspace, monotonicity_halfspace, project_intersection, project_two, KktSolution,
    ProjectorError,
};
use crate::linalg::{dot, Vector};
use crate::params::{validate, ParamError, ResolvedParams, SolverParams, Variant};
use crate::problem::ProblemInstance;
use crate::resolvent::{resolvent, ResolventError};
use crate::sets::HalfSpace;

/// Largest tolerated distance from the witness to a generated half-space.
pub const CONTAINMENT_TOL: f64 = 1e-8;
/// Slack allowed in each link of `|u - ȳ| <= |u - z̄| <= |u - x_n|`.
pub const CHAIN_TOL: f64 = 1e-8;
/// Largest tolerated decrease of `|x_n - x0|`.
pub const FEJER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Executor(#[from] ExecutorError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("resolvent of bifunctions[{index}] failed: {source}")]
    Resolvent {
        index: usize,
        #[source]
        source: ResolventError,
    },
    #[error("projection onto the outer approximation failed: {0}")]
    Projector(#[from] ProjectorError),
    #[error("non-finite value in the {0} stage")]
    NonFinite(&'static str),
}

/// Index and value of the candidate farthest from `x`; ties go to the lowest
/// index. `None` for an empty list.
pub fn select_farthest<'a>(candidates: &'a [Vector], x: &Vector) -> Option<(usize, &'a Vector)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let d = c.distance(x);
        match best {
            Some((_, bd)) if !(d > bd) => {}
            _ => best = Some((i, d)),
        }
    }
    best.map(|(i, _)| (i, &candidates[i]))
}

/// Wall-clock seconds spent in the three parallel stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub resolvent: f64,
    pub operator: f64,
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationState {
    pub n: usize,
    pub x: Vector,
    pub alpha: f64,
    pub r: f64,
    /// Resolvent outputs; for the variants without bifunctions, the single
    /// point `P_C x_n` (or `x_n` for the min-norm variant).
    pub z: Vec<Vector>,
    pub u: Vec<Vector>,
    pub y: Vec<Vector>,
    pub l: Option<usize>,
    pub k: Option<usize>,
    pub i: Option<usize>,
    pub z_bar: Vector,
    pub u_bar: Vector,
    pub y_bar: Vector,
    /// The stopping residual is below tolerance; no projection was made.
    pub at_fixed_point: bool,
    /// Pieces of `C_n` followed by `Q_n`; empty at a fixed point.
    pub halfspaces: Vec<HalfSpace>,
    pub kkt: Option<KktSolution>,
    pub timings: Option<StageTimings>,
}

impl IterationState {
    /// `x_{n+1}`; equals `x_n` at a fixed point.
    pub fn next(&self) -> &Vector {
        self.kkt.as_ref().map_or(&self.x, |k| &k.point)
    }
}

#[cfg(not(target_arch = "wasm32"))]
fn timed<T>(on: bool, f: impl FnOnce() -> T) -> (T, f64) {
    if !on {
        return (f(), 0.0);
    }
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

#[cfg(target_arch = "wasm32")]
fn timed<T>(_on: bool, f: impl FnOnce() -> T) -> (T, f64) {
    (f(), 0.0)
}

/// A validated problem/parameter pair ready to step.
#[derive(Debug)]
pub struct Engine<'a> {
    prob: &'a ProblemInstance,
    resolved: ResolvedParams,
    exec: &'a StageExecutor,
}

impl<'a> Engine<'a> {
    pub fn new(
        prob: &'a ProblemInstance,
        params: &SolverParams,
        exec: &'a StageExecutor,
    ) -> Result<Self, ParamError> {
        Ok(Engine {
            prob,
            resolved: validate(prob, params)?,
            exec,
        })
    }

    pub fn resolved(&self) -> &ResolvedParams {
        &self.resolved
    }

    pub fn problem(&self) -> &ProblemInstance {
        self.prob
    }

    fn select_or(candidates: &[Vector], x: &Vector, fallback: &Vector) -> (Option<usize>, Vector) {
        match select_farthest(candidates, x) {
            Some((i, p)) => (Some(i), p.clone()),
            None => (None, fallback.clone()),
        }
    }

    pub fn step(&self, n: usize, x: &Vector) -> Result<IterationState, StepError> {
        let params = &self.resolved.params;
        let prob = self.prob;
        let set = prob.feasible_set();
        let ops = prob.ism_ops();
        let maps = prob.maps();
        let variant = params.variant;
        let lambda = self.resolved.lambda;
        let alpha = params.alpha.value(n);
        let r = params.r.value(n);
        let clock = params.record_timings;

        let (z, t_res) = timed(clock, || match variant {
            Variant::MainHybrid => self.exec.map(prob.bifunctions().len(), |l| {
                resolvent(&prob.bifunctions()[l], set, r, x, &params.resolvent)
                    .map_err(|source| StepError::Resolvent { index: l, source })
            }),
            Variant::SimplifiedAlg34 | Variant::FixedPointOnlyCor36 => Ok(vec![set.project_unchecked(x)]),
            Variant::MinNormCor32 => Ok(vec![x.clone()]),
        });
        let z = z?;
        let (l, z_bar) = if variant == Variant::MainHybrid {
            Self::select_or(&z, x, x)
        } else {
            (None, z[0].clone())
        };
        if !z_bar.is_finite() {
            return Err(StepError::NonFinite("resolvent"));
        }

        let (u, t_op) = timed(clock, || {
            self.exec.map(ops.len(), |k| {
                let shifted = z_bar.add_scaled(-lambda, &ops[k].apply_unchecked(&z_bar));
                Ok::<_, StepError>(set.project_unchecked(&shifted))
            })
        });
        let u = u?;
        let (k, u_bar) = Self::select_or(&u, x, &z_bar);
        if !u_bar.is_finite() {
            return Err(StepError::NonFinite("operator"));
        }

        let (y, t_map) = timed(clock, || {
            self.exec.map(maps.len(), |i| {
                let s = maps[i].apply_unchecked(&u_bar);
                Ok::<_, StepError>(s.scaled(1.0 - alpha).add_scaled(alpha, &u_bar))
            })
        });
        let y = y?;
        let (i, y_bar) = Self::select_or(&y, x, &u_bar);
        if !y_bar.is_finite() {
            return Err(StepError::NonFinite("map"));
        }

        let residual = match variant {
            Variant::MainHybrid => y_bar
                .distance(x)
                .max(z_bar.distance(x))
                .max(u_bar.distance(x)),
            Variant::SimplifiedAlg34 | Variant::FixedPointOnlyCor36 => y_bar.distance(x),
            Variant::MinNormCor32 => ops
                .iter()
                .map(|a| a.apply_unchecked(x).norm())
                .fold(0.0, f64::max),
        };
        let timings = clock.then_some(StageTimings {
            resolvent: t_res,
            operator: t_op,
            map: t_map,
        });
        let mut state = IterationState {
            n,
            x: x.clone(),
            alpha,
            r,
            z,
            u,
            y,
            l,
            k,
            i,
            z_bar,
            u_bar,
            y_bar,
            at_fixed_point: residual <= params.stop_tol,
            halfspaces: Vec::new(),
            kkt: None,
            timings,
        };
        if state.at_fixed_point {
            return Ok(state);
        }

        let mut pieces = match variant {
            Variant::MainHybrid => vec![
                bisector_halfspace(&state.y_bar, &state.z_bar)?,
                bisector_halfspace(&state.z_bar, x)?,
            ],
            Variant::SimplifiedAlg34 | Variant::FixedPointOnlyCor36 => {
                vec![bisector_halfspace(&state.y_bar, x)?]
            }
            Variant::MinNormCor32 => {
                // {v : <v, A x> <= <x - mu A x, A x>} for the selected operator
                let ax = ops[k.expect("min-norm has operators")].apply_unchecked(x);
                let mu = self.resolved.mu.expect("min-norm resolves mu");
                let offset = dot(x.add_scaled(-mu, &ax).as_slice(), ax.as_slice());
                let piece = if ax.norm_sq() == 0.0 {
                    HalfSpace::whole(x.dim())
                } else {
                    HalfSpace::new(ax, offset).map_err(|_| StepError::NonFinite("half-space"))?
                };
                vec![piece]
            }
        };
        let q = monotonicity_halfspace(prob.x0(), x)?;
        let live: Vec<usize> = (0..pieces.len()).filter(|&j| !pieces[j].is_whole_space()).collect();
        let q_index = pieces.len();
        let kkt = if live.len() == 1 {
            let mut sol = project_two(prob.x0(), &pieces[live[0]], &q)?;
            for j in &mut sol.active_set {
                *j = if *j == 0 { live[0] } else { q_index };
            }
            pieces.push(q);
            sol
        } else {
            pieces.push(q);
            project_intersection(prob.x0(), &pieces)?
        };
        if !kkt.point.is_finite() {
            return Err(StepError::NonFinite("projection"));
        }
        state.halfspaces = pieces;
        state.kkt = Some(kkt);
        Ok(state)
    }

    /// Residuals of every family at `x`, using `r_n` for the resolvents.
    pub fn terminal_residuals(&self, n: usize, x: &Vector) -> TerminalResiduals {
        let prob = self.prob;
        let params = &self.resolved.params;
        let set = prob.feasible_set();
        let r = params.r.value(n);
        let map = prob
            .maps()
            .iter()
            .map(|s| s.apply_unchecked(x).distance(x))
            .fold(0.0, f64::max);
        let operator = prob
            .ism_ops()
            .iter()
            .map(|a| {
                let shifted = x.add_scaled(-self.resolved.lambda, &a.apply_unchecked(x));
                set.project_unchecked(&shifted).distance(x)
            })
            .fold(0.0, f64::max);
        let resolvent = prob
            .bifunctions()
            .iter()
            .map(|f| {
                resolvent(f, set, r, x, &params.resolvent)
                    .map_or(f64::INFINITY, |z| z.distance(x))
            })
            .fold(0.0, f64::max);
        TerminalResiduals {
            map,
            resolvent,
            operator,
            set_violation: set.violation_unchecked(x),
        }
    }
}

/// Family residuals at the final point: `max_i |x - S_i x|`,
/// `max_l |x - T_r^{f_l} x|`, `max_k |x - P_C(x - λ A_k x)|` and the distance
/// from `x` to `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalResiduals {
    pub map: f64,
    pub resolvent: f64,
    pub operator: f64,
    pub set_violation: f64,
}

impl TerminalResiduals {
    pub fn max(&self) -> f64 {
        self.map.max(self.resolvent).max(self.operator)
    }
}

/// Per-iteration violations of the properties every iterate must satisfy.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub iterations_checked: usize,
    pub witnessed: bool,
    /// Witness farther than [`CONTAINMENT_TOL`] from a generated half-space.
    pub containment_violations: usize,
    /// `|u - ȳ| <= |u - z̄| <= |u - x_n|` broken by more than [`CHAIN_TOL`].
    pub chain_violations: usize,
    /// `|x_{n+1} - x0| < |x_n - x0| - FEJER_TOL`.
    pub fejer_violations: usize,
    pub max_containment_excess: f64,
    pub max_chain_excess: f64,
    pub max_fejer_drop: f64,
    pub first_violation: Option<usize>,
}

impl MonitorReport {
    pub fn total(&self) -> usize {
        self.containment_violations + self.chain_violations + self.fejer_violations
    }

    pub fn is_clean(&self) -> bool {
        self.total() == 0
    }

    pub fn observe(&mut self, state: &IterationState, x0: &Vector, witness: Option<&Vector>) {
        self.iterations_checked += 1;
        let before = self.total();
        let drop = state.x.distance(x0) - state.next().distance(x0);
        self.max_fejer_drop = self.max_fejer_drop.max(drop);
        if drop > FEJER_TOL {
            self.fejer_violations += 1;
        }
        if let Some(u) = witness {
            self.witnessed = true;
            let outside = state
                .halfspaces
                .iter()
                .map(|h| h.violation(u))
                .fold(0.0, f64::max);
            self.max_containment_excess = self.max_containment_excess.max(outside);
            if outside > CONTAINMENT_TOL {
                self.containment_violations += 1;
            }
            let (dy, dz, dx) = (u.distance(&state.y_bar), u.distance(&state.z_bar), u.distance(&state.x));
            let excess = (dy - dz).max(dz - dx);
            self.max_chain_excess = self.max_chain_excess.max(excess);
            if excess > CHAIN_TOL {
                self.chain_violations += 1;
            }
        }
        if self.first_violation.is_none() && self.total() > before {
            self.first_violation = Some(state.n);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    /// `|x_{n+1} - x_n|`.
    pub step: f64,
    /// `|x_n - ȳ_n|`.
    pub y_residual: f64,
    /// `|x_n - z̄_n|`.
    pub z_residual: f64,
    /// `|z̄_n - ū_n|`.
    pub zu_gap: f64,
    /// `|x_n - x0|`.
    pub fejer: f64,
    /// Distance from `x_n` to the feasible set.
    pub set_violation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_distance: Option<f64>,
    /// Largest signed distance from the witness to a generated half-space
    /// (negative inside).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
}

impl TraceRecord {
    pub fn from_state(state: &IterationState, prob: &ProblemInstance) -> Self {
        let x = &state.x;
        let witness = prob.witness();
        let witness_slack = witness.and_then(|u| {
            state
                .halfspaces
                .iter()
                .filter(|h| !h.is_whole_space())
                .map(|h| h.residual(u) / h.normal().norm())
                .reduce(f64::max)
        });
        TraceRecord {
            n: state.n,
            step: state.next().distance(x),
            y_residual: state.y_bar.distance(x),
            z_residual: state.z_bar.distance(x),
            zu_gap: state.z_bar.distance(&state.u_bar),
            fejer: x.distance(prob.x0()),
            set_violation: prob.feasible_set().violation_unchecked(x),
            witness_distance: witness.map(|u| u.distance(x)),
            witness_slack,
            l: state.l,
            k: state.k,
            i: state.i,
            timings: state.timings,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    StoppedAtFixedPoint,
    NumericalBreakdown,
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIterations => "max_iterations",
            Status::StoppedAtFixedPoint => "stopped_at_fixed_point",
            Status::NumericalBreakdown => "numerical_breakdown",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Breakdown {
    /// Iteration at which the step failed.
    pub n: usize,
    pub reason: String,
    /// Half-spaces whose intersection could not be projected onto, when
    /// that was the cause.
    pub halfspaces: Vec<HalfSpace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: Status,
    pub point: Vector,
    /// Steps evaluated, including the one that detected the fixed point.
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    pub monitors: MonitorReport,
    pub residuals: TerminalResiduals,
    pub breakdown: Option<Breakdown>,
    pub lambda: f64,
    pub variant: Variant,
}

/// Runs on every available core.
pub fn solve(prob: &ProblemInstance, params: &SolverParams) -> Result<SolveResult, SolveError> {
    solve_with(prob, params, &StageExecutor::default())
}

pub fn solve_with(
    prob: &ProblemInstance,
    params: &SolverParams,
    exec: &StageExecutor,
) -> Result<SolveResult, SolveError> {
    let engine = Engine::new(prob, params, exec)?;
    let max_iter = params.max_iter;
    let mut x = prob.x0().clone();
    let mut trace = Vec::new();
    let mut monitors = MonitorReport::default();
    let mut status = Status::MaxIterations;
    let mut iterations = max_iter;
    let mut breakdown = None;
    let mut last_n = 0;

    for n in 0..max_iter {
        last_n = n;
        let state = match engine.step(n, &x) {
            Ok(s) => s,
            Err(e) => {
                let halfspaces = match &e {
                    StepError::Projector(ProjectorError::Infeasible { halfspaces }) => halfspaces.clone(),
                    _ => Vec::new(),
                };
                breakdown = Some(Breakdown {
                    n,
                    reason: e.to_string(),
                    halfspaces,
                });
                status = Status::NumericalBreakdown;
                iterations = n;
                break;
            }
        };
        monitors.observe(&state, prob.x0(), prob.witness());
        let terminal = state.at_fixed_point || n + 1 == max_iter;
        if n % params.trace_every == 0 || terminal {
            trace.push(TraceRecord::from_state(&state, prob));
        }
        if state.at_fixed_point {
            status = if n == 0 {
                Status::StoppedAtFixedPoint
            } else {
                Status::Converged
            };
            iterations = n + 1;
            break;
        }
        x = state.next().clone();
    }

    let residuals = engine.terminal_residuals(last_n, &x);
    Ok(SolveResult {
        status,
        point: x,
        iterations,
        trace,
        monitors,
        residuals,
        breakdown,
        lambda: engine.resolved().lambda,
        variant: params.variant,
    })
}
