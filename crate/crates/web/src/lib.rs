//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes and returns JSON text.

use hproj::executor::StageExecutor;
use hproj::halfspace::{project_intersection, verify_kkt, ProjectorError};
use hproj::params::{AlphaSchedule, SolverParams, Variant};
use hproj::problem::ProblemInstance;
use hproj::solver::{Engine, StepError};
use hproj::{ConvexSet, HalfSpace, NonexpansiveMap, Vector};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

#[derive(Debug, Deserialize)]
pub struct DiscRequest {
    /// `[cx, cy, radius]` per disc.
    pub discs: Vec<[f64; 3]>,
    pub x0: [f64; 2],
    pub alpha: f64,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Serialize)]
pub struct DiscResponse {
    pub status: &'static str,
    pub path: Vec<[f64; 2]>,
    /// `|x_n - x0|` along the path.
    pub anchor_distance: Vec<f64>,
}

/// Iterates of the fixed-point variant for the projections onto the discs.
pub fn discs(req: &DiscRequest) -> Result<DiscResponse, String> {
    let v = |c: [f64; 2]| Vector::new(c.to_vec()).map_err(|e| e.to_string());
    let maps = req
        .discs
        .iter()
        .map(|&[x, y, r]| {
            let ball = ConvexSet::new_ball(v([x, y])?, r).map_err(|e| e.to_string())?;
            NonexpansiveMap::projection(ball).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let x0 = v(req.x0)?;
    let prob = ProblemInstance::new(ConvexSet::whole_space(2), vec![], vec![], maps, x0.clone(), None)
        .map_err(|e| e.to_string())?;
    let params = SolverParams {
        alpha: AlphaSchedule::Constant(req.alpha),
        stop_tol: req.tol,
        max_iter: req.max_iter,
        ..SolverParams::with_variant(Variant::FixedPointOnlyCor36)
    };
    let exec = StageExecutor::sequential();
    let engine = Engine::new(&prob, &params, &exec).map_err(|e| e.to_string())?;
    let mut x = x0.clone();
    let mut path = vec![req.x0];
    let mut status = "max_iterations";
    for n in 0..req.max_iter {
        let state = match engine.step(n, &x) {
            Ok(s) => s,
            Err(StepError::Projector(ProjectorError::Infeasible { .. })) => {
                status = "infeasible";
                break;
            }
            Err(e) => return Err(e.to_string()),
        };
        if state.at_fixed_point {
            status = "converged";
            break;
        }
        x = state.next().clone();
        path.push([x[0], x[1]]);
    }
    let anchor_distance = path.iter().map(|p| (p[0] - req.x0[0]).hypot(p[1] - req.x0[1])).collect();
    Ok(DiscResponse {
        status,
        path,
        anchor_distance,
    })
}

#[derive(Debug, Deserialize)]
pub struct HalfplaneRequest {
    /// `[a1, a2, b]` for `a1 x + a2 y <= b`.
    pub halfplanes: Vec<[f64; 3]>,
    pub x0: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct HalfplaneResponse {
    pub point: [f64; 2],
    pub active: Vec<usize>,
    pub multipliers: Vec<f64>,
    pub certified: bool,
}

/// Nearest point of the intersection with its KKT data.
pub fn halfplanes(req: &HalfplaneRequest) -> Result<HalfplaneResponse, String> {
    let hs = req
        .halfplanes
        .iter()
        .map(|&[a1, a2, b]| {
            let a = Vector::new(vec![a1, a2]).map_err(|e| e.to_string())?;
            HalfSpace::new(a, b).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let x0 = Vector::new(req.x0.to_vec()).map_err(|e| e.to_string())?;
    let sol = project_intersection(&x0, &hs).map_err(|e| e.to_string())?;
    Ok(HalfplaneResponse {
        point: [sol.point[0], sol.point[1]],
        certified: verify_kkt(&x0, &hs, &sol).is_certified(&x0),
        active: sol.active_set,
        multipliers: sol.multipliers,
    })
}

fn call<Req: for<'de> Deserialize<'de>, Resp: Serialize>(
    json: &str,
    f: impl Fn(&Req) -> Result<Resp, String>,
) -> Result<String, JsError> {
    let req: Req = serde_json::from_str(json).map_err(|e| JsError::new(&e.to_string()))?;
    let resp = f(&req).map_err(|e| JsError::new(&e))?;
    Ok(serde_json::to_string(&resp).expect("responses serialize"))
}

#[wasm_bindgen]
pub fn solve_discs(json: &str) -> Result<String, JsError> {
    call(json, discs)
}

#[wasm_bindgen]
pub fn project_halfplanes(json: &str) -> Result<String, JsError> {
    call(json, halfplanes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lens_path_ends_near_the_lens_point() {
        let out = discs(&DiscRequest {
            discs: vec![[0.0, 0.0, 1.0], [1.0, 0.0, 1.0]],
            x0: [2.0, 1.5],
            alpha: 0.5,
            max_iter: 10_000,
            tol: 1e-8,
        })
        .unwrap();
        assert_eq!(out.status, "converged");
        let last = out.path.last().unwrap();
        assert!((last[0] - 0.8).hypot(last[1] - 0.6) < 1e-4);
        assert!(out.anchor_distance.windows(2).all(|w| w[1] >= w[0] - 1e-10));
    }

    #[test]
    fn disjoint_discs_stop_without_error() {
        let out = discs(&DiscRequest {
            discs: vec![[0.0, 0.0, 1.0], [5.0, 0.0, 1.0]],
            x0: [2.5, 3.0],
            alpha: 0.5,
            max_iter: 2000,
            tol: 1e-8,
        })
        .unwrap();
        assert_eq!(out.status, "infeasible");
    }

    #[test]
    fn corner_of_two_halfplanes() {
        let out = halfplanes(&HalfplaneRequest {
            halfplanes: vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            x0: [1.0, 2.0],
        })
        .unwrap();
        assert!(out.point[0].abs() < 1e-12 && out.point[1].abs() < 1e-12);
        assert_eq!(out.active.len(), 2);
        assert!(out.certified);
    }

    #[test]
    fn bad_radius_is_an_error() {
        let r = discs(&DiscRequest {
            discs: vec![[0.0, 0.0, -1.0]],
            x0: [0.0, 0.0],
            alpha: 0.5,
            max_iter: 10,
            tol: 1e-8,
        });
        assert!(r.is_err());
    }
}
