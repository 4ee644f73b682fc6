//! Limits of the regression instances against independent oracles.

use approx::assert_abs_diff_eq;
use hproj::executor::StageExecutor;
use hproj::params::{AlphaSchedule, SolverParams, Variant};
use hproj::problem::ProblemInstance;
use hproj::regression::*;
use hproj::solver::{solve_with, Engine, Status};
use hproj::{ConvexSet, IsmOperator, Matrix, NonexpansiveMap, Vector};

fn v(c: &[f64]) -> Vector {
    Vector::new(c.to_vec()).unwrap()
}

type Projector = Box<dyn Fn(&[f64]) -> Vec<f64>>;

/// Dykstra's alternating projections; converges to the projection onto the
/// intersection.
fn dykstra(x0: &[f64], sets: &[Projector], sweeps: usize) -> Vec<f64> {
    let d = x0.len();
    let mut x = x0.to_vec();
    let mut corr = vec![vec![0.0; d]; sets.len()];
    for _ in 0..sweeps {
        for (p, c) in sets.iter().zip(corr.iter_mut()) {
            let shifted: Vec<f64> = x.iter().zip(c.iter()).map(|(a, b)| a + b).collect();
            let y = p(&shifted);
            for i in 0..d {
                c[i] = shifted[i] - y[i];
            }
            x = y;
        }
    }
    x
}

fn ball(center: Vec<f64>, r: f64) -> Projector {
    Box::new(move |x| {
        let n = x.iter().zip(&center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
        if n <= r {
            x.to_vec()
        } else {
            x.iter().zip(&center).map(|(a, c)| c + (a - c) * r / n).collect()
        }
    })
}

fn clamp(lo: Vec<f64>, hi: Vec<f64>) -> Projector {
    Box::new(move |x| x.iter().zip(lo.iter().zip(&hi)).map(|(a, (l, h))| a.clamp(*l, *h)).collect())
}

fn below(a: Vec<f64>, b: f64) -> Projector {
    Box::new(move |x| {
        let s: f64 = x.iter().zip(&a).map(|(p, q)| p * q).sum();
        let nn: f64 = a.iter().map(|q| q * q).sum();
        if s <= b {
            x.to_vec()
        } else {
            x.iter().zip(&a).map(|(p, q)| p - (s - b) / nn * q).collect()
        }
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

fn sequential() -> StageExecutor {
    StageExecutor::sequential()
}

/// Nearest point of the lens `B((0,0),1) ∩ B((1,0),1)` by searching each
/// bounding arc: dense sampling, then golden-section refinement.
fn lens_oracle(x0: [f64; 2]) -> [f64; 2] {
    let centers = [[0.0, 0.0], [1.0, 0.0]];
    let inside = |p: [f64; 2], c: [f64; 2]| (p[0] - c[0]).hypot(p[1] - c[1]) <= 1.0 + 1e-12;
    if centers.iter().all(|&c| inside(x0, c)) {
        return x0;
    }
    let mut best = ([f64::NAN; 2], f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let other = centers[1 - i];
        let point = |t: f64| [c[0] + t.cos(), c[1] + t.sin()];
        let cost = |t: f64| {
            let p = point(t);
            if inside(p, other) {
                (p[0] - x0[0]).hypot(p[1] - x0[1])
            } else {
                f64::INFINITY
            }
        };
        let n = 100_000;
        let step = std::f64::consts::TAU / n as f64;
        let (mut bt, mut bc) = (0.0, f64::INFINITY);
        for k in 0..n {
            let t = k as f64 * step;
            if cost(t) < bc {
                bc = cost(t);
                bt = t;
            }
        }
        let (mut lo, mut hi) = (bt - step, bt + step);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let (m1, m2) = (hi - g * (hi - lo), lo + g * (hi - lo));
            if cost(m1) <= cost(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let t = 0.5 * (lo + hi);
        if cost(t) < best.1 {
            best = (point(t), cost(t));
        }
    }
    best.0
}

#[test]
fn oracles_confirm_closed_form_limits() {
    // a distance minimum is flat, so the arc search resolves about sqrt(eps)
    let lens = lens_oracle([2.0, 1.5]);
    assert_abs_diff_eq!(lens[0], 0.8, epsilon = 1e-7);
    assert_abs_diff_eq!(lens[1], 0.6, epsilon = 1e-7);

    let corner = dykstra(&[1.0, 1.0], &[clamp(vec![-1.0, -10.0], vec![0.0, 10.0]), clamp(vec![-10.0, -1.0], vec![10.0, 0.0])], 1000);
    assert!(dist(&corner, &[0.0, 0.0]) < 1e-12);

    let mixed = mixed_five();
    let x0 = mixed.problem.x0().as_slice().to_vec();
    let pins = clamp(vec![0.5, -0.3, 0.0, 0.0, -1e9], vec![0.5, -0.3, 0.0, 0.0, 1e9]);
    let p = dykstra(&x0, &[clamp(vec![-2.0; 5], vec![2.0; 5]), pins, ball(vec![0.0; 5], 1.5)], 5000);
    assert!(dist(&p, mixed.expected.as_slice()) < 1e-10, "{p:?}");

    let ten = ball_halfspace_ten();
    let x0 = ten.problem.x0().as_slice().to_vec();
    let a = vec![1.0 / 10f64.sqrt(); 10];
    let p = dykstra(&x0, &[ball(vec![0.0; 10], 1.0), below(a, 0.3)], 20_000);
    assert!(dist(&p, ten.expected.as_slice()) < 1e-9, "{p:?}");

    let inner = inner_ball();
    let p = dykstra(inner.problem.x0().as_slice(), &[ball(vec![0.0, 0.0], 1.0), ball(vec![0.0, 0.0], 0.5)], 100);
    assert!(dist(&p, inner.expected.as_slice()) < 1e-12);
}

#[test]
fn regression_limits_within_tolerance() {
    for case in regression_set() {
        let res = solve_with(&case.problem, &case.params, &sequential()).unwrap();
        let err = res.point.distance(&case.expected);
        assert!(err <= 1e-4, "{}: error {err:e}, status {:?}", case.name, res.status);
        assert!(res.iterations <= 100_000);
        assert!(res.monitors.is_clean(), "{}: {:?}", case.name, res.monitors);
        if res.status == Status::Converged {
            assert!(res.residuals.max() <= 10.0 * case.params.stop_tol, "{}: {:?}", case.name, res.residuals);
        }
    }
}

#[test]
fn shrinking_line_matches_hand_recursion() {
    let case = shrinking_line();
    let res = solve_with(&case.problem, &case.params, &sequential()).unwrap();
    assert_eq!(res.status, Status::Converged);
    assert!(res.point[0].abs() <= 2e-8);
    for rec in &res.trace {
        let n = rec.n as i32;
        assert_eq!(rec.fejer, 1.0 - 0.5f64.powi(n));
        assert_eq!(rec.y_residual, 0.5f64.powi(n));
    }
    assert!(res.trace.windows(2).all(|w| w[1].fejer > w[0].fejer));
}

#[test]
fn nearly_saturated_alpha_still_reaches_the_lens_point() {
    let case = two_balls_with(0.99);
    let res = solve_with(&case.problem, &case.params, &sequential()).unwrap();
    assert_eq!(res.status, Status::Converged);
    assert!(res.point.distance(&case.expected) <= 1e-4);
    assert!(res.iterations > solve_with(&two_balls().problem, &two_balls().params, &sequential()).unwrap().iterations);
    assert!(res.monitors.is_clean());
}

#[test]
fn anchor_at_witness_is_a_fixed_point_of_every_stage() {
    let case = mixed_five();
    let u = case.problem.witness().unwrap().clone();
    let prob = case.problem.with_x0(u.clone()).unwrap();
    let params = SolverParams {
        alpha: AlphaSchedule::Constant(0.0),
        ..case.params.clone()
    };
    let exec = sequential();
    let engine = Engine::new(&prob, &params, &exec).unwrap();
    let s = engine.step(0, &u).unwrap();
    assert!(s.y_bar.distance(&u) <= 1e-8);
    assert!(s.next().distance(&u) <= 1e-8);
    let res = solve_with(&prob, &params, &exec).unwrap();
    assert_eq!(res.status, Status::StoppedAtFixedPoint);
}

#[test]
fn trivial_families_leave_the_anchor_in_place() {
    let prob = ProblemInstance::new(
        ConvexSet::whole_space(3),
        vec![hproj::Bifunction::zero(3).unwrap()],
        vec![IsmOperator::zero(3).unwrap()],
        vec![NonexpansiveMap::identity(3).unwrap()],
        v(&[1.0, -2.0, 3.0]),
        None,
    )
    .unwrap();
    let res = solve_with(&prob, &SolverParams::default(), &sequential()).unwrap();
    assert_eq!(res.status, Status::StoppedAtFixedPoint);
    assert_eq!(res.point, v(&[1.0, -2.0, 3.0]));
}

#[test]
fn main_variant_without_bifunctions_or_operators_matches_fixed_point_variant() {
    for alpha in [0.0, 0.5, 0.9] {
        let case = two_balls_with(alpha);
        let fp = solve_with(&case.problem, &case.params, &sequential()).unwrap();
        let main = SolverParams {
            variant: Variant::MainHybrid,
            ..case.params.clone()
        };
        let mh = solve_with(&case.problem, &main, &sequential()).unwrap();
        assert_eq!(fp.trace, mh.trace);
        assert_eq!(fp.point, mh.point);
    }
}

#[test]
fn simplified_variant_stops_when_projected_anchor_solves() {
    let case = inner_ball();
    let prob = case.problem.with_x0(v(&[0.2, 0.1])).unwrap();
    let params = SolverParams {
        alpha: AlphaSchedule::Constant(0.0),
        ..case.params.clone()
    };
    let res = solve_with(&prob, &params, &sequential()).unwrap();
    assert_eq!(res.status, Status::StoppedAtFixedPoint);
    assert_eq!(res.iterations, 1);
}

#[test]
fn fixed_point_variant_with_identity_stops_immediately() {
    let prob = ProblemInstance::new(
        ConvexSet::new_ball(v(&[0.0, 0.0]), 2.0).unwrap(),
        vec![],
        vec![],
        vec![NonexpansiveMap::identity(2).unwrap()],
        v(&[0.3, -1.1]),
        None,
    )
    .unwrap();
    let res = solve_with(&prob, &SolverParams::with_variant(Variant::FixedPointOnlyCor36), &sequential()).unwrap();
    assert_eq!(res.status, Status::StoppedAtFixedPoint);
}

#[test]
fn min_norm_examples() {
    // every equation already holds at x0
    let x0 = v(&[0.5, 1.0, -1.0, 2.0]);
    let frame = rotated_frame(4);
    let betas: Vec<f64> = frame[..2].iter().map(|a| a.inner(&x0).unwrap()).collect();
    let case = min_norm_system(4, &betas, x0.clone());
    let res = solve_with(&case.problem, &case.params, &sequential()).unwrap();
    assert_eq!(res.status, Status::StoppedAtFixedPoint);
    assert_eq!(res.point, x0);

    // A x = x - b has the single root b
    let prob = ProblemInstance::new(
        ConvexSet::whole_space(2),
        vec![],
        vec![IsmOperator::affine(Matrix::identity(2), v(&[1.0, 1.0])).unwrap()],
        vec![],
        v(&[0.0, 0.0]),
        None,
    )
    .unwrap();
    let res = solve_with(&prob, &SolverParams::with_variant(Variant::MinNormCor32), &sequential()).unwrap();
    assert_eq!(res.status, Status::Converged);
    assert!(res.point.distance(&v(&[1.0, 1.0])) <= 1e-4);

    let case = min_norm_system(4, &[1.0, -2.0], x0.clone());
    let rows = &frame[..2];
    let oracle = hproj::verify::least_squares_nearest(rows, &[1.0, -2.0], &x0).unwrap();
    assert!(oracle.distance(&case.expected) < 1e-12);
    let res = solve_with(&case.problem, &case.params, &sequential()).unwrap();
    assert!(res.point.distance(&oracle) <= 1e-4, "{:e}", res.point.distance(&oracle));
}

#[test]
fn min_norm_rejects_maps_and_partial_spaces() {
    let prob = ProblemInstance::new(
        ConvexSet::new_ball(v(&[0.0, 0.0]), 1.0).unwrap(),
        vec![],
        vec![IsmOperator::affine(Matrix::identity(2), v(&[1.0, 1.0])).unwrap()],
        vec![],
        v(&[0.0, 0.0]),
        None,
    )
    .unwrap();
    assert!(solve_with(&prob, &SolverParams::with_variant(Variant::MinNormCor32), &sequential()).is_err());
}
