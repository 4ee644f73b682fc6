//! Instances whose limit `P_F x0` is known in closed form.

use crate::linalg::{Matrix, Vector};
use crate::operators::{Bifunction, IsmOperator, NonexpansiveMap};
use crate::params::{AlphaSchedule, RSchedule, SolverParams, Variant};
use crate::problem::ProblemInstance;
use crate::sets::{AffineSubspace, ConvexSet};

#[derive(Debug, Clone)]
pub struct RegressionCase {
    pub name: &'static str,
    pub problem: ProblemInstance,
    pub params: SolverParams,
    pub expected: Vector,
}

fn v(c: &[f64]) -> Vector {
    Vector::new(c.to_vec()).expect("finite literal")
}

fn projection(set: ConvexSet) -> NonexpansiveMap {
    NonexpansiveMap::projection(set).expect("valid projection")
}

fn hyperplane_residual(normal: &Vector, offset: f64) -> IsmOperator {
    let plane = AffineSubspace::hyperplane(normal, offset).expect("nonzero normal");
    IsmOperator::residual_of(projection(ConvexSet::Affine(plane))).expect("certified")
}

/// `x0 = 1`, `S = 0`, `α_n = 0`: the iterates are exactly `2^-n`.
pub fn shrinking_line() -> RegressionCase {
    let zero = NonexpansiveMap::affine(Matrix::zeros(1, 1), Vector::zeros(1)).expect("zero map");
    RegressionCase {
        name: "shrinking-line",
        problem: ProblemInstance::new(ConvexSet::whole_space(1), vec![], vec![], vec![zero], v(&[1.0]), Some(v(&[0.0])))
            .expect("valid instance"),
        params: SolverParams {
            alpha: AlphaSchedule::Constant(0.0),
            ..Default::default()
        },
        expected: v(&[0.0]),
    }
}

/// Common fixed points of the projections onto `B((0,0),1)` and `B((1,0),1)`.
/// From `(2, 1.5)` the nearest point of the lens is `(0.8, 0.6)`, the
/// projection onto the first disc, which already lies in the second.
pub fn two_balls_with(alpha: f64) -> RegressionCase {
    let b1 = ConvexSet::new_ball(v(&[0.0, 0.0]), 1.0).expect("ball");
    let b2 = ConvexSet::new_ball(v(&[1.0, 0.0]), 1.0).expect("ball");
    RegressionCase {
        name: "two-balls",
        problem: ProblemInstance::new(
            ConvexSet::whole_space(2),
            vec![],
            vec![],
            vec![projection(b1), projection(b2)],
            v(&[2.0, 1.5]),
            Some(v(&[0.5, 0.0])),
        )
        .expect("valid instance"),
        params: SolverParams {
            alpha: AlphaSchedule::Constant(alpha),
            variant: Variant::FixedPointOnlyCor36,
            ..Default::default()
        },
        expected: v(&[0.8, 0.6]),
    }
}

pub fn two_balls() -> RegressionCase {
    two_balls_with(0.5)
}

/// Two bifunctions, two operators and two maps in R^5, pinning
/// `x1 = 0.5`, `x2 = -0.3`, `x3 = x4 = 0` inside `B(0, 1.5)`. From
/// `x0 = (0.7, 0, 0.3, -0.2, 2)` the limit is `(0.5, -0.3, 0, 0, sqrt(1.91))`.
pub fn mixed_five() -> RegressionCase {
    let d = 5;
    let e = |i: usize| Vector::basis(d, i);
    let set = ConvexSet::new_box(v(&[-2.0; 5]), v(&[2.0; 5])).expect("box");
    // <x1 - 0.5, y1 - x1>: equilibria have x1 = 0.5
    let f1 = Bifunction::linear(Matrix::outer(e(0).as_slice(), e(0).as_slice()), e(0).scaled(-0.5)).expect("monotone");
    // g(y) - g(x) with g(v) = v2^2 / 2 + 0.3 v2, minimized at v2 = -0.3
    let f2 = Bifunction::convex_difference(Matrix::outer(e(1).as_slice(), e(1).as_slice()), e(1).scaled(0.3)).expect("convex");
    let a1 = hyperplane_residual(&e(2), 0.0);
    let flat = ConvexSet::new_box(v(&[-10.0, -10.0, -10.0, 0.0, -10.0]), v(&[10.0, 10.0, 10.0, 0.0, 10.0]))
        .expect("box");
    let a2 = IsmOperator::residual_of(projection(flat)).expect("certified");
    let s1 = NonexpansiveMap::rotation(d, 1.0, (2, 3)).expect("rotation");
    let s2 = projection(ConvexSet::new_ball(Vector::zeros(d), 1.5).expect("ball"));
    RegressionCase {
        name: "mixed-five",
        problem: ProblemInstance::new(
            set,
            vec![f1, f2],
            vec![a1, a2],
            vec![s1, s2],
            v(&[0.7, 0.0, 0.3, -0.2, 2.0]),
            Some(v(&[0.5, -0.3, 0.0, 0.0, 1.0])),
        )
        .expect("valid instance"),
        params: SolverParams {
            alpha: AlphaSchedule::Constant(0.0),
            lambda: Some(0.9),
            r: RSchedule::Constant(10.0),
            ..Default::default()
        },
        expected: v(&[0.5, -0.3, 0.0, 0.0, 1.91f64.sqrt()]),
    }
}

/// `C = B(0,1)`, `A = I - P_{B(0,0.5)}`, `S = I`: the solution set is
/// `B(0, 0.5)` and from `(2, 0)` the limit is `(0.5, 0)`.
pub fn inner_ball() -> RegressionCase {
    let inner = projection(ConvexSet::new_ball(v(&[0.0, 0.0]), 0.5).expect("ball"));
    RegressionCase {
        name: "inner-ball",
        problem: ProblemInstance::new(
            ConvexSet::new_ball(v(&[0.0, 0.0]), 1.0).expect("ball"),
            vec![],
            vec![IsmOperator::residual_of(inner).expect("certified")],
            vec![NonexpansiveMap::identity(2).expect("identity")],
            v(&[2.0, 0.0]),
            Some(v(&[0.0, 0.0])),
        )
        .expect("valid instance"),
        params: SolverParams::with_variant(Variant::SimplifiedAlg34),
        expected: v(&[0.5, 0.0]),
    }
}

/// Two slab projections whose common fixed points form `[-1,0]^2`.
pub fn corner_box() -> RegressionCase {
    let s1 = projection(ConvexSet::new_box(v(&[-1.0, -10.0]), v(&[0.0, 10.0])).expect("box"));
    let s2 = projection(ConvexSet::new_box(v(&[-10.0, -1.0]), v(&[10.0, 0.0])).expect("box"));
    RegressionCase {
        name: "corner-box",
        problem: ProblemInstance::new(
            ConvexSet::whole_space(2),
            vec![],
            vec![],
            vec![s1, s2],
            v(&[1.0, 1.0]),
            Some(v(&[-0.5, -0.5])),
        )
        .expect("valid instance"),
        params: SolverParams {
            alpha: AlphaSchedule::Constant(0.0),
            ..Default::default()
        },
        expected: v(&[0.0, 0.0]),
    }
}

/// Unit ball and the half-space `<a, x> <= 0.3` (unit `a` along the
/// diagonal) in R^10, solved as a variational inequality over the ball with
/// `A = I - P_H`, plus the projection onto a larger ball as a map.
pub fn ball_halfspace_ten() -> RegressionCase {
    let d = 10;
    let a = Vector::new(vec![1.0 / (d as f64).sqrt(); d]).expect("finite");
    let b = 0.3;
    let x0 = Vector::new((0..d).map(|i| if i < 3 { 2.0 } else { 0.25 * i as f64 }).collect()).expect("finite");
    let half = ConvexSet::new_halfspace(a.clone(), b).expect("half-space");
    let ball = ConvexSet::new_ball(Vector::zeros(d), 1.0).expect("ball");
    let big = projection(ConvexSet::new_ball(Vector::zeros(d), 2.0).expect("ball"));
    RegressionCase {
        name: "ball-halfspace-ten",
        problem: ProblemInstance::new(
            ball,
            vec![],
            vec![IsmOperator::residual_of(projection(half)).expect("certified")],
            vec![big],
            x0.clone(),
            Some(Vector::zeros(d)),
        )
        .expect("valid instance"),
        params: SolverParams::default(),
        expected: ball_halfspace_projection(&x0, &a, b),
    }
}

/// Projection onto `{|x| <= 1} ∩ {<a, x> <= b}` for unit `a`, `|b| < 1`.
pub fn ball_halfspace_projection(x0: &Vector, a: &Vector, b: f64) -> Vector {
    let on_ball = if x0.norm() > 1.0 { x0.scaled(1.0 / x0.norm()) } else { x0.clone() };
    if on_ball.inner(a).expect("same dim") <= b {
        return on_ball;
    }
    let s = x0.inner(a).expect("same dim");
    let on_plane = x0.add_scaled(b - s, a);
    if on_plane.norm() <= 1.0 {
        return on_plane;
    }
    // nearest point of the rim circle: centre b a, radius sqrt(1 - b^2)
    let w = x0.add_scaled(-s, a);
    a.scaled(b).add_scaled((1.0 - b * b).sqrt() / w.norm(), &w)
}

/// The full set used for limit, monotonicity and determinism checks.
pub fn regression_set() -> Vec<RegressionCase> {
    vec![
        shrinking_line(),
        two_balls(),
        mixed_five(),
        inner_ball(),
        corner_box(),
        ball_halfspace_ten(),
    ]
}

/// `A_i x = <a_i, x> a_i - beta_i a_i` for the first `count` coordinate
/// directions of a rotated orthonormal frame in R^dim, run through the
/// min-norm variant.
pub fn min_norm_system(dim: usize, betas: &[f64], x0: Vector) -> RegressionCase {
    assert!(betas.len() <= dim, "more equations than dimensions");
    let frame = rotated_frame(dim);
    let ops = betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| hyperplane_residual(&frame[i], beta))
        .collect();
    // x0-nearest solution: correct x0 along each a_i
    let mut expected = x0.clone();
    for (i, &beta) in betas.iter().enumerate() {
        let s = x0.inner(&frame[i]).expect("same dim");
        expected = expected.add_scaled(beta - s, &frame[i]);
    }
    RegressionCase {
        name: "min-norm-system",
        problem: ProblemInstance::new(ConvexSet::whole_space(dim), vec![], ops, vec![], x0, None)
            .expect("valid instance"),
        params: SolverParams {
            mu: Some(0.95),
            ..SolverParams::with_variant(Variant::MinNormCor32)
        },
        expected,
    }
}

/// Orthonormal rows of a product of plane rotations.
pub fn rotated_frame(dim: usize) -> Vec<Vector> {
    let mut rows: Vec<Vec<f64>> = (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for p in 0..dim.saturating_sub(1) {
        let theta = 0.3 + 0.4 * p as f64;
        let (s, c) = theta.sin_cos();
        for row in rows.iter_mut() {
            let (a, b) = (row[p], row[p + 1]);
            row[p] = c * a - s * b;
            row[p + 1] = s * a + c * b;
        }
    }
    rows.into_iter().map(|r| Vector::new(r).expect("finite")).collect()
}
