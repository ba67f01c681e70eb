//! A worked pair of equivalent models over `Q`, used by tests, the CLI
//! documentation and the FFI examples.

use crate::arith::{ratio, rat, Rational};
use crate::linalg::Mat4Q;
use crate::model::{CurveSextic, Model, QuadForm6, Transform};

/// `f0, …, f6` of `f = -28x^6 + 84x^5 - 323x^4 + 506x^3 - 471x^2 + 232x - 60`.
pub const EXAMPLE_CURVE: [i64; 7] = [-60, 232, -471, 506, -323, 84, -28];

pub const EXAMPLE_LAMBDA_1: i64 = 42336;

pub const EXAMPLE_H_1: [i64; 21] = [
    25128, 24480, 14031, 15408, 13959, 25407, 2232, -16407, 4464, -22815, 1161, 2329, 15282,
    7687, -19547, -2304, -17838, -22590, -134, 41978, -99584,
];

pub const EXAMPLE_LAMBDA_2: i64 = 14;

pub const EXAMPLE_H_2: [i64; 21] = [
    0, 0, 1, 2, -1, 8, -7, -13, -12, -15, -20, -5, -2, -25, -59, -4, -14, -18, 17, -37, -11,
];

pub const EXAMPLE_P: [[i64; 4]; 4] =
    [[2, -19, 2, 5], [4, 4, -31, 38], [2, 2, 37, 40], [-7, -7, -14, 7]];

pub fn example_curve() -> CurveSextic {
    CurveSextic::new(EXAMPLE_CURVE.map(rat)).expect("example curve is smooth")
}

/// The large model `(42336, H_1)`.
pub fn example_model_1() -> Model {
    Model::new_unchecked(example_curve(), rat(EXAMPLE_LAMBDA_1), QuadForm6::from_i64(&EXAMPLE_H_1))
}

/// The reduced model `(14, H_2)`.
pub fn example_model_2() -> Model {
    Model::new_unchecked(example_curve(), rat(EXAMPLE_LAMBDA_2), QuadForm6::from_i64(&EXAMPLE_H_2))
}

/// `(1/3024, P)`, carrying the first model to the second.
pub fn example_transform() -> Transform {
    let c: Rational = ratio(1, 3024);
    Transform::new(c, Mat4Q::from_i64(EXAMPLE_P)).expect("example matrix is invertible")
}
