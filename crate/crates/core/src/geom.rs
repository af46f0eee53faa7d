//! Small 3-vector helpers shared by the geometry and dynamics code.

use crate::scalar::Scalar;

/// A point or displacement in the robot base frame, meters.
pub type Point3<S> = [S; 3];

pub fn sub<S: Scalar>(a: Point3<S>, b: Point3<S>) -> Point3<S> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn dist_sq<S: Scalar>(a: Point3<S>, b: Point3<S>) -> S {
    let d = sub(a, b);
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

pub fn dist<S: Scalar>(a: Point3<S>, b: Point3<S>) -> S {
    dist_sq(a, b).sqrt()
}

pub fn is_finite<S: Scalar>(p: Point3<S>) -> bool {
    p.iter().all(|c| c.is_finite())
}
