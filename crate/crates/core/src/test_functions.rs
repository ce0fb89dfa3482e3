//! Smooth test functions with analytic derivatives for weak-form functionals.

use crate::{Mat3, Vec3};

/// A real field on velocity space, evaluated pointwise.
pub trait ScalarField: Sync {
    fn value(&self, v: &Vec3) -> f64;

    /// `(sum_k value(base + sign d_k), sum_k |value(base + sign d_k)|)`.
    fn sum_along(&self, base: &Vec3, offsets: &[Vec3], sign: f64) -> (f64, f64) {
        offsets.iter().fold((0.0, 0.0), |(s, a), d| {
            let x = self.value(&(base + d * sign));
            (s + x, a + x.abs())
        })
    }

    /// Closed ball `(center, radius)` outside of which the field vanishes.
    fn support(&self) -> Option<(Vec3, f64)> {
        None
    }
}

/// Test functions used by the weak-form evaluators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// `phi = c`
    Constant(f64),
    /// `phi = v_axis`
    Coordinate(usize),
    /// `phi = |v|^2`
    KineticEnergy,
    /// `phi = (1 - |v - c|^2 / r^2)^4` inside the ball, 0 outside.
    Bump { center: Vec3, radius: f64 },
    /// `phi = exp(-|v - c|^2 / (2 w^2))`
    Gaussian { center: Vec3, width: f64 },
}

impl TestFunction {
    /// The five collision invariants `1, v1, v2, v3, |v|^2`.
    pub fn invariants() -> [TestFunction; 5] {
        [
            TestFunction::Constant(1.0),
            TestFunction::Coordinate(0),
            TestFunction::Coordinate(1),
            TestFunction::Coordinate(2),
            TestFunction::KineticEnergy,
        ]
    }

    /// Short tag used in reports.
    pub fn id(&self) -> String {
        match self {
            TestFunction::Constant(c) => format!("const({c})"),
            TestFunction::Coordinate(a) => format!("v{}", a + 1),
            TestFunction::KineticEnergy => "v2".to_string(),
            TestFunction::Bump { center, radius } => {
                format!("bump({},{},{};{})", center.x, center.y, center.z, radius)
            }
            TestFunction::Gaussian { center, width } => {
                format!("gauss({},{},{};{})", center.x, center.y, center.z, width)
            }
        }
    }

    #[inline]
    pub fn eval(&self, v: &Vec3) -> f64 {
        match *self {
            TestFunction::Constant(c) => c,
            TestFunction::Coordinate(a) => v[a],
            TestFunction::KineticEnergy => v.norm_squared(),
            TestFunction::Bump { center, radius } => {
                let s = 1.0 - (v - center).norm_squared() / (radius * radius);
                if s > 0.0 {
                    let s2 = s * s;
                    s2 * s2
                } else {
                    0.0
                }
            }
            TestFunction::Gaussian { center, width } => {
                (-(v - center).norm_squared() / (2.0 * width * width)).exp()
            }
        }
    }

    pub fn gradient(&self, v: &Vec3) -> Vec3 {
        match *self {
            TestFunction::Constant(_) => Vec3::zeros(),
            TestFunction::Coordinate(a) => {
                let mut g = Vec3::zeros();
                g[a] = 1.0;
                g
            }
            TestFunction::KineticEnergy => 2.0 * v,
            TestFunction::Bump { center, radius } => {
                let r2 = radius * radius;
                let w = v - center;
                let s = 1.0 - w.norm_squared() / r2;
                if s > 0.0 {
                    w * (-8.0 * s * s * s / r2)
                } else {
                    Vec3::zeros()
                }
            }
            TestFunction::Gaussian { center, width } => {
                let w = v - center;
                w * (-self.eval(v) / (width * width))
            }
        }
    }

    pub fn hessian(&self, v: &Vec3) -> Mat3 {
        match *self {
            TestFunction::Constant(_) | TestFunction::Coordinate(_) => Mat3::zeros(),
            TestFunction::KineticEnergy => 2.0 * Mat3::identity(),
            TestFunction::Bump { center, radius } => {
                let r2 = radius * radius;
                let w = v - center;
                let s = 1.0 - w.norm_squared() / r2;
                if s > 0.0 {
                    Mat3::identity() * (-8.0 * s * s * s / r2)
                        + w * w.transpose() * (48.0 * s * s / (r2 * r2))
                } else {
                    Mat3::zeros()
                }
            }
            TestFunction::Gaussian { center, width } => {
                let w = v - center;
                let w2 = width * width;
                (w * w.transpose() / (w2 * w2) - Mat3::identity() / w2) * self.eval(v)
            }
        }
    }

    pub fn support_radius(&self) -> Option<f64> {
        match self {
            TestFunction::Bump { radius, .. } => Some(*radius),
            _ => None,
        }
    }
}

impl ScalarField for TestFunction {
    #[inline]
    fn value(&self, v: &Vec3) -> f64 {
        self.eval(v)
    }

    // Dispatch once per batch instead of once per point.
    fn sum_along(&self, base: &Vec3, offsets: &[Vec3], sign: f64) -> (f64, f64) {
        match *self {
            TestFunction::Constant(c) => {
                let (mut s, mut a) = (0.0, 0.0);
                for _ in offsets {
                    s += c;
                    a += c.abs();
                }
                (s, a)
            }
            TestFunction::Coordinate(axis) => {
                let (b, mut s, mut a) = (base[axis], 0.0, 0.0);
                for d in offsets {
                    let x = b + d[axis] * sign;
                    s += x;
                    a += x.abs();
                }
                (s, a)
            }
            TestFunction::KineticEnergy => {
                let (mut s, mut a) = (0.0, 0.0);
                for d in offsets {
                    let x = (base + d * sign).norm_squared();
                    s += x;
                    a += x;
                }
                (s, a)
            }
            _ => {
                let (mut s, mut a) = (0.0, 0.0);
                for d in offsets {
                    let x = self.eval(&(base + d * sign));
                    s += x;
                    a += x.abs();
                }
                (s, a)
            }
        }
    }

    fn support(&self) -> Option<(Vec3, f64)> {
        match self {
            TestFunction::Bump { center, radius } => Some((*center, *radius)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all() -> Vec<TestFunction> {
        let mut v = TestFunction::invariants().to_vec();
        v.push(TestFunction::Bump {
            center: Vec3::new(0.3, -0.2, 0.1),
            radius: 1.5,
        });
        v.push(TestFunction::Gaussian {
            center: Vec3::new(-0.5, 0.0, 0.4),
            width: 0.8,
        });
        v
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let step = 1e-4;
        let points = [
            Vec3::new(0.1, 0.2, -0.3),
            Vec3::new(-0.7, 0.9, 0.5),
            Vec3::new(1.0, -0.4, 0.2),
        ];
        for phi in all() {
            for v in &points {
                let g = phi.gradient(v);
                let h = phi.hessian(v);
                for a in 0..3 {
                    let mut e = Vec3::zeros();
                    e[a] = step;
                    let fd = (phi.eval(&(v + e)) - phi.eval(&(v - e))) / (2.0 * step);
                    assert!((fd - g[a]).abs() < 1e-5, "{} grad {a}", phi.id());
                    let fd_g = (phi.gradient(&(v + e)) - phi.gradient(&(v - e))) / (2.0 * step);
                    for b in 0..3 {
                        assert!((fd_g[b] - h[(b, a)]).abs() < 1e-5, "{} hess", phi.id());
                    }
                }
            }
        }
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let phi = TestFunction::Bump {
            center: Vec3::zeros(),
            radius: 1.0,
        };
        let v = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(phi.eval(&v), 0.0);
        assert_eq!(phi.gradient(&v), Vec3::zeros());
        assert_eq!(phi.hessian(&(2.0 * v)), Mat3::zeros());
        assert_eq!(phi.eval(&Vec3::zeros()), 1.0);
    }
}
