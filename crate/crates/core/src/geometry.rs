//! Scattering directions and the pre/post-collision velocity maps.

use std::f64::consts::PI;

use crate::{Error, Mat3, Result, Vec3};

/// Unit-norm tolerance accepted by [`post_collision`].
pub const SIGMA_TOL: f64 = 1e-10;

/// Orthonormal triple `(u_hat, j_hat, k_hat)` with `k_hat = j_hat x u_hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringFrame {
    pub u_hat: Vec3,
    pub j_hat: Vec3,
    pub k_hat: Vec3,
}

impl ScatteringFrame {
    /// Builds the frame from `j = e1 - u_hat (u_hat . e1)`, normalized, or from
    /// `e2` when `u_hat` is within `1e-12` of `+-e1`.
    pub fn of(u: &Vec3) -> Result<Self> {
        let norm = u.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroRelativeVelocity);
        }
        let u_hat = u / norm;
        let project = |e: Vec3| e - u_hat * u_hat.dot(&e);
        let mut j = project(Vec3::x());
        if j.norm() < 1e-12 {
            j = project(Vec3::y());
        }
        let j_hat = j.normalize();
        let k_hat = j_hat.cross(&u_hat);
        Ok(Self { u_hat, j_hat, k_hat })
    }

    /// `u_hat cos(theta) + (j_hat cos(phi) + k_hat sin(phi)) sin(theta)`.
    pub fn sigma(&self, theta: f64, phi: f64) -> Vec3 {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        self.u_hat * ct + (self.j_hat * cp + self.k_hat * sp) * st
    }
}

/// Two colliding velocities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionPair {
    pub v: Vec3,
    pub v_star: Vec3,
}

impl CollisionPair {
    pub fn new(v: Vec3, v_star: Vec3) -> Self {
        Self { v, v_star }
    }

    pub fn u(&self) -> Vec3 {
        self.v - self.v_star
    }

    pub fn u_norm(&self) -> f64 {
        self.u().norm()
    }
}

/// `(v', v_*') = (v + d, v_* - d)` with `d = (|u| sigma - u) / 2`.
pub fn post_collision(pair: &CollisionPair, sigma: &Vec3) -> Result<(Vec3, Vec3)> {
    let s = sigma.norm();
    if (s - 1.0).abs() > SIGMA_TOL {
        return Err(Error::NonUnitSigma(s));
    }
    let u = pair.u();
    let d = 0.5 * (sigma * u.norm() - u);
    Ok((pair.v + d, pair.v_star - d))
}

/// `(u+, u-) = ((u + |u| sigma) / 2, (u - |u| sigma) / 2)`.
pub fn u_plus_minus(u: &Vec3, sigma: &Vec3) -> (Vec3, Vec3) {
    let s = sigma * u.norm();
    (0.5 * (u + s), 0.5 * (u - s))
}

/// Node `k` of the `m`-point periodic trapezoid rule on `[-pi, pi)`.
#[inline]
pub fn phi_node(k: usize, m: usize) -> f64 {
    -PI + 2.0 * PI * k as f64 / m as f64
}

/// Displacements `v' - v` for every azimuthal node at scattering angle `theta`.
///
/// Evaluated as `|u| s (c e(phi) - s u_hat)` with `s, c = sin, cos(theta/2)`,
/// which equals `(|u| sigma - u) / 2` but keeps full relative accuracy at
/// small `theta`. The caller must ensure `u != 0`.
pub fn displacements(frame: &ScatteringFrame, u: &Vec3, theta: f64, m_phi: usize) -> Vec<Vec3> {
    let (s, c) = (0.5 * theta).sin_cos();
    let scale = u.norm() * s;
    (0..m_phi)
        .map(|k| {
            let (sp, cp) = phi_node(k, m_phi).sin_cos();
            scale * ((frame.j_hat * cp + frame.k_hat * sp) * c - frame.u_hat * s)
        })
        .collect()
}

/// Azimuthal integrals of `v' - v` over `phi in [-pi, pi]` at fixed `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AzimuthalMoments {
    /// `int (v' - v) dphi`
    pub first: Vec3,
    /// `int (v' - v) (v' - v)^T dphi`
    pub second: Mat3,
    /// `int |v' - v|^3 dphi`
    pub cubic: f64,
}

/// Trapezoid-rule azimuthal moments with `m_phi` nodes.
pub fn azimuthal_moments(u: &Vec3, theta: f64, m_phi: usize) -> Result<AzimuthalMoments> {
    if m_phi < 4 {
        return Err(Error::InvalidArgument(format!(
            "azimuthal rule needs at least 4 nodes, got {m_phi}"
        )));
    }
    let frame = ScatteringFrame::of(u)?;
    let w = 2.0 * PI / m_phi as f64;
    let mut first = Vec3::zeros();
    let mut second = Mat3::zeros();
    let mut cubic = 0.0;
    for d in displacements(&frame, u, theta, m_phi) {
        first += d * w;
        second += d * d.transpose() * w;
        cubic += d.norm().powi(3) * w;
    }
    Ok(AzimuthalMoments { first, second, cubic })
}

/// Closed forms of [`AzimuthalMoments`], with `s = sin(theta/2)`:
/// `-2 pi u s^2`, `pi s^4 (2 u u^T - |u|^2 Pi) + pi |u|^2 Pi s^2`, and
/// `2 pi |u|^3 s^3`.
pub fn azimuthal_moments_closed(u: &Vec3, theta: f64) -> Result<AzimuthalMoments> {
    let u2 = u.norm_squared();
    if u2 == 0.0 {
        return Err(Error::ZeroRelativeVelocity);
    }
    let s = (0.5 * theta).sin();
    let s2 = s * s;
    let pi_u = Mat3::identity() - u * u.transpose() / u2;
    Ok(AzimuthalMoments {
        first: -2.0 * PI * s2 * u,
        second: PI * s2 * s2 * (2.0 * u * u.transpose() - u2 * pi_u) + PI * u2 * s2 * pi_u,
        cubic: 2.0 * PI * u2.powf(1.5) * s2 * s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn frame_for_e3() {
        let f = ScatteringFrame::of(&Vec3::z()).unwrap();
        assert_eq!(f.j_hat, Vec3::x());
        assert_eq!(f.k_hat, -Vec3::y());
    }

    #[test]
    fn frame_fallback_along_e1() {
        for u in [Vec3::x(), -3.0 * Vec3::x()] {
            let f = ScatteringFrame::of(&u).unwrap();
            assert!(f.j_hat.dot(&f.u_hat).abs() < 1e-15);
            assert_relative_eq!(f.j_hat.norm(), 1.0, max_relative = 1e-15);
            assert_relative_eq!(f.k_hat.norm(), 1.0, max_relative = 1e-15);
        }
        assert!(ScatteringFrame::of(&Vec3::zeros()).is_err());
    }

    #[test]
    fn sigma_special_angles() {
        let f = ScatteringFrame::of(&Vec3::new(0.3, -1.0, 2.0)).unwrap();
        assert_eq!(f.sigma(0.0, 1.3), f.u_hat);
        for phi in [-PI, -0.4, 2.0] {
            assert!((f.sigma(PI, phi) + f.u_hat).norm() < 1e-15);
        }
        let g = ScatteringFrame::of(&Vec3::z()).unwrap();
        assert!((g.sigma(PI / 2.0, 0.0) - Vec3::x()).norm() < 1e-15);
    }

    #[test]
    fn identity_and_swap_collisions() {
        let pair = CollisionPair::new(Vec3::new(1.0, 2.0, -0.5), Vec3::new(-0.3, 0.1, 0.4));
        let u_hat = pair.u().normalize();
        let (a, b) = post_collision(&pair, &u_hat).unwrap();
        assert!((a - pair.v).norm() < 1e-15 && (b - pair.v_star).norm() < 1e-15);
        let (a, b) = post_collision(&pair, &-u_hat).unwrap();
        assert!((a - pair.v_star).norm() < 1e-15 && (b - pair.v).norm() < 1e-15);
        assert!(post_collision(&pair, &(1.01 * u_hat)).is_err());
    }

    #[test]
    fn u_halves_at_endpoints() {
        let u = Vec3::new(0.5, -2.0, 1.0);
        let u_hat = u.normalize();
        let (p, m) = u_plus_minus(&u, &u_hat);
        assert!((p - u).norm() < 1e-15 && m.norm() < 1e-15);
        let (p, m) = u_plus_minus(&u, &-u_hat);
        assert!(p.norm() < 1e-15 && (m - u).norm() < 1e-15);
    }

    #[test]
    fn azimuthal_moments_vanish_at_zero_angle() {
        let m = azimuthal_moments(&Vec3::new(1.0, 2.0, 3.0), 0.0, 16).unwrap();
        assert_eq!(m.first, Vec3::zeros());
        assert_eq!(m.second, Mat3::zeros());
        assert_eq!(m.cubic, 0.0);
        assert!(azimuthal_moments(&Vec3::x(), 1.0, 3).is_err());
    }

    #[test]
    fn azimuthal_moments_match_closed_forms() {
        let u = Vec3::new(-0.7, 1.9, 0.4);
        for theta in [0.01, 0.5, 1.7, 3.0, PI] {
            let q = azimuthal_moments(&u, theta, 16).unwrap();
            let c = azimuthal_moments_closed(&u, theta).unwrap();
            assert!((q.first - c.first).norm() <= 1e-12 * c.first.norm().max(1e-300) + 1e-15);
            assert!((q.second - c.second).norm() <= 1e-12 * c.second.norm());
            assert_relative_eq!(q.cubic, c.cubic, max_relative = 1e-12);
        }
    }
}
