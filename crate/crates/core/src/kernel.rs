//! The concentrated kernel `g_eps`.
//!
//! For relative speed `x = |u|` the kernel is a Dirac mass in `cos(theta)` at
//! `mu_eps(x) = 1 - m_eps(x)` with `m_eps(x) = min{2, eps x^gamma}`, scaled so
//! that its integral over the unit sphere is `8 / eps`.

use std::f64::consts::PI;

use crate::{Error, Result};

/// The pair `(eps, gamma)` that defines `g_eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    eps: f64,
    gamma: f64,
}

impl KernelParams {
    /// Requires `eps > 0` and `-3 <= gamma < 0`.
    pub fn new(eps: f64, gamma: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::InvalidKernel(format!("eps must be positive, got {eps}")));
        }
        if !((-3.0..0.0).contains(&gamma)) {
            return Err(Error::InvalidKernel(format!(
                "gamma must lie in [-3, 0), got {gamma}"
            )));
        }
        Ok(Self { eps, gamma })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `min{2, eps x^gamma}`, equal to 2 at `x = 0`.
    pub fn m_eps(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        if x == 0.0 {
            return 2.0;
        }
        (self.eps * x.powf(self.gamma)).min(2.0)
    }

    /// `1 - m_eps(x)`, the cosine of the scattering angle.
    pub fn mu_eps(&self, x: f64) -> f64 {
        1.0 - self.m_eps(x)
    }

    /// Scattering angle in `(0, pi]`.
    ///
    /// Computed from the half-angle form `sin^2(theta/2) = m/2`, which stays
    /// accurate for grazing angles where `acos(mu)` loses digits.
    pub fn theta_eps(&self, x: f64) -> f64 {
        let m = self.m_eps(x);
        if m >= 2.0 {
            PI
        } else {
            2.0 * (0.5 * m).sqrt().asin()
        }
    }

    /// Whether `x` lies in the forward-scattering window `eps x^gamma <= 1`.
    pub fn is_active(&self, x: f64) -> bool {
        x > 0.0 && self.eps * x.powf(self.gamma) <= 1.0
    }

    /// Largest speed for which the collision is an exact velocity swap
    /// (`m_eps = 2`), i.e. `(eps/2)^{-1/gamma}`.
    pub fn swap_radius(&self) -> f64 {
        (0.5 * self.eps).powf(-1.0 / self.gamma)
    }

    /// Closed-form angular moment `beta_k[g_eps](|u|)` for real `k >= 2`.
    pub fn beta_k(&self, u_norm: f64, k: f64) -> Result<f64> {
        if u_norm.is_nan() || u_norm <= 0.0 {
            return Err(Error::ZeroRelativeVelocity);
        }
        if k.is_nan() || k < 2.0 {
            return Err(Error::InvalidArgument(format!("moment order must be >= 2, got {k}")));
        }
        if !self.is_active(u_norm) {
            return Ok(0.0);
        }
        let half = 0.5 * k;
        Ok(2f64.powf(2.0 - half) / PI
            * self.eps.powf(half - 1.0)
            * u_norm.powf(self.gamma * half))
    }

    /// Sphere mass of `g_eps`, the loss rate per unit mass: `8 / eps`.
    pub fn total_rate(&self) -> f64 {
        8.0 / self.eps
    }

    /// Height of the Dirac mass in `cos(theta)`, `4 / (pi eps)`.
    pub fn amplitude(&self) -> f64 {
        4.0 / (PI * self.eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k(eps: f64, gamma: f64) -> KernelParams {
        KernelParams::new(eps, gamma).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(KernelParams::new(0.0, -1.0).is_err());
        assert!(KernelParams::new(-1.0, -1.0).is_err());
        assert!(KernelParams::new(1.0, 0.0).is_err());
        assert!(KernelParams::new(1.0, -3.5).is_err());
        assert!(KernelParams::new(1.0, -3.0).is_ok());
    }

    #[test]
    fn concentration_location() {
        let p = k(1.0, -3.0);
        assert_eq!(p.m_eps(0.5), 2.0);
        assert_eq!(p.m_eps(2.0), 0.125);
        assert_eq!(p.m_eps(0.0), 2.0);
        assert_eq!(p.mu_eps(0.0), -1.0);
        assert_eq!(p.mu_eps(1.0), 0.0);
        assert!(p.mu_eps(1e6) > 1.0 - 1e-15);
    }

    #[test]
    fn scattering_angle() {
        let p = k(1.0, -3.0);
        assert_eq!(p.theta_eps(0.1), PI);
        assert_relative_eq!(p.theta_eps(1.0), PI / 2.0, max_relative = 1e-15);
        let eps = 2.0 * (0.05f64).sin().powi(2);
        assert_relative_eq!(k(eps, -2.0).theta_eps(1.0), 0.1, max_relative = 1e-13);
        for x in [0.3, 0.9, 1.1, 2.0, 7.0, 40.0] {
            let half = (0.5 * p.theta_eps(x)).sin();
            assert_relative_eq!(half * half, 0.5 * p.m_eps(x), max_relative = 1e-14);
        }
    }

    #[test]
    fn beta_closed_forms() {
        let p = k(0.5, -3.0);
        assert_relative_eq!(p.beta_k(1.0, 2.0).unwrap(), 2.0 / PI, max_relative = 1e-15);
        let q = k(0.02, -1.5);
        let u: f64 = 1.7;
        assert_relative_eq!(
            q.beta_k(u, 3.0).unwrap(),
            2f64.sqrt() / PI * q.eps().sqrt() * u.powf(1.5 * q.gamma()),
            max_relative = 1e-14
        );
        let r = k(1.5, -1.0);
        assert_eq!(r.beta_k(1.0, 2.0).unwrap(), 0.0);
        assert!(r.beta_k(0.0, 2.0).is_err());
        assert!(r.beta_k(1.0, 1.5).is_err());
    }

    #[test]
    fn rates() {
        assert_eq!(k(0.1, -1.0).total_rate(), 80.0);
        assert_eq!(k(8.0, -1.0).total_rate(), 1.0);
        assert_eq!(k(1.0, -1.0).total_rate(), 8.0);
    }

    #[test]
    fn swap_radius_is_the_m_equals_two_boundary() {
        let p = k(0.3, -2.0);
        let r = p.swap_radius();
        assert_relative_eq!(p.eps() * r.powf(p.gamma()), 2.0, max_relative = 1e-14);
        assert_eq!(p.m_eps(0.999 * r), 2.0);
        assert!(p.m_eps(1.001 * r) < 2.0);
    }
}
