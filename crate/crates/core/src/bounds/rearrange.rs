//! Shell-wise `L^p` spherical averages (radial rearrangements).

use gauss_quad::GaussLegendre;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

use crate::grid::Distribution;
use crate::{Error, Result, Vec3};

/// Values of a radial function on a list of shells.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    /// `(4 pi sum_s w_s r_s^2 value_s^p)^{1/p}` for radial quadrature weights
    /// `w_s` matching `radii`; `p = inf` gives the largest value.
    pub fn lp_norm(&self, weights: &[f64], p: f64) -> Result<f64> {
        if weights.len() != self.radii.len() {
            return Err(Error::InvalidArgument("one weight per shell required".into()));
        }
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        if p.is_infinite() {
            return Ok(self.values.iter().fold(0.0, |m, v| m.max(*v)));
        }
        let sum: f64 = self
            .radii
            .iter()
            .zip(&self.values)
            .zip(weights)
            .map(|((r, v), w)| w * r * r * v.powf(p))
            .sum();
        Ok((4.0 * PI * sum).powf(1.0 / p))
    }
}

/// Gauss-Legendre shells on `(0, r_max)`: radii and weights.
pub fn gl_shells(r_max: f64, count: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let count = NonZeroUsize::new(count)
        .ok_or_else(|| Error::InvalidArgument("need at least one shell".into()))?;
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::InvalidArgument(format!("bad radius {r_max}")));
    }
    let rule = GaussLegendre::new(count);
    Ok(rule
        .iter()
        .map(|(x, w)| (0.5 * r_max * (x + 1.0), 0.5 * r_max * w))
        .unzip())
}

/// `(1/|S^2| int_{S^2} |f(r sigma)|^p dsigma)^{1/p}` on each shell, using a
/// Gauss-Legendre rule in `cos(theta)` times a uniform rule in `phi`, each
/// with `sphere_quad` nodes. `f` is read by trilinear interpolation. For
/// `p = inf` the largest sample is returned.
pub fn radial_rearrangement(
    f: &Distribution,
    p: f64,
    shells: &[f64],
    sphere_quad: usize,
) -> Result<RadialProfile> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    let limit = 3f64.sqrt() * f.grid().v_max();
    for pair in shells.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::InvalidArgument("shell radii must increase".into()));
        }
    }
    if let Some(r) = shells.iter().find(|r| !(**r > 0.0 && **r <= limit)) {
        return Err(Error::InvalidArgument(format!(
            "shell radius {r} outside (0, {limit}]"
        )));
    }
    let count = NonZeroUsize::new(sphere_quad)
        .ok_or_else(|| Error::InvalidArgument("sphere rule needs nodes".into()))?;
    let rule = GaussLegendre::new(count);
    let polar: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    let directions: Vec<(Vec3, f64)> = polar
        .iter()
        .flat_map(|&(c, w)| {
            let s = (1.0 - c * c).max(0.0).sqrt();
            (0..sphere_quad).map(move |k| {
                let phi = 2.0 * PI * (k as f64 + 0.5) / sphere_quad as f64;
                (Vec3::new(s * phi.cos(), s * phi.sin(), c), 0.5 * w / sphere_quad as f64)
            })
        })
        .collect();
    let values = shells
        .iter()
        .map(|&r| {
            if p.is_infinite() {
                directions
                    .iter()
                    .map(|(d, _)| f.interpolate(&(d * r)))
                    .fold(0.0, f64::max)
            } else {
                let avg: f64 = directions
                    .iter()
                    .map(|(d, w)| w * f.interpolate(&(d * r)).powf(p))
                    .sum();
                avg.powf(1.0 / p)
            }
        })
        .collect();
    Ok(RadialProfile {
        radii: shells.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use approx::assert_relative_eq;

    #[test]
    fn radial_data_is_unchanged() {
        // Trilinear interpolation of exp(-|v|^2/4) is off by about
        // 3 (h^2 / 8) |f''| / f <= 3 h^2 / 16 relative, 1.3% at h = 8/31.
        let g = GridSpec::new(32, 4.0).unwrap();
        let f = Distribution::from_fn(g, |v| (-0.25 * v.norm_squared()).exp()).unwrap();
        let shells = [0.5, 1.0, 1.5, 2.0];
        let prof = radial_rearrangement(&f, 2.0, &shells, 12).unwrap();
        for (r, v) in shells.iter().zip(&prof.values) {
            assert_relative_eq!(*v, (-0.25 * r * r).exp(), max_relative = 0.015);
        }
    }

    #[test]
    fn coordinate_field_spherical_average() {
        // Shift so the field is nonnegative on the shells used: f = 3 + u1.
        // The L^2 average of 3 + r x1 over the sphere is sqrt(9 + r^2 / 3).
        let g = GridSpec::new(8, 3.0).unwrap();
        let f = Distribution::from_fn(g, |v| 3.0 + v.x).unwrap();
        let shells = [0.4, 1.1, 2.0];
        let prof = radial_rearrangement(&f, 2.0, &shells, 10).unwrap();
        for (r, v) in shells.iter().zip(&prof.values) {
            assert_relative_eq!(*v, (9.0 + r * r / 3.0).sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_shells() {
        let g = GridSpec::new(8, 1.0).unwrap();
        let f = Distribution::zeros(g);
        assert!(radial_rearrangement(&f, 2.0, &[0.0], 4).is_err());
        assert!(radial_rearrangement(&f, 2.0, &[0.5, 0.4], 4).is_err());
        assert!(radial_rearrangement(&f, 2.0, &[2.0], 4).is_err());
        assert!(radial_rearrangement(&f, 0.5, &[0.5], 4).is_err());
    }

    #[test]
    fn shell_rule_integrates_r_squared() {
        let (r, w) = gl_shells(2.0, 6).unwrap();
        let prof = RadialProfile {
            radii: r.clone(),
            values: vec![1.0; r.len()],
        };
        assert_relative_eq!(prof.lp_norm(&w, 1.0).unwrap(), 4.0 * PI * 8.0 / 3.0, max_relative = 1e-13);
    }
}
