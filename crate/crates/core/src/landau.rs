//! Weak form of the Landau operator and the grazing-limit comparison.

use rayon::prelude::*;

use crate::collision::{weak_form_q_detailed, QuadratureSpec};
use crate::grid::Distribution;
use crate::kernel::KernelParams;
use crate::test_functions::TestFunction;
use crate::{Error, Mat3, Result, Vec3};

/// `Pi(u) = I - u_hat u_hat^T`.
pub fn projector(u: &Vec3) -> Result<Mat3> {
    let u2 = u.norm_squared();
    if u2 == 0.0 || !u2.is_finite() {
        return Err(Error::ZeroRelativeVelocity);
    }
    Ok(Mat3::identity() - u * u.transpose() / u2)
}

/// Landau weak form split into the full value and the part coming from pairs
/// with `|u| <= 2h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandauWeakForm {
    pub value: f64,
    pub near_diagonal: f64,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (-3.0..0.0).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!("gamma must lie in [-3, 0), got {gamma}")))
    }
}

/// `int Q_L(f, f) phi` as the pair sum
///
/// ```text
/// (h^3)^2 sum_{i != j} f_i f_j |u|^gamma G_L(v_i, v_j)
/// G_L = -2 (grad phi_i - grad phi_j) . u + |u|^2 / 2 (D2 phi_i + D2 phi_j) : Pi(u)
/// ```
///
/// Diagonal pairs are excluded. `G_L` is symmetric in `(i, j)`, so each
/// unordered pair is visited once and counted twice.
pub fn weak_form_ql_detailed(f: &Distribution, phi: &TestFunction, gamma: f64) -> Result<LandauWeakForm> {
    check_gamma(gamma)?;
    let grid = *f.grid();
    let n = grid.n() as isize;
    let h = grid.h();
    let grads: Vec<Vec3> = grid.nodes().map(|v| phi.gradient(&v)).collect();
    let hess: Vec<Mat3> = grid.nodes().map(|v| phi.hessian(&v)).collect();
    let traces: Vec<f64> = hess.iter().map(|m| m.trace()).collect();
    let active: Vec<bool> = grads
        .iter()
        .zip(&hess)
        .map(|(g, m)| g.norm_squared() > 0.0 || m.norm_squared() > 0.0)
        .collect();
    let values = f.values();
    let near_cut = 2.0 * h * (1.0 + 1e-12);

    let slabs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|oz| {
            let mut total = 0.0;
            let mut near = 0.0;
            for oy in -(n - 1)..n {
                for ox in -(n - 1)..n {
                    if oz == 0 && (oy < 0 || (oy == 0 && ox <= 0)) {
                        continue;
                    }
                    let o = [ox, oy, oz];
                    let u = Vec3::new(ox as f64, oy as f64, oz as f64) * h;
                    let u2 = u.norm_squared();
                    let u_norm = u2.sqrt();
                    let weight = u_norm.powf(gamma);
                    let u_hat = u / u_norm;
                    let lo: [isize; 3] = std::array::from_fn(|a| 0.max(o[a]));
                    let hi: [isize; 3] = std::array::from_fn(|a| (n - 1).min(n - 1 + o[a]));
                    let mut sum = 0.0;
                    for iz in lo[2]..=hi[2] {
                        for iy in lo[1]..=hi[1] {
                            for ix in lo[0]..=hi[0] {
                                let i = grid.index(ix as usize, iy as usize, iz as usize);
                                let j = grid.index(
                                    (ix - ox) as usize,
                                    (iy - oy) as usize,
                                    (iz - oz) as usize,
                                );
                                if !(active[i] || active[j]) {
                                    continue;
                                }
                                let ff = values[i] * values[j];
                                if ff == 0.0 {
                                    continue;
                                }
                                let drift = -2.0 * (grads[i] - grads[j]).dot(&u);
                                let proj_i = traces[i] - u_hat.dot(&(hess[i] * u_hat));
                                let proj_j = traces[j] - u_hat.dot(&(hess[j] * u_hat));
                                let diffusion = 0.5 * u2 * (proj_i + proj_j);
                                sum += ff * (drift + diffusion);
                            }
                        }
                    }
                    let contribution = weight * sum;
                    total += contribution;
                    if u_norm <= near_cut {
                        near += contribution;
                    }
                }
            }
            (total, near)
        })
        .collect();
    let scale = 2.0 * grid.cell_volume().powi(2);
    let (total, near) = slabs
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    Ok(LandauWeakForm {
        value: total * scale,
        near_diagonal: near * scale,
    })
}

/// `int Q_L(f, f) phi`; see [`weak_form_ql_detailed`].
pub fn weak_form_ql(f: &Distribution, phi: &TestFunction, gamma: f64) -> Result<f64> {
    Ok(weak_form_ql_detailed(f, phi, gamma)?.value)
}

/// One row of the grazing-limit comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GrazingGapRecord {
    pub gamma: f64,
    pub eps: f64,
    pub weak_boltzmann: f64,
    pub weak_landau: f64,
    pub gap: f64,
    /// Landau contribution of pairs with `|u| <= 2h`.
    pub near_diagonal: f64,
    pub phi_id: String,
    pub f_id: String,
}

impl GrazingGapRecord {
    pub const HEADER: &'static str =
        "gamma,eps,weak_boltzmann,weak_landau,gap,near_diagonal,phi_id,f_id";

    pub fn to_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.gamma,
            self.eps,
            self.weak_boltzmann,
            self.weak_landau,
            self.gap,
            self.near_diagonal,
            self.phi_id.replace(',', ";"),
            self.f_id.replace(',', ";")
        )
    }
}

/// Compares the Boltzmann and Landau weak forms on a fixed `f` for each kernel
/// in `params_list`; all kernels must share `gamma`.
pub fn grazing_gap(
    f: &Distribution,
    f_id: &str,
    phi: &TestFunction,
    params_list: &[KernelParams],
    quad: &QuadratureSpec,
) -> Result<Vec<GrazingGapRecord>> {
    let first = params_list
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty kernel list".into()))?;
    let gamma = first.gamma();
    if params_list.iter().any(|p| p.gamma() != gamma) {
        return Err(Error::InvalidArgument("kernels must share gamma".into()));
    }
    let landau = weak_form_ql_detailed(f, phi, gamma)?;
    Ok(params_list
        .iter()
        .map(|p| {
            let wb = weak_form_q_detailed(f, phi, p, quad).value;
            GrazingGapRecord {
                gamma,
                eps: p.eps(),
                weak_boltzmann: wb,
                weak_landau: landau.value,
                gap: (wb - landau.value).abs(),
                near_diagonal: landau.near_diagonal,
                phi_id: phi.id(),
                f_id: f_id.to_string(),
            }
        })
        .collect())
}

/// Least-squares slope of `log gap` against `log eps`.
///
/// Returns `None` with fewer than two points or when a gap is not positive.
pub fn loglog_slope(records: &[GrazingGapRecord]) -> Option<f64> {
    if records.len() < 2 || records.iter().any(|r| !(r.gap > 0.0) || !(r.eps > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.eps.ln(), r.gap.ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn projector_properties() {
        let p = projector(&Vec3::x()).unwrap();
        assert_eq!(p, Mat3::from_diagonal(&Vec3::new(0.0, 1.0, 1.0)));
        let u = Vec3::new(0.3, -1.2, 2.2);
        let p = projector(&u).unwrap();
        assert!((p * u).norm() < 1e-14);
        assert!((p * p - p).norm() < 1e-14);
        assert!((p.trace() - 2.0).abs() < 1e-14);
        assert!(projector(&Vec3::zeros()).is_err());
    }

    #[test]
    fn invariants_give_zero() {
        let grid = GridSpec::new(8, 2.0).unwrap();
        let f = Distribution::maxwellian(grid, 1.0, Vec3::new(0.2, 0.0, 0.0), 0.6).unwrap();
        for phi in TestFunction::invariants() {
            let w = weak_form_ql_detailed(&f, &phi, -2.0).unwrap();
            assert!(w.value.abs() < 1e-12, "{}: {}", phi.id(), w.value);
        }
        assert!(weak_form_ql(&f, &TestFunction::KineticEnergy, 0.5).is_err());
    }

    #[test]
    fn slope_of_power_law() {
        let recs: Vec<_> = [0.4, 0.2, 0.1]
            .iter()
            .map(|&eps| GrazingGapRecord {
                gamma: -1.0,
                eps,
                weak_boltzmann: 0.0,
                weak_landau: 0.0,
                gap: 3.0 * f64::powf(eps, 0.7),
                near_diagonal: 0.0,
                phi_id: String::new(),
                f_id: String::new(),
            })
            .collect();
        assert!((loglog_slope(&recs).unwrap() - 0.7).abs() < 1e-12);
        assert!(loglog_slope(&recs[..1]).is_none());
    }
}
