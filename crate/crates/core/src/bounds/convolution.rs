//! Bounds on `int int f f_* |v - v_*|^alpha`.
//!
//! * `0 <= alpha <= k`: the double integral is at most `2^k ||f||_1 ||f||_{L^1_k}`.
//! * `alpha < 0`: split `|u|^alpha` at `|u| = 1`; Young's inequality with
//!   `h1 = |u|^alpha 1_{|u| <= 1}` gives `||f||_1^2 + C ||f||_p^2`,
//!   `C = ||h1||_{L^{p'/2}}`, which needs `p' >= 2` and `alpha p' > -6`.

use gauss_quad::GaussLegendre;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

use super::{conjugate, VerificationRecord};
use crate::grid::Distribution;
use crate::{Error, Result};

pub const CONVOLUTION_ID: &str = "convolution_moment";

/// `int f (1 + |v|^2)^{k/2}`.
pub fn weighted_l1(f: &Distribution, k: f64) -> f64 {
    let grid = f.grid();
    let sum: f64 = f
        .values()
        .iter()
        .zip(grid.nodes())
        .map(|(&v, x)| v * (1.0 + x.norm_squared()).powf(0.5 * k))
        .sum();
    sum * grid.cell_volume()
}

/// `int_{|v| <= 1} |v|^s dv` by composite Gauss-Legendre quadrature in the
/// radius on dyadic shells `[2^{-m-1}, 2^{-m}]`, which resolves the
/// singularity at the origin for `s > -3`.
pub fn unit_ball_power_integral(s: f64) -> Result<f64> {
    if s.is_nan() || s <= -3.0 {
        return Err(Error::InvalidArgument(format!(
            "|v|^{s} is not integrable at the origin"
        )));
    }
    let rule = GaussLegendre::new(NonZeroUsize::new(12).expect("nonzero"));
    let radial = |r: f64| r.powf(s + 2.0);
    let mut total = 0.0;
    let mut hi = 1.0f64;
    // Each shell contributes a factor 2^{-(s+3)} less than the previous one;
    // stop once the remaining geometric tail is below rounding.
    let ratio = 0.5f64.powf(s + 3.0);
    loop {
        let lo = 0.5 * hi;
        let piece = rule.integrate(lo, hi, radial);
        total += piece;
        let tail = piece * ratio / (1.0 - ratio);
        if tail <= 1e-17 * total || lo < 1e-300 {
            total += tail;
            break;
        }
        hi = lo;
    }
    Ok(4.0 * PI * total)
}

/// Discrete double sum `(h^3)^2 sum f_i f_j |v_i - v_j|^alpha`; the diagonal is
/// included for `alpha >= 0` (where `|0|^0 = 1`) and excluded for `alpha < 0`.
fn pair_moment(f: &Distribution, alpha: f64) -> f64 {
    let grid = *f.grid();
    let n = grid.n() as isize;
    let values = f.values();
    let mut total = 0.0;
    for oz in -(n - 1)..n {
        for oy in -(n - 1)..n {
            for ox in -(n - 1)..n {
                let zero = ox == 0 && oy == 0 && oz == 0;
                if zero && alpha < 0.0 {
                    continue;
                }
                let r = ((ox * ox + oy * oy + oz * oz) as f64).sqrt() * grid.h();
                let weight = if zero { if alpha == 0.0 { 1.0 } else { 0.0 } } else { r.powf(alpha) };
                if weight == 0.0 {
                    continue;
                }
                let o = [ox, oy, oz];
                let lo: [isize; 3] = std::array::from_fn(|a| 0.max(o[a]));
                let hi: [isize; 3] = std::array::from_fn(|a| (n - 1).min(n - 1 + o[a]));
                let mut sum = 0.0;
                for iz in lo[2]..=hi[2] {
                    for iy in lo[1]..=hi[1] {
                        let i0 = grid.index(0, iy as usize, iz as usize);
                        let j0 = grid.index(0, (iy - oy) as usize, (iz - oz) as usize);
                        for ix in lo[0]..=hi[0] {
                            sum += values[i0 + ix as usize] * values[j0 + (ix - ox) as usize];
                        }
                    }
                }
                total += weight * sum;
            }
        }
    }
    total * grid.cell_volume().powi(2)
}

/// Checks the moment bound for `(alpha, p, k)`; `p` is used only when
/// `alpha < 0` and `k` only when `alpha >= 0`.
pub fn check_convolution_bound(
    f: &Distribution,
    alpha: f64,
    p: f64,
    k: f64,
    trial_seed: u64,
) -> Result<VerificationRecord> {
    if alpha.is_nan() {
        return Err(Error::InvalidArgument("alpha is NaN".into()));
    }
    let l1 = f.lp_norm(1.0)?;
    let lhs = pair_moment(f, alpha);
    let (rhs, inputs) = if alpha >= 0.0 {
        if !(k >= 1.0 && alpha <= k) {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= k and alpha <= k, got alpha={alpha}, k={k}"
            )));
        }
        (
            2f64.powf(k) * l1 * weighted_l1(f, k),
            format!("n={} alpha={alpha} k={k}", f.grid().n()),
        )
    } else {
        let pc = conjugate(p);
        if !(p > 1.0 && pc >= 2.0) {
            return Err(Error::InvalidArgument(format!(
                "need 1 < p <= 2 for alpha < 0, got p={p}"
            )));
        }
        if alpha * pc <= -6.0 {
            return Err(Error::InvalidArgument(format!(
                "|v|^alpha not in L^(p'/2) near 0: alpha p' = {}",
                alpha * pc
            )));
        }
        let c = unit_ball_power_integral(0.5 * alpha * pc)?.powf(2.0 / pc);
        let lp = f.lp_norm(p)?;
        (
            l1 * l1 + c * lp * lp,
            format!("n={} alpha={alpha} p={p} C={c}", f.grid().n()),
        )
    };
    Ok(VerificationRecord::new(CONVOLUTION_ID, trial_seed, lhs, rhs, inputs))
}
