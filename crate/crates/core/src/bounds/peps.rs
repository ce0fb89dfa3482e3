//! The bilinear sphere average `P_eps` and its radial reduction `B_eps`.
//!
//! `P_eps(eta, psi)(u) = int_{S^2} eta(u-) psi(u+) g_eps dsigma`, with
//! `u+- = (u +- |u| sigma) / 2`.
//!
//! `B_eps(eta, psi)(x) = (4 / (pi eps)) eta(a1) psi(a2) 1_{eps x^gamma <= 1}`
//! with `a1 = x sqrt((1 + mu)/2)`, `a2 = x sqrt((1 - mu)/2)`, `mu = mu_eps(x)`.
//! Here `eta` is paired with `a1 = |u+|`, while `P_eps` pairs `eta` with `u-`;
//! for radial arguments `P_eps(eta, psi)(u) = 2 pi B_eps(psi, eta)(|u|)` on the
//! window `eps |u|^gamma <= 1`.

use gauss_quad::GaussLegendre;
use rand::Rng;
use std::num::NonZeroUsize;

use super::VerificationRecord;
use crate::geometry::{phi_node, u_plus_minus, ScatteringFrame};
use crate::kernel::KernelParams;
use crate::test_functions::ScalarField;
use crate::{Error, Result, Vec3};

pub const B_EPS_ID: &str = "b_eps_lp";

/// Evaluates `P_eps(eta, psi)(u)` with an `m_phi`-point azimuthal rule.
pub fn p_eps_eval<E, P>(eta: &E, psi: &P, u: &Vec3, params: &KernelParams, m_phi: usize) -> Result<f64>
where
    E: ScalarField + ?Sized,
    P: ScalarField + ?Sized,
{
    if m_phi == 0 {
        return Err(Error::InvalidArgument("m_phi must be positive".into()));
    }
    let frame = ScatteringFrame::of(u)?;
    let theta = params.theta_eps(u.norm());
    let sum: f64 = (0..m_phi)
        .map(|k| {
            let sigma = frame.sigma(theta, phi_node(k, m_phi));
            let (plus, minus) = u_plus_minus(u, &sigma);
            eta.value(&minus) * psi.value(&plus)
        })
        .sum();
    Ok(params.total_rate() / m_phi as f64 * sum)
}

/// Evaluates `B_eps(eta, psi)(x)` for `x > 0`.
pub fn b_eps_1d(
    eta: impl Fn(f64) -> f64,
    psi: impl Fn(f64) -> f64,
    x: f64,
    params: &KernelParams,
) -> Result<f64> {
    if x.is_nan() || x <= 0.0 {
        return Err(Error::InvalidArgument(format!("B_eps needs x > 0, got {x}")));
    }
    if !params.is_active(x) {
        return Ok(0.0);
    }
    let mu = params.mu_eps(x);
    let a1 = x * (0.5 * (1.0 + mu)).sqrt();
    let a2 = x * (0.5 * (1.0 - mu)).sqrt();
    Ok(params.amplitude() * eta(a1) * psi(a2))
}

/// Continuous, piecewise-linear, nonnegative function on `[0, inf)` that
/// vanishes beyond its last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl RadialFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::InvalidArgument("need matching knots and values".into()));
        }
        if knots[0] != 0.0 || knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("knots must start at 0 and increase".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || *values.last().unwrap() != 0.0 {
            return Err(Error::InvalidArgument(
                "values must be nonnegative and end at 0".into(),
            ));
        }
        Ok(Self { knots, values })
    }

    /// Random profile with 3 to 8 interior knots on `[0, r_max]`.
    pub fn random<R: Rng>(rng: &mut R, r_max: f64) -> Self {
        let interior = rng.gen_range(3..=8);
        let mut knots: Vec<f64> = (0..interior).map(|_| rng.gen_range(0.0..r_max)).collect();
        knots.push(0.0);
        knots.push(r_max);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let last = knots.len() - 1;
        let values = (0..knots.len())
            .map(|i| if i == last { 0.0 } else { rng.gen_range(0.0..2.0) })
            .collect();
        Self { knots, values }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let last = *self.knots.last().unwrap();
        if !(r >= 0.0) || r >= last {
            return 0.0;
        }
        let k = self.knots.partition_point(|x| *x <= r) - 1;
        let t = (r - self.knots[k]) / (self.knots[k + 1] - self.knots[k]);
        (1.0 - t) * self.values[k] + t * self.values[k + 1]
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn support_end(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// `(int_0^inf eval(x)^p x^2 dx)^{1/p}`.
    pub fn lp_norm_r2(&self, p: f64) -> f64 {
        let integral = integrate_pieces(self.knots(), |x| self.eval(x).powf(p) * x * x);
        integral.powf(1.0 / p)
    }
}

impl ScalarField for RadialFunction {
    fn value(&self, v: &Vec3) -> f64 {
        self.eval(v.norm())
    }
}

/// Composite Gauss-Legendre quadrature over consecutive breakpoints, with each
/// interval split into equal panels.
fn integrate_pieces(breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    const PANELS: usize = 8;
    let rule = GaussLegendre::new(NonZeroUsize::new(10).expect("nonzero"));
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let width = (w[1] - w[0]) / PANELS as f64;
        for k in 0..PANELS {
            let a = w[0] + k as f64 * width;
            total += rule.integrate(a, a + width, &f);
        }
    }
    total
}

/// Smallest `x` with `lo <= x <= hi` and `g(x) >= target` for increasing `g`.
fn invert_increasing(g: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Checks `||B_eps(eta, psi)||_{L^p(x^2 dx)} <= (8 / (pi eps)) ||psi||_inf ||eta||_{L^p(x^2 dx)}`.
///
/// The left side is integrated on `[eps^{-1/gamma}, sqrt(2) R]` (outside it
/// `B_eps` vanishes), with breakpoints wherever `a1(x)` or `a2(x)` crosses a
/// knot so that every quadrature panel sees a smooth integrand.
pub fn b_eps_norm_record(
    eta: &RadialFunction,
    psi: &RadialFunction,
    p: f64,
    params: &KernelParams,
    trial_seed: u64,
) -> Result<VerificationRecord> {
    if p.is_nan() || p < 1.0 || p.is_infinite() {
        return Err(Error::InvalidExponent(p));
    }
    let eps = params.eps();
    let gamma = params.gamma();
    let x0 = eps.powf(-1.0 / gamma);
    let x1 = 2f64.sqrt() * eta.support_end();
    let inputs = format!("p={p} eps={eps} gamma={gamma}");
    let rhs = 2.0 * params.amplitude() * psi.sup() * eta.lp_norm_r2(p);
    if x1 <= x0 {
        return Ok(VerificationRecord::new(B_EPS_ID, trial_seed, 0.0, rhs, inputs));
    }
    let a1 = |x: f64| x * (1.0 - 0.5 * eps * x.powf(gamma)).max(0.0).sqrt();
    let mut breaks = vec![x0, x1];
    for &k in eta.knots() {
        if k > a1(x0) && k < a1(x1) {
            breaks.push(invert_increasing(a1, k, x0, x1));
        }
    }
    // a2 = sqrt(eps/2) x^{1 + gamma/2} is monotone (constant at gamma = -2).
    let expo = 1.0 + 0.5 * gamma;
    if expo.abs() > 1e-12 {
        for &k in psi.knots() {
            if k > 0.0 {
                let x = (k / (0.5 * eps).sqrt()).powf(1.0 / expo);
                if x > x0 && x < x1 {
                    breaks.push(x);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let integral = integrate_pieces(&breaks, |x| {
        let b = b_eps_1d(|r| eta.eval(r), |r| psi.eval(r), x, params).unwrap_or(0.0);
        b.powf(p) * x * x
    });
    let lhs = integral.powf(1.0 / p);
    Ok(VerificationRecord::new(B_EPS_ID, trial_seed, lhs, rhs, inputs))
}
