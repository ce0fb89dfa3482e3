//! Seeded randomized verification suites.

use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::{
    b_eps_1d, b_eps_norm_record, check_convolution_bound, lloglsplit_record, p_eps_eval,
    random_mixture, random_unit_mixture, trial_rng, trial_seed, young_record, RadialFunction,
    VerificationRecord,
};
use crate::collision::{q_gain, q_gain_bilinear, QuadratureSpec};
use crate::geometry::{
    azimuthal_moments, azimuthal_moments_closed, post_collision, CollisionPair, ScatteringFrame,
};
use crate::grid::GridSpec;
use crate::kernel::KernelParams;
use crate::{Error, Result, Vec3};

/// Exponent triples `(p, q, r)` exercised by the Young suite.
pub const YOUNG_TRIPLES: [(f64, f64, f64); 4] =
    [(1.0, 1.0, 1.0), (2.0, 1.0, 2.0), (1.0, 2.0, 2.0), (1.5, 1.5, 3.0)];

/// Exponents exercised by the `L log L` suite.
pub const LLOGL_EXPONENTS: [f64; 5] = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Geometry,
    Kernel,
    Young,
    Rearrange,
    Llogl,
    Convolution,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Geometry,
        Suite::Kernel,
        Suite::Young,
        Suite::Rearrange,
        Suite::Llogl,
        Suite::Convolution,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Kernel => "kernel",
            Suite::Young => "young",
            Suite::Rearrange => "rearrange",
            Suite::Llogl => "llogl",
            Suite::Convolution => "convolution",
            Suite::All => "all",
        }
    }

    fn stream(&self) -> u64 {
        match self {
            Suite::Geometry => 1,
            Suite::Kernel => 2,
            Suite::Young => 3,
            Suite::Rearrange => 4,
            Suite::Llogl => 5,
            Suite::Convolution => 6,
            Suite::All => 0,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(std::iter::once(&Suite::All))
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

/// Run parameters shared by all suites.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Trials per suite.
    pub trials: usize,
    /// Grid sizes cycled through by the grid-based suites.
    pub grids: Vec<usize>,
    pub v_max: f64,
    pub m_phi: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 200,
            grids: vec![8, 12, 16],
            v_max: 4.0,
            m_phi: 16,
        }
    }
}

impl SuiteOptions {
    fn grid_for(&self, index: usize) -> Result<GridSpec> {
        if self.grids.is_empty() {
            return Err(Error::InvalidArgument("no grid sizes given".into()));
        }
        GridSpec::new(self.grids[index % self.grids.len()], self.v_max)
    }
}

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

fn random_unit<R: Rng>(rng: &mut R) -> Vec3 {
    loop {
        let v = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

fn random_kernel<R: Rng>(rng: &mut R, gamma_lo: f64, gamma_hi: f64) -> Result<KernelParams> {
    KernelParams::new(log_uniform(rng, 0.05, 1.0), rng.gen_range(gamma_lo..gamma_hi))
}

fn geometry_trial(seed: u64) -> Result<Vec<VerificationRecord>> {
    let mut rng = trial_rng(seed);
    let v = Vec3::from_fn(|_, _| rng.gen_range(-5.0..5.0));
    let w = Vec3::from_fn(|_, _| rng.gen_range(-5.0..5.0));
    let sigma = random_unit(&mut rng);
    let pair = CollisionPair::new(v, w);
    let (a, b) = post_collision(&pair, &sigma)?;
    let p_err = ((a + b) - (v + w)).norm() / (v.norm() + w.norm());
    let e_scale = v.norm_squared() + w.norm_squared();
    let e_err = (a.norm_squared() + b.norm_squared() - e_scale).abs() / e_scale;
    let conservation = VerificationRecord::new(
        "collision_conservation",
        seed,
        p_err.max(e_err),
        1e-12,
        format!("v={v:?} v_star={w:?}"),
    );

    let u = Vec3::from_fn(|_, _| rng.gen_range(-3.0..3.0));
    let theta = rng.gen_range(0.0..PI);
    let q = azimuthal_moments(&u, theta, 16)?;
    let c = azimuthal_moments_closed(&u, theta)?;
    let s2 = (0.5 * theta).sin().powi(2);
    let u2 = u.norm_squared();
    let scale1 = 2.0 * PI * u2.sqrt() * s2;
    let scale2 = PI * u2 * s2;
    let err = if s2 == 0.0 {
        0.0
    } else {
        ((q.first - c.first).norm() / scale1)
            .max((q.second - c.second).norm() / scale2)
            .max((q.cubic - c.cubic).abs() / c.cubic)
    };
    let azimuthal = VerificationRecord::new(
        "azimuthal_closed_form",
        seed,
        err,
        1e-12,
        format!("u={u:?} theta={theta}"),
    );

    let frame = ScatteringFrame::of(&u)?;
    let dev = [
        (frame.u_hat.norm() - 1.0).abs(),
        (frame.j_hat.norm() - 1.0).abs(),
        (frame.k_hat.norm() - 1.0).abs(),
        frame.u_hat.dot(&frame.j_hat).abs(),
        frame.u_hat.dot(&frame.k_hat).abs(),
        frame.j_hat.dot(&frame.k_hat).abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let orthonormal =
        VerificationRecord::new("frame_orthonormal", seed, dev, 1e-14, format!("u={u:?}"));
    Ok(vec![conservation, azimuthal, orthonormal])
}

fn kernel_trial(seed: u64) -> Result<Vec<VerificationRecord>> {
    let mut rng = trial_rng(seed);
    let eps = [0.5, 0.1, 0.02][rng.gen_range(0..3)];
    let params = KernelParams::new(eps, rng.gen_range(-3.0..-0.1))?;
    // Sample inside the forward-scattering window eps |u|^gamma <= 1.
    let x0 = eps.powf(-1.0 / params.gamma());
    let speed = x0 * rng.gen_range(0.0f64..3.0).exp();
    let u = random_unit(&mut rng) * speed;
    let inputs = format!("eps={eps} gamma={} |u|={speed}", params.gamma());

    let first = azimuthal_moments(&u, params.theta_eps(speed), 16)?.first * params.amplitude();
    let closed = -2.0 * PI * u * params.beta_k(speed, 2.0)?;
    let err = (first - closed).norm() / closed.norm();
    let identity = VerificationRecord::new("beta2_first_moment", seed, err, 1e-12, inputs.clone());

    let x = log_uniform(&mut rng, 1e-3, 1e3);
    let half = (0.5 * params.theta_eps(x)).sin().powi(2);
    let half_angle = VerificationRecord::new(
        "half_angle",
        seed,
        (half - 0.5 * params.m_eps(x)).abs(),
        1e-14,
        format!("eps={eps} gamma={} x={x}", params.gamma()),
    );
    Ok(vec![identity, half_angle])
}

fn young_trial(seed: u64, index: usize, opts: &SuiteOptions) -> Result<Vec<VerificationRecord>> {
    let mut rng = trial_rng(seed);
    let grid = opts.grid_for(index)?;
    let params = random_kernel(&mut rng, -3.0, -0.5)?;
    let f = random_mixture(grid, &mut rng)?;
    let h = random_mixture(grid, &mut rng)?;
    let quad = QuadratureSpec::new(opts.m_phi)?;
    let gain = q_gain_bilinear(&f, &h, &params, &quad)?;
    YOUNG_TRIPLES
        .iter()
        .map(|&t| young_record(&gain, &f, &h, t, &params, seed))
        .collect()
}

fn rearrange_trial(seed: u64) -> Result<Vec<VerificationRecord>> {
    let mut rng = trial_rng(seed);
    // The B_eps bound's change of variables needs gamma <= -2(sqrt 2 - 1).
    let params = random_kernel(&mut rng, -3.0, -1.0)?;
    let (r_eta, r_psi) = (rng.gen_range(1.0..5.0), rng.gen_range(1.0..5.0));
    let eta = RadialFunction::random(&mut rng, r_eta);
    let psi = RadialFunction::random(&mut rng, r_psi);
    let p = rng.gen_range(1.0..4.0);
    let bound = b_eps_norm_record(&eta, &psi, p, &params, seed)?;

    let x0 = params.eps().powf(-1.0 / params.gamma());
    let speed = x0 * rng.gen_range(0.0f64..2.0).exp();
    let u = random_unit(&mut rng) * speed;
    let direct = p_eps_eval(&eta, &psi, &u, &params, 16)?;
    let reduced = 2.0 * PI * b_eps_1d(|r| psi.eval(r), |r| eta.eval(r), speed, &params)?;
    let bridge = VerificationRecord::new(
        "p_eps_radial_reduction",
        seed,
        (direct - reduced).abs(),
        1e-12 * direct.abs().max(reduced.abs()),
        format!("eps={} gamma={} |u|={speed}", params.eps(), params.gamma()),
    );
    Ok(vec![bound, bridge])
}

fn llogl_trial(seed: u64, index: usize, opts: &SuiteOptions) -> Result<Vec<VerificationRecord>> {
    let mut rng = trial_rng(seed);
    let grid = opts.grid_for(index)?;
    let params = random_kernel(&mut rng, -3.0, -0.5)?;
    let f = random_unit_mixture(grid, &mut rng)?;
    let k = log_uniform(&mut rng, 1.5, 1e3);
    let quad = QuadratureSpec::new(opts.m_phi)?;
    let gain = q_gain(&f, &params, &quad)?;
    let l = f.llogl();
    LLOGL_EXPONENTS
        .iter()
        .map(|&p| lloglsplit_record(&gain, &f, l, p, k, &params, seed))
        .collect()
}

fn convolution_trial(seed: u64, index: usize, opts: &SuiteOptions) -> Result<Vec<VerificationRecord>> {
    let mut rng = trial_rng(seed);
    let grid = opts.grid_for(index)?;
    let f = random_mixture(grid, &mut rng)?;
    let f = f.scaled(rng.gen_range(0.2..3.0) / f.mass())?;
    let k = rng.gen_range(1.0..4.0);
    let alpha = rng.gen_range(0.0..=k);
    let positive = check_convolution_bound(&f, alpha, 1.0, k, seed)?;
    let p = 1.0 + rng.gen_range(0.05..=1.0);
    let pc = p / (p - 1.0);
    let alpha = -rng.gen_range(0.01..0.98 * 6.0 / pc);
    let negative = check_convolution_bound(&f, alpha, p, k, seed)?;
    Ok(vec![positive, negative])
}

fn run_single(suite: Suite, opts: &SuiteOptions) -> Result<Vec<VerificationRecord>> {
    let batches: Vec<Vec<VerificationRecord>> = (0..opts.trials)
        .into_par_iter()
        .map(|i| {
            let seed = trial_seed(opts.seed, suite.stream(), i);
            match suite {
                Suite::Geometry => geometry_trial(seed),
                Suite::Kernel => kernel_trial(seed),
                Suite::Young => young_trial(seed, i, opts),
                Suite::Rearrange => rearrange_trial(seed),
                Suite::Llogl => llogl_trial(seed, i, opts),
                Suite::Convolution => convolution_trial(seed, i, opts),
                Suite::All => unreachable!("expanded by run_suite"),
            }
        })
        .collect::<Result<_>>()?;
    Ok(batches.into_iter().flatten().collect())
}

/// Runs `suite` (or every suite, in a fixed order, for [`Suite::All`]).
pub fn run_suite(suite: Suite, opts: &SuiteOptions) -> Result<Vec<VerificationRecord>> {
    match suite {
        Suite::All => {
            let mut out = Vec::new();
            for s in Suite::EACH {
                out.extend(run_single(s, opts)?);
            }
            Ok(out)
        }
        s => run_single(s, opts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.iter().chain([Suite::All].iter()) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), *s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn zero_trials_is_empty() {
        let opts = SuiteOptions {
            trials: 0,
            ..Default::default()
        };
        assert!(run_suite(Suite::All, &opts).unwrap().is_empty());
    }

    #[test]
    fn cheap_suites_pass() {
        let opts = SuiteOptions {
            trials: 50,
            seed: 3,
            ..Default::default()
        };
        for s in [Suite::Geometry, Suite::Kernel, Suite::Rearrange] {
            let recs = run_suite(s, &opts).unwrap();
            for r in &recs {
                assert!(r.pass, "{}", r.to_row());
            }
        }
    }
}
