//! Young-type bound for the gain operator:
//! `||Q+(f, h)||_r <= (16 / eps) ||f||_p ||h||_q` when `1/p + 1/q = 1 + 1/r`.

use super::VerificationRecord;
use crate::collision::{q_gain_bilinear, QuadratureSpec};
use crate::grid::Distribution;
use crate::kernel::KernelParams;
use crate::{Error, Result};

pub const YOUNG_ID: &str = "young_gain";

fn recip(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

fn check_exponents(p: f64, q: f64, r: f64) -> Result<()> {
    if [p, q, r].iter().any(|e| e.is_nan() || *e < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "exponents must be >= 1, got ({p}, {q}, {r})"
        )));
    }
    if (recip(p) + recip(q) - 1.0 - recip(r)).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "exponents ({p}, {q}, {r}) violate 1/p + 1/q = 1 + 1/r"
        )));
    }
    Ok(())
}

/// Record for a precomputed `gain = Q+(f, h)`.
pub fn young_record(
    gain: &Distribution,
    f: &Distribution,
    h: &Distribution,
    (p, q, r): (f64, f64, f64),
    params: &KernelParams,
    trial_seed: u64,
) -> Result<VerificationRecord> {
    check_exponents(p, q, r)?;
    let lhs = gain.lp_norm(r)?;
    let rhs = 16.0 / params.eps() * f.lp_norm(p)? * h.lp_norm(q)?;
    let inputs = format!(
        "n={} p={p} q={q} r={r} eps={} gamma={}",
        f.grid().n(),
        params.eps(),
        params.gamma()
    );
    Ok(VerificationRecord::new(YOUNG_ID, trial_seed, lhs, rhs, inputs))
}

/// Evaluates `Q+(f, h)` and checks the bound for `(p, q, r)`.
pub fn check_young(
    f: &Distribution,
    h: &Distribution,
    exponents: (f64, f64, f64),
    params: &KernelParams,
    quad: &QuadratureSpec,
    trial_seed: u64,
) -> Result<VerificationRecord> {
    let (p, q, r) = exponents;
    check_exponents(p, q, r)?;
    let gain = q_gain_bilinear(f, h, params, quad)?;
    young_record(&gain, f, h, exponents, params, trial_seed)
}
