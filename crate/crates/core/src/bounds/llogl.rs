//! `L log L` splitting bound for the gain operator.
//!
//! For unit-mass `f` with `int f |log f| <= L` and `K > 1`:
//!
//! ```text
//! ||Q+(f, f)||_p <= K^{1/p'} (16/eps) ||f||_p^{1/2} + 16 / (eps log K) L ||f||_p   (p < inf)
//! ||Q+(f, f)||_inf <= 16 K / eps + 16 / (eps log K) L ||f||_inf
//! ```
//!
//! The record's `info` column holds the same right-hand side with `K^{1/(2p')}`
//! in place of `K^{1/p'}`.

use super::{conjugate, VerificationRecord};
use crate::collision::{q_gain, QuadratureSpec};
use crate::grid::Distribution;
use crate::kernel::KernelParams;
use crate::{Error, Result};

pub const LLOGL_ID: &str = "llogl_split";

/// Mass tolerance for the unit-mass hypothesis.
const MASS_TOL: f64 = 1e-9;

fn check_hypotheses(f: &Distribution, f0_llogl: f64, k: f64) -> Result<()> {
    if k.is_nan() || k <= 1.0 {
        return Err(Error::InvalidArgument(format!("K must exceed 1, got {k}")));
    }
    let mass = f.mass();
    if (mass - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidArgument(format!("f must have unit mass, got {mass}")));
    }
    let l = f.llogl();
    if l > f0_llogl * (1.0 + MASS_TOL) {
        return Err(Error::InvalidArgument(format!(
            "L log L size {l} exceeds the bound {f0_llogl}"
        )));
    }
    Ok(())
}

/// Record for a precomputed `gain = Q+(f, f)`.
pub fn lloglsplit_record(
    gain: &Distribution,
    f: &Distribution,
    f0_llogl: f64,
    p: f64,
    k: f64,
    params: &KernelParams,
    trial_seed: u64,
) -> Result<VerificationRecord> {
    check_hypotheses(f, f0_llogl, k)?;
    let lhs = gain.lp_norm(p)?;
    let norm = f.lp_norm(p)?;
    let c = 16.0 / params.eps();
    let tail = c / k.ln() * f0_llogl * norm;
    let (rhs, info) = if p.is_infinite() {
        (c * k + tail, c * k + tail)
    } else {
        let pc = conjugate(p);
        let head = c * norm.sqrt();
        (k.powf(1.0 / pc) * head + tail, k.powf(0.5 / pc) * head + tail)
    };
    let inputs = format!(
        "n={} p={p} K={k} L={f0_llogl} eps={} gamma={}",
        f.grid().n(),
        params.eps(),
        params.gamma()
    );
    Ok(VerificationRecord::new(LLOGL_ID, trial_seed, lhs, rhs, inputs).with_info(info))
}

/// Evaluates `Q+(f, f)` and checks the splitting bound.
pub fn check_lloglsplit(
    f: &Distribution,
    f0_llogl: f64,
    p: f64,
    k: f64,
    params: &KernelParams,
    quad: &QuadratureSpec,
    trial_seed: u64,
) -> Result<VerificationRecord> {
    check_hypotheses(f, f0_llogl, k)?;
    let gain = q_gain(f, params, quad)?;
    lloglsplit_record(&gain, f, f0_llogl, p, k, params, trial_seed)
}
