//! Gain, loss and weak form of the collision operator for `g_eps`.
//!
//! For every ordered node pair `(v_i, v_j)` the collision is evaluated at the
//! single scattering angle `theta_eps(|u|)` and at `m_phi` azimuthal nodes:
//!
//! ```text
//! Q+(f, h)_i = h^3 sum_j (8 / (eps M)) sum_k f(v_i + d_k) h(v_j - d_k)
//! ```
//!
//! with `d_k = (|u| sigma_k - u) / 2`. Off-grid values come from trilinear
//! interpolation. Pairs with `u = 0` or `m_eps = 2` are an identity or an exact
//! swap and are evaluated without interpolation.
//!
//! The lattice offset `o = i - j` fixes `u`, hence the displacements and the
//! interpolation weights, for every pair that shares it. The sums therefore
//! loop over offsets and sweep all nodes with one precomputed stencil per
//! offset. Work is split over the `z` offset; partial results are added in
//! offset order so the output does not depend on the thread count.

use rayon::prelude::*;

use crate::geometry::{displacements, ScatteringFrame};
use crate::grid::{Distribution, GridSpec};
use crate::kernel::KernelParams;
use crate::test_functions::ScalarField;
use crate::{Error, Result, Vec3};

/// Default number of azimuthal nodes.
pub const DEFAULT_M_PHI: usize = 16;

/// Interpolation used to read densities at off-grid velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Trilinear,
}

/// Azimuthal rule and interpolation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    m_phi: usize,
    interp: Interpolation,
}

impl QuadratureSpec {
    pub fn new(m_phi: usize) -> Result<Self> {
        if m_phi < 8 {
            return Err(Error::InvalidArgument(format!(
                "m_phi must be at least 8, got {m_phi}"
            )));
        }
        Ok(Self {
            m_phi,
            interp: Interpolation::Trilinear,
        })
    }

    pub fn m_phi(&self) -> usize {
        self.m_phi
    }

    pub fn interp(&self) -> Interpolation {
        self.interp
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            m_phi: DEFAULT_M_PHI,
            interp: Interpolation::Trilinear,
        }
    }
}

/// Copies node values into an `(n+1)^3` array whose top planes are zero, so
/// that trilinear stencils anchored on the last node can read one past it.
fn padded(f: &Distribution) -> Vec<f64> {
    let n = f.grid().n();
    let np = n + 1;
    let mut out = vec![0.0; np * np * np];
    for k in 0..n {
        for j in 0..n {
            let src = n * (j + n * k);
            let dst = np * (j + np * k);
            out[dst..dst + n].copy_from_slice(&f.values()[src..src + n]);
        }
    }
    out
}

/// Per-axis part of the stencil for one displacement.
#[derive(Debug, Clone, Copy)]
struct AxisStencil {
    /// Base shift and fraction for `v' = v_i + d`.
    s1: isize,
    t1: f64,
    /// Base shift (relative to `i`) and fraction for `v_*' = v_j - d`.
    s2: isize,
    t2: f64,
    /// Inclusive range of `i` for which both points lie in the box.
    lo: isize,
    hi: isize,
}

impl AxisStencil {
    fn new(delta: f64, o: isize, n: isize) -> Self {
        let (s1, t1) = split(delta);
        let (s2, t2) = split(-delta);
        let s2 = s2 - o;
        let top = |t: f64| if t == 0.0 { n - 1 } else { n - 2 };
        let lo = 0.max(o).max(-s1).max(-s2);
        let hi = (n - 1).min(n - 1 + o).min(top(t1) - s1).min(top(t2) - s2);
        Self { s1, t1, s2, t2, lo, hi }
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi
    }
}

/// Integer base and fraction of a lattice coordinate. Fractions within
/// rounding of 0 or 1 snap to the node, so points that sit on the box
/// boundary up to rounding are not dropped.
fn split(x: f64) -> (isize, f64) {
    const SNAP: f64 = 1e-12;
    let base = x.floor();
    let t = x - base;
    if t < SNAP {
        (base as isize, 0.0)
    } else if t > 1.0 - SNAP {
        (base as isize + 1, 0.0)
    } else {
        (base as isize, t)
    }
}

/// Corner offsets and weights of a trilinear stencil in the padded layout.
fn corner_weights(t: [f64; 3], np: usize) -> ([f64; 8], [usize; 8]) {
    let mut w = [0.0; 8];
    let mut off = [0usize; 8];
    for c in 0..8 {
        let (dx, dy, dz) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
        let wx = if dx == 0 { 1.0 - t[0] } else { t[0] };
        let wy = if dy == 0 { 1.0 - t[1] } else { t[1] };
        let wz = if dz == 0 { 1.0 - t[2] } else { t[2] };
        w[c] = wx * wy * wz;
        off[c] = dx + np * (dy + np * dz);
    }
    (w, off)
}

/// Offsets `o` of the `z` axis, in the order partial sums are combined.
fn z_offsets(n: usize) -> Vec<isize> {
    let n = n as isize;
    (-(n - 1)..n).collect()
}

/// Gain sum for all offsets with the given `oz`, in units of
/// `h^3 (8 / (eps M))`.
fn gain_slab(
    fp: &[f64],
    hp: &[f64],
    f: &[f64],
    h: &[f64],
    grid: &GridSpec,
    params: &KernelParams,
    m_phi: usize,
    oz: isize,
) -> Vec<f64> {
    let n = grid.n();
    let ni = n as isize;
    let np = n + 1;
    let spacing = grid.h();
    let swap_weight = m_phi as f64;
    let mut acc = vec![0.0; grid.len()];
    for oy in -(ni - 1)..ni {
        for ox in -(ni - 1)..ni {
            let o = [ox, oy, oz];
            if o == [0, 0, 0] {
                for ((a, fi), hi) in acc.iter_mut().zip(f).zip(h) {
                    *a += swap_weight * fi * hi;
                }
                continue;
            }
            let u = Vec3::new(ox as f64, oy as f64, oz as f64) * spacing;
            let u_norm = u.norm();
            if params.m_eps(u_norm) >= 2.0 {
                // Exact swap: v' = v_j, v_*' = v_i.
                let lo = [0.max(o[0]), 0.max(o[1]), 0.max(o[2])];
                let hi = [
                    (ni - 1).min(ni - 1 + o[0]),
                    (ni - 1).min(ni - 1 + o[1]),
                    (ni - 1).min(ni - 1 + o[2]),
                ];
                for iz in lo[2]..=hi[2] {
                    for iy in lo[1]..=hi[1] {
                        let row = (n * (iy as usize + n * iz as usize)) as isize;
                        let prow = row - (ox + ni * (oy + ni * oz));
                        for ix in lo[0]..=hi[0] {
                            let i = (row + ix) as usize;
                            let j = (prow + ix) as usize;
                            acc[i] += swap_weight * f[j] * h[i];
                        }
                    }
                }
                continue;
            }
            let frame = ScatteringFrame::of(&u).expect("nonzero offset");
            let theta = params.theta_eps(u_norm);
            for d in displacements(&frame, &u, theta, m_phi) {
                let ax: [AxisStencil; 3] =
                    std::array::from_fn(|a| AxisStencil::new(d[a] / spacing, o[a], ni));
                if ax.iter().any(AxisStencil::is_empty) {
                    continue;
                }
                let (w1, off) = corner_weights([ax[0].t1, ax[1].t1, ax[2].t1], np);
                let (w2, _) = corner_weights([ax[0].t2, ax[1].t2, ax[2].t2], np);
                for iz in ax[2].lo..=ax[2].hi {
                    for iy in ax[1].lo..=ax[1].hi {
                        let out_row = n * (iy as usize + n * iz as usize);
                        let b1_row =
                            (ax[0].s1 + np as isize * (iy + ax[1].s1 + np as isize * (iz + ax[2].s1)))
                                as isize;
                        let b2_row =
                            (ax[0].s2 + np as isize * (iy + ax[1].s2 + np as isize * (iz + ax[2].s2)))
                                as isize;
                        let lo = ax[0].lo as usize;
                        let hi = ax[0].hi as usize;
                        let out = &mut acc[out_row + lo..=out_row + hi];
                        let b1 = (b1_row + lo as isize) as usize;
                        let b2 = (b2_row + lo as isize) as usize;
                        for (x, slot) in out.iter_mut().enumerate() {
                            let p1 = b1 + x;
                            let p2 = b2 + x;
                            let mut g1 = 0.0;
                            let mut g2 = 0.0;
                            for c in 0..8 {
                                g1 += w1[c] * fp[p1 + off[c]];
                                g2 += w2[c] * hp[p2 + off[c]];
                            }
                            *slot += g1 * g2;
                        }
                    }
                }
            }
        }
    }
    acc
}

/// Bilinear gain `Q+(f, h)` built from `f(v') h(v_*')`.
pub fn q_gain_bilinear(
    f: &Distribution,
    h: &Distribution,
    params: &KernelParams,
    quad: &QuadratureSpec,
) -> Result<Distribution> {
    let grid = *f.grid();
    if grid != *h.grid() {
        return Err(Error::GridMismatch);
    }
    let fp = padded(f);
    let hp = padded(h);
    let m_phi = quad.m_phi();
    let slabs: Vec<Vec<f64>> = z_offsets(grid.n())
        .into_par_iter()
        .map(|oz| gain_slab(&fp, &hp, f.values(), h.values(), &grid, params, m_phi, oz))
        .collect();
    let scale = grid.cell_volume() * params.total_rate() / m_phi as f64;
    let mut out = vec![0.0; grid.len()];
    for slab in &slabs {
        for (o, s) in out.iter_mut().zip(slab) {
            *o += s;
        }
    }
    for o in &mut out {
        *o *= scale;
    }
    Ok(Distribution::from_values_unchecked(grid, out))
}

/// Gain term `Q+(f, f)`.
pub fn q_gain(f: &Distribution, params: &KernelParams, quad: &QuadratureSpec) -> Result<Distribution> {
    q_gain_bilinear(f, f, params, quad)
}

/// Loss term `(8 / eps) mass(f) f`.
pub fn q_loss(f: &Distribution, params: &KernelParams) -> Distribution {
    let c = params.total_rate() * f.mass();
    let values = f.values().iter().map(|v| c * v).collect();
    Distribution::from_values_unchecked(*f.grid(), values)
}

/// `Q(f, f) = Q+ - Q-` at every node; the result may be signed.
pub fn q_total(f: &Distribution, params: &KernelParams, quad: &QuadratureSpec) -> Result<Vec<f64>> {
    let gain = q_gain(f, params, quad)?;
    let loss = q_loss(f, params);
    Ok(gain
        .values()
        .iter()
        .zip(loss.values())
        .map(|(g, l)| g - l)
        .collect())
}

/// Value of the weak form together with the sum of the absolute values of
/// every term that enters it, which sets the scale of rounding error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakForm {
    pub value: f64,
    pub magnitude: f64,
}

/// `int Q(f, f) phi`, evaluated from the symmetrized pair sum
///
/// ```text
/// (h^3)^2 / 2 sum_{i,j} f_i f_j (8 / (eps M)) sum_k [phi(v_i') + phi(v_j') - phi(v_i) - phi(v_j)]
/// ```
///
/// with `phi` evaluated exactly at the post-collision velocities; `f` is never
/// interpolated. The bracket is symmetric under `i <-> j`, so the sum runs once
/// over each unordered pair. Identity and swap collisions contribute nothing
/// and are skipped.
pub fn weak_form_q_detailed<F: ScalarField + ?Sized>(
    f: &Distribution,
    phi: &F,
    params: &KernelParams,
    quad: &QuadratureSpec,
) -> WeakForm {
    let grid = *f.grid();
    let n = grid.n() as isize;
    let m_phi = quad.m_phi();
    let phi_nodes: Vec<f64> = grid.nodes().map(|v| phi.value(&v)).collect();
    let support = phi.support();
    let values = f.values();

    let slabs: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|oz| {
            let mut value = 0.0;
            let mut magnitude = 0.0;
            for oy in -(n - 1)..n {
                for ox in -(n - 1)..n {
                    // One representative per unordered pair: o > 0 lexicographically.
                    if oz == 0 && (oy < 0 || (oy == 0 && ox <= 0)) {
                        continue;
                    }
                    let o = [ox, oy, oz];
                    let u = Vec3::new(ox as f64, oy as f64, oz as f64) * grid.h();
                    let u_norm = u.norm();
                    if params.m_eps(u_norm) >= 2.0 {
                        continue;
                    }
                    let frame = ScatteringFrame::of(&u).expect("nonzero offset");
                    let d = displacements(&frame, &u, params.theta_eps(u_norm), m_phi);
                    let lo: [isize; 3] = std::array::from_fn(|a| 0.max(o[a]));
                    let hi: [isize; 3] = std::array::from_fn(|a| (n - 1).min(n - 1 + o[a]));
                    // i - j is the same for every pair with this offset.
                    let shift = ((oz * n + oy) * n + ox) as usize;
                    for iz in lo[2]..hi[2] + 1 {
                        for iy in lo[1]..hi[1] + 1 {
                            let row = grid.index(0, iy as usize, iz as usize);
                            let (cy, cz) = (grid.coordinate(iy as usize), grid.coordinate(iz as usize));
                            let (sy, sz) = (
                                grid.coordinate((iy - oy) as usize),
                                grid.coordinate((iz - oz) as usize),
                            );
                            for ix in lo[0]..hi[0] + 1 {
                                let i = row + ix as usize;
                                let j = i - shift;
                                let ff = values[i] * values[j];
                                if ff == 0.0 {
                                    continue;
                                }
                                let vi = Vec3::new(grid.coordinate(ix as usize), cy, cz);
                                let vj = Vec3::new(grid.coordinate((ix - ox) as usize), sy, sz);
                                if let Some((c, r)) = support {
                                    let dist = (0.5 * (vi + vj) - c).norm();
                                    let half = 0.5 * u_norm;
                                    if dist - half >= r || half - dist >= r {
                                        continue;
                                    }
                                }
                                let (pa, aa) = phi.sum_along(&vi, &d, 1.0);
                                let (pb, ab) = phi.sum_along(&vj, &d, -1.0);
                                let post = pa + pb;
                                let post_abs = aa + ab;
                                let pre = m_phi as f64 * (phi_nodes[i] + phi_nodes[j]);
                                let pre_abs = m_phi as f64 * (phi_nodes[i].abs() + phi_nodes[j].abs());
                                value += ff * (post - pre);
                                magnitude += ff.abs() * (post_abs + pre_abs);
                            }
                        }
                    }
                }
            }
            (value, magnitude)
        })
        .collect();
    let scale = grid.cell_volume().powi(2) * params.total_rate() / m_phi as f64;
    let (value, magnitude) = slabs
        .iter()
        .fold((0.0, 0.0), |(v, m), (sv, sm)| (v + sv, m + sm));
    WeakForm {
        value: value * scale,
        magnitude: magnitude * scale,
    }
}

/// `int Q(f, f) phi`; see [`weak_form_q_detailed`].
pub fn weak_form_q<F: ScalarField + ?Sized>(
    f: &Distribution,
    phi: &F,
    params: &KernelParams,
    quad: &QuadratureSpec,
) -> f64 {
    weak_form_q_detailed(f, phi, params, quad).value
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{post_collision, CollisionPair};
    use crate::test_functions::TestFunction;
    use approx::assert_relative_eq;

    /// Direct evaluation of one gain node from the geometry module and
    /// `Distribution::interpolate`.
    fn gain_at_node(
        f: &Distribution,
        h: &Distribution,
        params: &KernelParams,
        m_phi: usize,
        i: usize,
    ) -> f64 {
        let grid = f.grid();
        let vi = grid.node_at(i);
        let mut sum = 0.0;
        for j in 0..grid.len() {
            let vj = grid.node_at(j);
            let pair = CollisionPair::new(vi, vj);
            let u = pair.u();
            if u.norm() == 0.0 {
                sum += params.total_rate() * f.values()[i] * h.values()[i];
                continue;
            }
            if params.m_eps(u.norm()) >= 2.0 {
                sum += params.total_rate() * f.values()[j] * h.values()[i];
                continue;
            }
            let frame = ScatteringFrame::of(&u).unwrap();
            let theta = params.theta_eps(u.norm());
            for k in 0..m_phi {
                let sigma = frame.sigma(theta, crate::geometry::phi_node(k, m_phi));
                let (a, b) = post_collision(&pair, &sigma).unwrap();
                sum += params.total_rate() / m_phi as f64 * f.interpolate(&a) * h.interpolate(&b);
            }
        }
        sum * grid.cell_volume()
    }

    fn bumpy(grid: GridSpec, c: Vec3, w: f64) -> Distribution {
        Distribution::from_fn(grid, |v| {
            (-(v - c).norm_squared() / (2.0 * w * w)).exp() * (1.0 + 0.3 * v.x)
                .max(0.0)
        })
        .unwrap()
    }

    #[test]
    fn stencil_matches_direct_evaluation() {
        let grid = GridSpec::new(8, 2.0).unwrap();
        let f = bumpy(grid, Vec3::new(0.2, -0.1, 0.3), 0.7);
        let h = bumpy(grid, Vec3::new(-0.4, 0.2, 0.0), 0.9);
        let params = KernelParams::new(0.3, -2.0).unwrap();
        let quad = QuadratureSpec::new(8).unwrap();
        let fast = q_gain_bilinear(&f, &h, &params, &quad).unwrap();
        for i in (0..grid.len()).step_by(23) {
            let slow = gain_at_node(&f, &h, &params, 8, i);
            assert!(
                (fast.values()[i] - slow).abs() <= 1e-12 * slow.abs() + 1e-14,
                "node {i}: {} vs {slow}",
                fast.values()[i]
            );
        }
    }

    #[test]
    fn point_mass_is_a_fixed_point() {
        // Pairs closer than the swap radius collide as exact swaps, so no
        // interpolated collision can land both partners next to the mass.
        let grid = GridSpec::new(9, 2.0).unwrap();
        let mut values = vec![0.0; grid.len()];
        values[grid.index(4, 4, 4)] = 3.0;
        let f = Distribution::from_values(grid, values).unwrap();
        let params = KernelParams::new(2.0 * 4f64.powi(3), -3.0).unwrap();
        assert!(params.swap_radius() > 4.0 * 3f64.sqrt() * grid.h());
        let quad = QuadratureSpec::default();
        let total = q_total(&f, &params, &quad).unwrap();
        assert!(total.iter().all(|q| *q == 0.0));
    }

    #[test]
    fn loss_scales_with_mass() {
        let grid = GridSpec::new(8, 3.0).unwrap();
        let m = Distribution::maxwellian(grid, 1.0, Vec3::zeros(), 1.0).unwrap();
        let m = m.scaled(1.0 / m.mass()).unwrap();
        let p = KernelParams::new(0.1, -3.0).unwrap();
        let loss = q_loss(&m, &p);
        for (l, v) in loss.values().iter().zip(m.values()) {
            assert_relative_eq!(*l, 80.0 * v, max_relative = 1e-13);
        }
        let two = m.scaled(2.0).unwrap();
        let q = KernelParams::new(1.0, -3.0).unwrap();
        for (l, v) in q_loss(&two, &q).values().iter().zip(two.values()) {
            assert_relative_eq!(*l, 16.0 * v, max_relative = 1e-13);
        }
        assert!(q_loss(&Distribution::zeros(grid), &p).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn weak_form_of_constant_is_zero() {
        let grid = GridSpec::new(8, 2.0).unwrap();
        let f = bumpy(grid, Vec3::zeros(), 0.8);
        let params = KernelParams::new(0.2, -1.0).unwrap();
        let w = weak_form_q(&f, &TestFunction::Constant(1.0), &params, &QuadratureSpec::default());
        assert_eq!(w, 0.0);
    }

    #[test]
    fn quadrature_spec_validation() {
        assert!(QuadratureSpec::new(7).is_err());
        assert_eq!(QuadratureSpec::default().m_phi(), 16);
    }
}
