//! Uniform 3-D velocity lattice and nonnegative densities sampled on it.
//!
//! All integrals use the node-weight (midpoint) rule with weight `h^3`.
//! Reductions run sequentially in node order so that every result is
//! bit-reproducible.

mod snapshot;

pub use snapshot::{
    decode_snapshot, encode_snapshot, read_snapshot, write_snapshot, SnapshotFormat, SnapshotHeader,
};

use std::f64::consts::PI;

use crate::{Error, Result, Vec3};

/// Smallest admissible number of nodes per axis.
pub const MIN_POINTS: usize = 8;

/// Uniform lattice on `[-v_max, v_max]^3` with `n` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    v_max: f64,
    h: f64,
}

impl GridSpec {
    pub fn new(n: usize, v_max: f64) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points per axis, got {n}"
            )));
        }
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-width must be positive and finite, got {v_max}"
            )));
        }
        Ok(Self {
            n,
            v_max,
            h: 2.0 * v_max / (n - 1) as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Lattice spacing `2 v_max / (n - 1)`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Quadrature weight of a single node.
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    /// Total number of nodes, `n^3`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Linear index of node `(i, j, k)`; `i` varies fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.n;
        let j = (idx / self.n) % self.n;
        let k = idx / (self.n * self.n);
        (i, j, k)
    }

    /// Coordinate of the node with per-axis index `i`.
    #[inline]
    pub fn coordinate(&self, i: usize) -> f64 {
        // Measured from the center so that mirrored nodes are exact negatives.
        (i as f64 - 0.5 * (self.n - 1) as f64) * self.h
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(self.coordinate(i), self.coordinate(j), self.coordinate(k))
    }

    #[inline]
    pub fn node_at(&self, idx: usize) -> Vec3 {
        let (i, j, k) = self.coords(idx);
        self.node(i, j, k)
    }

    /// Iterates over all nodes in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = Vec3> + '_ {
        (0..self.len()).map(move |idx| self.node_at(idx))
    }

    /// True when `v` lies in the closed box `[-v_max, v_max]^3`.
    pub fn contains(&self, v: &Vec3) -> bool {
        v.iter().all(|c| c.abs() <= self.v_max)
    }
}

/// Moments and size functionals of a distribution at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub mass: f64,
    pub momentum: Vec3,
    /// Second moment `int f |v|^2`.
    pub energy: f64,
    /// `int f log f` over the support of `f`.
    pub entropy: f64,
    /// `(p, ||f||_p)` pairs in the order requested; `p = inf` is the max norm.
    pub lp_norms: Vec<(f64, f64)>,
    /// `int f |log f|` over the support of `f`.
    pub llogl: f64,
}

impl MomentReport {
    /// Temperature of the Maxwellian with the same mass, momentum and energy.
    pub fn temperature(&self) -> f64 {
        if self.mass <= 0.0 {
            return 0.0;
        }
        let bulk = self.momentum / self.mass;
        (self.energy / self.mass - bulk.norm_squared()) / 3.0
    }

    pub fn bulk_velocity(&self) -> Vec3 {
        if self.mass <= 0.0 {
            Vec3::zeros()
        } else {
            self.momentum / self.mass
        }
    }
}

/// Nonnegative density sampled on the nodes of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    grid: GridSpec,
    values: Vec<f64>,
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        Err(Error::InvalidExponent(p))
    } else {
        Ok(())
    }
}

impl Distribution {
    /// Wraps node values, rejecting negative or non-finite entries.
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some((idx, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidDistribution(format!(
                "value {v} at node {idx} is negative or not finite"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Callers guarantee nonnegative finite values.
    pub(crate) fn from_values_unchecked(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `density` at every node.
    pub fn from_fn(grid: GridSpec, mut density: impl FnMut(&Vec3) -> f64) -> Result<Self> {
        let values = grid.nodes().map(|v| density(&v)).collect();
        Self::from_values(grid, values)
    }

    /// Samples `mass (2 pi T)^{-3/2} exp(-|v - bulk|^2 / (2T))`.
    ///
    /// The result is not renormalized: the discrete mass defect is part of
    /// what the diagnostics measure.
    pub fn maxwellian(grid: GridSpec, mass: f64, bulk: Vec3, temperature: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Maxwellian mass must be positive, got {mass}"
            )));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Maxwellian temperature must be positive, got {temperature}"
            )));
        }
        let norm = mass * (2.0 * PI * temperature).powf(-1.5);
        Self::from_fn(grid, |v| {
            norm * (-(v - bulk).norm_squared() / (2.0 * temperature)).exp()
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    /// Nodewise `c * f`; `c` must be nonnegative.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_values(self.grid, self.values.iter().map(|v| c * v).collect())
    }

    /// Nodewise sum of two distributions on the same grid.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_values_unchecked(self.grid, values))
    }

    fn weighted_sum(&self, mut weight: impl FnMut(f64, &Vec3) -> f64) -> f64 {
        let grid = self.grid;
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &f)| weight(f, &grid.node_at(idx)))
            .sum();
        sum * grid.cell_volume()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn momentum(&self) -> Vec3 {
        let grid = self.grid;
        let mut p = Vec3::zeros();
        for (idx, &f) in self.values.iter().enumerate() {
            p += grid.node_at(idx) * f;
        }
        p * grid.cell_volume()
    }

    /// Second moment `int f |v|^2`.
    pub fn energy(&self) -> f64 {
        self.weighted_sum(|f, v| f * v.norm_squared())
    }

    /// `H = int f log f`; nodes with `f = 0` contribute nothing.
    pub fn entropy(&self) -> f64 {
        self.weighted_sum(|f, _| if f > 0.0 { f * f.ln() } else { 0.0 })
    }

    /// `int f |log f|`, the size functional used for `L log L`.
    pub fn llogl(&self) -> f64 {
        self.weighted_sum(|f, _| if f > 0.0 { f * f.ln().abs() } else { 0.0 })
    }

    /// Discrete `L^p` norm; `p = f64::INFINITY` gives the maximum node value.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        Ok(lp_norm_of(&self.values, self.grid.cell_volume(), p))
    }

    pub fn moments(&self, lp_list: &[f64]) -> Result<MomentReport> {
        let lp_norms = lp_list
            .iter()
            .map(|&p| self.lp_norm(p).map(|norm| (p, norm)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentReport {
            mass: self.mass(),
            momentum: self.momentum(),
            energy: self.energy(),
            entropy: self.entropy(),
            lp_norms,
            llogl: self.llogl(),
        })
    }

    /// Trilinear interpolation; zero outside `[-v_max, v_max]^3`.
    pub fn interpolate(&self, v: &Vec3) -> f64 {
        let grid = &self.grid;
        if !grid.contains(v) {
            return 0.0;
        }
        let n = grid.n;
        let mut base = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let x = (v[a] + grid.v_max) / grid.h;
            let b = (x.floor() as usize).min(n - 2);
            base[a] = b;
            t[a] = (x - b as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for dk in 0..2 {
            let wz = if dk == 0 { 1.0 - t[2] } else { t[2] };
            for dj in 0..2 {
                let wy = if dj == 0 { 1.0 - t[1] } else { t[1] };
                for di in 0..2 {
                    let wx = if di == 0 { 1.0 - t[0] } else { t[0] };
                    acc += wx * wy * wz * self.value(base[0] + di, base[1] + dj, base[2] + dk);
                }
            }
        }
        acc.max(0.0)
    }

    /// `f 1_{|v| <= radius}`.
    pub fn truncate_ball(&self, radius: f64) -> Self {
        let grid = self.grid;
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &f)| {
                if grid.node_at(idx).norm() <= radius {
                    f
                } else {
                    0.0
                }
            })
            .collect();
        Self::from_values_unchecked(grid, values)
    }

    /// Mass carried by nodes within `2h` of the box boundary.
    pub fn boundary_mass(&self) -> f64 {
        let grid = self.grid;
        let n = grid.n;
        let near = |i: usize| i.min(n - 1 - i) <= 2;
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                let (i, j, k) = grid.coords(*idx);
                near(i) || near(j) || near(k)
            })
            .map(|(_, f)| f)
            .sum();
        sum * grid.cell_volume()
    }

    /// `h^3 sum |f - g|`.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let sum: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(sum * self.grid.cell_volume())
    }

    /// Maxwellian with the same mass, momentum and energy as `self`.
    pub fn matched_maxwellian(&self) -> Result<Self> {
        let m = self.moments(&[])?;
        Self::maxwellian(self.grid, m.mass, m.bulk_velocity(), m.temperature())
    }
}

/// `L^p` norm of raw node values with node weight `cell`; also used for
/// signed fields such as `Q(f, f)`.
pub fn lp_norm_of(values: &[f64], cell: f64, p: f64) -> f64 {
    if p.is_infinite() {
        values.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum::<f64>() * cell
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(n: usize, v_max: f64) -> GridSpec {
        GridSpec::new(n, v_max).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(7, 1.0).is_err());
        assert!(GridSpec::new(8, 0.0).is_err());
        assert!(GridSpec::new(8, f64::NAN).is_err());
        let g = grid(9, 4.0);
        assert_eq!(g.h(), 1.0);
        assert_eq!(g.node(4, 4, 4), Vec3::zeros());
        assert_eq!(g.node(0, 8, 4), Vec3::new(-4.0, 4.0, 0.0));
    }

    #[test]
    fn origin_is_a_node_only_for_odd_n() {
        let odd = grid(9, 3.0);
        assert!(odd.nodes().any(|v| v == Vec3::zeros()));
        let even = grid(10, 3.0);
        assert!(even.nodes().all(|v| v.norm() > 0.0));
    }

    #[test]
    fn rejects_negative_values() {
        let g = grid(8, 1.0);
        let mut values = vec![0.0; g.len()];
        values[3] = -1e-300;
        assert!(Distribution::from_values(g, values.clone()).is_err());
        values[3] = f64::INFINITY;
        assert!(Distribution::from_values(g, values).is_err());
    }

    #[test]
    fn zero_distribution_moments() {
        let f = Distribution::zeros(grid(8, 2.0));
        let m = f.moments(&[1.0, 2.0, f64::INFINITY]).unwrap();
        assert_eq!(m.mass, 0.0);
        assert_eq!(m.momentum, Vec3::zeros());
        assert_eq!(m.energy, 0.0);
        assert_eq!(m.entropy, 0.0);
        assert_eq!(m.llogl, 0.0);
        assert!(m.lp_norms.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn even_data_has_zero_momentum() {
        let g = grid(12, 3.0);
        let f = Distribution::from_fn(g, |v| (-(v.x * v.x) - 2.0 * v.y.powi(4)).exp() * (1.0 + v.z * v.z))
            .unwrap();
        assert!(f.momentum().norm() < 1e-13 * f.mass());
    }

    #[test]
    fn plateau_l1_and_max_norms() {
        let g = grid(10, 2.0);
        let c = 0.7;
        let mut values = vec![0.0; g.len()];
        let nodes = [5usize, 17, 233, 400, 999];
        for &i in &nodes {
            values[i] = c;
        }
        let f = Distribution::from_values(g, values).unwrap();
        assert_relative_eq!(
            f.lp_norm(1.0).unwrap(),
            c * nodes.len() as f64 * g.cell_volume(),
            max_relative = 1e-14
        );
        assert_eq!(f.lp_norm(f64::INFINITY).unwrap(), c);
        assert!(f.lp_norm(0.5).is_err());
        assert!(f.lp_norm(f64::NAN).is_err());
    }

    #[test]
    fn maxwellian_peak_value() {
        let g = grid(9, 4.0);
        let t = 0.7;
        let f = Distribution::maxwellian(g, 2.5, Vec3::zeros(), t).unwrap();
        assert_relative_eq!(
            f.value(4, 4, 4),
            2.5 * (2.0 * PI * t).powf(-1.5),
            max_relative = 1e-15
        );
        assert!(Distribution::maxwellian(g, 0.0, Vec3::zeros(), 1.0).is_err());
        assert!(Distribution::maxwellian(g, 1.0, Vec3::zeros(), -1.0).is_err());
    }

    #[test]
    fn shifted_maxwellian_peaks_near_bulk() {
        let g = grid(13, 3.0);
        let f = Distribution::maxwellian(g, 1.0, Vec3::new(1.0, 0.0, 0.0), 1.0).unwrap();
        let (argmax, _) = f
            .values()
            .iter()
            .enumerate()
            .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert_eq!(g.node_at(argmax), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn interpolation_at_nodes_and_outside() {
        let g = grid(8, 2.0);
        let f = Distribution::from_fn(g, |v| 3.0 + v.x * v.x + 0.3 * v.y * v.z).unwrap();
        for (idx, v) in g.nodes().enumerate().step_by(37) {
            assert_relative_eq!(f.interpolate(&v), f.values()[idx], max_relative = 1e-14);
        }
        assert_eq!(f.interpolate(&Vec3::new(2.0 + 1e-12, 0.0, 0.0)), 0.0);
        assert_eq!(f.interpolate(&Vec3::new(0.0, -3.0, 0.0)), 0.0);
    }

    #[test]
    fn interpolation_cell_center_averages_corners() {
        let g = grid(8, 2.0);
        let f = Distribution::from_fn(g, |v| 4.0 + v.x - 0.5 * v.y + 0.25 * v.z).unwrap();
        let h = g.h();
        let center = g.node(2, 3, 4) + Vec3::repeat(0.5 * h);
        let mut avg = 0.0;
        for dk in 0..2 {
            for dj in 0..2 {
                for di in 0..2 {
                    avg += f.value(2 + di, 3 + dj, 4 + dk) / 8.0;
                }
            }
        }
        assert_relative_eq!(f.interpolate(&center), avg, max_relative = 1e-14);
        assert_relative_eq!(f.interpolate(&center), 4.0 + center.x - 0.5 * center.y + 0.25 * center.z, max_relative = 1e-13);
    }

    #[test]
    fn truncation_limits() {
        let g = grid(9, 2.0);
        let f = Distribution::maxwellian(g, 1.0, Vec3::zeros(), 1.0).unwrap();
        assert_eq!(f.truncate_ball(3f64.sqrt() * 2.0), f);
        let tiny = f.truncate_ball(1e-12);
        let survivors: Vec<_> = tiny.values().iter().enumerate().filter(|(_, v)| **v > 0.0).collect();
        assert_eq!(survivors.len(), 1);
        assert_eq!(g.node_at(survivors[0].0), Vec3::zeros());
    }

    #[test]
    fn matched_maxwellian_reproduces_moments() {
        let g = grid(24, 6.0);
        let a = Distribution::maxwellian(g, 0.5, Vec3::new(1.0, 0.0, 0.0), 0.5).unwrap();
        let b = Distribution::maxwellian(g, 0.5, Vec3::new(-1.0, 0.0, 0.0), 0.5).unwrap();
        let f = a.add(&b).unwrap();
        let m = f.moments(&[]).unwrap();
        assert_relative_eq!(m.temperature(), 0.5 + 1.0 / 3.0, max_relative = 1e-6);
        let eq = f.matched_maxwellian().unwrap();
        assert_relative_eq!(eq.mass(), m.mass, max_relative = 1e-6);
    }
}
