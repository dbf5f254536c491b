//! The smooth cutoff ψ₀, its dyadic partition ψ_j, the kernel φ = ψ̌₀ and
//! the rescaled family φ_j with multipliers φ̂_j(y) = ψ₀(ρ₁(2^j) y / C₁).

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::quad::{bisect, linear_fit, GaussLegendre};
use crate::radius::RadiusFunction;
use crate::spectral::{inverse_transform, GridFunction, GridSpec};

fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

fn bump_exp(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, `θ(t) + θ(1 - t) = 1`.
pub fn smooth_step(t: f64) -> f64 {
    let a = bump_exp(t);
    let b = bump_exp(1.0 - t);
    a / (a + b)
}

/// Radial profile `q(r) = θ(2 - r)` of ψ₀.
pub fn profile(r: f64) -> f64 {
    smooth_step(2.0 - r)
}

pub fn psi0(x: &[f64]) -> f64 {
    profile(norm(x))
}

/// `q(2|x|)`: equal to 1 on `[-1/2, 1/2]`, supported in `[-1, 1]`.
pub fn bump(x: f64) -> f64 {
    profile(2.0 * x.abs())
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `φ(r)` for `|x| = r` by direct quadrature of the inverse transform.
pub fn phi_direct(dim: usize, r: f64) -> Result<f64> {
    let r = r.abs();
    let panels = 8usize.max((4.0 * r).ceil() as usize);
    match dim {
        1 => {
            let core = if r == 0.0 {
                2.0
            } else {
                (2.0 * PI * r).sin() / (PI * r)
            };
            let tail =
                gl16().integrate(1.0, 2.0, panels, |s| profile(s) * (2.0 * PI * r * s).cos());
            Ok(core + 2.0 * tail)
        }
        2 => {
            let core = if r == 0.0 {
                PI
            } else {
                libm::j1(2.0 * PI * r) / r
            };
            let tail = gl16().integrate(1.0, 2.0, panels, |s| {
                profile(s) * libm::j0(2.0 * PI * r * s) * s
            });
            Ok(core + 2.0 * PI * tail)
        }
        d => Err(Error::Unsupported(format!("φ in d = {d}"))),
    }
}

/// Values `f(i h)` of an even function, read back by cubic interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl RadialTable {
    pub fn range(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.spacing
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        let u = r / self.spacing;
        let i = u.floor() as usize;
        let n = self.values.len();
        if i + 2 >= n {
            return if i < n {
                self.values[i] * (1.0 - (u - i as f64))
            } else {
                0.0
            };
        }
        let at = |k: isize| self.values[k.unsigned_abs()];
        let s = u - i as f64;
        let i = i as isize;
        let (f0, f1, f2, f3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
        // Lagrange cubic through nodes -1, 0, 1, 2
        -s * (s - 1.0) * (s - 2.0) / 6.0 * f0 + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * f1
            - (s + 1.0) * s * (s - 2.0) / 2.0 * f2
            + (s + 1.0) * s * (s - 1.0) / 6.0 * f3
    }
}

/// Cached φ with its measured constants.
#[derive(Debug, Clone)]
pub struct PhiCache {
    pub dim: usize,
    pub table: RadialTable,
    /// `∫ φ`, which should equal `ψ₀(0) = 1`.
    pub integral: f64,
    pub l1_norm: f64,
    /// Slope of `log max|φ|` against `log(1 + |x|)` over unit shells.
    pub envelope_exponent: f64,
    /// `sup |φ(x)| (1 + |x|)^{2d}` over the table.
    pub envelope_constant: f64,
    pub tail_mass: f64,
    zeros: Vec<f64>,
}

const TAIL_LIMIT: f64 = 1e-8;

fn shell_weight(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0,
        _ => 2.0 * PI * r,
    }
}

/// Builds φ sampled with `resolution` points per unit of ψ₀'s support.
pub fn build_phi(dim: usize, resolution: usize) -> Result<PhiCache> {
    if resolution < 256 {
        return Err(invalid(
            "resolution",
            "ψ₀ needs at least 256 samples per unit",
        ));
    }
    let table = match dim {
        1 => {
            // ψ₀ sampled at spacing 1/resolution; φ lands on spacing 1/(4 resolution)
            let n = (1024 * resolution).next_power_of_two();
            let freq = GridSpec::new(1, n, 1.0 / resolution as f64)?;
            let samples = GridFunction::from_real_fn(freq, psi0);
            let phi = inverse_transform(&samples);
            RadialTable {
                spacing: phi.grid.spacing,
                values: phi.data[n / 2..].iter().map(|z| z.re).collect(),
            }
        }
        2 => {
            let h = 1.0 / resolution as f64;
            let count = (48.0 / h) as usize + 1;
            let values = (0..count)
                .map(|i| phi_direct(2, i as f64 * h))
                .collect::<Result<Vec<_>>>()?;
            RadialTable { spacing: h, values }
        }
        d => return Err(Error::Unsupported(format!("φ in d = {d}"))),
    };
    let range = table.range();
    let (mut total, mut tail) = (0.0, 0.0);
    for (i, v) in table.values.iter().enumerate() {
        let r = i as f64 * table.spacing;
        let e = v * v * shell_weight(dim, r);
        total += e;
        if r > 0.75 * range {
            tail += e;
        }
    }
    let tail_mass = tail / total;
    if tail_mass > TAIL_LIMIT {
        return Err(Error::Aliasing {
            tail_mass,
            limit: TAIL_LIMIT,
        });
    }
    let cut = range.min(40.0);
    let integral = 2.0
        * gl16().integrate(0.0, cut, (8.0 * cut) as usize, |r| {
            0.5 * shell_weight(dim, r) * phi_direct(dim, r).unwrap_or(0.0)
        });

    let mut shells = (Vec::new(), Vec::new());
    for k in 1..16 {
        let lo = (k as f64 / table.spacing) as usize;
        let hi = ((k + 1) as f64 / table.spacing) as usize;
        let m = table.values[lo..hi]
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        shells.0.push((1.0 + k as f64 + 0.5).ln());
        shells.1.push(m.ln());
    }
    let (envelope_exponent, _) = linear_fit(&shells.0, &shells.1);
    let envelope_constant = table
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| v.abs() * (1.0 + i as f64 * table.spacing).powi(2 * dim as i32))
        .fold(0.0, f64::max);

    let zeros = find_zeros(dim, &table, cut)?;
    let mut cache = PhiCache {
        dim,
        table,
        integral,
        l1_norm: 0.0,
        envelope_exponent,
        envelope_constant,
        tail_mass,
        zeros,
    };
    let nodes = cache.abs_nodes(1.0 / 64.0);
    cache.l1_norm = nodes
        .iter()
        .map(|(r, w, a)| w * a * shell_weight(dim, *r))
        .sum();
    Ok(cache)
}

fn find_zeros(dim: usize, table: &RadialTable, cut: f64) -> Result<Vec<f64>> {
    let mut zeros = Vec::new();
    let last = ((cut / table.spacing) as usize).min(table.values.len() - 1);
    for i in 0..last {
        let (a, b) = (table.values[i], table.values[i + 1]);
        if a == 0.0 || a.signum() != b.signum() {
            let lo = i as f64 * table.spacing;
            let z = bisect(
                lo,
                lo + table.spacing,
                |r| phi_direct(dim, r).unwrap_or(0.0),
                60,
            );
            zeros.push(z);
        }
    }
    Ok(zeros)
}

impl PhiCache {
    /// `φ(x)` for `|x| = r`.
    pub fn eval(&self, r: f64) -> f64 {
        self.table.eval(r)
    }

    /// Positive zeros of φ below the cutoff.
    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    /// Radius beyond which φ is treated as zero.
    pub fn cutoff(&self) -> f64 {
        self.table.range().min(40.0)
    }

    /// Gauss nodes `(r, weight, |φ(r)|)` on `[0, cutoff]`, split at the
    /// zeros of φ so `|φ|` is smooth on every panel.
    pub fn abs_nodes(&self, max_panel: f64) -> Vec<(f64, f64, f64)> {
        let mut breaks = vec![0.0];
        breaks.extend(self.zeros.iter().copied());
        breaks.push(self.cutoff());
        let rule = gl8();
        let mut out = Vec::new();
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let panels = ((b - a) / max_panel).ceil().max(1.0) as usize;
            let step = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + p as f64 * step;
                for (x, wt) in rule.nodes_on(lo, lo + step) {
                    out.push((x, wt, phi_direct(self.dim, x).unwrap_or(0.0).abs()));
                }
            }
        }
        out
    }

    /// `p(t)`, the transform of `|φ|`, and its derivative on `t ∈ [0, 128]`
    /// with a power-law fit of `|p'|` on `[4, 64]` (d = 1).
    pub fn radial_profile_decay(&self) -> Result<RadialProfile> {
        if self.dim != 1 {
            return Err(Error::Unsupported("radial profile outside d = 1".into()));
        }
        let nodes = self.abs_nodes(1.0 / 256.0);
        let dt = 1.0 / 32.0;
        let count = (128.0 / dt) as usize + 1;
        let mut phase: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); nodes.len()];
        let step: Vec<Complex64> = nodes
            .iter()
            .map(|(x, _, _)| Complex64::from_polar(1.0, 2.0 * PI * x * dt))
            .collect();
        let mut ts = Vec::with_capacity(count);
        let mut p = Vec::with_capacity(count);
        let mut dp = Vec::with_capacity(count);
        for k in 0..count {
            let (mut pv, mut dv) = (0.0, 0.0);
            for ((x, w, a), z) in nodes.iter().zip(&phase) {
                pv += w * a * z.re;
                dv += w * a * x * z.im;
            }
            ts.push(k as f64 * dt);
            p.push(2.0 * pv);
            dp.push(-4.0 * PI * dv);
            for (z, s) in phase.iter_mut().zip(&step) {
                *z *= s;
            }
        }
        let floor = 1e-12 * dp.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut hi = 64.0;
        let (mut lx, mut ly) = (Vec::new(), Vec::new());
        while hi > 8.0 {
            lx.clear();
            ly.clear();
            let mut a = 4.0;
            while a < hi {
                let m = ts
                    .iter()
                    .zip(&dp)
                    .filter(|(t, _)| **t >= a && **t < a + 1.0)
                    .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
                lx.push((a + 0.5f64).ln());
                ly.push(m.max(f64::MIN_POSITIVE).ln());
                a += 1.0;
            }
            if ly.iter().all(|v| v.exp() > floor) {
                break;
            }
            hi /= 2.0;
        }
        let (slope, intercept) = linear_fit(&lx, &ly);
        let partial = |upto: f64| {
            let mut s = 0.0;
            for i in 1..count {
                if ts[i] > upto + 1e-12 {
                    break;
                }
                s += 0.5 * dt * (dp[i].abs() + dp[i - 1].abs());
            }
            s
        };
        Ok(RadialProfile {
            p0: p[0],
            partial_short: partial(64.0),
            partial_long: partial(128.0),
            ts,
            p,
            dp,
            slope,
            intercept,
            fit_window: (4.0, hi),
        })
    }
}

#[derive(Debug, Clone)]
pub struct RadialProfile {
    pub ts: Vec<f64>,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub p0: f64,
    pub slope: f64,
    pub intercept: f64,
    pub fit_window: (f64, f64),
    /// `∫₀^64 |p'|`.
    pub partial_short: f64,
    /// `∫₀^128 |p'|`.
    pub partial_long: f64,
}

impl RadialProfile {
    pub fn partial_ratio(&self) -> f64 {
        self.partial_short / self.partial_long
    }
}

/// ψ₀, the partition ψ_j and the φ_j family tied to a radius function.
#[derive(Debug, Clone)]
pub struct MollifierSystem {
    pub dim: usize,
    pub c1: f64,
    pub rho1: RadiusFunction,
    pub phi: Arc<PhiCache>,
    pub j_max: usize,
}

impl MollifierSystem {
    pub fn new(phi: Arc<PhiCache>, rho1: RadiusFunction, c1: f64, j_max: usize) -> Result<Self> {
        if !(c1 > 0.0 && c1.is_finite()) {
            return Err(invalid("c1", "must be positive"));
        }
        Ok(Self {
            dim: phi.dim,
            c1,
            rho1,
            phi,
            j_max,
        })
    }

    /// Smallest `j` with `2^j` at least the largest `|x|` on the grid.
    pub fn default_j_max(grid: &GridSpec) -> usize {
        let r = grid.max_radius();
        let mut j = 0;
        while ((1u64 << j) as f64) < r {
            j += 1;
        }
        j
    }

    pub fn partition_term(&self, j: usize, x: &[f64]) -> f64 {
        partition_term(j, norm(x))
    }

    /// `Σ_{j ≤ j_max} ψ_j(x)`.
    pub fn partition_sum(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        (0..=self.j_max).map(|j| partition_term(j, r)).sum()
    }

    /// Plateau radius `C₁ / ρ₁(2^j)` of φ̂_j; `j = -1` reads `ρ₁(1/2)`.
    pub fn plateau(&self, j: i32) -> f64 {
        self.c1 / self.rho1.eval(2f64.powi(j))
    }

    pub fn hat_phi_j(&self, j: i32, y: &[f64]) -> f64 {
        profile(norm(y) / self.plateau(j))
    }

    pub fn hat_phi_j_radial(&self, j: i32, r: f64) -> f64 {
        profile(r / self.plateau(j))
    }

    /// `φ_j(z) = Y^d φ(Y z)` with `Y` the plateau radius.
    pub fn phi_j(&self, j: i32, r: f64) -> f64 {
        let y = self.plateau(j);
        y.powi(self.dim as i32) * self.phi.eval(y * r)
    }

    /// `2^{jd} φ(2^j z)`, the transform of `ψ₀(·/2^j)`.
    pub fn dyadic_phi(&self, j: i32, r: f64) -> f64 {
        let s = 2f64.powi(j);
        s.powi(self.dim as i32) * self.phi.eval(s * r)
    }
}

/// `ψ_j` at radius `r`.
pub fn partition_term(j: usize, r: f64) -> f64 {
    if j == 0 {
        return profile(r);
    }
    let s = 2f64.powi(j as i32);
    profile(r / s) - profile(2.0 * r / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::forward_transform;
    use proptest::prelude::*;

    fn phi1() -> Arc<PhiCache> {
        static CACHE: OnceLock<Arc<PhiCache>> = OnceLock::new();
        CACHE
            .get_or_init(|| Arc::new(build_phi(1, 256).unwrap()))
            .clone()
    }

    #[test]
    fn profile_values() {
        assert_eq!(profile(0.5), 1.0);
        assert_eq!(profile(2.5), 0.0);
        assert!((profile(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(profile(1.0), 1.0);
        assert_eq!(profile(2.0), 0.0);
    }

    #[test]
    fn profile_is_monotone() {
        let mut prev = 1.0;
        for i in 0..=4000 {
            let v = profile(i as f64 * 5e-4);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn partition_examples() {
        assert_eq!(partition_term(1, 0.5), 0.0);
        let s: f64 = (0..=5).map(|j| partition_term(j, 7.0)).sum();
        assert!((s - 1.0).abs() < 1e-15);
        for i in 0..2000 {
            let r = i as f64 * 0.02;
            let live = (0..12).filter(|&j| partition_term(j, r) != 0.0).count();
            assert!(live <= 3, "{r}");
        }
    }

    #[test]
    fn partition_vanishes_off_annulus() {
        for j in 1..8usize {
            let s = 2f64.powi(j as i32);
            for r in [0.0, 0.4 * s, 0.5 * s, 2.0 * s, 2.5 * s] {
                assert_eq!(partition_term(j, r), 0.0, "j={j} r={r}");
            }
        }
    }

    #[test]
    fn phi_basics() {
        let phi = phi1();
        assert!((phi.eval(0.0) - 3.0).abs() < 1e-10);
        assert!(phi.eval(0.0) > 1.0);
        assert!((phi.integral - 1.0).abs() < 1e-8, "{}", phi.integral);
        assert!(phi.tail_mass < 1e-8);
        assert!(
            phi.envelope_exponent <= -2.0 + 0.2,
            "{}",
            phi.envelope_exponent
        );
        assert!(phi.l1_norm.is_finite() && phi.l1_norm > 1.0);
    }

    #[test]
    fn table_matches_direct_quadrature() {
        let phi = phi1();
        for i in 0..200 {
            let r = 0.0137 + i as f64 * 0.173;
            let direct = phi_direct(1, r).unwrap();
            assert!((phi.eval(r) - direct).abs() < 1e-9, "{r}");
        }
    }

    #[test]
    fn two_dimensional_phi() {
        let phi = build_phi(2, 256).unwrap();
        assert!((phi.eval(0.0) - phi_direct(2, 0.0).unwrap()).abs() < 1e-12);
        assert!((phi.integral - 1.0).abs() < 1e-8, "{}", phi.integral);
        assert!(
            phi.envelope_exponent <= -4.0 + 0.2,
            "{}",
            phi.envelope_exponent
        );
    }

    #[test]
    fn low_resolution_is_refused() {
        assert!(build_phi(1, 128).is_err());
    }

    fn wolff_system() -> MollifierSystem {
        MollifierSystem::new(phi1(), RadiusFunction::power_law(1.0), 1.0, 5).unwrap()
    }

    #[test]
    fn multiplier_examples() {
        let sys = wolff_system();
        for j in -1..6 {
            assert_eq!(sys.hat_phi_j(j, &[0.0]), 1.0);
            let y = 3.0 * sys.plateau(j);
            assert_eq!(sys.hat_phi_j(j, &[y]), 0.0);
            assert_eq!(sys.hat_phi_j(j, &[sys.plateau(j)]), 1.0);
            assert_eq!(sys.hat_phi_j(j, &[2.0 * sys.plateau(j)]), 0.0);
        }
    }

    #[test]
    fn scaled_kernels_keep_l1_norm() {
        let sys = MollifierSystem::new(phi1(), RadiusFunction::power_law(2.0), 1.7, 5).unwrap();
        let nodes = phi1().abs_nodes(1.0 / 64.0);
        for j in -1..5 {
            let y = sys.plateau(j);
            let l1: f64 = nodes
                .iter()
                .map(|(r, w, _)| 2.0 * w / y * sys.phi_j(j, r / y).abs())
                .sum();
            assert!((l1 - sys.phi.l1_norm).abs() < 1e-8 * sys.phi.l1_norm, "{j}");
        }
    }

    #[test]
    fn multiplier_matches_transform_of_kernel() {
        let sys = wolff_system();
        let grid = GridSpec::with_extent(1, 8192, 128.0).unwrap();
        for j in [-1, 0, 1, 2] {
            let f = GridFunction::from_real_fn(grid, |x| sys.phi_j(j, x[0]));
            let fh = forward_transform(&f);
            let mut y = [0.0];
            for (m, z) in fh.data.iter().enumerate() {
                fh.grid.point(m, &mut y);
                let expect = sys.hat_phi_j(j, &y);
                assert!(
                    (z.re - expect).abs() < 1e-6 && z.im.abs() < 1e-6,
                    "j={j} y={}",
                    y[0]
                );
            }
        }
    }

    #[test]
    fn radial_profile() {
        let prof = phi1().radial_profile_decay().unwrap();
        assert!((prof.p0 - phi1().l1_norm).abs() < 1e-8);
        assert!(prof.slope <= -1.8, "{}", prof.slope);
        // ∫_0^128 computed again on a finer t grid as oracle for the tail
        assert!((1.0 - prof.partial_ratio()).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn partition_sums_to_one(r in 0.0f64..32.0) {
            let s: f64 = (0..=5).map(|j| partition_term(j, r)).sum();
            prop_assert!((s - 1.0).abs() < 1e-14);
        }

        #[test]
        fn multipliers_are_nested(y in 0.0f64..100.0, a in 0.2f64..3.0, c1 in 0.3f64..3.0) {
            let sys = MollifierSystem::new(phi1(), RadiusFunction::power_law(a), c1, 6).unwrap();
            for j in 0..6 {
                prop_assert!(sys.hat_phi_j(j, &[y]) - sys.hat_phi_j(j - 1, &[y]) >= 0.0);
                prop_assert!(sys.hat_phi_j(j, &[y]) >= sys.hat_phi_j(j, &[y + 0.1]));
            }
        }
    }
}
