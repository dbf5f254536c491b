//! Families `(f_n, E_n, Σ_n)` with `supp f_n ⊂ E_n` whose spectral leakage
//! outside `Σ_n` vanishes, built from a violation of the compatibility
//! condition.
//!
//! Leakage ratios are evaluated from the closed form of `f̂_n` (a Dirichlet
//! kernel times a rescaled bump transform in one dimension, a tensor
//! product in two), so the construction runs at its literal sizes. Small
//! instances can also be sampled and measured on a grid.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};
use crate::mollifier::bump;
use crate::quad::{log_space, GaussLegendre};
use crate::radius::{RadiusFunction, RadiusPair};
use crate::sets::{
    certify_periodic, certify_thinness, Aabb, CenterSpec, MeasurableSet, PeriodicIntervals,
    ThinnessCertificate,
};
use crate::spectral::{energy_split, forward_transform, GridFunction, GridSpec};

pub const T_MAX: f64 = 1e15;
const PROBES: usize = 4000;
/// Slab widths are shrunk by this factor so that a disc of radius
/// `r >= ρ` holds at most `4h/(π r) <= ε` of the slab.
pub const SLAB_SHRINK: f64 = PI / 4.0;
/// `|φ̂(v)|²` is below 1e-30 of its peak past this frequency.
const V_MAX: f64 = 48.0;
const DIRECT_BUDGET: usize = 100_000;
const CERT_TOL: f64 = 1e-9;

/// Constants attached to the scale parameter `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// `C1 = k/ε`, `C2 = k²/ε` (the lattice construction on the line).
    Lattice,
    /// `C1 = C2 = k/ε` (the slab construction in `d >= 2`).
    Slab,
}

impl Scheme {
    pub fn constants(self, eps: f64, k: f64) -> (f64, f64) {
        match self {
            Self::Lattice => (k / eps, k * k / eps),
            Self::Slab => (k / eps, k / eps),
        }
    }
}

/// Smallest probed `t` with `C2 / ρ₂(C1 / ρ₁(t)) < t` under `scheme`,
/// refined by bisection; `None` when the condition holds up to [`T_MAX`].
pub fn find_violation(pair: &RadiusPair, scheme: Scheme, eps: f64, k: f64) -> Result<Option<f64>> {
    if !(k >= 1.0) {
        return Err(invalid("k", "must be at least 1"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid("eps", "must lie in (0, 1)"));
    }
    let (c1, c2) = scheme.constants(eps, k);
    find_violation_with(&pair.with_constants(c1, c2)?, T_MAX, PROBES)
}

pub fn find_violation_with(pair: &RadiusPair, t_max: f64, probes: usize) -> Result<Option<f64>> {
    // ρ₂ underflowing to zero or a subnormal makes the left side infinite
    let margin = |t: f64| -> Result<f64> {
        let inner = pair.c1 / pair.rho1.try_eval(t)?;
        let r2 = pair.rho2.eval(inner);
        if r2.is_nan() || r2 < 0.0 {
            return Err(Error::NonFinite { t });
        }
        Ok(pair.c2 / r2 - t)
    };
    let mut ts = vec![0.0];
    ts.extend(log_space(1e-3, t_max, probes.max(2)));
    let mut prev = 0.0;
    for &t in &ts {
        if margin(t)? < 0.0 {
            if t == 0.0 {
                return Ok(Some(0.0));
            }
            let (mut lo, mut hi) = (prev, t);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if margin(mid)? < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(hi));
        }
        prev = t;
    }
    Ok(None)
}

/// The bump `φ` on `[-1, 1]` with its transform evaluated by quadrature.
struct BumpSpectrum {
    nodes: Vec<(f64, f64)>,
    norm_sq: f64,
}

fn spectrum() -> &'static BumpSpectrum {
    static S: OnceLock<BumpSpectrum> = OnceLock::new();
    S.get_or_init(|| {
        let gl = GaussLegendre::new(16);
        let mut nodes = Vec::new();
        let panels = 128;
        for p in 0..panels {
            let a = p as f64 / panels as f64;
            let b = (p + 1) as f64 / panels as f64;
            for (x, w) in gl.nodes_on(a, b) {
                nodes.push((x, w * bump(x)));
            }
        }
        let norm_sq = 2.0 * gl.integrate(0.0, 1.0, panels, |x| bump(x).powi(2));
        BumpSpectrum { nodes, norm_sq }
    })
}

impl BumpSpectrum {
    fn hat(&self, v: f64) -> f64 {
        2.0 * self
            .nodes
            .iter()
            .map(|(x, wb)| wb * (2.0 * PI * v * x).cos())
            .sum::<f64>()
    }

    /// `∫_{|v| > s} |φ̂|² / ‖φ‖²`.
    fn tail(&self, s: f64) -> f64 {
        let s = s.abs();
        if s >= V_MAX {
            return 0.0;
        }
        let gl = gl16();
        let panels = (4.0 * s).ceil().max(1.0) as usize;
        let inner = 2.0 * gl.integrate(0.0, s, panels, |v| self.hat(v).powi(2));
        (1.0 - inner / self.norm_sq).max(0.0)
    }
}

fn gl16() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(16))
}

/// `|D_{n-1}(u)|² = sin²(Mπu) / sin²(πu)` with `M = 2n - 1`.
fn dirichlet_sq(m: f64, u: f64) -> f64 {
    let den = (PI * u).sin();
    if den == 0.0 {
        return m * m;
    }
    ((m * PI * u).sin() / den).powi(2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Requirement {
    pub name: &'static str,
    pub value: f64,
    pub holds: bool,
}

impl Requirement {
    fn large(name: &'static str, value: f64) -> Self {
        Self {
            name,
            value,
            holds: value > 1.0,
        }
    }

    fn small(name: &'static str, value: f64) -> Self {
        Self {
            name,
            value,
            holds: value < 1.0,
        }
    }
}

/// Geometry of an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `f = Σ_{|j|<n} φ((x - j)/w)`, `E = ∪ [j - w, j + w]`,
    /// `Σ = ∪_{|l|<a} [l - δ, l + δ]`.
    Lattice { n: u64, a: u64, w: f64, delta: f64 },
    /// `f = b(x₁/L) b(x₂/h)` with `b = φ(2·)`, `E = [-L, L] x [-h, h]`,
    /// `Σ = [-δ, δ] x [-L', L']`.
    Slab {
        long_e: f64,
        h_e: f64,
        long_sigma: f64,
        delta: f64,
    },
}

#[derive(Debug, Clone)]
pub struct CounterexampleInstance {
    pub dim: usize,
    pub k: f64,
    pub eps: f64,
    pub t_k: Option<f64>,
    pub n: u64,
    pub a_n: f64,
    pub shape: Shape,
    pub e_n: MeasurableSet,
    pub sigma_n: MeasurableSet,
    pub norm_sq: f64,
    /// `∫_{Σ_n^c} |f̂_n|² / ‖f_n‖²`.
    pub ratio: f64,
    /// `∫_{E_n^c} |f_n|² / ‖f_n‖²`.
    pub mass_outside: f64,
    pub thinness_e: ThinnessCertificate,
    pub thinness_sigma: ThinnessCertificate,
    pub requirements: Vec<Requirement>,
    /// `∫_{[-1/2, 1/2] \ [-δ, δ]} |D_{n-1}|²` on the line.
    pub dirichlet_offpeak: Option<f64>,
    pub notes: Vec<String>,
}

impl CounterexampleInstance {
    /// `‖f‖² / (∫_{E^c}|f|² + ∫_{Σ^c}|f̂|²)`.
    pub fn defect(&self) -> f64 {
        let d = self.mass_outside + self.ratio;
        if d > 0.0 {
            1.0 / d
        } else {
            f64::INFINITY
        }
    }

    pub fn certificates_pass(&self) -> bool {
        self.thinness_e.passes(self.eps, CERT_TOL) && self.thinness_sigma.passes(self.eps, CERT_TOL)
    }

    /// `‖f_n‖² / (n (ε ρ₁(n))^{max(d-1, 1)})`, of order one along a ladder.
    pub fn norm_scale(&self, rho1: &RadiusFunction) -> f64 {
        let n = self.n as f64;
        let p = (self.dim as i32 - 1).max(1);
        self.norm_sq / (n * (self.eps * rho1.eval(n)).powi(p))
    }

    /// Samples `f_n`; refuses grids with fewer than 8 samples across a bump.
    pub fn materialize(&self, grid: &GridSpec) -> Result<GridFunction> {
        if grid.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: grid.dim,
            });
        }
        let (lo, hi) = grid.cell_bounds();
        match self.shape {
            Shape::Lattice { n, w, .. } => {
                require_resolution(grid, 2.0 * w)?;
                let reach = (n - 1) as f64 + w;
                if reach > hi.min(-lo) {
                    return Err(Error::OutsideDomain {
                        overhang: reach - hi.min(-lo),
                    });
                }
                let m = (n - 1) as f64;
                Ok(GridFunction::from_real_fn(*grid, |x| {
                    let j = x[0].round();
                    if j.abs() > m {
                        0.0
                    } else {
                        bump((x[0] - j) / w)
                    }
                }))
            }
            Shape::Slab { long_e, h_e, .. } => {
                require_resolution(grid, h_e)?;
                if 0.5 * long_e > hi.min(-lo) {
                    return Err(Error::OutsideDomain {
                        overhang: 0.5 * long_e - hi.min(-lo),
                    });
                }
                Ok(GridFunction::from_real_fn(*grid, |x| {
                    bump(2.0 * x[0] / long_e) * bump(2.0 * x[1] / h_e)
                }))
            }
        }
    }

    /// The ratio measured by sampling `f_n` on `grid` and splitting the
    /// energy of its discrete transform over `Σ_n` on the dual grid.
    pub fn grid_ratio(&self, grid: &GridSpec) -> Result<f64> {
        let f = self.materialize(grid)?;
        let fhat = forward_transform(&f);
        let split = energy_split(&fhat, &self.sigma_n)?;
        Ok(split.off_set / f.norm_sq())
    }
}

fn require_resolution(grid: &GridSpec, width: f64) -> Result<()> {
    if width / grid.spacing >= 8.0 {
        return Ok(());
    }
    let needed = (grid.extent() * 8.0 / width).ceil() as usize;
    Err(Error::Unresolved {
        required_n: needed.next_power_of_two(),
    })
}

/// Leakage of the lattice construction and the off-peak Dirichlet mass.
///
/// `∫_Σ |f̂|² = ∫_{-δ}^{δ} |D|² Σ_{|l|<a} g(l + u) du` with
/// `g(y) = w² |φ̂(w y)|²`, and `Σ_{l∈Z} g(l + u) = w ‖φ‖²` because the
/// autocorrelation of `φ(·/w)` vanishes at nonzero integers.
pub fn lattice_ratio(n: u64, a: u64, w: f64, delta: f64) -> Result<(f64, f64)> {
    if n == 0 || a == 0 {
        return Err(invalid("n", "counts must be positive"));
    }
    if !(w > 0.0 && w < 0.5 && delta > 0.0 && delta < 0.5) {
        return Err(invalid("widths", "need 0 < w, delta < 1/2"));
    }
    let spec = spectrum();
    let m = (2 * n - 1) as f64;
    let panels = (2.0 * m * delta).ceil().max(1.0);
    if panels > 1e8 {
        return Err(Error::Unsupported(format!("{panels} quadrature panels")));
    }
    let panels = panels as usize;
    let gl = gl16();
    let first = a as f64;
    let terms = (V_MAX / w - first).ceil().max(0.0) as usize;
    let direct = terms * panels * 16 <= DIRECT_BUDGET;
    let tau_far = spec.tail((first - 0.5) * w);
    let tau = |u: f64| -> f64 {
        if !direct {
            return tau_far;
        }
        let mut s = 0.0;
        for i in 0..terms {
            let l = first + i as f64;
            s += spec.hat(w * (l + u)).powi(2) + spec.hat(w * (l - u)).powi(2);
        }
        w * s / spec.norm_sq
    };
    let mut peak = 0.0;
    let mut kept = 0.0;
    let h = delta / panels as f64;
    for p in 0..panels {
        for (u, wt) in gl.nodes_on(p as f64 * h, (p + 1) as f64 * h) {
            let d2 = dirichlet_sq(m, u);
            peak += wt * d2;
            kept += wt * d2 * (1.0 - tau(u));
        }
    }
    let ratio = 1.0 - 2.0 * kept / m;
    Ok((ratio.max(0.0), m - 2.0 * peak))
}

/// Leakage of the slab construction: `1 - (1 - T₁)(1 - T₂)` with `T` the
/// spectral tail of `b = φ(2·)`.
pub fn slab_ratio(long_e: f64, h_e: f64, long_sigma: f64, delta: f64) -> f64 {
    let spec = spectrum();
    let t1 = spec.tail(0.5 * long_e * delta);
    let t2 = spec.tail(0.5 * long_sigma * h_e);
    1.0 - (1.0 - t1) * (1.0 - t2)
}

/// Relative `L²` mass of the bump outside `[-1, 1]` up to `reach`, by
/// quadrature.
fn bump_mass_outside(reach: f64) -> f64 {
    let spec = spectrum();
    if reach <= 1.0 {
        return 0.0;
    }
    let panels = ((reach - 1.0) * 64.0).ceil().min(1e5) as usize;
    2.0 * gl16().integrate(1.0, reach, panels.max(1), |x| bump(x).powi(2)) / spec.norm_sq
}

/// Lattice instance from explicit parameters.
#[allow(clippy::too_many_arguments)]
pub fn lattice_instance(
    rho1: &RadiusFunction,
    rho2: &RadiusFunction,
    eps: f64,
    n: u64,
    a: u64,
    w: f64,
    delta: f64,
) -> Result<CounterexampleInstance> {
    let (ratio, offpeak) = lattice_ratio(n, a, w, delta)?;
    let e = PeriodicIntervals::new(n, w, 1.0, 0.0)?;
    let s = PeriodicIntervals::new(a, delta, 1.0, 0.0)?;
    let thinness_e = certify_periodic(&e, rho1, 16)?;
    let thinness_sigma = certify_periodic(&s, rho2, 16)?;
    let nf = n as f64;
    let af = a as f64;
    let spec = spectrum();
    Ok(CounterexampleInstance {
        dim: 1,
        k: f64::NAN,
        eps,
        t_k: None,
        n,
        a_n: af,
        shape: Shape::Lattice { n, a, w, delta },
        e_n: MeasurableSet::Periodic(e),
        sigma_n: MeasurableSet::Periodic(s),
        norm_sq: (2.0 * nf - 1.0) * w * spec.norm_sq,
        ratio,
        mass_outside: bump_mass_outside(0.5 / w),
        thinness_e,
        thinness_sigma,
        requirements: vec![
            Requirement::large("a_n eps rho1(n) >> 1", af * eps * rho1.eval(nf)),
            Requirement::small(
                "a_n rho1(n) / (n rho2(a_n)) << 1",
                af * rho1.eval(nf) / (nf * rho2.eval(af)),
            ),
        ],
        dirichlet_offpeak: Some(offpeak),
        notes: Vec::new(),
    })
}

/// Slab instance in the plane from explicit parameters.
pub fn slab_instance(
    rho1: &RadiusFunction,
    rho2: &RadiusFunction,
    eps: f64,
    n: u64,
    a_n: f64,
) -> Result<CounterexampleInstance> {
    let d = 2.0;
    let nf = n as f64;
    if !(nf > d && a_n > d) {
        return Err(invalid("n", "slabs need n, a_n > d"));
    }
    let long_e = nf - d;
    let h_e = SLAB_SHRINK * eps * rho1.try_eval(nf)?;
    let long_sigma = a_n - d;
    let delta = SLAB_SHRINK * eps * rho2.try_eval(a_n)?;
    let e = MeasurableSet::boxes(2, vec![Aabb::new(vec![-long_e, -h_e], vec![long_e, h_e])?])?;
    let s = MeasurableSet::boxes(
        2,
        vec![Aabb::new(
            vec![-delta, -long_sigma],
            vec![delta, long_sigma],
        )?],
    )?;
    let thinness_e = certify_thinness(&e, rho1, &CenterSpec::slab_worst_along(2, 0, long_e, rho1))?;
    let thinness_sigma = certify_thinness(
        &s,
        rho2,
        &CenterSpec::slab_worst_along(2, 1, long_sigma, rho2),
    )?;
    let spec = spectrum();
    let b_sq = 0.5 * spec.norm_sq;
    // `b = φ(2·)` leaves `[-1/2, 1/2]` empty of mass; E has twice that reach.
    let outside = bump_mass_outside(2.0);
    Ok(CounterexampleInstance {
        dim: 2,
        k: f64::NAN,
        eps,
        t_k: None,
        n,
        a_n,
        shape: Shape::Slab {
            long_e,
            h_e,
            long_sigma,
            delta,
        },
        e_n: e,
        sigma_n: s,
        norm_sq: long_e * h_e * b_sq * b_sq,
        ratio: slab_ratio(long_e, h_e, long_sigma, delta),
        mass_outside: 1.0 - (1.0 - outside) * (1.0 - outside),
        thinness_e,
        thinness_sigma,
        requirements: vec![
            Requirement::large("eps rho2(a_n) n >> 1", eps * rho2.eval(a_n) * nf),
            Requirement::large("a_n eps rho1(n) >> 1", a_n * eps * rho1.eval(nf)),
        ],
        dirichlet_offpeak: None,
        notes: Vec::new(),
    })
}

fn check_normalization(rho1: &RadiusFunction, rho2: &RadiusFunction, n: f64, a: f64) -> Result<()> {
    if !(rho1.eval(n) < 0.5 && rho2.eval(a) < 0.5) {
        return Err(invalid(
            "pair",
            format!("need rho1(n), rho2(a_n) < 1/2 (n = {n}, a_n = {a})"),
        ));
    }
    Ok(())
}

/// The line construction with `C1 = k/ε`, `C2 = k²/ε`, `n = [t_k]` and
/// `a_n = [C1 / ρ₁(n)]`. Degenerate counts raise `k` by one.
pub fn build_1d(pair: &RadiusPair, eps: f64, k: f64) -> Result<CounterexampleInstance> {
    let mut k = k;
    let mut notes = Vec::new();
    loop {
        let t_k = find_violation(pair, Scheme::Lattice, eps, k)?
            .ok_or(Error::NoViolation { t_max: T_MAX })?;
        let n = t_k.floor();
        let (c1, _) = Scheme::Lattice.constants(eps, k);
        let a = (c1 / pair.rho1.try_eval(n.max(1.0))?).floor();
        if n <= 1.0 || a <= 1.0 {
            notes.push(format!("k = {k} gives n = {n}, a_n = {a}; raised k"));
            k += 1.0;
            if k > 1e6 {
                return Err(invalid("k", "no nondegenerate instance"));
            }
            continue;
        }
        check_normalization(&pair.rho1, &pair.rho2, n, a)?;
        let w = eps * pair.rho1.eval(n);
        let delta = eps * pair.rho2.eval(a);
        let mut inst = lattice_instance(&pair.rho1, &pair.rho2, eps, n as u64, a as u64, w, delta)?;
        inst.k = k;
        inst.t_k = Some(t_k);
        inst.notes = notes;
        return Ok(inst);
    }
}

/// The slab construction in the plane with `C1 = C2 = k/ε`, `n` the first
/// integer above `d` violating the condition and `a_n = C1 / ρ₁(n)`.
pub fn build_highdim(
    pair: &RadiusPair,
    eps: f64,
    k: f64,
    d: usize,
) -> Result<CounterexampleInstance> {
    if d != 2 {
        return Err(Error::Unsupported(format!("slab construction in d = {d}")));
    }
    let df = d as f64;
    let (c1, c2) = Scheme::Slab.constants(eps, k);
    let scaled = pair.with_constants(c1, c2)?;
    let t_k =
        find_violation(pair, Scheme::Slab, eps, k)?.ok_or(Error::NoViolation { t_max: T_MAX })?;
    let mut n = t_k.ceil().max(df + 1.0);
    let mut notes = Vec::new();
    let mut guard = 0;
    while scaled.condition_value(n)? >= n {
        n += 1.0;
        guard += 1;
        if guard > 10_000 {
            return Err(Error::NoViolation { t_max: n });
        }
    }
    if guard > 0 {
        notes.push(format!("moved n up by {guard} to a violating integer"));
    }
    let a_n = c1 / pair.rho1.try_eval(n)?;
    check_normalization(&pair.rho1, &pair.rho2, n, a_n)?;
    let mut inst = slab_instance(&pair.rho1, &pair.rho2, eps, n as u64, a_n)?;
    inst.k = k;
    inst.t_k = Some(t_k);
    inst.notes = notes;
    Ok(inst)
}

/// One instance per `k`, in order.
pub fn ladder(
    pair: &RadiusPair,
    eps: f64,
    ks: &[f64],
    dim: usize,
) -> Result<Vec<CounterexampleInstance>> {
    ks.iter()
        .map(|&k| {
            if dim == 1 {
                build_1d(pair, eps, k)
            } else {
                build_highdim(pair, eps, k, dim)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::inverse_transform;
    use num_complex::Complex64;

    #[test]
    fn violations() {
        let inc = RadiusPair::incompatible();
        assert_eq!(
            find_violation(&RadiusPair::wolff(), Scheme::Lattice, 0.1, 4.0).unwrap(),
            None
        );
        let cut = RadiusPair::new(
            RadiusFunction::power_law(8.0),
            RadiusFunction::power_law(8.0),
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(
            find_violation(&cut, Scheme::Lattice, 0.1, 4.0).unwrap(),
            None
        );
        let mut last = 0.0;
        for k in [2.0, 4.0, 8.0] {
            let t = find_violation(&inc, Scheme::Lattice, 0.1, k)
                .unwrap()
                .unwrap();
            // oracle: (k²/ε) sqrt(k t / ε) < t  <=>  t > k⁵ / ε³
            let exact = k.powi(5) / 1e-3;
            assert!((t / exact - 1.0).abs() < 1e-9, "{k}: {t} vs {exact}");
            assert!(t > last);
            last = t;
        }
        assert!(find_violation(&inc, Scheme::Lattice, 0.1, 0.5).is_err());
    }

    #[test]
    fn bump_spectrum_oracles() {
        let s = spectrum();
        // φ̂(0) = ∫ φ and the tail starts at 1
        let mass = 2.0 * gl16().integrate(0.0, 1.0, 64, bump);
        assert!((s.hat(0.0) - mass).abs() < 1e-13);
        assert!((s.tail(0.0) - 1.0).abs() < 1e-13);
        // Parseval on a 2^17 FFT grid of extent 256
        let grid = GridSpec::with_extent(1, 1 << 17, 256.0).unwrap();
        let f = GridFunction::from_real_fn(grid, |x| bump(x[0]));
        let fh = forward_transform(&f);
        for sv in [1.0, 2.0, 4.0] {
            let mut t = 0.0;
            for (i, z) in fh.data.iter().enumerate() {
                let v = fh.grid.coord(i).abs();
                // trapezoid weight at the cut
                let wt = if v > sv {
                    1.0
                } else if v == sv {
                    0.5
                } else {
                    0.0
                };
                t += wt * z.norm_sqr() * fh.grid.spacing;
            }
            let t = t / s.norm_sq;
            assert!(
                (s.tail(sv) - t).abs() < 1e-4 * t,
                "{sv}: {} {t}",
                s.tail(sv)
            );
        }
    }

    #[test]
    fn dirichlet_peak_integrates_to_m() {
        // ∫_{-1/2}^{1/2} |D|² = M, so the off-peak mass at δ = 1/2 is zero
        let (_, off) = lattice_ratio(5, 40, 0.2, 0.4999999).unwrap();
        assert!(off.abs() < 1e-4, "{off}");
        let (_, off) = lattice_ratio(50, 40, 0.001, 0.05).unwrap();
        // bounded by 1/δ up to a constant
        assert!(off > 0.0 && off < 1.0 / 0.05);
    }

    #[test]
    fn single_bump_leaks_past_one_interval() {
        // n = 1: no interference, the ratio is the bump's own tail past Σ
        let w = 0.1;
        let a = 3;
        let delta = 0.3;
        let (r, _) = lattice_ratio(1, a, w, delta).unwrap();
        let spec = spectrum();
        // oracle: direct quadrature of w²|φ̂(w y)|² over Σ = ∪_{|l|<a}[l-δ, l+δ]
        let mut inside = 0.0;
        for l in -(a as i64 - 1)..=(a as i64 - 1) {
            inside += gl16().integrate(l as f64 - delta, l as f64 + delta, 64, |y| {
                (w * spec.hat(w * y)).powi(2)
            });
        }
        let oracle = 1.0 - inside / (w * spec.norm_sq);
        assert!((r - oracle).abs() < 1e-10, "{r} vs {oracle}");
    }

    #[test]
    fn lattice_matches_grid() {
        let rho = RadiusFunction::power_law(1.0);
        let inst = lattice_instance(&rho, &rho, 0.5, 4, 3, 0.1, 0.2).unwrap();
        let grid = GridSpec::with_extent(1, 1 << 17, 256.0).unwrap();
        let g = inst.grid_ratio(&grid).unwrap();
        assert!(
            (g - inst.ratio).abs() < 1e-3 * inst.ratio,
            "{g} vs {}",
            inst.ratio
        );
        let f = inst.materialize(&grid).unwrap();
        assert!(
            (f.norm_sq() / inst.norm_sq - 1.0).abs() < 1e-7,
            "{}",
            f.norm_sq() / inst.norm_sq
        );
        let coarse = GridSpec::with_extent(1, 256, 16.0).unwrap();
        assert!(matches!(
            inst.materialize(&coarse),
            Err(Error::Unresolved { .. })
        ));
    }

    #[test]
    fn far_tail_summation_agrees() {
        // direct summation of the truncated tail vs its integral form
        let w = 0.02;
        let a = 60;
        let (r1, _) = lattice_ratio(2, a, w, 0.01).unwrap();
        let spec = spectrum();
        let m = 3.0;
        let gl = gl16();
        let peak = 2.0 * gl.integrate(0.0, 0.01, 4, |u| dirichlet_sq(m, u));
        let r2 = 1.0 - peak / m * (1.0 - spec.tail((a as f64 - 0.5) * w));
        assert!((r1 - r2).abs() < 1e-5 * r2, "{r1} vs {r2}");
    }

    #[test]
    fn slab_matches_grid_and_separates() {
        let pair = RadiusPair::incompatible();
        let inst = slab_instance(&pair.rho1, &pair.rho2, 0.8, 3, 7.0).unwrap();
        let grid = GridSpec::with_extent(2, 1024, 16.0).unwrap();
        let g = inst.grid_ratio(&grid).unwrap();
        assert!(
            (g - inst.ratio).abs() < 2e-3 * inst.ratio.max(1e-2),
            "{g} vs {}",
            inst.ratio
        );
        // f̂ equals the product of the one-dimensional transforms
        let f = inst.materialize(&grid).unwrap();
        let fh = forward_transform(&f);
        let Shape::Slab { long_e, h_e, .. } = inst.shape else {
            unreachable!()
        };
        let g1 = GridSpec::with_extent(1, 1024, 16.0).unwrap();
        let a = forward_transform(&GridFunction::from_real_fn(g1, |x| {
            bump(2.0 * x[0] / long_e)
        }));
        let b = forward_transform(&GridFunction::from_real_fn(g1, |x| bump(2.0 * x[0] / h_e)));
        let mut err = 0.0f64;
        for i in 0..1024 {
            for j in 0..1024 {
                let z: Complex64 = fh.data[i * 1024 + j] - a.data[i] * b.data[j];
                err = err.max(z.norm());
            }
        }
        assert!(
            err < 1e-8 * a.data[512].norm() * b.data[512].norm(),
            "{err}"
        );
        let back = inverse_transform(&fh);
        assert!(back.distance(&f).unwrap() < 1e-10 * f.norm());
    }

    #[test]
    fn line_ladder_decreases() {
        let pair = RadiusPair::incompatible();
        let rho1 = &pair.rho1;
        let mut prev: Option<CounterexampleInstance> = None;
        for k in [2.0, 4.0, 8.0] {
            let inst = build_1d(&pair, 0.1, k).unwrap();
            assert!(
                inst.certificates_pass(),
                "{k}: {:?} {:?}",
                inst.thinness_e,
                inst.thinness_sigma
            );
            assert_eq!(inst.mass_outside, 0.0);
            assert!(
                inst.requirements.iter().all(|r| r.holds),
                "{:?}",
                inst.requirements
            );
            let s = inst.norm_scale(rho1);
            assert!(s > 1.0 && s < 4.0, "{s}");
            if let Some(p) = &prev {
                assert!(inst.ratio < p.ratio);
                assert!(inst.defect() > p.defect());
            }
            prev = Some(inst);
        }
        let r8 = prev.unwrap().ratio;
        let r2 = build_1d(&pair, 0.1, 2.0).unwrap().ratio;
        assert!(r8 / r2 <= 0.1, "{}", r8 / r2);
    }

    #[test]
    fn plane_ladder_decreases() {
        let pair = RadiusPair::incompatible();
        let insts = ladder(&pair, 0.1, &[2.0, 4.0, 8.0], 2).unwrap();
        let scales: Vec<f64> = insts.iter().map(|i| i.norm_scale(&pair.rho1)).collect();
        for w in insts.windows(2) {
            assert!(w[1].ratio < w[0].ratio);
        }
        for i in &insts {
            assert!(
                i.certificates_pass(),
                "{:?} {:?}",
                i.thinness_e,
                i.thinness_sigma
            );
            assert!(i.mass_outside < 1e-10);
        }
        let hi = scales.iter().cloned().fold(0.0, f64::max);
        let lo = scales.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(hi <= 2.0 * lo, "{scales:?}");
    }

    #[test]
    fn compatible_pairs_refuse() {
        assert!(matches!(
            build_1d(&RadiusPair::wolff(), 0.1, 2.0),
            Err(Error::NoViolation { .. })
        ));
        assert!(build_highdim(&RadiusPair::incompatible(), 0.1, 2.0, 3).is_err());
    }
}
