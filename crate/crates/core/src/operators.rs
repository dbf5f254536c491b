//! The operators `S f = Σ ψ_j (φ_{j-1} * f)` and `T f = Σ ψ_j (f - φ_{j-1} * f)`,
//! their kernels, Schur-test sums and the leakage coefficients α, β.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mollifier::{norm, partition_term, MollifierSystem, PhiCache};
use crate::quad::{log_space, GaussLegendre};
use crate::radius::RadiusPair;
use crate::sets::MeasurableSet;
use crate::spectral::{
    defect_weighted, energy_split_weighted, forward_transform, inverse_transform, set_weights,
    GridFunction, GridSpec,
};

/// Kernel tails are dropped beyond this many widths (φ is below 1e-10 there).
const WINDOW: f64 = 40.0;
/// Quadrature panels per kernel width.
const PANELS_PER_WIDTH: f64 = 16.0;

fn gl8() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(8))
}

/// `∫ |f|` over `pieces` using panels no wider than `step`, split at
/// `breaks` where `f` may change sign.
fn integrate_abs(pieces: &[(f64, f64)], step: f64, breaks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let rule = gl8();
    let mut total = 0.0;
    let mut cuts = Vec::new();
    for &(a, b) in pieces {
        cuts.clear();
        cuts.push(a);
        let start = breaks.partition_point(|v| *v <= a);
        cuts.extend(breaks[start..].iter().take_while(|v| **v < b));
        cuts.push(b);
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let panels = ((hi - lo) / step).ceil().max(1.0) as usize;
            let h = (hi - lo) / panels as f64;
            for p in 0..panels {
                let a = lo + p as f64 * h;
                for (x, wt) in rule.nodes_on(a, a + h) {
                    total += wt * f(x).abs();
                }
            }
        }
    }
    total
}

fn clip(seg: (f64, f64), win: (f64, f64)) -> Option<(f64, f64)> {
    let a = seg.0.max(win.0);
    let b = seg.1.min(win.1);
    (b > a).then_some((a, b))
}

#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub sys: MollifierSystem,
    pub pair: RadiusPair,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SchurReport {
    pub sup_row: f64,
    pub sup_col: f64,
    /// `sup_x ∫_E |K(x, y)| dy`.
    pub thin_row_sup: f64,
    /// `sup_y ∫_Σ |L(x, y)| dx`.
    pub thin_col_sup: f64,
    pub l_row_sup: f64,
    pub l_col_sup: f64,
    pub epsilon: f64,
    pub leakage_alpha: f64,
    pub leakage_beta: f64,
    pub phi_l1: f64,
    pub probes: usize,
}

impl SchurReport {
    /// Schur bound on `‖S‖₂`.
    pub fn s_norm_bound(&self) -> f64 {
        (self.sup_row * self.sup_col).sqrt()
    }

    /// `max(1, 4‖S‖²) / (1 - 4(α + β))`, infinite once `4(α + β) >= 1`.
    pub fn chain_constant(&self) -> f64 {
        chain_constant(self.s_norm_bound(), self.leakage_alpha, self.leakage_beta)
    }
}

pub fn chain_constant(s_norm: f64, alpha: f64, beta: f64) -> f64 {
    let slack = 1.0 - 4.0 * (alpha + beta);
    if slack <= 0.0 {
        return f64::INFINITY;
    }
    (4.0 * s_norm * s_norm).max(1.0) / slack
}

/// Probe points in space (`x`) and frequency (`y`), symmetric about 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub space: Vec<f64>,
    pub freq: Vec<f64>,
}

fn symmetric(mut v: Vec<f64>) -> Vec<f64> {
    let neg: Vec<f64> = v.iter().map(|x| -x).collect();
    v.extend(neg);
    v.push(0.0);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpReport {
    pub c_emp: f64,
    pub worst_function: usize,
    pub defects: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// `4(α + β)`.
    pub chain_value: f64,
    pub chain_ok: bool,
    pub c_theory: f64,
    /// Every defect is at most `c_theory`.
    pub inequality_holds: bool,
    pub pair_compatible: bool,
}

impl OperatorPair {
    pub fn new(pair: RadiusPair, phi: Arc<PhiCache>, grid: GridSpec) -> Result<Self> {
        if phi.dim != grid.dim {
            return Err(Error::DimensionMismatch {
                expected: grid.dim,
                got: phi.dim,
            });
        }
        let j_max = MollifierSystem::default_j_max(&grid);
        let sys = MollifierSystem::new(phi, pair.rho1.clone(), pair.c1, j_max)?;
        Ok(Self { sys, pair, grid })
    }

    pub fn with_j_max(mut self, j_max: usize) -> Self {
        self.sys.j_max = j_max;
        self
    }

    pub fn j_max(&self) -> usize {
        self.sys.j_max
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch(format!(
                "operator grid {:?}, function grid {:?}",
                self.grid, f.grid
            )));
        }
        Ok(())
    }

    /// `(S f, T f)` sharing one forward transform.
    pub fn split(&self, f: &GridFunction) -> Result<(GridFunction, GridFunction)> {
        self.check(f)?;
        let fhat = forward_transform(f);
        let radii: Vec<f64> = {
            let mut p = vec![0.0; self.grid.dim];
            (0..self.grid.len())
                .map(|i| {
                    self.grid.point(i, &mut p);
                    norm(&p)
                })
                .collect()
        };
        let mut s = GridFunction::zeros(self.grid);
        let mut t = GridFunction::zeros(self.grid);
        for j in 0..=self.sys.j_max {
            let psi: Vec<f64> = radii.iter().map(|r| partition_term(j, *r)).collect();
            if psi.iter().all(|v| *v == 0.0) {
                continue;
            }
            let g = inverse_transform(&fhat.map(|y, z| z * self.sys.hat_phi_j(j as i32 - 1, y)));
            for i in 0..psi.len() {
                if psi[i] != 0.0 {
                    s.data[i] += psi[i] * g.data[i];
                    t.data[i] += psi[i] * (f.data[i] - g.data[i]);
                }
            }
        }
        Ok((s, t))
    }

    pub fn apply_s(&self, f: &GridFunction) -> Result<GridFunction> {
        Ok(self.split(f)?.0)
    }

    pub fn apply_t(&self, f: &GridFunction) -> Result<GridFunction> {
        Ok(self.split(f)?.1)
    }

    /// `K(x, y) = Σ_j ψ_j(x) φ_{j-1}(x - y)`.
    pub fn kernel_k(&self, x: &[f64], y: &[f64]) -> f64 {
        let rx = norm(x);
        let z: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        (0..=self.sys.j_max)
            .map(|j| {
                let p = partition_term(j, rx);
                if p == 0.0 {
                    0.0
                } else {
                    p * self.sys.phi_j(j as i32 - 1, z)
                }
            })
            .sum()
    }

    /// Coefficients `c_j(y)` of `L`: `φ̂_j - φ̂_{j-1}` below `j_max`, and
    /// `1 - φ̂_{j_max - 1}` at the top level.
    fn l_coefficients(&self, ry: f64) -> Vec<f64> {
        let top = self.sys.j_max as i32;
        (0..=top)
            .map(|j| {
                let lower = self.sys.hat_phi_j_radial(j - 1, ry);
                if j == top {
                    1.0 - lower
                } else {
                    self.sys.hat_phi_j_radial(j, ry) - lower
                }
            })
            .collect()
    }

    /// Kernel of `f̂ ↦ (T f)^`, truncated at `j_max` like `apply_t`.
    pub fn kernel_l(&self, x: &[f64], y: &[f64]) -> f64 {
        let z: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        self.l_coefficients(norm(y))
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| c * self.sys.dyadic_phi(j as i32, z))
            .sum()
    }

    /// `S f (x)` by quadrature of the kernel against `f` (d = 1).
    pub fn s_by_quadrature(&self, x: f64, f: impl Fn(f64) -> Complex64) -> Complex64 {
        let active = self.active_k(x.abs());
        let (lo, hi) = self.k_window(x, &active);
        let step = self.k_step(&active);
        let mut total = Complex64::new(0.0, 0.0);
        let rule = gl8();
        let panels = ((hi - lo) / step).ceil() as usize;
        let h = (hi - lo) / panels as f64;
        for p in 0..panels {
            let a = lo + p as f64 * h;
            for (y, w) in rule.nodes_on(a, a + h) {
                total += f(y) * (w * self.kernel_k(&[x], &[y]));
            }
        }
        total
    }

    /// `(T f)^(x)` by quadrature of `L` against `f̂` (d = 1).
    pub fn t_hat_by_quadrature(&self, x: f64, fhat: impl Fn(f64) -> Complex64) -> Complex64 {
        let rule = gl8();
        let mut total = Complex64::new(0.0, 0.0);
        for (seg, active) in self.l_row_segments(x) {
            let step = active
                .iter()
                .map(|j| 0.5f64.powi(*j as i32))
                .fold(f64::INFINITY, f64::min)
                / PANELS_PER_WIDTH;
            let panels = ((seg.1 - seg.0) / step).ceil().max(1.0) as usize;
            let h = (seg.1 - seg.0) / panels as f64;
            for p in 0..panels {
                let a = seg.0 + p as f64 * h;
                for (y, w) in rule.nodes_on(a, a + h) {
                    total += fhat(y) * (w * self.kernel_l(&[x], &[y]));
                }
            }
        }
        total
    }

    /// Sorted sign-change candidates `center ± w z_k` for each width `w`.
    fn kernel_breaks(&self, center: f64, widths: &[f64]) -> Vec<f64> {
        let zeros = self.sys.phi.zeros();
        let mut out = Vec::with_capacity(2 * zeros.len() * widths.len());
        for w in widths {
            for z in zeros {
                out.push(center - w * z);
                out.push(center + w * z);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    fn active_k(&self, r: f64) -> Vec<usize> {
        (0..=self.sys.j_max)
            .filter(|&j| partition_term(j, r) != 0.0)
            .collect()
    }

    fn width(&self, j: usize) -> f64 {
        1.0 / self.sys.plateau(j as i32 - 1)
    }

    fn k_window(&self, center: f64, active: &[usize]) -> (f64, f64) {
        let w = active.iter().map(|j| self.width(*j)).fold(0.0, f64::max);
        (center - WINDOW * w, center + WINDOW * w)
    }

    fn k_step(&self, active: &[usize]) -> f64 {
        active
            .iter()
            .map(|j| self.width(*j))
            .fold(f64::INFINITY, f64::min)
            / PANELS_PER_WIDTH
    }

    fn require_1d(&self) -> Result<()> {
        if self.grid.dim != 1 {
            return Err(Error::Unsupported("kernel sums outside d = 1".into()));
        }
        Ok(())
    }

    /// `∫ |K(x, y)| dy`, over `restrict ∩ ℝ` when a set is given.
    pub fn k_row(&self, x: f64, restrict: Option<&MeasurableSet>) -> Result<f64> {
        self.require_1d()?;
        let active = self.active_k(x.abs());
        if active.is_empty() {
            return Ok(0.0);
        }
        let win = self.k_window(x, &active);
        let pieces = match restrict {
            Some(s) => s.pieces_1d(win.0, win.1)?,
            None => vec![win],
        };
        let coef: Vec<(f64, i32)> = active
            .iter()
            .map(|&j| (partition_term(j, x.abs()), j as i32 - 1))
            .collect();
        let widths: Vec<f64> = active.iter().map(|j| self.width(*j)).collect();
        let breaks = self.kernel_breaks(x, &widths);
        Ok(integrate_abs(&pieces, self.k_step(&active), &breaks, |y| {
            coef.iter()
                .map(|(p, j)| p * self.sys.phi_j(*j, (x - y).abs()))
                .sum()
        }))
    }

    /// `∫ |K(x, y)| dx`.
    pub fn k_col(&self, y: f64) -> Result<f64> {
        self.require_1d()?;
        let top = 2f64.powi(self.sys.j_max as i32 + 1);
        let mut breaks = vec![0.0, 1.0, 2.0];
        for j in 1..=self.sys.j_max + 1 {
            breaks.push(2f64.powi(j as i32 - 1));
            breaks.push(2f64.powi(j as i32 + 1));
        }
        breaks.retain(|b| *b <= top);
        let mut all: Vec<f64> = breaks.iter().flat_map(|b| [*b, -*b]).collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        let mut total = 0.0;
        for seg in all.windows(2) {
            let mid = 0.5 * (seg[0] + seg[1]);
            let active = self.active_k(mid.abs());
            if active.is_empty() {
                continue;
            }
            let Some(piece) = clip((seg[0], seg[1]), self.k_window(y, &active)) else {
                continue;
            };
            let widths: Vec<f64> = active.iter().map(|j| self.width(*j)).collect();
            let breaks = self.kernel_breaks(y, &widths);
            total += integrate_abs(&[piece], self.k_step(&active), &breaks, |x| {
                let rx = x.abs();
                active
                    .iter()
                    .map(|&j| partition_term(j, rx) * self.sys.phi_j(j as i32 - 1, (x - y).abs()))
                    .sum()
            });
        }
        Ok(total)
    }

    /// `∫ |L(x, y)| dx`, over `restrict` when given.
    pub fn l_col(&self, y: f64, restrict: Option<&MeasurableSet>) -> Result<f64> {
        self.require_1d()?;
        let coef = self.l_coefficients(y.abs());
        let active: Vec<usize> = (0..coef.len()).filter(|&j| coef[j] != 0.0).collect();
        if active.is_empty() {
            return Ok(0.0);
        }
        let wmax = active
            .iter()
            .map(|j| 0.5f64.powi(*j as i32))
            .fold(0.0, f64::max);
        let wmin = active
            .iter()
            .map(|j| 0.5f64.powi(*j as i32))
            .fold(f64::INFINITY, f64::min);
        let win = (y - WINDOW * wmax, y + WINDOW * wmax);
        let pieces = match restrict {
            Some(s) => s.pieces_1d(win.0, win.1)?,
            None => vec![win],
        };
        let widths: Vec<f64> = active.iter().map(|j| 0.5f64.powi(*j as i32)).collect();
        let breaks = self.kernel_breaks(y, &widths);
        Ok(integrate_abs(
            &pieces,
            wmin / PANELS_PER_WIDTH,
            &breaks,
            |x| {
                active
                    .iter()
                    .map(|&j| coef[j] * self.sys.dyadic_phi(j as i32, (x - y).abs()))
                    .sum()
            },
        ))
    }

    fn l_row_segments(&self, x: f64) -> Vec<((f64, f64), Vec<usize>)> {
        let top = self.sys.j_max as i32;
        let mut breaks = vec![0.0];
        for j in -1..=top {
            breaks.push(self.sys.plateau(j));
            breaks.push(2.0 * self.sys.plateau(j));
        }
        let reach = WINDOW;
        let (lo, hi) = (x - reach, x + reach);
        let mut all: Vec<f64> = breaks
            .iter()
            .flat_map(|b| [*b, -*b])
            .chain([lo, hi])
            .filter(|b| *b >= lo && *b <= hi)
            .collect();
        all.sort_by(f64::total_cmp);
        all.dedup();
        let mut out = Vec::new();
        for seg in all.windows(2) {
            let mid = 0.5 * (seg[0] + seg[1]);
            let coef = self.l_coefficients(mid.abs());
            let active: Vec<usize> = (0..coef.len()).filter(|&j| coef[j] != 0.0).collect();
            if active.is_empty() {
                continue;
            }
            let wmax = active
                .iter()
                .map(|j| 0.5f64.powi(*j as i32))
                .fold(0.0, f64::max);
            if let Some(piece) = clip((seg[0], seg[1]), (x - WINDOW * wmax, x + WINDOW * wmax)) {
                out.push((piece, active));
            }
        }
        out
    }

    /// `∫ |L(x, y)| dy`.
    pub fn l_row(&self, x: f64) -> Result<f64> {
        self.require_1d()?;
        let mut total = 0.0;
        for (piece, active) in self.l_row_segments(x) {
            let wmin = active
                .iter()
                .map(|j| 0.5f64.powi(*j as i32))
                .fold(f64::INFINITY, f64::min);
            let widths: Vec<f64> = active.iter().map(|j| 0.5f64.powi(*j as i32)).collect();
            let breaks = self.kernel_breaks(x, &widths);
            total += integrate_abs(&[piece], wmin / PANELS_PER_WIDTH, &breaks, |y| {
                let coef = self.l_coefficients(y.abs());
                active
                    .iter()
                    .map(|&j| coef[j] * self.sys.dyadic_phi(j as i32, (x - y).abs()))
                    .sum()
            });
        }
        Ok(total)
    }

    /// 256 log-spaced radii plus the annulus midpoints `0.75 · 2^j`, and
    /// their frequency-side analogues at `1.5 · C₁/ρ₁(2^j)`.
    pub fn default_probes(&self) -> ProbeSet {
        let top = self.sys.j_max as i32;
        let mut space = log_space(1.0 / 16.0, 2f64.powi(top + 1), 256);
        space.extend((0..=top + 1).map(|j| 0.75 * 2f64.powi(j)));
        let (lo, hi) = (self.sys.plateau(-1) / 16.0, 2.0 * self.sys.plateau(top));
        let mut freq = log_space(lo, hi.max(2.0 * lo), 256);
        freq.extend((-1..=top).map(|j| 1.5 * self.sys.plateau(j)));
        ProbeSet {
            space: symmetric(space),
            freq: symmetric(freq),
        }
    }

    /// Per-function leakages `(‖S χ_E f‖², ‖χ_Σ (Tf)^‖²) / ‖f‖²`.
    pub fn leakage(
        &self,
        f: &GridFunction,
        e_weights: &[f64],
        s_weights: &[f64],
    ) -> Result<(f64, f64)> {
        let norm = f.norm_sq();
        if norm == 0.0 {
            return Err(Error::ZeroFunction);
        }
        let restricted = GridFunction {
            grid: f.grid,
            data: f.data.iter().zip(e_weights).map(|(z, w)| z * *w).collect(),
        };
        let s = self.apply_s(&restricted)?;
        let t = self.apply_t(f)?;
        let that = forward_transform(&t);
        let beta = energy_split_weighted(&that, s_weights).on_set;
        Ok((s.norm_sq() / norm, beta / norm))
    }

    /// Schur sums on `probes` plus leakages maximised over `corpus`.
    pub fn schur_bounds_with(
        &self,
        e: &MeasurableSet,
        sigma: &MeasurableSet,
        epsilon: f64,
        corpus: &[GridFunction],
        probes: &ProbeSet,
    ) -> Result<SchurReport> {
        if probes.space.is_empty() || probes.freq.is_empty() {
            return Err(Error::EmptyProbes);
        }
        let mut r = SchurReport {
            epsilon,
            phi_l1: self.sys.phi.l1_norm,
            probes: probes.space.len() + probes.freq.len(),
            ..SchurReport::default()
        };
        let e_empty = e.measure() == 0.0;
        let s_empty = sigma.measure() == 0.0;
        for &x in &probes.space {
            r.sup_row = r.sup_row.max(self.k_row(x, None)?);
            r.sup_col = r.sup_col.max(self.k_col(x)?);
            if !e_empty {
                r.thin_row_sup = r.thin_row_sup.max(self.k_row(x, Some(e))?);
            }
        }
        for &y in &probes.freq {
            r.l_row_sup = r.l_row_sup.max(self.l_row(y)?);
            r.l_col_sup = r.l_col_sup.max(self.l_col(y, None)?);
            if !s_empty {
                r.thin_col_sup = r.thin_col_sup.max(self.l_col(y, Some(sigma))?);
            }
        }
        let we = set_weights(&self.grid, e)?;
        let ws = set_weights(&self.grid.dual(), sigma)?;
        for f in corpus {
            let (a, b) = self.leakage(f, &we, &ws)?;
            r.leakage_alpha = r.leakage_alpha.max(a);
            r.leakage_beta = r.leakage_beta.max(b);
        }
        Ok(r)
    }

    pub fn schur_bounds(
        &self,
        e: &MeasurableSet,
        sigma: &MeasurableSet,
        epsilon: f64,
        corpus: &[GridFunction],
    ) -> Result<SchurReport> {
        self.schur_bounds_with(e, sigma, epsilon, corpus, &self.default_probes())
    }

    /// Empirical constant of the inequality over `corpus`, with the
    /// sufficiency check `4(α + β) <= 1/2` and the constant it implies.
    pub fn verify_up_inequality(
        &self,
        e: &MeasurableSet,
        sigma: &MeasurableSet,
        corpus: &[GridFunction],
        s_norm: f64,
    ) -> Result<UpReport> {
        let we = set_weights(&self.grid, e)?;
        let ws = set_weights(&self.grid.dual(), sigma)?;
        let mut defects = Vec::with_capacity(corpus.len());
        let (mut alpha, mut beta) = (0.0f64, 0.0f64);
        for f in corpus {
            self.check(f)?;
            let fhat = forward_transform(f);
            defects.push(defect_weighted(f, &fhat, &we, &ws)?);
            let (a, b) = self.leakage(f, &we, &ws)?;
            alpha = alpha.max(a);
            beta = beta.max(b);
        }
        let (worst_function, c_emp) =
            defects
                .iter()
                .copied()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (i, d)| if d > acc.1 { (i, d) } else { acc },
                );
        let chain_value = 4.0 * (alpha + beta);
        let c_theory = chain_constant(s_norm, alpha, beta);
        Ok(UpReport {
            c_emp,
            worst_function,
            inequality_holds: defects.iter().all(|d| *d <= c_theory),
            defects,
            alpha,
            beta,
            chain_value,
            chain_ok: chain_value <= 0.5,
            c_theory,
            pair_compatible: self.pair.is_compatible(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::mollifier::{build_phi, profile};
    use crate::radius::RadiusFunction;
    use crate::sets::thin_lattice;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn phi1() -> Arc<PhiCache> {
        static CACHE: OnceLock<Arc<PhiCache>> = OnceLock::new();
        CACHE
            .get_or_init(|| Arc::new(build_phi(1, 256).unwrap()))
            .clone()
    }

    fn grid() -> GridSpec {
        GridSpec::with_extent(1, 4096, 64.0).unwrap()
    }

    fn wolff() -> OperatorPair {
        OperatorPair::new(RadiusPair::wolff(), phi1(), grid()).unwrap()
    }

    fn small_probes() -> ProbeSet {
        ProbeSet {
            space: vec![-5.3, -0.7, 0.0, 0.4, 1.5, 3.0, 12.0, 24.0],
            freq: vec![-9.0, 0.0, 0.6, 1.5, 3.0, 6.0, 24.0, 47.0],
        }
    }

    #[test]
    fn identity_on_corpus() {
        let op = wolff();
        assert_eq!(op.j_max(), 5);
        for f in corpus::generate(11, 12, 1) {
            let f = f.sample(&grid());
            let (s, t) = op.split(&f).unwrap();
            let err = s.add(&t).unwrap().distance(&f).unwrap() / f.norm();
            assert!(err <= 1e-8, "{err}");
        }
    }

    #[test]
    fn band_limited_input_passes_through_s() {
        let op = wolff();
        let reach = op.sys.plateau(-1);
        let fhat = GridFunction::from_real_fn(grid().dual(), |y| profile(2.0 * y[0].abs() / reach));
        let f = inverse_transform(&fhat);
        let (s, t) = op.split(&f).unwrap();
        assert!(s.distance(&f).unwrap() <= 1e-8 * f.norm());
        assert!(t.norm() <= 1e-8 * f.norm());
        let zero = GridFunction::zeros(grid());
        assert_eq!(op.apply_s(&zero).unwrap().norm(), 0.0);
    }

    #[test]
    fn oscillatory_input_passes_through_t() {
        let op = wolff();
        let f = GridFunction::from_fn(grid(), |x| {
            Complex64::from_polar((-PI * x[0] * x[0]).exp(), 2.0 * PI * 20.0 * x[0])
        });
        let t = op.apply_t(&f).unwrap();
        assert!(t.distance(&f).unwrap() <= 1e-10 * f.norm());
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let f = GridFunction::zeros(GridSpec::with_extent(1, 1024, 64.0).unwrap());
        assert!(matches!(wolff().apply_s(&f), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn kernel_k_structure() {
        let op = wolff();
        for x in [0.0f64, 0.3, -0.9, 1.0] {
            for y in [-2.0f64, 0.1, 0.77] {
                let only = partition_term(0, x.abs()) * op.sys.phi_j(-1, (x - y).abs());
                assert_eq!(op.kernel_k(&[x], &[y]), only);
            }
        }
        // signed row integral equals the partition sum
        for x in [0.2, 1.7, 5.0, 13.0] {
            let active = op.active_k(x);
            let (lo, hi) = op.k_window(x, &active);
            let s = GaussLegendre::new(16).integrate(lo, hi, 4096, |y| op.kernel_k(&[x], &[y]));
            assert!((s - 1.0).abs() < 1e-8, "{x}: {s}");
        }
    }

    #[test]
    fn kernel_and_multiplier_paths_agree() {
        let op = wolff();
        let fc = &corpus::generate(5, 3, 1)[1];
        let f = fc.sample(&grid());
        let (s, t) = op.split(&f).unwrap();
        let that = forward_transform(&t);
        let mut p = [0.0];
        for i in [1500usize, 1900, 2048, 2300, 2700] {
            grid().point(i, &mut p);
            let quad = op.s_by_quadrature(p[0], |y| fc.eval(&[y]));
            assert!((quad - s.data[i]).norm() < 1e-4, "S at {}", p[0]);
            that.grid.point(i, &mut p);
            let quad = op.t_hat_by_quadrature(p[0], |y| fc.eval_hat(&[y]));
            assert!((quad - that.data[i]).norm() < 1e-4, "T̂ at {}", p[0]);
        }
    }

    #[test]
    fn kernel_l_structure() {
        let op = wolff();
        for x in [-3.0, 0.0, 2.5] {
            assert_eq!(op.kernel_l(&[x], &[0.0]), 0.0);
        }
        for i in 0..2000 {
            let y = i as f64 * 0.05;
            assert!(op.l_coefficients(y).iter().all(|c| *c >= 0.0));
        }
    }

    #[test]
    fn schur_sums_bounded_by_phi_norm() {
        let op = wolff();
        let empty = MeasurableSet::empty(1);
        let r = op
            .schur_bounds_with(&empty, &empty, 0.0, &[], &small_probes())
            .unwrap();
        let l1 = op.sys.phi.l1_norm;
        assert!(r.sup_row <= 3.0 * l1 * (1.0 + 1e-6));
        // a single partition term gives exactly ‖φ‖₁
        assert!((op.k_row(0.4, None).unwrap() - l1).abs() < 1e-7 * l1);
        assert_eq!(r.thin_row_sup, 0.0);
        assert_eq!(r.leakage_alpha, 0.0);
    }

    #[test]
    fn s_norm_within_schur_bound() {
        let op = wolff();
        let empty = MeasurableSet::empty(1);
        let r = op
            .schur_bounds_with(&empty, &empty, 0.0, &[], &op.default_probes())
            .unwrap();
        for f in corpus::generate(2, 9, 1) {
            let f = f.sample(&grid());
            assert!(op.apply_s(&f).unwrap().norm() <= r.s_norm_bound() * f.norm());
        }
    }

    #[test]
    fn empty_sets_give_half() {
        let op = wolff();
        let empty = MeasurableSet::empty(1);
        let fs: Vec<_> = corpus::generate(1, 6, 1)
            .iter()
            .map(|f| f.sample(&grid()))
            .collect();
        let up = op.verify_up_inequality(&empty, &empty, &fs, 1.7).unwrap();
        assert!((up.c_emp - 0.5).abs() < 1e-12);
        assert!(up.inequality_holds && up.chain_ok);
    }

    #[test]
    fn thin_sums_scale_with_epsilon() {
        let op = wolff();
        let rho = RadiusFunction::power_law(1.0);
        let mut ratios = Vec::new();
        for eps in [0.05, 0.2] {
            let e = MeasurableSet::Periodic(thin_lattice(&rho, eps, 32.0, 0.25).unwrap());
            let row = [0.5, 3.0, 20.0]
                .iter()
                .map(|x| op.k_row(*x, Some(&e)).unwrap())
                .fold(0.0, f64::max);
            // oracle: the lattice holds a 2ε/3 fraction of every long window
            assert!(row <= op.sys.phi.l1_norm * eps);
            ratios.push(row / eps);
        }
        assert!(ratios[0] / ratios[1] < 3.0 && ratios[1] / ratios[0] < 3.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn split_is_identity(c in -10.0f64..10.0, w in 0.5f64..4.0, xi in -12.0f64..12.0) {
            let op = wolff();
            let f = GridFunction::from_fn(grid(), |x| {
                Complex64::from_polar((-PI * (x[0] - c).powi(2) / (w * w)).exp(), 2.0 * PI * xi * x[0])
            });
            let (s, t) = op.split(&f).unwrap();
            prop_assert!(s.add(&t).unwrap().distance(&f).unwrap() <= 1e-8 * f.norm());
        }
    }
}
