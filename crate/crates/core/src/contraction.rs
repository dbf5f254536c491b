//! Symbols built from characteristic functions of atomic probability
//! measures, thinness of their level sets, and the norm of `T_H T_G`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus;
use crate::error::{invalid, Error, Result};
use crate::quad::log_space;
use crate::radius::RadiusFunction;
use crate::sets::{certify_thinness, CenterSpec, MeasurableSet, ThinnessCertificate};
use crate::spectral::{
    defect_weighted, forward_transform, inverse_transform, GridFunction, GridSpec,
};

/// Finite sum of point masses with positive weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
}

impl AtomicMeasure {
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|(x, w)| !x.is_finite() || !(*w > 0.0)) {
            return Err(invalid("atoms", "locations finite, weights positive"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("atoms", format!("weights sum to {total}")));
        }
        let first = atoms.first().map(|a| a.0);
        if atoms.iter().all(|a| Some(a.0) == first) {
            return Err(invalid("atoms", "need two distinct locations"));
        }
        Ok(Self { atoms })
    }

    /// `(δ₀ + δ₁) / 2`.
    pub fn bernoulli() -> Self {
        Self::new(vec![(0.0, 0.5), (1.0, 0.5)]).expect("valid")
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    /// Largest distance between atoms.
    pub fn span(&self) -> f64 {
        let lo = self.atoms.iter().map(|a| a.0).fold(f64::INFINITY, f64::min);
        let hi = self
            .atoms
            .iter()
            .map(|a| a.0)
            .fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }

    /// Parses `atoms:x1:w1,x2:w2,...` or `bernoulli`.
    pub fn parse(s: &str) -> Result<Self> {
        let err = |r: &str| Error::Parse {
            input: s.to_string(),
            reason: r.to_string(),
        };
        let s = s.trim();
        if s == "bernoulli" {
            return Ok(Self::bernoulli());
        }
        let body = s
            .strip_prefix("atoms:")
            .ok_or_else(|| err("expected `atoms:`"))?;
        let mut atoms = Vec::new();
        for part in body.split(',') {
            let (x, w) = part.split_once(':').ok_or_else(|| err("atom is `x:w`"))?;
            let x: f64 = x.trim().parse().map_err(|_| err("bad location"))?;
            let w: f64 = w.trim().parse().map_err(|_| err("bad weight"))?;
            atoms.push((x, w));
        }
        Self::new(atoms)
    }
}

impl fmt::Display for AtomicMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.atoms.iter().map(|(x, w)| format!("{x}:{w}")).collect();
        write!(f, "atoms:{}", parts.join(","))
    }
}

/// `Σ w_j e^{-2πi ξ x_j}` for raw atoms, valid or not.
pub fn char_function_raw(atoms: &[(f64, f64)], xi: f64) -> Complex64 {
    atoms
        .iter()
        .map(|(x, w)| Complex64::from_polar(*w, -2.0 * PI * xi * x))
        .sum()
}

pub fn char_function(mu: &AtomicMeasure, xi: f64) -> Complex64 {
    char_function_raw(&mu.atoms, xi)
}

/// `F ∩ [lo, hi]` for `F = {ξ : |μ̂(ξ)| > 1 - δ}` as sorted intervals.
pub fn level_set(mu: &AtomicMeasure, delta: f64, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid("delta", "must lie in (0, 1]"));
    }
    let thr = 1.0 - delta;
    let g = |xi: f64| char_function(mu, xi).norm() - thr;
    let pitch = 1.0 / (64.0 * mu.span().max(1e-9));
    let steps = ((hi - lo) / pitch).ceil().max(1.0) as usize;
    let root = |mut a: f64, mut b: f64| {
        let ga = g(a);
        for _ in 0..100 {
            let m = 0.5 * (a + b);
            if (g(m) > 0.0) == (ga > 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };
    let mut out = Vec::new();
    let mut start = if g(lo) > 0.0 { Some(lo) } else { None };
    let mut prev = lo;
    let mut prev_in = start.is_some();
    for i in 1..=steps {
        let x = lo + (hi - lo) * i as f64 / steps as f64;
        let now_in = g(x) > 0.0;
        if now_in != prev_in {
            let r = root(prev, x);
            if now_in {
                start = Some(r);
            } else if let Some(s) = start.take() {
                out.push((s, r));
            }
        }
        prev = x;
        prev_in = now_in;
    }
    if let Some(s) = start {
        out.push((s, hi));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelDensity {
    /// `max_x |F ∩ [x, x + 1]|` over the windows.
    pub density: f64,
    pub worst_window: f64,
    pub windows: usize,
}

/// Largest measure of `F` in the unit windows `[j, j + 1]`,
/// `0 <= j < window_count`; `|μ̂|` is even so negative windows repeat these.
pub fn level_set_density(
    mu: &AtomicMeasure,
    delta: f64,
    window_count: usize,
) -> Result<LevelDensity> {
    if window_count == 0 {
        return Err(Error::EmptyProbes);
    }
    let mut best = (0.0f64, 0.0);
    for j in 0..window_count {
        let a = j as f64;
        let m: f64 = level_set(mu, delta, a, a + 1.0)?
            .iter()
            .map(|(s, t)| t - s)
            .sum();
        if m > best.0 {
            best = (m, a);
        }
    }
    Ok(LevelDensity {
        density: best.0,
        worst_window: best.1,
        windows: window_count,
    })
}

/// `G(x) = |μ̂₁(Q₁(x))|`, `H(y) = |μ̂₂(Q₂(y))|` with `Q₁ = |x|^p`,
/// `Q₂ = |y|^{p'}` (or the per-axis forms `Σ a_i |x_i|^p`).
#[derive(Debug, Clone)]
pub struct SymbolPair {
    pub p: f64,
    pub p_conj: f64,
    pub mu1: AtomicMeasure,
    pub mu2: AtomicMeasure,
    pub delta: f64,
    pub axis_weights: Option<(Vec<f64>, Vec<f64>)>,
}

impl SymbolPair {
    pub fn new(p: f64, mu1: AtomicMeasure, mu2: AtomicMeasure, delta: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid("p", "must lie in (1, inf)"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        Ok(Self {
            p,
            p_conj: p / (p - 1.0),
            mu1,
            mu2,
            delta,
            axis_weights: None,
        })
    }

    /// Per-axis quadratic forms `Σ a_i |x_i|^p`, `Σ b_i |y_i|^{p'}`.
    pub fn with_axis_weights(mut self, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.iter().chain(&b).any(|v| *v == 0.0 || !v.is_finite()) || a.len() != b.len() {
            return Err(invalid("axis_weights", "nonzero, equal lengths"));
        }
        self.axis_weights = Some((a, b));
        Ok(self)
    }

    fn form(x: &[f64], p: f64, w: Option<&[f64]>) -> f64 {
        match w {
            Some(a) => x.iter().zip(a).map(|(v, c)| c * v.abs().powf(p)).sum(),
            None => x.iter().map(|v| v * v).sum::<f64>().sqrt().powf(p),
        }
    }

    pub fn q1(&self, x: &[f64]) -> f64 {
        Self::form(
            x,
            self.p,
            self.axis_weights.as_ref().map(|w| w.0.as_slice()),
        )
    }

    pub fn q2(&self, y: &[f64]) -> f64 {
        Self::form(
            y,
            self.p_conj,
            self.axis_weights.as_ref().map(|w| w.1.as_slice()),
        )
    }

    pub fn g(&self, x: &[f64]) -> f64 {
        char_function(&self.mu1, self.q1(x)).norm().min(1.0)
    }

    pub fn h(&self, y: &[f64]) -> f64 {
        char_function(&self.mu2, self.q2(y)).norm().min(1.0)
    }

    /// `min(t^{-(p-1)}, 1)`.
    pub fn rho1(&self) -> RadiusFunction {
        RadiusFunction::power_law(self.p - 1.0)
    }

    /// `min(t^{-(p'-1)}, 1)`.
    pub fn rho2(&self) -> RadiusFunction {
        RadiusFunction::power_law(self.p_conj - 1.0)
    }

    /// `E = {|G| > 1 - δ} ∩ [-x_max, x_max]` on the line, exactly.
    pub fn e_set(&self, x_max: f64) -> Result<MeasurableSet> {
        pullback(&self.mu1, self.delta, self.p, x_max)
    }

    /// `Σ = {|H| > 1 - δ} ∩ [-x_max, x_max]` on the line, exactly.
    pub fn sigma_set(&self, x_max: f64) -> Result<MeasurableSet> {
        pullback(&self.mu2, self.delta, self.p_conj, x_max)
    }
}

fn pullback(mu: &AtomicMeasure, delta: f64, p: f64, x_max: f64) -> Result<MeasurableSet> {
    let f = level_set(mu, delta, 0.0, x_max.powf(p))?;
    let mut ivs = Vec::with_capacity(2 * f.len());
    for (a, b) in f {
        let (a, b) = (a.powf(1.0 / p), b.powf(1.0 / p));
        ivs.push((a, b));
        ivs.push((-b, -a));
    }
    Ok(MeasurableSet::Intervals(
        crate::sets::IntervalSet::from_unsorted(ivs),
    ))
}

#[derive(Debug, Clone)]
pub struct PullbackReport {
    pub level_e: LevelDensity,
    pub level_sigma: LevelDensity,
    pub cert_e: ThinnessCertificate,
    pub cert_sigma: ThinnessCertificate,
    /// Sup of the relative mass over centers with `|x| >= FAR`.
    pub far_e: f64,
    pub far_sigma: f64,
    /// Largest `max |∇Q| / min |∇Q|` over probed discs with `|x| >= FAR`.
    pub gradient_ratio_e: f64,
    pub gradient_ratio_sigma: f64,
    /// `max(ε^{1/p}, ε)` and `max(ε^{1/p'}, ε)` for the measured densities.
    pub allowed_e: f64,
    pub allowed_sigma: f64,
}

impl PullbackReport {
    pub fn passes(&self) -> bool {
        self.cert_e.epsilon_measured <= self.allowed_e
            && self.cert_sigma.epsilon_measured <= self.allowed_sigma
    }
}

/// Centers at `|x| >= FAR` count as large.
pub const FAR: f64 = 2.0;
const WINDOWS: usize = 64;

/// Certifies `E` w.r.t. `ρ₁` and `Σ` w.r.t. `ρ₂` on `[-x_max, x_max]` by
/// direct measurement.
pub fn pullback_thinness(sym: &SymbolPair, eps_target: f64, x_max: f64) -> Result<PullbackReport> {
    let level_e = level_set_density(&sym.mu1, sym.delta, WINDOWS)?;
    let level_sigma = level_set_density(&sym.mu2, sym.delta, WINDOWS)?;
    if level_e.density.max(level_sigma.density) > eps_target * (1.0 + 1e-9) {
        return Err(invalid(
            "delta",
            format!(
                "level densities {} / {} exceed the target {eps_target}",
                level_e.density, level_sigma.density
            ),
        ));
    }
    let one = |set: &MeasurableSet,
               rho: &RadiusFunction,
               p: f64|
     -> Result<(ThinnessCertificate, f64, f64)> {
        let spec = CenterSpec::adaptive(x_max);
        let cert = certify_thinness(set, rho, &spec)?;
        let far = certify_thinness(set, rho, &far_centers(x_max))?;
        let mut grad = 1.0f64;
        for t in log_space(FAR, x_max, 64) {
            let r = rho.eval(t);
            let lo = (t - r).max(0.0);
            grad = grad.max(((t + r) / lo).powf(p - 1.0));
        }
        Ok((cert, far.epsilon_measured, grad))
    };
    let (cert_e, far_e, gradient_ratio_e) = one(&sym.e_set(x_max)?, &sym.rho1(), sym.p)?;
    let (cert_sigma, far_sigma, gradient_ratio_sigma) =
        one(&sym.sigma_set(x_max)?, &sym.rho2(), sym.p_conj)?;
    let allowed = |e: f64, p: f64| e.powf(1.0 / p).max(e);
    Ok(PullbackReport {
        allowed_e: allowed(level_e.density, sym.p),
        allowed_sigma: allowed(level_sigma.density, sym.p_conj),
        level_e,
        level_sigma,
        cert_e,
        cert_sigma,
        far_e,
        far_sigma,
        gradient_ratio_e,
        gradient_ratio_sigma,
    })
}

fn far_centers(x_max: f64) -> CenterSpec {
    let half = 0.5 * (x_max - FAR);
    let mid = FAR + half;
    CenterSpec::Windows {
        windows: vec![(vec![mid], half), (vec![-mid], half)],
        refine: 4,
    }
}

#[derive(Debug, Clone)]
pub struct ContractionOptions {
    /// Trial functions live on `|x| <= window`; defaults to an eighth of
    /// the grid extent.
    pub window: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub corpus_size: usize,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        Self {
            window: None,
            tol: 1e-6,
            max_iter: 20_000,
            seed: 7,
            corpus_size: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContractionReport {
    /// `sqrt` of the last Rayleigh quotient of `A*A`.
    pub beta: f64,
    /// Bounds on `‖T_H T_G‖` over the window when the iteration stalls.
    pub interval: (f64, f64),
    pub iterations: usize,
    pub converged: bool,
    pub rayleigh: Vec<f64>,
    pub window: f64,
    /// Largest `‖f‖² / (∫_{E^c}|f|² + ∫_{Σ^c}|f̂|²)` over the corpus, the
    /// top vector `v` and `Gv`.
    pub c_emp: f64,
    /// `1 - C⁻¹ (1 - (1 - δ)²)`, an upper bound for `β²`.
    pub bound_chain_value: f64,
}

impl ContractionReport {
    pub fn chain_ok(&self) -> bool {
        self.beta * self.beta <= self.bound_chain_value * (1.0 + 1e-9)
    }
}

/// `‖T_H T_G‖₂` over functions supported in the window, by power
/// iteration on `A*A` with `A f = H · (G f)^`; the outer transform is
/// unitary and drops out of the norm.
pub fn composition_norm(
    sym: &SymbolPair,
    grid: &GridSpec,
    opts: &ContractionOptions,
) -> Result<ContractionReport> {
    composition_norm_with(grid, |x| sym.g(x), |y| sym.h(y), sym.delta, opts)
}

/// As [`composition_norm`] for arbitrary symbols with values in `[0, 1]`.
pub fn composition_norm_with(
    grid: &GridSpec,
    g: impl Fn(&[f64]) -> f64,
    h: impl Fn(&[f64]) -> f64,
    delta: f64,
    opts: &ContractionOptions,
) -> Result<ContractionReport> {
    let window = opts.window.unwrap_or(grid.extent() / 8.0);
    if !(window > 0.0) {
        return Err(invalid("window", "must be positive"));
    }
    let dual = grid.dual();
    let gvals = sample(grid, |x| {
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() <= window {
            g(x)
        } else {
            0.0
        }
    });
    let hvals = sample(&dual, &h);
    let apply = |f: &GridFunction| -> GridFunction {
        let gf = scale_by(f, &gvals);
        scale_by(&forward_transform(&gf), &hvals)
    };
    let adjoint = |u: &GridFunction| -> GridFunction {
        let hu = scale_by(u, &hvals);
        scale_by(&inverse_transform(&hu), &gvals)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v = GridFunction::from_fn(*grid, |_| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    v = scale_by(&v, &gvals);
    let nv = v.norm();
    if nv == 0.0 {
        return Ok(degenerate(window, delta));
    }
    v = v.scale(1.0 / nv);
    let mut rayleigh = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..opts.max_iter.max(1) {
        iterations = it + 1;
        let av = apply(&v);
        let lam = av.norm_sq();
        let w = adjoint(&av);
        let nw = w.norm();
        rayleigh.push(lam);
        if nw == 0.0 {
            converged = true;
            break;
        }
        if it > 0 {
            let prev = rayleigh[rayleigh.len() - 2];
            if (lam - prev).abs() <= opts.tol * lam {
                converged = true;
                break;
            }
        }
        v = w.scale(1.0 / nw);
    }
    let lam = *rayleigh.last().unwrap_or(&0.0);
    let beta = lam.max(0.0).sqrt();

    // empirical constant on the grid level sets
    let thr = 1.0 - delta;
    let we: Vec<f64> = gvals
        .iter()
        .map(|g| if *g > thr { 1.0 } else { 0.0 })
        .collect();
    let ws: Vec<f64> = hvals
        .iter()
        .map(|h| if *h > thr { 1.0 } else { 0.0 })
        .collect();
    let mut c_emp = 1.0f64;
    let mut consider = |f: &GridFunction| -> Result<()> {
        if f.norm_sq() > 0.0 {
            let fh = forward_transform(f);
            c_emp = c_emp.max(defect_weighted(f, &fh, &we, &ws)?);
        }
        Ok(())
    };
    consider(&v)?;
    consider(&scale_by(&v, &gvals))?;
    let cfg = corpus::CorpusRanges::default();
    for cf in corpus::generate_with(opts.seed, opts.corpus_size, grid.dim, &cfg) {
        consider(&cf.sample(grid))?;
    }
    let a = 1.0 - thr * thr;
    Ok(ContractionReport {
        beta,
        interval: if converged { (beta, beta) } else { (beta, 1.0) },
        iterations,
        converged,
        rayleigh,
        window,
        c_emp,
        bound_chain_value: 1.0 - a / c_emp,
    })
}

fn degenerate(window: f64, delta: f64) -> ContractionReport {
    ContractionReport {
        beta: 0.0,
        interval: (0.0, 0.0),
        iterations: 0,
        converged: true,
        rayleigh: vec![0.0],
        window,
        c_emp: 1.0,
        bound_chain_value: (1.0 - delta).powi(2),
    }
}

fn sample(grid: &GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = vec![0.0; grid.dim];
    (0..grid.len())
        .map(|i| {
            grid.point(i, &mut p);
            f(&p)
        })
        .collect()
}

fn scale_by(f: &GridFunction, s: &[f64]) -> GridFunction {
    let data = f.data.iter().zip(s).map(|(z, w)| z * *w).collect();
    GridFunction { grid: f.grid, data }
}

/// `‖T_G f‖ = ‖G f‖` for a symbol sampled on the grid of `f`.
pub fn apply_symbol(f: &GridFunction, g: impl Fn(&[f64]) -> f64) -> GridFunction {
    forward_transform(&scale_by(f, &sample(&f.grid, g)))
}
