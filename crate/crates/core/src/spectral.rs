//! Sampled functions on centered uniform grids and the continuous Fourier
//! transform `f̂(y) = ∫ f(x) e^{-2πi x·y} dx` realised by FFT.
//!
//! Grid point `k` along an axis sits at `(k - N/2) h`; the dual grid has
//! spacing `1 / (N h)` and the same layout. Samples are stored row-major.

use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::sets::MeasurableSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub n: usize,
    pub spacing: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, spacing: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "must be positive"));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(invalid("n", format!("{n} is not a power of two >= 2")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(invalid("spacing", "must be positive and finite"));
        }
        Ok(Self { dim, n, spacing })
    }

    /// Grid with `n` points per axis over an extent `r`.
    pub fn with_extent(dim: usize, n: usize, r: f64) -> Result<Self> {
        Self::new(dim, n, r / n as f64)
    }

    /// Parses `N=4096,R=64[,d=1]`.
    pub fn parse(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (mut n, mut r, mut d) = (None, None, 1usize);
        for kv in s.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| err("expected key=value"))?;
            let v: f64 = v.trim().parse().map_err(|_| err("bad number"))?;
            match k.trim() {
                "N" | "n" => n = Some(v as usize),
                "R" | "r" => r = Some(v),
                "d" | "dim" => d = v as usize,
                _ => return Err(err("unknown key")),
            }
        }
        Self::with_extent(
            d,
            n.ok_or_else(|| err("missing N"))?,
            r.ok_or_else(|| err("missing R"))?,
        )
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn extent(&self) -> f64 {
        self.n as f64 * self.spacing
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.spacing
    }

    /// Writes the coordinates of flat index `idx` into `out`.
    pub fn point(&self, mut idx: usize, out: &mut [f64]) {
        for k in (0..self.dim).rev() {
            out[k] = self.coord(idx % self.n);
            idx /= self.n;
        }
    }

    /// Largest `|x|` over the grid points.
    pub fn max_radius(&self) -> f64 {
        self.coord(0).abs() * (self.dim as f64).sqrt()
    }

    pub fn dual(&self) -> Self {
        Self {
            dim: self.dim,
            n: self.n,
            spacing: 1.0 / (self.n as f64 * self.spacing),
        }
    }

    pub fn refined(&self) -> Self {
        Self {
            dim: self.dim,
            n: 2 * self.n,
            spacing: 0.5 * self.spacing,
        }
    }

    /// Same spacing, doubled extent.
    pub fn widened(&self) -> Self {
        Self {
            dim: self.dim,
            n: 2 * self.n,
            spacing: self.spacing,
        }
    }

    /// Cells `[x_i - h/2, x_i + h/2]` meeting `[lo, hi]`, with overlap lengths.
    pub fn overlaps_1d(&self, lo: f64, hi: f64) -> Vec<(usize, f64)> {
        let h = self.spacing;
        let first = self.coord(0) - 0.5 * h;
        let a = ((lo - first) / h).floor().max(0.0) as usize;
        let b = (((hi - first) / h).ceil().max(0.0) as usize).min(self.n);
        (a.min(self.n)..b)
            .filter_map(|i| {
                let c = self.coord(i);
                let w = (c + 0.5 * h).min(hi) - (c - 0.5 * h).max(lo);
                (w > 0.0).then_some((i, w))
            })
            .collect()
    }

    /// Union of the grid cells: `[lo, hi]` per axis.
    pub fn cell_bounds(&self) -> (f64, f64) {
        let h = self.spacing;
        (self.coord(0) - 0.5 * h, self.coord(self.n - 1) + 0.5 * h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub data: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: GridSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid of {}",
                data.len(),
                grid.len()
            )));
        }
        if let Some(i) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            let mut p = vec![0.0; grid.dim];
            grid.point(i, &mut p);
            return Err(Error::NonFinite { t: p[0] });
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[f64]) -> Complex64) -> Self {
        let mut p = vec![0.0; grid.dim];
        let data = (0..grid.len())
            .map(|i| {
                grid.point(i, &mut p);
                f(&p)
            })
            .collect();
        Self { grid, data }
    }

    pub fn from_real_fn(grid: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// `∫ |f|²` by the grid rule.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `‖self - other‖₂` on a common grid.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok((self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * self.grid.cell_volume())
        .sqrt())
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn map(&self, mut f: impl FnMut(&[f64], Complex64) -> Complex64) -> Self {
        let mut p = vec![0.0; self.grid.dim];
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, z)| {
                self.grid.point(i, &mut p);
                f(&p, *z)
            })
            .collect();
        Self {
            grid: self.grid,
            data,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Writes `x[,x2],re,im` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let coords: Vec<String> = if self.grid.dim == 1 {
            vec!["x".into()]
        } else {
            (1..=self.grid.dim).map(|k| format!("x{k}")).collect()
        };
        out.push_str(&coords.join(","));
        out.push_str(",re,im\n");
        let mut p = vec![0.0; self.grid.dim];
        for (i, z) in self.data.iter().enumerate() {
            self.grid.point(i, &mut p);
            for v in &p {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{},{}\n", z.re, z.im));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| invalid("csv", "empty file"))?;
        let dim = header.split(',').count().saturating_sub(2);
        if dim == 0 {
            return Err(invalid("csv", "expected coordinate, re and im columns"));
        }
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let v: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let v = v.map_err(|_| Error::Parse {
                input: line.to_string(),
                reason: "non-numeric field".into(),
            })?;
            if v.len() != dim + 2 {
                return Err(invalid("csv", "ragged row"));
            }
            rows.push(v);
        }
        let n = (rows.len() as f64).powf(1.0 / dim as f64).round() as usize;
        if n < 2 || n.pow(dim as u32) != rows.len() {
            return Err(invalid("csv", "row count is not N^d"));
        }
        let stride = n.pow(dim as u32 - 1);
        let h = rows[stride][0] - rows[0][0];
        let grid = GridSpec::new(dim, n, h)?;
        let data = rows
            .iter()
            .map(|r| Complex64::new(r[dim], r[dim + 1]))
            .collect();
        Self::new(grid, data)
    }
}

fn fft_axes(data: &mut [Complex64], grid: &GridSpec, inverse: bool) {
    let n = grid.n;
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        let outer = grid.len() / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                fft.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
}

fn index_parity(mut idx: usize, grid: &GridSpec) -> usize {
    let mut s = 0;
    for _ in 0..grid.dim {
        s += idx % grid.n;
        idx /= grid.n;
    }
    s
}

fn transform(f: &GridFunction, inverse: bool) -> GridFunction {
    let grid = f.grid;
    let dual = grid.dual();
    let shift = grid.dim * (grid.n / 2);
    let mut data: Vec<Complex64> = f
        .data
        .iter()
        .enumerate()
        .map(|(i, z)| {
            if index_parity(i, &grid) % 2 == 1 {
                -z
            } else {
                *z
            }
        })
        .collect();
    fft_axes(&mut data, &grid, inverse);
    let w = grid.cell_volume();
    for (i, z) in data.iter_mut().enumerate() {
        let sign = if (index_parity(i, &grid) + shift) % 2 == 1 {
            -w
        } else {
            w
        };
        *z *= sign;
    }
    GridFunction { grid: dual, data }
}

/// `f̂` on the dual grid.
pub fn forward_transform(f: &GridFunction) -> GridFunction {
    transform(f, false)
}

/// Inverse of `forward_transform`: takes samples on a frequency grid and
/// returns the function on its dual.
pub fn inverse_transform(fhat: &GridFunction) -> GridFunction {
    transform(fhat, true)
}

/// Multiplies `f̂` by `m(y)` and transforms back.
pub fn apply_multiplier(f: &GridFunction, m: impl FnMut(&[f64]) -> f64) -> GridFunction {
    let mut m = m;
    let fhat = forward_transform(f).map(|y, z| z * m(y));
    inverse_transform(&fhat)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub total: f64,
    pub on_set: f64,
    pub off_set: f64,
}

/// Quadrature weight in `[0, 1]` of each grid cell inside `set`. Masks on
/// another grid count every touched cell in full.
pub fn set_weights(grid: &GridSpec, set: &MeasurableSet) -> Result<Vec<f64>> {
    if set.dim() != grid.dim {
        return Err(Error::DimensionMismatch {
            expected: grid.dim,
            got: set.dim(),
        });
    }
    if let Some(b) = set.bounding_box() {
        let (lo, hi) = grid.cell_bounds();
        let tol = 1e-12 * grid.extent();
        let overhang = (0..grid.dim)
            .map(|k| (lo - b.lo[k]).max(b.hi[k] - hi).max(0.0))
            .fold(0.0, f64::max);
        if overhang > tol {
            return Err(Error::OutsideDomain { overhang });
        }
    }
    let mut w = set.cell_fractions(grid)?;
    if let MeasurableSet::Mask(_) = set {
        for v in &mut w {
            *v = if *v > 0.0 { 1.0 } else { 0.0 };
        }
    }
    Ok(w)
}

pub fn energy_split(f: &GridFunction, set: &MeasurableSet) -> Result<EnergyReport> {
    let w = set_weights(&f.grid, set)?;
    Ok(energy_split_weighted(f, &w))
}

pub fn energy_split_weighted(f: &GridFunction, weights: &[f64]) -> EnergyReport {
    let mut on = 0.0;
    let mut off = 0.0;
    for (z, w) in f.data.iter().zip(weights) {
        let e = z.norm_sqr();
        on += w * e;
        off += (1.0 - w) * e;
    }
    let v = f.grid.cell_volume();
    EnergyReport {
        total: (on + off) * v,
        on_set: on * v,
        off_set: off * v,
    }
}

/// `‖f‖² / (∫_{E^c} |f|² + ∫_{Σ^c} |f̂|²)`, or infinity when the
/// denominator vanishes.
pub fn uncertainty_defect(
    f: &GridFunction,
    e: &MeasurableSet,
    sigma: &MeasurableSet,
) -> Result<f64> {
    let fhat = forward_transform(f);
    let we = set_weights(&f.grid, e)?;
    let ws = set_weights(&fhat.grid, sigma)?;
    defect_weighted(f, &fhat, &we, &ws)
}

/// As `uncertainty_defect` with precomputed weights and transform.
pub fn defect_weighted(
    f: &GridFunction,
    fhat: &GridFunction,
    we: &[f64],
    ws: &[f64],
) -> Result<f64> {
    let total = f.norm_sq();
    if total == 0.0 {
        return Err(Error::ZeroFunction);
    }
    let den = energy_split_weighted(f, we).off_set + energy_split_weighted(fhat, ws).off_set;
    if den <= f64::MIN_POSITIVE * total {
        return Ok(f64::INFINITY);
    }
    Ok(total / den)
}
