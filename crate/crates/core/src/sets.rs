//! Measurable sets built from intervals, lattices of intervals, boxes and
//! grid masks, together with ball intersections and thinness certificates.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::radius::RadiusFunction;
use crate::spectral::GridSpec;

/// Volume of the Euclidean `d`-ball of radius `r`.
pub fn ball_measure(d: usize, r: f64) -> f64 {
    unit_ball_volume(d) * r.powi(d as i32)
}

fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * PI / d as f64,
    }
}

/// Which metric ball `D(x, r)` refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BallMetric {
    #[default]
    Euclidean,
    /// Cubes `x + [-r, r]^d`; same constants up to a dimensional factor.
    Chebyshev,
}

impl BallMetric {
    pub fn measure(self, d: usize, r: f64) -> f64 {
        match self {
            Self::Euclidean => ball_measure(d, r),
            Self::Chebyshev => (2.0 * r).powi(d as i32),
        }
    }
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("box", "corner dimensions differ"));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite())
        {
            return Err(invalid("box", "need finite lo <= hi"));
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    /// Volume of the intersection with `[lo, hi]`.
    pub fn overlap(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let mut v = 1.0;
        for k in 0..self.dim() {
            let w = self.hi[k].min(hi[k]) - self.lo[k].max(lo[k]);
            if w <= 0.0 {
                return 0.0;
            }
            v *= w;
        }
        v
    }

    fn interiors_overlap(&self, other: &Aabb) -> bool {
        self.overlap(&other.lo, &other.hi) > 0.0
    }
}

/// Sorted, pairwise disjoint closed intervals on the line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalSet {
    ivs: Vec<(f64, f64)>,
}

impl IntervalSet {
    /// Builds a set from intervals that must not overlap (touching is fine).
    pub fn new(mut ivs: Vec<(f64, f64)>) -> Result<Self> {
        for &(a, b) in &ivs {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(invalid("interval", format!("bad interval [{a}, {b}]")));
            }
        }
        ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in ivs.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::Overlap { at: w[1].0 });
            }
        }
        Ok(Self { ivs })
    }

    /// Builds a set from arbitrary intervals, merging overlaps.
    pub fn from_unsorted(mut ivs: Vec<(f64, f64)>) -> Self {
        ivs.retain(|(a, b)| b > a);
        ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(ivs.len());
        for (a, b) in ivs {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { ivs: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.ivs
    }

    pub fn measure(&self) -> f64 {
        self.ivs.iter().map(|(a, b)| b - a).sum()
    }

    /// `|self ∩ [lo, hi]|`.
    pub fn measure_in(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let start = self.ivs.partition_point(|iv| iv.1 <= lo);
        let mut total = 0.0;
        for &(a, b) in &self.ivs[start..] {
            if a >= hi {
                break;
            }
            total += b.min(hi) - a.max(lo);
        }
        total
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.ivs.partition_point(|iv| iv.1 < x);
        i < self.ivs.len() && self.ivs[i].0 <= x
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.ivs.clone();
        all.extend_from_slice(&other.ivs);
        Self::from_unsorted(all)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.ivs.len() && j < other.ivs.len() {
            let (a0, a1) = self.ivs[i];
            let (b0, b1) = other.ivs[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self { ivs: out }
    }
}

/// Intervals `[c_j - h, c_j + h]` with `c_j = offset + j * spacing` for
/// `|j| < count`, i.e. `2 count - 1` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicIntervals {
    pub count: u64,
    pub half_width: f64,
    pub spacing: f64,
    pub offset: f64,
}

impl PeriodicIntervals {
    pub fn new(count: u64, half_width: f64, spacing: f64, offset: f64) -> Result<Self> {
        if count == 0 {
            return Err(invalid("count", "must be at least 1"));
        }
        if !(half_width >= 0.0 && spacing > 0.0 && offset.is_finite()) {
            return Err(invalid("periodic", "need half_width >= 0 and spacing > 0"));
        }
        if count > 1 && 2.0 * half_width >= spacing {
            return Err(Error::Overlap {
                at: offset + 0.5 * spacing,
            });
        }
        Ok(Self {
            count,
            half_width,
            spacing,
            offset,
        })
    }

    fn index_range(&self) -> (i64, i64) {
        let m = self.count as i64 - 1;
        (-m, m)
    }

    pub fn center(&self, j: i64) -> f64 {
        self.offset + j as f64 * self.spacing
    }

    pub fn measure(&self) -> f64 {
        (2 * self.count - 1) as f64 * 2.0 * self.half_width
    }

    pub fn measure_in(&self, lo: f64, hi: f64) -> f64 {
        self.measure_near(0, lo - self.offset, hi - self.offset)
    }

    /// Measure of the set inside `[c_j + lo, c_j + hi]`, computed in
    /// coordinates local to `c_j` so that far lattice points keep full
    /// relative precision.
    pub fn measure_near(&self, j: i64, lo: f64, hi: f64) -> f64 {
        if hi <= lo || self.half_width == 0.0 {
            return 0.0;
        }
        let (jlo, jhi) = self.index_range();
        let (mlo, mhi) = (jlo - j, jhi - j);
        let h = self.half_width;
        let s = self.spacing;
        let first = (((lo - h) / s).ceil() as i64).max(mlo);
        let last = (((hi + h) / s).floor() as i64).min(mhi);
        if first > last {
            return 0.0;
        }
        let piece = |m: i64| {
            let c = m as f64 * s;
            ((c + h).min(hi) - (c - h).max(lo)).max(0.0)
        };
        if last - first <= 6 {
            return (first..=last).map(piece).sum();
        }
        let full_lo = (((lo + h) / s).ceil() as i64).max(first);
        let full_hi = (((hi - h) / s).floor() as i64).min(last);
        let mut total = 0.0;
        if full_hi >= full_lo {
            total += (full_hi - full_lo + 1) as f64 * 2.0 * h;
            total += (first..full_lo).map(piece).sum::<f64>();
            total += (full_hi + 1..=last).map(piece).sum::<f64>();
        } else {
            total += (first..=last).map(piece).sum::<f64>();
        }
        total
    }

    /// Lattice indices probed by windowed certificates: the innermost and
    /// outermost few and a geometric ladder in between.
    pub fn probe_indices(&self) -> Vec<i64> {
        let m = self.count as i64 - 1;
        let mut js: Vec<i64> = (0..=m.min(3)).chain((m - 3).max(0)..=m).collect();
        let mut step = 8i64;
        while step < m {
            js.push(step);
            js.push(m - step);
            step *= 4;
        }
        js.sort_unstable();
        js.dedup();
        js
    }

    pub fn to_intervals(&self) -> IntervalSet {
        let (a, b) = self.index_range();
        let h = self.half_width;
        IntervalSet {
            ivs: (a..=b)
                .map(|j| (self.center(j) - h, self.center(j) + h))
                .collect(),
        }
    }
}

/// Boolean mask on a uniform grid; cell `i` covers
/// `[origin + i h, origin + (i + 1) h)` along each axis (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    pub dim: usize,
    pub n: usize,
    pub spacing: f64,
    pub origin: f64,
    pub bits: Vec<bool>,
}

impl GridMask {
    pub fn new(dim: usize, n: usize, spacing: f64, origin: f64, bits: Vec<bool>) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(invalid("spacing", "must be positive"));
        }
        if !(1..=2).contains(&dim) {
            return Err(Error::Unsupported(format!("grid masks in d = {dim}")));
        }
        if bits.len() != n.pow(dim as u32) {
            return Err(invalid("bits", "length must be n^dim"));
        }
        Ok(Self {
            dim,
            n,
            spacing,
            origin,
            bits,
        })
    }

    /// Mask whose cells are the cells of `grid` with `pred(center)` true.
    pub fn from_predicate(grid: &GridSpec, mut pred: impl FnMut(&[f64]) -> bool) -> Result<Self> {
        let mut bits = Vec::with_capacity(grid.len());
        let mut p = vec![0.0; grid.dim];
        for idx in 0..grid.len() {
            grid.point(idx, &mut p);
            bits.push(pred(&p));
        }
        Self::new(
            grid.dim,
            grid.n,
            grid.spacing,
            grid.coord(0) - 0.5 * grid.spacing,
            bits,
        )
    }

    fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn measure(&self) -> f64 {
        self.bits.iter().filter(|b| **b).count() as f64 * self.cell_volume()
    }

    fn cell_range(&self, lo: f64, hi: f64) -> (usize, usize) {
        let a = ((lo - self.origin) / self.spacing).floor().max(0.0) as usize;
        let b = (((hi - self.origin) / self.spacing).ceil().max(0.0) as usize).min(self.n);
        (a.min(self.n), b)
    }

    fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let a = self.origin + i as f64 * self.spacing;
        (a, a + self.spacing)
    }

    fn box_measure(&self, lo: &[f64], hi: &[f64]) -> f64 {
        let (i0, i1) = self.cell_range(lo[0], hi[0]);
        let mut total = 0.0;
        if self.dim == 1 {
            for i in i0..i1 {
                if self.bits[i] {
                    let (a, b) = self.cell_bounds(i);
                    total += (b.min(hi[0]) - a.max(lo[0])).max(0.0);
                }
            }
            return total;
        }
        let (j0, j1) = self.cell_range(lo[1], hi[1]);
        for i in i0..i1 {
            let (a, b) = self.cell_bounds(i);
            let wx = (b.min(hi[0]) - a.max(lo[0])).max(0.0);
            if wx == 0.0 {
                continue;
            }
            for j in j0..j1 {
                if self.bits[i * self.n + j] {
                    let (c, d) = self.cell_bounds(j);
                    total += wx * (d.min(hi[1]) - c.max(lo[1])).max(0.0);
                }
            }
        }
        total
    }
}

/// A measurable subset of `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasurableSet {
    Intervals(IntervalSet),
    Periodic(PeriodicIntervals),
    Boxes { dim: usize, boxes: Vec<Aabb> },
    Mask(GridMask),
}

impl MeasurableSet {
    pub fn empty(dim: usize) -> Self {
        if dim == 1 {
            Self::Intervals(IntervalSet::default())
        } else {
            Self::Boxes {
                dim,
                boxes: Vec::new(),
            }
        }
    }

    pub fn intervals(ivs: Vec<(f64, f64)>) -> Result<Self> {
        Ok(Self::Intervals(IntervalSet::new(ivs)?))
    }

    /// Disjoint boxes; overlapping interiors are rejected.
    pub fn boxes(dim: usize, boxes: Vec<Aabb>) -> Result<Self> {
        for b in &boxes {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: b.dim(),
                });
            }
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                if boxes[i].interiors_overlap(&boxes[j]) {
                    return Err(Error::Overlap { at: boxes[j].lo[0] });
                }
            }
        }
        Ok(Self::Boxes { dim, boxes })
    }

    /// The cube `[-half, half]^d`.
    pub fn cube(dim: usize, half: f64) -> Self {
        if dim == 1 {
            Self::Intervals(IntervalSet {
                ivs: vec![(-half, half)],
            })
        } else {
            Self::Boxes {
                dim,
                boxes: vec![Aabb {
                    lo: vec![-half; dim],
                    hi: vec![half; dim],
                }],
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Intervals(_) | Self::Periodic(_) => 1,
            Self::Boxes { dim, .. } => *dim,
            Self::Mask(m) => m.dim,
        }
    }

    pub fn measure(&self) -> f64 {
        match self {
            Self::Intervals(s) => s.measure(),
            Self::Periodic(p) => p.measure(),
            Self::Boxes { boxes, .. } => boxes.iter().map(Aabb::volume).sum(),
            Self::Mask(m) => m.measure(),
        }
    }

    /// Smallest box containing the set, or `None` when empty.
    pub fn bounding_box(&self) -> Option<Aabb> {
        match self {
            Self::Intervals(s) => {
                let f = s.ivs.first()?;
                let l = s.ivs.last()?;
                Some(Aabb {
                    lo: vec![f.0],
                    hi: vec![l.1],
                })
            }
            Self::Periodic(p) => {
                let (a, b) = p.index_range();
                Some(Aabb {
                    lo: vec![p.center(a) - p.half_width],
                    hi: vec![p.center(b) + p.half_width],
                })
            }
            Self::Boxes { dim, boxes } => {
                let first = boxes.first()?;
                let mut lo = first.lo.clone();
                let mut hi = first.hi.clone();
                for b in boxes {
                    for k in 0..*dim {
                        lo[k] = lo[k].min(b.lo[k]);
                        hi[k] = hi[k].max(b.hi[k]);
                    }
                }
                Some(Aabb { lo, hi })
            }
            Self::Mask(m) => {
                let on: Vec<usize> = (0..m.bits.len()).filter(|&i| m.bits[i]).collect();
                if on.is_empty() {
                    return None;
                }
                let mut lo = vec![f64::INFINITY; m.dim];
                let mut hi = vec![f64::NEG_INFINITY; m.dim];
                for i in on {
                    let idx = if m.dim == 1 {
                        vec![i]
                    } else {
                        vec![i / m.n, i % m.n]
                    };
                    for k in 0..m.dim {
                        let (a, b) = m.cell_bounds(idx[k]);
                        lo[k] = lo[k].min(a);
                        hi[k] = hi[k].max(b);
                    }
                }
                Some(Aabb { lo, hi })
            }
        }
    }

    /// `|self ∩ [lo, hi]|`.
    pub fn box_measure(&self, lo: &[f64], hi: &[f64]) -> f64 {
        match self {
            Self::Intervals(s) => s.measure_in(lo[0], hi[0]),
            Self::Periodic(p) => p.measure_in(lo[0], hi[0]),
            Self::Boxes { boxes, .. } => boxes.iter().map(|b| b.overlap(lo, hi)).sum(),
            Self::Mask(m) => m.box_measure(lo, hi),
        }
    }

    /// Pieces of a one-dimensional set inside `[lo, hi]`.
    pub fn pieces_1d(&self, lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
        if hi <= lo {
            return Ok(Vec::new());
        }
        let clip = |a: f64, b: f64| {
            let (a, b) = (a.max(lo), b.min(hi));
            (b > a).then_some((a, b))
        };
        Ok(match self {
            Self::Intervals(s) => {
                let start = s.ivs.partition_point(|iv| iv.1 <= lo);
                s.ivs[start..]
                    .iter()
                    .take_while(|iv| iv.0 < hi)
                    .filter_map(|&(a, b)| clip(a, b))
                    .collect()
            }
            Self::Periodic(p) => {
                let (jlo, jhi) = p.index_range();
                let h = p.half_width;
                let first = (((lo - h - p.offset) / p.spacing).ceil() as i64).max(jlo);
                let last = (((hi + h - p.offset) / p.spacing).floor() as i64).min(jhi);
                (first..=last)
                    .filter_map(|j| clip(p.center(j) - h, p.center(j) + h))
                    .collect()
            }
            Self::Mask(m) if m.dim == 1 => {
                let (a, b) = m.cell_range(lo, hi);
                let mut out: Vec<(f64, f64)> = Vec::new();
                for i in a..b {
                    if !m.bits[i] {
                        continue;
                    }
                    let (c, d) = m.cell_bounds(i);
                    if let Some((c, d)) = clip(c, d) {
                        match out.last_mut() {
                            Some(last) if last.1 >= c => last.1 = d,
                            _ => out.push((c, d)),
                        }
                    }
                }
                out
            }
            _ => {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    got: self.dim(),
                })
            }
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Self::Intervals(s) => s.contains(x[0]),
            Self::Periodic(p) => {
                let j = ((x[0] - p.offset) / p.spacing).round() as i64;
                let (a, b) = p.index_range();
                j >= a && j <= b && (x[0] - p.center(j)).abs() <= p.half_width
            }
            Self::Boxes { boxes, .. } => boxes.iter().any(|b| {
                x.iter()
                    .enumerate()
                    .all(|(k, v)| *v >= b.lo[k] && *v <= b.hi[k])
            }),
            Self::Mask(m) => {
                let mut idx = 0;
                for &v in x.iter().take(m.dim) {
                    let i = ((v - m.origin) / m.spacing).floor();
                    if i < 0.0 || i >= m.n as f64 {
                        return false;
                    }
                    idx = idx * m.n + i as usize;
                }
                m.bits[idx]
            }
        }
    }

    /// `|self ∩ D(x, r)|` for Euclidean balls.
    pub fn intersect_ball_measure(&self, x: &[f64], r: f64) -> Result<f64> {
        self.intersect_ball_measure_with(x, r, BallMetric::Euclidean)
    }

    pub fn intersect_ball_measure_with(
        &self,
        x: &[f64],
        r: f64,
        metric: BallMetric,
    ) -> Result<f64> {
        let d = self.dim();
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        if !(r > 0.0) {
            return Err(invalid("r", "must be positive"));
        }
        if d == 1 || metric == BallMetric::Chebyshev {
            let lo: Vec<f64> = x.iter().map(|v| v - r).collect();
            let hi: Vec<f64> = x.iter().map(|v| v + r).collect();
            return Ok(self.box_measure(&lo, &hi));
        }
        if d != 2 {
            return Err(Error::Unsupported(format!(
                "Euclidean ball intersections in d = {d}; use the Chebyshev metric"
            )));
        }
        Ok(match self {
            Self::Boxes { boxes, .. } => boxes
                .iter()
                .map(|b| disc_rect_area(x[0], x[1], r, b.lo[0], b.hi[0], b.lo[1], b.hi[1]))
                .sum(),
            Self::Mask(m) => {
                let (i0, i1) = m.cell_range(x[0] - r, x[0] + r);
                let (j0, j1) = m.cell_range(x[1] - r, x[1] + r);
                let mut total = 0.0;
                for i in i0..i1 {
                    let (a, b) = m.cell_bounds(i);
                    for j in j0..j1 {
                        if m.bits[i * m.n + j] {
                            let (c, e) = m.cell_bounds(j);
                            total += disc_rect_area(x[0], x[1], r, a, b, c, e);
                        }
                    }
                }
                total
            }
            _ => unreachable!("one-dimensional representations handled above"),
        })
    }

    /// Fraction of each cell of `grid` covered by the set, in grid order.
    pub fn cell_fractions(&self, grid: &GridSpec) -> Result<Vec<f64>> {
        if grid.dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim,
                got: self.dim(),
            });
        }
        let h = grid.spacing;
        let vol = h.powi(grid.dim as i32);
        let mut out = Vec::with_capacity(grid.len());
        match grid.dim {
            1 => {
                for i in 0..grid.n {
                    let c = grid.coord(i);
                    out.push(self.box_measure(&[c - 0.5 * h], &[c + 0.5 * h]) / vol);
                }
            }
            2 => {
                if let Self::Boxes { boxes, .. } = self {
                    out.resize(grid.len(), 0.0);
                    for b in boxes {
                        let rows = grid.overlaps_1d(b.lo[0], b.hi[0]);
                        let cols = grid.overlaps_1d(b.lo[1], b.hi[1]);
                        for &(i, wi) in &rows {
                            for &(j, wj) in &cols {
                                out[i * grid.n + j] += wi * wj / vol;
                            }
                        }
                    }
                } else {
                    for i in 0..grid.n {
                        let x = grid.coord(i);
                        for j in 0..grid.n {
                            let y = grid.coord(j);
                            out.push(
                                self.box_measure(
                                    &[x - 0.5 * h, y - 0.5 * h],
                                    &[x + 0.5 * h, y + 0.5 * h],
                                ) / vol,
                            );
                        }
                    }
                }
            }
            d => return Err(Error::Unsupported(format!("grids in d = {d}"))),
        }
        for v in &mut out {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(out)
    }

    /// Mask on `grid` containing every cell the set touches, so a set moved
    /// onto a coarser grid can only grow.
    pub fn outer_mask(&self, grid: &GridSpec) -> Result<GridMask> {
        let fr = self.cell_fractions(grid)?;
        GridMask::new(
            grid.dim,
            grid.n,
            grid.spacing,
            grid.coord(0) - 0.5 * grid.spacing,
            fr.iter().map(|f| *f > 0.0).collect(),
        )
    }

    /// Parses `periodic:n=8,h=0.1[,s=1,offset=0]`, `intervals:0:1,2:3` or
    /// `box:lo1:hi1,lo2:hi2`.
    pub fn parse(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| err("expected kind:params"))?;
        match kind {
            "periodic" => {
                let mut n = None;
                let mut h = None;
                let (mut sp, mut off) = (1.0, 0.0);
                for kv in rest.split(',') {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| err("expected key=value"))?;
                    let v: f64 = v.trim().parse().map_err(|_| err("bad number"))?;
                    match k.trim() {
                        "n" => n = Some(v as u64),
                        "h" => h = Some(v),
                        "s" => sp = v,
                        "offset" => off = v,
                        _ => return Err(err("unknown key")),
                    }
                }
                Ok(Self::Periodic(PeriodicIntervals::new(
                    n.ok_or_else(|| err("missing n"))?,
                    h.ok_or_else(|| err("missing h"))?,
                    sp,
                    off,
                )?))
            }
            "intervals" => {
                let mut ivs = Vec::new();
                for item in rest.split(',').filter(|x| !x.is_empty()) {
                    let (a, b) = item.split_once(':').ok_or_else(|| err("expected lo:hi"))?;
                    ivs.push((
                        a.trim().parse().map_err(|_| err("bad number"))?,
                        b.trim().parse().map_err(|_| err("bad number"))?,
                    ));
                }
                Self::intervals(ivs)
            }
            "box" => {
                let mut lo = Vec::new();
                let mut hi = Vec::new();
                for item in rest.split(',') {
                    let (a, b) = item.split_once(':').ok_or_else(|| err("expected lo:hi"))?;
                    lo.push(a.trim().parse().map_err(|_| err("bad number"))?);
                    hi.push(b.trim().parse().map_err(|_| err("bad number"))?);
                }
                let dim = lo.len();
                if dim == 1 {
                    Self::intervals(vec![(lo[0], hi[0])])
                } else {
                    Self::boxes(dim, vec![Aabb::new(lo, hi)?])
                }
            }
            _ => Err(err("unknown set kind")),
        }
    }

    /// Reads a CSV of `lo,hi` rows (d = 1) or `lo1,hi1,...,lod,hid` rows.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|v| v.trim().parse::<f64>()).collect();
            match parsed {
                Ok(v) => rows.push(v),
                Err(_) if rows.is_empty() && ln == 0 => continue, // header
                Err(_) => {
                    return Err(Error::Parse {
                        input: line.to_string(),
                        reason: format!("line {}", ln + 1),
                    })
                }
            }
        }
        let width = rows.first().map_or(2, Vec::len);
        if !width.is_multiple_of(2) || rows.iter().any(|r| r.len() != width) {
            return Err(invalid("csv", "rows must hold lo,hi pairs of equal width"));
        }
        let dim = width / 2;
        if dim == 1 {
            return Self::intervals(rows.iter().map(|r| (r[0], r[1])).collect());
        }
        let boxes = rows
            .iter()
            .map(|r| {
                Aabb::new(
                    (0..dim).map(|k| r[2 * k]).collect(),
                    (0..dim).map(|k| r[2 * k + 1]).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::boxes(dim, boxes)
    }

    /// Writes the set as CSV rows; lattices are expanded, masks refused.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        match self {
            Self::Intervals(s) => {
                out.push_str("lo,hi\n");
                for (a, b) in &s.ivs {
                    out.push_str(&format!("{a},{b}\n"));
                }
            }
            Self::Periodic(p) => return Self::Intervals(p.to_intervals()).write_csv(path),
            Self::Boxes { dim, boxes } => {
                let header: Vec<String> = (1..=*dim).map(|k| format!("lo{k},hi{k}")).collect();
                out.push_str(&header.join(","));
                out.push('\n');
                for b in boxes {
                    let row: Vec<String> = (0..*dim)
                        .map(|k| format!("{},{}", b.lo[k], b.hi[k]))
                        .collect();
                    out.push_str(&row.join(","));
                    out.push('\n');
                }
            }
            Self::Mask(_) => return Err(Error::Unsupported("CSV export of grid masks".into())),
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Exact area of the disc `D((cx, cy), r)` intersected with the rectangle
/// `[x0, x1] x [y0, y1]`.
pub fn disc_rect_area(cx: f64, cy: f64, r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    // disc-centred coordinates keep the chord endpoints at exactly ±r
    let a = (x0 - cx).max(-r);
    let b = (x1 - cx).min(r);
    let (y0, y1) = (y0 - cy, y1 - cy);
    if b <= a || y1 <= y0 {
        return 0.0;
    }
    let chord = |u: f64| (r * r - u * u).max(0.0).sqrt();
    let prim = |u: f64| {
        let u = u.clamp(-r, r);
        0.5 * (u * (r * r - u * u).max(0.0).sqrt() + r * r * (u / r).clamp(-1.0, 1.0).asin())
    };
    let mut cuts = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < r {
            let w = (r * r - y * y).sqrt();
            for u in [-w, w] {
                if u > a && u < b {
                    cuts.push(u);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q <= p {
            continue;
        }
        let s = chord(0.5 * (p + q));
        let top_arc = s < y1;
        let bot_arc = -s > y0;
        let top = if top_arc { s } else { y1 };
        let bot = if bot_arc { -s } else { y0 };
        if top <= bot {
            continue;
        }
        let len = q - p;
        let arc = prim(q) - prim(p);
        let upper = if top_arc { arc } else { y1 * len };
        let lower = if bot_arc { -arc } else { y0 * len };
        area += (upper - lower).max(0.0);
    }
    area
}

/// `periodic_thin_set` with unit spacing in `d >= 2` reads as the slab
/// `[-(n-d), n-d] x [-h, h]^{d-1}`; in `d = 1` it is the lattice of
/// `2n - 1` intervals of half-width `h`.
pub fn periodic_thin_set(
    d: usize,
    count: u64,
    half_width: f64,
    spacing: f64,
    offset: f64,
) -> Result<MeasurableSet> {
    if d == 1 {
        return Ok(MeasurableSet::Periodic(PeriodicIntervals::new(
            count, half_width, spacing, offset,
        )?));
    }
    if d == 0 {
        return Err(invalid("d", "must be positive"));
    }
    let long = count as f64 - d as f64;
    if long <= 0.0 {
        return Err(invalid("count", "slab form needs count > d"));
    }
    let long = long * spacing;
    let mut lo = vec![-half_width; d];
    let mut hi = vec![half_width; d];
    lo[0] = offset - long;
    hi[0] = offset + long;
    MeasurableSet::boxes(d, vec![Aabb::new(lo, hi)?])
}

/// Lattice of intervals inside `[-half_extent, half_extent]` with spacing
/// `ρ(half_extent)` and duty cycle `2ε/3`, shifted by `shift` spacings
/// (`shift ∈ [0, 1)`). Every ball `D(x, r)` with `r >= ρ(half_extent)`
/// holds at most an `ε` fraction of it.
pub fn thin_lattice(
    rho: &RadiusFunction,
    eps: f64,
    half_extent: f64,
    shift: f64,
) -> Result<PeriodicIntervals> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid("eps", "must lie in (0, 1]"));
    }
    let s = rho.try_eval(half_extent)?;
    let h = eps * s / 3.0;
    let offset = (shift.rem_euclid(1.0) - 0.5) * s;
    let reach = half_extent - offset.abs() - h;
    if reach < 0.0 {
        return Err(invalid("half_extent", "too small for one interval"));
    }
    let count = (reach / s).floor() as u64 + 1;
    PeriodicIntervals::new(count, h, s, offset)
}

/// Where thinness is probed.
#[derive(Debug, Clone, PartialEq)]
pub enum CenterSpec {
    /// Uniform lattice of `[-half_extent, half_extent]^d`.
    Grid { half_extent: f64, spacing: f64 },
    /// Locally refined lattice of the same cube, pitch `ρ(|x|) / (2 refine)`.
    Adaptive { half_extent: f64, refine: usize },
    /// Adaptive lattices on the cubes `c + [-w, w]^d`.
    Windows {
        windows: Vec<(Vec<f64>, f64)>,
        refine: usize,
    },
}

impl CenterSpec {
    pub fn adaptive(half_extent: f64) -> Self {
        Self::Adaptive {
            half_extent,
            refine: 4,
        }
    }

    /// Windows around the lattice points where a periodic set is densest
    /// relative to the local radius: the outermost few, the innermost few
    /// and a logarithmic ladder in between.
    pub fn periodic_worst(p: &PeriodicIntervals, rho: &RadiusFunction) -> Self {
        let mut windows = Vec::new();
        for j in p.probe_indices() {
            for sign in [-1i64, 1] {
                if j == 0 && sign < 0 {
                    continue;
                }
                let c = p.center(sign * j);
                windows.push((vec![c], periodic_window(p, rho, c)));
            }
        }
        Self::Windows {
            windows,
            refine: 16,
        }
    }

    /// Windows along the long axis of a slab `[-L, L] x [-h, h]^{d-1}`.
    pub fn slab_worst(d: usize, long: f64, rho: &RadiusFunction) -> Self {
        Self::slab_worst_along(d, 0, long, rho)
    }

    /// As [`CenterSpec::slab_worst`] with the long side on axis `axis`.
    pub fn slab_worst_along(d: usize, axis: usize, long: f64, rho: &RadiusFunction) -> Self {
        let mut pts = vec![0.0, long];
        let mut t = 1.0;
        while t < long {
            pts.push(t);
            pts.push(long - t);
            t *= 4.0;
        }
        pts.retain(|v| *v >= 0.0 && *v <= long);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let windows = pts
            .into_iter()
            .map(|x0| {
                let w = 2.0 * rho.eval((x0 - 1.0).max(0.0));
                let mut c = vec![0.0; d];
                c[axis.min(d - 1)] = x0;
                (c, w)
            })
            .collect();
        Self::Windows { windows, refine: 8 }
    }

    fn coverage(&self) -> Coverage {
        match self {
            Self::Grid { half_extent, .. } | Self::Adaptive { half_extent, .. } => {
                Coverage::Domain {
                    half_extent: *half_extent,
                }
            }
            Self::Windows { windows, .. } => Coverage::Windows {
                count: windows.len(),
            },
        }
    }

    /// Calls `visit` on every center.
    fn for_each(
        &self,
        d: usize,
        rho: &RadiusFunction,
        visit: &mut dyn FnMut(&[f64]),
    ) -> Result<()> {
        match self {
            Self::Grid {
                half_extent,
                spacing,
            } => {
                let far = half_extent * (d as f64).sqrt();
                let required = 0.5 * rho.try_eval(far)?;
                if !(*spacing > 0.0) || *spacing > required {
                    return Err(Error::CoarseSampling {
                        spacing: *spacing,
                        required,
                    });
                }
                let n = (2.0 * half_extent / spacing).round() as usize;
                lattice(&vec![-half_extent; d], *spacing, n + 1, d, visit);
                Ok(())
            }
            Self::Adaptive {
                half_extent,
                refine,
            } => {
                adaptive_cube(&vec![0.0; d], *half_extent, rho, *refine, visit);
                Ok(())
            }
            Self::Windows { windows, refine } => {
                for (c, w) in windows {
                    if c.len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: c.len(),
                        });
                    }
                    adaptive_cube(c, *w, rho, *refine, visit);
                }
                Ok(())
            }
        }
    }
}

fn lattice(lo: &[f64], pitch: f64, n: usize, d: usize, visit: &mut dyn FnMut(&[f64])) {
    let mut idx = vec![0usize; d];
    let mut p = vec![0.0; d];
    loop {
        for k in 0..d {
            p[k] = lo[k] + idx[k] as f64 * pitch;
        }
        visit(&p);
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Lattice of `c + [-w, w]^d` whose pitch never exceeds `ρ / (2 refine)`
/// anywhere in the cell it serves; cells are split until one pitch fits.
pub(crate) fn adaptive_cube(
    c: &[f64],
    w: f64,
    rho: &RadiusFunction,
    refine: usize,
    visit: &mut dyn FnMut(&[f64]),
) {
    const MAX_SIDE: f64 = 32.0;
    let d = c.len();
    let far = c.iter().map(|v| (v.abs() + w).powi(2)).sum::<f64>().sqrt();
    let pitch = rho.eval(far) / (2.0 * refine.max(1) as f64);
    let cells = (2.0 * w / pitch).ceil();
    if cells <= MAX_SIDE || w <= 0.0 {
        let n = cells.max(1.0) as usize;
        let step = 2.0 * w / n as f64;
        let lo: Vec<f64> = c.iter().map(|v| v - w).collect();
        lattice(&lo, step, n + 1, d, visit);
        return;
    }
    let half = 0.5 * w;
    let mut child = vec![0.0; d];
    for corner in 0..(1usize << d) {
        for k in 0..d {
            child[k] = c[k] + if corner >> k & 1 == 1 { half } else { -half };
        }
        adaptive_cube(&child, half, rho, refine, visit);
    }
}

/// What part of space a certificate actually probed.
#[derive(Debug, Clone, PartialEq)]
pub enum Coverage {
    /// Every point of the cube `[-h, h]^d` is within `ρ/2` of a center.
    Domain { half_extent: f64 },
    /// Only the listed windows; the rest relies on the set's periodic form.
    Windows { count: usize },
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Domain { half_extent } => write!(f, "domain[-{half_extent},{half_extent}]"),
            Self::Windows { count } => write!(f, "windows({count})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinnessCertificate {
    pub epsilon_measured: f64,
    pub worst_center: Vec<f64>,
    pub center_count: usize,
    pub rho: RadiusFunction,
    pub metric: BallMetric,
    pub coverage: Coverage,
}

impl ThinnessCertificate {
    /// `epsilon_measured <= eps (1 + tol)`.
    pub fn passes(&self, eps: f64, tol: f64) -> bool {
        self.epsilon_measured <= eps * (1.0 + tol)
    }
}

/// Largest relative mass `|set ∩ D(x, ρ(|x|))| / |D(x, ρ(|x|))|` over the
/// probed centers.
pub fn certify_thinness(
    set: &MeasurableSet,
    rho: &RadiusFunction,
    centers: &CenterSpec,
) -> Result<ThinnessCertificate> {
    certify_thinness_with(set, rho, centers, BallMetric::Euclidean)
}

pub fn certify_thinness_with(
    set: &MeasurableSet,
    rho: &RadiusFunction,
    centers: &CenterSpec,
    metric: BallMetric,
) -> Result<ThinnessCertificate> {
    let d = set.dim();
    let bbox = set.bounding_box();
    let mut worst = (0.0f64, vec![0.0; d]);
    let mut count = 0usize;
    let mut failure: Option<Error> = None;
    centers.for_each(d, rho, &mut |x| {
        count += 1;
        if failure.is_some() {
            return;
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = rho.eval(norm);
        if let Some(b) = &bbox {
            if (0..d).any(|k| x[k] + r <= b.lo[k] || x[k] - r >= b.hi[k]) {
                return;
            }
        } else {
            return;
        }
        match set.intersect_ball_measure_with(x, r, metric) {
            Ok(m) => {
                let frac = m / metric.measure(d, r);
                if frac > worst.0 {
                    worst = (frac, x.to_vec());
                }
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(ThinnessCertificate {
        epsilon_measured: worst.0.min(1.0),
        worst_center: worst.1,
        center_count: count,
        rho: rho.clone(),
        metric,
        coverage: centers.coverage(),
    })
}

fn periodic_window(p: &PeriodicIntervals, rho: &RadiusFunction, c: f64) -> f64 {
    let near = (c.abs() - 0.5 * p.spacing).max(0.0);
    (0.5 * p.spacing).min(2.0 * rho.eval(near) + p.half_width)
}

/// Windowed certificate for a lattice of intervals, with every center and
/// ball expressed relative to its lattice point. Use this instead of
/// [`CenterSpec::periodic_worst`] when the lattice reaches so far out that
/// absolute coordinates cannot resolve the interval width.
pub fn certify_periodic(
    p: &PeriodicIntervals,
    rho: &RadiusFunction,
    refine: usize,
) -> Result<ThinnessCertificate> {
    let mut worst = (0.0f64, vec![0.0]);
    let mut count = 0usize;
    let mut windows = 0usize;
    for j in p.probe_indices() {
        for sign in [-1i64, 1] {
            if j == 0 && sign < 0 {
                continue;
            }
            windows += 1;
            let jj = sign * j;
            let c = p.center(jj);
            let w = periodic_window(p, rho, c);
            let pitch = rho.try_eval(c.abs() + w)? / (2.0 * refine.max(1) as f64);
            let cells = (2.0 * w / pitch).ceil().max(1.0) as usize;
            for i in 0..=cells {
                let t = -w + 2.0 * w * i as f64 / cells as f64;
                let r = rho.eval((c + t).abs());
                let frac = p.measure_near(jj, t - r, t + r) / (2.0 * r);
                count += 1;
                if frac > worst.0 {
                    worst = (frac, vec![c + t]);
                }
            }
        }
    }
    Ok(ThinnessCertificate {
        epsilon_measured: worst.0.min(1.0),
        worst_center: worst.1,
        center_count: count,
        rho: rho.clone(),
        metric: BallMetric::Euclidean,
        coverage: Coverage::Windows { count: windows },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wolff_rho() -> RadiusFunction {
        RadiusFunction::power_law(1.0)
    }

    #[test]
    fn ball_volumes() {
        assert_eq!(ball_measure(1, 1.0), 2.0);
        assert!((ball_measure(2, 1.0) - PI).abs() < 1e-15);
        assert_eq!(ball_measure(1, 0.0), 0.0);
        assert!((ball_measure(3, 2.0) - 4.0 / 3.0 * PI * 8.0).abs() < 1e-12);
    }

    #[test]
    fn interval_clipping() {
        let e = MeasurableSet::intervals(vec![(-1.0, 1.0)]).unwrap();
        assert_eq!(e.intersect_ball_measure(&[0.0], 0.5).unwrap(), 1.0);
        let e = MeasurableSet::intervals(vec![(0.0, 1.0)]).unwrap();
        assert_eq!(e.intersect_ball_measure(&[-1.0], 0.5).unwrap(), 0.0);
        let e = MeasurableSet::intervals(vec![(0.0, 1.0), (2.0, 3.0)]).unwrap();
        // half of each interval
        let oracle = (1.0f64.min(2.5) - 0.5f64.max(0.0)) + (3.0f64.min(2.5) - 0.5f64.max(2.0));
        assert_eq!(e.intersect_ball_measure(&[1.5], 1.0).unwrap(), oracle);
        assert_eq!(oracle, 1.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let e = MeasurableSet::cube(2, 1.0);
        assert!(matches!(
            e.intersect_ball_measure(&[0.0], 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn overlapping_intervals_are_rejected() {
        assert!(matches!(
            IntervalSet::new(vec![(0.0, 1.0), (0.5, 2.0)]),
            Err(Error::Overlap { .. })
        ));
        assert!(PeriodicIntervals::new(3, 0.6, 1.0, 0.0).is_err());
    }

    #[test]
    fn periodic_examples() {
        let one = periodic_thin_set(1, 1, 0.2, 1.0, 0.0).unwrap();
        match &one {
            MeasurableSet::Periodic(p) => assert_eq!(p.to_intervals().intervals(), &[(-0.2, 0.2)]),
            _ => panic!("expected a lattice"),
        }
        let three = periodic_thin_set(1, 3, 0.1, 1.0, 0.0).unwrap();
        if let MeasurableSet::Periodic(p) = &three {
            assert_eq!(p.to_intervals().intervals().len(), 5);
        }
        assert!((three.measure() - 5.0 * 0.2).abs() < 1e-15);
        let slab = periodic_thin_set(2, 4, 0.05, 1.0, 0.0).unwrap();
        assert!((slab.measure() - 4.0 * 0.1).abs() < 1e-15);
    }

    #[test]
    fn periodic_window_measure_matches_expansion() {
        let p = PeriodicIntervals::new(40, 0.13, 0.7, 0.05).unwrap();
        let ivs = p.to_intervals();
        for (lo, hi) in [
            (-30.0, 30.0),
            (-3.31, 7.2),
            (0.0, 0.1),
            (25.0, 40.0),
            (-0.2, 11.77),
        ] {
            let a = p.measure_in(lo, hi);
            let b = ivs.measure_in(lo, hi);
            assert!((a - b).abs() < 1e-11, "{lo} {hi}: {a} vs {b}");
        }
    }

    #[test]
    fn periodic_lattice_handles_huge_counts() {
        let p = PeriodicIntervals::new(100_000_000_000, 1e-12, 1.0, 0.0).unwrap();
        let m = p.measure_in(-1e10, 1e10);
        let expect = (2e10 + 1.0) * 2e-12;
        assert!((m - expect).abs() / expect < 1e-9);
    }

    fn disc_rect_oracle(cx: f64, cy: f64, r: f64, b: [f64; 4]) -> f64 {
        // midpoint rule on a fine lattice
        let n = 40_000;
        let (x0, x1, y0, y1) = (b[0].max(cx - r), b[1].min(cx + r), b[2], b[3]);
        if x1 <= x0 {
            return 0.0;
        }
        let hx = (x1 - x0) / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let x = x0 + (i as f64 + 0.5) * hx;
            let w = (r * r - (x - cx).powi(2)).max(0.0).sqrt();
            s += ((cy + w).min(y1) - (cy - w).max(y0)).max(0.0) * hx;
        }
        s
    }

    #[test]
    fn small_disc_inside_box() {
        let a = disc_rect_area(
            1.2946833866042775,
            0.0,
            0.0356629371993687,
            0.0,
            1.79,
            -1.31,
            1.15,
        );
        assert!(
            (a - PI * 0.0356629371993687f64.powi(2)).abs() < 1e-15,
            "{a} {}",
            PI * 0.0356629371993687f64.powi(2)
        );
    }

    #[test]
    fn disc_rect_area_matches_quadrature() {
        let cases = [
            (0.0, 0.0, 1.0, [-2.0, 2.0, -2.0, 2.0]),
            (0.0, 0.0, 1.0, [0.0, 2.0, 0.0, 2.0]),
            (0.3, -0.2, 1.5, [-0.5, 0.7, -0.1, 0.05]),
            (5.0, 0.0, 0.4, [-6.0, 5.1, -0.01, 0.01]),
            (0.0, 0.0, 1.0, [0.9, 3.0, 0.3, 0.5]),
            (1.0, 1.0, 0.5, [-1.0, 0.0, -1.0, 0.0]),
        ];
        for (cx, cy, r, b) in cases {
            let exact = disc_rect_area(cx, cy, r, b[0], b[1], b[2], b[3]);
            let approx = disc_rect_oracle(cx, cy, r, b);
            assert!((exact - approx).abs() < 1e-5, "{b:?}: {exact} vs {approx}");
        }
        assert!((disc_rect_area(0.0, 0.0, 1.0, -2.0, 2.0, -2.0, 2.0) - PI).abs() < 1e-14);
        assert!((disc_rect_area(0.0, 0.0, 1.0, 0.0, 2.0, 0.0, 2.0) - PI / 4.0).abs() < 1e-14);
    }

    #[test]
    fn empty_set_is_zero_thin() {
        let cert = certify_thinness(
            &MeasurableSet::empty(1),
            &wolff_rho(),
            &CenterSpec::adaptive(8.0),
        )
        .unwrap();
        assert_eq!(cert.epsilon_measured, 0.0);
    }

    #[test]
    fn whole_domain_is_one_thin() {
        let cert = certify_thinness(
            &MeasurableSet::cube(1, 8.0),
            &wolff_rho(),
            &CenterSpec::adaptive(8.0),
        )
        .unwrap();
        assert!((cert.epsilon_measured - 1.0).abs() < 1e-12);
        let cert = certify_thinness(
            &MeasurableSet::cube(2, 4.0),
            &wolff_rho(),
            &CenterSpec::adaptive(4.0),
        )
        .unwrap();
        assert!((cert.epsilon_measured - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lattice_example_is_thin() {
        let (eps, n) = (0.1, 8u64);
        let rho = wolff_rho();
        let e = periodic_thin_set(1, n, eps * rho.eval(n as f64), 1.0, 0.0).unwrap();
        let cert = certify_thinness(&e, &rho, &CenterSpec::adaptive(n as f64 + 1.0)).unwrap();
        assert!(cert.passes(eps, 1e-9), "{}", cert.epsilon_measured);
        // ball centred on the outermost interval holds all of it
        let h = eps / 8.0;
        let at_seven = 2.0 * h / (2.0 * rho.eval(7.0));
        assert!(cert.epsilon_measured >= at_seven - 1e-12);
    }

    #[test]
    fn windowed_certificate_agrees_with_full_sweep() {
        let rho = wolff_rho();
        let p = PeriodicIntervals::new(12, 0.1 / 12.0, 1.0, 0.0).unwrap();
        let set = MeasurableSet::Periodic(p.clone());
        let full = certify_thinness(&set, &rho, &CenterSpec::adaptive(13.0)).unwrap();
        let win = certify_thinness(&set, &rho, &CenterSpec::periodic_worst(&p, &rho)).unwrap();
        assert!(matches!(win.coverage, Coverage::Windows { .. }));
        assert!(
            (full.epsilon_measured - win.epsilon_measured).abs() < 0.05 * full.epsilon_measured
        );
    }

    #[test]
    fn coarse_grid_is_refused() {
        let err = certify_thinness(
            &MeasurableSet::cube(1, 1.0),
            &wolff_rho(),
            &CenterSpec::Grid {
                half_extent: 10.0,
                spacing: 0.5,
            },
        )
        .unwrap_err();
        match err {
            Error::CoarseSampling { required, .. } => assert!((required - 0.05).abs() < 1e-12),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn mask_thinness_tracks_exact() {
        let rho = RadiusFunction::constant(1.0);
        let exact = MeasurableSet::intervals(vec![(-0.3, 0.2), (1.7, 2.05)]).unwrap();
        let grid = GridSpec::new(1, 512, 16.0 / 512.0).unwrap();
        let mask = MeasurableSet::Mask(exact.outer_mask(&grid).unwrap());
        let spec = CenterSpec::Grid {
            half_extent: 6.0,
            spacing: 0.01,
        };
        let a = certify_thinness(&exact, &rho, &spec)
            .unwrap()
            .epsilon_measured;
        let b = certify_thinness(&mask, &rho, &spec)
            .unwrap()
            .epsilon_measured;
        // two boundary cells per interval crossing
        assert!((a - b).abs() <= 4.0 * grid.spacing / 2.0, "{a} vs {b}");
    }

    #[test]
    fn cell_fractions_sum_to_measure() {
        let grid = GridSpec::new(2, 64, 0.25).unwrap();
        let set = MeasurableSet::boxes(
            2,
            vec![
                Aabb::new(vec![-1.1, -0.3], vec![2.37, 0.4]).unwrap(),
                Aabb::new(vec![3.0, 3.0], vec![3.9, 5.55]).unwrap(),
            ],
        )
        .unwrap();
        let fr = set.cell_fractions(&grid).unwrap();
        let total: f64 = fr.iter().sum::<f64>() * 0.0625;
        assert!((total - set.measure()).abs() < 1e-12);
    }

    #[test]
    fn spec_strings_and_csv_round_trip() {
        let s = MeasurableSet::parse("periodic:n=8,h=0.1").unwrap();
        assert!((s.measure() - 15.0 * 0.2).abs() < 1e-12);
        let s = MeasurableSet::parse("box:-1:1,0:0.5").unwrap();
        assert_eq!(s.dim(), 2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let e = MeasurableSet::intervals(vec![(0.0, 1.0), (2.5, 3.0)]).unwrap();
        e.write_csv(&path).unwrap();
        assert_eq!(MeasurableSet::read_csv(&path).unwrap(), e);
        let b = MeasurableSet::parse("box:-1:1,0:0.5").unwrap();
        b.write_csv(&path).unwrap();
        assert_eq!(MeasurableSet::read_csv(&path).unwrap(), b);
    }

    fn interval_strategy() -> impl Strategy<Value = IntervalSet> {
        prop::collection::vec((-20.0f64..20.0, 0.0f64..3.0), 0..8).prop_map(|v| {
            IntervalSet::from_unsorted(v.into_iter().map(|(a, w)| (a, a + w)).collect())
        })
    }

    #[test]
    fn periodic_local_certificate_agrees() {
        let rho = wolff_rho();
        let p = thin_lattice(&rho, 0.1, 40.0, 0.0).unwrap();
        let set = MeasurableSet::Periodic(p.clone());
        let abs = certify_thinness(&set, &rho, &CenterSpec::periodic_worst(&p, &rho)).unwrap();
        let loc = certify_periodic(&p, &rho, 16).unwrap();
        assert!((abs.epsilon_measured - loc.epsilon_measured).abs() < 1e-9);
        // far lattice: width 1e-10 near 1e9 is below the f64 spacing there
        let n = 1u64 << 30;
        let far = PeriodicIntervals::new(n, 0.1 / n as f64, 1.0, 0.0).unwrap();
        let cert = certify_periodic(&far, &rho, 16).unwrap();
        assert!(cert.epsilon_measured <= 0.1 && cert.epsilon_measured > 0.09);
    }

    proptest! {
        #[test]
        fn measure_is_additive(a in interval_strategy(), b in interval_strategy()) {
            let lhs = a.union(&b).measure() + a.intersection(&b).measure();
            let rhs = a.measure() + b.measure();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn thinness_is_monotone(a in interval_strategy(), b in interval_strategy()) {
            let rho = RadiusFunction::power_law(0.5);
            let spec = CenterSpec::adaptive(24.0);
            let sub = MeasurableSet::Intervals(a.intersection(&b));
            let sup = MeasurableSet::Intervals(a.clone());
            let es = certify_thinness(&sub, &rho, &spec).unwrap().epsilon_measured;
            let ep = certify_thinness(&sup, &rho, &spec).unwrap().epsilon_measured;
            prop_assert!(es <= ep + 1e-12);
        }

        #[test]
        fn disc_area_is_bounded(cx in -2.0f64..2.0, cy in -2.0f64..2.0, r in 0.01f64..3.0,
                                x0 in -3.0f64..3.0, w in 0.0f64..3.0, y0 in -3.0f64..3.0, h in 0.0f64..3.0) {
            let a = disc_rect_area(cx, cy, r, x0, x0 + w, y0, y0 + h);
            prop_assert!(a >= 0.0);
            prop_assert!(a <= (w * h).min(PI * r * r) * (1.0 + 1e-12) + 1e-15);
        }
    }
}
