//! Covers of a ball `D(x, r)` by balls adapted to a radius function, with a
//! greedy Vitali selection of disjoint third-radius balls.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::quad::bisect;
use crate::radius::RadiusFunction;
use crate::sets::{adaptive_cube, ball_measure, MeasurableSet};

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub center: Vec<f64>,
    pub radius: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverResult {
    pub x: Vec<f64>,
    pub r: f64,
    pub candidates: Vec<Candidate>,
    /// Selected centers and their radii `ρ₁(|x_i|)`.
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub overlap_sum: f64,
    pub target_measure: f64,
    pub constant: f64,
    pub disjoint: bool,
    pub covered: bool,
    pub probes: usize,
}

impl CoverResult {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn within_bound(&self) -> bool {
        self.constant <= 6f64.powi(self.dim() as i32)
    }

    /// All invariants: disjoint thirds, coverage, radii at most `3r`,
    /// constant at most `6^d`.
    pub fn valid(&self) -> bool {
        self.disjoint
            && self.covered
            && self.within_bound()
            && self.radii.iter().all(|q| *q <= 3.0 * self.r)
    }

    /// Writes every candidate as `center...,radius,selected`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let d = self.dim();
        let mut out = String::new();
        let cols: Vec<String> = (1..=d).map(|k| format!("c{k}")).collect();
        out.push_str(&cols.join(","));
        out.push_str(",radius,selected\n");
        for c in &self.candidates {
            for v in &c.center {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{},{}\n", c.radius, c.selected as u8));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (u, v) in a.iter().zip(b) {
        match u.total_cmp(v) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn check_hypothesis(x: &[f64], r: f64, rho1: &RadiusFunction) -> Result<f64> {
    if x.is_empty() || x.len() > 2 {
        return Err(Error::Unsupported(format!("covers in d = {}", x.len())));
    }
    let rho = rho1.try_eval(norm(x))?;
    if !(r >= rho) {
        return Err(Error::CoverHypothesis { r, rho });
    }
    Ok(rho)
}

/// Candidate centers in the closed ball: an adaptive lattice of pitch at
/// most `ρ₁/6` plus boundary points, with any center whose radius exceeds
/// `3r` pulled back along the ray from `x` to where `ρ₁ = 3r`.
fn candidates(x: &[f64], r: f64, rho1: &RadiusFunction) -> Vec<Candidate> {
    let d = x.len();
    let mut pts: Vec<Vec<f64>> = Vec::new();
    adaptive_cube(x, r, rho1, 3, &mut |p| {
        if dist(p, x) <= r {
            pts.push(p.to_vec());
        }
    });
    let pitch = rho1.eval(norm(x) + r) / 6.0;
    if d == 1 {
        pts.push(vec![x[0] - r]);
        pts.push(vec![x[0] + r]);
    } else {
        let n = ((2.0 * PI * r / pitch).ceil() as usize).max(8);
        for k in 0..n {
            let a = 2.0 * PI * k as f64 / n as f64;
            pts.push(vec![x[0] + r * a.cos(), x[1] + r * a.sin()]);
        }
    }
    pts.into_iter()
        .map(|p| {
            let q = rho1.eval(norm(&p));
            if q <= 3.0 * r {
                return Candidate {
                    center: p,
                    radius: q,
                    selected: false,
                };
            }
            let along =
                |t: f64| -> Vec<f64> { x.iter().zip(&p).map(|(a, b)| a + t * (b - a)).collect() };
            let t = bisect(0.0, 1.0, |t| rho1.eval(norm(&along(t))) - 3.0 * r, 80);
            // keep the side where ρ₁ <= 3r
            let mut z = along(t);
            let mut q = rho1.eval(norm(&z));
            let mut s = t;
            while q > 3.0 * r && s > 0.0 {
                s = (s - 1e-12).max(0.0);
                z = along(s);
                q = rho1.eval(norm(&z));
            }
            Candidate {
                center: z,
                radius: q,
                selected: false,
            }
        })
        .collect()
}

/// Probe points of the closed ball: a lattice plus its boundary, about
/// `target` in number.
fn probe_points(x: &[f64], r: f64, target: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(target + 64);
    if x.len() == 1 {
        for i in 0..target {
            out.push(vec![x[0] - r + 2.0 * r * i as f64 / (target - 1) as f64]);
        }
        return out;
    }
    let side = ((target as f64 * 4.0 / PI).sqrt().ceil()) as usize;
    for i in 0..=side {
        for k in 0..=side {
            let p = vec![
                x[0] - r + 2.0 * r * i as f64 / side as f64,
                x[1] - r + 2.0 * r * k as f64 / side as f64,
            ];
            if dist(&p, x) <= r {
                out.push(p);
            }
        }
    }
    let ring = side * 4;
    for k in 0..ring {
        let a = 2.0 * PI * k as f64 / ring as f64;
        out.push(vec![x[0] + r * a.cos(), x[1] + r * a.sin()]);
    }
    out
}

/// Cover of `D(x, r)` by `D(x_i, ρ₁(|x_i|))` from a Vitali selection.
pub fn greedy_cover(x: &[f64], r: f64, rho1: &RadiusFunction) -> Result<CoverResult> {
    greedy_cover_with(x, r, rho1, 10_000)
}

pub fn greedy_cover_with(
    x: &[f64],
    r: f64,
    rho1: &RadiusFunction,
    probes: usize,
) -> Result<CoverResult> {
    check_hypothesis(x, r, rho1)?;
    if probes < 2 {
        return Err(invalid("probes", "need at least two"));
    }
    let d = x.len();
    let mut cands = candidates(x, r, rho1);
    cands.sort_by(|a, b| {
        b.radius
            .total_cmp(&a.radius)
            .then_with(|| dist(&a.center, x).total_cmp(&dist(&b.center, x)))
            .then_with(|| lex(&a.center, &b.center))
    });
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..cands.len() {
        let c = &cands[i];
        let free = chosen.iter().all(|&k| {
            let s = &cands[k];
            dist(&c.center, &s.center) >= (c.radius + s.radius) / 3.0
        });
        if free {
            chosen.push(i);
        }
    }
    for &k in &chosen {
        cands[k].selected = true;
    }
    let centers: Vec<Vec<f64>> = chosen.iter().map(|&k| cands[k].center.clone()).collect();
    let radii: Vec<f64> = chosen.iter().map(|&k| cands[k].radius).collect();

    let mut disjoint = true;
    for a in 0..centers.len() {
        for b in a + 1..centers.len() {
            if dist(&centers[a], &centers[b]) < (radii[a] + radii[b]) / 3.0 {
                disjoint = false;
            }
        }
    }
    let pts = probe_points(x, r, probes);
    let covered = pts
        .iter()
        .all(|p| centers.iter().zip(&radii).any(|(c, q)| dist(p, c) <= *q));
    let overlap_sum: f64 = radii.iter().map(|q| ball_measure(d, *q)).sum();
    let target_measure = ball_measure(d, r);
    Ok(CoverResult {
        x: x.to_vec(),
        r,
        candidates: cands,
        centers,
        radii,
        overlap_sum,
        target_measure,
        constant: overlap_sum / target_measure,
        disjoint,
        covered,
        probes: pts.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinBallReport {
    /// `|D(x, r) ∩ E| / (ε |D(x, r)|)`.
    pub ratio: f64,
    /// `Σ_i |D(x_i, ρ₁(|x_i|)) ∩ E| / (ε |D(x, r)|)`, an upper bound for `ratio`.
    pub cover_ratio: f64,
    pub constant: f64,
    pub holds: bool,
}

/// Relative mass of a thin set in a large ball, bounded through the cover.
pub fn thin_ball_bound(
    e: &MeasurableSet,
    x: &[f64],
    r: f64,
    rho1: &RadiusFunction,
    eps: f64,
) -> Result<ThinBallReport> {
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    let cover = greedy_cover(x, r, rho1)?;
    let scale = eps * cover.target_measure;
    let ratio = e.intersect_ball_measure(x, r)? / scale;
    let mut through = 0.0;
    for (c, q) in cover.centers.iter().zip(&cover.radii) {
        through += e.intersect_ball_measure(c, *q)?;
    }
    let cover_ratio = through / scale;
    Ok(ThinBallReport {
        ratio,
        cover_ratio,
        constant: cover.constant,
        holds: cover.covered && ratio <= cover_ratio * (1.0 + 1e-12) && ratio <= cover.constant,
    })
}
