//! Radius functions and the compatibility condition linking the spatial
//! radius `rho1` with the frequency radius `rho2`.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::quad::log_space;

/// A continuous non-increasing map from `[0, inf)` to `(0, inf)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadiusFunction {
    /// `min(t^-a, 1)`.
    PowerLaw { a: f64 },
    /// The constant `c`.
    Constant { c: f64 },
    /// `min(t^-n, 1)` for large `n`, approximating the indicator of `[0, 1]`.
    Cutoff { n: f64 },
    /// Piecewise-linear interpolation of monotone samples, constant outside
    /// the table.
    Tabulated { ts: Vec<f64>, values: Vec<f64> },
    /// `value_scale * inner(arg_scale * t)`.
    Scaled {
        inner: Arc<RadiusFunction>,
        value_scale: f64,
        arg_scale: f64,
    },
}

impl RadiusFunction {
    pub fn power_law(a: f64) -> Self {
        Self::PowerLaw { a }
    }

    pub fn constant(c: f64) -> Self {
        Self::Constant { c }
    }

    /// Builds a tabulated function. Values are clamped to their running
    /// minimum so the result is non-increasing.
    pub fn tabulated(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("table", "needs at least one sample"));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut ts = Vec::with_capacity(pts.len());
        let mut values = Vec::with_capacity(pts.len());
        let mut running = f64::INFINITY;
        for (t, v) in pts {
            if !(t.is_finite() && t >= 0.0 && v.is_finite() && v > 0.0) {
                return Err(invalid("table", format!("bad sample ({t}, {v})")));
            }
            if ts.last() == Some(&t) {
                continue;
            }
            running = running.min(v);
            ts.push(t);
            values.push(running);
        }
        Ok(Self::Tabulated { ts, values })
    }

    pub fn scaled(&self, value_scale: f64, arg_scale: f64) -> Self {
        Self::Scaled {
            inner: Arc::new(self.clone()),
            value_scale,
            arg_scale,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::PowerLaw { a } => {
                if t <= 1.0 {
                    1.0
                } else {
                    t.powf(-a)
                }
            }
            Self::Cutoff { n } => {
                if t <= 1.0 {
                    1.0
                } else {
                    t.powf(-n)
                }
            }
            Self::Constant { c } => *c,
            Self::Tabulated { ts, values } => {
                if t <= ts[0] {
                    return values[0];
                }
                let last = ts.len() - 1;
                if t >= ts[last] {
                    return values[last];
                }
                let i = ts.partition_point(|&s| s <= t) - 1;
                let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
                values[i] + w * (values[i + 1] - values[i])
            }
            Self::Scaled {
                inner,
                value_scale,
                arg_scale,
            } => value_scale * inner.eval(arg_scale * t),
        }
    }

    /// Evaluates and rejects non-finite or non-positive values.
    pub fn try_eval(&self, t: f64) -> Result<f64> {
        let v = self.eval(t);
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::NonFinite { t })
        }
    }

    /// Parses `powerlaw:a=2`, `constant:c=1`, `cutoff:n=8` or
    /// `table:0:1,2:0.5,8:0.1`.
    pub fn parse(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind.trim() {
            "powerlaw" | "power" => Ok(Self::power_law(param(rest, "a").map_err(|r| err(&r))?)),
            "constant" | "const" => Ok(Self::constant(param(rest, "c").unwrap_or(1.0))),
            "cutoff" => Ok(Self::Cutoff {
                n: param(rest, "n").map_err(|r| err(&r))?,
            }),
            "table" => {
                let mut pts = Vec::new();
                for item in rest.split(',').filter(|x| !x.trim().is_empty()) {
                    let (t, v) = item
                        .split_once(':')
                        .ok_or_else(|| err("expected t:value"))?;
                    let t: f64 = t.trim().parse().map_err(|_| err("bad t"))?;
                    let v: f64 = v.trim().parse().map_err(|_| err("bad value"))?;
                    pts.push((t, v));
                }
                Self::tabulated(&pts)
            }
            _ => Err(err("unknown radius kind")),
        }
    }
}

fn param(rest: &str, key: &str) -> std::result::Result<f64, String> {
    for kv in rest.split(',') {
        if let Some((k, v)) = kv.split_once('=') {
            if k.trim() == key {
                return v.trim().parse().map_err(|_| format!("bad value for {key}"));
            }
        }
    }
    Err(format!("missing parameter {key}"))
}

impl fmt::Display for RadiusFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PowerLaw { a } => write!(f, "powerlaw:a={a}"),
            Self::Constant { c } => write!(f, "constant:c={c}"),
            Self::Cutoff { n } => write!(f, "cutoff:n={n}"),
            Self::Tabulated { ts, .. } => write!(f, "table[{}]", ts.len()),
            Self::Scaled {
                inner,
                value_scale,
                arg_scale,
            } => write!(f, "{value_scale}*({inner})({arg_scale}t)"),
        }
    }
}

/// Outcome of probing `C2 / rho2(C1 / rho1(t)) >= t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    pub holds: bool,
    pub worst_margin: f64,
    pub worst_t: f64,
    pub t_max: f64,
    pub probes: usize,
}

/// Two radius functions with their constants `C1`, `C2`.
#[derive(Debug, Clone)]
pub struct RadiusPair {
    pub rho1: RadiusFunction,
    pub rho2: RadiusFunction,
    pub c1: f64,
    pub c2: f64,
    certificate: Option<CompatibilityReport>,
}

/// Margins within this relative distance of zero count as satisfied; the
/// boundary pairs (Wolff, power pairs) hit the condition with equality.
const MARGIN_RTOL: f64 = 1e-12;

impl RadiusPair {
    pub fn new(rho1: RadiusFunction, rho2: RadiusFunction, c1: f64, c2: f64) -> Result<Self> {
        if !(c1.is_finite() && c1 > 0.0) {
            return Err(invalid("c1", "must be positive"));
        }
        if !(c2.is_finite() && c2 > 0.0) {
            return Err(invalid("c2", "must be positive"));
        }
        Ok(Self {
            rho1,
            rho2,
            c1,
            c2,
            certificate: None,
        })
    }

    /// `rho1 = rho2 = min(1/t, 1)`, `C1 = C2 = 1`.
    pub fn wolff() -> Self {
        Self::power(1.0)
    }

    /// `rho1 = min(t^-a, 1)`, `rho2 = min(t^(-1/a), 1)`.
    pub fn power(a: f64) -> Self {
        Self::new(
            RadiusFunction::power_law(a),
            RadiusFunction::power_law(1.0 / a),
            1.0,
            1.0,
        )
        .expect("unit constants")
    }

    /// `rho1 = min(t^(-1/n), 1)`, `rho2 = min(t^-n, 1)`: Wolff at `n = 1`,
    /// tending to the relatively dense / compact case as `n` grows.
    pub fn interpolating(n: f64) -> Self {
        Self::power(1.0 / n)
    }

    /// `rho1 = min(1/t, 1)`, `rho2 = min(t^(-1/2), 1)`, which violates the
    /// condition for every choice of constants.
    pub fn incompatible() -> Self {
        Self::new(
            RadiusFunction::power_law(1.0),
            RadiusFunction::power_law(0.5),
            1.0,
            1.0,
        )
        .expect("unit constants")
    }

    pub fn with_constants(&self, c1: f64, c2: f64) -> Result<Self> {
        Self::new(self.rho1.clone(), self.rho2.clone(), c1, c2)
    }

    /// `C2 / rho2(C1 / rho1(t))`.
    pub fn condition_value(&self, t: f64) -> Result<f64> {
        let r1 = self.rho1.try_eval(t)?;
        let inner = self.c1 / r1;
        let r2 = self
            .rho2
            .try_eval(inner)
            .map_err(|_| Error::NonFinite { t })?;
        let v = self.c2 / r2;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { t })
        }
    }

    /// Runs [`check_compatibility`] and remembers the report when it holds.
    pub fn certify(&mut self, t_max: f64, probes: usize) -> Result<CompatibilityReport> {
        let report = check_compatibility(self, t_max, probes)?;
        self.certificate = report.holds.then(|| report.clone());
        Ok(report)
    }

    pub fn is_compatible(&self) -> bool {
        self.certificate.is_some()
    }

    pub fn certificate(&self) -> Option<&CompatibilityReport> {
        self.certificate.as_ref()
    }

    /// Parses a named pair (`wolff`, `incompatible`, `powerlaw:a=2`,
    /// `ls:n=8`) or an explicit `rho1=...;rho2=...;c1=..;c2=..` spec.
    pub fn parse(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let s = s.trim();
        if s == "wolff" {
            return Ok(Self::wolff());
        }
        if s == "incompatible" {
            return Ok(Self::incompatible());
        }
        if let Some(rest) = s
            .strip_prefix("powerlaw:")
            .or_else(|| s.strip_prefix("power:"))
        {
            return Ok(Self::power(param(rest, "a").map_err(|r| err(&r))?));
        }
        if let Some(rest) = s.strip_prefix("ls:") {
            return Ok(Self::interpolating(param(rest, "n").map_err(|r| err(&r))?));
        }
        let mut rho1 = None;
        let mut rho2 = None;
        let (mut c1, mut c2) = (1.0, 1.0);
        for part in s.split(';').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| err("expected key=value"))?;
            match k.trim() {
                "rho1" => rho1 = Some(RadiusFunction::parse(v)?),
                "rho2" => rho2 = Some(RadiusFunction::parse(v)?),
                "c1" => c1 = v.trim().parse().map_err(|_| err("bad c1"))?,
                "c2" => c2 = v.trim().parse().map_err(|_| err("bad c2"))?,
                _ => return Err(err("unknown key")),
            }
        }
        Self::new(
            rho1.ok_or_else(|| err("missing rho1"))?,
            rho2.ok_or_else(|| err("missing rho2"))?,
            c1,
            c2,
        )
    }
}

impl fmt::Display for RadiusPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rho1={};rho2={};c1={};c2={}",
            self.rho1, self.rho2, self.c1, self.c2
        )
    }
}

/// Probes the compatibility condition at `0`, `t_max` and log-spaced points
/// in between.
pub fn check_compatibility(
    pair: &RadiusPair,
    t_max: f64,
    probes: usize,
) -> Result<CompatibilityReport> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(invalid("t_max", "must be positive and finite"));
    }
    if probes < 2 {
        return Err(invalid("probes", "need at least 2"));
    }
    let mut ts = vec![0.0];
    let lo = 1e-6 * t_max.min(1.0);
    if probes > 2 {
        ts.extend(log_space(lo, t_max, probes - 1));
    } else {
        ts.push(t_max);
    }
    let mut holds = true;
    let mut worst_margin = f64::INFINITY;
    let mut worst_t = 0.0;
    for &t in &ts {
        let margin = pair.condition_value(t)? - t;
        if margin < -MARGIN_RTOL * t.max(1.0) {
            holds = false;
        }
        if margin < worst_margin {
            worst_margin = margin;
            worst_t = t;
        }
    }
    Ok(CompatibilityReport {
        holds,
        worst_margin,
        worst_t,
        t_max,
        probes,
    })
}

/// `rho1 -> k rho1(t/k)`, `rho2 -> rho2(k t)/k`, constants unchanged. A
/// certified pair is re-certified on the same probe grid.
pub fn scale_pair(pair: &RadiusPair, k: f64) -> Result<RadiusPair> {
    if !(k.is_finite() && k > 0.0) {
        return Err(invalid("k", "must be positive and finite"));
    }
    let mut out = RadiusPair::new(
        pair.rho1.scaled(k, 1.0 / k),
        pair.rho2.scaled(1.0 / k, k),
        pair.c1,
        pair.c2,
    )?;
    if let Some(cert) = pair.certificate() {
        out.certify(cert.t_max, cert.probes)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wolff_pair_holds() {
        let r = check_compatibility(&RadiusPair::wolff(), 1e6, 10_000).unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn constant_pair_fails_at_t_max() {
        let p = RadiusPair::new(
            RadiusFunction::constant(1.0),
            RadiusFunction::constant(1.0),
            1.0,
            1.0,
        )
        .unwrap();
        let r = check_compatibility(&p, 10.0, 100).unwrap();
        assert!(!r.holds);
        assert_eq!(r.worst_t, 10.0);
        assert!((r.worst_margin + 9.0).abs() < 1e-12);
    }

    #[test]
    fn power_pair_holds() {
        let r = check_compatibility(&RadiusPair::power(2.0), 1e8, 10_000).unwrap();
        assert!(r.holds, "{r:?}");
    }

    #[test]
    fn interpolating_family_holds() {
        for n in [1.0, 2.0, 4.0, 8.0] {
            let r = check_compatibility(&RadiusPair::interpolating(n), 1e8, 10_000).unwrap();
            assert!(r.holds, "n = {n}: {r:?}");
        }
    }

    #[test]
    fn incompatible_pair_fails() {
        let r = check_compatibility(&RadiusPair::incompatible(), 1e8, 1000).unwrap();
        assert!(!r.holds);
    }

    #[test]
    fn certify_marks_pair() {
        let mut p = RadiusPair::wolff();
        assert!(!p.is_compatible());
        p.certify(1e6, 1000).unwrap();
        assert!(p.is_compatible());
        let mut q = RadiusPair::incompatible();
        q.certify(1e8, 1000).unwrap();
        assert!(!q.is_compatible());
    }

    #[test]
    fn non_finite_radius_is_reported() {
        let p = RadiusPair::new(
            RadiusFunction::power_law(1.0),
            RadiusFunction::constant(f64::NAN),
            1.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            check_compatibility(&p, 10.0, 10),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn scale_identity() {
        let p = RadiusPair::power(2.0);
        let q = scale_pair(&p, 1.0).unwrap();
        for t in log_space(1e-3, 1e3, 50) {
            assert_eq!(p.rho1.eval(t), q.rho1.eval(t));
            assert_eq!(p.rho2.eval(t), q.rho2.eval(t));
        }
    }

    #[test]
    fn scaling_preserves_compatibility() {
        let mut w = RadiusPair::wolff();
        w.certify(1e8, 10_000).unwrap();
        let s = scale_pair(&w, 2.0).unwrap();
        assert!(s.is_compatible());

        let p = RadiusPair::power(2.0);
        let base = check_compatibility(&p, 1e8, 10_000).unwrap();
        let scaled = check_compatibility(&scale_pair(&p, 0.5).unwrap(), 1e8, 10_000).unwrap();
        assert!(base.holds && scaled.holds);
    }

    #[test]
    fn parse_round_trip() {
        for s in ["powerlaw:a=2", "constant:c=1", "cutoff:n=8"] {
            let r = RadiusFunction::parse(s).unwrap();
            assert_eq!(RadiusFunction::parse(&r.to_string()).unwrap(), r);
        }
        let t = RadiusFunction::parse("table:0:1,2:0.5,8:0.1").unwrap();
        assert!((t.eval(1.0) - 0.75).abs() < 1e-15);
        assert_eq!(t.eval(100.0), 0.1);
        assert!(RadiusFunction::parse("bogus:a=1").is_err());
        let p = RadiusPair::parse("rho1=powerlaw:a=2;rho2=powerlaw:a=0.5;c1=2;c2=3").unwrap();
        assert_eq!((p.c1, p.c2), (2.0, 3.0));
    }

    #[test]
    fn tabulated_is_clamped_monotone() {
        let t =
            RadiusFunction::tabulated(&[(0.0, 1.0), (1.0, 0.5), (2.0, 0.8), (3.0, 0.2)]).unwrap();
        assert_eq!(t.eval(2.0), 0.5);
        let samples: Vec<f64> = (0..300).map(|i| t.eval(i as f64 * 0.01)).collect();
        assert!(samples.windows(2).all(|w| w[0] >= w[1]));
    }

    fn family() -> Vec<RadiusFunction> {
        vec![
            RadiusFunction::power_law(1.0),
            RadiusFunction::power_law(0.5),
            RadiusFunction::power_law(2.0),
            RadiusFunction::constant(0.7),
            RadiusFunction::Cutoff { n: 8.0 },
            RadiusFunction::tabulated(&[(0.0, 2.0), (1.0, 1.0), (5.0, 0.1)]).unwrap(),
            RadiusFunction::power_law(1.0).scaled(3.0, 0.5),
        ]
    }

    #[test]
    fn monotone_on_log_grid() {
        let ts = log_space(1e-4, 1e6, 1000);
        for rho in family() {
            let v: Vec<f64> = ts.iter().map(|&t| rho.eval(t)).collect();
            assert!(v.windows(2).all(|w| w[0] >= w[1]), "{rho}");
            assert!(v.iter().all(|x| *x > 0.0));
        }
    }

    proptest! {
        #[test]
        fn continuity_under_refinement(t in 0.0f64..100.0, idx in 0usize..7) {
            let rho = &family()[idx];
            let h = 1e-9;
            prop_assert!((rho.eval(t + h) - rho.eval(t)).abs() < 1e-6);
        }

        #[test]
        fn scaling_round_trip(k in 0.1f64..10.0, t in 0.0f64..1e4) {
            let p = RadiusPair::power(2.0);
            let back = scale_pair(&scale_pair(&p, k).unwrap(), 1.0 / k).unwrap();
            let (a, b) = (p.rho1.eval(t), back.rho1.eval(t));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
            let (a, b) = (p.rho2.eval(t), back.rho2.eval(t));
            prop_assert!((a - b).abs() <= 1e-12 * a.abs());
        }
    }
}
