//! Experiment runner behind the `thinset` binary.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contraction::{
    composition_norm, pullback_thinness, AtomicMeasure, ContractionOptions, SymbolPair,
};
use crate::corpus;
use crate::counterexamples::ladder;
use crate::covering::greedy_cover;
use crate::error::{Error, Result};
use crate::mollifier::build_phi;
use crate::operators::OperatorPair;
use crate::radius::{check_compatibility, RadiusFunction, RadiusPair};
use crate::report::{config_hash, fmt_f, fmt_list, par_map, workers, Table};
use crate::sets::{certify_thinness, thin_lattice, CenterSpec, MeasurableSet, PeriodicIntervals};
use crate::spectral::{GridFunction, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    VerifyCondition,
    Thinness,
    Schur,
    Cover,
    Up,
    Counterexample,
    Contraction,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::VerifyCondition => "verify-condition",
            Self::Thinness => "thinness",
            Self::Schur => "schur",
            Self::Cover => "cover",
            Self::Up => "up",
            Self::Counterexample => "counterexample",
            Self::Contraction => "contraction",
        }
    }
}

/// Every knob of every experiment; a config file uses the same keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, Args)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// Radius pair: wolff, incompatible, powerlaw:a=2, ls:n=8 or rho1=..;rho2=..;c1=..;c2=..
    #[arg(long)]
    pub pair: Option<String>,
    /// Grid as N=4096,R=64[,d=1]
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub dim: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub corpus_size: Option<usize>,
    /// Set spec (periodic:n=8,h=0.1, intervals:.., box:..) or a CSV file
    #[arg(long)]
    pub set: Option<String>,
    /// Radius function: powerlaw:a=1, constant:c=1, cutoff:n=8, table:..
    #[arg(long)]
    pub rho: Option<String>,
    #[arg(long)]
    pub half_extent: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub probes: Option<usize>,
    #[arg(long)]
    pub instances: Option<usize>,
    /// Atomic measure: bernoulli or atoms:x1:w1,x2:w2,..
    #[arg(long)]
    pub mu1: Option<String>,
    #[arg(long)]
    pub mu2: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<f64>>,
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long)]
    pub jmax: Option<usize>,
    #[arg(long)]
    pub phi_resolution: Option<usize>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Extra per-experiment dump (cover: centers of the first instance)
    #[arg(long)]
    #[serde(skip_serializing)]
    pub dump: Option<PathBuf>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Params { $($f: $hi.$f.or($lo.$f),)* }
    };
}

impl Params {
    /// Fields of `self`, falling back to `other`.
    pub fn or(self, other: Params) -> Params {
        overlay!(
            self,
            other,
            pair,
            grid,
            eps,
            k,
            dim,
            seed,
            corpus_size,
            set,
            rho,
            half_extent,
            t_max,
            probes,
            instances,
            mu1,
            mu2,
            p,
            delta,
            window,
            jmax,
            phi_resolution,
            out,
            dump
        )
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "thinset",
    version,
    about = "Uncertainty principles on thin sets: experiments"
)]
pub struct Cli {
    /// Experiment to run; may also come from the config file
    #[arg(value_enum)]
    pub experiment: Option<Experiment>,
    /// TOML file with `experiment = ".."` and any flag as a key
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: Params,
}

fn field<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::InvalidParameter {
        name,
        reason: e.to_string(),
    })
}

fn bad(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

/// Reads a config file into an experiment name and parameters.
pub fn load_config(path: &Path) -> Result<(Option<Experiment>, Params)> {
    let text = std::fs::read_to_string(path)?;
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| bad("config", e.message().to_string()))?;
    let experiment = match table.remove("experiment") {
        Some(v) => Some(
            Experiment::deserialize(v).map_err(|e| bad("experiment", e.message().to_string()))?,
        ),
        None => None,
    };
    let params = Params::deserialize(table).map_err(|e| bad("config", e.message().to_string()))?;
    Ok((experiment, params))
}

/// Fills in the defaults `experiment` uses.
pub fn resolve(experiment: Experiment, p: Params) -> Params {
    use Experiment::*;
    let s = |v: &str| Some(v.to_string());
    let defaults = match experiment {
        VerifyCondition => Params {
            pair: s("wolff"),
            t_max: Some(1e6),
            probes: Some(400),
            ..Params::default()
        },
        Thinness => Params {
            set: s("periodic:n=8,h=0.1"),
            rho: s("constant:c=1"),
            ..Params::default()
        },
        Schur | Up => Params {
            pair: s("wolff"),
            grid: s("N=4096,R=64"),
            eps: Some(if experiment == Schur {
                vec![0.02, 0.05, 0.1, 0.2]
            } else {
                vec![0.01]
            }),
            seed: Some(7),
            corpus_size: Some(50),
            phi_resolution: Some(256),
            ..Params::default()
        },
        Cover => Params {
            pair: s("wolff"),
            dim: Some(vec![1, 2]),
            instances: Some(100),
            seed: Some(7),
            ..Params::default()
        },
        Counterexample => Params {
            pair: s("incompatible"),
            eps: Some(vec![0.1]),
            k: Some(vec![2.0, 4.0, 8.0, 16.0]),
            dim: Some(vec![1]),
            ..Params::default()
        },
        Contraction => Params {
            mu1: s("bernoulli"),
            p: Some(vec![2.0]),
            delta: Some(vec![0.05]),
            grid: s("N=4096,R=64"),
            seed: Some(7),
            corpus_size: Some(50),
            ..Params::default()
        },
    };
    let mut r = p.or(defaults);
    if experiment == Contraction && r.mu2.is_none() {
        r.mu2 = r.mu1.clone();
    }
    let canonical = |m: &mut Option<String>| {
        if let Some(mu) = m.as_deref().and_then(|v| AtomicMeasure::parse(v).ok()) {
            *m = Some(mu.to_string());
        }
    };
    canonical(&mut r.mu1);
    canonical(&mut r.mu2);
    r
}

/// Hash of the experiment name and its resolved parameters.
pub fn params_hash(experiment: Experiment, p: &Params) -> String {
    let body = toml::to_string(p).unwrap_or_default();
    config_hash(&format!("experiment = \"{}\"\n{body}", experiment.name()))
}

/// Parses, merges and runs; returns the table and its config hash.
pub fn execute(cli: Cli) -> Result<(Experiment, Params, Table, String)> {
    let (file_exp, file_params) = match &cli.config {
        Some(path) => load_config(path)?,
        None => (None, Params::default()),
    };
    let experiment = cli.experiment.or(file_exp).ok_or_else(|| {
        bad(
            "experiment",
            "name one on the command line or in the config",
        )
    })?;
    let params = resolve(experiment, cli.params.or(file_params));
    let hash = params_hash(experiment, &params);
    let table = run(experiment, &params)?;
    Ok((experiment, params, table, hash))
}

pub fn run(experiment: Experiment, p: &Params) -> Result<Table> {
    match experiment {
        Experiment::VerifyCondition => verify_condition(p),
        Experiment::Thinness => thinness(p),
        Experiment::Schur => schur(p, false),
        Experiment::Up => schur(p, true),
        Experiment::Cover => cover(p),
        Experiment::Counterexample => counterexample(p),
        Experiment::Contraction => contraction(p),
    }
}

fn need<'a, T>(name: &'static str, v: &'a Option<T>) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| bad(name, "missing"))
}

fn pair_of(p: &Params) -> Result<RadiusPair> {
    field("pair", RadiusPair::parse(need("pair", &p.pair)?))
}

fn grid_of(p: &Params) -> Result<GridSpec> {
    field("grid", GridSpec::parse(need("grid", &p.grid)?))
}

fn set_of(spec: &str) -> Result<MeasurableSet> {
    let path = Path::new(spec);
    if spec.ends_with(".csv") || path.is_file() {
        field("set", MeasurableSet::read_csv(path))
    } else {
        field("set", MeasurableSet::parse(spec))
    }
}

fn verify_condition(p: &Params) -> Result<Table> {
    let pair = pair_of(p)?;
    let t_max = *need("t-max", &p.t_max)?;
    let probes = *need("probes", &p.probes)?;
    let rep = field("t-max", check_compatibility(&pair, t_max, probes))?;
    let mut t = Table::new(&[
        "pair",
        "c1",
        "c2",
        "holds",
        "worst_margin",
        "worst_t",
        "t_max",
        "probes",
    ]);
    t.push(vec![
        pair.to_string(),
        fmt_f(pair.c1),
        fmt_f(pair.c2),
        rep.holds.to_string(),
        fmt_f(rep.worst_margin),
        fmt_f(rep.worst_t),
        fmt_f(t_max),
        probes.to_string(),
    ]);
    Ok(t)
}

fn thinness(p: &Params) -> Result<Table> {
    let spec = need("set", &p.set)?;
    let set = set_of(spec)?;
    let rho = field("rho", RadiusFunction::parse(need("rho", &p.rho)?))?;
    let half = match p.half_extent {
        Some(h) => h,
        None => {
            let b = set
                .bounding_box()
                .ok_or_else(|| bad("set", "empty set needs --half-extent"))?;
            b.lo.iter().chain(&b.hi).fold(0.0f64, |m, v| m.max(v.abs())) + 2.0
        }
    };
    let centers = match &set {
        MeasurableSet::Periodic(per) if p.half_extent.is_none() => {
            CenterSpec::periodic_worst(per, &rho)
        }
        _ => CenterSpec::adaptive(half),
    };
    let cert = certify_thinness(&set, &rho, &centers)?;
    let target = p.eps.as_ref().and_then(|e| e.first().copied());
    let mut t = Table::new(&[
        "set",
        "rho",
        "dim",
        "measure",
        "epsilon_measured",
        "worst_center",
        "centers",
        "coverage",
        "eps",
        "passes",
    ]);
    let passes = target.map(|e| cert.passes(e, 1e-9));
    t.push(vec![
        spec.clone(),
        rho.to_string(),
        set.dim().to_string(),
        fmt_f(set.measure()),
        fmt_f(cert.epsilon_measured),
        fmt_list(&cert.worst_center),
        cert.center_count.to_string(),
        cert.coverage.to_string(),
        target.map(fmt_f).unwrap_or_default(),
        passes.map(|b| b.to_string()).unwrap_or_default(),
    ]);
    if passes == Some(false) {
        t.fail(format!(
            "set is not {}-thin: measured {}",
            target.unwrap_or(0.0),
            cert.epsilon_measured
        ));
    }
    Ok(t)
}

/// Seeded shifted lattices `E` (for `ρ₁`, spatial grid) and `Σ` (for `ρ₂`,
/// dual grid).
pub fn thin_pair(
    pair: &RadiusPair,
    grid: &GridSpec,
    eps: f64,
    seed: u64,
) -> Result<(PeriodicIntervals, PeriodicIntervals)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (s1, s2): (f64, f64) = (rng.gen(), rng.gen());
    let e = thin_lattice(&pair.rho1, eps, 0.5 * grid.extent(), s1)?;
    let sigma = thin_lattice(&pair.rho2, eps, 0.5 * grid.dual().extent(), s2)?;
    Ok((e, sigma))
}

fn schur(p: &Params, up: bool) -> Result<Table> {
    let pair = pair_of(p)?;
    let grid = grid_of(p)?;
    if grid.dim != 1 {
        return Err(bad("grid", "Schur sums and leakages run on the line (d=1)"));
    }
    let seed = *need("seed", &p.seed)?;
    let count = *need("corpus-size", &p.corpus_size)?;
    let phi = Arc::new(field(
        "phi-resolution",
        build_phi(1, *need("phi-resolution", &p.phi_resolution)?),
    )?);
    let mut op = OperatorPair::new(pair.clone(), phi, grid)?;
    if let Some(j) = p.jmax {
        op = op.with_j_max(j);
    }
    let fs: Vec<GridFunction> = corpus::generate(seed, count, 1)
        .iter()
        .map(|f| f.sample(&grid))
        .collect();
    let eps_list = need("eps", &p.eps)?.clone();
    let bound = 3.0 * op.sys.phi.l1_norm * (1.0 + 1e-6);
    let compatible = check_compatibility(&pair, 1e6, 400)?.holds;

    let rows = par_map(
        &eps_list,
        workers(),
        |&eps| -> Result<(Vec<String>, Vec<String>)> {
            let (e, s) = field("eps", thin_pair(&pair, &grid, eps, seed))?;
            let cert_e = certify_thinness(
                &MeasurableSet::Periodic(e.clone()),
                &pair.rho1,
                &CenterSpec::periodic_worst(&e, &pair.rho1),
            )?;
            let cert_s = certify_thinness(
                &MeasurableSet::Periodic(s.clone()),
                &pair.rho2,
                &CenterSpec::periodic_worst(&s, &pair.rho2),
            )?;
            let (e, s) = (MeasurableSet::Periodic(e), MeasurableSet::Periodic(s));
            let mut fails = Vec::new();
            let sr = if up {
                op.schur_bounds_with(&e, &s, eps, &[], &op.default_probes())?
            } else {
                op.schur_bounds(&e, &s, eps, &fs)?
            };
            let u = op.verify_up_inequality(&e, &s, &fs, sr.s_norm_bound())?;
            if !(sr.sup_row <= bound) {
                fails.push(format!(
                    "eps={eps}: sup_row {} exceeds 3|phi|_1",
                    sr.sup_row
                ));
            }
            if !cert_e.passes(eps, 1e-9) || !cert_s.passes(eps, 1e-9) {
                fails.push(format!(
                    "eps={eps}: thin sets measured {} / {}",
                    cert_e.epsilon_measured, cert_s.epsilon_measured
                ));
            }
            let mut row = vec![
                pair.rho1.to_string(),
                pair.rho2.to_string(),
                fmt_f(pair.c1),
                fmt_f(pair.c2),
                fmt_f(eps),
            ];
            if up {
                let mut identity = 0.0f64;
                for f in &fs {
                    let (a, b) = op.split(f)?;
                    identity = identity.max(a.add(&b)?.distance(f)? / f.norm());
                }
                if identity > 1e-8 {
                    fails.push(format!(
                        "eps={eps}: S + T differs from the identity by {identity}"
                    ));
                }
                if u.chain_ok && compatible && !u.inequality_holds {
                    fails.push(format!(
                        "eps={eps}: a defect exceeds the chain constant {}",
                        u.c_theory
                    ));
                }
                row.extend([
                    fmt_f(cert_e.epsilon_measured),
                    fmt_f(cert_s.epsilon_measured),
                    fmt_f(u.alpha),
                    fmt_f(u.beta),
                    fmt_f(u.chain_value),
                    u.chain_ok.to_string(),
                    fmt_f(u.c_theory),
                    fmt_f(u.c_emp),
                    u.worst_function.to_string(),
                    fmt_f(identity),
                    u.inequality_holds.to_string(),
                    compatible.to_string(),
                ]);
            } else {
                row.extend([
                    fmt_f(sr.sup_row),
                    fmt_f(sr.sup_col),
                    fmt_f(sr.thin_row_sup),
                    fmt_f(sr.thin_col_sup),
                    fmt_f(sr.leakage_alpha),
                    fmt_f(sr.leakage_beta),
                    fmt_f(u.c_emp),
                    fmt_f(sr.l_row_sup),
                    fmt_f(sr.l_col_sup),
                ]);
            }
            Ok((row, fails))
        },
    );
    let head: &[&str] = if up {
        &[
            "rho1",
            "rho2",
            "C1",
            "C2",
            "eps",
            "eps_E",
            "eps_Sigma",
            "alpha",
            "beta",
            "chain_value",
            "chain_ok",
            "C_theory",
            "C_emp",
            "worst_function",
            "identity_error",
            "inequality_holds",
            "compatible",
        ]
    } else {
        &[
            "rho1",
            "rho2",
            "C1",
            "C2",
            "eps",
            "sup_row",
            "sup_col",
            "thin_row_sup",
            "thin_col_sup",
            "alpha",
            "beta",
            "C_emp",
            "l_row_sup",
            "l_col_sup",
        ]
    };
    let mut t = Table::new(head);
    for r in rows {
        let (row, fails) = r?;
        t.push(row);
        fails.into_iter().for_each(|f| t.fail(f));
    }
    Ok(t)
}

/// `count` seeded instances `(x, r)` with `|x| <= 20` and
/// `r ∈ [ρ(|x|), 3ρ(|x|)]`, cycling through `dims`.
pub fn cover_instances(
    rho: &RadiusFunction,
    dims: &[usize],
    count: usize,
    seed: u64,
) -> Vec<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let d = dims[i % dims.len()];
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r = rng.gen_range(1.0..3.0) * rho.eval(norm);
            (x, r)
        })
        .collect()
}

fn cover(p: &Params) -> Result<Table> {
    let rho = match &p.rho {
        Some(s) => field("rho", RadiusFunction::parse(s))?,
        None => pair_of(p)?.rho1,
    };
    let dims = need("dim", &p.dim)?;
    if dims.is_empty() || dims.iter().any(|d| !(1..=2).contains(d)) {
        return Err(bad("dim", "covering runs in d = 1 or 2"));
    }
    let inst = cover_instances(
        &rho,
        dims,
        *need("instances", &p.instances)?,
        *need("seed", &p.seed)?,
    );
    let results = par_map(&inst, workers(), |(x, r)| greedy_cover(x, *r, &rho));
    let mut t = Table::new(&[
        "instance",
        "dim",
        "x",
        "r",
        "candidates",
        "selected",
        "constant",
        "bound",
        "disjoint",
        "covered",
        "probes",
    ]);
    for (i, res) in results.into_iter().enumerate() {
        let c = res?;
        if i == 0 {
            if let Some(path) = &p.dump {
                c.write_csv(path)?;
            }
        }
        let d = c.dim();
        t.push(vec![
            i.to_string(),
            d.to_string(),
            fmt_list(&c.x),
            fmt_f(c.r),
            c.candidates.len().to_string(),
            c.centers.len().to_string(),
            fmt_f(c.constant),
            fmt_f(6f64.powi(d as i32)),
            c.disjoint.to_string(),
            c.covered.to_string(),
            c.probes.to_string(),
        ]);
        if !c.valid() {
            t.fail(format!(
                "instance {i}: disjoint={} covered={} constant={}",
                c.disjoint, c.covered, c.constant
            ));
        }
    }
    Ok(t)
}

fn counterexample(p: &Params) -> Result<Table> {
    let pair = pair_of(p)?;
    let ks = need("k", &p.k)?;
    let mut t = Table::new(&[
        "dim",
        "eps",
        "k",
        "n",
        "a_n",
        "ratio",
        "thinness_E",
        "thinness_Sigma",
        "defect",
    ]);
    for &dim in need("dim", &p.dim)? {
        for &eps in need("eps", &p.eps)? {
            let ladder = ladder(&pair, eps, ks, dim)?;
            for inst in &ladder {
                t.push(vec![
                    dim.to_string(),
                    fmt_f(eps),
                    fmt_f(inst.k),
                    inst.n.to_string(),
                    fmt_f(inst.a_n),
                    fmt_f(inst.ratio),
                    fmt_f(inst.thinness_e.epsilon_measured),
                    fmt_f(inst.thinness_sigma.epsilon_measured),
                    fmt_f(inst.defect()),
                ]);
                if !inst.certificates_pass() {
                    t.fail(format!(
                        "d={dim} eps={eps} k={}: thinness certificate fails",
                        inst.k
                    ));
                }
            }
            for w in ladder.windows(2) {
                if !(w[1].ratio < w[0].ratio) {
                    t.fail(format!(
                        "d={dim} eps={eps}: ratio does not drop from k={} to k={}",
                        w[0].k, w[1].k
                    ));
                }
            }
        }
    }
    Ok(t)
}

fn contraction(p: &Params) -> Result<Table> {
    let mu1 = field("mu1", AtomicMeasure::parse(need("mu1", &p.mu1)?))?;
    let mu2 = field("mu2", AtomicMeasure::parse(need("mu2", &p.mu2)?))?;
    let grid = grid_of(p)?;
    let opts = ContractionOptions {
        window: p.window,
        seed: *need("seed", &p.seed)?,
        corpus_size: *need("corpus-size", &p.corpus_size)?,
        ..ContractionOptions::default()
    };
    let mut points = Vec::new();
    for &pp in need("p", &p.p)? {
        for &delta in need("delta", &p.delta)? {
            points.push((pp, delta));
        }
    }
    let rows = par_map(
        &points,
        workers(),
        |&(pp, delta)| -> Result<(Vec<String>, Vec<String>)> {
            let sym = field("p", SymbolPair::new(pp, mu1.clone(), mu2.clone(), delta))?;
            let rep = composition_norm(&sym, &grid, &opts)?;
            let x_max = rep.window;
            let level = crate::contraction::level_set_density(&mu1, delta, 64)?
                .density
                .max(crate::contraction::level_set_density(&mu2, delta, 64)?.density);
            let pb = pullback_thinness(&sym, level, x_max)?;
            let mut fails = Vec::new();
            if !pb.passes() {
                fails.push(format!(
                    "p={pp} delta={delta}: pullback thinness exceeds max(eps^(1/p), eps)"
                ));
            }
            if !rep.chain_ok() {
                fails.push(format!(
                    "p={pp} delta={delta}: beta^2 = {} above the chain bound",
                    rep.beta * rep.beta
                ));
            }
            if !(rep.interval.1 < 1.0) {
                fails.push(format!(
                    "p={pp} delta={delta}: no contraction certified (interval {:?})",
                    rep.interval
                ));
            }
            let row = vec![
                fmt_f(pp),
                fmt_f(delta),
                fmt_f(pb.cert_e.epsilon_measured),
                fmt_f(pb.cert_sigma.epsilon_measured),
                fmt_f(rep.beta),
                fmt_f(rep.bound_chain_value),
                fmt_f(pb.level_e.density),
                fmt_f(pb.level_sigma.density),
                fmt_f(pb.far_e),
                fmt_f(pb.far_sigma),
                fmt_f(pb.gradient_ratio_e),
                fmt_f(rep.c_emp),
                fmt_f(rep.interval.0),
                fmt_f(rep.interval.1),
                rep.iterations.to_string(),
                fmt_f(rep.window),
            ];
            Ok((row, fails))
        },
    );
    let mut t = Table::new(&[
        "p",
        "delta",
        "eps_E",
        "eps_Sigma",
        "beta",
        "bound_chain_value",
        "level_E",
        "level_Sigma",
        "far_E",
        "far_Sigma",
        "gradient_ratio",
        "C_emp",
        "beta_lo",
        "beta_hi",
        "iterations",
        "window",
    ]);
    for r in rows {
        let (row, fails) = r?;
        t.push(row);
        fails.into_iter().for_each(|f| t.fail(f));
    }
    Ok(t)
}

/// Writes the table to `--out` or stdout.
pub fn emit(table: &Table, params: &Params, hash: &str) -> Result<()> {
    match &params.out {
        Some(path) => table.write_csv(std::fs::File::create(path)?, hash),
        None => table.write_csv(std::io::stdout().lock(), hash),
    }
}
