use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use kpmnet::compiler::{compile_with_ladder, LadderEntry};
use kpmnet::geometry::{auto_cover_box_union, modulus_ladder, validate_covering, ModulusConfig, ModulusRow};
use kpmnet::kernel::kernel_checks;
use kpmnet::verify::{decay_fit, sup_error, support_check, tensor_grid, DecayFit, DecayModel, ErrorLadder, SupError};
use kpmnet::{CompileParams, CompileReport, Covering, Domain, Error, FunctionSpec, JacksonKernel, Polytope, ReluNetwork, TargetFn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Opts;

pub const CONFIG: u8 = 2;
pub const INVARIANT: u8 = 3;
pub const BUDGET: u8 = 4;

pub fn exit_code(e: &anyhow::Error) -> u8 {
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(Error::Budget(_)) => BUDGET,
        Some(Error::Geometry(_) | Error::Invariant(_)) => INVARIANT,
        _ => CONFIG,
    }
}

/// Schema-level failure: reported with exit code 2 whatever its source.
fn schema(e: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("{e}")
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| schema(format!("{}: {e}", path.display())))
}

pub fn parse<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(schema)
}

fn config_path(opts: &Opts) -> Result<&Path> {
    opts.config.as_deref().ok_or_else(|| schema("this subcommand needs --config PATH"))
}

/// Writes `content` to `out/name`, or to stdout without `--out`.
pub fn emit(opts: &Opts, name: &str, content: &str) -> Result<()> {
    match &opts.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, content).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Writes `content` to `out/name` when `--out` is given.
pub fn save(opts: &Opts, name: &str, content: &str) -> Result<()> {
    if opts.out.is_some() {
        emit(opts, name, content)?;
    }
    Ok(())
}

pub fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn check_grid_budget(opts: &Opts, points: u64) -> Result<()> {
    match opts.budget {
        Some(b) if points > b => Err(Error::Budget(format!("{points} grid points exceed the budget {b}")).into()),
        _ => Ok(()),
    }
}

// kernel-check

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelCheckConfig {
    #[serde(default)]
    n_list: Option<Vec<usize>>,
    #[serde(default)]
    quad_points: Option<usize>,
}

#[derive(Serialize)]
struct KernelRow {
    #[serde(flatten)]
    checks: kpmnet::kernel::KernelChecks,
    quad_points: usize,
    pass: bool,
}

pub fn kernel_check(opts: &Opts, n: Option<Vec<usize>>, quad_points: Option<usize>) -> Result<u8> {
    let cfg: KernelCheckConfig = match &opts.config {
        Some(p) => load(p)?,
        None => KernelCheckConfig::default(),
    };
    let ns = n.or(cfg.n_list).unwrap_or_else(|| vec![0, 1, 4, 16, 64, 256]);
    let q = quad_points.or(cfg.quad_points);
    let mut rows = vec![];
    for n in ns {
        let qp = q.unwrap_or(64 * (n + 2));
        let checks = kernel_checks(&JacksonKernel::new(n), qp).with_context(|| format!("degree {n}"))?;
        rows.push(KernelRow { checks, quad_points: qp, pass: checks.passes() });
    }
    emit(opts, "kernel_checks.json", &pretty(&rows))?;
    Ok(if rows.iter().all(|r| r.pass) { 0 } else { INVARIANT })
}

// modulus

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulusRunConfig {
    pub function: FunctionSpec,
    pub polytope: Polytope,
    #[serde(default)]
    pub t_ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub model: Option<DecayModel>,
    #[serde(default)]
    pub sampling: Option<ModulusConfig>,
}

#[derive(Debug, Serialize)]
pub struct ModulusFits {
    pub model: DecayModel,
    pub ordinary: DecayFit,
    pub dt: DecayFit,
}

pub struct ModulusRun {
    pub rows: Vec<ModulusRow>,
    pub fits: Option<ModulusFits>,
}

pub fn default_t_ladder() -> Vec<f64> {
    (4..=14).map(|k| 2f64.powi(-k)).collect()
}

pub fn fit_profile(rows: &[ModulusRow], pick: impl Fn(&ModulusRow) -> f64, model: DecayModel) -> Result<DecayFit> {
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, pick(r))).collect();
    Ok(decay_fit(&ErrorLadder::from_pairs(&pairs), model)?)
}

pub fn run_modulus(opts: &Opts, cfg: &ModulusRunConfig) -> Result<ModulusRun> {
    cfg.polytope.validate().map_err(schema)?;
    let f = TargetFn::from_spec(&cfg.function)?;
    let mut sampling = cfg.sampling.clone().unwrap_or_default();
    if let Some(s) = opts.seed {
        sampling.seed = s;
    }
    if let Some(g) = opts.grid {
        sampling.n_x = g;
    }
    check_grid_budget(opts, sampling.n_x as u64)?;
    let ts = cfg.t_ladder.clone().unwrap_or_else(default_t_ladder);
    let rows = modulus_ladder(&f, &cfg.polytope, &ts, &sampling)?;
    let model = cfg.model.unwrap_or(DecayModel::PowerLog);
    let fits = if rows.len() >= 4 {
        Some(ModulusFits { model, ordinary: fit_profile(&rows, |r| r.ordinary, model)?, dt: fit_profile(&rows, |r| r.dt, model)? })
    } else {
        None
    };
    Ok(ModulusRun { rows, fits })
}

pub fn modulus_csv(rows: &[ModulusRow]) -> String {
    let mut s = String::from("t,omega,omega_dt\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.t, r.ordinary, r.dt));
    }
    s
}

pub fn modulus(opts: &Opts) -> Result<u8> {
    let cfg: ModulusRunConfig = load(config_path(opts)?)?;
    let run = run_modulus(opts, &cfg)?;
    let csv = modulus_csv(&run.rows);
    match &opts.out {
        Some(_) => {
            emit(opts, "modulus.csv", &csv)?;
            emit(opts, "modulus_fit.json", &pretty(&run.fits))?;
        }
        None => {
            print!("{csv}");
            if let Some(f) = &run.fits {
                println!("# exponents ({:?} model): ordinary {:.4}, dt {:.4}", f.model, f.ordinary.slope, f.dt.slope);
            }
        }
    }
    Ok(0)
}

// compile

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompileConfig {
    pub function: FunctionSpec,
    pub polytope: Domain,
    #[serde(default)]
    pub covering: Option<CoveringConfig>,
    pub params: CompileParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringConfig {
    pub pieces: Vec<kpmnet::Parallelepiped>,
    pub lambda: f64,
}

/// Axis-aligned boxes of the domain parts, if every part is one.
fn part_boxes(k: &Domain) -> Option<Vec<(Vec<f64>, Vec<f64>)>> {
    k.parts()
        .iter()
        .map(|p| {
            let (lo, hi) = p.bounding_box();
            let corners = 1usize << p.dim();
            let is_box = p.vertices.len() == corners
                && p.vertices.iter().all(|v| v.iter().enumerate().all(|(i, x)| *x == lo[i] || *x == hi[i]));
            is_box.then_some((lo, hi))
        })
        .collect()
}

pub fn run_compile(opts: &Opts, cfg: &CompileConfig) -> Result<(ReluNetwork, CompileReport)> {
    cfg.polytope.validate().map_err(schema)?;
    let f = TargetFn::from_spec(&cfg.function)?;
    let mut params = cfg.params.clone();
    if let Some(s) = opts.seed {
        params.seed = s;
    }
    if let Some(g) = opts.grid {
        params.grid = Some(g);
    }
    if let Some(b) = opts.budget {
        params.budget = Some(b);
    }
    let d = cfg.polytope.dim();
    let resolved = params.resolve(d)?;
    check_grid_budget(opts, (resolved.grid as u64).saturating_pow(d as u32))?;
    let covering = match &cfg.covering {
        Some(c) => {
            let cov = Covering::new(c.pieces.clone(), c.lambda)?;
            validate_covering(&cfg.polytope, &cov.pieces, cov.lambda, 10_000)?.0
        }
        None => {
            let boxes = part_boxes(&cfg.polytope).ok_or_else(|| schema("a covering is required unless every domain part is an axis-aligned box"))?;
            auto_cover_box_union(&boxes, params.lambda)?
        }
    };
    Ok(compile_with_ladder(&f, &cfg.polytope, &covering, &params)?)
}

/// One-line digest of a compile report.
pub fn summary(r: &CompileReport) -> String {
    let mut s = format!(
        "K' error {:.4e} (budget {:.4e}); support leak {:e}; width {}, depth {}, parameters {}",
        r.k_prime_error, r.total_budget, r.support_leak, r.width, r.depth, r.parameter_count
    );
    if let Some(fit) = &r.ladder_fit {
        s.push_str(&format!("; ladder {:?} slope {:.4}, residual {:.4}", fit.model, fit.slope, fit.residual));
    }
    s
}

/// Writes the network and report artifacts; exit code 3 on a support leak.
pub fn finish_compile(opts: &Opts, net: &ReluNetwork, report: &CompileReport, write_stdout: bool) -> Result<u8> {
    if opts.out.is_some() {
        emit(opts, "network.json", &net.to_json())?;
        emit(opts, "report.json", &pretty(report))?;
    } else if write_stdout {
        print!("{}", pretty(report));
    }
    if report.support_leak != 0.0 {
        eprintln!("support leak: max |net| = {:e} outside the domain", report.support_leak);
        return Ok(INVARIANT);
    }
    Ok(0)
}

pub fn compile(opts: &Opts) -> Result<u8> {
    let cfg: CompileConfig = load(config_path(opts)?)?;
    let (net, report) = run_compile(opts, &cfg)?;
    if opts.out.is_some() {
        println!("{}", summary(&report));
    }
    finish_compile(opts, &net, &report, true)
}

// eval

fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        return parse(&text);
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            l.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| schema(format!("{} row {}: {e}", path.display(), i + 1))))
                .collect()
        })
        .collect()
}

fn load_network(path: &Path) -> Result<ReluNetwork> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ReluNetwork::from_json(&text).map_err(|e| schema(format!("{}: {e}", path.display())))
}

pub fn eval(opts: &Opts, network: &Path, points: &Path) -> Result<u8> {
    let net = load_network(network)?;
    let pts = read_points(points)?;
    let mut csv = String::new();
    for p in &pts {
        let v = net.eval(p)?;
        csv.push_str(&v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
        csv.push('\n');
    }
    emit(opts, "values.csv", &csv)?;
    Ok(0)
}

// verify

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    function: FunctionSpec,
    polytope: Domain,
    #[serde(default)]
    covering: Option<CoveringConfig>,
    #[serde(default)]
    grid: Option<usize>,
    #[serde(default)]
    support_samples: Option<usize>,
    #[serde(default)]
    margin: Option<f64>,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    ladder: Option<Vec<LadderEntry>>,
    #[serde(default)]
    model: Option<DecayModel>,
}

#[derive(Serialize)]
struct VerifyReport {
    region: &'static str,
    points: usize,
    sup_error: SupError,
    support_leak: f64,
    support_samples: usize,
    fit: Option<DecayFit>,
}

pub fn verify(opts: &Opts, network: &Path, scenario: &Path) -> Result<u8> {
    let net = load_network(network)?;
    let sc: Scenario = load(scenario)?;
    sc.polytope.validate().map_err(schema)?;
    let d = sc.polytope.dim();
    if net.input_dim != d {
        bail!(Error::Dimension(format!("network has {} inputs, domain dimension is {d}", net.input_dim)));
    }
    let f = TargetFn::from_spec(&sc.function)?;
    let m = opts.grid.or(sc.grid).unwrap_or(match d {
        1 => 2001,
        2 => 161,
        3 => 25,
        _ => 9,
    });
    check_grid_budget(opts, (m as u64).saturating_pow(d as u32))?;
    let covering = match &sc.covering {
        Some(c) => Some(validate_covering(&sc.polytope, &c.pieces, c.lambda, 10_000)?.0),
        None => None,
    };
    let (lo, hi) = sc.polytope.bounding_box();
    let pts: Vec<Vec<f64>> = tensor_grid(&lo, &hi, m)
        .into_iter()
        .filter(|x| sc.polytope.contains(x) && covering.as_ref().is_none_or(|c| c.in_k_prime(x)))
        .collect();
    let sup = sup_error(&net, &f, &pts)?;
    let samples = sc.support_samples.unwrap_or(10_000);
    let margin = sc.margin.unwrap_or(1e-6 * sc.polytope.diameter());
    let leak = support_check(&net, &sc.polytope, margin, samples, opts.seed.unwrap_or(sc.seed));
    let ladder = sc.ladder.as_ref().map(|l| ErrorLadder::from_pairs(&l.iter().map(|e| (e.n as f64, e.error)).collect::<Vec<_>>()));
    let fit = match &ladder {
        Some(l) if l.rows.len() >= 4 => Some(decay_fit(l, sc.model.unwrap_or(DecayModel::Power))?),
        _ => None,
    };
    let report = VerifyReport {
        region: if covering.is_some() { "K_prime" } else { "K" },
        points: pts.len(),
        sup_error: sup,
        support_leak: leak,
        support_samples: samples,
        fit,
    };
    emit(opts, "verify_report.json", &pretty(&report))?;
    if let Some(l) = &ladder {
        save(opts, "ladder.csv", &l.to_csv())?;
    }
    if leak != 0.0 {
        eprintln!("support leak: max |net| = {leak:e} outside the domain");
        return Ok(INVARIANT);
    }
    Ok(0)
}
