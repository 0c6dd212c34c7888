use anyhow::Result;
use clap::ValueEnum;
use kpmnet::gadgets::{cheb_net, even_square_net, product_net};
use kpmnet::geometry::ModulusRow;
use kpmnet::sampling::linspace;
use kpmnet::verify::{cheb_gadget_bound, DecayModel};
use kpmnet::Polytope;

use crate::commands::{self, emit, fit_profile, parse, pretty, CompileConfig, ModulusRunConfig};
use crate::Opts;

const ABS_1D: &str = include_str!("../configs/abs-1d.json");
const LSHAPE_2D: &str = include_str!("../configs/lshape-2d.json");
const ANALYTIC_EXP: &str = include_str!("../configs/analytic-exp.json");
const MODULUS_EX13: &str = include_str!("../configs/modulus-ex13.json");
const MODULUS_EX22: &str = include_str!("../configs/modulus-ex22.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoName {
    Squaring,
    Product,
    Chebyshev,
    #[value(name = "abs-1d")]
    Abs1d,
    #[value(name = "lshape-2d")]
    Lshape2d,
    AnalyticExp,
    #[value(name = "modulus-ex13")]
    ModulusEx13,
    #[value(name = "modulus-ex22")]
    ModulusEx22,
}

pub fn run(opts: &Opts, name: DemoName) -> Result<u8> {
    match name {
        DemoName::Squaring => squaring(opts),
        DemoName::Product => product(opts),
        DemoName::Chebyshev => chebyshev(opts),
        DemoName::Abs1d => compile_demo(opts, ABS_1D, "abs-1d"),
        DemoName::Lshape2d => compile_demo(opts, LSHAPE_2D, "lshape-2d"),
        DemoName::AnalyticExp => compile_demo(opts, ANALYTIC_EXP, "analytic-exp"),
        DemoName::ModulusEx13 => modulus_demo(opts),
        DemoName::ModulusEx22 => modulus_triangle_vs_square(opts),
    }
}

/// Sup error of `even_square_net(N)` against `x²` next to `2^{−2(N+1)}`.
fn squaring(opts: &Opts) -> Result<u8> {
    let xs = linspace(-1.0, 1.0, opts.grid.unwrap_or((1 << 14) + 1));
    let mut csv = String::from("N,measured,theory\n");
    for n in 1..=10 {
        let net = even_square_net(n);
        let sup = xs.iter().map(|&x| (net.eval_scalar(&[x]) - x * x).abs()).fold(0.0, f64::max);
        csv.push_str(&format!("{n},{sup:e},{:e}\n", 2f64.powi(-2 * (n as i32 + 1))));
    }
    emit(opts, "squaring.csv", &csv)?;
    Ok(0)
}

/// Grid sup error of the product gadget against `2^{−2N}`.
fn product(opts: &Opts) -> Result<u8> {
    let g = linspace(-1.0, 1.0, opts.grid.unwrap_or(201));
    let mut csv = String::from("N,measured,bound\n");
    for n in 1..=8 {
        let net = product_net(n);
        let sup = g.iter().flat_map(|&x| g.iter().map(move |&y| (x, y))).map(|(x, y)| (net.eval_scalar(&[x, y]) - x * y).abs()).fold(0.0, f64::max);
        csv.push_str(&format!("{n},{sup:e},{:e}\n", 2f64.powi(-2 * n as i32)));
    }
    emit(opts, "product.csv", &csv)?;
    Ok(0)
}

/// `T̄_k` against `T_k` on `[−1+δ, 1−δ]` for `N = 12`, `δ = 0.05`.
fn chebyshev(opts: &Opts) -> Result<u8> {
    let (n_prod, delta) = (12usize, 0.05);
    let xs = linspace(-1.0 + delta, 1.0 - delta, opts.grid.unwrap_or(4001));
    let mut csv = String::from("k,N,measured,bound\n");
    for k in 0..=6 {
        let net = cheb_net(k, n_prod, delta)?;
        let sup = xs.iter().map(|&x| (net.eval_scalar(&[x]) - kpmnet::chebseries::cheb_t(k, x)).abs()).fold(0.0, f64::max);
        csv.push_str(&format!("{k},{n_prod},{sup:e},{:e}\n", cheb_gadget_bound(k, n_prod as u32)));
    }
    emit(opts, "chebyshev.csv", &csv)?;
    Ok(0)
}

fn compile_demo(opts: &Opts, config: &str, name: &str) -> Result<u8> {
    let cfg: CompileConfig = parse(config)?;
    let (net, report) = commands::run_compile(opts, &cfg)?;
    if !report.ladder.is_empty() {
        let mut csv = String::from("n,error\n");
        for e in &report.ladder {
            csv.push_str(&format!("{},{:e}\n", e.n, e.error));
        }
        emit(opts, &format!("{name}_ladder.csv"), &csv)?;
    }
    println!("{name}: {}", commands::summary(&report));
    commands::finish_compile(opts, &net, &report, false)
}

fn modulus_demo(opts: &Opts) -> Result<u8> {
    let cfg: ModulusRunConfig = parse(MODULUS_EX13)?;
    let run = commands::run_modulus(opts, &cfg)?;
    emit(opts, "modulus-ex13.csv", &commands::modulus_csv(&run.rows))?;
    if let Some(f) = &run.fits {
        println!("# t^b|ln t| exponents: ordinary {:.4}, dt {:.4}", f.ordinary.slope, f.dt.slope);
        commands::save(opts, "modulus-ex13_fit.json", &pretty(f))?;
    }
    Ok(0)
}

/// Weighted modulus on the triangle against the full square.
fn modulus_triangle_vs_square(opts: &Opts) -> Result<u8> {
    let tri: ModulusRunConfig = parse(MODULUS_EX22)?;
    let square = ModulusRunConfig {
        function: tri.function.clone(),
        polytope: Polytope::from_box(&[-1.0, -1.0], &[1.0, 1.0])?,
        t_ladder: tri.t_ladder.clone(),
        model: tri.model,
        sampling: tri.sampling.clone(),
    };
    let a = commands::run_modulus(opts, &tri)?;
    let b = commands::run_modulus(opts, &square)?;
    let mut csv = String::from("t,omega_dt_triangle,omega_dt_square\n");
    for (r, s) in a.rows.iter().zip(&b.rows) {
        csv.push_str(&format!("{},{},{}\n", r.t, r.dt, s.dt));
    }
    emit(opts, "modulus-ex22.csv", &csv)?;
    let dt = |r: &ModulusRow| r.dt;
    for (label, rows) in [("triangle", &a.rows), ("square", &b.rows)] {
        let p = fit_profile(rows, dt, DecayModel::Power)?;
        let pl = fit_profile(rows, dt, DecayModel::PowerLog)?;
        println!("# {label}: dt exponent {:.4} (t^b), {:.4} (t^b|ln t|)", p.slope, pl.slope);
    }
    Ok(0)
}
