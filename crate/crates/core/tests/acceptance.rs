//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Every tolerance and runtime limit is pinned below. Networks built by
//! criteria 2–8 are collected and round-tripped through JSON by criterion 10.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use kpmnet::chebseries::{cheb_coeff_1d, cheb_coeff_tensor, clenshaw, default_quad_points, DEFAULT_COEFF_BUDGET};
use kpmnet::compiler::{compile, fit_ladder, glue_overhead_bound, LadderEntry, Path};
use kpmnet::functions::lookup;
use kpmnet::gadgets::{cheb_net, even_square_net, product_net};
use kpmnet::geometry::{auto_cover_box_union, modulus_ladder, Halfspace, ModulusConfig};
use kpmnet::kernel::kernel_checks;
use kpmnet::netir::{compose, stack};
use kpmnet::sampling::{linspace, RdSequence};
use kpmnet::verify::{decay_fit, periodic_modulus, DecayModel, ErrorLadder};
use kpmnet::{CompileParams, Covering, Domain, JacksonKernel, Parallelepiped, Polytope, ReluNetwork, TargetFn};
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Runs one criterion under a wall-clock limit and prints its line.
fn criterion(id: u32, name: &str, limit_s: f64, body: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let o = body();
    let secs = t0.elapsed().as_secs_f64();
    let pass = o.pass && secs < limit_s;
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] criterion {id} ({name}): {}; {secs:.2} s (limit {limit_s} s)", o.detail);
    pass
}

/// `T_k` by the three-term recurrence.
fn cheb_oracle(k: usize, x: f64) -> f64 {
    let (mut a, mut b) = (1.0, x);
    if k == 0 {
        return a;
    }
    for _ in 1..k {
        (a, b) = (b, 2.0 * x * b - a);
    }
    b
}

fn grid_sup(points: &[f64], err: impl Fn(f64) -> f64) -> f64 {
    points.iter().map(|&x| err(x)).fold(0.0, f64::max)
}

fn kernel_suite() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for n in [0, 1, 4, 16, 64, 256] {
        let c = match kernel_checks(&JacksonKernel::new(n), 64 * (n + 2)) {
            Ok(c) => c,
            Err(e) => return outcome(false, format!("n={n}: {e}")),
        };
        if !c.passes() {
            return outcome(false, format!("n={n}: {c:?}"));
        }
        worst.0 = worst.0.max((c.normality - 1.0).abs());
        worst.1 = worst.1.max(c.scaled_first_moment);
    }
    outcome(true, format!("n in {{0,1,4,16,64,256}} all pass; max |norm-1| = {:.1e}, max n*moment = {:.4}", worst.0, worst.1))
}

fn squaring(nets: &mut Vec<ReluNetwork>) -> Outcome {
    // Spacing 2^-13 contains every dyadic midpoint where the error peaks for N ≤ 10.
    let xs = linspace(-1.0, 1.0, (1 << 14) + 1);
    let mut worst = 0.0f64;
    for n in 1..=10 {
        let net = even_square_net(n);
        let sup = grid_sup(&xs, |x| (net.eval_scalar(&[x]) - x * x).abs());
        worst = worst.max((sup - 2f64.powi(-2 * (n as i32 + 1))).abs());
        nets.push(net);
    }
    outcome(worst <= 1e-12, format!("N=1..10, max |sup - 2^(-2(N+1))| = {worst:.1e} (tol 1e-12)"))
}

fn product(nets: &mut Vec<ReluNetwork>) -> Outcome {
    let g = linspace(-1.0, 1.0, 500);
    let rd = RdSequence::new(1, 7);
    let samples: Vec<f64> = (0..1000).map(|k| 2.0 * rd.point(k)[0] - 1.0).collect();
    let mut ratio = 0.0f64;
    let mut zeros = true;
    for n in 1..=8 {
        let net = product_net(n);
        let sup = g.iter().flat_map(|&x| g.iter().map(move |&y| (x, y))).map(|(x, y)| (net.eval_scalar(&[x, y]) - x * y).abs()).fold(0.0, f64::max);
        ratio = ratio.max(sup / 2f64.powi(-2 * n as i32));
        zeros &= samples.iter().all(|&s| net.eval_scalar(&[s, 0.0]) == 0.0 && net.eval_scalar(&[0.0, s]) == 0.0);
        nets.push(net);
    }
    outcome(ratio <= 1.0 && zeros, format!("N=1..8, max sup/2^(-2N) = {ratio:.3} (need <= 1); exact zeros on 1e3 samples: {zeros}"))
}

fn chebyshev(nets: &mut Vec<ReluNetwork>) -> Outcome {
    let (big_n, delta) = (12u32, 0.05);
    let inner = linspace(-0.95, 0.95, 20_001);
    let rd = RdSequence::new(1, 11);
    let outside: Vec<f64> = (0..1000)
        .map(|k| {
            let u = rd.point(k)[0];
            let mag = 1.0 + 1e-6 + 2.0 * (2.0 * u - 1.0).abs();
            if u < 0.5 {
                -mag
            } else {
                mag
            }
        })
        .collect();
    let mut ratio = 0.0f64;
    let mut zeros = true;
    for k in 0..=4 {
        let net = match cheb_net(k, big_n as usize, delta) {
            Ok(n) => n,
            Err(e) => return outcome(false, format!("k={k}: {e}")),
        };
        let sup = grid_sup(&inner, |x| (net.eval_scalar(&[x]) - cheb_oracle(k, x)).abs());
        let bound = (k * k) as f64 * 3f64.powi(k as i32) * 2f64.powi(-25);
        ratio = ratio.max(if bound > 0.0 { sup / bound } else if sup == 0.0 { 0.0 } else { f64::INFINITY });
        zeros &= outside.iter().all(|&x| net.eval_scalar(&[x]) == 0.0);
        nets.push(net);
    }
    outcome(ratio <= 1.0 && zeros, format!("k=0..4, N=12, delta=0.05: max sup/(k^2 3^k 2^-25) = {ratio:.3}; exact zeros for |x| >= 1+1e-6: {zeros}"))
}

fn series() -> Outcome {
    // Delta tensor for the constant.
    let one = lookup("constant", &[]).unwrap();
    let mut delta_err = 0.0f64;
    for d in [1, 2] {
        let t = cheb_coeff_tensor(&one, 8, d, default_quad_points(8), DEFAULT_COEFF_BUDGET).unwrap();
        for (i, c) in t.coeffs.iter().enumerate() {
            delta_err = delta_err.max((c - if i == 0 { 1.0 } else { 0.0 }).abs());
        }
    }
    let mut c1_err = 0.0f64;
    for n in [2, 8, 32] {
        let c = cheb_coeff_1d(|x| x, n, default_quad_points(n)).unwrap();
        c1_err = c1_err.max((c[1] - (PI / (n as f64 + 2.0)).cos()).abs());
    }
    let tests: [(&str, fn(f64) -> f64); 3] = [("|x|", f64::abs), ("x^2", |x| x * x), ("cos 3x", |x| (3.0 * x).cos())];
    let xs = linspace(-1.0, 1.0, 10_001);
    let mut jackson = 0.0f64;
    let mut contraction = true;
    for (_, f) in tests {
        let fmax = grid_sup(&xs, |x| f(x).abs());
        for n in [8, 16, 32, 64] {
            let c = cheb_coeff_1d(f, n, default_quad_points(n)).unwrap();
            let err = grid_sup(&xs, |x| (f(x) - clenshaw(&c, x)).abs());
            let w = periodic_modulus(|t| f(t.cos()), 1.0 / n as f64, 10_000);
            jackson = jackson.max(err / ((PI * PI / 2.0 + 1.0) * w));
            contraction &= grid_sup(&xs, |x| clenshaw(&c, x).abs()) <= fmax + 1e-10;
        }
    }
    let pass = delta_err <= 1e-12 && c1_err <= 1e-10 && jackson <= 1.0 && contraction;
    outcome(
        pass,
        format!(
            "delta tensor err {delta_err:.1e} (tol 1e-12); max |c1 - cos(pi/(n+2))| {c1_err:.1e} (tol 1e-10); max err/((pi^2/2+1) w) = {jackson:.3} (need <= 1); contraction: {contraction}"
        ),
    )
}

fn segment() -> (Domain, Covering) {
    let k = Domain::Convex(Polytope::from_box(&[-1.0], &[1.0]).unwrap());
    let cov = Covering::new(vec![Parallelepiped::from_box(&[-1.0], &[1.0]).unwrap()], 0.9).unwrap();
    (k, cov)
}

fn ladder(f: &TargetFn, k: &Domain, cov: &Covering, ns: &[usize], path: Path, nets: &mut Vec<ReluNetwork>) -> Result<(Vec<LadderEntry>, f64), String> {
    let mut rows = vec![];
    let mut leak = 0.0f64;
    for &n in ns {
        let mut p = CompileParams::new(n);
        p.path = path;
        let (net, r) = compile(f, k, cov, &p).map_err(|e| format!("n={n}: {e}"))?;
        rows.push(LadderEntry { n, error: r.k_prime_error });
        leak = leak.max(r.support_leak);
        nets.push(net);
    }
    Ok((rows, leak))
}

fn fmt_ladder(rows: &[LadderEntry]) -> String {
    rows.iter().map(|r| format!("{}:{:.3e}", r.n, r.error)).collect::<Vec<_>>().join(" ")
}

fn abs_1d(nets: &mut Vec<ReluNetwork>) -> Outcome {
    let (k, cov) = segment();
    let f = lookup("abs_sum", &[]).unwrap();
    let (rows, leak) = match ladder(&f, &k, &cov, &[4, 8, 16, 32], Path::Continuous, nets) {
        Ok(v) => v,
        Err(e) => return outcome(false, e),
    };
    let fit = fit_ladder(&rows, Path::Continuous).unwrap();
    let pass = (fit.slope + 1.0).abs() <= 0.25;
    outcome(pass, format!("ladder [{}]; log-log slope {:.3} (need -1 +/- 0.25); support leak {leak:e}", fmt_ladder(&rows), fit.slope))
}

fn lshape(nets: &mut Vec<ReluNetwork>) -> Outcome {
    let boxes = vec![(vec![0.0, 0.0], vec![2.0, 1.0]), (vec![0.0, 0.0], vec![1.0, 2.0])];
    let k = Domain::box_union(&boxes).unwrap();
    let cov = auto_cover_box_union(&boxes, 0.9).unwrap();
    let f = lookup("abs_sum", &[1.0, 0.0]).unwrap();
    let (net, r) = match compile(&f, &k, &cov, &CompileParams::new(8)) {
        Ok(v) => v,
        Err(e) => return outcome(false, e.to_string()),
    };
    nets.push(net);
    let pieces = r.per_piece.len();
    let budget = r.per_piece.iter().map(|p| p.budget).fold(0.0, f64::max) + glue_overhead_bound(2, r.m, r.params.n_glue);
    let pass = pieces == 2 && r.support_leak == 0.0 && r.k_prime_error <= budget;
    outcome(
        pass,
        format!(
            "n=8, {pieces} pieces, N_glue={}: support leak {:e} on 1e4 exterior points; K' error {:.4} <= budget {:.4}; trifling-region error {:.3} (reported only)",
            r.params.n_glue, r.support_leak, r.k_prime_error, budget, r.trifling_error
        ),
    )
}

fn analytic(nets: &mut Vec<ReluNetwork>) -> Outcome {
    let (k, cov) = segment();
    let f = lookup("exp_sum", &[]).unwrap();
    let (rows, _) = match ladder(&f, &k, &cov, &[4, 6, 8, 10, 12], Path::Analytic, nets) {
        Ok(v) => v,
        Err(e) => return outcome(false, e),
    };
    let fit = fit_ladder(&rows, Path::Analytic).unwrap();
    let pass = fit.slope <= -0.8 && fit.residual < 0.2;
    outcome(
        pass,
        format!("ladder [{}]; semilog slope {:.3} (need <= -0.8); RMS ln residual {:.3} (need < 0.2)", fmt_ladder(&rows), fit.slope, fit.residual),
    )
}

fn moduli_ladder() -> Vec<f64> {
    (4..=14).map(|k| 2f64.powi(-k)).collect()
}

fn exponent(ts: &[f64], w: &[f64], model: DecayModel) -> f64 {
    let pairs: Vec<(f64, f64)> = ts.iter().copied().zip(w.iter().copied()).collect();
    decay_fit(&ErrorLadder::from_pairs(&pairs), model).unwrap().slope
}

fn modulus_ex13() -> Outcome {
    let ts = moduli_ladder();
    let seg = Polytope::from_box(&[0.0], &[1.0]).unwrap();
    let f = lookup("x13lnx", &[]).unwrap();
    let cfg = ModulusConfig { n_x: 500, ..Default::default() };
    let rows = modulus_ladder(&f, &seg, &ts, &cfg).unwrap();
    let ord = exponent(&ts, &rows.iter().map(|r| r.ordinary).collect::<Vec<_>>(), DecayModel::PowerLog);
    let dt = exponent(&ts, &rows.iter().map(|r| r.dt).collect::<Vec<_>>(), DecayModel::PowerLog);
    let pass = (ord - 1.0 / 3.0).abs() <= 0.1 && (dt - 2.0 / 3.0).abs() <= 0.1;
    outcome(pass, format!("t^b|ln t| fits on t=2^-4..2^-14: ordinary {ord:.3} (need 1/3 +/- 0.1), DT {dt:.3} (need 2/3 +/- 0.1)"))
}

fn modulus_ex22() -> Outcome {
    let ts = moduli_ladder();
    let tri = Polytope::new(
        vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, -1.0]],
        vec![
            Halfspace { normal: vec![1.0, -1.0], offset: 0.0 },
            Halfspace { normal: vec![1.0, 1.0], offset: 0.0 },
            Halfspace { normal: vec![-1.0, 0.0], offset: -1.0 },
        ],
        None,
    )
    .unwrap();
    let f = lookup("rot_sqrt_log", &[]).unwrap();
    let cfg = ModulusConfig { n_x: 500, ..Default::default() };
    let rows = modulus_ladder(&f, &tri, &ts, &cfg).unwrap();
    let beta = exponent(&ts, &rows.iter().map(|r| r.dt).collect::<Vec<_>>(), DecayModel::Power);
    outcome((beta - 1.0).abs() <= 0.1, format!("DT exponent on the triangle |y| <= x <= 1, t^b fit: {beta:.3} (need 1 +/- 0.1)"))
}

fn integrity(nets: &[ReluNetwork]) -> Outcome {
    let bad = nets
        .iter()
        .filter(|n| {
            let json = n.to_json();
            !matches!(ReluNetwork::from_json(&json), Ok(back) if back == **n && back.to_json() == json)
        })
        .count();
    let config = Config { cases: 1000, failure_persistence: None, ..Config::default() };
    let rng = || TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    let composed = TestRunner::new_with_rng(config.clone(), rng()).run(&common::arb_compose_case(), |(outer, inner, x)| {
        let direct = outer.eval(&inner.eval(&x).unwrap()).unwrap();
        let joined = compose(&outer, &inner).unwrap().eval(&x).unwrap();
        proptest::prop_assert!(common::same(&direct, &joined), "{direct:?} vs {joined:?}");
        Ok(())
    });
    let stacked = TestRunner::new_with_rng(config, rng()).run(&common::arb_stack_case(), |(parts, x)| {
        let direct: Vec<f64> = parts.iter().flat_map(|n| n.eval(&x).unwrap()).collect();
        let joined = stack(&parts).unwrap().eval(&x).unwrap();
        proptest::prop_assert!(common::same(&direct, &joined), "{direct:?} vs {joined:?}");
        Ok(())
    });
    let pass = bad == 0 && composed.is_ok() && stacked.is_ok();
    let mut detail = format!("{} networks round-trip bit-exact: {}; compose on 1e3 cases: {}; stack on 1e3 cases: {}", nets.len(), bad == 0, composed.is_ok(), stacked.is_ok());
    if let Err(e) = composed {
        detail.push_str(&format!("; {e}"));
    }
    if let Err(e) = stacked {
        detail.push_str(&format!("; {e}"));
    }
    outcome(pass, detail)
}

fn main() {
    let mut nets = vec![];
    let results = [
        criterion(1, "kernel suite", 5.0, kernel_suite),
        criterion(2, "squaring exactness", 5.0, || squaring(&mut nets)),
        criterion(3, "product bound", 10.0, || product(&mut nets)),
        criterion(4, "Chebyshev gadget", 10.0, || chebyshev(&mut nets)),
        criterion(5, "series coefficients", 30.0, series),
        criterion(6, "1D continuous end to end", 120.0, || abs_1d(&mut nets)),
        criterion(7, "2D gluing", 180.0, || lshape(&mut nets)),
        criterion(8, "analytic path", 120.0, || analytic(&mut nets)),
        criterion(9, "moduli exponents, x^(1/3) ln x", 60.0, modulus_ex13),
        criterion(9, "moduli exponents, sqrt|x^2-y^2| ln(1/r^2)", 60.0, modulus_ex22),
        criterion(10, "IR integrity", 10.0, || integrity(&nets)),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
