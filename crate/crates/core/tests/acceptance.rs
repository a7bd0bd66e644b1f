//! Acceptance gate: one PASS/FAIL line per criterion, exit status nonzero if
//! any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use elastic_mkv::mkv_solver::{blowup_guaranteed, gamma_apply, gamma_zero_analytic, picard_solve, PicardConfig};
use elastic_mkv::particle::{
    simulate_absorbing_with, simulate_elastic, simulate_elastic_with, AbsorbingStart, PathStorage, SimOptions,
    SimOutput,
};
use elastic_mkv::paths::{jump_detect, skorokhod_reflect, sup_distance, GridPath, LossCurve, Sampled};
use elastic_mkv::stefan_pde::{initial_density, pde_solve_with, PdeGrid, PdeOptions};
use elastic_mkv::{InitialLaw, ModelParams, RngStream, TimeGrid};
use rand::{Rng, SeedableRng};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn params(alpha: f64, kappa: f64, law: InitialLaw, t_end: f64, n_steps: usize, n: usize) -> ModelParams {
    ModelParams { alpha, kappa, law, grid: TimeGrid::new(t_end, n_steps).unwrap(), n_particles: n }
}

fn nodewise_le(a: &LossCurve, b: &LossCurve) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| x <= y)
}

const SMOOTH_LAW: InitialLaw = InitialLaw::Uniform { a: 0.2, b: 1.2 };

/// N = 10^6 particle run in the smooth regime, shared by criteria 7 and 8.
fn smooth_particle() -> &'static SimOutput {
    static RUN: OnceLock<SimOutput> = OnceLock::new();
    RUN.get_or_init(|| {
        let p = params(0.3, 1.0, SMOOTH_LAW, 1.0, 200, 1_000_000);
        simulate_elastic(&p, &RngStream::new(707, 0)).unwrap()
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let law = InitialLaw::Uniform { a: 0.0, b: 1.0 };
    let mut compared = 0;
    for seed in 0..50u64 {
        for kappa in [0.5, 2.0] {
            for alpha in [0.3, 1.5] {
                let p = params(alpha, kappa, law, 1.0, 200, 1000);
                let base = RngStream::new(seed, 0);
                let e = simulate_elastic(&p, &base).unwrap();
                let a =
                    simulate_absorbing_with(&p, &base, &AbsorbingStart::ElasticShift, &SimOptions::default()).unwrap();
                if e.kill_nodes != a.kill_nodes || e.loss_curve != a.loss_curve {
                    return Err(format!("seed {seed}, kappa {kappa}, alpha {alpha}: outputs differ"));
                }
                compared += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        elapsed < Duration::from_secs(60),
        format!("{compared} elastic/absorbing pairs identical, {:.1}s (< 60s)", elapsed.as_secs_f64()),
    )
}

fn criterion_2() -> Outcome {
    let law = InitialLaw::PointMass { x0: 0.0 };
    let exact = gamma_zero_analytic(1.0, &law, 1.0).unwrap();
    let start = Instant::now();
    let p = params(1e-12, 1.0, law, 1.0, 1000, 1_000_000);
    let out = simulate_elastic(&p, &RngStream::new(2, 0)).unwrap();
    let elapsed = start.elapsed();
    let particle = out.loss_curve.last();

    let q = params(1e-12, 1.0, law, 1.0, 100, 1);
    let g = gamma_apply(&LossCurve::zero(q.grid), &q, &PicardConfig::with_samples(1_000_000), &RngStream::new(3, 0))
        .unwrap()
        .last();
    let detail = format!(
        "oracle {exact:.6}; particle {particle:.5} (|d| {:.5} <= 0.005, {:.1}s < 120s); gamma {g:.5} (|d| {:.5} <= 0.0015)",
        (particle - exact).abs(),
        elapsed.as_secs_f64(),
        (g - exact).abs()
    );
    check(
        (particle - exact).abs() <= 0.005 && elapsed < Duration::from_secs(120) && (g - exact).abs() <= 0.0015,
        detail,
    )
}

fn criterion_3() -> Outcome {
    let kappas = [0.01, 0.1, 1.0, 10.0, 100.0];
    let base = RngStream::new(33, 0);
    let curves: Vec<LossCurve> = kappas
        .iter()
        .map(|&kappa| simulate_elastic(&params(0.5, kappa, SMOOTH_LAW, 1.0, 500, 10_000), &base).unwrap().loss_curve)
        .collect();
    let inf = simulate_absorbing_with(
        &params(0.5, 1.0, SMOOTH_LAW, 1.0, 500, 10_000),
        &base,
        &AbsorbingStart::NoShift,
        &SimOptions::default(),
    )
    .unwrap()
    .loss_curve;
    let ordered = curves.windows(2).all(|w| nodewise_le(&w[0], &w[1]));
    let bounded = curves.iter().all(|c| nodewise_le(c, &inf));
    let finals: Vec<String> = curves.iter().map(|c| format!("{:.4}", c.last())).collect();
    check(
        ordered && bounded,
        format!(
            "nondecreasing in kappa: {ordered}; below absorbing: {bounded}; finals {finals:?} <= {:.4}",
            inf.last()
        ),
    )
}

fn criterion_4() -> Outcome {
    let base = RngStream::new(44, 0);
    let p = params(0.5, 1.0, SMOOTH_LAW, 1.0, 1000, 100_000);
    let inf = simulate_absorbing_with(&p, &base, &AbsorbingStart::NoShift, &SimOptions::default()).unwrap().loss_curve;
    let d: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|&kappa| {
            let c = simulate_elastic(&ModelParams { kappa, ..p }, &base).unwrap().loss_curve;
            sup_distance(&c, &inf).unwrap()
        })
        .collect();
    check(
        d[2] <= d[1] && d[1] <= d[0] && d[2] <= 0.02,
        format!(
            "sup distance to absorbing: kappa 1 {:.4} >= kappa 10 {:.4} >= kappa 100 {:.4} (<= 0.02)",
            d[0], d[1], d[2]
        ),
    )
}

fn criterion_5() -> Outcome {
    let n = Normal::standard();
    let oracle = 2.0 * n.cdf(1.0) - 1.0 + 2.0 * n.pdf(1.0);
    let p = params(1.0, 0.01, InitialLaw::PointMass { x0: 1.0 }, 1.0, 2000, 100_000);
    let opts = SimOptions { storage: PathStorage::Nodes(vec![2000]), ..Default::default() };
    let out = simulate_elastic_with(&p, &RngStream::new(55, 0), &opts).unwrap();
    let sup_loss = out.loss_curve.values().iter().cloned().fold(0.0, f64::max);
    let xs = &out.snapshots[0].positions;
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    check(
        sup_loss <= 0.03 && (mean - oracle).abs() <= 0.01,
        format!(
            "sup loss {sup_loss:.4} (<= 0.03); mean X_1 {mean:.4} vs {oracle:.4} (|d| {:.4} <= 0.01)",
            (mean - oracle).abs()
        ),
    )
}

fn criterion_6() -> Outcome {
    assert!(blowup_guaranteed(5.0, &SMOOTH_LAW, 2.0));
    let control = blowup_guaranteed(0.3, &SMOOTH_LAW, 2.0);
    let p = params(5.0, 2.0, SMOOTH_LAW, 2.0, 1000, 100_000);
    let mut jumps = Vec::new();
    for seed in 0..10u64 {
        let out = simulate_elastic(&p, &RngStream::new(600 + seed, 0)).unwrap();
        let max = jump_detect(&out.loss_curve, 0.05).iter().map(|j| j.size).fold(0.0, f64::max);
        jumps.push(max);
    }
    let min = jumps.iter().cloned().fold(f64::INFINITY, f64::min);
    check(
        min >= 0.05 && !control,
        format!("blowup_guaranteed(5) true, (0.3) {control}; smallest max jump over 10 seeds {min:.4} (>= 0.05)"),
    )
}

fn criterion_7() -> Outcome {
    let p = params(0.3, 1.0, SMOOTH_LAW, 1.0, 200, 1_000_000);
    // independent of the particle streams
    let report = picard_solve(&p, &PicardConfig::with_samples(1_000_000), &RngStream::new(707, 1 << 40)).unwrap();
    let increasing = report.iterates.windows(2).all(|w| nodewise_le(&w[0], &w[1]));
    let d = sup_distance(&report.final_loss, &smooth_particle().loss_curve).unwrap();
    check(
        d <= 0.01 && increasing && report.converged,
        format!(
            "picard vs particle sup {d:.5} (<= 0.01); {} iterates nondecreasing: {increasing}; converged {}",
            report.iterates.len(),
            report.converged
        ),
    )
}

fn criterion_8() -> Outcome {
    let p = params(0.3, 1.0, SMOOTH_LAW, 1.0, 200, 1_000_000);
    let grid = PdeGrid { x_max: 8.0, nx: 800, dt: 2.5e-4, t_end: 1.0 };
    let opts = PdeOptions { snapshot_nodes: vec![0, 20, 50, 100, 150, 200], truncation_tol: 1e-6 };
    let solve = |g: &PdeGrid| {
        let v0 = initial_density(&SMOOTH_LAW, g, 0.02).unwrap();
        pde_solve_with(&p, g, &v0, &opts).unwrap()
    };
    let coarse = solve(&grid);
    let fine = solve(&grid.refined());
    let d = sup_distance(&coarse.loss_curve, &smooth_particle().loss_curve).unwrap();
    let ratio = coarse.max_mass_defect / fine.max_mass_defect;
    let residual = coarse.stefan.iter().map(|c| c.undercooling_residual).fold(0.0, f64::max);
    let tol = 5.0 * grid.dx();
    check(
        d <= 0.02 && coarse.max_mass_defect <= 1e-3 && ratio >= 1.8 && residual <= tol && !coarse.stefan.is_empty(),
        format!(
            "pde vs particle sup {d:.5} (<= 0.02); mass defect {:.2e} (<= 1e-3), refinement factor {ratio:.2} (>= 1.8); \
             undercooling residual {residual:.2e} (<= {tol}) at {} snapshots",
            coarse.max_mass_defect,
            coarse.stefan.len()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(9);
    // Skorokhod complementarity and minimality on random paths
    for _ in 0..500 {
        let n_steps = rng.random_range(1..40);
        let grid = TimeGrid::new(1.0, n_steps).unwrap();
        let y: Vec<f64> = (0..grid.n_nodes()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (x, l) = skorokhod_reflect(&GridPath::new(grid, y.clone()).unwrap());
        let (x, l) = (x.values(), l.values());
        let mut floor = 0.0f64;
        let mut complementarity = 0.0;
        for k in 0..y.len() {
            // every admissible regulator dominates the running max of (-y)+
            floor = floor.max(-y[k]);
            if x[k] < 0.0 || (x[k] - y[k] - l[k]).abs() > 1e-12 || (l[k] - floor).abs() > 1e-12 {
                return Err(format!("reflection invariants violated at node {k}"));
            }
            let dl = if k == 0 { l[0] } else { l[k] - l[k - 1] };
            complementarity += x[k] * dl;
        }
        if complementarity.abs() > 1e-12 {
            return Err(format!("complementarity sum {complementarity}"));
        }
    }

    // least-fixed-point audit of every cascade at N <= 10^3
    let mut audited = 0;
    for seed in 0..10u64 {
        let p = params(3.0, 2.0, InitialLaw::Uniform { a: 0.0, b: 0.8 }, 1.0, 100, 1000);
        let opts = SimOptions { audit_cascades: true, ..Default::default() };
        let out = simulate_elastic_with(&p, &RngStream::new(seed, 0), &opts).unwrap();
        if out.summary.audit_failures > 0 {
            return Err(format!("seed {seed}: {} non-minimal cascades", out.summary.audit_failures));
        }
        audited += out.summary.audited;
    }

    // exchangeability
    let p = params(1.5, 1.0, SMOOTH_LAW, 1.0, 200, 1000);
    let base = RngStream::new(99, 0);
    let perm: Vec<u64> = (0..1000u64).map(|i| (i * 617 + 5) % 1000).collect();
    let a = simulate_elastic(&p, &base).unwrap();
    let b =
        simulate_elastic_with(&p, &base, &SimOptions { stream_ids: Some(perm.clone()), ..Default::default() }).unwrap();
    let permuted = perm.iter().enumerate().all(|(j, &i)| b.kill_nodes[j] == a.kill_nodes[i as usize]);
    if a.loss_curve != b.loss_curve || !permuted {
        return Err("stream permutation changed the run".into());
    }

    // 1 vs 8 threads
    let p = params(2.0, 1.0, SMOOTH_LAW, 1.0, 200, 50_000);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_elastic(&p, &base).unwrap())
    };
    let (one, eight) = (run(1), run(8));
    if one.kill_nodes != eight.kill_nodes || one.loss_curve != eight.loss_curve {
        return Err("1 and 8 threads disagree".into());
    }
    Ok(format!(
        "reflection invariants on 500 paths; {audited} cascades minimal; exchangeable; 1 vs 8 threads bit-identical"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("elastic = absorbing", criterion_1),
        ("no-feedback oracle", criterion_2),
        ("kappa monotonicity", criterion_3),
        ("kappa -> inf limit", criterion_4),
        ("kappa -> 0 limit", criterion_5),
        ("blow-up", criterion_6),
        ("Picard = particle", criterion_7),
        ("PDE cross-check", criterion_8),
        ("property suites", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|s| id.contains(s.as_str()) || name.contains(s.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {id} ({name}): {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {id} ({name}): {d} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
