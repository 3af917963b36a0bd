//! Fast invariant checks, run by `gibbs-bench selftest`.

use gibbs_core::estimators::Estimator;
use gibbs_core::grid::GridApproximation;
use gibbs_core::metrics::{
    cell_histogram_tv, energy_distance_sq, grid_sup_log, grid_tv, w1_1d, EmpiricalBatch, Metric,
};
use gibbs_core::rng::stream;
use gibbs_core::samplers::{exact_sampler_known_z, rejection_sampling, GridEnvelope, SamplerKind};
use gibbs_core::target::{Counting, LinearSum};
use gibbs_core::{quadrature, FunctionId, TargetFunction};

use crate::record::write_csv;
use crate::spec::{ExperimentSpec, Mode};
use crate::sweep::run_sweep;
use crate::with_pool;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracles() -> Result<String, String> {
    let mut worst = 0.0f64;
    for d in 1..=2 {
        for beta in [-5.0, 0.0, 0.1, 1.0, 15.0, 40.0, 1e4] {
            let f = LinearSum::new(beta, d);
            let exact = f.exact_log_partition().unwrap_or(f64::NAN);
            let err = (exact - quadrature::log_partition(&f)).abs() / exact.abs().max(1.0);
            worst = worst.max(err);
            ensure(err < 1e-6, || {
                format!("linear β={beta} d={d}: relative error {err:e}")
            })?;
        }
    }
    Ok(format!("worst relative error {worst:.1e}"))
}

fn budget_honesty() -> Result<String, String> {
    let mut checked = 0;
    for (k, &(beta, d, n)) in [
        (3.0, 1, 37u64),
        (-2.0, 2, 500),
        (15.0, 3, 4096),
        (0.5, 2, 999),
    ]
    .iter()
    .enumerate()
    {
        let f = Counting::new(LinearSum::new(beta, d));
        for est in Estimator::ALL {
            f.reset();
            let e = est.run(&f, n, k as u64).map_err(|e| e.to_string())?;
            ensure(
                e.evals_used == f.calls() && e.evals_used == est.evals_for(n, d),
                || {
                    format!(
                        "{est} n={n}: reported {}, counted {}",
                        e.evals_used,
                        f.calls()
                    )
                },
            )?;
            checked += 1;
        }
        for kind in [
            SamplerKind::Pc,
            SamplerKind::Mc,
            SamplerKind::Rs,
            SamplerKind::PcMc,
            SamplerKind::PcRs,
            SamplerKind::Bisect,
        ] {
            f.reset();
            let s = kind.prepare(&f, n).map_err(|e| e.to_string())?;
            let setup = f.calls();
            let out = s.draw(&mut stream(k as u64)).map_err(|e| e.to_string())?;
            let counted = f.calls() - setup + s.shared_evals();
            ensure(out.evals_used == counted && out.evals_used <= n, || {
                format!(
                    "{kind} n={n}: reported {}, counted {counted}",
                    out.evals_used
                )
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} configurations"))
}

fn small_spec(mode: Mode, algos: &[&str], metrics: Vec<Metric>) -> Result<ExperimentSpec, String> {
    let algos: Vec<String> = algos.iter().map(|s| s.to_string()).collect();
    let f: FunctionId = "linear:beta=4,d=2".parse().map_err(|e| format!("{e}"))?;
    ExperimentSpec::new(
        mode,
        &algos,
        vec![f],
        "16,64,256".parse().map_err(|e| format!("{e}"))?,
        5,
        9,
        metrics,
        500,
    )
    .map_err(|e| e.to_string())
}

fn csv_bytes(spec: &ExperimentSpec, threads: usize) -> Result<Vec<u8>, String> {
    let out = with_pool(Some(threads), || run_sweep(spec));
    ensure(out.audit_failures.is_empty(), || {
        out.audit_failures.join("; ")
    })?;
    let mut bytes = Vec::new();
    write_csv(&out.records, &mut bytes).map_err(|e| e.to_string())?;
    Ok(bytes)
}

fn determinism() -> Result<String, String> {
    let specs = [
        small_spec(Mode::LogPartition, &["mc", "pc", "pc+mc", "ti"], vec![])?,
        small_spec(
            Mode::Sample,
            &["pc", "mc", "rs", "pc+mc", "pc+rs", "bisect"],
            vec![Metric::Energy2, Metric::Tv],
        )?,
    ];
    let mut rows = 0;
    for spec in &specs {
        let a = csv_bytes(spec, 1)?;
        let b = csv_bytes(spec, 3)?;
        ensure(a == b, || {
            format!("{} output differs between 1 and 3 threads", spec.mode)
        })?;
        rows += a.iter().filter(|&&c| c == b'\n').count() - 1;
    }
    Ok(format!("{rows} rows identical across thread counts"))
}

fn constant_target_is_exact() -> Result<String, String> {
    let f: FunctionId = "linear:beta=0,d=3".parse().map_err(|e| format!("{e}"))?;
    let spec = ExperimentSpec::new(
        Mode::LogPartition,
        &["mc".into()],
        vec![f],
        "100".parse().map_err(|e| format!("{e}"))?,
        5,
        1,
        vec![],
        0,
    )
    .map_err(|e| e.to_string())?;
    let out = run_sweep(&spec);
    ensure(
        out.records.len() == 5 && out.records.iter().all(|r| r.error == Some(0.0)),
        || "mc on a constant target has nonzero error".into(),
    )?;
    Ok("5 records, all exact".into())
}

fn mixture_law() -> Result<String, String> {
    let f = GridApproximation::from_values(1, 2, vec![-1.0, 0.0]).map_err(|e| e.to_string())?;
    let g = GridApproximation::from_values(1, 2, vec![0.0, 0.0]).map_err(|e| e.to_string())?;
    let env = GridEnvelope {
        grid: &g,
        offset: 0.0,
    };
    let n = 2;
    let ratio = (f.log_partition() - g.log_partition()).exp();
    let p_r = (1.0 - ratio).powi(n as i32);
    let runs = 200_000;
    let mut rng = stream(3);
    let (mut low, mut fell) = (0u64, 0u64);
    for _ in 0..runs {
        let out = rejection_sampling(&f, &env, n, &mut rng).map_err(|e| e.to_string())?;
        low += (out.point[0] < 0.5) as u64;
        fell += out.fell_back as u64;
    }
    let masses = f.cell_masses();
    let expect_low = (1.0 - p_r) * masses[0] + p_r * 0.5;
    let sd = |p: f64| (p * (1.0 - p) / runs as f64).sqrt();
    let got_low = low as f64 / runs as f64;
    let got_fell = fell as f64 / runs as f64;
    ensure((got_low - expect_low).abs() <= 4.0 * sd(expect_low), || {
        format!("lower-cell frequency {got_low}, expected {expect_low}")
    })?;
    ensure((got_fell - p_r).abs() <= 4.0 * sd(p_r), || {
        format!("fallback frequency {got_fell}, expected {p_r}")
    })?;
    Ok(format!("p_R = {p_r:.4}, observed {got_fell:.4}"))
}

fn known_normalizer() -> Result<String, String> {
    let f = GridApproximation::from_values(1, 2, vec![(4.0f64 / 3.0).ln(), (2.0f64 / 3.0).ln()])
        .map_err(|e| e.to_string())?;
    let runs = 200_000;
    let mut rng = stream(4);
    let mut low = 0u64;
    for _ in 0..runs {
        low += (exact_sampler_known_z(&f, &mut rng)
            .map_err(|e| e.to_string())?
            .point[0]
            < 0.5) as u64;
    }
    let p = low as f64 / runs as f64;
    let sd = (2.0 / 9.0 / runs as f64).sqrt();
    ensure((p - 2.0 / 3.0).abs() <= 4.0 * sd, || {
        format!("lower-cell mass {p}")
    })?;
    Ok(format!("lower-cell mass {p:.4}"))
}

fn metric_examples() -> Result<String, String> {
    let p = GridApproximation::from_values(1, 2, vec![0.0, 0.0]).map_err(|e| e.to_string())?;
    let q =
        GridApproximation::from_values(1, 2, vec![0.0, 3f64.ln()]).map_err(|e| e.to_string())?;
    let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
    let e = |r: gibbs_core::Result<f64>| r.map_err(|e| e.to_string());
    ensure(close(e(grid_sup_log(&p, &q))?, 2f64.ln()), || {
        "sup-log example".into()
    })?;
    ensure(close(e(grid_tv(&p, &q))?, 0.25), || "tv example".into())?;
    ensure(close(e(w1_1d(&p, &q))?, 0.125), || "w1 example".into())?;
    let a = EmpiricalBatch::new(1, vec![0.0], "a").map_err(|e| e.to_string())?;
    let b = EmpiricalBatch::new(1, vec![1.0], "b").map_err(|e| e.to_string())?;
    ensure(e(energy_distance_sq(&a, &b))? == 2.0, || {
        "energy example".into()
    })?;
    ensure(e(cell_histogram_tv(&a, &p))? == 0.5, || {
        "histogram example".into()
    })?;
    Ok("documented values reproduced".into())
}

const CHECKS: [(&str, Check); 7] = [
    ("oracle consistency", oracles),
    ("budget honesty", budget_honesty),
    ("determinism across thread counts", determinism),
    ("mc exact on constant targets", constant_target_is_exact),
    ("rejection mixture law", mixture_law),
    ("known-normalizer sampler", known_normalizer),
    ("metric examples", metric_examples),
];

/// Runs every check; panics inside a check count as failures.
pub fn run_selftest() -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|&(name, check)| {
            let result =
                std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
            match result {
                Ok(detail) => CheckOutcome {
                    name,
                    passed: true,
                    detail,
                },
                Err(detail) => CheckOutcome {
                    name,
                    passed: false,
                    detail,
                },
            }
        })
        .collect()
}
