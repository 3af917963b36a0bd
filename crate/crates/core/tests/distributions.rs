//! Statistical checks of the samplers and estimators at unit-test scale.
//! Every test uses fixed seeds, so outcomes are reproducible.

mod common;

use common::{assert_within_4_sigma, chi_square_p_value, ks_statistic, median};
use gibbs_core::estimators::{pc_log_partition, thermodynamic_integration, ExactScaledSampler};
use gibbs_core::grid::GridApproximation;
use gibbs_core::metrics::{cell_histogram_tv, energy_distance_sq, grid_sup_log, EmpiricalBatch};
use gibbs_core::numeric::loglog_slope;
use gibbs_core::rng::{stream, uniform, Stream};
use gibbs_core::samplers::{
    bisection_cell_law, bisection_sampling, exact_sampler_known_z, mc_sampling, rejection_sampling,
    uniform_rejection_sampling, ExactOracle, GridEnvelope, PcMcSampler, PcRsSampler,
    UniformEnvelope,
};
use gibbs_core::target::{exact_linear_sampler, LinearSum};
use gibbs_core::{EvalBudget, TargetFunction};

fn linear_cdf(beta: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        if beta == 0.0 {
            x
        } else {
            (beta * x).exp_m1() / beta.exp_m1()
        }
    }
}

#[test]
fn exact_linear_sampler_matches_the_cdf() {
    for beta in [-5.0, 0.0, 3.0] {
        let mut rng = stream(11);
        let mut xs: Vec<f64> = (0..1_000_000)
            .map(|_| exact_linear_sampler(beta, &[uniform(&mut rng)])[0])
            .collect();
        let ks = ks_statistic(&mut xs, linear_cdf(beta));
        assert!(ks < 0.002, "beta={beta}: KS {ks}");
    }
}

#[test]
fn mc_sampling_of_a_constant_is_uniform() {
    let f = LinearSum::new(0.0, 1);
    let mut rng = stream(3);
    let mut xs: Vec<f64> = (0..100_000)
        .map(|_| mc_sampling(&f, 7, &mut rng).unwrap().point[0])
        .collect();
    assert!(ks_statistic(&mut xs, |x| x) < 0.006);
}

#[test]
fn rejection_fallback_frequency_follows_the_geometric_law() {
    let f = LinearSum::new(0.0, 1);
    let env = UniformEnvelope {
        dim: 1,
        level: std::f64::consts::LN_2,
    };
    let mut rng = stream(5);
    let runs = 1_000_000;
    let fell = (0..runs)
        .filter(|_| rejection_sampling(&f, &env, 3, &mut rng).unwrap().fell_back)
        .count();
    let freq = fell as f64 / runs as f64;
    assert!((freq - 0.125).abs() < 0.0013, "{freq}");
}

#[test]
fn uniform_rejection_acceptance_rate() {
    let f = LinearSum::new(1.0, 1);
    let mut rng = stream(6);
    let runs = 1_000_000;
    let mut total = 0u64;
    let mut fell = 0;
    for _ in 0..runs {
        let out = uniform_rejection_sampling(&f, 50, &mut rng).unwrap();
        fell += out.fell_back as u64;
        total += out.accepted_at.unwrap_or(0);
    }
    assert_eq!(fell, 0);
    let mean = total as f64 / runs as f64;
    assert!(
        (mean - 1.0f64.exp() / 1.0f64.exp_m1()).abs() < 0.005,
        "{mean}"
    );
}

#[test]
fn rejection_mixture_law_on_grid_constant_pairs() {
    // f ≤ g cell by cell; few rounds so the fallback branch matters.
    let f = GridApproximation::from_values(1, 4, vec![-2.0, 0.0, -1.0, -0.5]).unwrap();
    let g = GridApproximation::from_values(1, 4, vec![0.0, 0.0, 0.5, -0.5]).unwrap();
    let n = 2;
    let zf = f.log_partition().exp();
    let zg = g.log_partition().exp();
    let p_r = (1.0 - zf / zg).powi(n as i32);
    let (mf, mg) = (f.cell_masses(), g.cell_masses());
    let mixture: Vec<f64> = mf
        .iter()
        .zip(&mg)
        .map(|(a, b)| (1.0 - p_r) * a + p_r * b)
        .collect();
    let env = GridEnvelope {
        grid: &g,
        offset: 0.0,
    };
    let mut rng = stream(21);
    let runs = 400_000;
    let mut counts = [0u64; 4];
    let mut fell = 0u64;
    for _ in 0..runs {
        let out = rejection_sampling(&f, &env, n, &mut rng).unwrap();
        counts[f.cell_index(&out.point)] += 1;
        fell += out.fell_back as u64;
    }
    assert_within_4_sigma(&counts, &mixture);
    assert_within_4_sigma(&[fell, runs - fell], &[p_r, 1.0 - p_r]);
}

#[test]
fn grid_sampling_matches_cell_masses() {
    let g =
        GridApproximation::from_values(2, 3, vec![0.1, -1.0, 2.0, 0.0, 0.5, -3.0, 1.0, 1.5, 0.0])
            .unwrap();
    let mut rng = stream(8);
    let mut counts = vec![0u64; 9];
    let mut x = [0.0; 2];
    for _ in 0..500_000 {
        g.sample(&mut rng, &mut x);
        counts[g.cell_index(&x)] += 1;
    }
    assert_within_4_sigma(&counts, &g.cell_masses());
    let points: Vec<f64> = (0..200_000)
        .flat_map(|_| {
            g.sample(&mut rng, &mut x);
            x
        })
        .collect();
    let batch = EmpiricalBatch::new(2, points, "grid").unwrap();
    assert!(cell_histogram_tv(&batch, &g).unwrap() < 0.005);
}

#[test]
fn mc_sampling_misses_the_narrow_peak() {
    // f = −600x with n = 100 rarely proposes inside [0, log 4 / 600].
    let f = LinearSum::new(-600.0, 1);
    let delta = 4f64.ln() / 600.0;
    let mut rng = stream(13);
    let runs = 100_000;
    let hits = (0..runs)
        .filter(|_| mc_sampling(&f, 100, &mut rng).unwrap().point[0] <= delta)
        .count();
    let empirical = hits as f64 / runs as f64;
    let exact = -(-600.0 * delta).exp_m1() / -(-600.0f64).exp_m1();
    assert!(empirical <= 0.25, "{empirical}");
    assert!(exact >= 0.75);
}

#[test]
fn energy_distance_flags_the_narrow_peak_failure() {
    let f = LinearSum::new(-600.0, 1);
    let n = 100_000;
    let mut rng = stream(14);
    let exact_batch = |rng: &mut Stream| {
        let pts: Vec<f64> = (0..n)
            .map(|_| exact_linear_sampler(-600.0, &[uniform(rng)])[0])
            .collect();
        EmpiricalBatch::new(1, pts, "exact").unwrap()
    };
    let reference = exact_batch(&mut rng);
    let ceiling = (0..3)
        .map(|_| energy_distance_sq(&reference, &exact_batch(&mut rng)).unwrap())
        .fold(0.0, f64::max);
    let mc: Vec<f64> = (0..n)
        .map(|_| mc_sampling(&f, 100, &mut rng).unwrap().point[0])
        .collect();
    let mc = EmpiricalBatch::new(1, mc, "mc").unwrap();
    let gap = energy_distance_sq(&reference, &mc).unwrap();
    assert!(gap >= 10.0 * ceiling, "{gap} vs ceiling {ceiling}");
}

#[test]
fn known_normalizer_sampler_hits_two_thirds() {
    // e^f = 4/3 on [0, 1/2), 2/3 on [1/2, 1]: L_f = 0 and ‖f‖_∞ = log(3/2).
    let f = GridApproximation::from_values(1, 2, vec![(4.0f64 / 3.0).ln(), (2.0f64 / 3.0).ln()])
        .unwrap();
    let mut rng = stream(17);
    let runs = 400_000u64;
    let mut counts = [0u64; 2];
    let mut accepted = 0u64;
    let mut evals = 0u64;
    for _ in 0..runs {
        let out = exact_sampler_known_z(&f, &mut rng).unwrap();
        counts[f.cell_index(&out.point)] += 1;
        accepted += out.accepted_at.is_some() as u64;
        evals += out.evals_used;
    }
    assert_within_4_sigma(&counts, &[2.0 / 3.0, 1.0 / 3.0]);
    let rate = accepted as f64 / runs as f64;
    assert!((rate - 0.5).abs() < 0.004, "{rate}");
    assert_eq!(evals, runs);
    assert!((evals as f64 / accepted as f64 - 2.0).abs() < 0.02);
}

#[test]
fn thermodynamic_integration_is_unbiased() {
    let f = LinearSum::new(1.0, 1);
    let exact = f.exact_log_partition().unwrap();
    let sampler = ExactScaledSampler::new(&f);
    let seeds = 2000;
    let n = 1000;
    let envelope = 2.0 * (20f64.ln() * 2.0 / (2.0 * n as f64)).sqrt();
    let errors: Vec<f64> = (0..seeds)
        .map(|s| {
            thermodynamic_integration(&f, &sampler, n, &mut stream(s))
                .unwrap()
                .value
                - exact
        })
        .collect();
    let mean = errors.iter().sum::<f64>() / seeds as f64;
    let var = errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
    assert!(
        mean.abs() <= 4.0 * (var / seeds as f64).sqrt(),
        "bias {mean}"
    );
    let covered = errors.iter().filter(|e| e.abs() <= envelope).count();
    assert!(covered as f64 >= 0.95 * seeds as f64);
}

#[test]
fn bisection_with_exact_oracle_matches_dyadic_masses() {
    let beta = 5.0f64;
    let f = LinearSum::new(beta, 1);
    let rounds = 4;
    let cells = 1usize << rounds;
    let masses: Vec<f64> = (0..cells)
        .map(|k| {
            let (a, b) = (k as f64 / cells as f64, (k + 1) as f64 / cells as f64);
            ((beta * b).exp() - (beta * a).exp()) / beta.exp_m1()
        })
        .collect();
    let law = bisection_cell_law(&f, &ExactOracle, rounds).unwrap();
    for ((_, p), m) in law.iter().zip(&masses) {
        assert!((p - m).abs() < 1e-13);
    }
    let mut rng = stream(23);
    let mut counts = vec![0u64; cells];
    for _ in 0..100_000 {
        let x = bisection_sampling(&f, &ExactOracle, rounds, &mut rng)
            .unwrap()
            .point[0];
        counts[((x * cells as f64) as usize).min(cells - 1)] += 1;
    }
    assert!(chi_square_p_value(&counts, &masses) > 1e-6);
}

#[test]
fn piecewise_constant_rates() {
    for (beta, expected, tol) in [(0.1, -2.0 / 3.0, 0.1), (1e4, -1.0 / 3.0, 0.1)] {
        let f = LinearSum::new(beta, 3);
        let exact = f.exact_log_partition().unwrap();
        let (mut ns, mut errs) = (Vec::new(), Vec::new());
        for n_axis in [4u64, 8, 16, 32, 64] {
            let n = n_axis.pow(3);
            let est = pc_log_partition(&f, n).unwrap();
            ns.push(n as f64);
            errs.push((est.value - exact).abs());
        }
        let slope = loglog_slope(&ns, &errs).unwrap();
        assert!(
            (slope - expected).abs() <= tol,
            "beta={beta}: slope {slope}"
        );
    }
}

#[test]
fn sup_log_distance_to_the_grid_is_within_twice_the_residual() {
    let f = LinearSum::new(7.0, 2);
    let lf = f.exact_log_partition().unwrap();
    for cells in [2usize, 5, 16] {
        let g = GridApproximation::build(&f, cells, &mut EvalBudget::new(1 << 20)).unwrap();
        let residual = f.grid_residual_max(cells).unwrap();
        let mut worst = 0.0f64;
        let side = 1000;
        let mut x = [0.0; 2];
        for i in 0..side * side {
            gibbs_core::grid::cell_midpoint(i, side, &mut x);
            let gap = (f.evaluate(&x) - lf) - (g.value_at(&x) - g.log_partition());
            worst = worst.max(gap.abs());
        }
        assert!(worst <= 2.0 * residual, "{cells}: {worst} > 2·{residual}");
        // The same comparison on an aligned fine grid is exact at midpoints.
        let fine = GridApproximation::build(&f, cells * 8, &mut EvalBudget::new(1 << 20)).unwrap();
        let coarse_on_fine: Vec<f64> = (0..fine.num_cells())
            .map(|i| {
                gibbs_core::grid::cell_midpoint(i, cells * 8, &mut x);
                g.value_at(&x)
            })
            .collect();
        let up = GridApproximation::from_values(2, cells * 8, coarse_on_fine).unwrap();
        assert!(grid_sup_log(&fine, &up).unwrap() <= 2.0 * residual);
    }
}

#[test]
fn hybrids_beat_plain_mc_in_energy_distance() {
    // At n = 2^8 plain softmax sampling is visibly biased (the χ² of e^f
    // under the uniform is about 420), while at 600 points per batch larger
    // budgets sit on the energy-distance noise floor for every method.
    let f = LinearSum::new(15.0, 3);
    let n = 1 << 8;
    let batch_size = 600;
    let runs = 51;
    let exact = |rng: &mut Stream| -> EmpiricalBatch {
        let pts: Vec<f64> = (0..batch_size * 3)
            .map(|_| exact_linear_sampler(15.0, &[uniform(rng)])[0])
            .collect();
        EmpiricalBatch::new(3, pts, "exact").unwrap()
    };
    let hybrid = PcMcSampler::new(&f, n).unwrap();
    let pc_rs = PcRsSampler::new(&f, n).unwrap();
    let (mut mc_d, mut hy_d, mut rs_d) = (Vec::new(), Vec::new(), Vec::new());
    for run in 0..runs {
        let mut rng = stream(1000 + run);
        let reference = exact(&mut rng);
        let mut draw = |s: &mut dyn FnMut(&mut Stream) -> Vec<f64>| {
            let pts: Vec<f64> = (0..batch_size).flat_map(|_| s(&mut rng)).collect();
            energy_distance_sq(&reference, &EmpiricalBatch::new(3, pts, "x").unwrap()).unwrap()
        };
        mc_d.push(draw(&mut |r| mc_sampling(&f, n, r).unwrap().point));
        hy_d.push(draw(&mut |r| hybrid.sample(r).unwrap().point));
        rs_d.push(draw(&mut |r| pc_rs.sample(r).unwrap().point));
    }
    assert!(
        median(&hy_d) < median(&mc_d),
        "{} vs {}",
        median(&hy_d),
        median(&mc_d)
    );
    assert!(median(&rs_d) < median(&mc_d));
}

#[test]
fn pc_rs_rarely_falls_back() {
    let f = LinearSum::new(15.0, 3);
    let sampler = PcRsSampler::new(&f, 1 << 16).unwrap();
    assert!(sampler.residual().exact);
    let mut rng = stream(31);
    let fell = (0..10_000)
        .filter(|_| sampler.sample(&mut rng).unwrap().fell_back)
        .count();
    assert!(fell < 10);
}
