//! Acceptance checks. Each criterion prints one PASS/FAIL line with its
//! measured quantities and runtime; the process exits non-zero if any fail.

mod common;

use std::time::{Duration, Instant};

use brfp::experiments::{run_image_reconstruction, run_periodicity, ImageConfig, PeriodicityConfig};
use brfp::inference::spectral_covariance_woodbury;
use brfp::metrics::{kl_divergence, l01, nmse};
use brfp::observation::{corrupt, random_indices};
use brfp::{
    posterior, spectral_posterior_given_time, train, Block, KernelSpec, PriorMean, SelectionMatrix, SpectralOperator,
    TemporalObservations, TimeGrid, TrainConfig,
};
use common::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dft_collapse() -> Outcome {
    let n = 256;
    let model = se_model(n, 1.0, 0.2);
    let truth = model.sample_pair(11).unwrap();
    let obs = corrupt(&truth, &(0..n).collect::<Vec<_>>(), &[], 0.0, 0.0, 1).unwrap();
    let post = posterior(&model, &obs, &Block::SPECTRAL).unwrap();
    let fy = model.operator().forward(&obs.temporal.values).unwrap();
    let mut target = DVector::zeros(2 * n);
    target.rows_mut(0, n).copy_from(&fy.real);
    target.rows_mut(n, n).copy_from(&fy.imag);
    let mean_err = (&post.mean - target).amax();
    let cov_max = post.cov.amax();
    check(mean_err < 1e-8 && cov_max < 1e-8, format!("max |mean - DFT(y)| = {mean_err:.2e}, max |cov| = {cov_max:.2e}"))
}

fn spectral_mean_from_signal() -> Outcome {
    let mut worst = 0.0f64;
    let mut g = brfp::rng::stream(2, 0);
    for s in 0..20 {
        let model = se_model(64, g.random_range(0.5..2.0), g.random_range(0.02..0.5));
        let obs = random_observations(&model, &mut g, 100 + s, false);
        let spec = spectral_posterior_given_time(&model, &obs.temporal).unwrap();
        let time = posterior(&model, &obs, &[Block::Time]).unwrap();
        let f = model.operator().forward(&time.mean).unwrap();
        let err = (spec.block_mean(Block::Real).unwrap() - f.real)
            .amax()
            .max((spec.block_mean(Block::Imag).unwrap() - f.imag).amax());
        worst = worst.max(err);
    }
    check(worst < 1e-10, format!("20 setups, max |m_X|y - F(m_x|y)| = {worst:.2e}"))
}

fn oracle() -> Outcome {
    let (mut worst_mean, mut worst_cov) = (0.0f64, 0.0f64);
    let mut g = brfp::rng::stream(3, 0);
    for &n in &[8usize, 16, 32] {
        for s in 0..50u64 {
            let spec = random_kernel(&mut g);
            let grid = TimeGrid::index(n).unwrap();
            let mean = DVector::from_fn(n, |_, _| g.random_range(-1.0..1.0));
            let model = brfp::JointGaussianModel::from_kernel(&grid, &spec)
                .unwrap()
                .with_mean(PriorMean::new(mean, n).unwrap())
                .unwrap();
            let obs = random_observations(&model, &mut g, 1000 * n as u64 + s, true);
            let post = posterior(&model, &obs, &Block::ALL).unwrap();
            let (m_ref, c_ref) = brute_force_posterior(&model, &obs);
            worst_mean = worst_mean.max(rel_norm(&post.mean, &m_ref));
            worst_cov = worst_cov.max(rel_frobenius(&post.cov, &c_ref));
        }
    }
    check(
        worst_mean < 1e-6 && worst_cov < 1e-5,
        format!("150 patterns, worst mean rel {worst_mean:.2e}, worst cov rel {worst_cov:.2e}"),
    )
}

fn woodbury() -> Outcome {
    let n = 64;
    let model = se_model(n, 1.0, 0.2);
    let truth = model.sample_pair(4).unwrap();
    let idx = random_indices(n, 20, 4, 1);
    let mut worst = 0.0f64;
    for &s2 in &[0.01, 1.0, 100.0] {
        let obs = corrupt(&truth, &idx, &[], s2, 0.0, 4).unwrap();
        let direct = spectral_posterior_given_time(&model, &obs.temporal).unwrap().cov;
        let info = spectral_covariance_woodbury(&model, &obs.temporal).unwrap();
        worst = worst.max(rel_frobenius(&info, &direct));
    }
    check(worst < 1e-6, format!("sigma2 in {{0.01, 1, 100}}, worst rel Frobenius {worst:.2e}"))
}

fn large_noise() -> Outcome {
    let n = 64;
    let model = se_model(n, 1.0, 0.05);
    let truth = model.sample_pair(5).unwrap();
    let obs = corrupt(&truth, &random_indices(n, 16, 5, 1), &[], 1e8, 0.0, 5).unwrap();
    let post = spectral_posterior_given_time(&model, &obs.temporal).unwrap();
    let prior = model.time_prior().push_forward(model.operator()).unwrap().cov;
    let cov_rel = rel_frobenius(&post.cov, &prior);
    let mean_ratio = post.mean.norm() / obs.temporal.values.norm();
    check(
        cov_rel < 1e-3 && mean_ratio < 1e-3,
        format!("cov rel Frobenius {cov_rel:.2e}, |mean|/|y| = {mean_ratio:.2e}"),
    )
}

fn symmetry_violation(op: &brfp::FourierOperator, re: &DVector<f64>, im: &DVector<f64>) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..re.len() {
        let j = op.mirror(k).unwrap();
        worst = worst.max((re[k] - re[j]).abs()).max((im[k] + im[j]).abs());
    }
    worst
}

fn symmetry() -> Outcome {
    let model = se_model(64, 1.0, 0.02);
    let op = model.operator();
    let sampler = model.sampler().unwrap();
    let mut prior_worst = 0.0f64;
    for i in 0..1000 {
        let s = sampler.sample(6, i).unwrap();
        prior_worst = prior_worst.max(symmetry_violation(op, &s.spectrum.real, &s.spectrum.imag));
    }
    let mut post_worst = 0.0f64;
    let mut g = brfp::rng::stream(6, 1);
    for i in 0..100 {
        let obs = random_observations(&model, &mut g, 600 + i, false);
        let p = posterior(&model, &obs, &Block::SPECTRAL).unwrap();
        let (re, im) = (p.block_mean(Block::Real).unwrap(), p.block_mean(Block::Imag).unwrap());
        post_worst = post_worst.max(symmetry_violation(op, &re, &im));
    }
    check(
        prior_worst < 1e-8 && post_worst < 1e-8,
        format!("1000 prior samples worst {prior_worst:.2e}, 100 posterior means worst {post_worst:.2e}"),
    )
}

fn sampling_convergence() -> Outcome {
    let n = 64;
    let count = 20_000;
    let model = se_model(n, 1.0, 0.01);
    let blocks = model.covariance_blocks();
    let sampler = model.sampler().unwrap();
    let mut re = DMatrix::zeros(n, count);
    let mut im = DMatrix::zeros(n, count);
    for i in 0..count {
        let s = sampler.sample(7, i as u64).unwrap();
        re.set_column(i, &s.spectrum.real);
        im.set_column(i, &s.spectrum.imag);
    }
    let kr = &re * re.transpose() / count as f64;
    let ki = &im * im.transpose() / count as f64;
    let (er, ei) = (rel_frobenius(&kr, &blocks.kr), rel_frobenius(&ki, &blocks.ki));
    check(er < 0.05 && ei < 0.05, format!("20000 samples, Kr rel {er:.3}, Ki rel {ei:.3}"))
}

fn periodicity() -> Outcome {
    let mut found = 0;
    let mut ls_ok = 0;
    let mut notes = Vec::new();
    for seed in 0..10 {
        let out = run_periodicity(&PeriodicityConfig { seed, ..Default::default() }).unwrap();
        if out.all_peaks_found() {
            found += 1;
        } else {
            notes.push(format!("seed {seed} missed"));
        }
        if (out.lomb_scargle_peak - 0.5).abs() <= 0.05 {
            ls_ok += 1;
        }
    }
    check(
        found >= 9 && ls_ok >= 9,
        format!("both peaks in {found}/10 seeds, Lomb-Scargle peak near 0.5 in {ls_ok}/10; {}", notes.join(", "))
            .trim_end_matches("; ")
            .to_string(),
    )
}

fn image() -> Outcome {
    let full = run_image_reconstruction(&ImageConfig { coverage: 1.0, ..Default::default() }).unwrap();
    let bijection = (full.block_image(Block::Time, false) - &full.truth).amax();
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let out = run_image_reconstruction(&ImageConfig { seed, ..Default::default() }).unwrap();
        worst = worst.max(out.nmse);
    }
    check(
        bijection < 1e-8 && worst < 1e-2,
        format!("full-spectrum error {bijection:.2e}, 54% mask worst NMSE over 5 seeds {worst:.2e}"),
    )
}

fn metric_cases() -> Outcome {
    let v = |x: &[f64]| DVector::from_column_slice(x);
    let p = v(&[0.2, 0.3, 0.5]);
    let ok = kl_divergence(&p, &p).unwrap() == 0.0
        && kl_divergence(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap() == f64::INFINITY
        && nmse(&v(&[1.0, 2.0]), &v(&[1.0, 2.0])).unwrap() == 0.0
        && nmse(&v(&[1.0, 2.0]), &v(&[0.0, 0.0])).unwrap() == 1.0
        && nmse(&v(&[1.0, 2.0]), &v(&[1.0, 0.0])).unwrap() == 0.8
        && l01(&p, &p).unwrap() == 0.0
        && l01(&v(&[1.0]), &v(&[0.0])).unwrap() == 1.0
        && l01(&v(&[1.0, 1.0]), &v(&[0.0, 0.0])).unwrap() == 512.0;
    check(ok, "kl, nmse and l01 hand cases".into())
}

fn training() -> Outcome {
    let n = 128;
    let (sigma2, alpha) = (1.0, 0.02);
    let grid = TimeGrid::index(n).unwrap();
    let truth_spec = KernelSpec::squared_exponential(sigma2, alpha);
    let model = brfp::JointGaussianModel::from_kernel(&grid, &truth_spec).unwrap();
    let mut good = 0;
    let mut found = Vec::new();
    for seed in 0..5u64 {
        let x = model.sample_pair(seed).unwrap().x;
        let mut g = brfp::rng::stream(seed, 9);
        let noise = DVector::from_vec(brfp::rng::standard_normals(&mut g, n)) * 0.1f64.sqrt();
        let t = TemporalObservations::new(SelectionMatrix::full(n), &x + noise, 0.1).unwrap();
        let obs = brfp::ObservationSet::temporal_only(t, n);
        let y = &obs.temporal.values;
        let var_y = y.variance();
        let init = KernelSpec::squared_exponential(var_y, 0.2);
        let report =
            train(&grid, &PriorMean::zeros(n), &init, &obs, &TrainConfig { seed, ..Default::default() }).unwrap();
        let s = report.final_spec;
        let within = |a: f64, b: f64| a / b <= 2.0 && b / a <= 2.0;
        if within(s.sigma2, sigma2) && within(s.alpha, alpha) {
            good += 1;
        }
        found.push(format!("({:.2}, {:.4})", s.sigma2, s.alpha));
    }
    check(good >= 4, format!("{good}/5 seeds within factor 2 of (1, 0.02): {}", found.join(" ")))
}

type Criterion = (u32, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "DFT collapse", Duration::from_secs(1), dft_collapse),
        (2, "Spectral mean from signal posterior", Duration::from_secs(5), spectral_mean_from_signal),
        (3, "Oracle equivalence", Duration::from_secs(30), oracle),
        (4, "Woodbury route", Duration::from_secs(5), woodbury),
        (5, "Large-noise limit", Duration::from_secs(2), large_noise),
        (6, "Symmetry suite", Duration::from_secs(10), symmetry),
        (7, "Sampling convergence", Duration::from_secs(30), sampling_convergence),
        (8, "Periodicity detection", Duration::from_secs(120), periodicity),
        (9, "2D bijection and reconstruction", Duration::from_secs(120), image),
        (10, "Metric unit cases", Duration::from_secs(1), metric_cases),
        (11, "Training self-consistency", Duration::from_secs(180), training),
    ];
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let (ok, detail) = match outcome {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        let timing = format!(
            "{:.2}s / {}s budget{}",
            elapsed.as_secs_f64(),
            budget.as_secs(),
            if in_time { "" } else { " EXCEEDED" }
        );
        println!("{} criterion {id:>2} {name}: {detail} [{timing}]", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
