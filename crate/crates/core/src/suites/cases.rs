use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use super::{case_seed, Check, ExperimentRecord, Relation, Source, Suite, SuiteConfig};
use crate::algebra::{decompose, AlgebraSide, AlgebraUnitarySampler, Fixture, GroupSampler};
use crate::boson::{boson_purify_channel, GaugeInvariantGaussian};
use crate::error::Result;
use crate::fermion::{
    diagonal_purification_circuit, diagonal_purification_closed_form, fermi_purify_channel,
    gaussian_mixed_state, gaussianity_residuals, random_pure_gaussian, signed_standard_purification,
    DoubledSystem, FermionSystem, GaussianCopiesSampler, Parity, QuadraticHamiltonian,
};
use crate::linalg::{
    hermitian_eigen, mat_fn, random_antisymmetric_unit, random_density_matrix, tensor_power, trace_distance,
    CMat, CVec, DenseOperator, MatFn, Rng64, RngStream, ScalarStats,
};
use crate::purification::{standard_purification, ExplicitForm, PurificationChannel};
use crate::tomography::{
    dimension_ratio, far_state, gaussianity_test, gram_rank, lower_bound_report, max_gaussian_overlap,
    moment_check, ratio_f64, rep_dimension, sample_overlaps, MixedRoute, MixedTomography, PovmSamplerConfig,
    TestConstants, TestDecision,
};

const MC_SIGMAS: f64 = 3.0;

fn rng_for(seed: u64, suite: Suite, case: u64) -> Rng64 {
    RngStream::new(case_seed(seed, suite, case), 0).rng()
}

fn trial_rng(seed: u64, suite: Suite, case: u64, trial: usize) -> Rng64 {
    RngStream::new(case_seed(seed, suite, case), 1 + trial as u64).rng()
}

fn finish(mut rec: ExperimentRecord, start: Instant) -> ExperimentRecord {
    rec.wall_time_s = start.elapsed().as_secs_f64();
    rec
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

fn sampler_config(cfg: &SuiteConfig, m: usize, n: usize) -> PovmSamplerConfig {
    let mut out = PovmSamplerConfig::auto(m, n);
    if let Some(method) = cfg.sampler {
        out.method = method;
    }
    out
}

fn random_gaussian_mixed(sys: &FermionSystem, rng: &mut Rng64) -> DenseOperator {
    let h = QuadraticHamiltonian::antisymmetrized(&random_antisymmetric_unit(2 * sys.modes(), rng));
    gaussian_mixed_state(sys, &h)
}

fn numerical_rank(vectors: &[CVec]) -> usize {
    let k = vectors.len();
    let gram = CMat::from_fn(k, k, |a, b| vectors[a].dotc(&vectors[b]));
    let (values, _) = hermitian_eigen(&gram);
    let top = max_of(values.iter().copied());
    values.iter().filter(|&&v| v > 1e-8 * top).count()
}

pub(super) fn algebra(cfg: &SuiteConfig) -> Result<Vec<ExperimentRecord>> {
    let suite = Suite::Algebra;
    let tol = cfg.tol_or(1e-8);
    let mut out = vec![];
    for (idx, f) in cfg.fixture_list()?.into_iter().enumerate() {
        let start = Instant::now();
        let mut rng = rng_for(cfg.seed, suite, idx as u64);
        let alg = f.algebra()?;
        let dec = decompose(&alg, &mut rng)?;
        let mut dims = dec.block_dims();
        dims.sort();
        let mut rec = ExperimentRecord::new(suite, f.name(), cfg.seed).param("fixture", f);
        let residual = max_of(alg.basis().iter().map(|b| dec.algebra_residual(b)));
        rec.check(Check::new("block_form_residual", residual, 0.0, tol, Relation::AtMost, Source::Identity));
        let expected = f.expected_block_dims();
        match (&expected, f) {
            (Some(e), _) => {
                let mismatch = if *e == dims { 0.0 } else { 1.0 };
                rec.check(Check::new("block_dims_mismatch", mismatch, 0.0, 0.0, Relation::Close, Source::ClosedForm));
            }
            (None, Fixture::FermionCopies { m, n }) => {
                let commutant_dim: usize = dims.iter().map(|&(_, r)| r * r).sum();
                let algebra_dim: usize = dims.iter().map(|&(l, _)| l * l).sum();
                let sampler = GaussianCopiesSampler::new(m, n);
                let count = (2 * commutant_dim + 10).min(alg.ambient_dim().pow(2));
                let samples: Vec<CVec> = (0..count)
                    .map(|_| {
                        let u = sampler.sample(&mut rng);
                        CVec::from_iterator(u.len(), u.iter().cloned())
                    })
                    .collect();
                let span = numerical_rank(&samples);
                rec.estimate("gaussian_span_rank", span as f64);
                rec.check(Check::new(
                    "commutant_dim_vs_span_rank",
                    commutant_dim as f64,
                    span as f64,
                    0.0,
                    Relation::Close,
                    Source::Oracle,
                ));
                rec.check(Check::new(
                    "algebra_dim_vs_commutant_rank",
                    algebra_dim as f64,
                    alg.dim() as f64,
                    0.0,
                    Relation::Close,
                    Source::Oracle,
                ));
                let d = rep_dimension(n, m).to_f64() as usize;
                let copies = dims.iter().filter(|&&(_, r)| r == d).count();
                rec.check(Check::new("gaussian_irrep_blocks", copies as f64, 2.0, 0.0, Relation::AtLeast, Source::ClosedForm));
            }
            (None, _) => {}
        }
        rec.details = json!({ "blocks": dims, "expected": expected, "algebra_dim": alg.dim() });
        out.push(finish(rec, start));
    }
    Ok(out)
}

fn invariant_state(ch: &PurificationChannel, dims: &[usize], rng: &mut Rng64) -> Result<DenseOperator> {
    let raw = random_density_matrix(ch.input_dim(), rng);
    DenseOperator::new(dims.to_vec(), ch.dec().commutant_expectation(raw.matrix()))
}

pub(super) fn purify(cfg: &SuiteConfig) -> Result<Vec<ExperimentRecord>> {
    let suite = Suite::Purify;
    let tol = cfg.tol_or(1e-9);
    let invariant = cfg.trials.unwrap_or(20);
    let arbitrary = 5 * invariant;
    let samples = cfg.samples.unwrap_or(10_000);
    let mut out = vec![];
    for (idx, f) in cfg.fixture_list()?.into_iter().enumerate() {
        let start = Instant::now();
        let case = idx as u64;
        let mut rng = rng_for(cfg.seed, suite, case);
        let dims = f.ambient_dims();
        let ch = PurificationChannel::build(decompose(&f.algebra()?, &mut rng)?, None)?;
        let mut rec = ExperimentRecord::new(suite, f.name(), cfg.seed)
            .param("fixture", f)
            .param("invariant_states", invariant)
            .param("arbitrary_states", arbitrary)
            .param("samples", samples);

        let sym: Vec<f64> = (0..invariant)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, suite, case, t);
                let rho = invariant_state(&ch, &dims, &mut rng)?;
                let outp = ch.apply(&rho)?;
                let psi = standard_purification(&rho, None)?.projector().with_dims(ch.output_dims().to_vec())?;
                let target = ch.reference_expectation(&psi)?;
                Ok(trace_distance(outp.matrix(), target.matrix()))
            })
            .collect::<Result<_>>()?;
        rec.check(Check::new("symmetric_action_td", max_of(sym), 0.0, tol, Relation::AtMost, Source::Identity));

        let rho = invariant_state(&ch, &dims, &mut rng)?;
        let exact = ch.apply(&rho)?;
        let sampler = AlgebraUnitarySampler { dec: ch.dec().clone(), side: AlgebraSide::Commutant };
        let (mean, est) = ch.twirl_estimate(&rho, &sampler, samples, &mut rng)?;
        let td = trace_distance(exact.matrix(), mean.matrix());
        let se = est.stderr_trace();
        rec.check(
            Check::new("haar_twirl_td", td, 0.0, MC_SIGMAS * se + 1e-12, Relation::AtMost, Source::Oracle).with_stderr(se),
        );

        let explicit: Vec<(f64, f64)> = (0..arbitrary)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, suite, case, invariant + t);
                let rho = random_density_matrix(ch.input_dim(), &mut rng).with_dims(dims.clone())?;
                let op = ch.apply(&rho)?;
                let pinch = ch.explicit_form_apply(&rho, ExplicitForm::Pinch)?;
                let sqrt = ch.explicit_form_apply(&rho, ExplicitForm::Sqrt)?;
                Ok((trace_distance(op.matrix(), pinch.matrix()), trace_distance(op.matrix(), sqrt.matrix())))
            })
            .collect::<Result<_>>()?;
        rec.check(Check::new(
            "pinch_form_td",
            max_of(explicit.iter().map(|e| e.0)),
            0.0,
            tol,
            Relation::AtMost,
            Source::Identity,
        ));
        rec.check(Check::new(
            "sqrt_form_td",
            max_of(explicit.iter().map(|e| e.1)),
            0.0,
            tol,
            Relation::AtMost,
            Source::Identity,
        ));
        let lhs = ch.sqrt_omega_projector();
        let rhs = mat_fn(&ch.identity_output(), MatFn::Sqrt)?;
        rec.check(Check::new(
            "sqrt_omega_identity",
            (lhs.matrix() - rhs.matrix()).norm(),
            0.0,
            tol,
            Relation::AtMost,
            Source::Identity,
        ));
        rec.details = json!({ "blocks": ch.block_info() });
        out.push(finish(rec, start));
    }
    Ok(out)
}

pub(super) fn fermion(cfg: &SuiteConfig) -> Result<Vec<ExperimentRecord>> {
    use rand::Rng;
    let suite = Suite::Fermion;
    let tol = cfg.tol_or(1e-8);
    let trials = cfg.trials.unwrap_or(100);
    let samples = cfg.samples.unwrap_or(10_000);
    let mut out = vec![];
    let mut case = 0u64;
    for m in cfg.ms(&[1, 2, 3, 4]) {
        let start = Instant::now();
        let doubled = DoubledSystem::new(m);
        let sys = doubled.base().clone();
        let rows: Vec<(f64, f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, suite, case, t);
                let rho = random_gaussian_mixed(&sys, &mut rng);
                let psi = signed_standard_purification(&rho, &doubled)?;
                let (lambda, purity) = gaussianity_residuals(2 * m, psi.amplitudes());
                let thetas: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
                let (circ, _) = diagonal_purification_circuit(&thetas, &doubled)?;
                let closed = diagonal_purification_closed_form(&thetas);
                Ok((lambda, purity, 1.0 - circ.inner(&closed).norm()))
            })
            .collect::<Result<_>>()?;
        let mut rec = ExperimentRecord::new(suite, format!("gaussian-purification-m{m}"), cfg.seed)
            .param("m", m)
            .param("trials", trials);
        rec.check(Check::new("lambda_residual", max_of(rows.iter().map(|r| r.0)), 0.0, tol, Relation::AtMost, Source::Identity));
        rec.check(Check::new("covariance_purity_residual", max_of(rows.iter().map(|r| r.1)), 0.0, tol, Relation::AtMost, Source::Identity));
        rec.check(Check::new(
            "diagonal_circuit_defect",
            max_of(rows.iter().map(|r| r.2)),
            0.0,
            cfg.tol_or(1e-10),
            Relation::AtMost,
            Source::Identity,
        ));
        out.push(finish(rec, start));
        case += 1;
    }
    for m in cfg.ms(&[2]) {
        for n in cfg.ns(&[1, 2]) {
            let start = Instant::now();
            let mut rng = rng_for(cfg.seed, suite, case);
            case += 1;
            let ch = fermi_purify_channel(m, n, &mut rng)?;
            let sigma = random_gaussian_mixed(&FermionSystem::new(m), &mut rng);
            let rho = tensor_power(&sigma, n).with_dims(vec![2; m * n])?;
            let exact = ch.apply(&rho)?;
            let psi = ch.standard_purification(&rho)?.projector().with_dims(ch.channel().output_dims().to_vec())?;
            let target = ch.channel().reference_expectation(&psi)?;
            let mut rec = ExperimentRecord::new(suite, format!("channel-m{m}-n{n}"), cfg.seed)
                .param("m", m)
                .param("n", n)
                .param("samples", samples);
            rec.check(Check::new(
                "sector_identity_td",
                trace_distance(exact.matrix(), target.matrix()),
                0.0,
                cfg.tol_or(1e-9),
                Relation::AtMost,
                Source::Identity,
            ));
            let (mean, est) = ch.gaussian_twirl_estimate(&rho, samples, &mut rng)?;
            let td = trace_distance(exact.matrix(), mean.matrix());
            let se = est.stderr_trace();
            rec.check(
                Check::new("gaussian_twirl_td", td, 0.0, MC_SIGMAS * se + 1e-12, Relation::AtMost, Source::Oracle)
                    .with_stderr(se),
            );
            rec.details = json!({ "blocks": ch.channel().block_info() });
            out.push(finish(rec, start));
        }
    }
    Ok(out)
}

pub(super) fn tomo(cfg: &SuiteConfig) -> Result<Vec<ExperimentRecord>> {
    let suite = Suite::Tomo;
    let trials = cfg.trials.unwrap_or(2000);
    let explicit_grid = cfg.m.is_some() || cfg.n.is_some();
    let pairs: Vec<(usize, usize)> = if explicit_grid {
        let ms = cfg.ms(&[2]);
        let ns = cfg.ns(&[4]);
        ms.iter().flat_map(|&m| ns.iter().map(move |&n| (m, n))).collect()
    } else {
        vec![(2, 4), (2, 16), (3, 8)]
    };
    let mut out = vec![];

    if !explicit_grid {
        let start = Instant::now();
        let mut rng = rng_for(cfg.seed, suite, 0);
        let mut table = vec![];
        let mut mismatches = 0usize;
        for m in 1..=3usize {
            for n in 0..=4usize {
                let d = rep_dimension(n, m).to_f64() as usize;
                let rank = gram_rank(n, m, Parity::Even, 3 * d + 3, &mut rng);
                mismatches += usize::from(rank != d);
                table.push(json!({ "m": m, "n": n, "formula": d, "gram_rank": rank }));
            }
        }
        let single_copy =
            (1..=6usize).filter(|&m| rep_dimension(1, m).to_f64() as usize != 1usize << (m - 1)).count();
        let mut rec = ExperimentRecord::new(suite, "dimension", cfg.seed);
        rec.check(Check::new("gram_rank_mismatches", mismatches as f64, 0.0, 0.0, Relation::Close, Source::Oracle));
        rec.check(Check::new("single_copy_mismatches", single_copy as f64, 0.0, 0.0, Relation::Close, Source::ClosedForm));
        rec.details = json!({ "table": table });
        out.push(finish(rec, start));
    }

    for (i, &(m, n)) in pairs.iter().enumerate() {
        let start = Instant::now();
        let scfg = sampler_config(cfg, m, n);
        let overlaps = sample_overlaps(m, n, trials, &scfg, case_seed(cfg.seed, suite, 1 + i as u64))?;
        let stats = ScalarStats::from_samples(overlaps.iter().copied());
        let exact = dimension_ratio(n, m, 1);
        let target = ratio_f64(&exact);
        // Markov: Pr[1 − |⟨ψ|ψ̂⟩|² ≥ ε] ≤ (1 − target)/ε, at the ε where the bound is 1/3
        let eps = 3.0 * (1.0 - target);
        let failures = ScalarStats::from_samples(overlaps.iter().map(|&o| f64::from(u8::from(1.0 - o >= eps))));
        let mut rec = ExperimentRecord::new(suite, format!("overlap-m{m}-n{n}"), cfg.seed)
            .param("m", m)
            .param("n", n)
            .param("trials", trials)
            .param("sampler", scfg);
        rec.check(Check::within_stderr("mean_overlap", stats.mean, stats.stderr(), target, MC_SIGMAS, Source::ClosedForm));
        rec.check(
            Check::new(
                "markov_failure_rate",
                failures.mean,
                1.0 / 3.0,
                MC_SIGMAS * failures.stderr() + 1e-12,
                Relation::AtMost,
                Source::ClosedForm,
            )
            .with_stderr(failures.stderr()),
        );
        rec.estimate("markov_epsilon", eps);
        rec.details = json!({ "target_exact": exact.to_string() });
        out.push(finish(rec, start));
    }

    let moment_pairs = if explicit_grid { pairs.clone() } else { vec![(2, 4)] };
    for (i, &(m, n)) in moment_pairs.iter().enumerate() {
        for k in cfg.k.clone().unwrap_or_else(|| vec![1, 2]) {
            let start = Instant::now();
            let scfg = sampler_config(cfg, m, n);
            let seed = case_seed(cfg.seed, suite, 1000 + i as u64);
            let report = moment_check(m, n, k, trials, &scfg, seed)?;
            let mut rec = ExperimentRecord::new(suite, format!("moment-m{m}-n{n}-k{k}"), cfg.seed)
                .param("m", m)
                .param("n", n)
                .param("k", k)
                .param("trials", trials);
            rec.check(Check::within_stderr(
                "moment",
                report.estimate,
                report.stderr,
                report.target,
                MC_SIGMAS,
                Source::ClosedForm,
            ));
            rec.check(Check::new("chain_lower", report.estimate, report.lower_bound, 0.0, Relation::AtLeast, Source::ClosedForm));
            rec.check(Check::new("chain_upper", report.estimate, report.upper_bound, 0.0, Relation::AtMost, Source::ClosedForm));
            rec.estimate("epsilon", report.epsilon);
            rec.details = json!({ "target_exact": dimension_ratio(n, m, k).to_string() });
            out.push(finish(rec, start));
        }
    }
    Ok(out)
}

pub(super) fn testing(cfg: &SuiteConfig) -> Result<Vec<ExperimentRecord>> {
    use rand::Rng;
    let suite = Suite::Test;
    let eps = cfg.eps.unwrap_or(0.3);
    let trials = cfg.trials.unwrap_or(300);
    let consts = TestConstants::default();
    let mut out = vec![];
    for (i, m) in cfg.ms(&[2]).into_iter().enumerate() {
        let case = 2 * i as u64;
        let sys = FermionSystem::new(m);
        let start = Instant::now();
        let decisions: Vec<(bool, Option<f64>)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, suite, case, t);
                let parity = if rng.random::<bool>() { Parity::Even } else { Parity::Odd };
                let (psi, _) = random_pure_gaussian(&sys, parity, &mut rng);
                let o = gaussianity_test(&psi, eps, &consts, &mut rng)?;
                Ok((o.decision == TestDecision::Accept, o.overlap))
            })
            .collect::<Result<_>>()?;
        let accept = ScalarStats::from_samples(decisions.iter().map(|d| f64::from(u8::from(d.0))));
        let (n1, n2) = crate::tomography::test_copies(m, eps, &consts);
        let mut rec = ExperimentRecord::new(suite, format!("gaussian-inputs-m{m}"), cfg.seed)
            .param("m", m)
            .param("eps", eps)
            .param("trials", trials)
            .param("constants", consts);
        rec.check(Check::new("accept_rate", accept.mean, 2.0 / 3.0, 0.0, Relation::AtLeast, Source::ClosedForm).with_stderr(accept.stderr()));
        rec.estimate("n1", n1 as f64);
        rec.estimate("n2", n2 as f64);
        out.push(finish(rec, start));

        let start = Instant::now();
        let psi = far_state(m);
        let cert = max_gaussian_overlap(&psi, 8, &mut rng_for(cfg.seed, suite, case + 1));
        let decisions: Vec<bool> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, suite, case + 1, t);
                Ok(gaussianity_test(&psi, eps, &consts, &mut rng)?.decision == TestDecision::Reject)
            })
            .collect::<Result<_>>()?;
        let reject = ScalarStats::from_samples(decisions.iter().map(|&d| f64::from(u8::from(d))));
        let mut rec = ExperimentRecord::new(suite, format!("far-state-m{m}"), cfg.seed)
            .param("m", m)
            .param("eps", eps)
            .param("trials", trials)
            .param("constants", consts);
        rec.check(Check::new("max_gaussian_overlap", cert.max_overlap, 1.0 - eps, 0.0, Relation::AtMost, Source::Oracle));
        rec.check(Check::new("reject_rate", reject.mean, 2.0 / 3.0, 0.0, Relation::AtLeast, Source::ClosedForm).with_stderr(reject.stderr()));
        rec.details = json!({ "certificate": cert });
        out.push(finish(rec, start));
    }
    Ok(out)
}

pub(super) fn lower_bound(cfg: &SuiteConfig) -> Result<Vec<ExperimentRecord>> {
    let suite = Suite::LowerBound;
    let eps = cfg.eps.unwrap_or(0.2);
    let trials = cfg.trials.unwrap_or(90);
    let max_n = cfg.max_n.unwrap_or(50);
    let mut out = vec![];
    for (i, m) in cfg.ms(&[2]).into_iter().enumerate() {
        let start = Instant::now();
        let n_lower = lower_bound_report(m, eps)?;
        let mut rec = ExperimentRecord::new(suite, format!("closed-form-m{m}"), cfg.seed).param("m", m).param("eps", eps);
        rec.estimate("n_lower", n_lower as f64);
        rec.estimate("k", (1.0 / (4.0 * eps)).floor());
        out.push(finish(rec, start));
        if m > 2 {
            continue;
        }

        // smallest n at which tomography reaches F² ≥ 1 − ε with probability ≥ 2/3
        let sys = FermionSystem::new(m);
        let sweep_start = Instant::now();
        let mut minimal = None;
        let mut rates = vec![];
        for n in 1..=max_n {
            let start = Instant::now();
            let case = 1000 * (i as u64 + 1) + n as u64;
            let tomo = MixedTomography::new(m, n, MixedRoute::Auto, &mut rng_for(cfg.seed, suite, case))?;
            let scfg = sampler_config(cfg, 2 * m, n);
            let scores: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = trial_rng(cfg.seed, suite, case, t);
                    let sigma = random_gaussian_mixed(&sys, &mut rng);
                    Ok(tomo.run(&sigma, &scfg, &mut rng)?.score)
                })
                .collect::<Result<_>>()?;
            let success = ScalarStats::from_samples(scores.iter().map(|&s| f64::from(u8::from(s >= 1.0 - eps))));
            let mut rec = ExperimentRecord::new(suite, format!("sweep-m{m}-n{n}"), cfg.seed)
                .param("m", m)
                .param("n", n)
                .param("eps", eps)
                .param("trials", trials)
                .param("dense", tomo.is_dense());
            rec.estimate("success_rate", success.mean);
            rec.estimate("success_rate_stderr", success.stderr());
            rec.estimate("mean_fidelity_sq", scores.iter().sum::<f64>() / trials as f64);
            out.push(finish(rec, start));
            rates.push(success.mean);
            if success.mean >= 2.0 / 3.0 {
                minimal = Some(n);
                break;
            }
        }
        let mut rec = ExperimentRecord::new(suite, format!("sweep-summary-m{m}"), cfg.seed)
            .param("m", m)
            .param("eps", eps)
            .param("trials", trials)
            .param("max_n", max_n);
        let reached = minimal.is_some();
        rec.check(Check::new(
            "reached_two_thirds",
            f64::from(u8::from(reached)),
            1.0,
            0.0,
            Relation::Close,
            Source::ClosedForm,
        ));
        let n_min = minimal.map_or(f64::NAN, |n| n as f64);
        rec.check(Check::new("minimal_n_above_lower_bound", n_min, n_lower as f64, 0.0, Relation::AtLeast, Source::ClosedForm));
        rec.check(Check::new("minimal_n_within_envelope", n_min, 50.0, 0.0, Relation::AtMost, Source::Envelope));
        rec.details = json!({ "n_lower": n_lower, "minimal_n": minimal, "success_rates": rates });
        out.push(finish(rec, sweep_start));
    }
    Ok(out)
}

pub(super) fn boson(cfg: &SuiteConfig) -> Result<Vec<ExperimentRecord>> {
    let suite = Suite::Boson;
    let start = Instant::now();
    let m = cfg.ms(&[2])[0];
    let n = cfg.ns(&[2])[0];
    let cutoff = cfg.cutoff.unwrap_or(3);
    let samples = cfg.samples.unwrap_or(10_000);
    let betas = cfg.boson_betas(m);
    let mut rng = rng_for(cfg.seed, suite, 0);
    let state = GaugeInvariantGaussian::new(&betas, &CMat::identity(m, m), cutoff, 1e-3)?;
    let ch = boson_purify_channel(m, n, cutoff, &mut rng)?;
    let tail = ch.tail_weight(&state)?;
    let outputs = ch.apply(&state)?;
    let mut rec = ExperimentRecord::new(suite, format!("sectors-m{m}-n{n}-k{cutoff}"), cfg.seed)
        .param("m", m)
        .param("n", n)
        .param("cutoff", cutoff)
        .param("betas", &betas)
        .param("samples", samples);
    rec.estimate("tail_weight", tail);
    rec.estimate("single_copy_tail_weight", state.tail_weight());
    rec.check(Check::new(
        "sector_identity_td",
        ch.sector_identity_residual(&state)?,
        0.0,
        cfg.tol_or(1e-9),
        Relation::AtMost,
        Source::Identity,
    ));
    let captured: f64 = outputs.iter().map(|o| o.trace().re).sum();
    rec.check(Check::new("trace_accounting", captured + tail, 1.0, 1e-12, Relation::Close, Source::Identity));
    let exact = ch.assemble(&outputs);
    let (mean, est) = ch.twirl_estimate(&state, samples, &mut rng)?;
    let td = trace_distance(&exact, &mean);
    rec.check(Check::new("haar_twirl_td", td, 5e-2, tail, Relation::AtMost, Source::Oracle).with_stderr(est.stderr_trace()));
    rec.details = json!({ "sectors": ch.metadata() });
    Ok(vec![finish(rec, start)])
}
