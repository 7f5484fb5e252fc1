//! End-to-end acceptance checks. Runs as a plain binary so each criterion
//! prints one PASS/FAIL line; exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resa::audit::{leadtime_experiment, perturb_probe, seed_noise_band, LeadtimeArch};
use resa::autodiff::gradcheck::{max_param_relative_error, max_relative_error};
use resa::autodiff::{BatchNormStats, BnMode, Padding, Tape, Tensor, Var};
use resa::baselines::raw_passthrough;
use resa::climnorm::{climatology, denormalize_dynamic, fit_climatology, normalize_dynamic, normalize_static, NormKind, DEFAULT_SIGMA_FLOOR};
use resa::eval::{acc, rmse, skill_csv, SkillOptions, SkillRecord};
use resa::experiment::{ablate_arch, ablate_norm, finetune_resa, train_resa, Benchmark, BenchmarkConfig, ExperimentConfig, Runner};
use resa::grid::{GridSeries, SynthConfig, SynthDataset};
use resa::model::config::convlstm_layer_params;
use resa::model::{param_count, Architecture, ModelState, ReSAConfig, ReSAModel, SequenceModel, REFERENCE_PARAM_COUNT};
use resa::train::{loss_curve_csv, TrainConfig, DEFAULT_FREEZE};
use resa::Error;

// Pinned tolerances.
const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;
const FD_SEEDS: u64 = 20;
const PROBE_EPS: [f64; 4] = [1e-3, -1e-3, 1.0, -1.0];
const STATIC_SPREAD_MIN: f64 = 1.0;
const DYNAMIC_SPREAD_MAX: f64 = 0.1;
const ROUND_TRIP_TOL: f64 = 1e-10;
const NORM_GAIN_MIN: f64 = 0.05;
const BAND_FACTOR: f64 = 2.0;
const HORIZONS: [usize; 3] = [3, 5, 7];
const SKILL_GAIN_MIN: f64 = 0.30;
const FINETUNE_EPOCH_FRACTION: f64 = 0.5;
const ORACLE_TOL: f64 = 1e-12;
const ORACLE_PAIRS: usize = 100;

/// Seed of every single-seed run.
const SEED: u64 = 1;
/// Second seed of the noise band.
const BAND_SEED: u64 = 2;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> resa::Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn runner() -> &'static Runner {
    static R: OnceLock<Runner> = OnceLock::new();
    R.get_or_init(|| Runner::new(ExperimentConfig::standard()).expect("standard benchmark"))
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(-2.0..2.0))
}

fn weighted_sum(tape: &mut Tape, y: Var, rng: &mut ChaCha8Rng) -> Var {
    let w = random(tape.shape(y), rng);
    let wv = tape.leaf(w);
    let p = tape.mul(y, wv).unwrap();
    tape.sum(p)
}

/// Worst relative error of every primitive and the composed model for one seed.
fn gradcheck_seed(seed: u64) -> resa::Result<Vec<(&'static str, f64)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let ins = vec![random(&[3, 4], &mut rng), random(&[3, 4], &mut rng), random(&[1], &mut rng)];
    let w = ChaCha8Rng::seed_from_u64(seed + 1000);
    out.push((
        "elementwise",
        max_relative_error(&ins, FD_STEP, |t, v| {
            let s = t.sigmoid(v[0]);
            let th = t.tanh(v[1]);
            let m = t.mul(s, th)?;
            let d = t.sub(m, v[0])?;
            let e = t.add(d, v[2])?;
            let f = t.mul(e, v[2])?;
            let g = t.scale(f, 0.7);
            Ok(weighted_sum(t, g, &mut w.clone()))
        })?,
    ));

    for (pad, wrap) in [(Padding::Same, false), (Padding::Same, true), (Padding::Valid, false)] {
        let ins = vec![random(&[2, 4, 5], &mut rng), random(&[3, 2, 3, 3], &mut rng), random(&[3], &mut rng)];
        out.push((
            "conv2d",
            max_relative_error(&ins, FD_STEP, |t, v| {
                let y = t.conv2d(v[0], v[1], Some(v[2]), pad, wrap)?;
                Ok(weighted_sum(t, y, &mut w.clone()))
            })?,
        ));
    }

    let (ta, tb) = (seed.is_multiple_of(2), seed.is_multiple_of(3));
    let a = random(if ta { &[4, 3] } else { &[3, 4] }, &mut rng);
    let b = random(if tb { &[5, 4] } else { &[4, 5] }, &mut rng);
    out.push((
        "matmul/softmax",
        max_relative_error(&[a, b], FD_STEP, |t, v| {
            let m = t.matmul(v[0], v[1], ta, tb)?;
            let s1 = t.softmax(m, 1)?;
            let s0 = t.softmax(m, 0)?;
            let p = t.mul(s1, s0)?;
            Ok(weighted_sum(t, p, &mut w.clone()))
        })?,
    ));

    for mode in [BnMode::Train, BnMode::Infer] {
        let ins = vec![random(&[2, 2, 3, 3], &mut rng), random(&[2], &mut rng), random(&[2], &mut rng)];
        let mut stats0 = BatchNormStats::new(2);
        stats0.mean = vec![0.3, -0.2];
        stats0.var = vec![1.7, 0.6];
        out.push((
            "batchnorm",
            max_relative_error(&ins, FD_STEP, |t, v| {
                let mut stats = stats0.clone();
                let y = t.batchnorm(v[0], v[1], v[2], &mut stats, mode)?;
                Ok(weighted_sum(t, y, &mut w.clone()))
            })?,
        ));
    }

    let ins = vec![random(&[2, 3, 2], &mut rng), random(&[1, 3, 2], &mut rng), random(&[3, 6], &mut rng)];
    out.push((
        "structural/loss",
        max_relative_error(&ins, FD_STEP, |t, v| {
            let c = t.concat(&[v[0], v[1]])?;
            let n = t.narrow(c, 1, 2)?;
            let r = t.reshape(n, &[2, 6])?;
            let rest = t.narrow(c, 0, 1)?;
            let rr = t.reshape(rest, &[1, 6])?;
            let all = t.concat(&[r, rr])?;
            let l = t.mse(all, v[2])?;
            let m = t.mean(all);
            t.add(l, m)
        })?,
    ));

    let config = ReSAConfig {
        hidden: vec![3],
        reduction: 1,
        lat: 3,
        lon: 4,
        ..ReSAConfig::default()
    };
    let mut model = ReSAModel::new(config, seed)?;
    let ids: Vec<_> = model.store().iter().map(|(id, _)| id).collect();
    for id in ids {
        model.store_mut().apply_update(id, |v| v.iter_mut().for_each(|x| *x += rng.gen_range(-0.4..0.4)));
    }
    let mode = if seed.is_multiple_of(2) { BnMode::Train } else { BnMode::Infer };
    let inputs: Vec<Tensor> = (0..2).map(|_| random(&[2, 3, 4], &mut rng)).collect();
    let target = random(&[4, 3, 4], &mut rng);
    out.push((
        "ReSA-ConvLSTM",
        max_param_relative_error(model.store(), FD_STEP, |store, tape| {
            let mut m = model.clone();
            *m.store_mut() = store.clone();
            let xs: Vec<_> = inputs.iter().map(|t| tape.leaf(t.clone())).collect();
            let (outs, _) = m.forward_batch(tape, &xs, mode)?;
            let pred = tape.concat(&outs)?;
            let t = tape.leaf(target.clone());
            tape.mse(pred, t)
        })?,
    ));
    Ok(out)
}

fn c1_gradients() -> resa::Result<Outcome> {
    let mut worst: Vec<(&str, f64)> = Vec::new();
    for seed in 0..FD_SEEDS {
        for (name, err) in gradcheck_seed(seed)? {
            match worst.iter_mut().find(|(n, _)| *n == name) {
                Some(w) => w.1 = w.1.max(err),
                None => worst.push((name, err)),
            }
        }
    }
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let parts: Vec<String> = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect();
    outcome(
        max < FD_TOL,
        format!("{FD_SEEDS} seeds, h={FD_STEP:e}, max rel err {max:.2e} < {FD_TOL:e} ({})", parts.join(", ")),
    )
}

fn c2_causality() -> resa::Result<Outcome> {
    let r = runner();
    let resa = r.resa(Architecture::ResaConvLstm, NormKind::Dynamic, 7, SEED)?;
    let acausal = r.acausal(NormKind::Dynamic, 7, SEED)?;
    let case = &r.bench.test[0];
    let mut resa_nonzero = 0usize;
    let mut probes = 0usize;
    let mut leaky_leads = Vec::new();
    for k in 2..=r.bench.leads() {
        for eps in PROBE_EPS {
            let p = perturb_probe(&resa.handle, case, k, eps)?;
            probes += 1;
            resa_nonzero += p.max_abs_delta[..k - 1].iter().filter(|d| **d != 0.0).count();
            let q = perturb_probe(&acausal.handle, case, k, eps)?;
            if q.max_abs_delta[..k - 1].iter().any(|d| *d != 0.0) && !leaky_leads.contains(&k) {
                leaky_leads.push(k);
            }
        }
    }
    outcome(
        resa_nonzero == 0 && !leaky_leads.is_empty(),
        format!(
            "ReSA: {resa_nonzero} nonzero earlier-lead deltas over {probes} probes; acausal baseline leaks for k in {leaky_leads:?}"
        ),
    )
}

fn per_point_means(s: &GridSeries) -> Vec<f64> {
    let mut m = vec![0.0; s.grid_len()];
    for t in 0..s.len() {
        for (a, v) in m.iter_mut().zip(s.field(t)) {
            *a += v / s.len() as f64;
        }
    }
    m
}

fn spread(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn c3_normalization() -> resa::Result<Outcome> {
    let cfg = SynthConfig {
        lat: 8,
        lon: 16,
        start_year: 2001,
        end_year: 2010,
        ..SynthConfig::t2m()
    };
    let ds = SynthDataset::generate(cfg, 21)?;
    let truth = ds.truth();
    let (stat, _, _) = normalize_static(truth)?;
    let clim = fit_climatology(truth, 31, DEFAULT_SIGMA_FLOOR)?;
    let dynamic = normalize_dynamic(truth, &clim)?;
    let (s_spread, d_spread) = (spread(&per_point_means(&stat.series)), spread(&per_point_means(&dynamic.series)));
    let back = denormalize_dynamic(&dynamic, &clim)?;
    let err = back.values().iter().zip(truth.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(
        s_spread > STATIC_SPREAD_MIN && d_spread < DYNAMIC_SPREAD_MAX && err <= ROUND_TRIP_TOL,
        format!("spread of normalized means: static {s_spread:.3} > {STATIC_SPREAD_MIN}, dynamic {d_spread:.4} < {DYNAMIC_SPREAD_MAX}; round-trip max err {err:.1e}"),
    )
}

fn c4_norm_ablation() -> resa::Result<Outcome> {
    let a = ablate_norm(runner(), SEED)?;
    outcome(
        a.reduction >= NORM_GAIN_MIN,
        format!(
            "mean RMSE leads 4-7: static {:.4}, dynamic {:.4}, reduction {:.1}% (need {:.0}%)",
            a.static_rmse,
            a.dynamic_rmse,
            100.0 * a.reduction,
            100.0 * NORM_GAIN_MIN
        ),
    )
}

fn c5_leadtime() -> resa::Result<Outcome> {
    let r = runner();
    let resa = leadtime_experiment(r, LeadtimeArch::Resa, &HORIZONS, SEED)?;
    let acausal = leadtime_experiment(r, LeadtimeArch::AcausalBaseline, &HORIZONS, SEED)?;
    let band = seed_noise_band(r, 7, (SEED, BAND_SEED))?;
    let bound = BAND_FACTOR * band;
    let (dr, da) = (resa.max_pair_diff(), acausal.max_pair_diff());
    let violating = acausal.pairs.iter().filter(|p| p.abs_diff > bound).count();
    outcome(
        dr <= bound && da > bound,
        format!(
            "band {band:.5} (seeds {SEED},{BAND_SEED}, horizon 7), bound {bound:.5}; ReSA max diff {dr:.5}; acausal max diff {da:.5} ({violating}/{} pairs outside)",
            acausal.pairs.len()
        ),
    )
}

fn c6_arch() -> resa::Result<Outcome> {
    let a = ablate_arch(runner())?;
    let m = |arch| a.mean_of(arch).unwrap_or(f64::NAN);
    let (conv, sa, res, resa) = (
        m(Architecture::ConvLstm),
        m(Architecture::SaConvLstm),
        m(Architecture::ResidualConvLstm),
        m(Architecture::ResaConvLstm),
    );
    let mid = sa.min(res);
    outcome(
        resa <= mid && mid <= conv,
        format!("mean RMSE over seeds {:?}: ReSA {resa:.5}, SA {sa:.5}, Residual {res:.5}, ConvLSTM {conv:.5}", a.seeds),
    )
}

fn row<'a>(records: &'a [SkillRecord], model: &str, lead: usize) -> &'a SkillRecord {
    records.iter().find(|r| r.model == model && r.lead_days == lead).expect("skill row")
}

fn c7_skill() -> resa::Result<Outcome> {
    let r = runner();
    let run = r.resa(Architecture::ResaConvLstm, NormKind::Dynamic, 7, SEED)?;
    let raw = raw_passthrough();
    let leads = r.bench.leads();
    let records = r.bench.evaluate(&[&raw, &run.handle], leads, SkillOptions::default())?;
    let mut gains = Vec::new();
    let mut acc_ok = true;
    for lead in 1..=leads {
        let (a, b) = (row(&records, &raw.model_id, lead), row(&records, &run.handle.model_id, lead));
        gains.push(1.0 - b.rmse / a.rmse);
        acc_ok &= b.acc >= a.acc;
    }
    let mean = gains.iter().sum::<f64>() / gains.len() as f64;
    let per: Vec<String> = gains.iter().map(|g| format!("{:.0}%", 100.0 * g)).collect();
    outcome(
        mean >= SKILL_GAIN_MIN && acc_ok,
        format!(
            "mean per-lead RMSE reduction {:.1}% (need {:.0}%; by lead {}), ACC corrected >= raw at every lead: {acc_ok}",
            100.0 * mean,
            100.0 * SKILL_GAIN_MIN,
            per.join(" ")
        ),
    )
}

fn c8_finetune() -> resa::Result<Outcome> {
    let r = runner();
    let exp = &r.exp;
    let transfer = Benchmark::build(exp.transfer.clone())?;
    let model = Architecture::ResaConvLstm.configure(exp.model.clone());
    let scratch = train_resa(&transfer, &model, &exp.train, NormKind::Dynamic, transfer.leads(), SEED)?;
    let rec = &scratch.state.meta.training;
    let last = rec.loss_curve.last().expect("non-empty loss curve").val_loss;
    let pretrained = r.resa(Architecture::ResaConvLstm, NormKind::Dynamic, 7, SEED)?;
    let cfg = TrainConfig {
        freeze: DEFAULT_FREEZE.iter().map(|s| s.to_string()).collect(),
        target_val_loss: Some(last),
        ..exp.train.clone()
    };
    let ft = finetune_resa(&transfer, &pretrained.state, &cfg, SEED)?;
    let budget = FINETUNE_EPOCH_FRACTION * rec.epochs_run as f64;
    let reached = ft.epochs_to_target;
    let best_ft = TrainConfig {
        target_val_loss: Some(rec.best_val_loss),
        ..cfg
    };
    let to_best = finetune_resa(&transfer, &pretrained.state, &best_ft, SEED)?.epochs_to_target;
    outcome(
        reached.is_some_and(|e| e as f64 <= budget),
        format!(
            "{} -> {}: from scratch {} epochs, final val loss {last:.5} (best {:.5}); fine-tune with {:?} frozen reaches final in {reached:?} epochs (budget {budget}), best in {to_best:?}",
            pretrained.state.meta.variable,
            transfer.variable(),
            rec.epochs_run,
            rec.best_val_loss,
            DEFAULT_FREEZE
        ),
    )
}

fn c9_metrics() -> resa::Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let mut worst: f64 = 0.0;
    for _ in 0..ORACLE_PAIRS {
        let (ni, nj) = (rng.gen_range(1..10), rng.gen_range(1..10));
        let n = ni * nj;
        let mut field = |s: f64| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-s..s)).collect() };
        let (p, t, c) = (field(10.0), field(10.0), field(2.0));
        let mut se = 0.0;
        let (mut num, mut pa, mut ta) = (0.0, 0.0, 0.0);
        for i in 0..ni {
            for j in 0..nj {
                let k = i * nj + j;
                se += (p[k] - t[k]).powi(2);
                num += (p[k] - c[k]) * (t[k] - c[k]);
                pa += (p[k] - c[k]).powi(2);
                ta += (t[k] - c[k]).powi(2);
            }
        }
        worst = worst.max((rmse(&p, &t)? - (se / n as f64).sqrt()).abs());
        worst = worst.max((acc(&p, &t, &c)?.value - num / (pa.sqrt() * ta.sqrt())).abs());
    }
    let t: Vec<f64> = (0..48).map(|k| (k as f64 * 0.37).sin() * 3.0 + 280.0).collect();
    let c = vec![280.0; 48];
    let neg: Vec<f64> = t.iter().zip(&c).map(|(v, m)| 2.0 * m - v).collect();
    let (same, opposite) = (acc(&t, &t, &c)?.value, acc(&neg, &t, &c)?.value);
    outcome(
        worst <= ORACLE_TOL && (same - 1.0).abs() <= ORACLE_TOL && (opposite + 1.0).abs() <= ORACLE_TOL,
        format!("{ORACLE_PAIRS} random pairs, max |impl - oracle| {worst:.1e}; acc identical {same}, negated {opposite}"),
    )
}

fn small_benchmark() -> BenchmarkConfig {
    BenchmarkConfig {
        synth: SynthConfig {
            lat: 4,
            lon: 8,
            start_year: 1991,
            end_year: 1996,
            ..SynthConfig::t2m()
        },
        data_seed: 7,
        test_years: vec![1991],
        train_stride_days: 40,
        val_stride_days: 30,
        ..BenchmarkConfig::standard()
    }
}

fn c10_determinism() -> resa::Result<Outcome> {
    let model = ReSAConfig {
        hidden: vec![4],
        ..ReSAConfig::default()
    };
    let train_cfg = TrainConfig {
        epochs: 3,
        batch_size: 4,
        ..TrainConfig::default()
    };
    let run = || -> resa::Result<(Vec<u8>, String, String, Vec<u8>)> {
        let bench = Benchmark::build(small_benchmark())?;
        let t = train_resa(&bench, &model, &train_cfg, NormKind::Dynamic, bench.leads(), 11)?;
        let records = bench.evaluate(&[&raw_passthrough(), &t.handle], bench.leads(), SkillOptions::default())?;
        Ok((
            t.state.encode()?,
            skill_csv(&records),
            loss_curve_csv(&t.state.meta.training.loss_curve),
            climatology::encode(&bench.climatology),
        ))
    };
    let (a, b) = (run()?, run()?);
    let identical = a == b;

    let path = std::env::temp_dir().join(format!("resa-acceptance-{}.resa", std::process::id()));
    let state = ModelState::decode(&a.0)?;
    state.save(&path)?;
    let loaded = ModelState::load(&path)?;
    let _ = std::fs::remove_file(&path);
    let round_trip = loaded == state && loaded.encode()? == a.0;

    let mut flipped = 0usize;
    for k in (8..a.0.len()).step_by(a.0.len() / 16) {
        let mut bad = a.0.clone();
        bad[k] ^= 0x10;
        if matches!(ModelState::decode(&bad), Err(Error::Format { .. })) {
            flipped += 1;
        }
    }
    let probes = (8..a.0.len()).step_by(a.0.len() / 16).count();
    outcome(
        identical && round_trip && flipped == probes,
        format!(
            "two runs byte-identical (checkpoint {} B, skill/loss CSVs, climatology): {identical}; save/load bit-exact: {round_trip}; corrupted bytes rejected {flipped}/{probes}",
            a.0.len()
        ),
    )
}

fn c11_params() -> resa::Result<Outcome> {
    let proj = ReSAConfig {
        hidden: vec![],
        attention: false,
        batchnorm: false,
        ..ReSAConfig::default()
    };
    let one = ReSAConfig {
        hidden: vec![4],
        attention: false,
        batchnorm: false,
        ..ReSAConfig::default()
    };
    let desk = ExperimentConfig::standard().model;
    let deep = ReSAConfig {
        hidden: vec![8, 8],
        kernel: 5,
        reduction: 4,
        lat: 8,
        lon: 16,
        ..ReSAConfig::default()
    };
    // Gates: 4 × ((C_in + C_h)·C_h·k² + C_h); attention: q, k (C→d, bias),
    // v (C→C, bias), gamma; batchnorm: 2C; head: C + 1.
    let hand = [
        ("projection", proj, 1 + 1),
        ("1->4 k3", one, 4 * (5 * 4 * 9 + 4) + 4 + 1),
        ("1->8 k3 r4", desk, 4 * (9 * 8 * 9 + 8) + (2 * (8 * 2 + 2) + 8 * 8 + 8 + 1) + 16 + 9),
        ("1->8->8 k5 r4", deep, 4 * (9 * 8 * 25 + 8) + 4 * (16 * 8 * 25 + 8) + (2 * (8 * 2 + 2) + 8 * 8 + 8 + 1) + 16 + 9),
        ("default 1->32->32 k3 r4", ReSAConfig::default(), 38_144 + 73_856 + 1_585 + 64 + 33),
    ];
    let mut exact = true;
    let mut parts = Vec::new();
    for (name, cfg, count) in &hand {
        let built = ReSAModel::new(cfg.clone(), 0)?.param_count();
        exact &= param_count(cfg) == *count && built == *count;
        parts.push(format!("{name} {count}"));
    }
    exact &= convlstm_layer_params(8, 8, 5) == 4 * (16 * 8 * 25 + 8);
    let reference = param_count(&ReSAConfig::reference_scale());
    let diff = reference as f64 / REFERENCE_PARAM_COUNT as f64 - 1.0;
    outcome(
        exact,
        format!(
            "{} configs exact ({}); reference-scale stack 1->192->256->256 k3 with attention gives {reference} vs published {REFERENCE_PARAM_COUNT} ({:+.1}%): layer count, widths and head are not fully given, so no match is asserted",
            hand.len(),
            parts.join(", "),
            100.0 * diff
        ),
    )
}

type Criterion = (&'static str, &'static str, u64, fn() -> resa::Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("1", "gradient correctness", 120, c1_gradients),
        ("2", "exact causality", 300, c2_causality),
        ("3", "dynamic normalization", 60, c3_normalization),
        ("4", "normalization ablation", 1800, c4_norm_ablation),
        ("5", "lead-time ablation", 3600, c5_leadtime),
        ("6", "architecture ablation", 5400, c6_arch),
        ("7", "correction skill", 1800, c7_skill),
        ("8", "fine-tune transfer", 1800, c8_finetune),
        ("9", "metric oracles", 60, c9_metrics),
        ("10", "determinism and persistence", 300, c10_determinism),
        ("11", "parameter accounting", 60, c11_params),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let total = Instant::now();
    for (id, name, limit, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let (pass, detail) = match result {
            Ok(o) => (o.pass && in_time, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} criterion {id:>2} ({name}): {detail} [{:.1} s, limit {limit} s{}]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            if in_time { "" } else { ", exceeded" }
        );
    }
    println!("acceptance: {failed} failed, {:.1} s total", total.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
