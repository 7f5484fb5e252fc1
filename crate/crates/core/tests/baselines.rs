use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resa::audit::{perturb_probe, Verdict};
use resa::baselines::{raw_passthrough, AcausalConfig, AcausalModel, BaselineState, GridwiseLinear};
use resa::climnorm::NormKind;
use resa::eval::{mean_rmse, SkillOptions};
use resa::experiment::{Benchmark, BenchmarkConfig, ExperimentConfig, Runner};
use resa::grid::ForecastCase;
use resa::model::SequenceModel;
use resa::train::mse;
use resa::Error;

fn cases_from(pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Vec<ForecastCase> {
    let d0 = NaiveDate::from_ymd_opt(2003, 1, 1).unwrap();
    pairs
        .into_iter()
        .enumerate()
        .map(|(k, (f, t))| ForecastCase::new("T2m", d0 + chrono::Duration::days(k as i64), 2, 3, f, t).unwrap())
        .collect()
}

fn random_cases(rng: &mut ChaCha8Rng, n: usize, map: impl Fn(f64, &mut ChaCha8Rng) -> f64) -> Vec<ForecastCase> {
    let pairs = (0..n)
        .map(|_| {
            let f: Vec<f64> = (0..12).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let t: Vec<f64> = f.iter().map(|v| map(*v, rng)).collect();
            (f, t)
        })
        .collect();
    cases_from(pairs)
}

#[test]
fn linear_identity_and_offset() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let same = random_cases(&mut rng, 6, |f, _| f);
    let m = GridwiseLinear::fit(&same).unwrap();
    assert!(m.slope.iter().all(|a| (a - 1.0).abs() < 1e-12));
    assert!(m.intercept.iter().all(|b| b.abs() < 1e-12));
    for c in &same {
        let out = m.apply(c).unwrap();
        assert!(out.iter().zip(&c.forecast).all(|(a, b)| (a - b).abs() < 1e-12));
    }
    let plus3 = random_cases(&mut rng, 6, |f, _| f + 3.0);
    let m = GridwiseLinear::fit(&plus3).unwrap();
    assert!(m.slope.iter().all(|a| (a - 1.0).abs() < 1e-12));
    assert!(m.intercept.iter().all(|b| (b - 3.0).abs() < 1e-12));
    assert!(matches!(GridwiseLinear::fit(&[]), Err(Error::Contract(_))));
}

#[test]
fn linear_matches_normal_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cases = random_cases(&mut rng, 40, |f, r| 0.7 * f - 1.0 + r.gen_range(-1.0..1.0));
    let m = GridwiseLinear::fit(&cases).unwrap();
    for p in 0..12 {
        let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for c in &cases {
            let (x, y) = (c.forecast[p], c.truth[p]);
            n += 1.0;
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        // [n sx; sx sxx] [b; a] = [sy; sxy]
        let det = n * sxx - sx * sx;
        let a = (n * sxy - sx * sy) / det;
        let b = (sxx * sy - sx * sxy) / det;
        assert!((m.slope[p] - a).abs() < 1e-10, "slope {} vs {a}", m.slope[p]);
        assert!((m.intercept[p] - b).abs() < 1e-10);
    }
    let before: f64 = cases.iter().map(|c| mse(&c.forecast, &c.truth).unwrap()).sum();
    let after: f64 = cases.iter().map(|c| mse(&m.apply(c).unwrap(), &c.truth).unwrap()).sum();
    assert!(after <= before);
}

#[test]
fn linear_degenerate_points_fall_back_to_mean_bias() {
    let pairs = (0..4)
        .map(|k| {
            let mut f = vec![5.0; 12];
            f[0] = k as f64;
            let t: Vec<f64> = (0..12).map(|p| f[p] + 0.5 + k as f64 * 0.1).collect();
            (f, t)
        })
        .collect();
    let m = GridwiseLinear::fit(&cases_from(pairs)).unwrap();
    assert_eq!(m.degenerate, 11);
    assert_eq!(m.slope[1], 1.0);
    assert!((m.intercept[1] - 0.65).abs() < 1e-12);
    assert!(m.slope.iter().chain(&m.intercept).all(|v| v.is_finite()));
}

#[test]
fn baseline_containers_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lin = BaselineState::Linear(GridwiseLinear::fit(&random_cases(&mut rng, 5, |f, r| f * 1.1 + r.gen_range(0.0..0.2))).unwrap());
    let bytes = lin.encode().unwrap();
    assert_eq!(&bytes[..4], b"BASL");
    assert_eq!(BaselineState::decode(&bytes).unwrap(), lin);
    let mut bad = bytes.clone();
    bad[20] ^= 1;
    assert!(matches!(BaselineState::decode(&bad), Err(Error::Format { .. })));
    assert!(BaselineState::decode(&bytes[..bytes.len() - 4]).is_err());

    let mut cfg = ExperimentConfig::standard().acausal;
    cfg.leads = 3;
    let model = AcausalModel::new(cfg, 5).unwrap();
    let spec = Benchmark::build(tiny_bench()).unwrap().normalizer(NormKind::Static).unwrap().spec();
    let ac = BaselineState::Acausal {
        variable: "T2m".into(),
        model,
        normalization: spec,
        training: Default::default(),
    };
    assert_eq!(BaselineState::decode(&ac.encode().unwrap()).unwrap(), ac);
    assert!(ac.handle(None).is_ok());
}

#[test]
fn untrained_acausal_model_is_identity() {
    let cfg = AcausalConfig {
        leads: 4,
        hidden: 5,
        kernel: 3,
        lat: 3,
        lon: 5,
        lon_wrap: true,
    };
    let m = AcausalModel::new(cfg.clone(), 1).unwrap();
    assert_eq!(m.store().scalar_count(), cfg.param_count());
    let z: Vec<f64> = (0..60).map(|k| (k as f64 * 0.37).sin()).collect();
    assert_eq!(m.predict(&z).unwrap(), z);
    assert_eq!(m.fixed_leads(), Some(4));
    assert!(matches!(m.predict(&z[..45]), Err(Error::Dimension(_))));
    assert!(matches!(AcausalModel::new(AcausalConfig { kernel: 2, ..cfg }, 1), Err(Error::Config(_))));
}

#[test]
fn raw_passthrough_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cases = random_cases(&mut rng, 2, |f, _| f + 1.0);
    let raw = raw_passthrough();
    assert!(raw.causal_claim);
    assert_eq!(raw.apply(&cases[0]).unwrap(), cases[0].forecast);
    for k in 1..=2 {
        assert_eq!(perturb_probe(&raw, &cases[1], k, 1.0).unwrap().verdict, Verdict::Causal);
    }
}

fn tiny_bench() -> BenchmarkConfig {
    let mut b = BenchmarkConfig::standard();
    b.synth.lat = 4;
    b.synth.lon = 8;
    b.synth.start_year = 1999;
    b.synth.end_year = 2003;
    b.test_years = vec![2001];
    b.train_stride_days = 6;
    b.val_stride_days = 10;
    b
}

#[test]
fn trained_acausal_baseline_beats_raw_and_leaks() {
    let mut exp = ExperimentConfig::standard();
    exp.train.epochs = 6;
    exp.train.adam.learning_rate = 3e-3;
    exp.benchmark = tiny_bench();
    let runner = Runner::new(exp).unwrap();
    let bench = &runner.bench;
    let run = runner.acausal(NormKind::Dynamic, 7, 1).unwrap();
    assert!(!run.handle.causal_claim);
    let recs = bench.evaluate(&[&raw_passthrough(), &run.handle], 7, SkillOptions::default()).unwrap();
    let (raw, acausal) = (mean_rmse(&recs, "raw", 3..=5), mean_rmse(&recs, "acausal-conv", 3..=5));
    assert!(acausal < raw, "acausal {acausal} raw {raw}");
    let probe = perturb_probe(&run.handle, &bench.test[0], 7, 1.0).unwrap();
    assert_eq!(probe.verdict, Verdict::Acausal);
    assert!(probe.max_abs_delta[..6].iter().any(|d| *d > 1e-6));
}
