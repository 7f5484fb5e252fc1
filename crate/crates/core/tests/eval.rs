use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resa::climnorm::{fit_climatology, NormKind, Normalizer};
use resa::eval::{acc, acc_weighted, area_weights, bias_map, mean_rmse, rmse, rmse_weighted, skill_csv, skill_table, SkillOptions, SKILL_HEADER};
use resa::grid::synth::{SynthConfig, SynthDataset};
use resa::grid::ForecastCase;
use resa::Error;

fn rmse_oracle(p: &[f64], t: &[f64], ni: usize, nj: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..ni {
        for j in 0..nj {
            let d = p[i * nj + j] - t[i * nj + j];
            s += d * d;
        }
    }
    (s / (ni * nj) as f64).sqrt()
}

fn acc_oracle(p: &[f64], t: &[f64], c: &[f64], ni: usize, nj: usize) -> f64 {
    let (mut num, mut a2, mut b2) = (0.0, 0.0, 0.0);
    for i in 0..ni {
        for j in 0..nj {
            let k = i * nj + j;
            num += (p[k] - c[k]) * (t[k] - c[k]);
            a2 += (p[k] - c[k]).powi(2);
        }
    }
    for i in 0..ni {
        for j in 0..nj {
            let k = i * nj + j;
            b2 += (t[k] - c[k]).powi(2);
        }
    }
    num / (a2.sqrt() * b2.sqrt())
}

#[test]
fn rmse_and_acc_match_loop_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let (ni, nj) = (rng.gen_range(1..8), rng.gen_range(1..8));
        let n = ni * nj;
        let mut field = |s: f64| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-s..s)).collect() };
        let (p, t, c) = (field(5.0), field(5.0), field(1.0));
        assert!((rmse(&p, &t).unwrap() - rmse_oracle(&p, &t, ni, nj)).abs() < 1e-12);
        assert!((acc(&p, &t, &c).unwrap().value - acc_oracle(&p, &t, &c, ni, nj)).abs() < 1e-12);
    }
}

#[test]
fn rmse_trivial_cases_and_errors() {
    let a = vec![280.0, 281.5, 279.25, 300.0];
    assert_eq!(rmse(&a, &a).unwrap(), 0.0);
    let shifted: Vec<f64> = a.iter().map(|v| v - 1.75).collect();
    assert!((rmse(&shifted, &a).unwrap() - 1.75).abs() < 1e-12);
    assert_eq!(rmse(&a, &shifted).unwrap(), rmse(&shifted, &a).unwrap());
    assert!(matches!(rmse(&a, &a[..3]), Err(Error::Dimension(_))));
    assert!(matches!(acc(&a, &a, &a[..2]), Err(Error::Dimension(_))));
}

#[test]
fn acc_sign_scale_and_degenerate() {
    let clim = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let anom = [0.3, -1.2, 0.5, 2.0, -0.1, 0.0];
    let truth: Vec<f64> = clim.iter().zip(&anom).map(|(c, a)| c + a).collect();
    let neg: Vec<f64> = clim.iter().zip(&anom).map(|(c, a)| c - a).collect();
    assert!((acc(&truth, &truth, &clim).unwrap().value - 1.0).abs() < 1e-12);
    assert!((acc(&neg, &truth, &clim).unwrap().value + 1.0).abs() < 1e-12);

    let pred: Vec<f64> = clim.iter().zip([0.1, 0.2, -0.4, 1.0, 0.3, -0.2]).map(|(c, a)| c + a).collect();
    let base = acc(&pred, &truth, &clim).unwrap().value;
    let scale = |f: &[f64], k: f64| -> Vec<f64> { f.iter().zip(&clim).map(|(v, c)| c + k * (v - c)).collect() };
    assert!((acc(&scale(&pred, 3.0), &scale(&truth, 3.0), &clim).unwrap().value - base).abs() < 1e-12);
    assert!((acc(&scale(&pred, -1.0), &truth, &clim).unwrap().value + base).abs() < 1e-12);

    let flat = acc(&clim, &truth, &clim).unwrap();
    assert!(flat.degenerate);
    assert_eq!(flat.value, 0.0);
}

#[test]
fn weighted_variants_reduce_to_unweighted() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (p, t, c): (Vec<f64>, Vec<f64>, Vec<f64>) = (
        (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        (0..32).map(|_| rng.gen_range(-0.1..0.1)).collect(),
    );
    let ones = vec![1.0; 32];
    assert!((rmse_weighted(&p, &t, &ones).unwrap() - rmse(&p, &t).unwrap()).abs() < 1e-12);
    assert!((acc_weighted(&p, &t, &c, &ones).unwrap().value - acc(&p, &t, &c).unwrap().value).abs() < 1e-12);
    let w = area_weights(4, 8);
    assert!(w.iter().all(|v| *v > 0.0 && *v <= 1.0));
    assert!(w[0] < w[8]);
    assert_eq!(w[0], w[7]);
}

fn case(init: NaiveDate, forecast: Vec<f64>, truth: Vec<f64>) -> ForecastCase {
    ForecastCase::new("T2m", init, 1, 2, forecast, truth).unwrap()
}

#[test]
fn bias_map_cases() {
    let d = NaiveDate::from_ymd_opt(2001, 3, 1).unwrap();
    let truth = vec![1.0, 2.0, 3.0, 4.0];
    let perfect = case(d, truth.clone(), truth.clone());
    assert_eq!(bias_map(&[perfect]).unwrap(), vec![0.0, 0.0]);
    let plus2 = case(d, truth.iter().map(|v| v + 2.0).collect(), truth.clone());
    assert_eq!(bias_map(&[plus2.clone(), plus2]).unwrap(), vec![2.0, 2.0]);
    assert!(matches!(bias_map(&[]), Err(Error::Contract(_))));

    let ds = SynthDataset::generate(
        SynthConfig {
            lat: 8,
            lon: 16,
            start_year: 2000,
            end_year: 2001,
            ..SynthConfig::t2m()
        },
        3,
    )
    .unwrap();
    let cases = ds.cases(&ds.schedule(1)).unwrap();
    let map = bias_map(&cases).unwrap();
    let mask = ds.region_mask();
    let inside: Vec<f64> = map.iter().zip(mask).filter(|(_, m)| **m > 0.0).map(|(v, _)| *v).collect();
    let mean = inside.iter().sum::<f64>() / inside.len() as f64;
    // Composite over leads 1–7 of b·√(t/7).
    let growth = (1..=7).map(|t| (t as f64 / 7.0).sqrt()).sum::<f64>() / 7.0;
    let b = ds.config().bias.regional_amplitude;
    assert!((mean - b * growth).abs() < 0.25 * b.abs(), "region mean {mean} expected {}", b * growth);
}

fn synthetic() -> (SynthDataset, Vec<ForecastCase>) {
    let ds = SynthDataset::generate(
        SynthConfig {
            lat: 4,
            lon: 8,
            start_year: 2000,
            end_year: 2002,
            ..SynthConfig::t2m()
        },
        21,
    )
    .unwrap();
    let cases = ds.cases(&ds.month_starts(&[2001])).unwrap();
    (ds, cases)
}

#[test]
fn skill_table_single_case_equals_direct_metrics() {
    let (ds, cases) = synthetic();
    let clim = fit_climatology(ds.truth(), 31, 1e-3).unwrap();
    let one = vec![cases[0].clone()];
    let recs = skill_table(&[("raw".into(), one.clone())], &clim, SkillOptions::default()).unwrap();
    assert_eq!(recs.len(), one[0].leads());
    for r in &recs {
        let t = r.lead_days - 1;
        let c = &one[0];
        assert_eq!(r.n_cases, 1);
        assert!((r.rmse - rmse(c.forecast_lead(t), c.truth_lead(t)).unwrap()).abs() < 1e-12);
        assert!((r.acc - acc(c.forecast_lead(t), c.truth_lead(t), clim.mu_at(c.valid_date(t))).unwrap().value).abs() < 1e-12);
    }
    let csv = skill_csv(&recs);
    assert!(csv.starts_with(SKILL_HEADER));
    assert_eq!(csv.lines().count(), recs.len() + 1);
}

#[test]
fn skill_table_perfect_corrector_and_mismatch() {
    let (ds, cases) = synthetic();
    let clim = fit_climatology(ds.truth(), 31, 1e-3).unwrap();
    let perfect: Vec<ForecastCase> = cases.iter().map(|c| c.with_forecast(c.truth.clone()).unwrap()).collect();
    let recs = skill_table(&[("raw".into(), cases.clone()), ("perfect".into(), perfect)], &clim, SkillOptions::default()).unwrap();
    for r in recs.iter().filter(|r| r.model == "perfect") {
        assert_eq!(r.rmse, 0.0);
        assert!((r.acc - 1.0).abs() < 1e-12);
        assert_eq!(r.n_cases, 12);
    }
    assert!(mean_rmse(&recs, "raw", 1..=7) > 0.0);
    let fewer = cases[..5].to_vec();
    assert!(matches!(
        skill_table(&[("raw".into(), cases), ("short".into(), fewer)], &clim, SkillOptions::default()),
        Err(Error::Contract(_))
    ));
}

#[test]
fn skill_table_uses_month_starts_only() {
    let (ds, _) = synthetic();
    let clim = fit_climatology(ds.truth(), 31, 1e-3).unwrap();
    let mid = ds.cases(&[NaiveDate::from_ymd_opt(2001, 5, 14).unwrap()]).unwrap();
    assert!(matches!(skill_table(&[("raw".into(), mid)], &clim, SkillOptions::default()), Err(Error::Contract(_))));
}

#[test]
fn metrics_survive_normalization_round_trip() {
    let (ds, cases) = synthetic();
    let clim = fit_climatology(ds.truth(), 31, 1e-3).unwrap();
    for kind in [NormKind::Static, NormKind::Dynamic] {
        let norm = Normalizer::fit(kind, ds.truth(), 31, 1e-3).unwrap();
        let back: Vec<ForecastCase> = cases
            .iter()
            .map(|c| {
                let z = norm.normalize_case(c).unwrap();
                c.with_forecast(norm.denormalize_forecast(c, &z.forecast).unwrap()).unwrap()
            })
            .collect();
        let a = skill_table(&[("m".into(), cases.clone())], &clim, SkillOptions::default()).unwrap();
        let b = skill_table(&[("m".into(), back)], &clim, SkillOptions::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.rmse - y.rmse).abs() < 1e-8 && (x.acc - y.acc).abs() < 1e-8);
        }
    }
}
