use resa::audit::{leadtime_experiment, perturb_probe, probe_sweep, seed_noise_band, CorrectorHandle, LeadtimeArch, Verdict, LEADTIME_HEADER};
use resa::climnorm::NormKind;
use resa::experiment::{BenchmarkConfig, ExperimentConfig, Runner};
use resa::model::{Architecture, ReSAConfig, ReSAModel, SequenceModel};
use resa::Error;

fn tiny_exp() -> ExperimentConfig {
    let mut exp = ExperimentConfig::standard();
    let mut b = BenchmarkConfig::standard();
    b.synth.lat = 4;
    b.synth.lon = 8;
    b.synth.start_year = 1999;
    b.synth.end_year = 2002;
    b.test_years = vec![2001];
    b.train_stride_days = 30;
    b.val_stride_days = 30;
    exp.benchmark = b;
    exp.train.epochs = 1;
    exp
}

/// Random-weight ReSA with nonzero head and attention so leads interact.
fn busy_resa(lat: usize, lon: usize, seed: u64) -> ReSAModel {
    let cfg = ReSAConfig {
        hidden: vec![4, 4],
        lat,
        lon,
        ..ReSAConfig::default()
    };
    let fresh = ReSAModel::new(cfg.clone(), seed).unwrap();
    let tensors = fresh
        .store()
        .iter()
        .map(|(_, p)| {
            let mut t = p.value.clone();
            if p.name.starts_with("head") || p.name == "attention.gamma" {
                t.data_mut().iter_mut().enumerate().for_each(|(k, v)| *v = 0.3 + 0.05 * k as f64);
            }
            (p.name.clone(), t)
        })
        .collect();
    ReSAModel::from_parts(cfg, tensors, fresh.running_stats().clone()).unwrap()
}

#[test]
fn resa_handle_is_exactly_causal() {
    let runner = Runner::new(tiny_exp()).unwrap();
    let bench = &runner.bench;
    let (lat, lon) = bench.grid();
    let handle = CorrectorHandle::from_model("resa", busy_resa(lat, lon, 3), bench.normalizer(NormKind::Dynamic).unwrap(), true);
    let case = &bench.test[2];
    let reports = probe_sweep(&handle, case, &[1.0, -1.0, 1e-3, -1e-3]).unwrap();
    assert_eq!(reports.len(), 28);
    for r in &reports {
        assert_eq!(r.verdict, Verdict::Causal, "k={} eps={}", r.lead, r.epsilon);
        assert!(r.max_abs_delta[..r.lead - 1].iter().all(|d| *d == 0.0));
        assert!(r.max_abs_delta[r.lead - 1] > 0.0);
    }
    let json = serde_json::to_value(&reports[5]).unwrap();
    assert_eq!(json["verdict"], "CAUSAL");
}

#[test]
fn probe_boundaries() {
    let runner = Runner::new(tiny_exp()).unwrap();
    let bench = &runner.bench;
    let leaky = CorrectorHandle::new("mean", false, |c| {
        let n = c.grid_len();
        let mut out = c.forecast.clone();
        let last = c.forecast_lead(c.leads() - 1).to_vec();
        for t in 0..c.leads() {
            for p in 0..n {
                out[t * n + p] += 0.1 * last[p];
            }
        }
        Ok(out)
    });
    let case = &bench.test[0];
    assert_eq!(perturb_probe(&leaky, case, 1, 1.0).unwrap().verdict, Verdict::Causal);
    let r = perturb_probe(&leaky, case, 7, 1.0).unwrap();
    assert_eq!(r.verdict, Verdict::Acausal);
    assert!((r.max_abs_delta[0] - 0.1).abs() < 1e-9);
    assert!(matches!(perturb_probe(&leaky, case, 0, 1.0), Err(Error::Contract(_))));
    assert!(matches!(perturb_probe(&leaky, case, 8, 1.0), Err(Error::Contract(_))));
    assert!(matches!(perturb_probe(&leaky, case, 2, 0.0), Err(Error::Contract(_))));
}

#[test]
fn leadtime_single_horizon_has_no_pairs() {
    let runner = Runner::new(tiny_exp()).unwrap();
    let m = leadtime_experiment(&runner, LeadtimeArch::Resa, &[3], 1).unwrap();
    assert_eq!(m.rows.len(), 3);
    assert!(m.pairs.is_empty());
    assert!(m.to_csv().starts_with(LEADTIME_HEADER));
    assert!(matches!(leadtime_experiment(&runner, LeadtimeArch::Resa, &[9], 1), Err(Error::Config(_))));
    assert!(matches!(leadtime_experiment(&runner, LeadtimeArch::Resa, &[], 1), Err(Error::Config(_))));
}

#[test]
fn leadtime_pairs_cover_shared_leads_and_reuse_runs() {
    let runner = Runner::new(tiny_exp()).unwrap();
    let m = leadtime_experiment(&runner, LeadtimeArch::AcausalBaseline, &[2, 3], 4).unwrap();
    assert_eq!(m.rows.len(), 5);
    assert_eq!(m.pairs.len(), 2);
    for p in &m.pairs {
        let d = (m.rmse(2, p.lead).unwrap() - m.rmse(3, p.lead).unwrap()).abs();
        assert_eq!(p.abs_diff, d);
    }
    let trained = runner.trained();
    let again = leadtime_experiment(&runner, LeadtimeArch::AcausalBaseline, &[3, 2], 4).unwrap();
    assert_eq!(runner.trained(), trained);
    assert_eq!(again.max_pair_diff(), m.max_pair_diff());
    let band = seed_noise_band(&runner, 2, (1, 2)).unwrap();
    assert!(band >= 0.0 && band.is_finite());
    assert!(matches!(seed_noise_band(&runner, 2, (1, 1)), Err(Error::Config(_))));
    assert!(runner.resa(Architecture::ResaConvLstm, NormKind::Dynamic, 2, 1).is_ok());
}
