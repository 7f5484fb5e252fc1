//! The standard synthetic benchmark and the training, correction and
//! ablation runs built on it.

pub mod ablation;
pub mod runner;

use std::collections::BTreeSet;
use std::sync::Arc;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

pub use ablation::{ablate_arch, ablate_norm, ArchAblation, ArchRow, NormAblation};
pub use runner::Runner;

use crate::audit::CorrectorHandle;
use crate::baselines::{acausal_handle, AcausalConfig, AcausalModel, BaselineState};
use crate::climnorm::{fit_climatology, Climatology, NormKind, NormalizedCase, Normalizer, DEFAULT_SIGMA_FLOOR, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::eval::{skill_table, SkillOptions, SkillRecord};
use crate::grid::{ForecastCase, GridSeries, SynthConfig, SynthDataset};
use crate::model::{Architecture, ModelMeta, ModelState, ReSAConfig, ReSAModel};
use crate::train::{train, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchmarkConfig {
    pub synth: SynthConfig,
    pub data_seed: u64,
    pub test_years: Vec<i32>,
    /// Defaults to the last non-test year.
    pub val_year: Option<i32>,
    pub train_stride_days: usize,
    pub val_stride_days: usize,
    pub window: usize,
    pub sigma_floor: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self::standard()
    }
}

impl BenchmarkConfig {
    /// 8×16 T2m grid over 1991–2011 with 1991, 2001 and 2011 held out.
    pub fn standard() -> Self {
        Self::standard_for(SynthConfig::t2m(), 20_240_601)
    }

    /// Same layout for the second variable.
    pub fn standard_u10() -> Self {
        Self::standard_for(SynthConfig::u10(), 20_240_602)
    }

    fn standard_for(base: SynthConfig, data_seed: u64) -> Self {
        Self {
            synth: SynthConfig {
                lat: 8,
                lon: 16,
                start_year: 1991,
                end_year: 2011,
                ..base
            },
            data_seed,
            test_years: vec![1991, 2001, 2011],
            val_year: None,
            train_stride_days: 25,
            val_stride_days: 7,
            window: DEFAULT_WINDOW,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
        }
    }
}

/// Split cases and the training climatology.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub config: BenchmarkConfig,
    pub val_year: i32,
    pub train_truth: GridSeries,
    pub climatology: Arc<Climatology>,
    pub train: Vec<ForecastCase>,
    pub val: Vec<ForecastCase>,
    /// Month-start initializations in the test years.
    pub test: Vec<ForecastCase>,
}

fn window_years(init: NaiveDate, leads: usize) -> BTreeSet<i32> {
    (0..=leads as i64).map(|d| (init + Duration::days(d)).year()).collect()
}

/// Which initializations go where: training windows avoid the test and
/// validation years entirely, validation windows stay in the validation
/// year and test windows in the test years.
struct Split {
    test: BTreeSet<i32>,
    val_year: i32,
    leads: usize,
}

impl Split {
    fn new(config: &BenchmarkConfig, years: &BTreeSet<i32>, leads: usize) -> Result<Self> {
        let test: BTreeSet<i32> = config.test_years.iter().copied().collect();
        if let Some(y) = test.iter().find(|y| !years.contains(y)) {
            return Err(Error::config(format!("test year {y} is not covered by the data")));
        }
        let train_years: Vec<i32> = years.iter().copied().filter(|y| !test.contains(y)).collect();
        if train_years.len() < 3 {
            return Err(Error::config("benchmark needs at least three non-test years"));
        }
        let val_year = match config.val_year {
            Some(y) if train_years.contains(&y) => y,
            Some(y) => return Err(Error::config(format!("validation year {y} is not a training year"))),
            None => *train_years.last().expect("nonempty"),
        };
        if config.train_stride_days == 0 || config.val_stride_days == 0 {
            return Err(Error::config("initialization strides must be positive"));
        }
        Ok(Self { test, val_year, leads })
    }

    fn all_in(&self, init: NaiveDate, keep: impl Fn(i32) -> bool) -> bool {
        window_years(init, self.leads).into_iter().all(keep)
    }

    fn is_train(&self, init: NaiveDate) -> bool {
        self.all_in(init, |y| !self.test.contains(&y) && y != self.val_year)
    }

    fn is_val(&self, init: NaiveDate) -> bool {
        self.all_in(init, |y| y == self.val_year)
    }

    fn is_test(&self, init: NaiveDate) -> bool {
        init.day() == 1 && self.all_in(init, |y| self.test.contains(&y))
    }
}

impl Benchmark {
    /// Generates the synthetic dataset and assembles the split.
    pub fn build(config: BenchmarkConfig) -> Result<Self> {
        let data = SynthDataset::generate(config.synth.clone(), config.data_seed)?;
        let years: BTreeSet<i32> = (config.synth.start_year..=config.synth.end_year).collect();
        let split = Split::new(&config, &years, config.synth.leads)?;
        let pick = |stride: usize, keep: &dyn Fn(NaiveDate) -> bool| -> Vec<NaiveDate> { data.schedule(stride).into_iter().filter(|d| keep(*d)).collect() };
        let train = data.cases(&pick(config.train_stride_days, &|d| split.is_train(d)))?;
        let val = data.cases(&pick(config.val_stride_days, &|d| split.is_val(d)))?;
        let test = data.cases(&pick(1, &|d| split.is_test(d)))?;
        Self::assemble(config, split, data.truth(), train, val, test)
    }

    /// Splits already loaded cases. Strides subsample the eligible
    /// initializations in date order; the synthetic settings in `config`
    /// are ignored apart from the lead count, which comes from the cases.
    pub fn from_dataset(config: BenchmarkConfig, truth: &GridSeries, cases: &[ForecastCase]) -> Result<Self> {
        let first = cases.first().ok_or_else(|| Error::config("dataset has no forecast cases"))?;
        let leads = first.leads();
        if cases.iter().any(|c| c.leads() != leads) {
            return Err(Error::dim("cases differ in lead count"));
        }
        let years: BTreeSet<i32> = truth.years().into_iter().collect();
        let split = Split::new(&config, &years, leads)?;
        let mut sorted: Vec<&ForecastCase> = cases.iter().collect();
        sorted.sort_by_key(|c| c.init);
        let pick = |stride: usize, keep: &dyn Fn(NaiveDate) -> bool| -> Vec<ForecastCase> {
            sorted.iter().filter(|c| keep(c.init)).step_by(stride).map(|c| (*c).clone()).collect()
        };
        let train = pick(config.train_stride_days, &|d| split.is_train(d));
        let val = pick(config.val_stride_days, &|d| split.is_val(d));
        let test = pick(1, &|d| split.is_test(d));
        let mut config = config;
        config.synth.variable = first.variable.clone();
        config.synth.lat = first.lat;
        config.synth.lon = first.lon;
        config.synth.leads = leads;
        Self::assemble(config, split, truth, train, val, test)
    }

    fn assemble(config: BenchmarkConfig, split: Split, truth: &GridSeries, train: Vec<ForecastCase>, val: Vec<ForecastCase>, test: Vec<ForecastCase>) -> Result<Self> {
        if train.len() < 2 || val.is_empty() || test.is_empty() {
            return Err(Error::config(format!(
                "insufficient data: {} train, {} validation, {} test cases",
                train.len(),
                val.len(),
                test.len()
            )));
        }
        let train_truth = truth.filter_years(|y| !split.test.contains(&y));
        let climatology = Arc::new(fit_climatology(&train_truth, config.window, config.sigma_floor)?);
        Ok(Self {
            config,
            val_year: split.val_year,
            train_truth,
            climatology,
            train,
            val,
            test,
        })
    }

    pub fn variable(&self) -> &str {
        &self.config.synth.variable
    }

    pub fn leads(&self) -> usize {
        self.config.synth.leads
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.config.synth.lat, self.config.synth.lon)
    }

    /// Static statistics come from the training-period truth; the dynamic
    /// normalizer shares the benchmark climatology.
    pub fn normalizer(&self, kind: NormKind) -> Result<Normalizer> {
        match kind {
            NormKind::Dynamic => Ok(Normalizer::Dynamic(self.climatology.clone())),
            NormKind::Static => Normalizer::fit(kind, &self.train_truth, self.config.window, self.config.sigma_floor),
        }
    }

    pub fn normalized(&self, norm: &Normalizer, cases: &[ForecastCase], leads: usize) -> Result<Vec<NormalizedCase>> {
        if leads == 0 || leads > self.leads() {
            return Err(Error::config(format!("horizon {leads} outside 1..={}", self.leads())));
        }
        cases.iter().map(|c| norm.normalize_case(&c.truncated(leads))).collect()
    }

    pub fn test_cases(&self, leads: usize) -> Vec<ForecastCase> {
        self.test.iter().map(|c| c.truncated(leads)).collect()
    }

    /// Skill of each corrector over the test cases truncated to `leads`.
    pub fn evaluate(&self, handles: &[&CorrectorHandle], leads: usize, options: SkillOptions) -> Result<Vec<SkillRecord>> {
        let cases = self.test_cases(leads);
        let runs: Vec<(String, Vec<ForecastCase>)> = handles
            .iter()
            .map(|h| Ok((h.model_id.clone(), h.correct_all(&cases)?)))
            .collect::<Result<_>>()?;
        skill_table(&runs, &self.climatology, options)
    }
}

/// Model, baseline and optimizer settings shared by all runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub benchmark: BenchmarkConfig,
    /// Benchmark for the fine-tuning target variable.
    pub transfer: BenchmarkConfig,
    pub model: ReSAConfig,
    pub acausal: AcausalConfig,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::standard()
    }
}

impl ExperimentConfig {
    pub fn standard() -> Self {
        let benchmark = BenchmarkConfig::standard();
        let (lat, lon) = (benchmark.synth.lat, benchmark.synth.lon);
        Self {
            transfer: BenchmarkConfig::standard_u10(),
            model: ReSAConfig {
                hidden: vec![8],
                lat,
                lon,
                ..ReSAConfig::default()
            },
            acausal: AcausalConfig {
                leads: benchmark.synth.leads,
                hidden: 8,
                lat,
                lon,
                ..AcausalConfig::default()
            },
            train: TrainConfig {
                epochs: 15,
                batch_size: 4,
                patience: None,
                ..TrainConfig::default()
            },
            seeds: vec![1, 2, 3],
            benchmark,
        }
    }
}

/// A trained ReSA-family model with its corrector.
#[derive(Clone, Debug)]
pub struct TrainedResa {
    pub state: ModelState,
    pub handle: CorrectorHandle,
    pub epochs_to_target: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct TrainedBaseline {
    pub state: BaselineState,
    pub handle: CorrectorHandle,
}

fn resa_handle(arch_id: &str, model: &ReSAModel, norm: Normalizer) -> CorrectorHandle {
    CorrectorHandle::from_model(arch_id, model.clone(), norm, true)
}

/// Ablation name of the variant `config` matches, or "custom-convlstm".
pub fn architecture_id(config: &ReSAConfig) -> &'static str {
    Architecture::ALL
        .into_iter()
        .find(|a| a.configure(config.clone()) == *config)
        .map_or("custom-convlstm", Architecture::name)
}

/// Trains one ReSA-family model over the first `leads` leads; `seed` sets
/// initialization and data order.
pub fn train_resa(bench: &Benchmark, model: &ReSAConfig, train_cfg: &TrainConfig, norm: NormKind, leads: usize, seed: u64) -> Result<TrainedResa> {
    let (lat, lon) = bench.grid();
    let config = ReSAConfig {
        lat,
        lon,
        ..model.clone()
    };
    let normalizer = bench.normalizer(norm)?;
    let train_set = bench.normalized(&normalizer, &bench.train, leads)?;
    let val_set = bench.normalized(&normalizer, &bench.val, leads)?;
    let cfg = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    let out = train(ReSAModel::new(config.clone(), seed)?, &train_set, &val_set, &cfg)?;
    let handle = resa_handle(architecture_id(&config), &out.best, normalizer.clone());
    Ok(TrainedResa {
        state: ModelState {
            model: out.best,
            meta: ModelMeta {
                variable: bench.variable().to_string(),
                normalization: normalizer.spec(),
                training: out.record,
            },
        },
        handle,
        epochs_to_target: out.epochs_to_target,
    })
}

/// Continues training `pretrained` on `bench`'s variable in the same kind
/// of normalization, refitted to the new variable.
pub fn finetune_resa(bench: &Benchmark, pretrained: &ModelState, train_cfg: &TrainConfig, seed: u64) -> Result<TrainedResa> {
    let (lat, lon) = bench.grid();
    if (pretrained.model.config().lat, pretrained.model.config().lon) != (lat, lon) {
        return Err(Error::dim("pretrained model grid differs from the fine-tuning benchmark"));
    }
    let normalizer = bench.normalizer(pretrained.meta.normalization.kind)?;
    let leads = bench.leads();
    let train_set = bench.normalized(&normalizer, &bench.train, leads)?;
    let val_set = bench.normalized(&normalizer, &bench.val, leads)?;
    let cfg = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    let out = crate::train::finetune(pretrained.model.clone(), &train_set, &val_set, &cfg)?;
    let handle = resa_handle(architecture_id(pretrained.model.config()), &out.best, normalizer.clone());
    Ok(TrainedResa {
        state: ModelState {
            model: out.best,
            meta: ModelMeta {
                variable: bench.variable().to_string(),
                normalization: normalizer.spec(),
                training: out.record,
            },
        },
        handle,
        epochs_to_target: out.epochs_to_target,
    })
}

/// Trains the lead-stacked acausal baseline with `leads` input channels.
pub fn train_acausal(bench: &Benchmark, config: &AcausalConfig, train_cfg: &TrainConfig, norm: NormKind, leads: usize, seed: u64) -> Result<TrainedBaseline> {
    let (lat, lon) = bench.grid();
    let config = AcausalConfig {
        leads,
        lat,
        lon,
        ..config.clone()
    };
    let normalizer = bench.normalizer(norm)?;
    let train_set = bench.normalized(&normalizer, &bench.train, leads)?;
    let val_set = bench.normalized(&normalizer, &bench.val, leads)?;
    let cfg = TrainConfig {
        seed,
        ..train_cfg.clone()
    };
    let out = train(AcausalModel::new(config, seed)?, &train_set, &val_set, &cfg)?;
    let handle = acausal_handle(out.best.clone(), normalizer.clone());
    Ok(TrainedBaseline {
        state: BaselineState::Acausal {
            variable: bench.variable().to_string(),
            model: out.best,
            normalization: normalizer.spec(),
            training: out.record,
        },
        handle,
    })
}
