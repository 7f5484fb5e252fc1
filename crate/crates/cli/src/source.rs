use std::path::{Path, PathBuf};
use std::sync::Arc;

use resa::audit::CorrectorHandle;
use resa::baselines::{BaselineState, BASELINE_MAGIC};
use resa::climnorm::{read_climatology, Climatology};
use resa::experiment::{architecture_id, Benchmark, BenchmarkConfig};
use resa::grid::{load_dataset, ForecastCase, GridSeries, LoadedDataset, SynthDataset};
use resa::model::checkpoint::RESA_MAGIC;
use resa::model::{ModelState, SequenceModel};

use crate::config::RunConfig;
use crate::{config_error, CliResult, DataArgs};

/// Where a command's data comes from.
pub enum Source {
    Synthetic(BenchmarkConfig),
    Manifest { path: PathBuf, data: LoadedDataset, config: BenchmarkConfig },
}

impl Source {
    /// A manifest if given, else the configured synthetic benchmark whose
    /// variable matches (the primary one by default, or `default_transfer`).
    pub fn open(args: &DataArgs, cfg: &RunConfig, default_transfer: bool) -> CliResult<Self> {
        let exp = &cfg.experiment;
        match &args.manifest {
            Some(path) => {
                let variable = match &args.variable {
                    Some(v) => v.clone(),
                    None => {
                        let m = resa::grid::DatasetManifest::load(path)?;
                        let vars = m.variables();
                        match vars.as_slice() {
                            [one] => one.clone(),
                            _ => return Err(config_error(format!("manifest holds variables {vars:?}; pick one with --variable"))),
                        }
                    }
                };
                let data = load_dataset(path, &variable)?;
                let mut config = if default_transfer { exp.transfer.clone() } else { exp.benchmark.clone() };
                config.test_years = data.manifest.test_years.clone();
                Ok(Source::Manifest {
                    path: path.clone(),
                    data,
                    config,
                })
            }
            None => {
                let wanted = args.variable.as_deref();
                let config = match wanted {
                    None if default_transfer => exp.transfer.clone(),
                    None => exp.benchmark.clone(),
                    Some(v) if v == exp.benchmark.synth.variable => exp.benchmark.clone(),
                    Some(v) if v == exp.transfer.synth.variable => exp.transfer.clone(),
                    Some(v) => {
                        return Err(config_error(format!(
                            "no synthetic benchmark for variable {v:?} (configured: {}, {})",
                            exp.benchmark.synth.variable, exp.transfer.synth.variable
                        )))
                    }
                };
                Ok(Source::Synthetic(config))
            }
        }
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Source::Synthetic(_) => Vec::new(),
            Source::Manifest { path, data, .. } => {
                let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
                let mut v = vec![path.clone()];
                v.extend(data.manifest.files.iter().map(|f| base.join(&f.path)));
                v
            }
        }
    }

    pub fn benchmark(&self) -> CliResult<Benchmark> {
        Ok(match self {
            Source::Synthetic(c) => Benchmark::build(c.clone())?,
            Source::Manifest { data, config, .. } => Benchmark::from_dataset(config.clone(), &data.truth, &data.cases)?,
        })
    }

    /// Full truth and every available case.
    pub fn all_cases(&self) -> CliResult<(GridSeries, Vec<ForecastCase>, Vec<i32>)> {
        Ok(match self {
            Source::Synthetic(c) => {
                let ds = SynthDataset::generate(c.synth.clone(), c.data_seed)?;
                let cases = ds.cases(&ds.schedule(c.synth.init_stride_days))?;
                (ds.truth().clone(), cases, c.test_years.clone())
            }
            Source::Manifest { data, .. } => (data.truth.clone(), data.cases.clone(), data.manifest.test_years.clone()),
        })
    }
}

/// A checkpoint of either container kind.
pub enum Checkpoint {
    Resa(ModelState),
    Baseline(BaselineState),
}

impl Checkpoint {
    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| config_error(format!("checkpoint {}: {e}", path.display())))?;
        if bytes.starts_with(RESA_MAGIC) {
            Ok(Checkpoint::Resa(ModelState::decode(&bytes)?))
        } else if bytes.starts_with(BASELINE_MAGIC) {
            Ok(Checkpoint::Baseline(BaselineState::decode(&bytes)?))
        } else {
            Err(resa::Error::Format {
                offset: 0,
                message: format!("{} is neither a model nor a baseline checkpoint", path.display()),
            }
            .into())
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Checkpoint::Resa(m) => architecture_id(m.model.config()),
            Checkpoint::Baseline(b) => b.id(),
        }
    }

    pub fn grid_matches(&self, lat: usize, lon: usize) -> bool {
        match self {
            Checkpoint::Resa(m) => m.model.grid() == (lat, lon),
            Checkpoint::Baseline(BaselineState::Linear(l)) => (l.lat, l.lon) == (lat, lon),
            Checkpoint::Baseline(BaselineState::Acausal { model, .. }) => model.grid() == (lat, lon),
        }
    }

    pub fn handle(&self, clim: Arc<Climatology>) -> CliResult<CorrectorHandle> {
        Ok(match self {
            Checkpoint::Resa(m) => {
                let norm = m.meta.normalization.resolve(Some(clim))?;
                CorrectorHandle::from_model(self.id(), m.model.clone(), norm, true)
            }
            Checkpoint::Baseline(b) => b.handle(Some(clim))?,
        })
    }
}

/// `--climatology` if given, else the benchmark's training climatology.
pub fn climatology(path: Option<&PathBuf>, bench: &Benchmark) -> CliResult<Arc<Climatology>> {
    match path {
        Some(p) => Ok(Arc::new(read_climatology(p)?)),
        None => Ok(bench.climatology.clone()),
    }
}
