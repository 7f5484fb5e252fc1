//! Gridded daily series, forecast cases, file I/O, dataset splits and the
//! synthetic generator.

pub mod aggregate;
pub mod dataset;
pub mod gridts;
pub mod series;
pub mod split;
pub mod synth;

pub use aggregate::{daily_average, ensemble_mean, SubdailySeries};
pub use dataset::{load_dataset, write_dataset, LoadedDataset, MANIFEST_FILE};
pub use gridts::{read_gridts, write_gridts};
pub use series::{date_from_days, days_since_epoch, doy_slot, ForecastCase, GridSeries};
pub use split::{decadal_split, DatasetManifest, DecadalSplit, FileRole, ManifestFile, DECADAL_TEST_YEARS};
pub use synth::{lead_growth, synth_generate, SynthConfig, SynthDataset};
