//! Day-of-year climatology, static and dynamic normalization, and
//! distribution diagnostics.

pub mod climatology;
pub mod normalize;
pub mod report;

pub use climatology::{fit_climatology, read_climatology, write_climatology, Climatology, DEFAULT_SIGMA_FLOOR, DEFAULT_WINDOW, SLOTS};
pub use normalize::{denormalize_dynamic, normalize_dynamic, normalize_static, NormKind, NormSpec, NormalizedCase, NormalizedSeries, Normalizer, StaticStats};
pub use report::{distribution_report, DistributionReport, Moments};
