pub mod audit;
pub mod autodiff;
pub mod baselines;
mod binio;
pub mod climnorm;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod grid;
pub mod model;
pub mod train;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/audit.md")]
    mod audit {}
}
