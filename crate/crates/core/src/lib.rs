//! Multilabel ranking through univariate surrogate minimization.

pub mod dataio;
pub mod error;
pub mod experiment;
pub mod learners;
pub mod loss;
pub mod methods;
pub mod optim;
pub mod oracle;
pub mod rng;
pub mod synth;
pub mod wbr;

pub use error::{Error, Result};
pub use loss::{LabelVector, ScoreVector, SignedLabel, Surrogate, WeightKind, WeightSpec};
