//! Multimodal, multi-layered latent Dirichlet allocation over behavioural
//! block data, with the three social-comparison hierarchies and their
//! evaluation.

pub mod composition;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod mlda;
pub mod models;
pub mod tuning;

pub use composition::{ComposedModel, GraphSpec, NodeId, TrainingSchedule};
pub use corpus::{BlockDocument, ConditionLabel, Dataset, Modality, SimulatorParams};
pub use error::{Error, Result};
pub use models::{build_model, ArchitectureKind, ModelDefaults, WeightConfig};

/// `f(0..n)` in order, in parallel when the feature is enabled.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
