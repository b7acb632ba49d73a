//! Lexicostatistical phylogenetics for the Malagasy dialect dataset:
//! normalized Levenshtein distances, UPGMA/NJ trees on separation times,
//! spectral embedding with radial dating, and diversity-based homeland
//! inference.

pub mod corpus;
pub mod error;
pub mod fixtures;
pub mod homeland;
pub mod lexdist;
pub mod phylo;
pub mod sca;
pub mod util;

pub use corpus::{DistanceMatrix, Doculect, GeoPoint, GeoTable, Scale, WordList};
pub use error::{Error, Result};
pub use homeland::{DiversityReport, GeoRegression};
pub use lexdist::{ldn, levenshtein};
pub use phylo::{PhyloTree, TimeScale, UnrootedTree};
pub use sca::{ComponentRanking, DatingResult, EmbedConfig, RadialFit, ScaEmbedding};
