//! Multimodal similarity search over a single fused proximity graph.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod index;
pub mod io;
pub mod rank;
pub mod search;
pub mod vector;
pub mod weights;

#[cfg(test)]
mod test_support;

pub use dataset::{JointSpace, MultiModalDataset, ObjectId, ObjectRef};
pub use error::{MstmError, Result};
pub use index::{build_fused_index, BuildParams, FusedIndex, GraphQualityReport};
pub use rank::Scored;
pub use search::{joint_search, JointSearcher, PruneResult, ScanOrder, SearchOutcome, SearchParams, SearchStats};
pub use vector::{inner_product, joint_similarity, sme, MultiModal, MultiModalQuery, MultiVector, WeightVector};
pub use weights::{train_weights, NegativeSampling, TrainConfig, TrainReport, TrainingPair};
pub use baselines::{brute_force_topk, je_search, mr_exact, mr_search, MergePolicy, MrIndexSet};
pub use eval::{compute_ground_truth, mean_sme, recall_at_k, run_bench, BenchConfig, BenchInputs, BenchReport, Framework, GroundTruth};
