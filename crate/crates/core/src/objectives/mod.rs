//! Concrete objectives, datasets, samplers and derivative checks.

pub mod dataset;
pub mod fdcheck;
pub mod mlp;
pub mod sampler;
pub mod teacher;
pub mod testfns;

pub use dataset::{libsvm_parse, Dataset};
pub use fdcheck::{finite_difference_check, FdReport};
pub use mlp::{MlpProblem, MlpSpec};
pub use sampler::{epoch_partition_sampler, Sampler, SamplingMode};
pub use teacher::{teacher_generate, TeacherSpec, WeightScale};
pub use testfns::CubicFamily;
