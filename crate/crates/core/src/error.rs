use alloc::string::String;

use crate::model::{ContainerId, HostId, VmId};

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown host `{0}`")]
    UnknownHost(HostId),

    #[error("unknown vm `{0}`")]
    UnknownVm(VmId),

    #[error("unknown container `{0}`")]
    UnknownContainer(ContainerId),

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("stale move: `{subject}` is not at `{expected}`")]
    StaleMove { subject: String, expected: String },

    #[error("move of `{0}` has identical source and target")]
    NoOpMove(String),

    #[error("move rejected: `{target}` would hold {needed_mb} MB over a cap of {cap_mb} MB")]
    RejectedMove {
        target: String,
        needed_mb: u64,
        cap_mb: f64,
    },

    #[error("instance has {items} items, the exact solver accepts at most {max}")]
    InstanceTooLarge { items: usize, max: usize },

    #[error("item of {size_mb} MB exceeds the usable bin capacity of {cap_mb} MB")]
    Infeasible { size_mb: u64, cap_mb: f64 },

    #[error("host `{host}` is not overloaded (used fraction {used_fraction})")]
    NotOverloaded { host: HostId, used_fraction: f64 },

    #[error("migration plan is not committed")]
    Uncommitted,

    #[error("report integrity: {0}")]
    Integrity(String),
}
