//! Engines for a deterministic datacenter consolidation simulator.
//!
//! The crate models a three-level hierarchy (host → VM → container) where RAM
//! is the only placement constraint, and provides:
//!
//! * [`placement`]: first-fit decreasing and random placement of containers on
//!   VMs (and VMs on hosts), the RAM lower bound, and an exact bin-packing
//!   oracle.
//! * [`consolidation`]: coldspot draining by VM or container migration,
//!   hotspot distribution and admission control.
//! * [`timing`]: a parametric pre-copy / freeze-restore migration time model.
//! * [`metrics`]: power, SLA downtime budgets and run reports.
//! * [`broker`]: a small facade tying admission, monitoring and consolidation
//!   together.
//!
//! Everything here is `no_std` (with `alloc`) and free of IO.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod broker;
pub mod consolidation;
mod error;
pub mod metrics;
pub mod model;
pub mod placement;
pub mod timing;

pub use error::{Error, Result};
