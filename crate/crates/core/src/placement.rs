//! Bin-packing placement of containers on VMs and of VMs on hosts.
//!
//! Items are packed by RAM only. A bin accepts an item while
//! `used + item ≤ threshold × capacity`, compared in real arithmetic so that
//! e.g. 896 MB fits the 921.6 MB cap of a 1024 MB VM at 90%.
//!
//! Bins come from a [`BinSupply`]: a fixed list (items that fit nowhere end
//! up in `leftover`) optionally backed by a pool that opens fresh copies of a
//! template bin on demand. Figures that count "how many VMs are needed" use
//! pool mode.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Container, ContainerId, Host, HostId, ThresholdPolicy, Vm, VmId};
use crate::{Error, Result};

/// Something that occupies RAM in a bin.
pub trait Item {
    type Id: Ord + Clone + Debug;
    fn item_id(&self) -> &Self::Id;
    fn ram_mb(&self) -> u64;
}

/// Something with RAM capacity that items are packed into.
pub trait Bin: Clone {
    type Id: Ord + Clone + Debug;
    fn bin_id(&self) -> &Self::Id;
    fn id_str(&self) -> &str;
    fn capacity_mb(&self) -> u64;
    /// A fresh, empty copy of this bin under a new id.
    fn cloned_as(&self, id: String) -> Self;
}

impl Item for Container {
    type Id = ContainerId;
    fn item_id(&self) -> &ContainerId {
        &self.id
    }
    fn ram_mb(&self) -> u64 {
        self.spec.ram_mb
    }
}

impl Item for Vm {
    type Id = VmId;
    fn item_id(&self) -> &VmId {
        &self.id
    }
    fn ram_mb(&self) -> u64 {
        self.spec.ram_mb
    }
}

impl Bin for Vm {
    type Id = VmId;
    fn bin_id(&self) -> &VmId {
        &self.id
    }
    fn id_str(&self) -> &str {
        self.id.as_str()
    }
    fn capacity_mb(&self) -> u64 {
        self.spec.ram_mb
    }
    fn cloned_as(&self, id: String) -> Self {
        Vm {
            id: VmId(id),
            spec: self.spec,
        }
    }
}

impl Bin for Host {
    type Id = HostId;
    fn bin_id(&self) -> &HostId {
        &self.id
    }
    fn id_str(&self) -> &str {
        self.id.as_str()
    }
    fn capacity_mb(&self) -> u64 {
        self.spec.ram_mb
    }
    fn cloned_as(&self, id: String) -> Self {
        Host {
            id: HostId(id),
            spec: self.spec,
            max_power_w: self.max_power_w,
            active: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Pool<B> {
    pub template: B,
    /// Opened bins are named `{id_prefix}{serial:03}`.
    pub id_prefix: String,
}

/// Bins available to a placement run.
#[derive(Debug, Clone)]
pub struct BinSupply<B> {
    pub bins: Vec<B>,
    pub pool: Option<Pool<B>>,
}

impl<B: Bin> BinSupply<B> {
    /// Exactly these bins; unplaceable items are reported as leftover.
    pub fn fixed(bins: Vec<B>) -> Self {
        Self { bins, pool: None }
    }

    /// An unbounded pool of copies of `template`, initially empty.
    pub fn pool(template: B, id_prefix: impl Into<String>) -> Self {
        Self {
            bins: Vec::new(),
            pool: Some(Pool {
                template,
                id_prefix: id_prefix.into(),
            }),
        }
    }

    /// `bins` first, then copies of `template` when none of them fits.
    pub fn extendable(bins: Vec<B>, template: B, id_prefix: impl Into<String>) -> Self {
        Self {
            bins,
            pool: Some(Pool {
                template,
                id_prefix: id_prefix.into(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult<I: Item, B: Bin> {
    pub placement: BTreeMap<I::Id, B::Id>,
    /// Distinct bins holding at least one item.
    pub bins_used: usize,
    /// Items that fit nowhere, in the order they were considered.
    pub leftover: Vec<I::Id>,
    /// Every bin known to the run: the supplied ones, then any opened from the pool.
    pub bins: Vec<B>,
}

pub type ContainerPlacement = PlacementResult<Container, Vm>;
pub type VmPlacement = PlacementResult<Vm, Host>;

impl<I: Item, B: Bin> PlacementResult<I, B> {
    /// Bins that received at least one item, in supply order.
    pub fn used_bins(&self) -> impl Iterator<Item = &B> {
        self.bins
            .iter()
            .filter(|b| self.placement.values().any(|id| id == b.bin_id()))
    }
}

struct Packer<'a, B: Bin> {
    bins: Vec<B>,
    used: Vec<u64>,
    pool: Option<&'a Pool<B>>,
    serial: usize,
    policy: ThresholdPolicy,
}

impl<'a, B: Bin> Packer<'a, B> {
    fn new(supply: &'a BinSupply<B>, policy: ThresholdPolicy) -> Self {
        Self {
            used: alloc::vec![0; supply.bins.len()],
            bins: supply.bins.clone(),
            pool: supply.pool.as_ref(),
            serial: supply.bins.len(),
            policy,
        }
    }

    fn fits(&self, idx: usize, ram: u64) -> bool {
        self.policy
            .fits(self.used[idx], ram, self.bins[idx].capacity_mb())
    }

    fn first_fit(&self, ram: u64) -> Option<usize> {
        (0..self.bins.len()).find(|&i| self.fits(i, ram))
    }

    /// Opens a pool bin if the pool exists and an empty template can take `ram`.
    fn open(&mut self, ram: u64) -> Option<usize> {
        let pool = self.pool?;
        if !self.policy.fits(0, ram, pool.template.capacity_mb()) {
            return None;
        }
        let id = loop {
            self.serial += 1;
            let candidate = format!("{}{:03}", pool.id_prefix, self.serial);
            if !self.bins.iter().any(|b| b.id_str() == candidate) {
                break candidate;
            }
        };
        self.bins.push(pool.template.cloned_as(id));
        self.used.push(0);
        Some(self.bins.len() - 1)
    }

    fn finish<I: Item>(self, assigned: Vec<(&I, Option<usize>)>) -> PlacementResult<I, B> {
        let mut placement = BTreeMap::new();
        let mut leftover = Vec::new();
        for (item, slot) in assigned {
            match slot {
                Some(i) => {
                    placement.insert(item.item_id().clone(), self.bins[i].bin_id().clone());
                }
                None => leftover.push(item.item_id().clone()),
            }
        }
        let bins_used = self.used.iter().filter(|&&u| u > 0).count();
        PlacementResult {
            placement,
            bins_used,
            leftover,
            bins: self.bins,
        }
    }
}

/// Items sorted by RAM descending, equal sizes by ascending id.
fn decreasing<I: Item>(items: &[I]) -> Vec<&I> {
    let mut order: Vec<&I> = items.iter().collect();
    order.sort_by(|a, b| {
        b.ram_mb()
            .cmp(&a.ram_mb())
            .then_with(|| a.item_id().cmp(b.item_id()))
    });
    order
}

/// First-fit decreasing: each item, largest first, goes into the first bin
/// (in supply order) with room under the threshold.
pub fn ffd_place<I: Item, B: Bin>(
    items: &[I],
    supply: &BinSupply<B>,
    policy: ThresholdPolicy,
) -> PlacementResult<I, B> {
    let mut packer = Packer::new(supply, policy);
    let mut assigned = Vec::with_capacity(items.len());
    for item in decreasing(items) {
        // Zero-size items would not register as using a bin; sizes are >= 1
        // for every model type.
        let ram = item.ram_mb();
        let slot = packer.first_fit(ram).or_else(|| packer.open(ram));
        if let Some(i) = slot {
            packer.used[i] += ram;
        }
        assigned.push((item, slot));
    }
    packer.finish(assigned)
}

/// Random baseline: items in input order, each into a bin drawn uniformly
/// from those with room. A new pool bin is opened only when no existing bin
/// fits. Deterministic for a given seed.
pub fn random_place<I: Item, B: Bin>(
    items: &[I],
    supply: &BinSupply<B>,
    policy: ThresholdPolicy,
    seed: u64,
) -> PlacementResult<I, B> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut packer = Packer::new(supply, policy);
    let mut assigned = Vec::with_capacity(items.len());
    let mut candidates = Vec::new();
    for item in items {
        let ram = item.ram_mb();
        candidates.clear();
        candidates.extend((0..packer.bins.len()).filter(|&i| packer.fits(i, ram)));
        let slot = if candidates.is_empty() {
            packer.open(ram)
        } else {
            Some(candidates[rng.random_range(0..candidates.len())])
        };
        if let Some(i) = slot {
            packer.used[i] += ram;
        }
        assigned.push((item, slot));
    }
    packer.finish(assigned)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementMode {
    Ffd,
    Random,
}

/// VMs (sized by nominal RAM) onto hosts, with the same contracts as
/// [`ffd_place`] and [`random_place`].
pub fn place_vms_on_hosts(
    vms: &[Vm],
    hosts: &BinSupply<Host>,
    policy: ThresholdPolicy,
    mode: PlacementMode,
    seed: u64,
) -> VmPlacement {
    match mode {
        PlacementMode::Ffd => ffd_place(vms, hosts, policy),
        PlacementMode::Random => random_place(vms, hosts, policy, seed),
    }
}

/// `ceil(x)` for finite `x ≥ 0`.
pub(crate) fn ceil_nonneg(x: f64) -> u64 {
    let t = x as u64;
    if (t as f64) < x {
        t + 1
    } else {
        t
    }
}

/// Minimum number of bins: `ceil(total / (capacity × threshold))`.
pub fn lower_bound(total_item_mb: u64, bin_capacity_mb: u64, threshold: f64) -> Result<u64> {
    if bin_capacity_mb == 0 {
        return Err(Error::Domain("bin capacity must be positive".into()));
    }
    let policy = ThresholdPolicy::new(threshold)?;
    Ok(ceil_nonneg(
        total_item_mb as f64 / policy.cap(bin_capacity_mb),
    ))
}

/// A one-dimensional bin-packing instance for the exact solver.
#[derive(Debug, Clone, PartialEq)]
pub struct BinPackInstance {
    pub item_sizes: Vec<u64>,
    pub bin_capacity_mb: u64,
    pub threshold: f64,
}

pub const MAX_EXACT_ITEMS: usize = 14;

/// Exact minimum bin count by branch and bound.
///
/// Items are tried largest first; bins with equal loads are interchangeable,
/// so only the first of each load is explored.
pub fn optimal_bins(instance: &BinPackInstance) -> Result<usize> {
    let policy = ThresholdPolicy::new(instance.threshold)?;
    let n = instance.item_sizes.len();
    if n > MAX_EXACT_ITEMS {
        return Err(Error::InstanceTooLarge {
            items: n,
            max: MAX_EXACT_ITEMS,
        });
    }
    let cap = instance.bin_capacity_mb;
    if let Some(&size_mb) = instance
        .item_sizes
        .iter()
        .find(|&&s| !policy.fits(0, s, cap))
    {
        return Err(Error::Infeasible {
            size_mb,
            cap_mb: policy.cap(cap),
        });
    }
    if n == 0 {
        return Ok(0);
    }
    let mut items = instance.item_sizes.clone();
    items.sort_unstable_by(|a, b| b.cmp(a));
    let total: u64 = items.iter().sum();
    let floor = ceil_nonneg((total as f64 / policy.cap(cap) - 1e-9).max(0.0)) as usize;

    struct Search<'a> {
        items: &'a [u64],
        cap: u64,
        policy: ThresholdPolicy,
        floor: usize,
        best: usize,
        loads: Vec<u64>,
    }

    impl Search<'_> {
        fn run(&mut self, i: usize) {
            if self.loads.len() >= self.best {
                return;
            }
            if i == self.items.len() {
                self.best = self.loads.len();
                return;
            }
            let size = self.items[i];
            for j in 0..self.loads.len() {
                if self.loads[..j].contains(&self.loads[j]) {
                    continue;
                }
                if self.policy.fits(self.loads[j], size, self.cap) {
                    self.loads[j] += size;
                    self.run(i + 1);
                    self.loads[j] -= size;
                    if self.best <= self.floor {
                        return;
                    }
                }
            }
            if self.loads.len() + 1 < self.best {
                self.loads.push(size);
                self.run(i + 1);
                self.loads.pop();
            }
        }
    }

    let mut search = Search {
        items: &items,
        cap,
        policy,
        floor,
        best: n,
        loads: Vec::with_capacity(n),
    };
    search.run(0);
    Ok(search.best)
}
