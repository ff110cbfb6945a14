//! Design engine: enumerates permanent-connection skeletons and clutch
//! triples for a fixed device placement, derives each design's realizable
//! mode set, screens out designs lacking a forward power-split mode or
//! engine-on backward driving, and dedups by exact mode-set signature.

use crate::combi::{binomial, unrank_combination};
use crate::dynamics::{assemble_full_dynamics, SystemModel};
use crate::modes::{
    build_clutch_catalog, derive_mode_on, ClutchCatalog, DerivedDynamics, DynamicsCache, Mode,
    ModeType,
};
use crate::planetary::{Configuration, Connection, Inertias, Node, TopologyError};
use crate::rational::frac_int;
use std::collections::HashMap;
use std::sync::Arc;
use thiserror::Error;

/// Size of the unrestricted design space: configurations times clutch and
/// permanent-connection choices (3 of each from the catalog).
pub fn count_design_space(n_conf: u64, catalog_size: u64) -> u128 {
    n_conf as u128 * binomial(catalog_size, 3) * binomial(catalog_size.saturating_sub(3), 3)
}

/// Number of device placements: ordered choices of 4 distinct nodes out of 9.
pub fn configuration_count() -> u128 {
    9 * 8 * 7 * 6
}

/// One design drawn from the restricted stream: three permanent connections
/// (PG1-PG2, PG2-PG3, then a free third) plus three clutch locations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignSpec {
    /// Position in the deterministic enumeration stream.
    pub index: u128,
    pub permanent: [Connection; 3],
    pub clutches: [Connection; 3],
}

#[derive(Debug, Error)]
pub enum DesignError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error("the restricted design stream needs a 3-planetary train")]
    NeedsThreePg,
    #[error("design index {0} out of range")]
    IndexOutOfRange(u128),
    #[error("a design carries at most {max} clutches, got {got}")]
    TooManyClutches { max: usize, got: usize },
}

/// The restricted design space for one device placement, with its catalog.
#[derive(Debug, Clone)]
pub struct DesignSpace {
    pub base: Configuration,
    pub inertias: Inertias,
    pub catalog: ClutchCatalog,
}

impl DesignSpace {
    pub fn new(base: Configuration, inertias: Inertias) -> Result<Self, DesignError> {
        if base.train.n_pg() != 3 {
            return Err(DesignError::NeedsThreePg);
        }
        base.validate()?;
        inertias.validate(base.train.n_nodes())?;
        let catalog = build_clutch_catalog(3, base.placement.output);
        Ok(Self {
            base,
            inertias,
            catalog,
        })
    }

    /// 3*3 node choices per inter-set connection, times the free third
    /// connection (catalog minus the two used).
    pub fn skeleton_count(&self) -> usize {
        81 * (self.catalog.len() - 2)
    }

    pub fn triples_per_skeleton(&self) -> u128 {
        binomial(self.catalog.len() as u64 - 3, 3)
    }

    pub fn total_designs(&self) -> u128 {
        self.skeleton_count() as u128 * self.triples_per_skeleton()
    }

    /// The permanent-connection skeleton at `skeleton_idx`, with the
    /// remaining 35 clutch candidates in catalog order.
    pub fn skeleton(&self, skeleton_idx: usize) -> Skeleton {
        assert!(skeleton_idx < self.skeleton_count());
        let pool = self.catalog.len() - 2;
        let e = skeleton_idx % pool;
        let mut r = skeleton_idx / pool;
        let d = r % 3;
        r /= 3;
        let c = r % 3;
        r /= 3;
        let b = r % 3;
        let a = r / 3;
        let conn1 = Connection::pair(Node(a), Node(3 + b));
        let conn2 = Connection::pair(Node(3 + c), Node(6 + d));
        let third_pool: Vec<Connection> = self
            .catalog
            .locations
            .iter()
            .copied()
            .filter(|cn| *cn != conn1 && *cn != conn2)
            .collect();
        debug_assert_eq!(third_pool.len(), pool);
        let conn3 = third_pool[e];
        let remaining: Vec<Connection> = third_pool.into_iter().filter(|cn| *cn != conn3).collect();
        Skeleton {
            index: skeleton_idx,
            permanent: [conn1, conn2, conn3],
            remaining,
        }
    }

    /// The design at a global stream index.
    pub fn spec_at(&self, index: u128) -> Result<DesignSpec, DesignError> {
        if index >= self.total_designs() {
            return Err(DesignError::IndexOutOfRange(index));
        }
        let per = self.triples_per_skeleton();
        let skeleton = self.skeleton((index / per) as usize);
        let triple = unrank_combination(skeleton.remaining.len() as u64, 3, index % per);
        Ok(DesignSpec {
            index,
            permanent: skeleton.permanent,
            clutches: [
                skeleton.remaining[triple[0]],
                skeleton.remaining[triple[1]],
                skeleton.remaining[triple[2]],
            ],
        })
    }

    pub fn system_model(&self) -> SystemModel {
        assemble_full_dynamics(&self.base, &self.inertias).expect("validated space")
    }
}

/// A permanent-connection choice and its leftover clutch candidates.
#[derive(Debug, Clone)]
pub struct Skeleton {
    pub index: usize,
    pub permanent: [Connection; 3],
    pub remaining: Vec<Connection>,
}

/// Exact mode-set signature: the sorted content ids of the design's
/// retained (1- and 2-dof) mode matrices. Two designs are redundant exactly
/// when their signatures coincide.
///
/// A 3-clutch design normally realizes at most six retained modes (three
/// one-clutch, three two-clutch states); skeletons whose base state already
/// hides an unobservable freedom can retain the all-open and all-engaged
/// states too, so the hard cap is the eight clutch subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Signature {
    len: u8,
    ids: [u128; 8],
}

impl Signature {
    pub fn from_ids(mut ids: Vec<u128>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        assert!(ids.len() <= 8, "more retained modes than clutch subsets");
        let mut arr = [0u128; 8];
        arr[..ids.len()].copy_from_slice(&ids);
        Self {
            len: ids.len() as u8,
            ids: arr,
        }
    }

    pub fn ids(&self) -> &[u128] {
        &self.ids[..self.len as usize]
    }

    pub fn mode_count(&self) -> usize {
        self.len as usize
    }

    pub fn to_hex(&self) -> String {
        self.ids()
            .iter()
            .map(|id| format!("{id:032x}"))
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Screening flags accumulated over a design's retained modes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScreenFlags {
    /// Has a forward ECVT mode (positive engine coupling, split class).
    pub split_forward: bool,
    /// Has an engine-on backward mode (negative coupling or series).
    pub engine_backward: bool,
}

impl ScreenFlags {
    /// The inferior-design screen: keep only designs with at least one
    /// forward power-split mode that can also reverse under engine power.
    pub fn keeps(&self) -> bool {
        self.split_forward && self.engine_backward
    }

    pub fn absorb(&mut self, dynamics: &DerivedDynamics) {
        if let DerivedDynamics::Feasible {
            a_star,
            mode_type,
            backward,
            ..
        } = dynamics
        {
            let zero = frac_int(0);
            if mode_type.is_split() && *a_star.entry(0, 1) > zero {
                self.split_forward = true;
            }
            if *backward {
                self.engine_backward = true;
            }
        }
    }
}

/// Compact evaluation of one design: retained mode ids (signature), the
/// clutch subset that first realizes each, and screening flags.
#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub signature: Signature,
    pub flags: ScreenFlags,
    /// (engaged clutch mask, shared dynamics) per retained mode, in
    /// first-realized order. Mask bit k = design clutch k engaged.
    pub modes: Vec<(u8, Arc<DerivedDynamics>)>,
}

impl DesignOutcome {
    pub fn keeps(&self) -> bool {
        self.flags.keeps()
    }
}

/// Clutch-state masks in engagement order: fewer clutches first, then by
/// mask value. The all-open state is evaluated too (it is dropped as a
/// 3-dof mode for regular skeletons).
pub const MASK_ORDER: [u8; 8] = [0b000, 0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111];

/// Per-skeleton evaluator: precomputes the dynamics of every 0-, 1- and
/// 2-clutch engagement over the skeleton so each clutch triple costs three
/// table lookups plus one cached reduction for the all-engaged state.
pub struct SkeletonEval {
    pub skeleton: Skeleton,
    model: Arc<SystemModel>,
    base: Arc<DerivedDynamics>,
    single: Vec<Arc<DerivedDynamics>>,
    pair: HashMap<(u16, u16), Arc<DerivedDynamics>>,
}

impl SkeletonEval {
    pub fn new(
        space: &DesignSpace,
        model: Arc<SystemModel>,
        skeleton_idx: usize,
        cache: &DynamicsCache,
    ) -> Self {
        let skeleton = space.skeleton(skeleton_idx);
        let perms = skeleton.permanent;
        let mut conns: Vec<Connection> = perms.to_vec();
        let base = cache.derive(&model, &conns);
        let n = skeleton.remaining.len();
        let mut single = Vec::with_capacity(n);
        for &c in &skeleton.remaining {
            conns.truncate(3);
            conns.push(c);
            single.push(cache.derive(&model, &conns));
        }
        let mut pair = HashMap::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                conns.truncate(3);
                conns.push(skeleton.remaining[i]);
                conns.push(skeleton.remaining[j]);
                pair.insert((i as u16, j as u16), cache.derive(&model, &conns));
            }
        }
        Self {
            skeleton,
            model,
            base,
            single,
            pair,
        }
    }

    /// Evaluates the design using clutch candidates `triple` (ascending
    /// indices into the skeleton's remaining pool).
    pub fn evaluate(&self, triple: [usize; 3], cache: &DynamicsCache) -> DesignOutcome {
        let mut modes: Vec<(u8, Arc<DerivedDynamics>)> = Vec::with_capacity(8);
        let mut flags = ScreenFlags::default();
        for &mask in &MASK_ORDER {
            let dynamics = match mask {
                0b000 => Arc::clone(&self.base),
                0b001 => Arc::clone(&self.single[triple[0]]),
                0b010 => Arc::clone(&self.single[triple[1]]),
                0b100 => Arc::clone(&self.single[triple[2]]),
                0b011 => Arc::clone(&self.pair[&(triple[0] as u16, triple[1] as u16)]),
                0b101 => Arc::clone(&self.pair[&(triple[0] as u16, triple[2] as u16)]),
                0b110 => Arc::clone(&self.pair[&(triple[1] as u16, triple[2] as u16)]),
                _ => {
                    let mut conns: Vec<Connection> = self.skeleton.permanent.to_vec();
                    for &t in &triple {
                        conns.push(self.skeleton.remaining[t]);
                    }
                    cache.derive(&self.model, &conns)
                }
            };
            let DerivedDynamics::Feasible { a_star, id, .. } = &*dynamics else {
                continue;
            };
            if a_star.dof() > 2 {
                continue; // 3-dof modes are classified but not evaluated
            }
            let known = modes.iter().any(
                |(_, m)| matches!(&**m, DerivedDynamics::Feasible { id: other, .. } if other == id),
            );
            if !known {
                flags.absorb(&dynamics);
                modes.push((mask, dynamics));
            }
        }
        let ids = modes
            .iter()
            .filter_map(|(_, m)| match &**m {
                DerivedDynamics::Feasible { id, .. } => Some(*id),
                DerivedDynamics::Rejected(_) => None,
            })
            .collect();
        DesignOutcome {
            signature: Signature::from_ids(ids),
            flags,
            modes,
        }
    }
}

/// A fully hydrated design for single-design analysis: its configuration,
/// clutch locations and deduped retained modes.
#[derive(Debug, Clone)]
pub struct Design {
    pub configuration: Configuration,
    pub clutches: Vec<Connection>,
    /// Retained modes (dof 1 or 2), deduped, in first-realized order.
    pub modes: Vec<Mode>,
    /// Clutch engagement mask per retained mode.
    pub masks: Vec<u8>,
}

impl Design {
    /// Derives a design from explicit parts. Benchmarks may carry more than
    /// three clutches; the subset enumeration is capped to keep 2^k sane.
    pub fn from_parts(
        configuration: Configuration,
        clutches: Vec<Connection>,
        inertias: &Inertias,
    ) -> Result<Self, DesignError> {
        if clutches.len() > 6 {
            return Err(DesignError::TooManyClutches {
                max: 6,
                got: clutches.len(),
            });
        }
        configuration.validate()?;
        for c in &clutches {
            configuration.validate_connection(c)?;
            if let Connection::Ground(n) = c {
                if *n == configuration.placement.output {
                    return Err(TopologyError::OutputGrounded.into());
                }
            }
        }
        let model = assemble_full_dynamics(&configuration, inertias)?;
        let mut raw = Vec::new();
        let mut raw_masks = Vec::new();
        let k = clutches.len();
        let mut masks: Vec<u8> = (0..(1u16 << k)).map(|m| m as u8).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        for mask in masks {
            let engaged: Vec<Connection> = (0..k)
                .filter(|b| mask & (1 << b) != 0)
                .map(|b| clutches[b])
                .collect();
            let connections = configuration.with_engaged(&engaged);
            if let Ok(mode) = derive_mode_on(&model, connections) {
                if mode.a_star.dof() <= 2 {
                    raw.push(mode);
                    raw_masks.push(mask);
                }
            }
        }
        // Dedup by matrix, keeping the first (smallest-mask) realization.
        let mut seen = HashMap::new();
        let mut modes = Vec::new();
        let mut kept_masks = Vec::new();
        for (mode, mask) in raw.into_iter().zip(raw_masks) {
            let key = mode.a_star.canonical_string();
            if seen.insert(key, ()).is_none() {
                modes.push(mode);
                kept_masks.push(mask);
            }
        }
        Ok(Self {
            configuration,
            clutches,
            modes,
            masks: kept_masks,
        })
    }

    /// Hydrates a design from the restricted stream.
    pub fn realize(space: &DesignSpace, spec: &DesignSpec) -> Result<Self, DesignError> {
        let mut config = space.base.clone();
        config.permanent = spec.permanent.to_vec();
        Design::from_parts(config, spec.clutches.to_vec(), &space.inertias)
    }

    pub fn signature(&self) -> Signature {
        Signature::from_ids(self.modes.iter().map(|m| m.dynamics_id()).collect())
    }

    pub fn screen_flags(&self) -> ScreenFlags {
        let zero = frac_int(0);
        let mut flags = ScreenFlags::default();
        for mode in &self.modes {
            if mode.mode_type.is_split() && *mode.a_star.entry(0, 1) > zero {
                flags.split_forward = true;
            }
            if mode.backward_capable {
                flags.engine_backward = true;
            }
        }
        flags
    }

    /// Count of modes per class, for reports.
    pub fn class_histogram(&self) -> Vec<(ModeType, usize)> {
        let mut counts: Vec<(ModeType, usize)> = Vec::new();
        for mode in &self.modes {
            match counts.iter_mut().find(|(t, _)| *t == mode.mode_type) {
                Some((_, n)) => *n += 1,
                None => counts.push((mode.mode_type, 1)),
            }
        }
        counts
    }
}

/// The inferior-design screen over a hydrated design.
pub fn screen_inferior(design: &Design) -> bool {
    design.screen_flags().keeps()
}

/// In-memory dedup of hydrated designs: groups by signature, keeps the
/// lexicographically smallest clutch set (ties: smallest permanent set).
pub fn dedupe_designs(designs: Vec<Design>) -> Vec<Design> {
    let mut order: Vec<Signature> = Vec::new();
    let mut best: HashMap<Signature, Design> = HashMap::new();
    for design in designs {
        let sig = design.signature();
        match best.get_mut(&sig) {
            None => {
                order.push(sig);
                best.insert(sig, design);
            }
            Some(kept) => {
                let newer = (&design.clutches, &design.configuration.permanent);
                let old = (&kept.clutches, &kept.configuration.permanent);
                if newer < old {
                    *kept = design;
                }
            }
        }
    }
    order
        .into_iter()
        .map(|sig| best.remove(&sig).expect("tracked signature"))
        .collect()
}

/// Convenience: evaluate a full range of the stream against one skeleton
/// cache, calling `sink` for each design. Indices are global stream indices.
pub fn evaluate_stream_range<F>(
    space: &DesignSpace,
    cache: &DynamicsCache,
    range: std::ops::Range<u128>,
    mut sink: F,
) where
    F: FnMut(u128, &DesignOutcome),
{
    let per = space.triples_per_skeleton();
    let model = Arc::new(space.system_model());
    let mut current: Option<(usize, SkeletonEval)> = None;
    let mut idx = range.start;
    while idx < range.end {
        let skel_idx = (idx / per) as usize;
        if current.as_ref().map(|(i, _)| *i) != Some(skel_idx) {
            current = Some((
                skel_idx,
                SkeletonEval::new(space, Arc::clone(&model), skel_idx, cache),
            ));
        }
        let (_, eval) = current.as_ref().unwrap();
        let pool = eval.skeleton.remaining.len();
        // Iterate triples lexicographically from the offset within this
        // skeleton, without unranking each one.
        let local_start = idx % per;
        let start_triple = unrank_combination(pool as u64, 3, local_start);
        let mut combo = [start_triple[0], start_triple[1], start_triple[2]];
        loop {
            let outcome = eval.evaluate(combo, cache);
            sink(idx, &outcome);
            idx += 1;
            if idx >= range.end || idx % per == 0 {
                break;
            }
            if !advance_triple(&mut combo, pool) {
                break;
            }
        }
    }
}

fn advance_triple(combo: &mut [usize; 3], n: usize) -> bool {
    if combo[2] + 1 < n {
        combo[2] += 1;
        return true;
    }
    if combo[1] + 2 < n {
        combo[1] += 1;
        combo[2] = combo[1] + 1;
        return true;
    }
    if combo[0] + 3 < n {
        combo[0] += 1;
        combo[1] = combo[0] + 1;
        combo[2] = combo[1] + 1;
        return true;
    }
    false
}
