//! Mode engine: clutch catalog construction, mode derivation, the 14-class
//! mode taxonomy, exact dedup and the special mode sets used for screening.

use crate::combi::{binomial, fnv128};
use crate::dynamics::{self, CharacteristicMatrix, DynamicsError, SystemModel};
use crate::planetary::{Configuration, Connection, Inertias, Node, NodeRole};
use crate::rational::{frac_int, Frac};
use num_traits::Zero;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};
use thiserror::Error;

/// All candidate clutch locations for a train, in a fixed deterministic
/// order: node-node pairs first (lexicographic, skipping the two redundant
/// within-set pairs per planetary — the sun-ring lock is kept), then
/// grounding clutches by node index, skipping the output node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClutchCatalog {
    pub locations: Vec<Connection>,
    pub n_pg: usize,
    pub output: Node,
}

impl ClutchCatalog {
    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Catalog index of a connection, if it is a candidate location.
    pub fn index_of(&self, conn: &Connection) -> Option<usize> {
        self.locations.iter().position(|c| c == conn)
    }
}

/// Builds the candidate clutch set for an `n_pg` train whose output shaft
/// sits on `output`. The count satisfies `C(3n, 2) + 3n - 2n - 1`: all node
/// pairs, minus the two redundant within-set locks per planetary, plus all
/// grounding clutches except the output's.
pub fn build_clutch_catalog(n_pg: usize, output: Node) -> ClutchCatalog {
    let n_nodes = 3 * n_pg;
    assert!(output.0 < n_nodes, "output node out of range");
    let mut locations = Vec::new();
    for a in 0..n_nodes {
        for b in (a + 1)..n_nodes {
            let (na, nb) = (Node(a), Node(b));
            if na.pg() == nb.pg() {
                // Within a set any single lock collapses the lever; keep
                // only sun-ring.
                if (na.role(), nb.role()) != (NodeRole::Sun, NodeRole::Ring) {
                    continue;
                }
            }
            locations.push(Connection::pair(na, nb));
        }
    }
    for n in 0..n_nodes {
        if n != output.0 {
            locations.push(Connection::Ground(Node(n)));
        }
    }
    let expected = binomial(n_nodes as u64, 2) as usize + n_nodes - 2 * n_pg - 1;
    debug_assert_eq!(locations.len(), expected);
    ClutchCatalog {
        locations,
        n_pg,
        output,
    }
}

/// Number of candidate modes: sum of `C(catalog, k)` over the connection
/// counts in `k_range`. Pure combinatorics, nothing is enumerated.
pub fn count_mode_candidates(
    catalog: &ClutchCatalog,
    k_range: std::ops::RangeInclusive<usize>,
) -> u128 {
    let n = catalog.len() as u64;
    k_range.map(|k| binomial(n, k as u64)).sum()
}

/// The fourteen mode classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum ModeType {
    Series = 1,
    CompoundSplit3Dof = 2,
    CompoundSplit2Dof = 3,
    InputSplit = 4,
    OutputSplit = 5,
    ParallelEcvtOneMg = 6,
    ParallelEcvtSerialMgs = 7,
    EngineOnlyFixedGear = 8,
    ParallelFgTwoMg2Dof = 9,
    ParallelFgTwoMg1Dof = 10,
    ParallelFgOneMg1Dof = 11,
    EvTwoMg2Dof = 12,
    EvTwoMg1Dof = 13,
    EvOneMg1Dof = 14,
}

impl ModeType {
    pub fn code(&self) -> u8 {
        *self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        ModeType::ALL.into_iter().find(|t| t.code() == code)
    }

    pub const ALL: [ModeType; 14] = [
        ModeType::Series,
        ModeType::CompoundSplit3Dof,
        ModeType::CompoundSplit2Dof,
        ModeType::InputSplit,
        ModeType::OutputSplit,
        ModeType::ParallelEcvtOneMg,
        ModeType::ParallelEcvtSerialMgs,
        ModeType::EngineOnlyFixedGear,
        ModeType::ParallelFgTwoMg2Dof,
        ModeType::ParallelFgTwoMg1Dof,
        ModeType::ParallelFgOneMg1Dof,
        ModeType::EvTwoMg2Dof,
        ModeType::EvTwoMg1Dof,
        ModeType::EvOneMg1Dof,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModeType::Series => "series",
            ModeType::CompoundSplit3Dof => "compound split (3 dof)",
            ModeType::CompoundSplit2Dof => "compound split (2 dof)",
            ModeType::InputSplit => "input split",
            ModeType::OutputSplit => "output split",
            ModeType::ParallelEcvtOneMg => "parallel ECVT (engine + 1 MG)",
            ModeType::ParallelEcvtSerialMgs => "parallel ECVT (engine + serial MGs)",
            ModeType::EngineOnlyFixedGear => "engine only (fixed gear)",
            ModeType::ParallelFgTwoMg2Dof => "parallel fixed gear (2 MG, 2 dof)",
            ModeType::ParallelFgTwoMg1Dof => "parallel fixed gear (2 MG, 1 dof)",
            ModeType::ParallelFgOneMg1Dof => "parallel fixed gear (1 MG, 1 dof)",
            ModeType::EvTwoMg2Dof => "EV (2 MG, 2 dof)",
            ModeType::EvTwoMg1Dof => "EV (2 MG, 1 dof)",
            ModeType::EvOneMg1Dof => "EV (1 MG, 1 dof)",
        }
    }

    /// Degrees of freedom implied by the class.
    pub fn dof(&self) -> usize {
        match self.code() {
            2 => 3,
            1 | 3 | 4 | 5 | 6 | 7 | 9 | 12 => 2,
            _ => 1,
        }
    }

    /// ECVT power-split classes.
    pub fn is_split(&self) -> bool {
        matches!(
            self,
            ModeType::CompoundSplit2Dof | ModeType::InputSplit | ModeType::OutputSplit
        )
    }
}

impl fmt::Display for ModeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.code(), self.name())
    }
}

/// A layout whose characteristic matrix fits none of the fourteen classes.
/// These are underactuated arrangements (for example a two-dof chain driven
/// by a single device); the enumeration drops them as infeasible, loudly.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("mode fits no class: dof={dof}, characteristic matrix {canonical}")]
pub struct ClassifyError {
    pub dof: usize,
    pub canonical: String,
}

/// Classifies a feasible mode by the decision tree over exact predicates on
/// the characteristic matrix: the row-1 coefficients and the ranks of the
/// six stacked 2x4 row-pair matrices.
pub fn classify_mode(a: &CharacteristicMatrix) -> Result<ModeType, ClassifyError> {
    let fail = || ClassifyError {
        dof: a.dof(),
        canonical: a.canonical_string(),
    };
    let c_eng = a.entry(0, 1);
    let c_mg1 = a.entry(0, 2);
    let c_mg2 = a.entry(0, 3);
    let both_mgs = !c_mg1.is_zero() && !c_mg2.is_zero();
    let one_mg = !both_mgs && !(c_mg1.is_zero() && c_mg2.is_zero());

    match a.dof() {
        3 => Ok(ModeType::CompoundSplit3Dof),
        2 => {
            if c_eng.is_zero() {
                // Series: one MG drives the vehicle while the engine spins
                // exactly one MG.
                let e_mg1 = a.entry(1, 2);
                let e_mg2 = a.entry(1, 3);
                let couples_one_mg =
                    (e_mg1.is_zero() || e_mg2.is_zero()) && !(e_mg1.is_zero() && e_mg2.is_zero());
                if one_mg && couples_one_mg {
                    Ok(ModeType::Series)
                } else if both_mgs {
                    Ok(ModeType::EvTwoMg2Dof)
                } else {
                    Err(fail())
                }
            } else if one_mg {
                Ok(ModeType::ParallelEcvtOneMg)
            } else if !both_mgs {
                Err(fail())
            } else {
                let r_ve = stacked_rank(a, 0, 1);
                if r_ve == 1 {
                    return Ok(ModeType::ParallelFgTwoMg2Dof);
                }
                if stacked_rank(a, 2, 3) == 1 {
                    return Ok(ModeType::ParallelEcvtSerialMgs);
                }
                let r_vmg = stacked_rank(a, 0, 2) * stacked_rank(a, 0, 3);
                if r_vmg == 2 {
                    return Ok(ModeType::InputSplit);
                }
                let r_emg = stacked_rank(a, 1, 2) * stacked_rank(a, 1, 3);
                if r_emg == 2 {
                    return Ok(ModeType::OutputSplit);
                }
                if r_ve == 2 && r_vmg == 4 && r_emg == 4 {
                    return Ok(ModeType::CompoundSplit2Dof);
                }
                Err(fail())
            }
        }
        1 => {
            if !c_eng.is_zero() {
                if both_mgs {
                    Ok(ModeType::ParallelFgTwoMg1Dof)
                } else if one_mg {
                    Ok(ModeType::ParallelFgOneMg1Dof)
                } else {
                    Ok(ModeType::EngineOnlyFixedGear)
                }
            } else if both_mgs {
                Ok(ModeType::EvTwoMg1Dof)
            } else if one_mg {
                Ok(ModeType::EvOneMg1Dof)
            } else {
                Err(fail())
            }
        }
        _ => Err(fail()),
    }
}

fn stacked_rank(a: &CharacteristicMatrix, r1: usize, r2: usize) -> usize {
    let rows = vec![
        (0..4)
            .map(|j| a.entry(r1, j).clone())
            .collect::<Vec<Frac>>(),
        (0..4).map(|j| a.entry(r2, j).clone()).collect(),
    ];
    crate::linalg::RatMat::from_rows(rows).rank()
}

/// Evaluates every class criterion independently (no tree precedence) and
/// returns all that match. Used to audit that the tree is a partition.
pub fn matching_classes(a: &CharacteristicMatrix) -> Vec<ModeType> {
    let c_eng = a.entry(0, 1);
    let c_mg1 = a.entry(0, 2);
    let c_mg2 = a.entry(0, 3);
    let prod_zero = c_mg1.is_zero() || c_mg2.is_zero();
    let some_mg = !(c_mg1.is_zero() && c_mg2.is_zero());
    let e_mg1 = a.entry(1, 2);
    let e_mg2 = a.entry(1, 3);
    let rank2 = |r1: usize, r2: usize| stacked_rank(a, r1, r2);
    let dof = a.dof();
    let mut out = Vec::new();
    for t in ModeType::ALL {
        let hit = match t {
            ModeType::Series => {
                dof == 2
                    && c_eng.is_zero()
                    && prod_zero
                    && some_mg
                    && (e_mg1.is_zero() || e_mg2.is_zero())
                    && !(e_mg1.is_zero() && e_mg2.is_zero())
            }
            ModeType::CompoundSplit3Dof => dof == 3,
            ModeType::CompoundSplit2Dof => {
                dof == 2
                    && !c_eng.is_zero()
                    && !prod_zero
                    && rank2(0, 1) == 2
                    && rank2(0, 2) * rank2(0, 3) == 4
                    && rank2(1, 2) * rank2(1, 3) == 4
                    && rank2(2, 3) == 2
            }
            ModeType::InputSplit => {
                dof == 2 && !c_eng.is_zero() && !prod_zero && rank2(0, 2) * rank2(0, 3) == 2
            }
            ModeType::OutputSplit => {
                dof == 2 && !c_eng.is_zero() && !prod_zero && rank2(1, 2) * rank2(1, 3) == 2
            }
            ModeType::ParallelEcvtOneMg => dof == 2 && !c_eng.is_zero() && prod_zero && some_mg,
            ModeType::ParallelEcvtSerialMgs => {
                dof == 2 && !c_eng.is_zero() && !prod_zero && rank2(2, 3) == 1
            }
            ModeType::EngineOnlyFixedGear => dof == 1 && !c_eng.is_zero() && !some_mg,
            ModeType::ParallelFgTwoMg2Dof => {
                dof == 2 && !c_eng.is_zero() && rank2(0, 1) == 1 && !prod_zero
            }
            ModeType::ParallelFgTwoMg1Dof => dof == 1 && !c_eng.is_zero() && !prod_zero,
            ModeType::ParallelFgOneMg1Dof => dof == 1 && !c_eng.is_zero() && prod_zero && some_mg,
            ModeType::EvTwoMg2Dof => dof == 2 && c_eng.is_zero() && !prod_zero,
            ModeType::EvTwoMg1Dof => dof == 1 && c_eng.is_zero() && !prod_zero,
            ModeType::EvOneMg1Dof => dof == 1 && c_eng.is_zero() && prod_zero && some_mg,
        };
        if hit {
            out.push(t);
        }
    }
    out
}

/// A feasible, classified mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mode {
    /// Full engaged connection set (permanent connections and clutches).
    pub engaged: Vec<Connection>,
    pub a_star: CharacteristicMatrix,
    pub mode_type: ModeType,
    /// The mode can push the vehicle forward with admissible torques
    /// (engine torque is one-signed; MG torque is not).
    pub forward_capable: bool,
    /// The mode can drive backwards under engine power: negative engine
    /// coupling, or a series arrangement.
    pub backward_capable: bool,
}

impl Mode {
    /// Content hash of the characteristic matrix, used as a stable mode
    /// identity for dedup and cross-design sharing.
    pub fn dynamics_id(&self) -> u128 {
        fnv128(self.a_star.canonical_string().as_bytes())
    }
}

/// Why a candidate connection set yields no usable mode.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Infeasible {
    #[error("degenerate mode: {0}")]
    Degenerate(DynamicsError),
    #[error("dof {0} outside the usable 1..=3 range")]
    WrongDof(usize),
    #[error("no device can power the vehicle")]
    Unpowered,
    #[error("unclassifiable: {0}")]
    Unclassifiable(ClassifyError),
}

fn mode_from_matrix(
    engaged: Vec<Connection>,
    a_star: CharacteristicMatrix,
) -> Result<Mode, Infeasible> {
    let dof = a_star.dof();
    if dof == 0 || dof > 3 {
        return Err(Infeasible::WrongDof(dof));
    }
    if a_star.output_device_coeffs().iter().all(|c| c.is_zero()) {
        return Err(Infeasible::Unpowered);
    }
    let mode_type = classify_mode(&a_star).map_err(Infeasible::Unclassifiable)?;
    let zero = frac_int(0);
    let c_eng = a_star.entry(0, 1);
    let mgs_drive = !a_star.entry(0, 2).is_zero() || !a_star.entry(0, 3).is_zero();
    let forward_capable = *c_eng > zero || (c_eng.is_zero() && mgs_drive);
    let backward_capable = *c_eng < zero || mode_type == ModeType::Series;
    Ok(Mode {
        engaged,
        a_star,
        mode_type,
        forward_capable,
        backward_capable,
    })
}

/// Derives the mode produced by engaging `engaged_clutches` on top of the
/// configuration's permanent connections.
pub fn derive_mode(
    config: &Configuration,
    inertias: &Inertias,
    engaged_clutches: &[Connection],
) -> Result<Mode, Infeasible> {
    let model =
        dynamics::assemble_full_dynamics(config, inertias).map_err(Infeasible::Degenerate)?;
    let all = config.with_engaged(engaged_clutches);
    derive_mode_on(&model, all)
}

/// Same derivation against a prebuilt system model.
pub fn derive_mode_on(
    model: &SystemModel,
    connections: Vec<Connection>,
) -> Result<Mode, Infeasible> {
    let a_star =
        dynamics::reduce_with_connections(model, &connections).map_err(Infeasible::Degenerate)?;
    mode_from_matrix(connections, a_star)
}

/// Keeps one mode per distinct characteristic matrix: the one with the
/// lexicographically smallest engaged set. Output order follows the first
/// appearance of each matrix, so dedup is idempotent and deterministic.
pub fn dedupe_modes(modes: Vec<Mode>) -> Vec<Mode> {
    let mut order: Vec<String> = Vec::new();
    let mut best: HashMap<String, Mode> = HashMap::new();
    for mode in modes {
        let key = mode.a_star.canonical_string();
        match best.get_mut(&key) {
            None => {
                order.push(key.clone());
                best.insert(key, mode);
            }
            Some(kept) => {
                if mode.engaged < kept.engaged {
                    *kept = mode;
                }
            }
        }
    }
    order
        .into_iter()
        .map(|key| best.remove(&key).expect("tracked key"))
        .collect()
}

/// The special mode sets: all indices, engine-on backward-driving modes
/// (negative engine coupling or series), and forward ECVT modes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModeSets {
    pub all: Vec<usize>,
    pub backward: Vec<usize>,
    pub ecvt: Vec<usize>,
}

pub fn mode_sets(modes: &[Mode]) -> ModeSets {
    let zero = frac_int(0);
    let mut sets = ModeSets::default();
    for (i, mode) in modes.iter().enumerate() {
        sets.all.push(i);
        let c_eng = mode.a_star.entry(0, 1);
        if *c_eng < zero || mode.mode_type == ModeType::Series {
            sets.backward.push(i);
        }
        if *c_eng > zero && mode.mode_type.is_split() {
            sets.ecvt.push(i);
        }
    }
    sets
}

/// Per-class tallies for a census: raw derivations, distinct matrices, and
/// forward-capable distinct matrices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModeClassCounts {
    pub original: [u64; 14],
    pub unique: [u64; 14],
    pub forward: [u64; 14],
}

impl ModeClassCounts {
    pub fn total_original(&self) -> u64 {
        self.original.iter().sum()
    }

    pub fn total_unique(&self) -> u64 {
        self.unique.iter().sum()
    }

    pub fn total_forward(&self) -> u64 {
        self.forward.iter().sum()
    }

    pub fn check_invariants(&self) -> bool {
        (0..14).all(|i| self.unique[i] <= self.original[i] && self.forward[i] <= self.unique[i])
    }
}

/// Memoized outcome of reducing one merged-node partition.
#[derive(Debug)]
pub enum DerivedDynamics {
    Feasible {
        a_star: CharacteristicMatrix,
        mode_type: ModeType,
        forward: bool,
        backward: bool,
        /// Content id of the canonical matrix string.
        id: u128,
    },
    Rejected(Infeasible),
}

impl DerivedDynamics {
    pub fn feasible(&self) -> Option<&CharacteristicMatrix> {
        match self {
            DerivedDynamics::Feasible { a_star, .. } => Some(a_star),
            DerivedDynamics::Rejected(_) => None,
        }
    }
}

/// Shared, thread-safe cache keyed by the canonical merged-node partition.
/// Two connection sets that merge and ground the same nodes always reduce
/// to the same characteristic matrix, so they share one entry.
pub struct DynamicsCache {
    shards: Vec<Mutex<HashMap<Vec<u8>, Arc<DerivedDynamics>>>>,
}

impl DynamicsCache {
    pub fn new() -> Self {
        Self {
            shards: (0..64).map(|_| Mutex::new(HashMap::new())).collect(),
        }
    }

    pub fn entries(&self) -> usize {
        self.shards.iter().map(|s| s.lock().unwrap().len()).sum()
    }

    /// Reduces `connections` against `model`, consulting the cache first.
    pub fn derive(&self, model: &SystemModel, connections: &[Connection]) -> Arc<DerivedDynamics> {
        let mut merge = dynamics::NodeMerge::new(model.n_nodes);
        merge.apply(connections);
        let key = merge.canonical_key(model.n_nodes);
        let shard = &self.shards[(fnv128(&key) % self.shards.len() as u128) as usize];
        if let Some(hit) = shard.lock().unwrap().get(&key) {
            return Arc::clone(hit);
        }
        let outcome = match dynamics::reduce_merged(model, &mut merge) {
            Err(e) => DerivedDynamics::Rejected(Infeasible::Degenerate(e)),
            Ok(a_star) => match mode_from_matrix(Vec::new(), a_star) {
                Ok(mode) => DerivedDynamics::Feasible {
                    id: mode.dynamics_id(),
                    a_star: mode.a_star,
                    mode_type: mode.mode_type,
                    forward: mode.forward_capable,
                    backward: mode.backward_capable,
                },
                Err(reason) => DerivedDynamics::Rejected(reason),
            },
        };
        let arc = Arc::new(outcome);
        shard
            .lock()
            .unwrap()
            .entry(key)
            .or_insert_with(|| Arc::clone(&arc))
            .clone()
    }
}

impl Default for DynamicsCache {
    fn default() -> Self {
        Self::new()
    }
}
