//! Automated mode dynamics: assembles the unconstrained gear-train model and
//! reduces it under a connection set to the 4x4 characteristic matrix that
//! maps device torques to device accelerations.
//!
//! Row and column order is fixed as output, engine, MG1, MG2 (torque columns
//! load, engine, MG1, MG2). The reduction merges rigidly connected nodes into
//! shared speed coordinates (a union-find over the connection set), pins
//! grounded coordinates, eliminates the internal gear forces with a nullspace
//! projection of the lever constraints, and solves the remaining inertia
//! system exactly.

use crate::linalg::RatMat;
use crate::planetary::{Configuration, Connection, Inertias, Node, TopologyError};
use crate::rational::{frac_str, Frac};
use num_traits::Zero;
use thiserror::Error;

/// One lever constraint: `S*w_sun + R*w_ring - (S+R)*w_carrier = 0`.
#[derive(Debug, Clone)]
pub struct LeverConstraint {
    pub nodes: [usize; 3],
    pub coeffs: [Frac; 3],
}

impl LeverConstraint {
    /// Residual of the constraint at the given node speeds.
    pub fn residual(&self, speeds: &[Frac]) -> Frac {
        self.nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(&n, c)| c * &speeds[n])
            .sum()
    }
}

/// The unconstrained system: node inertias, lever constraints, and the
/// device-to-node map. Internal gear forces enter as the transposed
/// constraint rows, so the rows double as the force-coupling columns.
#[derive(Debug, Clone)]
pub struct SystemModel {
    pub n_nodes: usize,
    pub inertia: Vec<Frac>,
    pub constraints: Vec<LeverConstraint>,
    /// Device nodes in row order output, engine, MG1, MG2.
    pub device_nodes: [usize; 4],
}

/// 4x4 exact map from device torques to device accelerations, with its rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacteristicMatrix {
    entries: RatMat,
    dof: usize,
}

impl CharacteristicMatrix {
    pub fn entry(&self, row: usize, col: usize) -> &Frac {
        &self.entries[(row, col)]
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn matrix(&self) -> &RatMat {
        &self.entries
    }

    /// Canonical text form used for dedup and reports: row-major exact
    /// fractions joined by `,` within rows and `;` between rows.
    pub fn canonical_string(&self) -> String {
        (0..4)
            .map(|i| {
                (0..4)
                    .map(|j| frac_str(&self.entries[(i, j)]))
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join(";")
    }

    /// Row 1 torque coefficients (engine, MG1, MG2 columns).
    pub fn output_device_coeffs(&self) -> [&Frac; 3] {
        [
            &self.entries[(0, 1)],
            &self.entries[(0, 2)],
            &self.entries[(0, 3)],
        ]
    }
}

/// Failure modes of assembly and reduction.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DynamicsError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("degenerate mode: a free coordinate carries no inertia")]
    DegenerateMode,
    #[error("speed map needs dof 1 or 2, mode has dof {0}")]
    UnsupportedDof(usize),
    #[error("the output shaft cannot rotate in this mode")]
    OutputImmobile,
}

/// Builds the unconstrained model: diagonal inertia over all nodes with
/// device and vehicle inertias stacked at their placement nodes, plus one
/// lever constraint per planetary set.
pub fn assemble_full_dynamics(
    config: &Configuration,
    inertias: &Inertias,
) -> Result<SystemModel, DynamicsError> {
    config.validate()?;
    let n_nodes = config.train.n_nodes();
    inertias.validate(n_nodes)?;

    let mut inertia = inertias.node.clone();
    inertia[config.placement.engine.0] += &inertias.engine;
    inertia[config.placement.mg1.0] += &inertias.mg1;
    inertia[config.placement.mg2.0] += &inertias.mg2;
    inertia[config.placement.output.0] += &inertias.vehicle_at_output;

    let constraints = config
        .train
        .pgs
        .iter()
        .map(|pg| {
            let s = pg.sun_teeth.clone();
            let r = pg.ring_teeth.clone();
            let sum = &s + &r;
            LeverConstraint {
                nodes: [pg.sun().0, pg.carrier().0, pg.ring().0],
                coeffs: [s, -sum, r],
            }
        })
        .collect();

    let devices = config.placement.device_nodes();
    Ok(SystemModel {
        n_nodes,
        inertia,
        constraints,
        device_nodes: [devices[0].0, devices[1].0, devices[2].0, devices[3].0],
    })
}

/// Disjoint-set forest over `n` nodes plus a virtual ground element.
#[derive(Debug, Clone)]
pub(crate) struct NodeMerge {
    parent: Vec<usize>,
}

impl NodeMerge {
    pub(crate) fn new(n_nodes: usize) -> Self {
        Self {
            parent: (0..=n_nodes).collect(),
        }
    }

    fn ground_id(&self) -> usize {
        self.parent.len() - 1
    }

    pub(crate) fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
            root
        } else {
            x
        }
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so that representatives are deterministic,
            // except ground, which always absorbs.
            let g = self.ground_id();
            if ra == g || (rb != g && ra < rb) {
                self.parent[rb] = ra;
            } else {
                self.parent[ra] = rb;
            }
        }
    }

    pub(crate) fn apply(&mut self, connections: &[Connection]) {
        let g = self.ground_id();
        for conn in connections {
            match conn {
                Connection::Pair(a, b) => self.union(a.0, b.0),
                Connection::Ground(Node(a)) => self.union(*a, g),
            }
        }
    }

    pub(crate) fn grounded(&mut self, node: usize) -> bool {
        let g = self.ground_id();
        self.find(node) == g
    }

    /// Canonical partition key: per-node component label in first-seen order
    /// with grounded nodes marked. Equal keys imply equal reductions.
    pub(crate) fn canonical_key(&mut self, n_nodes: usize) -> Vec<u8> {
        let mut label = vec![u8::MAX; n_nodes + 1];
        let mut next = 0u8;
        let g = self.ground_id();
        let mut key = Vec::with_capacity(n_nodes);
        for node in 0..n_nodes {
            let root = self.find(node);
            if root == g {
                key.push(0xFE);
                continue;
            }
            if label[root] == u8::MAX {
                label[root] = next;
                next += 1;
            }
            key.push(label[root]);
        }
        key
    }
}

/// Reduces the full model under a connection set and returns the
/// characteristic matrix. Grounded device rows and columns come out zero;
/// all arithmetic is exact.
pub fn reduce_with_connections(
    model: &SystemModel,
    connections: &[Connection],
) -> Result<CharacteristicMatrix, DynamicsError> {
    for conn in connections {
        match conn {
            Connection::Ground(n) if n.0 == model.device_nodes[0] => {
                return Err(TopologyError::OutputGrounded.into());
            }
            Connection::Pair(a, b) => {
                check_node(model, a.0)?;
                check_node(model, b.0)?;
            }
            Connection::Ground(a) => check_node(model, a.0)?,
        }
    }

    let mut merge = NodeMerge::new(model.n_nodes);
    merge.apply(connections);
    reduce_merged(model, &mut merge)
}

fn check_node(model: &SystemModel, node: usize) -> Result<(), DynamicsError> {
    if node >= model.n_nodes {
        return Err(TopologyError::NodeOutOfRange {
            node,
            n: model.n_nodes,
        }
        .into());
    }
    Ok(())
}

pub(crate) fn reduce_merged(
    model: &SystemModel,
    merge: &mut NodeMerge,
) -> Result<CharacteristicMatrix, DynamicsError> {
    // Free coordinates: one per non-grounded component, ordered by the
    // smallest node they contain.
    let mut coord_of_root: Vec<Option<usize>> = vec![None; model.n_nodes + 1];
    let mut n_free = 0usize;
    for node in 0..model.n_nodes {
        if merge.grounded(node) {
            continue;
        }
        let root = merge.find(node);
        if coord_of_root[root].is_none() {
            coord_of_root[root] = Some(n_free);
            n_free += 1;
        }
    }
    let coord = |merge: &mut NodeMerge, node: usize| -> Option<usize> {
        if merge.grounded(node) {
            None
        } else {
            coord_of_root[merge.find(node)]
        }
    };

    let a_star = if n_free == 0 {
        RatMat::zeros(4, 4)
    } else {
        // Merged inertia: sum of member-node inertias per coordinate.
        let mut mass = vec![Frac::zero(); n_free];
        for node in 0..model.n_nodes {
            if let Some(c) = coord(merge, node) {
                mass[c] += &model.inertia[node];
            }
        }

        // Lever constraints projected onto the free coordinates.
        let mut rows = Vec::new();
        for lever in &model.constraints {
            let mut row = vec![Frac::zero(); n_free];
            let mut nonzero = false;
            for (k, &node) in lever.nodes.iter().enumerate() {
                if let Some(c) = coord(merge, node) {
                    row[c] += &lever.coeffs[k];
                }
            }
            for v in &row {
                if !v.is_zero() {
                    nonzero = true;
                    break;
                }
            }
            if nonzero {
                rows.push(row);
            }
        }

        // Admissible motions: nullspace of the projected constraints.
        let null_basis = if rows.is_empty() {
            RatMat::identity(n_free)
        } else {
            let c = RatMat::from_rows(rows);
            let basis = c.nullspace();
            if basis.is_empty() {
                RatMat::zeros(n_free, 0)
            } else {
                RatMat::from_rows(basis).transpose()
            }
        };

        let dof_sys = null_basis.ncols();
        if dof_sys == 0 {
            RatMat::zeros(4, 4)
        } else {
            // Reduced inertia on the admissible subspace.
            let mut m_diag = RatMat::zeros(n_free, n_free);
            for (i, m) in mass.iter().enumerate() {
                m_diag[(i, i)] = m.clone();
            }
            let reduced = null_basis.transpose().matmul(&m_diag.matmul(&null_basis));
            debug_assert!(reduced.is_symmetric());

            // Device selector: torque at a device node loads its coordinate.
            let mut selector = RatMat::zeros(n_free, 4);
            for (dev, &node) in model.device_nodes.iter().enumerate() {
                if let Some(c) = coord(merge, node) {
                    selector[(c, dev)] += Frac::from_integer(1.into());
                }
            }
            let rhs = null_basis.transpose().matmul(&selector);
            let accel = reduced.solve(&rhs).ok_or(DynamicsError::DegenerateMode)?;
            // Device accelerations per unit torque at each device.
            let full = null_basis.matmul(&accel);
            let mut a = RatMat::zeros(4, 4);
            for (dev, &node) in model.device_nodes.iter().enumerate() {
                if let Some(c) = coord(merge, node) {
                    for col in 0..4 {
                        a[(dev, col)] = full[(c, col)].clone();
                    }
                }
            }
            a
        }
    };

    let dof = a_star.rank();
    Ok(CharacteristicMatrix {
        entries: a_star,
        dof,
    })
}

/// Which device speed serves as the second coordinate of a 2-dof mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedBasis {
    Engine,
    Mg1,
    Mg2,
}

impl SpeedBasis {
    /// Row/column index of the basis device in the canonical order.
    pub fn device_index(&self) -> usize {
        match self {
            SpeedBasis::Engine => 1,
            SpeedBasis::Mg1 => 2,
            SpeedBasis::Mg2 => 3,
        }
    }
}

/// Exact linear map from the mode's free speeds to all device speeds
/// (order output, engine, MG1, MG2).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KinematicRelation {
    /// One degree of freedom: every device speed is a fixed multiple of the
    /// output speed. `ratios[1]` is the engine:output gear ratio.
    SingleDof { ratios: [Frac; 4] },
    /// Two degrees of freedom: device speed = a*w_out + b*w_basis.
    TwoDof {
        basis: SpeedBasis,
        out_coeff: [Frac; 4],
        basis_coeff: [Frac; 4],
    },
}

impl KinematicRelation {
    pub fn dof(&self) -> usize {
        match self {
            KinematicRelation::SingleDof { .. } => 1,
            KinematicRelation::TwoDof { .. } => 2,
        }
    }

    /// Device speeds at the given output speed and free-coordinate speed
    /// (ignored for single-dof modes), as floats for the energy layers.
    pub fn device_speeds(&self, omega_out: f64, omega_basis: f64) -> [f64; 4] {
        match self {
            KinematicRelation::SingleDof { ratios } => {
                let mut out = [0.0; 4];
                for (i, r) in ratios.iter().enumerate() {
                    out[i] = crate::rational::frac_f64(r) * omega_out;
                }
                out
            }
            KinematicRelation::TwoDof {
                out_coeff,
                basis_coeff,
                ..
            } => {
                let mut out = [0.0; 4];
                for i in 0..4 {
                    out[i] = crate::rational::frac_f64(&out_coeff[i]) * omega_out
                        + crate::rational::frac_f64(&basis_coeff[i]) * omega_basis;
                }
                out
            }
        }
    }

    /// Exact engine:output ratio for fixed-gear (single-dof) modes.
    pub fn engine_ratio(&self) -> Option<&Frac> {
        match self {
            KinematicRelation::SingleDof { ratios } => Some(&ratios[1]),
            KinematicRelation::TwoDof { .. } => None,
        }
    }
}

/// Derives the admissible speed relations of a mode from its characteristic
/// matrix. The feasible speed directions are exactly the column space of the
/// (symmetric) characteristic matrix.
pub fn speed_map(a_star: &CharacteristicMatrix) -> Result<KinematicRelation, DynamicsError> {
    match a_star.dof() {
        1 => {
            let c_out = a_star.entry(0, 0);
            if c_out.is_zero() {
                return Err(DynamicsError::OutputImmobile);
            }
            let ratios = [
                Frac::from_integer(1.into()),
                a_star.entry(1, 0) / c_out,
                a_star.entry(2, 0) / c_out,
                a_star.entry(3, 0) / c_out,
            ];
            Ok(KinematicRelation::SingleDof { ratios })
        }
        2 => {
            if a_star.entry(0, 0).is_zero() {
                return Err(DynamicsError::OutputImmobile);
            }
            for basis in [SpeedBasis::Engine, SpeedBasis::Mg1, SpeedBasis::Mg2] {
                let j = basis.device_index();
                // The (out, basis) principal minor must be invertible for
                // (w_out, w_basis) to parameterize the motion.
                let det = a_star.entry(0, 0) * a_star.entry(j, j)
                    - a_star.entry(0, j) * a_star.entry(j, 0);
                if det.is_zero() {
                    continue;
                }
                let mut out_coeff = std::array::from_fn(|_| Frac::zero());
                let mut basis_coeff: [Frac; 4] = std::array::from_fn(|_| Frac::zero());
                for dev in 0..4 {
                    // Solve [A(:,0) A(:,j)] alpha = speeds for the top pair,
                    // then propagate: speed_dev = A(dev,0)a + A(dev,j)b.
                    let a0 = a_star.entry(dev, 0);
                    let aj = a_star.entry(dev, j);
                    out_coeff[dev] = (a0 * a_star.entry(j, j) - aj * a_star.entry(j, 0)) / &det;
                    basis_coeff[dev] = (aj * a_star.entry(0, 0) - a0 * a_star.entry(0, j)) / &det;
                }
                return Ok(KinematicRelation::TwoDof {
                    basis,
                    out_coeff,
                    basis_coeff,
                });
            }
            Err(DynamicsError::OutputImmobile)
        }
        d => Err(DynamicsError::UnsupportedDof(d)),
    }
}
