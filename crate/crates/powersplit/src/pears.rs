//! Power-weighted efficiency analysis: discretizes a drive cycle into
//! speed-torque cells, then finds each mode's best engine-off and engine-on
//! operating point per cell by maximizing power-weighted efficiency.
//!
//! Engine-off ("EV") points are scored by one minus the loss fraction of the
//! battery draw; engine-on ("hybrid") points by the power-weighted blend of
//! the mechanical path, the generator-to-motor electrical path, the
//! generator-to-battery path and the battery assist, each normalized by the
//! component peak efficiencies.

use crate::cycle::DriveCycle;
use crate::designs::Design;
use crate::dynamics::{speed_map, KinematicRelation, SpeedBasis};
use crate::modes::ModeType;
use crate::plant::{defaults, Plant, KMH, RPM};
use crate::rational::frac_f64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Search-grid and binning settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PearsConfig {
    pub speed_bin_mps: f64,
    pub torque_bin_nm: f64,
    pub engine_speed_step: f64,
    pub engine_torque_step: f64,
    pub mg_torque_step: f64,
    pub free_speed_step: f64,
    pub soc_nominal: f64,
}

impl Default for PearsConfig {
    fn default() -> Self {
        Self {
            speed_bin_mps: defaults::STC_SPEED_BIN_KMH * KMH,
            torque_bin_nm: defaults::STC_TORQUE_BIN_NM,
            engine_speed_step: defaults::ENGINE_SPEED_STEP_RPM * RPM,
            engine_torque_step: defaults::ENGINE_TORQUE_STEP_NM,
            mg_torque_step: defaults::MG_TORQUE_STEP_NM,
            free_speed_step: 500.0 * RPM,
            soc_nominal: defaults::SOC_NOMINAL,
        }
    }
}

impl PearsConfig {
    /// Halves every search step (binning unchanged); used for the
    /// grid-refinement stability check.
    pub fn refined(&self) -> Self {
        Self {
            speed_bin_mps: self.speed_bin_mps,
            torque_bin_nm: self.torque_bin_nm,
            engine_speed_step: self.engine_speed_step / 2.0,
            engine_torque_step: self.engine_torque_step / 2.0,
            mg_torque_step: self.mg_torque_step / 2.0,
            free_speed_step: self.free_speed_step / 2.0,
            soc_nominal: self.soc_nominal,
        }
    }

    /// Stable digest of the grid settings for cache keys.
    pub fn digest(&self) -> u128 {
        let text = format!(
            "{};{};{};{};{};{};{}",
            self.speed_bin_mps,
            self.torque_bin_nm,
            self.engine_speed_step,
            self.engine_torque_step,
            self.mg_torque_step,
            self.free_speed_step,
            self.soc_nominal
        );
        crate::combi::fnv128(text.as_bytes())
    }
}

/// One occupied speed-torque cell: representative operating point and the
/// sample count it covers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StcCell {
    pub speed_idx: i32,
    pub torque_idx: i32,
    /// Occupancy-weighted mean speed of the member samples, m/s.
    pub speed_mps: f64,
    /// Occupancy-weighted mean demanded output torque, N*m.
    pub torque_nm: f64,
    pub weight: u32,
}

/// The discretized cycle: occupied cells plus the sample-to-cell map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StcGrid {
    pub cells: Vec<StcCell>,
    pub sample_cell: Vec<usize>,
}

/// Bins every cycle sample by demanded (speed, output torque); the demanded
/// torque is road load plus inertial torque reflected to the output node.
pub fn build_stc_grid(cycle: &DriveCycle, plant: &Plant, cfg: &PearsConfig) -> StcGrid {
    let vehicle = &plant.vehicle;
    let demand = |k: usize| -> (f64, f64) {
        let v = cycle.speeds_mps[k];
        let torque =
            vehicle.road_load(v) + vehicle.force_to_output_torque(vehicle.mass_kg * cycle.accel(k));
        (v, torque)
    };
    let mut keys: Vec<(i32, i32)> = Vec::with_capacity(cycle.len());
    for k in 0..cycle.len() {
        let (v, torque) = demand(k);
        keys.push((
            (v / cfg.speed_bin_mps).floor() as i32,
            (torque / cfg.torque_bin_nm).floor() as i32,
        ));
    }
    let mut ordered = keys.clone();
    ordered.sort_unstable();
    ordered.dedup();
    let mut cells: Vec<StcCell> = ordered
        .iter()
        .map(|&(speed_idx, torque_idx)| StcCell {
            speed_idx,
            torque_idx,
            speed_mps: 0.0,
            torque_nm: 0.0,
            weight: 0,
        })
        .collect();
    let mut sample_cell = Vec::with_capacity(cycle.len());
    for (k, key) in keys.iter().enumerate() {
        let idx = ordered.binary_search(key).expect("key present");
        let (v, torque) = demand(k);
        cells[idx].speed_mps += v;
        cells[idx].torque_nm += torque;
        cells[idx].weight += 1;
        sample_cell.push(idx);
    }
    for cell in &mut cells {
        cell.speed_mps /= cell.weight as f64;
        cell.torque_nm /= cell.weight as f64;
    }
    StcGrid { cells, sample_cell }
}

/// Engine-off efficiency: one minus the loss share of the battery draw.
pub fn ev_efficiency(p_loss: f64, p_in: f64) -> f64 {
    debug_assert!(p_in > 0.0);
    1.0 - p_loss / p_in
}

/// Power flows and component efficiencies of one engine-on candidate.
#[derive(Debug, Clone, Copy)]
pub struct HybridFlows {
    /// Engine power to the battery through the generator, W.
    pub p_e1: f64,
    /// Engine power to the motor through the generator, W.
    pub p_e2: f64,
    /// Engine power on the direct mechanical path, W.
    pub p_e3: f64,
    /// Battery terminal power (positive = assist), W.
    pub p_batt: f64,
    /// Battery assist flag: set when `p_batt >= 0`.
    pub mu: bool,
    pub fuel_power: f64,
    pub eff_mg1: f64,
    pub eff_mg2: f64,
    pub eff_batt: f64,
}

/// Peak component efficiencies used for normalization.
#[derive(Debug, Clone, Copy)]
pub struct PeakEffs {
    pub engine: f64,
    pub mg1: f64,
    pub mg2: f64,
}

impl PeakEffs {
    pub fn of(plant: &Plant) -> Self {
        Self {
            engine: plant.engine.peak_eff,
            mg1: plant.mg1.peak_eff,
            mg2: plant.mg2.peak_eff,
        }
    }
}

/// The power-weighted efficiency of an engine-on operating point:
///
/// ```text
///             P_e1*n_mg2*n_batt/(n_e^ * n_mg2^)
///           + P_e2*n_mg1*n_mg2/(n_e^ * n_mg1^ * n_mg2^)
///           + P_e3/n_e^  +  mu*P_batt*n_batt*n_mg2/n_mg2^
/// d_hyb = ---------------------------------------------------
///                          P_fuel + mu*P_batt
/// ```
///
/// where `^` marks peak values. Returns `None` when the denominator is not
/// positive.
pub fn hybrid_efficiency(flows: &HybridFlows, peaks: &PeakEffs) -> Option<f64> {
    let mu = if flows.mu { 1.0 } else { 0.0 };
    let den = flows.fuel_power + mu * flows.p_batt;
    if den <= 0.0 {
        return None;
    }
    let term1 = flows.p_e1 * flows.eff_mg2 * flows.eff_batt / (peaks.engine * peaks.mg2);
    let term2 = flows.p_e2 * flows.eff_mg1 * flows.eff_mg2 / (peaks.engine * peaks.mg1 * peaks.mg2);
    let term3 = flows.p_e3 / peaks.engine;
    let term4 = mu * flows.p_batt * flows.eff_batt * flows.eff_mg2 / peaks.mg2;
    Some((term1 + term2 + term3 + term4) / den)
}

/// Splits the engine and battery power onto the weighted-efficiency paths:
/// generator power is whatever the machines absorb mechanically (either MG
/// can be the generator); with the battery assisting, all of it feeds the
/// motor path; when charging, the battery share comes off the generator
/// path first. All three engine flows stay nonnegative at driving cells,
/// which keeps the weighted score at or below one.
pub fn decompose_flows(
    p_engine: f64,
    p_mg1_mech: f64,
    p_mg2_mech: f64,
    p_batt: f64,
) -> (f64, f64, f64) {
    let p_gen = (-p_mg1_mech).max(0.0) + (-p_mg2_mech).max(0.0);
    if p_batt >= 0.0 {
        (0.0, p_gen, p_engine - p_gen)
    } else {
        let p_e1 = -p_batt;
        (p_e1, p_gen - p_e1, p_engine - p_gen)
    }
}

/// Best engine-off operating point of a (cell, mode) pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvPoint {
    pub t_mg1: f64,
    pub t_mg2: f64,
    /// Device speeds (engine, MG1, MG2), rad/s.
    pub speeds: [f64; 3],
    /// Battery terminal power, W (positive discharge).
    pub p_batt: f64,
    /// Chemical battery draw, W (positive when discharging).
    pub p_in: f64,
    pub p_loss: f64,
    /// Efficiency score: loss-fraction based while discharging, recovered
    /// share while braking.
    pub delta: f64,
    pub soc_rate: f64,
}

/// Best engine-on operating point of a (cell, mode) pair.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HybridPoint {
    pub omega_e: f64,
    pub t_e: f64,
    pub t_mg1: f64,
    pub t_mg2: f64,
    pub speeds: [f64; 3],
    pub p_e1: f64,
    pub p_e2: f64,
    pub p_e3: f64,
    pub p_batt: f64,
    pub mu: bool,
    pub delta: f64,
    pub fuel_w: f64,
    pub soc_rate: f64,
}

/// Per-(cell, mode) table entry; `None` marks infeasibility.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CellModeEntry {
    pub ev: Option<EvPoint>,
    pub hybrid: Option<HybridPoint>,
}

/// The full table for one design on one cycle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PearsTable {
    pub grid: StcGrid,
    pub n_modes: usize,
    /// Row-major: entries[cell * n_modes + mode].
    pub entries: Vec<CellModeEntry>,
    /// Per cell: best engine-off and engine-on (mode id, score).
    pub best_ev: Vec<Option<(usize, f64)>>,
    pub best_hybrid: Vec<Option<(usize, f64)>>,
}

impl PearsTable {
    pub fn entry(&self, cell: usize, mode: usize) -> &CellModeEntry {
        &self.entries[cell * self.n_modes + mode]
    }
}

#[derive(Debug, Error)]
pub enum PearsError {
    #[error("mode {0} has dof {1}, only 1- and 2-dof modes are evaluated")]
    UnsupportedDof(usize, usize),
    #[error("design has no evaluable modes")]
    NoModes,
}

/// Float view of a mode's kinematics for the energy layers.
#[derive(Debug, Clone)]
pub struct ModeKinematics {
    pub id: usize,
    pub dynamics_id: u128,
    pub mode_type: ModeType,
    pub dof: usize,
    /// Device speed = out_coeff * w_out + basis_coeff * w_basis
    /// (order engine, MG1, MG2). Single-dof modes have zero basis columns.
    pub out_coeff: [f64; 3],
    pub basis_coeff: [f64; 3],
    pub basis: Option<SpeedBasis>,
}

impl ModeKinematics {
    pub fn from_design(design: &Design) -> Result<Vec<Self>, PearsError> {
        let mut out = Vec::with_capacity(design.modes.len());
        for (id, mode) in design.modes.iter().enumerate() {
            let rel = speed_map(&mode.a_star)
                .map_err(|_| PearsError::UnsupportedDof(id, mode.a_star.dof()))?;
            out.push(Self::from_relation(
                id,
                mode.dynamics_id(),
                mode.mode_type,
                &rel,
            ));
        }
        if out.is_empty() {
            return Err(PearsError::NoModes);
        }
        Ok(out)
    }

    pub fn from_relation(
        id: usize,
        dynamics_id: u128,
        mode_type: ModeType,
        rel: &KinematicRelation,
    ) -> Self {
        match rel {
            KinematicRelation::SingleDof { ratios } => Self {
                id,
                dynamics_id,
                mode_type,
                dof: 1,
                out_coeff: [
                    frac_f64(&ratios[1]),
                    frac_f64(&ratios[2]),
                    frac_f64(&ratios[3]),
                ],
                basis_coeff: [0.0; 3],
                basis: None,
            },
            KinematicRelation::TwoDof {
                basis,
                out_coeff,
                basis_coeff,
            } => Self {
                id,
                dynamics_id,
                mode_type,
                dof: 2,
                out_coeff: [
                    frac_f64(&out_coeff[1]),
                    frac_f64(&out_coeff[2]),
                    frac_f64(&out_coeff[3]),
                ],
                basis_coeff: [
                    frac_f64(&basis_coeff[1]),
                    frac_f64(&basis_coeff[2]),
                    frac_f64(&basis_coeff[3]),
                ],
                basis: Some(*basis),
            },
        }
    }

    /// Device speeds (engine, MG1, MG2) at an output speed and free speed.
    pub fn speeds(&self, omega_out: f64, omega_basis: f64) -> [f64; 3] {
        [
            self.out_coeff[0] * omega_out + self.basis_coeff[0] * omega_basis,
            self.out_coeff[1] * omega_out + self.basis_coeff[1] * omega_basis,
            self.out_coeff[2] * omega_out + self.basis_coeff[2] * omega_basis,
        ]
    }

    /// Whether the static balance leaves a free MG torque direction.
    pub fn has_free_torque(&self) -> bool {
        let [_, a1, a2] = self.out_coeff;
        let [_, b1, b2] = self.basis_coeff;
        match self.dof {
            1 => a1.abs() > 1e-12 && a2.abs() > 1e-12,
            2 => (a1 * b2 - a2 * b1).abs() <= 1e-12,
            _ => false,
        }
    }

    /// Static torque balance: given the demanded output torque, the engine
    /// torque, and optionally a free MG1 torque, solves the MG torques from
    /// the virtual-work conditions of the mode's free coordinates.
    ///
    /// Two-dof modes satisfy two conditions (output and basis coordinate);
    /// one-dof modes satisfy one, leaving a free MG when both couple.
    pub fn solve_mg_torques(
        &self,
        t_demand: f64,
        t_engine: f64,
        t_mg1_free: Option<f64>,
    ) -> Option<(f64, f64)> {
        let [ae, a1, a2] = self.out_coeff;
        let [be, b1, b2] = self.basis_coeff;
        match self.dof {
            1 => {
                // -T_dem + ae*Te + a1*T1 + a2*T2 = 0.
                let rhs = t_demand - ae * t_engine;
                match (a1.abs() > 1e-12, a2.abs() > 1e-12) {
                    (true, true) => {
                        let t1 = t_mg1_free?;
                        Some((t1, (rhs - a1 * t1) / a2))
                    }
                    (true, false) => Some((rhs / a1, 0.0)),
                    (false, true) => Some((0.0, rhs / a2)),
                    (false, false) => (rhs.abs() < 1e-9).then_some((0.0, 0.0)),
                }
            }
            2 => {
                // -T_dem + ae*Te + a1*T1 + a2*T2 = 0
                //          be*Te + b1*T1 + b2*T2 = 0
                let r1 = t_demand - ae * t_engine;
                let r2 = -be * t_engine;
                let det = a1 * b2 - a2 * b1;
                if det.abs() > 1e-12 {
                    Some(((r1 * b2 - a2 * r2) / det, (a1 * r2 - b1 * r1) / det))
                } else {
                    // Collinear MG columns: a free direction remains.
                    let t1 = t_mg1_free?;
                    let (t2, residual) = if a2.abs() > 1e-12 {
                        let t2 = (r1 - a1 * t1) / a2;
                        (t2, (b1 * t1 + b2 * t2 - r2).abs())
                    } else if b2.abs() > 1e-12 {
                        let t2 = (r2 - b1 * t1) / b2;
                        (t2, (a1 * t1 + a2 * t2 - r1).abs())
                    } else {
                        return None;
                    };
                    (residual < 1e-6).then_some((t1, t2))
                }
            }
            _ => None,
        }
    }
}

/// Searches one (cell, mode) pair for its best engine-off and engine-on
/// points. Candidates iterate in a fixed grid order; ties keep the first
/// (lowest-index) candidate.
pub fn search_cell(
    cell: &StcCell,
    mode: &ModeKinematics,
    plant: &Plant,
    cfg: &PearsConfig,
) -> CellModeEntry {
    let omega_out = plant.vehicle.output_speed(cell.speed_mps);
    CellModeEntry {
        ev: search_ev(cell, mode, plant, cfg, omega_out),
        hybrid: search_hybrid(cell, mode, plant, cfg, omega_out),
    }
}

/// Candidate values of the free speed coordinate with the engine off. An
/// engine basis means a stopped engine; an MG basis is a genuine operating
/// choice and is swept.
fn ev_free_speeds(mode: &ModeKinematics, plant: &Plant, cfg: &PearsConfig) -> Vec<f64> {
    match mode.basis {
        None | Some(SpeedBasis::Engine) => vec![0.0],
        Some(SpeedBasis::Mg1) | Some(SpeedBasis::Mg2) => {
            let cap = plant.mg1.max_speed.min(plant.mg2.max_speed);
            let n = (cap / cfg.free_speed_step).floor() as i32;
            (-n..=n).map(|k| k as f64 * cfg.free_speed_step).collect()
        }
    }
}

fn mg_feasible(plant: &Plant, speeds: &[f64; 3], t1: f64, t2: f64) -> bool {
    plant.mg1.within_limits(speeds[1], t1) && plant.mg2.within_limits(speeds[2], t2)
}

fn mg1_torque_candidates(
    mode: &ModeKinematics,
    plant: &Plant,
    cfg: &PearsConfig,
    speeds: &[f64; 3],
) -> Vec<Option<f64>> {
    if mode.has_free_torque() {
        let lim = plant.mg1.torque_limit(speeds[1]);
        let n = (lim / cfg.mg_torque_step).floor() as i32;
        (-n..=n)
            .map(|k| Some(k as f64 * cfg.mg_torque_step))
            .collect()
    } else {
        vec![None]
    }
}

/// Transmission torque targets for a cell. Positive demand must be met
/// exactly; braking demand may be covered partially by the electric path
/// with friction brakes absorbing the rest.
fn balance_targets(torque_nm: f64) -> Vec<f64> {
    if torque_nm >= 0.0 {
        vec![torque_nm]
    } else {
        (0..=10).map(|s| torque_nm * s as f64 / 10.0).collect()
    }
}

fn search_ev(
    cell: &StcCell,
    mode: &ModeKinematics,
    plant: &Plant,
    cfg: &PearsConfig,
    omega_out: f64,
) -> Option<EvPoint> {
    let braking = cell.torque_nm < 0.0;
    let mech_out = cell.torque_nm * omega_out;
    let mut best: Option<EvPoint> = None;
    for &w_free in &ev_free_speeds(mode, plant, cfg) {
        let speeds = mode.speeds(omega_out, w_free);
        // An unfueled engine shaft may coast but not spin backwards or
        // beyond redline.
        if speeds[0] < -1e-9 || speeds[0] > plant.engine.max_speed + 1e-9 {
            continue;
        }
        if speeds[1].abs() > plant.mg1.max_speed + 1e-9
            || speeds[2].abs() > plant.mg2.max_speed + 1e-9
        {
            continue;
        }
        for target in balance_targets(cell.torque_nm) {
            for t1c in mg1_torque_candidates(mode, plant, cfg, &speeds) {
                let Some((t1, t2)) = mode.solve_mg_torques(target, 0.0, t1c) else {
                    continue;
                };
                if !mg_feasible(plant, &speeds, t1, t2) {
                    continue;
                }
                let p_term = plant.mg1.electrical_power(speeds[1], t1)
                    + plant.mg2.electrical_power(speeds[2], t2);
                if p_term.abs() > plant.battery.max_power + 1e-6 {
                    continue;
                }
                let (Some(rate), Some(p_chem)) = (
                    plant.battery.soc_rate(p_term, cfg.soc_nominal),
                    plant.battery.chemical_power(p_term),
                ) else {
                    continue;
                };
                let candidate = if braking {
                    // Recovered share of the braking power offered at the
                    // output; friction brakes absorb the remainder.
                    let recovered = (-p_chem).max(0.0);
                    let delta = if -mech_out > 1e-9 {
                        (recovered / -mech_out).min(1.0)
                    } else {
                        0.0
                    };
                    EvPoint {
                        t_mg1: t1,
                        t_mg2: t2,
                        speeds,
                        p_batt: p_term,
                        p_in: p_chem,
                        p_loss: p_chem.max(0.0),
                        delta,
                        soc_rate: rate,
                    }
                } else if p_chem <= 1e-9 {
                    // Positive demand cannot be met while the battery
                    // charges.
                    if mech_out > 1e-9 {
                        continue;
                    }
                    // Idle cell: holding torque at rest, nothing delivered.
                    EvPoint {
                        t_mg1: t1,
                        t_mg2: t2,
                        speeds,
                        p_batt: p_term,
                        p_in: p_chem,
                        p_loss: p_chem,
                        delta: 0.0,
                        soc_rate: rate,
                    }
                } else {
                    let p_loss = p_chem - mech_out;
                    EvPoint {
                        t_mg1: t1,
                        t_mg2: t2,
                        speeds,
                        p_batt: p_term,
                        p_in: p_chem,
                        p_loss,
                        delta: ev_efficiency(p_loss, p_chem),
                        soc_rate: rate,
                    }
                };
                let better = match &best {
                    None => true,
                    // Ties: lower battery drain wins (idle and braking).
                    Some(b) => {
                        candidate.delta > b.delta + 1e-15
                            || (candidate.delta == b.delta && candidate.p_in < b.p_in - 1e-12)
                    }
                };
                if better {
                    best = Some(candidate);
                }
            }
        }
    }
    best
}

/// Engine speed candidates for the engine-on branch.
fn hybrid_engine_speeds(
    mode: &ModeKinematics,
    plant: &Plant,
    cfg: &PearsConfig,
    omega_out: f64,
) -> Vec<f64> {
    let idle = plant.engine.idle;
    let top = plant.engine.max_speed;
    match (mode.dof, mode.basis) {
        // Engine speed free: sweep the operating range.
        (2, Some(SpeedBasis::Engine)) => {
            let mut out = Vec::new();
            let mut w = idle;
            while w <= top + 1e-9 {
                out.push(w);
                w += cfg.engine_speed_step;
            }
            out
        }
        // Engine speed pinned by the kinematics.
        _ => {
            let w = mode.out_coeff[0] * omega_out;
            if (idle - 1e-9..=top + 1e-9).contains(&w) {
                vec![w]
            } else {
                Vec::new()
            }
        }
    }
}

fn search_hybrid(
    cell: &StcCell,
    mode: &ModeKinematics,
    plant: &Plant,
    cfg: &PearsConfig,
    omega_out: f64,
) -> Option<HybridPoint> {
    let peaks = PeakEffs::of(plant);
    let mut best: Option<HybridPoint> = None;
    for &w_e in &hybrid_engine_speeds(mode, plant, cfg, omega_out) {
        // Free non-engine coordinate: only MG-basis two-dof modes sweep one.
        let free_speeds: Vec<f64> = match (mode.dof, mode.basis) {
            (2, Some(SpeedBasis::Engine)) => vec![w_e],
            (2, Some(_)) => ev_free_speeds(mode, plant, cfg),
            _ => vec![0.0],
        };
        for &w_free in &free_speeds {
            let speeds = mode.speeds(omega_out, w_free);
            if speeds[0] < plant.engine.idle - 1e-9 || speeds[0] > plant.engine.max_speed + 1e-9 {
                continue;
            }
            if speeds[1].abs() > plant.mg1.max_speed + 1e-9
                || speeds[2].abs() > plant.mg2.max_speed + 1e-9
            {
                continue;
            }
            let t_max = plant.engine.max_torque(speeds[0]);
            if t_max <= 0.0 {
                continue;
            }
            let n_te = (t_max / cfg.engine_torque_step).floor() as i32;
            // Braking is recovered on the engine-off branch; engine-on
            // candidates at braking cells only idle the transmission, so
            // recuperated power never inflates the fuel-path weighting.
            let targets = if cell.torque_nm < 0.0 {
                vec![0.0]
            } else {
                balance_targets(cell.torque_nm)
            };
            for k in 0..=n_te {
                let t_e = k as f64 * cfg.engine_torque_step;
                for target in &targets {
                    let target = *target;
                    for t1c in mg1_torque_candidates(mode, plant, cfg, &speeds) {
                        let Some((t1, t2)) = mode.solve_mg_torques(target, t_e, t1c) else {
                            continue;
                        };
                        if !mg_feasible(plant, &speeds, t1, t2) {
                            continue;
                        }
                        let p_term = plant.mg1.electrical_power(speeds[1], t1)
                            + plant.mg2.electrical_power(speeds[2], t2);
                        if p_term.abs() > plant.battery.max_power + 1e-6 {
                            continue;
                        }
                        let Some(rate) = plant.battery.soc_rate(p_term, cfg.soc_nominal) else {
                            continue;
                        };
                        let fuel_w = plant.engine.fuel_power(speeds[0], t_e);
                        if fuel_w <= 0.0 {
                            continue;
                        }
                        let p_engine = speeds[0] * t_e;
                        let (p_e1, p_e2, p_e3) =
                            decompose_flows(p_engine, speeds[1] * t1, speeds[2] * t2, p_term);
                        let flows = HybridFlows {
                            p_e1,
                            p_e2,
                            p_e3,
                            p_batt: p_term,
                            mu: p_term >= 0.0,
                            fuel_power: fuel_w,
                            eff_mg1: plant.mg1.efficiency(speeds[1], t1),
                            eff_mg2: plant.mg2.efficiency(speeds[2], t2),
                            eff_batt: plant.battery.efficiency(p_term),
                        };
                        let Some(delta) = hybrid_efficiency(&flows, &peaks) else {
                            continue;
                        };
                        let candidate = HybridPoint {
                            omega_e: speeds[0],
                            t_e,
                            t_mg1: t1,
                            t_mg2: t2,
                            speeds,
                            p_e1,
                            p_e2,
                            p_e3,
                            p_batt: p_term,
                            mu: p_term >= 0.0,
                            delta,
                            fuel_w,
                            soc_rate: rate,
                        };
                        if best
                            .as_ref()
                            .map_or(true, |b| candidate.delta > b.delta + 1e-15)
                        {
                            best = Some(candidate);
                        }
                    }
                }
            }
        }
    }
    best
}

/// Builds the full table for a design's modes over a discretized cycle.
pub fn build_table(
    modes: &[ModeKinematics],
    grid: StcGrid,
    plant: &Plant,
    cfg: &PearsConfig,
) -> PearsTable {
    let n_modes = modes.len();
    let mut entries = Vec::with_capacity(grid.cells.len() * n_modes);
    for cell in &grid.cells {
        for mode in modes {
            entries.push(search_cell(cell, mode, plant, cfg));
        }
    }
    let mut best_ev = Vec::with_capacity(grid.cells.len());
    let mut best_hybrid = Vec::with_capacity(grid.cells.len());
    for ci in 0..grid.cells.len() {
        let mut ev: Option<(usize, f64)> = None;
        let mut hy: Option<(usize, f64)> = None;
        for mi in 0..n_modes {
            let entry = &entries[ci * n_modes + mi];
            if let Some(p) = &entry.ev {
                if ev.map_or(true, |(_, d)| p.delta > d) {
                    ev = Some((mi, p.delta));
                }
            }
            if let Some(p) = &entry.hybrid {
                if hy.map_or(true, |(_, d)| p.delta > d) {
                    hy = Some((mi, p.delta));
                }
            }
        }
        best_ev.push(ev);
        best_hybrid.push(hy);
    }
    PearsTable {
        grid,
        n_modes,
        entries,
        best_ev,
        best_hybrid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycle::DriveCycle;

    #[test]
    fn ev_efficiency_examples() {
        assert_eq!(ev_efficiency(0.0, 2_000.0), 1.0);
        assert_eq!(ev_efficiency(2_000.0, 2_000.0), 0.0);
        assert!((ev_efficiency(200.0, 2_000.0) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn hybrid_efficiency_peaks_at_unity() {
        let peaks = PeakEffs {
            engine: 0.36,
            mg1: 0.92,
            mg2: 0.92,
        };
        // All power on the direct mechanical path at engine peak.
        let direct = HybridFlows {
            p_e1: 0.0,
            p_e2: 0.0,
            p_e3: 0.36 * 50_000.0,
            p_batt: 0.0,
            mu: true,
            fuel_power: 50_000.0,
            eff_mg1: 0.92,
            eff_mg2: 0.92,
            eff_batt: 0.95,
        };
        let d = hybrid_efficiency(&direct, &peaks).unwrap();
        assert!((d - 1.0).abs() < 1e-12, "direct path: {d}");
        // Pure series path with every component at its peak.
        let series = HybridFlows {
            p_e1: 0.0,
            p_e2: 0.36 * 50_000.0,
            p_e3: 0.0,
            p_batt: 0.0,
            mu: true,
            fuel_power: 50_000.0,
            eff_mg1: 0.92,
            eff_mg2: 0.92,
            eff_batt: 0.95,
        };
        let d = hybrid_efficiency(&series, &peaks).unwrap();
        assert!((d - 1.0).abs() < 1e-12, "series path: {d}");
        // Any path below peak while carrying power drops the score.
        let lossy = HybridFlows {
            eff_mg1: 0.80,
            ..series
        };
        assert!(hybrid_efficiency(&lossy, &peaks).unwrap() < 1.0);
        // Non-positive denominator is infeasible.
        let bad = HybridFlows {
            fuel_power: 0.0,
            p_batt: -1.0,
            mu: false,
            ..direct
        };
        assert!(hybrid_efficiency(&bad, &peaks).is_none());
    }

    #[test]
    fn flow_decomposition_conserves_engine_power() {
        // Assist: generator feeds the motor path only.
        let (e1, e2, e3) = decompose_flows(40_000.0, -15_000.0, 20_000.0, 5_000.0);
        assert_eq!((e1, e2, e3), (0.0, 15_000.0, 25_000.0));
        // Charging: the battery share comes off the generator first.
        let (e1, e2, e3) = decompose_flows(40_000.0, -15_000.0, 20_000.0, -6_000.0);
        assert_eq!((e1, e2, e3), (6_000.0, 9_000.0, 25_000.0));
        assert!((e1 + e2 + e3 - 40_000.0).abs() < 1e-9);
        // MG2 as the generator: its absorption counts toward the generator
        // path, so every flow stays nonnegative.
        let (e1, e2, e3) = decompose_flows(29_000.0, 200.0, -15_000.0, -14_000.0);
        assert_eq!((e1, e2, e3), (14_000.0, 1_000.0, 14_000.0));
        assert!(e1 >= 0.0 && e2 >= 0.0 && e3 >= 0.0);
    }

    #[test]
    fn torque_balance_solutions() {
        // Input-split-like: unique solve for both MGs.
        let mode = ModeKinematics {
            id: 0,
            dynamics_id: 0,
            mode_type: ModeType::InputSplit,
            dof: 2,
            out_coeff: [0.0, -2.0, 1.0],
            basis_coeff: [1.0, 3.0, 0.0],
            basis: Some(SpeedBasis::Engine),
        };
        let (t1, t2) = mode.solve_mg_torques(100.0, 90.0, None).unwrap();
        // Basis row: 1*90 + 3*T1 = 0 -> T1 = -30; output row:
        // -100 + 0*90 -2*(-30) + 1*T2 = 0 -> T2 = 40.
        assert!((t1 + 30.0).abs() < 1e-9);
        assert!((t2 - 40.0).abs() < 1e-9);
        // Fixed gear with one MG: unique.
        let fg = ModeKinematics {
            id: 1,
            dynamics_id: 0,
            mode_type: ModeType::ParallelFgOneMg1Dof,
            dof: 1,
            out_coeff: [1.5, 0.0, 2.0],
            basis_coeff: [0.0; 3],
            basis: None,
        };
        let (t1, t2) = fg.solve_mg_torques(200.0, 80.0, None).unwrap();
        assert_eq!(t1, 0.0);
        assert!((t2 - (200.0 - 1.5 * 80.0) / 2.0).abs() < 1e-9);
        // Fixed gear with both MGs: needs the free parameter.
        let fg2 = ModeKinematics {
            out_coeff: [1.5, 1.0, 2.0],
            ..fg.clone()
        };
        assert!(fg2.solve_mg_torques(200.0, 80.0, None).is_none());
        let (t1, t2) = fg2.solve_mg_torques(200.0, 80.0, Some(10.0)).unwrap();
        assert!((1.0 * t1 + 2.0 * t2 - (200.0 - 120.0)).abs() < 1e-9);
    }

    #[test]
    fn stc_grid_covers_every_sample() {
        let plant = crate::plant::Plant::surrogate();
        let cfg = PearsConfig::default();
        let cycle = DriveCycle::builtin("fuds").unwrap();
        let grid = build_stc_grid(&cycle, &plant, &cfg);
        assert_eq!(grid.sample_cell.len(), cycle.len());
        let total: u32 = grid.cells.iter().map(|c| c.weight).sum();
        assert_eq!(total as usize, cycle.len());
        // A constant-speed cycle lands in a single speed column.
        let flat = DriveCycle::new("flat", vec![20.0; 50]).unwrap();
        let g = build_stc_grid(&flat, &plant, &cfg);
        let cols: std::collections::BTreeSet<i32> = g.cells.iter().map(|c| c.speed_idx).collect();
        assert_eq!(cols.len(), 1);
        // An all-idle cycle is one cell at v=0 carrying the rolling load.
        let idle = DriveCycle::new("idle", vec![0.0; 30]).unwrap();
        let g = build_stc_grid(&idle, &plant, &cfg);
        assert_eq!(g.cells.len(), 1);
        assert_eq!(g.cells[0].speed_mps, 0.0);
        assert!((g.cells[0].torque_nm - plant.vehicle.road_load(0.0)).abs() < 1e-9);
    }
}
