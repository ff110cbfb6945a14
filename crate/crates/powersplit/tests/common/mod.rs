//! Shared test support: an independent brute-force dynamics oracle, random
//! system generators, and a brute-force reference for the mode scheduler.
//!
//! The oracle deliberately avoids the library's reduction path: it assembles
//! the full Lagrange-multiplier system with every connection as an explicit
//! constraint row and eliminates it with its own Gaussian routine, keeping
//! the primal block only when it is uniquely determined.

#![allow(dead_code)]

use num_traits::Zero;
use powersplit::dynamics::SystemModel;
use powersplit::planetary::Connection;
use powersplit::rational::{frac, frac_int, Frac};
use rand::rngs::StdRng;
use rand::Rng;

/// Reduced row echelon form over rationals, written independently of the
/// library's linear algebra. Returns pivot columns.
pub fn rref(mat: &mut Vec<Vec<Frac>>) -> Vec<usize> {
    let rows = mat.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = mat[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(src) = (r..rows).find(|&i| !mat[i][c].is_zero()) else {
            continue;
        };
        mat.swap(r, src);
        let inv = mat[r][c].recip();
        for j in c..cols {
            let v = &mat[r][j] * &inv;
            mat[r][j] = v;
        }
        for i in 0..rows {
            if i != r && !mat[i][c].is_zero() {
                let f = mat[i][c].clone();
                for j in c..cols {
                    let d = &f * &mat[r][j];
                    mat[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Full-system accelerations per unit device torque, solved as one big
/// Lagrange-multiplier system. Column order: load, engine, MG1, MG2.
/// Returns `None` when the accelerations are not uniquely determined
/// (degenerate system).
pub fn lagrange_accelerations(
    model: &SystemModel,
    connections: &[Connection],
) -> Option<Vec<Vec<Frac>>> {
    let n = model.n_nodes;
    // Constraint rows: levers, then node-node merges, then grounds.
    let mut rows: Vec<Vec<Frac>> = Vec::new();
    for lever in &model.constraints {
        let mut row = vec![frac_int(0); n];
        for (k, &node) in lever.nodes.iter().enumerate() {
            row[node] += lever.coeffs[k].clone();
        }
        rows.push(row);
    }
    for conn in connections {
        let mut row = vec![frac_int(0); n];
        match conn {
            Connection::Pair(a, b) => {
                row[a.0] += frac_int(1);
                row[b.0] -= frac_int(1);
            }
            Connection::Ground(a) => {
                row[a.0] += frac_int(1);
            }
        }
        rows.push(row);
    }
    let m = rows.len();
    let dim = n + m;
    let nrhs = 4;
    // Augmented [I J^T | rhs; J 0 | 0].
    let mut work: Vec<Vec<Frac>> = vec![vec![frac_int(0); dim + nrhs]; dim];
    for i in 0..n {
        work[i][i] = model.inertia[i].clone();
        for (j, row) in rows.iter().enumerate() {
            work[i][n + j] = row[i].clone();
            work[n + j][i] = row[i].clone();
        }
    }
    for (col, &node) in model.device_nodes.iter().enumerate() {
        work[node][dim + col] += frac_int(1);
    }
    let pivots = rref(&mut work);
    if pivots.iter().any(|&c| c >= dim) {
        return None; // inconsistent
    }
    let mut row_of = vec![None; dim];
    for (r, &c) in pivots.iter().enumerate() {
        row_of[c] = Some(r);
    }
    let mut accel = vec![vec![frac_int(0); nrhs]; n];
    for var in 0..n {
        let r = row_of[var]?;
        for col in 0..dim {
            if col != var && !work[r][col].is_zero() && row_of[col].is_none() {
                return None; // couples to a free variable: not unique
            }
        }
        for k in 0..nrhs {
            accel[var][k] = work[r][dim + k].clone();
        }
    }
    Some(accel)
}

/// The oracle's 4x4 characteristic matrix (device rows of the full solve).
pub fn lagrange_a_star(model: &SystemModel, connections: &[Connection]) -> Option<Vec<Vec<Frac>>> {
    let accel = lagrange_accelerations(model, connections)?;
    Some(
        model
            .device_nodes
            .iter()
            .map(|&node| accel[node].clone())
            .collect(),
    )
}

/// A basis for the speeds admissible under levers plus connections,
/// over all nodes. Derived from the oracle's constraint rows alone.
pub fn admissible_speed_basis(model: &SystemModel, connections: &[Connection]) -> Vec<Vec<Frac>> {
    let n = model.n_nodes;
    let mut rows: Vec<Vec<Frac>> = Vec::new();
    for lever in &model.constraints {
        let mut row = vec![frac_int(0); n];
        for (k, &node) in lever.nodes.iter().enumerate() {
            row[node] += lever.coeffs[k].clone();
        }
        rows.push(row);
    }
    for conn in connections {
        let mut row = vec![frac_int(0); n];
        match conn {
            Connection::Pair(a, b) => {
                row[a.0] += frac_int(1);
                row[b.0] -= frac_int(1);
            }
            Connection::Ground(a) => row[a.0] += frac_int(1),
        }
        rows.push(row);
    }
    if rows.is_empty() {
        rows.push(vec![frac_int(0); n]);
    }
    let pivots = rref(&mut rows);
    let mut pivot_of_col = vec![None; n];
    for (r, &c) in pivots.iter().enumerate() {
        pivot_of_col[c] = Some(r);
    }
    let mut basis = Vec::new();
    for free in 0..n {
        if pivot_of_col[free].is_some() {
            continue;
        }
        let mut v = vec![frac_int(0); n];
        v[free] = frac_int(1);
        for col in 0..n {
            if let Some(r) = pivot_of_col[col] {
                v[col] = -rows[r][free].clone();
            }
        }
        basis.push(v);
    }
    basis
}

/// Random positive rational with small numerator/denominator.
pub fn random_frac(rng: &mut StdRng, max_num: i64, max_den: i64) -> Frac {
    frac(rng.gen_range(1..=max_num), rng.gen_range(1..=max_den))
}

// ---------------------------------------------------------------------------
// Toy scheduling instances and the exhaustive reference scheduler.
//
// Instances are built so every cost is an exact small integer in f64 terms
// (fuel in integer grams, integer squared speeds, SOC on the grid with the
// terminal weight scaled to cancel the step denominator), which lets the
// dynamic program be compared against brute force with exact equality.

use powersplit::cycle::DriveCycle;
use powersplit::dp::{mode_shift_penalty, DpConfig, SocRounding};
use powersplit::pears::{CellModeEntry, EvPoint, HybridPoint, PearsTable, StcCell, StcGrid};

pub struct ToyInstance {
    pub table: PearsTable,
    pub cycle: DriveCycle,
    pub cfg: DpConfig,
}

/// Builds a random instance: `n_states` (mode, engine) points per cell,
/// `n_stages` stages over up to 3 cells, and a SOC grid of at most
/// `soc_points` nodes. SOC rates are integer multiples of the grid step.
pub fn toy_instance(
    rng: &mut StdRng,
    n_stages: usize,
    n_modes: usize,
    soc_points: usize,
) -> ToyInstance {
    // A dyadic grid anchored at 0.5 keeps every SOC value, difference and
    // squared terminal term exactly representable, so the dynamic program
    // and the brute force can be compared with exact equality.
    let soc_step = 1.0 / 512.0;
    let soc_min = 0.5;
    let soc_max = soc_min + soc_step * (soc_points as f64 - 1.0);
    let n_cells = rng.gen_range(1..=3usize);
    let mut per_cell: Vec<Vec<CellModeEntry>> = Vec::new();
    for _ in 0..n_cells {
        let mut row = Vec::new();
        for _ in 0..n_modes {
            let mut entry = CellModeEntry::default();
            if rng.gen_bool(0.8) {
                entry.ev = Some(EvPoint {
                    t_mg1: 0.0,
                    t_mg2: 0.0,
                    speeds: [
                        0.0,
                        rng.gen_range(-3..=3i64) as f64,
                        rng.gen_range(-3..=3i64) as f64,
                    ],
                    p_batt: 0.0,
                    p_in: 0.0,
                    p_loss: 0.0,
                    delta: 0.9,
                    soc_rate: rng.gen_range(-2..=1i64) as f64 * soc_step,
                });
            }
            if rng.gen_bool(0.8) {
                entry.hybrid = Some(HybridPoint {
                    omega_e: rng.gen_range(1..=4i64) as f64,
                    t_e: 0.0,
                    t_mg1: 0.0,
                    t_mg2: 0.0,
                    speeds: [
                        rng.gen_range(1..=4i64) as f64,
                        rng.gen_range(-3..=3i64) as f64,
                        rng.gen_range(-3..=3i64) as f64,
                    ],
                    p_e1: 0.0,
                    p_e2: 0.0,
                    p_e3: 0.0,
                    p_batt: 0.0,
                    mu: true,
                    delta: 0.8,
                    // Integer grams per second via the LHV conversion.
                    fuel_w: rng.gen_range(1..=9i64) as f64
                        * powersplit::plant::defaults::FUEL_LHV_J_PER_G,
                    soc_rate: rng.gen_range(-1..=2i64) as f64 * soc_step,
                });
            }
            row.push(entry);
        }
        per_cell.push(row);
    }
    let cells: Vec<StcCell> = (0..n_cells)
        .map(|i| StcCell {
            speed_idx: i as i32,
            torque_idx: 0,
            speed_mps: 10.0,
            torque_nm: 50.0,
            weight: 1,
        })
        .collect();
    let sample_cell: Vec<usize> = (0..n_stages).map(|_| rng.gen_range(0..n_cells)).collect();
    let table = PearsTable {
        grid: StcGrid { cells, sample_cell },
        n_modes,
        entries: per_cell.into_iter().flatten().collect(),
        best_ev: vec![],
        best_hybrid: vec![],
    };
    let cycle = DriveCycle::new("toy", vec![10.0; n_stages]).unwrap();
    // Terminal weight scaled so beta * (k * step)^2 is an exact integer.
    let beta_units = rng.gen_range(0..=3i64) as f64;
    let mid = soc_min + soc_step * ((soc_points / 2) as f64);
    let cfg = DpConfig {
        soc_min,
        soc_max,
        soc_step,
        soc_initial: mid,
        soc_desired: mid,
        alpha: 1.0,
        beta: beta_units / (soc_step * soc_step),
        shift_weights: [1.0, 1.0, 1.0],
        stage_s: 1.0,
        rounding: SocRounding::Snap,
    };
    ToyInstance { table, cycle, cfg }
}

/// Exhaustive reference: enumerates every (mode, engine) sequence, tracks
/// SOC exactly on the grid, and returns the minimum total cost.
pub fn brute_force_cost(instance: &ToyInstance, allowed: Option<&[usize]>) -> Option<f64> {
    #[derive(Clone, Copy)]
    struct Point {
        fuel_g: f64,
        rate_steps: i64,
        speeds: [f64; 3],
    }
    let table = &instance.table;
    let cfg = &instance.cfg;
    let n_stages = instance.cycle.len();
    let states_at = |k: usize| -> Vec<Point> {
        let cell = table.grid.sample_cell[k];
        let mut out = Vec::new();
        for mode in 0..table.n_modes {
            if let Some(allow) = allowed {
                if !allow.contains(&mode) {
                    continue;
                }
            }
            let entry = table.entry(cell, mode);
            if let Some(p) = &entry.ev {
                out.push(Point {
                    fuel_g: 0.0,
                    rate_steps: (p.soc_rate / cfg.soc_step).round() as i64,
                    speeds: p.speeds,
                });
            }
            if let Some(p) = &entry.hybrid {
                out.push(Point {
                    fuel_g: p.fuel_w / powersplit::plant::defaults::FUEL_LHV_J_PER_G,
                    rate_steps: (p.soc_rate / cfg.soc_step).round() as i64,
                    speeds: p.speeds,
                });
            }
        }
        out
    };
    let soc0_steps = ((cfg.soc_initial - cfg.soc_min) / cfg.soc_step).round() as i64;
    let max_steps = ((cfg.soc_max - cfg.soc_min) / cfg.soc_step).round() as i64;
    let desired_steps = ((cfg.soc_desired - cfg.soc_min) / cfg.soc_step).round() as i64;
    let mut best: Option<f64> = None;
    // Depth-first enumeration of every state sequence.
    fn recurse(
        k: usize,
        n_stages: usize,
        soc_steps: i64,
        max_steps: i64,
        desired_steps: i64,
        cost: f64,
        prev_speeds: Option<[f64; 3]>,
        states_at: &dyn Fn(usize) -> Vec<(f64, i64, [f64; 3])>,
        cfg: &DpConfig,
        best: &mut Option<f64>,
    ) {
        if k == n_stages {
            let d = (desired_steps - soc_steps) as f64 * cfg.soc_step;
            let total = cost + cfg.beta * d * d;
            if best.map_or(true, |b| total < b) {
                *best = Some(total);
            }
            return;
        }
        for (fuel_g, rate, speeds) in states_at(k) {
            let soc_next = soc_steps + rate;
            if soc_next < 0 || soc_next > max_steps {
                continue;
            }
            let shift = match prev_speeds {
                Some(prev) => cfg.alpha * mode_shift_penalty(&prev, &speeds, &cfg.shift_weights),
                None => 0.0,
            };
            recurse(
                k + 1,
                n_stages,
                soc_next,
                max_steps,
                desired_steps,
                cost + fuel_g + shift,
                Some(speeds),
                states_at,
                cfg,
                best,
            );
        }
    }
    let states_fn = |k: usize| -> Vec<(f64, i64, [f64; 3])> {
        states_at(k)
            .into_iter()
            .map(|p| (p.fuel_g, p.rate_steps, p.speeds))
            .collect()
    };
    recurse(
        0,
        n_stages,
        soc0_steps,
        max_steps,
        desired_steps,
        0.0,
        None,
        &states_fn,
        cfg,
        &mut best,
    );
    best
}
