//! Launch performance: per-speed maximum output torque over a design's
//! forward modes, 0-100 km/h time by piecewise integration, and the
//! accept/better/worse screening partition.

use crate::combi::fnv128;
use crate::designs::Design;
use crate::pears::ModeKinematics;
use crate::plant::{defaults, Plant, KMH};
use crate::rational::frac_f64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// Launch evaluation settings.
#[derive(Debug, Clone)]
pub struct LaunchConfig {
    pub top_speed_kmh: f64,
    pub speed_step_kmh: f64,
    pub target_kmh: f64,
    pub accept_s: f64,
    pub benchmark_s: f64,
    /// Enforce the battery electrical cap by scaling MG torques.
    pub battery_cap: bool,
    /// Use the mode's reflected inertia (from the characteristic matrix)
    /// instead of plain vehicle mass.
    pub reflected_inertia: bool,
    pub engine_speed_step: f64,
}

impl Default for LaunchConfig {
    fn default() -> Self {
        Self {
            top_speed_kmh: defaults::LAUNCH_TOP_SPEED_KMH,
            speed_step_kmh: 1.0,
            target_kmh: 100.0,
            accept_s: defaults::LAUNCH_ACCEPT_S,
            benchmark_s: defaults::LAUNCH_BENCHMARK_S,
            battery_cap: true,
            reflected_inertia: true,
            engine_speed_step: defaults::ENGINE_SPEED_STEP_RPM * crate::plant::RPM,
        }
    }
}

/// Maximum-effort data of one mode at one vehicle speed.
#[derive(Debug, Clone, Copy)]
pub struct ModePoint {
    /// Equivalent output-node torque of the gross acceleration.
    pub torque_nm: f64,
    /// Output-row load coefficient (1 / effective output inertia).
    pub a_out: f64,
}

/// A mode's effort curve over the launch speed grid, memoized by dynamics.
#[derive(Debug, Clone)]
pub struct ModeEnvelope {
    pub points: Vec<Option<ModePoint>>,
}

/// Per-design tractive envelope: pointwise best mode over its speed grid.
#[derive(Debug, Clone)]
pub struct TractiveEnvelope {
    pub speeds_mps: Vec<f64>,
    /// Best equivalent output torque per grid speed (`None`: no mode works).
    pub torque_nm: Vec<Option<f64>>,
    pub mode_id: Vec<Option<usize>>,
    pub a_out: Vec<f64>,
}

/// The row-1 torque coefficients and load coefficient of a mode, as floats.
#[derive(Debug, Clone, Copy)]
pub struct OutputRow {
    pub load: f64,
    pub engine: f64,
    pub mg1: f64,
    pub mg2: f64,
}

impl OutputRow {
    pub fn of(design: &Design, mode_id: usize) -> Self {
        let a = &design.modes[mode_id].a_star;
        Self {
            load: frac_f64(a.entry(0, 0)),
            engine: frac_f64(a.entry(0, 1)),
            mg1: frac_f64(a.entry(0, 2)),
            mg2: frac_f64(a.entry(0, 3)),
        }
    }
}

/// Maximum gross output-equivalent torque of one mode at vehicle speed `v`:
/// each torque sits at the limit matching its output-row coefficient sign
/// (the engine only pushes), then both MG torques are scaled by a common
/// factor until the net electrical draw respects the battery cap.
/// `None` when a device overspeeds at `v` (for the engine: in every swept
/// engine state).
pub fn max_mode_torque(
    kin: &ModeKinematics,
    row: &OutputRow,
    v: f64,
    plant: &Plant,
    cfg: &LaunchConfig,
) -> Option<ModePoint> {
    let omega_out = plant.vehicle.output_speed(v);
    if row.load <= 0.0 {
        return None;
    }
    // Engine-speed sweep for modes with a free engine coordinate; pinned
    // speed otherwise.
    let engine_speeds: Vec<f64> = match (kin.dof, kin.basis) {
        (2, Some(crate::dynamics::SpeedBasis::Engine)) => {
            let mut out = vec![0.0]; // engine off is always admissible
            let mut w = plant.engine.idle;
            while w <= plant.engine.max_speed + 1e-9 {
                out.push(w);
                w += cfg.engine_speed_step;
            }
            out
        }
        _ => vec![kin.out_coeff[0] * omega_out],
    };
    let mut best: Option<ModePoint> = None;
    for &w_e in &engine_speeds {
        let w_basis = match kin.basis {
            Some(crate::dynamics::SpeedBasis::Engine) => w_e,
            // Free MG coordinate: hold it at zero for launch.
            Some(_) => 0.0,
            None => 0.0,
        };
        let speeds = kin.speeds(omega_out, w_basis);
        // Overspeed at this state: engine beyond redline is fatal for
        // pinned modes, skipped for swept ones.
        if speeds[0] > plant.engine.max_speed + 1e-9 || speeds[0] < -1e-9 {
            continue;
        }
        if speeds[1].abs() > plant.mg1.max_speed + 1e-9
            || speeds[2].abs() > plant.mg2.max_speed + 1e-9
        {
            continue;
        }
        let t_e = if row.engine > 0.0 {
            plant.engine.max_torque(speeds[0])
        } else {
            0.0
        };
        let t1_cap = plant.mg1.torque_limit(speeds[1]) * row.mg1.signum();
        let t2_cap = plant.mg2.torque_limit(speeds[2]) * row.mg2.signum();
        // Scale MG torques together until the electrical draw fits.
        let electrical = |s: f64| {
            plant.mg1.electrical_power(speeds[1], s * t1_cap)
                + plant.mg2.electrical_power(speeds[2], s * t2_cap)
        };
        let mut scale = 1.0;
        if cfg.battery_cap && electrical(1.0) > plant.battery.max_power {
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if electrical(mid) > plant.battery.max_power {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            scale = lo;
        }
        let gross = row.engine * t_e + row.mg1 * scale * t1_cap + row.mg2 * scale * t2_cap;
        let torque = gross / row.load;
        if best.map_or(true, |b| torque > b.torque_nm) {
            best = Some(ModePoint {
                torque_nm: torque,
                a_out: row.load,
            });
        }
    }
    best
}

/// Computes a mode's effort curve over the full launch grid.
pub fn mode_envelope(
    kin: &ModeKinematics,
    row: &OutputRow,
    plant: &Plant,
    cfg: &LaunchConfig,
) -> ModeEnvelope {
    let n = (cfg.top_speed_kmh / cfg.speed_step_kmh).round() as usize;
    let points = (0..=n)
        .map(|i| {
            let v = i as f64 * cfg.speed_step_kmh * KMH;
            max_mode_torque(kin, row, v, plant, cfg)
        })
        .collect();
    ModeEnvelope { points }
}

/// Memoizes mode envelopes by dynamics id; modes shared between designs are
/// computed once.
pub struct EnvelopeCache {
    shards: Vec<Mutex<HashMap<u128, Arc<ModeEnvelope>>>>,
}

impl EnvelopeCache {
    pub fn new() -> Self {
        Self {
            shards: (0..16).map(|_| Mutex::new(HashMap::new())).collect(),
        }
    }

    pub fn entries(&self) -> usize {
        self.shards.iter().map(|s| s.lock().unwrap().len()).sum()
    }

    pub fn envelope(
        &self,
        kin: &ModeKinematics,
        row: &OutputRow,
        plant: &Plant,
        cfg: &LaunchConfig,
    ) -> Arc<ModeEnvelope> {
        let shard = &self.shards
            [(fnv128(&kin.dynamics_id.to_le_bytes()) % self.shards.len() as u128) as usize];
        if let Some(hit) = shard.lock().unwrap().get(&kin.dynamics_id) {
            return Arc::clone(hit);
        }
        let env = Arc::new(mode_envelope(kin, row, plant, cfg));
        shard
            .lock()
            .unwrap()
            .entry(kin.dynamics_id)
            .or_insert_with(|| Arc::clone(&env))
            .clone()
    }
}

impl Default for EnvelopeCache {
    fn default() -> Self {
        Self::new()
    }
}

/// Pointwise best effort over the design's forward-capable modes.
pub fn design_envelope(
    design: &Design,
    kins: &[ModeKinematics],
    plant: &Plant,
    cfg: &LaunchConfig,
    cache: &EnvelopeCache,
) -> TractiveEnvelope {
    let n = (cfg.top_speed_kmh / cfg.speed_step_kmh).round() as usize;
    let speeds_mps: Vec<f64> = (0..=n)
        .map(|i| i as f64 * cfg.speed_step_kmh * KMH)
        .collect();
    let mut torque_nm = vec![None; n + 1];
    let mut mode_id = vec![None; n + 1];
    let mut a_out = vec![0.0; n + 1];
    // Selection maximizes the net acceleration at each grid speed, not the
    // raw torque: modes differ in reflected inertia, and a lighter path can
    // out-accelerate a torquier one.
    let mut score = vec![f64::NEG_INFINITY; n + 1];
    for kin in kins {
        if !design.modes[kin.id].forward_capable {
            continue;
        }
        let row = OutputRow::of(design, kin.id);
        let env = cache.envelope(kin, &row, plant, cfg);
        for (i, point) in env.points.iter().enumerate() {
            if let Some(p) = point {
                let net = if cfg.reflected_inertia {
                    p.a_out * (p.torque_nm - plant.vehicle.road_load(speeds_mps[i]))
                } else {
                    p.torque_nm
                };
                if net > score[i] {
                    score[i] = net;
                    torque_nm[i] = Some(p.torque_nm);
                    mode_id[i] = Some(kin.id);
                    a_out[i] = p.a_out;
                }
            }
        }
    }
    TractiveEnvelope {
        speeds_mps,
        torque_nm,
        mode_id,
        a_out,
    }
}

/// 0-to-target time by piecewise-constant acceleration over the envelope
/// grid, evaluated at interval midpoints. Infinite when the envelope cannot
/// overcome road load somewhere below the target speed.
pub fn accel_time(envelope: &TractiveEnvelope, plant: &Plant, cfg: &LaunchConfig) -> f64 {
    let v_target = cfg.target_kmh * KMH;
    let mut t = 0.0;
    for i in 0..envelope.speeds_mps.len() - 1 {
        let v0 = envelope.speeds_mps[i];
        if v0 >= v_target {
            break;
        }
        let v1 = envelope.speeds_mps[i + 1].min(v_target);
        let (Some(t0), Some(t1)) = (envelope.torque_nm[i], envelope.torque_nm[i + 1]) else {
            return f64::INFINITY;
        };
        let v_mid = 0.5 * (v0 + v1);
        let torque_mid = 0.5 * (t0 + t1);
        let net = torque_mid - plant.vehicle.road_load(v_mid);
        let accel = if cfg.reflected_inertia {
            // Output-node dynamics: wdot = a_out * T_net; v = w * r / fd.
            let a_out = 0.5 * (envelope.a_out[i] + envelope.a_out[i + 1]);
            a_out * net * plant.vehicle.tire_radius_m / plant.vehicle.final_drive
        } else {
            plant.vehicle.output_torque_to_force(net) / plant.vehicle.mass_kg
        };
        if accel <= 1e-6 {
            return f64::INFINITY;
        }
        t += (v1 - v0) / accel;
    }
    t
}

/// Launch-screen verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaunchClass {
    /// Faster than the benchmark.
    Better,
    /// Between the benchmark and the acceptance threshold.
    Worse,
    /// Slower than the acceptance threshold.
    Rejected,
}

pub fn classify_launch(time_s: f64, cfg: &LaunchConfig) -> LaunchClass {
    if time_s < cfg.benchmark_s {
        LaunchClass::Better
    } else if time_s <= cfg.accept_s {
        LaunchClass::Worse
    } else {
        LaunchClass::Rejected
    }
}

/// Partitions design accel times into better / worse / rejected index sets.
pub fn screen_launch(times: &[f64], cfg: &LaunchConfig) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let mut better = Vec::new();
    let mut worse = Vec::new();
    let mut rejected = Vec::new();
    for (i, &t) in times.iter().enumerate() {
        match classify_launch(t, cfg) {
            LaunchClass::Better => better.push(i),
            LaunchClass::Worse => worse.push(i),
            LaunchClass::Rejected => rejected.push(i),
        }
    }
    (better, worse, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::ModeType;

    fn fixed_gear_mode(ratio_eng: f64, ratio_mg2: f64) -> ModeKinematics {
        ModeKinematics {
            id: 0,
            dynamics_id: 1,
            mode_type: ModeType::ParallelFgOneMg1Dof,
            dof: 1,
            out_coeff: [ratio_eng, 0.0, ratio_mg2],
            basis_coeff: [0.0; 3],
            basis: None,
        }
    }

    #[test]
    fn single_path_fixed_gear_torque() {
        let plant = Plant::surrogate();
        let cfg = LaunchConfig {
            battery_cap: false,
            ..LaunchConfig::default()
        };
        // Engine-only fixed gear, ratio 2: output torque = 2 * WOT.
        let kin = ModeKinematics {
            mode_type: ModeType::EngineOnlyFixedGear,
            out_coeff: [2.0, 0.0, 0.0],
            ..fixed_gear_mode(2.0, 0.0)
        };
        let row = OutputRow {
            load: 0.01,
            engine: 0.02,
            mg1: 0.0,
            mg2: 0.0,
        };
        let v = 20.0;
        let w_e = 2.0 * plant.vehicle.output_speed(v);
        let point = max_mode_torque(&kin, &row, v, &plant, &cfg).unwrap();
        let expect = 2.0 * plant.engine.max_torque(w_e);
        assert!(
            (point.torque_nm - expect).abs() < 1e-9,
            "{}",
            point.torque_nm
        );
    }

    #[test]
    fn mg_power_cap_limits_single_motor_ev() {
        let plant = Plant::surrogate();
        let cfg = LaunchConfig {
            battery_cap: false,
            ..LaunchConfig::default()
        };
        // EV mode with MG2 at 3:1; find the speed where MG2 hits redline.
        let kin = ModeKinematics {
            mode_type: ModeType::EvOneMg1Dof,
            out_coeff: [0.0, 0.0, 3.0],
            ..fixed_gear_mode(0.0, 3.0)
        };
        let row = OutputRow {
            load: 0.02,
            engine: 0.0,
            mg1: 0.0,
            mg2: 0.06,
        };
        let w_mg_cap = plant.mg2.max_speed;
        let v_at_cap = plant.vehicle.vehicle_speed(w_mg_cap / 3.0);
        let point = max_mode_torque(&kin, &row, v_at_cap - 0.2, &plant, &cfg).unwrap();
        let w2 = 3.0 * plant.vehicle.output_speed(v_at_cap - 0.2);
        let expect = 3.0 * (plant.mg2.max_power / w2);
        assert!((point.torque_nm - expect).abs() < 1e-6);
        // Beyond redline the mode is infeasible.
        assert!(max_mode_torque(&kin, &row, v_at_cap + 1.0, &plant, &cfg).is_none());
    }

    #[test]
    fn negative_coefficient_commands_negative_torque() {
        let plant = Plant::surrogate();
        let cfg = LaunchConfig {
            battery_cap: false,
            ..LaunchConfig::default()
        };
        let kin = ModeKinematics {
            mode_type: ModeType::EvTwoMg1Dof,
            out_coeff: [0.0, -1.5, 2.0],
            ..fixed_gear_mode(0.0, 2.0)
        };
        let row = OutputRow {
            load: 0.02,
            engine: 0.0,
            mg1: -0.03,
            mg2: 0.04,
        };
        let point = max_mode_torque(&kin, &row, 10.0, &plant, &cfg).unwrap();
        let speeds = kin.speeds(plant.vehicle.output_speed(10.0), 0.0);
        let expect = (-0.03) * (-plant.mg1.torque_limit(speeds[1]))
            + 0.04 * plant.mg2.torque_limit(speeds[2]);
        assert!((point.torque_nm - expect / 0.02).abs() < 1e-9);
    }

    #[test]
    fn battery_cap_scales_both_mgs() {
        let plant = Plant::surrogate();
        let capped = LaunchConfig::default();
        let uncapped = LaunchConfig {
            battery_cap: false,
            ..LaunchConfig::default()
        };
        let kin = ModeKinematics {
            mode_type: ModeType::EvTwoMg1Dof,
            out_coeff: [0.0, 2.0, 2.0],
            ..fixed_gear_mode(0.0, 2.0)
        };
        let row = OutputRow {
            load: 0.02,
            engine: 0.0,
            mg1: 0.04,
            mg2: 0.04,
        };
        let v = 25.0;
        let with_cap = max_mode_torque(&kin, &row, v, &plant, &capped).unwrap();
        let without = max_mode_torque(&kin, &row, v, &plant, &uncapped).unwrap();
        assert!(with_cap.torque_nm < without.torque_nm);
        // The capped draw sits at the battery limit.
        let speeds = kin.speeds(plant.vehicle.output_speed(v), 0.0);
        let ratio = with_cap.torque_nm / without.torque_nm;
        let t1 = ratio * plant.mg1.torque_limit(speeds[1]);
        let t2 = ratio * plant.mg2.torque_limit(speeds[2]);
        let draw =
            plant.mg1.electrical_power(speeds[1], t1) + plant.mg2.electrical_power(speeds[2], t2);
        assert!(
            (draw - plant.battery.max_power).abs() < 200.0,
            "draw {draw}"
        );
    }

    #[test]
    fn accel_time_integrates_and_handles_stall() {
        let plant = Plant::surrogate();
        let cfg = LaunchConfig::default();
        let n = (cfg.top_speed_kmh / cfg.speed_step_kmh).round() as usize;
        let speeds: Vec<f64> = (0..=n).map(|i| i as f64 * KMH).collect();
        // Constant 2000 N*m: strong launch.
        let envelope = TractiveEnvelope {
            speeds_mps: speeds.clone(),
            torque_nm: vec![Some(2_000.0); n + 1],
            mode_id: vec![Some(0); n + 1],
            a_out: vec![1.0 / 40.0; n + 1],
        };
        let t = accel_time(&envelope, &plant, &cfg);
        assert!(t.is_finite() && t > 2.0 && t < 10.0, "t = {t}");
        // Zero available torque: never reaches speed.
        let stalled = TractiveEnvelope {
            speeds_mps: speeds,
            torque_nm: vec![Some(0.0); n + 1],
            mode_id: vec![Some(0); n + 1],
            a_out: vec![1.0 / 40.0; n + 1],
        };
        assert!(accel_time(&stalled, &plant, &cfg).is_infinite());
    }

    #[test]
    fn integration_converges_under_grid_halving() {
        let ctx = crate::pipeline::RunContext::default_context();
        let (_, design) = ctx.benchmark_design().unwrap();
        let kins = crate::pears::ModeKinematics::from_design(&design).unwrap();
        let coarse_cfg = LaunchConfig::default();
        let fine_cfg = LaunchConfig {
            speed_step_kmh: 0.5,
            ..LaunchConfig::default()
        };
        let coarse = {
            let cache = EnvelopeCache::new();
            let env = design_envelope(&design, &kins, &ctx.plant, &coarse_cfg, &cache);
            accel_time(&env, &ctx.plant, &coarse_cfg)
        };
        let fine = {
            let cache = EnvelopeCache::new();
            let env = design_envelope(&design, &kins, &ctx.plant, &fine_cfg, &cache);
            accel_time(&env, &ctx.plant, &fine_cfg)
        };
        assert!(coarse.is_finite() && fine.is_finite());
        assert!(
            ((fine - coarse) / coarse).abs() < 0.005,
            "halving the grid moved 0-100 from {coarse} to {fine}"
        );
    }

    #[test]
    fn sign_rule_matches_fine_grid_search() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(0x51611);
        for _ in 0..200 {
            // Random output row and box limits; engine torque one-signed.
            let row = [
                rng.gen_range(-5..=5i64) as f64 / 100.0,
                rng.gen_range(-5..=5i64) as f64 / 100.0,
                rng.gen_range(-5..=5i64) as f64 / 100.0,
            ];
            let t_eng_max = rng.gen_range(0..=500i64) as f64;
            let t1_max = rng.gen_range(0..=300i64) as f64;
            let t2_max = rng.gen_range(0..=300i64) as f64;
            // Box-vertex solution: each torque at the limit matching its
            // coefficient sign.
            let vertex = row[0] * if row[0] > 0.0 { t_eng_max } else { 0.0 }
                + row[1] * t1_max * row[1].signum()
                + row[2] * t2_max * row[2].signum();
            // Fine grid search over the box.
            let mut best = f64::NEG_INFINITY;
            let steps = 20;
            for i in 0..=steps {
                let te = t_eng_max * i as f64 / steps as f64;
                for j in -(steps as i64)..=steps as i64 {
                    let t1 = t1_max * j as f64 / steps as f64;
                    for k in -(steps as i64)..=steps as i64 {
                        let t2 = t2_max * k as f64 / steps as f64;
                        best = best.max(row[0] * te + row[1] * t1 + row[2] * t2);
                    }
                }
            }
            assert!(
                (vertex - best).abs() < 1e-9,
                "vertex {vertex} vs grid {best} for row {row:?}"
            );
        }
    }

    #[test]
    fn launch_partition() {
        let cfg = LaunchConfig::default();
        assert_eq!(classify_launch(6.5, &cfg), LaunchClass::Better);
        assert_eq!(classify_launch(6.9, &cfg), LaunchClass::Worse);
        assert_eq!(classify_launch(7.5, &cfg), LaunchClass::Rejected);
        let (b, w, r) = screen_launch(&[6.5, 6.9, 7.5, f64::INFINITY], &cfg);
        assert_eq!((b, w, r), (vec![0], vec![1], vec![2, 3]));
    }
}
