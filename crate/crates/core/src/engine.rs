//! Fixed-timestep closed-loop orchestrator: the plant integrates at
//! 1 kHz, the controller runs at the configured control rate, and every
//! sensor path is injected with its configured latency.
//!
//! Measurement synchronization follows the parallel-measurement
//! contract: the positioning and motor measurements for a control tick
//! are both taken at the same instant, `t_m + t_c` before the tick, so
//! the tick computes from a coherent world snapshot whose age is exactly
//! the system latency budget. Commands take effect `t_c` after the tick.
//! All delays are quantized to the plant step.

use std::collections::VecDeque;

use serde::Serialize;

use crate::control::{
    condition_command, Controller, ControllerInput, ProportionalController, ScriptedController,
};
use crate::drivebus::{
    encode_accel_limit, encode_frame, encode_speed, parse_revolutions_response, DriveEmulator,
    ModbusFrame, FN_WRITE_SINGLE, REG_ACCEL_LIMIT, REG_REVOLUTIONS, REG_TARGET_SPEED,
};
use crate::error::Error;
use crate::geom::{UnitQuat, Vec3};
use crate::kinematics::{ovf_distance_from_revs, RollerSpeeds};
use crate::locomotion::LocomotionState;
use crate::plant::PlantState;
use crate::scenario::{ControllerConfig, ScenarioConfig};
use crate::tracking::{body_center_global, TrackerModel, TrackerStream};

/// Plant integration step, seconds. Every latency is quantized to it.
pub const PLANT_DT: f64 = 0.001;

/// Start-stop phases of a run, labeled per control tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Idle,
    StartTransient,
    OffsetWalking,
    StopTransient,
    CarryBack,
}

impl Stage {
    pub fn label(&self) -> &'static str {
        match self {
            Stage::Idle => "idle",
            Stage::StartTransient => "start_transient",
            Stage::OffsetWalking => "offset_walking",
            Stage::StopTransient => "stop_transient",
            Stage::CarryBack => "carry_back",
        }
    }
}

/// Every signal of one control tick.
#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    /// Tick time, seconds.
    pub t: f64,
    /// Ground-truth intended velocity, m/s.
    pub intent_v: Vec3,
    /// Ground-truth cumulative intended distance, m.
    pub intent_d: Vec3,
    /// Ground-truth body-center world position, m.
    pub body: Vec3,
    /// Local remaining distance from the delivered tracker data, m.
    pub d_rm: Vec3,
    /// OVF offset distance from the delivered motor telemetry, m.
    pub d_ovf: Vec3,
    /// Controller velocity command, m/s.
    pub cmd_v: Vec3,
    /// Realized OVF surface velocity (ground truth), m/s.
    pub ovf_v: Vec3,
    /// Motor shaft speeds, rad/s (ground truth).
    pub motor_w: [f64; 2],
    /// Motor encoder revolutions (ground truth, unquantized).
    pub motor_n: [f64; 2],
    /// Reconstructed physical locomotion distance, m.
    pub d_pe: Vec3,
    /// Virtual-environment locomotion distance, m.
    pub d_ve: Vec3,
    /// True when command conditioning clamped this tick.
    pub saturated: bool,
    /// Stage label, filled after the run.
    pub stage: Stage,
}

/// A completed run: one record per control tick, plus the fault marker
/// when the body left the active radius.
#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub fault: Option<f64>,
    pub scenario: ScenarioConfig,
}

impl Trace {
    pub fn control_period(&self) -> f64 {
        self.scenario.rig.control_period
    }
}

fn build_controller(cfg: &ControllerConfig) -> Box<dyn Controller> {
    match cfg {
        ControllerConfig::Proportional { accel_limit } => {
            Box::new(ProportionalController { accel_limit: *accel_limit })
        }
        ControllerConfig::Scripted { schedule, accel_limit } => Box::new(ScriptedController {
            schedule: schedule.clone(),
            accel_limit: *accel_limit,
        }),
    }
}

fn steps(seconds: f64) -> i64 {
    (seconds / PLANT_DT).round() as i64
}

/// Runs a scenario to completion (or to its boundary fault) and returns
/// the trace. Identical scenarios produce bit-identical traces.
pub fn run(scenario: &ScenarioConfig) -> Result<Trace, Error> {
    scenario.validate()?;
    let rig = scenario.rig.clone();
    let profile = scenario.build_profile()?;
    let steps_per_tick = steps(rig.control_period).max(1);
    let total_steps = steps(scenario.duration).max(0);

    // Quantized latency budget.
    let lat = &scenario.latency;
    let t_rm_steps = steps(lat.t_rm);
    let t_ovf_steps = steps(lat.t_ovf);
    let t_c_steps = steps(lat.t_c);
    let latch_offset = t_rm_steps.max(t_ovf_steps) + t_c_steps;

    let tracker_model = TrackerModel {
        p_utrl: scenario.tracker.p_utrl,
        t_rm: t_rm_steps as f64 * PLANT_DT,
        noise_sigma: scenario.tracker.noise_sigma,
    };
    let mut tracker = TrackerStream::new(tracker_model, scenario.seed, t_c_steps as f64 * PLANT_DT);

    let mut drives = [DriveEmulator::new(1), DriveEmulator::new(2)];
    let mut controller = build_controller(&scenario.controller);

    // Configure the drive acceleration limits before the run starts.
    let accel_raw = encode_accel_limit(scenario.controller.accel_limit(), &rig);
    for drive in drives.iter_mut() {
        let frame = ModbusFrame::write_single(drive.unit, REG_ACCEL_LIMIT, accel_raw);
        let wire = encode_frame(frame.unit, frame.function, &frame.payload);
        drive.handle(&wire, 0.0).expect("drive accepts its setup write");
    }

    let start = Vec3::new(scenario.walker.start.x, scenario.walker.center_height, scenario.walker.start.z);
    let mut plant = PlantState::new(start, drives[0].accel_limit_shaft());
    let mut locomotion = LocomotionState::new(scenario.gains.beta1, scenario.gains.beta2);
    let mut prev_conditioned = RollerSpeeds::new(0.0, 0.0);
    let mut prev_revs = (0.0, 0.0);

    // Delayed telemetry responses: (deliver step, stamp step, bytes per drive).
    let mut telemetry: VecDeque<(i64, i64, [Vec<u8>; 2])> = VecDeque::new();
    // Write frames in flight: (apply step, bytes per drive).
    let mut pending_writes: VecDeque<(i64, [Vec<u8>; 2])> = VecDeque::new();

    let mut records = Vec::new();
    let mut fault = None;

    'run: for s in 0..total_steps {
        let t = s as f64 * PLANT_DT;

        // Sensors observe the state at the start of the step.
        let observed = plant.effective_body();
        tracker.push_truth(t, observed - scenario.tracker.p_utrl, UnitQuat::IDENTITY);

        // Encoder latch for the tick this step serves.
        if (s + latch_offset) % steps_per_tick == 0 {
            let read = ModbusFrame::read_holding(0, REG_REVOLUTIONS, 2);
            let responses = [0, 1].map(|i| {
                let req = encode_frame(drives[i].unit, read.function, &read.payload);
                drives[i]
                    .handle(&req, plant.motors[i].revolutions)
                    .expect("drive answers its own read")
            });
            telemetry.push_back((s + t_ovf_steps + t_c_steps, s, responses));
        }

        // Control tick.
        if s % steps_per_tick == 0 {
            let stamp = s - latch_offset;

            // Coherent snapshot: tracker sample and encoder telemetry
            // both taken at `stamp`. Before the budget has elapsed the
            // initial rest state stands in.
            let (p_ug, revs) = if stamp < 0 {
                (start, (0.0, 0.0))
            } else {
                let sample = tracker
                    .delivered_at(stamp as f64 * PLANT_DT, t, 1e-9)
                    .expect("tracker sample for the tick stamp is delivered");
                let p_ug = body_center_global(&sample, scenario.tracker.p_utrl)?;
                let mut revs = prev_revs;
                while let Some(front) = telemetry.front() {
                    if front.0 > s {
                        break;
                    }
                    let (_, stamp_step, responses) = telemetry.pop_front().unwrap();
                    if stamp_step == stamp {
                        let n1 = parse_revolutions_response(&responses[0])
                            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                        let n2 = parse_revolutions_response(&responses[1])
                            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
                        revs = (n1, n2);
                    }
                }
                (p_ug, revs)
            };

            let output = controller.step(
                &ControllerInput { t, p_ug, p_ref: scenario.p_ref },
                &rig,
            );
            let conditioned = condition_command(&output, &prev_conditioned, &rig, rig.control_period);
            prev_conditioned = conditioned.shaft_speeds;

            // Speed commands go out now and take effect after `t_c`.
            let (w1, w2) = conditioned.shaft_speeds.scalars();
            let frames = [(1u8, w1), (2u8, w2)].map(|(unit, w)| {
                let frame = ModbusFrame::write_single(unit, REG_TARGET_SPEED, encode_speed(w));
                encode_frame(frame.unit, frame.function, &frame.payload)
            });
            pending_writes.push_back((s + t_c_steps, frames));

            // Locomotion reconstruction from the delivered snapshot.
            let delta = ovf_distance_from_revs(revs.0 - prev_revs.0, revs.1 - prev_revs.1, &rig);
            prev_revs = revs;
            locomotion.update(
                delta.scale(1.0 / rig.control_period),
                &scenario.slip,
                rig.control_period,
                p_ug,
                scenario.p_ref,
                &scenario.ve_mapping,
            );

            records.push(TraceRecord {
                t,
                intent_v: profile.velocity_at(t),
                intent_d: profile.distance_at(t),
                body: plant.effective_body(),
                d_rm: locomotion.d_rm,
                d_ovf: locomotion.d_ovf,
                cmd_v: output.cmd.as_vec3(),
                ovf_v: plant.ovf_velocity(&rig),
                motor_w: [plant.motors[0].shaft_speed, plant.motors[1].shaft_speed],
                motor_n: [plant.motors[0].revolutions, plant.motors[1].revolutions],
                d_pe: locomotion.d_pe,
                d_ve: locomotion.d_ve,
                saturated: conditioned.saturated,
                stage: Stage::Idle,
            });
        }

        // Commands whose downlink delay has elapsed reach the drives.
        while let Some(front) = pending_writes.front() {
            if front.0 > s {
                break;
            }
            let (_, frames) = pending_writes.pop_front().unwrap();
            for (drive, wire) in drives.iter_mut().zip(frames.iter()) {
                drive.handle(wire, 0.0).expect("drive accepts speed write");
            }
        }

        // Plant integration over [t, t + dt].
        for (motor, drive) in plant.motors.iter_mut().zip(drives.iter()) {
            motor.accel_limit = drive.accel_limit_shaft();
        }
        let commanded = RollerSpeeds::new(
            drives[0].commanded_shaft_speed(),
            drives[1].commanded_shaft_speed(),
        );
        if let Err(Error::BoundaryFault { t }) = plant.step(&profile, &commanded, &rig, PLANT_DT) {
            fault = Some(t);
            break 'run;
        }
    }

    let mut trace = Trace { records, fault, scenario: scenario.clone() };
    let stages = crate::metrics::classify_stages(&trace);
    for (record, stage) in trace.records.iter_mut().zip(stages) {
        record.stage = stage;
    }
    Ok(trace)
}
