//! Centering controllers and command conditioning.
//!
//! The shipped closed-loop controller is a proportional law with a
//! deadzone: the OVF velocity always points from the user toward the
//! reference point, with amplitude `K_p·(‖p_off‖ - D_th)` outside the
//! deadzone and zero inside. A scripted controller replays a fixed
//! command schedule for open-loop experiments.

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::kinematics::{inverse_kinematics, RigConfig, RollerSpeeds, VelocityCommand};

/// Controller input for one tick: the latest delivered tracker-derived
/// body position and the reference point.
#[derive(Debug, Clone, Copy)]
pub struct ControllerInput {
    pub t: f64,
    pub p_ug: Vec3,
    pub p_ref: Vec3,
}

/// Controller output: a surface velocity command plus the acceleration
/// limit to condition it with.
#[derive(Debug, Clone, Copy)]
pub struct ControllerOutput {
    pub cmd: VelocityCommand,
    /// Surface acceleration limit, m/s².
    pub accel_limit: f64,
}

/// Planar offset from the user to the reference point; the projection
/// matrix diag(1, 0, 1) discards height.
pub fn offset_vector(p_ref: Vec3, p_ug: Vec3) -> Vec3 {
    (p_ref - p_ug).project_xz()
}

/// Deadzone-proportional amplitude: 0 below `d_th`, then
/// `k_p·(‖p_off‖ - d_th)`. Continuous at the threshold.
pub fn amplitude(p_off: Vec3, k_p: f64, d_th: f64) -> f64 {
    let dist = p_off.norm_xz();
    if dist < d_th {
        0.0
    } else {
        k_p * (dist - d_th)
    }
}

/// One proportional control step. The zero-amplitude command uses the
/// `theta_star = 0` convention, which removes the 0/0 at `p_off = 0`.
pub fn control_step(input: &ControllerInput, cfg: &RigConfig) -> ControllerOutput {
    let p_off = offset_vector(input.p_ref, input.p_ug);
    let alpha = amplitude(p_off, cfg.k_p, cfg.d_th);
    let cmd = if alpha > 0.0 {
        VelocityCommand::new(p_off.z.atan2(p_off.x), alpha)
    } else {
        VelocityCommand::ZERO
    };
    ControllerOutput { cmd, accel_limit: f64::INFINITY }
}

/// A velocity-command source stepped once per control tick.
pub trait Controller {
    fn step(&mut self, input: &ControllerInput, cfg: &RigConfig) -> ControllerOutput;
}

/// The proportional deadzone law with a configurable acceleration limit.
#[derive(Debug, Clone)]
pub struct ProportionalController {
    /// Surface acceleration limit sent to the drives, m/s².
    pub accel_limit: f64,
}

impl Controller for ProportionalController {
    fn step(&mut self, input: &ControllerInput, cfg: &RigConfig) -> ControllerOutput {
        ControllerOutput { accel_limit: self.accel_limit, ..control_step(input, cfg) }
    }
}

/// One entry of a scripted command schedule.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleEntry {
    /// Time from which this command applies, seconds.
    pub from_t: f64,
    /// Command direction, radians.
    pub theta_star: f64,
    /// Command amplitude, m/s.
    pub alpha: f64,
}

/// Replays a fixed schedule of commands, ignoring the tracked position.
/// Used by the open-loop acceleration experiments.
#[derive(Debug, Clone)]
pub struct ScriptedController {
    pub schedule: Vec<ScheduleEntry>,
    pub accel_limit: f64,
}

impl Controller for ScriptedController {
    fn step(&mut self, input: &ControllerInput, _cfg: &RigConfig) -> ControllerOutput {
        let mut cmd = VelocityCommand::ZERO;
        for entry in &self.schedule {
            if input.t >= entry.from_t {
                cmd = VelocityCommand::new(entry.theta_star, entry.alpha);
            }
        }
        ControllerOutput { cmd, accel_limit: self.accel_limit }
    }
}

/// Motor-shaft speed targets after conditioning, plus saturation flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedCommand {
    /// Target motor shaft speeds, rad/s (roller speeds scaled by λ).
    pub shaft_speeds: RollerSpeeds,
    /// True when the rated-speed or slew clamp engaged this tick.
    pub saturated: bool,
}

/// Converts a velocity command to motor-shaft targets, clamping each
/// motor to its rated speed and its per-tick change to `accel_limit·dt`.
///
/// Clamping acts per motor, so a saturated command may transiently point
/// off the requested direction; the flag records it.
pub fn condition_command(
    out: &ControllerOutput,
    prev_shaft_speeds: &RollerSpeeds,
    cfg: &RigConfig,
    dt: f64,
) -> ConditionedCommand {
    let roller = inverse_kinematics(&out.cmd, cfg).expect("validated config");
    let rated = cfg.rated_shaft_speed();
    // Surface m/s² → motor shaft rad/s².
    let max_step = out.accel_limit / cfg.roller_radius() * cfg.lambda * dt;
    let mut saturated = false;
    let mut clamp = |target_roller: f64, prev: f64| -> f64 {
        let mut w = target_roller * cfg.lambda;
        if w.abs() > rated {
            w = w.clamp(-rated, rated);
            saturated = true;
        }
        let step = w - prev;
        if step.abs() > max_step {
            w = prev + step.signum() * max_step;
            saturated = true;
        }
        w
    };
    let (p1, p2) = prev_shaft_speeds.scalars();
    let (r1, r2) = roller.scalars();
    let w1 = clamp(r1, p1);
    let w2 = clamp(r2, p2);
    ConditionedCommand { shaft_speeds: RollerSpeeds::new(w1, w2), saturated }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{forward_ovf, max_speed_envelope};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn cfg() -> RigConfig {
        RigConfig::default()
    }

    #[test]
    fn offset_vector_discards_height() {
        assert_eq!(offset_vector(Vec3::ZERO, Vec3::ZERO), Vec3::ZERO);
        let off = offset_vector(Vec3::ZERO, Vec3::new(0.1, 0.9, 0.05));
        assert_eq!(off, Vec3::planar(-0.1, -0.05));
        assert_eq!(offset_vector(Vec3::new(0.2, 0.0, 0.0), Vec3::ZERO), Vec3::planar(0.2, 0.0));
    }

    #[test]
    fn amplitude_piecewise_values() {
        assert_eq!(amplitude(Vec3::planar(0.05, 0.0), 2.0, 0.08), 0.0);
        assert_abs_diff_eq!(amplitude(Vec3::planar(0.18, 0.0), 2.0, 0.08), 0.20, epsilon = 1e-12);
        // Boundary: both branches agree.
        assert_abs_diff_eq!(amplitude(Vec3::planar(0.08, 0.0), 2.0, 0.08), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn control_step_points_at_reference() {
        let c = cfg();
        let out = control_step(
            &ControllerInput { t: 0.0, p_ug: Vec3::planar(-0.18, 0.0), p_ref: Vec3::ZERO },
            &c,
        );
        let v = out.cmd.as_vec3();
        assert_abs_diff_eq!(v.x, 0.2, epsilon = 1e-12);
        assert_abs_diff_eq!(v.z, 0.0, epsilon = 1e-12);

        let out = control_step(
            &ControllerInput { t: 0.0, p_ug: Vec3::planar(0.0, -0.18), p_ref: Vec3::ZERO },
            &c,
        );
        let v = out.cmd.as_vec3();
        assert_abs_diff_eq!(v.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.z, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn deadzone_commands_zero() {
        let out = control_step(
            &ControllerInput { t: 0.0, p_ug: Vec3::planar(0.03, 0.04), p_ref: Vec3::ZERO },
            &cfg(),
        );
        assert_eq!(out.cmd, VelocityCommand::ZERO);
    }

    #[test]
    fn conditioning_passes_unclamped_commands_through() {
        let c = cfg();
        let out = ControllerOutput {
            cmd: VelocityCommand::new(0.0, 0.5),
            accel_limit: f64::INFINITY,
        };
        let prev = RollerSpeeds::new(0.0, 0.0);
        let cond = condition_command(&out, &prev, &c, 0.05);
        let expect = inverse_kinematics(&out.cmd, &c).unwrap();
        assert_abs_diff_eq!(cond.shaft_speeds.w_r1.z, expect.w_r1.z * c.lambda, epsilon = 1e-9);
        assert_abs_diff_eq!(cond.shaft_speeds.w_r2.z, expect.w_r2.z * c.lambda, epsilon = 1e-9);
        assert!(!cond.saturated);
    }

    #[test]
    fn conditioning_clamps_diagonal_to_envelope() {
        let c = cfg();
        let out = ControllerOutput {
            cmd: VelocityCommand::new(FRAC_PI_4, 1.78),
            accel_limit: f64::INFINITY,
        };
        let cond = condition_command(&out, &RollerSpeeds::new(0.0, 0.0), &c, 0.05);
        assert!(cond.saturated);
        let roller = RollerSpeeds::new(
            cond.shaft_speeds.w_r1.z / c.lambda,
            cond.shaft_speeds.w_r2.z / c.lambda,
        );
        let realized = forward_ovf(&roller, &c).unwrap();
        assert_abs_diff_eq!(
            realized.norm(),
            max_speed_envelope(&c, FRAC_PI_4),
            epsilon = 1e-9
        );
    }

    #[test]
    fn conditioning_slews_step_commands() {
        let c = cfg();
        let out = ControllerOutput {
            cmd: VelocityCommand::new(0.0, 1.79),
            accel_limit: 12.0,
        };
        let cond = condition_command(&out, &RollerSpeeds::new(0.0, 0.0), &c, 0.05);
        assert!(cond.saturated);
        let roller = RollerSpeeds::new(
            cond.shaft_speeds.w_r1.z / c.lambda,
            cond.shaft_speeds.w_r2.z / c.lambda,
        );
        let realized = forward_ovf(&roller, &c).unwrap();
        // First tick realizes accel_limit · dt = 0.6 m/s.
        assert_abs_diff_eq!(realized.norm(), 0.6, epsilon = 1e-9);
    }

    #[test]
    fn scripted_controller_replays_schedule() {
        let mut ctrl = ScriptedController {
            schedule: vec![
                ScheduleEntry { from_t: 1.0, theta_star: 0.0, alpha: 1.0 },
                ScheduleEntry { from_t: 3.0, theta_star: 0.0, alpha: 0.0 },
            ],
            accel_limit: 12.0,
        };
        let c = cfg();
        let probe = |ctrl: &mut ScriptedController, t: f64| {
            ctrl.step(&ControllerInput { t, p_ug: Vec3::ZERO, p_ref: Vec3::ZERO }, &c)
                .cmd
                .alpha
        };
        assert_eq!(probe(&mut ctrl, 0.5), 0.0);
        assert_eq!(probe(&mut ctrl, 1.5), 1.0);
        assert_eq!(probe(&mut ctrl, 3.5), 0.0);
    }

    proptest! {
        #[test]
        fn command_points_toward_reference(x in -0.5f64..0.5, z in -0.5f64..0.5) {
            let c = cfg();
            let input = ControllerInput { t: 0.0, p_ug: Vec3::planar(x, z), p_ref: Vec3::ZERO };
            let out = control_step(&input, &c);
            if out.cmd.alpha > 0.0 {
                let p_off = offset_vector(input.p_ref, input.p_ug);
                prop_assert!(out.cmd.as_vec3().dot(p_off) > 0.0);
            }
        }

        #[test]
        fn amplitude_is_monotone_and_continuous(d in 0.0f64..0.6, eps in 1e-6f64..1e-3) {
            let a = amplitude(Vec3::planar(d, 0.0), 2.0, 0.08);
            let b = amplitude(Vec3::planar(d + eps, 0.0), 2.0, 0.08);
            prop_assert!(b >= a);
            prop_assert!(b - a <= 2.0 * eps + 1e-12);
        }
    }
}
