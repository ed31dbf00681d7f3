//! Post-hoc trace analysis: scene latency, working delay, stage
//! classification, carry-back drift, and path statistics. All metrics
//! are pure functions of a completed trace.

use crate::engine::{Stage, Trace};
use crate::error::Error;
use crate::geom::Vec3;

/// Intent speeds below this count as "stopped", m/s.
const EPS_INTENT: f64 = 0.02;
/// Local (world) body speeds below this count as "offset by the OVF", m/s.
const EPS_LOCAL: f64 = 0.05;
/// The platform counts as working while its speed is at or above 1 mm/s.
const EPS_OVF: f64 = 1e-3;

/// Lag between the computed locomotion and the intended locomotion:
/// the delay `δ ≥ 0` minimizing the mean squared error between
/// `D_pe(t)` and the intended distance at `t - δ`, searched at 1 ms
/// resolution over [0, 0.2 s].
pub fn measure_scene_latency(trace: &Trace) -> Result<f64, Error> {
    let profile = trace.scenario.build_profile()?;
    let moved = trace.records.iter().any(|r| r.intent_d.norm() > 1e-12);
    if !moved {
        return Err(Error::InsufficientMotion);
    }
    let mut best = (f64::INFINITY, 0.0);
    for ms in 0..=200 {
        let delta = ms as f64 * 1e-3;
        let mut mse = 0.0;
        for r in &trace.records {
            let expect = profile.distance_at(r.t - delta);
            let err = r.d_pe - expect;
            mse += err.dot(err);
        }
        if mse < best.0 {
            best = (mse, delta);
        }
    }
    Ok(best.1)
}

/// Time of the first tick at which the intended velocity has reached
/// zero for good. `None` when the walker never moves or never stops.
pub fn intent_stop_time(trace: &Trace) -> Option<f64> {
    let moving = |v: Vec3| v.norm() > 1e-12;
    let last_moving = trace.records.iter().rposition(|r| moving(r.intent_v))?;
    if last_moving + 1 >= trace.records.len() {
        return None; // still moving at the end of the run
    }
    Some(trace.records[last_moving + 1].t)
}

/// Working delay: how long the platform keeps moving after the walker's
/// volitional stop — the time from the intended velocity reaching zero
/// to the OVF speed last falling below 1 mm/s.
pub fn measure_working_delay(trace: &Trace) -> Result<f64, Error> {
    let t_stop = intent_stop_time(trace).ok_or(Error::NoStopEvent)?;
    let last_working = trace
        .records
        .iter()
        .rev()
        .find(|r| r.ovf_v.norm() >= EPS_OVF)
        .map(|r| r.t);
    Ok(match last_working {
        Some(t) => (t - t_stop).max(0.0),
        None => 0.0,
    })
}

/// Labels each tick of a start-stop style run. Unknown patterns fall
/// back to `Idle`.
pub fn classify_stages(trace: &Trace) -> Vec<Stage> {
    let mut stages = Vec::with_capacity(trace.records.len());
    let mut prev_intent = 0.0;
    let mut rising = true;
    for r in &trace.records {
        let vi = r.intent_v.norm();
        let vo = r.ovf_v.norm();
        let local = (r.intent_v + r.ovf_v).norm();
        if vi > prev_intent + 1e-9 {
            rising = true;
        } else if vi < prev_intent - 1e-9 {
            rising = false;
        }
        prev_intent = vi;
        let stage = if vi >= EPS_INTENT {
            if local < EPS_LOCAL {
                Stage::OffsetWalking
            } else if rising {
                Stage::StartTransient
            } else {
                Stage::StopTransient
            }
        } else if vo >= EPS_OVF {
            Stage::CarryBack
        } else {
            Stage::Idle
        };
        stages.push(stage);
    }
    stages
}

/// First tick time of each contiguous stage run, in order.
pub fn stage_boundaries(trace: &Trace) -> Vec<(Stage, f64)> {
    let mut out = Vec::new();
    for r in &trace.records {
        if out.last().map(|&(s, _)| s) != Some(r.stage) {
            out.push((r.stage, r.t));
        }
    }
    out
}

/// Virtual-environment drift after the walker stops: the change of
/// `D_ve` from the moment the reconstruction has caught up with the stop
/// (one latency budget plus one tick after it) to the end of the run.
pub fn post_stop_drift(trace: &Trace) -> Result<Vec3, Error> {
    let t_stop = intent_stop_time(trace).ok_or(Error::NoStopEvent)?;
    let t_ref = t_stop + trace.scenario.latency.t_s() + trace.control_period();
    let settled = trace
        .records
        .iter()
        .find(|r| r.t >= t_ref)
        .ok_or(Error::NoStopEvent)?;
    let last = trace.records.last().ok_or(Error::NoStopEvent)?;
    Ok(last.d_ve - settled.d_ve)
}

/// Drift component along the walk direction, meters. Positive slides the
/// scene forward, negative backward.
pub fn drift_along_travel(trace: &Trace) -> Result<f64, Error> {
    let drift = post_stop_drift(trace)?;
    let total = trace
        .records
        .last()
        .map(|r| r.intent_d)
        .unwrap_or(Vec3::ZERO);
    let norm = total.norm_xz();
    if norm < 1e-9 {
        return Err(Error::InsufficientMotion);
    }
    Ok(drift.dot(total.scale(1.0 / norm)))
}

/// Length of the virtual-environment path, meters.
pub fn ve_path_length(trace: &Trace) -> f64 {
    trace
        .records
        .windows(2)
        .map(|w| (w[1].d_ve - w[0].d_ve).norm())
        .sum()
}

/// Largest planar distance of the body from the platform center, meters.
pub fn max_center_offset(trace: &Trace) -> f64 {
    trace
        .records
        .iter()
        .map(|r| r.body.norm_xz())
        .fold(0.0, f64::max)
}

/// Number of ticks on which command conditioning clamped.
pub fn saturation_count(trace: &Trace) -> usize {
    trace.records.iter().filter(|r| r.saturated).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run;
    use crate::geom::Vec3;
    use crate::plant::ProfileSegment;
    use crate::scenario::{LatencyParams, ScenarioConfig};

    fn seg(duration: f64, x: f64, z: f64, ramp: f64) -> ProfileSegment {
        ProfileSegment { duration, target: Vec3::planar(x, z), ramp }
    }

    fn start_stop(duration: f64) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.walker.profile = vec![seg(4.5, 0.5, 0.0, 1.44), seg(1.0, 0.0, 0.0, 1.44)];
        cfg.duration = duration;
        cfg
    }

    #[test]
    fn scene_latency_matches_the_budget() {
        let trace = run(&start_stop(10.0)).unwrap();
        let delta = measure_scene_latency(&trace).unwrap();
        assert!(delta <= 0.023 + 0.001 + 1e-12, "delta = {delta}");
        assert!(delta >= 0.020, "delta = {delta}");
    }

    #[test]
    fn scene_latency_vanishes_without_injected_delays() {
        let mut cfg = start_stop(10.0);
        cfg.latency = LatencyParams::ZERO;
        let trace = run(&cfg).unwrap();
        assert!(measure_scene_latency(&trace).unwrap() <= 1e-3);
    }

    #[test]
    fn scene_latency_follows_a_slow_tracker() {
        let mut cfg = start_stop(10.0);
        cfg.latency.t_rm = 0.1;
        let trace = run(&cfg).unwrap();
        let delta = measure_scene_latency(&trace).unwrap();
        assert!((delta - 0.101).abs() <= 0.002, "delta = {delta}");
    }

    #[test]
    fn scene_latency_requires_motion() {
        let cfg = ScenarioConfig { duration: 2.0, ..ScenarioConfig::default() };
        let trace = run(&cfg).unwrap();
        assert_eq!(measure_scene_latency(&trace), Err(Error::InsufficientMotion));
    }

    #[test]
    fn working_delay_is_multi_second_for_an_offset_stop() {
        let trace = run(&start_stop(10.0)).unwrap();
        let delay = measure_working_delay(&trace).unwrap();
        assert!(delay > 1.0, "delay = {delay}");
        assert!(delay < 5.0, "delay = {delay}");
    }

    #[test]
    fn working_delay_shrinks_with_stiffer_gain() {
        let mut soft = start_stop(12.0);
        soft.rig.k_p = 1.5;
        let mut stiff = start_stop(12.0);
        stiff.rig.k_p = 4.0;
        let soft_delay = measure_working_delay(&run(&soft).unwrap()).unwrap();
        let stiff_delay = measure_working_delay(&run(&stiff).unwrap()).unwrap();
        assert!(stiff_delay < soft_delay, "{stiff_delay} vs {soft_delay}");
    }

    #[test]
    fn working_delay_requires_a_stop() {
        let cfg = ScenarioConfig { duration: 2.0, ..ScenarioConfig::default() };
        let trace = run(&cfg).unwrap();
        assert_eq!(measure_working_delay(&trace), Err(Error::NoStopEvent));
    }

    #[test]
    fn stages_appear_in_order_for_a_start_stop_run() {
        let trace = run(&start_stop(10.0)).unwrap();
        let first = |want: Stage| trace.records.iter().position(|r| r.stage == want);
        let start = first(Stage::StartTransient).expect("start transient");
        let offset = first(Stage::OffsetWalking).expect("offset walking");
        let stop = first(Stage::StopTransient).expect("stop transient");
        let carry = first(Stage::CarryBack).expect("carry back");
        assert!(start < offset && offset < stop && stop < carry);
        assert_eq!(trace.records.last().unwrap().stage, Stage::Idle);
    }

    #[test]
    fn quiescent_run_is_all_idle() {
        let cfg = ScenarioConfig { duration: 2.0, ..ScenarioConfig::default() };
        let trace = run(&cfg).unwrap();
        assert!(trace.records.iter().all(|r| r.stage == Stage::Idle));
    }

    #[test]
    fn drift_sign_tracks_the_gain_ratio() {
        for (beta1, beta2, sign) in [(0.5, 1.0, -1.0), (1.0, 1.0, 0.0), (5.0, 1.0, 1.0)] {
            let mut cfg = start_stop(12.0);
            cfg.gains.beta1 = beta1;
            cfg.gains.beta2 = beta2;
            let trace = run(&cfg).unwrap();
            let along = drift_along_travel(&trace).unwrap();
            if sign == 0.0 {
                assert!(along.abs() <= 1e-3, "matched gains drifted {along}");
            } else {
                assert!(along.abs() >= 0.01, "drift too small: {along}");
                assert_eq!(along.signum(), sign, "drift {along}");
            }
        }
    }
}
