//! Body-center positioning from tracker pose samples, and a model of the
//! tracker as a delayed, optionally noisy sensor stream.
//!
//! The tracker is worn at the waist; the body center is a fixed point
//! `p_utrl` in the tracker's local frame. The global body-center position
//! is `p_ug = p_tg + rotate(q_tg, p_utrl)`.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geom::{quat_rotate, UnitQuat, Vec3};

/// One timestamped tracker pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerSample {
    /// Sample timestamp, seconds.
    pub t: f64,
    /// Tracker position in the global frame, meters.
    pub p_tg: Vec3,
    /// Tracker attitude in the global frame.
    pub q_tg: UnitQuat,
}

/// Sensor model: constant pipeline latency plus zero-mean Gaussian
/// position noise. Samples are emitted at the plant rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerModel {
    /// Body-center offset in the tracker frame, meters.
    pub p_utrl: Vec3,
    /// Positioning measurement latency, seconds.
    pub t_rm: f64,
    /// Position noise standard deviation per axis, meters.
    pub noise_sigma: f64,
}

impl Default for TrackerModel {
    fn default() -> Self {
        TrackerModel {
            p_utrl: Vec3::new(0.0, -0.1, 0.0),
            t_rm: 0.022,
            noise_sigma: 0.001,
        }
    }
}

impl TrackerModel {
    pub fn validate(&self) -> Result<(), Error> {
        if self.t_rm < 0.0 {
            return Err(Error::InvalidConfig("tracker latency must be non-negative".into()));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::InvalidConfig("tracker noise must be non-negative".into()));
        }
        Ok(())
    }
}

/// Global body-center position from a tracker sample:
/// `p_ug = p_tg + rotate(q_tg, p_utrl)`.
pub fn body_center_global(s: &TrackerSample, p_utrl: Vec3) -> Result<Vec3, Error> {
    if (s.q_tg.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::PoseAttitudeInvalid);
    }
    Ok(s.p_tg + quat_rotate(s.q_tg, p_utrl)?)
}

/// Single-producer delayed sample stream. The producer pushes truth
/// poses; consumers only see samples whose delivery time has passed.
#[derive(Debug, Clone)]
pub struct TrackerStream {
    model: TrackerModel,
    rng: ChaCha8Rng,
    /// (delivery time, sample), ordered by timestamp.
    queue: VecDeque<(f64, TrackerSample)>,
    /// Extra delivery delay beyond `t_rm` (upload leg), seconds.
    extra_delay: f64,
}

impl TrackerStream {
    pub fn new(model: TrackerModel, seed: u64, extra_delay: f64) -> Self {
        TrackerStream {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            queue: VecDeque::new(),
            extra_delay,
        }
    }

    pub fn model(&self) -> &TrackerModel {
        &self.model
    }

    /// Samples the true pose at time `t`. The sample keeps timestamp `t`
    /// but becomes visible to consumers at `t + t_rm + extra_delay`.
    pub fn push_truth(&mut self, t: f64, position: Vec3, attitude: UnitQuat) {
        let noisy = if self.model.noise_sigma > 0.0 {
            let sigma = self.model.noise_sigma;
            let mut draw = || sigma * self.rng.sample::<f64, _>(StandardNormal);
            Vec3::new(position.x + draw(), position.y + draw(), position.z + draw())
        } else {
            position
        };
        let sample = TrackerSample { t, p_tg: noisy, q_tg: attitude };
        self.queue.push_back((t + self.model.t_rm + self.extra_delay, sample));
    }

    /// Newest sample delivered by time `now`, discarding older ones.
    pub fn latest_delivered(&mut self, now: f64) -> Option<TrackerSample> {
        let mut latest = None;
        while let Some(&(delivery, sample)) = self.queue.front() {
            if delivery <= now {
                latest = Some(sample);
                self.queue.pop_front();
            } else {
                break;
            }
        }
        latest
    }

    /// The sample with exact timestamp `t`, if it has been delivered by
    /// `now`. Earlier samples are discarded. `tol` absorbs float rounding
    /// on step-grid times.
    pub fn delivered_at(&mut self, stamp: f64, now: f64, tol: f64) -> Option<TrackerSample> {
        while let Some(&(delivery, sample)) = self.queue.front() {
            if delivery > now + tol || sample.t > stamp + tol {
                break;
            }
            self.queue.pop_front();
            if (sample.t - stamp).abs() <= tol {
                return Some(sample);
            }
        }
        None
    }
}

/// One-shot form of the stream: emits the truth pose timestamped `t`,
/// with noise drawn from the seeded generator.
pub fn sample_tracker(
    true_pose: (Vec3, UnitQuat),
    t: f64,
    model: &TrackerModel,
    seed: u64,
) -> TrackerSample {
    let mut stream = TrackerStream::new(model.clone(), seed, 0.0);
    stream.push_truth(t, true_pose.0, true_pose.1);
    stream
        .latest_delivered(t + model.t_rm)
        .expect("sample just pushed is delivered at t + t_rm")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const SQRT2_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn identity_attitude_adds_offset() {
        let s = TrackerSample {
            t: 0.0,
            p_tg: Vec3::new(1.0, 1.0, 1.0),
            q_tg: UnitQuat::IDENTITY,
        };
        let p = body_center_global(&s, Vec3::new(0.0, -0.1, 0.0)).unwrap();
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(p.z, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn yaw_leaves_vertical_offset_unchanged() {
        let s = TrackerSample {
            t: 0.0,
            p_tg: Vec3::new(0.0, 1.0, 0.0),
            q_tg: UnitQuat::new(SQRT2_2, 0.0, SQRT2_2, 0.0).unwrap(),
        };
        let p = body_center_global(&s, Vec3::new(0.0, -0.1, 0.0)).unwrap();
        assert_abs_diff_eq!(p.y, 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.z, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn roll_rotates_lateral_offset() {
        let s = TrackerSample {
            t: 0.0,
            p_tg: Vec3::ZERO,
            q_tg: UnitQuat::new(SQRT2_2, 0.0, 0.0, SQRT2_2).unwrap(),
        };
        let p = body_center_global(&s, Vec3::new(0.1, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn non_unit_attitude_is_rejected() {
        let s = TrackerSample {
            t: 0.0,
            p_tg: Vec3::ZERO,
            q_tg: UnitQuat { w: 1.1, x: 0.0, y: 0.0, z: 0.0 },
        };
        assert_eq!(
            body_center_global(&s, Vec3::ZERO),
            Err(Error::PoseAttitudeInvalid)
        );
    }

    #[test]
    fn reconstruction_is_inverse_consistent() {
        let q = UnitQuat::new(0.3, -0.4, 0.8, 0.1).unwrap();
        let p_utrl = Vec3::new(0.02, -0.1, 0.05);
        let p_tg = Vec3::new(0.4, 1.1, -0.2);
        let s = TrackerSample { t: 0.0, p_tg, q_tg: q };
        let p_ug = body_center_global(&s, p_utrl).unwrap();
        let back = p_ug - quat_rotate(q, p_utrl).unwrap();
        assert!((back - p_tg).norm() < 1e-9);
    }

    #[test]
    fn noiseless_zero_latency_sample_equals_truth() {
        let model = TrackerModel { t_rm: 0.0, noise_sigma: 0.0, ..TrackerModel::default() };
        let pose = (Vec3::new(0.2, 1.0, -0.1), UnitQuat::IDENTITY);
        let s = sample_tracker(pose, 1.5, &model, 7);
        assert_eq!(s.t, 1.5);
        assert_eq!(s.p_tg, pose.0);
    }

    #[test]
    fn delay_queue_arithmetic() {
        let model = TrackerModel { t_rm: 0.022, noise_sigma: 0.0, ..TrackerModel::default() };
        let mut stream = TrackerStream::new(model, 0, 0.0);
        for k in 0..=50 {
            let t = k as f64 * 0.001;
            stream.push_truth(t, Vec3::new(t, 0.0, 0.0), UnitQuat::IDENTITY);
        }
        // Newest sample visible at t=0.050 is the truth taken at t=0.028.
        let s = stream.latest_delivered(0.050).unwrap();
        assert_abs_diff_eq!(s.t, 0.028, epsilon = 1e-12);
    }

    #[test]
    fn fixed_seed_reproduces_the_stream() {
        let model = TrackerModel { t_rm: 0.0, noise_sigma: 0.001, ..TrackerModel::default() };
        let run = |seed| {
            let mut stream = TrackerStream::new(model.clone(), seed, 0.0);
            let mut out = Vec::new();
            for k in 0..100 {
                let t = k as f64 * 0.001;
                stream.push_truth(t, Vec3::ZERO, UnitQuat::IDENTITY);
                out.push(stream.latest_delivered(t).unwrap().p_tg);
            }
            out
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn delivered_stream_is_truth_shifted_by_latency() {
        let model = TrackerModel { t_rm: 0.010, noise_sigma: 0.0, ..TrackerModel::default() };
        let mut stream = TrackerStream::new(model, 0, 0.0);
        for k in 0..100 {
            let t = k as f64 * 0.001;
            stream.push_truth(t, Vec3::new(2.0 * t, 0.0, 0.0), UnitQuat::IDENTITY);
        }
        for k in 20..90 {
            let now = k as f64 * 0.001;
            let s = stream.delivered_at(now - 0.010, now, 1e-9).unwrap();
            assert_abs_diff_eq!(s.p_tg.x, 2.0 * (now - 0.010), epsilon = 1e-9);
        }
    }
}
