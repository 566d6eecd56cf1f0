//! Deterministic external disturbance: a constant wrench plus a band-limited
//! sum of sinusoids drawn once from a seeded generator.

use crate::dynamics::Wrench;
use nalgebra::{Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceConfig {
    #[serde(default)]
    pub constant_torque_nm: Vector3<f64>,
    #[serde(default)]
    pub constant_force_n: Vector3<f64>,
    /// RMS of each random torque channel.
    #[serde(default)]
    pub random_torque_rms_nm: f64,
    /// RMS of each random force channel.
    #[serde(default)]
    pub random_force_rms_n: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_hz: f64,
    #[serde(default = "default_tones")]
    pub tones: usize,
}

fn default_bandwidth() -> f64 {
    0.05
}

fn default_tones() -> usize {
    8
}

impl Default for DisturbanceConfig {
    fn default() -> Self {
        DisturbanceConfig {
            constant_torque_nm: Vector3::zeros(),
            constant_force_n: Vector3::zeros(),
            random_torque_rms_nm: 0.0,
            random_force_rms_n: 0.0,
            bandwidth_hz: default_bandwidth(),
            tones: default_tones(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Tone {
    channel: usize,
    amplitude: f64,
    omega: f64,
    phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceModel {
    constant: Wrench,
    tones: Vec<Tone>,
}

impl DisturbanceModel {
    pub fn none() -> Self {
        DisturbanceModel { constant: Wrench::zero(), tones: Vec::new() }
    }

    pub fn new(cfg: &DisturbanceConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tones = Vec::new();
        if cfg.tones > 0 && cfg.bandwidth_hz > 0.0 {
            // amplitude per tone so that each channel has the requested RMS
            let scale = (2.0 / cfg.tones as f64).sqrt();
            for channel in 0..6 {
                let rms = if channel < 3 { cfg.random_torque_rms_nm } else { cfg.random_force_rms_n };
                for _ in 0..cfg.tones {
                    // draw even for zero RMS so the stream does not depend on it
                    let f: f64 = rng.random_range(0.0..cfg.bandwidth_hz);
                    let phase: f64 = rng.random_range(0.0..TAU);
                    if rms > 0.0 {
                        tones.push(Tone { channel, amplitude: rms * scale, omega: TAU * f, phase });
                    }
                }
            }
        }
        DisturbanceModel {
            constant: Wrench::new(cfg.constant_torque_nm, cfg.constant_force_n),
            tones,
        }
    }

    pub fn at(&self, t: f64) -> Wrench {
        let mut v = self.constant.to_vector();
        let mut extra = Vector6::zeros();
        for tone in &self.tones {
            extra[tone.channel] += tone.amplitude * (tone.omega * t + tone.phase).sin();
        }
        v += extra;
        Wrench::from_vector(&v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_signal() {
        let cfg = DisturbanceConfig {
            random_force_rms_n: 1e-3,
            random_torque_rms_nm: 1e-4,
            ..Default::default()
        };
        let a = DisturbanceModel::new(&cfg, 11);
        let b = DisturbanceModel::new(&cfg, 11);
        let c = DisturbanceModel::new(&cfg, 12);
        for k in 0..50 {
            let t = k as f64 * 1.37;
            assert_eq!(a.at(t), b.at(t));
        }
        assert_ne!(a.at(3.0), c.at(3.0));
    }

    #[test]
    fn constant_only() {
        let cfg = DisturbanceConfig {
            constant_force_n: Vector3::new(1.0, 0.0, -2.0),
            ..Default::default()
        };
        let d = DisturbanceModel::new(&cfg, 0);
        assert_eq!(d.at(123.0).force, Vector3::new(1.0, 0.0, -2.0));
        assert_eq!(d.at(123.0).torque, Vector3::zeros());
    }

    #[test]
    fn rms_is_close_to_requested() {
        let cfg = DisturbanceConfig { random_force_rms_n: 2.0, tones: 16, ..Default::default() };
        let d = DisturbanceModel::new(&cfg, 5);
        let n = 200_000;
        let dt = 0.5;
        let ms: f64 = (0..n).map(|k| d.at(k as f64 * dt).force.x.powi(2)).sum::<f64>() / n as f64;
        assert!((ms.sqrt() - 2.0).abs() < 0.2, "rms {}", ms.sqrt());
    }
}
