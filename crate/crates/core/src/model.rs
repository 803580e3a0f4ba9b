//! Network scenarios: radio parameters, node placement and the pathgain law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Default minimum node distance in meters. The gain law diverges at the
/// base station, so placement is clamped away from it.
pub const DEFAULT_D_MIN: f64 = 1.0;

/// Gain law `20 · d⁻⁴`.
pub fn pathgain(d: f64) -> Result<f64> {
    if !d.is_finite() || d <= 0.0 {
        return domain(format!("distance must be positive and finite, got {d}"));
    }
    Ok(20.0 * d.powi(-4))
}

/// Converts a decibel ratio to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Global radio and protocol parameters. `beta` is always linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Transmit power without power control, watts.
    pub base_power: f64,
    /// SINR threshold, linear ratio.
    pub beta: f64,
    /// Slot duration, seconds.
    pub slot_duration: f64,
    /// Packet length, bits.
    pub packet_bits: u64,
    /// Battery capacity, joules.
    pub battery: f64,
}

impl RadioParams {
    pub fn new(
        base_power: f64,
        beta: f64,
        slot_duration: f64,
        packet_bits: u64,
        battery: f64,
    ) -> Result<Self> {
        let p = RadioParams {
            base_power,
            beta,
            slot_duration,
            packet_bits,
            battery,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`RadioParams::new`] with the threshold given in dB.
    pub fn with_beta_db(
        base_power: f64,
        beta_db: f64,
        slot_duration: f64,
        packet_bits: u64,
        battery: f64,
    ) -> Result<Self> {
        Self::new(
            base_power,
            db_to_linear(beta_db),
            slot_duration,
            packet_bits,
            battery,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_power > 0.0 && self.base_power.is_finite()) {
            return domain(format!("base power must be > 0, got {}", self.base_power));
        }
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return domain(format!(
                "SINR threshold must be > 1 (linear), got {}",
                self.beta
            ));
        }
        if !(self.slot_duration > 0.0 && self.slot_duration.is_finite()) {
            return domain(format!(
                "slot duration must be > 0, got {}",
                self.slot_duration
            ));
        }
        if self.packet_bits < 1 {
            return domain("packet length must be at least one bit");
        }
        if !(self.battery > 0.0 && self.battery.is_finite()) {
            return domain(format!("battery energy must be > 0, got {}", self.battery));
        }
        Ok(())
    }

    /// Packet rate `1/T`, packets per second.
    pub fn packet_rate(&self) -> f64 {
        1.0 / self.slot_duration
    }

    pub fn beta_db(&self) -> f64 {
        linear_to_db(self.beta)
    }
}

impl Default for RadioParams {
    /// L = 1000 bit, T = 5 ms, β = 6 dB, P = 200 mW, E_B = 1000 J.
    fn default() -> Self {
        RadioParams {
            base_power: 0.2,
            beta: db_to_linear(6.0),
            slot_duration: 0.005,
            packet_bits: 1000,
            battery: 1000.0,
        }
    }
}

/// A node and its distance/gain to the base station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: usize,
    pub distance: f64,
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub nodes: Vec<Node>,
    pub radio: RadioParams,
    pub radius: f64,
    pub d_min: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn gains(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.gain).collect()
    }

    /// Builds a scenario from explicit distances, computing gains from the law.
    pub fn from_distances(
        distances: &[f64],
        radius: f64,
        d_min: f64,
        radio: RadioParams,
    ) -> Result<Self> {
        let nodes = distances
            .iter()
            .enumerate()
            .map(|(id, &d)| {
                Ok(Node {
                    id,
                    distance: d,
                    gain: pathgain(d)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let s = Scenario {
            nodes,
            radio,
            radius,
            d_min,
            seed: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        if self.nodes.is_empty() {
            return domain("scenario needs at least one node");
        }
        for n in &self.nodes {
            if !(n.gain > 0.0 && n.gain.is_finite()) {
                return domain(format!("node {} has invalid gain {}", n.id, n.gain));
            }
            if n.distance.is_nan() || n.distance <= 0.0 || n.distance > self.radius * (1.0 + 1e-12)
            {
                return domain(format!(
                    "node {} distance {} outside (0, {}]",
                    n.id, n.distance, self.radius
                ));
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile::from(self)
    }
}

/// Area-uniform placement of `n` nodes in a disk of `radius` meters around
/// the base station, with distances clamped to `[d_min, radius]`.
pub fn generate_disk_scenario(
    n: usize,
    radius: f64,
    d_min: f64,
    radio: RadioParams,
    seed: u64,
) -> Result<Scenario> {
    if n == 0 {
        return domain("node count must be at least 1");
    }
    if !(d_min > 0.0 && d_min < radius && radius.is_finite()) {
        return domain(format!(
            "require 0 < d_min < radius, got d_min = {d_min}, radius = {radius}"
        ));
    }
    radio.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..n)
        .map(|id| {
            let u: f64 = rng.random();
            let distance = (radius * u.sqrt()).clamp(d_min, radius);
            Ok(Node {
                id,
                distance,
                gain: pathgain(distance)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Scenario {
        nodes,
        radio,
        radius,
        d_min,
        seed,
    })
}

/// On-disk radio block; the threshold is stored in dB.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RadioFile {
    #[serde(rename = "P_watts")]
    pub p_watts: f64,
    pub beta_db: f64,
    #[serde(rename = "T_seconds")]
    pub t_seconds: f64,
    #[serde(rename = "L_bits")]
    pub l_bits: u64,
    #[serde(rename = "E_B_joules")]
    pub e_b_joules: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct NodeFile {
    pub id: usize,
    pub d_m: f64,
    /// Measured gain; when absent the gain law is applied to `d_m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain: Option<f64>,
}

/// JSON scenario document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ScenarioFile {
    pub radio: RadioFile,
    pub radius_m: f64,
    pub d_min_m: f64,
    pub seed: u64,
    pub nodes: Vec<NodeFile>,
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        ScenarioFile {
            radio: RadioFile {
                p_watts: s.radio.base_power,
                beta_db: s.radio.beta_db(),
                t_seconds: s.radio.slot_duration,
                l_bits: s.radio.packet_bits,
                e_b_joules: s.radio.battery,
            },
            radius_m: s.radius,
            d_min_m: s.d_min,
            seed: s.seed,
            nodes: s
                .nodes
                .iter()
                .map(|n| NodeFile {
                    id: n.id,
                    d_m: n.distance,
                    gain: None,
                })
                .collect(),
        }
    }
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let radio = RadioParams::with_beta_db(
            self.radio.p_watts,
            self.radio.beta_db,
            self.radio.t_seconds,
            self.radio.l_bits,
            self.radio.e_b_joules,
        )?;
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                let gain = match n.gain {
                    Some(g) => g,
                    None => pathgain(n.d_m)?,
                };
                Ok(Node {
                    id: n.id,
                    distance: n.d_m,
                    gain,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let s = Scenario {
            nodes,
            radio,
            radius: self.radius_m,
            d_min: self.d_min_m,
            seed: self.seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}
