//! Log-distance path loss with seeded log-normal shadowing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationParams {
    /// dBm at `ref_distance`.
    pub ref_rssi: f64,
    /// meters
    pub ref_distance: f64,
    pub path_loss_exp: f64,
    /// dB
    pub shadow_sigma: f64,
    /// dBm; links whose mean RSSI falls below this are unreachable.
    pub sensitivity: f64,
    pub samples_per_link: usize,
    /// PER is drawn uniformly from this closed range.
    pub per_range: [f64; 2],
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            ref_rssi: -40.0,
            ref_distance: 1.0,
            path_loss_exp: 3.0,
            shadow_sigma: 4.0,
            sensitivity: -90.0,
            samples_per_link: 30,
            per_range: [0.0, 0.3],
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.ref_rssi,
            self.ref_distance,
            self.path_loss_exp,
            self.shadow_sigma,
            self.sensitivity,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config(
                "propagation parameters must be finite".into(),
            ));
        }
        if self.ref_distance <= 0.0 {
            return Err(Error::Config("ref_distance must be > 0".into()));
        }
        if self.path_loss_exp <= 0.0 {
            return Err(Error::Config("path_loss_exp must be > 0".into()));
        }
        if self.shadow_sigma < 0.0 {
            return Err(Error::Config("shadow_sigma must be >= 0".into()));
        }
        if self.samples_per_link < 2 {
            return Err(Error::Config("samples_per_link must be >= 2".into()));
        }
        let [lo, hi] = self.per_range;
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::Config(format!(
                "per_range [{lo}, {hi}] must be an ordered sub-range of [0, 1]"
            )));
        }
        Ok(())
    }
}

/// Quality of one directed link as seen by its receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkQuality {
    /// dBm
    pub mean_rssi: f64,
    /// dB
    pub rssi_stddev: f64,
    pub per: f64,
    pub reachable: bool,
}

impl LinkQuality {
    pub fn new(mean_rssi: f64, rssi_stddev: f64, per: f64, sensitivity: f64) -> Self {
        Self {
            mean_rssi,
            rssi_stddev,
            per,
            reachable: mean_rssi >= sensitivity,
        }
    }
}

/// Identifies one independent random stream.
///
/// Streams are derived by hashing, so the values drawn for a link do not
/// depend on how many other streams were consumed before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct StreamId {
    pub scenario: u32,
    pub iteration: u32,
    /// 0 for the initial link survey, >= 1 for later drift epochs.
    pub epoch: u32,
    pub link: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomSource {
    pub seed: u64,
    pub stream: StreamId,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            stream: StreamId::default(),
        }
    }

    pub fn with_stream(self, stream: StreamId) -> Self {
        Self { stream, ..self }
    }

    pub fn with_link(self, link: u64) -> Self {
        Self {
            stream: StreamId {
                link,
                ..self.stream
            },
            ..self
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let s = self.stream;
        let key = [
            u64::from(s.scenario),
            u64::from(s.iteration),
            u64::from(s.epoch),
            s.link,
        ]
        .into_iter()
        .fold(splitmix64(self.seed), |acc, v| {
            splitmix64(acc ^ splitmix64(v))
        });
        ChaCha8Rng::seed_from_u64(key)
    }
}

/// Deterministic part of the received power at distance `d` meters.
pub fn rssi_at_distance(p: &PropagationParams, d: f64) -> Result<f64> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::Geometry(format!(
            "distance {d} m must be positive and finite"
        )));
    }
    Ok(p.ref_rssi - 10.0 * p.path_loss_exp * (d / p.ref_distance).log10())
}

/// Draws `samples_per_link` shadowed RSSI readings and a PER for one link.
pub fn sample_link(p: &PropagationParams, d: f64, rng: &RandomSource) -> Result<LinkQuality> {
    let base = rssi_at_distance(p, d)?;
    let mut rng = rng.rng();
    let n = p.samples_per_link.max(2);
    let shadow = Normal::new(0.0, p.shadow_sigma)
        .map_err(|e| Error::Config(format!("shadow_sigma: {e}")))?;
    let offsets: Vec<f64> = (0..n).map(|_| shadow.sample(&mut rng)).collect();
    let nf = n as f64;
    let offset_mean = offsets.iter().sum::<f64>() / nf;
    let var = offsets
        .iter()
        .map(|o| (o - offset_mean).powi(2))
        .sum::<f64>()
        / (nf - 1.0);
    let [lo, hi] = p.per_range;
    let per = if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    };

    let mut q = LinkQuality::new(base + offset_mean, var.sqrt(), per, p.sensitivity);
    if !q.reachable {
        q.per = 1.0;
    }
    Ok(q)
}

/// Bounded perturbation applied to a link between network checks.
///
/// Each field is added as `offset + U(-jitter, jitter)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftSpec {
    pub rssi_offset: f64,
    pub rssi_jitter: f64,
    pub stddev_offset: f64,
    pub stddev_jitter: f64,
    pub per_offset: f64,
    pub per_jitter: f64,
}

impl DriftSpec {
    pub fn is_zero(&self) -> bool {
        *self == DriftSpec::default()
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.rssi_offset,
            self.rssi_jitter,
            self.stddev_offset,
            self.stddev_jitter,
            self.per_offset,
            self.per_jitter,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("drift values must be finite".into()));
        }
        if self.rssi_jitter < 0.0 || self.stddev_jitter < 0.0 || self.per_jitter < 0.0 {
            return Err(Error::Config("drift jitter must be >= 0".into()));
        }
        Ok(())
    }
}

fn jitter(rng: &mut ChaCha8Rng, offset: f64, width: f64) -> f64 {
    if width > 0.0 {
        offset + rng.random_range(-width..=width)
    } else {
        offset
    }
}

/// Perturbs `q`, clamps to valid ranges and recomputes reachability.
pub fn drift(
    q: &LinkQuality,
    delta: &DriftSpec,
    sensitivity: f64,
    rng: &RandomSource,
) -> LinkQuality {
    if delta.is_zero() {
        return *q;
    }
    let mut rng = rng.rng();
    let mean_rssi = q.mean_rssi + jitter(&mut rng, delta.rssi_offset, delta.rssi_jitter);
    let rssi_stddev =
        (q.rssi_stddev + jitter(&mut rng, delta.stddev_offset, delta.stddev_jitter)).max(0.0);
    let per = (q.per + jitter(&mut rng, delta.per_offset, delta.per_jitter)).clamp(0.0, 1.0);
    LinkQuality::new(mean_rssi, rssi_stddev, per, sensitivity)
}
