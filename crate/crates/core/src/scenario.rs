//! Platoon geometry, target kinematics and the index layout shared by every
//! steering vector in the crate.

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::covariance::CovarianceModel;
use crate::error::{Result, TdmError};

pub type Vec2 = [f64; 2];

/// Problem sizes: `k` vehicles, `n` transmitters and `m` receivers per
/// vehicle, `l` pulses per CPI.
///
/// Every stacked vector in the crate uses the ordering (vehicle, transmitter,
/// pulse, receiver) from outer to inner index. [`Dims::index`] is the single
/// place that ordering is spelled out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub k: usize,
    pub n: usize,
    pub l: usize,
    pub m: usize,
}

impl Dims {
    pub fn new(k: usize, n: usize, l: usize, m: usize) -> Self {
        Dims { k, n, l, m }
    }

    /// Flat offset of entry (k, n, l, m), all 0-based.
    #[inline]
    pub fn index(&self, k: usize, n: usize, l: usize, m: usize) -> usize {
        debug_assert!(k < self.k && n < self.n && l < self.l && m < self.m);
        ((k * self.n + n) * self.l + l) * self.m + m
    }

    /// Offset of (k, n, l) in the schedule vector vec(J), i.e. the column
    /// (k, n) of J stacked with pulse index innermost.
    #[inline]
    pub fn schedule_index(&self, k: usize, n: usize, l: usize) -> usize {
        (k * self.n + n) * self.l + l
    }

    /// Length N·L·M of a single vehicle's steering vector.
    pub fn per_vehicle(&self) -> usize {
        self.n * self.l * self.m
    }

    /// Length K·N·L·M of the stacked steering vector.
    pub fn stacked(&self) -> usize {
        self.k * self.per_vehicle()
    }

    /// Length K·N·L of vec(J).
    pub fn schedule_len(&self) -> usize {
        self.k * self.n * self.l
    }

    /// Number of transmitters in the platoon, K·N.
    pub fn transmitters(&self) -> usize {
        self.k * self.n
    }
}

/// How the radial velocity seen by each vehicle is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DopplerMode {
    /// Project the target velocity alone.
    Literal,
    /// Project the target velocity relative to the observing vehicle.
    #[default]
    Relative,
}

/// Waveform parameters shared by the platoon.
#[derive(Debug, Clone, PartialEq)]
pub struct Radar {
    pub carrier_frequency_hz: f64,
    pub chirp_time_s: f64,
    pub num_pulses: usize,
    pub speed_of_light_m_s: f64,
    /// Chirp bandwidth. Recorded for reports; the steering model does not use it.
    pub bandwidth_hz: Option<f64>,
}

impl Radar {
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

    pub fn new(carrier_frequency_hz: f64, chirp_time_s: f64, num_pulses: usize) -> Self {
        Radar {
            carrier_frequency_hz,
            chirp_time_s,
            num_pulses,
            speed_of_light_m_s: Self::SPEED_OF_LIGHT,
            bandwidth_hz: None,
        }
    }

    /// Carrier wavelength c / f_c.
    pub fn wavelength(&self) -> f64 {
        self.speed_of_light_m_s / self.carrier_frequency_hz
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle {
    pub tx_positions: Vec<Vec2>,
    pub rx_positions: Vec<Vec2>,
    pub velocity: Vec2,
}

impl Vehicle {
    /// Uniform linear arrays along `axis` starting at `origin`, transmit and
    /// receive elements sharing the same first element.
    pub fn ula(origin: Vec2, axis: Vec2, num_tx: usize, num_rx: usize, spacing_m: f64) -> Self {
        let element = |i: usize| {
            [
                origin[0] + axis[0] * spacing_m * i as f64,
                origin[1] + axis[1] * spacing_m * i as f64,
            ]
        };
        Vehicle {
            tx_positions: (0..num_tx).map(element).collect(),
            rx_positions: (0..num_rx).map(element).collect(),
            velocity: [0.0, 0.0],
        }
    }

    pub fn with_velocity(mut self, velocity: Vec2) -> Self {
        self.velocity = velocity;
        self
    }

    /// Reference point for direction vectors: the first receive element.
    pub fn reference(&self) -> Vec2 {
        self.rx_positions[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Target {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub radar: Radar,
    pub doppler_mode: DopplerMode,
    pub vehicles: Vec<Vehicle>,
    pub target: Target,
    pub covariance: CovarianceModel,
    /// Nominal complex reflectivity seen through each vehicle's path.
    pub reflectivity: Vec<Complex64>,
}

fn finite2(v: &Vec2) -> bool {
    v[0].is_finite() && v[1].is_finite()
}

impl Scenario {
    pub fn dims(&self) -> Dims {
        let (n, m) = self
            .vehicles
            .first()
            .map(|v| (v.tx_positions.len(), v.rx_positions.len()))
            .unwrap_or((0, 0));
        Dims::new(self.vehicles.len(), n, self.radar.num_pulses, m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(TdmError::InvalidScenario(msg));
        let r = &self.radar;
        for (name, value) in [
            ("carrier_frequency_hz", r.carrier_frequency_hz),
            ("chirp_time_s", r.chirp_time_s),
            ("speed_of_light_m_s", r.speed_of_light_m_s),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return bad(format!("{name} must be positive and finite, got {value}"));
            }
        }
        if r.num_pulses == 0 {
            return bad("num_pulses must be at least 1".into());
        }
        if self.vehicles.is_empty() {
            return bad("at least one vehicle is required".into());
        }
        let dims = self.dims();
        if dims.n == 0 || dims.m == 0 {
            return bad("every vehicle needs at least one transmitter and one receiver".into());
        }
        for (idx, v) in self.vehicles.iter().enumerate() {
            if v.tx_positions.len() != dims.n || v.rx_positions.len() != dims.m {
                return bad(format!(
                    "vehicle {} has {} tx / {} rx elements; all vehicles must match {} / {}",
                    idx + 1,
                    v.tx_positions.len(),
                    v.rx_positions.len(),
                    dims.n,
                    dims.m
                ));
            }
            if !v.tx_positions.iter().chain(&v.rx_positions).all(finite2) || !finite2(&v.velocity)
            {
                return bad(format!("vehicle {} has non-finite coordinates", idx + 1));
            }
        }
        if !finite2(&self.target.position) || !finite2(&self.target.velocity) {
            return bad("target has non-finite coordinates".into());
        }
        if self.reflectivity.len() != dims.k {
            return bad(format!(
                "expected {} reflectivity values, got {}",
                dims.k,
                self.reflectivity.len()
            ));
        }
        if !self.reflectivity.iter().all(|a| a.re.is_finite() && a.im.is_finite()) {
            return bad("reflectivity values must be finite".into());
        }
        self.covariance.validate(&dims)
    }

    /// True when the schedule is square (L = K·N), the regime in which the
    /// scheduler optimizes over permutation matrices.
    pub fn is_permutation_regime(&self) -> bool {
        let d = self.dims();
        d.l == d.transmitters()
    }

    /// Per-vehicle weights 2|α_k|² used by the detection-mean objective.
    pub fn detection_weights(&self) -> Vec<f64> {
        self.reflectivity.iter().map(|a| 2.0 * a.norm_sqr()).collect()
    }

    /// Hex SHA-256 over every numeric field, used to tie result files to the
    /// scenario that produced them.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        let mut put = |x: f64| h.update(x.to_le_bytes());
        let r = &self.radar;
        put(r.carrier_frequency_hz);
        put(r.chirp_time_s);
        put(r.num_pulses as f64);
        put(r.speed_of_light_m_s);
        put(r.bandwidth_hz.unwrap_or(f64::NAN));
        put(match self.doppler_mode {
            DopplerMode::Literal => 0.0,
            DopplerMode::Relative => 1.0,
        });
        for v in &self.vehicles {
            put(v.tx_positions.len() as f64);
            put(v.rx_positions.len() as f64);
            for p in v.tx_positions.iter().chain(&v.rx_positions) {
                put(p[0]);
                put(p[1]);
            }
            put(v.velocity[0]);
            put(v.velocity[1]);
        }
        for x in self.target.position.iter().chain(&self.target.velocity) {
            put(*x);
        }
        for a in &self.reflectivity {
            put(a.re);
            put(a.im);
        }
        self.covariance.feed_fingerprint(&mut put);
        h.finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
