//! Doppler and array steering vectors and their stacking into the
//! multistatic space-time signature seen by the lead vehicle.
//!
//! Vehicle 1 is the receiver throughout; every other vehicle contributes
//! only its transmitters. All phases use the narrowband model
//! exp(j·2π·(f_c/c)·pᵀu) for geometry and exp(−j·2π·(f_c/c)·ν·t) for motion.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, TdmError};
use crate::linalg::{hadamard, kron};
use crate::scenario::{Dims, DopplerMode, Radar, Scenario, Target, Vec2};
use crate::selection::SelectionMatrix;

/// Vehicle index of the receiving (lead) vehicle, 1-based.
pub const RECEIVER: usize = 1;

const UNIT_NORM_TOL: f64 = 1e-9;

/// A steering vector tagged with the sizes of its (k, n, l, m) layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub values: Vec<Complex64>,
    pub dims: Dims,
}

impl SteeringVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Slice belonging to vehicle `k` (0-based).
    pub fn vehicle(&self, k: usize) -> &[Complex64] {
        let len = self.dims.per_vehicle();
        &self.values[k * len..(k + 1) * len]
    }
}

fn check_vehicle(scenario: &Scenario, k: usize) -> Result<()> {
    let max = scenario.vehicles.len();
    if k == 0 || k > max {
        return Err(TdmError::IndexOutOfRange {
            what: "vehicle",
            index: k,
            max,
        });
    }
    Ok(())
}

/// Unit vector from vehicle `k`'s reference element to the target.
pub fn target_direction(target: &Target, scenario: &Scenario, k: usize) -> Result<Vec2> {
    check_vehicle(scenario, k)?;
    let r = scenario.vehicles[k - 1].reference();
    let d = [target.position[0] - r[0], target.position[1] - r[1]];
    let norm = d[0].hypot(d[1]);
    if !(norm > 0.0) {
        return Err(TdmError::UndefinedDirection { vehicle: k });
    }
    Ok([d[0] / norm, d[1] / norm])
}

/// Radial velocity ν_k of the target as seen from vehicle `k` (1-based).
pub fn doppler_velocity(target: &Target, k: usize, scenario: &Scenario) -> Result<f64> {
    let u = target_direction(target, scenario, k)?;
    let v = match scenario.doppler_mode {
        DopplerMode::Literal => target.velocity,
        DopplerMode::Relative => {
            let own = scenario.vehicles[k - 1].velocity;
            [target.velocity[0] - own[0], target.velocity[1] - own[1]]
        }
    };
    Ok(v[0] * u[0] + v[1] * u[1])
}

/// Element i is exp(−j·2π·f_c·ν/c · i·stride·T_c).
///
/// With `stride` N or M and `length` L this is the slow-time Doppler vector;
/// with `stride` 1 and `length` N or M it is the auxiliary intra-pulse one.
pub fn doppler_steering(nu: f64, stride: usize, length: usize, radar: &Radar) -> Result<Vec<Complex64>> {
    if length == 0 {
        return Err(TdmError::InvalidArgument("Doppler steering length must be positive".into()));
    }
    let step = -2.0 * PI * radar.carrier_frequency_hz * nu / radar.speed_of_light_m_s
        * stride as f64
        * radar.chirp_time_s;
    Ok((0..length)
        .map(|i| Complex64::from_polar(1.0, step * i as f64))
        .collect())
}

/// Element i is exp(+j·2π·(f_c/c)·pᵢᵀu) for a unit direction u.
pub fn array_steering(positions: &[Vec2], direction: Vec2, radar: &Radar) -> Result<Vec<Complex64>> {
    if positions.is_empty() {
        return Err(TdmError::InvalidArgument("array has no elements".into()));
    }
    let norm = direction[0].hypot(direction[1]);
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(TdmError::InvalidArgument(format!(
            "direction must be unit-norm, |u| = {norm}"
        )));
    }
    let wavenumber = 2.0 * PI * radar.carrier_frequency_hz / radar.speed_of_light_m_s;
    Ok(positions
        .iter()
        .map(|p| Complex64::from_polar(1.0, wavenumber * (p[0] * direction[0] + p[1] * direction[1])))
        .collect())
}

/// Per-vehicle factors shared by the snapshot and vehicle constructions.
struct VehicleFactors {
    /// a_T,k ⊙ a_D,N(ν_k), length N.
    transmit: Vec<Complex64>,
    /// [a_d,N(ν_k) ⊙ a_d,M(ν_1)] ⊗ [a_R,1 ⊙ a_D,M(ν_1)], length L·M.
    snapshot: Vec<Complex64>,
}

fn vehicle_factors(scenario: &Scenario, k: usize) -> Result<VehicleFactors> {
    check_vehicle(scenario, k)?;
    let dims = scenario.dims();
    let radar = &scenario.radar;
    let target = &scenario.target;

    let nu_k = doppler_velocity(target, k, scenario)?;
    let nu_rx = doppler_velocity(target, RECEIVER, scenario)?;
    let u_k = target_direction(target, scenario, k)?;
    let u_rx = target_direction(target, scenario, RECEIVER)?;

    let a_tx = array_steering(&scenario.vehicles[k - 1].tx_positions, u_k, radar)?;
    let a_rx = array_steering(&scenario.vehicles[RECEIVER - 1].rx_positions, u_rx, radar)?;
    let aux_tx = doppler_steering(nu_k, 1, dims.n, radar)?;
    let aux_rx = doppler_steering(nu_rx, 1, dims.m, radar)?;
    let slow_tx = doppler_steering(nu_k, dims.n, dims.l, radar)?;
    let slow_rx = doppler_steering(nu_rx, dims.m, dims.l, radar)?;

    Ok(VehicleFactors {
        transmit: hadamard(&a_tx, &aux_tx),
        snapshot: kron(&hadamard(&slow_tx, &slow_rx), &hadamard(&a_rx, &aux_rx)),
    })
}

/// Echo at the lead vehicle from transmitter `n` of vehicle `k` (both
/// 1-based), length L·M with pulse index outer.
pub fn snapshot(scenario: &Scenario, k: usize, n: usize) -> Result<SteeringVector> {
    let dims = scenario.dims();
    if n == 0 || n > dims.n {
        return Err(TdmError::IndexOutOfRange {
            what: "transmitter",
            index: n,
            max: dims.n,
        });
    }
    let f = vehicle_factors(scenario, k)?;
    Ok(SteeringVector {
        values: f.snapshot,
        dims: Dims::new(1, 1, dims.l, dims.m),
    })
}

/// s_k: the N snapshots of vehicle `k` (1-based), each scaled by its
/// transmitter's array and intra-pulse Doppler phase. Length N·L·M.
pub fn vehicle_steering(scenario: &Scenario, k: usize) -> Result<SteeringVector> {
    let dims = scenario.dims();
    let f = vehicle_factors(scenario, k)?;
    Ok(SteeringVector {
        values: kron(&f.transmit, &f.snapshot),
        dims: Dims::new(1, dims.n, dims.l, dims.m),
    })
}

/// s = [s_1; …; s_K], length K·N·L·M.
pub fn stacked_steering(scenario: &Scenario) -> Result<SteeringVector> {
    scenario.validate()?;
    let dims = scenario.dims();
    let mut values = Vec::with_capacity(dims.stacked());
    for k in 1..=dims.k {
        values.extend(vehicle_steering(scenario, k)?.values);
    }
    Ok(SteeringVector { values, dims })
}

/// (vec(J) ⊗ 1_M) ⊙ s: zeroes every (k, n, l, ·) block whose transmitter
/// (k, n) is not scheduled on pulse l.
pub fn apply_tdm(j: &SelectionMatrix, s: &SteeringVector) -> Result<SteeringVector> {
    let d = s.dims;
    if j.rows() != d.l || j.cols() != d.transmitters() {
        return Err(TdmError::DimensionMismatch {
            expected: d.l * d.transmitters(),
            actual: j.rows() * j.cols(),
            context: "selection matrix must be L x (K*N)",
        });
    }
    if s.values.len() != d.stacked() {
        return Err(TdmError::DimensionMismatch {
            expected: d.stacked(),
            actual: s.values.len(),
            context: "steering vector length",
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let values = s
        .values
        .iter()
        .enumerate()
        .map(|(idx, &z)| {
            let slot = idx / d.m;
            if j.get(slot % d.l, slot / d.l) {
                z
            } else {
                zero
            }
        })
        .collect();
    Ok(SteeringVector { values, dims: d })
}
