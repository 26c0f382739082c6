//! Reference platoons and randomized scenarios.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::covariance::CovarianceModel;
use crate::linalg::CMatrix;
use crate::scenario::{DopplerMode, Radar, Scenario, Target, Vec2, Vehicle};

/// Transmit elements spaced M·λ/2 and receive elements spaced λ/2 along x,
/// both starting at `origin` (a filled virtual array).
pub fn mimo_vehicle(origin: Vec2, num_tx: usize, num_rx: usize, wavelength: f64, velocity: Vec2) -> Vehicle {
    let half = wavelength / 2.0;
    Vehicle {
        tx_positions: (0..num_tx)
            .map(|i| [origin[0] + (i * num_rx) as f64 * half, origin[1]])
            .collect(),
        rx_positions: (0..num_rx).map(|i| [origin[0] + i as f64 * half, origin[1]]).collect(),
        velocity,
    }
}

const PLATOON_ORIGINS: [Vec2; 3] = [[0.0, 0.0], [-3.5, -12.0], [3.5, -24.0]];
const PLATOON_VELOCITIES: [Vec2; 3] = [[20.0, 20.0], [-10.0, -20.0], [30.0, 15.0]];

/// Three-vehicle platoon with the given array sizes; L = 3·N pulses.
pub fn platoon(num_tx: usize, num_rx: usize, noise_power: f64, reflectivity: f64) -> Scenario {
    let mut radar = Radar::new(77e9, 8e-6, 3 * num_tx);
    radar.bandwidth_hz = Some(150e6);
    let lambda = radar.wavelength();
    Scenario {
        vehicles: PLATOON_ORIGINS
            .iter()
            .zip(PLATOON_VELOCITIES)
            .map(|(o, v)| mimo_vehicle(*o, num_tx, num_rx, lambda, v))
            .collect(),
        radar,
        doppler_mode: DopplerMode::Relative,
        target: Target {
            position: [12.0, 85.0],
            velocity: [-4.0, 8.0],
        },
        covariance: CovarianceModel::white(noise_power),
        reflectivity: vec![Complex64::new(reflectivity, 0.0); 3],
    }
}

/// Full-size experiment: K = 3, N = M = 8, L = 24.
pub fn full_scale_scenario() -> Scenario {
    platoon(8, 8, 10.0, 0.5)
}

/// Desk-scale counterpart: K = 3, N = M = 2, L = 6.
pub fn desk_scenario() -> Scenario {
    platoon(2, 2, 1.0, 0.5)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// (A + Aᴴ)/2 with A complex Gaussian.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// B Bᴴ with B complex Gaussian, exactly Hermitian.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let b = CMatrix::from_fn(n, n, |_, _| complex_normal(rng));
    let m = &b * b.adjoint();
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// σ²(I + B Bᴴ / n): positive definite with a spread-out spectrum.
pub fn random_covariance<R: Rng + ?Sized>(rng: &mut R, n: usize, noise_power: f64) -> CMatrix {
    let p = random_psd(rng, n) * Complex64::new(1.0 / n as f64, 0.0);
    (CMatrix::identity(n, n) + p) * Complex64::new(noise_power, 0.0)
}

/// Random platoon of `k` vehicles with `n` transmitters and `m` receivers,
/// L = K·N, and either white or random colored covariance blocks.
pub fn random_scenario<R: Rng + ?Sized>(rng: &mut R, k: usize, n: usize, m: usize, colored: bool) -> Scenario {
    let mut radar = Radar::new(77e9, 8e-6, k * n);
    radar.bandwidth_hz = Some(150e6);
    let lambda = radar.wavelength();
    let vehicles: Vec<Vehicle> = (0..k)
        .map(|_| {
            let origin = [rng.random_range(-5.0..5.0), rng.random_range(-40.0..0.0)];
            let velocity = [rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)];
            mimo_vehicle(origin, n, m, lambda, velocity)
        })
        .collect();
    let target = Target {
        position: [rng.random_range(-30.0..30.0), rng.random_range(30.0..150.0)],
        velocity: [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)],
    };
    let dim = n * k * n * m;
    let covariance = if colored {
        CovarianceModel::BlockDiagonal {
            blocks: (0..k).map(|_| random_covariance(rng, dim, 1.0)).collect(),
        }
    } else {
        CovarianceModel::white(1.0)
    };
    let reflectivity = (0..k)
        .map(|_| Complex64::from_polar(rng.random_range(0.3..1.0), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect();
    Scenario {
        radar,
        doppler_mode: DopplerMode::Relative,
        vehicles,
        target,
        covariance,
        reflectivity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_scenarios_are_valid() {
        let p = full_scale_scenario();
        p.validate().unwrap();
        let d = p.dims();
        assert_eq!((d.k, d.n, d.l, d.m), (3, 8, 24, 8));
        assert!(p.is_permutation_regime());
        desk_scenario().validate().unwrap();
    }

    #[test]
    fn random_scenarios_are_valid() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for colored in [false, true] {
            let sc = random_scenario(&mut rng, 2, 2, 2, colored);
            sc.validate().unwrap();
            sc.covariance.factor(&sc.dims()).unwrap();
        }
    }
}
