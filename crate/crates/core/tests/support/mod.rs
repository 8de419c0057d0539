//! Measurements shared by the property tests and the acceptance suite.
//! Each returns the observed figure; callers decide the bound.

#![allow(dead_code)]

use dqdsim::analysis::analytic_two_pulse;
use dqdsim::dynamics::{evolve_complex, evolve_real, DecoherenceParams, IntegrationConfig};
use dqdsim::experiments::{run_two_pulse, Axis, ExperimentSetup};
use dqdsim::model::{
    from_real_form, thermal_initial_state, to_real_form, DensityMatrix, QubitPairParams, HBAR,
};
use dqdsim::pulses::{Channel, Pulse, PulseSettings, Schedule, ScheduleBuilder};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mixture of four random pure states.
pub fn random_state(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
    let weights: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
    let wsum: f64 = weights.iter().sum();
    for w in weights {
        let psi: Vec<Complex64> = (0..4)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let n: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += w / wsum * psi[i] * psi[j].conj() / n;
            }
        }
    }
    DensityMatrix::new(m).unwrap()
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> (QubitPairParams, Schedule, DecoherenceParams) {
    let params = QubitPairParams {
        delta_u: rng.gen_range(5.0..40.0),
        delta_l: rng.gen_range(5.0..40.0),
        j_coupling: rng.gen_range(0.0..200.0),
        eps_u0: rng.gen_range(-400.0..-100.0),
        eps_l0: rng.gen_range(-400.0..-100.0),
        temperature: 0.01,
    };
    let pulse = |rng: &mut ChaCha8Rng, channel| Pulse {
        channel,
        start: rng.gen_range(0.0..200.0),
        width: rng.gen_range(0.0..300.0),
        amplitude: rng.gen_range(0.0..500.0),
        rise: rng.gen_range(0.0..65.0),
        fall: rng.gen_range(0.0..65.0),
    };
    let pulses = vec![pulse(rng, Channel::Lower), pulse(rng, Channel::Upper)];
    let s = Schedule::new(
        params.eps_u0,
        params.eps_l0,
        pulses,
        800.0,
        rng.gen_range(0.0..200.0),
    )
    .unwrap();
    let dec = if rng.gen_bool(0.5) {
        DecoherenceParams {
            t2_star: Some(rng.gen_range(200.0..3000.0)),
            gamma1: rng.gen_range(0.0..1e-3),
        }
    } else {
        DecoherenceParams::NONE
    };
    (params, s, dec)
}

/// Largest diagonal disagreement between the complex and real integrators
/// over `n` seeded random instances.
pub fn complex_real_disagreement(n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = IntegrationConfig::default();
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let (params, s, dec) = random_instance(&mut rng);
        let rho0 = random_state(&mut rng);
        let (rc, _) = evolve_complex(&rho0, &s, &params, &dec, &cfg).unwrap();
        let (w, _) = evolve_real(&to_real_form(&rho0), &s, &params, &dec, &cfg).unwrap();
        let rr = from_real_form(&w);
        for i in 0..4 {
            worst = worst.max((rc.entries[i][i].re - rr.entries[i][i].re).abs());
        }
    }
    worst
}

/// Two-pulse sequence stretched to 2000 ps.
pub fn long_schedule() -> (QubitPairParams, Schedule) {
    let params = QubitPairParams::device();
    let b = ScheduleBuilder::new(&params, PulseSettings::default());
    let s = b.two_pulse(300.0, 500.0).unwrap();
    let s = Schedule::new(s.eps_u0, s.eps_l0, s.pulses, 2000.0, s.sync_offset).unwrap();
    (params, s)
}

/// `(trace error, purity change)` after the long schedule without decoherence.
pub fn conservation_errors(rho0: &DensityMatrix, cfg: &IntegrationConfig) -> (f64, f64) {
    let (params, s) = long_schedule();
    let (rho, _) = evolve_complex(rho0, &s, &params, &DecoherenceParams::NONE, cfg).unwrap();
    (
        (rho.trace() - 1.0).abs(),
        (rho.purity() - rho0.purity()).abs(),
    )
}

/// Thermal state at the long schedule's baselines.
pub fn long_schedule_thermal_state() -> DensityMatrix {
    let (params, s) = long_schedule();
    thermal_initial_state(&params, s.eps_u0, s.eps_l0).unwrap()
}

/// Ratio of the final-state errors at `dt` and `dt/2` against a `dt/16` reference.
pub fn rk4_convergence_factor(dt: f64) -> f64 {
    let (params, s) = long_schedule();
    let w0 = to_real_form(&thermal_initial_state(&params, s.eps_u0, s.eps_l0).unwrap());
    let run = |h: f64| {
        evolve_real(
            &w0,
            &s,
            &params,
            &DecoherenceParams::NONE,
            &IntegrationConfig::with_dt(h),
        )
        .unwrap()
        .0
        .entries
    };
    let reference = run(dt / 16.0);
    let err = |m: [[f64; 4]; 4]| {
        (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| (m[i][j] - reference[i][j]).abs())
            .fold(0.0, f64::max)
    };
    err(run(dt)) / err(run(dt / 2.0))
}

/// Largest entry error of the real-form round trip over `n` seeded states.
pub fn real_form_round_trip_error(n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let rho = random_state(&mut rng);
        let back = from_real_form(&to_real_form(&rho));
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((back.entries[i][j] - rho.entries[i][j]).norm());
            }
        }
    }
    worst
}

/// Largest deviation of a simulated two-pulse map from the large-coupling
/// closed form, with ideal rectangles at J = 1000 μeV.
pub fn two_pulse_closed_form_deviation() -> f64 {
    let params = QubitPairParams {
        j_coupling: 1000.0,
        eps_u0: -1000.0,
        eps_l0: -1000.0,
        ..QubitPairParams::device()
    };
    let mut setup = ExperimentSetup::new(params, DecoherenceParams::NONE);
    setup.cfg.dt = 0.02;
    let w = Axis::range("W", "ps", 0.0, 400.0, 20.0).unwrap();
    let map = run_two_pulse(&setup, &w, &w).unwrap();
    let mut worst: f64 = 0.0;
    for (iy, &w2) in w.values.iter().enumerate() {
        for (ix, &w1) in w.values.iter().enumerate() {
            let alpha = params.delta_u * w1 / (2.0 * HBAR);
            let beta = params.delta_l * w2 / (2.0 * HBAR);
            let o = analytic_two_pulse(alpha, beta);
            worst = worst
                .max((o.p_u0 - map.p_u0[iy][ix]).abs())
                .max((o.p_l0 - map.p_l0[iy][ix]).abs());
        }
    }
    worst
}
