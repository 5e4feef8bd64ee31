use super::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::normalform::{normal_form, NormalFormOptions, QChoice, ThresholdMode};
use crate::trigpoly::random_poly;

type P = TrigTaylorPoly<f64>;

fn pendulum() -> P {
    let c = Caps::new(1, 2);
    P::monomial(1, 1.0, c, &[2], 0.5)
        .add(&P::cos_mode(1, 1.0, c, &[1], &[0], (std::f64::consts::TAU).powi(-2)))
        .unwrap()
}

#[test]
fn linear_hamiltonian_is_integrated_exactly() {
    let w = ExactFrequency::golden();
    let h = P::linear(1.0, Caps::new(0, 1), w.values());
    let x0 = [0.1, 0.7, 0.2, -0.1];
    let traj = integrate(&h, &x0, 1e-3, 10.0, &IntegrateOptions::default()).unwrap();
    let z = traj.last();
    assert_eq!(&z[2..], &x0[2..]);
    for i in 0..2 {
        assert!((z[i] - (x0[i] + 10.0 * w.values()[i])).abs() < 1e-12);
    }
    let rep = drift_report(&traj, &w, 1.0).unwrap();
    assert_eq!(rep.max_drift, 0.0);
    assert!(rep.exit_time.is_infinite());
}

#[test]
fn pendulum_energy_is_conserved() {
    let h = pendulum();
    // librating orbit around the stable equilibrium theta = 1/2
    let traj = integrate(
        &h,
        &[0.5, 0.1],
        1e-3,
        1e3,
        &IntegrateOptions {
            record_every: 1000,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(traj.energy_drift < 1e-9, "{}", traj.energy_drift);
    assert!(traj.exit_time.is_none());
}

#[test]
fn time_reversal() {
    let h = pendulum();
    let x0 = [0.3, 0.05];
    let opts = IntegrateOptions::default();
    let compiled = CompiledHamiltonian::new(&h);
    let mut st = Stepper::new(&compiled, opts.scheme);
    let mut z = x0.to_vec();
    for _ in 0..2000 {
        st.step(&mut z, 1e-3).unwrap();
    }
    for _ in 0..2000 {
        st.step(&mut z, -1e-3).unwrap();
    }
    assert!((z[0] - x0[0]).abs() < 1e-10 && (z[1] - x0[1]).abs() < 1e-10);
}

#[test]
fn one_step_is_symplectic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..5u64 {
        let h: P = random_poly(&mut rng, 2, 1.0, Caps::new(2, 2), 6, 0.2);
        let compiled = CompiledHamiltonian::new(&h);
        let mut st = Stepper::new(&compiled, Scheme::ImplicitMidpoint);
        let x = [0.2, 0.4, 0.1, -0.2];
        let fd = 1e-5;
        let mut g = [[0.0; 4]; 4];
        for c in 0..4 {
            let mut p = x.to_vec();
            p[c] += fd;
            st.step(&mut p, 1e-3).unwrap();
            let mut m = x.to_vec();
            m[c] -= fd;
            st.step(&mut m, 1e-3).unwrap();
            for r in 0..4 {
                g[r][c] = (p[r] - m[r]) / (2.0 * fd);
            }
        }
        let j = |a: usize, b: usize| -> f64 {
            if a < 2 && b == a + 2 {
                1.0
            } else if a >= 2 && b + 2 == a {
                -1.0
            } else {
                0.0
            }
        };
        for a in 0..4 {
            for b in 0..4 {
                let mut acc = 0.0;
                for r in 0..4 {
                    for s in 0..4 {
                        acc += g[r][a] * j(r, s) * g[s][b];
                    }
                }
                assert!((acc - j(a, b)).abs() <= 1e-8, "seed {seed}: {acc}");
            }
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f: P = random_poly(&mut rng, 2, 1.0, Caps::new(2, 1), 4, 1e-3);
    let h = P::linear(1.0, f.caps(), ExactFrequency::golden().values())
        .add(&f)
        .unwrap();
    let x0 = [0.0, 0.0, 0.1, 0.1];
    let a = integrate(&h, &x0, 1e-3, 2.0, &IntegrateOptions::default()).unwrap();
    let b = integrate(&h, &x0, 1e-3, 2.0, &IntegrateOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn step_size_and_domain_are_checked() {
    let h = pendulum();
    assert!(integrate(&h, &[0.0, 0.0], 0.5, 1.0, &IntegrateOptions::default()).is_err());
    assert!(integrate(&h, &[0.0, 2.0], 1e-3, 1.0, &IntegrateOptions::default()).is_err());
    // Rotating orbit: I grows past the exit box of radius 0.05.
    let traj = integrate(
        &h,
        &[0.0, 0.04],
        1e-3,
        10.0,
        &IntegrateOptions {
            exit_radius: Some(0.05),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(traj.exit_time.is_some());
}

#[test]
fn normal_form_flow_conserves_projected_actions() {
    // Resonant frequency, so the truncated normal form has angle dependence.
    let w = ExactFrequency::integer(&[1, 2]).unwrap();
    let c = Caps::new(4, 1);
    let f = P::sin_mode(2, 1.0, c, &[1, 0], &[1, 0], 1e-3)
        .add(&P::cos_mode(2, 1.0, c, &[2, -1], &[0, 1], 1e-3))
        .unwrap();
    let opts = NormalFormOptions {
        q: QChoice::Fixed(3.0),
        mode: ThresholdMode::Record,
        ..Default::default()
    };
    let r = normal_form(&w, &f, 3, 1, &opts).unwrap();
    let n = r.truncated().unwrap();
    assert!(n.modes().any(|(k, _)| k.iter().any(|&x| x != 0)));
    let traj = integrate(
        &n,
        &[0.1, 0.3, 0.1, -0.1],
        1e-3,
        10.0,
        &IntegrateOptions {
            record_every: 10,
            ..Default::default()
        },
    )
    .unwrap();
    let rep = drift_report(&traj, &w, 1.0).unwrap();
    assert!(rep.max_drift < 1e-10, "{}", rep.max_drift);
    // but the actions themselves move
    let moved = (traj.last()[2] - 0.1).abs() + (traj.last()[3] + 0.1).abs();
    assert!(moved > 1e-6);
    assert!(rep.drift.windows(2).all(|p| p[0] <= p[1]));
}

#[test]
fn drift_demo_matches_prediction() {
    let w = ExactFrequency::golden();
    let rep = drift_demo(&w, 2, 1e-3).unwrap();
    assert!(rep.ratio > 1.0 / 3.0 && rep.ratio < 3.0, "{}", rep.ratio);
    // the drift peaks a quarter period 1 / (4 |K.omega|) into the window
    assert!(rep.window_measured > 0.1 * rep.window_predicted);
    assert!(rep.window_measured < rep.window_predicted);
}

#[test]
fn demo_force_vanishes_at_quarter_phase() {
    let w = ExactFrequency::golden();
    let fam = DemoFamily::new(&w, 2, 1e-3, 1.0).unwrap();
    let h = fam.hamiltonian(&w).unwrap();
    let k = &fam.wavevector;
    // K . theta_0 = 1/4 with theta_0 along K
    let kk = (k[0] * k[0] + k[1] * k[1]) as f64;
    let th = [0.25 * k[0] as f64 / kk, 0.25 * k[1] as f64 / kk];
    let t = 0.01 / fam.small_divisor;
    let traj = integrate(&h, &[th[0], th[1], 0.0, 0.0], 1e-3, t, &IntegrateOptions::default())
        .unwrap();
    let p = Projector::new(&w).unwrap();
    let speed = p.norm(&traj.last()[2..]) / t;
    assert!(speed < 0.1 * fam.predicted_speed(), "{speed}");
}

#[test]
fn unperturbed_stability_is_unbounded() {
    let w = ExactFrequency::golden();
    let rep = stability_experiment(
        &w,
        &StabilityFamily::Unperturbed { radius: 1.0 },
        &[1e-3, 1e-4],
        3,
        1e-3,
        5.0,
    )
    .unwrap();
    assert!(rep.unbounded);
    assert!(rep.fit.is_none());
    assert!(rep.rows.iter().all(|r| r.t_obs.is_infinite()));
}

#[test]
fn demo_family_exits() {
    let w = ExactFrequency::golden();
    let eps = [1e-2, 1e-3];
    let fam = DemoFamily::new(&w, 2, 1e-3, 1.0).unwrap();
    let delta = 0.5 * fam.predicted_max_drift();
    let rep = stability_experiment(&w, &StabilityFamily::Demo { radius: 1.0 }, &eps, 2, delta, 1e3)
        .unwrap();
    assert!(!rep.unbounded);
    assert!(rep.rows.iter().all(|r| r.t_obs.is_finite()));
    assert!(rep.fit.is_some());
}
