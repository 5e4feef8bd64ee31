use super::*;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diophantine::{periodic_approximations, ApproxOptions};
use crate::dynamics::integrator::flow_map;
use crate::trigpoly::{random_poly, CompiledHamiltonian};

type P = TrigTaylorPoly<f64>;

const GRID: NormMethod = NormMethod::Grid { m: 16 };

fn caps() -> Caps {
    Caps::new(8, 2)
}

fn v_three_halves() -> PeriodicVector {
    PeriodicVector::from_rational(&[Ratio::from_integer(1), Ratio::new(3, 2)]).unwrap()
}

fn rand_poly(seed: u64, n: usize, c: Caps, terms: usize, amp: f64) -> P {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_poly(&mut rng, n, 1.0, c, terms, amp)
}

fn test_family(eps: f64) -> P {
    let c = Caps::new(4, 1);
    P::sin_mode(2, 1.0, c, &[1, 0], &[0, 0], eps)
        .add(&P::cos_mode(2, 1.0, c, &[1, -1], &[0, 0], eps))
        .unwrap()
}

#[test]
fn average_examples() {
    let v = v_three_halves();
    let u = P::cos_mode(2, 1.0, caps(), &[3, -2], &[0, 0], 1.0);
    assert_eq!(average(&u, &v), u);
    let s = P::sin_mode(2, 1.0, caps(), &[1, 0], &[0, 0], 1.0);
    assert!(average(&s, &v).is_zero());
    let mixed = P::sin_mode(2, 1.0, caps(), &[1, 1], &[1, 0], 1.0)
        .add(&P::constant(2, 1.0, caps(), 0.5))
        .unwrap();
    assert_eq!(average(&mixed, &v), P::constant(2, 1.0, caps(), 0.5));
}

#[test]
fn average_is_idempotent_and_linear() {
    let v = v_three_halves();
    for seed in 0..10 {
        let f = rand_poly(seed, 2, caps(), 12, 1.0);
        let g = rand_poly(seed + 100, 2, caps(), 12, 1.0);
        let af = average(&f, &v);
        assert_eq!(average(&af, &v), af);
        let lhs = average(&f.add(&g).unwrap(), &v);
        let rhs = af.add(&average(&g, &v)).unwrap();
        assert!(lhs.sub(&rhs).unwrap().coeff_mass() < 1e-14);
    }
}

#[test]
fn successive_averages_match_frequency_average() {
    let freqs = [
        ExactFrequency::golden(),
        "1,sqrt2,1+sqrt2".parse::<ExactFrequency>().unwrap(),
        "1,cbrt2,cbrt4".parse::<ExactFrequency>().unwrap(),
    ];
    for (idx, w) in freqs.iter().enumerate() {
        let rep = periodic_approximations(w, 5.0, &ApproxOptions::default()).unwrap();
        for seed in 0..5 {
            let mut f = rand_poly(seed, w.n(), Caps::new(3, 1), 20, 1.0);
            if idx == 1 {
                // make sure some resonant modes are present
                f = f
                    .add(&P::cos_mode(3, 1.0, Caps::new(3, 1), &[1, 1, -1], &[1, 0, 0], 0.3))
                    .unwrap();
            }
            let lhs = average_successive(&f, &rep.vectors);
            let rhs = average(&f, w);
            assert_eq!(lhs, rhs, "frequency {idx}, seed {seed}");
        }
    }
}

#[test]
fn homological_example() {
    let v = v_three_halves();
    let u = P::sin_mode(2, 1.0, caps(), &[1, 0], &[0, 0], 1.0);
    let gen = solve_homological(&u, &v);
    let expected = P::cos_mode(2, 1.0, caps(), &[1, 0], &[0, 0], -1.0 / std::f64::consts::TAU);
    assert!(gen.chi.sub(&expected).unwrap().coeff_mass() < 1e-16);
    let lv = linear_form(&u, &v.values());
    let back = gen.chi.poisson_bracket(&lv).unwrap();
    assert!(back.sub(&u).unwrap().grid_sup(16, 1.0) < 1e-15);
}

#[test]
fn homological_resonant_input_gives_zero() {
    let v = v_three_halves();
    let u = P::cos_mode(2, 1.0, caps(), &[3, -2], &[1, 1], 1.0);
    assert!(solve_homological(&u, &v).is_zero());
}

#[test]
fn homological_residual_random() {
    let v = v_three_halves();
    for seed in 0..100 {
        let u = rand_poly(seed, 2, caps(), 10, 1.0);
        let gen = solve_homological(&u, &v);
        let lv = linear_form(&u, &v.values());
        let res = gen
            .chi
            .poisson_bracket(&lv)
            .unwrap()
            .sub(&u.sub(&average(&u, &v)).unwrap())
            .unwrap();
        let scale = u.grid_sup(16, 1.0);
        assert!(res.grid_sup(16, 1.0) < 1e-12 * scale, "seed {seed}");
        // |chi|_{C^j} <= T |u|_{C^j} at the coefficient level
        for j in 0..3 {
            let lhs = gen.chi.ck_norm(j, NormMethod::UpperBound);
            let rhs = v.period_f64() * u.ck_norm(j, NormMethod::UpperBound);
            assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

#[test]
fn lie_transform_zero_generator() {
    let h = rand_poly(1, 2, caps(), 6, 1.0);
    let gen = LieGenerator::new(P::zero(2, 1.0, caps()), 6);
    let (out, rep) = lie_transform(&h, &gen).unwrap();
    assert_eq!(out, h);
    assert_eq!(rep.terms, 0);
}

#[test]
fn lie_transform_translation() {
    let c = Caps::new(1, 1);
    let h = P::sin_mode(2, 1.0, c, &[1, 0], &[0, 0], 1.0);
    let chi = P::linear(1.0, c, &[0.1, 0.0]);
    let (out, rep) = lie_transform(&h, &LieGenerator::new(chi, 12)).unwrap();
    assert!(rep.last_term < 1e-10);
    for i in 0..20 {
        let th = [i as f64 / 20.0, 0.3];
        let exact = (std::f64::consts::TAU * (th[0] + 0.1)).sin();
        assert!((out.evaluate(&th, &[0.2, -0.1]).unwrap() - exact).abs() < 1e-12);
    }
}

#[test]
fn lie_transform_matches_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    // Large enough caps that nothing is truncated: modes grow by 2 per bracket.
    let c = Caps::new(14, 3);
    let h = random_poly::<f64, _>(&mut rng, 2, 1.0, Caps::new(2, 2), 6, 1.0)
        .with_caps(c);
    let chi = random_poly::<f64, _>(&mut rng, 2, 1.0, Caps::new(2, 1), 4, 2e-3)
        .with_caps(c);
    let (out, rep) = lie_transform(&h, &LieGenerator::new(chi.clone(), 6)).unwrap();
    let flow = CompiledHamiltonian::new(&chi);
    let tol = 1e-8f64.max(10.0 * rep.last_term);
    for _ in 0..20 {
        let z: Vec<f64> = (0..4)
            .map(|i| if i < 2 { rng.gen::<f64>() } else { rng.gen_range(-0.5..0.5) })
            .collect();
        let y = flow_map(&flow, &z, 1.0, 16).unwrap();
        let direct = h.evaluate(&y[..2], &y[2..]).unwrap();
        let series = out.evaluate(&z[..2], &z[2..]).unwrap();
        assert!((direct - series).abs() < tol, "{direct} vs {series}");
    }
}

#[test]
fn lie_transform_first_order_error_is_quadratic() {
    let c = Caps::new(6, 3);
    let h = rand_poly(3, 2, Caps::new(2, 2), 6, 1.0).with_caps(c);
    let base = rand_poly(4, 2, Caps::new(2, 1), 4, 1.0).with_caps(c);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in [1e-2, 3e-3, 1e-3, 3e-4] {
        let chi = base.scale(s);
        let (out, _) = lie_transform(&h, &LieGenerator::new(chi.clone(), 6)).unwrap();
        let first = h.add(&h.poisson_bracket(&chi).unwrap()).unwrap();
        xs.push(s);
        ys.push(out.sub(&first).unwrap().grid_sup(16, 1.0));
    }
    let fit = crate::stats::loglog_fit(&xs, &ys);
    assert!((fit.slope - 2.0).abs() < 0.2, "slope {}", fit.slope);
}

#[test]
fn lie_transform_divergence_is_reported() {
    let c = Caps::new(8, 2);
    let h = P::sin_mode(2, 1.0, c, &[1, 0], &[0, 0], 1.0);
    let chi = P::linear(1.0, c, &[3.0, 0.0]);
    let err = lie_transform(&h, &LieGenerator::new(chi, 4)).unwrap_err();
    assert!(matches!(err, Error::Divergence { .. }));
}

#[test]
fn periodic_step_quadratic_example() {
    let eps = 1e-3;
    let v = PeriodicVector::new(vec![1, 0], Ratio::from_integer(1)).unwrap();
    let u = P::sin_mode(2, 1.0, caps(), &[1, 0], &[0, 0], eps);
    let s = P::zero(2, 1.0, caps());
    let step = periodic_step(&v, &s, &u, eps, eps, &StepOptions::default()).unwrap();
    assert!(step.averaged.is_zero());
    assert!(step.u_prime.grid_sup(16, 1.0) <= 10.0 * eps * eps);
    assert!(step.record.violations.is_empty());
}

#[test]
fn periodic_step_nonresonant_remainder_is_small() {
    // A detuned frequency makes u' nonzero: u' = {l_w - l_v, chi} + O(chi^2).
    let eps = 1e-4;
    let v = PeriodicVector::new(vec![1, 1], Ratio::from_integer(1)).unwrap();
    let u = rand_poly(9, 2, Caps::new(2, 1), 5, eps).with_caps(caps());
    let s = linear_form(&u, &[0.0, 1e-3]);
    let nu = 1e-2;
    let opts = StepOptions {
        theta_thresh: 0.1,
        ..Default::default()
    };
    let step = periodic_step(&v, &s, &u, u.grid_sup(16, 1.0), nu, &opts).unwrap();
    let direct = s.poisson_bracket(&step.generator.chi).unwrap();
    let diff = step.u_prime.sub(&direct).unwrap().grid_sup(16, 1.0);
    assert!(diff < 1e2 * eps * eps, "{diff}");
    assert!(step.record.u_prime_norm <= 10.0 * step.record.u_prime_scale);
}

#[test]
fn periodic_step_resonant_input_is_identity() {
    let v = v_three_halves();
    let u = P::cos_mode(2, 1.0, caps(), &[3, -2], &[0, 0], 1e-3);
    let s = P::zero(2, 1.0, caps());
    let step = periodic_step(&v, &s, &u, 1e-3, 1e-3, &StepOptions::default()).unwrap();
    assert!(step.generator.is_zero());
    assert!(step.u_prime.is_zero());
    assert_eq!(step.averaged, u);
}

#[test]
fn periodic_step_threshold_violation() {
    let v = PeriodicVector::new(vec![1, 0], Ratio::from_integer(1)).unwrap();
    let u = P::sin_mode(2, 1.0, caps(), &[1, 0], &[0, 0], 1e-3);
    let s = P::zero(2, 1.0, caps());
    let err = periodic_step(&v, &s, &u, 1e-3, 0.5, &StepOptions::default()).unwrap_err();
    match err {
        Error::Threshold { inequality, .. } => assert!(inequality.contains("T nu")),
        e => panic!("unexpected {e}"),
    }
    let rec = periodic_step(
        &v,
        &s,
        &u,
        1e-3,
        0.5,
        &StepOptions {
            mode: ThresholdMode::Record,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(rec.record.violations.len(), 1);
}

fn record_opts(q: f64) -> NormalFormOptions {
    NormalFormOptions {
        q: QChoice::Fixed(q),
        mode: ThresholdMode::Record,
        ..Default::default()
    }
}

#[test]
fn kappa_zero_is_identity() {
    let w: ExactFrequency = "1,1+sqrt2,sqrt2".parse().unwrap();
    let f = rand_poly(2, 3, Caps::new(2, 1), 10, 1e-3)
        .add(&P::cos_mode(3, 1.0, Caps::new(2, 1), &[1, -1, 1], &[0, 1, 0], 1e-3))
        .unwrap();
    let r = normal_form(&w, &f, 3, 0, &record_opts(4.0)).unwrap();
    assert!(r.generators.is_empty());
    assert!(r.resonant.is_zero());
    assert!(!r.avg_f.is_zero());
    let f0 = f.sub(&average(&f, &w)).unwrap();
    assert!(r.remainder.sub(&f0).unwrap().coeff_mass() < 1e-18);
}

#[test]
fn kappa_one_golden_family() {
    let w = ExactFrequency::golden();
    let f = test_family(1e-4);
    let mut last = f64::INFINITY;
    for q in [4.0, 8.0, 16.0, 32.0] {
        let r = normal_form(&w, &f, 4, 1, &record_opts(q)).unwrap();
        assert!(r.resonant.is_zero());
        assert_eq!(r.generators.len(), 2);
        let norm = r.ledger.final_norms.remainder;
        assert!(norm < last, "Q = {q}: {norm} >= {last}");
        last = norm;
    }
}

#[test]
fn g_one_vanishes_and_support_is_resonant() {
    let freqs = [
        ExactFrequency::golden(),
        "1,sqrt2,1+sqrt2".parse::<ExactFrequency>().unwrap(),
        ExactFrequency::integer(&[1, 2]).unwrap(),
    ];
    for (idx, w) in freqs.iter().enumerate() {
        let mut f = rand_poly(idx as u64, w.n(), Caps::new(2, 1), 8, 1e-5);
        if idx == 1 {
            f = f
                .add(&P::cos_mode(3, 1.0, Caps::new(2, 1), &[1, 1, -1], &[0, 0, 0], 1e-5))
                .unwrap();
        }
        let r1 = normal_form(w, &f, 3, 1, &record_opts(5.0)).unwrap();
        assert!(r1.resonant.is_zero(), "g_1 must vanish for frequency {idx}");
        let r2 = normal_form(w, &f, 3, 2, &record_opts(5.0)).unwrap();
        for (k, _) in r2.resonant.modes().chain(r2.avg_f.modes()) {
            assert!(w.is_resonant_i32(k), "mode {k:?} for frequency {idx}");
        }
    }
}

#[test]
fn resonant_frequency_produces_resonant_terms() {
    let w = ExactFrequency::integer(&[1, 2]).unwrap();
    let c = Caps::new(4, 1);
    // Two non-resonant modes whose bracket is resonant: (1,0) + (1,-1) = (2,-1).
    let f = P::sin_mode(2, 1.0, c, &[1, 0], &[1, 0], 1e-4)
        .add(&P::cos_mode(2, 1.0, c, &[1, -1], &[0, 1], 1e-4))
        .unwrap();
    let r = normal_form(&w, &f, 3, 2, &record_opts(3.0)).unwrap();
    assert!(!r.resonant.is_zero());
    for (k, _) in r.resonant.modes() {
        assert!(w.is_resonant_i32(k));
    }
}

#[test]
fn threshold_errors_name_the_step() {
    let w = ExactFrequency::golden();
    let f = test_family(1e-2);
    let opts = NormalFormOptions {
        q: QChoice::Fixed(4.0),
        ..Default::default()
    };
    match normal_form(&w, &f, 4, 1, &opts).unwrap_err() {
        Error::Threshold { inequality, .. } => assert!(inequality.contains("kappa = 1, j = 1")),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn kappa_range_is_checked() {
    let w = ExactFrequency::golden();
    let f = test_family(1e-4);
    assert!(normal_form(&w, &f, 3, 3, &record_opts(4.0)).is_err());
}

/// Random perturbation small enough for the threshold regime.
fn small_case() -> (ExactFrequency, P, NormalFormResult<f64>) {
    let w = ExactFrequency::golden();
    let f = rand_poly(11, 2, Caps::new(2, 1), 6, 1e-6);
    let opts = NormalFormOptions {
        q: QChoice::Fixed(13.0),
        caps: Some(Caps::new(6, 2)),
        ..Default::default()
    };
    let r = normal_form(&w, &f, 2, 1, &opts).unwrap();
    (w, f, r)
}

#[test]
fn energy_consistency() {
    let (w, f, r) = small_case();
    assert_eq!(r.ledger.violations(), 0);
    let h = linear_form(&f, w.values()).add(&f).unwrap();
    let k = r.hamiltonian().unwrap();
    let tol = 10.0 * r.remainder.truncation() + 1e-10;
    for z in maps::sample_points(2, r.final_radius(), 3) {
        let y = apply_generators(&r.generators, &z).unwrap();
        let lhs = h.evaluate(&y[..2], &y[2..]).unwrap();
        let rhs = k.evaluate(&z[..2], &z[2..]).unwrap();
        assert!((lhs - rhs).abs() <= tol, "{lhs} vs {rhs}");
    }
}

#[test]
fn composed_map_is_symplectic() {
    let (_, _, r) = small_case();
    let pts = maps::sample_points(2, r.final_radius(), 2);
    let defect = symplecticity_defect(&r.generators, &pts, 1e-5).unwrap();
    assert!(defect <= 1e-6, "{defect}");
}

#[test]
fn map_distance_examples() {
    let (w, f, r) = small_case();
    let rep = map_distance_report(&r, 1).unwrap();
    assert!(rep.distance > 0.0);
    assert!(rep.flow_constant > 0.5 && rep.flow_constant < 2.0);
    let mut empty = normal_form(&w, &f, 2, 0, &record_opts(4.0)).unwrap();
    assert_eq!(map_distance(&empty, 0).unwrap(), 0.0);
    empty.ledger.kappa = 1;
    assert!(map_distance(&empty, 2).is_err());
}

#[test]
fn single_generator_distance_tracks_field() {
    let (w, f, mut r) = small_case();
    r.generators.truncate(1);
    let chi = &r.generators[0].chi;
    let field = field_norm(chi, 0, GRID, r.final_radius());
    let d = map_distance(&r, 0).unwrap();
    assert!(d <= 2.0 * field && d >= 0.5 * field, "{d} vs {field}");
    let _ = (w, f);
}

#[test]
fn localize_linear_case() {
    let w = ExactFrequency::golden();
    let c = Caps::new(2, 2);
    let h = linear_form(&P::zero(2, 1.0, c), w.values());
    let f = P::cos_mode(2, 1.0, c, &[1, 1], &[1, 0], 1e-4);
    let loc = localize(&h, &f, &w, 0.1, 2, GRID).unwrap();
    assert!(loc.record.nonlinear_norm < 1e-15);
    // f(theta, r I) / r = I_1 cos(..) here, so the norms are equal
    let scaled = f.rescale_actions(0.1, 1.0).scale(10.0);
    assert!(loc.perturbation.sub(&scaled).unwrap().coeff_mass() < 1e-15);
}

#[test]
fn localize_quadratic_term_scales_with_r() {
    let w = ExactFrequency::golden();
    let c = Caps::new(2, 2);
    let h = linear_form(&P::zero(2, 1.0, c), w.values())
        .add(&P::monomial(2, 1.0, c, &[2, 0], 0.5))
        .unwrap();
    let f = P::cos_mode(2, 1.0, c, &[1, 1], &[0, 0], 1e-6);
    let a = localize(&h, &f, &w, 0.1, 2, GRID).unwrap().record.nonlinear_norm;
    let b = localize(&h, &f, &w, 0.05, 2, GRID).unwrap().record.nonlinear_norm;
    assert!((a / b - 2.0).abs() < 1e-9);
    assert!(matches!(
        localize(&h, &f, &w, 1e-3, 2, GRID),
        Err(Error::Threshold { .. })
    ));
}

#[test]
fn localized_pullback_consistency() {
    let w = ExactFrequency::golden();
    let c = Caps::new(3, 2);
    let h = linear_form(&P::zero(2, 1.0, c), w.values())
        .add(&P::monomial(2, 1.0, c, &[1, 1], 0.3))
        .unwrap()
        .add(&P::constant(2, 1.0, c, 2.0))
        .unwrap();
    let f = P::cos_mode(2, 1.0, c, &[1, 1], &[1, 0], 1e-6)
        .add(&P::sin_mode(2, 1.0, c, &[1, 0], &[0, 0], 1e-6))
        .unwrap();
    let r = 0.05;
    let loc = localize(&h, &f, &w, r, 2, GRID).unwrap();
    let nf = normal_form(&w, &loc.perturbation, 2, 1, &record_opts(5.0)).unwrap();
    let full = h.add(&f).unwrap();
    let k = nf.hamiltonian().unwrap();
    for z in maps::sample_points(2, 0.5, 2) {
        let y = apply_generators(&nf.generators, &z).unwrap();
        let orig = full.evaluate(&y[..2], &[r * y[2], r * y[3]]).unwrap();
        let pulled = loc.unscaled_energy(k.evaluate(&z[..2], &z[2..]).unwrap());
        assert!((orig - pulled).abs() < 1e-10, "{orig} vs {pulled}");
    }
}
