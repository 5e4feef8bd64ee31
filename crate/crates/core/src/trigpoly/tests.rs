use super::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type P = TrigTaylorPoly<f64>;

fn caps() -> Caps {
    Caps::new(8, 4)
}

fn sin1(n: usize) -> P {
    let mut k = vec![0; n];
    k[0] = 1;
    P::sin_mode(n, 1.0, caps(), &k, &vec![0; n], 1.0)
}

fn rand_poly(seed: u64, n: usize, c: Caps, terms: usize) -> P {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_poly(&mut rng, n, 1.0, c, terms, 1.0)
}

/// Independent oracle: explicit cos/sin double loop over the stored terms.
fn naive_eval(f: &P, theta: &[f64], action: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (k, a, c) in f.terms() {
        let mut phase = 0.0;
        for i in 0..k.len() {
            phase += k[i] as f64 * theta[i];
        }
        phase *= 2.0 * std::f64::consts::PI;
        let mut mono = 1.0;
        for i in 0..a.len() {
            for _ in 0..a[i] {
                mono *= action[i];
            }
        }
        acc += (c.re * phase.cos() - c.im * phase.sin()) * mono;
    }
    acc
}

#[test]
fn bracket_of_sine_with_action() {
    let f = sin1(2);
    let g = P::monomial(2, 1.0, caps(), &[1, 0], 1.0);
    let b = f.poisson_bracket(&g).unwrap();
    let expect = P::cos_mode(2, 1.0, caps(), &[1, 0], &[0, 0], 2.0 * std::f64::consts::PI);
    assert!(b.sub(&expect).unwrap().coeff_mass() < 1e-13);

    // finite-difference check at 10 points
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-6;
    for _ in 0..10 {
        let th = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
        let ac = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
        let mut fd = 0.0;
        for i in 0..2 {
            let mut tp = th;
            let mut tm = th;
            tp[i] += h;
            tm[i] -= h;
            let mut ap = ac;
            let mut am = ac;
            ap[i] += h;
            am[i] -= h;
            let df_t = (f.evaluate(&tp, &ac).unwrap() - f.evaluate(&tm, &ac).unwrap()) / (2.0 * h);
            let dg_a = (g.evaluate(&th, &ap).unwrap() - g.evaluate(&th, &am).unwrap()) / (2.0 * h);
            let df_a = (f.evaluate(&th, &ap).unwrap() - f.evaluate(&th, &am).unwrap()) / (2.0 * h);
            let dg_t = (g.evaluate(&tp, &ac).unwrap() - g.evaluate(&tm, &ac).unwrap()) / (2.0 * h);
            fd += df_t * dg_a - df_a * dg_t;
        }
        assert!((b.evaluate(&th, &ac).unwrap() - fd).abs() < 1e-7);
    }
}

#[test]
fn derivative_examples() {
    let f = sin1(2);
    let d = f.d_theta(0);
    let expect = P::cos_mode(2, 1.0, caps(), &[1, 0], &[0, 0], 2.0 * std::f64::consts::PI);
    assert!(d.sub(&expect).unwrap().coeff_mass() < 1e-13);

    let m = P::monomial(2, 1.0, caps(), &[2, 1], 1.0);
    let dm = m.d_action(0);
    let expect = P::monomial(2, 1.0, caps(), &[1, 1], 2.0);
    assert_eq!(dm, expect);
}

#[test]
fn mixed_partials_commute() {
    for seed in 0..20 {
        let f = rand_poly(seed, 2, caps(), 12);
        let a = f.d_theta(0).d_action(1);
        let b = f.d_action(1).d_theta(0);
        let c = f.derivative(&[1, 0], &[0, 1]).unwrap();
        let scale = 1e-14 * a.coeff_mass();
        assert!(a.sub(&b).unwrap().coeff_mass() <= scale);
        assert!(a.sub(&c).unwrap().coeff_mass() <= scale);
        let keys = |p: &P| p.terms().map(|(k, a, _)| (k.clone(), a.clone())).collect::<Vec<_>>();
        assert_eq!(keys(&a), keys(&b));
    }
}

#[test]
fn norm_of_sine() {
    let f = sin1(2);
    for j in 0..=4u32 {
        let exact = (2.0 * std::f64::consts::PI).powi(j as i32);
        let ub = f.ck_norm(j, NormMethod::UpperBound);
        let gr = f.ck_norm(j, NormMethod::Grid { m: 8 });
        assert!((ub - exact).abs() < 1e-9 * exact, "{j}: {ub}");
        assert!((gr - exact).abs() < 1e-6 * exact, "{j}: {gr}");
    }
}

#[test]
fn norm_of_action() {
    let f = P::monomial(2, 1.0, caps(), &[1, 0], 1.0);
    assert!((f.ck_norm(2, NormMethod::UpperBound) - 1.0).abs() < 1e-15);
    assert!((f.ck_norm(2, NormMethod::Grid { m: 8 }) - 1.0).abs() < 1e-15);
}

#[test]
fn evaluate_examples() {
    let c = P::constant(2, 1.0, caps(), 0.5);
    assert_eq!(c.evaluate(&[0.3, 0.9], &[0.1, -0.2]).unwrap(), 0.5);
    let s = P::sin_mode(2, 1.0, caps(), &[1, 1], &[0, 0], 1.0);
    assert!((s.evaluate(&[0.25, 0.0], &[0.7, 0.1]).unwrap() - 1.0).abs() < 1e-15);
    assert!(matches!(
        s.evaluate(&[0.0, 0.0], &[1.5, 0.0]),
        Err(Error::Domain { .. })
    ));
}

#[test]
fn dimension_mismatch_is_rejected() {
    let a = sin1(2);
    let b = sin1(3);
    assert!(matches!(a.poisson_bracket(&b), Err(Error::Rejected(_))));
    assert!(matches!(a.add(&b), Err(Error::Rejected(_))));
}

#[test]
fn text_round_trip_is_exact() {
    let f = rand_poly(11, 3, Caps::new(4, 3), 20);
    let text = f.to_text();
    let g = P::from_text(&text).unwrap();
    assert_eq!(g.to_text(), text);
    assert_eq!(f.terms().count(), g.terms().count());
    for ((k1, a1, c1), (k2, a2, c2)) in f.terms().zip(g.terms()) {
        assert_eq!((k1, a1), (k2, a2));
        assert_eq!(c1.re.to_bits(), c2.re.to_bits());
        assert_eq!(c1.im.to_bits(), c2.im.to_bits());
    }
}

#[test]
fn parse_error_reports_position() {
    let err = P::from_text("2 1.0 4 2\n1 0 0 0 zz 0.0\n").unwrap_err();
    match err {
        Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 9)),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn truncation_mass_bounds_dropped_part() {
    let small = Caps::new(3, 2);
    let f = rand_poly(5, 2, small, 8);
    let g = rand_poly(6, 2, small, 8);
    let full = f.clone().with_caps(Caps::new(6, 4)).mul(&g.clone().with_caps(Caps::new(6, 4))).unwrap();
    let cut = f.mul(&g).unwrap();
    let dropped = full.sub(&cut.clone().with_caps(Caps::new(6, 4))).unwrap();
    assert!(cut.truncation() >= dropped.coeff_mass() * (1.0 - 1e-12));
    assert!(cut.truncation() > 0.0);
}

#[test]
fn compiled_gradient_matches_derivatives() {
    let f = rand_poly(9, 3, Caps::new(4, 3), 15);
    let c = CompiledHamiltonian::new(&f);
    let th = [0.1, 0.7, 0.33];
    let ac = [0.2, -0.4, 0.5];
    let mut g = eval::Gradient::default();
    c.gradient(&th, &ac, &mut g);
    assert!((g.value - f.evaluate(&th, &ac).unwrap()).abs() < 1e-12);
    for i in 0..3 {
        let dt = f.d_theta(i).evaluate(&th, &ac).unwrap();
        let da = f.d_action(i).evaluate(&th, &ac).unwrap();
        assert!((g.d_theta[i] - dt).abs() < 1e-10 * (1.0 + dt.abs()));
        assert!((g.d_action[i] - da).abs() < 1e-10 * (1.0 + da.abs()));
    }
}

#[test]
fn works_in_single_precision() {
    let f = TrigTaylorPoly::<f32>::sin_mode(2, 1.0, caps(), &[1, 1], &[0, 0], 1.0);
    let v = f.evaluate(&[0.25, 0.0], &[0.0, 0.0]).unwrap();
    assert!((v - 1.0).abs() < 1e-6);
    let g = f.poisson_bracket(&TrigTaylorPoly::linear(1.0, caps(), &[1.0, 1.0])).unwrap();
    assert_eq!(g.num_terms(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bracket_is_antisymmetric(seed in 0u64..1000) {
        let f = rand_poly(seed, 2, Caps::new(4, 2), 6);
        let g = rand_poly(seed + 7, 2, Caps::new(4, 2), 6);
        prop_assert!(f.poisson_bracket(&f).unwrap().coeff_mass() < 1e-12);
        let s = f.poisson_bracket(&g).unwrap().add(&g.poisson_bracket(&f).unwrap()).unwrap();
        prop_assert!(s.coeff_mass() < 1e-11);
    }

    #[test]
    fn jacobi_identity(seed in 0u64..1000) {
        let c = Caps::new(12, 6);
        let f = rand_poly(seed, 2, Caps::new(3, 2), 4).with_caps(c);
        let g = rand_poly(seed + 1, 2, Caps::new(3, 2), 4).with_caps(c);
        let h = rand_poly(seed + 2, 2, Caps::new(3, 2), 4).with_caps(c);
        let t1 = f.poisson_bracket(&g.poisson_bracket(&h).unwrap()).unwrap();
        let t2 = g.poisson_bracket(&h.poisson_bracket(&f).unwrap()).unwrap();
        let t3 = h.poisson_bracket(&f.poisson_bracket(&g).unwrap()).unwrap();
        let j = t1.add(&t2).unwrap().add(&t3).unwrap();
        prop_assert!(j.grid_sup(8, 1.0) < 1e-8);
    }

    #[test]
    fn grid_below_upper_bound(seed in 0u64..1000, j in 0u32..3) {
        let f = rand_poly(seed, 2, Caps::new(5, 3), 8);
        let ub = f.ck_norm(j, NormMethod::UpperBound);
        let gr = f.ck_norm(j, NormMethod::Grid { m: 8 });
        prop_assert!(gr <= ub * (1.0 + 1e-12));
    }

    #[test]
    fn evaluate_matches_naive_oracle(seed in 0u64..1000, t0 in 0.0..1.0f64, a0 in -1.0..1.0f64) {
        let f = rand_poly(seed, 3, Caps::new(5, 3), 10);
        let th = [t0, 1.0 - t0, 0.5 * t0];
        let ac = [a0, -0.5 * a0, 0.3];
        let z = f.evaluate_complex(&th, &ac).unwrap();
        let naive = naive_eval(&f, &th, &ac);
        prop_assert!((z.re - naive).abs() < 1e-12 * (1.0 + naive.abs()));
        prop_assert!(z.im.abs() < 1e-12 * (1.0 + z.norm()));
    }

    #[test]
    fn product_commutes_and_associates(seed in 0u64..1000) {
        let c = Caps::new(12, 6);
        let f = rand_poly(seed, 2, Caps::new(3, 2), 4).with_caps(c);
        let g = rand_poly(seed + 3, 2, Caps::new(3, 2), 4).with_caps(c);
        let h = rand_poly(seed + 5, 2, Caps::new(3, 2), 4).with_caps(c);
        let fg = f.mul(&g).unwrap();
        prop_assert!(fg.sub(&g.mul(&f).unwrap()).unwrap().coeff_mass() < 1e-12);
        let l = fg.mul(&h).unwrap();
        let r = f.mul(&g.mul(&h).unwrap()).unwrap();
        prop_assert!(l.sub(&r).unwrap().coeff_mass() < 1e-11 * (1.0 + l.coeff_mass()));
    }

    #[test]
    fn operations_preserve_hermitian_symmetry(seed in 0u64..1000) {
        let f = rand_poly(seed, 2, Caps::new(4, 2), 6);
        let g = rand_poly(seed + 1, 2, Caps::new(4, 2), 6);
        let b = f.poisson_bracket(&g).unwrap();
        prop_assert!(b.hermitian_defect() < 1e-12 * (1.0 + b.max_coeff()));
        let p = f.mul(&g).unwrap();
        prop_assert!(p.hermitian_defect() < 1e-12 * (1.0 + p.max_coeff()));
    }
}
