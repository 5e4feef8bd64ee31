use super::*;
use num_rational::Ratio;
use proptest::prelude::*;

fn golden() -> ExactFrequency {
    ExactFrequency::golden()
}

fn phi() -> f64 {
    (1.0 + 5f64.sqrt()) / 2.0
}

#[test]
fn span_examples() {
    let s = rational_span(&golden()).unwrap();
    assert_eq!((s.dim, s.basis.clone()), (2, vec![vec![1, 0], vec![0, 1]]));

    let r: ExactFrequency = "1/2, 1/3".parse().unwrap();
    let s = rational_span(&r).unwrap();
    assert_eq!((s.dim, s.basis.clone()), (1, vec![vec![3, 2]]));

    let w: ExactFrequency = "1, phi, 0".parse().unwrap();
    let s = rational_span(&w).unwrap();
    assert_eq!((s.dim, s.basis.clone()), (2, vec![vec![1, 0, 0], vec![0, 1, 0]]));

    let w: ExactFrequency = "1, phi, 1 + phi".parse().unwrap();
    let s = rational_span(&w).unwrap();
    assert_eq!(s.dim, 2);
    for b in &s.basis {
        // every basis vector lies in F = {x3 = x1 + x2}
        assert_eq!(b[2], b[0] + b[1]);
    }
}

#[test]
fn golden_psi_examples() {
    let (p1, k1) = psi(&golden(), 1.0).unwrap();
    assert!((p1 - phi()).abs() < 1e-12);
    assert_eq!(k1, vec![1, -1]);
    let (p2, k2) = psi(&golden(), 2.0).unwrap();
    assert!((p2 - phi() * phi()).abs() < 1e-12);
    assert_eq!(k2, vec![2, -1]);
}

#[test]
fn golden_breakpoints_are_fibonacci() {
    let t = psi_table(&golden(), 40).unwrap();
    let qs: Vec<u32> = t.breakpoints.iter().map(|b| b.q).collect();
    assert_eq!(qs, vec![1, 2, 3, 5, 8, 13, 21, 34]);
    for bp in &t.breakpoints {
        let exact = 1.0 / golden().abs_dot(&bp.witness);
        assert!((bp.psi - exact).abs() <= 1e-12 * exact);
    }
}

#[test]
fn periodic_psi_bounded_by_period() {
    let v: ExactFrequency = "1/2, 1/3".parse().unwrap();
    let (p, k) = psi(&v, 3.0).unwrap();
    assert!((p - 6.0 / 13.0).abs() < 1e-15);
    assert_eq!(k, vec![3, 2]);
    assert!(matches!(psi(&v, 2.0), Err(Error::BelowQmin { q_min, .. }) if q_min == 3.0));
    // T-periodic vectors are Diophantine with gamma = 1/T, tau = 0
    let r = dioph_check(&v, 1.0 / 6.0, 0.0, 60).unwrap();
    assert!(r.holds);
}

#[test]
fn delta_star_examples() {
    let t = psi_table(&golden(), 50).unwrap();
    let x = 5.3;
    let ds = t.delta_star(x).unwrap();
    assert!((ds - x / (phi() * phi())).abs() < 1e-12);
    assert!(matches!(t.delta_star(1.0), Err(Error::BelowRange { .. })));
    assert!(matches!(t.delta_star(1e6), Err(Error::TableExhausted { .. })));
    assert!((delta_star(&golden(), 1e4).unwrap() - t.delta_star(1e3).unwrap()).abs() > 0.0);
}

#[test]
fn delta_star_inverts_delta_at_continuity_points() {
    let t = psi_table(&golden(), 60).unwrap();
    for q in [1.5, 2.25, 4.0, 7.5, 12.0, 20.0, 33.3] {
        let back = t.delta_star(t.delta(q).unwrap()).unwrap();
        assert!((back - q).abs() < 1e-12 * q, "{q} -> {back}");
    }
}

#[test]
fn golden_is_badly_approximable() {
    let r = dioph_check(&golden(), 0.3, 1.0, 100).unwrap();
    assert!(r.holds, "{r:?}");
    assert!(r.tight_gamma > 0.3);
    assert!((r.fitted_tau - 1.0).abs() < 0.1);
    let bad = dioph_check(&golden(), 1e6, 0.0, 100).unwrap();
    assert!(!bad.holds);
    assert_eq!(bad.violation.unwrap().q, 1);
}

#[test]
fn approximations_golden_q5() {
    let r = periodic_approximations(&golden(), 5.0, &ApproxOptions::default()).unwrap();
    assert_eq!(r.vectors.len(), 2);
    assert_eq!(r.vectors[0].lift(), &[3, 5]);
    assert_eq!(r.vectors[0].period(), Ratio::from_integer(3));
    assert_eq!(r.vectors[1].lift(), &[2, 3]);
    assert_eq!(r.vectors[1].period(), Ratio::from_integer(2));
    assert_eq!(r.det.abs(), 1);
    assert!((r.constants[0] - 0.7295).abs() < 1e-3);
    assert!((r.constants[1] - 1.1803).abs() < 1e-3);
}

#[test]
fn approximations_of_periodic_vectors() {
    let v: ExactFrequency = "1/2, 1/3".parse().unwrap();
    let r = periodic_approximations(&v, 3.0, &ApproxOptions::default()).unwrap();
    assert_eq!(r.vectors.len(), 1);
    assert_eq!(r.vectors[0].period(), Ratio::from_integer(6));
    assert_eq!(r.vectors[0].components(), vec![Ratio::new(1, 2), Ratio::new(1, 3)]);

    let w = ExactFrequency::integer(&[2, 1]).unwrap();
    let r = periodic_approximations(&w, 1.0, &ApproxOptions::default()).unwrap();
    assert_eq!(r.vectors[0].lift(), &[2, 1]);
    assert_eq!(r.vectors[0].period(), Ratio::from_integer(1));
}

#[test]
fn minimal_period_may_be_fractional() {
    let v = PeriodicVector::from_rational(&[Ratio::from_integer(2), Ratio::from_integer(4)]).unwrap();
    assert_eq!(v.lift(), &[1, 2]);
    assert_eq!(v.period(), Ratio::new(1, 2));
    assert!(PeriodicVector::new(vec![2, 4], Ratio::from_integer(1)).is_err());
}

#[test]
fn cubic_approximations_are_certified() {
    let w: ExactFrequency = "1, cbrt2, cbrt4".parse().unwrap();
    for q in [5.0, 13.0] {
        let r = periodic_approximations(&w, q, &ApproxOptions::default()).unwrap();
        assert_eq!(r.vectors.len(), 3);
        assert_eq!(r.det.abs(), 1);
        for (v, c) in r.vectors.iter().zip(&r.constants) {
            assert!(*c <= 10.0);
            assert!(v.period_f64() <= 4.0 * r.psi.unwrap());
        }
    }
}

#[test]
fn oracle_agrees_on_small_corpus() {
    for spec in ["1, phi", "1/2, 1/3", "1, phi, 0", "1, sqrt2, sqrt3"] {
        let w: ExactFrequency = spec.parse().unwrap();
        let t = psi_table(&w, 12).unwrap();
        for q in t.q_min..=12 {
            let fast = t.lookup(q as f64).unwrap();
            let slow = oracle::psi_naive(&w, q).unwrap();
            assert_eq!(fast.1, slow.1, "{spec} at Q = {q}");
            assert!((fast.0 - slow.0).abs() <= 1e-12 * slow.0);
        }
    }
}

static GOLDEN_TABLE: std::sync::LazyLock<PsiTable> =
    std::sync::LazyLock::new(|| psi_table(&golden(), 400).unwrap());

proptest! {
    #[test]
    fn delta_star_is_monotone(a in 2.0..500.0f64, b in 2.0..500.0f64) {
        let t = &*GOLDEN_TABLE;
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(t.delta_star(lo).unwrap() <= t.delta_star(hi).unwrap());
    }

    #[test]
    fn delta_of_delta_star_below_x(x in 2.0..500.0f64) {
        let t = &*GOLDEN_TABLE;
        let q = t.delta_star(x).unwrap();
        // Delta(sup) may jump above x only at a breakpoint; just below it holds.
        let q_in = q * (1.0 - 1e-12);
        prop_assert!(t.delta(q_in).unwrap() <= x * (1.0 + 1e-12));
    }

    #[test]
    fn lifts_are_exactly_periodic(num in 1i64..40, den in 1i64..40, num2 in -40i64..40) {
        let v = [Ratio::new(num, den), Ratio::new(num2, den + 1)];
        let p = PeriodicVector::from_rational(&v).unwrap();
        let tv: Vec<Ratio<i64>> = p.components().iter().map(|x| x * p.period()).collect();
        prop_assert!(tv.iter().all(|x| x.is_integer()));
        prop_assert_eq!(p.components(), v.to_vec());
    }
}
