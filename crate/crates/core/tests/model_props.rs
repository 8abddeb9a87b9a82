use kpp_stefan::error::Error;
use kpp_stefan::model::{
    make_reaction, validate_history, BirthFunction, FamilyId, ProblemSpec, RawHistory, ReactionFamily,
};
use proptest::prelude::*;

fn families() -> Vec<(FamilyId, f64)> {
    vec![
        (FamilyId::BevertonHolt { p: 2.0, q: 1.0 }, 1.0),
        (FamilyId::BevertonHolt { p: 3.0, q: 2.0 }, 1.0),
        (FamilyId::LogisticDeath { r: 1.0 }, 1.0),
        (
            FamilyId::StageStructured {
                birth: BirthFunction::BevertonHolt { p: 4.0, q: 1.0 },
                d_i: 0.5,
                tau: 1.0,
            },
            1.0,
        ),
        (
            FamilyId::StageStructured {
                birth: BirthFunction::Saturating { p: 3.0, q: 1.0 },
                d_i: 0.2,
                tau: 1.0,
            },
            1.0,
        ),
    ]
}

/// Dense-sample check of (H), written against the raw values only.
fn assert_hypothesis(r: &ReactionFamily, samples: usize) {
    let (d, us) = (r.d, r.ustar);
    assert_eq!(r.f(0.0), 0.0);
    assert!(r.fprime0 > d);
    let mut prev = 0.0;
    let mut prev_ratio = f64::INFINITY;
    for k in 1..=samples {
        let s = us * k as f64 / samples as f64;
        let v = r.f(s);
        assert!(v >= prev - 1e-14, "f decreasing at {s}");
        let ratio = v / s;
        assert!(ratio <= prev_ratio + 1e-12, "f(s)/s increasing at {s}");
        if k < samples {
            assert!(v - d * s > 0.0, "f(s) <= d s inside at {s}");
        }
        prev = v;
        prev_ratio = ratio;
    }
    assert!((r.f(us) - d * us).abs() < 1e-10);
    for k in 1..=samples {
        let s = us * (1.0 + 3.0 * k as f64 / samples as f64);
        assert!(r.f(s) - d * s < 0.0, "second root near {s}");
    }
}

#[test]
fn shipped_families_satisfy_the_hypothesis() {
    for (fam, d) in families() {
        let r = make_reaction(fam, d).unwrap();
        assert_hypothesis(&r, 1000);
        assert!(r.lipschitz >= r.fprime0 - 1e-12);
    }
}

#[test]
fn equilibria_match_independent_roots() {
    let bh = make_reaction(FamilyId::BevertonHolt { p: 3.0, q: 2.0 }, 1.0).unwrap();
    assert!((bh.ustar - 1.0).abs() < 1e-12);
    let stage = make_reaction(families()[4].0, 1.0).unwrap();
    // 3 e^{-0.2} (1 - e^{-s}) = s
    let a = 3.0 * (-0.2f64).exp();
    let (mut lo, mut hi) = (0.1f64, 10.0f64);
    for _ in 0..100 {
        let m = 0.5 * (lo + hi);
        if a * (1.0 - (-m).exp()) > m {
            lo = m;
        } else {
            hi = m;
        }
    }
    assert!((stage.ustar - lo).abs() < 1e-9, "{} vs {lo}", stage.ustar);
}

#[test]
fn derivatives_match_finite_differences() {
    for (fam, d) in families() {
        let r = make_reaction(fam, d).unwrap();
        for k in 0..20 {
            let s = 0.05 + r.ustar * k as f64 / 20.0;
            let h = 1e-6;
            let fd = (r.f(s + h) - r.f(s - h)) / (2.0 * h);
            assert!((fd - r.fprime(s)).abs() < 1e-6, "{fam:?} at {s}");
        }
    }
}

#[test]
fn inadmissible_parameters_are_rejected() {
    assert!(matches!(
        make_reaction(FamilyId::BevertonHolt { p: 0.5, q: 1.0 }, 1.0),
        Err(Error::HypothesisViolation(_))
    ));
    assert!(matches!(
        make_reaction(FamilyId::LogisticDeath { r: 2.0 }, 1.0),
        Err(Error::HypothesisViolation(_))
    ));
    assert!(matches!(
        make_reaction(FamilyId::BevertonHolt { p: -1.0, q: 1.0 }, 1.0),
        Err(Error::InvalidParameter(_))
    ));
}

#[test]
fn histories_violating_the_compatible_condition_are_rejected() {
    let r = make_reaction(FamilyId::BevertonHolt { p: 2.0, q: 1.0 }, 1.0).unwrap();
    let spec = ProblemSpec::new(r, 1.0, 1.0).unwrap();
    let mut raw = RawHistory::cosine(1.0, -1.0, 1.0, 0.5, 3, 21);
    raw.h_hist[0] = 1.5;
    raw.phi[0] = RawHistory::cosine(1.0, -1.0, 1.5, 0.5, 3, 21).phi[0].clone();
    assert!(matches!(
        validate_history(&spec, raw),
        Err(Error::CompatibleConditionViolation { .. })
    ));
    let mut raw = RawHistory::cosine(1.0, -1.0, 1.0, 0.5, 3, 21);
    raw.thetas[0] = -0.5;
    assert!(validate_history(&spec, raw).is_err());
    let shrinking = RawHistory::constant_domain(1.0, -1.0, 1.0, 3, 21, |_, x| 0.3 * (1.0 - x * x));
    assert!(validate_history(&spec, shrinking).is_ok());
}

proptest! {
    #[test]
    fn beverton_holt_hypothesis_holds_whenever_p_exceeds_d(
        d in 0.1f64..3.0, excess in 1e-3f64..5.0, q in 0.1f64..5.0,
    ) {
        let p = d + excess;
        let r = make_reaction(FamilyId::BevertonHolt { p, q }, d).unwrap();
        prop_assert!((r.ustar - (p / d - 1.0) / q).abs() < 1e-9 * r.ustar.max(1.0));
        assert_hypothesis(&r, 200);
    }

    #[test]
    fn logistic_hypothesis_holds_for_admissible_r(d in 0.1f64..3.0, frac in 0.01f64..1.0) {
        let r = make_reaction(FamilyId::LogisticDeath { r: d * frac }, d).unwrap();
        prop_assert!((r.ustar - 1.0).abs() < 1e-12);
        prop_assert!((r.linear_growth() - d * frac).abs() < 1e-12);
        assert_hypothesis(&r, 200);
    }

    #[test]
    fn critical_length_matches_linear_growth(d in 0.1f64..3.0, excess in 1e-2f64..5.0) {
        let r = make_reaction(FamilyId::BevertonHolt { p: d + excess, q: 1.0 }, d).unwrap();
        let l = r.critical_length();
        prop_assert!((l * l * excess - std::f64::consts::PI.powi(2)).abs() < 1e-9 * l * l * excess);
    }
}
