use lhv_audit_core::audit::{self, chsh};
use lhv_audit_core::model::{
    cond_expectations, joint_pmf, marginal_prob, remainder_width, uncond_expectations,
};
use lhv_audit_core::{
    Direction, HiddenSource, HpModel, LhvModel, ModelParams, QmSinglet, SettingGrid, ThetaPolicy,
    Version,
};
use proptest::prelude::*;

fn direction() -> impl Strategy<Value = Direction> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("away from zero", |(x, y, z)| x * x + y * y + z * z > 0.01)
        .prop_map(|(x, y, z)| Direction::new(x, y, z).unwrap())
}

fn even_n() -> impl Strategy<Value = u32> {
    (1u32..=40).prop_map(|h| 2 * h)
}

fn policy() -> impl Strategy<Value = ThetaPolicy> {
    prop_oneof![
        Just(ThetaPolicy::Lower),
        Just(ThetaPolicy::Upper),
        (0.0f64..=1.0).prop_map(ThetaPolicy::Fixed),
    ]
}

fn lam() -> impl Strategy<Value = HiddenSource> {
    (prop_oneof![Just(1i8), Just(-1i8)], 0.0f64..100.0, any::<u64>())
        .prop_map(|(r, t, tag)| HiddenSource::new(r, t, tag).unwrap())
}

proptest! {
    #[test]
    fn v1_does_not_depend_on_lambda(a in direction(), b in direction(), n in even_n(), l in lam()) {
        let p = ModelParams::new(n, ThetaPolicy::Lower).unwrap();
        prop_assert_eq!(
            cond_expectations(Version::V1, &p, &a, &b, &l),
            uncond_expectations(Version::V1, &p, &a, &b)
        );
    }

    #[test]
    fn versions_share_the_correlation(a in direction(), b in direction(), n in even_n(), l in lam()) {
        let p = ModelParams::new(n, ThetaPolicy::Lower).unwrap();
        let g1 = cond_expectations(Version::V1, &p, &a, &b, &l).gamma;
        let g2 = cond_expectations(Version::V2, &p, &a, &b, &l).gamma;
        prop_assert_eq!(g1, g2);
        prop_assert_eq!(g1, -a.dot(&b));
        prop_assert_eq!(uncond_expectations(Version::V2, &p, &a, &b).gamma, g1);
    }

    #[test]
    fn sign_pair_averages_to_the_unconditioned_moments(
        a in direction(), b in direction(), n in even_n(), pol in policy()
    ) {
        let p = ModelParams::new(n, pol).unwrap();
        let [plus, minus] = HiddenSource::both_signs();
        let cp = cond_expectations(Version::V2, &p, &a, &b, &plus);
        let cm = cond_expectations(Version::V2, &p, &a, &b, &minus);
        let u = uncond_expectations(Version::V2, &p, &a, &b);
        let mean_alpha = 0.5 * (cp.alpha.resolve(pol) + cm.alpha.resolve(pol));
        prop_assert!((mean_alpha - u.alpha.resolve(pol)).abs() < 1e-15);
        prop_assert!((0.5 * (cp.beta + cm.beta) - u.beta).abs() < 1e-15);
    }

    #[test]
    fn alpha_interval_shape(a in direction(), b in direction(), n in even_n()) {
        let p = ModelParams::new(n, ThetaPolicy::Lower).unwrap();
        let alpha = uncond_expectations(Version::V1, &p, &a, &b).alpha;
        prop_assert!(alpha.lo >= -1.0 - 1e-12 && alpha.lo <= 1.0 + 1e-12);
        prop_assert!((alpha.width() - remainder_width(n)).abs() < 1e-15);
    }

    #[test]
    fn marginals_are_distributions(
        a in direction(), b in direction(), n in even_n(), pol in policy(), l in lam(), v2 in any::<bool>()
    ) {
        let v = if v2 { Version::V2 } else { Version::V1 };
        let p = ModelParams::new(n, pol).unwrap();
        let c = cond_expectations(v, &p, &a, &b, &l);
        let m1 = marginal_prob(&c.alpha, pol, n).unwrap().value;
        let m2 = marginal_prob(&lhv_audit_core::BoundedValue::exact(c.beta), pol, n).unwrap().value;
        for m in [m1, m2] {
            prop_assert!((m.p_plus + m.p_minus - 1.0).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&m.p_plus));
        }
    }

    #[test]
    fn unclamped_joint_reproduces_its_moments(
        a in direction(), b in direction(), n in even_n(), l in lam(), v2 in any::<bool>()
    ) {
        let v = if v2 { Version::V2 } else { Version::V1 };
        let pol = ThetaPolicy::Lower;
        let p = ModelParams::new(n, pol).unwrap();
        let c = cond_expectations(v, &p, &a, &b, &l);
        let j = joint_pmf(&c, pol).unwrap();
        prop_assert!(j.value.entries().iter().all(|&x| x >= 0.0));
        prop_assert!((j.value.entries().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        if j.clamp == 0.0 {
            prop_assert!((j.value.marginal_a().expectation() - c.alpha.resolve(pol)).abs() < 1e-12);
            prop_assert!((j.value.marginal_b().expectation() - c.beta).abs() < 1e-12);
            prop_assert!((j.value.correlation() - c.gamma).abs() < 1e-12);
        }
    }

    #[test]
    fn chsh_matches_qm_and_respects_tsirelson(
        a in direction(), a2 in direction(), b in direction(), b2 in direction(), v2 in any::<bool>()
    ) {
        let v = if v2 { Version::V2 } else { Version::V1 };
        let hp = HpModel::new(v, ModelParams::default());
        let s = chsh(&hp, &a, &a2, &b, &b2).unwrap();
        let q = chsh(&QmSinglet, &a, &a2, &b, &b2).unwrap();
        prop_assert!((s - q).abs() < 1e-12);
        prop_assert!(s.abs() <= 2.0 * 2f64.sqrt() + 1e-12);
        // Swapping b and b′ flips the sign of the a-terms only.
        let swapped = chsh(&hp, &a, &a2, &b2, &b).unwrap();
        let e = |x: &Direction, y: &Direction| hp.uncond_moments(x, y).unwrap().gamma;
        prop_assert!((s + swapped - 2.0 * (e(&a2, &b) + e(&a2, &b2))).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn audits_ignore_grid_order(
        dirs in proptest::collection::vec(direction(), 3..6),
        rot in 1usize..5,
        v2 in any::<bool>()
    ) {
        let v = if v2 { Version::V2 } else { Version::V1 };
        let hp = HpModel::new(v, ModelParams::default());
        let mut permuted = dirs.clone();
        let len = permuted.len();
        permuted.rotate_left(rot % len);
        let g = SettingGrid::explicit(dirs).unwrap();
        let h = SettingGrid::explicit(permuted).unwrap();
        let states = hp.audit_states();
        let pi = |grid: &SettingGrid| {
            audit::audit_parameter_independence(&hp, grid, &states).unwrap().max_violation
        };
        let sl = |grid: &SettingGrid| audit::audit_signal_locality(&hp, grid).unwrap().max_violation;
        prop_assert!((pi(&g) - pi(&h)).abs() < 1e-15);
        prop_assert!((sl(&g) - sl(&h)).abs() < 1e-15);
    }
}
