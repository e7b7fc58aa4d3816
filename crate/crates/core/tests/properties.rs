use std::sync::OnceLock;

use proptest::prelude::*;
use selfsim::profile::{saltus_decompose, sector_layout, total_variation, ProfileBuilder, SectorLayout};
use selfsim::riemann::{compose, solve_riemann_detailed};
use selfsim::system::{build_system, Halfplane, SystemDef};
use selfsim::verifier::{entropy_residual, weak_residual};
use selfsim::waves::{entropy_dissipation, shock_curve, shock_wave};
use selfsim::SystemConfig;

fn euler() -> &'static (SystemDef, SectorLayout) {
    static SYS: OnceLock<(SystemDef, SectorLayout)> = OnceLock::new();
    SYS.get_or_init(|| {
        let sys = build_system(&SystemConfig::euler(1.4, [1.0, 2.0, 0.0], 0.05)).unwrap();
        let layout = sector_layout(&sys).unwrap();
        (sys, layout)
    })
}

fn strength() -> impl Strategy<Value = f64> {
    (-1.0f64..1.0).prop_map(|t| t * 0.05 / 8.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn riemann_recovers_strengths(s in prop::array::uniform3(strength())) {
        let (sys, _) = euler();
        let vr = compose(sys, &sys.v_bar, &s).unwrap();
        let sol = solve_riemann_detailed(sys, &sys.v_bar, &vr).unwrap();
        for a in 0..3 {
            prop_assert!((sol.strengths[a] - s[a]).abs() <= 1e-8);
        }
        prop_assert!(weak_residual(sys, &sol.profile, 64).unwrap().max_residual <= 1e-7);
        prop_assert!(entropy_residual(sys, &sol.profile, 64).unwrap().pass);
    }

    #[test]
    fn shock_points_satisfy_rankine_hugoniot(s in strength(), family in prop::sample::select(vec![0usize, 1, 2])) {
        let (sys, _) = euler();
        let (vp, xi) = shock_curve(sys, &sys.v_bar, family, s).unwrap();
        prop_assert!(sys.rh_residual(&sys.v_bar, &vp, xi).unwrap() <= 1e-9);
        let e = entropy_dissipation(sys, &sys.v_bar, &vp, xi).unwrap();
        if family == 1 {
            prop_assert!(e.abs() <= 1e-9);
        } else if s.abs() > 1e-4 {
            prop_assert_eq!(e < 0.0, s < 0.0);
        }
    }

    #[test]
    fn evaluation_is_right_continuous(s in (-1.0f64..-0.05).prop_map(|t| t * 0.05 / 8.0)) {
        let (sys, _) = euler();
        let w = shock_wave(sys, &sys.v_bar, 0, s).unwrap();
        let mut b = ProfileBuilder::new(Halfplane::Right, sys.v_bar.clone());
        b.push_jump(&w).unwrap();
        let p = b.finish().unwrap();
        let xi = p.breakpoints()[0];
        prop_assert_eq!(p.evaluate(sys, xi).unwrap(), w.v_plus.clone());
        prop_assert_eq!(p.left_limit(sys, xi).unwrap(), w.v_minus.clone());
    }

    #[test]
    fn saltus_split_reconstructs(s in prop::array::uniform3(strength()), t in 0.0f64..1.0) {
        let (sys, _) = euler();
        let vr = compose(sys, &sys.v_bar, &s).unwrap();
        let p = solve_riemann_detailed(sys, &sys.v_bar, &vr).unwrap().profile;
        let d = saltus_decompose(sys, &p).unwrap();
        let xi = -0.8 + 1.6 * t;
        let v = p.evaluate(sys, xi).unwrap();
        let rebuilt = d.saltus(xi) + d.regular(sys, &p, xi).unwrap();
        prop_assert!((v - rebuilt).norm() <= 1e-14);
        // the regular part does not jump across recorded jumps
        for j in &d.jumps {
            let h = 1e-9;
            let gap = (d.regular(sys, &p, j.xi + h).unwrap() - d.regular(sys, &p, j.xi - h).unwrap()).norm();
            prop_assert!(gap <= 1e-6);
        }
    }

    #[test]
    fn total_variation_is_additive(s in prop::array::uniform3(strength()), t in 0.0f64..1.0) {
        let (sys, _) = euler();
        let vr = compose(sys, &sys.v_bar, &s).unwrap();
        let p = solve_riemann_detailed(sys, &sys.v_bar, &vr).unwrap().profile;
        let (a, c) = (-0.9, 0.9);
        let b = a + (c - a) * t;
        let whole = total_variation(sys, &p, a, c).unwrap();
        let parts = total_variation(sys, &p, a, b).unwrap() + total_variation(sys, &p, b, c).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-9);
    }

    #[test]
    fn json_round_trip(s in prop::array::uniform3(strength())) {
        let (sys, _) = euler();
        let vr = compose(sys, &sys.v_bar, &s).unwrap();
        let p = solve_riemann_detailed(sys, &sys.v_bar, &vr).unwrap().profile;
        let q = selfsim::profile::Profile::from_json(&p.to_json()).unwrap();
        prop_assert_eq!(&p, &q);
        prop_assert_eq!(p.to_json(), q.to_json());
    }
}
