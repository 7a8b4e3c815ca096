use std::f64::consts::{LN_2, PI};

use afc_raman::analytic::{self, ProtocolParams};
use afc_raman::cli::canonical_json;
use afc_raman::comb::{dephasing_factor, Comb, CombParams};
use afc_raman::optimize::Objective;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0f64..60.0, 1.5f64..30.0, 10.0f64..30.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn efficiencies_are_probabilities((a, f, ratio) in params(), theta in 0.0f64..0.1) {
        let c = CombParams::with_finesse(f, 150e3, ratio * 150e3, a);
        let p = ProtocolParams::new(theta, 1e-6, 1e-5);
        let r = analytic::full_report(&c, &p).unwrap();
        for x in [r.eta_readout, r.eta_readout_forward, r.eta_memory_backward, r.eta_memory_forward, r.p_stokes, r.noise_per_mode] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        // backward beats forward, Raman beats memory
        prop_assert!(r.eta_readout >= r.eta_readout_forward - 1e-15);
        prop_assert!(r.eta_readout >= r.eta_memory_backward - 1e-15);
        prop_assert!(r.p_stokes <= theta + 1e-15);
    }

    #[test]
    fn efficiency_grows_with_depth((a, f, ratio) in params(), da in 0.01f64..10.0) {
        let lo = CombParams::with_finesse(f, 150e3, ratio * 150e3, a);
        let hi = CombParams { alpha_l: a + da, ..lo };
        prop_assert!(analytic::readout_efficiency_backward(&hi) >= analytic::readout_efficiency_backward(&lo));
        prop_assert!(analytic::afc_memory_efficiency(&hi, afc_raman::Direction::Backward)
            >= analytic::afc_memory_efficiency(&lo, afc_raman::Direction::Backward));
    }

    #[test]
    fn dephasing_is_increasing(f in 1.0f64..100.0, df in 0.01f64..10.0) {
        prop_assert!(dephasing_factor(f + df) > dephasing_factor(f));
        prop_assert!((dephasing_factor(f) - (-PI * PI / (2.0 * LN_2 * f * f)).exp()).abs() < 1e-15);
    }

    #[test]
    fn frequency_scaling((a, f, ratio) in params(), s in 0.01f64..100.0, x in -3.0f64..3.0) {
        let base = CombParams::with_finesse(f, 150e3, ratio * 150e3, a.max(0.1));
        let scaled = CombParams {
            gamma_fwhm: base.gamma_fwhm * s,
            delta0: base.delta0 * s,
            big_gamma: base.big_gamma * s,
            ..base
        };
        let (cb, cs) = (Comb::new(base).unwrap(), Comb::new(scaled).unwrap());
        let d = x * 150e3;
        let (rb, rs) = (cb.density(d), cs.density(d * s) * s);
        prop_assert!((rb - rs).abs() <= 1e-9 * rb.max(1e-300));
        let t = x.abs() * 1e-5;
        prop_assert!((cb.fourier(t) - cs.fourier(t / s)).norm() < 1e-9);
        prop_assert!((analytic::readout_efficiency_backward(&base) - analytic::readout_efficiency_backward(&scaled)).abs() < 1e-12);
    }

    #[test]
    fn objectives_match_closed_forms(d in 0.0f64..20.0, f in 1.2f64..50.0) {
        let deph = (-PI * PI / (2.0 * LN_2 * f * f)).exp();
        let e = (-d).exp();
        let expected = [
            (1.0 - e) * deph,
            if d > 0.0 { d * d * e / (1.0 - e) * deph } else { 0.0 },
            (1.0 - e).powi(2) * deph,
            d * d * e * deph,
        ];
        for (o, x) in Objective::ALL.iter().zip(expected) {
            prop_assert!((o.from_depth(d, f) - x).abs() < 1e-12, "{:?}", o);
        }
    }

    #[test]
    fn canonical_json_round_trips((a, f, ratio) in params(), theta in 0.0f64..0.1) {
        let c = CombParams::with_finesse(f, 150e3, ratio * 150e3, a);
        let p = ProtocolParams::new(theta, 1e-6, 1e-5);
        let r = analytic::full_report(&c, &p).unwrap();
        let text = canonical_json(&r).unwrap();
        let back: analytic::EfficiencyReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(canonical_json(&back).unwrap(), text);
        prop_assert!((back.eta_readout - r.eta_readout).abs() <= 1e-8 * r.eta_readout.max(1e-300));
    }
}
