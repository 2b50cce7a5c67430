use bwspdc::biphoton::{coefficients, pair_rate, PairedModes};
use bwspdc::cavity::{decay_rates, smallest_positive_root, CavitySpec, DecayRates, ModeIndex};
use bwspdc::dispersion::{Axis, DispersionData, Derivative, DispersionSample};
use bwspdc::pairgen::generate;
use bwspdc::units::{um_to_m, wavelength_to_omega};
use num_complex::Complex64;
use proptest::prelude::*;

fn ktp() -> DispersionData {
    bwspdc::config::resolve_dispersion("builtin:ktp_kato2002", std::path::Path::new(".")).unwrap()
}

fn sample(group_index: f64) -> DispersionSample {
    let model = ktp();
    let mut s = model.axis(Axis::Y).unwrap().dispersion_sample(wavelength_to_omega(um_to_m(1.064))).unwrap();
    s.group_index = group_index;
    s
}

fn spec(r: f64, xi: f64) -> CavitySpec {
    CavitySpec {
        length: 0.03,
        reflectivity_signal: r,
        reflectivity_idler: r,
        loss_signal: xi,
        loss_idler: xi,
        mode_q: ModeIndex::Auto,
        mode_r: ModeIndex::Auto,
    }
}

proptest! {
    #[test]
    fn decay_grows_as_mirrors_worsen(r in 0.9f64..0.9999, dr in 1e-5f64..0.05, xi in 0.0f64..1e-3) {
        let s = sample(1.85);
        let hi = decay_rates(&spec(r, xi), &s, &s).unwrap();
        let lo = decay_rates(&spec((r - dr).max(0.5), xi), &s, &s).unwrap();
        prop_assert!(lo.decay_s > hi.decay_s);
    }

    #[test]
    fn decay_grows_with_loss(r in 0.9f64..0.9999, xi in 0.0f64..1e-3, dxi in 1e-6f64..1e-3) {
        let s = sample(1.85);
        let a = decay_rates(&spec(r, xi), &s, &s).unwrap();
        let b = decay_rates(&spec(r, xi + dxi), &s, &s).unwrap();
        prop_assert!(b.decay_s > a.decay_s);
        let excess = b.decay_s - b.coupling_s;
        prop_assert!((excess / (2.0 * (xi + dxi) * b.spacing_s) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn finite_difference_matches_analytic(um in 0.5f64..3.0, z in any::<bool>()) {
        let data = ktp();
        let model = data.axis(if z { Axis::Z } else { Axis::Y }).unwrap();
        let w = wavelength_to_omega(um_to_m(um));
        let a = model.dispersion_sample_with(w, Derivative::Analytic).unwrap();
        let f = model.dispersion_sample_with(w, Derivative::FiniteDifference { rel_step: 1e-3 }).unwrap();
        prop_assert!((a.dn_domega / f.dn_domega - 1.0).abs() < 1e-6);
        prop_assert!((a.d2n_domega2 / f.d2n_domega2 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn kappa_scaling(scale in 0.1f64..10.0, phase in 0.0f64..std::f64::consts::TAU) {
        let rates = DecayRates::from_rates(1e7, 1.2e7, 1.3e7, 1.4e7);
        let k = Complex64::from_polar(1e5, phase);
        let base = pair_rate(&rates, k).unwrap();
        let scaled = pair_rate(&rates, k * scale).unwrap();
        prop_assert!((scaled / (base * scale * scale) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn c1_is_minus_b1(detuning in -5.0f64..5.0, phase in 0.0f64..std::f64::consts::TAU) {
        let rates = DecayRates::from_rates(1e7, 1e7, 1.2e7, 1.1e7);
        let modes = PairedModes::resonant(rates, Complex64::from_polar(1e5, phase), 1.77e15, 1.77e15);
        let c = coefficients(&modes, &[modes.omega_q + detuning * 1e7]).unwrap();
        prop_assert!((c.c1[0] + c.b1[0]).norm() <= 1e-15 * c.b1[0].norm().max(1e-300));
    }

    #[test]
    fn cluster_root_ignores_sign_order(m in -1e-20f64..1e-20, n in 1e-13f64..1e-11) {
        let a = smallest_positive_root(m, n, [1.0, -1.0]);
        let b = smallest_positive_root(m, n, [-1.0, 1.0]);
        prop_assert_eq!(a.is_ok(), b.is_ok());
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert_eq!(a, b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]
    #[test]
    fn event_streams_are_reproducible(seed in any::<u64>()) {
        let a = generate(1e5, 1e7, 1.2e7, 0.01, seed).unwrap();
        let b = generate(1e5, 1e7, 1.2e7, 0.01, seed).unwrap();
        prop_assert_eq!(a.records, b.records);
    }
}
