use jjline::analysis::{cft_energy, cft_lambda, cft_levels};
use jjline::circuit::{charge_gauge_bath, line_normal_modes};
use jjline::polaron::{build_photon_configs, spectrum};
use jjline::reference::{dense_ed_charge, flux_quadratic_levels, BareBasisSpec};
use jjline::special::displacement_table;
use jjline::{Boundary, CircuitSpec, Cutoffs, SolverOptions};
use proptest::prelude::*;

/// Occupation vectors with `Σ n_k w_k < cut`, counted by direct recursion.
fn count_below(w: &[f64], cut: f64) -> usize {
    match w.split_first() {
        None => 1,
        Some((&first, rest)) => {
            let mut total = 0;
            let mut n = 0.0;
            while n * first < cut {
                total += count_below(rest, cut - n * first);
                n += 1.0;
            }
            total
        }
    }
}

#[test]
fn photon_config_count_matches_recursive_enumeration() {
    let spec = CircuitSpec::unit(1.0, 1.0, 4.0, 5, Boundary::OpenEnd).unwrap();
    let bath = charge_gauge_bath(&line_normal_modes(&spec).unwrap(), 1.0).unwrap();
    let cut = 3.0 * bath.frequencies[0];
    let set = build_photon_configs(&bath.frequencies, cut, 1_000_000).unwrap();
    assert_eq!(set.len(), count_below(&bath.frequencies, cut));
    assert_eq!(set.position(&[0; 5]), Some(0));
    assert!((0..set.len()).all(|i| set.energy(i) < cut));
}

#[test]
fn two_mode_enumeration() {
    let set = build_photon_configs(&[1.0, 2.0], 2.5, 100).unwrap();
    let mut got: Vec<Vec<u16>> = set.iter().map(|c| c.to_vec()).collect();
    got.sort();
    assert_eq!(got, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![2, 0]]);
}

#[test]
fn config_overflow_is_reported() {
    assert!(build_photon_configs(&[0.1, 0.1, 0.1], 5.0, 10).is_err());
}

#[test]
fn single_mode_charge_circuit_matches_dense_reference() {
    let opts = SolverOptions::default();
    for (z, e_j) in [(0.5, 0.5), (2.0, 2.0)] {
        let spec = CircuitSpec::unit(e_j, z, 4.0, 1, Boundary::OpenEnd).unwrap().with_bias(0.3);
        let mut c = Cutoffs::with_energy(40.0);
        c.charge_cutoff = 8;
        let pol = spectrum(&spec, &c, 4, &opts).unwrap().energies;
        let bare = BareBasisSpec::uniform(8, 36, 1);
        let reference = dense_ed_charge(&spec, &bare, 4, &opts).unwrap().energies;
        for (a, b) in pol.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-6 * b.abs().max(1.0), "Z={z} E_J={e_j}: {a} vs {b}");
        }
    }
}

#[test]
fn free_flux_circuit_is_a_set_of_oscillators() {
    let spec = CircuitSpec::unit(0.0, 1.0, 4.0, 2, Boundary::ShortEnd).unwrap();
    let levels = spectrum(&spec, &Cutoffs::with_energy(30.0), 5, &SolverOptions::default()).unwrap().energies;
    let exact = flux_quadratic_levels(&spec, 5).unwrap();
    for (a, b) in levels.iter().zip(&exact) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn open_line_sum_rule_is_exact(z in 0.1f64..10.0, wc in 0.5f64..40.0, n in 1usize..24) {
        let modes = line_normal_modes(&CircuitSpec::unit(1.0, z, wc, n, Boundary::OpenEnd).unwrap()).unwrap();
        prop_assert!((modes.coupling_sum() - modes.inductive_scale).abs() < 1e-10 * modes.inductive_scale);
    }

    #[test]
    fn short_line_sum_rule_leaves_a_residual(z in 0.1f64..10.0, wc in 0.5f64..40.0, n in 1usize..24) {
        let modes = line_normal_modes(&CircuitSpec::unit(1.0, z, wc, n, Boundary::ShortEnd).unwrap()).unwrap();
        prop_assert!(modes.sum_rule_residual() > 1e-6 * modes.inductive_scale);
    }

    #[test]
    fn displacement_columns_are_normalized(x in -2.0f64..2.0, n in 0usize..20) {
        let size = 200;
        let t = displacement_table(size, x);
        let norm: f64 = (0..size).map(|m| t[m * size + n].powi(2)).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
    }

    #[test]
    fn cft_levels_are_periodic_and_mirror_symmetric(mu in 0.01f64..1.0, xi in -0.5f64..0.5) {
        prop_assert!((cft_lambda(mu, xi) - cft_lambda(mu, xi + 1.0)).abs() < 1e-12);
        let a = cft_levels(mu, xi, 6).unwrap();
        let c = cft_levels(mu, -xi, 6).unwrap();
        for (x, z) in a.iter().zip(&c) {
            prop_assert!((x - z).abs() < 1e-12);
        }
        prop_assert!(cft_energy(mu, xi, 0, 0).unwrap() >= 0.0);
        prop_assert!(cft_energy(mu, xi + 1.0, 0, 0).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn small_circuit_spectrum_is_bias_periodic(e_j in 0.0f64..3.0, bias in -0.5f64..0.5, short in any::<bool>()) {
        let b = if short { Boundary::ShortEnd } else { Boundary::OpenEnd };
        let spec = CircuitSpec::unit(e_j, 1.0, 4.0, 1, b).unwrap();
        let c = Cutoffs::with_energy(12.0);
        let opts = SolverOptions::default();
        let at = |x: f64| spectrum(&spec.with_bias(x), &c, 3, &opts).unwrap().energies;
        let (e0, e1, e2) = (at(bias), at(bias + 1.0), at(-bias));
        for i in 0..3 {
            prop_assert!((e0[i] - e1[i]).abs() < 1e-8, "period: {} vs {}", e0[i], e1[i]);
            prop_assert!((e0[i] - e2[i]).abs() < 1e-8, "mirror: {} vs {}", e0[i], e2[i]);
        }
    }
}
