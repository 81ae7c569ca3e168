// SPDX-License-Identifier: MIT OR Apache-2.0

use fused_changepoint::sim::{gen_data, GeneratorSpec};
use fused_changepoint::tau::{select_tau, upper_quantile, FusedCv, FusedFixed, TauConfig};
use fused_changepoint::Signal;

#[test]
fn reproducible_for_a_fixed_seed() {
    let y = gen_data(&GeneratorSpec::standard(200, 3)).unwrap();
    let cfg = TauConfig::new(12, 7, 0.9, 44);
    let a = select_tau(&y, &FusedCv::default(), cfg).unwrap();
    let b = select_tau(&y, &FusedCv::default(), cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.per_permutation_maxima.len(), 12);
    assert_eq!(a.tau_hat, upper_quantile(&a.per_permutation_maxima, 0.9));
    let other = select_tau(&y, &FusedCv::default(), TauConfig { seed: 45, ..cfg }).unwrap();
    assert_ne!(a.per_permutation_maxima, other.per_permutation_maxima);
}

#[test]
fn threshold_sits_below_true_jump_filter_on_clean_steps() {
    let spec = GeneratorSpec {
        noise_sd: 0.3,
        ..GeneratorSpec::standard(300, 5)
    };
    let y = gen_data(&spec).unwrap();
    let sel = select_tau(
        &y,
        &FusedFixed { lambda: 3.0 },
        TauConfig::new(20, 8, 0.95, 1),
    )
    .unwrap();
    assert!(sel.tau_hat < 1.0, "tau {}", sel.tau_hat);
    assert!(sel
        .per_permutation_maxima
        .iter()
        .all(|m| m.is_finite() && *m >= 0.0));
}

#[test]
fn rejects_bad_inputs() {
    let y = Signal::new(vec![1.0; 12]).unwrap();
    assert!(select_tau(
        &y,
        &FusedFixed { lambda: 1.0 },
        TauConfig::new(3, 0, 0.5, 0)
    )
    .is_err());
    assert!(select_tau(
        &y,
        &FusedFixed { lambda: 1.0 },
        TauConfig::new(3, 2, 0.0, 0)
    )
    .is_err());
}
