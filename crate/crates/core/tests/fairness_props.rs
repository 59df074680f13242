mod common;

use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sdb_matches_exhaustive_search(inst in sdb_instance()) {
        check_sdb_oracle(&inst)?;
    }

    #[test]
    fn shifting_never_touches_the_other_group(inst in sdb_instance(), lambda in 0.0f64..2.0) {
        check_shift_locality(&inst, lambda)?;
    }

    #[test]
    fn protected_positives_grow_with_the_shift(inst in sdb_instance(), lambdas in prop::collection::vec(0.0f64..1.5, 2..8)) {
        check_shift_monotone(&inst, &lambdas)?;
    }
}

#[test]
fn random_relabeling_is_unbiased_in_expectation() {
    let mean = rr_mean_bias(1000);
    assert!(mean.abs() <= 0.005, "mean bias {mean}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn fwl_without_bias_weight_is_adaboost((rows, rounds) in fwl_case()) {
        check_fwl_reduces_to_adaboost(&rows, rounds)?;
    }
}
