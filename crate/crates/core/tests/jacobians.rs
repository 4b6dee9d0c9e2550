mod common;

#[test]
fn analytic_jacobians_match_central_differences() {
    for (name, err) in common::jacobian_suite(7).unwrap() {
        println!("{name}: {err:e}");
        assert!(err < 1e-5, "{name}: {err:e}");
    }
}
