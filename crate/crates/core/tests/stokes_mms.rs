mod common;

use defdom::selftest::observed_order;

#[test]
fn taylor_hood_rates_on_manufactured_flow() {
    let ns = [4, 8, 16];
    let (mut eu, mut ep) = (Vec::new(), Vec::new());
    for n in ns {
        let (u, p) = common::stokes_mms_errors(n).unwrap();
        eu.push(u);
        ep.push(p);
    }
    let h: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
    println!("{eu:?} {ep:?}");
    assert!(observed_order(&h, &eu) > 2.8, "{eu:?}");
    assert!(observed_order(&h, &ep) > 1.8, "{ep:?}");
}
