//! Asymptotics of the crossing probabilities in box shape: vertical
//! crossings become certain as the box widens and die out as it grows
//! taller, with the horizontal probability rising toward one.

use rwde::cross::{estimate_crossing, CrossSpec};
use rwde::env::Environment;
use rwde::walk::WalkParams;

#[test]
fn vertical_crossing_tends_to_one_in_width() {
    let env = Environment::iid_symmetric();
    let params = WalkParams::with_max_ellipticity(0.1).unwrap();
    let n = 20_000u64;
    let h = 6.0;
    let mut last = 0.0;
    for (i, w) in [2.0, 6.0, 18.0].into_iter().enumerate() {
        let est =
            estimate_crossing(&env, &params, &CrossSpec::v_cross((0.25, 0.0), w, h).unwrap(), n, 3)
                .unwrap();
        assert!(
            est.p_hat + 3.0 * est.std_err() >= last,
            "vertical crossing not increasing at step {i}"
        );
        last = est.p_hat;
    }
    assert!(last > 0.95, "wide box should almost surely cross: {last}");
}

#[test]
fn vertical_crossing_dies_in_height_and_horizontal_saturates() {
    let env = Environment::iid_symmetric();
    let params = WalkParams::with_max_ellipticity(0.1).unwrap();
    let n = 20_000u64;
    let w = 4.0;
    let mut v_last = 1.0;
    let mut h_last = 0.0;
    for h in [4.0, 20.0, 80.0, 160.0] {
        let v =
            estimate_crossing(&env, &params, &CrossSpec::v_cross((0.25, 0.0), w, h).unwrap(), n, 5)
                .unwrap();
        assert!(v.p_hat <= v_last + 3.0 * v.std_err(), "V not decreasing at h = {h}");
        v_last = v.p_hat;
        let hx =
            estimate_crossing(&env, &params, &CrossSpec::h_cross((0.25, 0.0), w, h).unwrap(), n, 6)
                .unwrap();
        assert!(hx.p_hat + 3.0 * hx.std_err() >= h_last, "H not increasing at h = {h}");
        h_last = hx.p_hat;
    }
    assert!(v_last < 0.05, "tall box vertical crossing should vanish: {v_last}");
    assert!(h_last > 0.95, "tall box horizontal crossing should saturate: {h_last}");
}
