use std::f64::consts::PI;

use nyfr_web::{lag_profile, parse_los, phase_trace, recover_pulses};

#[test]
fn los_need_complete_pairs() {
    assert!(parse_los(&[]).is_err());
    assert!(parse_los(&[1.0, 10.0, 3.0]).is_err());
    assert!(parse_los(&[1.0, -10.0]).is_err());
    let los = parse_los(&[1.0, 10.0, 30.0, 5.0]).unwrap();
    assert_eq!(los[1].f_theta_hz, 5e6);
}

#[test]
fn phase_trace_is_a_sinusoid() {
    let y = phase_trace(30.0, 10.0, 400).unwrap();
    for (k, v) in y.iter().enumerate() {
        let t = k as f64 * 0.5e-9;
        assert!((v - 30.0 * (2.0 * PI * 10e6 * t).sin()).abs() < 1e-9);
    }
}

#[test]
fn lag_profile_summary() {
    let p = lag_profile(&[1.0, 5.0, 10.0, 10.0, 50.0, 30.0]).unwrap();
    assert_eq!(p.len(), 3199 + 3);
    let (profile, tail) = p.split_at(3199);
    let max = profile.iter().cloned().fold(0.0, f64::max);
    assert_eq!(tail[0], max);
    assert!(tail[0] < 0.2);
    assert!(tail[1] >= 5.0);
    // single weak LO: zone lags dominate
    let q = lag_profile(&[1.0, 5.0]).unwrap();
    assert!(q[799] > 0.7);
}

#[test]
fn noiseless_pulses_recover() {
    let r = recover_pulses(
        &[9.3, 13.1],
        200.0,
        f64::INFINITY,
        &[1.0, 10.0, 30.0, 10.0, 30.0, 30.0],
        8,
        1,
    )
    .unwrap();
    assert!(r.pcc() > 0.99, "{r:?}");
    assert_eq!(r.hit_rate(), 1.0);
    assert_eq!(r.truth().len(), 3200);
    assert!(recover_pulses(&[19.0], 100.0, 0.0, &[1.0, 10.0], 4, 1).is_err());
}
