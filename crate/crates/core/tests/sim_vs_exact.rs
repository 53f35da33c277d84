use percodyn_core::dyn_sim::{monte_carlo, simulate_timeline, timeline_stats, SimConfig};
use percodyn_core::exact::influence_table;
use percodyn_core::TreeProfile;

#[test]
fn inhomogeneous_profile_flip_identity() {
    let prof = TreeProfile::new(vec![3, 1, 2, 2], vec![0.45, 0.7, 0.55, 0.6]).unwrap();
    let exact = influence_table(&prof, 4).unwrap();
    let mc = monte_carlo(&prof, &SimConfig::new(4, 20_000, 5)).unwrap();
    assert!(mc.flips.within(exact.flip_intensity, 4.0), "{:?} vs {}", mc.flips, exact.flip_intensity);
    assert!(mc.occupied_fraction.within(exact.survival, 4.0));
    // opening and closing flips alternate, so their means agree to within one
    assert!((mc.opening_flips.mean - mc.closing_flips.mean).abs() <= 1.0);
}

#[test]
fn longer_horizon_scales_flips() {
    let prof = TreeProfile::homogeneous(2, 0.55, 5).unwrap();
    let exact = influence_table(&prof, 5).unwrap();
    let config = SimConfig { horizon: 3.0, ..SimConfig::new(5, 5_000, 9) };
    let mc = monte_carlo(&prof, &config).unwrap();
    assert!(mc.flips.within(3.0 * exact.flip_intensity, 4.0), "{:?}", mc.flips);
}

#[test]
fn recorded_timeline_is_consistent() {
    let prof = TreeProfile::homogeneous(2, 0.5, 6).unwrap();
    let config = SimConfig { record_events: true, ..SimConfig::new(6, 1, 3) };
    let tl = simulate_timeline(&prof, &config, 0).unwrap();
    let stats = timeline_stats(&tl);
    let pivotal = tl.events.iter().filter(|e| e.pivotal).count() as u64;
    assert_eq!(pivotal, stats.flips);
    assert!(tl.events.windows(2).all(|w| w[0].time <= w[1].time));
    assert!(tl.events.iter().all(|e| e.old_state != e.new_state && e.time <= 1.0));
    let again = simulate_timeline(&prof, &config, 0).unwrap();
    assert_eq!(tl, again);
}
