/// EA threshold in degrees (inclusive).
pub const EDGE_TOLERANCE_DEG: f64 = 45.0;

/// Circular distance between two angles, in `[0, 180]` degrees.
pub fn dae(peak_deg: f64, true_deg: f64) -> f64 {
    (((peak_deg - true_deg + 180.0).rem_euclid(360.0)) - 180.0).abs()
}

/// Whether the peak falls within 45 degrees of the true direction.
pub fn ea(dae_deg: f64) -> bool {
    dae_deg <= EDGE_TOLERANCE_DEG
}

/// Expected DAE when the peak is a uniformly random sector center and the
/// true direction sits on sector 0's center.
pub fn expected_random_dae(k: usize) -> f64 {
    assert!(k > 0, "K must be positive");
    let w = 360.0 / k as f64;
    let total: f64 = (0..k)
        .map(|i| {
            let a = i as f64 * w;
            a.min(360.0 - a)
        })
        .sum();
    total / k as f64
}
