//! Great-circle geometry and the propagation-delay model.

use serde::{Deserialize, Serialize};

/// Mean Earth radius (IUGG), kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;
/// Speed of light in vacuum, km per millisecond.
pub const LIGHT_KM_PER_MS: f64 = 299.792_458;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coords {
    pub lat: f64,
    pub lon: f64,
}

impl Coords {
    pub fn new(lat: f64, lon: f64) -> Self {
        Coords { lat, lon }
    }
}

pub(crate) fn check_coords(lat: f64, lon: f64) -> Result<(), String> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(format!("latitude {lat} outside [-90, 90]"));
    }
    if !(lon > -180.0 && lon <= 180.0) {
        return Err(format!("longitude {lon} outside (-180, 180]"));
    }
    Ok(())
}

pub fn haversine_km(a: Coords, b: Coords) -> f64 {
    if a == b {
        return 0.0;
    }
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.min(1.0).sqrt().asin()
}

/// Round-trip propagation delay in milliseconds over the great-circle
/// distance, with signals travelling at `fiber_factor` times the speed of light.
pub fn geo_rtt_ms(a: Coords, b: Coords, fiber_factor: f64) -> f64 {
    2.0 * haversine_km(a, b) / (LIGHT_KM_PER_MS * fiber_factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Spherical law of cosines, a formulation independent of the haversine.
    fn cosine_law_km(a: Coords, b: Coords) -> f64 {
        let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
        let dl = (b.lon - a.lon).to_radians();
        let c = (p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()).clamp(-1.0, 1.0);
        EARTH_RADIUS_KM * c.acos()
    }

    #[test]
    fn self_rtt_is_zero() {
        let x = Coords::new(52.5, 13.4);
        assert_eq!(geo_rtt_ms(x, x, 0.67), 0.0);
    }

    #[test]
    fn equator_one_degree() {
        let a = Coords::new(0.0, 0.0);
        let b = Coords::new(0.0, 1.0);
        // One degree of arc on the mean sphere.
        let d = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
        let expected = 2.0 * d / (0.67 * LIGHT_KM_PER_MS);
        assert!((geo_rtt_ms(a, b, 0.67) - expected).abs() < 1e-9);
        assert!((haversine_km(a, b) - cosine_law_km(a, b)).abs() < 1e-6);
    }

    fn coords() -> impl Strategy<Value = Coords> {
        (-90.0f64..=90.0, -179.999f64..=180.0).prop_map(|(lat, lon)| Coords::new(lat, lon))
    }

    proptest! {
        #[test]
        fn rtt_symmetric_and_nonnegative(a in coords(), b in coords()) {
            let ab = geo_rtt_ms(a, b, 0.67);
            let ba = geo_rtt_ms(b, a, 0.67);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() < 1e-9);
        }

        #[test]
        fn haversine_matches_cosine_law(a in coords(), b in coords()) {
            // The cosine law loses precision for tiny separations.
            let h = haversine_km(a, b);
            prop_assume!(h > 1.0);
            prop_assert!((h - cosine_law_km(a, b)).abs() < 1e-3);
        }
    }
}
