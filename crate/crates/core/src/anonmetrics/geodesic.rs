//! Ellipsoidal distances between relays.

use serde::{Deserialize, Serialize};

use crate::netmodel::{haversine_km, Coords, NetworkModel};
use crate::pathsel::Circuit;
use crate::Result;

/// WGS-84 semi-major axis, metres.
pub const WGS84_A: f64 = 6_378_137.0;
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;

const TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub km: f64,
    /// Set when the iteration failed to converge and `km` is a haversine
    /// great-circle distance instead.
    pub fallback: bool,
}

/// Vincenty's inverse formula on the WGS-84 ellipsoid.
pub fn vincenty(p: Coords, q: Coords) -> Distance {
    if p == q {
        return Distance {
            km: 0.0,
            fallback: false,
        };
    }
    let fallback = Distance {
        km: haversine_km(p, q),
        fallback: true,
    };
    let (a, f) = (WGS84_A, WGS84_F);
    let b = a * (1.0 - f);
    let mut dlon = q.lon - p.lon;
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    let l = dlon.to_radians();
    let u1 = ((1.0 - f) * p.lat.to_radians().tan()).atan();
    let u2 = ((1.0 - f) * q.lat.to_radians().tan()).atan();
    let (sin_u1, cos_u1) = u1.sin_cos();
    let (sin_u2, cos_u2) = u2.sin_cos();

    let mut lambda = l;
    for _ in 0..MAX_ITERATIONS {
        let (sin_l, cos_l) = lambda.sin_cos();
        let sin_sigma =
            ((cos_u2 * sin_l).powi(2) + (cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_l).powi(2)).sqrt();
        if sin_sigma == 0.0 {
            // Distinct points with a vanishing chord only happen antipodally.
            return fallback;
        }
        let cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_l;
        let sigma = sin_sigma.atan2(cos_sigma);
        let sin_alpha = cos_u1 * cos_u2 * sin_l / sin_sigma;
        let cos2_alpha = 1.0 - sin_alpha * sin_alpha;
        let cos_2sm = if cos2_alpha == 0.0 {
            0.0
        } else {
            cos_sigma - 2.0 * sin_u1 * sin_u2 / cos2_alpha
        };
        let c = f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha));
        let prev = lambda;
        lambda = l
            + (1.0 - c)
                * f
                * sin_alpha
                * (sigma
                    + c * sin_sigma * (cos_2sm + c * cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)));
        if !lambda.is_finite() || lambda.abs() > std::f64::consts::PI {
            return fallback;
        }
        if (lambda - prev).abs() < TOLERANCE {
            let u_sq = cos2_alpha * (a * a - b * b) / (b * b);
            let big_a =
                1.0 + u_sq / 16384.0 * (4096.0 + u_sq * (-768.0 + u_sq * (320.0 - 175.0 * u_sq)));
            let big_b = u_sq / 1024.0 * (256.0 + u_sq * (-128.0 + u_sq * (74.0 - 47.0 * u_sq)));
            let delta_sigma = big_b
                * sin_sigma
                * (cos_2sm
                    + big_b / 4.0
                        * (cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)
                            - big_b / 6.0
                                * cos_2sm
                                * (-3.0 + 4.0 * sin_sigma * sin_sigma)
                                * (-3.0 + 4.0 * cos_2sm * cos_2sm)));
            return Distance {
                km: b * big_a * (sigma - delta_sigma) / 1000.0,
                fallback: false,
            };
        }
    }
    fallback
}

pub fn vincenty_km(p: Coords, q: Coords) -> f64 {
    vincenty(p, q).km
}

/// Guard-to-middle plus middle-to-exit distance.
pub fn circuit_length_km(net: &NetworkModel, circuit: &Circuit) -> Result<f64> {
    let g = net.relay(circuit.guard)?.coords();
    let m = net.relay(circuit.middle)?.coords();
    let e = net.relay(circuit.exit)?.coords();
    Ok(vincenty_km(g, m) + vincenty_km(m, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use geographiclib_rs::{Geodesic, InverseGeodesic};
    use proptest::prelude::*;
    use rand::Rng as _;

    fn oracle_km(p: Coords, q: Coords) -> f64 {
        let s12: f64 = Geodesic::wgs84().inverse(p.lat, p.lon, q.lat, q.lon);
        s12 / 1000.0
    }

    #[test]
    fn coincident_points() {
        let p = Coords::new(52.52, 13.405);
        assert_eq!(
            vincenty(p, p),
            Distance {
                km: 0.0,
                fallback: false
            }
        );
    }

    #[test]
    fn equator_degree() {
        let d = vincenty(Coords::new(0.0, 0.0), Coords::new(0.0, 1.0));
        assert!(!d.fallback);
        assert!((d.km - oracle_km(Coords::new(0.0, 0.0), Coords::new(0.0, 1.0))).abs() < 1e-3);
        // One degree of longitude on the equator is a * pi / 180.
        assert!((d.km - WGS84_A * std::f64::consts::PI / 180.0 / 1000.0).abs() < 1e-6);
    }

    #[test]
    fn random_pairs_match_oracle() {
        let mut rng = seed::rng(2024, &[]);
        for _ in 0..100 {
            let p = Coords::new(rng.gen_range(-89.0..89.0), rng.gen_range(-179.9..180.0));
            let q = Coords::new(rng.gen_range(-89.0..89.0), rng.gen_range(-179.9..180.0));
            let d = vincenty(p, q);
            assert!(!d.fallback, "{p:?} {q:?}");
            assert!((d.km - oracle_km(p, q)).abs() < 1e-3, "{p:?} {q:?}");
        }
    }

    #[test]
    fn antipodes_fall_back() {
        for (p, q) in [
            (Coords::new(0.0, 0.0), Coords::new(0.0, 180.0)),
            (Coords::new(0.0, 0.0), Coords::new(0.5, 179.7)),
            (Coords::new(30.0, 10.0), Coords::new(-30.0, -170.0)),
        ] {
            let d = vincenty(p, q);
            assert!(d.fallback, "{p:?} {q:?}");
            assert!((d.km - haversine_km(p, q)).abs() < 1e-9);
        }
    }

    #[test]
    fn collocated_guard_and_middle() {
        let net =
            crate::netmodel::generate_network(&crate::NetworkConfig::new(10, 10, 2, 3)).unwrap();
        let mut net = net;
        let (lat, lon) = (net.relays[1].lat, net.relays[1].lon);
        net.relays[0].lat = lat;
        net.relays[0].lon = lon;
        let c = Circuit::new(net.relays[0].id, net.relays[1].id, net.relays[2].id);
        let len = circuit_length_km(&net, &c).unwrap();
        assert_eq!(
            len,
            vincenty_km(net.relays[1].coords(), net.relays[2].coords())
        );
    }

    proptest! {
        #[test]
        fn symmetric_and_nonnegative(
            a in -80.0f64..80.0, b in -179.0f64..179.0,
            c in -80.0f64..80.0, d in -179.0f64..179.0,
        ) {
            let p = Coords::new(a, b);
            let q = Coords::new(c, d);
            let pq = vincenty(p, q);
            let qp = vincenty(q, p);
            prop_assert!(pq.km >= 0.0);
            prop_assert!((pq.km - qp.km).abs() < 1e-6);
            if p != q && !pq.fallback {
                prop_assert!(pq.km > 0.0);
            }
        }
    }
}
