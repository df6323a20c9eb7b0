//! Vincenty distances between a few cities, and circuit lengths.

use torsellab::anonmetrics::{circuit_length_km, vincenty, GuardPolicy, PathSimulator, UserModel};
use torsellab::netmodel::{generate_network, haversine_km, Coords};
use torsellab::pathsel::{Algorithm, Selector};
use torsellab::NetworkConfig;

fn main() -> torsellab::Result<()> {
    let cities = [
        ("Frankfurt", Coords::new(50.11, 8.68)),
        ("New York", Coords::new(40.71, -74.01)),
        ("Singapore", Coords::new(1.35, 103.82)),
        ("Sao Paulo", Coords::new(-23.55, -46.63)),
    ];
    for (i, (a, p)) in cities.iter().enumerate() {
        for (b, q) in &cities[i + 1..] {
            let d = vincenty(*p, *q);
            println!(
                "{a} - {b}: {:.1} km (sphere {:.1} km)",
                d.km,
                haversine_km(*p, *q)
            );
        }
    }
    let anti = vincenty(Coords::new(0.0, 0.0), Coords::new(0.5, 179.7));
    println!(
        "near-antipodal: {:.1} km, fallback {}",
        anti.km, anti.fallback
    );

    let net = generate_network(&NetworkConfig::new(100, 50, 10, 42))?;
    let sel = Selector::new(&net, Algorithm::Vanilla, None)?;
    let ps = PathSimulator::new(&sel, UserModel::All, GuardPolicy::PerPath, 42)?;
    for p in ps.generate_paths(5)? {
        let c = p.circuit;
        println!("{:?}: {:.0} km", c.relays(), circuit_length_km(&net, &c)?);
    }
    Ok(())
}
