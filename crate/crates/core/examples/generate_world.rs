//! Generate a synthetic world, inspect it, and write it to disk.
//!
//! `cargo run --example generate_world -- [out_dir]`

use torsellab::netmodel::generate_network;
use torsellab::NetworkConfig;

fn main() -> torsellab::Result<()> {
    let net = generate_network(&NetworkConfig::new(100, 250, 20, 42))?;
    let guards = net.relays.iter().filter(|r| r.is_guard).count();
    let exits = net.relays.iter().filter(|r| r.is_exit).count();
    let total: u64 = net.relays.iter().map(|r| r.bandwidth).sum();
    println!(
        "{} relays ({guards} guard-flagged, {exits} exit-flagged), {} clients, {} destinations",
        net.relays.len(),
        net.clients.len(),
        net.destinations.len()
    );
    println!("total consensus bandwidth {total}");

    let client = &net.clients[0];
    let dest = &net.destinations[0];
    let path = net.topology.as_path(client.asn, dest.asn)?;
    println!("AS path {} -> {}: {path:?}", client.asn, dest.asn);
    println!("suspect tier-1s: {:?}", net.topology.suspects());

    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/world".into());
    net.save_dir(out.as_ref())?;
    println!("wrote {out}");
    Ok(())
}
