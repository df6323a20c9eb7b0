//! DeNASA guard and exit filtering against the suspect tier-1 ASes.

use torsellab::netmodel::generate_network;
use torsellab::pathsel::{denasa_g_select, e_select_survivors, suspect_fraction, ConsensusView};
use torsellab::NetworkConfig;

fn main() -> torsellab::Result<()> {
    let net = generate_network(&NetworkConfig::new(100, 50, 20, 42))?;
    let view = ConsensusView::new(&net)?;
    let client = &net.clients[0];
    let dests: Vec<u32> = net.destinations[..5].iter().map(|d| d.asn).collect();
    println!("client AS {} with destinations {dests:?}", client.asn);

    for n in [2, 4, 8] {
        let kept = denasa_g_select(&net, &view.guards, client.id, client.asn, n)?;
        println!(
            "g-select avoiding {n} suspects keeps {} of {} guards",
            kept.len(),
            view.guards.len()
        );
    }
    for tau in [0.1, 0.2, 0.3, 1.0] {
        let kept = e_select_survivors(&net, &view.exits, &dests, tau)?;
        println!(
            "e-select tau {tau}: {} of {} exits survive",
            kept.len(),
            view.exits.len()
        );
    }
    let exit = net.relay(view.exits.ids()[0])?;
    println!(
        "exit {} in AS {}: {:.2} of its destination paths cross a suspect",
        exit.id,
        exit.asn,
        suspect_fraction(&net.topology, exit.asn, &dests)?
    );
    Ok(())
}
