//! Run the congestion simulator with vanilla selection and summarise it.

use torsellab::netmodel::generate_network;
use torsellab::pathsel::{Algorithm, Selector};
use torsellab::simcore::{relay_utilization, run_epochs, SimParams, Workload};
use torsellab::stats::{median, quantile};
use torsellab::NetworkConfig;

fn main() -> torsellab::Result<()> {
    let net = generate_network(&NetworkConfig::new(100, 250, 20, 42))?;
    let sel = Selector::new(&net, Algorithm::Vanilla, None)?;
    let out = run_epochs(&sel, &Workload::default(), &SimParams::default(), 42, 42)?;

    let ttlb: Vec<f64> = out.records.iter().map(|r| r.ttlb_s).collect();
    println!("{} streams", ttlb.len());
    println!("median TTLB {:.3}s", median(&ttlb).unwrap());
    println!("p90 TTLB    {:.3}s", quantile(&ttlb, 0.9).unwrap());

    let u = relay_utilization(&net, &out.records)?;
    println!(
        "relays used {:.2}, never chosen {:.2}",
        u.frac_used, u.frac_avoided
    );
    let first = &out.records[0];
    println!(
        "first stream: {:?} in {:.3}s",
        first.circuit.relays(),
        first.ttlb_s
    );
    Ok(())
}
