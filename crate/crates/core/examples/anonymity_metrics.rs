//! Selection balance, AS-level exposure and time to first compromise for
//! vanilla selection over a month of sticky-guard traffic.

use torsellab::anonmetrics::{
    gini, selection_counts, time_to_first_compromise, uniformity_degree, vulnerable_rate,
    CountBasis, GuardPolicy, PathSimulator, TimelineEvent, UserModel,
};
use torsellab::netmodel::generate_network;
use torsellab::pathsel::{Algorithm, Selector};
use torsellab::NetworkConfig;

const WATCH: [u32; 2] = [3356, 1299];

fn main() -> torsellab::Result<()> {
    let net = generate_network(&NetworkConfig::new(100, 250, 20, 42))?;
    let sel = Selector::new(&net, Algorithm::Vanilla, None)?;
    let ps = PathSimulator::new(&sel, UserModel::Destinations(5), GuardPolicy::Sticky, 42)?;
    let (days, per_day) = (30, 6);
    let timeline = ps.timeline(days * per_day, 2)?;
    let paths: Vec<_> = timeline.iter().map(|(_, p)| *p).collect();

    let circuits: Vec<_> = paths.iter().map(|p| p.circuit).collect();
    let counts = selection_counts(&net, &circuits, CountBasis::Relays)?;
    println!(
        "gini {:.3}, uniformity {:.3}",
        gini(&counts)?,
        uniformity_degree(&counts)?
    );

    let v = vulnerable_rate(&net, &paths, &WATCH)?;
    println!(
        "vulnerable streams: median client {:.3}, overall {:.3}",
        v.median, v.overall
    );

    let events: Vec<TimelineEvent> = timeline
        .iter()
        .map(|(epoch, p)| {
            Ok(TimelineEvent {
                epoch: *epoch,
                client: p.client,
                vulnerable: torsellab::anonmetrics::path_is_vulnerable(&net, p, &WATCH)?,
            })
        })
        .collect::<torsellab::Result<_>>()?;
    let t = time_to_first_compromise(&events, per_day);
    println!(
        "TTFC median {:?} days, {:.3} of clients never compromised",
        t.median_days, t.censored
    );
    for (day, frac) in t.cdf.iter().take(5) {
        println!("  day {day}: {frac:.3}");
    }
    Ok(())
}
