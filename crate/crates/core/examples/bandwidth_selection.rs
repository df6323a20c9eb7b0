//! The SB family: how the skew parameter shifts draws toward the fastest
//! relays, next to CAR's congestion estimate and switch rule.

use rand::Rng;
use torsellab::netmodel::generate_network;
use torsellab::pathsel::{
    car_pick, car_should_switch, rank_by_bandwidth, sb_select, CarState, ConsensusView,
};
use torsellab::NetworkConfig;

fn main() -> torsellab::Result<()> {
    let net = generate_network(&NetworkConfig::new(100, 10, 5, 42))?;
    let view = ConsensusView::new(&net)?;
    let ranked = rank_by_bandwidth(&net, view.exits.ids())?;
    let n = ranked.len();
    let mut rng = torsellab::seed::rng(3, &[]);
    for s in [1.0, 5.0, 15.0] {
        let mut top = 0;
        for _ in 0..10_000 {
            let id = sb_select(&ranked, s, &mut rng)?;
            top += (ranked.iter().position(|&r| r == id).unwrap() < n / 10) as usize;
        }
        println!(
            "SB s={s:>4}: {:.1}% of draws hit the top decile of {n} exits",
            top as f64 / 100.0
        );
    }

    // A circuit that degrades halfway through; CAR abandons it once the mean
    // congestion over the last few probes passes the threshold.
    let mut state = CarState::default();
    for step in 0..12 {
        let base = if step < 5 { 0.10 } else { 0.90 };
        let rtt = base + 0.01 * rng.gen::<f64>();
        let c = state.observe(rtt);
        let switch = car_should_switch(&state);
        println!("rtt {rtt:.3}s congestion {c:.3}s switch {switch}");
        if switch {
            break;
        }
    }
    let probes = vec![vec![0.2, 0.5], vec![0.3, 0.31], vec![0.1, 0.9]];
    println!(
        "car_pick among three probed candidates: {}",
        car_pick(&probes)?
    );
    Ok(())
}
