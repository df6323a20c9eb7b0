//! Train a classifier on vanilla traffic, then compare Vanilla, PredicTor,
//! CAR, PredicTor+CAR and SB-15 on the same world and workload.

use torsellab::cli::{compare_on, simulate_on, ExperimentConfig, COMPARE_HEADER};
use torsellab::learn::{label_samples, median_ttlb, train_labeled, ForestParams};
use torsellab::netmodel::generate_network;
use torsellab::Algorithm;

fn main() -> torsellab::Result<()> {
    let mut cfg = ExperimentConfig::default();
    let net = generate_network(&cfg.network)?;

    cfg.sim_seed = Some(1042);
    let train = simulate_on(&cfg, &net, &Algorithm::Vanilla, None)?.records;
    let tau = median_ttlb(&train)?;
    let model = train_labeled(
        &label_samples(&net, &train, tau)?,
        &ForestParams::default(),
        42,
    )?;

    cfg.sim_seed = Some(42);
    let algos: Vec<Algorithm> = ["vanilla", "predictor", "car", "predictor_car", "sb-15"]
        .iter()
        .map(|a| a.parse())
        .collect::<torsellab::Result<_>>()?;
    println!("{COMPARE_HEADER}");
    for row in compare_on(&cfg, &net, &algos, Some(&model))? {
        println!("{}", row.csv_line());
    }
    Ok(())
}
