//! Train the random-forest circuit classifier and sweep the TTLB threshold.

use torsellab::learn::{
    evaluate, label_samples, median_ttlb, quantile_grid, sweep_tau, train_labeled, ForestParams,
};
use torsellab::netmodel::generate_network;
use torsellab::pathsel::{Algorithm, Selector};
use torsellab::simcore::{run_epochs, SimParams, Workload};
use torsellab::NetworkConfig;

fn main() -> torsellab::Result<()> {
    let net = generate_network(&NetworkConfig::new(100, 250, 20, 42))?;
    let sel = Selector::new(&net, Algorithm::Vanilla, None)?;
    let (w, p) = (Workload::default(), SimParams::default());
    let train = run_epochs(&sel, &w, &p, 1042, 42)?.records;
    let test = run_epochs(&sel, &w, &p, 2042, 42)?.records;

    let tau = median_ttlb(&train)?;
    let tr = label_samples(&net, &train, tau)?;
    let te = label_samples(&net, &test, tau)?;
    let params = ForestParams::default();
    let model = train_labeled(&tr, &params, 42)?;
    let r = evaluate(&model, &te)?;
    println!(
        "tau {tau:.3}s: accuracy {:.3} (majority {:.3}), fpr {:.3}, fnr {:.3}",
        r.accuracy,
        r.majority_baseline(),
        r.fpr,
        r.fnr
    );

    let ttlb: Vec<f64> = tr.samples.iter().map(|s| s.ttlb_s).collect();
    let grid = quantile_grid(&ttlb, 8)?;
    println!("tau,accuracy,fpr,fnr");
    for pt in sweep_tau(&tr, &te, &grid, &params, 42)? {
        println!(
            "{:.3},{:.3},{:.3},{:.3}",
            pt.tau, pt.report.accuracy, pt.report.fpr, pt.report.fnr
        );
    }
    Ok(())
}
