//! The CLASI sender-location game for vanilla selection and DeNASA g-select.

use torsellab::anonmetrics::{clasi_game, ClasiParams, GuardPolicy, PathSimulator, UserModel};
use torsellab::netmodel::generate_network;
use torsellab::pathsel::{Algorithm, Selector};
use torsellab::NetworkConfig;

fn main() -> torsellab::Result<()> {
    let net = generate_network(&NetworkConfig::new(100, 250, 20, 42))?;
    let params = ClasiParams {
        n_train: 10_000,
        n_test: 1_000,
        repeats: 5,
        ..Default::default()
    };
    for algo in [Algorithm::Vanilla, Algorithm::g_select(8)] {
        let sel = Selector::new(&net, algo.clone(), None)?;
        let ps = PathSimulator::new(&sel, UserModel::Destinations(5), GuardPolicy::PerPath, 42)?;
        let r = clasi_game(&ps, &params, 42)?;
        let (lo, hi) = r.ci95.unwrap();
        println!(
            "{:<12} accuracy {:.3} baseline {:.3} eps {:.3} [{lo:.3}, {hi:.3}]",
            algo.label(),
            r.accuracy,
            r.baseline,
            r.epsilon_s
        );
    }
    Ok(())
}
