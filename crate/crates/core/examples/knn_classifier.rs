//! k-nearest-neighbour classification on two Gaussian blobs.

use rand::Rng;
use rand_distr::StandardNormal;
use torsellab::learn::Knn;
use torsellab::seed;

fn main() -> torsellab::Result<()> {
    let mut rng = seed::rng(7, &[]);
    let mut blob = |cx: f64, cy: f64, n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                let dx: f64 = rng.sample(StandardNormal);
                let dy: f64 = rng.sample(StandardNormal);
                vec![cx + dx, cy + 100.0 * dy]
            })
            .collect()
    };
    // The second feature has a much larger scale; fitting z-scores it.
    let mut x = blob(0.0, 0.0, 200);
    x.extend(blob(3.0, 0.0, 200));
    let labels: Vec<u64> = (0..400).map(|i| (i >= 200) as u64).collect();

    let knn = Knn::fit(&x, &labels)?;
    for k in [1, 5, 15] {
        let queries = blob(0.0, 0.0, 100).into_iter().map(|q| (q, 0));
        let queries = queries.chain(blob(3.0, 0.0, 100).into_iter().map(|q| (q, 1)));
        let mut hits = 0;
        for (q, want) in queries {
            hits += (knn.predict(&q, k)? == want) as usize;
        }
        println!("k={k:>2}: accuracy {:.3}", hits as f64 / 200.0);
    }
    Ok(())
}
