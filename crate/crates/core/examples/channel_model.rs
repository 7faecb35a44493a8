// Samples link qualities at increasing distance with the default
// log-distance shadowing model.

use flbra::link_model::{rssi_at_distance, sample_link};
use flbra::{PropagationParams, RandomSource};

pub fn run_example() -> flbra::Result<()> {
    let p = PropagationParams::default();
    let src = RandomSource::new(7);
    println!(
        "{:>6} {:>10} {:>10} {:>8} {:>7} {:>9}",
        "d [m]", "expected", "mean", "stddev", "per", "reachable"
    );
    for (i, d) in [1.0, 3.0, 6.0, 12.0, 24.0, 48.0, 96.0]
        .into_iter()
        .enumerate()
    {
        let q = sample_link(&p, d, &src.with_link(i as u64))?;
        println!(
            "{d:>6.1} {:>10.2} {:>10.2} {:>8.2} {:>7.3} {:>9}",
            rssi_at_distance(&p, d)?,
            q.mean_rssi,
            q.rssi_stddev,
            q.per,
            q.reachable
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("channel model example");
}
