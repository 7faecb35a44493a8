// Lets link qualities wander during the operation phase and reports what the
// periodic network check makes of it.

use flbra::sim::{run_drift, DriftConfig, RunConfig};

pub fn run_example() -> flbra::Result<()> {
    let mut cfg = RunConfig::default();
    for (label, drift) in [
        (
            "no drift",
            DriftConfig {
                checks: 5,
                spec: Default::default(),
            },
        ),
        (
            "jittered",
            DriftConfig {
                checks: 5,
                ..Default::default()
            },
        ),
    ] {
        cfg.drift = Some(drift);
        let report = run_drift(&cfg, 0, 0)?;
        println!(
            "{label}: {} of {} checks faulty",
            report.faults(),
            report.checks.len()
        );
        print!("{}", report.to_csv());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("network drift example");
}
