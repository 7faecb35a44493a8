// Scores a handful of links with the default fuzzy system and shows the
// intermediate fuzzification and clip levels.

use flbra::{FuzzyConfig, FuzzyEngine};

pub fn run_example() -> flbra::Result<()> {
    let engine = FuzzyEngine::new(&FuzzyConfig::default())?;
    let links = [
        ("strong, steady, clean", -35.0, 0.5, 0.01),
        ("average, noisy", -58.0, 6.0, 0.04),
        ("weak, steady", -80.0, 0.5, 0.02),
        ("strong but lossy", -35.0, 0.5, 0.4),
    ];
    println!(
        "{:<24} {:>18} {:>18} {:>18} {:>7}",
        "link", "rssi", "stddev", "per", "cost"
    );
    for (name, rssi, sd, per) in links {
        let inputs = engine.fuzzify_inputs(rssi, sd, per)?;
        let aggregated = engine.infer(&inputs);
        let cost = engine.defuzzify(&aggregated);
        println!(
            "{name:<24} {:>18} {:>18} {:>18} {:>7.4}",
            fmt3(inputs.rssi),
            fmt3(inputs.stddev),
            fmt3(inputs.per),
            cost.value
        );
        println!(
            "{:<24} clip levels low/medium/high = {:?}",
            "",
            aggregated.levels()
        );
    }
    Ok(())
}

fn fmt3(d: [f64; 3]) -> String {
    format!("{:.2}/{:.2}/{:.2}", d[0], d[1], d[2])
}

#[allow(dead_code)]
fn main() {
    run_example().expect("fuzzy link cost example");
}
