// Builds the smallest reference deployment, runs the FLBRA setup phase and
// prints each sensor's route to the sink.

use flbra::protocols::flbra_setup;
use flbra::sim::{iteration_graph, RunConfig};
use flbra::FuzzyEngine;

pub fn run_example() -> flbra::Result<()> {
    let cfg = RunConfig::default();
    let engine = FuzzyEngine::new(&cfg.fuzzy)?;
    let g = iteration_graph(&cfg, 0, 0)?;
    println!(
        "{} nodes, {} reachable links",
        g.node_count(),
        g.link_count()
    );

    let setup = flbra_setup(&g, &engine, g.node_count())?;
    println!("setup finished in {} round(s)", setup.rounds);
    for line in &setup.trace {
        println!("  {line}");
    }
    for n in g.sensors() {
        let path = setup.table.full_path(n).unwrap_or_default();
        let hops: Vec<String> = path.iter().map(|n| n.to_string()).collect();
        println!(
            "node {n} at {:?}: cost {:.4} via {}",
            g.position(n),
            setup.table.path_cost(n).unwrap_or(f64::NAN),
            hops.join(" -> ")
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("grid routing example");
}
