// Three sensors in a line where the one hearing the sink beacon best cannot
// reach it back. Greedy RSSI forwarding walks into that local maximum;
// the fuzzy-cost routes go around it.

use flbra::metrics::{f_parameter, success_rate};
use flbra::protocols::{flbra_route, flbra_setup, rbf_route};
use flbra::{FuzzyConfig, FuzzyEngine, LinkQuality, NetworkGraph, NodeId};

fn link(rssi: f64, per: f64) -> LinkQuality {
    LinkQuality::new(rssi, 1.0, per, -90.0)
}

pub fn run_example() -> flbra::Result<()> {
    let positions = vec![(0.0, 0.0), (3.0, 0.0), (6.0, 0.0), (9.0, 0.0)];
    let mut g = NetworkGraph::new(positions, NodeId(0))?;
    for (s, d, q) in [
        (0, 1, link(-50.0, 0.02)),
        (0, 2, link(-60.0, 0.02)),
        (0, 3, link(-75.0, 0.02)),
        // node 1's transmitter cannot reach the sink
        (1, 2, link(-55.0, 0.02)),
        (2, 0, link(-60.0, 0.05)),
        (2, 1, link(-55.0, 0.02)),
        (3, 1, link(-62.0, 0.02)),
        (3, 2, link(-58.0, 0.02)),
    ] {
        g.set_link(NodeId(s), NodeId(d), q);
    }

    let engine = FuzzyEngine::new(&FuzzyConfig::default())?;
    let setup = flbra_setup(&g, &engine, g.node_count())?;
    let mut s_flbra = Vec::new();
    let mut s_rbf = Vec::new();
    for n in g.sensors() {
        let f = flbra_route(&setup.table, &g, n)?;
        let r = rbf_route(&g, n)?;
        println!("node {n}: flbra {:?} s={:.3}", f.path, success_rate(&f));
        println!(
            "        rbf   {:?} s={:.3}{}",
            r.path,
            success_rate(&r),
            if r.is_void() { " (void)" } else { "" }
        );
        s_flbra.push(success_rate(&f));
        s_rbf.push(success_rate(&r));
    }
    println!("F = {:.4}", f_parameter(&s_flbra, &s_rbf)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("rbf vs flbra example");
}
