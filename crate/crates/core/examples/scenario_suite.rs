// A reduced suite: every reference scenario, a few iterations each, with
// the tables written to a temporary directory.

use flbra::sim::{emit_outputs, format_summary, run_suite};
use flbra::RunConfig;

pub fn run_example() -> flbra::Result<()> {
    let out = std::env::temp_dir().join(format!("flbra-suite-{}", std::process::id()));
    let cfg = RunConfig {
        iterations: 5,
        output_dir: out.clone(),
        trace: true,
        ..RunConfig::default()
    };
    let runs = run_suite(&cfg)?;
    let results: Vec<_> = runs.iter().map(|r| r.result.clone()).collect();
    print!("{}", format_summary(&results));
    for path in emit_outputs(&runs, &cfg)? {
        println!("wrote {}", path.display());
    }
    let _ = std::fs::remove_dir_all(out);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().expect("scenario suite example");
}
