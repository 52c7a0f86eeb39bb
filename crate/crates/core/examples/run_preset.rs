//! Runs a preset through the experiment runner, shortened, and re-runs it
//! from its manifest.

use powergame::experiment::{preset, run_config, run_experiment, MANIFEST_FILE};

fn main() -> powergame::error::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "fig2".into());
    let mut cfg = preset(&name, Some(1))?;
    cfg.engine.horizon = Some(2_000);
    cfg.engine.replicates = Some(4);

    let out = std::env::temp_dir().join(format!("powergame-{name}"));
    let first = run_config(&cfg, std::path::Path::new("."), &out)?;
    for a in &first.manifest.artifacts {
        println!("{}  {}", a.sha256, a.file);
        print!("{}", std::fs::read_to_string(out.join(&a.file))?);
    }
    println!("defaulted: {:?}", first.manifest.defaulted);

    let again = run_experiment(&out.join(MANIFEST_FILE), None, Some(&out.join("rerun")))?;
    println!("rerun identical: {}", again.manifest.artifacts == first.manifest.artifacts);
    Ok(())
}
