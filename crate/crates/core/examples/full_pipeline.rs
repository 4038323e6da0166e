//! Runs every stage on a synthetic log and lists the files written.

use std::fs;

use artistpref::synth::{generate_synthetic, SynthConfig};
use artistpref::{run_pipeline, RunConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("artistpref-example");
    fs::create_dir_all(&dir)?;
    let events = dir.join("events.tsv");
    let data = generate_synthetic(&SynthConfig {
        n_users: 120,
        ..SynthConfig::default()
    })?;
    data.write_tsv(fs::File::create(&events)?)?;

    let config = RunConfig {
        events_path: Some(events),
        output_dir: dir.join("out"),
        group_size: 40,
        k_max: 10,
        plot_data: true,
        ..RunConfig::default()
    };
    let summary = run_pipeline(&config)?;
    for (group, stats) in &summary.stats {
        println!(
            "{group}: {} users, {} events",
            stats.users, stats.listening_events
        );
    }
    for file in &summary.files {
        println!("{}", file.display());
    }
    print!(
        "{}",
        fs::read_to_string(summary.output_dir.join("results.csv"))?
            .lines()
            .take(4)
            .collect::<Vec<_>>()
            .join("\n")
    );
    println!();
    Ok(())
}
