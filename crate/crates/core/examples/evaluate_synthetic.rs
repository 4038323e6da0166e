//! Generates a synthetic log, groups users by mainstreaminess and prints
//! recall@k and precision@k for every recommender and group.
//!
//! ```text
//! cargo run --release --example evaluate_synthetic [seed]
//! ```

use artistpref::ingest::build_user_histories;
use artistpref::pipeline::{evaluate_groups, profile, split_eligible};
use artistpref::recommend::{Algorithm, BllParams, CfParams};
use artistpref::synth::{generate_synthetic, SynthConfig};

fn main() -> artistpref::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(42);
    let data = generate_synthetic(&SynthConfig {
        seed,
        ..SynthConfig::default()
    })?;
    let histories = build_user_histories(&data.log);

    let groups = profile(&histories, 1000, 2)?.groups;
    let split = split_eligible(&histories, 2, 0.01)?;
    let reports = evaluate_groups(
        &split,
        &groups,
        &Algorithm::ALL,
        BllParams::default(),
        CfParams::default(),
        20,
    )?;

    println!(
        "{} events, groups of {}",
        data.log.len(),
        groups.group_size()
    );
    println!(
        "{:<6} {:<7} {:>8} {:>8} {:>8} {:>8}",
        "algo", "group", "R@1", "R@10", "P@1", "P@10"
    );
    for r in &reports {
        let (p1, p10) = (r.points[0], r.points[9]);
        println!(
            "{:<6} {:<7} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.algorithm, r.group, p1.recall, p10.recall, p1.precision, p10.precision
        );
    }
    Ok(())
}
