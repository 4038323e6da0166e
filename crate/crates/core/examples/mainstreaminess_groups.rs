//! Scores users by how closely their artist distribution matches the global
//! one and splits them into LowMS, MedMS and HighMS groups.

use std::collections::BTreeMap;

use artistpref::ingest::build_user_histories;
use artistpref::pipeline::all_group_stats;
use artistpref::profiling::{assign_groups, score_users, sort_scores};
use artistpref::synth::{generate_synthetic, SynthConfig};

fn main() -> artistpref::Result<()> {
    let data = generate_synthetic(&SynthConfig {
        n_users: 90,
        ..SynthConfig::default()
    })?;
    let histories = build_user_histories(&data.log);

    let mut scores = score_users(&histories, 2)?;
    sort_scores(&mut scores);
    let groups = assign_groups(&scores, 30)?;

    let lowest = scores.first().expect("users were generated");
    let highest = scores.last().expect("users were generated");
    println!(
        "lowest  {} {:.4}",
        data.ids.user_key(lowest.user),
        lowest.score
    );
    println!(
        "highest {} {:.4}",
        data.ids.user_key(highest.user),
        highest.score
    );

    let by_user: BTreeMap<_, _> = scores.iter().map(|s| (s.user, s.score)).collect();
    for (group, s) in all_group_stats(&groups, &histories, &by_user)? {
        println!(
            "{group:<7} users {:>3}  artists {:>5}  events {:>6}  artists/user {:>6.1}  mean score {:.4}",
            s.users, s.distinct_artists, s.listening_events, s.avg_artists_per_user, s.avg_mainstreaminess
        );
    }
    Ok(())
}
