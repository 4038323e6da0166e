//! The four baselines next to BLL for one user of a synthetic log:
//! global popularity, personal play counts, personal recency and
//! user-based collaborative filtering.

use artistpref::ingest::{build_user_histories, UserId};
use artistpref::recommend::{build_recommender, Algorithm, BllParams, CfParams, TrainingSet};
use artistpref::synth::{generate_synthetic, SynthConfig};

fn main() -> artistpref::Result<()> {
    let data = generate_synthetic(&SynthConfig {
        n_users: 50,
        n_artists: 300,
        ..SynthConfig::default()
    })?;
    let train = TrainingSet::from_histories(build_user_histories(&data.log));
    let user = UserId(0);
    for algo in Algorithm::ALL {
        let rec = build_recommender(algo, &train, BllParams::default(), CfParams::default());
        let list = rec.recommend(user, 8)?;
        let names: Vec<&str> = list.artists().map(|a| data.ids.artist_key(a)).collect();
        println!("{:<5} {}", algo.name(), names.join(" "));
    }
    Ok(())
}
