//! Base-level activation: frequency and recency combined into one score.
//!
//! An artist played often long ago competes with one played once just now;
//! the decay exponent `d` sets how fast old listens fade.

use artistpref::ingest::{ArtistId, UserHistory, UserId};
use artistpref::recommend::{
    bll_activation, recommend_bll, recommend_pop, recommend_time, BllParams,
};

fn main() -> artistpref::Result<()> {
    println!(
        "one listen at the reference time: {:.4}",
        bll_activation(&[10], 10, 0.5)?
    );
    println!(
        "listens 1 and 0 steps back:       {:.4}",
        bll_activation(&[9, 10], 10, 0.5)?
    );

    // Artist 0: ten listens a long time ago. Artist 1: three recent ones.
    // Artist 2: a single listen just before the reference time.
    let mut events: Vec<(ArtistId, u64)> = (0..10).map(|t| (ArtistId(0), t)).collect();
    events.extend([
        (ArtistId(1), 900),
        (ArtistId(1), 950),
        (ArtistId(1), 990),
        (ArtistId(2), 999),
    ]);
    let history = UserHistory::new(UserId(0), events);

    for d in [0.1, 0.5, 1.0, 2.0] {
        let list = recommend_bll(&history, &BllParams::with_decay(d), 3)?;
        let ranked: Vec<String> = list
            .ranked
            .iter()
            .map(|s| format!("{}={:.3}", s.artist, s.score))
            .collect();
        println!("d={d:<4} {}", ranked.join("  "));
    }
    for (name, list) in [
        ("pop", recommend_pop(&history, 3)?),
        ("time", recommend_time(&history, 3)?),
    ] {
        let ranked: Vec<String> = list.artists().map(|a| a.to_string()).collect();
        println!("{name:<6} {}", ranked.join("  "));
    }
    Ok(())
}
