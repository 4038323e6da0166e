//! Holds out the most recent listens of each user.

use artistpref::ingest::{ArtistId, UserHistory, UserId};
use artistpref::split::{test_size, time_split};

fn main() -> artistpref::Result<()> {
    for n in [2, 50, 100, 250, 1000] {
        println!("{n:>5} events -> {} held out", test_size(n, 0.01));
    }

    let events = (0..300)
        .map(|t| (ArtistId(t % 7), u64::from(t) * 60))
        .collect();
    let history = UserHistory::new(UserId(0), events);
    let split = time_split(&history, 0.01)?;
    let last_train = split.train.last().map(|e| e.1).unwrap_or_default();
    let first_test = split.test.first().map(|e| e.1).unwrap_or_default();
    println!(
        "train {} events (last at {last_train}), test {} events (first at {first_test}), test artists {}",
        split.train.len(),
        split.test.len(),
        split.test_artists().iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
    );
    Ok(())
}
