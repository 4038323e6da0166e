//! Parses a listening-event TSV (plain or gzipped) and prints per-user sizes.
//!
//! ```text
//! cargo run --example ingest_tsv -- path/to/listening-events.tsv
//! ```
//! Without an argument a small inline log is used. Malformed lines are
//! skipped and counted.

use std::io::Cursor;

use artistpref::ingest::{
    build_user_histories, load_events, load_events_file, ColumnSchema, ErrorPolicy,
};

const SAMPLE: &str = "\
31435\t2\t4\t4\t1385212885
31435\t7\t11\t35\t1385213124
31435\t2\t4\t5\t1385213398
5561\t7\t11\t35\t1385200000
5561\tbroken line
";

fn main() -> artistpref::Result<()> {
    let schema = ColumnSchema::default();
    let loaded = match std::env::args().nth(1) {
        Some(path) => load_events_file(path.as_ref(), &schema, ErrorPolicy::SkipAndCount)?,
        None => load_events(Cursor::new(SAMPLE), &schema, ErrorPolicy::SkipAndCount)?,
    };
    let ids = &loaded.dataset.ids;
    println!(
        "{} events, {} users, {} artists, {} skipped",
        loaded.dataset.log.len(),
        ids.users.len(),
        ids.artists.len(),
        loaded.skipped
    );
    for h in build_user_histories(&loaded.dataset.log).iter().take(10) {
        println!(
            "user {}: {} events, {} artists, latest {}",
            ids.user_key(h.user),
            h.len(),
            h.distinct_artists(),
            h.latest().unwrap_or_default()
        );
    }
    Ok(())
}
