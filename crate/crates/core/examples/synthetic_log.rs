//! Writes a seeded synthetic listening log as TSV.
//!
//! ```text
//! cargo run --example synthetic_log -- out.tsv 7
//! ```

use std::fs::File;
use std::io::{self, BufWriter};

use artistpref::synth::{generate_synthetic, SynthConfig};

fn main() -> artistpref::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next();
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(42);
    let config = SynthConfig {
        n_users: 20,
        n_artists: 200,
        events_per_user: 20..=60,
        seed,
        ..SynthConfig::default()
    };
    let data = generate_synthetic(&config)?;
    match path {
        Some(p) => data.write_tsv(BufWriter::new(File::create(&p)?))?,
        None => data.write_tsv(io::stdout().lock())?,
    }
    eprintln!(
        "{} events from {} users",
        data.log.len(),
        data.ids.users.len()
    );
    Ok(())
}
