use std::fs;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use artistpref::config::{
    parse_config_text, validate_config, RawConfig, RunConfig, OUTPUT_DIR_ENV,
};
use artistpref::eval::{emit_plot_data, emit_report};
use artistpref::ingest::build_user_histories;
use artistpref::pipeline::{
    all_group_stats, evaluate_groups, load_input, profile, read_groups_csv, run_pipeline,
    split_eligible, with_threads, write_groups_csv, write_split_csv, write_stats_csv, GroupFile,
};
use artistpref::profiling::Group;
use artistpref::synth::{generate_synthetic, SynthConfig};
use artistpref::Error;

#[derive(Parser)]
#[command(
    name = "artistpref",
    version,
    about = "Artist preference prediction from listening logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an event log and print its size.
    Ingest {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also write the parsed events as normalized TSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score mainstreaminess and write groups.csv.
    Profile {
        #[command(flatten)]
        config: ConfigArgs,
        /// Defaults to `<outputDir>/groups.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize each group and write stats.csv.
    Stats {
        #[command(flatten)]
        config: ConfigArgs,
        /// groups.csv from `profile`; computed when omitted.
        #[arg(long)]
        groups: Option<PathBuf>,
        /// Defaults to `<outputDir>/stats.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split each history by time and print test-event counts per group.
    Split {
        #[command(flatten)]
        config: ConfigArgs,
        /// groups.csv from `profile`; computed when omitted.
        #[arg(long)]
        groups: Option<PathBuf>,
        /// Also write `user_key,n_train,n_test` rows here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate recommenders per group and write results.csv.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
        /// groups.csv from `profile`; computed when omitted.
        #[arg(long)]
        groups: Option<PathBuf>,
        /// Defaults to `<outputDir>/results.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a seeded synthetic event log.
    Synth(SynthArgs),
    /// Run every stage and write all outputs.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

/// Flags override the config file; values are checked by `validate_config`.
#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Listening-event TSV, optionally gzipped.
    #[arg(long)]
    events: Option<String>,
    /// Column positions, e.g. `user=0,artist=1,ts=4`.
    #[arg(long)]
    schema: Option<String>,
    /// `fail` or `skip`.
    #[arg(long)]
    on_error: Option<String>,
    #[arg(long)]
    group_size: Option<String>,
    #[arg(long)]
    min_events: Option<String>,
    /// Share of each history held out for testing.
    #[arg(long)]
    fraction: Option<String>,
    /// Comma-separated subset of bll, top, pop, time, cf.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    bll_d: Option<String>,
    #[arg(long)]
    cf_neighbors: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    /// Write one `recall,precision` file per algorithm and group.
    #[arg(long)]
    plot_data: bool,
    #[arg(long)]
    output_dir: Option<String>,
    /// Worker threads, or `auto`.
    #[arg(long)]
    threads: Option<String>,
    /// Override any config key, e.g. `--set groupSize=166`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    /// File, then environment, then flags.
    fn resolve(&self) -> artistpref::Result<RunConfig> {
        let mut raw = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::File {
                    path: path.clone(),
                    source: e,
                })?;
                parse_config_text(&text)?
            }
            None => RawConfig::new(),
        };
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            raw.insert("outputDir".into(), dir);
        }
        let flags = [
            ("eventsPath", &self.events),
            ("schema", &self.schema),
            ("onError", &self.on_error),
            ("groupSize", &self.group_size),
            ("minEvents", &self.min_events),
            ("splitFraction", &self.fraction),
            ("algorithms", &self.algo),
            ("bllDecay", &self.bll_d),
            ("cfNeighbors", &self.cf_neighbors),
            ("kMax", &self.k_max),
            ("outputDir", &self.output_dir),
            ("threads", &self.threads),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                raw.insert(key.into(), v.clone());
            }
        }
        if self.plot_data {
            raw.insert("plotData".into(), "true".into());
        }
        for pair in &self.overrides {
            let (k, v) = pair.split_once('=').ok_or_else(|| Error::Config {
                key: "set".into(),
                message: format!("expects KEY=VALUE, got {pair:?}"),
            })?;
            raw.insert(k.trim().into(), v.trim().into());
        }
        validate_config(&raw)
    }
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let bad = || format!("expected N or LO..HI, got {s:?}");
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo, hi.trim_start_matches('=')),
        None => (s, s),
    };
    let lo: usize = lo.trim().parse().map_err(|_| bad())?;
    let hi: usize = hi.trim().parse().map_err(|_| bad())?;
    Ok(lo..=hi)
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = SynthConfig::default().n_users)]
    users: usize,
    #[arg(long, default_value_t = SynthConfig::default().n_artists)]
    artists: usize,
    /// Events per user, e.g. `200..400` (inclusive).
    #[arg(long, value_parser = parse_range, default_value = "200..400")]
    events: RangeInclusive<usize>,
    #[arg(long, default_value_t = SynthConfig::default().zipf_exponent)]
    zipf: f64,
    #[arg(long, default_value_t = SynthConfig::default().reconsume_prob)]
    reconsume: f64,
    #[arg(long, default_value_t = SynthConfig::default().recency_bias)]
    recency: f64,
    #[arg(long, default_value_t = SynthConfig::default().seed)]
    seed: u64,
    /// Output TSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn create(path: &Path) -> artistpref::Result<fs::File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::File {
            path: dir.to_path_buf(),
            source: e,
        })?;
    }
    fs::File::create(path).map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_file(path: &Path, f: impl FnOnce(fs::File) -> io::Result<()>) -> artistpref::Result<()> {
    f(create(path)?).map_err(|e| Error::File {
        path: path.to_path_buf(),
        source: e,
    })?;
    println!("wrote {}", path.display());
    Ok(())
}

fn groups_for(
    cfg: &RunConfig,
    groups: Option<&Path>,
    input: &artistpref::pipeline::Input,
    histories: &[artistpref::ingest::UserHistory],
) -> artistpref::Result<GroupFile> {
    match groups {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| Error::File {
                path: path.to_path_buf(),
                source: e,
            })?;
            read_groups_csv(file, &input.dataset.ids)
        }
        None => {
            let p = profile(histories, cfg.group_size, cfg.min_events)?;
            Ok(GroupFile {
                scores: p.score_map(),
                groups: p.groups,
            })
        }
    }
}

fn execute(command: Command) -> Result<(), (i32, String)> {
    let fail = |e: Error| (e.exit_code(), e.to_string());
    match command {
        Command::Ingest { config, out } => {
            let cfg = config.resolve().map_err(fail)?;
            let input = load_input(&cfg).map_err(fail)?;
            println!(
                "events {}\nusers {}\nartists {}\nskipped {}\nsha256 {}",
                input.dataset.log.len(),
                input.dataset.ids.users.len(),
                input.dataset.ids.artists.len(),
                input.skipped,
                input.sha256
            );
            if let Some(out) = out {
                write_file(&out, |f| input.dataset.write_tsv(f)).map_err(fail)?;
            }
        }
        Command::Profile { config, out } => {
            let cfg = config.resolve().map_err(fail)?;
            with_threads(cfg.threads, || -> artistpref::Result<()> {
                let input = load_input(&cfg)?;
                let histories = build_user_histories(&input.dataset.log);
                let p = profile(&histories, cfg.group_size, cfg.min_events)?;
                println!(
                    "scored {} users, groups of {}",
                    p.scores.len(),
                    p.groups.group_size()
                );
                let out = out.unwrap_or_else(|| cfg.output_dir.join("groups.csv"));
                write_file(&out, |f| write_groups_csv(&p, &input.dataset.ids, f))
            })
            .and_then(|r| r)
            .map_err(fail)?;
        }
        Command::Stats {
            config,
            groups,
            out,
        } => {
            let cfg = config.resolve().map_err(fail)?;
            let input = load_input(&cfg).map_err(fail)?;
            let histories = build_user_histories(&input.dataset.log);
            let g = groups_for(&cfg, groups.as_deref(), &input, &histories).map_err(fail)?;
            let stats = all_group_stats(&g.groups, &histories, &g.scores).map_err(fail)?;
            write_stats_csv(&stats, io::stdout().lock()).map_err(|e| fail(e.into()))?;
            let out = out.unwrap_or_else(|| cfg.output_dir.join("stats.csv"));
            write_file(&out, |f| write_stats_csv(&stats, f)).map_err(fail)?;
        }
        Command::Split {
            config,
            groups,
            out,
        } => {
            let cfg = config.resolve().map_err(fail)?;
            let input = load_input(&cfg).map_err(fail)?;
            let histories = build_user_histories(&input.dataset.log);
            let g = groups_for(&cfg, groups.as_deref(), &input, &histories).map_err(fail)?;
            let split =
                split_eligible(&histories, cfg.min_events, cfg.split_fraction).map_err(fail)?;
            println!("group,users,test_events");
            for group in Group::ALL {
                let members = g.groups.members(group);
                println!(
                    "{group},{},{}",
                    members.len(),
                    split.test_events_of(members)
                );
            }
            println!("all,{},{}", split.per_user.len(), split.test_events());
            if let Some(out) = out {
                let users: Vec<_> = split.per_user.keys().copied().collect();
                write_file(&out, |f| {
                    write_split_csv(&split, &users, &input.dataset.ids, f)
                })
                .map_err(fail)?;
            }
        }
        Command::Eval {
            config,
            groups,
            out,
        } => {
            let cfg = config.resolve().map_err(fail)?;
            with_threads(cfg.threads, || -> artistpref::Result<()> {
                let input = load_input(&cfg)?;
                let histories = build_user_histories(&input.dataset.log);
                let g = groups_for(&cfg, groups.as_deref(), &input, &histories)?;
                let split = split_eligible(&histories, cfg.min_events, cfg.split_fraction)?;
                let reports = evaluate_groups(
                    &split,
                    &g.groups,
                    &cfg.algorithms,
                    cfg.bll_params(),
                    cfg.cf_params(),
                    cfg.k_max,
                )?;
                let path = out.unwrap_or_else(|| cfg.output_dir.join("results.csv"));
                create(&path)?;
                emit_report(&reports, &path)?;
                println!("wrote {}", path.display());
                if cfg.plot_data {
                    let dir = path.parent().unwrap_or(Path::new(".")).join("plots");
                    for f in emit_plot_data(&reports, &dir)? {
                        println!("wrote {}", f.display());
                    }
                }
                Ok(())
            })
            .and_then(|r| r)
            .map_err(fail)?;
        }
        Command::Synth(args) => {
            let synth = SynthConfig {
                n_users: args.users,
                n_artists: args.artists,
                events_per_user: args.events,
                zipf_exponent: args.zipf,
                reconsume_prob: args.reconsume,
                recency_bias: args.recency,
                seed: args.seed,
                ..SynthConfig::default()
            };
            let data = generate_synthetic(&synth).map_err(fail)?;
            match args.out {
                Some(out) => write_file(&out, |f| data.write_tsv(f)).map_err(fail)?,
                None => data
                    .write_tsv(io::stdout().lock())
                    .map_err(|e| fail(e.into()))?,
            }
        }
        Command::Run { config } => {
            let cfg = config.resolve().map_err(fail)?;
            let summary = run_pipeline(&cfg).map_err(|e| (e.exit_code(), e.to_string()))?;
            println!("events {} (skipped {})", summary.events, summary.skipped);
            for ((g, s), (_, test)) in summary.stats.iter().zip(&summary.test_events) {
                println!(
                    "{g}: {} users, {} artists, {} events, {test} test events",
                    s.users, s.distinct_artists, s.listening_events
                );
            }
            for f in &summary.files {
                println!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            let _ = io::stdout().flush();
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}
