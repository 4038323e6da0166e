//! End-to-end runs: ingest, profile, split, evaluate, report.
//!
//! Each stage is also exposed on its own so the command-line tool can run
//! stages separately and hand CSV files between them:
//!
//! | file          | header                                                                  |
//! |---------------|-------------------------------------------------------------------------|
//! | `groups.csv`  | `user_key,score,group`                                                  |
//! | `stats.csv`   | `group,users,artists,events,avg_artists_per_user,avg_mainstreaminess`   |
//! | `split.csv`   | `user_key,n_train,n_test`                                               |
//! | `results.csv` | `algorithm,group,k,recall,precision,users`                              |

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{emit_plot_data, emit_report, evaluate_algorithm, EvalReport};
use crate::ingest::{
    build_user_histories, load_events, open_source, Dataset, IdMaps, UserHistory, UserId,
};
use crate::profiling::{
    assign_groups, group_stats, score_users, sort_scores, Group, GroupAssignment, GroupStats,
    MainstreaminessScore,
};
use crate::recommend::{build_recommender, Algorithm, BllParams, CfParams, TrainingSet};
use crate::split::{split_group, SplitDataset};

pub const GROUPS_HEADER: &str = "user_key,score,group";
pub const STATS_HEADER: &str =
    "group,users,artists,events,avg_artists_per_user,avg_mainstreaminess";
pub const SPLIT_HEADER: &str = "user_key,n_train,n_test";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Profile,
    Split,
    Eval,
    Report,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Profile => "profile",
            Stage::Split => "split",
            Stage::Eval => "eval",
            Stage::Report => "report",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("[{stage}] {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

trait StageExt<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, PipelineError>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, PipelineError> {
        self.map_err(|source| PipelineError { stage, source })
    }
}

/// Runs `f` on a pool of `threads` workers, or the global pool for `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| {
                    Error::config("threads", format!("could not start a pool of {n}: {e}"))
                })?;
            Ok(pool.install(f))
        }
    }
}

/// Loaded input plus its SHA-256.
pub struct Input {
    pub dataset: Dataset,
    pub skipped: usize,
    pub sha256: String,
}

/// Hashes the decoded bytes while parsing them.
struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

pub fn load_input(config: &RunConfig) -> Result<Input> {
    let path = config
        .events_path
        .as_ref()
        .ok_or_else(|| Error::config("eventsPath", "must be set"))?;
    let mut reader = HashingReader {
        inner: open_source(path)?,
        hasher: Sha256::new(),
    };
    let loaded =
        load_events(&mut reader, &config.schema, config.on_error).map_err(|err| match err {
            Error::Io(e) => Error::file(path, e),
            other => other,
        })?;
    if loaded.dataset.log.is_empty() {
        return Err(Error::invalid(format!(
            "{} contains no listening events",
            path.display()
        )));
    }
    Ok(Input {
        dataset: loaded.dataset,
        skipped: loaded.skipped,
        sha256: hex::encode(reader.hasher.finalize()),
    })
}

/// Scores and groups of the users with enough events.
#[derive(Debug, Clone)]
pub struct Profile {
    /// Ascending by `(score, user)`.
    pub scores: Vec<MainstreaminessScore>,
    pub groups: GroupAssignment,
    pub requested_group_size: usize,
}

impl Profile {
    pub fn score_map(&self) -> BTreeMap<UserId, f64> {
        self.scores.iter().map(|s| (s.user, s.score)).collect()
    }
}

/// Groups of `group_size`, shrunk to `floor(n / 3)` when fewer than
/// `3 * group_size` users qualify.
pub fn profile(histories: &[UserHistory], group_size: usize, min_events: usize) -> Result<Profile> {
    let mut scores = score_users(histories, min_events)?;
    sort_scores(&mut scores);
    let effective = group_size.min(scores.len() / 3);
    if effective == 0 {
        return Err(Error::invalid(format!(
            "only {} users have at least {min_events} events; three groups need at least 3",
            scores.len()
        )));
    }
    if effective < group_size {
        log::warn!(
            "{} eligible users cannot fill three groups of {group_size}; using groups of {effective}",
            scores.len()
        );
    }
    let groups = assign_groups(&scores, effective)?;
    Ok(Profile {
        scores,
        groups,
        requested_group_size: group_size,
    })
}

pub fn all_group_stats(
    groups: &GroupAssignment,
    histories: &[UserHistory],
    scores: &BTreeMap<UserId, f64>,
) -> Result<Vec<(Group, GroupStats)>> {
    Group::ALL
        .into_iter()
        .map(|g| Ok((g, group_stats(groups.members(g), histories, scores)?)))
        .collect()
}

pub fn write_groups_csv<W: Write>(profile: &Profile, ids: &IdMaps, out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{GROUPS_HEADER}")?;
    for s in &profile.scores {
        let group = profile.groups.group_of(s.user).map_or("none", Group::name);
        writeln!(out, "{},{},{}", ids.user_key(s.user), s.score, group)?;
    }
    out.flush()
}

/// Groups and scores read back from `groups.csv`.
#[derive(Debug, Clone)]
pub struct GroupFile {
    pub scores: BTreeMap<UserId, f64>,
    pub groups: GroupAssignment,
}

pub fn read_groups_csv<R: Read>(source: R, ids: &IdMaps) -> Result<GroupFile> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines();
    match lines.next().transpose()? {
        Some(h) if h.trim() == GROUPS_HEADER => {}
        other => {
            return Err(Error::invalid(format!(
                "groups file must start with {GROUPS_HEADER:?}, found {other:?}"
            )))
        }
    }
    let mut scores = BTreeMap::new();
    let mut members: BTreeMap<Group, Vec<UserId>> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 2;
        let fields: Vec<&str> = line.rsplitn(3, ',').collect();
        let [group, score, key] = fields[..] else {
            return Err(Error::invalid(format!(
                "groups file line {line_no}: expected 3 fields"
            )));
        };
        let user = ids.user_id(key).ok_or_else(|| {
            Error::invalid(format!("groups file line {line_no}: unknown user {key:?}"))
        })?;
        let score: f64 = score.parse().map_err(|_| {
            Error::invalid(format!("groups file line {line_no}: bad score {score:?}"))
        })?;
        scores.insert(user, score);
        if group != "none" {
            members.entry(group.parse()?).or_default().push(user);
        }
    }
    let mut take = |g: Group| members.remove(&g).unwrap_or_default();
    let groups = GroupAssignment {
        low: take(Group::LowMS),
        med: take(Group::MedMS),
        high: take(Group::HighMS),
    };
    if groups.low.is_empty()
        || groups.low.len() != groups.med.len()
        || groups.med.len() != groups.high.len()
    {
        return Err(Error::invalid(
            "groups file must hold three non-empty groups of equal size",
        ));
    }
    Ok(GroupFile { scores, groups })
}

pub fn write_stats_csv<W: Write>(stats: &[(Group, GroupStats)], out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{STATS_HEADER}")?;
    for (g, s) in stats {
        writeln!(
            out,
            "{},{},{},{},{:.6},{:.6}",
            g,
            s.users,
            s.distinct_artists,
            s.listening_events,
            s.avg_artists_per_user,
            s.avg_mainstreaminess
        )?;
    }
    out.flush()
}

/// Splits every user that passes the activity filter.
pub fn split_eligible(
    histories: &[UserHistory],
    min_events: usize,
    fraction: f64,
) -> Result<SplitDataset> {
    split_group(histories.iter().filter(|h| h.len() >= min_events), fraction)
}

pub fn write_split_csv<W: Write>(
    split: &SplitDataset,
    users: &[UserId],
    ids: &IdMaps,
    out: W,
) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    writeln!(out, "{SPLIT_HEADER}")?;
    for &u in users {
        if let Some(s) = split.get(u) {
            writeln!(
                out,
                "{},{},{}",
                ids.user_key(u),
                s.train.len(),
                s.test.len()
            )?;
        }
    }
    out.flush()
}

/// One report per (algorithm, group). Recommenders see only training data.
pub fn evaluate_groups(
    split: &SplitDataset,
    groups: &GroupAssignment,
    algorithms: &[Algorithm],
    bll: BllParams,
    cf: CfParams,
    k_max: usize,
) -> Result<Vec<EvalReport>> {
    let train = TrainingSet::from_split(split);
    let mut reports = Vec::with_capacity(algorithms.len() * Group::ALL.len());
    for &algo in algorithms {
        let recommender = build_recommender(algo, &train, bll, cf);
        for g in Group::ALL {
            reports.push(evaluate_algorithm(
                split,
                recommender.as_ref(),
                g.name(),
                groups.members(g),
                k_max,
            )?);
        }
    }
    Ok(reports)
}

/// What a run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub events: usize,
    pub skipped: usize,
    pub group_size: usize,
    pub stats: Vec<(Group, GroupStats)>,
    pub test_events: Vec<(Group, usize)>,
    pub reports: Vec<EvalReport>,
}

/// Tracks written files so a failed run can remove them.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn create(path: &Path) -> Result<Self> {
        let created_dir = !path.exists();
        fs::create_dir_all(path).map_err(|e| Error::file(path, e))?;
        Ok(Self {
            dir: path.to_path_buf(),
            created_dir,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(fs::File) -> io::Result<()>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        self.files.push(path.clone());
        let file = fs::File::create(&path).map_err(|e| Error::file(&path, e))?;
        f(file).map_err(|e| Error::file(&path, e))?;
        Ok(path)
    }

    fn discard(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        let plots = self.dir.join("plots");
        if plots.exists() {
            let _ = fs::remove_dir_all(plots);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn manifest_text(config: &RunConfig, input: &Input, group_size: usize) -> String {
    format!(
        "artifact = {} {}\ninputSha256 = {}\nevents = {}\nskipped = {}\neffectiveGroupSize = {}\n{}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        input.sha256,
        input.dataset.log.len(),
        input.skipped,
        group_size,
        config.to_text()
    )
}

/// Runs every stage and writes `groups.csv`, `stats.csv`, `results.csv` and
/// `manifest.txt` (plus `plots/` when requested) to the output directory.
/// On failure, files written so far are removed.
pub fn run_pipeline(config: &RunConfig) -> std::result::Result<RunSummary, PipelineError> {
    let mut outputs = Outputs::create(&config.output_dir).stage(Stage::Report)?;
    match with_threads(config.threads, || run_stages(config, &mut outputs)).stage(Stage::Config) {
        Ok(Ok(summary)) => Ok(summary),
        Ok(Err(e)) | Err(e) => {
            outputs.discard();
            Err(e)
        }
    }
}

fn run_stages(
    config: &RunConfig,
    out: &mut Outputs,
) -> std::result::Result<RunSummary, PipelineError> {
    let input = load_input(config).stage(Stage::Ingest)?;
    let ids = &input.dataset.ids;
    let histories = build_user_histories(&input.dataset.log);

    let profile =
        profile(&histories, config.group_size, config.min_events).stage(Stage::Profile)?;
    let scores = profile.score_map();
    let stats = all_group_stats(&profile.groups, &histories, &scores).stage(Stage::Profile)?;

    let split =
        split_eligible(&histories, config.min_events, config.split_fraction).stage(Stage::Split)?;
    let test_events: Vec<(Group, usize)> = Group::ALL
        .into_iter()
        .map(|g| (g, split.test_events_of(profile.groups.members(g))))
        .collect();

    let reports = evaluate_groups(
        &split,
        &profile.groups,
        &config.algorithms,
        config.bll_params(),
        config.cf_params(),
        config.k_max,
    )
    .stage(Stage::Eval)?;

    out.write("groups.csv", |f| write_groups_csv(&profile, ids, f))
        .stage(Stage::Report)?;
    out.write("stats.csv", |f| write_stats_csv(&stats, f))
        .stage(Stage::Report)?;
    let results = out.dir.join("results.csv");
    out.files.push(results.clone());
    emit_report(&reports, &results).stage(Stage::Report)?;
    if config.plot_data {
        emit_plot_data(&reports, &out.dir.join("plots")).stage(Stage::Report)?;
    }
    let group_size = profile.groups.group_size();
    let manifest = manifest_text(config, &input, group_size);
    out.write("manifest.txt", |mut f| f.write_all(manifest.as_bytes()))
        .stage(Stage::Report)?;

    Ok(RunSummary {
        output_dir: out.dir.clone(),
        files: out.files.clone(),
        events: input.dataset.log.len(),
        skipped: input.skipped,
        group_size,
        stats,
        test_events,
        reports,
    })
}
