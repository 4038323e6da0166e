//! Recall@k / precision@k over k = 1..k_max, macro-averaged over users.
//!
//! The relevant set of a user is the distinct artists of their test events.
//! Precision divides by `k` even when a recommender returned fewer than `k`
//! artists, and users with an empty list are counted with zero hits.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{ArtistId, UserId};
use crate::recommend::{RecommendationList, Recommender};
use crate::split::SplitDataset;

pub const DEFAULT_K_MAX: usize = 20;

pub const REPORT_HEADER: &str = "algorithm,group,k,recall,precision,users";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserResult {
    pub user: UserId,
    /// `hits[k - 1]` is the number of hits among the first `k` recommendations.
    pub hits: Vec<u32>,
    pub test_size: usize,
}

impl UserResult {
    pub fn recall(&self, k: usize) -> f64 {
        f64::from(self.hits[k - 1]) / self.test_size as f64
    }

    pub fn precision(&self, k: usize) -> f64 {
        f64::from(self.hits[k - 1]) / k as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub k: usize,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub algorithm: String,
    pub group: String,
    pub points: Vec<CurvePoint>,
    pub users_evaluated: usize,
    /// Per-user hit counts behind `points`, in user-id order.
    pub user_results: Vec<UserResult>,
}

/// Cumulative hit counts for `k = 1..=k_max`.
pub fn hits_at_k(
    ranked: &RecommendationList,
    test_artists: &BTreeSet<ArtistId>,
    k_max: usize,
) -> Result<Vec<u32>> {
    if test_artists.is_empty() {
        return Err(Error::invalid(format!(
            "{} has no test artists",
            ranked.user
        )));
    }
    let mut hits = Vec::with_capacity(k_max);
    let mut running = 0u32;
    let mut artists = ranked.artists();
    for _ in 0..k_max {
        if let Some(a) = artists.next() {
            if test_artists.contains(&a) {
                running += 1;
            }
        }
        hits.push(running);
    }
    Ok(hits)
}

/// Macro-averaged curve. Sums run in slice order so the result is independent
/// of how the per-user work was scheduled.
pub fn recall_precision_at_k(results: &[UserResult], k_max: usize) -> Result<Vec<CurvePoint>> {
    if results.is_empty() {
        return Err(Error::invalid("no user results to average"));
    }
    let n = results.len() as f64;
    Ok((1..=k_max)
        .map(|k| {
            let (r, p) = results.iter().fold((0.0, 0.0), |(r, p), u| {
                (r + u.recall(k), p + u.precision(k))
            });
            CurvePoint {
                k,
                recall: r / n,
                precision: p / n,
            }
        })
        .collect())
}

/// Evaluates `recommender` on the members of one group that have a split.
pub fn evaluate_algorithm(
    split: &SplitDataset,
    recommender: &dyn Recommender,
    group: &str,
    members: &[UserId],
    k_max: usize,
) -> Result<EvalReport> {
    if k_max == 0 {
        return Err(Error::config("kMax", "must be >= 1"));
    }
    let mut users: Vec<UserId> = members
        .iter()
        .copied()
        .filter(|u| {
            split
                .get(*u)
                .is_some_and(|s| !s.train.is_empty() && !s.test.is_empty())
        })
        .collect();
    users.sort_unstable();
    users.dedup();
    if users.is_empty() {
        return Err(Error::invalid(format!(
            "group {group} has no evaluable users"
        )));
    }
    let user_results: Vec<UserResult> = users
        .par_iter()
        .map(|&user| {
            let test = split.get(user).expect("filtered above").test_artists();
            let list = recommender.recommend(user, k_max)?;
            Ok(UserResult {
                user,
                hits: hits_at_k(&list, &test, k_max)?,
                test_size: test.len(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(EvalReport {
        algorithm: recommender.algorithm().name().to_string(),
        group: group.to_string(),
        points: recall_precision_at_k(&user_results, k_max)?,
        users_evaluated: user_results.len(),
        user_results,
    })
}

/// Writes the report CSV, rows sorted by `(algorithm, group, k)`.
pub fn write_report<W: Write>(reports: &[EvalReport], out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    let mut sorted: Vec<&EvalReport> = reports.iter().collect();
    sorted.sort_by(|a, b| (&a.algorithm, &a.group).cmp(&(&b.algorithm, &b.group)));
    writeln!(out, "{REPORT_HEADER}")?;
    for r in sorted {
        for p in &r.points {
            // `{:.6}` rounds exact ties half-to-even.
            writeln!(
                out,
                "{},{},{},{:.6},{:.6},{}",
                r.algorithm, r.group, p.k, p.recall, p.precision, r.users_evaluated
            )?;
        }
    }
    out.flush()
}

pub fn emit_report(reports: &[EvalReport], path: &Path) -> Result<()> {
    if reports.is_empty() {
        return Err(Error::invalid("no reports to emit"));
    }
    let file = fs::File::create(path).map_err(|e| Error::file(path, e))?;
    write_report(reports, file).map_err(|e| Error::file(path, e))
}

/// One `recall,precision` file per curve, named `<algorithm>_<group>.csv`.
pub fn emit_plot_data(reports: &[EvalReport], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    let mut written = Vec::with_capacity(reports.len());
    for r in reports {
        let path = dir.join(format!("{}_{}.csv", r.algorithm, r.group));
        let mut text = String::from("recall,precision\n");
        for p in &r.points {
            text.push_str(&format!("{:.6},{:.6}\n", p.recall, p.precision));
        }
        fs::write(&path, text).map_err(|e| Error::file(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
