//! Artist recommenders scored from training data only.
//!
//! * `BLL_u` ranks a user's own artists by ACT-R base-level activation,
//!   `B = ln(sum_j (t_ref - t_j + 1)^(-d))`, which rewards both frequent and
//!   recent listening and decays each listen by a power law.
//! * `POP_u` ranks a user's artists by play count.
//! * `TIME_u` ranks a user's artists by when they were last played.
//! * `TOP` recommends the globally most played artists to everyone.
//! * `CF_u` is user-based collaborative filtering with binary cosine
//!   similarity over artist sets.
//!
//! Every list is ordered by a total key, so ties are always resolved the same
//! way and results are reproducible.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ingest::{ArtistId, Timestamp, UserHistory, UserId};
use crate::split::SplitDataset;

pub const DEFAULT_DECAY: f64 = 0.5;
pub const DEFAULT_NEIGHBORS: usize = 20;

/// Reference time against which listen ages are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RefTime {
    /// One second after the user's latest training event.
    #[default]
    LatestPlusOne,
    /// A fixed timestamp shared by every user.
    Fixed(Timestamp),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BllParams {
    /// Power-law decay exponent `d`.
    pub decay: f64,
    pub ref_time: RefTime,
    /// Seconds per time unit used for listen ages.
    pub time_unit: f64,
}

impl Default for BllParams {
    fn default() -> Self {
        Self {
            decay: DEFAULT_DECAY,
            ref_time: RefTime::LatestPlusOne,
            time_unit: 1.0,
        }
    }
}

impl BllParams {
    pub fn with_decay(decay: f64) -> Self {
        Self {
            decay,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.decay > 0.0 && self.decay.is_finite()) {
            return Err(Error::config("bllDecay", "must be > 0"));
        }
        if !(self.time_unit > 0.0 && self.time_unit.is_finite()) {
            return Err(Error::config("bllTimeUnit", "must be > 0"));
        }
        Ok(())
    }

    fn reference_for(&self, history: &UserHistory) -> Result<Timestamp> {
        let latest = history
            .latest()
            .ok_or_else(|| Error::invalid(format!("{} has no training events", history.user)))?;
        match self.ref_time {
            RefTime::LatestPlusOne => Ok(latest + 1),
            RefTime::Fixed(t) if t >= latest => Ok(t),
            RefTime::Fixed(t) => Err(Error::invalid(format!(
                "reference time {t} precedes a training event at {latest}"
            ))),
        }
    }

    fn term(&self, ref_time: Timestamp, t: Timestamp) -> f64 {
        ((ref_time - t) as f64 / self.time_unit + 1.0).powf(-self.decay)
    }
}

/// Base-level activation of one item accessed at `timestamps`, with ages in
/// seconds shifted by one so a listen at `ref_time` contributes `1`.
pub fn bll_activation(timestamps: &[Timestamp], ref_time: Timestamp, decay: f64) -> Result<f64> {
    let params = BllParams::with_decay(decay);
    params.validate()?;
    if timestamps.is_empty() {
        return Err(Error::invalid("activation of an item with no accesses"));
    }
    let mut sum = 0.0;
    for &t in timestamps {
        if t > ref_time {
            return Err(Error::invalid(format!(
                "access at {t} is after the reference time {ref_time}"
            )));
        }
        sum += params.term(ref_time, t);
    }
    Ok(sum.ln())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredArtist {
    pub artist: ArtistId,
    pub score: f64,
}

/// Top-k artists for one user, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationList {
    pub user: UserId,
    pub k: usize,
    pub ranked: Vec<ScoredArtist>,
}

impl RecommendationList {
    pub fn artists(&self) -> impl Iterator<Item = ArtistId> + '_ {
        self.ranked.iter().map(|s| s.artist)
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

/// The `k` smallest items under `cmp`, sorted.
fn select_top<T, F>(mut items: Vec<T>, k: usize, cmp: F) -> Vec<T>
where
    F: Fn(&T, &T) -> Ordering,
{
    if k == 0 {
        items.clear();
        return items;
    }
    if items.len() > k {
        items.select_nth_unstable_by(k - 1, &cmp);
        items.truncate(k);
    }
    items.sort_unstable_by(cmp);
    items
}

fn by_score_then_id(a: &ScoredArtist, b: &ScoredArtist) -> Ordering {
    b.score.total_cmp(&a.score).then(a.artist.cmp(&b.artist))
}

fn require_history(history: &UserHistory) -> Result<()> {
    if history.is_empty() {
        Err(Error::invalid(format!(
            "{} has an empty training history",
            history.user
        )))
    } else {
        Ok(())
    }
}

/// Ranks the user's training artists by base-level activation.
pub fn recommend_bll(
    history: &UserHistory,
    params: &BllParams,
    k: usize,
) -> Result<RecommendationList> {
    params.validate()?;
    require_history(history)?;
    let ref_time = params.reference_for(history)?;
    let mut sums: BTreeMap<ArtistId, f64> = BTreeMap::new();
    for &(artist, t) in &history.events {
        *sums.entry(artist).or_insert(0.0) += params.term(ref_time, t);
    }
    let scored = sums
        .into_iter()
        .map(|(artist, sum)| ScoredArtist {
            artist,
            score: sum.ln(),
        })
        .collect();
    Ok(RecommendationList {
        user: history.user,
        k,
        ranked: select_top(scored, k, by_score_then_id),
    })
}

/// Ranks by play count; ties go to the more recently played artist, then the
/// lower artist id.
pub fn recommend_pop(history: &UserHistory, k: usize) -> Result<RecommendationList> {
    require_history(history)?;
    let items: Vec<(ArtistId, u32, Timestamp)> = history
        .artists
        .iter()
        .map(|(&a, s)| (a, s.count, s.last_played))
        .collect();
    let top = select_top(items, k, |a, b| {
        b.1.cmp(&a.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0))
    });
    Ok(RecommendationList {
        user: history.user,
        k,
        ranked: top
            .into_iter()
            .map(|(artist, count, _)| ScoredArtist {
                artist,
                score: f64::from(count),
            })
            .collect(),
    })
}

/// Ranks by last-played time; ties go to the higher play count, then the
/// lower artist id.
pub fn recommend_time(history: &UserHistory, k: usize) -> Result<RecommendationList> {
    require_history(history)?;
    let items: Vec<(ArtistId, u32, Timestamp)> = history
        .artists
        .iter()
        .map(|(&a, s)| (a, s.count, s.last_played))
        .collect();
    let top = select_top(items, k, |a, b| {
        b.2.cmp(&a.2).then(b.1.cmp(&a.1)).then(a.0.cmp(&b.0))
    });
    Ok(RecommendationList {
        user: history.user,
        k,
        ranked: top
            .into_iter()
            .map(|(artist, _, last)| ScoredArtist {
                artist,
                score: last as f64,
            })
            .collect(),
    })
}

/// Globally most played artists; ties by artist id.
pub fn recommend_top(
    global_counts: &BTreeMap<ArtistId, u64>,
    user: UserId,
    k: usize,
) -> Result<RecommendationList> {
    if global_counts.is_empty() {
        return Err(Error::invalid("no training plays to rank"));
    }
    let items: Vec<(ArtistId, u64)> = global_counts.iter().map(|(&a, &c)| (a, c)).collect();
    let top = select_top(items, k, |a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(RecommendationList {
        user,
        k,
        ranked: top
            .into_iter()
            .map(|(artist, count)| ScoredArtist {
                artist,
                score: count as f64,
            })
            .collect(),
    })
}

fn cosine(overlap: usize, len_u: usize, len_v: usize) -> f64 {
    overlap as f64 / ((len_u * len_v) as f64).sqrt()
}

/// Cosine similarity of two binary artist-incidence vectors.
pub fn user_similarity(u: &BTreeSet<ArtistId>, v: &BTreeSet<ArtistId>) -> Result<f64> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::invalid("similarity with an empty artist set"));
    }
    Ok(cosine(u.intersection(v).count(), u.len(), v.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CfParams {
    pub neighborhood_size: usize,
}

impl Default for CfParams {
    fn default() -> Self {
        Self {
            neighborhood_size: DEFAULT_NEIGHBORS,
        }
    }
}

/// Training histories of every split user.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    histories: BTreeMap<UserId, UserHistory>,
}

impl TrainingSet {
    /// Only the train side of each split is copied.
    pub fn from_split(split: &SplitDataset) -> Self {
        let histories = split
            .per_user
            .iter()
            .map(|(&user, s)| (user, UserHistory::new(user, s.train.clone())))
            .collect();
        Self { histories }
    }

    pub fn from_histories<I: IntoIterator<Item = UserHistory>>(histories: I) -> Self {
        Self {
            histories: histories.into_iter().map(|h| (h.user, h)).collect(),
        }
    }

    pub fn get(&self, user: UserId) -> Option<&UserHistory> {
        self.histories.get(&user)
    }

    pub fn history(&self, user: UserId) -> Result<&UserHistory> {
        self.get(user)
            .ok_or_else(|| Error::invalid(format!("{user} has no training history")))
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.histories.keys().copied()
    }

    pub fn histories(&self) -> impl Iterator<Item = &UserHistory> {
        self.histories.values()
    }

    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    /// Total training plays per artist over all users.
    pub fn global_counts(&self) -> BTreeMap<ArtistId, u64> {
        let mut counts = BTreeMap::new();
        for h in self.histories.values() {
            for (&a, s) in &h.artists {
                *counts.entry(a).or_insert(0) += u64::from(s.count);
            }
        }
        counts
    }
}

/// Artist to listeners inverted index over a training set.
#[derive(Debug, Clone)]
pub struct CfIndex {
    listeners: Vec<Vec<UserId>>,
    artist_counts: Vec<usize>,
}

impl CfIndex {
    pub fn build(train: &TrainingSet) -> Self {
        let n_artists = train
            .histories()
            .filter_map(|h| h.artists.keys().next_back())
            .map(|a| a.index() + 1)
            .max()
            .unwrap_or(0);
        let n_users = train.users().map(|u| u.index() + 1).max().unwrap_or(0);
        let mut listeners = vec![Vec::new(); n_artists];
        let mut artist_counts = vec![0; n_users];
        for h in train.histories() {
            artist_counts[h.user.index()] = h.distinct_artists();
            for &a in h.artists.keys() {
                listeners[a.index()].push(h.user);
            }
        }
        Self {
            listeners,
            artist_counts,
        }
    }

    /// The `size` most similar other users with positive similarity, best
    /// first; ties by ascending user id.
    pub fn neighbors(&self, history: &UserHistory, size: usize) -> Vec<(UserId, f64)> {
        let mut overlap = vec![0usize; self.artist_counts.len()];
        for &a in history.artists.keys() {
            if let Some(users) = self.listeners.get(a.index()) {
                for &v in users {
                    overlap[v.index()] += 1;
                }
            }
        }
        let own = history.distinct_artists();
        let candidates: Vec<(UserId, f64)> = overlap
            .iter()
            .enumerate()
            .filter(|&(v, &n)| n > 0 && v != history.user.index())
            .map(|(v, &n)| (UserId(v as u32), cosine(n, own, self.artist_counts[v])))
            .collect();
        select_top(candidates, size, |a, b| {
            b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
        })
    }
}

/// User-based CF. Each candidate artist scores the summed similarity of the
/// neighbours who played it. The user's own artists stay eligible. A user
/// with no similar neighbour gets an empty list.
pub fn recommend_cf(
    user: UserId,
    train: &TrainingSet,
    index: &CfIndex,
    params: &CfParams,
    k: usize,
) -> Result<RecommendationList> {
    if params.neighborhood_size == 0 {
        return Err(Error::config("cfNeighbors", "must be >= 1"));
    }
    let history = train.history(user)?;
    require_history(history)?;
    let mut scores: BTreeMap<ArtistId, f64> = BTreeMap::new();
    for (v, sim) in index.neighbors(history, params.neighborhood_size) {
        for &a in train.history(v)?.artists.keys() {
            *scores.entry(a).or_insert(0.0) += sim;
        }
    }
    let scored = scores
        .into_iter()
        .map(|(artist, score)| ScoredArtist { artist, score })
        .collect();
    Ok(RecommendationList {
        user,
        k,
        ranked: select_top(scored, k, by_score_then_id),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Algorithm {
    Bll,
    Top,
    Pop,
    Time,
    Cf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Bll,
        Algorithm::Top,
        Algorithm::Pop,
        Algorithm::Time,
        Algorithm::Cf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Bll => "bll",
            Algorithm::Top => "top",
            Algorithm::Pop => "pop",
            Algorithm::Time => "time",
            Algorithm::Cf => "cf",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| {
                Error::config(
                    "algorithms",
                    format!("must be one of bll, top, pop, time, cf; got {s:?}"),
                )
            })
    }
}

/// A recommender bound to its training data.
pub trait Recommender: Sync {
    fn algorithm(&self) -> Algorithm;

    fn recommend(&self, user: UserId, k: usize) -> Result<RecommendationList>;
}

pub struct BllRecommender<'a> {
    pub train: &'a TrainingSet,
    pub params: BllParams,
}

impl Recommender for BllRecommender<'_> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Bll
    }

    fn recommend(&self, user: UserId, k: usize) -> Result<RecommendationList> {
        recommend_bll(self.train.history(user)?, &self.params, k)
    }
}

pub struct PopRecommender<'a> {
    pub train: &'a TrainingSet,
}

impl Recommender for PopRecommender<'_> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Pop
    }

    fn recommend(&self, user: UserId, k: usize) -> Result<RecommendationList> {
        recommend_pop(self.train.history(user)?, k)
    }
}

pub struct TimeRecommender<'a> {
    pub train: &'a TrainingSet,
}

impl Recommender for TimeRecommender<'_> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Time
    }

    fn recommend(&self, user: UserId, k: usize) -> Result<RecommendationList> {
        recommend_time(self.train.history(user)?, k)
    }
}

pub struct TopRecommender {
    counts: BTreeMap<ArtistId, u64>,
}

impl TopRecommender {
    pub fn new(train: &TrainingSet) -> Self {
        Self {
            counts: train.global_counts(),
        }
    }
}

impl Recommender for TopRecommender {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Top
    }

    fn recommend(&self, user: UserId, k: usize) -> Result<RecommendationList> {
        recommend_top(&self.counts, user, k)
    }
}

pub struct CfRecommender<'a> {
    pub train: &'a TrainingSet,
    pub index: CfIndex,
    pub params: CfParams,
}

impl<'a> CfRecommender<'a> {
    pub fn new(train: &'a TrainingSet, params: CfParams) -> Self {
        Self {
            train,
            index: CfIndex::build(train),
            params,
        }
    }
}

impl Recommender for CfRecommender<'_> {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Cf
    }

    fn recommend(&self, user: UserId, k: usize) -> Result<RecommendationList> {
        recommend_cf(user, self.train, &self.index, &self.params, k)
    }
}

pub fn build_recommender<'a>(
    algorithm: Algorithm,
    train: &'a TrainingSet,
    bll: BllParams,
    cf: CfParams,
) -> Box<dyn Recommender + 'a> {
    match algorithm {
        Algorithm::Bll => Box::new(BllRecommender { train, params: bll }),
        Algorithm::Top => Box::new(TopRecommender::new(train)),
        Algorithm::Pop => Box::new(PopRecommender { train }),
        Algorithm::Time => Box::new(TimeRecommender { train }),
        Algorithm::Cf => Box::new(CfRecommender::new(train, cf)),
    }
}
