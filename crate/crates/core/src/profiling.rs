//! Mainstreaminess scores, LowMS/MedMS/HighMS grouping and group statistics.
//!
//! Mainstreaminess is the histogram intersection of a user's artist
//! distribution with the distribution aggregated over all loaded users:
//! `sum_a min(p_user(a), p_global(a))`, a value in `[0, 1]`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{ArtistId, UserHistory, UserId};

/// Relative play frequency per artist.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArtistDistribution {
    pub probs: BTreeMap<ArtistId, f64>,
}

impl ArtistDistribution {
    fn from_counts(counts: BTreeMap<ArtistId, u64>) -> Self {
        let total: u64 = counts.values().sum();
        let probs = counts
            .into_iter()
            .map(|(artist, c)| (artist, c as f64 / total as f64))
            .collect();
        Self { probs }
    }

    pub fn get(&self, artist: ArtistId) -> f64 {
        self.probs.get(&artist).copied().unwrap_or(0.0)
    }
}

pub fn user_artist_distribution(history: &UserHistory) -> Result<ArtistDistribution> {
    if history.is_empty() {
        return Err(Error::invalid(format!(
            "artist distribution of {} is undefined: empty history",
            history.user
        )));
    }
    Ok(ArtistDistribution::from_counts(
        history
            .artists
            .iter()
            .map(|(&a, s)| (a, u64::from(s.count)))
            .collect(),
    ))
}

/// Integer counts are accumulated before the final division, so the result
/// does not depend on the order of `histories`.
pub fn global_artist_distribution<'a, I>(histories: I) -> Result<ArtistDistribution>
where
    I: IntoIterator<Item = &'a UserHistory>,
{
    let mut counts: BTreeMap<ArtistId, u64> = BTreeMap::new();
    for h in histories {
        for (&artist, stats) in &h.artists {
            *counts.entry(artist).or_default() += u64::from(stats.count);
        }
    }
    if counts.is_empty() {
        return Err(Error::invalid(
            "global artist distribution of an empty corpus",
        ));
    }
    Ok(ArtistDistribution::from_counts(counts))
}

/// Histogram intersection of two distributions.
pub fn mainstreaminess(user: &ArtistDistribution, global: &ArtistDistribution) -> f64 {
    // Iterate the smaller support; min() is zero off either support.
    let (small, large) = if user.probs.len() <= global.probs.len() {
        (user, global)
    } else {
        (global, user)
    };
    let overlap: f64 = small.probs.iter().map(|(&a, &p)| p.min(large.get(a))).sum();
    overlap.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MainstreaminessScore {
    pub user: UserId,
    pub score: f64,
}

/// Scores every history with at least `min_events` events against the
/// distribution of all `histories`.
pub fn score_users(
    histories: &[UserHistory],
    min_events: usize,
) -> Result<Vec<MainstreaminessScore>> {
    let global = global_artist_distribution(histories)?;
    histories
        .par_iter()
        .filter(|h| h.len() >= min_events.max(1))
        .map(|h| {
            let dist = user_artist_distribution(h)?;
            Ok(MainstreaminessScore {
                user: h.user,
                score: mainstreaminess(&dist, &global),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    LowMS,
    MedMS,
    HighMS,
}

impl Group {
    pub const ALL: [Group; 3] = [Group::LowMS, Group::MedMS, Group::HighMS];

    pub fn name(self) -> &'static str {
        match self {
            Group::LowMS => "LowMS",
            Group::MedMS => "MedMS",
            Group::HighMS => "HighMS",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LowMS" => Ok(Group::LowMS),
            "MedMS" => Ok(Group::MedMS),
            "HighMS" => Ok(Group::HighMS),
            other => Err(Error::invalid(format!("unknown group {other:?}"))),
        }
    }
}

/// Three disjoint, equally sized groups. Members are listed in ascending
/// `(score, user)` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAssignment {
    pub low: Vec<UserId>,
    pub med: Vec<UserId>,
    pub high: Vec<UserId>,
}

impl GroupAssignment {
    pub fn members(&self, group: Group) -> &[UserId] {
        match group {
            Group::LowMS => &self.low,
            Group::MedMS => &self.med,
            Group::HighMS => &self.high,
        }
    }

    pub fn group_of(&self, user: UserId) -> Option<Group> {
        Group::ALL
            .into_iter()
            .find(|&g| self.members(g).contains(&user))
    }

    pub fn group_size(&self) -> usize {
        self.low.len()
    }
}

/// Sorts `scores` ascending by `(score, user)`.
pub fn sort_scores(scores: &mut [MainstreaminessScore]) {
    scores.sort_by(|a, b| a.score.total_cmp(&b.score).then(a.user.cmp(&b.user)));
}

/// Lowest `group_size` users form LowMS, the highest form HighMS, and the
/// `group_size` users centred on the median form MedMS.
pub fn assign_groups(
    scores: &[MainstreaminessScore],
    group_size: usize,
) -> Result<GroupAssignment> {
    let n = scores.len();
    if group_size == 0 {
        return Err(Error::invalid("group size must be at least 1"));
    }
    if n < 3 * group_size {
        return Err(Error::invalid(format!(
            "{n} scored users cannot form three disjoint groups of {group_size}"
        )));
    }
    let mut sorted = scores.to_vec();
    sort_scores(&mut sorted);
    let ids: Vec<UserId> = sorted.iter().map(|s| s.user).collect();
    let med_start = (n - group_size) / 2;
    Ok(GroupAssignment {
        low: ids[..group_size].to_vec(),
        med: ids[med_start..med_start + group_size].to_vec(),
        high: ids[n - group_size..].to_vec(),
    })
}

/// Size and activity summary of one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    pub users: usize,
    pub distinct_artists: usize,
    pub listening_events: usize,
    pub avg_artists_per_user: f64,
    pub avg_mainstreaminess: f64,
}

/// `histories` is indexed by user id; `scores` must contain every member.
pub fn group_stats(
    members: &[UserId],
    histories: &[UserHistory],
    scores: &BTreeMap<UserId, f64>,
) -> Result<GroupStats> {
    if members.is_empty() {
        return Err(Error::invalid("statistics of an empty group"));
    }
    let mut artists: BTreeSet<ArtistId> = BTreeSet::new();
    let mut events = 0usize;
    let mut per_user_artists = 0usize;
    let mut score_sum = 0.0;
    for &user in members {
        let h = histories
            .get(user.index())
            .ok_or_else(|| Error::invalid(format!("no history for {user}")))?;
        let score = scores
            .get(&user)
            .ok_or_else(|| Error::invalid(format!("no mainstreaminess score for {user}")))?;
        artists.extend(h.artists.keys().copied());
        events += h.len();
        per_user_artists += h.distinct_artists();
        score_sum += score;
    }
    let n = members.len() as f64;
    Ok(GroupStats {
        users: members.len(),
        distinct_artists: artists.len(),
        listening_events: events,
        avg_artists_per_user: per_user_artists as f64 / n,
        avg_mainstreaminess: score_sum / n,
    })
}
