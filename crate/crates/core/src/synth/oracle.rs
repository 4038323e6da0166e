//! Brute-force reference rankings for small instances.
//!
//! Everything here is recomputed from the flat list of training events by
//! direct enumeration: no histories, no inverted index, no partial selection.
//! Candidates are fully sorted with the same tie-breaking keys as the
//! recommenders and then truncated, so the lists can be compared exactly.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::ingest::{ArtistId, ListeningEvent, Timestamp, UserId};
use crate::recommend::{Algorithm, BllParams, CfParams, RecommendationList, RefTime, ScoredArtist};
use crate::synth::rng::{derive_seed, Xoshiro256StarStar};
use crate::synth::SynthConfig;

pub const MAX_USERS: usize = 10;
pub const MAX_ARTISTS: usize = 30;
pub const MAX_EVENTS: usize = 200;

/// Training events plus the parameters the recommenders were run with.
#[derive(Debug, Clone, Copy)]
pub struct OracleInstance<'a> {
    pub train: &'a [ListeningEvent],
    pub bll: BllParams,
    pub cf: CfParams,
}

impl OracleInstance<'_> {
    fn check_bounds(&self) -> Result<()> {
        let users: BTreeSet<UserId> = self.train.iter().map(|e| e.user).collect();
        let artists: BTreeSet<ArtistId> = self.train.iter().map(|e| e.artist).collect();
        if users.len() > MAX_USERS || artists.len() > MAX_ARTISTS || self.train.len() > MAX_EVENTS {
            return Err(Error::invalid(format!(
                "oracle instance too large: {} users, {} artists, {} events",
                users.len(),
                artists.len(),
                self.train.len()
            )));
        }
        Ok(())
    }

    /// The user's events, stably sorted by time.
    fn user_events(&self, user: UserId) -> Vec<ListeningEvent> {
        let mut events: Vec<ListeningEvent> = self
            .train
            .iter()
            .filter(|e| e.user == user)
            .copied()
            .collect();
        events.sort_by_key(|e| e.timestamp);
        events
    }

    fn artist_set(&self, user: UserId) -> BTreeSet<ArtistId> {
        self.train
            .iter()
            .filter(|e| e.user == user)
            .map(|e| e.artist)
            .collect()
    }
}

fn list_of(user: UserId, k: usize, mut sorted: Vec<(ArtistId, f64)>) -> RecommendationList {
    sorted.truncate(k);
    RecommendationList {
        user,
        k,
        ranked: sorted
            .into_iter()
            .map(|(artist, score)| ScoredArtist { artist, score })
            .collect(),
    }
}

fn desc_score_asc_id(a: &(ArtistId, f64), b: &(ArtistId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

fn bll(inst: &OracleInstance<'_>, user: UserId, k: usize) -> Result<RecommendationList> {
    let events = inst.user_events(user);
    let latest = events
        .iter()
        .map(|e| e.timestamp)
        .max()
        .ok_or_else(|| Error::invalid("user has no training events"))?;
    let reference: Timestamp = match inst.bll.ref_time {
        RefTime::LatestPlusOne => latest + 1,
        RefTime::Fixed(t) => t,
    };
    let mut scored = Vec::new();
    for artist in inst.artist_set(user) {
        let mut sum = 0.0f64;
        for e in events.iter().filter(|e| e.artist == artist) {
            let age = (reference - e.timestamp) as f64 / inst.bll.time_unit;
            sum += (age + 1.0).powf(-inst.bll.decay);
        }
        scored.push((artist, sum.ln()));
    }
    scored.sort_by(desc_score_asc_id);
    Ok(list_of(user, k, scored))
}

/// (count, last played) per artist of `user`.
fn counts(inst: &OracleInstance<'_>, user: UserId) -> Vec<(ArtistId, u32, Timestamp)> {
    inst.artist_set(user)
        .into_iter()
        .map(|artist| {
            let plays: Vec<Timestamp> = inst
                .train
                .iter()
                .filter(|e| e.user == user && e.artist == artist)
                .map(|e| e.timestamp)
                .collect();
            (
                artist,
                plays.len() as u32,
                plays.into_iter().max().unwrap_or(0),
            )
        })
        .collect()
}

fn pop(inst: &OracleInstance<'_>, user: UserId, k: usize) -> RecommendationList {
    let mut c = counts(inst, user);
    c.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)));
    list_of(
        user,
        k,
        c.into_iter().map(|(a, n, _)| (a, f64::from(n))).collect(),
    )
}

fn time(inst: &OracleInstance<'_>, user: UserId, k: usize) -> RecommendationList {
    let mut c = counts(inst, user);
    c.sort_by(|a, b| b.2.cmp(&a.2).then(b.1.cmp(&a.1)).then(a.0.cmp(&b.0)));
    list_of(
        user,
        k,
        c.into_iter().map(|(a, _, t)| (a, t as f64)).collect(),
    )
}

fn top(inst: &OracleInstance<'_>, user: UserId, k: usize) -> RecommendationList {
    let mut totals: BTreeMap<ArtistId, u64> = BTreeMap::new();
    for e in inst.train {
        *totals.entry(e.artist).or_insert(0) += 1;
    }
    let mut all: Vec<(ArtistId, u64)> = totals.into_iter().collect();
    all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    list_of(
        user,
        k,
        all.into_iter().map(|(a, c)| (a, c as f64)).collect(),
    )
}

fn cf(inst: &OracleInstance<'_>, user: UserId, k: usize) -> RecommendationList {
    let mine = inst.artist_set(user);
    let others: BTreeSet<UserId> = inst
        .train
        .iter()
        .map(|e| e.user)
        .filter(|&v| v != user)
        .collect();
    let mut sims: Vec<(UserId, f64, BTreeSet<ArtistId>)> = Vec::new();
    for v in others {
        let theirs = inst.artist_set(v);
        let shared = mine.iter().filter(|a| theirs.contains(a)).count();
        let sim = shared as f64 / ((mine.len() * theirs.len()) as f64).sqrt();
        if sim > 0.0 {
            sims.push((v, sim, theirs));
        }
    }
    sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    sims.truncate(inst.cf.neighborhood_size);

    let candidates: BTreeSet<ArtistId> = sims
        .iter()
        .flat_map(|(_, _, s)| s.iter().copied())
        .collect();
    let mut scored: Vec<(ArtistId, f64)> = candidates
        .into_iter()
        .map(|a| {
            let mut score = 0.0;
            for (_, sim, set) in &sims {
                if set.contains(&a) {
                    score += sim;
                }
            }
            (a, score)
        })
        .collect();
    scored.sort_by(desc_score_asc_id);
    list_of(user, k, scored)
}

/// Reference top-`k` list for `user` under `algorithm`.
pub fn brute_force_ranking(
    algorithm: Algorithm,
    inst: &OracleInstance<'_>,
    user: UserId,
    k: usize,
) -> Result<RecommendationList> {
    inst.check_bounds()?;
    match algorithm {
        Algorithm::Bll => bll(inst, user, k),
        Algorithm::Pop => Ok(pop(inst, user, k)),
        Algorithm::Time => Ok(time(inst, user, k)),
        Algorithm::Top => Ok(top(inst, user, k)),
        Algorithm::Cf => Ok(cf(inst, user, k)),
    }
}

/// A random configuration inside the oracle bounds. Short time spans are
/// included so that timestamp ties are common.
pub fn small_instance_config(seed: u64) -> SynthConfig {
    let mut rng = Xoshiro256StarStar::from_seed(derive_seed(seed, u64::MAX));
    let n_users = 2 + rng.below((MAX_USERS - 1) as u64) as usize;
    let n_artists = 2 + rng.below((MAX_ARTISTS - 1) as u64) as usize;
    let max_per_user = MAX_EVENTS / n_users;
    let hi = 2 + rng.below((max_per_user - 1) as u64) as usize;
    let lo = 2 + rng.below((hi - 1) as u64) as usize;
    let time_span = [10, 1_000, 10_000_000][rng.below(3) as usize];
    SynthConfig {
        n_users,
        n_artists,
        events_per_user: lo..=hi,
        zipf_exponent: 0.5 + rng.next_f64() * 1.5,
        reconsume_prob: rng.next_f64(),
        recency_bias: 0.2 + rng.next_f64(),
        time_span,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(user: u32, artist: u32, timestamp: Timestamp) -> ListeningEvent {
        ListeningEvent {
            user: UserId(user),
            artist: ArtistId(artist),
            timestamp,
        }
    }

    fn inst(train: &[ListeningEvent]) -> OracleInstance<'_> {
        OracleInstance {
            train,
            bll: BllParams::default(),
            cf: CfParams::default(),
        }
    }

    #[test]
    fn single_artist_user() {
        let train = [ev(0, 4, 10), ev(0, 4, 20)];
        for algo in [Algorithm::Bll, Algorithm::Pop, Algorithm::Time] {
            let list = brute_force_ranking(algo, &inst(&train), UserId(0), 5).unwrap();
            assert_eq!(list.artists().collect::<Vec<_>>(), vec![ArtistId(4)]);
        }
    }

    #[test]
    fn clone_neighbours() {
        let train = [ev(0, 1, 1), ev(0, 2, 2), ev(1, 1, 1), ev(1, 2, 2)];
        let list = brute_force_ranking(Algorithm::Cf, &inst(&train), UserId(0), 5).unwrap();
        assert!(list.ranked.iter().all(|s| s.score == 1.0));
        assert_eq!(list.len(), 2);
    }

    #[test]
    fn rejects_large_instances() {
        let train: Vec<ListeningEvent> = (0..201).map(|i| ev(0, i % 3, u64::from(i))).collect();
        assert!(brute_force_ranking(Algorithm::Top, &inst(&train), UserId(0), 5).is_err());
    }

    #[test]
    fn small_configs_stay_in_bounds() {
        for seed in 0..200 {
            let cfg = small_instance_config(seed);
            cfg.validate().unwrap();
            assert!(cfg.n_users <= MAX_USERS && cfg.n_artists <= MAX_ARTISTS);
            assert!(cfg.n_users * cfg.events_per_user.end() <= MAX_EVENTS);
        }
    }
}
