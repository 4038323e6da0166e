//! Time-based train/test split: each user's most recent fraction of events
//! is held out for testing.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{ArtistId, Timestamp, UserHistory, UserId};

/// Default held-out fraction.
pub const DEFAULT_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserSplit {
    pub train: Vec<(ArtistId, Timestamp)>,
    pub test: Vec<(ArtistId, Timestamp)>,
}

impl UserSplit {
    /// Distinct artists in the test events.
    pub fn test_artists(&self) -> BTreeSet<ArtistId> {
        self.test.iter().map(|&(a, _)| a).collect()
    }
}

/// Number of test events for a history of `n` events: `max(1, floor(fraction * n))`,
/// never more than `n - 1` so the training side stays non-empty.
pub fn test_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).floor() as usize)
        .max(1)
        .min(n.saturating_sub(1).max(1))
}

fn check_fraction(fraction: f64) -> Result<()> {
    if fraction > 0.0 && fraction < 1.0 {
        Ok(())
    } else {
        Err(Error::config("splitFraction", "must be in (0,1)"))
    }
}

/// Splits a chronologically ordered history. Boundary ties follow the stable
/// event order rather than moving whole timestamp classes.
pub fn time_split(history: &UserHistory, fraction: f64) -> Result<UserSplit> {
    check_fraction(fraction)?;
    let n = history.len();
    if n < 2 {
        return Err(Error::invalid(format!(
            "{} has {n} events; a split needs at least 2",
            history.user
        )));
    }
    let cut = n - test_size(n, fraction);
    Ok(UserSplit {
        train: history.events[..cut].to_vec(),
        test: history.events[cut..].to_vec(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub fraction: f64,
    pub per_user: BTreeMap<UserId, UserSplit>,
    /// Histories dropped because they were too short to split.
    pub dropped: usize,
}

impl SplitDataset {
    pub fn test_events(&self) -> usize {
        self.per_user.values().map(|s| s.test.len()).sum()
    }

    /// Test-event total restricted to `users`.
    pub fn test_events_of(&self, users: &[UserId]) -> usize {
        users
            .iter()
            .filter_map(|u| self.per_user.get(u))
            .map(|s| s.test.len())
            .sum()
    }

    pub fn get(&self, user: UserId) -> Option<&UserSplit> {
        self.per_user.get(&user)
    }
}

/// Applies [`time_split`] to every history, dropping (and counting) those
/// with fewer than two events.
pub fn split_group<'a, I>(histories: I, fraction: f64) -> Result<SplitDataset>
where
    I: IntoIterator<Item = &'a UserHistory>,
{
    check_fraction(fraction)?;
    let histories: Vec<&UserHistory> = histories.into_iter().collect();
    let total = histories.len();
    let per_user: BTreeMap<UserId, UserSplit> = histories
        .par_iter()
        .filter(|h| h.len() >= 2)
        .map(|h| time_split(h, fraction).map(|s| (h.user, s)))
        .collect::<Result<_>>()?;
    if per_user.is_empty() {
        return Err(Error::invalid("no splittable users in group"));
    }
    let dropped = total - per_user.len();
    if dropped > 0 {
        log::warn!("dropped {dropped} users with fewer than 2 events");
    }
    Ok(SplitDataset {
        fraction,
        per_user,
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn linear(n: usize) -> UserHistory {
        UserHistory::new(
            UserId(0),
            (0..n)
                .map(|i| (ArtistId((i % 7) as u32), i as Timestamp))
                .collect(),
        )
    }

    #[test]
    fn one_percent_sizes() {
        let s = time_split(&linear(250), 0.01).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (248, 2));
        let s = time_split(&linear(50), 0.01).unwrap();
        assert_eq!(s.test.len(), 1);
        assert_eq!(test_size(1000, 0.01), 10);
        assert_eq!(test_size(2, 0.01), 1);
    }

    #[test]
    fn equal_timestamps_split_by_input_order() {
        let h = UserHistory::new(UserId(0), (0..100).map(|i| (ArtistId(i), 5)).collect());
        let s = time_split(&h, 0.01).unwrap();
        assert_eq!(s.test, vec![(ArtistId(99), 5)]);
    }

    #[test]
    fn half_split() {
        let s = time_split(&linear(4), 0.5).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (2, 2));
    }

    #[test]
    fn short_history_rejected() {
        assert!(time_split(&linear(1), 0.01).is_err());
        assert!(time_split(&linear(10), 0.0).is_err());
        assert!(time_split(&linear(10), 1.0).is_err());
    }

    #[test]
    fn group_totals() {
        let a = linear(100);
        let mut b = linear(250);
        b.user = UserId(1);
        let mut c = linear(1);
        c.user = UserId(2);
        let split = split_group([&a, &b, &c], 0.01).unwrap();
        assert_eq!(split.test_events(), 3);
        assert_eq!(split.dropped, 1);
        assert!(split_group([&c], 0.01).is_err());
    }

    proptest! {
        #[test]
        fn conserves_and_orders(ts in prop::collection::vec(0u64..50, 2..300), fraction in 0.001f64..0.999) {
            let h = UserHistory::new(UserId(0), ts.iter().enumerate().map(|(i, &t)| (ArtistId(i as u32 % 5), t)).collect());
            let s = time_split(&h, fraction).unwrap();
            prop_assert_eq!(s.train.len() + s.test.len(), h.len());
            prop_assert!(!s.test.is_empty());
            let max_train = s.train.iter().map(|e| e.1).max().unwrap_or(0);
            let min_test = s.test.iter().map(|e| e.1).min().unwrap();
            prop_assert!(max_train <= min_test);
            let mut joined = s.train.clone();
            joined.extend(&s.test);
            prop_assert_eq!(joined, h.events.clone());
        }

        #[test]
        fn test_size_monotone(n in 2usize..5000, f1 in 0.001f64..0.999, f2 in 0.001f64..0.999) {
            let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
            prop_assert!(test_size(n, lo) <= test_size(n, hi));
        }
    }
}
