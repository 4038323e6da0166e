//! Recommenders only ever see training events.

use std::collections::BTreeSet;
use std::sync::Mutex;

use artistpref::eval::evaluate_algorithm;
use artistpref::ingest::{build_user_histories, UserId};
use artistpref::pipeline::{profile, split_eligible};
use artistpref::recommend::{
    build_recommender, Algorithm, BllParams, CfParams, RecommendationList, Recommender, TrainingSet,
};
use artistpref::synth::{generate_synthetic, SynthConfig};
use artistpref::Result;

/// Wraps a recommender and checks every history it could read.
struct Spy<'a> {
    inner: Box<dyn Recommender + 'a>,
    train: &'a TrainingSet,
    test_events: BTreeSet<(UserId, u32, u64)>,
    calls: Mutex<Vec<UserId>>,
}

impl Recommender for Spy<'_> {
    fn algorithm(&self) -> Algorithm {
        self.inner.algorithm()
    }

    fn recommend(&self, user: UserId, k: usize) -> Result<RecommendationList> {
        self.calls.lock().unwrap().push(user);
        self.inner.recommend(user, k)
    }
}

impl Spy<'_> {
    fn assert_no_test_events(&self) {
        for h in self.train.histories() {
            for &(artist, ts) in &h.events {
                assert!(
                    !self.test_events.contains(&(h.user, artist.0, ts)),
                    "test event of {} in training data",
                    h.user
                );
            }
        }
    }
}

#[test]
fn no_test_event_reaches_a_recommender() {
    let data = generate_synthetic(&SynthConfig {
        n_users: 60,
        n_artists: 150,
        events_per_user: 40..=80,
        // Distinct timestamps per user make (user, artist, ts) identify an event.
        time_span: 1 << 40,
        seed: 9,
        ..SynthConfig::default()
    })
    .unwrap();
    let histories = build_user_histories(&data.log);
    let groups = profile(&histories, 20, 2).unwrap().groups;
    let split = split_eligible(&histories, 2, 0.1).unwrap();
    let test_events: BTreeSet<_> = split
        .per_user
        .iter()
        .flat_map(|(u, s)| s.test.iter().map(move |&(a, t)| (*u, a.0, t)))
        .collect();
    let train = TrainingSet::from_split(&split);

    for (user, s) in &split.per_user {
        let h = train.history(*user).unwrap();
        assert_eq!(h.events, s.train);
        assert!(h.latest() <= s.test.first().map(|e| e.1));
    }

    for algo in Algorithm::ALL {
        let spy = Spy {
            inner: build_recommender(algo, &train, BllParams::default(), CfParams::default()),
            train: &train,
            test_events: test_events.clone(),
            calls: Mutex::new(Vec::new()),
        };
        spy.assert_no_test_events();
        let members = groups.members(artistpref::profiling::Group::MedMS);
        let report = evaluate_algorithm(&split, &spy, "MedMS", members, 10).unwrap();
        let mut calls = spy.calls.into_inner().unwrap();
        calls.sort_unstable();
        let mut expected = members.to_vec();
        expected.sort_unstable();
        assert_eq!(calls, expected, "{algo:?}: one call per evaluated user");
        assert_eq!(report.users_evaluated, members.len());
    }
}
