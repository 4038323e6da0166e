//! Listening-event logs: parsing, id densification and per-user histories.
//!
//! Input is newline-delimited, tab-separated text. A [`ColumnSchema`] names the
//! columns holding the user key, artist key and Unix timestamp; the default
//! matches the LFM-1b layout `user, artist, album, track, timestamp`. Gzip
//! input is detected from its magic bytes.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use flate2::read::MultiGzDecoder;

use crate::error::{Error, LineErrorKind, Result};

/// Unix epoch seconds.
pub type Timestamp = u64;

/// Dense user index, assigned in first-seen order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

/// Dense artist index, assigned in first-seen order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArtistId(pub u32);

impl UserId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ArtistId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u#{}", self.0)
    }
}

impl fmt::Display for ArtistId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a#{}", self.0)
    }
}

/// Which tab-separated columns hold the fields we need. Other columns are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnSchema {
    pub user: usize,
    pub artist: usize,
    pub timestamp: usize,
}

impl ColumnSchema {
    pub const fn new(user: usize, artist: usize, timestamp: usize) -> Self {
        Self {
            user,
            artist,
            timestamp,
        }
    }

    /// Minimum number of columns a record must have.
    pub fn width(&self) -> usize {
        self.user.max(self.artist).max(self.timestamp) + 1
    }
}

impl Default for ColumnSchema {
    /// LFM-1b listening events: user, artist, album, track, timestamp.
    fn default() -> Self {
        Self::new(0, 1, 4)
    }
}

impl fmt::Display for ColumnSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "user={},artist={},ts={}",
            self.user, self.artist, self.timestamp
        )
    }
}

impl FromStr for ColumnSchema {
    type Err = Error;

    /// Parses `user=0,artist=1,ts=4`. Missing keys keep their default.
    fn from_str(s: &str) -> Result<Self> {
        let mut schema = ColumnSchema::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                Error::config(
                    "schema",
                    format!("must look like user=0,artist=1,ts=4; got {part:?}"),
                )
            })?;
            let col: usize = value.trim().parse().map_err(|_| {
                Error::config(
                    "schema",
                    format!("column for {key} must be a non-negative integer"),
                )
            })?;
            match key.trim() {
                "user" => schema.user = col,
                "artist" => schema.artist = col,
                "ts" | "timestamp" => schema.timestamp = col,
                other => {
                    return Err(Error::config(
                        "schema",
                        format!("has unknown column {other:?} (expected user, artist, ts)"),
                    ))
                }
            }
        }
        if schema.user == schema.artist
            || schema.user == schema.timestamp
            || schema.artist == schema.timestamp
        {
            return Err(Error::config(
                "schema",
                "columns for user, artist and ts must differ",
            ));
        }
        Ok(schema)
    }
}

/// A parsed record before id densification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEvent<'a> {
    pub user: &'a str,
    pub artist: &'a str,
    pub timestamp: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ListeningEvent {
    pub user: UserId,
    pub artist: ArtistId,
    pub timestamp: Timestamp,
}

/// Parses one record. `line_no` is only used for error reporting.
pub fn parse_event_line<'a>(
    line: &'a str,
    schema: &ColumnSchema,
    line_no: usize,
) -> Result<RawEvent<'a>> {
    let line = line.strip_suffix('\r').unwrap_or(line);
    let fields: Vec<&str> = line.split('\t').collect();
    let needed = schema.width();
    if fields.len() < needed {
        return Err(Error::Parse {
            line: line_no,
            kind: LineErrorKind::WrongColumnCount {
                needed,
                found: fields.len(),
            },
        });
    }
    let raw_ts = fields[schema.timestamp].trim();
    let ts: i64 = raw_ts.parse().map_err(|_| Error::Parse {
        line: line_no,
        kind: LineErrorKind::NonIntegerTimestamp(raw_ts.to_string()),
    })?;
    if ts < 0 {
        return Err(Error::Parse {
            line: line_no,
            kind: LineErrorKind::NegativeTimestamp(ts),
        });
    }
    Ok(RawEvent {
        user: fields[schema.user],
        artist: fields[schema.artist],
        timestamp: ts as Timestamp,
    })
}

/// Bijection between external string keys and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interner {
    index: HashMap<String, u32>,
    keys: Vec<String>,
}

impl Interner {
    pub fn intern(&mut self, key: &str) -> u32 {
        if let Some(&id) = self.index.get(key) {
            return id;
        }
        let id = u32::try_from(self.keys.len()).expect("more than u32::MAX distinct keys");
        self.keys.push(key.to_owned());
        self.index.insert(key.to_owned(), id);
        id
    }

    pub fn get(&self, key: &str) -> Option<u32> {
        self.index.get(key).copied()
    }

    pub fn key(&self, id: u32) -> Option<&str> {
        self.keys.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Keys in index order.
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.keys.iter().map(String::as_str)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMaps {
    pub users: Interner,
    pub artists: Interner,
}

impl IdMaps {
    pub fn user_key(&self, user: UserId) -> &str {
        self.users.key(user.0).expect("user id out of range")
    }

    pub fn artist_key(&self, artist: ArtistId) -> &str {
        self.artists.key(artist.0).expect("artist id out of range")
    }

    pub fn user_id(&self, key: &str) -> Option<UserId> {
        self.users.get(key).map(UserId)
    }

    pub fn artist_id(&self, key: &str) -> Option<ArtistId> {
        self.artists.get(key).map(ArtistId)
    }
}

/// All events in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub events: Vec<ListeningEvent>,
}

impl EventLog {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// An event log together with the id maps needed to print it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub log: EventLog,
    pub ids: IdMaps,
}

impl Dataset {
    pub fn push(&mut self, user: &str, artist: &str, timestamp: Timestamp) {
        let user = UserId(self.ids.users.intern(user));
        let artist = ArtistId(self.ids.artists.intern(artist));
        self.log.events.push(ListeningEvent {
            user,
            artist,
            timestamp,
        });
    }

    /// Writes the log in the default five-column layout. Album and track
    /// columns are written as `0`.
    pub fn write_tsv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut out = io::BufWriter::new(out);
        for e in &self.log.events {
            writeln!(
                out,
                "{}\t{}\t0\t0\t{}",
                self.ids.user_key(e.user),
                self.ids.artist_key(e.artist),
                e.timestamp
            )?;
        }
        out.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorPolicy {
    #[default]
    FailFast,
    SkipAndCount,
}

impl FromStr for ErrorPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fail" | "fail-fast" => Ok(ErrorPolicy::FailFast),
            "skip" | "skip-and-count" => Ok(ErrorPolicy::SkipAndCount),
            other => Err(Error::config(
                "onError",
                format!("must be one of fail, skip; got {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Loaded {
    pub dataset: Dataset,
    pub skipped: usize,
}

/// Reads every record from `source`. Blank lines are not records and are ignored.
pub fn load_events<R: Read>(
    source: R,
    schema: &ColumnSchema,
    policy: ErrorPolicy,
) -> Result<Loaded> {
    let mut reader = BufReader::new(source);
    let mut loaded = Loaded::default();
    let mut line = String::new();
    let mut line_no = 0usize;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        let record = line.strip_suffix('\n').unwrap_or(&line);
        if record.trim().is_empty() {
            continue;
        }
        match parse_event_line(record, schema, line_no) {
            Ok(raw) => loaded.dataset.push(raw.user, raw.artist, raw.timestamp),
            Err(err) => match policy {
                ErrorPolicy::FailFast => return Err(err),
                ErrorPolicy::SkipAndCount => {
                    log::debug!("skipping {err}");
                    loaded.skipped += 1;
                }
            },
        }
    }
    Ok(loaded)
}

/// Opens `path`, transparently decompressing gzip.
pub fn open_source(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let mut reader = BufReader::new(file);
    let is_gzip = reader
        .fill_buf()
        .map_err(|e| Error::file(path, e))?
        .starts_with(&[0x1f, 0x8b]);
    if is_gzip {
        Ok(Box::new(MultiGzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

pub fn load_events_file(path: &Path, schema: &ColumnSchema, policy: ErrorPolicy) -> Result<Loaded> {
    let source = open_source(path)?;
    load_events(source, schema, policy).map_err(|err| match err {
        Error::Io(e) => Error::file(path, e),
        other => other,
    })
}

/// Play count and most recent play of one artist within a history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArtistStats {
    pub count: u32,
    pub last_played: Timestamp,
}

/// One user's events in chronological order plus per-artist aggregates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserHistory {
    pub user: UserId,
    /// Sorted by timestamp; equal timestamps keep input order.
    pub events: Vec<(ArtistId, Timestamp)>,
    pub artists: BTreeMap<ArtistId, ArtistStats>,
}

impl UserHistory {
    /// Builds a history, stably sorting `events` by timestamp.
    pub fn new(user: UserId, mut events: Vec<(ArtistId, Timestamp)>) -> Self {
        events.sort_by_key(|&(_, ts)| ts);
        let mut artists: BTreeMap<ArtistId, ArtistStats> = BTreeMap::new();
        for &(artist, ts) in &events {
            let stats = artists.entry(artist).or_insert(ArtistStats {
                count: 0,
                last_played: ts,
            });
            stats.count += 1;
            stats.last_played = stats.last_played.max(ts);
        }
        Self {
            user,
            events,
            artists,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, artist: ArtistId) -> u32 {
        self.artists.get(&artist).map_or(0, |s| s.count)
    }

    pub fn last_played(&self, artist: ArtistId) -> Option<Timestamp> {
        self.artists.get(&artist).map(|s| s.last_played)
    }

    pub fn distinct_artists(&self) -> usize {
        self.artists.len()
    }

    pub fn latest(&self) -> Option<Timestamp> {
        self.events.last().map(|&(_, ts)| ts)
    }
}

/// Groups the log by user. The result is indexed by dense user id.
pub fn build_user_histories(log: &EventLog) -> Vec<UserHistory> {
    let n_users = log
        .events
        .iter()
        .map(|e| e.user.index() + 1)
        .max()
        .unwrap_or(0);
    let mut per_user: Vec<Vec<(ArtistId, Timestamp)>> = vec![Vec::new(); n_users];
    for e in &log.events {
        per_user[e.user.index()].push((e.artist, e.timestamp));
    }
    per_user
        .into_iter()
        .enumerate()
        .map(|(idx, events)| UserHistory::new(UserId(idx as u32), events))
        .collect()
}
