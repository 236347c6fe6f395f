//! Reading and writing vote streams, fan graphs, corpus metadata and clocks.
//!
//! A vote stream is CSV or JSON lines with fields `story_id`, `voter_id`,
//! `timestamp` (epoch seconds or ISO-8601) and an optional `is_fan`. Files
//! whose name ends in `.jsonl` or `.ndjson` are read as JSON lines.
//! Per-story facts that a stream cannot carry (submitter fans, promotion
//! time, observation window) live in a metadata sidecar.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::clock::ActivityClock;
use crate::error::{invalid, Error, Result};
use crate::simulate::{Corpus, SimConfig, StoryTruth};
use crate::types::{sort_votes, StoryRecord, TimeUnit, VoteEvent};
use crate::SCHEMA_VERSION;

const SECONDS_PER_HOUR: f64 = 3600.0;

/// One row of a vote stream, with an absolute timestamp.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteRow {
    pub story_id: String,
    pub voter_id: String,
    /// Seconds since the Unix epoch.
    pub timestamp: f64,
    pub is_fan: Option<bool>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTimestamp {
    Seconds(f64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    story_id: String,
    voter_id: String,
    timestamp: RawTimestamp,
    #[serde(default, deserialize_with = "optional_bool")]
    is_fan: Option<bool>,
}

fn optional_bool<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Option<bool>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum B {
        Bool(bool),
        Text(String),
    }
    match Option::<B>::deserialize(d)? {
        None => Ok(None),
        Some(B::Bool(b)) => Ok(Some(b)),
        Some(B::Text(s)) => match s.trim().to_ascii_lowercase().as_str() {
            "" => Ok(None),
            "true" | "1" | "yes" => Ok(Some(true)),
            "false" | "0" | "no" => Ok(Some(false)),
            other => Err(serde::de::Error::custom(format!("not a boolean: {other:?}"))),
        },
    }
}

/// Parses epoch seconds or an ISO-8601 date-time (UTC when no offset is given).
pub fn parse_timestamp(text: &str) -> Result<f64> {
    let s = text.trim();
    if let Ok(x) = s.parse::<f64>() {
        if x.is_finite() {
            return Ok(x);
        }
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp_micros() as f64 / 1e6);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp_micros() as f64 / 1e6);
        }
    }
    invalid(format!("unrecognized timestamp {text:?}"))
}

impl RawRow {
    fn into_row(self) -> Result<VoteRow> {
        let timestamp = match self.timestamp {
            RawTimestamp::Seconds(x) if x.is_finite() => x,
            RawTimestamp::Seconds(x) => return invalid(format!("non-finite timestamp {x}")),
            RawTimestamp::Text(s) => parse_timestamp(&s)?,
        };
        if self.story_id.is_empty() || self.voter_id.is_empty() {
            return invalid("story_id and voter_id must be non-empty");
        }
        Ok(VoteRow {
            story_id: self.story_id,
            voter_id: self.voter_id,
            timestamp,
            is_fan: self.is_fan,
        })
    }
}

/// Vote stream file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteFormat {
    Csv,
    JsonLines,
}

impl VoteFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson") => VoteFormat::JsonLines,
            _ => VoteFormat::Csv,
        }
    }
}

pub fn read_votes<R: Read>(input: R, format: VoteFormat) -> Result<Vec<VoteRow>> {
    let mut rows = Vec::new();
    match format {
        VoteFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
            for (line, raw) in reader.deserialize::<RawRow>().enumerate() {
                let raw = raw?;
                rows.push(
                    raw.into_row()
                        .map_err(|e| Error::InvalidInput(format!("row {}: {e}", line + 2)))?,
                );
            }
        }
        VoteFormat::JsonLines => {
            for (line, text) in BufReader::new(input).lines().enumerate() {
                let text = text?;
                if text.trim().is_empty() {
                    continue;
                }
                let raw: RawRow = serde_json::from_str(&text)?;
                rows.push(
                    raw.into_row()
                        .map_err(|e| Error::InvalidInput(format!("line {}: {e}", line + 1)))?,
                );
            }
        }
    }
    Ok(rows)
}

pub fn read_votes_file(path: &Path) -> Result<Vec<VoteRow>> {
    read_votes(std::fs::File::open(path)?, VoteFormat::from_path(path))
}

pub fn write_votes<W: Write>(rows: &[VoteRow], out: W, format: VoteFormat) -> Result<()> {
    match format {
        VoteFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["story_id", "voter_id", "timestamp", "is_fan"])?;
            for r in rows {
                w.write_record([
                    r.story_id.as_str(),
                    r.voter_id.as_str(),
                    &r.timestamp.to_string(),
                    r.is_fan.map_or("", |b| if b { "true" } else { "false" }),
                ])?;
            }
            w.flush()?;
        }
        VoteFormat::JsonLines => {
            let mut out = std::io::BufWriter::new(out);
            for r in rows {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

/// Flattens records into absolute-time rows, one hour of story time per 3600 s.
pub fn records_to_rows(records: &[StoryRecord]) -> Vec<VoteRow> {
    records
        .iter()
        .flat_map(|r| {
            r.votes.iter().map(move |v| VoteRow {
                story_id: r.story_id.clone(),
                voter_id: v.voter_id.clone(),
                timestamp: r.submitted_at + v.time * SECONDS_PER_HOUR,
                is_fan: Some(v.is_fan),
            })
        })
        .collect()
}

/// Who is a fan of whom: `fan_id` watches `friend_id`.
#[derive(Debug, Clone, Default)]
pub struct FanGraph {
    fans_of: HashMap<String, HashSet<String>>,
}

impl FanGraph {
    pub fn from_edges<I: IntoIterator<Item = (String, String)>>(edges: I) -> Self {
        let mut fans_of: HashMap<String, HashSet<String>> = HashMap::new();
        for (fan, friend) in edges {
            fans_of.entry(friend).or_default().insert(fan);
        }
        Self { fans_of }
    }

    /// Reads a `fan_id,friend_id` CSV edge list.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Edge {
            fan_id: String,
            friend_id: String,
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let edges = reader
            .deserialize::<Edge>()
            .map(|e| e.map(|e| (e.fan_id, e.friend_id)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(Self::from_edges(edges))
    }

    pub fn fan_count(&self, user: &str) -> u64 {
        self.fans_of.get(user).map_or(0, |s| s.len() as u64)
    }

    pub fn is_fan_of(&self, fan: &str, friend: &str) -> bool {
        self.fans_of.get(friend).is_some_and(|s| s.contains(fan))
    }
}

/// Facts about a story that a vote stream does not carry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoryMeta {
    pub story_id: String,
    /// Seconds since the Unix epoch; defaults to the first vote.
    #[serde(default)]
    pub submitted_at: Option<f64>,
    /// Defaults to the submitter's fan count in the fan graph, else 0.
    #[serde(default)]
    pub submitter_fans: Option<u64>,
    /// Hours after submission.
    #[serde(default)]
    pub promotion_time: Option<f64>,
    #[serde(default)]
    pub final_votes: Option<u64>,
    /// Hours after submission.
    #[serde(default)]
    pub observed_until: Option<f64>,
}

/// Sidecar describing a vote stream: per-story metadata and, for simulated
/// corpora, the generating configuration and hidden parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusMetadata {
    pub schema_version: u32,
    /// Axis of story-relative hours in the stream.
    pub time_unit: TimeUnit,
    pub stories: Vec<StoryMeta>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub truth: Vec<StoryTruth>,
}

impl CorpusMetadata {
    pub fn for_corpus(corpus: &Corpus, config: Option<&SimConfig>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            time_unit: TimeUnit::DiggHours,
            stories: corpus
                .stories
                .iter()
                .map(|r| StoryMeta {
                    story_id: r.story_id.clone(),
                    submitted_at: Some(r.submitted_at),
                    submitter_fans: Some(r.submitter_fans),
                    promotion_time: r.promotion_time,
                    final_votes: r.final_votes,
                    observed_until: r.observed_until,
                })
                .collect(),
            config: config.cloned(),
            truth: corpus.truth.clone(),
        }
    }
}

pub fn check_schema_version(found: u32) -> Result<()> {
    if found != SCHEMA_VERSION {
        return invalid(format!("unsupported schema version {found}, expected {SCHEMA_VERSION}"));
    }
    Ok(())
}

pub fn read_metadata<R: Read>(input: R) -> Result<CorpusMetadata> {
    let meta: CorpusMetadata = serde_json::from_reader(BufReader::new(input))?;
    check_schema_version(meta.schema_version)?;
    Ok(meta)
}

pub fn write_json<T: Serialize, W: Write>(value: &T, out: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Groups rows into story records.
///
/// Story-relative times are `(timestamp - submitted_at) / 3600`. Fan labels
/// come from the rows when present; otherwise, with a fan graph, a vote is a
/// fan vote when its voter is a fan of any earlier voter. Without either, it
/// is a non-fan vote. Stories are returned sorted by id.
pub fn assemble_records(rows: &[VoteRow], meta: Option<&CorpusMetadata>, graph: Option<&FanGraph>) -> Result<Vec<StoryRecord>> {
    if rows.is_empty() {
        return invalid("vote stream is empty");
    }
    let mut by_story: BTreeMap<&str, Vec<&VoteRow>> = BTreeMap::new();
    for r in rows {
        by_story.entry(&r.story_id).or_default().push(r);
    }
    let meta_by_id: HashMap<&str, &StoryMeta> = meta
        .map(|m| m.stories.iter().map(|s| (s.story_id.as_str(), s)).collect())
        .unwrap_or_default();
    let mut out = Vec::with_capacity(by_story.len());
    for (id, mut story_rows) in by_story {
        story_rows.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp).then_with(|| a.voter_id.cmp(&b.voter_id)));
        let m = meta_by_id.get(id);
        let first = story_rows[0];
        let submitted_at = m.and_then(|m| m.submitted_at).unwrap_or(first.timestamp);
        if first.timestamp < submitted_at {
            return invalid(format!("story {id}: vote precedes the submission time"));
        }
        let mut seen: Vec<&str> = Vec::with_capacity(story_rows.len());
        let mut votes = Vec::with_capacity(story_rows.len());
        for (k, r) in story_rows.iter().enumerate() {
            let is_fan = if k == 0 {
                false
            } else {
                match (r.is_fan, graph) {
                    (Some(b), _) => b,
                    (None, Some(g)) => seen.iter().any(|p| g.is_fan_of(&r.voter_id, p)),
                    (None, None) => false,
                }
            };
            seen.push(&r.voter_id);
            votes.push(VoteEvent::new(id, r.voter_id.clone(), (r.timestamp - submitted_at) / SECONDS_PER_HOUR, is_fan));
        }
        sort_votes(&mut votes);
        let submitter_fans = m
            .and_then(|m| m.submitter_fans)
            .or_else(|| graph.map(|g| g.fan_count(&first.voter_id)))
            .unwrap_or(0);
        let mut record = StoryRecord::new(
            id,
            submitted_at,
            submitter_fans,
            votes,
            m.and_then(|m| m.promotion_time),
            m.and_then(|m| m.final_votes),
        )?;
        record.observed_until = m.and_then(|m| m.observed_until);
        out.push(record);
    }
    Ok(out)
}

/// Re-expresses story-relative wall hours in Digg hours of `clock`, whose
/// wall axis is hours since the Unix epoch.
pub fn to_digg_hours(record: &StoryRecord, clock: &ActivityClock) -> StoryRecord {
    let origin = record.submitted_at / SECONDS_PER_HOUR;
    let map = |t: f64| clock.elapsed(origin, origin + t);
    let mut out = record.clone();
    for v in &mut out.votes {
        v.time = map(v.time).max(0.0);
    }
    out.promotion_time = record.promotion_time.map(map);
    out.observed_until = record.observed_until.map(map);
    out
}

/// Serialized activity clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClockFile {
    pub schema_version: u32,
    /// Wall times are hours since the Unix epoch.
    pub clock: ActivityClock,
}

pub fn read_clock<R: Read>(input: R) -> Result<ActivityClock> {
    let file: ClockFile = serde_json::from_reader(BufReader::new(input))?;
    check_schema_version(file.schema_version)?;
    Ok(file.clock)
}

pub fn write_clock<W: Write>(clock: &ActivityClock, out: W) -> Result<()> {
    write_json(
        &ClockFile {
            schema_version: SCHEMA_VERSION,
            clock: clock.clone(),
        },
        out,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn timestamps_in_both_notations() {
        assert_eq!(parse_timestamp("1149120000").unwrap(), 1_149_120_000.0);
        assert_eq!(parse_timestamp("2006-06-01T00:00:00Z").unwrap(), 1_149_120_000.0);
        assert_eq!(parse_timestamp("2006-06-01 00:00:30").unwrap(), 1_149_120_030.0);
        assert_eq!(parse_timestamp("2006-06-01T02:00:00+02:00").unwrap(), 1_149_120_000.0);
        assert!(parse_timestamp("yesterday").is_err());
    }

    #[test]
    fn csv_with_mixed_timestamps_and_missing_labels() {
        let text = "story_id,voter_id,timestamp,is_fan\n\
                    a,u1,2006-06-01T00:00:00Z,\n\
                    a,u2,1149123600,true\n\
                    b,u3,1149120000,\n";
        let rows = read_votes(text.as_bytes(), VoteFormat::Csv).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].is_fan, Some(true));
        let records = assemble_records(&rows, None, None).unwrap();
        assert_eq!(records.len(), 2);
        assert_relative_eq!(records[0].votes[1].time, 1.0);
        assert!(records[0].votes[1].is_fan);
    }

    #[test]
    fn csv_without_fan_column() {
        let text = "story_id,voter_id,timestamp\na,u1,0\na,u2,3600\n";
        let rows = read_votes(text.as_bytes(), VoteFormat::Csv).unwrap();
        assert_eq!(rows[1].is_fan, None);
    }

    #[test]
    fn fan_graph_labels_votes_and_counts_submitter_fans() {
        let rows = vec![
            VoteRow { story_id: "s".into(), voter_id: "sub".into(), timestamp: 0.0, is_fan: None },
            VoteRow { story_id: "s".into(), voter_id: "x".into(), timestamp: 60.0, is_fan: None },
            VoteRow { story_id: "s".into(), voter_id: "y".into(), timestamp: 120.0, is_fan: None },
            VoteRow { story_id: "s".into(), voter_id: "z".into(), timestamp: 180.0, is_fan: None },
        ];
        let graph = FanGraph::read_csv("fan_id,friend_id\nx,sub\nw,sub\nz,y\ny,q\n".as_bytes()).unwrap();
        let r = &assemble_records(&rows, None, Some(&graph)).unwrap()[0];
        assert_eq!(r.submitter_fans, 2);
        let labels: Vec<bool> = r.votes.iter().map(|v| v.is_fan).collect();
        assert_eq!(labels, vec![false, true, false, true]);
    }

    #[test]
    fn round_trip_through_both_formats() {
        let rows = vec![
            VoteRow { story_id: "a".into(), voter_id: "u1".into(), timestamp: 10.5, is_fan: Some(false) },
            VoteRow { story_id: "a".into(), voter_id: "u2".into(), timestamp: 99.25, is_fan: Some(true) },
        ];
        for format in [VoteFormat::Csv, VoteFormat::JsonLines] {
            let mut buf = Vec::new();
            write_votes(&rows, &mut buf, format).unwrap();
            assert_eq!(read_votes(buf.as_slice(), format).unwrap(), rows);
        }
    }

    #[test]
    fn empty_stream_is_rejected() {
        let rows = read_votes("story_id,voter_id,timestamp\n".as_bytes(), VoteFormat::Csv).unwrap();
        assert!(assemble_records(&rows, None, None).is_err());
    }

    #[test]
    fn unknown_metadata_keys_and_versions_are_rejected() {
        let bad_key = r#"{"schema_version":1,"time_unit":"digg_hours","stories":[],"extra":1}"#;
        assert!(read_metadata(bad_key.as_bytes()).is_err());
        let bad_version = r#"{"schema_version":99,"time_unit":"digg_hours","stories":[]}"#;
        assert!(read_metadata(bad_version.as_bytes()).is_err());
    }

    #[test]
    fn clock_round_trip() {
        let times: Vec<f64> = (0..50).map(|i| 400_000.0 + i as f64 * 0.01).collect();
        let clock = ActivityClock::from_votes(&times, 2500.0).unwrap();
        let mut buf = Vec::new();
        write_clock(&clock, &mut buf).unwrap();
        assert_eq!(read_clock(buf.as_slice()).unwrap(), clock);
    }
}
