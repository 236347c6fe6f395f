use vote_dynamics::clock::ActivityClock;
use vote_dynamics::io::{
    assemble_records, read_clock, read_metadata, read_votes, records_to_rows, to_digg_hours, write_clock, write_json,
    write_votes, CorpusMetadata, FanGraph, VoteFormat, VoteRow,
};
use vote_dynamics::predict::{default_methods, evaluate, split_calibration, PredictionConfig};
use vote_dynamics::simulate::{make_corpus, SimConfig};
use vote_dynamics::StoryRecord;

fn assert_same_records(a: &[StoryRecord], b: &[StoryRecord]) {
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.story_id, y.story_id);
        assert_eq!(x.submitter_fans, y.submitter_fans);
        assert_eq!(x.promotion_time, y.promotion_time);
        assert_eq!(x.final_votes, y.final_votes);
        assert_eq!(x.observed_until, y.observed_until);
        assert_eq!(x.votes.len(), y.votes.len());
        for (u, v) in x.votes.iter().zip(&y.votes) {
            assert_eq!(u.is_fan, v.is_fan);
            assert!((u.time - v.time).abs() < 1e-6, "{} vs {}", u.time, v.time);
        }
    }
}

#[test]
fn corpus_survives_both_vote_formats() {
    let config = SimConfig::paper(15, 40);
    let corpus = make_corpus(&config).unwrap();
    let meta = CorpusMetadata::for_corpus(&corpus, Some(&config));
    let mut meta_json = Vec::new();
    write_json(&meta, &mut meta_json).unwrap();
    let meta_back = read_metadata(meta_json.as_slice()).unwrap();
    assert_eq!(meta_back, meta);

    for format in [VoteFormat::Csv, VoteFormat::JsonLines] {
        let mut buf = Vec::new();
        write_votes(&records_to_rows(&corpus.stories), &mut buf, format).unwrap();
        let rows = read_votes(buf.as_slice(), format).unwrap();
        let records = assemble_records(&rows, Some(&meta_back), None).unwrap();
        assert_same_records(&records, &corpus.stories);
    }
}

#[test]
fn fan_graph_labels_votes_without_flags() {
    let rows: Vec<VoteRow> = [("alice", 0.0), ("bob", 60.0), ("carol", 120.0), ("dave", 300.0)]
        .iter()
        .map(|&(u, t)| VoteRow {
            story_id: "x".into(),
            voter_id: u.into(),
            timestamp: 1_700_000_000.0 + t,
            is_fan: None,
        })
        .collect();
    let graph = FanGraph::read_csv("fan_id,friend_id\nbob,alice\ndave,carol\nerin,alice\n".as_bytes()).unwrap();
    let records = assemble_records(&rows, None, Some(&graph)).unwrap();
    let r = &records[0];
    assert_eq!(r.submitter_fans, 2);
    assert_eq!(r.votes.iter().map(|v| v.is_fan).collect::<Vec<_>>(), vec![false, true, false, true]);
    assert!((r.votes[3].time - 300.0 / 3600.0).abs() < 1e-12);
}

#[test]
fn unknown_metadata_fields_and_versions_are_rejected() {
    let bad_key = r#"{"schema_version":1,"time_unit":"digg_hours","stories":[],"extra":1}"#;
    assert!(read_metadata(bad_key.as_bytes()).is_err());
    let bad_version = r#"{"schema_version":99,"time_unit":"digg_hours","stories":[]}"#;
    assert!(read_metadata(bad_version.as_bytes()).is_err());
    assert!(assemble_records(&[], None, None).is_err());
}

#[test]
fn clock_file_round_trip_and_rescaling() {
    // votes every 36 s for the first hour, then every 72 s
    let mut times: Vec<f64> = (0..100).map(|i| 470_000.0 + i as f64 * 0.01).collect();
    times.extend((0..50).map(|i| 471.0e3 + i as f64 * 0.02));
    let clock = ActivityClock::from_votes(&times, 100.0).unwrap();
    let mut buf = Vec::new();
    write_clock(&clock, &mut buf).unwrap();
    let back = read_clock(buf.as_slice()).unwrap();
    assert_eq!(back, clock);

    let rows = vec![
        VoteRow {
            story_id: "y".into(),
            voter_id: "a".into(),
            timestamp: 470_000.0 * 3600.0,
            is_fan: Some(false),
        },
        VoteRow {
            story_id: "y".into(),
            voter_id: "b".into(),
            timestamp: 470_000.5 * 3600.0,
            is_fan: Some(false),
        },
    ];
    let rec = &assemble_records(&rows, None, None).unwrap()[0];
    let digg = to_digg_hours(rec, &clock);
    // half an hour at the busy rate is half a Digg hour
    assert!((digg.votes[1].time - 0.5).abs() < 1e-9, "{}", digg.votes[1].time);
}

#[test]
fn evaluation_report_is_complete() {
    let config = SimConfig::paper(80, 41);
    let corpus = make_corpus(&config).unwrap();
    let (calibration, evaluation) = split_calibration(&corpus.stories, 0.4, 7);
    let pc = PredictionConfig::default();
    let methods = default_methods(&pc);
    let report = evaluate(&evaluation, &calibration, &config.global, &pc, &methods).unwrap();
    assert_eq!(report.rows.len() + report.skipped, evaluation.len());
    for m in &methods {
        let s = report.summary(&m.name()).unwrap();
        assert_eq!(s.n + s.unavailable, report.rows.len());
        assert!((0.0..=1.0).contains(&s.error_rate));
    }
    let mut csv = Vec::new();
    report.write_rows_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), report.rows.len() + 1);
    assert!(text.lines().next().unwrap().contains("baseline"));
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("\"schema_version\":1"));
}

#[test]
fn prediction_config_rejects_unknown_keys() {
    assert!(serde_json::from_str::<PredictionConfig>(r#"{"vote_window": 12}"#).is_ok());
    assert!(serde_json::from_str::<PredictionConfig>(r#"{"window": 12}"#).is_err());
    let bad = PredictionConfig {
        vote_window: 0,
        ..PredictionConfig::default()
    };
    assert!(bad.validate().is_err());
}
