//! Reading inputs and writing outputs atomically.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use tempfile::NamedTempFile;
use vote_dynamics::io::{
    assemble_records, read_clock, read_metadata, read_votes, to_digg_hours, CorpusMetadata, FanGraph, VoteFormat, VoteRow,
};
use vote_dynamics::{GlobalParamsV2, StoryRecord, TimeUnit, SCHEMA_VERSION};

use crate::error::{CliError, CliResult};

fn open(path: &Path) -> CliResult<File> {
    File::open(path).map_err(|e| CliError::input(format!("cannot open {}: {e}", path.display())))
}

fn context<T>(path: &Path, r: vote_dynamics::Result<T>) -> CliResult<T> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Writes `path` through a temporary file in the same directory, then renames it.
pub fn write_atomic<F>(path: &Path, fill: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> vote_dynamics::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))?;
    let io_err = |e: std::io::Error| CliError::input(format!("cannot write {}: {e}", path.display()));
    let tmp = NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        context(path, fill(&mut out))?;
        out.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_atomic(path, |out| vote_dynamics::io::write_json(value, out))
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_reader(std::io::BufReader::new(open(path)?))
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn read_rows(path: &Path) -> CliResult<Vec<VoteRow>> {
    context(path, read_votes(open(path)?, VoteFormat::from_path(path)))
}

/// Where the vote stream and its companions live.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub votes: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub fan_graph: Option<PathBuf>,
    pub clock: Option<PathBuf>,
}

/// Story records in Digg hours, with the sidecar when one was given.
pub struct Loaded {
    pub rows: Vec<VoteRow>,
    pub records: Vec<StoryRecord>,
    pub metadata: Option<CorpusMetadata>,
}

pub fn load_records(inputs: &Inputs) -> CliResult<Loaded> {
    let votes = inputs.votes.as_deref().ok_or_else(|| CliError::input("no vote file given (--votes)"))?;
    let rows = read_rows(votes)?;
    let metadata = match &inputs.metadata {
        Some(p) => Some(context(p, read_metadata(open(p)?))?),
        None => None,
    };
    let graph = match &inputs.fan_graph {
        Some(p) => Some(context(p, FanGraph::read_csv(open(p)?))?),
        None => None,
    };
    let mut records = context(votes, assemble_records(&rows, metadata.as_ref(), graph.as_ref()))?;
    let unit = metadata.as_ref().map_or(TimeUnit::WallHours, |m| m.time_unit);
    match (&inputs.clock, unit) {
        (Some(p), TimeUnit::WallHours) => {
            let clock = context(p, read_clock(open(p)?))?;
            records = records.iter().map(|r| to_digg_hours(r, &clock)).collect();
        }
        (Some(_), TimeUnit::DiggHours) => log::warn!("stream is already in Digg hours; ignoring the clock"),
        (None, TimeUnit::WallHours) => log::warn!("no clock given; treating wall hours as Digg hours"),
        (None, TimeUnit::DiggHours) => {}
    }
    log::info!("loaded {} votes on {} stories", rows.len(), records.len());
    Ok(Loaded { rows, records, metadata })
}

/// Site-wide parameters from a fit report or a bare parameter object.
pub fn read_params(path: &Path) -> CliResult<GlobalParamsV2> {
    let value: serde_json::Value = read_json_file(path)?;
    let bad = |e: serde_json::Error| CliError::input(format!("{}: {e}", path.display()));
    let params: GlobalParamsV2 = match value.get("global") {
        Some(global) => {
            if let Some(v) = value.get("schema_version").and_then(|v| v.as_u64()) {
                if v != SCHEMA_VERSION as u64 {
                    return Err(CliError::input(format!("{}: unsupported schema version {v}", path.display())));
                }
            }
            let inner = global.get("params").unwrap_or(global);
            serde_json::from_value(inner.clone()).map_err(bad)?
        }
        None => serde_json::from_value(value).map_err(bad)?,
    };
    context(path, params.validate())?;
    Ok(params)
}
