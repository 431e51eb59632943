//! Trace CSV and catalog JSON. The first line of a trace file is a `#`
//! comment carrying a JSON header (seed, shape and split).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ContentCatalog, Partition, RequestTrace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TraceHeader {
    seed: u64,
    users: usize,
    num_files: usize,
    days: usize,
    requests_per_day: usize,
    partition: Partition,
}

pub fn write_trace_csv(trace: &RequestTrace, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = TraceHeader {
        seed: trace.seed,
        users: trace.num_users(),
        num_files: trace.num_files,
        days: trace.days,
        requests_per_day: trace.requests_per_day,
        partition: trace.partition.clone(),
    };
    writeln!(out, "# {}", serde_json::to_string(&header)?).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user", "mini_slot", "file"])?;
    for (u, requests) in trace.requests.iter().enumerate() {
        for (t, f) in requests.iter().enumerate() {
            w.serialize((u, t, f))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Reads a trace written by [`write_trace_csv`]. Day genres are not stored
/// in the CSV and come back empty.
pub fn read_trace_csv(path: &Path) -> Result<RequestTrace> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| Error::io(path, e))?;
    let header: TraceHeader = serde_json::from_str(
        first
            .strip_prefix("# ")
            .ok_or_else(|| Error::Config(format!("{}: missing trace header", path.display())))?,
    )?;
    let len = header.days * header.requests_per_day;
    let mut requests = vec![vec![usize::MAX; len]; header.users];
    let mut r = csv::Reader::from_reader(reader);
    for row in r.deserialize() {
        let (u, t, f): (usize, usize, usize) = row?;
        if u >= header.users || t >= len || f >= header.num_files {
            return Err(Error::InvalidDimension(format!("row ({u}, {t}, {f}) out of range")));
        }
        requests[u][t] = f;
    }
    if requests.iter().flatten().any(|&f| f == usize::MAX) {
        return Err(Error::InvalidDimension("trace has missing (user, mini-slot) rows".into()));
    }
    Ok(RequestTrace {
        seed: header.seed,
        num_files: header.num_files,
        requests_per_day: header.requests_per_day,
        days: header.days,
        requests,
        day_genre: Vec::new(),
        partition: header.partition,
    })
}

pub fn write_catalog_json(catalog: &ContentCatalog, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), catalog)?;
    Ok(())
}

pub fn read_catalog_json(path: &Path) -> Result<ContentCatalog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}
