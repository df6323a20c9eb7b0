use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::StreamRecord;
use crate::pathsel::Circuit;
use crate::{Error, Result};

pub const RECORDS_HEADER: &str = "epoch,client,guard,middle,exit,dest,file_kib,ttlb_s";

#[derive(Serialize, Deserialize)]
struct Row {
    epoch: usize,
    client: u32,
    guard: u32,
    middle: u32,
    exit: u32,
    dest: u32,
    file_kib: u32,
    ttlb_s: f64,
}

pub fn save_records(path: &Path, records: &[StreamRecord]) -> Result<()> {
    let mut buf = Vec::with_capacity(records.len() * 48);
    writeln!(buf, "{RECORDS_HEADER}").map_err(|e| Error::io(path, e))?;
    for r in records {
        writeln!(
            buf,
            "{},{},{},{},{},{},{},{}",
            r.epoch,
            r.client,
            r.circuit.guard,
            r.circuit.middle,
            r.circuit.exit,
            r.destination,
            r.file_kib,
            r.ttlb_s
        )
        .map_err(|e| Error::io(path, e))?;
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_records(path: &Path) -> Result<Vec<StreamRecord>> {
    let file = path.display().to_string();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Validation(format!("{other:?}")),
    })?;
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != RECORDS_HEADER {
        return Err(Error::Parse {
            file,
            line: 1,
            message: format!("expected header `{RECORDS_HEADER}`"),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            file: file.clone(),
            line: i + 2,
            message: e.to_string(),
        })?;
        if row.ttlb_s.is_nan() || row.ttlb_s <= 0.0 {
            return Err(Error::Parse {
                file: file.clone(),
                line: i + 2,
                message: format!("ttlb_s must be positive, got {}", row.ttlb_s),
            });
        }
        out.push(StreamRecord {
            epoch: row.epoch,
            client: row.client,
            circuit: Circuit::new(row.guard, row.middle, row.exit),
            destination: row.dest,
            file_kib: row.file_kib,
            ttlb_s: row.ttlb_s,
        });
    }
    Ok(out)
}
