//! CSV persistence for relay and endpoint tables.

use std::collections::HashSet;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{Endpoint, Relay};
use crate::{Error, Result};

pub const RELAYS_FILE: &str = "relays.csv";
pub const ENDPOINTS_FILE: &str = "endpoints.csv";
pub const TOPOLOGY_FILE: &str = "topology.json";

pub const RELAYS_HEADER: [&str; 9] = [
    "id",
    "nickname",
    "bandwidth",
    "asn",
    "country",
    "lat",
    "lon",
    "is_guard",
    "is_exit",
];
pub const ENDPOINTS_HEADER: [&str; 6] = ["id", "kind", "asn", "country", "lat", "lon"];

fn read_table<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<(usize, T)>> {
    let file = path.display().to_string();
    let parse_err = |line: usize, message: String| Error::Parse {
        file: file.clone(),
        line,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(1, format!("{other:?}")),
        })?;
    let found = rdr
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(parse_err(
            1,
            format!(
                "header is `{}`, expected `{}`",
                found.iter().collect::<Vec<_>>().join(","),
                header.join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line() as usize;
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => return Err(parse_err(line, e.to_string())),
        }
        let line = record.position().map_or(line, |p| p.line() as usize);
        let row: T = record
            .deserialize(Some(&found))
            .map_err(|e| parse_err(line, e.to_string()))?;
        out.push((line, row));
    }
    Ok(out)
}

fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Validation(format!("{other:?}")),
    })?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn check_unique(file: &Path, ids: impl Iterator<Item = (usize, u32)>) -> Result<()> {
    let mut seen = HashSet::new();
    for (line, id) in ids {
        if !seen.insert(id) {
            return Err(Error::Validation(format!(
                "{}: duplicate id {id} at line {line}",
                file.display()
            )));
        }
    }
    Ok(())
}

pub fn load_relay_table(path: &Path) -> Result<Vec<Relay>> {
    let rows: Vec<(usize, Relay)> = read_table(path, &RELAYS_HEADER)?;
    for (line, r) in &rows {
        r.validate().map_err(|e| Error::Parse {
            file: path.display().to_string(),
            line: *line,
            message: e.to_string(),
        })?;
    }
    check_unique(path, rows.iter().map(|(l, r)| (*l, r.id)))?;
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn save_relay_table(path: &Path, relays: &[Relay]) -> Result<()> {
    if relays.is_empty() {
        return std::fs::write(path, format!("{}\n", RELAYS_HEADER.join(",")))
            .map_err(|e| Error::io(path, e));
    }
    write_table(path, relays)
}

pub fn load_endpoints(path: &Path) -> Result<Vec<Endpoint>> {
    let rows: Vec<(usize, Endpoint)> = read_table(path, &ENDPOINTS_HEADER)?;
    for (line, e) in &rows {
        super::geo::check_coords(e.lat, e.lon).map_err(|m| Error::Parse {
            file: path.display().to_string(),
            line: *line,
            message: m,
        })?;
    }
    check_unique(path, rows.iter().map(|(l, e)| (*l, e.id)))?;
    Ok(rows.into_iter().map(|(_, e)| e).collect())
}

pub fn save_endpoints(path: &Path, endpoints: &[Endpoint]) -> Result<()> {
    if endpoints.is_empty() {
        return std::fs::write(path, format!("{}\n", ENDPOINTS_HEADER.join(",")))
            .map_err(|e| Error::io(path, e));
    }
    write_table(path, endpoints)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{generate_network, NetworkConfig, NetworkModel};

    fn write(dir: &Path, body: &str) -> std::path::PathBuf {
        let p = dir.join(RELAYS_FILE);
        std::fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn header_only_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), &format!("{}\n", RELAYS_HEADER.join(",")));
        assert!(load_relay_table(&p).unwrap().is_empty());
    }

    #[test]
    fn malformed_row_names_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "id,nickname,bandwidth,asn,country,lat,lon,is_guard,is_exit\n\
             0,a,500,20001,DE,50.0,8.0,true,false\n\
             1,b,lots,20001,DE,50.0,8.0,true,false\n",
        );
        match load_relay_table(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn zero_bandwidth_and_duplicates_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "id,nickname,bandwidth,asn,country,lat,lon,is_guard,is_exit\n\
             0,a,0,20001,DE,50.0,8.0,true,false\n",
        );
        assert!(load_relay_table(&p).is_err());
        let p = write(
            dir.path(),
            "id,nickname,bandwidth,asn,country,lat,lon,is_guard,is_exit\n\
             0,a,10,20001,DE,50.0,8.0,true,false\n\
             0,b,10,20001,DE,50.0,8.0,true,false\n",
        );
        assert!(matches!(load_relay_table(&p), Err(Error::Validation(_))));
    }

    #[test]
    fn bad_country_and_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "id,nickname,bandwidth,asn,country,lat,lon,is_guard,is_exit\n\
             0,a,10,20001,de,50.0,8.0,true,false\n",
        );
        assert!(matches!(
            load_relay_table(&p),
            Err(Error::Parse { line: 2, .. })
        ));
        let p = write(dir.path(), "id,bw\n0,1\n");
        assert!(matches!(
            load_relay_table(&p),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn generated_world_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_network(&NetworkConfig::new(400, 1000, 70, 1)).unwrap();
        m.save_dir(dir.path()).unwrap();
        let back = NetworkModel::load_dir(dir.path()).unwrap();
        assert_eq!(m, back);
    }
}
