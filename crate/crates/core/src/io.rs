//! Trajectory CSV reading and writing.
//!
//! The format is UTF-8 with the header `object_id,timestamp,x,y`. Rows are
//! grouped by object and sorted by timestamp within each object.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{validate_trajectory, TrackPoint, Trajectory};

pub const TRAJECTORY_HEADER: [&str; 4] = ["object_id", "timestamp", "x", "y"];

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    object_id: String,
    timestamp: f64,
    x: f64,
    y: f64,
}

pub fn read_trajectories<R: Read>(reader: R) -> Result<Vec<Trajectory>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Ok(Vec::new());
    }
    if headers.iter().ne(TRAJECTORY_HEADER) {
        return Err(Error::Config(format!(
            "trajectory CSV header must be `{}`, got `{}`",
            TRAJECTORY_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut groups: Vec<Vec<TrackPoint>> = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        let p = TrackPoint::new(row.object_id, row.timestamp, row.x, row.y);
        match groups.last_mut() {
            Some(g) if g[0].object_id == p.object_id => g.push(p),
            _ => {
                if groups.iter().any(|g| g[0].object_id == p.object_id) {
                    return Err(Error::Config(format!(
                        "rows for object `{}` are not contiguous",
                        p.object_id
                    )));
                }
                groups.push(vec![p]);
            }
        }
    }
    groups.into_iter().map(validate_trajectory).collect()
}

pub fn read_trajectories_file(path: impl AsRef<Path>) -> Result<Vec<Trajectory>> {
    read_trajectories(std::fs::File::open(path)?)
}

pub fn write_trajectories<W: Write>(writer: W, trajectories: &[Trajectory]) -> Result<()> {
    write_points(writer, trajectories.iter().flat_map(|t| t.points()))
}

pub fn write_points<'a, W: Write>(writer: W, points: impl IntoIterator<Item = &'a TrackPoint>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(TRAJECTORY_HEADER)?;
    for p in points {
        w.serialize(Row {
            object_id: p.object_id.clone(),
            timestamp: p.timestamp,
            x: p.x,
            y: p.y,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectories_file(path: impl AsRef<Path>, trajectories: &[Trajectory]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_trajectories(std::io::BufWriter::new(file), trajectories)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = validate_trajectory(vec![
            TrackPoint::new("a", 0.0, 0.1, -2.5),
            TrackPoint::new("a", 1.0, 1.0 / 3.0, 7.0),
        ])
        .unwrap();
        let u = validate_trajectory(vec![TrackPoint::new("b", 0.5, 1e-300, 3.0)]).unwrap();
        let mut buf = Vec::new();
        write_trajectories(&mut buf, &[t.clone(), u.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("object_id,timestamp,x,y\n"));
        let back = read_trajectories(buf.as_slice()).unwrap();
        assert_eq!(back, vec![t, u]);
    }

    #[test]
    fn rejects_bad_header_and_interleaving() {
        let bad = "id,timestamp,x,y\n1,0,0,0\n";
        assert!(read_trajectories(bad.as_bytes()).is_err());
        let interleaved = "object_id,timestamp,x,y\n1,0,0,0\n2,0,0,0\n1,1,0,0\n";
        assert!(read_trajectories(interleaved.as_bytes()).is_err());
        let unsorted = "object_id,timestamp,x,y\n1,1,0,0\n1,0,0,0\n";
        assert!(matches!(
            read_trajectories(unsorted.as_bytes()),
            Err(Error::NonMonotonicTimestamps { .. })
        ));
    }

    #[test]
    fn empty_body_gives_no_trajectories() {
        let text = "object_id,timestamp,x,y\n";
        assert!(read_trajectories(text.as_bytes()).unwrap().is_empty());
    }
}
