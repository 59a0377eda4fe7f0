//! Polygon input, atomic output, CSV exports.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom2d::Point2;
use crate::riesz::RieszMeasure;
use crate::skeleton::Skeleton;
use crate::verify::ConvexityReport;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("vertex list: {0}")]
    VertexList(String),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// `x1,y1,x2,y2,...`; whitespace is ignored.
pub fn parse_vertex_list(text: &str) -> Result<Vec<Point2>, IoError> {
    let values = text
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>().map_err(|e| IoError::VertexList(format!("{t:?}: {e}")))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    if values.len() % 2 != 0 {
        return Err(IoError::VertexList(format!(
            "{} numbers do not pair up into coordinates",
            values.len()
        )));
    }
    Ok(values.chunks(2).map(|c| Point2::new(c[0], c[1])).collect())
}

#[derive(Deserialize)]
struct PolygonFile {
    vertices: Vec<[f64; 2]>,
}

/// Reads `{"vertices": [[x, y], ...]}`.
pub fn read_vertices_json(path: &Path) -> Result<Vec<Point2>, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.to_owned(),
        source,
    })?;
    let file: PolygonFile = serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.to_owned(),
        source,
    })?;
    Ok(file.vertices.iter().map(|&[x, y]| Point2::new(x, y)).collect())
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let file_err = |source| IoError::File {
        path: path.to_owned(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(file_err)?;
    tmp.write_all(bytes).map_err(file_err)?;
    tmp.as_file().sync_all().map_err(file_err)?;
    tmp.persist(path).map_err(|e| file_err(e.error))?;
    Ok(())
}

pub fn write_json_atomic(path: &Path, value: &impl Serialize) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_owned(),
        source,
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), IoError> {
    let csv_err = |source| IoError::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
    write_atomic(path, &bytes)
}

#[derive(Serialize)]
struct RidgeRow {
    arc: usize,
    i: usize,
    j: usize,
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct MeasureRow {
    x: f64,
    y: f64,
    weight: f64,
    density: f64,
    i: usize,
    j: usize,
}

#[derive(Serialize)]
struct LevelRow {
    level: f64,
    x: f64,
    y: f64,
}

/// Path `<prefix>_<name>.csv`.
pub fn csv_path(prefix: &Path, name: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(format!("_{name}.csv"));
    PathBuf::from(s)
}

/// One row per ridge point: arc index, tying pair, coordinates.
pub fn write_ridges_csv(path: &Path, skel: &Skeleton) -> Result<(), IoError> {
    write_csv(
        path,
        skel.arcs.iter().enumerate().flat_map(|(arc, a)| {
            a.points.iter().map(move |p| RidgeRow {
                arc,
                i: a.pair.0,
                j: a.pair.1,
                x: p.x,
                y: p.y,
            })
        }),
    )
}

pub fn write_measure_csv(path: &Path, mu: &RieszMeasure) -> Result<(), IoError> {
    write_csv(
        path,
        mu.samples.iter().map(|s| MeasureRow {
            x: s.point.x,
            y: s.point.y,
            weight: s.weight,
            density: s.density,
            i: s.pair.0,
            j: s.pair.1,
        }),
    )
}

pub fn write_levels_csv(path: &Path, levels: &[ConvexityReport]) -> Result<(), IoError> {
    write_csv(
        path,
        levels.iter().flat_map(|r| {
            r.polyline.iter().map(move |p| LevelRow {
                level: r.level,
                x: p.x,
                y: p.y,
            })
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_list_parses_pairs() {
        let v = parse_vertex_list("0,0, 1,0 ,-0.5,2e-1").unwrap();
        assert_eq!(
            v,
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(-0.5, 0.2)]
        );
        assert!(parse_vertex_list("0,0,1").is_err());
        assert!(parse_vertex_list("0,zero").is_err());
    }

    #[test]
    fn json_input_and_atomic_output() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("tri.json");
        write_atomic(&input, br#"{"vertices": [[0, 0], [1, 0], [0.5, 0.8]]}"#).unwrap();
        let v = read_vertices_json(&input).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[2], Point2::new(0.5, 0.8));
        // overwrite in place
        write_atomic(&input, b"{}").unwrap();
        assert!(matches!(read_vertices_json(&input), Err(IoError::Json { .. })));
        assert!(matches!(
            read_vertices_json(&dir.path().join("missing.json")),
            Err(IoError::File { .. })
        ));
    }

    #[test]
    fn csv_paths_append_suffix() {
        assert_eq!(
            csv_path(Path::new("out/run"), "ridges"),
            PathBuf::from("out/run_ridges.csv")
        );
    }
}
