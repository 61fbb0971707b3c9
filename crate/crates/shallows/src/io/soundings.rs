//! Sounding CSV parsing.

use std::path::Path;

use crate::empirical::{Sounding, SoundingSet};
use crate::error::{Error, Result};

/// Read a `x,y,depth_m` CSV (header required). Duplicate coordinates are
/// allowed; nonpositive depths and unparsable rows are row-numbered errors.
pub fn read_soundings(path: &Path) -> Result<SoundingSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => break (i, l),
            None => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 1,
                    why: "empty soundings file".into(),
                })
            }
        }
    };
    let normalized: Vec<String> = header
        .1
        .split(',')
        .map(|c| c.trim().to_ascii_lowercase())
        .collect();
    if normalized != ["x", "y", "depth_m"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: header.0 + 1,
            why: format!("expected header x,y,depth_m, got '{}'", header.1),
        });
    }
    let mut points = Vec::new();
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(|f| f.trim()).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                why: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let parse = |field: &str, what: &str| -> Result<f64> {
            field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                why: format!("cannot parse {what} '{field}'"),
            })
        };
        let sounding = Sounding {
            x: parse(fields[0], "x")?,
            y: parse(fields[1], "y")?,
            depth: parse(fields[2], "depth_m")?,
        };
        if !(sounding.depth > 0.0) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                why: format!("nonpositive depth {}", sounding.depth),
            });
        }
        points.push(sounding);
    }
    SoundingSet::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn parses_valid_rows() {
        let (_d, path) = write("x,y,depth_m\n1.0,2.0,5.5\n3.0,4.0,12.0\n1.0,2.0,6.0\n");
        let s = read_soundings(&path).unwrap();
        assert_eq!(s.len(), 3);
        // duplicate coordinates are allowed
        assert_eq!(s.points[0].x, s.points[2].x);
    }

    #[test]
    fn zero_depth_names_the_row() {
        let (_d, path) = write("x,y,depth_m\n1.0,2.0,5.5\n3.0,4.0,0.0\n");
        let err = read_soundings(&path).unwrap_err().to_string();
        assert!(err.contains(":3:"), "{err}");
    }

    #[test]
    fn bad_header_and_fields() {
        let (_d, path) = write("lon,lat,z\n1,2,3\n");
        assert!(read_soundings(&path).is_err());
        let (_d, path) = write("x,y,depth_m\n1.0,2.0\n");
        let err = read_soundings(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
        let (_d, path) = write("x,y,depth_m\n1.0,two,3.0\n");
        assert!(read_soundings(&path).is_err());
    }
}
