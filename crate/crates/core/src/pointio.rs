//! Plain-text point files: one point per line, coordinates separated by
//! whitespace. Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub fn parse_points(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut points = Vec::new();
    let mut dim = None;
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let point = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {tok:?}", no + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(v) = point.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parse(format!("line {}: non-finite coordinate {v}", no + 1)));
        }
        match dim {
            None => dim = Some(point.len()),
            Some(d) if d != point.len() => {
                return Err(Error::Parse(format!(
                    "line {}: expected {d} coordinates, found {}",
                    no + 1,
                    point.len()
                )))
            }
            _ => {}
        }
        points.push(point);
    }
    Ok(points)
}

/// Shortest round-trip formatting, so reading back gives identical values.
pub fn format_points(points: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for p in points {
        for (i, v) in p.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{v:?}").expect("writing to a String");
        }
        out.push('\n');
    }
    out
}

pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    parse_points(&std::fs::read_to_string(path)?)
}

pub fn write_points(path: impl AsRef<Path>, points: &[Vec<f64>]) -> Result<()> {
    std::fs::write(path, format_points(points))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop, prop_assert_eq, proptest};

    #[test]
    fn parses_with_comments() {
        let pts = parse_points("# header\n0.1 0.2\n\n  1e-3\t0.5 \n").unwrap();
        assert_eq!(pts, vec![vec![0.1, 0.2], vec![1e-3, 0.5]]);
        assert!(parse_points("0.1 0.2\n0.3\n").is_err());
        assert!(parse_points("0.1 abc\n").is_err());
        assert!(parse_points("NaN 1\n").is_err());
        assert!(parse_points("").unwrap().is_empty());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.txt");
        let pts = vec![vec![0.1, 1.0 / 3.0], vec![0.0, 1.0]];
        write_points(&path, &pts).unwrap();
        assert_eq!(read_points(&path).unwrap(), pts);
    }

    proptest! {
        #[test]
        fn text_round_trip(pts in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 0..20)) {
            prop_assert_eq!(parse_points(&format_points(&pts)).unwrap(), pts);
        }
    }
}
