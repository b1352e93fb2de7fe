//! Line-oriented text format for samples of metric objects.
//!
//! One object per line, tagged by its first token:
//!
//! ```text
//! # comment
//! E 0.5 1.25          euclidean vector
//! S 0.6 0.8 0.0       unit vector
//! P 2 2.0 0.1 0.1 1.0 p, then the p*p entries row-major
//! GRID 0.25 0.5 0.75  probability levels for the Q lines that follow
//! Q -0.67 0.0 0.67    quantile values on the grid
//! ```
//!
//! Blank lines and `#` comments are ignored. A file holds objects of a single
//! kind; quantile files must declare `GRID` before the first `Q` line.

use std::fmt::Write as _;

use crate::error::{FccError, Result};
use crate::linalg::Matrix;
use crate::metric::{MetricObject, QuantileGrid, Space, SpaceKind, SpdMetric, SphereMetric};

/// The parsed contents of a sample file.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub grid: Option<QuantileGrid>,
    pub objects: Vec<MetricObject>,
}

fn parse_floats(line: usize, tokens: &[&str]) -> Result<Vec<f64>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| FccError::Parse { line, message: format!("not a finite number: {t:?}") })
        })
        .collect()
}

/// Parses a sample file. Object invariants (unit norm, SPD, monotone
/// quantiles) are checked per line.
pub fn parse_samples(text: &str) -> Result<SampleFile> {
    let mut grid: Option<QuantileGrid> = None;
    let mut objects = Vec::new();
    let mut kind: Option<SpaceKind> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let perr = |message: String| FccError::Parse { line, message };
        let obj = match tokens[0] {
            "GRID" => {
                if grid.is_some() {
                    return Err(perr("duplicate GRID line".into()));
                }
                let levels = parse_floats(line, &tokens[1..])?;
                grid = Some(QuantileGrid::new(levels).map_err(|e| perr(e.to_string()))?);
                continue;
            }
            "E" => MetricObject::euclidean(parse_floats(line, &tokens[1..])?),
            "S" => MetricObject::sphere(parse_floats(line, &tokens[1..])?),
            "P" => {
                let p: usize = tokens
                    .get(1)
                    .and_then(|t| t.parse().ok())
                    .filter(|&p| p > 0)
                    .ok_or_else(|| perr("P line needs a positive matrix size".into()))?;
                let entries = parse_floats(line, &tokens[2..])?;
                Matrix::from_row_major(p, entries).and_then(MetricObject::spd)
            }
            "Q" => {
                let g = grid.as_ref().ok_or_else(|| perr("Q line before any GRID line".into()))?;
                let values = parse_floats(line, &tokens[1..])?;
                if values.len() != g.len() {
                    return Err(perr(format!(
                        "quantile line has {} values but the grid has {}",
                        values.len(),
                        g.len()
                    )));
                }
                MetricObject::quantile(values)
            }
            other => return Err(perr(format!("unknown object tag {other:?}"))),
        }
        .map_err(|e| perr(e.to_string()))?;
        match kind {
            None => kind = Some(obj.kind()),
            Some(k) if k != obj.kind() => {
                return Err(perr(format!("mixed object kinds ({k:?} then {:?})", obj.kind())))
            }
            _ => {}
        }
        objects.push(obj);
    }
    Ok(SampleFile { grid, objects })
}

impl SampleFile {
    /// Infers the space of the sample. Metric variants are not recorded in
    /// the file and must be supplied.
    pub fn space(&self, sphere: SphereMetric, spd: SpdMetric) -> Result<Space> {
        let first = self
            .objects
            .first()
            .ok_or_else(|| FccError::invalid("sample file contains no objects"))?;
        let space = match first {
            MetricObject::Euclidean(v) => Space::Euclidean { dim: v.len() },
            MetricObject::Sphere(v) => Space::Sphere { dim: v.len(), metric: sphere },
            MetricObject::Spd(m) => Space::Spd { p: m.dim(), metric: spd },
            MetricObject::Quantile(_) => Space::Wasserstein {
                grid: self.grid.clone().ok_or_else(|| FccError::invalid("missing GRID"))?,
            },
        };
        for (i, o) in self.objects.iter().enumerate() {
            space
                .validate(o)
                .map_err(|e| FccError::invalid(format!("object {i}: {e}")))?;
        }
        Ok(space)
    }
}

/// Shortest round-trip representation, switching to exponent notation for
/// very large or small magnitudes.
pub fn fmt_float(v: f64) -> String {
    match serde_json::Number::from_f64(v) {
        Some(n) => n.to_string(),
        None => format!("{v}"),
    }
}

/// Writes a sample in the text format; floats use the shortest round-trip
/// representation.
pub fn write_samples(space: &Space, objects: &[MetricObject]) -> String {
    let mut out = String::new();
    if let Space::Wasserstein { grid } = space {
        out.push_str("GRID");
        for q in grid.levels() {
            let _ = write!(out, " {}", fmt_float(*q));
        }
        out.push('\n');
    }
    for o in objects {
        let (tag, values): (&str, Vec<f64>) = match o {
            MetricObject::Euclidean(v) => ("E", v.clone()),
            MetricObject::Sphere(v) => ("S", v.clone()),
            MetricObject::Quantile(v) => ("Q", v.clone()),
            MetricObject::Spd(m) => {
                let _ = write!(out, "P {}", m.dim());
                for v in m.as_slice() {
                    let _ = write!(out, " {}", fmt_float(*v));
                }
                out.push('\n');
                continue;
            }
        };
        out.push_str(tag);
        for v in values {
            let _ = write!(out, " {}", fmt_float(v));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        let f = parse_samples("# header\nE 1 2\n\nE 3 4 # trailing\n").unwrap();
        assert_eq!(f.objects.len(), 2);
        assert_eq!(f.space(SphereMetric::Chordal, SpdMetric::LogCholesky).unwrap(), Space::euclidean(2));

        let f = parse_samples("P 2 2 0.5 0.5 1\n").unwrap();
        assert!(matches!(f.objects[0], MetricObject::Spd(_)));

        let f = parse_samples("GRID 0.25 0.5 0.75\nQ -1 0 1\nQ 0 0 0\n").unwrap();
        let s = f.space(SphereMetric::Chordal, SpdMetric::LogCholesky).unwrap();
        assert_eq!(s.dim(), 3);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_samples("E 1 2\nE 1 x\n").unwrap_err();
        assert_eq!(err, FccError::Parse { line: 2, message: "not a finite number: \"x\"".into() });
        let err = parse_samples("S 1 1\n").unwrap_err();
        assert!(matches!(err, FccError::Parse { line: 1, .. }));
        let err = parse_samples("Q 1 2\n").unwrap_err();
        assert!(matches!(err, FccError::Parse { line: 1, .. }));
        let err = parse_samples("E 1\nS 1 0\n").unwrap_err();
        assert!(matches!(err, FccError::Parse { line: 2, .. }));
        let err = parse_samples("GRID 0.5\nQ 1 2\n").unwrap_err();
        assert!(matches!(err, FccError::Parse { line: 2, .. }));
    }

    #[test]
    fn write_then_parse_is_lossless() {
        let grid = QuantileGrid::uniform(4, 0.1, 0.9).unwrap();
        let space = Space::wasserstein(grid);
        let objs = vec![
            MetricObject::Quantile(vec![-1.0 / 3.0, 0.1, 0.2, 1e-17]),
            MetricObject::Quantile(vec![0.0, 0.0, 0.5, 2.0]),
        ];
        // The first object is not monotone; writing does not validate, parsing does.
        let text = write_samples(&space, &objs[1..]);
        let back = parse_samples(&text).unwrap();
        assert_eq!(back.objects, objs[1..]);
        assert_eq!(back.grid.unwrap().levels(), space_levels(&space));
    }

    fn space_levels(s: &Space) -> &[f64] {
        match s {
            Space::Wasserstein { grid } => grid.levels(),
            _ => unreachable!(),
        }
    }
}
