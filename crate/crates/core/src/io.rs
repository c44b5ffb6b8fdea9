//! Sequence files.
//!
//! CSV holds one decimal value per line; the line number is the index.
//! JSONL holds one `{"i": <index>, "value": <number>}` object per line with
//! indices `1..=N` in order. Trailing blank lines are ignored in both.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::sequence::{Origin, RealSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    /// `.jsonl` and `.ndjson` are JSONL, anything else is CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext)
                if ext.eq_ignore_ascii_case("jsonl") || ext.eq_ignore_ascii_case("ndjson") =>
            {
                Format::Jsonl
            }
            _ => Format::Csv,
        }
    }
}

fn content_lines(text: &str) -> Result<Vec<(usize, &str)>> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(k, line)| (k + 1, line.trim()))
        .collect();
    let last = lines
        .iter()
        .rposition(|(_, l)| !l.is_empty())
        .ok_or(Error::Parse {
            line: 1,
            message: "no values".into(),
        })?;
    let lines = &lines[..=last];
    if let Some(&(line, _)) = lines.iter().find(|(_, l)| l.is_empty()) {
        return Err(Error::Parse {
            line,
            message: "blank line before the last value".into(),
        });
    }
    Ok(lines.to_vec())
}

fn finite(line: usize, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Parse {
            line,
            message: format!("value {v} is not finite"),
        })
    }
}

pub fn parse_csv(text: &str) -> Result<Vec<f64>> {
    content_lines(text)?
        .into_iter()
        .map(|(line, s)| {
            let v = s.parse::<f64>().map_err(|e| Error::Parse {
                line,
                message: format!("{s:?}: {e}"),
            })?;
            finite(line, v)
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonlRow {
    i: u64,
    value: f64,
}

pub fn parse_jsonl(text: &str) -> Result<Vec<f64>> {
    content_lines(text)?
        .into_iter()
        .map(|(line, s)| {
            if !s.starts_with('{') {
                return Err(Error::Parse {
                    line,
                    message: "expected a JSON object".into(),
                });
            }
            let row: JsonlRow = serde_json::from_str(s).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            if row.i != line as u64 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected index {line}, found {}", row.i),
                });
            }
            finite(line, row.value)
        })
        .collect()
}

pub fn parse(text: &str, format: Format) -> Result<Vec<f64>> {
    match format {
        Format::Csv => parse_csv(text),
        Format::Jsonl => parse_jsonl(text),
    }
}

pub fn read_sequence(path: &Path) -> Result<RealSequence> {
    let text = std::fs::read_to_string(path)?;
    let values = parse(&text, Format::from_path(path))?;
    RealSequence::new(
        values,
        Origin::File {
            path: path.display().to_string(),
        },
    )
}

/// Shortest decimal that parses back to the identical `f64`.
pub fn to_csv(l: &RealSequence) -> String {
    let mut out = String::with_capacity(l.len() * 8);
    for v in l.values() {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn to_jsonl(l: &RealSequence) -> String {
    let mut out = String::with_capacity(l.len() * 24);
    for (i, v) in l.indexed() {
        let _ = writeln!(out, "{}", serde_json::json!({ "i": i, "value": v }));
    }
    out
}

pub fn write_sequence(l: &RealSequence, path: &Path) -> Result<()> {
    let text = match Format::from_path(path) {
        Format::Csv => to_csv(l),
        Format::Jsonl => to_jsonl(l),
    };
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(e: Error) -> usize {
        match e {
            Error::Parse { line, .. } => line,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_basic() {
        assert_eq!(
            parse_csv("1\n-2.5\n3e2\n\n\n").unwrap(),
            vec![1.0, -2.5, 300.0]
        );
        assert_eq!(parse_csv("0").unwrap(), vec![0.0]);
    }

    #[test]
    fn csv_errors_carry_lines() {
        assert_eq!(line_of(parse_csv("1\n2\nabc\n").unwrap_err()), 3);
        assert_eq!(line_of(parse_csv("1\n\n2\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_csv("1\nNaN\n").unwrap_err()), 2);
        assert_eq!(line_of(parse_csv("\n\n").unwrap_err()), 1);
    }

    #[test]
    fn jsonl_basic() {
        let text = "{\"i\":1,\"value\":0.5}\n{\"i\":2,\"value\":-1}\n";
        assert_eq!(parse_jsonl(text).unwrap(), vec![0.5, -1.0]);
    }

    #[test]
    fn jsonl_rejects_gaps_and_junk() {
        let gap = "{\"i\":1,\"value\":0.5}\n{\"i\":3,\"value\":1}\n";
        assert_eq!(line_of(parse_jsonl(gap).unwrap_err()), 2);
        assert_eq!(
            line_of(parse_jsonl("{\"i\":0,\"value\":1}").unwrap_err()),
            1
        );
        assert_eq!(line_of(parse_jsonl("{\"i\":1}").unwrap_err()), 1);
        assert_eq!(line_of(parse_jsonl("[1, 2]").unwrap_err()), 1);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let values = vec![
            0.1,
            -1.0 / 3.0,
            2f64.sqrt(),
            1e-300,
            123456789.123,
            -0.0,
            5e-324,
        ];
        let l = RealSequence::from_values(values.clone()).unwrap();
        let back = parse_csv(&to_csv(&l)).unwrap();
        assert_eq!(
            back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(parse_jsonl(&to_jsonl(&l)).unwrap(), values);
    }

    #[test]
    fn integers_print_plainly() {
        let l = RealSequence::from_values(vec![1.0, -1.0, 4.0, 0.0]).unwrap();
        assert_eq!(to_csv(&l), "1\n-1\n4\n0\n");
    }

    #[test]
    fn format_by_extension() {
        assert_eq!(Format::from_path(Path::new("a.jsonl")), Format::Jsonl);
        assert_eq!(Format::from_path(Path::new("a.csv")), Format::Csv);
        assert_eq!(Format::from_path(Path::new("a")), Format::Csv);
    }
}
