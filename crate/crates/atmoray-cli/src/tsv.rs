//! Header-free tab-separated number tables — the only file format the
//! harness emits. Values are printed with the shortest representation that
//! round-trips through `f64`, so a written file re-read through
//! [`parse_table`] reproduces the in-memory numbers exactly, and identical
//! runs produce byte-identical files.

use anyhow::{bail, Context, Result};

/// Render rows as TSV. Every row may have its own width; no header, one
/// trailing newline per line.
pub fn format_table(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push('\t');
            }
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

/// Parse a TSV written by [`format_table`] (any whitespace-separated numeric
/// table works). Blank lines are skipped.
pub fn parse_table(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .with_context(|| format!("line {}: {tok:?} is not a number", lineno + 1))
            })
            .collect::<Result<_>>()?;
        if row.is_empty() {
            bail!("line {}: no fields", lineno + 1);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_shortest_representation() {
        let rows = vec![
            vec![0.1 + 0.2, 1.0 / 3.0, 6.02e23],
            vec![-0.0, f64::MIN_POSITIVE],
        ];
        let text = format_table(&rows);
        let back = parse_table(&text).unwrap();
        assert_eq!(rows, back);
        // and the text itself is stable under a second round
        assert_eq!(text, format_table(&back));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_table("1.0\tx\n").is_err());
    }
}
