//! Lowers raw ConceptNet assertion dumps to canonical triple TSV.
//!
//! A dump row has five tab-separated columns: assertion URI, relation URI,
//! start URI, end URI and a JSON metadata object. Only rows whose endpoints are
//! both English concepts (`/c/en/...`) are kept.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::kb::normalize_surface;

const ENGLISH_PREFIX: &str = "/c/en/";

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ConvertStats {
    pub rows: usize,
    pub kept: usize,
    pub non_english: usize,
    pub self_loops: usize,
}

/// `/c/en/ice_cream/n/wn/food` -> `ice cream`
fn english_term(uri: &str) -> Option<String> {
    let rest = uri.strip_prefix(ENGLISH_PREFIX)?;
    let term = rest.split('/').next().unwrap_or("");
    let surface = normalize_surface(term);
    (!surface.is_empty()).then_some(surface)
}

/// `/r/IsA` -> `IsA`
fn relation_name(uri: &str) -> &str {
    uri.strip_prefix("/r/").unwrap_or(uri).trim_end_matches('/')
}

/// Convert one dump row. `Ok(None)` means the row was filtered out.
pub fn convert_row(line: &str) -> Result<Option<String>> {
    let line = line.trim_end_matches(['\n', '\r']);
    let cols: Vec<&str> = line.splitn(5, '\t').collect();
    if cols.len() != 5 {
        return Err(Error::parse(
            None,
            format!("expected 5 tab-separated columns, found {}", cols.len()),
            line,
        ));
    }
    let (Some(start), Some(end)) = (english_term(cols[2]), english_term(cols[3])) else {
        return Ok(None);
    };
    if start == end {
        return Ok(None);
    }
    let relation = relation_name(cols[1]);
    if relation.is_empty() {
        return Err(Error::parse(None, "empty relation URI", line));
    }
    let meta: serde_json::Value = serde_json::from_str(cols[4])
        .map_err(|e| Error::parse(None, format!("bad metadata JSON: {e}"), line))?;
    let weight = match meta.get("weight") {
        None => 1.0,
        Some(v) => v
            .as_f64()
            .filter(|w| w.is_finite() && *w >= 0.0)
            .ok_or_else(|| Error::parse(None, "weight is not a non-negative number", line))?,
    };
    Ok(Some(format!("{relation}\t{start}\t{end}\t{weight}")))
}

/// Stream a whole dump, writing one TSV line per kept assertion.
pub fn convert<R: BufRead, W: Write>(reader: R, mut out: W) -> Result<ConvertStats> {
    let mut stats = ConvertStats::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        stats.rows += 1;
        match convert_row(&line).map_err(|e| e.at_line(i + 1))? {
            Some(tsv) => {
                stats.kept += 1;
                writeln!(out, "{tsv}")?;
            }
            None => {
                let cols: Vec<&str> = line.splitn(5, '\t').collect();
                if english_term(cols[2]).is_some() && english_term(cols[3]).is_some() {
                    stats.self_loops += 1;
                } else {
                    stats.non_english += 1;
                }
            }
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::ingest;

    const DUMP: &str = "/a/[/r/IsA/,/c/en/car/,/c/en/vehicle/]\t/r/IsA\t/c/en/car\t/c/en/vehicle\t{\"dataset\": \"/d/conceptnet/4/en\", \"weight\": 2.5}\n\
/a/[/r/HasA/]\t/r/HasA\t/c/en/electrons/n\t/c/en/negative_charge\t{}\n\
/a/[/r/Synonym/]\t/r/Synonym\t/c/en/car\t/c/fr/voiture/n\t{\"weight\": 1.0}\n\
/a/[/r/RelatedTo/]\t/r/RelatedTo\t/c/en/car/n\t/c/en/car/v\t{\"weight\": 1.0}\n";

    #[test]
    fn converts_and_filters() {
        let mut out = Vec::new();
        let stats = convert(DUMP.as_bytes(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "IsA\tcar\tvehicle\t2.5\nHasA\telectrons\tnegative charge\t1\n"
        );
        assert_eq!(
            stats,
            ConvertStats {
                rows: 4,
                kept: 2,
                non_english: 1,
                self_loops: 1
            }
        );
        let kg = ingest(text.as_bytes()).unwrap();
        assert_eq!(kg.num_triples(), 2);
    }

    #[test]
    fn malformed_rows() {
        assert!(convert_row("only\ttwo").is_err());
        assert!(convert_row("a\t/r/IsA\t/c/en/x\t/c/en/y\tnot json").is_err());
        assert!(convert_row("a\t/r/IsA\t/c/en/x\t/c/en/y\t{\"weight\": \"high\"}").is_err());
    }
}
