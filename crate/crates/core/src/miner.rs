//! Query-log mining: templates, recurring sequences and their average gaps.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{FilterOp, Query, QuerySequence, TableSpec};

/// Stable id of a query template.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TemplateId(pub String);

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for TemplateId {
    fn from(s: &str) -> Self {
        TemplateId(s.to_string())
    }
}

/// Lexical normalization: unquoted words lowercased, numeric literals and
/// single-quoted strings replaced by `?`, tokens separated by one space.
pub fn normalize(text: &str) -> Result<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens: Vec<String> = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '\'' {
            // string literal, '' escapes a quote
            i += 1;
            while i < chars.len() {
                if chars[i] == '\'' {
                    if chars.get(i + 1) == Some(&'\'') {
                        i += 2;
                        continue;
                    }
                    i += 1;
                    break;
                }
                i += 1;
            }
            tokens.push("?".into());
        } else if c == '"' || c == '`' {
            let start = i;
            i += 1;
            while i < chars.len() && chars[i] != c {
                i += 1;
            }
            i = (i + 1).min(chars.len());
            tokens.push(chars[start..i].iter().collect());
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && matches!(chars[i], 'e' | 'E') {
                let mut j = i + 1;
                if j < chars.len() && matches!(chars[j], '+' | '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            tokens.push("?".into());
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                i += 1;
            }
            tokens.push(chars[start..i].iter().collect::<String>().to_lowercase());
        } else {
            let pair: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            if matches!(pair.as_str(), "<=" | ">=" | "<>" | "!=" | "||" | "::") {
                tokens.push(pair);
                i += 2;
            } else {
                tokens.push(c.to_string());
                i += 1;
            }
        }
    }
    if tokens.is_empty() {
        return Err(Error::InvalidArgument("empty query text".into()));
    }
    Ok(tokens.join(" "))
}

/// Template id of a query: a hash of its normalized text.
pub fn fingerprint(text: &str) -> Result<TemplateId> {
    let template = normalize(text)?;
    let digest = Sha256::digest(template.as_bytes());
    Ok(TemplateId(digest[..8].iter().map(|b| format!("{b:02x}")).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Arrival time, ms since epoch.
    pub timestamp: f64,
    pub text: String,
    /// Execution time, when the log records it.
    pub duration: Option<f64>,
}

impl LogEntry {
    pub fn new(timestamp: f64, text: impl Into<String>) -> Self {
        Self { timestamp, text: text.into(), duration: None }
    }
}

/// Parses `epoch_ms<TAB>query_text[<TAB>duration_ms]` lines; blank lines are skipped.
pub fn parse_log(text: &str) -> Result<Vec<LogEntry>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse { line: line_no, message };
        let mut fields = line.split('\t');
        let ts = fields.next().unwrap_or_default().trim();
        let timestamp: f64 = ts.parse().map_err(|_| err(format!("bad timestamp {ts:?}")))?;
        let text = fields.next().ok_or_else(|| err("missing query text".into()))?.to_string();
        let duration = match fields.next() {
            Some(d) => Some(d.trim().parse::<f64>().map_err(|_| err(format!("bad duration {d:?}")))?),
            None => None,
        };
        if fields.next().is_some() {
            return Err(err("too many fields".into()));
        }
        out.push(LogEntry { timestamp, text, duration });
    }
    Ok(out)
}

pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<LogEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_log(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinedSequence {
    pub templates: Vec<TemplateId>,
    /// Number of occurrences in the log.
    pub support: usize,
    /// Average gap after each position but the last.
    pub avg_gaps: Vec<f64>,
}

/// Gap between consecutive log entries: arrival difference minus the
/// previous query's duration when known, floored at zero.
pub fn entry_gap(prev: &LogEntry, next: &LogEntry) -> f64 {
    (next.timestamp - prev.timestamp - prev.duration.unwrap_or(0.0)).max(0.0)
}

/// Counts contiguous template n-grams (2 <= n <= `max_len`) whose internal
/// gaps are all at most `max_gap`, keeping those seen at least `min_support`
/// times. Sorted by support (desc), length (desc), then templates.
pub fn mine_sequences(log: &[LogEntry], min_support: usize, max_len: usize, max_gap: f64) -> Result<Vec<MinedSequence>> {
    if min_support == 0 {
        return Err(Error::InvalidArgument("min_support must be at least 1".into()));
    }
    if max_len < 2 {
        return Err(Error::InvalidArgument("max_len must be at least 2".into()));
    }
    if let Some(i) = log.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::UnsortedLog { line: i + 2 });
    }
    let templates = log.iter().map(|e| fingerprint(&e.text)).collect::<Result<Vec<_>>>()?;
    let gaps: Vec<f64> = log.windows(2).map(|w| entry_gap(&w[0], &w[1])).collect();

    let mut counts: HashMap<&[TemplateId], (usize, Vec<f64>)> = HashMap::new();
    for start in 0..templates.len() {
        for len in 2..=max_len {
            let end = start + len;
            if end > templates.len() || gaps[end - 2] > max_gap {
                break;
            }
            let entry = counts.entry(&templates[start..end]).or_insert_with(|| (0, vec![0.0; len - 1]));
            entry.0 += 1;
            for (sum, g) in entry.1.iter_mut().zip(&gaps[start..end - 1]) {
                *sum += g;
            }
        }
    }

    let mut out: Vec<MinedSequence> = counts
        .into_iter()
        .filter(|(_, (support, _))| *support >= min_support)
        .map(|(t, (support, sums))| MinedSequence {
            templates: t.to_vec(),
            support,
            avg_gaps: sums.into_iter().map(|s| s / support as f64).collect(),
        })
        .collect();
    out.sort_by(|a, b| {
        b.support
            .cmp(&a.support)
            .then(b.templates.len().cmp(&a.templates.len()))
            .then_with(|| a.templates.cmp(&b.templates))
    });
    Ok(out)
}

/// What the cost model needs to know about a template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    /// Query id used in the workload; the template id when absent.
    pub name: Option<String>,
    pub table: TableSpec,
    pub ops: Vec<FilterOp>,
}

pub type Catalog = HashMap<TemplateId, CatalogEntry>;

/// Builds a query sequence from a mined sequence, with the mined average gaps.
pub fn to_workload(mined: &MinedSequence, catalog: &Catalog) -> Result<QuerySequence> {
    let queries = mined
        .templates
        .iter()
        .map(|t| {
            let e = catalog.get(t).ok_or_else(|| Error::MissingCatalogEntry(t.to_string()))?;
            Ok(Query {
                id: e.name.clone().unwrap_or_else(|| t.to_string()),
                table: e.table.clone(),
                ops: e.ops.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let seq = QuerySequence { queries, gaps: mined.avg_gaps.clone() };
    seq.ensure_valid()?;
    Ok(seq)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    entries: Vec<CatalogFileEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFileEntry {
    template: Option<String>,
    query: Option<String>,
    name: Option<String>,
    table: String,
    size_mb: f64,
    ops: Vec<crate::workload::OpEntry>,
}

/// Parses a catalog file. Each entry names its template either by id
/// (`template`) or by a sample query text (`query`).
pub fn parse_catalog(text: &str) -> Result<Catalog> {
    let file: CatalogFile = serde_json::from_str(text)?;
    let mut catalog = Catalog::new();
    for e in file.entries {
        let id = match (e.template, e.query) {
            (Some(t), None) => TemplateId(t),
            (None, Some(q)) => fingerprint(&q)?,
            _ => return Err(Error::Workload("catalog entry needs exactly one of template or query".into())),
        };
        let entry = CatalogEntry {
            name: e.name,
            table: TableSpec { name: e.table, size: e.size_mb },
            ops: e
                .ops
                .into_iter()
                .map(|o| FilterOp { id: o.id, selectivity: o.selectivity, commutes: o.commutes })
                .collect(),
        };
        catalog.insert(id, entry);
    }
    Ok(catalog)
}

pub const REPORT_CSV_HEADER: &str = "templates,support,avg_gaps_ms";

/// One row per mined sequence; list fields are `;`-separated.
pub fn report_csv(mined: &[MinedSequence]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for m in mined {
        let templates: Vec<String> = m.templates.iter().map(|t| t.to_string()).collect();
        let gaps: Vec<String> = m.avg_gaps.iter().map(|g| format!("{g:.6}")).collect();
        out.push_str(&format!("{},{},{}\n", templates.join(";"), m.support, gaps.join(";")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(entries: &[(f64, &str)]) -> Vec<LogEntry> {
        entries.iter().map(|(t, q)| LogEntry::new(*t, *q)).collect()
    }

    #[test]
    fn constants_are_abstracted() {
        assert_eq!(fingerprint("SELECT * FROM t WHERE a > 5").unwrap(), fingerprint("select * from t where a > 17").unwrap());
        assert_ne!(fingerprint("select * from t where a > 5").unwrap(), fingerprint("select * from u where a > 5").unwrap());
        assert_eq!(
            normalize("select * from date_dim WHERE d_year = 1999 AND d_moy = 3").unwrap(),
            "select * from date_dim where d_year = ? and d_moy = ?"
        );
        assert_eq!(
            fingerprint("WHERE d_year = 1999 AND d_moy = 3").unwrap(),
            fingerprint("WHERE d_year = 2000 AND d_moy = 7").unwrap()
        );
    }

    #[test]
    fn strings_and_operators() {
        assert_eq!(normalize("x='it''s'  AND y>=2.5e3").unwrap(), "x = ? and y >= ?");
        assert_eq!(normalize("SELECT \"Col\" FROM t1").unwrap(), "select \"Col\" from t1");
    }

    #[test]
    fn normalization_is_idempotent() {
        let n = normalize("Select a,b From T Where c IN (1, 2,'x')").unwrap();
        assert_eq!(normalize(&n).unwrap(), n);
        assert_eq!(fingerprint(&n).unwrap(), fingerprint("Select a,b From T Where c IN (1, 2,'x')").unwrap());
    }

    #[test]
    fn empty_text_is_an_error() {
        assert!(fingerprint("").is_err());
        assert!(fingerprint("  \n\t").is_err());
    }

    #[test]
    fn pair_with_average_gap() {
        let got = mine_sequences(&log(&[(0.0, "A"), (10.0, "B"), (100.0, "A"), (115.0, "B")]), 2, 3, 50.0).unwrap();
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].templates, vec![fingerprint("A").unwrap(), fingerprint("B").unwrap()]);
        assert_eq!(got[0].support, 2);
        assert_eq!(got[0].avg_gaps, vec![12.5]);
    }

    #[test]
    fn no_repeats() {
        let got = mine_sequences(&log(&[(0.0, "A"), (1.0, "B"), (2.0, "C")]), 2, 3, 50.0).unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn durations_shrink_gaps() {
        let mut l = log(&[(0.0, "A"), (10.0, "B"), (20.0, "A"), (34.0, "B")]);
        l[0].duration = Some(4.0);
        l[2].duration = Some(6.0);
        let got = mine_sequences(&l, 2, 2, 50.0).unwrap();
        assert_eq!(got[0].avg_gaps, vec![7.0]);
    }

    #[test]
    fn rejects_unsorted_and_bad_params() {
        let l = log(&[(5.0, "A"), (1.0, "B")]);
        assert!(matches!(mine_sequences(&l, 1, 2, 1.0), Err(Error::UnsortedLog { line: 2 })));
        let l = log(&[(1.0, "A")]);
        assert!(mine_sequences(&l, 0, 2, 1.0).is_err());
        assert!(mine_sequences(&l, 1, 1, 1.0).is_err());
    }

    #[test]
    fn parse_log_lines() {
        let got = parse_log("0\tSELECT 1\n\n12\tSELECT 2\t3.5\n").unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[1].duration, Some(3.5));
        assert!(matches!(parse_log("x\tq"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_log("1\tq\n2"), Err(Error::Parse { line: 2, .. })));
    }

    fn catalog() -> Catalog {
        let mut c = Catalog::new();
        c.insert(
            fingerprint("A").unwrap(),
            CatalogEntry {
                name: Some("Q0".into()),
                table: TableSpec { name: "date_dim".into(), size: 9.0 },
                ops: vec![FilterOp::new("acc0", 0.33), FilterOp::new("acc1", 0.43)],
            },
        );
        c.insert(
            fingerprint("B").unwrap(),
            CatalogEntry {
                name: Some("Q1".into()),
                table: TableSpec { name: "date_dim_q1".into(), size: 1.0 },
                ops: vec![FilterOp::new("acc0", 0.14)],
            },
        );
        c
    }

    #[test]
    fn workload_from_mined_pair() {
        let m = MinedSequence { templates: vec![fingerprint("A").unwrap(), fingerprint("B").unwrap()], support: 3, avg_gaps: vec![1.0] };
        let seq = to_workload(&m, &catalog()).unwrap();
        assert_eq!(seq, crate::workload::Workload::calibrated_scenario().sequence);
    }

    #[test]
    fn workload_errors() {
        let m = MinedSequence { templates: vec![fingerprint("A").unwrap()], support: 1, avg_gaps: vec![] };
        assert!(matches!(to_workload(&m, &catalog()), Err(Error::InvalidSequence(_))));
        let m = MinedSequence { templates: vec![fingerprint("A").unwrap(), fingerprint("Z").unwrap()], support: 1, avg_gaps: vec![2.0] };
        let err = to_workload(&m, &catalog()).unwrap_err();
        assert!(err.to_string().contains(&fingerprint("Z").unwrap().0));
    }

    #[test]
    fn catalog_by_query_text() {
        let c = parse_catalog(
            r#"{"entries":[{"query":"select * from t where a = 3","table":"t","size_mb":2.0,"ops":[{"id":"f","selectivity":0.5}]}]}"#,
        )
        .unwrap();
        assert!(c.contains_key(&fingerprint("SELECT * FROM t WHERE a = 99").unwrap()));
    }

    #[test]
    fn report_format() {
        let m = MinedSequence { templates: vec!["a".into(), "b".into()], support: 2, avg_gaps: vec![12.5] };
        assert_eq!(report_csv(&[m]), "templates,support,avg_gaps_ms\na;b,2,12.500000\n");
    }
}
