//! Per-sample inference traces and their JSONL/CSV encodings.
//!
//! A trace replaces live model execution: every record carries the local
//! model's top-1 confidence plus the labels needed to score local and remote
//! inference. Two record shapes exist:
//!
//! * multiclass: `id,confidence,local_label,remote_label,true_label`
//! * binary relevance filter: `id,confidence,is_relevant`
//!
//! JSONL files may start with an optional header line
//! `{"kind":"multiclass","metadata":{...}}`; CSV files carry metadata as
//! leading `# key=value` comment lines. Both writers always emit metadata so
//! that parsing a written trace yields the same value.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One multiclass data item as seen by the local and remote models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceSample {
    pub id: u64,
    /// Top-1 probability of the local model's output distribution.
    pub confidence: f64,
    pub local_label: u32,
    /// `None` means the remote model is treated as always correct.
    #[serde(default)]
    pub remote_label: Option<u32>,
    pub true_label: u32,
}

impl InferenceSample {
    pub fn local_correct(&self) -> bool {
        self.local_label == self.true_label
    }

    pub fn remote_correct(&self) -> bool {
        self.remote_label.is_none_or(|l| l == self.true_label)
    }
}

/// One item of a binary relevance-filtering task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinarySample {
    pub id: u64,
    /// Probability that the item belongs to the relevant (positive) class.
    pub confidence: f64,
    pub is_relevant: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    Multiclass,
    Binary,
}

impl TraceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceKind::Multiclass => "multiclass",
            TraceKind::Binary => "binary",
        }
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Multiclass(Vec<InferenceSample>),
    Binary(Vec<BinarySample>),
}

/// An immutable, validated sequence of samples plus free-form metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Samples,
    metadata: BTreeMap<String, String>,
}

impl Trace {
    pub fn multiclass(
        samples: Vec<InferenceSample>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        validate(samples.iter().map(|s| (s.id, s.confidence)))?;
        Ok(Trace {
            samples: Samples::Multiclass(samples),
            metadata,
        })
    }

    pub fn binary(samples: Vec<BinarySample>, metadata: BTreeMap<String, String>) -> Result<Self> {
        validate(samples.iter().map(|s| (s.id, s.confidence)))?;
        Ok(Trace {
            samples: Samples::Binary(samples),
            metadata,
        })
    }

    pub fn kind(&self) -> TraceKind {
        match self.samples {
            Samples::Multiclass(_) => TraceKind::Multiclass,
            Samples::Binary(_) => TraceKind::Binary,
        }
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        match &self.samples {
            Samples::Multiclass(s) => s.len(),
            Samples::Binary(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Confidence values in trace order.
    pub fn confidences(&self) -> Vec<f64> {
        match &self.samples {
            Samples::Multiclass(s) => s.iter().map(|x| x.confidence).collect(),
            Samples::Binary(s) => s.iter().map(|x| x.confidence).collect(),
        }
    }

    /// Borrows the multiclass records, failing on a binary trace.
    pub fn as_multiclass(&self) -> Result<&[InferenceSample]> {
        match &self.samples {
            Samples::Multiclass(s) => Ok(s),
            Samples::Binary(_) => Err(Error::KindMismatch {
                expected: "multiclass",
                found: "binary",
            }),
        }
    }

    /// Borrows the binary records, failing on a multiclass trace.
    pub fn as_binary(&self) -> Result<&[BinarySample]> {
        match &self.samples {
            Samples::Binary(s) => Ok(s),
            Samples::Multiclass(_) => Err(Error::KindMismatch {
                expected: "binary",
                found: "multiclass",
            }),
        }
    }
}

fn check_confidence(line: usize, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::ConfidenceOutOfRange { line, value })
    }
}

// Line numbers here are 1-based record positions.
fn validate(records: impl Iterator<Item = (u64, f64)>) -> Result<()> {
    let mut seen = HashSet::new();
    for (i, (id, confidence)) in records.enumerate() {
        check_confidence(i + 1, confidence)?;
        if !seen.insert(id) {
            return Err(Error::DuplicateId { line: i + 1, id });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Jsonl,
    Csv,
}

impl TraceFormat {
    /// Infers the format from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => TraceFormat::Csv,
            _ => TraceFormat::Jsonl,
        }
    }
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(TraceFormat::Jsonl),
            "csv" => Ok(TraceFormat::Csv),
            other => Err(Error::InvalidParameter(format!(
                "unknown trace format {other:?}"
            ))),
        }
    }
}

const MULTICLASS_HEADER: &str = "id,confidence,local_label,remote_label,true_label";
const BINARY_HEADER: &str = "id,confidence,is_relevant";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonlHeader {
    kind: TraceKind,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

pub fn parse_trace(path: &Path, format: TraceFormat) -> Result<Trace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_str(&text, format)
}

pub fn parse_str(text: &str, format: TraceFormat) -> Result<Trace> {
    match format {
        TraceFormat::Jsonl => parse_jsonl(text),
        TraceFormat::Csv => parse_csv(text),
    }
}

/// Accumulates records of whichever kind the first record (or header) fixes.
struct Builder {
    kind: Option<TraceKind>,
    multiclass: Vec<InferenceSample>,
    binary: Vec<BinarySample>,
    ids: HashSet<u64>,
    metadata: BTreeMap<String, String>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            kind: None,
            multiclass: Vec::new(),
            binary: Vec::new(),
            ids: HashSet::new(),
            metadata: BTreeMap::new(),
        }
    }

    fn expect_kind(&mut self, line: usize, kind: TraceKind) -> Result<()> {
        match self.kind {
            None => {
                self.kind = Some(kind);
                Ok(())
            }
            Some(k) if k == kind => Ok(()),
            Some(k) => Err(Error::Malformed {
                line,
                message: format!("{kind} record in a {k} trace"),
            }),
        }
    }

    fn check(&mut self, line: usize, id: u64, confidence: f64) -> Result<()> {
        check_confidence(line, confidence)?;
        if !self.ids.insert(id) {
            return Err(Error::DuplicateId { line, id });
        }
        Ok(())
    }

    fn push_multiclass(&mut self, line: usize, s: InferenceSample) -> Result<()> {
        self.expect_kind(line, TraceKind::Multiclass)?;
        self.check(line, s.id, s.confidence)?;
        self.multiclass.push(s);
        Ok(())
    }

    fn push_binary(&mut self, line: usize, s: BinarySample) -> Result<()> {
        self.expect_kind(line, TraceKind::Binary)?;
        self.check(line, s.id, s.confidence)?;
        self.binary.push(s);
        Ok(())
    }

    fn finish(self) -> Result<Trace> {
        let samples = match self.kind {
            Some(TraceKind::Multiclass) if !self.multiclass.is_empty() => {
                Samples::Multiclass(self.multiclass)
            }
            Some(TraceKind::Binary) if !self.binary.is_empty() => Samples::Binary(self.binary),
            _ => return Err(Error::EmptyTrace),
        };
        Ok(Trace {
            samples,
            metadata: self.metadata,
        })
    }
}

fn parse_jsonl(text: &str) -> Result<Trace> {
    let mut builder = Builder::new();
    let mut first_record = true;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(raw).map_err(|e| Error::Malformed {
            line,
            message: e.to_string(),
        })?;
        let obj = value.as_object().ok_or_else(|| Error::Malformed {
            line,
            message: "record is not a JSON object".into(),
        })?;
        let malformed = |e: serde_json::Error| Error::Malformed {
            line,
            message: e.to_string(),
        };
        if first_record && obj.contains_key("kind") {
            let header: JsonlHeader = serde_json::from_value(value).map_err(malformed)?;
            builder.kind = Some(header.kind);
            builder.metadata = header.metadata;
            first_record = false;
            continue;
        }
        first_record = false;
        // Range errors take precedence over shape errors so the message names the cause.
        if let Some(c) = obj.get("confidence").and_then(|c| c.as_f64()) {
            check_confidence(line, c)?;
        }
        if obj.contains_key("is_relevant") {
            let s: BinarySample = serde_json::from_value(value).map_err(malformed)?;
            builder.push_binary(line, s)?;
        } else {
            let s: InferenceSample = serde_json::from_value(value).map_err(malformed)?;
            builder.push_multiclass(line, s)?;
        }
    }
    builder.finish()
}

fn parse_csv(text: &str) -> Result<Trace> {
    let mut builder = Builder::new();
    let mut offset = 0;
    let mut body_start = 0;
    for raw in text.split_inclusive('\n') {
        let trimmed = raw.trim_end_matches(['\n', '\r']);
        let Some(meta) = trimmed.strip_prefix('#') else {
            break;
        };
        offset += 1;
        body_start += raw.len();
        let meta = meta.trim_start();
        let (key, value) = meta.split_once('=').ok_or_else(|| Error::Malformed {
            line: offset,
            message: "metadata comment must be `# key=value`".into(),
        })?;
        builder.metadata.insert(key.to_string(), value.to_string());
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(&text.as_bytes()[body_start..]);
    let mut records = reader.records();
    let header_line = offset + 1;
    let header = match records.next() {
        None => return Err(Error::EmptyTrace),
        Some(r) => r.map_err(|e| csv_error(header_line, e))?,
    };
    let header: Vec<&str> = header.iter().collect();
    let kind = if header.join(",") == MULTICLASS_HEADER {
        TraceKind::Multiclass
    } else if header.join(",") == BINARY_HEADER {
        TraceKind::Binary
    } else {
        return Err(Error::Malformed {
            line: header_line,
            message: format!(
                "expected header `{MULTICLASS_HEADER}` or `{BINARY_HEADER}`, got `{}`",
                header.join(",")
            ),
        });
    };
    builder.kind = Some(kind);

    for record in records {
        let record = record.map_err(|e| csv_error(header_line, e))?;
        let line = record
            .position()
            .map(|p| p.line() as usize + offset)
            .unwrap_or(header_line);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let field = |i: usize| record.get(i).unwrap_or("");
        match kind {
            TraceKind::Multiclass => {
                expect_width(line, &record, 5)?;
                let confidence = parse_field::<f64>(line, "confidence", field(1))?;
                check_confidence(line, confidence)?;
                let remote_label = match field(3) {
                    "null" => None,
                    s => Some(parse_field(line, "remote_label", s)?),
                };
                builder.push_multiclass(
                    line,
                    InferenceSample {
                        id: parse_field(line, "id", field(0))?,
                        confidence,
                        local_label: parse_field(line, "local_label", field(2))?,
                        remote_label,
                        true_label: parse_field(line, "true_label", field(4))?,
                    },
                )?;
            }
            TraceKind::Binary => {
                expect_width(line, &record, 3)?;
                let confidence = parse_field::<f64>(line, "confidence", field(1))?;
                check_confidence(line, confidence)?;
                builder.push_binary(
                    line,
                    BinarySample {
                        id: parse_field(line, "id", field(0))?,
                        confidence,
                        is_relevant: parse_field(line, "is_relevant", field(2))?,
                    },
                )?;
            }
        }
    }
    builder.finish()
}

fn csv_error(line: usize, e: csv::Error) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(line);
    Error::Malformed {
        line,
        message: e.to_string(),
    }
}

fn expect_width(line: usize, record: &csv::StringRecord, width: usize) -> Result<()> {
    if record.len() == width {
        Ok(())
    } else {
        Err(Error::Malformed {
            line,
            message: format!("expected {width} fields, found {}", record.len()),
        })
    }
}

fn parse_field<T: FromStr>(line: usize, name: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Malformed {
        line,
        message: format!("invalid {name}: {value:?}"),
    })
}

pub fn write_trace(trace: &Trace, path: &Path, format: TraceFormat) -> Result<()> {
    let text = to_string(trace, format)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Encodes a trace exactly as [`write_trace`] would write it.
pub fn to_string(trace: &Trace, format: TraceFormat) -> Result<String> {
    let mut out = Vec::new();
    match format {
        TraceFormat::Jsonl => write_jsonl(trace, &mut out)?,
        TraceFormat::Csv => write_csv(trace, &mut out)?,
    }
    Ok(String::from_utf8(out).expect("encoders emit UTF-8"))
}

fn write_jsonl(trace: &Trace, out: &mut Vec<u8>) -> Result<()> {
    let header = JsonlHeader {
        kind: trace.kind(),
        metadata: trace.metadata.clone(),
    };
    push_json(out, &header)?;
    match &trace.samples {
        Samples::Multiclass(s) => s.iter().try_for_each(|r| push_json(out, r)),
        Samples::Binary(s) => s.iter().try_for_each(|r| push_json(out, r)),
    }
}

fn push_json<T: Serialize>(out: &mut Vec<u8>, value: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    out.push(b'\n');
    Ok(())
}

fn write_csv(trace: &Trace, out: &mut Vec<u8>) -> Result<()> {
    for (key, value) in &trace.metadata {
        if key.contains(['=', '\n', '\r']) || value.contains(['\n', '\r']) {
            return Err(Error::InvalidParameter(format!(
                "metadata entry {key:?} cannot be stored in a CSV comment"
            )));
        }
        writeln!(out, "# {key}={value}").expect("write to Vec");
    }
    match &trace.samples {
        Samples::Multiclass(samples) => {
            writeln!(out, "{MULTICLASS_HEADER}").expect("write to Vec");
            for s in samples {
                let remote = s
                    .remote_label
                    .map_or_else(|| "null".to_string(), |l| l.to_string());
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.id, s.confidence, s.local_label, remote, s.true_label
                )
                .expect("write to Vec");
            }
        }
        Samples::Binary(samples) => {
            writeln!(out, "{BINARY_HEADER}").expect("write to Vec");
            for s in samples {
                writeln!(out, "{},{},{}", s.id, s.confidence, s.is_relevant).expect("write to Vec");
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn multi(id: u64, confidence: f64, local: u32, remote: Option<u32>, truth: u32) -> InferenceSample {
        InferenceSample {
            id,
            confidence,
            local_label: local,
            remote_label: remote,
            true_label: truth,
        }
    }

    #[test]
    fn parses_single_jsonl_record() {
        let t = parse_str(
            r#"{"id":0,"confidence":1.0,"local_label":3,"remote_label":3,"true_label":3}"#,
            TraceFormat::Jsonl,
        )
        .unwrap();
        assert_eq!(t.kind(), TraceKind::Multiclass);
        assert_eq!(t.len(), 1);
        assert_eq!(t.as_multiclass().unwrap()[0], multi(0, 1.0, 3, Some(3), 3));
    }

    #[test]
    fn rejects_confidence_above_one() {
        let err = parse_str(
            r#"{"id":0,"confidence":1.5,"local_label":3,"remote_label":3,"true_label":3}"#,
            TraceFormat::Jsonl,
        )
        .unwrap_err();
        assert!(matches!(err, Error::ConfidenceOutOfRange { line: 1, .. }));
        assert!(err.to_string().contains("confidence out of range"));
    }

    #[test]
    fn rejects_negative_confidence_in_csv() {
        let text = "id,confidence,is_relevant\n0,0.5,true\n1,-0.1,false\n";
        let err = parse_str(text, TraceFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::ConfidenceOutOfRange { line: 3, .. }), "{err}");
    }

    #[test]
    fn rejects_duplicate_ids() {
        let text = concat!(
            r#"{"id":4,"confidence":0.5,"is_relevant":true}"#,
            "\n",
            r#"{"id":4,"confidence":0.2,"is_relevant":false}"#,
            "\n"
        );
        let err = parse_str(text, TraceFormat::Jsonl).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { line: 2, id: 4 }));
    }

    #[test]
    fn rejects_empty_inputs() {
        assert!(matches!(parse_str("", TraceFormat::Jsonl), Err(Error::EmptyTrace)));
        assert!(matches!(parse_str("\n\n", TraceFormat::Jsonl), Err(Error::EmptyTrace)));
        assert!(matches!(parse_str("", TraceFormat::Csv), Err(Error::EmptyTrace)));
        assert!(matches!(
            parse_str("id,confidence,is_relevant\n", TraceFormat::Csv),
            Err(Error::EmptyTrace)
        ));
    }

    #[test]
    fn reports_line_of_malformed_record() {
        let text = concat!(
            r#"{"id":0,"confidence":0.5,"local_label":1,"remote_label":null,"true_label":1}"#,
            "\n",
            r#"{"id":1,"confidence":0.5,"local_label":"x","true_label":1}"#,
            "\n"
        );
        let err = parse_str(text, TraceFormat::Jsonl).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }), "{err}");

        let err = parse_str("not json\n", TraceFormat::Jsonl).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 1, .. }));
    }

    #[test]
    fn rejects_mixed_record_kinds() {
        let text = concat!(
            r#"{"id":0,"confidence":0.5,"is_relevant":true}"#,
            "\n",
            r#"{"id":1,"confidence":0.5,"local_label":1,"true_label":1}"#,
            "\n"
        );
        assert!(matches!(
            parse_str(text, TraceFormat::Jsonl),
            Err(Error::Malformed { line: 2, .. })
        ));
    }

    #[test]
    fn null_and_missing_remote_label_mean_oracle() {
        let text = concat!(
            r#"{"id":0,"confidence":0.5,"local_label":1,"remote_label":null,"true_label":2}"#,
            "\n",
            r#"{"id":1,"confidence":0.5,"local_label":1,"true_label":2}"#,
        );
        let t = parse_str(text, TraceFormat::Jsonl).unwrap();
        for s in t.as_multiclass().unwrap() {
            assert_eq!(s.remote_label, None);
            assert!(s.remote_correct());
            assert!(!s.local_correct());
        }
    }

    #[test]
    fn csv_rejects_empty_remote_label_and_bad_header() {
        let text = "id,confidence,local_label,remote_label,true_label\n0,0.5,1,,1\n";
        assert!(matches!(
            parse_str(text, TraceFormat::Csv),
            Err(Error::Malformed { line: 2, .. })
        ));
        let text = "id,p,label\n0,0.5,1\n";
        assert!(matches!(
            parse_str(text, TraceFormat::Csv),
            Err(Error::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn csv_line_numbers_account_for_metadata() {
        let text = "# dataset=x\nid,confidence,is_relevant\n0,0.5,true\n1,2.0,true\n";
        let err = parse_str(text, TraceFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::ConfidenceOutOfRange { line: 4, .. }), "{err}");
    }

    #[test]
    fn round_trips_one_sample_without_metadata() {
        let t = Trace::multiclass(vec![multi(0, 0.25, 1, None, 1)], BTreeMap::new()).unwrap();
        for format in [TraceFormat::Jsonl, TraceFormat::Csv] {
            let text = to_string(&t, format).unwrap();
            assert_eq!(parse_str(&text, format).unwrap(), t);
        }
    }

    #[test]
    fn round_trips_binary_trace_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut meta = BTreeMap::new();
        meta.insert("dataset".to_string(), "cifar10-dogs".to_string());
        meta.insert("model".to_string(), "cnn=small".to_string());
        let t = Trace::binary(
            vec![
                BinarySample { id: 7, confidence: 0.5, is_relevant: true },
                BinarySample { id: 3, confidence: 0.1 + 0.2, is_relevant: false },
            ],
            meta,
        )
        .unwrap();
        for (name, format) in [("t.jsonl", TraceFormat::Jsonl), ("t.csv", TraceFormat::Csv)] {
            let path = dir.path().join(name);
            write_trace(&t, &path, format).unwrap();
            assert_eq!(TraceFormat::from_path(&path), format);
            assert_eq!(parse_trace(&path, format).unwrap(), t);
        }
    }

    #[test]
    fn write_to_missing_directory_fails() {
        let t = Trace::binary(
            vec![BinarySample { id: 0, confidence: 0.5, is_relevant: true }],
            BTreeMap::new(),
        )
        .unwrap();
        let err = write_trace(&t, Path::new("/nonexistent/dir/t.jsonl"), TraceFormat::Jsonl)
            .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn constructor_validates_invariants() {
        assert!(matches!(
            Trace::multiclass(vec![multi(0, f64::NAN, 0, None, 0)], BTreeMap::new()),
            Err(Error::ConfidenceOutOfRange { .. })
        ));
        assert!(matches!(
            Trace::multiclass(
                vec![multi(1, 0.2, 0, None, 0), multi(1, 0.3, 0, None, 0)],
                BTreeMap::new()
            ),
            Err(Error::DuplicateId { line: 2, id: 1 })
        ));
    }
}
