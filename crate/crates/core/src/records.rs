//! Experiment records, grouping into fit-able run sets, and flat-file IO.
//!
//! The canonical on-disk schema is a flat object with the keys
//! `layers, hidden, params, task, family, pretrain_seed, finetune_seed,
//! metric, value, direction, tokens`, stored either as JSON lines or as a
//! CSV file with those keys in the header row.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::powerlaw::Point;
use crate::scalecalc::param_count;

pub const FIELDS: [&str; 11] = [
    "layers",
    "hidden",
    "params",
    "task",
    "family",
    "pretrain_seed",
    "finetune_seed",
    "metric",
    "value",
    "direction",
    "tokens",
];

/// A model configuration. `layers`/`hidden` are absent when a record only
/// carries a parameter count.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub layers: Option<u32>,
    pub hidden: Option<u32>,
    pub params: u64,
}

impl ScaleSpec {
    /// Configuration with the parameter count derived as `12·L·H²`.
    pub fn new(layers: u32, hidden: u32) -> Result<Self> {
        let params = param_count(layers as u64, hidden as u64)?;
        Ok(Self {
            layers: Some(layers),
            hidden: Some(hidden),
            params,
        })
    }

    /// Configuration with a user-supplied parameter count.
    pub fn with_params(layers: u32, hidden: u32, params: u64) -> Result<Self> {
        if layers == 0 || hidden == 0 {
            return Err(Error::invalid("layers", "layers and hidden must be at least 1"));
        }
        if params == 0 {
            return Err(Error::invalid("params", "must be positive"));
        }
        Ok(Self {
            layers: Some(layers),
            hidden: Some(hidden),
            params,
        })
    }

    pub fn from_params(params: u64) -> Result<Self> {
        if params == 0 {
            return Err(Error::invalid("params", "must be positive"));
        }
        Ok(Self {
            layers: None,
            hidden: None,
            params,
        })
    }

    /// Width over depth, `H / L`.
    pub fn aspect_ratio(&self) -> Option<f64> {
        match (self.layers, self.hidden) {
            (Some(l), Some(h)) => Some(h as f64 / l as f64),
            _ => None,
        }
    }

    pub fn x(&self) -> f64 {
        self.params as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "max", alias = "maximize")]
    Maximize,
    #[serde(rename = "min", alias = "minimize")]
    Minimize,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Maximize => "max",
            Direction::Minimize => "min",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "max" | "maximize" => Ok(Direction::Maximize),
            "min" | "minimize" => Ok(Direction::Minimize),
            other => Err(format!(
                "unknown direction `{other}` (expected max|maximize|min|minimize)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scale: ScaleSpec,
    pub task: String,
    pub family: String,
    pub pretrain_seed: u64,
    pub finetune_seed: u64,
    pub metric: String,
    pub value: f64,
    pub direction: Direction,
    pub tokens: Option<u64>,
}

impl RunRecord {
    pub fn point(&self) -> Point {
        Point::new(self.scale.x(), self.value)
    }

    fn sort_cmp(&self, other: &Self) -> Ordering {
        self.scale
            .params
            .cmp(&other.scale.params)
            .then(self.pretrain_seed.cmp(&other.pretrain_seed))
            .then(self.finetune_seed.cmp(&other.finetune_seed))
            .then(self.scale.layers.cmp(&other.scale.layers))
            .then(self.scale.hidden.cmp(&other.scale.hidden))
            .then(self.value.total_cmp(&other.value))
            .then(self.tokens.cmp(&other.tokens))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub task: String,
    pub family: String,
    pub metric: String,
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.task, self.family, self.metric)
    }
}

/// All runs for one `(task, family, metric)`, sorted by
/// `(params, pretrain_seed, finetune_seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSet {
    pub task: String,
    pub family: String,
    pub metric: String,
    pub direction: Direction,
    records: Vec<RunRecord>,
}

/// Runs sharing one parameter count.
#[derive(Debug, Clone, Copy)]
pub struct ScaleGroup<'a> {
    pub scale: &'a ScaleSpec,
    pub records: &'a [RunRecord],
}

impl RunSet {
    pub fn new(records: Vec<RunRecord>) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::invalid("records", "a run set needs at least one record"))?;
        let mut set = RunSet {
            task: first.task.clone(),
            family: first.family.clone(),
            metric: first.metric.clone(),
            direction: first.direction,
            records: Vec::new(),
        };
        for r in &records {
            set.check_member(r)?;
        }
        set.records = records;
        set.records.sort_by(RunRecord::sort_cmp);
        Ok(set)
    }

    fn check_member(&self, r: &RunRecord) -> Result<()> {
        let checks = [
            ("task", &self.task, &r.task),
            ("family", &self.family, &r.family),
            ("metric", &self.metric, &r.metric),
        ];
        for (field, left, right) in checks {
            if left != right {
                return Err(Error::Mismatch {
                    field,
                    left: left.clone(),
                    right: right.clone(),
                });
            }
        }
        if r.direction != self.direction {
            return Err(Error::MixedDirection {
                key: self.key().to_string(),
                first: self.direction.to_string(),
                second: r.direction.to_string(),
            });
        }
        Ok(())
    }

    pub fn key(&self) -> GroupKey {
        GroupKey {
            task: self.task.clone(),
            family: self.family.clone(),
            metric: self.metric.clone(),
        }
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records grouped by parameter count, in ascending order.
    pub fn groups(&self) -> Vec<ScaleGroup<'_>> {
        self.records
            .chunk_by(|a, b| a.scale.params == b.scale.params)
            .map(|chunk| ScaleGroup {
                scale: &chunk[0].scale,
                records: chunk,
            })
            .collect()
    }

    /// The distinct scales, one per parameter count (M of them).
    pub fn scales(&self) -> Vec<ScaleSpec> {
        self.groups().into_iter().map(|g| g.scale.clone()).collect()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.groups().iter().map(|g| g.records.len()).collect()
    }

    pub fn points(&self) -> Vec<Point> {
        self.records.iter().map(RunRecord::point).collect()
    }

    /// Keeps records matching `keep`; the result may be empty.
    pub fn filtered(&self, keep: impl Fn(&RunRecord) -> bool) -> RunSet {
        RunSet {
            task: self.task.clone(),
            family: self.family.clone(),
            metric: self.metric.clone(),
            direction: self.direction,
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
        }
    }
}

/// Partitions records by `(task, family, metric)`.
pub fn group(records: &[RunRecord]) -> Result<BTreeMap<GroupKey, RunSet>> {
    let mut buckets: BTreeMap<GroupKey, Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        let key = GroupKey {
            task: r.task.clone(),
            family: r.family.clone(),
            metric: r.metric.clone(),
        };
        buckets.entry(key).or_default().push(r.clone());
    }
    buckets
        .into_iter()
        .map(|(key, recs)| RunSet::new(recs).map(|set| (key, set)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected jsonl|csv)")),
        }
    }
}

pub fn ingest(path: impl AsRef<Path>, format: Format) -> Result<Vec<RunRecord>> {
    let file = File::open(path.as_ref())?;
    match format {
        Format::Jsonl => read_jsonl(BufReader::new(file)),
        Format::Csv => read_csv(file),
    }
}

pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    let mut defaulted = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let row = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        let Value::Object(map) = value else {
            return Err(Error::Parse {
                row,
                message: "expected a JSON object".into(),
            });
        };
        let (record, seeds_defaulted) = record_from_fields(row, &map)?;
        defaulted += seeds_defaulted as usize;
        out.push(record);
    }
    warn_defaulted(defaulted);
    Ok(out)
}

pub fn read_csv(reader: impl Read) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let mut out = Vec::new();
    let mut defaulted = 0usize;
    for (i, row) in rdr.records().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|e| Error::Parse {
            row: row_no,
            message: e.to_string(),
        })?;
        let map: Map<String, Value> = headers
            .iter()
            .zip(row.iter())
            .filter(|(_, cell)| !cell.is_empty())
            .map(|(h, cell)| (h.to_string(), Value::String(cell.to_string())))
            .collect();
        let (record, seeds_defaulted) = record_from_fields(row_no, &map)?;
        defaulted += seeds_defaulted as usize;
        out.push(record);
    }
    warn_defaulted(defaulted);
    Ok(out)
}

fn warn_defaulted(count: usize) {
    if count > 0 {
        log::warn!("{count} record(s) had no seed fields; seeds defaulted to 0");
    }
}

fn malformed(row: usize, field: &str, message: impl Into<String>) -> Error {
    Error::MalformedRow {
        row,
        field: field.to_string(),
        message: message.into(),
    }
}

fn field<'a>(map: &'a Map<String, Value>, name: &str) -> Option<&'a Value> {
    map.get(name).filter(|v| !v.is_null())
}

fn opt_uint(row: usize, map: &Map<String, Value>, name: &str) -> Result<Option<u64>> {
    match field(map, name) {
        None => Ok(None),
        Some(Value::Number(n)) => n
            .as_u64()
            .map(Some)
            .ok_or_else(|| malformed(row, name, format!("expected a nonnegative integer, got {n}"))),
        Some(Value::String(s)) => s
            .parse::<u64>()
            .map(Some)
            .map_err(|_| malformed(row, name, format!("expected a nonnegative integer, got `{s}`"))),
        Some(other) => Err(malformed(row, name, format!("expected an integer, got {other}"))),
    }
}

fn opt_u32(row: usize, map: &Map<String, Value>, name: &str) -> Result<Option<u32>> {
    opt_uint(row, map, name)?
        .map(|v| u32::try_from(v).map_err(|_| malformed(row, name, "value too large")))
        .transpose()
}

fn req_str(row: usize, map: &Map<String, Value>, name: &str) -> Result<String> {
    match field(map, name) {
        Some(Value::String(s)) if !s.is_empty() => Ok(s.clone()),
        Some(Value::String(_)) => Err(malformed(row, name, "must not be empty")),
        Some(other) => Err(malformed(row, name, format!("expected a string, got {other}"))),
        None => Err(malformed(row, name, "missing")),
    }
}

fn req_f64(row: usize, map: &Map<String, Value>, name: &str) -> Result<f64> {
    match field(map, name) {
        Some(Value::Number(n)) => n
            .as_f64()
            .ok_or_else(|| malformed(row, name, format!("not a real number: {n}"))),
        Some(Value::String(s)) => s
            .parse::<f64>()
            .map_err(|_| malformed(row, name, format!("not a real number: `{s}`"))),
        Some(other) => Err(malformed(row, name, format!("expected a number, got {other}"))),
        None => Err(malformed(row, name, "missing")),
    }
}

/// Validates one flat row. The flag is set when seed fields were defaulted.
fn record_from_fields(row: usize, map: &Map<String, Value>) -> Result<(RunRecord, bool)> {
    if let Some(unknown) = map.keys().find(|k| !FIELDS.contains(&k.as_str())) {
        return Err(malformed(row, unknown, "unknown field"));
    }
    let layers = opt_u32(row, map, "layers")?;
    let hidden = opt_u32(row, map, "hidden")?;
    let params = opt_uint(row, map, "params")?;
    let scale = match (layers, hidden, params) {
        (Some(0), _, _) => return Err(malformed(row, "layers", "must be at least 1")),
        (_, Some(0), _) => return Err(malformed(row, "hidden", "must be at least 1")),
        (_, _, Some(0)) => return Err(malformed(row, "params", "must be positive")),
        (Some(l), Some(h), None) => ScaleSpec::new(l, h).map_err(|e| malformed(row, "params", e.to_string()))?,
        (Some(l), Some(h), Some(n)) => {
            ScaleSpec::with_params(l, h, n).map_err(|e| malformed(row, "params", e.to_string()))?
        }
        (None, None, Some(n)) => ScaleSpec::from_params(n).map_err(|e| malformed(row, "params", e.to_string()))?,
        (None, _, None) => return Err(malformed(row, "layers", "missing (need layers+hidden or params)")),
        (_, None, None) => return Err(malformed(row, "hidden", "missing (need layers+hidden or params)")),
        (Some(_), None, Some(_)) => return Err(malformed(row, "hidden", "layers given without hidden")),
        (None, Some(_), Some(_)) => return Err(malformed(row, "layers", "hidden given without layers")),
    };

    let task = req_str(row, map, "task")?;
    let family = req_str(row, map, "family")?;
    let metric = req_str(row, map, "metric")?;
    let value = req_f64(row, map, "value")?;
    if !value.is_finite() {
        return Err(malformed(row, "value", "must be finite"));
    }
    if value <= 0.0 {
        return Err(malformed(row, "value", "value must be positive"));
    }
    let direction = req_str(row, map, "direction")?
        .parse::<Direction>()
        .map_err(|e| malformed(row, "direction", e))?;
    let pretrain_seed = opt_uint(row, map, "pretrain_seed")?;
    let finetune_seed = opt_uint(row, map, "finetune_seed")?;
    let defaulted = pretrain_seed.is_none() || finetune_seed.is_none();
    let tokens = opt_uint(row, map, "tokens")?;

    Ok((
        RunRecord {
            scale,
            task,
            family,
            pretrain_seed: pretrain_seed.unwrap_or(0),
            finetune_seed: finetune_seed.unwrap_or(0),
            metric,
            value,
            direction,
            tokens,
        },
        defaulted,
    ))
}

#[derive(Serialize)]
struct FlatRecord<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    layers: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hidden: Option<u32>,
    params: u64,
    task: &'a str,
    family: &'a str,
    pretrain_seed: u64,
    finetune_seed: u64,
    metric: &'a str,
    value: f64,
    direction: Direction,
    #[serde(skip_serializing_if = "Option::is_none")]
    tokens: Option<u64>,
}

impl<'a> From<&'a RunRecord> for FlatRecord<'a> {
    fn from(r: &'a RunRecord) -> Self {
        FlatRecord {
            layers: r.scale.layers,
            hidden: r.scale.hidden,
            params: r.scale.params,
            task: &r.task,
            family: &r.family,
            pretrain_seed: r.pretrain_seed,
            finetune_seed: r.finetune_seed,
            metric: &r.metric,
            value: r.value,
            direction: r.direction,
            tokens: r.tokens,
        }
    }
}

/// Writes records in the canonical JSONL schema, one object per line.
pub fn write_jsonl<'a>(records: impl IntoIterator<Item = &'a RunRecord>, mut out: impl Write) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, &FlatRecord::from(r)).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_csv<'a>(records: impl IntoIterator<Item = &'a RunRecord>, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(FIELDS).map_err(io)?;
    let opt = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            opt(r.scale.layers.map(u64::from)),
            opt(r.scale.hidden.map(u64::from)),
            r.scale.params.to_string(),
            r.task.clone(),
            r.family.clone(),
            r.pretrain_seed.to_string(),
            r.finetune_seed.to_string(),
            r.metric.clone(),
            format!("{:?}", r.value),
            r.direction.to_string(),
            opt(r.tokens),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(lines: &str) -> Result<Vec<RunRecord>> {
        read_jsonl(lines.as_bytes())
    }

    fn rec(task: &str, family: &str, layers: u32, seed: u64, value: f64) -> RunRecord {
        RunRecord {
            scale: ScaleSpec::new(layers, 32 * layers).unwrap(),
            task: task.into(),
            family: family.into(),
            pretrain_seed: seed,
            finetune_seed: seed,
            metric: "f1".into(),
            value,
            direction: Direction::Maximize,
            tokens: None,
        }
    }

    #[test]
    fn ingest_derives_params() {
        let recs = parse(r#"{"layers":1,"hidden":32,"task":"t","family":"mlm","pretrain_seed":0,"finetune_seed":0,"metric":"f1","value":50.0,"direction":"max"}"#).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].scale.params, 12_288);
        assert_eq!(recs[0].scale.aspect_ratio(), Some(32.0));
        assert_eq!(recs[0].direction, Direction::Maximize);
    }

    #[test]
    fn ingest_rejects_nonpositive_value() {
        let err =
            parse(r#"{"layers":1,"hidden":32,"task":"t","family":"mlm","metric":"f1","value":-1,"direction":"max"}"#)
                .unwrap_err()
                .to_string();
        assert!(err.contains("value must be positive"), "{err}");
        assert!(err.contains("row 1"), "{err}");
    }

    #[test]
    fn ingest_reports_row_and_field() {
        let text = concat!(
            r#"{"params":100,"task":"t","family":"f","metric":"m","value":1,"direction":"min"}"#,
            "\n",
            r#"{"params":100,"task":"t","family":"f","metric":"m","value":1,"direction":"sideways"}"#,
        );
        match parse(text).unwrap_err() {
            Error::MalformedRow { row, field, .. } => {
                assert_eq!(row, 2);
                assert_eq!(field, "direction");
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad_type = r#"{"layers":"x","hidden":2,"task":"t","family":"f","metric":"m","value":1,"direction":"min"}"#;
        assert!(matches!(parse(bad_type), Err(Error::MalformedRow { ref field, .. }) if field == "layers"));
        let unknown = r#"{"params":1,"task":"t","family":"f","metric":"m","value":1,"direction":"min","lr":3}"#;
        assert!(matches!(parse(unknown), Err(Error::MalformedRow { ref field, .. }) if field == "lr"));
    }

    #[test]
    fn params_only_rows_are_accepted() {
        let recs = parse(
            r#"{"params":5000,"task":"t","family":"f","metric":"loss","value":3.2,"direction":"minimize","tokens":10}"#,
        )
        .unwrap();
        assert_eq!(recs[0].scale, ScaleSpec::from_params(5000).unwrap());
        assert_eq!(recs[0].scale.aspect_ratio(), None);
        assert_eq!(recs[0].tokens, Some(10));
        assert_eq!(recs[0].pretrain_seed, 0);
    }

    #[test]
    fn csv_ingest() {
        let text = "layers,hidden,params,task,family,pretrain_seed,finetune_seed,metric,value,direction,tokens\n\
                    2,64,,t,mlm,1,3,acc,71.5,max,\n\
                    ,,999,t,mlm,0,0,acc,60,max,42\n";
        let recs = read_csv(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].scale.params, 12 * 2 * 64 * 64);
        assert_eq!(recs[0].finetune_seed, 3);
        assert_eq!(recs[1].scale.params, 999);
        assert_eq!(recs[1].tokens, Some(42));

        let bad = "layers,hidden,task,family,metric,value,direction\n1,32,t,f,m,abc,max\n";
        match read_csv(bad.as_bytes()).unwrap_err() {
            Error::MalformedRow { row, field, .. } => {
                assert_eq!(row, 2);
                assert_eq!(field, "value");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn forty_rows_make_eight_scales_of_five() {
        let mut text = String::new();
        for layers in 1..=8u32 {
            for seed in 0..5 {
                text.push_str(&format!(
                    "{{\"layers\":{layers},\"hidden\":{},\"task\":\"t\",\"family\":\"f\",\"pretrain_seed\":{seed},\"finetune_seed\":0,\"metric\":\"acc\",\"value\":{},\"direction\":\"max\"}}\n",
                    32 * layers,
                    50 + layers
                ));
            }
        }
        let recs = parse(&text).unwrap();
        let groups = group(&recs).unwrap();
        assert_eq!(groups.len(), 1);
        let set = groups.values().next().unwrap();
        assert_eq!(set.scales().len(), 8);
        assert_eq!(set.group_sizes(), vec![5; 8]);
    }

    #[test]
    fn grouping_counts() {
        assert!(group(&[]).unwrap().is_empty());
        let two_tasks = vec![rec("a", "f", 1, 0, 1.0), rec("b", "f", 1, 0, 1.0)];
        assert_eq!(group(&two_tasks).unwrap().len(), 2);

        let mut many = Vec::new();
        for t in 0..9 {
            for fam in ["mlm", "pmi"] {
                for l in 1..=3 {
                    many.push(rec(&format!("task{t}"), fam, l, 0, 1.0));
                }
            }
        }
        let groups = group(&many).unwrap();
        assert_eq!(groups.len(), 18);
        assert_eq!(groups.values().map(RunSet::len).sum::<usize>(), many.len());
    }

    #[test]
    fn mixed_direction_is_an_error() {
        let mut b = rec("t", "f", 2, 0, 1.0);
        b.direction = Direction::Minimize;
        let err = group(&[rec("t", "f", 1, 0, 1.0), b]).unwrap_err();
        assert!(matches!(err, Error::MixedDirection { .. }), "{err:?}");
    }

    #[test]
    fn runset_ordering_ignores_insertion_order() {
        let recs = vec![
            rec("t", "f", 3, 1, 2.0),
            rec("t", "f", 1, 2, 1.0),
            rec("t", "f", 1, 0, 1.5),
            rec("t", "f", 3, 0, 2.5),
        ];
        let mut reversed = recs.clone();
        reversed.reverse();
        let a = RunSet::new(recs).unwrap();
        let b = RunSet::new(reversed).unwrap();
        assert_eq!(a, b);
        let order: Vec<_> = a
            .records()
            .iter()
            .map(|r| (r.scale.layers.unwrap(), r.pretrain_seed))
            .collect();
        assert_eq!(order, vec![(1, 0), (1, 2), (3, 0), (3, 1)]);
        assert_eq!(a.groups().len(), 2);
    }

    fn arb_record() -> impl Strategy<Value = RunRecord> {
        (
            prop_oneof![
                (1u32..20, 1u32..2000).prop_map(|(l, h)| ScaleSpec::new(l, h).unwrap()),
                (1u64..u64::MAX / 2).prop_map(|n| ScaleSpec::from_params(n).unwrap()),
                (1u32..20, 1u32..2000, 1u64..1_000_000_000)
                    .prop_map(|(l, h, n)| ScaleSpec::with_params(l, h, n).unwrap()),
            ],
            "[a-z][a-z0-9_]{0,6}",
            "[a-z]{1,5}",
            any::<u64>(),
            any::<u64>(),
            "[a-z]{1,4}",
            1e-300f64..1e300,
            prop_oneof![Just(Direction::Maximize), Just(Direction::Minimize)],
            proptest::option::of(any::<u64>()),
        )
            .prop_map(
                |(scale, task, family, ps, fs, metric, value, direction, tokens)| RunRecord {
                    scale,
                    task,
                    family,
                    pretrain_seed: ps,
                    finetune_seed: fs,
                    metric,
                    value,
                    direction,
                    tokens,
                },
            )
    }

    proptest! {
        #[test]
        fn jsonl_and_csv_round_trip(recs in proptest::collection::vec(arb_record(), 0..12)) {
            let mut buf = Vec::new();
            write_jsonl(&recs, &mut buf).unwrap();
            prop_assert_eq!(&read_jsonl(buf.as_slice()).unwrap(), &recs);

            let mut buf = Vec::new();
            write_csv(&recs, &mut buf).unwrap();
            prop_assert_eq!(&read_csv(buf.as_slice()).unwrap(), &recs);
        }

        #[test]
        fn grouping_is_a_partition(recs in proptest::collection::vec(arb_record(), 0..30)) {
            // directions may collide within a key; keep one direction per key
            let recs: Vec<_> = recs.into_iter().map(|mut r| { r.direction = Direction::Maximize; r }).collect();
            let groups = group(&recs).unwrap();
            prop_assert_eq!(groups.values().map(RunSet::len).sum::<usize>(), recs.len());
            for (key, set) in &groups {
                prop_assert!(set.records().iter().all(|r| r.task == key.task && r.family == key.family && r.metric == key.metric));
            }
        }
    }
}
