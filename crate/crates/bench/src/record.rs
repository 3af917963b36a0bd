//! Run records and their CSV form.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use gibbs_core::numeric::lower_median;

pub const CSV_HEADER: [&str; 12] = [
    "algorithm",
    "function",
    "beta",
    "d",
    "n_budget",
    "n_used",
    "rep",
    "seed",
    "value",
    "error",
    "metric",
    "wall_ns",
];

/// Metric label of log-partition rows.
pub const LOG_PARTITION_METRIC: &str = "logZ";

/// Algorithm label of the exact-vs-exact self-distance rows.
pub const CEILING_ALGORITHM: &str = "exact-ceiling";

/// One output row.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: String,
    /// Canonical function id.
    pub function: String,
    pub beta: f64,
    pub d: usize,
    pub n_budget: u64,
    /// Evaluations actually spent (the largest per-sample count in sample
    /// mode).
    pub n_used: u64,
    pub rep: u64,
    pub seed: u64,
    /// Estimate or metric value; absent on failure rows.
    pub value: Option<f64>,
    /// `|estimate − L_f|` when an oracle exists.
    pub error: Option<f64>,
    /// `logZ`, a metric id, or `error:<Kind>` for failed runs.
    pub metric: String,
    pub wall_ns: u64,
}

impl RunRecord {
    pub fn is_failure(&self) -> bool {
        self.metric.starts_with("error:")
    }

    fn sort_key(&self) -> (&str, u64, u64, &str, &str) {
        (
            &self.algorithm,
            self.n_budget,
            self.rep,
            &self.function,
            &self.metric,
        )
    }
}

/// Orders records by `(algorithm, n_budget, rep, function, metric)`.
pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// Shortest decimal that parses back to the same `f64`.
fn float(v: f64) -> String {
    format!("{v:?}")
}

fn optional(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// Writes the header and the records (sorted) with LF line endings.
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> csv::Result<()> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &sorted {
        w.write_record([
            r.algorithm.clone(),
            r.function.clone(),
            float(r.beta),
            r.d.to_string(),
            r.n_budget.to_string(),
            r.n_used.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            optional(r.value),
            optional(r.error),
            r.metric.clone(),
            r.wall_ns.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// [`write_csv`] into a file.
pub fn emit_csv(records: &[RunRecord], path: &Path) -> csv::Result<()> {
    write_csv(records, std::fs::File::create(path)?)
}

fn parse_optional(s: &str) -> Result<Option<f64>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        s.parse().map(Some).map_err(|_| format!("bad float `{s}`"))
    }
}

/// Reads records written by [`write_csv`].
pub fn read_csv<R: Read>(input: R) -> Result<Vec<RunRecord>, String> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rd.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(CSV_HEADER) {
        return Err("unexpected header".into());
    }
    let num = |s: &str| s.parse::<u64>().map_err(|_| format!("bad integer `{s}`"));
    rd.records()
        .map(|row| {
            let row = row.map_err(|e| e.to_string())?;
            if row.len() != CSV_HEADER.len() {
                return Err(format!("row has {} fields", row.len()));
            }
            Ok(RunRecord {
                algorithm: row[0].to_owned(),
                function: row[1].to_owned(),
                beta: row[2]
                    .parse()
                    .map_err(|_| format!("bad beta `{}`", &row[2]))?,
                d: num(&row[3])? as usize,
                n_budget: num(&row[4])?,
                n_used: num(&row[5])?,
                rep: num(&row[6])?,
                seed: num(&row[7])?,
                value: parse_optional(&row[8])?,
                error: parse_optional(&row[9])?,
                metric: row[10].to_owned(),
                wall_ns: num(&row[11])?,
            })
        })
        .collect()
}

/// Lower median of a field over repetitions, keyed by `(algorithm, n)`.
/// Failure rows and rows without the field are skipped.
pub fn medians_by(
    records: &[RunRecord],
    function: &str,
    metric: &str,
    field: impl Fn(&RunRecord) -> Option<f64>,
) -> BTreeMap<(String, u64), f64> {
    let mut groups: BTreeMap<(String, u64), Vec<f64>> = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.function == function && r.metric == metric)
    {
        if let Some(v) = field(r) {
            groups
                .entry((r.algorithm.clone(), r.n_budget))
                .or_default()
                .push(v);
        }
    }
    groups
        .into_iter()
        .filter_map(|(k, v)| lower_median(&v).map(|m| (k, m)))
        .collect()
}

/// `(n, median)` pairs for one algorithm, in increasing `n`.
pub fn curve(medians: &BTreeMap<(String, u64), f64>, algorithm: &str) -> Vec<(u64, f64)> {
    let mut c: Vec<(u64, f64)> = medians
        .iter()
        .filter(|((a, _), _)| a == algorithm)
        .map(|((_, n), m)| (*n, *m))
        .collect();
    c.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
    });
    c
}
