//! File formats: CSV matrices, TSV edge lists, and JSON documents.
//!
//! Every writer here has a matching reader, and all floating-point output
//! is deterministic — JSON numbers carry 17 significant digits and edge
//! weights use the shortest representation that round-trips — so re-running
//! a seeded command reproduces its files byte for byte.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::ebic::EbicTrace;
use crate::error::{Error, Result};
use crate::model::EdgeSet;
use crate::stability::VariabilityTrace;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, why: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        why: why.into(),
    }
}

/// Write a matrix as CSV, one row per record, with an optional header row.
pub fn write_matrix_csv(path: &Path, m: &Array2<f64>, header: Option<&[String]>) -> Result<()> {
    if let Some(names) = header {
        if names.len() != m.ncols() {
            return Err(Error::InvalidParameter {
                what: "header",
                why: format!("{} names for {} columns", names.len(), m.ncols()),
            });
        }
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let emit = |w: &mut BufWriter<File>, fields: &mut dyn Iterator<Item = String>| {
        let line = fields.collect::<Vec<_>>().join(",");
        writeln!(w, "{line}")
    };
    if let Some(names) = header {
        emit(&mut w, &mut names.iter().cloned()).map_err(|e| io_err(path, e))?;
    }
    for row in m.rows() {
        emit(&mut w, &mut row.iter().map(|v| format!("{v}"))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Read a CSV matrix. A first record that does not parse entirely as
/// numbers is taken to be a header of column names.
pub fn read_matrix_csv(path: &Path) -> Result<(Array2<f64>, Option<Vec<String>>)> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(BufReader::new(file));
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ncols: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| parse_err(path, line, e.to_string()))?;
        let fields: Vec<&str> = record.iter().map(str::trim).collect();
        if fields.is_empty() || (fields.len() == 1 && fields[0].is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Err(_) if line == 1 => {
                header = Some(fields.iter().map(|s| s.to_string()).collect());
                ncols = Some(fields.len());
            }
            Err(_) => {
                let bad = fields
                    .iter()
                    .find(|f| f.parse::<f64>().is_err())
                    .unwrap_or(&"");
                return Err(parse_err(path, line, format!("not a number: {bad:?}")));
            }
            Ok(values) => {
                match ncols {
                    Some(n) if n != values.len() => {
                        return Err(parse_err(
                            path,
                            line,
                            format!("expected {n} fields, found {}", values.len()),
                        ));
                    }
                    _ => ncols = Some(values.len()),
                }
                rows.push(values);
            }
        }
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "no data rows"));
    }
    let ncols = ncols.expect("rows imply a column count");
    let mut m = Array2::zeros((rows.len(), ncols));
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            m[[r, c]] = v;
        }
    }
    Ok((m, header))
}

/// Write all groups' true edges to one TSV with columns `i`, `j`, `group`,
/// all 1-based.
pub fn write_truth_edges_tsv(path: &Path, edge_sets: &[EdgeSet]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "i\tj\tgroup").map_err(|e| io_err(path, e))?;
    for (g, edges) in edge_sets.iter().enumerate() {
        for (i, j) in edges.iter() {
            writeln!(w, "{}\t{}\t{}", i + 1, j + 1, g + 1).map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Read a truth edge TSV back into `k` edge sets over `p` nodes.
pub fn read_truth_edges_tsv(path: &Path, p: usize, k: usize) -> Result<Vec<EdgeSet>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut sets = vec![EdgeSet::new(p); k];
    for (idx, line) in std::io::BufRead::lines(BufReader::new(file)).enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 1 && trimmed.starts_with('i')) {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let nums: Vec<usize> = fields
            .iter()
            .map(|f| f.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let (i, j, g) = (nums[0], nums[1], nums[2]);
        if i == 0 || j == 0 || g == 0 {
            return Err(parse_err(path, lineno, "indices are 1-based; found 0"));
        }
        if g > k {
            return Err(parse_err(path, lineno, format!("group {g} of {k}")));
        }
        sets[g - 1]
            .insert(i - 1, j - 1)
            .map_err(|e| parse_err(path, lineno, e.to_string()))?;
    }
    Ok(sets)
}

/// One estimated edge as written to disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRecord {
    /// 1-based node indices, `i < j`.
    pub i: usize,
    pub j: usize,
    /// Consensus precision entry.
    pub theta: f64,
    /// Partial correlation implied by the consensus.
    pub partial_corr: f64,
}

/// Write one group's estimated edges as TSV with columns `i`, `j`,
/// `theta_ij`, `partial_correlation` (indices 1-based).
pub fn write_estimate_edges_tsv(
    path: &Path,
    edges: &EdgeSet,
    z: &Array2<f64>,
    pcor: &Array2<f64>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "i\tj\ttheta_ij\tpartial_correlation").map_err(|e| io_err(path, e))?;
    for (i, j) in edges.iter() {
        writeln!(w, "{}\t{}\t{}\t{}", i + 1, j + 1, z[[i, j]], pcor[[i, j]])
            .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Read one group's estimated edges over `p` nodes.
pub fn read_estimate_edges_tsv(path: &Path, p: usize) -> Result<(EdgeSet, Vec<EdgeRecord>)> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut edges = EdgeSet::new(p);
    let mut records = Vec::new();
    for (idx, line) in std::io::BufRead::lines(BufReader::new(file)).enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || (lineno == 1 && trimmed.starts_with('i')) {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 4 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let i: usize = fields[0]
            .trim()
            .parse()
            .map_err(|e: std::num::ParseIntError| parse_err(path, lineno, e.to_string()))?;
        let j: usize = fields[1]
            .trim()
            .parse()
            .map_err(|e: std::num::ParseIntError| parse_err(path, lineno, e.to_string()))?;
        let theta: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|e: std::num::ParseFloatError| parse_err(path, lineno, e.to_string()))?;
        let partial_corr: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|e: std::num::ParseFloatError| parse_err(path, lineno, e.to_string()))?;
        if i == 0 || j == 0 {
            return Err(parse_err(path, lineno, "indices are 1-based; found 0"));
        }
        edges
            .insert(i - 1, j - 1)
            .map_err(|e| parse_err(path, lineno, e.to_string()))?;
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        records.push(EdgeRecord {
            i,
            j,
            theta,
            partial_corr,
        });
    }
    Ok((edges, records))
}

/// serde_json pretty formatter that renders every float as `{:.16e}` — 17
/// significant digits, enough to reproduce any f64 exactly.
struct SciFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl<'a> SciFormatter<'a> {
    fn new() -> Self {
        Self {
            inner: serde_json::ser::PrettyFormatter::new(),
        }
    }
}

impl serde_json::ser::Formatter for SciFormatter<'_> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.begin_array(writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.begin_object(writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.begin_object_key(writer, first)
    }

    fn end_object_key<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.end_object_key(writer)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        self.inner.end_object_value(writer)
    }
}

/// Serialize any value as pretty JSON with full-precision floats, ending
/// with a newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut ser = serde_json::Serializer::with_formatter(&mut w, SciFormatter::new());
    value
        .serialize(&mut ser)
        .map_err(|e| io_err(path, std::io::Error::other(e)))?;
    writeln!(w).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// One row of the variability trace as written to the result document.
#[derive(Debug, serde::Serialize)]
pub struct VariabilityRow {
    pub lambda1: f64,
    pub d_hat: f64,
    pub d_bar: f64,
}

/// One row of the information-criterion trace as written to the result
/// document.
#[derive(Debug, serde::Serialize)]
pub struct EbicRow {
    pub lambda2: f64,
    /// `null` when the fit at this candidate failed.
    pub score: Option<f64>,
}

/// Flatten a variability trace into result-document rows.
pub fn variability_rows(trace: &VariabilityTrace) -> Vec<VariabilityRow> {
    trace
        .lambda1_grid
        .iter()
        .zip(&trace.d_hat)
        .zip(&trace.d_bar)
        .map(|((&lambda1, &d_hat), &d_bar)| VariabilityRow {
            lambda1,
            d_hat,
            d_bar,
        })
        .collect()
}

/// Flatten an information-criterion trace into result-document rows.
pub fn ebic_rows(trace: &EbicTrace) -> Vec<EbicRow> {
    trace
        .lambda2_grid
        .iter()
        .zip(&trace.scores)
        .map(|(&lambda2, &score)| EbicRow { lambda2, score })
        .collect()
}
