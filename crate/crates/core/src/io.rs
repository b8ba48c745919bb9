//! Input files, their canonical writers, and small output helpers.
//!
//! | file          | header                               |
//! |---------------|--------------------------------------|
//! | `risks.csv`   | `id,name,group,likelihood,stddev`    |
//! | `edges.csv`   | `source,target,weight` (source < target, 1-based ids) |
//! | `history.csv` | `month,r1,...,rN` (`YYYY-MM`, 0/1 cells) |
//! | `params.json` | `{"alpha", "beta", "gamma", "time_unit"}` |
//!
//! Files are UTF-8 with LF line endings. Numbers are written in Rust's
//! shortest round-trip form, so loading and saving a canonical file
//! reproduces it byte for byte.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    HistoricalSeries, InfluenceGraph, ModelParams, Month, RiskCatalog, RiskGroup, RiskRecord,
    StateVector, TimeUnit,
};

pub const RISKS_FILE: &str = "risks.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const PARAMS_FILE: &str = "params.json";

const RISKS_HEADER: [&str; 5] = ["id", "name", "group", "likelihood", "stddev"];
const EDGES_HEADER: [&str; 3] = ["source", "target", "weight"];

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(r)
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Reads all records with their 1-based line numbers.
fn records<R: Read>(r: R, path: &str) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut out = Vec::new();
    for rec in reader(r).into_records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push((line, rec));
    }
    Ok(out)
}

fn check_header(rows: &[(usize, csv::StringRecord)], expected: &[&str], path: &str) -> Result<()> {
    let Some((line, header)) = rows.first() else {
        return Err(parse_err(path, 1, "file is empty"));
    };
    if header.iter().ne(expected.iter().copied()) {
        return Err(parse_err(
            path,
            *line,
            format!("expected header '{}'", expected.join(",")),
        ));
    }
    Ok(())
}

fn field<'r>(rec: &'r csv::StringRecord, i: usize, path: &str, line: usize, name: &str) -> Result<&'r str> {
    rec.get(i)
        .ok_or_else(|| parse_err(path, line, format!("missing column '{name}'")))
}

fn number<T: std::str::FromStr>(s: &str, path: &str, line: usize, name: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("invalid {name} '{s}'")))
}

fn label(path: &Path) -> String {
    path.display().to_string()
}

pub fn read_catalog<R: Read>(r: R, path: &str) -> Result<RiskCatalog> {
    let rows = records(r, path)?;
    check_header(&rows, &RISKS_HEADER, path)?;
    let mut out = Vec::with_capacity(rows.len() - 1);
    for (line, rec) in &rows[1..] {
        let line = *line;
        if rec.len() != RISKS_HEADER.len() {
            return Err(parse_err(path, line, format!("expected 5 columns, found {}", rec.len())));
        }
        let group = field(rec, 2, path, line, "group")?;
        out.push(RiskRecord {
            id: number(field(rec, 0, path, line, "id")?, path, line, "id")?,
            name: field(rec, 1, path, line, "name")?.to_string(),
            group: group
                .parse::<RiskGroup>()
                .map_err(|_| parse_err(path, line, format!("unknown group '{group}'")))?,
            likelihood: number(field(rec, 3, path, line, "likelihood")?, path, line, "likelihood")?,
            stddev: number(field(rec, 4, path, line, "stddev")?, path, line, "stddev")?,
        });
    }
    RiskCatalog::new(out)
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<RiskCatalog> {
    let path = path.as_ref();
    read_catalog(File::open(path)?, &label(path))
}

pub fn write_catalog<W: Write>(catalog: &RiskCatalog, w: W) -> Result<()> {
    let mut w = writer(w);
    w.write_record(RISKS_HEADER)?;
    for r in catalog.records() {
        w.write_record([
            r.id.to_string(),
            r.name.clone(),
            r.group.to_string(),
            r.likelihood.to_string(),
            r.stddev.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_catalog(catalog: &RiskCatalog, path: impl AsRef<Path>) -> Result<()> {
    write_catalog(catalog, BufWriter::new(File::create(path)?))
}

/// Reads an edge list for `n` risks. Ids are 1-based.
pub fn read_graph<R: Read>(r: R, n: usize, path: &str) -> Result<InfluenceGraph> {
    let rows = records(r, path)?;
    check_header(&rows, &EDGES_HEADER, path)?;
    let mut edges = Vec::with_capacity(rows.len() - 1);
    for (line, rec) in &rows[1..] {
        let line = *line;
        if rec.len() != EDGES_HEADER.len() {
            return Err(parse_err(path, line, format!("expected 3 columns, found {}", rec.len())));
        }
        let s: usize = number(&rec[0], path, line, "source")?;
        let t: usize = number(&rec[1], path, line, "target")?;
        let w: u32 = number(&rec[2], path, line, "weight")?;
        if s == t {
            return Err(parse_err(path, line, format!("self-loop on risk {s}")));
        }
        if s > t {
            return Err(parse_err(path, line, format!("source {s} must be less than target {t}")));
        }
        if s == 0 || t > n {
            return Err(Error::validation(format!(
                "{path}:{line}: edge ({s}, {t}) references a risk outside 1..={n}"
            )));
        }
        if w == 0 {
            return Err(parse_err(path, line, "weight must be positive"));
        }
        edges.push((s - 1, t - 1, w));
    }
    InfluenceGraph::from_weighted_edges(n, edges)
}

pub fn load_graph(path: impl AsRef<Path>, n: usize) -> Result<InfluenceGraph> {
    let path = path.as_ref();
    read_graph(File::open(path)?, n, &label(path))
}

/// Writes edges with `source < target` in lexicographic order. Graphs
/// without weights get weight 1.
pub fn write_graph<W: Write>(graph: &InfluenceGraph, w: W) -> Result<()> {
    let mut w = writer(w);
    w.write_record(EDGES_HEADER)?;
    for (a, b) in graph.edges() {
        let weight = graph.weight(a, b).unwrap_or(1);
        w.write_record([(a + 1).to_string(), (b + 1).to_string(), weight.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_graph(graph: &InfluenceGraph, path: impl AsRef<Path>) -> Result<()> {
    write_graph(graph, BufWriter::new(File::create(path)?))
}

/// Reads a dense square 0/1 adjacency matrix without header.
pub fn read_adjacency<R: Read>(r: R, path: &str) -> Result<InfluenceGraph> {
    let rows = records(r, path)?;
    let mut matrix = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        let row = rec
            .iter()
            .map(|c| match c.trim() {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(parse_err(path, *line, format!("adjacency entry '{other}' is not 0/1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != rows.len() {
            return Err(parse_err(
                path,
                *line,
                format!("row has {} entries, matrix has {} rows", row.len(), rows.len()),
            ));
        }
        matrix.push(row);
    }
    InfluenceGraph::from_adjacency(&matrix)
}

pub fn read_history<R: Read>(r: R, path: &str) -> Result<HistoricalSeries> {
    let rows = records(r, path)?;
    let Some((hline, header)) = rows.first() else {
        return Err(parse_err(path, 1, "file is empty"));
    };
    let n = header.len().saturating_sub(1);
    let header_ok = header.get(0) == Some("month")
        && n > 0
        && header.iter().skip(1).enumerate().all(|(i, h)| h == format!("r{}", i + 1));
    if !header_ok {
        return Err(parse_err(path, *hline, "expected header 'month,r1,...,rN'"));
    }
    let mut months = Vec::with_capacity(rows.len() - 1);
    let mut states = Vec::with_capacity(rows.len() - 1);
    for (line, rec) in &rows[1..] {
        let line = *line;
        if rec.len() != n + 1 {
            return Err(parse_err(
                path,
                line,
                format!("expected {} columns, found {}", n + 1, rec.len()),
            ));
        }
        let month: Month = rec[0]
            .parse()
            .map_err(|_| parse_err(path, line, format!("invalid month '{}'", &rec[0])))?;
        let bits = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(i, c)| match c {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(parse_err(
                    path,
                    line,
                    format!("state of r{} must be 0 or 1, found '{other}'", i + 1),
                )),
            })
            .collect::<Result<Vec<bool>>>()?;
        months.push(month);
        states.push(StateVector::from(bits));
    }
    HistoricalSeries::new(months, states)
}

pub fn load_history(path: impl AsRef<Path>) -> Result<HistoricalSeries> {
    let path = path.as_ref();
    read_history(File::open(path)?, &label(path))
}

pub fn write_history<W: Write>(history: &HistoricalSeries, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    write!(w, "month")?;
    for i in 1..=history.risk_count() {
        write!(w, ",r{i}")?;
    }
    writeln!(w)?;
    for (m, s) in history.months().iter().zip(history.states()) {
        write!(w, "{m}")?;
        for b in s.bits() {
            write!(w, ",{b}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_history(history: &HistoricalSeries, path: impl AsRef<Path>) -> Result<()> {
    write_history(history, File::create(path)?)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsFile {
    alpha: f64,
    beta: f64,
    gamma: f64,
    time_unit: String,
}

pub fn read_params<R: Read>(r: R) -> Result<ModelParams> {
    let f: ParamsFile = serde_json::from_reader(r)?;
    let unit: TimeUnit = f.time_unit.parse()?;
    ModelParams::new(f.alpha, f.beta, f.gamma, unit)
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    read_params(File::open(path)?)
}

/// Writes parameters in their own unit, or converted to monthly if that
/// unit has no name.
pub fn params_json(params: &ModelParams) -> String {
    let (p, unit) = match params.time_unit() {
        Some(u) => (*params, u),
        None => (params.to_monthly(), TimeUnit::Month),
    };
    // Hand-formatted to keep the key order and number form fixed.
    format!(
        "{{\n  \"alpha\": {},\n  \"beta\": {},\n  \"gamma\": {},\n  \"time_unit\": \"{}\"\n}}\n",
        json_number(p.alpha),
        json_number(p.beta),
        json_number(p.gamma),
        unit
    )
}

pub fn save_params(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, params_json(params))?;
    Ok(())
}

fn json_number(v: f64) -> String {
    serde_json::Value::from(v).to_string()
}

/// Risks, influence graph and (optionally) history, cross-checked.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub catalog: RiskCatalog,
    pub graph: InfluenceGraph,
    pub history: Option<HistoricalSeries>,
}

/// Locations of the three input files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPaths {
    pub risks: PathBuf,
    pub edges: PathBuf,
    pub history: Option<PathBuf>,
}

impl DataPaths {
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            risks: dir.join(RISKS_FILE),
            edges: dir.join(EDGES_FILE),
            history: Some(dir.join(HISTORY_FILE)),
        }
    }
}

impl Dataset {
    pub fn load(paths: &DataPaths) -> Result<Self> {
        let catalog = load_catalog(&paths.risks)?;
        let graph = load_graph(&paths.edges, catalog.len())?;
        let history = match &paths.history {
            Some(p) => Some(load_history(p)?),
            None => None,
        };
        Self::new(catalog, graph, history)
    }

    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        Self::load(&DataPaths::in_dir(dir))
    }

    pub fn new(catalog: RiskCatalog, graph: InfluenceGraph, history: Option<HistoricalSeries>) -> Result<Self> {
        let n = catalog.len();
        if graph.node_count() != n {
            return Err(Error::validation(format!(
                "graph has {} nodes but the catalog has {n} risks",
                graph.node_count()
            )));
        }
        if let Some(h) = &history {
            if h.risk_count() != n {
                return Err(Error::validation(format!(
                    "history has {} risk columns but the catalog has {n} risks",
                    h.risk_count()
                )));
            }
        }
        Ok(Self {
            catalog,
            graph,
            history,
        })
    }

    pub fn history(&self) -> Result<&HistoricalSeries> {
        self.history
            .as_ref()
            .ok_or_else(|| Error::validation("a history file is required"))
    }

    /// Writes the canonical files into `dir`, returning their paths.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut written = vec![dir.join(RISKS_FILE), dir.join(EDGES_FILE)];
        save_catalog(&self.catalog, &written[0])?;
        save_graph(&self.graph, &written[1])?;
        if let Some(h) = &self.history {
            let p = dir.join(HISTORY_FILE);
            save_history(h, &p)?;
            written.push(p);
        }
        Ok(written)
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

/// Writes a CSV file from a header and pre-formatted rows.
pub fn write_csv<I, R>(path: impl AsRef<Path>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Formats an optional number, leaving the cell empty when absent.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
