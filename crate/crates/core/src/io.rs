//! Artifact formats.
//!
//! Every table is tab-separated with a header row and a fixed column order.
//! Missing values are written as `NA`. Reals use the shortest representation
//! that parses back to the same value, so a write/read cycle is lossless.
//!
//! | file | columns |
//! |------|---------|
//! | `nodes.tsv` | `id t x0..x{m-1} cell in_deg out_deg` |
//! | `edges.tsv` | `child parent` |
//! | `pairs.tsv` | `u v k j d cn case` |
//! | `estimates.tsv` | `u v d d_hat variant rho_used filtered reason` |
//! | `densities.tsv` | `v cell rho_true mean_outdeg rho_hat` |
//! | `regionstats.tsv` | `cell density nodes within_edges cross_edges out_edges mean_outdeg` |
//! | `hist.tsv` | `j count` |
//! | `trajectories.tsv` | `id t in_deg` |

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{Case, DegreeHistogram, PairRecord, RegionFilter, RegionSummary};
use crate::error::{Result, SpaError};
use crate::estimators::{DensityEstimate, DistanceEstimate, DistanceVariant, RejectReason};
use crate::generator::{Engine, EvolvingGraph, GraphMeta, TrajectoryLog};
use crate::model::{boundary_distance, DensityLayout, ModelParams, Point, RNG_NAME};
use crate::scalar::Scalar;

pub const NODES_FILE: &str = "nodes.tsv";
pub const EDGES_FILE: &str = "edges.tsv";
pub const META_FILE: &str = "meta.json";
pub const PAIRS_FILE: &str = "pairs.tsv";
pub const ESTIMATES_FILE: &str = "estimates.tsv";
pub const DENSITIES_FILE: &str = "densities.tsv";
pub const REGIONSTATS_FILE: &str = "regionstats.tsv";
pub const HIST_FILE: &str = "hist.tsv";
pub const TRAJECTORIES_FILE: &str = "trajectories.tsv";

const NA: &str = "NA";

pub const GENERATOR_NAME: &str = env!("CARGO_PKG_NAME");
pub const GENERATOR_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Sphere-volume convention recorded in `meta.json`.
pub const SPHERE_CONVENTION: &str = "newcomer v_t tests S(u, t-1): volume min(1, (a1*deg + a2)/(t-1))";

/// Contents of `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct RunMeta<T> {
    pub generator: String,
    pub version: String,
    pub rng: String,
    pub sphere: String,
    pub seed: u64,
    pub engine: Engine,
    pub params: ModelParams<T>,
    pub layout: DensityLayout<T>,
    /// Pipeline configuration that produced the run, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl<T: Scalar> RunMeta<T> {
    pub fn new(meta: &GraphMeta<T>, config: Option<serde_json::Value>) -> Self {
        Self {
            generator: GENERATOR_NAME.into(),
            version: GENERATOR_VERSION.into(),
            rng: RNG_NAME.into(),
            sphere: SPHERE_CONVENTION.into(),
            seed: meta.seed,
            engine: meta.engine,
            params: meta.params,
            layout: meta.layout.clone(),
            config,
        }
    }

    pub fn graph_meta(&self) -> GraphMeta<T> {
        GraphMeta { params: self.params, layout: self.layout.clone(), seed: self.seed, engine: self.engine }
    }
}

fn tsv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().delimiter(b'\t').has_headers(false).from_writer(w)
}

fn csv_err(file: &str, e: csv::Error) -> SpaError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SpaError::Io(io),
        kind => SpaError::Parse { file: file.into(), line, msg: format!("{kind:?}") },
    }
}

fn opt<T: Scalar>(x: Option<T>) -> String {
    x.map_or_else(|| NA.to_string(), |v| v.to_string())
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| SpaError::Io(e.into_error()))?;
    inner.flush()?;
    Ok(())
}

/// Table reader that checks the header and tracks line numbers.
struct Table<R: Read> {
    file: String,
    reader: csv::Reader<R>,
}

#[derive(Debug)]
struct Row {
    line: usize,
    fields: csv::StringRecord,
}

impl<R: Read> Table<R> {
    fn open(file: &str, r: R, expected: &[String]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().delimiter(b'\t').has_headers(true).from_reader(r);
        let header = reader.headers().map_err(|e| csv_err(file, e))?.clone();
        if header.iter().ne(expected.iter().map(String::as_str)) {
            return Err(SpaError::Parse {
                file: file.into(),
                line: 1,
                msg: format!(
                    "expected header {:?}, found {:?}",
                    expected.join("\t"),
                    header.iter().collect::<Vec<_>>().join("\t")
                ),
            });
        }
        Ok(Self { file: file.into(), reader })
    }

    fn rows(&mut self) -> Result<Vec<Row>> {
        let mut out = Vec::new();
        for rec in self.reader.records() {
            let fields = rec.map_err(|e| csv_err(&self.file, e))?;
            let line = fields.position().map_or(0, |p| p.line() as usize);
            out.push(Row { line, fields });
        }
        Ok(out)
    }
}

impl Row {
    fn get<V: std::str::FromStr>(&self, file: &str, i: usize) -> Result<V> {
        let s = &self.fields[i];
        s.parse().map_err(|_| SpaError::Parse {
            file: file.into(),
            line: self.line,
            msg: format!("column {} cannot parse {s:?}", i + 1),
        })
    }

    fn get_opt<V: std::str::FromStr>(&self, file: &str, i: usize) -> Result<Option<V>> {
        if &self.fields[i] == NA {
            Ok(None)
        } else {
            self.get(file, i).map(Some)
        }
    }

    fn fail<V>(&self, file: &str, msg: impl Into<String>) -> Result<V> {
        Err(SpaError::Parse { file: file.into(), line: self.line, msg: msg.into() })
    }
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn nodes_header(m: usize) -> Vec<String> {
    let mut h = header(&["id", "t"]);
    h.extend((0..m).map(|i| format!("x{i}")));
    h.extend(header(&["cell", "in_deg", "out_deg"]));
    h
}

pub fn write_nodes<T: Scalar, W: Write>(w: W, graph: &EvolvingGraph<T>) -> Result<()> {
    let mut out = tsv_writer(w);
    out.write_record(nodes_header(graph.layout().m())).map_err(|e| csv_err(NODES_FILE, e))?;
    for v in graph.nodes() {
        let mut rec = vec![v.id.to_string(), v.id.to_string()];
        rec.extend(v.pos.coords().iter().map(|c| c.to_string()));
        rec.extend([v.cell.to_string(), v.in_deg.to_string(), v.out_deg.to_string()]);
        out.write_record(&rec).map_err(|e| csv_err(NODES_FILE, e))?;
    }
    finish(out)
}

pub fn write_edges<T: Scalar, W: Write>(w: W, graph: &EvolvingGraph<T>) -> Result<()> {
    let mut out = tsv_writer(w);
    out.write_record(["child", "parent"]).map_err(|e| csv_err(EDGES_FILE, e))?;
    for &(c, p) in graph.edges() {
        out.write_record([c.to_string(), p.to_string()]).map_err(|e| csv_err(EDGES_FILE, e))?;
    }
    finish(out)
}

pub fn write_meta<T: Scalar + Serialize>(path: &Path, meta: &RunMeta<T>) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, meta)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

pub fn read_meta<T: Scalar + for<'de> Deserialize<'de>>(path: &Path) -> Result<RunMeta<T>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn open(dir: &Path, name: &str) -> Result<File> {
    let path = dir.join(name);
    File::open(&path).map_err(|e| SpaError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Writes `nodes.tsv`, `edges.tsv` and `meta.json` into `dir`.
pub fn write_graph<T: Scalar + Serialize>(
    dir: &Path,
    graph: &EvolvingGraph<T>,
    config: Option<serde_json::Value>,
) -> Result<()> {
    write_nodes(create(dir, NODES_FILE)?, graph)?;
    write_edges(create(dir, EDGES_FILE)?, graph)?;
    write_meta(&dir.join(META_FILE), &RunMeta::new(graph.meta(), config))
}

/// A graph loaded from disk together with whatever the stored degree and
/// cell columns disagreed with.
#[derive(Debug, Clone)]
pub struct LoadedGraph<T> {
    pub graph: EvolvingGraph<T>,
    pub meta: RunMeta<T>,
    /// `(id, what)` for every node whose stored cell or degree differs from
    /// the value recomputed from positions and edges.
    pub mismatches: Vec<(u32, String)>,
}

/// Reads a graph written by [`write_graph`]. Degrees are recomputed from
/// `edges.tsv`; disagreements with `nodes.tsv` are reported, not fatal.
pub fn read_graph<T: Scalar + for<'de> Deserialize<'de>>(dir: &Path) -> Result<LoadedGraph<T>> {
    let meta: RunMeta<T> = read_meta(&dir.join(META_FILE))?;
    let m = meta.layout.m();

    let mut nodes = Table::open(NODES_FILE, open(dir, NODES_FILE)?, &nodes_header(m))?;
    let mut positions = Vec::new();
    let mut stored = Vec::new();
    for row in nodes.rows()? {
        let id: u32 = row.get(NODES_FILE, 0)?;
        if id as usize != positions.len() + 1 {
            return row.fail(NODES_FILE, format!("expected id {}, found {id}", positions.len() + 1));
        }
        let coords = (0..m).map(|i| row.get::<T>(NODES_FILE, 2 + i)).collect::<Result<Vec<T>>>()?;
        let pos = Point::new(coords).map_err(|e| SpaError::Parse {
            file: NODES_FILE.into(),
            line: row.line,
            msg: e.to_string(),
        })?;
        positions.push(pos);
        stored.push((
            row.get::<usize>(NODES_FILE, 2 + m)?,
            row.get::<u32>(NODES_FILE, 3 + m)?,
            row.get::<u32>(NODES_FILE, 4 + m)?,
        ));
    }
    if positions.len() != meta.params.n {
        return Err(SpaError::Parse {
            file: NODES_FILE.into(),
            line: 0,
            msg: format!("{} nodes but params.n = {}", positions.len(), meta.params.n),
        });
    }

    let mut edges_t = Table::open(EDGES_FILE, open(dir, EDGES_FILE)?, &header(&["child", "parent"]))?;
    let edges = edges_t
        .rows()?
        .iter()
        .map(|row| Ok((row.get::<u32>(EDGES_FILE, 0)?, row.get::<u32>(EDGES_FILE, 1)?)))
        .collect::<Result<Vec<_>>>()?;

    let graph = EvolvingGraph::from_parts(meta.graph_meta(), positions, edges)?;
    let mut mismatches = Vec::new();
    for (v, &(cell, in_deg, out_deg)) in graph.nodes().iter().zip(&stored) {
        if v.cell != cell {
            mismatches.push((v.id, format!("cell {cell} stored, {} from position", v.cell)));
        }
        if v.in_deg != in_deg {
            mismatches.push((v.id, format!("in_deg {in_deg} stored, {} from edges", v.in_deg)));
        }
        if v.out_deg != out_deg {
            mismatches.push((v.id, format!("out_deg {out_deg} stored, {} from edges", v.out_deg)));
        }
    }
    Ok(LoadedGraph { graph, meta, mismatches })
}

const PAIRS_HEADER: [&str; 7] = ["u", "v", "k", "j", "d", "cn", "case"];

pub fn write_pairs<T: Scalar, W: Write>(w: W, pairs: &[PairRecord<T>]) -> Result<()> {
    let mut out = tsv_writer(w);
    out.write_record(PAIRS_HEADER).map_err(|e| csv_err(PAIRS_FILE, e))?;
    for r in pairs {
        out.write_record([
            r.u.to_string(),
            r.v.to_string(),
            r.k.to_string(),
            r.j.to_string(),
            r.d.to_string(),
            r.cn.to_string(),
            r.case.label().to_string(),
        ])
        .map_err(|e| csv_err(PAIRS_FILE, e))?;
    }
    finish(out)
}

/// Reads `pairs.tsv`, filling the region fields from `graph`.
pub fn read_pairs<T: Scalar, R: Read>(r: R, graph: &EvolvingGraph<T>) -> Result<Vec<PairRecord<T>>> {
    let mut t = Table::open(PAIRS_FILE, r, &header(&PAIRS_HEADER))?;
    let layout = graph.layout();
    t.rows()?
        .iter()
        .map(|row| {
            let f = PAIRS_FILE;
            let (u, v): (u32, u32) = (row.get(f, 0)?, row.get(f, 1)?);
            let label = &row.fields[6];
            let Some(case) = Case::from_label(label) else {
                return row.fail(f, format!("unknown case {label:?}"));
            };
            let (nu, nv) = match (graph.node(u), graph.node(v)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return row.fail(f, format!("pair ({u},{v}) refers to a node outside the graph")),
            };
            Ok(PairRecord {
                u,
                v,
                k: row.get(f, 2)?,
                j: row.get(f, 3)?,
                d: row.get(f, 4)?,
                cn: row.get(f, 5)?,
                case,
                cell_u: nu.cell,
                cell_v: nv.cell,
                delta_u: boundary_distance(&nu.pos, layout),
                delta_v: boundary_distance(&nv.pos, layout),
            })
        })
        .collect()
}

const ESTIMATES_HEADER: [&str; 8] = ["u", "v", "d", "d_hat", "variant", "rho_used", "filtered", "reason"];

/// Label for an estimate that passed the filter but lies beyond the torus
/// diameter.
pub const EXCEEDS_DIAMETER: &str = "exceeds-diameter";

pub fn write_estimates<T: Scalar, W: Write>(w: W, estimates: &[DistanceEstimate<T>]) -> Result<()> {
    let mut out = tsv_writer(w);
    out.write_record(ESTIMATES_HEADER).map_err(|e| csv_err(ESTIMATES_FILE, e))?;
    for e in estimates {
        let reason = match (e.reason, e.beyond_diameter) {
            (Some(r), _) => r.label(),
            (None, true) => EXCEEDS_DIAMETER,
            (None, false) => NA,
        };
        out.write_record([
            e.u.to_string(),
            e.v.to_string(),
            e.d.to_string(),
            opt(e.d_hat),
            e.variant.label().to_string(),
            opt(e.rho_used),
            e.filtered().to_string(),
            reason.to_string(),
        ])
        .map_err(|e| csv_err(ESTIMATES_FILE, e))?;
    }
    finish(out)
}

/// Reads `estimates.tsv`; `m` is needed to recompute the beyond-diameter flag.
pub fn read_estimates<T: Scalar, R: Read>(r: R, m: usize) -> Result<Vec<DistanceEstimate<T>>> {
    let mut t = Table::open(ESTIMATES_FILE, r, &header(&ESTIMATES_HEADER))?;
    let diameter = T::of_usize(m).sqrt() / T::of(2.0);
    t.rows()?
        .iter()
        .map(|row| {
            let f = ESTIMATES_FILE;
            let variant: DistanceVariant = row.fields[4].parse().or_else(|e: SpaError| row.fail(f, e.to_string()))?;
            let filtered: bool = row.get(f, 6)?;
            let label = &row.fields[7];
            let reason = match RejectReason::from_label(label) {
                Some(r) => Some(r),
                None if label == NA || label == EXCEEDS_DIAMETER => None,
                None => return row.fail(f, format!("unknown reason {label:?}")),
            };
            if filtered != reason.is_some() {
                return row.fail(f, "filtered flag disagrees with reason");
            }
            let d_hat: Option<T> = row.get_opt(f, 3)?;
            Ok(DistanceEstimate {
                u: row.get(f, 0)?,
                v: row.get(f, 1)?,
                d: row.get(f, 2)?,
                d_hat,
                variant,
                rho_used: row.get_opt(f, 5)?,
                reason,
                beyond_diameter: d_hat.is_some_and(|x| x > diameter),
            })
        })
        .collect()
}

const DENSITIES_HEADER: [&str; 5] = ["v", "cell", "rho_true", "mean_outdeg", "rho_hat"];

pub fn write_densities<T: Scalar, W: Write>(
    w: W,
    graph: &EvolvingGraph<T>,
    estimates: &[DensityEstimate<T>],
) -> Result<()> {
    let mut out = tsv_writer(w);
    out.write_record(DENSITIES_HEADER).map_err(|e| csv_err(DENSITIES_FILE, e))?;
    for e in estimates {
        let node = graph.node(e.id)?;
        out.write_record([
            e.id.to_string(),
            node.cell.to_string(),
            graph.layout().density(node.cell).to_string(),
            e.mean_outdeg.to_string(),
            e.rho_hat.to_string(),
        ])
        .map_err(|e| csv_err(DENSITIES_FILE, e))?;
    }
    finish(out)
}

/// One row of `densities.tsv`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow<T> {
    pub v: u32,
    pub cell: usize,
    pub rho_true: T,
    pub mean_outdeg: T,
    pub rho_hat: T,
}

pub fn read_densities<T: Scalar, R: Read>(r: R) -> Result<Vec<DensityRow<T>>> {
    let mut t = Table::open(DENSITIES_FILE, r, &header(&DENSITIES_HEADER))?;
    let f = DENSITIES_FILE;
    t.rows()?
        .iter()
        .map(|row| {
            Ok(DensityRow {
                v: row.get(f, 0)?,
                cell: row.get(f, 1)?,
                rho_true: row.get(f, 2)?,
                mean_outdeg: row.get(f, 3)?,
                rho_hat: row.get(f, 4)?,
            })
        })
        .collect()
}

const REGIONSTATS_HEADER: [&str; 7] =
    ["cell", "density", "nodes", "within_edges", "cross_edges", "out_edges", "mean_outdeg"];

pub fn write_region_stats<T: Scalar, W: Write>(w: W, summary: &RegionSummary<T>) -> Result<()> {
    let mut out = tsv_writer(w);
    out.write_record(REGIONSTATS_HEADER).map_err(|e| csv_err(REGIONSTATS_FILE, e))?;
    for r in &summary.regions {
        out.write_record([
            r.cell.to_string(),
            r.density.to_string(),
            r.nodes.to_string(),
            r.within_edges.to_string(),
            r.cross_edges.to_string(),
            r.out_edges.to_string(),
            r.mean_outdeg().to_string(),
        ])
        .map_err(|e| csv_err(REGIONSTATS_FILE, e))?;
    }
    finish(out)
}

pub fn write_hist<W: Write>(w: W, hist: &DegreeHistogram) -> Result<()> {
    let mut out = tsv_writer(w);
    out.write_record(["j", "count"]).map_err(|e| csv_err(HIST_FILE, e))?;
    for (j, c) in &hist.counts {
        out.write_record([j.to_string(), c.to_string()]).map_err(|e| csv_err(HIST_FILE, e))?;
    }
    finish(out)
}

/// Reads `hist.tsv`; the file does not record its filter, so the caller
/// supplies it.
pub fn read_hist<R: Read>(r: R, filter: RegionFilter) -> Result<DegreeHistogram> {
    let mut t = Table::open(HIST_FILE, r, &header(&["j", "count"]))?;
    let mut counts = BTreeMap::new();
    for row in t.rows()? {
        let j: u32 = row.get(HIST_FILE, 0)?;
        if counts.insert(j, row.get::<u64>(HIST_FILE, 1)?).is_some() {
            return row.fail(HIST_FILE, format!("degree {j} listed twice"));
        }
    }
    Ok(DegreeHistogram { filter, counts })
}

pub fn write_trajectories<W: Write>(w: W, logs: &[TrajectoryLog]) -> Result<()> {
    let mut out = tsv_writer(w);
    out.write_record(["id", "t", "in_deg"]).map_err(|e| csv_err(TRAJECTORIES_FILE, e))?;
    for log in logs {
        for &(t, d) in &log.checkpoints {
            out.write_record([log.id.to_string(), t.to_string(), d.to_string()])
                .map_err(|e| csv_err(TRAJECTORIES_FILE, e))?;
        }
    }
    finish(out)
}

/// Reads `trajectories.tsv`. Rows of one node must be contiguous.
pub fn read_trajectories<R: Read>(r: R) -> Result<Vec<TrajectoryLog>> {
    let mut t = Table::open(TRAJECTORIES_FILE, r, &header(&["id", "t", "in_deg"]))?;
    let mut logs: Vec<TrajectoryLog> = Vec::new();
    for row in t.rows()? {
        let id: u32 = row.get(TRAJECTORIES_FILE, 0)?;
        let point = (row.get(TRAJECTORIES_FILE, 1)?, row.get(TRAJECTORIES_FILE, 2)?);
        match logs.last_mut() {
            Some(last) if last.id == id => last.checkpoints.push(point),
            _ => {
                if logs.iter().any(|l| l.id == id) {
                    return row.fail(TRAJECTORIES_FILE, format!("rows for node {id} are not contiguous"));
                }
                logs.push(TrajectoryLog { id, checkpoints: vec![point] });
            }
        }
    }
    Ok(logs)
}
