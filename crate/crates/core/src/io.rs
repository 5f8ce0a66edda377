//! File formats: binary snapshot matrices, text bases and sample sets,
//! nodal solution CSVs.
//!
//! Text formats write floats with Rust's shortest round-trip formatting, so
//! load followed by save reproduces a file byte for byte.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::ecsw::EcswSampleSet;
use crate::error::{Error, Result};
use crate::fem::{Field, KinematicState, Mesh1D};
use crate::metrics::csv_err;
use crate::nnls::NnlsTermination;
use crate::pod::{PodBasis, SnapshotMatrix};
use crate::schwarz::HistorySink;

const SNAPSHOT_MAGIC: &str = "SCHWARZ-ROM-SNAPSHOTS v1";
const BASIS_MAGIC: &str = "# schwarz-rom pod basis v1";
const SAMPLE_MAGIC: &str = "# schwarz-rom ecsw sample v1";
const END_HEADER: &str = "end_header";

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Hex SHA-256 of node coordinates and Dirichlet ids.
pub fn mesh_hash(mesh: &Mesh1D) -> String {
    let mut h = Sha256::new();
    for x in mesh.node_coords() {
        h.update(x.to_le_bytes());
    }
    h.update(b"dirichlet");
    for &i in mesh.dirichlet_ids() {
        h.update((i as u64).to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Header lines `key value` until `end_header`.
fn read_header<R: BufRead>(r: &mut R, magic: &str) -> Result<Vec<(String, String)>> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if line.trim_end() != magic {
        return Err(bad(format!("expected '{magic}', found '{}'", line.trim_end())));
    }
    let mut out = Vec::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(bad("missing end of header"));
        }
        let l = line.trim_end();
        if l == END_HEADER {
            return Ok(out);
        }
        let (k, v) = l.split_once(' ').unwrap_or((l, ""));
        out.push((k.to_string(), v.to_string()));
    }
}

fn get<'a>(h: &'a [(String, String)], key: &str) -> Result<&'a str> {
    h.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str()).ok_or_else(|| bad(format!("header lacks '{key}'")))
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| bad(format!("cannot parse {what} from '{s}'")))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split_whitespace().map(|t| parse(t, what)).collect()
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Text header, then little-endian f64 payload: S times followed by the
/// N × S matrix in column-major order.
pub fn write_snapshots<W: Write>(mut w: W, snap: &SnapshotMatrix, dt: f64) -> Result<()> {
    writeln!(w, "{SNAPSHOT_MAGIC}")?;
    writeln!(w, "field {}", snap.field.name())?;
    writeln!(w, "dofs {}", snap.dofs())?;
    writeln!(w, "count {}", snap.count())?;
    writeln!(w, "dt {dt:e}")?;
    writeln!(w, "endian little")?;
    writeln!(w, "{END_HEADER}")?;
    let mut buf = Vec::with_capacity(8 * (snap.count() * (snap.dofs() + 1)));
    for t in &snap.times {
        buf.extend_from_slice(&t.to_le_bytes());
    }
    for x in snap.data.as_slice() {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshots<R: BufRead>(mut r: R) -> Result<(SnapshotMatrix, f64)> {
    let h = read_header(&mut r, SNAPSHOT_MAGIC)?;
    let field = Field::from_name(get(&h, "field")?).ok_or_else(|| bad("unknown field kind"))?;
    let n: usize = parse(get(&h, "dofs")?, "dofs")?;
    let s: usize = parse(get(&h, "count")?, "count")?;
    let dt: f64 = parse(get(&h, "dt")?, "dt")?;
    let big = match get(&h, "endian")? {
        "little" => false,
        "big" => true,
        e => return Err(bad(format!("unknown endianness '{e}'"))),
    };
    let total = s.checked_mul(n + 1).ok_or_else(|| bad("snapshot size overflows"))?;
    let mut bytes = vec![0u8; 8 * total];
    r.read_exact(&mut bytes).map_err(|_| bad("truncated snapshot payload"))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(bad("trailing bytes after snapshot payload"));
    }
    let vals: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| {
            let a: [u8; 8] = c.try_into().expect("chunk of eight");
            if big {
                f64::from_be_bytes(a)
            } else {
                f64::from_le_bytes(a)
            }
        })
        .collect();
    let times = vals[..s].to_vec();
    let data = DMatrix::from_column_slice(n, s, &vals[s..]);
    Ok((SnapshotMatrix::new(data, field, times)?, dt))
}

pub fn save_snapshots(path: &Path, snap: &SnapshotMatrix, dt: f64) -> Result<()> {
    write_snapshots(BufWriter::new(File::create(path)?), snap, dt)
}

pub fn load_snapshots(path: &Path) -> Result<(SnapshotMatrix, f64)> {
    read_snapshots(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisFile {
    pub basis: PodBasis,
    pub mesh_hash: String,
}

pub fn write_basis<W: Write>(mut w: W, basis: &PodBasis, mesh_hash: &str) -> Result<()> {
    writeln!(w, "{BASIS_MAGIC}")?;
    writeln!(w, "mesh_hash {mesh_hash}")?;
    writeln!(w, "dofs {}", basis.dofs())?;
    writeln!(w, "modes {}", basis.size())?;
    writeln!(w, "truncated {}", basis.truncated)?;
    writeln!(w, "dirichlet {}", join(&basis.dirichlet_ids))?;
    let sv: Vec<String> = basis.singular_values.iter().map(|x| format!("{x:e}")).collect();
    writeln!(w, "singular_values {}", sv.join(" "))?;
    writeln!(w, "{END_HEADER}")?;
    let mut line = String::new();
    for i in 0..basis.dofs() {
        line.clear();
        for j in 0..basis.size() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{:e}", basis.modes[(i, j)]));
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_basis<R: BufRead>(mut r: R) -> Result<BasisFile> {
    let h = read_header(&mut r, BASIS_MAGIC)?;
    let n: usize = parse(get(&h, "dofs")?, "dofs")?;
    let m: usize = parse(get(&h, "modes")?, "modes")?;
    let truncated: bool = parse(get(&h, "truncated")?, "truncated")?;
    let dirichlet_ids: Vec<usize> = parse_list(get(&h, "dirichlet")?, "dirichlet id")?;
    let singular_values: Vec<f64> = parse_list(get(&h, "singular_values")?, "singular value")?;
    let mut modes = DMatrix::zeros(n, m);
    let mut rows = 0;
    for line in r.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        if rows == n {
            return Err(bad("more basis rows than dofs"));
        }
        let vals: Vec<f64> = parse_list(&line, "basis entry")?;
        if vals.len() != m {
            return Err(bad(format!("row {rows} has {} entries, expected {m}", vals.len())));
        }
        for (j, v) in vals.into_iter().enumerate() {
            modes[(rows, j)] = v;
        }
        rows += 1;
    }
    if rows != n {
        return Err(bad(format!("{rows} basis rows, expected {n}")));
    }
    Ok(BasisFile {
        basis: PodBasis { modes, singular_values, dirichlet_ids, truncated },
        mesh_hash: get(&h, "mesh_hash")?.to_string(),
    })
}

pub fn save_basis(path: &Path, basis: &PodBasis, mesh_hash: &str) -> Result<()> {
    write_basis(BufWriter::new(File::create(path)?), basis, mesh_hash)
}

pub fn load_basis(path: &Path) -> Result<BasisFile> {
    read_basis(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub sample: EcswSampleSet,
    pub mesh_hash: String,
    pub modes: usize,
    pub training_snapshots: usize,
    pub step_tolerance: f64,
}

fn termination_name(t: NnlsTermination) -> &'static str {
    match t {
        NnlsTermination::Kkt => "kkt",
        NnlsTermination::StepTolerance => "step_tolerance",
        NnlsTermination::MaxIterations => "max_iterations",
    }
}

/// Lines of `element_id weight` for the sampled elements.
pub fn write_sample_set<W: Write>(mut w: W, f: &SampleFile) -> Result<()> {
    writeln!(w, "{SAMPLE_MAGIC}")?;
    writeln!(w, "mesh_hash {}", f.mesh_hash)?;
    writeln!(w, "modes {}", f.modes)?;
    writeln!(w, "training_snapshots {}", f.training_snapshots)?;
    writeln!(w, "step_tolerance {:e}", f.step_tolerance)?;
    writeln!(w, "elements {}", f.sample.element_count())?;
    writeln!(w, "termination {}", termination_name(f.sample.termination))?;
    writeln!(w, "training_residual {:e}", f.sample.training_residual)?;
    writeln!(w, "{END_HEADER}")?;
    for &e in &f.sample.sampled_ids {
        writeln!(w, "{e} {:e}", f.sample.weights[e])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sample_set<R: BufRead>(mut r: R) -> Result<SampleFile> {
    let h = read_header(&mut r, SAMPLE_MAGIC)?;
    let n_el: usize = parse(get(&h, "elements")?, "element count")?;
    let termination = match get(&h, "termination")? {
        "kkt" => NnlsTermination::Kkt,
        "step_tolerance" => NnlsTermination::StepTolerance,
        "max_iterations" => NnlsTermination::MaxIterations,
        t => return Err(bad(format!("unknown termination '{t}'"))),
    };
    let mut weights = vec![0.0; n_el];
    let mut listed = BTreeSet::new();
    for line in r.lines() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let (e, w) = line.split_once(' ').ok_or_else(|| bad(format!("bad sample line '{line}'")))?;
        let e: usize = parse(e, "element id")?;
        if e >= n_el || !listed.insert(e) {
            return Err(bad(format!("element {e} out of range or repeated")));
        }
        weights[e] = parse(w, "weight")?;
    }
    let forced: Vec<usize> = listed.iter().copied().filter(|&e| weights[e] == 0.0).collect();
    let mut sample = EcswSampleSet::from_weights(weights, &forced)?;
    sample.termination = termination;
    sample.training_residual = parse(get(&h, "training_residual")?, "training residual")?;
    Ok(SampleFile {
        sample,
        mesh_hash: get(&h, "mesh_hash")?.to_string(),
        modes: parse(get(&h, "modes")?, "modes")?,
        training_snapshots: parse(get(&h, "training_snapshots")?, "training snapshots")?,
        step_tolerance: parse(get(&h, "step_tolerance")?, "step tolerance")?,
    })
}

pub fn save_sample_set(path: &Path, f: &SampleFile) -> Result<()> {
    write_sample_set(BufWriter::new(File::create(path)?), f)
}

pub fn load_sample_set(path: &Path) -> Result<SampleFile> {
    read_sample_set(BufReader::new(File::open(path)?))
}

/// Columns x, u, v, a; one row per node.
pub fn write_solution_csv<W: Write>(out: W, mesh: &Mesh1D, state: &KinematicState) -> Result<()> {
    if state.len() != mesh.node_count() {
        return Err(Error::Dimension(format!("state has {} dofs, mesh {} nodes", state.len(), mesh.node_count())));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "u", "v", "a"]).map_err(csv_err)?;
    for (i, x) in mesh.node_coords().iter().enumerate() {
        w.write_record(&[x.to_string(), format!("{:e}", state.u[i]), format!("{:e}", state.v[i]), format!("{:e}", state.a[i])])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `solution_<label>_sd<k>_step<n>.csv` for every subdomain at the
/// requested steps.
pub struct SolutionWriter {
    pub dir: PathBuf,
    pub label: String,
    pub meshes: Vec<Mesh1D>,
    pub steps: BTreeSet<usize>,
    pub written: Vec<PathBuf>,
}

impl SolutionWriter {
    pub fn new(dir: &Path, label: &str, meshes: Vec<Mesh1D>, steps: impl IntoIterator<Item = usize>) -> Self {
        SolutionWriter {
            dir: dir.to_path_buf(),
            label: label.to_string(),
            meshes,
            steps: steps.into_iter().collect(),
            written: Vec::new(),
        }
    }
}

impl HistorySink for SolutionWriter {
    fn record(&mut self, step: usize, states: &[KinematicState]) -> Result<()> {
        if !self.steps.contains(&step) {
            return Ok(());
        }
        if states.len() != self.meshes.len() {
            return Err(Error::Dimension("one mesh per subdomain expected".into()));
        }
        for (k, (mesh, s)) in self.meshes.iter().zip(states).enumerate() {
            let path = self.dir.join(format!("solution_{}_sd{}_step{step}.csv", self.label, k + 1));
            write_solution_csv(BufWriter::new(File::create(&path)?), mesh, s)?;
            self.written.push(path);
        }
        Ok(())
    }
}
