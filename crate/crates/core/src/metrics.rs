//! Error metrics, recorded histories and run summaries.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{Field, KinematicState};
use crate::pod::SnapshotMatrix;
use crate::schwarz::HistorySink;

/// u, v, a histories of one subdomain; column k is recorded step k·stride.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHistory {
    pub dofs: usize,
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
}

impl FieldHistory {
    pub fn new(dofs: usize) -> Self {
        FieldHistory { dofs, times: Vec::new(), u: Vec::new(), v: Vec::new(), a: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, s: &KinematicState) -> Result<()> {
        if s.len() != self.dofs {
            return Err(Error::Dimension(format!("state has {} dofs, history {}", s.len(), self.dofs)));
        }
        self.times.push(s.t);
        self.u.extend_from_slice(s.u.as_slice());
        self.v.extend_from_slice(s.v.as_slice());
        self.a.extend_from_slice(s.a.as_slice());
        Ok(())
    }

    pub fn field(&self, f: Field) -> &[f64] {
        match f {
            Field::Displacement => &self.u,
            Field::Velocity => &self.v,
            Field::Acceleration => &self.a,
        }
    }

    /// Column (time step) `k` of a field.
    pub fn column(&self, f: Field, k: usize) -> &[f64] {
        &self.field(f)[k * self.dofs..(k + 1) * self.dofs]
    }

    pub fn matrix(&self, f: Field) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.dofs, self.len(), self.field(f))
    }

    /// From u, v, a snapshot matrices sharing a time grid.
    pub fn from_snapshots(u: SnapshotMatrix, v: SnapshotMatrix, a: SnapshotMatrix) -> Result<FieldHistory> {
        if u.data.shape() != v.data.shape() || u.data.shape() != a.data.shape() || u.times != v.times || u.times != a.times {
            return Err(Error::Dimension("u, v, a snapshot sets differ in shape or times".into()));
        }
        let take = |s: SnapshotMatrix| s.data.data.into();
        Ok(FieldHistory { dofs: u.dofs(), times: u.times.clone(), u: take(u), v: take(v), a: take(a) })
    }

    pub fn snapshots(&self, f: Field) -> Result<SnapshotMatrix> {
        SnapshotMatrix::new(self.matrix(f), f, self.times.clone())
    }

    /// Rows `lo..=hi` of every field, for comparing a monolithic run with a
    /// subdomain on a matching grid.
    pub fn restrict(&self, lo: usize, hi: usize) -> Result<FieldHistory> {
        if lo > hi || hi >= self.dofs {
            return Err(Error::InvalidArgument(format!("rows {lo}..={hi} outside 0..{}", self.dofs)));
        }
        let mut out = FieldHistory::new(hi - lo + 1);
        out.times = self.times.clone();
        for k in 0..self.len() {
            for (dst, f) in [(&mut out.u, Field::Displacement), (&mut out.v, Field::Velocity), (&mut out.a, Field::Acceleration)] {
                dst.extend_from_slice(&self.column(f, k)[lo..=hi]);
            }
        }
        Ok(out)
    }
}

/// Keeps every `stride`-th recorded state of each subdomain.
#[derive(Debug, Clone)]
pub struct HistoryRecorder {
    pub stride: usize,
    pub histories: Vec<FieldHistory>,
}

impl HistoryRecorder {
    pub fn new(stride: usize) -> Self {
        HistoryRecorder { stride: stride.max(1), histories: Vec::new() }
    }
}

impl HistorySink for HistoryRecorder {
    fn record(&mut self, step: usize, states: &[KinematicState]) -> Result<()> {
        if step % self.stride != 0 {
            return Ok(());
        }
        if self.histories.is_empty() {
            self.histories = states.iter().map(|s| FieldHistory::new(s.len())).collect();
        }
        if self.histories.len() != states.len() {
            return Err(Error::Dimension("subdomain count changed during recording".into()));
        }
        for (h, s) in self.histories.iter_mut().zip(states) {
            h.push(s)?;
        }
        Ok(())
    }
}

/// E = √(Σ‖ũ − u‖²) / √(Σ‖u‖²) over stacked time steps.
pub fn mse(test: &[f64], reference: &[f64]) -> Result<f64> {
    if test.len() != reference.len() {
        return Err(Error::Dimension(format!("histories have {} and {} entries", test.len(), reference.len())));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (t, r) in test.iter().zip(reference) {
        num += (t - r) * (t - r);
        den += r * r;
    }
    if den == 0.0 {
        return Err(Error::Undefined("reference history is identically zero".into()));
    }
    Ok((num / den).sqrt())
}

/// (u, v, a) errors of one recorded history against another.
pub fn mse_triple(test: &FieldHistory, reference: &FieldHistory) -> Result<[f64; 3]> {
    check_grid(&test.times, &reference.times)?;
    if test.dofs != reference.dofs {
        return Err(Error::Dimension(format!("{} vs {} dofs", test.dofs, reference.dofs)));
    }
    let mut out = [0.0; 3];
    for (k, f) in Field::ALL.into_iter().enumerate() {
        out[k] = mse(test.field(f), reference.field(f))?;
    }
    Ok(out)
}

fn check_grid(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} vs {} time steps", a.len(), b.len())));
    }
    let scale = b.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(1e-300);
    if a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-9 * scale) {
        return Err(Error::Dimension("time grids differ".into()));
    }
    Ok(())
}

/// Streams errors against a stored reference without keeping the test run.
pub struct MseAccumulator<'a> {
    reference: &'a [FieldHistory],
    stride: usize,
    num: Vec<[f64; 3]>,
    den: Vec<[f64; 3]>,
    matched: usize,
}

impl<'a> MseAccumulator<'a> {
    /// `stride` must be the stride the reference was recorded with.
    pub fn new(reference: &'a [FieldHistory], stride: usize) -> Self {
        let n = reference.len();
        MseAccumulator { reference, stride: stride.max(1), num: vec![[0.0; 3]; n], den: vec![[0.0; 3]; n], matched: 0 }
    }

    /// Per-subdomain (u, v, a) errors; fails if the run did not cover the
    /// whole reference.
    pub fn finish(&self) -> Result<Vec<[f64; 3]>> {
        let expected = self.reference.first().map_or(0, |h| h.len());
        if self.matched != expected {
            return Err(Error::Dimension(format!("{} of {expected} reference steps matched", self.matched)));
        }
        self.num
            .iter()
            .zip(&self.den)
            .map(|(n, d)| {
                let mut e = [0.0; 3];
                for k in 0..3 {
                    if d[k] == 0.0 {
                        return Err(Error::Undefined("reference history is identically zero".into()));
                    }
                    e[k] = (n[k] / d[k]).sqrt();
                }
                Ok(e)
            })
            .collect()
    }
}

impl HistorySink for MseAccumulator<'_> {
    fn record(&mut self, step: usize, states: &[KinematicState]) -> Result<()> {
        if step % self.stride != 0 {
            return Ok(());
        }
        let k = step / self.stride;
        if states.len() != self.reference.len() {
            return Err(Error::Dimension("subdomain count differs from the reference".into()));
        }
        for (i, (s, h)) in states.iter().zip(self.reference).enumerate() {
            if k >= h.len() || s.len() != h.dofs {
                return Err(Error::Dimension(format!("step {step} not in reference of subdomain {i}")));
            }
            let tol = 1e-9 * h.times.last().copied().unwrap_or(0.0).abs().max(1e-300);
            if (h.times[k] - s.t).abs() > tol {
                return Err(Error::Dimension(format!("time {} vs reference {}", s.t, h.times[k])));
            }
            for (f, field) in Field::ALL.into_iter().enumerate() {
                let r = h.column(field, k);
                let t = s.field(field).as_slice();
                for (x, y) in t.iter().zip(r) {
                    self.num[i][f] += (x - y) * (x - y);
                    self.den[i][f] += y * y;
                }
            }
        }
        self.matched += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    /// Per subdomain (u, v, a).
    pub mse: [[f64; 3]; 2],
    pub cpu_seconds: f64,
    pub schwarz_iterations: usize,
    pub basis_sizes: [Option<usize>; 2],
    pub sample_counts: [Option<usize>; 2],
}

impl RunRecord {
    pub fn mean_displacement_mse(&self) -> f64 {
        0.5 * (self.mse[0][0] + self.mse[1][0])
    }
}

pub const CSV_HEADER: [&str; 13] =
    ["label", "M1", "M2", "Ne1", "Ne2", "cpu_s", "mse_u1", "mse_u2", "mse_v1", "mse_v2", "mse_a1", "mse_a2", "NS"];

fn opt(x: Option<usize>) -> String {
    x.map_or_else(|| "-".to_string(), |v| v.to_string())
}

pub fn write_records_csv<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        let row = [
            r.label.clone(),
            opt(r.basis_sizes[0]),
            opt(r.basis_sizes[1]),
            opt(r.sample_counts[0]),
            opt(r.sample_counts[1]),
            format!("{:.6}", r.cpu_seconds),
            format!("{:.6e}", r.mse[0][0]),
            format!("{:.6e}", r.mse[1][0]),
            format!("{:.6e}", r.mse[0][1]),
            format!("{:.6e}", r.mse[1][1]),
            format!("{:.6e}", r.mse[0][2]),
            format!("{:.6e}", r.mse[1][2]),
            r.schwarz_iterations.to_string(),
        ];
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Format("unexpected metrics header".into()));
    }
    let opt = |s: &str| -> Result<Option<usize>> {
        if s == "-" {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| Error::Format(format!("bad count '{s}'")))
        }
    };
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Format(format!("bad number '{s}'"))) };
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_err)?;
        let f = |i: usize| row.get(i).unwrap_or("");
        out.push(RunRecord {
            label: f(0).to_string(),
            basis_sizes: [opt(f(1))?, opt(f(2))?],
            sample_counts: [opt(f(3))?, opt(f(4))?],
            cpu_seconds: num(f(5))?,
            mse: [[num(f(6))?, num(f(8))?, num(f(10))?], [num(f(7))?, num(f(9))?, num(f(11))?]],
            schwarz_iterations: f(12).parse().map_err(|_| Error::Format(format!("bad N_S '{}'", f(12))))?,
        });
    }
    Ok(out)
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoRow {
    pub label: String,
    pub cpu_seconds: f64,
    pub mean_mse_u: f64,
    /// No other row is at least as good on both axes and better on one.
    pub pareto_optimal: bool,
}

pub fn pareto_table(records: &[RunRecord]) -> Vec<ParetoRow> {
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.cpu_seconds, r.mean_displacement_mse())).collect();
    let mut rows: Vec<ParetoRow> = records
        .iter()
        .zip(&pts)
        .map(|(r, &(c, e))| ParetoRow {
            label: r.label.clone(),
            cpu_seconds: c,
            mean_mse_u: e,
            pareto_optimal: !pts.iter().any(|&(c2, e2)| c2 <= c && e2 <= e && (c2 < c || e2 < e)),
        })
        .collect();
    rows.sort_by(|a, b| a.cpu_seconds.total_cmp(&b.cpu_seconds));
    rows
}
