//! File formats: CSV tables and JSON reports with a provenance header,
//! Matrix Market matrices, and the binary trajectory snapshot.
//!
//! CSV files start with `#` comment lines, `# format_version=1` followed by
//! one `# key=value` line per resolved configuration entry; the table itself
//! is RFC 4180 with `.` decimals.
//!
//! The snapshot is little endian: `u64 n`, `u64 nt`, `f64 dt`, then `nt + 1`
//! records of `6n` `f64` values, the positions `q` followed by the
//! velocities `v` in interleaved node order.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::assembly::{DiscreteSystem, State};
use crate::banded::SymBanded;
use crate::error::{Error, Result};
use crate::evolution::{ControlTriple, TimeGrid, Trajectory};
use crate::model::ContinuousState;

pub const FORMAT_VERSION: u32 = 1;

/// Resolved configuration written at the top of every output file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Header {
    entries: BTreeMap<String, String>,
}

impl Header {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        self.entries.insert(key.into(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// The `#` comment block that opens every CSV file.
pub fn write_comment_header<W: Write>(out: &mut W, header: &Header) -> Result<()> {
    writeln!(out, "# format_version={FORMAT_VERSION}")?;
    for (k, v) in &header.entries {
        writeln!(out, "# {k}={}", v.replace('\n', " "))?;
    }
    Ok(())
}

/// Formats a float so that it parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// Header block followed by a numeric table.
pub fn write_csv<W, I>(out: &mut W, header: &Header, columns: &[&str], rows: I) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = Vec<f64>>,
{
    write_comment_header(out, header)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns).map_err(csv_error)?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Shape {
                expected: columns.len(),
                found: row.len(),
            });
        }
        w.write_record(row.iter().map(|x| fmt_f64(*x))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_csv`], returning the header entries,
/// column names and rows.
pub fn read_csv<R: Read>(input: R) -> Result<(Header, Vec<String>, Vec<Vec<f64>>)> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text)?;
    let mut header = Header::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
            if k != "format_version" {
                header.insert(k, v);
            }
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let columns = r.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_error)?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Io(format!("bad number {f:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, columns, rows))
}

pub const TRAJECTORY_COLUMNS: [&str; 8] = ["t", "energy", "w_L", "xi_L", "s_L", "w_t_L", "xi_t_L", "s_t_L"];

/// Energies and boundary traces per time level.
pub fn write_trajectory_csv<W: Write>(out: &mut W, header: &Header, traj: &Trajectory) -> Result<()> {
    let rows = (0..traj.grid.samples()).map(|j| {
        let mut row = vec![traj.grid.time(j), traj.energy[j]];
        row.extend(traj.position.sample(j));
        row.extend(traj.velocity.sample(j));
        row
    });
    write_csv(out, header, &TRAJECTORY_COLUMNS, rows)
}

pub const CONTROL_COLUMNS: [&str; 4] = ["t", "u1", "u2", "u3"];

pub fn write_controls_csv<W: Write>(out: &mut W, header: &Header, tg: &TimeGrid, controls: &ControlTriple) -> Result<()> {
    if controls.len() != tg.samples() {
        return Err(Error::Shape {
            expected: tg.samples(),
            found: controls.len(),
        });
    }
    let rows = (0..tg.samples()).map(|j| {
        let mut row = vec![tg.time(j)];
        row.extend(controls.sample(j));
        row
    });
    write_csv(out, header, &CONTROL_COLUMNS, rows)
}

#[derive(Serialize)]
struct JsonDocument<'a, T: Serialize> {
    format_version: u32,
    config: &'a BTreeMap<String, String>,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON object carrying `format_version`, `config` and the fields of
/// `body`.
pub fn write_json<W: Write, T: Serialize>(out: &mut W, header: &Header, body: &T) -> Result<()> {
    let doc = JsonDocument {
        format_version: FORMAT_VERSION,
        config: &header.entries,
        body,
    };
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// Symmetric coordinate format, lower triangle, 1-based.
pub fn write_matrix_market_symmetric<W: Write>(out: &mut W, a: &SymBanded) -> Result<()> {
    let mut entries = Vec::new();
    for j in 0..a.dim() {
        for i in j..(j + a.bandwidth() + 1).min(a.dim()) {
            let v = a.get(i, j);
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(out, "{} {} {}", a.dim(), a.dim(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {}", i + 1, j + 1, fmt_f64(v))?;
    }
    Ok(())
}

/// General coordinate format, nonzeros only, 1-based.
pub fn write_matrix_market_general<W: Write>(out: &mut W, a: &DMatrix<f64>) -> Result<()> {
    let mut entries = Vec::new();
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if a[(i, j)] != 0.0 {
                entries.push((i, j, a[(i, j)]));
            }
        }
    }
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.nrows(), a.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {}", i + 1, j + 1, fmt_f64(v))?;
    }
    Ok(())
}

/// Dumps `M`, `K`, `B` and `C` into `dir` as `mass.mtx`, `stiffness.mtx`,
/// `control.mtx` and `trace.mtx`.
pub fn write_system_matrices(dir: &std::path::Path, sys: &DiscreteSystem) -> Result<()> {
    let mut f = std::fs::File::create(dir.join("mass.mtx"))?;
    write_matrix_market_symmetric(&mut f, sys.mass())?;
    let mut f = std::fs::File::create(dir.join("stiffness.mtx"))?;
    write_matrix_market_symmetric(&mut f, sys.stiffness())?;
    let mut f = std::fs::File::create(dir.join("control.mtx"))?;
    write_matrix_market_general(&mut f, &sys.control_matrix())?;
    let mut f = std::fs::File::create(dir.join("trace.mtx"))?;
    write_matrix_market_general(&mut f, &sys.trace_matrix())?;
    Ok(())
}

/// Decoded binary snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: usize,
    pub dt: f64,
    pub states: Vec<State>,
}

/// Writes a trajectory stored with every state.
pub fn write_snapshot<W: Write>(out: &mut W, traj: &Trajectory) -> Result<()> {
    if traj.states.len() != traj.grid.samples() {
        return Err(Error::Shape {
            expected: traj.grid.samples(),
            found: traj.states.len(),
        });
    }
    let dofs = traj.initial.dofs();
    out.write_all(&((dofs / 3) as u64).to_le_bytes())?;
    out.write_all(&(traj.grid.steps() as u64).to_le_bytes())?;
    out.write_all(&traj.grid.dt().to_le_bytes())?;
    for s in &traj.states {
        for x in s.q.iter().chain(s.v.iter()) {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_snapshot<R: Read>(input: &mut R) -> Result<Snapshot> {
    let n = read_u64(input)? as usize;
    let nt = read_u64(input)? as usize;
    let dt = read_f64(input)?;
    let d = 3 * n;
    let mut states = Vec::with_capacity(nt + 1);
    for _ in 0..=nt {
        let mut x = nalgebra::DVector::zeros(2 * d);
        for v in x.iter_mut() {
            *v = read_f64(input)?;
        }
        states.push(State::from_vector(&x));
    }
    Ok(Snapshot { n, dt, states })
}

pub const INITIAL_COLUMNS: [&str; 7] = ["x", "w", "xi", "s", "w_t", "xi_t", "s_t"];

/// Initial data as nodal samples on `x_j = j L / n`, `j = 0..=n`, one row
/// per node with columns [`INITIAL_COLUMNS`]. The boundary velocities are
/// the last row's velocities.
pub fn read_initial_csv<R: Read>(input: R) -> Result<ContinuousState> {
    let (_, columns, rows) = read_csv(input)?;
    let want: Vec<String> = INITIAL_COLUMNS.iter().map(|s| s.to_string()).collect();
    if columns != want {
        return Err(Error::Io(format!("expected columns {want:?}, found {columns:?}")));
    }
    if rows.len() < 2 {
        return Err(Error::Shape {
            expected: 2,
            found: rows.len(),
        });
    }
    let col = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    let last = &rows[rows.len() - 1];
    Ok(ContinuousState {
        w: col(1),
        xi: col(2),
        s: col(3),
        w_t: col(4),
        xi_t: col(5),
        s_t: col(6),
        boundary_velocity: [last[4], last[5], last[6]],
    })
}

pub fn write_initial_csv<W: Write>(out: &mut W, header: &Header, c: &ContinuousState, length: f64) -> Result<()> {
    let n = c.nodes() - 1;
    let rows = (0..=n).map(|j| {
        vec![
            j as f64 * length / n as f64,
            c.w[j],
            c.xi[j],
            c.s[j],
            c.w_t[j],
            c.xi_t[j],
            c.s_t[j],
        ]
    });
    write_csv(out, header, &INITIAL_COLUMNS, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, Grid};
    use crate::evolution::solve_homogeneous;
    use crate::model::PhysicalParams;

    fn header() -> Header {
        let mut h = Header::new();
        h.insert("n", 4).insert("command", "simulate");
        h
    }

    #[test]
    fn csv_round_trip() {
        let mut buf = Vec::new();
        let rows = vec![vec![0.1, -2.5e-20], vec![1.0 / 3.0, 7.0]];
        write_csv(&mut buf, &header(), &["a", "b"], rows.clone()).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# format_version=1\n# command=simulate\n# n=4\na,b\n"));
        let (h, cols, back) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(h.get("n"), Some("4"));
        assert_eq!(cols, vec!["a", "b"]);
        assert_eq!(back, rows);
    }

    #[test]
    fn csv_rejects_ragged_rows() {
        let mut buf = Vec::new();
        assert!(write_csv(&mut buf, &header(), &["a", "b"], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn json_has_version_and_config() {
        #[derive(Serialize)]
        struct Body {
            value: f64,
        }
        let mut buf = Vec::new();
        write_json(&mut buf, &header(), &Body { value: 2.0 }).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["format_version"], 1);
        assert_eq!(v["config"]["n"], "4");
        assert_eq!(v["value"], 2.0);
    }

    #[test]
    fn snapshot_round_trip() {
        let sys = assemble(&PhysicalParams::default(), &Grid::new(4, 1.0).unwrap()).unwrap();
        let u0 = State::new(nalgebra::DVector::from_fn(12, |i, _| i as f64 * 0.1), nalgebra::DVector::zeros(12));
        let traj = solve_homogeneous(&sys, &u0, &TimeGrid::new(0.5, 5).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &traj).unwrap();
        assert_eq!(buf.len(), 24 + 6 * 24 * 8);
        let snap = read_snapshot(&mut buf.as_slice()).unwrap();
        assert_eq!(snap.n, 4);
        assert_eq!(snap.dt, 0.1);
        assert_eq!(snap.states, traj.states);
        assert!(read_snapshot(&mut &buf[..100]).is_err());
    }

    #[test]
    fn matrix_market_counts() {
        let sys = assemble(&PhysicalParams::default(), &Grid::new(4, 1.0).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_matrix_market_symmetric(&mut buf, sys.mass()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("%%MatrixMarket matrix coordinate real symmetric"));
        let dims: Vec<usize> = lines.next().unwrap().split(' ').map(|x| x.parse().unwrap()).collect();
        assert_eq!(&dims[..2], &[12, 12]);
        assert_eq!(lines.count(), dims[2]);
        let mut buf = Vec::new();
        write_matrix_market_general(&mut buf, &sys.control_matrix()).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("12 3 3"));
    }

    #[test]
    fn initial_csv_round_trip() {
        let c = ContinuousState::sample(
            4,
            1.0,
            [|x: f64| x, |x: f64| x * x, |_| 0.0, |x: f64| 2.0 * x, |_| 0.0, |x: f64| -x],
        );
        let mut buf = Vec::new();
        write_initial_csv(&mut buf, &header(), &c, 1.0).unwrap();
        assert_eq!(read_initial_csv(buf.as_slice()).unwrap(), c);
    }
}
