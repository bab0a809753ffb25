use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use laminate_hum::assembly::{assemble_with, AssemblyOptions, DiscreteSystem, Grid, State};
use laminate_hum::evolution::{solve_damped, solve_homogeneous, TimeGrid};
use laminate_hum::export::{
    fmt_f64, read_initial_csv, write_comment_header, write_controls_csv, write_csv, write_json, write_snapshot,
    write_system_matrices, write_trajectory_csv,
};
use laminate_hum::hum::{null_control_pipeline, InitialData, PipelineConfig, PipelineOutcome};
use laminate_hum::modal::ModalFilter;
use laminate_hum::observability::{estimate_observability_constant, sample_rng};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{InitialSpec, Resolved};
use crate::CliError;

/// Files written by a command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
}

struct Sink {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Sink {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> laminate_hum::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        self.files.push(path);
        Ok(())
    }

    fn finish(self) -> Outcome {
        Outcome { files: self.files }
    }
}

fn system(r: &Resolved) -> Result<DiscreteSystem, CliError> {
    let grid = Grid::new(r.n, r.params.length)?;
    Ok(assemble_with(&r.params, &grid, AssemblyOptions { lumped: r.lumped })?)
}

fn read_initial_file(path: &Path, sys: &DiscreteSystem) -> Result<State, CliError> {
    let file = File::open(path).map_err(|e| CliError::Config(format!("initial = file:{}: {e}", path.display())))?;
    let cs = read_initial_csv(file).map_err(|e| CliError::Config(format!("initial = file:{}: {e}", path.display())))?;
    Ok(sys.interpolate(&cs)?)
}

fn initial_state(r: &Resolved, sys: &DiscreteSystem) -> Result<State, CliError> {
    match &r.initial {
        InitialSpec::Zero => Ok(State::zeros(sys.dofs())),
        InitialSpec::Random => {
            let f = ModalFilter::new(sys, r.m)?;
            Ok(f.random_state(&mut sample_rng(r.seed, 0)))
        }
        InitialSpec::Mode(k) => {
            let f = ModalFilter::new(sys, r.m.max(*k))?;
            Ok(f.mode_state(k - 1)?)
        }
        InitialSpec::File(p) => read_initial_file(p, sys),
    }
}

#[derive(Serialize)]
struct SimulationSummary {
    n: usize,
    nt: usize,
    horizon: f64,
    dt: f64,
    damped: bool,
    initial_energy: f64,
    final_energy: f64,
    /// `max_j |E_j - E_0| / E_0`.
    relative_drift: f64,
    energy_non_increasing: bool,
}

/// Free (or damped) trajectory: `trajectory.csv`, `summary.json`, and on
/// request `snapshot.bin` and the Matrix Market dumps.
pub fn cmd_simulate(r: &Resolved, out: &Path) -> Result<Outcome, CliError> {
    let sys = system(r)?;
    let u0 = initial_state(r, &sys)?;
    let tg = TimeGrid::new(r.horizon, r.nt)?;
    let traj = if r.damped {
        solve_damped(&sys, &u0, &tg)?
    } else {
        solve_homogeneous(&sys, &u0, &tg)?
    };
    let header = r.header("simulate");
    let e0 = traj.energy[0];
    let summary = SimulationSummary {
        n: r.n,
        nt: r.nt,
        horizon: r.horizon,
        dt: tg.dt(),
        damped: r.damped,
        initial_energy: e0,
        final_energy: traj.energy[tg.steps()],
        relative_drift: traj.energy_drift(),
        energy_non_increasing: traj.energy.windows(2).all(|w| w[1] <= w[0] + 1e-14 * e0),
    };
    let mut sink = Sink::new(out)?;
    sink.write("trajectory.csv", |w| write_trajectory_csv(w, &header, &traj))?;
    sink.write("summary.json", |w| write_json(w, &header, &summary))?;
    if r.snapshot {
        sink.write("snapshot.bin", |w| write_snapshot(w, &traj))?;
    }
    if r.export_matrices {
        write_system_matrices(out, &sys)?;
        for name in ["mass.mtx", "stiffness.mtx", "control.mtx", "trace.mtx"] {
            sink.files.push(out.join(name));
        }
    }
    Ok(sink.finish())
}

pub const SAMPLE_COLUMNS: [&str; 7] = [
    "index",
    "energy_norm_sq",
    "weighted_trace",
    "ratio",
    "position_functional",
    "velocity_functional",
    "fractional_ratio",
];

/// `observability.json` and `samples.csv`.
pub fn cmd_observability(r: &Resolved, out: &Path) -> Result<Outcome, CliError> {
    r.params.validate_conservative()?;
    let sys = system(r)?;
    let filter = ModalFilter::new(&sys, r.m)?;
    let tg = TimeGrid::new(r.horizon, r.nt)?;
    let report = estimate_observability_constant(&sys, &tg, &filter, r.samples, r.seed)?;
    let header = r.header("observability");
    let mut sink = Sink::new(out)?;
    sink.write("observability.json", |w| write_json(w, &header, &report))?;
    let rows = report.samples.iter().map(|s| {
        vec![
            s.index as f64,
            s.energy_norm_sq,
            s.weighted_trace,
            s.ratio,
            s.position_functional,
            s.velocity_functional,
            s.fractional_ratio,
        ]
    });
    sink.write("samples.csv", |w| write_csv(w, &header, &SAMPLE_COLUMNS, rows))?;
    if r.export_matrices {
        write_system_matrices(out, &sys)?;
    }
    Ok(sink.finish())
}

fn pipeline_config(r: &Resolved) -> Result<PipelineConfig, CliError> {
    let initial = match &r.initial {
        InitialSpec::Zero => InitialData::Zero,
        InitialSpec::Random => InitialData::Random,
        InitialSpec::Mode(k) => InitialData::Mode(k - 1),
        InitialSpec::File(p) => InitialData::Given(read_initial_file(p, &system(r)?)?),
    };
    Ok(PipelineConfig {
        params: r.params,
        n: r.n,
        m: r.m,
        horizon: r.horizon,
        steps: r.nt,
        tol: r.tol,
        max_iter: r.max_iter,
        initial,
        seed: r.seed,
        weighting: r.weighting,
        tikhonov: r.tikhonov,
        assembly: AssemblyOptions { lumped: r.lumped },
    })
}

#[derive(Serialize)]
struct ControlDiagnostics<'a> {
    #[serde(flatten)]
    solution: &'a laminate_hum::hum::HumSolution,
    mu_min: f64,
    mu_max: f64,
    c_obs: f64,
    control_bound: f64,
    filtered_ratio: f64,
    unfiltered_ratio: f64,
    unfiltered_inputs: usize,
}

fn diagnostics(out: &PipelineOutcome) -> ControlDiagnostics<'_> {
    ControlDiagnostics {
        solution: &out.solution,
        mu_min: out.mu_min,
        mu_max: out.mu_max,
        c_obs: 1.0 / out.mu_min,
        control_bound: out.control_bound,
        filtered_ratio: out.filtered_ratio,
        unfiltered_ratio: out.unfiltered_ratio,
        unfiltered_inputs: out.unfiltered_inputs,
    }
}

/// `controls.csv`, `trajectory.csv` (controlled run) and `diagnostics.json`.
/// Non-convergence still writes every file before failing.
pub fn cmd_control(r: &Resolved, out: &Path) -> Result<Outcome, CliError> {
    if r.damped {
        return Err(CliError::Config("damped = true: null control needs the conservative system".into()));
    }
    let cfg = pipeline_config(r)?;
    let result = null_control_pipeline(&cfg)?;
    let header = r.header("control");
    let tg = TimeGrid::new(r.horizon, r.nt)?;
    let mut sink = Sink::new(out)?;
    sink.write("controls.csv", |w| write_controls_csv(w, &header, &tg, result.solution.controls()))?;
    sink.write("trajectory.csv", |w| write_trajectory_csv(w, &header, &result.trajectory))?;
    sink.write("diagnostics.json", |w| write_json(w, &header, &diagnostics(&result)))?;
    if r.export_matrices {
        write_system_matrices(out, &system(r)?)?;
    }
    if !result.solution.converged {
        return Err(CliError::NotConverged(format!(
            "CG stopped after {} iterations at relative residual {:e}; diagnostics in {}",
            result.solution.iterations,
            result.solution.residual_history.last().copied().unwrap_or(f64::NAN),
            out.display()
        )));
    }
    Ok(sink.finish())
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: usize,
    pub n: usize,
    pub m: usize,
    pub horizon: f64,
    pub gamma: f64,
    pub beta: f64,
    pub result: Result<SweepValues, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepValues {
    pub mu_min: f64,
    pub c_obs: f64,
    pub filtered_ratio: f64,
    pub unfiltered_ratio: f64,
    pub control_norm: f64,
    pub cg_iterations: usize,
    pub converged: bool,
}

pub const SWEEP_COLUMNS: [&str; 15] = [
    "cell",
    "n",
    "m",
    "T",
    "gamma",
    "beta",
    "status",
    "mu_min",
    "c_obs",
    "filtered_ratio",
    "unfiltered_ratio",
    "control_norm",
    "cg_iterations",
    "converged",
    "message",
];

/// Cartesian product of the sweep ranges, in row-major order over
/// `(n, m, T, gamma, beta)`.
pub fn sweep_cells(r: &Resolved) -> Vec<Resolved> {
    let ns = r.sweep_n.clone().unwrap_or_else(|| vec![r.n]);
    let ms: Vec<Option<usize>> = r
        .sweep_m
        .as_ref()
        .map_or_else(|| vec![None], |v| v.iter().copied().map(Some).collect());
    let ts: Vec<Option<f64>> = r
        .sweep_horizon
        .as_ref()
        .map_or_else(|| vec![None], |v| v.iter().copied().map(Some).collect());
    let gs = r.sweep_gamma.clone().unwrap_or_else(|| vec![r.params.gamma]);
    let bs = r.sweep_beta.clone().unwrap_or_else(|| vec![r.params.beta]);
    let mut cells = Vec::new();
    for &n in &ns {
        for &m in &ms {
            for &t in &ts {
                for &g in &gs {
                    for &b in &bs {
                        cells.push(r.cell(n, m, t, g, b));
                    }
                }
            }
        }
    }
    cells
}

fn run_cell(index: usize, c: &Resolved) -> SweepRow {
    let result = pipeline_config(c)
        .and_then(|cfg| null_control_pipeline(&cfg).map_err(CliError::Core))
        .map(|o| SweepValues {
            mu_min: o.mu_min,
            c_obs: 1.0 / o.mu_min,
            filtered_ratio: o.filtered_ratio,
            unfiltered_ratio: o.unfiltered_ratio,
            control_norm: o.solution.control_norm,
            cg_iterations: o.solution.iterations,
            converged: o.solution.converged,
        })
        .map_err(|e| e.to_string());
    SweepRow {
        cell: index,
        n: c.n,
        m: c.m,
        horizon: c.horizon,
        gamma: c.params.gamma,
        beta: c.params.beta,
        result,
    }
}

/// Runs every cell of the sweep in parallel; failing cells are recorded in
/// `sweep.csv` and do not stop the others.
pub fn cmd_sweep(r: &Resolved, out: &Path) -> Result<(Outcome, Vec<SweepRow>), CliError> {
    let cells = sweep_cells(r);
    let rows: Vec<SweepRow> = cells.par_iter().enumerate().map(|(i, c)| run_cell(i, c)).collect();
    let header = r.header("sweep");
    let mut sink = Sink::new(out)?;
    sink.write("sweep.csv", |w| {
        write_comment_header(w, &header)?;
        let mut cw = csv::Writer::from_writer(w);
        let io = |e: csv::Error| laminate_hum::Error::Io(e.to_string());
        cw.write_record(SWEEP_COLUMNS).map_err(io)?;
        for row in &rows {
            let mut rec = vec![
                row.cell.to_string(),
                row.n.to_string(),
                row.m.to_string(),
                fmt_f64(row.horizon),
                fmt_f64(row.gamma),
                fmt_f64(row.beta),
            ];
            match &row.result {
                Ok(v) => {
                    rec.push("ok".into());
                    rec.extend([v.mu_min, v.c_obs, v.filtered_ratio, v.unfiltered_ratio, v.control_norm].map(fmt_f64));
                    rec.push(v.cg_iterations.to_string());
                    rec.push(v.converged.to_string());
                    rec.push(String::new());
                }
                Err(msg) => {
                    rec.push("error".into());
                    rec.extend(std::iter::repeat_n(String::new(), 7));
                    rec.push(msg.clone());
                }
            }
            cw.write_record(&rec).map_err(io)?;
        }
        cw.flush()?;
        Ok(())
    })?;
    Ok((sink.finish(), rows))
}
