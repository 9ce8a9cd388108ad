//! Cross-product sweeps over input location and disturbance frequency.

use rayon::prelude::*;

use super::config::{Case, ExperimentConfig};
use super::metrics::{steady_state_amplitude, Metric, STEADY_STATE_WINDOW};
use crate::error::{Error, Result};
use crate::simulation::{run_simulation, LoopMode, SimRecord};

/// Sweep grid plus the shared configuration each cell is derived from.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: ExperimentConfig,
}

impl SweepSpec {
    pub fn new(base: ExperimentConfig) -> Result<Self> {
        base.validate()?;
        let s = &base.sweep;
        if s.i_u.is_empty() || s.f_dist.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        let mut iu = s.i_u.clone();
        iu.sort_unstable();
        iu.dedup();
        let mut fd = s.f_dist.clone();
        fd.sort_by(f64::total_cmp);
        fd.dedup();
        if iu.len() != s.i_u.len() || fd.len() != s.f_dist.len() {
            return Err(Error::Config("sweep grid has duplicate entries".into()));
        }
        Ok(SweepSpec { base })
    }

    pub fn case(&self) -> Case {
        self.base.sweep.case
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.base.sweep.f_dist
    }

    pub fn input_elements(&self) -> &[usize] {
        &self.base.sweep.i_u
    }

    /// Cells in row-major `(f_dist, i_u)` order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        (0..self.frequencies().len())
            .flat_map(|fi| (0..self.input_elements().len()).map(move |ii| (fi, ii)))
            .collect()
    }

    pub fn cell_config(&self, fi: usize, ii: usize) -> ExperimentConfig {
        self.base
            .cell(self.frequencies()[fi], self.input_elements()[ii])
    }

    /// The open-loop run of a row. `u ≡ 0`, so the input location is irrelevant.
    pub fn open_loop_config(&self, fi: usize) -> ExperimentConfig {
        let mut c = self.cell_config(fi, 0);
        c.simulation.mode = LoopMode::OpenLoop;
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Done {
        metric: Metric,
        saturation_fraction: f64,
    },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub case: Case,
    pub f_dist: f64,
    pub i_u: usize,
    pub d_f: usize,
    pub r_u: f64,
    pub outcome: CellOutcome,
}

impl CellResult {
    pub fn metric(&self) -> Option<&Metric> {
        match &self.outcome {
            CellOutcome::Done { metric, .. } => Some(metric),
            CellOutcome::Failed(_) => None,
        }
    }
}

/// Rows in `(f_dist, i_u)` grid order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pub rows: Vec<CellResult>,
}

impl ResultsTable {
    pub fn get(&self, f_dist: f64, i_u: usize) -> Option<&CellResult> {
        self.rows
            .iter()
            .find(|r| r.f_dist == f_dist && r.i_u == i_u)
    }

    pub fn failed(&self) -> impl Iterator<Item = &CellResult> {
        self.rows
            .iter()
            .filter(|r| matches!(r.outcome, CellOutcome::Failed(_)))
    }
}

/// Everything a sweep produced.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub spec: SweepSpec,
    pub table: ResultsTable,
    /// One per frequency.
    pub open_loop: Vec<Option<SimRecord>>,
    /// One per table row.
    pub closed_loop: Vec<Option<SimRecord>>,
}

/// Displacement amplitude over the trailing steady-state window.
pub fn displacement_amplitude(rec: &SimRecord) -> Result<f64> {
    steady_state_amplitude(&rec.y_disp, &rec.t, STEADY_STATE_WINDOW)
}

/// Open- and closed-loop runs of one configuration.
pub fn run_pair(cfg: &ExperimentConfig) -> Result<(SimRecord, SimRecord, Metric)> {
    let mut open = cfg.clone();
    open.simulation.mode = LoopMode::OpenLoop;
    let mut closed = cfg.clone();
    closed.simulation.mode = LoopMode::ClosedLoop;
    let ol = run_simulation(&open.sim_config()?)?;
    let cl = run_simulation(&closed.sim_config()?)?;
    let metric = Metric::new(displacement_amplitude(&ol)?, displacement_amplitude(&cl)?);
    Ok((ol, cl, metric))
}

enum Job {
    Open(usize),
    Closed(usize, usize),
}

fn run_config(cfg: &ExperimentConfig) -> Result<SimRecord> {
    run_simulation(&cfg.sim_config()?)
}

/// Run every cell of the grid on `workers` threads.
///
/// Open-loop runs are shared per frequency. Cells fail independently; a
/// failed open-loop run fails its whole row. Output order does not depend
/// on scheduling.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;

    let cells = spec.cells();
    let jobs: Vec<Job> = (0..spec.frequencies().len())
        .map(Job::Open)
        .chain(cells.iter().map(|&(fi, ii)| Job::Closed(fi, ii)))
        .collect();

    let results: Vec<Result<SimRecord>> = pool.install(|| {
        jobs.par_iter()
            .map(|job| match *job {
                Job::Open(fi) => run_config(&spec.open_loop_config(fi)),
                Job::Closed(fi, ii) => {
                    let mut c = spec.cell_config(fi, ii);
                    c.simulation.mode = LoopMode::ClosedLoop;
                    run_config(&c)
                }
            })
            .collect()
    });

    let n_f = spec.frequencies().len();
    let mut results = results.into_iter();
    let open: Vec<Result<SimRecord>> = results.by_ref().take(n_f).collect();
    let closed: Vec<Result<SimRecord>> = results.collect();

    let mut table = ResultsTable::default();
    let mut closed_records = Vec::with_capacity(cells.len());
    for (&(fi, ii), cl) in cells.iter().zip(closed) {
        let cfg = spec.cell_config(fi, ii);
        let outcome = match (&open[fi], &cl) {
            (Err(e), _) => CellOutcome::Failed(format!("open loop: {e}")),
            (_, Err(e)) => CellOutcome::Failed(e.to_string()),
            (Ok(ol), Ok(cl)) => match (displacement_amplitude(ol), displacement_amplitude(cl)) {
                (Ok(y_ol), Ok(y_cl)) => CellOutcome::Done {
                    metric: Metric::new(y_ol, y_cl),
                    saturation_fraction: cl.saturation_fraction,
                },
                (Err(e), _) | (_, Err(e)) => CellOutcome::Failed(e.to_string()),
            },
        };
        if let CellOutcome::Failed(msg) = &outcome {
            log::warn!(
                "cell f_dist = {} Hz, i_u = {} failed: {msg}",
                cfg.simulation.f_dist,
                cfg.simulation.i_u
            );
        }
        table.rows.push(CellResult {
            case: spec.case(),
            f_dist: cfg.simulation.f_dist,
            i_u: cfg.simulation.i_u,
            d_f: cfg.controller.d_f,
            r_u: cfg.controller.r_u,
            outcome,
        });
        closed_records.push(cl.ok());
    }

    Ok(SweepOutput {
        spec: spec.clone(),
        table,
        open_loop: open.into_iter().map(Result::ok).collect(),
        closed_loop: closed_records,
    })
}
