//! Convergence records and their CSV encoding.

use std::io::{self, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str = "iteration,sccp_index,exploitability,duality_gap,wall_time_ns";

/// One evaluation point of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub total_iteration: u64,
    pub exploitability: f64,
    pub duality_gap: Option<f64>,
    /// Index of the regularized subproblem, starting at 1; 0 for runs that
    /// have none.
    pub sccp_index: u64,
    pub wall_time_ns: u64,
}

/// Result of a solver run: the final strategy, the evaluation trace, and
/// notes about unusual configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput<P> {
    pub profile: P,
    pub records: Vec<ConvergenceRecord>,
    pub flags: Vec<String>,
}

impl<P> RunOutput<P> {
    pub fn final_exploitability(&self) -> Option<f64> {
        self.records.last().map(|r| r.exploitability)
    }
}

/// Formats a float with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(mut out: W, records: &[ConvergenceRecord]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        let gap = r.duality_gap.map(format_float).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            r.total_iteration,
            r.sccp_index,
            format_float(r.exploitability),
            gap,
            r.wall_time_ns
        )?;
    }
    Ok(())
}

pub fn to_csv_string(records: &[ConvergenceRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, records).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

/// Evaluation cadence shared by all runs.
#[derive(Debug, Clone)]
pub(crate) struct Recorder {
    every: u64,
    total: u64,
    clock: Option<Instant>,
    pub records: Vec<ConvergenceRecord>,
}

impl Recorder {
    /// Records are taken every `every` iterations and at the final one.
    /// Wall time is left at zero unless `wall_clock` is set, keeping record
    /// streams byte-identical across runs.
    pub fn new(every: u64, total: u64, wall_clock: bool) -> Self {
        Recorder {
            every: every.max(1),
            total,
            clock: wall_clock.then(Instant::now),
            records: Vec::new(),
        }
    }

    pub fn due(&self, iteration: u64) -> bool {
        iteration.is_multiple_of(self.every) || iteration == self.total
    }

    pub fn push(
        &mut self,
        total_iteration: u64,
        sccp_index: u64,
        exploitability: f64,
        duality_gap: Option<f64>,
    ) {
        let wall_time_ns = self.clock.map_or(0, |c| {
            u64::try_from(c.elapsed().as_nanos()).unwrap_or(u64::MAX)
        });
        self.records.push(ConvergenceRecord {
            total_iteration,
            exploitability,
            duality_gap,
            sccp_index,
            wall_time_ns,
        });
    }
}

/// Default cadence: about a thousand records per run.
pub fn default_eval_every(total_iterations: u64) -> u64 {
    (total_iterations / 1000).max(1)
}
