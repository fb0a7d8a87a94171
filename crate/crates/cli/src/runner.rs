//! Parallel execution of experiments and sweeps.

use rayon::prelude::*;

use beliefnet_core::protocol::TraceEvent;
use beliefnet_core::sim::{run_once, ExperimentConfig, ExperimentMetrics, SimError, SweepAxis, SweepRow};

/// One experiment per axis value (or a single one without an axis). Runs
/// execute in parallel; rows and runs come back in canonical order.
pub fn run_rows(template: &ExperimentConfig, axis: Option<&SweepAxis>) -> Result<Vec<SweepRow>, SimError> {
    let points: Vec<(f64, ExperimentConfig)> = match axis {
        None => vec![(f64::NAN, template.clone())],
        Some(a) => (0..a.len()).map(|i| Ok((a.value(i), a.configure(template, i)?))).collect::<Result<_, SimError>>()?,
    };
    for (_, cfg) in &points {
        cfg.validate()?;
    }
    let jobs: Vec<(usize, usize)> = points
        .iter()
        .enumerate()
        .flat_map(|(p, (_, cfg))| (0..cfg.runs).map(move |r| (p, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(p, r)| run_once(&points[p].1, r, &mut ()))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows: Vec<SweepRow> = points
        .iter()
        .map(|(v, _)| SweepRow { axis_value: *v, metrics: ExperimentMetrics::default() })
        .collect();
    for (&(p, _), m) in jobs.iter().zip(results) {
        rows[p].metrics.runs.push(m);
    }
    Ok(rows)
}

/// Events of one run, tagged with its row and run index.
pub type RunTrace = (usize, usize, Vec<TraceEvent>);

/// Sequential variant that also collects the event trace of every run, as
/// `(row, run, events)`.
pub fn run_rows_traced(
    template: &ExperimentConfig,
    axis: Option<&SweepAxis>,
) -> Result<(Vec<SweepRow>, Vec<RunTrace>), SimError> {
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let count = axis.map_or(1, SweepAxis::len);
    for i in 0..count {
        let (value, cfg) = match axis {
            None => (f64::NAN, template.clone()),
            Some(a) => (a.value(i), a.configure(template, i)?),
        };
        let mut metrics = ExperimentMetrics::default();
        for run in 0..cfg.runs {
            let mut events = Vec::new();
            metrics.runs.push(run_once(&cfg, run, &mut events)?);
            traces.push((i, run, events));
        }
        rows.push(SweepRow { axis_value: value, metrics });
    }
    Ok((rows, traces))
}
