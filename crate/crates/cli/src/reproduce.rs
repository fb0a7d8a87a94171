//! The four figure-generating experiments.

use std::fs;
use std::path::{Path, PathBuf};

use beliefnet_core::protocol::StrategyConfig;
use beliefnet_core::sim::{ExperimentConfig, SimError, SweepAxis, SweepRow, Topology};
use beliefnet_core::{dsl, fixtures, SymbolId};

use crate::output;
use crate::runner::run_rows;

pub const DEFAULT_RUNS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    /// Unbridled message cost for 4 to 14 peers.
    Fig3,
    /// Unbridled coherence under message loss for 4 to 14 peers.
    Fig4,
    /// Controlled message cost for 5 to 1000 peers.
    Fig5,
    /// Controlled coherence under loss for several proliferation constants.
    Fig6,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }

    fn metric(self) -> (&'static str, &'static str) {
        match self {
            Figure::Fig3 | Figure::Fig5 => ("messages_sent", "messages sent"),
            Figure::Fig4 | Figure::Fig6 => ("coherent_fraction", "coherent peers (fraction)"),
        }
    }
}

pub const SMALL_GROUPS: [usize; 11] = [4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14];
pub const LARGE_GROUPS: [usize; 6] = [5, 10, 50, 100, 500, 1000];

/// One curve of a figure: a group-size sweep over a fixed template.
#[derive(Debug, Clone)]
pub struct Series {
    /// File stem, e.g. `fig4_loss0.5`.
    pub stem: String,
    pub label: String,
    pub template: ExperimentConfig,
    pub axis: SweepAxis,
}

/// The link-fault scenario every figure uses: the origin learns that the
/// device notification was not received.
pub fn base_config(seed: u64, runs: usize) -> ExperimentConfig {
    let kb = dsl::load_str(fixtures::LINK_FAULT).expect("bundled fixture loads");
    let mut cfg = ExperimentConfig::new(
        kb,
        SymbolId::new("link_flt_det").expect("valid"),
        SymbolId::new("dev_not_rcv").expect("valid"),
    );
    cfg.seed = seed;
    cfg.runs = runs;
    cfg
}

pub fn series(figure: Figure, seed: u64, runs: usize) -> Vec<Series> {
    let base = base_config(seed, runs);
    let small = SweepAxis::GroupSize(SMALL_GROUPS.to_vec());
    let large = SweepAxis::GroupSize(LARGE_GROUPS.to_vec());
    let controlled = |rho: f64| StrategyConfig::controlled(rho, 3).expect("valid rho");
    match figure {
        Figure::Fig3 => vec![Series {
            stem: "fig3".into(),
            label: "unbridled".into(),
            template: base,
            axis: small,
        }],
        Figure::Fig4 => [0.25, 0.5, 0.75]
            .into_iter()
            .map(|loss| {
                let mut t = base.clone();
                t.topology = Topology::Complete;
                t.loss_prob = loss;
                Series { stem: format!("fig4_loss{loss}"), label: format!("loss {loss}"), template: t, axis: small.clone() }
            })
            .collect(),
        Figure::Fig5 => {
            let mut c = base.clone();
            c.strategy = controlled(1.0);
            vec![
                Series { stem: "fig5_controlled".into(), label: "controlled (rho 1, T 3)".into(), template: c, axis: large.clone() },
                Series { stem: "fig5_unbridled".into(), label: "unbridled".into(), template: base, axis: large },
            ]
        }
        Figure::Fig6 => {
            let mut out = Vec::new();
            for loss in [0.5, 0.75] {
                for rho in [1.0, 0.5, 0.25] {
                    let mut t = base.clone();
                    t.strategy = controlled(rho);
                    t.loss_prob = loss;
                    out.push(Series {
                        stem: format!("fig6_loss{loss}_rho{rho}"),
                        label: format!("loss {loss}, rho {rho}"),
                        template: t,
                        axis: large.clone(),
                    });
                }
            }
            out
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ReproduceError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("writing {path}: {source}")]
    Csv { path: String, source: csv::Error },
}

fn create(path: &Path) -> Result<fs::File, ReproduceError> {
    fs::File::create(path).map_err(|source| ReproduceError::Io { path: path.display().to_string(), source })
}

/// Runs every series of `figure`, returning the rows per series.
pub fn compute(figure: Figure, seed: u64, runs: usize) -> Result<Vec<(Series, Vec<SweepRow>)>, SimError> {
    series(figure, seed, runs)
        .into_iter()
        .map(|s| {
            let rows = run_rows(&s.template, Some(&s.axis))?;
            Ok((s, rows))
        })
        .collect()
}

/// Writes `<stem>.csv` and `<stem>.summary.csv` per series plus
/// `<figure>.py`. Returns the written paths.
pub fn reproduce(figure: Figure, out_dir: &Path, seed: u64, runs: usize) -> Result<Vec<PathBuf>, ReproduceError> {
    fs::create_dir_all(out_dir).map_err(|source| ReproduceError::Io { path: out_dir.display().to_string(), source })?;
    let mut written = Vec::new();
    let results = compute(figure, seed, runs)?;
    for (s, rows) in &results {
        let path = out_dir.join(format!("{}.csv", s.stem));
        output::write_results(create(&path)?, s.axis.name(), rows)
            .map_err(|source| ReproduceError::Csv { path: path.display().to_string(), source })?;
        let summary = output::summary_path(&path);
        output::write_summary(create(&summary)?, s.axis.name(), rows)
            .map_err(|source| ReproduceError::Csv { path: summary.display().to_string(), source })?;
        written.push(path);
        written.push(summary);
    }
    let script = out_dir.join(format!("{}.py", figure.name()));
    let series: Vec<Series> = results.into_iter().map(|(s, _)| s).collect();
    fs::write(&script, plot_script(figure, &series))
        .map_err(|source| ReproduceError::Io { path: script.display().to_string(), source })?;
    written.push(script);
    Ok(written)
}

fn plot_script(figure: Figure, series: &[Series]) -> String {
    let (column, ylabel) = figure.metric();
    let log_x = matches!(figure, Figure::Fig5 | Figure::Fig6);
    let entries: String = series
        .iter()
        .map(|s| format!("    (\"{}.summary.csv\", \"{}\"),\n", s.stem, s.label))
        .collect();
    let title = match figure {
        Figure::Fig3 => "Message exchange, unbridled replication",
        Figure::Fig4 => "Coherent peers, unbridled replication",
        Figure::Fig5 => "Message exchange, controlled replication",
        Figure::Fig6 => "Coherent peers, controlled replication",
    };
    format!(
        r##"#!/usr/bin/env python3
"""Plots {name} from the summary files next to this script."""
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))
SERIES = [
{entries}]
COLUMN = "{column}"


def load(name):
    with open(os.path.join(HERE, name), newline="") as f:
        rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
    xs = [float(r["axis_value"]) for r in rows]
    ys = [float(r[COLUMN + "_mean"]) for r in rows]
    es = [float(r[COLUMN + "_ci95"] or 0.0) for r in rows]
    return xs, ys, es


fig, ax = plt.subplots(figsize=(6, 4))
for name, label in SERIES:
    xs, ys, es = load(name)
    ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=label)
ax.set_xlabel("peers in group")
ax.set_ylabel("{ylabel}")
ax.set_title("{title}")
{xscale}ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(os.path.join(HERE, "{name}.png"), dpi=150)
"##,
        name = figure.name(),
        xscale = if log_x { "ax.set_xscale(\"log\")\n" } else { "" },
    )
}
