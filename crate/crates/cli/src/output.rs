//! CSV results, summaries and trace files.

use std::io::Write;

use statrs::distribution::{ContinuousCDF, StudentsT};

use beliefnet_core::sim::{RunMetrics, SweepRow};

pub const RESULTS_HEADER: [&str; 7] = [
    "axis",
    "axis_value",
    "run",
    "messages_sent",
    "messages_delivered",
    "coherent_fraction",
    "cycles_to_quiescence",
];

pub const SUMMARY_NOTE: &str =
    "# Monte-Carlo means with 95% confidence half-widths; read these as trends, not reference values.";

type Field = fn(&RunMetrics) -> f64;

const METRICS: [(&str, Field); 4] = [
    ("messages_sent", |r| r.messages_sent as f64),
    ("messages_delivered", |r| r.messages_delivered as f64),
    ("coherent_fraction", |r| r.coherent_fraction),
    ("cycles_to_quiescence", |r| r.cycles_to_quiescence as f64),
];

/// Name used in the `axis` column when there is no sweep.
pub const NO_AXIS: &str = "none";

fn axis_value_text(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

pub fn write_results<W: Write>(out: W, axis: &str, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for row in rows {
        let value = axis_value_text(row.axis_value);
        for m in &row.metrics.runs {
            w.write_record([
                axis.to_string(),
                value.clone(),
                m.run.to_string(),
                m.messages_sent.to_string(),
                m.messages_delivered.to_string(),
                m.coherent_fraction.to_string(),
                m.cycles_to_quiescence.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Mean and 95% confidence half-width (Student t). The half-width is `None`
/// for fewer than two samples.
pub fn mean_ci95(samples: &[f64]) -> (f64, Option<f64>) {
    let n = samples.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom").inverse_cdf(0.975);
    (mean, Some(t * (var / n as f64).sqrt()))
}

pub fn write_summary<W: Write>(mut out: W, axis: &str, rows: &[SweepRow]) -> csv::Result<()> {
    writeln!(out, "{SUMMARY_NOTE}")?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["axis".to_string(), "axis_value".to_string(), "runs".to_string()];
    for (name, _) in METRICS {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_ci95"));
    }
    w.write_record(&header)?;
    for row in rows {
        let mut record = vec![axis.to_string(), axis_value_text(row.axis_value), row.metrics.runs.len().to_string()];
        for (_, field) in METRICS {
            let samples: Vec<f64> = row.metrics.runs.iter().map(field).collect();
            let (mean, ci) = mean_ci95(&samples);
            record.push(mean.to_string());
            record.push(ci.map(|c| c.to_string()).unwrap_or_default());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// `results.csv` → `results.summary.csv`.
pub fn summary_path(results: &std::path::Path) -> std::path::PathBuf {
    let stem = results.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    results.with_file_name(format!("{stem}.summary.csv"))
}
