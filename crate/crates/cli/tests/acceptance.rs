//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use beliefnet::reproduce::{base_config, compute, Figure};
use beliefnet::runner::run_rows;
use beliefnet_core::protocol::{rcf, StrategyConfig};
use beliefnet_core::sim::{run_once, ExperimentMetrics, SweepAxis, SweepRow};

const SEED: u64 = 42;
const RUNS: usize = 30;
const SCALE_CHILD_ENV: &str = "BELIEFNET_ACCEPTANCE_SCALE_CHILD";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_beliefnet"))
}

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name).display().to_string()
}

fn means(rows: &[SweepRow], field: fn(&ExperimentMetrics) -> f64) -> Vec<f64> {
    rows.iter().map(|r| field(&r.metrics)).collect()
}

fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - (intercept + slope * x)).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

fn inversions(ys: &[f64]) -> usize {
    ys.windows(2).filter(|w| w[1] < w[0]).count()
}

fn golden_reports() -> Outcome {
    let cases: [(&str, &[&str], &[&str], &str); 5] = [
        ("qos_policy.jkb", &["adm_cmd", "async_sig"], &[], "qos_pol:internal (adm_cmd:mod async_sig:mod)"),
        (
            "qos_policy_hierarchical.jkb",
            &["adm_cmd1", "adm_cmd2", "async_sig"],
            &[],
            "qos_pol:internal (adm_cmd:mod async_sig:mod)",
        ),
        (
            "adjust_qos.jkb",
            &["hr_proc_evt", "R1_load_mat"],
            &["dt_mat"],
            "adj_qos_pol:external (hr_proc_evt:mod R1_load_mat:mod dt_mat:msg)",
        ),
        (
            "adjust_qos_hierarchical.jkb",
            &["hr_proc_evt", "cpu_load_mat", "mem_load_mat"],
            &["dt_mat"],
            "adj_qos_pol:external (hr_proc_evt:mod R1_load_mat:mod dt_mat:msg)",
        ),
        (
            "link_fault.jkb",
            &["srv_prv_det", "srv_con_det"],
            &["dev_not_rcv"],
            "link_flt_det:external (srv_prv_det:mod srv_con_det:mod dev_not_rcv:msg)",
        ),
    ];
    let start = Instant::now();
    let mut failures = Vec::new();
    for (file, generated, received, expected) in cases {
        let mut cmd = bin();
        cmd.arg("check").arg(fixture(file));
        for g in generated {
            cmd.args(["--generated", g]);
        }
        for r in received {
            cmd.args(["--received", r]);
        }
        let out = cmd.output().expect("run check");
        let text = String::from_utf8_lossy(&out.stdout);
        let line = text.lines().last().unwrap_or("");
        if !out.status.success() || line != expected {
            failures.push(format!("{file}: got `{line}`"));
        }
    }
    let elapsed = start.elapsed();
    let fast = elapsed < Duration::from_secs(1);
    outcome(
        failures.is_empty() && fast,
        if failures.is_empty() {
            format!("5 fixtures byte-exact in {:.3} s", elapsed.as_secs_f64())
        } else {
            failures.join("; ")
        },
    )
}

fn labeler_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut cases = 0u64;
    let mut shapes = 0;
    let mut mismatch = None;
    while shapes < 200 {
        let shape = oracle::KbShape::random(&mut rng, 12, 6, 3);
        assert!(shape.depth() <= 3);
        match oracle::check_exhaustively(&shape) {
            Ok(n) => cases += n,
            Err(e) => {
                mismatch = Some(e);
                break;
            }
        }
        shapes += 1;
    }
    let elapsed = start.elapsed();
    match mismatch {
        Some(e) => outcome(false, format!("mismatch: {e}")),
        None => outcome(
            cases >= 10_000 && elapsed < Duration::from_secs(60),
            format!("{cases} assignments over {shapes} knowledge bases, 0 mismatches, {:.1} s", elapsed.as_secs_f64()),
        ),
    }
}

fn rcf_values() -> Outcome {
    let cases = [(1.0, 0, 1.0), (1.0, 3, 0.25), (0.5, 1, 0.25), (0.25, 3, 0.0625)];
    let worst = cases
        .iter()
        .map(|&(rho, eta, expected)| (rcf(rho, eta).unwrap() - expected).abs())
        .fold(0.0, f64::max);
    let rejects = rcf(0.0, 0).is_err() && rcf(1.5, 0).is_err();
    outcome(worst <= 1e-12 && rejects, format!("max error {worst:e}"))
}

fn strategy_equivalence() -> Outcome {
    let mut compared = 0;
    for n in [4usize, 14, 50] {
        for (rho, loss) in [(1.0, 0.0), (0.25, 0.0), (1.0, 0.25), (0.25, 0.25)] {
            let mut unbridled = base_config(SEED, 100);
            unbridled.group_size = n;
            unbridled.loss_prob = loss;
            let mut controlled = unbridled.clone();
            controlled.strategy = StrategyConfig::controlled(rho, 0).unwrap();
            for run in 0..100 {
                let (mut a, mut b) = (Vec::new(), Vec::new());
                run_once(&unbridled, run, &mut a).unwrap();
                run_once(&controlled, run, &mut b).unwrap();
                let render = |t: &[beliefnet_core::protocol::TraceEvent]| {
                    t.iter().map(|e| format!("{e}\n")).collect::<String>()
                };
                if render(&a) != render(&b) {
                    return outcome(false, format!("traces differ at n={n} rho={rho} loss={loss} run={run}"));
                }
                compared += 1;
            }
        }
    }
    outcome(true, format!("{compared} run pairs bit-identical (n = 4, 14, 50; rho = 1, 0.25; loss = 0, 0.25)"))
}

fn zero_loss_convergence() -> Outcome {
    let start = Instant::now();
    let unbridled = compute(Figure::Fig3, SEED, RUNS).unwrap();
    let mut controlled = base_config(SEED, RUNS);
    controlled.strategy = StrategyConfig::controlled(1.0, 3).unwrap();
    let sizes = SweepAxis::GroupSize(beliefnet::reproduce::LARGE_GROUPS.to_vec());
    let controlled_rows = run_rows(&controlled, Some(&sizes)).unwrap();

    let mut total = 0;
    let mut bad = Vec::new();
    for (label, rows) in [("unbridled", &unbridled[0].1), ("controlled", &controlled_rows)] {
        for row in rows.iter() {
            for m in &row.metrics.runs {
                total += 1;
                if m.coherent_fraction != 1.0 {
                    bad.push(format!("{label} n={} run={} ({:.4})", row.axis_value, m.run, m.coherent_fraction));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let detail = if bad.is_empty() {
        format!("{total} runs all fully coherent, {:.1} s", elapsed.as_secs_f64())
    } else {
        let shown: Vec<_> = bad.iter().take(4).cloned().collect();
        format!("{} of {total} runs not fully coherent, e.g. {}", bad.len(), shown.join(", "))
    };
    outcome(bad.is_empty() && total >= 300 && elapsed < Duration::from_secs(120), detail)
}

fn fig3_trend() -> Outcome {
    let result = compute(Figure::Fig3, SEED, RUNS).unwrap();
    let rows = &result[0].1;
    let xs: Vec<f64> = rows.iter().map(|r| r.axis_value).collect();
    let ys = means(rows, ExperimentMetrics::mean_messages_sent);
    let increasing = ys.windows(2).all(|w| w[1] > w[0]);
    let r2 = r_squared(&xs, &ys);
    outcome(increasing && r2 >= 0.98, format!("strictly increasing: {increasing}, R^2 = {r2:.4}, means {ys:?}"))
}

fn fig4_trend() -> Outcome {
    let series = compute(Figure::Fig4, SEED, RUNS).unwrap();
    let curves: Vec<Vec<f64>> = series.iter().map(|(_, rows)| means(rows, ExperimentMetrics::mean_coherent_fraction)).collect();
    let n_points = curves[0].len();
    let loss_ordered = (0..n_points).all(|i| curves[0][i] >= curves[1][i] && curves[1][i] >= curves[2][i]);
    let inv: Vec<usize> = curves.iter().map(|c| inversions(c)).collect();
    let high_loss_n14 = *curves[2].last().unwrap();
    let pass = loss_ordered && inv.iter().all(|&k| k <= 1) && high_loss_n14 > 0.5;
    outcome(
        pass,
        format!(
            "non-increasing in loss at every n: {loss_ordered}; inversions in n per curve {inv:?}; loss 0.75, n=14: {high_loss_n14:.4} (threshold 0.5)"
        ),
    )
}

fn controlled_efficiency() -> Outcome {
    let sizes = SweepAxis::GroupSize(vec![50, 200, 1000]);
    let unbridled = base_config(SEED, RUNS);
    let mut controlled = unbridled.clone();
    controlled.strategy = StrategyConfig::controlled(1.0, 3).unwrap();
    let u = run_rows(&unbridled, Some(&sizes)).unwrap();
    let c = run_rows(&controlled, Some(&sizes)).unwrap();
    let ratios: Vec<f64> = u
        .iter()
        .zip(&c)
        .map(|(u, c)| c.metrics.mean_messages_sent() / u.metrics.mean_messages_sent())
        .collect();
    let pass = ratios.iter().all(|&r| r < 0.8);
    outcome(pass, format!("controlled/unbridled message ratio at n = 50, 200, 1000: {ratios:.3?} (needs < 0.8)"))
}

fn fig6_trend() -> Outcome {
    const N: f64 = 100.0;
    let series = compute(Figure::Fig6, SEED, RUNS).unwrap();
    let mut parts = Vec::new();
    let mut pass = true;
    for loss in [0.5, 0.75] {
        // Ordered by increasing rho.
        let curve: Vec<f64> = [0.25, 0.5, 1.0]
            .iter()
            .map(|&rho| {
                let (_, rows) = series
                    .iter()
                    .find(|(s, _)| s.template.loss_prob == loss && s.template.strategy.rho == rho)
                    .expect("series present");
                rows.iter().find(|r| r.axis_value == N).expect("n present").metrics.mean_coherent_fraction()
            })
            .collect();
        let ok = curve.windows(2).all(|w| w[1] >= w[0]);
        pass &= ok;
        parts.push(format!("loss {loss}: {curve:.4?}"));
    }
    outcome(pass, format!("n=100, rho = 0.25, 0.5, 1: {}", parts.join("; ")))
}

fn reproduce_determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut compared = 0;
    for figure in ["fig3", "fig4", "fig5", "fig6"] {
        for d in &dirs {
            let status = bin()
                .args(["reproduce", figure, "--seed", &SEED.to_string(), "--out-dir"])
                .arg(d.path())
                .output()
                .unwrap()
                .status;
            if !status.success() {
                return outcome(false, format!("reproduce {figure} failed"));
            }
        }
    }
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for name in &names {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap_or_default();
        if a != b {
            return outcome(false, format!("{} differs between invocations", name.to_string_lossy()));
        }
        compared += 1;
    }
    outcome(compared > 0, format!("{compared} output files byte-identical across two invocations"))
}

/// Runs inside a fresh process so the peak resident size covers only this run.
fn scale_child(n: usize) {
    let mut cfg = base_config(SEED, 1);
    cfg.group_size = n;
    cfg.strategy = StrategyConfig::controlled(1.0, 3).unwrap();
    let start = Instant::now();
    let m = run_once(&cfg, 0, &mut ()).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let hwm_kb = std::fs::read_to_string("/proc/self/status")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("VmHWM:"))
                .and_then(|l| l.split_whitespace().nth(1))
                .and_then(|v| v.parse::<u64>().ok())
        })
        .unwrap_or(0);
    println!(
        "elapsed={elapsed} hwm_kb={hwm_kb} sent={} delivered={} lost={} live={} coherent={}",
        m.messages_sent, m.messages_delivered, m.messages_lost, m.live_nodes, m.coherent_fraction
    );
}

fn spawn_scale_child(n: usize) -> Result<std::collections::HashMap<String, f64>, String> {
    let out = Command::new(std::env::current_exe().unwrap())
        .env(SCALE_CHILD_ENV, n.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let text = String::from_utf8_lossy(&out.stdout);
    Ok(text
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .filter_map(|(k, v)| v.parse().ok().map(|v| (k.to_string(), v)))
        .collect())
}

fn scale_sanity() -> Outcome {
    let big = match spawn_scale_child(10_000) {
        Ok(m) => m,
        Err(e) => return outcome(false, format!("n=10000 run failed: {e}")),
    };
    let stress = match spawn_scale_child(100_000) {
        Ok(m) => m,
        Err(e) => return outcome(false, format!("n=100000 run failed: {e}")),
    };
    let conserved = |m: &std::collections::HashMap<String, f64>| {
        m["sent"] == m["delivered"] + m["lost"]
            && m["delivered"] <= m["sent"]
            && (0.0..=1.0).contains(&m["coherent"])
            && m["live"] >= 1.0
    };
    let mem_mb = big["hwm_kb"] / 1024.0;
    let pass = big["elapsed"] < 30.0 && mem_mb > 0.0 && mem_mb < 1024.0 && conserved(&big) && conserved(&stress);
    outcome(
        pass,
        format!(
            "n=10000: {:.2} s, peak {mem_mb:.0} MB, {} messages; n=100000 stress: {:.2} s, peak {:.0} MB, conservation holds: {}",
            big["elapsed"],
            big["sent"],
            stress["elapsed"],
            stress["hwm_kb"] / 1024.0,
            conserved(&stress)
        ),
    )
}

fn main() {
    if let Ok(n) = std::env::var(SCALE_CHILD_ENV) {
        scale_child(n.parse().expect("group size"));
        return;
    }
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("golden reports", golden_reports),
        ("labeler oracle equivalence", labeler_oracle),
        ("RCF unit values", rcf_values),
        ("zero backoff equals unbridled", strategy_equivalence),
        ("zero-loss convergence", zero_loss_convergence),
        ("message cost trend, unbridled", fig3_trend),
        ("coherence trend under loss, unbridled", fig4_trend),
        ("controlled efficiency", controlled_efficiency),
        ("coherence trend in rho, controlled", fig6_trend),
        ("reproduce determinism", reproduce_determinism),
        ("scale sanity", scale_sanity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!("{verdict} {:>2} {name}: {} [{:.2} s]", i + 1, o.detail, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
