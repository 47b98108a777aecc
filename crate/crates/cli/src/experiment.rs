//! Experiment dispatch and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fracfast_core::bench::experiments::{
    check_pairs, check_row, check_speedup, csv_lines, execute_rows, plan_rows, prepare_references,
    speedup_samples, CheckOutcome, Method, Overrides, RowResult, Sweep, TableId, CSV_HEADER,
};
use fracfast_core::bench::problems::bump_linear;
use fracfast_core::bench::published::{self, PublishedColumn};
use fracfast_core::bench::{error_from_norms, fit_complexity, n_log_n, slots_cap};
use fracfast_core::history::length_bounds;
use fracfast_core::pde::{run, GridSpec, RunOptions, SpatialKind};
use fracfast_core::{HistoryLedger, MomentPayload};
use log::info;

use crate::config::{ExperimentConfig, ExperimentId};
use crate::error::CliError;
use crate::props;

/// Files written and checks evaluated by one experiment.
#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub checks: Vec<CheckOutcome>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Relative tolerance of direct-versus-fast agreement on the logistic time table.
pub const PAIR_TOLERANCE: f64 = 0.02;

/// Step counts of the speedup measurement on the finest logistic mesh.
pub const SPEEDUP_STEPS: [usize; 2] = [1 << 12, 1 << 14];

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    fs::create_dir_all(&cfg.outdir).map_err(|e| CliError::io(&cfg.outdir, e))?;
    match cfg.experiment {
        ExperimentId::Props => run_props(cfg),
        ExperimentId::Longtime => run_longtime(cfg),
        _ => run_tables(cfg),
    }
}

fn write(path: PathBuf, text: &str, report: &mut Report) -> Result<(), CliError> {
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    info!("wrote {}", path.display());
    report.files.push(path);
    Ok(())
}

fn out_path(cfg: &ExperimentConfig, suffix: &str) -> PathBuf {
    cfg.outdir.join(format!("{}{suffix}", cfg.experiment.id()))
}

fn check_comments(checks: &[CheckOutcome], text: &mut String) {
    for c in checks {
        let _ = writeln!(text, "# check {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
}

fn fmt_cells(v: &[Option<f64>], prec: usize) -> String {
    v.iter()
        .map(|x| x.map_or("-".to_string(), |x| format!("{x:.prec$e}")))
        .collect::<Vec<_>>()
        .join(" ")
}

fn printed_comment(p: &PublishedColumn) -> String {
    let orders = p
        .order
        .iter()
        .map(|x| x.map_or("-".to_string(), |x| format!("{x:.2}")))
        .collect::<Vec<_>>()
        .join(" ");
    format!(
        "# printed {:?} alpha={} {}: E {} | order {}\n",
        p.table,
        p.alpha,
        p.method.name(),
        fmt_cells(p.e, 2),
        orders
    )
}

/// `n,M_n,lower,upper,bounds` for a scalar ledger driven to `steps`; bounds in units of `h`.
pub fn ledger_trace(ntau: usize, steps: usize) -> Result<String, CliError> {
    let mut text = String::from("n,M_n,lower,upper,bounds\n");
    let mut ledger = HistoryLedger::new(1.0, ntau, 0, 1)?;
    let _ = writeln!(text, "1,0,,,0");
    for n in 2..=steps {
        ledger.advance(MomentPayload::zeros(0, 1))?;
        let (lo, hi) = length_bounds(n, ntau);
        let bounds: Vec<String> = ledger.boundary_steps().iter().map(u64::to_string).collect();
        let _ = writeln!(text, "{n},{},{lo:.4},{hi:.4},{}", ledger.len(), bounds.join(" "));
    }
    Ok(text)
}

fn plan(cfg: &ExperimentConfig) -> Result<Vec<fracfast_core::bench::experiments::RowTask>, CliError> {
    let ov = Overrides {
        alphas: cfg.alphas.clone(),
        methods: cfg.methods.clone(),
        ntau: cfg.ntau,
        kdeg: cfg.kdeg,
        levels: cfg.levels,
    };
    let mut tasks = Vec::new();
    for &t in cfg.experiment.tables() {
        tasks.extend(plan_rows(t, &ov)?);
    }
    if tasks.is_empty() {
        return Err(CliError::Config(vec![format!(
            "the overrides select no rows of {}",
            cfg.experiment.id()
        )]));
    }
    Ok(tasks)
}

fn refdir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.refdir.clone().unwrap_or_else(|| cfg.outdir.join("refs"))
}

fn table_checks(cfg: &ExperimentConfig, rows: &[RowResult]) -> Result<Vec<CheckOutcome>, CliError> {
    let mut checks: Vec<CheckOutcome> = rows.iter().flat_map(check_row).collect();
    let logistic: Vec<RowResult> =
        rows.iter().filter(|r| r.table == TableId::LogisticTime).cloned().collect();
    checks.extend(check_pairs(&logistic, PAIR_TOLERANCE));
    if cfg.experiment == ExperimentId::Table42 {
        let alpha = TableId::LogisticSpace.spec().alphas[0];
        let (direct, fast) = (Method::L1, Method::FaomP4);
        info!("timing {} against {} at N_T = {SPEEDUP_STEPS:?}", direct.name(), fast.name());
        let samples = speedup_samples(alpha, direct, fast, &SPEEDUP_STEPS)?;
        checks.extend(check_speedup(&format!("{} / {}", direct.name(), fast.name()), &samples));
    }
    Ok(checks)
}

fn plot_blocks(rows: &[RowResult]) -> String {
    let mut text = String::new();
    for (i, row) in rows.iter().enumerate() {
        if i > 0 {
            text.push_str("\n\n");
        }
        let spec = row.table.spec();
        let param = match row.sweep {
            Sweep::Time => "h",
            Sweep::Space => "dx",
        };
        let _ = writeln!(text, "# {} alpha={} {}", spec.name, row.alpha, row.method.name());
        let _ = writeln!(text, "# {param} E order");
        for e in &row.entries {
            let x = match row.sweep {
                Sweep::Time => e.grid.h,
                Sweep::Space => e.grid.dx(),
            };
            let order = e.order.map_or("nan".to_string(), |o| format!("{o:.6}"));
            let _ = writeln!(text, "{x:.6e} {:.6e} {order}", e.error());
        }
    }
    text
}

fn run_tables(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let tasks = plan(cfg)?;
    let refdir = refdir(cfg);
    let refs = prepare_references(&tasks, Some(&refdir))?;
    info!("running {} rows on {} workers", tasks.len(), cfg.jobs);
    let rows = execute_rows(&tasks, &refs, cfg.jobs)?;

    let mut report = Report::default();
    let mut csv = format!("{CSV_HEADER}\n");
    for row in &rows {
        if cfg.check {
            if let Some(p) = published::lookup(row.table, row.alpha, row.method) {
                csv.push_str(&printed_comment(p));
            }
        }
        for line in csv_lines(row, cfg.timings) {
            csv.push_str(&line);
            csv.push('\n');
        }
    }
    if cfg.check {
        report.checks = table_checks(cfg, &rows)?;
        check_comments(&report.checks, &mut csv);
    }
    write(out_path(cfg, ".csv"), &csv, &mut report)?;

    let steps = tasks.iter().flat_map(|t| t.grids.iter().map(|g| g.steps)).max().unwrap_or(1);
    let ntau = cfg.ntau.unwrap_or(2);
    write(out_path(cfg, "_trace.csv"), &ledger_trace(ntau, steps)?, &mut report)?;
    write(out_path(cfg, "_plot.dat"), &plot_blocks(&rows), &mut report)?;
    Ok(report)
}

fn run_props(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut report = Report {
        checks: props::run_suite(cfg.ntau)?,
        ..Report::default()
    };
    let mut csv = String::from("property,pass,detail\n");
    for c in &report.checks {
        let _ = writeln!(csv, "{},{},\"{}\"", c.name, c.pass, c.detail.replace('"', "'"));
    }
    write(out_path(cfg, ".csv"), &csv, &mut report)?;
    let ntau = cfg.ntau.unwrap_or(2);
    write(out_path(cfg, "_trace.csv"), &ledger_trace(ntau, 64)?, &mut report)?;
    let mut plot = String::from("# n M_n lower upper\n");
    let mut ledger = HistoryLedger::new(1.0, ntau, 0, 1)?;
    for n in 2..=(1usize << 14) {
        ledger.advance(MomentPayload::zeros(0, 1))?;
        let (lo, hi) = length_bounds(n, ntau);
        let _ = writeln!(plot, "{n} {} {lo:.6} {hi:.6}", ledger.len());
    }
    write(out_path(cfg, "_plot.dat"), &plot, &mut report)?;
    Ok(report)
}

/// Long-time run: `T = 10`, `h = 0.01`, alpha 0.5 by default.
pub const LONGTIME_STEPS: usize = 1000;
pub const LONGTIME_H: f64 = 0.01;
/// Spatial cells of the long-time accuracy run unless overridden.
pub const LONGTIME_CELLS: usize = 20000;
/// Spatial cells of the cost sweep.
pub const COST_CELLS: usize = 21;
/// `log2 N_T` of the cost sweep.
pub const COST_EXPONENTS: [u32; 5] = [10, 11, 12, 13, 14];

const LONGTIME_METHODS: [(Method, SpatialKind); 4] = [
    (Method::L1, SpatialKind::Central2),
    (Method::FaomP4, SpatialKind::Central2),
    (Method::L12, SpatialKind::Compact4),
    (Method::FaomP9, SpatialKind::Compact4),
];

fn selected(cfg: &ExperimentConfig, m: Method) -> bool {
    cfg.methods.as_ref().is_none_or(|ms| ms.contains(&m))
}

fn run_longtime(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let alpha = cfg.alphas.as_ref().map_or(0.5, |a| a[0]);
    let ntau = cfg.ntau.unwrap_or(2);
    let spec = bump_linear(alpha);
    let (a, b) = spec.domain;
    let grid = GridSpec::new(a, b, cfg.cells.unwrap_or(LONGTIME_CELLS), LONGTIME_H, LONGTIME_STEPS)?;
    let mut report = Report::default();
    let mut csv = format!("{CSV_HEADER}\n");
    let mut plot = String::new();
    let mut checks = Vec::new();
    let mut memory = None;
    for (m, spatial) in LONGTIME_METHODS.into_iter().filter(|(m, _)| selected(cfg, *m)) {
        let scheme = m.config(alpha, ntau, cfg.kdeg)?;
        info!("long-time run, {}", m.name());
        let rec = run(&spec, grid, &scheme, spatial, RunOptions::default())?;
        let err = error_from_norms(rec.step_errors.clone(), grid.h)?;
        let wall = if cfg.timings { rec.counters.wall_ms } else { 0.0 };
        let _ = writeln!(
            csv,
            "{},{alpha},{},{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},,,{},{},{wall:.3}",
            spec.id,
            scheme.label(),
            scheme.interp.order(),
            scheme.degree(),
            if m.is_fast() { ntau.to_string() } else { String::new() },
            grid.h,
            grid.dx(),
            err.aggregate,
            err.final_norm,
            rec.counters.flops,
            rec.counters.slots,
        );
        let _ = writeln!(plot, "# step errors {} alpha={alpha}\n# t err", m.name());
        for (j, e) in rec.step_errors.iter().enumerate() {
            let _ = writeln!(plot, "{:.4} {e:.6e}", grid.t(j + 1));
        }
        plot.push_str("\n\n");
        if m.is_fast() {
            if cfg.check {
                let cap = slots_cap(scheme.degree(), grid.nodes(), ntau, grid.steps);
                checks.push(CheckOutcome {
                    name: format!("{} long-time slots within cap", m.name()),
                    pass: rec.counters.slots as f64 <= cap,
                    detail: format!("{} <= {cap:.1}", rec.counters.slots),
                });
            }
            memory.get_or_insert(rec.memory);
        }
    }
    if let Some(mem) = memory {
        plot.push_str("# memory n M_n lower upper\n");
        for (n, len) in mem {
            let (lo, hi) = length_bounds(n, ntau);
            let _ = writeln!(plot, "{n} {len} {lo:.6} {hi:.6}");
        }
        plot.push_str("\n\n");
    }

    // cost sweep on a coarse mesh over T = 1
    plot.push_str("# cost N_T method flops wall_ms\n");
    for (m, spatial) in LONGTIME_METHODS.into_iter().filter(|(m, _)| selected(cfg, *m)) {
        let scheme = m.config(alpha, ntau, cfg.kdeg)?;
        let mut points = Vec::new();
        let mut worst_slots = (0usize, 0.0f64);
        for e in COST_EXPONENTS.iter().take(cfg.levels.unwrap_or(COST_EXPONENTS.len())) {
            let steps = 1usize << e;
            let g = GridSpec::new(a, b, COST_CELLS, 1.0 / steps as f64, steps)?;
            let rec = run(&spec, g, &scheme, spatial, RunOptions::default())?;
            let wall = if cfg.timings { rec.counters.wall_ms } else { 0.0 };
            let _ = writeln!(plot, "{steps} {} {} {wall:.3}", m.name(), rec.counters.flops);
            points.push((steps as f64, rec.counters.flops as f64));
            let cap = slots_cap(scheme.degree(), g.nodes(), ntau, steps);
            if rec.counters.slots as f64 / cap > worst_slots.1 {
                worst_slots = (rec.counters.slots, rec.counters.slots as f64 / cap);
            }
        }
        if cfg.check {
            let (model, label): (fn(f64) -> f64, &str) =
                if m.is_fast() { (n_log_n, "N_T log N_T") } else { (|n| n * n, "N_T^2") };
            let fit = fit_complexity(&points, model)?;
            checks.push(CheckOutcome {
                name: format!("{} flops fit c {label}", m.name()),
                pass: fit.max_rel_dev <= 0.2,
                detail: format!("c {:.4e}, max deviation {:.1}%", fit.scale, 100.0 * fit.max_rel_dev),
            });
            if m.is_fast() {
                checks.push(CheckOutcome {
                    name: format!("{} cost sweep slots within cap", m.name()),
                    pass: worst_slots.1 <= 1.0,
                    detail: format!("largest slots/cap {:.4}", worst_slots.1),
                });
            }
        }
    }
    check_comments(&checks, &mut csv);
    report.checks = checks;
    write(out_path(cfg, ".csv"), &csv, &mut report)?;
    write(out_path(cfg, "_trace.csv"), &ledger_trace(ntau, LONGTIME_STEPS)?, &mut report)?;
    write(out_path(cfg, "_plot.dat"), &plot, &mut report)?;
    Ok(report)
}

/// Reads a config file.
pub fn read_config(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}
