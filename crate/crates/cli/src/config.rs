//! Key-value experiment configuration.
//!
//! A config is a list of `key=value` pairs, read from a file (one pair per line,
//! or several whitespace-separated pairs, `#` starts a comment) and then from
//! command-line flags. Later pairs override earlier ones. Validation reports
//! every problem at once.

use std::path::PathBuf;

use fracfast_core::bench::experiments::{Method, TableId};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    Table1,
    Table2,
    Table41,
    Table42,
    Fisher,
    Huxley,
    Props,
    LinearSpace,
    Longtime,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 9] = [
        ExperimentId::Table1,
        ExperimentId::Table2,
        ExperimentId::Table41,
        ExperimentId::Table42,
        ExperimentId::Fisher,
        ExperimentId::Huxley,
        ExperimentId::Props,
        ExperimentId::LinearSpace,
        ExperimentId::Longtime,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ExperimentId::Table1 => "table1",
            ExperimentId::Table2 => "table2",
            ExperimentId::Table41 => "table41",
            ExperimentId::Table42 => "table42",
            ExperimentId::Fisher => "fisher",
            ExperimentId::Huxley => "huxley",
            ExperimentId::Props => "props",
            ExperimentId::LinearSpace => "linear-space",
            ExperimentId::Longtime => "longtime",
        }
    }

    pub fn parse(s: &str) -> Option<ExperimentId> {
        Self::ALL.into_iter().find(|e| e.id() == s.trim().to_ascii_lowercase())
    }

    /// Tables swept by the experiment; empty for the non-table experiments.
    pub fn tables(self) -> &'static [TableId] {
        match self {
            ExperimentId::Table1 => &[TableId::Linear],
            ExperimentId::Table2 => &[TableId::LinearHigh],
            ExperimentId::Table41 => &[TableId::LogisticTime],
            ExperimentId::Table42 => &[TableId::LogisticSpace],
            ExperimentId::Fisher => &[TableId::FisherTime, TableId::FisherSpace],
            ExperimentId::Huxley => &[TableId::HuxleyTime, TableId::HuxleySpace],
            ExperimentId::LinearSpace => &[TableId::LinearSpace, TableId::LinearSpaceHigh],
            ExperimentId::Props | ExperimentId::Longtime => &[],
        }
    }

    fn valid_ids() -> String {
        Self::ALL.map(|e| e.id()).join(", ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub alphas: Option<Vec<f64>>,
    pub methods: Option<Vec<Method>>,
    pub ntau: Option<usize>,
    pub kdeg: Option<usize>,
    /// Keep only the first `levels` grids of each sweep.
    pub levels: Option<usize>,
    /// Spatial cells of the long-time run.
    pub cells: Option<usize>,
    pub outdir: PathBuf,
    pub refdir: Option<PathBuf>,
    pub jobs: usize,
    pub check: bool,
    /// Record wall times; `false` writes zeros so outputs are byte-identical across runs.
    pub timings: bool,
}

pub const KEYS: [&str; 12] = [
    "experiment", "alpha", "methods", "ntau", "kdeg", "levels", "cells", "outdir", "refdir",
    "jobs", "check", "timings",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let k = key.trim().to_ascii_lowercase();
    let k = match k.as_str() {
        "alphas" => "alpha",
        "method" | "scheme" | "schemes" => "methods",
        "k" => "kdeg",
        other => other,
    };
    KEYS.into_iter().find(|&known| known == k)
}

/// Splits config text into `(key, value)` pairs. Lines holding a single `=` may
/// use spaces around it; otherwise pairs are whitespace-separated tokens.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    let mut errors = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = if line.matches('=').count() == 1 {
            vec![line]
        } else {
            line.split_whitespace().collect()
        };
        for tok in tokens {
            match tok.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    pairs.push((k.trim().to_string(), v.trim().to_string()))
                }
                _ => errors.push(format!("line {}: expected key=value, got `{tok}`", lineno + 1)),
            }
        }
    }
    if errors.is_empty() {
        Ok(pairs)
    } else {
        Err(CliError::Config(errors))
    }
}

fn parse_list<T>(
    key: &str,
    value: &str,
    item: impl Fn(&str) -> Option<T>,
    errors: &mut Vec<String>,
) -> Option<Vec<T>> {
    let mut out = Vec::new();
    let mut ok = true;
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match item(part) {
            Some(v) => out.push(v),
            None => {
                errors.push(format!("{key}: cannot parse `{part}`"));
                ok = false;
            }
        }
    }
    if out.is_empty() && ok {
        errors.push(format!("{key}: empty list"));
        ok = false;
    }
    ok.then_some(out)
}

fn parse_count(key: &str, value: &str, min: usize, errors: &mut Vec<String>) -> Option<usize> {
    match value.parse::<usize>() {
        Ok(v) if v >= min => Some(v),
        Ok(v) => {
            errors.push(format!("{key}: must be at least {min}, got {v}"));
            None
        }
        Err(_) => {
            errors.push(format!("{key}: malformed integer `{value}`"));
            None
        }
    }
}

fn parse_bool(key: &str, value: &str, errors: &mut Vec<String>) -> Option<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Some(true),
        "0" | "false" | "no" | "off" => Some(false),
        _ => {
            errors.push(format!("{key}: expected true or false, got `{value}`"));
            None
        }
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Validates pairs into a config. Later pairs win.
pub fn build_config(pairs: &[(String, String)]) -> Result<ExperimentConfig, CliError> {
    let mut errors = Vec::new();
    let mut experiment = None;
    let mut experiment_given = false;
    let mut cfg = ExperimentConfig {
        experiment: ExperimentId::Props,
        alphas: None,
        methods: None,
        ntau: None,
        kdeg: None,
        levels: None,
        cells: None,
        outdir: PathBuf::from("out"),
        refdir: None,
        jobs: default_jobs(),
        check: false,
        timings: true,
    };
    for (key, value) in pairs {
        let Some(k) = canonical_key(key) else {
            errors.push(format!("unknown key `{key}` (known: {})", KEYS.join(", ")));
            continue;
        };
        match k {
            "experiment" => {
                experiment_given = true;
                match ExperimentId::parse(value) {
                    Some(e) => experiment = Some(e),
                    None => errors.push(format!(
                        "unknown experiment `{value}` (valid: {})",
                        ExperimentId::valid_ids()
                    )),
                }
            }
            "alpha" => {
                if let Some(a) = parse_list(k, value, |s| s.parse::<f64>().ok(), &mut errors) {
                    if let Some(bad) = a.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
                        errors.push(format!("alpha: {bad} outside (0, 1)"));
                    } else {
                        cfg.alphas = Some(a);
                    }
                }
            }
            "methods" => cfg.methods = parse_list(k, value, Method::parse, &mut errors),
            "ntau" => cfg.ntau = parse_count(k, value, 2, &mut errors),
            "kdeg" => cfg.kdeg = parse_count(k, value, 0, &mut errors),
            "levels" => cfg.levels = parse_count(k, value, 2, &mut errors),
            "cells" => cfg.cells = parse_count(k, value, 2, &mut errors),
            "jobs" => {
                if let Some(j) = parse_count(k, value, 1, &mut errors) {
                    cfg.jobs = j;
                }
            }
            "outdir" => cfg.outdir = PathBuf::from(value),
            "refdir" => cfg.refdir = Some(PathBuf::from(value)),
            "check" => {
                if let Some(b) = parse_bool(k, value, &mut errors) {
                    cfg.check = b;
                }
            }
            "timings" => {
                if let Some(b) = parse_bool(k, value, &mut errors) {
                    cfg.timings = b;
                }
            }
            _ => unreachable!("every canonical key is handled"),
        }
    }
    match experiment {
        Some(e) => cfg.experiment = e,
        None if !experiment_given => errors.push(format!(
            "missing experiment id (valid: {})",
            ExperimentId::valid_ids()
        )),
        None => {}
    }
    if let Some(e) = experiment {
        check_selection(e, &cfg, &mut errors);
    }
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(CliError::Config(errors))
    }
}

/// Alpha and method overrides must select something the experiment provides.
fn check_selection(e: ExperimentId, cfg: &ExperimentConfig, errors: &mut Vec<String>) {
    let tables = e.tables();
    if tables.is_empty() {
        if e == ExperimentId::Props {
            for (set, name) in [
                (cfg.alphas.is_some(), "alpha"),
                (cfg.methods.is_some(), "methods"),
                (cfg.levels.is_some(), "levels"),
                (cfg.cells.is_some(), "cells"),
            ] {
                if set {
                    errors.push(format!("{name}: not used by experiment props"));
                }
            }
        }
        if e == ExperimentId::Longtime {
            if cfg.alphas.as_ref().is_some_and(|a| a.len() != 1) {
                errors.push("alpha: longtime takes a single value".into());
            }
            for m in cfg.methods.iter().flatten() {
                if matches!(m, Method::Cutoff | Method::Faom) {
                    errors.push(format!("methods: {} not used by longtime", m.name()));
                }
            }
        }
        return;
    }
    if cfg.cells.is_some() {
        errors.push(format!("cells: only used by experiment longtime, not {}", e.id()));
    }
    let specs: Vec<_> = tables.iter().map(|t| t.spec()).collect();
    if let Some(alphas) = &cfg.alphas {
        for a in alphas {
            if !specs.iter().any(|s| s.alphas.iter().any(|x| (x - a).abs() < 1e-12)) {
                let mut valid: Vec<f64> = specs.iter().flat_map(|s| s.alphas.clone()).collect();
                valid.dedup();
                errors.push(format!("alpha: {a} not swept by {} (valid: {valid:?})", e.id()));
            }
        }
    }
    if let Some(methods) = &cfg.methods {
        for m in methods {
            if !specs.iter().any(|s| s.methods.contains(m)) {
                errors.push(format!("methods: {} not used by {}", m.name(), e.id()));
            }
        }
    }
}
