//! Flat key-value experiment configuration.
//!
//! The on-disk format is one `key = value` pair per line, with `#` comments
//! and blank lines ignored. It is deliberately diff-able: an experiment is
//! fully described by a small text file plus the seed, and the parsed
//! [`ExperimentConfig`](crate::experiments::ExperimentConfig) is echoed into
//! every output record.
//!
//! Parsing is strict: unknown keys, duplicate keys, and values of the wrong
//! type are errors naming the offending key.

use crate::error::{Error, Result};
use crate::experiments::{ExperimentConfig, ExperimentKind, StartMode};

/// Parses the flat key-value text into a config, starting from defaults.
pub fn parse_config_text(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut seen = std::collections::BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config {
                key: format!("line {}", lineno + 1),
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::Config {
                key: format!("line {}", lineno + 1),
                message: "empty key".into(),
            });
        }
        if !seen.insert(key.to_string()) {
            return Err(Error::Config { key: key.into(), message: "duplicate key".into() });
        }
        apply_kv(&mut cfg, key, value)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => &line[..pos],
        None => line,
    }
}

/// Applies one `key = value` assignment.
pub fn apply_kv(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    let bad = |message: String| Error::Config { key: key.into(), message };
    match key {
        "kind" => cfg.kind = ExperimentKind::parse(value).ok_or_else(|| {
            bad(format!("unknown experiment kind `{value}`"))
        })?,
        "n" => cfg.n = parse_num(key, value)?,
        "n_grid" => cfg.n_grid = parse_list(key, value)?,
        "t_grid" => cfg.t_grid = parse_list(key, value)?,
        "steps" => cfg.steps = parse_num(key, value)?,
        "replicas" => cfg.replicas = parse_num(key, value)?,
        "seed" => cfg.seed = parse_num(key, value)?,
        "a" => cfg.tuning.a = parse_num(key, value)?,
        "b" => cfg.tuning.b = parse_num(key, value)?,
        "p" => cfg.tuning.p = parse_num(key, value)?,
        "q" => cfg.tuning.q = parse_num(key, value)?,
        "q_prime" => cfg.tuning.q_prime = parse_num(key, value)?,
        "snap_tol" => cfg.tuning.coalescence_snap_tol = parse_num(key, value)?,
        "epsilon" => cfg.epsilon = parse_num(key, value)?,
        "c_exp" => cfg.c_exp = parse_num(key, value)?,
        "threshold" => cfg.threshold = Some(parse_num(key, value)?),
        "edges" => cfg.edges = parse_num(key, value)?,
        "bins" => cfg.bins = parse_num(key, value)?,
        "t_phase1" => cfg.t_phase1 = Some(parse_num(key, value)?),
        "t_total" => cfg.t_total = Some(parse_num(key, value)?),
        "min_coord_sq" => cfg.min_coord_sq = parse_num(key, value)?,
        "perturbation" => cfg.perturbation = parse_num(key, value)?,
        "start" => cfg.start = StartMode::parse(value).ok_or_else(|| {
            bad(format!("unknown start mode `{value}` (worst | random | near | equal)"))
        })?,
        "per_replica" => cfg.per_replica = parse_bool(key, value)?,
        "threads" => cfg.threads = parse_num(key, value)?,
        "out_dir" => cfg.out_dir = Some(value.into()),
        _ => return Err(bad("unknown key".into())),
    }
    Ok(())
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config {
        key: key.into(),
        message: format!("cannot parse `{value}` as {}", std::any::type_name::<T>()),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config {
            key: key.into(),
            message: format!("cannot parse `{value}` as bool"),
        }),
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|part| parse_num(key, part.trim())).collect()
}

/// Renders a config back to the flat key-value format. Parsing the result
/// reproduces the config.
pub fn render_config_text(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("kind", cfg.kind.name().into());
    push("n", cfg.n.to_string());
    if !cfg.n_grid.is_empty() {
        push("n_grid", join(&cfg.n_grid));
    }
    if !cfg.t_grid.is_empty() {
        push("t_grid", join(&cfg.t_grid));
    }
    push("steps", cfg.steps.to_string());
    push("replicas", cfg.replicas.to_string());
    push("seed", cfg.seed.to_string());
    push("a", fmt_f64(cfg.tuning.a));
    push("b", fmt_f64(cfg.tuning.b));
    push("p", fmt_f64(cfg.tuning.p));
    push("q", fmt_f64(cfg.tuning.q));
    push("q_prime", fmt_f64(cfg.tuning.q_prime));
    push("snap_tol", fmt_f64(cfg.tuning.coalescence_snap_tol));
    push("epsilon", fmt_f64(cfg.epsilon));
    push("c_exp", fmt_f64(cfg.c_exp));
    if let Some(threshold) = cfg.threshold {
        push("threshold", fmt_f64(threshold));
    }
    push("edges", cfg.edges.to_string());
    push("bins", cfg.bins.to_string());
    if let Some(t) = cfg.t_phase1 {
        push("t_phase1", t.to_string());
    }
    if let Some(t) = cfg.t_total {
        push("t_total", t.to_string());
    }
    push("min_coord_sq", fmt_f64(cfg.min_coord_sq));
    push("perturbation", fmt_f64(cfg.perturbation));
    push("start", cfg.start.name().into());
    push("per_replica", cfg.per_replica.to_string());
    push("threads", cfg.threads.to_string());
    if let Some(dir) = &cfg.out_dir {
        push("out_dir", dir.clone());
    }
    out
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn fmt_f64(x: f64) -> String {
    // Shortest representation that round-trips through f64.
    let mut s = format!("{x}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}
