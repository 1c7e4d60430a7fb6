//! Dispatch from a resolved configuration to the library operations.

use std::time::Instant;

use serde::Serialize;

use super::report::{Row, RunReport, Timing};
use super::{parse_character, parse_selector, CommandName, ExecOptions, RunConfig, SieveKind};
use crate::circle::{
    bilinear_check, exp_sum_s, fourth_moment_grid, fourth_moment_quadruple, large_value_set, maximal_short_exp_sum,
    MAX_QUADRUPLE_PRIMES,
};
use crate::entropy::{decrement_schedule, scan_for_low_mi, JointInputs};
use crate::graphmodel::{build_prime_window, decoupled_mean, hoeffding_experiment, BilinearInput};
use crate::logmeasure::{correlation2, correlation3, sign_pattern_density, CorrelationParams, LogWindow};
use crate::multfunc::{pretentious_distance, MultSpec, PretentiousQuery};
use crate::sieve::{liouville_window, mobius_window, primes_in};
use crate::{Error, Module, Result};

/// Most values `sieve-dump` will list.
pub const MAX_DUMP: u64 = 1_000_000;

fn spec(sel: &str) -> Result<MultSpec> {
    parse_selector(sel).map_err(|m| Error::arg(Module::Cli, m))
}

fn params(cfg: &RunConfig) -> Result<CorrelationParams> {
    CorrelationParams::new(cfg.a, cfg.b, cfg.h)
}

#[derive(Serialize)]
struct Plan<'a> {
    operation: &'static str,
    window: Option<(u64, u64)>,
    config: &'a RunConfig,
}

/// Human-readable description of what `run` would compute.
pub fn plan(cfg: &RunConfig) -> String {
    let window = LogWindow::new(cfg.x, cfg.omega).ok().map(|w| (w.first(), w.x()));
    let operation = match cfg.command {
        CommandName::SieveDump => "sieve",
        CommandName::Correlate => "correlation2",
        CommandName::Correlate3 => "correlation3",
        CommandName::SignPatterns => "sign_pattern_density",
        CommandName::Distance => "pretentious_distance",
        CommandName::EntropyScan => "scan_for_low_mi",
        CommandName::Concentration => "hoeffding_experiment",
        CommandName::CircleScan => "large_value_set",
        CommandName::FourthMoment => "fourth_moment",
        CommandName::MaxExpSum => "maximal_short_exp_sum",
    };
    serde_json::to_string_pretty(&Plan {
        operation,
        window,
        config: cfg,
    })
    .expect("plan serialises")
}

/// Runs with the current thread pool and no timings.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    run_timed(cfg, false)
}

pub(crate) fn run_with(cfg: &RunConfig, exec: &ExecOptions) -> Result<RunReport> {
    match exec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::arg(Module::Cli, e.to_string()))?
            .install(|| run_timed(cfg, exec.include_timings)),
        None => run_timed(cfg, exec.include_timings),
    }
}

fn run_timed(cfg: &RunConfig, include_timings: bool) -> Result<RunReport> {
    let start = Instant::now();
    let mut skipped = 0;
    let rows = dispatch(cfg, &mut skipped)?;
    let timings = include_timings.then(|| {
        vec![Timing {
            operation: cfg.command.as_str().into(),
            seconds: start.elapsed().as_secs_f64(),
        }]
    });
    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        rows,
        skipped,
        timings,
    })
}

fn complex_rows(rows: &mut Vec<Row>, op: &str, metric: &str, z: num_complex::Complex64) {
    rows.push(Row::new(op, &format!("{metric}_re"), "", z.re));
    rows.push(Row::new(op, &format!("{metric}_im"), "", z.im));
}

fn pattern_label(p: &[i8]) -> String {
    p.iter()
        .map(|&v| match v {
            -1 => '-',
            0 => '0',
            _ => '+',
        })
        .collect()
}

fn dispatch(cfg: &RunConfig, skipped: &mut u64) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    let window = || LogWindow::new(cfg.x, cfg.omega);
    match cfg.command {
        CommandName::SieveDump => {
            let w = window()?;
            if w.len() > MAX_DUMP {
                return Err(Error::budget(
                    Module::Cli,
                    format!("window of {} values exceeds the dump limit {MAX_DUMP}", w.len()),
                ));
            }
            let (lo, hi) = (w.first(), w.x() + 1);
            match cfg.kind {
                SieveKind::Primes => {
                    let ps = primes_in(lo.max(2), hi.max(3))?;
                    rows.push(Row::new("primes_in", "count", "", ps.len() as f64));
                    rows.extend(
                        ps.primes
                            .iter()
                            .map(|&p| Row::new("primes_in", "prime", p.to_string(), p as f64)),
                    );
                }
                kind => {
                    let (op, win) = match kind {
                        SieveKind::Mobius => ("mobius_window", mobius_window(lo, hi)?),
                        _ => ("liouville_window", liouville_window(lo, hi)?),
                    };
                    let sum: i64 = win.iter().map(i64::from).sum();
                    rows.push(Row::new(op, "sum", "", sum as f64));
                    rows.extend(
                        (lo..hi)
                            .zip(win.iter())
                            .map(|(n, v)| Row::new(op, "value", n.to_string(), f64::from(v))),
                    );
                }
            }
        }
        CommandName::Correlate => {
            let w = window()?;
            let r = correlation2(&spec(&cfg.g1)?, &spec(&cfg.g2)?, &params(cfg)?, &w)?;
            *skipped = r.skipped;
            rows.push(Row::new("correlation2", "normalizer", "", w.normalizer()));
            complex_rows(&mut rows, "correlation2", "raw", r.raw);
            complex_rows(&mut rows, "correlation2", "normalized", r.normalized);
        }
        CommandName::Correlate3 => {
            let w = window()?;
            let shifts = [cfg.shifts[0], cfg.shifts[1], cfg.shifts[2]];
            let r = correlation3(&spec(&cfg.g1)?, &spec(&cfg.g2)?, &spec(&cfg.g3)?, shifts, &w)?;
            *skipped = r.skipped;
            rows.push(Row::new("correlation3", "normalizer", "", w.normalizer()));
            complex_rows(&mut rows, "correlation3", "raw", r.raw);
            complex_rows(&mut rows, "correlation3", "normalized", r.normalized);
        }
        CommandName::SignPatterns => {
            let t = sign_pattern_density(&spec(&cfg.g1)?, cfg.k, &window()?)?;
            rows.extend(
                t.densities
                    .iter()
                    .map(|(p, d)| Row::new("sign_pattern_density", "density", pattern_label(p), *d)),
            );
        }
        CommandName::Distance => {
            let chi = parse_character(&cfg.chi).map_err(|m| Error::arg(Module::Cli, m))?;
            let d = pretentious_distance(&PretentiousQuery {
                g: spec(&cfg.g1)?,
                chi,
                t: cfg.t,
                x: cfg.x,
            })?;
            rows.push(Row::new("pretentious_distance", "distance", "", d));
        }
        CommandName::EntropyScan => {
            let schedule = decrement_schedule(cfg.h_minus, cfg.c0, cfg.levels, cfg.a, cfg.cap)?;
            let (g1, g2) = (spec(&cfg.g1)?, spec(&cfg.g2)?);
            let scan = scan_for_low_mi(
                &schedule,
                &JointInputs {
                    g1: &g1,
                    g2: &g2,
                    eps: cfg.epsilon,
                    params: params(cfg)?,
                    window: window()?,
                    rule: cfg.threshold_rule,
                },
            );
            let op = "scan_for_low_mi";
            for row in &scan.rows {
                let label = format!("H={}", row.h);
                match &row.outcome {
                    Ok(level) => {
                        rows.push(Row::new(op, "mutual_information", &label, level.mutual_information));
                        rows.push(Row::new(op, "entropy_x", &label, level.entropy_x));
                        rows.push(Row::new(op, "entropy_y", &label, level.entropy_y));
                    }
                    Err(e) => rows.push(Row::new(op, "error", format!("{label} {}", e.code()), 1.0)),
                }
                if let Some(t) = row.threshold {
                    rows.push(Row::new(op, "threshold", &label, t));
                }
                rows.push(Row::new(op, "passes", &label, f64::from(u8::from(row.passes))));
            }
            if let Some(h) = scan.first_pass {
                rows.push(Row::new(op, "first_pass", "", h as f64));
            }
        }
        CommandName::Concentration => {
            let (g1, g2) = (spec(&cfg.g1)?, spec(&cfg.g2)?);
            let pw = build_prime_window(&g1, &g2, cfg.epsilon, cfg.big_h, params(cfg)?)?;
            let x = BilinearInput::from_specs(&g1, &g2, cfg.x, cfg.big_h)?;
            let r = hoeffding_experiment(&x, &pw, cfg.trials, cfg.seed)?;
            let op = "hoeffding_experiment";
            rows.push(Row::new(op, "primes", "", pw.len() as f64));
            complex_rows(&mut rows, op, "mean", r.mean);
            complex_rows(&mut rows, op, "decoupled_mean", decoupled_mean(&x, &pw)?);
            rows.push(Row::new(op, "stddev", "", r.stddev));
            rows.push(Row::new(op, "threshold", "", r.threshold));
            rows.push(Row::new(op, "tail_frequency", "", r.tail_frequency));
            rows.push(Row::new(op, "bound", "", r.bound));
        }
        CommandName::CircleScan => {
            let (g1, g2) = (spec(&cfg.g1)?, spec(&cfg.g2)?);
            let pw = build_prime_window(&g1, &g2, cfg.epsilon, cfg.big_h, params(cfg)?)?;
            let xi = large_value_set(&pw)?;
            rows.push(Row::new("exp_sum_s", "abs", "alpha=0", exp_sum_s(0.0, &pw).norm()));
            rows.push(Row::new("large_value_set", "threshold", "", xi.threshold));
            rows.push(Row::new("large_value_set", "size", "", xi.len() as f64));
            for &m in &xi.members {
                let alpha = (-(cfg.h as f64) * m as f64 / cfg.big_h as f64).rem_euclid(1.0);
                rows.push(Row::new(
                    "large_value_set",
                    "member",
                    format!("xi={m}"),
                    exp_sum_s(alpha, &pw).norm(),
                ));
            }
            let x = BilinearInput::from_specs(&g1, &g2, cfg.x, cfg.big_h)?;
            let check = bilinear_check(&x, &pw)?;
            rows.push(Row::new("bilinear_check", "lhs", "", check.lhs));
            rows.push(Row::new("bilinear_check", "rhs", "", check.rhs));
            rows.push(Row::new("bilinear_check", "ratio", "", check.ratio));
        }
        CommandName::FourthMoment => {
            let (g1, g2) = (spec(&cfg.g1)?, spec(&cfg.g2)?);
            let pw = build_prime_window(&g1, &g2, cfg.epsilon, cfg.big_h, params(cfg)?)?;
            let grid = fourth_moment_grid(&pw, cfg.a)?;
            let log4 = (cfg.big_h as f64).ln().powi(4);
            rows.push(Row::new("fourth_moment", "grid", "", grid));
            rows.push(Row::new("fourth_moment", "scaled_grid", "", grid * log4));
            if pw.len() <= MAX_QUADRUPLE_PRIMES {
                rows.push(Row::new(
                    "fourth_moment",
                    "quadruple",
                    "",
                    fourth_moment_quadruple(&pw, cfg.a)?,
                ));
            }
        }
        CommandName::MaxExpSum => {
            let v = maximal_short_exp_sum(&spec(&cfg.g1)?, cfg.x, cfg.big_h, cfg.oversample)?;
            rows.push(Row::new("maximal_short_exp_sum", "value", "", v));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::{resolve, ParamArgs};

    fn cfg(command: CommandName, p: ParamArgs) -> RunConfig {
        resolve(command, &p, &ParamArgs::default()).unwrap()
    }

    fn value(r: &RunReport, metric: &str) -> f64 {
        r.rows.iter().find(|row| row.metric == metric).unwrap().value
    }

    #[test]
    fn correlate_small_window() {
        let r = run(&cfg(
            CommandName::Correlate,
            ParamArgs {
                x: Some(10.0),
                omega: Some(5.0),
                ..Default::default()
            },
        ))
        .unwrap();
        assert!((value(&r, "raw_re") - -0.9210).abs() < 1e-4);
        assert_eq!(r.skipped, 0);
    }

    #[test]
    fn sign_patterns_rows_sum_to_one() {
        let r = run(&cfg(
            CommandName::SignPatterns,
            ParamArgs {
                x: Some(1e6),
                omega: Some(1e3),
                g1: Some("mobius".into()),
                ..Default::default()
            },
        ))
        .unwrap();
        assert_eq!(r.rows.len(), 9);
        let total: f64 = r.rows.iter().map(|row| row.value).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(r.rows[0].label, "--");
    }

    #[test]
    fn entropy_scan_with_deterministic_g() {
        let r = run(&cfg(
            CommandName::EntropyScan,
            ParamArgs {
                x: Some(1e5),
                g1: Some("constant".into()),
                g2: Some("constant".into()),
                levels: Some(3),
                ..Default::default()
            },
        ))
        .unwrap();
        let mi: Vec<f64> = r
            .rows
            .iter()
            .filter(|row| row.metric == "mutual_information")
            .map(|row| row.value)
            .collect();
        assert_eq!(mi.len(), 3);
        assert!(mi.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn every_command_runs_at_small_scale() {
        for command in [
            CommandName::SieveDump,
            CommandName::Correlate3,
            CommandName::Distance,
            CommandName::Concentration,
            CommandName::CircleScan,
            CommandName::FourthMoment,
            CommandName::MaxExpSum,
        ] {
            let c = cfg(
                command,
                ParamArgs {
                    x: Some(20_000.0),
                    omega: Some(20.0),
                    trials: Some(500),
                    ..Default::default()
                },
            );
            let r = run(&c).unwrap();
            assert!(!r.rows.is_empty(), "{command}");
            assert!(r.rows.iter().all(|row| row.value.is_finite()), "{command}");
            assert!(plan(&c).contains(command.as_str()));
        }
    }

    #[test]
    fn dump_limit_is_a_budget_error() {
        let c = cfg(
            CommandName::SieveDump,
            ParamArgs {
                x: Some(1e8),
                omega: Some(10.0),
                ..Default::default()
            },
        );
        assert!(matches!(run(&c), Err(Error::Budget { .. })));
    }
}
