use std::fmt::Write as _;

use serde_json::json;
use urysohn::sim::{
    run_experiment, ExperimentConfig, ExperimentSummary, Scenario, DEFAULT_HEADLINE_REPS,
    DEFAULT_TABLE_REPS, TABLE1_COLS, TABLE1_ROWS, TABLE2_ALPHAS, TABLE2_SIGMAS, TABLE3_ALPHAS,
    TABLE3_SIGMAS,
};
use urysohn::{Error, Result};

use crate::manifest::RunManifest;
use crate::{Grid, TableArgs};

use super::ensure_out_dir;

fn parse_cells(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut cells = Vec::new();
    for part in text.split(',') {
        let mut rows = None;
        let mut cols = None;
        for field in part.split(':') {
            let (key, value) = field.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!("bad cell spec {part:?}, expected m=<int>:n=<int>"))
            })?;
            let value: usize = value
                .trim()
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("bad cell value {value:?}: {e}")))?;
            match key.trim() {
                "m" => rows = Some(value),
                "n" => cols = Some(value),
                other => {
                    return Err(Error::InvalidConfig(format!("unknown cell key {other:?}")));
                }
            }
        }
        match (rows, cols) {
            (Some(r), Some(c)) => cells.push((r, c)),
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "cell spec {part:?} needs both m= and n="
                )))
            }
        }
    }
    Ok(cells)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

pub fn run(args: TableArgs, argv: &[String]) -> Result<()> {
    if let Some(jobs) = args.jobs {
        // Ignore the error if a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }

    let reps = args.reps.unwrap_or(match args.grid {
        Grid::Headline => DEFAULT_HEADLINE_REPS,
        _ => DEFAULT_TABLE_REPS,
    });

    let mut summaries: Vec<ExperimentSummary> = Vec::new();
    match args.grid {
        Grid::Headline => {
            let cfg = ExperimentConfig::headline(args.seed);
            summaries.push(run_experiment(Scenario::DiscreteControl, &cfg, reps)?);
        }
        Grid::T1 => {
            let cells = match &args.cells {
                Some(text) => parse_cells(text)?,
                None => {
                    let mut all = Vec::new();
                    for &rows in &TABLE1_ROWS {
                        for &cols in &TABLE1_COLS {
                            all.push((rows, cols));
                        }
                    }
                    all
                }
            };
            for (rows, cols) in cells {
                let cfg = ExperimentConfig::table1_cell(rows, cols, args.seed);
                summaries.push(run_experiment(Scenario::ContinuousControl, &cfg, reps)?);
            }
        }
        Grid::T2 | Grid::T3 => {
            let (sigmas, alphas, scenario): (&[f64], &[f64], Scenario) = match args.grid {
                Grid::T2 => (&TABLE2_SIGMAS, &TABLE2_ALPHAS, Scenario::NoisyOutput),
                _ => (&TABLE3_SIGMAS, &TABLE3_ALPHAS, Scenario::NoisyInputOutput),
            };
            for &sigma in sigmas {
                if args.sigma.is_some_and(|s| !close(s, sigma)) {
                    continue;
                }
                for &alpha in alphas {
                    if args.alpha.is_some_and(|a| !close(a, alpha)) {
                        continue;
                    }
                    let cfg = match args.grid {
                        Grid::T2 => ExperimentConfig::table2_cell(sigma, alpha, args.seed),
                        _ => ExperimentConfig::table3_cell(sigma, alpha, args.seed),
                    };
                    summaries.push(run_experiment(scenario, &cfg, reps)?);
                }
            }
            if summaries.is_empty() {
                return Err(Error::InvalidConfig(
                    "no grid cell matches the --sigma/--alpha filters".into(),
                ));
            }
        }
    }

    ensure_out_dir(&args.out_dir)?;
    let mut runs = String::from("scenario,m,n,alpha,sigma,replication,error\n");
    for s in &summaries {
        for (rep, err) in s.errors.iter().enumerate() {
            let _ = writeln!(
                runs,
                "{},{},{},{},{},{},{}",
                s.scenario, s.rows, s.cols, s.alpha, s.sigma, rep, err
            );
        }
    }
    std::fs::write(args.out_dir.join("runs.csv"), runs)?;

    let mut summary = String::from("scenario,m,n,alpha,sigma,reps,mean,ci95\n");
    for s in &summaries {
        let ci = if s.ci95.is_nan() {
            String::new()
        } else {
            format!("{}", s.ci95)
        };
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            s.scenario,
            s.rows,
            s.cols,
            s.alpha,
            s.sigma,
            s.errors.len(),
            s.mean,
            ci
        );
    }
    std::fs::write(args.out_dir.join("summary.csv"), summary)?;

    let manifest = RunManifest::new(
        "table",
        argv,
        json!({
            "grid": match args.grid {
                Grid::Headline => "headline",
                Grid::T1 => "t1",
                Grid::T2 => "t2",
                Grid::T3 => "t3",
            },
            "reps": reps,
            "cells": args.cells,
            "sigma": args.sigma,
            "alpha": args.alpha,
        }),
        vec![args.seed],
    );
    manifest.write(&args.out_dir.join("manifest.json"))?;

    for s in &summaries {
        if s.ci95.is_nan() {
            println!(
                "{} m={} n={} alpha={} sigma={}: {:.3}% (single replication)",
                s.scenario,
                s.rows,
                s.cols,
                s.alpha,
                s.sigma,
                s.mean * 100.0
            );
        } else {
            println!(
                "{} m={} n={} alpha={} sigma={}: {:.3}% +/- {:.3}%",
                s.scenario,
                s.rows,
                s.cols,
                s.alpha,
                s.sigma,
                s.mean * 100.0,
                s.ci95 * 100.0
            );
        }
    }
    Ok(())
}
