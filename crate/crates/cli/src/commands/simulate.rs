use serde_json::json;
use urysohn::io::{read_signal_csv, write_signal_csv};
use urysohn::sim::{
    coarse_point_sample, downsample, gen_discrete_control, gen_reflected_walk, simulate_plant,
    ExperimentConfig, MechanicalSystemParams,
};
use urysohn::{Result, SignalSeries};

use crate::manifest::RunManifest;
use crate::{ControlKind, SimulateArgs};

use super::ensure_out_dir;

pub fn run(args: SimulateArgs, argv: &[String]) -> Result<()> {
    let plant = MechanicalSystemParams {
        omega: args.plant.omega,
        zeta: args.plant.zeta,
        l: args.plant.l,
        h: args.plant.h,
        dt: args.plant.dt,
        y0: args.plant.y0,
        v0: args.plant.v0,
    };
    let cfg = ExperimentConfig {
        plant,
        coarse_dt: args.coarse_dt,
        x_step: args.x_step,
        x_min: 0.0,
        x_max: 1.0,
        t_max: args.t_max,
        walk_rate: args.walk_rate,
        sigma: 0.0,
        alpha: 1.0,
        seed: args.seed,
        rows: args.rows,
        cols: args.cols,
    };

    let control = match args.control {
        ControlKind::Zero => {
            cfg.validate()?;
            let total = cfg.block_count() * cfg.samples_per_block()?;
            SignalSeries::new(vec![0.0; total], plant.dt)?
        }
        ControlKind::Discrete => gen_discrete_control(&cfg, args.seed)?,
        ControlKind::Walk => gen_reflected_walk(&cfg, args.seed)?,
        ControlKind::Csv => {
            let path = args.control_csv.as_ref().ok_or_else(|| {
                urysohn::Error::InvalidConfig("--control csv requires --control-csv".into())
            })?;
            read_signal_csv(path)?
        }
    };
    let output = simulate_plant(&control, &plant)?;

    ensure_out_dir(&args.out_dir)?;
    write_signal_csv(args.out_dir.join("control.csv"), &control)?;
    write_signal_csv(args.out_dir.join("output.csv"), &output)?;

    // Coarse views for the generated controls; a CSV control has no
    // guaranteed block structure.
    if args.control != ControlKind::Csv {
        let per_block = cfg.samples_per_block()?;
        let (x_c, y_c) = match args.control {
            ControlKind::Walk => downsample(&control, &output, cfg.coarse_dt, cfg.x_step)?,
            _ => coarse_point_sample(&control, &output, per_block, cfg.coarse_dt)?,
        };
        write_signal_csv(args.out_dir.join("control_coarse.csv"), &x_c)?;
        write_signal_csv(args.out_dir.join("output_coarse.csv"), &y_c)?;
    }

    let manifest = RunManifest::new(
        "simulate",
        argv,
        json!({
            "control": match args.control {
                ControlKind::Zero => "zero",
                ControlKind::Discrete => "discrete",
                ControlKind::Walk => "walk",
                ControlKind::Csv => "csv",
            },
            "control_csv": args.control_csv,
            "experiment": cfg,
        }),
        vec![args.seed],
    );
    manifest.write(&args.out_dir.join("manifest.json"))?;

    println!(
        "simulated {} fine samples (dt = {}), outputs in {}",
        control.len(),
        plant.dt,
        args.out_dir.display()
    );
    Ok(())
}
