use std::io::BufRead;

use serde_json::json;
use urysohn::identify::{
    coverage_report, extrapolate_edges, IdentConfig, IdentState, Init, ModelShape,
};
use urysohn::io::{read_pair_csv, read_signal_csv, write_residual_csv};
use urysohn::model::{load_model, save_model};
use urysohn::{Error, Result};

use crate::manifest::RunManifest;
use crate::{IdentMode, IdentifyArgs};

use super::{ensure_out_dir, resolve_out};

pub fn run(args: IdentifyArgs, argv: &[String]) -> Result<()> {
    ensure_out_dir(&args.out_dir)?;
    let model_out = resolve_out(&args.out_dir, &args.model_out);

    let cfg = IdentConfig {
        alpha: args.alpha,
        init: Init::Zeros,
        interpolated: args.mode == IdentMode::Interpolated,
        stop_tol: args.stop_tol,
        stop_window: args.stop_window,
    };
    cfg.validate()?;

    let mut state = match &args.init_model {
        Some(path) => {
            let file = load_model(path)?;
            let counters = file
                .counters
                .unwrap_or_else(|| vec![0; file.model.rows() * file.model.cols()]);
            IdentState::resume(file.model, counters)?
        }
        None => IdentState::new(
            ModelShape::new(args.rows, args.cols, args.x_min, args.x_max),
            &cfg,
        )?,
    };

    if args.stream {
        run_stream(&mut state, &cfg, &args, &model_out)?;
    } else {
        let (input, output) = if let Some(pairs) = &args.pairs {
            read_pair_csv(pairs)?
        } else {
            let input_path = args.input.as_ref().ok_or_else(|| {
                Error::InvalidConfig("need --input/--output, --pairs or --stream".into())
            })?;
            let output_path = args
                .output
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("--input requires --output".into()))?;
            (read_signal_csv(input_path)?, read_signal_csv(output_path)?)
        };
        if args.epochs == 0 {
            return Err(Error::InvalidConfig("need at least one epoch".into()));
        }
        for _ in 0..args.epochs {
            state.process_record(&input, &output, &cfg)?;
        }
    }

    let mut final_model = state.model().clone();
    if args.extrapolate_edges {
        extrapolate_edges(&mut final_model, state.counters())?;
    }
    save_model(&model_out, &final_model, Some(state.counters()))?;
    if let Some(residuals_out) = &args.residuals_out {
        write_residual_csv(resolve_out(&args.out_dir, residuals_out), state.residuals())?;
    }

    let coverage = coverage_report(&state);
    let last = state.residuals().last().copied().unwrap_or(f64::NAN);
    let manifest = RunManifest::new(
        "identify",
        argv,
        json!({
            "ident": cfg,
            "rows": args.rows,
            "cols": args.cols,
            "x_min": args.x_min,
            "x_max": args.x_max,
            "epochs": args.epochs,
            "stream": args.stream,
            "extrapolate_edges": args.extrapolate_edges,
        }),
        vec![],
    );
    manifest.write(&args.out_dir.join("manifest.json"))?;

    println!(
        "{}",
        json!({
            "samples": state.samples_seen(),
            "final_residual": last,
            "untouched_columns": coverage.untouched_columns,
            "identified_range": coverage.identified_range,
            "model": model_out,
        })
    );
    Ok(())
}

/// Consume line-delimited "x,y" pairs from stdin, stepping the identifier
/// as soon as a full window is available and checkpointing periodically.
fn run_stream(
    state: &mut IdentState,
    cfg: &IdentConfig,
    args: &IdentifyArgs,
    model_out: &std::path::Path,
) -> Result<()> {
    let stdin = std::io::stdin();
    let rows = state.model().rows();
    let mut window: Vec<f64> = Vec::with_capacity(rows);
    for (idx, line) in stdin.lock().lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split(',');
        let (Some(xs), Some(ys), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                path: "<stdin>".into(),
                line: line_no,
                message: "expected \"x,y\"".into(),
            });
        };
        let parse = |field: &str, text: &str| -> Result<f64> {
            text.trim().parse::<f64>().map_err(|e| Error::Parse {
                path: "<stdin>".into(),
                line: line_no,
                message: format!("bad {field} value {text:?}: {e}"),
            })
        };
        let x = parse("x", xs)?;
        let y = parse("y", ys)?;

        if window.len() == rows {
            window.remove(0);
        }
        window.push(x);
        if window.len() == rows {
            if cfg.interpolated {
                state.step_interpolated(&window, y, cfg.alpha)?;
            } else {
                let levels: Vec<usize> =
                    window.iter().map(|&v| state.model().quantize(v)).collect();
                state.step_quantized(&levels, y, cfg.alpha)?;
            }
            if let Some(every) = args.checkpoint_every {
                if every > 0 && state.samples_seen().is_multiple_of(every) {
                    save_model(model_out, state.model(), Some(state.counters()))?;
                }
            }
        }
    }
    Ok(())
}
