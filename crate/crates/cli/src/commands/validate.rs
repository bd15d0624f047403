use serde_json::json;
use urysohn::identify::predict_with_validity;
use urysohn::io::read_signal_csv;
use urysohn::model::load_model;
use urysohn::sim::{error_l1, error_l2_normalized, MechanicalSystemParams};
use urysohn::{Result, SignalSeries};

use crate::manifest::RunManifest;
use crate::{Metric, ValidateArgs};

use super::ensure_out_dir;

pub fn run(args: ValidateArgs, argv: &[String]) -> Result<()> {
    let file = load_model(&args.model)?;
    let model = file.model;
    let input = read_signal_csv(&args.input)?;
    let reference = read_signal_csv(&args.reference)?;

    let rows = model.rows();
    let prediction = match &file.counters {
        Some(counters) => predict_with_validity(&model, counters, &input)?,
        None => model.eval_quantized(&input)?,
    };
    let invalid: usize = prediction.valid.iter().filter(|v| !**v).count();

    let error = match args.metric {
        Metric::L1 => {
            let y_smax = args
                .y_smax
                .unwrap_or_else(|| MechanicalSystemParams::default().max_static_displacement());
            error_l1(&reference, &prediction.series, rows, y_smax)?
        }
        Metric::L2 => {
            // Compare past the warm-up samples only.
            if reference.len() != prediction.series.len() {
                return Err(urysohn::Error::LengthMismatch {
                    left: reference.len(),
                    right: prediction.series.len(),
                });
            }
            let tail_ref =
                SignalSeries::new(reference.values()[rows - 1..].to_vec(), reference.dt())?;
            let tail_out = SignalSeries::new(
                prediction.series.values()[rows - 1..].to_vec(),
                prediction.series.dt(),
            )?;
            error_l2_normalized(&tail_ref, &tail_out)?
        }
    };

    ensure_out_dir(&args.out_dir)?;
    let manifest = RunManifest::new(
        "validate",
        argv,
        json!({
            "model": args.model,
            "input": args.input,
            "reference": args.reference,
            "metric": match args.metric { Metric::L1 => "l1", Metric::L2 => "l2" },
            "y_smax": args.y_smax,
        }),
        vec![],
    );
    manifest.write(&args.out_dir.join("manifest.json"))?;

    println!(
        "{}",
        json!({
            "metric": match args.metric { Metric::L1 => "l1", Metric::L2 => "l2" },
            "error": error,
            "samples": reference.len(),
            "warmup_samples": rows - 1,
            "invalid_samples": invalid,
            "counters_present": file.counters.is_some(),
        })
    );
    Ok(())
}
