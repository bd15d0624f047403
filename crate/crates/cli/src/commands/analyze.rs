use serde_json::json;
use urysohn::analysis::{
    brute_rank, check_describability, classify_structure, enumerate_full_system, BlackBoxSystem,
    FeedbackSystem, FirSystem, ModelSystem, RecordedDictionary,
};
use urysohn::io::read_pair_csv;
use urysohn::model::load_model;
use urysohn::{Error, Result, UrysohnModel};

use crate::{AnalyzeArgs, AnalyzeCommand};

pub fn run(args: AnalyzeArgs) -> Result<()> {
    match args.what {
        AnalyzeCommand::Rank { rows, cols } => {
            let sys = enumerate_full_system(rows, cols)?;
            let rank = brute_rank(&sys)?;
            println!(
                "{}",
                json!({
                    "m": rows,
                    "n": cols,
                    "windows": sys.row_count(),
                    "rank": rank,
                    "independent_entries": rows * cols - rows + 1,
                })
            );
        }
        AnalyzeCommand::Classify { model, tol } => {
            let file = load_model(&model)?;
            let report = classify_structure(&file.model, tol);
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
        }
        AnalyzeCommand::Describability {
            model,
            plant,
            record,
            rows,
            cols,
            x_min,
            x_max,
            tol,
        } => {
            let report = if let Some(path) = model {
                let file = load_model(&path)?;
                let mut system = ModelSystem::quantized(&file.model);
                check_describability(&mut system, file.model.rows(), file.model.cols(), tol)?
            } else if let Some(kind) = plant {
                let mut system: Box<dyn BlackBoxSystem> = match kind.as_str() {
                    "feedback" => Box::new(FeedbackSystem {
                        feedback: 0.5,
                        x_min,
                        x_max,
                        levels: cols,
                    }),
                    "fir" => Box::new(FirSystem {
                        taps: (0..rows).map(|j| 0.5f64.powi(j as i32)).collect(),
                        x_min,
                        x_max,
                        levels: cols,
                    }),
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown plant {other:?}; choose \"feedback\" or \"fir\""
                        )))
                    }
                };
                check_describability(system.as_mut(), rows, cols, tol)?
            } else if let Some(path) = record {
                let (input, output) = read_pair_csv(&path)?;
                let scratch = UrysohnModel::zeros(rows, cols, x_min, x_max)?;
                let levels = scratch.quantize_series(&input);
                let mut dict = RecordedDictionary::new(levels, output.values().to_vec())?;
                check_describability(&mut dict, rows, cols, tol)?
            } else {
                return Err(Error::InvalidConfig(
                    "choose one of --model, --plant or --record".into(),
                ));
            };
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
        }
    }
    Ok(())
}
