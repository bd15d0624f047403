//! End-to-end experiment pipelines: generate a control record, simulate the
//! plant, coarse-sample, identify, then score the identified operator on an
//! independently generated validation record.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::identify::{run_identification, IdentConfig, ModelShape};
use crate::series::SignalSeries;

use super::control::{add_noise, derive_seed, gen_discrete_control, gen_reflected_walk};
use super::plant::{simulate_plant, MechanicalSystemParams};

/// Which benchmark pipeline to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Piecewise-constant random control, exact signals.
    DiscreteControl,
    /// Reflected-walk control with local-averaging coarse sampling.
    ContinuousControl,
    /// Discrete control with Gaussian noise on the identification output.
    NoisyOutput,
    /// Walk control with Gaussian noise on identification input and output.
    NoisyInputOutput,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Scenario::DiscreteControl => "discrete_control",
            Scenario::ContinuousControl => "continuous_control",
            Scenario::NoisyOutput => "noisy_output",
            Scenario::NoisyInputOutput => "noisy_io",
        };
        f.write_str(name)
    }
}

/// Default replication counts for the headline run and the benchmark grids.
pub const DEFAULT_HEADLINE_REPS: usize = 8;
pub const DEFAULT_TABLE_REPS: usize = 9;

pub const TABLE1_ROWS: [usize; 4] = [4, 8, 16, 32];
pub const TABLE1_COLS: [usize; 4] = [11, 21, 41, 81];
pub const TABLE2_SIGMAS: [f64; 3] = [0.05, 0.10, 0.20];
pub const TABLE2_ALPHAS: [f64; 3] = [0.01, 0.05, 0.25];
pub const TABLE3_SIGMAS: [f64; 3] = [0.05, 0.10, 0.20];
pub const TABLE3_ALPHAS: [f64; 3] = [0.05, 0.20, 0.80];

/// Full description of one experiment cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub plant: MechanicalSystemParams,
    /// Control hold interval and coarse sampling step.
    pub coarse_dt: f64,
    /// Control quantum: spacing of the admissible control values.
    pub x_step: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub t_max: f64,
    /// Rate of the reflected-walk control.
    pub walk_rate: f64,
    /// Noise level, as a fraction of the relevant signal scale.
    pub sigma: f64,
    /// Identifier stabilisation parameter.
    pub alpha: f64,
    pub seed: u64,
    /// Operator memory depth (matrix rows).
    pub rows: usize,
    /// Quantisation level count (matrix columns).
    pub cols: usize,
}

impl ExperimentConfig {
    /// The baseline discrete-control cell: 8 x 11 operator, unit alpha,
    /// noiseless, one period of memory.
    pub fn headline(seed: u64) -> Self {
        Self {
            plant: MechanicalSystemParams::default(),
            coarse_dt: TAU / 8.0,
            x_step: 0.1,
            x_min: 0.0,
            x_max: 1.0,
            t_max: 1e4,
            walk_rate: 0.05,
            sigma: 0.0,
            alpha: 1.0,
            seed,
            rows: 8,
            cols: 11,
        }
    }

    /// Walk-control grid cell: the operator memory always spans one period,
    /// so the hold interval shrinks as the row count grows.
    pub fn table1_cell(rows: usize, cols: usize, seed: u64) -> Self {
        Self {
            coarse_dt: TAU / rows as f64,
            x_step: 1.0 / (cols - 1) as f64,
            rows,
            cols,
            ..Self::headline(seed)
        }
    }

    /// Noisy-output grid cell on the baseline discrete-control setup.
    pub fn table2_cell(sigma: f64, alpha: f64, seed: u64) -> Self {
        Self {
            sigma,
            alpha,
            t_max: 4e4,
            ..Self::headline(seed)
        }
    }

    /// Noisy input-and-output grid cell on the 32 x 81 walk-control setup.
    pub fn table3_cell(sigma: f64, alpha: f64, seed: u64) -> Self {
        Self {
            sigma,
            alpha,
            t_max: 4e4,
            ..Self::table1_cell(32, 81, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        if self.rows == 0 || self.cols < 2 {
            return Err(Error::InvalidConfig(
                "need rows >= 1 and at least 2 levels".into(),
            ));
        }
        if !(self.coarse_dt > 0.0 && self.x_step > 0.0 && self.t_max > 0.0) {
            return Err(Error::InvalidConfig(
                "coarse_dt, x_step and t_max must be positive".into(),
            ));
        }
        if !(self.walk_rate >= 0.0) || !(self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(
                "walk_rate and sigma must be non-negative".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.x_min < self.x_max) {
            return Err(Error::InvalidConfig("x_min must be below x_max".into()));
        }
        let span = (self.cols - 1) as f64 * self.x_step;
        if span > (self.x_max - self.x_min) * (1.0 + 1e-9) {
            return Err(Error::InvalidConfig(format!(
                "(cols - 1) * x_step = {span} overflows the input range"
            )));
        }
        self.samples_per_block()?;
        Ok(())
    }

    /// Fine samples per hold interval; the hold interval must be an integer
    /// multiple of the plant step.
    pub fn samples_per_block(&self) -> Result<usize> {
        let ratio = self.coarse_dt / self.plant.dt;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.abs() {
            return Err(Error::BadBlockSize(format!(
                "coarse_dt / dt = {ratio} is not a positive integer"
            )));
        }
        Ok(rounded as usize)
    }

    /// Number of hold intervals in a record.
    pub fn block_count(&self) -> usize {
        (self.t_max / self.coarse_dt).round() as usize
    }

    pub fn shape(&self) -> ModelShape {
        ModelShape::new(self.rows, self.cols, self.x_min, self.x_max)
    }

    fn ident_config(&self) -> IdentConfig {
        IdentConfig {
            alpha: self.alpha,
            ..Default::default()
        }
    }
}

/// Round half away from zero, treating values within a relative 1e-9 of an
/// exact half as ties. Grid steps are typically decimal fractions, so true
/// halves routinely land a few ulps off the boundary.
fn round_half_away_tolerant(v: f64) -> f64 {
    let tie = v.floor() + 0.5;
    if (v - tie).abs() <= 1e-9 * v.abs().max(1.0) {
        if v >= 0.0 {
            tie.ceil()
        } else {
            tie.floor()
        }
    } else {
        v.round()
    }
}

/// Local averaging onto the coarse grid: block means, with the input
/// additionally snapped to the control quantum.
pub fn downsample(
    x_fine: &SignalSeries,
    y_fine: &SignalSeries,
    coarse_dt: f64,
    x_step: f64,
) -> Result<(SignalSeries, SignalSeries)> {
    if x_fine.len() != y_fine.len() {
        return Err(Error::LengthMismatch {
            left: x_fine.len(),
            right: y_fine.len(),
        });
    }
    if !(x_step > 0.0) {
        return Err(Error::InvalidConfig("x_step must be positive".into()));
    }
    let ratio = coarse_dt / x_fine.dt();
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.abs() {
        return Err(Error::BadBlockSize(format!(
            "coarse_dt / dt = {ratio} is not a positive integer"
        )));
    }
    let per_block = rounded as usize;
    if !x_fine.len().is_multiple_of(per_block) {
        return Err(Error::BadBlockSize(format!(
            "{} samples do not divide into blocks of {per_block}",
            x_fine.len()
        )));
    }
    let blocks = x_fine.len() / per_block;
    let mut xs = Vec::with_capacity(blocks);
    let mut ys = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let range = b * per_block..(b + 1) * per_block;
        let x_mean: f64 = x_fine.values()[range.clone()].iter().sum::<f64>() / per_block as f64;
        let y_mean: f64 = y_fine.values()[range].iter().sum::<f64>() / per_block as f64;
        xs.push(x_step * round_half_away_tolerant(x_mean / x_step));
        ys.push(y_mean);
    }
    Ok((
        SignalSeries::new(xs, coarse_dt)?,
        SignalSeries::new(ys, coarse_dt)?,
    ))
}

/// Point sampling onto the coarse grid: the hold value of each block and
/// the plant output at the block's final fine sample. This is the coarse
/// view used by the discrete-control scenarios.
pub fn coarse_point_sample(
    x_fine: &SignalSeries,
    y_fine: &SignalSeries,
    per_block: usize,
    coarse_dt: f64,
) -> Result<(SignalSeries, SignalSeries)> {
    if x_fine.len() != y_fine.len() {
        return Err(Error::LengthMismatch {
            left: x_fine.len(),
            right: y_fine.len(),
        });
    }
    if per_block == 0 || !x_fine.len().is_multiple_of(per_block) {
        return Err(Error::BadBlockSize(format!(
            "{} samples do not divide into blocks of {per_block}",
            x_fine.len()
        )));
    }
    let blocks = x_fine.len() / per_block;
    let xs: Vec<f64> = (0..blocks)
        .map(|b| x_fine.values()[b * per_block])
        .collect();
    let ys: Vec<f64> = (0..blocks)
        .map(|b| y_fine.values()[(b + 1) * per_block - 1])
        .collect();
    Ok((
        SignalSeries::new(xs, coarse_dt)?,
        SignalSeries::new(ys, coarse_dt)?,
    ))
}

/// Mean absolute deviation over the defined outputs, scaled by the record
/// length and the plant's maximum static displacement. Warm-up samples
/// (the first `rows - 1`) are excluded.
pub fn error_l1(
    reference: &SignalSeries,
    model_out: &SignalSeries,
    rows: usize,
    y_smax: f64,
) -> Result<f64> {
    if reference.len() != model_out.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: model_out.len(),
        });
    }
    if reference.len() < rows {
        return Err(Error::SeriesTooShort {
            needed: rows,
            got: reference.len(),
        });
    }
    if !(y_smax > 0.0) {
        return Err(Error::InvalidConfig("y_smax must be positive".into()));
    }
    let q = reference.len();
    let sum: f64 = reference.values()[rows - 1..]
        .iter()
        .zip(&model_out.values()[rows - 1..])
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok(sum / (q as f64 * y_smax))
}

/// L2 deviation normalised by the reference span and the square root of the
/// record length.
pub fn error_l2_normalized(reference: &SignalSeries, model_out: &SignalSeries) -> Result<f64> {
    if reference.len() != model_out.len() {
        return Err(Error::LengthMismatch {
            left: reference.len(),
            right: model_out.len(),
        });
    }
    let max = reference.values().iter().cloned().fold(f64::MIN, f64::max);
    let min = reference.values().iter().cloned().fold(f64::MAX, f64::min);
    if !(max > min) {
        return Err(Error::DegenerateReference);
    }
    let sq: f64 = reference
        .values()
        .iter()
        .zip(model_out.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sq.sqrt() / ((max - min) * (reference.len() as f64).sqrt()))
}

/// Per-cell outcome over all replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub scenario: Scenario,
    pub rows: usize,
    pub cols: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub errors: Vec<f64>,
    pub mean: f64,
    /// Half-width of the normal-approximation 95% confidence interval,
    /// `1.96 * sd / sqrt(reps)`; NaN for a single replication.
    pub ci95: f64,
}

fn summarize(scenario: Scenario, cfg: &ExperimentConfig, errors: Vec<f64>) -> ExperimentSummary {
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let ci95 = if errors.len() >= 2 {
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
        1.96 * var.sqrt() / n.sqrt()
    } else {
        f64::NAN
    };
    ExperimentSummary {
        scenario,
        rows: cfg.rows,
        cols: cfg.cols,
        alpha: cfg.alpha,
        sigma: cfg.sigma,
        errors,
        mean,
        ci95,
    }
}

// Seed stream ids within one replication.
const STREAM_IDENT_CONTROL: u64 = 0;
const STREAM_VALID_CONTROL: u64 = 1;
const STREAM_INPUT_NOISE: u64 = 2;
const STREAM_OUTPUT_NOISE: u64 = 3;

/// One identification/validation round; returns the scaled L1 error on the
/// unseen validation record.
pub fn run_replication(
    scenario: Scenario,
    cfg: &ExperimentConfig,
    replication: u64,
) -> Result<f64> {
    cfg.validate()?;
    let per_block = cfg.samples_per_block()?;
    let y_smax = cfg.plant.max_static_displacement();
    let discrete = matches!(scenario, Scenario::DiscreteControl | Scenario::NoisyOutput);

    let generate = |stream: u64| -> Result<(SignalSeries, SignalSeries)> {
        let seed = derive_seed(cfg.seed, replication, stream);
        let x_fine = if discrete {
            gen_discrete_control(cfg, seed)?
        } else {
            gen_reflected_walk(cfg, seed)?
        };
        let y_fine = simulate_plant(&x_fine, &cfg.plant)?;
        Ok((x_fine, y_fine))
    };

    // Identification record, with measurement noise where the scenario asks
    // for it.
    let (x_fine, y_fine) = generate(STREAM_IDENT_CONTROL)?;
    let (x_ident, y_ident) = match scenario {
        Scenario::DiscreteControl => {
            coarse_point_sample(&x_fine, &y_fine, per_block, cfg.coarse_dt)?
        }
        Scenario::NoisyOutput => {
            let (x_c, y_c) = coarse_point_sample(&x_fine, &y_fine, per_block, cfg.coarse_dt)?;
            let y_noisy = add_noise(
                &y_c,
                y_smax,
                cfg.sigma,
                derive_seed(cfg.seed, replication, STREAM_OUTPUT_NOISE),
            )?;
            (x_c, y_noisy)
        }
        Scenario::ContinuousControl => downsample(&x_fine, &y_fine, cfg.coarse_dt, cfg.x_step)?,
        Scenario::NoisyInputOutput => {
            let x_noisy = add_noise(
                &x_fine,
                cfg.x_max - cfg.x_min,
                cfg.sigma,
                derive_seed(cfg.seed, replication, STREAM_INPUT_NOISE),
            )?;
            let y_noisy = add_noise(
                &y_fine,
                y_smax,
                cfg.sigma,
                derive_seed(cfg.seed, replication, STREAM_OUTPUT_NOISE),
            )?;
            downsample(&x_noisy, &y_noisy, cfg.coarse_dt, cfg.x_step)?
        }
    };

    let state = run_identification(&x_ident, &y_ident, &cfg.ident_config(), cfg.shape())?;
    let model = state.into_model();

    // Independent, noiseless validation record.
    let (xv_fine, yv_fine) = generate(STREAM_VALID_CONTROL)?;
    let (x_valid, y_valid) = if discrete {
        coarse_point_sample(&xv_fine, &yv_fine, per_block, cfg.coarse_dt)?
    } else {
        downsample(&xv_fine, &yv_fine, cfg.coarse_dt, cfg.x_step)?
    };
    let predicted = model.eval_quantized(&x_valid)?;
    error_l1(&y_valid, &predicted.series, cfg.rows, y_smax)
}

/// Run all replications of one cell (in parallel; each replication derives
/// its own seed streams) and aggregate mean and confidence interval.
pub fn run_experiment(
    scenario: Scenario,
    cfg: &ExperimentConfig,
    replications: usize,
) -> Result<ExperimentSummary> {
    if replications == 0 {
        return Err(Error::InvalidConfig("need at least one replication".into()));
    }
    cfg.validate()?;
    let errors: Vec<f64> = (0..replications as u64)
        .into_par_iter()
        .map(|rep| run_replication(scenario, cfg, rep))
        .collect::<Result<_>>()?;
    Ok(summarize(scenario, cfg, errors))
}

/// The 4 x 4 walk-control grid over memory depth and level count.
pub fn table1(seed: u64, replications: usize) -> Result<Vec<ExperimentSummary>> {
    let mut out = Vec::new();
    for &rows in &TABLE1_ROWS {
        for &cols in &TABLE1_COLS {
            let cfg = ExperimentConfig::table1_cell(rows, cols, seed);
            out.push(run_experiment(
                Scenario::ContinuousControl,
                &cfg,
                replications,
            )?);
        }
    }
    Ok(out)
}

/// The 3 x 3 noisy-output grid over noise level and alpha.
pub fn table2(seed: u64, replications: usize) -> Result<Vec<ExperimentSummary>> {
    let mut out = Vec::new();
    for &sigma in &TABLE2_SIGMAS {
        for &alpha in &TABLE2_ALPHAS {
            let cfg = ExperimentConfig::table2_cell(sigma, alpha, seed);
            out.push(run_experiment(Scenario::NoisyOutput, &cfg, replications)?);
        }
    }
    Ok(out)
}

/// The 3 x 3 noisy input/output grid over noise level and alpha.
pub fn table3(seed: u64, replications: usize) -> Result<Vec<ExperimentSummary>> {
    let mut out = Vec::new();
    for &sigma in &TABLE3_SIGMAS {
        for &alpha in &TABLE3_ALPHAS {
            let cfg = ExperimentConfig::table3_cell(sigma, alpha, seed);
            out.push(run_experiment(
                Scenario::NoisyInputOutput,
                &cfg,
                replications,
            )?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn downsample_constant_blocks() {
        let x = SignalSeries::new(vec![0.3; 8], 0.5).unwrap();
        let y = SignalSeries::new(vec![1.25; 8], 0.5).unwrap();
        let (xc, yc) = downsample(&x, &y, 2.0, 0.1).unwrap();
        assert_eq!(xc.len(), 2);
        assert_abs_diff_eq!(xc.values()[0], 0.3, epsilon = 1e-12);
        assert_eq!(yc.values(), &[1.25, 1.25]);
        assert_eq!(xc.dt(), 2.0);
    }

    #[test]
    fn downsample_snaps_half_away_from_zero() {
        // Block mean 0.15 sits exactly on a grid tie; the snap must go up.
        let x = SignalSeries::new(vec![0.12, 0.18], 1.0).unwrap();
        let y = SignalSeries::new(vec![1.0, 3.0], 1.0).unwrap();
        let (xc, yc) = downsample(&x, &y, 2.0, 0.1).unwrap();
        assert_abs_diff_eq!(xc.values()[0], 0.2, epsilon = 1e-12);
        assert_eq!(yc.values(), &[2.0]);
    }

    #[test]
    fn downsample_rejects_ragged_blocks() {
        let x = SignalSeries::new(vec![0.0; 7], 1.0).unwrap();
        let y = SignalSeries::new(vec![0.0; 7], 1.0).unwrap();
        assert!(matches!(
            downsample(&x, &y, 2.0, 0.1),
            Err(Error::BadBlockSize(_))
        ));
        assert!(matches!(
            downsample(&x, &y, 1.5, 0.1),
            Err(Error::BadBlockSize(_))
        ));
    }

    #[test]
    fn tolerant_rounding() {
        assert_eq!(round_half_away_tolerant(1.5), 2.0);
        assert_eq!(round_half_away_tolerant(1.4999999999999998), 2.0);
        assert_eq!(round_half_away_tolerant(2.5), 3.0);
        assert_eq!(round_half_away_tolerant(-2.5), -3.0);
        assert_eq!(round_half_away_tolerant(1.3), 1.0);
        assert_eq!(round_half_away_tolerant(1.7), 2.0);
        assert_eq!(round_half_away_tolerant(0.0), 0.0);
    }

    #[test]
    fn error_l1_examples() {
        let a = SignalSeries::new(vec![1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
        assert_eq!(error_l1(&a, &a, 2, 0.5).unwrap(), 0.0);

        // Constant offset delta from sample rows-1 on:
        // e = delta * (Q - rows + 1) / (Q * y_smax).
        let rows = 2;
        let delta = 0.3;
        let shifted =
            SignalSeries::new(a.values().iter().map(|v| v + delta).collect(), 1.0).unwrap();
        let y_smax = 0.5;
        let q = 4.0;
        let expect = delta * (q - rows as f64 + 1.0) / (q * y_smax);
        assert_abs_diff_eq!(
            error_l1(&a, &shifted, rows, y_smax).unwrap(),
            expect,
            epsilon = 1e-12
        );
    }

    #[test]
    fn error_l1_skips_warmup() {
        let reference = SignalSeries::new(vec![5.0, 1.0, 1.0], 1.0).unwrap();
        // Model output disagrees wildly on the warm-up sample only.
        let out = SignalSeries::new(vec![-5.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(error_l1(&reference, &out, 2, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn error_l2_examples() {
        let a = SignalSeries::new(vec![0.0, 1.0], 1.0).unwrap();
        assert_eq!(error_l2_normalized(&a, &a).unwrap(), 0.0);
        let zeros = SignalSeries::new(vec![0.0, 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(
            error_l2_normalized(&a, &zeros).unwrap(),
            1.0 / 2.0f64.sqrt(),
            epsilon = 1e-12
        );
        // Scale invariance.
        let a10 = SignalSeries::new(vec![0.0, 10.0], 1.0).unwrap();
        let z10 = SignalSeries::new(vec![0.0, 0.0], 1.0).unwrap();
        assert_abs_diff_eq!(
            error_l2_normalized(&a10, &z10).unwrap(),
            error_l2_normalized(&a, &zeros).unwrap(),
            epsilon = 1e-12
        );
        assert!(matches!(
            error_l2_normalized(&zeros, &a),
            Err(Error::DegenerateReference)
        ));
    }

    #[test]
    fn replication_is_deterministic() {
        let mut cfg = ExperimentConfig::headline(17);
        cfg.t_max = 100.0;
        let a = run_replication(Scenario::DiscreteControl, &cfg, 0).unwrap();
        let b = run_replication(Scenario::DiscreteControl, &cfg, 0).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let c = run_replication(Scenario::DiscreteControl, &cfg, 1).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn short_experiment_smoke() {
        let mut cfg = ExperimentConfig::headline(3);
        cfg.t_max = 400.0;
        let summary = run_experiment(Scenario::DiscreteControl, &cfg, 3).unwrap();
        assert_eq!(summary.errors.len(), 3);
        assert!(summary.mean.is_finite() && summary.mean >= 0.0);
        assert!(summary.ci95.is_finite());
        // A short noiseless record already identifies the plant reasonably.
        assert!(summary.mean < 0.2, "mean error {}", summary.mean);
    }

    #[test]
    fn single_replication_has_undefined_ci() {
        let mut cfg = ExperimentConfig::headline(3);
        cfg.t_max = 100.0;
        let summary = run_experiment(Scenario::DiscreteControl, &cfg, 1).unwrap();
        assert!(summary.ci95.is_nan());
    }

    #[test]
    fn walk_experiment_smoke() {
        let mut cfg = ExperimentConfig::table1_cell(8, 11, 5);
        cfg.t_max = 400.0;
        let summary = run_experiment(Scenario::ContinuousControl, &cfg, 2).unwrap();
        assert!(summary.mean.is_finite() && summary.mean > 0.0);
    }

    #[test]
    fn noisy_scenarios_smoke() {
        let mut cfg = ExperimentConfig::table2_cell(0.05, 0.25, 5);
        cfg.t_max = 400.0;
        let e = run_replication(Scenario::NoisyOutput, &cfg, 0).unwrap();
        assert!(e.is_finite() && e > 0.0);

        let mut cfg = ExperimentConfig::table3_cell(0.05, 0.2, 5);
        cfg.t_max = 400.0;
        let e = run_replication(Scenario::NoisyInputOutput, &cfg, 0).unwrap();
        assert!(e.is_finite() && e > 0.0);
    }

    #[test]
    fn config_validation_catches_bad_cells() {
        let mut cfg = ExperimentConfig::headline(1);
        cfg.coarse_dt = cfg.plant.dt * 2.5;
        assert!(matches!(cfg.validate(), Err(Error::BadBlockSize(_))));

        let mut cfg = ExperimentConfig::headline(1);
        cfg.x_step = 0.2; // 10 levels of 0.2 overflow [0, 1]
        assert!(cfg.validate().is_err());

        let mut cfg = ExperimentConfig::headline(1);
        cfg.alpha = 0.0;
        assert!(run_experiment(Scenario::DiscreteControl, &cfg, 1).is_err());
    }
}
