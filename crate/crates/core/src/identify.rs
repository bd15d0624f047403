//! Streaming identification of the operator matrix from observed
//! input/output pairs.
//!
//! Each observed sample defines one linear equation on the matrix entries;
//! the update projects the current estimate onto that equation's hyperplane,
//! scaled by the stabilisation parameter `alpha`. Processing is strictly
//! in sample order: the method is online and the order is semantic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::UrysohnModel;
use crate::series::{Prediction, SignalSeries};

/// Matrix dimensions and input range for a fresh identification session.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelShape {
    pub rows: usize,
    pub cols: usize,
    pub x_min: f64,
    pub x_max: f64,
}

impl ModelShape {
    pub fn new(rows: usize, cols: usize, x_min: f64, x_max: f64) -> Self {
        Self {
            rows,
            cols,
            x_min,
            x_max,
        }
    }
}

/// Initial matrix estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Init {
    /// All-zero start; converges to the minimum-norm solution.
    Zeros,
    /// Warm start from a given row-major matrix.
    Matrix(Vec<f64>),
}

/// Identification parameters.
///
/// `stop_tol == 0` disables early stopping entirely (the default, so that
/// experiment runs always consume the whole record); a positive tolerance
/// stops a pass once `|D| <= stop_tol` held for `stop_window` consecutive
/// steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentConfig {
    pub alpha: f64,
    pub init: Init,
    pub interpolated: bool,
    pub stop_tol: f64,
    pub stop_window: usize,
}

impl Default for IdentConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            init: Init::Zeros,
            interpolated: false,
            stop_tol: 0.0,
            stop_window: 1,
        }
    }
}

impl IdentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "stop_tol must be non-negative, got {}",
                self.stop_tol
            )));
        }
        if self.stop_window == 0 {
            return Err(Error::InvalidConfig(
                "stop_window must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Mutable identification session: the evolving model, per-entry update
/// counters and the residual trajectory.
#[derive(Debug, Clone)]
pub struct IdentState {
    model: UrysohnModel,
    counters: Vec<u64>,
    residuals: Vec<f64>,
    samples_seen: usize,
}

impl IdentState {
    pub fn new(shape: ModelShape, cfg: &IdentConfig) -> Result<Self> {
        cfg.validate()?;
        let model = match &cfg.init {
            Init::Zeros => UrysohnModel::zeros(shape.rows, shape.cols, shape.x_min, shape.x_max)?,
            Init::Matrix(values) => UrysohnModel::new(
                shape.rows,
                shape.cols,
                shape.x_min,
                shape.x_max,
                values.clone(),
            )?,
        };
        let counters = vec![0u64; shape.rows * shape.cols];
        Ok(Self {
            model,
            counters,
            residuals: Vec::new(),
            samples_seen: 0,
        })
    }

    /// Resume a session from a checkpointed model and counters.
    pub fn resume(model: UrysohnModel, counters: Vec<u64>) -> Result<Self> {
        if counters.len() != model.rows() * model.cols() {
            return Err(Error::malformed(
                "counters",
                format!(
                    "expected {} entries, got {}",
                    model.rows() * model.cols(),
                    counters.len()
                ),
            ));
        }
        Ok(Self {
            model,
            counters,
            residuals: Vec::new(),
            samples_seen: 0,
        })
    }

    pub fn model(&self) -> &UrysohnModel {
        &self.model
    }

    pub fn into_model(self) -> UrysohnModel {
        self.model
    }

    pub fn counters(&self) -> &[u64] {
        &self.counters
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn samples_seen(&self) -> usize {
        self.samples_seen
    }

    /// One projection step on a window of quantised levels, oldest first.
    /// Returns the residual `D = y_obs - y_hat` before the update; each of
    /// the `rows` addressed entries receives `alpha * D / rows`.
    pub fn step_quantized(&mut self, window: &[usize], y_obs: f64, alpha: f64) -> Result<f64> {
        if !y_obs.is_finite() {
            return Err(Error::NonFinite {
                step: self.samples_seen,
            });
        }
        let y_hat = self.model.window_output(window)?;
        let residual = y_obs - y_hat;
        let rows = self.model.rows();
        let delta = alpha * residual / rows as f64;
        for r in 0..rows {
            let level = window[rows - 1 - r];
            *self.model.entry_mut(r, level) += delta;
            self.counters[self.model.flat_index(r, level)] += 1;
        }
        self.samples_seen += 1;
        self.residuals.push(residual);
        Ok(residual)
    }

    /// One projection step on a window of raw inputs, oldest first.
    ///
    /// Both neighbour entries of every lag receive a share of the
    /// correction, weighted by the interpolation weights and normalised by
    /// the squared norm of the weight row. On-grid windows reduce exactly
    /// to the quantised rule.
    pub fn step_interpolated(&mut self, window: &[f64], y_obs: f64, alpha: f64) -> Result<f64> {
        if !y_obs.is_finite() || window.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                step: self.samples_seen,
            });
        }
        let rows = self.model.rows();
        if window.len() != rows {
            return Err(Error::LengthMismatch {
                left: window.len(),
                right: rows,
            });
        }
        let stencils: Vec<_> = (0..rows)
            .map(|r| self.model.stencil(window[rows - 1 - r]))
            .collect();
        let mut y_hat = 0.0;
        let mut norm = 0.0;
        for (r, st) in stencils.iter().enumerate() {
            y_hat += (1.0 - st.frac) * self.model.entry(r, st.k_lo)
                + st.frac * self.model.entry(r, st.k_hi);
            norm += (1.0 - st.frac) * (1.0 - st.frac) + st.frac * st.frac;
        }
        let residual = y_obs - y_hat;
        let scale = alpha * residual / norm;
        for (r, st) in stencils.iter().enumerate() {
            if st.k_lo == st.k_hi {
                // The two contributions merge into the single entry.
                *self.model.entry_mut(r, st.k_lo) += scale;
                self.counters[self.model.flat_index(r, st.k_lo)] += 1;
            } else {
                *self.model.entry_mut(r, st.k_lo) += scale * (1.0 - st.frac);
                *self.model.entry_mut(r, st.k_hi) += scale * st.frac;
                self.counters[self.model.flat_index(r, st.k_lo)] += 1;
                self.counters[self.model.flat_index(r, st.k_hi)] += 1;
            }
        }
        self.samples_seen += 1;
        self.residuals.push(residual);
        Ok(residual)
    }

    /// One forward pass over a record, stepping at every sample from the
    /// first full window onward. `observer` sees the state after each step.
    pub fn process_record_observed(
        &mut self,
        input: &SignalSeries,
        output: &SignalSeries,
        cfg: &IdentConfig,
        mut observer: impl FnMut(usize, &UrysohnModel),
    ) -> Result<()> {
        cfg.validate()?;
        let n = input.len();
        if output.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: output.len(),
            });
        }
        let rows = self.model.rows();
        if n < rows {
            return Err(Error::SeriesTooShort {
                needed: rows,
                got: n,
            });
        }
        let ys = output.values();
        let mut streak = 0usize;
        if cfg.interpolated {
            let xs = input.values();
            for i in (rows - 1)..n {
                let d = self.step_interpolated(&xs[i + 1 - rows..=i], ys[i], cfg.alpha)?;
                observer(self.samples_seen, &self.model);
                if cfg.stop_tol > 0.0 {
                    streak = if d.abs() <= cfg.stop_tol {
                        streak + 1
                    } else {
                        0
                    };
                    if streak >= cfg.stop_window {
                        break;
                    }
                }
            }
        } else {
            let levels = self.model.quantize_series(input);
            for i in (rows - 1)..n {
                let d = self.step_quantized(&levels[i + 1 - rows..=i], ys[i], cfg.alpha)?;
                observer(self.samples_seen, &self.model);
                if cfg.stop_tol > 0.0 {
                    streak = if d.abs() <= cfg.stop_tol {
                        streak + 1
                    } else {
                        0
                    };
                    if streak >= cfg.stop_window {
                        break;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn process_record(
        &mut self,
        input: &SignalSeries,
        output: &SignalSeries,
        cfg: &IdentConfig,
    ) -> Result<()> {
        self.process_record_observed(input, output, cfg, |_, _| {})
    }

    pub fn coverage(&self) -> CoverageReport {
        coverage_report(self)
    }
}

/// Single forward pass over one record, starting from the configured
/// initial estimate.
pub fn run_identification(
    input: &SignalSeries,
    output: &SignalSeries,
    cfg: &IdentConfig,
    shape: ModelShape,
) -> Result<IdentState> {
    let mut state = IdentState::new(shape, cfg)?;
    state.process_record(input, output, cfg)?;
    Ok(state)
}

/// Repeated passes over the same record without resetting the model.
/// Deterministic; `passes == 1` is exactly [`run_identification`].
pub fn run_epochs(
    input: &SignalSeries,
    output: &SignalSeries,
    cfg: &IdentConfig,
    shape: ModelShape,
    passes: usize,
) -> Result<IdentState> {
    if passes == 0 {
        return Err(Error::InvalidConfig("need at least one pass".into()));
    }
    let mut state = IdentState::new(shape, cfg)?;
    for _ in 0..passes {
        state.process_record(input, output, cfg)?;
    }
    Ok(state)
}

/// Update-count summary: which entries were touched, per-column totals and
/// the contiguous identified level range.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub counters: Vec<u64>,
    pub column_updates: Vec<u64>,
    /// 1-based levels whose column was never updated.
    pub untouched_columns: Vec<usize>,
    /// Lowest and highest touched level (1-based, inclusive), if any.
    pub identified_range: Option<(usize, usize)>,
}

pub fn coverage_report(state: &IdentState) -> CoverageReport {
    let rows = state.model.rows();
    let cols = state.model.cols();
    let mut column_updates = vec![0u64; cols];
    for r in 0..rows {
        for (c, total) in column_updates.iter_mut().enumerate() {
            *total += state.counters[r * cols + c];
        }
    }
    let untouched_columns: Vec<usize> = column_updates
        .iter()
        .enumerate()
        .filter(|(_, &u)| u == 0)
        .map(|(c, _)| c + 1)
        .collect();
    let touched: Vec<usize> = column_updates
        .iter()
        .enumerate()
        .filter(|(_, &u)| u > 0)
        .map(|(c, _)| c + 1)
        .collect();
    let identified_range = touched
        .first()
        .map(|&lo| (lo, *touched.last().expect("non-empty")));
    CoverageReport {
        counters: state.counters.to_vec(),
        column_updates,
        untouched_columns,
        identified_range,
    }
}

/// Evaluate a (possibly partially identified) model, flagging a sample valid
/// only when every entry its window addresses has been updated at least
/// once. Invalid samples carry the zero fill value. Validity resumes exactly
/// `rows` samples after the input re-enters the identified range.
pub fn predict_with_validity(
    model: &UrysohnModel,
    counters: &[u64],
    input: &SignalSeries,
) -> Result<Prediction> {
    let rows = model.rows();
    let cols = model.cols();
    if counters.len() != rows * cols {
        return Err(Error::malformed(
            "counters",
            format!("expected {} entries, got {}", rows * cols, counters.len()),
        ));
    }
    let n = input.len();
    if n < rows {
        return Err(Error::SeriesTooShort {
            needed: rows,
            got: n,
        });
    }
    let levels = model.quantize_series(input);
    let mut y = vec![0.0; n];
    let mut valid = vec![false; n];
    for i in (rows - 1)..n {
        let mut acc = 0.0;
        let mut ok = true;
        for r in 0..rows {
            let idx = model.flat_index(r, levels[i - r]);
            if counters[idx] == 0 {
                ok = false;
                break;
            }
            acc += model.values()[idx];
        }
        if ok {
            y[i] = acc;
            valid[i] = true;
        }
    }
    Ok(Prediction {
        series: SignalSeries::new(y, input.dt())?,
        valid,
    })
}

/// Optional post-processing: linearly extrapolate never-updated columns at
/// the edges of each row's identified range from the two nearest identified
/// columns. Off the hot path; leaves interior gaps untouched.
pub fn extrapolate_edges(model: &mut UrysohnModel, counters: &[u64]) -> Result<()> {
    let rows = model.rows();
    let cols = model.cols();
    if counters.len() != rows * cols {
        return Err(Error::malformed(
            "counters",
            format!("expected {} entries, got {}", rows * cols, counters.len()),
        ));
    }
    for r in 0..rows {
        let row_counts = &counters[r * cols..(r + 1) * cols];
        let touched: Vec<usize> = (0..cols).filter(|&c| row_counts[c] > 0).collect();
        let (Some(&first), Some(&last)) = (touched.first(), touched.last()) else {
            continue;
        };
        for c in 0..first {
            let v = if first < last && row_counts[first + 1] > 0 {
                let base = model.entry(r, first + 1);
                let next = model.entry(r, first + 2);
                base + (base - next) * (first - c) as f64
            } else {
                model.entry(r, first + 1)
            };
            *model.entry_mut(r, c + 1) = v;
        }
        for c in (last + 1)..cols {
            let v = if last >= 1 && row_counts[last - 1] > 0 {
                let base = model.entry(r, last + 1);
                let prev = model.entry(r, last);
                base + (base - prev) * (c - last) as f64
            } else {
                model.entry(r, last + 1)
            };
            *model.entry_mut(r, c + 1) = v;
        }
    }
    Ok(())
}
