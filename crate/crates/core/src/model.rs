//! The discrete Urysohn operator.
//!
//! An operator is an `rows x cols` kernel matrix together with the input
//! range it was discretised over. Row `j` (0-based here) holds the
//! contribution profile of the input `j` steps in the past; column `k`
//! corresponds to quantisation level `k` (levels are 1-based throughout,
//! `1..=cols`). The output at sample `i` is the sum of one entry per row,
//! addressed by the recent input history.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Prediction, SignalSeries};

/// Neighbouring levels and interpolation weight for a non-quantised input.
///
/// `scaled` is the input mapped to level coordinates and clamped to
/// `[1, cols]`; `k_lo = floor(scaled)`, `k_hi = ceil(scaled)` and
/// `frac = scaled - k_lo`. For an input sitting exactly on a level,
/// `k_lo == k_hi` and `frac == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolationStencil {
    pub k_lo: usize,
    pub k_hi: usize,
    pub frac: f64,
    pub scaled: f64,
}

/// The identified object: kernel matrix plus quantisation metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct UrysohnModel {
    rows: usize,
    cols: usize,
    x_min: f64,
    x_max: f64,
    /// Row-major, `rows * cols` entries.
    values: Vec<f64>,
    /// Per-input level counts for flattened multi-input operators.
    dims: Option<Vec<usize>>,
    /// Explicit level breakpoints for non-uniform discretisation.
    grid: Option<Vec<f64>>,
}

impl UrysohnModel {
    pub fn new(rows: usize, cols: usize, x_min: f64, x_max: f64, values: Vec<f64>) -> Result<Self> {
        let model = Self {
            rows,
            cols,
            x_min,
            x_max,
            values,
            dims: None,
            grid: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn zeros(rows: usize, cols: usize, x_min: f64, x_max: f64) -> Result<Self> {
        Self::new(rows, cols, x_min, x_max, vec![0.0; rows * cols])
    }

    /// Attach multi-input flattening metadata. The product of the per-input
    /// level counts must equal `cols`.
    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        self.dims = Some(dims);
        self.validate()?;
        Ok(self)
    }

    /// Attach an explicit breakpoint vector for non-uniform level spacing.
    /// Must be strictly increasing, `cols` long, spanning `[x_min, x_max]`.
    pub fn with_grid(mut self, grid: Vec<f64>) -> Result<Self> {
        self.grid = Some(grid);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::malformed("m", "row count must be positive"));
        }
        if self.cols < 2 {
            return Err(Error::malformed("n", "need at least 2 quantisation levels"));
        }
        if !self.x_min.is_finite() || !self.x_max.is_finite() {
            return Err(Error::malformed(
                "x_min/x_max",
                "range bounds must be finite",
            ));
        }
        if !(self.x_min < self.x_max) {
            return Err(Error::malformed(
                "x_min",
                format!(
                    "x_min ({}) must be strictly below x_max ({})",
                    self.x_min, self.x_max
                ),
            ));
        }
        if self.values.len() != self.rows * self.cols {
            return Err(Error::malformed(
                "matrix",
                format!(
                    "expected {} entries ({} x {}), got {}",
                    self.rows * self.cols,
                    self.rows,
                    self.cols,
                    self.values.len()
                ),
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::malformed("matrix", "entries must be finite"));
        }
        if let Some(dims) = &self.dims {
            if dims.is_empty() || dims.contains(&0) {
                return Err(Error::malformed(
                    "dims",
                    "per-input level counts must be positive",
                ));
            }
            let prod: usize = dims.iter().product();
            if prod != self.cols {
                return Err(Error::malformed(
                    "dims",
                    format!("product of dims is {prod}, expected n = {}", self.cols),
                ));
            }
        }
        if let Some(grid) = &self.grid {
            if grid.len() != self.cols {
                return Err(Error::malformed(
                    "grid",
                    format!("expected {} breakpoints, got {}", self.cols, grid.len()),
                ));
            }
            if grid.iter().any(|g| !g.is_finite()) {
                return Err(Error::malformed("grid", "breakpoints must be finite"));
            }
            if !grid.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::malformed(
                    "grid",
                    "breakpoints must be strictly increasing",
                ));
            }
            if grid[0] != self.x_min || grid[self.cols - 1] != self.x_max {
                return Err(Error::malformed(
                    "grid",
                    "breakpoints must span [x_min, x_max]",
                ));
            }
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dims(&self) -> Option<&[usize]> {
        self.dims.as_deref()
    }

    pub fn grid(&self) -> Option<&[f64]> {
        self.grid.as_deref()
    }

    /// Flat row-major position of `(row, level)`; `row` is 0-based,
    /// `level` is 1-based.
    pub fn flat_index(&self, row: usize, level: usize) -> usize {
        debug_assert!(row < self.rows && (1..=self.cols).contains(&level));
        row * self.cols + level - 1
    }

    pub fn entry(&self, row: usize, level: usize) -> f64 {
        self.values[self.flat_index(row, level)]
    }

    pub(crate) fn entry_mut(&mut self, row: usize, level: usize) -> &mut f64 {
        let idx = self.flat_index(row, level);
        &mut self.values[idx]
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level < 1 || level > self.cols {
            return Err(Error::LevelOutOfRange {
                level,
                max: self.cols,
            });
        }
        Ok(())
    }

    /// Quantise an input value to a level in `1..=cols`.
    ///
    /// Uniform spacing uses `k = 1 + round((n-1)(x - x_min)/(x_max - x_min))`
    /// with half rounded away from zero; out-of-range inputs clamp to the
    /// boundary levels. With an explicit breakpoint grid the nearest
    /// breakpoint wins, ties going to the upper level.
    pub fn quantize(&self, x: f64) -> usize {
        match &self.grid {
            None => quantize_uniform(x, self.cols, self.x_min, self.x_max),
            Some(_) => {
                let st = self.stencil(x.clamp(self.x_min, self.x_max));
                if st.frac >= 0.5 {
                    st.k_hi
                } else {
                    st.k_lo
                }
            }
        }
    }

    pub fn quantize_series(&self, input: &SignalSeries) -> Vec<usize> {
        input.values().iter().map(|&x| self.quantize(x)).collect()
    }

    /// Floor/ceil neighbour levels and the fractional weight of an input.
    pub fn stencil(&self, x: f64) -> InterpolationStencil {
        match &self.grid {
            None => {
                let raw =
                    1.0 + ((self.cols - 1) as f64) * (x - self.x_min) / (self.x_max - self.x_min);
                let b = raw.clamp(1.0, self.cols as f64);
                let k_lo = b.floor() as usize;
                let k_hi = b.ceil() as usize;
                InterpolationStencil {
                    k_lo,
                    k_hi,
                    frac: b - k_lo as f64,
                    scaled: b,
                }
            }
            Some(grid) => {
                let x = x.clamp(self.x_min, self.x_max);
                // Largest breakpoint not above x.
                let idx = match grid.binary_search_by(|g| g.partial_cmp(&x).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i - 1,
                };
                if idx + 1 >= self.cols || grid[idx] == x {
                    let k = idx + 1;
                    InterpolationStencil {
                        k_lo: k,
                        k_hi: k,
                        frac: 0.0,
                        scaled: k as f64,
                    }
                } else {
                    let frac = (x - grid[idx]) / (grid[idx + 1] - grid[idx]);
                    InterpolationStencil {
                        k_lo: idx + 1,
                        k_hi: idx + 2,
                        frac,
                        scaled: (idx + 1) as f64 + frac,
                    }
                }
            }
        }
    }

    /// Level associated with a quantised input, mapped back to an input value.
    pub fn level_value(&self, level: usize) -> Result<f64> {
        self.check_level(level)?;
        match &self.grid {
            Some(grid) => Ok(grid[level - 1]),
            None => Ok(self.x_min
                + (level - 1) as f64 * (self.x_max - self.x_min) / (self.cols - 1) as f64),
        }
    }

    /// Output for one window of quantised levels, oldest first.
    pub fn window_output(&self, window: &[usize]) -> Result<f64> {
        if window.len() != self.rows {
            return Err(Error::LengthMismatch {
                left: window.len(),
                right: self.rows,
            });
        }
        for &k in window {
            self.check_level(k)?;
        }
        let mut acc = 0.0;
        for r in 0..self.rows {
            acc += self.entry(r, window[self.rows - 1 - r]);
        }
        Ok(acc)
    }

    /// Output for one window of raw inputs, oldest first, using the
    /// piecewise-linear generalisation.
    pub fn window_output_interpolated(&self, window: &[f64]) -> Result<f64> {
        if window.len() != self.rows {
            return Err(Error::LengthMismatch {
                left: window.len(),
                right: self.rows,
            });
        }
        let mut acc = 0.0;
        for r in 0..self.rows {
            let st = self.stencil(window[self.rows - 1 - r]);
            acc += (1.0 - st.frac) * self.entry(r, st.k_lo) + st.frac * self.entry(r, st.k_hi);
        }
        Ok(acc)
    }

    /// Transform a quantised input sequence to the output sequence.
    ///
    /// The first `rows - 1` samples are not defined by the operator; they
    /// carry a zero fill value and are flagged invalid.
    pub fn eval_quantized(&self, input: &SignalSeries) -> Result<Prediction> {
        let n = input.len();
        if n < self.rows {
            return Err(Error::SeriesTooShort {
                needed: self.rows,
                got: n,
            });
        }
        let levels = self.quantize_series(input);
        self.eval_levels(&levels, input.dt())
    }

    /// As [`eval_quantized`](Self::eval_quantized) but on pre-quantised levels.
    pub fn eval_levels(&self, levels: &[usize], dt: f64) -> Result<Prediction> {
        let n = levels.len();
        if n < self.rows {
            return Err(Error::SeriesTooShort {
                needed: self.rows,
                got: n,
            });
        }
        for &k in levels {
            self.check_level(k)?;
        }
        let mut y = vec![0.0; n];
        let mut valid = vec![false; n];
        for i in (self.rows - 1)..n {
            let mut acc = 0.0;
            for r in 0..self.rows {
                acc += self.entry(r, levels[i - r]);
            }
            y[i] = acc;
            valid[i] = true;
        }
        Ok(Prediction {
            series: SignalSeries::new(y, dt)?,
            valid,
        })
    }

    /// Transform a non-quantised input sequence to the output sequence using
    /// linear interpolation between neighbouring levels.
    pub fn eval_interpolated(&self, input: &SignalSeries) -> Result<Prediction> {
        let n = input.len();
        if n < self.rows {
            return Err(Error::SeriesTooShort {
                needed: self.rows,
                got: n,
            });
        }
        let stencils: Vec<InterpolationStencil> =
            input.values().iter().map(|&x| self.stencil(x)).collect();
        let mut y = vec![0.0; n];
        let mut valid = vec![false; n];
        for i in (self.rows - 1)..n {
            let mut acc = 0.0;
            for r in 0..self.rows {
                let st = stencils[i - r];
                acc += (1.0 - st.frac) * self.entry(r, st.k_lo) + st.frac * self.entry(r, st.k_hi);
            }
            y[i] = acc;
            valid[i] = true;
        }
        Ok(Prediction {
            series: SignalSeries::new(y, input.dt())?,
            valid,
        })
    }
}

/// Quantise a value onto a uniform grid of `levels` points spanning
/// `[x_min, x_max]`: `k = 1 + round((n-1)(x - x_min)/(x_max - x_min))`,
/// half rounded away from zero, out-of-range inputs clamped.
pub fn quantize_uniform(x: f64, levels: usize, x_min: f64, x_max: f64) -> usize {
    let x = x.clamp(x_min, x_max);
    let b = ((levels - 1) as f64) * (x - x_min) / (x_max - x_min);
    let k = 1 + b.round() as i64;
    k.clamp(1, levels as i64) as usize
}

/// Map per-input levels onto a single flattened level, input 1 fastest-varying.
///
/// The mapping is the lexicographic index
/// `k* = 1 + sum_g (k_g - 1) * prod_{h<g} n_h`, a bijection from the level
/// lattice onto `1..=prod(dims)`.
pub fn flatten_multi_input(levels: &[usize], dims: &[usize]) -> Result<usize> {
    if levels.len() != dims.len() {
        return Err(Error::LengthMismatch {
            left: levels.len(),
            right: dims.len(),
        });
    }
    if levels.is_empty() {
        return Err(Error::InvalidConfig("no inputs to flatten".into()));
    }
    let mut flat = 0usize;
    let mut stride = 1usize;
    for (&k, &n) in levels.iter().zip(dims) {
        if k < 1 || k > n {
            return Err(Error::LevelOutOfRange { level: k, max: n });
        }
        flat += (k - 1) * stride;
        stride *= n;
    }
    Ok(1 + flat)
}

/// Reduce a multi-input record to a single flattened level sequence:
/// quantise each input onto its own uniform grid, then flatten sample by
/// sample. `ranges[g]` is the `(x_min, x_max)` span of input `g`.
pub fn flatten_series(
    inputs: &[SignalSeries],
    dims: &[usize],
    ranges: &[(f64, f64)],
) -> Result<Vec<usize>> {
    if inputs.len() != dims.len() || ranges.len() != dims.len() {
        return Err(Error::LengthMismatch {
            left: inputs.len(),
            right: dims.len(),
        });
    }
    if inputs.is_empty() {
        return Err(Error::InvalidConfig("no inputs to flatten".into()));
    }
    let len = inputs[0].len();
    for series in inputs {
        if series.len() != len {
            return Err(Error::LengthMismatch {
                left: series.len(),
                right: len,
            });
        }
    }
    for (g, &(lo, hi)) in ranges.iter().enumerate() {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "input {} has an empty or non-finite range [{lo}, {hi}]",
                g + 1
            )));
        }
        if dims[g] < 2 {
            return Err(Error::InvalidConfig(format!(
                "input {} needs at least 2 levels",
                g + 1
            )));
        }
    }
    let mut flat = Vec::with_capacity(len);
    let mut levels = vec![0usize; dims.len()];
    for i in 0..len {
        for (g, series) in inputs.iter().enumerate() {
            let (lo, hi) = ranges[g];
            levels[g] = quantize_uniform(series.values()[i], dims[g], lo, hi);
        }
        flat.push(flatten_multi_input(&levels, dims)?);
    }
    Ok(flat)
}

/// A model file: the operator plus optional per-entry update counters
/// (populated by identification checkpoints).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: UrysohnModel,
    pub counters: Option<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct RawModelFile {
    m: usize,
    n: usize,
    x_min: f64,
    x_max: f64,
    matrix: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    counters: Option<Vec<u64>>,
}

/// Serialise a model (and optional counters) to the JSON file layout.
pub fn model_to_json(model: &UrysohnModel, counters: Option<&[u64]>) -> Result<String> {
    if let Some(c) = counters {
        if c.len() != model.rows * model.cols {
            return Err(Error::malformed(
                "counters",
                format!(
                    "expected {} entries, got {}",
                    model.rows * model.cols,
                    c.len()
                ),
            ));
        }
    }
    let raw = RawModelFile {
        m: model.rows,
        n: model.cols,
        x_min: model.x_min,
        x_max: model.x_max,
        matrix: model.values.clone(),
        dims: model.dims.clone(),
        grid: model.grid.clone(),
        counters: counters.map(|c| c.to_vec()),
    };
    serde_json::to_string_pretty(&raw).map_err(|e| Error::malformed("json", e.to_string()))
}

/// Parse the JSON file layout, checking every model invariant.
pub fn model_from_json(text: &str) -> Result<ModelFile> {
    let raw: RawModelFile =
        serde_json::from_str(text).map_err(|e| Error::malformed("json", e.to_string()))?;
    let mut model = UrysohnModel::new(raw.m, raw.n, raw.x_min, raw.x_max, raw.matrix)?;
    if let Some(dims) = raw.dims {
        model = model.with_dims(dims)?;
    }
    if let Some(grid) = raw.grid {
        model = model.with_grid(grid)?;
    }
    if let Some(c) = &raw.counters {
        if c.len() != raw.m * raw.n {
            return Err(Error::malformed(
                "counters",
                format!("expected {} entries, got {}", raw.m * raw.n, c.len()),
            ));
        }
    }
    Ok(ModelFile {
        model,
        counters: raw.counters,
    })
}

pub fn save_model(
    path: impl AsRef<Path>,
    model: &UrysohnModel,
    counters: Option<&[u64]>,
) -> Result<()> {
    let text = model_to_json(model, counters)?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let text = fs::read_to_string(path)?;
    model_from_json(&text)
}
