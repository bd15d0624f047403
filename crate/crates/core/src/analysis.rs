//! Structural analysis and verification tools.
//!
//! The identification problem can be written as a sparse linear system whose
//! unknowns are the flattened matrix entries: each observed output
//! contributes one row with exactly one unit entry per row-block. This
//! module builds such systems, measures their rank by brute force, solves
//! them in the minimum-norm sense (the oracle the streaming identifier is
//! checked against), probes black-box systems for describability and
//! classifies identified kernels as linear, Hammerstein or general.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::UrysohnModel;

/// Guard for exhaustive enumeration: at most this many windows.
const MAX_FULL_WINDOWS: u128 = 1_000_000;
/// Guard for dense expansions handed to elimination or SVD.
const MAX_DENSE_ENTRIES: usize = 10_000_000;
/// Pivot tolerance for the brute-force rank, relative to the largest entry.
const RANK_PIVOT_TOL: f64 = 1e-9;
/// Exact-solve residual tolerance, relative to the right-hand side scale.
const SOLVE_RESIDUAL_TOL: f64 = 1e-9;

/// A sparse 0/1 system `M Z = Y` over the flattened matrix entries.
///
/// Row indices are 1-based flat positions `n (j - 1) + k`, one per
/// row-block `j`; `width == memory * levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSystem {
    memory: usize,
    levels: usize,
    rows: Vec<Vec<usize>>,
    rhs: Vec<f64>,
}

impl AssembledSystem {
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn width(&self) -> usize {
        self.memory * self.levels
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Replace the right-hand side, keeping the sparsity pattern.
    pub fn with_rhs(mut self, rhs: Vec<f64>) -> Result<Self> {
        if rhs.len() != self.rows.len() {
            return Err(Error::LengthMismatch {
                left: rhs.len(),
                right: self.rows.len(),
            });
        }
        self.rhs = rhs;
        Ok(self)
    }

    /// Apply the system matrix to a flattened entry vector.
    pub fn apply(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.width() {
            return Err(Error::LengthMismatch {
                left: z.len(),
                right: self.width(),
            });
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().map(|&q| z[q - 1]).sum())
            .collect())
    }

    fn to_dense(&self) -> Result<DMatrix<f64>> {
        let entries = self.rows.len() * self.width();
        if entries > MAX_DENSE_ENTRIES {
            return Err(Error::TooLarge(format!(
                "dense expansion needs {entries} entries, guard is {MAX_DENSE_ENTRIES}"
            )));
        }
        let mut dense = DMatrix::zeros(self.rows.len(), self.width());
        for (i, row) in self.rows.iter().enumerate() {
            for &q in row {
                dense[(i, q - 1)] = 1.0;
            }
        }
        Ok(dense)
    }
}

/// Build the system for an observed record of quantised levels and outputs.
/// One row per output index `i >= memory` (1-based), with indices
/// `levels * (j - 1) + k_{i-j+1}`.
pub fn assemble_system(
    input_levels: &[usize],
    outputs: &[f64],
    memory: usize,
    levels: usize,
) -> Result<AssembledSystem> {
    if memory == 0 || levels < 2 {
        return Err(Error::InvalidConfig(
            "need memory >= 1 and at least 2 levels".into(),
        ));
    }
    if input_levels.len() != outputs.len() {
        return Err(Error::LengthMismatch {
            left: input_levels.len(),
            right: outputs.len(),
        });
    }
    if input_levels.len() < memory {
        return Err(Error::SeriesTooShort {
            needed: memory,
            got: input_levels.len(),
        });
    }
    for &k in input_levels {
        if k < 1 || k > levels {
            return Err(Error::LevelOutOfRange {
                level: k,
                max: levels,
            });
        }
    }
    let mut rows = Vec::with_capacity(input_levels.len() - memory + 1);
    let mut rhs = Vec::with_capacity(rows.capacity());
    for i in (memory - 1)..input_levels.len() {
        let mut row = Vec::with_capacity(memory);
        for j in 1..=memory {
            row.push(levels * (j - 1) + input_levels[i + 1 - j]);
        }
        rows.push(row);
        rhs.push(outputs[i]);
    }
    Ok(AssembledSystem {
        memory,
        levels,
        rows,
        rhs,
    })
}

/// Enumerate the system over all `levels^memory` possible windows, in
/// lexicographic window order, with a zero right-hand side.
pub fn enumerate_full_system(memory: usize, levels: usize) -> Result<AssembledSystem> {
    if memory == 0 || levels < 2 {
        return Err(Error::InvalidConfig(
            "need memory >= 1 and at least 2 levels".into(),
        ));
    }
    let total = (levels as u128).pow(memory as u32);
    if total > MAX_FULL_WINDOWS {
        return Err(Error::TooLarge(format!(
            "{levels}^{memory} = {total} windows exceeds guard {MAX_FULL_WINDOWS}"
        )));
    }
    let total = total as usize;
    let mut rows = Vec::with_capacity(total);
    let mut window = vec![1usize; memory];
    for _ in 0..total {
        let mut row = Vec::with_capacity(memory);
        for j in 1..=memory {
            // Window element m - j + 1 (1-based), i.e. the newest input for j = 1.
            row.push(levels * (j - 1) + window[memory - j]);
        }
        rows.push(row);
        // Advance the window lexicographically, last element fastest.
        for pos in (0..memory).rev() {
            window[pos] += 1;
            if window[pos] <= levels {
                break;
            }
            window[pos] = 1;
        }
    }
    Ok(AssembledSystem {
        memory,
        levels,
        rhs: vec![0.0; total],
        rows,
    })
}

fn elimination_rank(mut a: DMatrix<f64>) -> usize {
    let (rows, cols) = a.shape();
    let max_abs = a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if max_abs == 0.0 {
        return 0;
    }
    let tol = RANK_PIVOT_TOL * max_abs;
    let mut rank = 0;
    for col in 0..cols {
        let mut best = rank;
        let mut best_abs = 0.0;
        for r in rank..rows {
            let v = a[(r, col)].abs();
            if v > best_abs {
                best = r;
                best_abs = v;
            }
        }
        if best_abs <= tol {
            continue;
        }
        a.swap_rows(rank, best);
        let pivot = a[(rank, col)];
        for r in (rank + 1)..rows {
            let factor = a[(r, col)] / pivot;
            if factor != 0.0 {
                for c in col..cols {
                    a[(r, c)] -= factor * a[(rank, c)];
                }
            }
        }
        rank += 1;
        if rank == rows {
            break;
        }
    }
    rank
}

/// Numerical rank of the dense 0/1 expansion, by Gaussian elimination with
/// partial pivoting and an explicit pivot tolerance.
pub fn brute_rank(system: &AssembledSystem) -> Result<usize> {
    Ok(elimination_rank(system.to_dense()?))
}

/// Rank of the submatrix formed by the given 1-based flat columns.
pub fn column_rank(system: &AssembledSystem, columns: &[usize]) -> Result<usize> {
    let width = system.width();
    for &c in columns {
        if c < 1 || c > width {
            return Err(Error::LevelOutOfRange {
                level: c,
                max: width,
            });
        }
    }
    let entries = system.rows.len() * columns.len();
    if entries > MAX_DENSE_ENTRIES {
        return Err(Error::TooLarge(format!(
            "dense expansion needs {entries} entries, guard is {MAX_DENSE_ENTRIES}"
        )));
    }
    let mut pos = HashMap::new();
    for (j, &c) in columns.iter().enumerate() {
        pos.insert(c, j);
    }
    let mut dense = DMatrix::zeros(system.rows.len(), columns.len());
    for (i, row) in system.rows.iter().enumerate() {
        for &q in row {
            if let Some(&j) = pos.get(&q) {
                dense[(i, j)] = 1.0;
            }
        }
    }
    Ok(elimination_rank(dense))
}

/// All `2 * levels` flat columns belonging to two row-blocks (1-based).
pub fn block_columns(system: &AssembledSystem, block_a: usize, block_b: usize) -> Vec<usize> {
    let n = system.levels();
    let mut cols: Vec<usize> = ((n * (block_a - 1) + 1)..=(n * block_a)).collect();
    cols.extend((n * (block_b - 1) + 1)..=(n * block_b));
    cols
}

fn min_norm_dense(dense: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let b = DVector::from_column_slice(rhs);
    let svd = dense.clone().svd(true, true);
    let s_max = svd.singular_values.iter().fold(0.0f64, |a, &v| a.max(v));
    let eps = if s_max > 0.0 { s_max * 1e-12 } else { 1e-12 };
    let z = svd
        .solve(&b, eps)
        .map_err(|e| Error::InvalidConfig(format!("SVD solve failed: {e}")))?;
    let residual = (dense * &z - &b).amax();
    let tolerance = SOLVE_RESIDUAL_TOL * b.amax().max(1.0);
    if residual > tolerance {
        return Err(Error::Inconsistent {
            residual,
            tolerance,
        });
    }
    Ok(z.as_slice().to_vec())
}

/// Minimum-L2-norm exact solution of the assembled system, computed through
/// a truncated SVD pseudo-inverse. Fails with `Inconsistent` when no exact
/// solution exists (noisy or non-Urysohn data).
pub fn min_norm_solve(system: &AssembledSystem) -> Result<Vec<f64>> {
    min_norm_dense(&system.to_dense()?, &system.rhs)
}

/// Solve with up to `memory - 1` prescribed entries, at most one per
/// row-block. Pins are `(1-based flat index, value)` pairs appended as
/// additional exact equations.
pub fn pin_and_solve(system: &AssembledSystem, pins: &[(usize, f64)]) -> Result<Vec<f64>> {
    let width = system.width();
    let n = system.levels();
    if pins.len() > system.memory().saturating_sub(1) {
        return Err(Error::BadPinPattern(format!(
            "{} pins given, at most {} allowed",
            pins.len(),
            system.memory() - 1
        )));
    }
    let mut seen_blocks = HashMap::new();
    for &(idx, value) in pins {
        if idx < 1 || idx > width {
            return Err(Error::BadPinPattern(format!(
                "pin index {idx} outside 1..={width}"
            )));
        }
        if !value.is_finite() {
            return Err(Error::BadPinPattern(format!(
                "pin value at {idx} not finite"
            )));
        }
        let block = (idx - 1) / n + 1;
        if let Some(prev) = seen_blocks.insert(block, idx) {
            return Err(Error::BadPinPattern(format!(
                "pins {prev} and {idx} both fall in row-block {block}"
            )));
        }
    }
    let dense = system.to_dense()?;
    let mut augmented = DMatrix::zeros(dense.nrows() + pins.len(), width);
    augmented.rows_mut(0, dense.nrows()).copy_from(&dense);
    let mut rhs = system.rhs.clone();
    for (p, &(idx, value)) in pins.iter().enumerate() {
        augmented[(dense.nrows() + p, idx - 1)] = 1.0;
        rhs.push(value);
    }
    min_norm_dense(&augmented, &rhs)
}

/// A system that can be probed with constructed quantised input histories.
///
/// `respond` returns the output at the end of the given history (oldest
/// first), or `None` when that history cannot be answered — e.g. a recorded
/// dictionary that never saw it.
pub trait BlackBoxSystem {
    fn respond(&mut self, history: &[usize]) -> Option<f64>;
}

/// A discrete Urysohn operator exposed as a black box.
pub struct ModelSystem<'a> {
    model: &'a UrysohnModel,
    interpolated: bool,
}

impl<'a> ModelSystem<'a> {
    pub fn quantized(model: &'a UrysohnModel) -> Self {
        Self {
            model,
            interpolated: false,
        }
    }

    pub fn interpolated(model: &'a UrysohnModel) -> Self {
        Self {
            model,
            interpolated: true,
        }
    }
}

impl BlackBoxSystem for ModelSystem<'_> {
    fn respond(&mut self, history: &[usize]) -> Option<f64> {
        let m = self.model.rows();
        if history.len() < m {
            return None;
        }
        let window = &history[history.len() - m..];
        if self.interpolated {
            let xs: Vec<f64> = window
                .iter()
                .map(|&k| self.model.level_value(k))
                .collect::<Result<_>>()
                .ok()?;
            self.model.window_output_interpolated(&xs).ok()
        } else {
            self.model.window_output(window).ok()
        }
    }
}

/// A finite impulse response system: linear in the input, finite memory.
pub struct FirSystem {
    pub taps: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    pub levels: usize,
}

impl FirSystem {
    fn level_value(&self, k: usize) -> f64 {
        self.x_min + (k - 1) as f64 * (self.x_max - self.x_min) / (self.levels - 1) as f64
    }
}

impl BlackBoxSystem for FirSystem {
    fn respond(&mut self, history: &[usize]) -> Option<f64> {
        if history.len() < self.taps.len() {
            return None;
        }
        let last = history.len() - 1;
        Some(
            self.taps
                .iter()
                .enumerate()
                .map(|(j, &h)| h * self.level_value(history[last - j]))
                .sum(),
        )
    }
}

/// First-order output feedback, `y_i = feedback * y_{i-1} + x_i`, started
/// from rest at the beginning of each queried history. Its memory is
/// unbounded, so it is not describable by a finite operator.
pub struct FeedbackSystem {
    pub feedback: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub levels: usize,
}

impl BlackBoxSystem for FeedbackSystem {
    fn respond(&mut self, history: &[usize]) -> Option<f64> {
        if history.is_empty() {
            return None;
        }
        let mut y = 0.0;
        for &k in history {
            let x =
                self.x_min + (k - 1) as f64 * (self.x_max - self.x_min) / (self.levels - 1) as f64;
            y = self.feedback * y + x;
        }
        Some(y)
    }
}

/// A dictionary over a recorded run: histories are answered only when they
/// occur in the record with exact level equality.
pub struct RecordedDictionary {
    levels: Vec<usize>,
    outputs: Vec<f64>,
    index: HashMap<usize, HashMap<Vec<usize>, f64>>,
}

impl RecordedDictionary {
    pub fn new(levels: Vec<usize>, outputs: Vec<f64>) -> Result<Self> {
        if levels.len() != outputs.len() {
            return Err(Error::LengthMismatch {
                left: levels.len(),
                right: outputs.len(),
            });
        }
        Ok(Self {
            levels,
            outputs,
            index: HashMap::new(),
        })
    }

    fn index_for(&mut self, len: usize) -> &HashMap<Vec<usize>, f64> {
        self.index.entry(len).or_insert_with(|| {
            let mut map = HashMap::new();
            if len >= 1 && self.levels.len() >= len {
                for i in (len - 1)..self.levels.len() {
                    map.entry(self.levels[i + 1 - len..=i].to_vec())
                        .or_insert(self.outputs[i]);
                }
            }
            map
        })
    }
}

impl BlackBoxSystem for RecordedDictionary {
    fn respond(&mut self, history: &[usize]) -> Option<f64> {
        self.index_for(history.len()).get(history).copied()
    }
}

/// Outcome of the describability probe: finite memory plus impulse
/// additivity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescribabilityReport {
    pub memory_ok: bool,
    pub max_memory_violation: f64,
    pub max_additivity_violation: f64,
    pub tolerance: f64,
    pub verdict: bool,
    /// Probe coverage: how many of the constructed queries the system
    /// answered. A simulator answers everything; recorded data may not.
    pub memory_checked: usize,
    pub memory_total: usize,
    pub additivity_checked: usize,
    pub additivity_total: usize,
}

/// Probe a black-box system for describability by an `memory x levels`
/// operator.
///
/// Memory: responses to histories that agree on the last `memory` inputs
/// must agree. Additivity: the response to two separated single-level
/// impulses must equal the sum of the individual responses minus the
/// baseline. Both are checked over constructed probe sets; queries the
/// system cannot answer are skipped and reported in the coverage counts.
pub fn check_describability(
    system: &mut dyn BlackBoxSystem,
    memory: usize,
    levels: usize,
    tolerance: f64,
) -> Result<DescribabilityReport> {
    if memory == 0 || levels < 2 {
        return Err(Error::InvalidConfig(
            "need memory >= 1 and at least 2 levels".into(),
        ));
    }

    // Part (a): finite memory. Prefix the same window with different
    // histories and compare responses.
    let mut bases: Vec<Vec<usize>> = vec![
        vec![1; memory],
        vec![levels; memory],
        (0..memory).map(|i| 1 + i % levels).collect(),
        (0..memory)
            .map(|i| if i % 2 == 0 { 1 } else { levels })
            .collect(),
    ];
    bases.dedup();
    let mut memory_checked = 0;
    let mut memory_total = 0;
    let mut max_memory_violation = 0.0f64;
    for base in &bases {
        for prefix_len in [1usize, 2] {
            memory_total += 1;
            let mut h1 = vec![1; prefix_len];
            let mut h2 = vec![levels; prefix_len];
            h1.extend_from_slice(base);
            h2.extend_from_slice(base);
            let (Some(y1), Some(y2)) = (system.respond(&h1), system.respond(&h2)) else {
                continue;
            };
            memory_checked += 1;
            max_memory_violation = max_memory_violation.max((y1 - y2).abs());
        }
    }

    // Part (b): impulse additivity over all position pairs and level pairs.
    let rest = vec![1usize; memory];
    let y_rest = system.respond(&rest);
    let mut additivity_checked = 0;
    let mut additivity_total = 0;
    let mut max_additivity_violation = 0.0f64;
    for p in 1..=memory {
        for q in (p + 1)..=memory {
            for kp in 2..=levels {
                for kq in 2..=levels {
                    additivity_total += 1;
                    let Some(y0) = y_rest else { continue };
                    let mut wp = rest.clone();
                    wp[p - 1] = kp;
                    let mut wq = rest.clone();
                    wq[q - 1] = kq;
                    let mut wpq = rest.clone();
                    wpq[p - 1] = kp;
                    wpq[q - 1] = kq;
                    let (Some(yp), Some(yq), Some(ypq)) = (
                        system.respond(&wp),
                        system.respond(&wq),
                        system.respond(&wpq),
                    ) else {
                        continue;
                    };
                    additivity_checked += 1;
                    max_additivity_violation =
                        max_additivity_violation.max((y0 + ypq - yp - yq).abs());
                }
            }
        }
    }

    if memory_checked == 0 {
        return Err(Error::InsufficientQueries(
            "no memory probe could be answered".into(),
        ));
    }
    if additivity_total > 0 && additivity_checked == 0 {
        return Err(Error::InsufficientQueries(
            "no additivity probe could be answered".into(),
        ));
    }

    let memory_ok = max_memory_violation <= tolerance;
    Ok(DescribabilityReport {
        memory_ok,
        max_memory_violation,
        max_additivity_violation,
        tolerance,
        verdict: memory_ok && max_additivity_violation <= tolerance,
        memory_checked,
        memory_total,
        additivity_checked,
        additivity_total,
    })
}

/// Nested model family membership, judged from the kernel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureClass {
    Linear,
    Hammerstein,
    GeneralUrysohn,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub class: StructureClass,
    /// Ratio of the second to the largest singular value; a rank-1 kernel
    /// (Hammerstein) drives this to zero.
    pub rank1_ratio: f64,
    /// Worst per-row deviation from an affine-in-level profile.
    pub max_affine_residual: f64,
    pub singular_values: Vec<f64>,
    pub tolerance: f64,
}

/// Classify the kernel as linear, Hammerstein or general.
///
/// A Hammerstein kernel is an outer product of a lag profile and a static
/// nonlinearity, so its matrix has numerical rank 1. It is moreover linear
/// when every row is affine in the level index. Classification applies to
/// the matrix as given — for identified operators that is the minimum-norm
/// representative.
pub fn classify_structure(model: &UrysohnModel, tolerance: f64) -> StructureReport {
    let rows = model.rows();
    let cols = model.cols();
    let dense = DMatrix::from_row_slice(rows, cols, model.values());
    let svd = dense.svd(false, false);
    let mut singular_values: Vec<f64> = svd.singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let s0 = singular_values.first().copied().unwrap_or(0.0);
    let s1 = singular_values.get(1).copied().unwrap_or(0.0);
    let rank1_ratio = if s0 > 0.0 { s1 / s0 } else { 0.0 };

    // Least-squares affine fit per row over the level index.
    let n = cols as f64;
    let k_mean = (n + 1.0) / 2.0;
    let k_var: f64 = (1..=cols)
        .map(|k| {
            let d = k as f64 - k_mean;
            d * d
        })
        .sum();
    let mut max_affine_residual = 0.0f64;
    for r in 0..rows {
        let row_mean: f64 = (1..=cols).map(|k| model.entry(r, k)).sum::<f64>() / n;
        let cov: f64 = (1..=cols)
            .map(|k| (k as f64 - k_mean) * (model.entry(r, k) - row_mean))
            .sum();
        let slope = if k_var > 0.0 { cov / k_var } else { 0.0 };
        for k in 1..=cols {
            let fit = row_mean + slope * (k as f64 - k_mean);
            max_affine_residual = max_affine_residual.max((model.entry(r, k) - fit).abs());
        }
    }

    let rank_one = rank1_ratio <= tolerance;
    let affine = max_affine_residual <= tolerance;
    let class = if rank_one && affine {
        StructureClass::Linear
    } else if rank_one {
        StructureClass::Hammerstein
    } else {
        StructureClass::GeneralUrysohn
    };
    StructureReport {
        class,
        rank1_ratio,
        max_affine_residual,
        singular_values,
        tolerance,
    }
}
