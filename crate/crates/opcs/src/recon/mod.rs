//! Image reconstruction from bucket series.
//!
//! GI forms the second-order correlation ⟨S_B I⟩ − ⟨S_B⟩⟨I⟩; DGI replaces
//! S_B with the reference-normalized differential S_Δ = S_B −
//! (⟨S_B⟩/⟨S_R⟩) S_R; CI averages only the patterns whose buckets sit far
//! above (or below) the mean. TV_CS solves the compressed-sensing problem
//! in `tv`. Pattern values enter the estimators as displayed: +/-1 for
//! IDEAL_PM1 series, the 0/1 complementary-positive matrices for
//! COMPLEMENTARY_01 series.

pub mod operator;
pub mod tv;

use std::time::Instant;

use ndarray::Array2;

use crate::basis::{MeasurementMatrix, Pattern};
use crate::error::{Error, Result};
use crate::forward::{BucketSeries, MeasureMode};
use crate::recon::operator::DenseOperator;
pub use crate::recon::tv::{reconstruct_tv_operator, TvKind, TvSolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReconMethod {
    Gi,
    Dgi,
    CiPos,
    CiNeg,
    TvCs,
}

impl ReconMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ReconMethod::Gi => "GI",
            ReconMethod::Dgi => "DGI",
            ReconMethod::CiPos => "CI_POS",
            ReconMethod::CiNeg => "CI_NEG",
            ReconMethod::TvCs => "TV_CS",
        }
    }
}

/// A reconstruction plus its run metadata. GI/DGI/CI images are raw
/// correlation values (sign-unconstrained); use `normalized` for display.
#[derive(Debug, Clone)]
pub struct ReconResult {
    pub image: Array2<f64>,
    pub method: ReconMethod,
    pub m_used: usize,
    pub elapsed: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ReconResult {
    /// Min-max normalized copy of the image (all zeros when constant).
    pub fn normalized(&self) -> Array2<f64> {
        let lo = self.image.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.image.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            self.image.mapv(|v| (v - lo) / (hi - lo))
        } else {
            Array2::zeros(self.image.dim())
        }
    }
}

/// Subset rule for correspondence imaging.
#[derive(Debug, Clone, Copy)]
pub enum CiSelection {
    /// Take the ceil(fraction * M) largest (smallest) buckets, ties broken
    /// by lower index. Fraction must lie in (0, 0.5].
    TopBottomFraction { fraction: f64 },
    /// Take buckets at least k_sigma standard deviations above (below)
    /// the mean.
    MeanOffsetSigma { k_sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiPolarity {
    Positive,
    Negative,
}

fn check_series(patterns: &[Pattern], series: &BucketSeries) -> Result<()> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if patterns.len() != series.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} patterns vs {} measurements",
            patterns.len(),
            series.len()
        )));
    }
    Ok(())
}

#[inline]
fn displayed_value(v: i8, mode: MeasureMode) -> f64 {
    match mode {
        MeasureMode::IdealPm1 => f64::from(v),
        MeasureMode::Complementary01 => f64::from(v == 1),
    }
}

/// Weighted pattern average minus a rank-one correction:
/// out = (1/M) Σ w_k I_k − base · (1/M) Σ I_k, as one pass.
fn correlation_image(
    patterns: &[Pattern],
    weights: &[f64],
    base: f64,
    mode: MeasureMode,
) -> Array2<f64> {
    let side = patterns[0].side();
    let m = patterns.len() as f64;
    let mut acc = vec![0.0; side * side];
    let mut mean_pattern = vec![0.0; side * side];
    for (pat, &w) in patterns.iter().zip(weights) {
        for (i, &v) in pat.values().iter().enumerate() {
            let x = displayed_value(v, mode);
            acc[i] += w * x;
            mean_pattern[i] += x;
        }
    }
    let values: Vec<f64> = acc
        .iter()
        .zip(&mean_pattern)
        .map(|(a, p)| a / m - base * (p / m))
        .collect();
    Array2::from_shape_vec((side, side), values).expect("accumulator matches image shape")
}

/// Ghost imaging: ⟨S_B I⟩ − ⟨S_B⟩⟨I⟩ pixelwise.
pub fn reconstruct_gi(patterns: &[Pattern], series: &BucketSeries) -> Result<ReconResult> {
    check_series(patterns, series)?;
    let start = Instant::now();
    let mean_sb = series.s_b.iter().sum::<f64>() / series.len() as f64;
    let image = correlation_image(patterns, &series.s_b, mean_sb, series.mode);
    Ok(ReconResult {
        image,
        method: ReconMethod::Gi,
        m_used: series.len(),
        elapsed: start.elapsed().as_secs_f64(),
        iterations: 1,
        converged: true,
    })
}

/// Differential ghost imaging:
/// ⟨S_B I⟩ − (⟨S_B⟩/⟨S_R⟩)⟨S_R I⟩ pixelwise. Errors when ⟨S_R⟩ is
/// numerically zero (the +/-1 case; DGI is for 0/1 complementary mode).
pub fn reconstruct_dgi(patterns: &[Pattern], series: &BucketSeries) -> Result<ReconResult> {
    check_series(patterns, series)?;
    let start = Instant::now();
    let m = series.len() as f64;
    let mean_sb = series.s_b.iter().sum::<f64>() / m;
    let mean_sr = series.s_r.iter().sum::<f64>() / m;
    let scale = series.s_r.iter().map(|v| v.abs()).sum::<f64>() / m;
    if mean_sr.abs() <= 1e-12 * (1.0 + scale) {
        return Err(Error::DegenerateReference);
    }
    let gamma = mean_sb / mean_sr;
    // S_Δ weights; the correlation of S_Δ with I needs no mean correction
    // term beyond what is already inside S_Δ, but subtracting
    // ⟨S_Δ⟩⟨I⟩ = 0 keeps the expansion of the defining formula exact.
    let weights: Vec<f64> = series
        .s_b
        .iter()
        .zip(&series.s_r)
        .map(|(sb, sr)| sb - gamma * sr)
        .collect();
    let image = correlation_image(patterns, &weights, 0.0, series.mode);
    Ok(ReconResult {
        image,
        method: ReconMethod::Dgi,
        m_used: series.len(),
        elapsed: start.elapsed().as_secs_f64(),
        iterations: 1,
        converged: true,
    })
}

/// Indices of the CI subset under the rule, in selection order.
fn ci_select(series: &BucketSeries, sel: &CiSelection, pol: CiPolarity) -> Result<Vec<usize>> {
    let m = series.len();
    match *sel {
        CiSelection::TopBottomFraction { fraction } => {
            if !(fraction > 0.0 && fraction <= 0.5) {
                return Err(Error::InvalidArgument(format!(
                    "fraction {fraction} must lie in (0, 0.5]"
                )));
            }
            let k = (fraction * m as f64).ceil() as usize;
            let mut idx: Vec<usize> = (0..m).collect();
            // stable sort keeps lower indices first among ties
            match pol {
                CiPolarity::Positive => {
                    idx.sort_by(|&a, &b| series.s_b[b].total_cmp(&series.s_b[a]))
                }
                CiPolarity::Negative => {
                    idx.sort_by(|&a, &b| series.s_b[a].total_cmp(&series.s_b[b]))
                }
            }
            idx.truncate(k);
            Ok(idx)
        }
        CiSelection::MeanOffsetSigma { k_sigma } => {
            if k_sigma < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "k_sigma {k_sigma} must be non-negative"
                )));
            }
            let mean = series.s_b.iter().sum::<f64>() / m as f64;
            let var =
                series.s_b.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m as f64;
            let threshold = k_sigma * var.sqrt();
            let idx: Vec<usize> = (0..m)
                .filter(|&k| match pol {
                    CiPolarity::Positive => series.s_b[k] >= mean + threshold,
                    CiPolarity::Negative => series.s_b[k] <= mean - threshold,
                })
                .collect();
            if idx.is_empty() {
                return Err(Error::EmptySelection);
            }
            Ok(idx)
        }
    }
}

/// Correspondence imaging: mean of the selected subset's patterns minus
/// the mean of all patterns (centering for display).
pub fn reconstruct_ci(
    patterns: &[Pattern],
    series: &BucketSeries,
    sel: &CiSelection,
    pol: CiPolarity,
) -> Result<ReconResult> {
    check_series(patterns, series)?;
    let start = Instant::now();
    let selected = ci_select(series, sel, pol)?;
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    let side = patterns[0].side();
    let mut subset = vec![0.0; side * side];
    for &k in &selected {
        for (i, &v) in patterns[k].values().iter().enumerate() {
            subset[i] += displayed_value(v, series.mode);
        }
    }
    let mut all = vec![0.0; side * side];
    for pat in patterns {
        for (i, &v) in pat.values().iter().enumerate() {
            all[i] += displayed_value(v, series.mode);
        }
    }
    let ks = selected.len() as f64;
    let m = patterns.len() as f64;
    let values: Vec<f64> = subset.iter().zip(&all).map(|(s, a)| s / ks - a / m).collect();
    let image =
        Array2::from_shape_vec((side, side), values).expect("accumulator matches image shape");
    Ok(ReconResult {
        image,
        method: match pol {
            CiPolarity::Positive => ReconMethod::CiPos,
            CiPolarity::Negative => ReconMethod::CiNeg,
        },
        m_used: series.len(),
        elapsed: start.elapsed().as_secs_f64(),
        iterations: 1,
        converged: true,
    })
}

/// TV compressed sensing against an explicit measurement matrix.
pub fn reconstruct_tv(
    matrix: &MeasurementMatrix,
    b: &[f64],
    cfg: &TvSolverConfig,
) -> Result<ReconResult> {
    reconstruct_tv_operator(&DenseOperator::new(matrix), b, cfg)
}
