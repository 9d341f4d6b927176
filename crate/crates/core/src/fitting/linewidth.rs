use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{DressedParts, FitModel, FitResult, BASELINE, D, EX, RABI_RF};

const REFINED_POINTS: usize = 20_001;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinewidthEstimate {
    pub center: f64,
    /// Full width at half depth; `None` when the dip is not resolved.
    pub fwhm: Option<f64>,
    /// Depth relative to the baseline.
    pub contrast: f64,
    pub reason: Option<String>,
}

/// Per-dip widths in frequency order. Lorentzian widths are read off the
/// parameters; dressed dips are measured on the fitted curve.
pub fn extract_linewidth(result: &FitResult, model: &FitModel) -> Result<Vec<LinewidthEstimate>> {
    if result.model.family() != model.family() || result.params.len() != model.parameter_count() {
        return Err(Error::ModelMismatch(format!(
            "result is {} with {} parameters, model is {} with {}",
            result.model.family(),
            result.params.len(),
            model.family(),
            model.parameter_count()
        )));
    }
    let p = &result.params;
    match model {
        FitModel::MultiLorentzian { .. } => {
            let mut out: Vec<LinewidthEstimate> = p[1..]
                .chunks_exact(3)
                .map(|c| LinewidthEstimate {
                    center: c[0],
                    fwhm: Some(c[1]),
                    contrast: c[2] / p[0],
                    reason: None,
                })
                .collect();
            out.sort_by(|a, b| a.center.total_cmp(&b.center));
            Ok(out)
        }
        FitModel::DressedDip(m) => {
            let parts = DressedParts::new(m, p);
            let split = ((2.0 * p[EX] - m.omega_rf).powi(2) + p[RABI_RF].powi(2)).sqrt();
            let mut predicted = vec![p[D] + 0.5 * (m.omega_rf - split), p[D] + 0.5 * (m.omega_rf + split)];
            if m.dark_branch {
                predicted.extend([p[D] - 0.5 * (m.omega_rf + split), p[D] - 0.5 * (m.omega_rf - split)]);
            }
            predicted.sort_by(f64::total_cmp);
            Ok(measure_dips(|nu| parts.value(nu), p[BASELINE], &predicted, result.span))
        }
    }
}

fn measure_dips(
    curve: impl Fn(f64) -> f64,
    baseline: f64,
    predicted: &[f64],
    span: (f64, f64),
) -> Vec<LinewidthEstimate> {
    let (lo, hi) = span;
    let step = (hi - lo) / (REFINED_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..REFINED_POINTS).map(|i| lo + step * i as f64).collect();
    let s: Vec<f64> = grid.iter().map(|&nu| curve(nu)).collect();

    let minima: Vec<Option<usize>> = predicted
        .iter()
        .map(|&c| {
            if c < lo || c > hi {
                return None;
            }
            let mut i = (((c - lo) / step).round() as usize).min(REFINED_POINTS - 1);
            loop {
                if i > 0 && s[i - 1] < s[i] {
                    i -= 1;
                } else if i + 1 < s.len() && s[i + 1] < s[i] {
                    i += 1;
                } else {
                    break;
                }
            }
            Some(i)
        })
        .collect();

    let bisect = |mut a: f64, mut b: f64, level: f64| {
        // curve(a) < level ≤ curve(b)
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if curve(m) < level {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };

    predicted
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let unresolved = |center: f64, contrast: f64, why: String| LinewidthEstimate {
                center,
                fwhm: None,
                contrast,
                reason: Some(why),
            };
            let Some(i) = minima[k] else {
                return unresolved(c, 0.0, "unresolved: predicted dip lies outside the grid".into());
            };
            let contrast = (baseline - s[i]) / baseline;
            if minima.iter().enumerate().any(|(j, m)| j != k && *m == Some(i)) {
                return unresolved(grid[i], contrast, "unresolved: dip merges with a neighbour".into());
            }
            if !(baseline > s[i]) {
                return unresolved(grid[i], contrast, "unresolved: no depth below baseline".into());
            }
            let level = s[i] + 0.5 * (baseline - s[i]);
            let walk = |dir: isize| -> std::result::Result<f64, String> {
                let mut j = i as isize;
                loop {
                    let next = j + dir;
                    if next < 0 || next >= s.len() as isize {
                        return Err("unresolved: half-depth crossing outside the grid".into());
                    }
                    let (jn, ju) = (next as usize, j as usize);
                    if s[jn] >= level {
                        return Ok(bisect(grid[ju], grid[jn], level));
                    }
                    if s[jn] < s[ju] {
                        return Err("unresolved: no half-depth crossing before the next dip".into());
                    }
                    j = next;
                }
            };
            match (walk(-1), walk(1)) {
                (Ok(l), Ok(r)) => LinewidthEstimate {
                    center: grid[i],
                    fwhm: Some(r - l),
                    contrast,
                    reason: None,
                },
                (Err(e), _) | (_, Err(e)) => unresolved(grid[i], contrast, e),
            }
        })
        .collect()
}
