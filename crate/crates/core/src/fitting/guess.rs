//! Starting values from smoothed local-minimum detection.

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

use super::{
    DressedDipModel, FitModel, ALPHA, BASELINE, D, EX, GAMMA_B, GAMMA_D, RABI_MW, RABI_MW_Y, RABI_RF, SIGMA_EX,
};

const MIN_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectedDip {
    pub center: f64,
    pub width: f64,
    /// Baseline minus the smoothed minimum.
    pub depth: f64,
    pub prominence: f64,
}

fn smooth(y: &[f64]) -> Vec<f64> {
    let half = if y.len() >= 500 { 2 } else { 1 };
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(y.len() - 1);
            y[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect()
}

fn upper_quartile(y: &[f64]) -> f64 {
    let mut v = y.to_vec();
    v.sort_by(f64::total_cmp);
    v[(3 * (v.len() - 1)) / 4]
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// Robust point noise from second differences.
fn noise_level(y: &[f64]) -> f64 {
    let d2: Vec<f64> = y.windows(3).map(|w| (w[0] - 2.0 * w[1] + w[2]).abs()).collect();
    median(d2) / (0.6745 * 6f64.sqrt())
}

fn prominence(s: &[f64], i: usize) -> f64 {
    let mut left = s[i];
    for j in (0..i).rev() {
        if s[j] < s[i] {
            break;
        }
        left = left.max(s[j]);
    }
    let mut right = s[i];
    for &v in &s[i + 1..] {
        if v < s[i] {
            break;
        }
        right = right.max(v);
    }
    left.min(right) - s[i]
}

fn half_depth_width(f: &[f64], s: &[f64], i: usize, baseline: f64) -> f64 {
    let level = s[i] + 0.5 * (baseline - s[i]);
    let cross = |j: usize, k: usize| f[j] + (level - s[j]) / (s[k] - s[j]) * (f[k] - f[j]);
    let mut left = None;
    for j in (0..i).rev() {
        if s[j] >= level {
            left = Some(cross(j, j + 1));
            break;
        }
    }
    let mut right = None;
    for (k, &v) in s.iter().enumerate().skip(i + 1) {
        if v >= level {
            right = Some(cross(k, k - 1));
            break;
        }
    }
    let dx = (f[f.len() - 1] - f[0]) / (f.len() - 1) as f64;
    match (left, right) {
        (Some(l), Some(r)) => r - l,
        (Some(l), None) => 2.0 * (f[i] - l),
        (None, Some(r)) => 2.0 * (r - f[i]),
        (None, None) => 3.0 * dx,
    }
    .max(2.0 * dx)
}

/// The `count` most prominent dips, ordered by frequency.
pub fn detect_dips(spec: &Spectrum, count: usize) -> Result<Vec<DetectedDip>> {
    if spec.len() < MIN_POINTS {
        return Err(Error::param("spectrum", format!("needs at least {MIN_POINTS} points")));
    }
    let f = &spec.frequencies;
    let s = smooth(&spec.signal);
    let baseline = upper_quartile(&spec.signal);
    let noise = noise_level(&spec.signal);
    let global_depth = baseline - s.iter().cloned().fold(f64::INFINITY, f64::min);
    let threshold = (5.0 * noise).max(0.02 * global_depth).max(1e-12 * baseline.abs());

    let mut found: Vec<(usize, f64)> = Vec::new();
    let mut i = 1;
    while i + 1 < s.len() {
        if s[i] < s[i - 1] {
            // step over plateaus
            let mut j = i;
            while j + 1 < s.len() && s[j + 1] == s[i] {
                j += 1;
            }
            if j + 1 < s.len() && s[j + 1] > s[i] {
                let mid = (i + j) / 2;
                let p = prominence(&s, mid);
                if p > threshold {
                    found.push((mid, p));
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    if found.len() < count {
        return Err(Error::PeakDetection {
            found: found.len(),
            requested: count,
        });
    }
    found.sort_by(|a, b| b.1.total_cmp(&a.1));
    found.truncate(count);
    found.sort_by_key(|&(i, _)| i);
    Ok(found
        .into_iter()
        .map(|(i, p)| DetectedDip {
            center: f[i],
            width: half_depth_width(f, &s, i, baseline),
            depth: baseline - s[i],
            prominence: p,
        })
        .collect())
}

/// Heuristic starting vector in the model's parameter layout.
pub fn initial_guess(spec: &Spectrum, model: &FitModel) -> Result<Vec<f64>> {
    model.check()?;
    let dips = match (detect_dips(spec, model.peak_count()), model) {
        // Unresolved doublets: start from whatever dips are visible.
        (Err(Error::PeakDetection { found, .. }), FitModel::DressedDip(_)) if found > 0 => detect_dips(spec, found)?,
        (r, _) => r?,
    };
    let baseline = upper_quartile(&spec.signal);
    match model {
        FitModel::MultiLorentzian { .. } => {
            let mut p = vec![baseline];
            for dip in &dips {
                p.extend([dip.center, dip.width, dip.depth.max(1e-12)]);
            }
            Ok(p)
        }
        FitModel::DressedDip(m) => Ok(dressed_guess(m, &dips, baseline)),
    }
}

fn dressed_guess(m: &DressedDipModel, dips: &[DetectedDip], baseline: f64) -> Vec<f64> {
    let c: Vec<f64> = dips.iter().map(|d| d.center).collect();
    let (d, split) = if c.len() == 4 {
        // Either the two pairs are separate or they interleave; pick the
        // pairing whose implied RF frequency is closer to the known one.
        let separate = ((c[2] + c[3] - c[0] - c[1]) / 2.0, (c[1] - c[0] + c[3] - c[2]) / 2.0);
        let interleaved = ((c[1] + c[3] - c[0] - c[2]) / 2.0, (c[2] - c[0] + c[3] - c[1]) / 2.0);
        let mean = c.iter().sum::<f64>() / 4.0;
        if (separate.0 - m.omega_rf).abs() <= (interleaved.0 - m.omega_rf).abs() {
            (mean, separate.1)
        } else {
            (mean, interleaved.1)
        }
    } else if c.len() >= 2 {
        let last = c[c.len() - 1];
        (0.5 * (c[0] + last) - 0.5 * m.omega_rf, last - c[0])
    } else {
        (c[0] - 0.5 * m.omega_rf, 0.5 * dips[0].width)
    };
    let mut width = dips.iter().map(|d| d.width).sum::<f64>() / dips.len() as f64;
    if c.len() == 1 {
        width *= 0.5;
    }
    let depth = dips.iter().map(|d| d.depth).fold(0.0, f64::max).max(1e-9) / baseline.abs().max(1e-12);
    let gamma_b = 0.75 * width;
    let gamma_d = 0.25 * width;
    let lambda = (gamma_b + gamma_d) * (depth / (2.0 * m.alpha)).sqrt();

    let mut p = vec![0.0; 10];
    p[D] = d;
    p[EX] = 0.5 * m.omega_rf;
    p[RABI_RF] = split.max(1e-3);
    p[RABI_MW] = 2.0 * lambda;
    p[RABI_MW_Y] = if m.dark_branch { 2.0 * lambda } else { 0.0 };
    p[GAMMA_B] = gamma_b;
    p[GAMMA_D] = gamma_d;
    p[ALPHA] = m.alpha;
    p[SIGMA_EX] = m.sigma_ex;
    p[BASELINE] = baseline;
    if m.sigma_ex == 0.0 && !m.fixed.iter().any(|f| f == "sigma_ex") {
        p[SIGMA_EX] = 0.1 * width;
    }
    p
}

/// Restart `k` of a multi-start run; `k = 0` is the heuristic itself.
pub(super) fn perturbed(base: &[f64], model: &FitModel, k: usize) -> Vec<f64> {
    let mut p = base.to_vec();
    if k == 0 {
        return p;
    }
    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
    let step = k.div_ceil(2) as f64;
    match model {
        FitModel::MultiLorentzian { .. } => {
            for i in (2..p.len()).step_by(3) {
                p[i] *= 1.0 + 0.3 * sign * step / (1.0 + step);
            }
        }
        FitModel::DressedDip(_) => {
            // Trade RF Rabi splitting for detuning at a fixed dressed split.
            let split = p[RABI_RF];
            let delta = (0.3 * step).min(0.9) * split;
            p[EX] += 0.5 * sign * delta;
            p[RABI_RF] = (split * split - delta * delta).sqrt();
        }
    }
    p
}
