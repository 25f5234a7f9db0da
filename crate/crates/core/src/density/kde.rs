//! Gaussian kernel density estimates with an analytic score.

use crate::error::{Result, SteinError};
use crate::support::Support;

pub const MIN_SAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// `0.9·min(sd, IQR/1.34)·n^(−1/5)`.
    Silverman,
    Fixed(f64),
}

/// Kernel mixture, with boundary reflection at the finite ends of `support`.
#[derive(Debug, Clone)]
pub struct Kde {
    points: Vec<f64>,
    /// Sorted kernel centres, mirror images included.
    centres: Vec<f64>,
    h: f64,
    support: Support,
    median: f64,
    sd: f64,
}

pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 2 {
        return Err(SteinError::TooFewSamples { got: n, need: 2 });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(SteinError::DegenerateBandwidth);
    }
    Ok(0.9 * spread * (n as f64).powf(-0.2))
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

impl Kde {
    pub fn new(values: &[f64], bandwidth: Bandwidth, support: Support) -> Result<Self> {
        if values.len() < MIN_SAMPLES {
            return Err(SteinError::TooFewSamples {
                got: values.len(),
                need: MIN_SAMPLES,
            });
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(SteinError::InvalidParameter(format!("non-finite sample {v}")));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= support.a && **v <= support.b)) {
            return Err(SteinError::OutsideSupport {
                x: *v,
                support: support.to_string(),
            });
        }
        let h = match bandwidth {
            Bandwidth::Silverman => silverman_bandwidth(values)?,
            Bandwidth::Fixed(h) if h > 0.0 && h.is_finite() => h,
            Bandwidth::Fixed(h) => {
                return Err(SteinError::InvalidParameter(format!(
                    "bandwidth must be positive, got {h}"
                )))
            }
        };
        let mut points = values.to_vec();
        points.sort_by(f64::total_cmp);
        let n = points.len() as f64;
        let mean = points.iter().sum::<f64>() / n;
        let sd = (points.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        let median = quantile_sorted(&points, 0.5);
        let (a, b) = (support.a, support.b);
        let reach = 40.0 * h;
        let mut centres = points.clone();
        for &c in &points {
            if a.is_finite() && c - a < reach {
                centres.push(2.0 * a - c);
            }
            if b.is_finite() && b - c < reach {
                centres.push(2.0 * b - c);
            }
        }
        centres.sort_by(f64::total_cmp);
        Ok(Self {
            points,
            centres,
            h,
            support,
            median,
            sd: sd.max(h),
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.h
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub(crate) fn hint(&self) -> (f64, f64) {
        (self.median, self.sd)
    }

    /// Normalised log density (before restriction to the support) and the
    /// score, computed together with a log-sum-exp.
    ///
    /// Only kernels within `e^{−KEEP}` of the nearest one are summed; the rest
    /// change the result by less than `n·e^{−KEEP}` relative.
    pub(crate) fn log_pdf_and_score(&self, x: f64) -> (f64, f64) {
        const KEEP: f64 = 50.0;
        let h = self.h;
        let c = &self.centres;
        if x.is_nan() {
            return (f64::NAN, f64::NAN);
        }
        let i = c.partition_point(|v| *v < x);
        let mut d_min = f64::INFINITY;
        if i < c.len() {
            d_min = c[i] - x;
        }
        if i > 0 {
            d_min = d_min.min(x - c[i - 1]);
        }
        let max_e = -0.5 * (d_min / h) * (d_min / h);
        if !max_e.is_finite() {
            return (f64::NEG_INFINITY, 0.0);
        }
        let radius = (d_min * d_min + 2.0 * KEEP * h * h).sqrt();
        let lo = c.partition_point(|v| *v < x - radius);
        let hi = c.partition_point(|v| *v <= x + radius);
        let mut sum = 0.0;
        let mut dsum = 0.0;
        for &ck in &c[lo..hi] {
            let z = (x - ck) / h;
            let w = (-0.5 * z * z - max_e).exp();
            sum += w;
            dsum += w * (-z / h);
        }
        let n = self.points.len() as f64;
        let log_pdf = max_e + sum.ln() - (n * h * (2.0 * std::f64::consts::PI).sqrt()).ln();
        (log_pdf, dsum / sum)
    }
}
