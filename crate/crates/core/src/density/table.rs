//! Tabulated cdf: cumulative quadrature on a quantile-adapted grid,
//! interpolated by monotone cubic Hermite segments.

use crate::error::Result;
use crate::quadrature::{cumulative_placed, Placement, QuadratureSpec};

pub(crate) const TABLE_NODES: usize = 2049;
const PILOT_NODES: usize = 8193;

#[derive(Debug, Clone)]
pub(crate) struct CdfTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
}

impl CdfTable {
    /// Tabulate `∫_lo^x pdf` on `[lo, hi]`, normalised so the last node is 1.
    pub fn build<F: Fn(f64) -> f64>(pdf: F, lo: f64, hi: f64, placement: Placement) -> Result<Self> {
        let spec = QuadratureSpec::tight();
        let cum = cumulative_placed(&pdf, lo, hi, &[], &spec, placement)?;
        let total = cum.total().value;

        // Pilot: uniform grid; nodes are then placed at equal steps of
        // G = ½·(uniform position) + ½·cdf, so half follow the mass.
        let pilot_x: Vec<f64> = (0..PILOT_NODES)
            .map(|i| lo + (hi - lo) * i as f64 / (PILOT_NODES - 1) as f64)
            .collect();
        let pilot_g: Vec<f64> = pilot_x
            .iter()
            .enumerate()
            .map(|(i, &x)| 0.5 * i as f64 / (PILOT_NODES - 1) as f64 + 0.5 * (cum.eval(x) / total).clamp(0.0, 1.0))
            .collect();
        let mut xs = Vec::with_capacity(TABLE_NODES);
        let mut j = 0;
        for k in 0..TABLE_NODES {
            let level = k as f64 / (TABLE_NODES - 1) as f64;
            if k == 0 {
                xs.push(lo);
                continue;
            }
            if k == TABLE_NODES - 1 {
                xs.push(hi);
                continue;
            }
            while j + 1 < PILOT_NODES - 1 && pilot_g[j + 1] < level {
                j += 1;
            }
            let (g0, g1) = (pilot_g[j], pilot_g[j + 1]);
            let w = if g1 > g0 {
                ((level - g0) / (g1 - g0)).clamp(0.0, 1.0)
            } else {
                0.0
            };
            xs.push(pilot_x[j] + w * (pilot_x[j + 1] - pilot_x[j]));
        }
        xs.dedup();

        let mut cdf: Vec<f64> = xs.iter().map(|&x| (cum.eval(x) / total).clamp(0.0, 1.0)).collect();
        for i in 1..cdf.len() {
            if cdf[i] < cdf[i - 1] {
                cdf[i] = cdf[i - 1];
            }
        }
        let n = cdf.len();
        cdf[0] = 0.0;
        cdf[n - 1] = 1.0;
        let pdf: Vec<f64> = xs.iter().map(|&x| pdf(x) / total).collect();
        Ok(Self { xs, cdf, pdf })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= self.xs[n - 1] {
            return 1.0;
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (c0, c1) = (self.cdf[i], self.cdf[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let delta = c1 - c0;
        if delta <= 0.0 {
            return c0;
        }
        let (mut m0, mut m1) = (self.pdf[i] * h, self.pdf[i + 1] * h);
        if !(m0.is_finite() && m1.is_finite()) {
            return c0 + t * delta;
        }
        // Fritsch–Carlson limiter, applied per segment.
        let (a, b) = (m0 / delta, m1 / delta);
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            m0 *= tau;
            m1 *= tau;
        }
        let t2 = t * t;
        let t3 = t2 * t;
        let v =
            (2.0 * t3 - 3.0 * t2 + 1.0) * c0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * c1 + (t3 - t2) * m1;
        v.clamp(c0, c1)
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.xs.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::erfc;

    #[test]
    fn reproduces_normal_cdf() {
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let t = CdfTable::build(pdf, -12.0, 12.0, Placement::default()).unwrap();
        assert!(t.len() > 2000);
        let mut worst = 0.0f64;
        for i in 0..=1000 {
            let x = -6.0 + 12.0 * i as f64 / 1000.0;
            let want = 0.5 * erfc(-x / 2f64.sqrt());
            worst = worst.max((t.eval(x) - want).abs());
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn monotone_on_fine_grid() {
        let pdf = |x: f64| {
            if x > 0.0 && x < 1.0 {
                1.0 / (std::f64::consts::PI * (x * (1.0 - x)).sqrt())
            } else {
                0.0
            }
        };
        let t = CdfTable::build(pdf, 0.0, 1.0, Placement::default()).unwrap();
        let mut prev = 0.0;
        for i in 0..=10_000 {
            let v = t.eval(i as f64 / 10_000.0);
            assert!(v >= prev);
            prev = v;
        }
        assert_eq!(t.eval(1.0), 1.0);
    }
}
