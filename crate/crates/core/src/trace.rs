//! Radial traces: monotone-in-r samples (r, value) of a functional, the
//! common currency of every monotonicity check, plus their CSV form.

use crate::error::{Error, Result};
use crate::geom::Point;

/// A functional sampled along strictly decreasing radii around a center.
/// `slack` is the declared discretization slack delta(h) for monotonicity
/// statements about this trace.
#[derive(Debug, Clone)]
pub struct RadialTrace {
    pub center: Point,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: String,
    pub slack: f64,
}

impl RadialTrace {
    pub fn new(
        center: Point,
        radii: Vec<f64>,
        values: Vec<f64>,
        kind: &str,
        slack: f64,
    ) -> Result<RadialTrace> {
        if radii.len() != values.len() || radii.is_empty() {
            return Err(Error::validation("trace radii/values length mismatch"));
        }
        for w in radii.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::validation(
                    "trace radii must be strictly decreasing",
                ));
            }
        }
        if radii.iter().any(|r| *r <= 0.0) {
            return Err(Error::validation("trace radii must be positive"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate(format!(
                "non-finite value in {kind} trace"
            )));
        }
        Ok(RadialTrace {
            center,
            radii,
            values,
            kind: kind.to_string(),
            slack,
        })
    }

    /// Largest violation of "nondecreasing in r" across adjacent samples
    /// (radii are stored decreasing, so values should not increase as the
    /// index grows for a monotone functional).
    pub fn max_monotonicity_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.values.len() - 1 {
            // radii[i] > radii[i+1]; monotone means values[i] >= values[i+1]
            worst = worst.max(self.values[i + 1] - self.values[i]);
        }
        worst.max(0.0)
    }

    /// Pair (radius midpoint, dV/dr) by finite differences along the trace.
    pub fn derivative(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.radii.len().saturating_sub(1));
        for i in 0..self.radii.len() - 1 {
            let dr = self.radii[i] - self.radii[i + 1];
            let dv = self.values[i] - self.values[i + 1];
            out.push((0.5 * (self.radii[i] + self.radii[i + 1]), dv / dr));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,center,r,value,slack\n");
        let center = format_point(&self.center);
        for (r, v) in self.radii.iter().zip(&self.values) {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                self.kind,
                center,
                fmt_f64(*r),
                fmt_f64(*v),
                fmt_f64(self.slack)
            ));
        }
        s
    }
}

/// 17-significant-digit float formatting used by every CSV emitter.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Coordinates joined by ';' so a point fits one CSV field.
pub fn format_point(p: &[f64]) -> String {
    p.iter()
        .map(|c| fmt_f64(*c))
        .collect::<Vec<_>>()
        .join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_validation() {
        assert!(RadialTrace::new(vec![0.0], vec![0.4, 0.2], vec![1.0, 2.0], "J", 0.0).is_ok());
        assert!(RadialTrace::new(vec![0.0], vec![0.2, 0.4], vec![1.0, 2.0], "J", 0.0).is_err());
        assert!(
            RadialTrace::new(vec![0.0], vec![0.4, 0.2], vec![1.0, f64::NAN], "J", 0.0).is_err()
        );
    }

    #[test]
    fn monotonicity_violation_measures_increase_toward_zero() {
        // radii decreasing; a value that grows as r shrinks is a violation
        let t =
            RadialTrace::new(vec![0.0], vec![0.4, 0.2, 0.1], vec![2.0, 1.9, 2.05], "J", 0.0)
                .unwrap();
        assert!((t.max_monotonicity_violation() - 0.15).abs() < 1e-12);
    }

    #[test]
    fn csv_has_17_digit_floats() {
        let t = RadialTrace::new(vec![0.0, 0.0], vec![0.5], vec![1.5], "N", 1e-3).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("kind,center,r,value,slack\n"));
        assert!(csv.contains("5.0000000000000000e-1"));
        assert!(csv.contains("1.5000000000000000e0"));
    }
}
