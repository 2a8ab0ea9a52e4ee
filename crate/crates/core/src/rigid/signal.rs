use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Control inputs `w(t)` in `R^m`: per channel a cubic Hermite spline on a
/// uniform knot grid over `[0, T]` with `w(0) = 0` built in.
///
/// Coefficient layout per channel (length `2K + 1` for `K` intervals):
/// `[w'(t_0), w(t_1), w'(t_1), ..., w(t_K), w'(t_K)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    channels: usize,
    intervals: usize,
    horizon: f64,
    coefficients: Vec<f64>,
}

impl ControlSignal {
    pub fn new(
        channels: usize,
        intervals: usize,
        horizon: f64,
        coefficients: Vec<f64>,
    ) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidInput(
                "control spline needs at least one interval".into(),
            ));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "control horizon must be positive, got {horizon}"
            )));
        }
        let per = 2 * intervals + 1;
        if coefficients.len() != channels * per {
            return Err(Error::InvalidInput(format!(
                "expected {} control coefficients, got {}",
                channels * per,
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite control coefficient".into()));
        }
        Ok(ControlSignal {
            channels,
            intervals,
            horizon,
            coefficients,
        })
    }

    pub fn zero(channels: usize, intervals: usize, horizon: f64) -> Result<Self> {
        ControlSignal::new(
            channels,
            intervals,
            horizon,
            vec![0.0; channels * (2 * intervals + 1)],
        )
    }

    /// Coefficients per channel for `intervals` knot intervals.
    pub fn coefficients_per_channel(intervals: usize) -> usize {
        2 * intervals + 1
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn with_coefficients(&self, coefficients: Vec<f64>) -> Result<Self> {
        ControlSignal::new(self.channels, self.intervals, self.horizon, coefficients)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| *c == 0.0)
    }

    /// `(w(t), w'(t))`; times outside `[0, T]` are clamped.
    pub fn eval(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let mut w = vec![0.0; self.channels];
        let mut dw = vec![0.0; self.channels];
        self.eval_into(t, &mut w, &mut dw);
        (w, dw)
    }

    pub fn eval_into(&self, t: f64, w: &mut [f64], dw: &mut [f64]) {
        if self.channels == 0 {
            return;
        }
        let h = self.horizon / self.intervals as f64;
        let t = t.clamp(0.0, self.horizon);
        let i = ((t / h).floor() as usize).min(self.intervals - 1);
        let s = (t - i as f64 * h) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = -6.0 * s2 + 6.0 * s;
        let d11 = 3.0 * s2 - 2.0 * s;
        let per = 2 * self.intervals + 1;
        for c in 0..self.channels {
            let coef = &self.coefficients[c * per..(c + 1) * per];
            let (v0, d0) = knot(coef, i);
            let (v1, d1) = knot(coef, i + 1);
            w[c] = h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1;
            dw[c] = (d00 * v0 + d01 * v1) / h + d10 * d0 + d11 * d1;
        }
    }

    /// The signal `t -> value_factor * w(t / time_factor)` on the horizon
    /// `time_factor * T`.
    pub fn rescaled(&self, value_factor: f64, time_factor: f64) -> Result<Self> {
        if !(time_factor > 0.0) {
            return Err(Error::InvalidInput(format!(
                "time factor must be positive, got {time_factor}"
            )));
        }
        let per = 2 * self.intervals + 1;
        let mut coefficients = self.coefficients.clone();
        for c in 0..self.channels {
            let coef = &mut coefficients[c * per..(c + 1) * per];
            for (k, x) in coef.iter_mut().enumerate() {
                // even slots are derivatives, odd slots are values
                if k % 2 == 0 {
                    *x *= value_factor / time_factor;
                } else {
                    *x *= value_factor;
                }
            }
        }
        ControlSignal::new(
            self.channels,
            self.intervals,
            self.horizon * time_factor,
            coefficients,
        )
    }

    /// Samples `(t, w, w')` on a uniform grid of `samples + 1` points.
    pub fn to_csv(&self, samples: usize) -> String {
        let mut out = String::from("t");
        for c in 0..self.channels {
            out.push_str(&format!(",w{c}"));
        }
        for c in 0..self.channels {
            out.push_str(&format!(",dw{c}"));
        }
        out.push('\n');
        for k in 0..=samples {
            let t = self.horizon * k as f64 / samples.max(1) as f64;
            let (w, dw) = self.eval(t);
            out.push_str(&crate::io::fmt(t));
            for x in w.iter().chain(dw.iter()) {
                out.push(',');
                out.push_str(&crate::io::fmt(*x));
            }
            out.push('\n');
        }
        out
    }
}

/// `(value, derivative)` at knot `k` from one channel's coefficients.
fn knot(coef: &[f64], k: usize) -> (f64, f64) {
    if k == 0 {
        (0.0, coef[0])
    } else {
        (coef[2 * k - 1], coef[2 * k])
    }
}
