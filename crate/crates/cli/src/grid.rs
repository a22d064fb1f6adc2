use std::fmt;
use std::str::FromStr;

use serde::Serialize;

/// `start:stop:step` with `0 < start ≤ stop < 1` and `step > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { start: 0.05, stop: 0.95, step: 0.05 }
    }
}

impl GridSpec {
    /// Points `start + i·step` up to `stop`, with a relative slack of
    /// `1e-9·step` so that decimal steps hit their end point.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| {
                let x = self.start + i as f64 * self.step;
                // trim representation noise such as 0.15000000000000002
                (x * 1e12).round() / 1e12
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(format!("grid `{s}` must look like start:stop:step"));
        };
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("grid value `{t}` is not a number"));
        let g = GridSpec { start: num(a)?, stop: num(b)?, step: num(c)? };
        if !(g.start > 0.0 && g.start <= g.stop && g.stop < 1.0) {
            return Err(format!("grid needs 0 < start <= stop < 1, got {s}"));
        }
        if !(g.step > 0.0 && g.step.is_finite()) {
            return Err(format!("grid step must be positive, got {}", g.step));
        }
        Ok(g)
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.step)
    }
}
