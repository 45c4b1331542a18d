//! Sampled fields over rectangular grids, with CSV and JSON output.

use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// `count` equally spaced samples from `start` to `stop` inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(name: &str, start: f64, stop: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument(format!("axis {name} has no samples")));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::InvalidArgument(format!("axis {name} has a non-finite range")));
        }
        Ok(Axis { name: name.to_string(), start, stop, count })
    }

    /// Axis over one period `[0, 1)` of the torus: `count` points `k/count`.
    pub fn periodic(name: &str, count: usize) -> Result<Self> {
        let stop = if count > 1 { (count - 1) as f64 / count as f64 } else { 0.0 };
        Axis::new(name, 0.0, stop, count)
    }

    pub fn value(&self, k: usize) -> f64 {
        if self.count == 1 {
            self.start
        } else {
            self.start + (self.stop - self.start) * k as f64 / (self.count - 1) as f64
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.value(k)).collect()
    }
}

/// Samples over the product of the axes, last axis varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub axes: Vec<Axis>,
    pub values: Vec<C64>,
    pub metadata: Map<String, Value>,
}

impl FieldGrid {
    pub fn len(axes: &[Axis]) -> usize {
        axes.iter().map(|a| a.count).product()
    }

    /// Coordinates of sample `index`.
    pub fn coordinates(axes: &[Axis], mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; axes.len()];
        for (k, axis) in axes.iter().enumerate().rev() {
            out[k] = axis.value(index % axis.count);
            index /= axis.count;
        }
        out
    }

    pub fn new(axes: Vec<Axis>, values: Vec<C64>) -> Result<Self> {
        let n = FieldGrid::len(&axes);
        if values.len() != n {
            return Err(Error::Dimension { expected: n, got: values.len() });
        }
        Ok(FieldGrid { axes, values, metadata: Map::new() })
    }

    pub fn with_metadata(mut self, key: &str, value: Value) -> Self {
        self.metadata.insert(key.to_string(), value);
        self
    }

    /// Largest `|value|` and its coordinates.
    pub fn max_abs(&self) -> (f64, Vec<f64>) {
        self.extreme(|a, b| a > b)
    }

    /// Smallest `|value|` and its coordinates.
    pub fn min_abs(&self) -> (f64, Vec<f64>) {
        self.extreme(|a, b| a < b)
    }

    fn extreme(&self, better: impl Fn(f64, f64) -> bool) -> (f64, Vec<f64>) {
        let mut best = 0;
        for (k, v) in self.values.iter().enumerate() {
            if better(v.norm(), self.values[best].norm()) {
                best = k;
            }
        }
        (self.values[best].norm(), FieldGrid::coordinates(&self.axes, best))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("# axes: ");
        let descr: Vec<String> = self
            .axes
            .iter()
            .map(|a| format!("{}={}:{}:{}", a.name, a.start, a.stop, a.count))
            .collect();
        s.push_str(&descr.join(","));
        s.push('\n');
        for a in &self.axes {
            s.push_str(&a.name);
            s.push(',');
        }
        s.push_str("re,im,abs\n");
        for (k, v) in self.values.iter().enumerate() {
            for x in FieldGrid::coordinates(&self.axes, k) {
                let _ = write!(s, "{x},");
            }
            let _ = writeln!(s, "{},{},{}", v.re, v.im, v.norm());
        }
        s
    }

    pub fn to_json(&self) -> Value {
        json!({
            "axes": self.axes,
            "re": self.values.iter().map(|v| v.re).collect::<Vec<_>>(),
            "im": self.values.iter().map(|v| v.im).collect::<Vec<_>>(),
            "abs": self.values.iter().map(|v| v.norm()).collect::<Vec<_>>(),
            "metadata": self.metadata,
        })
    }

    /// Reads a grid written by [`to_csv`](Self::to_csv).
    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::InvalidArgument(format!("malformed grid CSV: {m}"));
        let mut lines = text.lines();
        let head = lines.next().and_then(|l| l.strip_prefix("# axes: ")).ok_or_else(|| bad("axes line"))?;
        let mut axes = Vec::new();
        for part in head.split(',') {
            let (name, range) = part.split_once('=').ok_or_else(|| bad(part))?;
            let f: Vec<&str> = range.split(':').collect();
            if f.len() != 3 {
                return Err(bad(part));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(s));
            let count = f[2].parse::<usize>().map_err(|_| bad(f[2]))?;
            axes.push(Axis::new(name, num(f[0])?, num(f[1])?, count)?);
        }
        lines.next().ok_or_else(|| bad("header"))?;
        let k = axes.len();
        let mut values = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != k + 3 {
                return Err(bad(line));
            }
            let re = f[k].parse::<f64>().map_err(|_| bad(line))?;
            let im = f[k + 1].parse::<f64>().map_err(|_| bad(line))?;
            values.push(C64::new(re, im));
        }
        FieldGrid::new(axes, values)
    }
}
