//! Rectangular grids and complex vector-valued grid functions.
//!
//! Grid functions discretize the data the semigroup and resolvent act on.
//! Values are stored node-major (`values[node * n + component]`), nodes are
//! enumerated row-major with the last axis fastest.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};
use std::path::Path;

/// One uniformly spaced axis: `count` nodes from `min` to `max` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }
}

/// A rectangular grid over ℝ^d.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<AxisSpec>,
}

impl GridSpec {
    /// Same `[min, max]` range and node count on every axis.
    pub fn uniform(d: usize, min: f64, max: f64, count: usize) -> Result<Self> {
        GridSpec { axes: vec![AxisSpec { min, max, count }; d] }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.axes.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for ax in &self.axes {
            if ax.count < 2 || !(ax.max > ax.min) {
                return Err(Error::EmptyGrid);
            }
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn node_count(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    /// Coordinates of the flat node index (last axis fastest).
    pub fn node(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for k in (0..self.dim()).rev() {
            let ax = &self.axes[k];
            let i = rem % ax.count;
            rem /= ax.count;
            out[k] = ax.min + i as f64 * ax.spacing();
        }
    }

    /// Flat index from per-axis indices.
    pub fn flat_index(&self, multi: &[usize]) -> usize {
        let mut idx = 0usize;
        for (k, &i) in multi.iter().enumerate() {
            idx = idx * self.axes[k].count + i;
        }
        idx
    }

    /// Per-axis indices of a flat node index.
    pub fn multi_index(&self, flat: usize, out: &mut [usize]) {
        let mut rem = flat;
        for k in (0..self.dim()).rev() {
            out[k] = rem % self.axes[k].count;
            rem /= self.axes[k].count;
        }
    }

    /// Composite-trapezoid weight of a node (product of h, halved at ends).
    pub fn trapezoid_weight(&self, flat: usize) -> f64 {
        let mut rem = flat;
        let mut w = 1.0;
        for k in (0..self.dim()).rev() {
            let ax = &self.axes[k];
            let i = rem % ax.count;
            rem /= ax.count;
            let edge = i == 0 || i == ax.count - 1;
            w *= ax.spacing() * if edge { 0.5 } else { 1.0 };
        }
        w
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.axes).all(|(&xi, ax)| xi >= ax.min && xi <= ax.max)
    }

    /// Flat indices of nodes at least `layer_fraction` of each axis extent
    /// away from the boundary. `layer_fraction = 0.1` is the default layer
    /// excluded from norm comparisons.
    pub fn interior_nodes(&self, layer_fraction: f64) -> Vec<usize> {
        let d = self.dim();
        let mut multi = vec![0usize; d];
        let mut keep = Vec::new();
        'node: for flat in 0..self.node_count() {
            self.multi_index(flat, &mut multi);
            for k in 0..d {
                let ax = &self.axes[k];
                let margin = layer_fraction * (ax.max - ax.min);
                let xk = ax.min + multi[k] as f64 * ax.spacing();
                if xk < ax.min + margin - 1e-12 || xk > ax.max - margin + 1e-12 {
                    continue 'node;
                }
            }
            keep.push(flat);
        }
        keep
    }

    /// True when `x` is at least `2h` inside the grid on every axis.
    pub fn stencil_safe(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.axes).all(|(&xi, ax)| {
            let h2 = 2.0 * ax.spacing();
            xi >= ax.min + h2 - 1e-12 && xi <= ax.max - h2 + 1e-12
        })
    }
}

/// Complex ℂ^N-valued samples on a [`GridSpec`].
#[derive(Clone, Debug)]
pub struct GridFunction {
    pub spec: GridSpec,
    /// components per node
    pub n: usize,
    /// node-major storage: `values[node * n + component]`
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn zeros(spec: GridSpec, n: usize) -> Self {
        let len = spec.node_count() * n;
        GridFunction { spec, n, values: vec![Complex64::ZERO; len] }
    }

    /// Samples `f(x, out)` at every node.
    pub fn from_fn<F: FnMut(&[f64], &mut [Complex64])>(spec: GridSpec, n: usize, mut f: F) -> Self {
        let d = spec.dim();
        let count = spec.node_count();
        let mut values = vec![Complex64::ZERO; count * n];
        let mut x = vec![0.0; d];
        for node in 0..count {
            spec.node(node, &mut x);
            f(&x, &mut values[node * n..(node + 1) * n]);
        }
        GridFunction { spec, n, values }
    }

    /// Scalar (N = 1) sampling convenience.
    pub fn from_scalar_fn<F: FnMut(&[f64]) -> Complex64>(spec: GridSpec, mut f: F) -> Self {
        Self::from_fn(spec, 1, |x, out| out[0] = f(x))
    }

    pub fn value(&self, node: usize) -> &[Complex64] {
        &self.values[node * self.n..(node + 1) * self.n]
    }

    /// Multilinear interpolation at `x`; zero outside the grid.
    ///
    /// Returns `false` (and writes zeros) when `x` lies outside — callers
    /// surface that as a truncation-tail warning.
    pub fn interpolate(&self, x: &[f64], out: &mut [Complex64]) -> bool {
        let d = self.spec.dim();
        out.fill(Complex64::ZERO);
        if !self.spec.contains(x) {
            return false;
        }
        let mut base = [0usize; 8];
        let mut frac = [0.0f64; 8];
        debug_assert!(d <= 8);
        for k in 0..d {
            let ax = &self.spec.axes[k];
            let u = (x[k] - ax.min) / ax.spacing();
            let mut i = u.floor() as usize;
            if i >= ax.count - 1 {
                i = ax.count - 2;
            }
            base[k] = i;
            frac[k] = (u - i as f64).clamp(0.0, 1.0);
        }
        let mut multi = vec![0usize; d];
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            for k in 0..d {
                if corner & (1 << k) != 0 {
                    multi[k] = base[k] + 1;
                    w *= frac[k];
                } else {
                    multi[k] = base[k];
                    w *= 1.0 - frac[k];
                }
            }
            if w == 0.0 {
                continue;
            }
            let node = self.spec.flat_index(&multi);
            let vals = self.value(node);
            for c in 0..self.n {
                out[c] += w * vals[c];
            }
        }
        true
    }

    // -- CSV / JSON interface ------------------------------------------------

    /// Writes the grid spec as a JSON header file.
    pub fn write_spec_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, &self.spec)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    /// Writes one RFC-4180 row per node: coordinates, then re/im pairs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.spec.dim();
        let mut x = vec![0.0; d];
        for node in 0..self.spec.node_count() {
            self.spec.node(node, &mut x);
            let mut fields: Vec<String> = x.iter().map(|v| format!("{v:.17e}")).collect();
            for c in self.value(node) {
                fields.push(format!("{:.17e}", c.re));
                fields.push(format!("{:.17e}", c.im));
            }
            writeln!(w, "{}", fields.join(","))?;
        }
        Ok(())
    }

    /// Saves `<base>.json` (spec) and `<base>.csv` (values).
    pub fn save(&self, base: &Path) -> Result<()> {
        let json = std::fs::File::create(base.with_extension("json"))?;
        self.write_spec_json(std::io::BufWriter::new(json))?;
        let csv = std::fs::File::create(base.with_extension("csv"))?;
        self.write_csv(std::io::BufWriter::new(csv))?;
        Ok(())
    }

    /// Loads a grid function saved by [`GridFunction::save`].
    pub fn load(base: &Path) -> Result<Self> {
        let spec: GridSpec =
            serde_json::from_str(&std::fs::read_to_string(base.with_extension("json"))?)?;
        let spec = spec.validated()?;
        let file = std::fs::File::open(base.with_extension("csv"))?;
        Self::read_csv(spec, std::io::BufReader::new(file))
    }

    pub fn read_csv<R: BufRead>(spec: GridSpec, reader: R) -> Result<Self> {
        let d = spec.dim();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| Error::ConfigInvalid(format!("bad CSV field: {e}")))?);
        }
        if rows.len() != spec.node_count() {
            return Err(Error::ConfigInvalid(format!(
                "CSV has {} rows, grid has {} nodes",
                rows.len(),
                spec.node_count()
            )));
        }
        let width = rows[0].len();
        if width <= d || !(width - d).is_multiple_of(2) {
            return Err(Error::ConfigInvalid(format!("CSV row width {width} does not fit d = {d}")));
        }
        let n = (width - d) / 2;
        let mut values = vec![Complex64::ZERO; rows.len() * n];
        for (node, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::ConfigInvalid(format!("ragged CSV row {node}")));
            }
            for c in 0..n {
                values[node * n + c] = Complex64::new(row[d + 2 * c], row[d + 2 * c + 1]);
            }
        }
        Ok(GridFunction { spec, n, values })
    }
}
