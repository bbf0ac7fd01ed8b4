//! Uniform grid on [0, 1] and nodal state vectors.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Species;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid1D {
    n_points: usize,
}

impl Grid1D {
    pub const DEFAULT_POINTS: usize = 201;

    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 points, got {n_points}")));
        }
        Ok(Self { n_points })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Number of unknowns, two species per node.
    pub fn dofs(&self) -> usize {
        2 * self.n_points
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.n_points - 1 {
            1.0
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Samples `cos(nπx)` so that the reflection `x → 1 - x` maps the samples
    /// exactly onto `(-1)^n` times themselves.
    pub fn cosine_mode(&self, n: u32) -> Vec<f64> {
        let np = self.n_points;
        let mut c = vec![0.0; np];
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let half = (np - 1) / 2;
        for i in 0..=half {
            c[i] = (n as f64 * std::f64::consts::PI * self.x(i)).cos();
        }
        for i in half + 1..np {
            c[i] = sign * c[np - 1 - i];
        }
        // Exact zero at the midpoint for odd modes.
        if np % 2 == 1 && n % 2 == 1 {
            c[half] = 0.0;
        }
        c
    }

    /// Trapezoid weights. The discrete Neumann Laplacian integrates to zero
    /// against these.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_points];
        w[0] = 0.5 * h;
        w[self.n_points - 1] = 0.5 * h;
        w
    }
}

/// Concentrations on a grid, blocked by species: all `u` then all `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    grid: Grid1D,
    values: Vec<f64>,
}

impl StateVector {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.dofs() {
            return Err(Error::LengthMismatch { expected: grid.dofs(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn uniform(grid: Grid1D, state: Species) -> Self {
        let np = grid.n_points();
        let mut values = vec![state[0]; 2 * np];
        values[np..].fill(state[1]);
        Self { grid, values }
    }

    pub fn from_fields(grid: Grid1D, u: &[f64], v: &[f64]) -> Result<Self> {
        let np = grid.n_points();
        if u.len() != np || v.len() != np {
            return Err(Error::LengthMismatch { expected: np, got: u.len().min(v.len()) });
        }
        let mut values = Vec::with_capacity(2 * np);
        values.extend_from_slice(u);
        values.extend_from_slice(v);
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn u(&self) -> &[f64] {
        &self.values[..self.grid.n_points()]
    }

    pub fn v(&self) -> &[f64] {
        &self.values[self.grid.n_points()..]
    }

    pub fn node(&self, i: usize) -> Species {
        [self.values[i], self.values[self.grid.n_points() + i]]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_u(&self) -> f64 {
        self.u().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_u(&self) -> f64 {
        self.u().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_v(&self) -> f64 {
        self.v().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn distance_inf(&self, other: &StateVector) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// The state under `x → 1 - x`.
    pub fn reflected(&self) -> StateVector {
        let np = self.grid.n_points();
        let mut values = self.values.clone();
        values[..np].reverse();
        values[np..].reverse();
        Self { grid: self.grid, values }
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("x,u,v\n");
        for i in 0..self.grid.n_points() {
            let [u, v] = self.node(i);
            let _ = writeln!(s, "{},{},{}", self.grid.x(i), u, v);
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    /// Reads the `x,u,v` format written by [`StateVector::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut u = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with('x')) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Config(format!("line {}: expected 3 columns", lineno + 1)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))
            };
            u.push(parse(cols[1])?);
            v.push(parse(cols[2])?);
        }
        let grid = Grid1D::new(u.len())?;
        Self::from_fields(grid, &u, &v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_nodes_cover_unit_interval() {
        let g = Grid1D::new(11).unwrap();
        assert_eq!(g.x(0), 0.0);
        assert_eq!(g.x(10), 1.0);
        assert!((g.spacing() - 0.1).abs() < 1e-15);
        assert!(Grid1D::new(2).is_err());
    }

    #[test]
    fn cosine_mode_is_reflection_symmetric() {
        let g = Grid1D::new(201).unwrap();
        for n in [1u32, 2, 3, 10] {
            let c = g.cosine_mode(n);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            for i in 0..201 {
                assert_eq!(c[200 - i], sign * c[i]);
                assert!((c[i] - (n as f64 * std::f64::consts::PI * g.x(i)).cos()).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid1D::new(5).unwrap();
        let s = StateVector::from_fields(g, &[1.0, 2.0, 3.0, 4.0, 5.0], &[0.1, 0.2, 0.3, 0.4, 1e-17]).unwrap();
        let text = s.to_csv_string();
        assert!(text.starts_with("x,u,v\n0,1,0.1\n"));
        let back = StateVector::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn length_checked() {
        let g = Grid1D::new(5).unwrap();
        assert!(matches!(StateVector::new(g, vec![0.0; 9]), Err(Error::LengthMismatch { .. })));
    }
}
