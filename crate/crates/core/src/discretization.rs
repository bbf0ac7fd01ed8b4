//! Finite-difference steady-state operator `Φ(u; θ) = D u_xx + γ (F̂(u) + θ G(x))`
//! and its Jacobian on a uniform grid with no-flux boundaries.
//!
//! No-flux rows use ghost reflection (`f_{-1} = f_1`, `f_N = f_{N-2}`), which
//! keeps the scheme second order and makes `cos(mπx_i)` exact eigenvectors of
//! the discrete Laplacian with eigenvalue `-(2 - 2cos(mπh))/h²`.
//!
//! State vectors are blocked by species. The Jacobian is stored banded in
//! interleaved order (`u_0, v_0, u_1, v_1, ...`), which gives bandwidth 2.

use nalgebra::DMatrix;

use crate::banded::{BandedLu, BandedMatrix};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, StateVector};
use crate::model::ModelSpec;

/// Discrete Neumann Laplacian of one nodal field, scaled by `diffusivity`.
pub fn apply_laplacian(grid: Grid1D, field: &[f64], diffusivity: f64) -> Result<Vec<f64>> {
    let np = grid.n_points();
    if field.len() != np {
        return Err(Error::LengthMismatch { expected: np, got: field.len() });
    }
    let mut out = vec![0.0; np];
    laplacian_into(field, diffusivity / (grid.spacing() * grid.spacing()), &mut out);
    Ok(out)
}

fn laplacian_into(f: &[f64], scale: f64, out: &mut [f64]) {
    let np = f.len();
    out[0] = scale * 2.0 * (f[1] - f[0]);
    for i in 1..np - 1 {
        out[i] = scale * (f[i - 1] - 2.0 * f[i] + f[i + 1]);
    }
    out[np - 1] = scale * 2.0 * (f[np - 2] - f[np - 1]);
}

/// Discrete eigenvalue of the Neumann Laplacian for `cos(mπx)`, i.e. `-k_m²`
/// with the stencil wavenumber.
pub fn discrete_laplacian_eigenvalue(grid: Grid1D, m: usize) -> f64 {
    let h = grid.spacing();
    -(2.0 - 2.0 * (m as f64 * std::f64::consts::PI * h).cos()) / (h * h)
}

/// The model paired with a grid and the sampled heterogeneity shape.
#[derive(Debug, Clone)]
pub struct Discretization {
    model: ModelSpec,
    grid: Grid1D,
    shape: Vec<f64>,
    nodes: Vec<f64>,
}

impl Discretization {
    pub fn new(model: ModelSpec, grid: Grid1D) -> Self {
        Self { shape: grid.cosine_mode(model.mode()), nodes: grid.nodes(), model, grid }
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    /// Sampled `cos(nπx_i)`.
    pub fn shape(&self) -> &[f64] {
        &self.shape
    }

    fn check(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.grid.dofs() {
            return Err(Error::LengthMismatch { expected: self.grid.dofs(), got: values.len() });
        }
        Ok(())
    }

    /// Reaction part `F̂(u_i) + θ G(x_i)` at every node, blocked.
    pub fn reaction(&self, values: &[f64], theta: f64) -> Result<Vec<f64>> {
        self.check(values)?;
        let np = self.grid.n_points();
        let kin = self.model.kinetics();
        let coupling = self.model.heterogeneity().coupling;
        let mut out = vec![0.0; 2 * np];
        for i in 0..np {
            let f = kin
                .autonomous([values[i], values[np + i]])
                .map_err(|v| Error::DivisionByZero { x: self.nodes[i], v })?;
            let g = theta * self.shape[i];
            out[i] = f[0] + g * coupling[0];
            out[np + i] = f[1] + g * coupling[1];
        }
        Ok(out)
    }

    pub fn residual(&self, values: &[f64], theta: f64) -> Result<Vec<f64>> {
        self.residual_at_gamma(values, theta, self.model.gamma())
    }

    /// Residual with `γ` overriding the model's value.
    pub fn residual_at_gamma(&self, values: &[f64], theta: f64, gamma: f64) -> Result<Vec<f64>> {
        let mut out = self.reaction(values, theta)?;
        let np = self.grid.n_points();
        let h2 = self.grid.spacing() * self.grid.spacing();
        let mut lap = vec![0.0; np];
        for (s, d) in self.model.diffusivities().into_iter().enumerate() {
            let block = &values[s * np..(s + 1) * np];
            laplacian_into(block, d / h2, &mut lap);
            for i in 0..np {
                out[s * np + i] = lap[i] + gamma * out[s * np + i];
            }
        }
        Ok(out)
    }

    /// `∂Φ/∂θ = γ G(x_i)`.
    pub fn theta_derivative(&self) -> Vec<f64> {
        self.theta_derivative_at_gamma(self.model.gamma())
    }

    pub fn theta_derivative_at_gamma(&self, gamma: f64) -> Vec<f64> {
        let np = self.grid.n_points();
        let coupling = self.model.heterogeneity().coupling;
        let mut out = vec![0.0; 2 * np];
        for i in 0..np {
            out[i] = gamma * coupling[0] * self.shape[i];
            out[np + i] = gamma * coupling[1] * self.shape[i];
        }
        out
    }

    /// `∂Φ/∂γ = F̂(u) + θ G(x)`.
    pub fn gamma_derivative(&self, values: &[f64], theta: f64) -> Result<Vec<f64>> {
        self.reaction(values, theta)
    }

    pub fn jacobian(&self, values: &[f64]) -> Result<AssembledJacobian> {
        self.jacobian_at_gamma(values, self.model.gamma())
    }

    pub fn jacobian_at_gamma(&self, values: &[f64], gamma: f64) -> Result<AssembledJacobian> {
        self.check(values)?;
        let np = self.grid.n_points();
        let kin = self.model.kinetics();
        let h2 = self.grid.spacing() * self.grid.spacing();
        let mut m = BandedMatrix::zeros(2 * np, 2, 2);
        for (s, d) in self.model.diffusivities().into_iter().enumerate() {
            let c = d / h2;
            let row = |i: usize| 2 * i + s;
            m.add(row(0), row(0), -2.0 * c);
            m.add(row(0), row(1), 2.0 * c);
            for i in 1..np - 1 {
                m.add(row(i), row(i - 1), c);
                m.add(row(i), row(i), -2.0 * c);
                m.add(row(i), row(i + 1), c);
            }
            m.add(row(np - 1), row(np - 2), 2.0 * c);
            m.add(row(np - 1), row(np - 1), -2.0 * c);
        }
        for i in 0..np {
            let j = kin
                .autonomous_jacobian([values[i], values[np + i]])
                .map_err(|v| Error::DivisionByZero { x: self.nodes[i], v })?;
            for (a, row) in j.iter().enumerate() {
                for (b, &entry) in row.iter().enumerate() {
                    m.add(2 * i + a, 2 * i + b, gamma * entry);
                }
            }
        }
        Ok(AssembledJacobian::interleaved(m, self.grid))
    }
}

/// `Φ` for a state on the model's grid.
pub fn residual(model: &ModelSpec, state: &StateVector, theta: f64) -> Result<StateVector> {
    let disc = Discretization::new(*model, state.grid());
    let r = disc.residual(state.values(), theta)?;
    StateVector::new(state.grid(), r)
}

pub fn assemble_jacobian(model: &ModelSpec, state: &StateVector, _theta: f64) -> Result<AssembledJacobian> {
    Discretization::new(*model, state.grid()).jacobian(state.values())
}

/// `∂Φ/∂u` as a banded matrix with a fixed sparsity pattern.
///
/// The band is stored in a solver ordering; `order[k]` is the caller-facing
/// index of solver slot `k`. Vectors passed in and out use caller ordering.
#[derive(Debug, Clone)]
pub struct AssembledJacobian {
    matrix: BandedMatrix,
    order: Vec<usize>,
    slot: Vec<usize>,
}

impl AssembledJacobian {
    /// Band in caller ordering.
    pub fn from_banded(matrix: BandedMatrix) -> Self {
        let order: Vec<usize> = (0..matrix.dim()).collect();
        Self { slot: order.clone(), order, matrix }
    }

    pub fn with_order(matrix: BandedMatrix, order: Vec<usize>) -> Self {
        assert_eq!(order.len(), matrix.dim());
        let mut slot = vec![0; order.len()];
        for (k, &i) in order.iter().enumerate() {
            slot[i] = k;
        }
        Self { matrix, order, slot }
    }

    /// Species-interleaved ordering for a blocked state on `grid`.
    fn interleaved(matrix: BandedMatrix, grid: Grid1D) -> Self {
        let np = grid.n_points();
        let order = (0..2 * np).map(|k| if k % 2 == 0 { k / 2 } else { np + k / 2 }).collect();
        Self::with_order(matrix, order)
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn banded(&self) -> &BandedMatrix {
        &self.matrix
    }

    pub fn to_solver(&self, x: &[f64]) -> Vec<f64> {
        self.order.iter().map(|&i| x[i]).collect()
    }

    pub fn from_solver(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; y.len()];
        for (k, &i) in self.order.iter().enumerate() {
            out[i] = y[k];
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.from_solver(&self.matrix.mul_vec(&self.to_solver(x)))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix.get(self.slot[row], self.slot[col])
    }

    /// Dense copy in caller ordering.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Copy with `s` added to the diagonal.
    pub fn shifted(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.matrix.shift_diagonal(s);
        out
    }

    pub fn lu(&self) -> Result<JacobianLu> {
        Ok(JacobianLu { lu: self.matrix.lu()?, jac_order: self.order.clone() })
    }

    pub fn lu_regularized(&self) -> Result<JacobianLu> {
        Ok(JacobianLu { lu: self.matrix.lu_regularized()?, jac_order: self.order.clone() })
    }
}

/// Factorized Jacobian acting on caller-ordered vectors.
#[derive(Debug, Clone)]
pub struct JacobianLu {
    lu: BandedLu,
    jac_order: Vec<usize>,
}

impl JacobianLu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = self.jac_order.iter().map(|&i| b[i]).collect();
        self.lu.solve_in_place(&mut x);
        let mut out = vec![0.0; x.len()];
        for (k, &i) in self.jac_order.iter().enumerate() {
            out[i] = x[k];
        }
        out
    }

    pub fn condition_estimate(&self) -> f64 {
        self.lu.condition_estimate()
    }

    pub fn determinant_sign(&self) -> f64 {
        self.lu.determinant_sign()
    }
}
