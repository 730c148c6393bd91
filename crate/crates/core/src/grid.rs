//! Rectangular grids in one or two dimensions, vector-valued nodal fields,
//! finite-difference calculus and discrete balls `Ω(x₀, R) = Ω ∩ B(x₀, R)`.
//!
//! Nodes are numbered with the first axis fastest: `node = i + n₀·j`.
//! Vector fields store their `m` components contiguously per node.
//! Derivative fields use the component layouts
//! `c·dim + d` (gradient) and `c·dim² + d₁·dim + d₂` (Hessian).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Boundary condition attached to one solution component.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    origin: [f64; 2],
    extents: [f64; 2],
    shape: [usize; 2],
    spacing: [f64; 2],
    bc: Vec<BoundaryKind>,
}

impl Grid {
    /// Grid with origin at zero and no boundary conditions bound yet.
    pub fn new(extents: &[f64], shape: &[usize]) -> Result<Self> {
        let dim = extents.len();
        if !(1..=2).contains(&dim) || shape.len() != dim {
            return Err(LabError::InvalidGrid(format!(
                "dim must be 1 or 2 with matching shape, got extents {extents:?} shape {shape:?}"
            )));
        }
        let mut g = Grid {
            dim,
            origin: [0.0; 2],
            extents: [0.0; 2],
            shape: [1; 2],
            spacing: [1.0; 2],
            bc: Vec::new(),
        };
        for d in 0..dim {
            if shape[d] < 3 {
                return Err(LabError::InvalidGrid(format!(
                    "axis {d} has {} nodes, need at least 3",
                    shape[d]
                )));
            }
            if !(extents[d].is_finite() && extents[d] > 0.0) {
                return Err(LabError::InvalidGrid(format!(
                    "axis {d} extent {} must be positive",
                    extents[d]
                )));
            }
            g.extents[d] = extents[d];
            g.shape[d] = shape[d];
            g.spacing[d] = extents[d] / (shape[d] - 1) as f64;
        }
        Ok(g)
    }

    /// `[0, 1]` with `n` nodes.
    pub fn unit_interval(n: usize) -> Result<Self> {
        Grid::new(&[1.0], &[n])
    }

    /// `[0, 1]²` with `n × n` nodes.
    pub fn unit_square(n: usize) -> Result<Self> {
        Grid::new(&[1.0, 1.0], &[n, n])
    }

    pub fn with_origin(mut self, origin: &[f64]) -> Result<Self> {
        if origin.len() != self.dim {
            return Err(LabError::ShapeMismatch(format!(
                "origin has {} entries for a {}-d grid",
                origin.len(),
                self.dim
            )));
        }
        self.origin[..self.dim].copy_from_slice(origin);
        Ok(self)
    }

    pub fn with_bc(mut self, bc: Vec<BoundaryKind>) -> Self {
        self.bc = bc;
        self
    }

    /// Checks that one boundary condition is attached per component.
    pub fn check_bound(&self, m: usize) -> Result<()> {
        if self.bc.len() != m {
            return Err(LabError::ShapeMismatch(format!(
                "grid carries {} boundary conditions for a system of {m} equations",
                self.bc.len()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn origin(&self) -> &[f64] {
        &self.origin[..self.dim]
    }
    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim]
    }
    pub fn shape(&self) -> &[usize] {
        &self.shape[..self.dim]
    }
    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }
    pub fn bc(&self) -> &[BoundaryKind] {
        &self.bc
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        self.extents().iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// Lebesgue measure of the domain.
    pub fn volume(&self) -> f64 {
        self.extents().iter().product()
    }

    pub fn node(&self, idx: [usize; 2]) -> usize {
        idx[0] + self.shape[0] * idx[1]
    }

    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        [node % self.shape[0], node / self.shape[0]]
    }

    pub fn coord(&self, node: usize) -> [f64; 2] {
        let idx = self.multi_index(node);
        let mut x = [0.0; 2];
        for d in 0..self.dim {
            x[d] = self.origin[d] + idx[d] as f64 * self.spacing[d];
        }
        x
    }

    /// Node closest to the physical point `x`.
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let mut idx = [0usize; 2];
        for d in 0..self.dim {
            let t = ((x[d] - self.origin[d]) / self.spacing[d]).round();
            idx[d] = t.clamp(0.0, (self.shape[d] - 1) as f64) as usize;
        }
        self.node(idx)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let idx = self.multi_index(node);
        (0..self.dim).any(|d| idx[d] == 0 || idx[d] + 1 == self.shape[d])
    }

    /// Trapezoidal quadrature weight (tensor product of 1-d trapezoid rules).
    pub fn weight(&self, node: usize) -> f64 {
        let idx = self.multi_index(node);
        let mut w = 1.0;
        for d in 0..self.dim {
            let end = idx[d] == 0 || idx[d] + 1 == self.shape[d];
            w *= if end {
                0.5 * self.spacing[d]
            } else {
                self.spacing[d]
            };
        }
        w
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Calls `visit(j, lo, hi)` for every grid row `j` meeting the ball of
    /// `radius` around `center`; the row's nodes `lo..=hi` are exactly those
    /// within the ball.
    pub fn for_each_ball_row(
        &self,
        center: usize,
        radius: f64,
        mut visit: impl FnMut(usize, usize, usize),
    ) {
        let c = self.multi_index(center);
        let r2 = radius * radius * (1.0 + 1e-12);
        let (j_lo, j_hi) = if self.dim > 1 {
            let k = Self::reach(r2, self.spacing[1]);
            (c[1].saturating_sub(k), (c[1] + k).min(self.shape[1] - 1))
        } else {
            (0, 0)
        };
        for j in j_lo..=j_hi {
            let dy = if self.dim > 1 {
                (j as f64 - c[1] as f64) * self.spacing[1]
            } else {
                0.0
            };
            let rem = r2 - dy * dy;
            if rem < 0.0 {
                continue;
            }
            let k = Self::reach(rem, self.spacing[0]);
            visit(j, c[0].saturating_sub(k), (c[0] + k).min(self.shape[0] - 1));
        }
    }

    /// Largest integer `k` with `(k·h)² ≤ r2`.
    fn reach(r2: f64, h: f64) -> usize {
        let mut k = (r2.sqrt() / h).floor() as usize;
        while ((k + 1) as f64 * h).powi(2) <= r2 {
            k += 1;
        }
        while k > 0 && (k as f64 * h).powi(2) > r2 {
            k -= 1;
        }
        k
    }

    /// Calls `visit` for every node within Euclidean distance `radius` of
    /// `center`.
    pub fn for_each_in_ball(&self, center: usize, radius: f64, mut visit: impl FnMut(usize)) {
        let n0 = self.shape[0];
        self.for_each_ball_row(center, radius, |j, lo, hi| {
            for i in lo..=hi {
                visit(i + n0 * j);
            }
        });
    }

    /// `Ω(x₀, R)`: the nodes within distance `radius` of `center`.
    pub fn region(&self, center: usize, radius: f64) -> Result<Region> {
        if center >= self.len() {
            return Err(LabError::InvalidArgument(format!(
                "center node {center} outside grid of {} nodes",
                self.len()
            )));
        }
        if !(radius > 0.0) {
            return Err(LabError::InvalidArgument(format!(
                "radius {radius} must be positive"
            )));
        }
        let mut nodes = Vec::new();
        self.for_each_in_ball(center, radius, |n| nodes.push(n));
        Ok(Region {
            center,
            radius,
            nodes,
        })
    }

    fn axis_stride(&self, axis: usize) -> usize {
        if axis == 0 {
            1
        } else {
            self.shape[0]
        }
    }

    /// Stencil of the first derivative along `axis` at `node`: central in the
    /// interior, one-sided second order on the boundary.
    pub fn first_derivative_stencil(&self, node: usize, axis: usize) -> [(usize, f64); 3] {
        let n = self.shape[axis];
        let i = self.multi_index(node)[axis];
        let s = self.axis_stride(axis);
        let h = self.spacing[axis];
        let inv = 1.0 / (2.0 * h);
        if i == 0 {
            [
                (node, -3.0 * inv),
                (node + s, 4.0 * inv),
                (node + 2 * s, -inv),
            ]
        } else if i + 1 == n {
            [
                (node, 3.0 * inv),
                (node - s, -4.0 * inv),
                (node - 2 * s, inv),
            ]
        } else {
            [(node + s, inv), (node - s, -inv), (node, 0.0)]
        }
    }

    /// Stencil of the pure second derivative along `axis`. Boundary nodes use
    /// the four-point one-sided formula when the axis has four or more nodes.
    pub fn second_derivative_stencil(
        &self,
        node: usize,
        axis: usize,
    ) -> ([(usize, f64); 4], usize) {
        let n = self.shape[axis];
        let i = self.multi_index(node)[axis];
        let s = self.axis_stride(axis);
        let h2 = self.spacing[axis] * self.spacing[axis];
        let inv = 1.0 / h2;
        let pick = |k: isize| -> usize { (node as isize + k * s as isize) as usize };
        if i > 0 && i + 1 < n {
            return (
                [
                    (pick(-1), inv),
                    (node, -2.0 * inv),
                    (pick(1), inv),
                    (node, 0.0),
                ],
                3,
            );
        }
        let dir: isize = if i == 0 { 1 } else { -1 };
        if n >= 4 {
            (
                [
                    (node, 2.0 * inv),
                    (pick(dir), -5.0 * inv),
                    (pick(2 * dir), 4.0 * inv),
                    (pick(3 * dir), -inv),
                ],
                4,
            )
        } else {
            (
                [
                    (node, inv),
                    (pick(dir), -2.0 * inv),
                    (pick(2 * dir), inv),
                    (node, 0.0),
                ],
                3,
            )
        }
    }
}

/// Discrete `Ω(x₀, R)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub center: usize,
    pub radius: f64,
    pub nodes: Vec<usize>,
}

impl Region {
    /// Total quadrature weight `|Ω(x₀, R)|`.
    pub fn measure(&self, grid: &Grid) -> f64 {
        self.nodes.iter().map(|&n| grid.weight(n)).sum()
    }

    /// Region covering every node of the grid.
    pub fn whole(grid: &Grid) -> Region {
        Region {
            center: 0,
            radius: grid.diameter(),
            nodes: (0..grid.len()).collect(),
        }
    }
}

/// `region_nodes` entry point; see [`Grid::region`].
pub fn region_nodes(grid: &Grid, center: usize, radius: f64) -> Result<Region> {
    grid.region(center, radius)
}

/// Vector-valued field sampled at the nodes of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    m: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Arc<Grid>, m: usize) -> Self {
        let values = vec![0.0; grid.len() * m];
        GridFunction { grid, m, values }
    }

    pub fn constant(grid: Arc<Grid>, value: &[f64]) -> Self {
        let m = value.len();
        let values = (0..grid.len())
            .flat_map(|_| value.iter().copied())
            .collect();
        GridFunction { grid, m, values }
    }

    /// # Panics
    /// If `f` produces a non-finite value.
    pub fn from_fn(grid: Arc<Grid>, m: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Self {
        let mut values = vec![0.0; grid.len() * m];
        for node in 0..grid.len() {
            let x = grid.coord(node);
            f(&x[..grid.dim()], &mut values[node * m..(node + 1) * m]);
        }
        assert!(
            values.iter().all(|v| v.is_finite()),
            "GridFunction::from_fn produced a non-finite value"
        );
        GridFunction { grid, m, values }
    }

    /// Scalar field from a closure of the coordinates.
    ///
    /// # Panics
    /// If `f` produces a non-finite value.
    pub fn scalar(grid: Arc<Grid>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        GridFunction::from_fn(grid, 1, |x, out| out[0] = f(x))
    }

    pub fn from_values(grid: Arc<Grid>, m: usize, values: Vec<f64>) -> Result<Self> {
        if m == 0 || values.len() != grid.len() * m {
            return Err(LabError::ShapeMismatch(format!(
                "{} values for {} nodes with {m} components",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(LabError::InvalidArgument(format!(
                "non-finite value at node {}",
                i / m
            )));
        }
        Ok(GridFunction { grid, m, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn m(&self) -> usize {
        self.m
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

    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node * self.m..(node + 1) * self.m]
    }

    pub fn at_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.values[node * self.m..(node + 1) * self.m]
    }

    /// Euclidean norm of the value at `node`.
    pub fn norm_at(&self, node: usize) -> f64 {
        self.at(node).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn component(&self, c: usize) -> GridFunction {
        let values = self
            .values
            .iter()
            .skip(c)
            .step_by(self.m)
            .copied()
            .collect();
        GridFunction {
            grid: self.grid.clone(),
            m: 1,
            values,
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            m: self.m,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Scalar field obtained by applying `f` to the vector value at each node.
    pub fn map_nodes(&self, mut f: impl FnMut(&[f64]) -> f64) -> GridFunction {
        let values = (0..self.grid.len()).map(|n| f(self.at(n))).collect();
        GridFunction {
            grid: self.grid.clone(),
            m: 1,
            values,
        }
    }

    pub fn scaled(&self, a: f64) -> GridFunction {
        self.map(|v| a * v)
    }

    /// Adds the same vector `c` at every node.
    pub fn shifted(&self, c: &[f64]) -> GridFunction {
        let mut out = self.clone();
        for node in 0..self.grid.len() {
            for (v, ci) in out.at_mut(node).iter_mut().zip(c) {
                *v += ci;
            }
        }
        out
    }

    pub fn zip_with(
        &self,
        other: &GridFunction,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> GridFunction {
        assert_eq!(self.values.len(), other.values.len(), "field shapes differ");
        GridFunction {
            grid: self.grid.clone(),
            m: self.m,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Quadrature `∫ |u|^p` with the Euclidean norm on `ℝᵐ`.
    pub fn integral_pow(&self, p: f64) -> f64 {
        (0..self.grid.len())
            .map(|n| self.grid.weight(n) * self.norm_at(n).powf(p))
            .sum()
    }

    /// Quadrature `Lᵖ` norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        self.integral_pow(p).powf(1.0 / p)
    }

    /// Quadrature sum `∑ wᵢ uᵢ`, per component.
    pub fn total(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.m];
        for node in 0..self.grid.len() {
            let w = self.grid.weight(node);
            for (a, v) in acc.iter_mut().zip(self.at(node)) {
                *a += w * v;
            }
        }
        acc
    }
}

/// Trapezoid-weighted mean of `f` over `region`.
pub fn average(f: &GridFunction, region: &Region) -> Vec<f64> {
    let grid = f.grid();
    let mut acc = vec![0.0; f.m()];
    let mut wsum = 0.0;
    for &n in &region.nodes {
        let w = grid.weight(n);
        wsum += w;
        for (a, v) in acc.iter_mut().zip(f.at(n)) {
            *a += w * v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= wsum);
    acc
}

/// Stencil weights sum to zero, so differencing against the node value is
/// the same operator and maps constants to exactly zero.
fn apply_stencil(st: &[(usize, f64)], vals: &[f64], node: usize, m: usize, c: usize) -> f64 {
    let base = vals[node * m + c];
    st.iter().map(|&(k, w)| w * (vals[k * m + c] - base)).sum()
}

/// `Du`, with `m·dim` components.
pub fn gradient(f: &GridFunction) -> GridFunction {
    let grid = f.grid().clone();
    let (m, dim) = (f.m(), grid.dim());
    let mut out = GridFunction::zeros(grid.clone(), m * dim);
    for node in 0..grid.len() {
        for d in 0..dim {
            let st = grid.first_derivative_stencil(node, d);
            for c in 0..m {
                let v = apply_stencil(&st, &f.values, node, m, c);
                out.values[node * m * dim + c * dim + d] = v;
            }
        }
    }
    out
}

fn second_along(f: &GridFunction, axis: usize) -> GridFunction {
    let grid = f.grid().clone();
    let m = f.m();
    let mut out = GridFunction::zeros(grid.clone(), m);
    for node in 0..grid.len() {
        let (st, len) = grid.second_derivative_stencil(node, axis);
        for c in 0..m {
            out.values[node * m + c] = apply_stencil(&st[..len], &f.values, node, m, c);
        }
    }
    out
}

fn first_along(f: &GridFunction, axis: usize) -> GridFunction {
    let grid = f.grid().clone();
    let m = f.m();
    let mut out = GridFunction::zeros(grid.clone(), m);
    for node in 0..grid.len() {
        let st = grid.first_derivative_stencil(node, axis);
        for c in 0..m {
            out.values[node * m + c] = apply_stencil(&st, &f.values, node, m, c);
        }
    }
    out
}

/// `D²u`, with `m·dim·dim` components; mixed partials are the average of
/// the two cross-stencil orders.
pub fn second_derivatives(f: &GridFunction) -> GridFunction {
    let grid = f.grid().clone();
    let (m, dim) = (f.m(), grid.dim());
    let mut out = GridFunction::zeros(grid.clone(), m * dim * dim);
    let mut put = |field: &GridFunction, d1: usize, d2: usize| {
        for node in 0..grid.len() {
            for c in 0..m {
                out.values[node * m * dim * dim + c * dim * dim + d1 * dim + d2] =
                    field.values[node * m + c];
            }
        }
    };
    for d in 0..dim {
        put(&second_along(f, d), d, d);
    }
    if dim == 2 {
        let xy = first_along(&first_along(f, 1), 0);
        let yx = first_along(&first_along(f, 0), 1);
        let mixed = xy.zip_with(&yx, |a, b| 0.5 * (a + b));
        put(&mixed, 0, 1);
        put(&mixed, 1, 0);
    }
    out
}

/// Discrete divergence of an `m × dim` flux using the gradient stencils, so
/// that `∑ w (div F)·v = −∑ w F·Dv` whenever `F` and `v` vanish on the
/// boundary.
pub fn divergence_of_flux(flux: &GridFunction, grid: &Grid) -> Result<GridFunction> {
    let dim = grid.dim();
    if !flux.m().is_multiple_of(dim) || flux.grid().as_ref() != grid {
        return Err(LabError::ShapeMismatch(format!(
            "flux with {} components on a {dim}-d grid",
            flux.m()
        )));
    }
    let m = flux.m() / dim;
    let mut out = GridFunction::zeros(flux.grid().clone(), m);
    for node in 0..grid.len() {
        for d in 0..dim {
            let st = grid.first_derivative_stencil(node, d);
            for c in 0..m {
                let v: f64 = st
                    .iter()
                    .map(|&(k, w)| w * flux.values[k * m * dim + c * dim + d])
                    .sum();
                out.values[node * m + c] += v;
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// `ū(x̄) = −u(x)`, used with Dirichlet data.
    Odd,
    /// `ū(x̄) = u(x)`, used with Neumann data.
    Even,
}

/// Field extended across one face of the rectangle.
#[derive(Clone, Debug)]
pub struct Extension {
    pub field: GridFunction,
    pub axis: usize,
    pub side: Side,
    pub parity: Parity,
    /// Largest `|u|` on the reflection plane for odd extensions (zero when
    /// the trace vanishes), largest normal central difference for even ones.
    pub trace_defect: f64,
    original_shape: usize,
}

impl Extension {
    /// True when an odd extension was taken of a field with nonzero trace.
    pub fn has_jump(&self) -> bool {
        self.parity == Parity::Odd && self.trace_defect > 1e-12 * (1.0 + self.field.max_abs())
    }

    /// Restriction back to the original domain.
    pub fn restrict(&self) -> GridFunction {
        let ext_grid = self.field.grid();
        let n = self.original_shape;
        let offset = match self.side {
            Side::Low => n - 1,
            Side::High => 0,
        };
        let mut shape = ext_grid.shape().to_vec();
        shape[self.axis] = n;
        let mut extents = ext_grid.extents().to_vec();
        extents[self.axis] *= 0.5;
        let mut origin = ext_grid.origin().to_vec();
        if self.side == Side::Low {
            origin[self.axis] += extents[self.axis];
        }
        let grid = Grid::new(&extents, &shape)
            .and_then(|g| g.with_origin(&origin))
            .expect("restriction of a valid extension")
            .with_bc(ext_grid.bc().to_vec());
        let grid = Arc::new(grid);
        let m = self.field.m();
        let mut out = GridFunction::zeros(grid.clone(), m);
        for node in 0..grid.len() {
            let mut idx = grid.multi_index(node);
            idx[self.axis] += offset;
            let src = ext_grid.node(idx);
            out.at_mut(node).copy_from_slice(self.field.at(src));
        }
        out
    }
}

/// Reflects `f` across the face `side` of `axis`, doubling the domain.
pub fn extend_by_reflection(
    f: &GridFunction,
    axis: usize,
    side: Side,
    parity: Parity,
) -> Result<Extension> {
    let grid = f.grid();
    if axis >= grid.dim() {
        return Err(LabError::InvalidArgument(format!(
            "axis {axis} on a {}-d grid",
            grid.dim()
        )));
    }
    let n = grid.shape()[axis];
    let mut shape = grid.shape().to_vec();
    shape[axis] = 2 * n - 1;
    let mut extents = grid.extents().to_vec();
    extents[axis] *= 2.0;
    let mut origin = grid.origin().to_vec();
    if side == Side::Low {
        origin[axis] -= grid.extents()[axis];
    }
    let ext_grid = Arc::new(
        Grid::new(&extents, &shape)?
            .with_origin(&origin)?
            .with_bc(grid.bc().to_vec()),
    );
    let m = f.m();
    let sign = match parity {
        Parity::Odd => -1.0,
        Parity::Even => 1.0,
    };
    let mut field = GridFunction::zeros(ext_grid.clone(), m);
    for node in 0..ext_grid.len() {
        let mut idx = ext_grid.multi_index(node);
        let i = idx[axis];
        let (src, s) = match side {
            Side::Low if i >= n - 1 => (i - (n - 1), 1.0),
            Side::Low => ((n - 1) - i, sign),
            Side::High if i < n => (i, 1.0),
            Side::High => (2 * (n - 1) - i, sign),
        };
        idx[axis] = src;
        let from = grid.node(idx);
        for c in 0..m {
            field.values[node * m + c] = s * f.values[from * m + c];
        }
    }

    let plane = match side {
        Side::Low => 0,
        Side::High => n - 1,
    };
    let mut defect: f64 = 0.0;
    for node in 0..grid.len() {
        let idx = grid.multi_index(node);
        if idx[axis] != plane {
            continue;
        }
        match parity {
            Parity::Odd => defect = defect.max(f.norm_at(node)),
            Parity::Even => {
                let mut e = idx;
                e[axis] = n - 1;
                let center = ext_grid.node(e);
                let st = ext_grid.first_derivative_stencil(center, axis);
                for c in 0..m {
                    let v: f64 = st.iter().map(|&(k, w)| w * field.values[k * m + c]).sum();
                    defect = defect.max(v.abs());
                }
            }
        }
    }
    Ok(Extension {
        field,
        axis,
        side,
        parity,
        trace_defect: defect,
        original_shape: n,
    })
}
