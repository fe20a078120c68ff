//! Grid functions, even/odd splitting under `(x,y) -> (-x,-y)`, and the
//! `L2` / broken `H1` norms used to measure iteration errors.
//!
//! All quadratures are the composite trapezoidal rule. Reductions are
//! sequential in node order, so results are reproducible bit for bit.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::{Grid, LocalIndex, LocalLayout, NodeIndex, SubdomainId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// `+1` for even, `-1` for odd: the factor picked up under reflection.
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// One value per node of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.node_count()],
        }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.node_count()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node position (`z = 0` in 2D).
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let values = grid.nodes().map(|n| f(grid.point(n))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> Grid {
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

    pub fn at(&self, n: NodeIndex) -> f64 {
        self.values[self.grid.linear(n)]
    }

    pub fn set(&mut self, n: NodeIndex, v: f64) {
        let l = self.grid.linear(n);
        self.values[l] = v;
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    /// Index of the first non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<NodeIndex> {
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .map(|l| self.grid.node(l))
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn restrict(&self, id: SubdomainId) -> LocalField {
        let layout = LocalLayout::new(self.grid);
        let values = (0..layout.len())
            .map(|l| self.at(layout.to_global(id, layout.local(l))))
            .collect();
        LocalField {
            grid: self.grid,
            id,
            values,
        }
    }

    pub fn restrict_all(&self) -> [LocalField; 4] {
        SubdomainId::ALL.map(|id| self.restrict(id))
    }

    /// Restriction to the `z`-plane `k`, as a 2D field.
    pub fn z_plane(&self, k: usize) -> Result<Field> {
        if self.grid.dim() != 3 {
            return Err(Error::InvalidGrid("z-planes exist only in 3D".into()));
        }
        let g2 = Grid::new(2, self.grid.cells())?;
        let values = g2
            .nodes()
            .map(|n| self.at(NodeIndex::new(n.i, n.j, k)))
            .collect();
        Ok(Field { grid: g2, values })
    }
}

/// Even and odd parts of a field under `(x,y) -> (-x,-y)` (`z` fixed).
#[derive(Clone, Debug, PartialEq)]
pub struct ParityPair {
    pub even: Field,
    pub odd: Field,
}

impl ParityPair {
    pub fn part(&self, parity: Parity) -> &Field {
        match parity {
            Parity::Even => &self.even,
            Parity::Odd => &self.odd,
        }
    }
}

pub fn split_even_odd(field: &Field) -> ParityPair {
    let g = field.grid;
    let mut even = Vec::with_capacity(field.values.len());
    let mut odd = Vec::with_capacity(field.values.len());
    for (l, &v) in field.values.iter().enumerate() {
        let r = field.values[g.linear(g.reflect_xy_unchecked(g.node(l)))];
        even.push(0.5 * (v + r));
        odd.push(0.5 * (v - r));
    }
    ParityPair {
        even: Field { grid: g, values: even },
        odd: Field { grid: g, values: odd },
    }
}

pub fn recombine(pair: &ParityPair) -> Result<Field> {
    pair.even.add(&pair.odd)
}

/// `max_n |v[n] - s v[R n]|` with `s = +1` for even and `-1` for odd; zero
/// exactly when the field has the given parity.
pub fn symmetry_residual(field: &Field, parity: Parity) -> f64 {
    let g = field.grid;
    let s = parity.sign();
    field
        .values
        .iter()
        .enumerate()
        .map(|(l, &v)| (v - s * field.values[g.linear(g.reflect_xy_unchecked(g.node(l)))]).abs())
        .fold(0.0, f64::max)
}

/// Trapezoidal weight of index `i` on an axis with `len` nodes.
fn trap(i: usize, len: usize) -> f64 {
    if i == 0 || i + 1 == len {
        0.5
    } else {
        1.0
    }
}

/// Trapezoidal approximation of `(∫_Ω v²)^{1/2}`.
pub fn l2_norm(field: &Field) -> f64 {
    let g = field.grid;
    let m = g.nodes_per_axis();
    let nz = g.nz();
    let cell = g.spacing().powi(g.dim() as i32);
    let mut sum = 0.0;
    for (l, &v) in field.values.iter().enumerate() {
        let n = g.node(l);
        let mut w = trap(n.i, m) * trap(n.j, m);
        if g.dim() == 3 {
            w *= trap(n.k, nz);
        }
        sum += w * v * v;
    }
    (sum * cell).sqrt()
}

/// Values on the closed node set of one subdomain, in local-index order
/// (see [`crate::grid`]).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalField {
    grid: Grid,
    id: SubdomainId,
    values: Vec<f64>,
}

impl LocalField {
    pub fn zeros(grid: Grid, id: SubdomainId) -> Self {
        Self {
            grid,
            id,
            values: vec![0.0; LocalLayout::new(grid).len()],
        }
    }

    pub fn from_values(grid: Grid, id: SubdomainId, values: Vec<f64>) -> Result<Self> {
        let len = LocalLayout::new(grid).len();
        if values.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                got: values.len(),
            });
        }
        Ok(Self { grid, id, values })
    }

    pub fn from_fn(grid: Grid, id: SubdomainId, f: impl Fn([f64; 3]) -> f64) -> Self {
        let layout = LocalLayout::new(grid);
        let values = (0..layout.len())
            .map(|l| f(grid.point(layout.to_global(id, layout.local(l)))))
            .collect();
        Self { grid, id, values }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn id(&self) -> SubdomainId {
        self.id
    }

    pub fn layout(&self) -> LocalLayout {
        LocalLayout::new(self.grid)
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

    pub fn at(&self, l: LocalIndex) -> f64 {
        self.values[self.layout().linear(l)]
    }

    pub fn at_global(&self, n: NodeIndex) -> Option<f64> {
        self.layout().to_local(self.id, n).map(|l| self.at(l))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn sub(&self, other: &LocalField) -> Result<LocalField> {
        if self.grid != other.grid || self.id != other.id {
            return Err(Error::GridMismatch);
        }
        Ok(LocalField {
            grid: self.grid,
            id: self.id,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &LocalField) -> Result<LocalField> {
        if self.grid != other.grid || self.id != other.id {
            return Err(Error::GridMismatch);
        }
        Ok(LocalField {
            grid: self.grid,
            id: self.id,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn scaled(&self, c: f64) -> LocalField {
        LocalField {
            grid: self.grid,
            id: self.id,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Same values reinterpreted on another subdomain (the mirror image with
    /// respect to the reflection that maps `self.id` to `id`).
    pub fn mirrored_to(&self, id: SubdomainId, sign: f64) -> LocalField {
        LocalField {
            grid: self.grid,
            id,
            values: self.values.iter().map(|v| sign * v).collect(),
        }
    }

    /// Squared trapezoidal `L2` norm over the closed subdomain.
    pub fn l2_norm_squared(&self) -> f64 {
        let layout = self.layout();
        let m = layout.side_len();
        let nz = layout.nz();
        let dim = self.grid.dim();
        let cell = self.grid.spacing().powi(dim as i32);
        let mut sum = 0.0;
        for (l, &v) in self.values.iter().enumerate() {
            let li = layout.local(l);
            let mut w = trap(li.a, m) * trap(li.b, m);
            if dim == 3 {
                w *= trap(li.c, nz);
            }
            sum += w * v * v;
        }
        sum * cell
    }

    /// Squared trapezoidal `L2` norm of the discrete gradient. Centered
    /// differences inside, second-order one-sided differences on the
    /// subdomain boundary.
    pub fn grad_norm_squared(&self) -> f64 {
        let layout = self.layout();
        let m = layout.side_len();
        let nz = layout.nz();
        let dim = self.grid.dim();
        let h = self.grid.spacing();
        let cell = h.powi(dim as i32);
        let v = |a: usize, b: usize, c: usize| self.values[layout.linear(LocalIndex::new(a, b, c))];
        let d1 = |get: &dyn Fn(usize) -> f64, t: usize, len: usize| -> f64 {
            if t == 0 {
                (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h)
            } else if t + 1 == len {
                (3.0 * get(t) - 4.0 * get(t - 1) + get(t - 2)) / (2.0 * h)
            } else {
                (get(t + 1) - get(t - 1)) / (2.0 * h)
            }
        };
        let mut sum = 0.0;
        for l in 0..layout.len() {
            let LocalIndex { a, b, c } = layout.local(l);
            let gx = d1(&|t| v(t, b, c), a, m);
            let gy = d1(&|t| v(a, t, c), b, m);
            let mut g2 = gx * gx + gy * gy;
            let mut w = trap(a, m) * trap(b, m);
            if dim == 3 {
                let gz = d1(&|t| v(a, b, t), c, nz);
                g2 += gz * gz;
                w *= trap(c, nz);
            }
            sum += w * g2;
        }
        sum * cell
    }

    pub fn h1_norm(&self) -> f64 {
        (self.l2_norm_squared() + self.grad_norm_squared()).sqrt()
    }
}

/// `L2` norm of a field given by its four subdomain restrictions, each
/// integrated over its own closed subdomain.
pub fn broken_l2_norm(fields: &[LocalField; 4]) -> f64 {
    fields.iter().map(LocalField::l2_norm_squared).sum::<f64>().sqrt()
}

/// `Σ_i ||v_i||_{H1(Ω_i)}`.
pub fn broken_h1_norm(fields: &[LocalField; 4]) -> f64 {
    fields.iter().map(LocalField::h1_norm).sum()
}

pub fn broken_max_abs(fields: &[LocalField; 4]) -> f64 {
    fields.iter().map(LocalField::max_abs).fold(0.0, f64::max)
}

/// Largest deviation of a broken field from the given parity. Under the
/// point reflection `Ω1 <-> Ω3` and `Ω2 <-> Ω4` with identical local indices.
pub fn broken_symmetry_residual(fields: &[LocalField; 4], parity: Parity) -> f64 {
    let s = parity.sign();
    let mut worst = 0.0f64;
    for (p, q) in [(0, 2), (1, 3)] {
        for (a, b) in fields[p].values.iter().zip(&fields[q].values) {
            worst = worst.max((a - s * b).abs());
        }
    }
    worst
}

/// Global field from subdomain restrictions; duplicated interface nodes take
/// the mean of their owners' values.
pub fn assemble_global(fields: &[LocalField; 4]) -> Field {
    let grid = fields[0].grid;
    let layout = LocalLayout::new(grid);
    let mut sum = vec![0.0; grid.node_count()];
    let mut count = vec![0u8; grid.node_count()];
    for f in fields {
        for (l, &v) in f.values.iter().enumerate() {
            let g = grid.linear(layout.to_global(f.id, layout.local(l)));
            sum[g] += v;
            count[g] += 1;
        }
    }
    let values = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    Field { grid, values }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
