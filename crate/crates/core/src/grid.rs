//! Uniform tensor grids on `(-1,1)^2` and `(-1,1)^3` split into four
//! quadrant subdomains meeting at the origin (a cross-point in 2D, a
//! cross-edge along `z` in 3D).
//!
//! Global node indices are `(i, j, k)` with `i = 0` at `x = -1`. In 2D the
//! `k` index is always zero.
//!
//! Each subdomain also has a *local* index `(a, b, c)` where `a = |i - N/2|`
//! and `b = |j - N/2|` count away from the cross-point and `c = k`. The
//! reflections `(x,y) -> (-x,-y)`, `(x,y) -> (-x,y)` and `(x,y) -> (x,-y)`
//! therefore map a node of one subdomain to the node with the *same* local
//! index in the image subdomain.

use std::fmt;

use crate::error::{Error, Result};

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl NodeIndex {
    pub const fn new(i: usize, j: usize, k: usize) -> Self {
        Self { i, j, k }
    }

    pub const fn new2(i: usize, j: usize) -> Self {
        Self { i, j, k: 0 }
    }
}

impl fmt::Display for NodeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.i, self.j, self.k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    dim: usize,
    cells: usize,
}

impl Grid {
    /// Builds a grid with `cells` cells (so `cells + 1` nodes) per axis.
    ///
    /// The cell count must be even so that `x = 0` and `y = 0` are grid
    /// lines.
    pub fn new(dim: usize, cells: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if !cells.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "cells per axis must be even so the origin is a node, got {cells}"
            )));
        }
        if cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "cells per axis must be at least {MIN_CELLS}, got {cells}"
            )));
        }
        Ok(Self { dim, cells })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.cells + 1
    }

    /// Index of the `x = 0` (and `y = 0`) grid line.
    pub fn center(&self) -> usize {
        self.cells / 2
    }

    pub fn spacing(&self) -> f64 {
        2.0 / self.cells as f64
    }

    /// Number of nodes along `z`, which is 1 in 2D.
    pub fn nz(&self) -> usize {
        if self.dim == 3 {
            self.cells + 1
        } else {
            1
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes_per_axis() * self.nodes_per_axis() * self.nz()
    }

    /// Coordinate of index `i` along any axis, computed as `(i - N/2) h` so
    /// that the center index maps to exactly zero and reflected indices map
    /// to exactly negated coordinates.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - self.center() as f64) * self.spacing()
    }

    /// Physical position of a node; `z` is zero in 2D.
    pub fn point(&self, n: NodeIndex) -> [f64; 3] {
        let z = if self.dim == 3 { self.coord(n.k) } else { 0.0 };
        [self.coord(n.i), self.coord(n.j), z]
    }

    pub fn contains(&self, n: NodeIndex) -> bool {
        n.i <= self.cells && n.j <= self.cells && n.k < self.nz()
    }

    pub fn check(&self, n: NodeIndex) -> Result<()> {
        if self.contains(n) {
            Ok(())
        } else {
            Err(Error::NodeOutOfRange {
                i: n.i,
                j: n.j,
                k: n.k,
                cells: self.cells,
            })
        }
    }

    pub fn linear(&self, n: NodeIndex) -> usize {
        let m = self.nodes_per_axis();
        n.i + m * (n.j + m * n.k)
    }

    pub fn node(&self, linear: usize) -> NodeIndex {
        let m = self.nodes_per_axis();
        NodeIndex::new(linear % m, (linear / m) % m, linear / (m * m))
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeIndex> + '_ {
        (0..self.node_count()).map(move |l| self.node(l))
    }

    /// Point reflection `(x, y[, z]) -> (-x, -y[, z])`.
    pub fn reflect_xy(&self, n: NodeIndex) -> Result<NodeIndex> {
        self.check(n)?;
        Ok(NodeIndex::new(self.cells - n.i, self.cells - n.j, n.k))
    }

    pub(crate) fn reflect_xy_unchecked(&self, n: NodeIndex) -> NodeIndex {
        NodeIndex::new(self.cells - n.i, self.cells - n.j, n.k)
    }

    /// Number of nodes on one side of the domain.
    pub fn side_len(&self) -> usize {
        let m = self.nodes_per_axis();
        if self.dim == 3 {
            m * m
        } else {
            m
        }
    }

    /// Nodes of a side, ordered lexicographically in the tangential axes.
    pub fn side_nodes(&self, side: Side) -> Vec<NodeIndex> {
        self.nodes().filter(|&n| side.contains(self, n)).collect()
    }

    /// Position of `n` in [`Grid::side_nodes`]; `n` must lie on the side.
    pub fn side_position(&self, side: Side, n: NodeIndex) -> usize {
        let m = self.nodes_per_axis();
        match side.axis() {
            0 => n.j + m * n.k,
            1 => n.i + m * n.k,
            _ => n.i + m * n.j,
        }
    }

    /// Closed node set of a subdomain, in local-index order.
    pub fn subdomain_nodes(&self, id: SubdomainId) -> Vec<NodeIndex> {
        let layout = LocalLayout::new(*self);
        (0..layout.len())
            .map(|l| layout.to_global(id, layout.local(l)))
            .collect()
    }

    /// Oriented interface `Γ_{owner,neighbor}`, nodes ordered from the outer
    /// boundary toward the cross-point (per `z` layer in 3D).
    pub fn interface(&self, owner: SubdomainId, neighbor: SubdomainId) -> Result<OrientedInterface> {
        let axis = owner.interface_axis(neighbor)?;
        let layout = LocalLayout::new(*self);
        let half = self.center();
        let mut local = Vec::with_capacity((half + 1) * self.nz());
        for c in 0..self.nz() {
            for t in (0..=half).rev() {
                local.push(if axis == 0 {
                    LocalIndex::new(0, t, c)
                } else {
                    LocalIndex::new(t, 0, c)
                });
            }
        }
        let nodes = local.iter().map(|&l| layout.to_global(owner, l)).collect();
        Ok(OrientedInterface {
            owner,
            neighbor,
            axis,
            local,
            nodes,
        })
    }

    pub fn interfaces(&self) -> Vec<OrientedInterface> {
        SubdomainId::ALL
            .iter()
            .flat_map(|&o| {
                [o.x_neighbor(), o.y_neighbor()]
                    .into_iter()
                    .map(move |n| self.interface(o, n).expect("neighbors are adjacent"))
            })
            .collect()
    }
}

/// Quadrant subdomains: 1 bottom-left, 2 bottom-right, 3 top-right,
/// 4 top-left. In 3D each extends over all of `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubdomainId {
    One,
    Two,
    Three,
    Four,
}

impl SubdomainId {
    pub const ALL: [SubdomainId; 4] = [Self::One, Self::Two, Self::Three, Self::Four];
    /// White subdomains, solved first in each iteration.
    pub const WHITE: [SubdomainId; 2] = [Self::One, Self::Three];
    /// Gray subdomains, solved second.
    pub const GRAY: [SubdomainId; 2] = [Self::Two, Self::Four];

    pub fn new(value: u8) -> Result<Self> {
        match value {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            4 => Ok(Self::Four),
            _ => Err(Error::InvalidGrid(format!("subdomain id must be 1..=4, got {value}"))),
        }
    }

    pub fn value(self) -> u8 {
        self.index() as u8 + 1
    }

    /// Zero-based position, for indexing `[T; 4]`.
    pub fn index(self) -> usize {
        match self {
            Self::One => 0,
            Self::Two => 1,
            Self::Three => 2,
            Self::Four => 3,
        }
    }

    pub fn is_white(self) -> bool {
        matches!(self, Self::One | Self::Three)
    }

    /// `+1` if the subdomain lies at `x >= 0`, `-1` otherwise.
    pub fn x_sign(self) -> i8 {
        match self {
            Self::Two | Self::Three => 1,
            Self::One | Self::Four => -1,
        }
    }

    pub fn y_sign(self) -> i8 {
        match self {
            Self::Three | Self::Four => 1,
            Self::One | Self::Two => -1,
        }
    }

    /// Neighbor across the `x = 0` plane.
    pub fn x_neighbor(self) -> Self {
        match self {
            Self::One => Self::Two,
            Self::Two => Self::One,
            Self::Three => Self::Four,
            Self::Four => Self::Three,
        }
    }

    /// Neighbor across the `y = 0` plane.
    pub fn y_neighbor(self) -> Self {
        match self {
            Self::One => Self::Four,
            Self::Four => Self::One,
            Self::Two => Self::Three,
            Self::Three => Self::Two,
        }
    }

    /// Outer side of the domain touched in the `x` direction.
    pub fn x_side(self) -> Side {
        if self.x_sign() > 0 {
            Side::Right
        } else {
            Side::Left
        }
    }

    pub fn y_side(self) -> Side {
        if self.y_sign() > 0 {
            Side::Top
        } else {
            Side::Bottom
        }
    }

    /// Image under the point reflection `(x,y) -> (-x,-y)`.
    pub fn point_image(self) -> Self {
        match self {
            Self::One => Self::Three,
            Self::Three => Self::One,
            Self::Two => Self::Four,
            Self::Four => Self::Two,
        }
    }

    /// Normal axis of the interface shared with `neighbor`: 0 for the `x = 0`
    /// plane, 1 for `y = 0`.
    pub fn interface_axis(self, neighbor: Self) -> Result<usize> {
        if neighbor == self.x_neighbor() {
            Ok(0)
        } else if neighbor == self.y_neighbor() {
            Ok(1)
        } else {
            Err(Error::NotAdjacent(self, neighbor))
        }
    }
}

impl fmt::Display for SubdomainId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Ω{}", self.value())
    }
}

/// Sides of the domain. In 2D only the first four exist.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
    ZMinus,
    ZPlus,
}

impl Side {
    pub const PLANAR: [Side; 4] = [Side::Bottom, Side::Right, Side::Top, Side::Left];
    pub const ALL: [Side; 6] = [
        Side::Bottom,
        Side::Right,
        Side::Top,
        Side::Left,
        Side::ZMinus,
        Side::ZPlus,
    ];

    pub fn for_dim(dim: usize) -> &'static [Side] {
        if dim == 3 {
            &Self::ALL
        } else {
            &Self::PLANAR
        }
    }

    /// Axis normal to the side.
    pub fn axis(self) -> usize {
        match self {
            Side::Left | Side::Right => 0,
            Side::Bottom | Side::Top => 1,
            Side::ZMinus | Side::ZPlus => 2,
        }
    }

    /// Whether the side sits at the high end (`+1`) of its axis.
    pub fn is_high(self) -> bool {
        matches!(self, Side::Right | Side::Top | Side::ZPlus)
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Bottom => Side::Top,
            Side::Top => Side::Bottom,
            Side::ZMinus => Side::ZPlus,
            Side::ZPlus => Side::ZMinus,
        }
    }

    /// Image of the side under `(x,y,z) -> (-x,-y,z)`. The `z` faces map to
    /// themselves.
    pub fn reflected(self) -> Side {
        match self {
            Side::ZMinus | Side::ZPlus => self,
            s => s.opposite(),
        }
    }

    pub fn contains(self, grid: &Grid, n: NodeIndex) -> bool {
        let idx = match self.axis() {
            0 => n.i,
            1 => n.j,
            _ => {
                if grid.dim() != 3 {
                    return false;
                }
                n.k
            }
        };
        if self.is_high() {
            idx == grid.cells()
        } else {
            idx == 0
        }
    }

    /// Position in [`Side::ALL`].
    pub fn index(self) -> usize {
        match self {
            Side::Bottom => 0,
            Side::Right => 1,
            Side::Top => 2,
            Side::Left => 3,
            Side::ZMinus => 4,
            Side::ZPlus => 5,
        }
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.axis()] = if self.is_high() { 1.0 } else { -1.0 };
        v
    }

    /// Counterclockwise tangent in the `(x,y)` plane (`b: +x, r: +y, t: -x,
    /// l: -y`); zero for the `z` faces.
    pub fn tangent(self) -> [f64; 3] {
        match self {
            Side::Bottom => [1.0, 0.0, 0.0],
            Side::Right => [0.0, 1.0, 0.0],
            Side::Top => [-1.0, 0.0, 0.0],
            Side::Left => [0.0, -1.0, 0.0],
            Side::ZMinus | Side::ZPlus => [0.0; 3],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Bottom => "b",
            Side::Right => "r",
            Side::Top => "t",
            Side::Left => "l",
            Side::ZMinus => "z-",
            Side::ZPlus => "z+",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `Γ_ij` as seen from `owner`. `Γ_ij` and `Γ_ji` share their node set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrientedInterface {
    pub owner: SubdomainId,
    pub neighbor: SubdomainId,
    /// 0 for the `x = 0` plane, 1 for `y = 0`.
    pub axis: usize,
    /// Local indices in the owner's layout (identical in the neighbor's).
    pub local: Vec<LocalIndex>,
    pub nodes: Vec<NodeIndex>,
}

impl OrientedInterface {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LocalIndex {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl LocalIndex {
    pub const fn new(a: usize, b: usize, c: usize) -> Self {
        Self { a, b, c }
    }
}

/// Shape of one subdomain's closed node box in local indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalLayout {
    grid: Grid,
    m: usize,
    nz: usize,
}

impl LocalLayout {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            m: grid.center() + 1,
            nz: grid.nz(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Nodes per in-plane axis (`N/2 + 1`).
    pub fn side_len(&self) -> usize {
        self.m
    }

    pub fn nz(&self) -> usize {
        self.nz
    }

    pub fn len(&self) -> usize {
        self.m * self.m * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn linear(&self, l: LocalIndex) -> usize {
        l.a + self.m * (l.b + self.m * l.c)
    }

    pub fn local(&self, linear: usize) -> LocalIndex {
        LocalIndex::new(
            linear % self.m,
            (linear / self.m) % self.m,
            linear / (self.m * self.m),
        )
    }

    pub fn to_global(&self, id: SubdomainId, l: LocalIndex) -> NodeIndex {
        let c = self.grid.center();
        let i = if id.x_sign() > 0 { c + l.a } else { c - l.a };
        let j = if id.y_sign() > 0 { c + l.b } else { c - l.b };
        NodeIndex::new(i, j, l.c)
    }

    /// Local index of a global node inside the closed subdomain `id`.
    pub fn to_local(&self, id: SubdomainId, n: NodeIndex) -> Option<LocalIndex> {
        let c = self.grid.center() as isize;
        let a = (n.i as isize - c) * id.x_sign() as isize;
        let b = (n.j as isize - c) * id.y_sign() as isize;
        if a < 0 || b < 0 || a > c || b > c || n.k >= self.nz {
            return None;
        }
        Some(LocalIndex::new(a as usize, b as usize, n.k))
    }
}
