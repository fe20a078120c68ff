//! Finite-difference systems on the whole domain or on one closed subdomain.
//!
//! Rows are written as vertex-centered cell balances and scaled by `h²`:
//!
//! ```text
//! Σ_e w_e (u_n - u_nb) + Σ_Robin h a p u = h² f vol + Σ_Robin h a g + Σ_flux h a q
//! ```
//!
//! where `vol`, `w_e` and the face weight `a` are products of the per-axis
//! dual fractions (½ at a box end, 1 elsewhere). Away from the boundary this
//! is the 5-point (2D) or 7-point (3D) Laplacian; on a Robin side it equals
//! the ghost-node elimination `u_ghost = u_in - 2h (p u - g)` scaled by the
//! dual fractions, which keeps the matrix symmetric.
//!
//! Subdomains are assembled in their local index order (see
//! [`crate::grid::LocalLayout`]), so subdomains related by a reflection and
//! carrying the same conditions get identical matrices.
//!
//! Node precedence on a box boundary: outer Dirichlet, then interface
//! Dirichlet (data averaged over the Dirichlet faces meeting at the node),
//! otherwise a balance row with every Robin and flux face term.

use crate::error::{Error, Result};
use crate::field::{Field, LocalField};
use crate::grid::{Grid, LocalLayout, NodeIndex, OrientedInterface, Side, SubdomainId};
use crate::linsolve::{factorize, Factorization, SparseMatrix};
use crate::problem::{BoundaryCondition, ProblemSpec};

/// Default penalty parameter.
pub const DEFAULT_PENALTY_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum DirichletMode {
    /// Dirichlet nodes are eliminated.
    #[default]
    Strong,
    /// `(1/ε)(u - g)` added to the node's balance row. Used only in boxes
    /// that also carry a Robin or flux face; pure Dirichlet boxes stay strong.
    Penalty(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Whole,
    Sub(SubdomainId),
}

/// A face of a box: the low or high end of one local axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Face {
    pub axis: usize,
    pub high: bool,
}

impl Face {
    pub fn index(self) -> usize {
        2 * self.axis + self.high as usize
    }

    fn from_index(i: usize) -> Self {
        Face {
            axis: i / 2,
            high: i % 2 == 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceRole {
    Outer(Side),
    /// Interface with the given neighbor.
    Interface(SubdomainId),
}

/// Node box of a region with its local indexing and dual-cell weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoxGeom {
    grid: Grid,
    region: Region,
    dims: [usize; 3],
}

impl BoxGeom {
    pub fn new(grid: Grid, region: Region) -> Self {
        let dims = match region {
            Region::Whole => [grid.nodes_per_axis(), grid.nodes_per_axis(), grid.nz()],
            Region::Sub(_) => {
                let l = LocalLayout::new(grid);
                [l.side_len(), l.side_len(), l.nz()]
            }
        };
        Self { grid, region, dims }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn faces(&self) -> impl Iterator<Item = Face> {
        (0..2 * self.dim()).map(Face::from_index)
    }

    pub fn role(&self, face: Face) -> FaceRole {
        match (self.region, face.axis, face.high) {
            (_, 2, false) => FaceRole::Outer(Side::ZMinus),
            (_, 2, true) => FaceRole::Outer(Side::ZPlus),
            (Region::Whole, 0, false) => FaceRole::Outer(Side::Left),
            (Region::Whole, 0, true) => FaceRole::Outer(Side::Right),
            (Region::Whole, _, false) => FaceRole::Outer(Side::Bottom),
            (Region::Whole, _, true) => FaceRole::Outer(Side::Top),
            (Region::Sub(id), 0, false) => FaceRole::Interface(id.x_neighbor()),
            (Region::Sub(id), 0, true) => FaceRole::Outer(id.x_side()),
            (Region::Sub(id), _, false) => FaceRole::Interface(id.y_neighbor()),
            (Region::Sub(id), _, true) => FaceRole::Outer(id.y_side()),
        }
    }

    /// Face carrying the given role, if the box has one.
    pub fn face_of(&self, role: FaceRole) -> Option<Face> {
        self.faces().find(|&f| self.role(f) == role)
    }

    pub fn index(&self, l: usize) -> [usize; 3] {
        let [d0, d1, _] = self.dims;
        [l % d0, (l / d0) % d1, l / (d0 * d1)]
    }

    pub fn linear(&self, t: [usize; 3]) -> usize {
        t[0] + self.dims[0] * (t[1] + self.dims[1] * t[2])
    }

    pub fn global(&self, l: usize) -> NodeIndex {
        let t = self.index(l);
        match self.region {
            Region::Whole => NodeIndex::new(t[0], t[1], t[2]),
            Region::Sub(id) => LocalLayout::new(self.grid).to_global(id, crate::grid::LocalIndex::new(t[0], t[1], t[2])),
        }
    }

    pub fn on_face(&self, t: [usize; 3], face: Face) -> bool {
        if face.axis >= self.dim() {
            return false;
        }
        if face.high {
            t[face.axis] + 1 == self.dims[face.axis]
        } else {
            t[face.axis] == 0
        }
    }

    fn face_mask(&self, t: [usize; 3]) -> u8 {
        self.faces()
            .filter(|&f| self.on_face(t, f))
            .fold(0, |m, f| m | (1 << f.index()))
    }

    fn tangential(&self, face: Face) -> (usize, Option<usize>) {
        let others: Vec<usize> = (0..self.dim()).filter(|&a| a != face.axis).collect();
        (others[0], others.get(1).copied())
    }

    pub fn face_len(&self, face: Face) -> usize {
        let (a, b) = self.tangential(face);
        self.dims[a] * b.map_or(1, |b| self.dims[b])
    }

    /// Position of a face node in the face data arrays.
    pub fn face_pos(&self, t: [usize; 3], face: Face) -> usize {
        let (a, b) = self.tangential(face);
        t[a] + self.dims[a] * b.map_or(0, |b| t[b])
    }

    /// Local linear indices of the face nodes, in face-position order.
    pub fn face_nodes(&self, face: Face) -> Vec<usize> {
        let mut out = vec![0; self.face_len(face)];
        for l in 0..self.len() {
            let t = self.index(l);
            if self.on_face(t, face) {
                out[self.face_pos(t, face)] = l;
            }
        }
        out
    }

    fn frac(&self, axis: usize, t: usize) -> f64 {
        if t == 0 || t + 1 == self.dims[axis] {
            0.5
        } else {
            1.0
        }
    }

    /// Dual-cell volume fraction.
    pub fn vol(&self, t: [usize; 3]) -> f64 {
        (0..self.dim()).map(|a| self.frac(a, t[a])).product()
    }

    /// Weight of the dual face normal to `axis`: edge weight for edges along
    /// `axis` and area fraction of boundary faces normal to it.
    pub fn weight(&self, t: [usize; 3], axis: usize) -> f64 {
        (0..self.dim()).filter(|&a| a != axis).map(|a| self.frac(a, t[a])).product()
    }
}

/// Condition on one box face, with nodal data in face-position order.
#[derive(Clone, Debug, PartialEq)]
pub enum FaceCondition {
    Dirichlet(Vec<f64>),
    Robin { p: Vec<f64>, g: Vec<f64> },
    /// Prescribed outward normal derivative `∂_n u = q`.
    Flux(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceKind {
    Dirichlet,
    Robin,
    Flux,
}

impl FaceCondition {
    pub fn kind(&self) -> FaceKind {
        match self {
            FaceCondition::Dirichlet(_) => FaceKind::Dirichlet,
            FaceCondition::Robin { .. } => FaceKind::Robin,
            FaceCondition::Flux(_) => FaceKind::Flux,
        }
    }

    fn data(&self) -> &[f64] {
        match self {
            FaceCondition::Dirichlet(v) | FaceCondition::Flux(v) => v,
            FaceCondition::Robin { g, .. } => g,
        }
    }
}

/// Conditions on every face of a box.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionMap {
    geom: BoxGeom,
    faces: Vec<FaceCondition>,
}

impl ConditionMap {
    /// Outer faces from the problem data; interface faces start as
    /// homogeneous Dirichlet.
    pub fn from_spec(spec: &ProblemSpec, region: Region) -> Self {
        let geom = BoxGeom::new(spec.grid(), region);
        let faces = geom
            .faces()
            .map(|face| {
                let nodes = geom.face_nodes(face);
                match geom.role(face) {
                    FaceRole::Interface(_) => FaceCondition::Dirichlet(vec![0.0; nodes.len()]),
                    FaceRole::Outer(side) => {
                        let pick = |v: &[f64]| -> Vec<f64> {
                            nodes
                                .iter()
                                .map(|&l| v[spec.grid().side_position(side, geom.global(l))])
                                .collect()
                        };
                        match spec.side(side) {
                            BoundaryCondition::Dirichlet { g } => FaceCondition::Dirichlet(pick(g)),
                            BoundaryCondition::Robin { p, g } => FaceCondition::Robin { p: pick(p), g: pick(g) },
                        }
                    }
                }
            })
            .collect();
        Self { geom, faces }
    }

    pub fn geom(&self) -> &BoxGeom {
        &self.geom
    }

    pub fn face(&self, face: Face) -> &FaceCondition {
        &self.faces[face.index()]
    }

    pub fn set(&mut self, face: Face, cond: FaceCondition) -> Result<()> {
        if face.axis >= self.geom.dim() {
            return Err(Error::ConditionMismatch(format!("box has no face {face:?}")));
        }
        let len = self.geom.face_len(face);
        let got = cond.data().len();
        if got != len {
            return Err(Error::LengthMismatch { expected: len, got });
        }
        if let FaceCondition::Robin { p, .. } = &cond {
            if p.len() != len {
                return Err(Error::LengthMismatch {
                    expected: len,
                    got: p.len(),
                });
            }
        }
        self.faces[face.index()] = cond;
        Ok(())
    }

    /// Sets the condition on the interface shared with `neighbor`.
    pub fn set_interface(&mut self, neighbor: SubdomainId, cond: FaceCondition) -> Result<()> {
        let face = self.interface_face(neighbor)?;
        self.set(face, cond)
    }

    pub fn interface_face(&self, neighbor: SubdomainId) -> Result<Face> {
        match self.geom.face_of(FaceRole::Interface(neighbor)) {
            Some(f) => Ok(f),
            None => match self.geom.region {
                Region::Sub(id) => Err(Error::NotAdjacent(id, neighbor)),
                Region::Whole => Err(Error::ConditionMismatch("the whole domain has no interfaces".into())),
            },
        }
    }

    fn kinds(&self) -> Vec<FaceKind> {
        self.faces.iter().map(FaceCondition::kind).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    Free,
    Pinned,
    Penalized,
}

/// Linear system of one box: unknowns are the non-eliminated nodes in local
/// order.
#[derive(Clone, Debug, PartialEq)]
pub struct SubdomainSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Local node of each unknown.
    pub unknowns: Vec<usize>,
}

/// Matrix structure of a box for fixed face kinds and Robin coefficients.
#[derive(Clone, Debug)]
struct Structure {
    geom: BoxGeom,
    kinds: Vec<FaceKind>,
    robin_p: Vec<Option<Vec<f64>>>,
    penalty: Option<f64>,
    roles: Vec<Role>,
    /// Faces whose Dirichlet data set the node value.
    dmask: Vec<u8>,
    /// Robin and flux faces contributing to the node's row.
    fmask: Vec<u8>,
    unknown_of: Vec<usize>,
    unknowns: Vec<usize>,
    matrix: SparseMatrix,
}

const PINNED: usize = usize::MAX;

impl Structure {
    fn new(cmap: &ConditionMap, mode: DirichletMode) -> Result<Self> {
        let geom = cmap.geom;
        let kinds = cmap.kinds();
        let robin_p: Vec<Option<Vec<f64>>> = cmap
            .faces
            .iter()
            .map(|c| match c {
                FaceCondition::Robin { p, .. } => Some(p.clone()),
                _ => None,
            })
            .collect();
        for (i, p) in robin_p.iter().enumerate() {
            if let Some(v) = p.as_ref().and_then(|p| p.iter().find(|&&v| v.is_nan() || v < 0.0)) {
                return Err(Error::InvalidBoundary(format!(
                    "negative Robin coefficient {v} on face {:?}",
                    Face::from_index(i)
                )));
            }
        }
        let mixed = kinds.iter().any(|&k| k != FaceKind::Dirichlet);
        let penalty = match mode {
            DirichletMode::Penalty(eps) if mixed => {
                if eps.is_nan() || eps <= 0.0 || !eps.is_finite() {
                    return Err(Error::InvalidBoundary(format!("penalty parameter {eps} must be positive")));
                }
                Some(eps)
            }
            _ => None,
        };

        let mut outer_d = 0u8;
        let mut inner_d = 0u8;
        let mut flux = 0u8;
        for face in geom.faces() {
            let bit = 1 << face.index();
            match (kinds[face.index()], geom.role(face)) {
                (FaceKind::Dirichlet, FaceRole::Outer(_)) => outer_d |= bit,
                (FaceKind::Dirichlet, FaceRole::Interface(_)) => inner_d |= bit,
                _ => flux |= bit,
            }
        }

        let n = geom.len();
        let mut roles = Vec::with_capacity(n);
        let mut dmask = Vec::with_capacity(n);
        let mut fmask = Vec::with_capacity(n);
        let mut unknown_of = Vec::with_capacity(n);
        let mut unknowns = Vec::new();
        for l in 0..n {
            let m = geom.face_mask(geom.index(l));
            let d = if m & outer_d != 0 { m & outer_d } else { m & inner_d };
            let role = match (d != 0, penalty.is_some()) {
                (false, _) => Role::Free,
                (true, true) => Role::Penalized,
                (true, false) => Role::Pinned,
            };
            roles.push(role);
            dmask.push(d);
            fmask.push(m & flux);
            if role == Role::Pinned {
                unknown_of.push(PINNED);
            } else {
                unknown_of.push(unknowns.len());
                unknowns.push(l);
            }
        }
        if unknowns.is_empty() {
            return Err(Error::Singular("every node of the box is a Dirichlet node".into()));
        }
        let anchored = roles.iter().any(|&r| r != Role::Free)
            || robin_p.iter().flatten().any(|p| p.iter().any(|&v| v > 0.0));
        if !anchored {
            return Err(Error::Singular(
                "no Dirichlet node and vanishing Robin coefficient: the operator has a constant null space".into(),
            ));
        }

        let h = geom.grid.spacing();
        let dim = geom.dim();
        let mut trip = Vec::with_capacity(unknowns.len() * (2 * dim + 1));
        for (r, &l) in unknowns.iter().enumerate() {
            let t = geom.index(l);
            let mut diag = 0.0;
            for axis in 0..dim {
                let w = geom.weight(t, axis);
                for nb in neighbors(&geom, t, axis) {
                    diag += w;
                    let c = unknown_of[geom.linear(nb)];
                    if c != PINNED {
                        trip.push((r, c, -w));
                    }
                }
            }
            for face in faces_in(fmask[l]) {
                if let Some(p) = &robin_p[face.index()] {
                    diag += h * geom.weight(t, face.axis) * p[geom.face_pos(t, face)];
                }
            }
            if roles[l] == Role::Penalized {
                diag += 1.0 / penalty.expect("penalized node implies penalty");
            }
            trip.push((r, r, diag));
        }
        let matrix = SparseMatrix::from_triplets(unknowns.len(), &trip)?;
        Ok(Self {
            geom,
            kinds,
            robin_p,
            penalty,
            roles,
            dmask,
            fmask,
            unknown_of,
            unknowns,
            matrix,
        })
    }

    fn check(&self, cmap: &ConditionMap) -> Result<()> {
        if cmap.geom != self.geom {
            return Err(Error::ConditionMismatch("condition map belongs to another box".into()));
        }
        let kinds = cmap.kinds();
        if kinds != self.kinds {
            return Err(Error::ConditionMismatch(format!(
                "face kinds {kinds:?} differ from the assembled {:?}",
                self.kinds
            )));
        }
        for (face, p) in self.robin_p.iter().enumerate() {
            if let (Some(p), FaceCondition::Robin { p: q, .. }) = (p, &cmap.faces[face]) {
                if p != q {
                    return Err(Error::ConditionMismatch("Robin coefficient changed".into()));
                }
            }
        }
        Ok(())
    }

    /// Dirichlet value of a pinned or penalized node.
    fn dirichlet_value(&self, cmap: &ConditionMap, l: usize) -> f64 {
        let t = self.geom.index(l);
        let mut sum = 0.0;
        let mut count = 0.0;
        for face in faces_in(self.dmask[l]) {
            sum += cmap.face(face).data()[self.geom.face_pos(t, face)];
            count += 1.0;
        }
        sum / count
    }

    fn rhs(&self, source: &[f64], cmap: &ConditionMap) -> Vec<f64> {
        let g = &self.geom;
        let h = g.grid.spacing();
        let dim = g.dim();
        let mut b = vec![0.0; self.unknowns.len()];
        for (r, &l) in self.unknowns.iter().enumerate() {
            let t = g.index(l);
            let mut v = h * h * g.vol(t) * source[l];
            for face in faces_in(self.fmask[l]) {
                v += h * g.weight(t, face.axis) * cmap.face(face).data()[g.face_pos(t, face)];
            }
            for axis in 0..dim {
                let w = g.weight(t, axis);
                for nb in neighbors(g, t, axis) {
                    let nl = g.linear(nb);
                    if self.unknown_of[nl] == PINNED {
                        v += w * self.dirichlet_value(cmap, nl);
                    }
                }
            }
            if self.roles[l] == Role::Penalized {
                v += self.dirichlet_value(cmap, l) / self.penalty.expect("penalized node implies penalty");
            }
            b[r] = v;
        }
        b
    }

    fn expand(&self, x: &[f64], cmap: &ConditionMap) -> Vec<f64> {
        (0..self.geom.len())
            .map(|l| match self.unknown_of[l] {
                PINNED => self.dirichlet_value(cmap, l),
                r => x[r],
            })
            .collect()
    }

    /// Balance residual `Σ_e w_e (u_n - u_nb) - h² f vol + Σ_Robin h a (p u - g)`
    /// at local node `l`, i.e. `h Σ a ∂_n u` over the faces without data.
    fn residual(&self, u: &[f64], source: &[f64], cmap: &ConditionMap, l: usize) -> f64 {
        let g = &self.geom;
        let h = g.grid.spacing();
        let t = g.index(l);
        let mut r = -h * h * g.vol(t) * source[l];
        for axis in 0..g.dim() {
            let w = g.weight(t, axis);
            for nb in neighbors(g, t, axis) {
                r += w * (u[l] - u[g.linear(nb)]);
            }
        }
        for face in faces_in(g.face_mask(t)) {
            if let FaceCondition::Robin { p, g: data } = cmap.face(face) {
                let pos = g.face_pos(t, face);
                r += h * g.weight(t, face.axis) * (p[pos] * u[l] - data[pos]);
            }
        }
        r
    }
}

fn neighbors(g: &BoxGeom, t: [usize; 3], axis: usize) -> impl Iterator<Item = [usize; 3]> {
    let lo = (t[axis] > 0).then(|| {
        let mut s = t;
        s[axis] -= 1;
        s
    });
    let hi = (t[axis] + 1 < g.dims[axis]).then(|| {
        let mut s = t;
        s[axis] += 1;
        s
    });
    lo.into_iter().chain(hi)
}

fn faces_in(mask: u8) -> impl Iterator<Item = Face> {
    (0..6).filter(move |i| mask & (1 << i) != 0).map(Face::from_index)
}

fn gather_source(geom: &BoxGeom, source: &Field) -> Result<Vec<f64>> {
    if source.grid() != geom.grid {
        return Err(Error::GridMismatch);
    }
    Ok((0..geom.len()).map(|l| source.at(geom.global(l))).collect())
}

/// Assembles the system of one subdomain (or the whole domain) without
/// factorizing it.
pub fn assemble_system(
    source: &Field,
    cmap: &ConditionMap,
    mode: DirichletMode,
) -> Result<SubdomainSystem> {
    let s = Structure::new(cmap, mode)?;
    let f = gather_source(&s.geom, source)?;
    Ok(SubdomainSystem {
        rhs: s.rhs(&f, cmap),
        unknowns: s.unknowns.clone(),
        matrix: s.matrix,
    })
}

pub fn assemble_subdomain_system(
    id: SubdomainId,
    source: &Field,
    cmap: &ConditionMap,
    mode: DirichletMode,
) -> Result<SubdomainSystem> {
    if cmap.geom.region != Region::Sub(id) {
        return Err(Error::ConditionMismatch(format!("condition map is not for {id}")));
    }
    assemble_system(source, cmap, mode)
}

/// Factorized box operator with a fixed source. Condition data may change
/// between solves as long as face kinds and Robin coefficients stay fixed.
#[derive(Debug)]
pub struct BoxSolver {
    structure: Structure,
    factor: Factorization,
    source: Vec<f64>,
}

impl BoxSolver {
    pub fn new(source: &Field, cmap: &ConditionMap, mode: DirichletMode) -> Result<Self> {
        let structure = Structure::new(cmap, mode)?;
        let source = gather_source(&structure.geom, source)?;
        let factor = factorize(&structure.matrix)?;
        Ok(Self {
            structure,
            factor,
            source,
        })
    }

    pub fn geom(&self) -> &BoxGeom {
        &self.structure.geom
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.structure.matrix
    }

    /// Nodal values over the whole box, Dirichlet nodes included.
    pub fn solve(&self, cmap: &ConditionMap) -> Result<Vec<f64>> {
        self.structure.check(cmap)?;
        let mut x = self.structure.rhs(&self.source, cmap);
        self.factor.solve_in_place(&mut x)?;
        Ok(self.structure.expand(&x, cmap))
    }

    /// Values of `u` on a face, in face-position order.
    pub fn face_trace(&self, u: &[f64], face: Face) -> Vec<f64> {
        self.structure.geom.face_nodes(face).into_iter().map(|l| u[l]).collect()
    }

    /// Outward normal derivative on an interface face recovered from the
    /// discrete balance of each face node. Where several interface faces
    /// meet, the flux is shared in proportion to their areas.
    pub fn flux_trace(&self, u: &[f64], cmap: &ConditionMap, face: Face) -> Vec<f64> {
        let s = &self.structure;
        let g = &s.geom;
        let h = g.grid.spacing();
        let interfaces: u8 = g
            .faces()
            .filter(|&f| matches!(g.role(f), FaceRole::Interface(_)))
            .fold(0, |m, f| m | (1 << f.index()));
        g.face_nodes(face)
            .into_iter()
            .map(|l| {
                let t = g.index(l);
                let area: f64 = faces_in(g.face_mask(t) & interfaces)
                    .map(|f| g.weight(t, f.axis))
                    .sum();
                let area = if area > 0.0 { area } else { g.weight(t, face.axis) };
                s.residual(u, &self.source, cmap, l) / (h * area)
            })
            .collect()
    }
}

/// Monodomain discrete solution with the same stencils and boundary
/// handling as the subdomain solvers.
pub fn oracle_solve(spec: &ProblemSpec, mode: DirichletMode) -> Result<Field> {
    let cmap = ConditionMap::from_spec(spec, Region::Whole);
    let solver = BoxSolver::new(spec.source(), &cmap, mode)?;
    Field::from_values(spec.grid(), solver.solve(&cmap)?)
}

/// Owner's nodal values along an interface, in interface order.
pub fn trace_values(field: &LocalField, iface: &OrientedInterface) -> Result<Vec<f64>> {
    check_owner(field, iface)?;
    Ok(iface.local.iter().map(|&l| field.at(l)).collect())
}

/// Second-order one-sided outward normal derivative
/// `(3u₀ - 4u₁ + u₂) / 2h` along an interface.
pub fn normal_derivative_trace(field: &LocalField, iface: &OrientedInterface) -> Result<Vec<f64>> {
    check_owner(field, iface)?;
    let layout = field.layout();
    if layout.side_len() < 3 {
        return Err(Error::InvalidGrid("subdomain too thin for a one-sided difference".into()));
    }
    let h = field.grid().spacing();
    Ok(iface
        .local
        .iter()
        .map(|&l| {
            let at = |s: usize| {
                let mut k = l;
                if iface.axis == 0 {
                    k.a += s;
                } else {
                    k.b += s;
                }
                field.at(k)
            };
            (3.0 * at(0) - 4.0 * at(1) + at(2)) / (2.0 * h)
        })
        .collect())
}

fn check_owner(field: &LocalField, iface: &OrientedInterface) -> Result<()> {
    if field.id() != iface.owner {
        return Err(Error::ConditionMismatch(format!(
            "field lives on {} but the interface belongs to {}",
            field.id(),
            iface.owner
        )));
    }
    Ok(())
}
