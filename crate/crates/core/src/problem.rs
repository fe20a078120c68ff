//! Model problem `-Δu = f` on `(-1,1)^d` with Dirichlet or Robin data per
//! side, the symmetric-boundary-condition check, the four reference examples,
//! and compatible initial guesses.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::field::{split_even_odd, Field, Parity};
use crate::grid::{Grid, NodeIndex, Side, SubdomainId};

/// Condition on one side, with data sampled at the side nodes in
/// [`Grid::side_nodes`] order. Neumann is Robin with `p = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    Dirichlet { g: Vec<f64> },
    Robin { p: Vec<f64>, g: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcKind {
    Dirichlet,
    Robin,
}

impl BoundaryCondition {
    pub fn kind(&self) -> BcKind {
        match self {
            BoundaryCondition::Dirichlet { .. } => BcKind::Dirichlet,
            BoundaryCondition::Robin { .. } => BcKind::Robin,
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        self.kind() == BcKind::Dirichlet
    }

    pub fn g(&self) -> &[f64] {
        match self {
            BoundaryCondition::Dirichlet { g } | BoundaryCondition::Robin { g, .. } => g,
        }
    }

    pub fn p(&self) -> Option<&[f64]> {
        match self {
            BoundaryCondition::Robin { p, .. } => Some(p),
            BoundaryCondition::Dirichlet { .. } => None,
        }
    }
}

/// Source and boundary data of one problem on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    name: String,
    grid: Grid,
    source: Field,
    sides: Vec<BoundaryCondition>,
    initial_guess: Option<Field>,
}

impl ProblemSpec {
    pub fn builder(grid: Grid) -> ProblemBuilder {
        ProblemBuilder::new(grid)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn source(&self) -> &Field {
        &self.source
    }

    pub fn side(&self, side: Side) -> &BoundaryCondition {
        &self.sides[side.index()]
    }

    pub fn sides(&self) -> impl Iterator<Item = (Side, &BoundaryCondition)> {
        Side::for_dim(self.grid.dim()).iter().map(|&s| (s, &self.sides[s.index()]))
    }

    /// Boundary value `g` of `side` at node `n` (which must lie on it).
    pub fn g_at(&self, side: Side, n: NodeIndex) -> f64 {
        self.side(side).g()[self.grid.side_position(side, n)]
    }

    /// Robin coefficient of `side` at `n`, `None` on Dirichlet sides.
    pub fn p_at(&self, side: Side, n: NodeIndex) -> Option<f64> {
        self.side(side).p().map(|p| p[self.grid.side_position(side, n)])
    }

    /// The recorded initial guess, if any.
    pub fn initial_guess(&self) -> Option<&Field> {
        self.initial_guess.as_ref()
    }

    /// Recorded initial guess, or a compatible one built from the data.
    pub fn initial_guess_or_compatible(&self) -> Result<Field> {
        match &self.initial_guess {
            Some(u0) => Ok(u0.clone()),
            None => build_compatible_initial_guess(self),
        }
    }

    pub fn with_initial_guess(mut self, guess: Field) -> Result<Self> {
        if guess.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        self.initial_guess = Some(guess);
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Even or odd part of the data: source and boundary values are split
    /// under `(x,y) -> (-x,-y)` (side `σ` pairs with its reflected side),
    /// Robin coefficients are kept. Requires symmetric conditions.
    pub fn parity_part(&self, parity: Parity) -> Result<ProblemSpec> {
        validate_symmetric_bc(self)?;
        let g = self.grid;
        let s = parity.sign();
        let sides = Side::ALL
            .iter()
            .map(|&side| {
                let bc = &self.sides[side.index()];
                if g.dim() == 2 && side.axis() == 2 {
                    return bc.clone();
                }
                let mirror = self.side(side.reflected());
                let data: Vec<f64> = g
                    .side_nodes(side)
                    .into_iter()
                    .map(|n| {
                        let a = bc.g()[g.side_position(side, n)];
                        let r = g.reflect_xy_unchecked(n);
                        let b = mirror.g()[g.side_position(side.reflected(), r)];
                        0.5 * (a + s * b)
                    })
                    .collect();
                match bc {
                    BoundaryCondition::Dirichlet { .. } => BoundaryCondition::Dirichlet { g: data },
                    BoundaryCondition::Robin { p, .. } => BoundaryCondition::Robin {
                        p: p.clone(),
                        g: data,
                    },
                }
            })
            .collect();
        let pick = |f: &Field| {
            let pair = split_even_odd(f);
            match parity {
                Parity::Even => pair.even,
                Parity::Odd => pair.odd,
            }
        };
        Ok(ProblemSpec {
            name: format!("{}[{parity}]", self.name),
            grid: g,
            source: pick(&self.source),
            sides,
            initial_guess: self.initial_guess.as_ref().map(pick),
        })
    }

    /// True when all boundary data and the source vanish.
    pub fn is_homogeneous(&self) -> bool {
        self.source.max_abs() == 0.0 && self.sides().all(|(_, bc)| bc.g().iter().all(|&v| v == 0.0))
    }
}

/// Collects data as closures of the position `[x, y, z]` and samples them.
pub struct ProblemBuilder {
    grid: Grid,
    name: String,
    source: Option<Field>,
    sides: Vec<Option<BoundaryCondition>>,
    initial_guess: Option<Field>,
}

impl ProblemBuilder {
    pub fn new(grid: Grid) -> Self {
        Self {
            grid,
            name: "custom".into(),
            source: None,
            sides: vec![None; 6],
            initial_guess: None,
        }
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn source(mut self, f: impl Fn([f64; 3]) -> f64) -> Self {
        self.source = Some(Field::from_fn(self.grid, f));
        self
    }

    pub fn source_field(mut self, f: Field) -> Self {
        self.source = Some(f);
        self
    }

    fn sample(&self, side: Side, f: &dyn Fn([f64; 3]) -> f64) -> Vec<f64> {
        self.grid
            .side_nodes(side)
            .into_iter()
            .map(|n| f(self.grid.point(n)))
            .collect()
    }

    pub fn dirichlet(mut self, side: Side, g: impl Fn([f64; 3]) -> f64) -> Self {
        let g = self.sample(side, &g);
        self.sides[side.index()] = Some(BoundaryCondition::Dirichlet { g });
        self
    }

    /// `(∂_n + p) u = g` on `side`.
    pub fn robin(mut self, side: Side, p: impl Fn([f64; 3]) -> f64, g: impl Fn([f64; 3]) -> f64) -> Self {
        let p = self.sample(side, &p);
        let g = self.sample(side, &g);
        self.sides[side.index()] = Some(BoundaryCondition::Robin { p, g });
        self
    }

    pub fn neumann(self, side: Side, g: impl Fn([f64; 3]) -> f64) -> Self {
        self.robin(side, |_| 0.0, g)
    }

    pub fn dirichlet_everywhere(mut self, g: impl Fn([f64; 3]) -> f64) -> Self {
        for &side in Side::for_dim(self.grid.dim()) {
            let v = self.sample(side, &g);
            self.sides[side.index()] = Some(BoundaryCondition::Dirichlet { g: v });
        }
        self
    }

    pub fn initial_guess(mut self, u0: Field) -> Self {
        self.initial_guess = Some(u0);
        self
    }

    pub fn build(self) -> Result<ProblemSpec> {
        let grid = self.grid;
        let source = self.source.unwrap_or_else(|| Field::zeros(grid));
        if source.grid() != grid {
            return Err(Error::GridMismatch);
        }
        if let Some(n) = source.first_non_finite() {
            return Err(Error::InvalidBoundary(format!("source is not finite at {n}")));
        }
        let mut sides = Vec::with_capacity(6);
        for side in Side::ALL {
            let active = Side::for_dim(grid.dim()).contains(&side);
            match (&self.sides[side.index()], active) {
                (Some(_), false) => {
                    return Err(Error::InvalidBoundary(format!("side {side} does not exist in 2D")));
                }
                (None, true) => {
                    return Err(Error::InvalidBoundary(format!("no condition on side {side}")));
                }
                (None, false) => sides.push(BoundaryCondition::Dirichlet { g: Vec::new() }),
                (Some(bc), true) => {
                    if bc.g().iter().any(|v| !v.is_finite()) {
                        return Err(Error::InvalidBoundary(format!("non-finite data on side {side}")));
                    }
                    if let Some(p) = bc.p() {
                        if let Some(v) = p.iter().find(|&&v| !v.is_finite() || v < 0.0) {
                            return Err(Error::InvalidBoundary(format!(
                                "Robin coefficient {v} on side {side} must be finite and nonnegative"
                            )));
                        }
                    }
                    sides.push(bc.clone());
                }
            }
        }
        let active = Side::for_dim(grid.dim());
        let all_robin = active.iter().all(|s| !sides[s.index()].is_dirichlet());
        let some_positive = active
            .iter()
            .any(|s| sides[s.index()].p().is_some_and(|p| p.iter().any(|&v| v > 0.0)));
        if all_robin && !some_positive {
            return Err(Error::InvalidBoundary(
                "every side is Robin but the coefficient vanishes everywhere".into(),
            ));
        }
        if let Some(u0) = &self.initial_guess {
            if u0.grid() != grid {
                return Err(Error::GridMismatch);
            }
        }
        Ok(ProblemSpec {
            name: self.name,
            grid,
            source,
            sides,
            initial_guess: self.initial_guess,
        })
    }
}

/// Which clause makes a set of conditions symmetric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetryClause {
    /// No Robin side.
    NoRobin,
    /// No Dirichlet side and an even Robin coefficient.
    NoDirichlet,
    /// Left/right share a kind, bottom/top share a kind, `p` even.
    OppositePairs,
}

impl fmt::Display for SymmetryClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymmetryClause::NoRobin => "no Robin side",
            SymmetryClause::NoDirichlet => "no Dirichlet side, even Robin coefficient",
            SymmetryClause::OppositePairs => "opposite sides share their kind",
        })
    }
}

/// Accepts conditions under which the even/odd split commutes with solving.
/// In 3D only the four `(x,y)` sides take part in the clauses; Robin
/// coefficients on the `z` faces must be even within each face.
pub fn validate_symmetric_bc(spec: &ProblemSpec) -> Result<SymmetryClause> {
    let g = spec.grid;
    let kinds = Side::PLANAR.map(|s| spec.side(s).kind());
    let p_even = |side: Side| -> Result<()> {
        let (Some(p), Some(q)) = (spec.side(side).p(), spec.side(side.reflected()).p()) else {
            return Ok(());
        };
        for n in g.side_nodes(side) {
            let a = p[g.side_position(side, n)];
            let r = g.reflect_xy_unchecked(n);
            let b = q[g.side_position(side.reflected(), r)];
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::NotSymmetric(format!(
                    "Robin coefficient is not even: p = {a} on side {side} at {n} but {b} at {r}"
                )));
            }
        }
        Ok(())
    };
    let check_p = || -> Result<()> {
        for &side in Side::for_dim(g.dim()) {
            p_even(side)?;
        }
        Ok(())
    };

    if kinds.iter().all(|&k| k == BcKind::Dirichlet) {
        check_p()?;
        return Ok(SymmetryClause::NoRobin);
    }
    if kinds.iter().all(|&k| k == BcKind::Robin) {
        check_p()?;
        return Ok(SymmetryClause::NoDirichlet);
    }
    let lr = spec.side(Side::Left).kind() == spec.side(Side::Right).kind();
    let bt = spec.side(Side::Bottom).kind() == spec.side(Side::Top).kind();
    if !lr || !bt {
        let pair = if !lr { "l and r" } else { "b and t" };
        return Err(Error::NotSymmetric(format!(
            "mixed Dirichlet and Robin sides, and {pair} differ in kind"
        )));
    }
    check_p()?;
    Ok(SymmetryClause::OppositePairs)
}

/// The four reference problems. 1 and 2 are 2D, 3 and 4 are 3D; all use the
/// zero initial guess.
pub fn example_catalog(example: u8, grid: Grid) -> Result<ProblemSpec> {
    let expected = match example {
        1 | 2 => 2,
        3 | 4 => 3,
        _ => return Err(Error::UnknownExample(example)),
    };
    if grid.dim() != expected {
        return Err(Error::DimensionMismatch {
            example,
            expected,
            got: grid.dim(),
        });
    }
    let zero = |_: [f64; 3]| 0.0;
    let b = ProblemSpec::builder(grid)
        .name(format!("example{example}"))
        .initial_guess(Field::zeros(grid));
    let b = match example {
        1 | 2 => {
            let b = b
                .dirichlet(Side::Left, zero)
                .dirichlet(Side::Right, zero)
                .neumann(Side::Bottom, zero)
                .neumann(Side::Top, zero);
            if example == 1 {
                b.source(|_| 1.0)
            } else {
                b.source(|p| (PI * p[0]).sin() * (PI * p[1] / 2.0).cos())
            }
        }
        3 => b.dirichlet_everywhere(zero).source(|_| 1.0),
        _ => b
            .dirichlet_everywhere(zero)
            .source(|p| (PI * p[0]).sin() * p[1] * p[1] * p[2]),
    };
    b.build()
}

/// Target values of a compatible initial guess at one boundary cross-point
/// node: trace `alpha`, outward normal derivative `beta`, counterclockwise
/// tangential derivative `gamma`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrosspointTarget {
    /// `x_i` lies on `Γ_{i,i+1}`.
    pub id: SubdomainId,
    pub side: Side,
    /// `z` layer (0 in 2D).
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrosspointData {
    pub targets: Vec<CrosspointTarget>,
}

/// Side hit by `Γ_{i,i+1}`: `x_1` on b, `x_2` on r, `x_3` on t, `x_4` on l.
pub fn crosspoint_side(id: SubdomainId) -> Side {
    match id {
        SubdomainId::One => Side::Bottom,
        SubdomainId::Two => Side::Right,
        SubdomainId::Three => Side::Top,
        SubdomainId::Four => Side::Left,
    }
}

/// Grid node of the boundary cross-point `x_i` in layer `k`.
pub fn crosspoint_node(grid: Grid, id: SubdomainId, k: usize) -> NodeIndex {
    let c = grid.center();
    let n = grid.cells();
    match crosspoint_side(id) {
        Side::Bottom => NodeIndex::new(c, 0, k),
        Side::Right => NodeIndex::new(n, c, k),
        Side::Top => NodeIndex::new(c, n, k),
        _ => NodeIndex::new(0, c, k),
    }
}

fn step(n: NodeIndex, dir: [f64; 3], t: isize) -> NodeIndex {
    let mv = |i: usize, d: f64| (i as isize + d as isize * t) as usize;
    NodeIndex::new(mv(n.i, dir[0]), mv(n.j, dir[1]), mv(n.k, dir[2]))
}

/// Trace, normal and tangential targets at each boundary cross-point.
///
/// Dirichlet side: `alpha = g`, `gamma = g'` (centered difference along the
/// side), `beta = 0`. Robin side: `alpha = 0`, `beta = g`, `gamma = 0`, which
/// satisfies `(∂_n + p) u = g` for any `p`.
pub fn crosspoint_targets(spec: &ProblemSpec) -> CrosspointData {
    let g = spec.grid;
    let h = g.spacing();
    let mut targets = Vec::new();
    for k in 0..g.nz() {
        for id in SubdomainId::ALL {
            let side = crosspoint_side(id);
            let x = crosspoint_node(g, id, k);
            let gv = spec.g_at(side, x);
            let (alpha, beta, gamma) = if spec.side(side).is_dirichlet() {
                let tau = side.tangent();
                let fwd = spec.g_at(side, step(x, tau, 1));
                let bwd = spec.g_at(side, step(x, tau, -1));
                (gv, 0.0, (fwd - bwd) / (2.0 * h))
            } else {
                (0.0, gv, 0.0)
            };
            targets.push(CrosspointTarget {
                id,
                side,
                k,
                alpha,
                beta,
                gamma,
            });
        }
    }
    CrosspointData { targets }
}

/// Piecewise cubic guess hitting the given targets.
///
/// For each target with outward coordinate `s = n·x` and tangential
/// coordinate `t = τ·x`, adds `a s³ + b s² + γ s² t` on `s ≥ 0` with
/// `a + b = α`, `3a + 2b = β`. The pieces are `C¹` across `s = 0` and vanish
/// with their first derivatives at the other cross-points.
pub fn build_from_targets(grid: Grid, data: &CrosspointData) -> Field {
    let mut u = Field::zeros(grid);
    for n in grid.nodes() {
        let pt = grid.point(n);
        let mut v = 0.0;
        for tg in data.targets.iter().filter(|t| t.k == n.k) {
            let nv = tg.side.normal();
            let tv = tg.side.tangent();
            let s = nv[0] * pt[0] + nv[1] * pt[1];
            if s < 0.0 {
                continue;
            }
            let t = tv[0] * pt[0] + tv[1] * pt[1];
            let a = tg.beta - 2.0 * tg.alpha;
            let b = 3.0 * tg.alpha - tg.beta;
            v += a * s * s * s + b * s * s + tg.gamma * s * s * t;
        }
        u.set(n, v);
    }
    u
}

pub fn build_compatible_initial_guess(spec: &ProblemSpec) -> Result<Field> {
    validate_symmetric_bc(spec)?;
    Ok(build_from_targets(spec.grid, &crosspoint_targets(spec)))
}

/// One evaluated compatibility condition.
#[derive(Clone, Debug, PartialEq)]
pub struct GuessCheck {
    pub id: SubdomainId,
    pub side: Side,
    pub k: usize,
    pub condition: &'static str,
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GuessReport {
    pub checks: Vec<GuessCheck>,
    pub max_violation: f64,
}

/// Evaluates the compatibility conditions at every boundary cross-point with
/// second-order one-sided differences. Tangential derivatives are taken on
/// both sides of the cross-point, each within one subdomain.
pub fn check_initial_guess(spec: &ProblemSpec, guess: &Field) -> Result<GuessReport> {
    let g = spec.grid;
    if guess.grid() != g {
        return Err(Error::GridMismatch);
    }
    let h = g.spacing();
    let one_sided = |x: NodeIndex, dir: [f64; 3]| -> f64 {
        (-3.0 * guess.at(x) + 4.0 * guess.at(step(x, dir, 1)) - guess.at(step(x, dir, 2))) / (2.0 * h)
    };
    let mut checks = Vec::new();
    for k in 0..g.nz() {
        for id in SubdomainId::ALL {
            let side = crosspoint_side(id);
            let x = crosspoint_node(g, id, k);
            let gv = spec.g_at(side, x);
            let mut push = |condition, violation: f64| {
                checks.push(GuessCheck {
                    id,
                    side,
                    k,
                    condition,
                    violation,
                })
            };
            match spec.side(side) {
                BoundaryCondition::Dirichlet { .. } => {
                    push("trace", (guess.at(x) - gv).abs());
                    let tau = side.tangent();
                    let back = tau.map(|c| -c);
                    let target = (spec.g_at(side, step(x, tau, 1)) - spec.g_at(side, step(x, tau, -1))) / (2.0 * h);
                    push("tangential (+)", (one_sided(x, tau) - target).abs());
                    push("tangential (-)", (-one_sided(x, back) - target).abs());
                }
                BoundaryCondition::Robin { .. } => {
                    let inward = side.normal().map(|c| -c);
                    let dn = -one_sided(x, inward);
                    let p = spec.p_at(side, x).unwrap_or(0.0);
                    push("robin", (dn + p * guess.at(x) - gv).abs());
                }
            }
        }
    }
    let max_violation = checks.iter().map(|c| c.violation).fold(0.0, f64::max);
    Ok(GuessReport { checks, max_violation })
}
