//! Relaxed Dirichlet-Neumann iterations on the four quadrants.
//!
//! Each iteration has two half-steps. The white subdomains `Ω1, Ω3` solve
//! with relaxed data built from the previous iterate, then the gray ones
//! `Ω2, Ω4` solve with unrelaxed data taken from the fresh white solutions.
//! Which interfaces carry Dirichlet and which carry flux data is set by a
//! [`TransmissionPlan`].
//!
//! Interface fluxes are recovered from the discrete balance of the donor
//! (see [`BoxSolver::flux_trace`]), so the monodomain discrete solution is
//! an exact fixed point of the iteration.

use std::fmt;
use std::time::{Duration, Instant};

use crate::discretization::{oracle_solve, BoxSolver, ConditionMap, DirichletMode, Face, FaceCondition, Region};
use crate::error::{Error, Result};
use crate::field::{
    broken_h1_norm, broken_l2_norm, broken_max_abs, split_even_odd, Field, LocalField, Parity,
};
use crate::grid::SubdomainId;
use crate::problem::{check_initial_guess, validate_symmetric_bc, ProblemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Standard,
    New,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Standard => "standard",
            Method::New => "new",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParityMode {
    Even,
    Odd,
    /// Both parts, recombined after every iteration.
    Full,
}

impl ParityMode {
    fn parts(self) -> &'static [Parity] {
        match self {
            ParityMode::Even => &[Parity::Even],
            ParityMode::Odd => &[Parity::Odd],
            ParityMode::Full => &[Parity::Even, Parity::Odd],
        }
    }
}

impl fmt::Display for ParityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParityMode::Even => "even",
            ParityMode::Odd => "odd",
            ParityMode::Full => "full",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transmission {
    Dirichlet,
    Neumann,
}

/// Dirichlet or Neumann tag of every oriented interface `Γ_ij` (condition
/// imposed on `Ω_i`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TransmissionPlan {
    /// Indexed by owner, then 0 for the `x`-neighbor and 1 for the `y`-neighbor.
    tags: [[Transmission; 2]; 4],
}

impl TransmissionPlan {
    /// Whites Dirichlet everywhere, grays Neumann everywhere.
    pub fn standard() -> Self {
        let mut tags = [[Transmission::Dirichlet; 2]; 4];
        for id in SubdomainId::GRAY {
            tags[id.index()] = [Transmission::Neumann; 2];
        }
        Self { tags }
    }

    /// Dirichlet on `Γ14, Γ21, Γ32, Γ43`, Neumann on `Γ12, Γ23, Γ34, Γ41`.
    pub fn new_odd() -> Self {
        use SubdomainId::*;
        let mut plan = Self::standard();
        for (i, j) in [(One, Four), (Two, One), (Three, Two), (Four, Three)] {
            plan.set(i, j, Transmission::Dirichlet);
        }
        for (i, j) in [(One, Two), (Two, Three), (Three, Four), (Four, One)] {
            plan.set(i, j, Transmission::Neumann);
        }
        plan
    }

    pub fn for_method(method: Method, parity: Parity) -> Self {
        match (method, parity) {
            (Method::New, Parity::Odd) => Self::new_odd(),
            _ => Self::standard(),
        }
    }

    fn slot(owner: SubdomainId, neighbor: SubdomainId) -> Option<usize> {
        if owner.x_neighbor() == neighbor {
            Some(0)
        } else if owner.y_neighbor() == neighbor {
            Some(1)
        } else {
            None
        }
    }

    fn set(&mut self, owner: SubdomainId, neighbor: SubdomainId, t: Transmission) {
        let s = Self::slot(owner, neighbor).expect("plan pairs are adjacent");
        self.tags[owner.index()][s] = t;
    }

    pub fn tag(&self, owner: SubdomainId, neighbor: SubdomainId) -> Result<Transmission> {
        Self::slot(owner, neighbor)
            .map(|s| self.tags[owner.index()][s])
            .ok_or(Error::NotAdjacent(owner, neighbor))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DnOptions {
    pub theta: f64,
    pub max_iter: usize,
    /// Stop once the relative `L2` error is at or below this value.
    pub tol: f64,
    pub dirichlet: DirichletMode,
    /// Solve only `Ω1, Ω2` and mirror to `Ω3, Ω4` with the parity sign.
    pub exploit_symmetry: bool,
    /// Keep every iterate in the report.
    pub record_iterates: bool,
    /// Run the two solves of a half-step concurrently.
    pub parallel: bool,
}

impl Default for DnOptions {
    fn default() -> Self {
        Self {
            theta: 0.5,
            max_iter: 20,
            tol: 1e-12,
            dirichlet: DirichletMode::Strong,
            exploit_symmetry: false,
            record_iterates: false,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub l2_abs: f64,
    pub l2_rel: f64,
    pub h1_rel: f64,
    pub max_abs: f64,
    /// `l2_abs` over the previous one; none for the first iteration.
    pub ratio: Option<f64>,
    pub elapsed: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConvergenceEstimate {
    Factor(f64),
    /// The error vanished (to roundoff) from iteration 2 on.
    DirectSolve,
    /// Too few iterations above the roundoff floor.
    Insufficient,
}

impl ConvergenceEstimate {
    pub fn factor(self) -> Option<f64> {
        match self {
            ConvergenceEstimate::Factor(r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for ConvergenceEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvergenceEstimate::Factor(r) => write!(f, "{r}"),
            ConvergenceEstimate::DirectSolve => f.write_str("direct-solve"),
            ConvergenceEstimate::Insufficient => f.write_str("insufficient"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIter,
    NonContractive,
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIter => "max-iter",
            RunStatus::NonContractive => "non-contractive",
        })
    }
}

#[derive(Clone, Debug)]
pub struct DnReport {
    pub method: Method,
    pub parity: ParityMode,
    pub theta: f64,
    pub records: Vec<IterationRecord>,
    pub status: RunStatus,
    pub estimate: ConvergenceEstimate,
    /// Monodomain solution of the (parity part of the) problem.
    pub oracle: Field,
    pub final_fields: [LocalField; 4],
    /// Iterates `u^1, u^2, ...` when requested.
    pub iterates: Vec<[LocalField; 4]>,
    pub warnings: Vec<String>,
}

impl DnReport {
    /// Error `u_ex - u^k` of a recorded iterate, `k ≥ 1`.
    pub fn error_at(&self, k: usize) -> Option<[LocalField; 4]> {
        let u = self.iterates.get(k.checked_sub(1)?)?;
        Some(local_error(&self.oracle, u))
    }

    pub fn l2_history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.l2_abs).collect()
    }
}

fn local_error(oracle: &Field, u: &[LocalField; 4]) -> [LocalField; 4] {
    let ex = oracle.restrict_all();
    std::array::from_fn(|i| ex[i].sub(&u[i]).expect("same grid and subdomain"))
}

/// Errors below this fraction of `e_1` are treated as roundoff.
const NOISE_FLOOR: f64 = 1e-9;
const DIRECT_FLOOR: f64 = 1e-10;

/// Geometric mean of `e_k / e_{k-1}` over `k = 3..K` from the `L2` history
/// `e_1, e_2, ...`, with `K` the last iteration still above the roundoff
/// floor.
pub fn estimate_convergence_factor(history: &[f64]) -> ConvergenceEstimate {
    let Some(&e1) = history.first() else {
        return ConvergenceEstimate::Insufficient;
    };
    if history.len() >= 2 && history[1..].iter().all(|&e| e <= DIRECT_FLOOR * e1) {
        return ConvergenceEstimate::DirectSolve;
    }
    if e1 == 0.0 {
        return ConvergenceEstimate::DirectSolve;
    }
    let last = history
        .iter()
        .rposition(|&e| e >= NOISE_FLOOR * e1)
        .unwrap_or(0);
    // iteration numbers are 1-based: index i holds e_{i+1}
    if last < 3 {
        return ConvergenceEstimate::Insufficient;
    }
    let ratios = last - 1;
    ConvergenceEstimate::Factor((history[last] / history[1]).powf(1.0 / ratios as f64))
}

/// One parity part of a run: the four subdomain solvers and the current
/// iterate with its interface fluxes.
struct PartState {
    plan: TransmissionPlan,
    sign: f64,
    maps: [ConditionMap; 4],
    solvers: Vec<BoxSolver>,
    u: [Vec<f64>; 4],
    /// Outward flux of `u_i` on its `x`- and `y`-interface faces.
    q: [[Vec<f64>; 2]; 4],
}

const X_FACE: Face = Face { axis: 0, high: false };
const Y_FACE: Face = Face { axis: 1, high: false };

fn face_slot(slot: usize) -> Face {
    if slot == 0 {
        X_FACE
    } else {
        Y_FACE
    }
}

fn neighbor(id: SubdomainId, slot: usize) -> SubdomainId {
    if slot == 0 {
        id.x_neighbor()
    } else {
        id.y_neighbor()
    }
}

impl PartState {
    fn new(spec: &ProblemSpec, u0: &Field, plan: TransmissionPlan, sign: f64, mode: DirichletMode) -> Result<Self> {
        let mut maps = SubdomainId::ALL.map(|id| ConditionMap::from_spec(spec, Region::Sub(id)));
        for id in SubdomainId::ALL {
            let map = &mut maps[id.index()];
            for slot in 0..2 {
                let face = face_slot(slot);
                let len = map.geom().face_len(face);
                let cond = match plan.tag(id, neighbor(id, slot))? {
                    Transmission::Dirichlet => FaceCondition::Dirichlet(vec![0.0; len]),
                    Transmission::Neumann => FaceCondition::Flux(vec![0.0; len]),
                };
                map.set(face, cond)?;
            }
        }
        let solvers = SubdomainId::ALL
            .iter()
            .map(|&id| BoxSolver::new(spec.source(), &maps[id.index()], mode))
            .collect::<Result<Vec<_>>>()?;
        let u = u0.restrict_all().map(LocalField::into_values);
        let q = std::array::from_fn(|i| {
            [0, 1].map(|slot| solvers[i].flux_trace(&u[i], &maps[i], face_slot(slot)))
        });
        Ok(Self {
            plan,
            sign,
            maps,
            solvers,
            u,
            q,
        })
    }

    /// Relaxed data for a white subdomain from the previous iterate.
    fn white_map(&self, id: SubdomainId, theta: f64) -> Result<ConditionMap> {
        let i = id.index();
        let mut map = self.maps[i].clone();
        for slot in 0..2 {
            let j = neighbor(id, slot);
            let face = face_slot(slot);
            let cond = match self.plan.tag(id, j)? {
                Transmission::Dirichlet => {
                    let uj = self.solvers[j.index()].face_trace(&self.u[j.index()], face);
                    let ui = self.solvers[i].face_trace(&self.u[i], face);
                    FaceCondition::Dirichlet(uj.iter().zip(&ui).map(|(a, b)| theta * a + (1.0 - theta) * b).collect())
                }
                Transmission::Neumann => {
                    let qj = &self.q[j.index()][slot];
                    let qi = &self.q[i][slot];
                    FaceCondition::Flux(qj.iter().zip(qi).map(|(a, b)| -theta * a + (1.0 - theta) * b).collect())
                }
            };
            map.set(face, cond)?;
        }
        Ok(map)
    }

    /// Unrelaxed data for a gray subdomain from the current white iterate.
    fn gray_map(&self, id: SubdomainId) -> Result<ConditionMap> {
        let i = id.index();
        let mut map = self.maps[i].clone();
        for slot in 0..2 {
            let j = neighbor(id, slot);
            let face = face_slot(slot);
            let cond = match self.plan.tag(id, j)? {
                Transmission::Dirichlet => {
                    FaceCondition::Dirichlet(self.solvers[j.index()].face_trace(&self.u[j.index()], face))
                }
                Transmission::Neumann => FaceCondition::Flux(self.q[j.index()][slot].iter().map(|v| -v).collect()),
            };
            map.set(face, cond)?;
        }
        Ok(map)
    }

    fn solve_one(&self, id: SubdomainId, map: &ConditionMap) -> Result<(Vec<f64>, [Vec<f64>; 2])> {
        let s = &self.solvers[id.index()];
        let u = s.solve(map)?;
        let q = [0, 1].map(|slot| s.flux_trace(&u, map, face_slot(slot)));
        Ok((u, q))
    }

    fn half_step(&mut self, pair: [SubdomainId; 2], white: bool, opts: &DnOptions) -> Result<()> {
        let map = |id| {
            if white {
                self.white_map(id, opts.theta)
            } else {
                self.gray_map(id)
            }
        };
        let (a, b) = (pair[0], pair[1]);
        let (ra, rb) = if opts.exploit_symmetry {
            let ra = self.solve_one(a, &map(a)?)?;
            let rb = mirror(&ra, self.sign);
            (ra, rb)
        } else {
            let (ma, mb) = (map(a)?, map(b)?);
            if opts.parallel {
                let (ra, rb) = rayon::join(|| self.solve_one(a, &ma), || self.solve_one(b, &mb));
                (ra?, rb?)
            } else {
                (self.solve_one(a, &ma)?, self.solve_one(b, &mb)?)
            }
        };
        for (id, (u, q)) in [(a, ra), (b, rb)] {
            self.u[id.index()] = u;
            self.q[id.index()] = q;
        }
        Ok(())
    }

    fn iterate(&mut self, opts: &DnOptions) -> Result<()> {
        self.half_step(SubdomainId::WHITE, true, opts)?;
        self.half_step(SubdomainId::GRAY, false, opts)
    }

    fn fields(&self, grid: crate::grid::Grid) -> [LocalField; 4] {
        std::array::from_fn(|i| {
            LocalField::from_values(grid, SubdomainId::ALL[i], self.u[i].clone()).expect("local length")
        })
    }
}

/// Point image of a subdomain solution: same local values times the parity sign.
fn mirror((u, q): &(Vec<f64>, [Vec<f64>; 2]), sign: f64) -> (Vec<f64>, [Vec<f64>; 2]) {
    let flip = |v: &Vec<f64>| v.iter().map(|x| sign * x).collect::<Vec<f64>>();
    (flip(u), [flip(&q[0]), flip(&q[1])])
}

fn validate_theta(theta: f64, warnings: &mut Vec<String>) -> Result<()> {
    if !theta.is_finite() || theta <= 0.0 || theta > 1.0 {
        return Err(Error::Config {
            field: "theta".into(),
            reason: format!("{theta} is outside (0, 1]"),
        });
    }
    if theta == 1.0 {
        warnings.push("theta = 1 is outside (0, 1); convergence is not guaranteed".into());
    }
    Ok(())
}

/// Runs the relaxed DN iteration from `u0` and measures errors against the
/// monodomain solution of the same (parity part of the) problem.
///
/// A singular subdomain system is returned as [`Error::Singular`]; an
/// iteration whose error stops decreasing ends with
/// [`RunStatus::NonContractive`].
pub fn run_dn(
    spec: &ProblemSpec,
    method: Method,
    parity: ParityMode,
    u0: &Field,
    opts: &DnOptions,
) -> Result<DnReport> {
    let grid = spec.grid();
    if u0.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if opts.max_iter == 0 {
        return Err(Error::Config {
            field: "max_iter".into(),
            reason: "must be at least 1".into(),
        });
    }
    if opts.tol.is_nan() || opts.tol < 0.0 {
        return Err(Error::Config {
            field: "tol".into(),
            reason: format!("{} must be non-negative", opts.tol),
        });
    }
    let mut warnings = Vec::new();
    validate_theta(opts.theta, &mut warnings)?;
    validate_symmetric_bc(spec)?;
    let guess = check_initial_guess(spec, u0)?;
    let scale = u0.max_abs().max(spec.source().max_abs()).max(1.0);
    if guess.max_violation > 1e-8 * scale {
        warnings.push(format!(
            "initial guess is not compatible at the boundary cross-points (violation {:e})",
            guess.max_violation
        ));
    }

    let u0_parts = split_even_odd(u0);
    let mut parts = Vec::new();
    for &p in parity.parts() {
        let sub = spec.parity_part(p)?;
        let plan = TransmissionPlan::for_method(method, p);
        parts.push(PartState::new(&sub, u0_parts.part(p), plan, p.sign(), opts.dirichlet)?);
    }
    let oracle = match parity {
        ParityMode::Full => oracle_solve(spec, opts.dirichlet)?,
        ParityMode::Even => oracle_solve(&spec.parity_part(Parity::Even)?, opts.dirichlet)?,
        ParityMode::Odd => oracle_solve(&spec.parity_part(Parity::Odd)?, opts.dirichlet)?,
    };
    let exact = oracle.restrict_all();
    let ex_l2 = broken_l2_norm(&exact);
    let ex_h1 = broken_h1_norm(&exact);
    let rel = |v: f64, norm: f64| if norm > 0.0 { v / norm } else { v };

    let mut records: Vec<IterationRecord> = Vec::new();
    let mut iterates = Vec::new();
    let mut status = RunStatus::MaxIter;
    let mut non_contractive = 0;
    let mut current = std::array::from_fn(|i| u0.restrict(SubdomainId::ALL[i]));
    for iter in 1..=opts.max_iter {
        let start = Instant::now();
        for part in parts.iter_mut() {
            part.iterate(opts)?;
        }
        current = combine(&parts, grid);
        let err = local_error(&oracle, &current);
        let l2_abs = broken_l2_norm(&err);
        let ratio = records.last().map(|r| l2_abs / r.l2_abs);
        let record = IterationRecord {
            iter,
            l2_abs,
            l2_rel: rel(l2_abs, ex_l2),
            h1_rel: rel(broken_h1_norm(&err), ex_h1),
            max_abs: broken_max_abs(&err),
            ratio,
            elapsed: start.elapsed(),
        };
        if opts.record_iterates {
            iterates.push(current.clone());
        }
        let e1 = records.first().map_or(l2_abs, |r| r.l2_abs);
        let done = record.l2_rel <= opts.tol;
        match ratio {
            Some(r) if r >= 1.0 && l2_abs > NOISE_FLOOR * e1 => non_contractive += 1,
            _ => non_contractive = 0,
        }
        records.push(record);
        if done {
            status = RunStatus::Converged;
            break;
        }
        if non_contractive >= 3 {
            status = RunStatus::NonContractive;
            break;
        }
    }
    let estimate = estimate_convergence_factor(&records.iter().map(|r| r.l2_abs).collect::<Vec<_>>());
    Ok(DnReport {
        method,
        parity,
        theta: opts.theta,
        records,
        status,
        estimate,
        oracle,
        final_fields: current,
        iterates,
        warnings,
    })
}

fn combine(parts: &[PartState], grid: crate::grid::Grid) -> [LocalField; 4] {
    let mut out = parts[0].fields(grid);
    for part in &parts[1..] {
        let other = part.fields(grid);
        for i in 0..4 {
            out[i] = out[i].add(&other[i]).expect("same subdomain");
        }
    }
    out
}

/// How the standard method misbehaves on an odd problem.
#[derive(Clone, Debug, PartialEq)]
pub enum FailureSignature {
    /// A subdomain system could not be factorized.
    Singular(String),
    /// The error stopped decreasing: three ratios at or above one, or the
    /// ratio stuck within `1e-3` of one at the end of the run.
    NonContractive { ratios: Vec<f64> },
    /// The largest error sits within `4h` of the cross-point and grows.
    CrossPointGrowth { distance: f64 },
    /// The run converged.
    None,
}

#[derive(Clone, Debug)]
pub struct FailureDiagnostic {
    pub signature: FailureSignature,
    pub report: Option<DnReport>,
}

/// Applies the standard method to the odd part of `spec` and reports how it
/// fails. Never returns an error for a failing iteration; that is the
/// purpose of the diagnostic.
pub fn demonstrate_standard_odd_failure(
    spec: &ProblemSpec,
    theta: f64,
    u0: &Field,
    max_iter: usize,
) -> Result<FailureDiagnostic> {
    diagnose(spec, ParityMode::Odd, theta, u0, max_iter)
}

/// Same path with a chosen parity, so the even part can serve as a control.
pub fn diagnose(
    spec: &ProblemSpec,
    parity: ParityMode,
    theta: f64,
    u0: &Field,
    max_iter: usize,
) -> Result<FailureDiagnostic> {
    let opts = DnOptions {
        theta,
        max_iter,
        tol: 0.0,
        record_iterates: true,
        ..DnOptions::default()
    };
    let report = match run_dn(spec, Method::Standard, parity, u0, &opts) {
        Ok(r) => r,
        Err(Error::Singular(msg)) => {
            return Ok(FailureDiagnostic {
                signature: FailureSignature::Singular(msg),
                report: None,
            })
        }
        Err(e) => return Err(e),
    };
    let ratios: Vec<f64> = report.records.iter().filter_map(|r| r.ratio).collect();
    let stuck = ratios.len() >= 3 && ratios[ratios.len() - 3..].iter().all(|&r| r >= 1.0 - 1e-3);
    let signature = if report.status == RunStatus::NonContractive || stuck {
        FailureSignature::NonContractive { ratios }
    } else if let Some(d) = crosspoint_growth(&report) {
        FailureSignature::CrossPointGrowth { distance: d }
    } else {
        FailureSignature::None
    };
    Ok(FailureDiagnostic {
        signature,
        report: Some(report),
    })
}

fn crosspoint_growth(report: &DnReport) -> Option<f64> {
    let n = report.records.len();
    if n < 2 || report.records[n - 1].max_abs <= report.records[n - 2].max_abs {
        return None;
    }
    let err = report.error_at(n)?;
    let grid = report.oracle.grid();
    let h = grid.spacing();
    let mut best = (0.0, f64::INFINITY);
    for f in &err {
        let layout = f.layout();
        for (l, &v) in f.values().iter().enumerate() {
            if v.abs() > best.0 {
                let li = layout.local(l);
                best = (v.abs(), h * ((li.a * li.a + li.b * li.b) as f64).sqrt());
            }
        }
    }
    (best.1 <= 4.0 * h).then_some(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{broken_symmetry_residual, recombine, ParityPair};
    use crate::grid::{Grid, LocalIndex};
    use crate::problem::example_catalog;

    fn g2(n: usize) -> Grid {
        Grid::new(2, n).unwrap()
    }

    fn opts(theta: f64, max_iter: usize) -> DnOptions {
        DnOptions {
            theta,
            max_iter,
            tol: 0.0,
            record_iterates: true,
            ..DnOptions::default()
        }
    }

    fn run(example: u8, grid: Grid, parity: ParityMode, o: &DnOptions) -> DnReport {
        let spec = example_catalog(example, grid).unwrap();
        run_dn(&spec, Method::New, parity, &Field::zeros(grid), o).unwrap()
    }

    #[test]
    fn plans() {
        use SubdomainId::*;
        let s = TransmissionPlan::standard();
        for (i, j) in [(One, Two), (One, Four), (Three, Two), (Three, Four)] {
            assert_eq!(s.tag(i, j).unwrap(), Transmission::Dirichlet);
            assert_eq!(s.tag(j, i).unwrap(), Transmission::Neumann);
        }
        let n = TransmissionPlan::new_odd();
        for (i, j) in [(One, Four), (Two, One), (Three, Two), (Four, Three)] {
            assert_eq!(n.tag(i, j).unwrap(), Transmission::Dirichlet);
            assert_eq!(n.tag(j, i).unwrap(), Transmission::Neumann);
        }
        assert!(n.tag(One, Three).is_err());
        assert_eq!(TransmissionPlan::for_method(Method::New, Parity::Even), s);
    }

    #[test]
    fn synthetic_history() {
        let h: Vec<f64> = (0..10).map(|k| 0.1f64.powi(k)).collect();
        let r = estimate_convergence_factor(&h).factor().unwrap();
        assert!((r - 0.1).abs() < 1e-14);
        assert_eq!(estimate_convergence_factor(&[1.0, 1e-15, 2e-15]), ConvergenceEstimate::DirectSolve);
        assert_eq!(estimate_convergence_factor(&[0.0, 0.0]), ConvergenceEstimate::DirectSolve);
        assert_eq!(estimate_convergence_factor(&[1.0, 0.5, 0.25]), ConvergenceEstimate::Insufficient);
        assert_eq!(estimate_convergence_factor(&[]), ConvergenceEstimate::Insufficient);
    }

    #[test]
    fn direct_solver_at_half() {
        for (ex, parity) in [(1, ParityMode::Even), (2, ParityMode::Odd)] {
            let r = run(ex, g2(20), parity, &opts(0.5, 3));
            assert!(r.records[1].l2_rel <= 1e-10, "{ex}: {:?}", r.records);
            assert_eq!(r.estimate, ConvergenceEstimate::DirectSolve);
        }
    }

    #[test]
    fn exact_recurrence() {
        for (ex, parity) in [(1, ParityMode::Even), (2, ParityMode::Odd)] {
            for theta in [0.3, 0.45] {
                let r = run(ex, g2(16), parity, &opts(theta, 8));
                let e1 = r.error_at(1).unwrap();
                let scale = broken_max_abs(&e1);
                for k in 2..=8 {
                    let ek = r.error_at(k).unwrap();
                    let c = (1.0 - 2.0 * theta).powi(k as i32 - 1);
                    let worst = (0..4)
                        .map(|i| ek[i].sub(&e1[i].scaled(c)).unwrap().max_abs())
                        .fold(0.0, f64::max);
                    assert!(worst <= 1e-8 * scale, "ex{ex} θ={theta} k={k}: {worst}");
                }
                let rho = r.estimate.factor().unwrap();
                assert!((rho - (1.0 - 2.0 * theta).abs()).abs() < 1e-6, "{rho}");
            }
        }
    }

    #[test]
    fn odd_error_symmetries() {
        let r = run(2, g2(16), ParityMode::Odd, &opts(0.45, 4));
        let scale = broken_max_abs(&r.error_at(1).unwrap());
        for k in 1..=4 {
            let e = r.error_at(k).unwrap();
            let m = e[0].layout();
            for l in 0..m.len() {
                let li = m.local(l);
                let v1 = e[0].values()[l];
                assert!((e[1].values()[l] - v1).abs() <= 1e-10 * scale);
                assert!((e[2].values()[l] + v1).abs() <= 1e-10 * scale);
                assert!((e[3].values()[l] + v1).abs() <= 1e-10 * scale);
                if li == LocalIndex::new(0, 0, 0) {
                    assert!(v1.abs() <= 1e-10 * scale);
                }
            }
        }
    }

    #[test]
    fn even_error_symmetries() {
        let r = run(1, g2(16), ParityMode::Even, &opts(0.45, 4));
        let scale = broken_max_abs(&r.error_at(1).unwrap());
        for k in 1..=4 {
            let e = r.error_at(k).unwrap();
            assert!(broken_symmetry_residual(&e, Parity::Even) <= 1e-10 * scale);
            for l in 0..e[0].values().len() {
                let v1 = e[0].values()[l];
                assert!((e[1].values()[l] + v1).abs() <= 1e-10 * scale);
                assert!((e[3].values()[l] + v1).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn parity_is_preserved() {
        let r = run(2, g2(12), ParityMode::Odd, &opts(0.4, 5));
        for u in &r.iterates {
            assert!(broken_symmetry_residual(u, Parity::Odd) <= 1e-10 * broken_max_abs(u));
        }
    }

    #[test]
    fn symmetry_shortcut_matches() {
        for (ex, parity) in [(1, ParityMode::Even), (2, ParityMode::Odd)] {
            let full = run(ex, g2(12), parity, &opts(0.45, 4));
            let fast = run(
                ex,
                g2(12),
                parity,
                &DnOptions {
                    exploit_symmetry: true,
                    ..opts(0.45, 4)
                },
            );
            for (a, b) in full.final_fields.iter().zip(&fast.final_fields) {
                for (x, y) in a.values().iter().zip(b.values()) {
                    assert!((x - y).abs() <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE));
                }
            }
        }
    }

    #[test]
    fn sequential_matches_parallel() {
        let a = run(1, g2(10), ParityMode::Even, &opts(0.45, 3));
        let b = run(
            1,
            g2(10),
            ParityMode::Even,
            &DnOptions {
                parallel: false,
                ..opts(0.45, 3)
            },
        );
        assert_eq!(a.final_fields, b.final_fields);
    }

    #[test]
    fn full_is_recombination() {
        let grid = g2(12);
        let spec = ProblemSpec::builder(grid)
            .source(|p| 1.0 + p[0] + p[0] * p[1] * p[1])
            .dirichlet(crate::grid::Side::Left, |_| 0.0)
            .dirichlet(crate::grid::Side::Right, |_| 0.0)
            .neumann(crate::grid::Side::Bottom, |_| 0.0)
            .neumann(crate::grid::Side::Top, |_| 0.0)
            .build()
            .unwrap();
        let u0 = Field::zeros(grid);
        let o = opts(0.45, 4);
        let full = run_dn(&spec, Method::New, ParityMode::Full, &u0, &o).unwrap();
        let even = run_dn(&spec, Method::New, ParityMode::Even, &u0, &o).unwrap();
        let odd = run_dn(&spec, Method::New, ParityMode::Odd, &u0, &o).unwrap();
        for i in 0..4 {
            let sum = even.final_fields[i].add(&odd.final_fields[i]).unwrap();
            for (x, y) in full.final_fields[i].values().iter().zip(sum.values()) {
                assert!((x - y).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE));
            }
        }
        // θ = 1/2 recovers the monodomain solution after two iterations
        let half = run_dn(&spec, Method::New, ParityMode::Full, &u0, &opts(0.5, 2)).unwrap();
        let pair = ParityPair {
            even: even.oracle.clone(),
            odd: odd.oracle.clone(),
        };
        let whole = recombine(&pair).unwrap();
        assert!(whole.sub(&half.oracle).unwrap().max_abs() <= 1e-12);
        let err = local_error(&half.oracle, &half.final_fields);
        assert!(broken_max_abs(&err) <= 1e-10 * half.oracle.max_abs());
    }

    #[test]
    fn zero_error_stays_zero() {
        let grid = g2(10);
        let spec = example_catalog(1, grid).unwrap();
        let exact = oracle_solve(&spec, DirichletMode::Strong).unwrap();
        let r = run_dn(&spec, Method::New, ParityMode::Even, &exact, &opts(0.45, 3)).unwrap();
        assert!(r.records.iter().all(|rec| rec.l2_rel < 1e-13), "{:?}", r.records);
        assert!(r.estimate.factor().is_none());
    }

    #[test]
    fn standard_even_control_contracts() {
        let spec = example_catalog(1, g2(16)).unwrap();
        let d = diagnose(&spec, ParityMode::Even, 0.45, &Field::zeros(spec.grid()), 10).unwrap();
        assert_eq!(d.signature, FailureSignature::None);
        let rho = d.report.unwrap().estimate.factor().unwrap();
        assert!((rho - 0.1).abs() < 1e-4);
    }

    #[test]
    fn rejects_bad_theta() {
        let spec = example_catalog(1, g2(8)).unwrap();
        let u0 = Field::zeros(spec.grid());
        for theta in [0.0, -0.5, 1.5, f64::NAN] {
            let e = run_dn(&spec, Method::New, ParityMode::Even, &u0, &opts(theta, 2)).unwrap_err();
            assert!(matches!(e, Error::Config { .. }));
        }
        let r = run_dn(&spec, Method::New, ParityMode::Even, &u0, &opts(1.0, 2)).unwrap();
        assert_eq!(r.warnings.len(), 1);
    }
}
