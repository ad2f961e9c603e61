//! Semi-implicit, decoupled time stepping.
//!
//! Each step solves, in order,
//!
//! ```text
//!   (M/k + A - C(v^n)) u^{n+1} = (M/k) u^n
//!   ((1/k + 1) M + A) v^{n+1}  = (M/k) v^n + M u^{n+1}
//! ```
//!
//! where `M` is the lumped mass, `A` the stiffness matrix and `C(v^n)` the
//! barycentric chemotaxis operator. `A` and `M` are assembled once; `C` is
//! reassembled every step. Negative values of `u` are never clipped.

use crate::diagnostics::{StepRecord, StepRecorder};
use crate::error::{Error, Result};
use crate::fem::{FeFunction, LumpedMass, P1Space};
use crate::linsolve::{LinearSolver, SolverKind};
use crate::mesh::Mesh;
use crate::sparse::SparseOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    /// Time step.
    pub k: f64,
    pub n_steps: usize,
    /// Relative residual required of every linear solve.
    pub linear_tol: f64,
    pub solver_kind: SolverKind,
}

impl SchemeConfig {
    pub const DEFAULT_LINEAR_TOL: f64 = 1e-12;

    pub fn new(k: f64, n_steps: usize) -> Self {
        Self {
            k,
            n_steps,
            linear_tol: Self::DEFAULT_LINEAR_TOL,
            solver_kind: SolverKind::Direct,
        }
    }

    pub fn with_solver(mut self, kind: SolverKind) -> Self {
        self.solver_kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "time step must be positive, got {}",
                self.k
            )));
        }
        if !(self.linear_tol > 0.0 && self.linear_tol <= 1e-6) {
            return Err(Error::InvalidConfig(format!(
                "linear tolerance must lie in (0, 1e-6], got {}",
                self.linear_tol
            )));
        }
        Ok(())
    }

    /// Time of step `n`.
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.k
    }
}

/// Discrete solution `(u^n, v^n)` at step `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub n: usize,
    pub t: f64,
    pub u: FeFunction,
    pub v: FeFunction,
}

impl SchemeState {
    pub fn initial(u0: FeFunction, v0: FeFunction) -> Self {
        Self {
            n: 0,
            t: 0.0,
            u: u0,
            v: v0,
        }
    }
}

/// Time stepper holding the assembled operators and solver state for one mesh.
#[derive(Debug)]
pub struct Scheme {
    space: P1Space,
    mass: LumpedMass,
    stiffness: SparseOperator,
    cfg: SchemeConfig,
    chemotaxis: SparseOperator,
    u_solver: LinearSolver,
    v_matrix: SparseOperator,
    v_solver: LinearSolver,
}

impl Scheme {
    pub fn new(mesh: &Mesh, cfg: SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        let space = P1Space::new(mesh);
        let mass = space.lumped_mass();
        let stiffness = space.stiffness();
        let chemotaxis = SparseOperator::zeros(space.pattern().clone(), false);
        let u_solver = LinearSolver::for_general(cfg.solver_kind, &stiffness)?;
        let v_shift: Vec<f64> = mass
            .diagonal()
            .iter()
            .map(|m| (1.0 / cfg.k + 1.0) * m)
            .collect();
        let v_matrix = stiffness.combine(1.0, &stiffness, 0.0, &v_shift);
        let mut v_solver = LinearSolver::for_spd(cfg.solver_kind, &v_matrix)?;
        v_solver.update(&v_matrix)?;
        Ok(Self {
            space,
            mass,
            stiffness,
            cfg,
            chemotaxis,
            u_solver,
            v_matrix,
            v_solver,
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn space(&self) -> &P1Space {
        &self.space
    }

    pub fn mass(&self) -> &LumpedMass {
        &self.mass
    }

    pub fn stiffness(&self) -> &SparseOperator {
        &self.stiffness
    }

    /// `M/k + A - C(v)`.
    pub fn u_matrix(&self, v: &FeFunction) -> Result<SparseOperator> {
        let chemotaxis = self.space.chemotaxis(v)?;
        Ok(self.u_matrix_from(&chemotaxis))
    }

    fn u_matrix_from(&self, chemotaxis: &SparseOperator) -> SparseOperator {
        let shift: Vec<f64> = self
            .mass
            .diagonal()
            .iter()
            .map(|m| m / self.cfg.k)
            .collect();
        self.stiffness.combine(1.0, chemotaxis, -1.0, &shift)
    }

    /// Cell density at the next step.
    pub fn u_step(&mut self, state: &SchemeState) -> Result<FeFunction> {
        let n = self.space.n_nodes();
        state.u.check_len(n)?;
        self.space.chemotaxis_into(&state.v, &mut self.chemotaxis)?;
        let matrix = self.u_matrix_from(&self.chemotaxis);
        let rhs: Vec<f64> = self
            .mass
            .diagonal()
            .iter()
            .zip(state.u.values())
            .map(|(m, u)| m / self.cfg.k * u)
            .collect();
        self.u_solver.update(&matrix)?;
        let u = self
            .u_solver
            .solve(&matrix, &rhs, state.u.values(), self.cfg.linear_tol)?;
        Ok(FeFunction::new(u))
    }

    /// Chemoattractant density at the next step, given `u^{n+1}`.
    pub fn v_step(&mut self, state: &SchemeState, u_next: &FeFunction) -> Result<FeFunction> {
        let n = self.space.n_nodes();
        state.v.check_len(n)?;
        u_next.check_len(n)?;
        let k = self.cfg.k;
        let rhs: Vec<f64> = self
            .mass
            .diagonal()
            .iter()
            .zip(state.v.values().iter().zip(u_next.values()))
            .map(|(m, (v, u))| m * (v / k + u))
            .collect();
        let v = self
            .v_solver
            .solve(&self.v_matrix, &rhs, state.v.values(), self.cfg.linear_tol)?;
        Ok(FeFunction::new(v))
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &SchemeState) -> Result<SchemeState> {
        let n = state.n + 1;
        let u = self.u_step(state).map_err(|e| e.at_step(n))?;
        let v = self.v_step(state, &u).map_err(|e| e.at_step(n))?;
        Ok(SchemeState {
            n,
            t: self.cfg.time(n),
            u,
            v,
        })
    }
}

/// One-shot `u` update with freshly assembled operators.
pub fn u_step(
    mesh: &Mesh,
    state: &SchemeState,
    mass: &LumpedMass,
    stiffness: &SparseOperator,
    cfg: &SchemeConfig,
) -> Result<FeFunction> {
    cfg.validate()?;
    let chemotaxis = crate::fem::assemble_chemotaxis(mesh, &state.v)?;
    state.u.check_len(mass.len())?;
    let shift: Vec<f64> = mass.diagonal().iter().map(|m| m / cfg.k).collect();
    let matrix = stiffness.combine(1.0, &chemotaxis, -1.0, &shift);
    let rhs: Vec<f64> = shift
        .iter()
        .zip(state.u.values())
        .map(|(s, u)| s * u)
        .collect();
    crate::linsolve::solve(&matrix, &rhs, cfg.solver_kind, cfg.linear_tol).map(FeFunction::new)
}

/// One-shot `v` update with freshly assembled operators.
pub fn v_step(
    state: &SchemeState,
    u_next: &FeFunction,
    mass: &LumpedMass,
    stiffness: &SparseOperator,
    cfg: &SchemeConfig,
) -> Result<FeFunction> {
    cfg.validate()?;
    state.v.check_len(mass.len())?;
    u_next.check_len(mass.len())?;
    let k = cfg.k;
    let shift: Vec<f64> = mass
        .diagonal()
        .iter()
        .map(|m| (1.0 / k + 1.0) * m)
        .collect();
    let matrix = stiffness.combine(1.0, stiffness, 0.0, &shift);
    let rhs: Vec<f64> = mass
        .diagonal()
        .iter()
        .zip(state.v.values().iter().zip(u_next.values()))
        .map(|(m, (v, u))| m * (v / k + u))
        .collect();
    crate::linsolve::solve(&matrix, &rhs, cfg.solver_kind, cfg.linear_tol).map(FeFunction::new)
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// One record per step, `n = 0..=n_steps`.
    pub records: Vec<StepRecord>,
    pub final_state: SchemeState,
}

/// Runs `cfg.n_steps` steps from `(u0, v0)`, recording diagnostics at every
/// step including the initial one.
pub fn run(mesh: &Mesh, u0: FeFunction, v0: FeFunction, cfg: SchemeConfig) -> Result<RunOutput> {
    run_with(mesh, u0, v0, cfg, |_, _| Ok(()))
}

/// Like [`run`], calling `observe` with every state (including the initial
/// one) and its record.
pub fn run_with<F>(
    mesh: &Mesh,
    u0: FeFunction,
    v0: FeFunction,
    cfg: SchemeConfig,
    mut observe: F,
) -> Result<RunOutput>
where
    F: FnMut(&SchemeState, &StepRecord) -> Result<()>,
{
    let n = mesh.n_vertices();
    u0.check_len(n)?;
    v0.check_len(n)?;
    if u0.min() <= 0.0 {
        log::warn!(
            "initial cell density is not strictly positive (min {:e})",
            u0.min()
        );
    }
    if v0.min() < 0.0 {
        log::warn!(
            "initial chemoattractant density is negative (min {:e})",
            v0.min()
        );
    }
    let mut scheme = Scheme::new(mesh, cfg)?;
    let mut recorder = StepRecorder::new(scheme.mass().clone(), scheme.stiffness().clone(), cfg.k);
    let mut state = SchemeState::initial(u0, v0);
    let mut records = Vec::with_capacity(cfg.n_steps + 1);
    let rec = recorder.record(&state);
    observe(&state, &rec)?;
    records.push(rec);
    for _ in 0..cfg.n_steps {
        state = scheme.step(&state)?;
        let rec = recorder.record(&state);
        observe(&state, &rec)?;
        records.push(rec);
    }
    Ok(RunOutput {
        records,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_macro_mesh, MacroKind};

    #[test]
    fn config_validation() {
        assert!(SchemeConfig::new(1e-4, 5).validate().is_ok());
        assert!(SchemeConfig::new(0.0, 5).validate().is_err());
        let mut c = SchemeConfig::new(1e-4, 5);
        c.linear_tol = 1e-3;
        assert!(c.validate().is_err());
        assert_eq!(c.time(3), 3.0 * 1e-4);
    }

    #[test]
    fn constant_state() {
        let mesh = build_macro_mesh(3, MacroKind::Acute);
        let n = mesh.n_vertices();
        let (c, d, k) = (2.0, 5.0, 0.1);
        let cfg = SchemeConfig::new(k, 1);
        let mut scheme = Scheme::new(&mesh, cfg).unwrap();
        let state = SchemeState::initial(FeFunction::constant(n, c), FeFunction::constant(n, d));
        let next = scheme.step(&state).unwrap();
        for &u in next.u.values() {
            assert!((u - c).abs() < 1e-12);
        }
        let expected_v = (d + k * c) / (1.0 + k);
        for &v in next.v.values() {
            assert!((v - expected_v).abs() < 1e-12);
        }
        assert_eq!((next.n, next.t), (1, k));
    }

    #[test]
    fn one_shot_steps_match_stepper() {
        let mesh = build_macro_mesh(4, MacroKind::Acute);
        let cfg = SchemeConfig::new(1e-3, 1);
        let u0 =
            crate::fem::nodal_interpolate(|p| 5.0 * (-5.0 * (p.x * p.x + p.y * p.y)).exp(), &mesh)
                .unwrap();
        let v0 = crate::fem::nodal_interpolate(
            |p| 3.0 * (-10.0 * (p.x * p.x + (p.y - 0.5).powi(2))).exp(),
            &mesh,
        )
        .unwrap();
        let state = SchemeState::initial(u0, v0);
        let mut scheme = Scheme::new(&mesh, cfg).unwrap();
        let next = scheme.step(&state).unwrap();
        let u1 = u_step(&mesh, &state, scheme.mass(), scheme.stiffness(), &cfg).unwrap();
        let v1 = v_step(&state, &u1, scheme.mass(), scheme.stiffness(), &cfg).unwrap();
        for (a, b) in next.u.values().iter().zip(u1.values()) {
            assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()));
        }
        for (a, b) in next.v.values().iter().zip(v1.values()) {
            assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn mismatched_initial_data_is_rejected() {
        let mesh = build_macro_mesh(1, MacroKind::Acute);
        let err = run(
            &mesh,
            FeFunction::constant(3, 1.0),
            FeFunction::constant(12, 1.0),
            SchemeConfig::new(1e-3, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::SizeMismatch { .. }));
    }
}
