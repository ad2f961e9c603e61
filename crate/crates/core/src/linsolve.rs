//! Linear solvers for the two systems of each time step.
//!
//! The direct path factors with faer's sparse LU, run sequentially so that
//! results are bit-reproducible; the symbolic analysis is done once per
//! sparsity pattern and reused for every numeric refactorization. The
//! iterative path is BiCGSTAB with an ILU(0) preconditioner for general
//! matrices and Jacobi-preconditioned CG for symmetric positive definite ones.

use std::str::FromStr;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuRef, NumericLu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par};

use crate::error::{Error, Result, SolverError, SolverFailure};
use crate::sparse::SparseOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    /// Sparse LU; deterministic.
    #[default]
    Direct,
    /// Preconditioned Krylov iteration.
    Iterative,
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(Self::Direct),
            "iterative" => Ok(Self::Iterative),
            _ => Err(Error::InvalidConfig(format!("unknown solver `{s}`"))),
        }
    }
}

const MAX_REFINEMENT_STEPS: usize = 3;
const MAX_KRYLOV_ITERATIONS: usize = 5000;

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `r = b - A x`, returns `‖r‖ / ‖b‖` (or `‖r‖` when `b = 0`).
fn residual(op: &SparseOperator, x: &[f64], b: &[f64], r: &mut [f64]) -> f64 {
    op.mul_vec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let bn = norm2(b);
    let rn = norm2(r);
    if bn > 0.0 {
        rn / bn
    } else {
        rn
    }
}

/// Sparse LU factorization of a fixed-pattern operator.
pub struct DirectLu {
    symbolic: SymbolicLu<usize>,
    numeric: NumericLu<usize, f64>,
    /// Copy of the factored operator for residual checks.
    matrix: Option<SparseOperator>,
}

impl std::fmt::Debug for DirectLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirectLu")
            .field("n", &self.matrix.as_ref().map(SparseOperator::n))
            .finish_non_exhaustive()
    }
}

fn factorization_error(msg: impl std::fmt::Display) -> SolverError {
    SolverError {
        kind: SolverFailure::Factorization(msg.to_string()),
        residual_history: Vec::new(),
    }
}

impl DirectLu {
    /// Symbolic analysis (fill-reducing ordering) for the pattern of `op`.
    ///
    /// The compressed-row arrays of `A` are the compressed-column arrays of
    /// `A^T`, so the factorization is of `A^T` and solves use the transpose.
    pub fn analyze(op: &SparseOperator) -> Result<Self> {
        let p = op.pattern();
        let symbolic_mat =
            SymbolicSparseColMatRef::new_checked(p.n(), p.n(), p.row_ptr(), None, p.col_idx());
        let symbolic =
            factorize_symbolic_lu(symbolic_mat, Default::default()).map_err(factorization_error)?;
        Ok(Self {
            symbolic,
            numeric: NumericLu::new(),
            matrix: None,
        })
    }

    pub fn factor(&mut self, op: &SparseOperator) -> Result<()> {
        let p = op.pattern();
        let symbolic_mat =
            SymbolicSparseColMatRef::new_checked(p.n(), p.n(), p.row_ptr(), None, p.col_idx());
        let mat = SparseColMatRef::new(symbolic_mat, op.values());
        let par = Par::Seq;
        let mut buf = MemBuffer::try_new(
            self.symbolic
                .factorize_numeric_lu_scratch::<f64>(par, Default::default()),
        )
        .map_err(factorization_error)?;
        self.symbolic
            .factorize_numeric_lu(
                &mut self.numeric,
                mat,
                par,
                MemStack::new(&mut buf),
                Default::default(),
            )
            .map_err(|e| SolverError {
                kind: match e {
                    faer::sparse::linalg::LuError::SymbolicSingular { .. } => {
                        SolverFailure::Singular
                    }
                    other => SolverFailure::Factorization(format!("{other:?}")),
                },
                residual_history: Vec::new(),
            })?;
        self.matrix = Some(op.clone());
        Ok(())
    }

    fn solve_raw(&self, rhs: &mut [f64]) {
        let par = Par::Seq;
        let lu = LuRef::new_unchecked(&self.symbolic, &self.numeric);
        let mut buf = MemBuffer::new(
            self.symbolic
                .solve_transpose_in_place_scratch::<f64>(1, par),
        );
        let n = rhs.len();
        let col = MatMut::from_column_major_slice_mut(rhs, n, 1);
        lu.solve_transpose_in_place_with_conj(Conj::No, col, par, MemStack::new(&mut buf));
    }

    /// Solves with the last factored operator, refining iteratively until the
    /// relative residual is at most `tol`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        let op = self
            .matrix
            .as_ref()
            .expect("DirectLu::solve called before factor");
        let mut x = b.to_vec();
        self.solve_raw(&mut x);
        let mut r = vec![0.0; b.len()];
        let mut history = vec![residual(op, &x, b, &mut r)];
        for _ in 0..MAX_REFINEMENT_STEPS {
            let last = *history.last().unwrap();
            if last <= tol {
                return Ok(x);
            }
            if !last.is_finite() {
                break;
            }
            self.solve_raw(&mut r);
            for (xi, di) in x.iter_mut().zip(&r) {
                *xi += di;
            }
            history.push(residual(op, &x, b, &mut r));
        }
        let last = *history.last().unwrap();
        if last <= tol {
            return Ok(x);
        }
        Err(SolverError {
            kind: if last.is_finite() {
                SolverFailure::NonConvergence
            } else {
                SolverFailure::Singular
            },
            residual_history: history,
        }
        .into())
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    op: SparseOperator,
}

impl Ilu0 {
    pub fn new(a: &SparseOperator) -> Result<Self> {
        let mut op = a.clone();
        let p = op.pattern().clone();
        let (row_ptr, cols, diag) = (p.row_ptr(), p.col_idx(), p.diag_slots());
        let vals = op.values_mut();
        for i in 0..p.n() {
            for kk in row_ptr[i]..diag[i] {
                let k = cols[kk];
                let pivot = vals[diag[k]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return Err(SolverError {
                        kind: SolverFailure::Singular,
                        residual_history: Vec::new(),
                    }
                    .into());
                }
                let lik = vals[kk] / pivot;
                vals[kk] = lik;
                // a_ij -= l_ik u_kj for j > k present in both rows.
                let mut jj = kk + 1;
                for kj in diag[k] + 1..row_ptr[k + 1] {
                    let j = cols[kj];
                    while jj < row_ptr[i + 1] && cols[jj] < j {
                        jj += 1;
                    }
                    if jj < row_ptr[i + 1] && cols[jj] == j {
                        vals[jj] -= lik * vals[kj];
                    }
                }
            }
            if vals[diag[i]] == 0.0 {
                return Err(SolverError {
                    kind: SolverFailure::Singular,
                    residual_history: Vec::new(),
                }
                .into());
            }
        }
        Ok(Self { op })
    }

    /// `z = (LU)^{-1} r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let p = self.op.pattern();
        let (row_ptr, cols, diag) = (p.row_ptr(), p.col_idx(), p.diag_slots());
        let vals = self.op.values();
        for i in 0..p.n() {
            let mut s = r[i];
            for k in row_ptr[i]..diag[i] {
                s -= vals[k] * z[cols[k]];
            }
            z[i] = s;
        }
        for i in (0..p.n()).rev() {
            let mut s = z[i];
            for k in diag[i] + 1..row_ptr[i + 1] {
                s -= vals[k] * z[cols[k]];
            }
            z[i] = s / vals[diag[i]];
        }
    }
}

fn krylov_failure(kind: SolverFailure, history: Vec<f64>) -> Error {
    SolverError {
        kind,
        residual_history: history,
    }
    .into()
}

/// Right-preconditioned BiCGSTAB with ILU(0); `x` holds the initial guess.
pub fn bicgstab(
    op: &SparseOperator,
    precond: &Ilu0,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
) -> Result<()> {
    let n = b.len();
    let bn = norm2(b).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    let mut history = vec![residual(op, x, b, &mut r)];
    if history[0] <= tol {
        return Ok(());
    }
    let r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    for _ in 0..MAX_KRYLOV_ITERATIONS {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(krylov_failure(SolverFailure::Breakdown, history));
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond.apply(&p, &mut y);
        op.mul_vec_into(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            return Err(krylov_failure(SolverFailure::Breakdown, history));
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm2(&s) / bn <= tol {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            let rel = residual(op, x, b, &mut r);
            history.push(rel);
            if rel <= tol {
                return Ok(());
            }
            continue;
        }
        precond.apply(&s, &mut z);
        op.mul_vec_into(&z, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return Err(krylov_failure(SolverFailure::Breakdown, history));
        }
        omega = dot(&t, &s) / tt;
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        let rel = norm2(&r) / bn;
        history.push(rel);
        if !rel.is_finite() {
            return Err(krylov_failure(SolverFailure::Breakdown, history));
        }
        if rel <= tol {
            // Confirm against the true residual; recursion drift is possible.
            let true_rel = residual(op, x, b, &mut r);
            history.push(true_rel);
            if true_rel <= tol {
                return Ok(());
            }
        }
    }
    Err(krylov_failure(SolverFailure::NonConvergence, history))
}

/// Jacobi-preconditioned conjugate gradients for SPD operators.
pub fn conjugate_gradient(op: &SparseOperator, b: &[f64], x: &mut [f64], tol: f64) -> Result<()> {
    let n = b.len();
    let inv_diag: Vec<f64> = op.diagonal().iter().map(|d| 1.0 / d).collect();
    let bn = norm2(b).max(f64::MIN_POSITIVE);
    let mut r = vec![0.0; n];
    let mut history = vec![residual(op, x, b, &mut r)];
    if history[0] <= tol {
        return Ok(());
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..MAX_KRYLOV_ITERATIONS {
        op.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap.is_nan() || pap <= 0.0 {
            return Err(krylov_failure(SolverFailure::Breakdown, history));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / bn;
        history.push(rel);
        if rel <= tol {
            let true_rel = residual(op, x, b, &mut r);
            history.push(true_rel);
            if true_rel <= tol {
                return Ok(());
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(krylov_failure(SolverFailure::NonConvergence, history))
}

/// Solver for a sequence of systems sharing one sparsity pattern.
#[derive(Debug)]
pub enum LinearSolver {
    Direct(Box<DirectLu>),
    Bicgstab(Option<Ilu0>),
    Cg,
}

impl LinearSolver {
    pub fn for_general(kind: SolverKind, template: &SparseOperator) -> Result<Self> {
        Ok(match kind {
            SolverKind::Direct => LinearSolver::Direct(Box::new(DirectLu::analyze(template)?)),
            SolverKind::Iterative => LinearSolver::Bicgstab(None),
        })
    }

    pub fn for_spd(kind: SolverKind, template: &SparseOperator) -> Result<Self> {
        Ok(match kind {
            SolverKind::Direct => LinearSolver::Direct(Box::new(DirectLu::analyze(template)?)),
            SolverKind::Iterative => LinearSolver::Cg,
        })
    }

    /// Prepares for solves with `op` (numeric factorization or preconditioner).
    pub fn update(&mut self, op: &SparseOperator) -> Result<()> {
        match self {
            LinearSolver::Direct(lu) => lu.factor(op),
            LinearSolver::Bicgstab(ilu) => {
                *ilu = Some(Ilu0::new(op)?);
                Ok(())
            }
            LinearSolver::Cg => Ok(()),
        }
    }

    /// Solves `op x = b`; `guess` seeds the iterative solvers.
    pub fn solve(
        &self,
        op: &SparseOperator,
        b: &[f64],
        guess: &[f64],
        tol: f64,
    ) -> Result<Vec<f64>> {
        match self {
            LinearSolver::Direct(lu) => lu.solve(b, tol),
            LinearSolver::Bicgstab(ilu) => {
                let ilu = ilu.as_ref().expect("update() before solve()");
                let mut x = guess.to_vec();
                bicgstab(op, ilu, b, &mut x, tol)?;
                Ok(x)
            }
            LinearSolver::Cg => {
                let mut x = guess.to_vec();
                conjugate_gradient(op, b, &mut x, tol)?;
                Ok(x)
            }
        }
    }
}

/// One-shot solve of `op x = b`.
pub fn solve(op: &SparseOperator, b: &[f64], kind: SolverKind, tol: f64) -> Result<Vec<f64>> {
    let mut solver = if op.is_symmetric() {
        LinearSolver::for_spd(kind, op)?
    } else {
        LinearSolver::for_general(kind, op)?
    };
    solver.update(op)?;
    solver.solve(op, b, &vec![0.0; b.len()], tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{FeFunction, P1Space};
    use crate::mesh::{build_macro_mesh, MacroKind};

    fn systems() -> (SparseOperator, SparseOperator) {
        let mesh = build_macro_mesh(6, MacroKind::Acute);
        let space = P1Space::new(&mesh);
        let m = space.lumped_mass();
        let a = space.stiffness();
        let v = FeFunction::new(
            mesh.vertices()
                .iter()
                .map(|p| 30.0 * (-30.0 * (p.x * p.x + p.y * p.y)).exp())
                .collect(),
        );
        let c = space.chemotaxis(&v).unwrap();
        let k = 1e-3;
        let shift: Vec<f64> = m.diagonal().iter().map(|d| d / k).collect();
        let general = a.combine(1.0, &c, -1.0, &shift);
        let shift_v: Vec<f64> = m.diagonal().iter().map(|d| d * (1.0 / k + 1.0)).collect();
        let spd = a.combine(1.0, &a, 0.0, &shift_v);
        (general, spd)
    }

    fn rel_residual(op: &SparseOperator, x: &[f64], b: &[f64]) -> f64 {
        let mut r = vec![0.0; b.len()];
        residual(op, x, b, &mut r)
    }

    #[test]
    fn direct_and_iterative_agree() {
        let (general, spd) = systems();
        let b: Vec<f64> = (0..general.n())
            .map(|i| ((i * 7) % 13) as f64 - 6.0)
            .collect();
        for op in [&general, &spd] {
            let xd = solve(op, &b, SolverKind::Direct, 1e-12).unwrap();
            let xi = solve(op, &b, SolverKind::Iterative, 1e-12).unwrap();
            assert!(rel_residual(op, &xd, &b) <= 1e-12);
            assert!(rel_residual(op, &xi, &b) <= 1e-12);
            let scale = xd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, c) in xd.iter().zip(&xi) {
                assert!((a - c).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn direct_solves_are_reproducible() {
        let (general, _) = systems();
        let b: Vec<f64> = (0..general.n()).map(|i| (i as f64).cos()).collect();
        let x1 = solve(&general, &b, SolverKind::Direct, 1e-12).unwrap();
        let x2 = solve(&general, &b, SolverKind::Direct, 1e-12).unwrap();
        assert_eq!(x1, x2);
    }

    #[test]
    fn singular_system_is_reported() {
        // Pure stiffness annihilates constants.
        let mesh = build_macro_mesh(2, MacroKind::Acute);
        let a = P1Space::new(&mesh).stiffness();
        let b: Vec<f64> = (0..a.n()).map(|i| i as f64).collect();
        let err = solve(&a, &b, SolverKind::Direct, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Solver(_)), "{err}");
    }

    #[test]
    fn solver_kind_parses() {
        assert_eq!("Direct".parse::<SolverKind>().unwrap(), SolverKind::Direct);
        assert_eq!(
            "iterative".parse::<SolverKind>().unwrap(),
            SolverKind::Iterative
        );
        assert!("gmres".parse::<SolverKind>().is_err());
    }
}
