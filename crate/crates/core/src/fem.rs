//! P1 finite elements with mass lumping.
//!
//! The lumped inner product is `(x, y)_h = sum_i m_i x_i y_i` with
//! `m_i = sum_{T ∋ i} |T| / 3`, i.e. the exact integral of the nodal
//! interpolant of `x y`. The chemotaxis term `(∇v, u ∇x)` is evaluated with a
//! one-point barycentric rule for `u`, which turns it into a sparse operator
//! `C(v)` acting on the nodal values of `u`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point2};
use crate::sparse::{SparseOperator, SparsityPattern};

/// Nodal coefficients of a continuous piecewise-linear field.
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    values: Vec<f64>,
}

impl FeFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
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

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at the barycentre of triangle `tri`: the mean of its vertex values.
    pub fn barycentric_value(&self, tri: [usize; 3]) -> f64 {
        (self.values[tri[0]] + self.values[tri[1]] + self.values[tri[2]]) / 3.0
    }

    pub(crate) fn check_len(&self, expected: usize) -> Result<()> {
        if self.values.len() == expected {
            Ok(())
        } else {
            Err(Error::SizeMismatch {
                expected,
                found: self.values.len(),
            })
        }
    }
}

impl From<Vec<f64>> for FeFunction {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Diagonal of the lumped mass matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpedMass {
    diagonal: Vec<f64>,
}

impl LumpedMass {
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// `(x, y)_h`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.diagonal
            .iter()
            .zip(x.iter().zip(y))
            .map(|(m, (a, b))| m * a * b)
            .sum()
    }

    /// `(x, 1)_h`.
    pub fn integral(&self, x: &[f64]) -> f64 {
        self.diagonal.iter().zip(x).map(|(m, a)| m * a).sum()
    }
}

/// Area and basis-function gradients of one triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl ElementGeometry {
    pub fn new(p: [Point2; 3]) -> Self {
        let det = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[1].y - p[0].y) * (p[2].x - p[0].x);
        // ∇φ_k is the inward normal of the opposite edge scaled by 1 / (2|T|).
        let grads = [0, 1, 2].map(|k| {
            let a = p[(k + 1) % 3];
            let b = p[(k + 2) % 3];
            [(a.y - b.y) / det, (b.x - a.x) / det]
        });
        Self {
            area: 0.5 * det,
            grads,
        }
    }

    /// Gradient of the P1 function with vertex values `vals`.
    pub fn gradient(&self, vals: [f64; 3]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (v, grad) in vals.iter().zip(&self.grads) {
            g[0] += v * grad[0];
            g[1] += v * grad[1];
        }
        g
    }
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Precomputed element data and operator pattern for the P1 space on a mesh.
#[derive(Debug, Clone)]
pub struct P1Space {
    n: usize,
    triangles: Vec<[usize; 3]>,
    geometry: Vec<ElementGeometry>,
    pattern: Arc<SparsityPattern>,
    /// Storage slots of the local 3x3 block of each triangle, row-major.
    slots: Vec<[usize; 9]>,
}

impl P1Space {
    pub fn new(mesh: &Mesh) -> Self {
        let pattern = Arc::new(SparsityPattern::from_mesh(mesh));
        let triangles = mesh.triangles().to_vec();
        let geometry = (0..mesh.n_triangles())
            .map(|t| ElementGeometry::new(mesh.triangle_points(t)))
            .collect();
        let slots = triangles
            .iter()
            .map(|tri| {
                let mut s = [0; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        s[3 * a + b] = pattern.slot(tri[a], tri[b]).expect("edge in pattern");
                    }
                }
                s
            })
            .collect();
        Self {
            n: mesh.n_vertices(),
            triangles,
            geometry,
            pattern,
            slots,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn geometry(&self) -> &[ElementGeometry] {
        &self.geometry
    }

    pub fn lumped_mass(&self) -> LumpedMass {
        let mut diagonal = vec![0.0; self.n];
        for (tri, g) in self.triangles.iter().zip(&self.geometry) {
            for &i in tri {
                diagonal[i] += g.area / 3.0;
            }
        }
        LumpedMass { diagonal }
    }

    /// `A_ij = (∇φ_j, ∇φ_i)`.
    pub fn stiffness(&self) -> SparseOperator {
        let mut op = SparseOperator::zeros(self.pattern.clone(), true);
        let values = op.values_mut();
        for (g, slots) in self.geometry.iter().zip(&self.slots) {
            for a in 0..3 {
                for b in 0..3 {
                    values[slots[3 * a + b]] += g.area * dot(g.grads[a], g.grads[b]);
                }
            }
        }
        op
    }

    /// `C(v)_ij = sum_{T ∋ i, j} (|T| / 3) ∇v|_T · ∇φ_i|_T`, so that
    /// `(C(v) u)_i = (∇v, ū ∇φ_i)` with `ū` the barycentric value of `u`.
    pub fn chemotaxis(&self, v: &FeFunction) -> Result<SparseOperator> {
        let mut op = SparseOperator::zeros(self.pattern.clone(), false);
        self.chemotaxis_into(v, &mut op)?;
        Ok(op)
    }

    /// Reassembles `C(v)` into an operator sharing this space's pattern.
    pub fn chemotaxis_into(&self, v: &FeFunction, op: &mut SparseOperator) -> Result<()> {
        v.check_len(self.n)?;
        assert!(Arc::ptr_eq(op.pattern(), &self.pattern));
        op.set_symmetric(false);
        let values = op.values_mut();
        values.fill(0.0);
        let vv = v.values();
        for ((tri, g), slots) in self.triangles.iter().zip(&self.geometry).zip(&self.slots) {
            let grad_v = g.gradient(tri.map(|i| vv[i]));
            let w = g.area / 3.0;
            for a in 0..3 {
                let entry = w * dot(grad_v, g.grads[a]);
                for b in 0..3 {
                    values[slots[3 * a + b]] += entry;
                }
            }
        }
        Ok(())
    }
}

pub fn assemble_lumped_mass(mesh: &Mesh) -> LumpedMass {
    P1Space::new(mesh).lumped_mass()
}

pub fn assemble_stiffness(mesh: &Mesh) -> SparseOperator {
    P1Space::new(mesh).stiffness()
}

pub fn assemble_chemotaxis(mesh: &Mesh, v: &FeFunction) -> Result<SparseOperator> {
    v.check_len(mesh.n_vertices())?;
    P1Space::new(mesh).chemotaxis(v)
}

/// Nodal interpolant `I_h f`.
pub fn nodal_interpolate(f: impl Fn(Point2) -> f64, mesh: &Mesh) -> Result<FeFunction> {
    let values = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(vertex, &p)| {
            let value = f(p);
            if value.is_finite() {
                Ok(value)
            } else {
                Err(Error::NonFinite {
                    vertex,
                    x: p.x,
                    y: p.y,
                    value,
                })
            }
        })
        .collect::<Result<_>>()?;
    Ok(FeFunction::new(values))
}

/// Discrete Laplacian `w = -M^{-1} A v`, defined by `-(w, x)_h = (∇v, ∇x)`.
pub fn discrete_laplacian(
    v: &FeFunction,
    mass: &LumpedMass,
    stiffness: &SparseOperator,
) -> FeFunction {
    let av = stiffness.mul_vec(v.values());
    FeFunction::new(
        av.iter()
            .zip(mass.diagonal())
            .map(|(a, m)| -a / m)
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    /// `‖u‖_h`
    pub lumped_l2: f64,
    /// `‖∇u‖`
    pub grad_l2: f64,
    /// `sum_i m_i |u_i|`
    pub lumped_l1: f64,
    pub min: f64,
    pub max: f64,
    /// `(u, 1)_h`
    pub mass: f64,
}

pub fn norms(u: &FeFunction, mass: &LumpedMass, stiffness: &SparseOperator) -> Norms {
    let vals = u.values();
    let m = mass.diagonal();
    let grad_sq = stiffness.quadratic_form(vals);
    Norms {
        lumped_l2: mass.inner(vals, vals).sqrt(),
        // Round-off can make the form of a constant slightly negative.
        grad_l2: grad_sq.max(0.0).sqrt(),
        lumped_l1: m.iter().zip(vals).map(|(m, x)| m * x.abs()).sum(),
        min: u.min(),
        max: u.max(),
        mass: mass.integral(vals),
    }
}

/// Writes one value per line with 17 significant digits.
pub fn write_values(u: &FeFunction) -> String {
    use std::fmt::Write as _;
    let mut s = String::with_capacity(24 * u.len());
    for v in u.values() {
        let _ = writeln!(s, "{v:.16e}");
    }
    s
}

pub fn parse_values(text: &str) -> std::result::Result<FeFunction, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| format!("line {}: {e}", i + 1))
        })
        .collect::<std::result::Result<Vec<_>, _>>()
        .map(FeFunction::new)
}
