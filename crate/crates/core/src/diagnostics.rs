//! Discrete invariants and energies tracked along a run.
//!
//! Quantities follow the lumped inner product `(x, y)_h = sum m_i x_i y_i`
//! and the stiffness form `‖∇x‖^2 = x^T A x`:
//!
//! * `E0(u, v) = ½‖v‖_h² + ½‖∇v‖² - (u, v)_h + (u log u, 1)_h`
//! * `E1(u, v) = ‖u‖_h² + ‖Δ̃_h v‖_h²` with `Δ̃_h v = -M^{-1} A v`
//!
//! The restriction indicators evaluate the step-size conditions of the
//! positivity theory with every unspecified generic constant replaced by
//! [`IndicatorConfig::generic_c`]. They are indicators only: the true
//! constants are unknown, so a `true`/`false` flag says nothing definitive.

use std::f64::consts::{E, FRAC_PI_2};
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{discrete_laplacian, FeFunction, LumpedMass};
use crate::mesh::Mesh;
use crate::scheme::SchemeState;
use crate::sparse::SparseOperator;

/// Diagnostics of one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    /// NaN when some `u_i < 0`, where the entropy is undefined.
    pub e0: f64,
    pub e1: f64,
    pub grad_u_sq: f64,
    pub grad_v_sq: f64,
    pub lap_v_lumped_sq: f64,
    /// `(1 + k) mass_v(n) - mass_v(n-1) - k mass_u(n)`; absent at `n = 0`.
    pub v_mass_residual: Option<f64>,
    /// `E0(n) - E0(n-1)`; absent at `n = 0`.
    pub e0_decrement: Option<f64>,
    pub positivity_u: bool,
    pub positivity_v: bool,
}

impl StepRecord {
    pub fn e0_valid(&self) -> bool {
        !self.e0.is_nan()
    }
}

/// Exact CSV header of the diagnostics file.
pub const CSV_HEADER: [&str; 17] = [
    "n",
    "t",
    "mass_u",
    "mass_v",
    "min_u",
    "max_u",
    "min_v",
    "max_v",
    "E0",
    "E1",
    "grad_u_sq",
    "grad_v_sq",
    "lap_v_lumped_sq",
    "v_mass_residual",
    "e0_decrement",
    "positivity_u",
    "positivity_v",
];

/// `(u log u, 1)_h`, or NaN if any `u_i < 0`. `0 log 0 = 0`.
pub fn entropy(u: &FeFunction, mass: &LumpedMass) -> f64 {
    let mut acc = 0.0;
    for (&m, &x) in mass.diagonal().iter().zip(u.values()) {
        if x > 0.0 {
            acc += m * x * x.ln();
        } else if x < 0.0 {
            return f64::NAN;
        }
    }
    acc
}

/// `E0(u, v)`; NaN if `u` has a negative nodal value.
pub fn energy_e0(
    u: &FeFunction,
    v: &FeFunction,
    mass: &LumpedMass,
    stiffness: &SparseOperator,
) -> f64 {
    let (uv, vv) = (u.values(), v.values());
    0.5 * mass.inner(vv, vv) + 0.5 * stiffness.quadratic_form(vv) - mass.inner(uv, vv)
        + entropy(u, mass)
}

/// `E1(u, v)`.
pub fn energy_e1(
    u: &FeFunction,
    v: &FeFunction,
    mass: &LumpedMass,
    stiffness: &SparseOperator,
) -> f64 {
    let lap = discrete_laplacian(v, mass, stiffness);
    mass.inner(u.values(), u.values()) + mass.inner(lap.values(), lap.values())
}

/// Builds [`StepRecord`]s for consecutive states of one run.
#[derive(Debug, Clone)]
pub struct StepRecorder {
    mass: LumpedMass,
    stiffness: SparseOperator,
    k: f64,
    prev: Option<StepRecord>,
}

impl StepRecorder {
    pub fn new(mass: LumpedMass, stiffness: SparseOperator, k: f64) -> Self {
        Self {
            mass,
            stiffness,
            k,
            prev: None,
        }
    }

    pub fn record(&mut self, state: &SchemeState) -> StepRecord {
        let rec = compute_record(
            state,
            &self.mass,
            &self.stiffness,
            self.k,
            self.prev.as_ref(),
        );
        self.prev = Some(rec.clone());
        rec
    }
}

/// Diagnostics of `state`; `prev` is the record of the preceding step.
pub fn compute_record(
    state: &SchemeState,
    mass: &LumpedMass,
    stiffness: &SparseOperator,
    k: f64,
    prev: Option<&StepRecord>,
) -> StepRecord {
    let (u, v) = (&state.u, &state.v);
    let lap = discrete_laplacian(v, mass, stiffness);
    let lap_v_lumped_sq = mass.inner(lap.values(), lap.values());
    let mass_u = mass.integral(u.values());
    let mass_v = mass.integral(v.values());
    let e0 = energy_e0(u, v, mass, stiffness);
    let (min_u, min_v) = (u.min(), v.min());
    StepRecord {
        n: state.n,
        t: state.t,
        mass_u,
        mass_v,
        min_u,
        max_u: u.max(),
        min_v,
        max_v: v.max(),
        e0,
        e1: mass.inner(u.values(), u.values()) + lap_v_lumped_sq,
        grad_u_sq: stiffness.quadratic_form(u.values()),
        grad_v_sq: stiffness.quadratic_form(v.values()),
        lap_v_lumped_sq,
        v_mass_residual: prev.map(|p| (1.0 + k) * mass_v - p.mass_v - k * mass_u),
        e0_decrement: prev.map(|p| e0 - p.e0),
        positivity_u: min_u > 0.0,
        positivity_v: min_v >= 0.0,
    }
}

/// Domain and constants used by the Moser–Trudinger pair and the indicators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorConfig {
    pub delta: f64,
    pub epsilon: f64,
    /// Minimum interior angle of the domain boundary.
    pub theta_omega: f64,
    /// Stand-in for every unspecified constant (`C`, `C_Ω`, `C_MT`).
    pub generic_c: f64,
    /// Final time `T` entering `F`.
    pub final_time: f64,
    /// Domain measure `|Ω|`.
    pub domain_measure: f64,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        Self {
            delta: 0.5,
            epsilon: 0.5,
            theta_omega: FRAC_PI_2,
            generic_c: 1.0,
            final_time: 1.0,
            domain_measure: 1.0,
        }
    }
}

impl IndicatorConfig {
    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !open_unit(self.delta) || !open_unit(self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "delta and epsilon must lie in (0, 1), got {} and {}",
                self.delta, self.epsilon
            )));
        }
        if !(self.theta_omega > 0.0 && self.generic_c > 0.0 && self.domain_measure > 0.0)
            || self.final_time < 0.0
        {
            return Err(Error::InvalidConfig(
                "theta_omega, generic_c and |Ω| must be positive, T non-negative".into(),
            ));
        }
        Ok(())
    }

    /// `(1+δ)² [8 θ C_MT ε + 1] ‖u0‖_{L¹} / (8 θ) ≤ ½`.
    pub fn smallness_holds(&self, u0_l1: f64) -> bool {
        let th = self.theta_omega;
        (1.0 + self.delta).powi(2) * (8.0 * th * self.generic_c * self.epsilon + 1.0) * u0_l1
            / (8.0 * th)
            <= 0.5
    }
}

/// Both sides of the discrete Moser–Trudinger inequality
/// `∫ I_h(e^u) ≤ C_Ω (1 + C_MT ‖∇u‖²) exp(‖∇u‖² / (8θ) + ‖u‖_{L¹} / |Ω|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoserTrudinger {
    pub lhs: f64,
    pub rhs: f64,
    /// Natural logarithms, finite even when the sides overflow.
    pub log_lhs: f64,
    pub log_rhs: f64,
    /// Either side exceeded the `f64` range.
    pub overflow: bool,
    /// `u > 0` nodally, as the inequality assumes.
    pub hypothesis_holds: bool,
}

pub fn moser_trudinger_pair(
    u: &FeFunction,
    mass: &LumpedMass,
    stiffness: &SparseOperator,
    cfg: &IndicatorConfig,
) -> MoserTrudinger {
    let vals = u.values();
    let hypothesis_holds = u.min() > 0.0;
    if !hypothesis_holds {
        log::warn!("Moser-Trudinger pair evaluated for a non-positive density");
    }
    // log sum m_i e^{u_i}, shifted by the max for range safety.
    let umax = u.max();
    let scaled: f64 = mass
        .diagonal()
        .iter()
        .zip(vals)
        .map(|(m, x)| m * (x - umax).exp())
        .sum();
    let log_lhs = umax + scaled.ln();

    let grad_sq = stiffness.quadratic_form(vals).max(0.0);
    let l1: f64 = mass
        .diagonal()
        .iter()
        .zip(vals)
        .map(|(m, x)| m * x.abs())
        .sum();
    let c = cfg.generic_c;
    let log_rhs = c.ln()
        + (1.0 + c * grad_sq).ln()
        + grad_sq / (8.0 * cfg.theta_omega)
        + l1 / cfg.domain_measure;
    let (lhs, rhs) = (log_lhs.exp(), log_rhs.exp());
    MoserTrudinger {
        lhs,
        rhs,
        log_lhs,
        log_rhs,
        overflow: lhs.is_infinite() || rhs.is_infinite(),
        hypothesis_holds,
    }
}

/// Bound quantities of the positivity estimate and its step-size conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestrictionIndicators {
    pub e0: f64,
    pub e1: f64,
    pub u0_l1: f64,
    pub v0_l1: f64,
    pub r0: f64,
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    /// `ln F`; `F` itself overflows for realistic data.
    pub log_f: f64,
    pub f: f64,
    pub h: f64,
    /// Measured `min |A_ij|` over mesh edges, standing in for `C_neg`.
    pub c_neg: f64,
    /// `C k / h² F < ½`
    pub cond_hk: bool,
    /// `-C_neg + C h F^{1/2} < 0`
    pub cond_h: bool,
    /// `C h E1 ≤ 5/12`
    pub cond_h_ii: bool,
    /// Smallness condition on `(δ, ε)`.
    pub smallness: bool,
    /// False when `E0` is undefined (negative `u0`); the bounds are then NaN.
    pub valid: bool,
}

/// `R0 = 1/(δ e) + (‖u0‖₁/δ) (C_Ω/ε + ε + (1+δ)/|Ω| (‖v0‖₁ + ‖u0‖₁))`.
pub fn r0(u0_l1: f64, v0_l1: f64, cfg: &IndicatorConfig) -> f64 {
    let (d, eps) = (cfg.delta, cfg.epsilon);
    1.0 / (d * E)
        + u0_l1 / d * (cfg.generic_c / eps + eps + (1.0 + d) / cfg.domain_measure * (v0_l1 + u0_l1))
}

/// `(B0, B1, B2)` from `E0` and `R0`.
pub fn bounds(e0: f64, r0: f64, cfg: &IndicatorConfig) -> (f64, f64, f64) {
    let d = cfg.delta;
    let b0 = e0 / d + r0;
    let b1 = (1.0 + 1.0 / d) * e0 + r0 + 2.0 * cfg.domain_measure / E;
    (b0, b1, e0 + b0 + b1)
}

/// `ln F = B2 + √(T B2) + ln(E0 + C T B1³ + C T ‖u0‖₁)`.
pub fn log_f(e0: f64, b1: f64, b2: f64, u0_l1: f64, cfg: &IndicatorConfig) -> f64 {
    let (c, t) = (cfg.generic_c, cfg.final_time);
    b2 + (t * b2).sqrt() + (e0 + c * t * b1.powi(3) + c * t * u0_l1).ln()
}

pub fn restriction_indicators(
    u0: &FeFunction,
    v0: &FeFunction,
    mass: &LumpedMass,
    stiffness: &SparseOperator,
    mesh: &Mesh,
    k: f64,
    cfg: &IndicatorConfig,
) -> Result<RestrictionIndicators> {
    cfg.validate()?;
    u0.check_len(mass.len())?;
    v0.check_len(mass.len())?;
    let l1 = |x: &FeFunction| -> f64 {
        mass.diagonal()
            .iter()
            .zip(x.values())
            .map(|(m, a)| m * a.abs())
            .sum()
    };
    let (u0_l1, v0_l1) = (l1(u0), l1(v0));
    let e0 = energy_e0(u0, v0, mass, stiffness);
    let e1 = energy_e1(u0, v0, mass, stiffness);
    let r0 = r0(u0_l1, v0_l1, cfg);
    let (b0, b1, b2) = bounds(e0, r0, cfg);
    let log_f = log_f(e0, b1, b2, u0_l1, cfg);
    let h = mesh.mesh_size()?;
    let c_neg = stiffness
        .edge_entries()
        .map(|(_, _, a)| a.abs())
        .fold(f64::INFINITY, f64::min);
    let c = cfg.generic_c;
    let valid = !e0.is_nan();
    Ok(RestrictionIndicators {
        e0,
        e1,
        u0_l1,
        v0_l1,
        r0,
        b0,
        b1,
        b2,
        log_f,
        f: log_f.exp(),
        h,
        c_neg,
        cond_hk: valid && c.ln() + k.ln() - 2.0 * h.ln() + log_f < 0.5f64.ln(),
        cond_h: valid && c.ln() + h.ln() + 0.5 * log_f < c_neg.ln(),
        cond_h_ii: c * h * e1 <= 5.0 / 12.0,
        smallness: cfg.smallness_holds(u0_l1),
        valid,
    })
}

/// Result of scanning `(δ, ε)` for the `B2` closest to a target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct B2Scan {
    pub delta: f64,
    pub epsilon: f64,
    pub b2: f64,
    pub distance: f64,
    pub smallness: bool,
}

/// Scans `δ, ε ∈ {1/m, ..., (m-1)/m}` and returns the `B2` nearest `target`.
pub fn scan_b2(
    e0: f64,
    u0_l1: f64,
    v0_l1: f64,
    base: &IndicatorConfig,
    m: usize,
    target: f64,
) -> B2Scan {
    let mut best: Option<B2Scan> = None;
    for i in 1..m {
        for j in 1..m {
            let cfg = IndicatorConfig {
                delta: i as f64 / m as f64,
                epsilon: j as f64 / m as f64,
                ..*base
            };
            let (_, _, b2) = bounds(e0, r0(u0_l1, v0_l1, &cfg), &cfg);
            let distance = (b2 - target).abs();
            if best.is_none_or(|b| distance < b.distance) {
                best = Some(B2Scan {
                    delta: cfg.delta,
                    epsilon: cfg.epsilon,
                    b2,
                    distance,
                    smallness: cfg.smallness_holds(u0_l1),
                });
            }
        }
    }
    best.expect("scan grid is non-empty for m >= 2")
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn record_fields(r: &StepRecord) -> [String; 17] {
    [
        r.n.to_string(),
        fmt_f64(r.t),
        fmt_f64(r.mass_u),
        fmt_f64(r.mass_v),
        fmt_f64(r.min_u),
        fmt_f64(r.max_u),
        fmt_f64(r.min_v),
        fmt_f64(r.max_v),
        fmt_f64(r.e0),
        fmt_f64(r.e1),
        fmt_f64(r.grad_u_sq),
        fmt_f64(r.grad_v_sq),
        fmt_f64(r.lap_v_lumped_sq),
        r.v_mass_residual.map(fmt_f64).unwrap_or_default(),
        r.e0_decrement.map(fmt_f64).unwrap_or_default(),
        r.positivity_u.to_string(),
        r.positivity_v.to_string(),
    ]
}

pub fn write_records<W: Write>(records: &[StepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(record_fields(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `records` as CSV with the [`CSV_HEADER`] columns.
pub fn emit_records(records: &[StepRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidConfig("no records to emit".into()));
    }
    write_records(records, File::create(path)?)
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<StepRecord>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            message: format!("unexpected header {header:?}"),
        });
    }
    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |col: usize| Error::Parse {
            path: path.into(),
            line,
            message: format!("bad value `{}` in column {}", &row[col], CSV_HEADER[col]),
        };
        let f = |col: usize| row[col].parse::<f64>().map_err(|_| bad(col));
        let opt = |col: usize| -> Result<Option<f64>> {
            if row[col].is_empty() {
                Ok(None)
            } else {
                f(col).map(Some)
            }
        };
        let b = |col: usize| row[col].parse::<bool>().map_err(|_| bad(col));
        records.push(StepRecord {
            n: row[0].parse().map_err(|_| bad(0))?,
            t: f(1)?,
            mass_u: f(2)?,
            mass_v: f(3)?,
            min_u: f(4)?,
            max_u: f(5)?,
            min_v: f(6)?,
            max_v: f(7)?,
            e0: f(8)?,
            e1: f(9)?,
            grad_u_sq: f(10)?,
            grad_v_sq: f(11)?,
            lap_v_lumped_sq: f(12)?,
            v_mass_residual: opt(13)?,
            e0_decrement: opt(14)?,
            positivity_u: b(15)?,
            positivity_v: b(16)?,
        });
    }
    Ok(records)
}
