//! Scenario execution: run directories, snapshots, sweeps and reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ks_core::diagnostics::scan_b2;
use ks_core::vtk::{save_vtk, verify_vtk_file};
use ks_core::{
    acuteness_report, build_macro_mesh, emit_records, load_mesh, moser_trudinger_pair,
    restriction_indicators, run_with, Error, FeFunction, IndicatorConfig, Mesh, P1Space,
    StepRecord,
};
use rayon::prelude::*;

use crate::config::{InitialData, Scenario, ScenarioKind};
use crate::error::CliError;

pub const CONFIG_ECHO: &str = "config.echo";
pub const MESH_FILE: &str = "mesh.ksmesh";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SWEEP_TABLE: &str = "sweep_min_u.csv";

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub run_id: String,
    pub dir: PathBuf,
    pub records: Vec<StepRecord>,
    pub snapshots: Vec<usize>,
}

impl RunSummary {
    pub fn first_negative_step(&self) -> Option<usize> {
        self.records.iter().find(|r| !r.positivity_u).map(|r| r.n)
    }

    pub fn min_u(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.min_u)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn build_mesh(sc: &Scenario) -> Result<Mesh, CliError> {
    match &sc.mesh_file {
        Some(path) => load_mesh(path).map_err(|e| CliError::Config(format!("mesh: {e}"))),
        None => Ok(build_macro_mesh(sc.nsquare, sc.macro_kind)),
    }
}

pub fn initial_fields(sc: &Scenario, mesh: &Mesh) -> Result<(FeFunction, FeFunction), CliError> {
    let (u0, v0) = sc.data.gaussians();
    Ok((u0.interpolate(mesh)?, v0.interpolate(mesh)?))
}

fn output_error(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    }
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Output {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Runs one scenario into `<output_dir>/<run-id>/`.
///
/// Loss of positivity is recorded, never repaired. On a solver failure the
/// diagnostics up to the failing step are still written.
pub fn run_scenario(sc: &Scenario) -> Result<RunSummary, CliError> {
    sc.validate()?;
    if let Some(w) = sc.low_c0_warning() {
        log::warn!("{w}");
    }
    let run_id = sc.run_id();
    let dir = sc.output_dir.join(&run_id);
    fs::create_dir_all(&dir).map_err(io_error(&dir))?;
    let echo = dir.join(CONFIG_ECHO);
    fs::write(&echo, sc.echo()).map_err(io_error(&echo))?;

    let mesh = build_mesh(sc)?;
    let mesh_path = dir.join(MESH_FILE);
    ks_core::save_mesh(&mesh, &mesh_path).map_err(output_error(&mesh_path))?;
    let (u0, v0) = initial_fields(sc, &mesh)?;
    log::info!(
        "{run_id}: {} vertices, {} triangles, {} steps",
        mesh.n_vertices(),
        mesh.n_triangles(),
        sc.n_steps
    );

    let mut records = Vec::with_capacity(sc.n_steps + 1);
    let mut write_failure: Option<CliError> = None;
    let result = run_with(&mesh, u0, v0, sc.scheme_config(), |state, rec| {
        records.push(rec.clone());
        if !rec.positivity_u && records.iter().filter(|r| !r.positivity_u).count() == 1 {
            log::info!(
                "{run_id}: min u = {:e} at step {} (t = {:e})",
                rec.min_u,
                rec.n,
                rec.t
            );
        }
        if sc.snapshot_steps.binary_search(&state.n).is_ok() {
            if let Err(e) = write_snapshot(&dir, &mesh, state.n, &state.u, &state.v) {
                write_failure = Some(e);
                return Err(Error::InvalidConfig("snapshot output failed".into()));
            }
        }
        Ok(())
    });

    let diag = dir.join(DIAGNOSTICS_FILE);
    if let Some(e) = write_failure {
        return Err(e);
    }
    if !records.is_empty() {
        emit_records(&records, &diag).map_err(output_error(&diag))?;
    }
    result.map_err(|source| CliError::Run {
        run_id: run_id.clone(),
        source,
    })?;
    Ok(RunSummary {
        run_id,
        dir,
        records,
        snapshots: sc.snapshot_steps.clone(),
    })
}

fn write_snapshot(
    dir: &Path,
    mesh: &Mesh,
    n: usize,
    u: &FeFunction,
    v: &FeFunction,
) -> Result<(), CliError> {
    for (name, f) in [("u", u), ("v", v)] {
        let path = dir.join(format!("{name}_{n}.vtk"));
        let fields = [(name, f)];
        save_vtk(mesh, &format!("{name} at step {n}"), &fields, &path)
            .map_err(output_error(&path))?;
        verify_vtk_file(&path, mesh, &fields).map_err(output_error(&path))?;
    }
    Ok(())
}

#[derive(Debug)]
pub struct SweepSummary {
    pub table: PathBuf,
    pub runs: Vec<(f64, Result<RunSummary, CliError>)>,
}

/// One non-blowup run per `C0`, in parallel, plus a combined `min_u` table.
/// Failed runs are reported and left out of the table; the others complete.
pub fn sweep(base: &Scenario, values: &[f64]) -> Result<SweepSummary, CliError> {
    if base.kind != ScenarioKind::NonBlowup {
        return Err(CliError::Config(
            "sweep requires the nonblowup scenario".into(),
        ));
    }
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one C0 value".into()));
    }
    if base.run_id.is_some() {
        return Err(CliError::Config(
            "run_id cannot be fixed for a sweep".into(),
        ));
    }
    let scenarios: Vec<Scenario> = values
        .iter()
        .map(|&c0| {
            let mut sc = base.clone();
            sc.data = InitialData::NonBlowup { c0 };
            sc.validate().map(|_| sc)
        })
        .collect::<Result<_, _>>()?;
    fs::create_dir_all(&base.output_dir).map_err(io_error(&base.output_dir))?;

    let runs: Vec<(f64, Result<RunSummary, CliError>)> = scenarios
        .par_iter()
        .zip(values.par_iter())
        .map(|(sc, &c0)| (c0, run_scenario(sc)))
        .collect();

    let table = base.output_dir.join(SWEEP_TABLE);
    write_sweep_table(&table, base, &runs)?;
    for (c0, r) in &runs {
        if let Err(e) = r {
            log::error!("C0 = {c0}: {e}");
        }
    }
    Ok(SweepSummary { table, runs })
}

fn write_sweep_table(
    path: &Path,
    base: &Scenario,
    runs: &[(f64, Result<RunSummary, CliError>)],
) -> Result<(), CliError> {
    let ok: Vec<(f64, &RunSummary)> = runs
        .iter()
        .filter_map(|(c, r)| r.as_ref().ok().map(|s| (*c, s)))
        .collect();
    let mut w = csv::Writer::from_path(path).map_err(|e| output_error(path)(e.into()))?;
    let mut header = vec!["n".to_string(), "t".to_string()];
    header.extend(ok.iter().map(|(c0, _)| format!("min_u@C0={c0}")));
    let csv_err = |e: csv::Error| output_error(path)(e.into());
    w.write_record(&header).map_err(csv_err)?;
    for n in 0..=base.n_steps {
        let mut row = vec![
            n.to_string(),
            format!("{:.16e}", base.scheme_config().time(n)),
        ];
        row.extend(ok.iter().map(|(_, s)| {
            s.records
                .get(n)
                .map_or(String::new(), |r| format!("{:.16e}", r.min_u))
        }));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_error(path))?;
    Ok(())
}

/// Mesh statistics as printed by the `mesh` subcommand.
pub fn mesh_report(mesh: &Mesh) -> Result<String, CliError> {
    let angles = acuteness_report(mesh)?;
    let h = mesh.mesh_size()?;
    let mut s = String::new();
    let _ = writeln!(s, "kind            {}", mesh.macro_kind());
    let _ = writeln!(s, "vertices        {}", mesh.n_vertices());
    let _ = writeln!(s, "triangles       {}", mesh.n_triangles());
    let _ = writeln!(s, "boundary nodes  {}", mesh.boundary_vertices().len());
    let _ = writeln!(s, "h               {h:.7e}");
    let _ = writeln!(s, "max angle       {:.4} deg", angles.max_angle_deg);
    let _ = writeln!(s, "min angle       {:.4} deg", angles.min_angle_deg);
    let _ = writeln!(s, "acute           {}", angles.is_acute);
    Ok(s)
}

/// Restriction indicators, Moser–Trudinger sides and the `B2` scan for the
/// scenario's initial data. All generic constants are 1: the conditions are
/// indicators, not verified hypotheses.
pub fn indicator_report(sc: &Scenario, b2_target: Option<f64>) -> Result<String, CliError> {
    sc.validate()?;
    let mesh = build_mesh(sc)?;
    let (u0, v0) = initial_fields(sc, &mesh)?;
    let space = P1Space::new(&mesh);
    let (m, a) = (space.lumped_mass(), space.stiffness());
    let cfg = IndicatorConfig {
        final_time: sc.k * sc.n_steps as f64,
        ..IndicatorConfig::default()
    };
    let ind = restriction_indicators(&u0, &v0, &m, &a, &mesh, sc.k, &cfg)?;
    let mt = moser_trudinger_pair(&u0, &m, &a, &cfg);
    let nu = ks_core::norms(&u0, &m, &a);
    let nv = ks_core::norms(&v0, &m, &a);

    let mut s = String::new();
    let _ = writeln!(s, "run                  {}", sc.run_id());
    let _ = writeln!(s, "||u0||_h^2           {:.6e}", nu.lumped_l2.powi(2));
    let _ = writeln!(s, "||grad v0||          {:.6e}", nv.grad_l2);
    let _ = writeln!(s, "||grad v0||^2        {:.6e}", nv.grad_l2.powi(2));
    let _ = writeln!(
        s,
        "mass u0, v0          {:.6e} {:.6e}",
        ind.u0_l1, ind.v0_l1
    );
    let _ = writeln!(s, "E0, E1               {:.6e} {:.6e}", ind.e0, ind.e1);
    let _ = writeln!(s, "R0                   {:.6e}", ind.r0);
    let _ = writeln!(
        s,
        "B0, B1, B2           {:.6e} {:.6e} {:.6e}",
        ind.b0, ind.b1, ind.b2
    );
    let _ = writeln!(s, "ln F                 {:.6e}", ind.log_f);
    let _ = writeln!(s, "h, C_neg             {:.6e} {:.6e}", ind.h, ind.c_neg);
    let _ = writeln!(s, "k/h^2 condition      {} (indicator)", ind.cond_hk);
    let _ = writeln!(s, "h condition          {} (indicator)", ind.cond_h);
    let _ = writeln!(s, "h E1 condition       {} (indicator)", ind.cond_h_ii);
    let _ = writeln!(s, "smallness            {} (indicator)", ind.smallness);
    let _ = writeln!(s, "valid                {}", ind.valid);
    let _ = writeln!(
        s,
        "Moser-Trudinger      ln lhs {:.6e}, ln rhs {:.6e}{}",
        mt.log_lhs,
        mt.log_rhs,
        if mt.overflow { " (overflow)" } else { "" }
    );
    if let Some(target) = b2_target {
        let scan = scan_b2(ind.e0, ind.u0_l1, ind.v0_l1, &cfg, 20, target);
        let _ = writeln!(
            s,
            "B2 scan              nearest {target}: {:.6e} at delta = {}, eps = {} (smallness {})",
            scan.b2, scan.delta, scan.epsilon, scan.smallness
        );
    }
    Ok(s)
}
