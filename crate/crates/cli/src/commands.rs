//! The five pipeline commands. Each writes its files under the scenario's
//! output directory and returns a report for printing or inspection.

use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use gpe_semiclassical::io::{
    encode_kernel, fmt_f64, write_comment_block, write_diagnostics_csv, write_field_csv, write_trajectory_csv,
};
use gpe_semiclassical::packet::sigma_period;
use gpe_semiclassical::{
    build_kernel, completeness_check, continuity_residual, decompose, euler_residual, eval_psi, evolve_packet,
    field_norm_sq, hamilton_jacobi_residual, phase_rate, propagate, psi_from_state, split_step_snapshots, ComplexField,
    KernelForm, KernelMatrix, KernelOptions, PacketState, PhysParams, DEFAULT_RHO_FLOOR,
};
use num_complex::Complex64;

use crate::error::{CliError, Result};
use crate::scenario::Scenario;

/// Samples per unit time when locating width maxima.
const PERIOD_SAMPLES: usize = 50;

struct Output {
    dir: PathBuf,
    header: String,
}

impl Output {
    fn new(sc: &Scenario, command: &str) -> Result<Self> {
        fs::create_dir_all(&sc.out_dir).map_err(|source| CliError::Io { path: sc.out_dir.clone(), source })?;
        Ok(Self { dir: sc.out_dir.clone(), header: format!("gpe-sc {command}\n{}", sc.resolved()) })
    }

    fn write(&self, name: &str, body: impl FnOnce(&mut BufWriter<File>, &str) -> io::Result<()>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let io_err = |source| CliError::Io { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io_err)?);
        body(&mut w, &self.header).and_then(|_| w.flush()).map_err(io_err)?;
        Ok(path)
    }
}

fn l2_error(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    Ok(a.l2_distance(b)?)
}

#[derive(Debug, Clone)]
pub struct EvolveReport {
    pub final_state: PacketState,
    pub sigma_period: Option<f64>,
    pub steps: usize,
    pub rejected: usize,
    pub trajectory: PathBuf,
}

pub fn cmd_evolve(sc: &Scenario) -> Result<EvolveReport> {
    let out = Output::new(sc, "evolve")?;
    let traj = evolve_packet(&sc.ic, &sc.params, &sc.profile, sc.t_final, sc.ode_tol)?;
    let trajectory = out.write("trajectory.csv", |w, h| write_trajectory_csv(w, &traj, h))?;
    Ok(EvolveReport {
        final_state: traj.final_state(),
        sigma_period: sigma_period(&traj, PERIOD_SAMPLES),
        steps: traj.len(),
        rejected: traj.rejected_steps(),
        trajectory,
    })
}

impl fmt::Display for EvolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.final_state;
        writeln!(f, "t        = {}", fmt_f64(s.t))?;
        writeln!(f, "q        = {}", fmt_f64(s.q))?;
        writeln!(f, "qdot     = {}", fmt_f64(s.qdot))?;
        writeln!(f, "sigma    = {}", fmt_f64(s.sigma))?;
        writeln!(f, "sigmadot = {}", fmt_f64(s.sigmadot))?;
        writeln!(f, "action   = {}", fmt_f64(s.action))?;
        match self.sigma_period {
            Some(p) => writeln!(f, "sigma period = {}", fmt_f64(p))?,
            None => writeln!(f, "sigma period = none (fewer than two width maxima)")?,
        }
        writeln!(f, "steps = {} ({} rejected)", self.steps, self.rejected)?;
        write!(f, "wrote {}", self.trajectory.display())
    }
}

#[derive(Debug, Clone)]
pub struct WavepacketRow {
    pub t: f64,
    pub norm: f64,
    pub center_modulus: f64,
    /// (pi sigma)^(-1/4) at the packet centre.
    pub expected_center_modulus: f64,
    pub path: PathBuf,
}

pub fn cmd_wavepacket(sc: &Scenario) -> Result<Vec<WavepacketRow>> {
    let out = Output::new(sc, "wavepacket")?;
    let traj = evolve_packet(&sc.ic, &sc.params, &sc.profile, sc.t_final, sc.ode_tol)?;
    let mut rows = Vec::new();
    for (i, &t) in sc.outputs.iter().enumerate() {
        let psi = eval_psi(&traj, t, &sc.grid, &sc.ic, &sc.params)?;
        let s = traj.state_at(t)?;
        let path =
            out.write(&format!("psi_{i:03}.csv"), |w, h| write_field_csv(w, &psi, &format!("{h}t = {}", fmt_f64(t))))?;
        rows.push(WavepacketRow {
            t,
            norm: field_norm_sq(&psi),
            center_modulus: gpe_semiclassical::psi_at(&s, s.q, &sc.ic, &sc.params).norm(),
            expected_center_modulus: (std::f64::consts::PI * s.sigma).powf(-0.25),
            path,
        });
    }
    out.write("wavepacket.csv", |w, h| {
        write_comment_block(w, h)?;
        writeln!(w, "t,norm,center_modulus,expected_center_modulus")?;
        for r in &rows {
            writeln!(
                w,
                "{},{},{},{}",
                fmt_f64(r.t),
                fmt_f64(r.norm),
                fmt_f64(r.center_modulus),
                fmt_f64(r.expected_center_modulus)
            )?;
        }
        Ok(())
    })?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct KernelReport {
    pub kernel: KernelMatrix,
    pub parity_defect: Option<f64>,
    /// L2 distance between the chosen and the other kernel form.
    pub other_form_l2: f64,
    pub binary: PathBuf,
    pub meta_csv: PathBuf,
}

pub fn cmd_kernel(sc: &Scenario) -> Result<KernelReport> {
    let out = Output::new(sc, "kernel")?;
    let k = &sc.kernel;
    let quad = sc.quad_for(k.t)?;
    let opts = KernelOptions { form: k.form, ode_tol: sc.ode_tol, meta_threshold: Some(k.meta_threshold) };
    let kernel = build_kernel(&k.grid, &k.grid, k.t, &quad, &sc.params, &sc.profile, k.shape, &opts)?;
    let other_form = match k.form {
        KernelForm::Derived => KernelForm::Printed,
        KernelForm::Printed => KernelForm::Derived,
    };
    let other_opts = KernelOptions { form: other_form, meta_threshold: None, ..opts };
    let other = build_kernel(&k.grid, &k.grid, k.t, &quad, &sc.params, &sc.profile, k.shape, &other_opts)?;
    let other_form_l2 = kernel.l2_distance(&other)?;
    let parity_defect = if sc.profile.is_even() { kernel.parity_defect() } else { None };

    let binary = out.dir.join("kernel.bin");
    fs::write(&binary, encode_kernel(&kernel, &out.header))
        .map_err(|source| CliError::Io { path: binary.clone(), source })?;
    let meta_csv = out.write("kernel_meta.csv", |w, h| {
        write_comment_block(w, h)?;
        writeln!(w, "t,n_x,n_x0,v_max,n_nodes,n_panels,form,meta,parity_defect,other_form_l2")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(kernel.t),
            kernel.x_grid.len(),
            kernel.x0_grid.len(),
            fmt_f64(quad.v_max),
            quad.n_nodes,
            quad.n_panels,
            kernel.form.as_str(),
            fmt_f64(kernel.meta),
            parity_defect.map(fmt_f64).unwrap_or_else(|| "nan".into()),
            fmt_f64(other_form_l2)
        )
    })?;
    Ok(KernelReport { kernel, parity_defect, other_form_l2, binary, meta_csv })
}

impl fmt::Display for KernelReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = &self.kernel;
        writeln!(f, "kernel {}x{} at t = {} ({})", k.x_grid.len(), k.x0_grid.len(), fmt_f64(k.t), k.form.as_str())?;
        writeln!(f, "meta          = {:e}", k.meta)?;
        match self.parity_defect {
            Some(p) => writeln!(f, "parity defect = {p:e}")?,
            None => writeln!(f, "parity defect = n/a (odd trap or asymmetric grid)")?,
        }
        writeln!(f, "other form L2 = {:e}", self.other_form_l2)?;
        write!(f, "wrote {} and {}", self.binary.display(), self.meta_csv.display())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ResidualRow {
    pub t: f64,
    pub continuity: f64,
    pub hamilton_jacobi: f64,
    pub euler: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CompletenessRow {
    pub t: f64,
    pub x: f64,
    pub value: Complex64,
    pub expected: f64,
}

impl CompletenessRow {
    pub fn error(&self) -> f64 {
        (self.value - self.expected).norm()
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub residuals: Vec<ResidualRow>,
    /// (t, L2 distance between propagated and initial field)
    pub causality: Vec<(f64, f64)>,
    pub completeness: Vec<CompletenessRow>,
    pub report: PathBuf,
}

impl VerifyReport {
    /// Whether the causality distances shrink along the listed times.
    pub fn causality_monotone(&self) -> bool {
        self.causality.windows(2).all(|w| w[1].1 < w[0].1)
    }
}

struct ResidualFrame {
    row: ResidualRow,
    fields: gpe_semiclassical::MadelungFields,
    hamilton_jacobi: gpe_semiclassical::Residual,
}

fn residual_frames(sc: &Scenario) -> Result<Vec<ResidualFrame>> {
    let v = &sc.verify;
    let half = 0.5 * v.dt;
    let horizon = sc.outputs.last().copied().unwrap_or(0.0) + half;
    sc.profile.validate_horizon(horizon)?;
    let traj = evolve_packet(&sc.ic, &sc.params, &sc.profile, horizon.max(sc.t_final), sc.ode_tol)?;
    sc.outputs
        .iter()
        .map(|&t| {
            let prev = eval_psi(&traj, t - half, &v.grid, &sc.ic, &sc.params)?;
            let mid = eval_psi(&traj, t, &v.grid, &sc.ic, &sc.params)?;
            let next = eval_psi(&traj, t + half, &v.grid, &sc.ic, &sc.params)?;
            let omega = sc.profile.omega(t)?;
            let cont = continuity_residual(&prev, &next, v.dt, &sc.params)?;
            let hj = hamilton_jacobi_residual(&mid, &phase_rate(&prev, &next, v.dt)?, &sc.params, omega)?;
            let euler = euler_residual(&prev, &next, v.dt, &sc.params, omega)?;
            Ok(ResidualFrame {
                row: ResidualRow {
                    t,
                    continuity: cont.max_abs(),
                    hamilton_jacobi: hj.max_abs(),
                    euler: euler.max_abs(),
                },
                fields: decompose(&mid, &sc.params, DEFAULT_RHO_FLOOR)?,
                hamilton_jacobi: hj,
            })
        })
        .collect()
}

/// Max unmasked continuity, Hamilton-Jacobi and Euler residuals of the
/// packet solution at each output time, from frames `verify.dt` apart.
pub fn hydrodynamic_residuals(sc: &Scenario) -> Result<Vec<ResidualRow>> {
    Ok(residual_frames(sc)?.into_iter().map(|f| f.row).collect())
}

/// L2 distance between the kernel-propagated initial packet and the
/// initial packet itself, at each of `verify.causality_times`.
pub fn causality_sequence(sc: &Scenario) -> Result<Vec<(f64, f64)>> {
    let kgrid = sc.kernel.grid;
    let psi0 = psi_from_state(&sc.ic.initial_state(), &kgrid, &sc.ic, &sc.params);
    let opts = KernelOptions { form: sc.kernel.form, ode_tol: sc.ode_tol, meta_threshold: None };
    sc.verify
        .causality_times
        .iter()
        .map(|&t| {
            let k = build_kernel(&kgrid, &kgrid, t, &sc.quad_for(t)?, &sc.params, &sc.profile, sc.kernel.shape, &opts)?;
            Ok((t, l2_error(&propagate(&k, &psi0)?, &psi0)?))
        })
        .collect()
}

/// Smeared completeness relation against exp(-(x - c)^2 / 2) at each
/// probe, at t = 0 and at `verify.completeness_t`.
pub fn completeness_rows(sc: &Scenario) -> Result<Vec<CompletenessRow>> {
    let v = &sc.verify;
    let c = v.test_center;
    let f = |x: f64| (-(x - c) * (x - c) / 2.0).exp();
    let test_fn = ComplexField::from_fn(v.probe_grid, |x| Complex64::new(f(x), 0.0))?;
    let mut rows = Vec::new();
    for t in [0.0, v.completeness_t] {
        let quad = sc.quad_for(t)?;
        for &x in &v.probes {
            let value =
                completeness_check(t, x, &quad, &sc.params, &sc.profile, sc.kernel.shape, &test_fn, sc.ode_tol)?;
            rows.push(CompletenessRow { t, x, value, expected: f(x) });
        }
    }
    Ok(rows)
}

pub fn cmd_verify(sc: &Scenario) -> Result<VerifyReport> {
    let out = Output::new(sc, "verify")?;
    let frames = residual_frames(sc)?;
    for (i, fr) in frames.iter().enumerate() {
        out.write(&format!("diagnostics_{i:03}.csv"), |w, h| {
            let note = format!("{h}t = {}\nresidual = hamilton-jacobi", fmt_f64(fr.row.t));
            write_diagnostics_csv(w, &fr.fields, &fr.hamilton_jacobi, &note)
        })?;
    }
    let residuals: Vec<ResidualRow> = frames.into_iter().map(|f| f.row).collect();
    let causality = causality_sequence(sc)?;
    let completeness = completeness_rows(sc)?;

    let report = out.write("verify.csv", |w, h| {
        write_comment_block(w, h)?;
        writeln!(w, "check,t,x,value")?;
        for r in &residuals {
            writeln!(w, "continuity,{},nan,{}", fmt_f64(r.t), fmt_f64(r.continuity))?;
            writeln!(w, "hamilton_jacobi,{},nan,{}", fmt_f64(r.t), fmt_f64(r.hamilton_jacobi))?;
            writeln!(w, "euler,{},nan,{}", fmt_f64(r.t), fmt_f64(r.euler))?;
        }
        for (t, d) in &causality {
            writeln!(w, "causality,{},nan,{}", fmt_f64(*t), fmt_f64(*d))?;
        }
        for r in &completeness {
            writeln!(w, "completeness,{},{},{}", fmt_f64(r.t), fmt_f64(r.x), fmt_f64(r.error()))?;
        }
        Ok(())
    })?;
    Ok(VerifyReport { residuals, causality, completeness, report })
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.residuals {
            writeln!(
                f,
                "t = {:<8.4} continuity {:.3e}  hamilton-jacobi {:.3e}  euler {:.3e}",
                r.t, r.continuity, r.hamilton_jacobi, r.euler
            )?;
        }
        for (t, d) in &self.causality {
            writeln!(f, "causality t = {t:<8} |K psi0 - psi0| = {d:.3e}")?;
        }
        writeln!(f, "causality monotone: {}", self.causality_monotone())?;
        for r in &self.completeness {
            writeln!(f, "completeness t = {:<5} x = {:<6} error {:.3e}", r.t, r.x, r.error())?;
        }
        write!(f, "wrote {}", self.report.display())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CompareRow {
    pub g: f64,
    pub t: f64,
    pub l2_semiclassical: f64,
    pub l2_kernel: Option<f64>,
}

fn oracle(sc: &Scenario, psi0: &ComplexField, params: &PhysParams) -> Result<Vec<ComplexField>> {
    let cfg = gpe_semiclassical::SplitStepConfig::new(*psi0.grid(), sc.split_dt)?;
    Ok(split_step_snapshots(psi0, &cfg, params, &sc.profile, &sc.outputs)?)
}

pub fn cmd_compare(sc: &Scenario) -> Result<(Vec<CompareRow>, PathBuf)> {
    let out = Output::new(sc, "compare")?;
    if sc.compare.kernel && !sc.kernel.grid.len().is_power_of_two() {
        return Err(CliError::config("kernel.n: must be a power of two when compare.kernel is set"));
    }
    let gs = if sc.compare.g_values.is_empty() { vec![sc.params.g()] } else { sc.compare.g_values.clone() };
    let mut rows = Vec::new();
    for &g in &gs {
        let params = sc.params.with_g(g)?;
        let traj = evolve_packet(&sc.ic, &params, &sc.profile, sc.t_final, sc.ode_tol)?;
        let psi0 = psi_from_state(&sc.ic.initial_state(), &sc.grid, &sc.ic, &params);
        let reference = oracle(sc, &psi0, &params)?;

        let kernel_errors = if sc.compare.kernel {
            let kgrid = sc.kernel.grid;
            let kpsi0 = psi_from_state(&sc.ic.initial_state(), &kgrid, &sc.ic, &params);
            let kref = oracle(sc, &kpsi0, &params)?;
            let opts = KernelOptions { form: sc.kernel.form, ode_tol: sc.ode_tol, meta_threshold: None };
            sc.outputs
                .iter()
                .zip(&kref)
                .map(|(&t, r)| {
                    let k = build_kernel(
                        &kgrid,
                        &kgrid,
                        t,
                        &sc.quad_for(t)?,
                        &params,
                        &sc.profile,
                        sc.kernel.shape,
                        &opts,
                    )?;
                    l2_error(&propagate(&k, &kpsi0)?, r).map(Some)
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            vec![None; sc.outputs.len()]
        };

        for ((&t, r), kerr) in sc.outputs.iter().zip(&reference).zip(kernel_errors) {
            let psi = eval_psi(&traj, t, &sc.grid, &sc.ic, &params)?;
            rows.push(CompareRow { g, t, l2_semiclassical: psi.l2_distance(r)?, l2_kernel: kerr });
        }
    }
    let path = out.write("compare.csv", |w, h| {
        write_comment_block(w, h)?;
        writeln!(w, "g,t,l2_semiclassical,l2_kernel")?;
        for r in &rows {
            let k = r.l2_kernel.map(fmt_f64).unwrap_or_else(|| "nan".into());
            writeln!(w, "{},{},{},{}", fmt_f64(r.g), fmt_f64(r.t), fmt_f64(r.l2_semiclassical), k)?;
        }
        Ok(())
    })?;
    Ok((rows, path))
}

pub fn print_compare(rows: &[CompareRow], path: &Path) -> String {
    let mut s = String::from("g          t          L2 semiclassical  L2 kernel\n");
    for r in rows {
        let k = r.l2_kernel.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        s.push_str(&format!("{:<10} {:<10.4} {:<17.3e} {}\n", r.g, r.t, r.l2_semiclassical, k));
    }
    s.push_str(&format!("wrote {}", path.display()));
    s
}
