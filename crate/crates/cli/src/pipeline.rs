//! Scenario pipelines: gauge-fix, reparameterize, build the generator,
//! propagate, verify.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use qdrive::bohmian::{locality_verdict, time_lattice, TravelingPacket, DEFAULT_THRESHOLD};
use qdrive::driving::{
    accessible, counterdiabatic_schedule, diagnostics, mixed_hamiltonian, mixed_variance, DensityTrajectory,
    HamiltonianSchedule, ResourceBudget, DIAGNOSTIC_TOL,
};
use qdrive::evolve::Propagator;
use qdrive::gauge::{gauge_fix, gauge_phase};
use qdrive::ingest::{grid_trajectory_from_csv, SampledTrajectory};
use qdrive::output::fmt_f64;
use qdrive::qsl::{continuum_separation_demo, gaussian_packet, translation_path};
use qdrive::reparam::{retime, time_of_param, time_of_param_mixed, BudgetProfile, ReparamTable};
use qdrive::scenarios::{
    latitude_basis, latitude_circle, random_smooth_trajectory, rotating_qubit_basis, GaussianScenario, LzScenario,
    LzSweep,
};
use qdrive::state::{fidelity, Grid1d, Ket, StateTrajectory};

use crate::config::{
    BohmianParams, CustomDiscrete, CustomGrid, GaussianParams, LzParams, MixedParams, Report, RunConfig, Scenario,
};
use crate::report::{Check, Outcome};
use crate::RunError;

/// Tracking fidelity every driven run must keep.
pub const FIDELITY_FLOOR: f64 = 1.0 - 1e-6;
/// Trace distance allowed for mixed-state tracking.
pub const TRACE_DISTANCE_CEILING: f64 = 1e-6;
/// Relative agreement required between numeric and closed-form results.
pub const CLOSED_FORM_TOL: f64 = 1e-6;
/// Arc length (in radians) below which a path counts as static.
pub const STATIC_PATH_LENGTH: f64 = 1e-8;
/// Points at which energy moments are cross-checked.
const DIAGNOSTIC_POINTS: usize = 11;
/// Rows of `s_of_t.csv`.
const S_OF_T_ROWS: usize = 200;
/// Grid size for the explicit-kernel comparison, which is quadratic in it.
const KERNEL_GRID_POINTS: usize = 257;

/// Scenario construction failed because of the input, not the numerics.
fn setup(e: qdrive::Error) -> RunError {
    RunError::Config(format!("[{}] {e}", e.code()))
}

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    /// Directory of the config file; relative input paths start here.
    pub base_dir: &'a Path,
    pub out_dir: PathBuf,
}

impl Context<'_> {
    fn propagator(&self) -> Propagator {
        Propagator::new(self.cfg.numerics.dt)
            .checkpoint_every(self.cfg.numerics.checkpoint_every)
            .keep_states(false)
    }

    fn budget(&self) -> Result<ResourceBudget, RunError> {
        ResourceBudget::new(self.cfg.omega_max()?).map_err(setup)
    }

    fn input(&self, p: &Path) -> Result<File, RunError> {
        let path = self.base_dir.join(p);
        File::open(&path).map_err(|e| RunError::Config(format!("cannot open {}: {e}", path.display())))
    }

    /// Writes one artifact if `kind` was requested.
    fn artifact(
        &self,
        out: &mut Outcome,
        kind: Report,
        name: &str,
        write: impl FnOnce(BufWriter<File>) -> qdrive::Result<()>,
    ) -> Result<(), RunError> {
        if !self.cfg.output.wants(kind) {
            return Ok(());
        }
        let path = self.out_dir.join(name);
        let file = File::create(&path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
        write(BufWriter::new(file))?;
        out.artifacts.push(name.into());
        Ok(())
    }

    fn text_artifact(&self, out: &mut Outcome, kind: Report, name: &str, text: &str) -> Result<(), RunError> {
        self.artifact(out, kind, name, |mut w| {
            use std::io::Write;
            writeln!(w, "{text}").map_err(|e| qdrive::Error::Invalid(format!("{name}: {e}")))
        })
    }
}

pub fn run(ctx: &Context, out: &mut Outcome) -> Result<(), RunError> {
    match &ctx.cfg.scenario {
        Scenario::Lz(p) => lz(ctx, p, out),
        Scenario::Gaussian(p) => gaussian(ctx, p, out),
        Scenario::CustomDiscrete(p) => custom_discrete(ctx, p, out),
        Scenario::CustomGrid(p) => custom_grid(ctx, p, out),
        Scenario::Mixed(p) => mixed(ctx, p, out),
        Scenario::Bohmian(p) => bohmian(ctx, p, out),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| if k + 1 == n { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
}

/// Drives `path` over `s0 → s1` at the budget-saturating speed and checks
/// the result. Returns the reparameterization table.
fn drive_path<K: Ket>(
    ctx: &Context,
    out: &mut Outcome,
    path: &StateTrajectory<K>,
    budget: ResourceBudget,
    (s0, s1): (f64, f64),
) -> Result<ReparamTable, RunError> {
    let numerics = ctx.cfg.numerics;
    let g = gauge_fix(path, numerics.n_samples)?;
    out.results.num("gauge_residual", g.max_gauge_residual());
    out.results.num("connection_residue", g.max_connection_residue());

    let profile = BudgetProfile::constant(budget);
    let table = time_of_param(&g, &profile, s0, s1, numerics.quad_steps)?;
    ctx.artifact(out, Report::Reparam, "reparam.csv", |w| table.write_csv(w))?;
    let header = table.header_json(&profile)?;
    ctx.text_artifact(out, Report::Reparam, "reparam.json", &header)?;
    let t_total = table.total_time();
    let length = t_total * budget.omega_max();
    out.results.num("path_length", length);

    if length <= STATIC_PATH_LENGTH {
        // A path that never moves needs no drive. Sampled paths carry
        // finite-difference noise, hence the tolerance.
        out.results.num("t_total", 0.0);
        out.results.flag("static", true);
        out.results.num("worst_fidelity", 1.0);
        out.checks.push(Check::at_least("worst_fidelity", 1.0, FIDELITY_FLOOR));
        return Ok(table);
    }
    out.results.num("t_total", t_total);
    out.results.flag("static", false);

    let timed = retime(&g, &profile, &table);
    let gt = gauge_fix(&timed, numerics.n_samples)?;
    let access = accessible(&gt, budget)?;
    out.results.num("access_margin", access.worst_margin);
    out.checks.push(Check::at_least("access_margin", access.worst_margin, -CLOSED_FORM_TOL * budget.omega_max()));

    let mut moment_err = 0.0f64;
    let mut spread = 0.0f64;
    for t in linspace(0.0, t_total, DIAGNOSTIC_POINTS) {
        let d = diagnostics(&gt, t)?;
        moment_err = moment_err.max(d.discrepancy());
        spread = spread.max(d.variance.sqrt());
    }
    out.results.num("moment_discrepancy", moment_err);
    out.results.num("max_energy_spread", spread);
    out.checks.push(Check::at_most("moment_discrepancy", moment_err, DIAGNOSTIC_TOL));
    out.checks.push(Check::at_most(
        "energy_spread_over_budget",
        spread / budget.omega_max() - 1.0,
        CLOSED_FORM_TOL,
    ));

    let schedule = HamiltonianSchedule::factored(&gt, true);
    let run = ctx.propagator().state(&schedule, &timed.eval(0.0), 0.0, t_total, Some(&timed))?;
    ctx.artifact(out, Report::Propagation, "propagation.csv", |w| run.write_csv(w))?;
    out.results.num("worst_fidelity", run.worst_fidelity);
    out.checks.push(Check::at_least("worst_fidelity", run.worst_fidelity, FIDELITY_FLOOR));
    Ok(table)
}

fn lz(ctx: &Context, p: &LzParams, out: &mut Outcome) -> Result<(), RunError> {
    let sc = LzScenario::new(p.epsilon, p.gamma0, ctx.cfg.omega_max()?).map_err(setup)?;
    let path = sc.ground_path_stretched();
    let range = path.domain();
    let t_total = drive_path(ctx, out, &path, sc.budget()?, range)?.total_time();
    let closed = sc.total_time();
    out.results.num("t_total_closed_form", closed);
    out.checks.push(Check::at_most("t_total_vs_closed_form", rel_err(t_total, closed), CLOSED_FORM_TOL));

    let discrepancy = sc.generator_discrepancy(64, ctx.cfg.numerics.n_samples)?;
    out.results.num("generator_discrepancy", discrepancy);
    out.checks.push(Check::at_most("generator_discrepancy", discrepancy, qdrive::scenarios::LZ_GENERATOR_TOL));

    let traj = sc.ground_trajectory();
    let (t0, t1) = traj.domain();
    let run = ctx.propagator().state(&sc.optimal_schedule()?, &traj.eval(t0), t0, t1, Some(&traj))?;
    out.results.num("constant_generator_worst_fidelity", run.worst_fidelity);
    out.checks.push(Check::at_least("constant_generator_worst_fidelity", run.worst_fidelity, FIDELITY_FLOOR));

    if let Some(fraction) = p.sweep_fraction {
        let sweep = LzSweep::with_fraction(p.epsilon, p.gamma0, fraction).map_err(setup)?;
        let basis = sweep.eigenbasis();
        let (a, b) = sweep.domain();
        let psi0 = basis[0].eval(a);
        let bare = ctx.propagator().state(&sweep.system_schedule(), &psi0, a, b, None)?;
        let bare_final = fidelity(&bare.final_state, &basis[0].eval(b))?;
        let assisted =
            ctx.propagator().state(&counterdiabatic_schedule(basis.clone(), (a, b)), &psi0, a, b, Some(&basis[0]))?;
        out.results.num("sweep_duration", sweep.duration);
        out.results.num("sweep_bare_final_fidelity", bare_final);
        out.results.num("sweep_counterdiabatic_worst_fidelity", assisted.worst_fidelity);
        out.checks.push(Check::at_least(
            "sweep_counterdiabatic_worst_fidelity",
            assisted.worst_fidelity,
            FIDELITY_FLOOR,
        ));
    }
    Ok(())
}

fn gaussian(ctx: &Context, p: &GaussianParams, out: &mut Outcome) -> Result<(), RunError> {
    let mut sc = GaussianScenario::new(p.m, p.omega0, p.mu, p.hbar, ctx.cfg.omega_max()?, p.s_f).map_err(setup)?;
    if let Some(grid) = p.grid {
        sc = sc.with_grid(grid).map_err(setup)?;
    }
    out.results.num("eta", sc.eta());
    out.results.num("sigma0", sc.sigma0());
    let grid = sc.grid();
    out.results.int("grid_points", grid.n_points);

    let table = drive_path(ctx, out, &sc.path(), sc.budget().map_err(setup)?, (1.0, p.s_f))?;
    let t_total = table.total_time();
    let closed = sc.total_time();
    out.results.num("t_total_closed_form", closed);
    out.checks.push(Check::at_most("t_total_vs_closed_form", rel_err(t_total, closed), CLOSED_FORM_TOL));

    // s(t) from the numeric table against e^{−ηεt}.
    let mut rows = Vec::with_capacity(S_OF_T_ROWS + 1);
    let mut s_err = 0.0f64;
    for t in linspace(0.0, table.total_time(), S_OF_T_ROWS + 1) {
        let (s, exact) = (table.invert(t)?, sc.s_of_t(t));
        s_err = s_err.max(rel_err(s, exact));
        rows.push([t, s, exact]);
    }
    out.results.num("s_of_t_rel_err", s_err);
    out.checks.push(Check::at_most("s_of_t_rel_err", s_err, CLOSED_FORM_TOL));
    ctx.artifact(out, Report::Reparam, "s_of_t.csv", |w| {
        let mut w = csv::Writer::from_writer(w);
        let io = |e: csv::Error| qdrive::Error::Invalid(format!("csv output: {e}"));
        w.write_record(["t", "s", "s_closed"]).map_err(io)?;
        for r in &rows {
            w.write_record(r.map(fmt_f64)).map_err(io)?;
        }
        w.flush().map_err(|e| qdrive::Error::Invalid(format!("csv output: {e}")))
    })?;

    let coarse = Grid1d::new(grid.z_min, grid.z_max, KERNEL_GRID_POINTS).map_err(setup)?;
    let mut kernel_err = 0.0f64;
    for t in linspace(0.0, closed, 3) {
        kernel_err = kernel_err.max(sc.kernel_discrepancy(&coarse, t)?);
    }
    out.results.num("kernel_rel_err", kernel_err);
    out.checks.push(Check::at_most("kernel_rel_err", kernel_err, CLOSED_FORM_TOL));
    Ok(())
}

fn custom_discrete(ctx: &Context, p: &CustomDiscrete, out: &mut Outcome) -> Result<(), RunError> {
    let path = if let Some(csv) = &p.csv {
        let sampled = SampledTrajectory::from_csv(ctx.input(csv)?).map_err(setup)?;
        out.results.int("samples", sampled.len());
        out.results.num("input_norm_drift", sampled.max_drift());
        sampled.trajectory()
    } else if let Some(l) = &p.latitude {
        latitude_circle(l.theta, l.rate)
    } else if let Some(r) = &p.random {
        if r.dim < 2 {
            return Err(RunError::Config(format!("random.dim must be at least 2, got {}", r.dim)));
        }
        random_smooth_trajectory(r.dim, r.seed)
    } else {
        unreachable!("validated: exactly one source")
    };
    let range = path.domain();
    out.results.int("dim", path.eval(range.0).dim());
    let phase = gauge_phase(&path, range.0, range.1, ctx.cfg.numerics.quad_steps)?;
    out.results.num("open_path_phase", phase);
    drive_path(ctx, out, &path, ctx.budget()?, range)?;
    Ok(())
}

fn custom_grid(ctx: &Context, p: &CustomGrid, out: &mut Outcome) -> Result<(), RunError> {
    p.grid.validate().map_err(setup)?;
    let budget = ctx.budget()?;
    let path = if let Some(csv) = &p.csv {
        grid_trajectory_from_csv(ctx.input(csv)?, p.grid).map_err(setup)?
    } else if let Some(tr) = &p.translation {
        if !(tr.sigma > 0.0 && tr.distance >= 0.0) {
            return Err(RunError::Config("translation needs sigma > 0 and distance >= 0".into()));
        }
        let overlap = continuum_separation_demo(
            &gaussian_packet(&p.grid, 0.0, tr.sigma),
            &gaussian_packet(&p.grid, tr.distance, tr.sigma),
        )?;
        out.results.num("endpoint_overlap", overlap.overlap);
        out.results.num("endpoint_angle", overlap.angle);
        out.results.num("t_total_closed_form", tr.distance / (2f64.sqrt() * tr.sigma * budget.omega_max()));
        translation_path(&p.grid, tr.sigma, tr.distance)
    } else {
        unreachable!("validated: exactly one source")
    };
    let range = path.domain();
    let t_total = drive_path(ctx, out, &path, budget, range)?.total_time();
    if let Some(tr) = &p.translation {
        let closed = tr.distance / (2f64.sqrt() * tr.sigma * budget.omega_max());
        // The grid truncates the packet tails, so this only holds on a wide grid.
        out.results.num("t_total_vs_closed_form", rel_err(t_total, closed));
    }
    Ok(())
}

fn mixed(ctx: &Context, p: &MixedParams, out: &mut Outcome) -> Result<(), RunError> {
    let basis = match (&p.rotating_qubit, &p.latitude_pair) {
        (Some(r), _) => rotating_qubit_basis(r.kappa),
        (_, Some(l)) => latitude_basis(l.theta),
        _ => unreachable!("validated: exactly one source"),
    };
    let dtraj = DensityTrajectory::new(p.weights.clone(), basis).map_err(setup)?;
    let g = dtraj.gauge_fix(ctx.cfg.numerics.n_samples)?;
    let (t0, t1) = g.domain();
    out.results.num("t_total", t1 - t0);

    let budget = BudgetProfile::constant(ctx.budget()?);
    let table = time_of_param_mixed(&dtraj, &budget, t0, t1, ctx.cfg.numerics.quad_steps)?;
    out.results.num("t_min_at_budget", table.total_time());
    ctx.artifact(out, Report::Reparam, "reparam.csv", |w| table.write_csv(w))?;

    let mut var_err = 0.0f64;
    let mut max_var = 0.0f64;
    for t in linspace(t0, t1, DIAGNOSTIC_POINTS) {
        let h = mixed_hamiltonian(&g, t)?;
        let rho = g.rho(t)?;
        let mean = (&rho * &h).trace().re;
        let oracle = (&rho * &h * &h).trace().re - mean * mean;
        let v = mixed_variance(&g, t)?;
        var_err = var_err.max((v - oracle).abs());
        max_var = max_var.max(v);
    }
    out.results.num("max_variance", max_var);
    out.results.num("variance_discrepancy", var_err);
    out.checks.push(Check::at_most("variance_discrepancy", var_err, DIAGNOSTIC_TOL));

    let target = |t: f64| -> qdrive::Result<DMatrix<C64>> { Ok(dtraj.rho(t)) };
    let run = ctx.propagator().density(&g.schedule(), &dtraj.rho(t0), t0, t1, Some(&target))?;
    ctx.artifact(out, Report::Propagation, "propagation.csv", |w| run.write_csv(w))?;
    out.results.num("worst_trace_distance", run.worst_trace_distance);
    out.checks.push(Check::at_most("worst_trace_distance", run.worst_trace_distance, TRACE_DISTANCE_CEILING));
    Ok(())
}

fn bohmian(ctx: &Context, p: &BohmianParams, out: &mut Outcome) -> Result<(), RunError> {
    let mut packet = TravelingPacket::matched(p.m, p.omega, p.hbar);
    if let Some(mu) = p.mu {
        packet.mu = mu;
    }
    let grid = Grid1d::new(p.z_min, p.z_max, p.n_points).map_err(setup)?;
    let times = time_lattice(0.0, p.t_end / (p.n_times - 1) as f64, p.n_times);
    let series = packet.series(grid, times)?;
    let threshold = p.threshold.unwrap_or(DEFAULT_THRESHOLD);
    let report = locality_verdict(&series, p.m, p.hbar, threshold)?;
    ctx.artifact(out, Report::Field, "bohmian.csv", |w| report.write_csv(w))?;

    out.results.flag("local_ok", report.local_ok);
    out.results.num("max_residual", report.max_residual);
    out.results.num("coarse_max_residual", report.coarse_max_residual);
    out.results.num("threshold", threshold);
    out.results.num("phase_velocity", packet.phase_velocity());
    out.results.num("exact_residual", packet.exact_residual());
    out.results.text("constraint_note", &report.constraint_note);
    if report.local_ok {
        out.results.num("potential_error", report.potential_error(|z, t| packet.potential(z, t)));
    }
    if let Some(expected) = p.expect_local {
        out.checks.push(Check::holds("locality_verdict_as_expected", report.local_ok == expected));
    }
    Ok(())
}
