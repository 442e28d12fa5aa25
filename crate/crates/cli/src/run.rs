use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::Deserialize;
use serde_json::json;

use mrcircuit_core::approximations::{clt_tests, wong_zakai_compare, AssemblyParams, Marginal};
use mrcircuit_core::circuit::{ModelSpec, PhaseSpaceModel};
use mrcircuit_core::dilation::{
    build_symplectic_dilation, build_wiener_dilation, circuit_drift_field, hessian_dissipation,
    shifted_pde_residuals, GridSpec,
};
use mrcircuit_core::error::CoreError;
use mrcircuit_core::field::PhaseFunction;
use mrcircuit_core::quantum::{
    build_quantum_dilation, master_equation_evolve, verify_drift_identities, FockModel,
};
use mrcircuit_core::report::{write_bracket_series_csv, Check, CheckReport};
use mrcircuit_core::sde::{
    simulate_ensemble, EnsembleSpec, NoisePath, PhasePoint, Scheme, SdeSystem,
};
use mrcircuit_core::verify::{empirical_covariation, empirical_drift, propagate_tangent};

use crate::{ApproxCommand, Cli, Command, DilationKind, SchemeArg};

#[derive(Debug)]
pub enum RunError {
    Parse(String),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Parse(_) => 2,
            RunError::Io(_) => 3,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Parse(msg) => write!(f, "{msg}"),
            RunError::Io(err) => write!(f, "I/O: {err}"),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        RunError::Parse(e.to_string())
    }
}

/// Optional config file; present entries override the corresponding flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    out: Option<PathBuf>,
    threads: Option<usize>,
    dt: Option<f64>,
    t_end: Option<f64>,
    paths: Option<u64>,
    estimator_paths: Option<u64>,
    seed: Option<u64>,
    scheme: Option<String>,
    kind: Option<String>,
    c: Option<f64>,
    ell: Option<f64>,
    gamma_noise: Option<f64>,
    fock_dim: Option<usize>,
    margin: Option<usize>,
    hbar: Option<f64>,
    tolerance: Option<f64>,
    alpha: Option<f64>,
    q0: Option<f64>,
    p0: Option<f64>,
    save_stride: Option<usize>,
    levels: Option<Vec<usize>>,
    base_steps: Option<usize>,
    rate: Option<u32>,
    replicates: Option<usize>,
    marginal: Option<String>,
    seed_count: Option<u64>,
}

fn set<T: Clone>(target: &mut T, source: &Option<T>) {
    if let Some(v) = source {
        *target = v.clone();
    }
}

struct Session {
    out_dir: PathBuf,
    outputs: Vec<String>,
}

impl Session {
    fn new(out_dir: PathBuf) -> Result<Self, RunError> {
        fs::create_dir_all(&out_dir)?;
        Ok(Session {
            out_dir,
            outputs: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), RunError> {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)?;
        println!("wrote {}", path.display());
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(&mut self, command: &str, config: serde_json::Value) -> Result<(), RunError> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = json!({
            "command": command,
            "config": config,
            "outputs": self.outputs,
            "timestamp_unix": timestamp,
        });
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap())?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<bool, RunError> {
    let config: ConfigFile = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| RunError::Parse(format!("config {}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };

    let mut out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os("MRCIRCUIT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    set(&mut out_dir, &config.out);

    let mut threads = cli.threads.unwrap_or(0);
    if let Some(t) = config.threads {
        threads = t;
    }
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }

    let mut session = Session::new(out_dir)?;
    match cli.command {
        Command::Compile { input } => cmd_compile(&mut session, &input),
        Command::Simulate {
            input,
            mut kind,
            mut scheme,
            mut dt,
            mut t_end,
            mut paths,
            mut seed,
            mut save_stride,
            mut q0,
            mut p0,
            mut c,
            mut ell,
            mut gamma_noise,
        } => {
            set(&mut dt, &config.dt);
            set(&mut t_end, &config.t_end);
            set(&mut paths, &config.paths);
            set(&mut seed, &config.seed);
            set(&mut save_stride, &config.save_stride);
            set(&mut q0, &config.q0);
            set(&mut p0, &config.p0);
            set(&mut c, &config.c);
            set(&mut ell, &config.ell);
            set(&mut gamma_noise, &config.gamma_noise);
            if let Some(k) = &config.kind {
                kind = parse_kind(k)?;
            }
            if let Some(s) = &config.scheme {
                scheme = parse_scheme(s)?;
            }
            cmd_simulate(
                &mut session,
                &input,
                kind,
                scheme,
                dt,
                t_end,
                paths,
                seed,
                save_stride,
                (q0, p0),
                (c, ell, gamma_noise),
            )
        }
        Command::Dilate {
            input,
            mut kind,
            mut c,
            mut ell,
            mut gamma_noise,
        } => {
            set(&mut c, &config.c);
            set(&mut ell, &config.ell);
            set(&mut gamma_noise, &config.gamma_noise);
            if let Some(k) = &config.kind {
                kind = parse_kind(k)?;
            }
            cmd_dilate(&mut session, &input, kind, c, ell, gamma_noise)
        }
        Command::Verify {
            input,
            mut kind,
            mut dt,
            mut t_end,
            mut paths,
            mut estimator_paths,
            mut seed,
            mut q0,
            mut p0,
            mut c,
            mut ell,
            mut gamma_noise,
        } => {
            set(&mut dt, &config.dt);
            set(&mut t_end, &config.t_end);
            set(&mut paths, &config.paths);
            set(&mut estimator_paths, &config.estimator_paths);
            set(&mut seed, &config.seed);
            set(&mut q0, &config.q0);
            set(&mut p0, &config.p0);
            set(&mut c, &config.c);
            set(&mut ell, &config.ell);
            set(&mut gamma_noise, &config.gamma_noise);
            if let Some(k) = &config.kind {
                kind = parse_kind(k)?;
            }
            cmd_verify(
                &mut session,
                &input,
                kind,
                dt,
                t_end,
                paths,
                estimator_paths,
                seed,
                (q0, p0),
                (c, ell, gamma_noise),
            )
        }
        Command::Quantum {
            input,
            mut fock_dim,
            margin,
            mut hbar,
            mut tolerance,
            mut t_end,
            mut dt,
            mut alpha,
        } => {
            set(&mut fock_dim, &config.fock_dim);
            let mut margin = margin.unwrap_or(fock_dim / 4);
            set(&mut margin, &config.margin);
            set(&mut hbar, &config.hbar);
            set(&mut tolerance, &config.tolerance);
            set(&mut t_end, &config.t_end);
            set(&mut dt, &config.dt);
            set(&mut alpha, &config.alpha);
            cmd_quantum(
                &mut session,
                &input,
                fock_dim,
                margin,
                hbar,
                tolerance,
                t_end,
                dt,
                alpha,
            )
        }
        Command::Approx(approx) => match approx {
            ApproxCommand::Wz {
                input,
                mut levels,
                mut base_steps,
                mut seed,
                mut seed_count,
                mut q0,
                mut p0,
            } => {
                set(&mut levels, &config.levels);
                set(&mut base_steps, &config.base_steps);
                set(&mut seed, &config.seed);
                set(&mut seed_count, &config.seed_count);
                set(&mut q0, &config.q0);
                set(&mut p0, &config.p0);
                cmd_approx_wz(
                    &mut session,
                    &input,
                    &levels,
                    base_steps,
                    seed,
                    seed_count,
                    (q0, p0),
                )
            }
            ApproxCommand::Clt {
                mut rate,
                mut replicates,
                mut marginal,
                mut seed,
            } => {
                set(&mut rate, &config.rate);
                set(&mut replicates, &config.replicates);
                set(&mut marginal, &config.marginal);
                set(&mut seed, &config.seed);
                cmd_approx_clt(&mut session, rate, replicates, &marginal, seed)
            }
        },
    }
}

fn parse_kind(text: &str) -> Result<DilationKind, RunError> {
    match text {
        "circuit" => Ok(DilationKind::Circuit),
        "wiener" => Ok(DilationKind::Wiener),
        "symplectic" => Ok(DilationKind::Symplectic),
        other => Err(RunError::Parse(format!("unknown dilation kind `{other}`"))),
    }
}

fn parse_scheme(text: &str) -> Result<SchemeArg, RunError> {
    match text {
        "euler-maruyama" | "euler_maruyama" => Ok(SchemeArg::EulerMaruyama),
        "heun" => Ok(SchemeArg::Heun),
        other => Err(RunError::Parse(format!("unknown scheme `{other}`"))),
    }
}

fn scheme_of(arg: SchemeArg) -> Scheme {
    match arg {
        SchemeArg::EulerMaruyama => Scheme::EulerMaruyama,
        SchemeArg::Heun => Scheme::HeunStratonovich,
    }
}

/// Load a model from a netlist (.net) or a model JSON document
/// (bare `ModelSpec` or the `compile` command's wrapped form).
fn load_model(path: &Path) -> Result<PhaseSpaceModel, RunError> {
    let text = fs::read_to_string(path)?;
    if path.extension().and_then(|e| e.to_str()) == Some("net") {
        let ast = mrcircuit_core::netlist::parse(&text)
            .map_err(|e| RunError::Parse(format!("{}: {e}", path.display())))?;
        return mrcircuit_core::netlist::compile(&ast)
            .map_err(|e| RunError::Parse(format!("{}: {e}", path.display())));
    }
    #[derive(Deserialize)]
    struct Wrapped {
        model: ModelSpec,
    }
    let spec = serde_json::from_str::<Wrapped>(&text)
        .map(|w| w.model)
        .or_else(|_| serde_json::from_str::<ModelSpec>(&text))
        .map_err(|e| RunError::Parse(format!("{}: {e}", path.display())))?;
    PhaseSpaceModel::from_spec(&spec).map_err(|e| RunError::Parse(e.to_string()))
}

fn build_system(
    model: &PhaseSpaceModel,
    kind: DilationKind,
    c: f64,
    ell: f64,
    gamma_noise: f64,
) -> Result<SdeSystem, RunError> {
    Ok(match kind {
        // exact fields for the series constant-L₀ case, pointwise numeric
        // evaluation otherwise (nonlinear inductance, parallel dissipators)
        DilationKind::Circuit => match circuit_drift_field(model) {
            Ok(drift) => SdeSystem::deterministic(Arc::new(drift)),
            Err(_) => SdeSystem::deterministic(Arc::new(
                mrcircuit_core::circuit::ModelDriftField::new(model.clone()),
            )),
        },
        DilationKind::Wiener => build_wiener_dilation(model, c, ell)?.1,
        DilationKind::Symplectic => build_symplectic_dilation(model, gamma_noise)?.1,
    })
}

fn cmd_compile(session: &mut Session, input: &Path) -> Result<bool, RunError> {
    let model = load_model(input)?;
    // dissipation metadata: report a constant rate when the model has one
    let probe = [(0.0, 0.0), (0.7, -0.3), (-1.1, 0.9)];
    let gammas: Vec<f64> = probe
        .iter()
        .map(|&(q, p)| model.dissipation(q, p))
        .collect::<Result<_, _>>()?;
    let constant = gammas
        .windows(2)
        .all(|w| (w[0] - w[1]).abs() < 1e-12)
        .then_some(gammas[0]);
    let doc = json!({
        "model": model.to_spec(),
        "dissipation_metadata": {
            "series": model.is_series(),
            "constant_l0": model.constant_l0(),
            "gamma_at_origin": gammas[0],
            "gamma_constant": constant,
        },
    });
    session.write("model.json", serde_json::to_string_pretty(&doc).unwrap().as_bytes())?;
    session.finish("compile", json!({"input": input.display().to_string()}))?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    session: &mut Session,
    input: &Path,
    kind: DilationKind,
    scheme: SchemeArg,
    dt: f64,
    t_end: f64,
    paths: u64,
    seed: u64,
    save_stride: usize,
    x0: (f64, f64),
    dilation_params: (f64, f64, f64),
) -> Result<bool, RunError> {
    let model = load_model(input)?;
    let (c, ell, gamma_noise) = dilation_params;
    let system = build_system(&model, kind, c, ell, gamma_noise)?;
    let spec = EnsembleSpec {
        q0: x0.0,
        p0: x0.1,
        t_end,
        dt,
        n_paths: paths,
        seed,
        scheme: scheme_of(scheme),
        save_stride,
    };
    let store = simulate_ensemble(&system, &spec)?;
    let mut csv = Vec::new();
    store.write_csv(&mut csv)?;
    session.write("trajectories.csv", &csv)?;
    session.finish(
        "simulate",
        json!({
            "input": input.display().to_string(),
            "kind": format!("{kind:?}"),
            "scheme": format!("{scheme:?}"),
            "dt": dt, "t_end": t_end, "paths": paths, "seed": seed,
            "save_stride": save_stride, "q0": x0.0, "p0": x0.1,
            "c": c, "ell": ell, "gamma_noise": gamma_noise,
        }),
    )?;
    Ok(true)
}

fn cmd_dilate(
    session: &mut Session,
    input: &Path,
    kind: DilationKind,
    c: f64,
    ell: f64,
    gamma_noise: f64,
) -> Result<bool, RunError> {
    let model = load_model(input)?;
    let grid = GridSpec::default();
    let mut report = CheckReport::default();
    let vd = |q: f64, p: f64| model.dissipator_voltage(q, p).unwrap_or(f64::NAN);

    let dilation_json = match kind {
        DilationKind::Circuit => {
            return Err(RunError::Parse(
                "dilate requires --kind wiener or symplectic".into(),
            ))
        }
        DilationKind::Wiener => {
            let (dil, system) = build_wiener_dilation(&model, c, ell)?;
            let (r_closure, r_voltage) = shifted_pde_residuals(&dil.noise_functions, vd, &grid);
            report.push(Check::at_most("shifted closure residual", 1e-10, r_closure));
            report.push(Check::at_most("shifted voltage residual", 1e-10, r_voltage));
            let mut hessian_dev = 0.0f64;
            for (q, p) in grid.points() {
                let gamma = model.dissipation(q, p)?;
                hessian_dev = hessian_dev
                    .max((hessian_dissipation(&dil.noise_functions, q, p) - gamma).abs());
            }
            report.push(Check::at_most(
                "hessian dissipation vs circuit gamma",
                1e-10,
                hessian_dev,
            ));
            json!({
                "kind": "wiener",
                "channels": system.channels().labels,
                "dilation": dil,
            })
        }
        DilationKind::Symplectic => {
            let (dil, system) = build_symplectic_dilation(&model, gamma_noise)?;
            let mut gamma_dev = 0.0f64;
            let mut div_dev = 0.0f64;
            let div_uq = dil.u_q.d_dq();
            let div_up = dil.u_p.d_dp();
            for (q, p) in grid.points() {
                gamma_dev = gamma_dev.max((dil.gamma(q, p) - model.dissipation(q, p)?).abs());
                let div = div_uq.value(q, p) + div_up.value(q, p);
                div_dev = div_dev.max((div + dil.gamma(q, p)).abs());
            }
            report.push(Check::at_most(
                "bracket dissipation vs circuit gamma",
                1e-12,
                gamma_dev,
            ));
            report.push(Check::at_most("divergence of u vs -gamma", 1e-10, div_dev));
            json!({
                "kind": "symplectic",
                "channels": system.channels().labels,
                "dilation": dil,
            })
        }
    };
    session.write(
        "dilation.json",
        serde_json::to_string_pretty(&dilation_json).unwrap().as_bytes(),
    )?;
    session.write("residuals.json", report.to_json()?.as_bytes())?;
    session.finish(
        "dilate",
        json!({
            "input": input.display().to_string(),
            "kind": format!("{kind:?}"),
            "c": c, "ell": ell, "gamma_noise": gamma_noise,
        }),
    )?;
    print_report(&report);
    Ok(report.all_pass())
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    session: &mut Session,
    input: &Path,
    kind: DilationKind,
    dt: f64,
    t_end: f64,
    paths: u64,
    estimator_paths: u64,
    seed: u64,
    x0: (f64, f64),
    dilation_params: (f64, f64, f64),
) -> Result<bool, RunError> {
    let model = load_model(input)?;
    let (c, ell, gamma_noise) = dilation_params;
    let system = build_system(&model, kind, c, ell, gamma_noise)?;
    let n_steps = (t_end / dt).round() as usize;
    let start = PhasePoint::new(x0.0, x0.1);
    let mut report = CheckReport::default();

    // bracket certificates (with a recorded series for the first path)
    let series_stride = (n_steps / 256).max(1);
    let mut max_plain_dev = 0.0f64;
    let mut max_ext_dev = 0.0f64;
    let mut first_series = Vec::new();
    for i in 0..paths {
        let path = NoisePath::generate(seed, i, system.n_channels(), n_steps, dt);
        let tangent = propagate_tangent(
            &system,
            &path,
            start,
            Scheme::HeunStratonovich,
            if i == 0 { series_stride } else { 0 },
        )?;
        if i == 0 {
            first_series = tangent.series().to_vec();
        }
        match kind {
            DilationKind::Symplectic => {
                max_ext_dev = max_ext_dev.max((tangent.extended_bracket()? - 1.0).abs());
                // with a constant dissipation rate the plain bracket has the
                // closed-form target e^{-γT}
                if let Ok(g0) = model.dissipation(0.0, 0.0) {
                    let target = (-g0 * t_end).exp();
                    max_plain_dev = max_plain_dev.max((tangent.plain_bracket() - target).abs());
                }
            }
            _ => {
                max_plain_dev = max_plain_dev.max((tangent.plain_bracket() - 1.0).abs());
            }
        }
    }
    match kind {
        DilationKind::Symplectic => {
            report.push(Check::at_most("max |extended bracket - 1|", 1e-2, max_ext_dev));
            report.push(Check::at_most(
                "max |plain bracket - exp(-gamma T)|",
                5e-3,
                max_plain_dev,
            ));
        }
        _ => {
            report.push(Check::at_most("max |plain bracket - 1|", 5e-3, max_plain_dev));
        }
    }
    let mut csv = Vec::new();
    write_bracket_series_csv(&mut csv, &first_series)?;
    session.write("bracket_series.csv", &csv)?;

    // binned drift and covariation certificates (autonomous models only)
    if model.drive().is_zero() && kind != DilationKind::Circuit && estimator_paths > 0 {
        let spec = EnsembleSpec {
            q0: x0.0,
            p0: x0.1,
            t_end,
            dt: dt.max(1e-3),
            n_paths: estimator_paths,
            seed: seed ^ 0x5eed,
            scheme: Scheme::EulerMaruyama,
            save_stride: 1,
        };
        let drift_est = empirical_drift(&system, &spec)?;
        let ito = system.ito_drift().clone();
        let frac_drift = drift_est.fraction_within(3.0, |q, p| {
            let (vq, vp) = ito.eval(0.0, q, p);
            [vq, vp]
        });
        report.push(Check::at_least("drift agreement fraction (3 SE)", 0.95, frac_drift));

        let cov_est = empirical_covariation(&system, &spec)?;
        let diffusions = system.diffusions().to_vec();
        let frac_cov = cov_est.fraction_within(3.0, |q, p| {
            let cov = diffusions
                .iter()
                .map(|s| {
                    let (a, b) = s.eval(q, p);
                    a * b
                })
                .sum();
            [cov, 0.0]
        });
        report.push(Check::at_least(
            "covariation agreement fraction (3 SE)",
            0.95,
            frac_cov,
        ));
    }

    session.write("verify_report.json", report.to_json()?.as_bytes())?;
    session.finish(
        "verify",
        json!({
            "input": input.display().to_string(),
            "kind": format!("{kind:?}"),
            "dt": dt, "t_end": t_end, "paths": paths,
            "estimator_paths": estimator_paths, "seed": seed,
            "q0": x0.0, "p0": x0.1, "c": c, "ell": ell, "gamma_noise": gamma_noise,
        }),
    )?;
    print_report(&report);
    Ok(report.all_pass())
}

#[allow(clippy::too_many_arguments)]
fn cmd_quantum(
    session: &mut Session,
    input: &Path,
    fock_dim: usize,
    margin: usize,
    hbar: f64,
    tolerance: f64,
    t_end: f64,
    dt: f64,
    alpha: f64,
) -> Result<bool, RunError> {
    let model = load_model(input)?;
    let l0 = model
        .constant_l0()
        .ok_or_else(|| RunError::Parse("quantum lift requires constant inductance".into()))?;
    let c0 = model
        .phi_c_prime()
        .poly_coeffs()
        .filter(|c| c.len() == 2 && c[0] == 0.0 && c[1] > 0.0)
        .map(|c| 1.0 / c[1])
        .ok_or_else(|| {
            RunError::Parse("quantum lift requires a constant, positive capacitance".into())
        })?;
    let fock = FockModel::new(fock_dim, margin, hbar, l0, c0)?;
    let dil = build_quantum_dilation(&model, fock)?;
    let identities = verify_drift_identities(&dil, 0.0)?;

    let mut report = CheckReport::default();
    report.push(Check::at_most(
        "Heisenberg drift of q (interior relative)",
        tolerance,
        identities.drift_q_relative,
    ));
    report.push(Check::at_most(
        "Heisenberg drift of p (interior relative)",
        tolerance,
        identities.drift_p_relative,
    ));
    for check in &identities.noise_checks {
        report.push(Check::at_most(&check.name, tolerance, check.relative_deviation));
    }

    let psi = dil.fock.coherent_state(Complex64::new(alpha, 0.0));
    let rho0 = &psi * psi.adjoint();
    let series = master_equation_evolve(&dil, &rho0, t_end, dt, ((t_end / dt) as usize / 500).max(1))?;
    let max_trace_rate = series
        .samples
        .iter()
        .map(|s| s.trace_deviation / (1.0 + s.t))
        .fold(0.0f64, f64::max);
    report.push(Check::at_most("trace drift per unit time", 1e-9, max_trace_rate));
    let min_eig = series
        .samples
        .iter()
        .map(|s| s.min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    report.push(Check {
        name: "minimum eigenvalue".into(),
        target: -1e-6,
        estimate: min_eig,
        tolerance: 0.0,
        pass: min_eig >= -1e-6,
    });
    let mut csv = Vec::new();
    series.write_csv(&mut csv)?;
    session.write("expectations.csv", &csv)?;
    session.write(
        "quantum_report.json",
        serde_json::to_string_pretty(&json!({
            "identities": identities,
            "checks": report,
        }))
        .unwrap()
        .as_bytes(),
    )?;
    session.finish(
        "quantum",
        json!({
            "input": input.display().to_string(),
            "fock_dim": fock_dim, "margin": margin, "hbar": hbar,
            "tolerance": tolerance, "t_end": t_end, "dt": dt, "alpha": alpha,
        }),
    )?;
    print_report(&report);
    Ok(report.all_pass())
}

fn cmd_approx_wz(
    session: &mut Session,
    input: &Path,
    levels: &[usize],
    base_steps: usize,
    seed: u64,
    seed_count: u64,
    x0: (f64, f64),
) -> Result<bool, RunError> {
    let model = load_model(input)?;
    let (dil, _) = build_wiener_dilation(&model, 1.0, 1.0)?;
    let seed_count = seed_count.max(1);
    let mut csv = String::from("seed,n,sup_error,matched_error,terminal_error\n");
    let n_pairs = levels.len().saturating_sub(1);
    let mut pair_ok = vec![0u64; n_pairs];
    let mut gap_ok = 0u64;
    let mut reports = Vec::new();
    for s in seed..seed + seed_count {
        let base = NoisePath::generate(s, 0, 1, base_steps, 1.0 / base_steps as f64);
        let wz = wong_zakai_compare(
            &dil.hamiltonian,
            &dil.noise_functions[0],
            PhasePoint::new(x0.0, x0.1),
            &base,
            levels,
        )?;
        for row in &wz.rows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                s, row.n, row.sup_error, row.matched_error, row.terminal_error
            ));
        }
        for (i, w) in wz.rows.windows(2).enumerate() {
            if w[1].matched_error < w[0].matched_error {
                pair_ok[i] += 1;
            }
        }
        if wz.terminal_gap_ito > 5.0 * wz.rows.last().map(|r| r.sup_error).unwrap_or(f64::NAN) {
            gap_ok += 1;
        }
        reports.push(wz);
    }
    session.write("wz_errors.csv", csv.as_bytes())?;

    let need = (0.9 * seed_count as f64).ceil() as u64;
    let mut report = CheckReport::default();
    for (i, &count) in pair_ok.iter().enumerate() {
        report.push(Check {
            name: format!(
                "error decays at doubling {} -> {} (seeds)",
                levels[i],
                levels[i + 1]
            ),
            target: need as f64,
            estimate: count as f64,
            tolerance: 0.0,
            pass: count >= need,
        });
    }
    report.push(Check {
        name: "Ito gap exceeds 5x the final error (seeds)".into(),
        target: need as f64,
        estimate: gap_ok as f64,
        tolerance: 0.0,
        pass: gap_ok >= need,
    });
    session.write(
        "wz_report.json",
        serde_json::to_string_pretty(
            &json!({"per_seed": reports, "pair_pass_counts": pair_ok, "checks": report}),
        )
        .unwrap()
        .as_bytes(),
    )?;
    session.finish(
        "approx wz",
        json!({
            "input": input.display().to_string(),
            "levels": levels, "base_steps": base_steps,
            "seed": seed, "seed_count": seed_count,
            "q0": x0.0, "p0": x0.1,
        }),
    )?;
    print_report(&report);
    Ok(report.all_pass())
}

fn cmd_approx_clt(
    session: &mut Session,
    rate: u32,
    replicates: usize,
    marginal: &str,
    seed: u64,
) -> Result<bool, RunError> {
    let marginal = match marginal {
        "gaussian" => Marginal::Gaussian,
        "uniform" => Marginal::Uniform,
        other => return Err(RunError::Parse(format!("unknown marginal `{other}`"))),
    };
    let params = AssemblyParams {
        marginal,
        ..Default::default()
    };
    let clt = clt_tests(rate, replicates, params, seed)?;
    let mut report = CheckReport::default();
    let var_band = 3.0 * clt.var_target * (2.0 / replicates as f64).sqrt();
    report.push(Check::absolute(
        "terminal variance of Q",
        clt.var_target,
        clt.var_q,
        var_band,
    ));
    report.push(Check::absolute("Q/P cross covariance", 0.0, clt.cov_qp, clt.cov_tolerance));
    report.push(Check::absolute(
        "lag-1 increment correlation",
        0.0,
        clt.lag1_correlation,
        5.0 / (replicates as f64).sqrt(),
    ));
    session.write(
        "clt_report.json",
        serde_json::to_string_pretty(&json!({"statistics": clt, "checks": report}))
            .unwrap()
            .as_bytes(),
    )?;
    session.finish(
        "approx clt",
        json!({
            "rate": rate, "replicates": replicates,
            "marginal": format!("{marginal:?}"), "seed": seed,
        }),
    )?;
    print_report(&report);
    Ok(report.all_pass())
}

fn print_report(report: &CheckReport) {
    for check in &report.checks {
        println!(
            "{}: {} (target {:.3e}, estimate {:.3e})",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.target,
            check.estimate
        );
    }
}
