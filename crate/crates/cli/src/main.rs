//! `dqd-fano`: steady states, QPC current noise and Fano factors of a
//! double-dot singlet sector coupled to a charge detector and phonons.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dqd_core::engine::{eigenvalues, steady_state_analytic, steady_state_numeric};
use dqd_core::model::{COUNTED_NAMES, UNCOUNTED_NAMES};
use dqd_core::noise::{correlation_regular, fano_quadrature, fano_resolvent, jump_map, DEFAULT_QUADRATURE_TOL};
use dqd_core::sweep::{self, SweepMethod, SweepRecord, SweepSpec};
use dqd_core::validate::{run_validation, ValidateOptions};
use dqd_core::{
    apply_config, default_params, fano_nophonon, generator_for, run_trajectories, spectral_gap, Error, GapConvention, ModelParams,
    NoiseResult, OperatorF64, OperatorSet, TrajectoryConfig,
};

const EXIT_PARAMETER: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_VALIDATION: u8 = 4;

const AFTER_HELP: &str = "\
Exit codes:
  0  success
  2  parameter error (bad flag, config file or physical parameter)
  3  numerical failure (singular system, non-converged quadrature, ...)
  4  validation failure (`validate` found a failing check)

Units: energies in meV, rates in 1/ns, temperature in K, currents in electrons/ns.";

#[derive(Parser, Debug)]
#[command(name = "dqd-fano", version, about, after_help = AFTER_HELP)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// `key = value` parameter file; flags below override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Phonon-to-QPC strength ratio (QPC couplings are divided by it).
    #[arg(long, global = true, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Phonon bath temperature in K.
    #[arg(long, global = true, allow_negative_numbers = true)]
    temperature: Option<f64>,
    /// On-site charging energy U.
    #[arg(long = "U-meV", global = true, allow_negative_numbers = true)]
    u_mev: Option<f64>,
    /// Singlet-triplet splitting J.
    #[arg(long = "J-meV", global = true, allow_negative_numbers = true)]
    j_mev: Option<f64>,
    /// QPC bias V.
    #[arg(long = "V-meV", global = true, allow_negative_numbers = true)]
    v_mev: Option<f64>,
    /// Unconditional QPC tunnelling constant.
    #[arg(long = "T0", global = true, allow_negative_numbers = true)]
    t0: Option<f64>,
    /// Occupation-conditioned QPC tunnelling constant.
    #[arg(long = "nu0", global = true, allow_negative_numbers = true)]
    nu0: Option<f64>,
    /// Zero-temperature s2 -> s0 emission rate in 1/ns.
    #[arg(long = "gamma-a0", global = true, allow_negative_numbers = true)]
    gamma_a0: Option<f64>,
    /// Zero-temperature s2 -> s1 emission rate in 1/ns.
    #[arg(long = "gamma-b0", global = true, allow_negative_numbers = true)]
    gamma_b0: Option<f64>,
    /// Phonon energy of the s0 <-> s2 transition: U+2J (spectral) or U+J (qpc).
    #[arg(long, global = true, value_enum)]
    gap_convention: Option<GapArg>,
    /// Default: csv for `sweep` and `correlation`, json otherwise.
    #[arg(long, global = true, value_enum)]
    output: Option<Output>,
    /// Seed for trajectory runs and random validation samples.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GapArg {
    Spectral,
    Qpc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Reference {
    Nophonon,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FanoMethod {
    Resolvent,
    Quadrature,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Resolvent,
    Quadrature,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariableArg {
    Temperature,
    Alpha,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fano factor at one parameter point.
    Fano {
        #[arg(long, value_enum, default_value_t = FanoMethod::Resolvent)]
        method: FanoMethod,
        /// Also report the phonon-free value and the ratio to it.
        #[arg(long, value_enum)]
        reference: Option<Reference>,
    },
    /// Fano factor over a temperature or alpha grid (CSV by default).
    Sweep {
        #[arg(long, value_enum, default_value_t = VariableArg::Temperature)]
        variable: VariableArg,
        /// Default: 0 K for temperature, 0.05 for alpha.
        #[arg(long)]
        start: Option<f64>,
        /// Default: 40 K for temperature, 8 for alpha.
        #[arg(long)]
        stop: Option<f64>,
        /// Grid size including both endpoints. Default: 81 (temperature), 160 (alpha).
        #[arg(long)]
        points: Option<usize>,
        #[arg(long, value_enum, default_value_t = MethodArg::Resolvent)]
        method: MethodArg,
        /// Add a fano_nophonon column.
        #[arg(long, value_enum)]
        reference: Option<Reference>,
        /// Append a triplet-sector row (F = 1).
        #[arg(long)]
        triplet: bool,
    },
    /// Stationary density matrix, analytic and numeric.
    SteadyState,
    /// Regular part g(tau) of the current autocorrelation.
    Correlation {
        /// Default: 10 relaxation times.
        #[arg(long)]
        tau_max: Option<f64>,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Monte-Carlo wave-function counting run.
    Trajectories {
        #[arg(long, default_value_t = 8)]
        n_trajectories: usize,
        #[arg(long, default_value_t = 1000)]
        n_windows: usize,
        /// Counting window in ns. Default: one relaxation time.
        #[arg(long)]
        t_window: Option<f64>,
        /// Write per-window counts as CSV to this file.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
    /// Cross-check the independent evaluation paths.
    Validate {
        /// Reduced sample sizes (well under a minute).
        #[arg(long)]
        quick: bool,
    },
    /// Hamiltonian and jump operators as JSON rows of [re, im].
    DumpOperators,
}

#[derive(Debug)]
enum Failure {
    Parameter(String),
    Numerical(String),
    Validation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_parameter_error() {
            Failure::Parameter(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Parameter(format!("i/o: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn build_params(g: &GlobalArgs) -> CliResult<ModelParams> {
    let mut p = default_params::<f64>();
    if let Some(path) = &g.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::Parameter(format!("{}: {e}", path.display())))?;
        apply_config(&mut p, &text)?;
    }
    let overrides = [
        (g.u_mev, &mut p.charging_energy),
        (g.j_mev, &mut p.exchange_splitting),
        (g.v_mev, &mut p.bias),
        (g.t0, &mut p.tunneling),
        (g.nu0, &mut p.tunneling_conditional),
        (g.gamma_a0, &mut p.gamma_a0),
        (g.gamma_b0, &mut p.gamma_b0),
        (g.temperature, &mut p.temperature),
        (g.alpha, &mut p.alpha),
    ];
    for (value, slot) in overrides {
        if let Some(v) = value {
            *slot = v;
        }
    }
    if let Some(gap) = g.gap_convention {
        p.gap_convention = match gap {
            GapArg::Spectral => GapConvention::Spectral,
            GapArg::Qpc => GapConvention::Qpc,
        };
    }
    p.validate()?;
    Ok(p)
}

fn params_json(p: &ModelParams) -> Value {
    serde_json::to_value(p).expect("parameters serialise")
}

fn emit(out: &mut impl Write, format: Output, value: &Value) -> CliResult<()> {
    match format {
        Output::Json => writeln!(out, "{}", serde_json::to_string_pretty(value).expect("json"))?,
        Output::Csv => {
            let obj = value.as_object().expect("flat object");
            let keys: Vec<&String> = obj.keys().filter(|k| !obj[*k].is_object() && !obj[*k].is_array()).collect();
            writeln!(out, "{}", keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","))?;
            let cells: Vec<String> = keys
                .iter()
                .map(|k| match &obj[*k] {
                    Value::String(s) => s.clone(),
                    Value::Null => String::new(),
                    v => v.to_string(),
                })
                .collect();
            writeln!(out, "{}", cells.join(","))?;
        }
    }
    Ok(())
}

fn noise_json(p: &ModelParams, nr: &NoiseResult) -> serde_json::Map<String, Value> {
    let mut m = serde_json::to_value(nr).expect("noise result serialises").as_object().cloned().unwrap_or_default();
    m.insert("params".into(), params_json(p));
    m
}

fn cmd_fano(p: &ModelParams, method: FanoMethod, reference: Option<Reference>, out: &mut impl Write, fmt: Output) -> CliResult<()> {
    let nr = match method {
        FanoMethod::Resolvent => fano_resolvent(p)?,
        FanoMethod::Quadrature => fano_quadrature(p, None, DEFAULT_QUADRATURE_TOL)?,
    };
    let mut m = noise_json(p, &nr);
    if reference.is_some() {
        let np = fano_nophonon(p)?;
        m.insert("fano_nophonon".into(), json!(np.fano));
        m.insert("ratio".into(), json!(nr.fano / np.fano));
    }
    emit(out, fmt, &Value::Object(m))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    p: &ModelParams,
    variable: VariableArg,
    start: Option<f64>,
    stop: Option<f64>,
    points: Option<usize>,
    method: MethodArg,
    reference: Option<Reference>,
    triplet: bool,
    out: &mut impl Write,
    fmt: Output,
) -> CliResult<()> {
    let mut spec = match variable {
        VariableArg::Temperature => SweepSpec::temperature_default(*p),
        VariableArg::Alpha => SweepSpec::alpha_default(*p),
    };
    spec.start = start.unwrap_or(spec.start);
    spec.stop = stop.unwrap_or(spec.stop);
    spec.points = points.unwrap_or(spec.points);
    spec.method = match method {
        MethodArg::Resolvent => SweepMethod::Resolvent,
        MethodArg::Quadrature => SweepMethod::Quadrature,
        MethodArg::Both => SweepMethod::Both,
    };
    spec.include_nophonon_reference = reference.is_some();
    spec.include_triplet = triplet;
    let records = sweep::run_sweep(&spec)?;
    match fmt {
        Output::Csv => sweep::write_csv(&records, &mut *out)?,
        Output::Json => {
            let rows: Vec<Value> = records
                .iter()
                .map(|r| match r {
                    SweepRecord::Row(row) => serde_json::to_value(row).expect("row serialises"),
                    SweepRecord::Failed { variable, value, error } => {
                        json!({"variable": variable, "value": value, "error": error.to_string()})
                    }
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&rows).expect("json"))?;
        }
    }
    let failures: Vec<&Error> = records.iter().filter_map(SweepRecord::error).collect();
    match failures.first() {
        None => Ok(()),
        Some(first) => {
            for e in &failures {
                eprintln!("sweep point failed: {e}");
            }
            let msg = format!("{} of {} sweep points failed", failures.len(), records.len());
            Err(if failures.iter().all(|e| e.is_parameter_error()) && first.is_parameter_error() {
                Failure::Parameter(msg)
            } else {
                Failure::Numerical(msg)
            })
        }
    }
}

fn matrix_json(m: &OperatorF64) -> Value {
    Value::Array(m.rows().iter().map(|row| Value::Array(row.iter().map(|z| json!([z.re, z.im])).collect())).collect())
}

fn cmd_steady_state(p: &ModelParams, out: &mut impl Write, fmt: Output) -> CliResult<()> {
    let (_, l) = generator_for(p)?;
    let numeric = steady_state_numeric(&l)?;
    let analytic = steady_state_analytic(p)?;
    let [p0, p1, p2] = numeric.populations();
    let value = json!({
        "p0": p0,
        "p1": p1,
        "p2": p2,
        "max_abs_difference": analytic.matrix().max_abs_diff(numeric.matrix()),
        "rho_numeric": matrix_json(numeric.matrix()),
        "rho_analytic": matrix_json(analytic.matrix()),
        "params": params_json(p),
    });
    emit(out, fmt, &value)
}

fn cmd_correlation(p: &ModelParams, tau_max: Option<f64>, points: usize, out: &mut impl Write, fmt: Output) -> CliResult<()> {
    if points < 2 {
        return Err(Failure::Parameter("--points must be at least 2".into()));
    }
    let (ops, l) = generator_for(p)?;
    let rho = steady_state_numeric(&l)?;
    let jm = jump_map(&ops);
    let tau_max = match tau_max {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(Failure::Parameter(format!("--tau-max must be positive, got {t}"))),
        None => 10.0 / spectral_gap(&l)?,
    };
    let taus: Vec<f64> = (0..points).map(|k| tau_max * k as f64 / (points - 1) as f64).collect();
    let g: Vec<f64> = taus.iter().map(|&t| correlation_regular(t, &l, &jm, &rho)).collect::<dqd_core::Result<_>>()?;
    match fmt {
        Output::Csv => {
            writeln!(out, "tau_ns,g_per_ns2")?;
            for (t, v) in taus.iter().zip(&g) {
                writeln!(out, "{t},{v}")?;
            }
        }
        Output::Json => writeln!(
            out,
            "{}",
            serde_json::to_string_pretty(&json!({"tau_ns": taus, "g_per_ns2": g, "params": params_json(p)})).expect("json")
        )?,
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_trajectories(
    p: &ModelParams,
    seed: u64,
    n_trajectories: usize,
    n_windows: usize,
    t_window: Option<f64>,
    dump: Option<&PathBuf>,
    out: &mut impl Write,
    fmt: Output,
) -> CliResult<()> {
    let t_window = match t_window {
        Some(t) => t,
        None => 1.0 / spectral_gap(&generator_for(p)?.1)?,
    };
    let cfg = TrajectoryConfig { n_trajectories, n_windows, t_window, seed, ..Default::default() };
    let rec = run_trajectories(p, &cfg)?;
    if let Some(path) = dump {
        let file = fs::File::create(path).map_err(|e| Failure::Parameter(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        rec.write_csv(&mut w)?;
        w.flush()?;
    }
    let reference = fano_resolvent(p)?;
    let value = json!({
        "fano": rec.fano_estimate,
        "fano_std_error": rec.std_error,
        "current": rec.rate(),
        "current_std_error": rec.mean_std_error / rec.t_window,
        "mean_count": rec.mean,
        "count_variance": rec.variance,
        "n_trajectories": rec.n_trajectories,
        "n_windows": rec.n_windows,
        "t_window_ns": rec.t_window,
        "burn_in_ns": rec.burn_in,
        "total_jumps": rec.total_jumps,
        "seed": seed,
        "fano_resolvent": reference.fano,
        "current_resolvent": reference.current,
        "params": params_json(p),
    });
    emit(out, fmt, &value)
}

fn cmd_validate(quick: bool, seed: u64, out: &mut impl Write) -> CliResult<()> {
    let report = run_validation(&ValidateOptions { quick, seed, ..Default::default() });
    eprint!("{}", report.table());
    writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("json"))?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(Failure::Validation(format!("failed checks: {}", failed.join(", "))))
    }
}

fn cmd_dump_operators(p: &ModelParams, out: &mut impl Write) -> CliResult<()> {
    let ops = OperatorSet::build(p)?;
    let (_, l) = generator_for(p)?;
    let mut counted = serde_json::Map::new();
    for (name, op) in COUNTED_NAMES.iter().zip(&ops.counted) {
        counted.insert((*name).into(), matrix_json(op));
    }
    let mut uncounted = serde_json::Map::new();
    for (name, op) in UNCOUNTED_NAMES.iter().zip(&ops.uncounted) {
        uncounted.insert((*name).into(), matrix_json(op));
    }
    let spectrum: Vec<Value> = eigenvalues(&l)?.iter().map(|z| json!([z.re, z.im])).collect();
    let value = json!({
        "hamiltonian": matrix_json(&ops.hamiltonian),
        "counted": counted,
        "uncounted": uncounted,
        "liouvillian_eigenvalues": spectrum,
        "params": params_json(p),
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json"))?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    let json = g.output.unwrap_or(Output::Json);
    let csv = g.output.unwrap_or(Output::Csv);
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let result = match cli.command {
        Command::Validate { quick } => cmd_validate(quick, g.seed, &mut out),
        command => {
            let p = build_params(g)?;
            match command {
                Command::Fano { method, reference } => cmd_fano(&p, method, reference, &mut out, json),
                Command::Sweep { variable, start, stop, points, method, reference, triplet } => {
                    cmd_sweep(&p, variable, start, stop, points, method, reference, triplet, &mut out, csv)
                }
                Command::SteadyState => cmd_steady_state(&p, &mut out, json),
                Command::Correlation { tau_max, points } => cmd_correlation(&p, tau_max, points, &mut out, csv),
                Command::Trajectories { n_trajectories, n_windows, t_window, dump } => {
                    cmd_trajectories(&p, g.seed, n_trajectories, n_windows, t_window, dump.as_ref(), &mut out, json)
                }
                Command::DumpOperators => cmd_dump_operators(&p, &mut out),
                Command::Validate { .. } => unreachable!(),
            }
        }
    };
    out.flush()?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, kind, msg) = match f {
                Failure::Parameter(m) => (EXIT_PARAMETER, "parameter error", m),
                Failure::Numerical(m) => (EXIT_NUMERICAL, "numerical failure", m),
                Failure::Validation(m) => (EXIT_VALIDATION, "validation failure", m),
            };
            eprintln!("dqd-fano: {kind}: {msg}");
            ExitCode::from(code)
        }
    }
}
