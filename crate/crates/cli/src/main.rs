//! Command-line front end: proximity-force sweeps, round-trip trace
//! comparisons, WKB validity checks, and material/Fresnel tables, emitted as
//! CSV (default) or JSON lines.
//!
//! Exit codes: 0 success, 2 parse/validation error, 3 nonconvergence,
//! 4 evaluation budget exceeded.

use casimir_core::constants::SPEED_OF_LIGHT;
use casimir_core::geometry::Geometry;
use casimir_core::materials::{fresnel_zero_freq, permittivity, DielectricModel};
use casimir_core::mie::{scattering_amplitudes, ScatteringKinematics, SizeParameter};
use casimir_core::pfa::{force_info, free_energy_info, free_energy_zero_t, ThermalSpec};
use casimir_core::polarization::Polarization;
use casimir_core::roundtrip::{
    trace_m_r_with_error, tr_m_r_pfa_compare, AmplitudeKind, QuadratureSpec, TraceEntry,
    TraceTable,
};
use casimir_core::wkb;
use casimir_core::Error as CoreError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "casimir",
    about = "Casimir free energy and force between spheres in the plane-wave scattering basis",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format: csv (header row) or json (one object per line).
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write rows to a file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Amplitude {
    Exact,
    Wkb,
}

#[derive(Subcommand)]
enum Command {
    /// Proximity-force free energy and force over a gap or gap sweep.
    Pfa(PfaArgs),
    /// Numeric round-trip traces against the saddle-point closed form.
    Roundtrip(RoundtripArgs),
    /// Exact Mie amplitudes against their specular-reflection asymptotics.
    WkbCheck(WkbCheckArgs),
    /// Permittivity and Fresnel coefficient tables.
    Materials(MaterialsArgs),
}

#[derive(Args)]
struct PfaArgs {
    /// Radius of sphere 1 in meters.
    #[arg(long)]
    r1: f64,
    /// Radius of sphere 2 in meters.
    #[arg(long, conflicts_with = "plane")]
    r2: Option<f64>,
    /// Replace sphere 2 by a plane.
    #[arg(long)]
    plane: bool,
    /// Surface-to-surface gap in meters.
    #[arg(long, conflicts_with = "sweep_gap")]
    gap: Option<f64>,
    /// Gap sweep start:end:count (meters, linear, inclusive).
    #[arg(long)]
    sweep_gap: Option<String>,
    /// Temperature in kelvin (0 selects the zero-temperature integrals).
    #[arg(long)]
    temp: f64,
    /// Material of sphere 1: perfect | plasma:<wp> | drude:<wp>:<gamma> | dielectric:<eps0>.
    #[arg(long)]
    material1: String,
    /// Material of sphere 2 (or the plane).
    #[arg(long)]
    material2: String,
}

#[derive(Args)]
struct RoundtripArgs {
    /// Aspect ratios R/L (plane-sphere) or R_eff/L (sphere-sphere), comma-separated.
    #[arg(long, default_value = "100,300,1000")]
    rl_values: String,
    /// Gap in meters.
    #[arg(long, default_value_t = 1.0e-6)]
    gap: f64,
    /// Plane-sphere geometry (default).
    #[arg(long, conflicts_with = "mu")]
    plane: bool,
    /// Sphere-sphere radius asymmetry mu = R1/(R1+R2) in (0, 1/2].
    #[arg(long)]
    mu: Option<f64>,
    /// Round-trip order r.
    #[arg(long, default_value_t = 1)]
    r_order: usize,
    /// Imaginary frequency in rad/s.
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
    /// Reflection amplitudes driving the trace.
    #[arg(long, value_enum, default_value_t = Amplitude::Exact)]
    amplitude: Amplitude,
    /// Radial node count (0 = automatic).
    #[arg(long, default_value_t = 0)]
    n_k: usize,
    /// Azimuthal node count (0 = automatic from the aspect ratio).
    #[arg(long, default_value_t = 0)]
    n_phi: usize,
    /// Material of the sphere (sphere 1).
    #[arg(long, default_value = "perfect")]
    material1: String,
    /// Material of the plane or sphere 2.
    #[arg(long, default_value = "perfect")]
    material2: String,
    /// Emit the (n, r, trace, est_error) Matsubara trace table instead of
    /// ratios; uses the first rl value and requires --temp.
    #[arg(long)]
    emit_traces: bool,
    /// Temperature for --emit-traces, kelvin.
    #[arg(long)]
    temp: Option<f64>,
    /// Largest Matsubara index for --emit-traces.
    #[arg(long, default_value_t = 4)]
    n_max: u32,
    /// Largest round-trip order for --emit-traces.
    #[arg(long, default_value_t = 3)]
    r_max: u32,
}

#[derive(Args)]
struct WkbCheckArgs {
    /// Size parameters x = ξR/c, comma-separated.
    #[arg(long, default_value = "50,100,200,400")]
    x_values: String,
    /// Scattering-angle cosine (must be <= -1 on the imaginary axis).
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    cos_theta: f64,
    /// Sphere material.
    #[arg(long, default_value = "perfect")]
    material: String,
    /// Sphere radius in meters; fixes ξ = x c/R for dispersive materials.
    #[arg(long, default_value_t = 1.0e-4)]
    radius: f64,
    /// Relative truncation tolerance of the partial-wave sums.
    #[arg(long, default_value_t = 1.0e-10)]
    tol: f64,
}

#[derive(Args)]
struct MaterialsArgs {
    /// Material specification.
    #[arg(long)]
    material: String,
    /// Imaginary frequencies ξ in rad/s, comma-separated (0 allowed).
    #[arg(long, default_value = "0,1e14,1e15,1e16")]
    xi_values: String,
    /// Axial wavenumbers κ in 1/m, comma-separated.
    #[arg(long, default_value = "1e6")]
    kappa_values: String,
}

#[derive(Clone)]
enum Value {
    Num(f64),
    Int(u64),
    Str(String),
}

impl Value {
    /// Shortest round-trip scientific form, e.g. -1.397799274444156e-13.
    fn num(v: f64) -> String {
        if v == 0.0 {
            "0".into()
        } else {
            format!("{v:e}")
        }
    }

    fn csv(&self) -> String {
        match self {
            Value::Num(v) => Self::num(*v),
            Value::Int(v) => format!("{v}"),
            Value::Str(s) => s.clone(),
        }
    }

    fn json(&self) -> String {
        match self {
            Value::Num(v) => {
                if v.is_finite() {
                    Self::num(*v)
                } else {
                    format!("\"{v}\"")
                }
            }
            Value::Int(v) => format!("{v}"),
            Value::Str(s) => format!("\"{s}\""),
        }
    }
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Value::csv).collect();
                    writeln!(out, "{}", cells.join(","))?;
                }
            }
            Format::Json => {
                for row in &self.rows {
                    let fields: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| format!("\"{c}\":{}", v.json()))
                        .collect();
                    writeln!(out, "{{{}}}", fields.join(","))?;
                }
            }
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let table = match &cli.command {
        Command::Pfa(args) => run_pfa(args),
        Command::Roundtrip(args) => run_roundtrip(args),
        Command::WkbCheck(args) => run_wkb_check(args),
        Command::Materials(args) => run_materials(args),
    };
    let table = match table {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                CoreError::Domain(_) => 2,
                CoreError::Nonconvergence(_) => 3,
                CoreError::BudgetExceeded(_) => 4,
            });
        }
    };
    let result = match &cli.output {
        Some(path) => File::create(path)
            .and_then(|mut f| table.write(cli.format, &mut f)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write(cli.format, &mut lock)
        }
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::SUCCESS
}

fn parse_list(spec: &str, what: &str) -> Result<Vec<f64>, CoreError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CoreError::Domain(format!("invalid {what} value '{s}'")))
        })
        .collect()
}

fn parse_sweep(spec: &str) -> Result<Vec<f64>, CoreError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, end, count] = parts.as_slice() else {
        return Err(CoreError::Domain(format!(
            "sweep spec '{spec}' must be start:end:count"
        )));
    };
    let start: f64 = start
        .parse()
        .map_err(|_| CoreError::Domain(format!("invalid sweep start '{start}'")))?;
    let end: f64 = end
        .parse()
        .map_err(|_| CoreError::Domain(format!("invalid sweep end '{end}'")))?;
    let count: usize = count
        .parse()
        .map_err(|_| CoreError::Domain(format!("invalid sweep count '{count}'")))?;
    if count < 1 {
        return Err(CoreError::Domain("sweep count must be >= 1".into()));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
        .collect())
}

fn run_pfa(args: &PfaArgs) -> Result<Table, CoreError> {
    let model1: DielectricModel = args.material1.parse()?;
    let model2: DielectricModel = args.material2.parse()?;
    if !args.plane && args.r2.is_none() {
        return Err(CoreError::Domain(
            "specify --r2 <radius> or --plane for the second object".into(),
        ));
    }
    let gaps = match (&args.gap, &args.sweep_gap) {
        (Some(g), None) => vec![*g],
        (None, Some(s)) => parse_sweep(s)?,
        (None, None) => {
            return Err(CoreError::Domain("specify --gap or --sweep-gap".into()))
        }
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    };
    let thermal = ThermalSpec::new(args.temp)?;
    let mut table = Table::new(vec![
        "L",
        "T",
        "R1",
        "R2",
        "material1",
        "material2",
        "free_energy_J",
        "force_N",
        "n_max_used",
        "est_error",
    ]);
    for gap in gaps {
        let geom = if args.plane {
            Geometry::plane_sphere(args.r1, gap)?
        } else {
            Geometry::sphere_sphere(args.r1, args.r2.unwrap(), gap)?
        };
        let (fe, force_eval) = if thermal.is_zero() {
            (
                free_energy_zero_t(&geom, &model1, &model2)?,
                force_info(&geom, &model1, &model2, &thermal)?,
            )
        } else {
            let fe = free_energy_info(&geom, &model1, &model2, &thermal)?;
            let fo = force_info(&geom, &model1, &model2, &thermal)?;
            (fe.value, fo)
        };
        let rel_est = if force_eval.value != 0.0 {
            (force_eval.est_error / force_eval.value).abs()
        } else {
            0.0
        };
        table.push(vec![
            Value::Num(gap),
            Value::Num(args.temp),
            Value::Num(geom.r1()),
            Value::Num(geom.r2()),
            Value::Str(model1.to_string()),
            Value::Str(model2.to_string()),
            Value::Num(fe),
            Value::Num(force_eval.value),
            Value::Int(force_eval.n_max_used as u64),
            Value::Num(rel_est),
        ]);
    }
    Ok(table)
}

fn geometry_for_aspect(
    aspect: f64,
    gap: f64,
    plane: bool,
    mu: Option<f64>,
) -> Result<Geometry, CoreError> {
    if !(aspect > 0.0) {
        return Err(CoreError::Domain(format!("aspect ratio must be > 0, got {aspect}")));
    }
    match (plane, mu) {
        (_, None) => Geometry::plane_sphere(aspect * gap, gap),
        (_, Some(mu)) => {
            if !(mu > 0.0 && mu <= 0.5) {
                return Err(CoreError::Domain(format!("mu must lie in (0, 1/2], got {mu}")));
            }
            let r_eff = aspect * gap;
            let r1 = r_eff / (1.0 - mu);
            let r2 = r_eff / mu;
            Geometry::sphere_sphere(r1, r2, gap)
        }
    }
}

fn run_roundtrip(args: &RoundtripArgs) -> Result<Table, CoreError> {
    let model1: DielectricModel = args.material1.parse()?;
    let model2: DielectricModel = args.material2.parse()?;
    let kind = match args.amplitude {
        Amplitude::Exact => AmplitudeKind::Exact,
        Amplitude::Wkb => AmplitudeKind::Wkb,
    };
    let aspects = parse_list(&args.rl_values, "rl")?;
    let quad_for = |aspect: f64| -> Result<QuadratureSpec, CoreError> {
        let auto = QuadratureSpec::for_aspect_ratio(aspect);
        QuadratureSpec::new(
            if args.n_k == 0 { auto.n_k } else { args.n_k },
            if args.n_phi == 0 { auto.n_phi } else { args.n_phi },
        )
    };
    if args.emit_traces {
        let temp = args.temp.ok_or_else(|| {
            CoreError::Domain("--emit-traces requires --temp".into())
        })?;
        let thermal = ThermalSpec::new(temp)?;
        if thermal.is_zero() {
            return Err(CoreError::Domain("--emit-traces requires T > 0".into()));
        }
        let aspect = aspects
            .first()
            .copied()
            .ok_or_else(|| CoreError::Domain("empty --rl-values".into()))?;
        let geom = geometry_for_aspect(aspect, args.gap, args.plane, args.mu)?;
        let quad = quad_for(aspect)?;
        let mut trace_table = TraceTable::new();
        for n in 0..=args.n_max {
            let xi = thermal.matsubara(n);
            for r in 1..=args.r_max {
                let est = trace_m_r_with_error(
                    r as usize,
                    xi,
                    &geom,
                    &model1,
                    &model2,
                    &quad,
                    kind,
                )?;
                trace_table.insert(
                    n,
                    r,
                    TraceEntry {
                        trace: est.value,
                        est_error: est.est_error,
                    },
                );
            }
        }
        let mut table = Table::new(vec!["n", "r", "trace", "est_error"]);
        for (n, r, trace, est) in trace_table.rows() {
            table.push(vec![
                Value::Int(n as u64),
                Value::Int(r as u64),
                Value::Num(trace),
                Value::Num(est),
            ]);
        }
        return Ok(table);
    }
    let mut table = Table::new(vec!["R_over_L", "r", "ratio", "est_error"]);
    for aspect in aspects {
        let geom = geometry_for_aspect(aspect, args.gap, args.plane, args.mu)?;
        let quad = quad_for(aspect)?;
        let (numeric, closed) = tr_m_r_pfa_compare(
            args.r_order,
            args.xi,
            &geom,
            &model1,
            &model2,
            &quad,
            kind,
        )?;
        let ratio = numeric.value / closed;
        table.push(vec![
            Value::Num(aspect),
            Value::Int(args.r_order as u64),
            Value::Num(ratio),
            Value::Num((numeric.est_error / closed).abs()),
        ]);
    }
    Ok(table)
}

fn run_wkb_check(args: &WkbCheckArgs) -> Result<Table, CoreError> {
    let model: DielectricModel = args.material.parse()?;
    if !(args.cos_theta <= -1.0) {
        return Err(CoreError::Domain(format!(
            "the specular asymptotics hold away from the forward direction; \
             imaginary-frequency backscattering needs cos_theta <= -1, got {}",
            args.cos_theta
        )));
    }
    if !(args.radius > 0.0) {
        return Err(CoreError::Domain("radius must be positive".into()));
    }
    let xs = parse_list(&args.x_values, "x")?;
    let mut table = Table::new(vec!["x", "cos_theta", "polarization", "wkb_rel_error", "est_error"]);
    for x in xs {
        if !(x > 0.0) {
            return Err(CoreError::Domain(format!("x must be > 0, got {x}")));
        }
        let xi = x * SPEED_OF_LIGHT / args.radius;
        let kin = ScatteringKinematics::from_cos_theta(args.cos_theta, xi)?;
        let sp = SizeParameter::new(x)?;
        let (s1, s2) = scattering_amplitudes(&kin, sp, &model, args.tol)?;
        for (pol, exact) in [(Polarization::Te, s1), (Polarization::Tm, s2)] {
            let asymptotic = wkb::amplitude(pol, &kin, sp, &model)?;
            let rel = if asymptotic.is_zero() && exact.is_zero() {
                0.0
            } else if asymptotic.is_zero() {
                f64::INFINITY
            } else {
                exact.relative_to(&asymptotic)
            };
            table.push(vec![
                Value::Num(x),
                Value::Num(args.cos_theta),
                Value::Str(pol.to_string()),
                Value::Num(rel),
                Value::Num(args.tol),
            ]);
        }
    }
    Ok(table)
}

fn run_materials(args: &MaterialsArgs) -> Result<Table, CoreError> {
    let model: DielectricModel = args.material.parse()?;
    let xis = parse_list(&args.xi_values, "xi")?;
    let kappas = parse_list(&args.kappa_values, "kappa")?;
    let mut table = Table::new(vec!["xi", "kappa", "epsilon", "r_te", "r_tm", "est_error"]);
    for &xi in &xis {
        for &kappa in &kappas {
            let (eps, fres) = if xi == 0.0 {
                let eps = match model {
                    DielectricModel::Dielectric { eps0 } => eps0,
                    _ => f64::INFINITY,
                };
                (eps, fresnel_zero_freq(&model, kappa)?)
            } else {
                (
                    permittivity(&model, xi)?,
                    casimir_core::materials::fresnel(&model, xi, kappa)?,
                )
            };
            table.push(vec![
                Value::Num(xi),
                Value::Num(kappa),
                Value::Num(eps),
                Value::Num(fres.r_te),
                Value::Num(fres.r_tm),
                Value::Num(0.0),
            ]);
        }
    }
    Ok(table)
}
