//! `rgroups`: run the identity suite and geometric queries from the shell.

mod json;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use rgroups::dp::{holonomy_loop, pi_transport};
use rgroups::geodesic::{exp_with_velocity, geodesic_ivp, log_map, speeds, ExpLogConfig};
use rgroups::manifold::sectional_curvature;
use rgroups::rt::lambda_transport;
use rgroups::suite::{catalogue, run_suite, IdentityRecord, IdentitySummary, SuiteConfig};
use rgroups::tensor::{max_abs_diff, norm, unit};
use rgroups::{Error, Manifold};

#[derive(Parser)]
#[command(name = "rgroups", version, about = "Verify translation and transport group identities on metric charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List built-in manifolds.
    Manifolds,
    /// Run the identity suite at seeded sample points and write a JSON report.
    Verify(VerifyArgs),
    /// Geodesic distance between two points, or a geodesic from initial data.
    Geodesic(GeodesicArgs),
    /// π- and λ-transport of a frame vector back along a geodesic.
    Transport(TransportArgs),
    /// Rotation of a frame carried around a small geodesic quadrilateral.
    Holonomy(HolonomyArgs),
}

#[derive(Args, Default)]
struct SolverArgs {
    /// Integrator steps per unit affine parameter.
    #[arg(long)]
    steps_per_unit: Option<usize>,
    /// Maximum Newton iterations of the boundary-value solver.
    #[arg(long)]
    bvp_max_iter: Option<usize>,
    /// Convergence tolerance of the boundary-value solver.
    #[arg(long)]
    bvp_tol: Option<f64>,
    /// Finite-difference step for group-law derivatives.
    #[arg(long)]
    fd_step: Option<f64>,
    /// Disable Richardson extrapolation of finite differences.
    #[arg(long)]
    no_richardson: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Built-in name or path to a `.metric` file.
    #[arg(long)]
    manifold: Option<String>,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Tolerance override, `identity_id=value`; repeatable.
    #[arg(long = "tol", value_name = "ID=VALUE")]
    tol: Vec<String>,
    /// Comma-separated identity ids to run.
    #[arg(long)]
    only: Option<String>,
    /// Report path; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Include wall time in the report.
    #[arg(long)]
    timing: bool,
    /// List identity ids and default tolerances, then exit.
    #[arg(long)]
    list: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct GeodesicArgs {
    #[arg(long)]
    manifold: String,
    /// Start point, comma-separated chart coordinates.
    #[arg(long, allow_hyphen_values = true)]
    from: String,
    /// End point; reports the geodesic distance.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["velocity", "t"])]
    to: Option<String>,
    /// Initial chart velocity; integrates for `--length`.
    #[arg(long, allow_hyphen_values = true, requires = "length", conflicts_with = "t")]
    velocity: Option<String>,
    #[arg(long)]
    length: Option<f64>,
    /// Frame parameter; reports `exp_x(t)`.
    #[arg(long, allow_hyphen_values = true)]
    t: Option<String>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct TransportArgs {
    #[arg(long)]
    manifold: String,
    /// Base point.
    #[arg(long, allow_hyphen_values = true)]
    at: String,
    /// Frame parameter of the geodesic.
    #[arg(long, allow_hyphen_values = true)]
    t: String,
    /// Frame vector at the end point.
    #[arg(long, allow_hyphen_values = true)]
    vector: String,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct HolonomyArgs {
    #[arg(long)]
    manifold: String,
    #[arg(long, allow_hyphen_values = true)]
    at: String,
    /// Loop directions: basis names `e1,e2` or vectors `1,0;0,1`.
    #[arg(long, allow_hyphen_values = true, default_value = "e1,e2")]
    dirs: String,
    #[arg(long)]
    scale: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

enum Failure {
    Config(String),
    Parse(String),
    Identities,
    Solver(Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Identities => 1,
            Failure::Config(_) => 2,
            Failure::Parse(_) => 3,
            Failure::Solver(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(p) => Failure::Parse(p.to_string()),
            Error::InvalidArgument(m) => Failure::Config(m),
            Error::Dimension { .. } => Failure::Config(e.to_string()),
            other => Failure::Solver(other),
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    manifold: Option<String>,
    seed: Option<u64>,
    samples: Option<usize>,
    steps_per_unit: Option<usize>,
    bvp_max_iter: Option<usize>,
    bvp_tol: Option<f64>,
    fd_step: Option<f64>,
    richardson: Option<bool>,
    output: Option<PathBuf>,
    only: Option<Vec<String>>,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("error: {m}"),
                Failure::Parse(m) => eprintln!("error: metric parse error: {m}"),
                Failure::Identities => eprintln!("verification failed"),
                Failure::Solver(e) => {
                    #[derive(Serialize)]
                    struct SolverError<'a> {
                        error: &'a str,
                        message: String,
                    }
                    print!("{}", json::to_string(&SolverError { error: e.kind(), message: e.to_string() }));
                    eprintln!("error: {e}");
                }
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Manifolds => manifolds(),
        Command::Verify(a) => verify(a),
        Command::Geodesic(a) => geodesic(a),
        Command::Transport(a) => transport(a),
        Command::Holonomy(a) => holonomy(a),
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("RGROUPS_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::Config(format!("RGROUPS_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(format!("thread pool: {e}")))
}

fn resolve_manifold(name: &str) -> Result<Manifold, Failure> {
    let path = Path::new(name);
    if name.ends_with(".metric") || path.is_file() {
        let src = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {name}: {e}")))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name);
        return Manifold::from_source(stem, &src).map_err(|e| match e {
            Error::Parse(p) => Failure::Parse(format!("{name}:{p}")),
            other => Failure::from(other),
        });
    }
    Manifold::builtin(name).ok_or_else(|| {
        Failure::Config(format!("unknown manifold '{name}' (built-ins: euclidean<n>, sphere, halfplane; or a .metric file)"))
    })
}

fn parse_vector(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Failure::Config(format!("{what}: cannot parse '{p}' as a number"))))
        .collect()
}

fn parse_point(m: &Manifold, s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let v = parse_vector(s, what)?;
    if v.len() != m.dim() {
        return Err(Failure::Config(format!("{what}: expected {} components, got {}", m.dim(), v.len())));
    }
    Ok(v)
}

fn exp_log_config(file: &FileConfig, a: &SolverArgs) -> Result<ExpLogConfig, Failure> {
    let d = ExpLogConfig::default();
    let cfg = ExpLogConfig {
        steps_per_unit: a.steps_per_unit.or(file.steps_per_unit).unwrap_or(d.steps_per_unit),
        bvp_max_iter: a.bvp_max_iter.or(file.bvp_max_iter).unwrap_or(d.bvp_max_iter),
        bvp_tol: a.bvp_tol.or(file.bvp_tol).unwrap_or(d.bvp_tol),
        fd_step: a.fd_step.or(file.fd_step).unwrap_or(d.fd_step),
        richardson: if a.no_richardson { false } else { file.richardson.unwrap_or(d.richardson) },
    };
    cfg.validate()?;
    Ok(cfg)
}

fn emit<T: Serialize>(value: &T) {
    print!("{}", json::to_string(value));
}

#[derive(Serialize)]
struct Bound {
    coordinate: String,
    lower: Option<f64>,
    upper: Option<f64>,
}

#[derive(Serialize)]
struct ManifoldInfo {
    name: String,
    dim: usize,
    domain: Vec<Bound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<String>,
}

fn info(m: &Manifold) -> ManifoldInfo {
    let finite = |v: f64| v.is_finite().then_some(v);
    ManifoldInfo {
        name: m.name().to_string(),
        dim: m.dim(),
        domain: m
            .coords()
            .iter()
            .zip(&m.domain().bounds)
            .map(|(c, &(lo, hi))| Bound { coordinate: c.clone(), lower: finite(lo), upper: finite(hi) })
            .collect(),
        source: m.spec().map(|s| s.to_source()),
    }
}

fn manifolds() -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Listing {
        manifolds: Vec<ManifoldInfo>,
        note: &'static str,
    }
    let list = ["euclidean2", "euclidean3", "sphere", "halfplane"]
        .iter()
        .map(|n| info(&Manifold::builtin(n).expect("built-in")))
        .collect();
    emit(&Listing { manifolds: list, note: "euclidean<n> exists for every n >= 1" });
    Ok(())
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    manifold: ManifoldInfo,
    config: &'a SuiteConfig,
    summary: &'a [IdentitySummary],
    records: &'a [IdentityRecord],
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    if a.list {
        #[derive(Serialize)]
        struct Entry {
            identity_id: &'static str,
            eq_ref: &'static str,
            tolerance: f64,
        }
        let v: Vec<Entry> =
            catalogue().iter().map(|i| Entry { identity_id: i.id, eq_ref: i.eq_ref, tolerance: i.tolerance }).collect();
        emit(&v);
        return Ok(());
    }
    let file: FileConfig = match &a.config {
        Some(p) => {
            let s = std::fs::read_to_string(p).map_err(|e| Failure::Config(format!("cannot read {}: {e}", p.display())))?;
            toml::from_str(&s).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let name = a
        .manifold
        .clone()
        .or_else(|| file.manifold.clone())
        .ok_or_else(|| Failure::Config("--manifold is required".into()))?;
    let mut tolerances = file.tolerances.clone();
    for t in &a.tol {
        let (id, v) = t.split_once('=').ok_or_else(|| Failure::Config(format!("--tol expects ID=VALUE, got '{t}'")))?;
        let v: f64 = v.trim().parse().map_err(|_| Failure::Config(format!("--tol {id}: '{v}' is not a number")))?;
        tolerances.insert(id.trim().to_string(), v);
    }
    let only = match &a.only {
        Some(s) => Some(s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()),
        None => file.only.clone(),
    };
    let cfg = SuiteConfig {
        seed: a.seed.or(file.seed).unwrap_or(0),
        samples: a.samples.or(file.samples).unwrap_or(20),
        exp_log: exp_log_config(&file, &a.solver)?,
        tolerances,
        only,
    };
    cfg.validate()?;
    let m = resolve_manifold(&name)?;
    let start = Instant::now();
    let result = run_suite(&m, &cfg)?;
    let wall = start.elapsed().as_secs_f64();
    let report = Report {
        tool: "rgroups",
        version: env!("CARGO_PKG_VERSION"),
        manifold: info(&m),
        config: &cfg,
        summary: &result.summaries,
        records: &result.records,
        pass: result.pass,
        wall_time_s: a.timing.then_some(wall),
    };
    let text = json::to_string(&report);
    match a.output.as_ref().or(file.output.as_ref()) {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Config(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    for s in &result.summaries {
        let max = s.max_residual.map_or("-".to_string(), |r| format!("{r:.3e}"));
        eprintln!(
            "{} {:<26} max {:>10}  tol {:.1e}{}",
            if s.pass { "PASS" } else { "FAIL" },
            s.identity_id,
            max,
            s.tolerance,
            if s.errors > 0 { format!("  ({} errors)", s.errors) } else { String::new() }
        );
    }
    if result.pass {
        Ok(())
    } else {
        Err(Failure::Identities)
    }
}

fn geodesic(a: GeodesicArgs) -> Result<(), Failure> {
    let m = resolve_manifold(&a.manifold)?;
    let cfg = exp_log_config(&FileConfig::default(), &a.solver)?;
    let x = parse_point(&m, &a.from, "--from")?;
    if let Some(to) = &a.to {
        #[derive(Serialize)]
        struct Distance {
            manifold: String,
            from: Vec<f64>,
            to: Vec<f64>,
            t: Vec<f64>,
            distance: f64,
        }
        let y = parse_point(&m, to, "--to")?;
        let t = log_map(&m, &x, &y, &cfg)?;
        emit(&Distance { manifold: m.name().into(), from: x, to: y, distance: norm(&t), t });
        return Ok(());
    }
    #[derive(Serialize)]
    struct Endpoint {
        manifold: String,
        from: Vec<f64>,
        endpoint: Vec<f64>,
        end_velocity: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        speed_drift: Option<f64>,
    }
    if let Some(v) = &a.velocity {
        let v = parse_point(&m, v, "--velocity")?;
        let len = a.length.expect("clap enforces --length");
        let path = geodesic_ivp(&m, &x, &v, len, &cfg)?;
        let sp = speeds(&m, &path)?;
        let drift = sp.iter().map(|s| (s - sp[0]).abs()).fold(0.0, f64::max) / sp[0].max(f64::MIN_POSITIVE);
        let (end, vel) = path.end();
        emit(&Endpoint {
            manifold: m.name().into(),
            from: x.clone(),
            endpoint: end.to_vec(),
            end_velocity: vel.to_vec(),
            speed_drift: Some(drift),
        });
        return Ok(());
    }
    let t = a.t.as_deref().ok_or_else(|| Failure::Config("one of --to, --velocity or --t is required".into()))?;
    let t = parse_point(&m, t, "--t")?;
    let (end, vel) = exp_with_velocity(&m, &x, &t, &cfg)?;
    emit(&Endpoint { manifold: m.name().into(), from: x, endpoint: end, end_velocity: vel, speed_drift: None });
    Ok(())
}

fn transport(a: TransportArgs) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Transport {
        manifold: String,
        at: Vec<f64>,
        t: Vec<f64>,
        vector: Vec<f64>,
        pi: Vec<f64>,
        lambda: Vec<f64>,
        difference: f64,
    }
    let m = resolve_manifold(&a.manifold)?;
    let cfg = exp_log_config(&FileConfig::default(), &a.solver)?;
    let x = parse_point(&m, &a.at, "--at")?;
    let t = parse_point(&m, &a.t, "--t")?;
    let v = parse_point(&m, &a.vector, "--vector")?;
    let pi = pi_transport(&m, &x, &t, &v, &cfg)?;
    let lambda = lambda_transport(&m, &x, &t, &v, &cfg)?;
    emit(&Transport {
        manifold: m.name().into(),
        difference: max_abs_diff(&pi, &lambda),
        at: x,
        t,
        vector: v,
        pi,
        lambda,
    });
    Ok(())
}

fn parse_dirs(m: &Manifold, s: &str) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let n = m.dim();
    let dirs: Vec<Vec<f64>> = if s.contains(';') {
        s.split(';').map(|p| parse_point(m, p, "--dirs")).collect::<Result<_, _>>()?
    } else {
        s.split(',')
            .map(|p| {
                let p = p.trim();
                p.strip_prefix('e')
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k >= 1 && k <= n)
                    .map(|k| unit(n, k - 1))
                    .ok_or_else(|| Failure::Config(format!("--dirs: '{p}' is not a basis name e1..e{n}")))
            })
            .collect::<Result<_, _>>()?
    };
    match <[Vec<f64>; 2]>::try_from(dirs) {
        Ok([a, b]) => Ok((a, b)),
        Err(_) => Err(Failure::Config("--dirs needs exactly two directions".into())),
    }
}

fn holonomy(a: HolonomyArgs) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Report {
        manifold: String,
        at: Vec<f64>,
        dirs: [Vec<f64>; 2],
        scale: f64,
        angle: f64,
        closure_defect: f64,
        rotation: Vec<Vec<f64>>,
        vertices: Vec<Vec<f64>>,
        /// Sectional curvature at the base point times the parallelogram area.
        curvature_area: f64,
    }
    let m = resolve_manifold(&a.manifold)?;
    let cfg = exp_log_config(&FileConfig::default(), &a.solver)?;
    let x = parse_point(&m, &a.at, "--at")?;
    let (u, v) = parse_dirs(&m, &a.dirs)?;
    let h = holonomy_loop(&m, &x, &u, &v, a.scale, &cfg)?;
    let curvature_area = if m.dim() >= 2 {
        let r = m.riemann_classical_at(&x)?;
        let (uu, vv, uv) = (dot(&u, &u), dot(&v, &v), dot(&u, &v));
        let area2 = uu * vv - uv * uv;
        // sectional curvature of span(u, v) from −η⟨v, R⟨u,u,v⟩⟩ / |u∧v|²
        let k = if m.dim() == 2 {
            sectional_curvature(&r, 0, 1)
        } else {
            -dot(&v, &r.apply(&u, &u, &v)) / area2
        };
        k * a.scale * a.scale * area2.sqrt()
    } else {
        0.0
    };
    emit(&Report {
        manifold: m.name().into(),
        at: x,
        dirs: [u, v],
        scale: a.scale,
        angle: h.angle,
        closure_defect: h.closure_defect,
        rotation: h.rotation,
        vertices: h.vertices,
        curvature_area,
    });
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    rgroups::tensor::dot(a, b)
}
