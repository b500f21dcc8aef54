use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nanowire_tw::dynamics::{discrete_static_wall, integrate_with, track_wall, IntegrateOptions};
use nanowire_tw::energetics::equilibria;
use nanowire_tw::io::{
    parse_pairs, read_profile_csv, read_solution_json, write_cartesian_csv, write_profile_csv,
    write_solution_json, RunConfig, SCHEMA_VERSION,
};
use nanowire_tw::model::{to_cartesian, Grid, Params, Regime};
use nanowire_tw::spectral::{lowest_eigenpairs, potential_l, potential_m, potential_n};
use nanowire_tw::staticsol::{static_profile, StaticWall};
use nanowire_tw::twsolve::{continue_branch, solve_tw, velocity_identity};
use nanowire_tw::verify::{run_all, run_one, Report, VerifyConfig};
use nanowire_tw::Error;

#[derive(Parser)]
#[command(
    name = "nanowire-tw",
    version,
    about = "Travelling domain walls in thin ferromagnetic nanowires"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a static wall profile.
    Static(StaticArgs),
    /// Print the far-field equilibria for the configured parameters.
    Equilibria(Overrides),
    /// Solve for a travelling wave.
    SolveTw(SolveArgs),
    /// Follow a branch of travelling waves between two parameter points.
    Continue(ContinueArgs),
    /// Lowest eigenvalues of the linearised Schroedinger operators.
    Spectrum(SpectrumArgs),
    /// Integrate the time-dependent equation from a static wall.
    Simulate(SimulateArgs),
    /// Run the validation suite (or one part of it).
    Verify(VerifyArgs),
}

/// Configuration file plus per-key overrides; flags win over the file.
#[derive(Args, Clone, Default)]
struct Overrides {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "H1", allow_hyphen_values = true)]
    h1: Option<f64>,
    #[arg(long = "H2", allow_hyphen_values = true)]
    h2: Option<f64>,
    #[arg(long = "H3", allow_hyphen_values = true)]
    h3: Option<f64>,
    #[arg(long = "K2")]
    k2: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// auto, walker or transverse.
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    n_nodes: Option<usize>,
    #[arg(long)]
    spacing: Option<f64>,
    /// Finite-difference order of the travelling-wave solver (2, 4 or 6).
    #[arg(long)]
    stencil: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn pairs(&self) -> anyhow::Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                parse_pairs(&text)?
            }
            None => BTreeMap::new(),
        };
        let mut set = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                map.insert(k.to_string(), v);
            }
        };
        set("H1", self.h1.map(|v| v.to_string()));
        set("H2", self.h2.map(|v| v.to_string()));
        set("H3", self.h3.map(|v| v.to_string()));
        set("K2", self.k2.map(|v| v.to_string()));
        set("alpha", self.alpha.map(|v| v.to_string()));
        set("regime", self.regime.clone());
        set("half_width", self.half_width.map(|v| v.to_string()));
        set("n_nodes", self.n_nodes.map(|v| v.to_string()));
        set("spacing", self.spacing.map(|v| v.to_string()));
        set("stencil", self.stencil.clone());
        set("seed", self.seed.map(|v| v.to_string()));
        if map.contains_key("n_nodes") && map.contains_key("spacing") {
            // a flag replaces the other grid key from the file
            if self.n_nodes.is_some() && self.spacing.is_none() {
                map.remove("spacing");
            } else if self.spacing.is_some() && self.n_nodes.is_none() {
                map.remove("n_nodes");
            }
        }
        Ok(map)
    }

    fn load(&self) -> anyhow::Result<RunConfig> {
        Ok(RunConfig::from_map(&self.pairs()?)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WallKind {
    Bloch,
    Transverse,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct StaticArgs {
    #[arg(long, value_enum)]
    wall: WallKind,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Args)]
struct SolveArgs {
    /// Previous solution (JSON) on the same grid to start Newton from.
    #[arg(long = "seed-profile", alias = "from-profile")]
    seed_profile: Option<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Args)]
struct ContinueArgs {
    /// Configuration of the starting point (also fixes grid, regime, solver).
    #[arg(long)]
    from: PathBuf,
    /// Configuration of the target point; only its parameters are used.
    #[arg(long)]
    to: PathBuf,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Operator {
    L,
    M,
    N,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long, value_enum, ignore_case = true)]
    operator: Operator,
    /// Transverse field for M and N.
    #[arg(long = "H3", default_value_t = 0.5)]
    h3: f64,
    /// Shift applied to L (the operator L + K2).
    #[arg(long = "K2", default_value_t = 0.0)]
    k2: f64,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 20.0)]
    half_width: f64,
    #[arg(long, default_value_t = 0.05)]
    spacing: f64,
    /// Write eigenvectors as CSV (`xi,v0,v1,...`).
    #[arg(long)]
    vectors: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    output_interval: Option<f64>,
    /// Initial profile CSV (default: the lattice static wall of the regime).
    #[arg(long)]
    initial: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(subcommand)]
    what: Option<VerifyWhat>,
    /// Run a single criterion (1-12).
    #[arg(long)]
    criterion: Option<u32>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    cfg: Overrides,
}

#[derive(Subcommand)]
enum VerifyWhat {
    /// Far-field equilibria and their torque residuals.
    Equilibria(Overrides),
}

/// Exit status: 0 success, 1 failed check or computation, 2 usage or configuration.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidParams(_)
                | Error::DegenerateRegime
                | Error::InvalidRegime(_)
                | Error::InvalidGrid(_)
                | Error::InvalidField { .. }
                | Error::Config(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|c| {
        let io = c.downcast_ref::<io::Error>().or(match c.downcast_ref::<Error>() {
            Some(Error::Io(e)) => Some(e),
            _ => None,
        });
        io.is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

fn sink(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json(path: &Option<PathBuf>, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Static(a) => static_cmd(a),
        Command::Equilibria(o) => equilibria_cmd(&o),
        Command::SolveTw(a) => solve_cmd(a),
        Command::Continue(a) => continue_cmd(a),
        Command::Spectrum(a) => spectrum_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn static_cmd(a: StaticArgs) -> anyhow::Result<u8> {
    let mut pairs = a.cfg.pairs()?;
    let regime = match a.wall {
        WallKind::Bloch => {
            pairs.insert("regime".into(), "walker".into());
            let k2 = pairs.get("K2").map(String::as_str).unwrap_or("1");
            if k2.parse::<f64>().map(|v| v <= 0.0).unwrap_or(false) {
                // the Bloch profile does not depend on K2
                pairs.insert("K2".into(), "1".into());
            }
            Regime::Walker { k2: 1.0 }
        }
        WallKind::Transverse => {
            pairs.insert("regime".into(), "transverse".into());
            pairs.entry("H3".into()).or_insert_with(|| "0.5".into());
            pairs.insert("K2".into(), "0".into());
            let c = RunConfig::from_map(&pairs)?;
            c.regime
        }
    };
    let cfg = RunConfig::from_map(&pairs)?;
    let grid = StaticWall::from(regime).fit_grid(&cfg.grid);
    let profile = static_profile(&regime, &grid)?;
    match a.format {
        Format::Csv => {
            let mut w = sink(&a.out)?;
            write_profile_csv(&mut w, &profile, &grid)?;
            w.flush()?;
        }
        Format::Json => {
            let cart = to_cartesian(&profile);
            write_json(
                &a.out,
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "wall": regime.name(),
                    "regime": regime,
                    "half_width": grid.half_width(),
                    "xi": grid.nodes(),
                    "psi": profile.psi,
                    "beta": profile.beta,
                    "m1": cart.component(0),
                    "m2": cart.component(1),
                    "m3": cart.component(2),
                }),
            )?;
        }
    }
    Ok(0)
}

fn equilibria_json(p: &Params) -> anyhow::Result<Value> {
    let eq = equilibria(p)?;
    let state = |s: &nanowire_tw::model::PolarPoint| {
        let m = s.to_unit();
        json!({"psi": s.psi, "beta": s.beta, "m": [m.x, m.y, m.z]})
    };
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "params": p,
        "plus": state(&eq.plus),
        "minus": state(&eq.minus),
        "torque_residual": eq.torque_residual(p),
        "min_hessian_eigenvalue": eq.min_hessian_eigenvalue(p),
    }))
}

fn equilibria_cmd(o: &Overrides) -> anyhow::Result<u8> {
    let cfg = o.load()?;
    write_json(&None, &equilibria_json(&cfg.params)?)?;
    Ok(0)
}

fn solve_cmd(a: SolveArgs) -> anyhow::Result<u8> {
    let cfg = a.cfg.load()?;
    let seed = match &a.seed_profile {
        Some(p) => Some(read_solution_json(BufReader::new(
            File::open(p).with_context(|| format!("opening seed {}", p.display()))?,
        ))?),
        None => None,
    };
    let sol = solve_tw(&cfg.params, &cfg.regime, &cfg.grid, &cfg.newton, seed.as_ref())?;
    let identity = velocity_identity(&sol)?;
    eprintln!(
        "V = {:.12e} (identity {:.12e}), residual {:.3e}, {} iterations",
        sol.velocity, identity, sol.residual_norm, sol.iterations
    );
    let mut w = sink(&a.out)?;
    write_solution_json(&mut w, &sol)?;
    writeln!(w)?;
    w.flush()?;
    Ok(0)
}

fn continue_cmd(a: ContinueArgs) -> anyhow::Result<u8> {
    let from = RunConfig::load(&a.from).with_context(|| format!("config {}", a.from.display()))?;
    let to = RunConfig::load(&a.to).with_context(|| format!("config {}", a.to.display()))?;
    if to.params.alpha != from.params.alpha {
        bail!(Error::Config(format!(
            "damping is fixed along a branch: alpha differs ({} vs {})",
            from.params.alpha, to.params.alpha
        )));
    }
    let branch = continue_branch(
        &from.params,
        &to.params,
        a.steps,
        &from.regime,
        &from.grid,
        &from.newton,
    )?;
    fs::create_dir_all(&a.out)?;
    let mut csv = BufWriter::new(File::create(a.out.join("branch.csv"))?);
    writeln!(csv, "step,H1,H2,H3,K2,V,residual")?;
    for (k, s) in branch.solutions.iter().enumerate() {
        let p = &s.params;
        writeln!(
            csv,
            "{k},{},{},{},{},{},{}",
            p.h1, p.h2, p.h3, p.k2, s.velocity, s.residual_norm
        )?;
        let f = File::create(a.out.join(format!("step_{k:04}.json")))?;
        write_solution_json(BufWriter::new(f), s)?;
    }
    csv.flush()?;
    let summary = json!({"schema_version": SCHEMA_VERSION, "report": branch.report});
    write_json(&Some(a.out.join("report.json")), &summary)?;
    let r = &branch.report;
    if r.completed {
        eprintln!("branch completed in {} steps ({} bisections)", r.steps_taken, r.bisections);
    } else {
        eprintln!(
            "branch stopped at fraction {:.6} of the path, last converged {:?}: {}",
            r.reached,
            r.last_good.lambda(),
            r.failure.as_deref().unwrap_or("")
        );
    }
    Ok(0)
}

fn spectrum_cmd(a: SpectrumArgs) -> anyhow::Result<u8> {
    if a.k == 0 {
        bail!(Error::Config("--k must be at least 1".into()));
    }
    let grid = Grid::with_spacing(a.half_width, a.spacing)?;
    let (name, op) = match a.operator {
        Operator::L => ("L", potential_l(&grid).shifted(a.k2)),
        Operator::M => ("M", potential_m(a.h3, &grid)?),
        Operator::N => ("N", potential_n(a.h3, &grid)?),
    };
    if a.k > op.dim() {
        bail!(Error::Config(format!("--k = {} exceeds the {} interior nodes", a.k, op.dim())));
    }
    let pairs = lowest_eigenpairs(&op, a.k);
    if let Some(path) = &a.vectors {
        let mut w = BufWriter::new(File::create(path)?);
        let header: Vec<String> = (0..pairs.len()).map(|j| format!("v{j}")).collect();
        writeln!(w, "xi,{}", header.join(","))?;
        for (i, x) in op.interior_nodes().iter().enumerate() {
            let row: Vec<String> = pairs.iter().map(|p| p.vector[i].to_string()).collect();
            writeln!(w, "{x},{}", row.join(","))?;
        }
        w.flush()?;
    }
    let values: Vec<f64> = pairs.iter().map(|p| p.value).collect();
    write_json(
        &None,
        &json!({
            "schema_version": SCHEMA_VERSION,
            "operator": name,
            "H3": a.h3,
            "K2": a.k2,
            "half_width": op.grid.half_width(),
            "n_nodes": op.grid.n_nodes(),
            "eigenvalues": values,
        }),
    )?;
    Ok(0)
}

fn simulate_cmd(a: SimulateArgs) -> anyhow::Result<u8> {
    let mut pairs = a.cfg.pairs()?;
    if let Some(t) = a.t_final {
        pairs.insert("T".into(), t.to_string());
    }
    if let Some(dt) = a.dt {
        pairs.insert("dt".into(), dt.to_string());
    }
    if let Some(o) = a.output_interval {
        pairs.insert("output_interval".into(), o.to_string());
    }
    let cfg = RunConfig::from_map(&pairs)?;
    let (grid, m0) = match &a.initial {
        Some(path) => {
            let (grid, p) = read_profile_csv(BufReader::new(
                File::open(path).with_context(|| format!("opening {}", path.display()))?,
            ))?;
            (grid, to_cartesian(&p))
        }
        None => {
            let grid = StaticWall::from(cfg.regime).fit_grid(&cfg.grid);
            let base = cfg.regime.base_params(cfg.params.alpha);
            let wall = to_cartesian(&static_profile(&cfg.regime, &grid)?);
            (grid, discrete_static_wall(&wall, &base, &grid)?)
        }
    };
    let dt = match cfg.dt {
        Some(dt) if dt > 0.25 * grid.spacing().powi(2) => {
            bail!(Error::Config(format!(
                "dt = {dt} exceeds 0.25 h^2 = {} on the simulation grid",
                0.25 * grid.spacing().powi(2)
            )))
        }
        other => other,
    };
    let opts = IntegrateOptions {
        dt,
        output_interval: cfg.output_interval,
        keep_profiles: true,
        monitor_energy: false,
    };
    let traj = integrate_with(&m0, &cfg.params, &grid, cfg.t_final, &opts)?;
    fs::create_dir_all(&a.out)?;
    let mut diag = BufWriter::new(File::create(a.out.join("diagnostics.csv"))?);
    writeln!(diag, "t,x_w,energy,max_unit_violation")?;
    for k in 0..traj.times.len() {
        let x = traj.positions[k].map_or("nan".to_string(), |x| x.to_string());
        writeln!(
            diag,
            "{},{x},{},{}",
            traj.times[k], traj.energy[k], traj.max_unit_violation[k]
        )?;
        let f = File::create(a.out.join(format!("snapshot_{k:05}.csv")))?;
        write_cartesian_csv(BufWriter::new(f), &traj.profiles[k], &grid)?;
    }
    diag.flush()?;
    let velocity = track_wall(&traj).ok().map(|t| t.velocity);
    write_json(
        &Some(a.out.join("summary.json")),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "params": cfg.params,
            "half_width": grid.half_width(),
            "n_nodes": grid.n_nodes(),
            "dt": traj.dt,
            "steps": traj.steps,
            "tracked_velocity": velocity,
            "max_unit_error": traj.max_unit_error,
        }),
    )?;
    match velocity {
        Some(v) => eprintln!("{} steps, tracked wall velocity {v:.6e}", traj.steps),
        None => eprintln!("{} steps, no single wall to track", traj.steps),
    }
    Ok(0)
}

fn print_summary(report: &Report) {
    for c in &report.criteria {
        let status = if c.pass { "PASS" } else { "FAIL" };
        let detail = c.tightest().map(|t| t.describe()).unwrap_or_default();
        eprintln!("{status} criterion {:>2} ({}): {detail}", c.id, c.name);
    }
}

fn verify_cmd(a: VerifyArgs) -> anyhow::Result<u8> {
    if let Some(VerifyWhat::Equilibria(o)) = &a.what {
        let cfg = o.load()?;
        let v = equilibria_json(&cfg.params)?;
        let ok = v["torque_residual"].as_f64().unwrap_or(f64::INFINITY) <= 1e-12
            && v["min_hessian_eigenvalue"].as_f64().unwrap_or(f64::NEG_INFINITY) >= -1e-9;
        write_json(&a.out, &v)?;
        return Ok(if ok { 0 } else { 1 });
    }
    let cfg = VerifyConfig::from(&a.cfg.load()?);
    let report = match a.criterion {
        Some(id) => {
            let c = run_one(id, &cfg)
                .ok_or_else(|| anyhow!(Error::Config(format!("criterion must be 1-12 (got {id})"))))?;
            Report {
                schema_version: SCHEMA_VERSION,
                pass: c.pass,
                criteria: vec![c],
            }
        }
        None => run_all(&cfg),
    };
    print_summary(&report);
    write_json(&a.out, &report)?;
    Ok(if report.pass { 0 } else { 1 })
}
