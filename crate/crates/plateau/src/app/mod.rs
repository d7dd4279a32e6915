//! Command-line driver: configuration, sweep orchestration, and reports.
//!
//! A *sweep* runs the optimizer over the cartesian product of the
//! configured β values and orientation angles (φ, ψ), reusing one mesh and
//! one factorized u-step system for all points (the step sizes do not
//! change within a sweep; rotating the field direction `H` instead of the
//! particle keeps the mesh and matrices valid across orientations). Each
//! point appends a row to `results.csv`, optionally writes a `.vtk`
//! snapshot of the final fields, and logs progress to `run.log`.

mod vtk;

pub use vtk::write_vtk;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use thiserror::Error;

use crate::admm::{admm_run_with, build_operators, AdmmError, AdmmParams, AdmmState};
use crate::mesh::{
    build_box_mesh, classify_cells, read_msh, MeshError, MshError, Shape, ShapeError,
};

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {what}")]
    Config { what: String },
    /// `--help`/`--version` requested; `text` is what clap wants printed.
    #[error("{text}")]
    HelpRequested { text: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    MshFile(#[from] MshError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Solver(#[from] AdmmError),
}

fn config_err(what: impl Into<String>) -> AppError {
    AppError::Config { what: what.into() }
}

/// Where the mesh comes from: the internal generator or an MSH file.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Internal { subdivisions: [usize; 3], box_halfwidth: f64 },
    Msh(PathBuf),
}

/// A fully resolved run configuration; every field has a concrete value.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Base particle shape; orientations are applied per sweep point.
    pub shape: Shape,
    pub betas: Vec<f64>,
    pub phis: Vec<f64>,
    pub psis: Vec<f64>,
    /// Solver parameters; the `beta` field is overwritten per sweep point.
    pub admm: AdmmParams,
    pub mesh_source: MeshSource,
    pub out_dir: PathBuf,
    /// Progress cadence in iterations; 0 disables progress lines.
    pub log_every: usize,
    /// Write one `.vtk` file per sweep point.
    pub vtk: bool,
}

#[derive(Parser, Debug, Default)]
#[command(
    name = "plateau",
    about = "Minimize line-and-surface energies around an immersed particle",
    disable_help_flag = false
)]
struct Cli {
    /// Flat key=value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Particle shape: sphere, peanut, donut, croissant, or custom.
    #[arg(long)]
    shape: Option<String>,
    /// Comma-separated list of line-energy weights.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Field rotation about the x1-axis (radians).
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
    /// Field rotation about the x2-axis (radians).
    #[arg(long, allow_negative_numbers = true)]
    psi: Option<f64>,
    /// Iteration budget per sweep point.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long = "gamma-m")]
    gamma_m: Option<f64>,
    #[arg(long = "gamma-c")]
    gamma_c: Option<f64>,
    /// Over-relaxation factor in [1, 2).
    #[arg(long)]
    alpha: Option<f64>,
    /// Internal mesh subdivisions as NX,NY,NZ.
    #[arg(long)]
    subdiv: Option<String>,
    /// Internal mesh box half-width.
    #[arg(long = "box")]
    box_halfwidth: Option<f64>,
    /// Import a Gmsh MSH (v2.2/v4.1 ASCII) mesh instead.
    #[arg(long)]
    msh: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Progress-log cadence in iterations (0 = off).
    #[arg(long = "log-every")]
    log_every: Option<usize>,
    /// Skip writing VTK snapshots.
    #[arg(long = "no-vtk")]
    no_vtk: bool,
}

/// The keys accepted in a configuration file. CLI-only `config` is not a
/// file key; shape parameters and expert solver knobs are file-only.
const FILE_KEYS: &[&str] = &[
    "shape", "beta", "phi", "psi", "iters", "gamma_m", "gamma_c", "alpha", "subdiv", "box",
    "msh", "out", "log_every", "no_vtk", "radius", "major", "minor", "arm", "grid", "w_e",
    "eps", "d_gamma", "early_stop",
];

/// Parses CLI arguments (exclusive of the binary name) plus the optional
/// `--config` file into a fully populated [`RunConfig`]. Flags take
/// precedence over file entries; omitted settings get documented defaults
/// (sphere of radius 1, β = [1.0], 16³ internal mesh on a box of twice the
/// circumradius, 2000 iterations, γ_M = γ_C = 1, α = 1.6).
pub fn parse_config(args: &[String]) -> Result<RunConfig, AppError> {
    let argv = std::iter::once("plateau".to_string()).chain(args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                AppError::HelpRequested { text: e.to_string() }
            }
            _ => config_err(e.to_string()),
        }
    })?;

    let mut file: HashMap<String, String> = HashMap::new();
    if let Some(path) = &cli.config {
        file = parse_key_value_file(path)?;
    }

    // Helper: flag value, else file value parsed, else default.
    fn file_get<T: std::str::FromStr>(
        file: &HashMap<String, String>,
        key: &str,
    ) -> Result<Option<T>, AppError> {
        match file.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| config_err(format!("invalid value for key \"{key}\": {raw:?}"))),
        }
    }

    let shape = build_shape(&cli, &file)?;

    let betas = match (&cli.beta, file.get("beta")) {
        (Some(list), _) => parse_f64_list(list, "beta")?,
        (None, Some(list)) => parse_f64_list(list, "beta")?,
        (None, None) => vec![1.0],
    };
    for &b in &betas {
        if !(b >= 0.0 && b.is_finite()) {
            return Err(config_err(format!("beta values must be nonnegative, got {b}")));
        }
    }
    let phis = match (cli.phi, file.get("phi")) {
        (Some(v), _) => vec![v],
        (None, Some(list)) => parse_f64_list(list, "phi")?,
        (None, None) => vec![0.0],
    };
    let psis = match (cli.psi, file.get("psi")) {
        (Some(v), _) => vec![v],
        (None, Some(list)) => parse_f64_list(list, "psi")?,
        (None, None) => vec![0.0],
    };

    let mut admm = AdmmParams::new(1.0);
    admm.iterations = cli.iters.or(file_get(&file, "iters")?).unwrap_or(2000);
    admm.gamma_m = cli.gamma_m.or(file_get(&file, "gamma_m")?).unwrap_or(1.0);
    admm.gamma_c = cli.gamma_c.or(file_get(&file, "gamma_c")?).unwrap_or(1.0);
    admm.alpha = cli.alpha.or(file_get(&file, "alpha")?).unwrap_or(1.6);
    if let Some(w) = file_get(&file, "w_e")? {
        admm.w_e = w;
    }
    if let Some(e) = file_get(&file, "eps")? {
        admm.eps = e;
    }
    admm.d_gamma = file_get(&file, "d_gamma")?;
    admm.early_stop = file_get(&file, "early_stop")?;
    admm.validate().map_err(|e| config_err(e.to_string()))?;

    // Mesh source: internal generator unless an MSH file is named; naming
    // both is ambiguous.
    let subdiv_given = cli.subdiv.is_some() || file.contains_key("subdiv");
    let box_given = cli.box_halfwidth.is_some() || file.contains_key("box");
    let msh: Option<PathBuf> =
        cli.msh.clone().or(file.get("msh").map(PathBuf::from));
    let mesh_source = if let Some(msh_path) = msh {
        if subdiv_given || box_given {
            return Err(config_err(
                "exactly one mesh source: given an msh file together with subdiv/box",
            ));
        }
        MeshSource::Msh(msh_path)
    } else {
        let subdivisions = match cli.subdiv.as_deref().or(file.get("subdiv").map(|s| s.as_str()))
        {
            Some(raw) => parse_subdiv(raw)?,
            None => [16, 16, 16],
        };
        let box_halfwidth = cli
            .box_halfwidth
            .or(file_get(&file, "box")?)
            .unwrap_or_else(|| 2.0 * shape.circumradius());
        if !box_halfwidth.is_finite() || box_halfwidth <= 0.0 {
            return Err(config_err(format!(
                "box half-width must be positive, got {box_halfwidth}"
            )));
        }
        MeshSource::Internal { subdivisions, box_halfwidth }
    };

    let out_dir = cli.out.clone().or(file.get("out").map(PathBuf::from)).unwrap_or_else(|| {
        PathBuf::from("./out")
    });
    let log_every = cli.log_every.or(file_get(&file, "log_every")?).unwrap_or(100);
    let vtk = if cli.no_vtk {
        false
    } else {
        !file_get::<bool>(&file, "no_vtk")?.unwrap_or(false)
    };

    Ok(RunConfig {
        shape,
        betas,
        phis,
        psis,
        admm,
        mesh_source,
        out_dir,
        log_every,
        vtk,
    })
}

fn parse_key_value_file(path: &Path) -> Result<HashMap<String, String>, AppError> {
    let text = fs::read_to_string(path)?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            config_err(format!(
                "{}:{}: expected key=value, got {:?}",
                path.display(),
                lineno + 1,
                line
            ))
        })?;
        let key = key.trim().replace('-', "_");
        let value = value.trim().to_string();
        if !FILE_KEYS.contains(&key.as_str()) {
            return Err(config_err(format!(
                "{}:{}: unknown key \"{}\"",
                path.display(),
                lineno + 1,
                key
            )));
        }
        map.insert(key, value);
    }
    Ok(map)
}

fn parse_f64_list(raw: &str, key: &str) -> Result<Vec<f64>, AppError> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| config_err(format!("invalid value in \"{key}\" list: {tok:?}")))
        })
        .collect()
}

fn parse_subdiv(raw: &str) -> Result<[usize; 3], AppError> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(config_err(format!("subdiv must be NX,NY,NZ, got {raw:?}")));
    }
    let mut out = [0usize; 3];
    for (k, tok) in parts.iter().enumerate() {
        out[k] = tok
            .parse::<usize>()
            .map_err(|_| config_err(format!("invalid subdiv component {tok:?}")))?;
        if out[k] == 0 {
            return Err(config_err("subdiv components must be at least 1"));
        }
    }
    Ok(out)
}

fn build_shape(cli: &Cli, file: &HashMap<String, String>) -> Result<Shape, AppError> {
    let name = cli
        .shape
        .clone()
        .or_else(|| file.get("shape").cloned())
        .unwrap_or_else(|| "sphere".to_string());
    let get_f = |key: &str, default: f64| -> Result<f64, AppError> {
        match file.get(key) {
            None => Ok(default),
            Some(raw) => raw.parse::<f64>().map_err(|_| {
                config_err(format!("invalid value for key \"{key}\": {raw:?}"))
            }),
        }
    };
    match name.as_str() {
        "sphere" => {
            let radius = get_f("radius", 1.0)?;
            if !radius.is_finite() || radius <= 0.0 {
                return Err(config_err(format!("radius must be positive, got {radius}")));
            }
            Ok(Shape::sphere(radius))
        }
        "peanut" => Ok(Shape::peanut()),
        "donut" => Ok(Shape::donut(get_f("major", 0.7)?, get_f("minor", 0.4)?)),
        "croissant" => Ok(Shape::croissant(
            get_f("major", 0.7)?,
            get_f("minor", 0.4)?,
            get_f("arm", 0.5)?,
        )),
        "custom" => {
            let path = file
                .get("grid")
                .ok_or_else(|| config_err("shape \"custom\" needs the \"grid\" key"))?;
            Ok(Shape::custom_from_file(path)?)
        }
        other => Err(config_err(format!(
            "unknown shape \"{other}\" (expected sphere, peanut, donut, croissant, or custom)"
        ))),
    }
}

/// One row of `results.csv`.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub beta: f64,
    pub phi: f64,
    pub psi: f64,
    pub energy: f64,
    pub c_m: f64,
    pub energy_plus_cm: f64,
    pub iters: usize,
    pub r_p: f64,
    pub r_q: f64,
    pub seconds: f64,
}

pub const CSV_HEADER: &str = "beta,phi,psi,energy,c_m,energy_plus_cm,iters,r_p,r_q,seconds";

/// Formats the records as `results.csv` content. All physics columns are
/// deterministic for a given configuration and build; `seconds` is wall
/// time.
pub fn format_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{},{:.9e},{:.9e},{:.3}",
            r.beta,
            r.phi,
            r.psi,
            r.energy,
            r.c_m,
            r.energy_plus_cm,
            r.iters,
            r.r_p,
            r.r_q,
            r.seconds
        );
    }
    out
}

/// Writes one progress line (`iteration, energy, r_p, r_q`) to `sink` and
/// standard output whenever the state's iteration hits the cadence;
/// `every_n = 0` disables logging entirely.
pub fn log_progress(
    state: &AdmmState,
    every_n: usize,
    sink: &mut dyn std::io::Write,
) -> std::io::Result<()> {
    if every_n == 0 || !state.iteration.is_multiple_of(every_n) {
        return Ok(());
    }
    let line = format!(
        "iter {:6}  E_h {: >13.6e}  r_p {:.3e}  r_q {:.3e}",
        state.iteration,
        state.energy(),
        state.r_p(),
        state.r_q()
    );
    println!("{line}");
    writeln!(sink, "{line}")
}

/// Executes every sweep point, writes `results.csv`, per-point `.vtk`
/// files, and `run.log` under the output directory, and returns the
/// records. A diverged point is recorded as a NaN row and the sweep
/// continues.
pub fn run_sweep(config: &RunConfig) -> Result<Vec<SweepRecord>, AppError> {
    fs::create_dir_all(&config.out_dir)?;
    let mut log = fs::File::create(config.out_dir.join("run.log"))?;

    let mesh = match &config.mesh_source {
        MeshSource::Internal { subdivisions, box_halfwidth } => {
            build_box_mesh(*subdivisions, [*box_halfwidth; 3])?
        }
        MeshSource::Msh(path) => read_msh(path)?,
    };
    writeln!(
        log,
        "mesh: {} nodes, {} edges, {} cells (h = {:.4})",
        mesh.num_nodes(),
        mesh.num_edges(),
        mesh.num_cells(),
        mesh.characteristic_length()
    )?;

    // One factorization serves every sweep point: the u-step matrix depends
    // only on the mesh and the step sizes.
    let ops = build_operators(&mesh, &config.admm)?;
    writeln!(
        log,
        "factorized 1 linear system ({} dofs) for {} sweep point(s)",
        mesh.num_edges(),
        config.betas.len() * config.phis.len() * config.psis.len()
    )?;

    let mut records = Vec::new();
    for &phi in &config.phis {
        for &psi in &config.psis {
            let shape = config.shape.clone().with_orientation(phi, psi);
            for &beta in &config.betas {
                let mut params = config.admm.clone();
                params.beta = beta;
                let labels = classify_cells(&mesh, &shape, &params.classify_params());
                writeln!(log, "point beta={beta} phi={phi} psi={psi}: start")?;
                let start = Instant::now();
                let every = config.log_every;
                let outcome = admm_run_with(&mesh, &labels, &shape, &params, &ops, |state| {
                    let _ = log_progress(state, every, &mut log);
                });
                let seconds = start.elapsed().as_secs_f64();
                match outcome {
                    Ok(result) => {
                        let record = SweepRecord {
                            beta,
                            phi,
                            psi,
                            energy: result.energy,
                            c_m: result.c_m,
                            energy_plus_cm: result.energy + result.c_m,
                            iters: result.iterations,
                            r_p: result.r_p,
                            r_q: result.r_q,
                            seconds,
                        };
                        writeln!(
                            log,
                            "point beta={beta} phi={phi} psi={psi}: done, E_h = {:.6e}, \
                             E_h + C_M = {:.6e} ({:.1} s)",
                            record.energy, record.energy_plus_cm, seconds
                        )?;
                        if config.vtk {
                            let path = config.out_dir.join(point_filename(beta, phi, psi));
                            write_vtk(&mesh, &labels, &result, &path)?;
                        }
                        records.push(record);
                    }
                    Err(AdmmError::Diverged { iteration }) => {
                        writeln!(
                            log,
                            "point beta={beta} phi={phi} psi={psi}: DIVERGED at iteration \
                             {iteration}; recording NaN"
                        )?;
                        records.push(SweepRecord {
                            beta,
                            phi,
                            psi,
                            energy: f64::NAN,
                            c_m: f64::NAN,
                            energy_plus_cm: f64::NAN,
                            iters: iteration,
                            r_p: f64::NAN,
                            r_q: f64::NAN,
                            seconds,
                        });
                    }
                    Err(other) => return Err(other.into()),
                }
            }
        }
    }

    fs::write(config.out_dir.join("results.csv"), format_csv(&records))?;
    Ok(records)
}

fn point_filename(beta: f64, phi: f64, psi: f64) -> String {
    format!("point_beta{beta:.4}_phi{phi:.4}_psi{psi:.4}.vtk")
}

/// Entry point used by the `plateau` binary; returns the process exit code.
pub fn cli_main(args: &[String]) -> i32 {
    match parse_config(args) {
        Ok(config) => match run_sweep(&config) {
            Ok(records) => {
                println!(
                    "wrote {} to {}",
                    if records.is_empty() { "an empty results.csv".to_string() } else {
                        format!("{} result row(s)", records.len())
                    },
                    config.out_dir.display()
                );
                0
            }
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        },
        Err(AppError::HelpRequested { text }) => {
            println!("{text}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
