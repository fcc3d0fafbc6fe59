//! Command-line driver for `henon-lab` experiments.
//!
//! Every command reads an optional JSON config, overlays the flags given on
//! the command line, writes CSV or PGM artifacts under the `--out` prefix and
//! prints a short summary. Exit codes: 0 on success, 1 when a verification
//! command finds a violated invariant, 2 on usage or config errors.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use henon_lab::dynamics::{
    build_collar, build_cone_system, verify_cone_doubling, verify_cone_transitions, verify_u_escape, CollarParams,
    ConeSearch, ConeSystem, VerificationReport,
};
use henon_lab::group::drift_estimate;
use henon_lab::henon::{filtration_radius, GroupAction, MapSpec, PresetSpec, DEFAULT_GROWTH};
use henon_lab::measure::{
    classify_filled_julia, disjointness_report, disjointness_report_rotated, empirical_measure, ergodic_average,
    mass_escape_radii, simulate_chain_with_guard, stationarity_defect, word_average_mass, write_series_csv, GridBox,
    JuliaVerdict, PointSample, TestFunction,
};
use henon_lab::{rng, Complex64, Generator, GroupPreset, HenonMap, HenonPair, Point2, WalkMeasure};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub mod params;
pub mod render;

use params::*;
use render::{render_escape_slice, write_pgm, RenderMode, Slice};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Core(#[from] henon_lab::Error),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "henon-lab", version, about = "Experiments with groups generated by complex Hénon maps")]
pub struct Cli {
    /// JSON config file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// JSON file with {"coeffs", "delta", "theta"}; overrides the config's preset
    #[arg(long, global = true)]
    pub preset: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path prefix; files are <prefix>.csv, <prefix>.pgm, <prefix>_<extra>.csv
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deterministic orbit of a letter sequence
    Orbit(OrbitFlags),
    /// Drift of the reduced word length along random walks
    WalkDrift(DriftFlags),
    /// Sampled cone doubling and transition checks
    ConesVerify(ConesFlags),
    /// Growth of reduced words on the escaping collar
    CollarVerify(CollarVerifyFlags),
    /// One random chain
    Chain(ChainFlags),
    /// Fraction of chains remaining in balls
    MassEscape(MassEscapeFlags),
    /// Filled Julia set verdicts for h1
    FilledJulia(FilledJuliaFlags),
    /// Sampled comparison of two filled Julia sets
    Disjointness(DisjointnessFlags),
    /// Escape-time raster of a slice
    Render(RenderFlags),
    /// Collar mass against its average over reduced words
    #[command(name = "eq5-check")]
    WordAverageCheck(WordAverageFlags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Orbit(_) => "orbit",
            Command::WalkDrift(_) => "walk-drift",
            Command::ConesVerify(_) => "cones-verify",
            Command::CollarVerify(_) => "collar-verify",
            Command::Chain(_) => "chain",
            Command::MassEscape(_) => "mass-escape",
            Command::FilledJulia(_) => "filled-julia",
            Command::Disjointness(_) => "disjointness",
            Command::Render(_) => "render",
            Command::WordAverageCheck(_) => "eq5-check",
        }
    }
}

/// Config file layout. `params` holds the keys of the chosen command.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub preset: Option<PresetSpec>,
    #[serde(default)]
    pub second_map: Option<MapSpec>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<String>,
    #[serde(default)]
    pub params: Map<String, Value>,
}

/// What a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    /// False when a verification found a violated invariant.
    pub ok: bool,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            if outcome.ok {
                0
            } else {
                eprintln!("henon-lab: invariant violation detected");
                1
            }
        }
        Err(e) => {
            eprintln!("henon-lab: {e}");
            2
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Config `params` overlaid with the flags that were given.
fn merge<P: DeserializeOwned>(config: &Map<String, Value>, flags: &impl Serialize) -> Result<P, CliError> {
    let mut merged = config.clone();
    if let Value::Object(given) = serde_json::to_value(flags).map_err(|e| CliError::Usage(e.to_string()))? {
        merged.extend(given);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Usage(format!("invalid parameters: {e}")))
}

/// Resolved inputs shared by all commands.
struct Context {
    command: &'static str,
    preset: PresetSpec,
    group: GroupPreset,
    second_map: Option<MapSpec>,
    seed: Option<u64>,
    out: String,
}

#[derive(Serialize)]
struct Header<'a, P> {
    command: &'a str,
    preset: &'a PresetSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    second_map: Option<&'a MapSpec>,
    seed: Option<u64>,
    params: &'a P,
}

impl Context {
    fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage(format!("{} is stochastic and needs --seed", self.command)))
    }

    /// One-line JSON of everything that determines the artifacts.
    fn header<P: Serialize>(&self, params: &P) -> String {
        let h = Header {
            command: self.command,
            preset: &self.preset,
            second_map: self.second_map.as_ref(),
            seed: self.seed,
            params,
        };
        serde_json::to_string(&h).expect("header serializes")
    }

    fn path(&self, suffix: &str, ext: &str) -> PathBuf {
        PathBuf::from(format!("{}{suffix}.{ext}", self.out))
    }

    fn write_csv<P, F>(&self, params: &P, suffix: &str, body: F) -> Result<PathBuf, CliError>
    where
        P: Serialize,
        F: FnOnce(&mut Vec<u8>) -> io::Result<()>,
    {
        let path = self.path(suffix, "csv");
        let mut buf = Vec::new();
        writeln!(buf, "# {}", self.header(params)).and_then(|_| body(&mut buf)).map_err(|e| CliError::io(&path, e))?;
        write_file(&path, &buf)?;
        Ok(path)
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let config: ExperimentConfig = match &cli.config {
        Some(path) => read_json(path)?,
        None => ExperimentConfig::default(),
    };
    let name = cli.command.name();
    if let Some(c) = &config.command {
        if c != name {
            return Err(CliError::Usage(format!("config is for {c:?}, not {name:?}")));
        }
    }
    let preset = match &cli.preset {
        Some(path) => read_json(path)?,
        None => config.preset.clone().unwrap_or_else(|| PresetSpec::from_preset(&GroupPreset::fixture())),
    };
    let group = preset.build()?;
    let ctx = Context {
        command: name,
        group,
        preset,
        second_map: config.second_map.clone(),
        seed: cli.seed.or(config.seed),
        out: cli.out.clone().or(config.out.clone()).unwrap_or_else(|| name.to_string()),
    };
    let p = &config.params;
    match &cli.command {
        Command::Orbit(f) => orbit_cmd(&ctx, merge(p, f)?),
        Command::WalkDrift(f) => drift_cmd(&ctx, merge(p, f)?),
        Command::ConesVerify(f) => cones_cmd(&ctx, merge(p, f)?),
        Command::CollarVerify(f) => collar_cmd(&ctx, merge(p, f)?),
        Command::Chain(f) => chain_cmd(&ctx, merge(p, f)?),
        Command::MassEscape(f) => mass_escape_cmd(&ctx, merge(p, f)?),
        Command::FilledJulia(f) => filled_julia_cmd(&ctx, merge(p, f)?),
        Command::Disjointness(f) => disjointness_cmd(&ctx, merge(p, f)?),
        Command::Render(f) => render_cmd(&ctx, merge(p, f)?),
        Command::WordAverageCheck(f) => word_average_cmd(&ctx, merge(p, f)?),
    }
}

fn reals4(v: &[f64], what: &str) -> Result<[f64; 4], CliError> {
    <[f64; 4]>::try_from(v).map_err(|_| CliError::Usage(format!("{what} needs 4 reals, got {}", v.len())))
}

fn point(v: &[f64], what: &str) -> Result<Point2, CliError> {
    Ok(Point2::from_reals(reals4(v, what)?))
}

fn measure(uniform: bool, weights: &[f64]) -> Result<WalkMeasure, CliError> {
    if uniform {
        return Ok(WalkMeasure::uniform());
    }
    let w = <[f64; 4]>::try_from(weights)
        .map_err(|_| CliError::Usage(format!("weights need 4 entries, got {}", weights.len())))?;
    Ok(WalkMeasure::new(w)?)
}

fn letter(s: &str) -> Result<Generator, CliError> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(Generator::from_token(c)?),
        _ => Err(CliError::Usage(format!("expected a single letter, got {s:?}"))),
    }
}

fn fmt_point(p: &Point2) -> String {
    format!("{},{},{},{}", p.x.re, p.x.im, p.y.re, p.y.im)
}

fn orbit_cmd(ctx: &Context, p: OrbitParams) -> Result<Outcome, CliError> {
    let start = point(&p.start, "start")?;
    let letters: Vec<Generator> = if p.letters.is_empty() {
        vec![letter(&p.letter)?; p.steps]
    } else {
        p.letters.chars().map(Generator::from_token).collect::<Result<_, _>>()?
    };
    let traj = henon_lab::dynamics::orbit(&ctx.group, letters.iter().copied(), start, p.max_norm);
    let path = ctx.write_csv(&p, "", |w| {
        writeln!(w, "step,letter,x_re,x_im,y_re,y_im,norm")?;
        for (n, z) in traj.points.iter().enumerate() {
            let l = if n == 0 { String::new() } else { letters[n - 1].token().to_string() };
            writeln!(w, "{n},{l},{},{}", fmt_point(z), z.norm())?;
        }
        Ok(())
    })?;
    let status = match traj.escaped_at {
        Some(n) => format!("escaped at step {n} (certified: {})", traj.escape_certified),
        None => format!("no escape in {} steps", traj.points.len() - 1),
    };
    Ok(Outcome {
        ok: true,
        files: vec![path],
        summary: vec![status],
    })
}

fn drift_cmd(ctx: &Context, p: DriftParams) -> Result<Outcome, CliError> {
    let seed = ctx.seed()?;
    let nu = measure(p.uniform, &p.weights)?;
    let est = drift_estimate(&nu, p.n, p.trials, seed)?;
    let w = nu.weights();
    let path = ctx.write_csv(&p, "", |out| {
        writeln!(out, "n,trials,w_a,w_b,w_A,w_B,mean,stderr")?;
        writeln!(out, "{},{},{},{},{},{},{},{}", p.n, p.trials, w[0], w[1], w[2], w[3], est.mean, est.stderr)
    })?;
    Ok(Outcome {
        ok: true,
        files: vec![path],
        summary: vec![format!("drift {} ± {}", est.mean, est.stderr)],
    })
}

/// Explicit cones when both parameters are given, otherwise the default search.
fn cone_system(ctx: &Context, aperture: Option<f64>, inner_radius: Option<f64>, samples: usize, seed: u64) -> Result<Result<ConeSystem, Vec<String>>, CliError> {
    match (aperture, inner_radius) {
        (Some(a), Some(r)) => Ok(Ok(ConeSystem::new(&ctx.group, a, r)?)),
        (None, None) => {
            let search = ConeSearch {
                samples,
                seed,
                ..ConeSearch::default()
            };
            Ok(build_cone_system(&ctx.group, &search).map_err(|e| e.log))
        }
        _ => Err(CliError::Usage("give both aperture and inner_radius, or neither".into())),
    }
}

fn failed(log: Vec<String>, what: &str) -> Outcome {
    let mut summary = vec![format!("no {what} found")];
    summary.extend(log);
    Outcome {
        ok: false,
        files: vec![],
        summary,
    }
}

fn report_summary(r: &VerificationReport) -> String {
    format!(
        "{} rows, {} failures, min ratio {}{}",
        r.rows.len(),
        r.failures(),
        r.min_ratio(),
        if r.no_evidence { " (no samples)" } else { "" }
    )
}

fn cones_cmd(ctx: &Context, p: ConesParams) -> Result<Outcome, CliError> {
    let seed = ctx.seed()?;
    let cs = match cone_system(ctx, p.aperture, p.inner_radius, p.samples, seed)? {
        Ok(cs) => cs,
        Err(log) => return Ok(failed(log, "cone system")),
    };
    let doubling = verify_cone_doubling(&ctx.group, &cs, p.samples, seed);
    let transitions = verify_cone_transitions(&ctx.group, &cs, p.samples, seed);
    let mut summary = vec![
        format!("aperture {}, inner radius {}", cs.aperture(), cs.inner_radius()),
        format!("doubling: {}", report_summary(&doubling)),
        format!("transitions: {}", report_summary(&transitions)),
    ];
    let report = doubling.merge(transitions);
    if let Some(w) = report.first_witness() {
        summary.push(format!("first failing point {w}"));
    }
    let path = ctx.write_csv(&p, "", |w| report.write_csv(w))?;
    Ok(Outcome {
        ok: report.passed(),
        files: vec![path],
        summary,
    })
}

/// The explicit collar, or the searched one inside a searched cone system.
fn collar(ctx: &Context, beta: Option<f64>, r_u: Option<f64>, seed: u64) -> Result<Result<CollarParams, Vec<String>>, CliError> {
    let beta = beta.unwrap_or(0.25 * ctx.group.min_separation());
    if let Some(r) = r_u {
        return Ok(Ok(CollarParams::new(&ctx.group, r, beta)?));
    }
    let cs = match cone_system(ctx, None, None, ConeSearch::default().samples, seed)? {
        Ok(cs) => cs,
        Err(log) => return Ok(Err(log)),
    };
    Ok(build_collar(&ctx.group, &cs, beta, 1000, seed, 1e8).map_err(|e| e.log))
}

fn collar_cmd(ctx: &Context, p: CollarVerifyParams) -> Result<Outcome, CliError> {
    let seed = ctx.seed()?;
    let cs = match cone_system(ctx, p.aperture, p.inner_radius, ConeSearch::default().samples, seed)? {
        Ok(cs) => cs,
        Err(log) => return Ok(failed(log, "cone system")),
    };
    let beta = p.beta.unwrap_or(0.25 * ctx.group.min_separation());
    let cp = match p.r_u {
        Some(r) => CollarParams::new(&ctx.group, r, beta)?,
        None => match build_collar(&ctx.group, &cs, beta, 1000, seed, 1e8) {
            Ok(cp) => cp,
            Err(e) => return Ok(failed(e.log, "collar")),
        },
    };
    let report = verify_u_escape(&ctx.group, &cp, &cs, p.k, p.samples, seed)?;
    let path = ctx.write_csv(&p, "", |w| report.write_csv(w))?;
    Ok(Outcome {
        ok: report.passed(),
        files: vec![path],
        summary: vec![
            format!("collar r_U {}, beta {}", cp.r_u, cp.beta),
            format!("k = {}: {}", p.k, report_summary(&report)),
        ],
    })
}

fn chain_cmd(ctx: &Context, p: ChainParams) -> Result<Outcome, CliError> {
    let seed = ctx.seed()?;
    let nu = measure(p.uniform, &p.weights)?;
    let start = point(&p.start, "start")?;
    let observable = p.observable.as_deref().map(str::parse::<TestFunction>).transpose()?;
    let traj = simulate_chain_with_guard(&ctx.group, &nu, start, p.steps, seed, p.guard);
    let mut files = vec![ctx.write_csv(&p, "", |w| {
        writeln!(w, "step,x_re,x_im,y_re,y_im,norm")?;
        for (n, z) in traj.points.iter().enumerate() {
            writeln!(w, "{n},{},{}", fmt_point(z), z.norm())?;
        }
        Ok(())
    })?];
    let mut summary = vec![match traj.escaped_at {
        Some(n) => format!("escaped at step {n}"),
        None => format!("bounded by the guard for {} steps", p.steps),
    }];
    if let Some(f) = observable {
        if p.guard != henon_lab::measure::DEFAULT_OVERFLOW_GUARD {
            return Err(CliError::Usage("ergodic averages use the default guard".into()));
        }
        let averages = ergodic_average(&ctx.group, &nu, f, start, p.steps, seed);
        files.push(ctx.write_csv(&p, "_ergodic", |w| write_series_csv(w, ("N", "value"), &averages, 1))?);
        if let Some(last) = averages.last() {
            summary.push(format!("average of {f} over {} steps: {last}", averages.len()));
        }
    }
    if let Some(bins) = p.defect_bins {
        let bounds = GridBox::around_bidisk(ctx.group.filtration());
        let h = empirical_measure(std::slice::from_ref(&traj), bounds, bins)?;
        let d = stationarity_defect(&ctx.group, &nu, &h, p.pushforward_samples, seed);
        files.push(ctx.write_csv(&p, "_defect", |w| {
            writeln!(w, "bins,total,escaped_fraction,defect")?;
            writeln!(w, "{bins},{},{},{d}", h.total(), h.escaped_fraction())
        })?);
        summary.push(format!("stationarity defect {d}"));
    }
    Ok(Outcome {
        ok: true,
        files,
        summary,
    })
}

fn grid_box(center: &[f64], half_width: f64) -> Result<GridBox, CliError> {
    Ok(GridBox::new(reals4(center, "center")?, [half_width; 4])?)
}

fn mass_escape_cmd(ctx: &Context, p: MassEscapeParams) -> Result<Outcome, CliError> {
    let seed = ctx.seed()?;
    let nu = measure(p.uniform, &p.weights)?;
    let pair = match (&p.translate, &ctx.second_map) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give translate or second_map, not both".into())),
        (Some(c), None) => {
            let [re, im] = <[f64; 2]>::try_from(c.as_slice())
                .map_err(|_| CliError::Usage("translate needs 2 reals".into()))?;
            Some(HenonPair::new(ctx.group.h1.clone(), ctx.group.h1.translated(Complex64::new(re, im))))
        }
        (None, Some(m)) => Some(HenonPair::new(ctx.group.h1.clone(), m.build()?)),
        (None, None) => None,
    };
    let sample_seed = rng::derive_seed(seed, &[1]);
    let starts: Vec<Point2> = match p.starts.as_str() {
        "collar" => {
            if pair.is_some() {
                return Err(CliError::Usage("collar starts need the rotation preset".into()));
            }
            let cp = match collar(ctx, p.beta, p.r_u, seed)? {
                Ok(cp) => cp,
                Err(log) => return Ok(failed(log, "collar")),
            };
            (0..p.count as u64).map(|i| cp.sample(&ctx.group, &mut rng::substream(sample_seed, &[i]))).collect()
        }
        "box" => PointSample::Random { bounds: grid_box(&[0.0; 4], p.half_width)?, count: p.count }.points(sample_seed),
        "point" => vec![point(&p.start, "start")?],
        "filled-julia" => {
            let f = filtration_radius(&ctx.group.h1, DEFAULT_GROWTH)?;
            PointSample::Random { bounds: grid_box(&[0.0; 4], p.half_width)?, count: p.count }
                .points(sample_seed)
                .into_iter()
                .filter(|z| matches!(classify_filled_julia(&ctx.group.h1, *z, 50, &f), JuliaVerdict::InK { .. }))
                .collect()
        }
        other => return Err(CliError::Usage(format!("unknown start sample {other:?}"))),
    };
    let action: &dyn GroupAction = match &pair {
        Some(pair) => pair,
        None => &ctx.group,
    };
    let series = mass_escape_radii(action, &nu, &starts, p.steps, &p.radii, p.trials, seed)?;
    let path = ctx.write_csv(&p, "", |w| {
        writeln!(w, "radius,step,fraction")?;
        for (r, s) in p.radii.iter().zip(&series) {
            for (n, f) in s.iter().enumerate() {
                writeln!(w, "{r},{n},{f}")?;
            }
        }
        Ok(())
    })?;
    let summary = std::iter::once(format!("{} starts × {} trials", starts.len(), p.trials))
        .chain(p.radii.iter().zip(&series).map(|(r, s)| format!("radius {r}: f_{} = {}", p.steps, s[p.steps])))
        .collect();
    Ok(Outcome {
        ok: true,
        files: vec![path],
        summary,
    })
}

fn sample_points(ctx: &Context, sample: &str, per_axis: usize, count: usize, bounds: GridBox) -> Result<Vec<Point2>, CliError> {
    match sample {
        "grid" => Ok(PointSample::Grid { bounds, per_axis }.points(0)),
        "random" => Ok(PointSample::Random { bounds, count }.points(ctx.seed()?)),
        other => Err(CliError::Usage(format!("unknown sample {other:?}; use grid or random"))),
    }
}

fn filled_julia_cmd(ctx: &Context, p: FilledJuliaParams) -> Result<Outcome, CliError> {
    if p.budget == 0 {
        return Err(CliError::Usage("budget must be at least 1".into()));
    }
    let points = sample_points(ctx, &p.sample, p.per_axis, p.count, grid_box(&p.center, p.half_width)?)?;
    let m = &ctx.group.h1;
    let f = filtration_radius(m, DEFAULT_GROWTH)?;
    let verdicts: Vec<JuliaVerdict> = points.iter().map(|z| classify_filled_julia(m, *z, p.budget, &f)).collect();
    let path = ctx.write_csv(&p, "", |w| {
        writeln!(w, "x_re,x_im,y_re,y_im,verdict")?;
        for (z, v) in points.iter().zip(&verdicts) {
            writeln!(w, "{},{v}", fmt_point(z))?;
        }
        Ok(())
    })?;
    let ink = verdicts.iter().filter(|v| matches!(v, JuliaVerdict::InK { .. })).count();
    let escaping = verdicts.iter().filter(|v| v.escapes()).count();
    Ok(Outcome {
        ok: true,
        files: vec![path],
        summary: vec![format!(
            "{} points: {ink} in K (heuristic), {escaping} escaping, {} undecided",
            points.len(),
            points.len() - ink - escaping
        )],
    })
}

fn disjointness_cmd(ctx: &Context, p: DisjointnessParams) -> Result<Outcome, CliError> {
    if p.budget == 0 {
        return Err(CliError::Usage("budget must be at least 1".into()));
    }
    let points = sample_points(ctx, &p.sample, p.per_axis, p.count, grid_box(&p.center, p.half_width)?)?;
    let h1 = &ctx.group.h1;
    let report = match p.partner.as_str() {
        "rotated" => disjointness_report_rotated(&ctx.group, &points, p.budget)?,
        "identical" => disjointness_report(h1, h1, &points, p.budget)?,
        "translate" => {
            let [re, im] = <[f64; 2]>::try_from(p.translate.as_slice())
                .map_err(|_| CliError::Usage("translate needs 2 reals".into()))?;
            disjointness_report(h1, &h1.translated(Complex64::new(re, im)), &points, p.budget)?
        }
        "map" => {
            let m2: HenonMap = ctx
                .second_map
                .as_ref()
                .ok_or_else(|| CliError::Usage("partner \"map\" needs second_map in the config".into()))?
                .build()?;
            disjointness_report(h1, &m2, &points, p.budget)?
        }
        other => return Err(CliError::Usage(format!("unknown partner {other:?}"))),
    };
    let path = ctx.write_csv(&p, "", |w| report.write_csv(w))?;
    Ok(Outcome {
        ok: true,
        files: vec![path],
        summary: vec![format!(
            "overlap {}/{}: {} (sampling evidence only)",
            report.overlap_count,
            report.total,
            report.verdict_label()
        )],
    })
}

fn render_cmd(ctx: &Context, p: RenderParams) -> Result<Outcome, CliError> {
    let mode = match p.mode.as_str() {
        "forward" => RenderMode::Forward,
        "biorbit" => RenderMode::Biorbit,
        "group" => RenderMode::Group {
            words: p.words,
            word_length: p.word_length,
        },
        other => return Err(CliError::Usage(format!("unknown render mode {other:?}"))),
    };
    let seed = match mode {
        RenderMode::Group { .. } => ctx.seed()?,
        _ => ctx.seed.unwrap_or(0),
    };
    let anchor = reals4(&p.anchor, "anchor")?;
    let extent = <[f64; 2]>::try_from(p.extent.as_slice())
        .map_err(|_| CliError::Usage("extent needs 2 reals".into()))?;
    let slice = match p.slice.as_str() {
        "real-plane" => Slice::real_plane(anchor, extent)?,
        "y-line" => Slice::y_line(anchor, extent)?,
        "custom" => {
            let u = reals4(p.u.as_deref().unwrap_or_default(), "u")?;
            let v = reals4(p.v.as_deref().unwrap_or_default(), "v")?;
            Slice::new(anchor, u, v, extent)?
        }
        other => return Err(CliError::Usage(format!("unknown slice {other:?}"))),
    };
    let raster = render_escape_slice(&ctx.group, slice, mode, p.width, p.height, p.cap, p.escape_radius, seed)?;
    let hash = config_hash(&ctx.header(&p));
    let path = ctx.path("", "pgm");
    if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    write_pgm(&raster, &hash, &path)?;
    let at_cap = raster.values.iter().filter(|&&v| u32::from(v) == p.cap).count();
    Ok(Outcome {
        ok: true,
        files: vec![path],
        summary: vec![format!("{}×{} raster, {at_cap} pixels at the cap, hash {hash}", p.width, p.height)],
    })
}

fn word_average_cmd(ctx: &Context, p: WordAverageParams) -> Result<Outcome, CliError> {
    let seed = ctx.seed()?;
    let nu = measure(false, &p.weights)?;
    if !nu.is_symmetric() {
        return Err(henon_lab::Error::AsymmetricWeights(nu.weights()).into());
    }
    if p.n_max > henon_lab::measure::MAX_WORD_AVERAGE_LENGTH {
        return Err(CliError::Usage(format!("n_max {} above 8", p.n_max)));
    }
    let cp = match collar(ctx, p.beta, p.r_u, seed)? {
        Ok(cp) => cp,
        Err(log) => return Ok(failed(log, "collar")),
    };
    let start = point(&p.start, "start")?;
    let samples: Vec<(Point2, f64)> = (0..p.chains as u64)
        .flat_map(|i| {
            henon_lab::measure::simulate_chain(&ctx.group, &nu, start, p.steps, rng::derive_seed(seed, &[i])).points
        })
        .map(|z| (z, 1.0))
        .collect();
    let rows = (0..=p.n_max)
        .map(|n| word_average_mass(&ctx.group, &nu, &samples, &cp, n))
        .collect::<Result<Vec<_>, _>>()?;
    let path = ctx.write_csv(&p, "", |w| {
        writeln!(w, "n,terms,lhs,rhs,gap")?;
        for (n, r) in rows.iter().enumerate() {
            writeln!(w, "{n},{},{},{},{}", r.terms, r.lhs, r.rhs, r.gap)?;
        }
        Ok(())
    })?;
    let mut summary = vec![format!("{} sample points, collar r_U {}, beta {}", samples.len(), cp.r_u, cp.beta)];
    summary.extend(rows.iter().enumerate().map(|(n, r)| format!("n = {n}: {} words, gap {}", r.terms, r.gap)));
    Ok(Outcome {
        ok: rows[0].gap == 0.0,
        files: vec![path],
        summary,
    })
}
