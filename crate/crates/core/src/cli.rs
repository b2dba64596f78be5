//! Command-line front end. [`run`] parses arguments and returns a
//! [`CommandResult`]; the binary only prints it and exits.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::{BallError, Result};
use crate::generated::{
    example24_norm, example24_oracle, generated_ball_sample, hc_hull_sample, BballConfig, HcConfig,
    SampleCloud,
};
use crate::matrix::{similarity_rep_norm, ComplexMatrix, HermitianMatrix};
use crate::mobius::{ball_norm, pick_oracle, PickNodes};
use crate::nonsmooth::{build_sequence, corner_report, EndpointPolicy, SequenceConfig};
use crate::oracle::{BallOracle, Membership};
use crate::point::{Point, C64};
use crate::schur::{
    biperp_membership, ideal_analyze, idempotent_oracle_from_matrix, pac_matrix, perp_oracle,
    BiperpResult, IdealFile, SeparationConfig,
};
use crate::vnn::{
    example31_ball, hyperconvexity_falsify, operator_norm_of, sup_norm_torus,
    sup_norm_upper_bound, violation_search, vnn_ratio, vnn_ratio_conservative, CommutingTuple,
    Poly, SearchConfig, ViolationCertificate,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;

/// Outcome of one invocation.
#[derive(Debug, Clone)]
pub struct CommandResult {
    pub exit_code: i32,
    pub stdout_payload: Value,
    pub artifacts: Vec<PathBuf>,
}

impl CommandResult {
    fn ok(payload: Value, artifacts: Vec<PathBuf>) -> Self {
        CommandResult {
            exit_code: EXIT_OK,
            stdout_payload: payload,
            artifacts,
        }
    }

    fn failure(code: i32, kind: &str, message: String) -> Self {
        CommandResult {
            exit_code: code,
            stdout_payload: json!({ "error": kind, "message": message }),
            artifacts: Vec::new(),
        }
    }

    /// Text for stdout: JSON with 17 significant digits per float, or the raw
    /// text of a help message.
    pub fn render(&self) -> String {
        match &self.stdout_payload {
            Value::String(s) => s.clone(),
            v => render_json(v),
        }
    }
}

const MEMBER_HELP: &str = "\
Input files (complex numbers are [re, im], points are lists of them):
  pick        {\"alpha\": point, \"w\": point}
  perp        {\"k\": n, \"generators\": [matrix, ...], \"w\": point}
              or {\"pac\": {\"a\": a, \"c\": c}, \"w\": point}
  biperp      {\"D\": [point, ...], \"w\": point}
  example24   {\"w\": point}
  idempotent  {\"Q\": matrix, \"w\": point}
With --points FILE (CSV with columns re_1,im_1,...,re_k,im_k, or a JSON list
of points) every listed point is queried and \"w\" may be omitted.";

const GENERATE_HELP: &str = "\
Config files:
  bball     {\"D\": [point, ...], \"rounds\": 3, \"per_round\": 64}
  hc        {\"D\": [point, ...], \"max_degree\": 6, \"n_polys\": 64, \"grid\": 64}
  envelope  {\"n_curves\": 8, \"a0\": 1, \"c0\": 1, \"jump_min\": 1e-6,
             \"policy\": \"bisect\"|\"random_fraction\", \"samples\": 2001}
Outputs:
  bball/hc  cloud.csv   columns re_1,im_1,...,re_k,im_k (one point per row)
            cloud.json  {\"k\", \"D\", \"generation_log\"}
  envelope  envelope.json   curves, breakpoints, corner jumps, invariant checks
            envelope.csv    columns u,f,active (gnuplot: plot 'envelope.csv' u 1:2)
            generators.json {\"k\": 3, \"generators\": [...]}, usable as perp input";

const VNN_HELP: &str = "\
Files:
  tuple        {\"n\", \"dim\", \"Q\": matrix, \"diagonals\": [[z, ...], ...]}
               or {\"matrices\": [matrix, ...]}
  poly         {\"n\", \"terms\": [{\"exp\": [e_1, ...], \"coef\": [re, im]}, ...]}
  certificate  {\"tuple\", \"poly\", \"ratio\", \"grid_used\"}
  oracle       {\"family\": \"example31\", \"Q\": matrix} | {\"family\": \"idempotent\", \"Q\"}
               | {\"family\": \"pick\", \"alpha\"} | {\"family\": \"perp\", \"k\", \"generators\"}
               | {\"family\": \"example24\"} | {\"family\": \"polydisk\", \"k\"}
  points       JSON list of n points in C^k";

#[derive(Parser, Debug)]
#[command(name = "ckballs", version, about = "Unit balls of Banach-algebra norms on C^k")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide membership of a point in a ball.
    #[command(after_help = MEMBER_HELP)]
    Member(MemberArgs),
    /// Sample a generated or hyperconvex ball, or build the non-smooth envelope.
    #[command(after_help = GENERATE_HELP)]
    Generate(GenerateArgs),
    /// Von Neumann inequality tools.
    #[command(after_help = VNN_HELP)]
    Vnn {
        #[command(subcommand)]
        action: VnnAction,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MemberFamily {
    Pick,
    Perp,
    Biperp,
    Example24,
    Idempotent,
}

#[derive(Args, Debug)]
struct MemberArgs {
    #[arg(long, value_enum)]
    family: MemberFamily,
    #[arg(long)]
    input: PathBuf,
    /// Query every point of a CSV or JSON point list.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Separation iterations for biperp.
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit 2 if any answer is unknown.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenerateWhat {
    Bball,
    Hc,
    Envelope,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    what: GenerateWhat,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum VnnAction {
    /// Ratio ||p(T)|| / sup |p| on a torus grid.
    Check {
        #[arg(long)]
        tuple: PathBuf,
        #[arg(long)]
        poly: PathBuf,
        #[arg(long, default_value_t = 128)]
        grid: usize,
    },
    /// Re-check a stored violation certificate at its grid and the doubled grid.
    Verify {
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Randomized search for a violating tuple.
    Search {
        #[arg(long, default_value_t = 4)]
        dim: usize,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 32)]
        grid: usize,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        /// Write certificate.json here when a violation is found.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Push member points through a polynomial and test the image.
    Falsify {
        #[arg(long, required_unless_present = "certificate")]
        oracle: Option<PathBuf>,
        #[arg(long, required_unless_present = "certificate")]
        points: Option<PathBuf>,
        #[arg(long, required_unless_present = "certificate")]
        poly: Option<PathBuf>,
        /// Use the idempotent ball, diagonal points and polynomial of a certificate.
        #[arg(long, conflicts_with_all = ["oracle", "points", "poly"])]
        certificate: Option<PathBuf>,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

/// Errors carry the exit code they map to.
struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl From<BallError> for Failure {
    fn from(e: BallError) -> Self {
        let code = match e {
            BallError::SequenceStep { .. }
            | BallError::GridBudget { .. }
            | BallError::NoConvergence { .. }
            | BallError::MedianNoConvergence { .. } => EXIT_UNDECIDED,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            kind: "computation",
            message: e.to_string(),
        }
    }
}

fn input_error(message: String) -> Failure {
    Failure {
        code: EXIT_INPUT,
        kind: "input",
        message,
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// Runs one invocation; `argv[0]` is the program name.
///
/// `CKBALLS_THREADS` caps the worker pool.
pub fn run<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CommandResult {
                    exit_code: EXIT_OK,
                    stdout_payload: Value::String(e.to_string()),
                    artifacts: Vec::new(),
                },
                _ => CommandResult::failure(EXIT_INPUT, "usage", e.to_string()),
            };
        }
    };
    let threads = std::env::var("CKBALLS_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let exec = || match cli.command {
        Command::Member(a) => cmd_member(&a),
        Command::Generate(a) => cmd_generate(&a),
        Command::Vnn { action } => cmd_vnn(&action),
    };
    let outcome = match threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(exec),
            Err(e) => Err(input_error(format!("thread pool: {e}"))),
        },
        None => exec(),
    };
    match outcome {
        Ok(r) => r,
        Err(f) => CommandResult::failure(f.code, f.kind, f.message),
    }
}

fn read_text(path: &Path) -> CmdResult<String> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CmdResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn from_value<T: serde::de::DeserializeOwned>(v: &Value, what: &str) -> CmdResult<T> {
    T::deserialize(v).map_err(|e| input_error(format!("{what}: {e}")))
}

/// CSV (as written by `generate`) or a JSON list of points.
fn read_points(path: &Path) -> CmdResult<Vec<Point>> {
    let text = read_text(path)?;
    if text.trim_start().starts_with('[') {
        serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
    } else {
        SampleCloud::from_csv(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))
    }
}

/// Writes via a temporary file in the same directory and a rename.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> CmdResult<PathBuf> {
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let io = |e: std::io::Error| input_error(format!("{}: {e}", target.display()));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, &target).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })?;
    Ok(target)
}

fn prepare_out_dir(dir: &Path) -> CmdResult<()> {
    fs::create_dir_all(dir).map_err(|e| input_error(format!("{}: {e}", dir.display())))
}

fn query_points(input: &Value, points: Option<&Path>) -> CmdResult<Vec<Point>> {
    match points {
        Some(p) => read_points(p),
        None => match input.get("w") {
            Some(w) => Ok(vec![from_value(w, "w")?]),
            None => Err(input_error("no query point: give \"w\" or --points".into())),
        },
    }
}

fn ideal_from_input(input: &Value, tol: f64) -> CmdResult<crate::schur::SchurIdealGens> {
    let file: IdealFile = if let Some(pac) = input.get("pac") {
        #[derive(Deserialize)]
        struct Pac {
            a: f64,
            c: f64,
        }
        let p: Pac = from_value(pac, "pac")?;
        IdealFile {
            k: 3,
            generators: vec![pac_matrix(p.a, p.c)?],
        }
    } else if let Some(ideal) = input.get("ideal") {
        from_value(ideal, "ideal")?
    } else {
        from_value(input, "ideal")?
    };
    for g in &file.generators {
        if g.dim() != file.k {
            return Err(BallError::DimensionMismatch {
                expected: file.k,
                found: g.dim(),
            }
            .into());
        }
    }
    Ok(ideal_analyze(file.generators, tol)?)
}

fn cmd_member(a: &MemberArgs) -> CmdResult<CommandResult> {
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(input_error(format!("--tol must be positive, got {}", a.tol)));
    }
    let input: Value = read_json(&a.input)?;
    let points = query_points(&input, a.points.as_deref())?;
    let mut entries: Vec<Map<String, Value>> = Vec::with_capacity(points.len());
    let single = points.len() == 1;

    let plain = |oracle: &BallOracle,
                 norm: &dyn Fn(&Point) -> Option<f64>|
     -> CmdResult<Vec<Map<String, Value>>> {
        points
            .iter()
            .map(|w| {
                let m = oracle.membership(w)?;
                let mut e = Map::new();
                e.insert("result".into(), json!(m.as_str()));
                if single {
                    if let Some(n) = norm(w) {
                        e.insert("norm".into(), json!(n));
                    }
                }
                Ok(e)
            })
            .collect()
    };

    match a.family {
        MemberFamily::Pick => {
            let alpha: Vec<C64> = from_value::<Point>(
                input.get("alpha").ok_or_else(|| input_error("missing \"alpha\"".into()))?,
                "alpha",
            )?
            .into_coords();
            let oracle = pick_oracle(PickNodes::new(alpha)?, a.tol);
            entries = plain(&oracle, &|w| ball_norm(&oracle, w).ok())?;
        }
        MemberFamily::Perp => {
            let ideal = ideal_from_input(&input, a.tol)?;
            let oracle = perp_oracle(ideal, a.tol);
            entries = plain(&oracle, &|w| ball_norm(&oracle, w).ok())?;
        }
        MemberFamily::Example24 => {
            let oracle = example24_oracle(a.tol);
            entries = plain(&oracle, &|w| example24_norm(w).ok())?;
        }
        MemberFamily::Idempotent => {
            let q: HermitianMatrix = from_value(
                input.get("Q").ok_or_else(|| input_error("missing \"Q\"".into()))?,
                "Q",
            )?;
            let oracle = idempotent_oracle_from_matrix(&q, a.tol)?;
            entries = plain(&oracle, &|w| similarity_rep_norm(&q, w).ok())?;
        }
        MemberFamily::Biperp => {
            let d: Vec<Point> = from_value(
                input.get("D").ok_or_else(|| input_error("missing \"D\"".into()))?,
                "D",
            )?;
            let cfg = SeparationConfig {
                budget: a.budget,
                seed: a.seed,
                tol: a.tol,
                ..SeparationConfig::default()
            };
            for w in &points {
                let mut e = Map::new();
                match biperp_membership(&d, w, &cfg)? {
                    BiperpResult::NonMember { certificate } => {
                        e.insert("result".into(), json!("non_member"));
                        e.insert(
                            "certificate".into(),
                            serde_json::to_value(&certificate)
                                .map_err(|e| input_error(e.to_string()))?,
                        );
                    }
                    r => {
                        e.insert("result".into(), json!(r.membership().as_str()));
                    }
                }
                entries.push(e);
            }
        }
    }

    let unknown = entries
        .iter()
        .filter(|e| e["result"] == Membership::Unknown.as_str())
        .count();
    let family = format!("{:?}", a.family).to_lowercase();
    let mut payload = if single {
        entries.pop().expect("one entry")
    } else {
        let count = |s: &str| entries.iter().filter(|e| e["result"] == s).count();
        let mut m = Map::new();
        m.insert(
            "counts".into(),
            json!({
                "member": count("member"),
                "non_member": count("non_member"),
                "unknown": unknown,
            }),
        );
        m.insert("results".into(), Value::Array(entries.into_iter().map(Value::Object).collect()));
        m
    };
    payload.insert("family".into(), json!(family));
    let mut r = CommandResult::ok(Value::Object(payload), Vec::new());
    if a.strict && unknown > 0 {
        r.exit_code = EXIT_UNDECIDED;
    }
    Ok(r)
}

#[derive(Deserialize)]
struct CloudConfig {
    #[serde(rename = "D")]
    d: Vec<Point>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    rounds: Option<usize>,
    #[serde(default)]
    per_round: Option<usize>,
    #[serde(default)]
    max_degree: Option<u32>,
    #[serde(default)]
    n_polys: Option<usize>,
    #[serde(default)]
    grid: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvelopeConfig {
    #[serde(default)]
    n_curves: Option<usize>,
    #[serde(default)]
    a0: Option<f64>,
    #[serde(default)]
    c0: Option<f64>,
    #[serde(default)]
    jump_min: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    policy: Option<EndpointPolicy>,
    #[serde(default)]
    max_c_doublings: Option<usize>,
    #[serde(default)]
    samples: Option<usize>,
}

fn cmd_generate(a: &GenerateArgs) -> CmdResult<CommandResult> {
    match a.what {
        GenerateWhat::Bball | GenerateWhat::Hc => {
            let cfg: CloudConfig = read_json(&a.config)?;
            let seed = a.seed.or(cfg.seed).unwrap_or(0);
            let cloud = if matches!(a.what, GenerateWhat::Bball) {
                let d = BballConfig::default();
                generated_ball_sample(
                    &cfg.d,
                    &BballConfig {
                        rounds: cfg.rounds.unwrap_or(d.rounds),
                        per_round: cfg.per_round.unwrap_or(d.per_round),
                        seed,
                    },
                )?
            } else {
                let d = HcConfig::default();
                hc_hull_sample(
                    &cfg.d,
                    &HcConfig {
                        max_degree: cfg.max_degree.unwrap_or(d.max_degree),
                        n_polys: cfg.n_polys.unwrap_or(d.n_polys),
                        grid: cfg.grid.unwrap_or(d.grid),
                        seed,
                    },
                )?
            };
            prepare_out_dir(&a.out)?;
            let csv = cloud.to_csv()?;
            let sidecar = json!({
                "k": cloud.k,
                "D": cfg.d,
                "generation_log": cloud.generation_log,
            });
            let artifacts = vec![
                write_atomic(&a.out, "cloud.csv", &csv)?,
                write_atomic(&a.out, "cloud.json", &render_json(&sidecar))?,
            ];
            Ok(CommandResult::ok(
                json!({
                    "what": format!("{:?}", a.what).to_lowercase(),
                    "k": cloud.k,
                    "point_count": cloud.points.len(),
                    "rounds_run": cloud.generation_log.rounds_run,
                    "seed": seed,
                }),
                artifacts,
            ))
        }
        GenerateWhat::Envelope => {
            let c: EnvelopeConfig = read_json(&a.config)?;
            let d = SequenceConfig::default();
            let cfg = SequenceConfig {
                n_curves: c.n_curves.unwrap_or(d.n_curves),
                a0: c.a0.unwrap_or(d.a0),
                c0: c.c0.unwrap_or(d.c0),
                jump_min: c.jump_min.unwrap_or(d.jump_min),
                seed: a.seed.or(c.seed).unwrap_or(d.seed),
                policy: c.policy.unwrap_or(d.policy),
                max_c_doublings: c.max_c_doublings.unwrap_or(d.max_c_doublings),
            };
            let model = build_sequence(&cfg)?;
            let checks = model.verify();
            let corners = corner_report(&model)?;
            prepare_out_dir(&a.out)?;
            let mut csv = String::from("u,f,active\n");
            for (u, f, active) in model.samples(c.samples.unwrap_or(2001))? {
                csv.push_str(&format!("{u:.16e},{f:.16e},{active}\n"));
            }
            let doc = json!({
                "config": cfg,
                "model": model,
                "corners": corners,
                "invariants": checks,
            });
            let generators = serde_json::to_value(model.generators()?)
                .map_err(|e| input_error(e.to_string()))?;
            let artifacts = vec![
                write_atomic(&a.out, "envelope.json", &render_json(&doc))?,
                write_atomic(&a.out, "envelope.csv", &csv)?,
                write_atomic(&a.out, "generators.json", &render_json(&generators))?,
            ];
            Ok(CommandResult::ok(
                json!({
                    "what": "envelope",
                    "n_curves": model.curves.len(),
                    "breakpoints": model.breakpoints,
                    "mu_limit": model.mu_limit,
                    "min_corner_jump": model.corner_jumps.iter().copied().fold(f64::INFINITY, f64::min),
                    "invariants_hold": checks.iter().all(|c| c.passed),
                }),
                artifacts,
            ))
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum OracleFile {
    Example31 {
        #[serde(rename = "Q")]
        q: ComplexMatrix,
    },
    Idempotent {
        #[serde(rename = "Q")]
        q: HermitianMatrix,
    },
    Pick {
        alpha: Point,
    },
    Perp {
        k: usize,
        generators: Vec<HermitianMatrix>,
    },
    Example24,
    Polydisk {
        k: usize,
    },
}

fn build_oracle(file: OracleFile, tol: f64) -> Result<BallOracle> {
    match file {
        OracleFile::Example31 { q } => example31_ball(&q, tol),
        OracleFile::Idempotent { q } => idempotent_oracle_from_matrix(&q, tol),
        OracleFile::Pick { alpha } => Ok(pick_oracle(PickNodes::new(alpha.into_coords())?, tol)),
        OracleFile::Perp { k, generators } => {
            if generators.iter().any(|g| g.dim() != k) {
                return Err(BallError::InvalidArgument("generator size differs from k".into()));
            }
            Ok(perp_oracle(ideal_analyze(generators, tol)?, tol))
        }
        OracleFile::Example24 => Ok(example24_oracle(tol)),
        OracleFile::Polydisk { k } => Ok(BallOracle::polydisk(k, tol)),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> CmdResult<Value> {
    serde_json::to_value(v).map_err(|e| input_error(e.to_string()))
}

fn cmd_vnn(action: &VnnAction) -> CmdResult<CommandResult> {
    match action {
        VnnAction::Check { tuple, poly, grid } => {
            let t: CommutingTuple = read_json(tuple)?;
            let p: Poly = read_json(poly)?;
            let ratio = vnn_ratio(&p, &t, *grid)?;
            Ok(CommandResult::ok(
                json!({
                    "ratio": ratio,
                    "conservative_ratio": vnn_ratio_conservative(&p, &t, *grid)?,
                    "operator_norm": operator_norm_of(&p, &t)?,
                    "sup_grid": sup_norm_torus(&p, *grid)?,
                    "sup_upper_bound": sup_norm_upper_bound(&p, *grid)?,
                    "grid": grid,
                }),
                Vec::new(),
            ))
        }
        VnnAction::Verify { certificate } => {
            let cert: ViolationCertificate = read_json(certificate)?;
            Ok(CommandResult::ok(to_json(&cert.reverify()?)?, Vec::new()))
        }
        VnnAction::Search {
            dim,
            n,
            iters,
            seed,
            grid,
            restarts,
            out,
        } => {
            let outcome = violation_search(&SearchConfig {
                n: *n,
                dim: *dim,
                seed: *seed,
                iters: *iters,
                grid: *grid,
                restarts: *restarts,
                ..SearchConfig::default()
            })?;
            let mut artifacts = Vec::new();
            if let (Some(dir), Some(cert)) = (out, &outcome.certificate) {
                prepare_out_dir(dir)?;
                artifacts.push(write_atomic(dir, "certificate.json", &render_json(&to_json(cert)?))?);
            }
            Ok(CommandResult::ok(to_json(&outcome)?, artifacts))
        }
        VnnAction::Falsify {
            oracle,
            points,
            poly,
            certificate,
            grid,
            tol,
        } => {
            let (ball, pts, p) = if let Some(path) = certificate {
                let cert: ViolationCertificate = read_json(path)?;
                let CommutingTuple::Diagonalizable { q, .. } = &cert.tuple else {
                    return Err(input_error(
                        "certificate tuple must be in diagonalizable form".into(),
                    ));
                };
                let pts = cert.tuple.diagonal_points().expect("diagonalizable");
                (example31_ball(q, *tol)?, pts, cert.poly)
            } else {
                let (Some(o), Some(pp), Some(py)) = (oracle, points, poly) else {
                    return Err(input_error("need --oracle, --points and --poly".into()));
                };
                let file: OracleFile = read_json(o)?;
                let pts: Vec<Point> = read_json(pp)?;
                (build_oracle(file, *tol)?, pts, read_json(py)?)
            };
            let r = hyperconvexity_falsify(&ball, &pts, &p, *grid)?;
            Ok(CommandResult::ok(to_json(&r)?, Vec::new()))
        }
    }
}

/// Compact JSON with every float written as 17 significant digits.
pub fn render_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, &mut out);
    out
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) => {
            out.push('[');
            for (i, x) in a.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            out.push('{');
            for (i, (k, x)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_value(x, out);
            }
            out.push('}');
        }
    }
}

/// `{:.16e}`, or `null` for non-finite values.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}
