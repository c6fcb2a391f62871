//! Command-line front end.
//!
//! ```text
//! logharmonic eval   --h EXPR --g EXPR [--points "re,im;re,im"]
//! logharmonic check  becker|ahlfors|becker-analytic|becker-harmonic --h EXPR --g EXPR [--c RE,IM]
//! logharmonic verify identities|transforms|jets|all --h EXPR --g EXPR [--seed N]
//! ```
//!
//! Every command also takes `--center`, `--order`, `--rmax`, `--radii`,
//! `--angles`, `--format json|csv` and `--config FILE` (TOML with the same
//! keys; flags win). Exit codes: 0 success or pass, 1 criterion or suite
//! failed, 2 configuration or parse error, 3 evaluation error. Errors are
//! written to stderr as a JSON object.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::corpus;
use crate::criteria::{
    ahlfors_analytic_lhs, ahlfors_logharmonic_lhs, becker_analytic_lhs, becker_harmonic_lhs,
    becker_logharmonic_lhs, c_ahlfors_logharmonic, evaluate, CriterionReport, GridEvaluation,
    GridSpec,
};
use crate::error::Error;
use crate::expr::compile_str;
use crate::map::LogharmonicMap;
use crate::preschwarzian::{ps_logharmonic, PreSchwarzianValue};
use crate::series::DEFAULT_ORDER;
use crate::verify::{run_suite, Check, Suite};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MIN_ORDER: usize = 4;
pub const MAX_ORDER: usize = 64;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "logharmonic", version, about = "Pre-Schwarzian toolkit for logharmonic maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate f, w, J_f and P_f at points.
    Eval {
        #[command(flatten)]
        map: MapArgs,
        /// Points as "re,im;re,im;...". Defaults to the center.
        #[arg(long, allow_hyphen_values = true)]
        points: Option<String>,
    },
    /// Run a univalence criterion on the grid.
    Check {
        #[arg(value_enum)]
        criterion: Criterion,
        #[command(flatten)]
        map: MapArgs,
    },
    /// Run a property suite on the map and the random corpus.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[command(flatten)]
        map: MapArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Becker,
    Ahlfors,
    BeckerAnalytic,
    BeckerHarmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SuiteArg {
    Identities,
    Transforms,
    Jets,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Identities => Suite::Identities,
            SuiteArg::Transforms => Suite::Transforms,
            SuiteArg::Jets => Suite::Jets,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
struct MapArgs {
    /// Analytic factor h as an expression in z.
    #[arg(long = "h", allow_hyphen_values = true)]
    h: Option<String>,
    /// Co-analytic factor g (f = h conj(g)); defaults to "1".
    #[arg(long = "g", allow_hyphen_values = true)]
    g: Option<String>,
    /// Expansion center as RE,IM.
    #[arg(long, allow_hyphen_values = true)]
    center: Option<String>,
    /// Series order, 4..=64.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    rmax: Option<f64>,
    #[arg(long)]
    radii: Option<usize>,
    #[arg(long)]
    angles: Option<usize>,
    /// Ahlfors constant as RE,IM.
    #[arg(long, allow_hyphen_values = true)]
    c: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Corpus seed for `verify`.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file with any of the keys above; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Keys accepted in a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    h: Option<String>,
    g: Option<String>,
    center: Option<[f64; 2]>,
    order: Option<usize>,
    rmax: Option<f64>,
    radii: Option<usize>,
    angles: Option<usize>,
    c: Option<[f64; 2]>,
    format: Option<Format>,
    seed: Option<u64>,
    points: Option<Vec<[f64; 2]>>,
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub h_expr: String,
    pub g_expr: String,
    #[serde(with = "crate::report::complex")]
    pub center: Complex64,
    pub order: usize,
    pub grid: GridSpec,
    pub output_format: Format,
    #[serde(with = "crate::report::complex_opt")]
    pub ahlfors_c: Option<Complex64>,
    pub seed: u64,
}

/// An error together with the exit code it maps to and, for expression
/// errors, the offending field.
#[derive(Debug)]
struct Failure {
    code: i32,
    field: Option<&'static str>,
    error: Error,
}

impl Failure {
    fn config(error: Error) -> Self {
        Self {
            code: EXIT_CONFIG,
            field: None,
            error,
        }
    }

    fn runtime(error: Error) -> Self {
        Self {
            code: EXIT_RUNTIME,
            field: None,
            error,
        }
    }

    fn in_field(mut self, field: &'static str) -> Self {
        self.field = Some(field);
        self
    }
}

#[derive(Serialize)]
struct ErrorBody {
    kind: String,
    message: String,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    offset: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expected: Option<String>,
}

#[derive(Serialize)]
struct ErrorReport {
    error: ErrorBody,
}

fn error_json(kind: &str, message: String, code: i32, field: Option<&'static str>, parse: Option<&crate::expr::ParseError>) -> String {
    let report = ErrorReport {
        error: ErrorBody {
            kind: kind.into(),
            message,
            exit_code: code,
            field,
            offset: parse.map(|p| p.offset),
            column: parse.map(|p| p.column()),
            expected: parse.map(|p| p.expected.clone()),
        },
    };
    serde_json::to_string(&report).expect("error report serializes")
}

fn parse_complex(text: &str, what: &str) -> Result<Complex64, Failure> {
    let bad = || Failure::config(Error::Config(format!("{what}: expected RE,IM, got {text:?}")));
    let (re, im) = text.split_once(',').ok_or_else(bad)?;
    let re: f64 = re.trim().parse().map_err(|_| bad())?;
    let im: f64 = im.trim().parse().map_err(|_| bad())?;
    if re.is_finite() && im.is_finite() {
        Ok(Complex64::new(re, im))
    } else {
        Err(bad())
    }
}

fn parse_points(text: &str) -> Result<Vec<Complex64>, Failure> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_complex(s, "--points"))
        .collect()
}

fn pair(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn load_file(path: &PathBuf) -> Result<FileConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Failure::config(Error::Config(format!("cannot read {}: {e}", path.display())))
    })?;
    toml::from_str(&text)
        .map_err(|e| Failure::config(Error::Config(format!("{}: {}", path.display(), e.message()))))
}

fn resolve(args: &MapArgs) -> Result<(RunConfig, Option<Vec<Complex64>>), Failure> {
    let file = match &args.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    let h_expr = args
        .h
        .clone()
        .or(file.h)
        .ok_or_else(|| Failure::config(Error::Config("missing --h".into())))?;
    let g_expr = args.g.clone().or(file.g).unwrap_or_else(|| "1".into());
    let center = match &args.center {
        Some(t) => parse_complex(t, "--center")?,
        None => file.center.map(pair).unwrap_or_default(),
    };
    let order = args.order.or(file.order).unwrap_or(DEFAULT_ORDER);
    if !(MIN_ORDER..=MAX_ORDER).contains(&order) {
        return Err(Failure::config(Error::InvalidOrder {
            order,
            min: MIN_ORDER,
            max: MAX_ORDER,
        }));
    }
    let default = GridSpec::default();
    let grid = GridSpec {
        r_max: args.rmax.or(file.rmax).unwrap_or(default.r_max),
        n_radii: args.radii.or(file.radii).unwrap_or(default.n_radii),
        n_angles: args.angles.or(file.angles).unwrap_or(default.n_angles),
    };
    grid.validate().map_err(Failure::config)?;
    let ahlfors_c = match &args.c {
        Some(t) => Some(parse_complex(t, "--c")?),
        None => file.c.map(pair),
    };
    let config = RunConfig {
        h_expr,
        g_expr,
        center,
        order,
        grid,
        output_format: args.format.or(file.format).unwrap_or_default(),
        ahlfors_c,
        seed: args.seed.or(file.seed).unwrap_or(0),
    };
    let points = file
        .points
        .map(|v| v.into_iter().map(pair).collect::<Vec<_>>());
    Ok((config, points))
}

fn build_map(cfg: &RunConfig) -> Result<LogharmonicMap, Failure> {
    let h = compile_str(&cfg.h_expr, cfg.center, cfg.order).map_err(|e| Failure::config(e).in_field("h"))?;
    let g = compile_str(&cfg.g_expr, cfg.center, cfg.order).map_err(|e| Failure::config(e).in_field("g"))?;
    LogharmonicMap::new(h, g).map_err(Failure::config)
}

#[derive(Serialize)]
struct PointRecord {
    #[serde(with = "crate::report::complex")]
    z: Complex64,
    #[serde(with = "crate::report::complex")]
    f: Complex64,
    #[serde(with = "crate::report::complex")]
    omega: Complex64,
    jacobian: f64,
    ps: PreSchwarzianValue,
}

#[derive(Serialize)]
struct EvalReport<'a> {
    command: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    points: Vec<PointRecord>,
}

#[derive(Serialize)]
struct CheckReport<'a> {
    command: &'static str,
    version: &'static str,
    criterion: Criterion,
    config: &'a RunConfig,
    report: &'a CriterionReport,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    command: &'static str,
    version: &'static str,
    suite: SuiteArg,
    config: &'a RunConfig,
    maps: usize,
    passed: bool,
    checks: &'a [Check],
}

/// Output text and exit code of a successful run.
struct Outcome {
    text: String,
    code: i32,
}

/// Shortest round-trip rendering, as in the JSON output.
fn num(x: f64) -> String {
    serde_json::to_string(&x).expect("f64 serializes")
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn cmd_eval(map: &MapArgs, points: Option<&str>) -> Result<Outcome, Failure> {
    let (cfg, file_points) = resolve(map)?;
    let f = build_map(&cfg)?;
    let points = match points {
        Some(text) => parse_points(text)?,
        None => file_points.unwrap_or_else(|| vec![cfg.center]),
    };
    let mut records = Vec::with_capacity(points.len());
    for z in points {
        let ps = ps_logharmonic(&f, z).map_err(Failure::runtime)?;
        records.push(PointRecord {
            z,
            f: f.eval(z),
            omega: f.dilatation_at(z),
            jacobian: f.jacobian(z),
            ps,
        });
    }
    let text = match cfg.output_format {
        Format::Json => to_json(&EvalReport {
            command: "eval",
            version: VERSION,
            config: &cfg,
            points: records,
        }),
        Format::Csv => {
            let mut s = String::from("z_re,z_im,f_re,f_im,omega_re,omega_im,jacobian,ps_re,ps_im,outside_trust\n");
            for r in &records {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{}",
                    num(r.z.re),
                    num(r.z.im),
                    num(r.f.re),
                    num(r.f.im),
                    num(r.omega.re),
                    num(r.omega.im),
                    num(r.jacobian),
                    num(r.ps.value.re),
                    num(r.ps.value.im),
                    r.ps.outside_trust
                );
            }
            s
        }
    };
    Ok(Outcome { text, code: EXIT_PASS })
}

fn run_criterion(criterion: Criterion, cfg: &RunConfig, f: &LogharmonicMap) -> Result<GridEvaluation, Failure> {
    let grid = &cfg.grid;
    Ok(match criterion {
        Criterion::Becker => evaluate(grid, f.trust_radius(), |z| becker_logharmonic_lhs(f, z)),
        Criterion::Ahlfors => {
            let c = cfg
                .ahlfors_c
                .ok_or_else(|| Failure::config(Error::Config("ahlfors needs --c".into())))?;
            // validates the constant
            c_ahlfors_logharmonic(f, c, &GridSpec::new(0.5, 1, 1).expect("valid grid")).map_err(Failure::config)?;
            evaluate(grid, f.trust_radius(), |z| ahlfors_logharmonic_lhs(f, c, z))
        }
        Criterion::BeckerAnalytic => {
            let h = f.h();
            match cfg.ahlfors_c {
                None => evaluate(grid, h.radius_hint(), |z| becker_analytic_lhs(h, z)),
                Some(c) => {
                    crate::criteria::c_ahlfors_analytic(h, c, &GridSpec::new(0.5, 1, 1).expect("valid grid"))
                        .map_err(Failure::config)?;
                    evaluate(grid, h.radius_hint(), |z| ahlfors_analytic_lhs(h, c, z))
                }
            }
        }
        Criterion::BeckerHarmonic => {
            let lift = f.log_lift().map_err(Failure::runtime)?;
            evaluate(grid, crate::criteria::lift_trust(&lift), |z| becker_harmonic_lhs(&lift, z))
        }
    })
}

fn cmd_check(criterion: Criterion, map: &MapArgs) -> Result<Outcome, Failure> {
    let (cfg, _) = resolve(map)?;
    let f = build_map(&cfg)?;
    let eval = run_criterion(criterion, &cfg, &f)?;
    let code = if eval.report.passed { EXIT_PASS } else { EXIT_FAIL };
    let text = match cfg.output_format {
        Format::Json => to_json(&CheckReport {
            command: "check",
            version: VERSION,
            criterion,
            config: &cfg,
            report: &eval.report,
        }),
        Format::Csv => {
            let mut s = String::from("z_re,z_im,lhs,excluded,outside_trust\n");
            for p in &eval.samples {
                let (lhs, excluded) = match &p.lhs {
                    Ok(v) => (num(*v), String::new()),
                    Err(e) => (String::new(), e.kind().to_string()),
                };
                let _ = writeln!(s, "{},{},{},{},{}", num(p.z.re), num(p.z.im), lhs, excluded, p.outside_trust);
            }
            s
        }
    };
    Ok(Outcome { text, code })
}

fn cmd_verify(suite: SuiteArg, map: &MapArgs) -> Result<Outcome, Failure> {
    let (cfg, _) = resolve(map)?;
    let f = build_map(&cfg)?;
    let mut maps = vec![f];
    maps.extend(corpus::corpus(cfg.seed));
    let mut rng = corpus::rng(cfg.seed.wrapping_add(1));
    let checks = run_suite(suite.into(), &maps, &mut rng);
    let passed = checks.iter().all(|c| c.pass || c.informational);
    let text = match cfg.output_format {
        Format::Json => to_json(&VerifyReport {
            command: "verify",
            version: VERSION,
            suite,
            config: &cfg,
            maps: maps.len(),
            passed,
            checks: &checks,
        }),
        Format::Csv => {
            let mut s = String::from("name,max_residual,tolerance,pass,informational,samples,errors\n");
            for c in &checks {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    c.name,
                    num(c.max_residual),
                    num(c.tolerance),
                    c.pass, c.informational, c.samples, c.errors
                );
            }
            s
        }
    };
    Ok(Outcome {
        text,
        code: if passed { EXIT_PASS } else { EXIT_FAIL },
    })
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_PASS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("usage error").trim_start_matches("error: ");
            let _ = writeln!(err, "{}", error_json("Usage", first.to_string(), EXIT_CONFIG, None, None));
            return EXIT_CONFIG;
        }
    };
    let result = match &cli.command {
        Command::Eval { map, points } => cmd_eval(map, points.as_deref()),
        Command::Check { criterion, map } => cmd_check(*criterion, map),
        Command::Verify { suite, map } => cmd_verify(*suite, map),
    };
    match result {
        Ok(o) => {
            let _ = out.write_all(o.text.as_bytes());
            o.code
        }
        Err(f) => {
            let parse = match &f.error {
                Error::Parse(p) => Some(p),
                _ => None,
            };
            let _ = writeln!(
                err,
                "{}",
                error_json(f.error.kind(), f.error.to_string(), f.code, f.field, parse)
            );
            f.code
        }
    }
}

pub fn run() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
