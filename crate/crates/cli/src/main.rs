//! `qvol`: batch front-end for invariants, cone geometry, asymptotic sweeps and
//! Poisson/Fourier checks.

mod config;

use clap::{Args, Parser, Subcommand, ValueEnum};
use config::{parse_theta, ConfigFile};
use qvol_core::cfrac::{Sign, SurgeryPresentation};
use qvol_core::fourier::{self, PhiEvaluator, QuadratureSpec};
use qvol_core::geom::{self, ConeGeometry};
use qvol_core::qinv::{self, ColorBranch, ColorParameters, RtOptions, SumMode};
use qvol_core::specfun::{self, PrecisionMode, C64};
use serde_json::json;
use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "qvol", version, about = "Relative RT invariants and cone geometry of figure-eight fillings")]
struct Cli {
    /// Flat key = value settings; command-line flags override them.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate RT_r(M, K, m0).
    Rt(RtArgs),
    /// Solve the cone geometry at one angle or along a grid.
    Geom(GeomArgs),
    /// Compare RT_r against the leading asymptotic term over a sweep of r.
    Verify(VerifyArgs),
    /// Poisson summation gap and Fourier coefficient ordering at small r.
    FourierCheck(FourierArgs),
    /// Evaluate a special function.
    Specfun(SpecfunArgs),
}

#[derive(Args, Debug, Clone)]
struct SurgeryArgs {
    #[arg(long, allow_hyphen_values = true)]
    p: Option<i64>,
    #[arg(long)]
    q: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    a0: Option<i64>,
}

#[derive(Args, Debug)]
struct RtArgs {
    #[command(flatten)]
    surgery: SurgeryArgs,
    #[arg(long)]
    r: Option<u32>,
    /// Color of the core; alternatively give --theta.
    #[arg(long)]
    m0: Option<u32>,
    /// Cone angle ("pi", "pi/2", radians) used to choose m0.
    #[arg(long)]
    theta: Option<String>,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// "standard" or a mantissa bit count for extended precision.
    #[arg(long)]
    precision: Option<String>,
}

#[derive(Args, Debug)]
struct GeomArgs {
    #[command(flatten)]
    surgery: SurgeryArgs,
    #[arg(long)]
    theta: Option<String>,
    /// start:end:count with both ends included; ends take the same forms as --theta.
    #[arg(long)]
    theta_grid: Option<String>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    surgery: SurgeryArgs,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    r_min: Option<u32>,
    #[arg(long)]
    r_max: Option<u32>,
    /// Even increment between successive levels.
    #[arg(long)]
    r_step: Option<u32>,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    #[arg(long)]
    precision: Option<String>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FourierArgs {
    #[command(flatten)]
    surgery: SurgeryArgs,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    r: Option<u32>,
    /// Poisson coefficients with |n_1|, |n| ≤ nmax.
    #[arg(long)]
    nmax: Option<i64>,
    /// Fourier indices with |k_1|, |k_2| ≤ kmax in the ordering check.
    #[arg(long)]
    kmax: Option<i64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Replace the bump by the indicator of the domain.
    #[arg(long)]
    indicator: bool,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_phase: Option<f64>,
    #[arg(long, value_enum)]
    branch: Option<BranchArg>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SpecfunArgs {
    #[arg(value_enum)]
    function: FunctionArg,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    re: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    im: f64,
    /// Angle for the Lobachevsky function.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// Level of the quantum dilogarithm.
    #[arg(long)]
    r: Option<u32>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum BranchArg {
    Minus,
    Plus,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModeArg {
    Raw,
    Symmetrized,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FunctionArg {
    Log,
    Dilog,
    Lobachevsky,
    Qdilog,
    QdilogPrime,
}

/// Failure with its process exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(qvol_core::Error),
}

impl From<qvol_core::Error> for Failure {
    fn from(e: qvol_core::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<String> for Failure {
    fn from(e: String) -> Self {
        Failure::Usage(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(qvol_core::Error::ExcludedSlope { .. }) => 2,
            Failure::Core(qvol_core::Error::Hypothesis(_)) => 3,
            Failure::Core(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("qvol: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qvol: {e}");
            ExitCode::from(e.code())
        }
    }
}

/// QVOL_THREADS caps the rayon worker count.
fn configure_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("QVOL_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| format!("QVOL_THREADS = '{v}' is not a count"))?;
    if n == 0 {
        return Err("QVOL_THREADS must be positive".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Outcome<()> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Rt(a) => cmd_rt(&cfg, a),
        Command::Geom(a) => cmd_geom(&cfg, a),
        Command::Verify(a) => cmd_verify(&cfg, a),
        Command::FourierCheck(a) => cmd_fourier(&cfg, a),
        Command::Specfun(a) => cmd_specfun(a),
    }
}

/// Flag value, else config value, else `default`.
fn pick<T: std::str::FromStr>(flag: Option<T>, cfg: &ConfigFile, key: &str, default: Option<T>) -> Outcome<T>
where
    T::Err: std::fmt::Display,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    if let Some(v) = cfg.get::<T>(key)? {
        return Ok(v);
    }
    default.ok_or_else(|| Failure::Usage(format!("missing required setting '{key}'")))
}

fn presentation(cfg: &ConfigFile, s: &SurgeryArgs) -> Outcome<SurgeryPresentation> {
    let p = pick(s.p, cfg, "p", None)?;
    let q = pick(s.q, cfg, "q", None)?;
    let a0 = pick(s.a0, cfg, "a0", Some(0))?;
    Ok(SurgeryPresentation::new(p, q, a0)?)
}

fn theta_setting(flag: &Option<String>, cfg: &ConfigFile) -> Outcome<Option<f64>> {
    match flag.as_deref().or(cfg.raw("theta")) {
        Some(t) => Ok(Some(parse_theta(t)?)),
        None => Ok(None),
    }
}

fn cone_angle(flag: &Option<String>, cfg: &ConfigFile) -> Outcome<f64> {
    let theta = theta_setting(flag, cfg)?.ok_or_else(|| Failure::Usage("missing required setting 'theta'".into()))?;
    if !(theta > 0.0 && theta < 2.0 * PI) {
        return Err(Failure::Usage(format!("theta = {theta} outside (0, 2pi)")));
    }
    Ok(theta)
}

fn branch_setting(flag: Option<BranchArg>, cfg: &ConfigFile) -> Outcome<ColorBranch> {
    let b = match flag {
        Some(BranchArg::Minus) => "minus".to_string(),
        Some(BranchArg::Plus) => "plus".to_string(),
        None => cfg.raw("branch").unwrap_or("minus").to_lowercase(),
    };
    match b.as_str() {
        "minus" => Ok(ColorBranch::Minus),
        "plus" => Ok(ColorBranch::Plus),
        other => Err(Failure::Usage(format!("unknown branch '{other}'"))),
    }
}

fn precision_setting(flag: &Option<String>, cfg: &ConfigFile) -> Outcome<PrecisionMode> {
    let text = flag.as_deref().or(cfg.raw("precision")).unwrap_or("standard").to_lowercase();
    let bits = text.strip_prefix("extended:").unwrap_or(&text);
    if bits == "standard" {
        return Ok(PrecisionMode::Standard);
    }
    let bits: u32 = bits
        .parse()
        .map_err(|_| Failure::Usage(format!("precision '{text}' is neither 'standard' nor a bit count")))?;
    Ok(PrecisionMode::extended(bits)?)
}

fn format_setting(flag: Option<FormatArg>, cfg: &ConfigFile, default: FormatArg) -> Outcome<FormatArg> {
    if let Some(f) = flag {
        return Ok(f);
    }
    match cfg.raw("format").map(str::to_lowercase).as_deref() {
        None => Ok(default),
        Some("csv") => Ok(FormatArg::Csv),
        Some("json") => Ok(FormatArg::Json),
        Some(other) => Err(Failure::Usage(format!("unknown format '{other}'"))),
    }
}

fn output_setting(flag: &Option<PathBuf>, cfg: &ConfigFile) -> Option<PathBuf> {
    flag.clone()
        .or_else(|| cfg.raw("output_path").or(cfg.raw("output")).map(PathBuf::from))
}

fn emit(path: &Option<PathBuf>, bytes: &[u8]) -> Outcome<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| Failure::Usage(e.to_string()))
        }
    }
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s.into_bytes()
}

fn precision_json(p: PrecisionMode) -> serde_json::Value {
    match p {
        PrecisionMode::Standard => json!({ "kind": "standard", "bits": 53 }),
        PrecisionMode::Extended { bits } => json!({ "kind": "extended", "bits": bits }),
    }
}

fn cmd_rt(cfg: &ConfigFile, a: RtArgs) -> Outcome<()> {
    let pres = presentation(cfg, &a.surgery)?;
    let r: u32 = pick(a.r, cfg, "r", None)?;
    let branch = branch_setting(a.branch, cfg)?;
    let requested = theta_setting(&a.theta, cfg)?;
    let m0 = match (a.m0.or(cfg.get::<u32>("m0")?), requested) {
        (Some(m0), _) => m0,
        (None, Some(theta)) => qinv::choose_color(r, theta, branch)?,
        (None, None) => return Err(Failure::Usage("give either m0 or theta".into())),
    };
    let mode = match a.mode {
        Some(ModeArg::Raw) => SumMode::Raw,
        Some(ModeArg::Symmetrized) => SumMode::Symmetrized,
        None => match cfg.raw("mode").unwrap_or("raw") {
            "raw" => SumMode::Raw,
            "symmetrized" => SumMode::Symmetrized,
            other => return Err(Failure::Usage(format!("unknown mode '{other}'"))),
        },
    };
    let precision = precision_setting(&a.precision, cfg)?;
    let color = ColorParameters::new(r, m0)?;
    let opts = RtOptions { precision, ..RtOptions::default() };
    let v = qinv::rt_invariant_with(r, &pres, m0, mode, &opts)?;
    let doc = json!({
        "p": pres.p,
        "q": pres.q,
        "a0": pres.a0,
        "r": r,
        "m0": m0,
        "x0": color.x0,
        "theta": color.theta,
        "thetaRequested": requested,
        "mode": mode,
        "precision": precision_json(v.precision),
        "re": v.value.re,
        "im": v.value.im,
        "termCount": v.term_count,
        "cancellationEstimate": v.cancellation_estimate,
    });
    emit(&None, &json_bytes(&doc))
}

const GEOM_HEADER: [&str; 24] = [
    "theta", "vol", "cs", "cs_unreduced", "x0_re", "x0_im", "y0_re", "y0_im", "a_re", "a_im", "b_re", "b_im",
    "hess_det_re", "hess_det_im", "hm_re", "hm_im", "hl_re", "hl_im", "hgamma_re", "hgamma_im", "core_length",
    "gluing_residual", "grad_norm", "vol_decreasing",
];

fn geom_fields(g: &ConeGeometry, decreasing: bool) -> Vec<(&'static str, serde_json::Value)> {
    let vals = [
        g.theta, g.vol, g.cs, g.cs_unreduced, g.x0c.re, g.x0c.im, g.y0c.re, g.y0c.im, g.a.re, g.a.im, g.b.re,
        g.b.im, g.hess_det.re, g.hess_det.im, g.hm.re, g.hm.im, g.hl.re, g.hl.im, g.hgamma.re, g.hgamma.im,
        g.core_length, g.gluing_residual, g.grad_norm,
    ];
    let mut out: Vec<(&'static str, serde_json::Value)> =
        GEOM_HEADER.iter().zip(vals).map(|(&k, v)| (k, json!(v))).collect();
    out.push((GEOM_HEADER[23], json!(decreasing as u8)));
    out
}

fn parse_grid(text: &str) -> Outcome<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Failure::Usage(format!("theta grid '{text}' is not start:end:count")));
    }
    let start = parse_theta(parts[0])?;
    let end = parse_theta(parts[1])?;
    let n: usize = parts[2].trim().parse().map_err(|_| Failure::Usage(format!("bad grid count in '{text}'")))?;
    if n < 2 || end <= start {
        return Err(Failure::Usage(format!("theta grid '{text}' needs count >= 2 and start < end")));
    }
    Ok((0..n).map(|i| start + (end - start) * i as f64 / (n - 1) as f64).collect())
}

fn cmd_geom(cfg: &ConfigFile, a: GeomArgs) -> Outcome<()> {
    let pres = presentation(cfg, &a.surgery)?;
    let grid_text = a.theta_grid.clone().or_else(|| cfg.raw("theta_grid").map(str::to_string));
    let (rows, summary) = match grid_text {
        Some(text) => {
            let grid = parse_grid(&text)?;
            let fam = geom::cone_family(&pres, &grid)?;
            let summary = json!({
                "strictlyDecreasing": fam.strictly_decreasing,
                "concave": fam.concave,
                "maxSecondDifference": fam.max_second_difference,
                "minImDhlDhm": fam.min_im_dhl_dhm,
            });
            (fam.rows, Some(summary))
        }
        None => (vec![geom::solve_critical(&pres, cone_angle(&a.theta, cfg)?)?], None),
    };
    let decreasing: Vec<bool> =
        (0..rows.len()).map(|i| i == 0 || rows[i].vol < rows[i - 1].vol).collect();
    let format = format_setting(a.format, cfg, FormatArg::Csv)?;
    let bytes = match format {
        FormatArg::Csv => {
            let mut w = String::new();
            w.push_str(&GEOM_HEADER.join(","));
            w.push('\n');
            for (g, &d) in rows.iter().zip(&decreasing) {
                let line: Vec<String> = geom_fields(g, d)
                    .into_iter()
                    .map(|(_, v)| match v.as_f64() {
                        Some(x) if v.is_f64() => format!("{x:.16e}"),
                        _ => v.to_string(),
                    })
                    .collect();
                w.push_str(&line.join(","));
                w.push('\n');
            }
            w.into_bytes()
        }
        FormatArg::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .zip(&decreasing)
                .map(|(g, &d)| serde_json::Value::Object(geom_fields(g, d).into_iter().map(|(k, v)| (k.to_string(), v)).collect()))
                .collect();
            json_bytes(&json!({ "p": pres.p, "q": pres.q, "a0": pres.a0, "rows": rows, "family": summary }))
        }
    };
    emit(&output_setting(&a.output, cfg), &bytes)
}

fn r_levels(r_min: u32, r_max: u32, step: u32) -> Outcome<Vec<u32>> {
    if r_min.is_multiple_of(2) || r_max.is_multiple_of(2) {
        return Err(Failure::Usage(format!("r_min = {r_min} and r_max = {r_max} must both be odd")));
    }
    if r_min > r_max {
        return Err(Failure::Usage(format!("r_min = {r_min} exceeds r_max = {r_max}")));
    }
    if step == 0 || step % 2 == 1 {
        return Err(Failure::Usage(format!("r_step = {step} must be positive and even")));
    }
    Ok((r_min..=r_max).step_by(step as usize).collect())
}

fn cmd_verify(cfg: &ConfigFile, a: VerifyArgs) -> Outcome<()> {
    let pres = presentation(cfg, &a.surgery)?;
    let theta = cone_angle(&a.theta, cfg)?;
    let r_min = pick(a.r_min, cfg, "r_min", Some(51))?;
    let r_max = pick(a.r_max, cfg, "r_max", Some(351))?;
    let r_step = pick(a.r_step, cfg, "r_step", Some(50))?;
    let levels = r_levels(r_min, r_max, r_step)?;
    let branch = branch_setting(a.branch, cfg)?;
    let opts = RtOptions { precision: precision_setting(&a.precision, cfg)?, ..RtOptions::default() };
    let report = fourier::verify_volume_conjecture_with(&pres, theta, &levels, branch, &opts)?;
    let bytes = match format_setting(a.format, cfg, FormatArg::Csv)? {
        FormatArg::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            buf
        }
        FormatArg::Json => {
            let mut s = report.to_json()?;
            s.push('\n');
            s.into_bytes()
        }
    };
    let last = report.rows.last().map(|r| r.ratio_error).unwrap_or(f64::NAN);
    eprintln!(
        "verify: {} levels, final ratio error {last:.3e}, volFit {:.9} vs vol {:.9}",
        report.rows.len(),
        report.fitted.vol_fit,
        report.fitted.geom_vol
    );
    emit(&output_setting(&a.output, cfg), &bytes)
}

fn c_json(z: C64) -> serde_json::Value {
    json!({ "re": z.re, "im": z.im })
}

fn cmd_fourier(cfg: &ConfigFile, a: FourierArgs) -> Outcome<()> {
    let pres = presentation(cfg, &a.surgery)?;
    let theta = cone_angle(&a.theta, cfg)?;
    let r: u32 = pick(a.r, cfg, "r", Some(21))?;
    let nmax: i64 = pick(a.nmax, cfg, "nmax", Some(2))?;
    let kmax: i64 = pick(a.kmax, cfg, "kmax", Some(1))?;
    let delta: f64 = pick(a.delta, cfg, "delta", Some(fourier::DEFAULT_DELTA))?;
    let quad = QuadratureSpec {
        delta,
        rel_tol: pick(a.rel_tol, cfg, "rel_tol", Some(1e-4))?,
        max_phase: pick(a.max_phase, cfg, "max_phase", Some(4.0))?,
        ..QuadratureSpec::default()
    };
    let branch = branch_setting(a.branch, cfg)?;
    let m0 = qinv::choose_color(r, theta, branch)?;
    let check = fourier::poisson_check(&pres, r, m0, nmax, delta, !a.indicator, &quad)?;
    let phi = PhiEvaluator::new(r)?;
    let mut dominance = Vec::new();
    for sign in Sign::both() {
        let d = fourier::coefficient_dominance(&pres, theta, &phi, kmax, sign, &quad)?;
        let largest = d.others.iter().map(|o| o.3).fold(0.0, f64::max);
        dominance.push(json!({
            "sign": sign,
            "leading": d.leading,
            "largestOther": largest,
            "dominant": d.dominant,
            "others": d.others.iter().map(|o| json!([o.0, o.1, o.2, o.3])).collect::<Vec<_>>(),
        }));
    }
    let doc = json!({
        "p": pres.p,
        "q": pres.q,
        "a0": pres.a0,
        "theta": theta,
        "r": r,
        "m0": m0,
        "nmax": nmax,
        "delta": delta,
        "bump": !a.indicator,
        "poisson": { "lhs": c_json(check.lhs), "rhs": c_json(check.rhs), "gap": check.gap },
        "dominance": dominance,
    });
    emit(&output_setting(&a.output, cfg), &json_bytes(&doc))
}

fn cmd_specfun(a: SpecfunArgs) -> Outcome<()> {
    let z = C64::new(a.re, a.im);
    let level = || a.r.ok_or_else(|| Failure::Usage("the quantum dilogarithm needs --r".into()));
    let (name, value) = match a.function {
        FunctionArg::Log => ("log", specfun::principal_log(z)?),
        FunctionArg::Dilog => ("dilog", specfun::dilog(z)?),
        FunctionArg::Lobachevsky => {
            let t = match &a.theta {
                Some(t) => parse_theta(t)?,
                None => a.re,
            };
            ("lobachevsky", C64::new(specfun::lobachevsky(t), 0.0))
        }
        FunctionArg::Qdilog => ("qdilog", specfun::quantum_dilog(level()?, z)?),
        FunctionArg::QdilogPrime => ("qdilog-prime", specfun::quantum_dilog_prime(level()?, z)?),
    };
    let doc = json!({ "function": name, "z": c_json(z), "r": a.r, "theta": a.theta, "re": value.re, "im": value.im });
    emit(&None, &json_bytes(&doc))
}
