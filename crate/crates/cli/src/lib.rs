//! Table driver: run specification, configuration merge and rendering.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use volpot::{
    ConvergenceRow, Error as CoreError, ExecutionMode, ExtensionKind, HestenesScheme, LambdaSquared,
    PolynomialOrder, Profile, QuadratureParams, TableSetup,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(CoreError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::OutOfReach { .. } | CoreError::AccuracyNotMet { .. } | CoreError::Singular(_) => {
                CliError::Numerical(e)
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Density extension beyond the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExtensionId {
    /// Analytic continuation of the density itself.
    None,
    /// Reflection rates `2^-s`.
    Ext1,
    /// Reflection rates `1/s`.
    Ext2,
    /// Reflection rates `s`.
    Ext3,
}

impl ExtensionId {
    /// Extension of order `N = 2M`.
    pub fn kind(self, order: PolynomialOrder) -> Result<ExtensionKind, CliError> {
        let n = HestenesScheme::default_order(order);
        Ok(match self {
            ExtensionId::None => ExtensionKind::None,
            ExtensionId::Ext1 => ExtensionKind::Hestenes(HestenesScheme::geometric(n)?),
            ExtensionId::Ext2 => ExtensionKind::Hestenes(HestenesScheme::harmonic(n)?),
            ExtensionId::Ext3 => ExtensionKind::Hestenes(HestenesScheme::linear(n)?),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
}

/// Comma-separated numbers.
#[derive(Clone, Debug, PartialEq)]
pub struct List(pub Vec<f64>);

fn parse_list(s: &str) -> Result<List, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()
        .map(List)
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    Profile::from_str(s).map_err(|e| e.to_string())
}

/// Command-line flags. Every flag may also be given as `name = value` in
/// the file passed with `--config`; flags win over the file.
#[derive(Debug, Default, Parser)]
#[command(name = "volpot", version, about = "Convergence tables for volume potentials over [-1, 1]^n")]
pub struct Flags {
    /// key=value configuration file.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    #[arg(long)]
    pub dimension: Option<usize>,
    /// cos2, cubic, quartic, sinbump or expbump.
    #[arg(long, value_parser = parse_profile)]
    pub profile: Option<Profile>,
    /// Order M of the basis; the approximation order is 2M.
    #[arg(long)]
    pub order: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_im: Option<f64>,
    #[arg(long, value_enum)]
    pub extension: Option<ExtensionId>,
    #[arg(long)]
    pub shape_d: Option<f64>,
    #[arg(long)]
    pub radius_r: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub node_lo: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub node_hi: Option<i64>,
    /// Comma list of inverse steps.
    #[arg(long, value_parser = parse_list)]
    pub h_inv: Option<List>,
    /// Comma list of coordinates; missing trailing coordinates are zero.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    pub point: Option<List>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<std::path::PathBuf>,
    /// Leave the seconds column empty so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
    /// Evaluate quadrature nodes on one thread.
    #[arg(long)]
    pub sequential: bool,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<HashMap<String, String>, CliError> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

const CONFIG_KEYS: [&str; 19] = [
    "dimension", "profile", "order", "lambda-re", "lambda-im", "extension", "shape-d", "radius-r", "alpha",
    "beta", "tau", "node-lo", "node-hi", "h-inv", "point", "format", "output", "no-timing", "sequential",
];

/// Fully resolved table request.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub dimension: usize,
    pub profile: Profile,
    pub order: PolynomialOrder,
    pub lambda2: LambdaSquared,
    pub extension: ExtensionId,
    pub shape_d: f64,
    pub radius_r: f64,
    pub quad: QuadratureParams,
    pub h_inv: Vec<f64>,
    pub point: Vec<f64>,
    pub format: Format,
    pub output: Option<std::path::PathBuf>,
    pub timing: bool,
    pub mode: ExecutionMode,
}

fn from_file<T, E: std::fmt::Display>(
    flag: Option<T>,
    file: &HashMap<String, String>,
    key: &str,
    parse: impl Fn(&str) -> Result<T, E>,
) -> Result<Option<T>, CliError> {
    match (flag, file.get(key)) {
        (Some(v), _) => Ok(Some(v)),
        (None, Some(s)) => parse(s).map(Some).map_err(|e| usage(format!("config key {key}: {e}"))),
        (None, None) => Ok(None),
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("'{s}' is not a boolean")),
    }
}

fn parse_enum<T: ValueEnum>(s: &str) -> Result<T, String> {
    T::from_str(s, true)
}

impl RunSpec {
    /// Merges flags over an optional config map and fills defaults.
    pub fn resolve(flags: Flags, file: &HashMap<String, String>) -> Result<Self, CliError> {
        if let Some(k) = file.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            return Err(usage(format!("unknown config key '{k}'")));
        }
        let num = |s: &str| s.parse::<f64>();
        let dimension = from_file(flags.dimension, file, "dimension", str::parse)?.unwrap_or(3);
        if dimension == 0 {
            return Err(usage("dimension must be at least 1"));
        }
        let profile = from_file(flags.profile, file, "profile", parse_profile)?.unwrap_or(Profile::CosSquared);
        let m = from_file(flags.order, file, "order", str::parse)?.unwrap_or(3);
        let order = PolynomialOrder::new(m).map_err(|e| usage(e.to_string()))?;
        let re = from_file(flags.lambda_re, file, "lambda-re", num)?.unwrap_or(1.0);
        let im = from_file(flags.lambda_im, file, "lambda-im", num)?.unwrap_or(0.0);
        let lambda2 = LambdaSquared::new(re, im).map_err(|e| usage(e.to_string()))?;
        lambda2.validate_for_dim(dimension).map_err(|e| usage(e.to_string()))?;
        let extension = from_file(flags.extension, file, "extension", parse_enum)?.unwrap_or(ExtensionId::None);
        let shape_d = from_file(flags.shape_d, file, "shape-d", num)?.unwrap_or(4.0);
        let radius_r = from_file(flags.radius_r, file, "radius-r", num)?.unwrap_or(6.0);
        let base = if dimension <= 3 {
            QuadratureParams::three_dimensional()
        } else {
            QuadratureParams::high_dimensional()
        };
        let quad = QuadratureParams::new(
            from_file(flags.alpha, file, "alpha", num)?.unwrap_or(base.alpha),
            from_file(flags.beta, file, "beta", num)?.unwrap_or(base.beta),
            from_file(flags.tau, file, "tau", num)?.unwrap_or(base.tau),
            from_file(flags.node_lo, file, "node-lo", str::parse::<i64>)?.unwrap_or(base.n_lo),
            from_file(flags.node_hi, file, "node-hi", str::parse::<i64>)?.unwrap_or(base.n_hi),
        )
        .map_err(|e| usage(e.to_string()))?;
        let h_inv = from_file(flags.h_inv, file, "h-inv", parse_list)?
            .map(|l| l.0)
            .unwrap_or_else(|| vec![10.0, 20.0, 40.0, 80.0, 160.0, 320.0]);
        let point = from_file(flags.point, file, "point", parse_list)?.map(|l| l.0).unwrap_or_else(|| {
            if dimension == 3 {
                vec![0.3, 0.3, 0.0]
            } else {
                vec![0.5]
            }
        });
        let format = from_file(flags.format, file, "format", parse_enum)?.unwrap_or(Format::Csv);
        let output = from_file(flags.output, file, "output", |s| Ok::<_, String>(s.into()))?;
        let no_timing = flags.no_timing || from_file(None, file, "no-timing", parse_bool)?.unwrap_or(false);
        let sequential = flags.sequential || from_file(None, file, "sequential", parse_bool)?.unwrap_or(false);

        let spec = RunSpec {
            dimension,
            profile,
            order,
            lambda2,
            extension,
            shape_d,
            radius_r,
            quad,
            h_inv,
            point: pad_point(point, dimension)?,
            format,
            output,
            timing: !no_timing,
            mode: if sequential { ExecutionMode::Sequential } else { ExecutionMode::Parallel },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks the invariants that the flag types alone do not enforce.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.h_inv.is_empty() {
            return Err(usage("h-inv list is empty"));
        }
        if let Some(h) = self.h_inv.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(usage(format!("h-inv entry {h} must be positive")));
        }
        if !(self.shape_d > 0.0 && self.shape_d.is_finite()) {
            return Err(usage(format!("shape-d {} must be positive", self.shape_d)));
        }
        if !(self.radius_r > 0.0 && self.radius_r.is_finite()) {
            return Err(usage(format!("radius-r {} must be positive", self.radius_r)));
        }
        if self.point.len() != self.dimension {
            return Err(usage(format!("point has {} coordinates for dimension {}", self.point.len(), self.dimension)));
        }
        if let Some(x) = self.point.iter().find(|x| !(x.abs() <= 1.0)) {
            return Err(usage(format!("point coordinate {x} lies outside [-1, 1]")));
        }
        for &hi in &self.h_inv {
            for &x in &self.point {
                let k = x * hi;
                if (k - k.round()).abs() > 1e-9 * k.abs().max(1.0) {
                    return Err(usage(format!("point coordinate {x} is not a multiple of h = 1/{hi}")));
                }
            }
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<TableSetup, CliError> {
        Ok(TableSetup {
            dim: self.dimension,
            profile: self.profile,
            order: self.order,
            lambda2: self.lambda2,
            extension: self.extension.kind(self.order)?,
            d: self.shape_d,
            r: self.radius_r,
            quad: self.quad,
            point: self.point.clone(),
            mode: self.mode,
        })
    }
}

fn pad_point(mut point: Vec<f64>, n: usize) -> Result<Vec<f64>, CliError> {
    if point.len() > n {
        return Err(usage(format!("point has {} coordinates for dimension {n}", point.len())));
    }
    point.resize(n, 0.0);
    Ok(point)
}

/// Runs the table described by `spec`.
pub fn run_table(spec: &RunSpec) -> Result<Vec<ConvergenceRow>, CliError> {
    spec.validate()?;
    Ok(spec.setup()?.run(&spec.h_inv)?)
}

fn fmt_h(h: f64) -> String {
    if h.fract() == 0.0 {
        format!("{h:.0}")
    } else {
        h.to_string()
    }
}

/// Renders rows; `timing = false` leaves the seconds column empty.
pub fn render(rows: &[ConvergenceRow], format: Format, timing: bool) -> String {
    let mut out = String::new();
    let rate = |r: &ConvergenceRow| r.rate.map(|v| format!("{v:.4}")).unwrap_or_default();
    let secs = |r: &ConvergenceRow| if timing { format!("{:.3}", r.seconds) } else { String::new() };
    match format {
        Format::Csv => {
            out.push_str("h_inv,error,rate,seconds\n");
            for r in rows {
                let _ = writeln!(out, "{},{:.6e},{},{}", fmt_h(r.h_inv), r.error, rate(r), secs(r));
            }
        }
        Format::Markdown => {
            out.push_str("| h^-1 | error | rate | seconds |\n|---:|---:|---:|---:|\n");
            for r in rows {
                let _ = writeln!(out, "| {} | {:.3e} | {} | {} |", fmt_h(r.h_inv), r.error, rate(r), secs(r));
            }
        }
    }
    out
}

/// Parses flags, runs the table and writes it; returns the exit code.
pub fn run_cli(flags: Flags) -> Result<(), CliError> {
    let file = match &flags.config {
        Some(path) => parse_config(&std::fs::read_to_string(path)?)?,
        None => HashMap::new(),
    };
    let spec = RunSpec::resolve(flags, &file)?;
    let rows = run_table(&spec)?;
    let text = render(&rows, spec.format, spec.timing);
    match &spec.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
