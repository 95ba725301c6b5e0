//! `sdistance`: command-line access to the s-distance toolkit.
//!
//! Exit codes: 0 success, 1 a theorem check failed although its hypothesis
//! holds, 2 usage or input error, 3 numerical failure.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use sdistance_core::bounds::{theorem_context, Setting};
use sdistance_core::certificate::{certify, CertificateOptions, DEFAULT_CLUSTER_TOL};
use sdistance_core::embed::{
    euclidean_embeddable, spherical_embeddable, GramMatrix, MatrixFile, MatrixKind,
    SquaredDistanceMatrix, DEFAULT_TOL_PSD,
};
use sdistance_core::inverse::{invert_k, invert_s3_closed, InvertOptions};
use sdistance_core::pointset::{
    construct_johnson, load_points, NamedConfig, ProfileSummary, DEFAULT_GROUPING_TOL,
};
use sdistance_core::ratios::{analyze, AnalyzeOptions, SettingChoice};
use sdistance_core::search::{catalog_report, enumerate_tuples, realize_catalog};
use sdistance_core::Error;

#[derive(Parser)]
#[command(name = "sdistance", version, about = "Integrality certificates and distance catalogs for s-distance sets")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Tolerance for grouping distances into classes
    #[arg(long, global = true, default_value_t = DEFAULT_GROUPING_TOL)]
    tol: f64,
    /// Distance from the nearest integer accepted as integral
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol_int: f64,
    /// Relative singular value cutoff for numeric rank
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol_rank: f64,
    /// Indent JSON output
    #[arg(long, global = true)]
    json_pretty: bool,
    /// Seed for randomized runs (no subcommand currently draws random numbers)
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output to a file instead of stdout
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a bundled configuration and write it as a point file
    Construct {
        #[arg(value_enum)]
        config: ConfigName,
        #[arg(short = 'd')]
        d: Option<usize>,
        #[arg(short = 's')]
        s: Option<usize>,
    },
    /// Distance and inner-product profile of a point file
    Profile { file: PathBuf },
    /// Ratio values and their integrality for each applicable theorem
    Ratios {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = SettingArg::Auto)]
        setting: SettingArg,
        /// Report every applicable family, not only the most specific one
        #[arg(long)]
        all: bool,
    },
    /// Build indicator matrices and check their rank and spectrum
    Certify {
        file: PathBuf,
        /// One-based class index, or `all`
        #[arg(long, default_value = "all")]
        class: String,
        #[arg(long, value_enum, default_value_t = SettingArg::Auto)]
        setting: SettingArg,
        #[arg(long)]
        all: bool,
    },
    /// Recover normalized squared distances from ratios k_1..k_{s-1}
    Invert {
        #[arg(short = 's')]
        s: usize,
        /// Comma-separated ratios
        #[arg(short = 'k', value_delimiter = ',', allow_hyphen_values = true, required = true)]
        k: Vec<f64>,
    },
    /// List the admissible ratio tuples for (d, s)
    Enumerate {
        #[arg(short = 'd')]
        d: u64,
        #[arg(short = 's')]
        s: u64,
        /// Invert every tuple
        #[arg(long)]
        realize: bool,
        #[arg(long, default_value_t = 10_000_000)]
        cap: u128,
    },
    /// Decide whether a squared-distance or Gram matrix is realizable in R^d
    EmbedCheck {
        file: PathBuf,
        #[arg(short = 'd')]
        d: usize,
    },
    /// Dimension, cardinality threshold and ratio bound of a theorem
    Bounds {
        #[arg(long, value_enum)]
        setting: BoundsSetting,
        #[arg(short = 'd')]
        d: u64,
        #[arg(short = 's')]
        s: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ConfigName {
    Johnson,
    CrossPolytope,
    Simplex,
    Hypercube,
    E8,
    Pentagon,
    Icosahedron,
}

#[derive(Clone, Copy, ValueEnum)]
enum SettingArg {
    Auto,
    Euclidean,
    Spherical,
    Antipodal,
}

impl From<SettingArg> for SettingChoice {
    fn from(s: SettingArg) -> Self {
        match s {
            SettingArg::Auto => SettingChoice::Auto,
            SettingArg::Euclidean => SettingChoice::Euclidean,
            SettingArg::Spherical => SettingChoice::Spherical,
            SettingArg::Antipodal => SettingChoice::Antipodal,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum BoundsSetting {
    Euclidean,
    Spherical,
    AntipodalOddV1,
    AntipodalOddV2,
    AntipodalEvenV1,
    AntipodalEvenV2,
}

impl From<BoundsSetting> for Setting {
    fn from(s: BoundsSetting) -> Self {
        match s {
            BoundsSetting::Euclidean => Setting::Euclidean,
            BoundsSetting::Spherical => Setting::Spherical,
            BoundsSetting::AntipodalOddV1 => Setting::AntipodalOddV1,
            BoundsSetting::AntipodalOddV2 => Setting::AntipodalOddV2,
            BoundsSetting::AntipodalEvenV1 => Setting::AntipodalEvenV1,
            BoundsSetting::AntipodalEvenV2 => Setting::AntipodalEvenV2,
        }
    }
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

/// What a command produced: a JSON report, or verbatim text (point files).
enum Output {
    Report { value: Value, violated: bool },
    Text(String),
}

fn report<T: Serialize>(value: &T, violated: bool) -> Output {
    Output::Report {
        value: serde_json::to_value(value).expect("report types serialize"),
        violated,
    }
}

/// Round every non-integer number to 12 significant digits.
fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
            *v = json!(rounded);
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let g = &cli.global;
    match &cli.command {
        Command::Construct { config, d, s } => {
            let x = match config {
                ConfigName::Johnson => {
                    let (d, s) = d.zip(*s).ok_or_else(|| Failure::Usage("johnson needs -d and -s".into()))?;
                    construct_johnson(d, s)?
                }
                other => {
                    let name = match other {
                        ConfigName::CrossPolytope => "cross-polytope",
                        ConfigName::Simplex => "simplex",
                        ConfigName::Hypercube => "hypercube",
                        ConfigName::E8 => "e8",
                        ConfigName::Pentagon => "pentagon",
                        ConfigName::Icosahedron => "icosahedron",
                        ConfigName::Johnson => unreachable!(),
                    };
                    NamedConfig::parse(name, *d)?.build()?
                }
            };
            Ok(Output::Text(x.to_json_string()))
        }
        Command::Profile { file } => {
            let x = load_points(file)?;
            Ok(report(&ProfileSummary::compute(&x, g.tol)?, false))
        }
        Command::Ratios { file, setting, all } => {
            let x = load_points(file)?;
            let opts = AnalyzeOptions {
                setting: (*setting).into(),
                all: *all,
                tol_group: g.tol,
                tol_int: g.tol_int,
            };
            let analysis = analyze(&x, &opts)?;
            Ok(report(&analysis, analysis.theorem_violated()))
        }
        Command::Certify {
            file,
            class,
            setting,
            all,
        } => {
            let class = match class.as_str() {
                "all" => None,
                c => Some(
                    c.parse::<usize>()
                        .map_err(|_| Failure::Usage(format!("--class expects an index or `all`, got `{c}`")))?,
                ),
            };
            let x = load_points(file)?;
            let opts = CertificateOptions {
                tol_rank: g.tol_rank,
                cluster_tol: DEFAULT_CLUSTER_TOL,
                tol_int: g.tol_int,
            };
            let c = certify(&x, (*setting).into(), *all, class, g.tol, &opts)?;
            Ok(report(&c, c.violated()))
        }
        Command::Invert { s, k } => {
            if k.len() + 1 != *s {
                return Err(Failure::Usage(format!("-s {s} needs {} ratios, got {}", s - 1, k.len())));
            }
            let mut out = serde_json::Map::new();
            if *s == 3 {
                match invert_s3_closed(k[0], k[1]) {
                    Ok(cf) => {
                        out.insert("closed_form".into(), serde_json::to_value(cf).expect("serializes"));
                    }
                    Err(e) => {
                        out.insert("closed_form_error".into(), json!(e.to_string()));
                    }
                }
            }
            let inv = invert_k(k, &InvertOptions::default())?;
            out.insert("newton".into(), serde_json::to_value(inv).expect("serializes"));
            Ok(Output::Report {
                value: Value::Object(out),
                violated: false,
            })
        }
        Command::Enumerate { d, s, realize, cap } => {
            let mut catalog = enumerate_tuples(*d, *s, *cap)?;
            if *realize {
                catalog = realize_catalog(catalog);
            }
            let summary = catalog_report(&catalog);
            eprintln!("{summary}");
            Ok(report(&json!({ "catalog": catalog, "summary": summary }), false))
        }
        Command::EmbedCheck { file, d } => {
            let text = std::fs::read_to_string(file).map_err(Error::from)?;
            let mf = MatrixFile::from_json_str(&text)?;
            let m = mf.to_matrix()?;
            let verdict = match mf.kind {
                MatrixKind::SquaredDistance => {
                    euclidean_embeddable(&SquaredDistanceMatrix::new(m)?, *d, DEFAULT_TOL_PSD)?
                }
                MatrixKind::Gram => spherical_embeddable(&GramMatrix::new(m)?, *d, DEFAULT_TOL_PSD)?,
            };
            Ok(report(&verdict, false))
        }
        Command::Bounds { setting, d, s } => Ok(report(&theorem_context((*setting).into(), *d, *s)?, false)),
    }
}

fn emit(text: &str, output: Option<&PathBuf>) -> std::io::Result<()> {
    match output {
        Some(path) => std::fs::write(path, format!("{text}\n")),
        None => {
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other,
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let output = cli.global.output.as_ref();
    let (text, code) = match run(&cli) {
        Ok(Output::Text(text)) => (text, 0),
        Ok(Output::Report { mut value, violated }) => {
            round_floats(&mut value);
            let text = if cli.global.json_pretty {
                serde_json::to_string_pretty(&value)
            } else {
                serde_json::to_string(&value)
            }
            .expect("JSON value serializes");
            (text, if violated { 1 } else { 0 })
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_numerical() { 3 } else { 2 });
        }
    };
    if let Err(e) = emit(&text, output) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(2);
    }
    if code == 1 {
        eprintln!("a theorem check failed although its hypothesis holds");
    }
    ExitCode::from(code)
}
