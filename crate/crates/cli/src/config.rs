use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Arg, ArgMatches, Command};

use final_iterate::convex1d::Convex1d;
use final_iterate::lower_bounds::Family;
use final_iterate::montecarlo::{Shape, StartPoint};
use final_iterate::walk1d::StationaryMethod;

use crate::error::{CliError, Result};

/// Environment variable consulted for the worker count when `--jobs` is absent.
pub const JOBS_ENV: &str = "FINAL_ITERATE_JOBS";

const COMMON: &[(&str, &str)] = &[
    ("out", "write the result here instead of stdout"),
    ("format", "csv or json"),
    ("seed", "random seed (default 0)"),
    ("jobs", "worker threads (default: $FINAL_ITERATE_JOBS, else one per core)"),
];

const INSTANCE: &[(&str, &str)] = &[
    ("family", "sc, lip-dec or lip-fixed"),
    ("d", "dimension"),
    ("T", "horizon"),
];

fn keys(command: &str) -> Vec<(&'static str, &'static str)> {
    let extra: &[(&str, &str)] = match command {
        "lowerbound" => &[("dump", "also write the instance vectors h_i as CSV to this path")],
        "verify" => &[("tol", "trajectory tolerance (default 1e-9)")],
        "certify" => &[("samples", "sampled pairs (default 10000)")],
        "walk" => &[
            ("n", "grid size, T = n^2"),
            ("profile", "linear:S, quadratic, huber:D, power:P or piecewise:K1;K2|S0;S1;S2"),
            ("method", "closed_form, linear_solve or power_iteration"),
        ],
        "mc" => &[
            ("shape", "abs, asym_abs:RATIO or piecewise:K1;K2|S0;S1;S2"),
            ("D", "diameter, the domain is [-D/2, D/2] (default 1)"),
            ("G", "oracle bound (default 1)"),
            ("eps", "epsilon in (0, 1] (default 1)"),
            ("c", "band constant in (0, 1] (default 1)"),
            ("T", "horizon"),
            ("trials", "number of paths (default 10000)"),
            ("x0", "start point, or `uniform` (default)"),
            ("bound-constant", "fail unless mean <= C GD/sqrt(T)"),
        ],
        "sweep" => &[
            ("tol", "trajectory tolerance (default 1e-9)"),
            ("curve", "also write (x, final_suboptimality, bound) rows to this path"),
            ("axis", "x axis of the curve, d or T (default d)"),
        ],
        _ => &[],
    };
    let mut out: Vec<_> = COMMON.to_vec();
    if matches!(command, "lowerbound" | "verify" | "certify" | "sweep") {
        out.extend_from_slice(INSTANCE);
    }
    out.extend_from_slice(extra);
    out
}

const COMMANDS: &[(&str, &str)] = &[
    ("lowerbound", "run the engine on an adversarial instance and check the final-iterate bound"),
    ("verify", "check the engine trajectory against the closed form"),
    ("certify", "sample the Lipschitz and strong-convexity certificates"),
    ("walk", "stationary distribution of the +-1 grid walk"),
    ("mc", "Monte Carlo paths on a nearly linear instance"),
    ("sweep", "lower bounds over lists of families, dimensions and horizons"),
];

/// The command-line grammar.
pub fn cli() -> Command {
    let subcommands = COMMANDS.iter().map(|&(name, about)| {
        let args = keys(name).into_iter().map(|(key, help)| {
            let arg = Arg::new(key).long(key).value_name(key).help(help);
            if key == "T" {
                arg.visible_alias("horizon")
            } else {
                arg
            }
        });
        Command::new(name)
            .about(about)
            .arg(Arg::new("config").long("config").value_name("FILE").help("flat key=value file, flags win"))
            .args(args)
    });
    Command::new("final-iterate")
        .about("Final-iterate lower bounds, stationary walks and Monte Carlo experiments")
        .after_help(
            "Lists such as --d accept `1,2,4,...,64`: three or more leading terms fix the progression, \
             two leading terms are read as geometric when that reaches the end, else arithmetic.\n\
             Exit status: 0 all checks pass, 1 a check failed, 2 usage error, 3 i/o error.",
        )
        .subcommand_required(true)
        .subcommands(subcommands)
}

/// Reads a flat `key = value` file. Blank lines and `#` comments are skipped.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    parse_config_text(&std::fs::read_to_string(path)?)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", lineno + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

/// Expands `a,b,c` lists with an optional `...` before the last term.
pub fn expand_list(s: &str) -> Result<Vec<usize>> {
    let bad = || CliError::Usage(format!("bad list `{s}`"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let Some(pos) = parts.iter().position(|p| *p == "...") else {
        return parts.iter().map(|p| p.parse().map_err(|_| bad())).collect();
    };
    if pos + 2 != parts.len() || pos < 2 {
        return Err(bad());
    }
    let head: Vec<usize> = parts[..pos].iter().map(|p| p.parse().map_err(|_| bad())).collect::<Result<_>>()?;
    let end: usize = parts[pos + 1].parse().map_err(|_| bad())?;
    let (a, b) = (head[0], head[1]);
    let geometric = a > 0 && b > a && b % a == 0 && head.windows(2).all(|w| w[1] == w[0] * (b / a));
    let arithmetic = b > a && head.windows(2).all(|w| w[1] - w[0] == b - a);
    let walk = |next: &dyn Fn(usize) -> usize| {
        let mut out = vec![a];
        while *out.last().unwrap() < end {
            let v = next(*out.last().unwrap());
            out.push(v);
        }
        (out.last() == Some(&end)).then_some(out)
    };
    let ratio = b.checked_div(a).unwrap_or(0);
    let step = b.saturating_sub(a);
    let as_geometric = || if geometric { walk(&|v| v * ratio) } else { None };
    let as_arithmetic = || if arithmetic { walk(&|v| v + step) } else { None };
    let found = if head.len() == 2 {
        as_geometric().or_else(as_arithmetic)
    } else if geometric {
        as_geometric()
    } else {
        as_arithmetic()
    };
    found.ok_or_else(|| CliError::Usage(format!("list `{s}` does not reach {end}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(CliError::Usage(format!("format must be csv or json, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    D,
    T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    LowerBound { family: Family, d: usize, horizon: usize, dump: Option<PathBuf> },
    Verify { family: Family, d: usize, horizon: usize, tol: f64 },
    Certify { family: Family, d: usize, horizon: usize, samples: usize },
    Walk { n: usize, profile: Convex1d, method: StationaryMethod },
    Mc {
        shape: Shape,
        diameter: f64,
        g: f64,
        epsilon: f64,
        c: f64,
        horizon: usize,
        trials: usize,
        start: StartPoint,
        bound_constant: Option<f64>,
    },
    Sweep {
        families: Vec<Family>,
        d: Vec<usize>,
        horizons: Vec<usize>,
        tol: f64,
        curve: Option<(PathBuf, Axis)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub jobs: Option<usize>,
}

struct Values<'a> {
    map: &'a BTreeMap<String, String>,
}

impl Values<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.raw(key).ok_or_else(|| CliError::Usage(format!("missing --{key}")))
    }

    fn parse<T: FromStr>(&self, key: &str, default: Option<T>) -> Result<T> {
        match self.raw(key) {
            Some(v) => v.parse().map_err(|_| CliError::Usage(format!("bad value `{v}` for --{key}"))),
            None => default.ok_or_else(|| CliError::Usage(format!("missing --{key}"))),
        }
    }

    fn family(&self) -> Result<Family> {
        let v = self.required("family")?;
        v.parse().map_err(|_| CliError::Usage(format!("unknown family `{v}`")))
    }
}

impl ExperimentConfig {
    /// Builds a typed config from the flat key map of one subcommand.
    pub fn from_values(command: &str, map: &BTreeMap<String, String>) -> Result<Self> {
        let allowed: Vec<&str> = keys(command).iter().map(|k| k.0).collect();
        if allowed.len() == COMMON.len() {
            return Err(CliError::Usage(format!("unknown command `{command}`")));
        }
        if let Some(k) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(CliError::Usage(format!("`{k}` is not an option of {command}")));
        }
        let v = Values { map };
        let default_format = match command {
            "verify" | "certify" | "walk" => Format::Json,
            _ => Format::Csv,
        };
        let experiment = match command {
            "lowerbound" => Experiment::LowerBound {
                family: v.family()?,
                d: v.parse("d", None)?,
                horizon: v.parse("T", None)?,
                dump: v.raw("dump").map(PathBuf::from),
            },
            "verify" => Experiment::Verify {
                family: v.family()?,
                d: v.parse("d", None)?,
                horizon: v.parse("T", None)?,
                tol: v.parse("tol", Some(1e-9))?,
            },
            "certify" => Experiment::Certify {
                family: v.family()?,
                d: v.parse("d", None)?,
                horizon: v.parse("T", None)?,
                samples: v.parse("samples", Some(10_000))?,
            },
            "walk" => Experiment::Walk {
                n: v.parse("n", None)?,
                profile: v.parse("profile", Some(Convex1d::HalfSquare))?,
                method: v.parse("method", Some(StationaryMethod::ClosedForm))?,
            },
            "mc" => Experiment::Mc {
                shape: v.parse("shape", Some(Shape::Abs))?,
                diameter: v.parse("D", Some(1.0))?,
                g: v.parse("G", Some(1.0))?,
                epsilon: v.parse("eps", Some(1.0))?,
                c: v.parse("c", Some(1.0))?,
                horizon: v.parse("T", None)?,
                trials: v.parse("trials", Some(10_000))?,
                start: match v.raw("x0") {
                    None | Some("uniform") => StartPoint::Uniform,
                    Some(_) => StartPoint::Fixed(v.parse("x0", None)?),
                },
                bound_constant: v.raw("bound-constant").map(|_| v.parse("bound-constant", None)).transpose()?,
            },
            "sweep" => {
                let families = v
                    .required("family")?
                    .split(',')
                    .map(|f| f.trim().parse().map_err(|_| CliError::Usage(format!("unknown family `{f}`"))))
                    .collect::<Result<Vec<Family>>>()?;
                let d = expand_list(v.required("d")?)?;
                let horizons = expand_list(v.required("T")?)?;
                if let Some((d, t)) = d.iter().flat_map(|&d| horizons.iter().map(move |&t| (d, t))).find(|(d, t)| d > t) {
                    return Err(CliError::Usage(format!("d = {d} exceeds T = {t}")));
                }
                let axis = match v.raw("axis").unwrap_or("d") {
                    "d" => Axis::D,
                    "T" => Axis::T,
                    other => return Err(CliError::Usage(format!("axis must be d or T, got `{other}`"))),
                };
                Experiment::Sweep {
                    families,
                    d,
                    horizons,
                    tol: v.parse("tol", Some(1e-9))?,
                    curve: v.raw("curve").map(|p| (PathBuf::from(p), axis)),
                }
            }
            _ => unreachable!("checked above"),
        };
        let jobs = match v.raw("jobs") {
            Some(_) => Some(v.parse("jobs", None)?),
            None => match std::env::var(JOBS_ENV) {
                Ok(s) => Some(s.trim().parse().map_err(|_| CliError::Usage(format!("bad {JOBS_ENV} `{s}`")))?),
                Err(_) => None,
            },
        };
        Ok(Self {
            experiment,
            out: v.raw("out").map(PathBuf::from),
            format: v.parse("format", Some(default_format))?,
            seed: v.parse("seed", Some(0))?,
            jobs,
        })
    }

    /// Typed config from parsed arguments, with the `--config` file merged
    /// underneath the flags.
    pub fn from_matches(matches: &ArgMatches) -> Result<Self> {
        let (command, sub) = matches.subcommand().expect("subcommand is required");
        let mut map = match sub.get_one::<String>("config") {
            Some(path) => parse_config_file(Path::new(path))?,
            None => BTreeMap::new(),
        };
        for (key, _) in keys(command) {
            if let Some(value) = sub.get_one::<String>(key) {
                map.insert(key.to_string(), value.clone());
            }
        }
        Self::from_values(command, &map)
    }
}
