//! Command-line experiment runner.
//!
//! Every experiment takes the common flags plus a kind-specific set of
//! `--key value` parameters. The same keys may be given in a config file of
//! `key = value` lines; flags win over the file.

mod experiments;
mod output;
mod params;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Arg, ArgAction, ArgMatches, Command};

use params::parse_config;
pub use params::Params;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Enumerate,
    Walk,
    Fan,
    FirstHit,
    WindowMiss,
    Occupation,
    DriftVerify,
    Chernoff,
    HypCheck,
}

pub struct ParamDef {
    pub key: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn p(key: &'static str, default: Option<&'static str>, help: &'static str) -> ParamDef {
    ParamDef { key, default, help }
}

const COMMON: &[ParamDef] = &[
    p("surface", Some("L3"), "builtin name (torus, L3, octagon) or surface file"),
    p("out", Some("out"), "output directory"),
    p("seed", Some("1"), "base seed"),
    p("threads", None, "worker threads (default: available parallelism)"),
];

const ENUMERATE: &[ParamDef] = &[p("L", None, "length cutoff")];

const WALK: &[ParamDef] = &[
    p("tau", Some("2"), "step size"),
    p("delta", Some("0.5"), "exponent in V"),
    p("steps", Some("100"), "steps per walk"),
    p("trials", Some("64"), "independent walks"),
    p("s0", Some("0"), "start at g_{s0} applied to the surface"),
];

const FAN: &[ParamDef] = &[p("angles", Some("64"), "number of directions"), p("T", Some("5"), "flow time")];

const FIRST_HIT: &[ParamDef] = &[
    p("angles", Some("2048"), "number of directions"),
    p("T", Some("8"), "flow time"),
    p("l", None, "level; defaults to the stationary quantile"),
    p("quantile", Some("0.9"), "stationary quantile used when l is absent"),
    p("c", None, "drift constant c for the bound overlay"),
    p("b", None, "drift constant b for the bound overlay"),
    p("tau0", Some("2"), "tau0 for the overlay's effective rate"),
];

const WINDOW_MISS: &[ParamDef] = &[
    p("angles", Some("512"), "number of directions"),
    p("S", Some("2"), "window start"),
    p("T", Some("4"), "largest window length"),
    p("l", None, "level; defaults to the stationary quantile"),
    p("quantile", Some("0.9"), "stationary quantile used when l is absent"),
];

const OCCUPATION: &[ParamDef] = &[
    p("lambda", None, "occupation threshold in (0, 1)"),
    p("angles", Some("128"), "number of directions"),
    p("T", Some("200"), "flow time"),
    p("l", None, "level; defaults to the stationary quantile"),
    p("quantile", Some("0.9"), "stationary quantile used when l is absent"),
    p("l0", None, "lower hysteresis level; defaults to the stationary quantile"),
    p("l0-quantile", Some("0.5"), "stationary quantile used when l0 is absent"),
    p("c-prime", Some("0"), "outside sojourns up to this length are merged"),
];

const DRIFT_VERIFY: &[ParamDef] = &[
    p("chain", Some("fixture"), "fixture or walk"),
    p("l", Some("8"), "level of the compact set C_l"),
    p("n-max", Some("100"), "largest n"),
    p("trials", Some("100000"), "Monte-Carlo trials"),
    p("start", Some("7"), "fixture start state"),
    p("c", None, "override the drift constant c"),
    p("b", None, "override the drift constant b"),
    p("tau", Some("2"), "walk step size"),
    p("delta", Some("0.5"), "exponent in V"),
    p("s0", Some("3"), "walk start at g_{s0} applied to the surface"),
    p("drift-samples", Some("200"), "one-step samples per start when estimating the drift"),
];

const CHERNOFF: &[ParamDef] = &[
    p("eta", None, "outside sojourn law: exp:m, tail:a1:a2:cut, det:v, samples:x,y,..., file:path"),
    p("xi", None, "cycle length law, same forms as eta"),
    p("lambda", None, "occupation threshold in (Eeta/Exi, 1)"),
    p("theta0", None, "MGF domain limit (default: smallest theta_max)"),
    p("trials", Some("10000"), "simulated sojourn processes (0 skips simulation)"),
    p("times", Some("50,100,200"), "times T for the simulated tail"),
];

const HYP_CHECK: &[ParamDef] = &[
    p("t1", Some("15"), "first polar radius"),
    p("t2", Some("15"), "second polar radius"),
    p("eta", Some("0.05"), "tolerance in the derivative bound"),
    p("grid", Some("1024"), "grid points on [-pi/2, pi/2]"),
    p("samples", Some("1000"), "random round-trip samples"),
];

impl Kind {
    pub const ALL: [Kind; 9] = [
        Kind::Enumerate,
        Kind::Walk,
        Kind::Fan,
        Kind::FirstHit,
        Kind::WindowMiss,
        Kind::Occupation,
        Kind::DriftVerify,
        Kind::Chernoff,
        Kind::HypCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Enumerate => "enumerate",
            Kind::Walk => "walk",
            Kind::Fan => "fan",
            Kind::FirstHit => "first-hit",
            Kind::WindowMiss => "window-miss",
            Kind::Occupation => "occupation",
            Kind::DriftVerify => "drift-verify",
            Kind::Chernoff => "chernoff",
            Kind::HypCheck => "hyp-check",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            Kind::DriftVerify => &["walk-return"],
            Kind::HypCheck => &["hyperbolic-check"],
            _ => &[],
        }
    }

    fn about(self) -> &'static str {
        match self {
            Kind::Enumerate => "list saddle connections up to length L",
            Kind::Walk => "random walks X_{n+1} = g_tau r_theta X_n",
            Kind::Fan => "V along the geodesic fan g_t r_theta s0",
            Kind::FirstHit => "fraction of fan directions that have not entered C_l by time T",
            Kind::WindowMiss => "fraction of fan directions avoiding C_l on [S, S+T]",
            Kind::Occupation => "outside-occupation tail of a fan against the sojourn large-deviation rate",
            Kind::DriftVerify => "hitting-time survival against the drift bound",
            Kind::Chernoff => "large-deviation rate of an alternating sojourn process",
            Kind::HypCheck => "polar-coordinate identities and the angle-derivative bound",
        }
    }

    pub fn params(self) -> &'static [ParamDef] {
        match self {
            Kind::Enumerate => ENUMERATE,
            Kind::Walk => WALK,
            Kind::Fan => FAN,
            Kind::FirstHit => FIRST_HIT,
            Kind::WindowMiss => WINDOW_MISS,
            Kind::Occupation => OCCUPATION,
            Kind::DriftVerify => DRIFT_VERIFY,
            Kind::Chernoff => CHERNOFF,
            Kind::HypCheck => HYP_CHECK,
        }
    }

    fn flow_params(self) -> &'static [ParamDef] {
        const FLOW: &[ParamDef] = &[
            p("delta", Some("0.5"), "exponent in V = max(1, l^-(1+delta))"),
            p("dt", Some("0.05"), "flow sampling step"),
            p("s0", Some("0"), "start at g_{s0} applied to the surface"),
        ];
        const FLOW_OCC: &[ParamDef] = &[
            p("delta", Some("0.5"), "exponent in V = max(1, l^-(1+delta))"),
            p("dt", Some("0.1"), "flow sampling step"),
            p("s0", Some("0"), "start at g_{s0} applied to the surface"),
        ];
        const FLOW_HIT: &[ParamDef] = &[
            p("delta", Some("0.5"), "exponent in V = max(1, l^-(1+delta))"),
            p("dt", Some("0.05"), "flow sampling step"),
            p("s0", Some("3"), "start at g_{s0} applied to the surface"),
        ];
        match self {
            Kind::Fan | Kind::WindowMiss => FLOW,
            Kind::FirstHit => FLOW_HIT,
            Kind::Occupation => FLOW_OCC,
            _ => &[],
        }
    }

    /// Every key the kind accepts, common ones first.
    pub fn all_params(self) -> impl Iterator<Item = &'static ParamDef> {
        COMMON.iter().chain(self.params()).chain(self.flow_params())
    }

    fn from_name(name: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == name || k.aliases().contains(&name))
    }
}

fn command() -> Command {
    let mut cmd = Command::new("teich-recur")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Recurrence experiments for the SL(2,R) action on translation surfaces")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for kind in Kind::ALL {
        cmd = cmd.subcommand(subcommand(kind));
    }
    let mut run = Command::new("run").about("run an experiment by kind name").subcommand_required(true);
    for kind in Kind::ALL {
        run = run.subcommand(subcommand(kind));
    }
    cmd.subcommand(run)
}

fn subcommand(kind: Kind) -> Command {
    let mut sub = Command::new(kind.name()).about(kind.about()).visible_aliases(kind.aliases().iter().copied());
    for def in kind.all_params() {
        let help = match def.default {
            Some(d) => format!("{} [default: {d}]", def.help),
            None => def.help.to_string(),
        };
        sub = sub.arg(Arg::new(def.key).long(def.key).value_name("VALUE").help(help).allow_negative_numbers(true));
    }
    sub.arg(Arg::new("config").long("config").value_name("FILE").help("key = value file; flags override it"))
        .arg(Arg::new("plot").long("plot").action(ArgAction::SetTrue).help("also write a gnuplot script"))
}

/// Flag values override config values, which override defaults. Unknown
/// config keys and missing required keys are reported by name.
fn collect(kind: Kind, m: &ArgMatches) -> Result<Params, String> {
    let mut values = BTreeMap::new();
    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {path}: {e}"))?;
        for (key, value) in parse_config(&text)? {
            if !kind.all_params().any(|d| d.key == key) {
                return Err(format!("unknown key '{key}' for {} in {path}", kind.name()));
            }
            values.insert(key, value);
        }
    }
    for def in kind.all_params() {
        if let Some(v) = m.get_one::<String>(def.key) {
            values.insert(def.key.to_string(), v.clone());
        }
    }
    for def in kind.all_params() {
        if let Some(d) = def.default {
            values.entry(def.key.to_string()).or_insert_with(|| d.to_string());
        }
    }
    Ok(Params::new(values))
}

fn usage_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

/// Parses `args` (program name first), runs the experiment and returns the exit code.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (name, sub) = match matches.subcommand() {
        Some(("run", run)) => run.subcommand().expect("run requires a kind"),
        Some(other) => other,
        None => unreachable!("subcommand is required"),
    };
    let kind = Kind::from_name(name).expect("subcommands are built from Kind::ALL");
    let params = match collect(kind, sub) {
        Ok(p) => p,
        Err(msg) => return usage_error(msg),
    };
    if let Some(threads) = params.get_opt::<usize>("threads") {
        match threads {
            Ok(n) if n > 0 => {
                // the global pool can only be set once per process
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            Ok(_) => return usage_error("threads must be at least 1"),
            Err(e) => return usage_error(e),
        }
    }
    let out = PathBuf::from(params.raw("out").unwrap_or("out"));
    let report = match experiments::run(kind, &params) {
        Ok(r) => r,
        Err(msg) => return usage_error(msg),
    };
    if let Err(e) = output::write(&out, kind.name(), &params, &report, sub.get_flag("plot")) {
        return usage_error(e);
    }
    for (name, ok) in &report.checks {
        eprintln!("{} {name}", if *ok { "pass" } else { "FAIL" });
    }
    if report.passed() {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}
