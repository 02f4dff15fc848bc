use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use finsler_core::config::{load_config, parse_config, PointSource, RunConfig};
use finsler_core::contact::{ContactGeometry, ContactTriple, BUILTIN_TRIPLES};
use finsler_core::curvature::{flag_curvature, gram_schmidt_basis, ricci_in_basis, CurvatureSample};
use finsler_core::error::Result;
use finsler_core::geometry::Geometry;
use finsler_core::metric::BUILTIN_METRICS;
use finsler_core::point::BasePoint;
use finsler_core::report::{emit_report, text_summary, Report};
use finsler_core::suite::run_suite;

#[derive(Parser)]
#[command(name = "finsler", version, about = "Numerical checks for Finsler geometry on the pulled-back bundle")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in metric name, used when no config is given.
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of sampled points (replaces the point source).
    #[arg(long)]
    points: Option<usize>,
    /// Multiplies every tolerance.
    #[arg(long)]
    tol_scale: Option<f64>,
    /// Machine-readable output on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the check suite.
    Check {
        #[command(flatten)]
        common: Common,
        /// Report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print one quantity at one point.
    Eval {
        quantity: Quantity,
        #[command(flatten)]
        common: Common,
        /// Base point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        /// Fiber direction, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
        /// Flag edge for `flag`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        l: Vec<f64>,
    },
    /// List built-in metrics and triples.
    List {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Quantity {
    G,
    #[value(name = "A")]
    Cartan,
    #[value(name = "G", alias = "spray")]
    Spray,
    #[value(name = "N")]
    N,
    #[value(name = "gamma", alias = "Γ")]
    Gamma,
    #[value(name = "R")]
    R,
    #[value(name = "Ric")]
    Ric,
    Flag,
}

fn build_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match (&c.config, &c.metric) {
        (Some(p), _) => load_config(p)?,
        (None, Some(m)) => parse_config(&json!({ "metric": m }).to_string())?,
        (None, None) => parse_config(r#"{"metric": "heisenberg3"}"#)?,
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
        cfg.echo["cli_seed"] = json!(s);
    }
    if let Some(n) = c.points {
        if n == 0 {
            return Err(finsler_core::Error::Config("points: must be positive".into()));
        }
        cfg.points = PointSource::Sampler { count: n };
        cfg.echo["cli_points"] = json!(n);
    }
    if let Some(k) = c.tol_scale {
        if !(k.is_finite() && k > 0.0) {
            return Err(finsler_core::Error::Config("tol-scale: must be positive".into()));
        }
        cfg.tolerances = cfg.tolerances.scaled(k);
        cfg.echo["cli_tol_scale"] = json!(k);
    }
    Ok(cfg)
}

fn check(common: &Common, out: Option<PathBuf>) -> Result<bool> {
    let cfg = build_config(common)?;
    let report = Report::from_suite(&cfg, run_suite(&cfg));
    if let Some(path) = out.or_else(|| cfg.out.clone()) {
        emit_report(&report, &path)?;
    }
    if common.json {
        print!("{}", report.to_json()?);
    } else {
        print!("{}", text_summary(&report));
    }
    Ok(report.ok())
}

fn nested3(m: usize, data: &[f64]) -> Value {
    json!((0..m).map(|i| (0..m).map(|j| data[(i * m + j) * m..(i * m + j + 1) * m].to_vec()).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn eval(q: Quantity, common: &Common, x: Vec<f64>, y: Vec<f64>, l: Vec<f64>) -> Result<Value> {
    let cfg = build_config(common)?;
    let p = BasePoint::new(x, y)?;
    let geo = Geometry::new(&cfg.metric, &p, cfg.jet_order)?;
    let m = geo.m;
    let mat = |v: &Vec<Vec<finsler_core::jet::Jet>>| json!(v.iter().map(|r| r.iter().map(|j| j.value()).collect::<Vec<_>>()).collect::<Vec<_>>());
    let triple = || -> Result<ContactTriple> {
        cfg.triple.clone().ok_or_else(|| finsler_core::Error::Config("triple: none configured".into()))
    };
    let value = match q {
        Quantity::G => mat(&geo.g),
        Quantity::Cartan => nested3(m, &geo.cartan.iter().map(|j| j.value()).collect::<Vec<_>>()),
        Quantity::Spray => json!(geo.spray.iter().map(|j| j.value()).collect::<Vec<_>>()),
        Quantity::N => mat(&geo.n),
        Quantity::Gamma => nested3(m, &geo.gamma.iter().map(|j| j.value()).collect::<Vec<_>>()),
        Quantity::R => {
            let cs = CurvatureSample::at(&geo)?;
            json!((0..m).map(|j| nested3(m, &cs.r[j * m * m * m..(j + 1) * m * m * m])).collect::<Vec<_>>())
        }
        Quantity::Ric => {
            let cs = CurvatureSample::at(&geo)?;
            let basis = gram_schmidt_basis(&geo)?;
            let e = |k: usize| (0..m).map(|i| if i == k { 1.0 } else { 0.0 }).collect::<Vec<f64>>();
            let mut rows = Vec::new();
            for z in 0..m {
                rows.push((0..m).map(|x| ricci_in_basis(&geo, &cs, &e(z), &e(x), &basis)).collect::<Result<Vec<f64>>>()?);
            }
            json!(rows)
        }
        Quantity::Flag => {
            let t = triple()?;
            let cg = ContactGeometry::new(&geo, &t)?;
            let cs = CurvatureSample::at(&geo)?;
            let l = if l.is_empty() { (0..m).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect() } else { l };
            serde_json::to_value(flag_curvature(&cg, &cs, &l)?)?
        }
    };
    Ok(json!({ "metric": cfg.metric.name, "point": p, "value": value }))
}

fn list(as_json: bool) {
    if as_json {
        let v = json!({
            "metrics": BUILTIN_METRICS.iter().map(|(n, d)| json!({ "name": n, "description": d })).collect::<Vec<_>>(),
            "triples": BUILTIN_TRIPLES.iter().map(|(n, d)| json!({ "name": n, "description": d })).collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&v).expect("static data"));
        return;
    }
    println!("metrics:");
    for (n, d) in BUILTIN_METRICS {
        println!("  {n:<14} {d}");
    }
    println!("triples:");
    for (n, d) in BUILTIN_TRIPLES {
        println!("  {n:<14} {d}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Check { common, out } => check(&common, out).map(|ok| if ok { ExitCode::SUCCESS } else { ExitCode::from(1) }),
        Cmd::Eval { quantity, common, x, y, l } => eval(quantity, &common, x, y, l).map(|v| {
            if common.json {
                println!("{v}");
            } else {
                println!("{}", serde_json::to_string_pretty(&v).expect("json value"));
            }
            ExitCode::SUCCESS
        }),
        Cmd::List { json } => {
            list(json);
            Ok(ExitCode::SUCCESS)
        }
    };
    res.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
