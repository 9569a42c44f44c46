//! `pharmonic` — batch driver for the verification suites.
//!
//! Exit code 0 when every executed check passes, 1 on a failed check,
//! 2 on usage or configuration errors.

use clap::{Args, Parser, Subcommand};
use pharmonic_cli::{
    list, print_report, run_pointwise, run_profile, write_report, CliError, NodeSpec, RadiiSpec,
    RunConfig, SpaceSpec,
};

#[derive(Parser)]
#[command(name = "pharmonic", about = "Pointwise identity suites and radial energy profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run pointwise identity suites over sampled points.
    Pointwise(CommonArgs),
    /// Sample radial profiles and write CSV tables plus a JSON summary.
    Profile(CommonArgs),
    /// List catalog examples and suites.
    List,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON config file mirroring the run configuration; flags override it.
    #[arg(long)]
    config: Option<String>,
    /// Pointwise suite selector.
    #[arg(long)]
    suite: Option<String>,
    /// Example name(s); repeatable.
    #[arg(long = "example")]
    examples: Vec<String>,
    /// Space parameters: euclidean:<dim> or hyperbolic:<dim>:<kappa>.
    #[arg(long)]
    space: Option<String>,
    /// Degree and exponent: k:p.
    #[arg(long)]
    kp: Option<String>,
    /// Profile centre coordinates, comma separated.
    #[arg(long)]
    center: Option<String>,
    /// Radius grid: min:max:count[:log].
    #[arg(long)]
    radii: Option<String>,
    /// Quadrature nodes: radial:polar:azimuthal.
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output base path (writes <out>.json and, for profiles,
    /// <out>-<example>.csv).
    #[arg(long)]
    out: Option<String>,
}

fn parse_space(s: &str) -> Result<SpaceSpec, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [kind, dim] => Ok(SpaceSpec {
            kind: kind.to_string(),
            dim: dim
                .parse()
                .map_err(|_| CliError::Usage(format!("bad dimension '{dim}'")))?,
            kappa: 0.0,
        }),
        [kind, dim, kappa] => Ok(SpaceSpec {
            kind: kind.to_string(),
            dim: dim
                .parse()
                .map_err(|_| CliError::Usage(format!("bad dimension '{dim}'")))?,
            kappa: kappa
                .parse()
                .map_err(|_| CliError::Usage(format!("bad kappa '{kappa}'")))?,
        }),
        _ => Err(CliError::Usage(format!(
            "bad --space '{s}' (expected kind:dim[:kappa])"
        ))),
    }
}

fn parse_kp(s: &str) -> Result<(usize, f64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if let [k, p] = parts.as_slice() {
        let k = k
            .parse()
            .map_err(|_| CliError::Usage(format!("bad degree '{k}'")))?;
        let p = p
            .parse()
            .map_err(|_| CliError::Usage(format!("bad exponent '{p}'")))?;
        return Ok((k, p));
    }
    Err(CliError::Usage(format!("bad --kp '{s}' (expected k:p)")))
}

fn parse_radii(s: &str) -> Result<RadiiSpec, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Usage(format!("bad --radii '{s}' (expected min:max:count[:log])"));
    match parts.as_slice() {
        [min, max, count] | [min, max, count, _] => {
            let log = matches!(parts.as_slice(), [_, _, _, tag] if *tag == "log");
            if parts.len() == 4 && !log {
                return Err(bad());
            }
            Ok(RadiiSpec {
                min: min.parse().map_err(|_| bad())?,
                max: max.parse().map_err(|_| bad())?,
                count: count.parse().map_err(|_| bad())?,
                log,
            })
        }
        _ => Err(bad()),
    }
}

fn parse_nodes(s: &str) -> Result<NodeSpec, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::Usage(format!("bad --nodes '{s}' (expected radial:polar:azimuthal)"));
    if let [r, p, a] = parts.as_slice() {
        return Ok(NodeSpec {
            radial: r.parse().map_err(|_| bad())?,
            polar: p.parse().map_err(|_| bad())?,
            azimuthal: a.parse().map_err(|_| bad())?,
        });
    }
    Err(bad())
}

fn build_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config: RunConfig = match &args.config {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    if args.suite.is_some() {
        config.suite = args.suite.clone();
    }
    if !args.examples.is_empty() {
        config.examples = args.examples.clone();
    }
    if let Some(s) = &args.space {
        config.space = Some(parse_space(s)?);
    }
    if let Some(s) = &args.kp {
        config.kp = Some(parse_kp(s)?);
    }
    if let Some(s) = &args.center {
        let coords: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse()).collect();
        config.center =
            Some(coords.map_err(|_| CliError::Usage(format!("bad --center '{s}'")))?);
    }
    if let Some(s) = &args.radii {
        config.radii = Some(parse_radii(s)?);
    }
    if let Some(s) = &args.nodes {
        config.nodes = Some(parse_nodes(s)?);
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if args.out.is_some() {
        config.out = args.out.clone();
    }
    Ok(config)
}

fn run() -> Result<bool, CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", list()?);
            Ok(true)
        }
        Command::Pointwise(args) => {
            let config = build_config(&args)?;
            let report = run_pointwise(&config)?;
            print_report(&report);
            let text = write_report(&config, &report)?;
            if config.out.is_none() {
                println!("{text}");
            }
            Ok(report.pass)
        }
        Command::Profile(args) => {
            let config = build_config(&args)?;
            let (report, tables, text) = run_profile(&config)?;
            for (name, profile) in &tables {
                let skipped = profile.inconclusive_count();
                if skipped > 0 {
                    eprintln!(
                        "warning: {name}: identity check inconclusive at {skipped} of {} radii \
                         (quadrature error estimate above tolerance; raise --nodes)",
                        profile.radii.len()
                    );
                }
            }
            print_report(&report);
            if config.out.is_none() {
                println!("{text}");
            }
            Ok(report.pass)
        }
    }
}

fn main() {
    match run() {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e @ CliError::Usage(_)) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
