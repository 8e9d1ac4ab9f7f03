use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use symbandit::harness::output::{self, Series};
use symbandit::harness::validate::{validate, Suite, ValidateOptions};
use symbandit::harness::{self, ExperimentConfig, ExperimentRecord};
use symbandit::partition::{count_partitions, enumerate_partitions_capped, DEFAULT_ENUMERATION_CAP};
use symbandit::rng::{self, standard_normal};
use symbandit::subspace::{rip_constant, SubspaceModel};
use symbandit::{Error, Partition, PartitionClass};

#[derive(Parser)]
#[command(name = "symbandit", version, about = "Symmetric linear bandit simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm on one seed.
    Run(ExperimentArgs),
    /// Run one or more algorithms over a list of seeds.
    Sweep(ExperimentArgs),
    /// Render median/IQR regret curves from sweep CSV files.
    Plot(PlotArgs),
    /// Run a statistical validation suite.
    Validate(ValidateArgs),
    /// Count or list the partitions of a class.
    Enumerate(EnumerateArgs),
    /// Restricted isometry constant of a design over a set of models.
    Rip(RipArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    d0: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long = "T", alias = "horizon")]
    horizon: Option<String>,
    /// Algorithm name; `sweep` accepts a comma-separated list.
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    selector: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `a..b`, `a..=b` or a comma list.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    t1: Option<String>,
    #[arg(long)]
    t2: Option<String>,
    #[arg(long)]
    eps0: Option<String>,
    #[arg(long)]
    stride: Option<String>,
    #[arg(long)]
    parallelism: Option<String>,
    /// Any other config key, as `key=value`; applied last, in order.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional SVG plot path.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV files written by `run` or `sweep`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// counts, rip, selection, lemma1, regret_slope or all.
    suite: String,
    /// Trials per setting; defaults to the full-size settings.
    #[arg(long)]
    seeds: Option<usize>,
    /// Exit with status 1 when a check fails.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value = "all")]
    class: String,
    #[arg(long)]
    max_blocks: Option<usize>,
    /// Print every partition.
    #[arg(long)]
    list: bool,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u128,
}

#[derive(Args)]
struct RipArgs {
    /// Design matrix as CSV rows; a Gaussian design scaled by 1/sqrt(n) when absent.
    #[arg(long)]
    design: Option<PathBuf>,
    /// Models in `|` notation separated by `;`; random models when absent.
    #[arg(long)]
    models: Option<String>,
    #[arg(long, default_value_t = 20)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    blocks: usize,
    #[arg(long, default_value_t = 2)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a, false),
        Command::Sweep(a) => cmd_run(a, true),
        Command::Plot(a) => cmd_plot(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Rip(a) => cmd_rip(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Config { .. } | Error::InvalidPhase { .. }) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn build_config(a: &ExperimentArgs) -> symbandit::Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let flags = [
        ("d", &a.d),
        ("d0", &a.d0),
        ("sigma", &a.sigma),
        ("T", &a.horizon),
        ("class", &a.class),
        ("selector", &a.selector),
        ("seed", &a.seed),
        ("seeds", &a.seeds),
        ("t1", &a.t1),
        ("t2", &a.t2),
        ("eps0", &a.eps0),
        ("stride", &a.stride),
        ("parallelism", &a.parallelism),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    for pair in &a.set {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::config("set", format!("expected KEY=VALUE, got {pair:?}")))?;
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

fn algorithms(a: &ExperimentArgs, cfg: &ExperimentConfig) -> symbandit::Result<Vec<ExperimentConfig>> {
    let names = match &a.algorithm {
        Some(list) => list.split(',').map(str::to_string).collect(),
        None => vec![cfg.algorithm.to_string()],
    };
    names
        .iter()
        .map(|name| {
            let mut c = cfg.clone();
            c.set("algorithm", name)?;
            c.validate()?;
            Ok(c)
        })
        .collect()
}

fn describe(r: &ExperimentRecord) -> String {
    format!(
        "algorithm={} seed={} final_regret={} phase_boundary={} selected={} truth={} estimate_error={} wall_time_ms={}{}",
        r.algorithm,
        r.seed,
        r.final_regret(),
        r.phase_boundary,
        r.selected_partition.as_ref().map_or_else(|| "-".to_string(), Partition::to_string),
        r.true_partition,
        r.estimate_error.map_or_else(|| "-".to_string(), |e| e.to_string()),
        r.wall_time_ms,
        if r.warnings.is_empty() {
            String::new()
        } else {
            format!(" warnings={:?}", r.warnings)
        }
    )
}

fn cmd_run(a: ExperimentArgs, is_sweep: bool) -> symbandit::Result<ExitCode> {
    let base = build_config(&a)?;
    let configs = algorithms(&a, &base)?;
    if !is_sweep && configs.len() != 1 {
        return Err(Error::config("algorithm", "`run` takes a single algorithm"));
    }
    let mut records = Vec::new();
    let mut failed = false;
    for cfg in &configs {
        if is_sweep {
            let result = harness::sweep(cfg, &cfg.seeds, cfg.parallelism)?;
            for (seed, e) in &result.failures {
                eprintln!("seed {seed} failed ({}): {e}", cfg.algorithm);
                failed = true;
            }
            records.extend(result.records);
        } else {
            records.push(harness::run_experiment(cfg)?);
        }
    }
    if is_sweep {
        print!("{}", harness::format_summary(&harness::summarize(&records)));
    } else {
        println!("{}", describe(&records[0]));
    }
    if let Some(path) = &a.out {
        if !records.is_empty() {
            output::emit_csv(&records, path)?;
        }
    }
    if let Some(path) = &a.svg {
        if !records.is_empty() {
            output::render_svg_records(&records, path)?;
        }
    }
    Ok(if failed && records.is_empty() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_plot(a: PlotArgs) -> symbandit::Result<ExitCode> {
    let mut series: Vec<Series> = Vec::new();
    for path in &a.inputs {
        series.extend(output::read_csv(path)?);
    }
    output::write_svg(&series, &a.out)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(a: ValidateArgs) -> symbandit::Result<ExitCode> {
    let suites: Vec<Suite> = if a.suite.trim().eq_ignore_ascii_case("all") {
        Suite::ALL.to_vec()
    } else {
        vec![a
            .suite
            .parse()
            .map_err(|e: Error| Error::config("suite", e.to_string()))?]
    };
    let opts = ValidateOptions { seeds: a.seeds };
    let mut all_passed = true;
    for suite in suites {
        let report = validate(suite, &opts)?;
        all_passed &= report.passed();
        print!("{}", report.to_text());
    }
    Ok(if a.strict && !all_passed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_enumerate(a: EnumerateArgs) -> symbandit::Result<ExitCode> {
    let class: PartitionClass = a
        .class
        .parse()
        .map_err(|e: Error| Error::config("class", e.to_string()))?;
    if a.d == 0 {
        return Err(Error::config("d", "must be at least 1"));
    }
    let max_blocks = a.max_blocks.unwrap_or(a.d);
    if max_blocks == 0 || max_blocks > a.d {
        return Err(Error::config("max_blocks", format!("must lie in [1, d={}]", a.d)));
    }
    println!("k,count");
    let mut total: u128 = 0;
    for k in 1..=max_blocks {
        let c = count_partitions(a.d, k, class)?;
        total = total.saturating_add(c);
        println!("{k},{c}");
    }
    println!("total,{total}");
    if a.list {
        for p in enumerate_partitions_capped(a.d, class, max_blocks, a.cap)? {
            println!("{p}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_matrix(path: &PathBuf) -> symbandit::Result<nalgebra::DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Error::config("design", format!("bad row {l:?}")))
        })
        .collect::<symbandit::Result<_>>()?;
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::config("design", "rows must be nonempty and of equal length"));
    }
    Ok(nalgebra::DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn cmd_rip(a: RipArgs) -> symbandit::Result<ExitCode> {
    let mut r = rng::stream(a.seed, 2);
    let design = match &a.design {
        Some(path) => read_matrix(path)?,
        None => {
            if a.n == 0 || a.d == 0 {
                return Err(Error::config("n", "n and d must be positive"));
            }
            let scale = 1.0 / (a.n as f64).sqrt();
            nalgebra::DMatrix::from_fn(a.n, a.d, |_, _| standard_normal(&mut r) * scale)
        }
    };
    let d = design.ncols();
    let models: Vec<SubspaceModel> = match &a.models {
        Some(list) => list
            .split(';')
            .map(|s| {
                s.parse::<Partition>()
                    .map(SubspaceModel::new)
                    .map_err(|e| Error::config("models", e.to_string()))
            })
            .collect::<symbandit::Result<_>>()?,
        None => {
            if a.blocks == 0 || a.blocks > d {
                return Err(Error::config("blocks", format!("must lie in [1, d={d}]")));
            }
            (0..a.count)
                .map(|_| {
                    symbandit::env::random_partition(d, a.blocks, PartitionClass::All, &mut r).map(SubspaceModel::new)
                })
                .collect::<symbandit::Result<_>>()?
        }
    };
    if let Some(m) = models.iter().find(|m| m.d() != d) {
        return Err(Error::config(
            "models",
            format!("model on {} coordinates, design has {d}", m.d()),
        ));
    }
    let delta = rip_constant(&design, &models)?;
    for m in &models {
        println!("model {}", m.partition());
    }
    println!("delta {delta}");
    Ok(ExitCode::SUCCESS)
}
