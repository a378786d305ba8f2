use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use elflow::barrier::{barrier_constants, BarrierConfig, BarrierConstants};
use elflow::curve::write_curve_csv;
use elflow::elastica::{enumerate_low_energy, figure_eight, write_catalogue_row, ElasticaClass, CATALOGUE_HEADER};
use elflow::experiments::{
    ell_grid, render_report, run_theorem_experiment, sweep_ell, PerturbMode, ScenarioConfig, SUMMARY_FILE,
};

#[derive(Parser)]
#[command(name = "elflow", version, about = "Pinned elastic flows: stationary solutions, energy barrier and migration runs")]
struct Cli {
    /// Root directory for all output files.
    #[arg(long, global = true, env = "ELFLOW_OUTPUT", default_value = "elflow-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stationary solutions of the pinned problem.
    #[command(subcommand)]
    Elastica(ElasticaCmd),
    /// Constants of the half-fold figure-eight.
    FigureEight,
    /// Constrained minimal energy m(ell, r).
    #[command(subcommand)]
    Barrier(BarrierCmd),
    /// Flow runs driven by a configuration file.
    #[command(subcommand)]
    Flow(FlowCmd),
    /// Perturb the upper loop and follow the flow.
    Migrate(MigrateArgs),
    /// Migration runs over a grid of endpoint distances.
    Sweep(SweepArgs),
}

#[derive(Subcommand)]
enum ElasticaCmd {
    /// One family of the catalogue, both orientations.
    Solve {
        #[arg(long)]
        ell: f64,
        #[arg(long, value_enum)]
        family: Family,
    },
    /// Every solution found at one endpoint distance.
    Atlas {
        #[arg(long)]
        ell: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Seg,
    Arc,
    Loop,
}

impl Family {
    fn classes(self) -> &'static [ElasticaClass] {
        match self {
            Family::Seg => &[ElasticaClass::Segment],
            Family::Arc => &[ElasticaClass::ArcPlus, ElasticaClass::ArcMinus],
            Family::Loop => &[ElasticaClass::LoopPlus, ElasticaClass::LoopMinus],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Family::Seg => "seg",
            Family::Arc => "arc",
            Family::Loop => "loop",
        }
    }
}

#[derive(Subcommand)]
enum BarrierCmd {
    /// Fill an (ell, r) grid and derive the barrier constants.
    Map {
        #[arg(long)]
        ell_max: f64,
        /// Grid points along each axis.
        #[arg(long, default_value_t = 10)]
        res: usize,
        /// Angle resolution of each minimization.
        #[arg(long, default_value_t = 512)]
        m: usize,
        /// r ranges over [r_min_factor, r_max_factor] times r_*.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        r_min_factor: f64,
        #[arg(long, default_value_t = 1.0)]
        r_max_factor: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum FlowCmd {
    /// Run one experiment described by a JSON scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct MigrateArgs {
    #[arg(long)]
    ell: f64,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value = "hessian", value_parser = parse_mode)]
    mode: PerturbMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Number of edges.
    #[arg(long, default_value_t = 256)]
    nodes: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    ell_min: f64,
    #[arg(long)]
    ell_max: f64,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long, default_value = "hessian", value_parser = parse_mode)]
    mode: PerturbMode,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 256)]
    nodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_mode(s: &str) -> std::result::Result<PerturbMode, String> {
    PerturbMode::parse(s).ok_or_else(|| format!("unknown mode {s:?} (expected hessian, bump or up)"))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Elastica(ElasticaCmd::Solve { ell, family }) => elastica_solve(&cli.out, ell, family),
        Command::Elastica(ElasticaCmd::Atlas { ell }) => elastica_atlas(&cli.out, ell),
        Command::FigureEight => figure_eight_cmd(&cli.out),
        Command::Barrier(BarrierCmd::Map {
            ell_max,
            res,
            m,
            r_min_factor,
            r_max_factor,
            seed,
        }) => barrier_map(
            &cli.out,
            &BarrierConfig {
                ell_max,
                ell_points: res,
                r_points: res,
                r_min_factor,
                r_max_factor,
                resolution: m,
                rng_seed: seed,
            },
        ),
        Command::Flow(FlowCmd::Run { config }) => flow_run(&cli.out, &config),
        Command::Migrate(args) => migrate(&cli.out, &args),
        Command::Sweep(args) => sweep(&cli.out, &args),
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn elastica_solve(out: &Path, ell: f64, family: Family) -> Result<()> {
    let cat = enumerate_low_energy(ell)?;
    let dir = out.join(format!("elastica_{}_{ell}", family.name()));
    let mut table = create(&dir.join("solutions.csv"))?;
    let stdout = io::stdout();
    let mut so = stdout.lock();
    writeln!(table, "{CATALOGUE_HEADER}")?;
    writeln!(so, "{CATALOGUE_HEADER}")?;
    for &class in family.classes() {
        let sol = cat.get(class).with_context(|| format!("{class} missing from the catalogue"))?;
        write_catalogue_row(&mut table, sol)?;
        write_catalogue_row(&mut so, sol)?;
        write_curve_csv(sol.curve(), create(&dir.join(format!("{}.csv", file_stem(class))))?)?;
    }
    table.flush()?;
    Ok(())
}

fn elastica_atlas(out: &Path, ell: f64) -> Result<()> {
    let cat = enumerate_low_energy(ell)?;
    let dir = out.join(format!("atlas_{ell}"));
    let mut table = create(&dir.join("catalogue.csv"))?;
    cat.write_csv(&mut table)?;
    table.flush()?;
    cat.write_csv(io::stdout().lock())?;
    for (k, sol) in cat.all().enumerate() {
        write_curve_csv(sol.curve(), create(&dir.join(format!("{k:02}_{}.csv", file_stem(sol.class))))?)?;
    }
    Ok(())
}

fn file_stem(class: ElasticaClass) -> String {
    class.as_str().replace('+', "_plus").replace('-', "_minus")
}

fn figure_eight_cmd(out: &Path) -> Result<()> {
    let f8 = figure_eight()?;
    let constants = f8.constants();
    write_json(&out.join("figure_eight.json"), &constants)?;
    write_curve_csv(&f8.curve, create(&out.join("figure_eight.csv"))?)?;
    println!("{}", serde_json::to_string(&constants)?);
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct BarrierSummary {
    #[serde(flatten)]
    constants: BarrierConstants,
    r_star: f64,
    e_star: f64,
    m_full: f64,
    barrier_verified: bool,
    figure_eight_minimal: bool,
}

fn barrier_map(out: &Path, cfg: &BarrierConfig) -> Result<()> {
    if cfg.ell_points < 1 || cfg.r_points < 1 {
        bail!("--res must be at least 1");
    }
    let f8 = figure_eight()?.constants();
    let map = barrier_constants(cfg, &f8)?;
    let mut csv = create(&out.join("barrier_map.csv"))?;
    map.write_csv(&mut csv)?;
    csv.flush()?;
    let summary = BarrierSummary {
        constants: map.constants,
        r_star: f8.r_star,
        e_star: f8.e_star,
        m_full: map.m_full,
        barrier_verified: map.barrier_verified,
        figure_eight_minimal: map.figure_eight_minimal,
    };
    write_json(&out.join("barrier_constants.json"), &summary)?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

fn run_and_render(config: &ScenarioConfig, dir: &Path) -> Result<()> {
    let report = run_theorem_experiment(config)?;
    render_report(&report, dir)?;
    let summary = report.summary();
    println!(
        "verdict {} limit {} t0 {} t1 {} ({})",
        summary.verdict,
        summary.limit_class.map_or("unresolved", |c| c.as_str()),
        summary.t0_est.map_or("-".into(), |t| format!("{t:.4}")),
        summary.t1_est.map_or("-".into(), |t| format!("{t:.4}")),
        dir.join(SUMMARY_FILE).display()
    );
    if let Some(f) = &summary.failure {
        eprintln!("warning: {f}");
    }
    Ok(())
}

fn flow_run(out: &Path, path: &Path) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: ScenarioConfig =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let dir = match &config.output_dir {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => out.join(d),
        None => out.join("flow"),
    };
    run_and_render(&config, &dir)
}

fn migrate(out: &Path, args: &MigrateArgs) -> Result<()> {
    let mut config = ScenarioConfig {
        ell: args.ell,
        lambda: args.lambda,
        eps: args.eps,
        perturb_mode: args.mode,
        rng_seed: args.seed,
        ..ScenarioConfig::default()
    };
    config.flow.nodes = args.nodes;
    let dir = out.join(format!("migrate_{}_{}_lambda{}", args.mode.as_str(), args.ell, args.lambda));
    run_and_render(&config, &dir)
}

fn sweep(out: &Path, args: &SweepArgs) -> Result<()> {
    if args.steps == 0 || !(args.ell_min <= args.ell_max) {
        bail!("need --steps >= 1 and --ell-min <= --ell-max");
    }
    let mut template = ScenarioConfig {
        lambda: args.lambda,
        eps: args.eps,
        perturb_mode: args.mode,
        rng_seed: args.seed,
        ..ScenarioConfig::default()
    };
    template.flow.nodes = args.nodes;
    let report = sweep_ell(&ell_grid(args.ell_min, args.ell_max, args.steps), &template)?;
    let mut csv = create(&out.join("sweep.csv"))?;
    report.write_csv(&mut csv)?;
    csv.flush()?;
    write_json(&out.join("sweep.json"), &report)?;
    report.write_csv(io::stdout().lock())?;
    Ok(())
}
