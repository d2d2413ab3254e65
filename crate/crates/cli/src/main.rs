use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use chargeplan::domain::{validate_instance, InstanceDocument, ProblemInstance};
use chargeplan::experiment::{
    default_site, rule_design, run_experiment, scheduled_peak, ExperimentConfig,
};
use chargeplan::generator::{generate_document, GeneratorConfig};
use chargeplan::metrics::{
    aggregate, power_curves_table, reports_table, AggregateReport, MetricsContext,
    DEFAULT_THRESHOLDS,
};
use chargeplan::milp::{
    optimize, write_mps, ChargingSchedule, InfrastructureDesign, OptimizeOptions, Optimized,
};
use chargeplan::sim::{run_monte_carlo, run_seeded, Policy, SimSetup, StochasticConfig};

#[derive(Parser)]
#[command(
    name = "chargeplan",
    version,
    about = "Depot charger sizing, charge scheduling and fleet simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic instance.
    Generate(GenerateArgs),
    /// Jointly size chargers and schedule charging.
    Optimize(OptimizeArgs),
    /// Rule-based charger design.
    RuleDesign(RuleDesignArgs),
    /// Simulate a design under a rule or a schedule.
    Simulate(SimulateArgs),
    /// Compare optimized and rule-based design and scheduling.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generator TOML; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Fleet size, split 20/50/30 over rigid, euro and city trucks with
    /// retailers scaled to match.
    #[arg(long)]
    trucks: Option<u32>,
    #[arg(long)]
    days: Option<u32>,
    /// Slot length in minutes.
    #[arg(long)]
    tau: Option<u32>,
    /// Fixed mean number of legs per truck and day.
    #[arg(long)]
    legs_per_day: Option<f64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance JSON.
    #[arg(long)]
    instance: PathBuf,
    /// Re-grid the instance to this slot length in minutes.
    #[arg(long)]
    tau: Option<u32>,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    alpha_peak: Option<f64>,
    /// Minutes.
    #[arg(long)]
    beta_slack: Option<f64>,
    #[arg(long)]
    gamma_energy: Option<f64>,
    /// Relative optimality gap.
    #[arg(long)]
    gap: Option<f64>,
    /// Branch-and-bound nodes after the root. Raise it to tighten the
    /// reported gap; each node re-solves an LP.
    #[arg(long, default_value_t = 50)]
    node_limit: usize,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Skip the root relaxation when seeding; use on large fleets together
    /// with a small node limit.
    #[arg(long)]
    no_lp_seed: bool,
}

#[derive(Args)]
struct StochasticArgs {
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coefficient of variation of travel, handling and energy.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Also write the model in fixed MPS format.
    #[arg(long)]
    export_mps: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RuleDesignArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Trucks per charger.
    #[arg(long)]
    ratio: Option<f64>,
    /// Charger counts per catalog type, comma separated.
    #[arg(long, value_delimiter = ',')]
    mix: Option<Vec<u32>>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Design JSON.
    #[arg(long)]
    design: PathBuf,
    /// Schedule JSON; without it trucks follow the charging rule.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[command(flatten)]
    stochastic: StochasticArgs,
    /// Contracted power at every charger site in kW. Defaults to the
    /// schedule's peak, or no limit under the rule.
    #[arg(long)]
    contracted_kw: Option<f64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    stochastic: StochasticArgs,
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    mix: Option<Vec<u32>>,
    #[arg(long)]
    contracted_kw: Option<f64>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::RuleDesign(a) => cmd_rule_design(a),
        Command::Simulate(a) => simulate(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(dir, name, &text)
}

fn generate(a: GenerateArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => GeneratorConfig::load(p)?,
        None => GeneratorConfig::default(),
    };
    if let Some(t) = a.trucks {
        let scaled = GeneratorConfig::for_fleet(t, cfg.horizon_days);
        cfg.trucks = scaled.trucks;
        cfg.location_count = scaled.location_count;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = a.days {
        cfg.horizon_days = d;
    }
    if let Some(t) = a.tau {
        cfg.slot_minutes = t;
    }
    if a.legs_per_day.is_some() {
        cfg.legs_per_truck_per_day = a.legs_per_day;
    }
    let doc = generate_document(&cfg)?;
    let inst = doc.to_instance()?;
    out_dir(&a.out_dir)?;
    doc.save(a.out_dir.join("instance.json"))?;
    println!(
        "trucks {}\tlegs {}\tlocations {}\tslots {} x {} min",
        inst.vehicles.len(),
        inst.leg_count(),
        inst.locations.len(),
        inst.grid.slot_count,
        inst.grid.slot_minutes
    );
    Ok(())
}

fn load_instance(a: &InstanceArgs, solver: Option<&SolverArgs>) -> Result<ProblemInstance> {
    let mut doc = InstanceDocument::load(&a.instance)?;
    if let Some(t) = a.tau {
        doc.regrid(t)?;
    }
    if let Some(s) = solver {
        let p = &mut doc.params;
        p.alpha_peak = s.alpha_peak.unwrap_or(p.alpha_peak);
        p.beta_slack_minutes = s.beta_slack.unwrap_or(p.beta_slack_minutes);
        p.gamma_energy = s.gamma_energy.unwrap_or(p.gamma_energy);
        p.mip_gap = s.gap.unwrap_or(p.mip_gap);
    }
    let inst = doc.to_instance()?;
    let problems = validate_instance(&inst);
    if !problems.is_empty() {
        let mut msg = format!("{} has {} problems:", a.instance.display(), problems.len());
        for p in problems.iter().take(20) {
            let _ = write!(msg, "\n  {p}");
        }
        bail!(msg);
    }
    Ok(inst)
}

fn optimize_options(inst: &ProblemInstance, s: &SolverArgs) -> OptimizeOptions {
    let mut opts = OptimizeOptions::default();
    opts.bnb.mip_gap = inst.params.mip_gap;
    opts.bnb.node_limit = s.node_limit;
    opts.bnb.time_limit = s.time_limit.map(Duration::from_secs_f64);
    opts.lp_guided = !s.no_lp_seed;
    opts
}

#[derive(Serialize)]
struct CostReport {
    energy: f64,
    infrastructure: f64,
    peak: f64,
    total: f64,
    status: String,
    gap: f64,
    best_bound: f64,
    nodes: usize,
    peak_kw: BTreeMap<String, f64>,
}

fn by_location(inst: &ProblemInstance, m: &BTreeMap<usize, f64>) -> BTreeMap<String, f64> {
    m.iter()
        .map(|(&l, &v)| (inst.locations[l].id.clone(), v))
        .collect()
}

fn write_plan(inst: &ProblemInstance, out: &Optimized, dir: &Path, prefix: &str) -> Result<()> {
    out.design
        .save(&dir.join(format!("{prefix}design.json")), inst)?;
    out.schedule
        .save(&dir.join(format!("{prefix}schedule.json")))?;
    let s = &out.solution;
    write_json(
        dir,
        &format!("{prefix}costs.json"),
        &CostReport {
            energy: out.costs.energy,
            infrastructure: out.costs.infrastructure,
            peak: out.costs.peak,
            total: out.costs.total,
            status: format!("{:?}", s.status),
            gap: s.gap,
            best_bound: s.best_bound,
            nodes: s.nodes,
            peak_kw: by_location(inst, &scheduled_peak(inst, &out.schedule)),
        },
    )?;
    let mut log = String::from("node\tdepth\tlp_objective\tincumbent\tbest_bound\topen\n");
    for l in &s.log {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| v.to_string());
        let _ = writeln!(
            log,
            "{}\t{}\t{}\t{}\t{}\t{}",
            l.node,
            l.depth,
            opt(l.lp_objective),
            opt(l.incumbent),
            l.best_bound,
            l.open
        );
    }
    write(dir, &format!("{prefix}search_log.tsv"), &log)
}

fn print_plan(inst: &ProblemInstance, out: &Optimized) {
    let c = &out.costs;
    println!(
        "energy {:.4}\tinfrastructure {:.4}\tpeak {:.4}\ttotal {:.4}",
        c.energy, c.infrastructure, c.peak, c.total
    );
    println!(
        "status {:?}\tgap {:.6}\tbound {:.4}\tnodes {}",
        out.solution.status, out.solution.gap, out.solution.best_bound, out.solution.nodes
    );
    for (&loc, counts) in &out.design.sites {
        let units: Vec<String> = counts
            .iter()
            .zip(&inst.chargers)
            .map(|(n, c)| format!("{}={n}", c.id))
            .collect();
        println!("design {}\t{}", inst.locations[loc].id, units.join(" "));
    }
}

fn cmd_optimize(a: OptimizeArgs) -> Result<()> {
    let inst = load_instance(&a.instance, Some(&a.solver))?;
    let opts = optimize_options(&inst, &a.solver);
    out_dir(&a.out_dir)?;
    let out = optimize(&inst, &opts)?;
    if a.export_mps {
        write_mps(&out.built.model, "CHARGE", &a.out_dir.join("model.mps"))?;
    }
    write_plan(&inst, &out, &a.out_dir, "")?;
    print_plan(&inst, &out);
    Ok(())
}

fn cmd_rule_design(a: RuleDesignArgs) -> Result<()> {
    let inst = load_instance(&a.instance, None)?;
    let design = rule_design(&inst, a.ratio, a.mix.as_deref(), default_site(&inst)?)?;
    out_dir(&a.out_dir)?;
    design.save(&a.out_dir.join("design.json"), &inst)?;
    println!(
        "chargers {}\tpower_kw {}",
        design.total_chargers(),
        design.total_power_kw(&inst.chargers)
    );
    Ok(())
}

fn stochastic(a: &StochasticArgs) -> Result<StochasticConfig> {
    let cfg = StochasticConfig::uniform(a.delta, a.runs, a.seed);
    cfg.check()?;
    Ok(cfg)
}

fn contracted_at_sites(inst: &ProblemInstance, kw: f64) -> BTreeMap<usize, f64> {
    inst.charger_sites().map(|l| (l, kw)).collect()
}

fn report_files(inst: &ProblemInstance, reports: &[&AggregateReport], dir: &Path) -> Result<()> {
    let owned: Vec<AggregateReport> = reports.iter().map(|r| (*r).clone()).collect();
    write(dir, "report.tsv", &reports_table(&owned, inst))?;
    for r in reports {
        write(
            dir,
            &format!("power_curves_{}.tsv", r.label),
            &power_curves_table(r, inst),
        )?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let inst = load_instance(&a.instance, None)?;
    let design = InfrastructureDesign::load(&a.design, &inst)?;
    let schedule = a
        .schedule
        .as_deref()
        .map(ChargingSchedule::load)
        .transpose()?;
    let cfg = stochastic(&a.stochastic)?;
    let (policy, label) = match &schedule {
        Some(s) => (Policy::Schedule(s), "schedule"),
        None => (Policy::Rule, "rule"),
    };
    let contracted = match (a.contracted_kw, &schedule) {
        (Some(kw), _) => contracted_at_sites(&inst, kw),
        (None, Some(s)) => scheduled_peak(&inst, s),
        (None, None) => BTreeMap::new(),
    };
    let setup = SimSetup::new(&inst, &design, policy).with_contracted(contracted);
    setup.check()?;
    let ctx = MetricsContext::new(&inst, setup.contracted_map());
    let runs = run_monte_carlo(&setup, &cfg, &ctx)?;
    let report = aggregate(label, &runs, &ctx, None);
    out_dir(&a.out_dir)?;
    write_json(&a.out_dir, "report.json", &report)?;
    report_files(&inst, &[&report], &a.out_dir)?;
    write(
        &a.out_dir,
        "events_run0.tsv",
        &run_seeded(&setup, &cfg, 0)?.to_tsv(),
    )?;
    print!("{}", reports_table(&[report], &inst));
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let inst = load_instance(&a.instance, Some(&a.solver))?;
    let cfg = ExperimentConfig {
        ratio: a.ratio,
        mix: a.mix.clone(),
        stochastic: stochastic(&a.stochastic)?,
        optimize: optimize_options(&inst, &a.solver),
        contracted: a.contracted_kw.map(|kw| contracted_at_sites(&inst, kw)),
        thresholds: DEFAULT_THRESHOLDS.to_vec(),
    };
    let result = run_experiment(&inst, &cfg)?;
    out_dir(&a.out_dir)?;
    write_json(&a.out_dir, "experiment.json", &result)?;
    result
        .co_design
        .design
        .save(&a.out_dir.join("co_design.json"), &inst)?;
    result
        .rule_design
        .save(&a.out_dir.join("rule_design.json"), &inst)?;
    let reports: Vec<&AggregateReport> = result
        .rows
        .iter()
        .filter_map(|r| r.report.as_ref())
        .collect();
    report_files(&inst, &reports, &a.out_dir)?;
    print!(
        "{}",
        reports_table(
            &reports.iter().map(|r| (*r).clone()).collect::<Vec<_>>(),
            &inst
        )
    );
    for row in &result.rows {
        if let Some(note) = &row.note {
            println!("{}\tnote\t{note}", row.label);
        }
    }
    Ok(())
}
