//! `semcode`: optimal codeword lengths for timely status updates, prefix
//! codebooks, a bufferless link simulator, and sweep/table reproduction.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{GridSection, PenaltySection, PmfSpec, RunConfig, SimSection};
use semcode_core::experiments::{self, fmt_float, SweepSpec, SWEEP_CSV_HEADER};
use semcode_core::simulator::{self, SimConfig};
use semcode_core::{codec, optimizer, validate, Error, PenaltyConfig, Result, SourcePmf};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "semcode", version, about = "Semantics-aware timely source coding")]
struct Cli {
    /// Parallelism for sweep grids and replications (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Source pmf: zipf:<n>:<s>, uniform:<n>, or file:<path>.
    #[arg(long)]
    pmf: Option<String>,
    /// Penalty case: edt, ldt, or pdt.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    kappa: Option<u32>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of admitted (least probable) symbols.
    #[arg(long)]
    k: Option<usize>,
    /// Replace w by the balance fixed point at k_ref = n before solving.
    #[arg(long)]
    calibrate_w: bool,
    /// Output directory (resolved config + CSVs).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    warmup: Option<f64>,
    #[arg(long)]
    replications: Option<u64>,
    /// Simulate with rounded integer lengths instead of real ones.
    #[arg(long)]
    use_integer_lengths: bool,
    /// k grid, e.g. `1..100` or `2,5,10`.
    #[arg(long)]
    k_grid: Option<String>,
    /// lambda grid, comma separated.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// alpha=beta grid, comma separated.
    #[arg(long)]
    cost_grid: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for optimal real codeword lengths and export lengths.csv.
    Optimize(CommonArgs),
    /// Build the canonical prefix codebook and export codebook.csv.
    Codebook(CommonArgs),
    /// Run the bufferless link simulator and export sim.csv.
    Simulate(CommonArgs),
    /// Objective versus k at fixed lambda (sweep_k.csv).
    SweepK(CommonArgs),
    /// Objective versus lambda at fixed k values (sweep_lambda.csv).
    SweepLambda(CommonArgs),
    /// Objective over the (k, alpha=beta) surface (sweep_cost.csv).
    SweepCost(CommonArgs),
    /// Joint (k, alpha=beta) optimum per arrival rate (table1.csv).
    Table1(CommonArgs),
    /// Run the self-check suites.
    Validate {
        /// Run only the named suite.
        #[arg(long)]
        suite: Option<String>,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter { .. } | Error::Parse(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Optimize(args) => cmd_optimize(args),
        Command::Codebook(args) => cmd_codebook(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::SweepK(args) => cmd_sweep_k(args),
        Command::SweepLambda(args) => cmd_sweep_lambda(args),
        Command::SweepCost(args) => cmd_sweep_cost(args),
        Command::Table1(args) => cmd_table1(args),
        Command::Validate { suite } => return cmd_validate(suite.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn parse_grid_f64(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("grid value `{t}`: {e}"))))
        .collect()
}

fn parse_grid_usize(text: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().map_err(|e| Error::Parse(format!("k grid: {e}")))?;
        let hi: usize = hi.trim().parse().map_err(|e| Error::Parse(format!("k grid: {e}")))?;
        if lo == 0 || hi < lo {
            return Err(Error::Parse(format!("bad k range `{text}`")));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("grid value `{t}`: {e}"))))
        .collect()
}

/// Merges config file, flags, and the SEMCODE_SEED environment override
/// into a fully-resolved configuration.
fn resolve(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig {
            pmf: PmfSpec::Zipf { n: 100, s: 0.4 },
            penalty: PenaltySection {
                case: "edt".into(),
                rho: 0.5,
                kappa: 1,
                w: 1.0,
                alpha: 1.0,
                beta: 1.0,
            },
            lambda: 1.0,
            k: 18,
            calibrate_w: false,
            sim: SimSection::default(),
            grids: GridSection::default(),
        },
    };
    if let Some(p) = &args.pmf {
        cfg.pmf = PmfSpec::parse(p)?;
    }
    if let Some(c) = &args.case {
        cfg.penalty.case = c.clone();
    }
    if let Some(v) = args.rho {
        cfg.penalty.rho = v;
    }
    if let Some(v) = args.kappa {
        cfg.penalty.kappa = v;
    }
    if let Some(v) = args.w {
        cfg.penalty.w = v;
    }
    if let Some(v) = args.alpha {
        cfg.penalty.alpha = v;
    }
    if let Some(v) = args.beta {
        cfg.penalty.beta = v;
    }
    if let Some(v) = args.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if args.calibrate_w {
        cfg.calibrate_w = true;
    }
    if let Some(v) = args.seed {
        cfg.sim.seed = v;
    }
    if let Some(v) = args.horizon {
        cfg.sim.horizon = v;
    }
    if let Some(v) = args.warmup {
        cfg.sim.warmup_fraction = v;
    }
    if let Some(v) = args.replications {
        cfg.sim.replications = v;
    }
    if args.use_integer_lengths {
        cfg.sim.use_integer_lengths = true;
    }
    if let Some(g) = &args.k_grid {
        cfg.grids.k = Some(parse_grid_usize(g)?);
    }
    if let Some(g) = &args.lambda_grid {
        cfg.grids.lambda = Some(parse_grid_f64(g)?);
    }
    if let Some(g) = &args.cost_grid {
        cfg.grids.cost = Some(parse_grid_f64(g)?);
    }
    if let Ok(seed) = std::env::var("SEMCODE_SEED") {
        cfg.sim.seed = seed
            .parse()
            .map_err(|e| Error::Parse(format!("SEMCODE_SEED: {e}")))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Prepared {
    cfg: RunConfig,
    pmf: SourcePmf,
    penalty: PenaltyConfig,
}

/// Resolves the configuration, builds the pmf, and optionally replaces w
/// by the calibrated balance point.
fn prepare(args: &CommonArgs) -> Result<Prepared> {
    let mut cfg = resolve(args)?;
    let pmf = cfg.pmf.build()?;
    let mut penalty = cfg.penalty_config()?;
    if cfg.calibrate_w {
        let w = experiments::calibrate_w(&pmf, &penalty, cfg.lambda, pmf.n())?;
        penalty = PenaltyConfig { w, ..penalty };
        cfg.penalty.w = w;
    }
    Ok(Prepared { cfg, pmf, penalty })
}

struct Solved {
    cfg: RunConfig,
    pmf: SourcePmf,
    penalty: PenaltyConfig,
    trunc: semcode_core::TruncatedSource,
    gamma: f64,
    solution: optimizer::CodewordSolution,
}

/// Shared optimize path: prepare, truncate at the configured k, solve.
fn solve_from(args: &CommonArgs) -> Result<Solved> {
    let Prepared { cfg, pmf, penalty } = prepare(args)?;
    let trunc = pmf.truncate(cfg.k)?;
    let gamma = trunc.gamma(cfg.lambda);
    let qf = penalty.quadratic_form(gamma)?;
    let solution = optimizer::solve(&qf, trunc.cond_probs())?;
    Ok(Solved {
        cfg,
        pmf,
        penalty,
        trunc,
        gamma,
        solution,
    })
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content)?;
    Ok(path)
}

fn cmd_optimize(args: &CommonArgs) -> Result<()> {
    let run = solve_from(args)?;
    let ints = codec::integer_lengths(&run.solution.lengths)?;
    let book = codec::build_codebook(&ints)?;

    let mut csv = String::from("index,p_tilde,p_cond,length_real,length_int,codeword\n");
    for (local, parent_idx) in run.trunc.indices().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            parent_idx + 1,
            fmt_float(run.pmf.probs()[parent_idx]),
            fmt_float(run.trunc.cond_probs()[local]),
            fmt_float(run.solution.lengths[local]),
            ints[local],
            book.codewords()[local],
        ));
    }
    write_file(&args.out, "lengths.csv", &csv)?;
    run.cfg.write_resolved(&args.out)?;

    let s = &run.solution;
    println!("case          {}", run.penalty.case.as_str());
    println!("k             {}", run.cfg.k);
    println!("q_k           {}", fmt_float(run.trunc.q_k()));
    println!("gamma         {}", fmt_float(run.gamma));
    println!("mu            {}", fmt_float(s.mu));
    println!("E[L]          {}", fmt_float(s.el));
    println!("E[L^2]        {}", fmt_float(s.el2));
    println!("Kraft         {}", fmt_float(s.kraft_sum));
    println!("KKT residual  {}", fmt_float(s.kkt_residual));
    println!("E[Q]          {}", fmt_float(s.expected_q));
    println!("cost term     {}", fmt_float(s.cost_term));
    println!("J_SoI         {}", fmt_float(s.j_soi));
    Ok(())
}

fn cmd_codebook(args: &CommonArgs) -> Result<()> {
    let run = solve_from(args)?;
    let ints = codec::integer_lengths(&run.solution.lengths)?;
    let book = codec::build_codebook(&ints)?;
    let mut csv = String::from("index,length,codeword\n");
    for (local, parent_idx) in run.trunc.indices().enumerate() {
        csv.push_str(&format!(
            "{},{},{}\n",
            parent_idx + 1,
            book.int_lengths()[local],
            book.codewords()[local]
        ));
    }
    write_file(&args.out, "codebook.csv", &csv)?;
    run.cfg.write_resolved(&args.out)?;
    println!(
        "codebook: {} words, max length {}, Kraft sum {}",
        book.len(),
        book.int_lengths().iter().max().unwrap(),
        fmt_float(book.kraft_sum())
    );
    Ok(())
}

fn sim_csv_row(seed: &str, horizon: f64, s: &simulator::SimStats) -> String {
    format!(
        "{seed},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        fmt_float(horizon),
        s.generated,
        s.admitted,
        s.blocked,
        s.deliveries,
        fmt_float(s.mean_y),
        fmt_float(s.mean_y2),
        fmt_float(s.mean_s),
        fmt_float(s.mean_w),
        fmt_float(s.eta),
        fmt_float(s.time_avg_penalty),
        fmt_float(s.empirical_j),
    )
}

fn cmd_simulate(args: &CommonArgs) -> Result<()> {
    let run = solve_from(args)?;
    let lengths: Vec<f64> = if run.cfg.sim.use_integer_lengths {
        codec::integer_lengths(&run.solution.lengths)?
            .iter()
            .map(|&l| l as f64)
            .collect()
    } else {
        run.solution.lengths.clone()
    };
    let base = SimConfig {
        lambda: run.cfg.lambda,
        horizon: run.cfg.sim.horizon,
        seed: run.cfg.sim.seed,
        warmup_fraction: run.cfg.sim.warmup_fraction,
        use_integer_lengths: run.cfg.sim.use_integer_lengths,
    };
    let reps = run.cfg.sim.replications;

    let mut csv = String::from(
        "seed,T,generated,admitted,blocked,deliveries,mean_y,mean_y2,mean_s,mean_w,eta,time_avg_penalty,empirical_j\n",
    );
    let all = simulator::simulate_replications(&run.trunc, &lengths, &run.penalty, &base, reps)?;
    for (r, stats) in all.iter().enumerate() {
        csv.push_str(&sim_csv_row(
            &(base.seed + r as u64).to_string(),
            base.horizon,
            stats,
        ));
    }
    if reps > 1 {
        let n = all.len() as f64;
        let mean = |f: &dyn Fn(&simulator::SimStats) -> f64| all.iter().map(|s| f(s)).sum::<f64>() / n;
        let agg = simulator::SimStats {
            generated: all.iter().map(|s| s.generated).sum::<u64>() / reps,
            admitted: all.iter().map(|s| s.admitted).sum::<u64>() / reps,
            blocked: all.iter().map(|s| s.blocked).sum::<u64>() / reps,
            deliveries: all.iter().map(|s| s.deliveries).sum::<u64>() / reps,
            mean_y: mean(&|s| s.mean_y),
            mean_y2: mean(&|s| s.mean_y2),
            mean_s: mean(&|s| s.mean_s),
            mean_s2: mean(&|s| s.mean_s2),
            mean_w: mean(&|s| s.mean_w),
            eta: mean(&|s| s.eta),
            time_avg_penalty: mean(&|s| s.time_avg_penalty),
            sum_q_over_t: mean(&|s| s.sum_q_over_t),
            empirical_j: mean(&|s| s.empirical_j),
            degenerate: all.iter().any(|s| s.degenerate),
        };
        csv.push_str(&sim_csv_row("aggregate", base.horizon, &agg));
    }
    write_file(&args.out, "sim.csv", &csv)?;
    run.cfg.write_resolved(&args.out)?;

    // comparison report from the first replication's cycle records
    let (stats0, cycles0) = simulator::simulate(&run.trunc, &lengths, &run.penalty, &base)?;
    let report = simulator::analytic_vs_empirical_report(
        &stats0,
        &cycles0,
        &run.solution,
        &run.penalty,
        run.gamma,
    )?;
    print!("{report}");
    Ok(())
}

fn sweep_spec(run: &Prepared) -> Result<SweepSpec> {
    SweepSpec::new(run.pmf.clone(), run.cfg.pmf.zipf_s(), run.penalty)
}

fn cmd_sweep_k(args: &CommonArgs) -> Result<()> {
    let run = prepare(args)?;
    let spec = sweep_spec(&run)?;
    let ks = run
        .cfg
        .grids
        .k
        .clone()
        .unwrap_or_else(|| (1..=run.pmf.n()).collect());
    let rows = experiments::sweep_k(&spec, run.cfg.lambda, &ks);
    let mut csv = format!("{SWEEP_CSV_HEADER}\n");
    for row in &rows {
        csv.push_str(&experiments::sweep_csv_row(&spec, row));
        csv.push('\n');
    }
    write_file(&args.out, "sweep_k.csv", &csv)?;
    run.cfg.write_resolved(&args.out)?;
    if let Some(best) = rows.iter().filter(|r| r.ok()).min_by(|a, b| a.j_soi.partial_cmp(&b.j_soi).unwrap()) {
        println!("argmin: k = {}, J_SoI = {}", best.k, fmt_float(best.j_soi));
    }
    Ok(())
}

fn cmd_sweep_lambda(args: &CommonArgs) -> Result<()> {
    let run = prepare(args)?;
    let spec = sweep_spec(&run)?;
    let n = run.pmf.n();
    let lambdas = run
        .cfg
        .grids
        .lambda
        .clone()
        .unwrap_or_else(|| vec![0.5, 1.0, 5.0, 10.0, 20.0]);
    let ks = run
        .cfg
        .grids
        .k
        .clone()
        .unwrap_or_else(|| vec![n / 10, n / 4, n / 2, n].into_iter().filter(|&k| k >= 1).collect());
    let rows = experiments::sweep_lambda(&spec, &lambdas, &ks);
    let mut csv = format!("{SWEEP_CSV_HEADER}\n");
    for row in &rows {
        csv.push_str(&experiments::sweep_csv_row(&spec, row));
        csv.push('\n');
    }
    write_file(&args.out, "sweep_lambda.csv", &csv)?;
    run.cfg.write_resolved(&args.out)?;
    for (k, lam, j) in experiments::lambda_minima(&rows) {
        println!("k = {k}: best lambda = {}, J_SoI = {}", fmt_float(lam), fmt_float(j));
    }
    Ok(())
}

fn default_cost_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.5).collect()
}

fn cmd_sweep_cost(args: &CommonArgs) -> Result<()> {
    let run = prepare(args)?;
    let spec = sweep_spec(&run)?;
    let n = run.pmf.n();
    let ks = run
        .cfg
        .grids
        .k
        .clone()
        .unwrap_or_else(|| vec![n / 10, n / 4, n / 2, n].into_iter().filter(|&k| k >= 1).collect());
    let costs = run.cfg.grids.cost.clone().unwrap_or_else(default_cost_grid);
    let rows = experiments::sweep_cost(&spec, run.cfg.lambda, &ks, &costs);
    let mut csv = format!("{SWEEP_CSV_HEADER}\n");
    for row in &rows {
        csv.push_str(&experiments::sweep_csv_row(&spec, row));
        csv.push('\n');
    }
    write_file(&args.out, "sweep_cost.csv", &csv)?;
    run.cfg.write_resolved(&args.out)?;
    if let Some(best) = experiments::cost_argmin(&rows) {
        println!(
            "joint argmin: k = {}, alpha = beta = {}, J_SoI = {}",
            best.k,
            fmt_float(best.alpha),
            fmt_float(best.j_soi)
        );
    }
    Ok(())
}

fn cmd_table1(args: &CommonArgs) -> Result<()> {
    let run = prepare(args)?;
    let spec = sweep_spec(&run)?;
    let lambdas = run
        .cfg
        .grids
        .lambda
        .clone()
        .unwrap_or_else(|| vec![0.5, 1.0, 5.0, 10.0, 20.0]);
    let ks: Vec<usize> = run
        .cfg
        .grids
        .k
        .clone()
        .unwrap_or_else(|| (1..=run.pmf.n()).collect());
    let costs = run.cfg.grids.cost.clone().unwrap_or_else(default_cost_grid);
    let rows = experiments::table_optima(&spec, &lambdas, &ks, &costs)?;
    let mut csv = String::from("lambda,k_star,costparam_star,J_SoI_star\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(r.lambda),
            r.k_star,
            fmt_float(r.costparam_star),
            fmt_float(r.j_soi_star)
        ));
    }
    write_file(&args.out, "table1.csv", &csv)?;
    run.cfg.write_resolved(&args.out)?;
    println!("note: joint J_SoI argmin over the (k, alpha=beta) grid; a pure cost-weight argmin at small k degenerates to 0");
    for r in &rows {
        println!(
            "lambda = {:<6} k* = {:<4} alpha*=beta* = {:<6} J_SoI* = {}",
            r.lambda, r.k_star, r.costparam_star, fmt_float(r.j_soi_star)
        );
    }
    Ok(())
}

fn cmd_validate(suite: Option<&str>) -> ExitCode {
    if let Some(name) = suite {
        if !validate::suite_names().contains(&name) {
            eprintln!(
                "error: unknown suite `{name}` (available: {})",
                validate::suite_names().join(", ")
            );
            return ExitCode::from(2);
        }
    }
    let results = validate::run_suites(suite);
    let mut all_ok = true;
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:<16} {}", r.name, r.detail);
        all_ok &= r.passed;
    }
    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
