#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use splitmc::bias::{
    pi_rho_closed_form, tv_bound_lipschitz, tv_bound_strongly_convex, w1_bound_single, BiasBound, PiRho,
};
use splitmc::engine::{ChainState, Sampler, SamplerConfig};
use splitmc::experiments::{self, ExperimentSpec};
use splitmc::metrics::Gaussian1d;
use splitmc::model::zoo::{self, TestModel, ZooParams};
use splitmc::model::{center_model, find_minimizer, model_constants, LinearOp, SplitModel};
use splitmc::planner::{self, Plan, Theorem};
use splitmc::rng::child_seed;
use splitmc::trace::TraceWriter;
use splitmc::Error;

#[derive(Parser)]
#[command(name = "splitmc", version, about = "Split Gibbs sampling: planners, bias bounds, sampling and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prescribe the coupling ρ² and a sweep count for a target accuracy.
    Plan(PlanArgs),
    /// Run the sampler and write binary traces.
    Sample(SampleArgs),
    /// Tabulate bias bounds against exact distances over a grid of ρ.
    Bias(BiasArgs),
    /// Run a named experiment and write its CSV tables.
    Experiment(ExperimentArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Zoo model name.
    #[arg(long, default_value = "toy-gaussian-2")]
    model: String,
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    /// Number of factors (toy models) or groups (logistic-split2).
    #[arg(long, default_value_t = 10)]
    b: usize,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 4.0)]
    kappa: f64,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; tables go to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long, value_parser = ["w1", "tv-single", "tv-multi", "tv-ns"])]
    theorem: String,
    #[arg(long)]
    eps: f64,
    /// Fourth-moment radius for the non-strongly-convex plan.
    #[arg(long)]
    radius: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Coupling parameter; taken from --theorem/--eps when omitted.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, value_parser = ["w1", "tv-single", "tv-multi"])]
    theorem: Option<String>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Sweeps per chain; the plan's t_mix when omitted.
    #[arg(long)]
    sweeps: Option<u64>,
    #[arg(long, default_value_t = 1)]
    chains: usize,
    /// Use rejection sampling even where a closed-form conditional exists.
    #[arg(long)]
    force_rejection: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BiasArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 1e-2)]
    rho_min: f64,
    #[arg(long, default_value_t = 3.1622776601683795)]
    rho_max: f64,
    #[arg(long, default_value_t = 30)]
    points: usize,
    /// Comma-separated Lipschitz constants; switches to the Lipschitz bound.
    #[arg(long, value_delimiter = ',')]
    lipschitz: Option<Vec<f64>>,
    /// Comma-separated factor dimensions matching --lipschitz.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_parser = ["bias-toy", "rate-toy", "gaussian-mixing", "mixture", "logistic"])]
    name: String,
    /// Parameter override `key=value`; repeatable.
    #[arg(long = "param", short = 'p')]
    params: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    if e.is_validity_violation() {
        2
    } else if matches!(e, Error::Io(_)) {
        1
    } else {
        3
    }
}

fn zoo_model(args: &ModelArgs, seed: u64) -> splitmc::Result<TestModel> {
    let p = ZooParams { sigma: args.sigma, b: args.b, mu: args.mu, d: args.d, n: args.n, kappa: args.kappa, seed };
    zoo::from_name(&args.model, &p)
}

fn centered(model: &SplitModel) -> splitmc::Result<SplitModel> {
    let m = find_minimizer(model, None, None)?;
    center_model(model, &m.theta_star)
}

fn single_split_constants(model: &SplitModel) -> splitmc::Result<(f64, f64)> {
    if model.num_factors() != 1 || !matches!(model.factors()[0].a, LinearOp::Identity(_)) {
        return Err(Error::InvalidParameter {
            name: "model",
            reason: "this plan needs a single split with A = I".into(),
        });
    }
    let c = model.constants()[0];
    Ok((c.m, c.big_m))
}

/// Writes `#` header lines and CSV rows to `out/name` or stdout.
fn emit(
    out: Option<&Path>,
    name: &str,
    header: &[(String, String)],
    columns: &[&str],
    rows: &[Vec<String>],
) -> splitmc::Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Box::new(File::create(dir.join(name))?)
        }
        None => Box::new(io::stdout()),
    };
    let mut sink = sink;
    for (k, v) in header {
        writeln!(sink, "# {k} = {v}")?;
    }
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(columns)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn model_header(args: &ModelArgs, seed: u64) -> Vec<(String, String)> {
    vec![
        ("model".into(), args.model.clone()),
        ("sigma".into(), args.sigma.to_string()),
        ("b".into(), args.b.to_string()),
        ("mu".into(), args.mu.to_string()),
        ("d".into(), args.d.to_string()),
        ("n".into(), args.n.to_string()),
        ("kappa".into(), args.kappa.to_string()),
        ("seed".into(), seed.to_string()),
    ]
}

fn make_plan(theorem: Theorem, eps: f64, radius: Option<f64>, model: &SplitModel) -> splitmc::Result<Plan> {
    match theorem {
        Theorem::W1Single => {
            let (m, big_m) = single_split_constants(model)?;
            planner::plan_w1_single(m, big_m, eps)
        }
        Theorem::TvSingle => {
            let (m, big_m) = single_split_constants(model)?;
            planner::plan_tv_single(m, big_m, model.dim(), eps)
        }
        Theorem::TvMulti => planner::plan_tv_multi(&centered(model)?, eps),
        Theorem::TvNonStrongly => {
            let (_, big_m) = single_split_constants(model)?;
            let r = radius.ok_or(Error::InvalidParameter { name: "radius", reason: "required for tv-ns".into() })?;
            planner::plan_tv_nonstrongly(big_m, model.dim(), r, eps)
        }
    }
}

fn cmd_plan(args: &PlanArgs) -> splitmc::Result<()> {
    let tm = zoo_model(&args.model, args.common.seed)?;
    let model = zoo::build(&tm)?;
    let plan = make_plan(Theorem::from_name(&args.theorem)?, args.eps, args.radius, &model)?;
    let mut header = model_header(&args.model, args.common.seed);
    header.push(("theorem".into(), args.theorem.clone()));
    header.push(("eps".into(), args.eps.to_string()));
    let row = vec![
        plan.theorem.name().to_string(),
        plan.epsilon.to_string(),
        plan.rho2.to_string(),
        plan.k_sgs.to_string(),
        plan.c.map_or("NA".into(), |c| c.to_string()),
        plan.t_mix.to_string(),
        plan.t_mix_real.to_string(),
        plan.branch.name().to_string(),
        plan.branch_values[0].to_string(),
        plan.branch_values[1].to_string(),
        plan.regularizer_lambda.map_or("NA".into(), |l| l.to_string()),
    ];
    emit(
        args.common.out.as_deref(),
        "plan.csv",
        &header,
        &[
            "theorem",
            "eps",
            "rho2",
            "k_sgs",
            "c",
            "t_mix",
            "t_mix_real",
            "branch",
            "branch_value_0",
            "branch_value_1",
            "lambda",
        ],
        &[row],
    )
}

fn cmd_sample(args: &SampleArgs) -> splitmc::Result<()> {
    let seed = args.common.seed;
    let tm = zoo_model(&args.model, seed)?;
    let raw = zoo::build(&tm)?;
    let model = centered(&raw).unwrap_or(raw);
    let (rho, planned) = match (args.rho, &args.theorem) {
        (Some(r), _) => (r, None),
        (None, Some(t)) => {
            let plan = make_plan(Theorem::from_name(t)?, args.eps, None, &model)?;
            (plan.rho(), Some(plan.t_mix))
        }
        (None, None) => {
            return Err(Error::InvalidParameter { name: "rho", reason: "give --rho or --theorem".into() });
        }
    };
    let sweeps = args.sweeps.or(planned).unwrap_or(1000);
    let mut config = SamplerConfig::new(rho, sweeps);
    config.force_rejection = args.force_rejection;
    let start = model.theta_star().map(|t| t.to_vec()).unwrap_or_else(|| vec![0.0; model.dim()]);
    let model = Arc::new(model);
    let sampler = Sampler::new(model.clone(), config)?;
    let dir = args.common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    let mut rows = Vec::new();
    for k in 0..args.chains {
        let mut state = ChainState::new(&model, &start, child_seed(seed, k as u64, 0))?;
        let path = dir.join(format!("chain_{k}.sgs"));
        let mut writer = TraceWriter::create(&path, model.dim())?;
        let mut failure = None;
        let report = sampler.run(&mut state, |_, s, _| match writer.push(&s.theta) {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        writer.finish()?;
        let max_prop = report.mean_proposals_per_factor().into_iter().fold(0.0, f64::max);
        rows.push(vec![
            k.to_string(),
            path.display().to_string(),
            report.sweeps.to_string(),
            rho.to_string(),
            max_prop.to_string(),
            report.elapsed.as_secs_f64().to_string(),
        ]);
    }
    let mut header = model_header(&args.model, seed);
    header.push(("rho".into(), rho.to_string()));
    header.push(("sweeps".into(), sweeps.to_string()));
    emit(
        Some(&dir),
        "sample_summary.csv",
        &header,
        &["chain", "trace", "sweeps", "rho", "max_mean_proposals", "elapsed_s"],
        &rows,
    )
}

fn bias_row(rho: f64, b: &BiasBound, exact: Option<f64>, prop: &str) -> Vec<String> {
    let distance = match b.distance {
        splitmc::bias::Distance::Tv => "tv",
        splitmc::bias::Distance::W1 => "w1",
    };
    vec![
        rho.to_string(),
        b.value.to_string(),
        exact.map_or("NA".into(), |e| e.to_string()),
        distance.to_string(),
        prop.to_string(),
        b.valid.to_string(),
        b.raw.to_string(),
    ]
}

fn cmd_bias(args: &BiasArgs) -> splitmc::Result<()> {
    if args.points < 2 || !(args.rho_min > 0.0) || !(args.rho_max > args.rho_min) {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: "need >= 2 points and 0 < rho_min < rho_max".into(),
        });
    }
    let grid: Vec<f64> = (0..args.points)
        .map(|k| (args.rho_min.ln() + (args.rho_max / args.rho_min).ln() * k as f64 / (args.points - 1) as f64).exp())
        .collect();
    let mut rows = Vec::new();
    let mut header = vec![("points".to_string(), args.points.to_string())];
    if let Some(l) = &args.lipschitz {
        let dims = args.dims.clone().unwrap_or_else(|| vec![1; l.len()]);
        header.push(("lipschitz".into(), format!("{l:?}")));
        header.push(("dims".into(), format!("{dims:?}")));
        for &rho in &grid {
            rows.push(bias_row(rho, &tv_bound_lipschitz(l, &dims, rho)?, None, "lipschitz"));
        }
    } else {
        header.extend(model_header(&args.model, args.common.seed));
        let tm = zoo_model(&args.model, args.common.seed)?;
        let model = centered(&zoo::build(&tm)?)?;
        let pi = pi_rho_closed_form(&tm, 0.0).ok();
        let single = model.num_factors() == 1 && matches!(model.factors()[0].a, LinearOp::Identity(_));
        let big_m1 = model_constants(&model)?.max_big_m;
        for &rho in &grid {
            let exact = match (&pi, pi_rho_closed_form(&tm, rho).ok()) {
                (Some(PiRho::Gaussian { mean: m0, var: v0 }), Some(PiRho::Gaussian { mean: m1, var: v1 }))
                    if m0.len() == 1 =>
                {
                    let (a, b) = (Gaussian1d::new(m0[0], v0[0]), Gaussian1d::new(m1[0], v1[0]));
                    Some((a.tv(&b), a.w1(&b)))
                }
                _ => None,
            };
            rows.push(bias_row(rho, &tv_bound_strongly_convex(&model, rho)?, exact.map(|e| e.0), "strongly-convex"));
            if single {
                rows.push(bias_row(
                    rho,
                    &w1_bound_single(big_m1, model.dim(), rho)?,
                    exact.map(|e| e.1),
                    "wasserstein",
                ));
            }
        }
    }
    emit(
        args.common.out.as_deref(),
        "bias.csv",
        &header,
        &["rho", "bound", "exact_if_available", "distance", "bound_kind", "valid", "raw_bound"],
        &rows,
    )
}

fn cmd_experiment(args: &ExperimentArgs) -> splitmc::Result<bool> {
    let mut spec = ExperimentSpec::new(&args.name, args.seed);
    for kv in &args.params {
        let (k, v) = kv
            .split_once('=')
            .ok_or(Error::InvalidParameter { name: "param", reason: format!("expected key=value, got {kv:?}") })?;
        spec = spec.with(k.trim(), v.trim());
    }
    spec.out_dir = Some(args.out.clone());
    let report = experiments::run(&spec)?;
    for path in experiments::write_report(&report, &args.out)? {
        println!("wrote {}", path.display());
    }
    for c in &report.checks {
        let verdict = match (c.passed, c.informational) {
            (true, _) => "PASS",
            (false, true) => "INFO",
            (false, false) => "FAIL",
        };
        println!("{verdict} {}: {}", c.name, c.detail);
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Bias(a) => cmd_bias(a),
        Command::Experiment(a) => cmd_experiment(a).map(|_| ()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
