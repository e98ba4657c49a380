//! Command-line interface. Every subcommand resolves its flags (with
//! `--config` supplying defaults), runs, and returns a [`Report`].

use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use kylepriv_core::deploy::{
    analytic_volume, break_even_fee_with, dp_forward, dp_inverse, net_of_fee_report, Composition,
    DeploymentPlan, VolumeMode,
};
use kylepriv_core::lvr::{correspondence_report, CpammParams};
use kylepriv_core::schedule::schedule_subsidy;
use kylepriv_core::sim::{compare_welfare, WelfareTargets, Z_FLAG};
use kylepriv_core::{
    solve_equilibrium, welfare_closed_form, Clearing, EquilibriumPath, MarketParams,
    ScheduledEquilibrium, SimConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::io::{read_schedule, write_lvr_steps, write_steps};
use crate::report::{formulas, Report};
use crate::runner::{run_lvr, run_sim, with_threads};

/// Largest path-wise `|Π_I + Π_N + Π_M|` accepted without a flag.
pub const ZERO_SUM_TOL: f64 = 1e-10;

/// Relative gap between the two LVR estimators accepted without a flag.
pub const LVR_REL_TOL: f64 = 0.02;

#[derive(Debug, Parser)]
#[command(
    name = "kylepriv",
    version,
    about = "Closed forms and Monte Carlo checks for a Kyle market with a privacy-noise channel"
)]
pub struct Cli {
    /// JSON object keyed by long flag names; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium coefficients and the posterior-variance path.
    Equilibrium(EquilibriumArgs),
    /// Closed-form expected profits and the privacy subsidy.
    Welfare(WelfareArgs),
    /// Monte Carlo run of the discretized market.
    Simulate(SimulateArgs),
    /// Subsidy under piecewise-constant noise schedules.
    Schedule(ScheduleArgs),
    /// Break-even fee and, with Monte Carlo volume, net-of-fee welfare.
    Fee(FeeArgs),
    /// Differential-privacy budgets of a block deployment.
    #[command(subcommand)]
    Dp(DpCommand),
    /// Loss-versus-rebalancing of a constant-product pool.
    Lvr(LvrArgs),
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Debug, Subcommand)]
pub enum DpCommand {
    /// Joint budget spent by a given noise level.
    Map(DpMapArgs),
    /// Per-block noise needed for a joint budget.
    Inverse(DpInverseArgs),
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// LVR and privacy subsidy side by side.
    Correspondence(CorrespondenceArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MarketArgs {
    #[arg(long, default_value_t = 1.0)]
    pub sigma_v: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_u: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma_eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub p0: f64,
}

impl MarketArgs {
    pub fn params(&self) -> Result<MarketParams> {
        Ok(MarketParams::new(
            self.sigma_v,
            self.sigma_u,
            self.sigma_eps,
            self.horizon,
            self.p0,
        )?)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct EquilibriumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    /// Evenly spaced times in [0, T] at which Σ(t) and β(t) are reported.
    #[arg(long, default_value_t = 11)]
    pub samples: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct WelfareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Post,
    Pre,
}

impl From<Convention> for Clearing {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Post => Clearing::Post,
            Convention::Pre => Clearing::Pre,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    #[arg(long, default_value_t = 20_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 2_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Convention::Post)]
    pub convention: Convention,
    /// Per-step trajectories of the first `--record-paths` paths.
    #[arg(long, value_name = "FILE")]
    pub out_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub record_paths: usize,
    /// Time-varying σ_ε(t)² (`t_start,t_end,variance`); replaces --sigma-eps.
    #[arg(long, value_name = "FILE")]
    pub schedule_file: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub time_buckets: usize,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ScheduleArgs {
    /// Market parameters; --sigma-eps is ignored.
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    /// Schedule CSV; repeat to compare several.
    #[arg(long, value_name = "FILE")]
    pub file: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeModeArg {
    Given,
    Analytic,
    Mc,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct FeeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    /// Total volume Q; implies --volume-mode given.
    #[arg(long)]
    pub volume: Option<f64>,
    /// Defaults to `given` with --volume and `analytic` otherwise.
    #[arg(long, value_enum)]
    pub volume_mode: Option<VolumeModeArg>,
    #[arg(long, default_value_t = 100)]
    pub blocks: usize,
    #[arg(long, default_value_t = 20_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CompositionArg {
    Basic,
    Advanced,
}

impl From<CompositionArg> for Composition {
    fn from(c: CompositionArg) -> Self {
        match c {
            CompositionArg::Basic => Composition::Basic,
            CompositionArg::Advanced => Composition::Advanced,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DpMapArgs {
    #[arg(long, default_value_t = 1.0)]
    pub sigma_eps: f64,
    #[arg(long, default_value_t = 100)]
    pub blocks: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub delta_block: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sensitivity: f64,
    #[arg(long, value_enum, default_value_t = CompositionArg::Basic)]
    pub composition: CompositionArg,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct DpInverseArgs {
    #[arg(long, default_value_t = 10.0)]
    pub epsilon_joint: f64,
    #[arg(long, default_value_t = 1e-5)]
    pub delta: f64,
    #[arg(long, default_value_t = 100)]
    pub blocks: usize,
    #[arg(long, default_value_t = 1.0)]
    pub sensitivity: f64,
    #[arg(long, value_enum, default_value_t = CompositionArg::Basic)]
    pub composition: CompositionArg,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct AmmArgs {
    /// Constant-product invariant.
    #[arg(long, default_value_t = 10_000.0)]
    pub k: f64,
    #[arg(long, default_value_t = 1.0)]
    pub q0: f64,
    /// Reference-price volatility.
    #[arg(long, default_value_t = 0.2)]
    pub sigma: f64,
    /// Reference-price drift.
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
}

impl AmmArgs {
    pub fn params(&self, horizon: f64) -> Result<CpammParams> {
        Ok(CpammParams::new(self.k, self.q0, self.sigma, self.mu, horizon)?)
    }
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct LvrArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub amm: AmmArgs,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 2_000)]
    pub steps: usize,
    #[arg(long, default_value_t = 10_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Per-step `t,q,V,lvr_step` of the first `--record-paths` paths.
    #[arg(long, value_name = "FILE")]
    pub out_csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub record_paths: usize,
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct CorrespondenceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub market: MarketArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub amm: AmmArgs,
}

/// The clap command with negative numbers accepted as values everywhere.
pub fn command() -> clap::Command {
    fn negatives(cmd: clap::Command) -> clap::Command {
        cmd.allow_negative_numbers(true).mut_subcommands(negatives)
    }
    negatives(Cli::command())
}

/// Parses `args`, filling flags absent from the command line from the
/// `--config` file.
pub fn parse<I, T>(args: I) -> Result<Cli>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cmd = command();
    let matches = cmd.clone().try_get_matches_from(&args)?;

    let (leaf, leaf_matches) = leaf(&cmd, &matches);
    if let Some(path) = leaf_matches.get_one::<PathBuf>("config").cloned() {
        let text = std::fs::read_to_string(&path).map_err(|e| LabError::io(&path, e))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| LabError::Input(format!("{}: {e}", path.display())))?;
        let Value::Object(entries) = value else {
            return Err(LabError::Input(format!(
                "{}: expected a JSON object keyed by flag names",
                path.display()
            )));
        };
        for (key, value) in entries {
            if key == "config" || value.is_null() {
                continue;
            }
            let arg = leaf
                .get_arguments()
                .find(|a| a.get_long() == Some(key.as_str()))
                .ok_or_else(|| {
                    LabError::Input(format!(
                        "{}: unknown key `{key}` for `{}`",
                        path.display(),
                        leaf.get_name()
                    ))
                })?;
            if leaf_matches.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
                continue;
            }
            let values = match value {
                Value::Array(items) => items,
                other => vec![other],
            };
            for item in values {
                let text = match item {
                    Value::String(s) => s,
                    Value::Number(n) => n.to_string(),
                    Value::Bool(b) => b.to_string(),
                    other => {
                        return Err(LabError::Input(format!(
                            "{}: unsupported value {other} for `{key}`",
                            path.display()
                        )))
                    }
                };
                args.push(format!("--{key}").into());
                args.push(text.into());
            }
        }
    }
    let matches = cmd.try_get_matches_from(&args)?;
    Ok(Cli::from_arg_matches(&matches)?)
}

fn leaf<'a>(cmd: &'a clap::Command, matches: &'a ArgMatches) -> (&'a clap::Command, &'a ArgMatches) {
    match matches.subcommand() {
        Some((name, sub)) => match cmd.find_subcommand(name) {
            Some(sub_cmd) => leaf(sub_cmd, sub),
            None => (cmd, matches),
        },
        None => (cmd, matches),
    }
}

pub fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Equilibrium(a) => equilibrium(a),
        Command::Welfare(a) => welfare(a),
        Command::Simulate(a) => simulate(a),
        Command::Schedule(a) => schedule(a),
        Command::Fee(a) => fee(a),
        Command::Dp(DpCommand::Map(a)) => dp_map(a),
        Command::Dp(DpCommand::Inverse(a)) => dp_inv(a),
        Command::Lvr(a) => lvr(a),
        Command::Report(ReportCommand::Correspondence(a)) => correspondence(a),
    }
}

fn config<T: Serialize>(args: &T) -> Result<Value> {
    Ok(serde_json::to_value(args)?)
}

fn equilibrium(a: &EquilibriumArgs) -> Result<Report> {
    if a.samples < 2 {
        return Err(LabError::Input("samples must be >= 2".into()));
    }
    let params = a.market.params()?;
    let eq = solve_equilibrium(&params)?;
    let horizon = params.horizon;
    let samples = (0..a.samples)
        .map(|i| {
            let t = if i + 1 == a.samples {
                horizon
            } else {
                horizon * i as f64 / (a.samples - 1) as f64
            };
            let beta = if t < horizon {
                Some(eq.trading_intensity(t)?)
            } else {
                None
            };
            Ok(json!({ "t": t, "Sigma": eq.posterior_variance(t)?, "beta": beta }))
        })
        .collect::<Result<Vec<_>>>()?;
    let result = json!({
        "lambda": eq.lambda,
        "c": eq.c,
        "alpha": eq.alpha,
        "gamma0": eq.gamma0,
        "horizon": horizon,
        "expected_value": eq.expected_initial_value(),
        "samples": samples,
    });
    Ok(Report::new("equilibrium", config(a)?, result).formulas(formulas::EQUILIBRIUM))
}

fn welfare(a: &WelfareArgs) -> Result<Report> {
    let w = welfare_closed_form(&a.market.params()?)?;
    Ok(Report::new("welfare", config(a)?, serde_json::to_value(w)?).formulas(formulas::WELFARE))
}

fn simulate(a: &SimulateArgs) -> Result<Report> {
    let params = a.market.params()?;
    let clearing = Clearing::from(a.convention);
    let sim_config = SimConfig {
        n_steps: a.steps,
        n_paths: a.paths,
        master_seed: a.seed,
        clearing,
        record_paths: if a.out_csv.is_some() { a.record_paths } else { 0 },
        time_buckets: a.time_buckets,
    };
    sim_config.validate()?;

    let (eq, schedule_info): (Box<dyn EquilibriumPath + Sync>, Value) = match &a.schedule_file {
        Some(path) => {
            let schedule = read_schedule(path)?;
            let info = json!({
                "file": path,
                "mean_variance": schedule.mean_variance(),
                "segments": schedule.segments(),
            });
            (Box::new(ScheduledEquilibrium::new(&params, schedule)?), info)
        }
        None => (Box::new(solve_equilibrium(&params)?), Value::Null),
    };
    let eff = *eq.params();
    let post_targets = match &a.schedule_file {
        Some(path) => WelfareTargets::scheduled(&params, &read_schedule(path)?)?,
        None => WelfareTargets::closed_form(&eff)?,
    };
    let targets = match clearing {
        Clearing::Post => post_targets,
        Clearing::Pre => WelfareTargets::pre_clearing(&eff)?,
    };

    let run = with_threads(a.threads, || run_sim(eq.as_ref(), &sim_config))?;
    let comparison = compare_welfare(&run.result, &targets)?;
    let mut flags: Vec<String> = comparison
        .flagged()
        .map(|r| {
            format!(
                "{}: mc {} vs closed form {}, |z| = {:.2} > {Z_FLAG}",
                r.quantity,
                r.mc_mean,
                r.closed_form,
                r.z.abs()
            )
        })
        .collect();

    let mut result = json!({
        "sim": run.result,
        "welfare": comparison,
        "insider_bucket_target": eff.sigma_v * (eff.sigma_u * eff.sigma_u + eff.sigma_eps * eff.sigma_eps).sqrt()
            * eff.horizon.sqrt() / a.time_buckets as f64,
    });
    if clearing == Clearing::Pre {
        let reference = compare_welfare(&run.result, &post_targets)?;
        flags.extend(reference.flagged().filter(|r| r.quantity == "pi_M").map(|r| {
            format!(
                "pi_M: pre-trade clearing, mc {} vs post-clearing closed form {} (|z| = {:.2})",
                r.mc_mean,
                r.closed_form,
                r.z.abs()
            )
        }));
        result["post_clearing_reference"] = serde_json::to_value(reference)?;
    }
    if run.result.max_zero_sum_residual > ZERO_SUM_TOL {
        flags.push(format!(
            "zero-sum residual {} exceeds {ZERO_SUM_TOL}",
            run.result.max_zero_sum_residual
        ));
    }
    if !schedule_info.is_null() {
        result["schedule"] = schedule_info;
    }
    if let Some(path) = &a.out_csv {
        write_steps(path, &run.steps)?;
    }
    Ok(Report::new("simulate", config(a)?, result)
        .seed(a.seed)
        .formulas(formulas::SIMULATE)
        .flags(flags))
}

fn schedule(a: &ScheduleArgs) -> Result<Report> {
    if a.file.is_empty() {
        return Err(LabError::Input("schedule needs at least one --file".into()));
    }
    let params = a.market.params()?;
    let mut rows = Vec::with_capacity(a.file.len());
    let mut subsidies = Vec::with_capacity(a.file.len());
    for path in &a.file {
        let s = read_schedule(path)?;
        let sub = schedule_subsidy(&params, &s)?;
        subsidies.push(sub.subsidy);
        let mut row = serde_json::to_value(sub)?;
        row["file"] = json!(path);
        rows.push(row);
    }
    let spread = subsidies.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x))
        - subsidies.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    let mut flags = Vec::new();
    if spread > 1e-12 {
        flags.push(format!("subsidies differ across schedules by {spread}"));
    }
    let result = json!({ "schedules": rows, "subsidy_spread": spread });
    Ok(Report::new("schedule", config(a)?, result)
        .formulas(formulas::SCHEDULE)
        .flags(flags))
}

fn fee(a: &FeeArgs) -> Result<Report> {
    let params = a.market.params()?;
    let mode = match (a.volume_mode, a.volume) {
        (Some(m), _) => m,
        (None, Some(_)) => VolumeModeArg::Given,
        (None, None) => VolumeModeArg::Analytic,
    };
    let mut report = Report::new("fee", config(a)?, Value::Null).formulas(formulas::FEE);
    let (fee, net) = match mode {
        VolumeModeArg::Given => {
            let q = a
                .volume
                .ok_or_else(|| LabError::Input("--volume-mode given needs --volume".into()))?;
            (break_even_fee_with(&params, q, 0.0, VolumeMode::Given)?, None)
        }
        VolumeModeArg::Analytic => {
            let q = analytic_volume(&params, a.blocks)?;
            (break_even_fee_with(&params, q, 0.0, VolumeMode::Analytic)?, None)
        }
        VolumeModeArg::Mc => {
            let config = SimConfig {
                n_steps: a.blocks,
                n_paths: a.paths,
                master_seed: a.seed,
                clearing: Clearing::Post,
                record_paths: 0,
                time_buckets: a.blocks.clamp(1, 10),
            };
            let eq = solve_equilibrium(&params)?;
            let run = with_threads(a.threads, || run_sim(&eq, &config))?;
            let q = run.result.volume;
            let fee = break_even_fee_with(&params, q.mean, q.se, VolumeMode::Mc)?;
            let net = net_of_fee_report(&params, &run.result, fee.break_even_fee)?;
            report = report.seed(a.seed);
            (fee, Some(net))
        }
    };
    let mut result = serde_json::to_value(fee)?;
    result["n_blocks"] = json!(a.blocks);
    if let Some(net) = net {
        report = report.flags(net.flags.iter().map(|q| {
            let row = net.row(q).expect("flagged rows exist");
            format!(
                "net_of_fee.{q}: mc {} vs {} (|z| = {:.2})",
                row.mc_mean,
                row.closed_form,
                row.z.abs()
            )
        }));
        result["net_of_fee"] = serde_json::to_value(net)?;
    }
    report.result = result;
    Ok(report)
}

fn dp_map(a: &DpMapArgs) -> Result<Report> {
    let plan = DeploymentPlan::from_sigma_eps(a.sigma_eps, a.blocks, a.sensitivity)?;
    let budget = dp_forward(&plan, a.delta_block, a.composition.into())?;
    let result = json!({
        "n_blocks": plan.n_blocks,
        "per_block_noise_var": plan.per_block_noise_var,
        "sigma_block": plan.sigma_block(),
        "implied_sigma_eps": plan.implied_sigma_eps(),
        "budget": budget,
    });
    Ok(Report::new("dp map", config(a)?, result).formulas(formulas::DP_MAP))
}

fn dp_inv(a: &DpInverseArgs) -> Result<Report> {
    let cal = dp_inverse(
        a.epsilon_joint,
        a.delta,
        a.blocks,
        a.sensitivity,
        a.composition.into(),
    )?;
    Ok(Report::new("dp inverse", config(a)?, serde_json::to_value(cal)?).formulas(formulas::DP_INVERSE))
}

fn lvr(a: &LvrArgs) -> Result<Report> {
    let params = a.amm.params(a.horizon)?;
    let record = if a.out_csv.is_some() { a.record_paths } else { 0 };
    let run = with_threads(a.threads, || run_lvr(&params, a.steps, a.paths, a.seed, record))?;
    let mut flags = Vec::new();
    if !run.result.drift_free {
        flags.push("mu != 0: outside the driftless rate comparison".to_string());
    }
    if run.result.relative_gap > LVR_REL_TOL {
        flags.push(format!(
            "mc_lvr and closed_form_integral differ by {:.4} (relative) > {LVR_REL_TOL}",
            run.result.relative_gap
        ));
    }
    if let Some(path) = &a.out_csv {
        write_lvr_steps(path, &run.steps)?;
    }
    Ok(Report::new("lvr", config(a)?, serde_json::to_value(run.result)?)
        .seed(a.seed)
        .formulas(formulas::LVR)
        .flags(flags))
}

fn correspondence(a: &CorrespondenceArgs) -> Result<Report> {
    let market = a.market.params()?;
    let amm = a.amm.params(market.horizon)?;
    let table = correspondence_report(&market, &amm)?;
    Ok(Report::new("report correspondence", config(a)?, serde_json::to_value(table)?)
        .formulas(formulas::CORRESPONDENCE))
}
