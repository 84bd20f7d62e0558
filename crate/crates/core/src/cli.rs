//! Command-line interface.
//!
//! Subcommands: `simulate`, `fit`, `acf`, `assess`, `grid`. Exit codes:
//! 0 ok, 1 usage error, 2 runtime error. Every command is deterministic
//! given its flags: rerunning with the same seed produces byte-identical
//! output files.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::acf::{empirical_acf, inar1_acf, type_a_acf, type_b_acf};
use crate::assess::{l_measure, model_grid, posterior_predictive};
use crate::dist::RngStream;
use crate::error::{Error, Result};
use crate::inference::{gibbs_run, GibbsConfig, InitStrategy, Priors};
use crate::io::{
    fmt_g17, format_table_text, ingest_csv, read_draws_csv, write_draws_csv, write_predictive_csv,
    write_series_csv, write_sim_json, write_table_csv, CsvLayout, FitSummary,
};
use crate::model::{
    CountSeries, DependenceStructure, Inar1Params, ModelKind, TypeAParams, TypeBParams,
};
use crate::simulate::{simulate_inar1, simulate_type_a, simulate_type_b};

#[derive(Parser)]
#[command(
    name = "poisdep",
    version,
    about = "Dependent Poisson count series: simulation, ACF theory, Gibbs inference, L-measure comparison"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a series (CSV of label,x; optional JSON with latents)
    Simulate(SimulateArgs),
    /// Fit one model to one series by Gibbs sampling
    Fit(FitArgs),
    /// Empirical and/or theoretical autocorrelation curves
    Acf(AcfArgs),
    /// Posterior-predictive summary and L-measure for a saved fit
    Assess(AssessArgs),
    /// Fit a (kind, p) grid to every series and compare L-measures
    Grid(GridArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Model kind: typeA | typeB | inar1
    #[arg(long)]
    kind: String,
    /// Marginal rate
    #[arg(long)]
    mu: f64,
    /// Thinning probability; a single value or a comma list of length T
    #[arg(long)]
    alpha: String,
    /// Contiguous dependence order (ignored for inar1)
    #[arg(long, default_value_t = 0)]
    p: usize,
    /// Series length
    #[arg(long = "len", visible_alias = "T")]
    len: usize,
    /// Seasonal step: dependence on lags s, 2s, ..., ps
    #[arg(long)]
    season: Option<usize>,
    /// Periodic orders, comma list of length s (overrides --p)
    #[arg(long)]
    periodic: Option<String>,
    /// Full dependence structure as JSON (overrides the flags above)
    #[arg(long)]
    structure_json: Option<PathBuf>,
    /// Divisor of the type B latent rate (default p+1)
    #[arg(long)]
    w_divisor: Option<usize>,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Also write the full simulation (latents included) as JSON
    #[arg(long)]
    latents_json: Option<PathBuf>,
}

#[derive(Args)]
struct McmcArgs {
    #[arg(long, default_value_t = 16_000)]
    iterations: usize,
    #[arg(long, default_value_t = 1_000)]
    burn_in: usize,
    #[arg(long, default_value_t = 5)]
    thin: usize,
    #[arg(long, default_value_t = 512)]
    alpha_grid: usize,
    #[arg(long, default_value_t = 1e-12)]
    tail_tol: f64,
    #[arg(long, default_value_t = 0.01)]
    a_alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    b_alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    a_mu: f64,
    #[arg(long, default_value_t = 0.01)]
    b_mu: f64,
    /// RNG seed (an integer, or `auto` for a fresh one)
    #[arg(long)]
    seed: String,
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

impl McmcArgs {
    fn priors(&self) -> Priors {
        Priors { a_alpha: self.a_alpha, b_alpha: self.b_alpha, a_mu: self.a_mu, b_mu: self.b_mu }
    }

    fn config(&self, keep_latents: bool) -> Result<GibbsConfig> {
        Ok(GibbsConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
            seed: parse_seed(&self.seed)?,
            stream: self.stream,
            alpha_grid_n: self.alpha_grid,
            w_tail_tol: self.tail_tol,
            init: InitStrategy::Moments,
            keep_latents,
        })
    }
}

#[derive(Args)]
struct DataArgs {
    /// Input CSV path
    #[arg(long)]
    data: PathBuf,
    /// CSV layout: wide | long
    #[arg(long, default_value = "wide")]
    layout: String,
}

impl DataArgs {
    fn read(&self) -> Result<Vec<CountSeries>> {
        let layout: CsvLayout = self.layout.parse()?;
        ingest_csv(&self.data, layout)
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Series to fit: 0-based column index or series name (default: first)
    #[arg(long, default_value = "0")]
    series: String,
    /// Model kind: typeA | typeB | inar1
    #[arg(long)]
    kind: String,
    /// Contiguous dependence order (ignored for inar1)
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[command(flatten)]
    mcmc: McmcArgs,
    /// Drop latent snapshots from the draws (halves output size; the
    /// posterior predictive then needs a refit)
    #[arg(long)]
    no_latents: bool,
    /// Kept draws as CSV
    #[arg(long)]
    draws_out: Option<PathBuf>,
    /// Posterior summary as JSON (stdout when omitted)
    #[arg(long)]
    summary_out: Option<PathBuf>,
}

#[derive(Args)]
struct AcfArgs {
    /// Input CSV path (enables the empirical column)
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "wide")]
    layout: String,
    #[arg(long, default_value = "0")]
    series: String,
    #[arg(long, default_value_t = 10)]
    max_lag: usize,
    /// Model kind for the theoretical column: typeA | typeB | inar1
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    mu: Option<f64>,
    /// Stationary thinning probability for the theoretical column
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AssessArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "0")]
    series: String,
    /// Draws CSV written by `fit --draws-out`
    #[arg(long)]
    draws: PathBuf,
    /// Model kind the draws came from
    #[arg(long)]
    kind: String,
    /// Dependence order the draws came from
    #[arg(long, default_value_t = 1)]
    p: usize,
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// RNG seed for the predictive replicates (integer or `auto`)
    #[arg(long)]
    seed: String,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Assessment JSON (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot-ready per-index predictive bands as CSV
    #[arg(long)]
    pred_out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Orders to sweep: inclusive range `0..6` or comma list `0,1,2`
    #[arg(long, default_value = "0..6")]
    p: String,
    /// Comma list of kinds, e.g. typeA,typeB,inar1
    #[arg(long, default_value = "typeA,typeB,inar1")]
    kinds: String,
    #[arg(long, default_value_t = 0.5)]
    nu: f64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[command(flatten)]
    mcmc: McmcArgs,
    /// Long-form table CSV
    #[arg(long)]
    out: PathBuf,
    /// Aligned text table (stdout when omitted)
    #[arg(long)]
    text: Option<PathBuf>,
}

/// Entry point used by the binary and by tests; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                0
            } else {
                eprint!("{e}");
                1
            };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Fit(args) => cmd_fit(args),
        Cmd::Acf(args) => cmd_acf(args),
        Cmd::Assess(args) => cmd_assess(args),
        Cmd::Grid(args) => cmd_grid(args),
    }
}

fn parse_seed(s: &str) -> Result<u64> {
    if s.eq_ignore_ascii_case("auto") {
        use rand::Rng;
        return Ok(rand::rng().random());
    }
    s.parse::<u64>()
        .map_err(|_| Error::parse(format!("seed must be an unsigned integer or `auto`, got `{s}`")))
}

fn parse_alpha_list(s: &str, len: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = s
        .split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| Error::parse(format!("bad alpha value `{f}`")))
        })
        .collect::<Result<_>>()?;
    match values.len() {
        1 => Ok(vec![values[0]; len]),
        n if n == len => Ok(values),
        n => Err(Error::parse(format!(
            "alpha list has {n} entries; expected 1 or the series length {len}"
        ))),
    }
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|f| {
            f.trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(format!("bad integer `{f}`")))
        })
        .collect()
}

fn parse_p_values(s: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: usize =
            lo.trim().parse().map_err(|_| Error::parse(format!("bad range start `{lo}`")))?;
        let hi: usize =
            hi.trim().parse().map_err(|_| Error::parse(format!("bad range end `{hi}`")))?;
        if hi < lo {
            return Err(Error::parse(format!("empty order range `{s}`")));
        }
        Ok((lo..=hi).collect())
    } else {
        parse_usize_list(s)
    }
}

fn select_series(series: Vec<CountSeries>, selector: &str) -> Result<CountSeries> {
    if let Ok(idx) = selector.parse::<usize>() {
        let len = series.len();
        return series.into_iter().nth(idx).ok_or_else(|| {
            Error::parse(format!("series index {idx} out of range; file has {len}"))
        });
    }
    series
        .into_iter()
        .find(|s| s.name == selector)
        .ok_or_else(|| Error::parse(format!("no series named `{selector}` in the file")))
}

fn create_out(path: &PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let kind: ModelKind = args.kind.parse()?;
    let mut rng = RngStream::new(args.seed, args.stream);
    let structure = if let Some(path) = &args.structure_json {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str::<DependenceStructure>(&text)?
    } else if let Some(orders) = &args.periodic {
        let orders = parse_usize_list(orders)?;
        let s = orders.len();
        DependenceStructure::periodic(args.len, s, &orders)?
    } else if let Some(s) = args.season {
        DependenceStructure::seasonal(args.len, args.p, s)?
    } else {
        DependenceStructure::order_p(args.len, args.p)?
    };
    let len = structure.horizon();
    let sim = match kind {
        ModelKind::TypeA => {
            let params = TypeAParams::new(args.mu, parse_alpha_list(&args.alpha, len)?);
            simulate_type_a(&params, &structure, &mut rng)?
        }
        ModelKind::TypeB => {
            let divisor = args.w_divisor.unwrap_or(args.p + 1);
            let params = TypeBParams::new(args.mu, parse_alpha_list(&args.alpha, len)?, divisor);
            simulate_type_b(&params, &structure, &mut rng)?
        }
        ModelKind::Inar1 => {
            let alpha = parse_alpha_list(&args.alpha, 1)?[0];
            simulate_inar1(&Inar1Params::new(args.mu, alpha), args.len, &mut rng)?
        }
    };
    write_series_csv(create_out(&args.out)?, &sim.x)?;
    if let Some(path) = &args.latents_json {
        write_sim_json(create_out(path)?, &sim)?;
    }
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let kind: ModelKind = args.kind.parse()?;
    let data = select_series(args.data.read()?, &args.series)?;
    let config = args.mcmc.config(!args.no_latents)?;
    let draws = gibbs_run(kind, &data, args.p, &args.mcmc.priors(), &config)?;
    if let Some(path) = &args.draws_out {
        write_draws_csv(create_out(path)?, &draws)?;
    }
    let summary = FitSummary::from_draws(&data.name, &draws);
    match &args.summary_out {
        Some(path) => serde_json::to_writer_pretty(create_out(path)?, &summary)?,
        None => {
            serde_json::to_writer_pretty(std::io::stdout().lock(), &summary)?;
            println!();
        }
    }
    Ok(())
}

fn cmd_acf(args: AcfArgs) -> Result<()> {
    let empirical = match &args.data {
        Some(path) => {
            let layout: CsvLayout = args.layout.parse()?;
            let data = select_series(ingest_csv(path, layout)?, &args.series)?;
            Some(empirical_acf(&data, args.max_lag)?)
        }
        None => None,
    };
    let theoretical: Option<Vec<f64>> = match &args.kind {
        Some(kind) => {
            let kind: ModelKind = kind.parse()?;
            let alpha = args
                .alpha
                .ok_or_else(|| Error::parse("--alpha is required for a theoretical curve"))?;
            let mut values = vec![1.0];
            // stationary curves evaluated away from the boundary
            let t = args.p + 1;
            let horizon = args.p + 1 + args.max_lag;
            for s in 1..=args.max_lag {
                let v = match kind {
                    ModelKind::TypeA => {
                        let params = TypeAParams::stationary(args.mu.unwrap_or(1.0), alpha, horizon);
                        type_a_acf(&params, args.p, t, s)?
                    }
                    ModelKind::TypeB => {
                        let params =
                            TypeBParams::stationary(args.mu.unwrap_or(1.0), alpha, horizon, args.p);
                        type_b_acf(&params, args.p, t, s)?
                    }
                    ModelKind::Inar1 => inar1_acf(&Inar1Params::new(args.mu.unwrap_or(1.0), alpha), s),
                };
                values.push(v);
            }
            Some(values)
        }
        None => None,
    };
    if empirical.is_none() && theoretical.is_none() {
        return Err(Error::parse(
            "acf needs --data (empirical) and/or --kind with --alpha (theoretical)",
        ));
    }
    let mut out = create_out(&args.out)?;
    writeln!(out, "lag,empirical,theoretical")?;
    for s in 0..=args.max_lag {
        let emp = empirical
            .as_ref()
            .map(|a| fmt_g17(a.values[s]))
            .unwrap_or_default();
        let theo = theoretical
            .as_ref()
            .map(|v| fmt_g17(v[s]))
            .unwrap_or_default();
        writeln!(out, "{s},{emp},{theo}")?;
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct AssessReport {
    series: String,
    kind: ModelKind,
    p: usize,
    nu: f64,
    level: f64,
    kept: usize,
    l_measure: f64,
    predictive: crate::assess::PredictiveSummary,
}

fn cmd_assess(args: AssessArgs) -> Result<()> {
    let kind: ModelKind = args.kind.parse()?;
    let data = select_series(args.data.read()?, &args.series)?;
    let draws = read_draws_csv(&args.draws, kind, args.p)?;
    let mut rng = RngStream::new(parse_seed(&args.seed)?, args.stream);
    let pred = posterior_predictive(&draws, &data, args.level, &mut rng)?;
    let l = l_measure(&pred, &data, args.nu)?;
    if let Some(path) = &args.pred_out {
        write_predictive_csv(create_out(path)?, &pred, &data)?;
    }
    let report = AssessReport {
        series: data.name.clone(),
        kind,
        p: args.p,
        nu: args.nu,
        level: args.level,
        kept: draws.kept(),
        l_measure: l,
        predictive: pred,
    };
    match &args.out {
        Some(path) => serde_json::to_writer_pretty(create_out(path)?, &report)?,
        None => {
            serde_json::to_writer_pretty(std::io::stdout().lock(), &report)?;
            println!();
        }
    }
    Ok(())
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    let series = args.data.read()?;
    let kinds: Vec<ModelKind> =
        args.kinds.split(',').map(|k| k.trim().parse()).collect::<Result<_>>()?;
    let p_values = parse_p_values(&args.p)?;
    let config = args.mcmc.config(true)?;
    let table = model_grid(
        &series,
        &kinds,
        &p_values,
        &args.mcmc.priors(),
        &config,
        args.nu,
        args.level,
    )?;
    write_table_csv(create_out(&args.out)?, &table)?;
    let text = format_table_text(&table);
    match &args.text {
        Some(path) => create_out(path)?.write_all(text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}
