//! Command-line front end: `simulate`, `baseline`, `oracle`, `sweep-omega`.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::env::{channel_label, ChannelModel, CollisionMode, JointAction};
use crate::error::{Error, Result};
use crate::harness::{
    emit_csv, emit_sweep_csv, format_sig6, parse_grid, run_experiment, sweep_omega, Anchors,
    ExperimentConfig, PolicyKind, RunSummary,
};
use crate::oracle::{self, PayoffTensor};

/// Environment variable holding the log filter (`error`, `warn`, `info`, `debug`).
pub const LOG_ENV: &str = "TOW_BOMBE_LOG";

#[derive(Debug, Parser)]
#[command(name = "tow-bombe", version, about = "Tug-of-war channel allocation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment and write CSV results.
    Simulate(RunArgs),
    /// Same as simulate with an uncoupled team (independent-ucb1t unless --policy says otherwise).
    Baseline(RunArgs),
    /// Enumerate the payoff tensor; print social maxima and pure Nash equilibria.
    Oracle(OracleArgs),
    /// Rerun the experiment over a grid of omega values.
    SweepOmega {
        /// start:stop:step, e.g. 0.0:0.2:0.02
        #[arg(long)]
        grid: String,
        #[command(flatten)]
        run: RunArgs,
    },
}

/// Overrides on top of the config file (or the bundled reference config).
#[derive(Debug, Args, Default)]
struct RunArgs {
    /// TOML config file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated channel probabilities.
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    period: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    collision_mode: Option<CollisionMode>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// L1 cluster radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Also write timeseries.csv with per-step sample means.
    #[arg(long)]
    timeseries: bool,
    /// Worker threads (0 = all cores, 1 = serial).
    #[arg(long)]
    threads: Option<usize>,
}

impl RunArgs {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::reference(),
        };
        macro_rules! set {
            ($($field:ident => $target:ident),*) => {
                $(if let Some(v) = self.$field { c.$target = v; })*
            };
        }
        set!(probs => probs, users => users, policy => policy, omega => omega,
             amplitude => amplitude, epsilon => epsilon, tau => tau, horizon => horizon,
             samples => samples, seed => seed, collision_mode => collision_mode,
             output_dir => output_dir, radius => cluster_radius, threads => threads);
        if self.period.is_some() {
            c.period = self.period;
        }
        if self.timeseries {
            c.timeseries = true;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.03,0.05,0.1,0.2,0.9")]
    probs: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    users: usize,
    #[arg(long, default_value = "coin-lottery")]
    collision_mode: CollisionMode,
    /// Largest tensor to enumerate.
    #[arg(long, default_value_t = oracle::DEFAULT_ENTRY_CAP)]
    max_entries: u128,
    /// Write the full tensor as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command, writing
/// human-readable output to `out`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simulate(args) => simulate(args.resolve()?, out),
        Command::Baseline(mut args) => {
            args.policy.get_or_insert(PolicyKind::IndependentUcb1t);
            let config = args.resolve()?;
            if config.policy == PolicyKind::Bombe {
                return Err(Error::Config("baseline runs an uncoupled policy, not the bombe".into()));
            }
            simulate(config, out)
        }
        Command::Oracle(args) => print_oracle(&args, out),
        Command::SweepOmega { grid, run } => {
            let grid = parse_grid(&grid)?;
            let config = run.resolve()?;
            let rows = sweep_omega(&config, &grid)?;
            let path = emit_sweep_csv(&rows, &config.output_dir)?;
            for r in &rows {
                say(out, format!("omega {:<8} mean_total {}", format_sig6(r.omega), format_sig6(r.summary.mean_total)))?;
            }
            say(out, format!("wrote {}", path.display()))
        }
    }
}

fn say(out: &mut dyn Write, line: impl AsRef<str>) -> Result<()> {
    writeln!(out, "{}", line.as_ref()).map_err(|e| Error::io("<stdout>", e))
}

fn simulate(config: ExperimentConfig, out: &mut dyn Write) -> Result<()> {
    let records = run_experiment(&config)?;
    let anchors = Anchors::for_config(&config)?;
    let summary = RunSummary::new(&records, anchors.as_ref(), config.cluster_radius)?;
    let written = emit_csv(&records, &summary, &config, &config.output_dir)?;

    say(out, format!("policy {}  samples {}  horizon {}  seed {}", config.policy, config.samples, config.horizon, config.seed))?;
    let means: Vec<String> = summary.mean_per_user.iter().map(|&m| format_sig6(m)).collect();
    say(out, format!("mean per user  {}", means.join("  ")))?;
    say(out, format!("mean total     {}", format_sig6(summary.mean_total)))?;
    let c = &summary.classification;
    say(out, format!(
        "social-maximum clusters {} ({:.1}%)  nash {} ({:.1}%)  unclassified {}",
        c.sm_count(),
        100.0 * summary.sm_fraction(),
        c.ne_count,
        100.0 * summary.ne_fraction(),
        c.unclassified_count
    ))?;
    for path in written {
        say(out, format!("wrote {}", path.display()))?;
    }
    Ok(())
}

fn payoff_text(p: &[f64]) -> String {
    p.iter().map(|&v| format_sig6(v)).collect::<Vec<_>>().join(", ")
}

fn print_oracle(args: &OracleArgs, out: &mut dyn Write) -> Result<()> {
    let model = ChannelModel::new(args.probs.clone(), args.collision_mode)?;
    let tensor = oracle::build_tensor_capped(&model, args.users, args.max_entries)?;
    let solution = oracle::solve(&tensor);

    say(out, format!("channels {}  users {}  joint actions {}", tensor.channels(), tensor.users(), tensor.len()))?;
    say(out, format!("social maxima ({}), total {}", solution.social_maxima.len(), format_sig6(solution.sm_value)))?;
    for a in &solution.social_maxima {
        say(out, format!("  {a}  {}", payoff_text(tensor.get(a).expect("in tensor"))))?;
    }
    say(out, format!("nash equilibria ({})", solution.nash_equilibria.len()))?;
    for a in &solution.nash_equilibria {
        say(out, format!("  {a}  {}", payoff_text(tensor.get(a).expect("in tensor"))))?;
    }
    print_slices(&tensor, &model, out)?;

    if let Some(path) = &args.csv {
        write_tensor_csv(&tensor, path)?;
        say(out, format!("wrote {}", path.display()))?;
    }
    Ok(())
}

/// User 1 by user 2 payoff tables over the top channels, one per choice of
/// the remaining users.
fn print_slices(tensor: &PayoffTensor, model: &ChannelModel, out: &mut dyn Write) -> Result<()> {
    let users = tensor.users();
    if users < 2 {
        return Ok(());
    }
    let mut top: Vec<usize> = (0..model.channels()).collect();
    top.sort_by(|&a, &b| model.probs()[b].total_cmp(&model.probs()[a]));
    top.truncate(users.min(model.channels()));
    top.sort_unstable();

    let rest = users - 2;
    let combos = top.len().pow(rest as u32);
    for combo in 0..combos {
        let mut fixed = Vec::with_capacity(rest);
        let mut c = combo;
        for _ in 0..rest {
            fixed.push(top[c % top.len()]);
            c /= top.len();
        }
        fixed.reverse();
        let header: Vec<String> = fixed
            .iter()
            .enumerate()
            .map(|(j, &k)| format!("user {} = {}", j + 3, channel_label(k)))
            .collect();
        say(out, "")?;
        say(out, if header.is_empty() { "payoffs".to_string() } else { format!("payoffs with {}", header.join(", ")) })?;
        for &row in &top {
            let cells: Vec<String> = top
                .iter()
                .map(|&col| {
                    let mut choices = vec![row, col];
                    choices.extend(&fixed);
                    let a = JointAction::new(choices);
                    format!("[{}]", payoff_text(tensor.get(&a).expect("in tensor")))
                })
                .collect();
            say(out, format!("  1:{}  {}", channel_label(row), cells.join("  ")))?;
        }
    }
    Ok(())
}

fn write_tensor_csv(tensor: &PayoffTensor, path: &std::path::Path) -> Result<()> {
    let mut text = String::from("action,total");
    for i in 0..tensor.users() {
        text.push_str(&format!(",payoff_user_{i}"));
    }
    text.push('\n');
    for (a, p) in tensor.iter() {
        let label: Vec<String> = a.choices().iter().map(|&k| channel_label(k)).collect();
        text.push_str(&label.join("-"));
        text.push(',');
        text.push_str(&format_sig6(p.iter().sum()));
        for v in p {
            text.push(',');
            text.push_str(&format_sig6(*v));
        }
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let code = run(std::iter::once("tow-bombe").chain(args.iter().copied()), &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        let mut base = ExperimentConfig::reference();
        base.seed = 5;
        base.samples = 3;
        std::fs::write(&path, base.to_toml()).unwrap();
        let args = RunArgs {
            config: Some(path),
            samples: Some(9),
            radius: Some(80.0),
            timeseries: true,
            ..RunArgs::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!((c.seed, c.samples, c.cluster_radius, c.timeseries), (5, 9, 80.0, true));
    }

    #[test]
    fn unknown_input_is_a_usage_error() {
        assert_eq!(run_capture(&["frobnicate"]).0, 2);
        assert_eq!(run_capture(&["simulate", "--bogus"]).0, 2);
        assert_eq!(run_capture(&["simulate", "--policy", "greedy"]).0, 2);
        assert_eq!(run_capture(&[]).0, 2);
    }

    #[test]
    fn bad_values_fail_cleanly() {
        assert_eq!(run_capture(&["oracle", "--probs", "0.5,1.5"]).0, 1);
        assert_eq!(run_capture(&["oracle", "--users", "9", "--max-entries", "100"]).0, 1);
        assert_eq!(run_capture(&["baseline", "--policy", "bombe"]).0, 1);
        assert_eq!(run_capture(&["sweep-omega", "--grid", "1:0:0.1"]).0, 1);
    }

    #[test]
    fn oracle_prints_tables() {
        let (code, text) = run_capture(&["oracle"]);
        assert_eq!(code, 0);
        assert!(text.contains("social maxima (6), total 1.2"));
        assert!(text.contains("(E,E,E)  0.3, 0.3, 0.3"));
        assert!(text.contains("payoffs with user 3 = C"));
        assert!(text.contains("[0.0333333, 0.0333333, 0.0333333]"));
    }
}
