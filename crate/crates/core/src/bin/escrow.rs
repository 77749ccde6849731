use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use escrow_core::harness::{
    cmd_analyze, cmd_matrix, cmd_run, cmd_sweep, load_settings, merge_settings, parse_cell, run_summary,
    write_output, HarnessError, OutputFormat, RunConfig, Settings, SweepConfig,
};
use escrow_core::build_tree;

#[derive(Parser)]
#[command(name = "escrow", version, about = "Dual-deposit escrow trade simulator and equilibrium checker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trade end to end and write its transcript.
    Run(TradeArgs),
    /// Compare the simulated 3x5 payoff matrix against the closed-form leaves.
    Matrix {
        #[command(flatten)]
        args: TradeArgs,
        /// Perturb one analytic cell (SELLER,BUYER) to exercise the mismatch path.
        #[arg(long, hide = true)]
        inject_mismatch: Option<String>,
    },
    /// Solve the game tree for its subgame-perfect equilibria.
    Analyze(TradeArgs),
    /// Check the equilibrium claim and oracle equivalence on random parameters.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct TradeArgs {
    /// Plain-text `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Product price P_d.
    #[arg(long)]
    price: Option<u64>,
    /// Buyer valuation V_d.
    #[arg(long)]
    value: Option<u64>,
    /// Seller deposit E_S.
    #[arg(long)]
    es: Option<u64>,
    /// Buyer deposit E_B.
    #[arg(long)]
    eb: Option<u64>,
    /// N, F or G.
    #[arg(long)]
    seller: Option<String>,
    /// Nprime, Fprime, Gprime, S or R.
    #[arg(long)]
    buyer: Option<String>,
    /// Gas charged per reconciliation.
    #[arg(long)]
    gas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// json, tsv or dot.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the game tree as DOT to this path (analyze).
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Proceed even when V_d <= P_d.
    #[arg(long)]
    allow_vd_le_pd: bool,
    /// honest or all; default reports both.
    #[arg(long)]
    tie_break: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Price range, e.g. 1..1000000.
    #[arg(long)]
    price: Option<String>,
    /// Range for V_d - P_d.
    #[arg(long)]
    margin: Option<String>,
    #[arg(long)]
    es: Option<String>,
    #[arg(long)]
    eb: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    gas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn put<T: ToString>(s: &mut Settings, key: &str, v: Option<T>) {
    if let Some(v) = v {
        s.insert(key.to_owned(), v.to_string());
    }
}

fn trade_config(a: TradeArgs) -> Result<RunConfig, HarnessError> {
    let base = a.config.as_deref().map(load_settings).transpose()?.unwrap_or_default();
    let mut flags = Settings::new();
    put(&mut flags, "price", a.price);
    put(&mut flags, "value", a.value);
    put(&mut flags, "es", a.es);
    put(&mut flags, "eb", a.eb);
    put(&mut flags, "seller", a.seller);
    put(&mut flags, "buyer", a.buyer);
    put(&mut flags, "gas", a.gas);
    put(&mut flags, "seed", a.seed);
    put(&mut flags, "format", a.format);
    put(&mut flags, "out", a.out.map(|p| p.display().to_string()));
    put(&mut flags, "dot", a.dot.map(|p| p.display().to_string()));
    put(&mut flags, "tie-break", a.tie_break);
    if a.allow_vd_le_pd {
        flags.insert("allow-vd-le-pd".into(), "true".into());
    }
    RunConfig::from_settings(&merge_settings(base, flags))
}

fn emit(out: Option<&PathBuf>, contents: &str) -> Result<(), HarnessError> {
    match out {
        Some(p) => write_output(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = trade_config(args)?;
            let outcome = cmd_run(&cfg)?;
            let path = cfg.output_path.clone().unwrap_or_else(|| PathBuf::from("transcript.json"));
            write_output(&path, &outcome.transcript.to_json())?;
            print!("{}", run_summary(&outcome));
            println!("transcript: {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Matrix { args, inject_mismatch } => {
            let cfg = trade_config(args)?;
            let inject = inject_mismatch.as_deref().map(parse_cell).transpose()?;
            let report = cmd_matrix(&cfg, inject)?;
            let rendered = report.render(cfg.format)?;
            if cfg.output_path.is_some() {
                emit(cfg.output_path.as_ref(), &rendered)?;
                print!("{}", report.summary());
            } else {
                print!("{rendered}");
                eprint!("{}", report.summary());
            }
            Ok(if report.comparison.mismatches.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Analyze(args) => {
            let cfg = trade_config(args)?;
            let report = cmd_analyze(&cfg)?;
            if let Some(dot) = &cfg.dot_path {
                write_output(dot, &build_tree(&cfg.params).to_dot())?;
            }
            // stdout always gets the readable report; --out gets the chosen format
            if let Some(out) = &cfg.output_path {
                let rendered = match cfg.format {
                    OutputFormat::Json => serde_json::to_string_pretty(&report).expect("serializable") + "\n",
                    OutputFormat::Dot => build_tree(&cfg.params).to_dot(),
                    OutputFormat::Tsv => report.render_text(),
                };
                write_output(out, &rendered)?;
            }
            print!("{}", report.render_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(a) => {
            let base = a.config.as_deref().map(load_settings).transpose()?.unwrap_or_default();
            let mut flags = Settings::new();
            put(&mut flags, "price", a.price);
            put(&mut flags, "margin", a.margin);
            put(&mut flags, "es", a.es);
            put(&mut flags, "eb", a.eb);
            put(&mut flags, "trials", a.trials);
            put(&mut flags, "gas", a.gas);
            put(&mut flags, "seed", a.seed);
            let cfg = SweepConfig::from_settings(&merge_settings(base, flags))?;
            let report = cmd_sweep(&cfg);
            if let Some(out) = &a.out {
                write_output(out, &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
            }
            print!("{}", report.render_text());
            Ok(if report.failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("escrow: {e}");
            ExitCode::from(2)
        }
    }
}

