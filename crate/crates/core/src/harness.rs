//! Command implementations behind the `escrow` binary.
//!
//! Settings come from two sources with the same key names: an optional
//! plain-text config file (`key = value` per line, `#` comments) and the
//! command-line flags. Flags win. Everything is validated before any world
//! is created.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actors::{derive_seed, run_trade, BuyerPolicy, SellerAction, TradeConfig, TradeError, TradeOutcome};
use crate::game::{
    analytic_payoff_matrix, backward_induction, build_tree, enumerate_spne, simulated_payoff_matrix, CellRef,
    GameParams, MatrixComparison, ParamError, PayoffPair, SpneResult, TieBreak,
};
use crate::ledger::Money;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamError),
    #[error(transparent)]
    Trade(#[from] TradeError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Tsv,
    Dot,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "tsv" => Ok(OutputFormat::Tsv),
            "dot" => Ok(OutputFormat::Dot),
            other => Err(format!("unknown format {other:?} (expected json, tsv or dot)")),
        }
    }
}

/// Raw `key -> value` settings, as read from a config file or flags.
pub type Settings = BTreeMap<String, String>;

const KNOWN_KEYS: &[&str] = &[
    "price", "value", "es", "eb", "seller", "buyer", "gas", "seed", "format", "out", "dot",
    "allow-vd-le-pd", "tie-break", "trials", "margin",
];

/// Parse the config file format: one `key = value` per line.
pub fn parse_settings(text: &str) -> Result<Settings, HarnessError> {
    let mut out = Settings::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(format!("line {}: expected key = value", n + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(config_err(format!("line {}: unknown key {key:?}", n + 1)));
        }
        out.insert(key, v.trim().to_owned());
    }
    Ok(out)
}

pub fn load_settings(path: &Path) -> Result<Settings, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_owned(), source })?;
    parse_settings(&text)
}

/// `overrides` (flags) take precedence over `base` (file).
pub fn merge_settings(base: Settings, overrides: Settings) -> Settings {
    let mut out = base;
    out.extend(overrides);
    out
}

fn get<T: FromStr>(s: &Settings, key: &str, default: T) -> Result<T, HarnessError>
where
    T::Err: std::fmt::Display,
{
    match s.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|e| config_err(format!("--{key} {v:?}: {e}"))),
    }
}

fn get_flag(s: &Settings, key: &str) -> Result<bool, HarnessError> {
    match s.get(key).map(String::as_str) {
        None | Some("false") | Some("0") | Some("no") => Ok(false),
        Some("true") | Some("1") | Some("yes") | Some("") => Ok(true),
        Some(other) => Err(config_err(format!("--{key}: expected true or false, got {other:?}"))),
    }
}

fn parse_tie_break(s: &str) -> Result<TieBreak, String> {
    match s {
        "honest" => Ok(TieBreak::HonestFirst),
        "all" => Ok(TieBreak::ReportAll),
        other => Err(format!("unknown tie-break {other:?} (expected honest or all)")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: GameParams,
    pub seller_action: SellerAction,
    pub buyer_policy: BuyerPolicy,
    pub seed: u64,
    pub gas: Money,
    pub output_path: Option<PathBuf>,
    pub dot_path: Option<PathBuf>,
    pub format: OutputFormat,
    pub allow_value_le_price: bool,
    /// `None` means report both modes.
    pub tie_break: Option<TieBreak>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: GameParams::default(),
            seller_action: SellerAction::Honest,
            buyer_policy: BuyerPolicy::Honest,
            seed: 0,
            gas: Money::ZERO,
            output_path: None,
            dot_path: None,
            format: OutputFormat::Json,
            allow_value_le_price: false,
            tie_break: None,
        }
    }
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, HarnessError> {
        let d = RunConfig::default();
        let tie_break = match s.get("tie-break") {
            None => None,
            Some(v) => Some(parse_tie_break(v).map_err(config_err)?),
        };
        Ok(RunConfig {
            params: GameParams {
                price: get(s, "price", d.params.price)?,
                value: get(s, "value", d.params.value)?,
                seller_deposit: get(s, "es", d.params.seller_deposit)?,
                buyer_deposit: get(s, "eb", d.params.buyer_deposit)?,
            },
            seller_action: get(s, "seller", d.seller_action)?,
            buyer_policy: get(s, "buyer", d.buyer_policy)?,
            seed: get(s, "seed", d.seed)?,
            gas: Money(get(s, "gas", 0u64)?),
            output_path: s.get("out").map(PathBuf::from),
            dot_path: s.get("dot").map(PathBuf::from),
            format: get(s, "format", d.format)?,
            allow_value_le_price: get_flag(s, "allow-vd-le-pd")?,
            tie_break,
        })
    }

    pub fn trade_config(&self) -> TradeConfig {
        TradeConfig {
            params: self.params,
            seller_action: self.seller_action,
            buyer_policy: self.buyer_policy,
            gas: self.gas,
            allow_value_le_price: self.allow_value_le_price,
        }
    }

    /// Parameter checks shared by every command, plus the gas bound.
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.params.validate_for_trade(self.allow_value_le_price)?;
        let gas = self.gas.0;
        if gas > self.params.seller_deposit || gas > self.params.buyer_deposit {
            return Err(config_err(format!(
                "gas {gas} exceeds a deposit (E_S = {}, E_B = {}); slashed deposits must cover gas",
                self.params.seller_deposit, self.params.buyer_deposit
            )));
        }
        Ok(())
    }
}

pub fn write_output(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|source| HarnessError::Io { path: path.to_owned(), source })
}

/// One end-to-end trade.
pub fn cmd_run(config: &RunConfig) -> Result<TradeOutcome, HarnessError> {
    config.validate()?;
    Ok(run_trade(&config.trade_config(), config.seed)?)
}

pub fn run_summary(outcome: &TradeOutcome) -> String {
    format!(
        "resolution: {:?}\npayoffs: {} (seller, buyer)\n",
        outcome.resolution.phase, outcome.payoffs
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub params: GameParams,
    pub seed: u64,
    pub gas: Money,
    pub rows: Vec<SellerAction>,
    pub columns: Vec<BuyerPolicy>,
    pub comparison: MatrixComparison,
    pub verdict: String,
}

impl MatrixReport {
    pub fn render(&self, format: OutputFormat) -> Result<String, HarnessError> {
        match format {
            OutputFormat::Json => Ok(serde_json::to_string_pretty(self).expect("serializable") + "\n"),
            OutputFormat::Tsv => Ok(self.comparison.simulated.to_tsv()),
            OutputFormat::Dot => Err(config_err("matrix has no DOT view; use json or tsv")),
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!("verdict: {}\n", self.verdict);
        for c in &self.comparison.mismatches {
            let _ = writeln!(
                s,
                "mismatch at ({}, {}): simulated {} analytic {}",
                c.seller,
                c.buyer,
                self.comparison.simulated.get(c.seller, c.buyer),
                self.comparison.analytic.get(c.seller, c.buyer)
            );
        }
        s
    }
}

/// Simulated vs analytic 3 x 5 payoff table. `inject` perturbs one analytic
/// cell so the comparison can be exercised against a known mismatch.
pub fn cmd_matrix(config: &RunConfig, inject: Option<CellRef>) -> Result<MatrixReport, HarnessError> {
    config.validate()?;
    let simulated = simulated_payoff_matrix(&config.params, config.gas, config.allow_value_le_price, config.seed)?;
    let mut analytic = analytic_payoff_matrix(&config.params);
    if let Some(cell) = inject {
        let r = SellerAction::ALL.iter().position(|&s| s == cell.seller).expect("row");
        let c = BuyerPolicy::ALL.iter().position(|&b| b == cell.buyer).expect("col");
        analytic.cells[r][c].seller += 1;
    }
    let comparison = MatrixComparison::new(simulated, analytic);
    Ok(MatrixReport {
        params: config.params,
        seed: config.seed,
        gas: config.gas,
        rows: SellerAction::ALL.to_vec(),
        columns: BuyerPolicy::ALL.to_vec(),
        verdict: comparison.verdict().to_owned(),
        comparison,
    })
}

pub fn parse_cell(s: &str) -> Result<CellRef, HarnessError> {
    let (a, b) = s.split_once(',').ok_or_else(|| config_err("cell must be SELLER,BUYER, e.g. N,Nprime"))?;
    Ok(CellRef {
        seller: a.trim().parse().map_err(config_err)?,
        buyer: b.trim().parse().map_err(config_err)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub params: GameParams,
    pub violated_assumptions: Vec<String>,
    pub honest_first: Option<SpneResult>,
    pub report_all: Option<SpneResult>,
    /// Brute-force enumeration matches backward induction with all ties kept.
    pub enumeration_agrees: bool,
}

pub fn cmd_analyze(config: &RunConfig) -> Result<AnalyzeReport, HarnessError> {
    config.validate()?;
    let tree = build_tree(&config.params);
    let all = backward_induction(&tree, TieBreak::ReportAll);
    let enumeration_agrees = enumerate_spne(&tree).profiles() == all.profiles();
    let want = |m: TieBreak| config.tie_break.is_none() || config.tie_break == Some(m);
    Ok(AnalyzeReport {
        params: config.params,
        violated_assumptions: config.params.violations().iter().map(ToString::to_string).collect(),
        honest_first: want(TieBreak::HonestFirst).then(|| backward_induction(&tree, TieBreak::HonestFirst)),
        report_all: want(TieBreak::ReportAll).then_some(all),
        enumeration_agrees,
    })
}

impl AnalyzeReport {
    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(
            s,
            "params: P_d={} V_d={} E_S={} E_B={}",
            p.price, p.value, p.seller_deposit, p.buyer_deposit
        );
        for v in &self.violated_assumptions {
            let _ = writeln!(s, "WARNING violated assumption: {v}");
        }
        for (name, r) in [("honest-first", &self.honest_first), ("report-all", &self.report_all)] {
            let Some(r) = r else { continue };
            let _ = writeln!(s, "[{name}] {} equilibria, unique: {}", r.equilibria.len(), r.unique);
            if !r.tie_nodes.is_empty() {
                let _ = writeln!(s, "  indifferent nodes: {}", r.tie_nodes.join(", "));
            }
            for eq in &r.equilibria {
                let strat: Vec<String> = eq.strategy.iter().map(|(k, v)| format!("{k}={v}")).collect();
                let _ = writeln!(s, "  path {} -> {}   [{}]", eq.path.join(" "), eq.path_payoff, strat.join(" "));
            }
        }
        let _ = writeln!(s, "enumeration agrees: {}", self.enumeration_agrees);
        s
    }
}

fn parse_range(s: &str) -> Result<RangeInclusive<u64>, HarnessError> {
    let bad = || config_err(format!("bad range {s:?}; expected N or LO..HI"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        return Err(config_err(format!("empty range {s:?}")));
    }
    Ok(lo..=hi)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub price: RangeInclusive<u64>,
    /// `V_d - P_d`
    pub margin: RangeInclusive<u64>,
    pub seller_deposit: RangeInclusive<u64>,
    pub buyer_deposit: RangeInclusive<u64>,
    pub trials: usize,
    pub seed: u64,
    pub gas: Money,
    /// Also run the 15-cell simulated matrix per trial.
    pub simulate: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            price: 1..=1_000_000,
            margin: 1..=1_000_000,
            seller_deposit: 1..=1_000_000,
            buyer_deposit: 1..=1_000_000,
            trials: 1000,
            seed: 0,
            gas: Money::ZERO,
            simulate: true,
        }
    }
}

impl SweepConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, HarnessError> {
        let d = SweepConfig::default();
        let range = |k: &str, def: RangeInclusive<u64>| s.get(k).map_or(Ok(def), |v| parse_range(v));
        let cfg = SweepConfig {
            price: range("price", d.price)?,
            margin: range("margin", d.margin)?,
            seller_deposit: range("es", d.seller_deposit)?,
            buyer_deposit: range("eb", d.buyer_deposit)?,
            trials: get(s, "trials", d.trials)?,
            seed: get(s, "seed", d.seed)?,
            gas: Money(get(s, "gas", 0u64)?),
            simulate: d.simulate,
        };
        if *cfg.price.start() == 0 {
            return Err(config_err("sweep price range must start at 1"));
        }
        if cfg.trials == 0 {
            return Err(config_err("trials must be positive"));
        }
        Ok(cfg)
    }

    pub fn sample(&self, trial: usize) -> GameParams {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, trial as u64));
        let price = rng.random_range(self.price.clone());
        let margin = rng.random_range(self.margin.clone());
        GameParams {
            price,
            value: price.saturating_add(margin),
            seller_deposit: rng.random_range(self.seller_deposit.clone()),
            buyer_deposit: rng.random_range(self.buyer_deposit.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub params: GameParams,
    pub passed: bool,
    pub failures: Vec<String>,
    /// Strict uniqueness of the equilibrium set.
    pub unique: bool,
    pub tie_nodes: Vec<String>,
    /// Why the simulated matrix was not run, if it was not.
    pub simulation_skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    pub non_unique: usize,
    pub ties_at_honest_node: usize,
    pub simulation_skipped: usize,
    pub counterexamples: Vec<TrialResult>,
}

impl SweepReport {
    pub fn render_text(&self) -> String {
        let mut s = format!(
            "sweep: {}/{} passed, {} failed; {} non-unique (buyer@N ties in {}), simulation skipped in {}\n",
            self.passed, self.trials, self.failed, self.non_unique, self.ties_at_honest_node, self.simulation_skipped
        );
        for c in &self.counterexamples {
            let _ = writeln!(s, "counterexample trial {} {:?}: {}", c.trial, c.params, c.failures.join("; "));
        }
        s
    }
}

/// The properties every sampled instance must satisfy.
pub fn check_instance(params: &GameParams, gas: Money, seed: u64, simulate: bool) -> TrialResult {
    let mut failures = Vec::new();
    let tree = build_tree(params);
    let honest = backward_induction(&tree, TieBreak::HonestFirst);
    let all = backward_induction(&tree, TieBreak::ReportAll);
    let brute = enumerate_spne(&tree);
    let on_path = PayoffPair::new(params.price as i128, params.value as i128 - params.price as i128);

    // the equilibrium claim is conditional on E_S > 0, E_B > 0 and V_d > P_d
    if params.satisfies_assumptions() {
        let ok = honest.equilibria.len() == 1
            && honest.equilibria[0].path_payoff == on_path
            && honest.equilibria[0].seller_move() == "N"
            && honest.equilibria[0].strategy.iter().filter(|(k, _)| k.starts_with("buyer")).all(|(_, v)| v == "N'");
        if !ok {
            failures.push("honest-first backward induction is not (N, N' everywhere)".to_owned());
        }
        if all.equilibria.iter().any(|e| e.seller_move() == "N" && e.path_payoff != on_path) {
            failures.push("an equilibrium with seller N has a different path payoff".to_owned());
        }
    }
    if brute.profiles() != all.profiles() {
        failures.push("enumeration and backward induction disagree".to_owned());
    }
    if !all.tie_nodes.iter().any(|n| n == "buyer@G") || all.unique {
        failures.push("G-subgame indifference not reported".to_owned());
    }

    let simulation_skipped = match params.validate_for_trade(false) {
        Err(e) => Some(e.to_string()),
        Ok(()) if !simulate => Some("disabled".to_owned()),
        Ok(()) if gas.0 > params.seller_deposit.min(params.buyer_deposit) => Some("gas exceeds a deposit".to_owned()),
        Ok(()) => {
            match simulated_payoff_matrix(params, gas, false, seed) {
                Ok(sim) => {
                    let cmp = MatrixComparison::new(sim, analytic_payoff_matrix(params));
                    if !cmp.mismatches.is_empty() {
                        failures.push(format!("simulated matrix differs from analytic at {:?}", cmp.mismatches));
                    }
                }
                Err(e) => failures.push(format!("simulation failed: {e}")),
            }
            None
        }
    };

    TrialResult {
        trial: 0,
        params: *params,
        passed: failures.is_empty(),
        failures,
        unique: all.unique,
        tie_nodes: all.tie_nodes,
        simulation_skipped,
    }
}

/// Random parameter sweep. Trials run in parallel; results are aggregated
/// in trial order so the report is deterministic in `seed`.
pub fn cmd_sweep(config: &SweepConfig) -> SweepReport {
    let mut results: Vec<TrialResult> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let params = config.sample(i);
            let mut r = check_instance(&params, config.gas, derive_seed(config.seed ^ 0x5eed, i as u64), config.simulate);
            r.trial = i;
            r
        })
        .collect();
    results.sort_by_key(|r| r.trial);
    let passed = results.iter().filter(|r| r.passed).count();
    SweepReport {
        config: config.clone(),
        trials: results.len(),
        passed,
        failed: results.len() - passed,
        non_unique: results.iter().filter(|r| !r.unique).count(),
        ties_at_honest_node: results.iter().filter(|r| r.tie_nodes.iter().any(|n| n == "buyer@N")).count(),
        simulation_skipped: results.iter().filter(|r| r.simulation_skipped.is_some()).count(),
        counterexamples: results.into_iter().filter(|r| !r.passed).collect(),
    }
}
