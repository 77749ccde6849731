//! Extensive-form analysis of the escrow trade.
//!
//! The seller moves first (N, F or G), then the buyer replies. The buyer's
//! five policies collapse onto three edges per node:
//!
//! ```text
//!                  Seller
//!        F           G            N
//!     Buyer        Buyer        Buyer
//!   F'  G'/R  N'  F'  G'/R  N'  F'/S  G'/R  N'
//! ```
//!
//! Payoffs are exact signed integers. Two solvers are provided and must agree:
//! a recursive backward induction and a brute-force pass over every pure
//! profile that keeps those surviving the one-shot-deviation check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actors::{derive_seed, run_trade, BuyerPolicy, SellerAction, TradeConfig, TradeError};
use crate::ledger::Money;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameParams {
    /// `P_d`
    pub price: u64,
    /// `V_d`, the buyer's valuation of the product.
    pub value: u64,
    /// `E_S`
    pub seller_deposit: u64,
    /// `E_B`
    pub buyer_deposit: u64,
}

impl Default for GameParams {
    fn default() -> Self {
        GameParams { price: 10, value: 15, seller_deposit: 5, buyer_deposit: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ParamError {
    #[error("price must be positive")]
    ZeroPrice,
    #[error("requires a positive seller deposit (E_S > 0)")]
    ZeroSellerDeposit,
    #[error("requires a positive buyer deposit (E_B > 0)")]
    ZeroBuyerDeposit,
    #[error("requires value > price (V_d > P_d), got V_d = {value}, P_d = {price}; pass --allow-vd-le-pd to override")]
    ValueNotAbovePrice { value: u64, price: u64 },
}

impl GameParams {
    pub fn new(price: u64, value: u64, seller_deposit: u64, buyer_deposit: u64) -> Self {
        GameParams { price, value, seller_deposit, buyer_deposit }
    }

    /// Every equilibrium assumption these params break.
    pub fn violations(&self) -> Vec<ParamError> {
        let mut out = Vec::new();
        if self.seller_deposit == 0 {
            out.push(ParamError::ZeroSellerDeposit);
        }
        if self.buyer_deposit == 0 {
            out.push(ParamError::ZeroBuyerDeposit);
        }
        if self.value <= self.price {
            out.push(ParamError::ValueNotAbovePrice { value: self.value, price: self.price });
        }
        out
    }

    pub fn satisfies_assumptions(&self) -> bool {
        self.violations().is_empty()
    }

    /// What a trade needs before any ledger is touched.
    pub fn validate_for_trade(&self, allow_value_le_price: bool) -> Result<(), ParamError> {
        if self.price == 0 {
            return Err(ParamError::ZeroPrice);
        }
        match self.violations().into_iter().find(|v| {
            !(allow_value_le_price && matches!(v, ParamError::ValueNotAbovePrice { .. }))
        }) {
            Some(v) => Err(v),
            None => Ok(()),
        }
    }

    fn p(&self) -> i128 {
        self.price as i128
    }
    fn v(&self) -> i128 {
        self.value as i128
    }
    fn es(&self) -> i128 {
        self.seller_deposit as i128
    }
    fn eb(&self) -> i128 {
        self.buyer_deposit as i128
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PayoffPair {
    pub seller: i128,
    pub buyer: i128,
}

impl PayoffPair {
    pub fn new(seller: i128, buyer: i128) -> Self {
        PayoffPair { seller, buyer }
    }

    pub fn for_player(&self, player: Player) -> i128 {
        match player {
            Player::Seller => self.seller,
            Player::Buyer => self.buyer,
        }
    }
}

impl fmt::Display for PayoffPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.seller, self.buyer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    Seller,
    Buyer,
}

/// A buyer edge in the game tree. Under N the replay edge also carries the
/// frivolous complaint and is labelled `F'/S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BuyerEdge {
    Replay,
    GarbageOrSilent,
    Honest,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("no edge {label:?} below seller move {after}")]
    InvalidEdge { after: SellerAction, label: String },
}

impl BuyerEdge {
    /// Edge order in the tree.
    pub const ALL: [BuyerEdge; 3] = [BuyerEdge::Replay, BuyerEdge::GarbageOrSilent, BuyerEdge::Honest];

    pub fn label(self, after: SellerAction) -> &'static str {
        match (self, after) {
            (BuyerEdge::Replay, SellerAction::Honest) => "F'/S",
            (BuyerEdge::Replay, _) => "F'",
            (BuyerEdge::GarbageOrSilent, _) => "G'/R",
            (BuyerEdge::Honest, _) => "N'",
        }
    }

    pub fn parse(after: SellerAction, label: &str) -> Result<Self, GameError> {
        BuyerEdge::ALL
            .into_iter()
            .find(|e| e.label(after) == label)
            .ok_or_else(|| GameError::InvalidEdge { after, label: label.to_owned() })
    }

    /// Which edge a concrete policy lands on. S after F or G submits the
    /// extracted envelope, which is exactly what N' does there.
    pub fn for_policy(after: SellerAction, policy: BuyerPolicy) -> Self {
        match policy {
            BuyerPolicy::Honest => BuyerEdge::Honest,
            BuyerPolicy::Replay => BuyerEdge::Replay,
            BuyerPolicy::Garbage | BuyerPolicy::Silent => BuyerEdge::GarbageOrSilent,
            BuyerPolicy::Frivolous => match after {
                SellerAction::Honest => BuyerEdge::Replay,
                SellerAction::Falsified | SellerAction::Garbage => BuyerEdge::Honest,
            },
        }
    }
}

/// Closed-form leaf payoff.
pub fn analytic_payoff(params: &GameParams, seller: SellerAction, edge: BuyerEdge) -> PayoffPair {
    let (p, v, es, eb) = (params.p(), params.v(), params.es(), params.eb());
    use BuyerEdge as E;
    use SellerAction as S;
    match (seller, edge) {
        (S::Honest, E::Honest) => PayoffPair::new(p, v - p),
        (S::Honest, E::Replay) => PayoffPair::new(p, v - p - eb),
        (S::Honest, E::GarbageOrSilent) => PayoffPair::new(-es, v - p - eb),
        (S::Falsified, E::Honest) => PayoffPair::new(-es, 0),
        (S::Falsified, E::Replay) => PayoffPair::new(p, -p - eb),
        (S::Falsified, E::GarbageOrSilent) => PayoffPair::new(-es, -p - eb),
        (S::Garbage, E::Honest) => PayoffPair::new(-es, -p - eb),
        (S::Garbage, E::Replay) => PayoffPair::new(p, -p - eb),
        (S::Garbage, E::GarbageOrSilent) => PayoffPair::new(-es, -p - eb),
    }
}

pub fn analytic_payoff_by_label(
    params: &GameParams,
    seller: SellerAction,
    buyer_label: &str,
) -> Result<PayoffPair, GameError> {
    Ok(analytic_payoff(params, seller, BuyerEdge::parse(seller, buyer_label)?))
}

/// Symbolic leaf formula, as drawn on the tree.
pub fn leaf_formula(seller: SellerAction, edge: BuyerEdge) -> &'static str {
    use BuyerEdge as E;
    use SellerAction as S;
    match (seller, edge) {
        (S::Honest, E::Honest) => "(P_d, V_d-P_d)",
        (S::Honest, E::Replay) => "(P_d, V_d-P_d-E_B)",
        (S::Honest, E::GarbageOrSilent) => "(-E_S, V_d-P_d-E_B)",
        (S::Falsified, E::Honest) => "(-E_S, 0)",
        (S::Falsified | S::Garbage, E::Replay) => "(P_d, -P_d-E_B)",
        (S::Falsified | S::Garbage, E::GarbageOrSilent) | (S::Garbage, E::Honest) => "(-E_S, -P_d-E_B)",
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub label: String,
    pub child: NodeId,
    /// The honest move, preferred under [`TieBreak::HonestFirst`].
    pub honest: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Decision { player: Player, name: String, edges: Vec<Edge> },
    Leaf { payoff: PayoffPair, formula: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameTree {
    pub params: GameParams,
    pub root: NodeId,
    pub nodes: Vec<Node>,
}

/// One choice per decision node, in [`GameTree::decision_nodes`] order.
pub type Profile = Vec<usize>;

pub fn build_tree(params: &GameParams) -> GameTree {
    let mut nodes = vec![Node::Decision { player: Player::Seller, name: "seller".into(), edges: Vec::new() }];
    let mut root_edges = Vec::new();
    for seller in [SellerAction::Falsified, SellerAction::Garbage, SellerAction::Honest] {
        let buyer_id = nodes.len();
        nodes.push(Node::Decision { player: Player::Buyer, name: format!("buyer@{}", seller.label()), edges: Vec::new() });
        let mut edges = Vec::new();
        for edge in BuyerEdge::ALL {
            let leaf_id = nodes.len();
            nodes.push(Node::Leaf {
                payoff: analytic_payoff(params, seller, edge),
                formula: leaf_formula(seller, edge).to_owned(),
            });
            edges.push(Edge { label: edge.label(seller).to_owned(), child: leaf_id, honest: edge == BuyerEdge::Honest });
        }
        if let Node::Decision { edges: slot, .. } = &mut nodes[buyer_id] {
            *slot = edges;
        }
        root_edges.push(Edge { label: seller.label().to_owned(), child: buyer_id, honest: seller == SellerAction::Honest });
    }
    if let Node::Decision { edges, .. } = &mut nodes[0] {
        *edges = root_edges;
    }
    GameTree { params: *params, root: 0, nodes }
}

impl GameTree {
    pub fn decision_nodes(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| matches!(self.nodes[i], Node::Decision { .. }))
            .collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    pub fn node_name(&self, id: NodeId) -> String {
        match &self.nodes[id] {
            Node::Decision { name, .. } => name.clone(),
            Node::Leaf { .. } => format!("leaf{id}"),
        }
    }

    pub fn edges(&self, id: NodeId) -> &[Edge] {
        match &self.nodes[id] {
            Node::Decision { edges, .. } => edges,
            Node::Leaf { .. } => &[],
        }
    }

    /// Find a decision node by name, e.g. `"buyer@G"`.
    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.decision_nodes().into_iter().find(|&i| self.node_name(i) == name)
    }

    /// Every pure profile, in lexicographic order.
    pub fn all_profiles(&self) -> Vec<Profile> {
        let arities: Vec<usize> = self.decision_nodes().iter().map(|&d| self.edges(d).len()).collect();
        let mut out = vec![Vec::new()];
        for a in arities {
            out = out
                .into_iter()
                .flat_map(|p| (0..a).map(move |c| [p.clone(), vec![c]].concat()))
                .collect();
        }
        out
    }

    fn choice_at(&self, profile: &[usize], node: NodeId) -> usize {
        let idx = self.decision_nodes().iter().position(|&d| d == node).expect("decision node");
        profile[idx]
    }

    /// Leaf payoff reached from `node` when everyone follows `profile`.
    pub fn outcome_from(&self, node: NodeId, profile: &[usize]) -> PayoffPair {
        let mut at = node;
        loop {
            match &self.nodes[at] {
                Node::Leaf { payoff, .. } => return *payoff,
                Node::Decision { edges, .. } => at = edges[self.choice_at(profile, at)].child,
            }
        }
    }

    pub fn outcome(&self, profile: &[usize]) -> PayoffPair {
        self.outcome_from(self.root, profile)
    }

    /// Edge labels along the equilibrium path.
    pub fn path_labels(&self, profile: &[usize]) -> Vec<String> {
        let mut at = self.root;
        let mut out = Vec::new();
        while let Node::Decision { edges, .. } = &self.nodes[at] {
            let e = &edges[self.choice_at(profile, at)];
            out.push(e.label.clone());
            at = e.child;
        }
        out
    }

    /// Profitable single-node deviations: `(node, alternative edge, gain)`.
    /// Empty iff `profile` is subgame perfect.
    pub fn one_shot_deviations(&self, profile: &[usize]) -> Vec<(NodeId, usize, i128)> {
        let deciders = self.decision_nodes();
        let mut out = Vec::new();
        for (slot, &node) in deciders.iter().enumerate() {
            let Node::Decision { player, edges, .. } = &self.nodes[node] else { unreachable!() };
            let current = self.outcome_from(node, profile).for_player(*player);
            for alt in 0..edges.len() {
                if alt == profile[slot] {
                    continue;
                }
                let mut deviated = profile.to_vec();
                deviated[slot] = alt;
                let gain = self.outcome_from(node, &deviated).for_player(*player) - current;
                if gain > 0 {
                    out.push((node, alt, gain));
                }
            }
        }
        out
    }

    /// Decision nodes where, under `profile`, the mover has more than one
    /// optimal edge.
    pub fn indifferent_nodes(&self, profile: &[usize]) -> Vec<NodeId> {
        self.decision_nodes()
            .into_iter()
            .enumerate()
            .filter(|&(slot, node)| {
                let Node::Decision { player, edges, .. } = &self.nodes[node] else { unreachable!() };
                let values: Vec<i128> = (0..edges.len())
                    .map(|alt| {
                        let mut p = profile.to_vec();
                        p[slot] = alt;
                        self.outcome_from(node, &p).for_player(*player)
                    })
                    .collect();
                let best = *values.iter().max().expect("non-empty edges");
                values.iter().filter(|&&v| v == best).count() > 1
            })
            .map(|(_, node)| node)
            .collect()
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let p = &self.params;
        let _ = writeln!(s, "digraph escrow_game {{");
        let _ = writeln!(
            s,
            "  label=\"P_d={} V_d={} E_S={} E_B={}\";",
            p.price, p.value, p.seller_deposit, p.buyer_deposit
        );
        for (id, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Decision { player, .. } => {
                    let who = match player {
                        Player::Seller => "Seller",
                        Player::Buyer => "Buyer",
                    };
                    let _ = writeln!(s, "  n{id} [shape=circle, label=\"{who}\"];");
                }
                Node::Leaf { payoff, formula } => {
                    let _ = writeln!(s, "  n{id} [shape=box, label=\"{payoff}\\n{formula}\"];");
                }
            }
        }
        for (id, node) in self.nodes.iter().enumerate() {
            if let Node::Decision { edges, .. } = node {
                for e in edges {
                    let _ = writeln!(s, "  n{id} -> n{} [label=\"{}\"];", e.child, e.label);
                }
            }
        }
        s.push_str("}\n");
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree is always serializable")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// An indifferent mover takes the honest edge (N or N').
    HonestFirst,
    /// Keep every optimal edge.
    ReportAll,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equilibrium {
    #[serde(skip)]
    pub profile: Profile,
    /// Node name to chosen edge label, for every decision node.
    pub strategy: BTreeMap<String, String>,
    pub path: Vec<String>,
    pub path_payoff: PayoffPair,
}

impl Equilibrium {
    fn new(tree: &GameTree, profile: Profile) -> Self {
        let strategy = tree
            .decision_nodes()
            .into_iter()
            .zip(&profile)
            .map(|(node, &c)| (tree.node_name(node), tree.edges(node)[c].label.clone()))
            .collect();
        Equilibrium {
            strategy,
            path: tree.path_labels(&profile),
            path_payoff: tree.outcome(&profile),
            profile,
        }
    }

    pub fn seller_move(&self) -> &str {
        &self.path[0]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpneResult {
    /// `None` for brute-force enumeration.
    pub mode: Option<TieBreak>,
    pub equilibria: Vec<Equilibrium>,
    pub unique: bool,
    pub tie_nodes: Vec<String>,
    pub path_payoffs: Vec<PayoffPair>,
}

impl SpneResult {
    fn assemble(tree: &GameTree, mode: Option<TieBreak>, mut profiles: Vec<Profile>, ties: BTreeSet<NodeId>) -> Self {
        profiles.sort();
        profiles.dedup();
        let equilibria: Vec<Equilibrium> = profiles.into_iter().map(|p| Equilibrium::new(tree, p)).collect();
        let path_payoffs = equilibria.iter().map(|e| e.path_payoff).collect();
        SpneResult {
            mode,
            unique: ties.is_empty() && equilibria.len() == 1,
            tie_nodes: ties.into_iter().map(|n| tree.node_name(n)).collect(),
            path_payoffs,
            equilibria,
        }
    }

    pub fn profiles(&self) -> BTreeSet<Profile> {
        self.equilibria.iter().map(|e| e.profile.clone()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result is always serializable")
    }
}

type Partial = BTreeMap<NodeId, usize>;

fn solve(tree: &GameTree, node: NodeId, mode: TieBreak, ties: &mut BTreeSet<NodeId>) -> Vec<(Partial, PayoffPair)> {
    let (player, edges) = match &tree.nodes[node] {
        Node::Leaf { payoff, .. } => return vec![(Partial::new(), *payoff)],
        Node::Decision { player, edges, .. } => (*player, edges),
    };
    let children: Vec<Vec<(Partial, PayoffPair)>> =
        edges.iter().map(|e| solve(tree, e.child, mode, ties)).collect();

    // every combination of subgame-perfect continuations below this node
    let mut combos: Vec<Vec<usize>> = vec![Vec::new()];
    for child in &children {
        combos = combos
            .into_iter()
            .flat_map(|c| (0..child.len()).map(move |i| [c.clone(), vec![i]].concat()))
            .collect();
    }

    let mut out = Vec::new();
    for combo in combos {
        let values: Vec<PayoffPair> = combo.iter().enumerate().map(|(e, &i)| children[e][i].1).collect();
        let best = values.iter().map(|v| v.for_player(player)).max().expect("non-empty edges");
        let optimal: Vec<usize> = (0..edges.len()).filter(|&e| values[e].for_player(player) == best).collect();
        if optimal.len() > 1 {
            ties.insert(node);
        }
        let picks = match mode {
            TieBreak::ReportAll => optimal,
            TieBreak::HonestFirst => {
                vec![optimal.iter().copied().find(|&e| edges[e].honest).unwrap_or(optimal[0])]
            }
        };
        let mut below = Partial::new();
        for (e, &i) in combo.iter().enumerate() {
            below.extend(children[e][i].0.iter().map(|(k, v)| (*k, *v)));
        }
        for pick in picks {
            let mut partial = below.clone();
            partial.insert(node, pick);
            out.push((partial, values[pick]));
        }
    }
    out
}

/// Recursive backward induction. With [`TieBreak::ReportAll`] every
/// subgame-perfect pure profile is returned.
pub fn backward_induction(tree: &GameTree, tie_break: TieBreak) -> SpneResult {
    let mut ties = BTreeSet::new();
    let solutions = solve(tree, tree.root, tie_break, &mut ties);
    let order = tree.decision_nodes();
    let profiles = solutions
        .into_iter()
        .map(|(partial, _)| order.iter().map(|n| partial[n]).collect())
        .collect();
    SpneResult::assemble(tree, Some(tie_break), profiles, ties)
}

/// Brute force over every pure profile, keeping those with no profitable
/// one-shot deviation at any node.
pub fn enumerate_spne(tree: &GameTree) -> SpneResult {
    let profiles: Vec<Profile> = tree
        .all_profiles()
        .into_iter()
        .filter(|p| tree.one_shot_deviations(p).is_empty())
        .collect();
    let ties = profiles.iter().flat_map(|p| tree.indifferent_nodes(p)).collect();
    SpneResult::assemble(tree, None, profiles, ties)
}

/// 3 x 5 grid of payoffs indexed by [`SellerAction::ALL`] and [`BuyerPolicy::ALL`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub cells: Vec<Vec<PayoffPair>>,
}

impl PayoffMatrix {
    pub fn get(&self, seller: SellerAction, buyer: BuyerPolicy) -> PayoffPair {
        let r = SellerAction::ALL.iter().position(|&s| s == seller).expect("row");
        let c = BuyerPolicy::ALL.iter().position(|&b| b == buyer).expect("col");
        self.cells[r][c]
    }

    /// One line per seller action, tab-separated `s,b` cells.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for row in &self.cells {
            let line: Vec<String> = row.iter().map(|p| format!("{},{}", p.seller, p.buyer)).collect();
            s.push_str(&line.join("\t"));
            s.push('\n');
        }
        s
    }
}

/// The analytic leaf for every (action, policy) cell.
pub fn analytic_payoff_matrix(params: &GameParams) -> PayoffMatrix {
    PayoffMatrix {
        cells: SellerAction::ALL
            .iter()
            .map(|&s| {
                BuyerPolicy::ALL
                    .iter()
                    .map(|&b| analytic_payoff(params, s, BuyerEdge::for_policy(s, b)))
                    .collect()
            })
            .collect(),
    }
}

/// Runs all 15 trades. Each cell gets its own seed derived from `seed`.
pub fn simulated_payoff_matrix(
    params: &GameParams,
    gas: Money,
    allow_value_le_price: bool,
    seed: u64,
) -> Result<PayoffMatrix, TradeError> {
    let mut cells = Vec::with_capacity(3);
    for (r, &s) in SellerAction::ALL.iter().enumerate() {
        let mut row = Vec::with_capacity(5);
        for (c, &b) in BuyerPolicy::ALL.iter().enumerate() {
            let config = TradeConfig { params: *params, seller_action: s, buyer_policy: b, gas, allow_value_le_price };
            row.push(run_trade(&config, derive_seed(seed, (r * 5 + c) as u64))?.payoffs);
        }
        cells.push(row);
    }
    Ok(PayoffMatrix { cells })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRef {
    pub seller: SellerAction,
    pub buyer: BuyerPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixComparison {
    pub simulated: PayoffMatrix,
    pub analytic: PayoffMatrix,
    pub mismatches: Vec<CellRef>,
}

impl MatrixComparison {
    pub fn new(simulated: PayoffMatrix, analytic: PayoffMatrix) -> Self {
        let mut mismatches = Vec::new();
        for (r, &s) in SellerAction::ALL.iter().enumerate() {
            for (c, &b) in BuyerPolicy::ALL.iter().enumerate() {
                if simulated.cells[r][c] != analytic.cells[r][c] {
                    mismatches.push(CellRef { seller: s, buyer: b });
                }
            }
        }
        MatrixComparison { simulated, analytic, mismatches }
    }

    pub fn verdict(&self) -> &'static str {
        if self.mismatches.is_empty() {
            "EQUAL"
        } else {
            "MISMATCH"
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> GameParams {
        GameParams::new(10, 15, 5, 5)
    }

    #[test]
    fn leaf_formulas_at_reference_params() {
        let p = base();
        assert_eq!(analytic_payoff(&p, SellerAction::Honest, BuyerEdge::Honest), PayoffPair::new(10, 5));
        assert_eq!(analytic_payoff(&p, SellerAction::Falsified, BuyerEdge::Honest), PayoffPair::new(-5, 0));
        assert_eq!(analytic_payoff(&p, SellerAction::Garbage, BuyerEdge::Replay), PayoffPair::new(10, -15));
    }

    #[test]
    fn labels_parse_per_node() {
        let p = base();
        assert_eq!(analytic_payoff_by_label(&p, SellerAction::Honest, "F'/S").unwrap(), PayoffPair::new(10, 0));
        assert!(analytic_payoff_by_label(&p, SellerAction::Honest, "F'").is_err());
        assert!(analytic_payoff_by_label(&p, SellerAction::Falsified, "F'/S").is_err());
        assert!(analytic_payoff_by_label(&p, SellerAction::Garbage, "S").is_err());
    }

    #[test]
    fn tree_topology() {
        for p in [base(), GameParams::new(1, 0, 0, 0), GameParams::new(7, 100, 3, 9)] {
            let t = build_tree(&p);
            assert_eq!(t.decision_nodes().len(), 4);
            assert_eq!(t.edges(t.root).len(), 3);
            assert_eq!(t.leaf_count(), 9);
            for d in t.decision_nodes() {
                assert_eq!(t.edges(d).len(), 3);
            }
            let labels: Vec<&str> = t.edges(t.find("buyer@N").unwrap()).iter().map(|e| e.label.as_str()).collect();
            assert_eq!(labels, ["F'/S", "G'/R", "N'"]);
            assert_eq!(t.all_profiles().len(), 81);
        }
    }

    #[test]
    fn honest_first_reference_result() {
        let r = backward_induction(&build_tree(&base()), TieBreak::HonestFirst);
        assert_eq!(r.equilibria.len(), 1);
        let eq = &r.equilibria[0];
        assert_eq!(eq.path, ["N", "N'"]);
        assert_eq!(eq.path_payoff, PayoffPair::new(10, 5));
        assert!(eq.strategy.iter().filter(|(k, _)| k.starts_with("buyer")).all(|(_, v)| v == "N'"));
        assert!(!r.unique, "the G subgame is a tie");
        assert_eq!(r.tie_nodes, ["buyer@G"]);
    }

    #[test]
    fn report_all_lists_g_subgame_ties() {
        let t = build_tree(&base());
        let r = backward_induction(&t, TieBreak::ReportAll);
        // 3 replies at G; with F' there the seller is indifferent between N and G
        assert_eq!(r.equilibria.len(), 4);
        assert!(r.tie_nodes.contains(&"buyer@G".to_string()));
        assert!(r.tie_nodes.contains(&"seller".to_string()));
        for eq in r.equilibria.iter().filter(|e| e.seller_move() == "N") {
            assert_eq!(eq.path_payoff, PayoffPair::new(10, 5));
        }
        assert!(r.equilibria.iter().any(|e| e.seller_move() == "G" && e.path_payoff == PayoffPair::new(10, -15)));
        assert_eq!(enumerate_spne(&t).profiles(), r.profiles());
    }

    #[test]
    fn zero_buyer_deposit_creates_tie_at_n() {
        let t = build_tree(&GameParams::new(10, 15, 5, 0));
        let r = backward_induction(&t, TieBreak::ReportAll);
        assert!(!r.unique);
        assert!(r.tie_nodes.contains(&"buyer@N".to_string()));
        assert_eq!(enumerate_spne(&t).profiles(), r.profiles());
    }

    #[test]
    fn honest_first_is_contained_in_report_all() {
        for p in [base(), GameParams::new(10, 15, 5, 0), GameParams::new(10, 8, 0, 3)] {
            let t = build_tree(&p);
            let h = backward_induction(&t, TieBreak::HonestFirst).profiles();
            assert!(h.is_subset(&backward_induction(&t, TieBreak::ReportAll).profiles()));
        }
    }

    #[test]
    fn honest_profile_has_no_profitable_deviation() {
        let t = build_tree(&base());
        let honest = vec![2, 2, 2, 2];
        assert_eq!(t.path_labels(&honest), ["N", "N'"]);
        assert!(t.one_shot_deviations(&honest).is_empty());
    }

    #[test]
    fn dot_has_every_label() {
        let dot = build_tree(&base()).to_dot();
        for label in ["\"F\"", "\"G\"", "\"N\"", "\"F'/S\"", "\"G'/R\"", "(10, 5)\\n(P_d, V_d-P_d)"] {
            assert!(dot.contains(label), "{label}");
        }
    }

    #[test]
    fn violations_are_listed() {
        assert!(base().satisfies_assumptions());
        let p = GameParams::new(10, 10, 0, 0);
        assert_eq!(p.violations().len(), 3);
        assert_eq!(GameParams::new(0, 15, 5, 5).validate_for_trade(false), Err(ParamError::ZeroPrice));
        assert!(GameParams::new(10, 8, 5, 5).validate_for_trade(true).is_ok());
    }

    #[test]
    fn tsv_layout() {
        let tsv = analytic_payoff_matrix(&base()).to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "10,5\t10,0\t-5,0\t10,0\t-5,0");
        assert!(lines.iter().all(|l| l.split('\t').count() == 5));
    }
}
