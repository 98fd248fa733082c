//! Two-player zero-sum extensive-form games with perfect recall.
//!
//! A [`TreeGame`] is a flat arena of nodes in breadth-first order: the root is
//! node 0, the children of a node are contiguous and always have larger ids
//! than their parent. Forward passes therefore walk ids upwards and backward
//! passes walk them downwards, without recursion.
//!
//! Terminal payoffs store `u_1(z)`, the utility of player 1; player 0
//! receives `−u_1(z)`.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{ensure_len, Error, Result};
use crate::nfg::{MatrixGame, Player, SimplexVector};

const CHANCE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TreeErrorKind {
    ImperfectRecall,
    NonSimplexChance,
    Cycle,
    DanglingInfoset,
    Malformed,
}

impl fmt::Display for TreeErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TreeErrorKind::ImperfectRecall => "IMPERFECT_RECALL",
            TreeErrorKind::NonSimplexChance => "NON_SIMPLEX_CHANCE",
            TreeErrorKind::Cycle => "CYCLE",
            TreeErrorKind::DanglingInfoset => "DANGLING_INFOSET",
            TreeErrorKind::Malformed => "MALFORMED",
        };
        f.write_str(s)
    }
}

/// First violated tree invariant, with the offending node when there is one.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind}{}: {detail}", .node.map(|n| format!(" at node {n}")).unwrap_or_default())]
pub struct TreeError {
    pub kind: TreeErrorKind,
    pub node: Option<usize>,
    pub detail: String,
}

impl TreeError {
    fn new(kind: TreeErrorKind, node: Option<usize>, detail: impl Into<String>) -> Self {
        TreeError {
            kind,
            node,
            detail: detail.into(),
        }
    }
}

/// Declaration of an information set in the serialized form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfosetDecl {
    pub label: String,
    pub actions: Vec<String>,
}

/// One node in the serialized form; children are node ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RawNode {
    Player {
        player: Player,
        infoset: usize,
        children: Vec<usize>,
    },
    Chance {
        probs: Vec<f64>,
        children: Vec<usize>,
    },
    Terminal {
        payoff: f64,
    },
}

/// Serialized game: per-player infoset tables plus a node array rooted at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTree {
    pub infosets: [Vec<InfosetDecl>; 2],
    pub nodes: Vec<RawNode>,
}

fn raw_children(node: &RawNode) -> &[usize] {
    match node {
        RawNode::Player { children, .. } | RawNode::Chance { children, .. } => children,
        RawNode::Terminal { .. } => &[],
    }
}

/// Checks every [`TreeGame`] invariant on a serialized tree.
pub fn validate(raw: &RawTree) -> Result<(), TreeError> {
    use TreeErrorKind::*;
    let n = raw.nodes.len();
    if n == 0 {
        return Err(TreeError::new(Malformed, None, "tree has no nodes"));
    }
    for player in Player::BOTH {
        let mut seen = HashMap::new();
        for (id, decl) in raw.infosets[player.index()].iter().enumerate() {
            if let Some(prev) = seen.insert(decl.label.as_str(), id) {
                return Err(TreeError::new(
                    Malformed,
                    None,
                    format!(
                        "player {player} infosets {prev} and {id} share label {:?}",
                        decl.label
                    ),
                ));
            }
            if decl.actions.is_empty() {
                return Err(TreeError::new(
                    Malformed,
                    None,
                    format!("player {player} infoset {id} has no actions"),
                ));
            }
        }
    }

    // Breadth-first walk: structure, then per-node local checks.
    let mut visited = vec![false; n];
    // Last own (infoset, action) of each player on the path to the node.
    let mut last_seq: Vec<[Option<(usize, usize)>; 2]> = vec![[None, None]; n];
    let mut infoset_seq: [Vec<Option<Option<(usize, usize)>>>; 2] = [
        vec![None; raw.infosets[0].len()],
        vec![None; raw.infosets[1].len()],
    ];
    let mut queue = VecDeque::from([0usize]);
    visited[0] = true;
    while let Some(id) = queue.pop_front() {
        let node = &raw.nodes[id];
        match node {
            RawNode::Player {
                player,
                infoset,
                children,
            } => {
                let Some(decl) = raw.infosets[player.index()].get(*infoset) else {
                    return Err(TreeError::new(
                        DanglingInfoset,
                        Some(id),
                        format!("player {player} infoset {infoset} is not declared"),
                    ));
                };
                if children.len() != decl.actions.len() {
                    return Err(TreeError::new(
                        ImperfectRecall,
                        Some(id),
                        format!(
                            "node has {} actions but infoset {:?} has {}",
                            children.len(),
                            decl.label,
                            decl.actions.len()
                        ),
                    ));
                }
                let seq = last_seq[id][player.index()];
                match &mut infoset_seq[player.index()][*infoset] {
                    slot @ None => *slot = Some(seq),
                    Some(expected) if *expected != seq => {
                        return Err(TreeError::new(
                            ImperfectRecall,
                            Some(id),
                            format!("player {player} reaches infoset {:?} along different own histories", decl.label),
                        ));
                    }
                    Some(_) => {}
                }
            }
            RawNode::Chance { probs, children } => {
                if children.is_empty() || probs.len() != children.len() {
                    return Err(TreeError::new(
                        NonSimplexChance,
                        Some(id),
                        format!(
                            "{} probabilities for {} children",
                            probs.len(),
                            children.len()
                        ),
                    ));
                }
                let sum: f64 = probs.iter().sum();
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0)
                    || (sum - 1.0).abs() > CHANCE_SUM_TOLERANCE
                {
                    return Err(TreeError::new(
                        NonSimplexChance,
                        Some(id),
                        format!("probabilities {probs:?}"),
                    ));
                }
            }
            RawNode::Terminal { payoff } => {
                if !payoff.is_finite() {
                    return Err(TreeError::new(Malformed, Some(id), "non-finite payoff"));
                }
            }
        }
        for (a, &child) in raw_children(node).iter().enumerate() {
            if child >= n {
                return Err(TreeError::new(
                    Malformed,
                    Some(id),
                    format!("child {child} out of range"),
                ));
            }
            if visited[child] {
                return Err(TreeError::new(
                    Cycle,
                    Some(child),
                    format!("node reached twice, again from node {id}"),
                ));
            }
            visited[child] = true;
            let mut seq = last_seq[id];
            if let RawNode::Player {
                player, infoset, ..
            } = node
            {
                seq[player.index()] = Some((*infoset, a));
            }
            last_seq[child] = seq;
            queue.push_back(child);
        }
    }
    if let Some(orphan) = visited.iter().position(|v| !v) {
        return Err(TreeError::new(
            Malformed,
            Some(orphan),
            "node unreachable from the root",
        ));
    }
    for player in Player::BOTH {
        if let Some(unused) = infoset_seq[player.index()].iter().position(Option::is_none) {
            return Err(TreeError::new(
                DanglingInfoset,
                None,
                format!("player {player} infoset {unused} has no member nodes"),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Player { player: Player, infoset: usize },
    Chance,
    Terminal { payoff: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub parent: Option<usize>,
    /// Index of this node among its parent's children.
    pub action: usize,
    /// Probability of this node given its parent when the parent is a chance
    /// node, 1 otherwise.
    pub chance_prob: f64,
    pub first_child: usize,
    pub num_children: usize,
    /// Last sequence of each player on the path to this node.
    pub last_sequence: [Option<usize>; 2],
}

impl Node {
    pub fn children(&self) -> Range<usize> {
        self.first_child..self.first_child + self.num_children
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.kind, NodeKind::Terminal { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Infoset {
    pub label: String,
    pub actions: Vec<String>,
    /// Member nodes in ascending id order.
    pub members: Vec<usize>,
    /// Id of the first sequence `(I, 0)`; `(I, a)` is `sequence_offset + a`.
    pub sequence_offset: usize,
    /// The player's sequence leading into this infoset.
    pub parent_sequence: Option<usize>,
    /// Number of own infosets on the path from the root.
    pub depth: usize,
}

impl Infoset {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
}

/// A validated extensive-form game. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTree", into = "RawTree")]
pub struct TreeGame {
    nodes: Vec<Node>,
    infosets: [Vec<Infoset>; 2],
    /// For every sequence, the infosets entered directly after it.
    sequence_children: [Vec<Vec<usize>>; 2],
    root_infosets: [Vec<usize>; 2],
    /// Infosets with the deepest first.
    bottom_up: [Vec<usize>; 2],
    terminals: Vec<usize>,
    max_depth: usize,
}

impl TryFrom<RawTree> for TreeGame {
    type Error = TreeError;

    fn try_from(raw: RawTree) -> Result<Self, TreeError> {
        TreeGame::from_raw(&raw)
    }
}

impl From<TreeGame> for RawTree {
    fn from(game: TreeGame) -> Self {
        game.to_raw()
    }
}

/// Recursive description of a game used by constructors.
#[derive(Debug, Clone, PartialEq)]
pub enum GameNode {
    /// Infosets are identified by label; action labels are taken from the
    /// first member encountered.
    Decision {
        player: Player,
        infoset: String,
        actions: Vec<(String, GameNode)>,
    },
    Chance(Vec<(f64, GameNode)>),
    Terminal(f64),
}

impl TreeGame {
    /// Validates `raw` and stores it in canonical breadth-first order.
    pub fn from_raw(raw: &RawTree) -> Result<Self, TreeError> {
        validate(raw)?;
        let n = raw.nodes.len();
        let mut order = Vec::with_capacity(n);
        let mut new_id = vec![0usize; n];
        order.push(0usize);
        let mut head = 0;
        while head < order.len() {
            let old = order[head];
            new_id[old] = head;
            order.extend_from_slice(raw_children(&raw.nodes[old]));
            head += 1;
        }

        let mut infosets: [Vec<Infoset>; 2] = [0, 1].map(|p: usize| {
            raw.infosets[p]
                .iter()
                .map(|d| Infoset {
                    label: d.label.clone(),
                    actions: d.actions.clone(),
                    members: Vec::new(),
                    sequence_offset: 0,
                    parent_sequence: None,
                    depth: 0,
                })
                .collect()
        });
        for p in 0..2 {
            let mut offset = 0;
            for info in &mut infosets[p] {
                info.sequence_offset = offset;
                offset += info.actions.len();
            }
        }

        let mut nodes: Vec<Node> = Vec::with_capacity(n);
        let mut next_child = 1usize;
        let mut parent_of = vec![None; n];
        let mut action_of = vec![0usize; n];
        let mut prob_of = vec![1.0f64; n];
        let mut last_sequence = vec![[None, None]; n];
        let mut terminals = Vec::new();
        for (id, &old) in order.iter().enumerate() {
            let raw_node = &raw.nodes[old];
            let kids = raw_children(raw_node);
            let first_child = next_child;
            next_child += kids.len();
            let kind = match raw_node {
                RawNode::Player {
                    player, infoset, ..
                } => {
                    let info = &mut infosets[player.index()][*infoset];
                    info.members.push(id);
                    if info.members.len() == 1 {
                        info.parent_sequence = last_sequence[id][player.index()];
                    }
                    NodeKind::Player {
                        player: *player,
                        infoset: *infoset,
                    }
                }
                RawNode::Chance { .. } => NodeKind::Chance,
                RawNode::Terminal { payoff } => {
                    terminals.push(id);
                    NodeKind::Terminal { payoff: *payoff }
                }
            };
            for (a, _) in kids.iter().enumerate() {
                let child = first_child + a;
                parent_of[child] = Some(id);
                action_of[child] = a;
                let mut seq = last_sequence[id];
                match raw_node {
                    RawNode::Player {
                        player, infoset, ..
                    } => {
                        seq[player.index()] =
                            Some(infosets[player.index()][*infoset].sequence_offset + a);
                    }
                    RawNode::Chance { probs, .. } => prob_of[child] = probs[a],
                    RawNode::Terminal { .. } => {}
                }
                last_sequence[child] = seq;
            }
            nodes.push(Node {
                kind,
                parent: parent_of[id],
                action: action_of[id],
                chance_prob: prob_of[id],
                first_child: if kids.is_empty() { 0 } else { first_child },
                num_children: kids.len(),
                last_sequence: last_sequence[id],
            });
        }

        let mut sequence_children: [Vec<Vec<usize>>; 2] = [0, 1].map(|p: usize| {
            let total = infosets[p].iter().map(Infoset::num_actions).sum();
            vec![Vec::new(); total]
        });
        let mut root_infosets: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        let mut bottom_up: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
        for p in 0..2 {
            // Parent infosets have smaller first-member ids, so one pass in
            // that order resolves depths.
            let mut by_first: Vec<usize> = (0..infosets[p].len()).collect();
            by_first.sort_by_key(|&i| infosets[p][i].members[0]);
            let mut owner = vec![0usize; sequence_children[p].len()];
            for (i, info) in infosets[p].iter().enumerate() {
                for a in 0..info.num_actions() {
                    owner[info.sequence_offset + a] = i;
                }
            }
            for &i in &by_first {
                let depth = match infosets[p][i].parent_sequence {
                    None => {
                        root_infosets[p].push(i);
                        0
                    }
                    Some(seq) => {
                        sequence_children[p][seq].push(i);
                        infosets[p][owner[seq]].depth + 1
                    }
                };
                infosets[p][i].depth = depth;
            }
            for children in &mut sequence_children[p] {
                children.sort_unstable();
            }
            root_infosets[p].sort_unstable();
            let mut order: Vec<usize> = (0..infosets[p].len()).collect();
            order.sort_by_key(|&i| (std::cmp::Reverse(infosets[p][i].depth), i));
            bottom_up[p] = order;
        }

        let mut depth = vec![0usize; n];
        let mut max_depth = 0;
        for id in 1..n {
            depth[id] = depth[nodes[id].parent.expect("non-root node has a parent")] + 1;
            max_depth = max_depth.max(depth[id]);
        }

        Ok(TreeGame {
            nodes,
            infosets,
            sequence_children,
            root_infosets,
            bottom_up,
            terminals,
            max_depth,
        })
    }

    /// Serialized form in canonical order.
    pub fn to_raw(&self) -> RawTree {
        let infosets = [0, 1].map(|p: usize| {
            self.infosets[p]
                .iter()
                .map(|i| InfosetDecl {
                    label: i.label.clone(),
                    actions: i.actions.clone(),
                })
                .collect()
        });
        let nodes = self
            .nodes
            .iter()
            .map(|node| {
                let children: Vec<usize> = node.children().collect();
                match node.kind {
                    NodeKind::Player { player, infoset } => RawNode::Player {
                        player,
                        infoset,
                        children,
                    },
                    NodeKind::Chance => RawNode::Chance {
                        probs: children
                            .iter()
                            .map(|&c| self.nodes[c].chance_prob)
                            .collect(),
                        children,
                    },
                    NodeKind::Terminal { payoff } => RawNode::Terminal { payoff },
                }
            })
            .collect();
        RawTree { infosets, nodes }
    }

    /// Builds a game from a recursive description.
    pub fn from_root(root: GameNode) -> Result<Self, TreeError> {
        let mut decls: [Vec<InfosetDecl>; 2] = [Vec::new(), Vec::new()];
        let mut ids: [HashMap<String, usize>; 2] = [HashMap::new(), HashMap::new()];
        let mut nodes = Vec::new();
        let mut queue = VecDeque::from([root]);
        // Ids are handed out in breadth-first order, matching the queue.
        let mut next_id = 1usize;
        while let Some(node) = queue.pop_front() {
            match node {
                GameNode::Decision {
                    player,
                    infoset,
                    actions,
                } => {
                    let p = player.index();
                    let id = match ids[p].get(&infoset) {
                        Some(&id) => id,
                        None => {
                            let id = decls[p].len();
                            decls[p].push(InfosetDecl {
                                label: infoset.clone(),
                                actions: actions.iter().map(|(l, _)| l.clone()).collect(),
                            });
                            ids[p].insert(infoset, id);
                            id
                        }
                    };
                    let children = (next_id..next_id + actions.len()).collect();
                    next_id += actions.len();
                    queue.extend(actions.into_iter().map(|(_, c)| c));
                    nodes.push(RawNode::Player {
                        player,
                        infoset: id,
                        children,
                    });
                }
                GameNode::Chance(outcomes) => {
                    let children = (next_id..next_id + outcomes.len()).collect();
                    next_id += outcomes.len();
                    let (probs, kids): (Vec<f64>, Vec<GameNode>) = outcomes.into_iter().unzip();
                    queue.extend(kids);
                    nodes.push(RawNode::Chance { probs, children });
                }
                GameNode::Terminal(payoff) => nodes.push(RawNode::Terminal { payoff }),
            }
        }
        TreeGame::from_raw(&RawTree {
            infosets: decls,
            nodes,
        })
    }

    /// Depth-2 embedding: player 0 picks a row, then player 1 picks a column
    /// without observing it.
    pub fn from_matrix(game: &MatrixGame) -> Self {
        let cols: Vec<String> = (0..game.cols()).map(|c| c.to_string()).collect();
        let root = GameNode::Decision {
            player: Player::P0,
            infoset: "row".into(),
            actions: (0..game.rows())
                .map(|r| {
                    let column = GameNode::Decision {
                        player: Player::P1,
                        infoset: "col".into(),
                        actions: cols
                            .iter()
                            .enumerate()
                            .map(|(c, l)| (l.clone(), GameNode::Terminal(game.payoff(r, c))))
                            .collect(),
                    };
                    (r.to_string(), column)
                })
                .collect(),
        };
        TreeGame::from_root(root).expect("matrix embedding is a valid tree")
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn infosets(&self, player: Player) -> &[Infoset] {
        &self.infosets[player.index()]
    }

    pub fn infoset(&self, player: Player, id: usize) -> &Infoset {
        &self.infosets[player.index()][id]
    }

    pub fn num_infosets(&self, player: Player) -> usize {
        self.infosets[player.index()].len()
    }

    pub fn num_sequences(&self, player: Player) -> usize {
        self.sequence_children[player.index()].len()
    }

    /// Infosets entered directly after sequence `seq`.
    pub fn sequence_children(&self, player: Player, seq: usize) -> &[usize] {
        &self.sequence_children[player.index()][seq]
    }

    pub fn root_infosets(&self, player: Player) -> &[usize] {
        &self.root_infosets[player.index()]
    }

    /// Infosets ordered so that every infoset precedes its ancestors.
    pub fn bottom_up_infosets(&self, player: Player) -> &[usize] {
        &self.bottom_up[player.index()]
    }

    /// Utility of `player` at a terminal node.
    pub fn utility(&self, node: usize, player: Player) -> f64 {
        match self.nodes[node].kind {
            NodeKind::Terminal { payoff } => match player {
                Player::P1 => payoff,
                Player::P0 => -payoff,
            },
            _ => panic!("node {node} is not terminal"),
        }
    }

    /// Probability of each child of a non-terminal node under `profile`.
    #[inline]
    pub(crate) fn edge_prob(&self, profile: &BehaviorProfile, parent: &Node, child: usize) -> f64 {
        match parent.kind {
            NodeKind::Player { player, infoset } => {
                profile.strategies[player.index()][infoset][self.nodes[child].action]
            }
            NodeKind::Chance => self.nodes[child].chance_prob,
            NodeKind::Terminal { .. } => 0.0,
        }
    }
}

/// Behavioral strategies for both players: one distribution per infoset.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorProfile {
    strategies: [Vec<SimplexVector>; 2],
}

impl BehaviorProfile {
    pub fn uniform(game: &TreeGame) -> Self {
        let strategies = Player::BOTH.map(|p| {
            game.infosets(p)
                .iter()
                .map(|i| SimplexVector::uniform(i.num_actions()))
                .collect()
        });
        BehaviorProfile { strategies }
    }

    pub fn new(game: &TreeGame, strategies: [Vec<SimplexVector>; 2]) -> Result<Self> {
        let profile = BehaviorProfile { strategies };
        profile.check(game)?;
        Ok(profile)
    }

    /// Fails unless the profile has one correctly sized distribution per
    /// infoset of `game`.
    pub fn check(&self, game: &TreeGame) -> Result<()> {
        for p in Player::BOTH {
            let infos = game.infosets(p);
            ensure_len(
                "behavior profile infosets",
                infos.len(),
                self.strategies[p.index()].len(),
            )?;
            for (info, s) in infos.iter().zip(&self.strategies[p.index()]) {
                ensure_len("infoset strategy", info.num_actions(), s.len())?;
            }
        }
        Ok(())
    }

    pub fn player(&self, player: Player) -> &[SimplexVector] {
        &self.strategies[player.index()]
    }

    pub fn get(&self, player: Player, infoset: usize) -> &SimplexVector {
        &self.strategies[player.index()][infoset]
    }

    pub fn set(&mut self, player: Player, infoset: usize, strategy: SimplexVector) -> Result<()> {
        let slot =
            self.strategies[player.index()]
                .get_mut(infoset)
                .ok_or(Error::DimensionMismatch {
                    context: "infoset id",
                    expected: 0,
                    found: infoset,
                })?;
        ensure_len("infoset strategy", slot.len(), strategy.len())?;
        *slot = strategy;
        Ok(())
    }

    pub fn replace_player(&mut self, player: Player, strategies: Vec<SimplexVector>) -> Result<()> {
        ensure_len(
            "behavior profile infosets",
            self.strategies[player.index()].len(),
            strategies.len(),
        )?;
        for (old, new) in self.strategies[player.index()].iter().zip(&strategies) {
            ensure_len("infoset strategy", old.len(), new.len())?;
        }
        self.strategies[player.index()] = strategies;
        Ok(())
    }

    /// Largest absolute difference over all infosets and actions.
    pub fn max_abs_diff(&self, other: &BehaviorProfile) -> f64 {
        self.strategies
            .iter()
            .flatten()
            .zip(other.strategies.iter().flatten())
            .flat_map(|(a, b)| {
                a.as_slice()
                    .iter()
                    .zip(b.as_slice())
                    .map(|(x, y)| (x - y).abs())
            })
            .fold(0.0, f64::max)
    }

    /// JSON map from `"player:label"` to action probabilities.
    pub fn to_json_map(&self, game: &TreeGame) -> BTreeMap<String, Vec<f64>> {
        let mut map = BTreeMap::new();
        for p in Player::BOTH {
            for (info, s) in game.infosets(p).iter().zip(&self.strategies[p.index()]) {
                map.insert(
                    format!("{}:{}", p.index(), info.label),
                    s.as_slice().to_vec(),
                );
            }
        }
        map
    }

    pub fn from_json_map(game: &TreeGame, map: &BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let mut strategies: [Vec<SimplexVector>; 2] = [Vec::new(), Vec::new()];
        for p in Player::BOTH {
            for info in game.infosets(p) {
                let key = format!("{}:{}", p.index(), info.label);
                let probs = map
                    .get(&key)
                    .ok_or_else(|| Error::NotSimplex(format!("missing infoset {key}")))?;
                strategies[p.index()].push(SimplexVector::new(probs.clone())?);
            }
        }
        ensure_len(
            "behavior profile entries",
            strategies[0].len() + strategies[1].len(),
            map.len(),
        )?;
        BehaviorProfile::new(game, strategies)
    }
}

/// Reach probability of a node split into each player's and chance's
/// contribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reach {
    pub p0: f64,
    pub p1: f64,
    pub chance: f64,
}

impl Reach {
    pub const ROOT: Reach = Reach {
        p0: 1.0,
        p1: 1.0,
        chance: 1.0,
    };

    pub fn total(&self) -> f64 {
        self.p0 * self.p1 * self.chance
    }

    pub fn own(&self, player: Player) -> f64 {
        match player {
            Player::P0 => self.p0,
            Player::P1 => self.p1,
        }
    }

    /// `π_{−i}`: opponent times chance.
    pub fn others(&self, player: Player) -> f64 {
        self.own(player.opponent()) * self.chance
    }
}

pub fn reach_probabilities(game: &TreeGame, profile: &BehaviorProfile) -> Result<Vec<Reach>> {
    profile.check(game)?;
    let mut reach = vec![Reach::ROOT; game.num_nodes()];
    for (id, node) in game.nodes().iter().enumerate() {
        let here = reach[id];
        for child in node.children() {
            let mut r = here;
            match node.kind {
                NodeKind::Player {
                    player: Player::P0,
                    infoset,
                } => r.p0 *= profile.strategies[0][infoset][game.nodes[child].action],
                NodeKind::Player {
                    player: Player::P1,
                    infoset,
                } => r.p1 *= profile.strategies[1][infoset][game.nodes[child].action],
                NodeKind::Chance => r.chance *= game.nodes[child].chance_prob,
                NodeKind::Terminal { .. } => unreachable!(),
            }
            reach[child] = r;
        }
    }
    Ok(reach)
}

/// `π_{−i}(h)` for every node.
pub(crate) fn others_reach(
    game: &TreeGame,
    profile: &BehaviorProfile,
    player: Player,
    out: &mut Vec<f64>,
) {
    out.clear();
    out.resize(game.num_nodes(), 1.0);
    for (id, node) in game.nodes().iter().enumerate() {
        let own_node = matches!(node.kind, NodeKind::Player { player: p, .. } if p == player);
        let here = out[id];
        for child in node.children() {
            out[child] = if own_node {
                here
            } else {
                here * game.edge_prob(profile, node, child)
            };
        }
    }
}

/// `u_1(σ)`: player 1's expected payoff.
pub fn expected_value(game: &TreeGame, profile: &BehaviorProfile) -> Result<f64> {
    profile.check(game)?;
    let mut value = vec![0.0; game.num_nodes()];
    for id in (0..game.num_nodes()).rev() {
        let node = &game.nodes[id];
        value[id] = match node.kind {
            NodeKind::Terminal { payoff } => payoff,
            _ => node
                .children()
                .map(|c| game.edge_prob(profile, node, c) * value[c])
                .sum(),
        };
    }
    Ok(value[0])
}

struct BestResponder<'a> {
    game: &'a TreeGame,
    profile: &'a BehaviorProfile,
    player: Player,
    others: Vec<f64>,
    value: Vec<Option<f64>>,
    choice: Vec<Option<usize>>,
}

impl BestResponder<'_> {
    fn value(&mut self, id: usize) -> f64 {
        if let Some(v) = self.value[id] {
            return v;
        }
        let node = &self.game.nodes[id];
        let v = match node.kind {
            NodeKind::Terminal { .. } => self.game.utility(id, self.player),
            NodeKind::Player { player, infoset } if player == self.player => {
                let a = self.decide(infoset);
                self.value(node.first_child + a)
            }
            _ => {
                let mut sum = 0.0;
                for c in node.children() {
                    let p = self.game.edge_prob(self.profile, node, c);
                    sum += p * self.value(c);
                }
                sum
            }
        };
        self.value[id] = Some(v);
        v
    }

    fn decide(&mut self, infoset: usize) -> usize {
        if let Some(a) = self.choice[infoset] {
            return a;
        }
        let info = self.game.infoset(self.player, infoset);
        let mut q = vec![0.0; info.num_actions()];
        for &h in &info.members {
            let w = self.others[h];
            let first = self.game.nodes[h].first_child;
            for (a, qa) in q.iter_mut().enumerate() {
                *qa += w * self.value(first + a);
            }
        }
        let mut best = 0;
        for a in 1..q.len() {
            if q[a] > q[best] {
                best = a;
            }
        }
        self.choice[infoset] = Some(best);
        best
    }
}

/// Best-response value of `player` against the opponent's part of
/// `profile`, and the profile with `player`'s part replaced by a pure best
/// response. Ties go to the lowest action index.
pub fn best_response_value(
    game: &TreeGame,
    profile: &BehaviorProfile,
    player: Player,
) -> Result<(f64, BehaviorProfile)> {
    profile.check(game)?;
    let mut others = Vec::new();
    others_reach(game, profile, player, &mut others);
    let mut br = BestResponder {
        game,
        profile,
        player,
        others,
        value: vec![None; game.num_nodes()],
        choice: vec![None; game.num_infosets(player)],
    };
    let value = br.value(0);
    // Infosets off the best-response path still get a choice.
    for i in 0..game.num_infosets(player) {
        br.decide(i);
    }
    let strategies = br
        .choice
        .iter()
        .zip(game.infosets(player))
        .map(|(a, info)| SimplexVector::pure(info.num_actions(), a.expect("every infoset decided")))
        .collect();
    let mut out = profile.clone();
    out.strategies[player.index()] = strategies;
    Ok((value, out))
}

/// `½ (max_{σ0'} u_0(σ0', σ1) + max_{σ1'} u_1(σ0, σ1'))`.
pub fn exploitability_efg(game: &TreeGame, profile: &BehaviorProfile) -> Result<f64> {
    let (v0, _) = best_response_value(game, profile, Player::P0)?;
    let (v1, _) = best_response_value(game, profile, Player::P1)?;
    Ok((0.5 * (v0 + v1)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pennies() -> MatrixGame {
        MatrixGame::from_rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()
    }

    fn leaf(x: f64) -> GameNode {
        GameNode::Terminal(x)
    }

    fn decision(player: Player, infoset: &str, kids: Vec<GameNode>) -> GameNode {
        GameNode::Decision {
            player,
            infoset: infoset.into(),
            actions: kids
                .into_iter()
                .enumerate()
                .map(|(i, k)| (i.to_string(), k))
                .collect(),
        }
    }

    /// Chance, then player 0 with perfect information, then player 1 blind.
    fn small_game() -> TreeGame {
        let sub = |x: f64| {
            decision(
                Player::P0,
                if x > 0.0 { "hi" } else { "lo" },
                vec![
                    decision(Player::P1, "p1", vec![leaf(x), leaf(-0.5)]),
                    decision(Player::P1, "p1", vec![leaf(0.25), leaf(-x)]),
                ],
            )
        };
        TreeGame::from_root(GameNode::Chance(vec![(0.3, sub(1.0)), (0.7, sub(-0.8))])).unwrap()
    }

    #[test]
    fn matrix_embedding_validates() {
        let g = TreeGame::from_matrix(&pennies());
        assert_eq!(g.num_nodes(), 7);
        assert_eq!(g.num_infosets(Player::P0), 1);
        assert_eq!(g.num_infosets(Player::P1), 1);
        assert_eq!(g.terminals().len(), 4);
        assert!(validate(&g.to_raw()).is_ok());
        assert_eq!(g.infoset(Player::P1, 0).members, vec![1, 2]);
    }

    #[test]
    fn children_follow_parents() {
        let g = small_game();
        for (id, node) in g.nodes().iter().enumerate() {
            for c in node.children() {
                assert!(c > id);
                assert_eq!(g.node(c).parent, Some(id));
            }
        }
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let g = small_game();
        let json = serde_json::to_string(&g).unwrap();
        let back: TreeGame = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn non_canonical_raw_order_is_normalized() {
        let raw = RawTree {
            infosets: [
                vec![InfosetDecl {
                    label: "r".into(),
                    actions: vec!["a".into(), "b".into()],
                }],
                vec![],
            ],
            nodes: vec![
                RawNode::Player {
                    player: Player::P0,
                    infoset: 0,
                    children: vec![2, 1],
                },
                RawNode::Terminal { payoff: 1.0 },
                RawNode::Terminal { payoff: -1.0 },
            ],
        };
        let g = TreeGame::from_raw(&raw).unwrap();
        assert_eq!(g.utility(1, Player::P1), -1.0);
        assert_eq!(g.utility(2, Player::P1), 1.0);
    }

    fn expect_kind(raw: &RawTree, kind: TreeErrorKind) -> TreeError {
        let err = validate(raw).unwrap_err();
        assert_eq!(err.kind, kind, "{err}");
        err
    }

    #[test]
    fn validation_errors() {
        let base = TreeGame::from_matrix(&pennies()).to_raw();

        let mut recall = base.clone();
        // Give player 1 knowledge-dependent action counts.
        recall.nodes[2] = RawNode::Player {
            player: Player::P1,
            infoset: 0,
            children: vec![5],
        };
        let err = expect_kind(&recall, TreeErrorKind::ImperfectRecall);
        assert_eq!(err.node, Some(2));

        let mut chance = base.clone();
        chance.nodes[0] = RawNode::Chance {
            probs: vec![0.6, 0.6],
            children: vec![1, 2],
        };
        expect_kind(&chance, TreeErrorKind::NonSimplexChance);
        chance.nodes[0] = RawNode::Chance {
            probs: vec![1.5, -0.5],
            children: vec![1, 2],
        };
        expect_kind(&chance, TreeErrorKind::NonSimplexChance);

        let mut cycle = base.clone();
        cycle.nodes[1] = RawNode::Player {
            player: Player::P1,
            infoset: 0,
            children: vec![0, 4],
        };
        expect_kind(&cycle, TreeErrorKind::Cycle);

        let mut shared = base.clone();
        shared.nodes[2] = RawNode::Player {
            player: Player::P1,
            infoset: 0,
            children: vec![3, 4],
        };
        expect_kind(&shared, TreeErrorKind::Cycle);

        let mut dangling = base.clone();
        dangling.infosets[1].push(InfosetDecl {
            label: "unused".into(),
            actions: vec!["x".into()],
        });
        expect_kind(&dangling, TreeErrorKind::DanglingInfoset);
        let mut undeclared = base.clone();
        undeclared.nodes[1] = RawNode::Player {
            player: Player::P1,
            infoset: 7,
            children: vec![3, 4],
        };
        expect_kind(&undeclared, TreeErrorKind::DanglingInfoset);
    }

    #[test]
    fn forgetting_own_action_is_imperfect_recall() {
        // Player 0 moves twice but the second infoset merges both first moves.
        let root = decision(
            Player::P0,
            "first",
            vec![
                decision(Player::P0, "second", vec![leaf(1.0), leaf(0.0)]),
                decision(Player::P0, "second", vec![leaf(0.0), leaf(1.0)]),
            ],
        );
        let err = TreeGame::from_root(root).unwrap_err();
        assert_eq!(err.kind, TreeErrorKind::ImperfectRecall);
    }

    #[test]
    fn metrics_match_matrix_game() {
        let m = MatrixGame::from_rows(vec![vec![0.3, -0.8, 0.1], vec![-0.2, 0.6, -0.9]]).unwrap();
        let g = TreeGame::from_matrix(&m);
        let s0 = SimplexVector::new(vec![0.35, 0.65]).unwrap();
        let s1 = SimplexVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let bp = BehaviorProfile::new(&g, [vec![s0.clone()], vec![s1.clone()]]).unwrap();
        let np = crate::nfg::Profile::new(s0, s1);
        assert!((expected_value(&g, &bp).unwrap() - m.expected_payoff(&np).unwrap()).abs() < 1e-12);
        assert!(
            (exploitability_efg(&g, &bp).unwrap() - m.exploitability(&np).unwrap()).abs() < 1e-12
        );
        let (v, br) = best_response_value(&g, &bp, Player::P1).unwrap();
        let (a, bv) = m.best_response(Player::P1, &np.p0).unwrap();
        assert!((v - bv).abs() < 1e-12);
        assert_eq!(br.get(Player::P1, 0), &SimplexVector::pure(3, a));
    }

    #[test]
    fn best_response_against_pure_opponent_is_max_entry() {
        let m = MatrixGame::from_rows(vec![vec![0.3, -0.8], vec![-0.2, 0.6]]).unwrap();
        let g = TreeGame::from_matrix(&m);
        let mut bp = BehaviorProfile::uniform(&g);
        bp.set(Player::P0, 0, SimplexVector::pure(2, 1)).unwrap();
        let (v, _) = best_response_value(&g, &bp, Player::P1).unwrap();
        assert_eq!(v, 0.6);
        let etc = exploitability_efg(
            &TreeGame::from_matrix(&pennies()),
            &BehaviorProfile::uniform(&TreeGame::from_matrix(&pennies())),
        )
        .unwrap();
        assert_eq!(etc, 0.0);
    }

    #[test]
    fn constant_payoff_expected_value() {
        let root = GameNode::Chance(vec![
            (0.25, decision(Player::P0, "a", vec![leaf(0.7), leaf(0.7)])),
            (
                0.75,
                decision(
                    Player::P1,
                    "b",
                    vec![leaf(0.7), decision(Player::P0, "c", vec![leaf(0.7)])],
                ),
            ),
        ]);
        let g = TreeGame::from_root(root).unwrap();
        let v = expected_value(&g, &BehaviorProfile::uniform(&g)).unwrap();
        assert!((v - 0.7).abs() < 1e-15);
    }

    #[test]
    fn reach_factorization() {
        let g = small_game();
        let r = reach_probabilities(&g, &BehaviorProfile::uniform(&g)).unwrap();
        assert_eq!(r[0], Reach::ROOT);
        let total: f64 = g.terminals().iter().map(|&z| r[z].total()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    /// Enumerates the pure behavioral strategies of `player`.
    fn pure_strategies(game: &TreeGame, player: Player) -> Vec<Vec<SimplexVector>> {
        let sizes: Vec<usize> = game
            .infosets(player)
            .iter()
            .map(Infoset::num_actions)
            .collect();
        let mut out = vec![Vec::new()];
        for &n in &sizes {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<SimplexVector>| {
                    (0..n).map(move |a| {
                        let mut p = prefix.clone();
                        p.push(SimplexVector::pure(n, a));
                        p
                    })
                })
                .collect();
        }
        out
    }

    fn random_profile(game: &TreeGame, weights: &[f64]) -> BehaviorProfile {
        let mut k = 0;
        let strategies = Player::BOTH.map(|p| {
            game.infosets(p)
                .iter()
                .map(|info| {
                    let w: Vec<f64> = (0..info.num_actions())
                        .map(|_| {
                            k += 1;
                            weights[k % weights.len()]
                        })
                        .collect();
                    SimplexVector::from_weights(w).unwrap()
                })
                .collect()
        });
        BehaviorProfile::new(game, strategies).unwrap()
    }

    proptest! {
        #[test]
        fn best_response_dominates_pure_strategies(weights in prop::collection::vec(0.01f64..1.0, 16)) {
            let g = small_game();
            let profile = random_profile(&g, &weights);
            for player in Player::BOTH {
                let (v, br) = best_response_value(&g, &profile, player).unwrap();
                let mut best = f64::NEG_INFINITY;
                for pure in pure_strategies(&g, player) {
                    let mut p = profile.clone();
                    p.replace_player(player, pure).unwrap();
                    best = best.max(player.sign() * expected_value(&g, &p).unwrap());
                }
                prop_assert!((v - best).abs() < 1e-12);
                let achieved = player.sign() * expected_value(&g, &br).unwrap();
                prop_assert!((achieved - v).abs() < 1e-12);
            }
        }

        #[test]
        fn terminal_reach_sums_to_one(weights in prop::collection::vec(0.0f64..1.0, 16)) {
            let g = small_game();
            let mut w = weights.clone();
            w[0] += 0.1;
            w[1] += 0.1;
            let fixed: Vec<f64> = w.iter().map(|x| x + 1e-3).collect();
            let profile = random_profile(&g, &fixed);
            let r = reach_probabilities(&g, &profile).unwrap();
            let total: f64 = g.terminals().iter().map(|&z| r[z].total()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn relabeling_preserves_exploitability(weights in prop::collection::vec(0.01f64..1.0, 16)) {
            // Swap the two player-0 actions at "hi" and permute its children.
            let g = small_game();
            let mut raw = g.to_raw();
            let hi = raw.infosets[0].iter().position(|d| d.label == "hi").unwrap();
            for node in &mut raw.nodes {
                if let RawNode::Player { player: Player::P0, infoset, children } = node {
                    if *infoset == hi {
                        children.reverse();
                    }
                }
            }
            raw.infosets[0][hi].label = "renamed".into();
            let h = TreeGame::from_raw(&raw).unwrap();
            let p = random_profile(&g, &weights);
            let mut q_strats: [Vec<SimplexVector>; 2] = [p.player(Player::P0).to_vec(), p.player(Player::P1).to_vec()];
            let old = q_strats[0][hi].as_slice().to_vec();
            q_strats[0][hi] = SimplexVector::new(vec![old[1], old[0]]).unwrap();
            let q = BehaviorProfile::new(&h, q_strats).unwrap();
            let a = exploitability_efg(&g, &p).unwrap();
            let b = exploitability_efg(&h, &q).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn behavior_profile_json_map() {
        let g = small_game();
        let p = random_profile(&g, &[0.2, 0.9, 0.4]);
        let map = p.to_json_map(&g);
        assert!(map.contains_key("0:hi") && map.contains_key("1:p1"));
        assert_eq!(BehaviorProfile::from_json_map(&g, &map).unwrap(), p);
    }

    #[test]
    fn sequence_structure() {
        let root = decision(
            Player::P0,
            "a",
            vec![
                decision(Player::P0, "b", vec![leaf(1.0), leaf(0.0)]),
                decision(Player::P0, "c", vec![leaf(0.0)]),
            ],
        );
        let g = TreeGame::from_root(root).unwrap();
        assert_eq!(g.num_sequences(Player::P0), 5);
        assert_eq!(g.root_infosets(Player::P0), &[0]);
        assert_eq!(g.sequence_children(Player::P0, 0), &[1]);
        assert_eq!(g.sequence_children(Player::P0, 1), &[2]);
        assert_eq!(g.infoset(Player::P0, 2).depth, 1);
        assert_eq!(g.bottom_up_infosets(Player::P0), &[1, 2, 0]);
        let leaf_node = g.terminals()[0];
        assert_eq!(g.node(leaf_node).last_sequence[0], Some(2));
    }
}
