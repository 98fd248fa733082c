//! Leduc poker: six cards (three ranks in two suits), ante 1, two betting
//! rounds with bet sizes 2 and 4, at most two raises per round, and one
//! public board card dealt between the rounds.
//!
//! Player 0 acts first in both rounds. Folding is offered only when facing a
//! bet. A pair with the board wins, otherwise the higher rank wins, equal
//! ranks split the pot. Players observe ranks only, so infoset labels look
//! like `"K:cr|Q:c"`: own rank, round-one history, board rank, round-two
//! history.

use crate::efg::{GameNode, TreeGame};
use crate::nfg::Player;

use super::{action, decision};

pub const RANKS: [&str; 3] = ["J", "Q", "K"];
pub const ANTE: f64 = 1.0;
pub const BET_SIZES: [f64; 2] = [2.0, 4.0];
pub const MAX_RAISES: u32 = 2;

fn rank(card: usize) -> usize {
    card / 2
}

#[derive(Clone)]
struct State {
    cards: [usize; 2],
    board: Option<usize>,
    round: usize,
    history: [String; 2],
    contrib: [f64; 2],
    raises: u32,
    to_act: Player,
    acted: u32,
}

impl State {
    fn label(&self, player: Player) -> String {
        let own = RANKS[rank(self.cards[player.index()])];
        match self.board {
            None => format!("{own}:{}", self.history[0]),
            Some(b) => format!(
                "{own}:{}|{}:{}",
                self.history[0],
                RANKS[rank(b)],
                self.history[1]
            ),
        }
    }

    fn showdown(&self) -> f64 {
        let board = rank(self.board.expect("showdown after the board card"));
        let strength = |c: usize| {
            if rank(c) == board {
                10 + rank(c)
            } else {
                rank(c)
            }
        };
        let (s0, s1) = (strength(self.cards[0]), strength(self.cards[1]));
        if s1 > s0 {
            self.contrib[0]
        } else if s0 > s1 {
            -self.contrib[1]
        } else {
            0.0
        }
    }

    fn end_round(&self) -> GameNode {
        if self.round == 1 {
            return GameNode::Terminal(self.showdown());
        }
        let remaining: Vec<usize> = (0..6).filter(|c| !self.cards.contains(c)).collect();
        let p = 1.0 / remaining.len() as f64;
        GameNode::Chance(
            remaining
                .into_iter()
                .map(|b| {
                    let mut next = self.clone();
                    next.board = Some(b);
                    next.round = 1;
                    next.raises = 0;
                    next.acted = 0;
                    next.to_act = Player::P0;
                    (p, next.node())
                })
                .collect(),
        )
    }

    fn node(&self) -> GameNode {
        let me = self.to_act;
        let other = me.opponent();
        let facing = self.contrib[me.index()] < self.contrib[other.index()];
        let mut actions = Vec::new();
        if facing {
            let u1 = match me {
                Player::P0 => self.contrib[0],
                Player::P1 => -self.contrib[1],
            };
            actions.push(action("f", GameNode::Terminal(u1)));
        }
        let mut call = self.clone();
        call.history[self.round].push('c');
        call.contrib[me.index()] = self.contrib[other.index()];
        call.acted += 1;
        call.to_act = other;
        let closes = facing || self.acted >= 1;
        actions.push(action(
            "c",
            if closes {
                call.end_round()
            } else {
                call.node()
            },
        ));
        if self.raises < MAX_RAISES {
            let mut raise = self.clone();
            raise.history[self.round].push('r');
            raise.contrib[me.index()] = self.contrib[other.index()] + BET_SIZES[self.round];
            raise.raises += 1;
            raise.acted += 1;
            raise.to_act = other;
            actions.push(action("r", raise.node()));
        }
        decision(me, self.label(me), actions)
    }
}

pub fn leduc_poker() -> TreeGame {
    let mut deals = Vec::new();
    for c0 in 0..6 {
        let mut second = Vec::new();
        for c1 in (0..6).filter(|&c| c != c0) {
            let state = State {
                cards: [c0, c1],
                board: None,
                round: 0,
                history: [String::new(), String::new()],
                contrib: [ANTE, ANTE],
                raises: 0,
                to_act: Player::P0,
                acted: 0,
            };
            second.push((1.0 / 5.0, state.node()));
        }
        deals.push((1.0 / 6.0, GameNode::Chance(second)));
    }
    TreeGame::from_root(GameNode::Chance(deals)).expect("Leduc poker is a valid tree")
}
