//! Goofspiel with `n` cards per hand and prizes revealed in descending
//! order `n, n−1, …, 1`.
//!
//! Each round player 0 bids first and player 1 bids without seeing that bid;
//! both bids are public afterwards. The higher bid takes the prize, equal bids
//! split it. Player 1's payoff is its point total minus player 0's. The last
//! round, where each hand holds one card, is kept as a forced move.

use crate::efg::{GameNode, TreeGame};
use crate::error::{Error, Result};
use crate::nfg::Player;

use super::{action, decision};

pub const MIN_CARDS: u32 = 3;
pub const MAX_CARDS: u32 = 5;

fn history_label(history: &[(u32, u32)]) -> String {
    let parts: Vec<String> = history.iter().map(|(a, b)| format!("{a}-{b}")).collect();
    parts.join(",")
}

fn round(n: u32, hands: [Vec<u32>; 2], history: &mut Vec<(u32, u32)>, diff: f64) -> GameNode {
    let k = history.len() as u32;
    if k == n {
        return GameNode::Terminal(diff);
    }
    let prize = f64::from(n - k);
    let label = history_label(history);
    let mut bids0 = Vec::new();
    for (i, &b0) in hands[0].iter().enumerate() {
        let mut bids1 = Vec::new();
        for (j, &b1) in hands[1].iter().enumerate() {
            let gain = match b1.cmp(&b0) {
                std::cmp::Ordering::Greater => prize,
                std::cmp::Ordering::Less => -prize,
                std::cmp::Ordering::Equal => 0.0,
            };
            let mut next = hands.clone();
            next[0].remove(i);
            next[1].remove(j);
            history.push((b0, b1));
            let child = round(n, next, history, diff + gain);
            history.pop();
            bids1.push(action(&b1.to_string(), child));
        }
        bids0.push(action(
            &b0.to_string(),
            decision(Player::P1, label.clone(), bids1),
        ));
    }
    decision(Player::P0, label, bids0)
}

pub fn goofspiel(n: u32) -> Result<TreeGame> {
    if !(MIN_CARDS..=MAX_CARDS).contains(&n) {
        return Err(Error::InvalidConfig(format!(
            "goofspiel needs {MIN_CARDS}..={MAX_CARDS} cards, got {n}"
        )));
    }
    let hand: Vec<u32> = (1..=n).collect();
    let root = round(n, [hand.clone(), hand], &mut Vec::new(), 0.0);
    Ok(TreeGame::from_root(root).expect("Goofspiel is a valid tree"))
}
