//! Liar's Dice with one die per player.
//!
//! Chance rolls player 0's die, then player 1's. Bids `(quantity, face)` with
//! quantity 1 or 2 are ordered by quantity, then face, and must strictly
//! increase. The highest face is wild except when it is the face bid on.
//! Player 0 opens with a bid; afterwards the player to act may raise or call
//! "liar", and the maximum bid forces a call. The caller wins 1 if the bid is
//! false and loses 1 otherwise. Infoset labels are the own die followed by
//! the bid history, e.g. `"3:1-2,2-1"`.

use crate::efg::{GameNode, TreeGame};
use crate::error::{Error, Result};
use crate::nfg::Player;

use super::{action, decision};

pub const MIN_SIDES: u32 = 2;
pub const MAX_SIDES: u32 = 6;
pub const LIAR: &str = "liar";

/// `(quantity, face)` of bid index `b`.
pub fn bid(sides: u32, b: usize) -> (u32, u32) {
    let b = b as u32;
    (b / sides + 1, b % sides + 1)
}

/// Number of dice counting towards `face`.
pub fn count(sides: u32, dice: [u32; 2], face: u32) -> u32 {
    dice.iter()
        .filter(|&&d| d == face || (d == sides && face != sides))
        .count() as u32
}

fn bid_label(sides: u32, b: usize) -> String {
    let (q, f) = bid(sides, b);
    format!("{q}-{f}")
}

fn node(sides: u32, dice: [u32; 2], bids: &mut Vec<usize>, to_act: Player) -> GameNode {
    let total = 2 * sides as usize;
    let history: Vec<String> = bids.iter().map(|&b| bid_label(sides, b)).collect();
    let label = format!("{}:{}", dice[to_act.index()], history.join(","));
    let mut actions = Vec::new();
    if let Some(&last) = bids.last() {
        let (q, f) = bid(sides, last);
        let truthful = count(sides, dice, f) >= q;
        let caller_wins = !truthful;
        let winner = if caller_wins {
            to_act
        } else {
            to_act.opponent()
        };
        actions.push(action(LIAR, GameNode::Terminal(winner.sign())));
    }
    let start = bids.last().map_or(0, |&b| b + 1);
    for b in start..total {
        bids.push(b);
        let child = node(sides, dice, bids, to_act.opponent());
        bids.pop();
        actions.push(action(&bid_label(sides, b), child));
    }
    decision(to_act, label, actions)
}

pub fn liars_dice(sides: u32) -> Result<TreeGame> {
    if !(MIN_SIDES..=MAX_SIDES).contains(&sides) {
        return Err(Error::InvalidConfig(format!(
            "liar's dice needs {MIN_SIDES}..={MAX_SIDES} sides, got {sides}"
        )));
    }
    let p = 1.0 / f64::from(sides);
    let root = GameNode::Chance(
        (1..=sides)
            .map(|d0| {
                let second = (1..=sides)
                    .map(|d1| (p, node(sides, [d0, d1], &mut Vec::new(), Player::P0)))
                    .collect();
                (p, GameNode::Chance(second))
            })
            .collect(),
    );
    Ok(TreeGame::from_root(root).expect("Liar's Dice is a valid tree"))
}
