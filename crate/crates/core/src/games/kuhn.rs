//! Kuhn poker: three cards, one dealt to each player, ante 1, a single
//! betting round with bet size 1.

use crate::efg::{GameNode, TreeGame};
use crate::nfg::Player;

use super::{action, decision};

pub const CARDS: [&str; 3] = ["J", "Q", "K"];

fn deal(c0: usize, c1: usize) -> GameNode {
    // Payoffs are player 1's winnings.
    let showdown = |stake: f64| if c1 > c0 { stake } else { -stake };
    let own0 = |history: &str| format!("{}{history}", CARDS[c0]);
    let own1 = |history: &str| format!("{}{history}", CARDS[c1]);
    decision(
        Player::P0,
        own0(""),
        vec![
            action(
                "p",
                decision(
                    Player::P1,
                    own1("p"),
                    vec![
                        action("p", GameNode::Terminal(showdown(1.0))),
                        action(
                            "b",
                            decision(
                                Player::P0,
                                own0("pb"),
                                vec![
                                    action("p", GameNode::Terminal(1.0)),
                                    action("b", GameNode::Terminal(showdown(2.0))),
                                ],
                            ),
                        ),
                    ],
                ),
            ),
            action(
                "b",
                decision(
                    Player::P1,
                    own1("b"),
                    vec![
                        action("p", GameNode::Terminal(-1.0)),
                        action("b", GameNode::Terminal(showdown(2.0))),
                    ],
                ),
            ),
        ],
    )
}

/// Player 0 holds the first card and acts first. Infosets are labelled by
/// the own card followed by the betting history ("p" pass, "b" bet).
pub fn kuhn_poker() -> TreeGame {
    let mut deals = Vec::new();
    for c0 in 0..3 {
        for c1 in (0..3).filter(|&c| c != c0) {
            deals.push((1.0 / 6.0, deal(c0, c1)));
        }
    }
    TreeGame::from_root(GameNode::Chance(deals)).expect("Kuhn poker is a valid tree")
}
