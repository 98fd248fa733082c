//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use equilibrate::efg::{Infoset, NodeKind};
use equilibrate::{BehaviorProfile, Player, TreeGame};

/// Every pure behavioral strategy of `player`, as one action per infoset.
pub fn pure_strategies(game: &TreeGame, player: Player) -> Vec<Vec<usize>> {
    let sizes: Vec<usize> = game
        .infosets(player)
        .iter()
        .map(Infoset::num_actions)
        .collect();
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for &n in &sizes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n).map(move |a| {
                    let mut p = prefix.clone();
                    p.push(a);
                    p
                })
            })
            .collect();
    }
    out
}

/// `u_1` when both players follow pure strategies, averaging over chance.
pub fn pure_pair_value(game: &TreeGame, pure: [&[usize]; 2]) -> f64 {
    fn walk(game: &TreeGame, id: usize, pure: [&[usize]; 2]) -> f64 {
        let node = game.node(id);
        match node.kind {
            NodeKind::Terminal { payoff } => payoff,
            NodeKind::Chance => node
                .children()
                .map(|c| game.node(c).chance_prob * walk(game, c, pure))
                .sum(),
            NodeKind::Player { player, infoset } => {
                walk(game, node.first_child + pure[player.index()][infoset], pure)
            }
        }
    }
    walk(game, 0, pure)
}

/// Weight of a pure strategy in the mixed strategy realization-equivalent
/// to `player`'s behavioral strategy.
pub fn pure_weight(profile: &BehaviorProfile, player: Player, pure: &[usize]) -> f64 {
    pure.iter()
        .enumerate()
        .map(|(i, &a)| profile.get(player, i)[a])
        .product()
}

/// Exploitability from the full pure-versus-pure payoff table.
pub fn pure_exploitability(game: &TreeGame, profile: &BehaviorProfile) -> f64 {
    let s0 = pure_strategies(game, Player::P0);
    let s1 = pure_strategies(game, Player::P1);
    let table: Vec<Vec<f64>> = s0
        .iter()
        .map(|a| s1.iter().map(|b| pure_pair_value(game, [a, b])).collect())
        .collect();
    let w0: Vec<f64> = s0
        .iter()
        .map(|a| pure_weight(profile, Player::P0, a))
        .collect();
    let w1: Vec<f64> = s1
        .iter()
        .map(|b| pure_weight(profile, Player::P1, b))
        .collect();
    let br0 = table
        .iter()
        .map(|row| -row.iter().zip(&w1).map(|(u, w)| u * w).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let br1 = (0..s1.len())
        .map(|j| {
            table
                .iter()
                .zip(&w0)
                .map(|(row, w)| row[j] * w)
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    0.5 * (br0 + br1)
}

/// `max` over pure strategies of `player`'s utility against `profile`.
pub fn pure_best_response(game: &TreeGame, profile: &BehaviorProfile, player: Player) -> f64 {
    let other = player.opponent();
    let mine = pure_strategies(game, player);
    let theirs = pure_strategies(game, other);
    let weights: Vec<f64> = theirs
        .iter()
        .map(|s| pure_weight(profile, other, s))
        .collect();
    mine.iter()
        .map(|s| {
            theirs
                .iter()
                .zip(&weights)
                .map(|(t, w)| {
                    let pair: [&[usize]; 2] = match player {
                        Player::P0 => [s, t],
                        Player::P1 => [t, s],
                    };
                    w * player.sign() * pure_pair_value(game, pair)
                })
                .sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}
