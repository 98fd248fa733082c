//! Normal-form games: payoff matrices, mixed strategies, loss gradients and
//! exploitability.
//!
//! Only player 1's utility is stored. Player 0 receives the negation, so a
//! [`MatrixGame`] is zero-sum by construction. Player 0 is the row player.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_len, Error, Result};

/// Absolute tolerance on the sum of a [`SimplexVector`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Entries smaller than this are flushed to zero.
const FLUSH_BELOW: f64 = 1e-300;

/// Accepted drift on the sum of caller-supplied probabilities.
const INPUT_SUM_TOLERANCE: f64 = 1e-9;

/// One of the two players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Player {
    P0,
    P1,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::P0, Player::P1];

    pub fn index(self) -> usize {
        match self {
            Player::P0 => 0,
            Player::P1 => 1,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::P0 => Player::P1,
            Player::P1 => Player::P0,
        }
    }

    /// Sign that converts player 1's utility into this player's utility.
    pub fn sign(self) -> f64 {
        match self {
            Player::P0 => -1.0,
            Player::P1 => 1.0,
        }
    }
}

impl From<Player> for u8 {
    fn from(p: Player) -> u8 {
        p.index() as u8
    }
}

impl TryFrom<u8> for Player {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, Self::Error> {
        match v {
            0 => Ok(Player::P0),
            1 => Ok(Player::P1),
            other => Err(format!("player must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// A probability distribution over a finite action set.
///
/// Every entry is nonnegative and the entries sum to one within
/// [`SIMPLEX_TOLERANCE`]. Constructors flush entries below `1e-300` to zero
/// and renormalize whenever the sum drifts.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    /// Validates caller-supplied probabilities. The sum may be off by up to
    /// `1e-9`; the result is renormalized.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty("probability vector"));
        }
        ensure_finite("probability vector", &probs)?;
        if let Some(p) = probs.iter().find(|p| **p < 0.0) {
            return Err(Error::NotSimplex(format!("negative entry {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > INPUT_SUM_TOLERANCE {
            return Err(Error::NotSimplex(format!("entries sum to {sum}")));
        }
        Ok(Self::sanitized(probs))
    }

    /// Normalizes nonnegative weights with a positive sum.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty("weight vector"));
        }
        ensure_finite("weight vector", &weights)?;
        if weights.iter().any(|w| *w < 0.0) {
            return Err(Error::NotSimplex("negative weight".into()));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::NotSimplex("weights sum to zero".into()));
        }
        Ok(Self::sanitized(
            weights.into_iter().map(|w| w / sum).collect(),
        ))
    }

    /// Normalizes weights, falling back to uniform when they sum to zero.
    pub(crate) fn from_weights_or_uniform(weights: Vec<f64>) -> Self {
        let sum: f64 = weights.iter().sum();
        if sum > 0.0 {
            Self::sanitized(weights.into_iter().map(|w| w / sum).collect())
        } else {
            Self::uniform(weights.len())
        }
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform distribution over zero actions");
        SimplexVector(vec![1.0 / n as f64; n])
    }

    pub fn pure(n: usize, action: usize) -> Self {
        assert!(action < n, "action {action} out of range for {n} actions");
        let mut v = vec![0.0; n];
        v[action] = 1.0;
        SimplexVector(v)
    }

    fn sanitized(mut probs: Vec<f64>) -> Self {
        for p in probs.iter_mut() {
            if *p < FLUSH_BELOW {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        SimplexVector(probs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(p, v)| p * v).sum()
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|p| *p > 0.0)
    }
}

impl std::ops::Index<usize> for SimplexVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<'de> Deserialize<'de> for SimplexVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let probs = Vec::<f64>::deserialize(d)?;
        SimplexVector::new(probs).map_err(serde::de::Error::custom)
    }
}

/// A mixed strategy for each player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub p0: SimplexVector,
    pub p1: SimplexVector,
}

impl Profile {
    pub fn new(p0: SimplexVector, p1: SimplexVector) -> Self {
        Profile { p0, p1 }
    }

    pub fn uniform(game: &MatrixGame) -> Self {
        Profile {
            p0: SimplexVector::uniform(game.rows()),
            p1: SimplexVector::uniform(game.cols()),
        }
    }

    pub fn get(&self, player: Player) -> &SimplexVector {
        match player {
            Player::P0 => &self.p0,
            Player::P1 => &self.p1,
        }
    }

    pub fn get_mut(&mut self, player: Player) -> &mut SimplexVector {
        match player {
            Player::P0 => &mut self.p0,
            Player::P1 => &mut self.p1,
        }
    }

    /// Concatenation `(σ_0, σ_1)` as a point of the joint space.
    pub fn joint(&self) -> Vec<f64> {
        self.p0
            .as_slice()
            .iter()
            .chain(self.p1.as_slice())
            .copied()
            .collect()
    }
}

/// Payoff matrix of a two-player zero-sum game, holding player 1's utility
/// `u_1(a_0, a_1)` in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixGameJson", into = "MatrixGameJson")]
pub struct MatrixGame {
    rows: usize,
    cols: usize,
    payoff: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MatrixGameJson {
    rows: usize,
    cols: usize,
    payoff: Vec<Vec<f64>>,
}

impl TryFrom<MatrixGameJson> for MatrixGame {
    type Error = Error;

    fn try_from(json: MatrixGameJson) -> Result<Self> {
        if json.payoff.len() != json.rows {
            return Err(Error::InvalidGame(format!(
                "declared {} rows, found {}",
                json.rows,
                json.payoff.len()
            )));
        }
        if let Some(row) = json.payoff.iter().find(|r| r.len() != json.cols) {
            return Err(Error::InvalidGame(format!(
                "declared {} columns, found a row of length {}",
                json.cols,
                row.len()
            )));
        }
        MatrixGame::from_rows(json.payoff)
    }
}

impl From<MatrixGame> for MatrixGameJson {
    fn from(game: MatrixGame) -> Self {
        MatrixGameJson {
            rows: game.rows,
            cols: game.cols,
            payoff: game.payoff.chunks(game.cols).map(<[f64]>::to_vec).collect(),
        }
    }
}

impl MatrixGame {
    /// Builds a game from row-major payoffs of player 1.
    pub fn new(rows: usize, cols: usize, payoff: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidGame(format!(
                "empty action set ({rows}x{cols})"
            )));
        }
        if payoff.len() != rows * cols {
            return Err(Error::InvalidGame(format!(
                "{} payoff entries for a {rows}x{cols} game",
                payoff.len()
            )));
        }
        ensure_finite("payoff matrix", &payoff)?;
        if payoff.iter().any(|v| v.abs() > 1.0) {
            log::warn!(
                "payoffs outside [-1, 1]; convergence constants scale with the payoff range"
            );
        }
        Ok(MatrixGame { rows, cols, payoff })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGame("ragged payoff rows".into()));
        }
        MatrixGame::new(m, n, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of actions of `player`.
    pub fn actions(&self, player: Player) -> usize {
        match player {
            Player::P0 => self.rows,
            Player::P1 => self.cols,
        }
    }

    /// Player 1's utility for the pure profile `(a0, a1)`.
    pub fn payoff(&self, a0: usize, a1: usize) -> f64 {
        self.payoff[a0 * self.cols + a1]
    }

    pub fn payoffs(&self) -> &[f64] {
        &self.payoff
    }

    /// Returns a copy with every payoff multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        MatrixGame::new(
            self.rows,
            self.cols,
            self.payoff.iter().map(|v| v * factor).collect(),
        )
    }

    fn check_profile(&self, profile: &Profile) -> Result<()> {
        ensure_len("row strategy", self.rows, profile.p0.len())?;
        ensure_len("column strategy", self.cols, profile.p1.len())
    }

    /// `u_1(σ_0, σ_1) = σ_0ᵀ A σ_1`.
    pub fn expected_payoff(&self, profile: &Profile) -> Result<f64> {
        self.check_profile(profile)?;
        Ok(self
            .payoff
            .chunks(self.cols)
            .zip(profile.p0.as_slice())
            .map(|(row, p)| p * profile.p1.dot(row))
            .sum())
    }

    /// Loss gradient `g_i(a_i) = −Σ σ_{−i}(a_{−i}) u_i(a_i, a_{−i})`.
    ///
    /// For player 0 this is `A σ_1`; for player 1 it is `−Aᵀ σ_0`.
    pub fn loss_gradient(&self, player: Player, opponent: &SimplexVector) -> Result<Vec<f64>> {
        ensure_len(
            "opponent strategy",
            self.actions(player.opponent()),
            opponent.len(),
        )?;
        Ok(match player {
            Player::P0 => self
                .payoff
                .chunks(self.cols)
                .map(|row| opponent.dot(row))
                .collect(),
            Player::P1 => {
                let mut g = vec![0.0; self.cols];
                for (row, p) in self.payoff.chunks(self.cols).zip(opponent.as_slice()) {
                    for (gj, a) in g.iter_mut().zip(row) {
                        *gj -= p * a;
                    }
                }
                g
            }
        })
    }

    /// Best pure response of `player` against `opponent`, returning the
    /// action (ties go to the lowest index) and the responder's utility.
    pub fn best_response(&self, player: Player, opponent: &SimplexVector) -> Result<(usize, f64)> {
        let loss = self.loss_gradient(player, opponent)?;
        let (mut best, mut value) = (0, -loss[0]);
        for (a, l) in loss.iter().enumerate().skip(1) {
            if -l > value {
                best = a;
                value = -l;
            }
        }
        Ok((best, value))
    }

    /// `ε(σ) = ½ (max_{a_1} u_1(σ_0, a_1) + max_{a_0} u_0(a_0, σ_1))`.
    pub fn exploitability(&self, profile: &Profile) -> Result<f64> {
        self.check_profile(profile)?;
        let (_, v1) = self.best_response(Player::P1, &profile.p0)?;
        let (_, v0) = self.best_response(Player::P0, &profile.p1)?;
        Ok((0.5 * (v0 + v1)).max(0.0))
    }
}

/// Half squared Euclidean distance from `profile` to the nearest entry of
/// `ne_set`, i.e. `min D_ψ(σ*, σ)` for `ψ = ½‖·‖²`.
pub fn nash_distance(profile: &Profile, ne_set: &[Profile]) -> Result<f64> {
    if ne_set.is_empty() {
        return Err(Error::Empty("equilibrium set"));
    }
    let point = profile.joint();
    let mut best = f64::INFINITY;
    for ne in ne_set {
        let other = ne.joint();
        ensure_len("equilibrium profile", point.len(), other.len())?;
        let d = 0.5
            * point
                .iter()
                .zip(&other)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
        best = best.min(d);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pennies() -> MatrixGame {
        MatrixGame::from_rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap()
    }

    fn rps() -> MatrixGame {
        MatrixGame::from_rows(vec![
            vec![0.0, 1.0, -1.0],
            vec![-1.0, 0.0, 1.0],
            vec![1.0, -1.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn expected_payoff_examples() {
        let g = pennies();
        assert_eq!(g.expected_payoff(&Profile::uniform(&g)).unwrap(), 0.0);
        let pure = Profile::new(SimplexVector::pure(2, 0), SimplexVector::pure(2, 0));
        assert_eq!(g.expected_payoff(&pure).unwrap(), 1.0);

        let g = MatrixGame::new(2, 3, (1..=6).map(f64::from).collect()).unwrap();
        let v = g.expected_payoff(&Profile::uniform(&g)).unwrap();
        assert!((v - 3.5).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = pennies();
        let bad = Profile::new(SimplexVector::uniform(3), SimplexVector::uniform(2));
        assert!(matches!(
            g.expected_payoff(&bad),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(g
            .loss_gradient(Player::P1, &SimplexVector::uniform(3))
            .is_err());
        assert!(g.exploitability(&bad).is_err());
    }

    #[test]
    fn loss_gradient_examples() {
        let g = pennies();
        assert_eq!(
            g.loss_gradient(Player::P1, &SimplexVector::uniform(2))
                .unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            g.loss_gradient(Player::P1, &SimplexVector::pure(2, 0))
                .unwrap(),
            vec![-1.0, 1.0]
        );
        assert_eq!(
            g.loss_gradient(Player::P0, &SimplexVector::pure(2, 0))
                .unwrap(),
            vec![1.0, -1.0]
        );
    }

    #[test]
    fn exploitability_examples() {
        let g = pennies();
        assert_eq!(g.exploitability(&Profile::uniform(&g)).unwrap(), 0.0);
        let pure = Profile::new(SimplexVector::pure(2, 0), SimplexVector::pure(2, 0));
        assert_eq!(g.exploitability(&pure).unwrap(), 1.0);

        let g = rps();
        let rock = Profile::new(SimplexVector::pure(3, 0), SimplexVector::pure(3, 0));
        assert_eq!(g.exploitability(&rock).unwrap(), 1.0);
    }

    #[test]
    fn best_response_ties_break_low() {
        let g = pennies();
        assert_eq!(
            g.best_response(Player::P0, &SimplexVector::uniform(2))
                .unwrap()
                .0,
            0
        );
        assert_eq!(
            g.best_response(Player::P1, &SimplexVector::pure(2, 1))
                .unwrap()
                .0,
            1
        );
    }

    #[test]
    fn nash_distance_examples() {
        let g = pennies();
        let u = Profile::uniform(&g);
        assert_eq!(nash_distance(&u, &[u.clone()]).unwrap(), 0.0);
        let pure = Profile::new(SimplexVector::pure(2, 0), SimplexVector::pure(2, 0));
        assert!((nash_distance(&pure, &[u.clone()]).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(nash_distance(&u, &[]), Err(Error::Empty(_))));
        let mut set = vec![pure.clone()];
        let before = nash_distance(&u, &set).unwrap();
        set.push(u.clone());
        assert!(nash_distance(&u, &set).unwrap() <= before);
    }

    #[test]
    fn simplex_hygiene() {
        let v = SimplexVector::new(vec![0.5, 0.5 + 1e-10]).unwrap();
        assert!((v.as_slice().iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOLERANCE);
        let v = SimplexVector::new(vec![1.0, 1e-310]).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0]);
        assert!(SimplexVector::new(vec![0.7, 0.7]).is_err());
        assert!(SimplexVector::new(vec![1.5, -0.5]).is_err());
        assert!(SimplexVector::new(vec![]).is_err());
        assert!(SimplexVector::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn json_round_trip_and_rejects_ragged() {
        let g = MatrixGame::new(2, 3, (1..=6).map(f64::from).collect()).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(
            json,
            r#"{"rows":2,"cols":3,"payoff":[[1.0,2.0,3.0],[4.0,5.0,6.0]]}"#
        );
        assert_eq!(serde_json::from_str::<MatrixGame>(&json).unwrap(), g);
        assert!(
            serde_json::from_str::<MatrixGame>(r#"{"rows":2,"cols":2,"payoff":[[1,2],[3]]}"#)
                .is_err()
        );
        assert!(serde_json::from_str::<MatrixGame>(r#"{"rows":0,"cols":0,"payoff":[]}"#).is_err());
    }

    /// Pure-strategy enumeration of every deviation, independent of
    /// `best_response`.
    fn enum_exploitability(g: &MatrixGame, p: &Profile) -> f64 {
        let mut best1 = f64::NEG_INFINITY;
        for a1 in 0..g.cols() {
            let dev = Profile::new(p.p0.clone(), SimplexVector::pure(g.cols(), a1));
            best1 = best1.max(g.expected_payoff(&dev).unwrap());
        }
        let mut best0 = f64::NEG_INFINITY;
        for a0 in 0..g.rows() {
            let dev = Profile::new(SimplexVector::pure(g.rows(), a0), p.p1.clone());
            best0 = best0.max(-g.expected_payoff(&dev).unwrap());
        }
        0.5 * (best0 + best1)
    }

    fn small_game() -> impl Strategy<Value = MatrixGame> {
        (1usize..=4, 1usize..=4).prop_flat_map(|(m, n)| {
            prop::collection::vec(prop::sample::select(vec![-1.0, 0.0, 1.0]), m * n)
                .prop_map(move |v| MatrixGame::new(m, n, v).unwrap())
        })
    }

    fn simplex(n: usize) -> impl Strategy<Value = SimplexVector> {
        prop::collection::vec(0.0f64..1.0, n)
            .prop_map(|w| SimplexVector::from_weights_or_uniform(w))
    }

    fn game_and_profile() -> impl Strategy<Value = (MatrixGame, Profile)> {
        small_game().prop_flat_map(|g| {
            let (m, n) = (g.rows(), g.cols());
            (Just(g), simplex(m), simplex(n)).prop_map(|(g, a, b)| (g, Profile::new(a, b)))
        })
    }

    proptest! {
        #[test]
        fn exploitability_matches_enumeration((g, p) in game_and_profile()) {
            let e = g.exploitability(&p).unwrap();
            prop_assert!(e >= 0.0);
            prop_assert!((e - enum_exploitability(&g, &p).max(0.0)).abs() < 1e-12);
            let u = Profile::uniform(&g);
            prop_assert!((g.exploitability(&u).unwrap() - enum_exploitability(&g, &u).max(0.0)).abs() < 1e-12);
        }

        #[test]
        fn exploitability_scales_linearly((g, p) in game_and_profile(), c in 0.01f64..10.0) {
            let scaled = g.scaled(c).unwrap();
            let (e, es) = (g.exploitability(&p).unwrap(), scaled.exploitability(&p).unwrap());
            prop_assert!((es - c * e).abs() <= 1e-12 * (1.0 + c));
        }

        #[test]
        fn gradients_cancel_and_are_linear((g, p) in game_and_profile(), lambda in 0.0f64..1.0) {
            let g0 = g.loss_gradient(Player::P0, &p.p1).unwrap();
            let g1 = g.loss_gradient(Player::P1, &p.p0).unwrap();
            prop_assert!((p.p0.dot(&g0) + p.p1.dot(&g1)).abs() < 1e-12);

            let other = SimplexVector::uniform(g.rows());
            let mix: Vec<f64> = p.p0.as_slice().iter().zip(other.as_slice())
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
            let mixed = g.loss_gradient(Player::P1, &SimplexVector::from_weights(mix).unwrap()).unwrap();
            let ga = g.loss_gradient(Player::P1, &p.p0).unwrap();
            let gb = g.loss_gradient(Player::P1, &other).unwrap();
            for ((m, a), b) in mixed.iter().zip(&ga).zip(&gb) {
                prop_assert!((m - (lambda * a + (1.0 - lambda) * b)).abs() < 1e-12);
            }
        }
    }
}
