//! Benchmark games.
//!
//! Random matrix games draw their entries from ChaCha8 (`rand_chacha` 0.3)
//! seeded with `seed_from_u64`, so a `(rows, cols, seed)` triple names the
//! same matrix on every platform.

mod goofspiel;
mod kuhn;
mod leduc;
mod liars_dice;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::efg::{GameNode, TreeGame};
use crate::error::{Error, Result};
use crate::nfg::{MatrixGame, Player, SimplexVector};

pub use goofspiel::goofspiel;
pub use kuhn::kuhn_poker;
pub use leduc::leduc_poker;
pub use liars_dice::liars_dice;

pub(crate) fn action(label: &str, child: GameNode) -> (String, GameNode) {
    (label.to_string(), child)
}

pub(crate) fn decision(
    player: Player,
    infoset: String,
    actions: Vec<(String, GameNode)>,
) -> GameNode {
    GameNode::Decision {
        player,
        infoset,
        actions,
    }
}

/// The generator behind every seeded draw in this crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with i.i.d. entries uniform on `[−1, 1]`, filled row by row.
pub fn random_nfg(rows: usize, cols: usize, seed: u64) -> Result<MatrixGame> {
    if rows == 0 || cols == 0 {
        return Err(Error::Empty("random game dimensions"));
    }
    let mut rng = seeded_rng(seed);
    let payoff = (0..rows * cols)
        .map(|_| rng.gen_range(-1.0..=1.0))
        .collect();
    MatrixGame::new(rows, cols, payoff)
}

/// A point drawn uniformly from the simplex of dimension `n`.
pub fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> SimplexVector {
    let weights: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    SimplexVector::from_weights(weights).expect("exponential draws are positive")
}

pub fn matching_pennies() -> MatrixGame {
    MatrixGame::from_rows(vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).expect("valid matrix")
}

pub fn rock_paper_scissors() -> MatrixGame {
    MatrixGame::from_rows(vec![
        vec![0.0, -1.0, 1.0],
        vec![1.0, 0.0, -1.0],
        vec![-1.0, 1.0, 0.0],
    ])
    .expect("valid matrix")
}

/// Game selector used by configuration files and the command line.
///
/// The textual form is `kuhn`, `leduc`, `goofspiel:<n>`, `liars_dice:<sides>`,
/// `random_nfg:<rows>x<cols>:<seed>`, `matching_pennies` or `rps`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GameSpec {
    RandomNfg { rows: usize, cols: usize, seed: u64 },
    MatchingPennies,
    RockPaperScissors,
    Kuhn,
    Leduc,
    Goofspiel { n: u32 },
    LiarsDice { sides: u32 },
}

/// A built game of either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum Game {
    Matrix(MatrixGame),
    Tree(TreeGame),
}

impl GameSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GameSpec::RandomNfg { rows, cols, .. } if rows == 0 || cols == 0 => Err(
                Error::InvalidConfig("random game dimensions must be positive".into()),
            ),
            GameSpec::Goofspiel { n } if !(3..=5).contains(&n) => Err(Error::InvalidConfig(
                format!("goofspiel needs 3..=5 cards, got {n}"),
            )),
            GameSpec::LiarsDice { sides } if !(2..=6).contains(&sides) => Err(
                Error::InvalidConfig(format!("liar's dice needs 2..=6 sides, got {sides}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn is_matrix(&self) -> bool {
        matches!(
            self,
            GameSpec::RandomNfg { .. } | GameSpec::MatchingPennies | GameSpec::RockPaperScissors
        )
    }

    pub fn build(&self) -> Result<Game> {
        self.validate()?;
        Ok(match *self {
            GameSpec::RandomNfg { rows, cols, seed } => Game::Matrix(random_nfg(rows, cols, seed)?),
            GameSpec::MatchingPennies => Game::Matrix(matching_pennies()),
            GameSpec::RockPaperScissors => Game::Matrix(rock_paper_scissors()),
            GameSpec::Kuhn => Game::Tree(kuhn_poker()),
            GameSpec::Leduc => Game::Tree(leduc_poker()),
            GameSpec::Goofspiel { n } => Game::Tree(goofspiel(n)?),
            GameSpec::LiarsDice { sides } => Game::Tree(liars_dice(sides)?),
        })
    }
}

impl fmt::Display for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameSpec::RandomNfg { rows, cols, seed } => {
                write!(f, "random_nfg:{rows}x{cols}:{seed}")
            }
            GameSpec::MatchingPennies => f.write_str("matching_pennies"),
            GameSpec::RockPaperScissors => f.write_str("rps"),
            GameSpec::Kuhn => f.write_str("kuhn"),
            GameSpec::Leduc => f.write_str("leduc"),
            GameSpec::Goofspiel { n } => write!(f, "goofspiel:{n}"),
            GameSpec::LiarsDice { sides } => write!(f, "liars_dice:{sides}"),
        }
    }
}

impl FromStr for GameSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unrecognized game {s:?}"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let spec = match parts.as_slice() {
            ["kuhn"] => GameSpec::Kuhn,
            ["leduc"] => GameSpec::Leduc,
            ["matching_pennies"] => GameSpec::MatchingPennies,
            ["rps"] => GameSpec::RockPaperScissors,
            ["goofspiel", n] => GameSpec::Goofspiel {
                n: n.parse().map_err(|_| bad())?,
            },
            ["liars_dice", sides] => GameSpec::LiarsDice {
                sides: sides.parse().map_err(|_| bad())?,
            },
            ["random_nfg", dims, seed] => {
                let (rows, cols) = dims.split_once('x').ok_or_else(bad)?;
                GameSpec::RandomNfg {
                    rows: rows.parse().map_err(|_| bad())?,
                    cols: cols.parse().map_err(|_| bad())?,
                    seed: seed.parse().map_err(|_| bad())?,
                }
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_nfg_is_deterministic_and_bounded() {
        let a = random_nfg(5, 5, 0).unwrap();
        assert_eq!(a, random_nfg(5, 5, 0).unwrap());
        assert_ne!(a, random_nfg(5, 5, 1).unwrap());
        assert!(a.payoffs().iter().all(|x| (-1.0..=1.0).contains(x)));
        let mean = a.payoffs().iter().sum::<f64>() / 25.0;
        assert!(mean.abs() < 0.6);
        assert!(random_nfg(0, 3, 0).is_err());
    }

    #[test]
    fn random_simplex_is_valid() {
        let mut rng = seeded_rng(3);
        for n in 1..6 {
            assert_eq!(random_simplex(&mut rng, n).len(), n);
        }
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in [
            "kuhn",
            "leduc",
            "goofspiel:4",
            "liars_dice:3",
            "random_nfg:5x7:11",
            "matching_pennies",
            "rps",
        ] {
            let spec: GameSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("goofspiel:7".parse::<GameSpec>().is_err());
        assert!("liars_dice:1".parse::<GameSpec>().is_err());
        assert!("chess".parse::<GameSpec>().is_err());
        assert!("random_nfg:0x3:1".parse::<GameSpec>().is_err());
    }

    #[test]
    fn spec_json_form() {
        let spec = GameSpec::Goofspiel { n: 4 };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"kind":"GOOFSPIEL","n":4}"#);
        assert_eq!(serde_json::from_str::<GameSpec>(&json).unwrap(), spec);
    }

    #[test]
    fn out_of_range_games() {
        assert!(goofspiel(2).is_err() && goofspiel(6).is_err());
        assert!(liars_dice(1).is_err() && liars_dice(7).is_err());
    }
}
