//! Experiment runner: configuration, algorithm dispatch and result files.
//!
//! An experiment is one JSON document naming a game, an algorithm and its
//! parameters. [`run`] executes it and writes `records.csv`,
//! `final_profile.json`, `config.json` and optionally `curve.svg` into the
//! output directory. [`sweep`] runs many experiments on a bounded thread pool
//! and adds a `summary.csv`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::cfr::{
    cfr_run, dogda_run, rtcfr_plus_run, CfrRunConfig, CfrVariant, DilatedNorm, DogdaRunConfig,
    RtReach,
};
use crate::efg::{NodeKind, TreeGame};
use crate::error::Error;
use crate::games::{Game, GameSpec};
use crate::nfg::{MatrixGame, Player, Profile};
use crate::record::{format_float, write_csv, ConvergenceRecord};
use crate::rt::{
    baseline_selfplay_run, rt_mwu_run, rtrm_plus_run, Regularizer, RtRunConfig, SelfPlayConfig,
};
use crate::simplex::{Averaging, MinimizerConfig};
use crate::BehaviorProfile;

/// Environment variable bounding the sweep worker pool.
pub const THREADS_ENV: &str = "EQUILIBRATE_THREADS";

/// Largest payoff matrix accepted by [`oracle_exploitability`].
pub const ORACLE_CELL_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    UnknownAlgorithm,
    InvalidConfig,
    IncompatibleGame,
    Numerical,
    Io,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnknownAlgorithm => "UNKNOWN_ALGORITHM",
            ErrorCode::InvalidConfig => "INVALID_CONFIG",
            ErrorCode::IncompatibleGame => "INCOMPATIBLE_GAME",
            ErrorCode::Numerical => "NUMERICAL",
            ErrorCode::Io => "IO",
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for numerical
    /// failures, 1 for I/O.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCode::UnknownAlgorithm
            | ErrorCode::InvalidConfig
            | ErrorCode::IncompatibleGame => 2,
            ErrorCode::Numerical => 3,
            ErrorCode::Io => 1,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A failure reported by the runner, serializable as a JSON error object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[error("{code}: {message}")]
pub struct HarnessError {
    pub code: ErrorCode,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<u64>,
}

impl HarnessError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        HarnessError {
            code,
            message: message.into(),
            iteration: None,
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::InvalidConfig, message)
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self::new(ErrorCode::Io, format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        self.code.exit_code()
    }

    /// Single-line JSON form, `{"error":{"code":..,"message":..}}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<Error> for HarnessError {
    fn from(err: Error) -> Self {
        match err {
            Error::Numerical {
                iteration,
                ref detail,
            } => HarnessError {
                code: ErrorCode::Numerical,
                message: format!("NaN or infinity at iteration {iteration}: {detail}"),
                iteration: Some(iteration),
            },
            Error::NonFinite(_) => HarnessError::new(ErrorCode::Numerical, err.to_string()),
            other => HarnessError::invalid(other.to_string()),
        }
    }
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Algorithm {
    Rm,
    RmPlus,
    Mwu,
    Omwu,
    Gda,
    Ogda,
    Cfr,
    CfrPlus,
    RtrmPlus,
    RtcfrPlus,
    RtMwu,
    RtOmwu,
    Dogda,
}

impl Algorithm {
    pub const ALL: [Algorithm; 13] = [
        Algorithm::Rm,
        Algorithm::RmPlus,
        Algorithm::Mwu,
        Algorithm::Omwu,
        Algorithm::Gda,
        Algorithm::Ogda,
        Algorithm::Cfr,
        Algorithm::CfrPlus,
        Algorithm::RtrmPlus,
        Algorithm::RtcfrPlus,
        Algorithm::RtMwu,
        Algorithm::RtOmwu,
        Algorithm::Dogda,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Rm => "RM",
            Algorithm::RmPlus => "RM_PLUS",
            Algorithm::Mwu => "MWU",
            Algorithm::Omwu => "OMWU",
            Algorithm::Gda => "GDA",
            Algorithm::Ogda => "OGDA",
            Algorithm::Cfr => "CFR",
            Algorithm::CfrPlus => "CFR_PLUS",
            Algorithm::RtrmPlus => "RTRM_PLUS",
            Algorithm::RtcfrPlus => "RTCFR_PLUS",
            Algorithm::RtMwu => "RT_MWU",
            Algorithm::RtOmwu => "RT_OMWU",
            Algorithm::Dogda => "DOGDA",
        }
    }

    /// Algorithms that operate on a payoff matrix.
    pub fn is_matrix(self) -> bool {
        matches!(
            self,
            Algorithm::Rm
                | Algorithm::RmPlus
                | Algorithm::Mwu
                | Algorithm::Omwu
                | Algorithm::Gda
                | Algorithm::Ogda
                | Algorithm::RtrmPlus
                | Algorithm::RtMwu
                | Algorithm::RtOmwu
        )
    }

    /// Algorithms scheduled as `N` subproblems of `T` iterations.
    pub fn is_reward_transformed(self) -> bool {
        matches!(
            self,
            Algorithm::RtrmPlus | Algorithm::RtcfrPlus | Algorithm::RtMwu | Algorithm::RtOmwu
        )
    }

    fn uses_step_size(self) -> bool {
        matches!(
            self,
            Algorithm::Mwu
                | Algorithm::Omwu
                | Algorithm::Gda
                | Algorithm::Ogda
                | Algorithm::RtMwu
                | Algorithm::RtOmwu
                | Algorithm::Dogda
        )
    }

    fn default_averaging(self) -> Option<Averaging> {
        match self {
            Algorithm::Rm | Algorithm::Mwu | Algorithm::Gda | Algorithm::Cfr => {
                Some(Averaging::Uniform)
            }
            Algorithm::RmPlus | Algorithm::CfrPlus => Some(Averaging::Linear),
            Algorithm::Omwu | Algorithm::Ogda => Some(Averaging::None),
            _ => None,
        }
    }

    fn default_alternating(self) -> Option<bool> {
        match self {
            Algorithm::Dogda => None,
            Algorithm::Rm
            | Algorithm::Mwu
            | Algorithm::Omwu
            | Algorithm::Gda
            | Algorithm::Ogda
            | Algorithm::Cfr => Some(false),
            _ => Some(true),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                HarnessError::new(
                    ErrorCode::UnknownAlgorithm,
                    format!("unknown algorithm {s:?}"),
                )
            })
    }
}

/// Where the game comes from: a built-in generator or a JSON file.
///
/// Text forms are the [`GameSpec`] strings plus `tree:<path>` for a
/// `TreeGame` document and `matrix:<path>` for a `MatrixGame` document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GameSource {
    Builtin(GameSpec),
    TreeFile(PathBuf),
    MatrixFile(PathBuf),
}

impl GameSource {
    pub fn load(&self) -> HarnessResult<Game> {
        let read = |path: &Path| fs::read_to_string(path).map_err(|e| HarnessError::io(path, e));
        let parse_err = |path: &Path, e: serde_json::Error| {
            HarnessError::invalid(format!("{}: {e}", path.display()))
        };
        match self {
            GameSource::Builtin(spec) => Ok(spec.build()?),
            GameSource::TreeFile(path) => Ok(Game::Tree(
                serde_json::from_str(&read(path)?).map_err(|e| parse_err(path, e))?,
            )),
            GameSource::MatrixFile(path) => Ok(Game::Matrix(
                serde_json::from_str(&read(path)?).map_err(|e| parse_err(path, e))?,
            )),
        }
    }
}

impl fmt::Display for GameSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GameSource::Builtin(spec) => spec.fmt(f),
            GameSource::TreeFile(path) => write!(f, "tree:{}", path.display()),
            GameSource::MatrixFile(path) => write!(f, "matrix:{}", path.display()),
        }
    }
}

impl FromStr for GameSource {
    type Err = HarnessError;

    fn from_str(s: &str) -> HarnessResult<Self> {
        if let Some(path) = s.strip_prefix("tree:") {
            Ok(GameSource::TreeFile(path.into()))
        } else if let Some(path) = s.strip_prefix("matrix:") {
            Ok(GameSource::MatrixFile(path.into()))
        } else {
            Ok(GameSource::Builtin(s.parse()?))
        }
    }
}

impl Serialize for GameSource {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GameSource {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Form {
            Text(String),
            Spec(GameSpec),
        }
        match Form::deserialize(deserializer)? {
            Form::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Form::Spec(spec) => {
                spec.validate().map_err(serde::de::Error::custom)?;
                Ok(GameSource::Builtin(spec))
            }
        }
    }
}

/// Algorithm parameters. Which ones apply depends on the algorithm; unset
/// fields take the algorithm's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Inner iterations per subproblem.
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    pub inner_iterations: Option<u64>,
    /// Number of subproblems.
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub outer_iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regularizer: Option<Regularizer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternating: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub averaging: Option<Averaging>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rt_reach: Option<RtReach>,
    /// Solve each subproblem to this duality gap instead of `T` steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_gap_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regrets_from_strategy: Option<bool>,
}

/// One experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSource,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub params: AlgorithmParams,
    /// Must equal `T·N` for reward-transformed algorithms when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_iterations: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_every: Option<u64>,
    /// Carried into the results; every algorithm here is deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub svg: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> HarnessResult<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| HarnessError::invalid(format!("config is not JSON: {e}")))?;
        Self::from_value(value)
    }

    /// Parses a JSON value. An unrecognized `algorithm` string is reported as
    /// `UNKNOWN_ALGORITHM` rather than as a generic schema error.
    pub fn from_value(mut value: Value) -> HarnessResult<Self> {
        let object = value
            .as_object_mut()
            .ok_or_else(|| HarnessError::invalid("config must be a JSON object"))?;
        match object.get("algorithm") {
            Some(Value::String(name)) => {
                let algorithm: Algorithm = name.parse()?;
                object.insert("algorithm".into(), Value::String(algorithm.as_str().into()));
            }
            Some(_) => return Err(HarnessError::invalid("algorithm must be a string")),
            None => return Err(HarnessError::invalid("missing field `algorithm`")),
        }
        let config: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| HarnessError::invalid(e.to_string()))?;
        config.check_params()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    fn check_params(&self) -> HarnessResult<()> {
        let a = self.algorithm;
        let p = &self.params;
        let reject = |name: &str, set: bool, allowed: bool| {
            if set && !allowed {
                Err(HarnessError::invalid(format!(
                    "parameter {name} does not apply to {a}"
                )))
            } else {
                Ok(())
            }
        };
        let rt = a.is_reward_transformed();
        reject("mu", p.mu.is_some(), rt)?;
        reject("T", p.inner_iterations.is_some(), rt)?;
        reject("N", p.outer_iterations.is_some(), rt)?;
        reject("eta", p.eta.is_some(), a.uses_step_size())?;
        reject("regularizer", p.regularizer.is_some(), rt)?;
        reject(
            "alternating",
            p.alternating.is_some(),
            a.default_alternating().is_some(),
        )?;
        reject(
            "averaging",
            p.averaging.is_some(),
            a.default_averaging().is_some(),
        )?;
        reject("rt_reach", p.rt_reach.is_some(), a == Algorithm::RtcfrPlus)?;
        reject(
            "inner_gap_tolerance",
            p.inner_gap_tolerance.is_some(),
            rt && a != Algorithm::RtcfrPlus,
        )?;
        reject(
            "regrets_from_strategy",
            p.regrets_from_strategy.is_some(),
            matches!(a, Algorithm::Cfr | Algorithm::CfrPlus),
        )?;
        if self.eval_every == Some(0) {
            return Err(HarnessError::invalid("eval_every must be positive"));
        }
        if rt {
            let need = |v: Option<u64>, name: &str| {
                v.ok_or_else(|| HarnessError::invalid(format!("{a} needs {name}")))
            };
            let t = need(p.inner_iterations, "T")?;
            let n = need(p.outer_iterations, "N")?;
            if p.mu.is_none() {
                return Err(HarnessError::invalid(format!("{a} needs mu")));
            }
            if let Some(total) = self.total_iterations {
                if p.inner_gap_tolerance.is_none() && total != t * n {
                    return Err(HarnessError::invalid(format!(
                        "total_iterations {total} differs from T·N = {}",
                        t * n
                    )));
                }
            }
        } else if self.total_iterations.is_none() {
            return Err(HarnessError::invalid(format!("{a} needs total_iterations")));
        }
        if a.uses_step_size() && p.eta.is_none() {
            return Err(HarnessError::invalid(format!("{a} needs eta")));
        }
        match (a, p.regularizer) {
            (Algorithm::RtrmPlus | Algorithm::RtcfrPlus, Some(r))
                if r != Regularizer::EuclideanBregman =>
            {
                Err(HarnessError::invalid(format!(
                    "{a} requires the EUCLIDEAN_BREGMAN regularizer"
                )))
            }
            (Algorithm::RtcfrPlus, _) if p.alternating == Some(false) => {
                Err(HarnessError::invalid("RTCFR_PLUS uses alternating updates"))
            }
            _ => Ok(()),
        }
    }

    /// The configuration with every applicable default written out.
    pub fn effective(&self) -> ExperimentConfig {
        let mut out = self.clone();
        let a = self.algorithm;
        let p = &mut out.params;
        p.alternating = p.alternating.or(a.default_alternating());
        p.averaging = p.averaging.or(a.default_averaging());
        match a {
            Algorithm::RtrmPlus | Algorithm::RtcfrPlus => {
                p.regularizer = p.regularizer.or(Some(Regularizer::EuclideanBregman));
            }
            Algorithm::RtMwu | Algorithm::RtOmwu => {
                p.regularizer = p.regularizer.or(Some(Regularizer::Kl))
            }
            _ => {}
        }
        if a == Algorithm::RtcfrPlus {
            p.rt_reach = p.rt_reach.or(Some(RtReach::Full));
        }
        if matches!(a, Algorithm::Cfr | Algorithm::CfrPlus) {
            p.regrets_from_strategy = p.regrets_from_strategy.or(Some(false));
        }
        if out.total_iterations.is_none() && p.inner_gap_tolerance.is_none() {
            if let (Some(t), Some(n)) = (p.inner_iterations, p.outer_iterations) {
                out.total_iterations = Some(t * n);
            }
        }
        out
    }
}

/// Final strategy of a run in either representation.
#[derive(Debug, Clone, PartialEq)]
pub enum FinalProfile {
    Matrix(Profile),
    Tree {
        game: TreeGame,
        profile: BehaviorProfile,
    },
}

impl FinalProfile {
    pub fn to_json(&self) -> Value {
        match self {
            FinalProfile::Matrix(p) => serde_json::to_value(p).expect("profiles serialize"),
            FinalProfile::Tree { game, profile } => {
                serde_json::to_value(profile.to_json_map(game)).expect("profiles serialize")
            }
        }
    }
}

/// In-memory result of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub records: Vec<ConvergenceRecord>,
    pub profile: FinalProfile,
    pub flags: Vec<String>,
}

impl Execution {
    pub fn final_exploitability(&self) -> Option<f64> {
        self.records.last().map(|r| r.exploitability)
    }

    pub fn records_csv(&self) -> String {
        crate::record::to_csv_string(&self.records)
    }
}

/// The matrix behind a depth-2 tree: one decision per player, no chance,
/// and every path of the form root decision, opponent decision, terminal.
pub fn matrix_embedding(game: &TreeGame) -> Option<MatrixGame> {
    if game.num_infosets(Player::P0) != 1 || game.num_infosets(Player::P1) != 1 {
        return None;
    }
    let root = game.node(0);
    let NodeKind::Player { player: first, .. } = root.kind else {
        return None;
    };
    let second = first.opponent();
    let rows = root.num_children;
    let cols = game.infoset(second, 0).num_actions();
    let mut table = vec![0.0; rows * cols];
    for (i, child) in root.children().enumerate() {
        let node = game.node(child);
        if !matches!(node.kind, NodeKind::Player { player, .. } if player == second) {
            return None;
        }
        for (j, leaf) in node.children().enumerate() {
            let NodeKind::Terminal { payoff } = game.node(leaf).kind else {
                return None;
            };
            table[i * cols + j] = payoff;
        }
    }
    let matrix = MatrixGame::new(rows, cols, table).ok()?;
    Some(if first == Player::P0 {
        matrix
    } else {
        transpose(&matrix)
    })
}

fn transpose(game: &MatrixGame) -> MatrixGame {
    let (r, c) = (game.rows(), game.cols());
    let t = (0..c * r).map(|k| game.payoff(k % r, k / r)).collect();
    MatrixGame::new(c, r, t).expect("transpose of a valid matrix")
}

/// Runs an experiment without touching the file system.
pub fn execute(config: &ExperimentConfig) -> HarnessResult<Execution> {
    config.check_params()?;
    let config = config.effective();
    let a = config.algorithm;
    let game = config.game.load()?;
    if a.is_matrix() {
        let matrix = match game {
            Game::Matrix(m) => m,
            Game::Tree(ref t) => matrix_embedding(t).ok_or_else(|| {
                HarnessError::new(
                    ErrorCode::IncompatibleGame,
                    format!(
                        "{a} needs a matrix game or a depth-2 tree, got {}",
                        config.game
                    ),
                )
            })?,
        };
        let out = run_matrix(&config, &matrix)?;
        Ok(Execution {
            records: out.records,
            profile: FinalProfile::Matrix(out.profile),
            flags: out.flags,
        })
    } else {
        let tree = match game {
            Game::Tree(t) => t,
            Game::Matrix(ref m) => TreeGame::from_matrix(m),
        };
        let out = run_tree(&config, &tree)?;
        Ok(Execution {
            records: out.records,
            profile: FinalProfile::Tree {
                game: tree,
                profile: out.profile,
            },
            flags: out.flags,
        })
    }
}

fn rt_config(config: &ExperimentConfig) -> RtRunConfig {
    let p = &config.params;
    let mut rt = RtRunConfig::new(
        p.mu.unwrap_or_default(),
        p.inner_iterations.unwrap_or_default(),
        p.outer_iterations.unwrap_or_default(),
    );
    rt.alternating = p.alternating.unwrap_or(true);
    rt.eval_every = config.eval_every;
    rt.seed = config.seed;
    rt.inner_gap_tolerance = p.inner_gap_tolerance;
    rt.record_wall_time = config.record_wall_time;
    rt
}

fn run_matrix(
    config: &ExperimentConfig,
    game: &MatrixGame,
) -> HarnessResult<crate::RunOutput<Profile>> {
    let p = &config.params;
    let eta = p.eta.unwrap_or_default();
    let selfplay = |minimizer: MinimizerConfig| {
        let mut cfg = SelfPlayConfig::new(
            minimizer,
            config.total_iterations.unwrap_or_default(),
            p.alternating.unwrap_or(false),
            p.averaging.unwrap_or(Averaging::None),
        );
        cfg.eval_every = config.eval_every;
        cfg.record_wall_time = config.record_wall_time;
        baseline_selfplay_run(game, &cfg)
    };
    let regularizer = p.regularizer.unwrap_or(Regularizer::Kl);
    Ok(match config.algorithm {
        Algorithm::Rm => selfplay(MinimizerConfig::rm()),
        Algorithm::RmPlus => selfplay(MinimizerConfig::rm_plus()),
        Algorithm::Mwu => selfplay(MinimizerConfig::mwu(eta, false)),
        Algorithm::Omwu => selfplay(MinimizerConfig::mwu(eta, true)),
        Algorithm::Gda => selfplay(MinimizerConfig::gda(eta, false)),
        Algorithm::Ogda => selfplay(MinimizerConfig::gda(eta, true)),
        Algorithm::RtrmPlus => rtrm_plus_run(game, &rt_config(config)),
        Algorithm::RtMwu => rt_mwu_run(game, &rt_config(config), regularizer, eta, false),
        Algorithm::RtOmwu => rt_mwu_run(game, &rt_config(config), regularizer, eta, true),
        other => unreachable!("{other} is not a matrix algorithm"),
    }?)
}

fn run_tree(
    config: &ExperimentConfig,
    game: &TreeGame,
) -> HarnessResult<crate::RunOutput<BehaviorProfile>> {
    let p = &config.params;
    let iterations = config.total_iterations.unwrap_or_default();
    let cfr = |mut variant: CfrVariant| {
        variant.alternating = p.alternating.unwrap_or(variant.alternating);
        variant.averaging = p.averaging.unwrap_or(variant.averaging);
        let mut cfg = CfrRunConfig::new(variant, iterations);
        cfg.eval_every = config.eval_every;
        cfg.regrets_from_strategy = p.regrets_from_strategy.unwrap_or(false);
        cfg.record_wall_time = config.record_wall_time;
        cfr_run(game, &cfg)
    };
    Ok(match config.algorithm {
        Algorithm::Cfr => cfr(CfrVariant::cfr()),
        Algorithm::CfrPlus => cfr(CfrVariant::cfr_plus()),
        Algorithm::RtcfrPlus => {
            rtcfr_plus_run(game, &rt_config(config), p.rt_reach.unwrap_or_default())
        }
        Algorithm::Dogda => {
            let cfg = DogdaRunConfig {
                learning_rate: p.eta.unwrap_or_default(),
                iterations,
                eval_every: config.eval_every,
                record_wall_time: config.record_wall_time,
            };
            dogda_run(game, &DilatedNorm::uniform(game), &cfg)
        }
        other => unreachable!("{other} is not a tree algorithm"),
    }?)
}

/// Outcome of [`run`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub output: PathBuf,
    pub final_exploitability: f64,
    pub records: usize,
}

/// Runs an experiment and writes its result files into `config.output`.
pub fn run(config: &ExperimentConfig) -> HarnessResult<RunSummary> {
    let dir = config
        .output
        .clone()
        .ok_or_else(|| HarnessError::invalid("no output directory given"))?;
    log::info!(
        "running {} on {} into {}",
        config.algorithm,
        config.game,
        dir.display()
    );
    let execution = execute(config)?;
    for flag in &execution.flags {
        log::warn!("{flag}");
    }
    fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    let write = |name: &str, contents: &[u8]| {
        let path = dir.join(name);
        fs::write(&path, contents).map_err(|e| HarnessError::io(&path, e))
    };
    let mut csv = Vec::new();
    write_csv(&mut csv, &execution.records).expect("writing to a Vec cannot fail");
    write("records.csv", &csv)?;
    let profile =
        serde_json::to_string_pretty(&execution.profile.to_json()).expect("JSON values serialize");
    write("final_profile.json", format!("{profile}\n").as_bytes())?;
    let echo = serde_json::to_string_pretty(&config.effective()).expect("configs serialize");
    write("config.json", format!("{echo}\n").as_bytes())?;
    if config.svg {
        let title = format!("{} on {}", config.algorithm, config.game);
        write(
            "curve.svg",
            render_svg(&execution.records, &title).as_bytes(),
        )?;
    }
    Ok(RunSummary {
        output: dir,
        final_exploitability: execution.final_exploitability().unwrap_or(f64::NAN),
        records: execution.records.len(),
    })
}

/// Exploitability by enumerating every pure strategy.
///
/// Each player's best response is found by scoring all of its pure actions
/// against the opponent's mixture, entry by entry.
pub fn oracle_exploitability(game: &MatrixGame, profile: &Profile) -> crate::Result<f64> {
    let cells = game.rows() * game.cols();
    if cells > ORACLE_CELL_CAP {
        return Err(Error::OracleTooLarge {
            cells,
            cap: ORACLE_CELL_CAP,
        });
    }
    if profile.p0.len() != game.rows() || profile.p1.len() != game.cols() {
        return Err(Error::DimensionMismatch {
            context: "oracle profile",
            expected: cells,
            found: profile.p0.len() * profile.p1.len(),
        });
    }
    let (x, y) = (profile.p0.as_slice(), profile.p1.as_slice());
    let mut col_best = f64::NEG_INFINITY;
    for j in 0..game.cols() {
        let mut v = 0.0;
        for (i, xi) in x.iter().enumerate() {
            v += xi * game.payoff(i, j);
        }
        col_best = col_best.max(v);
    }
    let mut row_best = f64::INFINITY;
    for i in 0..game.rows() {
        let mut v = 0.0;
        for (j, yj) in y.iter().enumerate() {
            v += yj * game.payoff(i, j);
        }
        row_best = row_best.min(v);
    }
    Ok(0.5 * (col_best - row_best))
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub game: String,
    pub algorithm: Algorithm,
    pub outcome: HarnessResult<RunSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub summary_path: PathBuf,
}

impl SweepSummary {
    /// The earliest failure in configuration order.
    pub fn first_error(&self) -> Option<&HarnessError> {
        self.rows.iter().find_map(|r| r.outcome.as_ref().err())
    }
}

pub const SUMMARY_HEADER: &str = "index,game,algorithm,output,final_exploitability,status";

/// Worker count from [`THREADS_ENV`], or the machine default.
pub fn sweep_threads() -> HarnessResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(HarnessError::invalid(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
        Err(_) => Ok(0),
    }
}

/// Runs every configuration, each into `<out>/run_<index>`, and writes
/// `<out>/summary.csv` in configuration order. Failed runs keep their row
/// with an empty value and the error code as status.
pub fn sweep(
    configs: &[ExperimentConfig],
    out: &Path,
    threads: usize,
) -> HarnessResult<SweepSummary> {
    use rayon::prelude::*;
    if configs.is_empty() {
        return Err(HarnessError::invalid("sweep needs at least one config"));
    }
    fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::invalid(format!("thread pool: {e}")))?;
    let width = configs.len().saturating_sub(1).to_string().len().max(3);
    let rows: Vec<SweepRow> = pool.install(|| {
        configs
            .par_iter()
            .enumerate()
            .map(|(index, config)| {
                let mut config = config.clone();
                config.output = Some(out.join(format!("run_{index:0width$}")));
                SweepRow {
                    index,
                    game: config.game.to_string(),
                    algorithm: config.algorithm,
                    outcome: run(&config),
                }
            })
            .collect()
    });
    let mut csv = format!("{SUMMARY_HEADER}\n");
    for row in &rows {
        let (dir, value, status) = match &row.outcome {
            Ok(s) => (
                s.output
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                format_float(s.final_exploitability),
                "OK".to_string(),
            ),
            Err(e) => (String::new(), String::new(), e.code.to_string()),
        };
        csv.push_str(&format!(
            "{},{},{},{dir},{value},{status}\n",
            row.index,
            csv_field(&row.game),
            row.algorithm
        ));
    }
    let summary_path = out.join("summary.csv");
    fs::write(&summary_path, csv).map_err(|e| HarnessError::io(&summary_path, e))?;
    Ok(SweepSummary { rows, summary_path })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Exploitability against iteration on a log scale, as a standalone SVG.
/// Coordinates are printed with two decimals so the output is stable.
pub fn render_svg(records: &[ConvergenceRecord], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const LEFT: f64 = 70.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;
    const FLOOR: f64 = 1e-16;
    let log = |v: f64| v.max(FLOOR).log10();
    let max_iter = records
        .iter()
        .map(|r| r.total_iteration)
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let logs: Vec<f64> = records.iter().map(|r| log(r.exploitability)).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() {
        (lo.floor(), hi.ceil().max(lo.floor() + 1.0))
    } else {
        (-1.0, 0.0)
    };
    let px = |t: f64| LEFT + (W - LEFT - RIGHT) * t / max_iter;
    let py = |l: f64| TOP + (H - TOP - BOTTOM) * (hi - l) / (hi - lo);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        W / 2.0,
        xml_escape(title)
    ));
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    svg.push_str(&format!(
        "<path d=\"M{x0:.2} {y0:.2} L{x0:.2} {y1:.2} L{x1:.2} {y1:.2}\" stroke=\"black\" fill=\"none\"/>\n"
    ));
    let decades = (hi - lo) as i64;
    let stride = (decades / 8 + 1) as usize;
    for d in (0..=decades).step_by(stride) {
        let e = lo as i64 + d;
        let y = py(e as f64);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{e}</text>\n",
            x0 - 8.0,
            y + 4.0
        ));
    }
    for k in 0..=4u32 {
        let t = (max_iter * f64::from(k) / 4.0).round();
        let x = px(t);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{y1:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            y1 + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{t}</text>\n",
            y1 + 18.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">iteration</text>\n",
        (x0 + x1) / 2.0,
        H - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">exploitability</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));
    let points: Vec<String> = records
        .iter()
        .zip(&logs)
        .map(|(r, l)| format!("{:.2},{:.2}", px(r.total_iteration as f64), py(*l)))
        .collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        points.join(" ")
    ));
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Parses a JSON override value: numbers, booleans and `null` as JSON,
/// anything else as a string.
pub fn override_value(raw: &str) -> Value {
    serde_json::from_str::<Value>(raw)
        .ok()
        .filter(|v| !v.is_object() && !v.is_array())
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Sets `key` (a top-level field or `params.<name>`) in a raw config.
pub fn apply_override(config: &mut Value, key: &str, value: Value) -> HarnessResult<()> {
    let object = config
        .as_object_mut()
        .ok_or_else(|| HarnessError::invalid("config must be a JSON object"))?;
    match key.split_once('.') {
        Some(("params", name)) => {
            let params = object
                .entry("params")
                .or_insert_with(|| Value::Object(Default::default()));
            params
                .as_object_mut()
                .ok_or_else(|| HarnessError::invalid("params must be a JSON object"))?
                .insert(name.to_string(), value);
        }
        Some(_) => return Err(HarnessError::invalid(format!("cannot override {key:?}"))),
        None => {
            object.insert(key.to_string(), value);
        }
    }
    Ok(())
}

/// JSON document of a game, as emitted by `dump-game`. Matrix games are
/// written as their depth-2 tree embedding.
pub fn dump_game(source: &GameSource) -> HarnessResult<String> {
    let tree = match source.load()? {
        Game::Tree(t) => t,
        Game::Matrix(m) => TreeGame::from_matrix(&m),
    };
    Ok(serde_json::to_string_pretty(&tree).expect("trees serialize"))
}

/// Per-run directory names and final values read back from `summary.csv`.
pub fn read_summary(path: &Path) -> HarnessResult<BTreeMap<usize, Option<f64>>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BTreeMap::new();
    for line in text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || HarnessError::invalid(format!("malformed summary line {line:?}"));
        let index = fields
            .first()
            .and_then(|f| f.parse().ok())
            .ok_or_else(bad)?;
        let value = fields.get(fields.len().wrapping_sub(2)).ok_or_else(bad)?;
        out.insert(index, value.parse().ok());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{matching_pennies, random_nfg, seeded_rng};
    use rand::Rng;

    fn config(json: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(json).unwrap()
    }

    #[test]
    fn unknown_algorithm_has_its_own_code() {
        let err = ExperimentConfig::from_json(
            r#"{"game":"kuhn","algorithm":"FOO","total_iterations":3}"#,
        )
        .unwrap_err();
        assert_eq!(err.code, ErrorCode::UnknownAlgorithm);
        assert_eq!(err.exit_code(), 2);
        let json: Value = serde_json::from_str(&err.to_json()).unwrap();
        assert_eq!(json["error"]["code"], "UNKNOWN_ALGORITHM");
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.as_str().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_value(a).unwrap(), a.as_str());
        }
        assert_eq!(
            "rtcfr_plus".parse::<Algorithm>().unwrap(),
            Algorithm::RtcfrPlus
        );
    }

    #[test]
    fn parameter_checks() {
        let bad = [
            r#"{"game":"kuhn","algorithm":"CFR_PLUS","total_iterations":3,"params":{"mu":1}}"#,
            r#"{"game":"kuhn","algorithm":"RTCFR_PLUS","params":{"mu":1,"T":2}}"#,
            r#"{"game":"kuhn","algorithm":"RTCFR_PLUS","params":{"mu":1,"T":2,"N":3},"total_iterations":7}"#,
            r#"{"game":"rps","algorithm":"MWU","total_iterations":3}"#,
            r#"{"game":"rps","algorithm":"RTRM_PLUS","params":{"mu":1,"T":2,"N":3,"regularizer":"KL"}}"#,
            r#"{"game":"rps","algorithm":"RM","total_iterations":3,"params":{"typo":1}}"#,
            r#"{"game":"rps","algorithm":"RM","total_iterations":3,"eval_every":0}"#,
            r#"{"game":"chess","algorithm":"RM","total_iterations":3}"#,
            r#"[1,2]"#,
        ];
        for text in bad {
            let err = ExperimentConfig::from_json(text).unwrap_err();
            assert_eq!(err.code, ErrorCode::InvalidConfig, "{text}: {err}");
        }
    }

    #[test]
    fn effective_config_fills_defaults() {
        let c =
            config(r#"{"game":"kuhn","algorithm":"RTCFR_PLUS","params":{"mu":0.5,"T":5,"N":400}}"#)
                .effective();
        assert_eq!(c.total_iterations, Some(2000));
        assert_eq!(c.params.alternating, Some(true));
        assert_eq!(c.params.rt_reach, Some(RtReach::Full));
        let again = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn game_accepts_object_form() {
        let c = config(
            r#"{"game":{"kind":"RANDOM_NFG","rows":3,"cols":2,"seed":4},"algorithm":"RM","total_iterations":1}"#,
        );
        assert_eq!(c.game.to_string(), "random_nfg:3x2:4");
    }

    #[test]
    fn tree_algorithms_run_on_matrix_games() {
        let c = config(r#"{"game":"rps","algorithm":"CFR_PLUS","total_iterations":50}"#);
        let out = execute(&c).unwrap();
        assert_eq!(out.records.len(), 50);
        assert!(matches!(out.profile, FinalProfile::Tree { .. }));
    }

    #[test]
    fn matrix_algorithms_reject_real_trees() {
        let c = config(r#"{"game":"kuhn","algorithm":"RM_PLUS","total_iterations":5}"#);
        assert_eq!(execute(&c).unwrap_err().code, ErrorCode::IncompatibleGame);
    }

    #[test]
    fn embedding_round_trip() {
        let game = random_nfg(3, 4, 2).unwrap();
        assert_eq!(
            matrix_embedding(&TreeGame::from_matrix(&game)).unwrap(),
            game
        );
        assert!(matrix_embedding(&crate::games::kuhn_poker()).is_none());
        let swapped = TreeGame::from_root(crate::efg::GameNode::Decision {
            player: Player::P1,
            infoset: "c".into(),
            actions: (0..2)
                .map(|j| {
                    let row = crate::efg::GameNode::Decision {
                        player: Player::P0,
                        infoset: "r".into(),
                        actions: (0..3)
                            .map(|i| {
                                (
                                    i.to_string(),
                                    crate::efg::GameNode::Terminal((i * 10 + j) as f64),
                                )
                            })
                            .collect(),
                    };
                    (j.to_string(), row)
                })
                .collect(),
        })
        .unwrap();
        let m = matrix_embedding(&swapped).unwrap();
        assert_eq!((m.rows(), m.cols()), (3, 2));
        assert_eq!(m.payoff(2, 1), 21.0);
    }

    #[test]
    fn oracle_matches_fast_path() {
        let mut rng = seeded_rng(5);
        for seed in 0..200 {
            let (r, c) = (rng.gen_range(1..=4), rng.gen_range(1..=4));
            let game = random_nfg(r, c, seed).unwrap();
            let profile = Profile::new(
                crate::games::random_simplex(&mut rng, r),
                crate::games::random_simplex(&mut rng, c),
            );
            let a = oracle_exploitability(&game, &profile).unwrap();
            let b = game.exploitability(&profile).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(
            oracle_exploitability(&matching_pennies(), &Profile::uniform(&matching_pennies()))
                .unwrap(),
            0.0
        );
        let single = MatrixGame::new(1, 1, vec![0.7]).unwrap();
        assert_eq!(
            oracle_exploitability(&single, &Profile::uniform(&single)).unwrap(),
            0.0
        );
        let big = MatrixGame::new(101, 100, vec![0.0; 10_100]).unwrap();
        assert!(matches!(
            oracle_exploitability(&big, &Profile::uniform(&big)),
            Err(Error::OracleTooLarge { cells: 10_100, .. })
        ));
    }

    #[test]
    fn svg_is_stable_text() {
        let records: Vec<ConvergenceRecord> = (1..=5)
            .map(|t| ConvergenceRecord {
                total_iteration: t,
                exploitability: 10f64.powi(-(t as i32)),
                duality_gap: None,
                sccp_index: 0,
                wall_time_ns: 0,
            })
            .collect();
        let a = render_svg(&records, "a <b>");
        assert_eq!(a, render_svg(&records, "a <b>"));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("a &lt;b&gt;"));
        assert!(a.contains("points=\"180.00,40.00 290.00,117.50 "), "{a}");
        assert!(a.contains(" 620.00,350.00\"/>"), "{a}");
        assert!(render_svg(&[], "empty").contains("<polyline"));
    }

    #[test]
    fn overrides() {
        let mut v: Value = serde_json::from_str(r#"{"game":"rps","algorithm":"RM"}"#).unwrap();
        apply_override(&mut v, "total_iterations", override_value("12")).unwrap();
        apply_override(&mut v, "params.averaging", override_value("LINEAR")).unwrap();
        apply_override(&mut v, "game", override_value("matching_pennies")).unwrap();
        let c = ExperimentConfig::from_value(v.clone()).unwrap();
        assert_eq!(c.total_iterations, Some(12));
        assert_eq!(c.params.averaging, Some(Averaging::Linear));
        assert!(apply_override(&mut v, "x.y", Value::Null).is_err());
    }
}
