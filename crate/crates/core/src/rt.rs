//! Reward transformation on normal-form games.
//!
//! The base game is replaced by a sequence of strongly convex-concave
//! problems (SCCPs)
//!
//! ```text
//! min_{σ0} max_{σ1}  u_1(σ0, σ1) + μ φ(σ0, σ0^r) − μ φ(σ1, σ1^r)
//! ```
//!
//! each anchored at the previous problem's approximate saddle point. With
//! the Euclidean Bregman regularizer `φ(σ, σ^r) = ½‖σ − σ^r‖²` every SCCP is
//! defined on the whole simplex, so RM+ can be used as the inner solver
//! (RTRM+). The KL and reverse-entropy regularizers need interior points and
//! are paired with MWU, which gives the R-NaD style baselines.
//!
//! Alternating updates move player 0 first, then player 1 against the fresh
//! player-0 strategy. Simultaneous updates let both players see the
//! strategies of the same iteration.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::nfg::{MatrixGame, Player, Profile, SimplexVector};
use crate::record::{default_eval_every, Recorder, RunOutput};
use crate::simplex::{gda_step, mwu_step, Averaging, MinimizerConfig, MinimizerKind, RegretState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regularizer {
    /// `½‖σ − σ^r‖²`, defined on the whole simplex.
    EuclideanBregman,
    /// `Σ σ log(σ / σ^r)`.
    Kl,
    /// `Σ σ^r log(σ^r / σ)`.
    ReverseEntropy,
}

impl Regularizer {
    pub fn needs_interior(self) -> bool {
        !matches!(self, Regularizer::EuclideanBregman)
    }

    /// `∇_σ φ(σ, σ^r)`.
    pub fn gradient(self, strategy: &SimplexVector, reference: &SimplexVector) -> Result<Vec<f64>> {
        ensure_len("reference strategy", strategy.len(), reference.len())?;
        let pairs = strategy.as_slice().iter().zip(reference.as_slice());
        match self {
            Regularizer::EuclideanBregman => Ok(pairs.map(|(s, r)| s - r).collect()),
            Regularizer::Kl | Regularizer::ReverseEntropy => {
                if !strategy.is_interior() || !reference.is_interior() {
                    return Err(Error::Boundary(format!(
                        "{self:?} regularizer needs interior strategies"
                    )));
                }
                Ok(match self {
                    Regularizer::Kl => pairs.map(|(s, r)| s.ln() - r.ln() + 1.0).collect(),
                    _ => pairs.map(|(s, r)| -r / s).collect(),
                })
            }
        }
    }
}

/// A regularized game: base game, reference profile `σ^r`, weight `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SccpSpec<'g> {
    pub game: &'g MatrixGame,
    pub reference: Profile,
    pub mu: f64,
    pub regularizer: Regularizer,
    /// 1-based position in the SCCP sequence.
    pub index: u64,
}

impl<'g> SccpSpec<'g> {
    pub fn new(
        game: &'g MatrixGame,
        reference: Profile,
        mu: f64,
        regularizer: Regularizer,
    ) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mu must be nonnegative, got {mu}"
            )));
        }
        ensure_len("row reference", game.rows(), reference.p0.len())?;
        ensure_len("column reference", game.cols(), reference.p1.len())?;
        if regularizer.needs_interior()
            && !(reference.p0.is_interior() && reference.p1.is_interior())
        {
            return Err(Error::Boundary(format!(
                "{regularizer:?} reference must be strictly positive"
            )));
        }
        Ok(SccpSpec {
            game,
            reference,
            mu,
            regularizer,
            index: 1,
        })
    }

    /// Transformed loss `g_i + μ ∇φ(σ_i, σ_i^r)`.
    pub fn loss_gradient(&self, player: Player, profile: &Profile) -> Result<Vec<f64>> {
        let mut g = self
            .game
            .loss_gradient(player, profile.get(player.opponent()))?;
        ensure_len("strategy", g.len(), profile.get(player).len())?;
        if self.mu != 0.0 {
            let reg = self
                .regularizer
                .gradient(profile.get(player), self.reference.get(player))?;
            for (gi, ri) in g.iter_mut().zip(reg) {
                *gi += self.mu * ri;
            }
        }
        Ok(g)
    }

    /// `max_{σ'} ½ Σ_i ⟨g_i + μ∇φ, σ_i − σ'_i⟩`, maximized over pure
    /// deviations since the objective is linear in `σ'`.
    pub fn duality_gap(&self, profile: &Profile) -> Result<f64> {
        let mut gap = 0.0;
        for player in Player::BOTH {
            let loss = self.loss_gradient(player, profile)?;
            let min = loss.iter().copied().fold(f64::INFINITY, f64::min);
            gap += profile.get(player).dot(&loss) - min;
        }
        Ok((0.5 * gap).max(0.0))
    }
}

pub fn sccp_loss_gradient(
    spec: &SccpSpec<'_>,
    player: Player,
    profile: &Profile,
) -> Result<Vec<f64>> {
    spec.loss_gradient(player, profile)
}

pub fn sccp_duality_gap(spec: &SccpSpec<'_>, profile: &Profile) -> Result<f64> {
    spec.duality_gap(profile)
}

/// Parameters of a reward-transformation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RtRunConfig {
    pub mu: f64,
    /// `T`: inner iterations per SCCP.
    pub inner_iterations: u64,
    /// `N`: number of SCCPs.
    pub outer_iterations: u64,
    pub alternating: bool,
    /// Defaults to `max(1, T·N / 1000)`.
    #[serde(default)]
    pub eval_every: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    /// When set, each SCCP is solved until its duality gap falls to this
    /// value (capped by `max_inner_iterations`) instead of running `T` steps.
    #[serde(default)]
    pub inner_gap_tolerance: Option<f64>,
    #[serde(default = "default_max_inner")]
    pub max_inner_iterations: u64,
    #[serde(default)]
    pub record_wall_time: bool,
}

fn default_max_inner() -> u64 {
    1_000_000
}

impl RtRunConfig {
    pub fn new(mu: f64, inner_iterations: u64, outer_iterations: u64) -> Self {
        RtRunConfig {
            mu,
            inner_iterations,
            outer_iterations,
            alternating: true,
            eval_every: None,
            seed: 0,
            inner_gap_tolerance: None,
            max_inner_iterations: default_max_inner(),
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mu must be nonnegative, got {}",
                self.mu
            )));
        }
        if let Some(tol) = self.inner_gap_tolerance {
            if !(tol > 0.0) {
                return Err(Error::InvalidConfig(
                    "gap tolerance must be positive".into(),
                ));
            }
        }
        if self.eval_every == Some(0) {
            return Err(Error::InvalidConfig("eval_every must be positive".into()));
        }
        Ok(())
    }

    pub fn total_iterations(&self) -> u64 {
        self.inner_iterations * self.outer_iterations
    }

    pub fn eval_every(&self) -> u64 {
        self.eval_every
            .unwrap_or_else(|| default_eval_every(self.total_iterations()))
    }
}

/// Inner solver of an SCCP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InnerRule {
    RmPlus,
    Mwu {
        learning_rate: f64,
        optimistic: bool,
    },
}

/// Stateful reward-transformation solver for matrix games.
#[derive(Debug, Clone)]
pub struct RtSolver<'g> {
    game: &'g MatrixGame,
    rule: InnerRule,
    regularizer: Regularizer,
    mu: f64,
    alternating: bool,
    regrets: [RegretState; 2],
    last_loss: [Option<Vec<f64>>; 2],
    current: Profile,
    reference: Profile,
    sccp_index: u64,
    inner: u64,
    iteration: u64,
}

impl<'g> RtSolver<'g> {
    /// RTRM+ from the uniform profile with a uniform reference.
    pub fn rtrm_plus(game: &'g MatrixGame, mu: f64, alternating: bool) -> Result<Self> {
        let u = Profile::uniform(game);
        Self::with_start(
            game,
            InnerRule::RmPlus,
            Regularizer::EuclideanBregman,
            mu,
            alternating,
            u.clone(),
            u,
        )
    }

    /// MWU on a regularized game (R-NaD, or OR-NaD when optimistic).
    pub fn rt_mwu(
        game: &'g MatrixGame,
        regularizer: Regularizer,
        mu: f64,
        learning_rate: f64,
        optimistic: bool,
        alternating: bool,
    ) -> Result<Self> {
        let u = Profile::uniform(game);
        let rule = InnerRule::Mwu {
            learning_rate,
            optimistic,
        };
        Self::with_start(game, rule, regularizer, mu, alternating, u.clone(), u)
    }

    /// Explicit start `σ^{1,1}` and reference `σ^{r,1}`. RM+ regrets start at
    /// `Q⁰ = σ^{1,1}`.
    pub fn with_start(
        game: &'g MatrixGame,
        rule: InnerRule,
        regularizer: Regularizer,
        mu: f64,
        alternating: bool,
        start: Profile,
        reference: Profile,
    ) -> Result<Self> {
        SccpSpec::new(game, reference.clone(), mu, regularizer)?;
        ensure_len("row start", game.rows(), start.p0.len())?;
        ensure_len("column start", game.cols(), start.p1.len())?;
        if let InnerRule::Mwu { learning_rate, .. } = rule {
            MinimizerConfig::mwu(learning_rate, false).validate()?;
            if !(start.p0.is_interior() && start.p1.is_interior()) {
                return Err(Error::Boundary(
                    "MWU needs a strictly positive start".into(),
                ));
            }
        }
        if matches!(rule, InnerRule::RmPlus) && regularizer != Regularizer::EuclideanBregman {
            return Err(Error::InvalidConfig(
                "RM+ inner solver requires the Euclidean regularizer".into(),
            ));
        }
        Ok(RtSolver {
            game,
            rule,
            regularizer,
            mu,
            alternating,
            regrets: [
                RegretState::from_strategy(&start.p0),
                RegretState::from_strategy(&start.p1),
            ],
            last_loss: [None, None],
            current: start,
            reference,
            sccp_index: 1,
            inner: 0,
            iteration: 0,
        })
    }

    pub fn current(&self) -> &Profile {
        &self.current
    }

    pub fn reference(&self) -> &Profile {
        &self.reference
    }

    pub fn sccp_index(&self) -> u64 {
        self.sccp_index
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn regrets(&self, player: Player) -> &RegretState {
        &self.regrets[player.index()]
    }

    /// The SCCP currently being solved.
    pub fn sccp(&self) -> SccpSpec<'g> {
        SccpSpec {
            game: self.game,
            reference: self.reference.clone(),
            mu: self.mu,
            regularizer: self.regularizer,
            index: self.sccp_index,
        }
    }

    pub fn duality_gap(&self) -> Result<f64> {
        self.sccp().duality_gap(&self.current)
    }

    fn numerical(&self, e: Error) -> Error {
        match e {
            Error::NonFinite(what) => Error::Numerical {
                iteration: self.iteration + 1,
                detail: format!("non-finite {what}"),
            },
            other => other,
        }
    }

    fn update_player(&mut self, player: Player, against: &Profile) -> Result<()> {
        let spec = SccpSpec {
            game: self.game,
            reference: self.reference.clone(),
            mu: self.mu,
            regularizer: self.regularizer,
            index: self.sccp_index,
        };
        let loss = spec.loss_gradient(player, against)?;
        let i = player.index();
        let next = match self.rule {
            InnerRule::RmPlus => {
                let values: Vec<f64> = loss.iter().map(|l| -l).collect();
                self.regrets[i].rm_plus_update(&values, against.get(player))?
            }
            InnerRule::Mwu {
                learning_rate,
                optimistic,
            } => {
                let prediction = if optimistic {
                    self.last_loss[i].as_deref()
                } else {
                    None
                };
                let next = mwu_step(against.get(player), &loss, learning_rate, prediction)?;
                self.last_loss[i] = Some(loss);
                next
            }
        };
        *self.current.get_mut(player) = next;
        Ok(())
    }

    /// One inner iteration for both players.
    pub fn step(&mut self) -> Result<()> {
        let result = if self.alternating {
            let snapshot = self.current.clone();
            self.update_player(Player::P0, &snapshot).and_then(|()| {
                let fresh = self.current.clone();
                self.update_player(Player::P1, &fresh)
            })
        } else {
            let snapshot = self.current.clone();
            self.update_player(Player::P0, &snapshot)
                .and_then(|()| self.update_player(Player::P1, &snapshot))
        };
        result.map_err(|e| self.numerical(e))?;
        if !self.current.joint().iter().all(|p| p.is_finite()) {
            return Err(Error::Numerical {
                iteration: self.iteration + 1,
                detail: "non-finite strategy".into(),
            });
        }
        self.iteration += 1;
        self.inner += 1;
        Ok(())
    }

    /// Warm start of the next SCCP: `σ^{r,n+1} ← σ^{T+1,n}`, regrets and
    /// current strategies carried over.
    pub fn advance_reference(&mut self) {
        self.reference = self.current.clone();
        self.sccp_index += 1;
        self.inner = 0;
    }

    /// Steps until the SCCP duality gap is at most `tolerance` or
    /// `max_steps` steps were taken. Returns the number of steps.
    pub fn solve_sccp(&mut self, tolerance: f64, max_steps: u64) -> Result<u64> {
        let mut steps = 0;
        while steps < max_steps && self.duality_gap()? > tolerance {
            self.step()?;
            steps += 1;
        }
        Ok(steps)
    }

    fn record(&self, recorder: &mut Recorder) -> Result<()> {
        let exploitability = self.game.exploitability(&self.current)?;
        let gap = self.duality_gap()?;
        recorder.push(self.iteration, self.sccp_index, exploitability, Some(gap));
        Ok(())
    }

    /// Full `N × T` loop (or the gap-threshold variant).
    pub fn run(mut self, config: &RtRunConfig) -> Result<RunOutput<Profile>> {
        config.validate()?;
        let total = config.total_iterations();
        let mut recorder = Recorder::new(config.eval_every(), total, config.record_wall_time);
        if config.outer_iterations == 0
            || (config.inner_iterations == 0 && config.inner_gap_tolerance.is_none())
        {
            self.record(&mut recorder)?;
        }
        for _ in 0..config.outer_iterations {
            match config.inner_gap_tolerance {
                None => {
                    for _ in 0..config.inner_iterations {
                        self.step()?;
                        if recorder.due(self.iteration) {
                            self.record(&mut recorder)?;
                        }
                    }
                }
                Some(tol) => {
                    let mut steps = 0;
                    while steps < config.max_inner_iterations && self.duality_gap()? > tol {
                        self.step()?;
                        steps += 1;
                        if self.iteration.is_multiple_of(recorder_every(config)) {
                            self.record(&mut recorder)?;
                        }
                    }
                    self.record(&mut recorder)?;
                }
            }
            self.advance_reference();
        }
        Ok(RunOutput {
            profile: self.current,
            records: recorder.records,
            flags: Vec::new(),
        })
    }
}

fn recorder_every(config: &RtRunConfig) -> u64 {
    config.eval_every().max(1)
}

/// RTRM+ from the uniform profile and a uniform reference.
pub fn rtrm_plus_run(game: &MatrixGame, config: &RtRunConfig) -> Result<RunOutput<Profile>> {
    RtSolver::rtrm_plus(game, config.mu, config.alternating)?.run(config)
}

/// MWU (or OMWU) on the regularized games, with the same reference schedule
/// as RTRM+.
pub fn rt_mwu_run(
    game: &MatrixGame,
    config: &RtRunConfig,
    regularizer: Regularizer,
    learning_rate: f64,
    optimistic: bool,
) -> Result<RunOutput<Profile>> {
    RtSolver::rt_mwu(
        game,
        regularizer,
        config.mu,
        learning_rate,
        optimistic,
        config.alternating,
    )?
    .run(config)
}

/// Self-play of a single-simplex minimizer on the base game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfPlayConfig {
    pub minimizer: MinimizerConfig,
    pub iterations: u64,
    pub alternating: bool,
    pub averaging: Averaging,
    #[serde(default)]
    pub eval_every: Option<u64>,
    #[serde(default)]
    pub record_wall_time: bool,
}

impl SelfPlayConfig {
    pub fn new(
        minimizer: MinimizerConfig,
        iterations: u64,
        alternating: bool,
        averaging: Averaging,
    ) -> Self {
        SelfPlayConfig {
            minimizer,
            iterations,
            alternating,
            averaging,
            eval_every: None,
            record_wall_time: false,
        }
    }
}

pub const FLAG_AVERAGED_LAST_ITERATE: &str = "averaging applied to a last-iterate algorithm";

struct SelfPlayer {
    config: MinimizerConfig,
    regrets: RegretState,
    last_loss: Option<Vec<f64>>,
    avg: Vec<f64>,
    weight: f64,
}

impl SelfPlayer {
    fn new(config: MinimizerConfig, n: usize) -> Self {
        SelfPlayer {
            config,
            regrets: RegretState::zeros(n),
            last_loss: None,
            avg: vec![0.0; n],
            weight: 0.0,
        }
    }

    fn update(&mut self, loss: Vec<f64>, current: &SimplexVector) -> Result<SimplexVector> {
        let eta = self.config.learning_rate;
        match self.config.kind {
            MinimizerKind::Rm | MinimizerKind::RmPlus => {
                let values: Vec<f64> = loss.iter().map(|l| -l).collect();
                if self.config.kind == MinimizerKind::Rm {
                    self.regrets.rm_update(&values, current)
                } else {
                    self.regrets.rm_plus_update(&values, current)
                }
            }
            MinimizerKind::Mwu | MinimizerKind::Gda => {
                let prediction = if self.config.optimistic {
                    self.last_loss.as_deref()
                } else {
                    None
                };
                let next = if self.config.kind == MinimizerKind::Mwu {
                    mwu_step(current, &loss, eta, prediction)
                } else {
                    gda_step(current, &loss, eta, prediction)
                }?;
                self.last_loss = Some(loss);
                Ok(next)
            }
        }
    }

    fn accumulate(&mut self, strategy: &SimplexVector, weight: f64) {
        for (a, p) in self.avg.iter_mut().zip(strategy.as_slice()) {
            *a += weight * p;
        }
        self.weight += weight;
    }

    fn average(&self) -> SimplexVector {
        SimplexVector::from_weights_or_uniform(self.avg.clone())
    }
}

/// Plain self-play of RM / RM+ / (O)MWU / (O)GDA from the uniform profile.
/// The recorded exploitability is that of the last iterate, or of the
/// averaged strategy when averaging is enabled.
pub fn baseline_selfplay_run(
    game: &MatrixGame,
    config: &SelfPlayConfig,
) -> Result<RunOutput<Profile>> {
    config.minimizer.validate()?;
    if config.eval_every == Some(0) {
        return Err(Error::InvalidConfig("eval_every must be positive".into()));
    }
    let mut flags = Vec::new();
    if config.averaging != Averaging::None && config.minimizer.is_last_iterate() {
        flags.push(FLAG_AVERAGED_LAST_ITERATE.to_string());
    }
    let mut players = [
        SelfPlayer::new(config.minimizer, game.rows()),
        SelfPlayer::new(config.minimizer, game.cols()),
    ];
    let mut current = Profile::uniform(game);
    let every = config
        .eval_every
        .unwrap_or_else(|| default_eval_every(config.iterations));
    let mut recorder = Recorder::new(every, config.iterations, config.record_wall_time);

    let designated = |players: &[SelfPlayer; 2], current: &Profile| match config.averaging {
        Averaging::None => current.clone(),
        _ => Profile::new(players[0].average(), players[1].average()),
    };
    if config.iterations == 0 {
        recorder.push(0, 0, game.exploitability(&current)?, None);
    }
    for t in 1..=config.iterations {
        let weight = config.averaging.weight(t);
        for player in Player::BOTH {
            players[player.index()].accumulate(current.get(player), weight);
        }
        let numerical = |e: Error| match e {
            Error::NonFinite(what) => Error::Numerical {
                iteration: t,
                detail: format!("non-finite {what}"),
            },
            other => other,
        };
        if config.alternating {
            let loss0 = game.loss_gradient(Player::P0, &current.p1)?;
            current.p0 = players[0].update(loss0, &current.p0).map_err(numerical)?;
            let loss1 = game.loss_gradient(Player::P1, &current.p0)?;
            current.p1 = players[1].update(loss1, &current.p1).map_err(numerical)?;
        } else {
            let loss0 = game.loss_gradient(Player::P0, &current.p1)?;
            let loss1 = game.loss_gradient(Player::P1, &current.p0)?;
            let p0 = players[0].update(loss0, &current.p0).map_err(numerical)?;
            let p1 = players[1].update(loss1, &current.p1).map_err(numerical)?;
            current = Profile::new(p0, p1);
        }
        if recorder.due(t) {
            let profile = designated(&players, &current);
            recorder.push(t, 0, game.exploitability(&profile)?, None);
        }
    }
    let profile = if config.iterations == 0 {
        current
    } else {
        designated(&players, &current)
    };
    Ok(RunOutput {
        profile,
        records: recorder.records,
        flags,
    })
}
