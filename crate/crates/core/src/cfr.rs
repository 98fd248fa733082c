//! Counterfactual regret minimization on extensive-form games.
//!
//! Every infoset runs its own simplex minimizer on counterfactual values
//! `q(I,a) = Σ_{h∈I} π_{−i}(h) Σ_z π(ha→z) u_i(z)`. This module provides the
//! classic CFR and CFR+ schemes, their reward-transformed counterpart RTCFR+,
//! and DOGDA, an optimistic proximal method over the sequence-form polytope
//! with the dilated Euclidean distance.
//!
//! RTCFR+ adds to each per-history value the first-order regularization term
//! `μ(σ^r − σ^t)(h,a)` and the reach-weighted terms of all own decision
//! histories below `ha`:
//!
//! ```text
//! q(h,a) = Σ_z π(ha,z) u_i(z) + μ(σ^r − σ^t)(h,a)
//!        + μ Σ_{h'∈C(ha)} Σ_{a'} π(ha,h'a') (σ^r − σ^t)(h',a')
//! ```
//!
//! where `π(ha,h'a')` includes the action `a'` taken at `h'`. All three terms
//! come out of one bottom-up pass.

use serde::{Deserialize, Serialize};

use crate::efg::{exploitability_efg, others_reach, BehaviorProfile, NodeKind, TreeGame};
use crate::error::{ensure_len, Error, Result};
use crate::nfg::{Player, SimplexVector};
use crate::record::{default_eval_every, Recorder, RunOutput};
use crate::rt::RtRunConfig;
use crate::simplex::{simplex_project, Averaging, RegretState};

/// Reach factor applied to the descendant terms of RTCFR+.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RtReach {
    /// Opponent and chance probabilities between `ha` and `h'` count.
    #[default]
    Full,
    /// Only the updating player's own action probabilities count.
    SelfOnly,
}

/// Reusable buffers for tree passes.
#[derive(Debug, Clone, Default)]
struct Scratch {
    others: Vec<f64>,
    value: Vec<f64>,
    rt: Vec<f64>,
    weight: Vec<f64>,
}

fn zeroed(game: &TreeGame, player: Player) -> Vec<Vec<f64>> {
    game.infosets(player)
        .iter()
        .map(|i| vec![0.0; i.num_actions()])
        .collect()
}

/// Fills `q` with counterfactual values of `player`. With a reference
/// profile and `μ > 0` the RTCFR+ terms are included.
fn transformed_values(
    game: &TreeGame,
    profile: &BehaviorProfile,
    player: Player,
    rt: Option<(&BehaviorProfile, f64, RtReach)>,
    scratch: &mut Scratch,
    q: &mut [Vec<f64>],
) {
    others_reach(game, profile, player, &mut scratch.others);
    let n = game.num_nodes();
    scratch.value.clear();
    scratch.value.resize(n, 0.0);
    scratch.rt.clear();
    scratch.rt.resize(n, 0.0);
    for row in q.iter_mut() {
        row.iter_mut().for_each(|x| *x = 0.0);
    }
    let nodes = game.nodes();
    for id in (0..n).rev() {
        let node = &nodes[id];
        match node.kind {
            NodeKind::Terminal { .. } => {
                scratch.value[id] = game.utility(id, player);
            }
            NodeKind::Player { player: p, infoset } if p == player => {
                let sigma = profile.get(player, infoset).as_slice();
                let w = scratch.others[id];
                let qi = &mut q[infoset];
                let (mut v, mut r) = (0.0, 0.0);
                for (a, c) in node.children().enumerate() {
                    let below = scratch.value[c];
                    let mut qa = below;
                    if let Some((reference, mu, _)) = rt {
                        let d = mu * (reference.get(player, infoset)[a] - sigma[a]);
                        let tail = d + scratch.rt[c];
                        qa += tail;
                        r += sigma[a] * tail;
                    }
                    v += sigma[a] * below;
                    qi[a] += w * qa;
                }
                scratch.value[id] = v;
                scratch.rt[id] = r;
            }
            _ => {
                let (mut v, mut r) = (0.0, 0.0);
                let full = !matches!(rt, Some((_, _, RtReach::SelfOnly)));
                for c in node.children() {
                    let p = game.edge_prob(profile, node, c);
                    v += p * scratch.value[c];
                    r += if full { p } else { 1.0 } * scratch.rt[c];
                }
                scratch.value[id] = v;
                scratch.rt[id] = r;
            }
        }
    }
}

/// Counterfactual values `q(I,·)` of every infoset of `player`.
pub fn counterfactual_values(
    game: &TreeGame,
    profile: &BehaviorProfile,
    player: Player,
) -> Result<Vec<Vec<f64>>> {
    profile.check(game)?;
    let mut q = zeroed(game, player);
    transformed_values(game, profile, player, None, &mut Scratch::default(), &mut q);
    Ok(q)
}

/// RTCFR+ values `q(I,·)` of `player` for the SCCP anchored at `reference`.
pub fn rt_counterfactual_values(
    game: &TreeGame,
    profile: &BehaviorProfile,
    reference: &BehaviorProfile,
    mu: f64,
    rt_reach: RtReach,
    player: Player,
) -> Result<Vec<Vec<f64>>> {
    profile.check(game)?;
    reference.check(game)?;
    let mut q = zeroed(game, player);
    transformed_values(
        game,
        profile,
        player,
        Some((reference, mu, rt_reach)),
        &mut Scratch::default(),
        &mut q,
    );
    Ok(q)
}

/// Realization probabilities `x(Ia)` of every sequence of `player`.
pub fn realization_plan(game: &TreeGame, profile: &BehaviorProfile, player: Player) -> Vec<f64> {
    let mut x = vec![0.0; game.num_sequences(player)];
    for &i in game.bottom_up_infosets(player).iter().rev() {
        let info = game.infoset(player, i);
        let parent = info.parent_sequence.map_or(1.0, |s| x[s]);
        for (a, p) in profile.get(player, i).as_slice().iter().enumerate() {
            x[info.sequence_offset + a] = parent * p;
        }
    }
    x
}

/// Regret-matching flavour and averaging of the CFR family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfrVariant {
    /// RM+ instead of RM at every infoset.
    pub plus: bool,
    pub alternating: bool,
    pub averaging: Averaging,
}

impl CfrVariant {
    pub fn cfr() -> Self {
        CfrVariant {
            plus: false,
            alternating: false,
            averaging: Averaging::Uniform,
        }
    }

    pub fn cfr_plus() -> Self {
        CfrVariant {
            plus: true,
            alternating: true,
            averaging: Averaging::Linear,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CfrState {
    pub variant: CfrVariant,
    regrets: [Vec<RegretState>; 2],
    current: BehaviorProfile,
    avg_num: [Vec<Vec<f64>>; 2],
    iteration: u64,
    q: [Vec<Vec<f64>>; 2],
    scratch: Scratch,
}

impl CfrState {
    /// Uniform start with zero regrets.
    pub fn new(game: &TreeGame, variant: CfrVariant) -> Self {
        let regrets = Player::BOTH.map(|p| {
            game.infosets(p)
                .iter()
                .map(|i| RegretState::zeros(i.num_actions()))
                .collect()
        });
        Self::build(game, variant, regrets)
    }

    /// Uniform start with `Q⁰ = σ¹`, the initialization used by RTCFR+.
    pub fn with_regrets_from_strategy(game: &TreeGame, variant: CfrVariant) -> Self {
        let regrets = Player::BOTH.map(|p| {
            game.infosets(p)
                .iter()
                .map(|i| RegretState::from_strategy(&SimplexVector::uniform(i.num_actions())))
                .collect()
        });
        Self::build(game, variant, regrets)
    }

    fn build(game: &TreeGame, variant: CfrVariant, regrets: [Vec<RegretState>; 2]) -> Self {
        CfrState {
            variant,
            regrets,
            current: BehaviorProfile::uniform(game),
            avg_num: Player::BOTH.map(|p| zeroed(game, p)),
            iteration: 0,
            q: Player::BOTH.map(|p| zeroed(game, p)),
            scratch: Scratch::default(),
        }
    }

    pub fn current(&self) -> &BehaviorProfile {
        &self.current
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn regrets(&self, player: Player) -> &[RegretState] {
        &self.regrets[player.index()]
    }

    /// Average strategy; infosets that were never reached play uniformly.
    pub fn average(&self) -> BehaviorProfile {
        let mut out = self.current.clone();
        for p in Player::BOTH {
            let strategies = self.avg_num[p.index()]
                .iter()
                .map(|w| SimplexVector::from_weights_or_uniform(w.clone()))
                .collect();
            out.replace_player(p, strategies)
                .expect("average has the profile's shape");
        }
        out
    }

    /// The profile a run reports: the average when averaging is enabled.
    pub fn output(&self) -> BehaviorProfile {
        match self.variant.averaging {
            Averaging::None => self.current.clone(),
            _ => self.average(),
        }
    }

    fn accumulate(&mut self, game: &TreeGame, player: Player, weight: f64) {
        if weight == 0.0 {
            return;
        }
        let own = own_reach(game, &self.current, player, &mut self.scratch.weight);
        for (i, num) in self.avg_num[player.index()].iter_mut().enumerate() {
            let w = weight * own[i];
            for (n, s) in num.iter_mut().zip(self.current.get(player, i).as_slice()) {
                *n += w * s;
            }
        }
    }

    fn compute_values(&mut self, game: &TreeGame, player: Player) {
        let q = &mut self.q[player.index()];
        transformed_values(game, &self.current, player, None, &mut self.scratch, q);
    }

    fn apply_values(&mut self, player: Player) -> Result<()> {
        let p = player.index();
        let mut next = Vec::with_capacity(self.regrets[p].len());
        for ((state, q), sigma) in self.regrets[p]
            .iter_mut()
            .zip(&self.q[p])
            .zip(self.current.player(player))
        {
            next.push(if self.variant.plus {
                state.rm_plus_update(q, sigma)
            } else {
                state.rm_update(q, sigma)
            }?);
        }
        self.current.replace_player(player, next)
    }
}

/// Own reach `π_i(I)` per infoset of `player`.
fn own_reach<'a>(
    game: &TreeGame,
    profile: &BehaviorProfile,
    player: Player,
    buf: &'a mut Vec<f64>,
) -> &'a [f64] {
    let x = realization_plan(game, profile, player);
    buf.clear();
    buf.extend(
        game.infosets(player)
            .iter()
            .map(|info| info.parent_sequence.map_or(1.0, |s| x[s])),
    );
    buf
}

fn numerical(iteration: u64, e: Error) -> Error {
    match e {
        Error::NonFinite(what) => Error::Numerical {
            iteration,
            detail: format!("non-finite {what}"),
        },
        other => other,
    }
}

/// One CFR iteration in place: average accumulation from the current
/// strategies, counterfactual values, and a local regret-matching step at
/// every infoset.
pub fn cfr_iteration(game: &TreeGame, state: &mut CfrState) -> Result<()> {
    state.current.check(game)?;
    let t = state.iteration + 1;
    let weight = state.variant.averaging.weight(t);
    let step = |state: &mut CfrState| -> Result<()> {
        if state.variant.alternating {
            for player in Player::BOTH {
                state.accumulate(game, player, weight);
                state.compute_values(game, player);
                state.apply_values(player)?;
            }
        } else {
            for player in Player::BOTH {
                state.accumulate(game, player, weight);
                state.compute_values(game, player);
            }
            for player in Player::BOTH {
                state.apply_values(player)?;
            }
        }
        Ok(())
    };
    step(state).map_err(|e| numerical(t, e))?;
    state.iteration = t;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfrRunConfig {
    pub variant: CfrVariant,
    pub iterations: u64,
    #[serde(default)]
    pub eval_every: Option<u64>,
    /// Start from `Q⁰ = σ¹` instead of zero regrets.
    #[serde(default)]
    pub regrets_from_strategy: bool,
    #[serde(default)]
    pub record_wall_time: bool,
}

impl CfrRunConfig {
    pub fn new(variant: CfrVariant, iterations: u64) -> Self {
        CfrRunConfig {
            variant,
            iterations,
            eval_every: None,
            regrets_from_strategy: false,
            record_wall_time: false,
        }
    }
}

/// CFR or CFR+ from the uniform profile. Reports the average strategy
/// unless averaging is disabled.
pub fn cfr_run(game: &TreeGame, config: &CfrRunConfig) -> Result<RunOutput<BehaviorProfile>> {
    if config.eval_every == Some(0) {
        return Err(Error::InvalidConfig("eval_every must be positive".into()));
    }
    let mut state = if config.regrets_from_strategy {
        CfrState::with_regrets_from_strategy(game, config.variant)
    } else {
        CfrState::new(game, config.variant)
    };
    let every = config
        .eval_every
        .unwrap_or_else(|| default_eval_every(config.iterations));
    let mut recorder = Recorder::new(every, config.iterations, config.record_wall_time);
    if config.iterations == 0 {
        recorder.push(0, 0, exploitability_efg(game, state.current())?, None);
    }
    for t in 1..=config.iterations {
        cfr_iteration(game, &mut state)?;
        if recorder.due(t) {
            recorder.push(t, 0, exploitability_efg(game, &state.output())?, None);
        }
    }
    Ok(RunOutput {
        profile: state.output(),
        records: recorder.records,
        flags: Vec::new(),
    })
}

/// CFR+ machinery plus the SCCP schedule of RTCFR+.
#[derive(Debug, Clone)]
pub struct RtcfrState {
    cfr: CfrState,
    reference: BehaviorProfile,
    pub mu: f64,
    pub rt_reach: RtReach,
    /// `T`: inner iterations per SCCP.
    pub inner_iterations: u64,
    inner: u64,
    sccp_index: u64,
}

impl RtcfrState {
    /// Uniform start and reference, `Q⁰ = σ¹`, alternating RM+ updates.
    pub fn new(game: &TreeGame, mu: f64, inner_iterations: u64, rt_reach: RtReach) -> Result<Self> {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "mu must be nonnegative, got {mu}"
            )));
        }
        if inner_iterations == 0 {
            return Err(Error::InvalidConfig(
                "inner_iterations must be positive".into(),
            ));
        }
        let variant = CfrVariant {
            plus: true,
            alternating: true,
            averaging: Averaging::None,
        };
        Ok(RtcfrState {
            cfr: CfrState::with_regrets_from_strategy(game, variant),
            reference: BehaviorProfile::uniform(game),
            mu,
            rt_reach,
            inner_iterations,
            inner: 0,
            sccp_index: 1,
        })
    }

    pub fn current(&self) -> &BehaviorProfile {
        self.cfr.current()
    }

    pub fn reference(&self) -> &BehaviorProfile {
        &self.reference
    }

    pub fn regrets(&self, player: Player) -> &[RegretState] {
        self.cfr.regrets(player)
    }

    pub fn iteration(&self) -> u64 {
        self.cfr.iteration
    }

    pub fn sccp_index(&self) -> u64 {
        self.sccp_index
    }

    /// Inner iterations taken on the current SCCP.
    pub fn inner(&self) -> u64 {
        self.inner
    }
}

/// One alternating RTCFR+ iteration. After `T` inner iterations the
/// reference moves to the current profile and the next SCCP starts with the
/// accumulated regrets.
pub fn rtcfr_plus_iteration(game: &TreeGame, state: &mut RtcfrState) -> Result<()> {
    state.cfr.current.check(game)?;
    state.reference.check(game)?;
    let t = state.cfr.iteration + 1;
    let rt = Some((&state.reference, state.mu, state.rt_reach));
    for player in Player::BOTH {
        let cfr = &mut state.cfr;
        let q = &mut cfr.q[player.index()];
        transformed_values(game, &cfr.current, player, rt, &mut cfr.scratch, q);
        cfr.apply_values(player).map_err(|e| numerical(t, e))?;
    }
    state.cfr.iteration = t;
    state.inner += 1;
    if state.inner == state.inner_iterations {
        state.reference = state.cfr.current.clone();
        state.inner = 0;
        state.sccp_index += 1;
    }
    Ok(())
}

/// Full `N × T` RTCFR+ loop; returns the last iterate.
pub fn rtcfr_plus_run(
    game: &TreeGame,
    config: &RtRunConfig,
    rt_reach: RtReach,
) -> Result<RunOutput<BehaviorProfile>> {
    config.validate()?;
    if config.inner_gap_tolerance.is_some() {
        return Err(Error::InvalidConfig(
            "gap-threshold schedule is only available on matrix games".into(),
        ));
    }
    if !config.alternating {
        return Err(Error::InvalidConfig(
            "RTCFR+ uses alternating updates".into(),
        ));
    }
    let total = config.total_iterations();
    let mut recorder = Recorder::new(config.eval_every(), total, config.record_wall_time);
    if total == 0 {
        recorder.push(
            0,
            1,
            exploitability_efg(game, &BehaviorProfile::uniform(game))?,
            None,
        );
        return Ok(RunOutput {
            profile: BehaviorProfile::uniform(game),
            records: recorder.records,
            flags: Vec::new(),
        });
    }
    let mut state = RtcfrState::new(game, config.mu, config.inner_iterations, rt_reach)?;
    for k in 1..=total {
        // The SCCP index belongs to the iteration just taken.
        let n = state.sccp_index;
        rtcfr_plus_iteration(game, &mut state)?;
        if recorder.due(k) {
            recorder.push(k, n, exploitability_efg(game, state.current())?, None);
        }
    }
    Ok(RunOutput {
        profile: state.current().clone(),
        records: recorder.records,
        flags: Vec::new(),
    })
}

/// Per-infoset weights `β_I` of the dilated Euclidean distance
/// `φ(x) = Σ_I β_I/2 · x_{p(I)} ‖x_I / x_{p(I)}‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilatedNorm {
    weights: [Vec<f64>; 2],
}

impl DilatedNorm {
    pub fn uniform(game: &TreeGame) -> Self {
        DilatedNorm {
            weights: Player::BOTH.map(|p| vec![1.0; game.num_infosets(p)]),
        }
    }

    pub fn new(game: &TreeGame, weights: [Vec<f64>; 2]) -> Result<Self> {
        for p in Player::BOTH {
            ensure_len(
                "dilated norm weights",
                game.num_infosets(p),
                weights[p.index()].len(),
            )?;
            if let Some(bad) = weights[p.index()]
                .iter()
                .find(|b| !(**b > 0.0 && b.is_finite()))
            {
                return Err(Error::InvalidConfig(format!(
                    "dilated norm weight must be positive, got {bad}"
                )));
            }
        }
        Ok(DilatedNorm { weights })
    }

    pub fn weight(&self, player: Player, infoset: usize) -> f64 {
        self.weights[player.index()][infoset]
    }
}

/// Sequence-form loss `ℓ_i(Ia) = −Σ_{z: last_i(z)=Ia} π_{−i}(z) u_i(z)`.
pub fn sequence_loss(
    game: &TreeGame,
    profile: &BehaviorProfile,
    player: Player,
) -> Result<Vec<f64>> {
    profile.check(game)?;
    let mut others = Vec::new();
    others_reach(game, profile, player, &mut others);
    Ok(sequence_loss_with(game, player, &others))
}

fn sequence_loss_with(game: &TreeGame, player: Player, others: &[f64]) -> Vec<f64> {
    let mut loss = vec![0.0; game.num_sequences(player)];
    for &z in game.terminals() {
        if let Some(seq) = game.node(z).last_sequence[player.index()] {
            loss[seq] -= others[z] * game.utility(z, player);
        }
    }
    loss
}

#[derive(Debug, Clone)]
pub struct DogdaState {
    current: BehaviorProfile,
    last_loss: [Option<Vec<f64>>; 2],
    pub norm: DilatedNorm,
    pub learning_rate: f64,
    iteration: u64,
}

impl DogdaState {
    pub fn new(game: &TreeGame, norm: DilatedNorm, learning_rate: f64) -> Result<Self> {
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be nonnegative, got {learning_rate}"
            )));
        }
        DilatedNorm::new(game, norm.weights.clone())?;
        Ok(DogdaState {
            current: BehaviorProfile::uniform(game),
            last_loss: [None, None],
            norm,
            learning_rate,
            iteration: 0,
        })
    }

    pub fn with_profile(mut self, game: &TreeGame, profile: BehaviorProfile) -> Result<Self> {
        profile.check(game)?;
        self.current = profile;
        Ok(self)
    }

    pub fn current(&self) -> &BehaviorProfile {
        &self.current
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }
}

/// `argmin_x ⟨η·eff, x⟩ + D_φ(x, x̂)` over `player`'s treeplex, solved bottom-up
/// with one simplex projection per infoset.
fn dilated_prox(
    game: &TreeGame,
    player: Player,
    center: &BehaviorProfile,
    norm: &DilatedNorm,
    scaled_loss: &[f64],
) -> Result<Vec<SimplexVector>> {
    let mut next: Vec<Option<SimplexVector>> = vec![None; game.num_infosets(player)];
    let mut value = vec![0.0; game.num_infosets(player)];
    for &i in game.bottom_up_infosets(player) {
        let info = game.infoset(player, i);
        let beta = norm.weight(player, i);
        let y = center.get(player, i).as_slice();
        let c: Vec<f64> = (0..info.num_actions())
            .map(|a| {
                let seq = info.sequence_offset + a;
                let mut c = scaled_loss[seq] - beta * y[a];
                for &child in game.sequence_children(player, seq) {
                    let yc = center.get(player, child).as_slice();
                    let sq: f64 = yc.iter().map(|v| v * v).sum();
                    c += norm.weight(player, child) / 2.0 * sq + value[child];
                }
                c
            })
            .collect();
        let target: Vec<f64> = c.iter().map(|x| -x / beta).collect();
        let star = simplex_project(&target)?;
        let s = star.as_slice();
        value[i] = c.iter().zip(s).map(|(ci, si)| ci * si).sum::<f64>()
            + beta / 2.0 * s.iter().map(|v| v * v).sum::<f64>();
        next[i] = Some(star);
    }
    Ok(next
        .into_iter()
        .map(|s| s.expect("every infoset visited"))
        .collect())
}

/// One simultaneous optimistic step for both players with effective loss
/// `2ℓ_t − ℓ_{t−1}` (`ℓ_t` on the first step).
pub fn dogda_iteration(game: &TreeGame, state: &mut DogdaState) -> Result<()> {
    state.current.check(game)?;
    let t = state.iteration + 1;
    let mut others = Vec::new();
    let mut updates = Vec::with_capacity(2);
    for player in Player::BOTH {
        others_reach(game, &state.current, player, &mut others);
        let loss = sequence_loss_with(game, player, &others);
        let eta = state.learning_rate;
        let scaled: Vec<f64> = match &state.last_loss[player.index()] {
            Some(prev) => loss
                .iter()
                .zip(prev)
                .map(|(l, p)| eta * (2.0 * l - p))
                .collect(),
            None => loss.iter().map(|l| eta * l).collect(),
        };
        let next = dilated_prox(game, player, &state.current, &state.norm, &scaled)
            .map_err(|e| numerical(t, e))?;
        state.last_loss[player.index()] = Some(loss);
        updates.push(next);
    }
    for (player, next) in Player::BOTH.into_iter().zip(updates) {
        state.current.replace_player(player, next)?;
    }
    state.iteration = t;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DogdaRunConfig {
    pub learning_rate: f64,
    pub iterations: u64,
    #[serde(default)]
    pub eval_every: Option<u64>,
    #[serde(default)]
    pub record_wall_time: bool,
}

/// DOGDA from the uniform profile; returns the last iterate.
pub fn dogda_run(
    game: &TreeGame,
    norm: &DilatedNorm,
    config: &DogdaRunConfig,
) -> Result<RunOutput<BehaviorProfile>> {
    if !(config.learning_rate > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be positive, got {}",
            config.learning_rate
        )));
    }
    if config.eval_every == Some(0) {
        return Err(Error::InvalidConfig("eval_every must be positive".into()));
    }
    let mut state = DogdaState::new(game, norm.clone(), config.learning_rate)?;
    let every = config
        .eval_every
        .unwrap_or_else(|| default_eval_every(config.iterations));
    let mut recorder = Recorder::new(every, config.iterations, config.record_wall_time);
    if config.iterations == 0 {
        recorder.push(0, 0, exploitability_efg(game, state.current())?, None);
    }
    for t in 1..=config.iterations {
        dogda_iteration(game, &mut state)?;
        if recorder.due(t) {
            recorder.push(t, 0, exploitability_efg(game, state.current())?, None);
        }
    }
    Ok(RunOutput {
        profile: state.current,
        records: recorder.records,
        flags: Vec::new(),
    })
}
