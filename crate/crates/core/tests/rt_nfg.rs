use equilibrate::games::{
    matching_pennies, random_nfg, random_simplex, rock_paper_scissors, seeded_rng,
};
use equilibrate::nfg::nash_distance;
use equilibrate::record::to_csv_string;
use equilibrate::rt::{
    baseline_selfplay_run, rtrm_plus_run, InnerRule, Regularizer, RtRunConfig, RtSolver, SccpSpec,
    SelfPlayConfig,
};
use equilibrate::simplex::{Averaging, MinimizerConfig};
use equilibrate::{MatrixGame, Player, Profile, SimplexVector};

fn sv(v: &[f64]) -> SimplexVector {
    SimplexVector::new(v.to_vec()).unwrap()
}

fn off_center(game: &MatrixGame) -> Profile {
    let skew = |n: usize| {
        let w: Vec<f64> = (0..n).map(|i| 1.0 + 3.0 * i as f64).collect();
        SimplexVector::from_weights(w).unwrap()
    };
    Profile::new(skew(game.rows()), skew(game.cols()))
}

/// SCCP saddle point of a 2×2 game with the Euclidean regularizer.
///
/// For fixed `x` the objective is a concave quadratic in `y`, maximized in
/// closed form on `[0, 1]`; the resulting envelope is convex in `x` and is
/// minimized by a grid search refined by bisection on its slope.
fn saddle_2x2(game: &MatrixGame, reference: &Profile, mu: f64) -> Profile {
    let a = |i, j| game.payoff(i, j);
    let (r0, r1) = (reference.p0[0], reference.p1[0]);
    let f = |x: f64, y: f64| {
        let u = x * y * a(0, 0)
            + x * (1.0 - y) * a(0, 1)
            + (1.0 - x) * y * a(1, 0)
            + (1.0 - x) * (1.0 - y) * a(1, 1);
        // ½‖σ − σ^r‖² over two coordinates equals (σ(0) − σ^r(0))².
        u + mu * (x - r0).powi(2) - mu * (y - r1).powi(2)
    };
    let best_y = |x: f64| {
        // ∂f/∂y = c − 2μ(y − r1), with c the payoff slope in y.
        let c = x * (a(0, 0) - a(0, 1)) + (1.0 - x) * (a(1, 0) - a(1, 1));
        (r1 + c / (2.0 * mu)).clamp(0.0, 1.0)
    };
    let envelope = |x: f64| f(x, best_y(x));
    // Danskin: the envelope's slope is ∂f/∂x at the inner maximizer.
    let slope = |x: f64| {
        let y = best_y(x);
        y * (a(0, 0) - a(1, 0)) + (1.0 - y) * (a(0, 1) - a(1, 1)) + 2.0 * mu * (x - r0)
    };
    let mut best = 0.0;
    for i in 0..=1000 {
        let x = i as f64 / 1000.0;
        if envelope(x) < envelope(best) {
            best = x;
        }
    }
    let (mut lo, mut hi) = ((best - 1e-3f64).max(0.0), (best + 1e-3f64).min(1.0));
    if slope(lo) >= 0.0 {
        hi = lo;
    } else if slope(hi) <= 0.0 {
        lo = hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let y = best_y(x);
    Profile::new(sv(&[x, 1.0 - x]), sv(&[y, 1.0 - y]))
}

fn l2(a: &SimplexVector, b: &SimplexVector) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn grid_oracle_saddle_has_zero_gap() {
    let game = MatrixGame::from_rows(vec![vec![0.6, -0.9], vec![-0.4, 0.3]]).unwrap();
    let reference = Profile::new(sv(&[0.8, 0.2]), sv(&[0.3, 0.7]));
    for mu in [0.1, 0.5, 2.0] {
        let star = saddle_2x2(&game, &reference, mu);
        let spec =
            SccpSpec::new(&game, reference.clone(), mu, Regularizer::EuclideanBregman).unwrap();
        let gap = spec.duality_gap(&star).unwrap();
        assert!(gap < 1e-12, "{gap}");
    }
}

#[test]
fn reference_distance_to_equilibrium_decreases() {
    for (game, ne) in [
        (matching_pennies(), Profile::uniform(&matching_pennies())),
        (
            rock_paper_scissors(),
            Profile::uniform(&rock_paper_scissors()),
        ),
    ] {
        let start = off_center(&game);
        let mut solver = RtSolver::with_start(
            &game,
            InnerRule::RmPlus,
            Regularizer::EuclideanBregman,
            0.5,
            true,
            start.clone(),
            start,
        )
        .unwrap();
        let mut distances =
            vec![nash_distance(solver.reference(), std::slice::from_ref(&ne)).unwrap()];
        for n in 1..=200 {
            solver.solve_sccp(1e-10, 1_000_000).unwrap();
            assert!(solver.duality_gap().unwrap() <= 1e-10);
            solver.advance_reference();
            let d = nash_distance(solver.reference(), std::slice::from_ref(&ne)).unwrap();
            let prev = *distances.last().unwrap();
            if prev >= 1e-9 {
                assert!(d < prev, "SCCP {n}: {d} !< {prev}");
            }
            distances.push(d);
        }
        assert!(*distances.last().unwrap() < 1e-9);
        assert!(game.exploitability(solver.reference()).unwrap() <= 1e-6);
    }
}

#[test]
fn exploitability_bound_along_iterates() {
    let game = MatrixGame::from_rows(vec![vec![0.6, -0.9], vec![-0.4, 0.3]]).unwrap();
    let col_norm = |j| (game.payoff(0, j).powi(2) + game.payoff(1, j).powi(2)).sqrt();
    let row_norm = |i| (game.payoff(i, 0).powi(2) + game.payoff(i, 1).powi(2)).sqrt();
    let lipschitz = col_norm(0)
        .max(col_norm(1))
        .max(row_norm(0))
        .max(row_norm(1));
    let mu = 0.5;
    let start = Profile::new(sv(&[0.9, 0.1]), sv(&[0.15, 0.85]));
    let mut solver = RtSolver::with_start(
        &game,
        InnerRule::RmPlus,
        Regularizer::EuclideanBregman,
        mu,
        true,
        start.clone(),
        start,
    )
    .unwrap();
    for _ in 0..30 {
        let star = saddle_2x2(&game, solver.reference(), mu);
        let base = game.exploitability(&star).unwrap();
        for _ in 0..20 {
            solver.step().unwrap();
            let sigma = solver.current();
            let bound =
                base + 0.5 * lipschitz * (l2(&sigma.p0, &star.p0) + l2(&sigma.p1, &star.p1));
            assert!(game.exploitability(sigma).unwrap() <= bound + 1e-6);
        }
        solver.advance_reference();
    }
}

#[test]
fn sccp_gap_decreases_monotonically() {
    let game = random_nfg(3, 3, 7).unwrap();
    let mut rng = seeded_rng(7);
    let reference = Profile::new(random_simplex(&mut rng, 3), random_simplex(&mut rng, 3));
    let mut solver = RtSolver::with_start(
        &game,
        InnerRule::RmPlus,
        Regularizer::EuclideanBregman,
        1.0,
        true,
        Profile::uniform(&game),
        reference,
    )
    .unwrap();
    let mut prev = f64::INFINITY;
    for t in 1..=2000 {
        solver.step().unwrap();
        let gap = solver.duality_gap().unwrap();
        if t > 100 {
            assert!(gap <= prev + 1e-9, "iteration {t}: {gap} > {prev}");
        }
        prev = gap;
    }
    assert!(prev < 1e-10);
}

#[test]
fn rtrm_plus_beats_rm_plus_average_on_seed_zero() {
    let game = random_nfg(5, 5, 0).unwrap();
    let rt = rtrm_plus_run(&game, &RtRunConfig::new(0.1, 50, 40)).unwrap();
    let rm = baseline_selfplay_run(
        &game,
        &SelfPlayConfig::new(MinimizerConfig::rm_plus(), 2000, true, Averaging::Linear),
    )
    .unwrap();
    let (a, b) = (
        rt.final_exploitability().unwrap(),
        rm.final_exploitability().unwrap(),
    );
    assert!(a < b, "{a} vs {b}");
}

#[test]
fn plain_mwu_through_rt_runner() {
    let game = matching_pennies();
    let start = off_center(&game);
    let mut solver = RtSolver::with_start(
        &game,
        InnerRule::Mwu {
            learning_rate: 0.1,
            optimistic: false,
        },
        Regularizer::Kl,
        0.0,
        true,
        start.clone(),
        Profile::uniform(&game),
    )
    .unwrap();
    let mut sum = [vec![0.0; 2], vec![0.0; 2]];
    let mut checkpoints = Vec::new();
    for t in 1..=5000 {
        solver.step().unwrap();
        for p in Player::BOTH {
            for (s, x) in sum[p.index()]
                .iter_mut()
                .zip(solver.current().get(p).as_slice())
            {
                *s += x;
            }
        }
        if [50, 500, 5000].contains(&t) {
            let avg = Profile::new(
                SimplexVector::from_weights(sum[0].clone()).unwrap(),
                SimplexVector::from_weights(sum[1].clone()).unwrap(),
            );
            checkpoints.push(game.exploitability(&avg).unwrap());
        }
    }
    assert!(
        checkpoints.windows(2).all(|w| w[1] < w[0]),
        "{checkpoints:?}"
    );
}

#[test]
fn records_are_deterministic() {
    let game = random_nfg(4, 6, 3).unwrap();
    let cfg = RtRunConfig::new(0.2, 20, 30);
    let a = to_csv_string(&rtrm_plus_run(&game, &cfg).unwrap().records);
    let b = to_csv_string(&rtrm_plus_run(&game, &cfg).unwrap().records);
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 1 + 600);
}
