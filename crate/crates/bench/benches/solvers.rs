use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use equilibrate::cfr::{
    cfr_iteration, dogda_iteration, rtcfr_plus_iteration, CfrState, CfrVariant, DilatedNorm,
    DogdaState, RtReach, RtcfrState,
};
use equilibrate::efg::exploitability_efg;
use equilibrate::games::{kuhn_poker, leduc_poker, random_nfg};
use equilibrate::rt::{rtrm_plus_run, RtRunConfig};
use equilibrate::{BehaviorProfile, Profile};

fn matrix(c: &mut Criterion) {
    let game = random_nfg(50, 50, 1).unwrap();
    let profile = Profile::uniform(&game);
    c.bench_function("nfg_exploitability_50x50", |b| {
        b.iter(|| game.exploitability(black_box(&profile)).unwrap())
    });

    let small = random_nfg(5, 5, 0).unwrap();
    let config = RtRunConfig::new(0.1, 50, 40);
    c.bench_function("rtrm_plus_5x5_2000_iterations", |b| {
        b.iter(|| rtrm_plus_run(black_box(&small), &config).unwrap())
    });
}

fn trees(c: &mut Criterion) {
    let kuhn = kuhn_poker();
    let leduc = leduc_poker();
    let uniform = BehaviorProfile::uniform(&leduc);
    c.bench_function("leduc_exploitability", |b| {
        b.iter(|| exploitability_efg(&leduc, black_box(&uniform)).unwrap())
    });

    for (name, game) in [("kuhn", &kuhn), ("leduc", &leduc)] {
        c.bench_function(&format!("cfr_plus_iteration_{name}"), |b| {
            b.iter_batched_ref(
                || CfrState::new(game, CfrVariant::cfr_plus()),
                |state| cfr_iteration(game, state).unwrap(),
                BatchSize::SmallInput,
            )
        });
        c.bench_function(&format!("rtcfr_plus_iteration_{name}"), |b| {
            b.iter_batched_ref(
                || RtcfrState::new(game, 0.5, 5, RtReach::Full).unwrap(),
                |state| rtcfr_plus_iteration(game, state).unwrap(),
                BatchSize::SmallInput,
            )
        });
        c.bench_function(&format!("dogda_iteration_{name}"), |b| {
            b.iter_batched_ref(
                || DogdaState::new(game, DilatedNorm::uniform(game), 0.1).unwrap(),
                |state| dogda_iteration(game, state).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
}

criterion_group!(benches, matrix, trees);
criterion_main!(benches);
