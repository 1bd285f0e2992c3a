use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use deckscan::env::Action;
use deckscan::ppo::{build_networks, collect_rollout, compute_returns_advantages, update, Optimizers, PpoConfig, Runner};
use deckscan::rng::stream;
use deckscan_bench::oracle_env;

fn env_step(c: &mut Criterion) {
    let mut env = oracle_env(3);
    let moves = [Action::Right, Action::Up, Action::Left, Action::Down];
    let mut i = 0;
    c.bench_function("env_step", |b| {
        b.iter(|| {
            if env.state().done {
                env.reset().unwrap();
            }
            i = (i + 1) % moves.len();
            black_box(env.step(moves[i]).unwrap())
        })
    });
}

fn ppo_update(c: &mut Criterion) {
    let cfg = PpoConfig { rollout_len: 2048, minibatch_size: 256, epochs: 1, learning_rate: 3e-4, ..Default::default() };
    let net = build_networks(&cfg).unwrap();
    let mut runner = Runner::new(oracle_env(4));
    let (mut buf, _) = collect_rollout(&mut runner, &net, cfg.rollout_len, cfg.buffer_capacity, &mut stream(5, &[])).unwrap();
    compute_returns_advantages(&mut buf, &net, cfg.gamma, true).unwrap();
    let mut group = c.benchmark_group("ppo");
    group.sample_size(10);
    group.bench_function("update_2048x256_one_epoch", |b| {
        b.iter_batched(
            || (net.clone(), Optimizers::new(&net, cfg.learning_rate)),
            |(mut n, mut opt)| update(&buf, &mut n, &mut opt, &cfg, &mut stream(6, &[])).unwrap(),
            BatchSize::LargeInput,
        )
    });
    group.finish();
}

criterion_group!(benches, env_step, ppo_update);
criterion_main!(benches);
