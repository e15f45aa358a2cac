use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use num_bigint::BigUint;

use chebyshev_race::exec::Exec;
use chebyshev_race::field::FieldModel;
use chebyshev_race::gaussian::{mvn_cdf, MvnOptions};
use chebyshev_race::primes::next_prime_1_mod_4;
use chebyshev_race::race::{gamma_matrix, RaceSpec};
use chebyshev_race::simulator::{sample_mu, SimConfig};
use chebyshev_race::zeros::{Tail, ZeroArchive, ZeroSumMode};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn mvn(c: &mut Criterion) {
    let mut g = c.benchmark_group("mvn_qmc_r5");
    let sigma = gamma_matrix(5);
    let x = [0.1, -0.2, 0.3, 0.0, 0.05];
    for (name, exec) in POLICIES {
        let opts = MvnOptions { exec, force_mc: true, ..MvnOptions::with_seed(1) };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mvn_cdf(&x, &sigma, &opts).unwrap())
        });
    }
    g.finish();
}

fn zero_scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("zero_scan");
    g.sample_size(10);
    let f = FieldModel::multiquadratic_u64(&[5, 13]).unwrap();
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| ZeroArchive::compute(&f, 40.0, exec).unwrap())
        });
    }
    g.finish();
}

fn simulator(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulator");
    g.sample_size(10);
    let f = FieldModel::multiquadratic_u64(&[5, 13]).unwrap();
    let archive = ZeroArchive::compute(&f, 40.0, Exec::Parallel).unwrap();
    let classes = f.group().elements().take(3).collect();
    let spec = RaceSpec::new(f.clone(), classes, ZeroSumMode::ZeroData { tail: Tail::None }, Some(&archive)).unwrap();
    for (name, exec) in POLICIES {
        let cfg = SimConfig { exec, ..SimConfig::new(40.0, 50_000, 7) };
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample_mu(&spec, &archive, &cfg).unwrap())
        });
    }
    g.finish();
}

fn prime_search(c: &mut Criterion) {
    let mut g = c.benchmark_group("prime_search_256bit");
    g.sample_size(10);
    let start = BigUint::from(1u8) << 255usize;
    for (name, exec) in POLICIES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| next_prime_1_mod_4(&start, None, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, mvn, zero_scan, simulator, prime_search);
criterion_main!(benches);
