use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use trialkit_core::{
    bivariate_normal_cdf, fwer_dunnett, mvn_cdf_qmc, mvn_orthant_product_corr, solve_uniform_alpha, CorrelationMatrix,
};

fn bivariate(c: &mut Criterion) {
    c.bench_function("bivariate_normal_cdf", |b| {
        b.iter(|| bivariate_normal_cdf(black_box(1.96), black_box(1.5), black_box(0.5)))
    });
    c.bench_function("bivariate_normal_cdf/high_rho", |b| {
        b.iter(|| bivariate_normal_cdf(black_box(1.96), black_box(1.5), black_box(0.97)))
    });
}

fn multivariate(c: &mut Criterion) {
    let lambda = [0.7071, 0.7071, 0.5, 0.3];
    let cut = [2.2; 4];
    c.bench_function("mvn_orthant_product_corr/k4", |b| {
        b.iter(|| mvn_orthant_product_corr(black_box(&cut), black_box(&lambda)))
    });
    let corr = CorrelationMatrix::from_pairs(3, &[(0, 1, 0.5), (0, 2, 0.2), (1, 2, 0.0)]).unwrap();
    c.bench_function("mvn_cdf_qmc/k3", |b| b.iter(|| mvn_cdf_qmc(black_box(&[2.3; 3]), &corr, 1e-5, 7)));
    c.bench_function("fwer_dunnett/k3_general", |b| b.iter(|| fwer_dunnett(black_box(&[0.0097; 3]), &corr)));
    c.bench_function("solve_uniform_alpha/k2", |b| {
        let pair = CorrelationMatrix::pair(0.5).unwrap();
        b.iter(|| solve_uniform_alpha(black_box(0.025), &pair))
    });
}

criterion_group!(benches, bivariate, multivariate);
criterion_main!(benches);
