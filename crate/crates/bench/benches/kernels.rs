use criterion::{criterion_group, criterion_main};

criterion_group!(benches, cbo_benches::benchmarks);
criterion_main!(benches);
