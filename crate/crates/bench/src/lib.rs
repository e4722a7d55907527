//! Benchmark-only package; the benches live in `benches/`.
