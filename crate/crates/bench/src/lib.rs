//! Criterion benchmarks for `ebingeom-core`; run with `cargo bench -p ebingeom-bench`.
