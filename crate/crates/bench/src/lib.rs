//! Benchmarks for the assignment oracle and the Frank-Wolfe solver live in
//! `benches/`.
