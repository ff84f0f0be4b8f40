//! Holds the workspace acceptance suite (`tests/acceptance.rs`), which checks
//! the end-to-end criteria and prints one PASS/FAIL line per criterion.
//!
//! It lives in its own package so that `cargo test --workspace` runs it after
//! the unit and property tests of the other crates.
