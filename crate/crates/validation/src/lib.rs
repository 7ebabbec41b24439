//! Acceptance checks for `mabk-core`; see `tests/acceptance.rs`.
//!
//! Run with `cargo test -p mabk-validation --test acceptance`. Each criterion
//! prints one PASS/FAIL line and the process fails if any criterion fails.
