//! Acceptance checks for `nodal-lab` live in `tests/acceptance.rs`; run them
//! with `cargo test -p nodal-lab-suite --release`.
