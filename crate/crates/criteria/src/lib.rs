//! Holds the acceptance run in `tests/criteria.rs`; no library code.
//!
//! `cargo test -p vdyn-criteria` prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. It lives in its own package so that a failing
//! criterion does not keep the other test targets of the workspace from
//! running.
