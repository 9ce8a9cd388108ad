//! Acceptance suite for `rcac-beam`; see `tests/acceptance.rs`.
