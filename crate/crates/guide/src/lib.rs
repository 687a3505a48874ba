//! Runs every code block in the book as a doc-test, so the guide can never
//! drift from the library. `cargo test -p schatten-guide` checks the book.

#[doc = include_str!("../../../book/src/matrices.md")]
pub mod matrices {}
