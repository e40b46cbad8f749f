//! Runs every code block in the `book/` chapters as a doc-test, keeping the
//! guide and the API in sync. `cargo test --doc` picks these up.

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/stationary.md")]
    mod stationary {}
    #[doc = include_str!("../../../book/src/boundary.md")]
    mod boundary {}
    #[doc = include_str!("../../../book/src/halflife.md")]
    mod halflife {}
}
