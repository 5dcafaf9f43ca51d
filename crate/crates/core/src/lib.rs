pub mod dynamics;
pub mod invariant;
pub mod propagator;
pub mod weyl;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/ermakov.md")]
    mod ermakov {}
    #[doc = include_str!("../../../book/src/weyl.md")]
    mod weyl {}
    #[doc = include_str!("../../../book/src/propagator.md")]
    mod propagator {}
    #[doc = include_str!("../../../book/src/invariant.md")]
    mod invariant {}
}
