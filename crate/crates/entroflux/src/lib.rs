//! Entropic fluctuations in finite classical and quantum statistical mechanics.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`]: Hermitian functional calculus, Schatten norms, tensor embeddings, quadrature.
//! * [`states`]: density matrices, entropies, hypothesis testing, trace-inequality oracles.
//! * [`modular`]: relative modular spectra, Araki–Masuda norms, full counting statistics.
//! * [`dynsys`]: finite quantum dynamical systems, entropic pressures, open systems, linear response.
//! * [`quasifree`]: quasi-free fermions, the electronic black box and the XY chain.
//! * [`classical`]: the thermally driven harmonic chain.
//! * [`ldp`]: Legendre transforms and large-deviation checks.
#![forbid(unsafe_code)]

pub mod classical;
pub mod dynsys;
pub mod error;
pub mod ldp;
pub mod modular;
pub mod numerics;
pub mod quasifree;
pub mod states;

pub use error::{Error, Result};
pub use numerics::{CMat, Extended, HermitianOperator, C64};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/harmonic_chain.md")]
    mod harmonic_chain {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/pressures.md")]
    mod pressures {}
    #[doc = include_str!("../../../book/src/fcs.md")]
    mod fcs {}
    #[doc = include_str!("../../../book/src/quasifree.md")]
    mod quasifree {}
    #[doc = include_str!("../../../book/src/ldp.md")]
    mod ldp {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
