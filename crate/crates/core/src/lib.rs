//! Feasibility of pure-state entanglement transformations under separable maps.
//!
//! The crate decides convertibility `g|ψ⟩ → h|ψ⟩` under separable maps whose
//! Kraus operators are all locally invertible (via a linear program over the
//! stabilizer of `|ψ⟩`), checks explicit certificates for general separable
//! maps (which may contain Kraus operators that annihilate the input), and
//! builds the explicit 3- and 5-qubit ring-graph-state transformations that
//! separate the two classes.
//!
//! Index convention: site 0 is the most significant block of every flattened
//! index, so a global operator is `A₀ ⊗ A₁ ⊗ … ⊗ Aₙ₋₁`.

pub mod error;
pub mod exec;
pub mod io;
pub mod kraus;
pub mod linalg;
pub mod locc;
pub mod random;
pub mod sep;
pub mod stabilizer;
pub mod tensor;

pub use error::{Error, Result};
pub use exec::Strategy;
pub use linalg::{CMat, C64};
pub use tensor::{DensityMatrix, LocalOperator, PureState};
