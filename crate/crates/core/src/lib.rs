//! Commutative Frobenius algebras on qubits, the GHZ/W calculus and SLOCC
//! classification of multipartite states.

pub mod tensor;
pub mod linalg;
pub mod random;
pub mod cfa;
pub mod slocc;
pub mod diagram;
pub mod ghzw;
pub mod rewrite;
pub mod cli;
