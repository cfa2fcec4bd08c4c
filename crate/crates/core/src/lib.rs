pub mod error;
pub mod io;
pub mod linalg;
pub mod nqp;
pub mod nnls;
pub mod baselines;
pub mod testgen;
pub mod bench;
