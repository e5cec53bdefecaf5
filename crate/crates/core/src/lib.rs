pub mod error;
pub mod fem;
pub mod legendre;
pub mod lp;
pub mod measures;
pub mod omr;
pub mod pdr;
pub mod poly;
pub mod problem;
pub mod sampling;
pub mod scalar;

pub use error::{Error, Result};
pub use poly::{Polynomial, PolyVector, Var, VarLayout};
pub use problem::{BoxDomain, Facet, VariationalProblem};
pub use scalar::{Exact, Scalar};
