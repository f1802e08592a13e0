//! Exact symbolic algebra: rationals, Laurent polynomials, rational
//! expressions, polynomials in the spectral parameter and matrices.

pub mod matrix;
pub mod poly;
pub mod ratexpr;
pub mod rational;
pub mod spectral;
pub mod var;

pub use matrix::PolyMatrix;
pub use poly::{Monomial, MultiPoly};
pub use ratexpr::RationalExpr;
pub use rational::{q, qr, Q};
pub use spectral::SpectralPoly;
pub use var::{Var, VarKind};
