//! Quadratic Dirichlet L-functions over F_q(T): exact L-polynomials and class
//! numbers, divisor-function constants, the random Euler product model, and
//! the moment and distribution experiments built on them.

pub mod character;
pub mod complexmoments;
pub mod divisor;
pub mod ffpoly;
pub mod lfunction;
pub mod moments;
pub mod parallel;
pub mod randommodel;
pub mod stats;
