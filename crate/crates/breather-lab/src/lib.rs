pub mod breathers;
pub mod cli;
pub mod error;
pub mod functionals;
pub mod galerkin;
pub mod jets;
pub mod linops;
pub mod quadrature;
pub mod specfun;
pub mod stability;
