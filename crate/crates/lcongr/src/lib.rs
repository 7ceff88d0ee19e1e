pub mod arith;
mod bsgs;
pub mod checks;
pub mod cyclotomic;
pub mod dataset;
pub mod density;
pub mod dirichlet;
pub mod ec;
pub mod error;
pub mod kn;
pub mod lseries;
pub mod matgrp;
pub mod modsym;
pub mod scalar;

pub use cyclotomic::{Cyc, CycNumber};
pub use dataset::Dataset;
pub use dirichlet::DirichletCharacter;
pub use ec::{CoefficientTable, Curve, CurveData};
pub use error::{Error, Result};
