//! Classification of points of the complex plane under finitely generated
//! function semigroups, with rasterization and property verification on
//! sampled data.

pub mod complex;
pub mod examples;
pub mod expr;
pub mod grid;
pub mod orbit;
pub mod parser;
pub mod report;
pub mod verify;
