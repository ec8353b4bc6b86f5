pub mod config;
pub mod constraints;
pub mod pos;
pub mod report;
pub mod shapeops;
pub mod simplify;
pub mod solver;
pub mod symexec;
pub mod surface;
