pub mod cli;
pub mod equilibrium;
pub mod geom2d;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod reflections;
pub mod riesz;
pub mod skeleton;
pub mod verify;
