pub mod dmesh;
pub mod geom;
pub mod grid;
pub mod harness;
pub mod iface;
pub mod meshgen;
pub mod mmesh;
pub mod sim;
pub mod vtk;
