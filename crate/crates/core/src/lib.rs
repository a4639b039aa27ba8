pub mod lp;
pub mod regions;
pub mod stl;
pub mod bezier;
pub mod automaton;
pub mod monitor;
pub mod jts;
pub mod gcs;
pub mod plan;
