pub mod nn;
pub mod params;
pub mod forward;
pub mod backward;
pub mod update;


