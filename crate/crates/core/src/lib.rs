pub mod collectors;
pub mod model;
pub mod probes;
pub mod procgen;
pub mod sim;
pub mod temporal;
pub mod textgen;
