pub mod alias_demo;
pub mod critical_period;
pub mod predict;
pub mod simulate;
pub mod spectral;
pub mod sweep;
