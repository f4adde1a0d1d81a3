pub mod algebra;
pub mod config;
pub mod cover;
pub mod local;
pub mod moduli;
pub mod orbital;
pub mod picard;
pub mod places;
pub mod report;
pub mod suites;
