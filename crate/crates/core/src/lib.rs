pub mod environment;
pub mod equilibrium;
pub mod error;
pub mod ext;
pub mod noise;
pub mod numeric;
pub mod exec;
pub mod welfare;
pub mod commitment;
pub mod extensions;
pub mod oracle;
pub mod config;
pub mod output;
pub mod checks;
pub mod cli;
