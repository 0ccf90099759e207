pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod ingest;
pub mod table;
