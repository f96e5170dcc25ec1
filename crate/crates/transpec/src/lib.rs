pub mod api;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod fixtures;
pub mod gateway;
pub mod pipeline;
pub mod store;
