//! Command-line and HTTP front end over a data directory.

pub mod api;
pub mod config;
pub mod data;
pub mod service;
