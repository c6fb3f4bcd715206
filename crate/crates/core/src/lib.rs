pub mod domain;
pub mod gateway;
pub mod sse;
pub mod taxonomy;
pub mod classifier;
pub mod document;
pub mod dispatch;
pub mod store;
pub mod fusion;
pub mod config;
pub mod app;
pub mod service;
pub mod client;
