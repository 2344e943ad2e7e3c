//! Tetrad: a graphical authentication mechanism in which the user aligns four
//! secret face images on a 5x9 grid by shifting whole rows and columns.

pub mod auth;
pub mod bootstrap;
pub mod cli;
pub mod client;
pub mod grid;
pub mod observer;
pub mod ppm;
pub mod service;
pub mod store;
