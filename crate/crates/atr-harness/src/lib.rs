//! Experiment harness for the anti-tamper radio stack: spec files, hole
//! layouts, the server environment, the scenario suite, record scoring, and
//! report output.

pub mod environment;
pub mod layout;
pub mod output;
pub mod scenarios;
pub mod scoring;
pub mod spec;
