pub mod syntax;
pub mod taxonomy;
pub mod term;
pub mod typing;
pub mod par;
pub mod store;
pub mod classifier;
pub mod rules;
pub mod engine;
pub mod benchgen;
pub mod repl;
