//! Metamodel evolution with coupled model migration.
//!
//! A [`history::History`] records metamodel changes between releases; the
//! [`engine::Engine`] replays them over a [`model::Repository`], migrating
//! the model inside transactions so that it conforms again at every step.

pub mod cli;
pub mod engine;
pub mod helloworld;
pub mod history;
pub mod json;
pub mod metamodel;
pub mod model;
pub mod operations;

pub use engine::{Engine, MigrationReport};
pub use history::{Change, History};
pub use metamodel::{Metamodel, QualifiedName};
pub use model::{ObjId, Repository, Value};
