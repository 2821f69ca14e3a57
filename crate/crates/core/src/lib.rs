//! Multi-hop commonsense reasoning for if-then-because commands.
//!
//! A command such as "If it snows tonight then wake me up early because I
//! want to get to work on time" is split into state, action and goal
//! clauses ([`parser`]). A logic template ([`prover::TemplateSpec`]) turns
//! those clauses into two implications, each proved by chaining tuples from
//! a generative [`knowledge`] source and matching phrases through
//! [`embeddings`]. When no proof is found, a [`dialog`] asks the user for
//! the missing rule and stores it in the learned [`kbase`].

pub mod dialog;
pub mod embeddings;
pub mod engine;
pub mod kbase;
pub mod knowledge;
pub mod parser;
pub mod prover;
pub mod service;
pub mod text;
