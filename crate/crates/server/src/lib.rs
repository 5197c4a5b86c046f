//! Process entry points for scenetalk: terminal REPL, HTTP/WebSocket server
//! and evaluation commands.

pub mod cli;
pub mod commands;
pub mod hub;
pub mod repl;
pub mod server;
pub mod wire;

pub use hub::Hub;
pub use repl::run_repl;
pub use server::{Role, SESSION_OCCUPIED, router, serve};
pub use wire::{Body, Inbound, InboundParser, ReplyPayload, WireMessage};
