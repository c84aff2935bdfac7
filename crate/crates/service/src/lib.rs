//! Command-line tools and the WebSocket session service.

pub mod cli;
pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, FrameDelta, ReplyBody, Request, ServerMessage};
pub use session::Session;
