//! Interactive decomposition sessions over a websocket.
//!
//! A client loads an image once; the server precomputes the RGBXY
//! decomposition and then answers palette edits, harmonization and
//! transfer requests with updated palettes, previews and layers. Text frames
//! carry JSON, binary frames carry PNG payloads. Every binary frame sent by
//! the server follows the text frame that announces it.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, ErrorCode, ServerMessage};
pub use server::{serve, serve_listener, DEFAULT_PORT};
pub use session::{Incoming, Outgoing, PrecomputeGate, Session, SessionConfig};
