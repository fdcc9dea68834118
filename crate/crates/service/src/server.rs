//! Websocket transport: one thread per connection.

use std::io;
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;

use tungstenite::{accept, Message};

use crate::session::{Incoming, Outgoing, PrecomputeGate, Session, SessionConfig};

pub const DEFAULT_PORT: u16 = 9800;

pub fn serve(addr: impl ToSocketAddrs, config: SessionConfig, max_concurrent_precomputes: usize) -> io::Result<()> {
    serve_listener(TcpListener::bind(addr)?, config, max_concurrent_precomputes)
}

/// Accepts connections forever.
pub fn serve_listener(listener: TcpListener, config: SessionConfig, max_concurrent_precomputes: usize) -> io::Result<()> {
    let config = Arc::new(config);
    let gate = Arc::new(PrecomputeGate::new(max_concurrent_precomputes));
    log::info!("listening on {}", listener.local_addr()?);
    for stream in listener.incoming() {
        let stream = match stream {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let (config, gate) = (config.clone(), gate.clone());
        thread::spawn(move || {
            let peer = stream.peer_addr().ok();
            if let Err(e) = connection(stream, Session::new(config, gate)) {
                log::info!("connection {peer:?} ended: {e}");
            }
        });
    }
    Ok(())
}

fn connection(stream: TcpStream, mut session: Session) -> Result<(), tungstenite::Error> {
    stream.set_nodelay(true).ok();
    let mut ws = accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => tungstenite::Error::ConnectionClosed,
    })?;
    loop {
        let incoming = match ws.read()? {
            Message::Text(t) => Incoming::Text(t.as_str().to_owned()),
            Message::Binary(b) => Incoming::Binary(b.to_vec()),
            Message::Close(_) => return Ok(()),
            _ => continue,
        };
        for frame in session.handle(incoming) {
            ws.write(match frame {
                Outgoing::Text(t) => Message::text(t),
                Outgoing::Binary(b) => Message::binary(b),
            })?;
        }
        ws.flush()?;
    }
}
