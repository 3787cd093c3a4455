//! Single-client WebSocket service driving a [`Session`] at the frame rate.

use std::io::ErrorKind;
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tungstenite::protocol::frame::coding::CloseCode as WsCloseCode;
use tungstenite::protocol::CloseFrame;
use tungstenite::{Message, WebSocket};

use super::protocol::{CloseCode, ProtocolError, ServerMessage};
use super::{Engine, EngineError, Outgoing, Phase, Session, TrialRecord};

/// How long one read waits before the loop checks the frame clock.
const POLL: Duration = Duration::from_millis(1);

/// How a served session ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServeOutcome {
    pub close: CloseCode,
    pub reason: String,
    pub records: Vec<TrialRecord>,
    pub ratings: Vec<(usize, u8)>,
}

/// Binds the configured address and serves one session.
pub fn serve(engine: &Engine, out_dir: Option<PathBuf>) -> Result<ServeOutcome, EngineError> {
    let io = &engine.config().io;
    let addr = format!("{}:{}", io.bind, io.port);
    let listener = TcpListener::bind(&addr).map_err(|e| EngineError::io(&addr, e))?;
    serve_listener(engine, &listener, out_dir)
}

/// Accepts one client on `listener` and runs its session to the end.
/// Client protocol violations end the session with a coded close frame;
/// they are reported in the outcome, not as errors.
pub fn serve_listener(
    engine: &Engine,
    listener: &TcpListener,
    out_dir: Option<PathBuf>,
) -> Result<ServeOutcome, EngineError> {
    let (stream, _) = listener
        .accept()
        .map_err(|e| EngineError::io("accept", e))?;
    stream
        .set_nodelay(true)
        .map_err(|e| EngineError::io("socket", e))?;
    let mut ws = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => EngineError::WebSocket(Box::new(e)),
        tungstenite::HandshakeError::Interrupted(_) => {
            EngineError::io("handshake", std::io::Error::from(ErrorKind::WouldBlock))
        }
    })?;
    ws.get_ref()
        .set_read_timeout(Some(POLL))
        .map_err(|e| EngineError::io("socket", e))?;

    let mut session = Session::new(engine, out_dir);
    let period = Duration::from_secs_f64(engine.dt());
    let mut next_tick = Instant::now();
    let end = loop {
        match ws.read() {
            Ok(Message::Text(text)) => match session.handle_text(text.as_str()) {
                Ok(out) => {
                    send_all(&mut ws, out)?;
                    next_tick = next_tick.max(Instant::now());
                }
                Err(e) => break e,
            },
            Ok(Message::Binary(_)) => {
                break ProtocolError::new(CloseCode::Malformed, "clients send text messages only")
            }
            Ok(Message::Close(_)) => {
                break ProtocolError::new(CloseCode::Normal, "client closed the session");
            }
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(tungstenite::Error::ConnectionClosed | tungstenite::Error::AlreadyClosed) => {
                break ProtocolError::new(CloseCode::Normal, "client disconnected");
            }
            Err(e) => return Err(e.into()),
        }

        if session.phase() == Phase::Running {
            let now = Instant::now();
            if now >= next_tick {
                let out = match session.tick() {
                    Ok(out) => out,
                    Err(e) => {
                        close(&mut ws, CloseCode::Internal, &e.to_string());
                        return Err(e);
                    }
                };
                send_all(&mut ws, out)?;
                next_tick += period;
                // A stalled client drops frames instead of bursting to catch up.
                if next_tick < now {
                    next_tick = now + period;
                }
            }
        }
        if session.phase() == Phase::Finished {
            break ProtocolError::new(CloseCode::Normal, "session complete");
        }
    };

    if end.code != CloseCode::Normal {
        let _ = ws.send(Message::text(Outgoing::to_json(&ServerMessage::Error {
            code: end.code.code(),
            reason: end.reason.clone(),
        })));
    }
    close(&mut ws, end.code, &end.reason);
    session.save()?;
    Ok(ServeOutcome {
        close: end.code,
        reason: end.reason,
        records: session.records().to_vec(),
        ratings: session.ratings().to_vec(),
    })
}

fn send_all(ws: &mut WebSocket<TcpStream>, out: Vec<Outgoing>) -> Result<(), EngineError> {
    for o in out {
        let msg = match o {
            Outgoing::Text(m) => Message::text(Outgoing::to_json(&m)),
            Outgoing::Frame(bytes) => Message::binary(bytes),
        };
        ws.send(msg)?;
    }
    Ok(())
}

/// Best-effort close handshake; the peer may already be gone.
fn close(ws: &mut WebSocket<TcpStream>, code: CloseCode, reason: &str) {
    let frame = CloseFrame {
        code: WsCloseCode::from(code.code()),
        reason: reason.into(),
    };
    if ws.close(Some(frame)).is_err() {
        return;
    }
    let deadline = Instant::now() + Duration::from_millis(200);
    while Instant::now() < deadline {
        match ws.read() {
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => break,
            Ok(_) => {}
        }
    }
}
