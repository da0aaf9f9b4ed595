//! Blocking TCP transport: a thread-per-connection relay server and a
//! synchronous client. Both reuse the transport-free protocol cores; this
//! module only moves frames across sockets.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use crdt_core::DocumentState;

use crate::relay::{RelayAction, RelayCore, RelayStorage};
use crate::session::{SessionCmd, SessionConfig, SessionCore, SessionNote, SessionState};

/// Reads one length-prefixed frame, returning its full encoded bytes
/// (prefix included) so they can be fed to the frame decoder unchanged.
fn read_frame(stream: &mut TcpStream) -> io::Result<Vec<u8>> {
    let mut len_buf = [0u8; 4];
    stream.read_exact(&mut len_buf)?;
    let len = u32::from_le_bytes(len_buf) as usize;
    if len == 0 || len > 64 << 20 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad frame length"));
    }
    let mut frame = vec![0u8; 4 + len];
    frame[0..4].copy_from_slice(&len_buf);
    stream.read_exact(&mut frame[4..])?;
    Ok(frame)
}

struct Shared<S: RelayStorage> {
    core: RelayCore<S>,
    writers: HashMap<u64, TcpStream>,
}

impl<S: RelayStorage> Shared<S> {
    fn perform(&mut self, actions: Vec<RelayAction>) {
        for action in actions {
            match action {
                RelayAction::Send { session, bytes } => {
                    if let Some(w) = self.writers.get_mut(&session) {
                        if w.write_all(&bytes).is_err() {
                            self.drop_session(session);
                        }
                    }
                }
                RelayAction::Close { session } => self.drop_session(session),
            }
        }
    }

    fn drop_session(&mut self, session: u64) {
        self.core.on_disconnect(session);
        if let Some(w) = self.writers.remove(&session) {
            let _ = w.shutdown(Shutdown::Both);
        }
    }
}

/// Accept loop; blocks forever. Spawn on a thread to run in the background.
pub fn serve_relay<S: RelayStorage + Send + 'static>(
    listener: TcpListener,
    core: RelayCore<S>,
) -> io::Result<()> {
    let shared = Arc::new(Mutex::new(Shared {
        core,
        writers: HashMap::new(),
    }));
    let mut next_session: u64 = 1;
    for conn in listener.incoming() {
        let mut stream = match conn {
            Ok(s) => s,
            Err(e) => {
                log::warn!("accept failed: {e}");
                continue;
            }
        };
        let session = next_session;
        next_session += 1;
        let shared = Arc::clone(&shared);
        if let Ok(writer) = stream.try_clone() {
            shared.lock().unwrap().writers.insert(session, writer);
        } else {
            continue;
        }
        thread::spawn(move || {
            loop {
                match read_frame(&mut stream) {
                    Ok(frame) => {
                        let mut guard = shared.lock().unwrap();
                        let actions = guard.core.on_frame(session, &frame);
                        let closing = actions
                            .iter()
                            .any(|a| matches!(a, RelayAction::Close { session: s } if *s == session));
                        guard.perform(actions);
                        if closing {
                            break;
                        }
                    }
                    Err(_) => {
                        shared.lock().unwrap().drop_session(session);
                        break;
                    }
                }
            }
        });
    }
    Ok(())
}

/// Synchronous client. Mutate the document through [`TcpClient::core_mut`],
/// then call [`TcpClient::flush`]; call [`TcpClient::sync`] for a confirmed
/// round-trip that also pulls in remote updates.
pub struct TcpClient {
    core: SessionCore,
    stream: TcpStream,
}

impl TcpClient {
    /// Dials the relay and completes the handshake, retrying with the
    /// session's backoff schedule on connection failure.
    pub fn connect<A: ToSocketAddrs + Clone>(
        addr: A,
        doc: DocumentState,
        config: SessionConfig,
    ) -> io::Result<TcpClient> {
        let mut core = SessionCore::new(doc, config);
        core.start();
        loop {
            match TcpStream::connect(addr.clone()) {
                Ok(stream) => {
                    let mut client = TcpClient { core, stream };
                    client.handshake()?;
                    return Ok(client);
                }
                Err(e) => {
                    let out = core.connection_lost();
                    let mut delay = None;
                    for cmd in out.cmds {
                        if let SessionCmd::SetTimer { delay: d, token } = cmd {
                            delay = Some((d, token));
                        }
                    }
                    match delay {
                        Some((d, token)) => {
                            thread::sleep(Duration::from_micros(d.as_micros()));
                            core.on_timer(token);
                        }
                        None => {
                            return Err(io::Error::new(
                                io::ErrorKind::ConnectionRefused,
                                format!("gave up connecting: {e}"),
                            ));
                        }
                    }
                }
            }
        }
    }

    fn handshake(&mut self) -> io::Result<()> {
        let timeout = Duration::from_micros(self.core.config().sync_timeout.as_micros());
        self.stream.set_read_timeout(Some(timeout))?;
        let out = self.core.connected();
        self.run_cmds(out.cmds)?;
        while self.core.state() != SessionState::Live {
            let frame = read_frame(&mut self.stream).map_err(|e| {
                io::Error::new(io::ErrorKind::TimedOut, format!("handshake failed: {e}"))
            })?;
            let out = self.core.on_frame(&frame);
            self.run_cmds(out.cmds)?;
        }
        Ok(())
    }

    pub fn core(&self) -> &SessionCore {
        &self.core
    }

    pub fn core_mut(&mut self) -> &mut SessionCore {
        &mut self.core
    }

    /// Sends queued local ops.
    pub fn flush(&mut self) -> io::Result<()> {
        let out = self.core.flush_outbox();
        self.run_cmds(out.cmds)
    }

    /// Flushes, then blocks until the relay answers a sync request. On
    /// return every op the relay had when the request arrived is applied
    /// locally and the relay has seen all local ops.
    pub fn sync(&mut self) -> io::Result<()> {
        self.flush()?;
        let out = self.core.request_sync();
        self.run_cmds(out.cmds)?;
        loop {
            let frame = read_frame(&mut self.stream)?;
            let out = self.core.on_frame(&frame);
            let done = out.notes.iter().any(|n| *n == SessionNote::SyncRespReceived);
            self.run_cmds(out.cmds)?;
            if done {
                return Ok(());
            }
        }
    }

    fn run_cmds(&mut self, cmds: Vec<SessionCmd>) -> io::Result<()> {
        for cmd in cmds {
            match cmd {
                SessionCmd::SendFrame(bytes) => self.stream.write_all(&bytes)?,
                SessionCmd::Connect | SessionCmd::Disconnect => {}
                SessionCmd::SetTimer { .. } => {} // handshake timeout maps to the socket read timeout
            }
        }
        Ok(())
    }
}
