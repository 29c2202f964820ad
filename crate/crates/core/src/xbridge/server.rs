use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener};
use std::thread::{self, JoinHandle};

use super::protocol::{Record, VERSION};
use crate::error::BridgeError;
use crate::observer::Predictor;

/// What a finished session looked like.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SessionSummary {
    pub steps: u64,
    /// `true` when the client said `bye`; `false` on plain end of stream.
    pub orderly: bool,
}

fn write_record<W: Write>(writer: &mut W, record: &Record) -> Result<(), BridgeError> {
    writer.write_all(record.encode()?.as_bytes())?;
    writer.flush()?;
    Ok(())
}

/// Serve one session: answer the handshake, then every step in order.
///
/// Protocol violations are answered with an `error` record and end the
/// session with the corresponding error. Predictor failures are reported to
/// the client, which treats them as fatal.
pub fn serve<P, R, W>(predictor: &mut P, reader: R, mut writer: W) -> Result<SessionSummary, BridgeError>
where
    P: Predictor + ?Sized,
    R: BufRead,
    W: Write,
{
    let mut lines = reader.lines();
    let mut next_line = || -> Result<Option<Record>, BridgeError> {
        match lines.next() {
            None => Ok(None),
            Some(line) => Ok(Some(Record::decode(&line?)?)),
        }
    };

    match next_line()? {
        Some(Record::Hello { version }) if version == VERSION => {
            let l = predictor.labels();
            write_record(
                &mut writer,
                &Record::Declare {
                    version: VERSION.into(),
                    state: l.state.clone(),
                    output: l.output.clone(),
                    extended: l.extended.clone(),
                    input: l.input.clone(),
                },
            )?;
        }
        Some(Record::Hello { version }) => {
            let message = format!("unsupported version `{version}`, this server speaks `{VERSION}`");
            write_record(&mut writer, &Record::Error { index: None, message })?;
            return Err(BridgeError::VersionMismatch {
                local: VERSION.into(),
                remote: version,
            });
        }
        Some(other) => return Err(BridgeError::Handshake(format!("expected `hello`, got {other:?}"))),
        None => return Err(BridgeError::StreamClosed { last_good_step: None }),
    }

    let mut expected = 1u64;
    loop {
        let record = match next_line() {
            Ok(Some(r)) => r,
            Ok(None) => {
                return Ok(SessionSummary {
                    steps: expected - 1,
                    orderly: false,
                })
            }
            Err(e) => {
                let _ = write_record(
                    &mut writer,
                    &Record::Error {
                        index: None,
                        message: e.to_string(),
                    },
                );
                return Err(e);
            }
        };
        match record {
            Record::Step { index, x, u, dz } => {
                if index != expected {
                    let message = format!("expected step {expected}, got {index}");
                    write_record(&mut writer, &Record::Error { index: Some(index), message })?;
                    return Err(BridgeError::OutOfOrder { expected, got: index });
                }
                let reply = match predictor.step(&x, &u, &dz) {
                    Ok(p) => Record::Result {
                        index,
                        x: p.x,
                        y: p.y,
                        z: p.z,
                    },
                    Err(e) => Record::Error {
                        index: Some(index),
                        message: e.to_string(),
                    },
                };
                let reply = match reply.check_finite() {
                    Ok(()) => reply,
                    Err(e) => Record::Error {
                        index: Some(index),
                        message: e.to_string(),
                    },
                };
                write_record(&mut writer, &reply)?;
                expected += 1;
            }
            Record::Bye {} => {
                return Ok(SessionSummary {
                    steps: expected - 1,
                    orderly: true,
                })
            }
            other => {
                let message = format!("unexpected record {other:?}");
                write_record(&mut writer, &Record::Error { index: None, message: message.clone() })?;
                return Err(BridgeError::Malformed(message));
            }
        }
    }
}

/// Serve one session over stdin/stdout (the `exec:` transport).
pub fn serve_stdio<P: Predictor + ?Sized>(predictor: &mut P) -> Result<SessionSummary, BridgeError> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    serve(predictor, stdin.lock(), stdout.lock())
}

fn spawn_session<S, P>(stream: S, reader: std::io::Result<S>, mut predictor: P)
where
    S: std::io::Read + Write + Send + 'static,
    P: Predictor + Send + 'static,
{
    thread::spawn(move || {
        let reader = match reader {
            Ok(r) => BufReader::new(r),
            Err(e) => {
                log::warn!("xbridge session setup failed: {e}");
                return;
            }
        };
        match serve(&mut predictor, reader, stream) {
            Ok(s) => log::debug!("xbridge session ended after {} steps", s.steps),
            Err(e) => log::warn!("xbridge session aborted: {e}"),
        }
    });
}

/// Accept TCP sessions forever, each with a fresh predictor on its own thread.
pub fn serve_tcp<F, P>(listener: TcpListener, make: F) -> std::io::Result<()>
where
    F: Fn() -> P,
    P: Predictor + Send + 'static,
{
    for stream in listener.incoming() {
        let stream = stream?;
        stream.set_nodelay(true)?;
        let reader = stream.try_clone();
        spawn_session(stream, reader, make());
    }
    Ok(())
}

/// Accept unix-socket sessions forever, each with a fresh predictor.
#[cfg(unix)]
pub fn serve_unix<F, P>(listener: std::os::unix::net::UnixListener, make: F) -> std::io::Result<()>
where
    F: Fn() -> P,
    P: Predictor + Send + 'static,
{
    for stream in listener.incoming() {
        let stream = stream?;
        let reader = stream.try_clone();
        spawn_session(stream, reader, make());
    }
    Ok(())
}

/// A background TCP server on an ephemeral localhost port.
pub struct LoopbackServer {
    pub addr: SocketAddr,
    _handle: JoinHandle<()>,
}

impl LoopbackServer {
    /// Serve predictors built by `make`; one per connection.
    pub fn spawn<F, P>(make: F) -> std::io::Result<Self>
    where
        F: Fn() -> P + Send + 'static,
        P: Predictor + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let handle = thread::spawn(move || {
            if let Err(e) = serve_tcp(listener, make) {
                log::warn!("loopback server stopped: {e}");
            }
        });
        Ok(LoopbackServer { addr, _handle: handle })
    }

    /// `tcp:127.0.0.1:<port>`, ready for `RemotePredictor::connect`.
    pub fn address(&self) -> String {
        format!("tcp:{}", self.addr)
    }
}
