use std::io::{BufRead, ErrorKind, Write};
use std::process::Child;
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::protocol::{Record, VERSION};
use super::transport::{connect, Address, Connection};
use crate::error::{BridgeError, PredictorError};
use crate::observer::{ChannelLabels, Prediction, Predictor};

/// Default per-message timeout.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// Client side of the protocol: a [`Predictor`] living in another process.
pub struct RemotePredictor {
    labels: ChannelLabels,
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    next_index: u64,
    last_good: Option<u64>,
    child: Option<Child>,
}

fn spawn_reader(mut reader: Box<dyn BufRead + Send>) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || loop {
        let mut line = String::new();
        match reader.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {
                if tx.send(Ok(line)).is_err() {
                    break;
                }
            }
            Err(e) => {
                let _ = tx.send(Err(e));
                break;
            }
        }
    });
    rx
}

impl RemotePredictor {
    /// Connect to `address` and perform the handshake.
    pub fn connect(address: &str, timeout: Duration) -> Result<Self, BridgeError> {
        let conn = connect(&Address::parse(address)?)?;
        Self::handshake(conn, timeout)
    }

    /// Handshake over an already open stream.
    pub fn handshake(conn: Connection, timeout: Duration) -> Result<Self, BridgeError> {
        let Connection { reader, writer, child } = conn;
        let mut this = RemotePredictor {
            labels: ChannelLabels {
                state: vec![],
                output: vec![],
                extended: vec![],
                input: vec![],
            },
            writer,
            lines: spawn_reader(reader),
            timeout,
            next_index: 1,
            last_good: None,
            child,
        };
        this.send(&Record::Hello {
            version: VERSION.to_string(),
        })?;
        match this.receive()? {
            Record::Declare {
                version,
                state,
                output,
                extended,
                input,
            } => {
                if version != VERSION {
                    return Err(BridgeError::VersionMismatch {
                        local: VERSION.to_string(),
                        remote: version,
                    });
                }
                if state.is_empty() || output.is_empty() {
                    return Err(BridgeError::Handshake("declaration has no state or output channels".into()));
                }
                this.labels = ChannelLabels {
                    state,
                    output,
                    extended,
                    input,
                };
                Ok(this)
            }
            Record::Error { message, .. } => Err(BridgeError::Handshake(format!("server refused: {message}"))),
            other => Err(BridgeError::Handshake(format!("expected `declare`, got {other:?}"))),
        }
    }

    fn send(&mut self, record: &Record) -> Result<(), BridgeError> {
        record.check_finite()?;
        let line = record.encode()?;
        let closed = |_| BridgeError::StreamClosed {
            last_good_step: self.last_good,
        };
        self.writer.write_all(line.as_bytes()).map_err(closed)?;
        self.writer.flush().map_err(closed)
    }

    fn receive(&mut self) -> Result<Record, BridgeError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Record::decode(&line),
            Ok(Err(e)) => match e.kind() {
                ErrorKind::ConnectionReset | ErrorKind::ConnectionAborted | ErrorKind::UnexpectedEof => {
                    Err(BridgeError::StreamClosed {
                        last_good_step: self.last_good,
                    })
                }
                _ => Err(BridgeError::Io(e.to_string())),
            },
            Err(RecvTimeoutError::Timeout) => Err(BridgeError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(BridgeError::StreamClosed {
                last_good_step: self.last_good,
            }),
        }
    }

    /// One request/response exchange.
    pub fn remote_step(&mut self, x: &[f64], u: &[f64], dz: &[f64]) -> Result<Prediction, BridgeError> {
        let index = self.next_index;
        let dims = [
            ("x", self.labels.state.len(), x.len()),
            ("u", self.labels.input.len(), u.len()),
            ("dz", self.labels.extended.len(), dz.len()),
        ];
        for (field, expected, got) in dims {
            if expected != got {
                return Err(BridgeError::Dimension {
                    field: field.into(),
                    expected,
                    got,
                });
            }
        }
        self.send(&Record::Step {
            index,
            x: x.to_vec(),
            u: u.to_vec(),
            dz: dz.to_vec(),
        })?;
        match self.receive()? {
            Record::Result { index: got, x, y, z } => {
                if got != index {
                    return Err(BridgeError::OutOfOrder { expected: index, got });
                }
                let dims = [
                    ("x", self.labels.state.len(), x.len()),
                    ("y", self.labels.output.len(), y.len()),
                    ("z", self.labels.extended.len(), z.len()),
                ];
                for (field, expected, got) in dims {
                    if expected != got {
                        return Err(BridgeError::Dimension {
                            field: field.into(),
                            expected,
                            got,
                        });
                    }
                }
                self.last_good = Some(index);
                self.next_index += 1;
                Ok(Prediction { x, y, z })
            }
            Record::Error { message, .. } => Err(BridgeError::Remote { step: index, message }),
            other => Err(BridgeError::Malformed(format!("expected `result`, got {other:?}"))),
        }
    }

    /// Index of the last step answered successfully.
    pub fn last_good_step(&self) -> Option<u64> {
        self.last_good
    }
}

impl Predictor for RemotePredictor {
    fn labels(&self) -> &ChannelLabels {
        &self.labels
    }

    fn step(&mut self, x: &[f64], u: &[f64], dz: &[f64]) -> Result<Prediction, PredictorError> {
        Ok(self.remote_step(x, u, dz)?)
    }
}

impl Drop for RemotePredictor {
    fn drop(&mut self) {
        if let Ok(line) = (Record::Bye {}).encode() {
            let _ = self.writer.write_all(line.as_bytes());
            let _ = self.writer.flush();
        }
        // Closing stdin lets an `exec:` child exit on its own.
        self.writer = Box::new(std::io::sink());
        if let Some(child) = &mut self.child {
            let deadline = std::time::Instant::now() + Duration::from_secs(1);
            while std::time::Instant::now() < deadline {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(5));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}
