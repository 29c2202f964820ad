//! Line protocol that lets an external process act as the observer's predictor.
//!
//! Each record is one JSON object on its own line. A session is
//! `hello` → `declare`, then strictly alternating `step` / `result` pairs with
//! indices 1, 2, 3, ..., closed by `bye` or end of stream. Either side may send
//! `error`, which is fatal to the run. Floats are written in their shortest
//! exact decimal form, so values cross the wire bit for bit.
//!
//! Addresses: `tcp:host:port`, `unix:/path` or `exec:program args` (stdio of
//! a child process). The full record reference is in `docs/xbridge.md`.

mod client;
mod protocol;
mod server;
mod transport;

pub use client::{RemotePredictor, DEFAULT_TIMEOUT};
pub use protocol::{Record, VERSION};
#[cfg(unix)]
pub use server::serve_unix;
pub use server::{serve, serve_stdio, serve_tcp, LoopbackServer, SessionSummary};
pub use transport::{connect, Address, Connection};

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Write};
    use std::net::TcpListener;
    use std::thread;
    use std::time::Duration;

    use super::*;
    use crate::dynamics::{ChassisState, DriverInputs, VehicleConfig};
    use crate::error::BridgeError;
    use crate::observer::{ModelPredictor, Predictor};

    fn bench() -> ModelPredictor {
        ModelPredictor::benchmark(&VehicleConfig::default_benchmark())
    }

    /// A scripted server: answers the handshake, then hands the raw stream to `script`.
    fn scripted<F>(version: &'static str, script: F) -> String
    where
        F: FnOnce(&mut dyn BufRead, &mut dyn Write) + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut writer = stream;
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let l = bench().labels().clone();
            let declare = Record::Declare {
                version: version.into(),
                state: l.state,
                output: l.output,
                extended: l.extended,
                input: l.input,
            };
            writer.write_all(declare.encode().unwrap().as_bytes()).unwrap();
            script(&mut reader, &mut writer);
        });
        format!("tcp:{addr}")
    }

    fn state() -> Vec<f64> {
        ChassisState {
            v_x: 20.0,
            v_y: 0.1,
            yaw_rate: 0.05,
            omega: [62.6, 62.7, 62.5, 62.4],
        }
        .to_array()
        .to_vec()
    }

    fn input() -> Vec<f64> {
        DriverInputs {
            steer: 0.01,
            engine_torque: 90.0,
            gear: 3,
            ..Default::default()
        }
        .to_array()
        .to_vec()
    }

    #[test]
    fn loopback_step_equals_in_process() {
        let server = LoopbackServer::spawn(bench).unwrap();
        let mut remote = RemotePredictor::connect(&server.address(), DEFAULT_TIMEOUT).unwrap();
        assert_eq!(remote.labels().dims(), (7, 7, 8));
        let mut local = bench();
        let dz = [10.0, -5.0, 0.0, 3.0, 1.0, 2.0, -2.0, 0.5];
        let mut x = state();
        for _ in 0..50 {
            let a = remote.step(&x, &input(), &dz).unwrap();
            let b = local.step(&x, &input(), &dz).unwrap();
            assert_eq!(a, b);
            x = a.x;
        }
        assert_eq!(remote.last_good_step(), Some(50));
    }

    #[test]
    fn version_mismatch_is_typed() {
        let addr = scripted("xbridge/0", |_, _| {});
        match RemotePredictor::connect(&addr, DEFAULT_TIMEOUT) {
            Err(BridgeError::VersionMismatch { remote, .. }) => assert_eq!(remote, "xbridge/0"),
            other => panic!("unexpected {:?}", other.err()),
        }
    }

    #[test]
    fn server_rejects_wrong_client_version() {
        let mut out = Vec::new();
        let input = "{\"type\":\"hello\",\"version\":\"xbridge/9\"}\n";
        let r = serve(&mut bench(), input.as_bytes(), &mut out);
        assert!(matches!(r, Err(BridgeError::VersionMismatch { .. })));
        assert!(String::from_utf8(out).unwrap().contains("\"type\":\"error\""));
    }

    #[test]
    fn wrong_output_length_names_field() {
        let addr = scripted(VERSION, |reader, writer| {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let reply = Record::Result {
                index: 1,
                x: vec![0.0; 7],
                y: vec![0.0; 6],
                z: vec![0.0; 8],
            };
            writer.write_all(reply.encode().unwrap().as_bytes()).unwrap();
        });
        let mut remote = RemotePredictor::connect(&addr, DEFAULT_TIMEOUT).unwrap();
        match remote.remote_step(&state(), &input(), &[0.0; 8]) {
            Err(BridgeError::Dimension { field, expected, got }) => {
                assert_eq!((field.as_str(), expected, got), ("y", 7, 6));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn close_mid_run_reports_last_good_step() {
        let addr = scripted(VERSION, |reader, writer| {
            let mut p = bench();
            for _ in 0..3 {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if let Record::Step { index, x, u, dz } = Record::decode(&line).unwrap() {
                    let r = p.step(&x, &u, &dz).unwrap();
                    let reply = Record::Result {
                        index,
                        x: r.x,
                        y: r.y,
                        z: r.z,
                    };
                    writer.write_all(reply.encode().unwrap().as_bytes()).unwrap();
                }
            }
        });
        let mut remote = RemotePredictor::connect(&addr, DEFAULT_TIMEOUT).unwrap();
        let mut x = state();
        for _ in 0..3 {
            x = remote.remote_step(&x, &input(), &[0.0; 8]).unwrap().x;
        }
        match remote.remote_step(&x, &input(), &[0.0; 8]) {
            Err(BridgeError::StreamClosed { last_good_step }) => assert_eq!(last_good_step, Some(3)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_order_and_timeout() {
        let addr = scripted(VERSION, |reader, writer| {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let reply = Record::Result {
                index: 5,
                x: vec![0.0; 7],
                y: vec![0.0; 7],
                z: vec![0.0; 8],
            };
            writer.write_all(reply.encode().unwrap().as_bytes()).unwrap();
        });
        let mut remote = RemotePredictor::connect(&addr, DEFAULT_TIMEOUT).unwrap();
        assert!(matches!(
            remote.remote_step(&state(), &input(), &[0.0; 8]),
            Err(BridgeError::OutOfOrder { expected: 1, got: 5 })
        ));

        let silent = scripted(VERSION, |reader, _| {
            let mut line = String::new();
            let _ = reader.read_line(&mut line);
            thread::sleep(Duration::from_millis(500));
        });
        let mut remote = RemotePredictor::connect(&silent, Duration::from_millis(100)).unwrap();
        assert!(matches!(
            remote.remote_step(&state(), &input(), &[0.0; 8]),
            Err(BridgeError::Timeout(_))
        ));
    }

    #[test]
    fn server_enforces_step_order() {
        let script = [
            Record::Hello { version: VERSION.into() },
            Record::Step {
                index: 2,
                x: state(),
                u: input(),
                dz: vec![0.0; 8],
            },
        ];
        let text: String = script.iter().map(|r| r.encode().unwrap()).collect();
        let mut out = Vec::new();
        let r = serve(&mut bench(), text.as_bytes(), &mut out);
        assert!(matches!(r, Err(BridgeError::OutOfOrder { expected: 1, got: 2 })));
    }

    #[test]
    fn malformed_record_aborts_session() {
        let text = format!("{}garbage\n", Record::Hello { version: VERSION.into() }.encode().unwrap());
        let mut out = Vec::new();
        assert!(matches!(serve(&mut bench(), text.as_bytes(), &mut out), Err(BridgeError::Malformed(_))));
    }
}
