use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};

use crate::error::BridgeError;

/// Where an external predictor lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Address {
    /// `tcp:host:port`
    Tcp(String),
    /// `unix:/path/to/socket`
    Unix(PathBuf),
    /// `exec:program arg...`: talk over the child's stdin/stdout.
    Exec(Vec<String>),
}

impl Address {
    pub fn parse(s: &str) -> Result<Self, BridgeError> {
        let (scheme, rest) = s
            .split_once(':')
            .ok_or_else(|| BridgeError::Address(format!("`{s}`: expected scheme:target")))?;
        if rest.is_empty() {
            return Err(BridgeError::Address(format!("`{s}`: empty target")));
        }
        match scheme {
            "tcp" => Ok(Address::Tcp(rest.to_string())),
            "unix" => Ok(Address::Unix(rest.into())),
            "exec" => Ok(Address::Exec(rest.split_whitespace().map(str::to_string).collect())),
            other => Err(BridgeError::Address(format!("unknown scheme `{other}` (tcp, unix, exec)"))),
        }
    }
}

/// Both halves of an open byte stream, plus the child process for `exec:`.
pub struct Connection {
    pub reader: Box<dyn BufRead + Send>,
    pub writer: Box<dyn Write + Send>,
    pub child: Option<Child>,
}

pub fn connect(address: &Address) -> Result<Connection, BridgeError> {
    match address {
        Address::Tcp(target) => {
            let stream = TcpStream::connect(target.as_str())?;
            stream.set_nodelay(true)?;
            let reader = BufReader::new(stream.try_clone()?);
            Ok(Connection {
                reader: Box::new(reader),
                writer: Box::new(stream),
                child: None,
            })
        }
        #[cfg(unix)]
        Address::Unix(path) => {
            let stream = std::os::unix::net::UnixStream::connect(path)?;
            let reader = BufReader::new(stream.try_clone()?);
            Ok(Connection {
                reader: Box::new(reader),
                writer: Box::new(stream),
                child: None,
            })
        }
        #[cfg(not(unix))]
        Address::Unix(_) => Err(BridgeError::Address("unix sockets are not available on this platform".into())),
        Address::Exec(argv) => {
            let (program, args) = argv
                .split_first()
                .ok_or_else(|| BridgeError::Address("exec: missing command".into()))?;
            let mut child = Command::new(program)
                .args(args)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .stderr(Stdio::inherit())
                .spawn()?;
            let stdin = child.stdin.take().expect("piped stdin");
            let stdout = child.stdout.take().expect("piped stdout");
            Ok(Connection {
                reader: Box::new(BufReader::new(stdout)),
                writer: Box::new(stdin),
                child: Some(child),
            })
        }
    }
}
