//! Host side of the external detector protocol.
//!
//! One JSON object per line on the child's stdin/stdout:
//!
//! ```text
//! host  -> {"hello": 1}
//! child -> {"hello": 1, "name": "...", "version": "..."}
//! host  -> {"id": 7, "tile": "/tmp/.../req-7.ftl"}
//! child -> {"id": 7, "mask": "/path/out.fmk"}   or   {"id": 7, "error": "..."}
//! ```

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tempfile::TempDir;

use super::DetectorError;
use crate::raster::io::{read_mask_expecting, write_tile};
use crate::raster::{FireMask, MultiSpectralTile};

pub struct ExternalSession {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<String>>,
    stderr_thread: Option<JoinHandle<()>>,
    timeout: Duration,
    next_id: u64,
    scratch: TempDir,
    name: String,
    version: String,
    closed: bool,
}

enum Recv {
    Line(String),
    Failed(DetectorError),
}

impl ExternalSession {
    pub fn start(command: &[String], working_dir: Option<&Path>, timeout: Duration) -> Result<Self, DetectorError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| DetectorError::InvalidSpec("external command is empty".into()))?;
        let mut cmd = Command::new(program);
        cmd.args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped());
        if let Some(d) = working_dir {
            cmd.current_dir(d);
        }
        let mut child = cmd.spawn().map_err(|source| DetectorError::Spawn {
            command: command.join(" "),
            source,
        })?;

        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });

        let stderr = Arc::new(Mutex::new(String::new()));
        let mut err_pipe = child.stderr.take().expect("piped stderr");
        let sink = Arc::clone(&stderr);
        let stderr_thread = thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = err_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                sink.lock()
                    .expect("stderr lock")
                    .push_str(&String::from_utf8_lossy(&buf[..n]));
            }
        });

        let mut session = ExternalSession {
            stdin: child.stdin.take(),
            child,
            lines,
            stderr,
            stderr_thread: Some(stderr_thread),
            timeout,
            next_id: 1,
            scratch: tempfile::Builder::new().prefix("firecase-det-").tempdir()?,
            name: String::new(),
            version: String::new(),
            closed: false,
        };
        session.handshake()?;
        Ok(session)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Everything the child wrote to stderr so far.
    pub fn stderr(&self) -> String {
        self.stderr.lock().expect("stderr lock").clone()
    }

    fn protocol(&mut self, message: String) -> DetectorError {
        self.shutdown(true);
        DetectorError::Protocol {
            message,
            stderr: self.stderr(),
        }
    }

    fn handshake(&mut self) -> Result<(), DetectorError> {
        self.send(&json!({"hello": 1}))?;
        let deadline = Instant::now() + self.timeout;
        let line = match self.recv(deadline) {
            Recv::Line(l) => l,
            Recv::Failed(e) => return Err(e),
        };
        let v: Value = match serde_json::from_str(&line) {
            Ok(v) => v,
            Err(_) => return Err(self.protocol(format!("handshake reply is not JSON: {line}"))),
        };
        let name = v.get("name").and_then(Value::as_str);
        let version = v.get("version").and_then(Value::as_str);
        match (v.get("hello").and_then(Value::as_u64), name, version) {
            (Some(1), Some(n), Some(ver)) => {
                self.name = n.to_string();
                self.version = ver.to_string();
                Ok(())
            }
            _ => Err(self.protocol(format!("bad handshake reply: {line}"))),
        }
    }

    fn send(&mut self, msg: &Value) -> Result<(), DetectorError> {
        let Some(stdin) = self.stdin.as_mut() else {
            return Err(DetectorError::Protocol {
                message: "session is closed".into(),
                stderr: self.stderr(),
            });
        };
        let mut line = msg.to_string();
        line.push('\n');
        if stdin.write_all(line.as_bytes()).and_then(|_| stdin.flush()).is_err() {
            return Err(self.exited());
        }
        Ok(())
    }

    fn exited(&mut self) -> DetectorError {
        self.shutdown(false);
        let status = self
            .child
            .try_wait()
            .ok()
            .flatten()
            .map(|s| s.to_string())
            .unwrap_or_else(|| "unknown status".into());
        DetectorError::Exited {
            status,
            stderr: self.stderr(),
        }
    }

    fn recv(&mut self, deadline: Instant) -> Recv {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(Ok(line)) => Recv::Line(line),
            Ok(Err(e)) => {
                self.shutdown(true);
                Recv::Failed(DetectorError::Io(e))
            }
            Err(RecvTimeoutError::Timeout) => {
                self.shutdown(true);
                Recv::Failed(DetectorError::Timeout {
                    seconds: self.timeout.as_secs_f64(),
                    stderr: self.stderr(),
                })
            }
            Err(RecvTimeoutError::Disconnected) => Recv::Failed(self.exited()),
        }
    }

    /// Sends one tile and waits for the matching response. Responses for
    /// earlier ids are skipped; a malformed line fails only this request.
    pub fn detect(&mut self, tile: &MultiSpectralTile) -> Result<FireMask, DetectorError> {
        if self.closed {
            return Err(DetectorError::Protocol {
                message: "session is closed".into(),
                stderr: self.stderr(),
            });
        }
        let id = self.next_id;
        self.next_id += 1;
        let path = self.scratch.path().join(format!("req-{id}.ftl"));
        write_tile(&path, tile).map_err(|e| DetectorError::Io(std::io::Error::other(e.to_string())))?;
        let result = self.exchange(id, &path, (tile.width(), tile.height()), &tile.tile_id);
        let _ = std::fs::remove_file(&path);
        result
    }

    fn exchange(
        &mut self,
        id: u64,
        tile: &Path,
        dims: (usize, usize),
        tile_id: &str,
    ) -> Result<FireMask, DetectorError> {
        self.send(&json!({"id": id, "tile": tile.to_string_lossy()}))?;
        let deadline = Instant::now() + self.timeout;
        loop {
            let line = match self.recv(deadline) {
                Recv::Line(l) => l,
                Recv::Failed(e) => return Err(e),
            };
            let v: Value = match serde_json::from_str(&line) {
                Ok(v @ Value::Object(_)) => v,
                _ => return Err(DetectorError::MalformedResponse { id, line }),
            };
            let Some(got) = v.get("id").and_then(Value::as_u64) else {
                return Err(DetectorError::MalformedResponse { id, line });
            };
            if got < id {
                continue;
            }
            if got > id {
                return Err(self.protocol(format!("response for id {got} while waiting for {id}")));
            }
            if let Some(msg) = v.get("error") {
                let message = msg.as_str().map(str::to_string).unwrap_or_else(|| msg.to_string());
                return Err(DetectorError::Remote { id, message });
            }
            let Some(mask) = v.get("mask").and_then(Value::as_str) else {
                return Err(DetectorError::MalformedResponse { id, line });
            };
            return read_mask_expecting(Path::new(mask), dims).map_err(|source| DetectorError::Mask {
                tile_id: tile_id.to_string(),
                source,
            });
        }
    }

    fn shutdown(&mut self, kill: bool) {
        if self.closed {
            return;
        }
        self.closed = true;
        self.stdin = None;
        if kill {
            let _ = self.child.kill();
        } else {
            let deadline = Instant::now() + Duration::from_secs(2);
            while Instant::now() < deadline {
                if let Ok(Some(_)) = self.child.try_wait() {
                    break;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
        if let Some(h) = self.stderr_thread.take() {
            let deadline = Instant::now() + Duration::from_millis(500);
            while !h.is_finished() && Instant::now() < deadline {
                thread::sleep(Duration::from_millis(5));
            }
            if h.is_finished() {
                let _ = h.join();
            }
        }
    }
}

impl Drop for ExternalSession {
    fn drop(&mut self) {
        self.shutdown(false);
    }
}
