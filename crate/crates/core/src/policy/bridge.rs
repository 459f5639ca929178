//! Hosts a policy running in a child process. Messages are newline-delimited
//! JSON over the child's stdin and stdout:
//!
//! ```text
//! -> {"type":"init","domain":..,"predicates":[..],"objects":[..],"goal":[..]}
//! <- {"type":"ready"}
//! -> {"type":"choose","state":[[pred,arg..]..],"successors":[{"action":[name,arg..],"state":[..]}..],"forbidden":[i..]}
//! <- {"type":"choice","index":i}  or  {"type":"values","values":[v..]}
//! -> {"type":"shutdown"}
//! ```
//!
//! Any failure kills the child; the next rollout starts a fresh one.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rand::RngCore;
use serde_json::{json, Value};

use super::{argmin_allowed, Candidates, Policy, PolicyError};
use crate::planning::{Instance, State};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
const STDERR_TAIL: usize = 2048;

#[derive(Clone, Debug)]
pub struct BridgeCommand {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
}

impl BridgeCommand {
    /// `argv[0]` is the program. Panics on an empty vector.
    pub fn new(argv: Vec<String>) -> Self {
        let mut it = argv.into_iter();
        let program = it.next().expect("bridge command needs a program");
        BridgeCommand {
            program,
            args: it.collect(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

struct Session {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    stderr: Arc<Mutex<Vec<u8>>>,
}

impl Session {
    fn spawn(cmd: &BridgeCommand) -> Result<Self, PolicyError> {
        let mut child = Command::new(&cmd.program)
            .args(&cmd.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| PolicyError::ChildExit(format!("cannot start `{}`: {e}", cmd.program)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stderr_pipe = child.stderr.take().expect("piped stderr");

        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        // Keep the tail of stderr for diagnostics.
        let stderr = Arc::new(Mutex::new(Vec::new()));
        let sink = stderr.clone();
        thread::spawn(move || {
            let mut buf = [0u8; 512];
            while let Ok(n) = stderr_pipe.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut tail = sink.lock().unwrap();
                tail.extend_from_slice(&buf[..n]);
                let excess = tail.len().saturating_sub(STDERR_TAIL);
                tail.drain(..excess);
            }
        });
        Ok(Session {
            child,
            stdin,
            lines,
            stderr,
        })
    }

    fn send(&mut self, msg: &Value) -> Result<(), PolicyError> {
        let mut line = msg.to_string();
        line.push('\n');
        self.stdin
            .write_all(line.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| self.exited(&format!("write failed: {e}")))
    }

    fn recv(&mut self, timeout: Duration) -> Result<Value, PolicyError> {
        let line = match self.lines.recv_timeout(timeout) {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => return Err(self.exited(&format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => {
                return Err(PolicyError::Timeout(timeout.as_millis() as u64))
            }
            Err(RecvTimeoutError::Disconnected) => return Err(self.exited("stdout closed")),
        };
        serde_json::from_str(&line)
            .map_err(|e| PolicyError::Protocol(format!("malformed reply `{line}`: {e}")))
    }

    fn exited(&mut self, what: &str) -> PolicyError {
        // Give the child a moment to finish so the status is available.
        let deadline = Instant::now() + Duration::from_millis(500);
        let status = loop {
            match self.child.try_wait() {
                Ok(Some(s)) => break Some(s),
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => break None,
            }
        };
        let tail = String::from_utf8_lossy(&self.stderr.lock().unwrap()).trim().to_owned();
        let mut msg = what.to_owned();
        if let Some(s) = status {
            msg.push_str(&format!(" ({s})"));
        }
        if !tail.is_empty() {
            msg.push_str(&format!("; stderr: {tail}"));
        }
        PolicyError::ChildExit(msg)
    }

    fn shutdown(mut self) {
        let _ = self.send(&json!({"type": "shutdown"}));
        let deadline = Instant::now() + Duration::from_secs(1);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }

    fn kill(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub struct BridgePolicy {
    command: BridgeCommand,
    session: Option<Session>,
}

impl BridgePolicy {
    pub fn new(command: BridgeCommand) -> Self {
        BridgePolicy {
            command,
            session: None,
        }
    }

    fn session(&mut self) -> Result<&mut Session, PolicyError> {
        if self.session.is_none() {
            self.session = Some(Session::spawn(&self.command)?);
        }
        Ok(self.session.as_mut().unwrap())
    }

    /// Runs one request; on any error the child is discarded.
    fn exchange(&mut self, msg: &Value) -> Result<Value, PolicyError> {
        let timeout = self.command.timeout;
        let session = self.session()?;
        let result = session.send(msg).and_then(|_| session.recv(timeout));
        if result.is_err() {
            if let Some(s) = self.session.take() {
                s.kill();
            }
        }
        result
    }

    fn fail<T>(&mut self, err: PolicyError) -> Result<T, PolicyError> {
        if let Some(s) = self.session.take() {
            s.kill();
        }
        Err(err)
    }
}

impl Drop for BridgePolicy {
    fn drop(&mut self) {
        if let Some(s) = self.session.take() {
            s.shutdown();
        }
    }
}

fn encode_state(instance: &Instance, state: &State) -> Value {
    Value::Array(
        state
            .atoms()
            .iter()
            .map(|a| json!(instance.atom_names(a)))
            .collect(),
    )
}

/// The `init` message for an instance.
pub fn init_message(instance: &Instance) -> Value {
    let model = instance.model();
    let predicates: Vec<Value> = model
        .predicates
        .iter()
        .map(|p| json!({"name": p.name, "arity": p.arg_types.len(), "types": p.arg_types}))
        .collect();
    let objects: Vec<Value> = instance
        .objects()
        .iter()
        .map(|o| json!({"name": o.name, "type": o.type_name}))
        .collect();
    let goal: Vec<Value> = instance.goal().iter().map(|a| json!(instance.atom_names(a))).collect();
    json!({
        "type": "init",
        "domain": instance.domain(),
        "predicates": predicates,
        "objects": objects,
        "goal": goal,
    })
}

/// The `choose` message for one decision.
pub fn choose_message(
    instance: &Instance,
    state: &State,
    candidates: &Candidates,
    forbidden: &[bool],
) -> Value {
    let successors: Vec<Value> = candidates
        .iter()
        .map(|(a, s)| json!({"action": instance.action_names(a), "state": encode_state(instance, s)}))
        .collect();
    let forbidden: Vec<usize> = (0..forbidden.len()).filter(|&i| forbidden[i]).collect();
    json!({
        "type": "choose",
        "state": encode_state(instance, state),
        "successors": successors,
        "forbidden": forbidden,
    })
}

/// Validates a reply to `choose` and turns it into a successor index.
pub fn decode_choice(reply: &Value, forbidden: &[bool]) -> Result<Option<usize>, PolicyError> {
    let bad = |m: String| Err(PolicyError::Protocol(m));
    match reply.get("type").and_then(Value::as_str) {
        Some("choice") => match reply.get("index") {
            Some(Value::Null) => Ok(None),
            Some(v) => {
                let Some(i) = v.as_u64().map(|i| i as usize) else {
                    return bad(format!("choice index `{v}` is not a non-negative integer"));
                };
                if i >= forbidden.len() {
                    bad(format!("choice index {i} out of range 0..{}", forbidden.len()))
                } else if forbidden[i] {
                    bad(format!("choice index {i} is forbidden"))
                } else {
                    Ok(Some(i))
                }
            }
            None => bad("choice without index".into()),
        },
        Some("values") => {
            let Some(values) = reply.get("values").and_then(Value::as_array) else {
                return bad("values reply without a values array".into());
            };
            if values.len() != forbidden.len() {
                return bad(format!(
                    "{} values for {} successors",
                    values.len(),
                    forbidden.len()
                ));
            }
            let nums: Option<Vec<f64>> = values.iter().map(Value::as_f64).collect();
            match nums {
                Some(v) => Ok(argmin_allowed(&v, forbidden)),
                None => bad("values must be numbers".into()),
            }
        }
        _ => bad(format!("unexpected reply `{reply}`")),
    }
}

impl Policy for BridgePolicy {
    fn name(&self) -> String {
        format!("bridge({})", self.command.program)
    }

    fn begin(&mut self, instance: &Instance, _rng: &mut dyn RngCore) -> Result<(), PolicyError> {
        let reply = self.exchange(&init_message(instance))?;
        if reply.get("type").and_then(Value::as_str) != Some("ready") {
            return self.fail(PolicyError::Protocol(format!("expected ready, got `{reply}`")));
        }
        Ok(())
    }

    fn choose(
        &mut self,
        instance: &Instance,
        state: &State,
        candidates: &Candidates,
        forbidden: &[bool],
        _rng: &mut dyn RngCore,
    ) -> Result<Option<usize>, PolicyError> {
        let reply = self.exchange(&choose_message(instance, state, candidates, forbidden))?;
        match decode_choice(&reply, forbidden) {
            Ok(c) => Ok(c),
            Err(e) => self.fail(e),
        }
    }
}
