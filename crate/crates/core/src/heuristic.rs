//! Branch ordering from a learned heuristic, and the `tdc-heur/1` client.
//!
//! The sidecar speaks newline-delimited JSON on its standard input and
//! output:
//!
//! ```text
//! -> {"hello":"tdc","version":"tdc-heur/1"}
//! <- {"ok":true,"model_id":"..."}
//! -> {"id":1,"nodes":[[1,0,0,0],...],"edges":[[0,3],...],"edge_features":[[...],...],"active":[0,3]}
//! <- {"id":1,"probs":{"0":0.83,"3":0.12}}
//! ```
//!
//! Each request waits at most [`REQUEST_TIMEOUT`]. Any failure puts the
//! client in degraded mode: the search falls back to creation order for the
//! rest of its run.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{encode, GraphEncoding, EDGE_FEATURES, NODE_FEATURES};
use crate::model::Dtnu;
use crate::search::{ChildOrder, Decision, DtnuState};

pub const PROTOCOL: &str = "tdc-heur/1";
pub const REQUEST_TIMEOUT: Duration = Duration::from_millis(2000);

#[derive(Debug, Error)]
pub enum HeuristicError {
    #[error("sidecar i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("sidecar closed its output")]
    Closed,
    #[error("no reply within {0:?}")]
    Timeout(Duration),
    #[error("malformed reply: {0}")]
    Malformed(String),
    #[error("handshake refused: {0}")]
    Handshake(String),
    #[error("client is degraded after an earlier failure")]
    Degraded,
}

/// Probability per active node index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeuristicRanking {
    pub probabilities: BTreeMap<usize, f64>,
}

pub trait Heuristic {
    fn rank(&mut self, g: &GraphEncoding) -> Result<HeuristicRanking, HeuristicError>;
}

/// Active decisions by descending probability; ties keep creation order.
/// Returns `None` if the ranking does not cover every active node.
pub fn order_by_ranking(g: &GraphEncoding, r: &HeuristicRanking) -> Option<Vec<Decision>> {
    let mut scored = Vec::with_capacity(g.active.len());
    for i in &g.active {
        let p = *r.probabilities.get(i)?;
        if !(0.0..=1.0).contains(&p) {
            return None;
        }
        scored.push((p, g.node_decisions[i]));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    Some(scored.into_iter().map(|(_, d)| d).collect())
}

/// Ranks the active decisions of `g`. The flag is `true` when the client
/// failed and creation order was returned instead.
pub fn rank_children(g: &GraphEncoding, client: &mut dyn Heuristic) -> (Vec<Decision>, bool) {
    let creation: Vec<Decision> = g.active.iter().map(|i| g.node_decisions[i]).collect();
    match client.rank(g) {
        Ok(r) => match order_by_ranking(g, &r) {
            Some(order) => (order, false),
            None => (creation, true),
        },
        Err(_) => (creation, true),
    }
}

/// Consults a heuristic at d-OR nodes up to a depth cutoff.
pub struct HeuristicOrder<'h> {
    pub heuristic: &'h mut dyn Heuristic,
    pub max_depth: usize,
    pub calls: u64,
    pub degraded: bool,
}

impl<'h> HeuristicOrder<'h> {
    pub fn new(heuristic: &'h mut dyn Heuristic, max_depth: usize) -> Self {
        HeuristicOrder {
            heuristic,
            max_depth,
            calls: 0,
            degraded: false,
        }
    }
}

impl ChildOrder for HeuristicOrder<'_> {
    fn order(&mut self, d: &Dtnu, state: &DtnuState, depth: usize, decisions: &mut Vec<Decision>) {
        if depth > self.max_depth || self.degraded || decisions.len() < 2 {
            return;
        }
        let g = encode(d, state);
        self.calls += 1;
        let (ranked, degraded) = rank_children(&g, self.heuristic);
        if degraded {
            self.degraded = true;
            return;
        }
        // memoized-away decisions are absent from `decisions`; keep the rest
        let mut out: Vec<Decision> = ranked
            .into_iter()
            .filter(|x| decisions.contains(x))
            .collect();
        for x in decisions.iter() {
            if !out.contains(x) {
                out.push(*x);
            }
        }
        *decisions = out;
    }
}

#[derive(Serialize)]
struct Hello<'a> {
    hello: &'a str,
    version: &'a str,
}

#[derive(Deserialize)]
struct HelloReply {
    ok: bool,
    #[serde(default)]
    model_id: String,
}

#[derive(Serialize)]
struct Request<'a> {
    id: u64,
    nodes: &'a [[u8; NODE_FEATURES]],
    edges: &'a [[usize; 2]],
    edge_features: &'a [[u8; EDGE_FEATURES]],
    active: &'a [usize],
}

#[derive(Deserialize)]
struct Reply {
    id: u64,
    probs: BTreeMap<String, f64>,
}

/// A heuristic served by an external process.
pub struct SidecarClient {
    child: Option<Child>,
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
    timeout: Duration,
    degraded: bool,
    pub model_id: String,
}

impl SidecarClient {
    /// Spawns `program args...` and performs the handshake.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, HeuristicError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = Self::over(BufReader::new(stdout), stdin, REQUEST_TIMEOUT);
        client.child = Some(child);
        client.handshake()?;
        Ok(client)
    }

    /// Splits `command` on whitespace and spawns it.
    pub fn spawn_command_line(command: &str) -> Result<Self, HeuristicError> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| HeuristicError::Handshake("empty command".into()))?;
        let args: Vec<String> = parts.collect();
        Self::spawn(&program, &args)
    }

    /// Wraps existing streams; call [`handshake`](Self::handshake) next.
    pub fn over(
        reader: impl BufRead + Send + 'static,
        writer: impl Write + Send + 'static,
        timeout: Duration,
    ) -> Self {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        SidecarClient {
            child: None,
            writer: Box::new(writer),
            lines: rx,
            next_id: 1,
            timeout,
            degraded: false,
            model_id: String::new(),
        }
    }

    pub fn is_degraded(&self) -> bool {
        self.degraded
    }

    fn send(&mut self, value: &impl Serialize) -> Result<(), HeuristicError> {
        let mut line = serde_json::to_vec(value).expect("message serializes");
        line.push(b'\n');
        self.writer.write_all(&line)?;
        self.writer.flush()?;
        Ok(())
    }

    fn receive(&mut self) -> Result<String, HeuristicError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(e.into()),
            Err(RecvTimeoutError::Timeout) => Err(HeuristicError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err(HeuristicError::Closed),
        }
    }

    pub fn handshake(&mut self) -> Result<(), HeuristicError> {
        let result = (|| {
            self.send(&Hello {
                hello: "tdc",
                version: PROTOCOL,
            })?;
            let line = self.receive()?;
            let reply: HelloReply = serde_json::from_str(&line)
                .map_err(|e| HeuristicError::Malformed(e.to_string()))?;
            if !reply.ok {
                return Err(HeuristicError::Handshake(line));
            }
            self.model_id = reply.model_id;
            Ok(())
        })();
        if result.is_err() {
            self.degraded = true;
        }
        result
    }

    fn request(&mut self, g: &GraphEncoding) -> Result<HeuristicRanking, HeuristicError> {
        let id = self.next_id;
        self.next_id += 1;
        self.send(&Request {
            id,
            nodes: &g.node_features,
            edges: &g.edges,
            edge_features: &g.edge_features,
            active: &g.active,
        })?;
        let line = self.receive()?;
        let reply: Reply =
            serde_json::from_str(&line).map_err(|e| HeuristicError::Malformed(e.to_string()))?;
        if reply.id != id {
            return Err(HeuristicError::Malformed(format!(
                "reply id {} for request {id}",
                reply.id
            )));
        }
        let mut probabilities = BTreeMap::new();
        for (k, p) in reply.probs {
            let index: usize = k
                .parse()
                .map_err(|_| HeuristicError::Malformed(format!("node index `{k}`")))?;
            probabilities.insert(index, p);
        }
        Ok(HeuristicRanking { probabilities })
    }
}

impl Heuristic for SidecarClient {
    fn rank(&mut self, g: &GraphEncoding) -> Result<HeuristicRanking, HeuristicError> {
        if self.degraded {
            return Err(HeuristicError::Degraded);
        }
        let result = self.request(g);
        if result.is_err() {
            self.degraded = true;
        }
        result
    }
}

impl Drop for SidecarClient {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimepointId;

    fn graph(decisions: &[Decision]) -> GraphEncoding {
        let n = decisions.len();
        GraphEncoding {
            node_features: vec![[1, 0, 0, 0]; n],
            edges: vec![],
            edge_features: vec![],
            active: (0..n).collect(),
            node_decisions: decisions.iter().copied().enumerate().collect(),
            d_max: 1.0,
        }
    }

    struct Fixed(Vec<f64>);

    impl Heuristic for Fixed {
        fn rank(&mut self, _: &GraphEncoding) -> Result<HeuristicRanking, HeuristicError> {
            Ok(HeuristicRanking {
                probabilities: self.0.iter().copied().enumerate().collect(),
            })
        }
    }

    struct Dead;

    impl Heuristic for Dead {
        fn rank(&mut self, _: &GraphEncoding) -> Result<HeuristicRanking, HeuristicError> {
            Err(HeuristicError::Closed)
        }
    }

    const A1: Decision = Decision::Execute(TimepointId(0));
    const A2: Decision = Decision::Execute(TimepointId(1));

    #[test]
    fn sorts_by_probability() {
        let g = graph(&[A1, Decision::Wait]);
        assert_eq!(
            rank_children(&g, &mut Fixed(vec![0.9, 0.2])),
            (vec![A1, Decision::Wait], false)
        );
        assert_eq!(
            rank_children(&g, &mut Fixed(vec![0.1, 0.2])),
            (vec![Decision::Wait, A1], false)
        );
    }

    #[test]
    fn ties_keep_creation_order() {
        let g = graph(&[A1, A2, Decision::Wait]);
        assert_eq!(
            rank_children(&g, &mut Fixed(vec![0.5, 0.5, 0.5])).0,
            vec![A1, A2, Decision::Wait]
        );
    }

    #[test]
    fn failures_fall_back() {
        let g = graph(&[A1, A2]);
        assert_eq!(rank_children(&g, &mut Dead), (vec![A1, A2], true));
        // incomplete or out-of-range rankings are failures too
        assert_eq!(
            rank_children(&g, &mut Fixed(vec![0.5])),
            (vec![A1, A2], true)
        );
        assert_eq!(
            rank_children(&g, &mut Fixed(vec![0.5, 1.5])),
            (vec![A1, A2], true)
        );
    }
}
