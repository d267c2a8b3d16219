//! Deterministic synchronous round engine: anonymous message delivery,
//! congestion auditing, trace emission, and exact recurrence detection.
//!
//! Delivery is anonymous by construction: a node receives the multiset of
//! neighbor messages sorted by value, with no sender identity attached.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ConstituentGraph, GraphError};
use crate::params::ParamError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("round cap {cap} exceeded before termination")]
    RoundCap { cap: u64 },
    #[error("message of {bits} bits at round {round} exceeds the {bound}-bit bound")]
    Congestion { round: u64, bits: u32, bound: u32 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Schedule(#[from] crate::schedule::ScheduleError),
    #[error("trace write failed: {0}")]
    Trace(#[from] std::io::Error),
    #[error("{0}")]
    Protocol(String),
}

/// One structured log row per node per round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u64,
    pub node: u32,
    pub epoch: u64,
    pub phase: u64,
    pub block: u64,
    pub round_in_phase: u64,
    pub sent: String,
    pub sent_bits: u32,
    pub received_count: u32,
    pub phi: String,
    pub status: String,
}

/// JSON-Lines trace sink, one record per line in (round, node) order.
pub struct Tracer {
    sink: Box<dyn Write + Send>,
    records: u64,
}

impl Tracer {
    pub fn new(sink: Box<dyn Write + Send>) -> Self {
        Tracer { sink, records: 0 }
    }

    pub fn to_file(path: &std::path::Path) -> std::io::Result<Self> {
        let file = std::fs::File::create(path)?;
        Ok(Tracer::new(Box::new(std::io::BufWriter::new(file))))
    }

    pub fn write(&mut self, record: &TraceRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.sink, record)?;
        self.sink.write_all(b"\n")?;
        self.records += 1;
        Ok(())
    }

    pub fn records_written(&self) -> u64 {
        self.records
    }

    pub fn flush(&mut self) -> std::io::Result<()> {
        self.sink.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CongestionViolation {
    pub round: u64,
    pub bits: u32,
    pub bound: u32,
}

/// Tracks the widest message seen and, when a bound is armed, flags or
/// rejects messages that exceed it.
#[derive(Debug, Default)]
pub struct CongestionAudit {
    pub max_bits: u32,
    pub messages: u64,
    bound: Option<u32>,
    strict: bool,
    pub violations: Vec<CongestionViolation>,
}

impl CongestionAudit {
    pub fn new(strict: bool) -> Self {
        CongestionAudit { strict, ..CongestionAudit::default() }
    }

    /// Arms the per-epoch width bound; `None` disarms it.
    pub fn set_bound(&mut self, bound: Option<u32>) {
        self.bound = bound;
    }

    pub fn observe(&mut self, round: u64, bits: u32) -> Result<(), SimError> {
        self.messages += 1;
        self.max_bits = self.max_bits.max(bits);
        if let Some(bound) = self.bound {
            if bits > bound {
                let v = CongestionViolation { round, bits, bound };
                self.violations.push(v);
                if self.strict {
                    return Err(SimError::Congestion { round, bits, bound });
                }
            }
        }
        Ok(())
    }
}

/// Shared per-run bookkeeping threaded through every protocol loop: the
/// global round counter, the round cap, the congestion audit, and the
/// optional trace sink.
pub struct RunCtx {
    pub round: u64,
    pub cap: u64,
    pub audit: CongestionAudit,
    pub tracer: Option<Tracer>,
    fast_forward: bool,
}

impl RunCtx {
    pub fn new(cap: u64) -> Self {
        RunCtx {
            round: 0,
            cap,
            audit: CongestionAudit::new(false),
            tracer: None,
            fast_forward: true,
        }
    }

    pub fn with_tracer(mut self, tracer: Tracer) -> Self {
        self.tracer = Some(tracer);
        self
    }

    pub fn strict_congestion(mut self) -> Self {
        self.audit.strict = true;
        self
    }

    pub fn without_fast_forward(mut self) -> Self {
        self.fast_forward = false;
        self
    }

    /// Recurrence jumps are exact but skip rounds, so they are disabled
    /// whenever every round must reach the trace.
    pub fn fast_forward_enabled(&self) -> bool {
        self.fast_forward && self.tracer.is_none()
    }

    /// Claims one executable round, failing once the cap is reached.
    pub fn take_round(&mut self) -> Result<u64, SimError> {
        if self.round >= self.cap {
            if let Some(t) = self.tracer.as_mut() {
                t.flush()?;
            }
            return Err(SimError::RoundCap { cap: self.cap });
        }
        let r = self.round;
        self.round += 1;
        Ok(r)
    }

    /// Advances the counter over `count` skipped-but-accounted rounds.
    pub fn skip_rounds(&mut self, count: u64) -> Result<(), SimError> {
        let target = self.round.checked_add(count).expect("round counter fits");
        if target > self.cap {
            return Err(SimError::RoundCap { cap: self.cap });
        }
        self.round = target;
        Ok(())
    }

    pub fn trace(&mut self, record: &TraceRecord) -> Result<(), SimError> {
        if let Some(t) = self.tracer.as_mut() {
            t.write(record)?;
        }
        Ok(())
    }

    pub fn finish(&mut self) -> Result<(), SimError> {
        if let Some(t) = self.tracer.as_mut() {
            t.flush()?;
        }
        Ok(())
    }
}

/// Delivers one round of messages over `graph`: node `u` receives the
/// messages of its neighbors as a value-sorted multiset.
pub fn deliver<'a, M: Ord>(graph: &ConstituentGraph, outgoing: &'a [M]) -> Vec<Vec<&'a M>> {
    assert_eq!(graph.n(), outgoing.len(), "one outgoing message per node");
    (0..graph.n())
        .map(|u| {
            let mut inbox: Vec<&M> =
                graph.neighbors(u).into_iter().map(|v| &outgoing[v as usize]).collect();
            inbox.sort();
            inbox
        })
        .collect()
}

/// Brent cycle detection over exactly comparable states. Observing the
/// state sequence of a deterministic map, it reports the cycle length on
/// the first exact recurrence against a doubling anchor, together with the
/// payload stored when the anchor was placed.
pub struct CycleDetector<S: Eq + Clone, E: Clone = ()> {
    anchor: Option<(S, E)>,
    power: u64,
    lam: u64,
}

impl<S: Eq + Clone, E: Clone> CycleDetector<S, E> {
    pub fn new() -> Self {
        CycleDetector { anchor: None, power: 1, lam: 0 }
    }

    /// Feeds the next state of the sequence. Returns the cycle length and
    /// the anchor payload once the state equals the anchor placed exactly
    /// that many observations earlier.
    pub fn observe(&mut self, state: &S, extra: &E) -> Option<(u64, E)> {
        match &self.anchor {
            None => {
                self.anchor = Some((state.clone(), extra.clone()));
                self.power = 1;
                self.lam = 0;
                None
            }
            Some((anchor, anchor_extra)) => {
                self.lam += 1;
                if anchor == state {
                    return Some((self.lam, anchor_extra.clone()));
                }
                if self.lam == self.power {
                    self.power *= 2;
                    self.lam = 0;
                    self.anchor = Some((state.clone(), extra.clone()));
                }
                None
            }
        }
    }

    pub fn reset(&mut self) {
        self.anchor = None;
        self.power = 1;
        self.lam = 0;
    }
}

impl<S: Eq + Clone, E: Clone> Default for CycleDetector<S, E> {
    fn default() -> Self {
        CycleDetector::new()
    }
}

/// Single JSON document summarizing one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub protocol: String,
    pub n: usize,
    pub outputs: serde_json::Value,
    pub rounds: u64,
    pub max_message_bits: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimate_path: Vec<u64>,
    pub schedule: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub mode: String,
    #[serde(default)]
    pub congestion_violations: u64,
}
