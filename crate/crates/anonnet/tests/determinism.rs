//! Replays are byte-identical and node labels carry no information: the same
//! config traces to the same bytes twice, and relabeling the nodes of a run
//! permutes its outputs without changing anything else.

use std::io::Write;
use std::sync::{Arc, Mutex};

use anonnet::graph::ConstituentGraph;
use anonnet::params::Epsilon;
use anonnet::protocol::multiplicity::run_multiplicity;
use anonnet::protocol::rmc::run_rmc;
use anonnet::protocol::{ExpansionMode, Reduction};
use anonnet::schedule::Schedule;
use anonnet::sim::{RunCtx, Tracer};

const CAP: u64 = 1_000_000_000_000;
const TEST_REDUCTION: Reduction = Reduction { p_div: 8, r_div: 64, c_div: 4 };

/// A writer whose bytes stay readable after the tracer is dropped.
#[derive(Clone, Default)]
struct SharedBuf(Arc<Mutex<Vec<u8>>>);

impl SharedBuf {
    fn contents(&self) -> Vec<u8> {
        self.0.lock().unwrap().clone()
    }
}

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

fn traced_count_bytes(seed_schedule: &Schedule, holders: &[bool]) -> (Vec<u64>, Vec<u8>) {
    let buf = SharedBuf::default();
    let tracer = Tracer::new(Box::new(buf.clone()));
    let mut ctx = RunCtx::new(CAP).with_tracer(tracer);
    let out = run_multiplicity(
        seed_schedule,
        holders,
        1,
        &ExpansionMode::Exact,
        TEST_REDUCTION,
        1,
        &mut ctx,
    )
    .unwrap();
    ctx.finish().unwrap();
    (out.per_node, buf.contents())
}

#[test]
fn traced_runs_are_byte_identical() {
    let schedule = Schedule::random_connected(4, 1, 2, 21).unwrap();
    let holders = [true, false, true, true];
    let (counts_a, bytes_a) = traced_count_bytes(&schedule, &holders);
    let (counts_b, bytes_b) = traced_count_bytes(&schedule, &holders);
    assert!(!bytes_a.is_empty(), "the trace must not be empty");
    assert_eq!(counts_a, counts_b);
    assert_eq!(bytes_a, bytes_b, "same config must trace to the same bytes");
}

#[test]
fn node_relabeling_permutes_outputs_only() {
    let schedule = Schedule::static_graph(ConstituentGraph::path(4), 1, "static-path").unwrap();
    let perm: [u32; 4] = [2, 0, 3, 1];
    let relabeled = schedule.permuted(&perm);

    let supervisors = [true, true, false, false];
    let mut moved = [false; 4];
    for (u, &flag) in supervisors.iter().enumerate() {
        moved[perm[u] as usize] = flag;
    }

    let mut ctx_a = RunCtx::new(CAP);
    let a = run_rmc(
        &schedule, &supervisors, Epsilon::integer(1), &ExpansionMode::Exact,
        Reduction::NONE, &mut ctx_a,
    )
    .unwrap();
    let mut ctx_b = RunCtx::new(CAP);
    let b = run_rmc(
        &relabeled, &moved, Epsilon::integer(1), &ExpansionMode::Exact,
        Reduction::NONE, &mut ctx_b,
    )
    .unwrap();

    let mut expected = [0u64; 4];
    for (u, &v) in a.per_node.iter().enumerate() {
        expected[perm[u] as usize] = v;
    }
    assert_eq!(expected.to_vec(), b.per_node);
    assert_eq!(a.estimate_path, b.estimate_path);
    assert_eq!(a.rounds, b.rounds, "relabeling must not change the round count");
}
