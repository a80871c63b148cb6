//! Pre/post-condition cases for every event kind, checked on every reachable
//! state. The predicates are written against the state record directly and
//! share no code with the kernel.

use rayon::prelude::*;

use super::ReachableSet;
use crate::config::{ChannelRef, Direction, DomainId, PartId, PortId, PortIdStrategy, PortMode, PortRef};
use crate::kernel::{
    Event, EventKind, Message, PortBuffer, ReturnCode, SendMode, State, TransferMode, Value,
};
use crate::model::Model;

pub type Pre = fn(&Model, &State, &Event) -> bool;
pub type Post = fn(&Model, &State, &Event, &State) -> bool;

#[derive(Clone, Copy)]
pub struct HoareCase {
    pub name: &'static str,
    pub kind: EventKind,
    pub pre: Pre,
    pub post: Post,
}

impl std::fmt::Debug for HoareCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HoareCase({}, {})", self.name, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoareResult {
    pub name: &'static str,
    pub kind: EventKind,
    /// (state, event) instances satisfying the precondition.
    pub checked: usize,
    pub holds: bool,
    /// First failing state index and event.
    pub failure: Option<(usize, Event)>,
}

fn caller(s: &State) -> Option<PartId> {
    s.current.partition()
}

fn ret(s: &State) -> Option<Value> {
    s.local(s.current).ret
}

const FAIL: Option<Value> = Some(Value::Code(ReturnCode::InvalidParam));
const OK: Option<Value> = Some(Value::Code(ReturnCode::NoError));

fn port_ref(e: &Event) -> PortRef {
    match *e {
        Event::CreateSamplingPort(r)
        | Event::CreateQueuingPort(r)
        | Event::GetSamplingPortId(r)
        | Event::GetQueuingPortId(r) => r,
        _ => unreachable!("event names a port"),
    }
}

fn port_id(e: &Event) -> PortId {
    match *e {
        Event::WriteSamplingMessage(id, _)
        | Event::SendQueuingMessage(id, _)
        | Event::ReadSamplingMessage(id)
        | Event::GetSamplingPortStatus(id)
        | Event::ReceiveQueuingMessage(id)
        | Event::GetQueuingPortStatus(id)
        | Event::ClearQueuingPort(id) => id,
        _ => unreachable!("event carries a port id"),
    }
}

fn message(e: &Event) -> Message {
    match *e {
        Event::WriteSamplingMessage(_, m) | Event::SendQueuingMessage(_, m) => m,
        _ => unreachable!("event carries a message"),
    }
}

fn channel(e: &Event) -> ChannelRef {
    match *e {
        Event::TransferSampling(c) | Event::TransferQueuing(c) => c,
        _ => unreachable!("event names a channel"),
    }
}

fn mode_of(e: &Event) -> PortMode {
    match e.kind() {
        EventKind::CreateSamplingPort
        | EventKind::GetSamplingPortId
        | EventKind::WriteSamplingMessage
        | EventKind::ReadSamplingMessage
        | EventKind::GetSamplingPortStatus => PortMode::Sampling,
        _ => PortMode::Queuing,
    }
}

/// The port named by `id` when it belongs to the running partition and has
/// the given mode (and direction, if any).
fn owned(m: &Model, s: &State, id: PortId, mode: PortMode, dir: Option<Direction>) -> Option<PortRef> {
    let p = caller(s)?;
    let port = s.comm.ports.get(&id)?;
    let conf = m.cfg.port(port.port);
    let ok = s.comm.port_owner.get(&id) == Some(&p)
        && conf.mode == mode
        && dir.is_none_or(|d| d == conf.direction);
    ok.then_some(port.port)
}

fn queue(s: &State, id: PortId) -> Vec<Message> {
    match s.comm.buffer(id) {
        Some(PortBuffer::Queuing(q)) => q.iter().copied().collect(),
        _ => Vec::new(),
    }
}

fn slot(s: &State, id: PortId) -> Option<Message> {
    match s.comm.buffer(id) {
        Some(PortBuffer::Sampling(m)) => *m,
        _ => None,
    }
}

/// Only the running domain's return register and the communication state
/// may change; `comm_same` additionally pins the latter.
fn frame(s: &State, t: &State, comm_same: bool) -> bool {
    s.current == t.current
        && s.part_mode == t.part_mode
        && (!comm_same || s.comm == t.comm)
        && s.locals
            .iter()
            .all(|(d, l)| *d == s.current || t.locals.get(d) == Some(l))
}

fn running(s: &State) -> bool {
    caller(s).is_some()
}

// Port creation.

fn create_ok(m: &Model, s: &State, e: &Event) -> bool {
    let r = port_ref(e);
    let conf = m.cfg.port(r);
    caller(s) == Some(conf.owner) && conf.mode == mode_of(e) && !s.comm.ids_by_name.contains_key(&r)
}

fn create_returns_existing(_: &Model, _: &State, _: &Event, t: &State) -> bool {
    match ret(t) {
        Some(Value::PortId(id)) => t.comm.ports.contains_key(&id),
        _ => true,
    }
}

fn create_success(m: &Model, s: &State, e: &Event, t: &State) -> bool {
    let r = port_ref(e);
    let Some(Value::PortId(id)) = ret(t) else {
        return false;
    };
    let fresh = !s.comm.created.contains(&id);
    let empty = t.comm.buffer(id).is_some_and(|b| b.is_empty() && b.mode() == mode_of(e));
    fresh
        && empty
        && t.comm.ids_by_name.get(&r) == Some(&id)
        && t.comm.port_owner.get(&id) == Some(&m.cfg.port(r).owner)
        && t.comm.created.len() == s.comm.created.len() + 1
        && frame(s, t, false)
}

fn create_counter_pre(m: &Model, s: &State, e: &Event) -> bool {
    m.cfg.portid_strategy == PortIdStrategy::RuntimeCounter && create_ok(m, s, e)
}

fn create_counter_post(_: &Model, s: &State, _: &Event, t: &State) -> bool {
    let Some(next) = s.next_port_id else {
        return false;
    };
    ret(t) == Some(Value::PortId(PortId(next))) && t.next_port_id == Some(next + 1)
}

fn fails_cleanly(_: &Model, s: &State, _: &Event, t: &State) -> bool {
    ret(t) == FAIL && s.comm == t.comm && s.next_port_id == t.next_port_id && frame(s, t, true)
}

fn create_bad(m: &Model, s: &State, e: &Event) -> bool {
    running(s) && !create_ok(m, s, e)
}

// Lookups by name.

fn id_known(m: &Model, s: &State, e: &Event) -> bool {
    let r = port_ref(e);
    let conf = m.cfg.port(r);
    caller(s) == Some(conf.owner) && conf.mode == mode_of(e) && s.comm.ids_by_name.contains_key(&r)
}

fn id_returned(_: &Model, s: &State, e: &Event, t: &State) -> bool {
    let id = s.comm.ids_by_name[&port_ref(e)];
    ret(t) == Some(Value::PortId(id)) && frame(s, t, true)
}

fn id_unknown(m: &Model, s: &State, e: &Event) -> bool {
    running(s) && !id_known(m, s, e)
}

// Operations on port ids.

fn valid_with(dir: Option<Direction>) -> impl Fn(&Model, &State, &Event) -> bool {
    move |m, s, e| owned(m, s, port_id(e), mode_of(e), dir).is_some()
}

fn valid_source(m: &Model, s: &State, e: &Event) -> bool {
    valid_with(Some(Direction::Source))(m, s, e)
}

fn valid_dest(m: &Model, s: &State, e: &Event) -> bool {
    valid_with(Some(Direction::Destination))(m, s, e)
}

fn invalid_source(m: &Model, s: &State, e: &Event) -> bool {
    running(s) && !valid_source(m, s, e)
}

fn invalid_dest(m: &Model, s: &State, e: &Event) -> bool {
    running(s) && !valid_dest(m, s, e)
}

fn invalid_any(m: &Model, s: &State, e: &Event) -> bool {
    running(s) && !valid_with(None)(m, s, e)
}

fn dest_nonempty(m: &Model, s: &State, e: &Event) -> bool {
    valid_dest(m, s, e) && !queue(s, port_id(e)).is_empty()
}

fn dest_empty(m: &Model, s: &State, e: &Event) -> bool {
    valid_dest(m, s, e) && queue(s, port_id(e)).is_empty()
}

fn source_room(m: &Model, s: &State, e: &Event) -> bool {
    valid_source(m, s, e) && {
        let r = s.comm.ports[&port_id(e)].port;
        queue(s, port_id(e)).len() < m.cfg.capacity(r)
    }
}

fn source_full(m: &Model, s: &State, e: &Event) -> bool {
    valid_source(m, s, e) && !source_room(m, s, e)
}

/// Everything but the buffer of `id` is untouched.
fn only_buffer_changed(s: &State, t: &State, id: PortId) -> bool {
    let mut t2 = t.comm.clone();
    if let (Some(p), Some(q)) = (t2.ports.get_mut(&id), s.comm.ports.get(&id)) {
        p.buffer = q.buffer.clone();
    }
    t2 == s.comm && frame(s, t, false)
}

// Transmission.

fn transmitter_runs(s: &State) -> bool {
    s.current == DomainId::Transmitter
}

fn chan_ids(m: &Model, s: &State, e: &Event) -> Option<(PortId, Vec<PortId>)> {
    let c = m.cfg.channel(channel(e));
    let src = *s.comm.ids_by_name.get(&c.source)?;
    let dsts = c
        .destinations
        .iter()
        .map(|r| s.comm.ids_by_name.get(r).copied())
        .collect::<Option<Vec<_>>>()?;
    Some((src, dsts))
}

fn tq_ready(m: &Model, s: &State, e: &Event) -> Option<(PortId, PortId, bool)> {
    if !transmitter_runs(s) {
        return None;
    }
    let (src, dsts) = chan_ids(m, s, e)?;
    if queue(s, src).is_empty() {
        return None;
    }
    let cap = m.cfg.channel(channel(e)).capacity;
    Some((src, dsts[0], queue(s, dsts[0]).len() >= cap))
}

fn unchanged(_: &Model, s: &State, _: &Event, t: &State) -> bool {
    s == t
}

pub fn hoare_cases() -> Vec<HoareCase> {
    use EventKind as K;
    let case = |name, kind, pre: Pre, post: Post| HoareCase { name, kind, pre, post };
    let always: Pre = |_, _, _| true;
    vec![
        // Creation.
        case("create_sampling_returns_existing_port", K::CreateSamplingPort, always, create_returns_existing),
        case("create_sampling_success", K::CreateSamplingPort, create_ok, create_success),
        case("create_sampling_rejected", K::CreateSamplingPort, create_bad, fails_cleanly),
        case("create_sampling_counter_id", K::CreateSamplingPort, create_counter_pre, create_counter_post),
        case("create_queuing_returns_existing_port", K::CreateQueuingPort, always, create_returns_existing),
        case("create_queuing_success", K::CreateQueuingPort, create_ok, create_success),
        case("create_queuing_rejected", K::CreateQueuingPort, create_bad, fails_cleanly),
        case("create_queuing_counter_id", K::CreateQueuingPort, create_counter_pre, create_counter_post),
        // Identifier lookup.
        case("get_sampling_id_found", K::GetSamplingPortId, id_known, id_returned),
        case("get_sampling_id_rejected", K::GetSamplingPortId, id_unknown, fails_cleanly),
        case("get_queuing_id_found", K::GetQueuingPortId, id_known, id_returned),
        case("get_queuing_id_rejected", K::GetQueuingPortId, id_unknown, fails_cleanly),
        // Sampling ports.
        case("write_overwrites_slot", K::WriteSamplingMessage, valid_source, |_, s, e, t| {
            let id = port_id(e);
            slot(t, id) == Some(message(e)) && ret(t) == OK && only_buffer_changed(s, t, id)
        }),
        case("write_rejected", K::WriteSamplingMessage, invalid_source, fails_cleanly),
        case("read_returns_slot", K::ReadSamplingMessage, valid_dest, |_, s, e, t| {
            ret(t) == Some(Value::Msg(slot(s, port_id(e)))) && frame(s, t, true)
        }),
        case("read_rejected", K::ReadSamplingMessage, invalid_dest, fails_cleanly),
        case("sampling_status_destination", K::GetSamplingPortStatus, valid_dest, |_, s, e, t| {
            ret(t) == Some(Value::Present(slot(s, port_id(e)).is_some())) && frame(s, t, true)
        }),
        case("sampling_status_source", K::GetSamplingPortStatus, valid_source, |_, s, _, t| {
            ret(t) == OK && frame(s, t, true)
        }),
        case("sampling_status_rejected", K::GetSamplingPortStatus, invalid_any, fails_cleanly),
        // Queuing ports.
        case("send_enqueues", K::SendQueuingMessage, source_room, |_, s, e, t| {
            let id = port_id(e);
            let mut expect = queue(s, id);
            expect.push(message(e));
            queue(t, id) == expect && ret(t) == OK && only_buffer_changed(s, t, id)
        }),
        case("send_full_queue", K::SendQueuingMessage, source_full, |m, s, _, t| {
            let code = match m.variant.send_mode {
                SendMode::ArincStatus => ReturnCode::NotAvailable,
                SendMode::MayLost => ReturnCode::NoError,
            };
            ret(t) == Some(Value::Code(code)) && frame(s, t, true)
        }),
        case("send_rejected", K::SendQueuingMessage, invalid_source, fails_cleanly),
        case("send_needs_running_partition", K::SendQueuingMessage, |_, s, _| !running(s), unchanged),
        case("receive_takes_head", K::ReceiveQueuingMessage, dest_nonempty, |_, s, e, t| {
            let id = port_id(e);
            let before = queue(s, id);
            ret(t) == Some(Value::Msg(Some(before[0])))
                && queue(t, id) == before[1..]
                && only_buffer_changed(s, t, id)
        }),
        case("receive_empty_queue", K::ReceiveQueuingMessage, dest_empty, |_, s, _, t| {
            ret(t) == Some(Value::Msg(None)) && frame(s, t, true)
        }),
        case("receive_rejected", K::ReceiveQueuingMessage, invalid_dest, fails_cleanly),
        case("queuing_status_destination", K::GetQueuingPortStatus, valid_dest, |_, s, e, t| {
            ret(t) == Some(Value::Count(queue(s, port_id(e)).len())) && frame(s, t, true)
        }),
        case("queuing_status_source", K::GetQueuingPortStatus, valid_source, |_, s, _, t| {
            ret(t) == OK && frame(s, t, true)
        }),
        case("queuing_status_rejected", K::GetQueuingPortStatus, invalid_any, fails_cleanly),
        case("clear_empties_queue", K::ClearQueuingPort, valid_dest, |_, s, e, t| {
            let id = port_id(e);
            queue(t, id).is_empty() && ret(t) == OK && only_buffer_changed(s, t, id)
        }),
        case("clear_rejected", K::ClearQueuingPort, invalid_dest, fails_cleanly),
        // Scheduling.
        case(
            "schedule_switches_domain",
            K::Schedule,
            |m, _, e| match e {
                Event::Schedule(DomainId::Partition(p)) => m.cfg.is_partition(*p),
                Event::Schedule(DomainId::Transmitter) => true,
                _ => false,
            },
            |_, s, e, t| {
                let Event::Schedule(target) = e else { return false };
                t.current == *target
                    && s.comm == t.comm
                    && s.locals == t.locals
                    && s.part_mode == t.part_mode
            },
        ),
        case(
            "schedule_rejects_scheduler",
            K::Schedule,
            |_, _, e| matches!(e, Event::Schedule(DomainId::Scheduler)),
            unchanged,
        ),
        // Transmission.
        case(
            "transfer_sampling_copies",
            K::TransferSampling,
            |m, s, e| {
                transmitter_runs(s)
                    && chan_ids(m, s, e).is_some_and(|(src, _)| slot(s, src).is_some())
            },
            |m, s, e, t| {
                let (src, dsts) = chan_ids(m, s, e).unwrap();
                let msg = slot(s, src);
                dsts.iter().all(|&d| slot(t, d) == msg)
                    && slot(t, src) == msg
                    && s.locals == t.locals
                    && s.current == t.current
            },
        ),
        case(
            "transfer_sampling_idle",
            K::TransferSampling,
            |m, s, e| {
                !transmitter_runs(s)
                    || chan_ids(m, s, e).is_none_or(|(src, _)| slot(s, src).is_none())
            },
            unchanged,
        ),
        case(
            "transfer_queuing_moves_head",
            K::TransferQueuing,
            |m, s, e| tq_ready(m, s, e).is_some_and(|(_, _, full)| !full),
            |m, s, e, t| {
                let (src, dst, _) = tq_ready(m, s, e).unwrap();
                let (a, b) = (queue(s, src), queue(s, dst));
                let mut b2 = b.clone();
                b2.push(a[0]);
                queue(t, src) == a[1..] && queue(t, dst) == b2 && s.locals == t.locals
            },
        ),
        case(
            "transfer_queuing_full_destination",
            K::TransferQueuing,
            |m, s, e| tq_ready(m, s, e).is_some_and(|(_, _, full)| full),
            |m, s, e, t| {
                let (src, dst, _) = tq_ready(m, s, e).unwrap();
                let kept = match m.variant.transfer_mode {
                    TransferMode::ArincNoLoss => queue(s, src),
                    TransferMode::MayLost => queue(s, src)[1..].to_vec(),
                };
                queue(t, src) == kept && queue(t, dst) == queue(s, dst) && s.locals == t.locals
            },
        ),
        case(
            "transfer_queuing_idle",
            K::TransferQueuing,
            |m, s, e| {
                !transmitter_runs(s)
                    || chan_ids(m, s, e).is_none_or(|(src, _)| queue(s, src).is_empty())
            },
            unchanged,
        ),
        // Partition-internal steps and boot.
        case("action_sets_token", K::PartitionAction, |_, s, _| running(s), |_, s, e, t| {
            let Event::PartitionAction(tok) = e else { return false };
            ret(t) == Some(Value::Token(*tok)) && frame(s, t, true)
        }),
        case("action_needs_running_partition", K::PartitionAction, |_, s, _| !running(s), unchanged),
        case("init_never_steps", K::Init, always, unchanged),
    ]
}

/// Events a case of `kind` is tried on: the alphabet's, plus the ones the
/// alphabet never offers.
fn events_for(m: &Model, kind: EventKind) -> Vec<Event> {
    let mut out: Vec<Event> = m.alphabet.iter().copied().filter(|e| e.kind() == kind).collect();
    match kind {
        EventKind::Init => out.push(Event::Init),
        EventKind::Schedule => out.push(Event::Schedule(DomainId::Scheduler)),
        _ => {}
    }
    out
}

pub fn run_hoare_suite(m: &Model, rs: &ReachableSet, cases: &[HoareCase]) -> Vec<HoareResult> {
    cases
        .par_iter()
        .map(|c| {
            let events = events_for(m, c.kind);
            let mut checked = 0;
            let mut failure = None;
            'states: for (i, s) in rs.states.iter().enumerate() {
                for e in &events {
                    if (c.pre)(m, s, e) {
                        checked += 1;
                        if !(c.post)(m, s, e, &m.exec(s, e)) {
                            failure = Some((i, *e));
                            break 'states;
                        }
                    }
                }
            }
            HoareResult {
                name: c.name,
                kind: c.kind,
                checked,
                holds: failure.is_none(),
                failure,
            }
        })
        .collect()
}
