use super::{
    CommState, Event, LocalStore, Message, PartitionMode, PortBuffer, PortState, ReturnCode,
    SemanticsVariant, SendMode, State, TransferMode, Value,
};
use crate::config::{
    ChannelRef, Direction, DomainId, PartId, PortId, PortIdStrategy, PortMode, PortRef, SysConfig,
};

const FAIL: Value = Value::Code(ReturnCode::InvalidParam);
const OK: Value = Value::Code(ReturnCode::NoError);

/// Boot state. Under static ids every configured port exists from the start.
pub fn init(cfg: &SysConfig) -> State {
    let mut comm = CommState::default();
    let next_port_id = match cfg.portid_strategy {
        PortIdStrategy::StaticFromConfig => {
            for r in cfg.port_refs() {
                let conf = cfg.port(r);
                let id = conf.static_id.expect("validated config has static ids");
                insert_port(&mut comm, cfg, r, id);
            }
            None
        }
        PortIdStrategy::RuntimeCounter => Some(1),
    };
    let first = cfg.partitions.first().expect("validated config has partitions");
    State {
        current: DomainId::Partition(first.id),
        part_mode: cfg.partition_ids().map(|p| (p, PartitionMode::Normal)).collect(),
        comm,
        locals: cfg.domains().into_iter().map(|d| (d, LocalStore::default())).collect(),
        next_port_id,
    }
}

fn insert_port(comm: &mut CommState, cfg: &SysConfig, r: PortRef, id: PortId) {
    let conf = cfg.port(r);
    comm.created.insert(id);
    comm.ports.insert(
        id,
        PortState {
            port: r,
            buffer: PortBuffer::empty(conf.mode),
        },
    );
    comm.port_owner.insert(id, conf.owner);
    comm.ids_by_name.insert(r, id);
}

pub fn domain_of_event(s: &State, e: &Event) -> DomainId {
    event_domain(s.current, e)
}

/// The domain of `e` while `current` runs.
pub fn event_domain(current: DomainId, e: &Event) -> DomainId {
    match e {
        Event::Schedule(_) | Event::Init => DomainId::Scheduler,
        Event::TransferSampling(_) | Event::TransferQueuing(_) => DomainId::Transmitter,
        _ => current,
    }
}

/// The running domain after `e`, given only the running domain before it.
/// Scheduling is the only event that changes it.
pub fn next_current(cfg: &SysConfig, current: DomainId, e: &Event) -> DomainId {
    match e {
        Event::Schedule(target) if valid_target(cfg, *target) => *target,
        _ => current,
    }
}

fn valid_target(cfg: &SysConfig, d: DomainId) -> bool {
    match d {
        DomainId::Transmitter => true,
        DomainId::Partition(p) => cfg.is_partition(p),
        DomainId::Scheduler => false,
    }
}

pub fn event_enabled(cfg: &SysConfig, s: &State, e: &Event) -> bool {
    match e {
        Event::Schedule(target) => valid_target(cfg, *target),
        Event::Init => false,
        Event::TransferSampling(_) | Event::TransferQueuing(_) => {
            s.current == DomainId::Transmitter
        }
        _ => match s.current {
            DomainId::Partition(p) => s.part_mode.get(&p) == Some(&PartitionMode::Normal),
            _ => false,
        },
    }
}

pub fn execute(cfg: &SysConfig, events: &[Event], s: &State, v: SemanticsVariant) -> State {
    events
        .iter()
        .fold(s.clone(), |st, e| exec_event(cfg, &st, e, v))
}

/// One step. Disabled events stutter.
pub fn exec_event(cfg: &SysConfig, s: &State, e: &Event, v: SemanticsVariant) -> State {
    if !event_enabled(cfg, s, e) {
        return s.clone();
    }
    let mut n = s.clone();
    match *e {
        Event::CreateSamplingPort(r) => create_port(cfg, &mut n, r, PortMode::Sampling),
        Event::CreateQueuingPort(r) => create_port(cfg, &mut n, r, PortMode::Queuing),
        Event::WriteSamplingMessage(id, m) => write_sampling_message(cfg, &mut n, id, m),
        Event::ReadSamplingMessage(id) => read_sampling_message(cfg, &mut n, id),
        Event::GetSamplingPortId(r) => get_port_id(cfg, &mut n, r, PortMode::Sampling),
        Event::GetQueuingPortId(r) => get_port_id(cfg, &mut n, r, PortMode::Queuing),
        Event::GetSamplingPortStatus(id) => get_port_status(cfg, &mut n, id, PortMode::Sampling),
        Event::GetQueuingPortStatus(id) => get_port_status(cfg, &mut n, id, PortMode::Queuing),
        Event::SendQueuingMessage(id, m) => send_queuing_message(cfg, &mut n, id, m, v.send_mode),
        Event::ReceiveQueuingMessage(id) => receive_queuing_message(cfg, &mut n, id),
        Event::ClearQueuingPort(id) => clear_queuing_port(cfg, &mut n, id),
        Event::Schedule(target) => n.current = target,
        Event::TransferSampling(c) => transfer_sampling(cfg, &mut n, c),
        Event::TransferQueuing(c) => transfer_queuing(cfg, &mut n, c, v.transfer_mode),
        Event::PartitionAction(t) => write_local(&mut n, Value::Token(t)),
        Event::Init => unreachable!("Init is never enabled at runtime"),
    }
    n
}

/// Stores a return value in the running domain's local store.
pub fn write_local(s: &mut State, value: Value) {
    s.locals.entry(s.current).or_default().ret = Some(value);
}

fn caller(s: &State) -> PartId {
    s.current
        .partition()
        .expect("hypercalls are only enabled while a partition runs")
}

/// Looks up `id` as a port of the running partition with the given mode and
/// direction. Ports of other partitions are indistinguishable from missing ones.
fn own_port(
    cfg: &SysConfig,
    s: &State,
    id: PortId,
    mode: PortMode,
    dir: Option<Direction>,
) -> Option<PortRef> {
    if s.comm.port_owner.get(&id) != Some(&caller(s)) {
        return None;
    }
    let port = s.comm.ports.get(&id)?;
    let conf = cfg.port(port.port);
    let dir_ok = dir.is_none_or(|d| d == conf.direction);
    (conf.mode == mode && port.buffer.mode() == mode && dir_ok).then_some(port.port)
}

fn buffer_mut(s: &mut State, id: PortId) -> &mut PortBuffer {
    &mut s
        .comm
        .ports
        .get_mut(&id)
        .expect("port resolved before mutation")
        .buffer
}

fn create_port(cfg: &SysConfig, s: &mut State, r: PortRef, mode: PortMode) {
    let conf = cfg.port(r);
    if conf.mode != mode || conf.owner != caller(s) || s.comm.ids_by_name.contains_key(&r) {
        return write_local(s, FAIL);
    }
    let id = match (cfg.portid_strategy, s.next_port_id) {
        (PortIdStrategy::RuntimeCounter, Some(next)) => {
            s.next_port_id = Some(next + 1);
            PortId(next)
        }
        _ => match conf.static_id {
            Some(id) => id,
            None => return write_local(s, FAIL),
        },
    };
    insert_port(&mut s.comm, cfg, r, id);
    write_local(s, Value::PortId(id));
}

fn write_sampling_message(cfg: &SysConfig, s: &mut State, id: PortId, m: Message) {
    if own_port(cfg, s, id, PortMode::Sampling, Some(Direction::Source)).is_none() {
        return write_local(s, FAIL);
    }
    *buffer_mut(s, id) = PortBuffer::Sampling(Some(m));
    write_local(s, OK);
}

fn read_sampling_message(cfg: &SysConfig, s: &mut State, id: PortId) {
    if own_port(cfg, s, id, PortMode::Sampling, Some(Direction::Destination)).is_none() {
        return write_local(s, FAIL);
    }
    let msg = match s.comm.buffer(id) {
        Some(PortBuffer::Sampling(m)) => *m,
        _ => None,
    };
    write_local(s, Value::Msg(msg));
}

fn get_port_id(cfg: &SysConfig, s: &mut State, r: PortRef, mode: PortMode) {
    let conf = cfg.port(r);
    let id = match s.comm.ids_by_name.get(&r) {
        Some(&id) if conf.mode == mode && conf.owner == caller(s) => id,
        _ => return write_local(s, FAIL),
    };
    write_local(s, Value::PortId(id));
}

/// Destination status reveals the buffer; source status only confirms the port.
fn get_port_status(cfg: &SysConfig, s: &mut State, id: PortId, mode: PortMode) {
    let Some(r) = own_port(cfg, s, id, mode, None) else {
        return write_local(s, FAIL);
    };
    let value = match (cfg.port(r).direction, s.comm.buffer(id)) {
        (Direction::Source, _) => OK,
        (Direction::Destination, Some(PortBuffer::Sampling(m))) => Value::Present(m.is_some()),
        (Direction::Destination, Some(PortBuffer::Queuing(q))) => Value::Count(q.len()),
        (Direction::Destination, None) => FAIL,
    };
    write_local(s, value);
}

fn send_queuing_message(cfg: &SysConfig, s: &mut State, id: PortId, m: Message, mode: SendMode) {
    let Some(r) = own_port(cfg, s, id, PortMode::Queuing, Some(Direction::Source)) else {
        return write_local(s, FAIL);
    };
    let capacity = cfg.capacity(r);
    let PortBuffer::Queuing(q) = buffer_mut(s, id) else {
        unreachable!("mode checked")
    };
    let code = if q.len() >= capacity {
        match mode {
            SendMode::MayLost => ReturnCode::NoError,
            SendMode::ArincStatus => ReturnCode::NotAvailable,
        }
    } else {
        q.push_back(m);
        ReturnCode::NoError
    };
    write_local(s, Value::Code(code));
}

fn receive_queuing_message(cfg: &SysConfig, s: &mut State, id: PortId) {
    if own_port(cfg, s, id, PortMode::Queuing, Some(Direction::Destination)).is_none() {
        return write_local(s, FAIL);
    }
    let PortBuffer::Queuing(q) = buffer_mut(s, id) else {
        unreachable!("mode checked")
    };
    let head = q.pop_front();
    write_local(s, Value::Msg(head));
}

fn clear_queuing_port(cfg: &SysConfig, s: &mut State, id: PortId) {
    if own_port(cfg, s, id, PortMode::Queuing, Some(Direction::Destination)).is_none() {
        return write_local(s, FAIL);
    }
    *buffer_mut(s, id) = PortBuffer::Queuing(Default::default());
    write_local(s, OK);
}

fn transfer_sampling(cfg: &SysConfig, s: &mut State, c: ChannelRef) {
    let chan = cfg.channel(c);
    if chan.mode != PortMode::Sampling {
        return;
    }
    let ids = &s.comm.ids_by_name;
    let Some(src) = ids.get(&chan.source) else {
        return;
    };
    let dests: Option<Vec<PortId>> = chan.destinations.iter().map(|d| ids.get(d).copied()).collect();
    let Some(dests) = dests else {
        return;
    };
    let Some(PortBuffer::Sampling(Some(m))) = s.comm.buffer(*src).cloned() else {
        return;
    };
    for d in dests {
        *buffer_mut(s, d) = PortBuffer::Sampling(Some(m));
    }
}

fn transfer_queuing(cfg: &SysConfig, s: &mut State, c: ChannelRef, mode: TransferMode) {
    let chan = cfg.channel(c);
    if chan.mode != PortMode::Queuing {
        return;
    }
    let (Some(&src), Some(&dst)) = (
        s.comm.ids_by_name.get(&chan.source),
        s.comm.ids_by_name.get(&chan.destinations[0]),
    ) else {
        return;
    };
    let src_len = s.comm.buffer(src).map_or(0, PortBuffer::len);
    let dst_full = s.comm.buffer(dst).is_none_or(|b| b.len() >= chan.capacity);
    if src_len == 0 || (dst_full && mode == TransferMode::ArincNoLoss) {
        return;
    }
    let PortBuffer::Queuing(q) = buffer_mut(s, src) else {
        return;
    };
    let m = q.pop_front().expect("source is non-empty");
    if !dst_full {
        if let PortBuffer::Queuing(q) = buffer_mut(s, dst) {
            q.push_back(m);
        }
    }
}
