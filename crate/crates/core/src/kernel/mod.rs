//! Kernel state and events.
//!
//! The kernel is a deterministic state machine. Every event is a total
//! function on [`State`]; events that are not enabled leave the state as is.

mod ops;
mod text;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use crate::config::{ChannelRef, DomainId, PartId, PortId, PortMode, PortRef};

pub use ops::{
    domain_of_event, event_domain, event_enabled, exec_event, execute, init, next_current,
    write_local,
};
pub use text::{parse_event, parse_events, render_event, render_events, render_trace_line, EventParseError};

/// An opaque message token `m0 .. m(k-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Message(pub u8);

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PortBuffer {
    /// Single slot, overwritten on write, not consumed on read.
    Sampling(Option<Message>),
    /// Bounded FIFO.
    Queuing(VecDeque<Message>),
}

impl PortBuffer {
    pub fn empty(mode: PortMode) -> Self {
        match mode {
            PortMode::Sampling => PortBuffer::Sampling(None),
            PortMode::Queuing => PortBuffer::Queuing(VecDeque::new()),
        }
    }

    pub fn mode(&self) -> PortMode {
        match self {
            PortBuffer::Sampling(_) => PortMode::Sampling,
            PortBuffer::Queuing(_) => PortMode::Queuing,
        }
    }

    /// Number of buffered messages.
    pub fn len(&self) -> usize {
        match self {
            PortBuffer::Sampling(m) => m.is_some() as usize,
            PortBuffer::Queuing(q) => q.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for PortBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PortBuffer::Sampling(None) => write!(f, "<empty>"),
            PortBuffer::Sampling(Some(m)) => write!(f, "<{m}>"),
            PortBuffer::Queuing(q) => {
                write!(f, "[")?;
                for (i, m) in q.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{m}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortState {
    /// The configured port this runtime port instantiates.
    pub port: PortRef,
    pub buffer: PortBuffer,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CommState {
    pub created: BTreeSet<PortId>,
    pub ports: BTreeMap<PortId, PortState>,
    pub port_owner: BTreeMap<PortId, PartId>,
    /// Configured port (by name) to its runtime id.
    pub ids_by_name: BTreeMap<PortRef, PortId>,
}

impl CommState {
    /// `created = dom(ports) = dom(port_owner)`, and the name index is an
    /// injection into `created`.
    pub fn port_consistent(&self) -> bool {
        self.created.iter().eq(self.ports.keys())
            && self.created.iter().eq(self.port_owner.keys())
            && self.ids_by_name.values().all(|id| self.created.contains(id))
            && self.ids_by_name.values().collect::<BTreeSet<_>>().len() == self.ids_by_name.len()
    }

    pub fn buffer(&self, id: PortId) -> Option<&PortBuffer> {
        self.ports.get(&id).map(|p| &p.buffer)
    }

    pub fn buffer_of(&self, r: PortRef) -> Option<&PortBuffer> {
        self.ids_by_name.get(&r).and_then(|id| self.buffer(*id))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ReturnCode {
    NoError,
    NotAvailable,
    InvalidParam,
}

impl fmt::Display for ReturnCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReturnCode::NoError => "NO_ERROR",
            ReturnCode::NotAvailable => "NOT_AVAILABLE",
            ReturnCode::InvalidParam => "INVALID_PARAM",
        })
    }
}

/// A value a hypercall hands back to its caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Code(ReturnCode),
    PortId(PortId),
    Msg(Option<Message>),
    Count(usize),
    /// Sampling destination status: whether the slot holds a message.
    Present(bool),
    Token(u8),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Code(c) => write!(f, "{c}"),
            Value::PortId(id) => write!(f, "port#{id}"),
            Value::Msg(None) => write!(f, "none"),
            Value::Msg(Some(m)) => write!(f, "{m}"),
            Value::Count(n) => write!(f, "count={n}"),
            Value::Present(p) => write!(f, "{}", if *p { "valid" } else { "empty" }),
            Value::Token(t) => write!(f, "t{t}"),
        }
    }
}

/// A domain's local variables. Hypercalls and partition actions leave their
/// result in the return register `ret`, overwriting the previous one.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocalStore {
    pub ret: Option<Value>,
}

impl fmt::Display for LocalStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.ret {
            None => write!(f, "ret=<unset>"),
            Some(v) => write!(f, "ret={v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PartitionMode {
    Idle,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    /// A partition or the transmitter; never the scheduler.
    pub current: DomainId,
    pub part_mode: BTreeMap<PartId, PartitionMode>,
    pub comm: CommState,
    pub locals: BTreeMap<DomainId, LocalStore>,
    /// Next identifier to hand out, under the runtime counter strategy only.
    pub next_port_id: Option<u32>,
}

impl State {
    pub fn local(&self, d: DomainId) -> &LocalStore {
        static EMPTY: LocalStore = LocalStore { ret: None };
        self.locals.get(&d).unwrap_or(&EMPTY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Event {
    CreateSamplingPort(PortRef),
    WriteSamplingMessage(PortId, Message),
    ReadSamplingMessage(PortId),
    GetSamplingPortId(PortRef),
    GetSamplingPortStatus(PortId),
    CreateQueuingPort(PortRef),
    SendQueuingMessage(PortId, Message),
    ReceiveQueuingMessage(PortId),
    GetQueuingPortId(PortRef),
    GetQueuingPortStatus(PortId),
    ClearQueuingPort(PortId),
    Schedule(DomainId),
    TransferSampling(ChannelRef),
    TransferQueuing(ChannelRef),
    /// Abstract local computation of the running partition.
    PartitionAction(u8),
    Init,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum EventKind {
    CreateSamplingPort,
    WriteSamplingMessage,
    ReadSamplingMessage,
    GetSamplingPortId,
    GetSamplingPortStatus,
    CreateQueuingPort,
    SendQueuingMessage,
    ReceiveQueuingMessage,
    GetQueuingPortId,
    GetQueuingPortStatus,
    ClearQueuingPort,
    Schedule,
    TransferSampling,
    TransferQueuing,
    PartitionAction,
    Init,
}

impl EventKind {
    pub const ALL: [EventKind; 16] = [
        EventKind::CreateSamplingPort,
        EventKind::WriteSamplingMessage,
        EventKind::ReadSamplingMessage,
        EventKind::GetSamplingPortId,
        EventKind::GetSamplingPortStatus,
        EventKind::CreateQueuingPort,
        EventKind::SendQueuingMessage,
        EventKind::ReceiveQueuingMessage,
        EventKind::GetQueuingPortId,
        EventKind::GetQueuingPortStatus,
        EventKind::ClearQueuingPort,
        EventKind::Schedule,
        EventKind::TransferSampling,
        EventKind::TransferQueuing,
        EventKind::PartitionAction,
        EventKind::Init,
    ];

    /// Service names as used in ARINC 653 terminology.
    pub fn name(self) -> &'static str {
        match self {
            EventKind::CreateSamplingPort => "Create_Sampling_Port",
            EventKind::WriteSamplingMessage => "Write_Sampling_Message",
            EventKind::ReadSamplingMessage => "Read_Sampling_Message",
            EventKind::GetSamplingPortId => "Get_Sampling_Portid",
            EventKind::GetSamplingPortStatus => "Get_Sampling_Portstatus",
            EventKind::CreateQueuingPort => "Create_Queuing_Port",
            EventKind::SendQueuingMessage => "Send_Queuing_Message",
            EventKind::ReceiveQueuingMessage => "Receive_Queuing_Message",
            EventKind::GetQueuingPortId => "Get_Queuing_Portid",
            EventKind::GetQueuingPortStatus => "Get_Queuing_Portstatus",
            EventKind::ClearQueuingPort => "Clear_Queuing_Port",
            EventKind::Schedule => "Schedule",
            EventKind::TransferSampling => "Transfer_Sampling_Message",
            EventKind::TransferQueuing => "Transfer_Queuing_Message",
            EventKind::PartitionAction => "Partition_Action",
            EventKind::Init => "Init",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_hypercall(self) -> bool {
        (self as u8) <= (EventKind::ClearQueuingPort as u8)
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Event {
    pub fn kind(&self) -> EventKind {
        match self {
            Event::CreateSamplingPort(_) => EventKind::CreateSamplingPort,
            Event::WriteSamplingMessage(..) => EventKind::WriteSamplingMessage,
            Event::ReadSamplingMessage(_) => EventKind::ReadSamplingMessage,
            Event::GetSamplingPortId(_) => EventKind::GetSamplingPortId,
            Event::GetSamplingPortStatus(_) => EventKind::GetSamplingPortStatus,
            Event::CreateQueuingPort(_) => EventKind::CreateQueuingPort,
            Event::SendQueuingMessage(..) => EventKind::SendQueuingMessage,
            Event::ReceiveQueuingMessage(_) => EventKind::ReceiveQueuingMessage,
            Event::GetQueuingPortId(_) => EventKind::GetQueuingPortId,
            Event::GetQueuingPortStatus(_) => EventKind::GetQueuingPortStatus,
            Event::ClearQueuingPort(_) => EventKind::ClearQueuingPort,
            Event::Schedule(_) => EventKind::Schedule,
            Event::TransferSampling(_) => EventKind::TransferSampling,
            Event::TransferQueuing(_) => EventKind::TransferQueuing,
            Event::PartitionAction(_) => EventKind::PartitionAction,
            Event::Init => EventKind::Init,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum SendMode {
    /// Full queue reports `NOT_AVAILABLE` to the sender.
    ArincStatus,
    /// Full queue silently drops the message and reports success.
    MayLost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum TransferMode {
    /// A full destination blocks the transfer; the message stays at the source.
    ArincNoLoss,
    /// A full destination drops the message.
    MayLost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SemanticsVariant {
    pub send_mode: SendMode,
    pub transfer_mode: TransferMode,
}

impl SemanticsVariant {
    /// Status-reporting send and lossless transfer, as the standard describes.
    pub const ARINC: Self = SemanticsVariant {
        send_mode: SendMode::ArincStatus,
        transfer_mode: TransferMode::ArincNoLoss,
    };
    /// Both operations may lose messages and never report fullness.
    pub const FIXED: Self = SemanticsVariant {
        send_mode: SendMode::MayLost,
        transfer_mode: TransferMode::MayLost,
    };

    pub fn name(&self) -> &'static str {
        match *self {
            Self::ARINC => "arinc",
            Self::FIXED => "fixed",
            _ => "mixed",
        }
    }
}
