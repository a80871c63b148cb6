//! A configuration together with everything needed to analyse it.

use crate::config::{instantiate_alphabet, DomainId, SysConfig};
use crate::equivalence::{self, TransmitterView, View};
use crate::kernel::{self, Event, SemanticsVariant, State};
use crate::policy::{derive_policy, Policy};

#[derive(Debug, Clone)]
pub struct Model {
    pub cfg: SysConfig,
    pub policy: Policy,
    pub variant: SemanticsVariant,
    pub tview: TransmitterView,
    pub alphabet: Vec<Event>,
    pub domains: Vec<DomainId>,
}

impl Model {
    pub fn new(cfg: SysConfig, variant: SemanticsVariant, tview: TransmitterView) -> Self {
        let alphabet = instantiate_alphabet(&cfg);
        Self::with_alphabet(cfg, variant, tview, alphabet)
    }

    /// Uses `alphabet` instead of the full instantiated one. Handy for
    /// shrinking the event space in tests.
    pub fn with_alphabet(
        cfg: SysConfig,
        variant: SemanticsVariant,
        tview: TransmitterView,
        alphabet: Vec<Event>,
    ) -> Self {
        Model {
            policy: derive_policy(&cfg),
            domains: cfg.domains(),
            cfg,
            variant,
            tview,
            alphabet,
        }
    }

    pub fn init(&self) -> State {
        kernel::init(&self.cfg)
    }

    pub fn exec(&self, s: &State, e: &Event) -> State {
        kernel::exec_event(&self.cfg, s, e, self.variant)
    }

    pub fn run(&self, events: &[Event], s: &State) -> State {
        kernel::execute(&self.cfg, events, s, self.variant)
    }

    /// State reached from boot by `events`.
    pub fn reach(&self, events: &[Event]) -> State {
        self.run(events, &self.init())
    }

    pub fn dom(&self, s: &State, e: &Event) -> DomainId {
        kernel::domain_of_event(s, e)
    }

    pub fn interferes(&self, u: DomainId, v: DomainId) -> bool {
        self.policy.interferes(u, v)
    }

    pub fn view(&self, s: &State, d: DomainId) -> View {
        equivalence::view(&self.cfg, self.tview, s, d)
    }

    pub fn vpeq(&self, s: &State, d: DomainId, t: &State) -> bool {
        equivalence::vpeq(&self.cfg, self.tview, s, d, t)
    }

    pub fn view_diff(&self, s: &State, d: DomainId, t: &State) -> Option<String> {
        equivalence::view_diff(&self.cfg, self.tview, s, d, t)
    }

    pub fn domain_index(&self, d: DomainId) -> usize {
        self.domains
            .iter()
            .position(|&x| x == d)
            .expect("domain belongs to the configuration")
    }
}
