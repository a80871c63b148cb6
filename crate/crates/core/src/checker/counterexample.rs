use crate::config::{DomainId, SysConfig};
use crate::kernel::{render_event, render_events, Event};
use crate::model::Model;
use crate::security::{evaluate, ipurge, Instance, InstanceArgs, PropertyId};

/// A concrete violation. `prefix_a` and `prefix_b` drive the boot state to
/// the two witness states `s` and `t`. Single-state properties (the
/// noninterference family and local respect) use `s` only and leave
/// `prefix_b` empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub kind: PropertyId,
    pub prefix_a: Vec<Event>,
    pub prefix_b: Vec<Event>,
    /// The stepped event, for the unwinding conditions.
    pub event: Option<Event>,
    /// The compared runs, for the bounded properties.
    pub run_a: Vec<Event>,
    pub run_b: Vec<Event>,
    pub observer: DomainId,
    pub diff: String,
}

fn single_state(kind: PropertyId) -> bool {
    use PropertyId as P;
    matches!(
        kind,
        P::Noninterference
            | P::WeakNoninterference
            | P::NoninterferenceR
            | P::WeakNoninterferenceR
            | P::LocalRespect
    )
}

impl Counterexample {
    /// Re-evaluates the property on the recorded instance.
    pub fn replay(&self, m: &Model) -> Instance {
        if self.kind.from_boot() && !self.prefix_a.is_empty() {
            return Instance::Vacuous;
        }
        let s = m.reach(&self.prefix_a);
        let t = if single_state(self.kind) {
            s.clone()
        } else {
            m.reach(&self.prefix_b)
        };
        evaluate(
            m,
            self.kind,
            InstanceArgs {
                s: &s,
                t: &t,
                run_a: &self.run_a,
                run_b: &self.run_b,
                event: self.event.as_ref(),
                observer: self.observer,
            },
        )
    }

    /// Whether replay yields the same violation, diff included.
    pub fn reproduces(&self, m: &Model) -> bool {
        self.replay(m) == Instance::Violated(self.diff.clone())
    }

    pub fn total_events(&self) -> usize {
        self.prefix_a.len()
            + self.prefix_b.len()
            + usize::from(self.event.is_some())
            + self.run_a.len()
            + self.run_b.len()
    }

    /// Recomputes `run_b` where the definition derives it from `run_a`.
    fn rederive(&mut self, m: &Model) {
        use PropertyId as P;
        match self.kind {
            P::Noninterference | P::NoninterferenceR => {
                let s = m.reach(&self.prefix_a);
                self.run_b = ipurge(m, &self.run_a, &s, self.observer);
            }
            P::StrongNoninfluence => {
                let t = m.reach(&self.prefix_b);
                self.run_b = ipurge(m, &self.run_a, &t, self.observer);
            }
            P::Nonleakage => self.run_b = self.run_a.clone(),
            _ => {}
        }
    }

    /// Greedily drops prefix events while the property stays violated on the
    /// same observer, until no single deletion works.
    pub fn minimize(&self, m: &Model) -> Counterexample {
        let mut best = self.clone();
        loop {
            let mut improved = false;
            for side in 0..2 {
                let mut i = 0;
                while i < best.prefix(side).len() {
                    let mut cand = best.clone();
                    cand.prefix_mut(side).remove(i);
                    cand.rederive(m);
                    if let Instance::Violated(diff) = cand.replay(m) {
                        cand.diff = diff;
                        best = cand;
                        improved = true;
                    } else {
                        i += 1;
                    }
                }
            }
            if !improved {
                return best;
            }
        }
    }

    fn prefix(&self, side: usize) -> &Vec<Event> {
        if side == 0 {
            &self.prefix_a
        } else {
            &self.prefix_b
        }
    }

    fn prefix_mut(&mut self, side: usize) -> &mut Vec<Event> {
        if side == 0 {
            &mut self.prefix_a
        } else {
            &mut self.prefix_b
        }
    }

    /// Arguments to the `replay` subcommand reproducing this witness.
    pub fn replay_args(&self, cfg: &SysConfig) -> Vec<String> {
        let mut args = vec![
            "--property".to_string(),
            self.kind.name().to_string(),
            "--observer".to_string(),
            cfg.domain_name(self.observer),
        ];
        let mut push = |flag: &str, events: &[Event]| {
            if !events.is_empty() {
                args.push(flag.to_string());
                args.push(render_events(cfg, events));
            }
        };
        push("--prefix-a", &self.prefix_a);
        push("--prefix-b", &self.prefix_b);
        push("--run-a", &self.run_a);
        push("--run-b", &self.run_b);
        if let Some(e) = &self.event {
            args.push("--event".to_string());
            args.push(render_event(cfg, e));
        }
        args
    }
}
