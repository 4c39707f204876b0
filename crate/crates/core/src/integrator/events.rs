use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dopri::DenseSegment;

/// Time tolerance for event location.
pub const EVENT_TIME_TOL: f64 = 1e-10;

/// Interior probe points per step when bracketing roots.
const PROBES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    /// First time the leading gap reaches the equilibrium gap.
    TInfinity,
    /// First time the leading gap comes within `eps / 3` of equilibrium.
    TInfinityEps,
    /// Second gap crossing below half of its floor.
    TCheck,
    YSignChange,
    CollisionGuard,
    EnergyViolation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    Rising,
    Falling,
    Either,
}

pub type ScalarFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Trigger {
    /// Sign change of a scalar function.
    Root { function: ScalarFn, direction: Crossing },
    /// Growth of a quantity that must not increase, beyond `slack * (1 + |value|)`.
    Increase { function: ScalarFn, slack: f64 },
}

#[derive(Clone)]
pub struct EventSpec {
    pub kind: EventKind,
    pub vehicle: usize,
    pub trigger: Trigger,
    /// Values with magnitude at or below this are treated as zero.
    pub deadband: f64,
    pub max_occurrences: Option<usize>,
    pub terminal: bool,
}

impl fmt::Debug for EventSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventSpec")
            .field("kind", &self.kind)
            .field("vehicle", &self.vehicle)
            .field("max_occurrences", &self.max_occurrences)
            .field("terminal", &self.terminal)
            .finish()
    }
}

impl EventSpec {
    pub fn root(
        kind: EventKind,
        vehicle: usize,
        direction: Crossing,
        function: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind,
            vehicle,
            trigger: Trigger::Root {
                function: Arc::new(function),
                direction,
            },
            deadband: 1e-12,
            max_occurrences: None,
            terminal: false,
        }
    }

    pub fn increase(
        kind: EventKind,
        vehicle: usize,
        slack: f64,
        function: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind,
            vehicle,
            trigger: Trigger::Increase {
                function: Arc::new(function),
                slack,
            },
            deadband: 0.0,
            max_occurrences: None,
            terminal: false,
        }
    }

    pub fn once(mut self) -> Self {
        self.max_occurrences = Some(1);
        self
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }

    pub fn with_deadband(mut self, deadband: f64) -> Self {
        self.deadband = deadband;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub time: f64,
    pub vehicle: usize,
    pub state: Vec<f64>,
}

/// Sign with a deadband: `None` inside the band.
fn definite_sign(v: f64, band: f64) -> Option<bool> {
    if v > band {
        Some(true)
    } else if v < -band {
        Some(false)
    } else {
        None
    }
}

/// Running detector state for one event spec.
#[derive(Debug, Clone)]
pub(crate) struct Tracker {
    last_sign: Option<bool>,
    last_value: Option<f64>,
    running_min: f64,
    pub(crate) count: usize,
}

impl Tracker {
    pub(crate) fn new(spec: &EventSpec, t0: f64, y0: &[f64]) -> Self {
        match &spec.trigger {
            Trigger::Root { function, .. } => Self {
                last_sign: definite_sign(function(t0, y0), spec.deadband),
                last_value: None,
                running_min: f64::INFINITY,
                count: 0,
            },
            Trigger::Increase { function, .. } => {
                let v = function(t0, y0);
                Self {
                    last_sign: None,
                    last_value: Some(v),
                    running_min: v,
                    count: 0,
                }
            }
        }
    }

    fn exhausted(&self, spec: &EventSpec) -> bool {
        spec.max_occurrences.is_some_and(|m| self.count >= m)
    }

    /// Scan one dense segment; returns located events in time order.
    pub(crate) fn scan(&mut self, spec: &EventSpec, seg: &DenseSegment, y_end: &[f64]) -> Vec<Event> {
        let mut found = Vec::new();
        if self.exhausted(spec) {
            return found;
        }
        let t0 = seg.t0();
        let t1 = t0 + seg.h();
        match &spec.trigger {
            Trigger::Increase { function, slack } => {
                let v = function(t1, y_end);
                let floor = self.running_min;
                if v > floor + slack * (1.0 + floor.abs()) {
                    self.count += 1;
                    found.push(Event {
                        kind: spec.kind,
                        time: t1,
                        vehicle: spec.vehicle,
                        state: y_end.to_vec(),
                    });
                }
                self.running_min = self.running_min.min(v);
                self.last_value = Some(v);
            }
            Trigger::Root { function, direction } => {
                let mut buf = vec![0.0; seg.dim()];
                let mut eval = |t: f64| {
                    if t == t1 {
                        function(t, y_end)
                    } else {
                        seg.eval_into(t, &mut buf);
                        function(t, &buf)
                    }
                };
                let mut ta = t0;
                for k in 1..=PROBES {
                    let tb = if k == PROBES {
                        t1
                    } else {
                        t0 + seg.h() * k as f64 / PROBES as f64
                    };
                    let sb = definite_sign(eval(tb), spec.deadband);
                    if let (Some(prev), Some(next)) = (self.last_sign, sb) {
                        if prev != next {
                            let wanted = match direction {
                                Crossing::Either => true,
                                Crossing::Rising => next,
                                Crossing::Falling => !next,
                            };
                            if wanted {
                                let t = locate(ta, tb, |t| definite_sign(eval(t), spec.deadband) == Some(next));
                                found.push(Event {
                                    kind: spec.kind,
                                    time: t,
                                    vehicle: spec.vehicle,
                                    state: if t == t1 { y_end.to_vec() } else { seg.eval(t) },
                                });
                                self.count += 1;
                                if self.exhausted(spec) {
                                    self.last_sign = Some(next);
                                    return found;
                                }
                            }
                        }
                    }
                    if sb.is_some() {
                        self.last_sign = sb;
                        ta = tb;
                    }
                }
            }
        }
        found
    }
}

/// Earliest `t` in `(a, b]` where `pred` holds, assuming `pred(b)` and not `pred(a)`.
pub(crate) fn locate(mut a: f64, mut b: f64, mut pred: impl FnMut(f64) -> bool) -> f64 {
    while b - a > EVENT_TIME_TOL {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m) {
            b = m;
        } else {
            a = m;
        }
    }
    b
}
