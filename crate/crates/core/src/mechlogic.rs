//! Discrete-step model of Zuse's mechanical relays.
//!
//! A relay passes the motion of its actor (a clocked plate, or the plate
//! moved by an upstream relay in the same engagement) to its actuated plate
//! when its control bit allows it. Four engagements make one machine cycle:
//! operands are latched in IV, gates fire in I, II and III.
//!
//! Control bits must have settled in an earlier engagement; only actor motion
//! may chain inside one engagement (contacts in series). The anticipated carry
//! chain of the adder is such a series chain evaluated within engagement II.

use std::fmt::{self, Write as _};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    North,
    East,
    South,
    West,
}

impl Direction {
    pub fn rotate90(self) -> Direction {
        match self {
            Direction::North => Direction::East,
            Direction::East => Direction::South,
            Direction::South => Direction::West,
            Direction::West => Direction::North,
        }
    }
}

/// One quarter of a machine cycle. A cycle runs IV, I, II, III.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Engagement {
    IV,
    I,
    II,
    III,
}

impl Engagement {
    pub const CYCLE: [Engagement; 4] = [Engagement::IV, Engagement::I, Engagement::II, Engagement::III];

    pub fn direction(self) -> Direction {
        match self {
            Engagement::I => Direction::North,
            Engagement::II => Direction::East,
            Engagement::III => Direction::South,
            Engagement::IV => Direction::West,
        }
    }

    pub fn next(self) -> Engagement {
        match self {
            Engagement::IV => Engagement::I,
            Engagement::I => Engagement::II,
            Engagement::II => Engagement::III,
            Engagement::III => Engagement::IV,
        }
    }

    fn roman(self) -> &'static str {
        match self {
            Engagement::I => "I",
            Engagement::II => "II",
            Engagement::III => "III",
            Engagement::IV => "IV",
        }
    }
}

/// Normal relays are drawn open and close on a 1; negating relays are drawn
/// closed and open on a 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Normal,
    Negating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NetId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Actor {
    Clock(Engagement),
    Net(NetId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MechRelay {
    pub control: NetId,
    pub actor: Actor,
    pub actuated: NetId,
    /// Second actuated plate, moved when the contact is open. Half of an XOR.
    pub alternate: Option<NetId>,
    pub polarity: Polarity,
    pub engagement: Engagement,
}

impl MechRelay {
    pub fn actor_direction(&self) -> Direction {
        self.engagement.direction()
    }

    pub fn actuated_direction(&self) -> Direction {
        self.actor_direction().rotate90()
    }
}

pub fn eval_relay(polarity: Polarity, control: bool, actor_active: bool) -> bool {
    (control ^ (polarity == Polarity::Negating)) && actor_active
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MechError {
    #[error("relay {relay} reads control net `{net}` before it has settled")]
    ScheduleViolation { relay: usize, net: String },
    #[error("relay {relay} is driven by `{net}`, which is not moved earlier in the same engagement")]
    ActorNotReady { relay: usize, net: String },
    #[error("net `{net}` is driven in more than one engagement or after being consumed")]
    DriverConflict { net: String },
    #[error("gates cannot fire in engagement IV; operands are latched there")]
    LoadEngagement,
    #[error("expected {expected} input values, got {got}")]
    InputCount { expected: usize, got: usize },
}

#[derive(Debug, Clone)]
struct Net {
    name: String,
    is_input: bool,
    driven_in: Option<Engagement>,
    consumed_as_actor: bool,
}

#[derive(Debug, Clone)]
pub struct MechCircuit {
    nets: Vec<Net>,
    relays: Vec<MechRelay>,
    inputs: Vec<NetId>,
    gate_labels: Vec<&'static str>,
}

impl MechCircuit {
    pub fn new() -> Self {
        MechCircuit {
            nets: Vec::new(),
            relays: Vec::new(),
            inputs: Vec::new(),
            gate_labels: Vec::new(),
        }
    }

    pub fn input(&mut self, name: impl Into<String>) -> NetId {
        let id = self.push_net(name.into(), true);
        self.inputs.push(id);
        id
    }

    pub fn net(&mut self, name: impl Into<String>) -> NetId {
        self.push_net(name.into(), false)
    }

    fn push_net(&mut self, name: String, is_input: bool) -> NetId {
        self.nets.push(Net {
            name,
            is_input,
            driven_in: None,
            consumed_as_actor: false,
        });
        NetId(self.nets.len() - 1)
    }

    fn settled_in(&self, n: NetId) -> Option<Engagement> {
        let net = &self.nets[n.0];
        if net.is_input {
            Some(Engagement::IV)
        } else {
            net.driven_in
        }
    }

    /// Adds a relay, checking the engagement schedule.
    pub fn relay(&mut self, label: &'static str, r: MechRelay) -> Result<(), MechError> {
        let idx = self.relays.len();
        if r.engagement == Engagement::IV {
            return Err(MechError::LoadEngagement);
        }
        match self.settled_in(r.control) {
            Some(e) if e < r.engagement => {}
            _ => {
                return Err(MechError::ScheduleViolation {
                    relay: idx,
                    net: self.nets[r.control.0].name.clone(),
                })
            }
        }
        match r.actor {
            Actor::Clock(e) if e == r.engagement => {}
            Actor::Clock(_) => {
                return Err(MechError::ActorNotReady {
                    relay: idx,
                    net: "clock".into(),
                })
            }
            Actor::Net(n) => {
                if self.settled_in(n) != Some(r.engagement) || self.nets[n.0].is_input {
                    return Err(MechError::ActorNotReady {
                        relay: idx,
                        net: self.nets[n.0].name.clone(),
                    });
                }
                self.nets[n.0].consumed_as_actor = true;
            }
        }
        for out in std::iter::once(r.actuated).chain(r.alternate) {
            let net = &mut self.nets[out.0];
            let clash = net.is_input
                || net.consumed_as_actor
                || net.driven_in.is_some_and(|e| e != r.engagement);
            if clash {
                return Err(MechError::DriverConflict { net: net.name.clone() });
            }
            net.driven_in = Some(r.engagement);
        }
        self.relays.push(r);
        self.gate_labels.push(label);
        Ok(())
    }

    pub fn relays(&self) -> &[MechRelay] {
        &self.relays
    }

    pub fn inputs(&self) -> &[NetId] {
        &self.inputs
    }

    pub fn net_name(&self, n: NetId) -> &str {
        &self.nets[n.0].name
    }

    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.nets.iter().position(|n| n.name == name).map(NetId)
    }

    /// Runs one machine cycle and returns the value of every net.
    pub fn eval(&self, input_values: &[bool]) -> Result<Vec<bool>, MechError> {
        if input_values.len() != self.inputs.len() {
            return Err(MechError::InputCount {
                expected: self.inputs.len(),
                got: input_values.len(),
            });
        }
        let mut v = vec![false; self.nets.len()];
        for (id, &x) in self.inputs.iter().zip(input_values) {
            v[id.0] = x;
        }
        for eng in [Engagement::I, Engagement::II, Engagement::III] {
            for r in self.relays.iter().filter(|r| r.engagement == eng) {
                let moving = match r.actor {
                    Actor::Clock(_) => true,
                    Actor::Net(n) => v[n.0],
                };
                if !moving {
                    continue;
                }
                if eval_relay(r.polarity, v[r.control.0], true) {
                    v[r.actuated.0] = true;
                } else if let Some(alt) = r.alternate {
                    v[alt.0] = true;
                }
            }
        }
        Ok(v)
    }

    /// Plain-text netlist: one relay per line.
    pub fn netlist(&self) -> String {
        let mut s = String::new();
        for (i, (r, label)) in self.relays.iter().zip(&self.gate_labels).enumerate() {
            let kind = match (r.polarity, r.alternate.is_some()) {
                (Polarity::Normal, false) => "relay",
                (Polarity::Negating, false) => "relay-neg",
                (Polarity::Normal, true) => "relay-2plate",
                (Polarity::Negating, true) => "relay-2plate-neg",
            };
            let actor = match r.actor {
                Actor::Clock(e) => format!("clock:{}", e.roman()),
                Actor::Net(n) => self.net_name(n).to_string(),
            };
            let mut outs = self.net_name(r.actuated).to_string();
            if let Some(alt) = r.alternate {
                let _ = write!(outs, ",{}", self.net_name(alt));
            }
            let _ = writeln!(
                s,
                "r{i}\t{kind}\t{}\tctl={} act={actor}\tout={outs}\t{label}",
                r.engagement.roman(),
                self.net_name(r.control),
            );
        }
        s
    }
}

impl Default for MechCircuit {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Display for MechCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.netlist())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    And,
    Or,
    Not,
    Xor,
}

fn plain(control: NetId, actor: Actor, out: NetId, polarity: Polarity, engagement: Engagement) -> MechRelay {
    MechRelay {
        control,
        actor,
        actuated: out,
        alternate: None,
        polarity,
        engagement,
    }
}

/// XOR of `a` and `b` in one engagement: a two-plate relay on `a` steers the
/// motion to one of two plates, and a relay on `b` of opposite polarity sits on
/// each plate.
fn xor_into(
    c: &mut MechCircuit,
    label: &'static str,
    a: NetId,
    b: NetId,
    out: NetId,
    eng: Engagement,
    tag: &str,
) -> Result<(), MechError> {
    let p1 = c.net(format!("{tag}.p1"));
    let p0 = c.net(format!("{tag}.p0"));
    c.relay(
        label,
        MechRelay {
            control: a,
            actor: Actor::Clock(eng),
            actuated: p1,
            alternate: Some(p0),
            polarity: Polarity::Normal,
            engagement: eng,
        },
    )?;
    c.relay(label, plain(b, Actor::Net(p1), out, Polarity::Negating, eng))?;
    c.relay(label, plain(b, Actor::Net(p0), out, Polarity::Normal, eng))
}

/// One Boolean gate; inputs `a` (and `b`), output net `out`, firing in
/// engagement I.
pub fn build_gate(kind: GateKind) -> MechCircuit {
    let mut c = MechCircuit::new();
    let eng = Engagement::I;
    let a = c.input("a");
    let out;
    match kind {
        GateKind::Not => {
            out = c.net("out");
            c.relay("not", plain(a, Actor::Clock(eng), out, Polarity::Negating, eng))
                .expect("valid schedule");
        }
        GateKind::And => {
            let b = c.input("b");
            let mid = c.net("mid");
            out = c.net("out");
            c.relay("and", plain(a, Actor::Clock(eng), mid, Polarity::Normal, eng))
                .expect("valid schedule");
            c.relay("and", plain(b, Actor::Net(mid), out, Polarity::Normal, eng))
                .expect("valid schedule");
        }
        GateKind::Or => {
            let b = c.input("b");
            out = c.net("out");
            c.relay("or", plain(a, Actor::Clock(eng), out, Polarity::Normal, eng))
                .expect("valid schedule");
            c.relay("or", plain(b, Actor::Clock(eng), out, Polarity::Normal, eng))
                .expect("valid schedule");
        }
        GateKind::Xor => {
            let b = c.input("b");
            out = c.net("out");
            xor_into(&mut c, "xor", a, b, out, eng, "x").expect("valid schedule");
        }
    }
    let _ = out;
    c
}

/// Evaluates a circuit built by [`build_gate`].
pub fn eval_gate(c: &MechCircuit, inputs: &[bool]) -> bool {
    let v = c.eval(inputs).expect("input count");
    v[c.find_net("out").expect("gate has an output").0]
}

/// An adder chain of `width` cells wired as in the Z1 addition unit.
#[derive(Debug, Clone)]
pub struct AdderChain {
    pub circuit: MechCircuit,
    width: u32,
    xor: Vec<NetId>,
    and: Vec<NetId>,
    carry: Vec<NetId>,
    sum: Vec<NetId>,
}

/// Per-position outputs after one cycle; bit `i` of each field is cell `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdderCellOutputs {
    pub xor_bits: u64,
    pub and_bits: u64,
    pub carry_bits: u64,
    pub sum: u64,
    pub carry_out: bool,
}

pub fn build_adder_cell() -> AdderChain {
    build_adder_chain(1)
}

/// Gates 1-4 (engagement I) form the bitwise XOR and AND, gates 5 and 6
/// (engagement II) launch and carry the anticipated carries, gate 7 lifts the
/// XOR to the upper level, gates 8 and 9 (engagement III) form the final XOR.
pub fn build_adder_chain(width: u32) -> AdderChain {
    assert!((1..=32).contains(&width));
    let mut c = MechCircuit::new();
    let w = width as usize;
    let a: Vec<_> = (0..w).map(|i| c.input(format!("a{i}"))).collect();
    let b: Vec<_> = (0..w).map(|i| c.input(format!("b{i}"))).collect();
    let cin = c.input("cin");

    let xor: Vec<_> = (0..w).map(|i| c.net(format!("xor{i}"))).collect();
    let and: Vec<_> = (0..w).map(|i| c.net(format!("and{i}"))).collect();
    let up: Vec<_> = (0..w).map(|i| c.net(format!("xup{i}"))).collect();
    let carry: Vec<_> = (0..=w).map(|i| c.net(format!("u{i}"))).collect();
    let sum: Vec<_> = (0..w).map(|i| c.net(format!("e{i}"))).collect();

    let build = |c: &mut MechCircuit| -> Result<(), MechError> {
        let (e1, e2, e3) = (Engagement::I, Engagement::II, Engagement::III);
        for i in 0..w {
            xor_into(c, "gates 1,2", a[i], b[i], xor[i], e1, &format!("g12_{i}"))?;
            let mid = c.net(format!("g34_{i}"));
            c.relay("gates 3,4", plain(a[i], Actor::Clock(e1), mid, Polarity::Normal, e1))?;
            c.relay("gates 3,4", plain(b[i], Actor::Net(mid), and[i], Polarity::Normal, e1))?;
        }
        c.relay("carry in", plain(cin, Actor::Clock(e2), carry[0], Polarity::Normal, e2))?;
        for i in 0..w {
            c.relay("gate 5", plain(and[i], Actor::Clock(e2), carry[i + 1], Polarity::Normal, e2))?;
            c.relay("gate 6", plain(xor[i], Actor::Net(carry[i]), carry[i + 1], Polarity::Normal, e2))?;
            c.relay("gate 7", plain(xor[i], Actor::Clock(e2), up[i], Polarity::Normal, e2))?;
        }
        for i in 0..w {
            xor_into(c, "gates 8,9", up[i], carry[i], sum[i], e3, &format!("g89_{i}"))?;
        }
        Ok(())
    };
    build(&mut c).expect("adder schedule is valid");
    AdderChain {
        circuit: c,
        width,
        xor,
        and,
        carry,
        sum,
    }
}

impl AdderChain {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn eval(&self, a: u64, b: u64, carry_in: bool) -> AdderCellOutputs {
        let w = self.width as usize;
        let mut inputs = Vec::with_capacity(2 * w + 1);
        inputs.extend((0..w).map(|i| (a >> i) & 1 == 1));
        inputs.extend((0..w).map(|i| (b >> i) & 1 == 1));
        inputs.push(carry_in);
        let v = self.circuit.eval(&inputs).expect("input count");
        let gather = |nets: &[NetId]| nets.iter().enumerate().fold(0u64, |acc, (i, n)| acc | ((v[n.0] as u64) << i));
        AdderCellOutputs {
            xor_bits: gather(&self.xor),
            and_bits: gather(&self.and),
            carry_bits: gather(&self.carry[..w]),
            sum: gather(&self.sum),
            carry_out: v[self.carry[w].0],
        }
    }
}
