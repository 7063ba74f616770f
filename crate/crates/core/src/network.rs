//! Directed road networks: junctions, roads, origins and destinations.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Dense road index, `0..N_R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RoadId(pub usize);

/// Dense junction index, `0..N_J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JunctionId(pub usize);

/// Zero-based index into [`Network::destinations`]. Displayed one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DestIndex(pub usize);

impl fmt::Display for RoadId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "road #{}", self.0)
    }
}

impl fmt::Display for JunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "junction #{}", self.0)
    }
}

impl fmt::Display for DestIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "destination {}", self.0 + 1)
    }
}

pub const DEFAULT_RHO_MAX: f64 = 1.0;
pub const DEFAULT_V_MAX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Road {
    pub id: RoadId,
    pub name: String,
    /// Upstream end position.
    pub a: f64,
    /// Downstream end position, `b > a`.
    pub b: f64,
    pub start: JunctionId,
    pub end: JunctionId,
    /// Jam density.
    pub rho_max: f64,
    /// Free-flow speed.
    pub v_max: f64,
}

impl Road {
    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JunctionKind {
    Origin,
    Destination,
    Internal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub id: JunctionId,
    pub name: String,
    /// Incoming roads, sorted by id.
    pub inc: Vec<RoadId>,
    /// Outgoing roads, sorted by id.
    pub out: Vec<RoadId>,
    pub kind: JunctionKind,
}

impl Junction {
    /// Kind implied by the incoming/outgoing sets, `None` for an isolated node.
    pub fn implied_kind(&self) -> Option<JunctionKind> {
        match (self.inc.is_empty(), self.out.is_empty()) {
            (true, false) => Some(JunctionKind::Origin),
            (false, true) => Some(JunctionKind::Destination),
            (false, false) => Some(JunctionKind::Internal),
            (true, true) => None,
        }
    }
}

/// A road network. Fields are public so that scenarios can be assembled and
/// inspected freely; [`Network::violations`] audits every invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub roads: Vec<Road>,
    pub junctions: Vec<Junction>,
    /// Destination junctions; position in this list is the [`DestIndex`].
    pub destinations: Vec<JunctionId>,
    pub origins: Vec<JunctionId>,
}

/// One broken network invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoRoads,
    NoJunctions,
    NoOrigins,
    NoDestinations,
    NoInternalJunctions,
    RoadIdMismatch { position: usize, id: RoadId },
    JunctionIdMismatch { position: usize, id: JunctionId },
    UnknownJunction { road: RoadId, junction: JunctionId },
    NonPositiveLength { road: RoadId, length: f64 },
    NonPositiveRhoMax { road: RoadId },
    NonPositiveVMax { road: RoadId },
    UnknownRoad { junction: JunctionId, road: RoadId },
    /// The road is missing from `out(start)` or `inc(end)`, or listed at a
    /// junction that is not its endpoint.
    EndpointMismatch { road: RoadId, junction: JunctionId },
    IncOutOverlap { junction: JunctionId, road: RoadId },
    IsolatedJunction { junction: JunctionId },
    KindMismatch { junction: JunctionId },
    UnlistedDestination { junction: JunctionId },
    NotADestination { junction: JunctionId },
    DuplicateDestination { junction: JunctionId },
    UnlistedOrigin { junction: JunctionId },
    NotAnOrigin { junction: JunctionId },
    Unreachable { origin: JunctionId, destination: JunctionId },
    RoadTooShort { road: RoadId, length: f64, required: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoRoads => write!(f, "network has no roads"),
            NoJunctions => write!(f, "network has no junctions"),
            NoOrigins => write!(f, "network has no origins"),
            NoDestinations => write!(f, "network has no destinations"),
            NoInternalJunctions => write!(f, "network has no internal junctions"),
            RoadIdMismatch { position, id } => {
                write!(f, "road at position {position} carries id {}", id.0)
            }
            JunctionIdMismatch { position, id } => {
                write!(f, "junction at position {position} carries id {}", id.0)
            }
            UnknownJunction { road, junction } => {
                write!(f, "{road} references unknown {junction}")
            }
            NonPositiveLength { road, length } => write!(f, "{road} has length {length}"),
            NonPositiveRhoMax { road } => write!(f, "{road} has non-positive rho_max"),
            NonPositiveVMax { road } => write!(f, "{road} has non-positive v_max"),
            UnknownRoad { junction, road } => write!(f, "{junction} lists unknown {road}"),
            EndpointMismatch { road, junction } => {
                write!(f, "{road} and {junction} disagree on incidence")
            }
            IncOutOverlap { junction, road } => {
                write!(f, "{road} is both incoming and outgoing at {junction}")
            }
            IsolatedJunction { junction } => write!(f, "{junction} is isolated"),
            KindMismatch { junction } => {
                write!(f, "{junction} kind disagrees with its incoming/outgoing roads")
            }
            UnlistedDestination { junction } => {
                write!(f, "{junction} has no outgoing roads but is not a listed destination")
            }
            NotADestination { junction } => {
                write!(f, "{junction} is listed as destination but has outgoing roads")
            }
            DuplicateDestination { junction } => {
                write!(f, "{junction} is listed as destination twice")
            }
            UnlistedOrigin { junction } => write!(f, "origin {junction} is not listed"),
            NotAnOrigin { junction } => {
                write!(f, "{junction} is listed as origin but has incoming roads")
            }
            Unreachable { origin, destination } => {
                write!(f, "{destination} is not reachable from origin {origin}")
            }
            RoadTooShort { road, length, required } => {
                write!(f, "{road} has length {length}, needs at least {required}")
            }
        }
    }
}

impl Network {
    pub fn num_roads(&self) -> usize {
        self.roads.len()
    }

    pub fn num_junctions(&self) -> usize {
        self.junctions.len()
    }

    pub fn num_destinations(&self) -> usize {
        self.destinations.len()
    }

    pub fn road(&self, id: RoadId) -> &Road {
        &self.roads[id.0]
    }

    pub fn junction(&self, id: JunctionId) -> &Junction {
        &self.junctions[id.0]
    }

    pub fn destination(&self, d: DestIndex) -> JunctionId {
        self.destinations[d.0]
    }

    /// The destination index of junction `j`, if it is a listed destination.
    pub fn dest_index(&self, j: JunctionId) -> Option<DestIndex> {
        self.destinations.iter().position(|&x| x == j).map(DestIndex)
    }

    pub fn road_by_name(&self, name: &str) -> Option<RoadId> {
        self.roads.iter().find(|r| r.name == name).map(|r| r.id)
    }

    pub fn junction_by_name(&self, name: &str) -> Option<JunctionId> {
        self.junctions.iter().find(|j| j.name == name).map(|j| j.id)
    }

    pub fn is_internal(&self, j: JunctionId) -> bool {
        self.junctions[j.0].kind == JunctionKind::Internal
    }

    pub fn max_speed(&self) -> f64 {
        self.roads.iter().map(|r| r.v_max).fold(0.0, f64::max)
    }

    /// Every invariant violation, in a stable order. Empty means valid.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.roads.is_empty() {
            out.push(Violation::NoRoads);
        }
        if self.junctions.is_empty() {
            out.push(Violation::NoJunctions);
        }
        let nj = self.junctions.len();
        let nr = self.roads.len();

        for (pos, r) in self.roads.iter().enumerate() {
            if r.id.0 != pos {
                out.push(Violation::RoadIdMismatch { position: pos, id: r.id });
            }
            for j in [r.start, r.end] {
                if j.0 >= nj {
                    out.push(Violation::UnknownJunction { road: r.id, junction: j });
                }
            }
            let len = r.length();
            if !(len > 0.0 && len.is_finite()) {
                out.push(Violation::NonPositiveLength { road: r.id, length: len });
            }
            if !(r.rho_max > 0.0 && r.rho_max.is_finite()) {
                out.push(Violation::NonPositiveRhoMax { road: r.id });
            }
            if !(r.v_max > 0.0 && r.v_max.is_finite()) {
                out.push(Violation::NonPositiveVMax { road: r.id });
            }
            if r.start.0 < nj && !self.junctions[r.start.0].out.contains(&r.id) {
                out.push(Violation::EndpointMismatch { road: r.id, junction: r.start });
            }
            if r.end.0 < nj && !self.junctions[r.end.0].inc.contains(&r.id) {
                out.push(Violation::EndpointMismatch { road: r.id, junction: r.end });
            }
        }

        for (pos, j) in self.junctions.iter().enumerate() {
            if j.id.0 != pos {
                out.push(Violation::JunctionIdMismatch { position: pos, id: j.id });
            }
            for &r in &j.inc {
                if r.0 >= nr {
                    out.push(Violation::UnknownRoad { junction: j.id, road: r });
                } else if self.roads[r.0].end != j.id {
                    out.push(Violation::EndpointMismatch { road: r, junction: j.id });
                }
            }
            for &r in &j.out {
                if r.0 >= nr {
                    out.push(Violation::UnknownRoad { junction: j.id, road: r });
                } else if self.roads[r.0].start != j.id {
                    out.push(Violation::EndpointMismatch { road: r, junction: j.id });
                }
            }
            for &r in &j.inc {
                if j.out.contains(&r) {
                    out.push(Violation::IncOutOverlap { junction: j.id, road: r });
                }
            }
            match j.implied_kind() {
                None => out.push(Violation::IsolatedJunction { junction: j.id }),
                Some(k) if k != j.kind => out.push(Violation::KindMismatch { junction: j.id }),
                Some(_) => {}
            }
        }

        let mut seen = vec![false; nj];
        for &d in &self.destinations {
            if d.0 >= nj {
                continue;
            }
            if seen[d.0] {
                out.push(Violation::DuplicateDestination { junction: d });
            }
            seen[d.0] = true;
            if !self.junctions[d.0].out.is_empty() || self.junctions[d.0].inc.is_empty() {
                out.push(Violation::NotADestination { junction: d });
            }
        }
        for j in &self.junctions {
            if j.implied_kind() == Some(JunctionKind::Destination) && !self.destinations.contains(&j.id) {
                out.push(Violation::UnlistedDestination { junction: j.id });
            }
            if j.implied_kind() == Some(JunctionKind::Origin) && !self.origins.contains(&j.id) {
                out.push(Violation::UnlistedOrigin { junction: j.id });
            }
        }
        for &o in &self.origins {
            if o.0 < nj && self.junctions[o.0].implied_kind() != Some(JunctionKind::Origin) {
                out.push(Violation::NotAnOrigin { junction: o });
            }
        }

        let count = |kind| self.junctions.iter().filter(|j| j.implied_kind() == Some(kind)).count();
        if count(JunctionKind::Origin) == 0 {
            out.push(Violation::NoOrigins);
        }
        if count(JunctionKind::Destination) == 0 {
            out.push(Violation::NoDestinations);
        }
        if count(JunctionKind::Internal) == 0 {
            out.push(Violation::NoInternalJunctions);
        }

        // Reachability only makes sense once the incidence structure is sound.
        let structurally_sound = out.iter().all(|v| {
            !matches!(
                v,
                Violation::UnknownJunction { .. }
                    | Violation::UnknownRoad { .. }
                    | Violation::RoadIdMismatch { .. }
                    | Violation::JunctionIdMismatch { .. }
            )
        });
        if structurally_sound {
            for &dest in &self.destinations {
                if dest.0 >= nj {
                    continue;
                }
                let reach = self.reaching(dest);
                for &o in &self.origins {
                    if o.0 < nj && !reach[o.0] {
                        out.push(Violation::Unreachable { origin: o, destination: dest });
                    }
                }
            }
        }
        out
    }

    /// Checks that every road leaves room for junction neighborhoods of
    /// width `delta` at its internal ends and a nonempty interior.
    pub fn delta_violations(&self, delta: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        for r in &self.roads {
            let len = r.length();
            let both_internal = self.is_internal(r.start) && self.is_internal(r.end);
            let too_short = if both_internal { len <= 2.0 * delta } else { len < 2.0 * delta };
            if too_short {
                out.push(Violation::RoadTooShort { road: r.id, length: len, required: 2.0 * delta });
            }
        }
        out
    }

    /// Junctions from which destination `d` can be reached along directed roads.
    pub fn reachable_set(&self, d: DestIndex) -> Option<Vec<JunctionId>> {
        let dest = *self.destinations.get(d.0)?;
        let reach = self.reaching(dest);
        Some(
            reach
                .iter()
                .enumerate()
                .filter(|(_, &r)| r)
                .map(|(i, _)| JunctionId(i))
                .collect(),
        )
    }

    /// Membership mask of junctions that reach `target`.
    pub fn reaching(&self, target: JunctionId) -> Vec<bool> {
        let mut seen = vec![false; self.junctions.len()];
        let mut queue = VecDeque::new();
        seen[target.0] = true;
        queue.push_back(target);
        while let Some(j) = queue.pop_front() {
            for &r in &self.junctions[j.0].inc {
                let s = self.roads[r.0].start;
                if !seen[s.0] {
                    seen[s.0] = true;
                    queue.push_back(s);
                }
            }
        }
        seen
    }
}

/// Incremental construction of a [`Network`] from named roads.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    junction_names: Vec<String>,
    roads: Vec<(String, usize, usize, f64, f64, f64)>,
    destinations: Vec<String>,
    origins: Vec<String>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn junction_index(&mut self, name: &str) -> usize {
        match self.junction_names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                self.junction_names.push(name.into());
                self.junction_names.len() - 1
            }
        }
    }

    /// Declares a junction without attaching roads yet (fixes its id order).
    pub fn junction(&mut self, name: &str) -> &mut Self {
        self.junction_index(name);
        self
    }

    pub fn road(&mut self, name: &str, start: &str, end: &str, length: f64) -> &mut Self {
        self.road_with(name, start, end, length, DEFAULT_RHO_MAX, DEFAULT_V_MAX)
    }

    pub fn road_with(
        &mut self,
        name: &str,
        start: &str,
        end: &str,
        length: f64,
        rho_max: f64,
        v_max: f64,
    ) -> &mut Self {
        let s = self.junction_index(start);
        let e = self.junction_index(end);
        self.roads.push((name.into(), s, e, length, rho_max, v_max));
        self
    }

    pub fn destination(&mut self, name: &str) -> &mut Self {
        self.junction_index(name);
        self.destinations.push(name.into());
        self
    }

    /// Optional cross-check; origins are derived otherwise.
    pub fn origin(&mut self, name: &str) -> &mut Self {
        self.junction_index(name);
        self.origins.push(name.into());
        self
    }

    /// Assembles the network without validating it.
    pub fn build_unchecked(&self) -> Network {
        let mut junctions: Vec<Junction> = self
            .junction_names
            .iter()
            .enumerate()
            .map(|(i, n)| Junction {
                id: JunctionId(i),
                name: n.clone(),
                inc: Vec::new(),
                out: Vec::new(),
                kind: JunctionKind::Internal,
            })
            .collect();
        let roads: Vec<Road> = self
            .roads
            .iter()
            .enumerate()
            .map(|(i, (name, s, e, len, rho, v))| Road {
                id: RoadId(i),
                name: name.clone(),
                a: 0.0,
                b: *len,
                start: JunctionId(*s),
                end: JunctionId(*e),
                rho_max: *rho,
                v_max: *v,
            })
            .collect();
        for r in &roads {
            junctions[r.start.0].out.push(r.id);
            junctions[r.end.0].inc.push(r.id);
        }
        for j in &mut junctions {
            j.kind = j.implied_kind().unwrap_or(JunctionKind::Internal);
        }
        let lookup = |n: &String| JunctionId(self.junction_names.iter().position(|x| x == n).unwrap());
        let destinations = self.destinations.iter().map(lookup).collect();
        let origins = if self.origins.is_empty() {
            junctions
                .iter()
                .filter(|j| j.kind == JunctionKind::Origin)
                .map(|j| j.id)
                .collect()
        } else {
            self.origins.iter().map(lookup).collect()
        };
        Network { roads, junctions, destinations, origins }
    }

    pub fn build(&self) -> Result<Network, Vec<Violation>> {
        let n = self.build_unchecked();
        let v = n.violations();
        if v.is_empty() {
            Ok(n)
        } else {
            Err(v)
        }
    }
}
