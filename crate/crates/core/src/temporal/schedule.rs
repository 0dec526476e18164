//! Turning a constrained event network into concrete frame intervals.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::allen::{AllenRelation, RelationSet};
use super::network::TemporalNetwork;
use super::TemporalError;
use crate::model::{CapabilityRegistry, Event, EventKind, GestGraph};

/// Half-open frame interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameInterval {
    #[serde(rename = "start_frame")]
    pub start: i64,
    #[serde(rename = "end_frame")]
    pub end: i64,
}

impl FrameInterval {
    pub fn new(start: i64, end: i64) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> i64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, frame: i64) -> bool {
        frame >= self.start && frame < self.end
    }

    /// Floor of the interval midpoint.
    pub fn mid(&self) -> i64 {
        (self.start + self.end).div_euclid(2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub event_id: u32,
    #[serde(flatten)]
    pub interval: FrameInterval,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "TimelineDoc", into = "TimelineDoc")]
pub struct EventTimeline {
    pub fps: u32,
    pub intervals: BTreeMap<u32, FrameInterval>,
}

#[derive(Serialize, Deserialize)]
struct TimelineDoc {
    fps: u32,
    events: Vec<TimelineEntry>,
}

impl From<TimelineDoc> for EventTimeline {
    fn from(d: TimelineDoc) -> Self {
        EventTimeline { fps: d.fps, intervals: d.events.into_iter().map(|e| (e.event_id, e.interval)).collect() }
    }
}

impl From<EventTimeline> for TimelineDoc {
    fn from(t: EventTimeline) -> Self {
        TimelineDoc {
            fps: t.fps,
            events: t.intervals.into_iter().map(|(event_id, interval)| TimelineEntry { event_id, interval }).collect(),
        }
    }
}

impl EventTimeline {
    pub fn get(&self, event_id: u32) -> Option<FrameInterval> {
        self.intervals.get(&event_id).copied()
    }

    /// Last end frame over all events (0 for an empty timeline).
    pub fn makespan(&self) -> i64 {
        self.intervals.values().map(|iv| iv.end).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    #[default]
    EarliestStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulePolicy {
    pub origin_frame: i64,
    /// Minimum separation used for a strict `before` between two events.
    pub strict_before_gap_frames: u32,
    pub assignment: Assignment,
}

impl Default for SchedulePolicy {
    fn default() -> Self {
        Self { origin_frame: 0, strict_before_gap_frames: 25, assignment: Assignment::EarliestStart }
    }
}

pub fn duration_frames(duration_s: f64, fps: u32) -> i64 {
    ((duration_s * fps as f64).round() as i64).max(1)
}

/// True iff the base relation between `a` and `b` belongs to `s`.
pub fn check_relation(a: FrameInterval, b: FrameInterval, s: RelationSet) -> bool {
    s.contains(AllenRelation::between(a.start, a.end, b.start, b.end))
}

/// Chain constraints between consecutive events of each actor, followed by
/// the graph's explicit relations.
pub fn graph_constraints(graph: &GestGraph) -> Vec<(u32, u32, RelationSet)> {
    constraints(graph, |e| e.kind == EventKind::Movement)
}

fn constraints(graph: &GestGraph, is_movement: impl Fn(&Event) -> bool) -> Vec<(u32, u32, RelationSet)> {
    use AllenRelation::*;
    let mut out = Vec::new();
    for chain in graph.chains().values() {
        for pair in chain.windows(2) {
            let prev = graph.event(pair[0]).expect("chain event");
            // A walk ends exactly where the next action begins.
            let set = if is_movement(prev) {
                RelationSet::single(Meets)
            } else {
                RelationSet::of(&[Before, Meets])
            };
            out.push((pair[0], pair[1], set));
        }
    }
    out.extend(graph.relations.iter().map(|r| (r.source, r.target, r.allen_set)));
    out
}

pub fn graph_network(graph: &GestGraph) -> Result<TemporalNetwork, TemporalError> {
    let mut net = TemporalNetwork::new(graph.events.iter().map(|e| e.event_id));
    for (a, b, s) in graph_constraints(graph) {
        net.constrain(a, b, s)?;
    }
    Ok(net)
}

/// Schedules every event of `graph` (movements included) at `fps`.
pub fn schedule(
    graph: &GestGraph,
    registry: &CapabilityRegistry,
    policy: &SchedulePolicy,
    fps: u32,
) -> Result<EventTimeline, TemporalError> {
    let durations: BTreeMap<u32, i64> =
        graph.events.iter().map(|e| (e.event_id, duration_frames(e.duration_s, fps))).collect();
    let movement = |e: &Event| {
        e.kind == EventKind::Movement || registry.action(&e.action).is_some_and(|a| a.is_movement_only)
    };
    let intervals = schedule_events(&durations, &constraints(graph, movement), policy)?;
    Ok(EventTimeline { fps, intervals })
}

/// Core scheduler over bare durations (frames) and qualitative constraints.
pub fn schedule_events(
    durations: &BTreeMap<u32, i64>,
    constraints: &[(u32, u32, RelationSet)],
    policy: &SchedulePolicy,
) -> Result<BTreeMap<u32, FrameInterval>, TemporalError> {
    let mut net = TemporalNetwork::new(durations.keys().copied());
    for &(a, b, s) in constraints {
        net.constrain(a, b, s)?;
    }
    let closed = net.closure()?;

    // Merge constraints per ordered pair so each edge is translated once.
    let mut merged: BTreeMap<(u32, u32), RelationSet> = BTreeMap::new();
    for &(a, b, s) in constraints {
        let (key, s) = if a <= b { ((a, b), s) } else { ((b, a), s.converse()) };
        let e = merged.entry(key).or_insert(RelationSet::FULL);
        *e = e.intersection(s);
    }
    let (convex, disjunctive): (Vec<_>, Vec<_>) =
        merged.into_iter().partition(|(_, s)| endpoint_constraints(*s).is_some());

    let stn = Stn::new(durations, policy);
    if disjunctive.is_empty() {
        let edges: Vec<_> = convex.iter().map(|&((a, b), s)| (a, b, s)).collect();
        return stn.solve(&edges).ok_or(TemporalError::DurationConflict);
    }

    let mut search = Backtrack {
        stn: &stn,
        convex: convex.iter().map(|&((a, b), s)| (a, b, s)).collect(),
        disjunctive: disjunctive.iter().map(|&(k, _)| k).collect(),
        chosen: Vec::new(),
        explored: 0,
    };
    match search.run(closed, 0) {
        Some(result) => Ok(result),
        None => Err(TemporalError::UnschedulableDisjunction { explored: search.explored }),
    }
}

const MAX_BACKTRACK_NODES: usize = 100_000;

struct Backtrack<'a> {
    stn: &'a Stn,
    convex: Vec<(u32, u32, RelationSet)>,
    disjunctive: Vec<(u32, u32)>,
    chosen: Vec<(u32, u32, RelationSet)>,
    explored: usize,
}

impl Backtrack<'_> {
    fn run(&mut self, net: TemporalNetwork, depth: usize) -> Option<BTreeMap<u32, FrameInterval>> {
        self.explored += 1;
        if self.explored > MAX_BACKTRACK_NODES {
            return None;
        }
        if depth == self.disjunctive.len() {
            let edges: Vec<_> = self.convex.iter().chain(self.chosen.iter()).copied().collect();
            return self.stn.solve(&edges);
        }
        let (a, b) = self.disjunctive[depth];
        for r in net.edge(a, b).iter() {
            let mut next = net.clone();
            if next.add_and_propagate(a, b, r.into()).is_err() {
                continue;
            }
            self.chosen.push((a, b, r.into()));
            if let Some(found) = self.run(next, depth + 1) {
                return Some(found);
            }
            self.chosen.pop();
            if self.explored > MAX_BACKTRACK_NODES {
                return None;
            }
        }
        None
    }
}

/// Point relation between two endpoints as a 3-bit set over {<, =, >}.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) struct PointSet(u8);

impl PointSet {
    const LT: u8 = 1;
    const EQ: u8 = 2;
    const GT: u8 = 4;

    fn of(o: Ordering) -> Self {
        PointSet(match o {
            Ordering::Less => Self::LT,
            Ordering::Equal => Self::EQ,
            Ordering::Greater => Self::GT,
        })
    }

    fn has(self, o: Ordering) -> bool {
        self.0 & Self::of(o).0 != 0
    }
}

/// Endpoint orderings (a.start ? b.start, a.start ? b.end, a.end ? b.start,
/// a.end ? b.end) implied by each base relation.
fn endpoint_signature(r: AllenRelation) -> [Ordering; 4] {
    use AllenRelation::*;
    use Ordering::{Equal as E, Greater as G, Less as L};
    match r {
        Before => [L, L, L, L],
        Meets => [L, L, E, L],
        Overlaps => [L, L, G, L],
        Starts => [E, L, G, L],
        During => [G, L, G, L],
        Finishes => [G, L, G, E],
        Equals => [E, L, G, E],
        FinishedBy => [L, L, G, E],
        Contains => [L, L, G, G],
        StartedBy => [E, L, G, G],
        OverlappedBy => [G, L, G, G],
        MetBy => [G, E, G, G],
        After => [G, G, G, G],
    }
}

/// The four endpoint point-relations of `s`, or `None` when `s` is not the
/// exact solution set of such a conjunction (i.e. not convex).
pub(crate) fn endpoint_constraints(s: RelationSet) -> Option<[PointSet; 4]> {
    if s.is_empty() {
        return None;
    }
    let mut pts = [PointSet(0); 4];
    for r in s.iter() {
        for (p, o) in pts.iter_mut().zip(endpoint_signature(r)) {
            p.0 |= PointSet::of(o).0;
        }
    }
    // `≠` is not a difference constraint.
    if pts.iter().any(|p| p.0 == PointSet::LT | PointSet::GT) {
        return None;
    }
    let implied: RelationSet = AllenRelation::ALL
        .into_iter()
        .filter(|&r| pts.iter().zip(endpoint_signature(r)).all(|(p, o)| p.has(o)))
        .collect();
    (implied == s).then_some(pts)
}

pub fn is_convex(s: RelationSet) -> bool {
    endpoint_constraints(s).is_some()
}

const INF: i64 = i64::MAX / 4;

/// Simple temporal network over event start/end points plus an origin.
struct Stn {
    ids: Vec<u32>,
    index: BTreeMap<u32, usize>,
    durations: Vec<i64>,
    origin: i64,
    gap: i64,
}

impl Stn {
    fn new(durations: &BTreeMap<u32, i64>, policy: &SchedulePolicy) -> Self {
        let ids: Vec<u32> = durations.keys().copied().collect();
        let index = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        Self {
            durations: ids.iter().map(|id| durations[id]).collect(),
            ids,
            index,
            origin: policy.origin_frame,
            gap: policy.strict_before_gap_frames.max(1) as i64,
        }
    }

    fn start(&self, i: usize) -> usize {
        1 + 2 * i
    }

    fn end(&self, i: usize) -> usize {
        2 + 2 * i
    }

    /// Earliest-start assignment satisfying all (convex) edges, via
    /// all-pairs shortest paths on the distance graph.
    fn solve(&self, edges: &[(u32, u32, RelationSet)]) -> Option<BTreeMap<u32, FrameInterval>> {
        let n = 1 + 2 * self.ids.len();
        let mut d = vec![INF; n * n];
        for x in 0..n {
            d[x * n + x] = 0;
        }
        // `t_y - t_x <= w` is the edge x -> y with weight w.
        let mut upper = |x: usize, y: usize, w: i64| {
            let slot = &mut d[x * n + y];
            if w < *slot {
                *slot = w;
            }
        };
        for (i, &dur) in self.durations.iter().enumerate() {
            let (s, e) = (self.start(i), self.end(i));
            upper(s, e, dur);
            upper(e, s, -dur);
            // start >= origin
            upper(s, 0, 0);
        }
        for &(a, b, set) in edges {
            let pts = endpoint_constraints(set).expect("convex edge");
            let (ia, ib) = (self.index[&a], self.index[&b]);
            // (x, y, separation when x < y, separation when x > y). Only the
            // end-to-start pairs are strict `before`/`after` separations.
            let points = [
                (self.start(ia), self.start(ib), 1, 1),
                (self.start(ia), self.end(ib), 1, self.gap),
                (self.end(ia), self.start(ib), self.gap, 1),
                (self.end(ia), self.end(ib), 1, 1),
            ];
            for (p, (x, y, lt_sep, gt_sep)) in pts.iter().zip(points) {
                let lt = p.has(Ordering::Less);
                let eq = p.has(Ordering::Equal);
                let gt = p.has(Ordering::Greater);
                match (lt, eq, gt) {
                    (true, false, false) => upper(y, x, -lt_sep),
                    (true, true, false) => upper(y, x, 0),
                    (false, true, false) => {
                        upper(y, x, 0);
                        upper(x, y, 0);
                    }
                    (false, true, true) => upper(x, y, 0),
                    (false, false, true) => upper(x, y, -gt_sep),
                    _ => {}
                }
            }
        }

        for k in 0..n {
            for i in 0..n {
                let dik = d[i * n + k];
                if dik >= INF {
                    continue;
                }
                let (row_i, row_k) = (i * n, k * n);
                for j in 0..n {
                    let dkj = d[row_k + j];
                    if dkj >= INF {
                        continue;
                    }
                    let cand = dik + dkj;
                    if cand < d[row_i + j] {
                        d[row_i + j] = cand;
                    }
                }
            }
        }
        if (0..n).any(|x| d[x * n + x] < 0) {
            return None;
        }
        let earliest = |x: usize| self.origin - d[x * n];
        Some(
            self.ids
                .iter()
                .enumerate()
                .map(|(i, &id)| (id, FrameInterval::new(earliest(self.start(i)), earliest(self.end(i)))))
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temporal::allen::{coarse_to_allen, CoarseRelation};
    use AllenRelation::*;

    fn durs(v: &[(u32, i64)]) -> BTreeMap<u32, i64> {
        v.iter().copied().collect()
    }

    #[test]
    fn check_relation_examples() {
        let bm = RelationSet::of(&[Before, Meets]);
        assert!(check_relation(FrameInterval::new(0, 10), FrameInterval::new(10, 15), bm));
        assert!(!check_relation(FrameInterval::new(0, 10), FrameInterval::new(5, 15), bm));
        assert!(check_relation(FrameInterval::new(0, 10), FrameInterval::new(0, 10), Equals.into()));
    }

    #[test]
    fn before_or_meets_earliest_start() {
        let out = schedule_events(
            &durs(&[(0, 10), (1, 5)]),
            &[(0, 1, coarse_to_allen(CoarseRelation::Before))],
            &SchedulePolicy::default(),
        )
        .unwrap();
        assert_eq!(out[&0], FrameInterval::new(0, 10));
        assert_eq!(out[&1], FrameInterval::new(10, 15));
    }

    #[test]
    fn same_time_equal_durations() {
        let out = schedule_events(
            &durs(&[(0, 10), (1, 10)]),
            &[(0, 1, coarse_to_allen(CoarseRelation::SameTime))],
            &SchedulePolicy::default(),
        )
        .unwrap();
        assert_eq!(out[&0], FrameInterval::new(0, 10));
        assert_eq!(out[&1], FrameInterval::new(0, 10));
    }

    #[test]
    fn coarse_images_are_convex() {
        for c in CoarseRelation::ALL {
            assert!(is_convex(coarse_to_allen(c)), "{c:?}");
        }
        for r in AllenRelation::ALL {
            assert!(is_convex(r.into()));
        }
        assert!(is_convex(RelationSet::FULL));
        assert!(!is_convex(RelationSet::of(&[Before, After])));
        assert!(!is_convex(RelationSet::of(&[Before, Overlaps])));
    }

    #[test]
    fn strict_before_uses_gap() {
        let policy = SchedulePolicy { strict_before_gap_frames: 25, ..Default::default() };
        let out = schedule_events(&durs(&[(0, 10), (1, 5)]), &[(0, 1, Before.into())], &policy).unwrap();
        assert_eq!(out[&1].start, 35);
        let out = schedule_events(&durs(&[(0, 10), (1, 5)]), &[(1, 0, After.into())], &policy).unwrap();
        assert_eq!(out[&1].start, 35);
    }

    #[test]
    fn disjunction_backtracks() {
        // Either 0 before 1 or 1 before 0; 1 must also start with 2.
        let out = schedule_events(
            &durs(&[(0, 10), (1, 5), (2, 5)]),
            &[(0, 1, RelationSet::of(&[Before, After])), (1, 2, Equals.into())],
            &SchedulePolicy { strict_before_gap_frames: 1, ..Default::default() },
        )
        .unwrap();
        assert!(check_relation(out[&0], out[&1], RelationSet::of(&[Before, After])));
        assert!(check_relation(out[&1], out[&2], Equals.into()));
    }

    #[test]
    fn equals_with_different_durations_conflicts() {
        let err = schedule_events(
            &durs(&[(0, 10), (1, 5)]),
            &[(0, 1, Equals.into())],
            &SchedulePolicy::default(),
        )
        .unwrap_err();
        assert_eq!(err, TemporalError::DurationConflict);
    }

    #[test]
    fn duration_rounding() {
        assert_eq!(duration_frames(5.0, 25), 125);
        assert_eq!(duration_frames(0.001, 25), 1);
        assert_eq!(duration_frames(1.02, 25), 26);
    }
}
