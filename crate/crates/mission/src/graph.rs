//! Waypoint graph and deterministic shortest-path routing.
//!
//! Nodes are 2-D positions in meters; edges are undirected and assumed
//! pre-validated against no-fly zones, so routing never reasons about
//! geometry beyond edge lengths. Among equal-length shortest paths the
//! lexicographically smallest node-id sequence wins, which keeps planning
//! reproducible.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type WaypointId = u32;

/// A 2-D position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("waypoint {0} is not in the graph")]
    UnknownWaypoint(WaypointId),
    #[error("edge ({0}, {1}) references a missing waypoint")]
    BadEdge(WaypointId, WaypointId),
    #[error("no route between {from} and {to}")]
    Unreachable { from: WaypointId, to: WaypointId },
    #[error("graph is not connected: waypoint {0} is unreachable from {1}")]
    Disconnected(WaypointId, WaypointId),
    #[error("graph has no waypoints")]
    Empty,
}

#[derive(Debug, Clone, Default)]
pub struct WaypointGraph {
    nodes: BTreeMap<WaypointId, Point>,
    adjacency: BTreeMap<WaypointId, BTreeSet<WaypointId>>,
}

impl WaypointGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: WaypointId, at: Point) {
        self.nodes.insert(id, at);
        self.adjacency.entry(id).or_default();
    }

    pub fn add_edge(&mut self, a: WaypointId, b: WaypointId) -> Result<(), GraphError> {
        if !self.nodes.contains_key(&a) || !self.nodes.contains_key(&b) {
            return Err(GraphError::BadEdge(a, b));
        }
        self.adjacency.entry(a).or_default().insert(b);
        self.adjacency.entry(b).or_default().insert(a);
        Ok(())
    }

    pub fn remove_edge(&mut self, a: WaypointId, b: WaypointId) {
        if let Some(n) = self.adjacency.get_mut(&a) {
            n.remove(&b);
        }
        if let Some(n) = self.adjacency.get_mut(&b) {
            n.remove(&a);
        }
    }

    pub fn position(&self, id: WaypointId) -> Option<Point> {
        self.nodes.get(&id).copied()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = WaypointId> + '_ {
        self.nodes.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The waypoint closest to `p` by Euclidean distance; among exact ties
    /// the smallest id wins.
    pub fn nearest(&self, p: Point) -> Option<WaypointId> {
        self.nodes
            .iter()
            .map(|(&id, &at)| (at.distance(p), id))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    }

    /// Every waypoint must be reachable from every other.
    pub fn check_connected(&self) -> Result<(), GraphError> {
        let Some(&start) = self.nodes.keys().next() else {
            return Err(GraphError::Empty);
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            for &next in &self.adjacency[&id] {
                if seen.insert(next) {
                    stack.push(next);
                }
            }
        }
        for &id in self.nodes.keys() {
            if !seen.contains(&id) {
                return Err(GraphError::Disconnected(id, start));
            }
        }
        Ok(())
    }

    /// Shortest path by total Euclidean edge length, inclusive of both
    /// endpoints. Ties are broken toward the lexicographically smaller node
    /// id sequence.
    pub fn plan_route(
        &self,
        from: WaypointId,
        to: WaypointId,
    ) -> Result<Vec<WaypointId>, GraphError> {
        if !self.nodes.contains_key(&from) {
            return Err(GraphError::UnknownWaypoint(from));
        }
        if !self.nodes.contains_key(&to) {
            return Err(GraphError::UnknownWaypoint(to));
        }
        if from == to {
            return Ok(vec![from]);
        }

        // Dijkstra from the goal, then a greedy walk from the start taking
        // the smallest-id neighbor that stays on a shortest path. Distances
        // settle to an exact neighbor-sum, so the equality test below holds
        // bitwise for at least one neighbor of every settled node.
        let dist_to_goal = self.dijkstra(to);
        if !dist_to_goal.contains_key(&from) {
            return Err(GraphError::Unreachable { from, to });
        }

        let mut path = vec![from];
        let mut current = from;
        while current != to {
            let here = dist_to_goal[&current];
            let next = self.adjacency[&current]
                .iter()
                // The visited check only matters for zero-length edges
                // between coincident waypoints; positive-weight shortest
                // paths never revisit.
                .filter(|n| !path.contains(n))
                .filter_map(|&n| {
                    let d = *dist_to_goal.get(&n)?;
                    let w = self.nodes[&current].distance(self.nodes[&n]);
                    (d + w == here).then_some(n)
                })
                .min()
                .expect("settled node must have a shortest-path neighbor");
            path.push(next);
            current = next;
        }
        Ok(path)
    }

    fn dijkstra(&self, source: WaypointId) -> BTreeMap<WaypointId, f64> {
        #[derive(PartialEq)]
        struct Entry(f64, WaypointId);
        impl Eq for Entry {}
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                // Min-heap on distance, then id, via reversed comparison.
                other
                    .0
                    .partial_cmp(&self.0)
                    .unwrap()
                    .then(other.1.cmp(&self.1))
            }
        }
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut dist: BTreeMap<WaypointId, f64> = BTreeMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(source, 0.0);
        heap.push(Entry(0.0, source));
        while let Some(Entry(d, id)) = heap.pop() {
            if dist.get(&id).is_some_and(|&best| d > best) {
                continue;
            }
            for &next in &self.adjacency[&id] {
                let candidate = d + self.nodes[&id].distance(self.nodes[&next]);
                if dist.get(&next).is_none_or(|&best| candidate < best) {
                    dist.insert(next, candidate);
                    heap.push(Entry(candidate, next));
                }
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> WaypointGraph {
        // 0 -- 1
        // |    |
        // 2 -- 3
        let mut g = WaypointGraph::new();
        g.add_node(0, Point::new(0.0, 1.0));
        g.add_node(1, Point::new(1.0, 1.0));
        g.add_node(2, Point::new(0.0, 0.0));
        g.add_node(3, Point::new(1.0, 0.0));
        g.add_edge(0, 1).unwrap();
        g.add_edge(0, 2).unwrap();
        g.add_edge(1, 3).unwrap();
        g.add_edge(2, 3).unwrap();
        g
    }

    /// Exhaustive simple-path enumeration, for cross-checking the planner.
    fn all_paths(
        g: &WaypointGraph,
        from: WaypointId,
        to: WaypointId,
    ) -> Vec<(f64, Vec<WaypointId>)> {
        fn walk(
            g: &WaypointGraph,
            at: WaypointId,
            to: WaypointId,
            seen: &mut Vec<WaypointId>,
            len: f64,
            out: &mut Vec<(f64, Vec<WaypointId>)>,
        ) {
            if at == to {
                out.push((len, seen.clone()));
                return;
            }
            let neighbors: Vec<WaypointId> = g.adjacency[&at].iter().copied().collect();
            for n in neighbors {
                if !seen.contains(&n) {
                    seen.push(n);
                    let w = g.nodes[&at].distance(g.nodes[&n]);
                    walk(g, n, to, seen, len + w, out);
                    seen.pop();
                }
            }
        }
        let mut out = Vec::new();
        walk(g, from, to, &mut vec![from], 0.0, &mut out);
        out
    }

    #[test]
    fn route_to_self_is_single_node() {
        assert_eq!(unit_square().plan_route(2, 2).unwrap(), vec![2]);
    }

    #[test]
    fn square_tie_breaks_to_smaller_sequence() {
        let g = unit_square();
        // 0 -> 3 has two 2-edge routes: [0,1,3] and [0,2,3]; the smaller
        // sequence is [0,1,3].
        assert_eq!(g.plan_route(0, 3).unwrap(), vec![0, 1, 3]);
        assert_eq!(g.plan_route(3, 0).unwrap(), vec![3, 1, 0]);
    }

    #[test]
    fn planner_agrees_with_exhaustive_enumeration() {
        let g = unit_square();
        for from in g.node_ids().collect::<Vec<_>>() {
            for to in g.node_ids().collect::<Vec<_>>() {
                let got = g.plan_route(from, to).unwrap();
                let mut candidates = all_paths(&g, from, to);
                candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                let best_len = candidates[0].0;
                let expected = candidates
                    .iter()
                    .filter(|(len, _)| *len == best_len)
                    .map(|(_, p)| p.clone())
                    .min()
                    .unwrap();
                assert_eq!(got, expected, "route {from}->{to}");
            }
        }
    }

    #[test]
    fn removed_edge_makes_node_unreachable() {
        let mut g = unit_square();
        g.add_node(9, Point::new(5.0, 5.0));
        g.add_edge(9, 1).unwrap();
        g.remove_edge(9, 1);
        assert_eq!(
            g.plan_route(0, 9).unwrap_err(),
            GraphError::Unreachable { from: 0, to: 9 }
        );
        assert!(matches!(g.check_connected(), Err(GraphError::Disconnected(_, _))));
    }

    #[test]
    fn nearest_prefers_smaller_id_on_ties() {
        let g = unit_square();
        assert_eq!(g.nearest(Point::new(0.5, 0.5)), Some(0));
        assert_eq!(g.nearest(Point::new(0.9, 0.1)), Some(3));
    }

    #[test]
    fn weighted_route_beats_fewer_hops() {
        // A long direct edge loses to two short hops.
        let mut g = WaypointGraph::new();
        g.add_node(0, Point::new(0.0, 0.0));
        g.add_node(1, Point::new(10.0, 0.0));
        g.add_node(2, Point::new(5.0, 0.1));
        g.add_edge(0, 1).unwrap();
        g.add_edge(0, 2).unwrap();
        g.add_edge(2, 1).unwrap();
        assert_eq!(g.plan_route(0, 1).unwrap(), vec![0, 2, 1]);
    }
}
