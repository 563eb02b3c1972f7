//! Oriented-rectangle overlap via the separating-axis test.

use crate::state::{AgentState, CollisionEvent, GroundTruthWorld};
use crate::Vec2;

/// Oriented bounding rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Vec2,
    /// Half sizes along the local (longitudinal, lateral) axes.
    pub half_extent: Vec2,
    pub heading: f64,
}

impl Obb {
    pub fn of(agent: &AgentState) -> Self {
        Self {
            center: agent.position,
            half_extent: agent.half_extent,
            heading: agent.heading,
        }
    }

    pub fn axes(&self) -> [Vec2; 2] {
        let (s, c) = self.heading.sin_cos();
        [Vec2::new(c, s), Vec2::new(-s, c)]
    }

    /// Half-length of the projection onto unit axis `n`.
    fn projected_radius(&self, n: &Vec2) -> f64 {
        let [u, v] = self.axes();
        self.half_extent.x * u.dot(n).abs() + self.half_extent.y * v.dot(n).abs()
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let [u, v] = self.axes();
        let a = u * self.half_extent.x;
        let b = v * self.half_extent.y;
        [
            self.center + a + b,
            self.center - a + b,
            self.center - a - b,
            self.center + a - b,
        ]
    }

    pub fn contains(&self, p: Vec2) -> bool {
        let [u, v] = self.axes();
        let d = p - self.center;
        d.dot(&u).abs() <= self.half_extent.x && d.dot(&v).abs() <= self.half_extent.y
    }
}

/// Penetration depth (minimum projected overlap over the four candidate
/// axes), or `None` if a separating axis exists. Touching is not overlap.
pub fn sat_overlap(a: &Obb, b: &Obb) -> Option<f64> {
    let d = b.center - a.center;
    let mut depth = f64::INFINITY;
    for n in a.axes().iter().chain(b.axes().iter()) {
        let overlap = a.projected_radius(n) + b.projected_radius(n) - d.dot(n).abs();
        if overlap <= 0.0 {
            return None;
        }
        depth = depth.min(overlap);
    }
    Some(depth)
}

/// First overlap (lowest agent id) between the ego rectangle and any agent.
pub fn detect_collision(world: &GroundTruthWorld) -> Option<CollisionEvent> {
    let ego = Obb::of(&world.ego);
    let mut agents: Vec<&AgentState> = world.agents.iter().collect();
    agents.sort_by_key(|a| a.id);
    agents.into_iter().find_map(|agent| {
        sat_overlap(&ego, &Obb::of(agent)).map(|depth| CollisionEvent {
            tick: world.clock.tick,
            agent_a: world.ego.id.min(agent.id),
            agent_b: world.ego.id.max(agent.id),
            overlap_depth: depth,
        })
    })
}
