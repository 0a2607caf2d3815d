use serde::{Deserialize, Serialize};

use super::MissionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub position: [f64; 2],
    pub sinr_db: f64,
    pub outage: bool,
}

/// Visited positions; the first waypoint is the start `q(0)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Waypoint>,
}

impl Trajectory {
    /// Number of moves flown.
    pub fn steps(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }
}

/// Γ: outage steps along the flight. The start position is not a step and
/// is not counted, so `Γ ≤ steps` always holds.
pub fn episode_outage_count(trajectory: &Trajectory) -> usize {
    trajectory.waypoints.iter().skip(1).filter(|w| w.outage).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub steps: usize,
    pub outage_count: usize,
    pub final_distance: f64,
    /// `n ≤ N`
    pub within_step_budget: bool,
    /// `Γ < Γ̂` (strict)
    pub within_outage_budget: bool,
    /// `h(u) > h_B`
    pub clears_buildings: bool,
    /// `q(T)` within the arrival radius of `q_F`
    pub arrived: bool,
}

impl ConstraintReport {
    pub fn all_satisfied(&self) -> bool {
        self.within_step_budget && self.within_outage_budget && self.clears_buildings && self.arrived
    }
}

pub fn check_constraints(trajectory: &Trajectory, mission: &MissionSpec, tallest_building: f64) -> ConstraintReport {
    let steps = trajectory.steps();
    let outage_count = episode_outage_count(trajectory);
    let final_distance = trajectory.waypoints.last().map_or(f64::INFINITY, |w| (w.position[0] - mission.target[0]).hypot(w.position[1] - mission.target[1]));
    ConstraintReport {
        steps,
        outage_count,
        final_distance,
        within_step_budget: steps <= mission.max_steps,
        within_outage_budget: outage_count < mission.outage_budget,
        clears_buildings: mission.altitude > tallest_building,
        arrived: final_distance <= mission.arrival_radius,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(x: f64, outage: bool) -> Waypoint {
        Waypoint { position: [x, 0.0], sinr_db: if outage { -3.0 } else { 5.0 }, outage }
    }

    #[test]
    fn empty_trajectory() {
        let r = check_constraints(&Trajectory::default(), &MissionSpec::default(), 50.0);
        assert_eq!((r.steps, r.outage_count), (0, 0));
        assert!(r.within_step_budget && r.within_outage_budget && r.clears_buildings);
        assert!(!r.arrived);
    }

    #[test]
    fn counts_outage_steps() {
        let t = Trajectory { waypoints: vec![wp(0.0, true), wp(10.0, false), wp(20.0, true), wp(30.0, false), wp(40.0, true), wp(50.0, false)] };
        // the start is in outage but is not a step
        assert_eq!(t.steps(), 5);
        assert_eq!(episode_outage_count(&t), 2);
    }

    #[test]
    fn budgets_at_boundary() {
        let mission = MissionSpec { outage_budget: 3, ..Default::default() };
        let mut t = Trajectory { waypoints: vec![wp(0.0, false)] };
        t.waypoints.extend((0..200).map(|i| wp(i as f64, i < 3)));
        let r = check_constraints(&t, &mission, 50.0);
        assert_eq!(r.steps, 200);
        assert!(r.within_step_budget);
        assert_eq!(r.outage_count, 3);
        assert!(!r.within_outage_budget);
        assert!(!r.arrived);
        assert!(!check_constraints(&t, &mission, 95.0).clears_buildings);
    }
}
