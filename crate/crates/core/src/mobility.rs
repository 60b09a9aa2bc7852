//! UE movement (random waypoint) and call generation (exponential on/off).

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::scenario::{Area, Point, UeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CallState {
    Idle,
    InCall { remaining_s: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeState {
    pub position: Point,
    /// Direction of travel in radians.
    pub heading: f64,
    pub waypoint: Point,
    pub call: CallState,
    pub next_call_in_s: f64,
    /// Index of the serving cell in the scenario cell list.
    pub serving_cell: Option<usize>,
    pub achieved_throughput_mbps: f64,
    pub demanded_throughput_mbps: f64,
}

impl UeState {
    /// Initial state drawn from the stationary distribution of the call
    /// process so runs do not start with an empty network.
    pub fn initial<R: Rng + ?Sized>(cfg: &UeConfig, area: &Area, rng: &mut R) -> Self {
        let waypoint = random_point(area, rng);
        let p_in_call = cfg.mean_call_duration_s / (cfg.mean_call_duration_s + cfg.mean_intercall_s);
        let (call, next, demand) = if rng.random::<f64>() < p_in_call {
            let remaining_s = exp_draw(cfg.mean_call_duration_s, rng);
            (CallState::InCall { remaining_s }, 0.0, cfg.target_throughput_mbps)
        } else {
            (CallState::Idle, exp_draw(cfg.mean_intercall_s, rng), 0.0)
        };
        let position = cfg.initial_position;
        Self {
            position,
            heading: heading_towards(&position, &waypoint),
            waypoint,
            call,
            next_call_in_s: next,
            serving_cell: None,
            achieved_throughput_mbps: 0.0,
            demanded_throughput_mbps: demand,
        }
    }

    pub fn in_call(&self) -> bool {
        matches!(self.call, CallState::InCall { .. })
    }
}

fn random_point<R: Rng + ?Sized>(area: &Area, rng: &mut R) -> Point {
    Point::new(
        rng.random_range(0.0..=area.width_m),
        rng.random_range(0.0..=area.height_m),
    )
}

fn heading_towards(from: &Point, to: &Point) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

fn exp_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    Exp::new(1.0 / mean)
        .expect("validated means are positive")
        .sample(rng)
}

/// Advances a UE by `dt` seconds along its random-waypoint path and returns
/// the distance travelled.
pub fn step_mobility<R: Rng + ?Sized>(
    cfg: &UeConfig,
    state: &mut UeState,
    area: &Area,
    dt: f64,
    rng: &mut R,
) -> f64 {
    if cfg.speed_mps <= 0.0 {
        return 0.0;
    }
    if !area.contains(&state.waypoint) {
        state.waypoint = area.clamp(state.waypoint);
    }
    let start = state.position;
    let mut budget = cfg.speed_mps * dt;
    // Bounded so a degenerate waypoint sequence cannot spin forever.
    for _ in 0..64 {
        let to_wp = state.position.distance(&state.waypoint);
        if budget < to_wp {
            state.heading = heading_towards(&state.position, &state.waypoint);
            state.position = Point::new(
                state.position.x + budget * state.heading.cos(),
                state.position.y + budget * state.heading.sin(),
            );
            break;
        }
        budget -= to_wp;
        state.position = state.waypoint;
        state.waypoint = random_point(area, rng);
        state.heading = heading_towards(&state.position, &state.waypoint);
        if budget <= 0.0 {
            break;
        }
    }
    state.position = area.clamp(state.position);
    start.distance(&state.position)
}

/// Advances the call process by `dt` seconds.
pub fn step_traffic<R: Rng + ?Sized>(cfg: &UeConfig, state: &mut UeState, dt: f64, rng: &mut R) {
    match state.call {
        CallState::Idle => {
            state.next_call_in_s -= dt;
            if state.next_call_in_s <= 0.0 {
                state.call = CallState::InCall {
                    remaining_s: exp_draw(cfg.mean_call_duration_s, rng),
                };
                state.next_call_in_s = 0.0;
            }
        }
        CallState::InCall { remaining_s } => {
            let left = remaining_s - dt;
            if left <= 0.0 {
                state.call = CallState::Idle;
                state.next_call_in_s = exp_draw(cfg.mean_intercall_s, rng);
            } else {
                state.call = CallState::InCall { remaining_s: left };
            }
        }
    }
    state.demanded_throughput_mbps = if state.in_call() {
        cfg.target_throughput_mbps
    } else {
        0.0
    };
}
