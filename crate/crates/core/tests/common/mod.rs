#![allow(dead_code)]

use std::time::Duration;

use serde_json::Value;

use esran::scenario::{builtin_default_scenario, Point, Scenario};

pub fn default_with_duration(seed: u64, duration_s: f64) -> Scenario {
    let mut sc = builtin_default_scenario(seed);
    sc.duration_s = duration_s;
    sc
}

/// Status-and-JSON view of the HTTP surface, errors included.
pub struct Http {
    base: String,
    agent: ureq::Agent,
}

impl Http {
    pub fn new(base: String) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        Self { base, agent }
    }

    fn finish(resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> (u16, Value) {
        let mut resp = resp.expect("transport");
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().expect("body");
        let v = if text.is_empty() { Value::Null } else { serde_json::from_str(&text).expect("json body") };
        (status, v)
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        Self::finish(self.agent.get(&format!("{}{path}", self.base)).call())
    }

    pub fn post(&self, path: &str, body: &str) -> (u16, Value) {
        Self::finish(
            self.agent
                .post(&format!("{}{path}", self.base))
                .header("content-type", "application/json")
                .send(body),
        )
    }

    pub fn delete(&self, path: &str) -> (u16, Value) {
        Self::finish(self.agent.delete(&format!("{}{path}", self.base)).call())
    }
}

/// Minimum within-cluster sum of squares over every labelling of `points`
/// into exactly `k` non-empty clusters.
pub fn exhaustive_optimum(points: &[Point], k: usize) -> f64 {
    let n = points.len();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let mut sx = vec![0.0; k];
        let mut sy = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            sx[l] += p.x;
            sy[l] += p.y;
            cnt[l] += 1;
        }
        if cnt.iter().all(|&c| c > 0) {
            let mut sse = 0.0;
            for (p, &l) in points.iter().zip(&labels) {
                let (mx, my) = (sx[l] / cnt[l] as f64, sy[l] / cnt[l] as f64);
                sse += (p.x - mx).powi(2) + (p.y - my).powi(2);
            }
            best = best.min(sse);
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

