//! Brute-force reference implementations used to check the engine.
//! Everything here is quadratic and written without touching engine code.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Clone, Debug)]
pub struct Pt {
    pub person: String,
    pub lat: f64,
    pub lon: f64,
    pub t: i64,
}

pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let r = 6_371_000.0_f64;
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * r * a.sqrt().min(1.0).asin()
}

#[derive(Clone, Copy, Debug)]
pub struct Params {
    pub eps: f64,
    pub dt: i64,
    pub cd: i64,
    pub ip: i64,
}

/// Every qualifying contact time per unordered pair `(a, b)` with `a < b`.
pub fn contact_times(points: &[Pt], p: Params) -> BTreeMap<(String, String), Vec<i64>> {
    let mut out: BTreeMap<(String, String), Vec<i64>> = BTreeMap::new();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if a.person == b.person {
                continue;
            }
            if (a.t - b.t).abs() > p.dt || haversine_m(a.lat, a.lon, b.lat, b.lon) > p.eps {
                continue;
            }
            let t = a.t.max(b.t);
            if t > p.cd || p.cd - t > p.ip {
                continue;
            }
            let key = if a.person < b.person {
                (a.person.clone(), b.person.clone())
            } else {
                (b.person.clone(), a.person.clone())
            };
            out.entry(key).or_default().push(t);
        }
    }
    out
}

/// Adjacency with all contact times, both directions.
pub fn adjacency(points: &[Pt], p: Params) -> BTreeMap<String, BTreeMap<String, Vec<i64>>> {
    let mut adj: BTreeMap<String, BTreeMap<String, Vec<i64>>> = BTreeMap::new();
    for ((a, b), ts) in contact_times(points, p) {
        adj.entry(a.clone()).or_default().insert(b.clone(), ts.clone());
        adj.entry(b).or_default().insert(a, ts);
    }
    adj
}

/// Multi-source BFS. Returns person -> (class, contact time). Seeds carry
/// their confirmation time. In causal mode, beyond class 1 an edge only
/// counts at or after the contact time of the person it leaves from.
pub fn classify(points: &[Pt], seeds: &[(String, i64)], p: Params, causal: bool) -> BTreeMap<String, (u32, i64)> {
    let adj = adjacency(points, p);
    let mut res: BTreeMap<String, (u32, i64)> = BTreeMap::new();
    let mut frontier: Vec<String> = Vec::new();
    for (s, t) in seeds {
        res.insert(s.clone(), (0, *t));
        frontier.push(s.clone());
    }
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next: BTreeMap<String, i64> = BTreeMap::new();
        for u in &frontier {
            let floor = if causal && d > 1 { Some(res[u].1) } else { None };
            let Some(nbrs) = adj.get(u) else { continue };
            for (v, ts) in nbrs {
                if res.contains_key(v) {
                    continue;
                }
                let Some(t) = ts.iter().copied().filter(|t| floor.is_none_or(|f| *t >= f)).min() else {
                    continue;
                };
                let e = next.entry(v.clone()).or_insert(t);
                *e = (*e).min(t);
            }
        }
        for (v, t) in &next {
            res.insert(v.clone(), (d, *t));
        }
        frontier = next.into_keys().collect();
    }
    res
}

/// Plain hop distance from the seeds, ignoring contact times.
pub fn hop_distances(points: &[Pt], seeds: &[String], p: Params) -> BTreeMap<String, u32> {
    let adj = adjacency(points, p);
    let mut dist: BTreeMap<String, u32> = seeds.iter().map(|s| (s.clone(), 0)).collect();
    let mut q: VecDeque<String> = seeds.iter().cloned().collect();
    while let Some(u) = q.pop_front() {
        let du = dist[&u];
        for v in adj.get(&u).into_iter().flat_map(|m| m.keys()) {
            if !dist.contains_key(v) {
                dist.insert(v.clone(), du + 1);
                q.push_back(v.clone());
            }
        }
    }
    dist
}

/// Distinct patients seen inside the circle within the window.
pub fn area_count(
    points: &[Pt],
    patients: &BTreeSet<String>,
    lat: f64,
    lon: f64,
    r: f64,
    cd: i64,
    window: Option<i64>,
) -> usize {
    points
        .iter()
        .filter(|q| patients.contains(&q.person))
        .filter(|q| q.t <= cd && window.is_none_or(|w| cd - q.t <= w))
        .filter(|q| haversine_m(lat, lon, q.lat, q.lon) <= r)
        .map(|q| q.person.clone())
        .collect::<BTreeSet<_>>()
        .len()
}
