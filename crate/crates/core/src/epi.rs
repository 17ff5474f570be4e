//! Contact-rate estimation from investigation output and SIR/SEIR
//! integration with fixed-step fourth-order Runge-Kutta.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::Timestamp;
use crate::investigation::{contacts_of, Classification, InvestigationConfig, DAY_S};
use crate::store::StoreSnapshot;

pub const SERIES_HEADER: &str = "t_days,S,E,I,R";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactStats {
    pub window_start: Timestamp,
    pub window_end: Timestamp,
    pub contacts_per_infective_per_day: f64,
    pub distinct_pairs: usize,
    pub infective_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpiEstimate {
    pub beta_hat: f64,
    pub theta_hat: f64,
    pub iu_size: usize,
}

/// Observed contact rate of the confirmed patients over the incubation
/// window `[cd - ip, cd]`, scaled by `p_trans` into a transmission rate.
///
/// Infectives are class-0 members with at least one observation in the
/// window. Pairs are ordered `(infective, other)`, so two infectives who meet
/// contribute two pairs.
pub fn estimate_contact_rate(
    snap: &StoreSnapshot,
    cls: &Classification,
    cfg: &InvestigationConfig,
    p_trans: f64,
) -> Result<(ContactStats, EpiEstimate)> {
    cfg.check_snapshot(snap)?;
    if !(0.0..=1.0).contains(&p_trans) {
        return Err(Error::invalid("p_trans must be in [0, 1]"));
    }
    let end = cfg.current_date.secs();
    let start = (end - cfg.incubation_period_s).max(0);
    if start >= end {
        return Err(Error::EmptyWindow);
    }
    let mut infectives = 0;
    let mut pairs = 0;
    for m in cls.seeds() {
        let Some(u) = snap.person_index(&m.person) else {
            continue;
        };
        if !snap
            .raw_person_points(u)
            .iter()
            .any(|p| (start..=end).contains(&p.time))
        {
            continue;
        }
        infectives += 1;
        pairs += contacts_of(snap, u, cfg, None).len();
    }
    if infectives == 0 {
        return Err(Error::EmptyWindow);
    }
    let days = (end - start) as f64 / DAY_S as f64;
    let rate = pairs as f64 / (infectives as f64 * days);
    let detected = cls.seeds().len();
    let iu = cls.suspect_count();
    let theta = if detected + iu > 0 {
        detected as f64 / (detected + iu) as f64
    } else {
        0.0
    };
    Ok((
        ContactStats {
            window_start: Timestamp::new(start)?,
            window_end: cfg.current_date,
            contacts_per_infective_per_day: rate,
            distinct_pairs: pairs,
            infective_count: infectives,
        },
        EpiEstimate {
            beta_hat: rate * p_trans,
            theta_hat: theta,
            iu_size: iu,
        },
    ))
}

/// Rates are per day.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpiParams {
    pub beta: f64,
    pub gamma: f64,
    /// Latency rate; only read by SEIR.
    pub sigma: f64,
    pub p_trans: f64,
}

impl EpiParams {
    pub fn sir(beta: f64, gamma: f64) -> Self {
        EpiParams {
            beta,
            gamma,
            sigma: 1.0,
            p_trans: 1.0,
        }
    }

    pub fn seir(beta: f64, gamma: f64, sigma: f64) -> Self {
        EpiParams {
            sigma,
            ..EpiParams::sir(beta, gamma)
        }
    }

    fn validate(&self, model: Model) -> Result<()> {
        let ok = |x: f64| x.is_finite();
        if !(ok(self.beta) && self.beta >= 0.0) {
            return Err(Error::invalid("beta must be >= 0"));
        }
        if !(ok(self.gamma) && self.gamma > 0.0) {
            return Err(Error::invalid("gamma must be > 0"));
        }
        if model == Model::Seir && !(ok(self.sigma) && self.sigma > 0.0) {
            return Err(Error::invalid("sigma must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.p_trans) {
            return Err(Error::invalid("p_trans must be in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Sir,
    Seir,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sir" => Ok(Model::Sir),
            "seir" => Ok(Model::Seir),
            other => Err(Error::invalid(format!("unknown model {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompartmentState {
    pub s: f64,
    /// Always zero in SIR mode.
    pub e: f64,
    pub i: f64,
    pub r: f64,
    pub n: f64,
}

impl CompartmentState {
    /// Everyone susceptible except `i0` infectives.
    pub fn initial(n: f64, i0: f64) -> Self {
        CompartmentState {
            s: n - i0,
            e: 0.0,
            i: i0,
            r: 0.0,
            n,
        }
    }

    pub fn total(&self) -> f64 {
        self.s + self.e + self.i + self.r
    }

    fn tol(&self) -> f64 {
        1e-6 * self.n
    }

    fn in_range(&self) -> bool {
        let (lo, hi) = (-self.tol(), self.n + self.tol());
        [self.s, self.e, self.i, self.r]
            .iter()
            .all(|x| x.is_finite() && (lo..=hi).contains(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub t_days: f64,
    pub state: CompartmentState,
}

type Vec4 = [f64; 4];

fn deriv(model: Model, p: &EpiParams, n: f64, y: Vec4) -> Vec4 {
    let [s, e, i, _] = y;
    let force = p.beta * s * i / n;
    match model {
        Model::Sir => [-force, 0.0, force - p.gamma * i, p.gamma * i],
        Model::Seir => [-force, force - p.sigma * e, p.sigma * e - p.gamma * i, p.gamma * i],
    }
}

fn rk4(model: Model, p: &EpiParams, n: f64, y: Vec4, h: f64) -> Vec4 {
    let add = |a: Vec4, b: Vec4, k: f64| [a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2], a[3] + k * b[3]];
    let k1 = deriv(model, p, n, y);
    let k2 = deriv(model, p, n, add(y, k1, h / 2.0));
    let k3 = deriv(model, p, n, add(y, k2, h / 2.0));
    let k4 = deriv(model, p, n, add(y, k3, h));
    let mut out = y;
    for c in 0..4 {
        out[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    out
}

/// Integrates `model` from `t = 0` to `horizon_days` in steps of
/// `step_days` (the last step is shortened to land on the horizon).
///
/// Every `keep_every`-th state is kept; the initial and final states are
/// always kept.
pub fn integrate(
    model: Model,
    params: &EpiParams,
    init: &CompartmentState,
    horizon_days: f64,
    step_days: f64,
    keep_every: usize,
) -> Result<Vec<SeriesPoint>> {
    params.validate(model)?;
    if !(step_days > 0.0 && step_days.is_finite()) {
        return Err(Error::invalid("step must be > 0"));
    }
    if !(horizon_days >= 0.0 && horizon_days.is_finite()) {
        return Err(Error::invalid("horizon must be >= 0"));
    }
    if !(init.n > 0.0 && init.n.is_finite()) {
        return Err(Error::invalid("population must be > 0"));
    }
    if model == Model::Sir && init.e != 0.0 {
        return Err(Error::invalid("SIR state has no exposed compartment"));
    }
    if !init.in_range() || (init.total() - init.n).abs() > init.tol() {
        return Err(Error::invalid("initial state must be non-negative and sum to N"));
    }
    let keep_every = keep_every.max(1);
    let steps = (horizon_days / step_days - 1e-9).ceil().max(0.0) as u64;

    let mut y = [init.s, init.e, init.i, init.r];
    let mut out = vec![SeriesPoint {
        t_days: 0.0,
        state: *init,
    }];
    for k in 1..=steps {
        let t0 = (k - 1) as f64 * step_days;
        let t1 = if k == steps { horizon_days } else { k as f64 * step_days };
        y = rk4(model, params, init.n, y, t1 - t0);
        let state = CompartmentState {
            s: y[0],
            e: y[1],
            i: y[2],
            r: y[3],
            n: init.n,
        };
        if !state.in_range() {
            return Err(Error::NonFiniteState { t_days: t1 });
        }
        if k == steps || k % keep_every as u64 == 0 {
            out.push(SeriesPoint { t_days: t1, state });
        }
    }
    Ok(out)
}

pub fn simulate_sir(
    params: &EpiParams,
    init: &CompartmentState,
    horizon_days: f64,
    step_days: f64,
) -> Result<Vec<SeriesPoint>> {
    integrate(Model::Sir, params, init, horizon_days, step_days, 1)
}

pub fn simulate_seir(
    params: &EpiParams,
    init: &CompartmentState,
    horizon_days: f64,
    step_days: f64,
) -> Result<Vec<SeriesPoint>> {
    integrate(Model::Seir, params, init, horizon_days, step_days, 1)
}

pub fn write_series_csv(mut w: impl Write, series: &[SeriesPoint]) -> Result<()> {
    writeln!(w, "{SERIES_HEADER}")?;
    for p in series {
        let c = &p.state;
        writeln!(w, "{},{},{},{},{}", p.t_days, c.s, c.e, c.i, c.r)?;
    }
    Ok(())
}
