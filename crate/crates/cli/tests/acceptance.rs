//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! run with `--nocapture` to see them.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::{oracle, oracle_points, oracle_seeds, random_instance, Instance};
use contrace_core::epi::{integrate, CompartmentState, EpiParams, Model};
use contrace_core::investigation::{classify_suspects, find_black_areas, Classification};
use contrace_core::sim::{measure_recall, simulate, SimConfig, SimOutput};
use contrace_core::store::io::write_points_csv;
use contrace_core::{fixtures, Area, GeoPoint, Investigation, InvestigationConfig, PatientRecord};
use contrace_core::{PatientStatus, PersonId, ProximityConfig, StoreSnapshot, Timestamp};
use contrace_core::{TrajectoryPoint, TrajectoryStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, took: Duration) -> Result<(), String> {
    check(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

fn cfg_for(snap: &StoreSnapshot, ip: i64) -> InvestigationConfig {
    InvestigationConfig {
        current_date: snap.as_of(),
        incubation_period_s: ip,
        proximity: snap.proximity(),
        ..InvestigationConfig::default()
    }
}

fn as_map(cls: &Classification) -> BTreeMap<String, (u32, i64)> {
    cls.classes()
        .iter()
        .enumerate()
        .flat_map(|(d, c)| {
            c.iter()
                .map(move |m| (m.person.to_string(), (d as u32, m.contact_ts.secs())))
        })
        .collect()
}

fn pid(s: &str) -> PersonId {
    PersonId::new(s).unwrap()
}

fn ts(s: i64) -> Timestamp {
    Timestamp::new(s).unwrap()
}

fn c1_sample() -> Outcome {
    let start = Instant::now();
    let snap = fixtures::sample_snapshot(&["P3"]);
    let cfg = cfg_for(&snap, 86_400);
    let cls = classify_suspects(&snap, &cfg).map_err(|e| e.to_string())?;
    let took = start.elapsed();

    let want = oracle::classify(
        &oracle_points(&snap),
        &oracle_seeds(&snap),
        common::Params {
            eps: 0.0,
            dt: 0,
            cd: snap.as_of().secs(),
            ip: 86_400,
        },
        false,
    );
    let got = as_map(&cls);
    check(got == want, || format!("engine {got:?} vs oracle {want:?}"))?;
    let names = |d: usize| cls.class(d).iter().map(|m| m.person.to_string()).collect::<Vec<_>>();
    check(
        cls.depth() == 3 && names(0) == ["P3"] && names(1) == ["P1"] && names(2) == ["P5"],
        || format!("classes {:?}", (0..cls.depth()).map(names).collect::<Vec<_>>()),
    )?;
    for p in ["P2", "P4"] {
        check(cls.class_of(&pid(p)).is_none(), || format!("{p} classified"))?;
    }
    within(Duration::from_secs(1), took)?;
    Ok(format!("class0={{P3}} class1={{P1}} class2={{P5}} in {took:.2?}"))
}

fn instances(n: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE);
    (0..n).map(|_| random_instance(&mut rng, false)).collect()
}

fn c2_oracle(insts: &[Instance]) -> Outcome {
    let start = Instant::now();
    let mut mismatches = 0;
    let mut deep = 0;
    for inst in insts {
        let cls = classify_suspects(&inst.snap, &cfg_for(&inst.snap, inst.params.ip)).map_err(|e| e.to_string())?;
        let want = oracle::classify(
            &oracle_points(&inst.snap),
            &oracle_seeds(&inst.snap),
            inst.params,
            false,
        );
        deep += want.values().any(|(d, _)| *d >= 3) as usize;
        mismatches += (as_map(&cls) != want) as usize;
    }
    let took = start.elapsed();
    check(mismatches == 0, || format!("{mismatches} mismatches"))?;
    check(deep >= 100, || format!("only {deep} instances reached class 3"))?;
    within(Duration::from_secs(60), took)?;
    Ok(format!(
        "{} instances, 0 mismatches, {deep} reach class 3, {took:.2?}",
        insts.len()
    ))
}

fn c3_index() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1DE5);
    let base = GeoPoint::new(52.37, 4.89).unwrap();
    let pts: Vec<_> = (0..5_000)
        .map(|i| {
            TrajectoryPoint::new(
                pid(&format!("q{}", i % 131)),
                base.offset_m(rng.random_range(-500.0..500.0), rng.random_range(-500.0..500.0)),
                ts((i / 131) as i64 * 41 + rng.random_range(0..41)),
            )
        })
        .collect();
    let cfg = ProximityConfig::new(25.0, 90).unwrap();
    let snap = StoreSnapshot::from_points(&pts, vec![], ts(1_000_000), cfg).map_err(|e| e.to_string())?;
    let all: Vec<_> = snap.points().collect();
    check(all.len() == 5_000, || format!("{} points stored", all.len()))?;
    let mut mismatches = 0;
    let mut found = 0;
    for _ in 0..200 {
        let p = &all[rng.random_range(0..all.len())];
        let want: Vec<_> = all
            .iter()
            .filter(|q| q.person != p.person)
            .filter(|q| (q.time.secs() - p.time.secs()).abs() <= 90)
            .filter(|q| oracle::haversine_m(p.loc.lat(), p.loc.lon(), q.loc.lat(), q.loc.lon()) <= 25.0)
            .cloned()
            .collect();
        found += want.len();
        mismatches += (snap.candidates_near(p, &cfg) != want) as usize;
    }
    check(mismatches == 0, || format!("{mismatches} probe mismatches"))?;
    check(found > 0, || "probes never found a neighbour".into())?;
    Ok(format!("5000 points, 200 probes, {found} neighbours, 0 mismatches"))
}

fn c4_black_areas(insts: &[Instance]) -> Outcome {
    let base = GeoPoint::new(41.39, 2.17).unwrap();
    let centre = |k: usize| base.offset_m(1_000.0 * k as f64, 0.0);
    let areas: Vec<Area> = (0..5)
        .map(|k| Area::new(format!("A{}", k + 1), centre(k), 50.0).unwrap())
        .collect();
    let cd = 1_000_000;
    // (person, area index, north offset in m, time)
    let visits: &[(&str, usize, f64, i64)] = &[
        ("Q1", 0, 0.0, cd - 9_000),
        ("Q1", 0, 10.0, cd - 8_000),
        ("Q2", 0, -20.0, cd - 7_000),
        ("Q3", 0, 49.0, cd - 6_000),
        ("Q4", 0, 0.0, cd - 5_000),
        ("Q1", 1, 0.0, cd - 4_000),
        ("Q2", 1, 30.0, cd - 3_000),
        ("Q3", 1, -30.0, cd - 2_000),
        ("Q2", 2, 0.0, cd - 1_000),
        ("Q4", 2, 5.0, cd - 500),
        ("N1", 2, 0.0, cd - 400),
        ("Q3", 3, 0.0, cd - 300),
        ("Q4", 3, 60.0, cd - 200),
        ("Q1", 3, 0.0, cd + 100),
        ("N1", 4, 0.0, cd - 100),
        ("N2", 4, 1.0, cd - 50),
    ];
    let pts: Vec<_> = visits
        .iter()
        .map(|&(p, k, dn, t)| TrajectoryPoint::new(pid(p), centre(k).offset_m(dn, 0.0), ts(t)))
        .collect();
    let patients: Vec<_> = ["Q1", "Q2", "Q3", "Q4"]
        .iter()
        .map(|p| PatientRecord {
            person: pid(p),
            status: PatientStatus::Active,
            confirmed_at: ts(cd),
        })
        .collect();
    let snap = StoreSnapshot::from_points(&pts, patients, ts(cd), ProximityConfig::new(2.0, 300).unwrap())
        .map_err(|e| e.to_string())?;
    let mut cfg = cfg_for(&snap, 14 * 86_400);

    let ba = find_black_areas(&snap, &areas, &cfg);
    let counts: Vec<usize> = ba.areas.iter().map(|a| a.count).collect();
    check(counts == [4, 3, 2, 1, 0], || format!("counts {counts:?}"))?;
    let expected: [&[&str]; 5] = [
        &["A1", "A2", "A3", "A4"],
        &["A1", "A2", "A3"],
        &["A1", "A2"],
        &["A1"],
        &[],
    ];
    for (alpha, want) in (1..=5).zip(expected) {
        cfg.alpha = alpha;
        let got: Vec<String> = find_black_areas(&snap, &areas, &cfg)
            .black_areas()
            .map(|a| a.area.area_id.clone())
            .collect();
        check(got == want, || format!("alpha {alpha}: {got:?}"))?;
    }

    // Monotonicity on the random instances, with areas on the sample points.
    let mut checked = 0;
    for inst in insts {
        let areas: Vec<Area> = inst
            .snap
            .points()
            .step_by(7)
            .take(10)
            .enumerate()
            .map(|(i, p)| Area::new(format!("r{i}"), p.loc, 30.0).unwrap())
            .collect();
        let mut c = cfg_for(&inst.snap, inst.params.ip);
        let mut prev: Option<BTreeSet<String>> = None;
        for alpha in 1..=5 {
            c.alpha = alpha;
            let now: BTreeSet<String> = find_black_areas(&inst.snap, &areas, &c)
                .black_areas()
                .map(|a| a.area.area_id.clone())
                .collect();
            if let Some(p) = &prev {
                check(now.is_subset(p), || format!("BA({alpha}) not within BA({})", alpha - 1))?;
            }
            prev = Some(now);
        }
        checked += 1;
    }
    Ok(format!(
        "counts [4,3,2,1,0]; BA(a+1) within BA(a) for a in 1..5 on fixture and {checked} instances"
    ))
}

fn c5_partition(insts: &[Instance]) -> Outcome {
    let mut members = 0;
    for (n, inst) in insts.iter().enumerate() {
        let cls = classify_suspects(&inst.snap, &cfg_for(&inst.snap, inst.params.ip)).map_err(|e| e.to_string())?;
        let adj = oracle::adjacency(&oracle_points(&inst.snap), inst.params);
        let mut seen = BTreeSet::new();
        for (d, class) in cls.classes().iter().enumerate() {
            for m in class {
                members += 1;
                check(seen.insert(m.person.clone()), || {
                    format!("instance {n}: {} in two classes", m.person)
                })?;
                if d < 1 {
                    continue;
                }
                let nbr: BTreeSet<u32> = adj
                    .get(m.person.as_str())
                    .into_iter()
                    .flat_map(|a| a.keys())
                    .filter_map(|v| cls.class_of(&pid(v)))
                    .collect();
                check(nbr.contains(&(d as u32 - 1)), || {
                    format!("instance {n}: {} lacks an edge to class {}", m.person, d - 1)
                })?;
                check(nbr.iter().all(|&e| e + 2 > d as u32), || {
                    format!("instance {n}: {} skips a layer", m.person)
                })?;
            }
        }
    }
    Ok(format!(
        "{} instances, {members} classified persons checked",
        insts.len()
    ))
}

fn snapshot_csv(out: &SimOutput) -> Result<Vec<u8>, String> {
    let mut store = TrajectoryStore::new();
    out.ingest(&mut store).map_err(|e| e.to_string())?;
    let snap = store.snapshot(out.end(), out.config.proximity);
    let mut buf = Vec::new();
    write_points_csv(&mut buf, snap.points()).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn c6_offline() -> Outcome {
    let base = SimConfig {
        persons: 400,
        days: 4,
        seed: 7,
        ..SimConfig::default()
    };
    let online = simulate(&base).map_err(|e| e.to_string())?;
    let offline = simulate(&SimConfig { p_offline: 0.5, ..base }).map_err(|e| e.to_string())?;
    let late = offline.batches.iter().filter(|b| b.arrival_day > b.day).count();
    check(late > 0, || "no batch was delayed".into())?;
    check(online.batches != offline.batches, || "arrival order unchanged".into())?;
    let a = snapshot_csv(&online)?;
    let b = snapshot_csv(&offline)?;
    check(a == b, || "snapshot exports differ".into())?;
    Ok(format!(
        "{late} of {} batches delayed; {} byte exports identical",
        offline.batches.len(),
        a.len()
    ))
}

fn c7_epi() -> Outcome {
    let n = 1_000.0;
    let e = |r: contrace_core::Result<_>| r.map_err(|e: contrace_core::Error| e.to_string());

    let init = CompartmentState::initial(n, 5.0);
    let p = EpiParams::seir(0.9, 0.2, 0.3);
    let mut drift: f64 = 0.0;
    for model in [Model::Sir, Model::Seir] {
        let series = e(integrate(model, &p, &init, 100.0, 0.01, 1))?;
        check(series.len() == 10_001, || format!("{} states", series.len()))?;
        drift = series.iter().map(|s| (s.state.total() - n).abs()).fold(drift, f64::max);
    }
    check(drift <= 1e-9 * n, || format!("conservation drift {drift:e}"))?;

    let init = CompartmentState::initial(n, 10.0);
    let series = e(integrate(Model::Sir, &EpiParams::sir(0.0, 0.2), &init, 10.0, 0.01, 1))?;
    let decay = series
        .iter()
        .map(|s| {
            let exact = 10.0 * (-0.2 * s.t_days).exp();
            ((s.state.i - exact) / exact).abs()
        })
        .fold(0.0, f64::max);
    check(decay < 1e-6, || format!("beta=0 relative error {decay:e}"))?;

    let init = CompartmentState::initial(n, 1.0);
    let p = EpiParams::sir(0.4, 0.2);
    let coarse = e(integrate(Model::Sir, &p, &init, 100.0, 0.01, 1))?;
    let fine = e(integrate(Model::Sir, &p, &init, 100.0, 0.005, 2))?;
    check(coarse.len() == fine.len(), || "halved series misaligned".into())?;
    let halving = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| {
            [(a.state.s, b.state.s), (a.state.i, b.state.i), (a.state.r, b.state.r)]
                .iter()
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    check(halving < 1e-6, || format!("step halving changed states by {halving:e}"))?;

    let p = EpiParams::seir(0.4, 0.2, 1e6);
    let seir = e(integrate(Model::Seir, &p, &init, 20.0, 1e-6, 100_000))?;
    let sir = e(integrate(Model::Sir, &p, &init, 20.0, 1e-6, 100_000))?;
    let gap = seir
        .iter()
        .zip(&sir)
        .map(|(a, b)| {
            [
                (a.state.s, b.state.s),
                (a.state.e + a.state.i, b.state.i),
                (a.state.r, b.state.r),
            ]
            .iter()
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    check(gap < 1e-3, || format!("SEIR vs SIR gap {gap:e}"))?;
    Ok(format!(
        "drift {drift:.1e}, decay err {decay:.1e}, halving {halving:.1e}, seir gap {gap:.1e}"
    ))
}

fn c8_recall() -> Outcome {
    let start = Instant::now();
    let mut report = Vec::new();
    let mut failures = Vec::new();
    for participation in [0.25, 0.5, 0.75, 1.0] {
        let cfg = SimConfig {
            persons: 1_000,
            pois: 30,
            days: 7,
            seed: 7,
            p_trans: 1.0,
            participation,
            ..SimConfig::default()
        };
        let out = simulate(&cfg).map_err(|e| e.to_string())?;
        let mut store = TrajectoryStore::new();
        out.ingest(&mut store).map_err(|e| e.to_string())?;
        let snap = store.snapshot(out.end(), cfg.proximity);
        let inv_cfg = InvestigationConfig {
            current_date: out.end(),
            proximity: cfg.proximity,
            ..InvestigationConfig::default()
        };
        let cls = classify_suspects(&snap, &inv_cfg).map_err(|e| e.to_string())?;
        let recall = measure_recall(&cls, &out.ground_truth);
        report.push(format!(
            "{participation}->{recall:.4} (n={})",
            out.ground_truth.contacts.len()
        ));
        let ok = if participation == 1.0 {
            recall == 1.0
        } else {
            (recall - participation).abs() <= 0.15
        };
        if !ok {
            failures.push(format!("participation {participation}: recall {recall}"));
        }
    }
    let took = start.elapsed();
    check(failures.is_empty(), || failures.join("; "))?;
    within(Duration::from_secs(120), took)?;
    Ok(format!("{} in {took:.2?}", report.join(", ")))
}

/// 1000 persons reporting every 300 s for 7 days; about 30% of samples are
/// at one of 30 points of interest, the rest are scattered.
fn desk_scale_points() -> (Vec<TrajectoryPoint>, Vec<Area>) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let base = GeoPoint::new(48.80, 2.25).unwrap();
    let pois: Vec<Area> = (0..30)
        .map(|i| {
            let c = base.offset_m(rng.random_range(0.0..11_000.0), rng.random_range(0.0..12_000.0));
            Area::new(format!("poi{i:02}"), c, 25.0).unwrap()
        })
        .collect();
    let start = 1_700_006_400;
    let mut pts = Vec::with_capacity(1_000 * 7 * 288);
    for person in 0..1_000 {
        let id = pid(&format!("d{person:04}"));
        for k in 0..7 * 288 {
            let loc = if rng.random_bool(0.3) {
                pois[rng.random_range(0..30)]
                    .center
                    .offset_m(rng.random_range(-15.0..15.0), rng.random_range(-15.0..15.0))
            } else {
                base.offset_m(rng.random_range(0.0..11_000.0), rng.random_range(0.0..12_000.0))
            };
            pts.push(TrajectoryPoint::new(id.clone(), loc, ts(start + 300 * k)));
        }
    }
    (pts, pois)
}

fn c9_scale() -> Outcome {
    let (pts, pois) = desk_scale_points();
    let n = pts.len();
    let cd = ts(1_700_006_400 + 7 * 86_400);
    let start = Instant::now();
    let mut store = TrajectoryStore::new();
    for chunk in pts.chunks(2_016) {
        store.append_points(chunk).map_err(|e| e.to_string())?;
    }
    for p in ["d0001", "d0222", "d0555", "d0777", "d0999"] {
        store.report_patient(pid(p), cd).map_err(|e| e.to_string())?;
    }
    let ingest = start.elapsed();
    let cfg = InvestigationConfig {
        current_date: cd,
        alpha: 2,
        ..InvestigationConfig::default()
    };
    let snap = store.snapshot(cd, cfg.proximity);
    let inv = Investigation::run(&snap, &pois, cfg).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    check(store.len() == n, || format!("stored {} of {n}", store.len()))?;
    check(inv.classification.depth() > 1, || "no suspects found".into())?;
    within(Duration::from_secs(60), took)?;
    let classes: Vec<usize> = inv.classification.classes().iter().map(Vec::len).collect();
    Ok(format!(
        "{n} points, ingest {ingest:.2?}, total {took:.2?}, classes {classes:?}"
    ))
}

fn run_cli(data: &Path, args: &[&str]) -> Result<String, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_contrace"))
        .arg("--data-dir")
        .arg(data)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    Ok(String::from_utf8_lossy(&o.stdout).into_owned())
}

fn dir_bytes(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut m = BTreeMap::new();
    for e in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let e = e.map_err(|e| e.to_string())?;
        m.insert(
            e.file_name().to_string_lossy().into_owned(),
            std::fs::read(e.path()).map_err(|e| e.to_string())?,
        );
    }
    Ok(m)
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("data");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        run_cli(&data, &["simulate", "--seed", "7", "--out-dir", out.to_str().unwrap()])?;
    }
    let (fa, fb) = (dir_bytes(&a)?, dir_bytes(&b)?);
    check(fa.len() >= 5, || format!("only {} files written", fa.len()))?;
    check(fa == fb, || "simulate outputs differ".into())?;

    let path = |f: &str| a.join(f).to_string_lossy().into_owned();
    run_cli(
        &data,
        &[
            "ingest",
            "--areas",
            &path("areas.csv"),
            "--points",
            &path("points.csv"),
            "--intervals",
            &path("intervals.csv"),
            "--patients",
            &path("patients.csv"),
        ],
    )?;
    let mut exports = Vec::new();
    for _ in 0..2 {
        let out = run_cli(&data, &["investigate"])?;
        let id = out
            .lines()
            .find_map(|l| l.strip_prefix("investigation "))
            .ok_or("no investigation id printed")?
            .to_string();
        let mut files = dir_bytes(&data.join("investigations").join(&id))?;
        files.insert(
            "stdout:classes".into(),
            run_cli(&data, &["classes", "--investigation", &id])?.into_bytes(),
        );
        files.insert(
            "stdout:black-areas".into(),
            run_cli(&data, &["black-areas", "--investigation", &id])?.into_bytes(),
        );
        files.insert(
            "stdout:suspects".into(),
            run_cli(&data, &["suspects", "--investigation", &id])?.into_bytes(),
        );
        exports.push(files);
    }
    check(exports[0] == exports[1], || {
        let diff: Vec<_> = exports[0]
            .keys()
            .filter(|k| exports[0].get(*k) != exports[1].get(*k))
            .collect();
        format!("investigation exports differ: {diff:?}")
    })?;
    let total: usize = fa.values().map(Vec::len).sum();
    Ok(format!(
        "{} simulate files ({total} bytes) identical; {} export files identical",
        fa.len(),
        exports[0].len()
    ))
}

#[test]
fn acceptance() {
    let insts = instances(1_000);
    let criteria: Vec<Criterion> = vec![
        (1, "sample scenario", Box::new(c1_sample)),
        (2, "oracle equivalence", Box::new(|| c2_oracle(&insts))),
        (3, "index completeness", Box::new(c3_index)),
        (4, "black areas", Box::new(|| c4_black_areas(&insts))),
        (5, "partition and distance", Box::new(|| c5_partition(&insts))),
        (6, "offline reorder tolerance", Box::new(c6_offline)),
        (7, "SIR/SEIR numerics", Box::new(c7_epi)),
        (8, "participation recall", Box::new(c8_recall)),
        (9, "desk-scale performance", Box::new(c9_scale)),
        (10, "determinism", Box::new(c10_determinism)),
    ];
    let mut failed = Vec::new();
    for (n, name, f) in &criteria {
        let start = Instant::now();
        let res = f();
        let took = start.elapsed();
        match res {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail} [{took:.2?}]"),
            Err(why) => {
                println!("criterion {n:>2} FAIL  {name}: {why} [{took:.2?}]");
                failed.push(*n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
