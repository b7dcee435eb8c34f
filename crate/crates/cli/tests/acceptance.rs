//! Acceptance run: one PASS/FAIL line per criterion, with wall time.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use firecase::corpus;
use firecase::gsn::{check_source, parse_argument, validate_with_bindings};
use firecase::metrics::{
    boundary_offset, classify_sample, discrete_detections, iou, pass_rates, summarize_verdicts, Class, PassCounts,
    RateConvention, Thresholds,
};
use firecase::passsim::{revisit_time, worst_case_response, ConstellationConfig};
use firecase::raster::{assemble_masks, catalog_dataset, tile_count, tile_mask, tile_scene, FireMask, Scene};
use firecase::requirements::{enumerate_in_context_combinations, DimensionName, RequirementSet};
use firecase::synthetic::{generate_dataset, shifted_fixture, truth_fixture, SyntheticConfig};
use firecase::verification::{build_case_matrix, run_campaign, CampaignConfig, MlsrStatus};
use firecase::Severity;

type Check = Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(t0: Instant, limit: Duration) -> Check {
    let el = t0.elapsed();
    ensure(el < limit, || format!("took {el:?}, limit {limit:?}"))
}

fn criterion_1() -> Check {
    let t0 = Instant::now();
    let rows = [(0, 0, 0.0, 0.0), (4, 27, 0.43, 2.85), (7, 96, 0.76, 9.44)];
    for (fnc, fpc, want_fn, want_fp) in rows {
        let c = PassCounts {
            discrete_detections: 921,
            false_negatives: fnc,
            false_positives: fpc,
        };
        let r = pass_rates(&c, RateConvention::MissesPerDetection).map_err(|e| e.to_string())?;
        let (got_fn, got_fp) = r.rounded();
        ensure(
            (got_fn - want_fn).abs() <= 0.01 + 1e-9 && (got_fp - want_fp).abs() <= 0.01 + 1e-9,
            || format!("FN/FP {fnc}/{fpc}: got {got_fn}/{got_fp}, want {want_fn}/{want_fp}"),
        )?;
    }
    within(t0, Duration::from_secs(1))
}

fn criterion_2() -> Check {
    let truth = FireMask::from_fn(48, 48, |r, c| (20..23).contains(&r) && (20..23).contains(&c));
    let empty = FireMask::empty(48, 48);
    let th = Thresholds::default();
    let mut verdicts = Vec::with_capacity(1000);
    for i in 0..1000 {
        let pred = if i % 125 == 0 { &empty } else { &truth };
        verdicts.push(classify_sample(&format!("s{i:04}"), pred, &truth, &th).map_err(|e| e.to_string())?);
    }
    let s = summarize_verdicts(&verdicts);
    ensure(
        s.samples == 1000 && s.false_negatives == 8 && s.false_positives == 0,
        || {
            format!(
                "counts {} / {} FN / {} FP",
                s.samples, s.false_negatives, s.false_positives
            )
        },
    )?;
    ensure(s.fn_pct == 0.8, || format!("FN rate {}%", s.fn_pct))
}

fn criterion_3() -> Check {
    let t0 = Instant::now();
    ensure(tile_count(2000, 1600, 48) == 1428, || {
        format!("tile_count {}", tile_count(2000, 1600, 48))
    })?;
    let plane = vec![0.1f32; 2000 * 1600];
    let scene = Scene::new("s", 2000, 1600, [plane.clone(), plane.clone(), plane]).map_err(|e| e.to_string())?;
    let n = tile_scene(&scene, 48).len();
    ensure(n == 1428, || format!("tile_scene produced {n} tiles"))?;
    drop(scene);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (w, h): (usize, usize) = (rng.gen_range(1..=300), rng.gen_range(1..=300));
        let bits: Vec<u64> = (0..(w * h).div_ceil(64)).map(|_| rng.gen()).collect();
        let m = FireMask::from_fn(w, h, |r, c| {
            let i = r * w + c;
            bits[i / 64] >> (i % 64) & 1 == 1
        });
        let tiles = tile_mask(&m, 48);
        ensure(tiles.len() == tile_count(w, h, 48), || {
            format!("{w}x{h}: {} tiles", tiles.len())
        })?;
        let back = assemble_masks(&tiles, w, h).map_err(|e| e.to_string())?;
        ensure(back == m, || format!("{w}x{h}: round trip differs"))?;
    }
    within(t0, Duration::from_secs(5))
}

fn criterion_4() -> Check {
    let two_days_min = 2.0 * 24.0 * 60.0;
    let worst = worst_case_response(two_days_min, 180.0);
    ensure(worst == 51.0 * 60.0, || format!("worst case {worst} min"))?;
    let c = ConstellationConfig {
        n_sats: 8,
        orbit_period_min: 94.0,
        ..ConstellationConfig::default()
    };
    let r = revisit_time(&c).map_err(|e| e.to_string())?;
    ensure(r == 11.75, || format!("revisit {r} min"))
}

fn criterion_5() -> Check {
    let t0 = Instant::now();
    let rs = RequirementSet::canonical();
    let (combos, findings) = enumerate_in_context_combinations(&rs);
    ensure(findings.iter().all(|f| !f.is_error()), || format!("{findings:?}"))?;

    let mut brute: Vec<Vec<String>> = vec![vec![]];
    let dims: Vec<DimensionName> = rs.dimensions.iter().map(|d| d.name).collect();
    for d in &rs.dimensions {
        let keys: Vec<&str> = d
            .classes
            .iter()
            .filter(|c| c.in_context)
            .map(|c| c.key.as_str())
            .collect();
        brute = brute
            .into_iter()
            .flat_map(|p| {
                keys.iter().map(move |k| {
                    let mut q = p.clone();
                    q.push(k.to_string());
                    q
                })
            })
            .collect();
    }
    let got: BTreeSet<Vec<String>> = combos
        .iter()
        .map(|c| dims.iter().map(|d| c.get(*d).unwrap_or("").to_string()).collect())
        .collect();
    let want: BTreeSet<Vec<String>> = brute.into_iter().collect();
    ensure(combos.len() == 1800 && got.len() == 1800, || {
        format!("{} combinations", combos.len())
    })?;
    ensure(got == want, || "enumeration differs from brute force".into())?;
    within(t0, Duration::from_secs(1))
}

fn oracle_iou(p: &FireMask, t: &FireMask, fire: bool) -> f64 {
    let (mut i, mut u) = (0, 0);
    for r in 0..t.height() {
        for c in 0..t.width() {
            let a = p.get(r, c) == fire;
            let b = t.get(r, c) == fire;
            if a && b {
                i += 1;
            }
            if a || b {
                u += 1;
            }
        }
    }
    if u == 0 {
        1.0
    } else {
        i as f64 / u as f64
    }
}

fn oracle_offset(p: &FireMask, t: &FireMask) -> Option<f64> {
    let tp: Vec<(usize, usize)> = t.fire_pixels().collect();
    if tp.is_empty() {
        return None;
    }
    let mut worst = 0i64;
    for (r, c) in p.fire_pixels() {
        let best = tp
            .iter()
            .map(|&(a, b)| {
                let (dr, dc) = (a as i64 - r as i64, b as i64 - c as i64);
                dr * dr + dc * dc
            })
            .min()
            .unwrap();
        worst = worst.max(best);
    }
    Some((worst as f64).sqrt())
}

fn oracle_components(m: &FireMask) -> BTreeSet<Vec<(usize, usize)>> {
    let (w, h) = m.dims();
    let mut seen = vec![false; w * h];
    let mut out = BTreeSet::new();
    for (r0, c0) in m.fire_pixels() {
        if seen[r0 * w + c0] {
            continue;
        }
        seen[r0 * w + c0] = true;
        let mut comp = vec![];
        let mut q = VecDeque::from([(r0, c0)]);
        while let Some((r, c)) = q.pop_front() {
            comp.push((r, c));
            for dr in -1i64..=1 {
                for dc in -1i64..=1 {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                        continue;
                    }
                    let (nr, nc) = (nr as usize, nc as usize);
                    if m.get(nr, nc) && !seen[nr * w + nc] {
                        seen[nr * w + nc] = true;
                        q.push_back((nr, nc));
                    }
                }
            }
        }
        comp.sort();
        out.insert(comp);
    }
    out
}

fn criterion_6() -> Check {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for i in 0..1000 {
        let (w, h) = (rng.gen_range(1..=16), rng.gen_range(1..=16));
        let density = rng.gen_range(0.0..0.6);
        let p = FireMask::from_fn(w, h, |_, _| rng.gen_bool(density));
        let t = FireMask::from_fn(w, h, |_, _| rng.gen_bool(density));
        for (cls, fire) in [(Class::Fire, true), (Class::NonFire, false)] {
            let got = iou(&p, &t, cls).map_err(|e| e.to_string())?;
            let want = oracle_iou(&p, &t, fire);
            ensure(got == want, || format!("pair {i}: iou {got} vs {want}"))?;
        }
        let got = boundary_offset(&p, &t).ok();
        let want = oracle_offset(&p, &t);
        ensure(got == want, || format!("pair {i}: offset {got:?} vs {want:?}"))?;
        let d = discrete_detections(&p);
        let got: BTreeSet<Vec<(usize, usize)>> = d
            .components
            .iter()
            .map(|c| {
                let mut v = c.pixels.clone();
                v.sort();
                v
            })
            .collect();
        let want = oracle_components(&p);
        ensure(d.count == want.len() && got == want, || {
            format!("pair {i}: {} components vs {}", d.count, want.len())
        })?;
    }
    within(t0, Duration::from_secs(30))
}

fn mutations() -> Vec<(&'static str, String, bool)> {
    let learning = corpus::LEARNING;
    let verification = corpus::VERIFICATION;
    let requirements = corpus::REQUIREMENTS;
    let scoping = corpus::SCOPING;
    let data = corpus::DATA;
    let m = |name, src: &str, from: &str, to: &str| {
        assert!(src.contains(from), "mutation {name}: pattern missing");
        (name, src.replacen(from, to, 1), false)
    };
    let add = |name, src: &str, extra: &str| (name, format!("{src}\n{extra}\n"), false);
    vec![
        m("solution-as-root", learning, "[root=G4.1]", "[root=Sn4.1]"),
        m("context-as-root", learning, "[root=G4.1]", "[root=C4.1]"),
        m("missing-root", learning, "[root=G4.1]", "[root=G9.9]"),
        m(
            "solution-supports-goal",
            learning,
            "support G4.3 -> Sn4.2",
            "support Sn4.2 -> G4.3",
        ),
        m(
            "support-to-context",
            learning,
            "support G4.2 -> Sn4.1",
            "support G4.2 -> C4.1",
        ),
        m(
            "incontext-to-goal",
            learning,
            "incontext G4.2 -> J4.1",
            "incontext G4.2 -> G4.3",
        ),
        m(
            "context-as-source",
            verification,
            "incontext G5.1 -> C5.1",
            "incontext C5.1 -> J5.1",
        ),
        add("two-node-cycle", learning, "support G4.3 -> G4.1"),
        add("self-loop", verification, "support G5.4 -> G5.4"),
        add("long-cycle", verification, "support G5.9 -> S5.1"),
        m(
            "dangling-support",
            learning,
            "support G4.3 -> Sn4.2",
            "support G4.3 -> Sn4.9",
        ),
        m(
            "dangling-context",
            verification,
            "incontext G5.1 -> C5.1",
            "incontext G5.1 -> C5.9",
        ),
        m("dangling-source", data, "support ", "support G3.99 -> G3.98\nsupport "),
        add("duplicate-id", learning, "goal G4.2 \"again\""),
        add(
            "acp-on-missing-edge",
            requirements,
            "acp ACP9.9 on G2.2 -> G2.99 [confidence=x]",
        ),
        m("unsupported-goal", learning, "support G4.3 -> Sn4.2", ""),
        m(
            "unsupported-strategy",
            learning,
            "support S4.1 -> G4.2\nsupport S4.1 -> G4.3",
            "",
        ),
        m("undeclared-root-goal", scoping, "goal ", "goal G0.0 \"stray\"\ngoal "),
        ("unbound-learning-solutions", learning.to_string(), true),
        ("unbound-verification-solutions", verification.to_string(), true),
    ]
}

fn criterion_7() -> Check {
    let t0 = Instant::now();
    let frags = corpus::fragments();
    ensure(frags.len() >= 5, || "fewer than five fragments".into())?;
    for (slot, src) in frags {
        let errors: Vec<_> = check_source(src)
            .into_iter()
            .filter(|f| f.severity == Severity::Error)
            .collect();
        ensure(errors.is_empty(), || format!("{slot}: {errors:?}"))?;
    }
    let muts = mutations();
    ensure(muts.len() == 20, || format!("{} mutations", muts.len()))?;
    for (name, src, unbound) in muts {
        let findings = if unbound {
            let g = parse_argument(&src).map_err(|e| e.to_string())?;
            validate_with_bindings(&g, &BTreeSet::new())
        } else {
            check_source(&src)
        };
        ensure(!findings.is_empty(), || format!("mutation {name} produced no finding"))?;
    }
    within(t0, Duration::from_secs(5))
}

fn criterion_8() -> Check {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = dir.path().join("dataset");
    let rs = RequirementSet::canonical();
    let cfg = SyntheticConfig {
        full_coverage: false,
        ..SyntheticConfig::default()
    };
    generate_dataset(&data, &rs, &cfg).map_err(|e| e.to_string())?;
    let catalog = catalog_dataset(&data, &rs).map_err(|e| e.to_string())?;
    let matrix = build_case_matrix(&catalog, &rs).map_err(|e| e.to_string())?;
    ensure(matrix.cases.len() >= 45, || format!("{} cases", matrix.cases.len()))?;
    let ccfg = CampaignConfig::from_requirements(&rs);

    let truth = truth_fixture(&catalog, dir.path()).map_err(|e| e.to_string())?;
    let c = run_campaign(&catalog, &matrix, &truth, &rs, &ccfg).map_err(|e| e.to_string())?;
    let s = &c.summary;
    ensure(s.fire_cases > 0 && s.detection_rate == 1.0, || {
        format!("detection rate {}", s.detection_rate)
    })?;
    ensure(s.false_positive_frames == 0, || {
        format!("{} FP frames", s.false_positive_frames)
    })?;
    for r in &c.results {
        let m = &r.metrics;
        ensure(
            m.max_boundary_offset_px.unwrap_or(0.0) == 0.0 && m.spurious_detections == 0,
            || format!("case {}: offset {:?}", r.case_id, m.max_boundary_offset_px),
        )?;
    }
    ensure(c.all_passed(), || {
        format!("{} of {} cases pass", s.passed_cases, s.cases)
    })?;

    let shifted = shifted_fixture(&catalog, &dir.path().join("shifted"), 7).map_err(|e| e.to_string())?;
    let c = run_campaign(&catalog, &matrix, &shifted, &rs, &ccfg).map_err(|e| e.to_string())?;
    let fire_cases: Vec<_> = c.results.iter().filter(|r| r.metrics.min_fire_iou.is_some()).collect();
    ensure(fire_cases.len() == s.fire_cases, || {
        format!("{} fire cases", fire_cases.len())
    })?;
    for r in fire_cases {
        ensure(r.mlsr1 == MlsrStatus::Fail, || {
            format!("case {} MLSR1 {:?}", r.case_id, r.mlsr1)
        })?;
    }
    within(t0, Duration::from_secs(60))
}

fn firecase(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_firecase"))
        .args(args)
        .output()
        .expect("spawn firecase");
    let text = format!(
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    (out.status.code().unwrap_or(-1), text)
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path().join("demo");
    let root_s = root.to_str().unwrap();
    let (rc, text) = firecase(&["init-demo", root_s, "--truth-detector"]);
    ensure(rc == 0, || format!("init-demo exit {rc}: {text}"))?;
    let manifest = root.join("project.json");
    let m_s = manifest.to_str().unwrap();
    let (rc, text) = firecase(&["--project", m_s, "assemble"]);
    ensure(rc == 0, || format!("intact project: exit {rc}: {text}"))?;

    let original = std::fs::read_to_string(&manifest).map_err(|e| e.to_string())?;
    let json: serde_json::Value = serde_json::from_str(&original).map_err(|e| e.to_string())?;
    let bindings: BTreeMap<String, serde_json::Value> =
        serde_json::from_value(json["bindings"].clone()).map_err(|e| e.to_string())?;
    ensure(!bindings.is_empty(), || "demo has no bindings".into())?;
    for sn in bindings.keys() {
        let mut j = json.clone();
        j["bindings"].as_object_mut().unwrap().remove(sn);
        std::fs::write(&manifest, serde_json::to_string_pretty(&j).unwrap()).map_err(|e| e.to_string())?;
        let (rc, text) = firecase(&["--project", m_s, "assemble"]);
        ensure(rc != 0 && text.contains(sn.as_str()), || {
            format!("without {sn}: exit {rc}: {text}")
        })?;
    }
    std::fs::write(&manifest, &original).map_err(|e| e.to_string())?;

    let log = root.join("docs/development_log.md");
    let mut bytes = std::fs::read(&log).map_err(|e| e.to_string())?;
    bytes[0] ^= 0x20;
    std::fs::write(&log, bytes).map_err(|e| e.to_string())?;
    let (rc, text) = firecase(&["--project", m_s, "assemble"]);
    ensure(rc != 0 && text.contains("changed since registration"), || {
        format!("edited log: exit {rc}: {text}")
    })
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Check); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = vec![];
    for (n, f) in criteria {
        let t0 = Instant::now();
        let r = f();
        let ms = t0.elapsed().as_secs_f64() * 1e3;
        match &r {
            Ok(()) => println!("criterion {n}: PASS ({ms:.0} ms)"),
            Err(e) => {
                println!("criterion {n}: FAIL ({ms:.0} ms): {e}");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
