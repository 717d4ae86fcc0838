//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so every line is printed; exits nonzero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use cinecam::compiler::{compile, macro_align, micro_align, roi_from_boxes, shot_params, CompileInputs, ShotParams, SimInstruction};
use cinecam::config::Config;
use cinecam::dataset::read_records_path;
use cinecam::genmetrics::{fid, manifold_scores, FeatureSet, ManifoldParams};
use cinecam::objectives::{fuse_teacher, rel_loss, schedule_value, speed_loss, total_loss, EmbeddingVector, LossComponents, LossWeights, ScheduleSpec};
use cinecam::pose::{
    angular_argument, default_boxes, pose_discrepancy, CameraPose, CameraTrajectory, DiscrepancyParams, SubjectState, SubjectTrajectory,
    Vec3, TAN_ARG_MAX,
};
use cinecam::scl::{
    endpoint_count, enumerate_scds, format_scd, parse_scd, CameraAngleSpec, EasingKind, Elevation, EndpointSpec, EnumerationSpec,
    FramingCell, MovementKind, MovementSpec, ScdRecord, ShotType, Side,
};
use cinecam::simulator::{
    check_constraints, enforce_constraint, focus_track, generate_subject_motion, simulate, subject_aware_position, Constraint, MotionKind,
    SubjectMotionModel,
};
use cinecam::view::project;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pick<T: Copy>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.gen_range(0..items.len())]
}

fn random_pose(rng: &mut ChaCha8Rng, angle_range: f64) -> CameraPose {
    let p = Vec3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
    let r = [
        rng.gen_range(-angle_range..angle_range),
        rng.gen_range(-angle_range..angle_range),
        rng.gen_range(-angle_range..angle_range),
    ];
    CameraPose::new(p, r, rng.gen_range(0.3..1.5)).unwrap()
}

fn random_trajectory(rng: &mut ChaCha8Rng, len: usize) -> CameraTrajectory {
    CameraTrajectory::new((0..len).map(|_| random_pose(rng, 3.0)).collect(), 30.0).unwrap()
}

fn random_subject_state(rng: &mut ChaCha8Rng) -> SubjectState {
    let dims = Vec3::new(rng.gen_range(0.3..0.8), rng.gen_range(0.2..0.5), rng.gen_range(1.2..2.0));
    let center = Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), dims.z / 2.0);
    SubjectState::upright(center, dims, rng.gen_range(-3.0..3.0))
}

fn random_endpoint(rng: &mut ChaCha8Rng) -> EndpointSpec {
    EndpointSpec {
        shot: pick(rng, ShotType::ALL),
        angle: CameraAngleSpec {
            elevation: pick(rng, Elevation::ALL),
            side: pick(rng, Side::ALL),
        },
        framing: pick(rng, FramingCell::ALL),
    }
}

fn shot_table() -> Outcome {
    let rows = [
        (ShotType::Ecu, 0.0, 0.5),
        (ShotType::Cu, 0.0, 1.0),
        (ShotType::Mcu, 0.25, 1.0),
        (ShotType::Ms, 0.5, 1.0),
        (ShotType::Fs, 1.0, 1.0),
        (ShotType::Ls, 1.0, 1.5),
        (ShotType::Vls, 1.0, 2.0),
        (ShotType::Els, 1.0, 3.0),
    ];
    for (shot, f, s) in rows {
        let got = shot_params(shot);
        ensure!(got == ShotParams { interp_factor: f, scale: s }, "{shot}: {got:?}");
    }
    Ok("8 rows exact".into())
}

fn discrepancy_suite() -> Outcome {
    let mut r = rng(2);
    for i in 0..20 {
        let eps = 0.05 + 0.5 * i as f64;
        let c = random_pose(&mut r, 3.0);
        let expected = 3.0 * (std::f64::consts::PI / (4.0 + eps)).tan();
        let got = pose_discrepancy(&c, &c, &DiscrepancyParams::verbatim(eps));
        ensure!((got - expected).abs() < 1e-12, "eps {eps}: {got} vs {expected}");
    }
    let norm = DiscrepancyParams::default();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let c = random_pose(&mut r, 3.0);
        ensure!(pose_discrepancy(&c, &c, &norm).abs() < 1e-12, "identity not zero");
        let offset = Vec3::new(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0));
        let moved = CameraPose {
            position: c.position + offset,
            ..c
        };
        let err = (pose_discrepancy(&c, &moved, &norm) - offset.norm()).abs();
        worst = worst.max(err);
    }
    ensure!(worst < 1e-12, "translation offset error {worst:e}");
    for _ in 0..100_000 {
        let eps = r.gen_range(1e-3..10.0);
        let a = random_pose(&mut r, 50.0);
        let b = random_pose(&mut r, 50.0);
        for j in 0..3 {
            let arg = angular_argument(a.rotation[j], b.rotation[j], eps, j + 1);
            ensure!((0.0..=TAN_ARG_MAX).contains(&arg) && arg < std::f64::consts::FRAC_PI_2, "tan argument {arg}");
        }
        let d = pose_discrepancy(&a, &b, &DiscrepancyParams::verbatim(eps));
        ensure!(d.is_finite(), "non-finite discrepancy");
    }
    Ok(format!("20 eps baselines, translation error {worst:.1e}, 1e5 finite pairs"))
}

fn loss_identities() -> Outcome {
    let mut r = rng(3);
    let params = DiscrepancyParams::default();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = r.gen_range(2..40);
        let c = random_trajectory(&mut r, len);
        let h = random_trajectory(&mut r, len);
        let o = Vec3::new(r.gen_range(-100.0..100.0), r.gen_range(-100.0..100.0), r.gen_range(-100.0..100.0));
        let shift = |t: &CameraTrajectory| {
            let mut t = t.clone();
            t.frames.iter_mut().for_each(|p| p.position += o);
            t
        };
        for f in [rel_loss, speed_loss] {
            let base = f(&c, &h, &params).unwrap();
            for (a, b) in [(shift(&c), h.clone()), (c.clone(), shift(&h)), (shift(&c), shift(&h))] {
                worst = worst.max((f(&a, &b, &params).unwrap() - base).abs());
            }
        }
    }
    ensure!(worst <= 1e-9, "offset invariance error {worst:e}");

    let w = LossWeights::default();
    ensure!((w.alpha, w.beta, w.gamma, w.lambda) == (8.0, 20.0, 50.0, 5.0), "default weights {w:?}");
    let unit = LossComponents {
        init: 1.0,
        rel: 1.0,
        speed: 1.0,
        clip: 1.0,
        cycle: 1.0,
    };
    ensure!(total_loss(&unit, &w) == 84.0, "unit sum {}", total_loss(&unit, &w));
    let base = LossComponents {
        init: 0.3,
        rel: 1.7,
        speed: 0.2,
        clip: 0.9,
        cycle: 0.4,
    };
    let step = 1e-3;
    let bump = |i: usize| {
        let mut c = base;
        *[&mut c.init, &mut c.rel, &mut c.speed, &mut c.clip, &mut c.cycle][i] += step;
        c
    };
    for (i, weight) in [1.0, w.alpha, w.beta, w.gamma, w.lambda].into_iter().enumerate() {
        let slope = (total_loss(&bump(i), &w) - total_loss(&base, &w)) / step;
        ensure!((slope - weight).abs() <= 1e-6 * weight.max(1.0), "component {i}: slope {slope}");
    }
    Ok(format!("offset error {worst:.1e}, slopes 1/8/20/50/5, sum 84"))
}

fn segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let s = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

fn subject_aware_degeneracy() -> Outcome {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    let v = |r: &mut ChaCha8Rng| Vec3::new(r.gen_range(-10.0..10.0), r.gen_range(-10.0..10.0), r.gen_range(-10.0..10.0));
    for _ in 0..1000 {
        let (p0, p1, c) = (v(&mut r), v(&mut r), v(&mut r));
        let alpha = r.gen_range(0.0..=1.0);
        for i in 0..30 {
            let t = i as f64 / 29.0;
            let p = subject_aware_position(&p0, &p1, &c, &c, alpha, t);
            worst = worst.max(segment_distance(&p, &p0, &p1));
        }
    }
    ensure!(worst < 1e-9, "max distance from segment {worst:e}");
    Ok(format!("max distance {worst:.1e}"))
}

fn orbit_case(r: &mut ChaCha8Rng, seed: u64, cfg: &Config) -> (ScdRecord, SimInstruction, SubjectTrajectory) {
    let init = random_endpoint(r);
    let end = r.gen_bool(0.5).then(|| EndpointSpec {
        shot: init.shot,
        ..random_endpoint(r)
    });
    let scd = ScdRecord {
        init,
        end,
        movement: MovementSpec {
            kind: MovementKind::Orbit,
            easing: pick(r, EasingKind::ALL),
            duration_frames: 30,
        },
    };
    let model = SubjectMotionModel {
        kind: pick(r, &MotionKind::ALL),
        start: random_subject_state(r),
        speed: 0.04,
        turn_rate: 0.03,
        jitter: 0.2,
        seed,
    };
    let subject = generate_subject_motion(&model, 30).unwrap();
    let (abox, vbox) = default_boxes(&subject.first().dims);
    let inputs = CompileInputs {
        abox: &abox,
        vbox: &vbox,
        config: cfg,
        seed,
    };
    let instr = compile(&scd, &subject, inputs).unwrap_or_else(|e| panic!("{}: {e}", format_scd(&scd)));
    (scd, instr, subject)
}

fn max_gap(a: &CameraTrajectory, b: &CameraTrajectory) -> f64 {
    a.frames
        .iter()
        .zip(&b.frames)
        .map(|(p, q)| {
            let rot = (0..3).map(|i| (p.rotation[i] - q.rotation[i]).abs()).fold(0.0, f64::max);
            (p.position - q.position).amax().max(rot).max((p.fov - q.fov).abs())
        })
        .fold(0.0, f64::max)
}

fn orbit_postconditions() -> Outcome {
    let cfg = Config::default();
    let mut r = rng(5);
    let (mut radius, mut accel_excess, mut idem) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
    for n in 0..1000u64 {
        let (scd, instr, subject) = orbit_case(&mut r, n, &cfg);
        let traj = simulate(&instr, &subject, &cfg).map_err(|e| format!("{}: {e}", format_scd(&scd)))?;
        let rep = check_constraints(&traj, &subject, &instr.constraints, &cfg).map_err(|e| e.to_string())?;
        let dev = rep.radius_deviation.ok_or("orbit without static distance")?;
        let (acc, lim) = rep.max_acceleration.ok_or("orbit without acceleration limit")?;
        ensure!(rep.visible_fraction == Some(1.0), "{}: visibility {:?}", format_scd(&scd), rep.visible_fraction);
        radius = radius.max(dev);
        accel_excess = accel_excess.max(acc - lim);
        let focus = focus_track(&subject, &instr.constraints.focus_offset);
        for c in [Constraint::StaticDistance, Constraint::Visibility, Constraint::MaxAcceleration(lim)] {
            let again = enforce_constraint(&traj, &focus, c, &cfg).map_err(|e| e.to_string())?;
            idem = idem.max(max_gap(&again, &traj));
        }
    }
    ensure!(radius <= 1e-3, "radius deviation {radius:e}");
    ensure!(accel_excess <= 1e-9, "acceleration over limit by {accel_excess:e}");
    ensure!(idem <= 1e-9, "pass idempotence gap {idem:e}");
    Ok(format!("radius {radius:.1e}, accel margin {:.1e}, idempotence {idem:.1e}", -accel_excess))
}

fn framing() -> Outcome {
    let cfg = Config::default();
    let mut r = rng(6);
    let (mut worst, mut idem) = (0.0f64, 0.0f64);
    for _ in 0..200 {
        let s = random_subject_state(&mut r);
        let e = random_endpoint(&mut r);
        let (abox, vbox) = default_boxes(&s.dims);
        let roi = roi_from_boxes(&abox.placed(&s), &vbox.placed(&s), shot_params(e.shot)).map_err(|e| e.to_string())?;
        let pose = macro_align(&e.angle, &roi, &s, cfg.default_fov(), &cfg).map_err(|e| e.to_string())?;
        for &cell in FramingCell::ALL {
            let ctx = || format!("{} {} {cell}", e.shot, e.angle.elevation);
            let aligned = micro_align(&pose, &roi, cell, &cfg).map_err(|err| format!("{}: {err}", ctx()))?;
            let (u, v) = project(&aligned, &roi.center, cfg.aspect).ok_or_else(|| format!("{}: behind camera", ctx()))?;
            let (cu, cv) = cell.ndc();
            worst = worst.max((u - cu).hypot(v - cv));
            let again = micro_align(&aligned, &roi, cell, &cfg).map_err(|err| format!("{}: realign {err}", ctx()))?;
            let rot = (0..3).map(|i| (again.rotation[i] - aligned.rotation[i]).abs()).fold(0.0, f64::max);
            idem = idem
                .max((again.position - aligned.position).amax())
                .max(rot)
                .max((again.fov - aligned.fov).abs());
        }
    }
    ensure!(worst <= 0.02, "framing error {worst}");
    ensure!(idem <= 1e-6, "micro alignment idempotence gap {idem:e}");
    Ok(format!("framing error {worst:.1e}, idempotence {idem:.1e}"))
}

fn oracle_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn oracle_radii(set: &[Vec<f64>], k: usize) -> Vec<f64> {
    set.iter()
        .enumerate()
        .map(|(i, x)| {
            let mut d: Vec<f64> = set
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, y)| oracle_distance(x, y))
                .collect();
            d.sort_by(f64::total_cmp);
            d[k - 1]
        })
        .collect()
}

/// Exhaustive double loops: (precision, recall, density, coverage).
fn oracle_scores(real: &[Vec<f64>], gen: &[Vec<f64>], k: usize) -> (f64, f64, f64, f64) {
    let rr = oracle_radii(real, k);
    let rg = oracle_radii(gen, k);
    let (mut p, mut rec, mut dens, mut cov) = (0usize, 0usize, 0usize, 0usize);
    for g in gen {
        let mut hit = false;
        for (x, rad) in real.iter().zip(&rr) {
            if oracle_distance(g, x) <= *rad {
                hit = true;
                dens += 1;
            }
        }
        p += hit as usize;
    }
    for (x, rad) in real.iter().zip(&rr) {
        let mut recalled = false;
        let mut covered = false;
        for (g, gr) in gen.iter().zip(&rg) {
            recalled |= oracle_distance(x, g) <= *gr;
            covered |= oracle_distance(g, x) <= *rad;
        }
        rec += recalled as usize;
        cov += covered as usize;
    }
    let (n, m) = (real.len() as f64, gen.len() as f64);
    (p as f64 / m, rec as f64 / n, dens as f64 / (k as f64 * m), cov as f64 / n)
}

fn random_rows(r: &mut ChaCha8Rng, n: usize, dim: usize, lattice: bool, shift: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if lattice {
                        r.gen_range(-3i32..=3) as f64 + shift
                    } else {
                        r.gen::<f64>() * 4.0 - 2.0 + shift
                    }
                })
                .collect()
        })
        .collect()
}

fn manifold_oracle() -> Outcome {
    let mut r = rng(7);
    for case in 0..100 {
        let k = [1, 3, 5][case % 3];
        let n = r.gen_range(k + 1..=200);
        let m = r.gen_range(k + 1..=200);
        let dim = r.gen_range(1..=8);
        let lattice = case % 4 == 0;
        let shift = r.gen_range(0.0..1.0);
        let real = random_rows(&mut r, n, dim, lattice, 0.0);
        let gen = random_rows(&mut r, m, dim, lattice, if lattice { 0.0 } else { shift });
        let got = manifold_scores(&FeatureSet::from_rows(&real).unwrap(), &FeatureSet::from_rows(&gen).unwrap(), ManifoldParams { k })
            .map_err(|e| e.to_string())?;
        let want = oracle_scores(&real, &gen, k);
        ensure!(
            (got.precision, got.recall, got.density, got.coverage) == want,
            "case {case} (N {n}, M {m}, k {k}): {got:?} vs {want:?}"
        );
    }
    for k in [1, 3, 5] {
        let real = random_rows(&mut r, 50, 4, false, 0.0);
        let far = random_rows(&mut r, 50, 4, false, 1e3);
        let rs = FeatureSet::from_rows(&real).unwrap();
        let same = manifold_scores(&rs, &rs, ManifoldParams { k }).map_err(|e| e.to_string())?;
        ensure!((same.precision, same.recall, same.coverage) == (1.0, 1.0, 1.0), "identity k {k}: {same:?}");
        let apart = manifold_scores(&rs, &FeatureSet::from_rows(&far).unwrap(), ManifoldParams { k }).map_err(|e| e.to_string())?;
        ensure!((apart.precision, apart.recall, apart.coverage) == (0.0, 0.0, 0.0), "far k {k}: {apart:?}");
    }
    Ok("100 instances exact, identity and far cases".into())
}

fn gaussian(r: &mut ChaCha8Rng, n: usize, mix: &[[f64; 8]; 8], mean: &[f64; 8]) -> FeatureSet {
    let mut data = Vec::with_capacity(n * 8);
    for _ in 0..n {
        let z: [f64; 8] = std::array::from_fn(|_| r.sample(StandardNormal));
        data.extend((0..8).map(|i| mean[i] + (0..8).map(|j| mix[i][j] * z[j]).sum::<f64>()));
    }
    FeatureSet::new(8, data).unwrap()
}

fn fid_closed_forms() -> Outcome {
    let mut r = rng(8);
    let n = 10_000;
    let mix: [[f64; 8]; 8] = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { r.gen_range(-0.3..0.3) }));
    let zero = [0.0; 8];
    let x = gaussian(&mut r, n, &mix, &zero);
    let selfd = fid(&x, &x).map_err(|e| e.to_string())?;
    ensure!(selfd < 1e-6, "fid(X, X) = {selfd:e}");

    let shift: [f64; 8] = std::array::from_fn(|i| [1.0, -0.5, 0.7, 0.0, 0.3, -1.2, 0.4, 0.9][i]);
    let expected: f64 = shift.iter().map(|s| s * s).sum();
    let y = gaussian(&mut r, n, &mix, &shift);
    let shifted = fid(&x, &y).map_err(|e| e.to_string())?;
    let shifted_err = (shifted - expected).abs() / expected;
    ensure!(shifted_err < 0.05, "shifted: {shifted} vs {expected}");

    let (sr, sg) = (1.0, 2.0);
    let iso = |r: &mut ChaCha8Rng, s: f64| {
        let m: [[f64; 8]; 8] = std::array::from_fn(|i| std::array::from_fn(|j| if i == j { s } else { 0.0 }));
        gaussian(r, n, &m, &zero)
    };
    let a = iso(&mut r, sr);
    let b = iso(&mut r, sg);
    let want = 8.0 * (sr - sg) * (sr - sg);
    let got = fid(&a, &b).map_err(|e| e.to_string())?;
    let iso_err = (got - want).abs() / want;
    ensure!(iso_err < 0.05, "isotropic: {got} vs {want}");
    Ok(format!("self {selfd:.1e}, shifted rel err {shifted_err:.3}, isotropic rel err {iso_err:.3}"))
}

fn scl_round_trip() -> Outcome {
    let spec = EnumerationSpec {
        kinds: vec![MovementKind::Orbit],
        easings: vec![EasingKind::EaseInOut],
        ..EnumerationSpec::default()
    };
    let mut seen = 0usize;
    for scd in enumerate_scds(&spec).map_err(|e| e.to_string())? {
        let text = format_scd(&scd);
        let back = parse_scd(&text).map_err(|e| format!("{text}: {e}"))?;
        ensure!(back == scd, "{text} did not round trip");
        seen += 1;
    }
    ensure!(seen == 8 * 5 * 8 * 9 && seen == spec.count(), "fixed-kind universe has {seen} records");

    let full = EnumerationSpec {
        include_end: true,
        ..EnumerationSpec::default()
    };
    let e = endpoint_count();
    let kinds = MovementKind::ALL.len();
    let easings = EasingKind::ALL.len();
    ensure!(e == 2880, "endpoint count {e}");
    let closed = e * easings * (1 + (kinds - 1) * e);
    ensure!(full.count() == closed, "full count {} vs {closed}", full.count());
    let starts_only = EnumerationSpec::default();
    let iterated = enumerate_scds(&starts_only).map_err(|e| e.to_string())?.count();
    ensure!(iterated == starts_only.count() && iterated == e * easings * kinds, "start-only count {iterated}");
    Ok(format!("{seen} round trips, full universe {closed}"))
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cinecam"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn number(v: &serde_json::Value, key: &str) -> Result<f64, String> {
    v[key].as_f64().ok_or_else(|| format!("report lacks {key}"))
}

fn dataset_pipeline() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (a, b) = (path("a.jsonl"), path("b.jsonl"));
    let report = run_cli(&["--seed", "7", "generate", "--count", "1000", "--split", "0.5", "-o", &a])?;
    run_cli(&["--seed", "7", "generate", "--count", "1000", "--split", "0.5", "-o", &b])?;
    let bytes_a = std::fs::read(&a).map_err(|e| e.to_string())?;
    ensure!(bytes_a == std::fs::read(&b).map_err(|e| e.to_string())?, "generated files differ");

    let report: serde_json::Value = serde_json::from_str(&report).map_err(|e| e.to_string())?;
    ensure!(
        report["static_count"] == 500 && report["dynamic_count"] == 500 && report["records"] == 1000,
        "balance {report}"
    );
    ensure!(report["imbalanced"] == false, "imbalance flag raised");

    let read = read_records_path(Path::new(&a)).map_err(|e| e.to_string())?;
    ensure!(read.records.len() == 1000, "read {} records", read.records.len());
    for rec in &read.records {
        rec.validate().map_err(|e| format!("{}: {e}", rec.id))?;
    }

    let eval: serde_json::Value = serde_json::from_str(&run_cli(&["evaluate", &a, &a])?).map_err(|e| e.to_string())?;
    let f = number(&eval, "fid")?;
    ensure!(f < 1e-6, "self fid {f:e}");
    for key in ["precision", "recall", "coverage"] {
        ensure!(number(&eval, key)? == 1.0, "self {key} = {}", eval[key]);
    }
    Ok(format!("{} bytes reproduced, 500/500, self fid {f:.1e}", bytes_a.len()))
}

fn schedules() -> Outcome {
    for (spec, start, end) in [
        (ScheduleSpec::masking(1000), 0.1, 0.8),
        (ScheduleSpec::noise(1000), 1.0, 0.0),
        (ScheduleSpec::teacher_forcing(1000), 0.7, 1.0),
    ] {
        let first = schedule_value(&spec, 0).map_err(|e| e.to_string())?;
        let last = schedule_value(&spec, 999).map_err(|e| e.to_string())?;
        ensure!(first == start && last == end, "{spec:?}: {first} -> {last}");
    }
    let enc = EmbeddingVector(vec![0.3, -1.2, 5.5, 1e-7]);
    let target = EmbeddingVector(vec![-2.0, 0.1, 3.3, 7.0]);
    ensure!(fuse_teacher(&enc, &target, 0.0).map_err(|e| e.to_string())? == enc, "ratio 0 is not the encoder output");
    ensure!(fuse_teacher(&enc, &target, 1.0).map_err(|e| e.to_string())? == target, "ratio 1 is not the target");
    Ok("masking 0.1->0.8, noise 1->0, teacher 0.7->1, fuse endpoints".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("shot table", shot_table, Duration::from_secs(1)),
        ("pose discrepancy", discrepancy_suite, Duration::from_secs(5)),
        ("loss identities", loss_identities, Duration::from_secs(5)),
        ("subject-aware degeneracy", subject_aware_degeneracy, Duration::from_secs(5)),
        ("orbit constraints", orbit_postconditions, Duration::from_secs(30)),
        ("micro-alignment framing", framing, Duration::from_secs(10)),
        ("manifold oracle", manifold_oracle, Duration::from_secs(60)),
        ("fid closed forms", fid_closed_forms, Duration::from_secs(30)),
        ("scl round trip", scl_round_trip, Duration::from_secs(10)),
        ("dataset pipeline", dataset_pipeline, Duration::from_secs(120)),
        ("schedules", schedules, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({elapsed:.2?}): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
