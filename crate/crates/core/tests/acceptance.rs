//! Acceptance suite. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lexstereo::config::Settings;
use lexstereo::energy::EnergyModel;
use lexstereo::io::read_color;
use lexstereo::localexp::{optimize, optimize_monitored, random_init, ExpansionUnit, OptimizerConfig, OptimizerState};
use lexstereo::metrics::bad_rate;
use lexstereo::plane::random_plane;
use lexstereo::run::{estimate, GroundTruth};
use lexstereo::synthetic::{three_plane_scene, weak_texture_scene, SyntheticScene};
use lexstereo::{ColorImage, Grid, LabelField, MatchParams, PlaneLabel, Rect, SmoothParams, StereoPair, View};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn noise_image(w: usize, h: usize, seed: u64) -> ColorImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Grid::from_fn(w, h, |_, _| [rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0), rng.gen_range(0.0..255.0)])
}

fn model_for(pair: Arc<StereoPair>, radius: usize, view: View) -> EnergyModel {
    EnergyModel::new(pair, MatchParams::with_window_radius(radius), SmoothParams::default(), view).unwrap()
}

fn scene_model(scene: &SyntheticScene, radius: usize) -> EnergyModel {
    model_for(Arc::new(scene.pair().unwrap()), radius, View::Left)
}

fn bad_nonocc(scene: &SyntheticScene, f: &LabelField, threshold: f64) -> f64 {
    let gt = scene.gt_disparity(View::Left);
    bad_rate(&f.disparity_map(), &gt, Some(&scene.nonocc_left), threshold).unwrap()
}

fn scaled_config(seed: u64) -> OptimizerConfig {
    OptimizerConfig {
        seed,
        ..OptimizerConfig::default().with_cell_sizes(&[3, 9, 15])
    }
}

/// Expansion submodularity of the pairwise term on random tuples.
fn c1_submodularity() -> Outcome {
    let t0 = Instant::now();
    let pair = Arc::new(StereoPair::new(noise_image(32, 24, 1), noise_image(32, 24, 2), 24.0).unwrap());
    let m = model_for(pair, 2, View::Left);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let offsets = [(1i64, 0i64), (0, 1), (1, 1), (-1, 1)];
    let mut worst = f64::NEG_INFINITY;
    let n = 100_000;
    for _ in 0..n {
        let (dx, dy) = offsets[rng.gen_range(0..4)];
        let px = rng.gen_range(1..31i64);
        let py = rng.gen_range(0..23i64);
        let p = (px as usize, py as usize);
        let q = ((px + dx) as usize, (py + dy) as usize);
        let label = |rng: &mut ChaCha8Rng| {
            if rng.gen_bool(0.1) {
                PlaneLabel::new(0.0, 0.0, rng.gen_range(0.0..24.0))
            } else {
                random_plane(rng, px as f64, py as f64, 24.0)
            }
        };
        let (a, b, g) = (label(&mut rng), label(&mut rng), label(&mut rng));
        let psi = |x: &PlaneLabel, y: &PlaneLabel| m.pairwise_term(p, q, x, y);
        let lhs = psi(&a, &a) + psi(&b, &g);
        let rhs = psi(&b, &a) + psi(&a, &g);
        worst = worst.max(lhs - rhs);
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 10.0,
        format!("{n} tuples, max violation {worst:.3e} (tol 1e-9), {secs:.2}s (limit 10s)"),
    )
}

/// Expansion result equals brute force over every switch pattern.
fn c2_subproblem_optimality() -> Outcome {
    let t0 = Instant::now();
    let (w, h) = (9, 7);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let pair = Arc::new(StereoPair::new(noise_image(w, h, 10 + trial), noise_image(w, h, 500 + trial), 8.0).unwrap());
        let m = model_for(pair, 2, View::Left);
        let f = random_init(w, h, View::Left, 8.0, trial);
        // region of at most 12 pixels
        let (rw, rh) = loop {
            let s = (rng.gen_range(1..=6), rng.gen_range(1..=4));
            if s.0 * s.1 <= 12 {
                break s;
            }
        };
        let x0 = rng.gen_range(0..=w - rw);
        let y0 = rng.gen_range(0..=h - rh);
        let region = Rect::new(x0, y0, x0 + rw, y0 + rh);
        let alpha = if rng.gen_bool(0.5) {
            f.get(rng.gen_range(0..w), rng.gen_range(0..h))
        } else {
            random_plane(&mut rng, x0 as f64, y0 as f64, 8.0)
        };

        // oracle: explicit data terms and exhaustive enumeration
        let unary_naive = |l: &PlaneLabel, x: usize, y: usize| {
            if m.in_range(l, x, y) {
                m.data_term_naive(l, x, y)
            } else {
                m.cost_ceiling()
            }
        };
        let base: Vec<f64> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| unary_naive(&f.get(x, y), x, y)).collect();
        let alt: Vec<f64> = region.pixels().map(|(x, y)| unary_naive(&alpha, x, y)).collect();
        let pixels: Vec<(usize, usize)> = region.pixels().collect();
        let energy_of = |g: &LabelField, switched: &[bool]| {
            let mut e: f64 = base.iter().sum();
            for (i, &(x, y)) in pixels.iter().enumerate() {
                if switched[i] {
                    e += alt[i] - base[y * w + x];
                }
            }
            e + m.smoothness_energy(g)
        };
        let n = pixels.len();
        let mut best = f64::INFINITY;
        for mask in 0u32..1 << n {
            let switched: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            let mut g = f.clone();
            for (i, &(x, y)) in pixels.iter().enumerate() {
                if switched[i] {
                    g.set(x, y, alpha);
                }
            }
            best = best.min(energy_of(&g, &switched));
        }

        let mut state = OptimizerState::new(&m, f.clone()).unwrap();
        let unit = ExpansionUnit { i: 0, j: 0, center: region, region, group: 0 };
        state.local_alpha_expansion(&m, &unit, &alpha).unwrap();
        let switched: Vec<bool> = pixels.iter().map(|&(x, y)| state.f.get(x, y) == alpha && f.get(x, y) != alpha).collect();
        let got = energy_of(&state.f, &switched);
        worst = worst.max((got - best).abs() / (1.0 + best.abs()));
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-9 && secs < 60.0,
        format!("200 regions <= 12 px, max relative gap {worst:.3e} (tol 1e-9), {secs:.2}s (limit 60s)"),
    )
}

/// Recorded energy never rises during a full run.
fn c3_monotonic() -> Outcome {
    let scene = three_plane_scene(80, 60, 11).render().unwrap();
    let m = scene_model(&scene, 10);
    let s = optimize(&m, &OptimizerConfig { seed: 3, ..OptimizerConfig::default().with_ransac(true) }).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for w in s.trace.windows(2) {
        worst = worst.max((w[1].energy - w[0].energy) / w[0].energy.abs());
    }
    let exact = m.total_energy(&s.f).unwrap();
    let last = s.trace.last().unwrap().energy;
    let drift = (exact - last).abs() / exact.abs();
    outcome(
        worst <= 1e-6 && drift <= 1e-6,
        format!(
            "{} records, max relative rise {worst:.3e} (tol 1e-6), final trace vs recomputed energy {drift:.1e}",
            s.trace.len()
        ),
    )
}

/// Worker count does not change the result.
fn c4_determinism() -> Outcome {
    let scene = three_plane_scene(80, 60, 12).render().unwrap();
    let m = scene_model(&scene, 10);
    let run = |workers| {
        let cfg = OptimizerConfig { workers, outer_iterations: 4, ..scaled_config(21).with_ransac(true) };
        optimize(&m, &cfg).unwrap().f
    };
    let (a, b) = (run(1), run(4));
    let differing = a.grid().as_slice().iter().zip(b.grid().as_slice()).filter(|(x, y)| x != y).count();
    outcome(differing == 0, format!("workers 1 vs 4: {differing} differing labels"))
}

/// Region filtering agrees with explicit window summation.
fn c5_fast_path() -> Outcome {
    let (w, h) = (48, 36);
    let scene = three_plane_scene(w, h, 13).render().unwrap();
    let pair = Arc::new(scene.pair().unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut border = 0;
    for trial in 0..100 {
        let radius = if trial % 2 == 0 { 6 } else { 10 };
        let m = model_for(pair.clone(), radius, View::Left);
        let (rw, rh) = (rng.gen_range(1..=5), rng.gen_range(1..=5));
        let (x0, y0) = match trial % 3 {
            0 => (0, rng.gen_range(0..=h - rh)),
            1 => (w - rw, h - rh),
            _ => (rng.gen_range(0..=w - rw), rng.gen_range(0..=h - rh)),
        };
        let region = Rect::new(x0, y0, x0 + rw, y0 + rh);
        if region.x0 < radius || region.y0 < radius || region.x1 + radius > w || region.y1 + radius > h {
            border += 1;
        }
        let label = random_plane(&mut rng, x0 as f64, y0 as f64, 24.0);
        let fast = m.region_data_costs(&label, region);
        for (x, y) in region.pixels() {
            let naive = m.data_term_naive(&label, x, y);
            let rel = (fast.at(x, y) - naive).abs() / naive.abs().max(1e-12);
            worst = worst.max(rel);
        }
    }
    outcome(worst <= 1e-4, format!("100 pairs ({border} touching the border), max relative error {worst:.3e} (tol 1e-4)"))
}

/// Interior guided-filter weight rows sum to one on natural images.
fn c6_normalization() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    for name in ["astronaut.png", "coffee.png", "chelsea.png"] {
        let img = read_color(&dir.join(name)).unwrap();
        let pair = Arc::new(StereoPair::new(img.clone(), img, 16.0).unwrap());
        let m = model_for(pair, 10, View::Left);
        let (w, h) = (m.width(), m.height());
        // pixels whose regression windows all lie inside the image
        for y in (10..h - 10).step_by(3) {
            for x in (10..w - 10).step_by(3) {
                worst = worst.max((m.guided_weights_naive(x, y).sum() - 1.0).abs());
                rows += 1;
            }
        }
    }
    outcome(worst <= 1e-6, format!("{rows} interior rows on 3 images, max |sum - 1| {worst:.3e} (tol 1e-6)"))
}

/// Accuracy on the rendered three-plane scene.
fn c7_synthetic_scene(scene: &SyntheticScene) -> (Outcome, OptimizerState) {
    let t0 = Instant::now();
    let m = scene_model(scene, 10);
    let s = optimize_monitored(&m, &scaled_config(7), None, |f| Some(bad_nonocc(scene, f, 2.0))).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let bad = bad_nonocc(scene, &s.f, 0.5);
    (
        outcome(bad <= 5.0 && secs < 300.0, format!("bad-0.5 non-occluded {bad:.2}% (limit 5%), {secs:.1}s (limit 300s)")),
        s,
    )
}

/// Group-execution throughput with 4 workers vs 1.
fn c8_speedup() -> Outcome {
    let scene = three_plane_scene(200, 150, 14).render().unwrap();
    let m = scene_model(&scene, 10);
    let time = |workers| {
        let cfg = OptimizerConfig { workers, outer_iterations: 2, seed: 1, ..OptimizerConfig::default() };
        let s = optimize(&m, &cfg).unwrap();
        s.trace.iter().map(|r| r.group_seconds).sum::<f64>()
    };
    let (t1, t4) = (time(1), time(4));
    let speedup = t1 / t4;
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    outcome(
        speedup >= 2.5,
        format!("1 worker {t1:.2}s, 4 workers {t4:.2}s, speed-up {speedup:.2}x (need 2.5x; {cores} core(s) available)"),
    )
}

/// Error falls between the first two iterations and post-processing does
/// not increase it.
fn c9_iteration_gain(scene: &SyntheticScene, left: &OptimizerState) -> Outcome {
    let after = |iter| {
        left.trace
            .iter()
            .rfind(|r| r.outer_iter == iter)
            .and_then(|r| r.error)
            .unwrap()
    };
    let (e1, e2) = (after(0), after(1));
    let settings = Settings {
        matching: MatchParams::with_window_radius(10),
        optimizer: scaled_config(7),
        ..Default::default()
    };
    let gt = GroundTruth {
        disparity: scene.gt_disparity(View::Left),
        nonocc: Some(scene.nonocc_left.clone()),
    };
    let est = estimate(Arc::new(scene.pair().unwrap()), &settings, Some(&gt)).unwrap();
    let raw = bad_nonocc(scene, &est.left.f, 2.0);
    let post = bad_nonocc(scene, est.field(View::Left), 2.0);
    outcome(
        e2 < e1 && post <= raw,
        format!("bad-2.0 after iteration 1 {e1:.2}%, after iteration 2 {e2:.2}%; before post {raw:.2}%, after post {post:.2}%"),
    )
}

/// RANSAC proposals help on a large weakly textured plane.
fn c10_ransac() -> Outcome {
    let seeds = [0u64, 1, 2];
    let (mut off, mut on) = (0.0, 0.0);
    let mut per_seed = Vec::new();
    for &seed in &seeds {
        let scene = weak_texture_scene(96, 72, seed).render().unwrap();
        let m = scene_model(&scene, 10);
        let run = |ransac| bad_nonocc(&scene, &optimize(&m, &scaled_config(seed).with_ransac(ransac)).unwrap().f, 2.0);
        let (a, b) = (run(false), run(true));
        per_seed.push(format!("{a:.1}->{b:.1}"));
        off += a;
        on += b;
    }
    let (off, on) = (off / seeds.len() as f64, on / seeds.len() as f64);
    let reduction = 1.0 - on / off;
    outcome(
        reduction >= 0.2,
        format!(
            "mean bad-2.0 over seeds {seeds:?}: {off:.2}% without, {on:.2}% with ({:.0}% reduction, need 20%); per seed {}",
            100.0 * reduction,
            per_seed.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n, name, o: Outcome| {
        println!("criterion {n:>2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };
    record(1, "submodularity fuzzing", c1_submodularity());
    record(2, "subproblem optimality", c2_subproblem_optimality());
    record(3, "energy monotonicity", c3_monotonic());
    record(4, "determinism across workers", c4_determinism());
    record(5, "fast-path equivalence", c5_fast_path());
    record(6, "guided-filter normalization", c6_normalization());
    let scene = three_plane_scene(96, 72, 7).render().unwrap();
    let (o7, left) = c7_synthetic_scene(&scene);
    record(7, "synthetic piecewise-planar scene", o7);
    record(8, "parallel speed-up", c8_speedup());
    record(9, "iteration-wise improvement", c9_iteration_gain(&scene, &left));
    record(10, "RANSAC proposer effectiveness", c10_ransac());

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
