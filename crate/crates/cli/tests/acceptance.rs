//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Set `ACCEPTANCE_ONLY=1,5,9` to run a subset.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use dla_core::bounds::{fill_in_order_bound, ld_tail_bound, poisson_binomial_tail, PhiSpec};
use dla_core::dla::{grow, init_aggregate, sample_attachment, tree_attachment_law, Aggregate, LaunchConfig, VecSink};
use dla_core::graph::tree_ball_size;
use dla_core::growth::GrowthRecord;
use dla_core::potential::{
    capacity_sandwich_check, green_mc_multi, heat_kernel_diag, launch_law, solve_escape, SolverConfig,
};
use dla_core::{rng, Graph, VertexId};
use rand::Rng;
use serde_json::Value;
use statrs::distribution::{ChiSquared, ContinuousCDF};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn dla(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_dla")).args(args).output().expect("run dla");
    if !out.status.success() {
        panic!("dla {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("read json")).expect("parse json")
}

fn v(c: &[i32]) -> VertexId {
    VertexId::new(c)
}

/// `A` together with its outer boundary.
fn closure(g: &Graph, a: &[VertexId]) -> Vec<VertexId> {
    let agg = Aggregate::from_members(g, a).expect("frozen aggregate");
    let mut b = agg.members_sorted();
    b.extend(agg.boundary_sorted());
    b
}

fn c1_exact_solver(_: &Path) -> Outcome {
    let cfg = SolverConfig::default();
    let z3 = Graph::lattice(3).unwrap();
    let tree = Graph::regular_tree(3).unwrap();
    let h_z3 = solve_escape(&z3, &[v(&[0, 0, 0])], &cfg).unwrap().harmonic[0];
    let h_tree = solve_escape(&tree, &[v(&[])], &cfg).unwrap().harmonic[0];
    let pair = solve_escape(&z3, &[v(&[0, 0, 0]), v(&[1, 0, 0])], &cfg).unwrap();
    let split = (pair.harmonic[0] - 0.5).abs().max((pair.harmonic[1] - 0.5).abs());
    // gambler's ruin: from a child the walk returns with probability 1/(k-1)
    let k = 3.0;
    let closed = k * (1.0 - 1.0 / (k - 1.0));
    let cap = solve_escape(&tree, &[v(&[])], &cfg).unwrap().capacity;
    let cli = String::from_utf8(dla(&["potential", "cap", "--graph", "tree3", "--set", "root"]).stdout).unwrap();
    let cli_cap: f64 = cli
        .lines()
        .find_map(|l| l.strip_prefix("capacity"))
        .and_then(|x| x.trim().parse().ok())
        .expect("capacity line");
    let pass = h_z3 == 1.0
        && h_tree == 1.0
        && split <= 1e-6
        && (cap - closed).abs() <= 1e-3
        && (cli_cap - closed).abs() <= 1e-3;
    outcome(
        pass,
        format!("singleton h = {h_z3}, {h_tree}; pair split error {split:.2e}; tree cap {cap:.9} (cli {cli_cap}) vs {closed}"),
    )
}

/// Random connected set of `size` vertices grown from the root.
fn random_set<R: Rng>(g: &Graph, size: usize, r: &mut R) -> Vec<VertexId> {
    let mut agg = init_aggregate(g);
    while agg.len() < size {
        let b = agg.boundary_sorted();
        agg.attach(g, b[r.random_range(0..b.len())].clone()).unwrap();
    }
    agg.members_sorted()
}

fn c2_sandwich(_: &Path) -> Outcome {
    let cfg = SolverConfig::default();
    let mut r = rng::stream(2, 0);
    let mut held = 0;
    let mut total = 0;
    let mut worst = f64::INFINITY;
    for g in [Graph::lattice(3).unwrap(), Graph::regular_tree(3).unwrap()] {
        for _ in 0..100 {
            let size = r.random_range(1..=8);
            let a = random_set(&g, size, &mut r);
            let rep = capacity_sandwich_check(&g, &a, &cfg, 1e-6).unwrap();
            total += 1;
            if rep.holds {
                held += 1;
            }
            let slack = (rep.middle - rep.lower).min(rep.upper - rep.middle) / rep.middle;
            worst = worst.min(slack);
        }
    }
    outcome(held == total, format!("{held}/{total} sets, smallest relative slack {worst:.3e}"))
}

fn c3_ld_domination(_: &Path) -> Outcome {
    let mut r = rng::stream(3, 0);
    let cs = [1.01, 1.1, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 6.0, 7.5, 10.0];
    let mut violations = 0;
    let mut checks = 0;
    for _ in 0..1000 {
        let len = r.random_range(1..=12);
        let ps: Vec<f64> = (0..len).map(|_| r.random::<f64>()).collect();
        let eb: f64 = ps.iter().sum();
        for &c in &cs {
            let m = (c * eb).ceil() as u64;
            let exact = poisson_binomial_tail(&ps, m).unwrap();
            let bound = ld_tail_bound(eb, c).unwrap();
            checks += 1;
            if exact > bound * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations in {checks} checks"))
}

/// Checks the filled-in-order bound on every `(s, t, n)` of the grid where it
/// is below 1. `rads[run][j]` is the radius after `j` attachments.
type Violation = (u64, u64, u64, f64, f64);

fn check_fill_grid(rads: &[Vec<u64>], phi: &PhiSpec, grid: &[(u64, u64)]) -> (usize, usize, Vec<Violation>) {
    let runs = rads.len() as f64;
    let (mut points, mut nontrivial, mut bad) = (0, 0, Vec::new());
    for &(s, t) in grid {
        for n in 1..=s {
            let b = fill_in_order_bound(3, phi, s, t, n, None).unwrap();
            if b.raw >= 1.0 {
                continue;
            }
            points += 1;
            if n <= t {
                nontrivial += 1;
            }
            let (j0, j1) = ((s - 1) as usize, (s - 1 + t) as usize);
            let p = rads.iter().filter(|r| r[j1] >= r[j0] + n).count() as f64 / runs;
            let se = (p * (1.0 - p) / runs).sqrt();
            if p > b.raw + 3.0 * se {
                bad.push((s, t, n, p, b.raw));
            }
        }
    }
    (points, nontrivial, bad)
}

fn c4_fill_in_order(_: &Path) -> Outcome {
    // on a 3-regular tree h_A(x) is at most (out-degree of x)/(|A| + 2) <= 2/|A|
    let g = Graph::regular_tree(3).unwrap();
    let phi = PhiSpec::VolumeInverse { c: 2.0, beta: 0.0 };
    let cfg = LaunchConfig::default();
    let runs = 10_000u64;
    // the grid s <= 10 only has bound < 1 where n > t, so a supplementary
    // grid with larger s exercises the bound where the event is possible
    let small: Vec<(u64, u64)> = (1..=10).flat_map(|s| (1..=12).map(move |t| (s, t))).collect();
    let large: Vec<(u64, u64)> = [50u64, 200].iter().flat_map(|&s| [5u64, 10, 20, 40].map(|t| (s, t))).collect();
    let steps = large.iter().chain(&small).map(|&(s, t)| s + t).max().unwrap();
    let rads: Vec<Vec<u64>> = (0..runs)
        .map(|i| {
            let mut agg = init_aggregate(&g);
            let mut sink = VecSink::default();
            grow(&g, &mut agg, steps, &cfg, &mut rng::stream(4, i), &mut sink).unwrap();
            std::iter::once(0).chain(sink.0.iter().map(|x| x.rad)).collect()
        })
        .collect();
    let (p1, n1, b1) = check_fill_grid(&rads, &phi, &small);
    let (p2, n2, b2) = check_fill_grid(&rads, &phi, &large);
    outcome(
        b1.is_empty() && b2.is_empty() && p1 > 0 && n2 > 0,
        format!(
            "s <= 10: {p1} points with bound < 1 ({n1} with n <= t), violations {b1:?}; \
             s in {{50, 200}}: {p2} points ({n2} with n <= t), violations {b2:?}"
        ),
    )
}

fn chi_square_p(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let mut chi2 = 0.0;
    let mut bins = 0;
    for (&c, &p) in counts.iter().zip(probs) {
        if p <= 0.0 {
            assert_eq!(c, 0, "sample outside the support");
            continue;
        }
        let e = n as f64 * p;
        chi2 += (c as f64 - e).powi(2) / e;
        bins += 1;
    }
    if bins < 2 {
        return 1.0;
    }
    ChiSquared::new((bins - 1) as f64).unwrap().sf(chi2)
}

fn c5_attachment_law(_: &Path) -> Outcome {
    let z3 = Graph::lattice(3).unwrap();
    let tree = Graph::regular_tree(3).unwrap();
    let aggregates: Vec<(&Graph, Vec<VertexId>)> = vec![
        (&z3, vec![v(&[0, 0, 0])]),
        (&z3, vec![v(&[0, 0, 0]), v(&[1, 0, 0])]),
        (&z3, vec![v(&[0, 0, 0]), v(&[1, 0, 0]), v(&[2, 0, 0])]),
        (&z3, vec![v(&[0, 0, 0]), v(&[1, 0, 0]), v(&[2, 0, 0]), v(&[2, 1, 0])]),
        (&z3, vec![v(&[0, 0, 0]), v(&[1, 0, 0]), v(&[0, 1, 0]), v(&[0, 0, 1]), v(&[-1, 0, 0]), v(&[1, 1, 0])]),
        (&tree, vec![v(&[])]),
        (&tree, vec![v(&[]), v(&[0])]),
        (&tree, vec![v(&[]), v(&[0]), v(&[1])]),
        (&tree, vec![v(&[]), v(&[0]), v(&[0, 1]), v(&[0, 1, 0])]),
        (&tree, vec![v(&[]), v(&[0]), v(&[1]), v(&[2]), v(&[0, 1]), v(&[0, 1, 0])]),
    ];
    let cfg = LaunchConfig::default();
    let doubled = LaunchConfig {
        launch_factor: 2.0 * cfg.launch_factor,
        launch_offset: 2 * cfg.launch_offset,
        escape_factor: 2.0 * cfg.escape_factor,
        ..cfg
    };
    let solver = SolverConfig { rel_tol: 1e-4, ..SolverConfig::default() };
    let mut min_p = f64::INFINITY;
    let mut max_tv: f64 = 0.0;
    for (i, (g, a)) in aggregates.iter().enumerate() {
        let agg = Aggregate::from_members(g, a).unwrap();
        let boundary = agg.boundary_sorted();
        let b = closure(g, a);
        let exact = solve_escape(g, &b, &solver).unwrap();
        let probs: Vec<f64> = boundary.iter().map(|x| exact.harmonic_of(x)).collect();
        let mut counts = vec![0u64; boundary.len()];
        let mut r = rng::stream(5, i as u64);
        for _ in 0..100_000 {
            let x = sample_attachment(g, &agg, &cfg, &mut r).unwrap();
            counts[boundary.binary_search(&x).expect("attachment on the boundary")] += 1;
        }
        min_p = min_p.min(chi_square_p(&counts, &probs));
        let tv = if g.dim().is_some() {
            let r1 = cfg.launch_radius(agg.radius());
            let r2 = doubled.launch_radius(agg.radius());
            let near = launch_law(g, &b, r1, cfg.escape_radius(r1), 1 << 26).unwrap();
            let far = launch_law(g, &b, r2, doubled.escape_radius(r2), 1 << 26).unwrap();
            near.total_variation(&far)
        } else {
            let near = tree_attachment_law(g, &agg, &cfg).unwrap();
            let far = tree_attachment_law(g, &agg, &doubled).unwrap();
            0.5 * near.iter().zip(&far).map(|(x, y)| (x.1 - y.1).abs()).sum::<f64>()
        };
        max_tv = max_tv.max(tv);
    }
    outcome(
        min_p > 0.001 && max_tv < 0.01,
        format!("10 aggregates, smallest chi-square p = {min_p:.4}, largest R vs 2R total variation = {max_tv:.2e}"),
    )
}

fn c6_heat_kernel(_: &Path) -> Outcome {
    let g = Graph::lattice(3).unwrap();
    let p = heat_kernel_diag(&g, g.root(), 200, true).unwrap();
    let scaled: Vec<f64> = (1..=200).map(|t| (t as f64).powf(1.5) * p[t]).collect();
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let decade = &scaled[19..];
    let (dlo, dhi) = decade.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let variation = (dhi - dlo) / dhi;
    outcome(
        hi / lo <= 10.0 && variation < 0.05,
        format!(
            "t^1.5 p_t in [{lo:.4}, {hi:.4}] for t <= 200, variation {:.2}% over t in [20, 200]",
            100.0 * variation
        ),
    )
}

fn c7_green_decay(_: &Path) -> Outcome {
    let g = Graph::lattice(3).unwrap();
    let ys: Vec<VertexId> = (4..=16).map(|r| v(&[r, 0, 0])).collect();
    let mut r = rng::stream(7, 0);
    let est = green_mc_multi(&g, g.root(), &ys, 100_000, 10_000_000, &mut r).unwrap();
    let c: Vec<f64> = est.iter().zip(4..=16).map(|(e, r)| e.mean * r as f64).collect();
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    let dev = c.iter().map(|x| (x / mean - 1.0).abs()).fold(0.0, f64::max);
    outcome(dev <= 0.25, format!("g(0,x)|x| mean {mean:.4}, largest deviation {:.1}% over |x| in [4, 16]", 100.0 * dev))
}

fn simulate(dir: &Path, name: &str, graph: &str, particles: u64, seed: u64, workers: &str) -> PathBuf {
    let out = dir.join(name);
    let p = particles.to_string();
    let s = seed.to_string();
    dla(&[
        "--workers",
        workers,
        "simulate",
        "--graph",
        graph,
        "--particles",
        &p,
        "--seed",
        &s,
        "--out",
        out.to_str().unwrap(),
    ]);
    out
}

fn fit(run: &Path, window: &str, extra: &[&str]) -> Value {
    let json = run.with_extension("fit.json");
    let mut args = vec!["fit", "--in", run.to_str().unwrap(), "--window", window, "--json", json.to_str().unwrap()];
    args.extend_from_slice(extra);
    dla(&args);
    read_json(&json)
}

fn c8_envelopes(dir: &Path) -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut worst_trend: f64 = f64::NEG_INFINITY;
    let mut worst_alpha: f64 = f64::NEG_INFINITY;
    for seed in [3u64, 5, 7, 11, 13] {
        let run = simulate(dir, &format!("z3-{seed}.jsonl"), "z3", 20_000, seed, "1");
        let f = fit(&run, "1000:20000", &[]);
        worst_trend = worst_trend.max(f["ratio"]["trend"].as_f64().unwrap());
        worst_alpha = worst_alpha.max(f["fit"]["slope"].as_f64().unwrap());
    }
    pass &= worst_trend <= 0.05 && worst_alpha <= 0.55;
    notes.push(format!("(a) z3 max trend {worst_trend:.4}, max alpha {worst_alpha:.4}"));

    let run = simulate(dir, "tree3.jsonl", "tree3", 100_000, 1, "1");
    let rec = GrowthRecord::read_jsonl(std::io::BufReader::new(std::fs::File::open(&run).unwrap())).unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut floor_ok = true;
    let k = 3u64;
    let mut r_min = 0u64;
    for &(t, rad) in &rec.entries {
        if (1_000..=100_000).contains(&t) {
            let q = rad as f64 / (t as f64).ln();
            lo = lo.min(q);
            hi = hi.max(q);
        }
        if t >= 1 {
            let log_floor = ((t * (k - 2)) as f64 / k as f64).ln() / ((k - 1) as f64).ln() - 1.0;
            while tree_ball_size(k, r_min) < t + 1 {
                r_min += 1;
            }
            floor_ok &= rad as f64 >= log_floor && rad >= r_min;
        }
    }
    pass &= lo >= 0.3 && hi <= 50.0 && floor_ok;
    notes.push(format!("(b) tree3 rad/log t in [{lo:.3}, {hi:.3}], lower bound holds at every t: {floor_ok}"));

    let run = simulate(dir, "carpet3.jsonl", "carpet3", 10_000, 1, "1");
    let f = fit(&run, "1000:10000", &["--envelope-power", "0.5568"]);
    let trend = f["ratio"]["trend"].as_f64().unwrap();
    pass &= trend <= 0.05;
    notes.push(format!("(c) carpet3 trend vs t^0.5568 {trend:.4}, alpha {:.4}", f["fit"]["slope"].as_f64().unwrap()));
    outcome(pass, notes.join("; "))
}

fn beurling(dir: &Path, name: &str, max_size: &str, box_radius: &str, workers: &str) -> Value {
    let json = dir.join(name);
    dla(&[
        "--workers",
        workers,
        "beurling",
        "--graph",
        "z3",
        "--max-size",
        max_size,
        "--phi-volume",
        "volume-power:1:0.3333333333333333:0",
        "--box-radius",
        box_radius,
        "--json",
        json.to_str().unwrap(),
    ]);
    read_json(&json)
}

fn c9_beurling(dir: &Path) -> Outcome {
    let a = beurling(dir, "beurling-12.json", "6", "12", "1");
    let b = beurling(dir, "beurling-18.json", "6", "18", "1");
    let ca = a["fitted_c_volume"].as_f64().unwrap();
    let cb = b["fitted_c_volume"].as_f64().unwrap();
    let singleton = a["per_size_worst"][0]["ratio"].as_f64().unwrap();
    let rel = (ca / cb - 1.0).abs();
    // the largest ratio among sets of size >= 2 is the informative one
    let rest = |r: &Value| {
        r["per_size_worst"].as_array().unwrap()[1..].iter().map(|w| w["ratio"].as_f64().unwrap()).fold(0.0, f64::max)
    };
    let (ra, rb) = (rest(&a), rest(&b));
    let pass = ca.is_finite() && rel <= 0.05 && singleton == 1.0 && (ra / rb - 1.0).abs() <= 0.05;
    outcome(
        pass,
        format!(
            "{} sets; fitted C {ca:.6} (box 12) vs {cb:.6} (box 18); sizes >= 2: {ra:.6} vs {rb:.6}; singleton ratio {singleton}",
            a["sets"]
        ),
    )
}

fn c10_reproducibility(dir: &Path) -> Outcome {
    let mut notes = Vec::new();
    let base = dir.join("z3-7.jsonl");
    let base = if base.exists() { base } else { simulate(dir, "z3-7.jsonl", "z3", 20_000, 7, "1") };
    let again = simulate(dir, "z3-7-w4.jsonl", "z3", 20_000, 7, "4");
    let sim_same = std::fs::read(&base).unwrap() == std::fs::read(&again).unwrap();
    notes.push(format!("simulate {}", if sim_same { "identical" } else { "differs" }));

    let fit_once = |workers: &str, tag: &str| {
        let json = dir.join(format!("fit-{tag}.json"));
        let csv = dir.join(format!("fit-{tag}.csv"));
        let _ = std::fs::remove_file(&csv);
        dla(&[
            "--workers",
            workers,
            "fit",
            "--in",
            base.to_str().unwrap(),
            "--window",
            "1000:20000",
            "--json",
            json.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ]);
        (std::fs::read(json).unwrap(), std::fs::read(csv).unwrap())
    };
    let fit_same = fit_once("1", "a") == fit_once("1", "b") && fit_once("1", "a") == fit_once("4", "c");
    notes.push(format!("fit {}", if fit_same { "identical" } else { "differs" }));

    let read = |name: &str| std::fs::read(dir.join(name)).unwrap();
    beurling(dir, "rep-1a.json", "5", "12", "1");
    beurling(dir, "rep-1b.json", "5", "12", "1");
    beurling(dir, "rep-4.json", "5", "12", "4");
    let beur_same = read("rep-1a.json") == read("rep-1b.json") && read("rep-1a.json") == read("rep-4.json");
    notes.push(format!("beurling {}", if beur_same { "identical" } else { "differs" }));
    outcome(sim_same && fit_same && beur_same, notes.join(", "))
}

type Criterion = fn(&Path) -> Outcome;

fn main() {
    let criteria: [(u32, &str, Criterion); 10] = [
        (1, "exact solver", c1_exact_solver),
        (2, "capacity sandwich", c2_sandwich),
        (3, "Bernoulli tail domination", c3_ld_domination),
        (4, "filled-in-order domination", c4_fill_in_order),
        (5, "attachment law", c5_attachment_law),
        (6, "heat kernel decay", c6_heat_kernel),
        (7, "Green function decay", c7_green_decay),
        (8, "envelope surrogates", c8_envelopes),
        (9, "Beurling reports", c9_beurling),
        (10, "reproducibility", c10_reproducibility),
    ];
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let dir = std::env::temp_dir().join(format!("dla-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let o = run(&dir);
        let secs = start.elapsed().as_secs_f64();
        println!("{} {id:>2} {name}: {} [{secs:.1}s]", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    if failed > 0 {
        std::process::exit(1);
    }
}
