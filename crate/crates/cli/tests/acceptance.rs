//! Acceptance suite. Prints one line per criterion and exits non-zero if any
//! criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qpf_cli::config::{Params, Preset};
use qpf_cli::{run, Command, Experiment};
use qpf_core::bundle::{connection_from_magnetic, spectral_floor, MagneticPotential};
use qpf_core::linalg::{op_norm, CMatrix};
use qpf_core::operator::{assemble, degree_bound, fiber_norms, inner_m, quadratic_form};
use qpf_core::paths::{estimate_partition, occupation_integral, ordered_exponential, FkMode, JumpSampler, Sampling};
use qpf_core::semiclassics::{golden_thompson_margin, sweep, SweepConfig, SweepMode};
use qpf_core::spectral::{diagonal_traces, eigendecompose};
use qpf_core::{Connection, Family, Potential, Section, WeightedGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u32,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &'static str, pass: bool, detail: String) -> Outcome {
    println!("criterion {id:>2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    Outcome { id, name, pass, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.3}s", d.as_secs_f64())
}

/// Random graph on `n` vertices with a spanning path plus extra edges.
fn random_graph<R: Rng>(r: &mut R, n: usize, extra: f64, b: (f64, f64), m: (f64, f64)) -> WeightedGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || r.random_bool(extra) {
                // (lo, hi] by reflecting [lo, hi)
                edges.push((i, j, b.0 + b.1 - r.random_range(b.0..b.1)));
            }
        }
    }
    let measure: Vec<f64> = (0..n).map(|_| m.0 + m.1 - r.random_range(m.0..m.1)).collect();
    WeightedGraph::from_indexed(n, &edges, Some(&measure)).expect("valid random graph")
}

fn experiment(
    graph: WeightedGraph,
    connection: Connection,
    potential: Potential,
    mode: SweepMode,
    params: Params,
    seed: u64,
) -> Experiment {
    Experiment { graph, connection, potential, mode, params, output_dir: PathBuf::from("unused"), seed: Some(seed) }
}

fn preset(p: Preset, params: Params, seed: u64) -> Experiment {
    let g = p.graph();
    let v = p.potential(&g);
    experiment(g.clone(), Connection::trivial(&g, 1), v, SweepMode::Scalar, params, seed)
}

/// Column `name` of every data row whose first field is not `total`.
fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[0] != "total")
        .map(|f| f[k].parse().unwrap())
        .collect()
}

fn total_row(csv: &str) -> Vec<f64> {
    let line = csv.lines().find(|l| l.starts_with("total,")).unwrap();
    line.split(',').skip(1).map(|f| f.parse().unwrap()).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let out = run(&preset(Preset::TwoVertex, Params::default(), 0), Command::Sweep).unwrap();
    let csv = out.table("sweep.csv").unwrap();
    let (trace, lower, upper, gap) =
        (column(csv, "trace"), column(csv, "lower"), column(csv, "upper"), column(csv, "gap"));
    let elapsed = start.elapsed();
    let ordered = (0..trace.len()).all(|k| lower[k] <= trace[k] + 1e-9 && trace[k] <= upper[k] + 1e-9);
    let final_gap = *gap.last().unwrap();
    let target = 1.0 + (-1f64).exp();
    let final_err = (trace.last().unwrap() - target).abs();
    let pass = trace.len() == 4 && ordered && final_gap < 2e-3 && final_err < 2e-4 && elapsed < Duration::from_secs(1);
    report(
        1,
        "semiclassical limit, two-vertex preset",
        pass,
        format!(
            "lower<=trace<=upper on {} rows: {ordered}; final gap {final_gap:.3e} (< 2e-3); |trace - (1+e^-1)| = {final_err:.3e} (< 2e-4); {}",
            trace.len(),
            secs(elapsed)
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(2002);
    let mut worst = f64::INFINITY;
    let mut ok = 0;
    for _ in 0..200 {
        let n = r.random_range(1..=10);
        let g = random_graph(&mut r, n, 0.3, (0.0, 2.0), (0.1, 2.0));
        let w: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..=2.0)).collect();
        let t = 2.0 - r.random_range(0.0..2.0);
        let gt = golden_thompson_margin(&g, &Connection::trivial(&g, 1), &Potential::scalar(&w), t).unwrap();
        worst = worst.min(gt.margin);
        ok += usize::from(gt.margin >= -1e-9);
    }
    let elapsed = start.elapsed();
    report(
        2,
        "Golden-Thompson, scalar",
        ok == 200 && elapsed < Duration::from_secs(10),
        format!("{ok}/200 with margin >= -1e-9; smallest margin {worst:.3e}; {}", secs(elapsed)),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(3003);
    let mut worst = f64::INFINITY;
    let mut ok = 0;
    for _ in 0..200 {
        let n = r.random_range(1..=10);
        let rank = r.random_range(2..=3);
        let g = random_graph(&mut r, n, 0.3, (0.0, 2.0), (0.1, 2.0));
        let c = Connection::random(&g, rank, &mut r);
        let v = Potential::random(n, rank, 2.0, &mut r);
        let t = 2.0 - r.random_range(0.0..2.0);
        let gt = golden_thompson_margin(&g, &c, &v, t).unwrap();
        worst = worst.min(gt.margin);
        ok += usize::from(gt.quantum <= gt.classical + 1e-9);
    }
    report(
        3,
        "Golden-Thompson, covariant (rank 2-3)",
        ok == 200,
        format!("{ok}/200 with trace <= classical + 1e-9; smallest margin {worst:.3e}; {}", secs(start.elapsed())),
    )
}

/// Instances of criterion 4: graph, potential, hbar.
fn fk_instances() -> Vec<(WeightedGraph, Potential, f64)> {
    let mut r = ChaCha8Rng::seed_from_u64(4004);
    (0..40)
        .map(|_| {
            let n = r.random_range(2..=8);
            let g = random_graph(&mut r, n, 0.3, (0.2, 2.0), (0.5, 2.0));
            let w: Vec<f64> = (0..n).map(|_| r.random_range(0.0..=1.0)).collect();
            let hbar = r.random_range(0.25..=1.0);
            (g, Potential::scalar(&w), hbar)
        })
        .collect()
}

fn fk_experiment(g: &WeightedGraph, v: &Potential, hbar: f64, workers: usize) -> Experiment {
    let params = Params { beta: 1.0, hbar, samples: 100_000, workers, ..Params::default() };
    experiment(g.clone(), Connection::trivial(g, 1), v.clone(), SweepMode::Scalar, params, 44)
}

fn criterion_4(csvs: &mut Vec<String>) -> Outcome {
    let start = Instant::now();
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for (g, v, hbar) in fk_instances() {
        let out = run(&fk_experiment(&g, &v, hbar, 1), Command::FkCompare).unwrap();
        let csv = out.table("fk.csv").unwrap().to_string();
        let z = total_row(&csv)[3];
        worst = worst.max(z.abs());
        within += usize::from(z.abs() <= 3.0);
        csvs.push(csv);
    }
    let elapsed = start.elapsed();
    report(
        4,
        "Feynman-Kac, scalar",
        within >= 38 && elapsed < Duration::from_secs(120),
        format!(
            "{within}/40 totals within 3 standard errors (need 38); max |z| {worst:.2}; 1e5 paths per vertex; {}",
            secs(elapsed)
        ),
    )
}

fn covariant_instance() -> (WeightedGraph, Connection, Potential) {
    let mut r = ChaCha8Rng::seed_from_u64(5005);
    let g = WeightedGraph::generate(Family::Cycle { n: 3 }).unwrap();
    let c = Connection::random(&g, 2, &mut r);
    let v = Potential::random(3, 2, 1.0, &mut r);
    (g, c, v)
}

fn covariant_experiment(workers: usize) -> Experiment {
    let (g, c, v) = covariant_instance();
    let params = Params { beta: 1.0, hbar: 0.5, samples: 100_000, workers, ..Params::default() };
    experiment(g, c, v, SweepMode::Covariant, params, 55)
}

fn criterion_5(csvs: &mut Vec<String>) -> Outcome {
    let start = Instant::now();
    let (g, c, v) = covariant_instance();
    let (beta, hbar) = (1.0, 0.5);
    let dec = eigendecompose(&assemble(&g, &c, Some(&v.scaled(1.0 / hbar))).unwrap()).unwrap();
    let exact: f64 = diagonal_traces(&dec, beta * hbar).unwrap().iter().sum();
    let est = estimate_partition(&g, &c, &v, beta, hbar, &Sampling::new(100_000, 55), FkMode::Covariant).unwrap();
    let z = est.total.z_score(exact);
    let zi = est.imag / est.imag_stderr;
    let out = run(&covariant_experiment(1), Command::FkCompare).unwrap();
    let csv = out.table("fk.csv").unwrap().to_string();
    let consistent = (total_row(&csv)[1] - est.total.estimate).abs() == 0.0;
    csvs.push(csv);
    report(
        5,
        "Feynman-Kac, covariant (rank 2, 3-cycle, beta*hbar = 0.5)",
        z.abs() <= 3.0 && zi.abs() <= 3.0 && consistent,
        format!(
            "exact {exact:.6}, estimate {:.6} +/- {:.2e} (z = {z:.2}); imaginary {:.2e} +/- {:.2e} (z = {zi:.2}); {}",
            est.total.estimate,
            est.total.stderr,
            est.imag,
            est.imag_stderr,
            secs(start.elapsed())
        ),
    )
}

fn process_experiment(p: Preset, workers: usize) -> Experiment {
    let params = Params { t: 1.0, samples: 100_000, workers, ..Params::default() };
    preset(p, params, 66)
}

fn criterion_6(csvs: &mut Vec<String>) -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    let mut within = 0;
    for p in [Preset::TwoVertex, Preset::FourCycle] {
        let out = run(&process_experiment(p, 1), Command::Kernel).unwrap();
        let csv = out.table("process.csv").unwrap().to_string();
        for z in column(&csv, "z_score") {
            rows += 1;
            within += usize::from(z.abs() <= 3.0);
            worst = worst.max(z.abs());
        }
        csvs.push(csv);
    }
    report(
        6,
        "process laws (no-jump and transition probabilities)",
        within == rows,
        format!(
            "{within}/{rows} comparisons within 3 standard errors; max |z| {worst:.2}; 1e5 paths; {}",
            secs(start.elapsed())
        ),
    )
}

fn random_section<R: Rng>(r: &mut R, len: usize) -> Section {
    Section::from_fn(len, |_, _| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

/// Lattice coordinates parsed from `"i,j,..."` labels.
fn coords(label: &str) -> Vec<i64> {
    label.split(',').map(|s| s.parse().unwrap()).collect()
}

fn criterion_7() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(7007);
    let mut green_worst: f64 = 0.0;
    let mut norm_ok = 0;
    for _ in 0..100 {
        let n = r.random_range(1..=10);
        let rank = r.random_range(1..=3);
        let g = random_graph(&mut r, n, 0.3, (0.0, 2.0), (0.1, 2.0));
        let c = Connection::random(&g, rank, &mut r);
        let (f, h) = (random_section(&mut r, n * rank), random_section(&mut r, n * rank));
        let op = assemble(&g, &c, None).unwrap();
        let lhs = inner_m(&g, rank, &op.apply(&f), &h).unwrap();
        let rhs = quadratic_form(&g, &c, &f, &h).unwrap();
        green_worst = green_worst.max((lhs - rhs).norm());
        let b = degree_bound(&g).unwrap();
        norm_ok += usize::from(b.observed_norm <= b.norm_bound + 1e-9);
    }

    let mut stencil_worst: f64 = 0.0;
    for dim in 1..=2 {
        let g = WeightedGraph::generate(Family::LatticeBox { dim, side: 4 }).unwrap();
        let theta = MagneticPotential::random(&g, &mut r);
        let op = assemble(&g, &connection_from_magnetic(&g, &theta).unwrap(), None).unwrap();
        for x in 0..g.len() {
            let cx = coords(g.label(x));
            for y in 0..g.len() {
                let cy = coords(g.label(y));
                let dist: i64 = cx.iter().zip(&cy).map(|(a, b)| (a - b).abs()).sum();
                let expect = if x == y {
                    let inside = |k: usize, d: i64| (0..4).contains(&(cx[k] + d));
                    let nbrs = (0..dim).map(|k| usize::from(inside(k, -1)) + usize::from(inside(k, 1))).sum::<usize>();
                    Complex64::new(nbrs as f64, 0.0)
                } else if dist == 1 {
                    -Complex64::from_polar(1.0, theta.get(y, x).unwrap())
                } else {
                    Complex64::new(0.0, 0.0)
                };
                stencil_worst = stencil_worst.max((op.matrix()[(x, y)] - expect).norm());
            }
        }
    }
    report(
        7,
        "operator layer",
        green_worst <= 1e-10 && norm_ok == 100 && stencil_worst <= 1e-14,
        format!(
            "Green's formula max error {green_worst:.2e} over 100 instances; norm <= 2C(b,m) in {norm_ok}/100; magnetic lattice stencil (l = 1, 2) max deviation {stencil_worst:.1e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(8008);
    let mut dia_worst = f64::INFINITY;
    for _ in 0..100 {
        let n = r.random_range(2..=8);
        let rank = r.random_range(1..=3);
        let g = random_graph(&mut r, n, 0.3, (0.0, 2.0), (0.1, 2.0));
        let c = Connection::random(&g, rank, &mut r);
        let f = random_section(&mut r, n * rank);
        let abs = fiber_norms(rank, &f);
        let q = quadratic_form(&g, &c, &f, &f).unwrap().re;
        let q_abs = quadratic_form(&g, &Connection::trivial(&g, 1), &abs, &abs).unwrap().re;
        dia_worst = dia_worst.min(q - q_abs);
    }

    let g = random_graph(&mut r, 6, 0.4, (0.0, 2.0), (0.5, 2.0));
    let sampler = JumpSampler::new(&g);
    let mut gron_worst = f64::NEG_INFINITY;
    for k in 0..10_000 {
        let rank = 1 + k % 3;
        let c = Connection::random(&g, rank, &mut r);
        let v = Potential::random(6, rank, 1.5, &mut r);
        let w = spectral_floor(&v).unwrap().scalar_values().unwrap();
        let t = r.random_range(0.1..2.0);
        let path = sampler.sample(k % 6, t, &mut r);
        let a: CMatrix = ordered_exponential(&path, &c, &v, t).unwrap();
        gron_worst = gron_worst.max(op_norm(&a) - (-occupation_integral(&path, &w, t)).exp());
    }
    report(
        8,
        "diamagnetic and Gronwall bounds",
        dia_worst >= -1e-10 && gron_worst <= 1e-9,
        format!("min Q(f) - Q(|f|) = {dia_worst:.3e} over 100 pairs; max ||A_t|| - e^(-int w) = {gron_worst:.3e} over 1e4 paths"),
    )
}

fn criterion_9() -> Outcome {
    let g = Preset::WeylPath.graph();
    let v = Preset::WeylPath.potential(&g);
    let r = sweep(&SweepConfig {
        graph: &g,
        connection: &Connection::trivial(&g, 1),
        potential: &v,
        beta: 1.0,
        hbar_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4],
        mode: SweepMode::Scalar,
    })
    .unwrap();
    let err = (r.final_trace() - 6.0).abs();
    report(
        9,
        "Weyl preset, m = (1,2,3), w = -ln m",
        (r.classical_value - 6.0).abs() < 1e-12 && err < 1e-3,
        format!("classical value {}; |trace(1e-4) - 6| = {err:.3e} (< 1e-3)", r.classical_value),
    )
}

fn criterion_10(first: &[String]) -> Outcome {
    let start = Instant::now();
    let mut again = Vec::new();
    for (g, v, hbar) in fk_instances() {
        again.push(
            run(&fk_experiment(&g, &v, hbar, 4), Command::FkCompare).unwrap().table("fk.csv").unwrap().to_string(),
        );
    }
    again.push(run(&covariant_experiment(4), Command::FkCompare).unwrap().table("fk.csv").unwrap().to_string());
    for p in [Preset::TwoVertex, Preset::FourCycle] {
        again.push(run(&process_experiment(p, 4), Command::Kernel).unwrap().table("process.csv").unwrap().to_string());
    }
    let repeat = run(&covariant_experiment(1), Command::FkCompare).unwrap().table("fk.csv").unwrap().to_string();
    let same = first.len() == again.len() && first.iter().zip(&again).all(|(a, b)| a.as_bytes() == b.as_bytes());
    let repeat_same = repeat.as_bytes() == first[40].as_bytes();
    report(
        10,
        "determinism across worker counts",
        same && repeat_same,
        format!(
            "{} CSVs from criteria 4-6 byte-identical at 1 and 4 workers: {same}; repeated run identical: {repeat_same}; {}",
            first.len(),
            secs(start.elapsed())
        ),
    )
}

fn main() {
    println!("acceptance suite");
    let mut csvs = Vec::new();
    let outcomes = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(&mut csvs),
        criterion_5(&mut csvs),
        criterion_6(&mut csvs),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(&csvs),
    ];
    let failed: Vec<&Outcome> = outcomes.iter().filter(|o| !o.pass).collect();
    println!("{}/{} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    if !failed.is_empty() {
        for o in failed {
            eprintln!("failed: criterion {} ({}): {}", o.id, o.name, o.detail);
        }
        std::process::exit(1);
    }
}
