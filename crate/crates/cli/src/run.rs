//! Subcommands. Each one turns an [`Experiment`] into CSV tables and report
//! sections held in memory; [`write_outputs`] puts them on disk.

use std::fs;
use std::path::Path;

use qpf_core::bundle::{spectral_floor, validate_connection};
use qpf_core::operator::{assemble, degree_bound};
use qpf_core::paths::{estimate_heat_kernel, estimate_no_jump, estimate_partition, FkMode, Sampling};
use qpf_core::semiclassics::{golden_thompson_margin, sweep, SweepConfig, SweepMode};
use qpf_core::spectral::{diagonal_traces, eigendecompose, heat_kernel, kato_table};
use qpf_core::{linalg, Connection};

use crate::config::Experiment;
use crate::error::{CliError, Result};
use crate::report::{emit_report, ReportSection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    Spectrum,
    Kernel,
    Sweep,
    GtCheck,
    FkCompare,
    Kato,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Spectrum => "spectrum",
            Command::Kernel => "kernel",
            Command::Sweep => "sweep",
            Command::GtCheck => "gt-check",
            Command::FkCompare => "fk-compare",
            Command::Kato => "kato",
        }
    }
}

#[derive(Debug)]
pub struct RunOutput {
    /// `(file name, contents)`.
    pub tables: Vec<(String, String)>,
    pub sections: Vec<ReportSection>,
    /// Set when the outputs were produced but the check they record failed.
    pub failure: Option<CliError>,
}

impl RunOutput {
    fn ok(tables: Vec<(String, String)>, sections: Vec<ReportSection>) -> Self {
        Self { tables, sections, failure: None }
    }

    pub fn table(&self, name: &str) -> Option<&str> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

struct Table(csv::Writer<Vec<u8>>);

impl Table {
    fn new(header: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).expect("write to memory");
        Self(w)
    }

    fn row<I: IntoIterator<Item = String>>(&mut self, fields: I) {
        self.0.write_record(fields.into_iter().collect::<Vec<_>>()).expect("write to memory");
    }

    fn finish(self) -> String {
        String::from_utf8(self.0.into_inner().expect("flush to memory")).expect("csv is utf-8")
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn run(exp: &Experiment, cmd: Command) -> Result<RunOutput> {
    match cmd {
        Command::Validate => validate(exp),
        Command::Spectrum => spectrum(exp),
        Command::Kernel => kernel(exp),
        Command::Sweep => run_sweep(exp),
        Command::GtCheck => gt_check(exp),
        Command::FkCompare => fk_compare(exp),
        Command::Kato => kato(exp),
    }
}

/// Writes every table and `report.txt` into `dir`.
pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<()> {
    let report = emit_report(&out.sections)?;
    fs::create_dir_all(dir)?;
    for (name, contents) in &out.tables {
        fs::write(dir.join(name), contents)?;
    }
    fs::write(dir.join("report.txt"), report)?;
    Ok(())
}

fn validate(exp: &Experiment) -> Result<RunOutput> {
    let g = &exp.graph;
    let report = validate_connection(&exp.connection, g);
    let mut t = Table::new(&["from", "to", "kind", "deviation"]);
    for v in &report.violations {
        t.row([g.label(v.from).to_string(), g.label(v.to).to_string(), v.kind.name().into(), num(v.deviation)]);
    }
    let deg = g.degrees();
    let mut s = ReportSection::new("validate");
    s.line(format!("vertices: {}, edges: {}, fibre rank: {}", g.len(), g.edge_count(), exp.connection.rank()));
    s.line(format!("connected: {}", g.is_connected()));
    s.line(format!("C(b,m) = {}", deg.c_bm));
    s.line(format!("connection violations: {}", report.violations.len()));
    if !report.is_valid() {
        s.line(format!("max deviation: {}", report.max_deviation()));
    }
    exp.potential.check_hermitian()?;
    let failure = (!report.is_valid())
        .then(|| qpf_core::Error::InvalidConnection(format!("{} violation(s)", report.violations.len())).into());
    Ok(RunOutput { tables: vec![("violations.csv".into(), t.finish())], sections: vec![s], failure })
}

fn spectrum(exp: &Experiment) -> Result<RunOutput> {
    let dec = eigendecompose(&assemble(&exp.graph, &exp.connection, Some(&exp.potential))?)?;
    let mut t = Table::new(&["index", "eigenvalue"]);
    for (k, l) in dec.eigenvalues().iter().enumerate() {
        t.row([k.to_string(), num(*l)]);
    }
    let vals = dec.eigenvalues();
    let mut s = ReportSection::new("spectrum");
    s.line(format!("dimension: {}", vals.len()));
    s.line(format!("lowest eigenvalue: {}", vals[0]));
    s.line(format!("highest eigenvalue: {}", vals[vals.len() - 1]));
    let bound = degree_bound(&exp.graph)?;
    s.line(format!("free operator norm {} <= 2C(b,m) = {}", bound.observed_norm, bound.norm_bound));
    Ok(RunOutput::ok(vec![("spectrum.csv".into(), t.finish())], vec![s]))
}

fn kernel(exp: &Experiment) -> Result<RunOutput> {
    let g = &exp.graph;
    let dec = eigendecompose(&assemble(g, &exp.connection, Some(&exp.potential))?)?;
    let times = exp.params.times();
    let mut t = Table::new(&["t", "x", "y", "re", "im"]);
    let mut s = ReportSection::new("kernel");
    for &time in &times {
        let k = heat_kernel(&dec, time)?;
        for x in 0..g.len() {
            for y in 0..g.len() {
                let z = linalg::trace(&k.block(x, y));
                t.row([num(time), g.label(x).into(), g.label(y).into(), num(z.re), num(z.im)]);
            }
        }
        s.line(format!("t = {time}: trace {}", k.trace()));
    }
    if exp.connection.rank() > 1 {
        s.line("entries are fibre traces tr K(t,x,y)");
    }
    let mut tables = vec![("kernel.csv".into(), t.finish())];
    if let Some(seed) = exp.seed {
        let (csv, section) = process_laws(exp, seed, &times)?;
        tables.push(("process.csv".into(), csv));
        s.lines.extend(section.lines);
    }
    Ok(RunOutput::ok(tables, vec![s]))
}

/// Empirical no-jump and transition probabilities of the jump process
/// against `e^{−deg_m(x) t}` and `p(t,x,y)m(y)`.
fn process_laws(exp: &Experiment, seed: u64, times: &[f64]) -> Result<(String, ReportSection)> {
    let g = &exp.graph;
    let sampling = Sampling::new(exp.params.samples, seed).with_workers(exp.params.workers);
    let free = eigendecompose(&assemble(g, &Connection::trivial(g, 1), None)?)?;
    let deg = g.degrees();
    let mut t = Table::new(&["quantity", "t", "x", "y", "exact", "estimate", "stderr", "z_score"]);
    let mut worst: f64 = 0.0;
    for &time in times {
        let k = heat_kernel(&free, time)?;
        for x in 0..g.len() {
            let exact = (-deg.deg_m[x] * time).exp();
            let r = estimate_no_jump(g, x, time, &sampling)?;
            worst = worst.max(r.z_score(exact).abs());
            t.row([
                "no_jump".into(),
                num(time),
                g.label(x).into(),
                String::new(),
                num(exact),
                num(r.estimate),
                num(r.stderr),
                num(r.z_score(exact)),
            ]);
            for y in 0..g.len() {
                let exact = k.transition(x, y);
                let r = estimate_heat_kernel(g, x, y, time, &sampling)?;
                worst = worst.max(r.z_score(exact).abs());
                t.row([
                    "transition".into(),
                    num(time),
                    g.label(x).into(),
                    g.label(y).into(),
                    num(exact),
                    num(r.estimate),
                    num(r.stderr),
                    num(r.z_score(exact)),
                ]);
            }
        }
    }
    let mut s = ReportSection::new("process");
    s.line(format!(
        "{} paths per start vertex, {}",
        sampling.samples,
        qpf_core::stream::StreamFactory::new(seed).descriptor()
    ));
    s.line(format!("max |z_score| = {worst}"));
    Ok((t.finish(), s))
}

fn run_sweep(exp: &Experiment) -> Result<RunOutput> {
    let r = sweep(&SweepConfig {
        graph: &exp.graph,
        connection: &exp.connection,
        potential: &exp.potential,
        beta: exp.params.beta,
        hbar_schedule: exp.params.hbar_schedule.clone(),
        mode: exp.mode,
    })?;
    let mut t = Table::new(&["hbar", "trace", "lower", "upper", "gap"]);
    let mut s = ReportSection::new("sweep");
    s.line(format!("mode: {}, beta = {}", r.mode.name(), r.beta));
    for row in &r.rows {
        let lower = row.lower.map(num).unwrap_or_default();
        t.row([num(row.hbar), num(row.trace), lower.clone(), num(row.upper), num(row.gap)]);
        let lower = if lower.is_empty() { "n/a".into() } else { lower };
        s.line(format!("hbar = {}: (lower, trace, upper) = ({lower}, {}, {})", row.hbar, row.trace, row.upper));
    }
    let mut csv = t.finish();
    csv.push_str(&format!("# classical_value={},converged={}\n", r.classical_value, r.converged));
    s.line(format!("classical value: {}", r.classical_value));
    s.line(format!("last gap: {}, converged: {}", r.last_gap(), r.converged));
    let ratios: Vec<String> = r.gap_ratios.iter().map(|x| num(*x)).collect();
    s.line(format!("gap ratios: [{}]", ratios.join(", ")));
    if r.mode != SweepMode::Scalar {
        s.line(format!("gaps inside the scalar envelope: {} (not asserted in this mode)", r.within_envelope));
    }
    Ok(RunOutput::ok(vec![("sweep.csv".into(), csv)], vec![s]))
}

fn gt_check(exp: &Experiment) -> Result<RunOutput> {
    let mut t = Table::new(&["t", "classical", "quantum", "margin"]);
    let mut s = ReportSection::new("gt-check");
    let mut all = true;
    for time in exp.params.times() {
        let gt = golden_thompson_margin(&exp.graph, &exp.connection, &exp.potential, time)?;
        t.row([num(time), num(gt.classical), num(gt.quantum), num(gt.margin)]);
        s.line(format!("t = {time}: margin {} ({})", gt.margin, if gt.holds() { "holds" } else { "VIOLATED" }));
        all &= gt.holds();
    }
    let failure = (!all).then(|| qpf_core::Error::InvariantViolation("trace exceeds classical sum".into()).into());
    Ok(RunOutput { tables: vec![("gt.csv".into(), t.finish())], sections: vec![s], failure })
}

fn fk_compare(exp: &Experiment) -> Result<RunOutput> {
    let seed = exp.seed.ok_or(CliError::MissingSeed("fk-compare"))?;
    let (g, p) = (&exp.graph, &exp.params);
    let mode = match exp.mode {
        SweepMode::Scalar => FkMode::Scalar,
        SweepMode::Magnetic | SweepMode::Covariant => FkMode::Covariant,
    };
    let dec = eigendecompose(&assemble(g, &exp.connection, Some(&exp.potential.scaled(1.0 / p.hbar)))?)?;
    let exact = diagonal_traces(&dec, p.beta * p.hbar)?;
    let sampling = Sampling::new(p.samples, seed).with_workers(p.workers);
    let est = estimate_partition(g, &exp.connection, &exp.potential, p.beta, p.hbar, &sampling, mode)?;

    let mut t = Table::new(&["x", "exact", "estimate", "stderr", "z_score"]);
    let mut worst = (0.0f64, String::new());
    for v in &est.per_vertex {
        let zx = v.z_score(exact[v.vertex]);
        if zx.abs() > worst.0 || worst.1.is_empty() {
            worst = (zx.abs(), g.label(v.vertex).to_string());
        }
        t.row([g.label(v.vertex).into(), num(exact[v.vertex]), num(v.estimate), num(v.stderr), num(zx)]);
    }
    let total_exact: f64 = exact.iter().sum();
    let zt = est.total.z_score(total_exact);
    t.row(["total".into(), num(total_exact), num(est.total.estimate), num(est.total.stderr), num(zt)]);

    let mut s = ReportSection::new("fk-compare");
    s.line(format!("mode: {}, beta = {}, hbar = {}", exp.mode.name(), p.beta, p.hbar));
    s.line(format!("{} paths per start vertex, {}", p.samples, est.total.seed));
    s.line(format!("total: exact {total_exact}, estimate {} +/- {}, z = {zt}", est.total.estimate, est.total.stderr));
    s.line(format!(">>> max |z_score| = {} at x = {} <<<", worst.0, worst.1));
    if mode == FkMode::Covariant {
        let zi = if est.imag_stderr > 0.0 { est.imag / est.imag_stderr } else { 0.0 };
        s.line(format!("imaginary part: {} +/- {} (z = {zi})", est.imag, est.imag_stderr));
    }
    Ok(RunOutput::ok(vec![("fk.csv".into(), t.finish())], vec![s]))
}

fn kato(exp: &Experiment) -> Result<RunOutput> {
    let floor = spectral_floor(&exp.potential)?.scalar_values().expect("floor is scalar");
    let w_minus: Vec<f64> = floor.iter().map(|w| (-w).max(0.0)).collect();
    let times = exp.params.t_grid.clone().unwrap_or_else(|| vec![1.0, 0.1, 0.01, 0.001]);
    let table = kato_table(&exp.graph, &w_minus, &times)?;
    let mut t = Table::new(&["t", "kato"]);
    let mut s = ReportSection::new("kato");
    s.line("sup_x int_0^t (e^{-sH} w-)(x) ds, w- the negative part of the spectral floor");
    for (time, value) in &table {
        t.row([num(*time), num(*value)]);
        s.line(format!("t = {time}: {value}"));
    }
    Ok(RunOutput::ok(vec![("kato.csv".into(), t.finish())], vec![s]))
}
