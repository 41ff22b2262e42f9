use crate::methods::{self, Context, Evaluation, Verdict};
use crate::resolve::{self, SourceArgs};
use anyhow::{bail, Context as _, Result};
use clap::Args;
use netbell_core::covariance::{self, DykstraOptions};
use netbell_core::entropic;
use netbell_core::inequalities::ModelClass;
use netbell_core::inflation::{test_compatibility, CompatibilityOptions, InflationSpec};
use netbell_core::localfit::{self, CorrelatorFitOptions, FitOptions};
use netbell_core::quantum::born;
use netbell_core::scan::{self, TriangleTest};
use netbell_core::{zoo, Distribution, LocalModel, Network};
use rayon::prelude::*;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Formats a float for reports and CSV: fixed precision, '.' decimal.
pub fn num(v: f64) -> String {
    let s = format!("{v:.12}");
    // avoid "-0.000000000000"
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Writes `text` to `out`, or to stdout where a closed pipe is not an error.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
            _ => Ok(()),
        },
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes rows under `header` to `out`, or to stdout.
fn write_csv(out: Option<&Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Worker pool capped by `NETBELL_THREADS` when set.
fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("NETBELL_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("NETBELL_THREADS='{v}' is not a count"))?;
        b = b.num_threads(n.max(1));
    }
    Ok(b.build()?)
}

fn print_evaluation(e: &Evaluation) {
    println!("method: {}", e.name);
    println!("value: {}", num(e.value));
    println!("bound: {}", num(e.bound));
    println!("verdict: {}", e.verdict.label());
    for (k, v) in &e.aux {
        println!("{k}: {}", num(*v));
    }
    for n in &e.notes {
        println!("note: {n}");
    }
}

#[derive(Args, Debug)]
pub struct ZooArgs {
    /// Distribution to print; lists the registry when omitted.
    pub name: Option<String>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn zoo(a: ZooArgs) -> Result<Verdict> {
    match a.name {
        None => {
            for n in zoo::NAMES {
                println!("{n}");
            }
        }
        Some(n) => {
            let d = zoo::by_name(&n).with_context(|| format!("zoo names: {}", zoo::NAMES.join(", ")))?;
            emit(a.out.as_deref(), &d.to_json())?;
        }
    }
    Ok(Verdict::Satisfied)
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Strategy preset or strategy JSON file.
    #[arg(long)]
    pub strategy: String,
    #[arg(long, visible_alias = "v", default_value_t = 1.0)]
    pub visibility: f64,
    /// Distribution JSON output; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn simulate(a: SimulateArgs) -> Result<Verdict> {
    let d = born(&resolve::strategy(&a.strategy, a.visibility)?)?;
    emit(a.out.as_deref(), &d.to_json())?;
    Ok(Verdict::Satisfied)
}

#[derive(Args, Debug, Clone)]
pub struct MethodArgs {
    /// Network name (triangle, bilocal, bell, star:<m>) or JSON file.
    #[arg(long)]
    pub network: Option<String>,
    /// Model class for the Mermin and Svetlichny bounds: local, quantum or ns.
    #[arg(long, default_value = "local")]
    pub class: ModelClass,
    /// Covariance embedding: onehot or pm1 (default pm1 for binary outputs).
    #[arg(long)]
    pub embedding: Option<String>,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    /// Residual below which the covariance test reports feasible.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

impl MethodArgs {
    fn dykstra(&self) -> DykstraOptions {
        DykstraOptions { tol: self.tol, max_iter: self.max_iter }
    }
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Test to evaluate: chsh, brgp, tgb, star:<m>, mermin, svetlichny,
    /// finner-triangle, ns-triangle, triangle-entropy, bilocal-entropy,
    /// covariance, inflation:<preset>.
    #[arg(long)]
    pub ineq: String,
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub method: MethodArgs,
}

pub fn eval(a: EvalArgs) -> Result<Verdict> {
    let (d, from_strategy) = a.source.resolve()?;
    let net = resolve::network_or_default(a.method.network.as_deref(), &d, from_strategy)?;
    let ctx = Context { network: &net, class: a.method.class, embedding: a.method.embedding.as_deref(), dykstra: a.method.dykstra() };
    let e = methods::evaluate(&a.ineq, &d, &ctx)?;
    print_evaluation(&e);
    Ok(e.verdict)
}

#[derive(Args, Debug)]
pub struct InflateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub network: Option<String>,
    /// Inflation preset (cut, web, ring:6) or JSON file.
    #[arg(long, default_value = "cut")]
    pub spec: String,
    /// Also solve over the rationals; the exact status decides.
    #[arg(long)]
    pub exact: bool,
    /// Keep every copy-permutation orbit as separate variables.
    #[arg(long)]
    pub no_symmetrize: bool,
    /// Writes the Farkas certificate as JSON when infeasible.
    #[arg(long)]
    pub certificate: Option<PathBuf>,
    /// Writes the LP in text form.
    #[arg(long)]
    pub lp: Option<PathBuf>,
}

fn certificate_json<T: ToString>(c: &netbell_core::lp::FarkasCertificate<T>) -> serde_json::Value {
    let list = |v: &[T]| v.iter().map(|x| serde_json::Value::String(x.to_string())).collect::<Vec<_>>();
    serde_json::json!({ "y_eq": list(&c.y_eq), "y_ub": list(&c.y_ub) })
}

pub fn inflate(a: InflateArgs) -> Result<Verdict> {
    let (d, from_strategy) = a.source.resolve()?;
    let net = resolve::network_or_default(a.network.as_deref(), &d, from_strategy)?;
    let spec = if Path::new(&a.spec).is_file() {
        let text = std::fs::read_to_string(&a.spec)?;
        serde_json::from_str::<InflationSpec>(&text).with_context(|| format!("parsing inflation file {}", a.spec))?
    } else {
        InflationSpec::preset(&a.spec, &net)?
    };
    let r = test_compatibility(&d, &net, &spec, CompatibilityOptions { exact: a.exact, symmetrize: !a.no_symmetrize })?;
    println!("verdict: {}", r.verdict);
    println!("party_copies: {}", r.party_copies);
    println!("expressible_sets: {}", r.expressible_sets);
    println!("variables: {}", r.n_vars);
    println!("constraints: {}", r.n_constraints);
    if let Some(p) = &a.lp {
        write_text(p, &r.problem.to_lp_format())?;
    }
    if let Some(p) = &a.certificate {
        let cert = match (&r.exact, r.result.certificate()) {
            (Some(ex), _) => ex.certificate().map(certificate_json),
            (None, c) => c.map(certificate_json),
        };
        match cert {
            Some(c) => write_text(p, &serde_json::to_string_pretty(&c)?)?,
            None => eprintln!("no certificate: the LP is feasible"),
        }
    }
    Ok(if r.feasible { Verdict::Satisfied } else { Verdict::Violated })
}

#[derive(Args, Debug)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub network: Option<String>,
    /// Search for a violation instead: `bilocal` scans the bilocal entropic test.
    #[arg(long)]
    pub scan: Option<String>,
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 2000)]
    pub refine: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scan mode: writes the best distribution found as JSON.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn entropy(a: EntropyArgs) -> Result<Verdict> {
    if let Some(kind) = &a.scan {
        if kind != "bilocal" {
            bail!("unknown entropy scan '{kind}' (bilocal)");
        }
        let (d, v) = entropic::bilocal_entropy_scan(a.samples, a.refine, a.seed)?;
        println!("best_value: {}", num(v));
        if let Some(p) = &a.out {
            write_text(p, &d.to_json())?;
        }
        let e: Evaluation = entropic::check_bilocal_entropy(&d)?.into();
        // a heuristic search that finds nothing proves nothing
        return Ok(if e.verdict == Verdict::Violated { Verdict::Violated } else { Verdict::Inconclusive });
    }
    let (d, from_strategy) = a.source.resolve()?;
    let sh = &d.scenario.parties;
    if sh.len() == 3 && sh[0].inputs == 2 && sh[1].inputs == 1 && sh[2].inputs == 1 {
        let e: Evaluation = entropic::check_bilocal_entropy(&d)?.into();
        print_evaluation(&e);
        return Ok(e.verdict);
    }
    if d.scenario.has_inputs() {
        bail!("entropy vectors are computed for no-input distributions");
    }
    let net = resolve::network_or_default(a.network.as_deref(), &d, from_strategy)?;
    let ids: Vec<String> = net.parties.iter().map(|p| p.id.clone()).collect();
    let ev = entropic::entropy_vector(&d, &vec![0; d.num_parties()], Some(&ids))?;
    for mask in 1..ev.h.len() {
        let names: Vec<&str> = entropic::mask_members(mask, ids.len()).into_iter().map(|k| ids[k].as_str()).collect();
        println!("H({}): {}", names.join(","), num(ev.h[mask]));
    }
    let lp = entropic::network_entropy_feasible(&ev, &net)?;
    println!("network_lp: {}", if lp.is_feasible() { "feasible" } else { "infeasible" });
    let mut verdict = if lp.is_feasible() { Verdict::Satisfied } else { Verdict::Violated };
    if d.num_parties() == 3 && net.sources.len() == 3 {
        let e: Evaluation = entropic::check_triangle_entropy(&d)?.into();
        println!("triangle_entropy: {}", num(e.value));
        if e.verdict == Verdict::Violated {
            verdict = Verdict::Violated;
        }
    }
    println!("verdict: {}", verdict.label());
    Ok(verdict)
}

#[derive(Args, Debug)]
pub struct CovarianceArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Scan a family instead of one distribution: `ppq`.
    #[arg(long)]
    pub scan: Option<String>,
    #[arg(long, default_value_t = 0.01)]
    pub resolution: f64,
    /// Scan CSV output; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn covariance(a: CovarianceArgs) -> Result<Verdict> {
    let opts = a.method.dykstra();
    if let Some(kind) = &a.scan {
        if kind != "ppq" {
            bail!("unknown covariance scan '{kind}' (ppq)");
        }
        let pts = ppq_points(0.0, 1.0, a.resolution)?;
        let net = Network::triangle(2);
        let emb = a.method.embedding.clone();
        let rows = pool()?.install(|| {
            pts.par_iter()
                .map(|&(p, q)| -> Result<Vec<String>> {
                    let d = zoo::p_pq(p, q)?;
                    let e = methods::embedding(emb.as_deref(), &d)?;
                    let r = covariance::test_distribution(&d, &net, &e, opts)?;
                    Ok(vec![num(p), num(q), num(r.residual)])
                })
                .collect::<Result<Vec<_>>>()
        })?;
        write_csv(a.out.as_deref(), &["p", "q", "residual"], &rows)?;
        return Ok(Verdict::Satisfied);
    }
    let (d, from_strategy) = a.source.resolve()?;
    let net = resolve::network_or_default(a.method.network.as_deref(), &d, from_strategy)?;
    let e = methods::embedding(a.method.embedding.as_deref(), &d)?;
    let cov = covariance::covariance(&d, &e)?;
    let r = covariance::decompose(&cov, &net, &e.coordinate_parties(), opts)?;
    println!("dimension: {}", cov.n_rows);
    println!("residual: {}", num(r.residual));
    println!("iterations: {}", r.iterations);
    println!("regime: {}", covariance::regime(&net));
    let verdict = if r.feasible { Verdict::Satisfied } else { Verdict::Violated };
    println!("verdict: {}", if r.feasible { "feasible" } else { "infeasible" });
    Ok(verdict)
}

#[derive(Args, Debug)]
pub struct LocalfitArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long)]
    pub network: Option<String>,
    /// Hidden-variable cardinality per source, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub cards: Option<Vec<usize>>,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Alternating LP sweeps per restart (correlator: gradient steps).
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long, default_value_t = 200)]
    pub smooth_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `sweep` (general networks) or `correlator` (bilocal, binary ends).
    #[arg(long, default_value = "sweep")]
    pub method: String,
    /// Distance at or below which a model counts as found.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Model JSON output.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

pub fn localfit(a: LocalfitArgs) -> Result<Verdict> {
    let (d, from_strategy) = a.source.resolve()?;
    let (model, distance): (LocalModel, f64) = match a.method.as_str() {
        "correlator" => {
            let mut opts = CorrelatorFitOptions { restarts: a.restarts, seed: a.seed, ..Default::default() };
            if let Some(i) = a.iters {
                opts.iters = i;
            }
            let r = localfit::bilocal_correlator_fit(&d, &opts)?;
            (r.local, r.distance)
        }
        "sweep" => {
            let net = resolve::network_or_default(a.network.as_deref(), &d, from_strategy)?;
            let cards = match &a.cards {
                Some(c) => c.clone(),
                None => {
                    let (c, capped) = localfit::default_cards(&net);
                    if capped {
                        eprintln!("warning: default cardinalities capped at {}", localfit::DEFAULT_CARD_CAP);
                    }
                    c
                }
            };
            let base = {
                let mut o = FitOptions::new(cards);
                o.smooth_iters = a.smooth_iters;
                if let Some(i) = a.iters {
                    o.iters = i;
                }
                o.restarts = 1;
                o
            };
            // one seed per restart so the result does not depend on the pool size
            let runs = pool()?.install(|| {
                (0..a.restarts.max(1) as u64)
                    .into_par_iter()
                    .map(|k| {
                        let mut o = base.clone();
                        o.seed = a.seed.wrapping_add(k);
                        localfit::fit(&d, &net, &o)
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()
            })?;
            let best = runs
                .into_iter()
                .reduce(|b, r| if r.distance < b.distance { r } else { b })
                .expect("at least one restart");
            (best.model, best.distance)
        }
        other => bail!("unknown fit method '{other}' (sweep or correlator)"),
    };
    println!("distance: {}", num(distance));
    if let Some(p) = &a.out {
        write_text(p, &serde_json::to_string_pretty(&model)?)?;
    }
    if distance <= a.tol {
        println!("verdict: local model found");
        Ok(Verdict::Satisfied)
    } else {
        println!("verdict: no model found");
        Ok(Verdict::Inconclusive)
    }
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Method evaluated at each point (see `eval --help`).
    #[arg(long, visible_alias = "test")]
    pub ineq: String,
    /// One-parameter scan: `v` (strategy visibility) or `c` (rgb4 family).
    #[arg(long, conflicts_with = "family")]
    pub param: Option<String>,
    /// Two-parameter scan: `ppq` covers p and q with p + q <= 1.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    pub from: f64,
    #[arg(long, default_value_t = 1.0)]
    pub to: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// Strategy preset for `--param v`; defaults to the one matching the method.
    #[arg(long)]
    pub strategy: Option<String>,
    /// With `--family ppq`: one row per p holding the bisected boundary q.
    #[arg(long, requires = "family")]
    pub boundary: bool,
    /// Bisection tolerance for `--boundary`.
    #[arg(long, default_value_t = 1e-6)]
    pub boundary_tol: f64,
    #[command(flatten)]
    pub method: MethodArgs,
    /// CSV output; stdout when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// Grid points of the `p_pq` family with both coordinates in `[from, to]`.
fn ppq_points(from: f64, to: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    let g = scan::grid(from, to, step)?;
    let mut pts = Vec::new();
    for &p in &g {
        for &q in &g {
            if p + q <= 1.0 + 1e-9 {
                pts.push((p, q));
            }
        }
    }
    Ok(pts)
}

fn eval_row(prefix: Vec<String>, e: &Evaluation) -> Vec<String> {
    let mut row = prefix;
    row.extend([num(e.value), num(e.bound), e.verdict.label().to_string()]);
    row
}

pub fn sweep(a: SweepArgs) -> Result<Verdict> {
    let pool = pool()?;
    match (a.param.as_deref(), a.family.as_deref()) {
        (Some(param), None) => {
            let g = scan::grid(a.from, a.to, a.step)?;
            let strategy = match param {
                "v" => Some(
                    a.strategy
                        .clone()
                        .or_else(|| methods::default_strategy(&a.ineq))
                        .with_context(|| format!("--strategy is needed to sweep v for '{}'", a.ineq))?,
                ),
                "c" => None,
                other => bail!("unknown sweep parameter '{other}' (v or c)"),
            };
            let point = |t: f64| -> Result<(Distribution, Network)> {
                match &strategy {
                    Some(s) => {
                        let st = resolve::strategy(s, t)?;
                        Ok((born(&st)?, st.network))
                    }
                    None => {
                        let d = zoo::rgb4(t)?;
                        let net = resolve::network(a.method.network.as_deref().unwrap_or("triangle"), &d)?;
                        Ok((d, net))
                    }
                }
            };
            let rows = pool.install(|| {
                g.par_iter()
                    .map(|&t| -> Result<Vec<String>> {
                        let (d, net) = point(t)?;
                        let ctx = Context {
                            network: &net,
                            class: a.method.class,
                            embedding: a.method.embedding.as_deref(),
                            dykstra: a.method.dykstra(),
                        };
                        Ok(eval_row(vec![num(t)], &methods::evaluate(&a.ineq, &d, &ctx)?))
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            if let Some(onset) = rows.iter().find(|r| r[3] == "violated") {
                eprintln!("first violated {param}: {}", onset[0]);
            }
            write_csv(a.out.as_deref(), &[param, "value", "bound", "verdict"], &rows)?;
        }
        (None, Some("ppq")) if a.boundary => {
            let test: TriangleTest = a.ineq.parse()?;
            let g = scan::grid(a.from, a.to, a.step)?;
            let tol = a.boundary_tol;
            let rows = pool.install(|| {
                g.par_iter()
                    .map(|&p| -> Result<Vec<String>> {
                        let q = scan::ppq_boundary(test, p, tol)?;
                        Ok(vec![num(p), q.map(num).unwrap_or_default()])
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            write_csv(a.out.as_deref(), &["p", "q_boundary"], &rows)?;
        }
        (None, Some("ppq")) => {
            let pts = ppq_points(a.from, a.to, a.step)?;
            let net = Network::triangle(2);
            let ctx = Context {
                network: &net,
                class: a.method.class,
                embedding: a.method.embedding.as_deref(),
                dykstra: a.method.dykstra(),
            };
            let rows = pool.install(|| {
                pts.par_iter()
                    .map(|&(p, q)| -> Result<Vec<String>> {
                        let d = zoo::p_pq(p, q)?;
                        Ok(eval_row(vec![num(p), num(q)], &methods::evaluate(&a.ineq, &d, &ctx)?))
                    })
                    .collect::<Result<Vec<_>>>()
            })?;
            write_csv(a.out.as_deref(), &["p", "q", "value", "bound", "verdict"], &rows)?;
        }
        (None, Some(other)) => bail!("unknown sweep family '{other}' (ppq)"),
        (None, None) => bail!("sweep needs --param or --family"),
        (Some(_), Some(_)) => unreachable!("clap rejects --param with --family"),
    }
    Ok(Verdict::Satisfied)
}
