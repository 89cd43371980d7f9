use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use qmlab::acceptance;
use qmlab::conditions::{condition_report, Model};
use qmlab::eprb::{self, Scenario, CELLS};
use qmlab::expansion::{counting_distribution, expand_adapted, expand_generic};
use qmlab::hilbert::{
    born as born_prob, lift, spin_projector, Direction, Outcome, Projector, Resolution, StateVector,
};
use qmlab::lambda_one::{self, Schedule};
use qmlab::{tolerance, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{self, parse_direction, parse_floats, parse_schedule, RunConfig, ScenarioArgs};
use crate::output::{csv, sig, Out};

/// `Ok(false)` marks a failed check (exit 1).
type CmdResult = anyhow::Result<bool>;

/// A state from a JSON/TOML file, or a seeded random one.
#[derive(Args, Debug)]
pub struct StateSource {
    /// State file with `dims`, `re` and `im` arrays.
    #[arg(long, conflicts_with_all = ["dim", "dims"])]
    state: Option<PathBuf>,
    /// Dimension of a single-factor random state.
    #[arg(long, conflicts_with = "dims")]
    dim: Option<usize>,
    /// Factor dimensions of a random state, e.g. `2,16`.
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    #[arg(long, env = "QMLAB_SEED", default_value_t = 0)]
    seed: u64,
}

impl StateSource {
    fn load(&self) -> anyhow::Result<StateVector> {
        if let Some(p) = &self.state {
            return config::load(p);
        }
        let dims = match self.dim {
            Some(d) => vec![d],
            None if !self.dims.is_empty() => self.dims.clone(),
            None => bail!("give --state FILE, --dim or --dims"),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        StateVector::random(dims, &mut rng).context("invalid dimensions")
    }
}

#[derive(Args, Debug)]
pub struct ExpandArgs {
    #[command(flatten)]
    source: StateSource,
    /// Number of microstates.
    #[arg(long)]
    n: usize,
    /// Adapt the expansion to K cells spanned by consecutive basis vectors.
    #[arg(long, value_name = "K")]
    cells: Option<usize>,
    /// Exit 1 if any residual exceeds the expansion tolerance.
    #[arg(long)]
    verify: bool,
}

/// Cells of near-equal rank from consecutive computational basis vectors.
fn block_resolution(dims: &[usize], k: usize) -> anyhow::Result<Resolution> {
    let dim: usize = dims.iter().product();
    if k == 0 || k > dim {
        bail!("--cells must be between 1 and the dimension {dim}, got {k}");
    }
    let mut projectors = Vec::with_capacity(k);
    let mut start = 0;
    for i in 0..k {
        let len = dim / k + usize::from(i < dim % k);
        let basis = (start..start + len)
            .map(|j| {
                let mut v = vec![C64::new(0.0, 0.0); dim];
                v[j] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        projectors.push(Projector::from_range_basis(dims.to_vec(), basis)?);
        start += len;
    }
    Ok(Resolution::new(projectors)?)
}

pub fn expand(args: &ExpandArgs, out: &Out) -> CmdResult {
    let psi = args.source.load()?;
    let (e, resolution) = match args.cells {
        None => (expand_generic(&psi, args.n, args.source.seed)?, None),
        Some(k) => {
            let res = block_resolution(psi.dims(), k)?;
            (expand_adapted(&psi, &res, args.n)?, Some(res))
        }
    };
    let r = e.residuals();
    let ok = r.within(tolerance::EXPANSION);
    println!("dims = {:?}", psi.dims());
    println!("n = {}", e.n());
    println!("common_norm = {}", sig(e.common_norm()));
    println!("orthogonality_residual = {}", sig(r.orthogonality));
    println!("norm_residual = {}", sig(r.norm));
    println!("sum_residual = {}", sig(r.sum));

    if let Some(res) = &resolution {
        let dist = counting_distribution(&e, res)?;
        let born = res.born(&psi)?;
        let rows: Vec<Vec<String>> = (0..res.len())
            .map(|i| {
                vec![
                    i.to_string(),
                    sig(born[i]),
                    dist.eig1[i].to_string(),
                    sig(dist.eig1[i] as f64 / dist.n as f64),
                    sig(dist.intervals[i].lower()),
                    sig(dist.intervals[i].upper()),
                ]
            })
            .collect();
        let table = csv(
            &["cell", "born", "eig1", "counting", "lower", "upper"],
            &rows,
        );
        println!("cats = {}", dist.cats);
        print!("{table}");
        out.text("cells.csv", &table)?;
        out.json("counting.json", &dist)?;
    }
    out.json("residuals.json", &r)?;
    out.json("expansion.json", &e)?;
    if args.verify {
        println!(
            "verify: {} (max residual {}, tolerance {})",
            if ok { "ok" } else { "FAIL" },
            sig(r.max()),
            sig(tolerance::EXPANSION)
        );
        return Ok(ok);
    }
    Ok(true)
}

#[derive(Args, Debug)]
pub struct BornArgs {
    #[command(flatten)]
    source: StateSource,
    /// Spin direction measured on a two-dimensional factor.
    #[arg(long, value_parser = parse_direction, allow_hyphen_values = true, conflicts_with = "range")]
    spin: Option<Direction>,
    /// Factor carrying the spin (0-based).
    #[arg(long, default_value_t = 0)]
    factor: usize,
    /// File with a list of states spanning the projector's range.
    #[arg(long)]
    range: Option<PathBuf>,
}

pub fn born(args: &BornArgs, out: &Out) -> CmdResult {
    let psi = args.source.load()?;
    let mut rows = Vec::new();
    if let Some(d) = &args.spin {
        let dims = psi.dims();
        if dims.get(args.factor) != Some(&2) {
            bail!(
                "--factor {} is not a two-dimensional factor of {dims:?}",
                args.factor
            );
        }
        for s in [Outcome::Plus, Outcome::Minus] {
            let p = lift(&spin_projector(d, s)?, args.factor, dims)?;
            rows.push((format!("{s}"), born_prob(&psi, &p)?));
        }
    } else if let Some(path) = &args.range {
        let states: Vec<StateVector> = config::load(path)?;
        let vectors: Vec<Vec<C64>> = states.iter().map(|s| s.amplitudes().to_vec()).collect();
        let p = Projector::span(psi.dims().to_vec(), &vectors)?;
        rows.push(("range".into(), born_prob(&psi, &p)?));
    } else {
        bail!("give --spin DIRECTION or --range FILE");
    }
    let table = csv(
        &["projector", "probability"],
        &rows
            .iter()
            .map(|(l, p)| vec![l.clone(), sig(*p)])
            .collect::<Vec<_>>(),
    );
    print!("{table}");
    out.text("born.csv", &table)?;
    Ok(true)
}

fn dist_rows(dists: &[(eprb::SettingPair, eprb::JointDistribution)]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (pair, d) in dists {
        for (s, t) in CELLS {
            rows.push(vec![
                pair.label().to_string(),
                s.to_string(),
                t.to_string(),
                sig(d.get(s, t)),
            ]);
        }
    }
    rows
}

pub fn eprb_dist(scenario: &Scenario, out: &Out) -> CmdResult {
    let psi = scenario.state_vector()?;
    let dists = eprb::scenario_distributions(&psi, scenario, scenario.backend)?;
    let table = csv(&["pair", "s", "t", "p"], &dist_rows(&dists));
    print!("{table}");
    out.text("distributions.csv", &table)?;
    out.json("distributions.json", &dists)?;
    Ok(true)
}

pub fn eprb_chsh(scenario: &Scenario, out: &Out) -> CmdResult {
    let psi = scenario.state_vector()?;
    let r = eprb::chsh(&psi, scenario, scenario.backend)?;
    println!("backend = {}", r.backend);
    for (pair, e) in &r.correlations {
        println!("E({pair}) = {}", sig(*e));
    }
    println!("S = {}", sig(r.s));
    println!("|S| = {}", sig(r.abs_s()));
    let rows: Vec<Vec<String>> = r
        .correlations
        .iter()
        .map(|(p, e)| vec![p.label().to_string(), sig(*e)])
        .collect();
    out.text("correlations.csv", &csv(&["pair", "correlation"], &rows))?;
    out.text(
        "distributions.csv",
        &csv(&["pair", "s", "t", "p"], &dist_rows(&r.distributions)),
    )?;
    out.json("chsh.json", &r)?;
    Ok(true)
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Scenario file (.json or .toml); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report every built-in model (the default when no --model is given).
    #[arg(long)]
    all_models: bool,
    /// born-qm, lambda-many-counting, lambda-one or deterministic-local.
    #[arg(long = "model", conflicts_with = "all_models")]
    models: Vec<String>,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

pub fn report(args: &ReportArgs, out: &Out) -> CmdResult {
    let scenario = args.scenario.resolve(args.config.as_deref())?;
    let models = if args.models.is_empty() {
        Model::ALL.to_vec()
    } else {
        args.models
            .iter()
            .map(|m| Model::from_name(m))
            .collect::<qmlab::Result<Vec<_>>>()
            .context("unknown --model")?
    };
    let r = condition_report(&models, &scenario)?;
    let md = r.to_markdown();
    print!("{md}");
    out.text("report.md", &md)?;
    out.json("report.json", &r)?;
    if !r.consistent() {
        eprintln!("audit: flag combination violates the implication chain");
    }
    Ok(r.consistent())
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Run file (.json or .toml) with `scenario`, `trials`, `seed`, `schedule`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Trials per setting pair.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, env = "QMLAB_SEED")]
    seed: Option<u64>,
    /// round-robin, ab, ab', a'b or a'b'.
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<Schedule>,
    /// Also write the first N trial records to trials.csv.
    #[arg(long, value_name = "N", default_value_t = 0)]
    records: u64,
    #[command(flatten)]
    scenario: ScenarioArgs,
}

pub fn lambda_one_run(args: &RunArgs, out: &Out) -> CmdResult {
    let file: RunConfig = match &args.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    let scenario = args.scenario.apply(file.scenario)?;
    let trials = args.trials.unwrap_or(file.trials);
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let schedule = args.schedule.unwrap_or(file.schedule);
    if trials == 0 {
        bail!("field `trials`: at least one trial is required");
    }
    if scenario.n < 4 {
        bail!(
            "field `scenario.n`: need at least 4 microstates, got {}",
            scenario.n
        );
    }

    let psi = scenario.state_vector()?;
    let ensembles = schedule
        .pairs()
        .into_iter()
        .map(|pair| lambda_one::labelled_ensemble(&psi, &scenario, pair, scenario.n))
        .collect::<qmlab::Result<Vec<_>>>()?;
    let r = lambda_one::run_on_ensembles(&ensembles, trials, seed, schedule)?;

    println!(
        "n = {}, trials per pair = {}, seed = {}",
        r.n, r.trials_per_pair, r.seed
    );
    let mut rows = Vec::new();
    for p in &r.pairs {
        println!(
            "E({}) = {} ± {} (cats skipped {})",
            p.pair,
            sig(p.correlation),
            sig(p.correlation_se),
            p.cat_skips
        );
        for (i, (s, t)) in CELLS.iter().enumerate() {
            rows.push(vec![
                p.pair.label().to_string(),
                s.to_string(),
                t.to_string(),
                p.counts[i].to_string(),
                sig(p.frequencies[i]),
                sig(p.standard_errors[i]),
                sig(p.counting[i]),
            ]);
        }
    }
    if let (Some(s), Some(se)) = (r.chsh, r.chsh_se) {
        println!("S = {} ± {}", sig(s), sig(se));
        println!("|S| = {}", sig(s.abs()));
    }
    println!("cat fraction = {}", sig(r.cat_fraction));
    out.text(
        "frequencies.csv",
        &csv(
            &[
                "pair",
                "s",
                "t",
                "count",
                "frequency",
                "standard_error",
                "counting",
            ],
            &rows,
        ),
    )?;
    out.json("lambda_one.json", &r)?;
    if args.records > 0 {
        let total = trials * ensembles.len() as u64;
        let recs = lambda_one::trial_records(&ensembles, seed, 0..args.records.min(total));
        let rows: Vec<Vec<String>> = recs
            .iter()
            .map(|t| {
                let (s, o) = match t.outcomes {
                    Some((s, o)) => (s.to_string(), o.to_string()),
                    None => ("cat".into(), "cat".into()),
                };
                vec![
                    t.trial.to_string(),
                    t.pair.label().to_string(),
                    t.index.to_string(),
                    s,
                    o,
                ]
            })
            .collect();
        out.text(
            "trials.csv",
            &csv(&["trial", "pair", "index", "s", "t"], &rows),
        )?;
    }
    Ok(true)
}

#[derive(Args, Debug)]
pub struct ThetaArgs {
    /// Comma-separated angles in radians, each in (0, π].
    #[arg(long, conflicts_with_all = ["from", "to", "steps"])]
    grid: Option<String>,
    #[arg(long, requires_all = ["to", "steps"])]
    from: Option<f64>,
    #[arg(long)]
    to: Option<f64>,
    /// Number of grid points from --from to --to inclusive.
    #[arg(long)]
    steps: Option<usize>,
}

impl ThetaArgs {
    fn grid(&self) -> anyhow::Result<Vec<f64>> {
        if let Some(g) = &self.grid {
            if g.trim().is_empty() {
                return Ok(Vec::new());
            }
            return parse_floats(g)
                .map_err(anyhow::Error::msg)
                .context("--grid");
        }
        match (self.from, self.to, self.steps) {
            (Some(a), Some(b), Some(k)) => Ok(match k {
                0 => Vec::new(),
                1 => vec![a],
                _ => (0..k)
                    .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
                    .collect(),
            }),
            _ => bail!("give --grid or --from, --to and --steps"),
        }
    }
}

pub fn sweep_theta(args: &ThetaArgs, out: &Out) -> CmdResult {
    let rows = eprb::sweep_theta(&args.grid()?)?;
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                sig(r.theta),
                sig(r.correlation),
                sig(r.deficit),
                sig(r.ratio),
            ]
        })
        .collect();
    let table = csv(
        &["theta", "correlation", "one_plus_correlation", "ratio"],
        &cells,
    );
    print!("{table}");
    out.text("sweep_theta.csv", &table)?;
    Ok(true)
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Criterion ids to run, e.g. `3,4,10`; all when omitted.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
}

#[derive(Serialize)]
struct VerifyRecord<'a> {
    id: &'a str,
    title: &'a str,
    pass: bool,
    detail: &'a str,
}

pub fn verify(args: &VerifyArgs, out: &Out) -> CmdResult {
    let ids: Vec<String> = if args.only.is_empty() {
        acceptance::IDS.iter().map(|s| s.to_string()).collect()
    } else {
        args.only.clone()
    };
    if let Some(bad) = ids
        .iter()
        .find(|id| !acceptance::IDS.contains(&id.as_str()))
    {
        bail!(
            "unknown criterion `{bad}`; known: {}",
            acceptance::IDS.join(", ")
        );
    }
    let mut outcomes = Vec::new();
    for id in &ids {
        let o = acceptance::run(id).expect("id checked above");
        println!("{}", o.line());
        std::io::stdout().flush().ok();
        outcomes.push(o);
    }
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria passed", outcomes.len());

    // Files omit timings so reruns are byte-identical.
    let mut md = String::from("| id | criterion | result | detail |\n|---|---|---|---|\n");
    for o in &outcomes {
        md.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            o.id,
            o.title,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail.replace('|', "\\|")
        ));
    }
    out.text("verify.md", &md)?;
    let records: Vec<VerifyRecord> = outcomes
        .iter()
        .map(|o| VerifyRecord {
            id: &o.id,
            title: &o.title,
            pass: o.pass,
            detail: &o.detail,
        })
        .collect();
    out.json("verify.json", &records)?;
    Ok(passed == outcomes.len())
}
