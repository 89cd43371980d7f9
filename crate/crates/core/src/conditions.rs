//! Locality conditions on EPRB joint distributions and on deterministic
//! hidden-variable models, the classical CHSH bound, and the propositional
//! audit relating locality, measurement independence, uniqueness of
//! outcomes and Bell-inequality satisfaction.

use serde::{Deserialize, Serialize};

use crate::eprb::{
    chsh_from_distributions, joint_distribution, marginals, scenario_distributions, Backend,
    JointDistribution, Scenario, SettingPair, CELLS,
};
use crate::hilbert::{Direction, Outcome, StateVector};
use crate::lambda_one::{self, LambdaOneModel};
use crate::{tolerance, Error, Result};

/// Slack on the Born-backend CHSH bound.
pub const BELL_BORN_SLACK: f64 = 1e-9;

/// Entries of a deterministic table must lie this close to 0 or 1.
const DETERMINISM: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub name: String,
    pub pass: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    /// Conditioning cells skipped for having probability at most the
    /// conditioning guard.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
}

impl ConditionVerdict {
    pub fn new(name: &str, max_violation: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            pass: max_violation <= tolerance,
            max_violation,
            tolerance,
            skipped: Vec::new(),
        }
    }
}

/// Default tolerances for a backend. Counting errors are at most `3/n` per
/// cell, so marginals are off by at most `6/n` and products of marginals by
/// at most `12/n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckTolerances {
    pub parameter_independence: f64,
    pub completeness: f64,
    pub bell: f64,
    /// `None` for the Born backend; otherwise `n`.
    pub counting_n: Option<usize>,
}

impl CheckTolerances {
    pub fn for_backend(backend: Backend, n: usize) -> Self {
        match backend {
            Backend::Born => Self {
                parameter_independence: tolerance::BORN_CHECK,
                completeness: tolerance::BORN_CHECK,
                bell: BELL_BORN_SLACK,
                counting_n: None,
            },
            Backend::Counting => {
                let n = n as f64;
                Self {
                    parameter_independence: 6.0 / n,
                    completeness: 15.0 / n,
                    bell: 48.0 / n,
                    counting_n: Some(n as usize),
                }
            }
        }
    }

    /// `6/n + 9/(n·p_min)` for counting, where `p_min` is the smallest
    /// conditioning probability used.
    pub fn outcome_independence(&self, p_min: f64) -> f64 {
        match self.counting_n {
            None => tolerance::BORN_CHECK,
            Some(n) => {
                let n = n as f64;
                6.0 / n + 9.0 / (n * p_min)
            }
        }
    }
}

fn tolerances_of(dists: &[(SettingPair, JointDistribution)]) -> CheckTolerances {
    let d = &dists[0].1;
    CheckTolerances::for_backend(d.backend, d.n.unwrap_or(1))
}

fn find(
    dists: &[(SettingPair, JointDistribution)],
    pair: SettingPair,
) -> Result<&JointDistribution> {
    dists
        .iter()
        .find(|(p, _)| *p == pair)
        .map(|(_, d)| d)
        .ok_or_else(|| Error::InvalidArgument(format!("no distribution for setting pair {pair}")))
}

/// Largest shift of either party's marginal under a change of the remote
/// setting, over all four pairs.
pub fn parameter_independence(
    dists: &[(SettingPair, JointDistribution)],
    tol: Option<f64>,
) -> Result<ConditionVerdict> {
    let tol = tol.unwrap_or_else(|| tolerances_of(dists).parameter_independence);
    let mut worst: f64 = 0.0;
    for primed in [false, true] {
        let near = marginals(find(dists, SettingPair::from_primes(primed, false))?);
        let far = marginals(find(dists, SettingPair::from_primes(primed, true))?);
        for s in 0..2 {
            worst = worst.max((near.alice[s] - far.alice[s]).abs());
        }
        let near = marginals(find(dists, SettingPair::from_primes(false, primed))?);
        let far = marginals(find(dists, SettingPair::from_primes(true, primed))?);
        for t in 0..2 {
            worst = worst.max((near.bob[t] - far.bob[t]).abs());
        }
    }
    Ok(ConditionVerdict::new("parameter_independence", worst, tol))
}

/// Largest `|p(s) − p(s|t)|` over settings and outcomes, both directions.
/// Conditioning outcomes at or below the guard are skipped and listed.
pub fn outcome_independence(
    dists: &[(SettingPair, JointDistribution)],
    tol: Option<f64>,
) -> Result<ConditionVerdict> {
    let mut worst: f64 = 0.0;
    let mut p_min: f64 = 1.0;
    let mut skipped = Vec::new();
    for (pair, d) in dists {
        let m = marginals(d);
        for given in Outcome::BOTH {
            let g = given.index();
            if m.bob[g] > tolerance::CONDITIONING {
                p_min = p_min.min(m.bob[g]);
                for s in 0..2 {
                    worst = worst.max((m.alice[s] - d.p[s][g] / m.bob[g]).abs());
                }
            } else {
                skipped.push(format!("{pair}: t = {given}"));
            }
            if m.alice[g] > tolerance::CONDITIONING {
                p_min = p_min.min(m.alice[g]);
                for t in 0..2 {
                    worst = worst.max((m.bob[t] - d.p[g][t] / m.alice[g]).abs());
                }
            } else {
                skipped.push(format!("{pair}: s = {given}"));
            }
        }
    }
    let tol = tol.unwrap_or_else(|| tolerances_of(dists).outcome_independence(p_min));
    let mut v = ConditionVerdict::new("outcome_independence", worst, tol);
    v.skipped = skipped;
    Ok(v)
}

/// Largest `|p(s,t) − p(s)·p(t)|` over the given distributions.
pub fn completeness(
    dists: &[(SettingPair, JointDistribution)],
    tol: Option<f64>,
) -> Result<ConditionVerdict> {
    let tol = tol.unwrap_or_else(|| tolerances_of(dists).completeness);
    let worst = dists
        .iter()
        .map(|(_, d)| completeness_violation(d))
        .fold(0.0, f64::max);
    Ok(ConditionVerdict::new("completeness", worst, tol))
}

pub fn completeness_violation(d: &JointDistribution) -> f64 {
    let m = marginals(d);
    CELLS
        .iter()
        .map(|&(s, t)| (d.get(s, t) - m.alice[s.index()] * m.bob[t.index()]).abs())
        .fold(0.0, f64::max)
}

pub fn check_parameter_independence(
    psi: &StateVector,
    scenario: &Scenario,
    backend: Backend,
    tol: Option<f64>,
) -> Result<ConditionVerdict> {
    parameter_independence(&scenario_distributions(psi, scenario, backend)?, tol)
}

pub fn check_outcome_independence(
    psi: &StateVector,
    scenario: &Scenario,
    backend: Backend,
    tol: Option<f64>,
) -> Result<ConditionVerdict> {
    outcome_independence(&scenario_distributions(psi, scenario, backend)?, tol)
}

/// Completeness for a single setting pair; `n` is used by the counting
/// backend.
pub fn check_completeness(
    psi: &StateVector,
    x: &Direction,
    y: &Direction,
    backend: Backend,
    n: Option<usize>,
    tol: Option<f64>,
) -> Result<ConditionVerdict> {
    let d = joint_distribution(psi, x, y, backend, n)?;
    completeness(&[(SettingPair::AB, d)], tol)
}

/// A deterministic local strategy: outcomes for `a, a′, b, b′`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Strategy {
    pub a: Outcome,
    pub a_prime: Outcome,
    pub b: Outcome,
    pub b_prime: Outcome,
}

impl Strategy {
    pub fn all() -> Vec<Strategy> {
        let mut out = Vec::with_capacity(16);
        for a in Outcome::BOTH {
            for a_prime in Outcome::BOTH {
                for b in Outcome::BOTH {
                    for b_prime in Outcome::BOTH {
                        out.push(Strategy {
                            a,
                            a_prime,
                            b,
                            b_prime,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn alice(&self, primed: bool) -> Outcome {
        if primed {
            self.a_prime
        } else {
            self.a
        }
    }

    pub fn bob(&self, primed: bool) -> Outcome {
        if primed {
            self.b_prime
        } else {
            self.b
        }
    }

    /// CHSH value in integer arithmetic.
    pub fn chsh(&self) -> i32 {
        let e = |x: bool, y: bool| self.alice(x).value() * self.bob(y).value();
        e(false, false) - e(false, true) + e(true, false) + e(true, true)
    }
}

/// Maximum `|S|` over the 16 deterministic local strategies.
pub fn deterministic_strategy_max_chsh() -> i32 {
    Strategy::all()
        .iter()
        .map(|s| s.chsh().abs())
        .max()
        .expect("sixteen strategies")
}

/// A hidden-variable model whose single-λ probabilities are 0 or 1.
pub trait DeterministicModel {
    fn lambda_count(&self) -> usize;

    /// `p_{x,y}(s,t|λ)`, or `None` where `λ` does not occur with this
    /// setting pair or fixes no outcome.
    fn joint(&self, lambda: usize, pair: SettingPair) -> Option<[[f64; 2]; 2]>;

    /// Alice's single-λ response `p_x(s|λ)`. By default the mean of the
    /// pair marginals over Bob's settings.
    fn alice_response(&self, lambda: usize, primed: bool) -> Option<[f64; 2]> {
        mean_response(
            [false, true]
                .iter()
                .filter_map(|&bp| self.joint(lambda, SettingPair::from_primes(primed, bp)))
                .map(|p| [p[0][0] + p[0][1], p[1][0] + p[1][1]]),
        )
    }

    /// Bob's single-λ response `p_y(t|λ)`.
    fn bob_response(&self, lambda: usize, primed: bool) -> Option<[f64; 2]> {
        mean_response(
            [false, true]
                .iter()
                .filter_map(|&ap| self.joint(lambda, SettingPair::from_primes(ap, primed)))
                .map(|p| [p[0][0] + p[1][0], p[0][1] + p[1][1]]),
        )
    }
}

fn mean_response(it: impl Iterator<Item = [f64; 2]>) -> Option<[f64; 2]> {
    let mut acc = [0.0; 2];
    let mut k = 0;
    for r in it {
        acc[0] += r[0];
        acc[1] += r[1];
        k += 1;
    }
    (k > 0).then(|| [acc[0] / k as f64, acc[1] / k as f64])
}

fn check_deterministic(table: &[[f64; 2]; 2]) -> Result<()> {
    for &v in table.iter().flatten() {
        if !(v.abs() <= DETERMINISM || (v - 1.0).abs() <= DETERMINISM) {
            return Err(Error::NotDeterministic { value: v });
        }
    }
    Ok(())
}

/// Checks `p_{x,y}(s,t|λ) = p_x(s|λ)·p_y(t|λ)` for the listed `λ` over all
/// setting pairs where the model defines a table.
pub fn check_factorizability<M: DeterministicModel + ?Sized>(
    model: &M,
    lambdas: &[usize],
) -> Result<ConditionVerdict> {
    let mut worst: f64 = 0.0;
    for &lambda in lambdas {
        for pair in SettingPair::ALL {
            let Some(table) = model.joint(lambda, pair) else {
                continue;
            };
            check_deterministic(&table)?;
            let (ap, bp) = pair.primes();
            let (Some(pa), Some(pb)) = (
                model.alice_response(lambda, ap),
                model.bob_response(lambda, bp),
            ) else {
                continue;
            };
            for s in 0..2 {
                for t in 0..2 {
                    worst = worst.max((table[s][t] - pa[s] * pb[t]).abs());
                }
            }
        }
    }
    Ok(ConditionVerdict::new("factorizability", worst, DETERMINISM))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaPi {
    Verdict(ConditionVerdict),
    /// The hidden-state spaces for different remote settings share no
    /// element, so the λ-conditional condition has nothing to compare.
    NotApplicable {
        max_cross_overlap: Option<f64>,
    },
}

/// λ-conditional Parameter Independence for models whose λ occurs with
/// every setting pair: Alice's single-λ marginal must not depend on Bob's
/// setting, and vice versa.
pub fn check_lambda_parameter_independence<M: DeterministicModel + ?Sized>(model: &M) -> LambdaPi {
    let mut worst: f64 = 0.0;
    let mut compared = false;
    for lambda in 0..model.lambda_count() {
        for primed in [false, true] {
            let tables = |f: &dyn Fn(bool) -> SettingPair| {
                (model.joint(lambda, f(false)), model.joint(lambda, f(true)))
            };
            if let (Some(p), Some(q)) = tables(&|bp| SettingPair::from_primes(primed, bp)) {
                compared = true;
                for s in 0..2 {
                    worst = worst.max(((p[s][0] + p[s][1]) - (q[s][0] + q[s][1])).abs());
                }
            }
            if let (Some(p), Some(q)) = tables(&|ap| SettingPair::from_primes(ap, primed)) {
                compared = true;
                for t in 0..2 {
                    worst = worst.max(((p[0][t] + p[1][t]) - (q[0][t] + q[1][t])).abs());
                }
            }
        }
    }
    if compared {
        LambdaPi::Verdict(ConditionVerdict::new(
            "lambda_parameter_independence",
            worst,
            DETERMINISM,
        ))
    } else {
        LambdaPi::NotApplicable {
            max_cross_overlap: None,
        }
    }
}

/// Weighted deterministic local strategies; `λ` is the strategy index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyModel {
    pub strategies: Vec<(Strategy, f64)>,
}

impl StrategyModel {
    /// Point mass on the all-`+1` strategy.
    pub fn all_plus() -> Self {
        Self {
            strategies: vec![(
                Strategy {
                    a: Outcome::Plus,
                    a_prime: Outcome::Plus,
                    b: Outcome::Plus,
                    b_prime: Outcome::Plus,
                },
                1.0,
            )],
        }
    }

    /// `ρ`-averaged joint distribution for one pair of directions.
    pub fn distribution(
        &self,
        pair: SettingPair,
        x: Direction,
        y: Direction,
    ) -> Result<JointDistribution> {
        let mut p = [[0.0; 2]; 2];
        let total: f64 = self.strategies.iter().map(|(_, w)| w).sum();
        let (ap, bp) = pair.primes();
        for (s, w) in &self.strategies {
            p[s.alice(ap).index()][s.bob(bp).index()] += w / total;
        }
        JointDistribution::from_table(x, y, p)
    }
}

impl DeterministicModel for StrategyModel {
    fn lambda_count(&self) -> usize {
        self.strategies.len()
    }

    fn joint(&self, lambda: usize, pair: SettingPair) -> Option<[[f64; 2]; 2]> {
        let (s, _) = self.strategies.get(lambda)?;
        let (ap, bp) = pair.primes();
        let mut p = [[0.0; 2]; 2];
        p[s.alice(ap).index()][s.bob(bp).index()] = 1.0;
        Some(p)
    }
}

/// Explicit per-λ tables for all four setting pairs, in [`SettingPair::ALL`]
/// order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableModel {
    pub tables: Vec<[[[f64; 2]; 2]; 4]>,
}

impl DeterministicModel for TableModel {
    fn lambda_count(&self) -> usize {
        self.tables.len()
    }

    fn joint(&self, lambda: usize, pair: SettingPair) -> Option<[[f64; 2]; 2]> {
        let i = SettingPair::ALL.iter().position(|p| *p == pair)?;
        self.tables.get(lambda).map(|t| t[i])
    }
}

/// The propositional flags of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFlags {
    pub loc: bool,
    pub ind: bool,
    pub unique: bool,
    pub bell: bool,
}

/// One material implication evaluated on a flag assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Implication {
    pub statement: String,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub implications: Vec<Implication>,
}

impl AuditResult {
    pub fn consistent(&self) -> bool {
        self.implications.iter().all(|i| i.holds)
    }

    pub fn violations(&self) -> Vec<&str> {
        self.implications
            .iter()
            .filter(|i| !i.holds)
            .map(|i| i.statement.as_str())
            .collect()
    }
}

/// Evaluates `(LOC ∧ IND ∧ UNIQUE) → BELL` and its contrapositive forms
/// on the flags.
pub fn implication_audit(f: ModelFlags) -> AuditResult {
    let imp = |statement: &str, antecedent: bool, consequent: bool| Implication {
        statement: statement.to_string(),
        holds: !antecedent || consequent,
    };
    AuditResult {
        implications: vec![
            imp(
                "(LOC ∧ IND ∧ UNIQUE) → BELL",
                f.loc && f.ind && f.unique,
                f.bell,
            ),
            imp(
                "(LOC ∧ IND ∧ ¬BELL) → ¬UNIQUE",
                f.loc && f.ind && !f.bell,
                !f.unique,
            ),
            imp(
                "(LOC ∧ UNIQUE ∧ ¬BELL) → ¬IND",
                f.loc && f.unique && !f.bell,
                !f.ind,
            ),
            imp(
                "(UNIQUE ∧ ¬BELL ∧ IND) → ¬LOC",
                f.unique && !f.bell && f.ind,
                !f.loc,
            ),
        ],
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    BornQm,
    LambdaManyCounting,
    LambdaOne,
    DeterministicLocal,
}

impl Model {
    pub const ALL: [Model; 4] = [
        Model::BornQm,
        Model::LambdaManyCounting,
        Model::LambdaOne,
        Model::DeterministicLocal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::BornQm => "born-qm",
            Model::LambdaManyCounting => "lambda-many-counting",
            Model::LambdaOne => "lambda-one",
            Model::DeterministicLocal => "deterministic-local",
        }
    }

    /// Declared `(LOC, UNIQUE)`. Born-rule quantum mechanics with unique
    /// outcomes is taken as nonlocal.
    pub fn declared_loc_unique(self) -> (bool, bool) {
        match self {
            Model::BornQm => (false, true),
            Model::LambdaManyCounting => (true, false),
            Model::LambdaOne => (true, true),
            Model::DeterministicLocal => (true, true),
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model {name:?}")))
    }
}

impl std::fmt::Display for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: Model,
    pub parameter_independence: ConditionVerdict,
    pub outcome_independence: ConditionVerdict,
    pub completeness: ConditionVerdict,
    pub factorizability: Option<ConditionVerdict>,
    pub lambda_parameter_independence: Option<LambdaPi>,
    pub abs_s: f64,
    pub bell_tolerance: f64,
    pub flags: ModelFlags,
    pub audit: AuditResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub scenario: Scenario,
    pub rows: Vec<ReportRow>,
}

fn mark(pass: bool) -> &'static str {
    if pass {
        "✓"
    } else {
        "✗"
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "T"
    } else {
        "F"
    }
}

impl ConditionReport {
    pub fn row(&self, model: Model) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn consistent(&self) -> bool {
        self.rows.iter().all(|r| r.audit.consistent())
    }

    pub fn to_markdown(&self) -> String {
        let mut out = String::from(
            "| model | PI | OI | Completeness | Factorizability | IND | UNIQUE | LOC | \\|S\\| | BELL | audit |\n\
             |---|---|---|---|---|---|---|---|---|---|---|\n",
        );
        for r in &self.rows {
            let fact = r.factorizability.as_ref().map_or("n/a", |v| mark(v.pass));
            let audit = if r.audit.consistent() {
                "consistent".to_string()
            } else {
                format!("violates {}", r.audit.violations().join("; "))
            };
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                r.model,
                mark(r.parameter_independence.pass),
                mark(r.outcome_independence.pass),
                mark(r.completeness.pass),
                fact,
                flag(r.flags.ind),
                flag(r.flags.unique),
                flag(r.flags.loc),
                crate::format::sig9(r.abs_s),
                flag(r.flags.bell),
                audit,
            ));
        }
        out
    }
}

fn assemble(
    model: Model,
    dists: &[(SettingPair, JointDistribution)],
    tol: CheckTolerances,
    factorizability: Option<ConditionVerdict>,
    lambda_pi: Option<LambdaPi>,
    ind: bool,
) -> Result<ReportRow> {
    let pi = parameter_independence(dists, Some(tol.parameter_independence))?;
    let oi = outcome_independence(dists, None)?;
    let comp = completeness(dists, Some(tol.completeness))?;
    let backend = dists[0].1.backend;
    let abs_s = chsh_from_distributions(backend, dists.to_vec()).abs_s();
    let (loc, unique) = model.declared_loc_unique();
    let flags = ModelFlags {
        loc,
        ind,
        unique,
        bell: abs_s <= 2.0 + tol.bell,
    };
    Ok(ReportRow {
        model,
        parameter_independence: pi,
        outcome_independence: oi,
        completeness: comp,
        factorizability,
        lambda_parameter_independence: lambda_pi,
        abs_s,
        bell_tolerance: tol.bell,
        flags,
        audit: implication_audit(flags),
    })
}

/// Runs the applicable checks for one model on `scenario`.
pub fn model_row(model: Model, scenario: &Scenario) -> Result<ReportRow> {
    scenario.validate()?;
    match model {
        Model::BornQm | Model::LambdaManyCounting => {
            let backend = if model == Model::BornQm {
                Backend::Born
            } else {
                Backend::Counting
            };
            let psi = scenario.state_vector()?;
            let dists = scenario_distributions(&psi, scenario, backend)?;
            assemble(
                model,
                &dists,
                CheckTolerances::for_backend(backend, scenario.n),
                None,
                None,
                true,
            )
        }
        Model::LambdaOne => {
            let psi = scenario.state_vector()?;
            let ensembles = lambda_one::build_labelled_ensembles(&psi, scenario, scenario.n)?;
            let dists: Vec<(SettingPair, JointDistribution)> = ensembles
                .iter()
                .map(|e| (e.pair, e.distribution()))
                .collect();
            let model_impl = LambdaOneModel::new(ensembles);
            let lambdas: Vec<usize> = (0..model_impl.lambda_count()).collect();
            let fact = check_factorizability(&model_impl, &lambdas)?;
            drop(model_impl);
            let audit = lambda_one::contextuality_audit(
                &psi,
                &scenario.a,
                &scenario.b,
                &scenario.b_prime,
                scenario.n,
            )?;
            let lambda_pi = audit.lambda_parameter_independence();
            assemble(
                model,
                &dists,
                CheckTolerances::for_backend(Backend::Counting, scenario.n),
                Some(fact),
                Some(lambda_pi),
                !audit.setting_dependent,
            )
        }
        Model::DeterministicLocal => {
            let m = StrategyModel::all_plus();
            let dists = SettingPair::ALL
                .iter()
                .map(|&pair| {
                    let (x, y) = scenario.directions(pair);
                    m.distribution(pair, x, y).map(|d| (pair, d))
                })
                .collect::<Result<Vec<_>>>()?;
            let lambdas: Vec<usize> = (0..m.lambda_count()).collect();
            let fact = check_factorizability(&m, &lambdas)?;
            let lambda_pi = check_lambda_parameter_independence(&m);
            assemble(
                model,
                &dists,
                CheckTolerances::for_backend(Backend::Born, scenario.n),
                Some(fact),
                Some(lambda_pi),
                true,
            )
        }
    }
}

pub fn condition_report(models: &[Model], scenario: &Scenario) -> Result<ConditionReport> {
    let rows = models
        .iter()
        .map(|&m| model_row(m, scenario))
        .collect::<Result<_>>()?;
    Ok(ConditionReport {
        scenario: scenario.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eprb::{product_state, singlet_state, Spinor};
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn strategy_enumeration_bound_is_two() {
        assert_eq!(Strategy::all().len(), 16);
        assert_eq!(deterministic_strategy_max_chsh(), 2);
        let s = Strategy {
            a: Outcome::Plus,
            a_prime: Outcome::Plus,
            b: Outcome::Plus,
            b_prime: Outcome::Minus,
        };
        assert_eq!(s.chsh(), 2);
        assert_eq!(StrategyModel::all_plus().strategies[0].0.chsh(), 2);
    }

    #[test]
    fn singlet_born_checks() {
        let scenario = Scenario::tsirelson(1, 1);
        let psi = singlet_state(1, 1).unwrap();
        let pi = check_parameter_independence(&psi, &scenario, Backend::Born, None).unwrap();
        assert!(pi.pass && pi.max_violation <= 1e-12);
        let z = Direction::z();
        let comp = check_completeness(&psi, &z, &z, Backend::Born, None, None).unwrap();
        assert!(!comp.pass);
        assert!((comp.max_violation - 0.25).abs() < 1e-12);
        let perp =
            check_completeness(&psi, &z, &Direction::x(), Backend::Born, None, None).unwrap();
        assert!(perp.pass);
    }

    #[test]
    fn singlet_equal_settings_violate_oi() {
        let z = Direction::z();
        let scenario = Scenario {
            a: z,
            a_prime: z,
            b: z,
            b_prime: z,
            ..Scenario::tsirelson(1, 1)
        };
        let psi = singlet_state(1, 1).unwrap();
        let oi = check_outcome_independence(&psi, &scenario, Backend::Born, None).unwrap();
        assert!(!oi.pass);
        assert!((oi.max_violation - 0.5).abs() < 1e-12);
    }

    #[test]
    fn singlet_orthogonal_settings_satisfy_oi() {
        let scenario = Scenario {
            a: Direction::z(),
            a_prime: Direction::z(),
            b: Direction::in_xz_plane(FRAC_PI_2),
            b_prime: Direction::in_xz_plane(-FRAC_PI_2),
            ..Scenario::tsirelson(1, 1)
        };
        let psi = singlet_state(1, 1).unwrap();
        assert!(
            check_outcome_independence(&psi, &scenario, Backend::Born, None)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn product_state_passes_and_skips_impossible_outcomes() {
        let scenario = Scenario {
            a: Direction::z(),
            b: Direction::z(),
            ..Scenario::tsirelson(1, 1)
        };
        let psi = product_state(&Spinor::up(), &Spinor::up(), 1, 1).unwrap();
        let oi = check_outcome_independence(&psi, &scenario, Backend::Born, None).unwrap();
        assert!(oi.pass, "{oi:?}");
        assert!(!oi.skipped.is_empty());
        assert!(
            check_parameter_independence(&psi, &scenario, Backend::Born, None)
                .unwrap()
                .pass
        );
    }

    #[test]
    fn nonlocal_table_is_not_factorizable() {
        // Alice's outcome at `a` follows Bob's setting; averaged over Bob's
        // settings her response is uniform.
        let pp = [[1.0, 0.0], [0.0, 0.0]];
        let mm = [[0.0, 0.0], [0.0, 1.0]];
        let model = TableModel {
            tables: vec![[pp, mm, pp, pp]],
        };
        let v = check_factorizability(&model, &[0]).unwrap();
        assert!(!v.pass);
        assert!((v.max_violation - 0.75).abs() < 1e-15);
        match check_lambda_parameter_independence(&model) {
            LambdaPi::Verdict(v) => assert!(!v.pass),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn point_mass_factorizes() {
        let m = StrategyModel::all_plus();
        assert!(check_factorizability(&m, &[0]).unwrap().pass);
        match check_lambda_parameter_independence(&m) {
            LambdaPi::Verdict(v) => assert!(v.pass && v.max_violation == 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_deterministic_table_is_rejected() {
        let half = [[0.5, 0.0], [0.0, 0.5]];
        let model = TableModel {
            tables: vec![[half; 4]],
        };
        assert!(matches!(
            check_factorizability(&model, &[0]),
            Err(Error::NotDeterministic { .. })
        ));
    }

    #[test]
    fn audit_examples() {
        let f = |loc, ind, unique, bell| ModelFlags {
            loc,
            ind,
            unique,
            bell,
        };
        assert!(implication_audit(f(true, true, false, false)).consistent());
        assert!(implication_audit(f(true, false, true, false)).consistent());
        let bad = implication_audit(f(true, true, true, false));
        assert!(!bad.consistent());
        assert_eq!(bad.violations()[0], "(LOC ∧ IND ∧ UNIQUE) → BELL");
        // The four sentences are equivalent: each flag assignment satisfies
        // all or none.
        for bits in 0..16u8 {
            let a = implication_audit(f(
                bits & 1 != 0,
                bits & 2 != 0,
                bits & 4 != 0,
                bits & 8 != 0,
            ));
            let holds: Vec<bool> = a.implications.iter().map(|i| i.holds).collect();
            assert!(holds.iter().all(|&h| h == holds[0]));
        }
    }

    #[test]
    fn born_and_deterministic_rows() {
        let scenario = Scenario::tsirelson(1, 1);
        let born = model_row(Model::BornQm, &scenario).unwrap();
        assert!(born.parameter_independence.pass);
        assert!(!born.outcome_independence.pass);
        assert!(!born.completeness.pass);
        assert!(!born.flags.bell);
        assert!((born.abs_s - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
        assert!(born.audit.consistent());
        let det = model_row(Model::DeterministicLocal, &scenario).unwrap();
        assert!(det.parameter_independence.pass && det.outcome_independence.pass);
        assert!(det.completeness.pass && det.factorizability.unwrap().pass);
        assert!(det.flags.bell && det.audit.consistent());
        assert_eq!(det.abs_s, 2.0);
    }
}
