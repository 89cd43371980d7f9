//! Config files and the flags that override them.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use clap::{Args, ValueEnum};
use qmlab::eprb::{Backend, Scenario, SettingPair, Spinor, StateSpec};
use qmlab::hilbert::Direction;
use qmlab::lambda_one::Schedule;
use serde::de::DeserializeOwned;
use serde::Deserialize;

/// Reads a `.json` or `.toml` file. Errors carry the field path and, where
/// the format reports one, the line.
pub fn load<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    let parsed = match ext {
        "json" => {
            let mut de = serde_json::Deserializer::from_str(&text);
            serde_path_to_error::deserialize(&mut de)
                .map_err(|e| anyhow!("field `{}`: {}", e.path(), e.inner()))
        }
        "toml" => {
            let de = toml::Deserializer::new(&text);
            serde_path_to_error::deserialize(de).map_err(|e| {
                let path = e.path().to_string();
                let inner = e.into_inner();
                let line = inner
                    .span()
                    .map(|s| text[..s.start].matches('\n').count() + 1);
                match line {
                    Some(l) => anyhow!("field `{path}` (line {l}): {}", inner.message()),
                    None => anyhow!("field `{path}`: {}", inner.message()),
                }
            })
        }
        _ => bail!("config {} must end in .json or .toml", path.display()),
    };
    parsed.with_context(|| format!("invalid config {}", path.display()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StateKind {
    Singlet,
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Born,
    Counting,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Born => Backend::Born,
            BackendArg::Counting => Backend::Counting,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AnglePreset {
    /// a = 0, a′ = π/2, b = π/4, b′ = 3π/4 in the x–z plane.
    Tsirelson,
}

/// Accepts `x`, `y`, `z`, `xz:THETA` (radians from z) or `X,Y,Z`.
pub fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "x" => return Ok(Direction::x()),
        "y" => return Ok(Direction::y()),
        "z" => return Ok(Direction::z()),
        _ => {}
    }
    if let Some(theta) = s.strip_prefix("xz:") {
        let theta: f64 = theta
            .parse()
            .map_err(|e| format!("bad angle `{theta}`: {e}"))?;
        if !theta.is_finite() {
            return Err(format!("angle must be finite, got {theta}"));
        }
        return Ok(Direction::in_xz_plane(theta));
    }
    let v = parse_floats(s)?;
    match v[..] {
        [x, y, z] => Direction::new(x, y, z).map_err(|e| e.to_string()),
        _ => Err(format!(
            "expected x, y, z, xz:THETA or three components, got `{s}`"
        )),
    }
}

/// Accepts `RE0,RE1` or `RE0,RE1,IM0,IM1`.
pub fn parse_spinor(s: &str) -> Result<Spinor, String> {
    let v = parse_floats(s)?;
    let spinor = match v[..] {
        [a, b] => Spinor::real(a, b),
        [a, b, c, d] => Spinor::new(qmlab::C64::new(a, c), qmlab::C64::new(b, d)),
        _ => return Err(format!("expected 2 or 4 components, got {}", v.len())),
    };
    spinor.map_err(|e| e.to_string())
}

pub fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number `{}`: {e}", t.trim()))
        })
        .collect()
}

/// `round-robin` or one of `ab`, `ab'`, `a'b`, `a'b'`.
pub fn parse_schedule(s: &str) -> Result<Schedule, String> {
    if s == "round-robin" {
        return Ok(Schedule::RoundRobin);
    }
    SettingPair::ALL
        .into_iter()
        .find(|p| p.label() == s)
        .map(Schedule::Fixed)
        .ok_or_else(|| format!("expected round-robin, ab, ab', a'b or a'b', got `{s}`"))
}

/// Scenario flags; each one overrides the config file.
#[derive(Args, Debug, Clone, Default)]
pub struct ScenarioArgs {
    #[arg(long, value_enum)]
    pub state: Option<StateKind>,
    /// Alice's spinor for product states.
    #[arg(long, value_parser = parse_spinor, allow_hyphen_values = true)]
    pub chi_a: Option<Spinor>,
    /// Bob's spinor for product states.
    #[arg(long, value_parser = parse_spinor, allow_hyphen_values = true)]
    pub chi_b: Option<Spinor>,
    /// Reset all four directions to a preset before applying --a etc.
    #[arg(long, value_enum)]
    pub angles: Option<AnglePreset>,
    #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
    pub a: Option<Direction>,
    #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
    pub a_prime: Option<Direction>,
    #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
    pub b: Option<Direction>,
    #[arg(long, value_parser = parse_direction, allow_hyphen_values = true)]
    pub b_prime: Option<Direction>,
    /// Spatial dimension on Alice's side.
    #[arg(long)]
    pub d_a: Option<usize>,
    /// Spatial dimension on Bob's side.
    #[arg(long)]
    pub d_b: Option<usize>,
    /// Expansion size for the counting backend.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
}

impl ScenarioArgs {
    pub fn apply(&self, mut s: Scenario) -> anyhow::Result<Scenario> {
        if self.angles == Some(AnglePreset::Tsirelson) {
            let t = Scenario::default();
            (s.a, s.a_prime, s.b, s.b_prime) = (t.a, t.a_prime, t.b, t.b_prime);
        }
        s.a = self.a.unwrap_or(s.a);
        s.a_prime = self.a_prime.unwrap_or(s.a_prime);
        s.b = self.b.unwrap_or(s.b);
        s.b_prime = self.b_prime.unwrap_or(s.b_prime);
        s.d_a = self.d_a.unwrap_or(s.d_a);
        s.d_b = self.d_b.unwrap_or(s.d_b);
        s.n = self.n.unwrap_or(s.n);
        if let Some(b) = self.backend {
            s.backend = b.into();
        }

        let wants_product = self.state == Some(StateKind::Product)
            || (self.state.is_none() && (self.chi_a.is_some() || self.chi_b.is_some()));
        if self.state == Some(StateKind::Singlet) {
            if self.chi_a.is_some() || self.chi_b.is_some() {
                bail!("--chi-a/--chi-b only apply to --state product");
            }
            s.state = StateSpec::Singlet;
        } else if wants_product {
            let (old_a, old_b) = match s.state {
                StateSpec::Product { chi_a, chi_b } => (Some(chi_a), Some(chi_b)),
                StateSpec::Singlet => (None, None),
            };
            let chi_a = self
                .chi_a
                .or(old_a)
                .context("field `state.product.chi_a`: a product state needs --chi-a")?;
            let chi_b = self
                .chi_b
                .or(old_b)
                .context("field `state.product.chi_b`: a product state needs --chi-b")?;
            s.state = StateSpec::Product { chi_a, chi_b };
        }
        s.validate().context("invalid scenario")?;
        Ok(s)
    }

    /// Config file (if any) with these flags applied.
    pub fn resolve(&self, config: Option<&Path>) -> anyhow::Result<Scenario> {
        let base = match config {
            Some(p) => load(p)?,
            None => Scenario::default(),
        };
        self.apply(base)
    }
}

fn default_trials() -> u64 {
    100_000
}

fn default_schedule() -> Schedule {
    Schedule::RoundRobin
}

/// Config file layout for `lambda-one run`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_schedule")]
    pub schedule: Schedule,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::default(),
            trials: default_trials(),
            seed: None,
            schedule: default_schedule(),
        }
    }
}
