//! Scenario files: TOML with expression strings for the fields, resolved
//! into a model, an initial law and run settings.
//!
//! ```toml
//! name = "half-disc"
//!
//! [params]
//! theta = "pi/4"
//!
//! [domain]
//! bbox = { lo = [-0.5, -0.5], hi = [2.5, 1.5] }
//! pieces = [
//!   { psi = "1 - (x1 - 1)^2 - x2^2", g = ["cos(theta)*(1 - x1) - sin(theta)*x2", "-sin(theta)*(1 - x1) - cos(theta)*x2"] },
//!   { psi = "x2", g = ["sin(theta)", "cos(theta)"] },
//! ]
//! corners = [{ point = [0, 0], pieces = [1, 2] }, { point = [2, 0], pieces = [1, 2] }]
//!
//! [initial]
//! point = [1, 0.5]
//!
//! [run]
//! horizon = 1.0
//! dt = 1e-3
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::conditions::{self, check_coefficients, CheckReport};
use crate::expr::{MatrixField, ParseError, ScalarField, VectorField};
use crate::geometry::{BoundingBox, DeclaredCorner, Domain, DomainPiece, GeometryError, Point};
use crate::jump::{self, JumpScenario, Kernel, SmoothRegion};
use crate::model::{Coefficients, Model};
use crate::polyhedral::{check_dw_assumption, check_minimal_representation, PolygonError, PolygonSpec};
use crate::rng::PathStream;
use crate::sim::{
    controlled_terminal, direct_terminal, localized_simulate, localized_terminal, simulate_controlled, simulate_path,
    time_change, AtomAggregation, Cover, PathRecord, Scheme, SimError, SimOptions, Stepper,
};
use crate::stats::{refinement_study, RefinementRow, StatsError};
use crate::tolerances::Tolerances;

/// Environment variable naming the tolerance preset.
pub const TOL_PROFILE_ENV: &str = "OBLIQUA_TOL_PROFILE";

const RESERVED: [&str; 13] = ["x1", "x2", "pi", "abs", "sqrt", "sin", "cos", "exp", "sign", "step", "min", "max", "e"];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Format(String),
    #[error("{field}: {source}\n  {text}\n  {caret}")]
    Expr { field: String, text: String, caret: String, source: ParseError },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Polygon(#[from] PolygonError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type Result<T, E = ScenarioError> = std::result::Result<T, E>;

/// Number literal or expression string.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Text(String),
}

impl Scalar {
    fn source(&self) -> String {
        match self {
            Scalar::Num(v) => format!("{v:?}"),
            Scalar::Text(s) => s.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, Scalar>,
    domain: Option<RawDomain>,
    polygon: Option<PolygonSpec>,
    #[serde(default)]
    coefficients: RawCoefficients,
    initial: Option<RawInitial>,
    #[serde(default)]
    run: RunConfig,
    #[serde(default)]
    tolerances: toml::Table,
    jump: Option<RawJump>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    bbox: RawBox,
    pieces: Vec<RawPiece>,
    #[serde(default)]
    corners: Vec<RawCorner>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    lo: [Scalar; 2],
    hi: [Scalar; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPiece {
    name: Option<String>,
    psi: Scalar,
    g: Option<[Scalar; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorner {
    point: [Scalar; 2],
    /// 1-based piece numbers.
    pieces: [usize; 2],
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoefficients {
    b: Option<[Scalar; 2]>,
    sigma: Option<[[Scalar; 2]; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    point: Option<[Scalar; 2]>,
    disc: Option<RawDisc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDisc {
    center: [Scalar; 2],
    radius: Scalar,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJump {
    kernel: Kernel,
    #[serde(default = "default_cutoff")]
    cutoff: f64,
    exit_region: Option<String>,
    #[serde(default = "default_exit_samples")]
    exit_samples: usize,
}

fn default_cutoff() -> f64 {
    0.5
}

fn default_exit_samples() -> usize {
    4096
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    /// Reflected Euler on the real clock; the constrained run for jump
    /// scenarios.
    #[default]
    Direct,
    /// Controlled process on the control clock, then time-changed.
    Controlled,
    /// Direct scheme restarted on a corner cover and pasted.
    Localized,
}

impl Construction {
    pub fn as_str(self) -> &'static str {
        match self {
            Construction::Direct => "direct",
            Construction::Controlled => "controlled",
            Construction::Localized => "localized",
        }
    }
}

impl std::str::FromStr for Construction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(Construction::Direct),
            "controlled" => Ok(Construction::Controlled),
            "localized" => Ok(Construction::Localized),
            _ => Err(format!("unknown construction `{s}` (expected direct, controlled or localized)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: f64,
    pub dt: f64,
    pub paths: u64,
    pub seed: u64,
    pub construction: Construction,
    pub scheme: Scheme,
    /// Control steps per grid step in the controlled construction.
    pub substeps: u32,
    pub aggregation: AtomAggregation,
    /// Corner ball radius of the localization cover.
    pub cover_radius: Option<f64>,
    /// Verdict threshold for two-sample comparisons.
    pub ks_threshold: f64,
    /// Per-path CSV files written by `simulate`.
    pub csv_paths: u64,
    /// Keep every `thin`-th CSV row.
    pub thin: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            horizon: 1.0,
            dt: 1e-3,
            paths: 1000,
            seed: 0,
            construction: Construction::Direct,
            scheme: Scheme::Bridge,
            substeps: SimOptions::default().substeps,
            aggregation: AtomAggregation::MassWeighted,
            cover_radius: None,
            ks_threshold: 0.015,
            csv_paths: 16,
            thin: 1,
        }
    }
}

/// Initial law `nu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Initial {
    Point { at: Point },
    /// Uniform over a disc contained in the closure of the domain.
    Disc { center: Point, radius: f64 },
}

#[derive(Clone, Debug)]
pub struct JumpSetup {
    pub scenario: JumpScenario,
    pub exit_region: Option<SmoothRegion>,
    pub exit_samples: usize,
}

/// A fully resolved scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    /// Hex SHA-256 of the file contents.
    pub sha256: String,
    pub profile: String,
    pub model: Model,
    pub polygon: Option<PolygonSpec>,
    pub jump: Option<JumpSetup>,
    pub initial: Initial,
    pub run: RunConfig,
}

/// Replace parameter names by their values, leaving numbers (including
/// exponents such as `1e-3`) alone.
fn substitute(text: &str, params: &BTreeMap<String, f64>) -> String {
    let b = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_digit() || c == b'.' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push_str(&text[start..i]);
        } else if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            match params.get(&text[start..i]) {
                Some(v) => out.push_str(&format!("({v:?})")),
                None => out.push_str(&text[start..i]),
            }
        } else {
            out.push(c as char);
            i += 1;
        }
    }
    out
}

struct Resolver {
    params: BTreeMap<String, f64>,
}

impl Resolver {
    fn new(raw: &BTreeMap<String, Scalar>) -> Result<Self> {
        let mut params = BTreeMap::new();
        for (name, v) in raw {
            let ident = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !ident || RESERVED.contains(&name.as_str()) {
                return Err(ScenarioError::Invalid(format!("params.{name}: not a usable parameter name")));
            }
            let empty = Resolver { params: BTreeMap::new() };
            params.insert(name.clone(), empty.number(&format!("params.{name}"), v)?);
        }
        Ok(Resolver { params })
    }

    fn field(&self, what: &str, s: &Scalar) -> Result<ScalarField> {
        let text = substitute(&s.source(), &self.params);
        ScalarField::parse(&text).map_err(|source| {
            let at = source.offset().min(text.len());
            ScenarioError::Expr { field: what.to_string(), caret: format!("{}^", " ".repeat(at)), text, source }
        })
    }

    fn number(&self, what: &str, s: &Scalar) -> Result<f64> {
        if let Scalar::Num(v) = s {
            return Ok(*v);
        }
        let f = self.field(what, s)?;
        match f.constant_value() {
            Some(v) if v.is_finite() => Ok(v),
            _ => Err(ScenarioError::Invalid(format!("{what}: `{}` is not a finite constant", s.source()))),
        }
    }

    fn point(&self, what: &str, p: &[Scalar; 2]) -> Result<Point> {
        Ok(Point::new(self.number(&format!("{what}[1]"), &p[0])?, self.number(&format!("{what}[2]"), &p[1])?))
    }

    fn vector(&self, what: &str, v: &[Scalar; 2]) -> Result<VectorField> {
        Ok(VectorField::new(self.field(&format!("{what}[1]"), &v[0])?, self.field(&format!("{what}[2]"), &v[1])?))
    }
}

/// Tolerances of the named preset with the file's overrides on top.
fn tolerances(profile: &str, overrides: &toml::Table) -> Result<Tolerances> {
    let base = Tolerances::profile(profile).ok_or_else(|| {
        ScenarioError::Invalid(format!("{TOL_PROFILE_ENV}: unknown tolerance profile `{profile}` (expected default, strict or loose)"))
    })?;
    let mut v = serde_json::to_value(base).expect("tolerances serialize");
    let obj = v.as_object_mut().expect("tolerances are a struct");
    for (k, val) in overrides {
        let val = serde_json::to_value(val).map_err(|e| ScenarioError::Format(format!("tolerances.{k}: {e}")))?;
        obj.insert(k.clone(), val);
    }
    serde_json::from_value(v).map_err(|e| ScenarioError::Format(format!("tolerances: {e}")))
}

impl Scenario {
    /// Read and resolve a scenario file. The tolerance preset comes from
    /// `OBLIQUA_TOL_PROFILE` (default `default`).
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        let profile = std::env::var(TOL_PROFILE_ENV).unwrap_or_else(|_| "default".to_string());
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::parse(&text, &stem, &profile)
    }

    /// Resolve scenario text; `fallback_name` is used when the file has
    /// no `name`.
    pub fn parse(text: &str, fallback_name: &str, profile: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioError::Format(e.to_string()))?;
        let sha256 = hex::encode(Sha256::digest(text.as_bytes()));
        let tol = tolerances(profile, &raw.tolerances)?;
        let r = Resolver::new(&raw.params)?;

        let domain = match (&raw.domain, &raw.polygon) {
            (Some(d), None) => build_domain(&r, d, tol, raw.jump.is_some())?,
            (None, Some(p)) => p.to_domain(tol)?,
            _ => return Err(ScenarioError::Invalid("exactly one of [domain] and [polygon] is required".into())),
        };
        let b = match &raw.coefficients.b {
            Some(b) => r.vector("coefficients.b", b)?,
            None => VectorField::constant(Point::zeros()),
        };
        let sigma = match &raw.coefficients.sigma {
            Some(s) => {
                let f = |i: usize, j: usize| r.field(&format!("coefficients.sigma[{}][{}]", i + 1, j + 1), &s[i][j]);
                MatrixField::new([[f(0, 0)?, f(0, 1)?], [f(1, 0)?, f(1, 1)?]])
            }
            None => MatrixField::identity(),
        };
        let coeffs = Coefficients::new(b, sigma);

        let initial = match raw.initial {
            Some(RawInitial { point: Some(p), disc: None }) => Initial::Point { at: r.point("initial.point", &p)? },
            Some(RawInitial { point: None, disc: Some(d) }) => Initial::Disc {
                center: r.point("initial.disc.center", &d.center)?,
                radius: r.number("initial.disc.radius", &d.radius)?,
            },
            _ => return Err(ScenarioError::Invalid("[initial] needs exactly one of `point` and `disc`".into())),
        };
        validate_initial(&domain, initial)?;
        raw.run.validate()?;

        let jump = match raw.jump {
            None => None,
            Some(j) => {
                let scenario = JumpScenario::new(domain.clone(), coeffs.clone(), j.kernel, j.cutoff)?;
                let exit_region = match &j.exit_region {
                    Some(s) => Some(SmoothRegion { phi: r.field("jump.exit_region", &Scalar::Text(s.clone()))? }),
                    None => None,
                };
                Some(JumpSetup { scenario, exit_region, exit_samples: j.exit_samples.max(1) })
            }
        };

        Ok(Scenario {
            name: raw.name.unwrap_or_else(|| fallback_name.to_string()),
            sha256,
            profile: profile.to_string(),
            model: Model::new(domain, coeffs),
            polygon: raw.polygon,
            jump,
            initial,
            run: raw.run,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.model.domain
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.model.domain.tol
    }

    /// Every condition check that applies, sorted as [`conditions::run_all`]
    /// sorts. Polygons add the Dai-Williams checks; jump scenarios check
    /// the domain, the coefficients and the exit set instead of the
    /// reflection directions.
    pub fn checks(&self) -> Result<Vec<CheckReport>> {
        let d = self.domain();
        let mut out = match &self.jump {
            None => conditions::run_all(d, &self.model.coeffs),
            Some(j) => {
                let mut v = vec![conditions::check_minimality(d), conditions::check_corners_declared(d)];
                v.extend(check_coefficients(d, &self.model.coeffs));
                if let Some(u) = &j.exit_region {
                    v.push(jump::check_exit_compatibility(&j.scenario, u, j.exit_samples));
                }
                v
            }
        };
        if let Some(p) = &self.polygon {
            out.push(check_minimal_representation(p, &d.tol)?.report);
            out.push(check_dw_assumption(p, &d.tol)?);
        }
        out.sort_by_key(|r| r.sort_key());
        Ok(out)
    }

    /// Seeds, tolerances and the file hash, for embedding in outputs.
    pub fn provenance(&self, seeds: &[u64]) -> Provenance {
        Provenance {
            scenario: self.name.clone(),
            scenario_sha256: self.sha256.clone(),
            tolerance_profile: self.profile.clone(),
            tolerances: *self.tolerances(),
            seeds: seeds.to_vec(),
            run: self.run.clone(),
        }
    }

    /// `X(0)` of path `path_id`: the point mass, or a uniform disc sample
    /// from slots 2 and 3 of block 0 of the path's stream.
    pub fn initial_state(&self, seed: u64, path_id: u64) -> Point {
        match self.initial {
            Initial::Point { at } => at,
            Initial::Disc { center, radius } => {
                let d = PathStream::new(seed, path_id, 0).step(0);
                let r = radius * d.uniform(2).sqrt();
                let a = std::f64::consts::TAU * d.uniform(3);
                center + r * Point::new(a.cos(), a.sin())
            }
        }
    }

    /// Simulation handle for this scenario's run settings.
    pub fn engine(&self) -> Engine<'_> {
        let opts = SimOptions { scheme: self.run.scheme, substeps: self.run.substeps, ..SimOptions::default() };
        Engine { sc: self, st: Stepper::new(&self.model, opts) }
    }
}

fn build_domain(r: &Resolver, d: &RawDomain, tol: Tolerances, jump: bool) -> Result<Domain> {
    let mut pieces = Vec::with_capacity(d.pieces.len());
    for (i, p) in d.pieces.iter().enumerate() {
        let what = format!("domain.pieces[{}]", i + 1);
        let psi = r.field(&format!("{what}.psi"), &p.psi)?;
        let g = match &p.g {
            Some(g) => r.vector(&format!("{what}.g"), g)?,
            None if jump => VectorField::constant(Point::zeros()),
            None => return Err(ScenarioError::Invalid(format!("{what}: reflection direction `g` is required"))),
        };
        let name = p.name.clone().unwrap_or_else(|| p.psi.source());
        pieces.push(DomainPiece::new(name, psi, g));
    }
    let mut corners = Vec::with_capacity(d.corners.len());
    for (k, c) in d.corners.iter().enumerate() {
        let what = format!("domain.corners[{}]", k + 1);
        let [i, j] = c.pieces;
        if i == j || i == 0 || j == 0 || i > pieces.len() || j > pieces.len() {
            return Err(ScenarioError::Invalid(format!("{what}.pieces: need two distinct piece numbers in 1..={}", pieces.len())));
        }
        corners.push(DeclaredCorner { point: r.point(&format!("{what}.point"), &c.point)?, pair: (i - 1, j - 1) });
    }
    let bbox = BoundingBox::new(r.point("domain.bbox.lo", &d.bbox.lo)?, r.point("domain.bbox.hi", &d.bbox.hi)?);
    Ok(Domain::new(pieces, corners, bbox, tol)?)
}

fn validate_initial(domain: &Domain, nu: Initial) -> Result<()> {
    let slack = domain.tol.state_slack;
    let outside = |p: Point| ScenarioError::Invalid(format!("initial law charges ({}, {}), outside the closure of the domain", p.x, p.y));
    match nu {
        Initial::Point { at } => {
            if !domain.in_closure(at, slack) {
                return Err(outside(at));
            }
        }
        Initial::Disc { center, radius } => {
            if !(radius >= 0.0 && radius.is_finite()) {
                return Err(ScenarioError::Invalid(format!("initial.disc.radius must be nonnegative, got {radius}")));
            }
            // the rim on a fine circle plus the centre
            for k in 0..=512 {
                let p = if k == 512 {
                    center
                } else {
                    let a = std::f64::consts::TAU * k as f64 / 512.0;
                    center + radius * Point::new(a.cos(), a.sin())
                };
                if !domain.in_closure(p, slack) {
                    return Err(outside(p));
                }
            }
        }
    }
    Ok(())
}

/// A polygon for the Dai-Williams tools: either a scenario with a
/// `[polygon]` table or a file holding `normals`, `offsets` and
/// `directions` at top level. `[tolerances]` overrides apply in both.
#[derive(Clone, Debug)]
pub struct PolygonFile {
    pub name: String,
    pub sha256: String,
    pub profile: String,
    pub polygon: PolygonSpec,
    pub tolerances: Tolerances,
}

impl PolygonFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        let profile = std::env::var(TOL_PROFILE_ENV).unwrap_or_else(|_| "default".to_string());
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Self::parse(&text, &stem, &profile)
    }

    pub fn parse(text: &str, fallback_name: &str, profile: &str) -> Result<Self> {
        let mut t: toml::Table = toml::from_str(text).map_err(|e| ScenarioError::Format(e.to_string()))?;
        let overrides = match t.remove("tolerances") {
            Some(toml::Value::Table(o)) => o,
            Some(_) => return Err(ScenarioError::Format("tolerances must be a table".into())),
            None => toml::Table::new(),
        };
        let name = match t.remove("name") {
            Some(toml::Value::String(s)) => s,
            _ => fallback_name.to_string(),
        };
        let body = match t.remove("polygon") {
            Some(p) => p,
            None => toml::Value::Table(t),
        };
        let polygon: PolygonSpec = body.try_into().map_err(|e: toml::de::Error| ScenarioError::Format(format!("polygon: {e}")))?;
        Ok(PolygonFile {
            name,
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
            profile: profile.to_string(),
            polygon,
            tolerances: tolerances(profile, &overrides)?,
        })
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let run = self;
        let bad = |m: String| Err(ScenarioError::Invalid(format!("run.{m}")));
        if !(run.dt > 0.0 && run.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", run.dt));
        }
        if !(run.horizon >= 0.0 && run.horizon.is_finite()) {
            return bad(format!("horizon must be nonnegative, got {}", run.horizon));
        }
        if run.substeps == 0 {
            return bad("substeps must be at least 1".into());
        }
        if !(run.ks_threshold > 0.0 && run.ks_threshold <= 1.0) {
            return bad(format!("ks_threshold must lie in (0, 1], got {}", run.ks_threshold));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub scenario: String,
    pub scenario_sha256: String,
    pub tolerance_profile: String,
    pub tolerances: Tolerances,
    pub seeds: Vec<u64>,
    pub run: RunConfig,
}

/// A simulator error tagged with the path it came from.
#[derive(Debug, Error)]
#[error("path {path_id}: {source}")]
pub struct PathFailure {
    pub path_id: u64,
    #[source]
    pub source: SimError,
}

/// Terminal value of one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Terminal {
    pub path_id: u64,
    pub x: Point,
    pub lambda: f64,
}

/// Scalar summaries of a terminal value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// Both coordinates; comparisons take the larger KS distance.
    #[default]
    TerminalX,
    X1,
    X2,
    Lambda,
}

impl Functional {
    /// The scalar samples this functional compares.
    pub fn components(self, t: &Terminal) -> Vec<f64> {
        match self {
            Functional::TerminalX => vec![t.x.x, t.x.y],
            Functional::X1 => vec![t.x.x],
            Functional::X2 => vec![t.x.y],
            Functional::Lambda => vec![t.lambda],
        }
    }
}

impl std::str::FromStr for Functional {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "terminal_x" => Ok(Functional::TerminalX),
            "x1" | "terminal_x1" => Ok(Functional::X1),
            "x2" | "terminal_x2" => Ok(Functional::X2),
            "lambda" | "terminal_lambda" => Ok(Functional::Lambda),
            _ => Err(format!("unknown functional `{s}` (expected terminal_x, x1, x2 or lambda)")),
        }
    }
}

/// Runs paths of one scenario.
pub struct Engine<'a> {
    sc: &'a Scenario,
    st: Stepper<'a>,
}

impl<'a> Engine<'a> {
    fn horizon(&self) -> f64 {
        self.sc.run.horizon
    }

    fn cover(&self) -> Result<Cover, SimError> {
        let d = self.sc.domain();
        let r0 = match self.sc.run.cover_radius {
            Some(r) => r,
            None => {
                let mut r: f64 = 0.3;
                for (h, a) in d.corners.iter().enumerate() {
                    for b in &d.corners[h + 1..] {
                        r = r.min(0.5 * (a.point - b.point).norm());
                    }
                }
                r
            }
        };
        Cover::for_domain(d, r0)
    }

    fn ds(&self, dt: f64) -> f64 {
        dt / f64::from(self.sc.run.substeps)
    }

    /// Control horizon long enough for the interior clock to reach the
    /// horizon, doubling from twice the horizon.
    fn time_changed<F>(&self, dt: f64, mut run: F) -> Result<PathRecord, SimError>
    where
        F: FnMut(f64) -> Result<crate::sim::ControlledPathRecord, SimError>,
    {
        let h = self.horizon();
        let mut s = (2.0 * h).max(dt);
        loop {
            let cp = run(s)?;
            match time_change(&cp, dt, h, self.sc.run.aggregation) {
                Err(SimError::ClockStalled { .. }) if s < 64.0 * h.max(dt) => s *= 2.0,
                other => return other,
            }
        }
    }

    /// Full record of path `path_id` on the grid of step `dt`.
    pub fn record(&self, c: Construction, seed: u64, path_id: u64, dt: f64) -> Result<PathRecord, PathFailure> {
        self.record_inner(c, seed, path_id, dt).map_err(|source| PathFailure { path_id, source })
    }

    fn record_inner(&self, c: Construction, seed: u64, id: u64, dt: f64) -> Result<PathRecord, SimError> {
        let x0 = self.sc.initial_state(seed, id);
        let h = self.horizon();
        if let Some(j) = &self.sc.jump {
            let js = &j.scenario;
            return match c {
                Construction::Direct => jump::simulate_jump_constrained(js, x0, seed, id, h, dt),
                Construction::Controlled => {
                    let ds = self.ds(dt);
                    self.time_changed(dt, |s| jump::simulate_jump_controlled(js, x0, seed, id, s, ds))
                }
                Construction::Localized => Err(no_localized_jumps()),
            };
        }
        match c {
            Construction::Direct => simulate_path(&self.st, x0, seed, id, h, dt),
            Construction::Controlled => {
                let ds = self.ds(dt);
                self.time_changed(dt, |s| simulate_controlled(&self.st, x0, seed, id, s, ds))
            }
            Construction::Localized => Ok(localized_simulate(&self.st, &self.cover()?, x0, seed, id, h, dt)?.record),
        }
    }

    /// Terminal state and local time of path `path_id`, without keeping
    /// the record where the construction allows it.
    pub fn terminal(&self, c: Construction, seed: u64, path_id: u64, dt: f64) -> Result<Terminal, PathFailure> {
        self.terminal_inner(c, seed, path_id, dt, None)
            .map(|(x, lambda)| Terminal { path_id, x, lambda })
            .map_err(|source| PathFailure { path_id, source })
    }

    fn terminal_inner(&self, c: Construction, seed: u64, id: u64, dt: f64, cover: Option<&Cover>) -> Result<(Point, f64), SimError> {
        let x0 = self.sc.initial_state(seed, id);
        let h = self.horizon();
        if self.sc.jump.is_some() {
            let r = self.record_inner(c, seed, id, dt)?;
            return Ok((r.terminal(), *r.lambda.last().expect("record has a start")));
        }
        match c {
            Construction::Direct => direct_terminal(&self.st, x0, seed, id, h, dt),
            Construction::Controlled => {
                // the time-changed record ends at the last grid time
                let t = crate::sim::step_count(h, dt)? as f64 * dt;
                controlled_terminal(&self.st, x0, seed, id, t, self.ds(dt))
            }
            Construction::Localized => match cover {
                Some(cv) => localized_terminal(&self.st, cv, x0, seed, id, h, dt),
                None => localized_terminal(&self.st, &self.cover()?, x0, seed, id, h, dt),
            },
        }
    }

    /// Terminal values of paths `0..n_paths` in path order. Paths run in
    /// parallel on the current rayon pool; the reported failure is the one
    /// with the smallest path id.
    pub fn terminals(&self, c: Construction, seed: u64, n_paths: u64, dt: f64) -> Result<Vec<Terminal>, PathFailure> {
        let cover = match c {
            Construction::Localized if self.sc.jump.is_none() => {
                Some(self.cover().map_err(|source| PathFailure { path_id: 0, source })?)
            }
            _ => None,
        };
        let out: Vec<Result<Terminal, PathFailure>> = (0..n_paths)
            .into_par_iter()
            .map(|id| {
                self.terminal_inner(c, seed, id, dt, cover.as_ref())
                    .map(|(x, lambda)| Terminal { path_id: id, x, lambda })
                    .map_err(|source| PathFailure { path_id: id, source })
            })
            .collect();
        out.into_iter().collect()
    }

    /// Mean of `f` at the terminal time for each step size in `dts`.
    pub fn refinement<F>(&self, c: Construction, dts: &[f64], n_paths: u64, seed: u64, f: F) -> Result<Vec<RefinementRow>, RefineError>
    where
        F: Fn(&Terminal) -> f64 + Sync,
    {
        refinement_study(dts, n_paths, seed, |dt, id| Ok(f(&self.terminal(c, seed, id, dt)?)))
    }
}

fn no_localized_jumps() -> SimError {
    SimError::InvalidRun("the localized construction is not available for jump scenarios".into())
}

#[derive(Debug, Error)]
pub enum RefineError {
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Path(#[from] PathFailure),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::{overall, Status};

    const HALF_DISC: &str = r#"
name = "half-disc"

[params]
theta = "pi/4"

[domain]
bbox = { lo = [-0.5, -0.5], hi = [2.5, 1.5] }
pieces = [
  { psi = "1 - (x1 - 1)^2 - x2^2", g = ["cos(theta)*(1 - x1) - sin(theta)*x2", "-sin(theta)*(1 - x1) - cos(theta)*x2"] },
  { psi = "x2", g = ["sin(theta)", "cos(theta)"] },
]
corners = [{ point = [0, 0], pieces = [1, 2] }, { point = [2, 0], pieces = [1, 2] }]

[initial]
point = [1, 0.5]

[run]
horizon = 0.2
dt = 1e-3
paths = 50
"#;

    fn half_disc(theta: &str) -> Scenario {
        Scenario::parse(&HALF_DISC.replace("pi/4", theta), "x", "default").unwrap()
    }

    #[test]
    fn substitution_skips_numbers_and_other_names() {
        let p: BTreeMap<String, f64> = [("e1".to_string(), 2.0), ("a".to_string(), 0.5)].into();
        assert_eq!(substitute("1e-3*a + e1 - x1 + a2", &p), "1e-3*(0.5) + (2.0) - x1 + a2");
        assert_eq!(substitute("2.5E+2a", &p), "2.5E+2(0.5)");
    }

    #[test]
    fn half_disc_checks_follow_the_angle() {
        assert_eq!(overall(&half_disc("pi/4").checks().unwrap()), Status::Pass);
        let r = half_disc("pi/2").checks().unwrap();
        assert_eq!(overall(&r), Status::Fail);
        assert!(r.iter().any(|r| r.condition_id == crate::conditions::ConditionId::Gi && r.status == Status::Fail));
    }

    #[test]
    fn malformed_expression_reports_field_and_offset() {
        let e = Scenario::parse(&HALF_DISC.replace("psi = \"x2\"", "psi = \"x2 +\""), "x", "default").unwrap_err();
        let msg = e.to_string();
        assert!(matches!(e, ScenarioError::Expr { .. }), "{msg}");
        assert!(msg.starts_with("domain.pieces[2].psi"), "{msg}");
        assert!(msg.ends_with("    ^"), "{msg}");
    }

    #[test]
    fn config_errors() {
        let bad = |from: &str, to: &str| Scenario::parse(&HALF_DISC.replace(from, to), "x", "default").unwrap_err();
        assert!(matches!(bad("point = [1, 0.5]", "point = [1, -0.5]"), ScenarioError::Invalid(_)));
        assert!(matches!(bad("paths = 50", "pathz = 50"), ScenarioError::Format(_)));
        assert!(matches!(bad("theta = \"pi/4\"", "x1 = 1"), ScenarioError::Invalid(_)));
        assert!(matches!(bad("pieces = [1, 2] }, {", "pieces = [1, 1] }, {"), ScenarioError::Invalid(_)));
        assert!(matches!(bad("point = [1, 0.5]", "disc = { center = [1, 0.5], radius = 0.6 }"), ScenarioError::Invalid(_)));
        let e = Scenario::parse(HALF_DISC, "x", "sloppy").unwrap_err();
        assert!(e.to_string().contains(TOL_PROFILE_ENV));
    }

    #[test]
    fn tolerance_overrides_sit_on_the_profile() {
        let s = Scenario::parse(&format!("{HALF_DISC}\n[tolerances]\nangle_tol = 1e-6\n"), "x", "strict").unwrap();
        assert_eq!(s.tolerances().angle_tol, 1e-6);
        assert_eq!(s.tolerances().corner_tol, Tolerances::profile("strict").unwrap().corner_tol);
        let e = Scenario::parse(&format!("{HALF_DISC}\n[tolerances]\nangle = 1e-6\n"), "x", "default").unwrap_err();
        assert!(matches!(e, ScenarioError::Format(_)));
    }

    #[test]
    fn disc_initial_law_stays_inside() {
        let s = Scenario::parse(&HALF_DISC.replace("point = [1, 0.5]", "disc = { center = [1, 0.4], radius = 0.3 }"), "x", "default").unwrap();
        for id in 0..200 {
            let x = s.initial_state(3, id);
            assert!((x - Point::new(1.0, 0.4)).norm() <= 0.3);
        }
        assert_ne!(s.initial_state(3, 0), s.initial_state(3, 1));
        assert_eq!(s.initial_state(3, 7), s.initial_state(3, 7));
    }

    #[test]
    fn terminals_match_records_for_every_construction() {
        let s = half_disc("pi/4");
        let e = s.engine();
        for c in [Construction::Direct, Construction::Controlled, Construction::Localized] {
            let ts = e.terminals(c, 5, 6, s.run.dt).unwrap();
            for t in &ts {
                let r = e.record(c, 5, t.path_id, s.run.dt).unwrap();
                assert_eq!(r.len(), 201);
                assert!((r.terminal() - t.x).norm() < 1e-12, "{c:?} {} {:?} {:?}", t.path_id, r.terminal(), t.x);
                assert!((r.lambda.last().unwrap() - t.lambda).abs() < 1e-9, "{c:?}");
            }
        }
    }

    #[test]
    fn jump_scenario_runs_both_constructions() {
        let text = r#"
[domain]
bbox = { lo = [-2, -2], hi = [2, 2] }
pieces = [{ psi = "1 - x1^2 - x2^2" }]

[coefficients]
b = [1, 0]

[initial]
point = [0, 0]

[run]
horizon = 3.0
dt = 0.01

[jump]
kernel = { kind = "disc", center = [0, 0], radius = 0.5 }
exit_region = "0.25 - (x1 - 0.2)^2 - x2^2"
"#;
        let s = Scenario::parse(text, "jump", "default").unwrap();
        assert_eq!(overall(&s.checks().unwrap()), Status::Pass);
        let e = s.engine();
        let a = e.record(Construction::Direct, 1, 0, 0.01).unwrap();
        let b = e.record(Construction::Controlled, 1, 0, 0.01).unwrap();
        assert_eq!(a.len(), b.len());
        assert!(a.to_csv().lines().next().unwrap().ends_with(",kind"));
        assert!(matches!(e.record(Construction::Localized, 1, 0, 0.01), Err(PathFailure { path_id: 0, .. })));
    }

    #[test]
    fn polygon_scenario_adds_dw_reports() {
        let text = r#"
[polygon]
normals = [[1, 0], [0, 1], [-1, 0], [0, -1]]
offsets = [0, 0, -1, -1]
directions = [[1, 0], [0, 1], [-1, 0], [0, -1]]

[initial]
point = [0.5, 0.5]
"#;
        let s = Scenario::parse(text, "square", "default").unwrap();
        let r = s.checks().unwrap();
        assert_eq!(overall(&r), Status::Pass);
        assert!(r.iter().any(|r| r.condition_id == crate::conditions::ConditionId::Dw));
    }
}
