//! Run configuration and its text format.
//!
//! The format is a flat key-value document with bracketed sections:
//!
//! ```text
//! # comment
//! [run]
//! mode = simulate            # simulate | gain | verify
//! T = 20000
//! replications = 100
//! seed = 7
//! policies = [wts, ts_unknown, oracle]
//! mc_samples = 1024
//! thin = 10
//! out = "trace.csv"
//! workers = 8
//!
//! [instance]
//! means = [[2, 0], [1, 0]]
//! variances = [1, 1]
//!
//! [gain]
//! g_coeffs = [0.5, 0.5]
//! h_coeffs = [1]
//! K = 16
//!
//! [verify]
//! variance_misspec = 1.0
//! scale = 1.0
//! ```
//!
//! Values are numbers, quoted strings, bare words, or bracketed lists of
//! values. A list may continue over several lines until its brackets close.
//! Unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;
use wib_core::posterior::DEFAULT_MC_SAMPLES;
use wib_core::{BanditInstance, GainProblem, PolicyKind, Vec2};

use crate::error::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Gain,
    Verify,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "gain" => Ok(Mode::Gain),
            "verify" => Ok(Mode::Verify),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::Gain => "gain",
            Mode::Verify => "verify",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceSpec {
    pub means: Vec<Vec2>,
    pub variances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainSpec {
    pub g_coeffs: Vec<f64>,
    pub h_coeffs: Vec<f64>,
    #[serde(rename = "K")]
    pub arms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySettings {
    /// Multiplies the true variance when generating data for the χ² check,
    /// while the check still assumes the nominal variance. `1.0` is honest.
    pub variance_misspec: f64,
    /// Multiplies every Monte-Carlo sample size in the suite.
    pub scale: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            variance_misspec: 1.0,
            scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub instance: Option<InstanceSpec>,
    pub gain: Option<GainSpec>,
    pub policies: Vec<PolicyKind>,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub replications: u64,
    pub base_seed: u64,
    pub mc_samples: usize,
    pub thin: u64,
    pub out: PathBuf,
    pub workers: usize,
    pub verify: VerifySettings,
}

/// The instance used when a simulate config has no `[instance]` section.
///
/// A representative five-arm problem with heterogeneous gap-to-noise ratios
/// `Δ_k/σ_k` of 1, 1.5, 2 and 3 on the suboptimal arms. It is an illustrative
/// choice, not a reproduction of any published instance.
pub fn default_instance() -> InstanceSpec {
    let polar = [(4.0, 0.0), (3.5, 1.0), (3.0, 2.0), (2.5, 3.0), (2.0, 4.0)];
    InstanceSpec {
        means: polar
            .iter()
            .map(|(r, a): &(f64, f64)| [r * a.cos(), r * a.sin()])
            .collect(),
        variances: vec![1.0, 0.25, 4.0 / 9.0, 0.5625, 4.0 / 9.0],
    }
}

pub const DEFAULT_HORIZON: u64 = 10_000;
pub const DEFAULT_OUT: &str = "trace.csv";

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            instance: (mode == Mode::Simulate).then(default_instance),
            gain: None,
            policies: vec![PolicyKind::Wts],
            horizon: DEFAULT_HORIZON,
            replications: 1,
            base_seed: 0,
            mc_samples: DEFAULT_MC_SAMPLES,
            thin: 1,
            out: PathBuf::from(DEFAULT_OUT),
            workers: 1,
            verify: VerifySettings::default(),
        }
    }

    /// Checks ranges and builds the instance (or gain problem) once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, msg: String| ConfigError::Validation {
            field: field.into(),
            message: msg,
        };
        if self.horizon < 4 {
            return Err(bad(
                "run.T",
                format!("T ≥ 4 required, got {}", self.horizon),
            ));
        }
        if self.replications < 1 {
            return Err(bad(
                "run.replications",
                "at least one replication required".into(),
            ));
        }
        if self.thin < 1 {
            return Err(bad("run.thin", "thin ≥ 1 required".into()));
        }
        if self.mc_samples < 1 {
            return Err(bad("run.mc_samples", "mc_samples ≥ 1 required".into()));
        }
        if self.workers < 1 {
            return Err(bad("run.workers", "workers ≥ 1 required".into()));
        }
        if self.policies.is_empty() && self.mode != Mode::Verify {
            return Err(bad("run.policies", "at least one policy required".into()));
        }
        let misspec = self.verify.variance_misspec;
        if !(misspec.is_finite() && misspec > 0.0) {
            return Err(bad(
                "verify.variance_misspec",
                format!("must be positive, got {misspec}"),
            ));
        }
        let scale = self.verify.scale;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(bad(
                "verify.scale",
                format!("must be positive, got {scale}"),
            ));
        }
        match self.mode {
            Mode::Simulate => {
                self.bandit_instance()?;
            }
            Mode::Gain => {
                self.gain_problem()?;
            }
            Mode::Verify => {}
        }
        Ok(())
    }

    pub fn bandit_instance(&self) -> Result<BanditInstance, ConfigError> {
        let fallback;
        let spec = match &self.instance {
            Some(spec) => spec,
            None => {
                fallback = default_instance();
                &fallback
            }
        };
        BanditInstance::new(spec.means.clone(), spec.variances.clone()).map_err(|e| {
            ConfigError::Validation {
                field: "instance".into(),
                message: e.to_string(),
            }
        })
    }

    pub fn gain_problem(&self) -> Result<GainProblem, ConfigError> {
        let spec = self.gain.as_ref().ok_or_else(|| ConfigError::Validation {
            field: "gain".into(),
            message: "gain mode needs a [gain] section".into(),
        })?;
        GainProblem::from_fir(&spec.g_coeffs, &spec.h_coeffs, spec.arms).map_err(|e| {
            ConfigError::Validation {
                field: "gain".into(),
                message: e.to_string(),
            }
        })
    }
}

/// A parsed value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
    List(Vec<Value>),
}

struct Entry {
    value: Value,
    line: usize,
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let doc = parse_document(text)?;
    build(doc, None)
}

/// Like [`parse_config`], with the mode fixed by the caller; a conflicting
/// `mode` key is rejected.
pub fn parse_config_for(text: &str, mode: Mode) -> Result<RunConfig, ConfigError> {
    let doc = parse_document(text)?;
    build(doc, Some(mode))
}

type Document = BTreeMap<(String, String), Entry>;

fn parse_document(text: &str) -> Result<Document, ConfigError> {
    let mut doc = Document::new();
    let mut section = String::new();
    let mut lines = text.lines().enumerate();
    while let Some((idx, raw)) = lines.next() {
        let line_no = idx + 1;
        let mut line = strip_comment(raw).trim().to_string();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') && !line.contains('=') {
            let name = line
                .strip_prefix('[')
                .and_then(|l| l.strip_suffix(']'))
                .ok_or_else(|| parse_err(line_no, "malformed section header"))?
                .trim();
            if !is_word(name) {
                return Err(parse_err(line_no, format!("bad section name `{name}`")));
            }
            section = name.to_string();
            continue;
        }
        // join continuation lines until brackets balance
        while bracket_depth(&line) > 0 {
            match lines.next() {
                Some((_, more)) => {
                    line.push(' ');
                    line.push_str(strip_comment(more).trim());
                }
                None => return Err(parse_err(line_no, "unclosed `[`")),
            }
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, "expected `key = value`"))?;
        let key = key.trim();
        if !is_word(key) {
            return Err(parse_err(line_no, format!("bad key `{key}`")));
        }
        if section.is_empty() {
            return Err(parse_err(
                line_no,
                format!("key `{key}` outside any section"),
            ));
        }
        let value = ValueParser::new(value.trim(), line_no).parse_all()?;
        let slot = (section.clone(), key.to_string());
        if doc.contains_key(&slot) {
            return Err(parse_err(line_no, format!("duplicate key `{key}`")));
        }
        doc.insert(
            slot,
            Entry {
                value,
                line: line_no,
            },
        );
    }
    Ok(doc)
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse {
        line,
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

fn bracket_depth(s: &str) -> i64 {
    let mut depth = 0;
    let mut in_str = false;
    for c in s.chars() {
        match c {
            '"' => in_str = !in_str,
            '[' if !in_str => depth += 1,
            ']' if !in_str => depth -= 1,
            _ => {}
        }
    }
    depth
}

fn is_word(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

struct ValueParser<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> ValueParser<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Self { src, pos: 0, line }
    }

    fn parse_all(mut self) -> Result<Value, ConfigError> {
        let v = self.value()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(parse_err(
                self.line,
                format!("unexpected trailing `{}`", &self.src[self.pos..]),
            ));
        }
        Ok(v)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn value(&mut self) -> Result<Value, ConfigError> {
        self.skip_ws();
        match self.peek() {
            None => Err(parse_err(self.line, "missing value")),
            Some('[') => self.list(),
            Some('"') => self.string(),
            Some(_) => self.atom(),
        }
    }

    fn list(&mut self) -> Result<Value, ConfigError> {
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(']') {
                self.pos += 1;
                return Ok(Value::List(items));
            }
            items.push(self.value()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(']') => {}
                _ => return Err(parse_err(self.line, "expected `,` or `]` in list")),
            }
        }
    }

    fn string(&mut self) -> Result<Value, ConfigError> {
        let rest = &self.src[self.pos + 1..];
        let end = rest
            .find('"')
            .ok_or_else(|| parse_err(self.line, "unterminated string"))?;
        self.pos += end + 2;
        Ok(Value::Text(rest[..end].to_string()))
    }

    fn atom(&mut self) -> Result<Value, ConfigError> {
        let rest = &self.src[self.pos..];
        let len = rest
            .find(|c: char| c == ',' || c == ']' || c == '[' || c.is_whitespace())
            .unwrap_or(rest.len());
        let tok = &rest[..len];
        self.pos += len;
        if tok.is_empty() {
            return Err(parse_err(self.line, "empty value"));
        }
        let first = tok.chars().next().unwrap_or(' ');
        if first.is_ascii_digit() || first == '-' || first == '+' || first == '.' {
            tok.parse::<f64>()
                .map(Value::Number)
                .map_err(|_| parse_err(self.line, format!("bad number `{tok}`")))
        } else {
            Ok(Value::Text(tok.to_string()))
        }
    }
}

fn build(doc: Document, forced: Option<Mode>) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::new(forced.unwrap_or(Mode::Simulate));
    cfg.instance = None;
    let mut means = None;
    let mut variances = None;
    let mut g_coeffs = None;
    let mut h_coeffs = None;
    let mut arms = None;
    let mut explicit_mode = None;
    for ((section, key), entry) in &doc {
        let field = || format!("{section}.{key}");
        let v = Field {
            name: field(),
            entry,
        };
        match (section.as_str(), key.as_str()) {
            ("run", "mode") => explicit_mode = Some(v.parse::<Mode>()?),
            ("run", "T") => cfg.horizon = v.count()?,
            ("run", "replications") => cfg.replications = v.count()?,
            ("run", "seed") => cfg.base_seed = v.count()?,
            ("run", "mc_samples") => cfg.mc_samples = v.count()? as usize,
            ("run", "thin") => cfg.thin = v.count()?,
            ("run", "workers") => cfg.workers = v.count()? as usize,
            ("run", "out") => cfg.out = PathBuf::from(v.text()?),
            ("run", "policies") => {
                cfg.policies = v
                    .list()?
                    .iter()
                    .map(|item| match item {
                        Value::Text(s) => s.parse::<PolicyKind>().map_err(|m| v.invalid(m)),
                        _ => Err(v.invalid("policy names must be words".into())),
                    })
                    .collect::<Result<_, _>>()?;
            }
            ("instance", "means") => {
                means = Some(
                    v.list()?
                        .iter()
                        .map(|item| match v.numbers_of(item)?.as_slice() {
                            [x, y] => Ok([*x, *y]),
                            _ => Err(v.invalid("each mean must be [x, y]".into())),
                        })
                        .collect::<Result<Vec<Vec2>, _>>()?,
                )
            }
            ("instance", "variances") => variances = Some(v.numbers()?),
            ("gain", "g_coeffs") => g_coeffs = Some(v.numbers()?),
            ("gain", "h_coeffs") => h_coeffs = Some(v.numbers()?),
            ("gain", "K") => arms = Some(v.count()? as usize),
            ("verify", "variance_misspec") => cfg.verify.variance_misspec = v.number()?,
            ("verify", "scale") => cfg.verify.scale = v.number()?,
            ("run" | "instance" | "gain" | "verify", _) => {
                return Err(ConfigError::Validation {
                    field: field(),
                    message: format!("unknown key `{key}` (line {})", entry.line),
                })
            }
            _ => {
                return Err(ConfigError::Validation {
                    field: section.clone(),
                    message: format!("unknown section `[{section}]` (line {})", entry.line),
                })
            }
        }
    }
    match (forced, explicit_mode) {
        (Some(f), Some(m)) if f != m => {
            return Err(ConfigError::Validation {
                field: "run.mode".into(),
                message: format!("config says `{m}` but `{f}` was requested"),
            })
        }
        (None, Some(m)) => cfg.mode = m,
        _ => {}
    }
    match (means, variances) {
        (Some(means), Some(variances)) => cfg.instance = Some(InstanceSpec { means, variances }),
        (None, None) if cfg.mode == Mode::Simulate => cfg.instance = Some(default_instance()),
        (None, None) => {}
        (Some(_), None) => return Err(missing("instance.variances")),
        (None, Some(_)) => return Err(missing("instance.means")),
    }
    match (g_coeffs, h_coeffs, arms) {
        (Some(g_coeffs), Some(h_coeffs), Some(arms)) => {
            cfg.gain = Some(GainSpec {
                g_coeffs,
                h_coeffs,
                arms,
            })
        }
        (None, None, None) => {}
        (g, h, _) => {
            let name = if g.is_none() {
                "gain.g_coeffs"
            } else if h.is_none() {
                "gain.h_coeffs"
            } else {
                "gain.K"
            };
            return Err(missing(name));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn missing(field: &str) -> ConfigError {
    ConfigError::Validation {
        field: field.into(),
        message: "required key missing".into(),
    }
}

struct Field<'a> {
    name: String,
    entry: &'a Entry,
}

impl Field<'_> {
    fn invalid(&self, message: String) -> ConfigError {
        ConfigError::Validation {
            field: self.name.clone(),
            message: format!("{message} (line {})", self.entry.line),
        }
    }

    fn number(&self) -> Result<f64, ConfigError> {
        match self.entry.value {
            Value::Number(x) => Ok(x),
            _ => Err(self.invalid("expected a number".into())),
        }
    }

    /// A nonnegative integer; `2e4` is accepted.
    fn count(&self) -> Result<u64, ConfigError> {
        let x = self.number()?;
        if x < 0.0 || x.fract() != 0.0 || x > u64::MAX as f64 {
            return Err(self.invalid(format!("expected a nonnegative integer, got {x}")));
        }
        Ok(x as u64)
    }

    fn text(&self) -> Result<&str, ConfigError> {
        match &self.entry.value {
            Value::Text(s) => Ok(s),
            _ => Err(self.invalid("expected text".into())),
        }
    }

    fn parse<T: FromStr<Err = String>>(&self) -> Result<T, ConfigError> {
        self.text()?.parse().map_err(|m| self.invalid(m))
    }

    fn list(&self) -> Result<&[Value], ConfigError> {
        match &self.entry.value {
            Value::List(items) => Ok(items),
            _ => Err(self.invalid("expected a list".into())),
        }
    }

    fn numbers(&self) -> Result<Vec<f64>, ConfigError> {
        self.numbers_of(&self.entry.value)
    }

    fn numbers_of(&self, value: &Value) -> Result<Vec<f64>, ConfigError> {
        match value {
            Value::List(items) => items
                .iter()
                .map(|i| match i {
                    Value::Number(x) => Ok(*x),
                    _ => Err(self.invalid("expected a list of numbers".into())),
                })
                .collect(),
            _ => Err(self.invalid("expected a list of numbers".into())),
        }
    }
}
