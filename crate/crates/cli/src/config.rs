//! Run configuration: a flat TOML file of `key = value` lines, overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use laminate_hum::export::Header;
use laminate_hum::hum::{Tikhonov, TraceWeighting};
use laminate_hum::model::{from_hansen_spies, HansenSpiesParams, PhysicalParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamForm {
    #[default]
    Timoshenko,
    HansenSpies,
}

/// Contents of a configuration file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub form: ParamForm,
    pub rho1: Option<f64>,
    pub rho2: Option<f64>,
    pub k: Option<f64>,
    pub b: Option<f64>,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub rho: Option<f64>,
    pub i_rho: Option<f64>,
    pub g: Option<f64>,
    pub d: Option<f64>,
    pub delta0: Option<f64>,
    pub gamma0: Option<f64>,
    pub length: Option<f64>,
    pub n: Option<usize>,
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    pub nt: Option<usize>,
    pub m: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// `zero`, `random`, `mode:K` (1-based) or `file:PATH`.
    pub initial: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub weighting: Option<TraceWeighting>,
    /// `off`, `auto` or a fixed shift.
    pub tikhonov: Option<String>,
    pub damped: Option<bool>,
    pub lumped: Option<bool>,
    pub export_matrices: Option<bool>,
    pub snapshot: Option<bool>,
    pub sweep_n: Option<Vec<usize>>,
    pub sweep_m: Option<Vec<usize>>,
    #[serde(rename = "sweep_T")]
    pub sweep_horizon: Option<Vec<f64>>,
    pub sweep_gamma: Option<Vec<f64>>,
    pub sweep_beta: Option<Vec<f64>>,
}

/// Flag values; `None` leaves the file value in place.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub nt: Option<usize>,
    pub horizon: Option<f64>,
    pub m: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub damped: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! over {
            ($($f:ident),*) => {$(if o.$f.is_some() { self.$f = o.$f; })*};
        }
        over!(seed, n, nt, horizon, m, tol, max_iter);
        if o.damped {
            self.damped = Some(true);
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let (params, hansen_spies) = self.resolve_params()?;
        let n = self.n.unwrap_or(32);
        if n < 4 {
            return Err(field("n", n, "at least 4 elements are required"));
        }
        let horizon = self.horizon.unwrap_or_else(|| params.default_horizon());
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(field("T", horizon, "must be finite and > 0"));
        }
        let nt = self.nt.unwrap_or(2000);
        if nt == 0 {
            return Err(field("nt", nt, "must be >= 1"));
        }
        let m = self.m.unwrap_or((n / 3).max(1));
        if m == 0 || m > 3 * n {
            return Err(field("m", m, "must lie in 1..=3n"));
        }
        let tol = self.tol.unwrap_or(1e-6);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(field("tol", tol, "must be finite and > 0"));
        }
        let max_iter = self.max_iter.unwrap_or(500);
        if max_iter == 0 {
            return Err(field("max_iter", max_iter, "must be >= 1"));
        }
        let samples = self.samples.unwrap_or(16);
        if samples == 0 {
            return Err(field("samples", samples, "must be >= 1"));
        }
        let initial = InitialSpec::parse(self.initial.as_deref().unwrap_or("random"))?;
        if let InitialSpec::Mode(k) = initial {
            if k > 3 * n {
                return Err(field("initial", format!("mode:{k}"), "mode index exceeds 3n"));
            }
        }
        let tikhonov = parse_tikhonov(self.tikhonov.as_deref().unwrap_or("off"))?;
        let damped = self.damped.unwrap_or(false);
        if damped && params.beta <= 0.0 {
            return Err(field("damped", damped, "requires beta > 0"));
        }
        if !damped && params.beta != 0.0 {
            return Err(field("beta", params.beta, "beta > 0 requires damped = true"));
        }
        for (name, list) in [("sweep_n", &self.sweep_n), ("sweep_m", &self.sweep_m)] {
            if list.as_ref().is_some_and(|l| l.is_empty()) {
                return Err(field(name, "[]", "must not be empty"));
            }
        }
        for (name, list) in [
            ("sweep_T", &self.sweep_horizon),
            ("sweep_gamma", &self.sweep_gamma),
            ("sweep_beta", &self.sweep_beta),
        ] {
            if list.as_ref().is_some_and(|l| l.is_empty()) {
                return Err(field(name, "[]", "must not be empty"));
            }
        }
        Ok(Resolved {
            params,
            hansen_spies,
            n,
            horizon,
            horizon_explicit: self.horizon.is_some(),
            nt,
            m,
            m_explicit: self.m.is_some(),
            tol,
            max_iter,
            initial,
            seed: self.seed.unwrap_or(0),
            samples,
            weighting: self.weighting.unwrap_or_default(),
            tikhonov,
            damped,
            lumped: self.lumped.unwrap_or(false),
            export_matrices: self.export_matrices.unwrap_or(false),
            snapshot: self.snapshot.unwrap_or(false),
            sweep_n: self.sweep_n.clone(),
            sweep_m: self.sweep_m.clone(),
            sweep_horizon: self.sweep_horizon.clone(),
            sweep_gamma: self.sweep_gamma.clone(),
            sweep_beta: self.sweep_beta.clone(),
        })
    }

    fn resolve_params(&self) -> Result<(PhysicalParams, Option<HansenSpiesParams>), CliError> {
        let timo = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("k", self.k),
            ("b", self.b),
            ("gamma", self.gamma),
            ("beta", self.beta),
        ];
        let hs = [
            ("rho", self.rho),
            ("i_rho", self.i_rho),
            ("g", self.g),
            ("d", self.d),
            ("delta0", self.delta0),
            ("gamma0", self.gamma0),
        ];
        let length = self.length.unwrap_or(1.0);
        match self.form {
            ParamForm::Timoshenko => {
                if let Some((name, _)) = hs.iter().find(|(_, v)| v.is_some()) {
                    return Err(field(name, "set", "belongs to form = \"hansen_spies\""));
                }
                let p = PhysicalParams {
                    rho1: self.rho1.unwrap_or(1.0),
                    rho2: self.rho2.unwrap_or(1.0),
                    k: self.k.unwrap_or(1.0),
                    b: self.b.unwrap_or(1.0),
                    gamma: self.gamma.unwrap_or(1.0),
                    beta: self.beta.unwrap_or(0.0),
                    length,
                };
                p.validate()?;
                Ok((p, None))
            }
            ParamForm::HansenSpies => {
                if let Some((name, _)) = timo.iter().find(|(_, v)| v.is_some()) {
                    return Err(field(name, "set", "belongs to form = \"timoshenko\""));
                }
                let hs = HansenSpiesParams {
                    rho: self.rho.unwrap_or(1.0),
                    i_rho: self.i_rho.unwrap_or(1.0),
                    g: self.g.unwrap_or(1.0),
                    d: self.d.unwrap_or(1.0),
                    delta0: self.delta0.unwrap_or(0.75),
                    gamma0: self.gamma0.unwrap_or(0.0),
                    length,
                };
                Ok((from_hansen_spies(&hs)?, Some(hs)))
            }
        }
    }
}

fn field(name: &str, value: impl std::fmt::Display, reason: &str) -> CliError {
    CliError::Config(format!("{name} = {value}: {reason}"))
}

fn parse_tikhonov(s: &str) -> Result<Tikhonov, CliError> {
    match s {
        "off" => Ok(Tikhonov::Off),
        "auto" => Ok(Tikhonov::Auto),
        other => match other.parse::<f64>() {
            Ok(e) if e >= 0.0 && e.is_finite() => Ok(Tikhonov::Fixed(e)),
            _ => Err(field("tikhonov", other, "expected off, auto or a shift >= 0")),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Zero,
    Random,
    /// 1-based mode index.
    Mode(usize),
    File(PathBuf),
}

impl InitialSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "zero" => Ok(Self::Zero),
            "random" => Ok(Self::Random),
            _ => {
                if let Some(k) = s.strip_prefix("mode:") {
                    match k.parse::<usize>() {
                        Ok(k) if k >= 1 => Ok(Self::Mode(k)),
                        _ => Err(field("initial", s, "mode index must be an integer >= 1")),
                    }
                } else if let Some(p) = s.strip_prefix("file:") {
                    if p.is_empty() {
                        return Err(field("initial", s, "empty path"));
                    }
                    Ok(Self::File(PathBuf::from(p)))
                } else {
                    Err(field("initial", s, "expected zero, random, mode:K or file:PATH"))
                }
            }
        }
    }
}

impl std::fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zero => write!(f, "zero"),
            Self::Random => write!(f, "random"),
            Self::Mode(k) => write!(f, "mode:{k}"),
            Self::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Validated configuration with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub params: PhysicalParams,
    pub hansen_spies: Option<HansenSpiesParams>,
    pub n: usize,
    pub horizon: f64,
    horizon_explicit: bool,
    pub nt: usize,
    pub m: usize,
    m_explicit: bool,
    pub tol: f64,
    pub max_iter: usize,
    pub initial: InitialSpec,
    pub seed: u64,
    pub samples: usize,
    pub weighting: TraceWeighting,
    pub tikhonov: Tikhonov,
    pub damped: bool,
    pub lumped: bool,
    pub export_matrices: bool,
    pub snapshot: bool,
    pub sweep_n: Option<Vec<usize>>,
    pub sweep_m: Option<Vec<usize>>,
    pub sweep_horizon: Option<Vec<f64>>,
    pub sweep_gamma: Option<Vec<f64>>,
    pub sweep_beta: Option<Vec<f64>>,
}

fn list<T: std::fmt::Display>(v: &[T]) -> String {
    let items: Vec<String> = v.iter().map(ToString::to_string).collect();
    format!("[{}]", items.join(", "))
}

impl Resolved {
    /// Cell `(n, m, T, gamma, beta)` of a sweep; unspecified `m` and `T`
    /// follow their defaults for the cell's `n` and parameters.
    pub fn cell(&self, n: usize, m: Option<usize>, horizon: Option<f64>, gamma: f64, beta: f64) -> Resolved {
        let mut out = self.clone();
        out.n = n;
        out.params.gamma = gamma;
        out.params.beta = beta;
        out.m = m.unwrap_or(if self.m_explicit { self.m } else { (n / 3).max(1) });
        out.horizon = horizon.unwrap_or(if self.horizon_explicit {
            self.horizon
        } else {
            out.params.default_horizon()
        });
        out
    }

    /// Header block with every resolved key.
    pub fn header(&self, command: &str) -> Header {
        let p = &self.params;
        let mut h = Header::new();
        h.insert("command", command)
            .insert("rho1", p.rho1)
            .insert("rho2", p.rho2)
            .insert("k", p.k)
            .insert("b", p.b)
            .insert("gamma", p.gamma)
            .insert("beta", p.beta)
            .insert("length", p.length)
            .insert("n", self.n)
            .insert("T", self.horizon)
            .insert("nt", self.nt)
            .insert("m", self.m)
            .insert("tol", self.tol)
            .insert("max_iter", self.max_iter)
            .insert("initial", &self.initial)
            .insert("seed", self.seed)
            .insert("samples", self.samples)
            .insert(
                "weighting",
                match self.weighting {
                    TraceWeighting::Weighted => "weighted",
                    TraceWeighting::Unweighted => "unweighted",
                },
            )
            .insert(
                "tikhonov",
                match self.tikhonov {
                    Tikhonov::Off => "off".to_string(),
                    Tikhonov::Auto => "auto".to_string(),
                    Tikhonov::Fixed(e) => e.to_string(),
                },
            )
            .insert("damped", self.damped)
            .insert("lumped", self.lumped);
        if let Some(hs) = &self.hansen_spies {
            h.insert("form", "hansen_spies")
                .insert("rho", hs.rho)
                .insert("i_rho", hs.i_rho)
                .insert("g", hs.g)
                .insert("d", hs.d)
                .insert("delta0", hs.delta0)
                .insert("gamma0", hs.gamma0);
        } else {
            h.insert("form", "timoshenko");
        }
        if let Some(v) = &self.sweep_n {
            h.insert("sweep_n", list(v));
        }
        if let Some(v) = &self.sweep_m {
            h.insert("sweep_m", list(v));
        }
        if let Some(v) = &self.sweep_horizon {
            h.insert("sweep_T", list(v));
        }
        if let Some(v) = &self.sweep_gamma {
            h.insert("sweep_gamma", list(v));
        }
        if let Some(v) = &self.sweep_beta {
            h.insert("sweep_beta", list(v));
        }
        h
    }
}
