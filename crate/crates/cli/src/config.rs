use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use moyal_core::dirac::{DiracKind, DiracParams, GammaRep};
use moyal_core::states::SolverMode;
use moyal_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            _ => Err(Error::Configuration(format!("unknown format `{s}` (json, csv, text)"))),
        }
    }
}

/// Settings shared by all commands. Flags override the config file, which
/// overrides the defaults.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub triple: String,
    pub theta: f64,
    pub omega: f64,
    pub xi: f64,
    pub n: usize,
    pub solver: SolverMode,
    pub tol: f64,
    pub seed: u64,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            triple: "standard".into(),
            theta: 2.0,
            omega: 0.5,
            xi: 2.0,
            n: 32,
            solver: SolverMode::DiagonalLp,
            tol: 1e-9,
            seed: 0,
            format: None,
            output: None,
        }
    }
}

/// Flag values; `None` means not given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub triple: Option<String>,
    pub theta: Option<f64>,
    pub omega: Option<f64>,
    pub xi: Option<f64>,
    pub n: Option<usize>,
    pub solver: Option<String>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub output: Option<PathBuf>,
}

/// Parses flat `key = value` text; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Configuration(format!("line {}: expected key=value, got `{line}`", lineno + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Configuration(format!("bad value `{v}` for `{key}`")))
}

fn solver(v: &str) -> Result<SolverMode> {
    match v {
        "diagonal_lp" | "lp" => Ok(SolverMode::DiagonalLp),
        "subgradient" => Ok(SolverMode::Subgradient),
        _ => Err(Error::Configuration(format!("unknown solver `{v}` (diagonal_lp, subgradient)"))),
    }
}

impl RunConfig {
    pub fn resolve(file: Option<&Path>, flags: Overrides) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)?;
            for (k, v) in parse_key_values(&text)? {
                cfg.set(&k, &v)?;
            }
        }
        if let Some(v) = flags.triple {
            cfg.triple = v;
        }
        if let Some(v) = flags.theta {
            cfg.theta = v;
        }
        if let Some(v) = flags.omega {
            cfg.omega = v;
        }
        if let Some(v) = flags.xi {
            cfg.xi = v;
        }
        if let Some(v) = flags.n {
            cfg.n = v;
        }
        if let Some(v) = flags.solver {
            cfg.solver = solver(&v)?;
        }
        if let Some(v) = flags.tol {
            cfg.tol = v;
        }
        if let Some(v) = flags.seed {
            cfg.seed = v;
        }
        if let Some(v) = flags.format {
            cfg.format = Some(Format::parse(&v)?);
        }
        if let Some(v) = flags.output {
            cfg.output = Some(v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "triple" => self.triple = v.to_string(),
            "theta" => self.theta = num(key, v)?,
            "omega" => self.omega = num(key, v)?,
            "xi" => self.xi = num(key, v)?,
            "n" | "N" | "trunc" => self.n = num(key, v)?,
            "solver" => self.solver = solver(v)?,
            "tol" | "tolerance" => self.tol = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "format" => self.format = Some(Format::parse(v)?),
            "output" => self.output = Some(PathBuf::from(v)),
            _ => return Err(Error::Configuration(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 {
            return Err(Error::Configuration(format!("N must be at least 8, got {}", self.n)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Configuration(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::Configuration(format!("theta must be positive, got {}", self.theta)));
        }
        let kind = self.kind()?;
        if matches!(kind, DiracKind::Harmonic(_)) && !(self.omega > 0.0 && self.omega <= 1.0) {
            return Err(Error::Configuration(format!("omega must lie in (0, 1], got {}", self.omega)));
        }
        if matches!(kind, DiracKind::Landau | DiracKind::TwistedLandau) && !self.xi.is_finite() {
            return Err(Error::Configuration(format!("xi must be finite, got {}", self.xi)));
        }
        Ok(())
    }

    pub fn kind(&self) -> Result<DiracKind> {
        parse_kind(&self.triple)
    }

    pub fn params(&self) -> Result<DiracParams> {
        Ok(match self.kind()? {
            DiracKind::Standard => DiracParams::standard(self.theta),
            DiracKind::Harmonic(_) => DiracParams::harmonic(self.theta, self.omega),
            DiracKind::Landau | DiracKind::TwistedLandau => DiracParams::landau(self.theta, self.xi),
        })
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

pub fn parse_kind(s: &str) -> Result<DiracKind> {
    match s {
        "standard" => Ok(DiracKind::Standard),
        "harmonic" | "harmonic-d1" => Ok(DiracKind::Harmonic(GammaRep::D1)),
        "harmonic-d2" => Ok(DiracKind::Harmonic(GammaRep::D2)),
        "landau" => Ok(DiracKind::Landau),
        "twisted" | "twisted-landau" => Ok(DiracKind::TwistedLandau),
        _ => Err(Error::Configuration(format!(
            "unknown triple `{s}` (standard, harmonic, harmonic-d2, landau, twisted)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values_with_comments() {
        let m = parse_key_values("theta = 2\n# note\n\nxi=3 # trailing\n").unwrap();
        assert_eq!(m["theta"], "2");
        assert_eq!(m["xi"], "3");
        assert!(parse_key_values("oops").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("moyal-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.cfg");
        std::fs::write(&path, "theta=4\nN=16\nseed=9\n").unwrap();
        let cfg = RunConfig::resolve(Some(&path), Overrides { n: Some(24), ..Default::default() }).unwrap();
        assert_eq!((cfg.theta, cfg.n, cfg.seed), (4.0, 24, 9));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn validation() {
        let bad_n = Overrides { n: Some(4), ..Default::default() };
        assert!(RunConfig::resolve(None, bad_n).is_err());
        let bad_omega = Overrides { triple: Some("harmonic".into()), omega: Some(1.5), ..Default::default() };
        assert!(RunConfig::resolve(None, bad_omega).is_err());
        assert!(parse_kind("quantum").is_err());
        assert!(RunConfig::resolve(None, Overrides { tol: Some(0.0), ..Default::default() }).is_err());
    }
}
