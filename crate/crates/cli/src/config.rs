//! Flat `key = value` experiment files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use gradflow::diagnostics::{Bubble, InitialCondition, PresetParams, RunConfig, DEFAULT_MAX_STEPS};
use gradflow::models::{ModelKind, ModelParams, ModelSpec};
use gradflow::schemes::{CPolicy, Order, SchemeConfig, SchemeKind};
use gradflow::spectral::Grid2D;
use gradflow::Error;

/// Every accepted key with a short description.
pub const SCHEMA: &[(&str, &str)] = &[
    (
        "model.name",
        "allen-cahn | cahn-hilliard | cahn-hilliard-stabilized | pfc",
    ),
    ("model.epsilon", "interface width (PFC: the undercooling)"),
    ("model.mobility", "mobility M (default 1)"),
    (
        "model.beta",
        "stabilization shift (cahn-hilliard-stabilized)",
    ),
    ("scheme.kind", "sav | ieq | 3s-sav | 3s-ieq | 3s-sav-sqrt"),
    ("scheme.order", "1 (backward Euler) or 2 (Crank-Nicolson)"),
    ("scheme.dt", "time step"),
    ("scheme.t_end", "final time"),
    ("scheme.guard", "denominator guard floor (default 1e-12)"),
    (
        "scheme.ieq_tol",
        "GMRES relative tolerance for ieq (default 1e-12)",
    ),
    (
        "scheme.ieq_max_iter",
        "GMRES iteration cap for ieq (default 200)",
    ),
    (
        "c.policy",
        "auto | explicit (default depends on the scheme)",
    ),
    ("c.value", "C for the explicit policy"),
    ("c.delta", "auto policy offset: C = -E(phi0) - delta"),
    (
        "grid.lx",
        "domain length in x (accepts pi multiples, e.g. 2pi)",
    ),
    ("grid.ly", "domain length in y"),
    ("grid.nx", "modes in x (even, >= 4)"),
    ("grid.ny", "modes in y (even, >= 4)"),
    ("grid.dealias", "true | false (2/3 rule on nonlinear terms)"),
    (
        "init.preset",
        "sinprod | two-bubbles | random-uniform | constant",
    ),
    ("init.seed", "RNG seed (required by random-uniform)"),
    ("init.amplitude", "sinprod / random-uniform amplitude"),
    ("init.mean", "random-uniform mean"),
    ("init.value", "constant value"),
    (
        "init.epsilon",
        "two-bubbles interface width (default model.epsilon)",
    ),
    ("init.bubbles", "two-bubbles list 'x y r, x y r, ...'"),
    ("output.dir", "output directory"),
    ("output.snapshots", "comma-separated snapshot times"),
    ("output.stride", "trace stride in steps (0 = no trace)"),
    ("run.max_steps", "step cap"),
    ("study.dts", "comma-separated time steps for converge"),
    ("study.ref_dt", "reference time step for converge"),
    ("compare.schemes", "two scheme names 'a,b' for compare"),
];

const REQUIRED: &[&str] = &[
    "model.name",
    "model.epsilon",
    "scheme.kind",
    "scheme.dt",
    "scheme.t_end",
    "grid.lx",
    "grid.ly",
    "grid.nx",
    "grid.ny",
    "init.preset",
];

/// Raw key-value configuration; later assignments win.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CliConfig {
    entries: BTreeMap<String, String>,
}

/// Fully validated settings.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub run: RunConfig<f64>,
    pub dts: Option<Vec<f64>>,
    pub ref_dt: Option<f64>,
    pub compare: Option<(SchemeKind, SchemeKind)>,
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut cfg = CliConfig::default();
        let mut problems = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    cfg.entries
                        .insert(k.trim().to_string(), v.trim().to_string());
                }
                _ => problems.push(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    no + 1
                )),
            }
        }
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), Error> {
        match assignment.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => {
                self.entries
                    .insert(k.trim().to_string(), v.trim().to_string());
                Ok(())
            }
            _ => Err(Error::Usage(format!(
                "--set expects key=value, got '{assignment}'"
            ))),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn resolve(&self) -> Result<Resolved, Error> {
        let mut r = Reader {
            cfg: self,
            problems: Vec::new(),
        };
        let unknown: Vec<&str> = self
            .entries
            .keys()
            .map(String::as_str)
            .filter(|k| !SCHEMA.iter().any(|(s, _)| s == k))
            .collect();
        for k in &unknown {
            r.problems.push(format!("unknown key '{k}'"));
        }
        for k in REQUIRED {
            if self.get(k).is_none() {
                r.problems.push(format!("missing required key '{k}'"));
            }
        }

        let kind: Option<ModelKind> = r.parsed("model.name");
        let epsilon = r.real("model.epsilon");
        let mobility = r.real("model.mobility").unwrap_or(1.0);
        let beta = r.real("model.beta").unwrap_or(0.0);

        let scheme: Option<SchemeKind> = r.parsed("scheme.kind");
        let order = match r.parsed::<u8>("scheme.order") {
            None => Some(Order::First),
            Some(o) => match Order::try_from(o) {
                Ok(o) => Some(o),
                Err(e) => {
                    r.problems.push(format!("scheme.order: {e}"));
                    None
                }
            },
        };
        let dt = r.real("scheme.dt");
        let t_end = r.real("scheme.t_end");
        let guard = r.real("scheme.guard");
        let ieq_tol = r.real("scheme.ieq_tol");
        let ieq_max_iter: Option<usize> = r.parsed("scheme.ieq_max_iter");

        let c_value = r.real("c.value");
        let c_delta = r.real("c.delta");
        let c_policy = match self.get("c.policy") {
            None => c_value.map(CPolicy::Explicit),
            Some("explicit") => match c_value {
                Some(v) => Some(CPolicy::Explicit(v)),
                None => {
                    r.problems.push("c.policy = explicit needs c.value".into());
                    None
                }
            },
            Some("auto") => Some(CPolicy::Auto {
                delta: c_delta.unwrap_or(1.0),
            }),
            Some(other) => {
                r.problems.push(format!(
                    "c.policy: expected auto or explicit, got '{other}'"
                ));
                None
            }
        };

        let lx = r.real("grid.lx");
        let ly = r.real("grid.ly");
        let nx: Option<usize> = r.parsed("grid.nx");
        let ny: Option<usize> = r.parsed("grid.ny");
        let dealias: bool = r.parsed("grid.dealias").unwrap_or(false);

        let preset = self.get("init.preset");
        let seed: Option<u64> = r.parsed("init.seed");
        let bubbles = self
            .get("init.bubbles")
            .and_then(|s| match parse_bubbles(s) {
                Ok(b) => Some(b),
                Err(e) => {
                    r.problems.push(format!("init.bubbles: {e}"));
                    None
                }
            });
        let params = PresetParams {
            amplitude: r.real("init.amplitude"),
            mean: r.real("init.mean"),
            value: r.real("init.value"),
            epsilon: r.real("init.epsilon").or(epsilon),
            bubbles,
        };

        let snapshots = r.list("output.snapshots").unwrap_or_default();
        let stride: usize = r.parsed("output.stride").unwrap_or(1);
        let max_steps: usize = r.parsed("run.max_steps").unwrap_or(DEFAULT_MAX_STEPS);
        let dts = r.list("study.dts");
        let ref_dt = r.real("study.ref_dt");
        let compare = self
            .get("compare.schemes")
            .and_then(|s| match parse_pair(s) {
                Ok(p) => Some(p),
                Err(e) => {
                    r.problems.push(format!("compare.schemes: {e}"));
                    None
                }
            });

        let grid = match (lx, ly, nx, ny) {
            (Some(lx), Some(ly), Some(nx), Some(ny)) => match Grid2D::new(lx, ly, nx, ny) {
                Ok(g) => Some(g.with_dealiasing(dealias)),
                Err(e) => {
                    r.problems.push(format!("grid: {e}"));
                    None
                }
            },
            _ => None,
        };
        let initial = preset.and_then(|p| match InitialCondition::from_preset(p, &params, seed) {
            Ok(i) => Some(i),
            Err(e) => {
                r.problems.push(format!("init: {e}"));
                None
            }
        });

        if !r.problems.is_empty() {
            return Err(Error::Config(r.problems.join("; ")));
        }
        let (
            Some(kind),
            Some(epsilon),
            Some(scheme),
            Some(order),
            Some(dt),
            Some(t_end),
            Some(grid),
            Some(initial),
        ) = (kind, epsilon, scheme, order, dt, t_end, grid, initial)
        else {
            return Err(Error::Config("incomplete configuration".into()));
        };

        let model = ModelSpec::from_kind(
            kind,
            ModelParams {
                epsilon,
                mobility,
                beta,
            },
        );
        let mut sc = SchemeConfig::new(scheme, order, dt, t_end);
        if let Some(c) = c_policy {
            sc = sc.with_c_policy(c);
        }
        if let Some(g) = guard {
            sc.guard = g;
        }
        if let Some(t) = ieq_tol {
            sc.ieq_tol = t;
        }
        if let Some(m) = ieq_max_iter {
            sc.ieq_max_iter = m;
        }
        let mut run = RunConfig::new(model, sc, grid, initial);
        run.snapshot_times = snapshots;
        run.trace_stride = stride;
        run.max_steps = max_steps;
        run.output_dir = self.get("output.dir").map(PathBuf::from);
        run.validate()?;
        Ok(Resolved {
            run,
            dts,
            ref_dt,
            compare,
        })
    }
}

struct Reader<'a> {
    cfg: &'a CliConfig,
    problems: Vec<String>,
}

impl Reader<'_> {
    fn parsed<V: FromStr>(&mut self, key: &str) -> Option<V>
    where
        V::Err: std::fmt::Display,
    {
        let raw = self.cfg.get(key)?;
        match raw.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.problems
                    .push(format!("{key}: cannot parse '{raw}': {e}"));
                None
            }
        }
    }

    fn real(&mut self, key: &str) -> Option<f64> {
        let raw = self.cfg.get(key)?;
        match parse_real(raw) {
            Some(v) => Some(v),
            None => {
                self.problems
                    .push(format!("{key}: expected a number, got '{raw}'"));
                None
            }
        }
    }

    fn list(&mut self, key: &str) -> Option<Vec<f64>> {
        let raw = self.cfg.get(key)?;
        match parse_list(raw) {
            Ok(v) => Some(v),
            Err(e) => {
                self.problems.push(format!("{key}: {e}"));
                None
            }
        }
    }
}

/// A finite real number, optionally a multiple of pi (`pi`, `2pi`, `2*pi`).
pub fn parse_real(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.strip_suffix("pi") {
        Some(head) => {
            let head = head.trim().trim_end_matches('*').trim();
            let m = if head.is_empty() {
                1.0
            } else {
                head.parse::<f64>().ok()?
            };
            m * std::f64::consts::PI
        }
        None => s.parse().ok()?,
    };
    v.is_finite().then_some(v)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| parse_real(t).ok_or_else(|| format!("'{t}' is not a number")))
        .collect()
}

fn parse_bubbles(s: &str) -> Result<Vec<Bubble<f64>>, String> {
    s.split(',')
        .map(|chunk| {
            let v: Vec<f64> = chunk
                .split_whitespace()
                .map(|t| parse_real(t).ok_or_else(|| format!("'{t}' is not a number")))
                .collect::<Result<_, _>>()?;
            match v.as_slice() {
                [x, y, r] => Ok(Bubble {
                    x: *x,
                    y: *y,
                    radius: *r,
                }),
                _ => Err(format!("expected 'x y r', got '{}'", chunk.trim())),
            }
        })
        .collect()
}

pub fn parse_pair(s: &str) -> Result<(SchemeKind, SchemeKind), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok((
            a.parse().map_err(|e: Error| e.to_string())?,
            b.parse().map_err(|e: Error| e.to_string())?,
        )),
        _ => Err(format!("expected two scheme names 'a,b', got '{s}'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "
        # Allen-Cahn smoke test
        model.name = allen-cahn
        model.epsilon = 0.1
        scheme.kind = 3s-sav
        scheme.dt = 1e-3
        scheme.t_end = 0.01   # ten steps
        grid.lx = 2pi
        grid.ly = 2*pi
        grid.nx = 16
        grid.ny = 16
        init.preset = sinprod
    ";

    #[test]
    fn parses_base_config() {
        let r = CliConfig::parse(BASE).unwrap().resolve().unwrap();
        assert_eq!(r.run.scheme.kind, SchemeKind::ThreeSSav);
        assert_eq!(r.run.scheme.n_steps(), 10);
        assert!((r.run.grid.ly() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(r.run.scheme.c_policy, CPolicy::Auto { delta: 1.0 });
    }

    #[test]
    fn overrides_win() {
        let mut c = CliConfig::parse(BASE).unwrap();
        c.set("scheme.kind=sav").unwrap();
        c.set("c.value = 2").unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.run.scheme.kind, SchemeKind::Sav);
        assert_eq!(r.run.scheme.c_policy, CPolicy::Explicit(2.0));
        assert!(c.set("novalue").is_err());
    }

    #[test]
    fn every_offending_key_is_reported() {
        let mut c = CliConfig::parse(BASE).unwrap();
        c.set("model.epslion=0.1").unwrap();
        c.set("grid.nz=4").unwrap();
        c.set("scheme.dt=fast").unwrap();
        let msg = c.resolve().unwrap_err().to_string();
        for needle in ["model.epslion", "grid.nz", "scheme.dt"] {
            assert!(msg.contains(needle), "{msg}");
        }
    }

    #[test]
    fn missing_keys_are_listed() {
        let msg = CliConfig::parse("model.name = pfc")
            .unwrap()
            .resolve()
            .unwrap_err()
            .to_string();
        assert!(
            msg.contains("scheme.dt") && msg.contains("grid.nx") && msg.contains("init.preset")
        );
    }

    #[test]
    fn malformed_lines() {
        assert!(CliConfig::parse("just words").is_err());
        assert!(CliConfig::parse("= 3").is_err());
    }

    #[test]
    fn reals_and_lists() {
        assert_eq!(parse_real("pi"), Some(std::f64::consts::PI));
        assert_eq!(parse_real("64"), Some(64.0));
        assert_eq!(parse_real("nan"), None);
        assert_eq!(parse_list("1e-3, 5e-4,").unwrap(), vec![1e-3, 5e-4]);
        let b = parse_bubbles("0.35 0.35 0.15, 0.6 0.6 0.2").unwrap();
        assert_eq!(b, Bubble::benchmark_pair());
        assert!(parse_pair("sav").is_err());
        assert_eq!(
            parse_pair("sav, 3s-ieq").unwrap(),
            (SchemeKind::Sav, SchemeKind::ThreeSIeq)
        );
    }
}
