//! Config files and flag parsing.
//!
//! A config file is JSON:
//!
//! ```json
//! {
//!   "system": {
//!     "servers": 5,
//!     "service_rate": 2.0,
//!     "arrival": {"kind": "exponential", "rate": 25.0},
//!     "valuation": {"kind": "exponential", "beta": 1.0}
//!   },
//!   "precision": 1e-9,
//!   "seed": 7
//! }
//! ```
//!
//! Every key is optional; command-line flags take precedence.

use std::fs;
use std::path::Path;

use farm_pricer::{InterarrivalDist, PriceVector, SystemSpec, ValuationDist};
use serde::Deserialize;

use crate::args::{PriceArgs, SystemArgs};
use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialSystem {
    pub servers: Option<usize>,
    pub service_rate: Option<f64>,
    pub arrival: Option<InterarrivalDist>,
    pub valuation: Option<ValuationDist>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub system: PartialSystem,
    pub precision: Option<f64>,
    pub seed: Option<u64>,
    pub prices: Option<PriceVector>,
}

/// Emitted results carry many more keys; only these two are read back.
#[derive(Debug, Deserialize)]
struct ResultFile {
    system: Option<PartialSystem>,
    prices: Option<PriceVector>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn load_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn number(key: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("{key}: `{s}` is not a number")))
}

fn numbers(key: &str, s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',').map(|x| number(key, x)).collect()
}

fn lib_err(key: &str) -> impl Fn(farm_pricer::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{key}: {e}"))
}

/// `exp:1`, `pareto:2`, `pareto:2,1.5`, `uniform:0,1`.
pub fn parse_valuation(s: &str) -> Result<ValuationDist, CliError> {
    let (kind, params) = s.split_once(':').unwrap_or((s, ""));
    let p = if params.is_empty() { Vec::new() } else { numbers("--valuation", params)? };
    let wrong = || CliError::Config(format!("--valuation: cannot read `{s}`"));
    match (kind, p.as_slice()) {
        ("exp" | "exponential", [beta]) => ValuationDist::exponential(*beta),
        ("pareto", [theta]) => ValuationDist::pareto(*theta),
        ("pareto", [theta, shape]) => ValuationDist::pareto_with_shape(*theta, *shape),
        ("uniform", [lo, hi]) => ValuationDist::uniform(*lo, *hi),
        _ => return Err(wrong()),
    }
    .map_err(lib_err("--valuation"))
}

/// `exp`, `deterministic`, `uniform`, optionally with a rate after the
/// colon; `uniform:LO,HI`; `two_point:X1,P1,X2`.
pub fn parse_arrival(s: &str, rate: Option<f64>) -> Result<InterarrivalDist, CliError> {
    let (kind, params) = s.split_once(':').unwrap_or((s, ""));
    let p = if params.is_empty() { Vec::new() } else { numbers("--arrival", params)? };
    let need_rate = || rate.ok_or_else(|| CliError::Config(format!("--arrival {s}: needs --lambda")));
    let dist = match (kind, p.as_slice()) {
        ("exp" | "exponential" | "poisson", []) => InterarrivalDist::exponential(need_rate()?),
        ("exp" | "exponential" | "poisson", [r]) => InterarrivalDist::exponential(*r),
        ("deterministic" | "constant", []) => InterarrivalDist::deterministic(need_rate()?),
        ("deterministic" | "constant", [r]) => InterarrivalDist::deterministic(*r),
        ("uniform", []) => InterarrivalDist::uniform_with_rate(need_rate()?),
        ("uniform", [lo, hi]) => InterarrivalDist::uniform_interval(*lo, *hi),
        ("two_point" | "two-point", [x1, p1, x2]) => InterarrivalDist::two_point(*x1, *p1, *x2),
        _ => return Err(CliError::Config(format!("--arrival: cannot read `{s}`"))),
    }
    .map_err(lib_err("--arrival"))?;
    match rate {
        Some(r) if !p.is_empty() => dist.with_rate(r).map_err(lib_err("--lambda")),
        _ => Ok(dist),
    }
}

/// Overlays flags on a partial system and validates the result.
pub fn resolve_system(args: &SystemArgs, base: &PartialSystem) -> Result<SystemSpec, CliError> {
    let missing = |what: &str, flag: &str| CliError::Config(format!("missing `{what}` (set --{flag} or system.{what})"));
    let servers = args.k.or(base.servers).ok_or_else(|| missing("servers", "k"))?;
    let mu = args.mu.or(base.service_rate).ok_or_else(|| missing("service_rate", "mu"))?;
    let valuation = match &args.valuation {
        Some(s) => parse_valuation(s)?,
        None => base.valuation.clone().ok_or_else(|| missing("valuation", "valuation"))?,
    };
    if let Some(l) = args.lambda {
        if !(l.is_finite() && l > 0.0) {
            return Err(CliError::Config(format!("--lambda: must be finite and > 0, got {l}")));
        }
    }
    let arrival = match (&args.arrival, &base.arrival) {
        (Some(s), _) => parse_arrival(s, args.lambda.or(base.arrival.as_ref().map(|a| a.rate())))?,
        (None, Some(a)) => match args.lambda {
            Some(l) => a.with_rate(l).map_err(lib_err("--lambda"))?,
            None => a.clone(),
        },
        (None, None) => {
            let l = args.lambda.ok_or_else(|| missing("arrival", "lambda"))?;
            InterarrivalDist::exponential(l).map_err(lib_err("--lambda"))?
        }
    };
    SystemSpec::new(servers, mu, arrival, valuation).map_err(lib_err("system"))
}

pub fn parse_prices(s: &str) -> Result<PriceVector, CliError> {
    let values = s
        .split(',')
        .map(|x| match x.trim() {
            "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
            v => number("--prices", v),
        })
        .collect::<Result<Vec<_>, _>>()?;
    PriceVector::new(values).map_err(lib_err("--prices"))
}

/// System and prices for `evaluate` and `simulate`: `--from` supplies both,
/// `--config` and the system flags override the system, `--prices`
/// overrides the prices.
pub fn resolve_priced(
    system: &SystemArgs,
    prices: &PriceArgs,
) -> Result<(SystemSpec, Option<PriceVector>, ConfigFile), CliError> {
    let cfg = load_config(system.config.as_deref())?;
    let mut base = PartialSystem::default();
    let mut from_prices = None;
    if let Some(path) = &prices.from {
        let r: ResultFile =
            serde_json::from_str(&read(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(s) = r.system {
            base = s;
        }
        from_prices = r.prices;
    }
    let merged = PartialSystem {
        servers: cfg.system.servers.or(base.servers),
        service_rate: cfg.system.service_rate.or(base.service_rate),
        arrival: cfg.system.arrival.clone().or(base.arrival),
        valuation: cfg.system.valuation.clone().or(base.valuation),
    };
    let spec = resolve_system(system, &merged)?;
    let pv = match &prices.prices {
        Some(s) => Some(parse_prices(s)?),
        None => from_prices.or(cfg.prices.clone()),
    };
    if let Some(p) = &pv {
        p.check_servers(spec.servers).map_err(lib_err("prices"))?;
    }
    Ok((spec, pv, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuation_flags() {
        assert_eq!(parse_valuation("exp:1").unwrap(), ValuationDist::exponential(1.0).unwrap());
        assert_eq!(parse_valuation("pareto:2,1.5").unwrap(), ValuationDist::pareto_with_shape(2.0, 1.5).unwrap());
        assert!(parse_valuation("exp").is_err());
        assert!(parse_valuation("gamma:1").is_err());
        assert!(parse_valuation("exp:-1").is_err());
    }

    #[test]
    fn arrival_flags() {
        let u = parse_arrival("uniform", Some(25.0)).unwrap();
        assert_eq!(u, InterarrivalDist::uniform_interval(0.0, 0.08).unwrap());
        let t = parse_arrival("two_point:1,0.5,0", Some(4.0)).unwrap();
        assert!((t.rate() - 4.0).abs() < 1e-12);
        assert!(parse_arrival("deterministic", None).is_err());
    }

    #[test]
    fn flags_override_config() {
        let base: PartialSystem = serde_json::from_str(
            r#"{"servers":3,"service_rate":1.0,"arrival":{"kind":"deterministic","rate":5.0},
                "valuation":{"kind":"exponential","beta":2.0}}"#,
        )
        .unwrap();
        let args = SystemArgs {
            k: Some(4),
            lambda: Some(7.0),
            ..Default::default()
        };
        let spec = resolve_system(&args, &base).unwrap();
        assert_eq!(spec.servers, 4);
        assert_eq!(spec.arrival, InterarrivalDist::deterministic(7.0).unwrap());
        assert_eq!(spec.valuation, ValuationDist::exponential(2.0).unwrap());
    }

    #[test]
    fn missing_pieces_are_named() {
        let err = resolve_system(&SystemArgs::default(), &PartialSystem::default()).unwrap_err();
        assert!(err.to_string().contains("servers"));
    }

    #[test]
    fn prices_accept_infinity() {
        let p = parse_prices("1.5, inf").unwrap();
        assert_eq!(p.price(1), f64::INFINITY);
        assert!(parse_prices("1,x").is_err());
    }
}
