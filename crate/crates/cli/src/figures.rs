//! CSV data behind the standard plots.
//!
//! Every figure uses exponential valuations with unit mean. Unless noted the
//! base system is five servers, arrival rate 25 and service rate 2.

use farm_pricer::mdp_poisson::{self, infinite_servers, SweepParam, THETA_PRECISION};
use farm_pricer::{InterarrivalDist, SystemSpec, ValuationDist};

use crate::commands::{comparison, optimal};
use crate::output::{num, Table};
use crate::CliError;

pub const FIGURE_IDS: [&str; 7] = [
    "opt-pri-exp",
    "lam-rev",
    "mu-rev",
    "serv-rev",
    "five-servers",
    "ten-servers",
    "rev-vs-k",
];

fn unit_exp() -> ValuationDist {
    ValuationDist::exponential(1.0).expect("valid rate")
}

fn poisson(k: usize, lambda: f64, mu: f64) -> Result<SystemSpec, CliError> {
    Ok(SystemSpec::poisson(k, lambda, mu, unit_exp())?)
}

pub fn figure(id: &str) -> Result<Table, CliError> {
    match id {
        "opt-pri-exp" => optimal_prices_by_arrival(),
        "lam-rev" => sweep_table("lambda", SweepParam::Lambda, &[10.0, 15.0, 20.0, 25.0, 30.0]),
        "mu-rev" => sweep_table("mu", SweepParam::Mu, &[1.0, 2.0, 3.0, 4.0, 5.0]),
        "serv-rev" => sweep_table("k", SweepParam::K, &[3.0, 4.0, 5.0, 6.0, 7.0]),
        "five-servers" => load_comparison(5, &[0.5, 1.0, 5.0, 10.0]),
        "ten-servers" => load_comparison(10, &[5.0, 10.0, 15.0, 25.0]),
        "rev-vs-k" => revenue_vs_servers(),
        other => Err(CliError::Config(format!(
            "unknown figure `{other}`; expected one of {}",
            FIGURE_IDS.join(", ")
        ))),
    }
}

/// Optimal price per state under exponential, constant and uniform gaps.
fn optimal_prices_by_arrival() -> Result<Table, CliError> {
    let (k, lambda, mu) = (5, 25.0, 2.0);
    let laws = [
        InterarrivalDist::exponential(lambda)?,
        InterarrivalDist::deterministic(lambda)?,
        InterarrivalDist::uniform_with_rate(lambda)?,
    ];
    let cols = laws
        .into_iter()
        .map(|a| {
            let spec = SystemSpec::new(k, mu, a, unit_exp())?;
            Ok(optimal(&spec, THETA_PRECISION)?.prices)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut t = Table::new(["state", "exponential", "constant", "uniform"]);
    for (s, ((a, b), c)) in cols[0].iter().zip(&cols[1]).zip(&cols[2]).enumerate() {
        t.push(vec![s.to_string(), num(*a), num(*b), num(*c)]);
    }
    Ok(t)
}

fn sweep_table(name: &str, vary: SweepParam, grid: &[f64]) -> Result<Table, CliError> {
    let rows = mdp_poisson::sweep(&poisson(5, 25.0, 2.0)?, vary, grid, THETA_PRECISION)?;
    let ratio = match vary {
        SweepParam::Lambda => "theta_per_lambda",
        SweepParam::Mu => "theta_per_mu",
        SweepParam::K => "theta_per_k",
    };
    let mut t = Table::new([name, "theta_star", ratio]);
    for r in rows {
        t.push(vec![num(r.param), num(r.theta_star), num(r.ratio)]);
    }
    Ok(t)
}

/// Service rate 2 and arrival rate `rho * 2` for each load `rho`.
fn load_comparison(k: usize, loads: &[f64]) -> Result<Table, CliError> {
    let mu = 2.0;
    let mut t = Table::new(["rho", "uniform_p_inf", "uniform_p_k", "optimal"]);
    for &rho in loads {
        let (c, _) = comparison(&poisson(k, rho * mu, mu)?, THETA_PRECISION)?;
        t.push(vec![num(rho), num(c.revenue_p_inf), num(c.revenue_uniform), num(c.theta_star)]);
    }
    Ok(t)
}

/// Arrival rate 20, service rate 2, five to ten servers, alongside the
/// unlimited-server revenue the optimum approaches.
fn revenue_vs_servers() -> Result<Table, CliError> {
    let base = poisson(5, 20.0, 2.0)?;
    let (inf, _) = infinite_servers(&base)?;
    let grid: Vec<f64> = (5..=10).map(f64::from).collect();
    let rows = mdp_poisson::sweep(&base, SweepParam::K, &grid, THETA_PRECISION)?;
    let mut t = Table::new(["k", "theta_star", "infinite_server"]);
    for r in rows {
        t.push(vec![num(r.param), num(r.theta_star), num(inf)]);
    }
    Ok(t)
}
