//! Subcommand implementations.

use std::io::Write;
use std::path::Path;

use farm_pricer::mdp_general::solve_general;
use farm_pricer::mdp_poisson::{self, fixed_point, infinite_servers, THETA_PRECISION};
use farm_pricer::simulator::{simulate, SimConfig};
use farm_pricer::stationary::{occupancy_general, occupancy_poisson, revenue_from_occupancy, OccupancyDist};
use farm_pricer::uniform_pricing::{gap_bound, optimize_uniform};
use farm_pricer::{DepartureMatrix, PriceVector, SystemSpec};
use serde_json::{json, Value};

use crate::args::{Command, Format, OutputArgs, SystemArgs};
use crate::config::{load_config, resolve_priced, resolve_system, ConfigFile};
use crate::output::{emit_csv, emit_json, num, Table};
use crate::{figures, CliError};

pub fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<String, CliError> {
    match cmd {
        Command::SolvePoisson { system, precision, output } => solve_poisson(&system, precision, &output, out),
        Command::SolveGeneral { system, precision, output } => solve_general_cmd(&system, precision, &output, out),
        Command::Uniform { system, output } => uniform(&system, &output, out),
        Command::Evaluate { system, prices, output } => {
            let (spec, pv, _) = resolve_priced(&system, &prices)?;
            let pv = pv.ok_or_else(|| CliError::Config("missing prices (set --prices, --from or config `prices`)".into()))?;
            evaluate(&spec, &pv, &output, out)
        }
        Command::Simulate {
            system,
            prices,
            seed,
            horizon,
            replications,
            service,
            output,
        } => {
            let (spec, pv, cfg) = resolve_priced(&system, &prices)?;
            let pv = match pv {
                Some(p) => p,
                None => PriceVector::new(optimal(&spec, precision_of(None, &cfg)?)?.prices)?,
            };
            let sim = SimConfig::new(spec, pv)
                .with_horizon(horizon)
                .with_replications(replications)
                .with_seed(seed.or(cfg.seed).unwrap_or(0))
                .with_service_law(service.into());
            simulate_cmd(&sim, &output, out)
        }
        Command::Sweep {
            system,
            vary,
            grid,
            precision,
            output,
        } => {
            let (spec, cfg) = system_and_config(&system)?;
            let grid = grid
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|_| CliError::Config(format!("--grid: `{s}` is not a number"))))
                .collect::<Result<Vec<_>, _>>()?;
            sweep(&spec, vary.into(), &grid, precision_of(precision, &cfg)?, &output, out)
        }
        Command::Compare { system, precision, output } => {
            let (spec, cfg) = system_and_config(&system)?;
            compare(&spec, precision_of(precision, &cfg)?, &output, out)
        }
        Command::Figure { id, out: path } => {
            let table = figures::figure(&id)?;
            emit_csv(&table, path.as_deref(), out)?;
            Ok(format!("figure {id}: CSV written{}", describe_target(path.as_deref())))
        }
    }
}

fn describe_target(p: Option<&Path>) -> String {
    p.map(|p| format!(" to {}", p.display())).unwrap_or_default()
}

fn system_and_config(args: &SystemArgs) -> Result<(SystemSpec, ConfigFile), CliError> {
    let cfg = load_config(args.config.as_deref())?;
    let spec = resolve_system(args, &cfg.system)?;
    Ok((spec, cfg))
}

fn precision_of(flag: Option<f64>, cfg: &ConfigFile) -> Result<f64, CliError> {
    let p = flag.or(cfg.precision).unwrap_or(THETA_PRECISION);
    if p.is_finite() && p > 0.0 {
        Ok(p)
    } else {
        Err(CliError::Config(format!("precision: must be finite and > 0, got {p}")))
    }
}

fn describe(spec: &SystemSpec) -> String {
    format!("K={}, lambda={}, mu={}", spec.servers, spec.arrival_rate(), spec.service_rate)
}

/// Optimal policy from whichever solver fits the arrival law.
pub struct Optimal {
    pub theta_star: f64,
    pub prices: Vec<f64>,
    pub deltas: Vec<f64>,
    pub detail: Value,
}

pub fn optimal(spec: &SystemSpec, precision: f64) -> Result<Optimal, CliError> {
    if spec.is_poisson() {
        let r = fixed_point(spec, precision)?;
        Ok(Optimal {
            theta_star: r.theta_star,
            prices: r.prices.clone(),
            deltas: r.deltas.clone(),
            detail: serde_json::to_value(&r).expect("serializable"),
        })
    } else {
        let r = solve_general(spec, precision)?;
        Ok(Optimal {
            theta_star: r.theta_star,
            prices: r.prices.clone(),
            deltas: r.deltas.clone(),
            detail: serde_json::to_value(&r).expect("serializable"),
        })
    }
}

pub fn occupancy(spec: &SystemSpec, prices: &PriceVector) -> Result<OccupancyDist, CliError> {
    if spec.is_poisson() {
        Ok(occupancy_poisson(spec, prices)?)
    } else {
        let dep = DepartureMatrix::build(&spec.arrival, spec.service_rate, spec.servers, farm_pricer::arrival::QUAD_TOL)?;
        Ok(occupancy_general(spec, &dep, prices)?)
    }
}

/// Revenue rate of `prices` computed the same way `evaluate` does, so that
/// emitted files re-evaluate to exactly the stored figure.
fn analytic_revenue(spec: &SystemSpec, prices: &PriceVector) -> Result<f64, CliError> {
    let occ = occupancy(spec, prices)?;
    Ok(revenue_from_occupancy(spec, &occ, prices))
}

fn with_common(mut detail: Value, spec: &SystemSpec, prices: &PriceVector, revenue: f64) -> Value {
    let obj = detail.as_object_mut().expect("object");
    obj.insert("system".into(), json!(spec));
    obj.insert("prices".into(), json!(prices));
    obj.insert("revenue_rate".into(), json!(revenue));
    detail
}

fn price_table(prices: &[f64], extra: &[(&str, &[f64])]) -> Table {
    let mut header = vec!["state".to_string(), "price".to_string()];
    header.extend(extra.iter().map(|(h, _)| h.to_string()));
    let mut t = Table::new(header);
    for (k, p) in prices.iter().enumerate() {
        let mut row = vec![k.to_string(), num(*p)];
        row.extend(extra.iter().map(|(_, col)| num(col[k])));
        t.push(row);
    }
    t
}

fn solve_poisson(args: &SystemArgs, precision: Option<f64>, o: &OutputArgs, out: &mut dyn Write) -> Result<String, CliError> {
    let (spec, cfg) = system_and_config(args)?;
    if !spec.is_poisson() {
        return Err(CliError::Config("solve-poisson needs exponential arrivals; use solve-general".into()));
    }
    let r = fixed_point(&spec, precision_of(precision, &cfg)?)?;
    let prices = PriceVector::new(r.prices.clone())?;
    match o.format {
        Format::Json => {
            let rev = analytic_revenue(&spec, &prices)?;
            let v = with_common(serde_json::to_value(&r).expect("serializable"), &spec, &prices, rev);
            emit_json(&v, o.out.as_deref(), out)?;
        }
        Format::Csv => emit_csv(&price_table(&r.prices, &[("delta", &r.deltas)]), o.out.as_deref(), out)?,
    }
    Ok(format!("optimal revenue rate {:.6} ({}, {} iterations)", r.theta_star, describe(&spec), r.iterations))
}

fn solve_general_cmd(args: &SystemArgs, precision: Option<f64>, o: &OutputArgs, out: &mut dyn Write) -> Result<String, CliError> {
    let (spec, cfg) = system_and_config(args)?;
    let r = solve_general(&spec, precision_of(precision, &cfg)?)?;
    let prices = PriceVector::new(r.prices.clone())?;
    match o.format {
        Format::Json => {
            let rev = analytic_revenue(&spec, &prices)?;
            let v = with_common(serde_json::to_value(&r).expect("serializable"), &spec, &prices, rev);
            emit_json(&v, o.out.as_deref(), out)?;
        }
        Format::Csv => emit_csv(
            &price_table(&r.prices, &[("b", &r.b_vals), ("delta", &r.deltas)]),
            o.out.as_deref(),
            out,
        )?,
    }
    let warn = if r.multiple_roots { "; several roots, smallest reported" } else { "" };
    Ok(format!("optimal revenue rate {:.6} ({}{warn})", r.theta_star, describe(&spec)))
}

fn uniform(args: &SystemArgs, o: &OutputArgs, out: &mut dyn Write) -> Result<String, CliError> {
    let (spec, _) = system_and_config(args)?;
    let r = optimize_uniform(&spec)?;
    let bound = gap_bound(&spec)?;
    match o.format {
        Format::Json => {
            let prices = PriceVector::uniform(spec.servers, r.p_star_k)?;
            let rev = analytic_revenue(&spec, &prices)?;
            let mut v = with_common(serde_json::to_value(r).expect("serializable"), &spec, &prices, rev);
            v["optimal_bounds"] = json!(bound);
            emit_json(&v, o.out.as_deref(), out)?;
        }
        Format::Csv => {
            let mut t = Table::new([
                "p_star_k",
                "revenue_k",
                "blocking_k",
                "p_star_inf",
                "revenue_at_p_inf",
                "blocking_at_p_inf",
                "revenue_inf_bound",
                "optimal_upper",
            ]);
            t.push(
                [
                    r.p_star_k,
                    r.revenue_k,
                    r.blocking_k,
                    r.p_star_inf,
                    r.revenue_at_p_inf,
                    r.blocking_at_p_inf,
                    r.revenue_inf_bound,
                    bound.upper,
                ]
                .map(num)
                .to_vec(),
            );
            emit_csv(&t, o.out.as_deref(), out)?;
        }
    }
    Ok(format!(
        "best uniform price {:.6} earns {:.6} ({})",
        r.p_star_k,
        r.revenue_k,
        describe(&spec)
    ))
}

fn evaluate(spec: &SystemSpec, prices: &PriceVector, o: &OutputArgs, out: &mut dyn Write) -> Result<String, CliError> {
    let occ = occupancy(spec, prices)?;
    let rev = revenue_from_occupancy(spec, &occ, prices);
    match o.format {
        Format::Json => {
            let v = json!({
                "system": spec,
                "prices": prices,
                "revenue_rate": rev,
                "blocking": occ.blocking(),
                "occupancy": occ.pi,
                "occupancy_view": occ.view,
            });
            emit_json(&v, o.out.as_deref(), out)?;
        }
        Format::Csv => {
            let mut t = Table::new(["state", "price", "occupancy"]);
            for (k, pi) in occ.pi.iter().enumerate() {
                t.push(vec![k.to_string(), num(prices.price(k)), num(*pi)]);
            }
            emit_csv(&t, o.out.as_deref(), out)?;
        }
    }
    Ok(format!("revenue rate {rev:.6}, blocking {:.6} ({})", occ.blocking(), describe(spec)))
}

fn simulate_cmd(cfg: &SimConfig, o: &OutputArgs, out: &mut dyn Write) -> Result<String, CliError> {
    let r = simulate(cfg)?;
    match o.format {
        Format::Json => {
            let rev = analytic_revenue(&cfg.spec, &cfg.prices)?;
            let v = json!({
                "system": cfg.spec,
                "prices": cfg.prices,
                "revenue_rate": rev,
                "service_law": cfg.service_law,
                "seed": cfg.seed,
                "horizon_arrivals": cfg.horizon_arrivals,
                "warmup_arrivals": cfg.warmup_arrivals,
                "simulation": r,
            });
            emit_json(&v, o.out.as_deref(), out)?;
        }
        Format::Csv => {
            let mut t = Table::new(["state", "occupancy", "occupancy_se", "accepted_frac", "accepted_frac_ci_half"]);
            for k in 0..r.occupancy_hist.len() {
                let acc = r.accepted_frac_by_state.get(k).copied().unwrap_or(0.0);
                let acc_ci = r.accepted_frac_ci_half.get(k).copied().unwrap_or(0.0);
                t.push(vec![
                    k.to_string(),
                    num(r.occupancy_hist[k]),
                    num(r.occupancy_se[k]),
                    num(acc),
                    num(acc_ci),
                ]);
            }
            emit_csv(&t, o.out.as_deref(), out)?;
        }
    }
    Ok(format!(
        "simulated revenue rate {:.4} +/- {:.4}, blocking {:.4} ({} replications)",
        r.revenue_rate_mean, r.revenue_rate_ci_half, r.blocking_frac, r.replications
    ))
}

fn sweep(
    spec: &SystemSpec,
    vary: mdp_poisson::SweepParam,
    grid: &[f64],
    precision: f64,
    o: &OutputArgs,
    out: &mut dyn Write,
) -> Result<String, CliError> {
    let rows = mdp_poisson::sweep(spec, vary, grid, precision)?;
    match o.format {
        Format::Json => {
            let v = json!({ "system": spec, "vary": vary, "rows": rows });
            emit_json(&v, o.out.as_deref(), out)?;
        }
        Format::Csv => {
            let mut t = Table::new(["param", "theta_star", "ratio", "prices"]);
            for r in &rows {
                let prices: Vec<String> = r.prices.iter().map(|p| num(*p)).collect();
                t.push(vec![num(r.param), num(r.theta_star), num(r.ratio), prices.join(" ")]);
            }
            emit_csv(&t, o.out.as_deref(), out)?;
        }
    }
    let last = rows.last().map(|r| r.theta_star).unwrap_or(f64::NAN);
    Ok(format!("swept {} points; last optimal revenue rate {last:.6}", rows.len()))
}

/// Revenue of the three pricing policies shown side by side in the load
/// comparison: the unlimited-server price, the best uniform price and the
/// optimal state-dependent prices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub p_inf: f64,
    pub revenue_p_inf: f64,
    pub p_uniform: f64,
    pub revenue_uniform: f64,
    pub theta_star: f64,
    pub infinite_server_revenue: f64,
}

pub fn comparison(spec: &SystemSpec, precision: f64) -> Result<(Comparison, Optimal), CliError> {
    let u = optimize_uniform(spec)?;
    let (inf_rev, _) = infinite_servers(spec)?;
    let opt = optimal(spec, precision)?;
    Ok((
        Comparison {
            p_inf: u.p_star_inf,
            revenue_p_inf: u.revenue_at_p_inf,
            p_uniform: u.p_star_k,
            revenue_uniform: u.revenue_k,
            theta_star: opt.theta_star,
            infinite_server_revenue: inf_rev,
        },
        opt,
    ))
}

fn compare(spec: &SystemSpec, precision: f64, o: &OutputArgs, out: &mut dyn Write) -> Result<String, CliError> {
    let (c, opt) = comparison(spec, precision)?;
    match o.format {
        Format::Json => {
            let prices = PriceVector::new(opt.prices.clone())?;
            let rev = analytic_revenue(spec, &prices)?;
            let v = json!({
                "system": spec,
                "prices": prices,
                "revenue_rate": rev,
                "policies": [
                    {"policy": "p_inf", "price": c.p_inf, "revenue_rate": c.revenue_p_inf},
                    {"policy": "uniform", "price": c.p_uniform, "revenue_rate": c.revenue_uniform},
                    {"policy": "optimal", "prices": prices, "revenue_rate": c.theta_star},
                ],
                "infinite_server_revenue": c.infinite_server_revenue,
                "optimal": opt.detail,
            });
            emit_json(&v, o.out.as_deref(), out)?;
        }
        Format::Csv => {
            let mut t = Table::new(["policy", "revenue_rate"]);
            t.push(vec!["p_inf".into(), num(c.revenue_p_inf)]);
            t.push(vec!["uniform".into(), num(c.revenue_uniform)]);
            t.push(vec!["optimal".into(), num(c.theta_star)]);
            emit_csv(&t, o.out.as_deref(), out)?;
        }
    }
    Ok(format!(
        "revenue: p_inf {:.4}, uniform {:.4}, optimal {:.4} ({})",
        c.revenue_p_inf,
        c.revenue_uniform,
        c.theta_star,
        describe(spec)
    ))
}
