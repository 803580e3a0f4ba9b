use std::fs;
use std::path::PathBuf;

use serde::Serialize;
use ucem::experiment::{linspace, UtilityFloor, TABLE_UTILITY};
use ucem::model::{generate_disk_scenario, RadioParams, Scenario, ScenarioFile};

use crate::args::{CommonArgs, ModelChoice};
use crate::CliError;

/// Sweep span around the default floor when none is given.
const DEFAULT_SWEEP: (f64, f64, usize) = (TABLE_UTILITY - 35.0, TABLE_UTILITY + 35.0, 8);

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSource {
    File {
        path: PathBuf,
    },
    Generated {
        n: usize,
        radius_m: f64,
        d_min_m: f64,
        seed: u64,
    },
}

/// Fully resolved run configuration; written next to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub source: ScenarioSource,
    pub nodes: usize,
    pub beta_linear: f64,
    pub floors: Vec<UtilityFloor>,
    pub u_prime_floors: Vec<f64>,
    pub models: ModelChoice,
    pub slots: u64,
    pub sim_seed: u64,
    pub uniform: bool,
    pub death_fraction: f64,
    pub reoptimize: bool,
    pub out: PathBuf,
    pub args: CommonArgs,
    #[serde(skip)]
    pub scenario: Scenario,
}

pub fn parse_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || CliError::usage(format!("--uc-range expects lo:hi:steps, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if steps == 0 {
        return Err(bad());
    }
    Ok(linspace(lo, hi, steps))
}

fn load_scenario(args: &CommonArgs) -> Result<(Scenario, ScenarioSource), CliError> {
    if let Some(path) = &args.scenario {
        let text = fs::read_to_string(path)?;
        let file = ScenarioFile::from_json(&text)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let s = file.into_scenario()?;
        return Ok((s, ScenarioSource::File { path: path.clone() }));
    }
    let radio = RadioParams::with_beta_db(
        args.power_w,
        args.beta_db,
        args.slot_s,
        args.bits,
        args.battery_j,
    )?;
    let s = generate_disk_scenario(args.n, args.radius, args.d_min, radio, args.seed)?;
    Ok((
        s,
        ScenarioSource::Generated {
            n: args.n,
            radius_m: args.radius,
            d_min_m: args.d_min,
            seed: args.seed,
        },
    ))
}

impl ExperimentConfig {
    /// `sweep` selects the default floors when none are given on the command line.
    pub fn resolve(command: &str, args: &CommonArgs, sweep: bool) -> Result<Self, CliError> {
        if args.slots == 0 {
            return Err(CliError::usage("--slots must be at least 1"));
        }
        let (scenario, source) = load_scenario(args)?;
        let mut values = args.uc.clone();
        if let Some(r) = &args.uc_range {
            values.extend(parse_range(r)?);
        }
        if values.is_empty() {
            values = if sweep {
                let (lo, hi, n) = DEFAULT_SWEEP;
                linspace(lo, hi, n)
            } else {
                vec![TABLE_UTILITY]
            };
        }
        values.sort_by(f64::total_cmp);
        let floors: Vec<UtilityFloor> = values
            .iter()
            .map(|&v| {
                if args.u_prime {
                    UtilityFloor::Prime(v)
                } else {
                    UtilityFloor::Rate(v)
                }
            })
            .collect();
        let u_prime_floors = floors
            .iter()
            .map(|f| f.to_prime(scenario.len(), &scenario.radio))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ExperimentConfig {
            command: command.to_string(),
            source,
            nodes: scenario.len(),
            beta_linear: scenario.radio.beta,
            floors,
            u_prime_floors,
            models: args.model,
            slots: args.slots,
            sim_seed: args.sim_seed.unwrap_or(scenario.seed),
            uniform: args.uniform,
            death_fraction: args.death_fraction,
            reoptimize: args.reoptimize,
            out: args.out.clone(),
            args: args.clone(),
            scenario,
        })
    }

    /// The floor single-point commands use.
    pub fn first_floor(&self) -> UtilityFloor {
        self.floors[0]
    }
}
